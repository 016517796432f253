#pragma once

// Time profiles alpha(t), beta(t) of the second- and fourth-order dispersion,
// their cumulative integrals, discontinuity times, and mean/fluctuation split.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dm4nls/error.hpp"

namespace dm4nls {

// A(t,r) = int_r^t alpha, B(t,r) = int_r^t beta.
struct CumulativeDispersion {
    double A = 0.0;
    double B = 0.0;
    double r = 0.0;
    double t = 0.0;
};

struct AveragedCoefficients {
    double m_alpha = 0.0;
    double m_beta = 0.0;
};

class DispersionSchedule;
using SchedulePtr = std::shared_ptr<const DispersionSchedule>;

struct ConstantDispersion {
    double alpha = 0.0;
    double beta = 0.0;
};

// alpha = alpha_plus on (0, t_plus], -alpha_minus on (t_plus - T1, 0], period T1;
// beta likewise with tau_plus, T2. Right-closed pieces.
struct PiecewisePeriodicDispersion {
    double alpha_plus = 1.0;
    double alpha_minus = 1.0;
    double t_plus = 0.5;
    double T1 = 1.0;
    double beta_plus = 1.0;
    double beta_minus = 1.0;
    double tau_plus = 0.5;
    double T2 = 1.0;
};

// Tabulated profiles with piecewise-cubic Hermite interpolation
// (finite-difference slopes). With a declared period the table must cover
// exactly one period starting at t.front() and evaluation wraps.
struct SampledDispersion {
    std::vector<double> t;
    std::vector<double> alpha;
    std::vector<double> beta;
    bool beta_nonvanishing = false;
    std::optional<double> period;
};

// alpha_eps(t) = alpha(t / epsilon).
struct ScaledDispersion {
    SchedulePtr base;
    double epsilon = 1.0;
};

// alpha(t) - alpha_shift, beta(t) - beta_shift; used for zero-mean fluctuations.
struct ShiftedDispersion {
    SchedulePtr base;
    double alpha_shift = 0.0;
    double beta_shift = 0.0;
};

namespace detail {

struct HermiteTable {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> slope;
    std::vector<double> prefix;  // int_{t0}^{t_i}

    HermiteTable() = default;
    HermiteTable(std::vector<double> times, std::vector<double> values) : t(std::move(times)), y(std::move(values)) {
        const std::size_t n = t.size();
        slope.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == 0)
                slope[i] = (y[1] - y[0]) / (t[1] - t[0]);
            else if (i + 1 == n)
                slope[i] = (y[n - 1] - y[n - 2]) / (t[n - 1] - t[n - 2]);
            else
                slope[i] = (y[i + 1] - y[i - 1]) / (t[i + 1] - t[i - 1]);
        }
        prefix.assign(n, 0.0);
        for (std::size_t i = 1; i < n; ++i) prefix[i] = prefix[i - 1] + partial(i - 1, 1.0);
    }

    // int_{t_i}^{t_i + s h_i}, s in [0, 1].
    double partial(std::size_t i, double s) const {
        const double h = t[i + 1] - t[i];
        const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
        const double H00 = 0.5 * s4 - s3 + s;
        const double H10 = 0.25 * s4 - 2.0 * s3 / 3.0 + 0.5 * s2;
        const double H01 = -0.5 * s4 + s3;
        const double H11 = 0.25 * s4 - s3 / 3.0;
        return h * (y[i] * H00 + h * slope[i] * H10 + y[i + 1] * H01 + h * slope[i + 1] * H11);
    }

    std::size_t segment(double x) const {
        auto it = std::upper_bound(t.begin(), t.end(), x);
        std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
        return std::min(i, t.size() - 2);
    }

    double value(double x) const {
        const std::size_t i = segment(x);
        const double h = t[i + 1] - t[i];
        const double s = (x - t[i]) / h;
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * y[i] + (s3 - 2 * s2 + s) * h * slope[i] + (-2 * s3 + 3 * s2) * y[i + 1] +
               (s3 - s2) * h * slope[i + 1];
    }

    // int_{t0}^{x} for x inside the table.
    double antiderivative(double x) const {
        const std::size_t i = segment(x);
        return prefix[i] + partial(i, (x - t[i]) / (t[i + 1] - t[i]));
    }
};

}  // namespace detail

class DispersionSchedule {
public:
    using Variant =
        std::variant<ConstantDispersion, PiecewisePeriodicDispersion, SampledDispersion, ScaledDispersion, ShiftedDispersion>;

    static DispersionSchedule constant(double alpha, double beta) {
        detail::require(std::isfinite(alpha) && std::isfinite(beta), "constant schedule: coefficients must be finite");
        return DispersionSchedule(ConstantDispersion{alpha, beta});
    }

    static DispersionSchedule piecewise(const PiecewisePeriodicDispersion& p) {
        detail::require(p.alpha_plus > 0 && p.alpha_minus > 0 && p.beta_plus > 0 && p.beta_minus > 0,
                        "piecewise schedule: alpha_plus, alpha_minus, beta_plus, beta_minus must be > 0");
        detail::require(p.T1 > 0 && p.t_plus > 0 && p.t_plus < p.T1, "piecewise schedule: need 0 < t_plus < T1");
        detail::require(p.T2 > 0 && p.tau_plus > 0 && p.tau_plus < p.T2, "piecewise schedule: need 0 < tau_plus < T2");
        return DispersionSchedule(p);
    }

    static DispersionSchedule sampled(SampledDispersion s) {
        detail::require(s.t.size() >= 2, "sampled schedule: need at least two samples");
        detail::require(s.alpha.size() == s.t.size() && s.beta.size() == s.t.size(),
                        "sampled schedule: t, alpha, beta must have equal length");
        for (std::size_t i = 1; i < s.t.size(); ++i)
            detail::require(s.t[i] > s.t[i - 1], "sampled schedule: times must be strictly increasing");
        for (std::size_t i = 0; i < s.t.size(); ++i)
            detail::require(std::isfinite(s.t[i]) && std::isfinite(s.alpha[i]) && std::isfinite(s.beta[i]),
                            "sampled schedule: non-finite sample");
        if (s.beta_nonvanishing) {
            double m = std::numeric_limits<double>::infinity();
            for (double b : s.beta) m = std::min(m, std::abs(b));
            detail::require(m > 0.0, "sampled schedule: beta_nonvanishing set but some beta sample is 0");
        }
        if (s.period)
            detail::require(std::abs(s.t.back() - s.t.front() - *s.period) <= 1e-12 * std::max(1.0, *s.period),
                            "sampled schedule: declared period must equal the tabulated range");
        DispersionSchedule d(s);
        d.alpha_table_ = detail::HermiteTable(s.t, s.alpha);
        d.beta_table_ = detail::HermiteTable(s.t, s.beta);
        return d;
    }

    // Reads "t,alpha,beta" rows; '#' lines and a non-numeric header are skipped.
    static DispersionSchedule sampled_from_file(const std::string& path, bool beta_nonvanishing,
                                                std::optional<double> period) {
        std::ifstream in(path);
        if (!in) throw ValidationError("schedule.table_path: cannot open '" + path + "'");
        SampledDispersion s;
        s.beta_nonvanishing = beta_nonvanishing;
        s.period = period;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            for (auto& ch : line)
                if (ch == ',') ch = ' ';
            std::istringstream row(line);
            double t, a, b;
            if (!(row >> t >> a >> b)) {
                if (s.t.empty()) continue;
                throw ValidationError("schedule.table_path: malformed row '" + line + "'");
            }
            s.t.push_back(t);
            s.alpha.push_back(a);
            s.beta.push_back(b);
        }
        return sampled(std::move(s));
    }

    static DispersionSchedule scaled(const DispersionSchedule& base, double epsilon) {
        detail::require(std::isfinite(epsilon) && epsilon > 0.0, "scaled schedule: epsilon must be > 0");
        return DispersionSchedule(ScaledDispersion{std::make_shared<const DispersionSchedule>(base), epsilon});
    }

    static DispersionSchedule shifted(const DispersionSchedule& base, double alpha_shift, double beta_shift) {
        return DispersionSchedule(
            ShiftedDispersion{std::make_shared<const DispersionSchedule>(base), alpha_shift, beta_shift});
    }

    const Variant& variant() const { return v_; }

    bool is_constant() const {
        if (std::holds_alternative<ConstantDispersion>(v_)) return true;
        if (auto* s = std::get_if<ScaledDispersion>(&v_)) return s->base->is_constant();
        if (auto* s = std::get_if<ShiftedDispersion>(&v_)) return s->base->is_constant();
        return false;
    }

    // Piecewise constant in time (constant or piecewise periodic, possibly scaled/shifted).
    bool is_piecewise_constant() const {
        if (std::holds_alternative<ConstantDispersion>(v_) || std::holds_alternative<PiecewisePeriodicDispersion>(v_))
            return true;
        if (auto* s = std::get_if<ScaledDispersion>(&v_)) return s->base->is_piecewise_constant();
        if (auto* s = std::get_if<ShiftedDispersion>(&v_)) return s->base->is_piecewise_constant();
        return false;
    }

    double alpha(double t) const { return evaluate(t).first; }
    double beta(double t) const { return evaluate(t).second; }

    // (alpha(t), beta(t)).
    std::pair<double, double> evaluate(double t) const {
        return std::visit(
            [&](const auto& s) -> std::pair<double, double> {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, ConstantDispersion>) {
                    return {s.alpha, s.beta};
                } else if constexpr (std::is_same_v<T, PiecewisePeriodicDispersion>) {
                    return {step_value(t, s.T1, s.t_plus, s.alpha_plus, s.alpha_minus),
                            step_value(t, s.T2, s.tau_plus, s.beta_plus, s.beta_minus)};
                } else if constexpr (std::is_same_v<T, SampledDispersion>) {
                    const double x = table_argument(s, t);
                    return {alpha_table_.value(x), beta_table_.value(x)};
                } else if constexpr (std::is_same_v<T, ScaledDispersion>) {
                    return s.base->evaluate(t / s.epsilon);
                } else {
                    auto [a, b] = s.base->evaluate(t);
                    return {a - s.alpha_shift, b - s.beta_shift};
                }
            },
            v_);
    }

    CumulativeDispersion cumulative(double r, double t) const {
        detail::require(std::isfinite(r) && std::isfinite(t), "cumulative: endpoints must be finite");
        auto [A, B] = integrals(r, t);
        return CumulativeDispersion{A, B, r, t};
    }

    // Discontinuity times of alpha and beta strictly inside (r, t), sorted.
    std::vector<double> breakpoints(double r, double t) const {
        std::vector<double> out;
        if (!(r < t)) return out;
        collect_breakpoints(r, t, out);
        std::sort(out.begin(), out.end());
        std::vector<double> unique;
        for (double b : out) {
            const double tol = 1e-14 * std::max(1.0, std::abs(b));
            if (b <= r + tol || b >= t - tol) continue;
            if (!unique.empty() && b - unique.back() <= tol) continue;
            unique.push_back(b);
        }
        return unique;
    }

    // Smallest length of a constancy piece (infinity when there are no jumps).
    double min_piece_width() const {
        return std::visit(
            [&](const auto& s) -> double {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, PiecewisePeriodicDispersion>) {
                    return std::min({s.t_plus, s.T1 - s.t_plus, s.tau_plus, s.T2 - s.tau_plus});
                } else if constexpr (std::is_same_v<T, ScaledDispersion>) {
                    return s.epsilon * s.base->min_piece_width();
                } else if constexpr (std::is_same_v<T, ShiftedDispersion>) {
                    return s.base->min_piece_width();
                } else {
                    return std::numeric_limits<double>::infinity();
                }
            },
            v_);
    }

private:
    explicit DispersionSchedule(Variant v) : v_(std::move(v)) {}

    // Right-closed step profile with period T: plus on (0, tp], -minus on (tp, T].
    static double step_value(double t, double T, double tp, double plus, double minus) {
        // Same arithmetic as lattice(), so breakpoints land on the piece they close.
        double k = std::ceil(t / T) - 1.0;
        if (t <= k * T) k -= 1.0;
        if (t > (k + 1.0) * T) k += 1.0;
        return t <= k * T + tp ? plus : -minus;
    }

    // int_0^t of the step profile, split into whole periods and a remainder.
    struct PeriodSplit {
        double periods;
        double partial;
    };
    static PeriodSplit step_antiderivative(double t, double T, double tp, double plus, double minus) {
        const double k = std::floor(t / T);
        double tau = t - k * T;
        if (tau < 0.0) tau = 0.0;
        if (tau > T) tau = T;
        const double partial = plus * std::min(tau, tp) - minus * std::max(0.0, tau - tp);
        return {k, partial};
    }

    static double step_integral(double r, double t, double T, double tp, double plus, double minus) {
        const double per_period = plus * tp - minus * (T - tp);
        const auto ft = step_antiderivative(t, T, tp, plus, minus);
        const auto fr = step_antiderivative(r, T, tp, plus, minus);
        return (ft.periods - fr.periods) * per_period + (ft.partial - fr.partial);
    }

    double table_argument(const SampledDispersion& s, double t) const {
        const double t0 = s.t.front(), t1 = s.t.back();
        if (s.period) {
            const double P = *s.period;
            double x = t - P * std::floor((t - t0) / P);
            return std::clamp(x, t0, t1);
        }
        if (t < t0 - 1e-12 * std::max(1.0, std::abs(t0)) || t > t1 + 1e-12 * std::max(1.0, std::abs(t1)))
            throw ValidationError("sampled schedule: evaluation at t=" + std::to_string(t) +
                                  " outside tabulated range [" + std::to_string(t0) + ", " + std::to_string(t1) + "]");
        return std::clamp(t, t0, t1);
    }

    // int_{t0}^{t} of a tabulated profile, periodic extension when declared.
    double table_antiderivative(const SampledDispersion& s, const detail::HermiteTable& table, double t) const {
        if (!s.period) return table.antiderivative(table_argument(s, t));
        const double P = *s.period;
        const double t0 = s.t.front();
        const double k = std::floor((t - t0) / P);
        const double x = std::clamp(t - k * P, t0, s.t.back());
        return k * table.prefix.back() + table.antiderivative(x);
    }

    std::pair<double, double> integrals(double r, double t) const {
        return std::visit(
            [&](const auto& s) -> std::pair<double, double> {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, ConstantDispersion>) {
                    return {s.alpha * (t - r), s.beta * (t - r)};
                } else if constexpr (std::is_same_v<T, PiecewisePeriodicDispersion>) {
                    return {step_integral(r, t, s.T1, s.t_plus, s.alpha_plus, s.alpha_minus),
                            step_integral(r, t, s.T2, s.tau_plus, s.beta_plus, s.beta_minus)};
                } else if constexpr (std::is_same_v<T, SampledDispersion>) {
                    return {table_antiderivative(s, alpha_table_, t) - table_antiderivative(s, alpha_table_, r),
                            table_antiderivative(s, beta_table_, t) - table_antiderivative(s, beta_table_, r)};
                } else if constexpr (std::is_same_v<T, ScaledDispersion>) {
                    auto [A, B] = s.base->integrals(r / s.epsilon, t / s.epsilon);
                    return {s.epsilon * A, s.epsilon * B};
                } else {
                    auto [A, B] = s.base->integrals(r, t);
                    return {A - s.alpha_shift * (t - r), B - s.beta_shift * (t - r)};
                }
            },
            v_);
    }

    static void lattice(double r, double t, double T, double offset, std::vector<double>& out) {
        const double first = std::floor((r - offset) / T);
        const double last = std::ceil((t - offset) / T);
        for (double m = first; m <= last; m += 1.0) {
            const double b = m * T + offset;
            if (b > r && b < t) out.push_back(b);
        }
    }

    void collect_breakpoints(double r, double t, std::vector<double>& out) const {
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, PiecewisePeriodicDispersion>) {
                    lattice(r, t, s.T1, 0.0, out);
                    lattice(r, t, s.T1, s.t_plus, out);
                    lattice(r, t, s.T2, 0.0, out);
                    lattice(r, t, s.T2, s.tau_plus, out);
                } else if constexpr (std::is_same_v<T, ScaledDispersion>) {
                    std::vector<double> base;
                    s.base->collect_breakpoints(r / s.epsilon, t / s.epsilon, base);
                    for (double b : base) out.push_back(b * s.epsilon);
                } else if constexpr (std::is_same_v<T, ShiftedDispersion>) {
                    s.base->collect_breakpoints(r, t, out);
                }
            },
            v_);
    }

    Variant v_;
    detail::HermiteTable alpha_table_;
    detail::HermiteTable beta_table_;
};

inline CumulativeDispersion cumulative(const DispersionSchedule& sched, double r, double t) {
    return sched.cumulative(r, t);
}

inline std::vector<double> breakpoints(const DispersionSchedule& sched, double r, double t) {
    return sched.breakpoints(r, t);
}

// Means m(alpha), m(beta) over one period and the zero-mean fluctuation schedule.
inline std::pair<AveragedCoefficients, DispersionSchedule> mean_and_fluctuation(const DispersionSchedule& sched) {
    return std::visit(
        [&](const auto& s) -> std::pair<AveragedCoefficients, DispersionSchedule> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantDispersion>) {
                return {{s.alpha, s.beta}, DispersionSchedule::constant(0.0, 0.0)};
            } else if constexpr (std::is_same_v<T, PiecewisePeriodicDispersion>) {
                const AveragedCoefficients m{(s.alpha_plus * s.t_plus - s.alpha_minus * (s.T1 - s.t_plus)) / s.T1,
                                             (s.beta_plus * s.tau_plus - s.beta_minus * (s.T2 - s.tau_plus)) / s.T2};
                return {m, DispersionSchedule::shifted(sched, m.m_alpha, m.m_beta)};
            } else if constexpr (std::is_same_v<T, SampledDispersion>) {
                if (!s.period) throw ValidationError("mean_and_fluctuation: sampled schedule has no declared period");
                const double t0 = s.t.front();
                const auto c = sched.cumulative(t0, t0 + *s.period);
                const AveragedCoefficients m{c.A / *s.period, c.B / *s.period};
                return {m, DispersionSchedule::shifted(sched, m.m_alpha, m.m_beta)};
            } else if constexpr (std::is_same_v<T, ScaledDispersion>) {
                auto [m, fluct] = mean_and_fluctuation(*s.base);
                return {m, DispersionSchedule::scaled(fluct, s.epsilon)};
            } else {
                auto [m, fluct] = mean_and_fluctuation(*s.base);
                m.m_alpha -= s.alpha_shift;
                m.m_beta -= s.beta_shift;
                return {m, fluct};
            }
        },
        sched.variant());
}

}  // namespace dm4nls
