#pragma once

// Fast dispersion management: compare the solution under alpha(t/eps),
// beta(t/eps) with the solution under the mean coefficients m(alpha), m(beta).

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dm4nls/diagnostics.hpp"
#include "dm4nls/dispersion.hpp"
#include "dm4nls/integrator.hpp"
#include "dm4nls/parallel.hpp"

namespace dm4nls {

inline DispersionSchedule averaged_problem(const DispersionSchedule& sched) {
    const auto [m, fluct] = mean_and_fluctuation(sched);
    return DispersionSchedule::constant(m.m_alpha, m.m_beta);
}

struct AveragingReport {
    std::vector<double> epsilons;
    std::vector<double> errors;  // sup over snapshot times of ||u_eps - u_avg||_{H^s}
    double s = 2.0;
    double T = 0.5;
    std::optional<double> fitted_rate;
    bool outside_stated_theorem = false;  // Hartree nonlinearity or s <= n/2
};

// Snapshot times on [t0, t0+T] for a given eps: every eps-scaled breakpoint
// and a uniform refinement no coarser than min(dt, 1/64).
inline std::vector<double> averaging_snapshot_times(const DispersionSchedule& sched, double epsilon, double t0,
                                                    double T, double dt) {
    return substep_grid(DispersionSchedule::scaled(sched, epsilon), t0, T, std::min(dt, 1.0 / 64.0));
}

// Largest dt accepted by run_averaging for the given eps list.
inline double averaging_max_dt(const DispersionSchedule& sched, const std::vector<double>& epsilons) {
    double eps_min = kInf;
    for (double e : epsilons) eps_min = std::min(eps_min, e);
    return eps_min * sched.min_piece_width() / 4.0;
}

inline std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 3 || x.size() != y.size()) return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) return std::nullopt;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(x.size());
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) return std::nullopt;
    return (n * sxy - sx * sy) / denom;
}

inline AveragingReport run_averaging(const Field& u0, const DispersionSchedule& sched, const std::vector<double>& eps,
                                     double s, double T, const SolverConfig& cfg, double t0 = 0.0) {
    cfg.validate();
    detail::require(!eps.empty(), "average: eps_list must not be empty");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        detail::require(std::isfinite(eps[i]) && eps[i] > 0.0, "average: eps values must be positive");
        if (i > 0) detail::require(eps[i] < eps[i - 1], "average: eps values must be strictly decreasing");
    }
    detail::require(std::isfinite(s), "average: s must be finite");
    detail::require(std::isfinite(T) && T > 0.0, "average: T must be > 0");
    const double max_dt = averaging_max_dt(sched, eps);
    if (cfg.dt > max_dt)
        throw ValidationError("average: solver.dt = " + detail::format_real(cfg.dt) +
                              " does not resolve the fastest schedule; required dt <= " + detail::format_real(max_dt));

    const DispersionSchedule averaged = averaged_problem(sched);
    const Nonlinearity nl = cfg.make_nonlinearity(u0.grid());

    AveragingReport report;
    report.epsilons = eps;
    report.s = s;
    report.T = T;
    report.outside_stated_theorem = cfg.nonlinearity != NonlinearityKind::cubic || !(s > 0.5 * u0.spec().n);
    report.errors.assign(eps.size(), 0.0);

    auto advance = [&](const Field& u, double a, double b, const DispersionSchedule& sc) {
        if (cfg.method == StepMethod::strang) return step_strang(u, a, b - a, sc, nl);
        return step_picard(u, a, b - a, sc, nl, cfg.picard_max_iter, cfg.picard_tol).first;
    };

    parallel_for(eps.size(), [&](std::size_t i) {
        const DispersionSchedule fast = DispersionSchedule::scaled(sched, eps[i]);
        const auto times = averaging_snapshot_times(sched, eps[i], t0, T, cfg.dt);
        Field u_fast = u0, u_avg = u0;
        double err = 0.0;
        for (std::size_t j = 1; j < times.size(); ++j) {
            u_fast = advance(u_fast, times[j - 1], times[j], fast);
            u_avg = advance(u_avg, times[j - 1], times[j], averaged);
            err = std::max(err, sobolev_norm(u_fast - u_avg, s));
        }
        report.errors[i] = err;
    });
    report.fitted_rate = loglog_slope(report.epsilons, report.errors);
    return report;
}

// Non-increasing along decreasing eps; differences below `floor` count as ties.
inline bool errors_monotone_decreasing(const AveragingReport& r, double floor) {
    for (std::size_t i = 1; i < r.errors.size(); ++i) {
        const bool both_negligible = r.errors[i] <= floor && r.errors[i - 1] <= floor;
        if (!both_negligible && !(r.errors[i] < r.errors[i - 1])) return false;
    }
    return true;
}

inline std::string averaging_csv(const AveragingReport& r,
                                 const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
    using detail::format_real;
    std::ostringstream out;
    for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << "\n";
    out << "# s: " << format_real(r.s) << "\n";
    out << "# T: " << format_real(r.T) << "\n";
    if (r.outside_stated_theorem) out << "# note: outside stated theorem\n";
    out << "epsilon,sup_hs_error,fitted_rate\n";
    for (std::size_t i = 0; i < r.epsilons.size(); ++i) {
        out << format_real(r.epsilons[i]) << "," << format_real(r.errors[i]) << ",";
        if (i + 1 == r.epsilons.size() && r.fitted_rate) out << format_real(*r.fitted_rate);
        out << "\n";
    }
    return out.str();
}

}  // namespace dm4nls
