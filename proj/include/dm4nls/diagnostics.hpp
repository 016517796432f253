#pragma once

// Conserved quantities, identity residuals, admissible exponent pairs,
// mixed space-time norms and empirical constants for the functional
// inequalities that control the nonlinearity.

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dm4nls/dispersion.hpp"
#include "dm4nls/hartree.hpp"
#include "dm4nls/parallel.hpp"
#include "dm4nls/propagator.hpp"
#include "dm4nls/spectral_grid.hpp"

namespace dm4nls {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// E = -beta ||Lap u||^2 + alpha ||grad u||^2 - (theta/2) int V(u) |u|^2.
// Conserved by the flow when alpha and beta are constant.
inline double energy(const Field& u, double alpha, double beta, double theta, const Nonlinearity& nl) {
    double e = -beta * laplacian_l2_squared(u) + alpha * grad_l2_squared(u);
    if (theta != 0.0) e -= 0.5 * theta * nl.quartic(u);
    return e;
}

struct DiagnosticsRecord {
    double t = 0.0;
    double mass = 0.0;  // ||u||_{L^2}
    std::optional<double> energy;
    double grad_l2 = 0.0;
    std::map<double, double> hs_norms;
    double potential_max = 0.0;
};

// Energy is reported only where the schedule is piecewise constant, using the
// coefficients of the piece that contains t (right-closed pieces).
inline DiagnosticsRecord make_record(const Field& u, double t, const DispersionSchedule& sched,
                                     const Nonlinearity& nl) {
    DiagnosticsRecord r;
    r.t = t;
    r.mass = l2_norm(u);
    r.grad_l2 = std::sqrt(grad_l2_squared(u));
    r.hs_norms[1.0] = sobolev_norm(u, 1.0);
    r.hs_norms[2.0] = sobolev_norm(u, 2.0);
    const auto V = nl.potential(u);
    for (double v : V) r.potential_max = std::max(r.potential_max, std::abs(v));
    if (sched.is_piecewise_constant()) {
        const auto [a, b] = sched.evaluate(t);
        r.energy = energy(u, a, b, nl.theta(), nl);
    }
    return r;
}

namespace detail {

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double hs_or_nan(const DiagnosticsRecord& r, double s) {
    auto it = r.hs_norms.find(s);
    return it == r.hs_norms.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

}  // namespace detail

inline const char* kDiagnosticsColumns = "t,mass,energy,grad_l2,h1,h2,potential_max";

inline std::string to_csv_row(const DiagnosticsRecord& r) {
    using detail::format_real;
    std::string row = format_real(r.t) + "," + format_real(r.mass) + ",";
    if (r.energy) row += format_real(*r.energy);
    row += "," + format_real(r.grad_l2) + "," + format_real(detail::hs_or_nan(r, 1.0)) + "," +
           format_real(detail::hs_or_nan(r, 2.0)) + "," + format_real(r.potential_max);
    return row;
}

inline nlohmann::json to_json(const DiagnosticsRecord& r) {
    nlohmann::json j;
    j["t"] = r.t;
    j["mass"] = r.mass;
    j["energy"] = r.energy ? nlohmann::json(*r.energy) : nlohmann::json(nullptr);
    j["grad_l2"] = r.grad_l2;
    j["h1"] = detail::hs_or_nan(r, 1.0);
    j["h2"] = detail::hs_or_nan(r, 2.0);
    j["potential_max"] = r.potential_max;
    return j;
}

// '#'-prefixed metadata lines, the column header, then one row per record.
inline std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& records,
                                   const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
    std::ostringstream out;
    for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << "\n";
    out << kDiagnosticsColumns << "\n";
    for (const auto& r : records) out << to_csv_row(r) << "\n";
    return out.str();
}

inline std::string diagnostics_jsonl(const std::vector<DiagnosticsRecord>& records) {
    std::string out;
    for (const auto& r : records) out += to_json(r).dump() + "\n";
    return out;
}

// ---- gradient identity --------------------------------------------------

// d/dt ||grad u||^2 = -2 theta Im int grad(V u) . grad(conj u), physical quadrature.
inline double grad_identity_rhs(const Field& u, const Nonlinearity& nl) {
    if (nl.theta() == 0.0) return 0.0;
    const Field w = nl.apply(u);
    const double cell = std::pow(u.spec().h(), u.spec().n);
    double im = 0.0;
    for (int a = 0; a < u.spec().n; ++a) {
        const Field dw = spectral_derivative(w, a);
        const Field du = spectral_derivative(u, a);
        for (std::size_t i = 0; i < u.size(); ++i) im += (dw.samples()[i] * std::conj(du.samples()[i])).imag();
    }
    return -2.0 * nl.theta() * im * cell;
}

// Same right-hand side through sum |xi|^2 (Vu)^(xi) conj(u^(xi)).
inline double grad_identity_rhs_spectral(const Field& u, const Nonlinearity& nl) {
    if (nl.theta() == 0.0) return 0.0;
    const cvector cw = nl.apply(u).spectrum();
    const cvector cu = u.spectrum();
    const auto k2 = u.grid()->k2();
    double im = 0.0;
    for (std::size_t i = 0; i < cu.size(); ++i) im += k2[i] * (cw[i] * std::conj(cu[i])).imag();
    return -2.0 * nl.theta() * im;
}

// |centered difference of ||grad u||^2 - rhs at the middle snapshot| for a
// window of three snapshots spaced dt apart.
inline double grad_identity_residual(std::span<const Field> window, double dt, const Nonlinearity& nl) {
    detail::require(window.size() >= 3, "grad_identity_residual: need three consecutive snapshots");
    detail::require(dt > 0.0, "grad_identity_residual: dt must be > 0");
    const double lhs = (grad_l2_squared(window[2]) - grad_l2_squared(window[0])) / (2.0 * dt);
    return std::abs(lhs - grad_identity_rhs(window[1], nl));
}

// ---- admissible pairs ---------------------------------------------------

// Spatial exponent p and time exponent q with 4/q = n (1/2 - 1/p).
struct AdmissiblePair {
    double p = 2.0;
    double q = kInf;
    int n = 1;

    static void check_p_range(double p, int n) {
        detail::require(n >= 1, "admissible pair: dimension n must be >= 1");
        detail::require(p >= 2.0, "admissible pair: p must be >= 2 (got " + detail::format_real(p) + ")");
        if (n >= 5) {
            const double upper = 2.0 * n / (n - 4.0);
            detail::require(p < upper, "admissible pair: p must be < 2n/(n-4) = " + detail::format_real(upper) +
                                           " for n >= 5 (got " + detail::format_real(p) + ")");
        } else if (n == 4) {
            detail::require(std::isfinite(p), "admissible pair: p must be finite for n = 4");
        }
    }

    double relation_residual() const {
        const double lhs = std::isinf(q) ? 0.0 : 4.0 / q;
        const double rhs = n * (0.5 - (std::isinf(p) ? 0.0 : 1.0 / p));
        return std::abs(lhs - rhs);
    }

    static AdmissiblePair validated(double p, double q, int n) {
        check_p_range(p, n);
        AdmissiblePair pair{p, q, n};
        detail::require(pair.relation_residual() <= 1e-12,
                        "admissible pair: 4/q = n(1/2 - 1/p) violated by " + detail::format_real(pair.relation_residual()));
        return pair;
    }
};

inline double admissible_q(double p, int n) {
    AdmissiblePair::check_p_range(p, n);
    if (p == 2.0) return kInf;
    const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
    return 4.0 / (n * (0.5 - inv_p));
}

inline AdmissiblePair make_admissible(double p, int n) { return AdmissiblePair::validated(p, admissible_q(p, n), n); }

// Pair used for the Hartree problem below the H^{lambda/2} threshold:
// (q, p) = (12/(lambda - 2s), 6n/(3n + 4s - 2 lambda)), max{0, lambda/2 - 2} <= s < lambda/2.
inline AdmissiblePair hartree_local_pair(double s, double lambda, int n) {
    detail::require(lambda > 0.0 && lambda < n, "hartree_local_pair: need 0 < lambda < n");
    detail::require(s >= std::max(0.0, 0.5 * lambda - 2.0) && s < 0.5 * lambda,
                    "hartree_local_pair: need max{0, lambda/2 - 2} <= s < lambda/2");
    return AdmissiblePair::validated(6.0 * n / (3.0 * n + 4.0 * s - 2.0 * lambda), 12.0 / (lambda - 2.0 * s), n);
}

// Pair used for the cubic problem: (q, p) = (12/(n - 2s), 6n/(n + 4s)), max{0, n/2 - 2} <= s < n/2.
inline AdmissiblePair cubic_local_pair(double s, int n) {
    detail::require(n >= 1, "cubic_local_pair: need n >= 1");
    detail::require(s >= std::max(0.0, 0.5 * n - 2.0) && s < 0.5 * n, "cubic_local_pair: need max{0, n/2 - 2} <= s < n/2");
    return AdmissiblePair::validated(6.0 * n / (n + 4.0 * s), 12.0 / (n - 2.0 * s), n);
}

// ---- mixed norms and Strichartz constants ---------------------------------

// L^q over time samples (trapezoid) of per-snapshot spatial norms; sup when q = inf.
inline double mixed_norm(std::span<const double> times, std::span<const double> spatial, double q) {
    detail::require(times.size() == spatial.size() && times.size() >= 2, "mixed_norm: need >= 2 matching samples");
    if (std::isinf(q)) {
        double m = 0.0;
        for (double v : spatial) m = std::max(m, v);
        return m;
    }
    double sum = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i)
        sum += 0.5 * (times[i] - times[i - 1]) * (std::pow(spatial[i], q) + std::pow(spatial[i - 1], q));
    return std::pow(std::abs(sum), 1.0 / q);
}

struct StrichartzSample {
    AdmissiblePair pair;
    double a = 0.0;
    double b = 0.0;
    double mixed_norm = 0.0;
    double l2_of_data = 0.0;
    double ratio = 0.0;
};

struct StrichartzOptions {
    GridSpec grid{};
    int max_mode = 32;
    std::size_t time_samples = 64;
};

// Max over an ensemble of band-limited data of ||U(., a) f||_{L^q_t L^p_x((a,b])} / ||f||_{L^2}.
inline StrichartzSample strichartz_constant(const DispersionSchedule& sched, const AdmissiblePair& pair, double a,
                                            double b, std::size_t ensemble, std::uint64_t seed,
                                            const StrichartzOptions& opts = {}) {
    AdmissiblePair::validated(pair.p, pair.q, pair.n);
    detail::require(pair.n == opts.grid.n, "strichartz_constant: pair dimension differs from grid dimension");
    detail::require(a < b, "strichartz_constant: need a < b");
    detail::require(ensemble >= 1 && opts.time_samples >= 2, "strichartz_constant: empty ensemble or time grid");
    detail::require(sched.breakpoints(a, b).empty(),
                    "strichartz_constant: interval must lie inside one constancy piece of the schedule");

    std::vector<double> times(opts.time_samples + 1);
    for (std::size_t j = 0; j < times.size(); ++j)
        times[j] = a + (b - a) * static_cast<double>(j) / static_cast<double>(opts.time_samples);

    std::vector<StrichartzSample> samples(ensemble);
    parallel_for(ensemble, [&](std::size_t e) {
        const Field f = random_band_limited(opts.grid, opts.max_mode, seed + e);
        std::vector<double> spatial(times.size());
        for (std::size_t j = 0; j < times.size(); ++j) spatial[j] = lp_norm(apply(f, sched, a, times[j]), pair.p);
        StrichartzSample s{pair, a, b, mixed_norm(times, spatial, pair.q), l2_norm(f), 0.0};
        s.ratio = s.mixed_norm / s.l2_of_data;
        samples[e] = s;
    });
    StrichartzSample best = samples.front();
    for (const auto& s : samples)
        if (s.ratio > best.ratio) best = s;
    return best;
}

// ---- inequality ratios ----------------------------------------------------

// max |K * |f|^2| / ||f||^2_{Hdot^{lambda/2}}.
inline double hardy_ratio(const Field& f, const RieszKernel& K) {
    const double hom = sobolev_norm(f, 0.5 * K.lambda(), true);
    detail::require(hom > 0.0, "hardy_ratio: homogeneous norm vanishes (constant field)");
    const auto V = potential_values(f, K);
    double vmax = 0.0;
    for (double v : V) vmax = std::max(vmax, std::abs(v));
    return vmax / (hom * hom);
}

// int (K*|u|^2)|u|^2 / (||grad u||^lambda ||u||^{4-lambda}).
inline double gn_ratio(const Field& u, const RieszKernel& K) {
    const double grad = std::sqrt(grad_l2_squared(u));
    detail::require(grad > 0.0, "gn_ratio: gradient norm vanishes");
    const double lam = K.lambda();
    return hartree_energy_term(u, K) / (std::pow(grad, lam) * std::pow(l2_norm(u), 4.0 - lam));
}

// |int f (K * g)| / (||f||_{L^r} ||g||_{L^l}) with 1/r + 1/l + lambda/n = 2.
inline double hls_ratio(const Field& f, const Field& g, const RieszKernel& K, double r, double l) {
    detail::require(r > 1.0 && l > 1.0, "hls_ratio: need r, l > 1");
    const int n = K.grid()->dim();
    const double defect = 1.0 / r + 1.0 / l + K.lambda() / n - 2.0;
    detail::require(std::abs(defect) <= 1e-12, "hls_ratio: exponent relation 1/r + 1/l + lambda/n = 2 violated by " +
                                                   detail::format_real(defect));
    Field::check_same_grid(f, g);
    const cvector Kg = K.convolve(g.samples());
    complex pairing{0.0, 0.0};
    for (std::size_t i = 0; i < Kg.size(); ++i) pairing += f.samples()[i] * Kg[i];
    pairing *= std::pow(f.spec().h(), f.spec().n);
    return std::abs(pairing) / (lp_norm(f, r) * lp_norm(g, l));
}

}  // namespace dm4nls
