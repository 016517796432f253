#pragma once

// Time stepping for i u_t + alpha(t) Lap u + beta(t) Lap^2 u + theta V(u) u = 0.
//
// strang: half linear flow, exact nonlinear phase exp(i theta V dt), half
// linear flow. The potential is real, so |u| is frozen during the nonlinear
// substep and both pieces are unimodular multiplications.
//
// picard: fixed-point iteration of the one-step Duhamel map with the midpoint
// rule in the interaction picture,
//   v <- U(t+dt,t) u + i theta dt U(t+dt,m) N(w),
//   w  = (U(m,t) u + U(m,t+dt) v) / 2,  m = t + dt/2.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dm4nls/checkpoint.hpp"
#include "dm4nls/dispersion.hpp"
#include "dm4nls/hartree.hpp"
#include "dm4nls/propagator.hpp"
#include "dm4nls/spectral_grid.hpp"

namespace dm4nls {

enum class StepMethod { strang, picard };

struct SolverConfig {
    double dt = 1e-3;
    StepMethod method = StepMethod::strang;
    int picard_max_iter = 50;
    double picard_tol = 1e-12;
    NonlinearityKind nonlinearity = NonlinearityKind::hartree;
    double lambda = 0.5;
    double theta = 1.0;
    bool dealias = false;

    void validate() const {
        detail::require(std::isfinite(dt) && dt > 0.0, "solver.dt must be > 0");
        detail::require(std::isfinite(picard_tol) && picard_tol > 0.0, "solver.picard_tol must be > 0");
        detail::require(picard_max_iter >= 2, "solver.picard_max_iter must be >= 2");
        detail::require(std::isfinite(theta), "solver.theta must be finite");
    }

    Nonlinearity make_nonlinearity(GridPtr grid) const {
        return Nonlinearity(std::move(grid), nonlinearity, theta, lambda, dealias);
    }
};

struct StepReport {
    std::vector<double> contraction_ratios;
    int substeps_taken = 0;
    int iterations = 0;
    bool converged = true;
    std::vector<double> breakpoints_hit;
};

// Stepper failure carrying the last good state time and, when written, its checkpoint.
class StepAbort : public NumericalError {
public:
    StepAbort(const std::string& what, double last_good_t, std::string checkpoint_path)
        : NumericalError(what), last_good_t_(last_good_t), checkpoint_path_(std::move(checkpoint_path)) {}
    double last_good_t() const { return last_good_t_; }
    const std::string& checkpoint_path() const { return checkpoint_path_; }

private:
    double last_good_t_;
    std::string checkpoint_path_;
};

namespace detail {

inline void require_finite_state(const Field& u, double t) {
    if (!u.is_finite()) throw NumericalError("non-finite state after step ending at t=" + std::to_string(t));
}

}  // namespace detail

inline Field step_strang(const Field& u, double t, double dt, const DispersionSchedule& sched, const Nonlinearity& nl) {
    const double mid = t + 0.5 * dt;
    Field half = apply(u, sched, t, mid);
    if (nl.theta() != 0.0) {
        const auto V = nl.potential(half);
        cvector s = half.samples();
        const double scale = nl.theta() * dt;
        for (std::size_t i = 0; i < s.size(); ++i) s[i] *= std::polar(1.0, scale * V[i]);
        half = Field::from_samples(u.grid(), std::move(s));
        detail::require_finite_state(half, t + dt);
    }
    Field out = apply(half, sched, mid, t + dt);
    detail::require_finite_state(out, t + dt);
    return out;
}

inline Field step_strang(const Field& u, double t, double dt, const DispersionSchedule& sched,
                         const SolverConfig& cfg) {
    return step_strang(u, t, dt, sched, cfg.make_nonlinearity(u.grid()));
}

inline std::pair<Field, StepReport> step_picard(const Field& u, double t, double dt, const DispersionSchedule& sched,
                                                const Nonlinearity& nl, int max_iter, double tol) {
    const double mid = t + 0.5 * dt;
    const double end = t + dt;
    const Field linear_end = apply(u, sched, t, end);
    const Field linear_mid = apply(u, sched, t, mid);
    const double u_norm = l2_norm(u);
    const complex gain{0.0, nl.theta() * dt};

    StepReport report;
    report.substeps_taken = 1;
    report.converged = false;
    Field v = linear_end;
    double previous = -1.0;
    for (int iter = 1; iter <= max_iter; ++iter) {
        cvector w = linear_mid.samples();
        const Field back = apply(v, sched, end, mid);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * (w[i] + back.samples()[i]);
        const Field mid_state = Field::from_samples(u.grid(), std::move(w));

        Field next = linear_end;
        if (nl.theta() != 0.0) {
            const Field forced = nl.apply(mid_state);
            detail::require_finite_state(forced, end);
            const Field duhamel = apply(forced, sched, mid, end);
            cvector s = linear_end.samples();
            for (std::size_t i = 0; i < s.size(); ++i) s[i] += gain * duhamel.samples()[i];
            next = Field::from_samples(u.grid(), std::move(s));
        }
        detail::require_finite_state(next, end);

        const double dist = l2_norm(next - v);
        if (previous > 0.0 && dist > 0.0) report.contraction_ratios.push_back(dist / previous);
        v = std::move(next);
        report.iterations = iter;
        if (dist <= tol * u_norm) {
            report.converged = true;
            break;
        }
        previous = dist;
    }
    if (!report.converged && !report.contraction_ratios.empty() && report.contraction_ratios.back() >= 1.0)
        throw NumericalError("Picard iteration is not contracting (ratio " +
                             std::to_string(report.contraction_ratios.back()) + " at t=" + std::to_string(t) +
                             "); reduce solver.dt to restore the small-step contraction regime");
    return {std::move(v), std::move(report)};
}

inline std::pair<Field, StepReport> step_picard(const Field& u, double t, double dt, const DispersionSchedule& sched,
                                                const SolverConfig& cfg) {
    return step_picard(u, t, dt, sched, cfg.make_nonlinearity(u.grid()), cfg.picard_max_iter, cfg.picard_tol);
}

// Advisory local horizon T0 with T0^{1 - lambda/4} = 1 / (8 C^2 ||u0||^2).
inline double step_horizon(double u0_l2_norm, double lambda, double C = 1.0) {
    detail::require(lambda > 0.0 && lambda < 4.0, "step_horizon: lambda must satisfy 0 < lambda < 4");
    detail::require(C > 0.0, "step_horizon: C must be > 0");
    detail::require(u0_l2_norm > 0.0, "step_horizon: ||u0|| must be > 0");
    return std::pow(8.0 * C * C * u0_l2_norm * u0_l2_norm, -1.0 / (1.0 - 0.25 * lambda));
}

struct Observation {
    double t;
    const Field& state;
    std::size_t substep;
    bool at_breakpoint;
};

struct EvolveOptions {
    std::size_t cadence = 0;  // observe every `cadence` substeps; 0 disables
    bool observe_breakpoints = true;
    std::function<void(const Observation&)> observer;
    std::optional<std::string> abort_checkpoint;  // written with the last good state on failure
};

struct Trajectory {
    Field final_state;
    double t_final = 0.0;
    std::vector<double> substep_endpoints;  // t0 followed by every substep end
    StepReport report;                      // aggregated over all substeps
};

// Substep endpoints for [t0, t0+T]: every breakpoint exactly, pieces refined
// to width <= dt. T < 0 walks backwards in time.
inline std::vector<double> substep_grid(const DispersionSchedule& sched, double t0, double T, double dt,
                                        std::vector<double>* hit = nullptr) {
    const double t1 = t0 + T;
    std::vector<double> knots{t0};
    auto bps = T > 0 ? sched.breakpoints(t0, t1) : sched.breakpoints(t1, t0);
    if (T < 0) std::reverse(bps.begin(), bps.end());
    if (hit) *hit = bps;
    knots.insert(knots.end(), bps.begin(), bps.end());
    knots.push_back(t1);

    std::vector<double> grid{t0};
    for (std::size_t p = 0; p + 1 < knots.size(); ++p) {
        const double a = knots[p], b = knots[p + 1];
        const double len = std::abs(b - a);
        const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(len / dt * (1.0 - 1e-12))));
        for (std::size_t i = 1; i < pieces; ++i)
            grid.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(pieces));
        grid.push_back(b);
    }
    return grid;
}

inline Trajectory evolve(const Field& u0, double t0, double T, const DispersionSchedule& sched,
                         const SolverConfig& cfg, const EvolveOptions& opts = {}) {
    cfg.validate();
    detail::require(std::isfinite(t0) && std::isfinite(T) && T != 0.0, "evolve: horizon T must be finite and nonzero");
    detail::require_finite(u0, "evolve");
    const Nonlinearity nl = cfg.make_nonlinearity(u0.grid());

    Trajectory traj;
    traj.substep_endpoints = substep_grid(sched, t0, T, cfg.dt, &traj.report.breakpoints_hit);
    const auto& grid = traj.substep_endpoints;
    const auto& bps = traj.report.breakpoints_hit;

    Field u = u0;
    if (opts.observer) opts.observer(Observation{t0, u, 0, false});
    std::size_t next_bp = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double a = grid[i - 1], b = grid[i];
        try {
            if (cfg.method == StepMethod::strang) {
                u = step_strang(u, a, b - a, sched, nl);
            } else {
                auto [v, rep] = step_picard(u, a, b - a, sched, nl, cfg.picard_max_iter, cfg.picard_tol);
                u = std::move(v);
                traj.report.contraction_ratios.insert(traj.report.contraction_ratios.end(),
                                                      rep.contraction_ratios.begin(), rep.contraction_ratios.end());
                traj.report.iterations += rep.iterations;
                traj.report.converged = traj.report.converged && rep.converged;
            }
        } catch (const NumericalError& e) {
            std::string path;
            if (opts.abort_checkpoint) {
                path = *opts.abort_checkpoint;
                write_checkpoint(path, u, a);
            }
            throw StepAbort(e.what(), a, path);
        }
        ++traj.report.substeps_taken;
        const bool at_bp = next_bp < bps.size() && b == bps[next_bp];
        if (at_bp) ++next_bp;
        const bool last = i + 1 == grid.size();
        if (opts.observer &&
            (last || (opts.cadence && i % opts.cadence == 0) || (at_bp && opts.observe_breakpoints)))
            opts.observer(Observation{b, u, i, at_bp});
    }
    traj.t_final = grid.back();
    traj.final_state = std::move(u);
    return traj;
}

}  // namespace dm4nls
