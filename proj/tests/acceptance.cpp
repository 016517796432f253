// Runs every acceptance criterion at its stated tolerance; one PASS/FAIL line each.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dm4nls/averaging.hpp"
#include "dm4nls/diagnostics.hpp"
#include "dm4nls/integrator.hpp"
#include "oracles.hpp"

using namespace dm4nls;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

Field gaussian(const GridSpec& spec = GridSpec{}) {
    return Field::sample(SpectralGrid::get(spec),
                         [](std::span<const double> x) { return complex{std::exp(-x[0] * x[0] / 8.0), 0.0}; });
}

DispersionSchedule default_piecewise() {
    PiecewisePeriodicDispersion p;
    p.alpha_plus = 1.0;
    p.alpha_minus = 0.5;
    p.t_plus = 0.5;
    p.T1 = 1.0;
    p.beta_plus = 1.0;
    p.beta_minus = 0.5;
    p.tau_plus = 0.5;
    p.T2 = 1.0;
    return DispersionSchedule::piecewise(p);
}

SolverConfig hartree(double dt, double theta) {
    SolverConfig c;
    c.dt = dt;
    c.theta = theta;
    c.lambda = 0.5;
    return c;
}

Outcome propagator_isometry() {
    const auto sched = default_piecewise();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    double worst = 0.0;
    for (std::uint64_t e = 0; e < 100; ++e) {
        const Field u = random_band_limited(GridSpec{}, 1 + static_cast<int>(e % 120), e);
        const double r = U(rng), t = U(rng);
        const Field v = apply(u, sched, r, t);
        for (double s : {0.0, 1.0, 2.0}) {
            const double a = sobolev_norm(u, s);
            worst = std::max(worst, std::abs(sobolev_norm(v, s) - a) / a);
        }
    }
    return {worst <= 1e-12, "max relative H^s deviation " + fmt(worst) + " <= 1e-12"};
}

Outcome group_law() {
    const auto sched = default_piecewise();
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    double comp = 0.0, inv = 0.0;
    for (std::uint64_t e = 0; e < 100; ++e) {
        const Field u = random_band_limited(GridSpec{}, 1 + static_cast<int>(e % 120), 1000 + e);
        const double r = U(rng), l = U(rng), t = U(rng);
        const double norm = l2_norm(u);
        comp = std::max(comp, compose_check(sched, r, l, t, u) / norm);
        inv = std::max(inv, inverse_check(sched, r, t, u) / norm);
    }
    // (r, t] = (0.3, 0.45] sits in one piece; shifting by 0.25 straddles the jump at 0.5.
    const Field w = random_band_limited(GridSpec{}, 40, 7);
    const double witness = l2_norm(apply(w, sched, 0.55, 0.7) - apply(w, sched, 0.3, 0.45)) / l2_norm(w);
    const bool ok = comp <= 1e-12 && inv <= 1e-12 && witness > 1e-6;
    return {ok, "composition " + fmt(comp) + ", inverse " + fmt(inv) + " <= 1e-12; non-group witness " + fmt(witness) +
                    " > 1e-6"};
}

Outcome mass_conservation() {
    const auto sched = default_piecewise();
    double worst = 0.0;
    for (double theta : {1.0, -1.0}) {
        const Field u0 = gaussian();
        const double m0 = l2_norm(u0);
        EvolveOptions opts;
        opts.cadence = 1;
        opts.observer = [&](const Observation& o) { worst = std::max(worst, std::abs(l2_norm(o.state) - m0) / m0); };
        evolve(u0, 0.0, 1.0, sched, hartree(1e-3, theta), opts);
    }
    return {worst <= 1e-11, "max relative mass drift " + fmt(worst) + " <= 1e-11"};
}

double energy_drift(double dt) {
    const auto sched = DispersionSchedule::constant(1.0, -1.0);
    const SolverConfig cfg = hartree(dt, -1.0);
    const Nonlinearity nl = cfg.make_nonlinearity(SpectralGrid::get(GridSpec{}));
    const Field u0 = gaussian();
    const double e0 = energy(u0, 1.0, -1.0, -1.0, nl);
    double worst = 0.0;
    EvolveOptions opts;
    opts.cadence = 1;
    opts.observer = [&](const Observation& o) {
        worst = std::max(worst, std::abs(energy(o.state, 1.0, -1.0, -1.0, nl) - e0) / std::abs(e0));
    };
    evolve(u0, 0.0, 1.0, sched, cfg, opts);
    return worst;
}

Outcome energy_conservation() {
    const double d1 = energy_drift(1e-3), d2 = energy_drift(5e-4);
    const double factor = d1 / d2;
    const bool ok = std::isfinite(d1) && d1 > 0.0 && factor >= 3.3 && factor <= 4.8;
    return {ok, "drift(1e-3) " + fmt(d1) + ", drift(5e-4) " + fmt(d2) + ", factor " + fmt(factor) + " in [3.3, 4.8]"};
}

double grad_residual(double dt) {
    const auto sched = default_piecewise();
    const SolverConfig cfg = hartree(dt, 1.0);
    const Nonlinearity nl = cfg.make_nonlinearity(SpectralGrid::get(GridSpec{}));
    std::vector<Field> snaps;
    EvolveOptions opts;
    opts.cadence = 1;
    opts.observe_breakpoints = false;
    opts.observer = [&](const Observation& o) { snaps.push_back(o.state); };
    evolve(gaussian(), 0.1, 0.2, sched, cfg, opts);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < snaps.size(); ++i)
        worst = std::max(worst, grad_identity_residual(std::span<const Field>(&snaps[i - 1], 3), dt, nl));
    return worst;
}

Outcome gradient_identity() {
    const double r1 = grad_residual(1e-2), r2 = grad_residual(5e-3);
    const double factor = r1 / r2;
    return {factor >= 3.0 && factor <= 5.0,
            "residual(1e-2) " + fmt(r1) + ", residual(5e-3) " + fmt(r2) + ", factor " + fmt(factor) + " in [3, 5]"};
}

Outcome picard_contraction() {
    const auto sched = default_piecewise();
    const Field u0 = gaussian();
    const double horizon = step_horizon(l2_norm(u0), 0.5, 1.0);
    const double dt = horizon / 10.0;
    SolverConfig cfg = hartree(dt, 1.0);
    cfg.method = StepMethod::picard;
    cfg.picard_tol = 1e-13;
    const double t0 = 0.45, T = 0.1;
    const auto pic = evolve(u0, t0, T, sched, cfg);
    cfg.method = StepMethod::strang;
    const auto str = evolve(u0, t0, T, sched, cfg);
    double max_ratio = 0.0;
    for (double r : pic.report.contraction_ratios) max_ratio = std::max(max_ratio, r);
    const double gap = l2_norm(pic.final_state - str.final_state);
    const bool ok = !pic.report.contraction_ratios.empty() && max_ratio < 0.5 && pic.report.converged &&
                    gap <= 10.0 * dt * dt;
    return {ok, "dt " + fmt(dt) + " (horizon " + fmt(horizon) + "), max ratio " + fmt(max_ratio) +
                    " < 0.5, |picard - strang| " + fmt(gap) + " <= " + fmt(10.0 * dt * dt)};
}

Outcome gluing() {
    const auto sched = default_piecewise();
    const double dt = 1e-3, t0 = 0.0, T = 2.0;
    std::vector<double> times;
    std::vector<Field> states;
    EvolveOptions opts;
    opts.cadence = 1;
    opts.observer = [&](const Observation& o) {
        if (!times.empty() && times.back() == o.t) return;
        times.push_back(o.t);
        states.push_back(o.state);
    };
    const auto traj = evolve(gaussian(), t0, T, sched, hartree(dt, 1.0), opts);
    const auto bps = sched.breakpoints(t0, t0 + T);
    bool all_present = bps == traj.report.breakpoints_hit;
    for (double b : bps)
        all_present = all_present && std::find(traj.substep_endpoints.begin(), traj.substep_endpoints.end(), b) !=
                                         traj.substep_endpoints.end();

    auto touches_bp = [&](std::size_t i) {
        for (double b : bps)
            if (times[i - 1] == b || times[i] == b) return true;
        return false;
    };
    double interior = 0.0, at_bp = 0.0;
    for (std::size_t i = 1; i < states.size(); ++i) {
        const double inc = l2_norm(states[i] - states[i - 1]);
        if (touches_bp(i)) at_bp = std::max(at_bp, inc);
        else interior = std::max(interior, inc);
    }
    const bool ok = all_present && !bps.empty() && at_bp <= 3.0 * interior;
    return {ok, std::to_string(bps.size()) + " breakpoints present exactly: " + (all_present ? "yes" : "no") +
                    "; max increment at breakpoints " + fmt(at_bp) + " <= 3 x " + fmt(interior)};
}

Outcome averaging() {
    PiecewisePeriodicDispersion p;
    p.alpha_plus = 1.0;
    p.alpha_minus = 0.5;
    p.beta_plus = 1.0;
    p.beta_minus = 0.5;
    const auto base = DispersionSchedule::piecewise(p);
    const auto [m, fluct] = mean_and_fluctuation(base);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.theta = 1.0;
    cfg.nonlinearity = NonlinearityKind::cubic;
    const std::vector<double> eps{0.1, 0.05, 0.025};
    const auto rep = run_averaging(gaussian(), base, eps, 2.0, 0.5, cfg);
    const bool decreasing = rep.errors[1] < rep.errors[0] && rep.errors[2] < rep.errors[1];
    const bool halved = rep.errors[2] <= rep.errors[0] / 2.0;

    // Linear variant against per-mode phases built from piecewise sums.
    cfg.theta = 0.0;
    const Field u0 = random_band_limited(GridSpec{}, 24, 5);
    const auto lin = run_averaging(u0, base, eps, 2.0, 0.5, cfg);
    const cvector c = u0.spectrum();
    const auto k2 = u0.grid()->k2();
    double oracle_gap = 0.0;
    for (std::size_t e = 0; e < eps.size(); ++e) {
        const auto fast = DispersionSchedule::scaled(base, eps[e]);
        double sup = 0.0;
        for (double t : averaging_snapshot_times(base, eps[e], 0.0, 0.5, cfg.dt)) {
            const auto jumps = fast.breakpoints(0.0, t);
            const double dA = oracle::piecewise_integral([&](double x) { return fast.alpha(x); }, 0.0, t, jumps) -
                              m.m_alpha * t;
            const double dB = oracle::piecewise_integral([&](double x) { return fast.beta(x); }, 0.0, t, jumps) -
                              m.m_beta * t;
            double sum = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i)
                sum += (1.0 + k2[i]) * (1.0 + k2[i]) * std::norm(c[i]) *
                       std::norm(std::polar(1.0, -k2[i] * dA + k2[i] * k2[i] * dB) - 1.0);
            sup = std::max(sup, std::sqrt(sum));
        }
        oracle_gap = std::max(oracle_gap, std::abs(sup - lin.errors[e]));
    }
    const bool ok = decreasing && halved && oracle_gap <= 1e-8 && m.m_beta != 0.0;
    return {ok, "errors " + fmt(rep.errors[0]) + " > " + fmt(rep.errors[1]) + " > " + fmt(rep.errors[2]) +
                    ", err(0.025) <= err(0.1)/2: " + (halved ? "yes" : "no") + "; linear oracle gap " +
                    fmt(oracle_gap) + " <= 1e-8"};
}

Outcome riesz_oracle() {
    const GridSpec spec{1, 32, 16.0 * kPi};
    const double L = spec.L;
    const RieszKernel K(spec, 0.5);
    const Field u = Field::sample(K.grid(), [L](std::span<const double> x) {
        return complex{1.0 + 0.5 * std::cos(kPi * x[0] / L), 0.3 * std::sin(3.0 * kPi * x[0] / L)};
    });
    const auto V = potential_values(u, K);
    const auto ref = oracle::direct_periodized_potential(
        [L](double x) {
            const double re = 1.0 + 0.5 * std::cos(kPi * x / L), im = 0.3 * std::sin(3.0 * kPi * x / L);
            return re * re + im * im;
        },
        spec.N, L, 0.5);
    double diff = 0.0, norm = 0.0, vmax = 0.0;
    for (std::size_t i = 0; i < V.size(); ++i) {
        diff += (V[i] - ref[i]) * (V[i] - ref[i]);
        norm += ref[i] * ref[i];
        vmax = std::max(vmax, std::abs(V[i]));
    }
    const double rel = std::sqrt(diff / norm);

    const auto Vg = potential_values(u.scaled(std::polar(1.0, 0.9)), K);
    const complex c{1.7, -0.6};
    const auto Vs = potential_values(u.scaled(c), K);
    double gauge = 0.0, scaling = 0.0;
    for (std::size_t i = 0; i < V.size(); ++i) {
        gauge = std::max(gauge, std::abs(Vg[i] - V[i]) / vmax);
        scaling = std::max(scaling, std::abs(Vs[i] - std::norm(c) * V[i]) / (std::norm(c) * vmax));
    }
    const bool ok = rel <= 1e-2 && gauge <= 1e-14 && scaling <= 1e-14;
    return {ok, "relative L2 error vs direct quadrature " + fmt(rel) + " <= 1e-2; gauge " + fmt(gauge) +
                    ", scaling " + fmt(scaling) + " <= 1e-14"};
}

Outcome admissible_pairs() {
    std::mt19937_64 rng(1010);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    std::size_t built = 0;
    for (int n = 1; n <= 6; ++n) {
        for (int i = 0; i < 1000; ++i) {
            double p;
            if (n >= 5) p = 2.0 + (2.0 * n / (n - 4.0) - 2.0) * unit(rng) * (1.0 - 1e-9);
            else if (n == 4) p = 2.0 / (1.0 - unit(rng) * (1.0 - 1e-9));
            else p = i == 0 ? kInf : 2.0 / (1.0 - unit(rng) * (1.0 - 1e-9));
            worst = std::max(worst, make_admissible(p, n).relation_residual());
            ++built;
        }
    }
    std::size_t theorem_pairs = 0;
    for (int i = 0; i < 50; ++i) {
        const int n = 1 + static_cast<int>(unit(rng) * 6.0) % 6;
        const double lambda = n * (1e-3 + (1.0 - 2e-3) * unit(rng));
        const double s_lo = std::max(0.0, 0.5 * lambda - 2.0);
        const double s = s_lo + (0.5 * lambda - s_lo) * unit(rng) * (1.0 - 1e-9);
        worst = std::max(worst, hartree_local_pair(s, lambda, n).relation_residual());
        const double c_lo = std::max(0.0, 0.5 * n - 2.0);
        worst = std::max(worst, cubic_local_pair(c_lo + (0.5 * n - c_lo) * unit(rng) * (1.0 - 1e-9), n).relation_residual());
        theorem_pairs += 2;
    }
    return {worst <= 1e-12, std::to_string(built) + " constructed and " + std::to_string(theorem_pairs) +
                                " theorem pairs, max |4/q - n(1/2 - 1/p)| " + fmt(worst) + " <= 1e-12"};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"propagator isometry", propagator_isometry},
        {"group and inverse laws", group_law},
        {"mass conservation", mass_conservation},
        {"energy conservation", energy_conservation},
        {"gradient identity", gradient_identity},
        {"picard contraction", picard_contraction},
        {"gluing continuity", gluing},
        {"averaging", averaging},
        {"riesz kernel oracle", riesz_oracle},
        {"admissible pairs", admissible_pairs},
    };
    int failures = 0;
    int index = 0;
    for (const auto& [name, fn] : criteria) {
        ++index;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
