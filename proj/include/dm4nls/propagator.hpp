#pragma once

// Exact linear flow U(t, r) of i u_t + alpha(t) Lap u + beta(t) Lap^2 u = 0:
// the Fourier multiplier exp(-i |xi|^2 A(t,r) + i |xi|^4 B(t,r)).

#include <cmath>
#include <complex>

#include "dm4nls/dispersion.hpp"
#include "dm4nls/spectral_grid.hpp"

namespace dm4nls {

// phi(xi) = -|xi|^2 A + |xi|^4 B.
inline double propagator_phase(double k2, double A, double B) { return -k2 * A + k2 * k2 * B; }

// Multiply coefficients in place by the unimodular multiplier for (A, B).
inline void apply_multiplier(std::span<complex> coeffs, std::span<const double> k2, double A, double B) {
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] *= std::polar(1.0, propagator_phase(k2[i], A, B));
}

inline Field apply_cumulative(const Field& u, const CumulativeDispersion& c) {
    if (!std::isfinite(c.A) || !std::isfinite(c.B))
        throw NumericalError("propagator: non-finite cumulative dispersion");
    if (c.A == 0.0 && c.B == 0.0) return u;
    cvector coeffs = u.spectrum();
    apply_multiplier(coeffs, u.grid()->k2(), c.A, c.B);
    return Field::from_spectrum(u.grid(), std::move(coeffs));
}

// U(t, r) u.
inline Field apply(const Field& u, const DispersionSchedule& sched, double r, double t) {
    detail::require_finite(u, "propagator apply");
    return apply_cumulative(u, sched.cumulative(r, t));
}

// ||U(t,l) U(l,r) u - U(t,r) u||_{L^2}.
inline double compose_check(const DispersionSchedule& sched, double r, double l, double t, const Field& u) {
    const Field two_step = apply(apply(u, sched, r, l), sched, l, t);
    const Field direct = apply(u, sched, r, t);
    return l2_norm(two_step - direct);
}

// ||U(r,t) U(t,r) u - u||_{L^2}.
inline double inverse_check(const DispersionSchedule& sched, double r, double t, const Field& u) {
    return l2_norm(apply(apply(u, sched, r, t), sched, t, r) - u);
}

}  // namespace dm4nls
