#pragma once

// Reference computations for the test suites. Nothing here calls into the
// spectral convolution, closed-form cumulative integrals or the propagator
// multiplier it is used to check.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

// Hurwitz zeta zeta(s, a) = sum_{k>=0} (k + a)^{-s}, analytically continued,
// via Euler-Maclaurin summation (valid for s != 1, a >= 0; the k = 0 term is
// dropped when a = 0 and s < 0).
inline double hurwitz_zeta(double s, double a) {
    constexpr int M = 40;
    // B_{2j} / (2j)!
    constexpr double bern[] = {1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0, 1.0 / 47900160.0,
                               -691.0 / 1307674368000.0};
    double sum = 0.0;
    for (int k = 0; k < M; ++k) {
        const double base = k + a;
        if (base == 0.0) continue;
        sum += std::pow(base, -s);
    }
    const double x = M + a;
    sum += std::pow(x, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(x, -s);
    double rising = s;  // s (s+1) ... (s+2j-2)
    for (int j = 1; j <= 6; ++j) {
        sum += bern[j - 1] * rising * std::pow(x, -s - 2.0 * j + 1.0);
        rising *= (s + 2.0 * j - 1.0) * (s + 2.0 * j);
    }
    return sum;
}

// Zero-mean periodization of |x|^{-lambda} on the 1-D torus of length 2L:
// (2L)^{-lambda} [zeta(lambda, a) + zeta(lambda, 1 - a)], a = x / 2L mod 1.
inline double periodized_riesz(double x, double lambda, double L) {
    const double P = 2.0 * L;
    double a = x / P - std::floor(x / P);
    return std::pow(P, -lambda) * (hurwitz_zeta(lambda, a) + hurwitz_zeta(lambda, 1.0 - a));
}

// Antiderivative in a of zeta(lambda,a) + zeta(lambda,1-a), for 0 <= a <= 1.
inline double periodized_riesz_primitive(double a, double lambda) {
    return (hurwitz_zeta(lambda - 1.0, a) - hurwitz_zeta(lambda - 1.0, 1.0 - a)) / (1.0 - lambda);
}

// Exact integral of the periodized kernel over [y1, y2] with 0 <= y1 <= y2 <= 2L.
inline double periodized_riesz_cell(double y1, double y2, double lambda, double L) {
    const double P = 2.0 * L;
    return std::pow(P, 1.0 - lambda) *
           (periodized_riesz_primitive(y2 / P, lambda) - periodized_riesz_primitive(y1 / P, lambda));
}

// Direct physical-space convolution V(x_i) = int K_per(x_i - y) rho(y) dy on
// the 1-D torus [-L, L): fine cells of width h/R centred on fine points, exact
// kernel mass per cell, rho evaluated from its closed form. O(N * N * R).
inline std::vector<double> direct_periodized_potential(const std::function<double(double)>& rho, std::size_t N,
                                                       double L, double lambda, int R = 65) {
    const double h = 2.0 * L / static_cast<double>(N);
    const double hf = h / R;
    const std::size_t M = N * static_cast<std::size_t>(R);
    // weight[m] = int over the fine cell centred at offset m*hf of K_per.
    std::vector<double> weight(M);
    for (std::size_t m = 0; m < M; ++m) {
        if (m == 0) {
            weight[m] = periodized_riesz_cell(0.0, 0.5 * hf, lambda, L) +
                        periodized_riesz_cell(2.0 * L - 0.5 * hf, 2.0 * L, lambda, L);
        } else {
            const double c = static_cast<double>(m) * hf;
            weight[m] = periodized_riesz_cell(c - 0.5 * hf, c + 0.5 * hf, lambda, L);
        }
    }
    std::vector<double> rho_fine(M);
    for (std::size_t c = 0; c < M; ++c) rho_fine[c] = rho(-L + static_cast<double>(c) * hf);
    std::vector<double> V(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        const std::size_t xi = i * static_cast<std::size_t>(R);
        double sum = 0.0;
        for (std::size_t c = 0; c < M; ++c) sum += weight[(xi + M - c) % M] * rho_fine[c];
        V[i] = sum;
    }
    return V;
}

// Adaptive Simpson quadrature.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int depth = 60) {
    std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) -> double {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
        return rec(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    };
    // Pre-split so every panel is short compared to the constancy pieces.
    constexpr int panels = 256;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double pa = a + (b - a) * p / panels, pb = a + (b - a) * (p + 1) / panels;
        const double fa = f(pa), fm = f(0.5 * (pa + pb)), fb = f(pb);
        total += rec(pa, pb, fa, fm, fb, (pb - pa) / 6.0 * (fa + 4.0 * fm + fb), tol / panels, depth);
    }
    return total;
}

// int_a^b of a piecewise-constant profile: sum of (piece length) * value at the
// piece midpoint, given the sorted interior jump times.
inline double piecewise_integral(const std::function<double(double)>& f, double a, double b,
                                 const std::vector<double>& jumps) {
    std::vector<double> knots{a};
    knots.insert(knots.end(), jumps.begin(), jumps.end());
    knots.push_back(b);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        total += (knots[i + 1] - knots[i]) * f(0.5 * (knots[i] + knots[i + 1]));
    return total;
}

}  // namespace oracle
