#pragma once

// Hartree nonlinearity theta (|x|^{-lambda} * |u|^2) u through the Fourier
// symbol of the Riesz kernel, the local cubic term theta |u|^2 u, and the
// quartic energy functional.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dm4nls/spectral_grid.hpp"

namespace dm4nls {

// Fourier transform of |x|^{-lambda} on R^n:
// pi^{n/2} 2^{n-lambda} Gamma((n-lambda)/2) / Gamma(lambda/2) |xi|^{lambda-n}.
inline double riesz_symbol_constant(int n, double lambda) {
    return std::pow(kPi, 0.5 * n) * std::pow(2.0, n - lambda) * std::tgamma(0.5 * (n - lambda)) /
           std::tgamma(0.5 * lambda);
}

// Symbol of |x|^{-lambda} restricted to the torus modes. The zero mode is 0:
// a nonzero value would only add a global phase proportional to the mass.
class RieszKernel {
public:
    RieszKernel(GridPtr grid, double lambda) : grid_(std::move(grid)), lambda_(lambda) {
        const int n = grid_->dim();
        if (!(lambda > 0.0 && lambda < n))
            throw ValidationError("Riesz kernel: lambda must satisfy 0 < lambda < n (lambda=" +
                                  std::to_string(lambda) + ", n=" + std::to_string(n) + ")");
        const double c = riesz_symbol_constant(n, lambda);
        const auto k2 = grid_->k2();
        symbol_.resize(k2.size());
        for (std::size_t i = 0; i < k2.size(); ++i)
            symbol_[i] = k2[i] == 0.0 ? zero_mode_value : c * std::pow(k2[i], 0.5 * (lambda - n));
    }

    RieszKernel(const GridSpec& spec, double lambda) : RieszKernel(SpectralGrid::get(spec), lambda) {}

    static constexpr double zero_mode_value = 0.0;

    double lambda() const { return lambda_; }
    const GridPtr& grid() const { return grid_; }
    std::span<const double> symbol() const { return symbol_; }

    // K * g for a sample vector g on the kernel's grid.
    cvector convolve(std::span<const complex> g) const {
        cvector d = grid_->dft(g);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= symbol_[i];
        cvector out = grid_->idft(d);
        const double inv = 1.0 / static_cast<double>(out.size());
        for (auto& z : out) z *= inv;
        return out;
    }

private:
    GridPtr grid_;
    double lambda_;
    std::vector<double> symbol_;
};

namespace detail {

inline void check_kernel_grid(const Field& u, const RieszKernel& K) {
    if (!(u.spec() == K.grid()->spec())) throw ValidationError("Riesz kernel built on a different grid");
}

inline cvector density(const Field& u) {
    cvector rho(u.size());
    const auto& s = u.samples();
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = complex{std::norm(s[i]), 0.0};
    return rho;
}

}  // namespace detail

// V = K * |u|^2 as real samples.
inline std::vector<double> potential_values(const Field& u, const RieszKernel& K) {
    detail::check_kernel_grid(u, K);
    const cvector V = K.convolve(detail::density(u));
    double max_u2 = 0.0, max_re = 0.0, max_im = 0.0;
    for (const auto& z : u.samples()) max_u2 = std::max(max_u2, std::norm(z));
    std::vector<double> out(V.size());
    for (std::size_t i = 0; i < V.size(); ++i) {
        out[i] = V[i].real();
        max_re = std::max(max_re, std::abs(V[i].real()));
        max_im = std::max(max_im, std::abs(V[i].imag()));
    }
    if (!(max_im <= 1e-12 * std::max({1.0, max_u2, max_re})))
        throw NumericalError("Hartree potential: imaginary residue " + std::to_string(max_im) + " exceeds tolerance");
    return out;
}

inline Field potential(const Field& u, const RieszKernel& K) {
    const auto V = potential_values(u, K);
    cvector s(V.size());
    for (std::size_t i = 0; i < V.size(); ++i) s[i] = complex{V[i], 0.0};
    return Field::from_samples(u.grid(), std::move(s));
}

// theta V u.
inline Field hartree_term(const Field& u, const RieszKernel& K, double theta) {
    if (theta == 0.0) return Field::zeros(u.grid());
    const auto V = potential_values(u, K);
    cvector s = u.samples();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= theta * V[i];
    return Field::from_samples(u.grid(), std::move(s));
}

// theta |u|^2 u, optionally 2/3-rule truncated.
inline Field cubic_term(const Field& u, double theta, bool dealias = false) {
    cvector s = u.samples();
    for (auto& z : s) z *= theta * std::norm(z);
    if (!dealias) return Field::from_samples(u.grid(), std::move(s));
    const auto& grid = *u.grid();
    cvector c = two_thirds_filter(u.spec(), grid, grid.to_spectrum(s));
    return Field::from_spectrum(u.grid(), std::move(c));
}

// int (K * |u|^2) |u|^2 dx by physical quadrature.
inline double hartree_energy_term(const Field& u, const RieszKernel& K) {
    const auto V = potential_values(u, K);
    const auto& s = u.samples();
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) sum += V[i] * std::norm(s[i]);
    return sum * std::pow(u.spec().h(), u.spec().n);
}

// Same quantity as sum_xi khat(xi) |(|u|^2)^(xi)|^2 with normalized coefficients.
inline double hartree_energy_term_spectral(const Field& u, const RieszKernel& K) {
    detail::check_kernel_grid(u, K);
    const cvector c = u.grid()->to_spectrum(detail::density(u));
    const auto sym = K.symbol();
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) sum += sym[i] * std::norm(c[i]);
    return sum;
}

enum class NonlinearityKind { hartree, cubic };

// Nonlinearity selector bound to a grid: V(u) is K*|u|^2 (Hartree) or |u|^2 (cubic).
class Nonlinearity {
public:
    Nonlinearity(GridPtr grid, NonlinearityKind kind, double theta, double lambda = 0.5, bool dealias = false)
        : grid_(std::move(grid)), kind_(kind), theta_(theta), dealias_(dealias) {
        if (kind_ == NonlinearityKind::hartree) kernel_.emplace(grid_, lambda);
    }

    NonlinearityKind kind() const { return kind_; }
    double theta() const { return theta_; }
    bool dealias() const { return dealias_; }
    const std::optional<RieszKernel>& kernel() const { return kernel_; }
    const GridPtr& grid() const { return grid_; }

    std::vector<double> potential(const Field& u) const {
        if (kernel_) return potential_values(u, *kernel_);
        std::vector<double> V(u.size());
        for (std::size_t i = 0; i < V.size(); ++i) V[i] = std::norm(u.samples()[i]);
        if (!dealias_) return V;
        cvector s(V.begin(), V.end());
        const auto& grid = *u.grid();
        const cvector filtered = grid.to_samples(two_thirds_filter(u.spec(), grid, grid.to_spectrum(s)));
        for (std::size_t i = 0; i < V.size(); ++i) V[i] = filtered[i].real();
        return V;
    }

    // N(u) = V(u) u, without the theta factor.
    Field apply(const Field& u) const {
        if (!kernel_) return cubic_term(u, 1.0, dealias_);
        const auto V = potential(u);
        cvector s = u.samples();
        for (std::size_t i = 0; i < s.size(); ++i) s[i] *= V[i];
        return Field::from_samples(u.grid(), std::move(s));
    }

    // int V(u) |u|^2 dx.
    double quartic(const Field& u) const {
        if (kernel_) return hartree_energy_term(u, *kernel_);
        double sum = 0.0;
        for (const auto& z : u.samples()) sum += std::norm(z) * std::norm(z);
        return sum * std::pow(u.spec().h(), u.spec().n);
    }

private:
    GridPtr grid_;
    NonlinearityKind kind_;
    double theta_;
    bool dealias_;
    std::optional<RieszKernel> kernel_;
};

}  // namespace dm4nls
