#pragma once

// Periodic torus [-L, L)^n, spectral transforms and the discrete norms used
// throughout the library.
//
// Coefficient convention: c_k = (2L)^{-n/2} * h^n * sum_j f_j e^{-i k x_j},
// so the zero mode carries mean(f) * (2L)^{n/2} and sum |c_k|^2 equals the
// physical quadrature h^n sum |f_j|^2 (Parseval without extra factors).
// Storage order is FFT order along each axis (0..N/2-1, -N/2..-1), row-major.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "dm4nls/error.hpp"

namespace dm4nls {

using complex = std::complex<double>;
using cvector = std::vector<complex>;

inline constexpr double kPi = 3.14159265358979323846;

struct GridSpec {
    int n = 1;            // spatial dimension, 1..3
    std::size_t N = 256;  // points per axis, power of two >= 8
    double L = 16.0 * kPi;  // half length; box is [-L, L)^n

    double h() const { return 2.0 * L / static_cast<double>(N); }

    std::size_t size() const {
        std::size_t total = 1;
        for (int a = 0; a < n; ++a) total *= N;
        return total;
    }

    double volume() const { return std::pow(2.0 * L, n); }

    void validate() const {
        detail::require(n >= 1 && n <= 3, "grid.n must be 1, 2 or 3 (got " + std::to_string(n) + ")");
        detail::require(N >= 8 && (N & (N - 1)) == 0,
                        "grid.N must be a power of two >= 8 (got " + std::to_string(N) + ")");
        detail::require(std::isfinite(L) && L > 0.0, "grid.L must be positive and finite");
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Signed mode index of FFT storage slot j on an axis with N points.
inline long mode_index(std::size_t j, std::size_t N) {
    return j < N / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(N);
}

// Immutable per-grid data: FFTW plans and wavenumber tables. Shared by all
// fields on the same grid; obtain through SpectralGrid::get.
class SpectralGrid {
public:
    explicit SpectralGrid(const GridSpec& spec) : spec_(spec) {
        spec_.validate();
        const std::size_t total = spec_.size();
        const std::size_t N = spec_.N;

        axis_k_.resize(N);
        for (std::size_t j = 0; j < N; ++j)
            axis_k_[j] = kPi * static_cast<double>(mode_index(j, N)) / spec_.L;

        k2_.assign(total, 0.0);
        max_axis_mode_.assign(total, 0);
        for (std::size_t flat = 0; flat < total; ++flat) {
            std::size_t rem = flat;
            double k2 = 0.0;
            long max_mode = 0;
            for (int a = spec_.n - 1; a >= 0; --a) {
                const std::size_t j = rem % N;
                rem /= N;
                k2 += axis_k_[j] * axis_k_[j];
                max_mode = std::max(max_mode, std::labs(mode_index(j, N)));
            }
            k2_[flat] = k2;
            max_axis_mode_[flat] = max_mode;
        }

        std::vector<int> dims(static_cast<std::size_t>(spec_.n), static_cast<int>(N));
        std::lock_guard<std::mutex> lock(planner_mutex());
        auto* scratch_in = fftw_alloc_complex(total);
        auto* scratch_out = fftw_alloc_complex(total);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward_ = fftw_plan_dft(spec_.n, dims.data(), scratch_in, scratch_out, FFTW_FORWARD, flags);
        backward_ = fftw_plan_dft(spec_.n, dims.data(), scratch_in, scratch_out, FFTW_BACKWARD, flags);
        fftw_free(scratch_in);
        fftw_free(scratch_out);
        if (forward_ == nullptr || backward_ == nullptr)
            throw NumericalError("FFTW plan creation failed");
    }

    ~SpectralGrid() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (forward_) fftw_destroy_plan(forward_);
        if (backward_) fftw_destroy_plan(backward_);
    }

    SpectralGrid(const SpectralGrid&) = delete;
    SpectralGrid& operator=(const SpectralGrid&) = delete;

    static std::shared_ptr<const SpectralGrid> get(const GridSpec& spec) {
        using Key = std::tuple<int, std::size_t, double>;
        static std::mutex registry_mutex;
        static std::map<Key, std::shared_ptr<const SpectralGrid>> registry;
        std::lock_guard<std::mutex> lock(registry_mutex);
        const Key key{spec.n, spec.N, spec.L};
        auto it = registry.find(key);
        if (it != registry.end()) return it->second;
        auto grid = std::make_shared<const SpectralGrid>(spec);
        registry.emplace(key, grid);
        return grid;
    }

    const GridSpec& spec() const { return spec_; }
    std::size_t size() const { return k2_.size(); }
    int dim() const { return spec_.n; }
    std::size_t points() const { return spec_.N; }

    // |xi|^2 per mode in storage order.
    std::span<const double> k2() const { return k2_; }
    // Wavenumber pi*j/L for each storage slot along one axis.
    std::span<const double> axis_wavenumbers() const { return axis_k_; }
    // max_a |j_a| per mode, used by band limits and the 2/3 filter.
    std::span<const long> max_axis_mode() const { return max_axis_mode_; }

    // Wavenumber component along `axis` of the mode at flat index `flat`.
    double wavenumber(std::size_t flat, int axis) const {
        std::size_t stride = 1;
        for (int a = spec_.n - 1; a > axis; --a) stride *= spec_.N;
        return axis_k_[(flat / stride) % spec_.N];
    }

    // Physical coordinate along `axis` of the sample at flat index `flat`.
    double coordinate(std::size_t flat, int axis) const {
        std::size_t stride = 1;
        for (int a = spec_.n - 1; a > axis; --a) stride *= spec_.N;
        return -spec_.L + spec_.h() * static_cast<double>((flat / stride) % spec_.N);
    }

    // Samples -> normalized coefficients.
    cvector to_spectrum(std::span<const complex> samples) const {
        cvector out(size());
        execute(forward_, samples, out);
        const double scale = std::pow(2.0 * spec_.L, 0.5 * spec_.n) / static_cast<double>(size());
        for (auto& c : out) c *= scale;
        return out;
    }

    // Normalized coefficients -> samples.
    cvector to_samples(std::span<const complex> coeffs) const {
        cvector out(size());
        execute(backward_, coeffs, out);
        const double scale = 1.0 / std::pow(2.0 * spec_.L, 0.5 * spec_.n);
        for (auto& c : out) c *= scale;
        return out;
    }

    // Raw unnormalized DFT pair, for convolution kernels.
    cvector dft(std::span<const complex> in) const {
        cvector out(size());
        execute(forward_, in, out);
        return out;
    }
    cvector idft(std::span<const complex> in) const {
        cvector out(size());
        execute(backward_, in, out);
        return out;
    }

private:
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }

    void execute(fftw_plan plan, std::span<const complex> in, std::span<complex> out) const {
        if (in.size() != size() || out.size() != size())
            throw ValidationError("transform size does not match grid");
        // FFTW's new-array execute does not modify the input of out-of-place plans.
        auto* src = reinterpret_cast<fftw_complex*>(const_cast<complex*>(in.data()));
        auto* dst = reinterpret_cast<fftw_complex*>(out.data());
        fftw_execute_dft(plan, src, dst);
    }

    GridSpec spec_;
    std::vector<double> axis_k_;
    std::vector<double> k2_;
    std::vector<long> max_axis_mode_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

// Complex state on a grid. Immutable once constructed; the spectral view is
// cached when the field was built from coefficients or via with_spectrum().
class Field {
public:
    Field() = default;

    static Field from_samples(GridPtr grid, cvector samples) {
        if (!grid) throw ValidationError("field requires a grid");
        if (samples.size() != grid->size()) throw ValidationError("sample count does not match grid");
        Field f;
        f.grid_ = std::move(grid);
        f.samples_ = std::move(samples);
        return f;
    }

    static Field from_spectrum(GridPtr grid, cvector coeffs) {
        if (!grid) throw ValidationError("field requires a grid");
        if (coeffs.size() != grid->size()) throw ValidationError("coefficient count does not match grid");
        Field f;
        f.samples_ = grid->to_samples(coeffs);
        f.spectrum_ = std::move(coeffs);
        f.grid_ = std::move(grid);
        return f;
    }

    static Field zeros(GridPtr grid) {
        const std::size_t n = grid->size();
        return from_spectrum(std::move(grid), cvector(n, complex{0.0, 0.0}));
    }

    // Sample a callable f(x) at the grid points; x is a span of n coordinates.
    template <typename Fn>
    static Field sample(GridPtr grid, Fn&& fn) {
        cvector s(grid->size());
        std::vector<double> x(static_cast<std::size_t>(grid->dim()));
        for (std::size_t i = 0; i < s.size(); ++i) {
            for (int a = 0; a < grid->dim(); ++a) x[static_cast<std::size_t>(a)] = grid->coordinate(i, a);
            s[i] = fn(std::span<const double>(x));
        }
        return from_samples(std::move(grid), std::move(s));
    }

    Field with_spectrum() const {
        Field f = *this;
        if (!f.spectrum_) f.spectrum_ = grid_->to_spectrum(samples_);
        return f;
    }

    const GridPtr& grid() const { return grid_; }
    const GridSpec& spec() const { return grid_->spec(); }
    std::size_t size() const { return samples_.size(); }
    const cvector& samples() const { return samples_; }
    bool has_spectrum() const { return spectrum_.has_value(); }

    // Normalized coefficients (cached copy or a fresh transform).
    cvector spectrum() const { return spectrum_ ? *spectrum_ : grid_->to_spectrum(samples_); }

    bool is_finite() const {
        return std::all_of(samples_.begin(), samples_.end(),
                           [](const complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
    }

    Field scaled(complex c) const {
        cvector s = samples_;
        for (auto& z : s) z *= c;
        return from_samples(grid_, std::move(s));
    }

    friend Field operator-(const Field& a, const Field& b) {
        check_same_grid(a, b);
        cvector s(a.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = a.samples_[i] - b.samples_[i];
        return from_samples(a.grid_, std::move(s));
    }

    friend Field operator+(const Field& a, const Field& b) {
        check_same_grid(a, b);
        cvector s(a.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = a.samples_[i] + b.samples_[i];
        return from_samples(a.grid_, std::move(s));
    }

    static void check_same_grid(const Field& a, const Field& b) {
        if (!a.grid_ || !b.grid_ || !(a.spec() == b.spec()))
            throw ValidationError("fields live on different grids");
    }

private:
    GridPtr grid_;
    cvector samples_;
    std::optional<cvector> spectrum_;
};

namespace detail {

inline void require_finite(const Field& f, const char* op) {
    if (!f.is_finite()) throw ValidationError(std::string(op) + ": field contains non-finite samples");
}

}  // namespace detail

// Weighted spectral l2 sum with <xi>^s (or |xi|^s when homogeneous; the zero
// mode then contributes nothing).
inline double sobolev_norm(const Field& f, double s, bool homogeneous = false) {
    detail::require(std::isfinite(s), "sobolev_norm: s must be finite");
    detail::require_finite(f, "sobolev_norm");
    const cvector c = f.spectrum();
    const auto k2 = f.grid()->k2();
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        double w = 1.0;
        if (homogeneous) {
            if (k2[i] == 0.0) continue;
            w = s == 0.0 ? 1.0 : std::pow(k2[i], s);
        } else if (s != 0.0) {
            w = std::pow(1.0 + k2[i], s);
        }
        sum += w * std::norm(c[i]);
    }
    return std::sqrt(sum);
}

// Discrete L^p quadrature (h^n sum |f|^p)^{1/p}; max norm for p = infinity.
inline double lp_norm(const Field& f, double p) {
    detail::require(p >= 1.0, "lp_norm: p must be >= 1");
    detail::require_finite(f, "lp_norm");
    const auto& s = f.samples();
    if (std::isinf(p)) {
        double m = 0.0;
        for (const auto& z : s) m = std::max(m, std::abs(z));
        return m;
    }
    const double cell = std::pow(f.spec().h(), f.spec().n);
    double sum = 0.0;
    if (p == 2.0) {
        for (const auto& z : s) sum += std::norm(z);
        return std::sqrt(cell * sum);
    }
    for (const auto& z : s) sum += std::pow(std::abs(z), p);
    return std::pow(cell * sum, 1.0 / p);
}

inline double l2_norm(const Field& f) { return lp_norm(f, 2.0); }

// ||grad f||_{L^2}^2 and ||Lap f||_{L^2}^2 from the spectrum.
inline double grad_l2_squared(const Field& f) {
    const cvector c = f.spectrum();
    const auto k2 = f.grid()->k2();
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) sum += k2[i] * std::norm(c[i]);
    return sum;
}

inline double laplacian_l2_squared(const Field& f) {
    const cvector c = f.spectrum();
    const auto k2 = f.grid()->k2();
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) sum += k2[i] * k2[i] * std::norm(c[i]);
    return sum;
}

// Spectral derivative d/dx_axis.
inline Field spectral_derivative(const Field& f, int axis) {
    cvector c = f.spectrum();
    const auto& grid = *f.grid();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= complex{0.0, grid.wavenumber(i, axis)};
    return Field::from_spectrum(f.grid(), std::move(c));
}

// Zero every mode with some |j_a| > N/3.
inline cvector two_thirds_filter(const GridSpec& spec, const SpectralGrid& grid, cvector coeffs) {
    const long cutoff = static_cast<long>(spec.N / 3);
    const auto max_mode = grid.max_axis_mode();
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        if (max_mode[i] > cutoff) coeffs[i] = complex{0.0, 0.0};
    return coeffs;
}

// Deterministic random field with spectral support |j_a| <= max_mode on every
// axis and unit L^2 norm.
inline Field random_band_limited(const GridSpec& spec, int max_mode, std::uint64_t seed) {
    spec.validate();
    detail::require(max_mode > 0 && static_cast<std::size_t>(max_mode) < spec.N / 2,
                    "random_band_limited: max_mode must satisfy 0 < max_mode < N/2");
    auto grid = SpectralGrid::get(spec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    cvector c(grid->size(), complex{0.0, 0.0});
    const auto modes = grid->max_axis_mode();
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (modes[i] > max_mode) continue;
        const double re = normal(rng);
        const double im = normal(rng);
        c[i] = complex{re, im};
        sum += std::norm(c[i]);
    }
    const double inv = 1.0 / std::sqrt(sum);
    for (auto& z : c) z *= inv;
    return Field::from_spectrum(std::move(grid), std::move(c));
}

}  // namespace dm4nls
