#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dm4nls/spectral_grid.hpp"

using namespace dm4nls;

namespace {

GridPtr default_grid() { return SpectralGrid::get(GridSpec{}); }

Field plane_wave(GridPtr g, double k) {
    return Field::sample(g, [k](std::span<const double> x) { return std::polar(1.0, k * x[0]); });
}

double physical_l2(const Field& f) {
    double sum = 0.0;
    for (const auto& z : f.samples()) sum += std::norm(z);
    return std::sqrt(sum * std::pow(f.spec().h(), f.spec().n));
}

}  // namespace

TEST(GridSpec, RejectsBadSizes) {
    EXPECT_THROW((GridSpec{1, 4, 1.0}).validate(), ValidationError);
    EXPECT_THROW((GridSpec{1, 96, 1.0}).validate(), ValidationError);
    EXPECT_THROW((GridSpec{1, 64, -1.0}).validate(), ValidationError);
    EXPECT_THROW((GridSpec{4, 64, 1.0}).validate(), ValidationError);
    EXPECT_NO_THROW((GridSpec{2, 8, 1.0}).validate());
}

TEST(GridSpec, WavenumbersAreMultiplesOfPiOverL) {
    const auto g = default_grid();
    const auto k = g->axis_wavenumbers();
    int zeros = 0;
    for (std::size_t j = 0; j < k.size(); ++j) {
        EXPECT_DOUBLE_EQ(k[j], kPi * static_cast<double>(mode_index(j, 256)) / g->spec().L);
        if (k[j] == 0.0) ++zeros;
    }
    EXPECT_EQ(zeros, 1);
}

TEST(Field, RoundTripTransform) {
    for (int n : {1, 2}) {
        const auto g = SpectralGrid::get(GridSpec{n, 32, 5.0});
        const Field f = random_band_limited(g->spec(), 10, 7);
        const Field back = Field::from_samples(g, g->to_samples(g->to_spectrum(f.samples())));
        EXPECT_LE(l2_norm(back - f), 1e-12 * l2_norm(f));
    }
}

TEST(Field, CachedSpectrumMatchesTransform) {
    const auto g = default_grid();
    const Field f = Field::sample(g, [](std::span<const double> x) { return complex{std::exp(-x[0] * x[0]), 0.0}; });
    const Field c = f.with_spectrum();
    ASSERT_TRUE(c.has_spectrum());
    const cvector fresh = g->to_spectrum(f.samples());
    const cvector cached = c.spectrum();
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        diff += std::norm(fresh[i] - cached[i]);
        norm += std::norm(fresh[i]);
    }
    EXPECT_LE(std::sqrt(diff), 1e-12 * std::sqrt(norm));
}

TEST(Field, ZeroModeCarriesMeanTimesVolumeRoot) {
    const auto g = default_grid();
    const Field f = Field::sample(g, [](std::span<const double>) { return complex{2.5, -1.0}; });
    const cvector c = f.spectrum();
    const complex expected = complex{2.5, -1.0} * std::sqrt(2.0 * g->spec().L);
    EXPECT_NEAR(std::abs(c[0] - expected), 0.0, 1e-12 * std::abs(expected));
}

TEST(SobolevNorm, ZeroFieldIsZero) {
    const Field z = Field::zeros(default_grid());
    for (double s : {-1.0, 0.0, 0.5, 1.0, 2.0, 3.5}) {
        EXPECT_EQ(sobolev_norm(z, s), 0.0);
        EXPECT_EQ(sobolev_norm(z, s, true), 0.0);
    }
}

TEST(SobolevNorm, SingleModeHandComputation) {
    const auto g = default_grid();
    const double L = g->spec().L;
    const double k = kPi / L;
    const Field f = plane_wave(g, k);
    for (double s : {0.0, 1.0, 2.0, 0.3}) {
        const double expected = std::pow(1.0 + k * k, 0.5 * s) * std::sqrt(2.0 * L);
        EXPECT_NEAR(sobolev_norm(f, s), expected, 1e-12 * expected) << "s=" << s;
    }
}

TEST(SobolevNorm, OrderZeroEqualsPhysicalQuadrature) {
    const auto g = default_grid();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Field f = random_band_limited(g->spec(), 40, seed).scaled(complex{3.0, 1.0});
        const double phys = physical_l2(f);
        EXPECT_NEAR(sobolev_norm(f, 0.0), phys, 1e-12 * phys);
        EXPECT_NEAR(lp_norm(f, 2.0), phys, 1e-12 * phys);
    }
}

TEST(SobolevNorm, MonotoneInOrder) {
    const auto g = default_grid();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Field f = random_band_limited(g->spec(), 60, seed);
        double prev = 0.0;
        for (double s : {-1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
            const double v = sobolev_norm(f, s);
            EXPECT_GE(v, prev);
            prev = v;
        }
    }
}

TEST(SobolevNorm, HomogeneousIgnoresZeroMode) {
    const auto g = default_grid();
    const Field c = Field::sample(g, [](std::span<const double>) { return complex{4.0, 0.0}; });
    EXPECT_EQ(sobolev_norm(c, 1.0, true), 0.0);
    EXPECT_GT(sobolev_norm(c, 1.0, false), 0.0);
}

TEST(SobolevNorm, RejectsNonFinite) {
    const auto g = default_grid();
    cvector s(g->size(), complex{1.0, 0.0});
    s[3] = complex{std::numeric_limits<double>::quiet_NaN(), 0.0};
    const Field f = Field::from_samples(g, s);
    EXPECT_THROW(sobolev_norm(f, 1.0), ValidationError);
    EXPECT_THROW(sobolev_norm(Field::zeros(g), std::numeric_limits<double>::infinity()), ValidationError);
}

TEST(LpNorm, ConstantField) {
    for (int n : {1, 2}) {
        const auto g = SpectralGrid::get(GridSpec{n, 16, 3.0});
        const Field f = Field::sample(g, [](std::span<const double>) { return complex{0.0, -2.0}; });
        const double expected = 2.0 * std::pow(6.0, 0.5 * n);
        EXPECT_NEAR(lp_norm(f, 2.0), expected, 1e-12 * expected);
    }
}

TEST(LpNorm, SupOfPlaneWaveIsOne) {
    const auto g = default_grid();
    EXPECT_NEAR(lp_norm(plane_wave(g, 5.0 * kPi / g->spec().L), std::numeric_limits<double>::infinity()), 1.0,
                1e-15);
}

TEST(LpNorm, HolderConsistency) {
    const auto g = default_grid();
    const double inf = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Field f = random_band_limited(g->spec(), 1 + static_cast<int>(seed % 100), seed);
        const double l2 = lp_norm(f, 2.0);
        EXPECT_LE(l2 * l2, lp_norm(f, 1.0) * lp_norm(f, inf) * (1.0 + 1e-14));
    }
}

TEST(LpNorm, RejectsPBelowOne) {
    EXPECT_THROW(lp_norm(Field::zeros(default_grid()), 0.5), ValidationError);
}

TEST(Parseval, PhysicalEqualsSpectral) {
    for (int n : {1, 2}) {
        const auto g = SpectralGrid::get(GridSpec{n, 64, 7.0});
        const Field f = random_band_limited(g->spec(), 20, 11);
        double spec_sum = 0.0;
        for (const auto& c : f.spectrum()) spec_sum += std::norm(c);
        const double phys = physical_l2(f);
        EXPECT_NEAR(std::sqrt(spec_sum), phys, 1e-12 * phys);
    }
}

TEST(RandomBandLimited, Deterministic) {
    const GridSpec spec{};
    const Field a = random_band_limited(spec, 30, 1234);
    const Field b = random_band_limited(spec, 30, 1234);
    EXPECT_EQ(a.samples(), b.samples());
    const Field c = random_band_limited(spec, 30, 1235);
    EXPECT_NE(a.samples(), c.samples());
}

TEST(RandomBandLimited, UnitNormAndSupport) {
    const GridSpec spec{2, 32, 4.0};
    const Field f = random_band_limited(spec, 5, 3);
    EXPECT_NEAR(l2_norm(f), 1.0, 1e-12);
    const cvector c = f.spectrum();
    const auto modes = f.grid()->max_axis_mode();
    for (std::size_t i = 0; i < c.size(); ++i)
        if (modes[i] > 5) EXPECT_EQ(c[i], complex(0.0, 0.0));
}

TEST(RandomBandLimited, RejectsBadMaxMode) {
    EXPECT_THROW(random_band_limited(GridSpec{}, 0, 1), ValidationError);
    EXPECT_THROW(random_band_limited(GridSpec{}, 128, 1), ValidationError);
}

TEST(SpectralDerivative, PlaneWave) {
    const auto g = default_grid();
    const double k = 3.0 * kPi / g->spec().L;
    const Field f = plane_wave(g, k);
    const Field d = spectral_derivative(f, 0);
    const Field expected = f.scaled(complex{0.0, k});
    EXPECT_LE(l2_norm(d - expected), 1e-12 * l2_norm(expected));
}

TEST(TwoThirdsFilter, ZeroesHighModes) {
    const auto g = SpectralGrid::get(GridSpec{1, 64, 2.0});
    cvector c(g->size(), complex{1.0, 0.0});
    c = two_thirds_filter(g->spec(), *g, c);
    for (std::size_t j = 0; j < c.size(); ++j) {
        const long m = std::labs(mode_index(j, 64));
        EXPECT_EQ(c[j] == complex(0.0, 0.0), 3 * m > 64) << m;
    }
}
