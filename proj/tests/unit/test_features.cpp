#include <doctest.h>

#include <accelhr/error.hpp>
#include <accelhr/features.hpp>
#include <accelhr/rng.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

using namespace accelhr;

namespace {

double stat(const AxisStats& a, Stat s) { return a[static_cast<std::size_t>(s)]; }

}  // namespace

TEST_CASE("zero crossings on the documented examples") {
    CHECK(zero_crossings(std::vector<double>{1, -1, 1, -1}) == 3);
    CHECK(zero_crossings(std::vector<double>{5, 5, 5, 5}) == 0);
    CHECK(zero_crossings(std::vector<double>{1, 2, 3}) == 1);
    // offset does not matter, only the centered shape
    CHECK(zero_crossings(std::vector<double>{10, 8, 10, 8, 10}) == 4);
}

TEST_CASE("spectral energy examples") {
    CHECK(spectral_energy(std::vector<double>{1, 0, 0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spectral_energy(std::vector<double>(50, 0.5)) == doctest::Approx(12.5).epsilon(1e-12));
}

TEST_CASE("spectral entropy examples") {
    CHECK(spectral_entropy(std::vector<double>(16, 0.7)) == 0.0);
    // DC plus Nyquist with equal magnitude: [1,0,1,0] -> X0 = 2, X2 = 2
    CHECK(spectral_entropy(std::vector<double>{1, 0, 1, 0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(spectral_entropy(std::vector<double>(8, 0.0)) == 0.0);
}

TEST_CASE("constant windows give the degenerate feature vector") {
    const std::vector<double> c(50, 0.5);
    const auto fv = window_features(c, c, c);
    for (auto a : {Axis::x, Axis::y, Axis::z}) {
        for (auto s : {Stat::min, Stat::max, Stat::mean, Stat::median, Stat::p25, Stat::p75}) CHECK(fv.get(a, s) == 0.5);
        for (auto s : {Stat::std, Stat::iqr, Stat::skew, Stat::kurt, Stat::zc, Stat::spec_entropy}) {
            CHECK(fv.get(a, s) == 0.0);
        }
    }
}

TEST_CASE("percentiles interpolate linearly") {
    const std::vector<double> x{1, 2, 3, 4};
    const auto fv = window_features(x, x, x);
    CHECK(fv.get(Axis::x, Stat::p25) == doctest::Approx(1.75));
    CHECK(fv.get(Axis::x, Stat::p75) == doctest::Approx(3.25));
    CHECK(fv.get(Axis::x, Stat::iqr) == doctest::Approx(1.5));
    CHECK(fv.get(Axis::x, Stat::median) == doctest::Approx(2.5));
}

TEST_CASE("window validation") {
    CHECK_THROWS_AS(window_features(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3},
                                    std::vector<double>{1, 2}),
                    ShapeError);
    CHECK_THROWS_AS(axis_features(std::vector<double>{1}), ShapeError);
    CHECK_THROWS_AS(axis_features(std::vector<double>{1, NAN}), ShapeError);
    CHECK_THROWS_AS(spectral_energy(std::vector<double>{INFINITY, 1}), ShapeError);
}

TEST_CASE("feature names") {
    const auto& n = FeatureVector::names();
    CHECK(n.size() == 39);
    CHECK(n.front() == "x_min");
    CHECK(n[FeatureVector::index(Axis::y, Stat::zc)] == "y_zc");
    CHECK(n.back() == "z_spec_entropy");
}

TEST_CASE("random windows match the brute-force oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t len = 2 + rng.below(120);
        const auto x = fixtures::random_window(rng, len);
        const auto y = fixtures::random_window(rng, len);
        const auto z = fixtures::random_window(rng, len);
        const auto got = window_features(x, y, z);
        const auto want = oracle::window(x, y, z);
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            INFO("trial " << trial << " feature " << FeatureVector::names()[i]);
            CHECK(oracle::close(got[i], want[i], 1e-9));
        }
    }
}

TEST_CASE("feature vector invariants on random windows") {
    Rng rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t len = 2 + rng.below(100);
        const auto w = fixtures::random_window(rng, len);
        const auto a = axis_features(w);
        CHECK(stat(a, Stat::min) <= stat(a, Stat::p25));
        CHECK(stat(a, Stat::p25) <= stat(a, Stat::median));
        CHECK(stat(a, Stat::median) <= stat(a, Stat::p75));
        CHECK(stat(a, Stat::p75) <= stat(a, Stat::max));
        CHECK(stat(a, Stat::iqr) == stat(a, Stat::p75) - stat(a, Stat::p25));
        CHECK(stat(a, Stat::std) >= 0.0);
        CHECK(stat(a, Stat::spec_energy) >= 0.0);
        const double zc = stat(a, Stat::zc);
        CHECK(zc == std::floor(zc));
        CHECK(zc <= static_cast<double>(len - 1));

        // Parseval
        double ss = 0.0;
        for (double v : w) ss += v * v;
        CHECK(std::abs(stat(a, Stat::spec_energy) - ss) <= 1e-9 * std::max(1.0, ss));

        const double h = stat(a, Stat::spec_entropy);
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>(len / 2 + 1)) + 1e-12);
    }
}

TEST_CASE("permuting a window leaves order statistics and moments unchanged") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        auto w = fixtures::random_window(rng, 2 + rng.below(80));
        const auto before = axis_features(w);
        for (std::size_t i = w.size() - 1; i > 0; --i) std::swap(w[i], w[rng.below(i + 1)]);
        const auto after = axis_features(w);
        for (auto s : {Stat::min, Stat::max, Stat::std, Stat::median, Stat::mean, Stat::p25, Stat::p75, Stat::iqr,
                       Stat::skew, Stat::kurt}) {
            CHECK(stat(after, s) == stat(before, s));
        }
        // energy is permutation-invariant in exact arithmetic; entropy is not
        CHECK(stat(after, Stat::spec_energy) == doctest::Approx(stat(before, Stat::spec_energy)).epsilon(1e-9));
    }
}

TEST_CASE("scaling a window by c > 0") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const auto w = fixtures::random_window(rng, 4 + rng.below(60));
        const double c = rng.uniform(0.1, 5.0);
        std::vector<double> scaled(w);
        for (auto& v : scaled) v *= c;
        const auto a = axis_features(w);
        const auto b = axis_features(scaled);
        for (auto s : {Stat::min, Stat::max, Stat::std, Stat::median, Stat::mean, Stat::p25, Stat::p75, Stat::iqr}) {
            CHECK(oracle::close(stat(b, s), c * stat(a, s), 1e-9));
        }
        CHECK(oracle::close(stat(b, Stat::spec_energy), c * c * stat(a, Stat::spec_energy), 1e-9));
        CHECK(oracle::close(stat(b, Stat::spec_entropy), stat(a, Stat::spec_entropy), 1e-9));
        CHECK(stat(b, Stat::zc) == stat(a, Stat::zc));
        const double m2a = stat(a, Stat::std) * stat(a, Stat::std);
        const double m2b = stat(b, Stat::std) * stat(b, Stat::std);
        if (m2a > 1e-9 && m2b > 1e-9) {
            CHECK(oracle::close(stat(b, Stat::skew), stat(a, Stat::skew), 1e-7));
            CHECK(oracle::close(stat(b, Stat::kurt), stat(a, Stat::kurt), 1e-7));
        }
    }
}

TEST_CASE("minute aggregate") {
    FeatureVector a, b;
    a.set(Axis::x, Stat::mean, 2.0);
    b.set(Axis::x, Stat::mean, 4.0);
    const std::vector<FeatureVector> two{a, b};
    CHECK(minute_aggregate(two, 2).get(Axis::x, Stat::mean) == 3.0);
    CHECK_THROWS_AS(minute_aggregate(two), InsufficientDataError);

    FeatureVector v;
    for (std::size_t i = 0; i < kFeatureCount; ++i) v[i] = 0.25 * static_cast<double>(i) - 3.0;
    const std::vector<FeatureVector> same(60, v);
    CHECK(minute_aggregate(same) == v);
    CHECK_THROWS_AS(minute_aggregate(std::vector<FeatureVector>(61, v)), ShapeError);
    CHECK_THROWS_AS(minute_aggregate(std::vector<FeatureVector>(29, v)), InsufficientDataError);

    Rng rng(11);
    std::vector<FeatureVector> secs(45);
    for (auto& s : secs) {
        for (auto& x : s.values) x = rng.uniform(-10, 10);
    }
    const auto agg = minute_aggregate(secs);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        double sum = 0.0;
        for (const auto& s : secs) sum += s[i];
        CHECK(std::abs(agg[i] - sum / 45.0) <= 1e-12 * std::max(1.0, std::abs(sum / 45.0)));
    }
}
