#include "accelhr/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "accelhr/error.hpp"

namespace accelhr {

namespace {

constexpr double kMomentGuard = 1e-12;
constexpr double kPowerGuard = 1e-12;

// FFTW's planner is not thread-safe, execution with the new-array interface
// is. Plans are created once per window length under a lock and never freed.
class PlanCache {
public:
    fftw_plan get(std::size_t m) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(m);
        if (it != plans_.end()) return it->second;
        auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * m));
        auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (m / 2 + 1)));
        fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(m), in, out,
                                              FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT);
        fftw_free(in);
        fftw_free(out);
        plans_.emplace(m, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::size_t, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

// |X_k|^2 for k = 0..floor(M/2).
void one_sided_power(std::span<const double> w, std::vector<double>& power) {
    const std::size_t m = w.size();
    const std::size_t bins = m / 2 + 1;
    thread_local std::vector<double> in;
    thread_local std::vector<std::complex<double>> out;
    in.assign(w.begin(), w.end());
    out.resize(bins);
    fftw_execute_dft_r2c(plan_cache().get(m), in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    power.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(out[k]);
}

double energy_from_power(std::span<const double> power, std::size_t m) {
    // Bins without a mirror image: DC, and Nyquist when M is even.
    double total = power[0];
    const std::size_t last = power.size() - 1;
    for (std::size_t k = 1; k <= last; ++k) {
        const bool unique = (m % 2 == 0) && k == last;
        total += unique ? power[k] : 2.0 * power[k];
    }
    return total / static_cast<double>(m);
}

double entropy_from_power(std::span<const double> power) {
    double total = 0.0;
    for (double p : power) total += p;
    if (total < kPowerGuard) return 0.0;
    double h = 0.0;
    for (double p : power) {
        if (p <= 0.0) continue;
        const double q = p / total;
        h -= q * std::log(q);
    }
    return h;
}

double interpolated_percentile(std::span<const double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

void FeatureVector::set_axis(Axis a, const AxisStats& stats) noexcept {
    std::copy(stats.begin(), stats.end(), values.begin() + index(a, Stat::min));
}

AxisStats FeatureVector::axis(Axis a) const noexcept {
    AxisStats out{};
    const auto first = values.begin() + static_cast<std::ptrdiff_t>(index(a, Stat::min));
    std::copy(first, first + kStatsPerAxis, out.begin());
    return out;
}

bool FeatureVector::all_finite() const noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::string_view stat_name(Stat s) noexcept {
    static constexpr std::array<std::string_view, kStatsPerAxis> kNames = {
        "min", "max", "std", "median", "mean", "p25", "p75",
        "iqr", "skew", "kurt", "zc", "spec_energy", "spec_entropy"};
    return kNames[static_cast<std::size_t>(s)];
}

const std::array<std::string, kFeatureCount>& FeatureVector::names() {
    static const std::array<std::string, kFeatureCount> kNames = [] {
        std::array<std::string, kFeatureCount> out;
        constexpr std::array<char, 3> prefixes = {'x', 'y', 'z'};
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t s = 0; s < kStatsPerAxis; ++s) {
                out[a * kStatsPerAxis + s] =
                    std::string(1, prefixes[a]) + "_" + std::string(stat_name(static_cast<Stat>(s)));
            }
        }
        return out;
    }();
    return kNames;
}

void validate_window(std::span<const double> w) {
    if (w.size() < 2) throw ShapeError("axis window needs at least 2 samples, got " + std::to_string(w.size()));
    for (double v : w) {
        if (!std::isfinite(v)) throw ShapeError("axis window contains a non-finite value");
    }
}

std::size_t zero_crossings(std::span<const double> w) {
    validate_window(w);
    double sum = 0.0;
    for (double v : w) sum += v;
    const double mean = sum / static_cast<double>(w.size());

    std::size_t crossings = 0;
    int prev_sign = 0;
    for (double v : w) {
        const double c = v - mean;
        const int sign = (c > 0.0) - (c < 0.0);
        if (sign == 0) continue;
        if (prev_sign != 0 && sign != prev_sign) ++crossings;
        prev_sign = sign;
    }
    return crossings;
}

double spectral_energy(std::span<const double> w) {
    validate_window(w);
    std::vector<double> power;
    one_sided_power(w, power);
    return energy_from_power(power, w.size());
}

double spectral_entropy(std::span<const double> w) {
    validate_window(w);
    std::vector<double> power;
    one_sided_power(w, power);
    return entropy_from_power(power);
}

AxisStats axis_features(std::span<const double> w) {
    validate_window(w);
    const std::size_t m = w.size();
    const auto n = static_cast<double>(m);

    thread_local std::vector<double> sorted;
    sorted.assign(w.begin(), w.end());
    std::sort(sorted.begin(), sorted.end());

    // Moments are accumulated over the sorted copy so that every
    // order-statistic and moment field is exactly permutation-invariant.
    double sum = 0.0;
    for (double v : sorted) sum += v;
    const double mean = sum / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : sorted) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    AxisStats out{};
    auto put = [&out](Stat s, double v) { out[static_cast<std::size_t>(s)] = v; };
    put(Stat::min, sorted.front());
    put(Stat::max, sorted.back());
    put(Stat::std, std::sqrt(m2));
    put(Stat::median, interpolated_percentile(sorted, 0.5));
    put(Stat::mean, mean);
    const double p25 = interpolated_percentile(sorted, 0.25);
    const double p75 = interpolated_percentile(sorted, 0.75);
    put(Stat::p25, p25);
    put(Stat::p75, p75);
    put(Stat::iqr, p75 - p25);
    if (m2 < kMomentGuard) {
        put(Stat::skew, 0.0);
        put(Stat::kurt, 0.0);
    } else {
        put(Stat::skew, m3 / std::pow(m2, 1.5));
        put(Stat::kurt, m4 / (m2 * m2) - 3.0);
    }
    put(Stat::zc, static_cast<double>(zero_crossings(w)));

    thread_local std::vector<double> power;
    one_sided_power(w, power);
    put(Stat::spec_energy, energy_from_power(power, m));
    put(Stat::spec_entropy, entropy_from_power(power));
    return out;
}

FeatureVector window_features(std::span<const double> x, std::span<const double> y,
                              std::span<const double> z) {
    if (x.size() != y.size() || x.size() != z.size()) {
        throw ShapeError("axis windows differ in length: " + std::to_string(x.size()) + "/" +
                         std::to_string(y.size()) + "/" + std::to_string(z.size()));
    }
    FeatureVector fv;
    fv.set_axis(Axis::x, axis_features(x));
    fv.set_axis(Axis::y, axis_features(y));
    fv.set_axis(Axis::z, axis_features(z));
    return fv;
}

FeatureVector minute_aggregate(std::span<const FeatureVector> seconds, std::size_t min_seconds) {
    if (seconds.size() < std::max<std::size_t>(min_seconds, 1)) {
        throw InsufficientDataError("minute has " + std::to_string(seconds.size()) +
                                    " valid one-second windows, need " + std::to_string(min_seconds));
    }
    if (seconds.size() > kMaxSecondsPerMinute) {
        throw ShapeError("minute has " + std::to_string(seconds.size()) + " one-second windows, max 60");
    }
    FeatureVector out;
    for (const auto& s : seconds) {
        for (std::size_t i = 0; i < kFeatureCount; ++i) out[i] += s[i];
    }
    const auto n = static_cast<double>(seconds.size());
    for (auto& v : out.values) v /= n;
    return out;
}

}  // namespace accelhr
