#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "accelhr/ingest.hpp"
#include "accelhr/ppaw.hpp"
#include "accelhr/regress.hpp"

namespace accelhr {

/// Throw MetricError on empty or mismatched inputs.
double mae(std::span<const double> pred, std::span<const double> truth);
double mse(std::span<const double> pred, std::span<const double> truth);

struct RunReport {
    double mae = 0.0;
    double mse = 0.0;
    double mae_unqueried = 0.0;  // 0 when every scored minute was queried
    double query_fraction = 0.0;
    std::int64_t n_minutes = 0;
    nlohmann::ordered_json config;
    std::optional<std::string> trace_path;  // not serialized
};

/// `{"mae","mse","mae_unqueried","query_fraction","n_minutes","config"}`,
/// two-space indented, trailing newline.
std::string report_to_json(const RunReport& r);

struct PlotRow {
    std::int64_t minute_index = 0;
    std::optional<double> true_bpm;
    std::optional<double> predicted_bpm;  // empty for bootstrap minutes
};

/// `minute_index,true_bpm,predicted_bpm`
void write_plot_csv(std::ostream& out, std::span<const PlotRow> rows);

struct OfflineConfig {
    std::size_t L = 10;
    TreeParams tree;
    double train_frac = 0.6;
    std::uint64_t seed = 42;

    void validate() const;
};

struct OfflineResult {
    RunReport forest;
    RunReport dummy;
    std::vector<PlotRow> predictions;  // forest predictions on the test minutes
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded uniform shuffle of 0..n-1, first round(train_frac * n) go to train
/// (clamped so both sides are non-empty).
SplitIndices shuffle_split(std::size_t n, double train_frac, std::uint64_t seed);

/// Offline i.i.d. regime within one phase. Needs >= 10 labeled records.
OfflineResult run_offline_same_phase(std::span<const MinuteRecord> records, const OfflineConfig& cfg);

/// Fit on every train minute, score every test minute.
OfflineResult run_offline_cross_phase(std::span<const MinuteRecord> train, std::span<const MinuteRecord> test,
                                      const OfflineConfig& cfg);

struct PpawExperiment {
    RunReport report;
    std::vector<BootstrapMinute> bootstrap;
    std::vector<StepOutcome> steps;
};

/// Scores steps after the initial N with their pre-query predictions;
/// query_fraction counts the N bootstrap minutes as queried.
RunReport summarize_ppaw(const PpawConfig& cfg, std::span<const BootstrapMinute> bootstrap,
                         std::span<const StepOutcome> steps, std::span<const MinuteRecord> truth);

PpawExperiment run_ppaw_experiment(std::span<const MinuteRecord> records, const PpawConfig& cfg);

/// One run_ppaw_experiment per O value, otherwise identical configuration.
std::vector<RunReport> sweep_O(std::span<const MinuteRecord> records, const PpawConfig& base,
                               std::span<const double> O_values);

/// `O,mae,mse,query_fraction`
void write_sweep_csv(std::ostream& out, std::span<const double> O_values, std::span<const RunReport> reports);

/// Plot rows for a PPAW trace; truth comes from `records` where available.
std::vector<PlotRow> plot_rows(std::span<const TraceRow> trace, std::span<const MinuteRecord> records);

}  // namespace accelhr
