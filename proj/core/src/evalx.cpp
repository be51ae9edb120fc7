#include "accelhr/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "accelhr/error.hpp"
#include "accelhr/rng.hpp"
#include "text.hpp"

namespace accelhr {

namespace {

constexpr std::size_t kMinOfflineRecords = 10;
constexpr std::uint64_t kSplitStream = 0x5917;

void check_pair(std::span<const double> pred, std::span<const double> truth) {
    if (pred.empty()) throw MetricError("empty prediction list");
    if (pred.size() != truth.size()) {
        throw MetricError("length mismatch: " + std::to_string(pred.size()) + " predictions, " +
                          std::to_string(truth.size()) + " truths");
    }
}

LabeledSet labeled(std::span<const MinuteRecord> records, std::string_view what) {
    LabeledSet rows;
    rows.reserve(records.size());
    for (const auto& r : records) {
        if (!r.bpm) throw ExperimentError(std::string(what) + " minute " + std::to_string(r.minute_index) + " is unlabeled");
        rows.push_back({r.features, *r.bpm});
    }
    return rows;
}

nlohmann::ordered_json offline_config_json(const OfflineConfig& cfg, std::string_view mode) {
    nlohmann::ordered_json j;
    j["mode"] = mode;
    j["L"] = cfg.L;
    if (mode == "same_phase") j["train_frac"] = cfg.train_frac;
    j["seed"] = cfg.seed;
    j["tree"] = tree_params_to_json(cfg.tree);
    return j;
}

OfflineResult evaluate_offline(const LabeledSet& train, std::span<const MinuteRecord> test_records,
                               const OfflineConfig& cfg, nlohmann::ordered_json config) {
    auto forest = fit_ensemble(train, cfg.L, cfg.tree, cfg.seed);
    const double dummy = dummy_fit(train);

    std::vector<double> truth, forest_pred, dummy_pred;
    OfflineResult out;
    for (const auto& r : test_records) {
        if (!r.bpm) throw ExperimentError("test minute " + std::to_string(r.minute_index) + " is unlabeled");
        const double p = peek_ensemble(forest, r.features).mean;
        truth.push_back(*r.bpm);
        forest_pred.push_back(p);
        dummy_pred.push_back(dummy_predict(dummy, r.features));
        out.predictions.push_back({r.minute_index, *r.bpm, p});
    }

    auto fill = [&](RunReport& rep, const std::vector<double>& pred, std::string_view model) {
        rep.mae = mae(pred, truth);
        rep.mse = mse(pred, truth);
        rep.mae_unqueried = rep.mae;
        rep.query_fraction = 1.0;
        rep.n_minutes = static_cast<std::int64_t>(truth.size());
        rep.config = config;
        rep.config["model"] = model;
        rep.config["n_train"] = train.size();
    };
    fill(out.forest, forest_pred, "forest");
    fill(out.dummy, dummy_pred, "dummy_mean");
    return out;
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
    check_pair(pred, truth);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
    return sum / static_cast<double>(pred.size());
}

double mse(std::span<const double> pred, std::span<const double> truth) {
    check_pair(pred, truth);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return sum / static_cast<double>(pred.size());
}

std::string report_to_json(const RunReport& r) {
    nlohmann::ordered_json j;
    j["mae"] = r.mae;
    j["mse"] = r.mse;
    j["mae_unqueried"] = r.mae_unqueried;
    j["query_fraction"] = r.query_fraction;
    j["n_minutes"] = r.n_minutes;
    j["config"] = r.config.is_null() ? nlohmann::ordered_json::object() : r.config;
    return j.dump(2) + "\n";
}

void write_plot_csv(std::ostream& out, std::span<const PlotRow> rows) {
    std::string buf = "minute_index,true_bpm,predicted_bpm\n";
    for (const auto& r : rows) {
        detail::append_int(buf, r.minute_index);
        buf.push_back(',');
        if (r.true_bpm) detail::append_double(buf, *r.true_bpm);
        buf.push_back(',');
        if (r.predicted_bpm) detail::append_double(buf, *r.predicted_bpm);
        buf.push_back('\n');
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed");
}

void OfflineConfig::validate() const {
    if (L < 1) throw ConfigError("L must be >= 1");
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train_frac must lie in (0, 1)");
    tree.validate();
}

SplitIndices shuffle_split(std::size_t n, double train_frac, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(mix_seed({seed, kSplitStream}));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, n > 1 ? 1 : 0, n > 1 ? n - 1 : n);
    SplitIndices s;
    s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    return s;
}

OfflineResult run_offline_same_phase(std::span<const MinuteRecord> records, const OfflineConfig& cfg) {
    cfg.validate();
    if (records.size() < kMinOfflineRecords) {
        throw ExperimentError("same-phase experiment needs >= 10 records, got " + std::to_string(records.size()));
    }
    for (const auto& r : records) {
        if (r.phase != records.front().phase) throw ExperimentError("same-phase experiment given several phases");
    }
    const auto split = shuffle_split(records.size(), cfg.train_frac, cfg.seed);
    std::vector<MinuteRecord> train_records, test_records;
    for (auto i : split.train) train_records.push_back(records[i]);
    for (auto i : split.test) test_records.push_back(records[i]);
    // Report test minutes in time order.
    std::sort(test_records.begin(), test_records.end(),
              [](const MinuteRecord& a, const MinuteRecord& b) { return a.minute_index < b.minute_index; });
    auto config = offline_config_json(cfg, "same_phase");
    config["phase"] = records.front().phase;
    return evaluate_offline(labeled(train_records, "train"), test_records, cfg, std::move(config));
}

OfflineResult run_offline_cross_phase(std::span<const MinuteRecord> train, std::span<const MinuteRecord> test,
                                      const OfflineConfig& cfg) {
    cfg.validate();
    if (train.size() < kMinOfflineRecords || test.size() < kMinOfflineRecords) {
        throw ExperimentError("cross-phase experiment needs >= 10 records on each side");
    }
    for (const auto& a : train) {
        if (a.phase == test.front().phase) throw ExperimentError("train and test phases overlap");
    }
    auto config = offline_config_json(cfg, "cross_phase");
    config["train_phase"] = train.front().phase;
    config["test_phase"] = test.front().phase;
    return evaluate_offline(labeled(train, "train"), test, cfg, std::move(config));
}

RunReport summarize_ppaw(const PpawConfig& cfg, std::span<const BootstrapMinute> bootstrap,
                         std::span<const StepOutcome> steps, std::span<const MinuteRecord> truth) {
    auto lookup = [&truth](std::int64_t minute) -> std::optional<double> {
        auto it = std::lower_bound(truth.begin(), truth.end(), minute,
                                   [](const MinuteRecord& r, std::int64_t m) { return r.minute_index < m; });
        if (it == truth.end() || it->minute_index != minute) return std::nullopt;
        return it->bpm;
    };

    std::vector<double> pred, real, pred_unq, real_unq;
    std::int64_t queried = static_cast<std::int64_t>(bootstrap.size());
    for (const auto& s : steps) {
        if (s.queried) ++queried;
        auto t = lookup(s.minute_index);
        if (!t && s.true_bpm) t = s.true_bpm;
        if (!t) continue;
        pred.push_back(s.predicted_bpm);
        real.push_back(*t);
        if (!s.queried) {
            pred_unq.push_back(s.predicted_bpm);
            real_unq.push_back(*t);
        }
    }

    RunReport rep;
    rep.n_minutes = static_cast<std::int64_t>(bootstrap.size() + steps.size());
    rep.query_fraction = rep.n_minutes > 0 ? static_cast<double>(queried) / static_cast<double>(rep.n_minutes) : 0.0;
    if (!pred.empty()) {
        rep.mae = mae(pred, real);
        rep.mse = mse(pred, real);
    }
    if (!pred_unq.empty()) rep.mae_unqueried = mae(pred_unq, real_unq);
    rep.config = ppaw_config_to_json(cfg);
    rep.config["n_scored"] = pred.size();
    return rep;
}

PpawExperiment run_ppaw_experiment(std::span<const MinuteRecord> records, const PpawConfig& cfg) {
    PpawExperiment out;
    out.steps = ppaw_run(cfg, records);
    for (std::size_t i = 0; i < cfg.N; ++i) out.bootstrap.push_back({records[i].minute_index, *records[i].bpm});
    out.report = summarize_ppaw(cfg, out.bootstrap, out.steps, records);
    return out;
}

std::vector<RunReport> sweep_O(std::span<const MinuteRecord> records, const PpawConfig& base,
                               std::span<const double> O_values) {
    if (O_values.empty()) throw ConfigError("sweep needs at least one O value");
    std::vector<RunReport> out;
    for (double o : O_values) {
        auto cfg = base;
        cfg.O = o;
        out.push_back(run_ppaw_experiment(records, cfg).report);
    }
    return out;
}

void write_sweep_csv(std::ostream& out, std::span<const double> O_values, std::span<const RunReport> reports) {
    std::string buf = "O,mae,mse,query_fraction\n";
    for (std::size_t i = 0; i < O_values.size() && i < reports.size(); ++i) {
        detail::append_double(buf, O_values[i]);
        buf.push_back(',');
        detail::append_double(buf, reports[i].mae);
        buf.push_back(',');
        detail::append_double(buf, reports[i].mse);
        buf.push_back(',');
        detail::append_double(buf, reports[i].query_fraction);
        buf.push_back('\n');
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed");
}

std::vector<PlotRow> plot_rows(std::span<const TraceRow> trace, std::span<const MinuteRecord> records) {
    std::vector<PlotRow> out;
    out.reserve(trace.size());
    for (const auto& t : trace) {
        PlotRow row{t.minute_index, t.true_bpm, t.predicted_bpm};
        auto it = std::lower_bound(records.begin(), records.end(), t.minute_index,
                                   [](const MinuteRecord& r, std::int64_t m) { return r.minute_index < m; });
        if (it != records.end() && it->minute_index == t.minute_index && it->bpm) row.true_bpm = it->bpm;
        out.push_back(row);
    }
    return out;
}

}  // namespace accelhr
