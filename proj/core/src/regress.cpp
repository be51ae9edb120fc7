#include "accelhr/regress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "accelhr/error.hpp"
#include "accelhr/rng.hpp"

namespace accelhr {

namespace {

constexpr std::uint64_t kBootstrapStream = 0xB007;
constexpr std::uint64_t kTreeStream = 0x7EE;
constexpr std::uint64_t kOrderStream = 0x0D3;

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double sse = 0.0;
};

double midpoint(double a, double b) {
    const double m = a + (b - a) / 2.0;
    return m < b ? m : a;
}

class TreeBuilder {
public:
    TreeBuilder(std::span<const LabeledRow> data, const TreeParams& params, std::uint64_t seed)
        : data_(data), params_(params), order_(feature_order(seed)) {}

    RegressionTree build() {
        std::vector<std::size_t> idx(data_.size());
        std::iota(idx.begin(), idx.end(), 0);
        grow(idx, 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t>& idx, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        double sum = 0.0;
        double lo = data_[idx.front()].bpm, hi = lo;
        for (auto i : idx) {
            sum += data_[i].bpm;
            lo = std::min(lo, data_[i].bpm);
            hi = std::max(hi, data_[i].bpm);
        }
        const double mean = sum / static_cast<double>(idx.size());
        tree_.nodes[id].value = mean;

        const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
        if (depth >= params_.max_depth || idx.size() < 2 * min_leaf || lo == hi) return id;

        double node_sse = 0.0;
        for (auto i : idx) node_sse += (data_[i].bpm - mean) * (data_[i].bpm - mean);

        auto split = best_split(idx, mean, node_sse);
        if (!split) return id;

        std::vector<std::size_t> left, right;
        for (auto i : idx) {
            (data_[i].features[split->feature] <= split->threshold ? left : right).push_back(i);
        }
        tree_.nodes[id].feature = static_cast<int>(split->feature);
        tree_.nodes[id].threshold = split->threshold;
        idx.clear();
        idx.shrink_to_fit();
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        tree_.nodes[id].left = l;
        tree_.nodes[id].right = r;
        return id;
    }

    std::optional<Split> best_split(const std::vector<std::size_t>& idx, double mean, double node_sse) {
        const std::size_t n = idx.size();
        const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
        const double tol = 1e-10 * std::max(1.0, node_sse);

        std::optional<Split> best;
        sorted_.assign(idx.begin(), idx.end());
        for (std::size_t f : order_) {
            std::sort(sorted_.begin(), sorted_.end(), [&](std::size_t a, std::size_t b) {
                const double va = data_[a].features[f], vb = data_[b].features[f];
                return va < vb || (va == vb && a < b);
            });
            // Centered prefix sums keep the SSE subtraction well conditioned.
            prefix_.resize(n + 1);
            prefix_sq_.resize(n + 1);
            prefix_[0] = prefix_sq_[0] = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double d = data_[sorted_[k]].bpm - mean;
                prefix_[k + 1] = prefix_[k] + d;
                prefix_sq_[k + 1] = prefix_sq_[k] + d * d;
            }

            candidates_.clear();
            for (std::size_t k = min_leaf; k + min_leaf <= n; ++k) {
                const double a = data_[sorted_[k - 1]].features[f];
                const double b = data_[sorted_[k]].features[f];
                if (a < b) candidates_.push_back(k);
            }
            if (candidates_.empty()) continue;
            thin_candidates();

            for (std::size_t k : candidates_) {
                const auto nl = static_cast<double>(k), nr = static_cast<double>(n - k);
                const double sl = prefix_[k], sr = prefix_[n] - prefix_[k];
                const double sse = (prefix_sq_[k] - sl * sl / nl) + (prefix_sq_[n] - prefix_sq_[k] - sr * sr / nr);
                if (!best || sse < best->sse - tol) {
                    const double a = data_[sorted_[k - 1]].features[f];
                    const double b = data_[sorted_[k]].features[f];
                    best = Split{f, midpoint(a, b), sse};
                }
            }
        }
        if (!best || !(best->sse < node_sse - tol)) return std::nullopt;
        return best;
    }

    void thin_candidates() {
        if (!params_.n_candidate_splits) return;
        const auto limit = static_cast<std::size_t>(*params_.n_candidate_splits);
        const std::size_t c = candidates_.size();
        if (c <= limit) return;
        std::vector<std::size_t> kept;
        kept.reserve(limit);
        for (std::size_t j = 0; j < limit; ++j) kept.push_back(candidates_[(2 * j + 1) * c / (2 * limit)]);
        candidates_ = std::move(kept);
    }

    std::span<const LabeledRow> data_;
    const TreeParams& params_;
    std::vector<std::size_t> order_;
    RegressionTree tree_;
    std::vector<std::size_t> sorted_, candidates_;
    std::vector<double> prefix_, prefix_sq_;
};

void check_rows(std::span<const LabeledRow> data) {
    if (data.empty()) throw FitError("cannot fit on empty data");
    for (const auto& r : data) {
        if (!std::isfinite(r.bpm) || !r.features.all_finite()) throw FitError("training data contains non-finite values");
    }
}

}  // namespace

void TreeParams::validate() const {
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    if (n_candidate_splits && *n_candidate_splits < 1) throw ConfigError("n_candidate_splits must be >= 1");
}

int RegressionTree::depth() const {
    if (nodes.empty()) return 0;
    int deepest = 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        const auto& node = nodes[static_cast<std::size_t>(id)];
        if (!node.is_leaf()) {
            stack.emplace_back(node.left, d + 1);
            stack.emplace_back(node.right, d + 1);
        }
    }
    return deepest;
}

std::vector<std::size_t> feature_order(std::uint64_t seed) {
    std::vector<std::size_t> order(kFeatureCount);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed({seed, kOrderStream}));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    return order;
}

RegressionTree fit_tree(std::span<const LabeledRow> data, const TreeParams& params, std::uint64_t seed) {
    check_rows(data);
    params.validate();
    return TreeBuilder(data, params, seed).build();
}

double predict_tree(const RegressionTree& tree, const FeatureVector& x) {
    std::size_t id = 0;
    while (!tree.nodes[id].is_leaf()) {
        const auto& node = tree.nodes[id];
        id = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
    }
    return tree.nodes[id].value;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::size_t learner) {
    Rng rng(mix_seed({seed, kBootstrapStream, learner}));
    std::vector<std::size_t> out(n);
    for (auto& i : out) i = rng.below(n);
    return out;
}

std::uint64_t learner_tree_seed(std::uint64_t seed, std::size_t learner) {
    return mix_seed({seed, kTreeStream, learner});
}

Ensemble fit_ensemble(std::span<const LabeledRow> data, std::size_t n_learners, const TreeParams& params,
                      std::uint64_t seed) {
    check_rows(data);
    params.validate();
    if (n_learners < 1) throw ConfigError("ensemble needs at least one learner");
    Ensemble e;
    e.params = params;
    e.rng_seed = seed;
    e.ages.assign(n_learners, 0);
    e.learners.reserve(n_learners);
    const bool bootstrap = data.size() >= 4;
    LabeledSet sample;
    for (std::size_t i = 0; i < n_learners; ++i) {
        const auto tree_seed = learner_tree_seed(seed, i);
        if (!bootstrap) {
            e.learners.push_back(fit_tree(data, params, tree_seed));
            continue;
        }
        sample.clear();
        for (auto k : bootstrap_indices(data.size(), seed, i)) sample.push_back(data[k]);
        e.learners.push_back(fit_tree(sample, params, tree_seed));
    }
    return e;
}

EnsemblePrediction peek_ensemble(const Ensemble& e, const FeatureVector& x) {
    EnsemblePrediction p;
    p.per_learner.reserve(e.size());
    double sum = 0.0;
    for (const auto& t : e.learners) {
        p.per_learner.push_back(predict_tree(t, x));
        sum += p.per_learner.back();
    }
    const auto n = static_cast<double>(e.size());
    p.mean = sum / n;
    double ss = 0.0;
    for (double v : p.per_learner) ss += (v - p.mean) * (v - p.mean);
    p.variance = ss / n;
    return p;
}

EnsemblePrediction predict_ensemble(Ensemble& e, const FeatureVector& x) {
    auto p = peek_ensemble(e, x);
    for (auto& a : e.ages) ++a;
    return p;
}

void refit_learner(Ensemble& e, std::size_t i, std::span<const LabeledRow> recent, std::uint64_t seed_salt) {
    if (i >= e.size()) throw ConfigError("learner index out of range");
    e.learners[i] = fit_tree(recent, e.params, mix_seed({e.rng_seed, seed_salt}));
}

void retrain_learner(Ensemble& e, std::size_t i, std::span<const LabeledRow> recent, std::uint64_t seed_salt) {
    refit_learner(e, i, recent, seed_salt);
    e.ages[i] = 0;
}

double dummy_fit(std::span<const LabeledRow> data) {
    check_rows(data);
    double sum = 0.0;
    for (const auto& r : data) sum += r.bpm;
    return sum / static_cast<double>(data.size());
}

// --- serialization ------------------------------------------------------------------

nlohmann::ordered_json tree_params_to_json(const TreeParams& p) {
    nlohmann::ordered_json j;
    j["max_depth"] = p.max_depth;
    j["min_samples_leaf"] = p.min_samples_leaf;
    if (p.n_candidate_splits) {
        j["n_candidate_splits"] = *p.n_candidate_splits;
    } else {
        j["n_candidate_splits"] = nullptr;
    }
    return j;
}

TreeParams tree_params_from_json(const nlohmann::json& j) {
    TreeParams p;
    try {
        p.max_depth = j.at("max_depth").get<int>();
        p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
        if (j.contains("n_candidate_splits") && !j.at("n_candidate_splits").is_null()) {
            p.n_candidate_splits = j.at("n_candidate_splits").get<int>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tree params: ") + e.what());
    }
    p.validate();
    return p;
}

nlohmann::ordered_json tree_to_json(const RegressionTree& t) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
        nlohmann::ordered_json j;
        j["feature"] = n.feature;
        j["threshold"] = n.threshold;
        j["left"] = n.left;
        j["right"] = n.right;
        j["value"] = n.value;
        nodes.push_back(std::move(j));
    }
    return nlohmann::ordered_json{{"nodes", std::move(nodes)}};
}

RegressionTree tree_from_json(const nlohmann::json& j) {
    RegressionTree t;
    try {
        for (const auto& n : j.at("nodes")) {
            t.nodes.push_back({n.at("feature").get<int>(), n.at("threshold").get<double>(), n.at("left").get<int>(),
                               n.at("right").get<int>(), n.at("value").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tree: ") + e.what());
    }
    const auto count = static_cast<int>(t.nodes.size());
    if (count == 0) throw ConfigError("tree has no nodes");
    for (const auto& n : t.nodes) {
        if (n.is_leaf()) continue;
        if (n.feature >= static_cast<int>(kFeatureCount) || n.left <= 0 || n.right <= 0 || n.left >= count ||
            n.right >= count) {
            throw ConfigError("tree node references out of range");
        }
    }
    return t;
}

nlohmann::ordered_json ensemble_to_json(const Ensemble& e) {
    nlohmann::ordered_json learners = nlohmann::ordered_json::array();
    for (const auto& t : e.learners) learners.push_back(tree_to_json(t));
    nlohmann::ordered_json j;
    j["params"] = tree_params_to_json(e.params);
    j["seed"] = e.rng_seed;
    j["ages"] = e.ages;
    j["learners"] = std::move(learners);
    return j;
}

Ensemble ensemble_from_json(const nlohmann::json& j) {
    Ensemble e;
    try {
        e.params = tree_params_from_json(j.at("params"));
        e.rng_seed = j.at("seed").get<std::uint64_t>();
        e.ages = j.at("ages").get<std::vector<std::int64_t>>();
        for (const auto& t : j.at("learners")) e.learners.push_back(tree_from_json(t));
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("ensemble: ") + ex.what());
    }
    if (e.learners.empty() || e.learners.size() != e.ages.size()) {
        throw ConfigError("ensemble learners and ages must be non-empty and of equal length");
    }
    return e;
}

}  // namespace accelhr
