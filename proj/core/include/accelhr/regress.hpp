#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "accelhr/features.hpp"

namespace accelhr {

struct LabeledRow {
    FeatureVector features;
    double bpm = 0.0;

    friend bool operator==(const LabeledRow&, const LabeledRow&) = default;
};

using LabeledSet = std::vector<LabeledRow>;

struct TreeParams {
    int max_depth = 8;
    int min_samples_leaf = 1;
    /// Per feature and node, at most this many candidate thresholds (evenly
    /// spaced by rank). Unset means every midpoint is tried.
    std::optional<int> n_candidate_splits;

    void validate() const;

    friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

/// Flat node record; a node is a leaf when `feature < 0`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// CART regression tree. Inputs with `x[feature] <= threshold` go left.
struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    int depth() const;
    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

/// Seed-derived scan order over the 39 features. Exact split-quality ties
/// go to the feature appearing first in this order, then to the lowest
/// threshold; this is the only way the seed influences a fit.
std::vector<std::size_t> feature_order(std::uint64_t seed);

/// Greedy variance-reduction induction; leaves hold the subset mean.
/// Throws FitError on empty data.
RegressionTree fit_tree(std::span<const LabeledRow> data, const TreeParams& params, std::uint64_t seed);

double predict_tree(const RegressionTree& tree, const FeatureVector& x);

/// Indices of a size-n bootstrap resample for learner `learner`.
std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::size_t learner);

/// Derived seed for learner `learner` of an ensemble created with `seed`.
std::uint64_t learner_tree_seed(std::uint64_t seed, std::size_t learner);

/// Bagged trees plus per-learner age (predictions since last retrain).
struct Ensemble {
    std::vector<RegressionTree> learners;
    std::vector<std::int64_t> ages;
    TreeParams params;
    std::uint64_t rng_seed = 0;

    std::size_t size() const noexcept { return learners.size(); }
    friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

struct EnsemblePrediction {
    double mean = 0.0;
    double variance = 0.0;  // population variance across learners
    std::vector<double> per_learner;
};

/// Learner i fits a bootstrap resample drawn from (seed, i); with fewer
/// than 4 rows every learner sees the full data.
Ensemble fit_ensemble(std::span<const LabeledRow> data, std::size_t n_learners, const TreeParams& params,
                      std::uint64_t seed);

/// Ages every learner by one.
EnsemblePrediction predict_ensemble(Ensemble& e, const FeatureVector& x);

/// Prediction without touching ages.
EnsemblePrediction peek_ensemble(const Ensemble& e, const FeatureVector& x);

/// Replaces learner i with a full-data fit on `recent` (seeded by
/// (rng_seed, seed_salt)) and resets its age.
void retrain_learner(Ensemble& e, std::size_t i, std::span<const LabeledRow> recent, std::uint64_t seed_salt);

/// Same fit as retrain_learner but keeps the learner's age.
void refit_learner(Ensemble& e, std::size_t i, std::span<const LabeledRow> recent, std::uint64_t seed_salt);

/// Mean bpm of the training set.
double dummy_fit(std::span<const LabeledRow> data);
constexpr double dummy_predict(double model, const FeatureVector& /*x*/) noexcept { return model; }

nlohmann::ordered_json tree_params_to_json(const TreeParams& p);
TreeParams tree_params_from_json(const nlohmann::json& j);
nlohmann::ordered_json tree_to_json(const RegressionTree& t);
RegressionTree tree_from_json(const nlohmann::json& j);
nlohmann::ordered_json ensemble_to_json(const Ensemble& e);
Ensemble ensemble_from_json(const nlohmann::json& j);

}  // namespace accelhr
