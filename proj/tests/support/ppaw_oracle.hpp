#pragma once

// Naive re-execution of the online loop, step by step, on top of the
// exhaustive tree oracle. Only the seed plumbing (bootstrap draws, scan
// order, refit salts) is borrowed from the library.

#include <accelhr/ppaw.hpp>
#include <accelhr/rng.hpp>

#include <cmath>
#include <deque>
#include <vector>

#include "oracles.hpp"

namespace oracle {

struct Outcome {
    bool queried = false;
    double predicted = 0.0;
    double variance = 0.0;
    int err = 0;
    int ttl = 0;
};

inline std::vector<Outcome> ppaw(const accelhr::PpawConfig& cfg, const std::vector<accelhr::MinuteRecord>& stream) {
    using namespace accelhr;
    std::deque<LabeledRow> buffer;
    for (std::size_t i = 0; i < cfg.N; ++i) buffer.push_back({stream[i].features, *stream[i].bpm});

    std::vector<Node> learners;
    std::vector<long> ages(cfg.L, 0);
    for (std::size_t i = 0; i < cfg.L; ++i) {
        std::vector<LabeledRow> sample(buffer.begin(), buffer.end());
        if (sample.size() >= 4) {
            sample.clear();
            for (auto k : bootstrap_indices(cfg.N, cfg.seed, i)) sample.push_back(buffer[k]);
        }
        learners.push_back(grow(sample, feature_order(learner_tree_seed(cfg.seed, i)), 0, cfg.tree.max_depth));
    }
    auto refit = [&](std::size_t i, std::int64_t minute, RefitReason why) {
        const auto order = feature_order(mix_seed({cfg.seed, refit_salt(minute, i, why)}));
        learners[i] = grow(std::vector<LabeledRow>(buffer.begin(), buffer.end()), order, 0, cfg.tree.max_depth);
    };

    std::deque<double> history;
    std::vector<Outcome> out;
    for (std::size_t t = cfg.N; t < stream.size(); ++t) {
        const auto& rec = stream[t];
        std::vector<double> preds;
        for (const auto& l : learners) preds.push_back(predict(l, rec.features));
        for (auto& a : ages) ++a;
        double mean = 0.0;
        for (double p : preds) mean += p;
        mean /= static_cast<double>(preds.size());
        double var = 0.0;
        for (double p : preds) var += (p - mean) * (p - mean);
        var /= static_cast<double>(preds.size());

        Outcome o;
        o.predicted = mean;
        o.variance = var;

        bool outlier = true;
        if (history.size() == cfg.N) {
            double hm = 0.0;
            for (double h : history) hm += h;
            hm /= static_cast<double>(cfg.N);
            double hs = 0.0;
            for (double h : history) hs += (h - hm) * (h - hm);
            outlier = var > hm + cfg.O * std::sqrt(hs / static_cast<double>(cfg.N));
            history.pop_front();
        }
        history.push_back(var);

        if (outlier) {
            o.queried = true;
            const double truth = *rec.bpm;
            buffer.push_back({rec.features, truth});
            if (buffer.size() > cfg.N) buffer.pop_front();
            for (std::size_t i = 0; i < cfg.L; ++i) refit(i, rec.minute_index, RefitReason::teach);
            for (std::size_t i = 0; i < cfg.L; ++i) {
                if (std::abs(preds[i] - truth) > cfg.T) {
                    refit(i, rec.minute_index, RefitReason::error);
                    ages[i] = 0;
                    ++o.err;
                }
            }
        }
        for (std::size_t i = 0; i < cfg.L; ++i) {
            if (ages[i] >= cfg.TTL) {
                refit(i, rec.minute_index, RefitReason::ttl);
                ages[i] = 0;
                ++o.ttl;
            }
        }
        out.push_back(o);
    }
    return out;
}

}  // namespace oracle
