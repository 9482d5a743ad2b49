#pragma once

#include <cstddef>
#include <vector>

#include "ferret/tensor.hpp"

namespace ferret::metrics {

/// Classifier outputs for a batch: probabilities in [0,1] with binary labels.
struct ScoredBatch {
    std::vector<double> scores;
    std::vector<int> labels;

    void validate() const {
        require(!scores.empty(), "metrics: empty batch");
        require(scores.size() == labels.size(), "metrics: scores/labels length mismatch");
        for (int l : labels) require(l == 0 || l == 1, "metrics: labels must be binary");
    }
};

/// Fraction of samples where (score >= threshold) matches the label.
double accuracy(const ScoredBatch& batch, double threshold = 0.5);

/// Non-interpolated average precision: samples ranked by descending score
/// (ties broken by original index), AP accumulates precision@k at each
/// positive hit weighted by the recall step 1/P.
double average_precision(const ScoredBatch& batch);

}  // namespace ferret::metrics
