#include "ferret/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace ferret::metrics {

double accuracy(const ScoredBatch& batch, double threshold) {
    batch.validate();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < batch.scores.size(); ++i) {
        const int predicted = batch.scores[i] >= threshold ? 1 : 0;
        if (predicted == batch.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(batch.scores.size());
}

double average_precision(const ScoredBatch& batch) {
    batch.validate();
    const std::size_t n = batch.scores.size();
    std::size_t positives = 0;
    for (int l : batch.labels) positives += l;
    require(positives > 0, "average_precision: no positive labels");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (batch.scores[a] != batch.scores[b]) return batch.scores[a] > batch.scores[b];
        return a < b;
    });

    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (batch.labels[order[k]] == 1) {
            ++hits;
            const double precision_at_k = static_cast<double>(hits) / static_cast<double>(k + 1);
            ap += precision_at_k / static_cast<double>(positives);
        }
    }
    return ap;
}

}  // namespace ferret::metrics
