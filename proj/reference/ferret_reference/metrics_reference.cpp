#include "ferret_reference/metrics_reference.hpp"

#include <algorithm>
#include <numeric>

namespace ferret::reference {

double average_precision(const metrics::ScoredBatch& batch) {
    batch.validate();
    const std::size_t n = batch.scores.size();
    std::size_t total_pos = 0;
    for (int l : batch.labels) total_pos += l;
    if (total_pos == 0) throw std::invalid_argument("no positives");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (batch.scores[a] != batch.scores[b]) return batch.scores[a] > batch.scores[b];
        return a < b;
    });

    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        // recount everything over the top-k prefix
        std::size_t hits = 0;
        for (std::size_t j = 0; j < k; ++j)
            if (batch.labels[order[j]] == 1) ++hits;
        const double precision = static_cast<double>(hits) / static_cast<double>(k);
        const double recall = static_cast<double>(hits) / static_cast<double>(total_pos);
        if (batch.labels[order[k - 1]] == 1) ap += precision * (recall - prev_recall);
        prev_recall = recall;
    }
    return ap;
}

}  // namespace ferret::reference
