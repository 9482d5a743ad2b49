#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ferret/data.hpp"
#include "ferret/ferretnet.hpp"
#include "ferret/lpd.hpp"
#include "ferret/metrics.hpp"

namespace ferret::train {

struct TrainConfig {
    double lr = 2e-4;
    double beta1 = 0.937;
    double beta2 = 0.999;
    double weight_decay = 5e-4;
    int batch_size = 32;
    int epochs = 100;
    std::uint64_t seed = 0;

    void validate() const {
        require(lr > 0 && beta1 > 0 && beta2 > 0 && weight_decay >= 0, "train: scalars must be positive");
        require(batch_size >= 1 && epochs >= 1, "train: batch_size and epochs must be >= 1");
    }
};

struct EpochStats {
    double loss = 0.0;
    double acc = 0.0;
};

/// One epoch of shuffled mini-batches per entry in the result. Pipeline per
/// sample: train_transform -> (optional) lpd_map -> forward(Train) ->
/// BCE-with-logits -> backward -> adam step. Fixed seed gives a
/// bit-reproducible run for a fixed thread count.
std::vector<EpochStats> fit(net::FerretNet& model, const data::LabeledDataset& dataset,
                            const TrainConfig& config, bool use_lpd,
                            const lpd::NeighborhoodSpec& spec);

struct EvalResult {
    double acc = 0.0;
    double ap = 0.0;
    std::size_t count = 0;
};

/// Deterministic evaluation: optional perturbation, then eval_transform,
/// optional lpd_map, eval-mode forward, sigmoid scores against labels.
EvalResult evaluate(net::FerretNet& model, const data::LabeledDataset& dataset, bool use_lpd,
                    const lpd::NeighborhoodSpec& spec,
                    const std::optional<data::PerturbationSpec>& perturbation, std::uint64_t seed,
                    int batch_size = 32);

/// Sigmoid of the single logit for one already-transformed input image.
double predict_probability(net::FerretNet& model, const Image& network_input);

}  // namespace ferret::train
