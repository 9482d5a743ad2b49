#include "ferret/train.hpp"

#include <cmath>
#include <numeric>

namespace ferret::train {

namespace {

void stack_into_batch(Tensor& batch, int slot, const Image& img) {
    require(img.ndim() == 3 && img.dim(0) == batch.dim(1) && img.dim(1) == batch.dim(2) &&
                img.dim(2) == batch.dim(3),
            "batch: sample shape mismatch");
    std::copy_n(img.ptr(), img.numel(), batch.ptr() + static_cast<std::size_t>(slot) * img.numel());
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<EpochStats> fit(net::FerretNet& model, const data::LabeledDataset& dataset,
                            const TrainConfig& config, bool use_lpd,
                            const lpd::NeighborhoodSpec& spec) {
    config.validate();
    spec.validate();
    require(dataset.count(0) > 0 && dataset.count(1) > 0, "single-class dataset");

    nn::AdamConfig<float> acfg;
    acfg.lr = static_cast<float>(config.lr);
    acfg.beta1 = static_cast<float>(config.beta1);
    acfg.beta2 = static_cast<float>(config.beta2);
    acfg.weight_decay = static_cast<float>(config.weight_decay);
    nn::Adam<float> opt(model.parameters(), acfg);

    model.reseed_dropout(config.seed ^ 0xD120F7ULL);
    Rng shuffle_rng(config.seed);
    const Rng stream_root(config.seed ^ 0x5A11CEULL);
    const std::size_t n = dataset.size();

    std::vector<EpochStats> history;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t correct = 0;

        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const int bs = static_cast<int>(std::min<std::size_t>(config.batch_size, n - start));
            Tensor batch({bs, 3, 224, 224});
            Tensor targets({bs});
            #pragma omp parallel for schedule(dynamic)
            for (int bi = 0; bi < bs; ++bi) {
                const std::size_t idx = order[start + bi];
                Rng sample_rng = stream_root.fork(
                    static_cast<std::uint64_t>(epoch) * n + idx);
                Image view = data::train_transform(dataset.image(idx), sample_rng);
                if (use_lpd) view = lpd::lpd_map(view, spec);
                stack_into_batch(batch, bi, view);
            }
            for (int bi = 0; bi < bs; ++bi)
                targets[bi] = static_cast<float>(dataset.label(order[start + bi]));

            Tensor logits = model.forward(batch, nn::Mode::Train);
            Tensor flat({bs});
            for (int bi = 0; bi < bs; ++bi) flat[bi] = logits[bi];
            auto [loss, dflat] = nn::bce_with_logits_loss(flat, targets);
            loss_sum += static_cast<double>(loss) * bs;
            for (int bi = 0; bi < bs; ++bi)
                correct += (sigmoid(flat[bi]) >= 0.5 ? 1 : 0) == static_cast<int>(targets[bi]);

            Tensor dlogits({bs, 1});
            for (int bi = 0; bi < bs; ++bi) dlogits[bi] = dflat[bi];
            opt.zero_grad();
            model.backward(dlogits);
            opt.step();
        }
        history.push_back({loss_sum / static_cast<double>(n),
                           static_cast<double>(correct) / static_cast<double>(n)});
    }
    return history;
}

EvalResult evaluate(net::FerretNet& model, const data::LabeledDataset& dataset, bool use_lpd,
                    const lpd::NeighborhoodSpec& spec,
                    const std::optional<data::PerturbationSpec>& perturbation, std::uint64_t seed,
                    int batch_size) {
    spec.validate();
    require(batch_size >= 1, "evaluate: batch_size must be >= 1");
    const std::size_t n = dataset.size();
    require(n > 0, "evaluate: empty dataset");
    const Rng stream_root(seed ^ 0xE7A1ULL);

    metrics::ScoredBatch scored;
    scored.scores.resize(n);
    scored.labels.resize(n);

    for (std::size_t start = 0; start < n; start += batch_size) {
        const int bs = static_cast<int>(std::min<std::size_t>(batch_size, n - start));
        Tensor batch({bs, 3, 256, 256});
        #pragma omp parallel for schedule(dynamic)
        for (int bi = 0; bi < bs; ++bi) {
            const std::size_t idx = start + bi;
            Image img = dataset.image(idx);
            if (perturbation) {
                Rng sample_rng = stream_root.fork(idx);
                img = data::perturb(img, *perturbation, sample_rng);
            }
            Image view = data::eval_transform(img);
            if (use_lpd) view = lpd::lpd_map(view, spec);
            stack_into_batch(batch, bi, view);
        }
        Tensor logits = model.forward(batch, nn::Mode::Eval);
        for (int bi = 0; bi < bs; ++bi) {
            scored.scores[start + bi] = sigmoid(logits[bi]);
            scored.labels[start + bi] = dataset.label(start + bi);
        }
    }

    EvalResult r;
    r.count = n;
    r.acc = metrics::accuracy(scored);
    r.ap = metrics::average_precision(scored);
    return r;
}

double predict_probability(net::FerretNet& model, const Image& network_input) {
    Tensor batch({1, network_input.dim(0), network_input.dim(1), network_input.dim(2)});
    std::copy_n(network_input.ptr(), network_input.numel(), batch.ptr());
    Tensor logits = model.forward(batch, nn::Mode::Eval);
    return sigmoid(logits[0]);
}

}  // namespace ferret::train
