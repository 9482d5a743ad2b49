#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ferret/nn.hpp"

namespace ferret::net {

/// Scaling configuration: per-stage widths and block counts.
///   s: channels (32, 64),  blocks (2, 2)
///   b: channels (96, 192), blocks (2, 2)
///   l: channels (96, 192, 384, 768), blocks (2, 2, 6, 2)
struct FerretVariant {
    std::string name;
    std::vector<int> stage_channels;
    std::vector<int> stage_blocks;
};

FerretVariant variant_from_string(const std::string& name);

/// Width of the pre-pooling head convolution, shared by all variants.
inline constexpr int kHeadWidth = 1280;

/// Dual-path residual block at width C. The dilated depthwise path reads a
/// spread-out 5x5 footprint while the plain depthwise path keeps the local
/// 3x3 detail; both are fused at the concatenated width 2C and projected
/// back to C for the residual add.
template <typename T>
class FerretBlockT final : public nn::Layer<T> {
  public:
    FerretBlockT(const std::string& name, int channels, Rng& init)
        : c_(channels),
          path_dil_(name + ".dil", nn::Conv2dSpec{c_, c_, 3, 3, 1, 2, 2, c_}, false, init),
          path_loc_(name + ".loc", nn::Conv2dSpec{c_, c_, 3, 3, 1, 1, 1, c_}, false, init),
          fuse_(name + ".fuse", nn::Conv2dSpec{2 * c_, 2 * c_, 1, 1, 1, 0, 1, 1}, false, init),
          bn_fuse_(name + ".bn_fuse", 2 * c_),
          dw_(name + ".dw", nn::Conv2dSpec{2 * c_, 2 * c_, 3, 3, 1, 1, 1, 2 * c_}, false, init),
          bn_dw_(name + ".bn_dw", 2 * c_),
          proj_(name + ".proj", nn::Conv2dSpec{2 * c_, c_, 1, 1, 1, 0, 1, 1}, false, init),
          bn_proj_(name + ".bn_proj", c_) {}

    TensorT<T> forward(const TensorT<T>& x, nn::Mode mode) override {
        TensorT<T> a = path_dil_.forward(x, mode);
        TensorT<T> b = path_loc_.forward(x, mode);
        TensorT<T> y = nn::concat_channels(a, b);
        y = relu_fuse_.forward(bn_fuse_.forward(fuse_.forward(y, mode), mode), mode);
        y = relu_dw_.forward(bn_dw_.forward(dw_.forward(y, mode), mode), mode);
        y = bn_proj_.forward(proj_.forward(y, mode), mode);
        nn::add_inplace(y, x);
        return relu_out_.forward(y, mode);
    }

    TensorT<T> backward(const TensorT<T>& dy) override {
        TensorT<T> g = relu_out_.backward(dy);
        TensorT<T> d = bn_proj_.backward(g);
        d = proj_.backward(d);
        d = dw_.backward(bn_dw_.backward(relu_dw_.backward(d)));
        d = fuse_.backward(bn_fuse_.backward(relu_fuse_.backward(d)));
        TensorT<T> da, db;
        nn::split_channels(d, c_, da, db);
        TensorT<T> dx = path_dil_.backward(da);
        nn::add_inplace(dx, path_loc_.backward(db));
        nn::add_inplace(dx, g);  // residual skip
        return dx;
    }

    void collect_params(std::vector<nn::Parameter<T>*>& out) override {
        path_dil_.collect_params(out);
        path_loc_.collect_params(out);
        fuse_.collect_params(out);
        bn_fuse_.collect_params(out);
        dw_.collect_params(out);
        bn_dw_.collect_params(out);
        proj_.collect_params(out);
        bn_proj_.collect_params(out);
    }

    void collect_state(std::vector<nn::NamedTensor<T>>& out) override {
        path_dil_.collect_state(out);
        path_loc_.collect_state(out);
        fuse_.collect_state(out);
        bn_fuse_.collect_state(out);
        dw_.collect_state(out);
        bn_dw_.collect_state(out);
        proj_.collect_state(out);
        bn_proj_.collect_state(out);
    }

    int channels() const { return c_; }
    nn::Conv2d<T>& proj_conv() { return proj_; }
    nn::BatchNorm2d<T>& proj_bn() { return bn_proj_; }

    template <typename Fn>
    void visit_convs(Fn&& fn) const {
        fn(path_dil_.spec(), false);
        fn(path_loc_.spec(), true);  // parallel to the previous conv
        fn(fuse_.spec(), false);
        fn(dw_.spec(), false);
        fn(proj_.spec(), false);
    }

  private:
    int c_;
    nn::Conv2d<T> path_dil_, path_loc_;
    nn::Conv2d<T> fuse_;
    nn::BatchNorm2d<T> bn_fuse_;
    nn::ReLU<T> relu_fuse_;
    nn::Conv2d<T> dw_;
    nn::BatchNorm2d<T> bn_dw_;
    nn::ReLU<T> relu_dw_;
    nn::Conv2d<T> proj_;
    nn::BatchNorm2d<T> bn_proj_;
    nn::ReLU<T> relu_out_;
};

/// The full detector: two stride-2 stem convolutions, the per-variant
/// stages of Ferret blocks joined by stride-2 1x1 transitions, then a
/// 1x1 head expansion, global average pooling, dropout, and a single-logit
/// classifier.
template <typename T>
class FerretNetT {
  public:
    FerretNetT(FerretVariant var, int in_channels, double dropout_p, std::uint64_t init_seed)
        : variant_(std::move(var)), in_channels_(in_channels), dropout_(dropout_p),
          dropout_rng_(init_seed + 1) {
        require(!variant_.stage_channels.empty() &&
                variant_.stage_channels.size() == variant_.stage_blocks.size(),
                "variant: stage lists must be non-empty and same length");
        Rng init(init_seed);
        const int c1 = variant_.stage_channels.front();
        stem1_ = std::make_unique<nn::Conv2d<T>>(
            "stem1", nn::Conv2dSpec{in_channels_, c1 / 2, 3, 3, 2, 1, 1, 1}, false, init);
        bn1_ = std::make_unique<nn::BatchNorm2d<T>>("bn1", c1 / 2);
        stem2_ = std::make_unique<nn::Conv2d<T>>(
            "stem2", nn::Conv2dSpec{c1 / 2, c1, 3, 3, 2, 1, 1, 1}, false, init);
        bn2_ = std::make_unique<nn::BatchNorm2d<T>>("bn2", c1);

        for (std::size_t si = 0; si < variant_.stage_channels.size(); ++si) {
            const int c = variant_.stage_channels[si];
            std::vector<std::unique_ptr<FerretBlockT<T>>> stage;
            for (int bi = 0; bi < variant_.stage_blocks[si]; ++bi)
                stage.push_back(std::make_unique<FerretBlockT<T>>(
                    "stage" + std::to_string(si) + ".block" + std::to_string(bi), c, init));
            stages_.push_back(std::move(stage));
            if (si + 1 < variant_.stage_channels.size()) {
                const int cn = variant_.stage_channels[si + 1];
                transitions_.push_back(std::make_unique<nn::Conv2d<T>>(
                    "transition" + std::to_string(si),
                    nn::Conv2dSpec{c, cn, 1, 1, 2, 0, 1, 1}, false, init));
                transition_bns_.push_back(std::make_unique<nn::BatchNorm2d<T>>(
                    "bn_transition" + std::to_string(si), cn));
            }
        }

        transition_relus_.resize(transitions_.size());

        const int cl = variant_.stage_channels.back();
        head_ = std::make_unique<nn::Conv2d<T>>(
            "head", nn::Conv2dSpec{cl, kHeadWidth, 1, 1, 1, 0, 1, 1}, false, init);
        bn_head_ = std::make_unique<nn::BatchNorm2d<T>>("bn_head", kHeadWidth);
        drop_ = std::make_unique<nn::Dropout<T>>(dropout_p);
        drop_->set_rng(&dropout_rng_);
        fc_ = std::make_unique<nn::Linear<T>>("fc", kHeadWidth, 1, init);
    }

    /// (N,3,h,w) -> (N,1) logits.
    TensorT<T> forward(const TensorT<T>& x, nn::Mode mode) {
        require(x.ndim() == 4 && x.dim(1) == in_channels_, "forward: expected (N,C,H,W) input");
        require(x.dim(2) >= 16 && x.dim(3) >= 16,
                "forward: spatial size too small after downsampling (need >= 16)");
        TensorT<T> y = relu1_.forward(bn1_->forward(stem1_->forward(x, mode), mode), mode);
        y = relu2_.forward(bn2_->forward(stem2_->forward(y, mode), mode), mode);
        for (std::size_t si = 0; si < stages_.size(); ++si) {
            for (auto& block : stages_[si]) y = block->forward(y, mode);
            if (si < transitions_.size())
                y = transition_relus_[si].forward(
                    transition_bns_[si]->forward(transitions_[si]->forward(y, mode), mode), mode);
        }
        y = relu_head_.forward(bn_head_->forward(head_->forward(y, mode), mode), mode);
        y = gap_.forward(y, mode);
        y = drop_->forward(y, mode);
        return fc_->forward(y, mode);
    }

    TensorT<T> backward(const TensorT<T>& dlogits) {
        TensorT<T> g = fc_->backward(dlogits);
        g = drop_->backward(g);
        g = gap_.backward(g);
        g = head_->backward(bn_head_->backward(relu_head_.backward(g)));
        for (std::size_t si = stages_.size(); si-- > 0;) {
            if (si < transitions_.size())
                g = transitions_[si]->backward(
                    transition_bns_[si]->backward(transition_relus_[si].backward(g)));
            for (std::size_t bi = stages_[si].size(); bi-- > 0;)
                g = stages_[si][bi]->backward(g);
        }
        g = stem2_->backward(bn2_->backward(relu2_.backward(g)));
        g = stem1_->backward(bn1_->backward(relu1_.backward(g)));
        return g;
    }

    std::vector<nn::Parameter<T>*> parameters() {
        std::vector<nn::Parameter<T>*> out;
        stem1_->collect_params(out);
        bn1_->collect_params(out);
        stem2_->collect_params(out);
        bn2_->collect_params(out);
        for (std::size_t si = 0; si < stages_.size(); ++si) {
            for (auto& b : stages_[si]) b->collect_params(out);
            if (si < transitions_.size()) {
                transitions_[si]->collect_params(out);
                transition_bns_[si]->collect_params(out);
            }
        }
        head_->collect_params(out);
        bn_head_->collect_params(out);
        fc_->collect_params(out);
        return out;
    }

    std::vector<nn::NamedTensor<T>> state() {
        std::vector<nn::NamedTensor<T>> out;
        stem1_->collect_state(out);
        bn1_->collect_state(out);
        stem2_->collect_state(out);
        bn2_->collect_state(out);
        for (std::size_t si = 0; si < stages_.size(); ++si) {
            for (auto& b : stages_[si]) b->collect_state(out);
            if (si < transitions_.size()) {
                transitions_[si]->collect_state(out);
                transition_bns_[si]->collect_state(out);
            }
        }
        head_->collect_state(out);
        bn_head_->collect_state(out);
        fc_->collect_state(out);
        return out;
    }

    const FerretVariant& variant() const { return variant_; }
    double dropout_p() const { return dropout_; }
    int in_channels() const { return in_channels_; }
    void reseed_dropout(std::uint64_t seed) { dropout_rng_ = Rng(seed); }

    /// Zeroes every block's final projection conv and BN scale: each block
    /// then reduces to ReLU of its input.
    void zero_block_projections() {
        for (auto& stage : stages_)
            for (auto& b : stage) {
                std::vector<nn::Parameter<T>*> ps;
                b->proj_conv().collect_params(ps);
                for (auto* p : ps) p->value.zero();
                b->proj_bn().gamma().value.zero();
                b->proj_bn().beta().value.zero();
            }
    }

    /// Walks every conv/bn/linear in execution order, reporting (kind,
    /// conv spec / channel count / linear dims, parallel-to-previous flag).
    template <typename ConvFn, typename BnFn, typename LinFn>
    void visit_structure(ConvFn&& conv_fn, BnFn&& bn_fn, LinFn&& lin_fn) const {
        conv_fn(stem1_->spec(), false);
        bn_fn(variant_.stage_channels.front() / 2);
        conv_fn(stem2_->spec(), false);
        bn_fn(variant_.stage_channels.front());
        for (std::size_t si = 0; si < stages_.size(); ++si) {
            for (auto& b : stages_[si]) {
                b->visit_convs([&](const nn::Conv2dSpec& s, bool parallel) { conv_fn(s, parallel); });
                bn_fn(2 * b->channels());
                bn_fn(2 * b->channels());
                bn_fn(b->channels());
            }
            if (si < transitions_.size()) {
                conv_fn(transitions_[si]->spec(), false);
                bn_fn(variant_.stage_channels[si + 1]);
            }
        }
        conv_fn(head_->spec(), false);
        bn_fn(kHeadWidth);
        lin_fn(kHeadWidth, 1);
    }

  private:
    FerretVariant variant_;
    int in_channels_;
    double dropout_;
    Rng dropout_rng_;

    std::unique_ptr<nn::Conv2d<T>> stem1_, stem2_;
    std::unique_ptr<nn::BatchNorm2d<T>> bn1_, bn2_;
    nn::ReLU<T> relu1_, relu2_;
    std::vector<std::vector<std::unique_ptr<FerretBlockT<T>>>> stages_;
    std::vector<std::unique_ptr<nn::Conv2d<T>>> transitions_;
    std::vector<std::unique_ptr<nn::BatchNorm2d<T>>> transition_bns_;
    std::vector<nn::ReLU<T>> transition_relus_;
    std::unique_ptr<nn::Conv2d<T>> head_;
    std::unique_ptr<nn::BatchNorm2d<T>> bn_head_;
    nn::ReLU<T> relu_head_;
    nn::GlobalAvgPool<T> gap_;
    std::unique_ptr<nn::Dropout<T>> drop_;
    std::unique_ptr<nn::Linear<T>> fc_;
};

using FerretNet = FerretNetT<float>;

// ---------------------------------------------------------------------------
// analytic accounting

struct LayerCount {
    std::string kind;
    long long params = 0;
    long long flops = 0;
};

struct ModelDescription {
    std::vector<LayerCount> layers;
    long long param_count = 0;
    long long flop_count = 0;
};

inline long long conv_param_count(const nn::Conv2dSpec& s, bool with_bias) {
    long long p = static_cast<long long>(s.out_channels) * (s.in_channels / s.groups) * s.kh * s.kw;
    if (with_bias) p += s.out_channels;
    return p;
}

/// 2 x multiply-accumulates of a conv at the given input geometry.
inline long long conv_flops(const nn::Conv2dSpec& s, int h, int w, int batch) {
    const long long oh = s.out_dim(h, s.kh), ow = s.out_dim(w, s.kw);
    return 2LL * s.out_channels * (s.in_channels / s.groups) * s.kh * s.kw * oh * ow * batch;
}

inline long long linear_param_count(int in, int out) {
    return static_cast<long long>(out) * in + out;
}

inline long long linear_flops(int in, int out, int batch) {
    return 2LL * in * out * batch;
}

/// Closed-form parameter and FLOP totals (2 x multiply-accumulates; BN,
/// activations and pooling count as zero) at the given input geometry.
template <typename T>
ModelDescription describe(const FerretNetT<T>& model, int h, int w, int batch = 1) {
    ModelDescription d;
    int ch = h, cw = w;
    int prev_h = h, prev_w = w;
    model.visit_structure(
        [&](const nn::Conv2dSpec& s, bool parallel) {
            if (parallel) {
                // shares the input of the previous conv
                ch = prev_h;
                cw = prev_w;
            }
            prev_h = ch;
            prev_w = cw;
            d.layers.push_back({"conv", conv_param_count(s, false), conv_flops(s, ch, cw, batch)});
            ch = s.out_dim(ch, s.kh);
            cw = s.out_dim(cw, s.kw);
        },
        [&](int c) {
            d.layers.push_back({"batchnorm", 2LL * c, 0});
        },
        [&](int in, int out) {
            d.layers.push_back({"linear", linear_param_count(in, out), linear_flops(in, out, batch)});
        });
    for (const auto& l : d.layers) {
        d.param_count += l.params;
        d.flop_count += l.flops;
    }
    return d;
}

/// Ground-truth parameter total: the sizes of the actually allocated
/// parameter tensors.
template <typename T>
long long param_count_enumerated(FerretNetT<T>& model) {
    long long total = 0;
    for (auto* p : model.parameters()) total += static_cast<long long>(p->value.numel());
    return total;
}

}  // namespace ferret::net
