#include "csrda/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csrda/nn_ops.hpp"
#include "csrda/rng.hpp"

namespace csrda {

template <typename T>
void Backbone<T>::check_input(const ParamSet<T>& state, const Tensor3<T>& image) const {
    if (state.architecture_id != architecture_id() || state.values.size() != layout()->total_size()) {
        throw Error("backbone " + architecture_id() + ": state has architecture " + state.architecture_id);
    }
    require_finite(state, "forward");
    if (image.channels != 3) throw ShapeError("backbone: expected a 3-channel image");
    if (image.height < min_side() || image.width < min_side() || image.height % size_multiple() != 0 ||
        image.width % size_multiple() != 0) {
        throw ShapeError("backbone " + architecture_id() + ": input " + std::to_string(image.height) + "x" +
                         std::to_string(image.width) + " must be >= " + std::to_string(min_side()) +
                         " and a multiple of " + std::to_string(size_multiple()));
    }
}

template <typename T>
Plane<T> sigmoid(const Plane<T>& logits) {
    Plane<T> p(logits.height, logits.width);
    for (std::size_t i = 0; i < p.size(); ++i) p.data[i] = T(1) / (T(1) + std::exp(-logits.data[i]));
    return p;
}

namespace {

// ---------------------------------------------------------------------------
// U-Net

struct UnitParams {
    std::size_t weight, gamma, beta;
    int cin, cout;
};

template <typename T>
struct UnitCache {
    std::vector<T> col;
    Tensor3<T> xhat;
    nn::GroupNormCache gn;
    Tensor3<T> out;  // post-ReLU
};

template <typename T>
struct UNetTape final : ForwardTape {
    int height = 0, width = 0;
    std::vector<UnitCache<T>> units;              // encoder units then decoder units
    std::vector<std::vector<std::int32_t>> pool;  // per downsampling step
    std::vector<std::pair<int, int>> pool_in;     // (h, w) before pooling
    std::vector<T> head_col;
};

template <typename T>
class UNet final : public Backbone<T> {
public:
    explicit UNet(UNetConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.channels.size() < 2) throw ConfigError("unet: need at least two levels");
        for (int c : cfg_.channels) {
            if (c <= 0 || c % cfg_.groups != 0) throw ConfigError("unet: channels must be positive multiples of groups");
        }
        id_ = "unet";
        for (int c : cfg_.channels) id_ += "-" + std::to_string(c);
        id_ += "-g" + std::to_string(cfg_.groups);

        auto layout = std::make_shared<ParamLayout>();
        const int levels = static_cast<int>(cfg_.channels.size());
        auto add_unit = [&](const std::string& prefix, int cin, int cout) {
            UnitParams u{};
            u.cin = cin;
            u.cout = cout;
            u.weight = layout->add(prefix + ".weight", {cout, cin, 3, 3});
            u.gamma = layout->add(prefix + ".gn.gamma", {cout});
            u.beta = layout->add(prefix + ".gn.beta", {cout});
            units_.push_back(u);
        };
        int cin = 3;
        for (int l = 0; l < levels; ++l) {
            add_unit("enc" + std::to_string(l) + ".conv1", cin, cfg_.channels[l]);
            add_unit("enc" + std::to_string(l) + ".conv2", cfg_.channels[l], cfg_.channels[l]);
            cin = cfg_.channels[l];
        }
        for (int l = levels - 2; l >= 0; --l) {
            add_unit("dec" + std::to_string(l) + ".conv1", cfg_.channels[l + 1] + cfg_.channels[l], cfg_.channels[l]);
            add_unit("dec" + std::to_string(l) + ".conv2", cfg_.channels[l], cfg_.channels[l]);
        }
        head_w_ = layout->add("head.weight", {1, cfg_.channels[0], 1, 1});
        head_b_ = layout->add("head.bias", {1});
        layout_ = std::move(layout);
    }

    const std::string& architecture_id() const noexcept override { return id_; }
    std::shared_ptr<const ParamLayout> layout() const override { return layout_; }
    int size_multiple() const noexcept override { return 1 << (cfg_.channels.size() - 1); }
    int min_side() const noexcept override { return std::max(kMinImageSide, size_multiple()); }

    ParamSet<T> init(std::uint64_t seed) const override {
        auto state = ParamSet<T>::zeros(id_, layout_);
        Rng rng(derive_seed(seed, {0x1a17}));
        for (const auto& u : units_) {
            // He-uniform on fan-in.
            const double bound = std::sqrt(6.0 / (u.cin * 9.0));
            std::uniform_real_distribution<double> dist(-bound, bound);
            const std::size_t n = static_cast<std::size_t>(u.cout) * u.cin * 9;
            for (std::size_t i = 0; i < n; ++i) state.values[u.weight + i] = static_cast<T>(dist(rng));
            for (int c = 0; c < u.cout; ++c) state.values[u.gamma + c] = T(1);
        }
        const double head_bound = 1.0 / std::sqrt(static_cast<double>(cfg_.channels[0]));
        std::uniform_real_distribution<double> head(-head_bound, head_bound);
        for (int c = 0; c < cfg_.channels[0]; ++c) state.values[head_w_ + c] = static_cast<T>(head(rng));
        return state;
    }

    Plane<T> forward(const ParamSet<T>& state, const Tensor3<T>& image,
                     std::unique_ptr<ForwardTape>* tape_out) const override {
        this->check_input(state, image);
        auto tape = std::make_unique<UNetTape<T>>();
        tape->height = image.height;
        tape->width = image.width;
        tape->units.resize(units_.size());
        const int levels = static_cast<int>(cfg_.channels.size());
        const T* p = state.values.data();

        std::vector<Tensor3<T>> skips;
        Tensor3<T> x = image;
        std::size_t ui = 0;
        for (int l = 0; l < levels; ++l) {
            if (l > 0) {
                Tensor3<T> pooled;
                tape->pool_in.emplace_back(x.height, x.width);
                tape->pool.emplace_back();
                nn::maxpool2_forward(x, pooled, tape->pool.back());
                x = std::move(pooled);
            }
            x = unit_forward(p, ui, x, tape->units[ui]);
            ++ui;
            x = unit_forward(p, ui, x, tape->units[ui]);
            ++ui;
            if (l < levels - 1) skips.push_back(x);
        }
        for (int l = levels - 2; l >= 0; --l) {
            Tensor3<T> up;
            nn::upsample2_forward(x, up);
            x = nn::concat_channels(up, skips[l]);
            x = unit_forward(p, ui, x, tape->units[ui]);
            ++ui;
            x = unit_forward(p, ui, x, tape->units[ui]);
            ++ui;
        }
        Tensor3<T> logits;
        nn::conv2d_forward(x, p + head_w_, p + head_b_, 1, 1, logits, tape->head_col);

        Plane<T> out(logits.height, logits.width);
        out.data = std::move(logits.data);
        if (tape_out) *tape_out = std::move(tape);
        return out;
    }

    void backward(const ParamSet<T>& state, const ForwardTape& base, const Plane<T>& upstream,
                  ParamSet<T>& grads) const override {
        const auto* tape = dynamic_cast<const UNetTape<T>*>(&base);
        if (!tape) throw Error("unet backward: tape from a different backbone");
        if (upstream.height != tape->height || upstream.width != tape->width) {
            throw ShapeError("unet backward: upstream gradient shape does not match logits");
        }
        require_compatible(state, grads, "unet backward");
        const T* p = state.values.data();
        T* g = grads.values.data();
        const int levels = static_cast<int>(cfg_.channels.size());

        Tensor3<T> dlogits(1, upstream.height, upstream.width);
        dlogits.data = upstream.data;
        Tensor3<T> d;
        nn::conv2d_backward(tape->head_col, cfg_.channels[0], tape->height, tape->width, p + head_w_, 1, 1, dlogits,
                            g + head_w_, g + head_b_, &d);

        std::vector<Tensor3<T>> dskips(levels - 1);
        std::size_t ui = units_.size();
        for (int l = 0; l <= levels - 2; ++l) {
            --ui;
            d = unit_backward(p, g, ui, tape->units[ui], d, true);
            --ui;
            d = unit_backward(p, g, ui, tape->units[ui], d, true);
            Tensor3<T> dup;
            nn::split_channels(d, cfg_.channels[l + 1], dup, dskips[l]);
            const auto& below = tape->units[2 * (l + 1) + 1].out;
            nn::upsample2_backward(dup, below.height, below.width, d);
        }
        for (int l = levels - 1; l >= 0; --l) {
            if (l < levels - 1) {
                for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += dskips[l].data[i];
            }
            --ui;
            d = unit_backward(p, g, ui, tape->units[ui], d, true);
            --ui;
            d = unit_backward(p, g, ui, tape->units[ui], d, l > 0);
            if (l > 0) {
                Tensor3<T> dx;
                const auto [h, w] = tape->pool_in[l - 1];
                nn::maxpool2_backward(tape->pool[l - 1], d, h, w, dx);
                d = std::move(dx);
            }
        }
    }

private:
    Tensor3<T> unit_forward(const T* p, std::size_t ui, const Tensor3<T>& x, UnitCache<T>& cache) const {
        const UnitParams& u = units_[ui];
        Tensor3<T> conv;
        nn::conv2d_forward(x, p + u.weight, static_cast<const T*>(nullptr), u.cout, 3, conv, cache.col);
        nn::group_norm_forward(conv, p + u.gamma, p + u.beta, cfg_.groups, cfg_.norm_eps, cache.out, cache.xhat,
                               cache.gn);
        nn::relu_inplace(cache.out);
        return cache.out;
    }

    Tensor3<T> unit_backward(const T* p, T* g, std::size_t ui, const UnitCache<T>& cache, Tensor3<T> dout,
                             bool need_dx) const {
        const UnitParams& u = units_[ui];
        nn::relu_backward_inplace(cache.out, dout);
        Tensor3<T> dconv;
        nn::group_norm_backward(cache.xhat, cache.gn, p + u.gamma, cfg_.groups, dout, g + u.gamma, g + u.beta, dconv);
        Tensor3<T> dx;
        nn::conv2d_backward(cache.col, u.cin, cache.out.height, cache.out.width, p + u.weight, u.cout, 3, dconv,
                            g + u.weight, static_cast<T*>(nullptr), need_dx ? &dx : nullptr);
        return dx;
    }

    UNetConfig cfg_;
    std::string id_;
    std::shared_ptr<const ParamLayout> layout_;
    std::vector<UnitParams> units_;
    std::size_t head_w_ = 0, head_b_ = 0;
};

// ---------------------------------------------------------------------------
// Micro net

template <typename T>
struct MicroTape final : ForwardTape {
    Tensor3<T> input;
    Plane<T> hidden;  // tanh(w . x + b)
};

template <typename T>
class MicroNet final : public Backbone<T> {
public:
    MicroNet() {
        auto layout = std::make_shared<ParamLayout>();
        layout->add("w", {3});
        layout->add("b", {1});
        layout->add("gain", {1});
        layout_ = std::move(layout);
    }

    const std::string& architecture_id() const noexcept override { return id_; }
    std::shared_ptr<const ParamLayout> layout() const override { return layout_; }

    ParamSet<T> init(std::uint64_t seed) const override {
        auto state = ParamSet<T>::zeros(id_, layout_);
        Rng rng(derive_seed(seed, {0x31c0}));
        for (int i = 0; i < 4; ++i) state.values[i] = static_cast<T>(uniform(rng, -1.0, 1.0));
        state.values[4] = static_cast<T>(uniform(rng, 0.5, 2.0));
        return state;
    }

    Plane<T> forward(const ParamSet<T>& state, const Tensor3<T>& image,
                     std::unique_ptr<ForwardTape>* tape_out) const override {
        this->check_input(state, image);
        const T* p = state.values.data();
        Plane<T> hidden(image.height, image.width), logits(image.height, image.width);
        const std::size_t n = image.plane_size();
        for (std::size_t i = 0; i < n; ++i) {
            const T z = p[0] * image.data[i] + p[1] * image.data[n + i] + p[2] * image.data[2 * n + i] + p[3];
            hidden.data[i] = std::tanh(z);
            logits.data[i] = p[4] * hidden.data[i];
        }
        if (tape_out) {
            auto tape = std::make_unique<MicroTape<T>>();
            tape->input = image;
            tape->hidden = hidden;
            *tape_out = std::move(tape);
        }
        return logits;
    }

    void backward(const ParamSet<T>& state, const ForwardTape& base, const Plane<T>& upstream,
                  ParamSet<T>& grads) const override {
        const auto* tape = dynamic_cast<const MicroTape<T>*>(&base);
        if (!tape) throw Error("micro-net backward: tape from a different backbone");
        if (!upstream.same_shape(tape->hidden)) throw ShapeError("micro-net backward: upstream shape mismatch");
        const T* p = state.values.data();
        T* g = grads.values.data();
        const std::size_t n = tape->input.plane_size();
        for (std::size_t i = 0; i < n; ++i) {
            const T h = tape->hidden.data[i];
            const T u = upstream.data[i];
            g[4] += u * h;
            const T dz = u * p[4] * (T(1) - h * h);
            g[0] += dz * tape->input.data[i];
            g[1] += dz * tape->input.data[n + i];
            g[2] += dz * tape->input.data[2 * n + i];
            g[3] += dz;
        }
    }

private:
    std::string id_ = "micro5";
    std::shared_ptr<const ParamLayout> layout_;
};

}  // namespace

template <typename T>
std::unique_ptr<Backbone<T>> make_unet(const UNetConfig& cfg) {
    return std::make_unique<UNet<T>>(cfg);
}

template <typename T>
std::unique_ptr<Backbone<T>> make_micro_net() {
    return std::make_unique<MicroNet<T>>();
}

Prediction forward(const Backbone<float>& backbone, const ModelState& state, const ImageTensor& image) {
    Prediction pred;
    pred.logits = backbone.forward(state, image.pixels());
    pred.probabilities = SoftMask(sigmoid(pred.logits));
    return pred;
}

Gradients backward(const Backbone<float>& backbone, const ModelState& state, const ImageTensor& image,
                   const Plane<float>& upstream) {
    std::unique_ptr<ForwardTape> tape;
    backbone.forward(state, image.pixels(), &tape);
    Gradients grads = state.zeros_like();
    backbone.backward(state, *tape, upstream, grads);
    return grads;
}

template class Backbone<float>;
template class Backbone<double>;
template Plane<float> sigmoid(const Plane<float>&);
template Plane<double> sigmoid(const Plane<double>&);
template std::unique_ptr<Backbone<float>> make_unet(const UNetConfig&);
template std::unique_ptr<Backbone<double>> make_unet(const UNetConfig&);
template std::unique_ptr<Backbone<float>> make_micro_net();
template std::unique_ptr<Backbone<double>> make_micro_net();

}  // namespace csrda
