#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "csrda/model_state.hpp"
#include "csrda/tensor.hpp"

namespace csrda {

// Activations a backbone keeps between forward and backward.
struct ForwardTape {
    virtual ~ForwardTape() = default;
};

// A differentiable binary-segmentation model producing one logit map at
// input resolution. Implementations are stateless: weights live in the
// ParamSet passed to every call, so forward/backward may run concurrently on
// a shared snapshot.
template <typename T>
class Backbone {
public:
    virtual ~Backbone() = default;

    virtual const std::string& architecture_id() const noexcept = 0;
    virtual std::shared_ptr<const ParamLayout> layout() const = 0;
    // Input sides must be multiples of this value and at least `min_side()`.
    virtual int size_multiple() const noexcept { return 1; }
    virtual int min_side() const noexcept { return 1; }

    virtual ParamSet<T> init(std::uint64_t seed) const = 0;

    // When `tape` is non-null it receives what `backward` needs.
    virtual Plane<T> forward(const ParamSet<T>& state, const Tensor3<T>& image,
                             std::unique_ptr<ForwardTape>* tape = nullptr) const = 0;

    // Accumulates dL/dparams into `grads` given dL/dlogits.
    virtual void backward(const ParamSet<T>& state, const ForwardTape& tape, const Plane<T>& upstream,
                          ParamSet<T>& grads) const = 0;

    void check_input(const ParamSet<T>& state, const Tensor3<T>& image) const;
};

struct UNetConfig {
    std::vector<int> channels{16, 32, 64, 128};
    int groups = 8;
    double norm_eps = 1e-5;
};

// Encoder-decoder with skip connections: per level two (3x3 conv, group
// norm, ReLU) units, 2x2 max pooling down, bilinear x2 up, and a 1x1 head.
template <typename T>
std::unique_ptr<Backbone<T>> make_unet(const UNetConfig& cfg = {});

// logit = gain * tanh(w . rgb + b): five parameters, used for gradient
// checks on tiny inputs.
template <typename T>
std::unique_ptr<Backbone<T>> make_micro_net();

struct Prediction {
    Plane<float> logits;
    SoftMask probabilities;
};

template <typename T>
Plane<T> sigmoid(const Plane<T>& logits);

Prediction forward(const Backbone<float>& backbone, const ModelState& state, const ImageTensor& image);

// Recomputes the forward pass and returns fresh gradients.
Gradients backward(const Backbone<float>& backbone, const ModelState& state, const ImageTensor& image,
                   const Plane<float>& upstream);

}  // namespace csrda
