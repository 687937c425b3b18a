#pragma once

// Forward/backward kernels for the toy backbone. All tensors are CHW; every
// backward accumulates (+=) into parameter gradients and overwrites input
// gradients.

#include <cstdint>
#include <vector>

#include "csrda/tensor.hpp"

namespace csrda::nn {

// Same-padded (zero) stride-1 k x k convolution, k odd. `weight` is
// (cout, cin, k, k); `bias` may be null. `col` receives the im2col buffer
// (cin*k*k rows, h*w columns) needed by the backward pass.
template <typename T>
void conv2d_forward(const Tensor3<T>& x, const T* weight, const T* bias, int cout, int k, Tensor3<T>& y,
                    std::vector<T>& col);

// `dx` may be null when the input gradient is not needed.
template <typename T>
void conv2d_backward(const std::vector<T>& col, int cin, int h, int w, const T* weight, int cout, int k,
                     const Tensor3<T>& dy, T* dweight, T* dbias, Tensor3<T>* dx);

struct GroupNormCache {
    std::vector<double> inv_std;  // per group
};

template <typename T>
void group_norm_forward(const Tensor3<T>& x, const T* gamma, const T* beta, int groups, double eps,
                        Tensor3<T>& y, Tensor3<T>& xhat, GroupNormCache& cache);

template <typename T>
void group_norm_backward(const Tensor3<T>& xhat, const GroupNormCache& cache, const T* gamma, int groups,
                         const Tensor3<T>& dy, T* dgamma, T* dbeta, Tensor3<T>& dx);

template <typename T>
void relu_inplace(Tensor3<T>& x);

// dy -> dx using the forward output (ReLU passes where out > 0).
template <typename T>
void relu_backward_inplace(const Tensor3<T>& out, Tensor3<T>& d);

// 2x2 stride-2 max pooling; `argmax` records the flat source index.
template <typename T>
void maxpool2_forward(const Tensor3<T>& x, Tensor3<T>& y, std::vector<std::int32_t>& argmax);

template <typename T>
void maxpool2_backward(const std::vector<std::int32_t>& argmax, const Tensor3<T>& dy, int h, int w, Tensor3<T>& dx);

// x2 bilinear upsampling, half-pixel centers (align_corners = false).
template <typename T>
void upsample2_forward(const Tensor3<T>& x, Tensor3<T>& y);

template <typename T>
void upsample2_backward(const Tensor3<T>& dy, int h, int w, Tensor3<T>& dx);

// Channel concatenation [a; b] and its adjoint.
template <typename T>
Tensor3<T> concat_channels(const Tensor3<T>& a, const Tensor3<T>& b);

template <typename T>
void split_channels(const Tensor3<T>& d, int ca, Tensor3<T>& da, Tensor3<T>& db);

}  // namespace csrda::nn
