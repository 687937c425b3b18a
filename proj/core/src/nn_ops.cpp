#include "csrda/nn_ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace csrda::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
void im2col(const Tensor3<T>& x, int k, std::vector<T>& col) {
    const int h = x.height, w = x.width, pad = k / 2;
    const std::size_t n = x.plane_size();
    col.assign(static_cast<std::size_t>(x.channels) * k * k * n, T(0));
    for (int c = 0; c < x.channels; ++c) {
        const T* src = x.data.data() + c * n;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                T* dst = col.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * n;
                const int dy = ky - pad, dx = kx - pad;
                const int x_lo = std::max(0, -dx), x_hi = std::min(w, w - dx);
                for (int y = 0; y < h; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) continue;
                    std::copy(src + sy * w + x_lo + dx, src + sy * w + x_hi + dx, dst + y * w + x_lo);
                }
            }
        }
    }
}

template <typename T>
void col2im(const std::vector<T>& col, int channels, int h, int w, int k, Tensor3<T>& dx) {
    const int pad = k / 2;
    const std::size_t n = static_cast<std::size_t>(h) * w;
    dx = Tensor3<T>(channels, h, w);
    for (int c = 0; c < channels; ++c) {
        T* dst = dx.data.data() + c * n;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const T* src = col.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * n;
                const int dy = ky - pad, ddx = kx - pad;
                const int x_lo = std::max(0, -ddx), x_hi = std::min(w, w - ddx);
                for (int y = 0; y < h; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) continue;
                    T* d = dst + sy * w + ddx;
                    const T* s = src + y * w;
                    for (int xx = x_lo; xx < x_hi; ++xx) d[xx] += s[xx];
                }
            }
        }
    }
}

// dst (+)= lhs * rhs. Eigen's matrix-vector and small coefficient-wise
// kernels peel unaligned heads, so their summation order depends on the
// operands' addresses; those shapes take a fixed-order loop instead.
template <typename Dst, typename Lhs, typename Rhs>
void product(Dst&& dst, const Lhs& lhs, const Rhs& rhs, bool accumulate) {
    const Eigen::Index rows = lhs.rows(), cols = rhs.cols(), depth = lhs.cols();
    if (rows > 1 && cols > 1 && rows + cols + depth >= 20) {
        if (accumulate) {
            dst.noalias() += lhs * rhs;
        } else {
            dst.noalias() = lhs * rhs;
        }
        return;
    }
    if (!accumulate) dst.setZero();
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index k = 0; k < depth; ++k) {
            const auto a = lhs(i, k);
            for (Eigen::Index j = 0; j < cols; ++j) dst(i, j) += a * rhs(k, j);
        }
    }
}

}  // namespace

template <typename T>
void conv2d_forward(const Tensor3<T>& x, const T* weight, const T* bias, int cout, int k, Tensor3<T>& y,
                    std::vector<T>& col) {
    const int kk = x.channels * k * k;
    const int n = x.height * x.width;
    if (k == 1) {
        col = x.data;
    } else {
        im2col(x, k, col);
    }
    y = Tensor3<T>(cout, x.height, x.width);
    ConstMatMap<T> wm(weight, cout, kk);
    ConstMatMap<T> cm(col.data(), kk, n);
    MatMap<T> ym(y.data.data(), cout, n);
    product(ym, wm, cm, false);
    if (bias) {
        for (int o = 0; o < cout; ++o) ym.row(o).array() += bias[o];
    }
}

template <typename T>
void conv2d_backward(const std::vector<T>& col, int cin, int h, int w, const T* weight, int cout, int k,
                     const Tensor3<T>& dy, T* dweight, T* dbias, Tensor3<T>* dx) {
    const int kk = cin * k * k;
    const int n = h * w;
    ConstMatMap<T> dym(dy.data.data(), cout, n);
    ConstMatMap<T> cm(col.data(), kk, n);
    MatMap<T> dwm(dweight, cout, kk);
    product(dwm, dym, cm.transpose(), true);
    if (dbias) {
        for (int o = 0; o < cout; ++o) {
            const T* row = dy.data.data() + static_cast<std::size_t>(o) * n;
            T sum = 0;
            for (int j = 0; j < n; ++j) sum += row[j];
            dbias[o] += sum;
        }
    }
    if (dx) {
        ConstMatMap<T> wm(weight, cout, kk);
        if (k == 1) {
            *dx = Tensor3<T>(cin, h, w);
            MatMap<T> dxm(dx->data.data(), cin, n);
            product(dxm, wm.transpose(), dym, false);
        } else {
            std::vector<T> dcol(static_cast<std::size_t>(kk) * n);
            MatMap<T> dcm(dcol.data(), kk, n);
            product(dcm, wm.transpose(), dym, false);
            col2im(dcol, cin, h, w, k, *dx);
        }
    }
}

template <typename T>
void group_norm_forward(const Tensor3<T>& x, const T* gamma, const T* beta, int groups, double eps,
                        Tensor3<T>& y, Tensor3<T>& xhat, GroupNormCache& cache) {
    const int cpg = x.channels / groups;
    const std::size_t n = x.plane_size();
    const std::size_t gsize = static_cast<std::size_t>(cpg) * n;
    y = Tensor3<T>(x.channels, x.height, x.width);
    xhat = Tensor3<T>(x.channels, x.height, x.width);
    cache.inv_std.assign(groups, 0.0);
    for (int g = 0; g < groups; ++g) {
        const T* src = x.data.data() + g * gsize;
        double mean = 0;
        for (std::size_t i = 0; i < gsize; ++i) mean += src[i];
        mean /= static_cast<double>(gsize);
        double var = 0;
        for (std::size_t i = 0; i < gsize; ++i) var += (src[i] - mean) * (src[i] - mean);
        var /= static_cast<double>(gsize);
        const double inv = 1.0 / std::sqrt(var + eps);
        cache.inv_std[g] = inv;
        T* xh = xhat.data.data() + g * gsize;
        for (std::size_t i = 0; i < gsize; ++i) xh[i] = static_cast<T>((src[i] - mean) * inv);
        for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
            const T* xc = xhat.data.data() + c * n;
            T* yc = y.data.data() + c * n;
            for (std::size_t i = 0; i < n; ++i) yc[i] = gamma[c] * xc[i] + beta[c];
        }
    }
}

template <typename T>
void group_norm_backward(const Tensor3<T>& xhat, const GroupNormCache& cache, const T* gamma, int groups,
                         const Tensor3<T>& dy, T* dgamma, T* dbeta, Tensor3<T>& dx) {
    const int channels = xhat.channels;
    const int cpg = channels / groups;
    const std::size_t n = xhat.plane_size();
    const double m = static_cast<double>(cpg) * static_cast<double>(n);
    dx = Tensor3<T>(channels, xhat.height, xhat.width);
    for (int c = 0; c < channels; ++c) {
        const T* d = dy.data.data() + c * n;
        const T* xh = xhat.data.data() + c * n;
        double sg = 0, sb = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sg += d[i] * xh[i];
            sb += d[i];
        }
        dgamma[c] += static_cast<T>(sg);
        dbeta[c] += static_cast<T>(sb);
    }
    for (int g = 0; g < groups; ++g) {
        // dxhat = dy * gamma; dx = inv/m * (m dxhat - sum dxhat - xhat sum(dxhat xhat))
        double s1 = 0, s2 = 0;
        for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
            const T* d = dy.data.data() + c * n;
            const T* xh = xhat.data.data() + c * n;
            for (std::size_t i = 0; i < n; ++i) {
                const double dxh = static_cast<double>(d[i]) * gamma[c];
                s1 += dxh;
                s2 += dxh * xh[i];
            }
        }
        const double inv = cache.inv_std[g];
        for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
            const T* d = dy.data.data() + c * n;
            const T* xh = xhat.data.data() + c * n;
            T* o = dx.data.data() + c * n;
            for (std::size_t i = 0; i < n; ++i) {
                const double dxh = static_cast<double>(d[i]) * gamma[c];
                o[i] = static_cast<T>(inv / m * (m * dxh - s1 - xh[i] * s2));
            }
        }
    }
}

template <typename T>
void relu_inplace(Tensor3<T>& x) {
    for (T& v : x.data) v = v > T(0) ? v : T(0);
}

template <typename T>
void relu_backward_inplace(const Tensor3<T>& out, Tensor3<T>& d) {
    for (std::size_t i = 0; i < d.data.size(); ++i) {
        if (!(out.data[i] > T(0))) d.data[i] = T(0);
    }
}

template <typename T>
void maxpool2_forward(const Tensor3<T>& x, Tensor3<T>& y, std::vector<std::int32_t>& argmax) {
    const int oh = x.height / 2, ow = x.width / 2;
    y = Tensor3<T>(x.channels, oh, ow);
    argmax.assign(y.size(), 0);
    for (int c = 0; c < x.channels; ++c) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                int best = (2 * oy) * x.width + 2 * ox;
                T bv = x(c, 2 * oy, 2 * ox);
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const T v = x(c, 2 * oy + dy, 2 * ox + dx);
                        if (v > bv) {
                            bv = v;
                            best = (2 * oy + dy) * x.width + 2 * ox + dx;
                        }
                    }
                }
                y(c, oy, ox) = bv;
                argmax[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] = best;
            }
        }
    }
}

template <typename T>
void maxpool2_backward(const std::vector<std::int32_t>& argmax, const Tensor3<T>& dy, int h, int w, Tensor3<T>& dx) {
    dx = Tensor3<T>(dy.channels, h, w);
    const std::size_t on = dy.plane_size(), in = dx.plane_size();
    for (int c = 0; c < dy.channels; ++c) {
        for (std::size_t i = 0; i < on; ++i) dx.data[c * in + argmax[c * on + i]] += dy.data[c * on + i];
    }
}

namespace {

struct Tap {
    int i0, i1;
    double t;
};

// Source taps for x2 upsampling with half-pixel centers, edge-clamped.
std::vector<Tap> upsample_taps(int in_size) {
    std::vector<Tap> taps(2 * in_size);
    for (int o = 0; o < 2 * in_size; ++o) {
        const double s = std::max(0.0, (o + 0.5) / 2.0 - 0.5);
        const int i0 = std::min(static_cast<int>(s), in_size - 1);
        const int i1 = std::min(i0 + 1, in_size - 1);
        taps[o] = {i0, i1, s - i0};
    }
    return taps;
}

}  // namespace

template <typename T>
void upsample2_forward(const Tensor3<T>& x, Tensor3<T>& y) {
    const int h = x.height, w = x.width;
    y = Tensor3<T>(x.channels, 2 * h, 2 * w);
    const auto ty = upsample_taps(h), tx = upsample_taps(w);
    for (int c = 0; c < x.channels; ++c) {
        for (int oy = 0; oy < 2 * h; ++oy) {
            const Tap& a = ty[oy];
            for (int ox = 0; ox < 2 * w; ++ox) {
                const Tap& b = tx[ox];
                const double top = x(c, a.i0, b.i0) * (1 - b.t) + x(c, a.i0, b.i1) * b.t;
                const double bot = x(c, a.i1, b.i0) * (1 - b.t) + x(c, a.i1, b.i1) * b.t;
                y(c, oy, ox) = static_cast<T>(top * (1 - a.t) + bot * a.t);
            }
        }
    }
}

template <typename T>
void upsample2_backward(const Tensor3<T>& dy, int h, int w, Tensor3<T>& dx) {
    dx = Tensor3<T>(dy.channels, h, w);
    const auto ty = upsample_taps(h), tx = upsample_taps(w);
    for (int c = 0; c < dy.channels; ++c) {
        for (int oy = 0; oy < 2 * h; ++oy) {
            const Tap& a = ty[oy];
            for (int ox = 0; ox < 2 * w; ++ox) {
                const Tap& b = tx[ox];
                const T g = dy(c, oy, ox);
                dx(c, a.i0, b.i0) += static_cast<T>(g * (1 - a.t) * (1 - b.t));
                dx(c, a.i0, b.i1) += static_cast<T>(g * (1 - a.t) * b.t);
                dx(c, a.i1, b.i0) += static_cast<T>(g * a.t * (1 - b.t));
                dx(c, a.i1, b.i1) += static_cast<T>(g * a.t * b.t);
            }
        }
    }
}

template <typename T>
Tensor3<T> concat_channels(const Tensor3<T>& a, const Tensor3<T>& b) {
    Tensor3<T> out(a.channels + b.channels, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

template <typename T>
void split_channels(const Tensor3<T>& d, int ca, Tensor3<T>& da, Tensor3<T>& db) {
    da = Tensor3<T>(ca, d.height, d.width);
    db = Tensor3<T>(d.channels - ca, d.height, d.width);
    const auto cut = d.data.begin() + static_cast<std::ptrdiff_t>(da.size());
    std::copy(d.data.begin(), cut, da.data.begin());
    std::copy(cut, d.data.end(), db.data.begin());
}

#define CSRDA_NN_INSTANTIATE(T)                                                                                  \
    template void conv2d_forward(const Tensor3<T>&, const T*, const T*, int, int, Tensor3<T>&, std::vector<T>&); \
    template void conv2d_backward(const std::vector<T>&, int, int, int, const T*, int, int, const Tensor3<T>&, T*, \
                                  T*, Tensor3<T>*);                                                              \
    template void group_norm_forward(const Tensor3<T>&, const T*, const T*, int, double, Tensor3<T>&, Tensor3<T>&, \
                                     GroupNormCache&);                                                           \
    template void group_norm_backward(const Tensor3<T>&, const GroupNormCache&, const T*, int, const Tensor3<T>&, \
                                      T*, T*, Tensor3<T>&);                                                      \
    template void relu_inplace(Tensor3<T>&);                                                                     \
    template void relu_backward_inplace(const Tensor3<T>&, Tensor3<T>&);                                         \
    template void maxpool2_forward(const Tensor3<T>&, Tensor3<T>&, std::vector<std::int32_t>&);                  \
    template void maxpool2_backward(const std::vector<std::int32_t>&, const Tensor3<T>&, int, int, Tensor3<T>&); \
    template void upsample2_forward(const Tensor3<T>&, Tensor3<T>&);                                             \
    template void upsample2_backward(const Tensor3<T>&, int, int, Tensor3<T>&);                                  \
    template Tensor3<T> concat_channels(const Tensor3<T>&, const Tensor3<T>&);                                   \
    template void split_channels(const Tensor3<T>&, int, Tensor3<T>&, Tensor3<T>&);

CSRDA_NN_INSTANTIATE(float)
CSRDA_NN_INSTANTIATE(double)

}  // namespace csrda::nn
