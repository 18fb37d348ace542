#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "snowshr/errors.hpp"
#include "snowshr/image.hpp"
#include "snowshr/rng.hpp"
#include "snowshr/tensor.hpp"

// Differentiable operations. Every op takes the tape as its first argument;
// passing nullptr runs pure inference with no recording. An op records a
// backward rule iff a tape is given and at least one input requires grad.
//
// Conventions (all shape formulas below are against these):
//   - feature tensors NCHW, kernels OIHW, row-major float32
//   - padding is symmetric zero-padding
//   - conv2d output:  Ho = floor((H + 2p - d*(kH-1) - 1)/s) + 1
//   - conv2d_transpose output:  Ho = (H-1)*s - 2p + kH
//   - bilinear upsampling uses half-pixel centers: sy = (oy+0.5)/f - 0.5,
//     clamped corner indices, weight t = sy - floor(sy)

namespace snowshr {

namespace detail {

// Valid source range [lo,hi] so that 0 <= sx*s + x0 < limit, sx < count.
inline void src_bounds(int x0, int s, int limit, int count, int& lo, int& hi) {
    lo = x0 < 0 ? (-x0 + s - 1) / s : 0;
    hi = (limit - 1 - x0) >= 0 ? (limit - 1 - x0) / s : -1;
    if (hi > count - 1) hi = count - 1;
}

// dst[n,o,sy,sx] += sum_{i,ky,kx} k[o,i,ky,kx] * src[n,i, sy*s-p+ky*d, sx*s-p+kx*d]
inline void conv_forward_accum(float* dst, int N, int O, int Ho, int Wo, const float* src, int I,
                               int H, int W, const float* k, int kH, int kW, int s, int p, int d) {
    const std::size_t dst_plane = static_cast<std::size_t>(Ho) * Wo;
    const std::size_t src_plane = static_cast<std::size_t>(H) * W;
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o) {
            float* dst_p = dst + (static_cast<std::size_t>(n) * O + o) * dst_plane;
            for (int i = 0; i < I; ++i) {
                const float* src_p = src + (static_cast<std::size_t>(n) * I + i) * src_plane;
                const float* k_p = k + (static_cast<std::size_t>(o) * I + i) * kH * kW;
                for (int ky = 0; ky < kH; ++ky) {
                    const int y0 = ky * d - p;
                    int oy_lo, oy_hi;
                    src_bounds(y0, s, H, Ho, oy_lo, oy_hi);
                    for (int oy = oy_lo; oy <= oy_hi; ++oy) {
                        const float* in_row = src_p + static_cast<std::size_t>(oy * s + y0) * W;
                        float* out_row = dst_p + static_cast<std::size_t>(oy) * Wo;
                        for (int kx = 0; kx < kW; ++kx) {
                            const float w = k_p[ky * kW + kx];
                            const int x0 = kx * d - p;
                            int lo, hi;
                            src_bounds(x0, s, W, Wo, lo, hi);
                            if (s == 1) {
                                const float* ir = in_row + x0;
                                for (int ox = lo; ox <= hi; ++ox) out_row[ox] += w * ir[ox];
                            } else {
                                for (int ox = lo; ox <= hi; ++ox)
                                    out_row[ox] += w * in_row[ox * s + x0];
                            }
                        }
                    }
                }
            }
        }
}

// dst[n,i, sy*s-p+ky*d, sx*s-p+kx*d] += k[o,i,ky,kx] * src[n,o,sy,sx]
// The scatter-sum definition of transposed convolution.
inline void conv_transpose_scatter_accum(float* dst, int N, int I, int Hd, int Wd, const float* src,
                                         int O, int Hs, int Ws, const float* k, int kH, int kW,
                                         int s, int p, int d) {
    const std::size_t dst_plane = static_cast<std::size_t>(Hd) * Wd;
    const std::size_t src_plane = static_cast<std::size_t>(Hs) * Ws;
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o) {
            const float* src_p = src + (static_cast<std::size_t>(n) * O + o) * src_plane;
            for (int i = 0; i < I; ++i) {
                float* dst_p = dst + (static_cast<std::size_t>(n) * I + i) * dst_plane;
                const float* k_p = k + (static_cast<std::size_t>(o) * I + i) * kH * kW;
                for (int ky = 0; ky < kH; ++ky) {
                    const int y0 = ky * d - p;
                    int sy_lo, sy_hi;
                    src_bounds(y0, s, Hd, Hs, sy_lo, sy_hi);
                    for (int sy = sy_lo; sy <= sy_hi; ++sy) {
                        const float* src_row = src_p + static_cast<std::size_t>(sy) * Ws;
                        float* dst_row = dst_p + static_cast<std::size_t>(sy * s + y0) * Wd;
                        for (int kx = 0; kx < kW; ++kx) {
                            const float w = k_p[ky * kW + kx];
                            const int x0 = kx * d - p;
                            int lo, hi;
                            src_bounds(x0, s, Wd, Ws, lo, hi);
                            if (s == 1) {
                                float* dr = dst_row + x0;
                                for (int sx = lo; sx <= hi; ++sx) dr[sx] += w * src_row[sx];
                            } else {
                                for (int sx = lo; sx <= hi; ++sx)
                                    dst_row[sx * s + x0] += w * src_row[sx];
                            }
                        }
                    }
                }
            }
        }
}

// dk[o,i,ky,kx] += sum_{n,sy,sx} a[n,o,sy,sx] * b[n,i, sy*s-p+ky*d, sx*s-p+kx*d]
inline void conv_kernel_grad_accum(float* dk, int O, int I, int kH, int kW, const float* a, int N,
                                   int Hs, int Ws, const float* b, int Hb, int Wb, int s, int p,
                                   int d) {
    const std::size_t a_plane = static_cast<std::size_t>(Hs) * Ws;
    const std::size_t b_plane = static_cast<std::size_t>(Hb) * Wb;
    for (int o = 0; o < O; ++o)
        for (int i = 0; i < I; ++i)
            for (int ky = 0; ky < kH; ++ky) {
                const int y0 = ky * d - p;
                int sy_lo, sy_hi;
                src_bounds(y0, s, Hb, Hs, sy_lo, sy_hi);
                for (int kx = 0; kx < kW; ++kx) {
                    const int x0 = kx * d - p;
                    int lo, hi;
                    src_bounds(x0, s, Wb, Ws, lo, hi);
                    double acc = 0.0;
                    for (int n = 0; n < N; ++n) {
                        const float* a_p = a + (static_cast<std::size_t>(n) * O + o) * a_plane;
                        const float* b_p = b + (static_cast<std::size_t>(n) * I + i) * b_plane;
                        for (int sy = sy_lo; sy <= sy_hi; ++sy) {
                            const float* a_row = a_p + static_cast<std::size_t>(sy) * Ws;
                            const float* b_row = b_p + static_cast<std::size_t>(sy * s + y0) * Wb;
                            if (s == 1) {
                                const float* br = b_row + x0;
                                float facc = 0.0f;
                                for (int sx = lo; sx <= hi; ++sx) facc += a_row[sx] * br[sx];
                                acc += facc;
                            } else {
                                float facc = 0.0f;
                                for (int sx = lo; sx <= hi; ++sx)
                                    facc += a_row[sx] * b_row[sx * s + x0];
                                acc += facc;
                            }
                        }
                    }
                    dk[((static_cast<std::size_t>(o) * I + i) * kH + ky) * kW + kx] +=
                        static_cast<float>(acc);
                }
            }
}

// Depthwise variants: channel c of the output depends only on channel c of
// the input; kernel layout (C,1,kH,kW).
inline void dw_forward_accum(float* dst, int N, int C, int Ho, int Wo, const float* src, int H,
                             int W, const float* k, int kH, int kW, int s, int p, int d) {
    for (int c = 0; c < C; ++c)
        conv_forward_accum(dst + static_cast<std::size_t>(c) * Ho * Wo, N, 1, Ho, Wo,
                           src + static_cast<std::size_t>(c) * H * W, 1, H, W,
                           k + static_cast<std::size_t>(c) * kH * kW, kH, kW, s, p, d);
}

inline int conv_out_dim(int in, int k, int s, int p, int d) {
    return (in + 2 * p - d * (k - 1) - 1) / s + 1;
}

inline void check_rank4(const Tensor& t, const char* what) {
    if (t.rank() != 4)
        throw DimensionError(std::string(what) + ": expected rank-4 tensor, got " +
                             shape_str(t.shape()));
}

inline bool want_grad(Tape* tape, std::initializer_list<const Tensor*> ins) {
    if (!tape) return false;
    for (const Tensor* t : ins)
        if ((*t).requires_grad()) return true;
    return false;
}

inline void mark_recorded(Tape* tape, std::initializer_list<const Tensor*> ins, Tensor& out) {
    for (const Tensor* t : ins) tape->track(*t);
    out.set_requires_grad(true);
    tape->track(out);
}

}  // namespace detail

// ---------------------------------------------------------------- conv2d

inline Tensor conv2d(Tape* tape, const Tensor& input, const Tensor& kernel, int stride,
                     int padding, int dilation = 1) {
    detail::check_rank4(input, "conv2d input");
    detail::check_rank4(kernel, "conv2d kernel");
    if (stride < 1 || padding < 0 || dilation < 1)
        throw ConfigError("conv2d: stride/padding/dilation out of range");
    const int N = input.dim(0), Ci = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int O = kernel.dim(0), Ck = kernel.dim(1), kH = kernel.dim(2), kW = kernel.dim(3);
    if (Ci != Ck)
        throw DimensionError("conv2d: axis 1 (input channels) is " + std::to_string(Ci) +
                             " but kernel expects " + std::to_string(Ck));
    const int Ho = detail::conv_out_dim(H, kH, stride, padding, dilation);
    const int Wo = detail::conv_out_dim(W, kW, stride, padding, dilation);
    if (Ho < 1) throw DimensionError("conv2d: axis 2 (height) collapses to " + std::to_string(Ho));
    if (Wo < 1) throw DimensionError("conv2d: axis 3 (width) collapses to " + std::to_string(Wo));

    Tensor out = Tensor::zeros({N, O, Ho, Wo});
    detail::conv_forward_accum(out.data(), N, O, Ho, Wo, input.data(), Ci, H, W, kernel.data(), kH,
                               kW, stride, padding, dilation);

    if (detail::want_grad(tape, {&input, &kernel})) {
        detail::mark_recorded(tape, {&input, &kernel}, out);
        auto in_n = input.node();
        auto k_n = kernel.node();
        auto out_n = out.node();
        const int s = stride, p = padding, d = dilation;
        tape->record("conv2d", [=]() {
            if (out_n->grad.empty()) return;
            const float* g = out_n->grad.data();
            if (in_n->requires_grad) {
                if (in_n->grad.empty()) in_n->grad.assign(in_n->data.size(), 0.0f);
                detail::conv_transpose_scatter_accum(in_n->grad.data(), N, Ci, H, W, g, O, Ho, Wo,
                                                     k_n->data.data(), kH, kW, s, p, d);
            }
            if (k_n->requires_grad) {
                if (k_n->grad.empty()) k_n->grad.assign(k_n->data.size(), 0.0f);
                detail::conv_kernel_grad_accum(k_n->grad.data(), O, Ci, kH, kW, g, N, Ho, Wo,
                                               in_n->data.data(), H, W, s, p, d);
            }
        });
    }
    return out;
}

// ------------------------------------------------------- conv2d_transpose
//
// Kernel uses the layout of the conv2d this op is adjoint to: dim 0 matches
// the input channels here, dim 1 gives the output channels, and
// <conv2d(x,k), y> == <x, conv2d_transpose(y,k)> for matching stride/pad.

inline Tensor conv2d_transpose(Tape* tape, const Tensor& input, const Tensor& kernel, int stride,
                               int padding) {
    detail::check_rank4(input, "conv2d_transpose input");
    detail::check_rank4(kernel, "conv2d_transpose kernel");
    if (stride < 1 || padding < 0)
        throw ConfigError("conv2d_transpose: stride/padding out of range");
    const int N = input.dim(0), Ci = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int O = kernel.dim(0), I = kernel.dim(1), kH = kernel.dim(2), kW = kernel.dim(3);
    if (Ci != O)
        throw DimensionError("conv2d_transpose: axis 1 (input channels) is " + std::to_string(Ci) +
                             " but kernel axis 0 is " + std::to_string(O));
    const int Ho = (H - 1) * stride - 2 * padding + kH;
    const int Wo = (W - 1) * stride - 2 * padding + kW;
    if (Ho < 1)
        throw DimensionError("conv2d_transpose: axis 2 (height) collapses to " + std::to_string(Ho));
    if (Wo < 1)
        throw DimensionError("conv2d_transpose: axis 3 (width) collapses to " + std::to_string(Wo));

    Tensor out = Tensor::zeros({N, I, Ho, Wo});
    detail::conv_transpose_scatter_accum(out.data(), N, I, Ho, Wo, input.data(), Ci, H, W,
                                         kernel.data(), kH, kW, stride, padding, 1);

    if (detail::want_grad(tape, {&input, &kernel})) {
        detail::mark_recorded(tape, {&input, &kernel}, out);
        auto in_n = input.node();
        auto k_n = kernel.node();
        auto out_n = out.node();
        const int s = stride, p = padding;
        tape->record("conv2d_transpose", [=]() {
            if (out_n->grad.empty()) return;
            const float* g = out_n->grad.data();
            if (in_n->requires_grad) {
                if (in_n->grad.empty()) in_n->grad.assign(in_n->data.size(), 0.0f);
                // adjoint of the adjoint: a plain conv2d forward over the grad
                detail::conv_forward_accum(in_n->grad.data(), N, Ci, H, W, g, I, Ho, Wo,
                                           k_n->data.data(), kH, kW, s, p, 1);
            }
            if (k_n->requires_grad) {
                if (k_n->grad.empty()) k_n->grad.assign(k_n->data.size(), 0.0f);
                detail::conv_kernel_grad_accum(k_n->grad.data(), O, I, kH, kW, in_n->data.data(), N,
                                               H, W, g, Ho, Wo, s, p, 1);
            }
        });
    }
    return out;
}

// ------------------------------------------------------- depthwise_conv2d
//
// One filter per input channel, kernel layout (C,1,kH,kW).

inline Tensor depthwise_conv2d(Tape* tape, const Tensor& input, const Tensor& kernel, int stride,
                               int padding, int dilation = 1) {
    detail::check_rank4(input, "depthwise_conv2d input");
    detail::check_rank4(kernel, "depthwise_conv2d kernel");
    if (stride < 1 || padding < 0 || dilation < 1)
        throw ConfigError("depthwise_conv2d: stride/padding/dilation out of range");
    const int N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    if (kernel.dim(0) != C)
        throw DimensionError("depthwise_conv2d: axis 1 (channels) is " + std::to_string(C) +
                             " but kernel has " + std::to_string(kernel.dim(0)) + " filters");
    if (kernel.dim(1) != 1)
        throw DimensionError("depthwise_conv2d: kernel channel multiplicity must be 1, got " +
                             std::to_string(kernel.dim(1)));
    const int kH = kernel.dim(2), kW = kernel.dim(3);
    const int Ho = detail::conv_out_dim(H, kH, stride, padding, dilation);
    const int Wo = detail::conv_out_dim(W, kW, stride, padding, dilation);
    if (Ho < 1 || Wo < 1) throw DimensionError("depthwise_conv2d: spatial output collapses");

    Tensor out = Tensor::zeros({N, C, Ho, Wo});
    // per (n,c) plane so cross-channel independence holds structurally
    for (int n = 0; n < N; ++n)
        detail::dw_forward_accum(out.data() + static_cast<std::size_t>(n) * C * Ho * Wo, 1, C, Ho,
                                 Wo, input.data() + static_cast<std::size_t>(n) * C * H * W, H, W,
                                 kernel.data(), kH, kW, stride, padding, dilation);

    if (detail::want_grad(tape, {&input, &kernel})) {
        detail::mark_recorded(tape, {&input, &kernel}, out);
        auto in_n = input.node();
        auto k_n = kernel.node();
        auto out_n = out.node();
        const int s = stride, p = padding, d = dilation;
        tape->record("depthwise_conv2d", [=]() {
            if (out_n->grad.empty()) return;
            const float* g = out_n->grad.data();
            const std::size_t gplane = static_cast<std::size_t>(Ho) * Wo;
            const std::size_t iplane = static_cast<std::size_t>(H) * W;
            if (in_n->requires_grad) {
                if (in_n->grad.empty()) in_n->grad.assign(in_n->data.size(), 0.0f);
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < C; ++c)
                        detail::conv_transpose_scatter_accum(
                            in_n->grad.data() + (static_cast<std::size_t>(n) * C + c) * iplane, 1,
                            1, H, W, g + (static_cast<std::size_t>(n) * C + c) * gplane, 1, Ho, Wo,
                            k_n->data.data() + static_cast<std::size_t>(c) * kernel.dim(2) *
                                                   kernel.dim(3),
                            kernel.dim(2), kernel.dim(3), s, p, d);
            }
            if (k_n->requires_grad) {
                if (k_n->grad.empty()) k_n->grad.assign(k_n->data.size(), 0.0f);
                const int kh = kernel.dim(2), kw = kernel.dim(3);
                for (int c = 0; c < C; ++c)
                    for (int n = 0; n < N; ++n)
                        detail::conv_kernel_grad_accum(
                            k_n->grad.data() + static_cast<std::size_t>(c) * kh * kw, 1, 1, kh, kw,
                            g + (static_cast<std::size_t>(n) * C + c) * gplane, 1, Ho, Wo,
                            in_n->data.data() + (static_cast<std::size_t>(n) * C + c) * iplane, H,
                            W, s, p, d);
            }
        });
    }
    return out;
}

// ------------------------------------------------------------ activations

namespace detail {

template <typename Fwd, typename Bwd>
Tensor elementwise(Tape* tape, const Tensor& x, const char* name, Fwd fwd, Bwd bwd_factor) {
    Tensor out = Tensor::zeros(x.shape());
    const float* xp = x.data();
    float* op = out.data();
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) op[i] = fwd(xp[i]);
    if (want_grad(tape, {&x})) {
        mark_recorded(tape, {&x}, out);
        auto x_n = x.node();
        auto out_n = out.node();
        tape->record(name, [x_n, out_n, bwd_factor]() {
            if (out_n->grad.empty()) return;
            if (x_n->grad.empty()) x_n->grad.assign(x_n->data.size(), 0.0f);
            const std::size_t n = x_n->data.size();
            for (std::size_t i = 0; i < n; ++i)
                x_n->grad[i] += out_n->grad[i] * bwd_factor(x_n->data[i], out_n->data[i]);
        });
    }
    return out;
}

}  // namespace detail

inline Tensor relu(Tape* tape, const Tensor& x) {
    return detail::elementwise(
        tape, x, "relu", [](float v) { return v > 0.0f ? v : 0.0f; },
        [](float v, float) { return v > 0.0f ? 1.0f : 0.0f; });
}

inline Tensor leaky_relu(Tape* tape, const Tensor& x, float alpha) {
    return detail::elementwise(
        tape, x, "leaky_relu", [alpha](float v) { return v > 0.0f ? v : alpha * v; },
        [alpha](float v, float) { return v > 0.0f ? 1.0f : alpha; });
}

inline Tensor tanh(Tape* tape, const Tensor& x) {
    return detail::elementwise(
        tape, x, "tanh", [](float v) { return std::tanh(v); },
        [](float, float y) { return 1.0f - y * y; });
}

inline Tensor sigmoid(Tape* tape, const Tensor& x) {
    return detail::elementwise(
        tape, x, "sigmoid", [](float v) { return 1.0f / (1.0f + std::exp(-v)); },
        [](float, float y) { return y * (1.0f - y); });
}

// ------------------------------------------------------------- norm_layer

enum class NormMode { kBatch, kInstance };

// Batch mode normalizes each channel over (N,H,W); instance mode normalizes
// each (n,c) plane over (H,W). Always uses the statistics of the tensor at
// hand (no running averages), so inference is a pure function of its inputs.
inline Tensor norm_layer(Tape* tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         NormMode mode, float epsilon = 1e-5f) {
    detail::check_rank4(x, "norm_layer input");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (static_cast<int>(gamma.size()) != C || static_cast<int>(beta.size()) != C)
        throw DimensionError("norm_layer: gamma/beta length must equal channel count " +
                             std::to_string(C));

    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const int groups = mode == NormMode::kBatch ? C : N * C;
    std::vector<float> mean(groups), istd(groups);

    Tensor out = Tensor::zeros(x.shape());
    const float* xp = x.data();
    float* op = out.data();
    const float* gp = gamma.data();
    const float* bp = beta.data();

    // value captures only: the backward lambda copies this and runs after
    // the enclosing frame is gone
    auto group_span = [mode, plane, C](int g, std::size_t member) -> std::size_t {
        // batch mode: group g = channel; member walks n then plane
        if (mode == NormMode::kBatch) {
            std::size_t n = member / plane, r = member % plane;
            return (n * C + g) * plane + r;
        }
        return static_cast<std::size_t>(g) * plane + member;
    };
    const std::size_t M = mode == NormMode::kBatch ? static_cast<std::size_t>(N) * plane : plane;

    for (int g = 0; g < groups; ++g) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            double v = xp[group_span(g, m)];
            sum += v;
            sq += v * v;
        }
        const double mu = sum / static_cast<double>(M);
        double var = sq / static_cast<double>(M) - mu * mu;
        if (var < 0.0) var = 0.0;
        mean[g] = static_cast<float>(mu);
        istd[g] = static_cast<float>(1.0 / std::sqrt(var + epsilon));
        const int c = mode == NormMode::kBatch ? g : g % C;
        for (std::size_t m = 0; m < M; ++m) {
            const std::size_t j = group_span(g, m);
            op[j] = gp[c] * (xp[j] - mean[g]) * istd[g] + bp[c];
        }
    }

    if (detail::want_grad(tape, {&x, &gamma, &beta})) {
        detail::mark_recorded(tape, {&x, &gamma, &beta}, out);
        auto x_n = x.node();
        auto g_n = gamma.node();
        auto b_n = beta.node();
        auto out_n = out.node();
        tape->record("norm_layer", [=]() {
            if (out_n->grad.empty()) return;
            const float* dy = out_n->grad.data();
            const float* xd = x_n->data.data();
            const bool need_x = x_n->requires_grad;
            const bool need_g = g_n->requires_grad;
            const bool need_b = b_n->requires_grad;
            if (need_x && x_n->grad.empty()) x_n->grad.assign(x_n->data.size(), 0.0f);
            if (need_g && g_n->grad.empty()) g_n->grad.assign(g_n->data.size(), 0.0f);
            if (need_b && b_n->grad.empty()) b_n->grad.assign(b_n->data.size(), 0.0f);
            for (int g = 0; g < groups; ++g) {
                const int c = mode == NormMode::kBatch ? g : g % C;
                double sum_dy = 0.0, sum_dy_xh = 0.0;
                for (std::size_t m = 0; m < M; ++m) {
                    const std::size_t j = group_span(g, m);
                    const double xh = (xd[j] - mean[g]) * istd[g];
                    sum_dy += dy[j];
                    sum_dy_xh += dy[j] * xh;
                }
                if (need_b) b_n->grad[c] += static_cast<float>(sum_dy);
                if (need_g) g_n->grad[c] += static_cast<float>(sum_dy_xh);
                if (need_x) {
                    const double inv_m = 1.0 / static_cast<double>(M);
                    const double scale = g_n->data[c] * istd[g];
                    for (std::size_t m = 0; m < M; ++m) {
                        const std::size_t j = group_span(g, m);
                        const double xh = (xd[j] - mean[g]) * istd[g];
                        x_n->grad[j] += static_cast<float>(
                            scale * (dy[j] - sum_dy * inv_m - xh * sum_dy_xh * inv_m));
                    }
                }
            }
        });
    }
    return out;
}

// ------------------------------------------------------ bilinear_upsample

namespace detail {

struct AxisTable {
    std::vector<int> a, b;
    std::vector<float> t;
};

inline AxisTable bilinear_axis(int in, int factor) {
    AxisTable tab;
    const int out = in * factor;
    tab.a.resize(out);
    tab.b.resize(out);
    tab.t.resize(out);
    for (int o = 0; o < out; ++o) {
        const float s = (o + 0.5f) / factor - 0.5f;
        const int f = static_cast<int>(std::floor(s));
        tab.t[o] = s - f;
        tab.a[o] = std::clamp(f, 0, in - 1);
        tab.b[o] = std::clamp(f + 1, 0, in - 1);
    }
    return tab;
}

}  // namespace detail

inline Tensor bilinear_upsample(Tape* tape, const Tensor& x, int factor) {
    detail::check_rank4(x, "bilinear_upsample input");
    if (factor < 1) throw ConfigError("bilinear_upsample: factor must be >= 1");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Ho = H * factor, Wo = W * factor;
    const auto ys = detail::bilinear_axis(H, factor);
    const auto xs = detail::bilinear_axis(W, factor);

    Tensor out = Tensor::zeros({N, C, Ho, Wo});
    const float* xp = x.data();
    float* op = out.data();
    for (int nc = 0; nc < N * C; ++nc) {
        const float* in_p = xp + static_cast<std::size_t>(nc) * H * W;
        float* out_p = op + static_cast<std::size_t>(nc) * Ho * Wo;
        for (int oy = 0; oy < Ho; ++oy) {
            const float* r0 = in_p + static_cast<std::size_t>(ys.a[oy]) * W;
            const float* r1 = in_p + static_cast<std::size_t>(ys.b[oy]) * W;
            const float ty = ys.t[oy];
            float* orow = out_p + static_cast<std::size_t>(oy) * Wo;
            for (int ox = 0; ox < Wo; ++ox) {
                const float tx = xs.t[ox];
                const float top = r0[xs.a[ox]] * (1.0f - tx) + r0[xs.b[ox]] * tx;
                const float bot = r1[xs.a[ox]] * (1.0f - tx) + r1[xs.b[ox]] * tx;
                orow[ox] = top * (1.0f - ty) + bot * ty;
            }
        }
    }

    if (detail::want_grad(tape, {&x})) {
        detail::mark_recorded(tape, {&x}, out);
        auto x_n = x.node();
        auto out_n = out.node();
        tape->record("bilinear_upsample", [=]() {
            if (out_n->grad.empty()) return;
            if (x_n->grad.empty()) x_n->grad.assign(x_n->data.size(), 0.0f);
            const float* g = out_n->grad.data();
            for (int nc = 0; nc < N * C; ++nc) {
                float* din = x_n->grad.data() + static_cast<std::size_t>(nc) * H * W;
                const float* gp = g + static_cast<std::size_t>(nc) * Ho * Wo;
                for (int oy = 0; oy < Ho; ++oy) {
                    const float ty = ys.t[oy];
                    for (int ox = 0; ox < Wo; ++ox) {
                        const float tx = xs.t[ox];
                        const float gv = gp[static_cast<std::size_t>(oy) * Wo + ox];
                        din[static_cast<std::size_t>(ys.a[oy]) * W + xs.a[ox]] +=
                            gv * (1.0f - ty) * (1.0f - tx);
                        din[static_cast<std::size_t>(ys.a[oy]) * W + xs.b[ox]] +=
                            gv * (1.0f - ty) * tx;
                        din[static_cast<std::size_t>(ys.b[oy]) * W + xs.a[ox]] +=
                            gv * ty * (1.0f - tx);
                        din[static_cast<std::size_t>(ys.b[oy]) * W + xs.b[ox]] += gv * ty * tx;
                    }
                }
            }
        });
    }
    return out;
}

// --------------------------------------------------------- structural ops

inline Tensor concat_channels(Tape* tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw InputError("concat_channels: no inputs");
    const int N = parts[0].dim(0), H = parts[0].dim(2), W = parts[0].dim(3);
    int Ct = 0;
    for (const Tensor& t : parts) {
        detail::check_rank4(t, "concat_channels input");
        if (t.dim(0) != N || t.dim(2) != H || t.dim(3) != W)
            throw DimensionError("concat_channels: mismatched N/H/W at input " +
                                 shape_str(t.shape()));
        Ct += t.dim(1);
    }
    Tensor out = Tensor::zeros({N, Ct, H, W});
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::size_t coff = 0;
    for (const Tensor& t : parts) {
        const int C = t.dim(1);
        for (int n = 0; n < N; ++n)
            std::copy(t.data() + static_cast<std::size_t>(n) * C * plane,
                      t.data() + static_cast<std::size_t>(n + 1) * C * plane,
                      out.data() + (static_cast<std::size_t>(n) * Ct + coff) * plane);
        coff += C;
    }

    bool any = false;
    for (const Tensor& t : parts) any = any || t.requires_grad();
    if (tape && any) {
        std::vector<std::shared_ptr<TensorNode>> in_nodes;
        for (const Tensor& t : parts) {
            tape->track(t);
            in_nodes.push_back(t.node());
        }
        out.set_requires_grad(true);
        tape->track(out);
        auto out_n = out.node();
        tape->record("concat_channels", [=]() {
            if (out_n->grad.empty()) return;
            std::size_t coff = 0;
            for (const auto& in_n : in_nodes) {
                const int C = in_n->shape[1];
                if (in_n->requires_grad) {
                    if (in_n->grad.empty()) in_n->grad.assign(in_n->data.size(), 0.0f);
                    for (int n = 0; n < N; ++n) {
                        const float* src =
                            out_n->grad.data() + (static_cast<std::size_t>(n) * Ct + coff) * plane;
                        float* dst = in_n->grad.data() + static_cast<std::size_t>(n) * C * plane;
                        for (std::size_t j = 0; j < C * plane; ++j) dst[j] += src[j];
                    }
                }
                coff += C;
            }
        });
    }
    return out;
}

inline Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw DimensionError("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    if (detail::want_grad(tape, {&a, &b})) {
        detail::mark_recorded(tape, {&a, &b}, out);
        auto a_n = a.node(), b_n = b.node(), out_n = out.node();
        tape->record("add", [=]() {
            if (out_n->grad.empty()) return;
            for (auto& n : {a_n, b_n})
                if (n->requires_grad) {
                    if (n->grad.empty()) n->grad.assign(n->data.size(), 0.0f);
                    for (std::size_t i = 0; i < n->grad.size(); ++i)
                        n->grad[i] += out_n->grad[i];
                }
        });
    }
    return out;
}

inline Tensor scale(Tape* tape, const Tensor& x, float factor) {
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] * factor;
    if (detail::want_grad(tape, {&x})) {
        detail::mark_recorded(tape, {&x}, out);
        auto x_n = x.node(), out_n = out.node();
        tape->record("scale", [=]() {
            if (out_n->grad.empty()) return;
            if (x_n->grad.empty()) x_n->grad.assign(x_n->data.size(), 0.0f);
            for (std::size_t i = 0; i < x_n->grad.size(); ++i)
                x_n->grad[i] += out_n->grad[i] * factor;
        });
    }
    return out;
}

// Broadcasts a length-C bias over NCHW.
inline Tensor add_channel_bias(Tape* tape, const Tensor& x, const Tensor& bias) {
    detail::check_rank4(x, "add_channel_bias input");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (static_cast<int>(bias.size()) != C)
        throw DimensionError("add_channel_bias: bias length must equal channel count " +
                             std::to_string(C));
    Tensor out = Tensor::zeros(x.shape());
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const float bv = bias.data()[c];
            const float* xp = x.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            float* op = out.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            for (std::size_t j = 0; j < plane; ++j) op[j] = xp[j] + bv;
        }
    if (detail::want_grad(tape, {&x, &bias})) {
        detail::mark_recorded(tape, {&x, &bias}, out);
        auto x_n = x.node(), b_n = bias.node(), out_n = out.node();
        tape->record("add_channel_bias", [=]() {
            if (out_n->grad.empty()) return;
            if (x_n->requires_grad) {
                if (x_n->grad.empty()) x_n->grad.assign(x_n->data.size(), 0.0f);
                for (std::size_t i = 0; i < x_n->grad.size(); ++i)
                    x_n->grad[i] += out_n->grad[i];
            }
            if (b_n->requires_grad) {
                if (b_n->grad.empty()) b_n->grad.assign(b_n->data.size(), 0.0f);
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < C; ++c) {
                        double acc = 0.0;
                        const float* gp =
                            out_n->grad.data() + (static_cast<std::size_t>(n) * C + c) * plane;
                        for (std::size_t j = 0; j < plane; ++j) acc += gp[j];
                        b_n->grad[c] += static_cast<float>(acc);
                    }
            }
        });
    }
    return out;
}

// Inverted dropout; draws one uniform per element from the caller's stream.
// Training-path only: inference code simply does not apply this op.
inline Tensor dropout(Tape* tape, const Tensor& x, float p, Rng& rng) {
    if (p < 0.0f || p >= 1.0f) throw ConfigError("dropout: p must be in [0,1)");
    auto mask = std::make_shared<std::vector<float>>(x.size());
    const float keep_scale = 1.0f / (1.0f - p);
    for (std::size_t i = 0; i < x.size(); ++i)
        (*mask)[i] = rng.uniform() >= p ? keep_scale : 0.0f;
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] * (*mask)[i];
    if (detail::want_grad(tape, {&x})) {
        detail::mark_recorded(tape, {&x}, out);
        auto x_n = x.node(), out_n = out.node();
        tape->record("dropout", [=]() {
            if (out_n->grad.empty()) return;
            if (x_n->grad.empty()) x_n->grad.assign(x_n->data.size(), 0.0f);
            for (std::size_t i = 0; i < x_n->grad.size(); ++i)
                x_n->grad[i] += out_n->grad[i] * (*mask)[i];
        });
    }
    return out;
}

inline Tensor global_avg_pool(Tape* tape, const Tensor& x) {
    detail::check_rank4(x, "global_avg_pool input");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    Tensor out = Tensor::zeros({N, C, 1, 1});
    for (int nc = 0; nc < N * C; ++nc) {
        double acc = 0.0;
        const float* p = x.data() + static_cast<std::size_t>(nc) * plane;
        for (std::size_t j = 0; j < plane; ++j) acc += p[j];
        out.data()[nc] = static_cast<float>(acc / static_cast<double>(plane));
    }
    if (detail::want_grad(tape, {&x})) {
        detail::mark_recorded(tape, {&x}, out);
        auto x_n = x.node(), out_n = out.node();
        tape->record("global_avg_pool", [=]() {
            if (out_n->grad.empty()) return;
            if (x_n->grad.empty()) x_n->grad.assign(x_n->data.size(), 0.0f);
            const float inv = 1.0f / static_cast<float>(plane);
            for (int nc = 0; nc < N * C; ++nc) {
                const float gv = out_n->grad[nc] * inv;
                float* gp = x_n->grad.data() + static_cast<std::size_t>(nc) * plane;
                for (std::size_t j = 0; j < plane; ++j) gp[j] += gv;
            }
        });
    }
    return out;
}

inline Tensor sum(Tape* tape, const Tensor& x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x.data()[i];
    Tensor out = Tensor::scalar_of(static_cast<float>(acc));
    if (detail::want_grad(tape, {&x})) {
        detail::mark_recorded(tape, {&x}, out);
        auto x_n = x.node(), out_n = out.node();
        tape->record("sum", [=]() {
            if (out_n->grad.empty()) return;
            if (x_n->grad.empty()) x_n->grad.assign(x_n->data.size(), 0.0f);
            const float g = out_n->grad[0];
            for (std::size_t i = 0; i < x_n->grad.size(); ++i) x_n->grad[i] += g;
        });
    }
    return out;
}

// ----------------------------------------------------------------- losses

// Mean absolute difference.
inline Tensor l1_loss(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw DimensionError("l1_loss: shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a.data()[i] - b.data()[i]);
    const std::size_t count = a.size();
    Tensor out = Tensor::scalar_of(static_cast<float>(acc / static_cast<double>(count)));
    if (detail::want_grad(tape, {&a, &b})) {
        detail::mark_recorded(tape, {&a, &b}, out);
        auto a_n = a.node(), b_n = b.node(), out_n = out.node();
        tape->record("l1_loss", [=]() {
            if (out_n->grad.empty()) return;
            const float g = out_n->grad[0] / static_cast<float>(count);
            const bool na = a_n->requires_grad, nb = b_n->requires_grad;
            if (na && a_n->grad.empty()) a_n->grad.assign(a_n->data.size(), 0.0f);
            if (nb && b_n->grad.empty()) b_n->grad.assign(b_n->data.size(), 0.0f);
            for (std::size_t i = 0; i < count; ++i) {
                const float d = a_n->data[i] - b_n->data[i];
                const float s = d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f);
                if (na) a_n->grad[i] += g * s;
                if (nb) b_n->grad[i] -= g * s;
            }
        });
    }
    return out;
}

// Numerically stable mean of max(x,0) - x*t + log(1 + exp(-|x|)).
inline Tensor bce_with_logits(Tape* tape, const Tensor& logits, const Tensor& targets) {
    if (logits.shape() != targets.shape())
        throw DimensionError("bce_with_logits: shape mismatch " + shape_str(logits.shape()) +
                             " vs " + shape_str(targets.shape()));
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double x = logits.data()[i], t = targets.data()[i];
        acc += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::fabs(x)));
    }
    const std::size_t count = logits.size();
    Tensor out = Tensor::scalar_of(static_cast<float>(acc / static_cast<double>(count)));
    if (detail::want_grad(tape, {&logits, &targets})) {
        detail::mark_recorded(tape, {&logits, &targets}, out);
        auto x_n = logits.node(), t_n = targets.node(), out_n = out.node();
        tape->record("bce_with_logits", [=]() {
            if (out_n->grad.empty()) return;
            const float g = out_n->grad[0] / static_cast<float>(count);
            const bool nx = x_n->requires_grad, nt = t_n->requires_grad;
            if (nx && x_n->grad.empty()) x_n->grad.assign(x_n->data.size(), 0.0f);
            if (nt && t_n->grad.empty()) t_n->grad.assign(t_n->data.size(), 0.0f);
            for (std::size_t i = 0; i < count; ++i) {
                const float sig = 1.0f / (1.0f + std::exp(-x_n->data[i]));
                if (nx) x_n->grad[i] += g * (sig - t_n->data[i]);
                if (nt) t_n->grad[i] -= g * x_n->data[i];
            }
        });
    }
    return out;
}

// Per-pixel softmax cross-entropy against integer class labels, mean over
// pixels whose label != ignore_index.
inline Tensor softmax_cross_entropy(Tape* tape, const Tensor& logits,
                                    const std::vector<MaskImage>& labels, int ignore_index = -1) {
    detail::check_rank4(logits, "softmax_cross_entropy logits");
    const int N = logits.dim(0), C = logits.dim(1), H = logits.dim(2), W = logits.dim(3);
    if (static_cast<int>(labels.size()) != N)
        throw DimensionError("softmax_cross_entropy: expected " + std::to_string(N) +
                             " label masks, got " + std::to_string(labels.size()));
    for (const MaskImage& m : labels)
        if (m.height != H || m.width != W)
            throw DimensionError("softmax_cross_entropy: mask dims do not match logits");

    const std::size_t plane = static_cast<std::size_t>(H) * W;
    double acc = 0.0;
    std::size_t count = 0;
    for (int n = 0; n < N; ++n) {
        const float* lp = logits.data() + static_cast<std::size_t>(n) * C * plane;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const int lab = labels[static_cast<std::size_t>(n)].at(y, x);
                if (lab == ignore_index) continue;
                if (lab >= C)
                    throw LabelError("softmax_cross_entropy: label " + std::to_string(lab) +
                                     " at pixel (" + std::to_string(y) + "," + std::to_string(x) +
                                     ") of sample " + std::to_string(n) + " exceeds " +
                                     std::to_string(C - 1));
                const std::size_t px = static_cast<std::size_t>(y) * W + x;
                double mx = lp[px];
                for (int c = 1; c < C; ++c) mx = std::max(mx, static_cast<double>(lp[c * plane + px]));
                double lse = 0.0;
                for (int c = 0; c < C; ++c) lse += std::exp(lp[c * plane + px] - mx);
                lse = mx + std::log(lse);
                acc += lse - lp[static_cast<std::size_t>(lab) * plane + px];
                ++count;
            }
    }
    Tensor out = Tensor::scalar_of(
        count == 0 ? 0.0f : static_cast<float>(acc / static_cast<double>(count)));
    if (count > 0 && detail::want_grad(tape, {&logits})) {
        detail::mark_recorded(tape, {&logits}, out);
        auto x_n = logits.node(), out_n = out.node();
        auto labs = std::make_shared<std::vector<MaskImage>>(labels);
        const int ign = ignore_index;
        tape->record("softmax_cross_entropy", [=]() {
            if (out_n->grad.empty()) return;
            if (x_n->grad.empty()) x_n->grad.assign(x_n->data.size(), 0.0f);
            const float g = out_n->grad[0] / static_cast<float>(count);
            std::vector<double> prob(C);
            for (int n = 0; n < N; ++n) {
                const float* lp = x_n->data.data() + static_cast<std::size_t>(n) * C * plane;
                float* gp = x_n->grad.data() + static_cast<std::size_t>(n) * C * plane;
                for (int y = 0; y < H; ++y)
                    for (int x = 0; x < W; ++x) {
                        const int lab = (*labs)[static_cast<std::size_t>(n)].at(y, x);
                        if (lab == ign) continue;
                        const std::size_t px = static_cast<std::size_t>(y) * W + x;
                        double mx = lp[px];
                        for (int c = 1; c < C; ++c)
                            mx = std::max(mx, static_cast<double>(lp[c * plane + px]));
                        double z = 0.0;
                        for (int c = 0; c < C; ++c) {
                            prob[c] = std::exp(lp[c * plane + px] - mx);
                            z += prob[c];
                        }
                        for (int c = 0; c < C; ++c) {
                            const double soft = prob[c] / z;
                            gp[c * plane + px] +=
                                g * static_cast<float>(soft - (c == lab ? 1.0 : 0.0));
                        }
                    }
            }
        });
    }
    return out;
}

inline Tensor softmax_cross_entropy(Tape* tape, const Tensor& logits, const MaskImage& labels,
                                    int ignore_index = -1) {
    return softmax_cross_entropy(tape, logits, std::vector<MaskImage>{labels}, ignore_index);
}

}  // namespace snowshr
