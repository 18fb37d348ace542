#pragma once

#include <cmath>
#include <string>

#include "snowshr/adam.hpp"
#include "snowshr/ops.hpp"
#include "snowshr/params.hpp"
#include "snowshr/rng.hpp"

// Parameter creation plus apply helpers shared by both networks. Builders
// register tensors by name during construction; forward passes look the
// names up, so the checkpoint format is just the named parameter set.

namespace snowshr {

namespace layers {

inline Tensor make_normal(Shape shape, Rng& rng, float stddev) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.normalf() * stddev;
    return t;
}

inline void add_conv(ParamSet& params, const std::string& name, int out_ch, int in_ch, int k,
                     Rng& rng, float stddev, bool bias = false) {
    params.add(name + ".w", make_normal({out_ch, in_ch, k, k}, rng, stddev));
    if (bias) params.add(name + ".b", Tensor::zeros({out_ch}));
}

// Transposed conv kernels share the layout of the conv they are adjoint to,
// so dim 0 is this layer's input channel count.
inline void add_tconv(ParamSet& params, const std::string& name, int in_ch, int out_ch, int k,
                      Rng& rng, float stddev, bool bias = false) {
    params.add(name + ".w", make_normal({in_ch, out_ch, k, k}, rng, stddev));
    if (bias) params.add(name + ".b", Tensor::zeros({out_ch}));
}

inline void add_depthwise(ParamSet& params, const std::string& name, int ch, int k, Rng& rng,
                          float stddev) {
    params.add(name + ".w", make_normal({ch, 1, k, k}, rng, stddev));
}

inline void add_norm(ParamSet& params, const std::string& name, int ch) {
    params.add(name + ".g", Tensor::full({ch}, 1.0f));
    params.add(name + ".be", Tensor::zeros({ch}));
}

inline float he_stddev(int fan_in) { return std::sqrt(2.0f / static_cast<float>(fan_in)); }

inline Tensor conv(Tape* tape, const ParamSet& params, const std::string& name, const Tensor& x,
                   int stride, int padding, int dilation = 1) {
    Tensor y = conv2d(tape, x, params.at(name + ".w"), stride, padding, dilation);
    if (params.contains(name + ".b")) y = add_channel_bias(tape, y, params.at(name + ".b"));
    return y;
}

inline Tensor tconv(Tape* tape, const ParamSet& params, const std::string& name, const Tensor& x,
                    int stride, int padding) {
    Tensor y = conv2d_transpose(tape, x, params.at(name + ".w"), stride, padding);
    if (params.contains(name + ".b")) y = add_channel_bias(tape, y, params.at(name + ".b"));
    return y;
}

inline Tensor dwconv(Tape* tape, const ParamSet& params, const std::string& name, const Tensor& x,
                     int stride, int padding, int dilation = 1) {
    return depthwise_conv2d(tape, x, params.at(name + ".w"), stride, padding, dilation);
}

inline Tensor norm(Tape* tape, const ParamSet& params, const std::string& name, const Tensor& x,
                   NormMode mode = NormMode::kInstance) {
    return norm_layer(tape, x, params.at(name + ".g"), params.at(name + ".be"), mode);
}

}  // namespace layers

}  // namespace snowshr
