#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nclosure/linalg.hpp"

namespace ncm {

enum class Activation { Linear, Tanh, Swish };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// Tensor shape: `len` spatial positions by `ch` channels, stored position-major
/// (index = position * ch + channel). Flat vectors use len = 1.
struct Shape {
    std::size_t len = 1;
    std::size_t ch = 1;
    std::size_t size() const { return len * ch; }
    bool operator==(const Shape&) const = default;
};

/// Fully connected layer over the flattened input.
struct Dense {
    std::size_t in = 0, out = 0;
    Activation act = Activation::Linear;
};

/// Elman cell h_k = act(Wx x_k + Wh h_{k-1} + b); outputs the final hidden state.
struct SimpleRnnCell {
    std::size_t in = 0, hidden = 0;
    Activation act = Activation::Tanh;
};

/// Convolutional Elman cell h_k = act(Kx * x_k + Kh * h_{k-1} + b) over a 1-D field,
/// followed by an output convolution act(Ko * h_K + bo) of the same width.
struct ConvRnnCell {
    std::size_t in_ch = 0, hidden = 0, kernel = 1;
    Activation act = Activation::Swish;
};

/// Stride-1 convolution with zero "same" padding.
struct Conv1d {
    std::size_t in_ch = 0, out_ch = 0, kernel = 1;
    Activation act = Activation::Swish;
};

/// Stride-1 transposed convolution with "same" padding (correlation with the flipped kernel).
struct Conv1dTranspose {
    std::size_t in_ch = 0, out_ch = 0, kernel = 1;
    Activation act = Activation::Swish;
};

/// Appends two channels: the depth grid and the irradiance profile from the evaluation context.
struct AddExtraChannels {};

/// Maps each scalar s to (β s, −s, (1−β) s) with one trainable β.
struct BioConstrain {};

using LayerSpec = std::variant<Dense, SimpleRnnCell, ConvRnnCell, Conv1d, Conv1dTranspose, AddExtraChannels, BioConstrain>;

/// Side inputs consumed by AddExtraChannels.
struct EvalContext {
    std::span<const double> depth;
    std::span<const double> irradiance;
};

/// Layered network with a flat parameter vector and explicit reverse-mode derivatives.
///
/// A recurrent cell, when present, must be the first layer; the network then
/// consumes a chronological sequence of inputs.
class Network {
public:
    Network() = default;
    Network(Shape input, std::vector<LayerSpec> layers);

    Shape input_shape() const { return input_; }
    Shape output_shape() const { return shapes_.back(); }
    std::size_t param_count() const { return n_params_; }
    bool recurrent() const;
    const std::vector<LayerSpec>& layers() const { return layers_; }
    /// Offset of layer i's parameters within the flat vector.
    std::size_t param_offset(std::size_t i) const { return offsets_[i]; }
    /// Human-readable layer list with shapes; stable across builds.
    std::string fingerprint() const;

    Vec forward(std::span<const double> x, std::span<const double> theta, const EvalContext* ctx = nullptr) const;
    Vec rnn_forward(const std::vector<Vec>& seq, std::span<const double> theta,
                    const EvalContext* ctx = nullptr) const;

    struct Gradients {
        std::vector<Vec> dx;  // one per sequence element (a single entry for feed-forward nets)
        Vec dtheta;
    };
    /// Gradient of w·out with respect to inputs and parameters.
    Gradients vjp(const std::vector<Vec>& seq, std::span<const double> theta, std::span<const double> w,
                  const EvalContext* ctx = nullptr, bool want_dx = true, bool want_dtheta = true) const;

    Vec vjp_input(std::span<const double> x, std::span<const double> theta, std::span<const double> w,
                  const EvalContext* ctx = nullptr) const;
    Vec vjp_params(std::span<const double> x, std::span<const double> theta, std::span<const double> w,
                   const EvalContext* ctx = nullptr) const;

    /// Glorot-uniform weights, zero biases, β = 0.5. With zero_final the last
    /// weighted layer is zeroed so the network output starts at zero.
    Vec init_params(std::uint64_t seed, bool zero_final = true) const;

private:
    struct Tape;
    void run(const std::vector<Vec>& seq, std::span<const double> theta, const EvalContext* ctx, Tape* tape,
             Vec& out) const;
    void check_theta(std::span<const double> theta) const;

    Shape input_;
    std::vector<LayerSpec> layers_;
    std::vector<Shape> shapes_;  // shapes_[i] = output shape of layer i; shapes_[0] is the input
    std::vector<std::size_t> offsets_;
    std::size_t n_params_ = 0;
};

std::size_t layer_param_count(const LayerSpec& layer, Shape in);

/// Architectures of the supplementary tables, keyed "<experiment>/<closure>/<net>",
/// e.g. "exp1/node/f", "exp2/distributed/g".
Network table_architecture(const std::string& key);
std::vector<std::string> table_architecture_keys();

}  // namespace ncm
