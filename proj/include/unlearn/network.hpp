#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "unlearn/matrix.hpp"

namespace unlearn {

enum class ModelKind { mlp, small_cnn };
enum class Activation { relu };

std::string_view to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);

struct ImageShape {
    std::size_t channels = 1;
    std::size_t height = 0;
    std::size_t width = 0;

    friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// Architecture of a softmax classifier.
///
/// `layer_widths` lists the fully connected layers after the input (and after
/// the convolutional stack for small_cnn); the last width is the class count.
/// A small_cnn runs each entry of `conv_channels` as a 3x3 same convolution,
/// ReLU and 2x2 max pool over rows laid out as `image` (CHW) before flattening.
struct ModelSpec {
    ModelKind kind = ModelKind::mlp;
    std::size_t input_dim = 0;
    std::vector<std::size_t> layer_widths;
    std::size_t num_classes = 0;
    Activation activation = Activation::relu;
    ImageShape image;
    std::vector<std::size_t> conv_channels;

    /// Throws ConfigError if the fields are inconsistent.
    void validate() const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Convenience constructor for a fully connected classifier.
ModelSpec mlp_spec(std::size_t input_dim, std::vector<std::size_t> hidden, std::size_t num_classes);

/// Stateless description of the layer stack of a ModelSpec. Parameters live
/// in a flat vector owned by the caller; the network only knows their layout.
class Network {
public:
    enum class LayerKind { dense, relu, conv, pool };

    struct Layer {
        LayerKind kind;
        std::size_t in_size;   // per-example input width
        std::size_t out_size;  // per-example output width
        std::size_t param_offset = 0;
        std::size_t param_count = 0;
        // conv / pool geometry of the input
        std::size_t channels = 0, height = 0, width = 0, out_channels = 0;
    };

    /// Activations recorded during a forward pass for use by backward().
    struct Tape {
        std::vector<Matrix> inputs;                       // input to every layer
        std::vector<std::vector<std::uint32_t>> argmax;  // per pool layer
    };

    explicit Network(const ModelSpec& spec);

    std::size_t parameter_count() const noexcept { return param_count_; }
    std::size_t input_dim() const noexcept { return layers_.front().in_size; }
    std::size_t output_dim() const noexcept { return layers_.back().out_size; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }

    /// He-uniform weights, zero biases.
    std::vector<double> initial_parameters(std::uint64_t seed) const;

    /// Logits for every row of `x`. Records activations into `tape` when given.
    Matrix forward(std::span<const double> params, const Matrix& x, Tape* tape = nullptr) const;

    /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logits).
    /// Writes d(loss)/d(input) into `dinput` when given.
    void backward(std::span<const double> params, const Tape& tape, const Matrix& dlogits, std::span<double> grad,
                  Matrix* dinput = nullptr) const;

private:
    std::vector<Layer> layers_;
    std::size_t param_count_ = 0;
};

}  // namespace unlearn
