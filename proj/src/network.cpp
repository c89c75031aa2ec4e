#include "unlearn/network.hpp"

#include <cmath>
#include <string>

#include "unlearn/error.hpp"
#include "unlearn/kernels.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

std::string_view to_string(ModelKind k) {
    return k == ModelKind::mlp ? "mlp" : "small_cnn";
}

ModelKind model_kind_from_string(std::string_view s) {
    if (s == "mlp") return ModelKind::mlp;
    if (s == "small_cnn") return ModelKind::small_cnn;
    throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

void ModelSpec::validate() const {
    if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
    if (input_dim == 0) throw ConfigError("input_dim must be positive");
    if (layer_widths.empty()) throw ConfigError("layer_widths must not be empty");
    if (layer_widths.back() != num_classes) throw ConfigError("last layer width must equal num_classes");
    for (auto w : layer_widths)
        if (w == 0) throw ConfigError("layer widths must be positive");
    if (kind == ModelKind::small_cnn) {
        if (image.channels * image.height * image.width != input_dim)
            throw ConfigError("image shape does not match input_dim");
        if (conv_channels.empty()) throw ConfigError("small_cnn needs at least one conv layer");
        std::size_t h = image.height, w = image.width;
        for (auto c : conv_channels) {
            if (c == 0) throw ConfigError("conv channel counts must be positive");
            h /= 2;
            w /= 2;
            if (h == 0 || w == 0) throw ConfigError("image too small for the conv/pool stack");
        }
    }
}

ModelSpec mlp_spec(std::size_t input_dim, std::vector<std::size_t> hidden, std::size_t num_classes) {
    ModelSpec s;
    s.input_dim = input_dim;
    s.layer_widths = std::move(hidden);
    s.layer_widths.push_back(num_classes);
    s.num_classes = num_classes;
    return s;
}

Network::Network(const ModelSpec& spec) {
    spec.validate();
    std::size_t width = spec.input_dim;
    auto add = [&](Layer l) {
        l.param_offset = param_count_;
        param_count_ += l.param_count;
        width = l.out_size;
        layers_.push_back(l);
    };
    if (spec.kind == ModelKind::small_cnn) {
        std::size_t c = spec.image.channels, h = spec.image.height, w = spec.image.width;
        for (auto oc : spec.conv_channels) {
            Layer conv{LayerKind::conv, c * h * w, oc * h * w};
            conv.channels = c;
            conv.height = h;
            conv.width = w;
            conv.out_channels = oc;
            conv.param_count = oc * c * 9 + oc;
            add(conv);
            add({LayerKind::relu, width, width});
            Layer pool{LayerKind::pool, oc * h * w, oc * (h / 2) * (w / 2)};
            pool.channels = oc;
            pool.height = h;
            pool.width = w;
            add(pool);
            c = oc;
            h /= 2;
            w /= 2;
        }
    }
    for (std::size_t i = 0; i < spec.layer_widths.size(); ++i) {
        const std::size_t out = spec.layer_widths[i];
        Layer dense{LayerKind::dense, width, out};
        dense.param_count = out * width + out;
        add(dense);
        if (i + 1 < spec.layer_widths.size()) add({LayerKind::relu, width, width});
    }
}

std::vector<double> Network::initial_parameters(std::uint64_t seed) const {
    std::vector<double> p(param_count_, 0.0);
    Rng rng(mix_seed(seed));
    for (const auto& l : layers_) {
        std::size_t fan_in = 0, weights = 0;
        if (l.kind == LayerKind::dense) {
            fan_in = l.in_size;
            weights = l.in_size * l.out_size;
        } else if (l.kind == LayerKind::conv) {
            fan_in = l.channels * 9;
            weights = l.out_channels * l.channels * 9;
        } else {
            continue;
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < weights; ++i) p[l.param_offset + i] = (2.0 * uniform01(rng) - 1.0) * bound;
    }
    return p;
}

namespace {

void max_pool(const Matrix& in, Matrix& out, std::vector<std::uint32_t>& arg, const Network::Layer& l) {
    const std::size_t H = l.height, W = l.width, oh = H / 2, ow = W / 2;
    arg.assign(in.rows * l.out_size, 0);
    for (std::size_t n = 0; n < in.rows; ++n) {
        const double* x = in.data.data() + n * l.in_size;
        double* y = out.data.data() + n * l.out_size;
        std::uint32_t* a = arg.data() + n * l.out_size;
        for (std::size_t c = 0; c < l.channels; ++c)
            for (std::size_t i = 0; i < oh; ++i)
                for (std::size_t j = 0; j < ow; ++j) {
                    std::size_t best = c * H * W + (2 * i) * W + 2 * j;
                    for (std::size_t di = 0; di < 2; ++di)
                        for (std::size_t dj = 0; dj < 2; ++dj) {
                            const std::size_t idx = c * H * W + (2 * i + di) * W + (2 * j + dj);
                            if (x[idx] > x[best]) best = idx;
                        }
                    const std::size_t o = c * oh * ow + i * ow + j;
                    y[o] = x[best];
                    a[o] = static_cast<std::uint32_t>(best);
                }
    }
}

}  // namespace

Matrix Network::forward(std::span<const double> params, const Matrix& x, Tape* tape) const {
    if (x.cols != input_dim())
        throw DimensionError("input has " + std::to_string(x.cols) + " features, network expects " +
                             std::to_string(input_dim()));
    if (params.size() != param_count_) throw DimensionError("parameter vector has the wrong length");
    if (tape) {
        tape->inputs.clear();
        tape->argmax.clear();
    }
    Matrix cur = x;
    for (const auto& l : layers_) {
        Matrix next(cur.rows, l.out_size);
        switch (l.kind) {
            case LayerKind::dense: {
                auto w = params.subspan(l.param_offset, l.in_size * l.out_size);
                auto b = params.subspan(l.param_offset + l.in_size * l.out_size, l.out_size);
                kernels::affine(cur.data, w, b, next.data, {cur.rows, l.in_size, l.out_size});
                break;
            }
            case LayerKind::relu:
                for (std::size_t i = 0; i < cur.data.size(); ++i) next.data[i] = cur.data[i] > 0.0 ? cur.data[i] : 0.0;
                break;
            case LayerKind::conv: {
                const std::size_t nw = l.out_channels * l.channels * 9;
                kernels::conv3x3(cur.data, params.subspan(l.param_offset, nw),
                                 params.subspan(l.param_offset + nw, l.out_channels), next.data,
                                 {cur.rows, l.channels, l.out_channels, l.height, l.width});
                break;
            }
            case LayerKind::pool: {
                std::vector<std::uint32_t> arg;
                max_pool(cur, next, arg, l);
                if (tape) tape->argmax.push_back(std::move(arg));
                break;
            }
        }
        if (tape)
            tape->inputs.push_back(std::move(cur));
        cur = std::move(next);
    }
    return cur;
}

void Network::backward(std::span<const double> params, const Tape& tape, const Matrix& dlogits,
                       std::span<double> grad, Matrix* dinput) const {
    if (tape.inputs.size() != layers_.size()) throw InputError("tape does not match network");
    if (grad.size() != param_count_) throw DimensionError("gradient vector has the wrong length");
    Matrix g = dlogits;
    std::size_t pool_idx = tape.argmax.size();
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const auto& l = layers_[li];
        const Matrix& in = tape.inputs[li];
        const bool need_input_grad = li > 0 || dinput != nullptr;
        Matrix gin;
        switch (l.kind) {
            case LayerKind::dense: {
                const kernels::AffineShape s{in.rows, l.in_size, l.out_size};
                auto w = params.subspan(l.param_offset, l.in_size * l.out_size);
                kernels::affine_param_grad(in.data, g.data, grad.subspan(l.param_offset, l.in_size * l.out_size),
                                           grad.subspan(l.param_offset + l.in_size * l.out_size, l.out_size), s);
                if (need_input_grad) {
                    gin = Matrix(in.rows, l.in_size);
                    kernels::affine_input_grad(g.data, w, gin.data, s);
                }
                break;
            }
            case LayerKind::relu:
                gin = std::move(g);
                for (std::size_t i = 0; i < gin.data.size(); ++i)
                    if (!(in.data[i] > 0.0)) gin.data[i] = 0.0;
                break;
            case LayerKind::conv: {
                const kernels::ConvShape s{in.rows, l.channels, l.out_channels, l.height, l.width};
                const std::size_t nw = l.out_channels * l.channels * 9;
                kernels::conv3x3_param_grad(in.data, g.data, grad.subspan(l.param_offset, nw),
                                            grad.subspan(l.param_offset + nw, l.out_channels), s);
                if (need_input_grad) {
                    gin = Matrix(in.rows, l.in_size);
                    kernels::conv3x3_input_grad(g.data, params.subspan(l.param_offset, nw), gin.data, s);
                }
                break;
            }
            case LayerKind::pool: {
                const auto& arg = tape.argmax[--pool_idx];
                gin = Matrix(in.rows, l.in_size);
                for (std::size_t n = 0; n < in.rows; ++n)
                    for (std::size_t o = 0; o < l.out_size; ++o)
                        gin.data[n * l.in_size + arg[n * l.out_size + o]] += g.data[n * l.out_size + o];
                break;
            }
        }
        g = std::move(gin);
    }
    if (dinput) *dinput = std::move(g);
}

}  // namespace unlearn
