#include "unlearn/critic.hpp"

#include <cmath>

#include "unlearn/error.hpp"
#include "unlearn/kernels.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

void CriticSpec::validate() const {
    if (input_dim == 0) throw ConfigError("critic input_dim must be positive");
    for (auto w : hidden_widths)
        if (w == 0) throw ConfigError("critic hidden widths must be positive");
}

Critic::Critic(CriticSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    std::size_t in = spec_.input_dim;
    auto add = [&](std::size_t out) {
        layers_.push_back({in, out, param_count_});
        param_count_ += in * out + out;
        in = out;
    };
    for (auto w : spec_.hidden_widths) add(w);
    add(1);
}

std::vector<double> Critic::initial_parameters(std::uint64_t seed) const {
    std::vector<double> p(param_count_, 0.0);
    Rng rng(mix_seed(seed));
    for (const auto& d : layers_) {
        const double bound = std::sqrt(6.0 / static_cast<double>(d.in));
        for (std::size_t i = 0; i < d.in * d.out; ++i) p[d.offset + i] = (2.0 * uniform01(rng) - 1.0) * bound;
    }
    return p;
}

std::vector<double> Critic::forward(std::span<const double> params, const Matrix& x, Tape* tape) const {
    if (x.cols != spec_.input_dim) throw DimensionError("critic input has the wrong width");
    if (params.size() != param_count_) throw DimensionError("critic parameter vector has the wrong length");
    if (tape) {
        tape->inputs.clear();
        tape->masks.clear();
        tape->deltas.clear();
    }
    Matrix cur = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& d = layers_[l];
        Matrix z(cur.rows, d.out);
        kernels::affine(cur.data, weights(params, d), bias(params, d), z.data, {cur.rows, d.in, d.out});
        if (tape) tape->inputs.push_back(cur);
        if (l + 1 < layers_.size()) {
            Matrix mask(z.rows, z.cols);
            for (std::size_t i = 0; i < z.data.size(); ++i) {
                const bool on = z.data[i] > 0.0;
                mask.data[i] = on ? 1.0 : 0.0;
                if (!on) z.data[i] = 0.0;
            }
            if (tape) tape->masks.push_back(std::move(mask));
        }
        cur = std::move(z);
    }
    return std::move(cur.data);
}

void Critic::backward_params(std::span<const double> params, const Tape& tape, std::span<const double> dout,
                             std::span<double> grad) const {
    if (grad.size() != param_count_) throw DimensionError("critic gradient vector has the wrong length");
    const std::size_t n = dout.size();
    Matrix g(n, 1);
    for (std::size_t i = 0; i < n; ++i) g.data[i] = dout[i];
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& d = layers_[l];
        const kernels::AffineShape s{n, d.in, d.out};
        kernels::affine_param_grad(tape.inputs[l].data, g.data, grad.subspan(d.offset, d.in * d.out),
                                   grad.subspan(d.offset + d.in * d.out, d.out), s);
        if (l == 0) break;
        Matrix gin(n, d.in);
        kernels::affine_input_grad(g.data, weights(params, d), gin.data, s);
        const Matrix& mask = tape.masks[l - 1];
        for (std::size_t i = 0; i < gin.data.size(); ++i) gin.data[i] *= mask.data[i];
        g = std::move(gin);
    }
}

Matrix Critic::input_gradient(std::span<const double> params, Tape& tape) const {
    const std::size_t n = tape.inputs.front().rows;
    const std::size_t L = layers_.size();
    tape.deltas.assign(L, Matrix());
    Matrix e(n, 1, 1.0);
    for (std::size_t l = L; l-- > 0;) {
        const auto& d = layers_[l];
        Matrix v(n, d.in);
        kernels::affine_input_grad(e.data, weights(params, d), v.data, {n, d.in, d.out});
        tape.deltas[l] = std::move(e);
        if (l == 0) return v;
        const Matrix& mask = tape.masks[l - 1];
        for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] *= mask.data[i];
        e = std::move(v);
    }
    return {};
}

void Critic::input_gradient_vjp(std::span<const double> params, const Tape& tape, const Matrix& r,
                                std::span<double> grad) const {
    if (tape.deltas.size() != layers_.size()) throw InputError("tape has no input-gradient pass");
    if (grad.size() != param_count_) throw DimensionError("critic gradient vector has the wrong length");
    const std::size_t n = r.rows;
    // v_{l-1} = W_l^T e_l and e_l = m_l * v_l; walk the chain from the input side.
    Matrix dv = r;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& d = layers_[l];
        const kernels::AffineShape s{n, d.in, d.out};
        std::vector<double> unused_bias(d.out, 0.0);
        kernels::affine_param_grad(dv.data, tape.deltas[l].data, grad.subspan(d.offset, d.in * d.out), unused_bias, s);
        if (l + 1 == layers_.size()) break;
        Matrix de(n, d.out);
        const std::vector<double> zero(d.out, 0.0);
        kernels::affine(dv.data, weights(params, d), zero, de.data, s);
        const Matrix& mask = tape.masks[l];
        for (std::size_t i = 0; i < de.data.size(); ++i) de.data[i] *= mask.data[i];
        dv = std::move(de);
    }
}

}  // namespace unlearn
