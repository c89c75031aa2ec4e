#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "unlearn/matrix.hpp"

namespace unlearn {

/// Fully connected ReLU network with a scalar, un-activated output.
struct CriticSpec {
    std::vector<std::size_t> hidden_widths{64, 64};
    std::size_t input_dim = 0;

    void validate() const;
};

/// Scalar critic over sorted posterior rows.
///
/// Besides the usual forward/backward, it exposes the input gradient
/// g(x) = dD/dx and the vector-Jacobian product of g with respect to the
/// parameters, which is what the gradient penalty needs. ReLU masks are
/// piecewise constant, so g is linear in each weight matrix and bias terms
/// do not enter it.
class Critic {
public:
    struct Tape {
        std::vector<Matrix> inputs;  // input to each dense layer
        std::vector<Matrix> masks;   // 1/0 ReLU masks of hidden layers
        std::vector<Matrix> deltas;  // e_l of the input-gradient pass, filled by input_gradient()
    };

    explicit Critic(CriticSpec spec);

    const CriticSpec& spec() const noexcept { return spec_; }
    std::size_t parameter_count() const noexcept { return param_count_; }

    std::vector<double> initial_parameters(std::uint64_t seed) const;

    /// D(x) for every row.
    std::vector<double> forward(std::span<const double> params, const Matrix& x, Tape* tape = nullptr) const;

    /// Accumulates d(sum_n dout[n] * D(x_n)) / d(params) into grad.
    void backward_params(std::span<const double> params, const Tape& tape, std::span<const double> dout,
                         std::span<double> grad) const;

    /// Rows of dD/dx. Records the intermediate deltas into the tape.
    Matrix input_gradient(std::span<const double> params, Tape& tape) const;

    /// Accumulates d(sum_n <r_n, dD/dx(x_n)>) / d(params) into grad.
    /// Requires a tape that went through input_gradient().
    void input_gradient_vjp(std::span<const double> params, const Tape& tape, const Matrix& r,
                            std::span<double> grad) const;

private:
    struct Dense {
        std::size_t in, out, offset;
    };

    std::span<const double> weights(std::span<const double> p, const Dense& d) const {
        return p.subspan(d.offset, d.in * d.out);
    }
    std::span<const double> bias(std::span<const double> p, const Dense& d) const {
        return p.subspan(d.offset + d.in * d.out, d.out);
    }

    CriticSpec spec_;
    std::vector<Dense> layers_;
    std::size_t param_count_ = 0;
};

}  // namespace unlearn
