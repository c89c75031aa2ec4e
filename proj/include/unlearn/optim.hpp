#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace unlearn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;  // L2 term added to the gradient
};

/// Adaptive moment estimation with bias correction.
class Adam {
public:
    Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad);

    std::size_t steps() const noexcept { return t_; }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace unlearn
