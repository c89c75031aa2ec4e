#include "unlearn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "unlearn/error.hpp"

namespace unlearn {

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows, logits.cols);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        auto z = logits.row(r);
        auto out = p.row(r);
        const double m = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < z.size(); ++c) {
            out[c] = std::exp(z[c] - m);
            sum += out[c];
        }
        for (double& v : out) v /= sum;
    }
    return p;
}

double cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* dlogits, double scale) {
    if (labels.size() != logits.rows) throw DimensionError("label count does not match logits rows");
    if (logits.rows == 0) throw InputError("cross-entropy of an empty batch");
    const double inv_n = 1.0 / static_cast<double>(logits.rows);
    if (dlogits) *dlogits = Matrix(logits.rows, logits.cols);
    double total = 0.0;
    for (std::size_t r = 0; r < logits.rows; ++r) {
        auto z = logits.row(r);
        const double m = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - m);
        const double lse = m + std::log(sum);
        const auto y = static_cast<std::size_t>(labels[r]);
        total += lse - z[y];
        if (dlogits) {
            auto d = dlogits->row(r);
            for (std::size_t c = 0; c < z.size(); ++c) d[c] = scale * inv_n * std::exp(z[c] - lse);
            d[y] -= scale * inv_n;
        }
    }
    return total * inv_n;
}

Matrix softmax_backward(const Matrix& probs, const Matrix& dprobs) {
    Matrix dz(probs.rows, probs.cols);
    for (std::size_t r = 0; r < probs.rows; ++r) {
        auto p = probs.row(r);
        auto dp = dprobs.row(r);
        double inner = 0.0;
        for (std::size_t c = 0; c < p.size(); ++c) inner += p[c] * dp[c];
        auto out = dz.row(r);
        for (std::size_t c = 0; c < p.size(); ++c) out[c] = p[c] * (dp[c] - inner);
    }
    return dz;
}

}  // namespace unlearn
