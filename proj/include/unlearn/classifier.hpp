#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unlearn/dataset.hpp"
#include "unlearn/matrix.hpp"
#include "unlearn/network.hpp"

namespace unlearn {

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    /// Stop after the first epoch whose train accuracy reaches this value.
    std::optional<double> target_train_accuracy;

    void validate() const;
};

/// SHA-256 of the little-endian parameter bytes.
struct Fingerprint {
    std::array<std::uint8_t, 32> bytes{};

    std::string hex() const;
    static Fingerprint from_hex(const std::string& hex);

    friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

struct TrainMeta {
    double train_accuracy = 0.0;
    std::optional<double> test_accuracy;
    std::size_t epochs_run = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const TrainMeta&, const TrainMeta&) = default;
};

struct TrainedModel {
    ModelSpec spec;
    std::vector<double> parameters;
    Fingerprint fingerprint;
    TrainMeta meta;
};

/// Softmax outputs, one row per example. Rows are non-negative and sum to 1.
struct PosteriorBatch {
    Matrix rows;

    std::size_t size() const noexcept { return rows.rows; }
    std::size_t classes() const noexcept { return rows.cols; }

    /// Throws InputError if a row is negative, non-finite, or does not sum to 1 within `tol`.
    void validate(double tol = 1e-6) const;
};

/// Per-epoch callback: (epoch index from 1, train accuracy). Used for progress reporting.
using EpochCallback = std::function<void(std::size_t, double)>;

/// Mini-batch Adam training with seed-driven initialization and shuffling.
/// `eval`, when given, fills meta.test_accuracy. Throws DivergenceError if the
/// loss becomes non-finite.
TrainedModel train_classifier(const ModelSpec& spec, const Dataset& data, const TrainConfig& cfg,
                              const Dataset* eval = nullptr, const EpochCallback& on_epoch = {});

/// A model with freshly initialized parameters, trained for zero epochs.
TrainedModel init_model(const ModelSpec& spec, std::uint64_t seed);

Matrix logits(const TrainedModel& model, const Matrix& features);
PosteriorBatch posterior(const TrainedModel& model, const Matrix& features);
std::vector<int> predict(const TrainedModel& model, const Matrix& features);

/// Fraction of argmax-correct predictions. Throws InputError on empty data.
double evaluate_accuracy(const TrainedModel& model, const Dataset& data);

Fingerprint param_fingerprint(std::span<const double> parameters);
Fingerprint param_fingerprint(const TrainedModel& model);

/// Recomputes `model.fingerprint` from its parameters.
void refresh_fingerprint(TrainedModel& model);

TrainedModel clone_model(const TrainedModel& model);

}  // namespace unlearn
