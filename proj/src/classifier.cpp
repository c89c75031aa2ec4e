#include "unlearn/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include <openssl/evp.h>

#include "unlearn/error.hpp"
#include "unlearn/loss.hpp"
#include "unlearn/optim.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    if (target_train_accuracy && !(*target_train_accuracy > 0.0 && *target_train_accuracy <= 1.0))
        throw ConfigError("target_train_accuracy must lie in (0, 1]");
}

std::string Fingerprint::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (auto b : bytes) {
        s += digits[b >> 4];
        s += digits[b & 15];
    }
    return s;
}

Fingerprint Fingerprint::from_hex(const std::string& hex) {
    if (hex.size() != 64) throw InputError("fingerprint must be 64 hex digits");
    auto nibble = [](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
        throw InputError("invalid hex digit in fingerprint");
    };
    Fingerprint f;
    for (std::size_t i = 0; i < 32; ++i)
        f.bytes[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return f;
}

void PosteriorBatch::validate(double tol) const {
    for (std::size_t r = 0; r < rows.rows; ++r) {
        double sum = 0.0;
        for (double v : rows.row(r)) {
            if (!std::isfinite(v) || v < 0.0) throw InputError("posterior row " + std::to_string(r) + " is invalid");
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol)
            throw InputError("posterior row " + std::to_string(r) + " sums to " + std::to_string(sum));
    }
}

TrainedModel init_model(const ModelSpec& spec, std::uint64_t seed) {
    Network net(spec);
    TrainedModel m;
    m.spec = spec;
    m.parameters = net.initial_parameters(seed);
    m.meta.seed = seed;
    refresh_fingerprint(m);
    return m;
}

TrainedModel train_classifier(const ModelSpec& spec, const Dataset& data, const TrainConfig& cfg,
                              const Dataset* eval, const EpochCallback& on_epoch) {
    cfg.validate();
    if (data.empty()) throw InputError("cannot train on an empty dataset");
    if (data.dim() != spec.input_dim)
        throw DimensionError("data has " + std::to_string(data.dim()) + " features, model expects " +
                             std::to_string(spec.input_dim));
    data.validate(static_cast<int>(spec.num_classes));

    const Network net(spec);
    TrainedModel model;
    model.spec = spec;
    model.parameters = net.initial_parameters(derive_seed(cfg.seed, "init"));
    Adam opt(net.parameter_count(), {cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay});
    Rng rng(derive_seed(cfg.seed, "shuffle"));

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> grad(net.parameter_count());
    Network::Tape tape;

    double train_acc = 0.0;
    std::size_t epoch = 0;
    while (epoch < cfg.epochs) {
        ++epoch;
        shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::span<const std::size_t> idx(order.data() + start, end - start);
            const Matrix x = gather_rows(data.features, idx);
            std::vector<int> y(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) y[i] = data.labels[idx[i]];

            const Matrix z = net.forward(model.parameters, x, &tape);
            Matrix dz;
            const double loss = cross_entropy(z, y, &dz);
            if (!std::isfinite(loss)) throw DivergenceError("training loss is not finite", epoch);
            std::fill(grad.begin(), grad.end(), 0.0);
            net.backward(model.parameters, tape, dz, grad);
            opt.step(model.parameters, grad);
        }
        train_acc = evaluate_accuracy(model, data);
        if (on_epoch) on_epoch(epoch, train_acc);
        if (cfg.target_train_accuracy && train_acc >= *cfg.target_train_accuracy) break;
    }

    model.meta.train_accuracy = train_acc;
    model.meta.epochs_run = epoch;
    model.meta.seed = cfg.seed;
    if (eval && !eval->empty()) model.meta.test_accuracy = evaluate_accuracy(model, *eval);
    refresh_fingerprint(model);
    return model;
}

Matrix logits(const TrainedModel& model, const Matrix& features) {
    if (features.cols != model.spec.input_dim)
        throw DimensionError("input has " + std::to_string(features.cols) + " features, model expects " +
                             std::to_string(model.spec.input_dim));
    return Network(model.spec).forward(model.parameters, features);
}

PosteriorBatch posterior(const TrainedModel& model, const Matrix& features) {
    return {softmax_rows(logits(model, features))};
}

std::vector<int> predict(const TrainedModel& model, const Matrix& features) {
    const Matrix z = logits(model, features);
    std::vector<int> out(z.rows);
    for (std::size_t r = 0; r < z.rows; ++r) {
        auto row = z.row(r);
        out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

double evaluate_accuracy(const TrainedModel& model, const Dataset& data) {
    if (data.empty()) throw InputError("accuracy of an empty dataset is undefined");
    const auto pred = predict(model, data.features);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels[i];
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

Fingerprint param_fingerprint(std::span<const double> parameters) {
    std::vector<unsigned char> bytes(parameters.size() * 8);
    for (std::size_t i = 0; i < parameters.size(); ++i) {
        auto u = std::bit_cast<std::uint64_t>(parameters[i]);
        for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(u >> (8 * b));
    }
    Fingerprint f;
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), f.bytes.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32)
        throw Error("SHA-256 digest failed");
    return f;
}

Fingerprint param_fingerprint(const TrainedModel& model) { return param_fingerprint(model.parameters); }

void refresh_fingerprint(TrainedModel& model) { model.fingerprint = param_fingerprint(model.parameters); }

TrainedModel clone_model(const TrainedModel& model) { return model; }

}  // namespace unlearn
