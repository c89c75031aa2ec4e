#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "unlearn/classifier.hpp"
#include "unlearn/critic.hpp"
#include "unlearn/dataset.hpp"
#include "unlearn/error.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

struct UnlearnConfig {
    double alpha = 0.5;        // weight of the adversarial term in the generator loss
    double lambda_gp = 10.0;   // gradient-penalty weight
    int gp_norm_p = 2;         // norm of the critic input gradient inside the penalty
    std::size_t n_critic = 5;  // critic updates per generator update
    std::size_t batch_size = 64;
    double generator_lr = 1e-4;
    double critic_lr = 1e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.9;
    std::size_t max_iters = 1000;
    double stop_distance_eps = 0.05;
    std::size_t stop_window = 20;
    std::size_t min_iters = 0;  // never stop on distance before this many iterations
    double retained_fraction = 0.01;
    std::vector<std::size_t> critic_hidden{64, 64};
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json unlearn_config_to_json(const UnlearnConfig& cfg);
UnlearnConfig unlearn_config_from_json(const nlohmann::json& j, UnlearnConfig defaults = {});

enum class StopReason { distance_converged, max_iters };
std::string_view to_string(StopReason r);

struct IterationRecord {
    double critic_loss = 0.0;
    double generator_loss = 0.0;
    double wasserstein = 0.0;  // mean D(S(P1)) - mean D(S(P2)) on the last critic batch
    double gradient_penalty = 0.0;
    double retained_loss = 0.0;
};

struct UnlearnTrace {
    std::vector<IterationRecord> records;
    std::optional<StopReason> stop_reason;

    std::size_t size() const noexcept { return records.size(); }
};

struct UnlearnedModel {
    TrainedModel model;  // the final generator
    UnlearnTrace trace;
    UnlearnConfig config;
};

/// Raised when a loss becomes non-finite; carries the trace recorded so far.
class UnlearnDivergence : public NumericError {
public:
    UnlearnDivergence(const std::string& what, UnlearnTrace trace)
        : NumericError(what), trace_(std::move(trace)) {}
    const UnlearnTrace& trace() const noexcept { return trace_; }

private:
    UnlearnTrace trace_;
};

// ---------------------------------------------------------------------------
// Building blocks

/// Each row sorted descending (stable for ties).
PosteriorBatch sort_posteriors(const PosteriorBatch& batch);

/// Sorted rows plus, for each output cell, the input column it came from.
struct SortedRows {
    Matrix values;
    std::vector<std::uint32_t> source;  // rows x cols
};
SortedRows sort_rows_descending(const Matrix& rows);

/// eps * s1 + (1 - eps) * s2.
std::vector<double> interpolate(std::span<const double> s1, std::span<const double> s2, double eps);
Matrix interpolate_rows(const Matrix& s1, const Matrix& s2, std::span<const double> eps);

/// lambda * mean_n (||dD/dx(x_hat_n)||_p - 1)^2. When `grad` is non-empty the
/// penalty's gradient with respect to the critic parameters is added to it.
double gradient_penalty(const Critic& critic, std::span<const double> params, const Matrix& x_hat, double lambda,
                        int p, std::span<double> grad = {});

struct CriticLossTerms {
    double real_mean = 0.0;  // mean D over sorted nonmember posteriors
    double fake_mean = 0.0;  // mean D over sorted forget-set posteriors
    double penalty = 0.0;
    double total = 0.0;

    double wasserstein() const noexcept { return real_mean - fake_mean; }
};

/// -mean D(real) + mean D(fake) + gradient penalty at rows interpolated with `eps`.
CriticLossTerms critic_loss(const Critic& critic, std::span<const double> params, const Matrix& s_nonmember,
                            const Matrix& s_forget, std::span<const double> eps, double lambda, int p,
                            std::span<double> grad = {});

/// As above with eps drawn uniformly per row from `rng`.
CriticLossTerms critic_loss(const Critic& critic, std::span<const double> params, const Matrix& s_nonmember,
                            const Matrix& s_forget, const UnlearnConfig& cfg, Rng& rng,
                            std::span<double> grad = {});

struct GeneratorLossTerms {
    double adversarial = 0.0;  // -mean D(S(G(x_f)))
    double retained = 0.0;     // cross-entropy of G on the retained batch (0 when unused)
    double total = 0.0;
};

/// alpha * adversarial + (1 - alpha) * retained. When `grad` is non-empty the
/// gradient with respect to the generator parameters is added to it.
/// Throws ConfigError if alpha < 1 and the retained batch is empty.
GeneratorLossTerms generator_loss(const Critic& critic, std::span<const double> critic_params,
                                  const TrainedModel& generator, const Dataset& forget_batch,
                                  const Dataset& retained_batch, double alpha, std::span<double> grad = {});

// ---------------------------------------------------------------------------
// Training loop

/// Distance criterion (after min_iters) or iteration cap, whichever applies first.
std::optional<StopReason> stop_condition(const UnlearnTrace& trace, const UnlearnConfig& cfg);
bool should_stop(const UnlearnTrace& trace, const UnlearnConfig& cfg);

/// Called at the start of every outer iteration with the current generator.
using UnlearnObserver = std::function<void(std::size_t iteration, const TrainedModel& generator)>;

/// Adversarial posterior matching. The generator starts as a copy of `m_init`;
/// `m_init` is only read.
UnlearnedModel unlearn(const TrainedModel& m_init, const Dataset& d_f, const Dataset& d_nonmember,
                       const Dataset& d_r, const UnlearnConfig& cfg, const UnlearnObserver& observer = {});

/// One JSON object per line, one line per iteration.
void write_trace_jsonl(const std::filesystem::path& path, const UnlearnTrace& trace);
UnlearnTrace read_trace_jsonl(const std::filesystem::path& path);

}  // namespace unlearn
