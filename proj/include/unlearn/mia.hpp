#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "unlearn/classifier.hpp"
#include "unlearn/dataset.hpp"

namespace unlearn {

enum class Membership { nonmember = 0, member = 1 };

struct AttackRecord {
    std::vector<double> sorted_posterior;  // descending, sums to 1
    Membership membership = Membership::nonmember;
};

/// Confusion counts with the forget set as the positive (member) class.
struct MIAResult {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    double tp_rate() const;  // tp / (tp + fn)
    double fn_rate() const;  // fn / (tp + fn)
    double tn_rate() const;  // tn / (tn + fp)
    double fp_rate() const;  // fp / (tn + fp)
    double accuracy() const;

    friend bool operator==(const MIAResult&, const MIAResult&) = default;
};

nlohmann::json mia_result_to_json(const MIAResult& r);
MIAResult mia_result_from_json(const nlohmann::json& j);

struct AttackConfig {
    std::vector<std::size_t> hidden{64};
    TrainConfig train{.epochs = 60, .batch_size = 64, .learning_rate = 1e-3, .weight_decay = 0.0, .seed = 0,
                      .target_train_accuracy = std::nullopt};
};

/// Binary member/nonmember classifier over sorted posteriors.
struct AttackModel {
    TrainedModel net;  // 2 outputs: index 1 = member

    /// Argmax of the binary softmax: true means "member".
    std::vector<bool> decide(const Matrix& sorted_posteriors) const;
};

/// Trains a shadow model with the target's architecture on d_in.
TrainedModel train_shadow(const ModelSpec& spec, const Dataset& d_in, const TrainConfig& cfg);

/// One record per example of d_in (member) and d_out (nonmember), posteriors sorted descending.
std::vector<AttackRecord> build_attack_dataset(const TrainedModel& shadow, const Dataset& d_in, const Dataset& d_out);

/// Throws ConfigError when the records hold only one membership class.
AttackModel train_attack_model(const std::vector<AttackRecord>& records, const AttackConfig& cfg = {});

/// Fraction of records the attack classifies correctly.
double attack_accuracy(const AttackModel& attack, const std::vector<AttackRecord>& records);

/// Per-example decisions of the attack against `target` on `data` (true = member).
std::vector<bool> attack_decisions(const AttackModel& attack, const TrainedModel& target, const Dataset& data);

/// Confusion counts for d_f (members) versus d_nonmember (nonmembers).
MIAResult run_mia(const AttackModel& attack, const TrainedModel& target, const Dataset& d_f,
                  const Dataset& d_nonmember);

}  // namespace unlearn
