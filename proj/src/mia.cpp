#include "unlearn/mia.hpp"

#include <algorithm>

#include "unlearn/error.hpp"
#include "unlearn/wgan.hpp"

namespace unlearn {

namespace {

double ratio(std::size_t num, std::size_t den) {
    if (den == 0) throw MetricError("rate with an empty denominator");
    return static_cast<double>(num) / static_cast<double>(den);
}

Dataset records_to_dataset(const std::vector<AttackRecord>& records) {
    Dataset d(records.front().sorted_posterior.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        d.push_back({records[i].sorted_posterior, static_cast<int>(records[i].membership)}, i);
    return d;
}

Matrix sorted_posteriors(const TrainedModel& model, const Dataset& data) {
    return sort_posteriors(posterior(model, data.features)).rows;
}

}  // namespace

double MIAResult::tp_rate() const { return ratio(tp, tp + fn); }
double MIAResult::fn_rate() const { return ratio(fn, tp + fn); }
double MIAResult::tn_rate() const { return ratio(tn, tn + fp); }
double MIAResult::fp_rate() const { return ratio(fp, tn + fp); }
double MIAResult::accuracy() const { return ratio(tp + tn, tp + tn + fp + fn); }

nlohmann::json mia_result_to_json(const MIAResult& r) {
    return {{"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}};
}

MIAResult mia_result_from_json(const nlohmann::json& j) {
    return {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(), j.at("tn").get<std::size_t>(),
            j.at("fn").get<std::size_t>()};
}

std::vector<bool> AttackModel::decide(const Matrix& sorted) const {
    const auto pred = predict(net, sorted);
    std::vector<bool> out(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) out[i] = pred[i] == static_cast<int>(Membership::member);
    return out;
}

TrainedModel train_shadow(const ModelSpec& spec, const Dataset& d_in, const TrainConfig& cfg) {
    return train_classifier(spec, d_in, cfg);
}

std::vector<AttackRecord> build_attack_dataset(const TrainedModel& shadow, const Dataset& d_in, const Dataset& d_out) {
    std::vector<AttackRecord> records;
    records.reserve(d_in.size() + d_out.size());
    auto add = [&](const Dataset& d, Membership m) {
        if (d.empty()) return;
        const Matrix s = sorted_posteriors(shadow, d);
        for (std::size_t r = 0; r < s.rows; ++r) records.push_back({{s.row(r).begin(), s.row(r).end()}, m});
    };
    add(d_in, Membership::member);
    add(d_out, Membership::nonmember);
    return records;
}

AttackModel train_attack_model(const std::vector<AttackRecord>& records, const AttackConfig& cfg) {
    if (records.empty()) throw ConfigError("attack model needs training records");
    const bool has_member = std::any_of(records.begin(), records.end(),
                                        [](const auto& r) { return r.membership == Membership::member; });
    const bool has_nonmember = std::any_of(records.begin(), records.end(),
                                           [](const auto& r) { return r.membership == Membership::nonmember; });
    if (!has_member || !has_nonmember) throw ConfigError("attack records must contain both membership classes");
    const Dataset d = records_to_dataset(records);
    return {train_classifier(mlp_spec(d.dim(), cfg.hidden, 2), d, cfg.train)};
}

double attack_accuracy(const AttackModel& attack, const std::vector<AttackRecord>& records) {
    if (records.empty()) throw InputError("attack accuracy of an empty record set");
    return evaluate_accuracy(attack.net, records_to_dataset(records));
}

std::vector<bool> attack_decisions(const AttackModel& attack, const TrainedModel& target, const Dataset& data) {
    if (data.empty()) return {};
    return attack.decide(sorted_posteriors(target, data));
}

MIAResult run_mia(const AttackModel& attack, const TrainedModel& target, const Dataset& d_f,
                  const Dataset& d_nonmember) {
    MIAResult r;
    for (bool member : attack_decisions(attack, target, d_f)) member ? ++r.tp : ++r.fn;
    for (bool member : attack_decisions(attack, target, d_nonmember)) member ? ++r.fp : ++r.tn;
    return r;
}

}  // namespace unlearn
