#include "unlearn/retrain.hpp"

#include <chrono>

#include "unlearn/error.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

RetrainResult retrain(const ModelSpec& spec, const DatasetSplit& split, const TrainConfig& cfg) {
    TrackedSplit tracked(split);
    TrainConfig fresh = cfg;
    fresh.seed = derive_seed(cfg.seed, "retrain");

    const auto start = std::chrono::steady_clock::now();
    const Dataset& d_r = tracked.read(Role::d_r);
    TrainedModel model = train_classifier(spec, d_r, fresh);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    if (tracked.access_log().count(Role::d_f) != 0) throw Error("retrain read the forget set");
    return {std::move(model), elapsed.count(), tracked.access_log()};
}

double compare_time(double unlearn_seconds, double retrain_seconds) {
    if (!(unlearn_seconds > 0.0) || !(retrain_seconds > 0.0)) throw InputError("timings must be positive");
    return retrain_seconds / unlearn_seconds;
}

}  // namespace unlearn
