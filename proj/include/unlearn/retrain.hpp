#pragma once

#include <set>

#include "unlearn/classifier.hpp"
#include "unlearn/dataset.hpp"

namespace unlearn {

/// Read-only view of a DatasetSplit that records which roles were read.
class TrackedSplit {
public:
    explicit TrackedSplit(const DatasetSplit& split) : split_(split) {}

    const Dataset& read(Role r) {
        log_.insert(r);
        return split_.role(r);
    }

    const std::set<Role>& access_log() const noexcept { return log_; }

private:
    const DatasetSplit& split_;
    std::set<Role> log_;
};

struct RetrainResult {
    TrainedModel model;
    double wall_time_seconds = 0.0;
    std::set<Role> data_access_log;
};

/// Trains a freshly initialized model on d_r only. The initialization seed is
/// derived from cfg.seed so it never reuses the original model's weights.
RetrainResult retrain(const ModelSpec& spec, const DatasetSplit& split, const TrainConfig& cfg);

/// retrain_seconds / unlearn_seconds. Throws InputError on non-positive input.
double compare_time(double unlearn_seconds, double retrain_seconds);

}  // namespace unlearn
