#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "unlearn/classifier.hpp"
#include "unlearn/dataset.hpp"
#include "unlearn/metrics.hpp"
#include "unlearn/mia.hpp"
#include "unlearn/retrain.hpp"
#include "unlearn/wgan.hpp"

namespace unlearn {

enum class DataSource { synthetic, csv };

struct DataConfig {
    DataSource source = DataSource::synthetic;
    SyntheticClusterConfig synthetic;
    std::filesystem::path csv_path;  // labeled CSV when source == csv
    std::size_t cluster_k = 0;       // relabel the features with k-means when > 0
    double test_fraction = 0.3;      // share of the examples that becomes the test pool
    SplitSizes split;
};

/// Architecture without the data-dependent input and output sizes.
struct ModelConfig {
    ModelKind kind = ModelKind::mlp;
    std::vector<std::size_t> hidden{256, 256};
    ImageShape image;
    std::vector<std::size_t> conv_channels;

    ModelSpec spec(std::size_t input_dim, std::size_t num_classes) const;
};

struct OverfitLevel {
    std::optional<double> target_train_accuracy;  // none: train for all epochs
    std::size_t epochs = 50;
};

struct OverfitStudyConfig {
    SyntheticClusterConfig data{.num_classes = 2, .samples_per_class = 3000, .feature_dim = 20,
                                .cluster_spread = 3.0, .seed = 0};
    std::vector<OverfitLevel> levels{{std::nullopt, 20}, {std::nullopt, 60}, {std::nullopt, 200}};
    UnlearnConfig unlearn;  // defaults to the experiment's unlearn section
};

struct ExperimentConfig {
    std::string run_id = "default";
    std::uint64_t seed = 0;
    std::filesystem::path output_root;  // empty: $UNLEARN_GAN_OUT, then ./runs
    DataConfig data;
    ModelConfig model;
    TrainConfig train;
    UnlearnConfig unlearn;
    AttackConfig attack;
    std::vector<double> sweep_alphas{0.2, 0.4, 0.6, 0.8, 1.0};
    std::size_t sweep_seeds = 1;
    OverfitStudyConfig overfit;
    std::size_t density_bins = 20;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults. Throws ConfigError on bad values or unknown sections.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Output root used when the config leaves it empty.
std::filesystem::path default_output_root();

struct SweepResult {
    std::vector<AlphaSweepRow> rows;
    double spearman_fnr = 0.0;       // spearman(alpha, fnr)
    double spearman_accuracy = 0.0;  // spearman(alpha, test accuracy)
};

struct OverfitLevelResult {
    OverfitLevel level;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double ks_before = 0.0;  // d_f vs d_nonmember under the original model
    double ks_after = 0.0;   // the same under the unlearned model
    double ks_after_vs_original = 0.0;  // unlearned d_f vs original d_nonmember
};

/// One experiment run rooted at <output_root>/<run_id>. Each command reads its
/// prerequisites from the run directory, writes its artifacts there, and
/// updates manifest.json.
class Runner {
public:
    explicit Runner(ExperimentConfig cfg);

    const ExperimentConfig& config() const noexcept { return cfg_; }
    const std::filesystem::path& run_dir() const noexcept { return dir_; }

    DatasetSplit prepare_data();
    TrainedModel train_target();
    UnlearnedModel run_unlearn();
    RetrainResult run_retrain();
    MIAResult attack(Method which);
    std::vector<MetricsBundle> evaluate();
    SweepResult sweep_alpha(const std::vector<double>& alphas);
    std::vector<OverfitLevelResult> overfit_study();
    /// prepare-data through evaluate, then the sweep and the overfit study.
    void run_all();

    /// Loaders for artifacts produced by earlier commands. Throw IoError naming
    /// the missing file and the command that creates it.
    DatasetSplit load_split() const;
    TrainedModel load_model(Method which) const;
    AttackModel load_or_train_attack();

private:
    ModelSpec model_spec(const DatasetSplit& split) const;
    std::filesystem::path require(const std::filesystem::path& rel, const std::string& producer) const;
    void record(const std::string& command, const std::vector<std::filesystem::path>& files,
                const nlohmann::json& fingerprints = nlohmann::json::object());
    void record_time(const std::string& key, double seconds);
    double recorded_time(const std::string& key) const;

    ExperimentConfig cfg_;
    std::filesystem::path dir_;
};

}  // namespace unlearn
