#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "unlearn/matrix.hpp"

namespace unlearn {

struct LabeledExample {
    std::vector<double> features;
    int label = 0;
};

/// A set of labeled examples with a fixed feature dimension.
///
/// `ids` are stable record identifiers that survive subsetting, so split
/// roles can be checked for disjointness and written to manifests.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::uint64_t> ids;

    Dataset() = default;
    explicit Dataset(std::size_t dim) { features.cols = dim; }

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols; }
    bool empty() const noexcept { return labels.empty(); }

    void push_back(const LabeledExample& ex, std::uint64_t id);
    LabeledExample example(std::size_t i) const;

    /// Rows at the given positions, in that order, keeping their ids.
    Dataset subset(std::span<const std::size_t> positions) const;

    /// Largest label + 1 (0 for an empty set).
    int label_span() const;

    /// Throws InputError unless every label lies in [0, num_classes) and shapes agree.
    void validate(int num_classes) const;
};

/// Equal features and labels (ids are not compared).
bool same_examples(const Dataset& a, const Dataset& b);

Dataset concat(const Dataset& a, const Dataset& b);

// ---------------------------------------------------------------------------
// Split roles

enum class Role { d_t, d_f, d_r, d_s, d_in, d_out, d_nonmember, d_test };

std::string_view role_name(Role r);
Role role_from_name(std::string_view name);
inline constexpr Role kAllRoles[] = {Role::d_t,  Role::d_f,   Role::d_r,         Role::d_s,
                                     Role::d_in, Role::d_out, Role::d_nonmember, Role::d_test};

struct DatasetSplit {
    Dataset d_t;          // target training data
    Dataset d_f;          // forget set, subset of d_t
    Dataset d_r;          // retained set, d_t minus d_f
    Dataset d_s;          // shadow pool, disjoint from d_t
    Dataset d_in;         // shadow training half of d_s
    Dataset d_out;        // shadow held-out half of d_s
    Dataset d_nonmember;  // third-party data drawn from the test pool
    Dataset d_test;       // test pool minus d_nonmember

    const Dataset& role(Role r) const;
    Dataset& role(Role r);
};

struct SplitSizes {
    std::size_t forget_size = 500;
    std::size_t nonmember_size = 500;
    double shadow_fraction = 0.5;     // share of the pool that becomes d_s
    double shadow_in_fraction = 0.5;  // share of d_s that becomes d_in
};

/// Splits `pool` into target/shadow roles and `test_pool` into nonmember/test roles.
/// A pure function of its arguments. Throws SizeError if a requested size exceeds
/// what is available.
DatasetSplit split_dataset(const Dataset& pool, const Dataset& test_pool, const SplitSizes& sizes,
                           std::uint64_t seed);

/// Throws InputError naming the first violated disjointness/union invariant.
void validate_split(const DatasetSplit& split);

/// Id membership of every role.
nlohmann::json split_manifest(const DatasetSplit& split);

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticClusterConfig {
    int num_classes = 10;
    std::size_t samples_per_class = 1000;
    std::size_t feature_dim = 20;
    double cluster_spread = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Isotropic Gaussian blobs. Class means are standard normal vectors; each
/// sample adds `cluster_spread` times standard normal noise. Rows are grouped
/// by class and ids run 0..N-1.
Dataset generate_synthetic_clusters(const SyntheticClusterConfig& cfg);

/// Random partition into (first, second) with `second_fraction` of rows in the second part.
std::pair<Dataset, Dataset> random_partition(const Dataset& data, double second_fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// CSV files: header `label,f0,...,f{d-1}`, one example per line.

void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace unlearn
