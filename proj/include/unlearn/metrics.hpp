#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "unlearn/mia.hpp"

namespace unlearn {

enum class Method { original, retrain, unlearn };
std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

struct MetricsBundle {
    std::string run_id;
    Method method = Method::original;
    double fnr = 0.0;
    double test_accuracy = 0.0;
    double wall_time_seconds = 0.0;
    MIAResult confusion;

    friend bool operator==(const MetricsBundle&, const MetricsBundle&) = default;
};

struct DensityCurve {
    std::vector<double> bin_edges;  // bins + 1 edges
    std::vector<double> densities;  // one per bin

    /// Sum of density * bin width.
    double integral() const;
};

struct AlphaSweepRow {
    double alpha = 0.0;
    double fnr = 0.0;
    double test_accuracy = 0.0;
    std::uint64_t seed = 0;
};

/// fn / (tp + fn). Throws MetricError when tp + fn == 0.
double fnr(const MIAResult& result);

/// Normalized histogram of `values` over [lo, hi] with `bins` equal bins.
/// Values outside the range are clamped into the edge bins.
DensityCurve density_curve(std::span<const double> values, std::size_t bins, double lo, double hi);
/// Range [min, max] of the values, widened when degenerate.
DensityCurve density_curve(std::span<const double> values, std::size_t bins);

/// Largest entry of each posterior row.
std::vector<double> max_confidence(const Matrix& posteriors);

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation with average ranks for ties. Returns 0 when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

nlohmann::json metrics_bundle_to_json(const MetricsBundle& b);
MetricsBundle metrics_bundle_from_json(const nlohmann::json& j);

/// Writes metrics.json, alpha_sweep.csv (when rows are given), density_<tag>.csv
/// for every curve, and SVG charts next to them. Creates `out_dir` if missing.
/// Returns the written paths.
std::vector<std::filesystem::path> emit_report(const std::filesystem::path& out_dir,
                                               const std::vector<MetricsBundle>& bundles,
                                               const std::vector<AlphaSweepRow>& sweep,
                                               const std::map<std::string, DensityCurve>& curves);

std::vector<MetricsBundle> read_metrics_json(const std::filesystem::path& path);

void write_alpha_sweep_csv(const std::filesystem::path& path, const std::vector<AlphaSweepRow>& rows);
void write_density_csv(const std::filesystem::path& path, const DensityCurve& curve);
DensityCurve read_density_csv(const std::filesystem::path& path);

}  // namespace unlearn
