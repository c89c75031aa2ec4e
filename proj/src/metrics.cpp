#include "unlearn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "text_io.hpp"
#include "unlearn/error.hpp"
#include "unlearn/svg.hpp"

namespace unlearn {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::original: return "original";
        case Method::retrain: return "retrain";
        case Method::unlearn: return "unlearn";
    }
    return "?";
}

Method method_from_string(std::string_view s) {
    if (s == "original") return Method::original;
    if (s == "retrain") return Method::retrain;
    if (s == "unlearn") return Method::unlearn;
    throw ConfigError("unknown method '" + std::string(s) + "'");
}

double DensityCurve::integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < densities.size(); ++i) s += densities[i] * (bin_edges[i + 1] - bin_edges[i]);
    return s;
}

double fnr(const MIAResult& r) {
    if (r.tp + r.fn == 0) throw MetricError("FNR is undefined when tp + fn = 0");
    return static_cast<double>(r.fn) / static_cast<double>(r.tp + r.fn);
}

DensityCurve density_curve(std::span<const double> values, std::size_t bins, double lo, double hi) {
    if (values.empty()) throw InputError("density of an empty sample");
    if (bins < 1) throw ConfigError("density needs at least one bin");
    if (!(hi > lo)) throw ConfigError("density range must have hi > lo");
    DensityCurve c;
    c.bin_edges.resize(bins + 1);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) c.bin_edges[i] = lo + width * static_cast<double>(i);
    c.bin_edges[bins] = hi;
    std::vector<std::size_t> counts(bins, 0);
    for (double v : values) {
        auto b = static_cast<std::ptrdiff_t>(std::floor((v - lo) / width));
        b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    c.densities.resize(bins);
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < bins; ++i)
        c.densities[i] = static_cast<double>(counts[i]) / (n * (c.bin_edges[i + 1] - c.bin_edges[i]));
    return c;
}

DensityCurve density_curve(std::span<const double> values, std::size_t bins) {
    if (values.empty()) throw InputError("density of an empty sample");
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    double lo = *mn, hi = *mx;
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    return density_curve(values, bins, lo, hi);
}

std::vector<double> max_confidence(const Matrix& posteriors) {
    std::vector<double> out(posteriors.rows);
    for (std::size_t r = 0; r < posteriors.rows; ++r) {
        auto row = posteriors.row(r);
        out[r] = *std::max_element(row.begin(), row.end());
    }
    return out;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InputError("KS distance needs two non-empty samples");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("spearman needs equal-length samples");
    if (x.size() < 2) throw InputError("spearman needs at least two pairs");
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

nlohmann::json metrics_bundle_to_json(const MetricsBundle& b) {
    return {{"run_id", b.run_id},
            {"method", std::string(to_string(b.method))},
            {"fnr", b.fnr},
            {"test_accuracy", b.test_accuracy},
            {"wall_time_seconds", b.wall_time_seconds},
            {"confusion", mia_result_to_json(b.confusion)}};
}

MetricsBundle metrics_bundle_from_json(const nlohmann::json& j) {
    MetricsBundle b;
    b.run_id = j.at("run_id").get<std::string>();
    b.method = method_from_string(j.at("method").get<std::string>());
    b.fnr = j.at("fnr").get<double>();
    b.test_accuracy = j.at("test_accuracy").get<double>();
    b.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    b.confusion = mia_result_from_json(j.at("confusion"));
    return b;
}

void write_alpha_sweep_csv(const std::filesystem::path& path, const std::vector<AlphaSweepRow>& rows) {
    std::string s = "alpha,fnr,test_accuracy\n";
    for (const auto& r : rows)
        s += detail::format_double(r.alpha) + "," + detail::format_double(r.fnr) + "," +
             detail::format_double(r.test_accuracy) + "\n";
    detail::write_text(path, s);
}

void write_density_csv(const std::filesystem::path& path, const DensityCurve& c) {
    std::string s = "bin_left,bin_right,density\n";
    for (std::size_t i = 0; i < c.densities.size(); ++i)
        s += detail::format_double(c.bin_edges[i]) + "," + detail::format_double(c.bin_edges[i + 1]) + "," +
             detail::format_double(c.densities[i]) + "\n";
    detail::write_text(path, s);
}

DensityCurve read_density_csv(const std::filesystem::path& path) {
    std::istringstream in(detail::read_text(path));
    std::string line;
    if (!std::getline(in, line) || line != "bin_left,bin_right,density")
        throw ParseError("bad density header in " + path.string(), 1);
    DensityCurve c;
    std::size_t record = 1;
    while (std::getline(in, line)) {
        ++record;
        if (line.empty()) continue;
        double l = 0, r = 0, d = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &l, &r, &d) != 3) throw ParseError("bad density row", record);
        if (c.bin_edges.empty()) c.bin_edges.push_back(l);
        c.bin_edges.push_back(r);
        c.densities.push_back(d);
    }
    return c;
}

std::vector<MetricsBundle> read_metrics_json(const std::filesystem::path& path) {
    try {
        const auto j = nlohmann::json::parse(detail::read_text(path));
        std::vector<MetricsBundle> out;
        for (const auto& m : j.at("methods")) out.push_back(metrics_bundle_from_json(m));
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad metrics file: ") + e.what(), 0);
    }
}

std::vector<std::filesystem::path> emit_report(const std::filesystem::path& out_dir,
                                               const std::vector<MetricsBundle>& bundles,
                                               const std::vector<AlphaSweepRow>& sweep,
                                               const std::map<std::string, DensityCurve>& curves) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;

    if (!bundles.empty()) {
        nlohmann::json methods = nlohmann::json::array();
        for (const auto& b : bundles) methods.push_back(metrics_bundle_to_json(b));
        const auto p = out_dir / "metrics.json";
        detail::write_text(p, nlohmann::json{{"run_id", bundles.front().run_id}, {"methods", methods}}.dump(2) + "\n");
        written.push_back(p);

        std::vector<std::string> cats;
        svg::BarGroup f{"FNR", {}}, a{"test accuracy", {}};
        for (const auto& b : bundles) {
            cats.emplace_back(to_string(b.method));
            f.values.push_back(b.fnr);
            a.values.push_back(b.test_accuracy);
        }
        const auto sp = out_dir / "metrics.svg";
        detail::write_text(sp, svg::bar_chart("FNR and test accuracy by method", "rate", cats, {f, a}));
        written.push_back(sp);
    }

    if (!sweep.empty()) {
        const auto p = out_dir / "alpha_sweep.csv";
        write_alpha_sweep_csv(p, sweep);
        written.push_back(p);
        svg::Series f{"FNR", {}, {}}, a{"test accuracy", {}, {}};
        for (const auto& r : sweep) {
            f.x.push_back(r.alpha);
            f.y.push_back(r.fnr);
            a.x.push_back(r.alpha);
            a.y.push_back(r.test_accuracy);
        }
        const auto sp = out_dir / "alpha_sweep.svg";
        detail::write_text(sp, svg::line_chart("Impact of alpha", "alpha", "rate", {f, a}));
        written.push_back(sp);
    }

    for (const auto& [tag, curve] : curves) {
        const auto p = out_dir / ("density_" + tag + ".csv");
        write_density_csv(p, curve);
        written.push_back(p);
    }
    if (!curves.empty()) {
        std::vector<svg::Series> series;
        for (const auto& [tag, curve] : curves) {
            svg::Series s{tag, {}, {}, tag.find("unlearn") != std::string::npos};
            for (std::size_t i = 0; i < curve.densities.size(); ++i) {
                s.x.push_back(0.5 * (curve.bin_edges[i] + curve.bin_edges[i + 1]));
                s.y.push_back(curve.densities[i]);
            }
            series.push_back(std::move(s));
        }
        const auto sp = out_dir / "density.svg";
        detail::write_text(sp, svg::line_chart("Max-confidence density", "max posterior", "density", series));
        written.push_back(sp);
    }
    return written;
}

}  // namespace unlearn
