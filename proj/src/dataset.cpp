#include "unlearn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>

#include "unlearn/error.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

void Dataset::push_back(const LabeledExample& ex, std::uint64_t id) {
    if (features.cols == 0 && labels.empty()) features.cols = ex.features.size();
    if (ex.features.size() != features.cols)
        throw DimensionError("example has " + std::to_string(ex.features.size()) + " features, dataset has " +
                             std::to_string(features.cols));
    features.data.insert(features.data.end(), ex.features.begin(), ex.features.end());
    ++features.rows;
    labels.push_back(ex.label);
    ids.push_back(id);
}

LabeledExample Dataset::example(std::size_t i) const {
    auto r = features.row(i);
    return {{r.begin(), r.end()}, labels[i]};
}

Dataset Dataset::subset(std::span<const std::size_t> positions) const {
    Dataset out(dim());
    out.features = gather_rows(features, positions);
    out.labels.reserve(positions.size());
    out.ids.reserve(positions.size());
    for (auto p : positions) {
        out.labels.push_back(labels[p]);
        out.ids.push_back(ids[p]);
    }
    return out;
}

int Dataset::label_span() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

void Dataset::validate(int num_classes) const {
    if (features.rows != labels.size() || ids.size() != labels.size())
        throw InputError("dataset shape mismatch: rows/labels/ids disagree");
    if (features.data.size() != features.rows * features.cols)
        throw InputError("dataset feature storage does not match its shape");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw InputError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                             " outside [0, " + std::to_string(num_classes) + ")");
}

bool same_examples(const Dataset& a, const Dataset& b) {
    return a.features == b.features && a.labels == b.labels;
}

Dataset concat(const Dataset& a, const Dataset& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.dim() != b.dim()) throw DimensionError("cannot concatenate datasets of different dimension");
    Dataset out = a;
    out.features.data.insert(out.features.data.end(), b.features.data.begin(), b.features.data.end());
    out.features.rows += b.features.rows;
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
    return out;
}

// ---------------------------------------------------------------------------

std::string_view role_name(Role r) {
    switch (r) {
        case Role::d_t: return "d_t";
        case Role::d_f: return "d_f";
        case Role::d_r: return "d_r";
        case Role::d_s: return "d_s";
        case Role::d_in: return "d_in";
        case Role::d_out: return "d_out";
        case Role::d_nonmember: return "d_nonmember";
        case Role::d_test: return "d_test";
    }
    return "?";
}

Role role_from_name(std::string_view name) {
    for (Role r : kAllRoles)
        if (role_name(r) == name) return r;
    throw InputError("unknown split role '" + std::string(name) + "'");
}

const Dataset& DatasetSplit::role(Role r) const {
    switch (r) {
        case Role::d_t: return d_t;
        case Role::d_f: return d_f;
        case Role::d_r: return d_r;
        case Role::d_s: return d_s;
        case Role::d_in: return d_in;
        case Role::d_out: return d_out;
        case Role::d_nonmember: return d_nonmember;
        case Role::d_test: return d_test;
    }
    return d_t;
}

Dataset& DatasetSplit::role(Role r) {
    return const_cast<Dataset&>(std::as_const(*this).role(r));
}

namespace {

std::vector<std::size_t> iota_positions(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

std::size_t fraction_of(std::size_t n, double f) {
    return static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
}

// Draws `take` positions of [0, n) without replacement. Returns (taken, rest), both ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> draw(std::size_t n, std::size_t take, Rng& rng) {
    auto perm = iota_positions(n);
    shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> taken(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(take));
    std::vector<std::size_t> rest(perm.begin() + static_cast<std::ptrdiff_t>(take), perm.end());
    std::sort(taken.begin(), taken.end());
    std::sort(rest.begin(), rest.end());
    return {std::move(taken), std::move(rest)};
}

std::unordered_set<std::uint64_t> id_set(const Dataset& d) { return {d.ids.begin(), d.ids.end()}; }

bool disjoint(const Dataset& a, const Dataset& b) {
    auto s = id_set(a);
    return std::none_of(b.ids.begin(), b.ids.end(), [&](auto id) { return s.count(id) != 0; });
}

bool is_union(const Dataset& whole, const Dataset& a, const Dataset& b) {
    if (whole.size() != a.size() + b.size()) return false;
    auto s = id_set(whole);
    auto in = [&](auto id) { return s.count(id) != 0; };
    return std::all_of(a.ids.begin(), a.ids.end(), in) && std::all_of(b.ids.begin(), b.ids.end(), in);
}

}  // namespace

DatasetSplit split_dataset(const Dataset& pool, const Dataset& test_pool, const SplitSizes& sizes,
                           std::uint64_t seed) {
    if (sizes.shadow_fraction < 0.0 || sizes.shadow_fraction >= 1.0)
        throw ConfigError("shadow_fraction must lie in [0, 1)");
    if (sizes.shadow_in_fraction < 0.0 || sizes.shadow_in_fraction > 1.0)
        throw ConfigError("shadow_in_fraction must lie in [0, 1]");
    if (!test_pool.empty() && !pool.empty() && test_pool.dim() != pool.dim())
        throw DimensionError("pool and test pool have different feature dimensions");

    const std::size_t shadow_n = fraction_of(pool.size(), sizes.shadow_fraction);
    const std::size_t target_n = pool.size() - shadow_n;
    if (sizes.forget_size > target_n)
        throw SizeError("forget_size " + std::to_string(sizes.forget_size) + " exceeds target set size " +
                        std::to_string(target_n));
    if (sizes.nonmember_size > test_pool.size())
        throw SizeError("nonmember_size " + std::to_string(sizes.nonmember_size) + " exceeds test pool size " +
                        std::to_string(test_pool.size()));

    Rng rng(mix_seed(seed));
    DatasetSplit s;

    auto [shadow_pos, target_pos] = draw(pool.size(), shadow_n, rng);
    s.d_t = pool.subset(target_pos);
    s.d_s = pool.subset(shadow_pos);

    auto [forget_pos, retain_pos] = draw(s.d_t.size(), sizes.forget_size, rng);
    s.d_f = s.d_t.subset(forget_pos);
    s.d_r = s.d_t.subset(retain_pos);

    auto [in_pos, out_pos] = draw(s.d_s.size(), fraction_of(s.d_s.size(), sizes.shadow_in_fraction), rng);
    s.d_in = s.d_s.subset(in_pos);
    s.d_out = s.d_s.subset(out_pos);

    auto [nm_pos, test_pos] = draw(test_pool.size(), sizes.nonmember_size, rng);
    s.d_nonmember = test_pool.subset(nm_pos);
    s.d_test = test_pool.subset(test_pos);
    return s;
}

void validate_split(const DatasetSplit& s) {
    if (!is_union(s.d_t, s.d_f, s.d_r) || !disjoint(s.d_f, s.d_r))
        throw InputError("split invariant violated: d_f and d_r must partition d_t");
    if (!disjoint(s.d_s, s.d_t)) throw InputError("split invariant violated: d_s intersects d_t");
    if (!is_union(s.d_s, s.d_in, s.d_out) || !disjoint(s.d_in, s.d_out))
        throw InputError("split invariant violated: d_in and d_out must partition d_s");
    if (!disjoint(s.d_nonmember, s.d_t)) throw InputError("split invariant violated: d_nonmember intersects d_t");
    if (!disjoint(s.d_nonmember, s.d_test))
        throw InputError("split invariant violated: d_nonmember intersects d_test");
}

nlohmann::json split_manifest(const DatasetSplit& split) {
    nlohmann::json roles = nlohmann::json::object();
    for (Role r : kAllRoles) roles[std::string(role_name(r))] = split.role(r).ids;
    nlohmann::json sizes = nlohmann::json::object();
    for (Role r : kAllRoles) sizes[std::string(role_name(r))] = split.role(r).size();
    return {{"roles", roles}, {"sizes", sizes}};
}

// ---------------------------------------------------------------------------

void SyntheticClusterConfig::validate() const {
    if (num_classes < 1) throw ConfigError("num_classes must be positive");
    if (samples_per_class == 0) throw ConfigError("samples_per_class must be positive");
    if (feature_dim == 0) throw ConfigError("feature_dim must be positive");
    if (!(cluster_spread > 0.0)) throw ConfigError("cluster_spread must be > 0");
}

Dataset generate_synthetic_clusters(const SyntheticClusterConfig& cfg) {
    cfg.validate();
    Rng rng(mix_seed(cfg.seed));
    const auto k = static_cast<std::size_t>(cfg.num_classes);
    Matrix means(k, cfg.feature_dim);
    for (double& v : means.data) v = standard_normal(rng);

    Dataset out(cfg.feature_dim);
    out.features = Matrix(k * cfg.samples_per_class, cfg.feature_dim);
    out.labels.reserve(out.features.rows);
    out.ids.reserve(out.features.rows);
    std::size_t row = 0;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < cfg.samples_per_class; ++i, ++row) {
            auto dst = out.features.row(row);
            auto mean = means.row(c);
            for (std::size_t j = 0; j < cfg.feature_dim; ++j)
                dst[j] = mean[j] + cfg.cluster_spread * standard_normal(rng);
            out.labels.push_back(static_cast<int>(c));
            out.ids.push_back(row);
        }
    }
    return out;
}

std::pair<Dataset, Dataset> random_partition(const Dataset& data, double second_fraction, std::uint64_t seed) {
    if (second_fraction < 0.0 || second_fraction > 1.0) throw ConfigError("partition fraction must lie in [0, 1]");
    Rng rng(mix_seed(seed));
    auto [second, first] = draw(data.size(), fraction_of(data.size(), second_fraction), rng);
    return {data.subset(first), data.subset(second)};
}

// ---------------------------------------------------------------------------

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, end);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
    std::string text = "label";
    for (std::size_t j = 0; j < data.dim(); ++j) text += ",f" + std::to_string(j);
    text += '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        text += std::to_string(data.labels[i]);
        for (double v : data.features.row(i)) {
            text += ',';
            append_double(text, v);
        }
        text += '\n';
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw IoError("failed writing " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string text = ss.str();
    const bool ends_with_newline = !text.empty() && text.back() == '\n';

    std::vector<std::string_view> lines;
    {
        std::string_view rest(text);
        while (!rest.empty()) {
            auto nl = rest.find('\n');
            auto line = rest.substr(0, nl);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.push_back(line);
            if (nl == std::string_view::npos) break;
            rest.remove_prefix(nl + 1);
        }
    }
    if (lines.empty()) throw ParseError("missing header in " + path.string(), 1);

    const auto header = split_fields(lines[0]);
    if (header.empty() || header[0] != "label") throw ParseError("header must start with 'label'", 1);
    for (std::size_t j = 1; j < header.size(); ++j)
        if (header[j] != "f" + std::to_string(j - 1))
            throw ParseError("unexpected header column '" + std::string(header[j]) + "'", 1);
    const std::size_t dim = header.size() - 1;

    Dataset out(dim);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto line = lines[li];
        const std::size_t record = li + 1;
        if (line.empty()) {
            if (li + 1 == lines.size()) break;
            throw ParseError("empty record", record);
        }
        const auto fields = split_fields(line);
        const bool last = li + 1 == lines.size();
        if (fields.size() != dim + 1) {
            if (last && !ends_with_newline && fields.size() < dim + 1)
                throw ParseError("truncated record in " + path.string(), record);
            throw DimensionError("record " + std::to_string(record) + " has " + std::to_string(fields.size() - 1) +
                                 " features, header declares " + std::to_string(dim));
        }
        LabeledExample ex;
        {
            auto fv = fields[0];
            auto [p, ec] = std::from_chars(fv.data(), fv.data() + fv.size(), ex.label);
            if (ec != std::errc() || p != fv.data() + fv.size() || ex.label < 0)
                throw ParseError("invalid label '" + std::string(fv) + "'", record);
        }
        ex.features.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            auto fv = fields[j + 1];
            auto [p, ec] = std::from_chars(fv.data(), fv.data() + fv.size(), ex.features[j]);
            if (ec != std::errc() || p != fv.data() + fv.size())
                throw ParseError("invalid number '" + std::string(fv) + "' in column f" + std::to_string(j), record);
        }
        out.push_back(ex, li - 1);
    }
    return out;
}

}  // namespace unlearn
