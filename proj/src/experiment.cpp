#include "unlearn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <set>

#include "text_io.hpp"
#include "unlearn/checkpoint.hpp"
#include "unlearn/error.hpp"
#include "unlearn/kmeans.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string utc_timestamp() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json synthetic_to_json(const SyntheticClusterConfig& c) {
    return {{"num_classes", c.num_classes},
            {"samples_per_class", c.samples_per_class},
            {"feature_dim", c.feature_dim},
            {"cluster_spread", c.cluster_spread}};
}

SyntheticClusterConfig synthetic_from_json(const json& j, SyntheticClusterConfig c) {
    c.num_classes = j.value("num_classes", c.num_classes);
    c.samples_per_class = j.value("samples_per_class", c.samples_per_class);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.cluster_spread = j.value("cluster_spread", c.cluster_spread);
    return c;
}

json train_to_json(const TrainConfig& c) {
    json j = {{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"weight_decay", c.weight_decay}};
    j["target_train_accuracy"] = c.target_train_accuracy ? json(*c.target_train_accuracy) : json(nullptr);
    return j;
}

TrainConfig train_from_json(const json& j, TrainConfig c) {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    if (j.contains("target_train_accuracy")) {
        const auto& t = j.at("target_train_accuracy");
        c.target_train_accuracy = t.is_null() ? std::nullopt : std::optional<double>(t.get<double>());
    }
    return c;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

Dataset load_source(const DataConfig& d, std::uint64_t seed) {
    Dataset data;
    if (d.source == DataSource::synthetic) {
        SyntheticClusterConfig s = d.synthetic;
        s.seed = derive_seed(seed, "synthetic");
        data = generate_synthetic_clusters(s);
    } else {
        data = load_dataset(d.csv_path);
    }
    if (d.cluster_k > 0) data.labels = cluster_label(data.features, d.cluster_k, derive_seed(seed, "kmeans"));
    return data;
}

std::size_t class_count(const DatasetSplit& s) {
    int hi = 0;
    for (Role r : kAllRoles)
        for (int y : s.role(r).labels) hi = std::max(hi, y);
    return static_cast<std::size_t>(hi) + 1;
}

std::vector<double> max_conf(const TrainedModel& m, const Dataset& d) {
    return max_confidence(posterior(m, d.features).rows);
}

std::string alpha_tag(double a) {
    return detail::format_double(a);
}

}  // namespace

ModelSpec ModelConfig::spec(std::size_t input_dim, std::size_t num_classes) const {
    ModelSpec s = mlp_spec(input_dim, hidden, num_classes);
    s.kind = kind;
    if (kind == ModelKind::small_cnn) {
        s.image = image;
        s.conv_channels = conv_channels;
    }
    s.validate();
    return s;
}

void ExperimentConfig::validate() const {
    if (run_id.empty()) throw ConfigError("run_id must not be empty");
    if (run_id.find_first_of("/\\") != std::string::npos || run_id == "." || run_id == "..")
        throw ConfigError("run_id must be a plain directory name");
    if (data.source == DataSource::synthetic) data.synthetic.validate();
    if (data.source == DataSource::csv && data.csv_path.empty()) throw ConfigError("data.csv_path is required");
    if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) throw ConfigError("data.test_fraction must lie in (0, 1)");
    if (!(data.split.shadow_fraction > 0.0 && data.split.shadow_fraction < 1.0))
        throw ConfigError("data.shadow_fraction must lie in (0, 1)");
    if (!(data.split.shadow_in_fraction > 0.0 && data.split.shadow_in_fraction < 1.0))
        throw ConfigError("data.shadow_in_fraction must lie in (0, 1)");
    if (model.hidden.empty()) throw ConfigError("model.hidden must list at least one layer");
    train.validate();
    attack.train.validate();
    unlearn.validate();
    for (double a : sweep_alphas)
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("sweep alphas must lie in [0, 1]");
    if (sweep_seeds < 1) throw ConfigError("sweep.seeds must be at least 1");
    overfit.data.validate();
    overfit.unlearn.validate();
    if (overfit.levels.empty()) throw ConfigError("overfit_study.levels must not be empty");
    for (const auto& l : overfit.levels) {
        if (l.epochs < 1) throw ConfigError("overfit level epochs must be at least 1");
        if (l.target_train_accuracy && !(*l.target_train_accuracy > 0.0 && *l.target_train_accuracy <= 1.0))
            throw ConfigError("overfit level target_train_accuracy must lie in (0, 1]");
    }
    if (density_bins < 1) throw ConfigError("density_bins must be at least 1");
}

json experiment_config_to_json(const ExperimentConfig& c) {
    json data = {{"source", c.data.source == DataSource::synthetic ? "synthetic" : "csv"},
                 {"synthetic", synthetic_to_json(c.data.synthetic)},
                 {"csv_path", c.data.csv_path.string()},
                 {"cluster_k", c.data.cluster_k},
                 {"test_fraction", c.data.test_fraction},
                 {"forget_size", c.data.split.forget_size},
                 {"nonmember_size", c.data.split.nonmember_size},
                 {"shadow_fraction", c.data.split.shadow_fraction},
                 {"shadow_in_fraction", c.data.split.shadow_in_fraction}};
    json model = {{"kind", std::string(to_string(c.model.kind))}, {"hidden", c.model.hidden}};
    if (c.model.kind == ModelKind::small_cnn) {
        model["image"] = {c.model.image.channels, c.model.image.height, c.model.image.width};
        model["conv_channels"] = c.model.conv_channels;
    }
    json ul = unlearn_config_to_json(c.unlearn);
    ul.erase("seed");
    json levels = json::array();
    for (const auto& l : c.overfit.levels)
        levels.push_back({{"target_train_accuracy", l.target_train_accuracy ? json(*l.target_train_accuracy) : json(nullptr)},
                          {"epochs", l.epochs}});
    json oul = unlearn_config_to_json(c.overfit.unlearn);
    oul.erase("seed");
    return {{"run_id", c.run_id},
            {"seed", c.seed},
            {"output_root", c.output_root.string()},
            {"data", data},
            {"model", model},
            {"train", train_to_json(c.train)},
            {"unlearn", ul},
            {"attack", {{"hidden", c.attack.hidden}, {"train", train_to_json(c.attack.train)}}},
            {"sweep", {{"alphas", c.sweep_alphas}, {"seeds", c.sweep_seeds}}},
            {"overfit_study", {{"data", synthetic_to_json(c.overfit.data)}, {"levels", levels}, {"unlearn", oul}}},
            {"density_bins", c.density_bins}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        check_keys(j, {"run_id", "seed", "output_root", "data", "model", "train", "unlearn", "attack", "sweep",
                       "overfit_study", "density_bins"},
                   "config");
        c.run_id = j.value("run_id", c.run_id);
        c.seed = j.value("seed", c.seed);
        c.output_root = j.value("output_root", std::string());
        c.density_bins = j.value("density_bins", c.density_bins);
        if (j.contains("data")) {
            const auto& d = j.at("data");
            check_keys(d, {"source", "synthetic", "csv_path", "cluster_k", "test_fraction", "forget_size",
                           "nonmember_size", "shadow_fraction", "shadow_in_fraction"},
                       "data");
            const auto src = d.value("source", std::string("synthetic"));
            if (src == "synthetic") c.data.source = DataSource::synthetic;
            else if (src == "csv") c.data.source = DataSource::csv;
            else throw ConfigError("data.source must be 'synthetic' or 'csv'");
            if (d.contains("synthetic")) c.data.synthetic = synthetic_from_json(d.at("synthetic"), c.data.synthetic);
            c.data.csv_path = d.value("csv_path", std::string());
            c.data.cluster_k = d.value("cluster_k", c.data.cluster_k);
            c.data.test_fraction = d.value("test_fraction", c.data.test_fraction);
            c.data.split.forget_size = d.value("forget_size", c.data.split.forget_size);
            c.data.split.nonmember_size = d.value("nonmember_size", c.data.split.nonmember_size);
            c.data.split.shadow_fraction = d.value("shadow_fraction", c.data.split.shadow_fraction);
            c.data.split.shadow_in_fraction = d.value("shadow_in_fraction", c.data.split.shadow_in_fraction);
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            check_keys(m, {"kind", "hidden", "image", "conv_channels"}, "model");
            c.model.kind = model_kind_from_string(m.value("kind", std::string("mlp")));
            c.model.hidden = m.value("hidden", c.model.hidden);
            if (m.contains("image")) {
                const auto& im = m.at("image");
                if (!im.is_array() || im.size() != 3) throw ConfigError("model.image must be [channels, height, width]");
                c.model.image = {im[0].get<std::size_t>(), im[1].get<std::size_t>(), im[2].get<std::size_t>()};
            }
            c.model.conv_channels = m.value("conv_channels", c.model.conv_channels);
        }
        if (j.contains("train")) c.train = train_from_json(j.at("train"), c.train);
        if (j.contains("unlearn")) {
            if (j.at("unlearn").contains("seed")) throw ConfigError("unlearn.seed is derived from the global seed");
            c.unlearn = unlearn_config_from_json(j.at("unlearn"), c.unlearn);
        }
        if (j.contains("attack")) {
            const auto& a = j.at("attack");
            check_keys(a, {"hidden", "train"}, "attack");
            c.attack.hidden = a.value("hidden", c.attack.hidden);
            if (a.contains("train")) c.attack.train = train_from_json(a.at("train"), c.attack.train);
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            check_keys(s, {"alphas", "seeds"}, "sweep");
            c.sweep_alphas = s.value("alphas", c.sweep_alphas);
            c.sweep_seeds = s.value("seeds", c.sweep_seeds);
        }
        if (j.contains("overfit_study")) {
            const auto& o = j.at("overfit_study");
            check_keys(o, {"data", "levels", "unlearn"}, "overfit_study");
            if (o.contains("data")) c.overfit.data = synthetic_from_json(o.at("data"), c.overfit.data);
            if (o.contains("levels")) {
                c.overfit.levels.clear();
                for (const auto& l : o.at("levels")) {
                    check_keys(l, {"target_train_accuracy", "epochs"}, "overfit_study.levels");
                    OverfitLevel level;
                    level.epochs = l.value("epochs", level.epochs);
                    if (l.contains("target_train_accuracy") && !l.at("target_train_accuracy").is_null())
                        level.target_train_accuracy = l.at("target_train_accuracy").get<double>();
                    c.overfit.levels.push_back(level);
                }
            }
        }
        c.overfit.unlearn = c.unlearn;
        if (j.contains("overfit_study") && j.at("overfit_study").contains("unlearn")) {
            const auto& ou = j.at("overfit_study").at("unlearn");
            if (ou.contains("seed")) throw ConfigError("overfit_study.unlearn.seed is derived from the global seed");
            c.overfit.unlearn = unlearn_config_from_json(ou, c.unlearn);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    json j;
    try {
        j = json::parse(detail::read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return experiment_config_from_json(j);
}

fs::path default_output_root() {
    if (const char* env = std::getenv("UNLEARN_GAN_OUT"); env && *env) return env;
    return "runs";
}

// ---------------------------------------------------------------------------

Runner::Runner(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    cfg_.unlearn.seed = derive_seed(cfg_.seed, "unlearn");
    cfg_.train.seed = derive_seed(cfg_.seed, "target");
    cfg_.attack.train.seed = derive_seed(cfg_.seed, "attack");
    cfg_.overfit.unlearn.seed = derive_seed(cfg_.seed, "overfit-unlearn");
    dir_ = (cfg_.output_root.empty() ? default_output_root() : cfg_.output_root) / cfg_.run_id;
}

fs::path Runner::require(const fs::path& rel, const std::string& producer) const {
    const fs::path p = dir_ / rel;
    if (!fs::exists(p))
        throw IoError("missing prerequisite artifact " + p.string() + " (run 'unlearn-gan " + producer + "' first)");
    return p;
}

void Runner::record(const std::string& command, const std::vector<fs::path>& files, const json& fingerprints) {
    const fs::path path = dir_ / "manifest.json";
    json m;
    if (fs::exists(path)) {
        try {
            m = json::parse(detail::read_text(path));
        } catch (const json::exception&) {
            m = json::object();
        }
    }
    const std::string now = utc_timestamp();
    if (!m.contains("created_at")) m["created_at"] = now;
    m["updated_at"] = now;
    m["run_id"] = cfg_.run_id;
    m["seed"] = cfg_.seed;
    m["config"] = experiment_config_to_json(cfg_);
    if (!m.contains("fingerprints")) m["fingerprints"] = json::object();
    for (const auto& [k, v] : fingerprints.items()) m["fingerprints"][k] = v;
    if (!m.contains("commands")) m["commands"] = json::object();
    m["commands"][command] = now;

    std::set<std::string> inventory;
    if (m.contains("files"))
        for (const auto& f : m["files"]) inventory.insert(f.get<std::string>());
    for (const auto& f : files) inventory.insert(fs::relative(f, dir_).generic_string());
    for (const auto& f : inventory)
        if (!fs::exists(dir_ / f)) throw IoError("manifest lists " + f + " but it does not exist in " + dir_.string());
    m["files"] = inventory;
    detail::write_text(path, m.dump(2) + "\n");
}

void Runner::record_time(const std::string& key, double seconds) {
    const fs::path path = dir_ / "timings.json";
    json t = fs::exists(path) ? json::parse(detail::read_text(path)) : json::object();
    t[key] = seconds;
    detail::write_text(path, t.dump(2) + "\n");
}

double Runner::recorded_time(const std::string& key) const {
    const fs::path path = dir_ / "timings.json";
    if (!fs::exists(path)) return 0.0;
    return json::parse(detail::read_text(path)).value(key, 0.0);
}

ModelSpec Runner::model_spec(const DatasetSplit& split) const {
    return cfg_.model.spec(split.d_t.dim(), class_count(split));
}

DatasetSplit Runner::prepare_data() {
    const Dataset all = load_source(cfg_.data, derive_seed(cfg_.seed, "data"));
    auto [pool, test_pool] = random_partition(all, cfg_.data.test_fraction, derive_seed(cfg_.seed, "partition"));
    DatasetSplit split = split_dataset(pool, test_pool, cfg_.data.split, derive_seed(cfg_.seed, "split"));

    std::vector<fs::path> files;
    for (Role r : kAllRoles) {
        const fs::path p = dir_ / "data" / (std::string(role_name(r)) + ".csv");
        save_dataset(p, split.role(r));
        files.push_back(p);
    }
    const fs::path manifest = dir_ / "data" / "split.json";
    detail::write_text(manifest, split_manifest(split).dump() + "\n");
    files.push_back(manifest);
    record("prepare-data", files);
    return split;
}

DatasetSplit Runner::load_split() const {
    const json ids = json::parse(detail::read_text(require("data/split.json", "prepare-data")));
    DatasetSplit split;
    for (Role r : kAllRoles) {
        const std::string name(role_name(r));
        Dataset d = load_dataset(require("data/" + name + ".csv", "prepare-data"));
        const auto role_ids = ids.at("roles").at(name).get<std::vector<std::size_t>>();
        if (role_ids.size() != d.size()) throw IoError("data/" + name + ".csv does not match split.json");
        d.ids = role_ids;
        split.role(r) = std::move(d);
    }
    return split;
}

TrainedModel Runner::load_model(Method which) const {
    switch (which) {
        case Method::original: return load_checkpoint(require("checkpoints/target.ckpt", "train-target"));
        case Method::unlearn: return load_checkpoint(require("checkpoints/unlearned.ckpt", "unlearn"));
        case Method::retrain: return load_checkpoint(require("checkpoints/retrained.ckpt", "retrain"));
    }
    throw ConfigError("unknown model");
}

TrainedModel Runner::train_target() {
    const DatasetSplit split = load_split();
    const auto t0 = std::chrono::steady_clock::now();
    TrainedModel target = train_classifier(model_spec(split), split.d_t, cfg_.train);
    const double elapsed = seconds_since(t0);
    target.meta.test_accuracy = evaluate_accuracy(target, split.d_test);

    const fs::path ckpt = dir_ / "checkpoints" / "target.ckpt";
    save_checkpoint(ckpt, target);
    const json report = {{"train_accuracy", target.meta.train_accuracy},
                         {"test_accuracy", *target.meta.test_accuracy},
                         {"generalization_gap", target.meta.train_accuracy - *target.meta.test_accuracy},
                         {"epochs_run", target.meta.epochs_run}};
    const fs::path rp = dir_ / "target_report.json";
    detail::write_text(rp, report.dump(2) + "\n");
    record_time("original", elapsed);
    record("train-target", {ckpt, rp, dir_ / "timings.json"}, {{"target", target.fingerprint.hex()}});
    return target;
}

UnlearnedModel Runner::run_unlearn() {
    const DatasetSplit split = load_split();
    const TrainedModel target = load_model(Method::original);
    const auto t0 = std::chrono::steady_clock::now();
    UnlearnedModel u = unlearn::unlearn(target, split.d_f, split.d_nonmember, split.d_r, cfg_.unlearn);
    const double elapsed = seconds_since(t0);
    u.model.meta.test_accuracy = evaluate_accuracy(u.model, split.d_test);
    if (param_fingerprint(target) != target.fingerprint) throw Error("the original model changed during unlearning");

    const fs::path ckpt = dir_ / "checkpoints" / "unlearned.ckpt";
    const fs::path trace = dir_ / "trace.jsonl";
    save_checkpoint(ckpt, u.model);
    write_trace_jsonl(trace, u.trace);
    record_time("unlearn", elapsed);
    record("unlearn", {ckpt, trace, dir_ / "timings.json"}, {{"unlearned", u.model.fingerprint.hex()}});
    return u;
}

RetrainResult Runner::run_retrain() {
    const DatasetSplit split = load_split();
    RetrainResult r = retrain(model_spec(split), split, cfg_.train);
    r.model.meta.test_accuracy = evaluate_accuracy(r.model, split.d_test);

    const fs::path ckpt = dir_ / "checkpoints" / "retrained.ckpt";
    save_checkpoint(ckpt, r.model);
    json log = json::array();
    for (Role role : r.data_access_log) log.push_back(std::string(role_name(role)));
    const fs::path rp = dir_ / "retrain.json";
    detail::write_text(rp, json{{"wall_time_seconds", r.wall_time_seconds},
                                {"data_access_log", log},
                                {"train_accuracy", r.model.meta.train_accuracy},
                                {"test_accuracy", *r.model.meta.test_accuracy}}
                                   .dump(2) + "\n");
    record_time("retrain", r.wall_time_seconds);
    record("retrain", {ckpt, rp, dir_ / "timings.json"}, {{"retrained", r.model.fingerprint.hex()}});
    return r;
}

AttackModel Runner::load_or_train_attack() {
    const fs::path ckpt = dir_ / "checkpoints" / "attack.ckpt";
    if (fs::exists(ckpt)) return {load_checkpoint(ckpt)};

    const DatasetSplit split = load_split();
    TrainConfig shadow_cfg = cfg_.train;
    shadow_cfg.seed = derive_seed(cfg_.seed, "shadow");
    const TrainedModel shadow = train_shadow(model_spec(split), split.d_in, shadow_cfg);
    const auto records = build_attack_dataset(shadow, split.d_in, split.d_out);
    AttackModel attack = train_attack_model(records, cfg_.attack);

    const fs::path sp = dir_ / "checkpoints" / "shadow.ckpt";
    save_checkpoint(sp, shadow);
    save_checkpoint(ckpt, attack.net);
    const fs::path rp = dir_ / "attack_report.json";
    detail::write_text(rp, json{{"shadow_train_accuracy", shadow.meta.train_accuracy},
                                {"shadow_out_accuracy", evaluate_accuracy(shadow, split.d_out)},
                                {"attack_train_accuracy", attack_accuracy(attack, records)}}
                                   .dump(2) + "\n");
    record("attack", {sp, ckpt, rp},
           {{"shadow", shadow.fingerprint.hex()}, {"attack", attack.net.fingerprint.hex()}});
    return attack;
}

MIAResult Runner::attack(Method which) {
    const TrainedModel model = load_model(which);
    const DatasetSplit split = load_split();
    const AttackModel attack = load_or_train_attack();
    const MIAResult r = run_mia(attack, model, split.d_f, split.d_nonmember);
    const fs::path p = dir_ / ("mia_" + std::string(to_string(which)) + ".json");
    json j = mia_result_to_json(r);
    j["fnr"] = fnr(r);
    detail::write_text(p, j.dump(2) + "\n");
    record("attack", {p});
    return r;
}

std::vector<MetricsBundle> Runner::evaluate() {
    const DatasetSplit split = load_split();
    const AttackModel attack = load_or_train_attack();
    std::vector<MetricsBundle> bundles;
    std::map<std::string, DensityCurve> curves;
    json ks = json::object();
    const TrainedModel original = load_model(Method::original);
    const double lo = 1.0 / static_cast<double>(original.spec.num_classes);
    curves["nonmember_original"] = density_curve(max_conf(original, split.d_nonmember), cfg_.density_bins, lo, 1.0);
    for (Method m : {Method::original, Method::retrain, Method::unlearn}) {
        const TrainedModel model = load_model(m);
        MetricsBundle b;
        b.run_id = cfg_.run_id;
        b.method = m;
        b.confusion = run_mia(attack, model, split.d_f, split.d_nonmember);
        b.fnr = fnr(b.confusion);
        b.test_accuracy = evaluate_accuracy(model, split.d_test);
        b.wall_time_seconds = recorded_time(std::string(to_string(m)));
        bundles.push_back(b);

        const std::string tag(to_string(m));
        const auto f = max_conf(model, split.d_f);
        curves["forget_" + tag] = density_curve(f, cfg_.density_bins, lo, 1.0);
        ks[tag] = ks_distance(f, max_conf(model, split.d_nonmember));
    }
    auto files = emit_report(dir_, bundles, {}, curves);
    const fs::path kp = dir_ / "ks.json";
    detail::write_text(kp, json{{"ks_forget_vs_nonmember", ks}}.dump(2) + "\n");
    files.push_back(kp);
    record("evaluate", files);
    return bundles;
}

SweepResult Runner::sweep_alpha(const std::vector<double>& alphas) {
    if (alphas.empty()) throw ConfigError("alpha sweep needs at least one alpha");
    for (double a : alphas)
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha " + alpha_tag(a) + " is outside [0, 1]");
    const DatasetSplit split = load_split();
    const TrainedModel target = load_model(Method::original);
    const AttackModel attack = load_or_train_attack();

    SweepResult out;
    std::vector<double> xs, fnrs, accs;
    json runs = json::array();
    for (double a : alphas) {
        for (std::size_t k = 0; k < cfg_.sweep_seeds; ++k) {
            UnlearnConfig uc = cfg_.unlearn;
            uc.alpha = a;
            uc.seed = cfg_.unlearn.seed + k;
            const UnlearnedModel u = unlearn::unlearn(target, split.d_f, split.d_nonmember, split.d_r, uc);
            const MIAResult r = run_mia(attack, u.model, split.d_f, split.d_nonmember);
            AlphaSweepRow row{a, fnr(r), evaluate_accuracy(u.model, split.d_test), uc.seed};
            out.rows.push_back(row);
            xs.push_back(a);
            fnrs.push_back(row.fnr);
            accs.push_back(row.test_accuracy);
            runs.push_back({{"alpha", a},
                            {"seed", uc.seed},
                            {"fnr", row.fnr},
                            {"test_accuracy", row.test_accuracy},
                            {"iterations", u.trace.size()},
                            {"confusion", mia_result_to_json(r)}});
        }
    }
    if (xs.size() >= 2) {
        out.spearman_fnr = spearman(xs, fnrs);
        out.spearman_accuracy = spearman(xs, accs);
    }
    auto files = emit_report(dir_, {}, out.rows, {});
    const fs::path sp = dir_ / "sweep.json";
    detail::write_text(sp, json{{"runs", runs},
                                {"spearman_alpha_fnr", out.spearman_fnr},
                                {"spearman_alpha_test_accuracy", out.spearman_accuracy}}
                                   .dump(2) + "\n");
    files.push_back(sp);
    record("sweep-alpha", files);
    return out;
}

std::vector<OverfitLevelResult> Runner::overfit_study() {
    const auto& oc = cfg_.overfit;
    SyntheticClusterConfig sc = oc.data;
    sc.seed = derive_seed(cfg_.seed, "overfit-data");
    const Dataset all = generate_synthetic_clusters(sc);
    auto [pool, test_pool] = random_partition(all, cfg_.data.test_fraction, derive_seed(cfg_.seed, "overfit-partition"));
    const DatasetSplit split = split_dataset(pool, test_pool, cfg_.data.split, derive_seed(cfg_.seed, "overfit-split"));
    const ModelSpec spec = model_spec(split);

    std::vector<OverfitLevelResult> results;
    std::vector<fs::path> files;
    json levels = json::array();
    for (std::size_t i = 0; i < oc.levels.size(); ++i) {
        const OverfitLevel& level = oc.levels[i];
        TrainConfig tc = cfg_.train;
        tc.epochs = level.epochs;
        tc.target_train_accuracy = level.target_train_accuracy;
        tc.seed = derive_seed(cfg_.seed, "overfit-target");
        const TrainedModel target = train_classifier(spec, split.d_t, tc);
        const UnlearnedModel u = unlearn::unlearn(target, split.d_f, split.d_nonmember, split.d_r, oc.unlearn);

        const auto f0 = max_conf(target, split.d_f), n0 = max_conf(target, split.d_nonmember);
        const auto f1 = max_conf(u.model, split.d_f), n1 = max_conf(u.model, split.d_nonmember);
        OverfitLevelResult r{level, target.meta.train_accuracy, evaluate_accuracy(target, split.d_test),
                             ks_distance(f0, n0), ks_distance(f1, n1), ks_distance(f1, n0)};
        results.push_back(r);
        levels.push_back({{"epochs", level.epochs},
                          {"train_accuracy", r.train_accuracy},
                          {"test_accuracy", r.test_accuracy},
                          {"ks_before", r.ks_before},
                          {"ks_after", r.ks_after},
                          {"ks_after_vs_original_nonmember", r.ks_after_vs_original}});

        const double lo = 1.0 / static_cast<double>(spec.num_classes);
        std::map<std::string, DensityCurve> curves{
            {"forget_before", density_curve(f0, cfg_.density_bins, lo, 1.0)},
            {"nonmember_before", density_curve(n0, cfg_.density_bins, lo, 1.0)},
            {"forget_unlearn", density_curve(f1, cfg_.density_bins, lo, 1.0)},
            {"nonmember_unlearn", density_curve(n1, cfg_.density_bins, lo, 1.0)}};
        auto written = emit_report(dir_ / "overfit" / ("level_" + std::to_string(i)), {}, {}, curves);
        files.insert(files.end(), written.begin(), written.end());
    }
    const fs::path p = dir_ / "overfit_study.json";
    detail::write_text(p, json{{"levels", levels}}.dump(2) + "\n");
    files.push_back(p);
    record("overfit-study", files);
    return results;
}

void Runner::run_all() {
    prepare_data();
    train_target();
    run_unlearn();
    run_retrain();
    for (Method m : {Method::original, Method::retrain, Method::unlearn}) attack(m);
    evaluate();
    sweep_alpha(cfg_.sweep_alphas);
    overfit_study();
}

}  // namespace unlearn
