#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "unlearn/error.hpp"
#include "unlearn/experiment.hpp"

using namespace unlearn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "unlearn_cli_tests";

json tiny_config() {
    return json::parse(R"({
      "run_id": "tiny", "seed": 7,
      "data": {"synthetic": {"num_classes": 3, "samples_per_class": 120, "feature_dim": 6, "cluster_spread": 2.0},
               "test_fraction": 0.4, "forget_size": 20, "nonmember_size": 20},
      "model": {"hidden": [32]},
      "train": {"epochs": 15, "batch_size": 32},
      "unlearn": {"max_iters": 8, "min_iters": 4, "n_critic": 2, "retained_fraction": 0.2, "critic_hidden": [16]},
      "attack": {"hidden": [16], "train": {"epochs": 10}},
      "sweep": {"alphas": [0.2, 0.4, 0.6, 0.8, 1.0], "seeds": 1},
      "overfit_study": {"data": {"num_classes": 2, "samples_per_class": 100, "feature_dim": 6},
                        "levels": [{"epochs": 2}, {"epochs": 8}]},
      "density_bins": 8
    })");
}

ExperimentConfig tiny(const std::string& run_id) {
    ExperimentConfig c = experiment_config_from_json(tiny_config());
    c.run_id = run_id;
    c.output_root = kRoot;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(UNLEARN_GAN_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const json& j) {
    fs::create_directories(kRoot);
    const fs::path p = kRoot / name;
    std::ofstream(p) << j.dump(2);
    return p;
}

}  // namespace

TEST_CASE("config JSON round trip") {
    const ExperimentConfig c = tiny("rt");
    const ExperimentConfig back = experiment_config_from_json(experiment_config_to_json(c));
    CHECK(experiment_config_to_json(back) == experiment_config_to_json(c));
    CHECK(back.data.synthetic.num_classes == 3);
    CHECK(back.overfit.levels.size() == 2);
    CHECK_FALSE(back.overfit.levels[0].target_train_accuracy.has_value());
    CHECK(back.overfit.unlearn.max_iters == 8);
}

TEST_CASE("config errors") {
    auto bad = [](const std::string& pointer, json value) {
        json j = tiny_config();
        j[json::json_pointer(pointer)] = std::move(value);
        CAPTURE(pointer);
        CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
    };
    bad("/unlearn/alpha", 1.5);
    bad("/unlearn/seed", 3);
    bad("/unlearn/typo", 3);
    bad("/bogus", 1);
    bad("/data/source", "parquet");
    bad("/train/epochs", "many");
    bad("/sweep/alphas", json::array({0.2, -0.1}));
    bad("/overfit_study/levels", json::array());
    bad("/density_bins", 0);
    CHECK_THROWS_AS(load_experiment_config(kRoot / "does-not-exist.json"), ConfigError);
}

TEST_CASE("configs shipped with the repository parse") {
    for (const auto& e : fs::directory_iterator(UNLEARN_CONFIG_DIR))
        if (e.path().extension() == ".json") CHECK_NOTHROW(load_experiment_config(e.path()));
}

TEST_CASE("missing prerequisites name the file and the command") {
    fs::remove_all(kRoot / "empty");
    Runner r(tiny("empty"));
    try {
        r.train_target();
        FAIL("expected IoError");
    } catch (const IoError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("split.json") != std::string::npos);
        CHECK(msg.find("prepare-data") != std::string::npos);
    }
    r.prepare_data();
    CHECK_THROWS_AS(r.run_unlearn(), IoError);
    CHECK_THROWS_AS(r.evaluate(), IoError);

    ExperimentConfig big = tiny("big");
    big.data.split.forget_size = 100000;
    CHECK_THROWS_AS(Runner(big).prepare_data(), SizeError);
}

TEST_CASE("run-all produces every artifact and is repeatable") {
    fs::remove_all(kRoot / "full");
    Runner r(tiny("full"));
    r.run_all();
    const fs::path d = r.run_dir();
    const auto metrics = read_metrics_json(d / "metrics.json");
    REQUIRE(metrics.size() == 3);
    CHECK(metrics[0].method == Method::original);
    CHECK(metrics[1].method == Method::retrain);
    CHECK(metrics[2].method == Method::unlearn);
    for (const auto& m : metrics) {
        CHECK(m.confusion.tp + m.confusion.fn == 20);
        CHECK(m.confusion.fp + m.confusion.tn == 20);
        CHECK(m.fnr == doctest::Approx(static_cast<double>(m.confusion.fn) / 20));
    }

    std::ifstream sweep(d / "alpha_sweep.csv");
    std::string line;
    std::size_t rows = 0;
    std::getline(sweep, line);
    CHECK(line == "alpha,fnr,test_accuracy");
    while (std::getline(sweep, line)) rows += !line.empty();
    CHECK(rows == 5);

    for (const char* f : {"manifest.json", "trace.jsonl", "timings.json", "ks.json", "sweep.json", "overfit_study.json",
                          "metrics.svg", "density.svg", "alpha_sweep.svg", "checkpoints/unlearned.ckpt",
                          "checkpoints/retrained.ckpt", "overfit/level_1/density.svg"})
        CHECK_MESSAGE(fs::exists(d / f), f);

    const json manifest = json::parse(slurp(d / "manifest.json"));
    CHECK(manifest.at("commands").size() >= 8);

    const auto strip = [](std::string text) {
        json j = json::parse(text);
        for (auto& m : j.at("methods")) m.erase("wall_time_seconds");
        return j;
    };
    const json first = strip(slurp(d / "metrics.json"));
    const std::string sweep_first = slurp(d / "alpha_sweep.csv");
    const std::string overfit_first = slurp(d / "overfit_study.json");

    fs::remove_all(kRoot / "full2");
    Runner again(tiny("full2"));
    again.run_all();
    json second = strip(slurp(again.run_dir() / "metrics.json"));
    second["run_id"] = "full";
    for (auto& m : second.at("methods")) m["run_id"] = "full";
    CHECK(first == second);
    CHECK(slurp(again.run_dir() / "alpha_sweep.csv") == sweep_first);
    CHECK(slurp(again.run_dir() / "overfit_study.json") == overfit_first);

    // Rerunning a command in place keeps the results.
    r.evaluate();
    CHECK(strip(slurp(d / "metrics.json")) == first);
}

TEST_CASE("CLI exit codes") {
    const fs::path good = write_config("good.json", tiny_config());
    json broken = tiny_config();
    broken["unlearn"]["alpha"] = 7;
    const fs::path bad = write_config("bad.json", broken);
    const std::string out = " --out " + kRoot.string();
    fs::remove_all(kRoot / "cli");

    CHECK(run_cli("prepare-data --config " + bad.string() + out) == 1);
    CHECK(run_cli("prepare-data") == 1);
    CHECK(run_cli("no-such-command --config " + good.string()) == 1);
    CHECK(run_cli("train-target --config " + good.string() + " --run-id cli" + out) == 2);
    CHECK(run_cli("prepare-data --config " + good.string() + " --run-id cli" + out) == 0);
    CHECK(run_cli("train-target --config " + good.string() + " --run-id cli" + out) == 0);
    CHECK(run_cli("attack --model finetune --config " + good.string() + " --run-id cli" + out) == 1);
    CHECK(run_cli("sweep-alpha --alphas 0.2,x --config " + good.string() + " --run-id cli" + out) == 1);
    CHECK(fs::exists(kRoot / "cli" / "checkpoints" / "target.ckpt"));
}

TEST_CASE("output root from the environment") {
    ::setenv("UNLEARN_GAN_OUT", "/tmp/somewhere", 1);
    CHECK(default_output_root() == fs::path("/tmp/somewhere"));
    ExperimentConfig c = tiny("env");
    c.output_root.clear();
    CHECK(Runner(c).run_dir() == fs::path("/tmp/somewhere") / "env");
    ::unsetenv("UNLEARN_GAN_OUT");
    CHECK(default_output_root() == fs::path("runs"));
}
