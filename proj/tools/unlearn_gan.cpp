#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "unlearn/error.hpp"
#include "unlearn/experiment.hpp"

using namespace unlearn;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Options {
    std::string config;
    std::string run_id;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string alphas;
    std::string model = "unlearn";
};

std::vector<double> parse_alphas(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw ConfigError("bad alpha '" + item + "' in --alphas");
        }
    }
    if (out.empty()) throw ConfigError("--alphas needs at least one value");
    return out;
}

void print_bundle(const MetricsBundle& b) {
    std::printf("%-9s fnr=%.4f test_accuracy=%.4f wall_time=%.2fs\n", std::string(to_string(b.method)).c_str(), b.fnr,
                b.test_accuracy, b.wall_time_seconds);
}

int run(const std::string& command, const Options& o) {
    ExperimentConfig cfg = load_experiment_config(o.config);
    if (!o.run_id.empty()) cfg.run_id = o.run_id;
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.output_root = o.out;
    Runner runner(cfg);

    if (command == "prepare-data") {
        const auto s = runner.prepare_data();
        std::printf("d_t=%zu d_f=%zu d_r=%zu d_in=%zu d_out=%zu d_nonmember=%zu d_test=%zu\n", s.d_t.size(),
                    s.d_f.size(), s.d_r.size(), s.d_in.size(), s.d_out.size(), s.d_nonmember.size(), s.d_test.size());
    } else if (command == "train-target") {
        const auto m = runner.train_target();
        std::printf("target train_accuracy=%.4f test_accuracy=%.4f epochs=%zu\n", m.meta.train_accuracy,
                    m.meta.test_accuracy.value_or(0.0), m.meta.epochs_run);
    } else if (command == "unlearn") {
        const auto u = runner.run_unlearn();
        std::printf("unlearned iterations=%zu stop=%s test_accuracy=%.4f\n", u.trace.size(),
                    u.trace.stop_reason ? std::string(to_string(*u.trace.stop_reason)).c_str() : "none",
                    u.model.meta.test_accuracy.value_or(0.0));
    } else if (command == "retrain") {
        const auto r = runner.run_retrain();
        std::printf("retrained test_accuracy=%.4f wall_time=%.2fs\n", r.model.meta.test_accuracy.value_or(0.0),
                    r.wall_time_seconds);
    } else if (command == "attack") {
        const auto r = runner.attack(method_from_string(o.model));
        std::printf("%s tp=%zu fp=%zu tn=%zu fn=%zu fnr=%.4f\n", o.model.c_str(), r.tp, r.fp, r.tn, r.fn, fnr(r));
    } else if (command == "evaluate") {
        for (const auto& b : runner.evaluate()) print_bundle(b);
    } else if (command == "sweep-alpha") {
        const auto s = runner.sweep_alpha(o.alphas.empty() ? cfg.sweep_alphas : parse_alphas(o.alphas));
        for (const auto& r : s.rows)
            std::printf("alpha=%.2f seed=%llu fnr=%.4f test_accuracy=%.4f\n", r.alpha,
                        static_cast<unsigned long long>(r.seed), r.fnr, r.test_accuracy);
    } else if (command == "overfit-study") {
        for (const auto& l : runner.overfit_study())
            std::printf("train_accuracy=%.4f test_accuracy=%.4f ks_before=%.4f ks_after=%.4f\n", l.train_accuracy,
                        l.test_accuracy, l.ks_before, l.ks_after);
    } else if (command == "run-all") {
        runner.run_all();
        for (const auto& b : read_metrics_json(runner.run_dir() / "metrics.json")) print_bundle(b);
    }
    std::printf("run directory: %s\n", runner.run_dir().string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GAN-based machine unlearning experiments"};
    app.require_subcommand(1);
    Options o;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"prepare-data", "generate or load the data and write every split role"},
        {"train-target", "train the original model on d_t"},
        {"unlearn", "remove d_f from the original model with the WGAN procedure"},
        {"retrain", "train a fresh model on d_r only"},
        {"attack", "run the membership inference attack against one model"},
        {"evaluate", "FNR, test accuracy and timing for original, retrain and unlearn"},
        {"sweep-alpha", "unlearn across alpha values and seeds"},
        {"overfit-study", "density curves before and after unlearning at several overfit levels"},
        {"run-all", "every step above in order"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", o.config, "experiment config (JSON)")->required();
        sub->add_option("--run-id", o.run_id, "override the config's run_id");
        sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { o.seed = s; }, "override the global seed");
        sub->add_option("--out", o.out, "output root (default $UNLEARN_GAN_OUT or ./runs)");
        if (name == "sweep-alpha") sub->add_option("--alphas", o.alphas, "comma-separated alphas");
        if (name == "attack")
            sub->add_option("--model", o.model, "original, retrain or unlearn")
                ->check(CLI::IsMember({"original", "retrain", "unlearn"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
