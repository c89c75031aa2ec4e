// Acceptance checks, one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "oracle.hpp"
#include "unlearn/experiment.hpp"
#include "unlearn/loss.hpp"
#include "unlearn/rng.hpp"

using namespace unlearn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = UNLEARN_CONFIG_DIR;
const fs::path kOut = UNLEARN_ACCEPTANCE_OUT;

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    failures += !ok;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void guarded(int id, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, std::string("exception: ") + e.what());
    }
}

Matrix random_posteriors(std::size_t n, std::size_t c, Rng& rng) {
    Matrix z(n, c);
    for (double& v : z.data) v = 3.0 * standard_normal(rng);
    return softmax_rows(z);
}

std::vector<oracle::Vec> rows_of(const Matrix& m) {
    std::vector<oracle::Vec> out;
    for (std::size_t r = 0; r < m.rows; ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
    return out;
}

std::vector<double> jitter(std::vector<double> p, std::uint64_t seed) {
    Rng rng(mix_seed(seed));
    for (double& v : p) v += 0.1 * standard_normal(rng);
    return p;
}

Dataset random_labeled(std::size_t n, std::size_t dim, int classes, Rng& rng) {
    Dataset d(dim);
    for (std::size_t i = 0; i < n; ++i) {
        LabeledExample ex;
        for (std::size_t j = 0; j < dim; ++j) ex.features.push_back(standard_normal(rng));
        ex.label = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(classes)));
        d.push_back(ex, i);
    }
    return d;
}

void formula_oracles() {
    Rng rng(mix_seed(101));
    double worst_critic = 0.0, worst_generator = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t c = 2 + uniform_index(rng, 9), n = 1 + uniform_index(rng, 16);
        const std::vector<std::size_t> hidden{1 + uniform_index(rng, 8), 1 + uniform_index(rng, 8)};
        const Critic critic(CriticSpec{hidden, c});
        const auto cp = jitter(critic.initial_parameters(t), t);
        const Matrix real = sort_posteriors({random_posteriors(n, c, rng)}).rows;
        const Matrix fake = sort_posteriors({random_posteriors(n, c, rng)}).rows;
        std::vector<double> eps(n);
        for (double& e : eps) e = uniform01(rng);
        const double lambda = 20.0 * uniform01(rng);
        const int p = 1 + static_cast<int>(uniform_index(rng, 2));
        auto cl = oracle::layers(c, hidden);
        cl.push_back({hidden.back(), 1});
        worst_critic = std::max(worst_critic, oracle::relative_error(
            critic_loss(critic, cp, real, fake, eps, lambda, p).total,
            oracle::critic_loss(cp, cl, rows_of(real), rows_of(fake), eps, lambda, p)));

        const std::size_t dim = 2 + uniform_index(rng, 6), width = 2 + uniform_index(rng, 10);
        TrainedModel gen = init_model(mlp_spec(dim, {width}, c), 500 + t);
        gen.parameters = jitter(gen.parameters, 900 + t);
        const Dataset forget = random_labeled(n, dim, static_cast<int>(c), rng);
        const Dataset retained = random_labeled(1 + uniform_index(rng, 16), dim, static_cast<int>(c), rng);
        const double alpha = uniform01(rng);
        worst_generator = std::max(worst_generator, oracle::relative_error(
            generator_loss(critic, cp, gen, forget, retained, alpha).total,
            oracle::generator_loss(cp, cl, gen.parameters, oracle::layers(dim, {width, c}), rows_of(forget.features),
                                   rows_of(retained.features), retained.labels, alpha)));
    }

    // FNR against a recount of per-example attack decisions.
    bool fnr_exact = true;
    for (int t = 0; t < 100; ++t) {
        const std::size_t c = 2 + uniform_index(rng, 5), dim = 3;
        AttackModel attack{init_model(mlp_spec(c, {8}, 2), 40 + t)};
        attack.net.parameters = jitter(attack.net.parameters, 60 + t);
        const TrainedModel target = init_model(mlp_spec(dim, {6}, c), 80 + t);
        const Dataset f = random_labeled(1 + uniform_index(rng, 50), dim, static_cast<int>(c), rng);
        const Dataset nm = random_labeled(1 + uniform_index(rng, 50), dim, static_cast<int>(c), rng);
        const MIAResult r = run_mia(attack, target, f, nm);
        std::size_t fn = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            Matrix row(1, dim);
            std::copy(f.features.row(i).begin(), f.features.row(i).end(), row.row(0).begin());
            const Matrix s = sort_posteriors(posterior(target, row)).rows;
            const Matrix out = posterior(attack.net, s).rows;
            fn += out(0, 1) > out(0, 0) ? 0 : 1;
        }
        fnr_exact = fnr_exact && r.fn == fn && fnr(r) == static_cast<double>(fn) / static_cast<double>(f.size());
    }
    report(1, worst_critic < 1e-6 && worst_generator < 1e-6 && fnr_exact,
           fmt("critic loss max rel err %.2e, generator loss max rel err %.2e (tol 1e-6); FNR recount %s",
               worst_critic, worst_generator, fnr_exact ? "exact" : "MISMATCH"));
}

void gradient_penalty_checks() {
    const Critic critic(CriticSpec{{5, 4}, 3});
    Rng rng(mix_seed(202));
    const auto p = jitter(critic.initial_parameters(3), 4);
    const Matrix x = random_posteriors(50, 3, rng);
    Critic::Tape tape;
    critic.forward(p, x, &tape);
    const Matrix g = critic.input_gradient(p, tape);
    double worst = 0.0;
    const double h = 1e-6;
    for (std::size_t n = 0; n < x.rows; ++n) {
        oracle::Vec fd(3), an(g.row(n).begin(), g.row(n).end());
        for (std::size_t c = 0; c < 3; ++c) {
            Matrix up = x, down = x;
            up(n, c) += h;
            down(n, c) -= h;
            fd[c] = (critic.forward(p, up)[n] - critic.forward(p, down)[n]) / (2 * h);
        }
        worst = std::max(worst, oracle::relative_error(oracle::pnorm(an, 2), oracle::pnorm(fd, 2)));
    }
    const Critic linear(CriticSpec{{}, 4});
    const std::vector<double> unit{0.5, 0.5, -0.5, 0.5, 0.25};
    const double pen = gradient_penalty(linear, unit, random_posteriors(64, 4, rng), 10.0, 2);
    report(2, critic.parameter_count() <= 50 && worst < 1e-3 && std::abs(pen) < 1e-6,
           fmt("%zu-parameter critic: input-gradient norm max rel err %.2e (tol 1e-3); unit linear critic penalty "
               "%.1e (tol 1e-6)",
               critic.parameter_count(), worst, pen));
}

void sort_properties() {
    Rng rng(mix_seed(303));
    const Matrix in = random_posteriors(10000, 10, rng);
    const Matrix out = sort_posteriors({in}).rows;
    bool ok = out.rows == in.rows && out.cols == in.cols;
    double worst_sum = 0.0;
    for (std::size_t r = 0; ok && r < in.rows; ++r) {
        auto a = in.row(r), b = out.row(r);
        ok = std::is_sorted(b.begin(), b.end(), std::greater<>()) && std::is_permutation(a.begin(), a.end(), b.begin());
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(a.begin(), a.end(), 0.0) -
                                                 std::accumulate(b.begin(), b.end(), 0.0)));
    }
    report(4, ok && worst_sum < 1e-9,
           fmt("10000 rows non-increasing permutations: %s; max row-sum change %.1e (tol 1e-9)", ok ? "yes" : "no",
               worst_sum));
}

void canonical_run() {
    ExperimentConfig cfg = load_experiment_config(kConfigs / "synthetic10.json");
    cfg.output_root = kOut;
    Runner runner(cfg);
    const DatasetSplit split = runner.prepare_data();
    const TrainedModel target = runner.train_target();
    const Fingerprint before = target.fingerprint;
    const UnlearnedModel u = runner.run_unlearn();
    runner.run_retrain();
    for (Method m : {Method::original, Method::retrain, Method::unlearn}) runner.attack(m);
    const auto bundles = runner.evaluate();

    guarded(3, [&] {
        // Replay the same unlearning run with an observer on the generator.
        const TrainedModel reloaded = runner.load_model(Method::original);
        bool init_equal = false;
        const UnlearnedModel replay = unlearn::unlearn(
            reloaded, split.d_f, split.d_nonmember, split.d_r, runner.config().unlearn,
            [&](std::size_t it, const TrainedModel& g) {
                if (it == 0)
                    init_equal = posterior(g, split.d_t.features).rows.data ==
                                 posterior(reloaded, split.d_t.features).rows.data;
            });
        const bool frozen = param_fingerprint(reloaded) == before && reloaded.fingerprint == before;
        const bool same = replay.model.parameters == u.model.parameters;
        report(3, frozen && init_equal && same,
               fmt("M_init fingerprint unchanged after %zu iterations: %s; iteration-0 posteriors equal M_init's on "
                   "%zu examples: %s; replay matches the run: %s",
                   replay.trace.size(), frozen ? "yes" : "no", split.d_t.size(), init_equal ? "yes" : "no",
                   same ? "yes" : "no"));
    });

    const auto& orig = bundles[0];
    const auto& ret = bundles[1];
    const auto& unl = bundles[2];
    report(5,
           target.meta.train_accuracy >= 0.97 && split.d_t.size() == 5000 && unl.fnr - orig.fnr >= 0.2 &&
               std::abs(unl.fnr - ret.fnr) <= 0.15,
           fmt("train acc %.3f on %zu examples; FNR original %.3f, unlearn %.3f, retrain %.3f; gain %.3f (>= 0.2), "
               "|unlearn - retrain| %.3f (<= 0.15)",
               target.meta.train_accuracy, split.d_t.size(), orig.fnr, unl.fnr, ret.fnr, unl.fnr - orig.fnr,
               std::abs(unl.fnr - ret.fnr)));
    report(6, std::abs(unl.test_accuracy - ret.test_accuracy) <= 0.05,
           fmt("alpha %.2f: test acc unlearn %.4f, retrain %.4f, gap %.4f (<= 0.05)", cfg.unlearn.alpha,
               unl.test_accuracy, ret.test_accuracy, std::abs(unl.test_accuracy - ret.test_accuracy)));

    guarded(8, [&] {
        const SweepResult s = runner.sweep_alpha(cfg.sweep_alphas);
        std::string rows;
        for (double a : cfg.sweep_alphas) {
            double f = 0, acc = 0, n = 0;
            for (const auto& r : s.rows)
                if (r.alpha == a) f += r.fnr, acc += r.test_accuracy, n += 1;
            rows += fmt(" %.1f:%.3f/%.4f", a, f / n, acc / n);
        }
        report(8, cfg.sweep_seeds == 3 && s.rows.size() == 15 && s.spearman_fnr > 0.0 && s.spearman_accuracy < 0.0,
               fmt("%zu runs; spearman(alpha, FNR) %.3f (> 0), spearman(alpha, test acc) %.3f (< 0); mean FNR/acc "
                   "by alpha%s",
                   s.rows.size(), s.spearman_fnr, s.spearman_accuracy, rows.c_str()));
    });

    guarded(9, [&] {
        const auto levels = runner.overfit_study();
        bool ok = levels.size() == 3;
        std::string detail;
        for (const auto& l : levels) {
            ok = ok && l.ks_after <= 0.5 * l.ks_before;
            detail += fmt(" [%zu epochs, train %.3f test %.3f: KS %.3f -> %.3f]", l.level.epochs, l.train_accuracy,
                          l.test_accuracy, l.ks_before, l.ks_after);
        }
        report(9, ok, "KS after <= 0.5 x before at every level:" + detail);
    });
}

void speedup() {
    ExperimentConfig cfg = load_experiment_config(kConfigs / "medium.json");
    cfg.output_root = kOut;
    Runner runner(cfg);
    const DatasetSplit split = runner.prepare_data();
    runner.train_target();
    runner.run_unlearn();
    runner.run_retrain();
    const json t = json::parse(std::ifstream(runner.run_dir() / "timings.json"));
    const double tu = t.at("unlearn").get<double>(), tr = t.at("retrain").get<double>();
    const double ratio = compare_time(tu, tr);
    report(7, split.d_t.size() == 25000 && ratio >= 2.0,
           fmt("%zu examples, hidden %zu: unlearn %.2fs, retrain %.2fs, speedup %.2fx (>= 2)", split.d_t.size(),
               cfg.model.hidden.front(), tu, tr, ratio));
}

json strip_times(const fs::path& p) {
    json j = json::parse(std::ifstream(p));
    for (auto& m : j.at("methods")) m.erase("wall_time_seconds");
    return j;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism() {
    json j = json::parse(std::ifstream(kConfigs / "synthetic10.json"));
    j["run_id"] = "determinism";
    j["data"]["synthetic"]["samples_per_class"] = 300;
    j["data"]["forget_size"] = 150;
    j["data"]["nonmember_size"] = 150;
    j["model"]["hidden"] = {64, 64};
    j["train"]["epochs"] = 60;
    j["unlearn"]["max_iters"] = 80;
    j["sweep"]["seeds"] = 1;
    j["overfit_study"]["data"]["samples_per_class"] = 400;
    j["overfit_study"]["levels"] = json::parse(R"([{"epochs": 5}, {"epochs": 20}])");
    ExperimentConfig cfg = experiment_config_from_json(j);
    cfg.output_root = kOut / "determinism_a";
    Runner a(cfg);
    a.run_all();
    cfg.output_root = kOut / "determinism_b";
    Runner b(cfg);
    b.run_all();
    const bool metrics = strip_times(a.run_dir() / "metrics.json") == strip_times(b.run_dir() / "metrics.json");
    bool others = true;
    for (const char* f : {"alpha_sweep.csv", "sweep.json", "overfit_study.json", "ks.json", "trace.jsonl"})
        others = others && slurp(a.run_dir() / f) == slurp(b.run_dir() / f);
    report(10, metrics && others,
           fmt("two full runs: metrics.json without wall times %s; sweep, overfit, KS and trace files %s",
               metrics ? "identical" : "DIFFER", others ? "identical" : "DIFFER"));
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    fs::remove_all(kOut);
    guarded(1, formula_oracles);
    guarded(2, gradient_penalty_checks);
    guarded(4, sort_properties);
    try {
        canonical_run();
    } catch (const std::exception& e) {
        for (int id : {3, 5, 6, 8, 9}) report(id, false, std::string("canonical run failed: ") + e.what());
    }
    guarded(7, speedup);
    guarded(10, determinism);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d failed; %.0fs\n", failures, s);
    return failures == 0 ? 0 : 1;
}
