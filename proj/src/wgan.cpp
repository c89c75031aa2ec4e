#include "unlearn/wgan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <string>

#include "unlearn/loss.hpp"
#include "unlearn/optim.hpp"

namespace unlearn {

void UnlearnConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (!(lambda_gp > 0.0)) throw ConfigError("lambda_gp must be positive");
    if (gp_norm_p < 1) throw ConfigError("gp_norm_p must be a positive integer");
    if (n_critic < 1) throw ConfigError("n_critic must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(generator_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("learning rates must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ConfigError("Adam betas must lie in [0, 1)");
    if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
    if (!(stop_distance_eps > 0.0)) throw ConfigError("stop_distance_eps must be positive");
    if (stop_window < 1) throw ConfigError("stop_window must be at least 1");
    if (!(retained_fraction > 0.0 && retained_fraction <= 1.0)) throw ConfigError("retained_fraction must lie in (0, 1]");
}

nlohmann::json unlearn_config_to_json(const UnlearnConfig& c) {
    return {{"alpha", c.alpha},
            {"lambda_gp", c.lambda_gp},
            {"gp_norm_p", c.gp_norm_p},
            {"n_critic", c.n_critic},
            {"batch_size", c.batch_size},
            {"generator_lr", c.generator_lr},
            {"critic_lr", c.critic_lr},
            {"adam_beta1", c.adam_beta1},
            {"adam_beta2", c.adam_beta2},
            {"max_iters", c.max_iters},
            {"stop_distance_eps", c.stop_distance_eps},
            {"stop_window", c.stop_window},
            {"min_iters", c.min_iters},
            {"retained_fraction", c.retained_fraction},
            {"critic_hidden", c.critic_hidden},
            {"seed", c.seed}};
}

UnlearnConfig unlearn_config_from_json(const nlohmann::json& j, UnlearnConfig c) {
    static const std::set<std::string> known{"alpha", "lambda_gp", "gp_norm_p", "n_critic", "batch_size",
                                             "generator_lr", "critic_lr", "adam_beta1", "adam_beta2", "max_iters",
                                             "stop_distance_eps", "stop_window", "min_iters", "retained_fraction",
                                             "critic_hidden", "seed"};
    if (!j.is_object()) throw ConfigError("unlearn config must be an object");
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) throw ConfigError("unknown unlearn config key '" + key + "'");
    try {
        c.alpha = j.value("alpha", c.alpha);
        c.lambda_gp = j.value("lambda_gp", c.lambda_gp);
        c.gp_norm_p = j.value("gp_norm_p", c.gp_norm_p);
        c.n_critic = j.value("n_critic", c.n_critic);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.generator_lr = j.value("generator_lr", c.generator_lr);
        c.critic_lr = j.value("critic_lr", c.critic_lr);
        c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
        c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
        c.max_iters = j.value("max_iters", c.max_iters);
        c.stop_distance_eps = j.value("stop_distance_eps", c.stop_distance_eps);
        c.stop_window = j.value("stop_window", c.stop_window);
        c.min_iters = j.value("min_iters", c.min_iters);
        c.retained_fraction = j.value("retained_fraction", c.retained_fraction);
        c.critic_hidden = j.value("critic_hidden", c.critic_hidden);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid unlearn config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string_view to_string(StopReason r) {
    return r == StopReason::distance_converged ? "distance_converged" : "max_iters";
}

// ---------------------------------------------------------------------------

SortedRows sort_rows_descending(const Matrix& rows) {
    SortedRows out{Matrix(rows.rows, rows.cols), std::vector<std::uint32_t>(rows.rows * rows.cols)};
    std::vector<std::uint32_t> idx(rows.cols);
    for (std::size_t r = 0; r < rows.rows; ++r) {
        auto in = rows.row(r);
        std::iota(idx.begin(), idx.end(), 0u);
        std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return in[a] > in[b]; });
        auto dst = out.values.row(r);
        for (std::size_t c = 0; c < rows.cols; ++c) {
            dst[c] = in[idx[c]];
            out.source[r * rows.cols + c] = idx[c];
        }
    }
    return out;
}

PosteriorBatch sort_posteriors(const PosteriorBatch& batch) { return {sort_rows_descending(batch.rows).values}; }

std::vector<double> interpolate(std::span<const double> s1, std::span<const double> s2, double eps) {
    if (s1.size() != s2.size()) throw DimensionError("interpolated rows must have equal length");
    if (!(eps >= 0.0 && eps <= 1.0)) throw InputError("interpolation weight must lie in [0, 1]");
    std::vector<double> out(s1.size());
    for (std::size_t i = 0; i < s1.size(); ++i) out[i] = eps * s1[i] + (1.0 - eps) * s2[i];
    return out;
}

Matrix interpolate_rows(const Matrix& s1, const Matrix& s2, std::span<const double> eps) {
    if (s1.rows != s2.rows || s1.cols != s2.cols) throw DimensionError("interpolated batches must have equal shape");
    if (eps.size() != s1.rows) throw DimensionError("need one interpolation weight per row");
    Matrix out(s1.rows, s1.cols);
    for (std::size_t r = 0; r < s1.rows; ++r) {
        auto row = interpolate(s1.row(r), s2.row(r), eps[r]);
        std::copy(row.begin(), row.end(), out.row(r).begin());
    }
    return out;
}

double gradient_penalty(const Critic& critic, std::span<const double> params, const Matrix& x_hat, double lambda,
                        int p, std::span<double> grad) {
    if (x_hat.rows == 0) throw InputError("gradient penalty of an empty batch");
    if (p < 1) throw ConfigError("gradient-penalty norm must be a positive integer");
    Critic::Tape tape;
    critic.forward(params, x_hat, &tape);
    const Matrix g = critic.input_gradient(params, tape);
    const double pd = static_cast<double>(p);
    const double inv_n = 1.0 / static_cast<double>(g.rows);

    double total = 0.0;
    Matrix r(g.rows, g.cols);
    for (std::size_t n = 0; n < g.rows; ++n) {
        auto row = g.row(n);
        double acc = 0.0;
        for (double v : row) acc += std::pow(std::abs(v), pd);
        const double norm = std::pow(acc, 1.0 / pd);
        const double dev = norm - 1.0;
        total += dev * dev;
        if (grad.empty() || norm == 0.0) continue;
        // d||g||_p / dg_i = sign(g_i) |g_i|^(p-1) / ||g||_p^(p-1)
        const double scale = lambda * inv_n * 2.0 * dev / std::pow(norm, pd - 1.0);
        auto rr = r.row(n);
        for (std::size_t i = 0; i < row.size(); ++i) {
            const double a = std::abs(row[i]);
            const double s = row[i] > 0.0 ? 1.0 : (row[i] < 0.0 ? -1.0 : 0.0);
            rr[i] = scale * s * std::pow(a, pd - 1.0);
        }
    }
    const double penalty = lambda * total * inv_n;
    if (!std::isfinite(penalty)) throw NumericError("gradient penalty is not finite");
    if (!grad.empty()) critic.input_gradient_vjp(params, tape, r, grad);
    return penalty;
}

CriticLossTerms critic_loss(const Critic& critic, std::span<const double> params, const Matrix& s_nonmember,
                            const Matrix& s_forget, std::span<const double> eps, double lambda, int p,
                            std::span<double> grad) {
    if (s_nonmember.cols != s_forget.cols) throw DimensionError("critic batches must have equal width");
    if (s_nonmember.rows == 0 || s_forget.rows == 0) throw InputError("critic loss of an empty batch");
    CriticLossTerms t;
    Critic::Tape real_tape, fake_tape;
    const auto real = critic.forward(params, s_nonmember, grad.empty() ? nullptr : &real_tape);
    const auto fake = critic.forward(params, s_forget, grad.empty() ? nullptr : &fake_tape);
    t.real_mean = std::accumulate(real.begin(), real.end(), 0.0) / static_cast<double>(real.size());
    t.fake_mean = std::accumulate(fake.begin(), fake.end(), 0.0) / static_cast<double>(fake.size());
    const Matrix x_hat = interpolate_rows(s_nonmember, s_forget, eps);
    t.penalty = gradient_penalty(critic, params, x_hat, lambda, p, grad);
    t.total = -t.real_mean + t.fake_mean + t.penalty;
    if (!std::isfinite(t.total)) throw NumericError("critic loss is not finite");
    if (!grad.empty()) {
        std::vector<double> d_real(real.size(), -1.0 / static_cast<double>(real.size()));
        std::vector<double> d_fake(fake.size(), 1.0 / static_cast<double>(fake.size()));
        critic.backward_params(params, real_tape, d_real, grad);
        critic.backward_params(params, fake_tape, d_fake, grad);
    }
    return t;
}

CriticLossTerms critic_loss(const Critic& critic, std::span<const double> params, const Matrix& s_nonmember,
                            const Matrix& s_forget, const UnlearnConfig& cfg, Rng& rng, std::span<double> grad) {
    std::vector<double> eps(s_nonmember.rows);
    for (double& e : eps) e = uniform01(rng);
    return critic_loss(critic, params, s_nonmember, s_forget, eps, cfg.lambda_gp, cfg.gp_norm_p, grad);
}

GeneratorLossTerms generator_loss(const Critic& critic, std::span<const double> critic_params,
                                  const TrainedModel& generator, const Dataset& forget_batch,
                                  const Dataset& retained_batch, double alpha, std::span<double> grad) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (alpha < 1.0 && retained_batch.empty()) throw ConfigError("alpha < 1 requires a non-empty retained batch");
    if (alpha > 0.0 && forget_batch.empty()) throw InputError("generator loss needs a non-empty forget batch");
    const Network net(generator.spec);
    GeneratorLossTerms t;

    if (alpha > 0.0) {
        Network::Tape tape;
        const Matrix z = net.forward(generator.parameters, forget_batch.features, &tape);
        const Matrix probs = softmax_rows(z);
        const SortedRows sorted = sort_rows_descending(probs);
        Critic::Tape ctape;
        const auto d = critic.forward(critic_params, sorted.values, &ctape);
        const double n = static_cast<double>(d.size());
        t.adversarial = -std::accumulate(d.begin(), d.end(), 0.0) / n;
        if (!grad.empty()) {
            const Matrix gs = critic.input_gradient(critic_params, ctape);
            Matrix dprobs(probs.rows, probs.cols);
            for (std::size_t r = 0; r < probs.rows; ++r)
                for (std::size_t c = 0; c < probs.cols; ++c)
                    dprobs(r, sorted.source[r * probs.cols + c]) = -alpha / n * gs(r, c);
            net.backward(generator.parameters, tape, softmax_backward(probs, dprobs), grad);
        }
    }
    if (alpha < 1.0) {
        Network::Tape tape;
        const Matrix z = net.forward(generator.parameters, retained_batch.features, grad.empty() ? nullptr : &tape);
        Matrix dz;
        t.retained = cross_entropy(z, retained_batch.labels, grad.empty() ? nullptr : &dz, 1.0 - alpha);
        if (!grad.empty()) net.backward(generator.parameters, tape, dz, grad);
    }
    t.total = (alpha > 0.0 ? alpha * t.adversarial : 0.0) + (alpha < 1.0 ? (1.0 - alpha) * t.retained : 0.0);
    if (!std::isfinite(t.total)) throw NumericError("generator loss is not finite");
    return t;
}

// ---------------------------------------------------------------------------

std::optional<StopReason> stop_condition(const UnlearnTrace& trace, const UnlearnConfig& cfg) {
    const std::size_t n = trace.size();
    if (n >= cfg.stop_window && n >= cfg.min_iters) {
        double sum = 0.0;
        for (std::size_t i = n - cfg.stop_window; i < n; ++i) sum += trace.records[i].wasserstein;
        if (std::abs(sum / static_cast<double>(cfg.stop_window)) < cfg.stop_distance_eps)
            return StopReason::distance_converged;
    }
    if (n >= cfg.max_iters) return StopReason::max_iters;
    return std::nullopt;
}

bool should_stop(const UnlearnTrace& trace, const UnlearnConfig& cfg) { return stop_condition(trace, cfg).has_value(); }

namespace {

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

bool finite(const IterationRecord& r) {
    return std::isfinite(r.critic_loss) && std::isfinite(r.generator_loss) && std::isfinite(r.wasserstein) &&
           std::isfinite(r.gradient_penalty) && std::isfinite(r.retained_loss);
}

}  // namespace

UnlearnedModel unlearn(const TrainedModel& m_init, const Dataset& d_f, const Dataset& d_nonmember, const Dataset& d_r,
                       const UnlearnConfig& cfg, const UnlearnObserver& observer) {
    cfg.validate();
    if (d_f.empty()) throw InputError("forget set is empty");
    if (d_nonmember.empty()) throw InputError("nonmember set is empty");
    if (cfg.alpha < 1.0 && d_r.empty()) throw ConfigError("alpha < 1 requires retained data");
    const std::size_t classes = m_init.spec.num_classes;

    Rng rng(derive_seed(cfg.seed, "unlearn"));
    UnlearnedModel result;
    result.config = cfg;
    result.model = clone_model(m_init);
    TrainedModel& gen = result.model;

    // M_init is frozen, so the sorted nonmember posteriors are computed once.
    const Matrix real_all = sort_rows_descending(posterior(m_init, d_nonmember.features).rows).values;

    Dataset retained;
    if (!d_r.empty()) {
        const auto want = static_cast<std::size_t>(std::ceil(cfg.retained_fraction * static_cast<double>(d_r.size())));
        auto pick = sample_without_replacement(d_r.size(), std::min(want, d_r.size()), rng);
        std::sort(pick.begin(), pick.end());
        retained = d_r.subset(pick);
    }

    const Critic critic(CriticSpec{cfg.critic_hidden, classes});
    std::vector<double> cparams = critic.initial_parameters(derive_seed(cfg.seed, "critic"));
    Adam copt(critic.parameter_count(), {cfg.critic_lr, cfg.adam_beta1, cfg.adam_beta2, 1e-8, 0.0});
    Adam gopt(gen.parameters.size(), {cfg.generator_lr, cfg.adam_beta1, cfg.adam_beta2, 1e-8, 0.0});
    std::vector<double> cgrad(cparams.size()), ggrad(gen.parameters.size());

    const std::size_t batch = std::min({cfg.batch_size, d_f.size(), d_nonmember.size()});
    UnlearnTrace& trace = result.trace;
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        if (observer) observer(iter, gen);
        IterationRecord rec;
        try {
            CriticLossTerms last;
            for (std::size_t k = 0; k < cfg.n_critic; ++k) {
                const auto fi = sample_without_replacement(d_f.size(), batch, rng);
                const auto ri = sample_without_replacement(d_nonmember.size(), batch, rng);
                const Matrix fake = sort_rows_descending(posterior(gen, gather_rows(d_f.features, fi)).rows).values;
                const Matrix real = gather_rows(real_all, ri);
                std::fill(cgrad.begin(), cgrad.end(), 0.0);
                last = critic_loss(critic, cparams, real, fake, cfg, rng, cgrad);
                copt.step(cparams, cgrad);
            }
            rec.critic_loss = last.total;
            rec.wasserstein = last.wasserstein();
            rec.gradient_penalty = last.penalty;

            const auto fi = sample_without_replacement(d_f.size(), batch, rng);
            std::fill(ggrad.begin(), ggrad.end(), 0.0);
            const auto g = generator_loss(critic, cparams, gen, d_f.subset(fi), retained, cfg.alpha, ggrad);
            gopt.step(gen.parameters, ggrad);
            rec.generator_loss = g.total;
            rec.retained_loss = g.retained;
        } catch (const NumericError& e) {
            throw UnlearnDivergence(std::string(e.what()) + " at iteration " + std::to_string(iter), trace);
        }
        if (!finite(rec)) throw UnlearnDivergence("non-finite loss at iteration " + std::to_string(iter), trace);
        trace.records.push_back(rec);
        if (auto reason = stop_condition(trace, cfg)) {
            trace.stop_reason = reason;
            break;
        }
    }

    gen.meta = TrainMeta{};
    gen.meta.seed = cfg.seed;
    gen.meta.epochs_run = trace.size();
    gen.meta.train_accuracy = d_r.empty() ? 0.0 : evaluate_accuracy(gen, d_r);
    refresh_fingerprint(gen);
    return result;
}

void write_trace_jsonl(const std::filesystem::path& path, const UnlearnTrace& trace) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& r = trace.records[i];
        nlohmann::json j{{"iter", i},
                         {"critic_loss", r.critic_loss},
                         {"generator_loss", r.generator_loss},
                         {"wasserstein", r.wasserstein},
                         {"gradient_penalty", r.gradient_penalty},
                         {"retained_loss", r.retained_loss}};
        if (i + 1 == trace.size() && trace.stop_reason) j["stop_reason"] = std::string(to_string(*trace.stop_reason));
        f << j.dump() << '\n';
    }
    if (!f) throw IoError("failed writing " + path.string());
}

UnlearnTrace read_trace_jsonl(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    UnlearnTrace t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            t.records.push_back({j.at("critic_loss").get<double>(), j.at("generator_loss").get<double>(),
                                 j.at("wasserstein").get<double>(), j.at("gradient_penalty").get<double>(),
                                 j.at("retained_loss").get<double>()});
            if (j.contains("stop_reason"))
                t.stop_reason = j["stop_reason"] == "distance_converged" ? StopReason::distance_converged
                                                                         : StopReason::max_iters;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad trace record: ") + e.what(), lineno);
        }
    }
    return t;
}

}  // namespace unlearn
