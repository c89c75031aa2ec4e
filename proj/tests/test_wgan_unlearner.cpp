#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "oracle.hpp"
#include "unlearn/error.hpp"
#include "unlearn/loss.hpp"
#include "unlearn/metrics.hpp"
#include "unlearn/rng.hpp"
#include "unlearn/wgan.hpp"

using namespace unlearn;

namespace {

Matrix rows_of(std::initializer_list<std::vector<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t r = 0;
    for (const auto& row : rows) std::copy(row.begin(), row.end(), m.row(r++).begin());
    return m;
}

Matrix random_posteriors(std::size_t n, std::size_t c, Rng& rng) {
    Matrix z(n, c);
    for (double& v : z.data) v = 2.0 * standard_normal(rng);
    return softmax_rows(z);
}

std::vector<oracle::Vec> to_rows(const Matrix& m) {
    std::vector<oracle::Vec> out;
    for (std::size_t r = 0; r < m.rows; ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
    return out;
}

std::vector<double> perturbed(const Critic& critic, std::uint64_t seed) {
    auto p = critic.initial_parameters(seed);
    Rng rng(mix_seed(seed));
    for (double& v : p) v += 0.05 * standard_normal(rng);
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

}  // namespace

TEST_CASE("sort examples") {
    const PosteriorBatch in{rows_of({{0.45, 0.55}, {0.91, 0.09}})};
    const PosteriorBatch out = sort_posteriors(in);
    CHECK(out.rows.data == std::vector<double>{0.55, 0.45, 0.91, 0.09});
    const PosteriorBatch flat{rows_of({{0.25, 0.25, 0.25, 0.25}})};
    CHECK(sort_posteriors(flat).rows == flat.rows);
}

TEST_CASE("sort is a non-increasing permutation of each row") {
    Rng rng(mix_seed(3));
    const Matrix p = random_posteriors(2000, 7, rng);
    const SortedRows s = sort_rows_descending(p);
    for (std::size_t r = 0; r < p.rows; ++r) {
        auto in = p.row(r);
        auto out = s.values.row(r);
        CHECK(std::is_sorted(out.begin(), out.end(), std::greater<>()));
        CHECK(std::is_permutation(in.begin(), in.end(), out.begin()));
        for (std::size_t c = 0; c < p.cols; ++c) CHECK(out[c] == in[s.source[r * p.cols + c]]);
    }
}

TEST_CASE("sort keeps the original order of ties") {
    const SortedRows s = sort_rows_descending(rows_of({{0.2, 0.4, 0.4}}));
    CHECK(s.source == std::vector<std::uint32_t>{1, 2, 0});
}

TEST_CASE("interpolation") {
    const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0};
    CHECK(interpolate(a, b, 1.0) == a);
    CHECK(interpolate(a, b, 0.0) == b);
    CHECK(interpolate(a, b, 0.5) == std::vector<double>{0.5, 0.5});
    const std::vector<double> c{1.0, 0.0, 0.0};
    CHECK_THROWS_AS(interpolate(a, c, 0.5), DimensionError);
    const std::vector<double> eps{0.25, 1.0};
    const Matrix m = interpolate_rows(rows_of({{1, 0}, {0.6, 0.4}}), rows_of({{0, 1}, {0.5, 0.5}}), eps);
    CHECK(m.data == std::vector<double>{0.25, 0.75, 0.6, 0.4});
}

TEST_CASE("penalty of a unit-norm linear critic is zero") {
    // No hidden layers: D(x) = w.x + b.
    const Critic critic(CriticSpec{{}, 4});
    std::vector<double> p{0.5, -0.5, 0.5, 0.5, 3.0};
    Rng rng(mix_seed(1));
    const Matrix x = random_posteriors(32, 4, rng);
    CHECK(std::abs(gradient_penalty(critic, p, x, 10.0, 2)) < 1e-12);
}

TEST_CASE("penalty of a constant critic is lambda") {
    const Critic critic(CriticSpec{{8}, 3});
    std::vector<double> p(critic.parameter_count(), 0.0);
    Rng rng(mix_seed(2));
    const Matrix x = random_posteriors(10, 3, rng);
    CHECK(gradient_penalty(critic, p, x, 10.0, 2) == doctest::Approx(10.0));
    CHECK(gradient_penalty(critic, p, x, 2.5, 1) == doctest::Approx(2.5));
}

TEST_CASE("critic input gradient matches central differences") {
    const Critic critic(CriticSpec{{5, 4}, 3});
    CHECK(critic.parameter_count() <= 50);
    const auto p = perturbed(critic, 4);
    Rng rng(mix_seed(5));
    const Matrix x = random_posteriors(20, 3, rng);
    Critic::Tape tape;
    critic.forward(p, x, &tape);
    const Matrix g = critic.input_gradient(p, tape);
    const double h = 1e-6;
    for (std::size_t n = 0; n < x.rows; ++n) {
        oracle::Vec fd(3);
        for (std::size_t c = 0; c < 3; ++c) {
            Matrix up = x, down = x;
            up(n, c) += h;
            down(n, c) -= h;
            fd[c] = (critic.forward(p, up)[n] - critic.forward(p, down)[n]) / (2 * h);
        }
        const oracle::Vec an(g.row(n).begin(), g.row(n).end());
        CHECK(oracle::relative_error(oracle::pnorm(an, 2), oracle::pnorm(fd, 2)) < 1e-3);
    }
}

TEST_CASE("critic loss examples") {
    const Critic constant(CriticSpec{{4}, 2});
    std::vector<double> zero(constant.parameter_count(), 0.0);
    const Matrix s = rows_of({{0.7, 0.3}, {0.6, 0.4}});
    const std::vector<double> eps{0.3, 0.8};
    CHECK(critic_loss(constant, zero, s, s, eps, 10.0, 2).total == doctest::Approx(10.0));

    // D(x) = x_0 with lambda 0: loss = -0.9 + 0.5.
    const Critic linear(CriticSpec{{}, 2});
    const std::vector<double> first{1.0, 0.0, 0.0};
    const auto t = critic_loss(linear, first, rows_of({{0.9, 0.1}, {0.9, 0.1}}), rows_of({{0.5, 0.5}, {0.5, 0.5}}),
                               eps, 0.0, 2);
    CHECK(t.total == doctest::Approx(-0.4));
    CHECK(t.wasserstein() == doctest::Approx(0.4));
}

TEST_CASE("critic loss equals the straight-line formula") {
    Rng rng(mix_seed(6));
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t c = 2 + uniform_index(rng, 5), n = 1 + uniform_index(rng, 8);
        const std::vector<std::size_t> hidden{1 + uniform_index(rng, 6), 1 + uniform_index(rng, 6)};
        const Critic critic(CriticSpec{hidden, c});
        const auto p = perturbed(critic, 100 + trial);
        const Matrix real = sort_posteriors({random_posteriors(n, c, rng)}).rows;
        const Matrix fake = sort_posteriors({random_posteriors(n, c, rng)}).rows;
        std::vector<double> eps(n);
        for (double& e : eps) e = uniform01(rng);
        const double lambda = 10.0 * uniform01(rng);
        const int pn = 1 + static_cast<int>(uniform_index(rng, 2));
        auto ls = oracle::layers(c, hidden);
        ls.push_back({hidden.back(), 1});
        const double want = oracle::critic_loss(p, ls, to_rows(real), to_rows(fake), eps, lambda, pn);
        const double got = critic_loss(critic, p, real, fake, eps, lambda, pn).total;
        CAPTURE(trial);
        CHECK(oracle::relative_error(got, want) < 1e-6);
    }
}

TEST_CASE("critic loss parameter gradient matches finite differences") {
    const Critic critic(CriticSpec{{4, 4}, 3});
    REQUIRE(critic.parameter_count() <= 50);
    const auto p0 = perturbed(critic, 7);
    Rng rng(mix_seed(8));
    const Matrix real = sort_posteriors({random_posteriors(6, 3, rng)}).rows;
    const Matrix fake = sort_posteriors({random_posteriors(6, 3, rng)}).rows;
    std::vector<double> eps(6);
    for (double& e : eps) e = uniform01(rng);

    std::vector<double> g(p0.size(), 0.0);
    critic_loss(critic, p0, real, fake, eps, 10.0, 2, g);
    auto p = p0;
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = p0[i] + h;
        const double up = critic_loss(critic, p, real, fake, eps, 10.0, 2).total;
        p[i] = p0[i] - h;
        const double down = critic_loss(critic, p, real, fake, eps, 10.0, 2).total;
        p[i] = p0[i];
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - g[i]) / std::max(1e-6, std::abs(fd) + std::abs(g[i])));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("generator loss equals the straight-line formula") {
    Rng rng(mix_seed(9));
    const ModelSpec spec = mlp_spec(4, {6}, 3);
    const Critic critic(CriticSpec{{5}, 3});
    for (int trial = 0; trial < 100; ++trial) {
        TrainedModel gen = init_model(spec, 200 + trial);
        const auto cp = perturbed(critic, 300 + trial);
        const Dataset forget = random_labeled(5, 4, 3, rng);
        const Dataset retained = random_labeled(4, 4, 3, rng);
        const double alpha = uniform01(rng);
        const double got = generator_loss(critic, cp, gen, forget, retained, alpha).total;
        const double want = oracle::generator_loss(cp, {{3, 5}, {5, 1}}, gen.parameters, oracle::layers(4, {6, 3}),
                                                   to_rows(forget.features), to_rows(retained.features),
                                                   retained.labels, alpha);
        CAPTURE(trial);
        CHECK(oracle::relative_error(got, want) < 1e-6);
    }
}

TEST_CASE("generator loss at the alpha endpoints") {
    Rng rng(mix_seed(10));
    const TrainedModel gen = init_model(mlp_spec(4, {6}, 3), 1);
    const Critic critic(CriticSpec{{5}, 3});
    const auto cp = perturbed(critic, 2);
    const Dataset forget = random_labeled(5, 4, 3, rng);
    const Dataset retained = random_labeled(7, 4, 3, rng);

    const auto zero = generator_loss(critic, cp, gen, forget, retained, 0.0);
    CHECK(zero.total == cross_entropy(logits(gen, retained.features), retained.labels));

    const auto one = generator_loss(critic, cp, gen, forget, Dataset(4), 1.0);
    const auto scores = critic.forward(cp, sort_posteriors(posterior(gen, forget.features)).rows);
    double mean = 0.0;
    for (double s : scores) mean += s;
    CHECK(one.total == doctest::Approx(-mean / 5).epsilon(1e-12));
    CHECK(one.retained == 0.0);

    const auto mix = generator_loss(critic, cp, gen, forget, retained, 0.6);
    CHECK(mix.total == doctest::Approx(0.6 * mix.adversarial + 0.4 * mix.retained).epsilon(1e-12));
    CHECK_THROWS_AS(generator_loss(critic, cp, gen, forget, Dataset(4), 0.5), ConfigError);
}

TEST_CASE("generator loss gradient matches finite differences") {
    Rng rng(mix_seed(11));
    TrainedModel gen = init_model(mlp_spec(3, {4}, 3), 5);
    const Critic critic(CriticSpec{{5}, 3});
    const auto cp = perturbed(critic, 6);
    const Dataset forget = random_labeled(4, 3, 3, rng);
    const Dataset retained = random_labeled(4, 3, 3, rng);
    std::vector<double> g(gen.parameters.size(), 0.0);
    generator_loss(critic, cp, gen, forget, retained, 0.6, g);
    const auto p0 = gen.parameters;
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < p0.size(); ++i) {
        gen.parameters[i] = p0[i] + h;
        const double up = generator_loss(critic, cp, gen, forget, retained, 0.6).total;
        gen.parameters[i] = p0[i] - h;
        const double down = generator_loss(critic, cp, gen, forget, retained, 0.6).total;
        gen.parameters[i] = p0[i];
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - g[i]) / std::max(1e-6, std::abs(fd) + std::abs(g[i])));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("stopping rule") {
    UnlearnConfig cfg;
    cfg.max_iters = 50;
    cfg.stop_window = 5;
    cfg.stop_distance_eps = 0.05;
    UnlearnTrace t;
    for (int i = 0; i < 5; ++i) t.records.push_back({.wasserstein = 0.0});
    CHECK(should_stop(t, cfg));
    CHECK(stop_condition(t, cfg) == StopReason::distance_converged);

    UnlearnTrace high;
    for (int i = 0; i < 20; ++i) high.records.push_back({.wasserstein = 0.3});
    CHECK_FALSE(should_stop(high, cfg));

    UnlearnTrace full;
    for (int i = 0; i < 50; ++i) full.records.push_back({.wasserstein = 1.0});
    CHECK(stop_condition(full, cfg) == StopReason::max_iters);

    // The window average, not single values, decides.
    UnlearnTrace mixed;
    for (double w : {0.2, -0.2, 0.02, -0.02, 0.01}) mixed.records.push_back({.wasserstein = w});
    CHECK(should_stop(mixed, cfg));

    UnlearnTrace early;
    for (int i = 0; i < 4; ++i) early.records.push_back({.wasserstein = 0.0});
    CHECK_FALSE(should_stop(early, cfg));

    cfg.min_iters = 10;
    CHECK_FALSE(should_stop(t, cfg));
}

TEST_CASE("unlearn keeps M_init frozen and starts from an exact copy") {
    const Dataset all = generate_synthetic_clusters({3, 200, 6, 1.5, 4});
    auto [train, rest] = random_partition(all, 0.5, 5);
    const TrainedModel m_init = train_classifier(mlp_spec(6, {32}, 3), train, {30, 32, 1e-3, 0.0, 1, std::nullopt});
    const Fingerprint before = param_fingerprint(m_init);
    std::vector<std::size_t> f(60), r(train.size() - 60), nm(60);
    std::iota(f.begin(), f.end(), 0);
    std::iota(r.begin(), r.end(), 60);
    std::iota(nm.begin(), nm.end(), 0);
    const Dataset d_f = train.subset(f), d_r = train.subset(r), d_nm = rest.subset(nm);

    UnlearnConfig cfg;
    cfg.max_iters = 30;
    cfg.min_iters = 30;
    cfg.seed = 3;
    bool checked = false;
    const UnlearnedModel u = unlearn::unlearn(m_init, d_f, d_nm, d_r, cfg, [&](std::size_t it, const TrainedModel& g) {
        if (it == 0) {
            CHECK(posterior(g, all.features).rows.data == posterior(m_init, all.features).rows.data);
            checked = true;
        }
    });
    CHECK(checked);
    CHECK(param_fingerprint(m_init) == before);
    CHECK(m_init.fingerprint == before);
    CHECK(u.model.spec == m_init.spec);
    CHECK(u.model.fingerprint != before);
    CHECK(u.trace.size() == 30);
    for (const auto& rec : u.trace.records) {
        CHECK(std::isfinite(rec.critic_loss));
        CHECK(std::isfinite(rec.generator_loss));
    }

    const UnlearnedModel again = unlearn::unlearn(m_init, d_f, d_nm, d_r, cfg);
    CHECK(again.model.parameters == u.model.parameters);
}

TEST_CASE("unlearn input errors") {
    const TrainedModel m = init_model(mlp_spec(2, {4}, 2), 1);
    Dataset one(2);
    one.push_back({{0.1, 0.2}, 1}, 0);
    UnlearnConfig cfg;
    cfg.max_iters = 2;
    CHECK_THROWS_AS(unlearn::unlearn(m, Dataset(2), one, one, cfg), InputError);
    CHECK_THROWS_AS(unlearn::unlearn(m, one, Dataset(2), one, cfg), InputError);
    CHECK_THROWS_AS(unlearn::unlearn(m, one, one, Dataset(2), cfg), ConfigError);
    cfg.alpha = 1.0;
    CHECK_NOTHROW(unlearn::unlearn(m, one, one, Dataset(2), cfg));
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("divergence carries the trace") {
    const Dataset all = generate_synthetic_clusters({2, 40, 3, 1.0, 4});
    const TrainedModel m = init_model(mlp_spec(3, {4}, 2), 1);
    UnlearnConfig cfg;
    cfg.max_iters = 50;
    cfg.generator_lr = 1e300;
    cfg.critic_lr = 1e300;
    try {
        unlearn::unlearn(m, all, all, all, cfg);
        FAIL("expected divergence");
    } catch (const UnlearnDivergence& e) {
        CHECK(e.trace().size() < 50);
    }
}

TEST_CASE("trace JSON lines round trip") {
    UnlearnTrace t;
    t.records.push_back({1.5, -0.25, 0.125, 0.0625, 2.0});
    t.records.push_back({0.1, 0.2, 0.3, 0.4, 0.5});
    t.stop_reason = StopReason::distance_converged;
    const auto path = std::filesystem::temp_directory_path() / "unlearn_test_trace.jsonl";
    write_trace_jsonl(path, t);
    const UnlearnTrace back = read_trace_jsonl(path);
    REQUIRE(back.size() == 2);
    CHECK(back.records[0].critic_loss == 1.5);
    CHECK(back.records[1].retained_loss == 0.5);
    CHECK(back.stop_reason == StopReason::distance_converged);
}

TEST_CASE("unlearning brings forget-set confidence toward nonmembers") {
    const Dataset all = generate_synthetic_clusters({2, 900, 10, 3.0, 12});
    auto [pool, test] = random_partition(all, 0.35, 13);
    const DatasetSplit s = split_dataset(pool, test, {200, 200, 0.2, 0.5}, 14);
    const TrainedModel m = train_classifier(mlp_spec(10, {128, 128}, 2), s.d_t, {200, 32, 1e-3, 0.0, 1, std::nullopt});
    UnlearnConfig cfg;
    cfg.alpha = 0.8;
    cfg.min_iters = 150;
    cfg.generator_lr = 1e-3;
    cfg.critic_lr = 1e-3;
    cfg.retained_fraction = 0.05;
    cfg.seed = 2;
    const UnlearnedModel u = unlearn::unlearn(m, s.d_f, s.d_nonmember, s.d_r, cfg);
    const auto nm = max_confidence(posterior(m, s.d_nonmember.features).rows);
    const double before = ks_distance(max_confidence(posterior(m, s.d_f.features).rows), nm);
    const double after = ks_distance(max_confidence(posterior(u.model, s.d_f.features).rows), nm);
    CHECK(after < before);
}
