#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "unlearn/error.hpp"
#include "unlearn/retrain.hpp"
#include "unlearn/rng.hpp"

using namespace unlearn;

namespace {

DatasetSplit small_split() {
    const Dataset all = generate_synthetic_clusters({3, 200, 6, 2.0, 41});
    auto [pool, test] = random_partition(all, 0.4, 42);
    return split_dataset(pool, test, {40, 40, 0.5, 0.5}, 43);
}

}  // namespace

TEST_CASE("retrain reads only the retained set") {
    const DatasetSplit s = small_split();
    const ModelSpec spec = mlp_spec(6, {16}, 3);
    const RetrainResult r = retrain(spec, s, {20, 32, 1e-3, 0.0, 5, std::nullopt});
    CHECK(r.data_access_log == std::set<Role>{Role::d_r});
    CHECK(r.model.spec == spec);
    CHECK(r.wall_time_seconds > 0.0);
    CHECK(r.model.meta.train_accuracy == doctest::Approx(evaluate_accuracy(r.model, s.d_r)));
}

TEST_CASE("retrain starts from fresh weights") {
    const DatasetSplit s = small_split();
    const ModelSpec spec = mlp_spec(6, {16}, 3);
    const TrainConfig tc{20, 32, 1e-3, 0.0, 5, std::nullopt};
    const TrainedModel m_init = train_classifier(spec, s.d_t, tc);
    const RetrainResult r = retrain(spec, s, tc);
    CHECK(r.model.fingerprint != m_init.fingerprint);
    CHECK(init_model(spec, tc.seed).fingerprint != init_model(spec, derive_seed(tc.seed, "retrain")).fingerprint);
    CHECK(retrain(spec, s, tc).model.fingerprint == r.model.fingerprint);
}

TEST_CASE("tracked split logs reads") {
    const DatasetSplit s = small_split();
    TrackedSplit t(s);
    CHECK(t.access_log().empty());
    CHECK(&t.read(Role::d_f) == &s.d_f);
    t.read(Role::d_r);
    CHECK(t.access_log() == std::set<Role>{Role::d_f, Role::d_r});
}

TEST_CASE("compare_time") {
    CHECK(compare_time(10.0, 33.0) == doctest::Approx(3.3));
    CHECK(compare_time(4.0, 4.0) == 1.0);
    CHECK(compare_time(1.0, 22.6) == doctest::Approx(22.6));
    CHECK_THROWS_AS(compare_time(0.0, 5.0), InputError);
    CHECK_THROWS_AS(compare_time(-1.0, 5.0), InputError);
    CHECK_THROWS_AS(compare_time(5.0, 0.0), InputError);
}
