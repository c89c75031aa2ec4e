#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "unlearn/kernels.hpp"
#include "unlearn/rng.hpp"

using namespace unlearn;
namespace k = unlearn::kernels;

namespace {

std::vector<double> noise(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = standard_normal(rng);
    return v;
}

}  // namespace

TEST_CASE("affine kernels agree bit for bit") {
    Rng rng(mix_seed(1));
    for (k::AffineShape s : {k::AffineShape{1, 1, 1}, k::AffineShape{7, 13, 5}, k::AffineShape{130, 257, 64}}) {
        const auto x = noise(s.batch * s.in, rng), w = noise(s.out * s.in, rng), b = noise(s.out, rng);
        const auto dy = noise(s.batch * s.out, rng);
        std::vector<double> y1(s.batch * s.out), y2(y1.size());
        k::serial::affine(x, w, b, y1, s);
        k::parallel::affine(x, w, b, y2, s);
        CHECK(y1 == y2);

        std::vector<double> dx1(s.batch * s.in), dx2(dx1.size());
        k::serial::affine_input_grad(dy, w, dx1, s);
        k::parallel::affine_input_grad(dy, w, dx2, s);
        CHECK(dx1 == dx2);

        std::vector<double> dw1(w.size(), 0.5), dw2(w.size(), 0.5), db1(s.out, 0.25), db2(s.out, 0.25);
        k::serial::affine_param_grad(x, dy, dw1, db1, s);
        k::parallel::affine_param_grad(x, dy, dw2, db2, s);
        CHECK(dw1 == dw2);
        CHECK(db1 == db2);
    }
}

TEST_CASE("affine matches the definition") {
    const std::vector<double> x{1, 2}, w{1, 0, 0, 1, 1, 1}, b{0.5, -1, 0};
    std::vector<double> y(3);
    k::serial::affine(x, w, b, y, {1, 2, 3});
    CHECK(y == std::vector<double>{1.5, 1, 3});
}

TEST_CASE("nearest centroid agrees") {
    Rng rng(mix_seed(2));
    const std::size_t n = 1000, dim = 9, kk = 7;
    const auto p = noise(n * dim, rng), c = noise(kk * dim, rng);
    std::vector<int> l1(n), l2(n);
    std::vector<double> d1(n), d2(n);
    k::serial::nearest_centroid(p, c, dim, l1, d1);
    k::parallel::nearest_centroid(p, c, dim, l2, d2);
    CHECK(l1 == l2);
    CHECK(d1 == d2);
}

TEST_CASE("conv kernels agree") {
    Rng rng(mix_seed(3));
    const k::ConvShape s{5, 3, 4, 8, 7};
    const std::size_t in = s.batch * s.in_ch * s.height * s.width, out = s.batch * s.out_ch * s.height * s.width;
    const auto x = noise(in, rng), w = noise(s.out_ch * s.in_ch * 9, rng), b = noise(s.out_ch, rng);
    const auto dy = noise(out, rng);
    std::vector<double> y1(out), y2(out), dx1(in), dx2(in);
    k::serial::conv3x3(x, w, b, y1, s);
    k::parallel::conv3x3(x, w, b, y2, s);
    CHECK(y1 == y2);
    k::serial::conv3x3_input_grad(dy, w, dx1, s);
    k::parallel::conv3x3_input_grad(dy, w, dx2, s);
    CHECK(dx1 == dx2);
    std::vector<double> dw1(w.size(), 0.0), dw2(w.size(), 0.0), db1(s.out_ch, 0.0), db2(s.out_ch, 0.0);
    k::serial::conv3x3_param_grad(x, dy, dw1, db1, s);
    k::parallel::conv3x3_param_grad(x, dy, dw2, db2, s);
    CHECK(dw1 == dw2);
    CHECK(db1 == db2);
}

TEST_CASE("threads") {
    CHECK(k::max_threads() >= 1);
}
