#include "unlearn/kernels.hpp"

#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace unlearn::kernels {

namespace {

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 15;

inline void affine_row(const double* xr, const double* w, const double* b, double* yr, std::size_t in,
                       std::size_t out) noexcept {
    for (std::size_t o = 0; o < out; ++o) yr[o] = b[o] + dot(xr, w + o * in, in);
}

inline void input_grad_row(const double* dyr, const double* w, double* dxr, std::size_t in,
                           std::size_t out) noexcept {
    for (std::size_t i = 0; i < in; ++i) dxr[i] = 0.0;
    for (std::size_t o = 0; o < out; ++o) {
        const double g = dyr[o];
        if (g == 0.0) continue;
        const double* wr = w + o * in;
        for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wr[i];
    }
}

inline void param_grad_unit(const double* x, const double* dy, double* dw, double* db, std::size_t o,
                            AffineShape s) noexcept {
    double* dwr = dw + o * s.in;
    double bsum = 0.0;
    for (std::size_t n = 0; n < s.batch; ++n) {
        const double g = dy[n * s.out + o];
        bsum += g;
        if (g == 0.0) continue;
        const double* xr = x + n * s.in;
        for (std::size_t i = 0; i < s.in; ++i) dwr[i] += g * xr[i];
    }
    db[o] += bsum;
}

inline void nearest_row(const double* p, const double* c, std::size_t k, std::size_t dim, int& label,
                        double& dist) noexcept {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t j = 0; j < k; ++j) {
        const double* cj = c + j * dim;
        double d = 0.0;
        for (std::size_t t = 0; t < dim; ++t) {
            const double diff = p[t] - cj[t];
            d += diff * diff;
        }
        if (d < best) {
            best = d;
            arg = static_cast<int>(j);
        }
    }
    label = arg;
    dist = best;
}


// One image of a 3x3 same convolution.
inline void conv_image(const double* x, const double* w, const double* b, double* y, const ConvShape& s) noexcept {
    const std::size_t H = s.height, W = s.width, hw = H * W;
    for (std::size_t co = 0; co < s.out_ch; ++co) {
        double* yc = y + co * hw;
        for (std::size_t p = 0; p < hw; ++p) yc[p] = b[co];
        for (std::size_t ci = 0; ci < s.in_ch; ++ci) {
            const double* xc = x + ci * hw;
            const double* k = w + (co * s.in_ch + ci) * 9;
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t ww = 0; ww < W; ++ww) {
                    double acc = 0.0;
                    for (std::size_t kh = 0; kh < 3; ++kh) {
                        const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h + kh) - 1;
                        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
                        for (std::size_t kw = 0; kw < 3; ++kw) {
                            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ww + kw) - 1;
                            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
                            acc += k[kh * 3 + kw] * xc[static_cast<std::size_t>(ih) * W + static_cast<std::size_t>(iw)];
                        }
                    }
                    yc[h * W + ww] += acc;
                }
        }
    }
}

inline void conv_image_input_grad(const double* dy, const double* w, double* dx, const ConvShape& s) noexcept {
    const std::size_t H = s.height, W = s.width, hw = H * W;
    for (std::size_t p = 0; p < s.in_ch * hw; ++p) dx[p] = 0.0;
    for (std::size_t co = 0; co < s.out_ch; ++co) {
        const double* dyc = dy + co * hw;
        for (std::size_t ci = 0; ci < s.in_ch; ++ci) {
            double* dxc = dx + ci * hw;
            const double* k = w + (co * s.in_ch + ci) * 9;
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t ww = 0; ww < W; ++ww) {
                    const double g = dyc[h * W + ww];
                    if (g == 0.0) continue;
                    for (std::size_t kh = 0; kh < 3; ++kh) {
                        const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h + kh) - 1;
                        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
                        for (std::size_t kw = 0; kw < 3; ++kw) {
                            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ww + kw) - 1;
                            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
                            dxc[static_cast<std::size_t>(ih) * W + static_cast<std::size_t>(iw)] += g * k[kh * 3 + kw];
                        }
                    }
                }
        }
    }
}

// Gradient of one output channel's kernels and bias, summed over the batch.
inline void conv_channel_param_grad(const double* x, const double* dy, double* dw, double* db, std::size_t co,
                                    const ConvShape& s) noexcept {
    const std::size_t H = s.height, W = s.width, hw = H * W;
    double bsum = 0.0;
    for (std::size_t n = 0; n < s.batch; ++n) {
        const double* dyc = dy + (n * s.out_ch + co) * hw;
        for (std::size_t p = 0; p < hw; ++p) bsum += dyc[p];
        for (std::size_t ci = 0; ci < s.in_ch; ++ci) {
            const double* xc = x + (n * s.in_ch + ci) * hw;
            double* k = dw + (co * s.in_ch + ci) * 9;
            for (std::size_t kh = 0; kh < 3; ++kh)
                for (std::size_t kw = 0; kw < 3; ++kw) {
                    double acc = 0.0;
                    for (std::size_t h = 0; h < H; ++h) {
                        const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h + kh) - 1;
                        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
                        for (std::size_t ww = 0; ww < W; ++ww) {
                            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ww + kw) - 1;
                            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
                            acc += dyc[h * W + ww] *
                                   xc[static_cast<std::size_t>(ih) * W + static_cast<std::size_t>(iw)];
                        }
                    }
                    k[kh * 3 + kw] += acc;
                }
        }
    }
    db[co] += bsum;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) noexcept {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace serial {

void affine(std::span<const double> x, std::span<const double> w, std::span<const double> b,
            std::span<double> y, AffineShape s) {
    for (std::size_t n = 0; n < s.batch; ++n)
        affine_row(x.data() + n * s.in, w.data(), b.data(), y.data() + n * s.out, s.in, s.out);
}

void affine_input_grad(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       AffineShape s) {
    for (std::size_t n = 0; n < s.batch; ++n)
        input_grad_row(dy.data() + n * s.out, w.data(), dx.data() + n * s.in, s.in, s.out);
}

void affine_param_grad(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                       std::span<double> db, AffineShape s) {
    for (std::size_t o = 0; o < s.out; ++o) param_grad_unit(x.data(), dy.data(), dw.data(), db.data(), o, s);
}

void nearest_centroid(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                      std::span<int> labels, std::span<double> dist) {
    const std::size_t k = centroids.size() / dim;
    for (std::size_t n = 0; n < labels.size(); ++n)
        nearest_row(points.data() + n * dim, centroids.data(), k, dim, labels[n], dist[n]);
}

void conv3x3(std::span<const double> x, std::span<const double> w, std::span<const double> b, std::span<double> y,
             ConvShape s) {
    const std::size_t in_sz = s.in_ch * s.height * s.width, out_sz = s.out_ch * s.height * s.width;
    for (std::size_t n = 0; n < s.batch; ++n)
        conv_image(x.data() + n * in_sz, w.data(), b.data(), y.data() + n * out_sz, s);
}

void conv3x3_input_grad(std::span<const double> dy, std::span<const double> w, std::span<double> dx, ConvShape s) {
    const std::size_t in_sz = s.in_ch * s.height * s.width, out_sz = s.out_ch * s.height * s.width;
    for (std::size_t n = 0; n < s.batch; ++n)
        conv_image_input_grad(dy.data() + n * out_sz, w.data(), dx.data() + n * in_sz, s);
}

void conv3x3_param_grad(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                        std::span<double> db, ConvShape s) {
    for (std::size_t co = 0; co < s.out_ch; ++co) conv_channel_param_grad(x.data(), dy.data(), dw.data(), db.data(), co, s);
}

}  // namespace serial

namespace parallel {

void affine(std::span<const double> x, std::span<const double> w, std::span<const double> b,
            std::span<double> y, AffineShape s) {
    const auto rows = static_cast<std::ptrdiff_t>(s.batch);
    const bool big = s.batch * s.in * s.out >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t n = 0; n < rows; ++n) {
        const auto r = static_cast<std::size_t>(n);
        affine_row(x.data() + r * s.in, w.data(), b.data(), y.data() + r * s.out, s.in, s.out);
    }
}

void affine_input_grad(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       AffineShape s) {
    const auto rows = static_cast<std::ptrdiff_t>(s.batch);
    const bool big = s.batch * s.in * s.out >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t n = 0; n < rows; ++n) {
        const auto r = static_cast<std::size_t>(n);
        input_grad_row(dy.data() + r * s.out, w.data(), dx.data() + r * s.in, s.in, s.out);
    }
}

void affine_param_grad(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                       std::span<double> db, AffineShape s) {
    const auto units = static_cast<std::ptrdiff_t>(s.out);
    const bool big = s.batch * s.in * s.out >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t o = 0; o < units; ++o)
        param_grad_unit(x.data(), dy.data(), dw.data(), db.data(), static_cast<std::size_t>(o), s);
}

void nearest_centroid(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                      std::span<int> labels, std::span<double> dist) {
    const std::size_t k = centroids.size() / dim;
    const auto rows = static_cast<std::ptrdiff_t>(labels.size());
    const bool big = labels.size() * k * dim >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t n = 0; n < rows; ++n) {
        const auto r = static_cast<std::size_t>(n);
        nearest_row(points.data() + r * dim, centroids.data(), k, dim, labels[r], dist[r]);
    }
}

void conv3x3(std::span<const double> x, std::span<const double> w, std::span<const double> b, std::span<double> y,
             ConvShape s) {
    const std::size_t in_sz = s.in_ch * s.height * s.width, out_sz = s.out_ch * s.height * s.width;
    const auto rows = static_cast<std::ptrdiff_t>(s.batch);
    const bool big = s.batch * in_sz * s.out_ch * 9 >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t n = 0; n < rows; ++n) {
        const auto r = static_cast<std::size_t>(n);
        conv_image(x.data() + r * in_sz, w.data(), b.data(), y.data() + r * out_sz, s);
    }
}

void conv3x3_input_grad(std::span<const double> dy, std::span<const double> w, std::span<double> dx, ConvShape s) {
    const std::size_t in_sz = s.in_ch * s.height * s.width, out_sz = s.out_ch * s.height * s.width;
    const auto rows = static_cast<std::ptrdiff_t>(s.batch);
    const bool big = s.batch * in_sz * s.out_ch * 9 >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t n = 0; n < rows; ++n) {
        const auto r = static_cast<std::size_t>(n);
        conv_image_input_grad(dy.data() + r * out_sz, w.data(), dx.data() + r * in_sz, s);
    }
}

void conv3x3_param_grad(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                        std::span<double> db, ConvShape s) {
    const auto units = static_cast<std::ptrdiff_t>(s.out_ch);
    const bool big = s.batch * s.in_ch * s.height * s.width * s.out_ch * 9 >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t co = 0; co < units; ++co)
        conv_channel_param_grad(x.data(), dy.data(), dw.data(), db.data(), static_cast<std::size_t>(co), s);
}

}  // namespace parallel

}  // namespace unlearn::kernels
