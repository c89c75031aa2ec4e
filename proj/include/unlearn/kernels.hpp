#pragma once

// Dense kernels used by every network in the library.
//
// Each kernel has a serial reference in `kernels::serial` and an OpenMP
// version in `kernels::parallel`. The parallel versions split work only
// across independent output elements and never across a reduction, so
// both produce bit-identical results. The unqualified entry points in
// `kernels` dispatch to the parallel versions.

#include <cstddef>
#include <span>

namespace unlearn::kernels {

/// Sizes of a fully connected layer applied to a batch.
struct AffineShape {
    std::size_t batch;
    std::size_t in;
    std::size_t out;
};

/// Sizes of a 3x3, stride-1, zero-padded ("same") convolution on CHW rows.
struct ConvShape {
    std::size_t batch;
    std::size_t in_ch;
    std::size_t out_ch;
    std::size_t height;
    std::size_t width;
};

/// Ordered four-lane dot product. Summation order is fixed, independent of threading.
double dot(const double* a, const double* b, std::size_t n) noexcept;

namespace serial {

// y[n][out] = b[out] + sum_i x[n][i] * w[out][i]
void affine(std::span<const double> x, std::span<const double> w, std::span<const double> b,
            std::span<double> y, AffineShape s);

// dx[n][in] = sum_o dy[n][o] * w[o][in]
void affine_input_grad(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       AffineShape s);

// dw[o][i] += sum_n dy[n][o] * x[n][i];  db[o] += sum_n dy[n][o]
void affine_param_grad(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                       std::span<double> db, AffineShape s);

// labels[n] = argmin_k |p_n - c_k|^2, dist[n] = that squared distance. Ties pick the lower k.
void nearest_centroid(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                      std::span<int> labels, std::span<double> dist);

// 3x3 same convolution; weights laid out [out_ch][in_ch][3][3].
void conv3x3(std::span<const double> x, std::span<const double> w, std::span<const double> b, std::span<double> y,
             ConvShape s);
void conv3x3_input_grad(std::span<const double> dy, std::span<const double> w, std::span<double> dx, ConvShape s);
void conv3x3_param_grad(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                        std::span<double> db, ConvShape s);

}  // namespace serial

namespace parallel {

void affine(std::span<const double> x, std::span<const double> w, std::span<const double> b,
            std::span<double> y, AffineShape s);
void affine_input_grad(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       AffineShape s);
void affine_param_grad(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                       std::span<double> db, AffineShape s);
void nearest_centroid(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                      std::span<int> labels, std::span<double> dist);

// 3x3 same convolution; weights laid out [out_ch][in_ch][3][3].
void conv3x3(std::span<const double> x, std::span<const double> w, std::span<const double> b, std::span<double> y,
             ConvShape s);
void conv3x3_input_grad(std::span<const double> dy, std::span<const double> w, std::span<double> dx, ConvShape s);
void conv3x3_param_grad(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                        std::span<double> db, ConvShape s);

}  // namespace parallel

using parallel::affine;
using parallel::conv3x3;
using parallel::conv3x3_input_grad;
using parallel::conv3x3_param_grad;
using parallel::affine_input_grad;
using parallel::affine_param_grad;
using parallel::nearest_centroid;

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads() noexcept;

}  // namespace unlearn::kernels
