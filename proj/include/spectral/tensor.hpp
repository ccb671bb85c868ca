#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace spectral {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Dense per-channel image stack, row-major (channel, row, col).
struct FeatureMap {
    int channels = 0;
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int c, int m, int n, double fill = 0.0);

    double& at(int c, int m, int n) { return data[(static_cast<std::size_t>(c) * rows + m) * cols + n]; }
    double at(int c, int m, int n) const { return data[(static_cast<std::size_t>(c) * rows + m) * cols + n]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const FeatureMap& o) const {
        return channels == o.channels && rows == o.rows && cols == o.cols;
    }
};

// Complex spectrum with the same layout; frequency indices (u, v) take the
// place of (row, col).
struct SpectrumMap {
    int channels = 0;
    int rows = 0;
    int cols = 0;
    std::vector<cplx> data;

    SpectrumMap() = default;
    SpectrumMap(int c, int m, int n, cplx fill = {});

    cplx& at(int c, int u, int v) { return data[(static_cast<std::size_t>(c) * rows + u) * cols + v]; }
    cplx at(int c, int u, int v) const { return data[(static_cast<std::size_t>(c) * rows + u) * cols + v]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const SpectrumMap& o) const {
        return channels == o.channels && rows == o.rows && cols == o.cols;
    }
};

// n-th roots of unity w[k] = exp(sign * i * 2*pi*k / n). The table is built
// mirrored (w[n-k] is the bitwise conjugate of w[k], w[0] = 1, w[n/2] = -1
// snapped exactly) so that transforms of real inputs satisfy conjugate
// symmetry as a numeric identity rather than within a tolerance.
std::vector<cplx> unit_roots(int n, int sign);

// Unnormalized forward transform, negative exponent, computed per channel by
// separable direct summation. O(M*N*(M+N)) per channel.
SpectrumMap dft2(const FeatureMap& f);

// Inverse transform with the 1/(MN) factor. The input must be conjugate
// symmetric (come from a real image); the imaginary residue is checked
// against 1e-9 times the spectrum magnitude scale and then dropped.
FeatureMap idft2(const SpectrumMap& g);

// sum_{k=0}^{n-1} exp(i*k*theta) in closed form, with the limit branch at
// theta = 0 (mod 2*pi) guarded by |sin(theta/2)| < 1e-12.
cplx dirichlet_sum(double theta, int n);

// Rotate so the fundamental lands at (floor(M/2), floor(N/2)).
SpectrumMap fftshift(const SpectrumMap& g);
FeatureMap fftshift(const FeatureMap& f);

// Per-channel cosine similarity between elementwise magnitude maps,
// averaged over channels. Throws ZeroVector if either magnitude map of some
// channel has zero length.
double cosine_similarity_norm_maps(const SpectrumMap& a, const SpectrumMap& b);

}  // namespace spectral
