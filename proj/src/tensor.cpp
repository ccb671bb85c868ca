#include "spectral/tensor.hpp"

#include <cmath>
#include <cstdlib>

#include "spectral/errors.hpp"

namespace spectral {

FeatureMap::FeatureMap(int c, int m, int n, double fill) : channels(c), rows(m), cols(n) {
    if (c <= 0 || m <= 0 || n <= 0) throw ShapeMismatch("FeatureMap dimensions must be positive");
    data.assign(static_cast<std::size_t>(c) * m * n, fill);
}

SpectrumMap::SpectrumMap(int c, int m, int n, cplx fill) : channels(c), rows(m), cols(n) {
    if (c <= 0 || m <= 0 || n <= 0) throw ShapeMismatch("SpectrumMap dimensions must be positive");
    data.assign(static_cast<std::size_t>(c) * m * n, fill);
}

std::vector<cplx> unit_roots(int n, int sign) {
    if (n <= 0) throw ShapeMismatch("unit_roots: n must be positive");
    std::vector<cplx> w(static_cast<std::size_t>(n));
    w[0] = {1.0, 0.0};
    for (int k = 1; 2 * k < n; ++k) {
        double angle = sign * kTwoPi * k / n;
        w[k] = {std::cos(angle), std::sin(angle)};
        w[n - k] = std::conj(w[k]);
    }
    if (n % 2 == 0 && n > 1) w[n / 2] = {-1.0, 0.0};
    return w;
}

SpectrumMap dft2(const FeatureMap& f) {
    const int M = f.rows, N = f.cols, C = f.channels;
    const auto wm = unit_roots(M, -1);
    const auto wn = unit_roots(N, -1);
    SpectrumMap g(C, M, N);
    std::vector<cplx> tmp(static_cast<std::size_t>(M) * N);
    for (int c = 0; c < C; ++c) {
        // pass 1: transform over rows, tmp[u][n] = sum_m f[m][n] w_M^(u m)
        for (int u = 0; u < M; ++u) {
            for (int n = 0; n < N; ++n) {
                cplx acc = 0.0;
                for (int m = 0; m < M; ++m) acc += f.at(c, m, n) * wm[static_cast<std::size_t>(u) * m % M];
                tmp[static_cast<std::size_t>(u) * N + n] = acc;
            }
        }
        // pass 2: transform over cols
        for (int u = 0; u < M; ++u) {
            for (int v = 0; v < N; ++v) {
                cplx acc = 0.0;
                for (int n = 0; n < N; ++n)
                    acc += tmp[static_cast<std::size_t>(u) * N + n] * wn[static_cast<std::size_t>(v) * n % N];
                g.at(c, u, v) = acc;
            }
        }
    }
    return g;
}

FeatureMap idft2(const SpectrumMap& g) {
    const int M = g.rows, N = g.cols, C = g.channels;
    const auto wm = unit_roots(M, +1);
    const auto wn = unit_roots(N, +1);
    double scale = 0.0;
    for (const cplx& z : g.data) scale = std::max(scale, std::abs(z));
    const double tol = 1e-9 * scale;
    FeatureMap f(C, M, N);
    std::vector<cplx> tmp(static_cast<std::size_t>(M) * N);
    const double norm = 1.0 / (static_cast<double>(M) * N);
    for (int c = 0; c < C; ++c) {
        for (int m = 0; m < M; ++m) {
            for (int v = 0; v < N; ++v) {
                cplx acc = 0.0;
                for (int u = 0; u < M; ++u) acc += g.at(c, u, v) * wm[static_cast<std::size_t>(m) * u % M];
                tmp[static_cast<std::size_t>(m) * N + v] = acc;
            }
        }
        for (int m = 0; m < M; ++m) {
            for (int n = 0; n < N; ++n) {
                cplx acc = 0.0;
                for (int v = 0; v < N; ++v)
                    acc += tmp[static_cast<std::size_t>(m) * N + v] * wn[static_cast<std::size_t>(n) * v % N];
                acc *= norm;
                if (std::abs(acc.imag()) > tol)
                    throw SymmetryViolation("idft2: imaginary residue " + std::to_string(acc.imag()) +
                                            " exceeds tolerance; spectrum is not conjugate symmetric");
                f.at(c, m, n) = acc.real();
            }
        }
    }
    return f;
}

cplx dirichlet_sum(double theta, int n) {
    if (n <= 0) throw ShapeMismatch("dirichlet_sum: n must be positive");
    const double half = 0.5 * theta;
    const double s = std::sin(half);
    if (std::abs(s) < 1e-12) return {static_cast<double>(n), 0.0};
    const double ratio = std::sin(n * half) / s;
    const double phase = (n - 1) * half;
    return ratio * cplx{std::cos(phase), std::sin(phase)};
}

namespace {

template <typename Map>
Map shift_impl(const Map& in) {
    Map out = in;
    const int M = in.rows, N = in.cols;
    const int dm = M / 2, dn = N / 2;
    for (int c = 0; c < in.channels; ++c)
        for (int u = 0; u < M; ++u)
            for (int v = 0; v < N; ++v) out.at(c, (u + dm) % M, (v + dn) % N) = in.at(c, u, v);
    return out;
}

}  // namespace

SpectrumMap fftshift(const SpectrumMap& g) { return shift_impl(g); }
FeatureMap fftshift(const FeatureMap& f) { return shift_impl(f); }

double cosine_similarity_norm_maps(const SpectrumMap& a, const SpectrumMap& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("cosine_similarity_norm_maps: shapes differ");
    double total = 0.0;
    const std::size_t per = static_cast<std::size_t>(a.rows) * a.cols;
    for (int c = 0; c < a.channels; ++c) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t i = 0; i < per; ++i) {
            const double xa = std::abs(a.data[c * per + i]);
            const double xb = std::abs(b.data[c * per + i]);
            dot += xa * xb;
            na += xa * xa;
            nb += xb * xb;
        }
        if (na == 0.0 || nb == 0.0)
            throw ZeroVector("cosine_similarity_norm_maps: zero magnitude map in channel " + std::to_string(c));
        total += dot / (std::sqrt(na) * std::sqrt(nb));
    }
    return total / a.channels;
}

}  // namespace spectral
