#include "spectral/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spectral/errors.hpp"
#include "spectral/rng.hpp"

namespace spectral {

cplx compute_R(int u, int v, int rows, int cols, int kernel) {
    if (kernel > std::min(rows, cols)) throw KernelTooLarge("compute_R needs K <= min(M, N)");
    const int ur = ((u % rows) + rows) % rows;
    const int vr = ((v % cols) + cols) % cols;
    return dirichlet_sum(kTwoPi * ur / rows, kernel) * dirichlet_sum(kTwoPi * vr / cols, kernel);
}

ComplexGaussianParams transfer_entry_params(double mean, double stddev, int u, int v, int rows, int cols,
                                            int kernel) {
    ComplexGaussianParams p;
    p.mean = mean * compute_R(u, v, rows, cols, kernel);
    p.variance = static_cast<double>(kernel) * kernel * stddev * stddev;
    p.pseudo = stddev * stddev * compute_R(2 * u, 2 * v, rows, cols, kernel);
    return p;
}

ComplexGaussianParams estimate_complex_gaussian(const std::vector<cplx>& samples) {
    if (samples.size() < 2)
        throw InsufficientSamples("moment estimation needs at least two samples, got " +
                                  std::to_string(samples.size()));
    const double inv = 1.0 / static_cast<double>(samples.size());
    cplx mean = 0.0;
    for (const cplx& z : samples) mean += z;
    mean *= inv;
    ComplexGaussianParams p;
    p.mean = mean;
    for (const cplx& z : samples) {
        const cplx d = z - mean;
        p.variance += std::norm(d);
        p.pseudo += d * d;
    }
    p.variance *= inv;
    p.pseudo *= inv;
    return p;
}

std::vector<cplx> sample_transfer_entries(double mean, double stddev, int u, int v, int rows, int cols,
                                          int kernel, int draws, std::uint64_t seed) {
    if (kernel > std::min(rows, cols)) throw KernelTooLarge("sample_transfer_entries needs K <= min(M, N)");
    const auto wm = unit_roots(rows, +1);
    const auto wn = unit_roots(cols, +1);
    const int ur = ((u % rows) + rows) % rows;
    const int vr = ((v % cols) + cols) % cols;
    SplitMix64 gen(seed);
    std::vector<cplx> out(static_cast<std::size_t>(draws));
    for (int i = 0; i < draws; ++i) {
        cplx acc = 0.0;
        for (int t = 0; t < kernel; ++t) {
            const cplx pt = wm[static_cast<std::size_t>(ur) * t % rows];
            for (int s = 0; s < kernel; ++s)
                acc += gen.next_gaussian(mean, stddev) * pt * wn[static_cast<std::size_t>(vr) * s % cols];
        }
        out[i] = acc;
    }
    return out;
}

std::vector<double> som_log_curve(const std::vector<InitStat>& layers, int u, int v, int rows, int cols,
                                  int kernel) {
    if (layers.empty()) throw InsufficientSamples("som_log_curve needs at least one layer");
    const double r2 = std::norm(compute_R(u, v, rows, cols, kernel));
    std::vector<double> curve;
    curve.reserve(layers.size());
    double acc = 0.0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const double term = layers[l].mean * layers[l].mean * r2 +
                            static_cast<double>(kernel) * kernel * layers[l].stddev * layers[l].stddev;
        if (term == 0.0)
            throw DegenerateLayer("layer " + std::to_string(l) + " has zero moment at this frequency");
        acc += std::log(term);
        curve.push_back(acc);
    }
    return curve;
}

double som_multichannel(int input_channels, const std::vector<LayerWidthStat>& layers, int u, int v,
                        int rows, int cols, int kernel) {
    if (layers.empty()) throw InsufficientSamples("som_multichannel needs at least one layer");
    if (input_channels < 1) throw ShapeMismatch("input channel count must be positive");
    const cplx R = compute_R(u, v, rows, cols, kernel);
    const double r2 = std::norm(R);
    const std::size_t L = layers.size();
    std::vector<double> phi(L);
    for (std::size_t l = 0; l < L; ++l) {
        phi[l] = layers[l].mean * layers[l].mean * r2 +
                 static_cast<double>(kernel) * kernel * layers[l].stddev * layers[l].stddev;
        if (phi[l] == 0.0) throw DegenerateLayer("layer " + std::to_string(l) + " has zero moment");
    }
    // width entering layer l (math index l runs 1..L, c[l-1] feeds layer l)
    auto width_before = [&](std::size_t l) {
        return l == 0 ? input_channels : layers[l - 1].channels;
    };
    double main_term = 1.0 / layers[L - 1].channels;
    for (std::size_t l = 0; l < L; ++l) main_term *= layers[l].channels * phi[l];
    double total = main_term;
    for (std::size_t l = 1; l < L; ++l) {
        // |m_l| = (1/C_l) prod_{k<=l} C_k |mu_k R|
        double ml = 1.0;
        for (std::size_t k = 0; k <= l; ++k) ml *= layers[k].channels * std::abs(layers[k].mean) * std::abs(R);
        ml /= layers[l].channels;
        const int cprev = layers[l - 1].channels;
        double corr = (static_cast<double>(cprev) - 1.0) / cprev * ml * ml;
        for (std::size_t j = l + 1; j < L; ++j) corr *= width_before(j) * phi[j];
        total += corr;
    }
    return total;
}

double som_monte_carlo(int input_channels, const std::vector<LayerWidthStat>& layers, int u, int v,
                       int rows, int cols, int kernel, int draws, std::uint64_t seed) {
    if (layers.empty() || draws < 1) throw InsufficientSamples("som_monte_carlo needs layers and draws");
    const auto wm = unit_roots(rows, +1);
    const auto wn = unit_roots(cols, +1);
    const int ur = ((u % rows) + rows) % rows;
    const int vr = ((v % cols) + cols) % cols;
    std::vector<cplx> phases(static_cast<std::size_t>(kernel) * kernel);
    for (int t = 0; t < kernel; ++t)
        for (int s = 0; s < kernel; ++s)
            phases[static_cast<std::size_t>(t) * kernel + s] =
                wm[static_cast<std::size_t>(ur) * t % rows] * wn[static_cast<std::size_t>(vr) * s % cols];
    SplitMix64 gen(seed);
    double acc = 0.0;
    std::size_t count = 0;
    std::vector<cplx> prod, next, tmat;
    for (int i = 0; i < draws; ++i) {
        int cin = input_channels;
        prod.assign(static_cast<std::size_t>(cin) * cin, cplx{});
        for (int c = 0; c < cin; ++c) prod[static_cast<std::size_t>(c) * cin + c] = 1.0;
        int pc = cin;  // columns of the running product
        for (const auto& layer : layers) {
            const int cout = layer.channels;
            tmat.assign(static_cast<std::size_t>(cout) * cin, cplx{});
            for (int d = 0; d < cout; ++d)
                for (int c = 0; c < cin; ++c) {
                    cplx e = 0.0;
                    for (std::size_t k = 0; k < phases.size(); ++k)
                        e += gen.next_gaussian(layer.mean, layer.stddev) * phases[k];
                    tmat[static_cast<std::size_t>(d) * cin + c] = e;
                }
            next.assign(static_cast<std::size_t>(cout) * pc, cplx{});
            for (int d = 0; d < cout; ++d)
                for (int c = 0; c < pc; ++c) {
                    cplx s = 0.0;
                    for (int e = 0; e < cin; ++e)
                        s += tmat[static_cast<std::size_t>(d) * cin + e] *
                             prod[static_cast<std::size_t>(e) * pc + c];
                    next[static_cast<std::size_t>(d) * pc + c] = s;
                }
            prod.swap(next);
            cin = cout;
        }
        for (const cplx& z : prod) acc += std::norm(z);
        count += prod.size();
    }
    return acc / static_cast<double>(count);
}

FeatureMap som_empirical(const std::vector<SpectrumMap>& samples) {
    if (samples.empty()) throw InsufficientSamples("som_empirical needs at least one spectrum");
    const int M = samples[0].rows, N = samples[0].cols;
    FeatureMap out(1, M, N);
    std::size_t count = 0;
    for (const auto& s : samples) {
        if (s.rows != M || s.cols != N) throw ShapeMismatch("som_empirical: spectra sizes differ");
        for (int c = 0; c < s.channels; ++c)
            for (int u = 0; u < M; ++u)
                for (int v = 0; v < N; ++v) out.at(0, u, v) += std::norm(s.at(c, u, v));
        count += s.channels;
    }
    for (auto& x : out.data) x /= static_cast<double>(count);
    return out;
}

FeatureMap zero_pad_expected_signal(double amplitude, int in_rows, int in_cols, int out_rows,
                                    int out_cols) {
    if (out_rows < in_rows || out_cols < in_cols)
        throw ShapeMismatch("padded size must be at least the input size");
    FeatureMap grid(1, out_rows, out_cols);
    const double a = std::abs(amplitude);
    for (int u = 0; u < out_rows; ++u) {
        const double fu = std::abs(dirichlet_sum(-kTwoPi * u / out_rows, in_rows));
        for (int v = 0; v < out_cols; ++v) {
            const double fv = std::abs(dirichlet_sum(-kTwoPi * v / out_cols, in_cols));
            double val = a * fu * fv;
            if (u == 0 && v == 0) val -= a * static_cast<double>(in_rows) * in_cols;
            grid.at(0, u, v) = std::abs(val);
        }
    }
    return grid;
}

SpectrumMap upsample_spectrum_predict(const SpectrumMap& g, int ratio) {
    if (ratio < 1) throw ShapeMismatch("upsample ratio must be at least 1");
    SpectrumMap h(g.channels, g.rows * ratio, g.cols * ratio);
    for (int c = 0; c < g.channels; ++c)
        for (int u = 0; u < h.rows; ++u)
            for (int v = 0; v < h.cols; ++v) h.at(c, u, v) = g.at(c, u % g.rows, v % g.cols);
    return h;
}

double p_low_ratio(const SpectrumMap& h) {
    const int M = h.rows, N = h.cols;
    if (M < 8 || N < 8)
        throw SizeTooSmall("p_low needs at least 8x8 frequency bins, got " + std::to_string(M) + "x" +
                           std::to_string(N));
    double low = 0.0, total = 0.0;
    for (int c = 0; c < h.channels; ++c)
        for (int u = 0; u < M; ++u)
            for (int v = 0; v < N; ++v) {
                const double e = std::norm(h.at(c, u, v));
                total += e;
                if (low_band_bin(u, v, M, N)) low += e;
            }
    if (total == 0.0) throw ZeroEnergy("spectrum carries no energy");
    return low / total;
}

GrayImage render_magnitude_map(const SpectrumMap& h, bool clamp_fundamental) {
    const int M = h.rows, N = h.cols;
    FeatureMap mag(1, M, N);
    for (int u = 0; u < M; ++u)
        for (int v = 0; v < N; ++v) {
            double acc = 0.0;
            for (int c = 0; c < h.channels; ++c) acc += std::abs(h.at(c, u, v));
            mag.at(0, u, v) = acc / h.channels;
        }
    mag = fftshift(mag);
    if (clamp_fundamental) {
        const int cu = M / 2, cv = N / 2;
        double best = 0.0;
        for (int u = 0; u < M; ++u)
            for (int v = 0; v < N; ++v)
                if (u != cu || v != cv) best = std::max(best, mag.at(0, u, v));
        mag.at(0, cu, cv) = best;
    }
    double lo = mag.data[0], hi = mag.data[0];
    for (auto& x : mag.data) {
        x = std::log1p(x);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    GrayImage img;
    img.rows = M;
    img.cols = N;
    img.pixels.resize(static_cast<std::size_t>(M) * N, 0);
    if (hi > lo) {
        const double scale = 255.0 / (hi - lo);
        for (std::size_t i = 0; i < mag.data.size(); ++i)
            img.pixels[i] = static_cast<std::uint8_t>(std::lround((mag.data[i] - lo) * scale));
    }
    return img;
}

}  // namespace spectral
