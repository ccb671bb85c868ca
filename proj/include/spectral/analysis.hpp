#pragma once

#include <cstdint>
#include <vector>

#include "spectral/tensor.hpp"

namespace spectral {

// R(u,v) = sum_{t,s<K} exp(+i 2 pi (u t / M + v s / N)); indices are reduced
// mod (M, N) so doubled-frequency lookups stay in range.
cplx compute_R(int u, int v, int rows, int cols, int kernel);

// Predicted complex-Gaussian parameters of one transfer matrix entry when
// kernel taps are drawn iid from N(mean, stddev^2).
struct ComplexGaussianParams {
    cplx mean;
    double variance = 0.0;  // E|x - mean|^2
    cplx pseudo;            // E (x - mean)^2
};

ComplexGaussianParams transfer_entry_params(double mean, double stddev, int u, int v, int rows, int cols,
                                            int kernel);

// Moment estimates from samples (population normalization).
ComplexGaussianParams estimate_complex_gaussian(const std::vector<cplx>& samples);

// iid kernel draws mapped to their transfer entry at one frequency.
std::vector<cplx> sample_transfer_entries(double mean, double stddev, int u, int v, int rows, int cols,
                                          int kernel, int draws, std::uint64_t seed);

struct InitStat {
    double mean = 0.0;
    double stddev = 0.0;
};

struct LayerWidthStat {
    int channels = 1;
    double mean = 0.0;
    double stddev = 0.0;
};

// Partial sums of log(|mu_l R|^2 + K^2 sigma_l^2): the predicted log
// second-order moment of the single-channel cascade after each layer.
std::vector<double> som_log_curve(const std::vector<InitStat>& layers, int u, int v, int rows, int cols,
                                  int kernel);

// Multichannel closed form for E|entry|^2 of the full cascade product.
// input_channels is the width feeding the first layer.
double som_multichannel(int input_channels, const std::vector<LayerWidthStat>& layers, int u, int v,
                        int rows, int cols, int kernel);

// Monte Carlo counterpart: draws whole kernel stacks, multiplies their
// transfer matrices at (u, v), averages |entry|^2 over entries and draws.
double som_monte_carlo(int input_channels, const std::vector<LayerWidthStat>& layers, int u, int v,
                       int rows, int cols, int kernel, int draws, std::uint64_t seed);

// Mean |h|^2 over samples and channels, per frequency bin.
FeatureMap som_empirical(const std::vector<SpectrumMap>& samples);

// Expected |spectrum change| when an (in_rows x in_cols) feature with iid
// mean `amplitude` entries is zero-padded bottom/right to (out_rows x
// out_cols). Bins covered by the original grid predict |H - G|, new bins
// predict |H|; the fundamental predicts zero.
FeatureMap zero_pad_expected_signal(double amplitude, int in_rows, int in_cols, int out_rows,
                                    int out_cols);

// Exact spectrum of zero-insertion upsampling: the input spectrum tiled
// ratio x ratio times.
SpectrumMap upsample_spectrum_predict(const SpectrumMap& g, int ratio);

// True when (u, v) lies in the low band: both axes within the first or last
// eighth of the unshifted grid.
inline bool low_band_bin(int u, int v, int rows, int cols) {
    const bool row_low = u < rows / 8 || u >= 7 * rows / 8;
    const bool col_low = v < cols / 8 || v >= 7 * cols / 8;
    return row_low && col_low;
}

// Energy share of the four corner blocks [0, M/8) x [0, N/8) and mirrors.
double p_low_ratio(const SpectrumMap& h);

struct GrayImage {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> pixels;
};

// Channel-averaged magnitude map, shifted, optionally with the fundamental
// clamped to the largest remaining magnitude, log1p-scaled and normalized
// to 0..255.
GrayImage render_magnitude_map(const SpectrumMap& h, bool clamp_fundamental);

}  // namespace spectral
