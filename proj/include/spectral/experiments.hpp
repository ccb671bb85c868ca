#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spectral/analysis.hpp"
#include "spectral/config.hpp"
#include "spectral/io.hpp"
#include "spectral/network.hpp"

namespace spectral {

struct NamedTable {
    std::string name;  // file stem, written as <name>.csv
    CsvTable table;
};

struct NamedImage {
    std::string name;  // file stem, written as <name>.pgm
    GrayImage image;
};

// Everything one experiment run produces. trends_ok reports whether the
// qualitative behavior the experiment checks for actually showed up.
struct ExperimentResult {
    std::string experiment;
    bool trends_ok = true;
    std::vector<std::string> summary;
    std::vector<NamedTable> tables;
    std::vector<NamedImage> images;
};

// Deterministic synthetic image: conjugate-symmetric spectrum with magnitude
// (1 + radius)^-exponent and seeded phases, inverted and min-max normalized
// to [0, 1] per channel.
FeatureMap synth_powerlaw_image(int channels, int rows, int cols, double exponent, std::uint64_t seed);

// Batch of inputs for the configured dataset source (powerlaw, constant or
// pgm-dir).
std::vector<FeatureMap> dataset_images(const ExperimentConfig& cfg, int count, std::uint64_t seed);

// Clone with every conv layer switched to the given padding; weights kept.
NetworkSpec with_padding(const NetworkSpec& net, Padding pad);
NetworkSpec circularized(const NetworkSpec& net);

// Block mean over factor x factor cells; extents must divide evenly.
FeatureMap average_pool(const FeatureMap& x, int factor);

// Least squares y = intercept + slope * index over index = 0..n-1.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& y);

// Monte Carlo counterpart of zero_pad_expected_signal: features drawn iid
// N(amplitude, stddev^2), measured as the modulus of the complex mean of the
// spectrum change, with a per-bin standard error.
struct ZeroPadMeasurement {
    FeatureMap measured;
    FeatureMap se;
};
ZeroPadMeasurement zero_pad_measure(double amplitude, double stddev, int in_rows, int in_cols,
                                    int out_rows, int out_cols, int draws, std::uint64_t seed);

ExperimentResult exp_verify_forward(const ExperimentConfig& cfg);
ExperimentResult exp_verify_backward(const ExperimentConfig& cfg);
ExperimentResult exp_depth_som(const ExperimentConfig& cfg);
ExperimentResult exp_kernel_size(const ExperimentConfig& cfg);
ExperimentResult exp_mean_bias(const ExperimentConfig& cfg);
ExperimentResult exp_padding(const ExperimentConfig& cfg);
ExperimentResult exp_upsampling(const ExperimentConfig& cfg);
ExperimentResult exp_train_demo(const ExperimentConfig& cfg);
ExperimentResult exp_render_spectrum(const ExperimentConfig& cfg);
ExperimentResult exp_dump_transfer(const ExperimentConfig& cfg);

// Dispatch on cfg.experiment; ConfigError for unknown names.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Write tables, images and summary.txt under out_dir (created if missing).
void write_result(const ExperimentResult& result, const std::string& out_dir);

}  // namespace spectral
