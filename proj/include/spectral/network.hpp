#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "spectral/tensor.hpp"

namespace spectral {

enum class Padding { circular, zero_same, zero_one_side, none };
enum class Activation { identity, relu };

// One convolution layer. Weights are correlation taps indexed
// (out_channel d, in_channel c, row offset t, col offset s); no kernel flip.
struct ConvLayerSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    Padding padding = Padding::circular;
    Activation activation = Activation::identity;
    double init_mean = 0.0;
    double init_std = 0.0;
    bool zero_bias = false;
    int pad_rows = 0;  // zero_one_side target size, rows
    int pad_cols = 0;  // zero_one_side target size, cols
    std::vector<double> weights;
    std::vector<double> biases;

    std::size_t weight_index(int d, int c, int t, int s) const {
        return ((static_cast<std::size_t>(d) * in_channels + c) * kernel + t) * kernel + s;
    }
    double w(int d, int c, int t, int s) const { return weights[weight_index(d, c, t, s)]; }
    double& w(int d, int c, int t, int s) { return weights[weight_index(d, c, t, s)]; }
};

struct UpsampleSpec {
    int ratio = 2;
};

using LayerSpec = std::variant<ConvLayerSpec, UpsampleSpec>;

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    double learning_rate = 0.01;
};

struct Shape {
    int channels = 0;
    int rows = 0;
    int cols = 0;
    bool operator==(const Shape&) const = default;
};

// Shape the layer produces for the given input shape; validates channel
// counts and kernel fit (KernelTooLarge, ShapeMismatch).
Shape layer_output_shape(const LayerSpec& layer, const Shape& in);
Shape network_output_shape(const NetworkSpec& net, const Shape& in);

// Gaussian init from the layer's (init_mean, init_std), deterministic in the
// seed. Layers with zero_bias get exactly-zero biases that training leaves
// untouched.
void init_network(NetworkSpec& net, std::uint64_t seed);

FeatureMap conv_forward(const ConvLayerSpec& layer, const FeatureMap& in);
FeatureMap upsample(const FeatureMap& in, int ratio);

struct ForwardTrace {
    std::vector<FeatureMap> outputs;  // post-activation output of every layer
};

FeatureMap network_forward(const NetworkSpec& net, const FeatureMap& x);
ForwardTrace network_forward_trace(const NetworkSpec& net, const FeatureMap& x);

double mse_loss(const FeatureMap& out, const FeatureMap& target);
FeatureMap mse_grad(const FeatureMap& out, const FeatureMap& target);

// One SGD step on the MSE loss for one sample (or an equally weighted
// batch). Returns the updated network; the input spec is untouched.
NetworkSpec sgd_step(const NetworkSpec& net, const FeatureMap& x, const FeatureMap& target, double eta);
NetworkSpec sgd_step_batch(const NetworkSpec& net, const std::vector<FeatureMap>& xs,
                           const std::vector<FeatureMap>& targets, double eta);

// Flat little-endian weight blob with a 16-byte header (magic, version,
// layer count). load_weights checks the blob against the spec's shapes.
void save_weights(const NetworkSpec& net, const std::string& path);
void load_weights(NetworkSpec& net, const std::string& path);

}  // namespace spectral
