#include "spectral/network.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "spectral/errors.hpp"
#include "spectral/rng.hpp"

namespace spectral {

namespace {

void check_initialized(const ConvLayerSpec& l) {
    const std::size_t want_w =
        static_cast<std::size_t>(l.out_channels) * l.in_channels * l.kernel * l.kernel;
    if (l.weights.size() != want_w || l.biases.size() != static_cast<std::size_t>(l.out_channels))
        throw ShapeMismatch("conv layer parameter arrays do not match its declared shape");
}

}  // namespace

Shape layer_output_shape(const LayerSpec& layer, const Shape& in) {
    if (in.channels <= 0 || in.rows <= 0 || in.cols <= 0)
        throw ShapeMismatch("layer input shape must be positive");
    if (const auto* conv = std::get_if<ConvLayerSpec>(&layer)) {
        if (conv->in_channels != in.channels)
            throw ShapeMismatch("conv layer expects " + std::to_string(conv->in_channels) +
                                " channels, input has " + std::to_string(in.channels));
        if (conv->kernel < 1) throw ShapeMismatch("kernel size must be at least 1");
        int m = in.rows, n = in.cols;
        if (conv->padding == Padding::zero_one_side) {
            if (conv->pad_rows < in.rows || conv->pad_cols < in.cols)
                throw ShapeMismatch("zero_one_side target size is smaller than the input");
            m = conv->pad_rows;
            n = conv->pad_cols;
        }
        if (conv->kernel > std::min(m, n))
            throw KernelTooLarge("kernel " + std::to_string(conv->kernel) + " exceeds input extent " +
                                 std::to_string(std::min(m, n)));
        if (conv->padding == Padding::none) {
            m = m - conv->kernel + 1;
            n = n - conv->kernel + 1;
        }
        return {conv->out_channels, m, n};
    }
    const auto& up = std::get<UpsampleSpec>(layer);
    if (up.ratio < 1) throw ShapeMismatch("upsample ratio must be at least 1");
    return {in.channels, in.rows * up.ratio, in.cols * up.ratio};
}

Shape network_output_shape(const NetworkSpec& net, const Shape& in) {
    Shape s = in;
    for (const auto& layer : net.layers) s = layer_output_shape(layer, s);
    return s;
}

void init_network(NetworkSpec& net, std::uint64_t seed) {
    SplitMix64 gen(seed);
    for (auto& layer : net.layers) {
        auto* conv = std::get_if<ConvLayerSpec>(&layer);
        if (!conv) continue;
        const std::size_t nw =
            static_cast<std::size_t>(conv->out_channels) * conv->in_channels * conv->kernel * conv->kernel;
        conv->weights.resize(nw);
        conv->biases.assign(conv->out_channels, 0.0);
        for (std::size_t i = 0; i < nw; ++i)
            conv->weights[i] = gen.next_gaussian(conv->init_mean, conv->init_std);
        if (!conv->zero_bias)
            for (auto& b : conv->biases) b = gen.next_gaussian(conv->init_mean, conv->init_std);
    }
}

namespace {

FeatureMap conv_circular(const ConvLayerSpec& l, const FeatureMap& in) {
    const int M = in.rows, N = in.cols, K = l.kernel;
    FeatureMap out(l.out_channels, M, N);
    for (int d = 0; d < l.out_channels; ++d)
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < N; ++n) {
                double acc = l.biases[d];
                for (int c = 0; c < l.in_channels; ++c)
                    for (int t = 0; t < K; ++t) {
                        int mm = m + t;
                        if (mm >= M) mm -= M;
                        for (int s = 0; s < K; ++s) {
                            int nn = n + s;
                            if (nn >= N) nn -= N;
                            acc += l.w(d, c, t, s) * in.at(c, mm, nn);
                        }
                    }
                out.at(d, m, n) = acc;
            }
    return out;
}

// Taps beyond the bottom/right edge read zero; output keeps the input size.
FeatureMap conv_zero(const ConvLayerSpec& l, const FeatureMap& in) {
    const int M = in.rows, N = in.cols, K = l.kernel;
    FeatureMap out(l.out_channels, M, N);
    for (int d = 0; d < l.out_channels; ++d)
        for (int m = 0; m < M; ++m) {
            const int tmax = std::min(K, M - m);
            for (int n = 0; n < N; ++n) {
                const int smax = std::min(K, N - n);
                double acc = l.biases[d];
                for (int c = 0; c < l.in_channels; ++c)
                    for (int t = 0; t < tmax; ++t)
                        for (int s = 0; s < smax; ++s) acc += l.w(d, c, t, s) * in.at(c, m + t, n + s);
                out.at(d, m, n) = acc;
            }
        }
    return out;
}

FeatureMap conv_valid(const ConvLayerSpec& l, const FeatureMap& in) {
    const int K = l.kernel;
    const int Mo = in.rows - K + 1, No = in.cols - K + 1;
    FeatureMap out(l.out_channels, Mo, No);
    for (int d = 0; d < l.out_channels; ++d)
        for (int m = 0; m < Mo; ++m)
            for (int n = 0; n < No; ++n) {
                double acc = l.biases[d];
                for (int c = 0; c < l.in_channels; ++c)
                    for (int t = 0; t < K; ++t)
                        for (int s = 0; s < K; ++s) acc += l.w(d, c, t, s) * in.at(c, m + t, n + s);
                out.at(d, m, n) = acc;
            }
    return out;
}

FeatureMap embed_canvas(const FeatureMap& in, int rows, int cols) {
    FeatureMap canvas(in.channels, rows, cols);
    for (int c = 0; c < in.channels; ++c)
        for (int m = 0; m < in.rows; ++m)
            for (int n = 0; n < in.cols; ++n) canvas.at(c, m, n) = in.at(c, m, n);
    return canvas;
}

void apply_activation(FeatureMap& f, Activation a) {
    if (a == Activation::identity) return;
    for (auto& x : f.data) x = x > 0.0 ? x : 0.0;
}

}  // namespace

FeatureMap conv_forward(const ConvLayerSpec& layer, const FeatureMap& in) {
    layer_output_shape(LayerSpec{layer}, {in.channels, in.rows, in.cols});
    check_initialized(layer);
    FeatureMap out;
    switch (layer.padding) {
        case Padding::circular: out = conv_circular(layer, in); break;
        case Padding::zero_same: out = conv_zero(layer, in); break;
        case Padding::none: out = conv_valid(layer, in); break;
        case Padding::zero_one_side:
            out = conv_zero(layer, embed_canvas(in, layer.pad_rows, layer.pad_cols));
            break;
    }
    apply_activation(out, layer.activation);
    return out;
}

FeatureMap upsample(const FeatureMap& in, int ratio) {
    if (ratio < 1) throw ShapeMismatch("upsample ratio must be at least 1");
    FeatureMap out(in.channels, in.rows * ratio, in.cols * ratio);
    for (int c = 0; c < in.channels; ++c)
        for (int m = 0; m < in.rows; ++m)
            for (int n = 0; n < in.cols; ++n) out.at(c, m * ratio, n * ratio) = in.at(c, m, n);
    return out;
}

ForwardTrace network_forward_trace(const NetworkSpec& net, const FeatureMap& x) {
    ForwardTrace trace;
    trace.outputs.reserve(net.layers.size());
    const FeatureMap* cur = &x;
    for (const auto& layer : net.layers) {
        if (const auto* conv = std::get_if<ConvLayerSpec>(&layer))
            trace.outputs.push_back(conv_forward(*conv, *cur));
        else
            trace.outputs.push_back(upsample(*cur, std::get<UpsampleSpec>(layer).ratio));
        cur = &trace.outputs.back();
    }
    return trace;
}

FeatureMap network_forward(const NetworkSpec& net, const FeatureMap& x) {
    if (net.layers.empty()) return x;
    return network_forward_trace(net, x).outputs.back();
}

double mse_loss(const FeatureMap& out, const FeatureMap& target) {
    if (!out.same_shape(target)) throw ShapeMismatch("mse_loss: output and target shapes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double d = out.data[i] - target.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(out.data.size());
}

FeatureMap mse_grad(const FeatureMap& out, const FeatureMap& target) {
    if (!out.same_shape(target)) throw ShapeMismatch("mse_grad: output and target shapes differ");
    FeatureMap g(out.channels, out.rows, out.cols);
    const double scale = 2.0 / static_cast<double>(out.data.size());
    for (std::size_t i = 0; i < out.data.size(); ++i) g.data[i] = scale * (out.data[i] - target.data[i]);
    return g;
}

namespace {

struct ConvGrads {
    std::vector<double> weights;
    std::vector<double> biases;
};

// Backward through one conv layer. gz is the gradient w.r.t. the
// pre-activation output; fin the layer input as seen by the taps.
FeatureMap conv_backward(const ConvLayerSpec& l, const FeatureMap& fin, const FeatureMap& gz,
                         ConvGrads& acc) {
    const int K = l.kernel;
    const int Mi = fin.rows, Ni = fin.cols;
    const int Mo = gz.rows, No = gz.cols;
    for (int d = 0; d < l.out_channels; ++d) {
        double gb = 0.0;
        for (int m = 0; m < Mo; ++m)
            for (int n = 0; n < No; ++n) gb += gz.at(d, m, n);
        acc.biases[d] += gb;
    }
    FeatureMap gin(l.in_channels, Mi, Ni);
    if (l.padding == Padding::circular) {
        for (int d = 0; d < l.out_channels; ++d)
            for (int c = 0; c < l.in_channels; ++c)
                for (int t = 0; t < K; ++t)
                    for (int s = 0; s < K; ++s) {
                        double gw = 0.0;
                        for (int m = 0; m < Mo; ++m) {
                            int mm = m + t;
                            if (mm >= Mi) mm -= Mi;
                            for (int n = 0; n < No; ++n) {
                                int nn = n + s;
                                if (nn >= Ni) nn -= Ni;
                                gw += gz.at(d, m, n) * fin.at(c, mm, nn);
                                gin.at(c, mm, nn) += l.w(d, c, t, s) * gz.at(d, m, n);
                            }
                        }
                        acc.weights[l.weight_index(d, c, t, s)] += gw;
                    }
    } else {
        // zero_same / none / canvas: tap (t, s) pairs output (m, n) with
        // input (m+t, n+s); the output grid alone decides validity.
        for (int d = 0; d < l.out_channels; ++d)
            for (int c = 0; c < l.in_channels; ++c)
                for (int t = 0; t < K; ++t)
                    for (int s = 0; s < K; ++s) {
                        double gw = 0.0;
                        const int mtop = std::min(Mo, Mi - t);
                        const int ntop = std::min(No, Ni - s);
                        for (int m = 0; m < mtop; ++m)
                            for (int n = 0; n < ntop; ++n) {
                                gw += gz.at(d, m, n) * fin.at(c, m + t, n + s);
                                gin.at(c, m + t, n + s) += l.w(d, c, t, s) * gz.at(d, m, n);
                            }
                        acc.weights[l.weight_index(d, c, t, s)] += gw;
                    }
    }
    return gin;
}

FeatureMap crop_top_left(const FeatureMap& f, int rows, int cols) {
    FeatureMap out(f.channels, rows, cols);
    for (int c = 0; c < f.channels; ++c)
        for (int m = 0; m < rows; ++m)
            for (int n = 0; n < cols; ++n) out.at(c, m, n) = f.at(c, m, n);
    return out;
}

}  // namespace

NetworkSpec sgd_step_batch(const NetworkSpec& net, const std::vector<FeatureMap>& xs,
                           const std::vector<FeatureMap>& targets, double eta) {
    if (xs.empty() || xs.size() != targets.size())
        throw ShapeMismatch("sgd_step_batch: sample and target counts differ or are empty");
    std::vector<ConvGrads> grads(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (const auto* conv = std::get_if<ConvLayerSpec>(&net.layers[i])) {
            check_initialized(*conv);
            grads[i].weights.assign(conv->weights.size(), 0.0);
            grads[i].biases.assign(conv->biases.size(), 0.0);
        }
    }
    const double inv_batch = 1.0 / static_cast<double>(xs.size());
    for (std::size_t s = 0; s < xs.size(); ++s) {
        ForwardTrace trace = network_forward_trace(net, xs[s]);
        FeatureMap g = mse_grad(trace.outputs.back(), targets[s]);
        for (auto& v : g.data) v *= inv_batch;
        for (std::size_t i = net.layers.size(); i-- > 0;) {
            const FeatureMap& fin = i == 0 ? xs[s] : trace.outputs[i - 1];
            if (const auto* conv = std::get_if<ConvLayerSpec>(&net.layers[i])) {
                if (conv->activation == Activation::relu) {
                    const FeatureMap& fout = trace.outputs[i];
                    for (std::size_t k = 0; k < g.data.size(); ++k)
                        if (!(fout.data[k] > 0.0)) g.data[k] = 0.0;
                }
                if (conv->padding == Padding::zero_one_side) {
                    FeatureMap canvas = embed_canvas(fin, conv->pad_rows, conv->pad_cols);
                    FeatureMap gcanvas = conv_backward(*conv, canvas, g, grads[i]);
                    g = crop_top_left(gcanvas, fin.rows, fin.cols);
                } else {
                    g = conv_backward(*conv, fin, g, grads[i]);
                }
            } else {
                const int r = std::get<UpsampleSpec>(net.layers[i]).ratio;
                FeatureMap gin(fin.channels, fin.rows, fin.cols);
                for (int c = 0; c < fin.channels; ++c)
                    for (int m = 0; m < fin.rows; ++m)
                        for (int n = 0; n < fin.cols; ++n) gin.at(c, m, n) = g.at(c, m * r, n * r);
                g = std::move(gin);
            }
        }
    }
    NetworkSpec next = net;
    for (std::size_t i = 0; i < next.layers.size(); ++i) {
        auto* conv = std::get_if<ConvLayerSpec>(&next.layers[i]);
        if (!conv) continue;
        for (std::size_t k = 0; k < conv->weights.size(); ++k) conv->weights[k] -= eta * grads[i].weights[k];
        if (!conv->zero_bias)
            for (std::size_t k = 0; k < conv->biases.size(); ++k) conv->biases[k] -= eta * grads[i].biases[k];
    }
    return next;
}

NetworkSpec sgd_step(const NetworkSpec& net, const FeatureMap& x, const FeatureMap& target, double eta) {
    return sgd_step_batch(net, {x}, {target}, eta);
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& os, double x) {
    std::uint64_t v;
    std::memcpy(&v, &x, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double x;
    std::memcpy(&x, &v, 8);
    return x;
}

constexpr char kWeightsMagic[8] = {'S', 'P', 'E', 'C', 'W', 'T', 'S', '\0'};

}  // namespace

void save_weights(const NetworkSpec& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(kWeightsMagic, 8);
    put_u32(os, 1u);
    put_u32(os, static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& layer : net.layers) {
        const auto* conv = std::get_if<ConvLayerSpec>(&layer);
        if (!conv) continue;
        check_initialized(*conv);
        for (double w : conv->weights) put_f64(os, w);
        for (double b : conv->biases) put_f64(os, b);
    }
    if (!os) throw IoError("write failed for " + path);
}

void load_weights(NetworkSpec& net, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kWeightsMagic, 8) != 0) throw IoError("bad weight blob magic in " + path);
    const std::uint32_t version = get_u32(is);
    if (version != 1u) throw IoError("unsupported weight blob version " + std::to_string(version));
    const std::uint32_t count = get_u32(is);
    if (count != net.layers.size())
        throw SpecMismatch("weight blob holds " + std::to_string(count) + " layers, network has " +
                           std::to_string(net.layers.size()));
    for (auto& layer : net.layers) {
        auto* conv = std::get_if<ConvLayerSpec>(&layer);
        if (!conv) continue;
        const std::size_t nw =
            static_cast<std::size_t>(conv->out_channels) * conv->in_channels * conv->kernel * conv->kernel;
        conv->weights.resize(nw);
        conv->biases.resize(conv->out_channels);
        for (auto& w : conv->weights) w = get_f64(is);
        for (auto& b : conv->biases) b = get_f64(is);
        if (!is) throw SpecMismatch("weight blob ends before the network's parameters do");
    }
    is.peek();
    if (!is.eof()) throw SpecMismatch("weight blob holds more data than the network's parameters");
}

}  // namespace spectral
