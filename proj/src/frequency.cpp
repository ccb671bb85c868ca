#include "spectral/frequency.hpp"

#include <algorithm>
#include <string>

#include "spectral/errors.hpp"

namespace spectral {

TransferField::TransferField(int m, int n, int d, int c, cplx fill)
    : rows(m), cols(n), out_channels(d), in_channels(c) {
    if (m <= 0 || n <= 0 || d <= 0 || c <= 0)
        throw ShapeMismatch("TransferField dimensions must be positive");
    data.assign(static_cast<std::size_t>(m) * n * d * c, fill);
}

TransferField compute_transfer_field(const ConvLayerSpec& layer, int rows, int cols) {
    const int K = layer.kernel;
    if (K > std::min(rows, cols))
        throw KernelTooLarge("transfer field needs K <= min(M, N), got K = " + std::to_string(K));
    const std::size_t want =
        static_cast<std::size_t>(layer.out_channels) * layer.in_channels * K * K;
    if (layer.weights.size() != want)
        throw ShapeMismatch("conv layer weights not initialized to the declared shape");
    const auto wm = unit_roots(rows, +1);
    const auto wn = unit_roots(cols, +1);
    TransferField tf(rows, cols, layer.out_channels, layer.in_channels);
    for (int u = 0; u < rows; ++u)
        for (int v = 0; v < cols; ++v) {
            cplx* bin = tf.data.data() + tf.bin_index(u, v);
            for (int d = 0; d < layer.out_channels; ++d)
                for (int c = 0; c < layer.in_channels; ++c) {
                    cplx acc = 0.0;
                    for (int t = 0; t < K; ++t) {
                        const cplx pt = wm[static_cast<std::size_t>(u) * t % rows];
                        for (int s = 0; s < K; ++s)
                            acc += layer.w(d, c, t, s) * pt * wn[static_cast<std::size_t>(v) * s % cols];
                    }
                    bin[static_cast<std::size_t>(d) * layer.in_channels + c] = acc;
                }
        }
    return tf;
}

AlphaField compute_alpha(int out_rows, int out_cols, int in_rows, int in_cols, int kernel) {
    if (out_rows <= 0 || out_cols <= 0 || in_rows <= 0 || in_cols <= 0 || kernel <= 0)
        throw ShapeMismatch("compute_alpha: all dimensions must be positive");
    AlphaField a;
    a.out_rows = out_rows;
    a.out_cols = out_cols;
    a.in_rows = in_rows;
    a.in_cols = in_cols;
    a.data.assign(static_cast<std::size_t>(out_rows) * out_cols * in_rows * in_cols, cplx{});
    if (out_rows == in_rows && out_cols == in_cols) {
        for (int u = 0; u < in_rows; ++u)
            for (int v = 0; v < in_cols; ++v) a.at(u, v, u, v) = 1.0;
        return a;
    }
    if (out_rows != in_rows - kernel + 1 || out_cols != in_cols - kernel + 1)
        throw SizeRegimeUnsupported("compute_alpha handles same-size and padding-free regimes only");
    const double norm = 1.0 / (static_cast<double>(in_rows) * in_cols);
    for (int up = 0; up < out_rows; ++up)
        for (int vp = 0; vp < out_cols; ++vp)
            for (int u = 0; u < in_rows; ++u) {
                // integer numerator keeps theta exactly zero on the diagonal
                const double theta_m =
                    kTwoPi * (u * out_rows - up * in_rows) / (static_cast<double>(in_rows) * out_rows);
                const cplx row = dirichlet_sum(theta_m, out_rows);
                for (int v = 0; v < in_cols; ++v) {
                    const double theta_n =
                        kTwoPi * (v * out_cols - vp * in_cols) / (static_cast<double>(in_cols) * out_cols);
                    a.at(up, vp, u, v) = norm * row * dirichlet_sum(theta_n, out_cols);
                }
            }
    return a;
}

ChiTable compute_chi(int rows, int cols, int kernel) {
    if (kernel > std::min(rows, cols))
        throw KernelTooLarge("compute_chi needs K <= min(M, N)");
    ChiTable chi;
    chi.rows = rows;
    chi.cols = cols;
    chi.data.resize(static_cast<std::size_t>(rows) * cols);
    const double norm = 1.0 / (static_cast<double>(rows) * cols);
    for (int du = 0; du < rows; ++du) {
        const cplx row = dirichlet_sum(kTwoPi * du / rows, kernel);
        for (int dv = 0; dv < cols; ++dv)
            chi.data[static_cast<std::size_t>(du) * cols + dv] =
                norm * row * dirichlet_sum(kTwoPi * dv / cols, kernel);
    }
    return chi;
}

namespace {

void check_propagate_shapes(const TransferField& tf, const SpectrumMap& g,
                            const std::vector<double>& biases) {
    if (tf.rows != g.rows || tf.cols != g.cols)
        throw ShapeMismatch("transfer field and spectrum cover different frequency grids");
    if (tf.in_channels != g.channels)
        throw ShapeMismatch("transfer field expects " + std::to_string(tf.in_channels) +
                            " input channels, spectrum has " + std::to_string(g.channels));
    if (biases.size() != static_cast<std::size_t>(tf.out_channels))
        throw ShapeMismatch("bias count does not match transfer field output channels");
}

}  // namespace

SpectrumMap propagate_layer_same(const TransferField& tf, const SpectrumMap& g,
                                 const std::vector<double>& biases) {
    check_propagate_shapes(tf, g, biases);
    const int M = g.rows, N = g.cols;
    SpectrumMap h(tf.out_channels, M, N);
    for (int u = 0; u < M; ++u)
        for (int v = 0; v < N; ++v) {
            const cplx* bin = tf.data.data() + tf.bin_index(u, v);
            for (int d = 0; d < tf.out_channels; ++d) {
                cplx acc = 0.0;
                for (int c = 0; c < tf.in_channels; ++c)
                    acc += bin[static_cast<std::size_t>(d) * tf.in_channels + c] * g.at(c, u, v);
                h.at(d, u, v) = acc;
            }
        }
    const double dc = static_cast<double>(M) * N;
    for (int d = 0; d < tf.out_channels; ++d) h.at(d, 0, 0) += dc * biases[d];
    return h;
}

SpectrumMap propagate_layer_general(const TransferField& tf, const AlphaField& alpha, const SpectrumMap& g,
                                    const std::vector<double>& biases) {
    check_propagate_shapes(tf, g, biases);
    if (alpha.in_rows != g.rows || alpha.in_cols != g.cols)
        throw ShapeMismatch("alpha field input grid does not match the spectrum");
    const int M = g.rows, N = g.cols;
    const int Mo = alpha.out_rows, No = alpha.out_cols;
    const int D = tf.out_channels;
    // mixed[u][v] = T(u,v) g(u,v)
    std::vector<cplx> mixed(static_cast<std::size_t>(M) * N * D);
    for (int u = 0; u < M; ++u)
        for (int v = 0; v < N; ++v) {
            const cplx* bin = tf.data.data() + tf.bin_index(u, v);
            cplx* out = mixed.data() + (static_cast<std::size_t>(u) * N + v) * D;
            for (int d = 0; d < D; ++d) {
                cplx acc = 0.0;
                for (int c = 0; c < tf.in_channels; ++c)
                    acc += bin[static_cast<std::size_t>(d) * tf.in_channels + c] * g.at(c, u, v);
                out[d] = acc;
            }
        }
    SpectrumMap h(D, Mo, No);
    for (int up = 0; up < Mo; ++up)
        for (int vp = 0; vp < No; ++vp) {
            for (int u = 0; u < M; ++u)
                for (int v = 0; v < N; ++v) {
                    const cplx w = alpha.at(up, vp, u, v);
                    if (w == cplx{}) continue;
                    const cplx* src = mixed.data() + (static_cast<std::size_t>(u) * N + v) * D;
                    for (int d = 0; d < D; ++d) h.at(d, up, vp) += w * src[d];
                }
        }
    const double dc = static_cast<double>(Mo) * No;
    for (int d = 0; d < D; ++d) h.at(d, 0, 0) += dc * biases[d];
    return h;
}

namespace {

// product = left * right per bin: (D x E) * (E x C) -> (D x C)
TransferField field_matmul(const TransferField& left, const TransferField& right) {
    if (left.rows != right.rows || left.cols != right.cols || left.in_channels != right.out_channels)
        throw ShapeMismatch("transfer field product dimensions do not chain");
    TransferField out(left.rows, left.cols, left.out_channels, right.in_channels);
    const int D = left.out_channels, E = left.in_channels, C = right.in_channels;
    for (int u = 0; u < left.rows; ++u)
        for (int v = 0; v < left.cols; ++v) {
            const cplx* a = left.data.data() + left.bin_index(u, v);
            const cplx* b = right.data.data() + right.bin_index(u, v);
            cplx* o = out.data.data() + out.bin_index(u, v);
            for (int d = 0; d < D; ++d)
                for (int c = 0; c < C; ++c) {
                    cplx acc = 0.0;
                    for (int e = 0; e < E; ++e)
                        acc += a[static_cast<std::size_t>(d) * E + e] * b[static_cast<std::size_t>(e) * C + c];
                    o[static_cast<std::size_t>(d) * C + c] = acc;
                }
        }
    return out;
}

TransferField identity_field(int rows, int cols, int channels) {
    TransferField id(rows, cols, channels, channels);
    for (int u = 0; u < rows; ++u)
        for (int v = 0; v < cols; ++v)
            for (int c = 0; c < channels; ++c) id.at(u, v, c, c) = 1.0;
    return id;
}

const ConvLayerSpec& require_circular_conv(const NetworkSpec& net, std::size_t index, int in_channels) {
    const auto* conv = std::get_if<ConvLayerSpec>(&net.layers[index]);
    if (!conv)
        throw UpsamplePresent("cascade covers conv layers only; upsampling at layer " +
                              std::to_string(index));
    if (conv->padding != Padding::circular)
        throw RegimeViolation("cascade requires circular padding; layer " + std::to_string(index) +
                              " uses another mode");
    if (conv->in_channels != in_channels)
        throw ShapeMismatch("layer " + std::to_string(index) + " channel count breaks the chain");
    return *conv;
}

}  // namespace

CascadeTransfer cascade_transfer(const NetworkSpec& net, int input_channels, int rows, int cols) {
    CascadeTransfer ct;
    ct.product = identity_field(rows, cols, input_channels);
    ct.beta.assign(input_channels, cplx{});
    const double dc = static_cast<double>(rows) * cols;
    int channels = input_channels;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const ConvLayerSpec& conv = require_circular_conv(net, i, channels);
        const TransferField tf = compute_transfer_field(conv, rows, cols);
        ct.product = field_matmul(tf, ct.product);
        std::vector<cplx> beta(conv.out_channels);
        const cplx* t00 = tf.data.data() + tf.bin_index(0, 0);
        for (int d = 0; d < conv.out_channels; ++d) {
            cplx acc = dc * conv.biases[d];
            for (int c = 0; c < conv.in_channels; ++c)
                acc += t00[static_cast<std::size_t>(d) * conv.in_channels + c] * ct.beta[c];
            beta[d] = acc;
        }
        ct.beta = std::move(beta);
        channels = conv.out_channels;
    }
    return ct;
}

CascadeParts cascade_parts(const NetworkSpec& net, int input_channels, int rows, int cols) {
    const std::size_t L = net.layers.size();
    CascadeParts parts;
    parts.prefix.reserve(L + 1);
    parts.beta.reserve(L + 1);
    parts.suffix.resize(L + 1);
    parts.prefix.push_back(identity_field(rows, cols, input_channels));
    parts.beta.emplace_back(input_channels, cplx{});
    const double dc = static_cast<double>(rows) * cols;
    int channels = input_channels;
    std::vector<TransferField> fields;
    fields.reserve(L);
    for (std::size_t i = 0; i < L; ++i) {
        const ConvLayerSpec& conv = require_circular_conv(net, i, channels);
        fields.push_back(compute_transfer_field(conv, rows, cols));
        const TransferField& tf = fields.back();
        parts.prefix.push_back(field_matmul(tf, parts.prefix[i]));
        std::vector<cplx> beta(conv.out_channels);
        const cplx* t00 = tf.data.data() + tf.bin_index(0, 0);
        for (int d = 0; d < conv.out_channels; ++d) {
            cplx acc = dc * conv.biases[d];
            for (int c = 0; c < conv.in_channels; ++c)
                acc += t00[static_cast<std::size_t>(d) * conv.in_channels + c] * parts.beta[i][c];
            beta[d] = acc;
        }
        parts.beta.push_back(std::move(beta));
        channels = conv.out_channels;
    }
    parts.suffix[L] = identity_field(rows, cols, channels);
    for (std::size_t i = L; i-- > 0;) parts.suffix[i] = field_matmul(parts.suffix[i + 1], fields[i]);
    return parts;
}

SpectrumMap predict_output_spectrum(const CascadeTransfer& ct, const SpectrumMap& g) {
    if (ct.product.rows != g.rows || ct.product.cols != g.cols || ct.product.in_channels != g.channels)
        throw ShapeMismatch("cascade transfer does not match the input spectrum");
    SpectrumMap h(ct.product.out_channels, g.rows, g.cols);
    for (int u = 0; u < g.rows; ++u)
        for (int v = 0; v < g.cols; ++v) {
            const cplx* bin = ct.product.data.data() + ct.product.bin_index(u, v);
            for (int d = 0; d < ct.product.out_channels; ++d) {
                cplx acc = 0.0;
                for (int c = 0; c < ct.product.in_channels; ++c)
                    acc += bin[static_cast<std::size_t>(d) * ct.product.in_channels + c] * g.at(c, u, v);
                h.at(d, u, v) = acc;
            }
        }
    for (int d = 0; d < ct.product.out_channels; ++d) h.at(d, 0, 0) += ct.beta[d];
    return h;
}

TransferField predict_delta_T_given(const CascadeParts& parts, int layer_index, int kernel,
                                    const SpectrumMap& g, const SpectrumMap& dloss_dhbar, double eta) {
    const int M = g.rows, N = g.cols;
    const std::size_t L = parts.suffix.size() - 1;
    if (layer_index < 0 || static_cast<std::size_t>(layer_index) >= L)
        throw ShapeMismatch("layer index out of range");
    const TransferField& pre = parts.prefix[layer_index];
    const TransferField& suf = parts.suffix[layer_index + 1];
    const std::vector<cplx>& beta_pre = parts.beta[layer_index];
    if (pre.rows != M || pre.cols != N || dloss_dhbar.rows != M || dloss_dhbar.cols != N)
        throw ShapeMismatch("cascade parts and spectra cover different grids");
    if (pre.in_channels != g.channels || suf.out_channels != dloss_dhbar.channels)
        throw ShapeMismatch("cascade parts do not match the spectra channel counts");
    const int Cin = pre.out_channels;   // channels entering the layer
    const int D = suf.in_channels;      // channels the layer emits
    const int K = kernel;
    const auto wm_neg = unit_roots(M, -1);
    const auto wn_neg = unit_roots(N, -1);
    const auto wm_pos = unit_roots(M, +1);
    const auto wn_pos = unit_roots(N, +1);

    // Y[t][s] accumulates the phase-weighted sum over output bins of
    // (prefix-propagated conjugate input) x (suffix-propagated loss row).
    std::vector<cplx> Y(static_cast<std::size_t>(K) * K * Cin * D, cplx{});
    std::vector<cplx> A(Cin), q(D);
    for (int up = 0; up < M; ++up)
        for (int vp = 0; vp < N; ++vp) {
            const cplx* pbin = pre.data.data() + pre.bin_index(up, vp);
            for (int c = 0; c < Cin; ++c) {
                cplx acc = 0.0;
                for (int c0 = 0; c0 < pre.in_channels; ++c0)
                    acc += pbin[static_cast<std::size_t>(c) * pre.in_channels + c0] * g.at(c0, up, vp);
                A[c] = std::conj(acc);
            }
            if (up == 0 && vp == 0)
                for (int c = 0; c < Cin; ++c) A[c] += std::conj(beta_pre[c]);
            const cplx* sbin = suf.data.data() + suf.bin_index(up, vp);
            for (int d = 0; d < D; ++d) {
                cplx acc = 0.0;
                for (int cl = 0; cl < suf.out_channels; ++cl)
                    acc += dloss_dhbar.at(cl, up, vp) *
                           std::conj(sbin[static_cast<std::size_t>(cl) * D + d]);
                q[d] = acc;
            }
            for (int t = 0; t < K; ++t) {
                const cplx pt = wm_neg[static_cast<std::size_t>(up) * t % M];
                for (int s = 0; s < K; ++s) {
                    const cplx phase = pt * wn_neg[static_cast<std::size_t>(vp) * s % N];
                    cplx* slab = Y.data() + (static_cast<std::size_t>(t) * K + s) * Cin * D;
                    for (int c = 0; c < Cin; ++c) {
                        const cplx ac = phase * A[c];
                        for (int d = 0; d < D; ++d) slab[static_cast<std::size_t>(c) * D + d] += ac * q[d];
                    }
                }
            }
        }

    TransferField delta(M, N, D, Cin);
    for (int u = 0; u < M; ++u)
        for (int v = 0; v < N; ++v) {
            cplx* bin = delta.data.data() + delta.bin_index(u, v);
            for (int t = 0; t < K; ++t) {
                const cplx pt = wm_pos[static_cast<std::size_t>(u) * t % M];
                for (int s = 0; s < K; ++s) {
                    const cplx phase = pt * wn_pos[static_cast<std::size_t>(v) * s % N];
                    const cplx* slab = Y.data() + (static_cast<std::size_t>(t) * K + s) * Cin * D;
                    for (int c = 0; c < Cin; ++c)
                        for (int d = 0; d < D; ++d)
                            bin[static_cast<std::size_t>(d) * Cin + c] +=
                                phase * slab[static_cast<std::size_t>(c) * D + d];
                }
            }
            for (int i = 0; i < D * Cin; ++i) bin[i] *= -eta;
        }
    return delta;
}

TransferField predict_delta_T(const NetworkSpec& net, int layer_index, const FeatureMap& x,
                              const FeatureMap& target, double eta) {
    if (layer_index < 0 || static_cast<std::size_t>(layer_index) >= net.layers.size())
        throw ShapeMismatch("layer index out of range");
    const int M = x.rows, N = x.cols;
    const CascadeParts parts = cascade_parts(net, x.channels, M, N);
    const auto& conv = std::get<ConvLayerSpec>(net.layers[layer_index]);
    const FeatureMap out = network_forward(net, x);
    FeatureMap grad = mse_grad(out, target);
    SpectrumMap dldh = dft2(grad);
    const double norm = 1.0 / (static_cast<double>(M) * N);
    for (auto& z : dldh.data) z *= norm;
    return predict_delta_T_given(parts, layer_index, conv.kernel, dft2(x), dldh, eta);
}

TransferField measure_delta_T(const NetworkSpec& before, const NetworkSpec& after, int layer_index,
                              int rows, int cols) {
    if (before.layers.size() != after.layers.size())
        throw SpecMismatch("networks have different layer counts");
    if (layer_index < 0 || static_cast<std::size_t>(layer_index) >= before.layers.size())
        throw ShapeMismatch("layer index out of range");
    const auto* a = std::get_if<ConvLayerSpec>(&before.layers[layer_index]);
    const auto* b = std::get_if<ConvLayerSpec>(&after.layers[layer_index]);
    if (!a || !b) throw SpecMismatch("layer " + std::to_string(layer_index) + " is not a conv layer");
    if (a->in_channels != b->in_channels || a->out_channels != b->out_channels || a->kernel != b->kernel)
        throw SpecMismatch("layer " + std::to_string(layer_index) + " shapes differ between networks");
    TransferField tb = compute_transfer_field(*a, rows, cols);
    const TransferField ta = compute_transfer_field(*b, rows, cols);
    for (std::size_t i = 0; i < tb.data.size(); ++i) tb.data[i] = ta.data[i] - tb.data[i];
    return tb;
}

SpectrumMap transfer_as_spectrum(const TransferField& tf) {
    SpectrumMap s(tf.out_channels * tf.in_channels, tf.rows, tf.cols);
    for (int u = 0; u < tf.rows; ++u)
        for (int v = 0; v < tf.cols; ++v)
            for (int d = 0; d < tf.out_channels; ++d)
                for (int c = 0; c < tf.in_channels; ++c)
                    s.at(d * tf.in_channels + c, u, v) = tf.at(u, v, d, c);
    return s;
}

}  // namespace spectral
