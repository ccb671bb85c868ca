#pragma once

#include <vector>

#include "spectral/network.hpp"
#include "spectral/tensor.hpp"

namespace spectral {

// One complex out_channels x in_channels matrix per frequency bin (u, v).
struct TransferField {
    int rows = 0;  // frequency grid M
    int cols = 0;  // frequency grid N
    int out_channels = 0;
    int in_channels = 0;
    std::vector<cplx> data;  // (u, v, d, c)

    TransferField() = default;
    TransferField(int m, int n, int d, int c, cplx fill = {});

    std::size_t bin_index(int u, int v) const {
        return (static_cast<std::size_t>(u) * cols + v) * out_channels * in_channels;
    }
    cplx& at(int u, int v, int d, int c) { return data[bin_index(u, v) + static_cast<std::size_t>(d) * in_channels + c]; }
    cplx at(int u, int v, int d, int c) const {
        return data[bin_index(u, v) + static_cast<std::size_t>(d) * in_channels + c];
    }
};

// Mixing coefficients between input bins (u, v) and output bins (u', v')
// for size-changing layers.
struct AlphaField {
    int out_rows = 0, out_cols = 0;
    int in_rows = 0, in_cols = 0;
    std::vector<cplx> data;  // (u', v', u, v)

    cplx at(int up, int vp, int u, int v) const {
        return data[((static_cast<std::size_t>(up) * out_cols + vp) * in_rows + u) * in_cols + v];
    }
    cplx& at(int up, int vp, int u, int v) {
        return data[((static_cast<std::size_t>(up) * out_cols + vp) * in_rows + u) * in_cols + v];
    }
};

// Backprop mixing weights; they depend only on the index differences, so one
// M x N table covers all (u', v', u, v) combinations.
struct ChiTable {
    int rows = 0, cols = 0;
    std::vector<cplx> data;  // (du, dv)

    cplx diff(int du, int dv) const {
        return data[static_cast<std::size_t>(((du % rows) + rows) % rows) * cols + ((dv % cols) + cols) % cols];
    }
};

// Spectral image of one conv layer's weights: T(u,v)[d][c] =
// sum_{t,s<K} W[d][c][t][s] exp(+i 2 pi (u t / M + v s / N)).
TransferField compute_transfer_field(const ConvLayerSpec& layer, int rows, int cols);

// Same-size regime: alpha collapses to the exact Kronecker field. Padding
// free regime (out = in - K + 1 per axis): closed Dirichlet form. Anything
// else throws SizeRegimeUnsupported.
AlphaField compute_alpha(int out_rows, int out_cols, int in_rows, int in_cols, int kernel);

ChiTable compute_chi(int rows, int cols, int kernel);

// h(u,v) = T(u,v) g(u,v) + delta_{uv} M N b.
SpectrumMap propagate_layer_same(const TransferField& tf, const SpectrumMap& g,
                                 const std::vector<double>& biases);

// h(u',v') = delta M'N' b + sum_{u,v} alpha(u',v',u,v) T(u,v) g(u,v).
SpectrumMap propagate_layer_general(const TransferField& tf, const AlphaField& alpha, const SpectrumMap& g,
                                    const std::vector<double>& biases);

// Whole-network transfer: product field T^(L)...T^(1) plus the accumulated
// bias spectrum beta (nonzero at the fundamental only).
struct CascadeTransfer {
    TransferField product;
    std::vector<cplx> beta;
};

// Prefix products, prefix bias spectra and suffix products for every layer,
// so per-layer predictions and gradient predictions reuse one pass.
// prefix[l] = T^(l)...T^(1) applied to the input side (prefix[0] = identity),
// suffix[l] = T^(L)...T^(l+1) (suffix[L] = identity), beta[l] the bias
// spectrum of the first l layers.
struct CascadeParts {
    std::vector<TransferField> prefix;
    std::vector<std::vector<cplx>> beta;
    std::vector<TransferField> suffix;
};

CascadeTransfer cascade_transfer(const NetworkSpec& net, int input_channels, int rows, int cols);
CascadeParts cascade_parts(const NetworkSpec& net, int input_channels, int rows, int cols);

// Output spectrum of the cascade for input spectrum g.
SpectrumMap predict_output_spectrum(const CascadeTransfer& ct, const SpectrumMap& g);

// Predicted transfer-matrix change of layer `layer_index` (0-based) after one
// SGD step with rate eta on the MSE loss for (x, target).
TransferField predict_delta_T(const NetworkSpec& net, int layer_index, const FeatureMap& x,
                              const FeatureMap& target, double eta);

// Same computation with the pieces supplied by the caller: cascade parts of
// the network used for propagation, the input spectrum, and the conjugate
// loss gradient spectrum (1/MN * dft2 of the spatial loss gradient).
TransferField predict_delta_T_given(const CascadeParts& parts, int layer_index, int kernel,
                                    const SpectrumMap& g, const SpectrumMap& dloss_dhbar, double eta);

// Transfer-field difference of one layer between two parameter states.
TransferField measure_delta_T(const NetworkSpec& before, const NetworkSpec& after, int layer_index,
                              int rows, int cols);

// Flatten a transfer field into a spectrum map with one channel per (d, c)
// matrix entry, for similarity scoring and rendering.
SpectrumMap transfer_as_spectrum(const TransferField& tf);

}  // namespace spectral
