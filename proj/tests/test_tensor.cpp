#include <doctest.h>

#include <cmath>
#include <complex>
#include <set>
#include <vector>

#include "spectral/errors.hpp"
#include "spectral/rng.hpp"
#include "spectral/tensor.hpp"

using namespace spectral;

namespace {

FeatureMap random_map(int channels, int rows, int cols, std::uint64_t seed) {
    FeatureMap f(channels, rows, cols);
    SplitMix64 gen(seed);
    for (auto& v : f.data) v = 2.0 * gen.next_unit() - 1.0;
    return f;
}

cplx brute_dirichlet(double theta, int n) {
    cplx acc{};
    for (int k = 0; k < n; ++k) acc += std::polar(1.0, theta * k);
    return acc;
}

}  // namespace

TEST_CASE("unit roots are snapped and mirrored") {
    for (int n : {2, 5, 8, 12, 17}) {
        const auto w = unit_roots(n, -1);
        REQUIRE(static_cast<int>(w.size()) == n);
        CHECK(w[0] == cplx(1.0, 0.0));
        if (n % 2 == 0) CHECK(w[n / 2] == cplx(-1.0, 0.0));
        for (int k = 1; k < n; ++k) CHECK(w[n - k] == std::conj(w[k]));
        const auto wp = unit_roots(n, +1);
        for (int k = 0; k < n; ++k) CHECK(wp[k] == std::conj(w[k]));
    }
}

TEST_CASE("dft2 on the 2x2 reference block") {
    FeatureMap f(1, 2, 2);
    f.at(0, 0, 0) = 1.0;
    f.at(0, 0, 1) = 2.0;
    f.at(0, 1, 0) = 3.0;
    f.at(0, 1, 1) = 4.0;
    const SpectrumMap g = dft2(f);
    CHECK(g.at(0, 0, 0) == cplx(10.0, 0.0));
    CHECK(g.at(0, 0, 1) == cplx(-2.0, 0.0));
    CHECK(g.at(0, 1, 0) == cplx(-4.0, 0.0));
    CHECK(g.at(0, 1, 1) == cplx(0.0, 0.0));
}

TEST_CASE("dft2 concentrates a pure cosine line") {
    FeatureMap f(1, 3, 3);
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) f.at(0, m, n) = std::cos(kTwoPi * m / 3.0);
    const SpectrumMap g = dft2(f);
    for (int u = 0; u < 3; ++u)
        for (int v = 0; v < 3; ++v) {
            const double want = (v == 0 && (u == 1 || u == 2)) ? 4.5 : 0.0;
            CHECK(std::abs(g.at(0, u, v) - want) < 1e-12);
        }
}

TEST_CASE("dft2 transforms channels independently") {
    const FeatureMap f = random_map(2, 4, 5, 11);
    FeatureMap c0(1, 4, 5), c1(1, 4, 5);
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 5; ++n) {
            c0.at(0, m, n) = f.at(0, m, n);
            c1.at(0, m, n) = f.at(1, m, n);
        }
    const SpectrumMap g = dft2(f), g0 = dft2(c0), g1 = dft2(c1);
    for (int u = 0; u < 4; ++u)
        for (int v = 0; v < 5; ++v) {
            CHECK(g.at(0, u, v) == g0.at(0, u, v));
            CHECK(g.at(1, u, v) == g1.at(0, u, v));
        }
}

TEST_CASE("dft2 satisfies Parseval") {
    const FeatureMap f = random_map(3, 5, 7, 22);
    const SpectrumMap g = dft2(f);
    double space = 0.0, freq = 0.0;
    for (double v : f.data) space += v * v;
    for (const cplx& z : g.data) freq += std::norm(z);
    CHECK(freq == doctest::Approx(space * 5.0 * 7.0).epsilon(1e-12));
}

TEST_CASE("real input spectra are conjugate symmetric as an identity") {
    for (auto [rows, cols] : std::vector<std::pair<int, int>>{{2, 2}, {4, 6}, {3, 5}, {8, 8}}) {
        const FeatureMap f = random_map(2, rows, cols, 100 + rows * 10 + cols);
        const SpectrumMap g = dft2(f);
        for (int c = 0; c < 2; ++c)
            for (int u = 0; u < rows; ++u)
                for (int v = 0; v < cols; ++v)
                    CHECK(g.at(c, u, v) == std::conj(g.at(c, (rows - u) % rows, (cols - v) % cols)));
    }
}

TEST_CASE("dft2 is linear") {
    const FeatureMap f = random_map(1, 4, 4, 31);
    const FeatureMap h = random_map(1, 4, 4, 32);
    FeatureMap mix(1, 4, 4);
    for (std::size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = 2.5 * f.data[i] - 0.75 * h.data[i];
    const SpectrumMap gm = dft2(mix), gf = dft2(f), gh = dft2(h);
    for (std::size_t i = 0; i < gm.data.size(); ++i)
        CHECK(std::abs(gm.data[i] - (2.5 * gf.data[i] - 0.75 * gh.data[i])) < 1e-12);
}

TEST_CASE("idft2 inverts dft2") {
    const FeatureMap f = random_map(2, 6, 4, 77);
    const FeatureMap back = idft2(dft2(f));
    REQUIRE(back.same_shape(f));
    for (std::size_t i = 0; i < f.data.size(); ++i)
        CHECK(back.data[i] == doctest::Approx(f.data[i]).epsilon(1e-12));
}

TEST_CASE("idft2 rejects spectra with an imaginary inverse") {
    SpectrumMap g(1, 1, 2);
    g.at(0, 0, 1) = cplx(0.0, 1.0);  // self-conjugate bin carrying imaginary mass
    CHECK_THROWS_AS(idft2(g), SymmetryViolation);
}

TEST_CASE("dirichlet_sum matches the direct sum") {
    SplitMix64 gen(5);
    for (int i = 0; i < 1000; ++i) {
        const double theta = 20.0 * gen.next_unit() - 10.0;
        const int n = 1 + static_cast<int>(gen.next() % 12);
        const cplx want = brute_dirichlet(theta, n);
        CHECK(std::abs(dirichlet_sum(theta, n) - want) < 1e-10 * n);
    }
}

TEST_CASE("dirichlet_sum limit cases are exact") {
    CHECK(dirichlet_sum(0.0, 7) == cplx(7.0, 0.0));
    CHECK(dirichlet_sum(4.0 * kPi, 5) == cplx(5.0, 0.0));
    CHECK(dirichlet_sum(-2.0 * kPi, 3) == cplx(3.0, 0.0));
    CHECK(std::abs(dirichlet_sum(1.234, 1) - cplx(1.0, 0.0)) < 1e-15);
}

TEST_CASE("fftshift moves the fundamental to the center") {
    FeatureMap f(1, 2, 2);
    f.at(0, 0, 0) = 1.0;
    f.at(0, 0, 1) = 2.0;
    f.at(0, 1, 0) = 3.0;
    f.at(0, 1, 1) = 4.0;
    const FeatureMap s = fftshift(f);
    CHECK(s.at(0, 0, 0) == 4.0);
    CHECK(s.at(0, 0, 1) == 3.0);
    CHECK(s.at(0, 1, 0) == 2.0);
    CHECK(s.at(0, 1, 1) == 1.0);

    FeatureMap odd(1, 3, 3);
    odd.at(0, 0, 0) = 9.0;
    CHECK(fftshift(odd).at(0, 1, 1) == 9.0);

    const FeatureMap r = random_map(2, 4, 6, 8);
    const FeatureMap twice = fftshift(fftshift(r));
    for (std::size_t i = 0; i < r.data.size(); ++i) CHECK(twice.data[i] == r.data[i]);

    SpectrumMap g(1, 2, 2);
    g.at(0, 0, 0) = cplx(5.0, 1.0);
    CHECK(fftshift(g).at(0, 1, 1) == cplx(5.0, 1.0));
}

TEST_CASE("cosine similarity compares magnitude maps per channel") {
    SpectrumMap a(1, 2, 2), b(1, 2, 2);
    a.at(0, 0, 0) = cplx(3.0, 4.0);
    b.at(0, 0, 0) = cplx(0.0, -10.0);  // same magnitude direction, different phase
    CHECK(cosine_similarity_norm_maps(a, b) == doctest::Approx(1.0).epsilon(1e-12));

    SpectrumMap c = a;
    for (auto& z : c.data) z *= 7.5;
    CHECK(cosine_similarity_norm_maps(a, c) == doctest::Approx(1.0).epsilon(1e-12));

    SpectrumMap d(1, 2, 2);
    d.at(0, 1, 1) = cplx(2.0, 0.0);
    CHECK(cosine_similarity_norm_maps(a, d) == doctest::Approx(0.0));

    SpectrumMap e2(2, 2, 2), f2(2, 2, 2);
    e2.at(0, 0, 0) = 1.0;
    f2.at(0, 0, 0) = 2.0;       // channel 0 aligned
    e2.at(1, 0, 0) = 1.0;
    f2.at(1, 1, 1) = 1.0;       // channel 1 orthogonal
    CHECK(cosine_similarity_norm_maps(e2, f2) == doctest::Approx(0.5));

    SpectrumMap zero(1, 2, 2);
    CHECK_THROWS_AS(cosine_similarity_norm_maps(a, zero), ZeroVector);
    SpectrumMap other(1, 2, 3);
    CHECK_THROWS_AS(cosine_similarity_norm_maps(a, other), ShapeMismatch);
}

TEST_CASE("splitmix64 reproduces the reference stream") {
    SplitMix64 g0(0);
    CHECK(g0.next() == 0xe220a8397b1dcdafull);
    CHECK(g0.next() == 0x6e789e6aa1b965f4ull);
    CHECK(g0.next() == 0x06c45d188009454full);
    SplitMix64 g42(42);
    CHECK(g42.next() == 0xbdd732262feb6e95ull);
    CHECK(g42.next() == 0x28efe333b266f103ull);
}

TEST_CASE("unit draws stay in range and gaussians have sane moments") {
    SplitMix64 gen(9);
    double sum = 0.0, sumsq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = gen.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double z = gen.next_gaussian(0.0, 1.0);
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("derive_seed matches its stream and avoids collisions") {
    CHECK(derive_seed(42, 0) == 0xbdd732262feb6e95ull);
    CHECK(derive_seed(42, 1) == 0x28efe333b266f103ull);
    CHECK(derive_seed(42, 2) == 0x47526757130f9f52ull);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(derive_seed(7, i));
    CHECK(seen.size() == 1000);
}
