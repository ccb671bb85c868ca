#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "spectral/errors.hpp"
#include "spectral/experiments.hpp"
#include "spectral/rng.hpp"
#include "spectral/tensor.hpp"

using namespace spectral;

namespace {

std::string temp_dir(const std::string& name) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("spectral_exp_tests_" + std::to_string(counter++) + "_" + name);
    std::filesystem::create_directories(dir);
    return dir.string();
}

ExperimentConfig tiny_config(const std::string& experiment, int rows, int cols, int channels) {
    ExperimentConfig cfg;
    cfg.experiment = experiment;
    cfg.image_rows = rows;
    cfg.image_cols = cols;
    cfg.image_channels = channels;
    cfg.samples = 1;
    cfg.seed_list = {7};
    return cfg;
}

const NamedTable& find_table(const ExperimentResult& res, const std::string& name) {
    for (const auto& t : res.tables)
        if (t.name == name) return t;
    FAIL("missing table " << name);
    throw std::runtime_error("unreachable");
}

bool has_image(const ExperimentResult& res, const std::string& name) {
    for (const auto& im : res.images)
        if (im.name == name) return true;
    return false;
}

}  // namespace

TEST_CASE("powerlaw images are deterministic, normalized and spectrally sloped") {
    const FeatureMap a = synth_powerlaw_image(2, 16, 16, 2.0, 99);
    const FeatureMap b = synth_powerlaw_image(2, 16, 16, 2.0, 99);
    CHECK(a.data == b.data);
    const FeatureMap c = synth_powerlaw_image(2, 16, 16, 2.0, 100);
    CHECK(a.data != c.data);

    for (int ch = 0; ch < 2; ++ch) {
        double lo = 1.0, hi = 0.0;
        for (int m = 0; m < 16; ++m)
            for (int n = 0; n < 16; ++n) {
                lo = std::min(lo, a.at(ch, m, n));
                hi = std::max(hi, a.at(ch, m, n));
            }
        CHECK(lo == 0.0);
        CHECK(hi == 1.0);
    }

    // min-max normalization rescales every bin but the fundamental uniformly,
    // so magnitude ratios still follow (1 + radius)^-exponent
    const SpectrumMap g = dft2(a);
    const double r1 = std::abs(g.at(0, 1, 0));
    const double r2 = std::abs(g.at(0, 2, 0));
    const double r22 = std::abs(g.at(0, 2, 2));
    CHECK(r1 / r2 == doctest::Approx(std::pow(3.0 / 2.0, 2.0)).epsilon(1e-9));
    CHECK(r1 / r22 == doctest::Approx(std::pow((1.0 + std::sqrt(8.0)) / 2.0, 2.0)).epsilon(1e-9));

    CHECK_THROWS_AS(synth_powerlaw_image(0, 8, 8, 2.0, 1), ShapeMismatch);
    CHECK_THROWS_AS(synth_powerlaw_image(1, 1, 8, 2.0, 1), ShapeMismatch);
}

TEST_CASE("dataset batches follow the configured source") {
    ExperimentConfig cfg = tiny_config("render-spectrum", 6, 5, 2);
    cfg.dataset = "constant";
    const auto flat = dataset_images(cfg, 3, 11);
    REQUIRE(flat.size() == 3u);
    CHECK(flat[1].rows == 6);
    CHECK(flat[1].cols == 5);
    CHECK(flat[1].channels == 2);
    for (const double v : flat[2].data) CHECK(v == 0.5);

    cfg.dataset = "powerlaw";
    cfg.exponent = 1.5;
    const auto drawn = dataset_images(cfg, 2, 11);
    REQUIRE(drawn.size() == 2u);
    CHECK(drawn[0].data == synth_powerlaw_image(2, 6, 5, 1.5, derive_seed(11, 1000)).data);
    CHECK(drawn[1].data == synth_powerlaw_image(2, 6, 5, 1.5, derive_seed(11, 1001)).data);

    cfg.dataset = "bogus";
    CHECK_THROWS_AS(dataset_images(cfg, 1, 11), ConfigError);
}

TEST_CASE("pgm directory datasets load sorted and validated") {
    const std::string dir = temp_dir("pgms");
    GrayImage img;
    img.rows = 4;
    img.cols = 4;
    img.pixels.assign(16, 0);
    img.pixels[0] = 255;
    write_pgm(img, dir + "/b.pgm");
    img.pixels[0] = 51;
    write_pgm(img, dir + "/a.pgm");

    ExperimentConfig cfg = tiny_config("render-spectrum", 4, 4, 1);
    cfg.dataset = "pgm-dir";
    cfg.dataset_dir = dir;
    const auto batch = dataset_images(cfg, 2, 1);
    REQUIRE(batch.size() == 2u);
    CHECK(batch[0].at(0, 0, 0) == doctest::Approx(0.2).epsilon(1e-12));  // a.pgm first
    CHECK(batch[1].at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(dataset_images(cfg, 3, 1), ConfigError);  // only two files
    cfg.image_channels = 3;
    CHECK_THROWS_AS(dataset_images(cfg, 1, 1), ConfigError);
    cfg.image_channels = 1;
    cfg.image_rows = 8;
    CHECK_THROWS_AS(dataset_images(cfg, 1, 1), ConfigError);  // dims differ
}

TEST_CASE("padding swaps keep weights and upsample layers") {
    NetworkSpec net;
    ConvLayerSpec a;
    a.in_channels = 1;
    a.out_channels = 2;
    a.kernel = 3;
    a.padding = Padding::zero_same;
    ConvLayerSpec b = a;
    b.in_channels = 2;
    b.padding = Padding::none;
    net.layers = {a, UpsampleSpec{2}, b};
    init_network(net, 77);

    const NetworkSpec circ = circularized(net);
    REQUIRE(circ.layers.size() == 3u);
    CHECK(std::get<ConvLayerSpec>(circ.layers[0]).padding == Padding::circular);
    CHECK(std::get<ConvLayerSpec>(circ.layers[2]).padding == Padding::circular);
    CHECK(std::get<UpsampleSpec>(circ.layers[1]).ratio == 2);
    CHECK(std::get<ConvLayerSpec>(circ.layers[0]).weights ==
          std::get<ConvLayerSpec>(net.layers[0]).weights);
    CHECK(std::get<ConvLayerSpec>(circ.layers[2]).biases ==
          std::get<ConvLayerSpec>(net.layers[2]).biases);
    CHECK(std::get<ConvLayerSpec>(net.layers[0]).padding == Padding::zero_same);  // source untouched

    const NetworkSpec none = with_padding(net, Padding::none);
    CHECK(std::get<ConvLayerSpec>(none.layers[0]).padding == Padding::none);
}

TEST_CASE("block averaging pools exact means") {
    FeatureMap x(1, 4, 4);
    for (int i = 0; i < 16; ++i) x.data[i] = static_cast<double>(i);
    const FeatureMap y = average_pool(x, 2);
    REQUIRE(y.rows == 2);
    REQUIRE(y.cols == 2);
    CHECK(y.at(0, 0, 0) == doctest::Approx((0.0 + 1 + 4 + 5) / 4).epsilon(1e-15));
    CHECK(y.at(0, 1, 1) == doctest::Approx((10.0 + 11 + 14 + 15) / 4).epsilon(1e-15));
    const FeatureMap same = average_pool(x, 1);
    CHECK(same.data == x.data);
    FeatureMap odd(1, 5, 4);
    CHECK_THROWS_AS(average_pool(odd, 2), ShapeMismatch);
    CHECK_THROWS_AS(average_pool(x, 0), ShapeMismatch);
}

TEST_CASE("line fits recover exact lines") {
    const LineFit f = fit_line({1.0, 4.0, 7.0, 10.0});
    CHECK(f.slope == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));

    const LineFit flat = fit_line({2.0, 2.0, 2.0});
    CHECK(flat.slope == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(flat.r2 == 1.0);

    const LineFit noisy = fit_line({0.0, 2.0, 1.0});
    CHECK(noisy.r2 < 1.0);
    CHECK_THROWS_AS(fit_line({1.0}), InsufficientSamples);
}

TEST_CASE("zero padding measurements agree with the prediction") {
    const ZeroPadMeasurement m = zero_pad_measure(0.5, 0.25, 2, 2, 4, 4, 4000, 313);
    const ZeroPadMeasurement m2 = zero_pad_measure(0.5, 0.25, 2, 2, 4, 4, 4000, 313);
    CHECK(m.measured.data == m2.measured.data);
    CHECK(m.se.data == m2.se.data);

    const FeatureMap pred = zero_pad_expected_signal(0.5, 2, 2, 4, 4);
    REQUIRE(m.measured.rows == 4);
    REQUIRE(m.measured.cols == 4);
    // padding preserves the total sum, so the fundamental difference is exactly zero
    CHECK(m.measured.at(0, 0, 0) == 0.0);
    CHECK(m.se.at(0, 0, 0) == 0.0);
    for (int u = 0; u < 4; ++u)
        for (int v = 0; v < 4; ++v) {
            if (u == 0 && v == 0) continue;
            CHECK(m.se.at(0, u, v) > 0.0);
            CHECK(std::abs(m.measured.at(0, u, v) - pred.at(0, u, v)) < 5.0 * m.se.at(0, u, v) + 1e-12);
        }

    CHECK_THROWS_AS(zero_pad_measure(0.5, 0.25, 2, 2, 4, 4, 1, 1), InsufficientSamples);
    CHECK_THROWS_AS(zero_pad_measure(0.5, 0.25, 4, 4, 2, 4, 10, 1), ShapeMismatch);
}

TEST_CASE("forward verification reports exact circular similarity") {
    ExperimentConfig cfg = tiny_config("verify-forward", 12, 12, 1);
    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.experiment == "verify-forward");
    const NamedTable& t = find_table(res, "similarity");
    REQUIRE(t.table.rows.size() == 30u);  // 3 variants x 10 layers
    int circular_rows = 0;
    for (const auto& row : t.table.rows)
        if (row[0] == "circular_linear") {
            ++circular_rows;
            CHECK(std::stod(row[2]) >= 1.0 - 1e-6);
        }
    CHECK(circular_rows == 10);

    const ExperimentResult res2 = run_experiment(cfg);
    CHECK(res2.tables[0].table.rows == t.table.rows);
}

TEST_CASE("backward verification reports exact circular similarity") {
    ExperimentConfig cfg = tiny_config("verify-backward", 8, 8, 1);
    const ExperimentResult res = run_experiment(cfg);
    const NamedTable& t = find_table(res, "similarity");
    REQUIRE(t.table.rows.size() == 30u);
    for (const auto& row : t.table.rows)
        if (row[0] == "circular_linear") CHECK(std::stod(row[2]) >= 0.999);
}

TEST_CASE("depth experiment emits curves, fits and renders") {
    ExperimentConfig cfg = tiny_config("depth-som", 8, 8, 1);
    const ExperimentResult res = run_experiment(cfg);
    CHECK(find_table(res, "som_curve").table.rows.size() == 20u);
    CHECK(find_table(res, "growth_fit").table.rows.size() == 1u);
    CHECK(has_image(res, "som_layer_01"));
    CHECK(has_image(res, "som_layer_20"));
}

TEST_CASE("kernel size experiment is deterministic") {
    ExperimentConfig cfg = tiny_config("kernel-size", 12, 12, 1);
    cfg.seed_list = {1, 2};
    const ExperimentResult res = run_experiment(cfg);
    const NamedTable& t = find_table(res, "p_low");
    REQUIRE(t.table.rows.size() == 3u);
    CHECK(t.table.rows[0][0] == "1");
    CHECK(t.table.rows[2][0] == "5");
    const ExperimentResult res2 = run_experiment(cfg);
    CHECK(find_table(res2, "p_low").table.rows == t.table.rows);
}

TEST_CASE("mean bias experiment cross-checks the fundamental moment") {
    ExperimentConfig cfg = tiny_config("mean-bias", 12, 12, 1);
    const ExperimentResult res = run_experiment(cfg);
    CHECK(find_table(res, "p_low").table.rows.size() == 3u);
    const NamedTable& xt = find_table(res, "fundamental_som");
    REQUIRE(xt.table.rows.size() == 3u);
    for (const auto& row : xt.table.rows) {
        CHECK(std::stod(row[1]) > 0.0);
        CHECK(std::stod(row[2]) > 0.0);
        CHECK(std::isfinite(std::stod(row[3])));
    }
}

TEST_CASE("padding experiment compares regimes and the pad prediction") {
    ExperimentConfig cfg = tiny_config("padding", 16, 16, 1);
    const ExperimentResult res = run_experiment(cfg);
    CHECK(find_table(res, "p_low").table.rows.size() == 2u);
    const NamedTable& pt = find_table(res, "pad_prediction");
    REQUIRE(pt.table.rows.size() == 100u);  // 10 x 10 padded bins
    int agreeing = 0;
    for (const auto& row : pt.table.rows) {
        CHECK(std::stod(row[4]) >= 0.0);
        REQUIRE((row[5] == "0" || row[5] == "1"));
        agreeing += row[5] == "1";
    }
    CHECK(agreeing >= 95);
}

TEST_CASE("upsampling experiment tracks replica attenuation per block") {
    ExperimentConfig cfg = tiny_config("upsampling", 16, 16, 1);
    const ExperimentResult res = run_experiment(cfg);
    const NamedTable& t = find_table(res, "attenuation");
    REQUIRE(t.table.rows.size() == 4u);
    CHECK(t.table.rows[0][1] == "8");  // first block doubles the 4x4 start
    CHECK(t.table.rows[3][1] == "64");
    CHECK(has_image(res, "block4_upsampled"));
    CHECK(has_image(res, "block4_convolved"));
}

TEST_CASE("training demo walks the loss curve") {
    ExperimentConfig cfg = tiny_config("train-demo", 16, 16, 1);
    cfg.epochs = 3;
    const ExperimentResult res = run_experiment(cfg);
    CHECK(find_table(res, "training_curve").table.rows.size() == 4u);  // epochs + 1 evals
    CHECK(find_table(res, "seed_summary").table.rows.size() == 1u);
    CHECK(has_image(res, "spectrum_initial"));
    CHECK(has_image(res, "spectrum_final"));
    CHECK(has_image(res, "spectrum_target"));
    CHECK_THROWS_AS(run_experiment(tiny_config("train-demo", 15, 16, 1)), ConfigError);
}

TEST_CASE("spectrum rendering works with and without a network") {
    ExperimentConfig cfg = tiny_config("render-spectrum", 8, 8, 1);
    const ExperimentResult plain = run_experiment(cfg);
    CHECK(plain.trends_ok);
    REQUIRE(plain.images.size() == 1u);
    CHECK(plain.images[0].name == "spectrum");
    CHECK(plain.images[0].image.rows == 8);

    NetworkSpec net;
    ConvLayerSpec c;
    c.in_channels = 1;
    c.out_channels = 2;
    c.kernel = 3;
    c.padding = Padding::zero_same;
    c.init_std = 0.2;
    net.layers = {c};
    cfg.network = net;
    const ExperimentResult fed = run_experiment(cfg);
    CHECK(fed.images[0].image.rows == 8);
}

TEST_CASE("transfer dumps need a network with a conv at the layer index") {
    ExperimentConfig cfg = tiny_config("dump-transfer", 8, 8, 1);
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);

    NetworkSpec net;
    ConvLayerSpec c;
    c.in_channels = 1;
    c.out_channels = 2;
    c.kernel = 3;
    c.padding = Padding::circular;
    c.init_std = 0.2;
    net.layers = {c, UpsampleSpec{2}};
    cfg.network = net;
    cfg.layer_index = 0;
    const ExperimentResult res = run_experiment(cfg);
    CHECK(find_table(res, "transfer").table.rows.size() == 128u);  // 8 x 8 x 2 x 1
    CHECK(has_image(res, "transfer_magnitude"));

    cfg.layer_index = 1;
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
    cfg.layer_index = 5;
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("unknown experiments are rejected") {
    CHECK_THROWS_AS(run_experiment(tiny_config("fourier-party", 8, 8, 1)), ConfigError);
}

TEST_CASE("results land on disk as csv, pgm and summary") {
    ExperimentResult res;
    res.experiment = "render-spectrum";
    res.trends_ok = false;
    res.summary = {"first line", "second line"};
    CsvTable t;
    t.header = {"a"};
    t.add_row({"1"});
    res.tables.push_back({"numbers", t});
    GrayImage im;
    im.rows = 1;
    im.cols = 2;
    im.pixels = {0, 255};
    res.images.push_back({"tiny", im});

    const std::string dir = temp_dir("result") + "/nested";
    write_result(res, dir);
    CHECK(std::filesystem::exists(dir + "/numbers.csv"));
    CHECK(std::filesystem::exists(dir + "/tiny.pgm"));
    std::ifstream is(dir + "/summary.txt", std::ios::binary);
    const std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    CHECK(text == "experiment: render-spectrum\nfirst line\nsecond line\ntrends: failed\n");
}
