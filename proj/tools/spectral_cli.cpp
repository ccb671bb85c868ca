#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "spectral/errors.hpp"
#include "spectral/experiments.hpp"
#include "spectral/io.hpp"

namespace {

bool parse_u64(const std::string& s, std::uint64_t& out) {
    if (s.empty() || s[0] < '0' || s[0] > '9') return false;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

struct SubcommandDesc {
    const char* name;
    const char* help;
};

constexpr SubcommandDesc kSubcommands[] = {
    {"verify-forward", "layerwise spectrum prediction vs measured forward pass"},
    {"verify-backward", "predicted transfer-matrix updates vs measured SGD steps"},
    {"depth-som", "low-band second-order moment growth with depth"},
    {"kernel-size", "low-frequency energy share vs kernel size"},
    {"mean-bias", "low-frequency energy share vs kernel init mean"},
    {"padding", "zero vs circular padding and the padding spectrum prediction"},
    {"upsampling", "spectrum tiling and replica attenuation through upsampling blocks"},
    {"train-demo", "small decoder trained on half resolution inputs, band error curves"},
    {"render-spectrum", "render the output spectrum of an image or a random network"},
    {"dump-transfer", "write one layer's transfer field as CSV"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral: cascaded convolutional decoders in the frequency domain"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed_flag = 0;
    int jobs = -1;
    std::vector<CLI::Option*> seed_opts;
    for (const auto& sc : kSubcommands) {
        CLI::App* sub = app.add_subcommand(sc.name, sc.help);
        sub->add_option("--config", config_path, "JSON config file");
        seed_opts.push_back(sub->add_option("--seed", seed_flag, "base seed override"));
        sub->add_option("--out", out_dir, "output directory override");
        sub->add_option("--jobs", jobs, "worker thread cap (0 = hardware)")->check(CLI::Range(0, 64));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        spectral::ExperimentConfig cfg;
        if (!config_path.empty()) {
            cfg = spectral::load_config(config_path);
            if (cfg.experiment != name)
                throw spectral::ConfigError("config is for experiment '" + cfg.experiment +
                                            "', subcommand is '" + name + "'");
        }
        cfg.experiment = name;

        bool seed_given = false;
        for (const auto* opt : seed_opts) seed_given = seed_given || opt->count() > 0;
        if (seed_given) {
            cfg.seed = seed_flag;
        } else if (const char* env = std::getenv("SPECTRAL_SEED")) {
            std::uint64_t v = 0;
            if (!parse_u64(env, v))
                throw spectral::ConfigError("SPECTRAL_SEED is not an unsigned integer: " +
                                            std::string(env));
            cfg.seed = v;
        }
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (jobs >= 0) cfg.jobs = jobs;

        const spectral::ExperimentResult result = spectral::run_experiment(cfg);
        spectral::write_result(result, cfg.out_dir);
        for (const auto& line : result.summary) std::cout << line << '\n';
        std::cout << "trends: " << (result.trends_ok ? "ok" : "failed") << '\n';
        std::cout << "artifacts: " << cfg.out_dir << '\n';
        return result.trends_ok ? 0 : 1;
    } catch (const spectral::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
