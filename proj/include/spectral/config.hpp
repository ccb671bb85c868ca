#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spectral/network.hpp"

namespace spectral {

// Everything an experiment run depends on. A (config, seed) pair fully
// determines every output byte.
struct ExperimentConfig {
    int schema_version = 1;
    std::string experiment;
    std::optional<std::uint64_t> seed;  // resolved against flag/env by the caller
    std::vector<std::uint64_t> seed_list;  // explicit multi-seed override
    std::optional<int> num_seeds;  // each experiment has its own default
    int image_rows = 32;
    int image_cols = 32;
    int image_channels = 3;
    int samples = 3;
    int epochs = 200;
    double learning_rate = 0.01;
    double exponent = 1.4;
    std::string dataset = "powerlaw";  // powerlaw | constant | pgm-dir
    std::string dataset_dir;
    int layer_index = 0;
    bool clamp_fundamental = true;
    int jobs = 0;  // 0 = hardware concurrency
    std::string out_dir = "out";
    std::optional<NetworkSpec> network;

    std::uint64_t base_seed() const { return seed.value_or(42); }

    int seed_count(int fallback) const {
        if (!seed_list.empty()) return static_cast<int>(seed_list.size());
        return num_seeds.value_or(fallback);
    }

    std::vector<std::uint64_t> seeds(int count) const;
};

}  // namespace spectral
