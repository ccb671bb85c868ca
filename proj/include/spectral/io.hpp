#pragma once

#include <string>
#include <vector>

#include "spectral/analysis.hpp"
#include "spectral/config.hpp"

namespace spectral {

// Binary PGM (P5), maxval 255, LF-only header.
void write_pgm(const GrayImage& img, const std::string& path);
GrayImage read_pgm(const std::string& path);

// Cells are preformatted; numeric helpers below pin the 9-significant-digit
// float format the outputs use everywhere.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> cells);
};

std::string csv_num(double x);
std::string csv_int(long long x);

void write_csv(const CsvTable& table, const std::string& path);

// Strict JSON config loader: unknown keys, bad types and out-of-range desk
// sizes all raise ConfigError.
ExperimentConfig load_config(const std::string& path);

}  // namespace spectral
