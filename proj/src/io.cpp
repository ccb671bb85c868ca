#include "spectral/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "spectral/errors.hpp"
#include "spectral/rng.hpp"

namespace spectral {

void write_pgm(const GrayImage& img, const std::string& path) {
    if (img.rows <= 0 || img.cols <= 0 ||
        img.pixels.size() != static_cast<std::size_t>(img.rows) * img.cols)
        throw ShapeMismatch("write_pgm: image dimensions do not match the pixel buffer");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << "P5\n" << img.cols << ' ' << img.rows << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.pixels.data()),
             static_cast<std::streamsize>(img.pixels.size()));
    if (!os) throw IoError("write failed for " + path);
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::string magic;
    is >> magic;
    if (magic != "P5") throw IoError(path + " is not a binary PGM");
    long long w = 0, h = 0, maxval = 0;
    is >> w >> h >> maxval;
    if (!is || w <= 0 || h <= 0) throw IoError(path + " has a malformed PGM header");
    if (maxval != 255) throw IoError(path + " uses maxval " + std::to_string(maxval) + ", expected 255");
    is.get();  // single whitespace after the header
    GrayImage img;
    img.rows = static_cast<int>(h);
    img.cols = static_cast<int>(w);
    img.pixels.resize(static_cast<std::size_t>(w) * h);
    is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!is) throw IoError(path + " ends before its pixel data does");
    return img;
}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != header.size())
        throw ShapeMismatch("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(header.size()));
    rows.push_back(std::move(cells));
}

std::string csv_num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

std::string csv_int(long long x) { return std::to_string(x); }

void write_csv(const CsvTable& table, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    for (std::size_t i = 0; i < table.header.size(); ++i)
        os << (i ? "," : "") << table.header[i];
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << '\n';
    }
    if (!os) throw IoError("write failed for " + path);
}

std::vector<std::uint64_t> ExperimentConfig::seeds(int count) const {
    if (!seed_list.empty())
        return {seed_list.begin(), seed_list.begin() + std::min<std::size_t>(count, seed_list.size())};
    std::vector<std::uint64_t> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[i] = derive_seed(base_seed(), static_cast<std::uint64_t>(i));
    return out;
}

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
}

int int_in_range(const json& v, const std::string& name, long long lo, long long hi) {
    if (!v.is_number_integer())
        throw ConfigError(name + " must be an integer");
    const long long x = v.get<long long>();
    if (x < lo || x > hi)
        throw ConfigError(name + " = " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    return static_cast<int>(x);
}

double num_positive(const json& v, const std::string& name) {
    if (!v.is_number()) throw ConfigError(name + " must be a number");
    const double x = v.get<double>();
    if (!(x > 0.0)) throw ConfigError(name + " must be positive");
    return x;
}

Padding parse_padding(const std::string& s) {
    if (s == "circular") return Padding::circular;
    if (s == "zero_same") return Padding::zero_same;
    if (s == "zero_one_side") return Padding::zero_one_side;
    if (s == "none") return Padding::none;
    throw ConfigError("unknown padding mode \"" + s + "\"");
}

Activation parse_activation(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    throw ConfigError("unknown activation \"" + s + "\"");
}

NetworkSpec parse_network(const json& j) {
    require_keys(j, {"learning_rate", "layers"}, "network");
    if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty())
        throw ConfigError("network.layers must be a non-empty array");
    NetworkSpec net;
    if (j.contains("learning_rate")) net.learning_rate = num_positive(j["learning_rate"], "learning_rate");
    int index = 0;
    for (const auto& lj : j["layers"]) {
        const std::string where = "network.layers[" + std::to_string(index++) + "]";
        if (!lj.is_object() || !lj.contains("type")) throw ConfigError(where + " needs a type");
        const std::string type = lj["type"].get<std::string>();
        if (type == "upsample") {
            require_keys(lj, {"type", "ratio"}, where);
            UpsampleSpec up;
            up.ratio = lj.contains("ratio") ? int_in_range(lj["ratio"], where + ".ratio", 1, 8) : 2;
            net.layers.emplace_back(up);
        } else if (type == "conv") {
            require_keys(lj,
                         {"type", "in", "out", "kernel", "padding", "activation", "init_mean", "init_std",
                          "zero_bias", "pad_rows", "pad_cols"},
                         where);
            ConvLayerSpec conv;
            if (!lj.contains("in") || !lj.contains("out") || !lj.contains("kernel"))
                throw ConfigError(where + " needs in, out and kernel");
            conv.in_channels = int_in_range(lj["in"], where + ".in", 1, 64);
            conv.out_channels = int_in_range(lj["out"], where + ".out", 1, 64);
            conv.kernel = int_in_range(lj["kernel"], where + ".kernel", 1, 16);
            if (lj.contains("padding")) conv.padding = parse_padding(lj["padding"].get<std::string>());
            if (lj.contains("activation"))
                conv.activation = parse_activation(lj["activation"].get<std::string>());
            if (lj.contains("init_mean")) conv.init_mean = lj["init_mean"].get<double>();
            if (lj.contains("init_std")) {
                conv.init_std = lj["init_std"].get<double>();
                if (conv.init_std < 0.0) throw ConfigError(where + ".init_std must be nonnegative");
            } else {
                conv.init_std = 0.1;
            }
            if (lj.contains("zero_bias")) conv.zero_bias = lj["zero_bias"].get<bool>();
            if (conv.padding == Padding::zero_one_side) {
                if (!lj.contains("pad_rows") || !lj.contains("pad_cols"))
                    throw ConfigError(where + " with zero_one_side needs pad_rows and pad_cols");
                conv.pad_rows = int_in_range(lj["pad_rows"], where + ".pad_rows", 2, 64);
                conv.pad_cols = int_in_range(lj["pad_cols"], where + ".pad_cols", 2, 64);
            }
            net.layers.emplace_back(std::move(conv));
        } else {
            throw ConfigError(where + " has unknown layer type \"" + type + "\"");
        }
    }
    return net;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");
    require_keys(j,
                 {"schema_version", "experiment", "seed", "seeds", "num_seeds", "image", "samples",
                  "epochs", "learning_rate", "exponent", "dataset", "out_dir", "jobs", "layer_index",
                  "clamp_fundamental", "network"},
                 "config");
    ExperimentConfig cfg;
    if (j.contains("schema_version")) {
        cfg.schema_version = int_in_range(j["schema_version"], "schema_version", 1, 1);
    }
    if (!j.contains("experiment") || !j["experiment"].is_string())
        throw ConfigError("config needs an \"experiment\" string");
    cfg.experiment = j["experiment"].get<std::string>();
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            throw ConfigError("seed must be an integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("seeds")) {
        if (!j["seeds"].is_array() || j["seeds"].empty())
            throw ConfigError("seeds must be a non-empty array");
        for (const auto& s : j["seeds"]) cfg.seed_list.push_back(s.get<std::uint64_t>());
    }
    if (j.contains("num_seeds")) cfg.num_seeds = int_in_range(j["num_seeds"], "num_seeds", 1, 64);
    if (j.contains("image")) {
        const auto& img = j["image"];
        require_keys(img, {"size", "rows", "cols", "channels"}, "image");
        if (img.contains("size")) {
            cfg.image_rows = cfg.image_cols = int_in_range(img["size"], "image.size", 2, 64);
        }
        if (img.contains("rows")) cfg.image_rows = int_in_range(img["rows"], "image.rows", 2, 64);
        if (img.contains("cols")) cfg.image_cols = int_in_range(img["cols"], "image.cols", 2, 64);
        if (img.contains("channels")) cfg.image_channels = int_in_range(img["channels"], "image.channels", 1, 16);
    }
    if (j.contains("samples")) cfg.samples = int_in_range(j["samples"], "samples", 1, 64);
    if (j.contains("epochs")) cfg.epochs = int_in_range(j["epochs"], "epochs", 1, 200);
    if (j.contains("learning_rate")) cfg.learning_rate = num_positive(j["learning_rate"], "learning_rate");
    if (j.contains("exponent")) {
        if (!j["exponent"].is_number()) throw ConfigError("exponent must be a number");
        cfg.exponent = j["exponent"].get<double>();
        if (cfg.exponent < 0.0 || cfg.exponent > 16.0)
            throw ConfigError("exponent outside [0, 16]");
    }
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        if (d.is_string()) {
            cfg.dataset = d.get<std::string>();
        } else if (d.is_object()) {
            require_keys(d, {"source", "path", "exponent"}, "dataset");
            if (d.contains("source")) cfg.dataset = d["source"].get<std::string>();
            if (d.contains("path")) cfg.dataset_dir = d["path"].get<std::string>();
            if (d.contains("exponent")) cfg.exponent = d["exponent"].get<double>();
        } else {
            throw ConfigError("dataset must be a string or object");
        }
        if (cfg.dataset != "powerlaw" && cfg.dataset != "constant" && cfg.dataset != "pgm-dir")
            throw ConfigError("unknown dataset source \"" + cfg.dataset + "\"");
        if (cfg.dataset == "pgm-dir" && cfg.dataset_dir.empty())
            throw ConfigError("dataset source pgm-dir needs a path");
    }
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("jobs")) cfg.jobs = int_in_range(j["jobs"], "jobs", 0, 64);
    if (j.contains("layer_index")) cfg.layer_index = int_in_range(j["layer_index"], "layer_index", 0, 63);
    if (j.contains("clamp_fundamental")) {
        if (!j["clamp_fundamental"].is_boolean()) throw ConfigError("clamp_fundamental must be a boolean");
        cfg.clamp_fundamental = j["clamp_fundamental"].get<bool>();
    }
    if (j.contains("network")) cfg.network = parse_network(j["network"]);
    return cfg;
}

}  // namespace spectral
