#ifndef STLABEL_CONFIG_HPP
#define STLABEL_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "errors.hpp"
#include "util.hpp"

/**
 * @file config.hpp
 *
 * Plain-text pipeline configuration: `key = value` lines under `[section]`
 * headers, `#` or `;` comments. Unknown sections or keys are errors so a
 * typo cannot silently fall back to a default. The raw file text is kept
 * for verbatim echoing into output manifests, and its FNV-1a hash is the
 * config identity used in cache keys.
 *
 *   [inputs]
 *   matrix = counts.mtx          # cells.txt / genes.txt sidecars by default
 *   cells = ids.txt              # optional sidecar override
 *   genes = genes.txt            # optional sidecar override
 *   boundaries = nuclei.geojson
 *   markers = panglao.tsv, cellmarker.tsv
 *   categories = categories.tsv
 *   cancer_genes = cancer.tsv
 *   slide = slide.txt
 *
 *   [preprocess]   target_sum, n_components, k
 *   [cluster]      resolution, max_iterations
 *   [labeling]     top_n, top_m, tau_vote, tau_cancer, binary_votes
 *   [tiling]       patch_size, stride
 *   [run]          seed, out
 */

namespace stlabel {

struct PipelineConfig {
    struct Inputs {
        std::string matrix;
        std::string cells;  // empty = sidecar next to matrix
        std::string genes;  // empty = sidecar next to matrix
        std::string boundaries;
        std::vector<std::string> markers;
        std::string categories;
        std::string cancer_genes;
        std::string slide;
    } inputs;

    double target_sum = 1e4;
    int64_t n_components = 50;
    int64_t k = 15;

    double resolution = 4.0;
    int64_t max_iterations = 100;

    int64_t top_n = 10;
    int64_t top_m = 20;
    double tau_vote = 5.0;
    double tau_cancer = 0.25;
    bool binary_votes = false;

    int64_t patch_size = 256;
    int64_t stride = 256;

    uint64_t seed = 0;
    std::string out;  // output directory; CLI --out overrides

    std::string raw_text;     // verbatim file contents
    std::string config_hash;  // hex FNV-1a of raw_text

    void validate() const {
        if (inputs.matrix.empty() || inputs.boundaries.empty() || inputs.markers.empty()
            || inputs.categories.empty() || inputs.cancer_genes.empty() || inputs.slide.empty()) {
            throw ValidationError(
                "config: [inputs] must set matrix, boundaries, markers, categories, "
                "cancer_genes and slide");
        }
        if (!(target_sum > 0.0)) {
            throw ValidationError("config: target_sum must be positive");
        }
        if (n_components < 1) {
            throw ValidationError("config: n_components must be at least 1");
        }
        if (k < 1) {
            throw ValidationError("config: k must be at least 1");
        }
        if (!(resolution > 0.0)) {
            throw ValidationError("config: resolution must be positive");
        }
        if (max_iterations < 1) {
            throw ValidationError("config: max_iterations must be at least 1");
        }
        if (top_n < 1 || top_m < 1) {
            throw ValidationError("config: top_n and top_m must be at least 1");
        }
        if (tau_vote < 0.0 || tau_cancer < 0.0) {
            throw ValidationError("config: thresholds must be non-negative");
        }
        if (patch_size < 1 || stride < 1) {
            throw ValidationError("config: patch_size and stride must be at least 1");
        }
    }
};

namespace config_detail {

inline std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty() || std::filesystem::path(path).is_absolute() || base_dir.empty()) {
        return path;
    }
    return (std::filesystem::path(base_dir) / path).string();
}

inline int64_t int_value(const std::string& key, const std::string& value) {
    int64_t v;
    if (!parse_int64(value, v)) {
        throw ValidationError("config: " + key + ": expected an integer, got '" + value + "'");
    }
    return v;
}

inline double double_value(const std::string& key, const std::string& value) {
    double v;
    if (!parse_double(value, v)) {
        throw ValidationError("config: " + key + ": expected a number, got '" + value + "'");
    }
    return v;
}

inline bool bool_value(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw ValidationError("config: " + key + ": expected true/false, got '" + value + "'");
}

}  // namespace config_detail

/// Parse config text. Relative input/output paths resolve against
/// `base_dir` (the config file's directory when loaded from disk).
inline PipelineConfig parse_config(const std::string& text, const std::string& base_dir = "") {
    using namespace config_detail;
    PipelineConfig cfg;
    cfg.raw_text = text;
    cfg.config_hash = hex64(fnv1a64(text));

    std::string section;
    int64_t lineno = 0;
    for (const auto& raw_line : split(text, '\n')) {
        ++lineno;
        auto line = trim(raw_line);
        if (line.empty() || line[0] == '#' || line[0] == ';') {
            continue;
        }
        auto fail = [&](const std::string& msg) {
            return ValidationError("config line " + std::to_string(lineno) + ": " + msg);
        };
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw fail("malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section != "inputs" && section != "preprocess" && section != "cluster"
                && section != "labeling" && section != "tiling" && section != "run") {
                throw fail("unknown section [" + section + "]");
            }
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw fail("expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) {
            throw fail("key '" + key + "' appears before any [section]");
        }
        const std::string qual = section + "." + key;

        if (section == "inputs") {
            if (key == "matrix") {
                cfg.inputs.matrix = resolve(base_dir, value);
            } else if (key == "cells") {
                cfg.inputs.cells = resolve(base_dir, value);
            } else if (key == "genes") {
                cfg.inputs.genes = resolve(base_dir, value);
            } else if (key == "boundaries") {
                cfg.inputs.boundaries = resolve(base_dir, value);
            } else if (key == "markers") {
                cfg.inputs.markers.clear();
                for (const auto& part : split(value, ',')) {
                    auto p = trim(part);
                    if (!p.empty()) {
                        cfg.inputs.markers.push_back(resolve(base_dir, p));
                    }
                }
            } else if (key == "categories") {
                cfg.inputs.categories = resolve(base_dir, value);
            } else if (key == "cancer_genes") {
                cfg.inputs.cancer_genes = resolve(base_dir, value);
            } else if (key == "slide") {
                cfg.inputs.slide = resolve(base_dir, value);
            } else {
                throw fail("unknown key '" + qual + "'");
            }
        } else if (section == "preprocess") {
            if (key == "target_sum") {
                cfg.target_sum = double_value(qual, value);
            } else if (key == "n_components") {
                cfg.n_components = int_value(qual, value);
            } else if (key == "k") {
                cfg.k = int_value(qual, value);
            } else {
                throw fail("unknown key '" + qual + "'");
            }
        } else if (section == "cluster") {
            if (key == "resolution") {
                cfg.resolution = double_value(qual, value);
            } else if (key == "max_iterations") {
                cfg.max_iterations = int_value(qual, value);
            } else {
                throw fail("unknown key '" + qual + "'");
            }
        } else if (section == "labeling") {
            if (key == "top_n") {
                cfg.top_n = int_value(qual, value);
            } else if (key == "top_m") {
                cfg.top_m = int_value(qual, value);
            } else if (key == "tau_vote") {
                cfg.tau_vote = double_value(qual, value);
            } else if (key == "tau_cancer") {
                cfg.tau_cancer = double_value(qual, value);
            } else if (key == "binary_votes") {
                cfg.binary_votes = bool_value(qual, value);
            } else {
                throw fail("unknown key '" + qual + "'");
            }
        } else if (section == "tiling") {
            if (key == "patch_size") {
                cfg.patch_size = int_value(qual, value);
            } else if (key == "stride") {
                cfg.stride = int_value(qual, value);
            } else {
                throw fail("unknown key '" + qual + "'");
            }
        } else {  // run
            if (key == "seed") {
                const int64_t s = int_value(qual, value);
                if (s < 0) {
                    throw fail("seed must be non-negative");
                }
                cfg.seed = static_cast<uint64_t>(s);
            } else if (key == "out") {
                cfg.out = resolve(base_dir, value);
            } else {
                throw fail("unknown key '" + qual + "'");
            }
        }
    }
    cfg.validate();
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    const std::string text = read_text_file(path);
    const std::string base = std::filesystem::path(path).parent_path().string();
    try {
        return parse_config(text, base);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

}

#endif
