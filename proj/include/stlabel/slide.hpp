#ifndef STLABEL_SLIDE_HPP
#define STLABEL_SLIDE_HPP

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "boundaries.hpp"
#include "errors.hpp"
#include "util.hpp"

namespace stlabel {

/**
 * Whole-slide coordinate frame: tissue type, pixel extent, resolution.
 * Parsed from a plain-text `key=value` file (keys: tissue, width, height, mpp).
 */
struct SlideManifest {
    std::string tissue;
    int64_t width = 0;
    int64_t height = 0;
    double microns_per_pixel = 0.0;

    void validate() const {
        if (tissue.empty()) {
            throw ValidationError("slide manifest: tissue must be non-empty");
        }
        if (width <= 0 || height <= 0) {
            throw ValidationError("slide manifest: extent must be positive");
        }
        if (!(microns_per_pixel > 0.0) || !std::isfinite(microns_per_pixel)) {
            throw ValidationError("slide manifest: mpp must be positive");
        }
    }
};

inline SlideManifest parse_slide_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    SlideManifest manifest;
    bool have_tissue = false, have_width = false, have_height = false, have_mpp = false;
    std::string line;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key == "tissue") {
            manifest.tissue = value;
            have_tissue = true;
        } else if (key == "width") {
            if (!parse_int64(value, manifest.width)) {
                throw ValidationError(path + ":" + std::to_string(lineno) + ": width must be an integer");
            }
            have_width = true;
        } else if (key == "height") {
            if (!parse_int64(value, manifest.height)) {
                throw ValidationError(path + ":" + std::to_string(lineno) + ": height must be an integer");
            }
            have_height = true;
        } else if (key == "mpp") {
            if (!parse_double(value, manifest.microns_per_pixel)) {
                throw ValidationError(path + ":" + std::to_string(lineno) + ": mpp must be a number");
            }
            have_mpp = true;
        } else {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    if (!have_tissue || !have_width || !have_height || !have_mpp) {
        throw ValidationError(path + ": missing required key(s); need tissue, width, height, mpp");
    }
    manifest.validate();
    return manifest;
}

inline void write_slide_manifest(const SlideManifest& manifest, const std::string& path) {
    std::string body;
    body += "tissue=" + manifest.tissue + "\n";
    body += "width=" + std::to_string(manifest.width) + "\n";
    body += "height=" + std::to_string(manifest.height) + "\n";
    body += "mpp=" + format_double(manifest.microns_per_pixel) + "\n";
    write_text_file(path, body);
}

/**
 * Report cells whose boundary leaves the slide extent. Offending cells are
 * kept; their out-of-extent pixels simply never land in any patch, which is
 * the clipping behavior tiling applies.
 */
inline std::vector<std::string> extent_violations(const SlideManifest& manifest,
                                                  const std::vector<CellRecord>& cells) {
    std::vector<std::string> out;
    for (const auto& cell : cells) {
        for (const auto& p : cell.boundary) {
            if (p.x < 0.0 || p.y < 0.0 || p.x > static_cast<double>(manifest.width)
                || p.y > static_cast<double>(manifest.height)) {
                out.push_back(cell.cell_id);
                break;
            }
        }
    }
    return out;
}

}

#endif
