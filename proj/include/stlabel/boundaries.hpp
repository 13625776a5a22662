#ifndef STLABEL_BOUNDARIES_HPP
#define STLABEL_BOUNDARIES_HPP

#include <algorithm>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "geometry.hpp"
#include "util.hpp"

/**
 * @file boundaries.hpp
 *
 * Nuclear boundary polygons: GeoJSON ingestion and derived geometry.
 */

namespace stlabel {

/**
 * One nucleus: its boundary ring in whole-slide pixel coordinates plus the
 * centroid and area derived from the rasterized interior (even-odd rule on
 * pixel centers). A record with an empty rasterized interior is rejected.
 */
struct CellRecord {
    std::string cell_id;
    std::vector<Point> boundary;  // closed ring, closing vertex not repeated
    Point centroid;
    double area_px = 0.0;
};

struct BoundaryParseReport {
    int64_t rings_ignored = 0;  // interior rings (holes) are not supported
    std::vector<std::string> warnings;
};

/// Derives centroid/area from the rasterized interior; throws when empty.
inline CellRecord make_cell_record(std::string cell_id, std::vector<Point> boundary) {
    if (boundary.size() >= 3 && boundary.front() == boundary.back()) {
        boundary.pop_back();
    }
    if (boundary.size() < 3) {
        throw ValidationError("cell " + cell_id + ": polygon has fewer than 3 vertices");
    }
    auto pixels = rasterize_polygon(boundary);
    if (pixels.empty()) {
        throw ValidationError("cell " + cell_id + ": polygon rasterizes to zero interior pixels");
    }
    CellRecord rec;
    rec.cell_id = std::move(cell_id);
    rec.boundary = std::move(boundary);
    rec.centroid = pixel_centroid(pixels);
    rec.area_px = static_cast<double>(pixels.size());
    return rec;
}

/**
 * Parse a GeoJSON FeatureCollection of Polygon features keyed by the
 * `cell_id` property. Duplicate ids and degenerate polygons are errors.
 */
inline std::vector<CellRecord> parse_boundaries(const std::string& path,
                                                BoundaryParseReport* report = nullptr) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path + ": invalid JSON: " + e.what());
    }

    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
        throw ValidationError(path + ": expected a GeoJSON FeatureCollection");
    }

    std::vector<CellRecord> records;
    std::unordered_set<std::string> seen;
    for (const auto& feature : doc["features"]) {
        if (feature.value("type", "") != "Feature") {
            throw ValidationError(path + ": non-Feature entry in features array");
        }
        const auto& props = feature.at("properties");
        if (!props.contains("cell_id") || !props["cell_id"].is_string()) {
            throw ValidationError(path + ": feature missing string property 'cell_id'");
        }
        std::string cell_id = props["cell_id"].get<std::string>();
        if (!seen.insert(cell_id).second) {
            throw ValidationError(path + ": duplicate cell_id '" + cell_id + "'");
        }

        const auto& geom = feature.at("geometry");
        if (geom.value("type", "") != "Polygon") {
            throw ValidationError(path + ": cell " + cell_id + ": geometry type must be Polygon");
        }
        const auto& rings = geom.at("coordinates");
        if (!rings.is_array() || rings.empty()) {
            throw ValidationError(path + ": cell " + cell_id + ": empty coordinates");
        }
        if (rings.size() > 1 && report) {
            report->rings_ignored += static_cast<int64_t>(rings.size()) - 1;
            report->warnings.push_back(path + ": cell " + cell_id + ": interior rings ignored");
        }

        std::vector<Point> ring;
        for (const auto& coord : rings[0]) {
            if (!coord.is_array() || coord.size() < 2) {
                throw ValidationError(path + ": cell " + cell_id + ": malformed coordinate");
            }
            ring.push_back(Point{coord[0].get<double>(), coord[1].get<double>()});
        }
        records.push_back(make_cell_record(std::move(cell_id), std::move(ring)));
    }
    return records;
}

/// Inverse of parse_boundaries, used for stage caching.
inline void write_boundaries(const std::vector<CellRecord>& cells, const std::string& path) {
    nlohmann::ordered_json doc;
    doc["type"] = "FeatureCollection";
    auto& features = doc["features"] = nlohmann::ordered_json::array();
    for (const auto& cell : cells) {
        nlohmann::ordered_json feature;
        feature["type"] = "Feature";
        feature["properties"] = {{"cell_id", cell.cell_id}};
        nlohmann::ordered_json ring = nlohmann::ordered_json::array();
        for (const auto& p : cell.boundary) {
            ring.push_back({p.x, p.y});
        }
        // GeoJSON rings repeat the first vertex.
        ring.push_back({cell.boundary.front().x, cell.boundary.front().y});
        feature["geometry"] = {{"type", "Polygon"}, {"coordinates", nlohmann::ordered_json::array({ring})}};
        features.push_back(std::move(feature));
    }
    write_text_file(path, doc.dump(1) + "\n");
}

}

#endif
