#ifndef STLABEL_TILING_HPP
#define STLABEL_TILING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "boundaries.hpp"
#include "categories.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "slide.hpp"

/**
 * @file tiling.hpp
 *
 * Patch grid over the slide frame, per-patch nucleus index sets, and
 * rasterized training targets: instance map, type indices with an ignore
 * mask for Unknown nuclei, and centroid-normalized HV distance maps.
 */

namespace stlabel {

struct PatchSpec {
    int64_t index = 0;
    int64_t x0 = 0;
    int64_t y0 = 0;
    int64_t width = 0;
    int64_t height = 0;
    std::string tissue;

    bool contains(const Pixel& p) const {
        return p.x >= x0 && p.x < x0 + width && p.y >= y0 && p.y < y0 + height;
    }
};

/// Grid of patch origins at multiples of `stride` covering [0, width) x
/// [0, height), row-major (y outer). Patches at the far edges are clipped
/// to the slide extent.
inline std::vector<PatchSpec> make_patches(const SlideManifest& manifest, int64_t patch_size,
                                           int64_t stride) {
    if (patch_size < 1) {
        throw ValidationError("make_patches: patch_size must be >= 1");
    }
    if (stride < 1) {
        throw ValidationError("make_patches: stride must be >= 1");
    }
    std::vector<PatchSpec> patches;
    int64_t index = 0;
    for (int64_t y = 0; y < manifest.height; y += stride) {
        for (int64_t x = 0; x < manifest.width; x += stride) {
            PatchSpec p;
            p.index = index++;
            p.x0 = x;
            p.y0 = y;
            p.width = std::min(patch_size, manifest.width - x);
            p.height = std::min(patch_size, manifest.height - y);
            p.tissue = manifest.tissue;
            patches.push_back(std::move(p));
        }
    }
    return patches;
}

/// J_i: indices of cells whose rasterized interior intersects the patch
/// rectangle. A nucleus straddling a patch border lands in every patch it
/// touches.
inline std::vector<size_t> index_set(const PatchSpec& patch, const std::vector<CellRecord>& cells) {
    std::vector<size_t> members;
    for (size_t j = 0; j < cells.size(); ++j) {
        const CellRecord& cell = cells[j];
        // bounding-box reject before paying for rasterization
        double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
        double min_y = min_x, max_y = max_x;
        for (const auto& v : cell.boundary) {
            min_x = std::min(min_x, v.x);
            max_x = std::max(max_x, v.x);
            min_y = std::min(min_y, v.y);
            max_y = std::max(max_y, v.y);
        }
        if (max_x < static_cast<double>(patch.x0) || min_x > static_cast<double>(patch.x0 + patch.width)
            || max_y < static_cast<double>(patch.y0)
            || min_y > static_cast<double>(patch.y0 + patch.height)) {
            continue;
        }
        for (const auto& p : rasterize_polygon(cell.boundary)) {
            if (patch.contains(p)) {
                members.push_back(j);
                break;
            }
        }
    }
    return members;
}

/**
 * Rasterized supervision for one patch. The binary mask B is implied by
 * instance_map > 0; the one-hot S collapses to type_index (0 = background,
 * 1..4 = type channels) plus the ignore mask marking Unknown-instance
 * pixels whose type supervision must be skipped.
 */
struct TargetMaps {
    int64_t width = 0;
    int64_t height = 0;
    std::vector<uint16_t> instance_map;        // row-major, 0 = background
    std::vector<uint8_t> type_index;           // argmax(S): 0 background, 1..4 classes
    std::vector<uint8_t> ignore;               // 1 where Unknown suppresses type loss
    std::vector<float> hv;                     // 2*H*W, h plane then v plane
    std::vector<std::string> instance_cell_ids;  // instance id k <-> entry k-1
    std::vector<Category> instance_labels;       // parallel to instance_cell_ids

    size_t at(int64_t x, int64_t y) const {
        return static_cast<size_t>(y) * static_cast<size_t>(width) + static_cast<size_t>(x);
    }
};

/**
 * Paint the member nuclei into per-patch target maps.
 *
 * Painting order is area descending then cell_id ascending, so on overlap
 * the smaller nucleus ends up on top. Instance ids are 1..K in ascending
 * cell_id order over members that keep at least one pixel after overlap
 * resolution. HV values normalize each pixel's offset from the instance's
 * in-patch centroid by the instance's maximum absolute offset per axis
 * (a single-column instance gets h = 0 everywhere, likewise v).
 */
inline TargetMaps rasterize(const PatchSpec& patch, const std::vector<CellRecord>& cells,
                            const std::vector<size_t>& members,
                            const std::unordered_map<std::string, Category>& labels) {
    TargetMaps maps;
    maps.width = patch.width;
    maps.height = patch.height;
    const size_t n_px = static_cast<size_t>(patch.width) * static_cast<size_t>(patch.height);
    maps.instance_map.assign(n_px, 0);
    maps.type_index.assign(n_px, 0);
    maps.ignore.assign(n_px, 0);
    maps.hv.assign(2 * n_px, 0.0f);

    for (size_t j : members) {
        if (!labels.count(cells[j].cell_id)) {
            throw ValidationError("rasterize: cell " + cells[j].cell_id + " has no label");
        }
    }

    std::vector<size_t> order = members;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (cells[a].area_px != cells[b].area_px) {
            return cells[a].area_px > cells[b].area_px;
        }
        return cells[a].cell_id < cells[b].cell_id;
    });

    // owner holds the index into `cells`; later paints win
    std::vector<int64_t> owner(n_px, -1);
    for (size_t j : order) {
        for (const auto& p : rasterize_polygon(cells[j].boundary)) {
            if (patch.contains(p)) {
                owner[maps.at(p.x - patch.x0, p.y - patch.y0)] = static_cast<int64_t>(j);
            }
        }
    }

    std::vector<size_t> survivors;
    {
        std::vector<int64_t> seen(owner);
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (int64_t j : seen) {
            if (j >= 0) {
                survivors.push_back(static_cast<size_t>(j));
            }
        }
    }
    std::sort(survivors.begin(), survivors.end(),
              [&](size_t a, size_t b) { return cells[a].cell_id < cells[b].cell_id; });
    if (survivors.size() > 65535) {
        throw ValidationError("rasterize: more than 65535 instances in one patch");
    }

    std::vector<uint16_t> id_of(cells.size(), 0);
    for (size_t k = 0; k < survivors.size(); ++k) {
        size_t j = survivors[k];
        id_of[j] = static_cast<uint16_t>(k + 1);
        maps.instance_cell_ids.push_back(cells[j].cell_id);
        maps.instance_labels.push_back(labels.at(cells[j].cell_id));
    }

    struct Accum {
        std::vector<size_t> px;
        double sum_x = 0.0, sum_y = 0.0;
    };
    std::vector<Accum> accum(survivors.size());
    for (int64_t y = 0; y < patch.height; ++y) {
        for (int64_t x = 0; x < patch.width; ++x) {
            const size_t p = maps.at(x, y);
            if (owner[p] < 0) {
                continue;
            }
            const uint16_t id = id_of[static_cast<size_t>(owner[p])];
            maps.instance_map[p] = id;
            Accum& a = accum[id - 1];
            a.px.push_back(p);
            a.sum_x += static_cast<double>(x);
            a.sum_y += static_cast<double>(y);
        }
    }

    for (size_t k = 0; k < survivors.size(); ++k) {
        const Accum& a = accum[k];
        const double n = static_cast<double>(a.px.size());
        const double cx = a.sum_x / n;
        const double cy = a.sum_y / n;
        double max_dx = 0.0, max_dy = 0.0;
        for (size_t p : a.px) {
            const double x = static_cast<double>(p % static_cast<size_t>(patch.width));
            const double y = static_cast<double>(p / static_cast<size_t>(patch.width));
            max_dx = std::max(max_dx, std::abs(x - cx));
            max_dy = std::max(max_dy, std::abs(y - cy));
        }
        const Category label = maps.instance_labels[k];
        const uint8_t type_value =
            label == Category::Unknown ? 0 : static_cast<uint8_t>(type_channel_of(label));
        for (size_t p : a.px) {
            const double x = static_cast<double>(p % static_cast<size_t>(patch.width));
            const double y = static_cast<double>(p / static_cast<size_t>(patch.width));
            maps.hv[p] = max_dx == 0.0 ? 0.0f : static_cast<float>((x - cx) / max_dx);
            maps.hv[n_px + p] = max_dy == 0.0 ? 0.0f : static_cast<float>((y - cy) / max_dy);
            maps.type_index[p] = type_value;
            if (label == Category::Unknown) {
                maps.ignore[p] = 1;
            }
        }
    }
    return maps;
}

}

#endif
