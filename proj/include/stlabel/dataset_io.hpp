#ifndef STLABEL_DATASET_IO_HPP
#define STLABEL_DATASET_IO_HPP

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "categories.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "png_io.hpp"
#include "tiling.hpp"

/**
 * @file dataset_io.hpp
 *
 * On-disk dataset layout:
 *
 *   <out>/patch_<i>/inst.png   16-bit grayscale instance ids (0 = background)
 *   <out>/patch_<i>/type.png   8-bit class indices, 255 = ignore
 *   <out>/patch_<i>/hv.bin     little-endian float32, H*W*2, h plane then v
 *   <out>/patch_<i>/meta.json  {H, W, origin, tissue}
 *   <out>/manifest.json        {classes, patch_size, stride, config_hash, config, patches}
 */

namespace stlabel {

using ordered_json = nlohmann::ordered_json;

inline constexpr uint8_t ignore_type_value = 255;

/// Channel-order class names for the manifest (index 0 is background).
inline std::vector<std::string> dataset_class_names() {
    std::vector<std::string> names = {"background"};
    for (auto c : type_channel_categories) {
        names.push_back(category_name(c));
    }
    return names;
}

namespace dataset_detail {

inline void write_le_f32(const std::vector<float>& values, const std::string& path) {
    std::string bytes(values.size() * 4, '\0');
    for (size_t i = 0; i < values.size(); ++i) {
        const uint32_t u = std::bit_cast<uint32_t>(values[i]);
        bytes[4 * i] = static_cast<char>(u & 0xFF);
        bytes[4 * i + 1] = static_cast<char>((u >> 8) & 0xFF);
        bytes[4 * i + 2] = static_cast<char>((u >> 16) & 0xFF);
        bytes[4 * i + 3] = static_cast<char>((u >> 24) & 0xFF);
    }
    write_text_file(path, bytes);
}

inline std::vector<float> read_le_f32(const std::string& path) {
    const std::string bytes = read_text_file(path);
    if (bytes.size() % 4 != 0) {
        throw ValidationError(path + ": float32 payload truncated");
    }
    std::vector<float> values(bytes.size() / 4);
    for (size_t i = 0; i < values.size(); ++i) {
        const uint32_t u = static_cast<uint32_t>(static_cast<uint8_t>(bytes[4 * i]))
                           | (static_cast<uint32_t>(static_cast<uint8_t>(bytes[4 * i + 1])) << 8)
                           | (static_cast<uint32_t>(static_cast<uint8_t>(bytes[4 * i + 2])) << 16)
                           | (static_cast<uint32_t>(static_cast<uint8_t>(bytes[4 * i + 3])) << 24);
        values[i] = std::bit_cast<float>(u);
    }
    return values;
}

}  // namespace dataset_detail

inline std::string patch_dir_name(int64_t index) {
    return "patch_" + std::to_string(index);
}

/// Write one patch bundle under dir (created if needed).
inline void write_patch(const std::string& dir, const PatchSpec& patch, const TargetMaps& maps) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir + ": " + ec.message());
    }
    write_png_gray16(dir + "/inst.png", maps.width, maps.height, maps.instance_map);

    std::vector<uint8_t> type_png(maps.type_index);
    for (size_t i = 0; i < type_png.size(); ++i) {
        if (maps.ignore[i]) {
            type_png[i] = ignore_type_value;
        }
    }
    write_png_gray8(dir + "/type.png", maps.width, maps.height, type_png);
    dataset_detail::write_le_f32(maps.hv, dir + "/hv.bin");

    ordered_json meta;
    meta["H"] = maps.height;
    meta["W"] = maps.width;
    meta["origin"] = {patch.x0, patch.y0};
    meta["tissue"] = patch.tissue;
    write_text_file(dir + "/meta.json", meta.dump(2) + "\n");
}

/**
 * Write every patch bundle plus the dataset manifest. Patches are written
 * in parallel (each owns its directory); the manifest is assembled after
 * the barrier in patch-index order so the file bytes never depend on
 * thread scheduling.
 */
inline void write_dataset(const std::string& out_dir, const std::vector<PatchSpec>& patches,
                          const std::vector<TargetMaps>& maps, int64_t patch_size, int64_t stride,
                          const std::string& config_hash, const ordered_json& config_echo,
                          int threads) {
    if (patches.size() != maps.size()) {
        throw ValidationError("write_dataset: patch list and map list differ in length");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create " + out_dir + ": " + ec.message());
    }

    parallel_for(patches.size(), threads, [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            write_patch(out_dir + "/" + patch_dir_name(patches[i].index), patches[i], maps[i]);
        }
    });

    ordered_json manifest;
    manifest["classes"] = dataset_class_names();
    manifest["patch_size"] = patch_size;
    manifest["stride"] = stride;
    manifest["config_hash"] = config_hash;
    manifest["config"] = config_echo;
    ordered_json entries = ordered_json::array();
    for (size_t i = 0; i < patches.size(); ++i) {
        ordered_json e;
        e["index"] = patches[i].index;
        e["path"] = patch_dir_name(patches[i].index);
        e["origin"] = {patches[i].x0, patches[i].y0};
        e["width"] = patches[i].width;
        e["height"] = patches[i].height;
        e["instances"] = maps[i].instance_cell_ids.size();
        entries.push_back(std::move(e));
    }
    manifest["patches"] = std::move(entries);
    write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

struct LoadedPatch {
    PatchSpec spec;
    std::vector<uint16_t> instance_map;
    std::vector<uint8_t> type_map;  // raw values incl. 255 = ignore
    std::vector<float> hv;
};

struct LoadedDataset {
    std::vector<std::string> classes;
    int64_t patch_size = 0;
    int64_t stride = 0;
    std::string config_hash;
    std::vector<LoadedPatch> patches;
};

inline LoadedDataset read_dataset(const std::string& dir) {
    const std::string manifest_path = dir + "/manifest.json";
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(read_text_file(manifest_path));
    } catch (const ordered_json::parse_error& e) {
        throw ValidationError(manifest_path + ": " + e.what());
    }

    LoadedDataset ds;
    try {
        ds.classes = manifest.at("classes").get<std::vector<std::string>>();
        ds.patch_size = manifest.at("patch_size").get<int64_t>();
        ds.stride = manifest.at("stride").get<int64_t>();
        ds.config_hash = manifest.at("config_hash").get<std::string>();
        for (const auto& e : manifest.at("patches")) {
            LoadedPatch p;
            p.spec.index = e.at("index").get<int64_t>();
            p.spec.x0 = e.at("origin").at(0).get<int64_t>();
            p.spec.y0 = e.at("origin").at(1).get<int64_t>();
            p.spec.width = e.at("width").get<int64_t>();
            p.spec.height = e.at("height").get<int64_t>();
            ds.patches.push_back(std::move(p));
        }
    } catch (const ordered_json::exception& e) {
        throw ValidationError(manifest_path + ": " + e.what());
    }

    for (auto& p : ds.patches) {
        const std::string pdir = dir + "/" + patch_dir_name(p.spec.index);
        auto inst = read_png_gray16(pdir + "/inst.png");
        auto type = read_png_gray8(pdir + "/type.png");
        if (inst.width != p.spec.width || inst.height != p.spec.height || type.width != inst.width
            || type.height != inst.height) {
            throw ValidationError(pdir + ": map dimensions disagree with manifest");
        }
        p.instance_map = std::move(inst.pixels);
        p.type_map = std::move(type.pixels);
        p.hv = dataset_detail::read_le_f32(pdir + "/hv.bin");
        const size_t n_px = static_cast<size_t>(p.spec.width) * static_cast<size_t>(p.spec.height);
        if (p.hv.size() != 2 * n_px) {
            throw ValidationError(pdir + "/hv.bin: expected " + std::to_string(2 * n_px)
                                  + " float32 values");
        }
        ordered_json meta;
        try {
            meta = ordered_json::parse(read_text_file(pdir + "/meta.json"));
            p.spec.tissue = meta.at("tissue").get<std::string>();
        } catch (const ordered_json::exception& e) {
            throw ValidationError(pdir + "/meta.json: " + e.what());
        }
    }
    return ds;
}

}

#endif
