#include <gtest/gtest.h>

#include <stlabel/tiling.hpp>

using namespace stlabel;

namespace {

SlideManifest slide(int64_t w, int64_t h) {
    SlideManifest m;
    m.tissue = "breast";
    m.width = w;
    m.height = h;
    m.microns_per_pixel = 0.5;
    return m;
}

CellRecord square(const std::string& id, double x0, double y0, double side) {
    return make_cell_record(id, {{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}});
}

std::unordered_map<std::string, Category> label_all(const std::vector<CellRecord>& cells,
                                                    Category cat) {
    std::unordered_map<std::string, Category> labels;
    for (const auto& c : cells) {
        labels[c.cell_id] = cat;
    }
    return labels;
}

}  // namespace

TEST(MakePatches, ExactCoverFourPatches) {
    auto patches = make_patches(slide(512, 512), 256, 256);
    ASSERT_EQ(patches.size(), 4u);
    EXPECT_EQ(patches[0].x0, 0);
    EXPECT_EQ(patches[0].y0, 0);
    EXPECT_EQ(patches[1].x0, 256);
    EXPECT_EQ(patches[1].y0, 0);  // row-major: x varies fastest
    EXPECT_EQ(patches[2].x0, 0);
    EXPECT_EQ(patches[2].y0, 256);
    for (const auto& p : patches) {
        EXPECT_EQ(p.width, 256);
        EXPECT_EQ(p.height, 256);
        EXPECT_EQ(p.tissue, "breast");
    }
    for (size_t i = 0; i < patches.size(); ++i) {
        EXPECT_EQ(patches[i].index, static_cast<int64_t>(i));
    }
}

TEST(MakePatches, EdgePatchesClipped) {
    auto patches = make_patches(slide(600, 256), 256, 256);
    ASSERT_EQ(patches.size(), 3u);
    EXPECT_EQ(patches[2].x0, 512);
    EXPECT_EQ(patches[2].width, 88);
    EXPECT_EQ(patches[2].height, 256);
}

TEST(MakePatches, OverlappingStride) {
    auto patches = make_patches(slide(512, 128), 256, 128);
    // x origins 0, 128, 256, 384; one row
    ASSERT_EQ(patches.size(), 4u);
    EXPECT_EQ(patches[1].x0, 128);
    EXPECT_EQ(patches[1].width, 256);
    EXPECT_EQ(patches[3].x0, 384);
    EXPECT_EQ(patches[3].width, 128);  // clipped
}

TEST(MakePatches, InvalidArgumentsError) {
    EXPECT_THROW(make_patches(slide(512, 512), 0, 256), ValidationError);
    EXPECT_THROW(make_patches(slide(512, 512), 256, 0), ValidationError);
}

TEST(IndexSet, StraddlingNucleusInBothPatches) {
    auto patches = make_patches(slide(512, 256), 256, 256);
    std::vector<CellRecord> cells = {square("straddle", 250, 10, 12), square("left", 10, 10, 12),
                                     square("outside_row", 10, 300, 12)};
    auto left = index_set(patches[0], cells);
    auto right = index_set(patches[1], cells);
    EXPECT_EQ(left, (std::vector<size_t>{0, 1}));
    EXPECT_EQ(right, (std::vector<size_t>{0}));
}

TEST(Rasterize, InstanceIdsFollowCellIdOrder) {
    PatchSpec patch{0, 0, 0, 64, 64, "breast"};
    std::vector<CellRecord> cells = {square("zz", 2, 2, 8), square("aa", 30, 30, 8)};
    auto maps = rasterize(patch, cells, {0, 1}, label_all(cells, Category::Epithelial));
    ASSERT_EQ(maps.instance_cell_ids.size(), 2u);
    EXPECT_EQ(maps.instance_cell_ids[0], "aa");
    EXPECT_EQ(maps.instance_cell_ids[1], "zz");
    EXPECT_EQ(maps.instance_map[maps.at(33, 33)], 1);  // aa
    EXPECT_EQ(maps.instance_map[maps.at(5, 5)], 2);    // zz
    EXPECT_EQ(maps.instance_map[maps.at(60, 60)], 0);
    EXPECT_EQ(maps.type_index[maps.at(33, 33)], type_channel_of(Category::Epithelial));
    EXPECT_EQ(maps.ignore[maps.at(33, 33)], 0);
}

TEST(Rasterize, SmallerNucleusPaintsOnTop) {
    PatchSpec patch{0, 0, 0, 32, 32, "breast"};
    // big 12x12 square and a 4x4 square fully inside it
    std::vector<CellRecord> cells = {square("big", 4, 4, 12), square("tiny", 8, 8, 4)};
    auto maps = rasterize(patch, cells, {0, 1}, label_all(cells, Category::Connective));
    // both survive: ids by cell_id order (big=1, tiny=2)
    ASSERT_EQ(maps.instance_cell_ids.size(), 2u);
    EXPECT_EQ(maps.instance_cell_ids[0], "big");
    EXPECT_EQ(maps.instance_map[maps.at(9, 9)], 2);  // tiny wins the overlap
    EXPECT_EQ(maps.instance_map[maps.at(5, 5)], 1);
}

TEST(Rasterize, FullyCoveredNucleusDropsOut) {
    PatchSpec patch{0, 0, 0, 32, 32, "breast"};
    // equal-area squares at the same spot: paint order falls back to
    // cell_id ascending, so "b" paints after "a" and owns every pixel
    std::vector<CellRecord> cells = {square("a", 4, 4, 8), square("b", 4, 4, 8)};
    auto maps = rasterize(patch, cells, {0, 1}, label_all(cells, Category::Epithelial));
    ASSERT_EQ(maps.instance_cell_ids.size(), 1u);
    EXPECT_EQ(maps.instance_cell_ids[0], "b");
    EXPECT_EQ(maps.instance_map[maps.at(5, 5)], 1);
}

TEST(Rasterize, UnknownLabelSetsIgnoreMask) {
    PatchSpec patch{0, 0, 0, 32, 32, "breast"};
    std::vector<CellRecord> cells = {square("known", 2, 2, 6), square("mystery", 20, 20, 6)};
    std::unordered_map<std::string, Category> labels = {
        {"known", Category::Neoplastic},
        {"mystery", Category::Unknown},
    };
    auto maps = rasterize(patch, cells, {0, 1}, labels);
    // Unknown nuclei keep their instance pixels but supervise no type
    EXPECT_GT(maps.instance_map[maps.at(22, 22)], 0);
    EXPECT_EQ(maps.type_index[maps.at(22, 22)], 0);
    EXPECT_EQ(maps.ignore[maps.at(22, 22)], 1);
    EXPECT_EQ(maps.type_index[maps.at(3, 3)], type_channel_of(Category::Neoplastic));
    EXPECT_EQ(maps.ignore[maps.at(3, 3)], 0);
    // background is neither typed nor ignored
    EXPECT_EQ(maps.type_index[maps.at(31, 0)], 0);
    EXPECT_EQ(maps.ignore[maps.at(31, 0)], 0);
}

TEST(Rasterize, MissingLabelIsError) {
    PatchSpec patch{0, 0, 0, 16, 16, "breast"};
    std::vector<CellRecord> cells = {square("nolabel", 2, 2, 4)};
    EXPECT_THROW(rasterize(patch, cells, {0}, {}), ValidationError);
}

TEST(Rasterize, HvSingleRowGradient) {
    PatchSpec patch{0, 0, 0, 16, 16, "breast"};
    // 3x1 horizontal strip: pixels x = 2,3,4 at y = 2
    auto cell = make_cell_record("strip", {{2, 2}, {5, 2}, {5, 3}, {2, 3}});
    auto maps = rasterize(patch, {cell}, {0}, {{"strip", Category::Epithelial}});
    const size_t n_px = 16 * 16;
    EXPECT_FLOAT_EQ(maps.hv[maps.at(2, 2)], -1.0f);
    EXPECT_FLOAT_EQ(maps.hv[maps.at(3, 2)], 0.0f);
    EXPECT_FLOAT_EQ(maps.hv[maps.at(4, 2)], 1.0f);
    // single-row instance: v = 0 everywhere on the instance
    EXPECT_FLOAT_EQ(maps.hv[n_px + maps.at(2, 2)], 0.0f);
    EXPECT_FLOAT_EQ(maps.hv[n_px + maps.at(4, 2)], 0.0f);
}

TEST(Rasterize, HvSinglePixelIsZero) {
    PatchSpec patch{0, 0, 0, 8, 8, "breast"};
    auto cell = make_cell_record("dot", {{3, 3}, {4, 3}, {4, 4}, {3, 4}});
    auto maps = rasterize(patch, {cell}, {0}, {{"dot", Category::Connective}});
    const size_t n_px = 8 * 8;
    EXPECT_FLOAT_EQ(maps.hv[maps.at(3, 3)], 0.0f);
    EXPECT_FLOAT_EQ(maps.hv[n_px + maps.at(3, 3)], 0.0f);
}

TEST(Rasterize, HvRangeAndZeroOffForeground) {
    PatchSpec patch{0, 0, 0, 64, 64, "breast"};
    std::vector<CellRecord> cells = {
        square("a", 3, 5, 9),
        square("b", 20, 7, 5),
        make_cell_record("tri", {{40, 40}, {56, 40}, {40, 56}}),
    };
    auto maps = rasterize(patch, cells, {0, 1, 2}, label_all(cells, Category::Inflammatory));
    const size_t n_px = 64 * 64;
    for (int64_t y = 0; y < 64; ++y) {
        for (int64_t x = 0; x < 64; ++x) {
            const size_t p = maps.at(x, y);
            float h = maps.hv[p], v = maps.hv[n_px + p];
            if (maps.instance_map[p] == 0) {
                EXPECT_EQ(h, 0.0f);
                EXPECT_EQ(v, 0.0f);
            } else {
                EXPECT_GE(h, -1.0f);
                EXPECT_LE(h, 1.0f);
                EXPECT_GE(v, -1.0f);
                EXPECT_LE(v, 1.0f);
            }
        }
    }
    // h increases monotonically along each instance row
    for (int64_t y = 5; y < 14; ++y) {
        float prev = -2.0f;
        for (int64_t x = 3; x < 12; ++x) {
            float h = maps.hv[maps.at(x, y)];
            EXPECT_GT(h, prev);
            prev = h;
        }
    }
}

TEST(Rasterize, PatchOffsetsRespected) {
    // the same nucleus viewed from a shifted patch paints at local coords
    PatchSpec patch{3, 256, 256, 64, 64, "breast"};
    auto cell = square("c", 260, 270, 6);
    auto maps = rasterize(patch, {cell}, {0}, {{"c", Category::Epithelial}});
    EXPECT_GT(maps.instance_map[maps.at(260 - 256, 270 - 256)], 0);
    EXPECT_EQ(maps.instance_map[maps.at(0, 0)], 0);
}

TEST(Rasterize, PixelConservationAgainstIndexSet) {
    // every member pixel inside the patch belongs to exactly one instance,
    // and non-member pixels stay background
    auto patches = make_patches(slide(128, 128), 64, 64);
    std::vector<CellRecord> cells;
    for (int i = 0; i < 9; ++i) {
        cells.push_back(square("cell" + std::to_string(i), 10 + 13 * (i % 3) * 3,
                               8 + 40 * (i / 3), 9));
    }
    auto labels = label_all(cells, Category::Epithelial);
    for (const auto& patch : patches) {
        auto members = index_set(patch, cells);
        auto maps = rasterize(patch, cells, members, labels);
        size_t painted = 0;
        for (auto id : maps.instance_map) {
            painted += id > 0 ? 1 : 0;
        }
        size_t expected = 0;
        std::vector<int64_t> owner(static_cast<size_t>(patch.width * patch.height), -1);
        for (size_t j : members) {
            for (const auto& p : rasterize_polygon(cells[j].boundary)) {
                if (patch.contains(p)) {
                    owner[maps.at(p.x - patch.x0, p.y - patch.y0)] = static_cast<int64_t>(j);
                }
            }
        }
        for (auto o : owner) {
            expected += o >= 0 ? 1 : 0;
        }
        EXPECT_EQ(painted, expected) << "patch " << patch.index;
    }
}
