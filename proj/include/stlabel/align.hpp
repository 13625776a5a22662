#ifndef STLABEL_ALIGN_HPP
#define STLABEL_ALIGN_HPP

#include <algorithm>
#include <string>
#include <unordered_map>
#include <vector>

#include "boundaries.hpp"
#include "errors.hpp"
#include "expression.hpp"

namespace stlabel {

/**
 * Expression and boundary records inner-joined on cell_id.
 *
 * Row order is sorted cell_id, so downstream stages are deterministic
 * regardless of input file order. `zero_count_cells` flags cells whose
 * total count is zero; they stay in the dataset and are later forced to
 * the Unknown label.
 */
struct AlignedDataset {
    ExpressionMatrix matrix;        // rows reindexed to the joined, sorted cells
    std::vector<CellRecord> cells;  // same order as matrix rows
    std::vector<uint8_t> zero_count_cells;
    int64_t dropped_expression_only = 0;  // had counts but no boundary
    int64_t dropped_boundary_only = 0;    // had a boundary but no counts
};

/// Inner join on cell_id; cells present in only one modality are dropped
/// and counted. An empty intersection is an error.
inline AlignedDataset align(const ExpressionMatrix& matrix, const std::vector<CellRecord>& cells) {
    std::unordered_map<std::string, size_t> boundary_index;
    boundary_index.reserve(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) {
        if (!boundary_index.emplace(cells[i].cell_id, i).second) {
            throw ValidationError("duplicate cell_id among boundaries: " + cells[i].cell_id);
        }
    }

    // (cell_id, old matrix row, boundary index) for the intersection.
    std::vector<std::pair<std::string, std::pair<int64_t, size_t>>> joined;
    joined.reserve(std::min(matrix.cell_ids.size(), cells.size()));
    for (int64_t row = 0; row < matrix.n_cells; ++row) {
        auto it = boundary_index.find(matrix.cell_ids[row]);
        if (it != boundary_index.end()) {
            joined.push_back({matrix.cell_ids[row], {row, it->second}});
        }
    }
    if (joined.empty()) {
        throw ValidationError("alignment produced an empty intersection of cell ids");
    }
    std::sort(joined.begin(), joined.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    AlignedDataset out;
    out.dropped_expression_only = matrix.n_cells - static_cast<int64_t>(joined.size());
    out.dropped_boundary_only = static_cast<int64_t>(cells.size()) - static_cast<int64_t>(joined.size());

    out.matrix.n_cells = static_cast<int64_t>(joined.size());
    out.matrix.n_genes = matrix.n_genes;
    out.matrix.gene_names = matrix.gene_names;
    std::vector<int64_t> new_row_of(matrix.n_cells, -1);
    out.cells.reserve(joined.size());
    for (size_t i = 0; i < joined.size(); ++i) {
        out.matrix.cell_ids.push_back(joined[i].first);
        new_row_of[joined[i].second.first] = static_cast<int64_t>(i);
        out.cells.push_back(cells[joined[i].second.second]);
    }
    for (const auto& t : matrix.entries) {
        if (new_row_of[t.cell] >= 0) {
            out.matrix.entries.push_back(Triplet{new_row_of[t.cell], t.gene, t.count});
        }
    }
    std::sort(out.matrix.entries.begin(), out.matrix.entries.end(),
              [](const Triplet& a, const Triplet& b) {
                  return a.cell != b.cell ? a.cell < b.cell : a.gene < b.gene;
              });
    out.matrix.validate();

    out.zero_count_cells.assign(out.matrix.n_cells, 1);
    for (const auto& t : out.matrix.entries) {
        if (t.count > 0) {
            out.zero_count_cells[t.cell] = 0;
        }
    }
    return out;
}

}

#endif
