#ifndef STLABEL_EXPRESSION_HPP
#define STLABEL_EXPRESSION_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "errors.hpp"
#include "util.hpp"

/**
 * @file expression.hpp
 *
 * Sparse cell-by-gene count matrix and its MatrixMarket reader/writer.
 */

namespace stlabel {

struct Triplet {
    int64_t cell;
    int64_t gene;
    int64_t count;

    friend bool operator==(const Triplet&, const Triplet&) = default;
};

/**
 * Raw counts as sparse triplets, plus the id lists they index into.
 *
 * Triplets are kept sorted by (cell, gene) with no duplicates; counts are
 * non-negative integers. Per-cell totals are exposed because zero-count
 * cells are carried through the pipeline and forced to Unknown at labeling.
 */
struct ExpressionMatrix {
    int64_t n_cells = 0;
    int64_t n_genes = 0;
    std::vector<std::string> cell_ids;
    std::vector<std::string> gene_names;
    std::vector<Triplet> entries;  // sorted by (cell, gene)

    std::vector<int64_t> cell_totals() const {
        std::vector<int64_t> totals(n_cells, 0);
        for (const auto& t : entries) {
            totals[t.cell] += t.count;
        }
        return totals;
    }

    void validate() const {
        if (static_cast<int64_t>(cell_ids.size()) != n_cells) {
            throw ValidationError("cell id list length does not match n_cells");
        }
        if (static_cast<int64_t>(gene_names.size()) != n_genes) {
            throw ValidationError("gene name list length does not match n_genes");
        }
        check_unique(cell_ids, "cell id");
        check_unique(gene_names, "gene name");
        const Triplet* prev = nullptr;
        for (const auto& t : entries) {
            if (t.cell < 0 || t.cell >= n_cells || t.gene < 0 || t.gene >= n_genes) {
                throw ValidationError("triplet index out of range");
            }
            if (t.count < 0) {
                throw ValidationError("negative count");
            }
            if (prev && !(prev->cell < t.cell || (prev->cell == t.cell && prev->gene < t.gene))) {
                throw ValidationError("triplets not strictly sorted by (cell, gene)");
            }
            prev = &t;
        }
    }

private:
    static void check_unique(const std::vector<std::string>& items, const char* what) {
        std::unordered_set<std::string> seen;
        seen.reserve(items.size());
        for (const auto& s : items) {
            if (!seen.insert(s).second) {
                throw ValidationError(std::string("duplicate ") + what + ": " + s);
            }
        }
    }
};

struct ExpressionParseReport {
    int64_t duplicate_triplets_summed = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string> read_id_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto id = trim(line);
        if (!id.empty()) {
            out.push_back(id);
        }
    }
    return out;
}

}

/**
 * Parse a MatrixMarket coordinate file with `cells.txt` / `genes.txt`
 * sidecars (one id per line, next to the matrix unless overridden).
 *
 * Rows are cells, indices are 1-based. Duplicate (cell, gene) entries are
 * summed and reported; malformed headers, out-of-range indices and
 * non-integer or negative counts raise ValidationError naming the line.
 */
inline ExpressionMatrix parse_expression(
    const std::string& matrix_path,
    ExpressionParseReport* report = nullptr,
    const std::string& cells_path_override = std::string(),
    const std::string& genes_path_override = std::string())
{
    std::ifstream in(matrix_path);
    if (!in) {
        throw IoError("cannot open " + matrix_path);
    }
    auto fail = [&](int64_t lineno, const std::string& msg) -> ValidationError {
        return ValidationError(matrix_path + ":" + std::to_string(lineno) + ": " + msg);
    };

    std::string line;
    int64_t lineno = 0;
    if (!std::getline(in, line)) {
        throw fail(1, "empty file");
    }
    ++lineno;
    {
        auto fields = split(trim(line), ' ');
        std::erase(fields, std::string());
        if (fields.size() != 5 || fields[0] != "%%MatrixMarket" || fields[1] != "matrix"
            || fields[2] != "coordinate" || fields[3] != "integer" || fields[4] != "general") {
            throw fail(lineno, "malformed MatrixMarket header, expected "
                               "'%%MatrixMarket matrix coordinate integer general'");
        }
    }

    // Skip comments, then read the size line.
    int64_t n_cells = -1, n_genes = -1, nnz = -1;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t[0] == '%') {
            continue;
        }
        auto fields = split(t, ' ');
        std::erase(fields, std::string());
        if (fields.size() != 3 || !parse_int64(fields[0], n_cells)
            || !parse_int64(fields[1], n_genes) || !parse_int64(fields[2], nnz)) {
            throw fail(lineno, "malformed size line, expected 'rows cols nnz'");
        }
        if (n_cells < 0 || n_genes < 0 || nnz < 0) {
            throw fail(lineno, "negative dimension in size line");
        }
        break;
    }
    if (n_cells < 0) {
        throw fail(lineno, "missing size line");
    }

    std::vector<Triplet> entries;
    entries.reserve(nnz);
    int64_t seen = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t[0] == '%') {
            continue;
        }
        if (seen == nnz) {
            throw fail(lineno, "more entries than declared (" + std::to_string(nnz) + ")");
        }
        auto fields = split(t, ' ');
        std::erase(fields, std::string());
        int64_t r, c, v;
        if (fields.size() != 3 || !parse_int64(fields[0], r) || !parse_int64(fields[1], c)
            || !parse_int64(fields[2], v)) {
            throw fail(lineno, "malformed entry, expected 'cell gene count' integers");
        }
        if (r < 1 || r > n_cells) {
            throw fail(lineno, "cell index " + std::to_string(r) + " out of declared bounds 1.."
                               + std::to_string(n_cells));
        }
        if (c < 1 || c > n_genes) {
            throw fail(lineno, "gene index " + std::to_string(c) + " out of declared bounds 1.."
                               + std::to_string(n_genes));
        }
        if (v < 0) {
            throw fail(lineno, "negative count " + std::to_string(v));
        }
        entries.push_back(Triplet{r - 1, c - 1, v});
        ++seen;
    }
    if (seen != nnz) {
        throw fail(lineno, "declared " + std::to_string(nnz) + " entries but found "
                           + std::to_string(seen));
    }

    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.cell != b.cell ? a.cell < b.cell : a.gene < b.gene;
    });
    std::vector<Triplet> merged;
    merged.reserve(entries.size());
    int64_t dup = 0;
    for (const auto& t : entries) {
        if (!merged.empty() && merged.back().cell == t.cell && merged.back().gene == t.gene) {
            merged.back().count += t.count;
            ++dup;
        } else {
            merged.push_back(t);
        }
    }
    if (report) {
        report->duplicate_triplets_summed += dup;
        if (dup > 0) {
            report->warnings.push_back(matrix_path + ": summed " + std::to_string(dup)
                                       + " duplicate (cell, gene) entries");
        }
    }

    namespace fs = std::filesystem;
    fs::path dir = fs::path(matrix_path).parent_path();
    std::string cells_path = cells_path_override.empty() ? (dir / "cells.txt").string() : cells_path_override;
    std::string genes_path = genes_path_override.empty() ? (dir / "genes.txt").string() : genes_path_override;

    ExpressionMatrix mat;
    mat.n_cells = n_cells;
    mat.n_genes = n_genes;
    mat.cell_ids = detail::read_id_lines(cells_path);
    mat.gene_names = detail::read_id_lines(genes_path);
    for (auto& g : mat.gene_names) {
        g = canonical_gene_symbol(g);
    }
    mat.entries = std::move(merged);
    if (static_cast<int64_t>(mat.cell_ids.size()) != n_cells) {
        throw ValidationError(cells_path + ": has " + std::to_string(mat.cell_ids.size())
                              + " ids but matrix declares " + std::to_string(n_cells) + " cells");
    }
    if (static_cast<int64_t>(mat.gene_names.size()) != n_genes) {
        throw ValidationError(genes_path + ": has " + std::to_string(mat.gene_names.size())
                              + " ids but matrix declares " + std::to_string(n_genes) + " genes");
    }
    mat.validate();
    return mat;
}

/// Inverse of parse_expression; triplets come out order-normalized.
inline void write_expression(const ExpressionMatrix& mat, const std::string& matrix_path,
                             const std::string& cells_path = std::string(),
                             const std::string& genes_path = std::string()) {
    namespace fs = std::filesystem;
    fs::path dir = fs::path(matrix_path).parent_path();
    std::string cpath = cells_path.empty() ? (dir / "cells.txt").string() : cells_path;
    std::string gpath = genes_path.empty() ? (dir / "genes.txt").string() : genes_path;

    std::string body;
    body += "%%MatrixMarket matrix coordinate integer general\n";
    body += std::to_string(mat.n_cells) + " " + std::to_string(mat.n_genes) + " "
            + std::to_string(mat.entries.size()) + "\n";
    for (const auto& t : mat.entries) {
        body += std::to_string(t.cell + 1) + " " + std::to_string(t.gene + 1) + " "
                + std::to_string(t.count) + "\n";
    }
    write_text_file(matrix_path, body);

    std::string cells_body, genes_body;
    for (const auto& id : mat.cell_ids) {
        cells_body += id + "\n";
    }
    for (const auto& g : mat.gene_names) {
        genes_body += g + "\n";
    }
    write_text_file(cpath, cells_body);
    write_text_file(gpath, genes_body);
}

}

#endif
