#ifndef STLABEL_MARKERS_HPP
#define STLABEL_MARKERS_HPP

#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "categories.hpp"
#include "errors.hpp"
#include "util.hpp"

/**
 * @file markers.hpp
 *
 * Marker-gene database (gene -> cell-type name -> coarse category) and the
 * curated cancer gene set used by neoplastic refinement.
 */

namespace stlabel {

/// Wildcard organ tag: the entry applies to every tissue.
inline constexpr const char* organ_wildcard = "*";

struct MarkerEntry {
    std::string gene;       // canonical symbol
    std::string cell_type;  // database cell-type name
    std::string organ;      // tissue name or organ_wildcard
    std::string source;     // e.g. PanglaoDB / CellMarker
    Category category = Category::Unknown;
};

struct MarkerDbReport {
    int64_t unmapped_cell_types = 0;  // entries whose cell type fell back to Unknown
    std::vector<std::string> warnings;
};

/**
 * Merged marker entries from one or more TSV databases, indexed by gene.
 * Cell-type names missing from the category map are kept with category
 * Unknown; Unknown entries never contribute votes.
 */
struct MarkerDatabase {
    std::vector<MarkerEntry> entries;
    std::map<std::string, Category> category_map;  // cell_type -> coarse category
    std::unordered_map<std::string, std::vector<size_t>> by_gene;

    void build_index() {
        by_gene.clear();
        for (size_t i = 0; i < entries.size(); ++i) {
            by_gene[entries[i].gene].push_back(i);
        }
    }
};

namespace detail {

inline std::vector<std::string> tsv_fields(const std::string& path, int64_t lineno,
                                           const std::string& line, size_t expected,
                                           const std::vector<std::string>& column_names) {
    auto fields = split(line, '\t');
    if (fields.size() < expected) {
        throw ValidationError(path + ":" + std::to_string(lineno) + ": missing required column '"
                              + column_names[fields.size()] + "'");
    }
    return fields;
}

}

/// Category map TSV: `cell_type<TAB>category`.
inline std::map<std::string, Category> parse_category_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::map<std::string, Category> out;
    std::string line;
    int64_t lineno = 0;
    static const std::vector<std::string> columns = {"cell_type", "category"};
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty() || line[0] == '#') {
            continue;
        }
        auto fields = detail::tsv_fields(path, lineno, line, 2, columns);
        std::string cell_type = trim(fields[0]);
        std::string cat_name = trim(fields[1]);
        Category cat;
        try {
            cat = category_from_name(cat_name);
        } catch (const ValidationError&) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": unknown category '"
                                  + cat_name + "'");
        }
        if (cat == Category::Neoplastic) {
            throw ValidationError(path + ":" + std::to_string(lineno)
                                  + ": Neoplastic is not a valid marker category; it is only "
                                    "assigned by refinement");
        }
        out[cell_type] = cat;
    }
    return out;
}

/**
 * Parse one or more marker TSVs (`gene<TAB>cell_type<TAB>organ<TAB>source`)
 * against a category map. Entries merge in file order with source tags
 * preserved; unmapped cell types are counted and map to Unknown.
 */
inline MarkerDatabase parse_marker_db(const std::vector<std::string>& db_paths,
                                      const std::string& category_map_path,
                                      MarkerDbReport* report = nullptr) {
    MarkerDatabase db;
    db.category_map = parse_category_map(category_map_path);

    static const std::vector<std::string> columns = {"gene", "cell_type", "organ", "source"};
    for (const auto& path : db_paths) {
        std::ifstream in(path);
        if (!in) {
            throw IoError("cannot open " + path);
        }
        std::string line;
        int64_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty() || line[0] == '#') {
                continue;
            }
            auto fields = detail::tsv_fields(path, lineno, line, 4, columns);
            MarkerEntry entry;
            entry.gene = canonical_gene_symbol(fields[0]);
            entry.cell_type = trim(fields[1]);
            entry.organ = trim(fields[2]);
            entry.source = trim(fields[3]);
            if (entry.gene.empty()) {
                throw ValidationError(path + ":" + std::to_string(lineno) + ": empty gene symbol");
            }
            auto it = db.category_map.find(entry.cell_type);
            if (it != db.category_map.end()) {
                entry.category = it->second;
            } else {
                entry.category = Category::Unknown;
                if (report) {
                    ++report->unmapped_cell_types;
                }
            }
            db.entries.push_back(std::move(entry));
        }
    }
    if (report && report->unmapped_cell_types > 0) {
        report->warnings.push_back(std::to_string(report->unmapped_cell_types)
                                   + " marker entries had cell types absent from the category map"
                                     " and were set to Unknown");
    }
    db.build_index();
    return db;
}

/// Curated cancer-associated genes, TSV `gene<TAB>source`.
struct CancerGeneSet {
    std::unordered_set<std::string> genes;  // canonical symbols
    std::vector<std::string> sources;

    bool contains(const std::string& canonical_symbol) const {
        return genes.count(canonical_symbol) > 0;
    }
};

inline CancerGeneSet parse_cancer_genes(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    CancerGeneSet out;
    std::unordered_set<std::string> sources_seen;
    std::string line;
    int64_t lineno = 0;
    static const std::vector<std::string> columns = {"gene", "source"};
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty() || line[0] == '#') {
            continue;
        }
        auto fields = detail::tsv_fields(path, lineno, line, 2, columns);
        auto gene = canonical_gene_symbol(fields[0]);
        if (gene.empty()) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": empty gene symbol");
        }
        out.genes.insert(gene);
        auto source = trim(fields[1]);
        if (sources_seen.insert(source).second) {
            out.sources.push_back(source);
        }
    }
    return out;
}

}

#endif
