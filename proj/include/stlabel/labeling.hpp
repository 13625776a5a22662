#ifndef STLABEL_LABELING_HPP
#define STLABEL_LABELING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "categories.hpp"
#include "errors.hpp"
#include "leiden.hpp"
#include "markers.hpp"
#include "util.hpp"
#include "wilcoxon.hpp"

/**
 * @file labeling.hpp
 *
 * Cluster-level coarse cell typing: rank-weighted marker voting with an
 * organ-agnostic fallback, neoplastic refinement of epithelial clusters,
 * and propagation of cluster decisions to cells.
 */

namespace stlabel {

/// Per-category vote totals for one cluster.
struct CategoryScore {
    int64_t cluster = 0;
    double epithelial = 0.0;
    double inflammatory = 0.0;
    double connective = 0.0;

    double of(Category c) const {
        switch (c) {
            case Category::Epithelial: return epithelial;
            case Category::Inflammatory: return inflammatory;
            case Category::Connective: return connective;
            default: throw ValidationError("category " + category_name(c) + " holds no votes");
        }
    }

    double& of(Category c) {
        switch (c) {
            case Category::Epithelial: return epithelial;
            case Category::Inflammatory: return inflammatory;
            case Category::Connective: return connective;
            default: throw ValidationError("category " + category_name(c) + " holds no votes");
        }
    }

    double max_score() const {
        return std::max({epithelial, inflammatory, connective});
    }

    /// Argmax over votable categories; a tie at the maximum yields nullopt,
    /// which classify_cluster turns into Unknown.
    std::optional<Category> argmax() const {
        double best = max_score();
        std::optional<Category> winner;
        for (auto c : votable_categories) {
            if (of(c) == best) {
                if (winner) {
                    return std::nullopt;
                }
                winner = c;
            }
        }
        return winner;
    }
};

/// Which marker entries participate in a voting pass.
enum class OrganMatch {
    TissueOrWildcard,  // entry organ equals the slide tissue, or is `*`
    Any,               // organ-agnostic fallback: every entry counts
};

/// Final decision for one cluster.
struct ClusterLabeling {
    int64_t cluster = 0;
    Category category = Category::Unknown;
    bool used_fallback = false;
    std::optional<double> neoplastic_ratio;  // absent unless refinement ran
    CategoryScore score;
};

/// Per-cell labels after propagation, ordered by cell_id.
struct CellLabelRow {
    std::string cell_id;
    int64_t cluster = 0;
    Category label = Category::Unknown;
    bool used_fallback = false;
    std::optional<double> neoplastic_ratio;
};

using CellLabelTable = std::vector<CellLabelRow>;

/**
 * Rank-weighted marker vote for an ordered DEG list.
 *
 * Gene at rank l (1-based) contributes weight (N - l) times its per-category
 * entry count v_c(g): the number of database entries for g whose organ
 * matches the pass and whose category is c. Unknown-category entries never
 * vote. With `binary_votes`, v_c(g) collapses to a 0/1 category indicator.
 * Note the rank-N gene carries weight zero by construction.
 */
inline CategoryScore vote(const std::vector<std::string>& genes, const MarkerDatabase& db,
                          const std::string& organ, int64_t top_n_weighting,
                          OrganMatch match = OrganMatch::TissueOrWildcard,
                          bool binary_votes = false) {
    if (static_cast<int64_t>(genes.size()) > top_n_weighting) {
        throw ValidationError("vote: gene list longer than the weighting constant N");
    }
    CategoryScore score;
    for (size_t idx = 0; idx < genes.size(); ++idx) {
        const int64_t rank = static_cast<int64_t>(idx) + 1;
        const double weight = static_cast<double>(top_n_weighting - rank);
        auto gene = canonical_gene_symbol(genes[idx]);
        auto it = db.by_gene.find(gene);
        if (it == db.by_gene.end()) {
            continue;
        }
        double counts[3] = {0.0, 0.0, 0.0};
        for (size_t e : it->second) {
            const MarkerEntry& entry = db.entries[e];
            if (entry.category == Category::Unknown) {
                continue;
            }
            if (match == OrganMatch::TissueOrWildcard && entry.organ != organ
                && entry.organ != organ_wildcard) {
                continue;
            }
            counts[static_cast<size_t>(entry.category)] += 1.0;
        }
        for (auto c : votable_categories) {
            double v = counts[static_cast<size_t>(c)];
            if (binary_votes && v > 0.0) {
                v = 1.0;
            }
            score.of(c) += weight * v;
        }
    }
    return score;
}

/**
 * Threshold-and-fallback decision for one cluster, before refinement.
 *
 * The organ-restricted score wins when its maximum reaches tau_vote; an
 * argmax tie means no confident assignment and yields Unknown. Otherwise
 * the organ-agnostic score (computed lazily via `make_fallback`) gets the
 * same treatment with used_fallback set. Two failures yield Unknown.
 */
inline ClusterLabeling classify_cluster(const CategoryScore& organ_score,
                                        const std::function<CategoryScore()>& make_fallback,
                                        double tau_vote) {
    if (tau_vote < 0.0) {
        throw ValidationError("classify_cluster: tau_vote must be non-negative");
    }
    ClusterLabeling out;
    out.cluster = organ_score.cluster;
    out.score = organ_score;
    if (organ_score.max_score() >= tau_vote) {
        auto winner = organ_score.argmax();
        out.category = winner.value_or(Category::Unknown);
        return out;
    }
    CategoryScore fallback = make_fallback();
    if (fallback.max_score() >= tau_vote) {
        auto winner = fallback.argmax();
        out.category = winner.value_or(Category::Unknown);
        out.used_fallback = true;
        out.score = fallback;
        return out;
    }
    out.category = Category::Unknown;
    return out;
}

/**
 * Secondary check separating neoplastic from normal epithelium.
 *
 * Applies only to Epithelial clusters. The overlap of the top-M DEG list
 * with the cancer gene set is divided by M itself (not the possibly shorter
 * list), and the cluster is relabeled Neoplastic only when the ratio
 * strictly exceeds tau_cancer. The ratio is recorded either way.
 */
inline ClusterLabeling neoplastic_refine(ClusterLabeling labeling,
                                         const std::vector<std::string>& top_m_genes,
                                         const CancerGeneSet& cancer_set, int64_t top_m,
                                         double tau_cancer) {
    if (labeling.category != Category::Epithelial) {
        return labeling;
    }
    if (cancer_set.genes.empty()) {
        throw ValidationError("neoplastic_refine: cancer gene set is empty");
    }
    if (static_cast<int64_t>(top_m_genes.size()) > top_m) {
        throw ValidationError("neoplastic_refine: gene list longer than M");
    }
    int64_t overlap = 0;
    for (const auto& g : top_m_genes) {
        if (cancer_set.contains(canonical_gene_symbol(g))) {
            ++overlap;
        }
    }
    double ratio = static_cast<double>(overlap) / static_cast<double>(top_m);
    labeling.neoplastic_ratio = ratio;
    if (ratio > tau_cancer) {
        labeling.category = Category::Neoplastic;
    }
    return labeling;
}

/**
 * Propagate cluster decisions to cells. Cells flagged zero-count at ingest
 * are overridden to Unknown regardless of their cluster. Output is ordered
 * by cell_id (callers pass ids in aligned, sorted order).
 */
inline CellLabelTable propagate(const std::vector<ClusterLabeling>& labelings,
                                const ClusterAssignment& assignment,
                                const std::vector<std::string>& cell_ids,
                                const std::vector<uint8_t>& zero_count_cells) {
    if (cell_ids.size() != assignment.labels.size()) {
        throw ValidationError("propagate: cell id list does not match assignment");
    }
    if (!zero_count_cells.empty() && zero_count_cells.size() != cell_ids.size()) {
        throw ValidationError("propagate: zero-count flag list does not match assignment");
    }
    std::vector<const ClusterLabeling*> by_cluster(assignment.n_clusters, nullptr);
    for (const auto& l : labelings) {
        if (l.cluster < 0 || l.cluster >= assignment.n_clusters) {
            throw ValidationError("propagate: labeling for unknown cluster "
                                  + std::to_string(l.cluster));
        }
        by_cluster[l.cluster] = &l;
    }
    for (int64_t c = 0; c < assignment.n_clusters; ++c) {
        if (!by_cluster[c]) {
            throw ValidationError("propagate: cluster " + std::to_string(c) + " has no labeling");
        }
    }

    CellLabelTable table;
    table.reserve(cell_ids.size());
    for (size_t i = 0; i < cell_ids.size(); ++i) {
        const ClusterLabeling& l = *by_cluster[assignment.labels[i]];
        CellLabelRow row;
        row.cell_id = cell_ids[i];
        row.cluster = assignment.labels[i];
        row.label = l.category;
        row.used_fallback = l.used_fallback;
        row.neoplastic_ratio = l.neoplastic_ratio;
        if (!zero_count_cells.empty() && zero_count_cells[i]) {
            row.label = Category::Unknown;
            row.neoplastic_ratio.reset();
        }
        table.push_back(std::move(row));
    }
    std::sort(table.begin(), table.end(),
              [](const CellLabelRow& a, const CellLabelRow& b) { return a.cell_id < b.cell_id; });
    return table;
}

/// Label dump, TSV `cell_id<TAB>cluster<TAB>label<TAB>used_fallback<TAB>neoplastic_ratio`
/// with `NA` for an absent ratio.
inline void write_cell_labels(const CellLabelTable& table, const std::string& path) {
    std::string body;
    for (const auto& row : table) {
        body += row.cell_id + "\t" + std::to_string(row.cluster) + "\t" + category_name(row.label)
                + "\t" + (row.used_fallback ? "1" : "0") + "\t"
                + (row.neoplastic_ratio ? format_double(*row.neoplastic_ratio) : std::string("NA"))
                + "\n";
    }
    write_text_file(path, body);
}

inline CellLabelTable read_cell_labels(const std::string& path) {
    auto text = read_text_file(path);
    CellLabelTable table;
    int64_t lineno = 0;
    for (const auto& line : split(text, '\n')) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split(line, '\t');
        if (fields.size() != 5) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": expected 5 columns");
        }
        CellLabelRow row;
        row.cell_id = fields[0];
        if (!parse_int64(fields[1], row.cluster)) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": bad cluster index");
        }
        row.label = category_from_name(fields[2]);
        row.used_fallback = fields[3] == "1";
        if (fields[4] != "NA") {
            double r;
            if (!parse_double(fields[4], r)) {
                throw ValidationError(path + ":" + std::to_string(lineno) + ": bad ratio");
            }
            row.neoplastic_ratio = r;
        }
        table.push_back(std::move(row));
    }
    return table;
}

}

#endif
