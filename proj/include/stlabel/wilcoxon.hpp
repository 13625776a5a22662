#ifndef STLABEL_WILCOXON_HPP
#define STLABEL_WILCOXON_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "leiden.hpp"
#include "parallel.hpp"
#include "util.hpp"

/**
 * @file wilcoxon.hpp
 *
 * One-vs-rest Wilcoxon rank-sum differential expression and top-N marker
 * extraction.
 */

namespace stlabel {

/// Per-(cluster, gene) test result. `rank` is 1-based within the cluster,
/// ordered by descending z with ties broken by gene name.
struct DEGEntry {
    int64_t gene = 0;
    double z = 0.0;
    double p_value = 1.0;
    double log_fold_change = 0.0;
    int64_t rank = 0;
};

struct DEGTable {
    // per_cluster[k] holds every tested gene for cluster k, sorted by rank.
    std::vector<std::vector<DEGEntry>> per_cluster;
    std::vector<uint8_t> rest_empty;  // flagged when a cluster is the whole dataset
    std::vector<std::string> gene_names;
};

namespace wilcoxon_detail {

/**
 * Tie-corrected normal approximation of the two-sided rank-sum test.
 * `group` flags in-cluster samples; z is signed so positive means the
 * flagged group ranks higher (overexpressed). All-tied data gives z = 0,
 * p = 1 by convention. Continuity correction of 0.5 toward zero.
 */
inline void ranksum_z_p(const std::vector<double>& values, const std::vector<uint8_t>& group,
                        double& z_out, double& p_out) {
    const size_t n = values.size();
    size_t n1 = 0;
    for (auto g : group) {
        n1 += g ? 1 : 0;
    }
    const size_t n2 = n - n1;
    if (n1 == 0 || n2 == 0) {
        throw ValidationError("ranksum: both groups must be non-empty");
    }

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });

    // Average ranks over tie runs; accumulate the tie-correction term.
    double rank_sum_in = 0.0;
    double tie_term = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        double t = static_cast<double>(j - i + 1);
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (size_t s = i; s <= j; ++s) {
            if (group[order[s]]) {
                rank_sum_in += avg_rank;
            }
        }
        tie_term += t * t * t - t;
        i = j + 1;
    }

    const double dn = static_cast<double>(n);
    const double dn1 = static_cast<double>(n1);
    const double dn2 = static_cast<double>(n2);
    double u = rank_sum_in - dn1 * (dn1 + 1.0) / 2.0;
    double mu = dn1 * dn2 / 2.0;
    double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (var <= 0.0) {
        z_out = 0.0;
        p_out = 1.0;
        return;
    }
    double d = u - mu;
    double corrected = d == 0.0 ? 0.0 : std::max(0.0, std::abs(d) - 0.5);
    double z = (d < 0.0 ? -corrected : corrected) / std::sqrt(var);
    z_out = z;
    p_out = std::erfc(std::abs(z) / std::sqrt(2.0));
}

}

/**
 * Test every gene in every cluster against the rest of the cells.
 *
 * A cluster covering the whole dataset has no rest group; its table is left
 * empty and flagged. z ties rank deterministically by ascending gene name.
 */
inline DEGTable wilcoxon_one_vs_rest(const Eigen::MatrixXd& normalized,
                                     const ClusterAssignment& assignment,
                                     const std::vector<std::string>& gene_names,
                                     int threads = 1) {
    const int64_t n_cells = normalized.rows();
    const int64_t n_genes = normalized.cols();
    if (static_cast<int64_t>(assignment.labels.size()) != n_cells) {
        throw ValidationError("wilcoxon: assignment length does not match matrix rows");
    }
    if (static_cast<int64_t>(gene_names.size()) != n_genes) {
        throw ValidationError("wilcoxon: gene name list does not match matrix columns");
    }
    const int64_t k = assignment.n_clusters;

    DEGTable table;
    table.per_cluster.resize(k);
    table.rest_empty.assign(k, 0);
    table.gene_names = gene_names;

    std::vector<int64_t> cluster_size(k, 0);
    for (auto l : assignment.labels) {
        ++cluster_size[l];
    }

    for (int64_t c = 0; c < k; ++c) {
        if (cluster_size[c] == 0) {
            throw ValidationError("wilcoxon: cluster " + std::to_string(c) + " has no members");
        }
        if (cluster_size[c] == n_cells) {
            table.rest_empty[c] = 1;
            continue;
        }

        std::vector<uint8_t> in_cluster(n_cells);
        for (int64_t i = 0; i < n_cells; ++i) {
            in_cluster[i] = assignment.labels[i] == c ? 1 : 0;
        }
        auto& rows = table.per_cluster[c];
        rows.assign(n_genes, DEGEntry{});

        parallel_for(static_cast<size_t>(n_genes), threads, [&](size_t begin, size_t end) {
            std::vector<double> values(n_cells);
            for (size_t g = begin; g < end; ++g) {
                double sum_in = 0.0, sum_rest = 0.0;
                for (int64_t i = 0; i < n_cells; ++i) {
                    values[i] = normalized(i, static_cast<int64_t>(g));
                    (in_cluster[i] ? sum_in : sum_rest) += values[i];
                }
                DEGEntry& e = rows[g];
                e.gene = static_cast<int64_t>(g);
                wilcoxon_detail::ranksum_z_p(values, in_cluster, e.z, e.p_value);
                e.log_fold_change = sum_in / static_cast<double>(cluster_size[c])
                                    - sum_rest / static_cast<double>(n_cells - cluster_size[c]);
            }
        });

        std::sort(rows.begin(), rows.end(), [&](const DEGEntry& a, const DEGEntry& b) {
            if (a.z != b.z) {
                return a.z > b.z;
            }
            return gene_names[a.gene] < gene_names[b.gene];
        });
        for (size_t r = 0; r < rows.size(); ++r) {
            rows[r].rank = static_cast<int64_t>(r) + 1;
        }
    }
    return table;
}

/**
 * Genes of the cluster at ranks 1..n, restricted to upregulated (z > 0)
 * entries. Returns a shorter list when fewer positive-z genes exist; an
 * empty list makes downstream labeling fall through to Unknown.
 */
inline std::vector<int64_t> top_n(const DEGTable& table, int64_t cluster, int64_t n) {
    if (n < 1) {
        throw ValidationError("top_n: n must be at least 1");
    }
    if (cluster < 0 || cluster >= static_cast<int64_t>(table.per_cluster.size())) {
        throw ValidationError("top_n: unknown cluster index " + std::to_string(cluster));
    }
    std::vector<int64_t> out;
    for (const auto& e : table.per_cluster[cluster]) {
        if (static_cast<int64_t>(out.size()) == n) {
            break;
        }
        if (e.z > 0.0) {
            out.push_back(e.gene);
        } else {
            break;  // rows are sorted by z descending; nothing positive follows
        }
    }
    return out;
}

/// DEG dump, TSV `cluster<TAB>gene<TAB>z<TAB>p<TAB>rank`.
inline void write_deg_table(const DEGTable& table, const std::string& path) {
    std::string body;
    for (size_t c = 0; c < table.per_cluster.size(); ++c) {
        for (const auto& e : table.per_cluster[c]) {
            body += std::to_string(c) + "\t" + table.gene_names[e.gene] + "\t" + format_double(e.z)
                    + "\t" + format_double(e.p_value) + "\t" + std::to_string(e.rank) + "\n";
        }
    }
    write_text_file(path, body);
}

}

#endif
