#ifndef STLABEL_PIPELINE_HPP
#define STLABEL_PIPELINE_HPP

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "align.hpp"
#include "boundaries.hpp"
#include "config.hpp"
#include "dataset_io.hpp"
#include "errors.hpp"
#include "expression.hpp"
#include "knn.hpp"
#include "labeling.hpp"
#include "leiden.hpp"
#include "markers.hpp"
#include "metrics.hpp"
#include "normalize.hpp"
#include "parallel.hpp"
#include "pca.hpp"
#include "slide.hpp"
#include "tiling.hpp"
#include "util.hpp"
#include "wilcoxon.hpp"

/**
 * @file pipeline.hpp
 *
 * Stage orchestration with on-disk caching. Six stages, each owning one
 * directory under the output root:
 *
 *   ingest      aligned matrix + boundaries + zero-count flags + report
 *   preprocess  embedding.bin/.json + graph.tsv
 *   cluster     clusters.tsv + meta.json
 *   deg         deg.tsv + meta.json
 *   label       labels.tsv + clusters.json
 *   tile        ../dataset (patch bundles + manifest.json)
 *
 * Every stage stores a stamp.json carrying its cache key. Keys chain: each
 * stage hashes its own parameters together with its predecessor's key, and
 * the ingest key hashes the raw input bytes, so any upstream change
 * invalidates everything downstream and nothing else. Thread count is
 * deliberately excluded from all keys.
 */

namespace stlabel {

struct StageStatus {
    std::string name;
    std::string key;
    bool cached = false;
};

class Pipeline {
public:
    Pipeline(PipelineConfig config, std::string out_dir, int threads)
        : cfg_(std::move(config)), out_(std::move(out_dir)), threads_(threads) {
        if (out_.empty()) {
            throw ValidationError("no output directory: set [run] out or pass --out");
        }
        if (threads_ < 1) {
            throw ValidationError("threads must be at least 1");
        }
    }

    const PipelineConfig& config() const { return cfg_; }
    std::string dataset_dir() const { return out_ + "/dataset"; }

    /// Compute (or reuse) one stage. Predecessor artifacts must exist.
    StageStatus run_stage(const std::string& name) {
        try {
            return run_stage_inner(name);
        } catch (const ValidationError& e) {
            throw ValidationError("stage " + name + ": " + e.what());
        } catch (const IoError& e) {
            throw IoError("stage " + name + ": " + e.what());
        }
    }

private:
    StageStatus run_stage_inner(const std::string& name) {
        const std::string key = stage_key(name);
        StageStatus status{name, key, false};
        if (stamp_matches(name, key)) {
            status.cached = true;
            return status;
        }
        {
            if (name == "ingest") {
                compute_ingest();
            } else if (name == "preprocess") {
                compute_preprocess();
            } else if (name == "cluster") {
                compute_cluster();
            } else if (name == "deg") {
                compute_deg();
            } else if (name == "label") {
                compute_label();
            } else if (name == "tile") {
                compute_tile();
            } else {
                throw ValidationError("unknown stage " + name);
            }
        }
        write_stamp(name, key);
        return status;
    }

public:

    /// Fail unless `name` is cached and current; used by subcommands to
    /// refuse running against missing or stale predecessors.
    void require_cached(const std::string& name) {
        if (!stamp_matches(name, stage_key(name))) {
            throw ValidationError(name + " required: no up-to-date cached " + name
                                  + " stage under " + out_);
        }
    }

    static const std::vector<std::string>& stage_order() {
        static const std::vector<std::string> order = {"ingest", "preprocess", "cluster",
                                                       "deg",    "label",      "tile"};
        return order;
    }

    /// All stages in order, plus a deterministic run.log (no timestamps).
    std::vector<StageStatus> run_all() {
        std::vector<StageStatus> statuses;
        for (const auto& name : stage_order()) {
            statuses.push_back(run_stage(name));
        }
        std::string log;
        log += "config_hash " + cfg_.config_hash + "\n";
        log += "seed " + std::to_string(cfg_.seed) + "\n";
        for (const auto& s : statuses) {
            log += "stage " + s.name + " key " + s.key + " "
                   + (s.cached ? "cached" : "computed") + "\n";
        }
        write_text_file(out_ + "/run.log", log);
        return statuses;
    }

private:
    PipelineConfig cfg_;
    std::string out_;
    int threads_;
    std::unordered_map<std::string, std::string> file_hash_cache_;

    std::string stage_dir(const std::string& name) const {
        return name == "tile" ? dataset_dir() : out_ + "/" + name;
    }

    std::string hash_file(const std::string& path) {
        auto it = file_hash_cache_.find(path);
        if (it != file_hash_cache_.end()) {
            return it->second;
        }
        std::string h = hex64(fnv1a64(read_text_file(path)));
        file_hash_cache_.emplace(path, h);
        return h;
    }

    std::string chain(const std::vector<std::string>& parts) const {
        std::string joined;
        for (const auto& p : parts) {
            joined += p;
            joined += '\x1f';
        }
        return hex64(fnv1a64(joined));
    }

    std::string effective_cells_path() const {
        if (!cfg_.inputs.cells.empty()) {
            return cfg_.inputs.cells;
        }
        return (std::filesystem::path(cfg_.inputs.matrix).parent_path() / "cells.txt").string();
    }

    std::string effective_genes_path() const {
        if (!cfg_.inputs.genes.empty()) {
            return cfg_.inputs.genes;
        }
        return (std::filesystem::path(cfg_.inputs.matrix).parent_path() / "genes.txt").string();
    }

    std::string stage_key(const std::string& name) {
        if (name == "ingest") {
            std::vector<std::string> parts = {"ingest"};
            parts.push_back(hash_file(cfg_.inputs.matrix));
            parts.push_back(hash_file(effective_cells_path()));
            parts.push_back(hash_file(effective_genes_path()));
            parts.push_back(hash_file(cfg_.inputs.boundaries));
            for (const auto& m : cfg_.inputs.markers) {
                parts.push_back(hash_file(m));
            }
            parts.push_back(hash_file(cfg_.inputs.categories));
            parts.push_back(hash_file(cfg_.inputs.cancer_genes));
            parts.push_back(hash_file(cfg_.inputs.slide));
            return chain(parts);
        }
        if (name == "preprocess") {
            return chain({"preprocess", stage_key("ingest"), format_double(cfg_.target_sum),
                          std::to_string(cfg_.n_components), std::to_string(cfg_.k),
                          std::to_string(cfg_.seed)});
        }
        if (name == "cluster") {
            return chain({"cluster", stage_key("preprocess"), format_double(cfg_.resolution),
                          std::to_string(cfg_.max_iterations), std::to_string(cfg_.seed)});
        }
        if (name == "deg") {
            return chain({"deg", stage_key("cluster")});
        }
        if (name == "label") {
            return chain({"label", stage_key("deg"), std::to_string(cfg_.top_n),
                          std::to_string(cfg_.top_m), format_double(cfg_.tau_vote),
                          format_double(cfg_.tau_cancer), cfg_.binary_votes ? "1" : "0"});
        }
        if (name == "tile") {
            return chain({"tile", stage_key("label"), std::to_string(cfg_.patch_size),
                          std::to_string(cfg_.stride)});
        }
        throw ValidationError("unknown stage " + name);
    }

    bool stamp_matches(const std::string& name, const std::string& key) const {
        const std::string path = stage_dir(name) + "/stamp.json";
        if (!std::filesystem::exists(path)) {
            return false;
        }
        try {
            auto j = nlohmann::json::parse(read_text_file(path));
            return j.at("stage") == name && j.at("key") == key;
        } catch (...) {
            return false;
        }
    }

    void write_stamp(const std::string& name, const std::string& key) const {
        ordered_json j;
        j["stage"] = name;
        j["key"] = key;
        write_text_file(stage_dir(name) + "/stamp.json", j.dump(2) + "\n");
    }

    void make_stage_dir(const std::string& name) const {
        std::error_code ec;
        std::filesystem::create_directories(stage_dir(name), ec);
        if (ec) {
            throw IoError("cannot create " + stage_dir(name) + ": " + ec.message());
        }
    }

    // ---- stage bodies -------------------------------------------------

    void compute_ingest() {
        make_stage_dir("ingest");
        ExpressionParseReport expr_report;
        auto matrix = parse_expression(cfg_.inputs.matrix, &expr_report, cfg_.inputs.cells,
                                       cfg_.inputs.genes);
        BoundaryParseReport boundary_report;
        auto cells = parse_boundaries(cfg_.inputs.boundaries, &boundary_report);
        MarkerDbReport db_report;
        parse_marker_db(cfg_.inputs.markers, cfg_.inputs.categories, &db_report);
        parse_cancer_genes(cfg_.inputs.cancer_genes);
        auto slide = parse_slide_manifest(cfg_.inputs.slide);

        auto aligned = align(matrix, cells);
        auto violations = extent_violations(slide, aligned.cells);

        const std::string dir = stage_dir("ingest");
        write_expression(aligned.matrix, dir + "/matrix.mtx");
        write_boundaries(aligned.cells, dir + "/boundaries.geojson");
        write_slide_manifest(slide, dir + "/slide.txt");

        std::string zeros;
        int64_t n_zero = 0;
        for (size_t i = 0; i < aligned.zero_count_cells.size(); ++i) {
            zeros += aligned.matrix.cell_ids[i] + "\t"
                     + (aligned.zero_count_cells[i] ? "1" : "0") + "\n";
            n_zero += aligned.zero_count_cells[i] ? 1 : 0;
        }
        write_text_file(dir + "/zero_count.tsv", zeros);

        ordered_json report;
        report["n_cells_expression"] = matrix.n_cells;
        report["n_cells_boundaries"] = cells.size();
        report["n_cells_aligned"] = aligned.matrix.n_cells;
        report["n_genes"] = aligned.matrix.n_genes;
        report["dropped_expression_only"] = aligned.dropped_expression_only;
        report["dropped_boundary_only"] = aligned.dropped_boundary_only;
        report["zero_count_cells"] = n_zero;
        report["duplicate_triplets_summed"] = expr_report.duplicate_triplets_summed;
        report["interior_rings_ignored"] = boundary_report.rings_ignored;
        report["unmapped_marker_cell_types"] = db_report.unmapped_cell_types;
        report["extent_violations"] = violations;
        report["config_hash"] = cfg_.config_hash;
        write_text_file(dir + "/report.json", report.dump(2) + "\n");
    }

    void compute_preprocess() {
        make_stage_dir("preprocess");
        auto matrix = parse_expression(stage_dir("ingest") + "/matrix.mtx");
        auto normalized = normalize_log(matrix, cfg_.target_sum, threads_);
        auto embedding = pca(normalized, cfg_.n_components, cfg_.seed);
        auto graph = knn_graph(embedding, cfg_.k, threads_);

        const std::string dir = stage_dir("preprocess");
        write_embedding_bin(embedding, dir + "/embedding.bin");
        ordered_json meta;
        meta["rows"] = embedding.n_cells;
        meta["cols"] = embedding.dims;
        meta["kept_genes"] = embedding.kept_genes;
        meta["explained_variance"] = embedding.explained_variance;
        meta["total_variance"] = embedding.total_variance;
        meta["config_hash"] = cfg_.config_hash;
        write_text_file(dir + "/embedding.json", meta.dump(2) + "\n");
        write_edge_list(graph, dir + "/graph.tsv");
    }

    void compute_cluster() {
        make_stage_dir("cluster");
        auto cell_ids = read_cell_ids();
        auto graph = read_edge_list(stage_dir("preprocess") + "/graph.tsv",
                                    static_cast<int64_t>(cell_ids.size()));
        auto assignment = leiden(graph, cfg_.resolution, cfg_.seed, cfg_.max_iterations);

        const std::string dir = stage_dir("cluster");
        write_cluster_assignment(assignment, cell_ids, dir + "/clusters.tsv");
        ordered_json meta;
        meta["n_clusters"] = assignment.n_clusters;
        meta["objective"] = assignment.objective;
        meta["resolution"] = assignment.resolution;
        meta["seed"] = assignment.seed;
        meta["quality"] = assignment.quality;
        meta["config_hash"] = cfg_.config_hash;
        write_text_file(dir + "/meta.json", meta.dump(2) + "\n");
    }

    void compute_deg() {
        make_stage_dir("deg");
        auto matrix = parse_expression(stage_dir("ingest") + "/matrix.mtx");
        auto assignment = read_assignment(matrix.cell_ids);
        auto normalized = normalize_log(matrix, cfg_.target_sum, threads_);
        auto table = wilcoxon_one_vs_rest(normalized, assignment, matrix.gene_names, threads_);

        const std::string dir = stage_dir("deg");
        write_deg_table(table, dir + "/deg.tsv");
        ordered_json meta;
        meta["n_clusters"] = assignment.n_clusters;
        meta["n_genes"] = matrix.n_genes;
        std::vector<int> rest_empty(table.rest_empty.begin(), table.rest_empty.end());
        meta["rest_empty"] = rest_empty;
        meta["config_hash"] = cfg_.config_hash;
        write_text_file(dir + "/meta.json", meta.dump(2) + "\n");
    }

    void compute_label() {
        make_stage_dir("label");
        auto slide = parse_slide_manifest(stage_dir("ingest") + "/slide.txt");
        MarkerDbReport db_report;
        auto db = parse_marker_db(cfg_.inputs.markers, cfg_.inputs.categories, &db_report);
        auto cancer = parse_cancer_genes(cfg_.inputs.cancer_genes);

        const int64_t n_clusters = read_cluster_meta_n();
        auto ranked = read_ranked_genes(n_clusters);

        std::vector<ClusterLabeling> labelings;
        for (int64_t c = 0; c < n_clusters; ++c) {
            std::vector<std::string> genes_n, genes_m;
            for (const auto& [gene, z] : ranked[c]) {
                if (z <= 0.0) {
                    break;
                }
                if (static_cast<int64_t>(genes_m.size()) < cfg_.top_m) {
                    genes_m.push_back(gene);
                }
                if (static_cast<int64_t>(genes_n.size()) < cfg_.top_n) {
                    genes_n.push_back(gene);
                }
                if (static_cast<int64_t>(genes_m.size()) == cfg_.top_m
                    && static_cast<int64_t>(genes_n.size()) == cfg_.top_n) {
                    break;
                }
            }
            auto organ_score = vote(genes_n, db, slide.tissue, cfg_.top_n,
                                    OrganMatch::TissueOrWildcard, cfg_.binary_votes);
            organ_score.cluster = c;
            auto labeling = classify_cluster(
                organ_score,
                [&] {
                    auto s = vote(genes_n, db, slide.tissue, cfg_.top_n, OrganMatch::Any,
                                  cfg_.binary_votes);
                    s.cluster = c;
                    return s;
                },
                cfg_.tau_vote);
            labeling = neoplastic_refine(labeling, genes_m, cancer, cfg_.top_m, cfg_.tau_cancer);
            labelings.push_back(std::move(labeling));
        }

        auto cell_ids = read_cell_ids();
        auto assignment = read_assignment(cell_ids);
        auto zero_flags = read_zero_flags(cell_ids);
        auto table = propagate(labelings, assignment, cell_ids, zero_flags);

        const std::string dir = stage_dir("label");
        write_cell_labels(table, dir + "/labels.tsv");

        ordered_json clusters = ordered_json::array();
        for (const auto& l : labelings) {
            ordered_json j;
            j["cluster"] = l.cluster;
            j["category"] = category_name(l.category);
            j["used_fallback"] = l.used_fallback;
            if (l.neoplastic_ratio) {
                j["neoplastic_ratio"] = *l.neoplastic_ratio;
            } else {
                j["neoplastic_ratio"] = nullptr;
            }
            j["votes"] = {{"Epithelial", l.score.epithelial},
                          {"Inflammatory", l.score.inflammatory},
                          {"Connective", l.score.connective}};
            clusters.push_back(std::move(j));
        }
        ordered_json meta;
        meta["clusters"] = std::move(clusters);
        meta["tissue"] = slide.tissue;
        meta["config_hash"] = cfg_.config_hash;
        write_text_file(dir + "/clusters.json", meta.dump(2) + "\n");
    }

    void compute_tile() {
        auto slide = parse_slide_manifest(stage_dir("ingest") + "/slide.txt");
        auto cells = parse_boundaries(stage_dir("ingest") + "/boundaries.geojson");
        auto labels = read_label_map();

        auto patches = make_patches(slide, cfg_.patch_size, cfg_.stride);
        std::vector<TargetMaps> maps(patches.size());
        parallel_for(patches.size(), threads_, [&](size_t begin, size_t end) {
            for (size_t i = begin; i < end; ++i) {
                auto members = index_set(patches[i], cells);
                maps[i] = rasterize(patches[i], cells, members, labels);
            }
        });
        write_dataset(dataset_dir(), patches, maps, cfg_.patch_size, cfg_.stride,
                      cfg_.config_hash, ordered_json(cfg_.raw_text), threads_);
    }

    // ---- artifact readers ---------------------------------------------

    std::vector<std::string> read_cell_ids() const {
        auto text = read_text_file(stage_dir("ingest") + "/cells.txt");
        std::vector<std::string> ids;
        for (const auto& line : split(text, '\n')) {
            auto id = trim(line);
            if (!id.empty()) {
                ids.push_back(id);
            }
        }
        return ids;
    }

    ClusterAssignment read_assignment(const std::vector<std::string>& cell_ids) const {
        const std::string path = stage_dir("cluster") + "/clusters.tsv";
        auto text = read_text_file(path);
        ClusterAssignment assignment;
        assignment.resolution = cfg_.resolution;
        assignment.seed = cfg_.seed;
        size_t row = 0;
        for (const auto& line : split(text, '\n')) {
            if (trim(line).empty()) {
                continue;
            }
            auto fields = split(line, '\t');
            int64_t cluster;
            if (fields.size() != 2 || !parse_int64(fields[1], cluster)) {
                throw ValidationError(path + ": malformed assignment line");
            }
            if (row >= cell_ids.size() || fields[0] != cell_ids[row]) {
                throw ValidationError(path + ": cell ids disagree with the ingest stage");
            }
            assignment.labels.push_back(cluster);
            ++row;
        }
        if (row != cell_ids.size()) {
            throw ValidationError(path + ": expected " + std::to_string(cell_ids.size())
                                  + " rows");
        }
        for (auto l : assignment.labels) {
            assignment.n_clusters = std::max(assignment.n_clusters, l + 1);
        }
        return assignment;
    }

    std::vector<uint8_t> read_zero_flags(const std::vector<std::string>& cell_ids) const {
        const std::string path = stage_dir("ingest") + "/zero_count.tsv";
        auto text = read_text_file(path);
        std::vector<uint8_t> flags;
        size_t row = 0;
        for (const auto& line : split(text, '\n')) {
            if (trim(line).empty()) {
                continue;
            }
            auto fields = split(line, '\t');
            if (fields.size() != 2 || row >= cell_ids.size() || fields[0] != cell_ids[row]) {
                throw ValidationError(path + ": flags disagree with the ingest stage");
            }
            flags.push_back(fields[1] == "1" ? 1 : 0);
            ++row;
        }
        if (row != cell_ids.size()) {
            throw ValidationError(path + ": expected " + std::to_string(cell_ids.size())
                                  + " rows");
        }
        return flags;
    }

    int64_t read_cluster_meta_n() const {
        const std::string path = stage_dir("cluster") + "/meta.json";
        try {
            auto j = nlohmann::json::parse(read_text_file(path));
            return j.at("n_clusters").get<int64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path + ": " + e.what());
        }
    }

    /// deg.tsv rows grouped per cluster, rank order preserved: (gene, z).
    std::vector<std::vector<std::pair<std::string, double>>> read_ranked_genes(
        int64_t n_clusters) const {
        const std::string path = stage_dir("deg") + "/deg.tsv";
        auto text = read_text_file(path);
        std::vector<std::vector<std::pair<std::string, double>>> ranked(
            static_cast<size_t>(n_clusters));
        int64_t lineno = 0;
        for (const auto& line : split(text, '\n')) {
            ++lineno;
            if (trim(line).empty()) {
                continue;
            }
            auto fields = split(line, '\t');
            int64_t cluster, rank;
            double z, p;
            if (fields.size() != 5 || !parse_int64(fields[0], cluster) || !parse_double(fields[2], z)
                || !parse_double(fields[3], p) || !parse_int64(fields[4], rank)) {
                throw ValidationError(path + ":" + std::to_string(lineno)
                                      + ": malformed DEG line");
            }
            if (cluster < 0 || cluster >= n_clusters) {
                throw ValidationError(path + ":" + std::to_string(lineno)
                                      + ": cluster out of range");
            }
            auto& rows = ranked[static_cast<size_t>(cluster)];
            if (rank != static_cast<int64_t>(rows.size()) + 1) {
                throw ValidationError(path + ":" + std::to_string(lineno)
                                      + ": ranks must be consecutive from 1");
            }
            rows.push_back({fields[1], z});
        }
        return ranked;
    }

    std::unordered_map<std::string, Category> read_label_map() const {
        auto table = read_cell_labels(stage_dir("label") + "/labels.tsv");
        std::unordered_map<std::string, Category> labels;
        labels.reserve(table.size());
        for (const auto& row : table) {
            labels[row.cell_id] = row.label;
        }
        return labels;
    }
};

/// Full pipeline run per the orchestration contract.
inline std::vector<StageStatus> run_pipeline(const PipelineConfig& config,
                                             const std::string& out_dir, int threads) {
    Pipeline p(config, out_dir, threads);
    return p.run_all();
}

/// Dataset comparison driven by two directories in the tiling layout.
/// Refuses mismatched class lists and mismatched patch grids.
inline MetricReport evaluate_datasets(const std::string& gt_dir, const std::string& pred_dir) {
    auto gt = read_dataset(gt_dir);
    auto pred = read_dataset(pred_dir);
    if (gt.classes != pred.classes) {
        throw ValidationError("eval: class lists differ between " + gt_dir + " and " + pred_dir);
    }
    if (gt.patches.size() != pred.patches.size()) {
        throw ValidationError("eval: patch counts differ between " + gt_dir + " and " + pred_dir);
    }
    std::vector<Category> classes(type_channel_categories.begin(), type_channel_categories.end());
    MetricAccumulator acc(classes);
    for (size_t i = 0; i < gt.patches.size(); ++i) {
        const auto& g = gt.patches[i];
        const auto& p = pred.patches[i];
        if (g.spec.x0 != p.spec.x0 || g.spec.y0 != p.spec.y0 || g.spec.width != p.spec.width
            || g.spec.height != p.spec.height) {
            throw ValidationError("eval: patch " + std::to_string(g.spec.index)
                                  + " geometry differs between directories");
        }
        acc.add_patch(g.instance_map, g.type_map, p.instance_map, p.type_map);
    }
    return acc.finalize();
}

}

#endif
