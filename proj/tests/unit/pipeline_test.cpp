#include <gtest/gtest.h>

#include <filesystem>

#include <stlabel/config.hpp>
#include <stlabel/labeling.hpp>
#include <stlabel/pipeline.hpp>

#include "support/planted.hpp"
#include "support/temp_dir.hpp"

using namespace stlabel;

TEST(Config, DefaultsApplied) {
    auto cfg = parse_config(
        "[inputs]\n"
        "matrix = m.mtx\n"
        "boundaries = b.geojson\n"
        "markers = db.tsv\n"
        "categories = cat.tsv\n"
        "cancer_genes = can.tsv\n"
        "slide = slide.txt\n");
    EXPECT_DOUBLE_EQ(cfg.target_sum, 1e4);
    EXPECT_EQ(cfg.n_components, 50);
    EXPECT_EQ(cfg.k, 15);
    EXPECT_DOUBLE_EQ(cfg.resolution, 4.0);
    EXPECT_EQ(cfg.max_iterations, 100);
    EXPECT_EQ(cfg.top_n, 10);
    EXPECT_EQ(cfg.top_m, 20);
    EXPECT_DOUBLE_EQ(cfg.tau_vote, 5.0);
    EXPECT_DOUBLE_EQ(cfg.tau_cancer, 0.25);
    EXPECT_FALSE(cfg.binary_votes);
    EXPECT_EQ(cfg.patch_size, 256);
    EXPECT_EQ(cfg.stride, 256);
    EXPECT_EQ(cfg.seed, 0u);
    EXPECT_EQ(cfg.config_hash.size(), 16u);
    cfg.validate();
}

TEST(Config, ParsesAllSections) {
    auto cfg = parse_config(
        "[inputs]\n"
        "matrix = m.mtx\n"
        "cells = c.txt\n"
        "genes = g.txt\n"
        "boundaries = b.geojson\n"
        "markers = db1.tsv, db2.tsv\n"
        "categories = cat.tsv\n"
        "cancer_genes = can.tsv\n"
        "slide = slide.txt\n"
        "[preprocess]\n"
        "target_sum = 5000\n"
        "n_components = 20\n"
        "k = 10\n"
        "[cluster]\n"
        "resolution = 2.5\n"
        "max_iterations = 40\n"
        "[labeling]\n"
        "top_n = 8\n"
        "top_m = 16\n"
        "tau_vote = 3.5\n"
        "tau_cancer = 0.4\n"
        "binary_votes = true\n"
        "[tiling]\n"
        "patch_size = 128\n"
        "stride = 64\n"
        "[run]\n"
        "seed = 11\n"
        "out = results\n");
    EXPECT_EQ(cfg.inputs.markers, (std::vector<std::string>{"db1.tsv", "db2.tsv"}));
    EXPECT_EQ(cfg.inputs.cells, "c.txt");
    EXPECT_DOUBLE_EQ(cfg.target_sum, 5000.0);
    EXPECT_EQ(cfg.n_components, 20);
    EXPECT_EQ(cfg.k, 10);
    EXPECT_DOUBLE_EQ(cfg.resolution, 2.5);
    EXPECT_EQ(cfg.max_iterations, 40);
    EXPECT_EQ(cfg.top_n, 8);
    EXPECT_EQ(cfg.top_m, 16);
    EXPECT_DOUBLE_EQ(cfg.tau_vote, 3.5);
    EXPECT_DOUBLE_EQ(cfg.tau_cancer, 0.4);
    EXPECT_TRUE(cfg.binary_votes);
    EXPECT_EQ(cfg.patch_size, 128);
    EXPECT_EQ(cfg.stride, 64);
    EXPECT_EQ(cfg.seed, 11u);
    EXPECT_EQ(cfg.out, "results");
}

TEST(Config, RelativePathsResolveAgainstBaseDir) {
    auto cfg = parse_config(
        "[inputs]\n"
        "matrix = data/m.mtx\n"
        "boundaries = /abs/b.geojson\n"
        "markers = db.tsv\n"
        "categories = cat.tsv\n"
        "cancer_genes = can.tsv\n"
        "slide = slide.txt\n",
        "/base");
    EXPECT_EQ(cfg.inputs.matrix, "/base/data/m.mtx");
    EXPECT_EQ(cfg.inputs.boundaries, "/abs/b.geojson");
    EXPECT_EQ(cfg.inputs.markers[0], "/base/db.tsv");
}

TEST(Config, UnknownKeysAndSectionsRejected) {
    try {
        parse_config("[inputs]\nmatrx = typo.mtx\n");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("line 2"), std::string::npos);
        EXPECT_NE(msg.find("matrx"), std::string::npos);
    }
    EXPECT_THROW(parse_config("[nosuch]\n"), ValidationError);
    EXPECT_THROW(parse_config("[cluster]\nresolution\n"), ValidationError);
    EXPECT_THROW(parse_config("key_before_section = 1\n"), ValidationError);
}

TEST(Config, ValueValidation) {
    const std::string inputs =
        "[inputs]\n"
        "matrix = m.mtx\n"
        "boundaries = b.geojson\n"
        "markers = db.tsv\n"
        "categories = cat.tsv\n"
        "cancer_genes = can.tsv\n"
        "slide = slide.txt\n";
    EXPECT_THROW(parse_config(inputs + "[preprocess]\nk = 0\n").validate(), ValidationError);
    EXPECT_THROW(parse_config(inputs + "[preprocess]\ntarget_sum = -5\n").validate(),
                 ValidationError);
    EXPECT_THROW(parse_config(inputs + "[cluster]\nresolution = 0\n").validate(), ValidationError);
    EXPECT_THROW(parse_config(inputs + "[run]\nseed = -3\n"), ValidationError);
    EXPECT_THROW(parse_config(inputs + "[preprocess]\nk = abc\n"), ValidationError);
    EXPECT_THROW(parse_config("[inputs]\nmatrix = m.mtx\n").validate(), ValidationError);
}

TEST(Config, CommentsAndBlanksIgnored) {
    auto cfg = parse_config(
        "# leading comment\n"
        "; alt comment\n"
        "\n"
        "[inputs]\n"
        "matrix = m.mtx\n"
        "boundaries = b.geojson\n"
        "markers = db.tsv\n"
        "categories = cat.tsv\n"
        "cancer_genes = can.tsv\n"
        "slide = slide.txt\n");
    EXPECT_EQ(cfg.inputs.matrix, "m.mtx");
}

TEST(Config, LoadConfigNamesFileInErrors) {
    testsupport::TempDir tmp;
    EXPECT_THROW(load_config(tmp.sub("missing.ini")), IoError);
    auto path = tmp.sub("bad.ini");
    write_text_file(path, "[inputs]\nbogus = 1\n");
    try {
        load_config(path);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.ini"), std::string::npos);
    }
}

namespace {

struct PlantedRun {
    testsupport::TempDir tmp;
    testsupport::PlantedFixture fx;
    PipelineConfig cfg;
    std::string out;

    PlantedRun() {
        fx = testsupport::write_planted_fixture(tmp.path());
        cfg = load_config(fx.config_path);
        out = tmp.sub("out");
    }
};

}  // namespace

TEST(Pipeline, EndToEndPlantedRun) {
    PlantedRun run;
    auto statuses = run_pipeline(run.cfg, run.out, 2);
    ASSERT_EQ(statuses.size(), 6u);
    for (const auto& s : statuses) {
        EXPECT_FALSE(s.cached) << s.name;
        EXPECT_EQ(s.key.size(), 16u);
    }

    // labels recover the planted truth
    auto labels = read_cell_labels(run.out + "/label/labels.tsv");
    ASSERT_EQ(labels.size(), run.fx.cell_ids.size());
    int64_t correct = 0;
    for (size_t i = 0; i < labels.size(); ++i) {
        EXPECT_EQ(labels[i].cell_id, run.fx.cell_ids[i]);
        correct += labels[i].label == run.fx.expected[i] ? 1 : 0;
    }
    EXPECT_GE(static_cast<double>(correct) / static_cast<double>(labels.size()), 0.99);

    // the dataset is readable and covers the 1024x1024 slide at 256/256
    auto ds = read_dataset(run.out + "/dataset");
    EXPECT_EQ(ds.patches.size(), 16u);
    EXPECT_EQ(ds.config_hash, run.cfg.config_hash);

    // run.log is deterministic text without timestamps
    auto log = read_text_file(run.out + "/run.log");
    EXPECT_NE(log.find("config_hash " + run.cfg.config_hash), std::string::npos);
    EXPECT_NE(log.find("stage ingest key "), std::string::npos);
    EXPECT_NE(log.find("computed"), std::string::npos);

    // second run: every stage cached, byte-identical log
    auto again = run_pipeline(run.cfg, run.out, 2);
    for (const auto& s : again) {
        EXPECT_TRUE(s.cached) << s.name;
    }
    auto log2 = read_text_file(run.out + "/run.log");
    EXPECT_EQ(log2.find("computed"), std::string::npos);

    // self-evaluation of the emitted dataset is perfect
    auto report = evaluate_datasets(run.out + "/dataset", run.out + "/dataset");
    EXPECT_DOUBLE_EQ(report.dice, 1.0);
    EXPECT_DOUBLE_EQ(report.jaccard, 1.0);
    EXPECT_DOUBLE_EQ(report.bpq, 1.0);
    EXPECT_DOUBLE_EQ(report.f1, 1.0);
    EXPECT_DOUBLE_EQ(report.macro_f1, 1.0);
    EXPECT_DOUBLE_EQ(report.accuracy, 1.0);
    EXPECT_EQ(report.n_patches, 16);
}

TEST(Pipeline, SubcommandsRefuseMissingPredecessors) {
    PlantedRun run;
    Pipeline p(run.cfg, run.out, 1);
    try {
        p.require_cached("ingest");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("ingest required"), std::string::npos);
    }
    EXPECT_THROW(p.require_cached("cluster"), ValidationError);
}

TEST(Pipeline, SeedChangeInvalidatesClusterNotIngest) {
    PlantedRun run;
    run_pipeline(run.cfg, run.out, 1);

    auto cfg2 = run.cfg;
    cfg2.seed = 1;
    Pipeline p(cfg2, run.out, 1);
    EXPECT_NO_THROW(p.require_cached("ingest"));  // inputs unchanged
    EXPECT_THROW(p.require_cached("preprocess"), ValidationError);
    EXPECT_THROW(p.require_cached("cluster"), ValidationError);
    EXPECT_THROW(p.require_cached("tile"), ValidationError);
}

TEST(Pipeline, ParameterChangeInvalidatesDownstreamOnly) {
    PlantedRun run;
    run_pipeline(run.cfg, run.out, 1);

    auto cfg2 = run.cfg;
    cfg2.tau_cancer = 0.5;
    Pipeline p(cfg2, run.out, 1);
    EXPECT_NO_THROW(p.require_cached("ingest"));
    EXPECT_NO_THROW(p.require_cached("preprocess"));
    EXPECT_NO_THROW(p.require_cached("cluster"));
    EXPECT_NO_THROW(p.require_cached("deg"));
    EXPECT_THROW(p.require_cached("label"), ValidationError);
    EXPECT_THROW(p.require_cached("tile"), ValidationError);
}

TEST(Pipeline, InputEditInvalidatesEverything) {
    PlantedRun run;
    run_pipeline(run.cfg, run.out, 1);

    // append a comment: content hash changes even though parse is identical
    auto slide_text = read_text_file(run.tmp.sub("slide.txt"));
    write_text_file(run.tmp.sub("slide.txt"), slide_text + "# touched\n");
    Pipeline p(run.cfg, run.out, 1);
    EXPECT_THROW(p.require_cached("ingest"), ValidationError);
    EXPECT_THROW(p.require_cached("tile"), ValidationError);
}

TEST(Pipeline, StageErrorsArePrefixed) {
    PlantedRun run;
    auto cfg = run.cfg;
    cfg.inputs.matrix = run.tmp.sub("does_not_exist.mtx");
    try {
        run_pipeline(cfg, run.out, 1);
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("stage ingest:"), std::string::npos);
    }
}

TEST(Pipeline, InvalidConstructionArguments) {
    PlantedRun run;
    EXPECT_THROW(Pipeline(run.cfg, "", 1), ValidationError);
    EXPECT_THROW(Pipeline(run.cfg, run.out, 0), ValidationError);
}

TEST(Evaluate, RejectsMismatchedDatasets) {
    PlantedRun run;
    run_pipeline(run.cfg, run.out, 1);
    const std::string ds = run.out + "/dataset";

    // drop one patch from a copy: patch-count mismatch
    auto clone = run.tmp.sub("clone");
    std::filesystem::copy(ds, clone, std::filesystem::copy_options::recursive);
    auto manifest = ordered_json::parse(read_text_file(clone + "/manifest.json"));
    manifest["patches"].erase(manifest["patches"].size() - 1);
    write_text_file(clone + "/manifest.json", manifest.dump(2) + "\n");
    EXPECT_THROW(evaluate_datasets(ds, clone), ValidationError);

    // class list mismatch
    auto clone2 = run.tmp.sub("clone2");
    std::filesystem::copy(ds, clone2, std::filesystem::copy_options::recursive);
    auto manifest2 = ordered_json::parse(read_text_file(clone2 + "/manifest.json"));
    manifest2["classes"] = {"background", "Other"};
    write_text_file(clone2 + "/manifest.json", manifest2.dump(2) + "\n");
    EXPECT_THROW(evaluate_datasets(ds, clone2), ValidationError);
}

TEST(Pipeline, IngestReportCountsDrops) {
    PlantedRun run;
    Pipeline p(run.cfg, run.out, 1);
    p.run_stage("ingest");
    auto report = ordered_json::parse(read_text_file(run.out + "/ingest/report.json"));
    EXPECT_EQ(report.at("n_cells_aligned").get<int64_t>(), 300);
    EXPECT_EQ(report.at("dropped_expression_only").get<int64_t>(), 0);
    EXPECT_EQ(report.at("dropped_boundary_only").get<int64_t>(), 0);
}
