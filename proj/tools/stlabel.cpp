#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <stlabel/stlabel.hpp>

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    int threads = 1;
    int64_t seed = -1;  // -1 = keep config value
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config = true) {
    auto* c = cmd->add_option("--config", opts.config_path, "pipeline config file");
    if (needs_config) {
        c->required();
    }
    cmd->add_option("--out", opts.out_dir, "output directory (overrides [run] out)");
    cmd->add_option("--threads", opts.threads, "worker thread cap")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", opts.seed, "seed override")->check(CLI::NonNegativeNumber);
}

stlabel::Pipeline make_pipeline(const CommonOpts& opts) {
    auto cfg = stlabel::load_config(opts.config_path);
    if (opts.seed >= 0) {
        cfg.seed = static_cast<uint64_t>(opts.seed);
    }
    std::string out = opts.out_dir.empty() ? cfg.out : opts.out_dir;
    return stlabel::Pipeline(std::move(cfg), out, opts.threads);
}

void print_status(const stlabel::StageStatus& s) {
    std::cout << "stage " << s.name << ": " << (s.cached ? "cached" : "computed") << " (key "
              << s.key << ")\n";
}

int dispatch(const std::string& subcommand, const CommonOpts& opts, const std::string& gt_dir,
             const std::string& pred_dir) {
    if (subcommand == "eval") {
        auto report = stlabel::evaluate_datasets(gt_dir, pred_dir);
        std::cout << stlabel::metric_report_json(report).dump(2) << "\n";
        return 0;
    }

    auto pipeline = make_pipeline(opts);
    if (subcommand == "run") {
        for (const auto& s : pipeline.run_all()) {
            print_status(s);
        }
        std::cout << "dataset: " << pipeline.dataset_dir() << "\n";
        return 0;
    }
    if (subcommand == "ingest") {
        print_status(pipeline.run_stage("ingest"));
        return 0;
    }
    if (subcommand == "cluster") {
        pipeline.require_cached("ingest");
        print_status(pipeline.run_stage("preprocess"));
        print_status(pipeline.run_stage("cluster"));
        return 0;
    }
    if (subcommand == "deg") {
        pipeline.require_cached("ingest");
        pipeline.require_cached("cluster");
        print_status(pipeline.run_stage("deg"));
        return 0;
    }
    if (subcommand == "label") {
        pipeline.require_cached("ingest");
        pipeline.require_cached("cluster");
        pipeline.require_cached("deg");
        print_status(pipeline.run_stage("label"));
        return 0;
    }
    if (subcommand == "tile") {
        pipeline.require_cached("ingest");
        pipeline.require_cached("label");
        print_status(pipeline.run_stage("tile"));
        return 0;
    }
    throw stlabel::ValidationError("unknown subcommand " + subcommand);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spatial-transcriptomics nucleus labeling and dataset generation"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string gt_dir, pred_dir;

    auto* run = app.add_subcommand("run", "execute every stage with caching");
    add_common(run, opts);
    auto* ingest = app.add_subcommand("ingest", "parse, validate and align the inputs");
    add_common(ingest, opts);
    auto* cluster = app.add_subcommand("cluster", "embed, build the kNN graph and run Leiden");
    add_common(cluster, opts);
    auto* deg = app.add_subcommand("deg", "one-vs-rest Wilcoxon differential expression");
    add_common(deg, opts);
    auto* label = app.add_subcommand("label", "marker voting, refinement and propagation");
    add_common(label, opts);
    auto* tile = app.add_subcommand("tile", "rasterize patches and write the dataset");
    add_common(tile, opts);

    auto* eval = app.add_subcommand("eval", "score a prediction dataset against ground truth");
    eval->add_option("gt", gt_dir, "ground-truth dataset directory")->required();
    eval->add_option("pred", pred_dir, "prediction dataset directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    const std::string subcommand = app.get_subcommands().front()->get_name();
    try {
        return dispatch(subcommand, opts, gt_dir, pred_dir);
    } catch (const stlabel::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const stlabel::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
