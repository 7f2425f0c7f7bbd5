// pm: point-cloud classification with manifold-learning feature augmentation.
//
// Subcommands: gen, embed, train, eval, ablate, report. Exit codes: 0 ok,
// 2 usage error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "pm/runconfig.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct ConfigFlags {
    std::string config_path;
    std::map<std::string, std::string> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value configuration file");
        for (const auto& key : pm::RunConfig::known_keys()) {
            auto& slot = overrides[key];
            cmd->add_option("--" + key, slot, "override config key '" + key + "'");
        }
    }

    pm::RunConfig resolve() const {
        pm::RunConfig cfg;
        if (!config_path.empty()) cfg.load_file(config_path);
        for (const auto& [key, value] : overrides)
            if (!value.empty()) cfg.set(key, value);
        return cfg;
    }
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw pm::InvalidInputError("cannot open '" + path.string() + "' for writing");
    os << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw pm::InvalidInputError("cannot open '" + path.string() + "'");
    std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return s;
}

pm::ShapeOptions::Rotation rotation_from_name(const std::string& name) {
    if (name == "none") return pm::ShapeOptions::Rotation::None;
    if (name == "z") return pm::ShapeOptions::Rotation::ZAxis;
    if (name == "full") return pm::ShapeOptions::Rotation::Full;
    throw pm::UsageError("unknown rotation '" + name + "' (expected none|z|full)");
}

// Embedding provider that reads the on-disk cache and refuses to compute.
pm::EmbeddingProvider cache_only_provider(const fs::path& dir) {
    return [dir](const pm::PointCloud& cloud, int k_lle) {
        const std::uint64_t key =
            pm::embed_cache_key(cloud.points, pm::EmbedMethod::Lle, k_lle, 2);
        Eigen::MatrixXd coords;
        if (!pm::embed_cache_load(dir, key, coords))
            throw pm::InvalidInputError(
                "no cached embedding for cloud '" + cloud.id + "' in " + dir.string() +
                "; run `pm embed --manifest <manifest> --method lle --k " +
                std::to_string(k_lle) + " --d 2 --out " + dir.string() + "` first");
        return coords;
    };
}

bool uses_lle(pm::nn::Augmentation aug) {
    return aug == pm::nn::Augmentation::Lle || aug == pm::nn::Augmentation::LleMp;
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenArgs {
    int classes = 8;
    int per_class = 50;
    int n_points = 256;
    double noise = 0.0;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "xyz";
    std::string rotation = "none";
    double param_jitter = 0.0;
};

int run_gen(const GenArgs& a) {
    if (a.per_class < 1) throw pm::UsageError("gen: --per-class must be >= 1");
    if (a.classes < 2 || a.classes > pm::kNumShapeClasses)
        throw pm::UsageError("gen: --classes must be in [2, 8]");
    const pm::CloudFormat format =
        a.format == "binary" ? pm::CloudFormat::PackedBinary : pm::CloudFormat::XyzText;
    const std::string ext = a.format == "binary" ? ".pmc" : ".xyz";

    pm::ShapeOptions opts;
    opts.rotation = rotation_from_name(a.rotation);
    opts.param_jitter = a.param_jitter;

    fs::create_directories(a.out);
    pm::Dataset ds;
    std::vector<fs::path> rel_paths;
    const int train_per_class = a.per_class * 4 / 5;
    for (int c = 0; c < a.classes; ++c) {
        const auto cls = static_cast<pm::ShapeClass>(c);
        ds.class_names.push_back(pm::shape_class_names()[c]);
        for (int i = 0; i < a.per_class; ++i) {
            const std::uint64_t cloud_seed =
                a.seed + static_cast<std::uint64_t>(c) * 1000003ULL +
                static_cast<std::uint64_t>(i) * 7919ULL;
            pm::DatasetEntry entry;
            entry.cloud = pm::generate_shape(cls, a.n_points, a.noise, cloud_seed, opts);
            entry.cloud.id = pm::shape_class_names()[c] + "_" + std::to_string(i);
            entry.split = i < train_per_class ? pm::Split::Train : pm::Split::Test;
            const fs::path rel = entry.cloud.id + ext;
            pm::save_cloud(entry.cloud, fs::path(a.out) / rel, format);
            rel_paths.push_back(rel);
            ds.entries.push_back(std::move(entry));
        }
    }
    pm::save_manifest(ds, fs::path(a.out) / "manifest.txt", rel_paths);
    std::cout << "wrote " << ds.entries.size() << " clouds (" << a.classes << " classes) to "
              << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// embed
// ---------------------------------------------------------------------------

struct EmbedArgs {
    std::string manifest;
    std::string method = "lle";
    int k = 12;
    int d = 2;
    std::string out;
    std::string format = "xyz";
    bool log_timing = false;
};

int run_embed(const EmbedArgs& a) {
    const pm::EmbedMethod method = pm::embed_method_from_name(a.method);
    const pm::CloudFormat format =
        a.format == "binary" ? pm::CloudFormat::PackedBinary : pm::CloudFormat::XyzText;
    const pm::Dataset ds = pm::load_manifest(a.manifest, format);
    fs::create_directories(a.out);

    int computed = 0, cached = 0;
    for (const auto& entry : ds.entries) {
        const pm::PointCloud std_cloud = pm::standardize(entry.cloud);
        const std::uint64_t key = pm::embed_cache_key(std_cloud.points, method, a.k, a.d);
        Eigen::MatrixXd coords;
        if (pm::embed_cache_load(a.out, key, coords)) {
            ++cached;
            std::cout << entry.cloud.id << " residual=- status=cache\n";
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        pm::EmbeddingResult r;
        try {
            r = method == pm::EmbedMethod::Lle ? pm::lle_embed(std_cloud, a.k, a.d)
                                               : pm::pca_embed(std_cloud, a.d);
        } catch (const pm::NumericalError& e) {
            throw pm::NumericalError("cloud '" + entry.cloud.id + "': " + e.what());
        } catch (const pm::InvalidInputError& e) {
            throw pm::InvalidInputError("cloud '" + entry.cloud.id + "': " + e.what());
        }
        const auto ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        pm::embed_cache_store(a.out, key, r.coords);
        ++computed;
        std::cout << entry.cloud.id << " residual=" << pm::fmt_double(r.residual)
                  << " status=computed";
        if (a.log_timing) std::cout << " ms=" << pm::fmt_double(ms);
        std::cout << "\n";
    }
    std::cout << "computed=" << computed << " cached=" << cached << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string manifest;
    std::string augmentation = "none";
    std::string out;
    std::string cache;
    std::string format = "xyz";
    ConfigFlags config;
};

int run_train(const TrainArgs& a) {
    const pm::nn::Augmentation aug = pm::nn::augmentation_from_name(a.augmentation);
    const pm::RunConfig cfg = a.config.resolve();
    const pm::Dataset ds = pm::load_manifest(
        a.manifest, a.format == "binary" ? pm::CloudFormat::PackedBinary : pm::CloudFormat::XyzText);

    pm::EmbeddingProvider provider;
    if (uses_lle(aug)) {
        if (a.cache.empty())
            throw pm::InvalidInputError(
                "augmentation '" + a.augmentation +
                "' needs a cached embedding directory: run `pm embed --manifest " + a.manifest +
                " --method lle --k " + std::to_string(cfg.k_lle) +
                " --d 2 --out <dir>` and pass it as --cache <dir>");
        provider = cache_only_provider(a.cache);
    }

    fs::create_directories(a.out);
    write_file(fs::path(a.out) / "config.resolved", cfg.echo(aug));

    pm::TrainResult result = pm::train(ds, cfg.train_config(),
                                       cfg.architecture(static_cast<int>(ds.class_names.size())),
                                       aug, provider);

    write_file(fs::path(a.out) / "log.csv", pm::render_epoch_csv(result.log));
    ordered_json metrics = ordered_json::parse(result.best_metrics.to_json());
    metrics["best_epoch"] = result.best_epoch;
    metrics["final_oa"] = result.final_metrics.oa;
    metrics["final_ma"] = result.final_metrics.ma;
    write_file(fs::path(a.out) / "metrics.json", metrics.dump(2) + "\n");
    pm::nn::save_checkpoint(result.model, result.k_lle, fs::path(a.out) / "checkpoint.pmk");

    std::cout << "best epoch " << result.best_epoch << ": oa=" << pm::fmt_double(result.best_metrics.oa)
              << " ma=" << pm::fmt_double(result.best_metrics.ma) << "\n";
    std::cout << "run directory: " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint;
    std::string manifest;
    std::string split = "test";
    std::string out;  // empty = stdout
    std::string cache;
    std::string format = "xyz";
    int batch_size = 32;
};

int run_eval(const EvalArgs& a) {
    if (a.split != "test" && a.split != "train")
        throw pm::UsageError("eval: --split must be test or train");
    pm::nn::Checkpoint ck = pm::nn::load_checkpoint(a.checkpoint);
    const pm::Dataset ds = pm::load_manifest(
        a.manifest, a.format == "binary" ? pm::CloudFormat::PackedBinary : pm::CloudFormat::XyzText);
    if (static_cast<int>(ds.class_names.size()) != ck.spec.num_classes)
        throw pm::FormatError("checkpoint expects " + std::to_string(ck.spec.num_classes) +
                              " classes but the manifest has " +
                              std::to_string(ds.class_names.size()));
    pm::EmbeddingProvider provider;
    if (uses_lle(ck.aug) && !a.cache.empty()) provider = cache_only_provider(a.cache);
    const pm::MetricsReport report =
        pm::evaluate(ck.model, ds, a.split == "test" ? pm::Split::Test : pm::Split::Train,
                     ck.k_lle, a.batch_size, provider);
    if (a.out.empty())
        std::cout << report.to_json();
    else
        write_file(a.out, report.to_json());
    return 0;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateArgs {
    std::string manifest;
    std::string out;
    std::string cache;
    std::string format = "xyz";
    ConfigFlags config;
};

int run_ablate(const AblateArgs& a) {
    const pm::RunConfig cfg = a.config.resolve();
    const pm::Dataset ds = pm::load_manifest(
        a.manifest, a.format == "binary" ? pm::CloudFormat::PackedBinary : pm::CloudFormat::XyzText);
    if (a.cache.empty())
        throw pm::InvalidInputError(
            "the ablation grid includes lle rows and needs a cached embedding directory: run `pm "
            "embed --manifest " + a.manifest + " --method lle --k " + std::to_string(cfg.k_lle) +
            " --d 2 --out <dir>` and pass it as --cache <dir>");
    fs::create_directories(a.out);
    write_file(fs::path(a.out) / "config.resolved", cfg.echo(pm::nn::Augmentation::None));
    const pm::AblationResult result =
        pm::run_ablation(ds, cfg.train_config(),
                         cfg.architecture(static_cast<int>(ds.class_names.size())),
                         cache_only_provider(a.cache));
    write_file(fs::path(a.out) / "ablation.csv", result.csv());
    std::cout << result.csv();
    return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportArgs {
    std::string run;
    std::string svg;
};

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

void write_accuracy_svg(const std::vector<std::vector<std::string>>& rows, const fs::path& path) {
    // rows: header + data with columns epoch,lr,train_loss,test_oa,test_ma
    const int w = 640, h = 400, margin = 40;
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
                      "\" height=\"" + std::to_string(h) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<line x1=\"40\" y1=\"360\" x2=\"600\" y2=\"360\" stroke=\"black\"/>\n";
    svg += "<line x1=\"40\" y1=\"40\" x2=\"40\" y2=\"360\" stroke=\"black\"/>\n";
    const std::size_t n = rows.size() - 1;
    std::string points;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double oa = std::stod(rows[i][3]);
        const double x = margin + (w - 2.0 * margin) * (n > 1 ? (i - 1.0) / (n - 1.0) : 0.5);
        const double y = h - margin - (h - 2.0 * margin) * oa;
        points += std::to_string(x) + "," + std::to_string(y) + " ";
    }
    svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"" + points +
           "\"/>\n";
    svg += "<text x=\"320\" y=\"390\" text-anchor=\"middle\" font-size=\"12\">epoch</text>\n";
    svg += "<text x=\"15\" y=\"200\" font-size=\"12\" transform=\"rotate(-90 15 200)\">test oA"
           "</text>\n</svg>\n";
    write_file(path, svg);
}

int run_report(const ReportArgs& a) {
    const fs::path run(a.run);
    if (fs::exists(run / "ablation.csv")) {
        const auto rows = parse_csv(read_file(run / "ablation.csv"));
        std::cout << "ablation grid (" << rows.size() - 1 << " runs)\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                std::cout << (i ? "  " : "") << row[i];
            std::cout << "\n";
        }
        return 0;
    }
    const auto metrics = ordered_json::parse(read_file(run / "metrics.json"));
    const auto log_rows = parse_csv(read_file(run / "log.csv"));
    std::cout << "run " << run.string() << "\n";
    std::cout << "epochs: " << log_rows.size() - 1 << "\n";
    std::cout << "best  oa=" << pm::fmt_double(metrics["oa"].get<double>())
              << " ma=" << pm::fmt_double(metrics["ma"].get<double>()) << " (epoch "
              << metrics["best_epoch"].get<int>() << ")\n";
    std::cout << "final oa=" << pm::fmt_double(metrics["final_oa"].get<double>())
              << " ma=" << pm::fmt_double(metrics["final_ma"].get<double>()) << "\n";
    if (!a.svg.empty() && log_rows.size() > 1) {
        write_accuracy_svg(log_rows, a.svg);
        std::cout << "wrote " << a.svg << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"point-cloud classification with manifold feature augmentation"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* cmd_gen = app.add_subcommand("gen", "generate a synthetic shape dataset");
    cmd_gen->add_option("--classes", gen.classes, "number of shape classes (2-8)");
    cmd_gen->add_option("--per-class", gen.per_class, "clouds per class")
        ->check(CLI::PositiveNumber);
    cmd_gen->add_option("--n-points", gen.n_points, "points per cloud");
    cmd_gen->add_option("--noise", gen.noise, "gaussian noise sigma");
    cmd_gen->add_option("--seed", gen.seed, "dataset seed");
    cmd_gen->add_option("--out", gen.out, "output directory")->required();
    cmd_gen->add_option("--format", gen.format, "xyz|binary")
        ->check(CLI::IsMember({"xyz", "binary"}));
    cmd_gen->add_option("--rotation", gen.rotation, "per-cloud rotation: none|z|full")
        ->check(CLI::IsMember({"none", "z", "full"}));
    cmd_gen->add_option("--param-jitter", gen.param_jitter, "per-cloud shape proportion jitter");

    EmbedArgs embed;
    auto* cmd_embed = app.add_subcommand("embed", "precompute embedding caches");
    cmd_embed->add_option("--manifest", embed.manifest, "dataset manifest")->required();
    cmd_embed->add_option("--method", embed.method, "lle|pca")
        ->check(CLI::IsMember({"lle", "pca"}));
    cmd_embed->add_option("--k", embed.k, "neighborhood size (lle)");
    cmd_embed->add_option("--d", embed.d, "embedding dimension");
    cmd_embed->add_option("--out", embed.out, "cache directory")->required();
    cmd_embed->add_option("--format", embed.format, "cloud file format: xyz|binary");
    cmd_embed->add_flag("--log-timing", embed.log_timing, "print per-cloud compute times");

    TrainArgs train;
    auto* cmd_train = app.add_subcommand("train", "train a classifier");
    cmd_train->add_option("--manifest", train.manifest, "dataset manifest")->required();
    cmd_train->add_option("--augmentation", train.augmentation, "none|lle|mp|lle+mp")
        ->check(CLI::IsMember({"none", "lle", "mp", "lle+mp"}));
    cmd_train->add_option("--out", train.out, "run directory")->required();
    cmd_train->add_option("--cache", train.cache, "embedding cache directory (lle)");
    cmd_train->add_option("--format", train.format, "cloud file format: xyz|binary");
    train.config.attach(cmd_train);

    EvalArgs eval;
    auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint");
    cmd_eval->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
    cmd_eval->add_option("--manifest", eval.manifest, "dataset manifest")->required();
    cmd_eval->add_option("--split", eval.split, "test|train");
    cmd_eval->add_option("--out", eval.out, "output json path (default stdout)");
    cmd_eval->add_option("--cache", eval.cache, "embedding cache directory");
    cmd_eval->add_option("--format", eval.format, "cloud file format: xyz|binary");
    cmd_eval->add_option("--batch-size", eval.batch_size, "evaluation batch size");

    AblateArgs ablate;
    auto* cmd_ablate = app.add_subcommand("ablate", "run the six-row ablation grid");
    cmd_ablate->add_option("--manifest", ablate.manifest, "dataset manifest")->required();
    cmd_ablate->add_option("--out", ablate.out, "output directory")->required();
    cmd_ablate->add_option("--cache", ablate.cache, "embedding cache directory");
    cmd_ablate->add_option("--format", ablate.format, "cloud file format: xyz|binary");
    ablate.config.attach(cmd_ablate);

    ReportArgs report;
    auto* cmd_report = app.add_subcommand("report", "summarize a run directory");
    cmd_report->add_option("--run", report.run, "run directory")->required();
    cmd_report->add_option("--svg", report.svg, "write an accuracy-vs-epoch svg plot");

    try {
        app.parse(argc, argv);
        if (cmd_gen->parsed()) return run_gen(gen);
        if (cmd_embed->parsed()) return run_embed(embed);
        if (cmd_train->parsed()) return run_train(train);
        if (cmd_eval->parsed()) return run_eval(eval);
        if (cmd_ablate->parsed()) return run_ablate(ablate);
        if (cmd_report->parsed()) return run_report(report);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const pm::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const pm::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const pm::InvalidInputError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const pm::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const pm::FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const pm::InvalidStateError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
