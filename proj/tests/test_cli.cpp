#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "pm/lle.hpp"
#include "pm/pointcloud.hpp"

namespace fs = std::filesystem;
using namespace pm;

namespace {

fs::path workspace() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "pm_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

int run_cli(const std::string& args, std::string* out = nullptr, std::string* err = nullptr) {
    const char* cli = std::getenv("PM_CLI");
    REQUIRE(cli != nullptr);
    static int call_id = 0;
    const fs::path out_file = workspace() / ("stdout_" + std::to_string(call_id) + ".txt");
    const fs::path err_file = workspace() / ("stderr_" + std::to_string(call_id) + ".txt");
    ++call_id;
    const std::string cmd = std::string(cli) + " " + args + " >" + out_file.string() + " 2>" +
                            err_file.string();
    const int status = std::system(cmd.c_str());
    if (out) *out = slurp(out_file);
    if (err) *err = slurp(err_file);
    return WEXITSTATUS(status);
}

long count_lines(const std::string& text) {
    return std::count(text.begin(), text.end(), '\n');
}

// small dataset + tiny model flags shared by the train/eval/ablate tests
const char* kTinyFlags =
    " --edgeconv_widths 8,8 --embedding_width 16 --head_widths 16,8"
    " --k_edgeconv 4 --k_lle 6 --batch_size 4 --seed 3 --dynamic_graph false";

fs::path make_gen_dataset(const std::string& name, int classes, int per_class, int points) {
    const fs::path dir = workspace() / name;
    const int code = run_cli("gen --classes " + std::to_string(classes) + " --per-class " +
                             std::to_string(per_class) + " --n-points " +
                             std::to_string(points) + " --noise 0.02 --seed 5 --out " +
                             dir.string());
    REQUIRE(code == 0);
    return dir;
}

}  // namespace

TEST_CASE("gen writes the manifest with an 80/20 split") {
    const fs::path dir = workspace() / "gen_full";
    const int code =
        run_cli("gen --classes 8 --per-class 50 --n-points 64 --seed 11 --out " + dir.string());
    REQUIRE(code == 0);
    const std::string manifest = slurp(dir / "manifest.txt");
    CHECK(count_lines(manifest) == 400);
    long train = 0, test = 0;
    std::stringstream ss(manifest);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.find(",train") != std::string::npos) ++train;
        if (line.find(",test") != std::string::npos) ++test;
    }
    CHECK(train == 320);
    CHECK(test == 80);
    CHECK(count_lines(slurp(dir / "classes.txt")) == 8);

    // same seed produces identical bytes
    const fs::path dir2 = workspace() / "gen_full_again";
    REQUIRE(run_cli("gen --classes 8 --per-class 50 --n-points 64 --seed 11 --out " +
                    dir2.string()) == 0);
    CHECK(slurp(dir2 / "manifest.txt") == manifest);
    CHECK(slurp(dir2 / "sphere_0.xyz") == slurp(dir / "sphere_0.xyz"));
}

TEST_CASE("gen rejects per_class zero with a usage error") {
    CHECK(run_cli("gen --classes 4 --per-class 0 --out " + (workspace() / "gz").string()) == 2);
}

TEST_CASE("embed caches are warm on the second run") {
    const fs::path dir = make_gen_dataset("embed_ds", 2, 5, 48);
    const fs::path cache = workspace() / "embed_cache";
    std::string out;
    REQUIRE(run_cli("embed --manifest " + (dir / "manifest.txt").string() +
                        " --method lle --k 6 --out " + cache.string() + " --log-timing",
                    &out) == 0);
    CHECK(out.find("computed=10 cached=0") != std::string::npos);
    REQUIRE(run_cli("embed --manifest " + (dir / "manifest.txt").string() +
                        " --method lle --k 6 --out " + cache.string() + " --log-timing",
                    &out) == 0);
    CHECK(out.find("computed=0 cached=10") != std::string::npos);
}

TEST_CASE("embed with pca reports near-zero residuals on planar clouds") {
    const fs::path dir = workspace() / "planar_ds";
    fs::create_directories(dir);
    Dataset ds;
    ds.class_names = {"plane_patch"};
    std::vector<fs::path> rels;
    for (int i = 0; i < 3; ++i) {
        DatasetEntry e;
        e.cloud = generate_shape(ShapeClass::PlanePatch, 40, 0.0, 100 + i);
        e.cloud.label = 0;
        e.split = i < 2 ? Split::Train : Split::Test;
        rels.emplace_back("p" + std::to_string(i) + ".xyz");
        save_cloud(e.cloud, dir / rels.back(), CloudFormat::XyzText);
        ds.entries.push_back(std::move(e));
    }
    save_manifest(ds, dir / "manifest.txt", rels);

    std::string out;
    REQUIRE(run_cli("embed --manifest " + (dir / "manifest.txt").string() +
                        " --method pca --d 2 --out " + (workspace() / "pca_cache").string(),
                    &out) == 0);
    std::stringstream ss(out);
    std::string line;
    int seen = 0;
    while (std::getline(ss, line)) {
        const auto at = line.find("residual=");
        if (at == std::string::npos || line.find("computed") == std::string::npos) continue;
        const double r = std::stod(line.substr(at + 9));
        CHECK(r <= 1e-9);
        ++seen;
    }
    CHECK(seen == 3);
}

TEST_CASE("embed rejects an unknown method with a usage error") {
    const fs::path dir = make_gen_dataset("embed_bad", 2, 4, 32);
    std::string err;
    const int code = run_cli("embed --manifest " + (dir / "manifest.txt").string() +
                                 " --method umap --out " + (workspace() / "x").string(),
                             nullptr, &err);
    CHECK(code == 2);
}

TEST_CASE("train populates a reusable run directory") {
    const fs::path dir = make_gen_dataset("train_ds", 2, 5, 32);
    const fs::path run = workspace() / "run_none";
    REQUIRE(run_cli("train --manifest " + (dir / "manifest.txt").string() +
                    " --augmentation none --out " + run.string() + kTinyFlags + " --epochs 2") == 0);
    CHECK(fs::exists(run / "config.resolved"));
    CHECK(fs::exists(run / "log.csv"));
    CHECK(fs::exists(run / "metrics.json"));
    CHECK(fs::exists(run / "checkpoint.pmk"));
    const std::string log = slurp(run / "log.csv");
    CHECK(log.rfind("epoch,lr,train_loss,test_oa,test_ma\n", 0) == 0);
    CHECK(count_lines(log) == 3);
    const std::string echo = slurp(run / "config.resolved");
    CHECK(echo.find("epochs=2") != std::string::npos);
    CHECK(echo.find("augmentation=none") != std::string::npos);

    SUBCASE("eval is deterministic across invocations") {
        std::string a, b;
        REQUIRE(run_cli("eval --checkpoint " + (run / "checkpoint.pmk").string() +
                            " --manifest " + (dir / "manifest.txt").string(),
                        &a) == 0);
        REQUIRE(run_cli("eval --checkpoint " + (run / "checkpoint.pmk").string() +
                            " --manifest " + (dir / "manifest.txt").string(),
                        &b) == 0);
        CHECK(a == b);
        CHECK(!a.empty());
    }

    SUBCASE("report echoes the metrics and renders an svg") {
        std::string out;
        REQUIRE(run_cli("report --run " + run.string() + " --svg " +
                            (workspace() / "acc.svg").string(),
                        &out) == 0);
        const auto metrics = nlohmann::json::parse(slurp(run / "metrics.json"));
        CHECK(out.find(fmt_double(metrics["oa"].get<double>())) != std::string::npos);
        CHECK(out.find(fmt_double(metrics["ma"].get<double>())) != std::string::npos);
        const std::string svg = slurp(workspace() / "acc.svg");
        CHECK(svg.rfind("<svg", 0) == 0);
    }

    SUBCASE("checkpoint and manifest class counts must agree") {
        const fs::path other = make_gen_dataset("train_ds4", 4, 4, 32);
        CHECK(run_cli("eval --checkpoint " + (run / "checkpoint.pmk").string() +
                      " --manifest " + (other / "manifest.txt").string()) == 3);
    }
}

TEST_CASE("lle training requires the embedding cache and says how to build it") {
    const fs::path dir = make_gen_dataset("train_lle", 2, 5, 32);
    std::string err;
    CHECK(run_cli("train --manifest " + (dir / "manifest.txt").string() +
                      " --augmentation lle --out " + (workspace() / "run_lle_fail").string() +
                      kTinyFlags + " --epochs 2",
                  nullptr, &err) == 3);
    CHECK(err.find("pm embed") != std::string::npos);

    const fs::path cache = workspace() / "lle_cache";
    REQUIRE(run_cli("embed --manifest " + (dir / "manifest.txt").string() +
                    " --method lle --k 6 --out " + cache.string()) == 0);
    CHECK(run_cli("train --manifest " + (dir / "manifest.txt").string() +
                  " --augmentation lle --out " + (workspace() / "run_lle").string() +
                  " --cache " + cache.string() + kTinyFlags + " --epochs 2") == 0);
}

TEST_CASE("ablate emits the six-row grid") {
    const fs::path dir = make_gen_dataset("ablate_ds", 2, 5, 32);
    const fs::path cache = workspace() / "ablate_cache";
    REQUIRE(run_cli("embed --manifest " + (dir / "manifest.txt").string() +
                    " --method lle --k 6 --out " + cache.string()) == 0);
    const fs::path out = workspace() / "ablate_out";
    std::string stdout_text;
    REQUIRE(run_cli("ablate --manifest " + (dir / "manifest.txt").string() + " --out " +
                        out.string() + " --cache " + cache.string() + kTinyFlags + " --epochs 1",
                    &stdout_text) == 0);
    const std::string csv = slurp(out / "ablation.csv");
    CHECK(csv.rfind("lle,mp,planes,t,test_ma,test_oa\n", 0) == 0);
    CHECK(count_lines(csv) == 7);

    std::string report;
    REQUIRE(run_cli("report --run " + out.string(), &report) == 0);
    CHECK(report.find("ablation grid (6 runs)") != std::string::npos);
}

TEST_CASE("error paths map to the documented exit codes") {
    CHECK(run_cli("train --manifest /nonexistent/manifest.txt --augmentation none --out " +
                  (workspace() / "r").string()) == 3);
    CHECK(run_cli("definitely-not-a-subcommand") == 2);
    const fs::path dir = make_gen_dataset("blowup_ds", 2, 5, 32);
    CHECK(run_cli("train --manifest " + (dir / "manifest.txt").string() +
                  " --augmentation none --out " + (workspace() / "run_blowup").string() +
                  kTinyFlags + " --epochs 2 --lr0 1e170") == 4);
    CHECK(run_cli("gen --classes 4 --per-class 3 --rotation sideways --out " +
                  (workspace() / "rot").string()) == 2);
}
