#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "dynembed/dbe.hpp"
#include "dynembed/temporal_graph.hpp"

#include <nlohmann/json.hpp>

using namespace dynembed;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string cli_path() {
#ifdef DYNEMBED_CLI_PATH
    return DYNEMBED_CLI_PATH;
#else
    const char* p = std::getenv("DYNEMBED_CLI_PATH");
    REQUIRE_MESSAGE(p != nullptr, "DYNEMBED_CLI_PATH must point at the built binary");
    return p;
#endif
}

fs::path work_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "dynembed_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

RunResult run(const std::string& args, const fs::path& scratch) {
    const auto out_file = scratch / "stdout.txt";
    const auto err_file = scratch / "stderr.txt";
    const std::string cmd =
        cli_path() + " " + args + " >" + out_file.string() + " 2>" + err_file.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

void write_edges(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

// small chain so every timestamp window test has data
std::string chain_edges(int n, double t0 = 0.0, double dt = 1.0) {
    std::ostringstream text;
    for (int i = 0; i < n; ++i) text << i << " " << (i + 1) << " " << (t0 + i * dt) << "\n";
    return text.str();
}

} // namespace

TEST_CASE("construct reports the documented overlap ratios") {
    auto dir = work_dir("construct_gamma");
    write_edges(dir / "edges.txt", chain_edges(20));

    auto ev = run("construct --input " + (dir / "edges.txt").string() + " --out " +
                      (dir / "by_events").string() + " --events 8000 --stride 4000",
                  dir);
    CHECK(ev.code == 0);
    CHECK(ev.out.find("gamma=0.5") != std::string::npos);

    auto tm = run("construct --input " + (dir / "edges.txt").string() + " --out " +
                      (dir / "by_time").string() + " --window 3600 --stride 360",
                  dir);
    CHECK(tm.code == 0);
    CHECK(tm.out.find("gamma=0.9") != std::string::npos);
    CHECK(fs::exists(dir / "by_time" / "snapshot_001.txt"));
    CHECK(fs::exists(dir / "by_time" / "manifest.json"));
    CHECK(fs::exists(dir / "by_time" / "run_config.json"));
}

TEST_CASE("construct usage and data errors map to distinct exit codes") {
    auto dir = work_dir("construct_errors");
    write_edges(dir / "edges.txt", chain_edges(5));

    auto missing = run("construct --input " + (dir / "nope.txt").string() + " --out " +
                           (dir / "x").string() + " --window 10 --stride 5",
                       dir);
    CHECK(missing.code == 2);
    CHECK_FALSE(missing.err.empty());

    auto both = run("construct --input " + (dir / "edges.txt").string() + " --out " +
                        (dir / "x").string() + " --window 10 --events 5 --stride 5",
                    dir);
    CHECK(both.code == 1);

    auto no_stride = run("construct --input " + (dir / "edges.txt").string() + " --out " +
                             (dir / "x").string() + " --window 10",
                         dir);
    CHECK(no_stride.code == 1);

    auto bad_stride = run("construct --input " + (dir / "edges.txt").string() + " --out " +
                              (dir / "x").string() + " --window 10 --stride 99",
                          dir); // stride > window
    CHECK(bad_stride.code == 2);

    auto no_sub = run("", dir);
    CHECK(no_sub.code == 1);
}

TEST_CASE("construct sweeps expand into per-combination directories") {
    auto dir = work_dir("construct_sweep");
    write_edges(dir / "edges.txt", chain_edges(30));
    auto r = run("construct --input " + (dir / "edges.txt").string() + " --out " +
                     (dir / "grid").string() + " --window 10,20 --stride 5",
                 dir);
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "grid" / "w10_dt5" / "manifest.json"));
    CHECK(fs::exists(dir / "grid" / "w20_dt5" / "manifest.json"));
}

TEST_CASE("walk emits one corpus file per timestep") {
    auto dir = work_dir("walk_cmd");
    write_edges(dir / "edges.txt", chain_edges(30));
    REQUIRE(run("construct --input " + (dir / "edges.txt").string() + " --out " +
                    (dir / "snaps").string() + " --window 10 --stride 10",
                dir)
                .code == 0);
    auto r = run("walk --in " + (dir / "snaps").string() + " --out " +
                     (dir / "walks").string() + " -r 3 -l 8 --seed 4",
                 dir);
    CHECK(r.code == 0);
    REQUIRE(fs::exists(dir / "walks" / "walks_001.txt"));

    // r walks per active node, one per line
    auto net = load_snapshots((dir / "snaps").string());
    std::size_t active = 0;
    for (NodeId g : net.snapshots[0].nodes)
        if (!net.snapshots[0].adjacency[g].empty()) ++active;
    std::istringstream corpus(slurp(dir / "walks" / "walks_001.txt"));
    std::size_t lines = 0;
    std::string line;
    while (std::getline(corpus, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 3 * active);
}

TEST_CASE("train prints the defaults banner and reproduces byte-identical output") {
    auto dir = work_dir("train_cmd");
    write_edges(dir / "edges.txt", chain_edges(40, 0.0, 0.25)); // 3 windows of 10
    REQUIRE(run("construct --input " + (dir / "edges.txt").string() + " --out " +
                    (dir / "snaps").string() + " --window 2.5 --stride 2.5",
                dir)
                .code == 0);

    const std::string train_args = " --in " + (dir / "snaps").string() +
                                   " --dim 8 --epochs 2 -r 2 -l 10 --seed 5";
    auto a = run("train --out " + (dir / "emb_a").string() + train_args, dir);
    CHECK(a.code == 0);
    CHECK(a.out.find("defaults: D=128 L=80 r=10 cs=4 ns=10") != std::string::npos);

    auto net = load_snapshots((dir / "snaps").string());
    for (std::size_t t = 1; t <= net.timestep_count(); ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "embedding_t%03zu.txt", t);
        CHECK(fs::exists(dir / "emb_a" / name));
    }
    CHECK(fs::exists(dir / "emb_a" / "alpha.txt"));
    CHECK(fs::exists(dir / "emb_a" / "manifest.json"));

    auto b = run("train --out " + (dir / "emb_b").string() + train_args, dir);
    REQUIRE(b.code == 0);
    CHECK(slurp(dir / "emb_a" / "embedding_t001.txt") ==
          slurp(dir / "emb_b" / "embedding_t001.txt"));
    CHECK(slurp(dir / "emb_a" / "alpha.txt") == slurp(dir / "emb_b" / "alpha.txt"));
}

TEST_CASE("train sweeps write one directory per grid point") {
    auto dir = work_dir("train_sweep");
    write_edges(dir / "edges.txt", chain_edges(20));
    REQUIRE(run("construct --input " + (dir / "edges.txt").string() + " --out " +
                    (dir / "snaps").string() + " --window 20 --stride 20",
                dir)
                .code == 0);
    auto r = run("train --in " + (dir / "snaps").string() + " --out " + (dir / "grid").string() +
                     " --dim 4,8 --epochs 1 -r 2 -l 6 --seed 5",
                 dir);
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "grid" / "dim4_l11_l1000_seed5" / "alpha.txt"));
    CHECK(fs::exists(dir / "grid" / "dim8_l11_l1000_seed5" / "alpha.txt"));
    CHECK(fs::exists(dir / "grid" / "dim4_l11_l1000_seed5" / "run_config.json"));
}

TEST_CASE("synth plants the advertised evolving-node count") {
    auto dir = work_dir("synth_cmd");
    auto r = run("synth --n 500 --alpha 2 --c 100 --out " + (dir / "net").string() +
                     " --seed 3",
                 dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("50 evolving nodes") != std::string::npos);
    REQUIRE(fs::exists(dir / "net" / "ground_truth.txt"));
    std::istringstream gt(slurp(dir / "net" / "ground_truth.txt"));
    std::size_t evolving = 0, rows = 0;
    std::string line;
    while (std::getline(gt, line)) {
        if (line.empty()) continue;
        ++rows;
        std::istringstream ls(line);
        long node = 0;
        int flag = 0;
        ls >> node >> flag;
        if (flag == 1) ++evolving;
    }
    CHECK(rows == 500);
    CHECK(evolving == 50);
    CHECK(fs::exists(dir / "net" / "snapshot_010.txt"));
    CHECK(fs::exists(dir / "net" / "synth_config.json"));
}

TEST_CASE("eval evolving reports MAP MRR and TOPK on synth output") {
    auto dir = work_dir("eval_evolving");
    REQUIRE(run("synth --n 80 --timesteps 4 --out " + (dir / "net").string() + " --seed 6",
                dir)
                .code == 0);
    REQUIRE(run("train --in " + (dir / "net").string() + " --out " + (dir / "emb").string() +
                    " --dim 8 --epochs 2 -r 3 -l 10 --seed 6",
                dir)
                .code == 0);
    auto r = run("eval evolving --emb " + (dir / "emb").string() + " --truth " +
                     (dir / "net" / "ground_truth.txt").string() + " --out " +
                     (dir / "report.json").string(),
                 dir);
    CHECK(r.code == 0);
    auto report = json::parse(slurp(dir / "report.json"));
    CHECK(report["task"] == "evolving_detection");
    for (const char* key : {"MAP", "MRR", "TOPK"}) {
        REQUIRE(report["metrics"].contains(key));
        const double v = report["metrics"][key].get<double>();
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(report.contains("config_hash"));
}

TEST_CASE("eval link scores a separable fixture at AUC 1") {
    auto dir = work_dir("eval_link");
    // six co-located pairs; the chain keeps every node in the training vocab
    std::ostringstream edges;
    for (int i = 0; i + 2 < 12; ++i) edges << i << " " << (i + 2) << " " << i << "\n";
    for (int i = 0; i < 12; i += 2) edges << i << " " << (i + 1) << " " << (100 + i) << "\n";
    write_edges(dir / "edges.txt", edges.str());

    TrainResult fixture;
    fixture.embeddings.timesteps = 1;
    fixture.embeddings.rows = 12;
    fixture.embeddings.dim = 2;
    fixture.embeddings.m = {std::vector<double>(24, 0.0)};
    for (NodeId g = 0; g < 12; ++g) fixture.embeddings.m[0][g * 2] = 10.0 * double(g / 2);
    fixture.embeddings.alpha.assign(24, 0.0);
    fixture.embeddings.labels.resize(12);
    for (NodeId g = 0; g < 12; ++g) fixture.embeddings.labels[g] = g;
    fixture.presence = {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}};
    TrainConfig shape;
    shape.dim = 2;
    save_embeddings((dir / "emb").string(), fixture, shape);

    auto r = run("eval link --emb " + (dir / "emb").string() + " --input " +
                     (dir / "edges.txt").string() + " --train-fraction 0.625 --seed 2 --out " +
                     (dir / "report.json").string(),
                 dir);
    CHECK(r.code == 0);
    auto report = json::parse(slurp(dir / "report.json"));
    CHECK(report["task"] == "link_prediction");
    CHECK(report["metrics"]["AUC"].get<double>() == doctest::Approx(1.0));
    CHECK(report["folds"].size() == 5);
}

TEST_CASE("export writes the trajectory CSV and lists unknown nodes") {
    auto dir = work_dir("export_cmd");
    TrainResult fixture;
    fixture.embeddings.timesteps = 2;
    fixture.embeddings.rows = 3;
    fixture.embeddings.dim = 2;
    fixture.embeddings.m = {std::vector<double>(6, 0.0), std::vector<double>(6, 1.0)};
    fixture.embeddings.alpha.assign(6, 0.0);
    fixture.embeddings.labels = {4, 7, 9};
    fixture.presence = {{0, 1, 2}, {0, 1, 2}};
    TrainConfig shape;
    shape.dim = 2;
    save_embeddings((dir / "emb").string(), fixture, shape);

    auto ok = run("export --emb " + (dir / "emb").string() + " --nodes 4,9 --out " +
                      (dir / "traj.csv").string(),
                  dir);
    CHECK(ok.code == 0);
    std::istringstream csv(slurp(dir / "traj.csv"));
    std::string header;
    std::getline(csv, header);
    CHECK(header == "node,t,dim_1,dim_2,displacement,active");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4); // 2 nodes x 2 timesteps

    auto bad = run("export --emb " + (dir / "emb").string() + " --nodes 4,999", dir);
    CHECK(bad.code == 2);
    CHECK(bad.err.find("999") != std::string::npos);
}

TEST_CASE("numeric failures exit with code 3") {
    auto dir = work_dir("numeric_exit");
    write_edges(dir / "edges.txt", "7 9 0\n");
    REQUIRE(run("construct --input " + (dir / "edges.txt").string() + " --out " +
                    (dir / "snaps").string() + " --window 10 --stride 10",
                dir)
                .code == 0);

    TrainResult poisoned;
    poisoned.embeddings.timesteps = 1;
    poisoned.embeddings.rows = 2;
    poisoned.embeddings.dim = 2;
    poisoned.embeddings.m = {{std::nan(""), 0.0, 0.5, 0.5}};
    poisoned.embeddings.alpha = {0.1, 0.2, 0.3, 0.4};
    poisoned.embeddings.labels = {7, 9};
    poisoned.presence = {{0, 1}};
    TrainConfig shape;
    shape.dim = 2;
    save_embeddings((dir / "pre").string(), poisoned, shape);

    auto r = run("train --in " + (dir / "snaps").string() + " --out " +
                     (dir / "emb").string() + " --dim 2 --epochs 1 -r 2 -l 6 --pretrained " +
                     (dir / "pre").string(),
                 dir);
    CHECK(r.code == 3);
    CHECK(r.err.find("epoch") != std::string::npos);
}

TEST_CASE("invalid worker environment variable is a data error") {
    auto dir = work_dir("env_workers");
    write_edges(dir / "edges.txt", chain_edges(10));
    REQUIRE(run("construct --input " + (dir / "edges.txt").string() + " --out " +
                    (dir / "snaps").string() + " --window 20 --stride 20",
                dir)
                .code == 0);
    auto r = run("walk --in " + (dir / "snaps").string() + " --out " + (dir / "w").string(),
                 dir); // environment set below via the command string instead
    CHECK(r.code == 0);

    const std::string cmd = "env DYNEMBED_WORKERS=abc " + cli_path() + " walk --in " +
                            (dir / "snaps").string() + " --out " + (dir / "w2").string() +
                            " >/dev/null 2>" + (dir / "err.txt").string();
    const int status = std::system(cmd.c_str());
    CHECK((WIFEXITED(status) ? WEXITSTATUS(status) : -1) == 2);
}
