#include "crfmm/cli.hpp"
#include "crfmm/matcher.hpp"
#include "crfmm/trajectory.hpp"

#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace crfmm;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "crfmm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("crfmm_cli_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// gen-network, gen-traj, train, match, eval into `dir`; returns the eval output.
std::string pipeline(const TempDir& dir) {
    REQUIRE(run({"gen-network", "--rows", "6", "--cols", "6", "--out-nodes", dir / "nodes.csv", "--out-edges",
                 dir / "edges.csv"})
                .code == 0);
    REQUIRE(run({"gen-traj", "--net-nodes", dir / "nodes.csv", "--net-edges", dir / "edges.csv", "--count", "12",
                 "--route-len", "12", "--interval", "30", "--out-obs", dir / "obs.csv", "--out-truth",
                 dir / "truth.txt"})
                .code == 0);
    const Run train = run({"train", "--net-nodes", dir / "nodes.csv", "--net-edges", dir / "edges.csv", "--obs",
                           dir / "obs.csv", "--truth", dir / "truth.txt", "--reg", "l1", "--lambda", "0.1",
                           "--out", dir / "model.json", "--report", dir / "train.json", "--jobs", "2"});
    REQUIRE(train.code == 0);
    REQUIRE(run({"match", "--net-nodes", dir / "nodes.csv", "--net-edges", dir / "edges.csv", "--model",
                 dir / "model.json", "--obs", dir / "obs.csv", "--out", dir / "pred.txt"})
                .code == 0);
    const Run eval = run({"eval", "--pred", dir / "pred.txt", "--truth", dir / "truth.txt"});
    REQUIRE(eval.code == 0);
    return eval.out;
}

} // namespace

TEST_CASE("end-to-end pipeline") {
    TempDir dir("pipeline");
    const std::string report = pipeline(dir);
    CHECK(report.starts_with("points,point_errors,point_error_rate,paths,path_errors,path_error_rate,"));
    const std::string train_report = slurp(dir / "train.json");
    CHECK(train_report.find("nonzero_weights") != std::string::npos);
    CHECK(train_report.find("\"holdout\": []") != std::string::npos);  // --lambda skips tuning
    CHECK(slurp(dir / "pred.txt").find("piece ") != std::string::npos);

    // Ground truth evaluated against itself is perfect.
    const Run self = run({"eval", "--pred", dir / "truth.txt", "--truth", dir / "truth.txt"});
    REQUIRE(self.code == 0);
    const auto data = self.out.substr(self.out.find('\n') + 1);
    CHECK(data.find(",0,0.0000,") != std::string::npos);
    CHECK(data.find(",0,0.0000,0,0") != std::string::npos);

    // Feature export has one header and one row per candidate.
    const Run feats = run({"features", "--net-nodes", dir / "nodes.csv", "--net-edges", dir / "edges.csv", "--obs",
                           dir / "obs.csv", "--model", dir / "model.json", "--kind", "point"});
    CHECK(feats.code == 0);
    CHECK(feats.out.find("distance_error") != std::string::npos);
}

TEST_CASE("pipeline output is reproducible") {
    std::string first_model, first_pred, first_eval;
    {
        TempDir dir("repro_a");
        first_eval = pipeline(dir);
        first_model = slurp(dir / "model.json");
        first_pred = slurp(dir / "pred.txt");
    }
    TempDir dir("repro_b");
    CHECK(pipeline(dir) == first_eval);
    CHECK(slurp(dir / "model.json") == first_model);
    CHECK(slurp(dir / "pred.txt") == first_pred);
}

TEST_CASE("exit codes") {
    TempDir dir("exit");
    CHECK(run({}).code == 1);
    CHECK(run({"no-such-command"}).code == 1);
    CHECK(run({"train", "--reg", "l3"}).code == 1);
    CHECK(run({"match", "--net-nodes", dir / "n.csv", "--net-edges", dir / "e.csv", "--model", dir / "missing.json",
               "--obs", dir / "missing.csv"})
              .code == 2);
    CHECK(run({"match", "--model", dir / "missing.json"}).code == 1);

    std::ofstream(dir / "bad.json") << R"({"lattice": {"radius_m": 50, "bogus": 1}})";
    const Run bad = run({"gen-network", "--config", dir / "bad.json", "--out-nodes", dir / "n.csv", "--out-edges",
                         dir / "e.csv"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("bogus") != std::string::npos);

    std::ofstream(dir / "neg.json") << R"({"lattice": {"radius_m": -5}})";
    CHECK(run({"gen-network", "--config", dir / "neg.json", "--out-nodes", dir / "n.csv", "--out-edges",
               dir / "e.csv"})
              .code == 2);
}

TEST_CASE("help shows defaults and flags override the config") {
    const Run help = run({"train", "--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("--radius") != std::string::npos);
    CHECK(help.out.find("50") != std::string::npos);

    TempDir dir("precedence");
    std::ofstream(dir / "cfg.json") << R"({"gen": {"rows": 3, "cols": 3}, "lattice": {"radius_m": 80}})";
    const Run r = run({"gen-network", "--config", dir / "cfg.json", "--cols", "4", "--out-nodes", dir / "n.csv",
                       "--out-edges", dir / "e.csv"});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("\"radius_m\":80") != std::string::npos);
    std::ifstream nodes(dir / "n.csv");
    std::size_t lines = 0;
    for (std::string line; std::getline(nodes, line);) ++lines;
    CHECK(lines == 1 + 3 * 4);
}
