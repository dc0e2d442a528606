#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>

#include "mjls/cli.hpp"
#include "mjls/model_io.hpp"
#include "support.hpp"

using namespace mjls;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("mjls_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

const std::string kModel = mjls::testing::data_path("paper.model");

} // namespace

TEST_CASE("cli synthesize") {
    TempDir dir;
    const CliRun a = run({"synthesize", "--model", kModel, "--seed", "7", "--out", dir.file("a.json")});
    REQUIRE(a.code == kExitOk);
    CHECK(a.out.find("certified_stable: true") != std::string::npos);
    const CliRun b = run({"synthesize", "--model", kModel, "--seed", "7", "--out", dir.file("b.json")});
    REQUIRE(b.code == kExitOk);

    std::string ra = read_text_file(dir.file("a.json"));
    std::string rb = read_text_file(dir.file("b.json"));
    CHECK(ra.find("\"certified_stable\": true") != std::string::npos);
    CHECK(ra.find("\"seed\": 7") != std::string::npos);
    CHECK(fs::exists(dir.file("a.json.gain")));
    CHECK(read_text_file(dir.file("a.json.gain")) == read_text_file(dir.file("b.json.gain")));
    CHECK(ra == rb);

    // The written gain feeds the other subcommands.
    const CliRun s = run({"stability", "--model", kModel, "--gain", "file:" + dir.file("a.json.gain")});
    CHECK(s.code == kExitOk);
    CHECK(s.out.find("ms_stable: true") != std::string::npos);
    const CliRun c = run({"cost", "--model", kModel, "--gain", "file:" + dir.file("a.json.gain")});
    CHECK(c.code == kExitOk);
}

TEST_CASE("cli stability") {
    const CliRun r = run({"stability", "--model", kModel, "--gain", "zero"});
    CHECK(r.code == kExitNotStable);
    CHECK(r.out.find("spectral_radius: 1.3295") != std::string::npos);

    const CliRun t3 = run({"stability", "--model", kModel, "--transition", "3", "--gain", "zero", "--method", "spectral"});
    CHECK(t3.code == kExitNotStable);
    CHECK(t3.out.find("spectral_radius: 1.1047") != std::string::npos);

    CHECK(run({"stability", "--model", kModel, "--gain", "chizeck"}).code == kExitOk);
    CHECK(run({"stability", "--model", kModel, "--gain", "proposed", "--method", "lyapunov"}).code == kExitOk);
    CHECK(run({"stability", "--model", kModel, "--method", "other"}).code == kExitValidation);
}

TEST_CASE("cli rejects bad input") {
    TempDir dir;
    MjlsModel m = mjls::testing::example_model(1);
    m.transition = TransitionMatrix((Matrix(2, 2) << 0.89, 0.1, 0.1, 0.9).finished());
    save_model(m, dir.file("bad.model"));

    const CliRun bad = run({"synthesize", "--model", dir.file("bad.model")});
    CHECK(bad.code == kExitValidation);
    CHECK(bad.err.find("row-stochastic") != std::string::npos);

    CHECK(run({"synthesize", "--model", kModel, "--bogus"}).code == kExitValidation);
    CHECK(run({"synthesize"}).code == kExitValidation);
    CHECK(run({}).code == kExitValidation);
    CHECK(run({"synthesize", "--model", dir.file("missing.model")}).code == kExitValidation);
    CHECK(run({"synthesize", "--model", kModel, "--transition", "4"}).code == kExitValidation);
    CHECK(run({"simulate", "--model", kModel, "--x0", "1,2,3"}).code == kExitValidation);
}

TEST_CASE("cli cost") {
    CHECK(run({"cost", "--model", kModel, "--gain", "zero"}).code == kExitNotStable);
    const CliRun ok = run({"cost", "--model", kModel, "--gain", "proposed"});
    CHECK(ok.code == kExitOk);
    CHECK(run({"cost", "--model", kModel, "--gain", "chizeck"}).code == kExitValidation);
}

TEST_CASE("cli stabilizability") {
    TempDir dir;
    const CliRun r = run({"stabilizability", "--model", kModel, "--out", dir.file("s.json"), "--grid", dir.file("g.csv"),
                          "--grid-points", "5"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("stabilizable: true") != std::string::npos);
    const std::string grid = read_text_file(dir.file("g.csv"));
    CHECK(grid.rfind("l1,l2,rho\n", 0) == 0);
    CHECK(std::count(grid.begin(), grid.end(), '\n') == 26);

    TempDir other;
    MjlsModel m = mjls::testing::example_model(1);
    m.b[0].setZero();
    m.b[1].setZero();
    save_model(m, other.file("nob.model"));
    CHECK(run({"stabilizability", "--model", other.file("nob.model")}).code == kExitNotStable);
}

TEST_CASE("cli simulate") {
    TempDir dir;
    const std::vector<std::string> base{"simulate", "--model", kModel, "--controller", "chizeck", "--x0", "3,2",
                                        "--runs", "40", "--horizon", "50", "--seed", "3"};
    std::vector<std::string> args = base;
    for (const char* extra : {"--csv", "--trajectory", "--out"}) {
        args.push_back(extra);
        args.push_back(dir.file(std::string(extra + 2) + ".out"));
    }
    args.push_back("--threads");
    args.push_back("3");
    const CliRun r = run(args);
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("runs: 40, horizon: 50") != std::string::npos);

    const std::string csv = read_text_file(dir.file("csv.out"));
    CHECK(csv.rfind("run,time_averaged_cost\n1,", 0) == 0);
    CHECK(csv.find("\nmean,") != std::string::npos);
    CHECK(csv.find("\nstd,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 43);

    const std::string traj = read_text_file(dir.file("trajectory.out"));
    CHECK(traj.rfind("k,x1,x2,u1,mode\n0,3,2,", 0) == 0);
    CHECK(std::count(traj.begin(), traj.end(), '\n') == 52);

    // Same seed, different thread count, same numbers.
    std::vector<std::string> single = base;
    single.insert(single.end(), {"--csv", dir.file("single.csv"), "--threads", "1"});
    REQUIRE(run(single).code == kExitOk);
    CHECK(read_text_file(dir.file("single.csv")) == csv);

    const std::string report = read_text_file(dir.file("out.out"));
    CHECK(report.find("\"noise_family\": \"gaussian\"") != std::string::npos);
    CHECK(report.find("\"theta0\": \"stationary\"") != std::string::npos);
}
