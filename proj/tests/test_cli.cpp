// End-to-end tests over the built CLI binary: artifact schemas, golden-file
// determinism, config/flag precedence, and exit codes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* cli_path() { return FIREFLOW_CLI_PATH; }

int run(const std::string& args) {
    const std::string cmd = std::string(cli_path()) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        cells.push_back(cur);
        rows.push_back(cells);
    }
    return rows;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "fireflow_cli_tests" / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("convergence command emits the full artifact set") {
    const fs::path out = fresh_dir("conv");
    REQUIRE(run("convergence --out " + out.string() + " --field linear:-1 --ladder 4,8,16,32") ==
            0);
    for (const char* name : {"order.csv", "order.svg", "summary.json", "config.txt"}) {
        CHECK(fs::exists(out / name));
    }
    const auto rows = read_csv(out / "order.csv");
    CHECK(rows[0] == std::vector<std::string>{"solver", "N", "dt", "error", "nfe"});
    CHECK(rows.size() == 1 + 4 * 4);  // four solvers x four ladder points

    int euler_rows = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][0] == "euler") ++euler_rows;
    }
    CHECK(euler_rows == 4);

    const json summary = json::parse(slurp(out / "summary.json"));
    CHECK(summary["order_estimates"]["fireflow"]["slope"].get<double>() ==
          doctest::Approx(2.0).epsilon(0.15));
    CHECK(summary["order_estimates"]["euler"]["slope"].get<double>() ==
          doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("fireflow NFE column reads N+1") {
    const fs::path out = fresh_dir("conv_nfe");
    REQUIRE(run("convergence --out " + out.string() +
                " --field linear:-1 --ladder 4,8,10,16 --solver fireflow") == 0);
    const auto rows = read_csv(out / "order.csv");
    bool saw_n10 = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][1] == "10") {
            CHECK(rows[i][4] == "11");
            saw_n10 = true;
        }
    }
    CHECK(saw_n10);
}

TEST_CASE("reconstruct on a constant field reports zero error") {
    const fs::path out = fresh_dir("recon_const");
    REQUIRE(run("reconstruct --out " + out.string() +
                " --field constant:1,-2 --ladder 4,8 --samples 16") == 0);
    const auto rows = read_csv(out / "recon.csv");
    CHECK(rows[0] == std::vector<std::string>{"solver", "N", "nfe", "mean_err", "p50_err",
                                              "p95_err", "diverged"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(std::stod(rows[i][3]) <= 1e-12);
        CHECK(rows[i][6] == "0");
    }
    // fireflow at N=8 costs 18 evaluations for the round trip
    bool saw = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][0] == "fireflow" && rows[i][1] == "8") {
            CHECK(rows[i][2] == "18");
            saw = true;
        }
    }
    CHECK(saw);
}

TEST_CASE("train runs are byte-identical for a fixed seed") {
    const fs::path out1 = fresh_dir("train_a");
    const fs::path out2 = fresh_dir("train_b");
    const std::string args = " --seed 2024 --iters 120 --batch 32 --hidden 16,16";
    REQUIRE(run("train --out " + out1.string() + args) == 0);
    REQUIRE(run("train --out " + out2.string() + args) == 0);
    CHECK(slurp(out1 / "checkpoint.json") == slurp(out2 / "checkpoint.json"));
    CHECK(slurp(out1 / "loss.csv") == slurp(out2 / "loss.csv"));
    CHECK(slurp(out1 / "vstats.csv") == slurp(out2 / "vstats.csv"));
    const auto loss = read_csv(out1 / "loss.csv");
    CHECK(loss[0] == std::vector<std::string>{"iter", "loss"});
    CHECK(loss.size() == 121);
}

TEST_CASE("trained checkpoint feeds the other commands") {
    const fs::path train_out = fresh_dir("train_ckpt");
    REQUIRE(run("train --out " + train_out.string() + " --seed 9 --iters 200 --batch 32") == 0);
    const std::string ckpt = (train_out / "checkpoint.json").string();

    const fs::path vel_out = fresh_dir("vel");
    REQUIRE(run("velocity-error --out " + vel_out.string() + " --checkpoint " + ckpt +
                " --steps 5 --samples 10") == 0);
    const auto rows = read_csv(vel_out / "velocity_error.csv");
    CHECK(rows[0] ==
          std::vector<std::string>{"direction", "steps", "step", "t", "abs_dt", "err"});
    // steps=5 and steps=10 series for both directions: (5-1) + (10-1) rows each
    CHECK(rows.size() == 1 + 2 * (4 + 9));
    CHECK(fs::exists(vel_out / "velocity_error_inversion.svg"));
    CHECK(fs::exists(vel_out / "velocity_error_reconstruction.svg"));

    const fs::path en_out = fresh_dir("energy");
    REQUIRE(run("energy --out " + en_out.string() + " --checkpoint " + ckpt +
                " --nfe 8 --samples 200") == 0);
    const auto en_rows = read_csv(en_out / "energy.csv");
    CHECK(en_rows.size() == 5);  // header + four solvers
    const json summary = json::parse(slurp(en_out / "summary.json"));
    CHECK(summary["energy_distance"].size() == 4);
}

TEST_CASE("straightness of straight-line flows is zero") {
    const fs::path out = fresh_dir("straight");
    REQUIRE(run("straightness --out " + out.string() +
                " --field constant:1,-2 --nfe 8 --samples 20 --dump-trajectories 2") == 0);
    const json summary = json::parse(slurp(out / "summary.json"));
    for (const char* solver : {"euler", "midpoint", "heun", "fireflow"}) {
        CHECK(summary["straightness"][solver]["mean"].get<double>() <= 1e-12);
    }
    // dumped trajectory follows the step,t,x...,nfe_cum schema
    const auto traj = read_csv(out / "trajectory_fireflow_0.csv");
    CHECK(traj[0] == std::vector<std::string>{"step", "t", "x_0", "x_1", "nfe_cum"});
    CHECK(traj.size() == 1 + 8);  // header + N+1 states at N=7 (NFE budget 8)
    CHECK(traj.back()[4] == "8");
}

TEST_CASE("perturb reports the contractive equality value") {
    const fs::path out = fresh_dir("perturb");
    REQUIRE(run("perturb --out " + out.string() + " --field linear:1 --x 2 --delta 0.1") == 0);
    const json summary = json::parse(slurp(out / "summary.json"));
    CHECK(summary["report"]["delta_0"].get<double>() == doctest::Approx(0.03679).epsilon(1e-3));
    CHECK(summary["report"]["satisfied"].get<bool>());
    const auto rows = read_csv(out / "perturb.csv");
    CHECK(rows[0] == std::vector<std::string>{"t", "delta_norm"});
    CHECK(rows.size() == 2 + 512);  // header + 513 grid points
}

TEST_CASE("config file values apply and flags override them") {
    const fs::path dir = fresh_dir("cfg");
    fs::create_directories(dir);
    const fs::path cfg = dir / "run.cfg";
    {
        std::ofstream f(cfg);
        f << "# experiment defaults\n"
          << "field = linear:-0.5\n"
          << "ladder = 4,8\n"
          << "solver = euler\n";
    }
    const fs::path out1 = dir / "from_file";
    REQUIRE(run("convergence --config " + cfg.string() + " --out " + out1.string()) == 0);
    auto rows = read_csv(out1 / "order.csv");
    CHECK(rows.size() == 3);  // header + euler x {4,8}
    const std::string echo = slurp(out1 / "config.txt");
    CHECK(echo.find("field = linear:-0.5") != std::string::npos);
    CHECK(echo.find("solver = euler") != std::string::npos);

    const fs::path out2 = dir / "flag_wins";
    REQUIRE(run("convergence --config " + cfg.string() + " --out " + out2.string() +
                " --solver fireflow") == 0);
    rows = read_csv(out2 / "order.csv");
    CHECK(rows[1][0] == "fireflow");
    CHECK(slurp(out2 / "config.txt").find("solver = fireflow") != std::string::npos);
}

TEST_CASE("bad input yields a nonzero exit code") {
    CHECK(run("convergence --out /tmp/ff_should_not_exist --field spiral:1") != 0);
    CHECK(run("perturb --field linear:1 --x 2 --delta 0.1") != 0);  // --out missing
    CHECK(run("definitely-not-a-command") != 0);
}
