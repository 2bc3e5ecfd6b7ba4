#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ilmpc/config.hpp"
#include "ilmpc/runner.hpp"

using namespace ilmpc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

bool params_equal(const servo::ServoParams& a, const servo::ServoParams& b) {
    return a.R_A == b.R_A && a.K_m == b.K_m && a.J_l == b.J_l &&
           a.beta_l == b.beta_l && a.k_l == b.k_l && a.J_m == b.J_m &&
           a.beta_m == b.beta_m && a.gear == b.gear;
}

}  // namespace

TEST_CASE("config parser: sections, comments, and errors") {
    const auto cfg = parse_config(
        "# header comment\n"
        "[alpha]\n"
        "x = 1.5   # trailing comment\n"
        "name = hello\n"
        "\n"
        "[beta]\n"
        "flag = true\n"
        "count = 7\n");
    CHECK(cfg.sections == std::vector<std::string>{"alpha", "beta"});
    CHECK(cfg.get_double("alpha.x") == 1.5);
    CHECK(cfg.get("alpha.name") == "hello");
    CHECK(cfg.get_bool("beta.flag"));
    CHECK(cfg.get_int("beta.count") == 7);
    CHECK(cfg.get_or("beta.missing", "dflt") == "dflt");

    CHECK_THROWS(cfg.get("beta.missing"));
    CHECK_THROWS(cfg.get_double("alpha.name"));
    CHECK_THROWS(cfg.get_int("alpha.x"));     // 1.5 is not an integer
    CHECK_THROWS(cfg.get_bool("alpha.name"));

    CHECK_THROWS(parse_config("x = 1\n"));                  // no section
    CHECK_THROWS(parse_config("[a]\njust words\n"));        // no '='
    CHECK_THROWS(parse_config("[a]\nx = 1\nx = 2\n"));      // duplicate
    CHECK_THROWS(parse_config("[a\nx = 1\n"));              // unterminated
    CHECK_THROWS(parse_config("[a]\nx =\n"));               // empty value
}

TEST_CASE("scenario serialization round-trips every canned scenario") {
    for (const auto& sc : servo::canned_scenarios()) {
        const auto back = scenario_from_config(parse_config(serialize_scenario(sc)));
        CHECK(back.name == sc.name);
        CHECK(back.learning == sc.learning);
        CHECK(back.max_iterations == sc.max_iterations);
        CHECK(back.fixed_steps == sc.fixed_steps);
        CHECK(back.steps_per_iteration == sc.steps_per_iteration);
        CHECK(back.dt_mpc == sc.dt_mpc);
        CHECK(back.q_nominal == sc.q_nominal);
        CHECK(back.epsilon_q_factor == sc.epsilon_q_factor);
        CHECK(back.ref_amplitude == sc.ref_amplitude);
        CHECK(back.ref_period == sc.ref_period);
        CHECK(back.torque_bound == sc.torque_bound);
        CHECK(back.voltage_bound == sc.voltage_bound);
        CHECK(params_equal(back.true_params, sc.true_params));
        CHECK(params_equal(back.assumed_params, sc.assumed_params));
        CHECK(back.mpc.N == sc.mpc.N);
        CHECK(back.mpc.Nu == sc.mpc.Nu);
        CHECK(back.mpc.Q_y == sc.mpc.Q_y);
        CHECK(back.mpc.R_v == sc.mpc.R_v);
        CHECK(back.mpc.rho == sc.mpc.rho);
        REQUIRE(back.learned.size() == sc.learned.size());
        for (size_t i = 0; i < sc.learned.size(); ++i) {
            CHECK(back.learned[i].name == sc.learned[i].name);
            CHECK(back.learned[i].amplitude == sc.learned[i].amplitude);
            CHECK(back.learned[i].omega == sc.learned[i].omega);
        }
    }
}

TEST_CASE("scenario resolution applies overrides") {
    RunOptions opt;
    opt.scenario_name = "single";
    opt.rho = 5e4;
    opt.gear = 10.0;
    opt.no_learning = true;
    opt.max_iterations = 7;
    opt.dither_overrides = {"beta_l:2e-6:0.9"};
    const auto sc = resolve_scenario(opt);
    CHECK(sc.mpc.rho == 5e4);
    CHECK(sc.true_params.gear == 10.0);
    CHECK(sc.assumed_params.gear == 10.0);
    CHECK_FALSE(sc.learning);
    CHECK(sc.max_iterations == 7);
    CHECK(sc.learned[0].amplitude == 2e-6);
    CHECK(sc.learned[0].omega == 0.9);

    opt.dither_overrides = {"J_l:1:1"};  // not learned in "single"
    CHECK_THROWS(resolve_scenario(opt));
    opt.dither_overrides = {"beta_l:oops:1"};
    CHECK_THROWS(resolve_scenario(opt));

    RunOptions empty;
    CHECK_THROWS(resolve_scenario(empty));
    empty.scenario_name = "bogus";
    CHECK_THROWS(resolve_scenario(empty));
}

TEST_CASE("scenario loads from a config file") {
    const fs::path file = fs::temp_directory_path() / "ilmpc_scenario.cfg";
    {
        std::ofstream out(file);
        out << serialize_scenario(servo::find_scenario("double"));
    }
    RunOptions opt;
    opt.config_path = file.string();
    const auto sc = resolve_scenario(opt);
    CHECK(sc.name == "double");
    CHECK(sc.learned.size() == 2);

    opt.config_path = "/nonexistent/scenario.cfg";
    CHECK_THROWS(resolve_scenario(opt));
}

TEST_CASE("validation reports every violated invariant") {
    for (const auto& sc : servo::canned_scenarios())
        CHECK(validate_scenario(sc).empty());

    auto sc = servo::find_scenario("single");
    sc.mpc.Nu = sc.mpc.N + 1;
    sc.mpc.rho = -1.0;
    sc.learned[0].omega = -0.7;
    const auto bad = validate_scenario(sc);
    CHECK(bad.size() >= 3);

    // duplicated effective dither frequency is caught
    auto dup = servo::find_scenario("double");
    dup.learned[1].omega = dup.learned[0].omega;
    CHECK_FALSE(validate_scenario(dup).empty());
}

TEST_CASE("validate subcommand prints the resolved configuration") {
    RunOptions opt;
    opt.scenario_name = "nominal";
    std::ostringstream out;
    CHECK(cmd_validate(opt, out) == 0);
    const std::string text = out.str();
    CHECK(text.find("N_E = 942") != std::string::npos);
    CHECK(text.find("OK") != std::string::npos);

    opt.steps_per_iteration = -5;
    std::ostringstream bad;
    CHECK(cmd_validate(opt, bad) == 1);
    CHECK(bad.str().find("invalid:") != std::string::npos);
}

TEST_CASE("scenarios subcommand lists the canned set") {
    std::ostringstream out;
    CHECK(cmd_scenarios(out) == 0);
    const std::string text = out.str();
    CHECK(text.find("nominal") != std::string::npos);
    CHECK(text.find("single") != std::string::npos);
    CHECK(text.find("double") != std::string::npos);
}

TEST_CASE("run subcommand writes the artifact set") {
    const fs::path dir = fresh_dir("ilmpc_cli_run");
    RunOptions opt;
    opt.scenario_name = "nominal";
    opt.output_dir = dir.string();
    std::ostringstream out;
    REQUIRE(cmd_run(opt, out) == 0);

    REQUIRE(fs::exists(dir / "trace.csv"));
    REQUIRE(fs::exists(dir / "learning.csv"));
    REQUIRE(fs::exists(dir / "summary.txt"));
    REQUIRE(fs::exists(dir / "plot.py"));

    // 1500 steps plus the header line
    const std::string trace = slurp(dir / "trace.csv");
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 1501);
    CHECK(trace.rfind("t,x1,x2,x3,x4,u,y1,y2,r,ye1,ye2,sigma,qp_iterations\n",
                      0) == 0);

    const std::string summary = slurp(dir / "summary.txt");
    CHECK(summary.find("voltage_violations = 0") != std::string::npos);
    CHECK(summary.find("torque_violations = 0") != std::string::npos);
    CHECK(summary.find("iterations = 1") != std::string::npos);

    // learning.csv row count equals the reported iteration count
    const std::string learning = slurp(dir / "learning.csv");
    CHECK(std::count(learning.begin(), learning.end(), '\n') == 2);

    // invalid override short-circuits before any simulation
    RunOptions badopt = opt;
    badopt.epsilon_q_factor = -1.0;
    std::ostringstream bad;
    CHECK(cmd_run(badopt, bad) == 1);
}

TEST_CASE("consecutive runs byte-reproduce the artifacts") {
    const fs::path a = fresh_dir("ilmpc_cli_det_a");
    const fs::path b = fresh_dir("ilmpc_cli_det_b");
    RunOptions opt;
    opt.scenario_name = "nominal";
    std::ostringstream sink;
    opt.output_dir = a.string();
    REQUIRE(cmd_run(opt, sink) == 0);
    opt.output_dir = b.string();
    REQUIRE(cmd_run(opt, sink) == 0);
    CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
    CHECK(slurp(a / "learning.csv") == slurp(b / "learning.csv"));
    CHECK(slurp(a / "summary.txt") == slurp(b / "summary.txt"));
}

TEST_CASE("learning run emits per-iteration estimates") {
    const fs::path dir = fresh_dir("ilmpc_cli_learn");
    RunOptions opt;
    opt.scenario_name = "single";
    opt.output_dir = dir.string();
    opt.max_iterations = 3;  // keep the unit test quick
    std::ostringstream out;
    REQUIRE(cmd_run(opt, out) == 0);

    const std::string learning = slurp(dir / "learning.csv");
    CHECK(learning.rfind("iteration,Q,delta_beta_l\n", 0) == 0);
    CHECK(std::count(learning.begin(), learning.end(), '\n') == 4);

    const std::string summary = slurp(dir / "summary.txt");
    CHECK(summary.find("final_delta_beta_l = ") != std::string::npos);
    CHECK(summary.find("learning = true") != std::string::npos);
}
