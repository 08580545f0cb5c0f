// Harness tests: configuration parsing, output files and the CLI contract.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "crawler/harness/commands.hpp"

using namespace crawler;
using namespace crawler::harness;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = CRAWLER_CONFIG_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "crawler_harness_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

RunConfig parse(const std::string& text) { return parse_run_config(toml::parse(text)); }

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd =
        std::string("\"") + CRAWLER_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

nlohmann::json summary(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::string base_config(const fs::path& out, const std::string& extra_groups = "") {
    return "[groups]\n" + extra_groups + "\n[output]\ndir = \"" + out.generic_string() +
           "\"\ntrajectory_stride = 50\n";
}

}  // namespace

TEST_CASE("empty configuration falls back to the reference gait", "[harness][config]") {
    const RunConfig cfg = parse("");
    CHECK(cfg.source == ParameterSource::Groups);
    CHECK(cfg.groups.pi_f == 2.5);
    CHECK(cfg.groups.epsilon == 1e-4);
    CHECK(cfg.initial == reference_initial_state());
    CHECK(cfg.t1 == 60.0);
}

TEST_CASE("configuration fields are read", "[harness][config]") {
    const RunConfig cfg = parse(R"(
[groups]
n_f = 0.7
zeta = 2
[scales]
epsilon = 1e-3
[initial_state]
V = -1.5
s = 0.1
[integrator]
t1 = 12.5
rel_tol = 1e-9
max_steps = 1000
[analysis]
transient_crossings = 2
[output]
prefix = "abc"
plots = true
)");
    CHECK(cfg.groups.n_f == 0.7);
    CHECK(cfg.groups.zeta == 2.0);
    CHECK(cfg.groups.epsilon == 1e-3);
    CHECK(cfg.initial.V == -1.5);
    CHECK(cfg.initial.s == 0.1);
    CHECK(cfg.t1 == 12.5);
    CHECK(cfg.integrator.rel_tol == 1e-9);
    CHECK(cfg.integrator.max_steps == 1000);
    CHECK(cfg.cycle.transient_crossings == 2);
    CHECK(cfg.prefix == "abc");
    CHECK(cfg.plots);
}

TEST_CASE("dimensional parameters are converted to groups", "[harness][config]") {
    const RunConfig cfg = load_run_config(kConfigs / "desk_crawler.toml");
    REQUIRE(cfg.source == ParameterSource::Dimensional);
    REQUIRE(cfg.dimensional.has_value());
    CHECK(cfg.groups.pi_c == Approx(1e4).epsilon(1e-12));
    CHECK(cfg.groups.zeta == Approx(1.0).epsilon(1e-12));
    CHECK(cfg.groups.pi_l == Approx(2e4).epsilon(1e-12));
}

TEST_CASE("configuration errors", "[harness][config]") {
    SECTION("unknown field reports its line") {
        try {
            parse("[groups]\nn_f = 1.0\npi_x = 3.0\n");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("line 3") != std::string::npos);
            CHECK(msg.find("pi_x") != std::string::npos);
        }
    }
    SECTION("unknown section") { CHECK_THROWS_AS(parse("[solver]\nx = 1\n"), ConfigError); }
    SECTION("wrong type") { CHECK_THROWS_AS(parse("[groups]\nn_f = \"big\"\n"), ConfigError); }
    SECTION("empty horizon") {
        CHECK_THROWS_AS(parse("[integrator]\nt0 = 5.0\nt1 = 5.0\n"), ConfigError);
    }
    SECTION("non-positive group") { CHECK_THROWS_AS(parse("[groups]\npi_s = 0.0\n"), ConfigError); }
    SECTION("both parameter sources") {
        CHECK_THROWS_AS(parse("[groups]\nn_f = 1.0\n[dimensional]\nm = 1.0\n"), ConfigError);
    }
    SECTION("incomplete dimensional section") {
        CHECK_THROWS_AS(parse("[dimensional]\nm = 1.0\n"), ConfigError);
    }
    SECTION("bad epsilon") { CHECK_THROWS_AS(parse("[scales]\nepsilon = 2.0\n"), ConfigError); }
    SECTION("missing file") {
        CHECK_THROWS_AS(load_run_config(kConfigs / "does_not_exist.toml"), ConfigError);
    }
}

TEST_CASE("sweep specifications", "[harness][config]") {
    const SweepSpec spec = load_sweep_spec(kConfigs / "sweep_anisotropy.toml");
    REQUIRE(spec.axes.size() == 1);
    CHECK(spec.axes[0].name == "n_f");
    CHECK(spec.axes[0].values() == std::vector<double>{0.0, 0.5, 1.0, 1.5});
    CHECK(spec.base.prefix == "reference");

    const fs::path dir = scratch("sweep_spec");
    const auto bad = write_file(dir / "bad.toml",
                                "[sweep]\n[[sweep.axis]]\nname = \"pi_q\"\nmin = 1.0\n");
    CHECK_THROWS_AS(load_sweep_spec(bad), ConfigError);
    const auto none = write_file(dir / "none.toml", "[sweep]\nparallelism = 2\n");
    CHECK_THROWS_AS(load_sweep_spec(none), ConfigError);
    const auto inline_base = write_file(
        dir / "inline.toml",
        "[groups]\nzeta = 3.0\n[sweep]\n[[sweep.axis]]\nname = \"pi_v\"\nmin = 0.4\nmax = 0.6\n"
        "count = 2\n[[sweep.axis]]\nname = \"n_f\"\nmin = 1.5\n");
    const SweepSpec two = load_sweep_spec(inline_base);
    CHECK(two.base.groups.zeta == 3.0);
    REQUIRE(two.axes.size() == 2);
    CHECK(two.axes[1].values() == std::vector<double>{1.5});
}

TEST_CASE("trajectory CSV round trip", "[harness][output]") {
    const auto run = simulate(reference_groups(), reference_initial_state(), 0.0, 5.0);
    std::stringstream ss;
    write_trajectory_csv(ss, run.trajectory, 7);
    const Trajectory back = read_trajectory_csv(ss, reference_groups());
    CHECK(back.time(back.size() - 1) == run.trajectory.t_end());
    CHECK(back.size() == (run.trajectory.size() - 1) / 7 + 1 +
                             ((run.trajectory.size() - 1) % 7 != 0 ? 1 : 0));
    for (std::size_t i = 0; i + 1 < back.size(); ++i) {
        REQUIRE(back.state(i) == run.trajectory.state(7 * i));
        REQUIRE(back.time(i) == run.trajectory.time(7 * i));
    }
}

TEST_CASE("CLI simulate on the reference configuration", "[harness][cli]") {
    const fs::path out = scratch("simulate");
    REQUIRE(run_cli("simulate " + (kConfigs / "reference.toml").string() + " --out " + out.string(),
                    out / "log.txt") == 0);
    for (auto f : {"reference_trajectory.csv", "reference_events.csv", "reference_summary.json",
                   "reference_trajectory.svg", "reference_loop.svg"}) {
        CHECK(fs::exists(out / f));
    }
    const auto j = summary(out / "reference_summary.json");
    CHECK(j["status"] == "ok");
    CHECK(j["mean_speed"].get<double>() > 0.0);
    CHECK(j["limit_cycle"]["com_advance_per_cycle"].get<double>() > 0.0);
    CHECK(j["switching_points"]["V_minus"].get<double>() == Approx(0.816496580927726));
    CHECK(slurp(out / "reference_events.csv").rfind("t,kind,V,v_com,s,v_s\n", 0) == 0);
    CHECK(slurp(out / "reference_events.csv").find("switching-down") != std::string::npos);
}

TEST_CASE("CLI simulate with isotropic friction", "[harness][cli]") {
    const fs::path out = scratch("isotropic");
    const auto cfg = write_file(out / "iso.toml", base_config(out, "n_f = 0.0"));
    REQUIRE(run_cli("simulate --quiet " + cfg.string(), out / "log.txt") == 0);
    const auto j = summary(out / "run_summary.json");
    CHECK(std::abs(j["mean_speed"].get<double>()) < 1e-6);
}

TEST_CASE("CLI exit codes", "[harness][cli]") {
    const fs::path out = scratch("exit_codes");
    const auto bad = write_file(out / "bad.toml", "[groups]\nbogus = 1\n");
    CHECK(run_cli("simulate " + bad.string(), out / "log1.txt") == kExitConfigError);
    CHECK(slurp(out / "log1.txt").find("line 2") != std::string::npos);

    const auto sweep = write_file(out / "sweep.toml",
                                  "[sweep]\n[[sweep.axis]]\nname = \"pi_q\"\nmin = 1.0\n");
    CHECK(run_cli("sweep " + sweep.string(), out / "log2.txt") == kExitConfigError);
    CHECK(run_cli("simulate " + (out / "missing.toml").string(), out / "log3.txt") ==
          kExitConfigError);
    CHECK(run_cli("frobnicate", out / "log4.txt") == kExitConfigError);

    const auto budget = write_file(out / "budget.toml",
                                   base_config(out) + "[integrator]\nmax_steps = 100\n");
    CHECK(run_cli("simulate " + budget.string(), out / "log5.txt") == kExitNumericalFailure);
    CHECK(summary(out / "run_summary.json")["status"] == "max-steps");

    CHECK(run_cli("selfcheck", out / "log6.txt") == kExitOk);
    CHECK(slurp(out / "log6.txt").find("[FAIL]") == std::string::npos);
}

TEST_CASE("CLI scales", "[harness][cli]") {
    const fs::path out = scratch("scales");
    REQUIRE(run_cli("scales " + (kConfigs / "desk_crawler.toml").string(), out / "s.txt") == 0);
    const toml::table t = toml::parse(slurp(out / "s.txt"));
    CHECK(t["scales"]["t_star"].value<double>().value() == Approx(0.1).epsilon(1e-14));
    CHECK(t["scales"]["V_star"].value<double>().value() == Approx(0.1).epsilon(1e-14));
    CHECK(t["groups"]["pi_c"].value<double>().value() == Approx(1e4).epsilon(1e-12));

    std::string text = slurp(kConfigs / "desk_crawler.toml");
    text.replace(text.find("b = 0.05"), 8, "b = 0.0 ");
    const auto undamped = write_file(out / "undamped.toml", text);
    REQUIRE(run_cli("scales " + undamped.string(), out / "u.txt") == 0);
    CHECK(toml::parse(slurp(out / "u.txt"))["groups"]["zeta"].value<double>().value() == 0.0);

    const auto groups_only = write_file(out / "g.toml", "[groups]\nn_f = 1.0\n");
    CHECK(run_cli("scales " + groups_only.string(), out / "g.txt") == kExitConfigError);
}

TEST_CASE("CLI runs are byte-identical", "[harness][cli][determinism]") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const std::string cfg = (kConfigs / "reference.toml").string();
    REQUIRE(run_cli("simulate --quiet " + cfg + " --out " + a.string(), a / "log.txt") == 0);
    REQUIRE(run_cli("simulate --quiet " + cfg + " --out " + b.string(), b / "log.txt") == 0);
    for (auto f : {"reference_trajectory.csv", "reference_events.csv", "reference_summary.json"}) {
        CHECK(slurp(a / f) == slurp(b / f));
    }
}

TEST_CASE("CLI sweep", "[harness][cli][sweep]") {
    const fs::path out = scratch("sweep");

    SECTION("single point matches simulate") {
        const auto one = write_file(out / "one.toml",
                                    "[sweep]\nbase = \"" + (kConfigs / "reference.toml").generic_string() +
                                        "\"\n[[sweep.axis]]\nname = \"n_f\"\nmin = 1.5\n");
        // base is resolved relative to the sweep file; an absolute path wins.
        REQUIRE(run_cli("sweep --quiet " + one.string() + " --out " + out.string(),
                        out / "log.txt") == 0);
        REQUIRE(run_cli("simulate --quiet " + (kConfigs / "reference.toml").string() + " --out " +
                            out.string(),
                        out / "log2.txt") == 0);
        std::istringstream rows(slurp(out / "reference_sweep.csv"));
        std::string header, row;
        std::getline(rows, header);
        std::getline(rows, row);
        const auto j = summary(out / "reference_summary.json");
        CHECK(row.find(num(j["mean_speed"].get<double>())) != std::string::npos);
        CHECK(row.find(num(j["limit_cycle"]["period"].get<double>())) != std::string::npos);
    }

    SECTION("speed grows with anisotropy and is independent of thread count") {
        const std::string spec = (kConfigs / "sweep_anisotropy.toml").string();
        REQUIRE(run_cli("sweep --quiet " + spec + " --out " + out.string(), out / "log.txt") == 0);
        const std::string parallel = slurp(out / "reference_sweep.csv");

        std::string serial_spec = slurp(kConfigs / "sweep_anisotropy.toml");
        serial_spec.replace(serial_spec.find("parallelism = 4"), 15, "parallelism = 1");
        serial_spec.replace(serial_spec.find("reference.toml"), 14, (kConfigs / "reference.toml").generic_string());
        const auto serial = write_file(out / "serial.toml", serial_spec);
        const fs::path out1 = out / "serial";
        REQUIRE(run_cli("sweep --quiet " + serial.string() + " --out " + out1.string(),
                        out / "log1.txt") == 0);
        CHECK(slurp(out1 / "reference_sweep.csv") == parallel);

        std::istringstream rows(parallel);
        std::string line;
        std::getline(rows, line);
        REQUIRE(line.rfind("n_f,status,mean_speed,", 0) == 0);
        std::vector<double> speed;
        while (std::getline(rows, line)) {
            std::stringstream cells(line);
            std::string nf, status, v;
            std::getline(cells, nf, ',');
            std::getline(cells, status, ',');
            std::getline(cells, v, ',');
            speed.push_back(std::stod(v));
        }
        REQUIRE(speed.size() == 4);
        CHECK(std::abs(speed[0]) < 1e-6);
        for (std::size_t i = 1; i < speed.size(); ++i) CHECK(speed[i] > speed[i - 1]);
    }
}
