// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crawler/analysis.hpp"
#include "crawler/harness/commands.hpp"
#include "crawler/harness/selfcheck.hpp"
#include "crawler/scales.hpp"
#include "crawler/simulation.hpp"

using namespace crawler;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = true;
    std::vector<std::string> notes;

    void require(bool ok, std::string note) {
        passed = passed && ok;
        notes.push_back((ok ? "" : "!") + std::move(note));
    }
};

bool within(double x, double target, double rel) {
    return std::abs(x - target) <= rel * std::abs(target);
}

const SimulationResult& reference_run() {
    static const SimulationResult run =
        simulate(reference_groups(), reference_initial_state(), 0.0, 60.0);
    return run;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome switching_arithmetic() {
    Outcome o;
    const DimensionlessGroups g = reference_groups();
    const SwitchingPoints sp = switching_points(g);
    o.require(std::abs(sp.V_minus - 0.8164966) <= 1e-6, fmt::format("V_minus {:.10f}", sp.V_minus));
    o.require(std::abs(sp.V_plus - 1.6329932) <= 1e-6, fmt::format("V_plus {:.10f}", sp.V_plus));
    o.require(std::abs(sp.s_switch - 0.5443311) <= 1e-6,
              fmt::format("s_switch {:.10f}", sp.s_switch));
    DimensionlessGroups scaled = g;
    scaled.pi_c *= g.epsilon;
    scaled.pi_l *= g.epsilon;
    scaled.pi_s *= g.epsilon;
    const SwitchingPoints se = switching_points(scaled);
    o.require(se.V_minus == sp.V_minus && se.V_plus == sp.V_plus && se.s_switch == sp.s_switch,
              "bitwise invariant under pi -> eps*pi");
    return o;
}

Outcome reference_gait() {
    Outcome o;
    const DimensionlessGroups g = reference_groups();
    const SwitchingPoints sp = switching_points(g);
    const auto start = std::chrono::steady_clock::now();
    const auto run = simulate(g, reference_initial_state(), 0.0, 60.0);
    const LimitCycleSummary lc = detect_limit_cycle(run.trajectory, g);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(lc.period_spread < 0.01, fmt::format("period {:.6f} spread {:.2e}", lc.period,
                                                   lc.period_spread));
    o.require(within(lc.v_jump_start, sp.V_minus, 0.05),
              fmt::format("jump start |V| {:.5f}", lc.v_jump_start));
    o.require(within(lc.v_jump_end, sp.V_plus, 0.05),
              fmt::format("jump end |V| {:.5f}", lc.v_jump_end));
    o.require(within(lc.strain_amplitude, sp.s_switch, 0.05),
              fmt::format("strain extremum {:.5f}", lc.strain_amplitude));
    o.require(secs < 5.0, fmt::format("runtime {:.2f} s", secs));
    return o;
}

Outcome forward_locomotion() {
    Outcome o;
    const DimensionlessGroups g = reference_groups();
    const LimitCycleSummary lc = detect_limit_cycle(reference_run().trajectory, g);
    o.require(lc.com_advance_per_cycle > 0.0,
              fmt::format("advance/cycle {:.6f} at n_f=1.5", lc.com_advance_per_cycle));

    DimensionlessGroups iso = g;
    iso.n_f = 0.0;
    harness::RunConfig cfg;
    cfg.groups = iso;
    const harness::RunOutcome run = harness::execute_run(cfg, true);
    o.require(run.sim.has_value() && std::abs(run.mean_speed()) < 1e-6,
              fmt::format("mean speed {:.2e} at n_f=0 ({})", run.mean_speed(), run.status));
    return o;
}

Outcome equivariance() {
    Outcome o;
    const DimensionlessGroups g = reference_groups();
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const State x = harness::random_state(rng);
        worst = std::max(worst, harness::relative_gap(rhs_dimensionless(apply_phi(x), g).to_array(),
                                                      apply_phi(rhs_dimensionless(x, g)).to_array()));
    }
    o.require(worst <= 1e-12, fmt::format("rhs gap {:.2e}", worst));
    const double defect = loop_symmetry_defect(hysteresis_loop(reference_run().trajectory, g));
    o.require(defect < 0.01, fmt::format("loop Phi-defect {:.2e}", defect));
    return o;
}

Outcome coordinate_oracles() {
    Outcome o;
    const DimensionlessGroups g = reference_groups();
    const DimensionalParams p = dimensional_from_groups(g, reference_anchors());
    const CharacteristicScales sc = characteristic_scales(p);

    std::mt19937_64 rng(77);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const ComStrainState x = redimensionalize_state(harness::random_state(rng), 0.3, sc);
        const ComStrainState a = rhs_dimensional_comstrain(x, p);
        const ComStrainState b = to_com_strain(rhs_dimensional_two_mass(to_two_mass(x), p));
        const double acc = std::max(std::abs(a.du_com), std::abs(a.ds));
        worst = std::max({worst, std::abs(a.V - b.V) / std::abs(a.V),
                          std::abs(a.du_com - b.du_com) / acc, std::abs(a.ds - b.ds) / acc});
    }
    o.require(worst <= 1e-12, fmt::format("two-mass gap {:.2e}", worst));

    IntegratorConfig nd_cfg;
    nd_cfg.store_dense = true;
    const auto nd = simulate(g, reference_initial_state(), 0.0, 60.0, nd_cfg);

    IntegratorConfig si = nd_cfg;
    si.h_init *= sc.t_star;
    si.h_min *= sc.t_star;
    si.h_max *= sc.t_star;
    si.abs_tol *= sc.V_star;
    const ComStrainState x0 = redimensionalize_state(reference_initial_state(), 0.0, sc);
    auto rhs = [&](double, const Vec<5>& y) {
        const ComStrainState d = rhs_dimensional_comstrain({y[0], y[1], y[2], y[3], y[4]}, p);
        return Vec<5>{d.V, d.u_com, d.du_com, d.s, d.ds};
    };
    const auto dim = integrate<5>(rhs, Vec<5>{x0.V, x0.u_com, x0.du_com, x0.s, x0.ds}, 0.0,
                                  60.0 * sc.t_star, si);

    double sum = 0.0;
    const int n = 6000;
    for (int i = 0; i <= n; ++i) {
        const double t = 60.0 * i / n;
        const auto y = dense_eval(dim, t * sc.t_star);
        const State a = nondimensionalize_state({y[0], y[1], y[2], y[3], y[4]}, sc).x;
        const State b = nd.trajectory.at(t).first;
        sum += std::pow(a.V - b.V, 2) + std::pow(a.v_com - b.v_com, 2) +
               std::pow(a.s - b.s, 2) + std::pow(a.v_s - b.v_s, 2);
    }
    const double rms = std::sqrt(sum / (n + 1));
    o.require(rms < 1e-6, fmt::format("rescaled SI run RMS {:.2e}", rms));
    return o;
}

Outcome manifold_geometry() {
    Outcome o;
    const DimensionlessGroups g = reference_groups();
    const double ss = switching_points(g).s_switch;
    double worst = 0.0;
    bool counts = true;
    for (int i = 0; i < 1000; ++i) {
        const double s = -2.0 * ss + 4.0 * ss * i / 999.0;
        const auto roots = slow_manifold_roots(s, g);
        for (const auto& r : roots) {
            worst = std::max(worst, std::abs(-g.pi_c * r.V * r.V * r.V + g.pi_l * r.V - g.pi_s * s));
        }
        if (std::abs(std::abs(s) - ss) > 1e-8) counts = counts && root_count(roots) == (std::abs(s) < ss ? 3 : 1);
    }
    o.require(worst < 1e-10 * g.pi_l, fmt::format("root residual {:.2e}", worst));
    for (int sign : {+1, -1}) {
        counts = counts && root_count(slow_manifold_roots(sign * (ss - 1e-8), g)) == 3 &&
                 root_count(slow_manifold_roots(sign * (ss + 1e-8), g)) == 1;
    }
    o.require(counts, "3->1 at |s| = s_switch +- 1e-8");

    const Trajectory& traj = reference_run().trajectory;
    const auto res = manifold_residual(traj, g);
    std::size_t slow = 0, good = 0;
    for (const auto& seg : segment_phases(traj, g)) {
        if (seg.kind != PhaseKind::Slow) continue;
        for (std::size_t i = seg.i_start; i <= seg.i_end; ++i) {
            ++slow;
            good += res[i] < 0.05;
        }
    }
    const double frac = static_cast<double>(good) / static_cast<double>(slow);
    o.require(frac >= 0.95, fmt::format("slow samples on manifold {:.2f}%", 100.0 * frac));
    return o;
}

Outcome convergence() {
    Outcome o;
    const DimensionlessGroups g = reference_groups();
    const double p1 = detect_limit_cycle(reference_run().trajectory, g).period;
    IntegratorConfig half;
    half.rel_tol /= 2.0;
    half.abs_tol /= 2.0;
    const double p2 =
        detect_limit_cycle(simulate(g, reference_initial_state(), 0.0, 60.0, half).trajectory, g)
            .period;
    const double change = std::abs(p2 - p1) / p1;
    o.require(change < 1e-3, fmt::format("period change {:.2e}", change));

    IntegratorConfig cfg;
    cfg.h_init = 1e-3;
    cfg.h_max = 1.0;
    const auto sol = integrate<2>([](double, const Vec<2>& y) { return Vec<2>{y[1], -y[0]}; },
                                  Vec<2>{1.0, 0.0}, 0.0, 2.0 * std::numbers::pi, cfg);
    const double err = std::hypot(sol.y.back()[0] - 1.0, sol.y.back()[1]);
    o.require(err < 1e-6, fmt::format("oscillator return {:.2e}", err));
    return o;
}

Outcome reproducibility() {
    Outcome o;
    const fs::path root = fs::temp_directory_path() / "crawler_acceptance";
    fs::remove_all(root);
    harness::RunConfig cfg = harness::load_run_config(fs::path(CRAWLER_CONFIG_DIR) / "reference.toml");
    std::ostringstream sink;
    bool same = true;
    cfg.out_dir = root / "a";
    const int rc_a = harness::cmd_simulate(cfg, sink, true);
    cfg.out_dir = root / "b";
    const int rc_b = harness::cmd_simulate(cfg, sink, true);
    for (auto f : {"_trajectory.csv", "_events.csv", "_summary.json", "_trajectory.svg",
                   "_loop.svg"}) {
        const std::string name = cfg.prefix + f;
        same = same && fs::exists(root / "a" / name) &&
               slurp(root / "a" / name) == slurp(root / "b" / name);
    }
    o.require(rc_a == 0 && rc_b == 0 && same, "simulate outputs byte-identical");

    harness::SweepSpec spec =
        harness::load_sweep_spec(fs::path(CRAWLER_CONFIG_DIR) / "sweep_anisotropy.toml");
    std::ostringstream serial, parallel;
    spec.parallelism = 1;
    harness::write_sweep_csv(serial, spec, harness::run_sweep(spec));
    spec.parallelism = 4;
    harness::write_sweep_csv(parallel, spec, harness::run_sweep(spec));
    o.require(serial.str() == parallel.str(), "sweep identical for 1 and 4 threads");
    fs::remove_all(root);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"switching arithmetic", switching_arithmetic},
        {"reference gait", reference_gait},
        {"forward locomotion", forward_locomotion},
        {"reflection equivariance", equivariance},
        {"coordinate and scaling oracles", coordinate_oracles},
        {"slow-manifold geometry", manifold_geometry},
        {"integrator convergence", convergence},
        {"reproducibility", reproducibility},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        std::string detail;
        for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
        std::cout << fmt::format("{} [{}] {}: {}\n", o.passed ? "PASS" : "FAIL", i + 1,
                                 criteria[i].first, detail);
        failed += !o.passed;
    }
    std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
