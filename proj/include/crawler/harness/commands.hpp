// Subcommand implementations behind the `crawler` executable.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "crawler/analysis.hpp"
#include "crawler/harness/config.hpp"
#include "crawler/harness/output.hpp"
#include "crawler/harness/selfcheck.hpp"
#include "crawler/scales.hpp"
#include "crawler/simulation.hpp"

namespace crawler::harness {

enum ExitCode : int {
    kExitOk = 0,
    kExitSelfcheckFailed = 1,
    kExitConfigError = 2,
    kExitNumericalFailure = 3,
};

/// Result of one configured run, before any file output.
struct RunOutcome {
    std::optional<SimulationResult> sim;
    std::optional<LimitCycleSummary> cycle;
    std::vector<PhaseSegment> segments;
    std::string status = "ok";
    bool numerical_failure = false;

    /// Limit-cycle speed when a cycle was found, else the net displacement rate.
    double mean_speed() const {
        if (cycle) return cycle->mean_speed;
        return sim ? net_speed(sim->trajectory) : std::numeric_limits<double>::quiet_NaN();
    }
};

inline std::string status_of(const IntegrationError& e) {
    switch (e.kind()) {
        case IntegrationError::Kind::StepUnderflow: return "step-underflow";
        case IntegrationError::Kind::MaxSteps: return "max-steps";
        case IntegrationError::Kind::NonFinite: return "non-finite";
    }
    return "integration-error";
}

inline RunOutcome execute_run(const RunConfig& cfg, bool analyze) {
    RunOutcome out;
    try {
        out.sim = simulate(cfg.groups, cfg.initial, cfg.t0, cfg.t1, cfg.integrator);
    } catch (const IntegrationError& e) {
        out.status = status_of(e);
        out.numerical_failure = true;
        return out;
    } catch (const std::invalid_argument& e) {
        out.status = "invalid-parameters";
        out.numerical_failure = true;
        return out;
    }
    const Trajectory& traj = out.sim->trajectory;
    if (traj.size() >= 3) out.segments = segment_phases(traj, cfg.groups, cfg.cycle.fast_rate_factor);
    if (analyze) {
        try {
            out.cycle = detect_limit_cycle(traj, cfg.groups, cfg.cycle);
        } catch (const NoLimitCycle&) {
            out.status = "no-limit-cycle";
        } catch (const std::invalid_argument&) {
            out.status = "no-limit-cycle";
        }
    }
    return out;
}

inline nlohmann::ordered_json summary_json(const RunConfig& cfg, const RunOutcome& run) {
    nlohmann::ordered_json j;
    j["status"] = run.status;
    if (run.sim) {
        j["mean_speed"] = run.mean_speed();
        j["mean_speed_source"] = run.cycle ? "limit-cycle" : "net-displacement";
        j["net_speed"] = net_speed(run.sim->trajectory);
    }
    j["switching_points"] = to_json(switching_points(cfg.groups));
    j["limit_cycle"] = run.cycle ? to_json(*run.cycle) : nlohmann::ordered_json(nullptr);
    j["phase_segments"] = to_json(run.segments);
    if (run.sim) {
        j["solver"] = to_json(run.sim->trajectory.stats());
        j["n_events"] = run.sim->events.size();
    }
    j["config"] = to_json(cfg);
    return j;
}

inline void print_summary(std::ostream& os, const RunConfig& cfg, const RunOutcome& run) {
    const SwitchingPoints sp = switching_points(cfg.groups);
    os << "status            " << run.status << '\n';
    os << fmt::format("switching points  V_minus={:.7g} V_plus={:.7g} s_switch={:.7g}\n",
                      sp.V_minus, sp.V_plus, sp.s_switch);
    if (run.sim) {
        const auto& st = run.sim->trajectory.stats();
        os << fmt::format("solver            {} accepted, {} rejected steps, {} events\n",
                          st.accepted, st.rejected, run.sim->events.size());
    }
    if (run.cycle) {
        const auto& c = *run.cycle;
        os << fmt::format("period            {:.10g} (half-period spread {:.3g})\n", c.period,
                          c.period_spread);
        os << fmt::format("strain amplitude  {:.7g}\n", c.strain_amplitude);
        os << fmt::format("jump |V|          start {:.7g}, end {:.7g} over {} jumps\n",
                          c.v_jump_start, c.v_jump_end, c.n_jumps);
        os << fmt::format("advance / cycle   {:.10g}\n", c.com_advance_per_cycle);
        os << fmt::format("mean speed        {:.10g}\n", c.mean_speed);
    } else if (run.sim) {
        os << fmt::format("net speed         {:.10g}\n", run.mean_speed());
    }
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw ConfigError("output directory '" + dir.string() + "' is not writable");
    }
}

inline std::ofstream open_output(const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    return f;
}

inline void write_plots(const RunConfig& cfg, const RunOutcome& run) {
    const Trajectory& traj = run.sim->trajectory;
    Series V{"V", "#c0392b", {}, {}}, s{"s", "#2c3e50", {}, {}}, u{"u_com", "#27ae60", {}, {}};
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const State x = traj.state(i);
        V.x.push_back(traj.time(i));
        V.y.push_back(x.V);
        s.x.push_back(traj.time(i));
        s.y.push_back(x.s);
        u.x.push_back(traj.time(i));
        u.y.push_back(traj.u_com(i));
    }
    {
        auto f = open_output(cfg.out_dir / (cfg.prefix + "_trajectory.svg"));
        write_svg_plot(f, {V, s, u}, "closed-loop trajectory", "t");
    }
    std::vector<LoopPoint> loop;
    if (run.cycle) {
        try {
            loop = hysteresis_loop(traj, cfg.groups, cfg.cycle);
        } catch (const NoLimitCycle&) {
        }
    }
    if (!loop.empty()) {
        Series orbit{"orbit", "#c0392b", {}, {}}, manifold{"V-nullcline", "#999999", {}, {}};
        for (const auto& p : loop) {
            orbit.x.push_back(p.s);
            orbit.y.push_back(p.V);
        }
        const double Vmax = 1.25 * switching_points(cfg.groups).V_plus;
        for (int k = 0; k <= 400; ++k) {
            const double v = -Vmax + 2.0 * Vmax * k / 400.0;
            manifold.x.push_back((-cfg.groups.pi_c * v * v * v + cfg.groups.pi_l * v) /
                                 cfg.groups.pi_s);
            manifold.y.push_back(v);
        }
        auto f = open_output(cfg.out_dir / (cfg.prefix + "_loop.svg"));
        write_svg_plot(f, {manifold, orbit}, "hysteresis loop (V against s)", "s");
    }
}

/// Runs one simulation and writes <prefix>_trajectory.csv, _events.csv and
/// _summary.json (plus SVG plots when enabled) into cfg.out_dir.
inline int cmd_simulate(const RunConfig& cfg, std::ostream& os, bool quiet) {
    ensure_directory(cfg.out_dir);
    if (cfg.source == ParameterSource::Dimensional && cfg.dimensional &&
        cfg.dimensional->i_ext != 0.0) {
        std::cerr << "warning: i_ext is ignored by the dimensionless closed loop\n";
    }
    if (auto w = plausibility_warning(cfg.initial)) std::cerr << "warning: " << *w << '\n';

    const RunOutcome run = execute_run(cfg, cfg.limit_cycle);
    if (run.sim) {
        {
            auto f = open_output(cfg.out_dir / (cfg.prefix + "_trajectory.csv"));
            write_trajectory_csv(f, run.sim->trajectory, cfg.trajectory_stride);
        }
        {
            auto f = open_output(cfg.out_dir / (cfg.prefix + "_events.csv"));
            write_events_csv(f, run.sim->events);
        }
        if (cfg.plots) write_plots(cfg, run);
    }
    {
        auto f = open_output(cfg.out_dir / (cfg.prefix + "_summary.json"));
        f << summary_json(cfg, run).dump(2) << '\n';
    }
    if (!quiet) print_summary(os, cfg, run);
    return run.numerical_failure ? kExitNumericalFailure : kExitOk;
}

struct SweepRow {
    std::vector<double> values;
    std::string status;
    std::optional<LimitCycleSummary> cycle;
    double mean_speed = std::numeric_limits<double>::quiet_NaN();
    double net_speed = std::numeric_limits<double>::quiet_NaN();
    bool numerical_failure = true;
};

/// Runs every grid point (first axis outermost) on up to `parallelism`
/// threads. Rows come back in grid order.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    std::vector<std::vector<double>> grid;
    const auto a0 = spec.axes[0].values();
    if (spec.axes.size() == 1) {
        for (double v : a0) grid.push_back({v});
    } else {
        const auto a1 = spec.axes[1].values();
        for (double v0 : a0)
            for (double v1 : a1) grid.push_back({v0, v1});
    }

    std::vector<SweepRow> rows(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            RunConfig cfg = spec.base;
            for (std::size_t a = 0; a < spec.axes.size(); ++a) {
                *group_field(cfg.groups, spec.axes[a].name) = grid[i][a];
            }
            SweepRow row;
            row.values = grid[i];
            try {
                cfg.groups.validate();
                const RunOutcome run = execute_run(cfg, true);
                row.status = run.status;
                row.cycle = run.cycle;
                row.numerical_failure = run.numerical_failure;
                if (run.sim) {
                    row.mean_speed = run.mean_speed();
                    row.net_speed = net_speed(run.sim->trajectory);
                }
            } catch (const std::invalid_argument&) {
                row.status = "invalid-parameters";
            }
            rows[i] = std::move(row);
        }
    };
    const int n_threads = std::max(1, std::min<int>(spec.parallelism, static_cast<int>(grid.size())));
    std::vector<std::jthread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    return rows;
}

inline void write_sweep_csv(std::ostream& os, const SweepSpec& spec,
                            const std::vector<SweepRow>& rows) {
    for (const auto& ax : spec.axes) os << ax.name << ',';
    os << "status,mean_speed,net_speed,period,strain_amplitude,com_advance_per_cycle,"
          "period_spread\n";
    for (const auto& r : rows) {
        for (double v : r.values) os << num(v) << ',';
        os << r.status << ',' << num(r.mean_speed) << ',' << num(r.net_speed);
        if (r.cycle) {
            os << ',' << num(r.cycle->period) << ',' << num(r.cycle->strain_amplitude) << ','
               << num(r.cycle->com_advance_per_cycle) << ',' << num(r.cycle->period_spread)
               << '\n';
        } else {
            os << ",nan,nan,nan,nan\n";
        }
    }
}

/// Writes <prefix>_sweep.csv; exit 0 unless every grid point failed
/// numerically.
inline int cmd_sweep(const SweepSpec& spec, std::ostream& os, bool quiet) {
    ensure_directory(spec.base.out_dir);
    const auto rows = run_sweep(spec);
    {
        auto f = open_output(spec.base.out_dir / (spec.base.prefix + "_sweep.csv"));
        write_sweep_csv(f, spec, rows);
    }
    if (!quiet) write_sweep_csv(os, spec, rows);
    const bool any_ok = std::any_of(rows.begin(), rows.end(),
                                    [](const SweepRow& r) { return !r.numerical_failure; });
    return any_ok ? kExitOk : kExitNumericalFailure;
}

inline int cmd_scales(const RunConfig& cfg, std::ostream& os) {
    if (!cfg.dimensional) throw ConfigError("scales needs a [dimensional] parameter section");
    const CharacteristicScales sc = characteristic_scales(*cfg.dimensional, cfg.kappa);
    const DimensionlessGroups& g = cfg.groups;
    const ScaledVoltageGroups se = split_timescales(g);
    const SwitchingPoints sp = switching_points(g);
    os << "[scales]\n";
    os << "l_star = " << num(sc.l_star) << '\n';
    os << "m_star = " << num(sc.m_star) << '\n';
    os << "t_star = " << num(sc.t_star) << '\n';
    os << "V_star = " << num(sc.V_star) << '\n';
    os << "kappa = " << num(sc.kappa) << '\n';
    os << "\n[groups]\n";
    for (auto name : kGroupNames) {
        DimensionlessGroups copy = g;
        os << name << " = " << num(*group_field(copy, name)) << '\n';
    }
    os << "\n[scaled_groups]\n";
    os << "pi_c_eps = " << num(se.pi_c_eps) << '\n';
    os << "pi_l_eps = " << num(se.pi_l_eps) << '\n';
    os << "pi_s_eps = " << num(se.pi_s_eps) << '\n';
    os << "\n[switching_points]\n";
    os << "V_minus = " << num(sp.V_minus) << '\n';
    os << "V_plus = " << num(sp.V_plus) << '\n';
    os << "s_switch = " << num(sp.s_switch) << '\n';
    return kExitOk;
}

inline int cmd_selfcheck(std::ostream& os, bool quiet) {
    const auto results = run_selfcheck();
    bool all = true;
    for (const auto& r : results) {
        all = all && r.passed;
        if (!quiet || !r.passed) {
            os << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << '\n';
        }
    }
    return all ? kExitOk : kExitSelfcheckFailed;
}

}  // namespace crawler::harness
