// Trajectory/event CSV, summary JSON and SVG plot writers.
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "crawler/analysis.hpp"
#include "crawler/harness/config.hpp"
#include "crawler/simulation.hpp"

namespace crawler::harness {

/// 17 significant digits: enough to round-trip every double.
inline std::string num(double v) { return fmt::format("{:.17g}", v); }

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int stride = 1) {
    os << "t,V,v_com,s,v_s,u_com\n";
    const std::size_t n = traj.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i % static_cast<std::size_t>(stride) != 0 && i + 1 != n) continue;
        const State x = traj.state(i);
        os << num(traj.time(i)) << ',' << num(x.V) << ',' << num(x.v_com) << ',' << num(x.s)
           << ',' << num(x.v_s) << ',' << num(traj.u_com(i)) << '\n';
    }
}

inline void write_events_csv(std::ostream& os, const std::vector<Event>& events) {
    os << "t,kind,V,v_com,s,v_s\n";
    for (const auto& e : events) {
        os << num(e.t) << ',' << to_string(e.kind) << ',' << num(e.x.V) << ','
           << num(e.x.v_com) << ',' << num(e.x.s) << ',' << num(e.x.v_s) << '\n';
    }
}

/// Reads a trajectory CSV back (header row required).
inline Trajectory read_trajectory_csv(std::istream& is, const DimensionlessGroups& g) {
    std::string line;
    if (!std::getline(is, line) || line != "t,V,v_com,s,v_s,u_com") {
        throw std::runtime_error("trajectory CSV: unexpected header");
    }
    std::vector<double> t, u;
    std::vector<State> x;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        double v[6];
        std::size_t pos = 0;
        for (int k = 0; k < 6; ++k) {
            std::size_t used = 0;
            v[k] = std::stod(line.substr(pos), &used);
            pos += used + 1;
        }
        t.push_back(v[0]);
        x.push_back({v[1], v[2], v[3], v[4]});
        u.push_back(v[5]);
    }
    return make_trajectory(t, x, u, g);
}

inline nlohmann::ordered_json to_json(const DimensionlessGroups& g) {
    return {{"zeta", g.zeta}, {"pi_f", g.pi_f},   {"pi_v", g.pi_v},
            {"pi_eps", g.pi_eps}, {"n_f", g.n_f}, {"pi_c", g.pi_c},
            {"pi_l", g.pi_l}, {"pi_s", g.pi_s},   {"epsilon", g.epsilon}};
}

inline nlohmann::ordered_json to_json(const DimensionalParams& p) {
    return {{"m", p.m},         {"l0", p.l0},       {"k", p.k},         {"b", p.b},
            {"f_max", p.f_max}, {"k_v", p.k_v},     {"c", p.c},         {"alpha", p.alpha},
            {"beta", p.beta},   {"gamma", p.gamma}, {"eps_f", p.eps_f}, {"n_f", p.n_f},
            {"i_ext", p.i_ext}};
}

inline nlohmann::ordered_json to_json(const SwitchingPoints& sp) {
    return {{"V_minus", sp.V_minus}, {"V_plus", sp.V_plus}, {"s_switch", sp.s_switch}};
}

inline nlohmann::ordered_json to_json(const LimitCycleSummary& lc) {
    auto finite_or_null = [](double v) -> nlohmann::ordered_json {
        return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
    };
    return {{"period", lc.period},
            {"half_period", lc.half_period},
            {"period_spread", lc.period_spread},
            {"strain_amplitude", lc.strain_amplitude},
            {"v_jump_start", finite_or_null(lc.v_jump_start)},
            {"v_jump_end", finite_or_null(lc.v_jump_end)},
            {"com_advance_per_cycle", lc.com_advance_per_cycle},
            {"mean_speed", lc.mean_speed},
            {"n_cycles_used", lc.n_cycles_used},
            {"n_half_cycles", lc.n_half_cycles},
            {"n_jumps", lc.n_jumps},
            {"t_window_start", lc.t_window_start},
            {"t_window_end", lc.t_window_end}};
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["source"] = c.source == ParameterSource::Groups ? "groups" : "dimensional";
    j["groups"] = to_json(c.groups);
    if (c.dimensional) {
        j["dimensional"] = to_json(*c.dimensional);
        j["kappa"] = c.kappa;
    }
    j["initial_state"] = {{"V", c.initial.V}, {"v_com", c.initial.v_com},
                          {"s", c.initial.s}, {"v_s", c.initial.v_s}};
    j["integrator"] = {{"t0", c.t0},
                       {"t1", c.t1},
                       {"rel_tol", c.integrator.rel_tol},
                       {"abs_tol", c.integrator.abs_tol},
                       {"h_init", c.integrator.h_init},
                       {"h_min", c.integrator.h_min},
                       {"h_max", c.integrator.h_max},
                       {"max_steps", c.integrator.max_steps},
                       {"record_stride", c.integrator.record_stride}};
    j["analysis"] = {{"limit_cycle", c.limit_cycle},
                     {"transient_crossings", c.cycle.transient_crossings},
                     {"max_spread", c.cycle.max_spread},
                     {"fast_rate_factor", c.cycle.fast_rate_factor}};
    j["output"] = {{"prefix", c.prefix},
                   {"trajectory_stride", c.trajectory_stride},
                   {"plots", c.plots}};
    return j;
}

inline nlohmann::ordered_json to_json(const std::vector<PhaseSegment>& segs) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : segs) {
        arr.push_back({{"kind", to_string(s.kind)}, {"t_start", s.t_start}, {"t_end", s.t_end}});
    }
    return arr;
}

inline nlohmann::ordered_json to_json(const StepStats& st) {
    return {{"accepted", st.accepted},
            {"rejected", st.rejected},
            {"rhs_evals", st.rhs_evals},
            {"min_step", st.min_step},
            {"max_step", st.max_step}};
}

// -----------------------------------------------------------------------------
// SVG
// -----------------------------------------------------------------------------

struct Series {
    std::string label;
    std::string color;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal line plot: shared axes, one polyline per series, decimated to at
/// most max_points vertices each.
inline void write_svg_plot(std::ostream& os, const std::vector<Series>& series,
                           const std::string& title, const std::string& x_label,
                           std::size_t max_points = 4000) {
    constexpr double W = 800, H = 500, L = 70, R = 20, T = 40, B = 50;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series) {
        for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
        for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };

    os << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}">)", W, H)
       << '\n';
    os << fmt::format(R"(<rect width="{}" height="{}" fill="white"/>)", W, H) << '\n';
    os << fmt::format(R"(<text x="{}" y="24" font-family="sans-serif" font-size="16">{}</text>)",
                      L, title)
       << '\n';
    os << fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>)",
                      L, T, W - L - R, H - T - B)
       << '\n';
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0;
        const double yv = y0 + (y1 - y0) * k / 4.0;
        os << fmt::format(
                  R"(<text x="{:.1f}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.3g}</text>)",
                  px(xv), H - B + 16, xv)
           << '\n';
        os << fmt::format(
                  R"(<text x="{}" y="{:.1f}" font-family="sans-serif" font-size="11" text-anchor="end">{:.3g}</text>)",
                  L - 6, py(yv) + 4, yv)
           << '\n';
    }
    os << fmt::format(
              R"(<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>)",
              (L + W - R) / 2, H - 10, x_label)
       << '\n';
    int legend = 0;
    for (const auto& s : series) {
        const std::size_t n = s.x.size();
        const std::size_t step = std::max<std::size_t>(1, n / max_points);
        os << fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="1.2" points=")",
                          s.color);
        for (std::size_t i = 0; i < n; i += step) os << fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
        if (n > 0) os << fmt::format("{:.2f},{:.2f}", px(s.x[n - 1]), py(s.y[n - 1]));
        os << "\"/>\n";
        os << fmt::format(
                  R"(<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{}">{}</text>)",
                  W - R - 120, T + 18 + 16 * legend++, s.color, s.label)
           << '\n';
    }
    os << "</svg>\n";
}

}  // namespace crawler::harness
