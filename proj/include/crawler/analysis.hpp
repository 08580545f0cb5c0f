// Slow/fast geometry and gait analysis of closed-loop trajectories.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crawler/model.hpp"
#include "crawler/simulation.hpp"

namespace crawler {

// =============================================================================
// Slow manifold
// =============================================================================

enum class Stability { Stable, Unstable };

inline const char* to_string(Stability s) {
    return s == Stability::Stable ? "stable" : "unstable";
}

struct ManifoldRoot {
    double V = 0.0;
    Stability stability = Stability::Unstable;
    int multiplicity = 1;
};

/// Fold geometry of the cubic voltage nullcline, as positive magnitudes.
///
/// At s = +s_switch the stable upper branch merges with the unstable middle
/// branch at V = +V_minus and the only remaining stable root is -V_plus;
/// the mirror statement holds at s = -s_switch.
struct SwitchingPoints {
    double V_minus = 0.0;
    double V_plus = 0.0;
    double s_switch = 0.0;
};

/// Closed-form fold values. Depend on the voltage groups only through
/// ratios, so replacing every pi_i by eps * pi_i leaves them unchanged.
inline SwitchingPoints switching_points(const DimensionlessGroups& g) {
    const double lc = g.pi_l / g.pi_c;
    const double ls = g.pi_l / g.pi_s;
    SwitchingPoints sp;
    sp.V_minus = std::sqrt(lc / 3.0);
    sp.V_plus = 2.0 * sp.V_minus;
    sp.s_switch = 2.0 * std::sqrt(lc) * ls / (3.0 * std::sqrt(3.0));
    return sp;
}

/// Normalized-discriminant band treated as an exact tangency.
inline constexpr double kTangencyTolerance = 1e-12;

/// Real roots in V of -pi_c V^3 + pi_l V - pi_s s = 0, ascending.
///
/// Written as V^3 - p V + q = 0 with p = pi_l/pi_c > 0 and q = pi_s s/pi_c;
/// the discriminant 4p^3 - 27q^2 selects the trigonometric (three roots),
/// hyperbolic (one root) or tangency (double + simple) form. Simple roots
/// are polished by Newton steps. A root is stable iff -3 pi_c V^2 + pi_l < 0.
inline std::vector<ManifoldRoot> slow_manifold_roots(double s,
                                                     const DimensionlessGroups& g) {
    if (!std::isfinite(s)) throw std::invalid_argument("strain must be finite");
    const double p = g.pi_l / g.pi_c;
    const double q = g.pi_s * s / g.pi_c;
    const double scale = 4.0 * p * p * p;
    const double disc = scale - 27.0 * q * q;

    auto classify = [&](double V, int mult) {
        const double slope = -3.0 * g.pi_c * V * V + g.pi_l;
        return ManifoldRoot{V, slope < 0.0 ? Stability::Stable : Stability::Unstable, mult};
    };
    auto polish = [&](double V) {
        for (int it = 0; it < 2; ++it) {
            const double f = V * V * V - p * V + q;
            const double df = 3.0 * V * V - p;
            if (df == 0.0) break;
            const double Vn = V - f / df;
            const double fn = Vn * Vn * Vn - p * Vn + q;
            if (!(std::abs(fn) < std::abs(f))) break;
            V = Vn;
        }
        return V;
    };

    std::vector<ManifoldRoot> roots;
    if (std::abs(disc) <= kTangencyTolerance * scale) {
        const double dbl = 3.0 * q / (2.0 * p);
        const double simple = -3.0 * q / p;
        if (q == 0.0) {
            // p > 0 makes this unreachable except through underflow.
            roots.push_back(classify(0.0, 3));
            return roots;
        }
        roots.push_back(classify(dbl, 2));
        roots.push_back(classify(polish(simple), 1));
    } else if (disc > 0.0) {
        const double r = 2.0 * std::sqrt(p / 3.0);
        const double arg = std::clamp(-(3.0 * q / (2.0 * p)) * std::sqrt(3.0 / p), -1.0, 1.0);
        const double phi = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) {
            const double V = r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0);
            roots.push_back(classify(polish(V), 1));
        }
    } else {
        const double r = 2.0 * std::sqrt(p / 3.0);
        const double arg = (3.0 * std::abs(q) / (2.0 * p)) * std::sqrt(3.0 / p);
        const double V = -std::copysign(1.0, q) * r * std::cosh(std::acosh(arg) / 3.0);
        roots.push_back(classify(polish(V), 1));
    }
    std::sort(roots.begin(), roots.end(),
              [](const ManifoldRoot& a, const ManifoldRoot& b) { return a.V < b.V; });
    return roots;
}

/// Total real-root count including multiplicity.
inline int root_count(const std::vector<ManifoldRoot>& roots) {
    int n = 0;
    for (const auto& r : roots) n += r.multiplicity;
    return n;
}

/// Distance from the slow manifold along a trajectory,
///   r = |-pi_c V^3 + pi_l V - pi_s s| / (pi_l V_minus).
inline double manifold_residual(const State& x, const DimensionlessGroups& g) {
    const double Vm = switching_points(g).V_minus;
    return std::abs(-g.pi_c * x.V * x.V * x.V + g.pi_l * x.V - g.pi_s * x.s) /
           (g.pi_l * Vm);
}

inline std::vector<double> manifold_residual(const Trajectory& traj,
                                             const DimensionlessGroups& g) {
    std::vector<double> r(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) r[i] = manifold_residual(traj.state(i), g);
    return r;
}

// =============================================================================
// Slow/fast segmentation
// =============================================================================

enum class PhaseKind { Slow, Fast };

inline const char* to_string(PhaseKind k) { return k == PhaseKind::Slow ? "slow" : "fast"; }

struct PhaseSegment {
    PhaseKind kind = PhaseKind::Slow;
    double t_start = 0.0;
    double t_end = 0.0;
    std::size_t i_start = 0;  ///< first knot of the segment
    std::size_t i_end = 0;    ///< last knot of the segment (inclusive)
};

inline constexpr double kDefaultFastRateFactor = 100.0;

/// Time-weighted median of |V'| along the trajectory. Fast phases occupy an
/// O(eps) fraction of time, so this lands inside the slow cluster no matter
/// how densely the solver sampled the jumps.
inline double slow_voltage_rate(const Trajectory& traj, const DimensionlessGroups& g) {
    const std::size_t n = traj.size();
    std::vector<std::pair<double, double>> rw(n);  // (|V'|, weight)
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = traj.time(i == 0 ? 0 : i - 1);
        const double hi = traj.time(i + 1 == n ? n - 1 : i + 1);
        rw[i] = {std::abs(rhs_dimensionless(traj.state(i), g).V), 0.5 * (hi - lo)};
    }
    std::sort(rw.begin(), rw.end());
    double total = 0.0;
    for (const auto& [r, w] : rw) total += w;
    double acc = 0.0;
    for (const auto& [r, w] : rw) {
        acc += w;
        if (acc >= 0.5 * total) return r;
    }
    return rw.back().first;
}

/// Labels each knot fast when |V'| exceeds rate_factor times the slow
/// reference rate and merges runs into alternating segments that partition
/// the recorded span. Throws std::invalid_argument for fewer than 3 knots.
inline std::vector<PhaseSegment> segment_phases(const Trajectory& traj,
                                                const DimensionlessGroups& g,
                                                double rate_factor = kDefaultFastRateFactor) {
    const std::size_t n = traj.size();
    if (n < 3) throw std::invalid_argument("trajectory too short to classify");
    const double floor = 1e-12 * g.pi_l * switching_points(g).V_minus;
    const double threshold = rate_factor * std::max(slow_voltage_rate(traj, g), floor);

    std::vector<PhaseSegment> segs;
    for (std::size_t i = 0; i < n; ++i) {
        const bool fast = std::abs(rhs_dimensionless(traj.state(i), g).V) > threshold;
        const PhaseKind kind = fast ? PhaseKind::Fast : PhaseKind::Slow;
        if (segs.empty() || segs.back().kind != kind) {
            if (!segs.empty()) {
                segs.back().t_end = traj.time(i);
                segs.back().i_end = i - 1;
            }
            segs.push_back({kind, traj.time(i), 0.0, i, 0});
        }
    }
    segs.back().t_end = traj.time(n - 1);
    segs.back().i_end = n - 1;
    return segs;
}

/// A fast segment at the very start is the initial layer (relaxation of an
/// off-manifold initial voltage), not a switching jump.
inline bool is_initial_layer(const PhaseSegment& seg) {
    return seg.kind == PhaseKind::Fast && seg.i_start == 0;
}

/// Solver step sizes split by phase: the smallest step taken inside fast
/// segments (initial layer excluded) against the median step in slow ones.
/// Meaningful only when every accepted step was recorded.
struct StepContrast {
    double min_fast_step = 0.0;
    double median_slow_step = 0.0;
};

inline StepContrast step_contrast(const Trajectory& traj,
                                  const std::vector<PhaseSegment>& segs) {
    std::vector<double> slow;
    double min_fast = std::numeric_limits<double>::infinity();
    for (const auto& seg : segs) {
        if (is_initial_layer(seg)) continue;
        for (std::size_t i = seg.i_start; i < seg.i_end; ++i) {
            const double h = traj.time(i + 1) - traj.time(i);
            if (seg.kind == PhaseKind::Fast) {
                min_fast = std::min(min_fast, h);
            } else {
                slow.push_back(h);
            }
        }
    }
    StepContrast out;
    out.min_fast_step = min_fast;
    if (!slow.empty()) {
        auto mid = slow.begin() + static_cast<std::ptrdiff_t>(slow.size() / 2);
        std::nth_element(slow.begin(), mid, slow.end());
        out.median_slow_step = *mid;
    }
    return out;
}

// =============================================================================
// Limit cycle
// =============================================================================

class NoLimitCycle : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A localized crossing of the section s = 0.
struct SectionCrossing {
    double t = 0.0;
    int direction = 0;  ///< sign of v_s at the crossing
    State x;
    double u_com = 0.0;
};

/// Sign changes of s between knots, refined by bisection on the
/// trajectory interpolant to 1e-13 in time.
inline std::vector<SectionCrossing> section_crossings(const Trajectory& traj) {
    std::vector<SectionCrossing> out;
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        const double s0 = traj.state(i).s;
        const double s1 = traj.state(i + 1).s;
        const bool rising = s0 < 0.0 && s1 >= 0.0;
        const bool falling = s0 > 0.0 && s1 <= 0.0;
        if (!rising && !falling) continue;
        double ta = traj.time(i), tb = traj.time(i + 1);
        double sa = s0;
        while (tb - ta > 1e-13 * std::max(1.0, std::abs(tb))) {
            const double tm = 0.5 * (ta + tb);
            const double sm = traj.at(tm).first.s;
            if ((sm < 0.0) == (sa < 0.0) && sm != 0.0) {
                ta = tm;
                sa = sm;
            } else {
                tb = tm;
            }
        }
        const auto [x, u] = traj.at(tb);
        out.push_back({tb, rising ? +1 : -1, x, u});
    }
    return out;
}

struct LimitCycleOptions {
    /// Leading section crossings discarded as transient.
    int transient_crossings = 1;
    /// Largest tolerated relative spread of half-period gaps.
    double max_spread = 0.05;
    double fast_rate_factor = kDefaultFastRateFactor;
};

/// Net center-of-mass displacement over the whole record divided by its
/// duration. Defined with or without a limit cycle.
inline double net_speed(const Trajectory& traj) {
    if (traj.size() < 2 || traj.t_end() <= traj.t_begin()) return 0.0;
    return (traj.u_com(traj.size() - 1) - traj.u_com(0)) / (traj.t_end() - traj.t_begin());
}

struct LimitCycleSummary {
    double period = 0.0;
    double half_period = 0.0;     ///< mean gap between consecutive crossings
    double period_spread = 0.0;   ///< (max - min) / mean over half-period gaps
    double strain_amplitude = 0.0;
    double v_jump_start = 0.0;    ///< mean |V| entering a fast jump
    double v_jump_end = 0.0;      ///< mean |V| leaving a fast jump
    double com_advance_per_cycle = 0.0;
    double mean_speed = 0.0;
    int n_cycles_used = 0;        ///< full periods between same-direction crossings
    int n_half_cycles = 0;
    int n_jumps = 0;
    double t_window_start = 0.0;
    double t_window_end = 0.0;
};

/// Section s = 0 crossed in both directions. On a Phi-symmetric orbit
/// consecutive crossings are half a period apart, so every pair of gaps is
/// one full cycle. Requires at least three crossings after the transient.
///
/// Throws NoLimitCycle when there are too few crossings or the half-period
/// gaps spread by more than max_spread.
inline LimitCycleSummary detect_limit_cycle(const Trajectory& traj,
                                            const DimensionlessGroups& g,
                                            const LimitCycleOptions& opt = {}) {
    const auto all = section_crossings(traj);
    const auto skip = static_cast<std::size_t>(std::max(0, opt.transient_crossings));
    if (all.size() < skip + 3) {
        throw NoLimitCycle("no limit cycle: " + std::to_string(all.size()) +
                           " section crossings, need " + std::to_string(skip + 3));
    }
    const std::vector<SectionCrossing> cr(all.begin() + static_cast<std::ptrdiff_t>(skip),
                                          all.end());

    LimitCycleSummary out;
    std::vector<double> half;
    for (std::size_t i = 0; i + 1 < cr.size(); ++i) half.push_back(cr[i + 1].t - cr[i].t);
    double sum_half = 0.0;
    for (double h : half) sum_half += h;
    out.half_period = sum_half / static_cast<double>(half.size());
    const auto [hmin, hmax] = std::minmax_element(half.begin(), half.end());
    out.period_spread = (*hmax - *hmin) / out.half_period;
    out.n_half_cycles = static_cast<int>(half.size());
    if (out.period_spread > opt.max_spread) {
        throw NoLimitCycle("no limit cycle: half-period spread " +
                           std::to_string(out.period_spread) + " exceeds tolerance");
    }

    double sum_period = 0.0, sum_advance = 0.0;
    int full = 0;
    for (std::size_t i = 0; i + 2 < cr.size(); ++i) {
        sum_period += cr[i + 2].t - cr[i].t;
        sum_advance += cr[i + 2].u_com - cr[i].u_com;
        ++full;
    }
    out.period = sum_period / full;
    out.com_advance_per_cycle = sum_advance / full;
    out.mean_speed = out.com_advance_per_cycle / out.period;
    out.n_cycles_used = static_cast<int>((cr.size() - 1) / 2);
    out.t_window_start = cr.front().t;
    out.t_window_end = cr.back().t;

    const auto segs = segment_phases(traj, g, opt.fast_rate_factor);
    double amp = 0.0, start_sum = 0.0, end_sum = 0.0;
    int jumps = 0;
    for (const auto& seg : segs) {
        if (seg.t_end < out.t_window_start || seg.t_start > out.t_window_end) continue;
        if (seg.kind == PhaseKind::Fast) {
            if (is_initial_layer(seg)) continue;
            start_sum += std::abs(traj.state(seg.i_start).V);
            end_sum += std::abs(traj.state(seg.i_end).V);
            ++jumps;
        } else {
            for (std::size_t i = seg.i_start; i <= seg.i_end; ++i) {
                const double t = traj.time(i);
                if (t >= out.t_window_start && t <= out.t_window_end) {
                    amp = std::max(amp, std::abs(traj.state(i).s));
                }
            }
        }
    }
    out.strain_amplitude = amp;
    out.n_jumps = jumps;
    out.v_jump_start = jumps > 0 ? start_sum / jumps : std::numeric_limits<double>::quiet_NaN();
    out.v_jump_end = jumps > 0 ? end_sum / jumps : std::numeric_limits<double>::quiet_NaN();
    return out;
}

// =============================================================================
// Hysteresis loop
// =============================================================================

struct LoopPoint {
    double s = 0.0;
    double V = 0.0;
};

/// The last full cycle in the (s, V) plane, starting and ending at the
/// section crossing with v_s > 0. Throws NoLimitCycle when the trajectory
/// has no detectable cycle.
inline std::vector<LoopPoint> hysteresis_loop(const Trajectory& traj,
                                              const DimensionlessGroups& g,
                                              const LimitCycleOptions& opt = {}) {
    detect_limit_cycle(traj, g, opt);
    const auto cr = section_crossings(traj);
    const SectionCrossing* start = nullptr;
    const SectionCrossing* end = nullptr;
    for (std::size_t i = cr.size(); i-- > 2;) {
        if (cr[i].direction > 0 && cr[i - 2].direction > 0) {
            start = &cr[i - 2];
            end = &cr[i];
            break;
        }
    }
    if (start == nullptr) throw NoLimitCycle("no full cycle starting at a rising crossing");

    std::vector<LoopPoint> loop{{start->x.s, start->x.V}};
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double t = traj.time(i);
        if (t > start->t && t < end->t) loop.push_back({traj.state(i).s, traj.state(i).V});
    }
    loop.push_back({end->x.s, end->x.V});
    return loop;
}

/// Signed shoelace area of the closed polygon through the loop points.
inline double loop_area(const std::vector<LoopPoint>& loop) {
    double a = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const auto& p = loop[i];
        const auto& q = loop[(i + 1) % loop.size()];
        a += p.s * q.V - q.s * p.V;
    }
    return 0.5 * a;
}

namespace detail {

inline double segment_distance(LoopPoint p, LoopPoint a, LoopPoint b) {
    const double dx = b.s - a.s, dy = b.V - a.V;
    const double len2 = dx * dx + dy * dy;
    double u = len2 > 0.0 ? ((p.s - a.s) * dx + (p.V - a.V) * dy) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    const double ex = a.s + u * dx - p.s, ey = a.V + u * dy - p.V;
    return std::sqrt(ex * ex + ey * ey);
}

// Resamples a polyline to `count` points equally spaced in arc length.
inline std::vector<LoopPoint> resample(const std::vector<LoopPoint>& pts, std::size_t count) {
    std::vector<double> arc(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        arc[i] = arc[i - 1] + std::hypot(pts[i].s - pts[i - 1].s, pts[i].V - pts[i - 1].V);
    }
    std::vector<LoopPoint> out;
    out.reserve(count);
    std::size_t j = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double target = arc.back() * static_cast<double>(k) / static_cast<double>(count - 1);
        while (j + 2 < pts.size() && arc[j + 1] < target) ++j;
        const double span = arc[j + 1] - arc[j];
        const double u = span > 0.0 ? std::clamp((target - arc[j]) / span, 0.0, 1.0) : 0.0;
        out.push_back({pts[j].s + u * (pts[j + 1].s - pts[j].s),
                       pts[j].V + u * (pts[j + 1].V - pts[j].V)});
    }
    return out;
}

}  // namespace detail

/// Largest distance from a loop point to the Phi-image of the loop, with s
/// and V each normalized by their amplitude over the loop. Zero for a
/// perfectly symmetric orbit.
inline double loop_symmetry_defect(const std::vector<LoopPoint>& loop,
                                   std::size_t samples = 4000) {
    double s_amp = 0.0, V_amp = 0.0;
    for (const auto& p : loop) {
        s_amp = std::max(s_amp, std::abs(p.s));
        V_amp = std::max(V_amp, std::abs(p.V));
    }
    if (s_amp == 0.0 || V_amp == 0.0) return 0.0;
    std::vector<LoopPoint> norm;
    norm.reserve(loop.size());
    for (const auto& p : loop) norm.push_back({p.s / s_amp, p.V / V_amp});

    const auto a = detail::resample(norm, samples);
    auto b = a;
    for (auto& p : b) p = {-p.s, -p.V};

    double worst = 0.0;
    for (const auto& p : a) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double d = std::hypot(p.s - b[j].s, p.V - b[j].V);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best > 0) best_d = std::min(best_d, detail::segment_distance(p, b[best - 1], b[best]));
        if (best + 1 < b.size()) best_d = std::min(best_d, detail::segment_distance(p, b[best], b[best + 1]));
        worst = std::max(worst, best_d);
    }
    return worst;
}

}  // namespace crawler
