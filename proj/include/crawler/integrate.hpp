// Adaptive Dormand-Prince 5(4) integration with PI step control, native
// dense output and event localization.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crawler {

template <std::size_t N>
using Vec = std::array<double, N>;

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double h_init = 1e-6;
    double h_min = 1e-14;
    double h_max = 0.1;
    long max_steps = 20'000'000;
    int record_stride = 1;
    /// Keep the continuous extension of every step (memory heavy on long
    /// stiff runs; only honoured with record_stride == 1).
    bool store_dense = false;
    /// Event localization targets.
    double event_time_tol = 1e-10;
    double event_value_tol = 1e-10;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !std::isfinite(rel_tol) ||
            !std::isfinite(abs_tol)) {
            throw std::invalid_argument("integrator tolerances must be positive");
        }
        if (!(h_min > 0.0) || !(h_min <= h_init) || !(h_init <= h_max) ||
            !std::isfinite(h_max)) {
            throw std::invalid_argument("integrator steps must satisfy 0 < h_min <= h_init <= h_max");
        }
        if (max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
        if (record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
        if (!(event_time_tol > 0.0) || !(event_value_tol > 0.0)) {
            throw std::invalid_argument("event tolerances must be positive");
        }
    }
};

class IntegrationError : public std::runtime_error {
public:
    enum class Kind { StepUnderflow, MaxSteps, NonFinite };

    IntegrationError(Kind kind, double t, double h, const std::string& what)
        : std::runtime_error(what), kind_(kind), t_(t), h_(h) {}

    Kind kind() const { return kind_; }
    double time() const { return t_; }
    double step() const { return h_; }

private:
    Kind kind_;
    double t_;
    double h_;
};

/// Direction filter for an event function.
enum class Crossing { Both, Rising, Falling };

/// A scalar function g(t, y) whose zero crossings are localized. `id` is
/// echoed into each detected event.
template <std::size_t N>
struct EventFunction {
    int id = 0;
    std::function<double(double, const Vec<N>&)> g;
    Crossing crossing = Crossing::Both;
};

template <std::size_t N>
struct RawEvent {
    int id = 0;
    int direction = 0;  ///< +1 rising, -1 falling
    double t = 0.0;
    Vec<N> y{};
    double residual = 0.0;  ///< |g(t, y)| at the localized time
};

/// Continuous extension of a single accepted step.
template <std::size_t N>
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    std::array<Vec<N>, 5> c{};

    Vec<N> operator()(double t) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        Vec<N> y;
        for (std::size_t i = 0; i < N; ++i) {
            y[i] = c[0][i] +
                   th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
        }
        return y;
    }
};

struct StepStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
    double min_step = std::numeric_limits<double>::infinity();
    double max_step = 0.0;
};

/// Recorded knots with derivatives, optional per-step dense output and
/// solver diagnostics.
template <std::size_t N>
struct Solution {
    std::vector<double> t;
    std::vector<Vec<N>> y;
    std::vector<Vec<N>> dy;
    std::vector<DenseStep<N>> dense;
    std::vector<RawEvent<N>> events;
    StepStats stats;
};

/// Interpolated solution at t. Uses the stored continuous extension when
/// present, otherwise cubic Hermite between recorded knots. Knot times
/// return the stored state exactly.
template <std::size_t N>
Vec<N> dense_eval(const Solution<N>& sol, double t) {
    if (sol.t.empty() || t < sol.t.front() || t > sol.t.back()) {
        throw std::out_of_range("dense_eval: time outside the recorded span");
    }
    auto it = std::lower_bound(sol.t.begin(), sol.t.end(), t);
    const auto i = static_cast<std::size_t>(it - sol.t.begin());
    if (it != sol.t.end() && *it == t) return sol.y[i];

    if (!sol.dense.empty()) {
        auto st = std::upper_bound(
            sol.dense.begin(), sol.dense.end(), t,
            [](double v, const DenseStep<N>& s) { return v < s.t0; });
        return (*(st - 1))(t);
    }

    const std::size_t lo = i - 1;
    const double h = sol.t[i] - sol.t[lo];
    const double th = (t - sol.t[lo]) / h;
    const double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
    const double h10 = th * (1.0 - th) * (1.0 - th);
    const double h01 = th * th * (3.0 - 2.0 * th);
    const double h11 = th * th * (th - 1.0);
    Vec<N> y;
    for (std::size_t j = 0; j < N; ++j) {
        y[j] = h00 * sol.y[lo][j] + h10 * h * sol.dy[lo][j] + h01 * sol.y[i][j] +
               h11 * h * sol.dy[i][j];
    }
    return y;
}

namespace detail {

// Dormand-Prince 5(4) tableau, FSAL, with Hairer's dense-output weights.
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0,
                        c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                        a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                        a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                        a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0,
                        a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                        a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0,
                        e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                        e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0,
                        d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0,
                        d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0,
                        d7 = 69997945.0 / 29380423.0;

template <std::size_t N>
bool all_finite(const Vec<N>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Illinois false position on [ta, tb] with a bisection fallback whenever a
// step fails to halve the bracket.
template <std::size_t N>
RawEvent<N> localize(const EventFunction<N>& ev, const DenseStep<N>& step,
                     double ta, double ga, double tb, double gb,
                     const IntegratorConfig& cfg) {
    double best_t = std::abs(ga) < std::abs(gb) ? ta : tb;
    double best_g = std::min(std::abs(ga), std::abs(gb));
    int side = 0;
    for (int iter = 0; iter < 200; ++iter) {
        const double width = tb - ta;
        const double floor = 4.0 * std::numeric_limits<double>::epsilon() *
                             std::max(std::abs(ta), std::abs(tb));
        if ((width <= cfg.event_time_tol && best_g <= cfg.event_value_tol) ||
            width <= floor) {
            break;
        }
        double tm = (ta * gb - tb * ga) / (gb - ga);
        if (!(tm > ta && tm < tb) || iter % 3 == 2) tm = 0.5 * (ta + tb);
        const double gm = ev.g(tm, step(tm));
        if (std::abs(gm) < best_g) {
            best_g = std::abs(gm);
            best_t = tm;
        }
        if (gm == 0.0) {
            ta = tb = tm;
            break;
        }
        if ((gm < 0.0) == (ga < 0.0)) {
            ta = tm;
            ga = gm;
            if (side == -1) gb *= 0.5;
            side = -1;
        } else {
            tb = tm;
            gb = gm;
            if (side == +1) ga *= 0.5;
            side = +1;
        }
    }
    RawEvent<N> out;
    out.id = ev.id;
    out.t = best_t;
    out.y = step(best_t);
    out.residual = std::abs(ev.g(out.t, out.y));
    return out;
}

}  // namespace detail

/// Integrates y' = rhs(t, y) from t0 to t1.
///
/// Local error per step is held below abs_tol + rel_tol * |y| in the RMS
/// norm. Sign changes of each event function are bracketed over every
/// accepted step and localized on that step's continuous extension; the
/// returned events are sorted by time.
///
/// Throws IntegrationError on step underflow, exhausted step budget or a
/// non-finite right-hand side.
template <std::size_t N, class Rhs>
Solution<N> integrate(Rhs&& rhs, const Vec<N>& y0, double t0, double t1,
                      const IntegratorConfig& cfg,
                      std::span<const EventFunction<N>> events = {}) {
    using namespace detail;
    cfg.validate();
    if (!(t1 > t0)) throw std::invalid_argument("integrate: t1 must exceed t0");
    if (!all_finite(y0)) throw std::invalid_argument("integrate: non-finite initial state");

    constexpr double safe = 0.9;
    constexpr double beta = 0.04;
    constexpr double expo1 = 0.2 - beta * 0.75;
    constexpr double fac_grow = 10.0;  // max growth per step
    constexpr double fac_shrink = 0.2; // max shrink per step

    Solution<N> sol;
    const bool keep_dense = cfg.store_dense && cfg.record_stride == 1;

    auto eval = [&](double t, const Vec<N>& y) {
        Vec<N> d = rhs(t, y);
        ++sol.stats.rhs_evals;
        if (!all_finite(d)) {
            throw IntegrationError(IntegrationError::Kind::NonFinite, t, 0.0,
                                   "right-hand side returned a non-finite value at t = " +
                                       std::to_string(t));
        }
        return d;
    };

    double t = t0;
    Vec<N> y = y0;
    Vec<N> k1 = eval(t, y);
    sol.t.push_back(t);
    sol.y.push_back(y);
    sol.dy.push_back(k1);

    std::vector<double> g_prev(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) g_prev[e] = events[e].g(t, y);

    double h = std::min(cfg.h_init, t1 - t0);
    double err_old = 1e-4;
    bool last_rejected = false;
    long steps = 0;
    long since_record = 0;

    Vec<N> k2, k3, k4, k5, k6, k7, ys, y1;
    while (t < t1) {
        if (++steps > cfg.max_steps) {
            throw IntegrationError(IntegrationError::Kind::MaxSteps, t, h,
                                   "step budget exhausted at t = " + std::to_string(t));
        }
        bool final_step = false;
        if (t + h >= t1) {
            h = t1 - t;
            final_step = true;
        }

        for (std::size_t i = 0; i < N; ++i) ys[i] = y[i] + h * a21 * k1[i];
        k2 = eval(t + c2 * h, ys);
        for (std::size_t i = 0; i < N; ++i) ys[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        k3 = eval(t + c3 * h, ys);
        for (std::size_t i = 0; i < N; ++i)
            ys[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        k4 = eval(t + c4 * h, ys);
        for (std::size_t i = 0; i < N; ++i)
            ys[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        k5 = eval(t + c5 * h, ys);
        for (std::size_t i = 0; i < N; ++i)
            ys[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                a65 * k5[i]);
        k6 = eval(t + h, ys);
        for (std::size_t i = 0; i < N; ++i)
            y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                                a76 * k6[i]);
        k7 = eval(t + h, y1);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sk = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            err += (e / sk) * (e / sk);
        }
        err = std::sqrt(err / static_cast<double>(N));

        const double fac11 = std::pow(err, expo1);
        if (err <= 1.0) {
            DenseStep<N> step;
            step.t0 = t;
            step.h = h;
            for (std::size_t i = 0; i < N; ++i) {
                const double ydiff = y1[i] - y[i];
                const double bspl = h * k1[i] - ydiff;
                step.c[0][i] = y[i];
                step.c[1][i] = ydiff;
                step.c[2][i] = bspl;
                step.c[3][i] = ydiff - h * k7[i] - bspl;
                step.c[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                    d6 * k6[i] + d7 * k7[i]);
            }
            const double t_new = final_step ? t1 : t + h;

            std::size_t first_new = sol.events.size();
            for (std::size_t e = 0; e < events.size(); ++e) {
                const double g1 = events[e].g(t_new, y1);
                const double g0 = g_prev[e];
                const bool rising = g0 < 0.0 && g1 >= 0.0;
                const bool falling = g0 > 0.0 && g1 <= 0.0;
                const Crossing want = events[e].crossing;
                if ((rising && want != Crossing::Falling) ||
                    (falling && want != Crossing::Rising)) {
                    RawEvent<N> ev = localize(events[e], step, t, g0, t_new, g1, cfg);
                    ev.direction = rising ? +1 : -1;
                    sol.events.push_back(ev);
                }
                g_prev[e] = g1;
            }
            std::sort(sol.events.begin() + static_cast<std::ptrdiff_t>(first_new),
                      sol.events.end(),
                      [](const RawEvent<N>& a, const RawEvent<N>& b) { return a.t < b.t; });

            ++sol.stats.accepted;
            sol.stats.min_step = std::min(sol.stats.min_step, h);
            sol.stats.max_step = std::max(sol.stats.max_step, h);
            if (keep_dense) sol.dense.push_back(step);

            t = t_new;
            y = y1;
            k1 = k7;
            if (++since_record >= cfg.record_stride || final_step) {
                sol.t.push_back(t);
                sol.y.push_back(y);
                sol.dy.push_back(k1);
                since_record = 0;
            }
            if (final_step) break;

            double fac = fac11 / std::pow(err_old, beta);
            fac = std::clamp(fac / safe, 1.0 / fac_grow, 1.0 / fac_shrink);
            double h_new = h / fac;
            if (last_rejected) h_new = std::min(h_new, h);
            err_old = std::max(err, 1e-4);
            last_rejected = false;
            h = std::min(h_new, cfg.h_max);
        } else {
            ++sol.stats.rejected;
            h = h / std::min(1.0 / fac_shrink, fac11 / safe);
            last_rejected = true;
        }
        if (h < cfg.h_min) {
            throw IntegrationError(IntegrationError::Kind::StepUnderflow, t, h,
                                   "step size underflow (h = " + std::to_string(h) +
                                       ") at t = " + std::to_string(t) +
                                       "; the problem may be too stiff for the explicit pair");
        }
    }
    return sol;
}

}  // namespace crawler
