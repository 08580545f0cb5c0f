// Closed-loop simulation: the dimensionless vector field augmented with the
// center-of-mass displacement, plus switching and section-crossing events.
#pragma once

#include <string_view>
#include <vector>

#include "crawler/integrate.hpp"
#include "crawler/model.hpp"

namespace crawler {

enum class EventKind { SwitchingUp, SwitchingDown, PoincareCrossing, UserDefined };

inline std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::SwitchingUp: return "switching-up";
        case EventKind::SwitchingDown: return "switching-down";
        case EventKind::PoincareCrossing: return "poincare-crossing";
        case EventKind::UserDefined: return "user-defined";
    }
    return "unknown";
}

struct Event {
    double t = 0.0;
    State x;
    double u_com = 0.0;
    EventKind kind = EventKind::UserDefined;
    int direction = 0;  ///< +1 rising, -1 falling
    double residual = 0.0;
};

/// Recorded closed-loop run. Knot i carries (t, V, v_com, s, v_s, u_com)
/// where u_com is integrated alongside the state (u_com' = v_com).
class Trajectory {
public:
    using Raw = Solution<5>;

    Trajectory() = default;
    explicit Trajectory(Raw raw) : raw_(std::move(raw)) {}

    std::size_t size() const { return raw_.t.size(); }
    double time(std::size_t i) const { return raw_.t[i]; }
    State state(std::size_t i) const {
        const auto& y = raw_.y[i];
        return {y[0], y[1], y[2], y[3]};
    }
    double u_com(std::size_t i) const { return raw_.y[i][4]; }
    const std::vector<double>& times() const { return raw_.t; }
    const StepStats& stats() const { return raw_.stats; }
    const Raw& raw() const { return raw_; }

    double t_begin() const { return raw_.t.front(); }
    double t_end() const { return raw_.t.back(); }

    /// Interpolated (state, u_com) at t within the recorded span.
    std::pair<State, double> at(double t) const {
        const auto y = dense_eval(raw_, t);
        return {{y[0], y[1], y[2], y[3]}, y[4]};
    }

private:
    Raw raw_;
};

/// Builds a Trajectory directly from samples (tests and file readers).
inline Trajectory make_trajectory(const std::vector<double>& t,
                                  const std::vector<State>& x,
                                  const std::vector<double>& u_com,
                                  const DimensionlessGroups& g) {
    Solution<5> raw;
    raw.t = t;
    for (std::size_t i = 0; i < t.size(); ++i) {
        raw.y.push_back({x[i].V, x[i].v_com, x[i].s, x[i].v_s, u_com[i]});
        const Derivative d = rhs_dimensionless(x[i], g);
        raw.dy.push_back({d.V, d.v_com, d.s, d.v_s, x[i].v_com});
    }
    return Trajectory(std::move(raw));
}

struct SimulationResult {
    Trajectory trajectory;
    std::vector<Event> events;
};

namespace detail {
inline constexpr int kSwitchingEvent = 0;
inline constexpr int kSectionEvent = 1;
}  // namespace detail

/// Integrates the closed loop from x0 over [t0, t1] with u_com(t0) = 0.
///
/// Voltage sign changes are reported as switching events (the mid-point of
/// each fast jump) and strain sign changes as section crossings.
inline SimulationResult simulate(const DimensionlessGroups& g, const State& x0,
                                 double t0, double t1,
                                 const IntegratorConfig& cfg = {}) {
    g.validate();
    if (!x0.finite()) throw std::invalid_argument("initial state must be finite");

    auto rhs = [&g](double, const Vec<5>& y) -> Vec<5> {
        const Derivative d = rhs_dimensionless({y[0], y[1], y[2], y[3]}, g);
        return {d.V, d.v_com, d.s, d.v_s, y[1]};
    };
    const std::vector<EventFunction<5>> fns = {
        {detail::kSwitchingEvent, [](double, const Vec<5>& y) { return y[0]; }},
        {detail::kSectionEvent, [](double, const Vec<5>& y) { return y[2]; }},
    };
    Solution<5> raw = integrate<5>(rhs, Vec<5>{x0.V, x0.v_com, x0.s, x0.v_s, 0.0},
                                   t0, t1, cfg, std::span<const EventFunction<5>>(fns));

    SimulationResult out;
    out.events.reserve(raw.events.size());
    for (const auto& e : raw.events) {
        Event ev;
        ev.t = e.t;
        ev.x = {e.y[0], e.y[1], e.y[2], e.y[3]};
        ev.u_com = e.y[4];
        ev.direction = e.direction;
        ev.residual = e.residual;
        if (e.id == detail::kSwitchingEvent) {
            ev.kind = e.direction > 0 ? EventKind::SwitchingUp : EventKind::SwitchingDown;
        } else {
            ev.kind = EventKind::PoincareCrossing;
        }
        out.events.push_back(ev);
    }
    out.trajectory = Trajectory(std::move(raw));
    return out;
}

}  // namespace crawler
