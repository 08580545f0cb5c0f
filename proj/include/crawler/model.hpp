// Closed-loop excitable crawler: state/parameter types and vector fields.
//
// A single soft segment (two lumped masses joined by a spring-damper) is
// driven by an actuator force proportional to the output voltage of a
// bistable cubic circuit. The circuit receives proprioceptive current
// proportional to the segment strain, which closes the loop.
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace crawler {

// =============================================================================
// Parameter and state types
// =============================================================================

/// Physical parameters in SI units.
struct DimensionalParams {
    double m = 0.0;      ///< mass of each lumped node [kg]
    double l0 = 0.0;     ///< natural segment length [m]
    double k = 0.0;      ///< elastic constant [kg/s^2]
    double b = 0.0;      ///< viscous damping [kg/s]
    double f_max = 0.0;  ///< friction amplitude [N]
    double k_v = 0.0;    ///< voltage-to-force gain [N/V]
    double c = 0.0;      ///< capacitance [F]
    double alpha = 0.0;  ///< cubic negative-conductance strength
    double beta = 0.0;   ///< linear positive-feedback strength
    double gamma = 0.0;  ///< proprioceptive gain [A/m]
    double eps_f = 0.0;  ///< friction slope scale [m/s]
    double n_f = 0.0;    ///< friction anisotropy
    double i_ext = 0.0;  ///< constant applied current [A]

    /// Throws std::invalid_argument naming the first offending field.
    void validate() const;
};

/// The eight groups that parameterize the dimensionless closed loop, plus
/// the bookkeeping timescale split.
struct DimensionlessGroups {
    double zeta = 0.0;
    double pi_f = 0.0;
    double pi_v = 0.0;
    double pi_eps = 0.0;
    double n_f = 0.0;
    double pi_c = 0.0;
    double pi_l = 0.0;
    double pi_s = 0.0;
    double epsilon = 1e-4;

    void validate() const;

    double pi_c_eps() const { return epsilon * pi_c; }
    double pi_l_eps() const { return epsilon * pi_l; }
    double pi_s_eps() const { return epsilon * pi_s; }
};

/// Groups used for the reference gait (damped segment, forward-biased
/// friction, strongly separated electrical timescale).
inline DimensionlessGroups reference_groups() {
    DimensionlessGroups g;
    g.zeta = 4.7;
    g.pi_f = 2.5;
    g.pi_v = 0.5;
    g.pi_eps = 4.7e3;
    g.n_f = 1.5;
    g.pi_c = 1e4;
    g.pi_l = 2e4;
    g.pi_s = 2e4;
    g.epsilon = 1e-4;
    return g;
}

/// Dimensionless closed-loop state, in the order (V, v_com, s, v_s).
struct State {
    double V = 0.0;
    double v_com = 0.0;
    double s = 0.0;
    double v_s = 0.0;

    bool finite() const {
        return std::isfinite(V) && std::isfinite(v_com) && std::isfinite(s) &&
               std::isfinite(v_s);
    }

    std::array<double, 4> to_array() const { return {V, v_com, s, v_s}; }
    static State from_array(const std::array<double, 4>& a) {
        return {a[0], a[1], a[2], a[3]};
    }

    friend bool operator==(const State&, const State&) = default;
};

/// Time derivative of a State; same layout, different meaning.
using Derivative = State;

/// Initial condition of the reference gait.
inline State reference_initial_state() { return {2.0, 0.0, 0.0, 0.0}; }

/// Returns a message when |s| >= 1, i.e. the segment would be compressed
/// past zero length. Not an error; the dynamics remain well defined.
inline std::optional<std::string> plausibility_warning(const State& x) {
    if (std::abs(x.s) >= 1.0) {
        return "strain magnitude " + std::to_string(x.s) +
               " exceeds the natural length";
    }
    return std::nullopt;
}

/// Dimensional state in the two-mass view.
struct TwoMassState {
    double V = 0.0;    ///< [V]
    double u1 = 0.0;   ///< tail displacement [m]
    double u2 = 0.0;   ///< head displacement [m]
    double du1 = 0.0;  ///< [m/s]
    double du2 = 0.0;  ///< [m/s]
};

/// Dimensional state in the center-of-mass / strain view.
struct ComStrainState {
    double V = 0.0;       ///< [V]
    double u_com = 0.0;   ///< [m]
    double du_com = 0.0;  ///< [m/s]
    double s = 0.0;       ///< u2 - u1 [m]
    double ds = 0.0;      ///< [m/s]
};

inline ComStrainState to_com_strain(const TwoMassState& x) {
    return {x.V, 0.5 * (x.u1 + x.u2), 0.5 * (x.du1 + x.du2), x.u2 - x.u1,
            x.du2 - x.du1};
}

inline TwoMassState to_two_mass(const ComStrainState& x) {
    return {x.V, x.u_com - 0.5 * x.s, x.u_com + 0.5 * x.s,
            x.du_com - 0.5 * x.ds, x.du_com + 0.5 * x.ds};
}

// =============================================================================
// Friction
// =============================================================================

/// Anisotropic saturating friction profile
///   sigma(y) = (tanh(y + n_f) - tanh(n_f)) / (1 + tanh(n_f)).
/// sigma(0) = 0 and sigma -> -1 as y -> -inf; the forward limit shrinks as
/// n_f grows, so backward slip costs more than forward slip.
inline double sigma_shape(double y, double n_f) {
    const double tn = std::tanh(n_f);
    return (std::tanh(y + n_f) - tn) / (1.0 + tn);
}

/// Friction profile of a node moving at v [m/s].
inline double friction_sigma_dimensional(double v, double eps_f, double n_f) {
    return sigma_shape(v / eps_f, n_f);
}

/// Friction profile in dimensionless speed. pi_eps multiplies the speed:
/// v * pi_eps = (v * l*/t*) / eps_f.
inline double friction_sigma_dimensionless(double v, double pi_eps,
                                           double n_f) {
    return sigma_shape(pi_eps * v, n_f);
}

// =============================================================================
// Vector fields
// =============================================================================

/// Dimensionless closed loop in the slow time t = t_phys / t*.
inline Derivative rhs_dimensionless(const State& x,
                                    const DimensionlessGroups& g) {
    const double tail =
        friction_sigma_dimensionless(x.v_com - 0.5 * x.v_s, g.pi_eps, g.n_f);
    const double head =
        friction_sigma_dimensionless(x.v_com + 0.5 * x.v_s, g.pi_eps, g.n_f);
    Derivative d;
    d.V = -g.pi_c * x.V * x.V * x.V + g.pi_l * x.V - g.pi_s * x.s;
    d.v_com = -0.5 * g.pi_f * (tail + head);
    d.s = x.v_s;
    d.v_s = g.pi_f * (tail - head) - x.s - 2.0 * g.zeta * x.v_s +
            2.0 * g.pi_v * x.V;
    return d;
}

/// Slow-time form with the voltage equation written as
/// eps V' = -pi_c^eps V^3 + pi_l^eps V - pi_s^eps s.
inline Derivative rhs_slow(const State& x, const DimensionlessGroups& g) {
    Derivative d = rhs_dimensionless(x, g);
    const double eps_dV = -g.pi_c_eps() * x.V * x.V * x.V +
                          g.pi_l_eps() * x.V - g.pi_s_eps() * x.s;
    d.V = eps_dV / g.epsilon;
    return d;
}

/// Fast-time form, T = t / eps. Mechanical rates carry a factor eps; the
/// voltage rate uses the eps-scaled groups directly.
inline Derivative rhs_fast(const State& x, const DimensionlessGroups& g) {
    const Derivative slow = rhs_dimensionless(x, g);
    Derivative d;
    d.V = -g.pi_c_eps() * x.V * x.V * x.V + g.pi_l_eps() * x.V -
          g.pi_s_eps() * x.s;
    d.v_com = g.epsilon * slow.v_com;
    d.s = g.epsilon * slow.s;
    d.v_s = g.epsilon * slow.v_s;
    return d;
}

/// Layer problem (eps -> 0 in fast time): only the voltage moves.
inline Derivative rhs_fast_layer(const State& x, const DimensionlessGroups& g) {
    Derivative d;
    d.V = -g.pi_c_eps() * x.V * x.V * x.V + g.pi_l_eps() * x.V -
          g.pi_s_eps() * x.s;
    return d;
}

/// Reflection (V, v_com, s, v_s) -> (-V, v_com, -s, -v_s). The closed loop
/// commutes with it for every n_f.
inline State apply_phi(const State& x) { return {-x.V, x.v_com, -x.s, -x.v_s}; }

/// Dimensional two-mass model. Derivative components follow TwoMassState:
/// (dV/dt, du1/dt, du2/dt, d2u1/dt2, d2u2/dt2).
inline TwoMassState rhs_dimensional_two_mass(const TwoMassState& x,
                                             const DimensionalParams& p) {
    const double f = p.k_v * x.V;
    const double s = x.u2 - x.u1;
    const double ds = x.du2 - x.du1;
    const double ff1 = p.f_max * friction_sigma_dimensional(x.du1, p.eps_f, p.n_f);
    const double ff2 = p.f_max * friction_sigma_dimensional(x.du2, p.eps_f, p.n_f);
    TwoMassState d;
    d.V = (-p.alpha * x.V * x.V * x.V + p.beta * x.V - p.gamma * s + p.i_ext) / p.c;
    d.u1 = x.du1;
    d.u2 = x.du2;
    d.du1 = (p.k * s + p.b * ds - ff1 - f) / p.m;
    d.du2 = (-p.k * s - p.b * ds - ff2 + f) / p.m;
    return d;
}

/// Dimensional model in center-of-mass / strain coordinates. Components:
/// (dV/dt, du_com/dt, d2u_com/dt2, ds/dt, d2s/dt2).
///
/// The center-of-mass friction enters as the SUM of both node forces, which
/// is what adding the two node equations gives.
inline ComStrainState rhs_dimensional_comstrain(const ComStrainState& x,
                                                const DimensionalParams& p) {
    const double ff_tail =
        p.f_max * friction_sigma_dimensional(x.du_com - 0.5 * x.ds, p.eps_f, p.n_f);
    const double ff_head =
        p.f_max * friction_sigma_dimensional(x.du_com + 0.5 * x.ds, p.eps_f, p.n_f);
    ComStrainState d;
    d.V = (-p.alpha * x.V * x.V * x.V + p.beta * x.V - p.gamma * x.s + p.i_ext) / p.c;
    d.u_com = x.du_com;
    d.du_com = -0.5 * (ff_tail + ff_head) / p.m;
    d.s = x.ds;
    d.ds = (ff_tail - ff_head - 2.0 * (p.k * x.s + p.b * x.ds - p.k_v * x.V)) / p.m;
    return d;
}

// =============================================================================
// Validation
// =============================================================================

namespace detail {

inline void require_positive(double v, const char* name) {
    if (!std::isfinite(v) || !(v > 0.0)) {
        throw std::invalid_argument(std::string(name) +
                                    " must be finite and strictly positive");
    }
}

inline void require_nonnegative(double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) {
        throw std::invalid_argument(std::string(name) +
                                    " must be finite and non-negative");
    }
}

}  // namespace detail

inline void DimensionalParams::validate() const {
    detail::require_positive(m, "m");
    detail::require_positive(l0, "l0");
    detail::require_positive(k, "k");
    // b = 0 is the undamped segment; everything else must be positive.
    detail::require_nonnegative(b, "b");
    detail::require_positive(f_max, "f_max");
    detail::require_positive(k_v, "k_v");
    detail::require_positive(c, "c");
    detail::require_positive(alpha, "alpha");
    detail::require_positive(beta, "beta");
    detail::require_positive(gamma, "gamma");
    detail::require_positive(eps_f, "eps_f");
    detail::require_nonnegative(n_f, "n_f");
    if (!std::isfinite(i_ext)) {
        throw std::invalid_argument("i_ext must be finite");
    }
}

inline void DimensionlessGroups::validate() const {
    detail::require_nonnegative(zeta, "zeta");
    detail::require_positive(pi_f, "pi_f");
    detail::require_positive(pi_v, "pi_v");
    detail::require_positive(pi_eps, "pi_eps");
    detail::require_nonnegative(n_f, "n_f");
    detail::require_positive(pi_c, "pi_c");
    detail::require_positive(pi_l, "pi_l");
    detail::require_positive(pi_s, "pi_s");
    if (!std::isfinite(epsilon) || !(epsilon > 0.0) || !(epsilon < 1.0)) {
        throw std::invalid_argument("epsilon must lie in (0, 1)");
    }
}

}  // namespace crawler
