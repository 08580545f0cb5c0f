// Nondimensionalization: characteristic scales, dimensionless groups and
// state rescaling.
#pragma once

#include <cmath>
#include <stdexcept>

#include "crawler/model.hpp"

namespace crawler {

/// Characteristic scales of the closed loop.
///
/// Length and mass come from the segment, time is the inverse undamped
/// strain natural frequency and the voltage scale is chosen so that the
/// cubic conductance group equals kappa^2.
struct CharacteristicScales {
    double l_star = 0.0;  ///< [m]
    double m_star = 0.0;  ///< [kg]
    double t_star = 0.0;  ///< [s]
    double V_star = 0.0;  ///< [V]
    double kappa = 100.0;

    /// Speed scale l*/t* [m/s].
    double v_star() const { return l_star / t_star; }
};

inline constexpr double kDefaultKappa = 100.0;
inline constexpr double kDefaultEpsilon = 1e-4;

/// Gauge-fixing quantities for going from groups back to physical values.
struct ScaleAnchors {
    double m = 0.0;
    double l0 = 0.0;
    double c = 0.0;
    double k = 0.0;
    double alpha = 0.0;
};

/// Anchors consistent with the orders of magnitude of a centimetre-scale
/// crawler: t* = 0.1 s and V* = 0.1 V.
inline ScaleAnchors reference_anchors() { return {0.005, 0.1, 1e-6, 0.25, 10.0}; }

inline CharacteristicScales characteristic_scales(const DimensionalParams& p,
                                                  double kappa = kDefaultKappa) {
    p.validate();
    detail::require_positive(kappa, "kappa");
    CharacteristicScales sc;
    sc.kappa = kappa;
    sc.l_star = p.l0;
    sc.m_star = 2.0 * p.m;
    sc.t_star = std::sqrt(p.m / (2.0 * p.k));
    sc.V_star = kappa * std::sqrt(p.c / (sc.t_star * p.alpha));
    return sc;
}

inline DimensionlessGroups groups_from_dimensional(const DimensionalParams& p,
                                                   double kappa = kDefaultKappa,
                                                   double epsilon = kDefaultEpsilon) {
    const CharacteristicScales sc = characteristic_scales(p, kappa);
    DimensionlessGroups g;
    g.zeta = p.b / std::sqrt(2.0 * p.m * p.k);
    g.pi_f = p.f_max / (2.0 * p.k * sc.l_star);
    g.pi_v = 0.5 * p.k_v * sc.V_star / (p.k * sc.l_star);
    g.pi_eps = sc.l_star / (sc.t_star * p.eps_f);
    g.n_f = p.n_f;
    g.pi_c = p.alpha * sc.V_star * sc.V_star * sc.t_star / p.c;
    g.pi_l = p.beta * sc.t_star / p.c;
    g.pi_s = p.gamma * sc.l_star * sc.t_star / (p.c * sc.V_star);
    g.epsilon = epsilon;
    return g;
}

/// Inverts the group definitions. The five anchors plus the voltage-scale
/// convention fix the three gauge freedoms and two free units, so the result
/// is unique. Throws std::invalid_argument when pi_c differs from kappa^2
/// (relative 1e-12) or an anchor is not positive.
inline DimensionalParams dimensional_from_groups(const DimensionlessGroups& g,
                                                 const ScaleAnchors& a,
                                                 double kappa = kDefaultKappa) {
    g.validate();
    detail::require_positive(a.m, "anchor m");
    detail::require_positive(a.l0, "anchor l0");
    detail::require_positive(a.c, "anchor c");
    detail::require_positive(a.k, "anchor k");
    detail::require_positive(a.alpha, "anchor alpha");
    detail::require_positive(kappa, "kappa");
    const double kappa2 = kappa * kappa;
    if (std::abs(g.pi_c - kappa2) > 1e-12 * kappa2) {
        throw std::invalid_argument(
            "pi_c must equal kappa^2 under the voltage-scale convention");
    }

    const double l_star = a.l0;
    const double t_star = std::sqrt(a.m / (2.0 * a.k));
    const double V_star = kappa * std::sqrt(a.c / (t_star * a.alpha));

    DimensionalParams p;
    p.m = a.m;
    p.l0 = a.l0;
    p.k = a.k;
    p.c = a.c;
    p.alpha = a.alpha;
    p.b = g.zeta * std::sqrt(2.0 * a.m * a.k);
    p.f_max = g.pi_f * 2.0 * a.k * l_star;
    p.k_v = 2.0 * g.pi_v * a.k * l_star / V_star;
    p.eps_f = l_star / (t_star * g.pi_eps);
    p.beta = g.pi_l * a.c / t_star;
    p.gamma = g.pi_s * a.c * V_star / (l_star * t_star);
    p.n_f = g.n_f;
    p.i_ext = 0.0;
    return p;
}

/// The order-one voltage groups eps * pi_i.
struct ScaledVoltageGroups {
    double pi_c_eps = 0.0;
    double pi_l_eps = 0.0;
    double pi_s_eps = 0.0;
};

inline ScaledVoltageGroups split_timescales(const DimensionlessGroups& g) {
    return {g.pi_c_eps(), g.pi_l_eps(), g.pi_s_eps()};
}

/// Dimensionless state plus the center-of-mass displacement u_com / l*.
struct ScaledComStrain {
    State x;
    double u_com = 0.0;
};

inline ScaledComStrain nondimensionalize_state(const ComStrainState& x,
                                               const CharacteristicScales& sc) {
    const double v_star = sc.v_star();
    return {{x.V / sc.V_star, x.du_com / v_star, x.s / sc.l_star, x.ds / v_star},
            x.u_com / sc.l_star};
}

inline ComStrainState redimensionalize_state(const State& x, double u_com,
                                             const CharacteristicScales& sc) {
    const double v_star = sc.v_star();
    return {x.V * sc.V_star, u_com * sc.l_star, x.v_com * v_star,
            x.s * sc.l_star, x.v_s * v_star};
}

inline ComStrainState redimensionalize_state(const ScaledComStrain& x,
                                             const CharacteristicScales& sc) {
    return redimensionalize_state(x.x, x.u_com, sc);
}

/// Converts a dimensional com/strain derivative (dV/dt, du_com/dt,
/// d2u_com/dt2, ds/dt, d2s/dt2) into derivatives in dimensionless time.
inline Derivative nondimensionalize_derivative(const ComStrainState& d,
                                               const CharacteristicScales& sc) {
    const double t2 = sc.t_star * sc.t_star;
    return {d.V * sc.t_star / sc.V_star, d.du_com * t2 / sc.l_star,
            d.s * sc.t_star / sc.l_star, d.ds * t2 / sc.l_star};
}

}  // namespace crawler
