// Built-in oracle suite run by `crawler selfcheck`.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crawler/analysis.hpp"
#include "crawler/integrate.hpp"
#include "crawler/model.hpp"
#include "crawler/scales.hpp"

namespace crawler::harness {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Relative difference of two 4-vectors, scaled by the larger norm (with a
/// unit floor so exact zeros compare absolutely).
inline double relative_gap(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    double diff = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < 4; ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    }
    return diff / scale;
}

/// Random dimensionless state covering both voltage branches and
/// saturated/unsaturated friction.
inline State random_state(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> V(-2.5, 2.5), vc(-0.5, 0.5), s(-1.0, 1.0),
        vs(-2.0, 2.0);
    return {V(rng), vc(rng), s(rng), vs(rng)};
}

inline std::vector<CheckResult> run_selfcheck() {
    std::vector<CheckResult> out;
    auto check = [&](std::string name, bool ok, std::string detail) {
        out.push_back({std::move(name), ok, std::move(detail)});
    };
    const DimensionlessGroups g = reference_groups();
    std::mt19937_64 rng(20240611);

    {
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const State x = random_state(rng);
            worst = std::max(worst, relative_gap(rhs_dimensionless(apply_phi(x), g).to_array(),
                                                 apply_phi(rhs_dimensionless(x, g)).to_array()));
        }
        check("phi-equivariance", worst <= 1e-12, fmt::format("max relative gap {:.3g}", worst));
    }
    {
        const DimensionalParams p = dimensional_from_groups(g, reference_anchors());
        const CharacteristicScales sc = characteristic_scales(p);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const ComStrainState xc = redimensionalize_state(random_state(rng), 0.3, sc);
            const ComStrainState a = rhs_dimensional_comstrain(xc, p);
            const ComStrainState b = to_com_strain(rhs_dimensional_two_mass(to_two_mass(xc), p));
            const double scale = std::max({std::abs(a.du_com), std::abs(a.ds), std::abs(b.ds), 1e-300});
            worst = std::max(worst, std::abs(a.V - b.V) / std::max(std::abs(a.V), 1e-300));
            worst = std::max(worst, std::abs(a.du_com - b.du_com) / scale);
            worst = std::max(worst, std::abs(a.ds - b.ds) / scale);
        }
        check("two-mass vs com/strain", worst <= 1e-12, fmt::format("max relative gap {:.3g}", worst));
    }
    {
        const DimensionalParams p = dimensional_from_groups(g, reference_anchors());
        const CharacteristicScales sc = characteristic_scales(p);
        const DimensionlessGroups g2 = groups_from_dimensional(p);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const State x = random_state(rng);
            const Derivative a = rhs_dimensionless(x, g2);
            const Derivative b = nondimensionalize_derivative(
                rhs_dimensional_comstrain(redimensionalize_state(x, 0.0, sc), p), sc);
            worst = std::max(worst, relative_gap(a.to_array(), b.to_array()));
        }
        check("dimensional vs dimensionless rhs", worst <= 1e-10,
              fmt::format("max relative gap {:.3g}", worst));
    }
    {
        const DimensionlessGroups back =
            groups_from_dimensional(dimensional_from_groups(g, reference_anchors()));
        double worst = 0.0;
        for (auto [a, b] : {std::pair{g.zeta, back.zeta}, {g.pi_f, back.pi_f}, {g.pi_v, back.pi_v},
                            {g.pi_eps, back.pi_eps}, {g.n_f, back.n_f}, {g.pi_c, back.pi_c},
                            {g.pi_l, back.pi_l}, {g.pi_s, back.pi_s}}) {
            worst = std::max(worst, std::abs(a - b) / std::abs(a));
        }
        check("groups round trip", worst <= 1e-12, fmt::format("max relative gap {:.3g}", worst));
    }
    {
        const SwitchingPoints sp = switching_points(g);
        const bool ok = std::abs(sp.V_minus - 0.8164966) < 1e-6 &&
                        std::abs(sp.V_plus - 1.6329932) < 1e-6 &&
                        std::abs(sp.s_switch - 0.5443311) < 1e-6;
        check("switching arithmetic", ok,
              fmt::format("V_minus {:.7f} V_plus {:.7f} s_switch {:.7f}", sp.V_minus, sp.V_plus,
                          sp.s_switch));
    }
    {
        const auto roots = slow_manifold_roots(switching_points(g).s_switch, g);
        bool ok = root_count(roots) == 3 && roots.size() == 2;
        if (ok) {
            const double Vm = switching_points(g).V_minus;
            ok = std::abs(roots[0].V + 2.0 * Vm) < 1e-8 && std::abs(roots[1].V - Vm) < 1e-8 &&
                 roots[1].multiplicity == 2;
        }
        check("fold tangency", ok, "double root at +V_minus, simple root at -V_plus");
    }
    {
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const State x = random_state(rng);
            const Derivative d = rhs_dimensionless(x, g);
            const Derivative f = rhs_fast(x, g);
            const Derivative sl = rhs_slow(x, g);
            const std::array<double, 4> scaled{g.epsilon * d.V, g.epsilon * d.v_com,
                                               g.epsilon * d.s, g.epsilon * d.v_s};
            worst = std::max(worst, relative_gap(f.to_array(), scaled));
            worst = std::max(worst, relative_gap(sl.to_array(), d.to_array()));
        }
        check("timescale forms", worst <= 1e-12, fmt::format("max relative gap {:.3g}", worst));
    }
    {
        IntegratorConfig cfg;
        cfg.h_init = 1e-3;
        cfg.h_max = 1.0;
        const double T = 2.0 * std::numbers::pi;
        auto rhs = [](double, const Vec<2>& y) { return Vec<2>{y[1], -y[0]}; };
        const auto sol = integrate<2>(rhs, Vec<2>{1.0, 0.0}, 0.0, T, cfg);
        const auto& y = sol.y.back();
        const double ret = std::hypot(y[0] - 1.0, y[1]);
        const double drift = std::abs(y[0] * y[0] + y[1] * y[1] - 1.0);
        check("harmonic oscillator period", ret < 1e-6 && drift < 1e-6,
              fmt::format("return error {:.3g}, energy drift {:.3g}", ret, drift));
    }
    {
        bool ok = sigma_shape(0.0, 1.5) == 0.0 && sigma_shape(0.0, 0.0) == 0.0;
        for (double y = -50.0; y <= 50.0; y += 0.25) {
            const double v = sigma_shape(y, 1.5);
            ok = ok && v >= -1.0 && v <= 1.0;
        }
        check("friction profile", ok, "sigma(0) = 0 and |sigma| <= 1");
    }
    return out;
}

}  // namespace crawler::harness
