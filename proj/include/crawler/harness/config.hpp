// TOML run and sweep configuration.
#pragma once

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "crawler/analysis.hpp"
#include "crawler/integrate.hpp"
#include "crawler/model.hpp"
#include "crawler/scales.hpp"

namespace crawler::harness {

/// Invalid or unreadable configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ParameterSource { Groups, Dimensional };

struct RunConfig {
    ParameterSource source = ParameterSource::Groups;
    DimensionlessGroups groups = reference_groups();
    std::optional<DimensionalParams> dimensional;
    double kappa = kDefaultKappa;

    State initial = reference_initial_state();
    IntegratorConfig integrator;
    double t0 = 0.0;
    double t1 = 60.0;

    bool limit_cycle = true;
    LimitCycleOptions cycle;

    std::filesystem::path out_dir = "out";
    std::string prefix = "run";
    int trajectory_stride = 1;
    bool plots = false;

    void validate() const {
        if (!(t1 > t0)) throw ConfigError("integrator: t1 must be greater than t0");
        if (trajectory_stride < 1) throw ConfigError("output: trajectory_stride must be >= 1");
        try {
            groups.validate();
            integrator.validate();
            if (dimensional) dimensional->validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (!initial.finite()) throw ConfigError("initial_state: entries must be finite");
    }
};

struct SweepAxis {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    int count = 1;

    std::vector<double> values() const {
        std::vector<double> v;
        for (int i = 0; i < count; ++i) {
            v.push_back(count == 1 ? min : min + (max - min) * i / (count - 1));
        }
        return v;
    }
};

struct SweepSpec {
    RunConfig base;
    std::vector<SweepAxis> axes;
    int parallelism = 1;
};

inline constexpr std::string_view kGroupNames[] = {
    "zeta", "pi_f", "pi_v", "pi_eps", "n_f", "pi_c", "pi_l", "pi_s", "epsilon"};

/// Reference to the named field of a groups record; nullptr for unknown names.
inline double* group_field(DimensionlessGroups& g, std::string_view name) {
    if (name == "zeta") return &g.zeta;
    if (name == "pi_f") return &g.pi_f;
    if (name == "pi_v") return &g.pi_v;
    if (name == "pi_eps") return &g.pi_eps;
    if (name == "n_f") return &g.n_f;
    if (name == "pi_c") return &g.pi_c;
    if (name == "pi_l") return &g.pi_l;
    if (name == "pi_s") return &g.pi_s;
    if (name == "epsilon") return &g.epsilon;
    return nullptr;
}

namespace detail {

inline std::string where(const toml::node& n) {
    const auto& src = n.source();
    return "line " + std::to_string(src.begin.line);
}

class Section {
public:
    Section(const toml::table* tbl, std::string name) : tbl_(tbl), name_(std::move(name)) {}

    bool present() const { return tbl_ != nullptr; }

    void only(std::initializer_list<std::string_view> allowed) const {
        if (!tbl_) return;
        for (auto&& [key, node] : *tbl_) {
            bool ok = false;
            for (auto a : allowed) ok = ok || key.str() == a;
            if (!ok) {
                throw ConfigError(where(node) + ": unknown field '" + std::string(key.str()) +
                                  "' in [" + name_ + "]");
            }
        }
    }

    bool read(std::string_view key, double& out) const {
        const toml::node* n = find(key);
        if (!n) return false;
        if (auto v = n->value<double>()) {
            out = *v;
            return true;
        }
        throw ConfigError(where(*n) + ": field '" + name_ + "." + std::string(key) +
                          "' must be a number");
    }

    bool read(std::string_view key, long& out) const {
        const toml::node* n = find(key);
        if (!n) return false;
        if (auto v = n->as_integer()) {
            out = static_cast<long>(v->get());
            return true;
        }
        throw ConfigError(where(*n) + ": field '" + name_ + "." + std::string(key) +
                          "' must be an integer");
    }

    bool read(std::string_view key, int& out) const {
        long v = out;
        if (!read(key, v)) return false;
        out = static_cast<int>(v);
        return true;
    }

    bool read(std::string_view key, bool& out) const {
        const toml::node* n = find(key);
        if (!n) return false;
        if (auto v = n->as_boolean()) {
            out = v->get();
            return true;
        }
        throw ConfigError(where(*n) + ": field '" + name_ + "." + std::string(key) +
                          "' must be a boolean");
    }

    bool read(std::string_view key, std::string& out) const {
        const toml::node* n = find(key);
        if (!n) return false;
        if (auto v = n->as_string()) {
            out = v->get();
            return true;
        }
        throw ConfigError(where(*n) + ": field '" + name_ + "." + std::string(key) +
                          "' must be a string");
    }

    void require(std::string_view key, double& out) const {
        if (!read(key, out)) {
            throw ConfigError("missing field '" + name_ + "." + std::string(key) + "'");
        }
    }

private:
    const toml::node* find(std::string_view key) const {
        return tbl_ ? tbl_->get(key) : nullptr;
    }

    const toml::table* tbl_;
    std::string name_;
};

inline Section section(const toml::table& root, std::string_view name) {
    const toml::node* n = root.get(name);
    if (n && !n->is_table()) {
        throw ConfigError(where(*n) + ": [" + std::string(name) + "] must be a table");
    }
    return {n ? n->as_table() : nullptr, std::string(name)};
}

inline toml::table parse_toml(const std::filesystem::path& path) {
    try {
        return toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw ConfigError(path.string() + ": line " + std::to_string(e.source().begin.line) +
                          ": " + std::string(e.description()));
    }
}

}  // namespace detail

/// Reads the run sections of an already-parsed document. Unspecified values
/// fall back to the reference gait and the integrator defaults.
inline RunConfig parse_run_config(const toml::table& root,
                                  std::initializer_list<std::string_view> extra_sections = {}) {
    using detail::Section;
    for (auto&& [key, node] : root) {
        bool ok = false;
        for (auto s : {"groups", "dimensional", "scales", "initial_state", "integrator",
                       "analysis", "output"}) {
            ok = ok || key.str() == s;
        }
        for (auto s : extra_sections) ok = ok || key.str() == s;
        if (!ok) {
            throw ConfigError(detail::where(node) + ": unknown section [" +
                              std::string(key.str()) + "]");
        }
    }

    RunConfig cfg;
    const Section groups = detail::section(root, "groups");
    const Section dim = detail::section(root, "dimensional");
    const Section scales = detail::section(root, "scales");
    if (groups.present() && dim.present()) {
        throw ConfigError("exactly one of [groups] and [dimensional] may be given");
    }

    scales.only({"kappa", "epsilon"});
    double epsilon = kDefaultEpsilon;
    scales.read("kappa", cfg.kappa);
    scales.read("epsilon", epsilon);

    if (dim.present()) {
        dim.only({"m", "l0", "k", "b", "f_max", "k_v", "c", "alpha", "beta", "gamma", "eps_f",
                  "n_f", "i_ext"});
        DimensionalParams p;
        dim.require("m", p.m);
        dim.require("l0", p.l0);
        dim.require("k", p.k);
        dim.require("b", p.b);
        dim.require("f_max", p.f_max);
        dim.require("k_v", p.k_v);
        dim.require("c", p.c);
        dim.require("alpha", p.alpha);
        dim.require("beta", p.beta);
        dim.require("gamma", p.gamma);
        dim.require("eps_f", p.eps_f);
        dim.require("n_f", p.n_f);
        dim.read("i_ext", p.i_ext);
        try {
            p.validate();
            cfg.groups = groups_from_dimensional(p, cfg.kappa, epsilon);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("[dimensional]: ") + e.what());
        }
        cfg.dimensional = p;
        cfg.source = ParameterSource::Dimensional;
    } else {
        groups.only({"zeta", "pi_f", "pi_v", "pi_eps", "n_f", "pi_c", "pi_l", "pi_s"});
        for (auto name : kGroupNames) {
            if (name != "epsilon") groups.read(name, *group_field(cfg.groups, name));
        }
        cfg.groups.epsilon = epsilon;
    }

    const Section init = detail::section(root, "initial_state");
    init.only({"V", "v_com", "s", "v_s"});
    init.read("V", cfg.initial.V);
    init.read("v_com", cfg.initial.v_com);
    init.read("s", cfg.initial.s);
    init.read("v_s", cfg.initial.v_s);

    const Section integ = detail::section(root, "integrator");
    integ.only({"t0", "t1", "rel_tol", "abs_tol", "h_init", "h_min", "h_max", "max_steps",
                "record_stride"});
    integ.read("t0", cfg.t0);
    integ.read("t1", cfg.t1);
    integ.read("rel_tol", cfg.integrator.rel_tol);
    integ.read("abs_tol", cfg.integrator.abs_tol);
    integ.read("h_init", cfg.integrator.h_init);
    integ.read("h_min", cfg.integrator.h_min);
    integ.read("h_max", cfg.integrator.h_max);
    integ.read("max_steps", cfg.integrator.max_steps);
    integ.read("record_stride", cfg.integrator.record_stride);

    const Section ana = detail::section(root, "analysis");
    ana.only({"limit_cycle", "transient_crossings", "max_spread", "fast_rate_factor"});
    ana.read("limit_cycle", cfg.limit_cycle);
    ana.read("transient_crossings", cfg.cycle.transient_crossings);
    ana.read("max_spread", cfg.cycle.max_spread);
    ana.read("fast_rate_factor", cfg.cycle.fast_rate_factor);

    const Section out = detail::section(root, "output");
    out.only({"dir", "prefix", "trajectory_stride", "plots"});
    std::string dir;
    if (out.read("dir", dir)) cfg.out_dir = dir;
    out.read("prefix", cfg.prefix);
    out.read("trajectory_stride", cfg.trajectory_stride);
    out.read("plots", cfg.plots);

    cfg.validate();
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    const toml::table root = detail::parse_toml(path);
    try {
        return parse_run_config(root);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// Sweep file: a [sweep] table with `parallelism` and optionally `base`
/// (a run config path relative to the sweep file), one or two [[sweep.axis]]
/// entries, and any run sections inline when no base file is named.
inline SweepSpec load_sweep_spec(const std::filesystem::path& path) {
    const toml::table root = detail::parse_toml(path);
    try {
        SweepSpec spec;
        const toml::node* sweep_node = root.get("sweep");
        if (!sweep_node || !sweep_node->is_table()) throw ConfigError("missing [sweep] table");
        const toml::table& sweep = *sweep_node->as_table();
        const detail::Section sec(&sweep, "sweep");
        sec.only({"base", "parallelism", "axis"});

        std::string base;
        if (sec.read("base", base)) {
            spec.base = load_run_config(path.parent_path() / base);
        } else {
            spec.base = parse_run_config(root, {"sweep"});
        }
        sec.read("parallelism", spec.parallelism);
        if (spec.parallelism < 1) throw ConfigError("sweep.parallelism must be >= 1");

        const toml::node* axes = sweep.get("axis");
        if (!axes || !axes->is_array_of_tables()) {
            throw ConfigError("[[sweep.axis]] entries are required");
        }
        for (const auto& node : *axes->as_array()) {
            const detail::Section ax(node.as_table(), "sweep.axis");
            ax.only({"name", "min", "max", "count"});
            SweepAxis a;
            if (!ax.read("name", a.name)) throw ConfigError("sweep.axis: missing name");
            DimensionlessGroups probe;
            if (!group_field(probe, a.name)) {
                throw ConfigError(detail::where(node) + ": unknown group '" + a.name + "'");
            }
            ax.require("min", a.min);
            a.max = a.min;
            ax.read("max", a.max);
            ax.read("count", a.count);
            if (a.count < 1) throw ConfigError("sweep.axis " + a.name + ": count must be >= 1");
            spec.axes.push_back(a);
        }
        if (spec.axes.empty() || spec.axes.size() > 2) {
            throw ConfigError("a sweep takes one or two axes");
        }
        return spec;
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace crawler::harness
