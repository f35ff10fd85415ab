#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "kinuq/errors.hpp"
#include "kinuq/phase_space.hpp"
#include "kinuq/rng.hpp"

// The three experiment families: smooth double-peak data with random initial
// density/temperature fields and random kernel amplitude, a Sod shock tube
// with random kernel amplitude and left temperature, and the double-peak data
// on a spatially varying Knudsen profile.

namespace kinuq {

enum class ScenarioFamily { double_peak, sod, mixed_regime };

inline const char* family_name(ScenarioFamily f) {
    switch (f) {
        case ScenarioFamily::double_peak: return "double_peak";
        case ScenarioFamily::sod: return "sod";
        case ScenarioFamily::mixed_regime: return "mixed_regime";
    }
    return "?";
}

inline ScenarioFamily family_from_name(const std::string& s) {
    if (s == "double_peak") return ScenarioFamily::double_peak;
    if (s == "sod") return ScenarioFamily::sod;
    if (s == "mixed_regime") return ScenarioFamily::mixed_regime;
    throw ConfigError("unknown scenario family: " + s);
}

struct ParameterSample {
    std::uint64_t id = 0;
    std::vector<double> z;
};

struct ScenarioConfig {
    ScenarioFamily family = ScenarioFamily::double_peak;
    int d1 = 7;
    int n_x = 50;
    int n_v_h = 16;
    int n_v_l = 8;
    double l_v = 8.4;
    double dt = 1.5e-3;  // CFL number l_v*dt/dx = 0.63, inside the minmod TVD bound 2/3
    double t_final = 0.1;
    double eps = 1e-4;  // constant profile; mixed_regime uses the tanh profile
    int m_train = 200;
    int n_test = 100;
    std::uint64_t seed = 2024;

    // z layout: double_peak/mixed = (z^rho_1..d1, z^T_1..d1, z^b_1);
    // sod = (z^b_1..d1+1, z^T_1..d1). Both have dimension 2*d1 + 1.
    int dimension() const { return 2 * d1 + 1; }
    Boundary boundary() const {
        return family == ScenarioFamily::sod ? Boundary::zero_gradient : Boundary::periodic;
    }
    PhaseGrid high_grid() const { return PhaseGrid(n_x, boundary(), n_v_h, l_v); }
    PhaseGrid low_grid() const { return PhaseGrid(n_x, boundary(), n_v_l, l_v); }
};

// Desk-scale defaults (acceptance scale).
inline ScenarioConfig desk_config(ScenarioFamily family) {
    ScenarioConfig c;
    c.family = family;
    if (family == ScenarioFamily::sod) c.t_final = 0.15;
    return c;
}

// Full-resolution setups behind --paper-scale.
inline ScenarioConfig paper_config(ScenarioFamily family) {
    ScenarioConfig c = desk_config(family);
    c.n_x = 100;
    c.dt = 8e-4;
    c.m_train = 1000;
    c.n_test = 1000;
    if (family == ScenarioFamily::sod) {
        c.n_v_h = 24;
        c.n_v_l = 12;
    }
    return c;
}

namespace detail {

inline void check_layout(const ScenarioConfig& cfg, const ParameterSample& s) {
    if (static_cast<int>(s.z.size()) != cfg.dimension())
        throw BlockLayoutMismatch("sample " + std::to_string(s.id) + " has dimension " +
                                  std::to_string(s.z.size()) + ", scenario needs " +
                                  std::to_string(cfg.dimension()));
}

}  // namespace detail

// Initial density/temperature fields of the double-peak family.
inline double double_peak_rho0(double x, const std::vector<double>& z, int d1) {
    double s = 2.0 + std::sin(2.0 * std::numbers::pi * x);
    for (int k = 1; k <= d1; ++k)
        s += 0.2 * std::sin(2.0 * std::numbers::pi * (k + 1) * x) * z[k - 1] / (2.0 * k);
    return s / 3.0;
}

inline double double_peak_T0(double x, const std::vector<double>& z, int d1) {
    double s = 3.0 + std::cos(2.0 * std::numbers::pi * x);
    for (int k = 1; k <= d1; ++k)
        s += 0.2 * std::cos(2.0 * std::numbers::pi * (k + 1) * x) * z[d1 + k - 1] / (2.0 * k);
    return s / 4.0;
}

inline double sod_left_temperature(const std::vector<double>& z, int d1) {
    double s = 0.0;
    for (int k = 1; k <= d1; ++k) s += z[d1 + 1 + k - 1] / (2.0 * k);
    return 1.0 + 0.4 * s;
}

inline double kernel_amplitude(const ScenarioConfig& cfg, const ParameterSample& s) {
    detail::check_layout(cfg, s);
    if (cfg.family == ScenarioFamily::sod) {
        double acc = 0.0;
        for (int k = 1; k <= cfg.d1 + 1; ++k) acc += s.z[k - 1] / (2.0 * k);
        return 1.0 + 0.5 * acc;
    }
    return 1.0 + 0.5 * s.z[2 * cfg.d1];
}

inline DistributionField initial_distribution(const ScenarioConfig& cfg,
                                              const ParameterSample& s, const PhaseGrid& g) {
    detail::check_layout(cfg, s);
    DistributionField f(g, 0.0);
    if (cfg.family == ScenarioFamily::sod) {
        std::vector<double> scratch;
        const double tl = sod_left_temperature(s.z, cfg.d1);
        for (int c = 0; c < g.n_x; ++c) {
            const bool left = g.x_center(c) <= 0.5;
            maxwellian_cell(g, left ? 1.0 : 0.125, 0.0, 0.0, left ? tl : tl / 8.0,
                            f.cell(c), scratch);
        }
        return f;
    }
    // double peak: two counter-propagating Maxwellian humps at +-u0
    const double u0 = 0.2;
    for (int c = 0; c < g.n_x; ++c) {
        const double x = g.x_center(c);
        const double rho = double_peak_rho0(x, s.z, cfg.d1);
        const double t0 = double_peak_T0(x, s.z, cfg.d1);
        const double pref = rho / (4.0 * std::numbers::pi * t0);
        auto fc = f.cell(c);
        std::size_t idx = 0;
        for (int i = 0; i < g.n_v; ++i) {
            const double v1 = g.v[i];
            const double em1 = (v1 - u0) * (v1 - u0);
            const double ep1 = (v1 + u0) * (v1 + u0);
            for (int j = 0; j < g.n_v; ++j, ++idx) {
                const double v2s = g.v[j] * g.v[j];
                fc[idx] = pref * (std::exp(-(em1 + v2s) / (2.0 * t0)) +
                                  std::exp(-(ep1 + v2s) / (2.0 * t0)));
            }
        }
    }
    return f;
}

// Exact moments of the initial data; the starting state of the fluid model.
inline MacroField initial_macro(const ScenarioConfig& cfg, const ParameterSample& s) {
    detail::check_layout(cfg, s);
    const double dx = 1.0 / cfg.n_x;
    MacroField w(cfg.n_x, dx, cfg.boundary(), 0.0);
    if (cfg.family == ScenarioFamily::sod) {
        const double tl = sod_left_temperature(s.z, cfg.d1);
        for (int c = 0; c < cfg.n_x; ++c) {
            const bool left = (c + 0.5) * dx <= 0.5;
            const double rho = left ? 1.0 : 0.125;
            const double t = left ? tl : tl / 8.0;
            w.rho[c] = rho;
            w.energy[c] = rho * t;
        }
        return w;
    }
    const double u0 = 0.2;
    for (int c = 0; c < cfg.n_x; ++c) {
        const double x = (c + 0.5) * dx;
        const double rho = double_peak_rho0(x, s.z, cfg.d1);
        const double t0 = double_peak_T0(x, s.z, cfg.d1);
        w.rho[c] = rho;
        // the +-u0 humps cancel in momentum and add u0^2/2 to the temperature
        w.energy[c] = rho * (t0 + 0.5 * u0 * u0);
    }
    return w;
}

inline std::vector<double> epsilon_profile(const ScenarioConfig& cfg) {
    std::vector<double> eps(cfg.n_x);
    const double dx = 1.0 / cfg.n_x;
    for (int c = 0; c < cfg.n_x; ++c) {
        if (cfg.family == ScenarioFamily::mixed_regime) {
            const double x = (c + 0.5) * dx;
            eps[c] = 1e-3 + 0.5 * (std::tanh(1.0 - 5.5 * (x - 0.5)) +
                                   std::tanh(1.0 + 5.5 * (x - 0.5)));
        } else {
            eps[c] = cfg.eps;
        }
    }
    return eps;
}

inline std::vector<ParameterSample> draw_samples(int dimension, int count,
                                                 std::uint64_t seed, SampleStream stream) {
    std::vector<ParameterSample> out(count);
    for (int i = 0; i < count; ++i) {
        out[i].id = static_cast<std::uint64_t>(i);
        out[i].z.resize(dimension);
        for (int c = 0; c < dimension; ++c)
            out[i].z[c] = counter_uniform(seed, stream, i, static_cast<std::uint64_t>(c));
    }
    return out;
}

}  // namespace kinuq
