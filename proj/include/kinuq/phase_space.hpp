#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "kinuq/errors.hpp"

// Phase-space containers: 1D periodic/zero-gradient spatial grid on [0,1]
// crossed with a uniform cell-centered 2D velocity lattice on [-L_v, L_v]^2.
// Moments use the midpoint rule with uniform weight dv^2 per node.

namespace kinuq {

enum class Boundary { periodic, zero_gradient };

struct PhaseGrid {
    int n_x = 0;
    double dx = 0.0;
    Boundary boundary = Boundary::periodic;

    int n_v = 0;
    double l_v = 0.0;
    double dv = 0.0;
    std::vector<double> v;  // 1D node coordinates, shared by both axes

    PhaseGrid() = default;

    PhaseGrid(int n_x_, Boundary boundary_, int n_v_, double l_v_)
        : n_x(n_x_), boundary(boundary_), n_v(n_v_), l_v(l_v_) {
        if (n_x <= 0 || n_v <= 0 || l_v <= 0.0)
            throw InvalidState("PhaseGrid: n_x, n_v, l_v must be positive");
        dx = 1.0 / n_x;
        dv = 2.0 * l_v / n_v;
        v.resize(n_v);
        // Cell-centered nodes; the lattice is symmetric: v[n_v-1-i] == -v[i].
        for (int i = 0; i < n_v; ++i) v[i] = -l_v + (i + 0.5) * dv;
    }

    double weight() const { return dv * dv; }
    int velocity_size() const { return n_v * n_v; }
    std::size_t size() const { return static_cast<std::size_t>(n_x) * velocity_size(); }
    double x_center(int i) const { return (i + 0.5) * dx; }

    bool same_velocity_lattice(const PhaseGrid& o) const {
        return n_v == o.n_v && l_v == o.l_v;
    }
    bool same_spatial_grid(const PhaseGrid& o) const {
        return n_x == o.n_x && boundary == o.boundary;
    }
};

inline void require_same_grid(const PhaseGrid& a, const PhaseGrid& b, const char* where) {
    if (!a.same_velocity_lattice(b) || !a.same_spatial_grid(b))
        throw GridMismatch(std::string(where) + ": grids differ");
}

// f(x_i, v) sampled on the lattice; one contiguous n_v*n_v block per cell.
struct DistributionField {
    PhaseGrid grid;
    double time = 0.0;
    std::vector<double> values;

    DistributionField() = default;
    explicit DistributionField(const PhaseGrid& g, double t = 0.0)
        : grid(g), time(t), values(g.size(), 0.0) {}

    double& at(int ix, int i1, int i2) {
        return values[(static_cast<std::size_t>(ix) * grid.n_v + i1) * grid.n_v + i2];
    }
    double at(int ix, int i1, int i2) const {
        return values[(static_cast<std::size_t>(ix) * grid.n_v + i1) * grid.n_v + i2];
    }
    std::span<double> cell(int ix) {
        return {values.data() + static_cast<std::size_t>(ix) * grid.velocity_size(),
                static_cast<std::size_t>(grid.velocity_size())};
    }
    std::span<const double> cell(int ix) const {
        return {values.data() + static_cast<std::size_t>(ix) * grid.velocity_size(),
                static_cast<std::size_t>(grid.velocity_size())};
    }
};

// Conserved macroscopic fields per cell: rho, rho*u1, rho*u2, total energy
// E = 1/2 rho |u|^2 + rho T (two velocity dimensions).
struct MacroField {
    int n_x = 0;
    double dx = 0.0;
    Boundary boundary = Boundary::periodic;
    double time = 0.0;
    std::vector<double> rho, m1, m2, energy;

    MacroField() = default;
    MacroField(int n_x_, double dx_, Boundary b, double t = 0.0)
        : n_x(n_x_), dx(dx_), boundary(b), time(t),
          rho(n_x_, 0.0), m1(n_x_, 0.0), m2(n_x_, 0.0), energy(n_x_, 0.0) {}

    double u1(int i) const { return m1[i] / rho[i]; }
    double u2(int i) const { return m2[i] / rho[i]; }
    double temperature(int i) const {
        return (energy[i] - 0.5 * (m1[i] * m1[i] + m2[i] * m2[i]) / rho[i]) / rho[i];
    }

    void validate(const char* where = "MacroField") const {
        for (int i = 0; i < n_x; ++i) {
            if (!(rho[i] > 0.0))
                throw NonPositiveDensity(std::string(where) + ": rho <= 0 in cell " +
                                         std::to_string(i));
            if (!(temperature(i) > 0.0))
                throw NonPositiveTemperature(std::string(where) + ": T <= 0 in cell " +
                                             std::to_string(i));
        }
    }
};

struct Primitives {
    std::vector<double> rho, u1, u2, T;
};

inline Primitives conserved_to_primitive(const MacroField& w) {
    Primitives p;
    p.rho.resize(w.n_x);
    p.u1.resize(w.n_x);
    p.u2.resize(w.n_x);
    p.T.resize(w.n_x);
    for (int i = 0; i < w.n_x; ++i) {
        if (!(w.rho[i] > 0.0))
            throw NonPositiveDensity("conserved_to_primitive: rho <= 0 in cell " +
                                     std::to_string(i));
        p.rho[i] = w.rho[i];
        p.u1[i] = w.u1(i);
        p.u2[i] = w.u2(i);
        p.T[i] = w.temperature(i);
        if (!(p.T[i] > 0.0))
            throw NonPositiveTemperature("conserved_to_primitive: T <= 0 in cell " +
                                         std::to_string(i));
    }
    return p;
}

inline MacroField primitive_to_conserved(const Primitives& p, double dx, Boundary boundary,
                                         double time = 0.0) {
    const int n = static_cast<int>(p.rho.size());
    MacroField w(n, dx, boundary, time);
    for (int i = 0; i < n; ++i) {
        w.rho[i] = p.rho[i];
        w.m1[i] = p.rho[i] * p.u1[i];
        w.m2[i] = p.rho[i] * p.u2[i];
        w.energy[i] =
            0.5 * p.rho[i] * (p.u1[i] * p.u1[i] + p.u2[i] * p.u2[i]) + p.rho[i] * p.T[i];
    }
    return w;
}

// Midpoint-rule moments of the distribution; throws on non-physical cells.
inline MacroField moments(const DistributionField& f) {
    const PhaseGrid& g = f.grid;
    MacroField w(g.n_x, g.dx, g.boundary, f.time);
    const double wq = g.weight();
    for (int ix = 0; ix < g.n_x; ++ix) {
        auto fc = f.cell(ix);
        double r = 0.0, mu1 = 0.0, mu2 = 0.0, e = 0.0;
        std::size_t idx = 0;
        for (int i = 0; i < g.n_v; ++i) {
            const double v1 = g.v[i];
            double row_sum = 0.0, row_m2 = 0.0, row_e2 = 0.0;
            for (int j = 0; j < g.n_v; ++j, ++idx) {
                const double fv = fc[idx];
                const double v2 = g.v[j];
                row_sum += fv;
                row_m2 += v2 * fv;
                row_e2 += v2 * v2 * fv;
            }
            r += row_sum;
            mu1 += v1 * row_sum;
            mu2 += row_m2;
            e += 0.5 * (v1 * v1 * row_sum + row_e2);
        }
        w.rho[ix] = r * wq;
        w.m1[ix] = mu1 * wq;
        w.m2[ix] = mu2 * wq;
        w.energy[ix] = e * wq;
    }
    w.validate("moments");
    return w;
}

inline double maxwellian_value(double rho, double u1, double u2, double T, double v1,
                               double v2) {
    const double d1 = v1 - u1, d2 = v2 - u2;
    return rho / (2.0 * std::numbers::pi * T) * std::exp(-(d1 * d1 + d2 * d2) / (2.0 * T));
}

// Fill one velocity block with the discrete Maxwellian of (rho, u, T).
// Separable in v1/v2, so only 2*n_v exponentials are evaluated.
inline void maxwellian_cell(const PhaseGrid& g, double rho, double u1, double u2, double T,
                            std::span<double> out, std::vector<double>& scratch) {
    if (!(rho > 0.0)) throw NonPositiveDensity("maxwellian: rho <= 0");
    if (!(T > 0.0)) throw NonPositiveTemperature("maxwellian: T <= 0");
    scratch.resize(2 * g.n_v);
    double* e1 = scratch.data();
    double* e2 = scratch.data() + g.n_v;
    const double inv2T = 1.0 / (2.0 * T);
    for (int i = 0; i < g.n_v; ++i) {
        const double d1 = g.v[i] - u1;
        const double d2 = g.v[i] - u2;
        e1[i] = std::exp(-d1 * d1 * inv2T);
        e2[i] = std::exp(-d2 * d2 * inv2T);
    }
    const double amp = rho / (2.0 * std::numbers::pi * T);
    std::size_t idx = 0;
    for (int i = 0; i < g.n_v; ++i) {
        const double a = amp * e1[i];
        for (int j = 0; j < g.n_v; ++j, ++idx) out[idx] = a * e2[j];
    }
}

inline DistributionField maxwellian(const MacroField& w, const PhaseGrid& g) {
    if (w.n_x != g.n_x) throw GridMismatch("maxwellian: spatial sizes differ");
    DistributionField f(g, w.time);
    std::vector<double> scratch;
    for (int ix = 0; ix < g.n_x; ++ix) {
        const double r = w.rho[ix];
        if (!(r > 0.0))
            throw NonPositiveDensity("maxwellian: rho <= 0 in cell " + std::to_string(ix));
        const double T = w.temperature(ix);
        if (!(T > 0.0))
            throw NonPositiveTemperature("maxwellian: T <= 0 in cell " + std::to_string(ix));
        maxwellian_cell(g, r, w.u1(ix), w.u2(ix), T, f.cell(ix), scratch);
    }
    return f;
}

}  // namespace kinuq
