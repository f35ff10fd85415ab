#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "kinuq/phase_space.hpp"

// Shared spatial machinery: second-order MUSCL reconstruction with a minmod
// slope limiter and velocity-signed upwind interface states. Both the kinetic
// transport term and the moment-system flux (used by the high- and
// low-fidelity solvers alike) are assembled from the same interface states, so
// the fluid step is exactly the macroscopic pre-update applied to a Maxwellian.

namespace kinuq {

namespace detail {

inline double minmod(double a, double b) {
    if (a > 0.0 && b > 0.0) return a < b ? a : b;
    if (a < 0.0 && b < 0.0) return a > b ? a : b;
    return 0.0;
}

}  // namespace detail

// Interface states q_{k-1/2} for one scalar line of cell averages. face must
// hold n+1 entries; face[k] sits between cells k-1 and k. The donor cell is
// chosen by the advection-speed sign; ghost cells wrap (periodic) or copy the
// edge value (zero_gradient).
inline void muscl_interfaces(std::span<const double> q, Boundary bc, bool positive,
                             std::span<double> face) {
    const int n = static_cast<int>(q.size());
    auto at = [&](int i) -> double {
        if (bc == Boundary::periodic) return q[(i % n + n) % n];
        return q[i < 0 ? 0 : (i >= n ? n - 1 : i)];
    };
    if (positive) {
        for (int k = 0; k <= n; ++k) {
            const double qm = at(k - 2), q0 = at(k - 1), qp = at(k);
            face[k] = q0 + 0.5 * detail::minmod(q0 - qm, qp - q0);
        }
    } else {
        for (int k = 0; k <= n; ++k) {
            const double qm = at(k - 1), q0 = at(k), qp = at(k + 1);
            face[k] = q0 - 0.5 * detail::minmod(q0 - qm, qp - q0);
        }
    }
}

// Discrete v1 * d/dx f per velocity node, as upwind flux differences of the
// MUSCL interface states. Output has the same layout as f.values.
inline std::vector<double> transport_term(const DistributionField& f) {
    const PhaseGrid& g = f.grid;
    const int nv = g.n_v, nx = g.n_x;
    const std::size_t vv = g.velocity_size();
    std::vector<double> out(f.values.size());
    std::vector<double> line(nx), face(nx + 1);
    for (int i = 0; i < nv; ++i) {
        const double v1 = g.v[i];
        const bool pos = v1 > 0.0;
        for (int j = 0; j < nv; ++j) {
            const std::size_t node = static_cast<std::size_t>(i) * nv + j;
            for (int c = 0; c < nx; ++c) line[c] = f.values[c * vv + node];
            muscl_interfaces(line, g.boundary, pos, face);
            for (int c = 0; c < nx; ++c)
                out[c * vv + node] = v1 * (face[c + 1] - face[c]) / g.dx;
        }
    }
    return out;
}

// W^{n+1} = w0 - dt * d/dx <v1 m f> with the kinetic upwind flux: interface
// states of f per velocity node feed midpoint-rule moment fluxes. Conservative
// by construction (telescoping interface sums). The base state w0 is passed
// explicitly: the kinetic solver hands in moments(f), the fluid solver hands
// in its carried W while f is the Maxwellian used only for fluxes (whose
// coarse-lattice moments may differ from W).
inline MacroField macro_preupdate(const DistributionField& f, const MacroField& w0,
                                  double dt) {
    const PhaseGrid& g = f.grid;
    const int nv = g.n_v, nx = g.n_x;
    const std::size_t vv = g.velocity_size();
    std::vector<double> frho(nx + 1, 0.0), fm1(nx + 1, 0.0), fm2(nx + 1, 0.0),
        fen(nx + 1, 0.0);
    std::vector<double> line(nx), face(nx + 1);
    for (int i = 0; i < nv; ++i) {
        const double v1 = g.v[i];
        const bool pos = v1 > 0.0;
        for (int j = 0; j < nv; ++j) {
            const double v2 = g.v[j];
            const double e = 0.5 * (v1 * v1 + v2 * v2);
            const std::size_t node = static_cast<std::size_t>(i) * nv + j;
            for (int c = 0; c < nx; ++c) line[c] = f.values[c * vv + node];
            muscl_interfaces(line, g.boundary, pos, face);
            for (int k = 0; k <= nx; ++k) {
                const double flux = v1 * face[k];
                frho[k] += flux;
                fm1[k] += v1 * flux;
                fm2[k] += v2 * flux;
                fen[k] += e * flux;
            }
        }
    }
    MacroField w(nx, g.dx, g.boundary, f.time + dt);
    const double s = dt / g.dx * g.weight();
    for (int c = 0; c < nx; ++c) {
        w.rho[c] = w0.rho[c] - s * (frho[c + 1] - frho[c]);
        w.m1[c] = w0.m1[c] - s * (fm1[c + 1] - fm1[c]);
        w.m2[c] = w0.m2[c] - s * (fm2[c + 1] - fm2[c]);
        w.energy[c] = w0.energy[c] - s * (fen[c + 1] - fen[c]);
    }
    return w;
}

}  // namespace kinuq
