#pragma once

#include <algorithm>
#include <utility>

#include "kinuq/errors.hpp"
#include "kinuq/phase_space.hpp"
#include "kinuq/scenarios.hpp"
#include "kinuq/transport.hpp"

// Low-fidelity solver: compressible Euler in kinetic form. The conserved
// moments are marched with the same upwind MUSCL moment fluxes as the kinetic
// solver's pre-update, evaluated on the Maxwellian of the current state over a
// coarse velocity lattice. One step is exactly macro_preupdate applied to
// f = M(W^n).

namespace kinuq {

struct FluidState {
    MacroField w;
    PhaseGrid grid;  // coarse velocity lattice used for the flux quadrature
};

inline FluidState fluid_step(const FluidState& state, double dt) {
    if (!(dt > 0.0)) throw ConfigError("fluid_step: dt must be positive");
    if (!(dt * state.grid.l_v / state.grid.dx < 1.0))
        throw ConfigError("fluid_step: CFL guard dt*L_v/dx < 1 violated");
    DistributionField m(state.grid, state.w.time);
    std::vector<double> scratch;
    for (int c = 0; c < state.w.n_x; ++c)
        maxwellian_cell(state.grid, state.w.rho[c], state.w.u1(c), state.w.u2(c),
                        state.w.temperature(c), m.cell(c), scratch);
    MacroField w1 = macro_preupdate(m, state.w, dt);
    w1.validate("fluid_step");
    return FluidState{std::move(w1), state.grid};
}

inline MacroField run_low_fidelity(const ScenarioConfig& cfg, const ParameterSample& s) {
    FluidState state{initial_macro(cfg, s), cfg.low_grid()};
    state.w.validate("run_low_fidelity: initial data");
    double t = 0.0;
    while (t < cfg.t_final && cfg.t_final - t > 1e-9 * cfg.dt) {
        const double h = std::min(cfg.dt, cfg.t_final - t);
        state = fluid_step(state, h);
        t += h;
    }
    MacroField out = std::move(state.w);
    out.time = cfg.t_final;
    return out;
}

}  // namespace kinuq
