#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kinuq/phase_space.hpp"
#include "test_support.hpp"

using namespace kinuq;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("lattice geometry is cell-centered and symmetric", "[phase_space]") {
    PhaseGrid g(50, Boundary::periodic, 16, 8.4);
    CHECK(g.dx == Approx(0.02).margin(0));
    CHECK(g.dv == Approx(1.05).margin(0));
    CHECK(g.weight() == Approx(1.05 * 1.05).margin(0));
    CHECK(g.v[0] == -8.4 + 0.5 * 1.05);
    for (int i = 0; i < g.n_v; ++i) CHECK(g.v[g.n_v - 1 - i] == -g.v[i]);
    CHECK(g.x_center(0) == Approx(0.01).margin(0));
    CHECK(g.velocity_size() == 256);
    CHECK(g.size() == 50u * 256u);
    CHECK_THROWS_AS(PhaseGrid(0, Boundary::periodic, 16, 8.4), InvalidState);
    CHECK_THROWS_AS(PhaseGrid(10, Boundary::periodic, 16, -1.0), InvalidState);
}

TEST_CASE("distribution layout: at() addresses the cell() span", "[phase_space]") {
    PhaseGrid g(3, Boundary::periodic, 4, 2.0);
    DistributionField f(g);
    f.at(2, 1, 3) = 7.5;
    CHECK(f.cell(2)[1 * 4 + 3] == 7.5);
    CHECK(f.values[(2 * 4 + 1) * 4 + 3] == 7.5);
    const DistributionField& cf = f;
    CHECK(cf.at(2, 1, 3) == 7.5);
}

TEST_CASE("discrete Maxwellian reproduces its defining moments", "[phase_space]") {
    const double rho = 1.0, u1 = 0.2, u2 = 0.0, T = 1.0;
    std::vector<double> scratch;

    PhaseGrid g32(1, Boundary::periodic, 32, 8.4);
    DistributionField f32(g32);
    maxwellian_cell(g32, rho, u1, u2, T, f32.cell(0), scratch);
    MacroField w32 = moments(f32);
    CHECK(w32.rho[0] == Approx(rho).margin(1e-10));
    CHECK(w32.u1(0) == Approx(u1).margin(1e-10));
    CHECK(w32.u2(0) == Approx(u2).margin(1e-10));
    CHECK(w32.temperature(0) == Approx(T).margin(1e-10));
    CHECK(w32.energy[0] == Approx(0.5 * rho * u1 * u1 + rho * T).margin(1e-10));

    // The coarse production lattice carries a visible quadrature defect.
    PhaseGrid g16(1, Boundary::periodic, 16, 8.4);
    DistributionField f16(g16);
    maxwellian_cell(g16, rho, u1, u2, T, f16.cell(0), scratch);
    MacroField w16 = moments(f16);
    CHECK(w16.rho[0] == Approx(rho).margin(1e-6));
    CHECK(w16.temperature(0) == Approx(T).margin(1e-5));
}

TEST_CASE("maxwellian_cell agrees with the pointwise formula", "[phase_space]") {
    PhaseGrid g(1, Boundary::periodic, 16, 8.4);
    std::vector<double> block(g.velocity_size()), scratch;
    maxwellian_cell(g, 0.8, -0.3, 0.1, 0.9, block, scratch);
    for (int i = 0; i < g.n_v; i += 3)
        for (int j = 0; j < g.n_v; j += 5) {
            const double ref = maxwellian_value(0.8, -0.3, 0.1, 0.9, g.v[i], g.v[j]);
            CHECK(block[i * g.n_v + j] == Approx(ref).epsilon(1e-12));
        }
    CHECK_THROWS_AS(maxwellian_cell(g, -1.0, 0, 0, 1.0, block, scratch),
                    NonPositiveDensity);
    CHECK_THROWS_AS(maxwellian_cell(g, 1.0, 0, 0, 0.0, block, scratch),
                    NonPositiveTemperature);
}

TEST_CASE("validate rejects non-physical macroscopic states", "[phase_space]") {
    MacroField w(2, 0.5, Boundary::periodic);
    w.rho = {1.0, 1.0};
    w.energy = {1.0, 1.0};
    w.validate();

    w.rho[1] = 0.0;
    CHECK_THROWS_MATCHES(w.validate("here"), NonPositiveDensity,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("here: rho <= 0 in cell 1")));
    w.rho[1] = 1.0;
    w.energy[0] = 0.0;  // T = 0
    CHECK_THROWS_AS(w.validate(), NonPositiveTemperature);
    CHECK_THROWS_AS(conserved_to_primitive(w), NonPositiveTemperature);
    w.energy[0] = 1.0;
    w.rho[0] = -0.5;
    CHECK_THROWS_AS(conserved_to_primitive(w), NonPositiveDensity);
}

TEST_CASE("primitive/conserved conversion round-trips", "[phase_space]") {
    Primitives p;
    p.rho = {0.9, 1.3};
    p.u1 = {-0.4, 0.25};
    p.u2 = {0.05, -0.1};
    p.T = {0.7, 1.1};
    MacroField w = primitive_to_conserved(p, 0.5, Boundary::zero_gradient, 2.0);
    CHECK(w.time == 2.0);
    CHECK(w.boundary == Boundary::zero_gradient);
    Primitives q = conserved_to_primitive(w);
    for (int i = 0; i < 2; ++i) {
        CHECK(q.rho[i] == p.rho[i]);
        CHECK(q.u1[i] == Approx(p.u1[i]).epsilon(1e-13));
        CHECK(q.u2[i] == Approx(p.u2[i]).epsilon(1e-13));
        CHECK(q.T[i] == Approx(p.T[i]).epsilon(1e-12));
    }
}

TEST_CASE("moments rejects vacuum cells", "[phase_space]") {
    PhaseGrid g(2, Boundary::periodic, 8, 4.0);
    DistributionField f(g);  // all zero
    CHECK_THROWS_AS(moments(f), NonPositiveDensity);
}

TEST_CASE("grid compatibility guards", "[phase_space]") {
    PhaseGrid a(10, Boundary::periodic, 16, 8.4);
    PhaseGrid b(10, Boundary::periodic, 8, 8.4);
    CHECK(a.same_spatial_grid(b));
    CHECK_FALSE(a.same_velocity_lattice(b));
    CHECK_THROWS_AS(require_same_grid(a, b, "test"), GridMismatch);

    MacroField w(5, 0.2, Boundary::periodic);
    for (int i = 0; i < 5; ++i) {
        w.rho[i] = 1.0;
        w.energy[i] = 1.0;
    }
    CHECK_THROWS_AS(maxwellian(w, a), GridMismatch);
}
