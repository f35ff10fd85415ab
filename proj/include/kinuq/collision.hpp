#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kinuq/errors.hpp"
#include "kinuq/phase_space.hpp"

// Boltzmann collision operator for variable-hard-sphere kernels
// B(|g|, cos theta) = b * |g|^lambda on a 2D velocity lattice.
//
// Two independent evaluation routes:
//  - collide_direct: O(n_v^4 * n_sigma) quadrature over collision pairs with
//    bilinear interpolation at post-collision velocities. Slow, used as a
//    cross-validation oracle only (n_v <= 32 enforced).
//  - collide_spectral: Fourier method for the support-truncated, periodized
//    operator (relative velocity truncated to |g| <= R, R = 2S,
//    S = 2 L_v / (3 + sqrt 2)). Weights reduce to radial integrals of products
//    of angular factors (Bessel-type), precomputed once per lattice into a
//    dense mode-pair table; evaluation is an O(n_modes^2) mode-coupled sum.
//    Maxwell molecules (lambda = 0) only.

namespace kinuq {

struct KernelSpec {
    double b = 1.0;       // amplitude, may depend on the random parameter
    double lambda = 0.0;  // VHS exponent; 0 = Maxwell molecules
};

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1] via Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

// (1/2pi) * integral of exp(-i x cos phi) over the circle, by an n-point
// uniform rule (n even, so the imaginary part cancels pairwise). The rule is
// exact up to the first aliased Bessel order J_n(x); the caller picks n safely
// above x.
inline double angular_j0(double x, int n) {
    double s = 0.0;
    const double step = 2.0 * std::numbers::pi / n;
    for (int k = 0; k < n; ++k) s += std::cos(x * std::cos(step * k));
    return s / n;
}

inline int effective_angle_count(double x, int base) {
    int n = std::max(base, static_cast<int>(std::ceil(x)) + 32);
    return n + (n & 1);
}

inline double bilinear(std::span<const double> f, int n_v, double l_v, double dv, double x,
                       double y) {
    // Continuous node index; nodes sit at -l_v + (i + 1/2) dv. Values outside
    // the node hull are extended by zero.
    const double tx = (x + l_v) / dv - 0.5;
    const double ty = (y + l_v) / dv - 0.5;
    const double fx = std::floor(tx), fy = std::floor(ty);
    const int i0 = static_cast<int>(fx), j0 = static_cast<int>(fy);
    const double ax = tx - fx, ay = ty - fy;
    auto val = [&](int i, int j) -> double {
        if (i < 0 || i >= n_v || j < 0 || j >= n_v) return 0.0;
        return f[static_cast<std::size_t>(i) * n_v + j];
    };
    return (1.0 - ax) * ((1.0 - ay) * val(i0, j0) + ay * val(i0, j0 + 1)) +
           ax * ((1.0 - ay) * val(i0 + 1, j0) + ay * val(i0 + 1, j0 + 1));
}

}  // namespace detail

// Direct quadrature of the collision integral at every lattice node:
//   Q(v) = sum_{v*} w (2pi/n_sigma) sum_sigma B(|g|) [f(v')f(v*') - f(v)f(v*)]
// with v', v*' on the circle through v, v* (sigma parameterization) evaluated
// by bilinear interpolation. Oracle quality only; never used in time loops.
inline std::vector<double> collide_direct(const PhaseGrid& g, std::span<const double> fv,
                                          const KernelSpec& kernel, int n_sigma = 32) {
    if (g.n_v > 32)
        throw GridTooLarge("collide_direct: n_v > 32 (direct oracle is O(n_v^4 n_sigma))");
    if (fv.size() != static_cast<std::size_t>(g.velocity_size()))
        throw BlockLayoutMismatch("collide_direct: fv size != n_v^2");
    if (!(kernel.b > 0.0)) throw InvalidState("collide_direct: kernel amplitude b <= 0");
    if (n_sigma < 8) throw InvalidState("collide_direct: n_sigma < 8");

    const int nv = g.n_v;
    std::vector<double> cs(n_sigma), sn(n_sigma);
    for (int s = 0; s < n_sigma; ++s) {
        const double phi = 2.0 * std::numbers::pi * s / n_sigma;
        cs[s] = std::cos(phi);
        sn[s] = std::sin(phi);
    }

    std::vector<double> q(fv.size(), 0.0);
    const double wq = g.weight();
    const double sigma_w = 2.0 * std::numbers::pi / n_sigma;
    const bool maxwell = kernel.lambda == 0.0;

    for (int i1 = 0; i1 < nv; ++i1)
        for (int i2 = 0; i2 < nv; ++i2) {
            const double v1 = g.v[i1], v2 = g.v[i2];
            const double fi = fv[static_cast<std::size_t>(i1) * nv + i2];
            double acc = 0.0;
            for (int j1 = 0; j1 < nv; ++j1)
                for (int j2 = 0; j2 < nv; ++j2) {
                    const double w1 = g.v[j1], w2 = g.v[j2];
                    const double fj = fv[static_cast<std::size_t>(j1) * nv + j2];
                    const double g1 = v1 - w1, g2 = v2 - w2;
                    const double gn = std::sqrt(g1 * g1 + g2 * g2);
                    const double bker = maxwell ? 1.0 : std::pow(gn, kernel.lambda);
                    const double c1 = 0.5 * (v1 + w1), c2 = 0.5 * (v2 + w2);
                    const double r = 0.5 * gn;
                    double gain = 0.0;
                    for (int s = 0; s < n_sigma; ++s) {
                        const double p1 = c1 + r * cs[s], p2 = c2 + r * sn[s];
                        const double q1 = c1 - r * cs[s], q2 = c2 - r * sn[s];
                        gain += detail::bilinear(fv, nv, g.l_v, g.dv, p1, p2) *
                                detail::bilinear(fv, nv, g.l_v, g.dv, q1, q2);
                    }
                    acc += bker * (sigma_w * gain - 2.0 * std::numbers::pi * fi * fj);
                }
            q[static_cast<std::size_t>(i1) * nv + i2] = kernel.b * wq * acc;
        }
    return q;
}

// Precomputed spectral data for one (n_v, l_v, lambda, n_sigma) combination.
// `pair_weight` holds the symmetrized gain-minus-loss weight for every mode
// pair; it is real, even, and vanishes identically on (l, -l), which makes the
// mode sum conserve mass exactly.
struct SpectralKernel {
    int n_v = 0;
    double l_v = 0.0;
    double lambda = 0.0;
    int n_sigma = 0;
    int n_radial = 0;
    double support_radius = 0.0;     // S
    double truncation_radius = 0.0;  // R = 2S
    int h = 0;                       // modes run over [-h, h]^2, h = n_v/2 - 1
    int n_modes1 = 0;                // 2h + 1 per axis
    std::vector<double> pair_weight;  // [(n_modes1^2)^2]
    std::vector<double> v;            // lattice nodes (for moments/repair)
    double dv = 0.0;
    std::vector<std::complex<double>> fwd1;  // (n_modes1 x n_v) forward 1D transform
    std::vector<std::complex<double>> inv1;  // (n_v x n_modes1) inverse 1D transform

    int n_modes2() const { return n_modes1 * n_modes1; }
};

namespace detail {

inline void build_dft_matrices(SpectralKernel& sk) {
    const int nv = sk.n_v, n1 = sk.n_modes1, h = sk.h;
    sk.fwd1.assign(static_cast<std::size_t>(n1) * nv, {});
    sk.inv1.assign(static_cast<std::size_t>(nv) * n1, {});
    for (int a = 0; a < n1; ++a) {
        const int k = a - h;
        for (int j = 0; j < nv; ++j) {
            const double phase = std::numbers::pi * k * sk.v[j] / sk.l_v;
            sk.fwd1[static_cast<std::size_t>(a) * nv + j] =
                std::polar(1.0 / nv, -phase);
            sk.inv1[static_cast<std::size_t>(j) * n1 + a] = std::polar(1.0, phase);
        }
    }
}

}  // namespace detail

inline SpectralKernel precompute_spectral(int n_v, double l_v, double lambda = 0.0,
                                          int n_sigma = 32, int n_radial = 64) {
    if (lambda != 0.0)
        throw UnsupportedExponent("precompute_spectral: only lambda = 0 is shipped");
    if (n_v < 4 || l_v <= 0.0) throw InvalidState("precompute_spectral: bad lattice");
    if (n_sigma < 2 || n_radial < 2)
        throw InvalidState("precompute_spectral: bad quadrature counts");

    SpectralKernel sk;
    sk.n_v = n_v;
    sk.l_v = l_v;
    sk.lambda = lambda;
    sk.n_sigma = n_sigma;
    sk.n_radial = n_radial;
    sk.support_radius = 2.0 * l_v / (3.0 + std::numbers::sqrt2);
    sk.truncation_radius = 2.0 * sk.support_radius;
    sk.h = n_v / 2 - 1;
    sk.n_modes1 = 2 * sk.h + 1;
    sk.dv = 2.0 * l_v / n_v;
    sk.v.resize(n_v);
    for (int i = 0; i < n_v; ++i) sk.v[i] = -l_v + (i + 0.5) * sk.dv;
    detail::build_dft_matrices(sk);

    // Radial Gauss-Legendre rule on [0, R], combined weight c_q = w_q * r_q.
    std::vector<double> gx, gw;
    detail::gauss_legendre(n_radial, gx, gw);
    const double R = sk.truncation_radius;
    std::vector<double> rq(n_radial), cq(n_radial);
    for (int q = 0; q < n_radial; ++q) {
        rq[q] = 0.5 * R * (gx[q] + 1.0);
        cq[q] = 0.5 * R * gw[q] * rq[q];
    }

    // Angular factors J(q, s) = (1/2pi) int exp(-i pi r_q sqrt(s) cos(phi)/(2 l_v)) dphi
    // tabulated over the integer squared mode norms s that actually occur:
    // s = |l+m|^2, s = |l-m|^2, and 4|m|^2, all bounded by 2 (n_v-2)^2.
    const int pmax = 2 * sk.h;  // max |component| of l+m or l-m
    const int smax = 2 * pmax * pmax;
    std::vector<char> occurs(smax + 1, 0);
    for (int p1 = 0; p1 <= pmax; ++p1)
        for (int p2 = 0; p2 <= pmax; ++p2) occurs[p1 * p1 + p2 * p2] = 1;
    std::vector<double> jt(static_cast<std::size_t>(n_radial) * (smax + 1), 0.0);
    for (int s = 0; s <= smax; ++s) {
        if (!occurs[s]) continue;
        const double root = std::sqrt(static_cast<double>(s));
        for (int q = 0; q < n_radial; ++q) {
            const double x = std::numbers::pi * rq[q] * root / (2.0 * l_v);
            jt[static_cast<std::size_t>(q) * (smax + 1) + s] =
                detail::angular_j0(x, detail::effective_angle_count(x, n_sigma));
        }
    }

    // Loss factor per mode, then the symmetrized pair table.
    const int n1 = sk.n_modes1, h = sk.h, n2 = sk.n_modes2();
    const double four_pi2 = 4.0 * std::numbers::pi * std::numbers::pi;
    std::vector<double> loss(n2, 0.0);
    for (int a1 = 0; a1 < n1; ++a1)
        for (int a2 = 0; a2 < n1; ++a2) {
            const int k1 = a1 - h, k2 = a2 - h;
            const int s = 4 * (k1 * k1 + k2 * k2);
            double acc = 0.0;
            for (int q = 0; q < n_radial; ++q)
                acc += cq[q] * jt[static_cast<std::size_t>(q) * (smax + 1) + s];
            loss[static_cast<std::size_t>(a1) * n1 + a2] = four_pi2 * acc;
        }

    sk.pair_weight.assign(static_cast<std::size_t>(n2) * n2, 0.0);
    for (int a1 = 0; a1 < n1; ++a1)
        for (int a2 = 0; a2 < n1; ++a2) {
            const int l1 = a1 - h, l2 = a2 - h;
            const std::size_t li = static_cast<std::size_t>(a1) * n1 + a2;
            double* row = sk.pair_weight.data() + li * n2;
            for (int b1 = 0; b1 < n1; ++b1)
                for (int b2 = 0; b2 < n1; ++b2) {
                    const int m1 = b1 - h, m2 = b2 - h;
                    const std::size_t mi = static_cast<std::size_t>(b1) * n1 + b2;
                    const int sp = (l1 + m1) * (l1 + m1) + (l2 + m2) * (l2 + m2);
                    const int sm = (l1 - m1) * (l1 - m1) + (l2 - m2) * (l2 - m2);
                    double acc = 0.0;
                    for (int q = 0; q < n_radial; ++q) {
                        const double* jrow = jt.data() + static_cast<std::size_t>(q) * (smax + 1);
                        acc += cq[q] * jrow[sp] * jrow[sm];
                    }
                    row[mi] = four_pi2 * acc - 0.5 * (loss[li] + loss[mi]);
                }
        }
    return sk;
}

struct SpectralDiagnostics {
    double max_imag = 0.0;        // largest |Im| seen in the inverse transform
    double moment_defect[4] = {0, 0, 0, 0};  // pre-repair <Q m> defects
};

struct SpectralWorkspace {
    std::vector<std::complex<double>> fhat, qhat, stage;
    std::vector<double> qraw, maxw, scratch;
};

namespace detail {

// Moments of one velocity block (no validation).
struct CellMoments {
    double rho = 0.0, m1 = 0.0, m2 = 0.0, energy = 0.0;
    double u1() const { return m1 / rho; }
    double u2() const { return m2 / rho; }
    double T() const { return (energy - 0.5 * (m1 * m1 + m2 * m2) / rho) / rho; }
};

inline CellMoments cell_moments(std::span<const double> fv, const std::vector<double>& v,
                                double weight) {
    const int nv = static_cast<int>(v.size());
    CellMoments c;
    std::size_t idx = 0;
    for (int i = 0; i < nv; ++i) {
        const double v1 = v[i];
        double rs = 0.0, m2s = 0.0, e2s = 0.0;
        for (int j = 0; j < nv; ++j, ++idx) {
            const double f = fv[idx];
            rs += f;
            m2s += v[j] * f;
            e2s += v[j] * v[j] * f;
        }
        c.rho += rs;
        c.m1 += v1 * rs;
        c.m2 += m2s;
        c.energy += 0.5 * (v1 * v1 * rs + e2s);
    }
    c.rho *= weight;
    c.m1 *= weight;
    c.m2 *= weight;
    c.energy *= weight;
    return c;
}

// Least-squares conservation repair: subtract M * (a + b.v + c |v|^2/2) so the
// corrected Q has exactly vanishing discrete collision-invariant moments.
inline void conservation_repair(const SpectralKernel& sk, std::span<const double> fv,
                                std::span<double> q, SpectralWorkspace& ws,
                                SpectralDiagnostics* diag) {
    const int nv = sk.n_v;
    const double wq = sk.dv * sk.dv;
    const CellMoments cf = cell_moments(fv, sk.v, wq);
    if (!(cf.rho > 0.0))
        throw NonPositiveDensity("collide_spectral: repair needs rho > 0");
    const double T = cf.T();
    if (!(T > 0.0))
        throw NonPositiveTemperature("collide_spectral: repair needs T > 0");

    ws.maxw.resize(static_cast<std::size_t>(nv) * nv);
    {
        // Inline discrete Maxwellian of fv's moments.
        ws.scratch.resize(2 * nv);
        double* e1 = ws.scratch.data();
        double* e2 = ws.scratch.data() + nv;
        const double u1 = cf.u1(), u2 = cf.u2(), inv2T = 1.0 / (2.0 * T);
        for (int i = 0; i < nv; ++i) {
            const double d1 = sk.v[i] - u1, d2 = sk.v[i] - u2;
            e1[i] = std::exp(-d1 * d1 * inv2T);
            e2[i] = std::exp(-d2 * d2 * inv2T);
        }
        const double amp = cf.rho / (2.0 * std::numbers::pi * T);
        std::size_t idx = 0;
        for (int i = 0; i < nv; ++i) {
            const double a = amp * e1[i];
            for (int j = 0; j < nv; ++j, ++idx) ws.maxw[idx] = a * e2[j];
        }
    }

    // Defect d_p = <Q m_p> and Gram matrix A_pq = <M m_p m_q>, m = (1, v1, v2, e).
    double d[4] = {0, 0, 0, 0};
    double A[4][4] = {};
    std::size_t idx = 0;
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nv; ++j, ++idx) {
            const double v1 = sk.v[i], v2 = sk.v[j];
            const double e = 0.5 * (v1 * v1 + v2 * v2);
            const double m[4] = {1.0, v1, v2, e};
            const double qv = q[idx], mv = ws.maxw[idx];
            for (int p = 0; p < 4; ++p) {
                d[p] += qv * m[p];
                for (int r = p; r < 4; ++r) A[p][r] += mv * m[p] * m[r];
            }
        }
    for (int p = 0; p < 4; ++p) {
        d[p] *= wq;
        for (int r = p; r < 4; ++r) {
            A[p][r] *= wq;
            A[r][p] = A[p][r];
        }
    }
    if (diag)
        for (int p = 0; p < 4; ++p) diag->moment_defect[p] = d[p];

    // 4x4 Cholesky solve A c = d.
    double L[4][4] = {};
    for (int p = 0; p < 4; ++p) {
        for (int r = 0; r <= p; ++r) {
            double s = A[p][r];
            for (int k = 0; k < r; ++k) s -= L[p][k] * L[r][k];
            if (p == r) {
                if (!(s > 0.0))
                    throw InvalidState("collide_spectral: repair Gram matrix not SPD");
                L[p][p] = std::sqrt(s);
            } else {
                L[p][r] = s / L[r][r];
            }
        }
    }
    double y[4], c[4];
    for (int p = 0; p < 4; ++p) {
        double s = d[p];
        for (int k = 0; k < p; ++k) s -= L[p][k] * y[k];
        y[p] = s / L[p][p];
    }
    for (int p = 3; p >= 0; --p) {
        double s = y[p];
        for (int k = p + 1; k < 4; ++k) s -= L[k][p] * c[k];
        c[p] = s / L[p][p];
    }

    idx = 0;
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nv; ++j, ++idx) {
            const double v1 = sk.v[i], v2 = sk.v[j];
            const double e = 0.5 * (v1 * v1 + v2 * v2);
            q[idx] -= ws.maxw[idx] * (c[0] + c[1] * v1 + c[2] * v2 + c[3] * e);
        }
}

}  // namespace detail

// Fourier evaluation of b * Q(f, f) on one velocity block. By default the
// discrete collision-invariant moments are repaired to exact zero afterwards.
inline void collide_spectral(const SpectralKernel& sk, std::span<const double> fv, double b,
                             std::span<double> q_out, SpectralWorkspace& ws,
                             bool repair = true, SpectralDiagnostics* diag = nullptr) {
    const int nv = sk.n_v, n1 = sk.n_modes1, h = sk.h, n2 = sk.n_modes2();
    if (fv.size() != static_cast<std::size_t>(nv) * nv || q_out.size() != fv.size())
        throw BlockLayoutMismatch("collide_spectral: block size != n_v^2");
    if (!(b > 0.0)) throw InvalidState("collide_spectral: kernel amplitude b <= 0");

    using cd = std::complex<double>;
    ws.stage.assign(static_cast<std::size_t>(n1) * nv, cd{});
    ws.fhat.assign(n2, cd{});
    ws.qhat.assign(n2, cd{});

    // Forward transform, rows then columns (modes [-h, h] only).
    for (int a = 0; a < n1; ++a) {
        const cd* frow = sk.fwd1.data() + static_cast<std::size_t>(a) * nv;
        for (int j2 = 0; j2 < nv; ++j2) {
            cd acc{};
            for (int j1 = 0; j1 < nv; ++j1)
                acc += frow[j1] * fv[static_cast<std::size_t>(j1) * nv + j2];
            ws.stage[static_cast<std::size_t>(a) * nv + j2] = acc;
        }
    }
    for (int a1 = 0; a1 < n1; ++a1) {
        const cd* srow = ws.stage.data() + static_cast<std::size_t>(a1) * nv;
        for (int a2 = 0; a2 < n1; ++a2) {
            const cd* frow = sk.fwd1.data() + static_cast<std::size_t>(a2) * nv;
            cd acc{};
            for (int j2 = 0; j2 < nv; ++j2) acc += frow[j2] * srow[j2];
            ws.fhat[static_cast<std::size_t>(a1) * n1 + a2] = acc;
        }
    }

    // Mode-coupled sum: qhat[l+m] += fhat_l fhat_m W(l, m), keeping l+m in range.
    for (int a1 = 0; a1 < n1; ++a1) {
        const int b1lo = std::max(0, h - a1), b1hi = std::min(n1 - 1, 3 * h - a1);
        for (int a2 = 0; a2 < n1; ++a2) {
            const cd fl = ws.fhat[static_cast<std::size_t>(a1) * n1 + a2];
            const double* wrow =
                sk.pair_weight.data() +
                (static_cast<std::size_t>(a1) * n1 + a2) * n2;
            const int b2lo = std::max(0, h - a2), b2hi = std::min(n1 - 1, 3 * h - a2);
            for (int b1 = b1lo; b1 <= b1hi; ++b1) {
                cd* qrow = ws.qhat.data() + static_cast<std::size_t>(a1 + b1 - h) * n1 +
                           (a2 + b2lo - h);
                const cd* fm = ws.fhat.data() + static_cast<std::size_t>(b1) * n1 + b2lo;
                const double* wm = wrow + static_cast<std::size_t>(b1) * n1 + b2lo;
                for (int b2 = 0; b2 <= b2hi - b2lo; ++b2)
                    qrow[b2] += wm[b2] * (fl * fm[b2]);
            }
        }
    }

    // Inverse transform; the weight table is real and even, so the result is
    // real up to round-off. Track the imaginary residue if asked.
    ws.stage.assign(static_cast<std::size_t>(n1) * nv, cd{});
    for (int a1 = 0; a1 < n1; ++a1) {
        const cd* qrow = ws.qhat.data() + static_cast<std::size_t>(a1) * n1;
        for (int j2 = 0; j2 < nv; ++j2) {
            cd acc{};
            const cd* irow = sk.inv1.data() + static_cast<std::size_t>(j2) * n1;
            for (int a2 = 0; a2 < n1; ++a2) acc += irow[a2] * qrow[a2];
            ws.stage[static_cast<std::size_t>(a1) * nv + j2] = acc;
        }
    }
    double max_imag = 0.0;
    for (int j1 = 0; j1 < nv; ++j1) {
        const cd* irow = sk.inv1.data() + static_cast<std::size_t>(j1) * n1;
        for (int j2 = 0; j2 < nv; ++j2) {
            cd acc{};
            for (int a1 = 0; a1 < n1; ++a1)
                acc += irow[a1] * ws.stage[static_cast<std::size_t>(a1) * nv + j2];
            max_imag = std::max(max_imag, std::abs(acc.imag()));
            q_out[static_cast<std::size_t>(j1) * nv + j2] = b * acc.real();
        }
    }
    if (diag) diag->max_imag = b * max_imag;

    if (repair) detail::conservation_repair(sk, fv, q_out, ws, diag);
}

inline std::vector<double> collide_spectral(const SpectralKernel& sk,
                                            std::span<const double> fv, double b,
                                            bool repair = true,
                                            SpectralDiagnostics* diag = nullptr) {
    std::vector<double> q(fv.size());
    SpectralWorkspace ws;
    collide_spectral(sk, fv, b, q, ws, repair, diag);
    return q;
}

// Penalization rate for the BGK-penalized scheme: the largest |Q/(f - M)| over
// nodes where f and M are distinguishable (relative floor on |f - M|), falling
// back to the Maxwell-molecule loss-rate proxy b * rho when f ~ M everywhere.
inline double penalty_beta(std::span<const double> fv, std::span<const double> mv,
                           std::span<const double> qv, double b, double rho,
                           double floor_rel = 1e-8) {
    if (fv.size() != mv.size() || fv.size() != qv.size())
        throw BlockLayoutMismatch("penalty_beta: block sizes differ");
    double fmax = 0.0;
    for (double f : fv) fmax = std::max(fmax, std::abs(f));
    const double floor = floor_rel * fmax;
    double beta = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < fv.size(); ++i) {
        const double dfm = std::abs(fv[i] - mv[i]);
        if (dfm > floor) {
            any = true;
            beta = std::max(beta, std::abs(qv[i]) / dfm);
        }
    }
    return any ? beta : b * rho;
}

// --- binary kernel cache -----------------------------------------------------
//
// Layout: magic, then the key scalars, then the pair-weight table. On load the
// key must match the request exactly; the table bytes are reused as-is, so a
// cache hit is bit-identical to recomputation on the machine that wrote it.

namespace detail {
inline constexpr char kernel_cache_magic[8] = {'K', 'U', 'Q', 'S', 'K', '0', '1', '\0'};
}

inline bool save_kernel_cache(const SpectralKernel& sk, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out.write(detail::kernel_cache_magic, 8);
    auto put = [&](const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    };
    const std::int32_t nv = sk.n_v, ns = sk.n_sigma, nr = sk.n_radial;
    put(&nv, 4);
    put(&sk.l_v, 8);
    put(&sk.lambda, 8);
    put(&ns, 4);
    put(&nr, 4);
    const std::uint64_t count = sk.pair_weight.size();
    put(&count, 8);
    put(sk.pair_weight.data(), count * sizeof(double));
    return static_cast<bool>(out);
}

inline std::optional<SpectralKernel> load_kernel_cache(const std::string& path, int n_v,
                                                       double l_v, double lambda,
                                                       int n_sigma, int n_radial) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, detail::kernel_cache_magic, 8) != 0) return std::nullopt;
    std::int32_t nv = 0, ns = 0, nr = 0;
    double lv = 0.0, lam = 0.0;
    in.read(reinterpret_cast<char*>(&nv), 4);
    in.read(reinterpret_cast<char*>(&lv), 8);
    in.read(reinterpret_cast<char*>(&lam), 8);
    in.read(reinterpret_cast<char*>(&ns), 4);
    in.read(reinterpret_cast<char*>(&nr), 4);
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 8);
    if (!in || nv != n_v || lv != l_v || lam != lambda || ns != n_sigma || nr != n_radial)
        return std::nullopt;

    // Rebuild the cheap derived data, then splice in the stored table.
    SpectralKernel sk;
    sk.n_v = n_v;
    sk.l_v = l_v;
    sk.lambda = lambda;
    sk.n_sigma = n_sigma;
    sk.n_radial = n_radial;
    sk.support_radius = 2.0 * l_v / (3.0 + std::numbers::sqrt2);
    sk.truncation_radius = 2.0 * sk.support_radius;
    sk.h = n_v / 2 - 1;
    sk.n_modes1 = 2 * sk.h + 1;
    sk.dv = 2.0 * l_v / n_v;
    sk.v.resize(n_v);
    for (int i = 0; i < n_v; ++i) sk.v[i] = -l_v + (i + 0.5) * sk.dv;
    detail::build_dft_matrices(sk);
    const std::uint64_t expect =
        static_cast<std::uint64_t>(sk.n_modes2()) * static_cast<std::uint64_t>(sk.n_modes2());
    if (count != expect) return std::nullopt;
    sk.pair_weight.resize(count);
    in.read(reinterpret_cast<char*>(sk.pair_weight.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) return std::nullopt;
    return sk;
}

}  // namespace kinuq
