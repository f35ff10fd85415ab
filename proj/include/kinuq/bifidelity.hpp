#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kinuq/errors.hpp"
#include "kinuq/io.hpp"
#include "kinuq/phase_space.hpp"

// Bi-fidelity surrogate: greedy selection of important parameter points from
// cheap low-fidelity snapshots, followed by a Gramian-projected combination of
// expensive high-fidelity snapshots at those points.

namespace kinuq {

// Concatenated macroscopic snapshot [rho; u1; T] over the spatial cells. u2 is
// omitted: it is identically ~0 in every shipped scenario and would only add
// noise to the Gramian.
struct Snapshot {
    std::uint64_t id = 0;
    bool high_fidelity = false;
    std::vector<double> u;  // length 3*n_x

    static Snapshot from_field(std::uint64_t id, const MacroField& w, bool high) {
        Snapshot s;
        s.id = id;
        s.high_fidelity = high;
        s.u.resize(3 * static_cast<std::size_t>(w.n_x));
        for (int i = 0; i < w.n_x; ++i) {
            s.u[i] = w.rho[i];
            s.u[w.n_x + i] = w.u1(i);
            s.u[2 * w.n_x + i] = w.temperature(i);
        }
        return s;
    }
};

// Reshape a snapshot-space vector back into a conserved field. No positivity
// validation: linear combinations may leave the physical cone.
inline MacroField snapshot_to_field(std::span<const double> u, double dx, Boundary boundary,
                                    double time = 0.0) {
    const int n_x = static_cast<int>(u.size() / 3);
    if (u.size() != 3 * static_cast<std::size_t>(n_x))
        throw BlockLayoutMismatch("snapshot_to_field: length not divisible by 3");
    MacroField w(n_x, dx, boundary, time);
    for (int i = 0; i < n_x; ++i) {
        const double rho = u[i], u1 = u[n_x + i], T = u[2 * n_x + i];
        w.rho[i] = rho;
        w.m1[i] = rho * u1;
        w.m2[i] = 0.0;
        w.energy[i] = 0.5 * rho * u1 * u1 + rho * T;
    }
    return w;
}

inline double snapshot_dot(std::span<const double> a, std::span<const double> b, double dx) {
    if (a.size() != b.size()) throw BlockLayoutMismatch("snapshot_dot: lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return dx * s;
}

inline double snapshot_norm(std::span<const double> a, double dx) {
    return std::sqrt(snapshot_dot(a, a, dx));
}

struct SelectionResult {
    std::vector<std::uint64_t> ids;            // gamma_N, in selection order
    std::vector<std::size_t> positions;        // indices into the input collection
    std::vector<double> residuals;             // d_k, non-increasing
    std::vector<std::vector<double>> basis;    // orthonormal span of the selection
    std::vector<std::vector<double>> selected; // original low-fidelity snapshots
    bool stopped_early = false;
    double dx = 0.0;
};

// Greedy point selection: repeatedly take the candidate farthest from the
// current selected span. Residuals are maintained by modified Gram-Schmidt;
// the newly selected vector gets one extra full re-orthogonalization pass
// before it joins the basis. Stops early (recorded, or an error if the caller
// demands exactly N) once the best residual falls below 1e-12 of the largest
// snapshot norm.
inline SelectionResult greedy_select(std::span<const Snapshot> snapshots, int budget,
                                     double dx, bool require_exact = false) {
    const int m = static_cast<int>(snapshots.size());
    if (budget < 1) throw InvalidState("greedy_select: budget must be >= 1");
    if (budget > m) throw BudgetExceedsRank("greedy_select: budget exceeds snapshot count");
    const std::size_t dof = snapshots.front().u.size();
    for (const Snapshot& s : snapshots)
        if (s.u.size() != dof)
            throw BlockLayoutMismatch("greedy_select: snapshot lengths differ");

    std::vector<std::vector<double>> resid(m);
    std::vector<double> rnorm(m);
    double max_norm = 0.0;
    for (int i = 0; i < m; ++i) {
        resid[i] = snapshots[i].u;
        rnorm[i] = snapshot_norm(resid[i], dx);
        max_norm = std::max(max_norm, rnorm[i]);
    }
    const double stop_tol = 1e-12 * max_norm;

    SelectionResult sel;
    sel.dx = dx;
    for (int k = 0; k < budget; ++k) {
        int best = static_cast<int>(
            std::max_element(rnorm.begin(), rnorm.end()) - rnorm.begin());
        if (!(rnorm[best] > stop_tol)) {
            if (require_exact)
                throw BudgetExceedsRank("greedy_select: snapshot set has numerical rank " +
                                        std::to_string(k) + " < budget " +
                                        std::to_string(budget));
            sel.stopped_early = true;
            break;
        }
        // Re-orthogonalize the winner against the basis once more before
        // normalizing; MGS alone loses orthogonality as residuals shrink.
        std::vector<double> q = resid[best];
        for (const std::vector<double>& b : sel.basis) {
            const double c = snapshot_dot(q, b, dx);
            for (std::size_t t = 0; t < dof; ++t) q[t] -= c * b[t];
        }
        const double qn = snapshot_norm(q, dx);
        sel.residuals.push_back(rnorm[best]);
        sel.ids.push_back(snapshots[best].id);
        sel.positions.push_back(static_cast<std::size_t>(best));
        sel.selected.push_back(snapshots[best].u);
        for (double& t : q) t /= qn;
        for (int i = 0; i < m; ++i) {
            if (rnorm[i] == 0.0) continue;
            const double c = snapshot_dot(resid[i], q, dx);
            for (std::size_t t = 0; t < dof; ++t) resid[i][t] -= c * q[t];
            rnorm[i] = snapshot_norm(resid[i], dx);
        }
        sel.basis.push_back(std::move(q));
    }
    return sel;
}

namespace detail {

// Iterative refinement of G c = f on top of a factorization-backed solve.
// Residuals are accumulated in compensated (double-double) arithmetic: fma
// splits each product into value + rounding error and a Neumaier sum carries
// both, so the residual precision never limits convergence. For a full-rank
// system with kappa(G)*eps << 1 the coefficients then converge to round-off
// even when a single factored solve would lose ~kappa(G)*eps digits. Only
// used when the spectral truncation dropped nothing; a truncated system
// keeps pure pseudo-inverse semantics.
template <class Solve>
inline void refine_in_place(const Eigen::MatrixXd& g, const Eigen::VectorXd& f, Solve&& solve,
                            Eigen::VectorXd& c, int steps = 3) {
    const int n = static_cast<int>(g.rows());
    Eigen::VectorXd r(n);
    for (int it = 0; it < steps; ++it) {
        for (int i = 0; i < n; ++i) {
            double s = f[i], comp = 0.0;
            auto add = [&s, &comp](double x) {
                const double t = s + x;
                comp += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
                s = t;
            };
            for (int j = 0; j < n; ++j) {
                const double p = g(i, j) * c[j];
                add(-p);
                add(-std::fma(g(i, j), c[j], -p));
            }
            r[i] = s + comp;
        }
        c += solve(r);
    }
}

}  // namespace detail

struct BiFidelitySurrogate {
    SelectionResult sel;
    std::vector<std::vector<double>> high;  // high-fidelity snapshots at gamma_N
    Eigen::MatrixXd gram;                   // G^L over the selected snapshots
    Eigen::MatrixXd gram_high;              // G^H, diagnostic only
    Eigen::MatrixXd eigvecs;                // of G^L
    Eigen::VectorXd eigvals;
    int rank = 0;                 // eigenvalues kept after relative truncation
    double condition = 0.0;       // max/min kept eigenvalue
    double truncation = 1e-12;    // relative eigenvalue cutoff

    int budget() const { return static_cast<int>(sel.ids.size()); }

    // Solve G^L c = f through the truncated spectral factorization.
    Eigen::VectorXd solve(const Eigen::VectorXd& f) const {
        Eigen::VectorXd c = apply_inverse(f);
        if (rank == static_cast<int>(eigvals.size()))
            detail::refine_in_place(gram, f, [this](const Eigen::VectorXd& r) {
                return apply_inverse(r);
            }, c);
        return c;
    }

    Eigen::VectorXd apply_inverse(const Eigen::VectorXd& f) const {
        const Eigen::VectorXd y = eigvecs.transpose() * f;
        Eigen::VectorXd inv = Eigen::VectorXd::Zero(y.size());
        const int n = static_cast<int>(eigvals.size());
        for (int i = n - rank; i < n; ++i) inv[i] = y[i] / eigvals[i];
        return eigvecs * inv;
    }
};

// Build the Gramian of the selected low-fidelity snapshots and pair it with
// the high-fidelity snapshots at the same points (same ids, same order).
inline BiFidelitySurrogate assemble_surrogate(SelectionResult sel,
                                              std::span<const Snapshot> high_snaps) {
    const int n = static_cast<int>(sel.ids.size());
    if (static_cast<int>(high_snaps.size()) != n)
        throw IdMismatch("assemble_surrogate: expected " + std::to_string(n) +
                         " high-fidelity snapshots, got " + std::to_string(high_snaps.size()));
    for (int k = 0; k < n; ++k)
        if (high_snaps[k].id != sel.ids[k])
            throw IdMismatch("assemble_surrogate: high snapshot " + std::to_string(k) +
                             " has id " + std::to_string(high_snaps[k].id) + ", selection has " +
                             std::to_string(sel.ids[k]));

    BiFidelitySurrogate s;
    s.gram.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double g = snapshot_dot(sel.selected[i], sel.selected[j], sel.dx);
            s.gram(i, j) = g;
            s.gram(j, i) = g;
        }
    s.gram_high.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double g = snapshot_dot(high_snaps[i].u, high_snaps[j].u, sel.dx);
            s.gram_high(i, j) = g;
            s.gram_high(j, i) = g;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.gram);
    if (eig.info() != Eigen::Success)
        throw InvalidState("assemble_surrogate: eigendecomposition failed");
    s.eigvecs = eig.eigenvectors();
    s.eigvals = eig.eigenvalues();  // ascending
    const double lmax = s.eigvals[n - 1];
    s.rank = 0;
    for (int i = 0; i < n; ++i)
        if (s.eigvals[i] > s.truncation * lmax) ++s.rank;
    if (s.rank == 0) throw InvalidState("assemble_surrogate: Gramian is numerically zero");
    s.condition = lmax / s.eigvals[n - s.rank];
    s.high.reserve(n);
    for (const Snapshot& h : high_snaps) s.high.push_back(h.u);
    s.sel = std::move(sel);
    return s;
}

struct Reconstruction {
    MacroField field;               // bi-fidelity estimate
    std::vector<double> snapshot;   // same, in snapshot layout [rho; u1; T]
    std::vector<double> coeffs;     // c_k
    double low_residual = 0.0;      // || u^L(z) - sum c_k u^L(z_k) || confidence
};

// Online stage: one low-fidelity run at z, projection onto the selected
// low-fidelity span, and the same combination applied to the high-fidelity
// snapshots. `budget` <= trained budget evaluates the nested prefix surrogate
// without re-selection (pass 0 for the full budget).
inline Reconstruction reconstruct(const BiFidelitySurrogate& s,
                                  std::span<const double> low_snapshot, double dx,
                                  Boundary boundary, double time, int budget = 0) {
    const int full = s.budget();
    const int r = budget == 0 ? full : budget;
    if (r < 1 || r > full)
        throw BudgetExceedsRank("reconstruct: budget " + std::to_string(r) +
                                " outside trained range 1.." + std::to_string(full));
    const std::size_t dof = low_snapshot.size();
    if (dof != s.sel.selected.front().size())
        throw BlockLayoutMismatch("reconstruct: snapshot length mismatch");

    Eigen::VectorXd f(r);
    for (int k = 0; k < r; ++k)
        f[k] = snapshot_dot(low_snapshot, s.sel.selected[k], dx);

    Eigen::VectorXd c;
    if (r == full) {
        c = s.solve(f);
    } else {
        // Prefix surrogate: factorize the leading r x r Gramian block.
        Eigen::MatrixXd g = s.gram.topLeftCorner(r, r);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
        if (eig.info() != Eigen::Success)
            throw InvalidState("reconstruct: prefix eigendecomposition failed");
        const Eigen::VectorXd& ev = eig.eigenvalues();
        const double lmax = ev[r - 1];
        int kept = 0;
        auto inv = [&](const Eigen::VectorXd& rhs) {
            Eigen::VectorXd y = eig.eigenvectors().transpose() * rhs;
            for (int i = 0; i < r; ++i)
                y[i] = ev[i] > s.truncation * lmax ? y[i] / ev[i] : 0.0;
            return Eigen::VectorXd(eig.eigenvectors() * y);
        };
        for (int i = 0; i < r; ++i)
            if (ev[i] > s.truncation * lmax) ++kept;
        c = inv(f);
        if (kept == r) detail::refine_in_place(g, f, inv, c);
    }

    Reconstruction out;
    out.coeffs.assign(c.data(), c.data() + r);
    out.snapshot.assign(dof, 0.0);
    for (int k = 0; k < r; ++k) {
        const double ck = c[k];
        const std::vector<double>& uh = s.high[k];
        for (std::size_t t = 0; t < dof; ++t) out.snapshot[t] += ck * uh[t];
    }
    std::vector<double> lres(low_snapshot.begin(), low_snapshot.end());
    for (int k = 0; k < r; ++k) {
        const double ck = c[k];
        const std::vector<double>& ul = s.sel.selected[k];
        for (std::size_t t = 0; t < dof; ++t) lres[t] -= ck * ul[t];
    }
    out.low_residual = snapshot_norm(lres, dx);
    out.field = snapshot_to_field(out.snapshot, dx, boundary, time);
    return out;
}

// Contract-shaped convenience: run the low-fidelity model at z and
// reconstruct. `low_runner` maps a parameter sample to its final MacroField.
inline Reconstruction reconstruct(
    const BiFidelitySurrogate& s, const ParameterSample& z,
    const std::function<MacroField(const ParameterSample&)>& low_runner, int budget = 0) {
    const MacroField low = low_runner(z);
    const Snapshot snap = Snapshot::from_field(z.id, low, false);
    return reconstruct(s, snap.u, s.sel.dx, low.boundary, low.time, budget);
}

struct QuantityErrors {
    double rho = 0.0, u1 = 0.0, T = 0.0;
};

// Mean L2(x) error per quantity between two matched snapshot sets:
// (1/n) sum_i || a_i - b_i ||_{L2} computed separately on the rho, u1, T
// blocks with the dx-weighted norm.
inline QuantityErrors mean_l2_error(std::span<const Snapshot> reference,
                                    std::span<const Snapshot> estimate, double dx) {
    if (reference.size() != estimate.size() || reference.empty())
        throw SampleMismatch("mean_l2_error: set sizes differ or empty");
    const std::size_t dof = reference.front().u.size();
    const std::size_t n_x = dof / 3;
    QuantityErrors e;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (reference[i].id != estimate[i].id)
            throw SampleMismatch("mean_l2_error: sample ids disagree at position " +
                                 std::to_string(i));
        if (reference[i].u.size() != dof || estimate[i].u.size() != dof)
            throw BlockLayoutMismatch("mean_l2_error: snapshot lengths differ");
        double sr = 0.0, su = 0.0, st = 0.0;
        for (std::size_t t = 0; t < n_x; ++t) {
            const double dr = reference[i].u[t] - estimate[i].u[t];
            const double du = reference[i].u[n_x + t] - estimate[i].u[n_x + t];
            const double dT = reference[i].u[2 * n_x + t] - estimate[i].u[2 * n_x + t];
            sr += dr * dr;
            su += du * du;
            st += dT * dT;
        }
        e.rho += std::sqrt(dx * sr);
        e.u1 += std::sqrt(dx * su);
        e.T += std::sqrt(dx * st);
    }
    const double inv = 1.0 / static_cast<double>(reference.size());
    e.rho *= inv;
    e.u1 *= inv;
    e.T *= inv;
    return e;
}

// Diagnostic only: ||sqrt(G^H) (G^L)^-1 Q f|| where Q projects onto the
// eigenspace dropped by the spectral truncation. Reports how strongly the
// regularization touched this particular projection; zero at full rank. Never
// used inside reconstruction.
inline double truncation_diagnostic(const BiFidelitySurrogate& s,
                                    std::span<const double> low_snapshot) {
    const int n = s.budget();
    if (s.rank == n) return 0.0;
    Eigen::VectorXd f(n);
    for (int k = 0; k < n; ++k) f[k] = snapshot_dot(low_snapshot, s.sel.selected[k], s.sel.dx);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n - s.rank; ++i) {
        if (s.eigvals[i] <= 0.0) continue;
        y += (s.eigvecs.col(i).dot(f) / s.eigvals[i]) * s.eigvecs.col(i);
    }
    return std::sqrt(std::max(0.0, y.dot(s.gram_high * y)));
}

// Experimentation hooks (default off everywhere): per-block scaling of the
// concatenated [rho; u1; T] vector by the block norms of a reference snapshot,
// typically the initial data. Scale training and test snapshots with the same
// weights before selection/assembly/reconstruction.
inline std::array<double, 3> block_weights(std::span<const double> reference_u, double dx) {
    const std::size_t n_x = reference_u.size() / 3;
    std::array<double, 3> w{};
    for (int q = 0; q < 3; ++q) {
        const double n = snapshot_norm(reference_u.subspan(q * n_x, n_x), dx);
        w[q] = n > 0.0 ? 1.0 / n : 1.0;
    }
    return w;
}

inline void scale_blocks(std::vector<double>& u, const std::array<double, 3>& w) {
    const std::size_t n_x = u.size() / 3;
    for (int q = 0; q < 3; ++q)
        for (std::size_t t = 0; t < n_x; ++t) u[q * n_x + t] *= w[q];
}

// --- Persistence ------------------------------------------------------------
// A surrogate directory holds manifest.json plus the selected low- and
// high-fidelity snapshot matrices in full double precision. Selection order is
// preserved, so loading the first r rows yields the nested budget-r surrogate.

namespace detail {

inline std::string snapshot_matrix_csv(std::span<const std::uint64_t> ids,
                                       std::span<const std::vector<double>> rows) {
    std::string s;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        s += std::to_string(ids[k]);
        for (double x : rows[k]) {
            s += ',';
            s += format_double(x);
        }
        s += '\n';
    }
    return s;
}

inline void parse_snapshot_matrix_csv(const std::filesystem::path& path,
                                      std::vector<std::uint64_t>& ids,
                                      std::vector<std::vector<double>>& rows) {
    const std::string text = read_file(path);
    ids.clear();
    rows.clear();
    std::vector<std::string_view> cols;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        split_csv_line(line, cols);
        if (cols.size() < 2)
            throw InvalidState("surrogate matrix: short row in " + path.string());
        ids.push_back(static_cast<std::uint64_t>(parse_int(cols[0], "surrogate matrix")));
        std::vector<double> row;
        row.reserve(cols.size() - 1);
        for (std::size_t c = 1; c < cols.size(); ++c)
            row.push_back(parse_double(cols[c], "surrogate matrix"));
        rows.push_back(std::move(row));
    }
}

}  // namespace detail

struct SurrogateMeta {
    std::string scenario_hash;
    int n_x = 0;
    double dx = 0.0;
    Boundary boundary = Boundary::periodic;
    double t_final = 0.0;
    std::vector<std::vector<double>> selected_z;  // z-vector per selected id
    std::vector<double> block_weights;  // empty = no per-block scaling (default)
};

inline void save_surrogate(const std::filesystem::path& dir, const BiFidelitySurrogate& s,
                           const SurrogateMeta& meta) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    if (meta.selected_z.size() != s.sel.ids.size())
        throw IdMismatch("save_surrogate: selected_z size != selection size");

    nlohmann::json j;
    j["scenario_hash"] = meta.scenario_hash;
    j["n_x"] = meta.n_x;
    j["dx"] = meta.dx;
    j["boundary"] = meta.boundary == Boundary::periodic ? "periodic" : "zero_gradient";
    j["t_final"] = meta.t_final;
    j["budget"] = s.budget();
    j["stopped_early"] = s.sel.stopped_early;
    j["gram_condition"] = s.condition;
    j["gram_rank"] = s.rank;
    j["truncation"] = s.truncation;
    j["selected_ids"] = s.sel.ids;
    j["residuals"] = s.sel.residuals;
    j["selected_z"] = meta.selected_z;
    if (!meta.block_weights.empty()) j["block_weights"] = meta.block_weights;
    write_file(dir / "manifest.json", j.dump(2) + "\n");
    write_file(dir / "low_selected.csv",
               detail::snapshot_matrix_csv(s.sel.ids, s.sel.selected));
    write_file(dir / "high_selected.csv", detail::snapshot_matrix_csv(s.sel.ids, s.high));
}

// Load a persisted surrogate; `budget` > 0 keeps only the first `budget`
// selected points (the nested prefix surrogate). The Gramian is rebuilt from
// the stored full-precision snapshots.
inline BiFidelitySurrogate load_surrogate(const std::filesystem::path& dir,
                                          SurrogateMeta* meta_out, int budget = 0) {
    namespace fs = std::filesystem;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("load_surrogate: bad manifest in " + dir.string() + ": " + e.what());
    }
    SurrogateMeta meta;
    try {
        meta.scenario_hash = j.at("scenario_hash").get<std::string>();
        meta.n_x = j.at("n_x").get<int>();
        meta.dx = j.at("dx").get<double>();
        meta.boundary = j.at("boundary").get<std::string>() == "periodic"
                            ? Boundary::periodic
                            : Boundary::zero_gradient;
        meta.t_final = j.at("t_final").get<double>();
        meta.selected_z = j.at("selected_z").get<std::vector<std::vector<double>>>();
        if (j.contains("block_weights"))
            meta.block_weights = j.at("block_weights").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("load_surrogate: manifest field missing/typed wrong: " +
                          std::string(e.what()));
    }

    SelectionResult sel;
    sel.dx = meta.dx;
    sel.stopped_early = j.value("stopped_early", false);
    sel.residuals = j.at("residuals").get<std::vector<double>>();
    std::vector<std::uint64_t> low_ids, high_ids;
    detail::parse_snapshot_matrix_csv(dir / "low_selected.csv", low_ids, sel.selected);
    std::vector<std::vector<double>> high_rows;
    detail::parse_snapshot_matrix_csv(dir / "high_selected.csv", high_ids, high_rows);
    if (low_ids != high_ids || low_ids.size() != sel.residuals.size())
        throw IdMismatch("load_surrogate: matrices/manifest disagree in " + dir.string());
    sel.ids = low_ids;
    sel.positions.assign(sel.ids.size(), 0);  // original sweep positions not persisted

    const int full = static_cast<int>(sel.ids.size());
    const int keep = budget == 0 ? full : budget;
    if (keep < 1 || keep > full)
        throw BudgetExceedsRank("load_surrogate: budget " + std::to_string(keep) +
                                " outside stored range 1.." + std::to_string(full));
    sel.ids.resize(keep);
    sel.residuals.resize(keep);
    sel.selected.resize(keep);
    sel.positions.resize(keep);
    meta.selected_z.resize(keep);
    high_rows.resize(keep);

    std::vector<Snapshot> high;
    high.reserve(keep);
    for (int k = 0; k < keep; ++k) {
        Snapshot h;
        h.id = sel.ids[k];
        h.high_fidelity = true;
        h.u = std::move(high_rows[k]);
        high.push_back(std::move(h));
    }
    BiFidelitySurrogate s = assemble_surrogate(std::move(sel), high);
    if (meta_out) *meta_out = std::move(meta);
    return s;
}

}  // namespace kinuq
