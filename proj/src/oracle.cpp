#include "spreadband/oracle.hpp"

#include "spreadband/errors.hpp"
#include "spreadband/solver.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace spreadband {

namespace {

constexpr double kSweepTol = 1e-10;
constexpr int kMaxSweeps = 4000;

ModelParams normalized(const ModelParams& params) {
    ModelParams p = params;
    if (p.kind == ModelKind::OU) p.L = 0.0;
    return p;
}

void thomas_solve(const std::vector<double>& sub, const std::vector<double>& diag,
                  const std::vector<double>& sup, std::vector<double>& rhs,
                  std::vector<double>& scratch) {
    const size_t n = diag.size();
    scratch.resize(n);
    double d = diag[0];
    scratch[0] = sup[0] / d;
    rhs[0] /= d;
    for (size_t i = 1; i < n; ++i) {
        d = diag[i] - sub[i] * scratch[i - 1];
        scratch[i] = sup[i] / d;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / d;
    }
    for (size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

/// Howard policy iteration for min(A v - f, v - psi) = 0 with tridiagonal
/// M-matrix A: finite convergence of the active set. Activation spreads in
/// one update, de-activation only node by node, so `active` must come in as
/// an under-estimate (empty on the first call, warm-started afterwards).
void solve_obstacle(const TridiagonalOperator& op, const std::vector<double>& f,
                    const std::vector<double>& psi, std::vector<double>& v,
                    std::vector<std::uint8_t>& active) {
    const size_t n = f.size();
    static thread_local std::vector<double> sub, diag, sup, rhs, scratch, av, vprev;
    sub.resize(n);
    diag.resize(n);
    sup.resize(n);
    rhs.resize(n);
    av.resize(n);
    if (active.size() != n) active.assign(n, 0);

    for (int it = 0; it < 200; ++it) {
        vprev = v;
        for (size_t i = 0; i < n; ++i) {
            if (active[i]) {
                sub[i] = 0.0;
                diag[i] = 1.0;
                sup[i] = 0.0;
                rhs[i] = psi[i];
            } else {
                sub[i] = op.sub[i];
                diag[i] = op.diag[i];
                sup[i] = op.sup[i];
                rhs[i] = f[i];
            }
        }
        thomas_solve(sub, diag, sup, rhs, scratch);
        v = rhs;

        for (size_t i = 0; i < n; ++i) {
            av[i] = op.diag[i] * v[i];
            if (i > 0) av[i] += op.sub[i] * v[i - 1];
            if (i + 1 < n) av[i] += op.sup[i] * v[i + 1];
        }
        bool changed = false;
        double value_change = 0.0;
        double scale = 1.0;
        for (size_t i = 0; i < n; ++i) {
            const std::uint8_t want = (v[i] - psi[i]) < (av[i] - f[i]);
            if (want != active[i]) {
                active[i] = want;
                changed = true;
            }
            if (it > 0) value_change = std::max(value_change, std::abs(v[i] - vprev[i]));
            scale = std::max(scale, std::abs(v[i]));
        }
        if (!changed) return;
        // mask flapping at contact-boundary ties is benign once values settle
        if (it > 0 && value_change < 1e-13 * scale) return;
    }
    throw SolverError("oracle: obstacle policy iteration did not settle");
}

}  // namespace

OracleGrid default_oracle_grid(const ModelParams& params, int n) {
    const auto [lo, hi] = params.working_domain();
    return {lo, hi, n};
}

bool TridiagonalOperator::is_m_matrix() const {
    for (size_t i = 0; i < diag.size(); ++i) {
        if (!(diag[i] > 0) || sub[i] > 0 || sup[i] > 0) return false;
        if (!(diag[i] + sub[i] + sup[i] > 0)) return false;  // row sum >= rho
    }
    return true;
}

TridiagonalOperator discretize_generator(const ModelParams& params, const OracleGrid& grid) {
    const ModelParams p = normalized(params);
    const double shift = params.kind == ModelKind::OU ? params.L : 0.0;
    const int n = grid.n;
    const double h = grid.spacing();
    TridiagonalOperator op;
    op.sub.assign(n, 0.0);
    op.diag.assign(n, 0.0);
    op.sup.assign(n, 0.0);

    for (int i = 0; i < n; ++i) {
        const double y = grid.node(i) - shift;
        const double d = p.mu * (p.L - y);
        const double s = p.sigma_at(y);
        const double diff = s * s / (2 * h * h);
        double lo_c, hi_c;
        if (i == 0 || i == n - 1) {
            // end rows: inward-drift upwind only; the diffusion stencil has no
            // neighbor on one side and sigma is either negligible there (IGBM)
            // or the truncation error is damped by the strong inward drift (OU)
            if (i == 0 && !(d > 0)) throw ValidationError("oracle grid: drift must point inward at the lower edge");
            if (i == n - 1 && !(d < 0)) throw ValidationError("oracle grid: drift must point inward at the upper edge");
            lo_c = i == 0 ? 0.0 : -d / h;
            hi_c = i == 0 ? d / h : 0.0;
        } else if (std::abs(d) * h <= s * s) {
            lo_c = diff - d / (2 * h);  // central differencing keeps the M-matrix here
            hi_c = diff + d / (2 * h);
        } else if (d > 0) {
            lo_c = diff;
            hi_c = diff + d / h;
        } else {
            lo_c = diff - d / h;
            hi_c = diff;
        }
        op.sub[i] = -lo_c;
        op.sup[i] = -hi_c;
        op.diag[i] = p.rho + lo_c + hi_c;
    }
    return op;
}

OracleSolution solve_qvi_fd(const ModelParams& params, const OracleGrid& grid) {
    params.validate();
    if (grid.n < 201) throw ValidationError("oracle grid: need at least 201 nodes");
    if (!(grid.lower < grid.upper)) throw ValidationError("oracle grid: lower < upper required");
    {
        // inclusion-bound endpoints inside the domain must be covered with margin
        const InclusionBounds b = inclusion_bounds(params);
        const double dom_lo = params.domain_lower();
        const double lo_need = std::min(b.open_buy_max, b.close_buy_max);
        const double hi_need = std::max(b.open_sell_min, b.close_sell_min);
        const double margin = 0.2 * (hi_need - std::max(lo_need, dom_lo));
        const bool lo_covered =
            lo_need <= dom_lo ||
            grid.lower <= lo_need - (std::isfinite(dom_lo) ? 0.0 : margin);
        if (!lo_covered || grid.upper < hi_need + margin) {
            throw ValidationError("oracle grid: does not cover the admissible cutoff band");
        }
    }

    const ModelParams p = normalized(params);
    const double shift = params.kind == ModelKind::OU ? params.L : 0.0;
    const int n = grid.n;
    const TridiagonalOperator op = discretize_generator(params, grid);
    const GainFunctions g{p.epsilon};
    const double lr = p.lambda / p.rho;

    OracleSolution sol;
    sol.grid = grid;
    sol.x.resize(n);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        sol.x[i] = grid.node(i);
        y[i] = sol.x[i] - shift;
    }

    // start from the never-trade / immediate-switch envelope
    sol.v0.assign(n, 0.0);
    sol.v1.resize(n);
    sol.vm1.resize(n);
    for (int i = 0; i < n; ++i) {
        sol.v0[i] = std::max(0.0, g.sell(y[i]) - lr);
        sol.v1[i] = sol.v0[i] + g.sell(y[i]);
        sol.vm1[i] = std::max(-lr, sol.v0[i] + g.buy(y[i]));
    }

    std::vector<double> zero(n, 0.0), lam(n, -p.lambda), obstacle(n), prev(n);
    std::vector<std::uint8_t> act0(n), act1(n), actm1(n);
    double change = 0.0;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        change = 0.0;

        prev = sol.v0;
        for (int i = 0; i < n; ++i) {
            obstacle[i] = std::max(sol.v1[i] + g.buy(y[i]), sol.vm1[i] + g.sell(y[i]));
        }
        solve_obstacle(op, zero, obstacle, sol.v0, act0);
        for (int i = 0; i < n; ++i) change = std::max(change, std::abs(sol.v0[i] - prev[i]));

        prev = sol.v1;
        for (int i = 0; i < n; ++i) obstacle[i] = sol.v0[i] + g.sell(y[i]);
        solve_obstacle(op, lam, obstacle, sol.v1, act1);
        for (int i = 0; i < n; ++i) change = std::max(change, std::abs(sol.v1[i] - prev[i]));

        prev = sol.vm1;
        for (int i = 0; i < n; ++i) obstacle[i] = sol.v0[i] + g.buy(y[i]);
        solve_obstacle(op, lam, obstacle, sol.vm1, actm1);
        for (int i = 0; i < n; ++i) change = std::max(change, std::abs(sol.vm1[i] - prev[i]));

        if (change < kSweepTol) {
            sol.sweeps = sweep + 1;
            sol.final_change = change;
            sol.open_buy_active.assign(n, 0);
            sol.open_sell_active.assign(n, 0);
            for (int i = 0; i < n; ++i) {
                const bool buy_branch = sol.v1[i] + g.buy(y[i]) >= sol.vm1[i] + g.sell(y[i]);
                sol.open_buy_active[i] = act0[i] && buy_branch;
                sol.open_sell_active[i] = act0[i] && !buy_branch;
            }
            sol.close_sell_active = act1;
            sol.close_buy_active = actm1;
            return sol;
        }
    }
    throw SolverError("oracle: policy iteration did not converge within the sweep budget");
}

OracleEdges extract_edges(const OracleSolution& sol) {
    OracleEdges e;
    const auto& x = sol.x;
    const auto last_true = [&](const std::vector<std::uint8_t>& m) -> std::optional<double> {
        for (size_t i = m.size(); i-- > 0;) {
            if (m[i]) return x[i];
        }
        return std::nullopt;
    };
    const auto first_true = [&](const std::vector<std::uint8_t>& m) -> std::optional<double> {
        for (size_t i = 0; i < m.size(); ++i) {
            if (m[i]) return x[i];
        }
        return std::nullopt;
    };
    e.open_buy = last_true(sol.open_buy_active);
    e.close_buy = last_true(sol.close_buy_active);
    e.open_sell = first_true(sol.open_sell_active);
    e.close_sell = first_true(sol.close_sell_active);
    return e;
}

}  // namespace spreadband
