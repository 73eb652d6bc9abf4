#include "spreadband/solver.hpp"

#include "spreadband/errors.hpp"
#include "spreadband/valuefn.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace spreadband {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRootTol = 1e-12;       // absolute residual target for the systems
constexpr double kFitTol = 1e-9;         // smooth-fit acceptance, relative
constexpr double kQviTol = 1e-7;         // QVI acceptance, relative
constexpr int kVerifyGridN = 501;

struct PsiVals {
    double p, m, dp, dm, ddp, ddm;
};

PsiVals eval_psi(const FundamentalPair& pair, double x) {
    PsiVals v;
    v.p = pair.plus(x);
    v.m = pair.minus(x);
    v.dp = pair.plus_dx(x);
    v.dm = pair.minus_dx(x);
    const auto& pr = pair.params();
    const double s = pr.sigma_at(x);
    const double drift = pr.mu * (pr.L - x);
    v.ddp = 2 * (pr.rho * v.p - drift * v.dp) / (s * s);
    v.ddm = 2 * (pr.rho * v.m - drift * v.dm) / (s * s);
    return v;
}

/// One smooth-fit pairing: two unknown edges (x1, x2) plus the two
/// coefficients of the active fundamental solutions. `plus_lead` selects
/// whether the leading coefficient multiplies psi+ (buy-side pairing) or
/// psi- (sell-side pairing).
struct QuasiSystem {
    const FundamentalPair* pair;
    bool plus_lead;
    double slope_rhs;                          // +1 buy side, -1 sell side
    std::function<double(double)> rhs1, rhs2;  // value-fit right-hand sides
    double drhs1, drhs2;                       // their (constant) slopes
};

void lead_follow(const QuasiSystem& sys, const PsiVals& v, double& f, double& df, double& ddf,
                 double& g, double& dg, double& ddg) {
    if (sys.plus_lead) {
        f = v.p; df = v.dp; ddf = v.ddp;
        g = v.m; dg = v.dm; ddg = v.ddm;
    } else {
        f = v.m; df = v.dm; ddf = v.ddm;
        g = v.p; dg = v.dp; ddg = v.ddp;
    }
}

Eigen::Vector4d quasi_residual(const QuasiSystem& sys, const Eigen::Vector4d& q,
                               Eigen::Matrix4d* jac) {
    const double x1 = q[0], x2 = q[1], c1 = q[2], c2 = q[3];
    const PsiVals v1 = eval_psi(*sys.pair, x1);
    const PsiVals v2 = eval_psi(*sys.pair, x2);
    double f1, df1, ddf1, g1, dg1, ddg1, f2, df2, ddf2, g2, dg2, ddg2;
    lead_follow(sys, v1, f1, df1, ddf1, g1, dg1, ddg1);
    lead_follow(sys, v2, f2, df2, ddf2, g2, dg2, ddg2);

    Eigen::Vector4d F;
    F[0] = c1 * f1 - c2 * g1 - sys.rhs1(x1);
    F[1] = c1 * df1 - c2 * dg1 - sys.slope_rhs;
    F[2] = c1 * f2 - c2 * g2 - sys.rhs2(x2);
    F[3] = c1 * df2 - c2 * dg2 - sys.slope_rhs;
    if (jac) {
        jac->setZero();
        (*jac)(0, 0) = c1 * df1 - c2 * dg1 - sys.drhs1;
        (*jac)(0, 2) = f1;
        (*jac)(0, 3) = -g1;
        (*jac)(1, 0) = c1 * ddf1 - c2 * ddg1;
        (*jac)(1, 2) = df1;
        (*jac)(1, 3) = -dg1;
        (*jac)(2, 1) = c1 * df2 - c2 * dg2 - sys.drhs2;
        (*jac)(2, 2) = f2;
        (*jac)(2, 3) = -g2;
        (*jac)(3, 1) = c1 * ddf2 - c2 * ddg2;
        (*jac)(3, 2) = df2;
        (*jac)(3, 3) = -dg2;
    }
    return F;
}

struct QuasiRoot {
    double x1, x2, c1, c2;
    int iterations;
};

bool edges_admissible(const QuasiSystem& sys, double x1, double x2) {
    const double lo = sys.pair->domain_lower();
    if (!(std::isfinite(x1) && std::isfinite(x2))) return false;
    if (!(x1 > lo && x2 > lo)) return false;
    return std::abs(x1) < 1e7 && std::abs(x2) < 1e7;
}

std::optional<QuasiRoot> newton4(const QuasiSystem& sys, Eigen::Vector4d q) {
    Eigen::Matrix4d J;
    double fnorm = kInf;
    for (int iter = 0; iter < 60; ++iter) {
        Eigen::Vector4d F;
        try {
            F = quasi_residual(sys, q, &J);
        } catch (const Error&) {
            return std::nullopt;
        }
        fnorm = F.lpNorm<Eigen::Infinity>();
        if (fnorm < kRootTol) return QuasiRoot{q[0], q[1], q[2], q[3], iter};
        const Eigen::Vector4d step = J.partialPivLu().solve(-F);
        if (!step.allFinite()) return std::nullopt;
        double t = 1.0;
        bool moved = false;
        while (t > 1e-4) {
            const Eigen::Vector4d qn = q + t * step;
            if (edges_admissible(sys, qn[0], qn[1])) {
                try {
                    const double fn = quasi_residual(sys, qn, nullptr).lpNorm<Eigen::Infinity>();
                    if (fn < (1.0 - 0.25 * t) * fnorm || fn < kRootTol) {
                        q = qn;
                        moved = true;
                        break;
                    }
                } catch (const Error&) {
                }
            }
            t *= 0.5;
        }
        if (!moved) return std::nullopt;
    }
    return std::nullopt;
}

Eigen::Vector2d coeffs_from_slopes(const QuasiSystem& sys, double x1, double x2) {
    const PsiVals v1 = eval_psi(*sys.pair, x1);
    const PsiVals v2 = eval_psi(*sys.pair, x2);
    double f1, df1, ddf1, g1, dg1, ddg1, f2, df2, ddf2, g2, dg2, ddg2;
    lead_follow(sys, v1, f1, df1, ddf1, g1, dg1, ddg1);
    lead_follow(sys, v2, f2, df2, ddf2, g2, dg2, ddg2);
    Eigen::Matrix2d A;
    A << df1, -dg1, df2, -dg2;
    Eigen::Vector2d b(sys.slope_rhs, sys.slope_rhs);
    return A.partialPivLu().solve(b);
}

/// Multi-start Newton over a ladder of offsets from the inclusion bounds,
/// with a coarse scan fallback; returns deduplicated admissible roots.
/// x1 starts below `x1_bound` for the buy pairing and above for the sell one.
std::vector<QuasiRoot> find_quasi_roots(const QuasiSystem& sys, double x1_bound, int x1_dir,
                                        double x2_bound, int x2_dir, double scale) {
    std::vector<QuasiRoot> roots;
    auto consider = [&](std::optional<QuasiRoot> r) {
        if (!r) return;
        // edges must respect their a-priori bounds and mutual ordering
        if ((r->x1 - x1_bound) * x1_dir < -1e-8 * scale) return;
        if ((r->x2 - x2_bound) * x2_dir < -1e-8 * scale) return;
        const double left = x1_dir < 0 ? r->x1 : r->x2;
        const double right = x1_dir < 0 ? r->x2 : r->x1;
        if (!(left < right)) return;
        for (const auto& have : roots) {
            if (std::abs(have.x1 - r->x1) < 1e-6 * scale &&
                std::abs(have.x2 - r->x2) < 1e-6 * scale) {
                return;
            }
        }
        roots.push_back(*r);
    };

    const double lo = sys.pair->domain_lower();
    auto clamp_start = [&](double x) {
        if (std::isfinite(lo) && x <= lo) return lo + 1e-3 * scale;
        return x;
    };

    for (double delta : {0.35, 0.18, 0.7, 1.4, 2.8, 5.6, 11.2}) {
        const double x1 = clamp_start(x1_bound + x1_dir * delta * scale);
        const double x2 = clamp_start(x2_bound + x2_dir * delta * scale);
        try {
            const Eigen::Vector2d c = coeffs_from_slopes(sys, x1, x2);
            consider(newton4(sys, Eigen::Vector4d(x1, x2, c[0], c[1])));
        } catch (const Error&) {
        }
        if (!roots.empty() && delta >= 0.7) break;  // scan exhaustively only when unlucky
    }
    if (!roots.empty()) return roots;

    // coarse scan of the reduced residual, then polish the best cells
    constexpr int kN = 40;
    std::vector<std::tuple<double, double, double>> cells;
    for (int i = 0; i < kN; ++i) {
        const double x1 = clamp_start(x1_bound + x1_dir * (0.02 + 12.0 * i / kN) * scale);
        for (int j = 0; j < kN; ++j) {
            const double x2 = clamp_start(x2_bound + x2_dir * (0.02 + 12.0 * j / kN) * scale);
            try {
                const Eigen::Vector2d c = coeffs_from_slopes(sys, x1, x2);
                const Eigen::Vector4d F =
                    quasi_residual(sys, Eigen::Vector4d(x1, x2, c[0], c[1]), nullptr);
                cells.emplace_back(std::abs(F[0]) + std::abs(F[2]), x1, x2);
            } catch (const Error&) {
            }
        }
    }
    std::sort(cells.begin(), cells.end());
    for (size_t k = 0; k < std::min<size_t>(cells.size(), 8); ++k) {
        const auto [norm, x1, x2] = cells[k];
        try {
            const Eigen::Vector2d c = coeffs_from_slopes(sys, x1, x2);
            consider(newton4(sys, Eigen::Vector4d(x1, x2, c[0], c[1])));
        } catch (const Error&) {
        }
    }
    return roots;
}

QuasiSystem buy_side_system(const FundamentalPair& pair, const ModelParams& p) {
    // value fits at the open-to-buy edge u and the sell-to-close edge s:
    // rhs are lambda/rho + u + eps and lambda/rho + s - eps
    const double lr = p.lambda / p.rho;
    const double eps = p.epsilon;
    return {&pair, true, +1.0, [lr, eps](double u) { return lr + u + eps; },
            [lr, eps](double s) { return lr + s - eps; }, 1.0, 1.0};
}

QuasiSystem sell_side_system(const FundamentalPair& pair, const ModelParams& p) {
    // value fits at the open-to-sell edge w and the buy-to-close edge m
    const double lr = p.lambda / p.rho;
    const double eps = p.epsilon;
    return {&pair, false, -1.0, [lr, eps](double w) { return lr - w + eps; },
            [lr, eps](double m) { return lr - m - eps; }, -1.0, -1.0};
}

double solver_scale(const ModelParams& p) {
    const double ref = p.kind == ModelKind::OU ? 1.0 : p.L;
    return p.sigma_at(ref) / std::sqrt(2.0 * p.mu) * (p.kind == ModelKind::OU ? 1.0 : 1.0);
}

/// Strictly decreasing (for x beyond the linear zero) scalar smooth-fit
/// residual (q - x) psi+'(x) + psi+(x); unique positive root when one exists.
std::optional<double> solve_scalar_cutoff(const FundamentalPair& pair, double q, double hi_cap,
                                          const char* what) {
    const double dom_lo = pair.domain_lower();
    const double lo0 = std::isfinite(dom_lo) ? std::max(dom_lo + 1e-10 * std::max(hi_cap, 1.0), q)
                                             : q;
    const auto f = [&](double x) { return (q - x) * pair.plus_dx(x) + pair.plus(x); };

    double lo = std::isfinite(dom_lo) ? std::max(lo0, dom_lo + 1e-12) : lo0;
    if (f(lo) < 0.0) {
        if (std::isfinite(dom_lo) && lo <= dom_lo + 1e-8 * std::max(1.0, hi_cap)) {
            return std::nullopt;  // root sits at or below the domain edge
        }
        throw SolverError(std::string(what) + ": residual negative at the lower bracket");
    }
    double step = std::max(0.5 * std::abs(lo), 0.125 * hi_cap / 16);
    double hi = lo;
    for (int i = 0; i < 200 && hi < 40 * hi_cap; ++i) {
        hi += step;
        step *= 1.7;
        if (f(hi) < 0.0) {
            boost::math::tools::eps_tolerance<double> tol(48);
            std::uintmax_t it = 100;
            auto r = boost::math::tools::toms748_solve(f, std::max(lo, hi - step / 0.5), hi,
                                                       tol, it);
            return 0.5 * (r.first + r.second);
        }
        lo = hi;
    }
    throw SolverError(std::string(what) + ": no sign change up to " + std::to_string(40 * hi_cap));
}

double fit_scale(double lhs, double rhs) { return 1.0 + std::abs(lhs) + std::abs(rhs); }

void push_fit_residual(std::vector<double>& out, double lhs, double rhs) {
    out.push_back((lhs - rhs) / fit_scale(lhs, rhs));
}

/// The QVI acceptance filter of a candidate report (coarse grid).
bool verifies(const ModelParams& params, const SolveReport& rep, std::string* why) {
    try {
        ValueTriple v = assemble_value_functions(params, rep);
        for (const auto& r : smooth_fit_residuals(v)) {
            if (std::abs(r.value_jump) > kFitTol * r.scale ||
                std::abs(r.derivative_jump) > kFitTol * r.scale) {
                if (why) *why = "smooth-fit jump at boundary " + std::to_string(r.boundary);
                return false;
            }
        }
        const auto grid = qvi_grid(v, kVerifyGridN);
        const auto q = qvi_residual(v, grid, kQviTol);
        if (!q.pass && why) {
            *why = "QVI violation " + std::to_string(q.max_violation);
        }
        return q.pass;
    } catch (const Error& e) {
        if (why) *why = e.what();
        return false;
    }
}

SolveReport translated(SolveReport rep, double L) {
    rep.cutoffs.open_sell += L;
    rep.cutoffs.close_sell += L;
    if (rep.cutoffs.open_buy) *rep.cutoffs.open_buy += L;
    if (rep.cutoffs.close_buy) *rep.cutoffs.close_buy += L;
    return rep;
}

}  // namespace

std::string to_string(CaseTag tag) {
    switch (tag) {
        case CaseTag::Case1: return "case1";
        case CaseTag::Case2i: return "case2i";
        case CaseTag::Case2ii: return "case2ii";
        case CaseTag::Case2iii: return "case2iii";
    }
    return "?";
}

InclusionBounds inclusion_bounds(const ModelParams& params) {
    const double d = params.rho + params.mu;
    const double mL = params.mu * params.L;
    return {(mL - params.ell0()) / d, (mL + params.ell0()) / d, (mL - params.ell1()) / d,
            (mL + params.ell1()) / d};
}

SolveReport solve_case1(const ModelParams& params) {
    params.validate();
    if (params.kind == ModelKind::OU && params.L != 0.0) {
        ModelParams p0 = params;
        p0.L = 0.0;
        return translated(solve_case1(p0), params.L);  // long-run mean translation
    }

    const FundamentalPair pair(params);
    const InclusionBounds b = inclusion_bounds(params);
    const double scale = solver_scale(params);

    const QuasiSystem buy = buy_side_system(pair, params);
    const QuasiSystem sell = sell_side_system(pair, params);
    const auto buy_roots = find_quasi_roots(buy, b.open_buy_max, -1, b.close_sell_min, +1, scale);
    const auto sell_roots =
        find_quasi_roots(sell, b.open_sell_min, +1, b.close_buy_max, -1, scale);
    if (buy_roots.empty() || sell_roots.empty()) {
        throw SolverError("solve_case1: no admissible root of the smooth-fit systems (" +
                          std::to_string(buy_roots.size()) + " buy-side, " +
                          std::to_string(sell_roots.size()) + " sell-side)");
    }

    std::vector<SolveReport> passing;
    std::string last_reason;
    for (const auto& br : buy_roots) {
        for (const auto& sr : sell_roots) {
            // br: (u, s, alpha = A1 - A0, B0); sr: (w, m, beta = B-1 - B0, A0)
            SolveReport rep;
            rep.cutoffs.case_tag =
                params.kind == ModelKind::OU ? CaseTag::Case1 : CaseTag::Case2i;
            rep.cutoffs.open_buy = br.x1;
            rep.cutoffs.close_sell = br.x2;
            rep.cutoffs.open_sell = sr.x1;
            rep.cutoffs.close_buy = sr.x2;
            const double a0 = sr.c2;
            const double b0 = br.c2;
            rep.coeffs.flat_plus = a0;
            rep.coeffs.flat_minus = b0;
            rep.coeffs.long_plus = br.c1 + a0;
            rep.coeffs.short_minus = sr.c1 + b0;
            rep.iterations = br.iterations + sr.iterations;
            if (!(br.x2 <= sr.x1 && sr.x2 >= br.x1)) continue;  // ordering of the regions
            std::string why;
            if (!verifies(params, rep, &why)) {
                last_reason = why;
                continue;
            }
            passing.push_back(std::move(rep));
        }
    }
    if (passing.empty()) {
        throw SolverError("solve_case1: no root combination passed verification (" +
                          last_reason + ")");
    }
    if (passing.size() > 1) {
        throw SolverError("solve_case1: multiple root combinations passed verification");
    }
    SolveReport rep = std::move(passing.front());

    // residuals of the eight smooth-fit equations
    const double lr = params.lambda / params.rho;
    const double eps = params.epsilon;
    const double u = *rep.cutoffs.open_buy, s = rep.cutoffs.close_sell;
    const double w = rep.cutoffs.open_sell, m = *rep.cutoffs.close_buy;
    const double A0 = *rep.coeffs.flat_plus, B0 = *rep.coeffs.flat_minus;
    const double A1 = *rep.coeffs.long_plus, Bm1 = *rep.coeffs.short_minus;
    auto mid = [&](double x) { return A0 * pair.plus(x) + B0 * pair.minus(x); };
    auto dmid = [&](double x) { return A0 * pair.plus_dx(x) + B0 * pair.minus_dx(x); };
    auto& res = rep.residuals;
    push_fit_residual(res, A1 * pair.plus(u) - lr - (u + eps), mid(u));
    push_fit_residual(res, A1 * pair.plus_dx(u) - 1, dmid(u));
    push_fit_residual(res, Bm1 * pair.minus(w) - lr + (w - eps), mid(w));
    push_fit_residual(res, Bm1 * pair.minus_dx(w) + 1, dmid(w));
    push_fit_residual(res, A1 * pair.plus(s) - lr, mid(s) + (s - eps));
    push_fit_residual(res, A1 * pair.plus_dx(s), dmid(s) + 1);
    push_fit_residual(res, Bm1 * pair.minus(m) - lr, mid(m) - (m + eps));
    push_fit_residual(res, Bm1 * pair.minus_dx(m), dmid(m) - 1);

    const auto conds = check_nonsingular(rep.cutoffs, pair);
    rep.cond_value_matrix = conds.first;
    rep.cond_slope_matrix = conds.second;
    return rep;
}

SolveReport solve_case2ii(const ModelParams& params) {
    params.validate();
    if (params.kind != ModelKind::IGBM) {
        throw ValidationError("solve_case2ii: only the positive-line model has this case");
    }
    const FundamentalPair pair(params);
    const InclusionBounds b = inclusion_bounds(params);
    const double scale = solver_scale(params);
    const double lr = params.lambda / params.rho;
    const double eps = params.epsilon;

    const QuasiSystem sell = sell_side_system(pair, params);
    const auto sell_roots =
        find_quasi_roots(sell, b.open_sell_min, +1, b.close_buy_max, -1, scale);
    if (sell_roots.empty()) {
        throw SolverError("solve_case2ii: no admissible root of the sell-side system");
    }

    // close_sell from the scalar equation; independent of the 2x2 system
    const auto s_root =
        solve_scalar_cutoff(pair, eps - lr, std::max(b.open_sell_min, 10 * scale), "close_sell");

    std::vector<SolveReport> passing;
    std::string last_reason;
    for (const auto& sr : sell_roots) {
        SolveReport rep;
        rep.cutoffs.case_tag = CaseTag::Case2ii;
        rep.cutoffs.open_sell = sr.x1;
        rep.cutoffs.close_buy = sr.x2;
        rep.coeffs.short_minus = sr.c1;  // B0 is absent; the pairing gives B-1 directly
        rep.coeffs.flat_plus = sr.c2;
        rep.iterations = sr.iterations;
        if (s_root) {
            rep.cutoffs.close_sell = *s_root;
            rep.coeffs.long_plus = *rep.coeffs.flat_plus + 1.0 / pair.plus_dx(*s_root);
        } else {
            rep.cutoffs.close_sell = 0.0;  // selling optimal on the whole domain
            rep.cutoffs.sell_to_close_everywhere = true;
        }
        if (!(rep.cutoffs.close_sell <= rep.cutoffs.open_sell)) continue;
        std::string why;
        if (!verifies(params, rep, &why)) {
            last_reason = why;
            continue;
        }
        passing.push_back(std::move(rep));
    }
    if (passing.empty()) {
        throw SolverError("solve_case2ii: no root passed verification (" + last_reason + ")");
    }
    if (passing.size() > 1) {
        throw SolverError("solve_case2ii: multiple roots passed verification");
    }
    SolveReport rep = std::move(passing.front());

    const double w = rep.cutoffs.open_sell, m = *rep.cutoffs.close_buy;
    const double A0 = *rep.coeffs.flat_plus, Bm1 = *rep.coeffs.short_minus;
    auto& res = rep.residuals;
    push_fit_residual(res, Bm1 * pair.minus(w) - lr + (w - eps), A0 * pair.plus(w));
    push_fit_residual(res, Bm1 * pair.minus_dx(w) + 1, A0 * pair.plus_dx(w));
    push_fit_residual(res, Bm1 * pair.minus(m) - lr, A0 * pair.plus(m) - (m + eps));
    push_fit_residual(res, Bm1 * pair.minus_dx(m), A0 * pair.plus_dx(m) - 1);
    if (!rep.cutoffs.sell_to_close_everywhere) {
        const double s = rep.cutoffs.close_sell;
        const double A1 = *rep.coeffs.long_plus;
        push_fit_residual(res, A1 * pair.plus(s) - lr, A0 * pair.plus(s) + (s - eps));
        push_fit_residual(res, A1 * pair.plus_dx(s), A0 * pair.plus_dx(s) + 1);
    }

    // condition estimates of the 2x2 sell-side pair
    Eigen::Matrix2d Mv, Ms;
    Mv << pair.minus(w), -pair.plus(w), pair.minus(m), -pair.plus(m);
    Ms << pair.minus_dx(w), -pair.plus_dx(w), pair.minus_dx(m), -pair.plus_dx(m);
    const auto cond2 = [](const Eigen::Matrix2d& A) {
        Eigen::JacobiSVD<Eigen::Matrix2d> svd(A);
        return svd.singularValues()(0) / svd.singularValues()(1);
    };
    rep.cond_value_matrix = cond2(Mv);
    rep.cond_slope_matrix = cond2(Ms);
    return rep;
}

SolveReport solve_case2iii(const ModelParams& params) {
    params.validate();
    if (params.kind != ModelKind::IGBM) {
        throw ValidationError("solve_case2iii: only the positive-line model has this case");
    }
    const FundamentalPair pair(params);
    const InclusionBounds b = inclusion_bounds(params);
    const double lr = params.lambda / params.rho;
    const double eps = params.epsilon;

    const double cap = std::max(b.open_sell_min, 10 * solver_scale(params));
    const auto w_root = solve_scalar_cutoff(pair, eps + lr, cap, "open_sell");
    const auto s_root = solve_scalar_cutoff(pair, eps - lr, cap, "close_sell");
    if (!w_root || !s_root) {
        throw SolverError("solve_case2iii: scalar cutoff root below the domain edge");
    }

    SolveReport rep;
    rep.cutoffs.case_tag = CaseTag::Case2iii;
    rep.cutoffs.open_sell = *w_root;
    rep.cutoffs.close_sell = *s_root;
    rep.coeffs.flat_plus = 1.0 / pair.plus_dx(*w_root);
    rep.coeffs.long_plus = *rep.coeffs.flat_plus + 1.0 / pair.plus_dx(*s_root);

    const double A0 = *rep.coeffs.flat_plus, A1 = *rep.coeffs.long_plus;
    auto& res = rep.residuals;
    push_fit_residual(res, -lr + (*w_root - eps), A0 * pair.plus(*w_root));
    push_fit_residual(res, 1.0, A0 * pair.plus_dx(*w_root));
    push_fit_residual(res, A1 * pair.plus(*s_root) - lr,
                      A0 * pair.plus(*s_root) + (*s_root - eps));
    push_fit_residual(res, A1 * pair.plus_dx(*s_root), A0 * pair.plus_dx(*s_root) + 1);
    return rep;
}

namespace {

bool k_scan_positive(const std::function<double(double)>& k, double lo, double hi, int n) {
    for (int i = 1; i <= n; ++i) {
        const double y = lo + (hi - lo) * i / (n + 1.0);
        if (k(y) > 0.0) return true;
    }
    return false;
}

std::optional<ClassifyResult> classify_quick(const ModelParams& params) {
    if (params.kind == ModelKind::OU) {
        return ClassifyResult{CaseTag::Case1, "whole-line state space: all four regions"};
    }
    const bool penalty_dominates = params.lambda > params.rho * params.epsilon;
    if (penalty_dominates && params.L <= params.ell0() / params.mu) {
        return ClassifyResult{CaseTag::Case2ii,
                              "open-to-buy empty: lambda > rho*eps and mu*L <= lambda+rho*eps"};
    }
    if (!penalty_dominates && params.L <= -params.ell1() / params.mu) {
        return ClassifyResult{
            CaseTag::Case2iii,
            "open-to-buy and buy-to-close empty: lambda <= rho*eps and mu*L <= rho*eps-lambda"};
    }
    const InclusionBounds b = inclusion_bounds(params);
    const bool k0_pos = b.open_sell_min > 0 &&
                        k_scan_positive([&](double y) { return k0(y, params); }, 0.0,
                                        b.open_sell_min, 200);
    const double ymax = std::max(10 * params.L, 4 * std::abs(b.open_sell_min));
    const bool km1_pos =
        k_scan_positive([&](double y) { return km1(y, params); }, 0.0, ymax, 400);
    if (k0_pos && km1_pos) {
        return ClassifyResult{CaseTag::Case2i,
                              "K0 and K-1 positive somewhere: all four regions"};
    }
    return std::nullopt;
}

struct CascadeOutcome {
    ClassifyResult cls;
    SolveReport report;
};

CascadeOutcome solve_cascade(const ModelParams& params) {
    std::ostringstream attempts;
    try {
        return {{CaseTag::Case2i, "accepted by solve-and-verify"}, solve_case1(params)};
    } catch (const SolverError& e) {
        attempts << "case2i: " << e.what() << "; ";
    }
    try {
        return {{CaseTag::Case2ii, "accepted by solve-and-verify"}, solve_case2ii(params)};
    } catch (const SolverError& e) {
        attempts << "case2ii: " << e.what() << "; ";
    }
    try {
        return {{CaseTag::Case2iii, "accepted by solve-and-verify"}, solve_case2iii(params)};
    } catch (const SolverError& e) {
        attempts << "case2iii: " << e.what();
    }
    throw SolverError("classification failed; attempts: " + attempts.str());
}

}  // namespace

ClassifyResult classify_case(const ModelParams& params) {
    params.validate();
    if (auto quick = classify_quick(params)) return *quick;
    return solve_cascade(params).cls;
}

SolveReport solve_cutoffs(const ModelParams& params) {
    params.validate();
    SolveReport rep;
    if (auto quick = classify_quick(params)) {
        switch (quick->tag) {
            case CaseTag::Case1:
            case CaseTag::Case2i: rep = solve_case1(params); break;
            case CaseTag::Case2ii: rep = solve_case2ii(params); break;
            case CaseTag::Case2iii: rep = solve_case2iii(params); break;
        }
    } else {
        rep = solve_cascade(params).report;
    }
    std::string why;
    if (!verifies(params, rep, &why)) {
        throw VerifyError("solved cutoffs failed verification: " + why);
    }
    return rep;
}

std::pair<double, double> check_nonsingular(const CutoffSet& cutoffs,
                                            const FundamentalPair& pair) {
    if (!cutoffs.open_buy || !cutoffs.close_buy) {
        throw ValidationError("check_nonsingular: requires all four cutoffs");
    }
    const double u = *cutoffs.open_buy, s = cutoffs.close_sell;
    const double w = cutoffs.open_sell, m = *cutoffs.close_buy;

    const double f1 = pair.minus(u) * pair.plus(s) - pair.minus(s) * pair.plus(u);
    const double f2 = pair.minus(w) * pair.plus(m) - pair.minus(m) * pair.plus(w);
    const double g1 = pair.minus_dx(u) * pair.plus_dx(s) - pair.minus_dx(s) * pair.plus_dx(u);
    const double g2 = pair.minus_dx(w) * pair.plus_dx(m) - pair.minus_dx(m) * pair.plus_dx(w);
    if (!(f1 > 0) || !(f2 < 0) || !(g1 < 0) || !(g2 > 0)) {
        throw SolverError("check_nonsingular: determinant factor with unexpected sign or zero");
    }

    Eigen::Matrix4d M, Mx;
    M << pair.plus(u), 0, 0, -pair.minus(u),
         0, pair.minus(w), -pair.plus(w), 0,
         pair.plus(s), 0, 0, -pair.minus(s),
         0, pair.minus(m), -pair.plus(m), 0;
    Mx << pair.plus_dx(u), 0, 0, -pair.minus_dx(u),
          0, pair.minus_dx(w), -pair.plus_dx(w), 0,
          pair.plus_dx(s), 0, 0, -pair.minus_dx(s),
          0, pair.minus_dx(m), -pair.plus_dx(m), 0;
    const auto cond4 = [](const Eigen::Matrix4d& A) {
        Eigen::JacobiSVD<Eigen::Matrix4d> svd(A);
        return svd.singularValues()(0) / svd.singularValues()(3);
    };
    return {cond4(M), cond4(Mx)};
}

}  // namespace spreadband
