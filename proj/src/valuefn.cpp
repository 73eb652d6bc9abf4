#include "spreadband/valuefn.hpp"

#include "spreadband/errors.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace spreadband {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ModelParams normalized(const ModelParams& params) {
    ModelParams p = params;
    if (p.kind == ModelKind::OU) p.L = 0.0;
    return p;
}

}  // namespace

ValueTriple::ValueTriple(const ModelParams& params, const CutoffSet& cutoffs,
                         const Coefficients& coeffs)
    : params_(params),
      cutoffs_(cutoffs),
      coeffs_(coeffs),
      pair_(normalized(params)),
      gains_{params.epsilon},
      shift_(params.kind == ModelKind::OU ? params.L : 0.0) {
    const double lr = params_.lambda / params_.rho;
    const double eps = params_.epsilon;
    const double lo = params_.domain_lower();

    // edges in de-meaned coordinates
    const double w = cutoffs_.open_sell - shift_;
    const double s = cutoffs_.close_sell - shift_;
    const auto u = cutoffs_.open_buy
                       ? std::optional<double>(*cutoffs_.open_buy - shift_)
                       : std::nullopt;
    const auto m = cutoffs_.close_buy
                       ? std::optional<double>(*cutoffs_.close_buy - shift_)
                       : std::nullopt;

    const double a0 = coeffs_.flat_plus.value_or(0.0);
    const double b0 = coeffs_.flat_minus.value_or(0.0);
    const double a1 = coeffs_.long_plus.value_or(0.0);
    const double bm1 = coeffs_.short_minus.value_or(0.0);

    auto& v0 = pieces_[1];
    auto& v1 = pieces_[2];
    auto& vm1 = pieces_[0];

    // flat position
    if (u) {
        v0.push_back({lo, *u, true, a1, 0.0, -lr - eps, -1.0});  // switch to long: v1 + buy
    }
    v0.push_back({u ? *u : lo, w, false, a0, b0, 0.0, 0.0});
    if (cutoffs_.case_tag == CaseTag::Case2iii) {
        v0.push_back({w, kInf, false, 0.0, 0.0, -lr - eps, 1.0});
    } else {
        v0.push_back({w, kInf, false, 0.0, bm1, -lr - eps, 1.0});  // switch to short: v-1 + sell
    }

    // long position
    if (!cutoffs_.sell_to_close_everywhere) {
        v1.push_back({lo, s, false, a1, 0.0, -lr, 0.0});
    }
    const double s_eff = cutoffs_.sell_to_close_everywhere ? lo : s;
    for (const auto& p : v0) {  // v1 = v0 + sell on [s, inf)
        if (p.hi <= s_eff) continue;
        v1.push_back({std::max(p.lo, s_eff), p.hi, false, p.cp, p.cm, p.lin0 - eps,
                      p.lin1 + 1.0});
    }

    // short position
    if (cutoffs_.case_tag == CaseTag::Case2iii) {
        vm1.push_back({lo, kInf, false, 0.0, 0.0, -lr, 0.0});
    } else {
        assert(m.has_value());
        for (const auto& p : v0) {  // v-1 = v0 + buy on (l-, m]
            if (p.lo >= *m) break;
            const double hi = std::min(p.hi, *m);
            vm1.push_back({p.lo, hi, hi == *m, p.cp, p.cm, p.lin0 - eps, p.lin1 - 1.0});
        }
        vm1.push_back({*m, kInf, false, 0.0, bm1, -lr, 0.0});
    }
}

double ValueTriple::piece_value(const Piece& p, double y) const {
    double v = p.lin0 + p.lin1 * y;
    if (p.cp != 0.0) v += p.cp * pair_.plus(y);
    if (p.cm != 0.0) v += p.cm * pair_.minus(y);
    return v;
}

double ValueTriple::piece_dx(const Piece& p, double y) const {
    double v = p.lin1;
    if (p.cp != 0.0) v += p.cp * pair_.plus_dx(y);
    if (p.cm != 0.0) v += p.cm * pair_.minus_dx(y);
    return v;
}

double ValueTriple::piece_dxx(const Piece& p, double y) const {
    double v = 0.0;
    if (p.cp != 0.0) v += p.cp * pair_.plus_dxx(y);
    if (p.cm != 0.0) v += p.cm * pair_.minus_dxx(y);
    return v;
}

const ValueTriple::Piece& ValueTriple::active_piece(int regime, double y) const {
    // Left switching regions (open-to-buy, buy-to-close) are closed intervals
    // (l-, edge], so their pieces carry hi_closed; right regions own their lo.
    const auto& ps = pieces_[regime + 1];
    for (size_t i = 0; i + 1 < ps.size(); ++i) {
        if (y < ps[i].hi || (ps[i].hi_closed && y == ps[i].hi)) return ps[i];
    }
    return ps.back();
}

double ValueTriple::value(int regime, double x) const {
    const double y = x - shift_;
    if (!(y > pair_.domain_lower()) && params_.kind == ModelKind::IGBM) {
        throw DomainError("value: x outside the state space (0, inf)");
    }
    return piece_value(active_piece(regime, y), y);
}

double ValueTriple::value_dx(int regime, double x) const {
    const double y = x - shift_;
    return piece_dx(active_piece(regime, y), y);
}

double ValueTriple::value_dxx(int regime, double x) const {
    const double y = x - shift_;
    return piece_dxx(active_piece(regime, y), y);
}

ValueTriple assemble_value_functions(const ModelParams& params, const SolveReport& report) {
    return ValueTriple(params, report.cutoffs, report.coeffs);
}

std::vector<BoundaryResidual> smooth_fit_residuals(const ValueTriple& v) {
    std::vector<BoundaryResidual> out;
    const auto& c = v.cutoffs();
    const double tiny = 1e-7;

    struct Edge {
        int regime;
        double x;
        double scale_hint;
    };
    std::vector<Edge> edges;
    if (c.open_buy) edges.push_back({0, *c.open_buy, 0});
    edges.push_back({0, c.open_sell, 0});
    if (!c.sell_to_close_everywhere) edges.push_back({1, c.close_sell, 0});
    if (c.close_buy) edges.push_back({-1, *c.close_buy, 0});

    for (const auto& e : edges) {
        // one-sided evaluation via points just inside each piece, then the
        // analytic pieces are linear-extrapolated back to the edge; the
        // pieces are smooth so this measures only the inter-piece jump
        const double h = tiny * (1.0 + std::abs(e.x));
        const double vl = v.value(e.regime, e.x - h) + h * v.value_dx(e.regime, e.x - h);
        const double vr = v.value(e.regime, e.x + h) - h * v.value_dx(e.regime, e.x + h);
        const double dl = v.value_dx(e.regime, e.x - h) + h * v.value_dxx(e.regime, e.x - h);
        const double dr = v.value_dx(e.regime, e.x + h) - h * v.value_dxx(e.regime, e.x + h);
        const double scale = 1.0 + std::abs(vl) + std::abs(dl);
        out.push_back({e.x, vr - vl, dr - dl, scale});
    }
    return out;
}

QviReport qvi_residual(const ValueTriple& v, std::span<const double> grid, double tol_scale) {
    QviReport rep;
    const ModelParams norm = normalized(v.params());
    const double lam = norm.lambda;
    QviPointResidual worst[3] = {{0, -1, kInf, kInf}, {0, 0, kInf, kInf}, {0, 1, kInf, kInf}};
    double max_violation = 0.0;

    for (double x : grid) {
        const double y = v.internal_coord(x);
        const double v0 = v.value(0, x);
        const double v1 = v.value(1, x);
        const double vm1 = v.value(-1, x);
        const GainFunctions& g = v.gains();

        for (int regime : {-1, 0, 1}) {
            const double val = regime == 0 ? v0 : (regime == 1 ? v1 : vm1);
            double pde = generator_residual(val, v.value_dx(regime, x), v.value_dxx(regime, x),
                                            y, norm);
            double obstacle;
            if (regime == 0) {
                obstacle = v0 - std::max(v1 + g.buy(y), vm1 + g.sell(y));
            } else {
                pde += lam;
                obstacle = regime == 1 ? v1 - v0 - g.sell(y) : vm1 - v0 - g.buy(y);
            }
            const double scale = 1.0 + std::abs(val);
            const double violation =
                std::max({-pde, -obstacle, std::min(pde, obstacle)}) / scale;
            if (violation > max_violation) max_violation = violation;
            auto& w = worst[regime + 1];
            const double prev = std::max({-w.pde, -w.obstacle, std::min(w.pde, w.obstacle)});
            if (w.pde == kInf || violation * scale > prev) w = {x, regime, pde, obstacle};
        }
    }
    rep.worst.assign(worst, worst + 3);
    rep.max_violation = max_violation;
    rep.pass = max_violation <= tol_scale;
    return rep;
}

std::vector<double> qvi_grid(const ValueTriple& v, int n, double exclusion) {
    const auto [lo, hi] = v.params().working_domain();
    std::vector<double> edges;
    const auto& c = v.cutoffs();
    if (c.open_buy) edges.push_back(*c.open_buy);
    if (c.close_buy) edges.push_back(*c.close_buy);
    edges.push_back(c.close_sell);
    edges.push_back(c.open_sell);

    std::vector<double> grid;
    grid.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * (i + 0.5) / n;
        const bool near_edge = std::any_of(edges.begin(), edges.end(), [&](double e) {
            return std::abs(x - e) < exclusion;
        });
        if (!near_edge) grid.push_back(x);
    }
    return grid;
}

}  // namespace spreadband
