#pragma once

#include "spreadband/model.hpp"
#include "spreadband/solver.hpp"

#include <span>
#include <vector>

namespace spreadband {

/// The assembled piecewise value functions v0 (flat), v1 (long), v-1 (short).
/// Immutable after construction; safe to evaluate concurrently.
///
/// For OU with L != 0 the whole problem is the L = 0 problem translated by L
/// (the spread is de-meaned), so evaluation shifts x internally and the
/// switching gains apply to the de-meaned state.
class ValueTriple {
public:
    ValueTriple(const ModelParams& params, const CutoffSet& cutoffs, const Coefficients& coeffs);

    /// v_regime(x); regime in {-1, 0, 1}. At a boundary point the
    /// switching-side formula applies (switching regions are closed sets).
    double value(int regime, double x) const;

    /// First and second derivatives of the active piece. Not defined exactly
    /// at a cutoff for the second derivative; callers sample away from edges.
    double value_dx(int regime, double x) const;
    double value_dxx(int regime, double x) const;

    const ModelParams& params() const { return params_; }
    const CutoffSet& cutoffs() const { return cutoffs_; }
    const Coefficients& coeffs() const { return coeffs_; }
    const FundamentalPair& pair() const { return pair_; }
    const GainFunctions& gains() const { return gains_; }

    /// De-meaned evaluation coordinate (x - L for OU, x for IGBM).
    double internal_coord(double x) const { return x - shift_; }

private:
    struct Piece {
        // value = cp * psi+(y) + cm * psi-(y) + lin0 + lin1 * y  on (lo, hi) or (lo, hi]
        double lo, hi;
        bool hi_closed;  // true when hi is the edge of a left switching region
        double cp, cm, lin0, lin1;
    };

    double piece_value(const Piece& p, double y) const;
    double piece_dx(const Piece& p, double y) const;
    double piece_dxx(const Piece& p, double y) const;
    const Piece& active_piece(int regime, double y) const;

    ModelParams params_;
    CutoffSet cutoffs_;
    Coefficients coeffs_;
    FundamentalPair pair_;
    GainFunctions gains_;
    double shift_ = 0.0;                  // OU long-run mean translation
    std::vector<Piece> pieces_[3];        // index 0: v-1, 1: v0, 2: v1
};

ValueTriple assemble_value_functions(const ModelParams& params, const SolveReport& report);

/// Jump of value and first derivative across one switching boundary.
struct BoundaryResidual {
    double boundary;
    double value_jump;
    double derivative_jump;
    double scale;  ///< 1 + local |v|, for relative comparison
};

std::vector<BoundaryResidual> smooth_fit_residuals(const ValueTriple& v);

/// Residuals of the variational-inequality system at one point for one regime:
/// pde = rho v - Lv (+ lambda for regimes +-1), obstacle = v - switching target.
/// The system holds when both are >= -tol and min(pde, obstacle) <= tol.
struct QviPointResidual {
    double x;
    int regime;
    double pde;
    double obstacle;
};

struct QviReport {
    std::vector<QviPointResidual> worst;  ///< most violating point per regime
    double max_violation = 0.0;           ///< max over points of the scaled violation
    bool pass = false;
};

/// Checks the QVI at the given points with tolerance tol_scale*(1+|v|).
QviReport qvi_residual(const ValueTriple& v, std::span<const double> grid,
                       double tol_scale = 1e-7);

/// Uniform grid over the working domain with the cutoff neighborhoods
/// (+-exclusion) removed, for use with qvi_residual.
std::vector<double> qvi_grid(const ValueTriple& v, int n, double exclusion = 1e-6);

}  // namespace spreadband
