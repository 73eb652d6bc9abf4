#pragma once

#include "spreadband/model.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spreadband {

/// Structure of the switching regions.
///  Case1:    state space R, all four regions present (OU).
///  Case2i:   state space (0,inf), all four regions present.
///  Case2ii:  open-to-buy region empty.
///  Case2iii: open-to-buy and buy-to-close regions empty.
enum class CaseTag { Case1, Case2i, Case2ii, Case2iii };

std::string to_string(CaseTag tag);

/// The four interval endpoints of the a-priori region bounds:
/// open-to-buy  subset (l-, open_buy_max],   open-to-sell subset [open_sell_min, inf),
/// sell-to-close subset [close_sell_min, inf), buy-to-close subset (l-, close_buy_max].
struct InclusionBounds {
    double open_buy_max;    ///< (mu L - l0)/(rho+mu)
    double open_sell_min;   ///< (mu L + l0)/(rho+mu)
    double close_sell_min;  ///< (mu L - l1)/(rho+mu)
    double close_buy_max;   ///< (mu L + l1)/(rho+mu)
};

InclusionBounds inclusion_bounds(const ModelParams& params);

/// Region boundaries in natural spread coordinates. Regions on the left of
/// the state space close upward: open-to-buy = (l-, open_buy], buy-to-close =
/// (l-, close_buy]; regions on the right close downward: sell-to-close =
/// [close_sell, inf), open-to-sell = [open_sell, inf). Absent optionals mean
/// the region is empty. close_sell is clipped to the domain edge (and
/// sell_to_close_everywhere set) when selling is optimal on the whole domain.
struct CutoffSet {
    CaseTag case_tag = CaseTag::Case1;
    std::optional<double> open_buy;
    std::optional<double> close_buy;
    double close_sell = 0.0;
    double open_sell = 0.0;
    bool sell_to_close_everywhere = false;
};

/// Coefficients of psi+/psi- in the continuation pieces of the value
/// functions: flat_* for the flat-position middle piece, long_plus for the
/// long-position piece, short_minus for the short-position piece. Entries a
/// case does not use are absent.
struct Coefficients {
    std::optional<double> flat_plus;
    std::optional<double> flat_minus;
    std::optional<double> long_plus;
    std::optional<double> short_minus;
};

struct SolveReport {
    CutoffSet cutoffs;
    Coefficients coeffs;
    std::vector<double> residuals;  ///< one per smooth-fit equation, scaled absolute
    int iterations = 0;
    double cond_value_matrix = 0.0;
    double cond_slope_matrix = 0.0;
};

struct ClassifyResult {
    CaseTag tag;
    std::string diagnostics;
};

/// Decide the region structure. OU is always Case1. For IGBM the sufficient
/// conditions (emptiness shortcuts, K0/K-1 scans) are tried first; when they
/// are inconclusive the case is decided by attempting solves and keeping the
/// first candidate whose value functions verify.
ClassifyResult classify_case(const ModelParams& params);

/// Cases (1) and (2)(i): two decoupled 2x2 smooth-fit systems.
SolveReport solve_case1(const ModelParams& params);

/// Case (2)(ii): 2x2 system for (close_buy, open_sell), scalar equation for close_sell.
SolveReport solve_case2ii(const ModelParams& params);

/// Case (2)(iii): two scalar equations.
SolveReport solve_case2iii(const ModelParams& params);

/// classify_case + the matching solve + verification of the assembled value
/// functions (smooth fit and variational-inequality residuals).
SolveReport solve_cutoffs(const ModelParams& params);

/// Condition estimates of the 4x4 value / slope smooth-fit matrices, after
/// checking their determinants are nonzero with the signs forced by the
/// monotonicity of psi+/-. Requires all four cutoffs (Case1 / Case2i).
std::pair<double, double> check_nonsingular(const CutoffSet& cutoffs,
                                            const FundamentalPair& pair);

}  // namespace spreadband
