#pragma once

#include "spreadband/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace spreadband {

/// Uniform truncated grid for the finite-difference solve.
struct OracleGrid {
    double lower;
    double upper;
    int n;

    double spacing() const { return (upper - lower) / (n - 1); }
    double node(int i) const { return lower + spacing() * i; }
};

/// Working-domain grid (covers every admissible switching boundary with margin).
OracleGrid default_oracle_grid(const ModelParams& params, int n);

/// Tridiagonal rows of the implicit operator rho - L (drift upwinded where the
/// cell Peclet number requires it, second-order central elsewhere; end rows
/// are pure inward-drift upwind). Row i: sub[i] v[i-1] + diag[i] v[i] + sup[i] v[i+1].
struct TridiagonalOperator {
    std::vector<double> sub, diag, sup;

    bool is_m_matrix() const;
};

TridiagonalOperator discretize_generator(const ModelParams& params, const OracleGrid& grid);

/// Converged discrete solution of the variational-inequality system, plus the
/// final obstacle activity masks per regime (regime 0 split by which switch
/// target attains the obstacle).
struct OracleSolution {
    OracleGrid grid;
    std::vector<double> x;  // natural coordinates
    std::vector<double> v0, v1, vm1;
    std::vector<std::uint8_t> open_buy_active, open_sell_active;
    std::vector<std::uint8_t> close_sell_active, close_buy_active;
    int sweeps = 0;
    double final_change = 0.0;
};

/// Policy iteration on the implicit discretization: each sweep solves the
/// three obstacle problems with the other regimes' current values frozen,
/// until the sup-norm update drops below 1e-10.
OracleSolution solve_qvi_fd(const ModelParams& params, const OracleGrid& grid);

/// Region edges read off the activity masks; empty optionals for empty regions.
struct OracleEdges {
    std::optional<double> open_buy, close_buy, close_sell, open_sell;
};

OracleEdges extract_edges(const OracleSolution& sol);

}  // namespace spreadband
