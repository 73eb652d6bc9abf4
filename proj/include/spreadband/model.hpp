#pragma once

#include "spreadband/specfun.hpp"

#include <string>
#include <utility>

namespace spreadband {

enum class ModelKind { OU, IGBM };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Diffusion and economic parameters of the spread model
///   dX = mu (L - X) dt + sigma(X) dW,
/// with sigma(x) = sigma for OU and sigma(x) = sigma * x for IGBM.
struct ModelParams {
    ModelKind kind = ModelKind::OU;
    double mu = 1.0;       ///< mean-reversion speed (1/time)
    double L = 0.0;        ///< long-run mean (price units)
    double sigma = 1.0;    ///< volatility scale (absolute for OU, proportional for IGBM)
    double rho = 0.1;      ///< discount rate (1/time)
    double lambda = 0.0;   ///< inventory penalty rate (price/time)
    double epsilon = 0.0;  ///< per-transaction fee (price units)

    /// lambda + rho*epsilon; always positive for valid params.
    double ell0() const { return lambda + rho * epsilon; }
    /// lambda - rho*epsilon; lies in (-ell0, ell0).
    double ell1() const { return lambda - rho * epsilon; }

    /// -inf for OU, 0 for IGBM.
    double domain_lower() const;

    /// sigma(x) of the diffusion term.
    double sigma_at(double x) const;

    /// Range wide enough to contain every switching boundary with margin:
    /// OU: L +/- 10 sigma/sqrt(2 mu); IGBM: [1e-4 L, 10 L].
    std::pair<double, double> working_domain() const;

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

/// The two switching cash flows. Buying the spread always pays -(x+eps)
/// (entering long, or covering a short); selling always pays x-eps.
struct GainFunctions {
    double epsilon = 0.0;

    double buy(double x) const { return -(x + epsilon); }
    double sell(double x) const { return x - epsilon; }
};

/// Closed-form constants of the IGBM fundamental solutions
/// psi+(x) = x^-a U(a,b,c/x), psi-(x) = x^-a M(a,b,c/x).
struct IgbmConstants {
    double a;
    double b;
    double c;
};

IgbmConstants igbm_constants(const ModelParams& params);

/// Fundamental solutions of rho*phi - L*phi = 0: psi_plus strictly increasing,
/// psi_minus strictly decreasing, both positive. Second derivatives come from
/// the ODE itself: psi'' = 2 (rho psi - mu (L-x) psi') / sigma(x)^2.
/// For OU with L != 0 the evaluators work on the translated state x - L.
class FundamentalPair {
public:
    explicit FundamentalPair(const ModelParams& params);

    double plus(double x) const;
    double minus(double x) const;
    double plus_dx(double x) const;
    double minus_dx(double x) const;
    double plus_dxx(double x) const;
    double minus_dxx(double x) const;

    double domain_lower() const;
    const ModelParams& params() const { return params_; }

private:
    ModelParams params_;
    IgbmConstants igbm_{0, 0, 0};  // unused for OU
};

FundamentalPair fundamental_pair(const ModelParams& params);

/// rho*phi(x) - mu(L-x) phi'(x) - sigma(x)^2/2 phi''(x).
double generator_residual(double phi, double phi_dx, double phi_dxx, double x,
                          const ModelParams& params);

/// E_x[e^(-rho tau_y)] = psi+(x)/psi+(y) for the IGBM hitting time of y from x <= y.
double first_passage_laplace(double x, double y, const ModelParams& params);

/// Non-emptiness indicators for the open-to-buy / buy-to-close regions (IGBM):
/// K0(y) = (c/y)^-a / U(a,b,c/y) * (y - eps + lambda/rho) - (lambda/rho + eps),
/// K-1(y) same pattern with the signs swapped on the lambda/rho terms.
double k0(double y, const ModelParams& params);
double km1(double y, const ModelParams& params);

}  // namespace spreadband
