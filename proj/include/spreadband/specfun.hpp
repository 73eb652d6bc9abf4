#pragma once

#include <cstddef>

namespace spreadband::specfun {

/// Arguments of the confluent hypergeometric functions M(a,b,z), U(a,b,z).
/// The mean-reverting spread models only ever need a > 0, b > 2, z >= 0.
struct HypergeometricArgs {
    double a;
    double b;
    double z;
};

/// Value plus an upper bound on the absolute evaluation error.
struct EvalResult {
    double value;
    double abs_error_estimate;
};

/// Kummer's function M(a,b,z) (confluent hypergeometric, first kind).
/// Power series with term-ratio stopping; large-z asymptotic branch.
EvalResult kummer_m(const HypergeometricArgs& args);

/// dM/dz = (a/b) M(a+1, b+1, z).
EvalResult kummer_m_dz(const HypergeometricArgs& args);

/// Tricomi's function U(a,b,z) (confluent hypergeometric, second kind),
/// evaluated from the Laplace integral representation (requires a > 0, z > 0).
EvalResult tricomi_u(const HypergeometricArgs& args);

/// dU/dz = -a U(a+1, b+1, z); strictly negative for z > 0.
EvalResult tricomi_u_dz(const HypergeometricArgs& args);

/// Increasing (sign=+1) / decreasing (sign=-1) solution of
/// rho*phi - L*phi = 0 for the zero-mean Ornstein-Uhlenbeck generator:
///   psi_{+/-}(x) = int_0^inf t^(rho/mu - 1) exp(-t^2/2 +/- (sqrt(2 mu)/sigma) x t) dt.
/// Adaptive quadrature; the integrable endpoint singularity (rho < mu) is
/// removed by the substitution t = u^(mu/rho).
EvalResult ou_psi(double x, int sign, double mu, double sigma, double rho);

/// d/dx of ou_psi: one extra factor +/- (sqrt(2 mu)/sigma) t in the integrand.
EvalResult ou_psi_dx(double x, int sign, double mu, double sigma, double rho);

}  // namespace spreadband::specfun
