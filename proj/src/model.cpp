#include "spreadband/model.hpp"

#include "spreadband/errors.hpp"

#include <cmath>
#include <limits>

namespace spreadband {

std::string to_string(ModelKind kind) {
    return kind == ModelKind::OU ? "ou" : "igbm";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "ou" || s == "OU") return ModelKind::OU;
    if (s == "igbm" || s == "IGBM") return ModelKind::IGBM;
    throw ValidationError("unknown model kind '" + s + "' (expected ou or igbm)");
}

double ModelParams::domain_lower() const {
    return kind == ModelKind::OU ? -std::numeric_limits<double>::infinity() : 0.0;
}

double ModelParams::sigma_at(double x) const {
    return kind == ModelKind::OU ? sigma : sigma * x;
}

std::pair<double, double> ModelParams::working_domain() const {
    if (kind == ModelKind::OU) {
        const double half = 10.0 * sigma / std::sqrt(2.0 * mu);
        return {L - half, L + half};
    }
    return {1e-4 * L, 10.0 * L};
}

void ModelParams::validate() const {
    if (!(mu > 0)) throw ValidationError("mu must be > 0");
    if (!(sigma > 0)) throw ValidationError("sigma must be > 0");
    if (!(rho > 0)) throw ValidationError("rho must be > 0");
    if (!(epsilon > 0)) throw ValidationError("epsilon must be > 0");
    if (!(lambda >= 0)) throw ValidationError("lambda must be >= 0");
    if (kind == ModelKind::IGBM && !(L > 0)) throw ValidationError("IGBM requires L > 0");
    if (!std::isfinite(L)) throw ValidationError("L must be finite");
}

IgbmConstants igbm_constants(const ModelParams& params) {
    if (params.kind != ModelKind::IGBM) {
        throw ValidationError("igbm_constants: model kind must be IGBM");
    }
    const double s2 = params.sigma * params.sigma;
    const double mu = params.mu;
    const double a =
        (std::sqrt(s2 * s2 + 4 * (mu + 2 * params.rho) * s2 + 4 * mu * mu) - (2 * mu + s2)) /
        (2 * s2);
    return {a, 2 * mu / s2 + 2 * a + 2, 2 * mu * params.L / s2};
}

FundamentalPair::FundamentalPair(const ModelParams& params) : params_(params) {
    params_.validate();
    if (params_.kind == ModelKind::IGBM) igbm_ = igbm_constants(params_);
}

double FundamentalPair::domain_lower() const { return params_.domain_lower(); }

double FundamentalPair::plus(double x) const {
    if (params_.kind == ModelKind::OU) {
        return specfun::ou_psi(x - params_.L, +1, params_.mu, params_.sigma, params_.rho).value;
    }
    const auto [a, b, c] = igbm_;
    return std::pow(x, -a) * specfun::tricomi_u({a, b, c / x}).value;
}

double FundamentalPair::minus(double x) const {
    if (params_.kind == ModelKind::OU) {
        return specfun::ou_psi(x - params_.L, -1, params_.mu, params_.sigma, params_.rho).value;
    }
    const auto [a, b, c] = igbm_;
    return std::pow(x, -a) * specfun::kummer_m({a, b, c / x}).value;
}

double FundamentalPair::plus_dx(double x) const {
    if (params_.kind == ModelKind::OU) {
        return specfun::ou_psi_dx(x - params_.L, +1, params_.mu, params_.sigma, params_.rho).value;
    }
    // d/dx [x^-a U(a,b,c/x)] = a (b-a-1) x^(-a-1) U(a+1,b,c/x)  (contiguous relation)
    const auto [a, b, c] = igbm_;
    return a * (b - a - 1) * std::pow(x, -a - 1) * specfun::tricomi_u({a + 1, b, c / x}).value;
}

double FundamentalPair::minus_dx(double x) const {
    if (params_.kind == ModelKind::OU) {
        return specfun::ou_psi_dx(x - params_.L, -1, params_.mu, params_.sigma, params_.rho).value;
    }
    const auto [a, b, c] = igbm_;
    const double z = c / x;
    const double m = specfun::kummer_m({a, b, z}).value;
    const double m1 = specfun::kummer_m({a + 1, b + 1, z}).value;
    return -a * std::pow(x, -a - 2) * (b * x * m + c * m1) / b;
}

double FundamentalPair::plus_dxx(double x) const {
    const double s = params_.sigma_at(x);
    return 2 * (params_.rho * plus(x) - params_.mu * (params_.L - x) * plus_dx(x)) / (s * s);
}

double FundamentalPair::minus_dxx(double x) const {
    const double s = params_.sigma_at(x);
    return 2 * (params_.rho * minus(x) - params_.mu * (params_.L - x) * minus_dx(x)) / (s * s);
}

FundamentalPair fundamental_pair(const ModelParams& params) { return FundamentalPair(params); }

double generator_residual(double phi, double phi_dx, double phi_dxx, double x,
                          const ModelParams& params) {
    const double s = params.sigma_at(x);
    return params.rho * phi - params.mu * (params.L - x) * phi_dx - 0.5 * s * s * phi_dxx;
}

double first_passage_laplace(double x, double y, const ModelParams& params) {
    if (params.kind != ModelKind::IGBM) {
        throw ValidationError("first_passage_laplace: model kind must be IGBM");
    }
    if (!(x > 0) || x > y) throw DomainError("first_passage_laplace: requires 0 < x <= y");
    if (x == y) return 1.0;
    FundamentalPair pair(params);
    return pair.plus(x) / pair.plus(y);
}

namespace {

double k_indicator(double y, const ModelParams& params, double sgn) {
    if (params.kind != ModelKind::IGBM) {
        throw ValidationError("k0/km1: model kind must be IGBM");
    }
    if (!(y > 0)) throw DomainError("k0/km1: requires y > 0");
    const auto [a, b, c] = igbm_constants(params);
    const double lr = params.lambda / params.rho;
    const double u = specfun::tricomi_u({a, b, c / y}).value;
    return std::pow(c / y, -a) / u * (y - params.epsilon + sgn * lr) -
           sgn * (lr + sgn * params.epsilon);
}

}  // namespace

double k0(double y, const ModelParams& params) { return k_indicator(y, params, +1.0); }

double km1(double y, const ModelParams& params) { return k_indicator(y, params, -1.0); }

}  // namespace spreadband
