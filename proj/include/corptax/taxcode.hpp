#pragma once
#include <cmath>
#include <vector>

#include "corptax/validate.hpp"

namespace corptax {

// Declining-balance tax depreciation: a constant fraction rate_dbal of the
// still-undeducted stock of past investment is deducted each period, so the
// weight on investment made j periods ago is rate_dbal*(1-rate_dbal)^j and
// the weights sum to one. rate_dbal = 1 is full expensing.
struct DepreciationSchedule {
    double rate_dbal;

    explicit DepreciationSchedule(double rate) : rate_dbal(rate)
    {
        require_halfopen_unit(rate, "rate_dbal");
    }
};

// The corporate side is fully summarized by (tau_corp, sched); tau_indiv is a
// uniform individual income tax on labor, dividend and pass-through income;
// theta_waste is the share of total revenue burned as wasteful spending
// (the rest is rebated lump-sum).
struct TaxPolicy {
    double tau_corp;
    DepreciationSchedule sched;
    double tau_indiv;
    double theta_waste;

    TaxPolicy(double tau_corp_, DepreciationSchedule sched_, double tau_indiv_,
              double theta_waste_)
        : tau_corp(tau_corp_), sched(sched_), tau_indiv(tau_indiv_), theta_waste(theta_waste_)
    {
        require_unit_halfopen(tau_corp, "tau_corp");
        require_unit_halfopen(tau_indiv, "tau_indiv");
        require_unit_closed(theta_waste, "theta_waste");
    }
};

inline double rho_of_beta(double beta) { return (1.0 - beta) / beta; }

// Steady-state present value of the schedule's deductions per unit of
// investment, discounting at beta:
//   sum_j beta^j * d*(1-d)^j = d / (1 - beta*(1-d))
// Equals d*(1+rho)/(rho+d) with rho = (1-beta)/beta.
inline double pdv_of_schedule(double rate_dbal, double beta)
{
    require_halfopen_unit(rate_dbal, "rate_dbal");
    require_open01(beta, "beta");
    return rate_dbal / (1.0 - beta * (1.0 - rate_dbal));
}

// Inverse of pdv_of_schedule: the declining-balance rate whose steady-state
// PDV equals the given value. d = rho*pdv / (1 + rho - pdv).
inline double rate_from_pdv(double pdv, double beta)
{
    require_halfopen_unit(pdv, "pdv");
    require_open01(beta, "beta");
    const double rho = rho_of_beta(beta);
    return rho * pdv / (1.0 + rho - pdv);
}

// Bonus depreciation: fraction b of new investment expensed immediately, the
// remainder follows the regular schedule. PDV composes as b + (1-b)*base.
inline double apply_bonus(double bonus_fraction, double base_pdv)
{
    require_unit_closed(bonus_fraction, "bonus_fraction");
    require_unit_closed(base_pdv, "base_pdv");
    return bonus_fraction + (1.0 - bonus_fraction) * base_pdv;
}

// Multiplicative distortion on the return to c-corporate investment,
// (1-tau)/(1-lambda*tau). Equal to one when tau = 0 or lambda = 1.
inline double corporate_wedge(double tau_corp, double lambda)
{
    return (1.0 - tau_corp) / (1.0 - lambda * tau_corp);
}

// Long-run output shortfall relative to the untaxed economy,
// 1 - wedge^(alpha/(1-alpha)).
inline double output_distortion(double wedge, double alpha)
{
    return 1.0 - std::pow(wedge, alpha / (1.0 - alpha));
}

struct WedgeReport {
    double lambda_ss;  // steady-state PDV of the schedule
    double wedge;      // (1-tau)/(1-lambda*tau)
    double distortion; // 1 - wedge^(alpha/(1-alpha))
};

// rate_dbal = 0 (never deductible, lambda = 0) is admitted here even though
// DepreciationSchedule excludes it: the report is a pure formula and the
// corner is well defined.
inline WedgeReport wedge_report(double tau_corp, double rate_dbal, double beta, double alpha)
{
    require_unit_halfopen(tau_corp, "tau_corp");
    require_unit_closed(rate_dbal, "rate_dbal");
    require_open01(beta, "beta");
    require_open01(alpha, "alpha");
    WedgeReport r;
    r.lambda_ss = (rate_dbal == 0.0) ? 0.0 : pdv_of_schedule(rate_dbal, beta);
    r.wedge = corporate_wedge(tau_corp, r.lambda_ss);
    r.distortion = output_distortion(r.wedge, alpha);
    return r;
}

inline WedgeReport wedge_report(const TaxPolicy& policy, double beta, double alpha)
{
    return wedge_report(policy.tau_corp, policy.sched.rate_dbal, beta, alpha);
}

struct GridRange {
    double lo;
    double hi;
    int n;
};

// Rectangular map of output distortions over the policy space (tau, lambda_ss),
// row-major with tau as the slow index. lambda is the schedule PDV itself;
// convert a declining-balance rate with pdv_of_schedule first.
struct DistortionGrid {
    std::vector<double> tau;
    std::vector<double> lambda;
    std::vector<double> distortion; // distortion[i*lambda.size() + j]

    double at(int i, int j) const { return distortion[i * lambda.size() + j]; }
};

inline DistortionGrid distortion_grid(const GridRange& tau_range, const GridRange& lambda_range,
                                      double alpha)
{
    require_unit_halfopen(tau_range.lo, "tau_range.lo");
    require_unit_halfopen(tau_range.hi, "tau_range.hi");
    require(lambda_range.lo > 0.0 && lambda_range.lo <= 1.0 && lambda_range.hi > 0.0 &&
                lambda_range.hi <= 1.0,
            "lambda_range must lie in (0,1]");
    require(tau_range.n >= 2, "tau_range.n must be >= 2");
    require(lambda_range.n >= 2, "lambda_range.n must be >= 2");
    require_open01(alpha, "alpha");

    DistortionGrid g;
    g.tau.resize(tau_range.n);
    g.lambda.resize(lambda_range.n);
    for (int i = 0; i < tau_range.n; ++i)
        g.tau[i] = tau_range.lo + (tau_range.hi - tau_range.lo) * i / (tau_range.n - 1);
    for (int j = 0; j < lambda_range.n; ++j)
        g.lambda[j] =
            lambda_range.lo + (lambda_range.hi - lambda_range.lo) * j / (lambda_range.n - 1);

    g.distortion.resize(static_cast<size_t>(tau_range.n) * lambda_range.n);
    for (int i = 0; i < tau_range.n; ++i)
        for (int j = 0; j < lambda_range.n; ++j)
            g.distortion[i * g.lambda.size() + j] =
                output_distortion(corporate_wedge(g.tau[i], g.lambda[j]), alpha);
    return g;
}

} // namespace corptax
