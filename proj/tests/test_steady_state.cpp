#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "corptax/scenarios.hpp"
#include "corptax/steady_state.hpp"

using namespace corptax;

namespace {

ModelSpec restricted(double tau_corp, double rate_dbal)
{
    BaselineParams p;
    p.gamma = 1.0;
    p.labor_c = 1.0;
    p.policy = TaxPolicy(tau_corp, DepreciationSchedule(rate_dbal), 0.0, 0.0);
    return ModelSpec::baseline(p);
}

} // namespace

TEST_CASE("analytic steady state: corner cases", "[solve-ss]")
{
    SECTION("no corporate tax, no distortion, no revenue")
    {
        const AnalyticSS a = analytic_steady_state(restricted(0.0, 0.5));
        CHECK(a.y == Catch::Approx(a.y_star).margin(1e-14));
        CHECK(a.tax_corp == 0.0);
        CHECK(a.distortion == Catch::Approx(0.0).margin(1e-14));
    }
    SECTION("full expensing removes the distortion but keeps revenue")
    {
        const AnalyticSS a = analytic_steady_state(restricted(0.35, 1.0));
        CHECK(a.distortion == Catch::Approx(0.0).margin(1e-14));
        CHECK(a.tax_corp > 0.0);
        // tax base equals rho * k under full expensing
        const double rho = rho_of_beta(0.94);
        CHECK(a.tax_base == Catch::Approx(rho * a.cap).epsilon(1e-12));
    }
    SECTION("early-1960s code: output roughly 16% below the undistorted level")
    {
        const AnalyticSS a = analytic_steady_state(restricted(0.52, 0.10));
        CHECK(a.distortion == Catch::Approx(0.16).margin(0.003));
    }
    SECTION("payout and revenue split the tax base by (1-tau)/tau")
    {
        const AnalyticSS a = analytic_steady_state(restricted(0.35, 0.4823));
        CHECK(a.payout / a.tax_corp == Catch::Approx((1.0 - 0.35) / 0.35).epsilon(1e-12));
    }
    SECTION("restriction is enforced")
    {
        CHECK_THROWS_AS(analytic_steady_state(spec_2017_baseline()), std::invalid_argument);
    }
}

TEST_CASE("numeric steady state matches the analytic one on a 5x5 policy grid", "[solve-ss]")
{
    const double taus[5] = {0.0, 0.15, 0.30, 0.45, 0.60};
    const double rates[5] = {0.07, 0.30, 0.55, 0.80, 1.0};
    for (double tau : taus)
        for (double d : rates) {
            ModelSpec m = restricted(tau, d);
            const AnalyticSS a = analytic_steady_state(m);
            const SteadyState n = solve_steady_state(m);
            INFO("tau=" << tau << " d=" << d);
            CHECK(n.at(var::out_c) == Catch::Approx(a.y).epsilon(1e-8));
            CHECK(n.at(var::cap_c) == Catch::Approx(a.cap).epsilon(1e-8));
            CHECK(n.at(var::payout_c) == Catch::Approx(a.payout).margin(1e-8 * (1 + a.payout)));
            CHECK(n.at(var::tax_corp) == Catch::Approx(a.tax_corp).margin(1e-8 * (1 + a.tax_corp)));
            CHECK(n.at(var::c) == Catch::Approx(a.consumption).epsilon(1e-8));
        }
}

TEST_CASE("2017 calibration reproduces the untargeted fiscal moments", "[solve-ss]")
{
    const SteadyState ss = solve_steady_state(spec_2017_baseline());
    CHECK(ss.moments.profit_over_gdp == Catch::Approx(0.08).margin(0.01));
    CHECK(ss.moments.payout_over_gdp == Catch::Approx(0.05).margin(0.01));
    CHECK(ss.moments.tax_corp_over_gdp == Catch::Approx(0.03).margin(0.01));
    CHECK(ss.moments.tax_indiv_over_gdp == Catch::Approx(0.10).margin(0.01));
    CHECK(ss.residual_norm < 1e-10);
}

TEST_CASE("full expensing collects revenue without distorting", "[solve-ss]")
{
    // single-sector restriction
    for (double tau : {0.10, 0.35, 0.52, 0.90}) {
        const SteadyState ss = solve_steady_state(restricted(tau, 1.0));
        const double rho = rho_of_beta(0.94);
        CHECK(ss.at(var::tax_base) ==
              Catch::Approx(rho * ss.at(var::cap_c)).epsilon(1e-8));
        CHECK(ss.at(var::tax_corp) > 0.0);
    }
    // and in the full two-sector economy
    BaselineParams p;
    p.policy = TaxPolicy(0.35, DepreciationSchedule(1.0), 0.135, 0.0);
    const SteadyState ss = solve_steady_state(ModelSpec::baseline(p));
    const double rho = rho_of_beta(p.beta);
    CHECK(ss.at(var::tax_base) == Catch::Approx(rho * ss.at(var::cap_c)).epsilon(1e-8));
    CHECK(ss.at(var::tax_corp) > 0.0);
}

TEST_CASE("steady-state identities", "[solve-ss]")
{
    for (const ModelSpec& m : {spec_2017_baseline(), spec_2017_extended()}) {
        const SteadyState ss = solve_steady_state(m);
        // payout + corporate tax = profit
        CHECK(ss.at(var::payout_c) + ss.at(var::tax_corp) ==
              Catch::Approx(ss.at(var::profit_c)).margin(1e-10));
        // investment replaces depreciation
        CHECK(ss.at(var::inv_c) == Catch::Approx(m.delta_c * ss.at(var::cap_c)).margin(1e-10));
        CHECK(ss.at(var::inv_pt) == Catch::Approx(m.delta_p * ss.at(var::cap_pt)).margin(1e-10));
        // undeducted stock consistent with the schedule
        const double d = m.policy.sched.rate_dbal;
        CHECK(ss.at(var::cap_sched_a) ==
              Catch::Approx((1.0 - d) * ss.at(var::inv_c) / d).margin(1e-9));
        // the capital shadow price implies the schedule PDV
        const double lambda_implied = (1.0 - ss.at(var::q_cap)) / m.policy.tau_corp;
        CHECK(lambda_implied ==
              Catch::Approx(pdv_of_schedule(d, m.beta)).margin(1e-10));
    }
}

TEST_CASE("a user-supplied guess converges to the same fixed point", "[solve-ss]")
{
    const ModelSpec m = spec_2017_baseline();
    const SteadyState ss = solve_steady_state(m);
    Eigen::VectorXd guess = ss.state * 1.17; // q's and sdf also scaled, still fine
    const SteadyState again = solve_steady_state(m, guess);
    for (int v = 0; v < var::count; ++v)
        CHECK(again.at(v) == Catch::Approx(ss.at(v)).margin(1e-8));
}

TEST_CASE("solver failures carry diagnostics", "[solve-ss]")
{
    SolverOptions opt;
    opt.max_iter = 0;
    CHECK_THROWS_WITH(solve_steady_state(spec_2017_baseline(), std::nullopt, opt),
                      Catch::Matchers::ContainsSubstring("residual max-norm") &&
                          Catch::Matchers::ContainsSubstring("worst equation"));

    Eigen::VectorXd bad = Eigen::VectorXd::Constant(var::count, -1.0);
    CHECK_THROWS_WITH(solve_steady_state(spec_2017_baseline(), bad),
                      Catch::Matchers::ContainsSubstring("inadmissible"));
}

TEST_CASE("calibrate_eta hits the receipts-share target", "[solve-ss]")
{
    const ModelSpec m = spec_2017_extended();

    SECTION("symmetric economy wants the symmetric weight")
    {
        ExtendedParams p;
        p.policy = TaxPolicy(0.0, DepreciationSchedule(0.5), 0.1, 0.0);
        const ModelSpec sym = ModelSpec::extended(p);
        CHECK(calibrate_eta(sym, 0.5) == Catch::Approx(0.5).margin(1e-4));
    }
    SECTION("2017 share target lands near the published weight")
    {
        const double eta = calibrate_eta(m, 0.60);
        CHECK(eta == Catch::Approx(0.55).margin(0.05));

        const double eta_receipts = calibrate_eta(m, 0.575);
        CHECK(eta_receipts == Catch::Approx(0.55).margin(0.01));
    }
    SECTION("1961 share target lands near the published weight")
    {
        const ModelSpec m61 = spec_1961_extended();
        CHECK(calibrate_eta(m61, 0.75) == Catch::Approx(0.70).margin(0.01));
    }
    SECTION("share is increasing in eta")
    {
        double prev = -1.0;
        for (double eta : {0.3, 0.5, 0.7}) {
            ExtendedParams p;
            p.eta = eta;
            p.policy = policy_2017_pre();
            const double share =
                ccorp_receipts_share(solve_steady_state(ModelSpec::extended(p)).view());
            CHECK(share > prev);
            prev = share;
        }
    }
    SECTION("unreachable target reports a bracketing failure")
    {
        CHECK_THROWS_WITH(calibrate_eta(m, 0.999999),
                          Catch::Matchers::ContainsSubstring("bracket"));
    }
}
