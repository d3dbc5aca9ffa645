#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "corptax/scenarios.hpp"
#include "corptax/taxcode.hpp"

using namespace corptax;

TEST_CASE("null scenario produces zero changes and an undefined multiplier", "[scenarios]")
{
    Scenario sc = scenario_null();
    sc.horizon = 60;
    const ReformResult r = run_scenario(sc);
    for (const auto& [name, st] : r.stats) {
        INFO(name);
        CHECK(std::abs(st.long_run_change) < 1e-10);
        CHECK(std::abs(st.impact_dev) < 1e-10);
        CHECK_FALSE(st.multiplier_defined);
    }
}

TEST_CASE("an unmarked no-change scenario is rejected", "[scenarios]")
{
    Scenario sc = scenario_null();
    sc.is_null = false;
    CHECK_THROWS_AS(run_scenario(sc), std::invalid_argument);
}

TEST_CASE("solver failures carry the scenario name", "[scenarios]")
{
    Scenario sc = scenario_tcja17_baseline();
    sc.horizon = 6; // far too short for the reform to settle
    sc.cum_periods = 5;
    CHECK_THROWS_WITH(run_scenario(sc), Catch::Matchers::ContainsSubstring("tcja17-baseline"));
}

TEST_CASE("registry scenarios carry the documented tax codes", "[scenarios]")
{
    const Scenario tcja = scenario_tcja17();
    CHECK(tcja.spec_pre.policy.tau_corp == 0.35);
    CHECK(tcja.spec_pre.policy.sched.rate_dbal == 0.4823);
    CHECK(tcja.policy_post.tau_corp == 0.21);
    CHECK(tcja.policy_post.sched.rate_dbal == 0.8305);
    CHECK(tcja.new_investment_only);
    CHECK(tcja.spec_pre.variant == Variant::extended);
    CHECK(tcja.spec_pre.eta == 0.55);

    const Scenario ken = scenario_kennedy();
    CHECK(ken.spec_pre.policy.tau_corp == 0.52);
    CHECK(ken.spec_pre.policy.sched.rate_dbal == 0.10);
    CHECK(ken.policy_post.tau_corp == 0.48);
    CHECK(ken.policy_post.sched.rate_dbal == 0.1857);
    CHECK(ken.spec_pre.eta == 0.70);

    CHECK_THROWS_AS(scenario_by_name("nope"), std::invalid_argument);
    for (const auto& name : scenario_names()) CHECK(scenario_by_name(name).name == name);
}

TEST_CASE("the reform moves the schedule PDV from about 0.94 to about 0.99", "[scenarios]")
{
    const Scenario tcja = scenario_tcja17();
    const double beta = tcja.spec_pre.beta;
    CHECK(pdv_of_schedule(tcja.spec_pre.policy.sched.rate_dbal, beta) ==
          Catch::Approx(0.94).margin(0.005));
    CHECK(pdv_of_schedule(tcja.policy_post.sched.rate_dbal, beta) ==
          Catch::Approx(0.99).margin(0.005));
}

TEST_CASE("pre-reform wedges match the era anchors", "[scenarios]")
{
    const Scenario tcja = scenario_tcja17();
    const Scenario ken = scenario_kennedy();
    CHECK(wedge_report(tcja.spec_pre.policy, tcja.spec_pre.beta, tcja.spec_pre.alpha_c).wedge ==
          Catch::Approx(0.97).margin(0.005));
    CHECK(wedge_report(ken.spec_pre.policy, ken.spec_pre.beta, ken.spec_pre.alpha_c).wedge ==
          Catch::Approx(0.72).margin(0.005));
    CHECK(wedge_report(ken.policy_post, ken.spec_pre.beta, ken.spec_pre.alpha_c).wedge ==
          Catch::Approx(0.84).margin(0.005));
}

TEST_CASE("opposite reform profiles: payouts for 2017, investment for the 1960s", "[scenarios]")
{
    const ReformResult tcja = run_scenario(scenario_tcja17());
    const ReformResult ken = run_scenario(scenario_kennedy());

    // revenue-losing expansionary reforms carry positive GDP multipliers
    CHECK(tcja.revenue_loss_cum > 0.0);
    CHECK(ken.revenue_loss_cum > 0.0);
    CHECK(tcja.stat("gdp").multiplier > 0.0);
    CHECK(ken.stat("gdp").multiplier > 0.0);

    // 2017: payouts move more than c-corp investment; 1960s: the reverse,
    // with payouts barely moving at all
    CHECK(tcja.stat("payout").impact_dev > tcja.stat("investment_c").impact_dev);
    CHECK(ken.stat("investment_c").impact_dev > ken.stat("payout").impact_dev);
    CHECK(ken.stat("investment_c").impact_dev > 0.05);
    CHECK(std::abs(ken.stat("payout").long_run_change) < 0.05);

    // the 1960s cut is far more expansionary per dollar of lost revenue
    CHECK(ken.stat("gdp").multiplier > 3.0 * tcja.stat("gdp").multiplier);
}

TEST_CASE("factor decomposition: depreciation policy drives the era difference", "[scenarios]")
{
    const FactorDecomposition d = decompose_factors(false);
    const double lr61 = d.r1961.stat("investment").long_run_change;
    const double lr17 = d.r2017.stat("investment").long_run_change;
    const double lr_sched = d.sched_1961.stat("investment").long_run_change;
    const double lr_rate = d.rate_1961.stat("investment").long_run_change;
    const double lr_share = d.share_1961.stat("investment").long_run_change;

    CHECK(lr61 > lr17);
    // restoring the 1961 schedule moves the response most of the way
    CHECK(lr_sched - lr17 > lr_rate - lr17);
    CHECK(lr_sched - lr17 > lr_share - lr17);

    // the sum of one-at-a-time contributions falls short of the full 1961
    // response, so the factor interaction is positive
    double sum = 0.0, interaction = 0.0;
    for (const auto& [n, v] : d.one_at_a_time_sum)
        if (n == "investment") sum = v;
    for (const auto& [n, v] : d.interaction)
        if (n == "investment") interaction = v;
    CHECK(sum < lr61);
    CHECK(interaction == Catch::Approx(lr61 - sum).margin(1e-12));

    // the multiplier is insensitive to the pass-through share: the extra
    // stimulus and the extra revenue loss offset
    CHECK(std::abs(d.share_1961.stat("gdp").multiplier - d.r2017.stat("gdp").multiplier) < 0.05);
}

TEST_CASE("provision decomposition: similar stimulus, opposite revenue persistence",
          "[scenarios]")
{
    const ProvisionDecomposition d = decompose_provisions(scenario_tcja17());

    const double inv_rate = d.rate_only.stat("investment_c").long_run_change;
    const double inv_bonus = d.bonus_only.stat("investment_c").long_run_change;
    CHECK(inv_rate > 0.0);
    CHECK(inv_bonus > 0.0);
    // similar magnitudes
    CHECK(inv_rate / inv_bonus > 1.0 / 3.0);
    CHECK(inv_rate / inv_bonus < 3.0);

    // the provisions partially offset each other
    double interaction_inv = 0.0;
    for (const auto& [name, v] : d.interaction)
        if (name == "investment_c") interaction_inv = v;
    CHECK(interaction_inv < 0.0);

    // revenue: the rate cut is a permanent loss, the schedule change a
    // transitory one
    auto revenue_dev = [](const ReformResult& r, int t) {
        return r.reform_path.period(t)[var::tax_corp] -
               r.baseline_path.period(t)[var::tax_corp];
    };
    const int last = d.combined.scenario.cum_periods - 1;
    CHECK(revenue_dev(d.rate_only, 0) < 0.0);
    CHECK(revenue_dev(d.bonus_only, 0) < 0.0);
    CHECK(std::abs(revenue_dev(d.bonus_only, last)) <
          0.5 * std::abs(revenue_dev(d.bonus_only, 0)));
    CHECK(std::abs(revenue_dev(d.rate_only, last)) >
          0.5 * std::abs(revenue_dev(d.rate_only, 0)));
}
