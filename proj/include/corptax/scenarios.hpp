#pragma once
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "corptax/model.hpp"
#include "corptax/steady_state.hpp"
#include "corptax/transition.hpp"

namespace corptax {

// A reform experiment: solve the pre-reform steady state, switch the tax code
// permanently and without anticipation at t = 0, and compare the perfect-
// foresight path against the no-reform baseline. When new_investment_only is
// set, a schedule change applies only to investment made from t = 0 on; the
// old undeducted stock keeps its old rate.
struct Scenario {
    std::string name;
    ModelSpec spec_pre;
    TaxPolicy policy_post;
    bool new_investment_only = true;
    bool is_null = false; // explicitly a no-change scenario
    int horizon = 300;
    int cum_periods = 20; // window for cumulative statistics
};

struct VarStat {
    double long_run_change = 0.0; // ratio of cumulative sums minus one
    double multiplier = 0.0;      // cumulative change per unit of lost corporate revenue
    bool multiplier_defined = false;
    double impact_dev = 0.0;      // relative deviation in the first reform year
};

struct ReformResult {
    Scenario scenario;
    SteadyState pre;
    SteadyState post;
    TransitionPath baseline_path;
    TransitionPath reform_path;
    std::vector<std::pair<std::string, VarStat>> stats;
    double revenue_loss_cum = 0.0; // sum of (baseline - reform) corporate revenue

    const VarStat& stat(const std::string& name) const
    {
        for (const auto& [k, v] : stats)
            if (k == name) return v;
        throw std::out_of_range("no statistic named " + name);
    }
};

namespace detail {

inline std::vector<std::pair<std::string, std::function<double(std::span<const double>)>>>
stat_extractors(double price_ref)
{
    using Fn = std::function<double(std::span<const double>)>;
    std::vector<std::pair<std::string, Fn>> out;
    // headline aggregates hold the relative price at its pre-reform value, so
    // they track quantities rather than valuation shifts; the current-price
    // variants are emitted alongside for sensitivity
    out.emplace_back("gdp", [price_ref](std::span<const double> s) {
        return aggregates_at_price(s, price_ref).gdp;
    });
    out.emplace_back("investment", [price_ref](std::span<const double> s) {
        return aggregates_at_price(s, price_ref).investment;
    });
    out.emplace_back("payout", [](std::span<const double> s) { return s[var::payout_c]; });
    out.emplace_back("revenue_corp", [](std::span<const double> s) { return s[var::tax_corp]; });
    out.emplace_back("gdp_current_price",
                     [](std::span<const double> s) { return aggregates(s).gdp; });
    out.emplace_back("investment_current_price",
                     [](std::span<const double> s) { return aggregates(s).investment; });
    out.emplace_back("output_c", [](std::span<const double> s) { return s[var::out_c]; });
    out.emplace_back("investment_c", [](std::span<const double> s) { return s[var::inv_c]; });
    out.emplace_back("output_pt", [](std::span<const double> s) { return s[var::out_pt]; });
    out.emplace_back("investment_pt", [](std::span<const double> s) { return s[var::inv_pt]; });
    out.emplace_back("consumption_c", [](std::span<const double> s) { return s[var::c]; });
    out.emplace_back("consumption_pt", [](std::span<const double> s) { return s[var::c_pt]; });
    out.emplace_back("labor_c", [](std::span<const double> s) { return s[var::labor_c]; });
    out.emplace_back("price_pt", [](std::span<const double> s) { return s[var::price_pt]; });
    out.emplace_back("revenue_total", [](std::span<const double> s) { return s[var::tax_total]; });
    return out;
}

} // namespace detail

inline ReformResult run_scenario(const Scenario& sc, const SolverOptions& opt = {})
{
    require(sc.cum_periods > 0 && sc.cum_periods <= sc.horizon,
            "cum_periods must be in [1, horizon]");
    const bool policy_changed =
        sc.spec_pre.policy.tau_corp != sc.policy_post.tau_corp ||
        sc.spec_pre.policy.sched.rate_dbal != sc.policy_post.sched.rate_dbal ||
        sc.spec_pre.policy.tau_indiv != sc.policy_post.tau_indiv ||
        sc.spec_pre.policy.theta_waste != sc.policy_post.theta_waste;
    require(policy_changed || sc.is_null,
            "scenario \"" + sc.name + "\" changes no policy parameter and is not marked null");

    try {
        SteadyState pre = solve_steady_state(sc.spec_pre, std::nullopt, opt);
        SteadyState post =
            solve_steady_state(sc.spec_pre.with_policy(sc.policy_post), std::nullopt, opt);
        // when the schedule itself is unchanged the vintage split is empty
        // bookkeeping, so keep the whole stock in one slot
        const bool sched_changed =
            sc.spec_pre.policy.sched.rate_dbal != sc.policy_post.sched.rate_dbal;
        const VintagePolicy vintage =
            sched_changed && sc.new_investment_only
                ? VintagePolicy(sc.spec_pre.policy.sched, sc.policy_post.sched, 0)
                : VintagePolicy::uniform(sc.policy_post.sched);
        TransitionPath reform_path =
            solve_transition(make_reform_problem(pre, post, vintage, sc.horizon), opt);
        TransitionPath baseline_path = flat_path(pre, sc.horizon);
        ReformResult r{sc,
                       std::move(pre),
                       std::move(post),
                       std::move(baseline_path),
                       std::move(reform_path),
                       {},
                       0.0};

        const auto extract = detail::stat_extractors(r.pre.at(var::price_pt));
        double revenue_loss = 0.0;
        for (int t = 0; t < sc.cum_periods; ++t)
            revenue_loss += r.baseline_path.period(t)[var::tax_corp] -
                            r.reform_path.period(t)[var::tax_corp];
        r.revenue_loss_cum = revenue_loss;
        const double revenue_scale = std::abs(r.pre.at(var::tax_corp)) * sc.cum_periods;
        const bool mult_defined = std::abs(revenue_loss) > 1e-9 * std::max(1.0, revenue_scale);

        for (const auto& [name, get] : extract) {
            double sum_reform = 0.0, sum_base = 0.0;
            for (int t = 0; t < sc.cum_periods; ++t) {
                sum_reform += get(r.reform_path.period(t));
                sum_base += get(r.baseline_path.period(t));
            }
            VarStat st;
            st.long_run_change = sum_reform / sum_base - 1.0;
            st.multiplier_defined = mult_defined;
            st.multiplier = mult_defined ? (sum_reform - sum_base) / revenue_loss : 0.0;
            const double b0 = get(r.baseline_path.period(0));
            st.impact_dev = (get(r.reform_path.period(0)) - b0) / b0;
            r.stats.emplace_back(name, st);
        }
        return r;
    } catch (const SolverError& e) {
        throw SolverError("scenario \"" + sc.name + "\": " + e.what());
    }
}

// ---- calibration presets ----------------------------------------------------

inline TaxPolicy policy_2017_pre()
{
    return TaxPolicy(0.35, DepreciationSchedule(0.4823), 0.135, 0.0);
}

inline TaxPolicy policy_tcja_post()
{
    return TaxPolicy(0.21, DepreciationSchedule(0.8305), 0.135, 0.0);
}

inline TaxPolicy policy_1961_pre(double tau_indiv = 0.135)
{
    return TaxPolicy(0.52, DepreciationSchedule(0.10), tau_indiv, 0.0);
}

inline TaxPolicy policy_kennedy_post(double tau_indiv = 0.135)
{
    return TaxPolicy(0.48, DepreciationSchedule(0.1857), tau_indiv, 0.0);
}

inline ModelSpec spec_2017_baseline()
{
    return ModelSpec::baseline({.policy = policy_2017_pre()});
}

inline ModelSpec spec_2017_extended()
{
    return ModelSpec::extended({.eta = 0.55, .policy = policy_2017_pre()});
}

inline ModelSpec spec_1961_extended(double tau_indiv = 0.135)
{
    return ModelSpec::extended({.eta = 0.70, .policy = policy_1961_pre(tau_indiv)});
}

// ---- built-in scenario registry ---------------------------------------------

inline Scenario scenario_null()
{
    Scenario sc{"null", spec_2017_baseline(), policy_2017_pre()};
    sc.is_null = true;
    return sc;
}

inline Scenario scenario_tcja17()
{
    return {"tcja17", spec_2017_extended(), policy_tcja_post()};
}

inline Scenario scenario_tcja17_baseline()
{
    return {"tcja17-baseline", spec_2017_baseline(), policy_tcja_post()};
}

inline Scenario scenario_tcja17_rate_only()
{
    return {"tcja17-rate-only", spec_2017_extended(),
            TaxPolicy(0.21, DepreciationSchedule(0.4823), 0.135, 0.0)};
}

inline Scenario scenario_tcja17_bonus_only()
{
    return {"tcja17-bonus-only", spec_2017_extended(),
            TaxPolicy(0.35, DepreciationSchedule(0.8305), 0.135, 0.0)};
}

inline Scenario scenario_kennedy()
{
    return {"kennedy", spec_1961_extended(), policy_kennedy_post()};
}

inline std::vector<std::string> scenario_names()
{
    return {"null",   "tcja17",           "tcja17-baseline", "tcja17-rate-only",
            "tcja17-bonus-only", "kennedy"};
}

inline Scenario scenario_by_name(const std::string& name)
{
    if (name == "null") return scenario_null();
    if (name == "tcja17") return scenario_tcja17();
    if (name == "tcja17-baseline") return scenario_tcja17_baseline();
    if (name == "tcja17-rate-only") return scenario_tcja17_rate_only();
    if (name == "tcja17-bonus-only") return scenario_tcja17_bonus_only();
    if (name == "kennedy") return scenario_kennedy();
    throw std::invalid_argument("unknown scenario \"" + name + "\"");
}

// ---- decompositions ----------------------------------------------------------

// Rate cut vs accelerated depreciation, run one at a time and combined.
// interaction = combined - rate_only - bonus_only, per long-run statistic.
struct ProvisionDecomposition {
    ReformResult rate_only;
    ReformResult bonus_only;
    ReformResult combined;
    std::vector<std::pair<std::string, double>> interaction;
};

inline ProvisionDecomposition decompose_provisions(const Scenario& base,
                                                   const SolverOptions& opt = {})
{
    const TaxPolicy& pre = base.spec_pre.policy;
    const TaxPolicy& post = base.policy_post;
    require(pre.tau_corp != post.tau_corp && pre.sched.rate_dbal != post.sched.rate_dbal,
            "decompose_provisions needs a scenario changing both the rate and the schedule");

    Scenario rate = base;
    rate.name = base.name + "-rate-only";
    rate.policy_post = TaxPolicy(post.tau_corp, pre.sched, pre.tau_indiv, pre.theta_waste);
    Scenario bonus = base;
    bonus.name = base.name + "-bonus-only";
    bonus.policy_post = TaxPolicy(pre.tau_corp, post.sched, pre.tau_indiv, pre.theta_waste);

    ProvisionDecomposition d{run_scenario(rate, opt), run_scenario(bonus, opt),
                             run_scenario(base, opt), {}};
    for (const auto& [name, st] : d.combined.stats)
        d.interaction.emplace_back(name, st.long_run_change -
                                             d.rate_only.stat(name).long_run_change -
                                             d.bonus_only.stat(name).long_run_change);
    return d;
}

// The same rate cut applied to the 1961 and 2017 economies, then to 2017 with
// one 1961 feature (schedule, rate, or pass-through weight) restored at a
// time. one_at_a_time_sum = 2017 response plus the three single-factor
// deltas; interaction = full 1961 response minus that sum.
struct FactorDecomposition {
    ReformResult r1961;
    ReformResult r2017;
    ReformResult sched_1961;  // 2017 economy, 1961 depreciation schedule
    ReformResult rate_1961;   // 2017 economy, 1961 tax rate
    ReformResult share_1961;  // 2017 economy, 1961 CES weight
    std::vector<std::pair<std::string, double>> one_at_a_time_sum;
    std::vector<std::pair<std::string, double>> interaction;
    bool proportional_cut = false;
    double cut_size = 0.10;
};

inline FactorDecomposition decompose_factors(bool proportional_cut = false, double cut_size = 0.10,
                                             int horizon = 300, double tau_indiv_1961 = 0.135,
                                             const SolverOptions& opt = {}, int cum_periods = 20)
{
    auto cut = [&](const TaxPolicy& p) {
        const double tau = proportional_cut ? p.tau_corp * (1.0 - cut_size)
                                            : p.tau_corp - cut_size;
        require(tau >= 0.0, "rate cut drives tau_corp negative");
        return TaxPolicy(tau, p.sched, p.tau_indiv, p.theta_waste);
    };
    auto make = [&](std::string name, const ModelSpec& spec) {
        Scenario sc{std::move(name), spec, cut(spec.policy)};
        sc.horizon = horizon;
        sc.cum_periods = cum_periods;
        return run_scenario(sc, opt);
    };

    const ModelSpec base17 = spec_2017_extended();
    const ModelSpec base61 = spec_1961_extended(tau_indiv_1961);

    FactorDecomposition d{
        make("rate-cut-1961", base61),
        make("rate-cut-2017", base17),
        make("rate-cut-2017-sched61",
             base17.with_policy(TaxPolicy(base17.policy.tau_corp, base61.policy.sched,
                                          base17.policy.tau_indiv, base17.policy.theta_waste))),
        make("rate-cut-2017-rate61",
             base17.with_policy(TaxPolicy(base61.policy.tau_corp, base17.policy.sched,
                                          base17.policy.tau_indiv, base17.policy.theta_waste))),
        make("rate-cut-2017-share61",
             ModelSpec::extended({.eta = base61.eta, .policy = base17.policy})),
        {},
        {},
        proportional_cut,
        cut_size};

    for (const auto& [name, st] : d.r1961.stats) {
        const double base = d.r2017.stat(name).long_run_change;
        const double sum = base + (d.sched_1961.stat(name).long_run_change - base) +
                           (d.rate_1961.stat(name).long_run_change - base) +
                           (d.share_1961.stat(name).long_run_change - base);
        d.one_at_a_time_sum.emplace_back(name, sum);
        d.interaction.emplace_back(name, st.long_run_change - sum);
    }
    return d;
}

} // namespace corptax
