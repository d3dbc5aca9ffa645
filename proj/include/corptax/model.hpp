#pragma once
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>

#include "corptax/dual.hpp"
#include "corptax/taxcode.hpp"
#include "corptax/validate.hpp"

namespace corptax {

enum class Variant { baseline, extended };

// State layout: one slot per endogenous variable per period. The same layout
// serves both variants; the baseline pins labor and utilization through its
// own residuals. Suffix _pt marks the pass-through sector.
namespace var {
constexpr int c = 0;            // c-corp good consumption
constexpr int c_pt = 1;         // pass-through good consumption
constexpr int c_bundle = 2;     // consumption aggregate
constexpr int price_pt = 3;     // relative price of the pass-through good
constexpr int wage_c = 4;
constexpr int wage_pt = 5;
constexpr int labor_c = 6;
constexpr int labor_pt = 7;
constexpr int util = 8;         // c-corp capital utilization
constexpr int cap_c = 9;        // k_t, installed at t-1
constexpr int cap_pt = 10;
constexpr int inv_c = 11;
constexpr int inv_pt = 12;
constexpr int out_c = 13;
constexpr int out_pt = 14;
constexpr int profit_c = 15;
constexpr int profit_pt = 16;
constexpr int payout_c = 17;    // dividends d
constexpr int payout_pt = 18;   // pass-through income
constexpr int tax_base = 19;
constexpr int tax_corp = 20;
constexpr int tax_indiv = 21;
constexpr int tax_total = 22;
constexpr int transfer = 23;
constexpr int spending = 24;
constexpr int sdf = 25;         // one-period discount factor Lambda_{t,t+1}
constexpr int q_cap = 26;       // shadow value of installed capital
constexpr int q_sched_b = 27;   // shadow value of the pre-reform undeducted stock
constexpr int q_sched_a = 28;   // shadow value of the post-reform undeducted stock
constexpr int cap_sched_b = 29; // undeducted investment under the old schedule
constexpr int cap_sched_a = 30; // undeducted investment under the new schedule
constexpr int count = 31;
} // namespace var

inline const char* var_name(int v)
{
    static const std::array<const char*, var::count> names = {
        "c",        "c_pt",      "c_bundle",  "price_pt",  "wage_c",      "wage_pt",
        "labor_c",  "labor_pt",  "util",      "cap_c",     "cap_pt",      "inv_c",
        "inv_pt",   "out_c",     "out_pt",    "profit_c",  "profit_pt",   "payout_c",
        "payout_pt", "tax_base", "tax_corp",  "tax_indiv", "tax_total",   "transfer",
        "spending", "sdf",       "q_cap",     "q_sched_b", "q_sched_a",   "cap_sched_b",
        "cap_sched_a"};
    return names[v];
}

// Separate undeducted-investment stocks so a schedule change can apply to new
// investment only: investment joins the after-stock once t >= reform_period,
// the before-stock keeps deducting at its old rate until exhausted.
struct VintagePolicy {
    DepreciationSchedule sched_before;
    DepreciationSchedule sched_after;
    int reform_period;

    VintagePolicy(DepreciationSchedule before, DepreciationSchedule after, int reform)
        : sched_before(before), sched_after(after), reform_period(reform)
    {
        require(reform >= 0, "reform_period must be >= 0");
    }

    bool active_after(int t) const { return t >= reform_period; }

    // Degenerate policy for steady states and single-stock runs: one schedule,
    // new-investment flag on at every date, the whole stock lives in the
    // after-slot.
    static VintagePolicy uniform(DepreciationSchedule s)
    {
        VintagePolicy vp(s, s, 0);
        vp.reform_period = std::numeric_limits<int>::min();
        return vp;
    }
};

struct BaselineParams {
    double beta = 0.94;
    double sigma = 1.0;
    double gamma = 0.575;   // Cobb-Douglas weight on the c-corp good
    double alpha_c = 0.35;
    double alpha_p = 0.35;
    double delta_c = 0.10;
    double delta_p = 0.10;
    double labor_c = 0.575; // fixed sectoral labor supply
    TaxPolicy policy{0.35, DepreciationSchedule(0.4823), 0.135, 0.0}; // 2017 US code
};

struct ExtendedParams {
    double beta = 0.94;
    double sigma = 1.0;
    double eta = 0.55;      // CES weight on the c-corp good
    double epsilon = 0.33;  // CES exponent; 0 selects the Cobb-Douglas bundle
    double phi = 4.0;       // labor disutility curvature
    double alpha_c = 0.35;
    double alpha_p = 0.35;
    double delta0 = 0.10;   // depreciation at u = 1
    double delta_p = 0.10;
    double delta2 = 0.10;   // curvature of depreciation in utilization
    double labor_c = 0.575; // only used when fix_labor is set
    bool fix_labor = false;
    bool fix_utilization = false;
    TaxPolicy policy{0.35, DepreciationSchedule(0.4823), 0.135, 0.0}; // 2017 US code
};

// One economy: parameters plus variant. delta_c doubles as delta0 (the u = 1
// depreciation rate) in the extended variant, and delta1 is pinned to
// 1/beta - (1 - delta0) at construction so that utilization is one in steady
// state.
struct ModelSpec {
    Variant variant;
    double beta;
    double sigma;
    double gamma;
    double eta;
    double epsilon_ces;
    double phi;
    double alpha_c, alpha_p;
    double delta_c, delta_p;
    double delta1, delta2;
    double labor_c_fixed;
    bool fix_labor;
    bool fix_utilization;
    TaxPolicy policy;

    static ModelSpec baseline(const BaselineParams& p)
    {
        ModelSpec m{Variant::baseline, p.beta, p.sigma, p.gamma, p.gamma, 0.0,
                    0.0, p.alpha_c, p.alpha_p, p.delta_c, p.delta_p,
                    0.0, 0.0, p.labor_c, true, true, p.policy};
        m.delta1 = 1.0 / p.beta - (1.0 - p.delta_c);
        require_open01(p.beta, "beta");
        require_positive(p.sigma, "sigma");
        require_halfopen_unit(p.gamma, "gamma");
        require_open01(p.alpha_c, "alpha_c");
        require_open01(p.alpha_p, "alpha_p");
        require_halfopen_unit(p.delta_c, "delta_c");
        require_halfopen_unit(p.delta_p, "delta_p");
        require_halfopen_unit(p.labor_c, "labor_c");
        require((p.gamma == 1.0) == (p.labor_c == 1.0),
                "single-sector restriction needs gamma = 1 and labor_c = 1 together");
        return m;
    }

    static ModelSpec extended(const ExtendedParams& p)
    {
        ModelSpec m{Variant::extended, p.beta, p.sigma, p.eta, p.eta, p.epsilon,
                    p.phi, p.alpha_c, p.alpha_p, p.delta0, p.delta_p,
                    0.0, p.delta2, p.labor_c, p.fix_labor, p.fix_utilization, p.policy};
        m.delta1 = 1.0 / p.beta - (1.0 - p.delta0);
        require_open01(p.beta, "beta");
        require_positive(p.sigma, "sigma");
        require_halfopen_unit(p.eta, "eta");
        require(p.epsilon < 1.0, range_msg("epsilon", p.epsilon, "(-inf,1)"));
        require_positive(p.phi, "phi");
        require_open01(p.alpha_c, "alpha_c");
        require_open01(p.alpha_p, "alpha_p");
        require_halfopen_unit(p.delta0, "delta0");
        require_halfopen_unit(p.delta_p, "delta_p");
        require(p.delta2 >= 0.0, range_msg("delta2", p.delta2, "[0,inf)"));
        require_halfopen_unit(p.labor_c, "labor_c");
        if (p.eta == 1.0)
            require(p.epsilon == 0.0 && p.fix_labor && p.labor_c == 1.0,
                    "single-sector restriction needs the Cobb-Douglas bundle and fixed unit labor");
        return m;
    }

    ModelSpec with_policy(const TaxPolicy& pol) const
    {
        ModelSpec m = *this;
        m.policy = pol;
        return m;
    }

    double taste_weight() const { return variant == Variant::baseline ? gamma : eta; }
    bool cobb_douglas_bundle() const
    {
        return variant == Variant::baseline || epsilon_ces == 0.0;
    }
    bool labor_is_fixed() const { return variant == Variant::baseline || fix_labor; }
    bool util_is_fixed() const { return variant == Variant::baseline || fix_utilization; }

    // gamma = l = 1: the pass-through sector is absent and its block is pinned.
    bool single_sector() const
    {
        return taste_weight() == 1.0 && labor_is_fixed() && labor_c_fixed == 1.0;
    }

    template <typename T>
    T depreciation_c(const T& u) const
    {
        return delta_c + delta1 * (u - 1.0) + 0.5 * delta2 * (u - 1.0) * (u - 1.0);
    }
};

// Marginal utility of numeraire-denominated income (the budget multiplier):
// the pricing kernel for firm cash flows is beta * mu_{t+1} / mu_t.
template <typename T>
T marginal_utility_income(const ModelSpec& m, std::span<const T> s)
{
    using std::pow;
    const T& c = s[var::c];
    const T& bundle = s[var::c_bundle];
    if (m.cobb_douglas_bundle())
        return m.taste_weight() * pow(bundle, 1.0 - m.sigma) / c;
    return m.eta * pow(c, m.epsilon_ces - 1.0) * pow(bundle, 1.0 - m.epsilon_ces - m.sigma);
}

// Slots that must stay strictly positive for powers and divisions to be well
// defined. In the single-sector restriction the pass-through slots are pinned
// to zero instead.
inline std::array<bool, var::count> positive_slots(const ModelSpec& m)
{
    std::array<bool, var::count> pos{};
    pos[var::c] = true;
    pos[var::c_bundle] = true;
    pos[var::price_pt] = true;
    pos[var::labor_c] = true;
    pos[var::util] = true;
    pos[var::cap_c] = true;
    pos[var::out_c] = true;
    if (!m.single_sector()) {
        pos[var::c_pt] = true;
        pos[var::labor_pt] = true;
        pos[var::cap_pt] = true;
        pos[var::out_pt] = true;
    }
    return pos;
}

// First slot violating positivity (or depreciation >= 1), if any.
inline std::optional<int> positivity_violation(const ModelSpec& m, std::span<const double> s)
{
    const auto pos = positive_slots(m);
    for (int v = 0; v < var::count; ++v)
        if (pos[v] && !(s[v] > 0.0)) return v;
    if (!(m.depreciation_c(s[var::util]) < 1.0)) return var::util;
    return std::nullopt;
}

// Residuals of the period-t equilibrium system. prev/now/next are full state
// vectors for t-1, t, t+1; t itself only enters through the new-investment
// indicator. Backward-looking rows are the laws of motion (they reference
// prev), forward-looking rows are the discounting and Euler blocks (they
// reference next); everything else is static in now.
namespace eq {
constexpr int bundle = 0;
constexpr int intratemporal = 1;
constexpr int sdf_def = 2;
constexpr int invest_foc = 3;
constexpr int euler_cap = 4;
constexpr int value_sched_b = 5;
constexpr int value_sched_a = 6;
constexpr int euler_pt = 7;
constexpr int wage_c_demand = 8;
constexpr int wage_pt_demand = 9;
constexpr int labor_block_1 = 10; // baseline: l pinned; extended: one wage
constexpr int labor_block_2 = 11; // baseline: l~ pinned; extended: labor supply
constexpr int utilization = 12;
constexpr int lom_cap_c = 13;
constexpr int lom_cap_pt = 14;
constexpr int lom_sched_b = 15;
constexpr int lom_sched_a = 16;
constexpr int production_c = 17;
constexpr int production_pt = 18;
constexpr int profit_c_def = 19;
constexpr int profit_pt_def = 20;
constexpr int tax_base_def = 21;
constexpr int tax_corp_def = 22;
constexpr int payout_c_def = 23;
constexpr int payout_pt_def = 24;
constexpr int tax_indiv_def = 25;
constexpr int tax_total_def = 26;
constexpr int transfer_def = 27;
constexpr int spending_def = 28;
constexpr int market_c = 29;
constexpr int market_pt = 30;
constexpr int count = 31;
} // namespace eq

inline const char* eq_name(int e)
{
    static const std::array<const char*, eq::count> names = {
        "bundle",        "intratemporal", "sdf_def",       "invest_foc",   "euler_cap",
        "value_sched_b", "value_sched_a", "euler_pt",      "wage_c_demand", "wage_pt_demand",
        "labor_block_1", "labor_block_2", "utilization",   "lom_cap_c",    "lom_cap_pt",
        "lom_sched_b",   "lom_sched_a",   "production_c",  "production_pt", "profit_c_def",
        "profit_pt_def", "tax_base_def",  "tax_corp_def",  "payout_c_def", "payout_pt_def",
        "tax_indiv_def", "tax_total_def", "transfer_def",  "spending_def", "market_c",
        "market_pt"};
    return names[e];
}

template <typename T>
void residuals_period(const ModelSpec& m, const VintagePolicy& vp, int t,
                      std::span<const T> prev, std::span<const T> now, std::span<const T> next,
                      std::span<T> out)
{
    using std::pow;
    const auto pos = positive_slots(m);
    for (int v = 0; v < var::count; ++v)
        if (pos[v] && !(value(now[v]) > 0.0)) {
            std::ostringstream os;
            os << "period " << t << ": " << var_name(v) << " must be positive; got "
               << value(now[v]);
            throw std::domain_error(os.str());
        }

    const double tau = m.policy.tau_corp;
    const double tau_ii = m.policy.tau_indiv;
    const double theta = m.policy.theta_waste;
    const double dB = vp.sched_before.rate_dbal;
    const double dA = vp.sched_after.rate_dbal;
    const double DA_now = vp.active_after(t) ? 1.0 : 0.0;
    const double DA_prev = vp.active_after(t - 1) ? 1.0 : 0.0;
    const bool single = m.single_sector();

    const T& c = now[var::c];
    const T& cq = now[var::c_pt];
    const T& bundle = now[var::c_bundle];
    const T& p = now[var::price_pt];
    const T& w = now[var::wage_c];
    const T& wq = now[var::wage_pt];
    const T& l = now[var::labor_c];
    const T& lq = now[var::labor_pt];
    const T& u = now[var::util];
    const T& k = now[var::cap_c];
    const T& kq = now[var::cap_pt];
    const T& i = now[var::inv_c];
    const T& iq = now[var::inv_pt];
    const T& y = now[var::out_c];
    const T& yq = now[var::out_pt];

    // consumption bundle and expenditure split
    if (m.cobb_douglas_bundle()) {
        const double g = m.taste_weight();
        out[eq::bundle] = bundle - pow(c, g) * pow(cq, 1.0 - g);
        out[eq::intratemporal] = g * p * cq - (1.0 - g) * c;
    } else {
        const double e = m.epsilon_ces;
        out[eq::bundle] =
            bundle - pow(m.eta * pow(c, e) + (1.0 - m.eta) * pow(cq, e), 1.0 / e);
        out[eq::intratemporal] = p * m.eta * pow(c, e - 1.0) - (1.0 - m.eta) * pow(cq, e - 1.0);
    }

    // one-period discount factor from the marginal utility of income
    const T mu_now = marginal_utility_income(m, now);
    const T mu_next = marginal_utility_income(m, next);
    out[eq::sdf_def] = now[var::sdf] * mu_now - m.beta * mu_next;

    // c-corp investment choice: unit cost equals shadow value of capital
    // plus the deduction stream the unit generates under the active schedule
    out[eq::invest_foc] = now[var::q_cap] + tau * (dB * (1.0 - DA_now) + dA * DA_now) +
                          (1.0 - dB) * (1.0 - DA_now) * now[var::q_sched_b] +
                          (1.0 - dA) * DA_now * now[var::q_sched_a] - 1.0;
    out[eq::euler_cap] =
        now[var::q_cap] -
        now[var::sdf] * ((1.0 - tau) * m.alpha_c * next[var::out_c] / next[var::cap_c] +
                         (1.0 - m.depreciation_c(next[var::util])) * next[var::q_cap]);
    out[eq::value_sched_b] =
        now[var::q_sched_b] - now[var::sdf] * (tau * dB + (1.0 - dB) * next[var::q_sched_b]);
    out[eq::value_sched_a] =
        now[var::q_sched_a] - now[var::sdf] * (tau * dA + (1.0 - dA) * next[var::q_sched_a]);

    // pass-through capital Euler equation (its good is the investment good)
    if (single)
        out[eq::euler_pt] = p - 1.0;
    else
        out[eq::euler_pt] =
            p - now[var::sdf] * next[var::price_pt] *
                    (m.alpha_p * next[var::out_pt] / next[var::cap_pt] + 1.0 - m.delta_p);

    // competitive wages and the variant's labor-market structure
    out[eq::wage_c_demand] = w * l - (1.0 - m.alpha_c) * y;
    if (single)
        out[eq::wage_pt_demand] = wq;
    else
        out[eq::wage_pt_demand] = wq * lq - p * (1.0 - m.alpha_p) * yq;

    if (m.labor_is_fixed()) {
        out[eq::labor_block_1] = l - m.labor_c_fixed;
        out[eq::labor_block_2] = lq - (1.0 - m.labor_c_fixed);
    } else {
        out[eq::labor_block_1] = wq - w; // one labor market
        out[eq::labor_block_2] = pow(l + lq, m.phi) - mu_now * (1.0 - tau_ii) * w;
    }

    if (m.util_is_fixed())
        out[eq::utilization] = u - 1.0;
    else
        out[eq::utilization] =
            (1.0 - tau) * m.alpha_c * y -
            now[var::q_cap] * (m.delta1 + m.delta2 * (u - 1.0)) * u * k;

    // capital and undeducted-stock laws of motion, dated so that
    // period-t stocks were chosen at t-1
    out[eq::lom_cap_c] =
        k - (1.0 - m.depreciation_c(prev[var::util])) * prev[var::cap_c] - prev[var::inv_c];
    out[eq::lom_cap_pt] = kq - (1.0 - m.delta_p) * prev[var::cap_pt] - prev[var::inv_pt];
    out[eq::lom_sched_b] =
        now[var::cap_sched_b] -
        (1.0 - dB) * ((1.0 - DA_prev) * prev[var::inv_c] + prev[var::cap_sched_b]);
    out[eq::lom_sched_a] =
        now[var::cap_sched_a] -
        (1.0 - dA) * (DA_prev * prev[var::inv_c] + prev[var::cap_sched_a]);

    // technologies
    out[eq::production_c] = y - pow(u * k, m.alpha_c) * pow(l, 1.0 - m.alpha_c);
    if (single)
        out[eq::production_pt] = yq;
    else
        out[eq::production_pt] = yq - pow(kq, m.alpha_p) * pow(lq, 1.0 - m.alpha_p);

    // cash flows and the tax block; the deduction mixes both schedules
    const T deduction = dB * ((1.0 - DA_now) * i + now[var::cap_sched_b]) +
                        dA * (DA_now * i + now[var::cap_sched_a]);
    out[eq::profit_c_def] = now[var::profit_c] - (y - w * l - i);
    out[eq::profit_pt_def] = now[var::profit_pt] - (p * yq - wq * lq - p * iq);
    out[eq::tax_base_def] = now[var::tax_base] - (y - w * l - deduction);
    out[eq::tax_corp_def] = now[var::tax_corp] - tau * now[var::tax_base];
    out[eq::payout_c_def] = now[var::payout_c] - (now[var::profit_c] - now[var::tax_corp]);
    out[eq::payout_pt_def] = now[var::payout_pt] - now[var::profit_pt];
    out[eq::tax_indiv_def] =
        now[var::tax_indiv] -
        tau_ii * (w * l + wq * lq + now[var::payout_c] + now[var::payout_pt]);
    out[eq::tax_total_def] = now[var::tax_total] - (now[var::tax_corp] + now[var::tax_indiv]);
    out[eq::transfer_def] = now[var::transfer] - (1.0 - theta) * now[var::tax_total];
    out[eq::spending_def] = now[var::spending] - theta * now[var::tax_total];

    // goods markets; wasteful spending split across goods by output share
    const T gdp = y + p * yq;
    out[eq::market_c] = y - c - i - now[var::spending] * y / gdp;
    out[eq::market_pt] = yq - cq - iq - now[var::spending] * yq / gdp;
}

// Scalar summaries in numeraire units at the state's own relative price.
struct Aggregates {
    double gdp;
    double investment;
    double payout;
    double revenue_corp;
};

inline Aggregates aggregates(std::span<const double> s)
{
    Aggregates a;
    a.gdp = s[var::out_c] + s[var::price_pt] * s[var::out_pt];
    a.investment = s[var::inv_c] + s[var::price_pt] * s[var::inv_pt];
    a.payout = s[var::payout_c];
    a.revenue_corp = s[var::tax_corp];
    return a;
}

// Same aggregates at a fixed reference price, so comparisons across periods
// track quantities rather than valuation shifts.
inline Aggregates aggregates_at_price(std::span<const double> s, double price_ref)
{
    Aggregates a;
    a.gdp = s[var::out_c] + price_ref * s[var::out_pt];
    a.investment = s[var::inv_c] + price_ref * s[var::inv_pt];
    a.payout = s[var::payout_c];
    a.revenue_corp = s[var::tax_corp];
    return a;
}

struct MomentRatios {
    double profit_over_gdp;
    double payout_over_gdp;
    double tax_corp_over_gdp;
    double tax_indiv_over_gdp;
};

inline MomentRatios moment_ratios(std::span<const double> s)
{
    const double gdp = s[var::out_c] + s[var::price_pt] * s[var::out_pt];
    return {s[var::profit_c] / gdp, s[var::payout_c] / gdp, s[var::tax_corp] / gdp,
            s[var::tax_indiv] / gdp};
}

// Household budget residual; zero at equilibrium by Walras' law once both
// goods markets clear, so it serves as an independent consistency check.
inline double walras_residual(const ModelSpec& m, std::span<const double> s)
{
    const double income = s[var::wage_c] * s[var::labor_c] + s[var::wage_pt] * s[var::labor_pt] +
                          s[var::payout_c] + s[var::payout_pt];
    return s[var::c] + s[var::price_pt] * s[var::c_pt] -
           (1.0 - m.policy.tau_indiv) * income - s[var::transfer];
}

// Corporate tax base computed through capital income (CRS + competitive
// labor): MPK*k - deduction. Equals the tax_base slot when the wage equals
// the marginal product of labor.
inline double tax_base_capital_route(const ModelSpec& m, const VintagePolicy& vp, int t,
                                     std::span<const double> s)
{
    const double DA = vp.active_after(t) ? 1.0 : 0.0;
    const double deduction =
        vp.sched_before.rate_dbal * ((1.0 - DA) * s[var::inv_c] + s[var::cap_sched_b]) +
        vp.sched_after.rate_dbal * (DA * s[var::inv_c] + s[var::cap_sched_a]);
    const double mpk = m.alpha_c * s[var::out_c] / s[var::cap_c];
    return mpk * s[var::cap_c] - deduction;
}

} // namespace corptax
