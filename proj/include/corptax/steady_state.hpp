#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <span>

#include "corptax/model.hpp"
#include "corptax/newton.hpp"
#include "corptax/taxcode.hpp"

namespace corptax {

struct SteadyState {
    ModelSpec spec;
    Eigen::VectorXd state; // var::count slots
    WedgeReport wedge;
    MomentRatios moments;
    double residual_norm = 0.0;
    int iterations = 0;

    double at(int v) const { return state[v]; }
    std::span<const double> view() const { return {state.data(), static_cast<size_t>(state.size())}; }
};

namespace detail {

// Closed-form construction of the (theta = 0) steady state, used as the
// Newton initial guess; exact when theta = 0.
inline Eigen::VectorXd steady_guess(const ModelSpec& m)
{
    const double rho = rho_of_beta(m.beta);
    const double tau = m.policy.tau_corp;
    const double d_sched = m.policy.sched.rate_dbal;
    const double lambda = pdv_of_schedule(d_sched, m.beta);
    const double wedge = corporate_wedge(tau, lambda);

    // distorted c-corp capital-labor ratio, undistorted pass-through one
    const double mpk = (rho + m.delta_c) / wedge;
    const double kap_c = std::pow(m.alpha_c / mpk, 1.0 / (1.0 - m.alpha_c));
    const double y_c = std::pow(kap_c, m.alpha_c); // per unit labor
    const double w = (1.0 - m.alpha_c) * y_c;
    const double cons_c = y_c - m.delta_c * kap_c;

    double l, lq, p, wq, kap_p = 0.0, y_p = 0.0, cons_p = 0.0;
    if (m.single_sector()) {
        l = 1.0;
        lq = 0.0;
        p = 1.0;
        wq = 0.0;
    } else {
        kap_p = std::pow(m.alpha_p / (rho + m.delta_p), 1.0 / (1.0 - m.alpha_p));
        y_p = std::pow(kap_p, m.alpha_p);
        cons_p = y_p - m.delta_p * kap_p;
        if (m.labor_is_fixed()) {
            l = m.labor_c_fixed;
            lq = 1.0 - m.labor_c_fixed;
            const double g = m.taste_weight();
            if (m.cobb_douglas_bundle())
                p = (1.0 - g) / g * (l * cons_c) / (lq * cons_p);
            else
                p = (1.0 - m.eta) * std::pow(lq * cons_p, m.epsilon_ces - 1.0) /
                    (m.eta * std::pow(l * cons_c, m.epsilon_ces - 1.0));
            wq = p * (1.0 - m.alpha_p) * y_p;
        } else {
            // one labor market: the wage pins p, p pins the consumption split,
            // the labor-supply condition pins the scale
            p = w / ((1.0 - m.alpha_p) * y_p);
            wq = w;
            double split; // c / c_pt
            if (m.cobb_douglas_bundle())
                split = p * m.eta / (1.0 - m.eta);
            else
                split = std::pow(p * m.eta / (1.0 - m.eta), 1.0 / (1.0 - m.epsilon_ces));
            const double s = split * cons_p / cons_c; // l / l_pt
            double bundle_pc, mu_scale;
            if (m.cobb_douglas_bundle()) {
                bundle_pc = std::pow(s * cons_c, m.eta) * std::pow(cons_p, 1.0 - m.eta);
                mu_scale = m.eta * std::pow(bundle_pc, 1.0 - m.sigma) / (s * cons_c);
            } else {
                bundle_pc = std::pow(m.eta * std::pow(s * cons_c, m.epsilon_ces) +
                                         (1.0 - m.eta) * std::pow(cons_p, m.epsilon_ces),
                                     1.0 / m.epsilon_ces);
                mu_scale = m.eta * std::pow(s * cons_c, m.epsilon_ces - 1.0) *
                           std::pow(bundle_pc, 1.0 - m.epsilon_ces - m.sigma);
            }
            lq = std::pow(mu_scale * (1.0 - m.policy.tau_indiv) * w / std::pow(1.0 + s, m.phi),
                          1.0 / (m.phi + m.sigma));
            l = s * lq;
        }
    }

    Eigen::VectorXd s = Eigen::VectorXd::Zero(var::count);
    const double k = kap_c * l, kq = kap_p * lq;
    const double y = y_c * l, yq = y_p * lq;
    const double i = m.delta_c * k, iq = m.delta_p * kq;
    const double cc = cons_c * l, cq = cons_p * lq;

    s[var::c] = cc;
    s[var::c_pt] = cq;
    if (m.single_sector())
        s[var::c_bundle] = cc;
    else if (m.cobb_douglas_bundle())
        s[var::c_bundle] = std::pow(cc, m.taste_weight()) * std::pow(cq, 1.0 - m.taste_weight());
    else
        s[var::c_bundle] = std::pow(m.eta * std::pow(cc, m.epsilon_ces) +
                                        (1.0 - m.eta) * std::pow(cq, m.epsilon_ces),
                                    1.0 / m.epsilon_ces);
    s[var::price_pt] = p;
    s[var::wage_c] = w;
    s[var::wage_pt] = wq;
    s[var::labor_c] = l;
    s[var::labor_pt] = lq;
    s[var::util] = 1.0;
    s[var::cap_c] = k;
    s[var::cap_pt] = kq;
    s[var::inv_c] = i;
    s[var::inv_pt] = iq;
    s[var::out_c] = y;
    s[var::out_pt] = yq;
    s[var::profit_c] = y - w * l - i;
    s[var::profit_pt] = p * yq - wq * lq - p * iq;
    s[var::tax_base] = y - w * l - i; // steady-state deduction equals investment
    s[var::tax_corp] = tau * s[var::tax_base];
    s[var::payout_c] = s[var::profit_c] - s[var::tax_corp];
    s[var::payout_pt] = s[var::profit_pt];
    s[var::tax_indiv] =
        m.policy.tau_indiv * (w * l + wq * lq + s[var::payout_c] + s[var::payout_pt]);
    s[var::tax_total] = s[var::tax_corp] + s[var::tax_indiv];
    s[var::transfer] = (1.0 - m.policy.theta_waste) * s[var::tax_total];
    s[var::spending] = m.policy.theta_waste * s[var::tax_total];
    s[var::sdf] = m.beta;
    s[var::q_cap] = 1.0 - tau * lambda;
    s[var::q_sched_b] = m.beta * tau * d_sched / (1.0 - m.beta * (1.0 - d_sched));
    s[var::q_sched_a] = s[var::q_sched_b];
    s[var::cap_sched_b] = 0.0;
    s[var::cap_sched_a] = d_sched == 1.0 ? 0.0 : (1.0 - d_sched) * i / d_sched;
    return s;
}

} // namespace detail

// Fixed point of residuals_period via damped Newton. The vintage policy is
// degenerate (one schedule, whole stock in the after-slot).
inline SteadyState solve_steady_state(const ModelSpec& m,
                                      std::optional<Eigen::VectorXd> guess = std::nullopt,
                                      const SolverOptions& opt = {})
{
    const VintagePolicy vintage = VintagePolicy::uniform(m.policy.sched);
    const int n = var::count;

    auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        std::span<const double> s{x.data(), static_cast<size_t>(n)};
        residuals_period<double>(m, vintage, 0, s, s, s, {out.data(), static_cast<size_t>(n)});
    };
    auto jacobian = [&](const Eigen::VectorXd& x, Eigen::MatrixXd& jac) {
        std::array<Dual, var::count> xs, fs;
        for (int v = 0; v < n; ++v) xs[v] = Dual(x[v]);
        for (int j = 0; j < n; ++j) {
            xs[j].dot = 1.0; // same vector enters as prev, now and next
            std::span<const Dual> s{xs.data(), xs.size()};
            residuals_period<Dual>(m, vintage, 0, s, s, s, {fs.data(), fs.size()});
            for (int r = 0; r < n; ++r) jac(r, j) = fs[r].dot;
            xs[j].dot = 0.0;
        }
    };
    auto guard = [&](const Eigen::VectorXd& x) -> std::string {
        const auto bad = positivity_violation(m, {x.data(), static_cast<size_t>(n)});
        return bad ? std::string(var_name(*bad)) + " not positive" : std::string();
    };
    auto label = [](int idx) { return eq_name(idx); };

    Eigen::VectorXd x = guess ? *guess : detail::steady_guess(m);
    SolverDiagnostics diag;
    try {
        diag = damped_newton(x, residual, jacobian, guard, label, opt);
    } catch (const SolverError& e) {
        throw SolverError(std::string("steady state: ") + e.what());
    }

    SteadyState ss{m, x, wedge_report(m.policy, m.beta, m.alpha_c),
                   moment_ratios({x.data(), static_cast<size_t>(n)}), diag.residual_norm,
                   diag.iterations};
    return ss;
}

// Closed-form steady state of the single-sector restriction (gamma = l = 1,
// tau_indiv = 0), expressed against its undistorted (tau_corp = 0)
// counterpart. Starred members are undistorted values.
struct AnalyticSS {
    double lambda_ss;
    double wedge;
    double distortion;     // 1 - y/y_star
    double y, y_star;
    double cap, cap_star;
    double inv;
    double consumption;
    double profit_star;    // rho * cap_star
    double tax_base;
    double tax_corp;
    double payout;
};

inline AnalyticSS analytic_steady_state(const ModelSpec& m)
{
    require(m.variant == Variant::baseline && m.single_sector() && m.policy.tau_indiv == 0.0,
            "analytic_steady_state needs the single-sector restriction "
            "(baseline, gamma = l = 1, tau_indiv = 0)");
    const double rho = rho_of_beta(m.beta);
    const double alpha = m.alpha_c, delta = m.delta_c, tau = m.policy.tau_corp;

    AnalyticSS a;
    a.lambda_ss = pdv_of_schedule(m.policy.sched.rate_dbal, m.beta);
    a.wedge = corporate_wedge(tau, a.lambda_ss);
    const double shrink = std::pow(a.wedge, alpha / (1.0 - alpha));
    a.distortion = 1.0 - shrink;

    a.cap_star = std::pow(alpha / (rho + delta), 1.0 / (1.0 - alpha));
    a.y_star = std::pow(a.cap_star, alpha);
    a.profit_star = rho * a.cap_star;
    a.cap = a.cap_star * std::pow(a.wedge, 1.0 / (1.0 - alpha));
    a.y = a.y_star * shrink;
    a.inv = delta * a.cap;

    const double bracket = shrink * (1.0 + delta / rho * (1.0 - a.wedge));
    a.tax_base = a.profit_star * bracket;
    a.tax_corp = tau * a.tax_base;
    a.payout = (1.0 - tau) * a.tax_base;
    a.consumption = a.y - a.inv - m.policy.theta_waste * a.tax_corp;
    return a;
}

// c-corp share of total receipts, the eta-calibration target.
inline double ccorp_receipts_share(std::span<const double> s)
{
    const double gdp = s[var::out_c] + s[var::price_pt] * s[var::out_pt];
    return s[var::out_c] / gdp;
}

// Root-find the CES weight so the steady-state c-corp receipts share hits the
// target. The share is increasing in eta, so bisection is sufficient.
inline double calibrate_eta(const ModelSpec& m, double target_share,
                            const SolverOptions& opt = {})
{
    require(m.variant == Variant::extended, "calibrate_eta needs the extended variant");
    require_open01(target_share, "target_ccorp_share");

    auto share_at = [&](double eta) {
        const ExtendedParams p{.beta = m.beta,
                               .sigma = m.sigma,
                               .eta = eta,
                               .epsilon = m.epsilon_ces,
                               .phi = m.phi,
                               .alpha_c = m.alpha_c,
                               .alpha_p = m.alpha_p,
                               .delta0 = m.delta_c,
                               .delta_p = m.delta_p,
                               .delta2 = m.delta2,
                               .labor_c = m.labor_c_fixed,
                               .fix_labor = m.fix_labor,
                               .fix_utilization = m.fix_utilization,
                               .policy = m.policy};
        return ccorp_receipts_share(
            solve_steady_state(ModelSpec::extended(p), std::nullopt, opt).view());
    };

    double lo = 1e-4, hi = 1.0 - 1e-4;
    double f_lo = share_at(lo) - target_share;
    double f_hi = share_at(hi) - target_share;
    if (f_lo > 0.0 || f_hi < 0.0) {
        std::ostringstream os;
        os << "calibrate_eta: share range [" << f_lo + target_share << ", "
           << f_hi + target_share << "] does not bracket target " << target_share;
        throw SolverError(os.str());
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = share_at(mid) - target_share;
        if (std::abs(f_mid) < 1e-7 || hi - lo < 1e-13) return mid;
        if (f_mid < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace corptax
