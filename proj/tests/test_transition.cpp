#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "corptax/scenarios.hpp"
#include "corptax/transition.hpp"

using namespace corptax;

namespace {

// TCJA-style reform in the baseline variant, cheap enough for unit tests.
TransitionProblem tcja_problem(int horizon)
{
    const SteadyState pre = solve_steady_state(spec_2017_baseline());
    const SteadyState post =
        solve_steady_state(spec_2017_baseline().with_policy(policy_tcja_post()));
    const VintagePolicy vintage(DepreciationSchedule(0.4823), DepreciationSchedule(0.8305), 0);
    return make_reform_problem(pre, post, vintage, horizon);
}

} // namespace

TEST_CASE("null reform stays flat at the initial steady state", "[transition]")
{
    const SteadyState ss = solve_steady_state(spec_2017_baseline());
    const TransitionPath path = solve_transition(
        make_reform_problem(ss, ss, VintagePolicy::uniform(ss.spec.policy.sched), 60));
    double max_dev = 0.0;
    for (int t = 0; t < path.horizon(); ++t)
        for (int v = 0; v < var::count; ++v)
            max_dev = std::max(max_dev, std::abs(path.states(t, v) - ss.at(v)));
    CHECK(max_dev < 1e-9);

    // with a dated vintage the stock migrates between slots but nothing
    // economic moves
    const VintagePolicy dated(ss.spec.policy.sched, ss.spec.policy.sched, 0);
    const TransitionPath split = solve_transition(make_reform_problem(ss, ss, dated, 60));
    max_dev = 0.0;
    for (int t = 0; t < split.horizon(); ++t) {
        for (int v = 0; v < var::count; ++v) {
            if (v == var::cap_sched_b || v == var::cap_sched_a) continue;
            max_dev = std::max(max_dev, std::abs(split.states(t, v) - ss.at(v)));
        }
        const double stock =
            split.states(t, var::cap_sched_b) + split.states(t, var::cap_sched_a);
        max_dev = std::max(max_dev, std::abs(stock - ss.at(var::cap_sched_a)));
    }
    CHECK(max_dev < 1e-9);
}

TEST_CASE("jacobian blocks match central finite differences", "[transition]")
{
    TransitionProblem prob = tcja_problem(8);
    PathMatrix x = PathMatrix::Zero(prob.horizon, var::count);
    for (int t = 0; t < prob.horizon; ++t) {
        const double w = (t + 1.0) / prob.horizon;
        x.row(t) = (1.0 - w) * prob.initial_prev.transpose() + w * prob.terminal.transpose();
    }

    std::mt19937 rng(777);
    std::uniform_real_distribution<double> jitter(-0.02, 0.02);
    for (int rep = 0; rep < 3; ++rep) {
        PathMatrix xp = x;
        for (int t = 0; t < prob.horizon; ++t)
            for (int v = 0; v < var::count; ++v) xp(t, v) *= 1.0 + jitter(rng);

        std::vector<Eigen::MatrixXd> A, B, C;
        transition_jacobian_blocks(prob, xp, A, B, C);

        const int n = var::count;
        auto eval = [&](int t, const Eigen::VectorXd& prev, const Eigen::VectorXd& now,
                        const Eigen::VectorXd& next, Eigen::VectorXd& out) {
            residuals_period<double>(prob.spec_post, prob.vintage, t,
                                     {prev.data(), static_cast<size_t>(n)},
                                     {now.data(), static_cast<size_t>(n)},
                                     {next.data(), static_cast<size_t>(n)},
                                     {out.data(), static_cast<size_t>(n)});
        };

        for (int t : {1, prob.horizon / 2, prob.horizon - 2}) {
            Eigen::VectorXd prev = xp.row(t - 1), now = xp.row(t), next = xp.row(t + 1);
            Eigen::VectorXd fp(n), fm(n);
            for (int j = 0; j < n; ++j) {
                const double h = 1e-6 * std::max(1.0, std::abs(now[j]));
                for (auto [vec, block] : {std::pair{&prev, &A[t]}, std::pair{&now, &B[t]},
                                          std::pair{&next, &C[t]}}) {
                    const double saved = (*vec)[j];
                    (*vec)[j] = saved + h;
                    eval(t, prev, now, next, fp);
                    (*vec)[j] = saved - h;
                    eval(t, prev, now, next, fm);
                    (*vec)[j] = saved;
                    for (int r = 0; r < n; ++r) {
                        const double fd = (fp[r] - fm[r]) / (2.0 * h);
                        const double an = (*block)(r, j);
                        INFO("t=" << t << " eq=" << eq_name(r) << " d/d " << var_name(j));
                        CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
                    }
                }
            }
        }
    }
}

TEST_CASE("jacobian structure is block tridiagonal", "[transition]")
{
    const TransitionProblem prob = tcja_problem(3);
    const JacobianStructure s = jacobian_structure(prob);
    CHECK(s.horizon == 3);
    CHECK(s.block_dim == var::count);
    CHECK(s.diag_blocks == 3);
    CHECK(s.sub_blocks == 2);
    CHECK(s.super_blocks == 2);

    // rows outside the declared coupling sets have no prev/next dependence
    PathMatrix x(3, var::count);
    for (int t = 0; t < 3; ++t)
        x.row(t) = 0.5 * (prob.initial_prev + prob.terminal).transpose();
    std::vector<Eigen::MatrixXd> A, B, C;
    transition_jacobian_blocks(prob, x, A, B, C);
    for (int r = 0; r < eq::count; ++r) {
        const bool backward = std::find(s.backward_rows.begin(), s.backward_rows.end(), r) !=
                              s.backward_rows.end();
        const bool forward = std::find(s.forward_rows.begin(), s.forward_rows.end(), r) !=
                             s.forward_rows.end();
        if (!backward) CHECK(A[1].row(r).cwiseAbs().maxCoeff() == 0.0);
        if (!forward) CHECK(C[1].row(r).cwiseAbs().maxCoeff() == 0.0);
        if (backward) CHECK(A[1].row(r).cwiseAbs().maxCoeff() > 0.0);
        if (forward) CHECK(C[1].row(r).cwiseAbs().maxCoeff() > 0.0);
    }

    // identical structure for the extended variant
    const SteadyState pre = solve_steady_state(spec_2017_extended());
    const TransitionProblem prob_ext =
        make_reform_problem(pre, pre, VintagePolicy::uniform(pre.spec.policy.sched), 3);
    const JacobianStructure se = jacobian_structure(prob_ext);
    CHECK(se.block_dim == s.block_dim);
    CHECK(se.backward_rows == s.backward_rows);
    CHECK(se.forward_rows == s.forward_rows);
}

TEST_CASE("equal vintage schedules reproduce the single-stock path", "[transition]")
{
    // rate-only reform: the schedule is unchanged, so before/after stocks are
    // interchangeable with a plain single-stock run
    const SteadyState pre = solve_steady_state(spec_2017_baseline());
    const TaxPolicy post_policy(0.21, DepreciationSchedule(0.4823), 0.135, 0.0);
    const SteadyState post = solve_steady_state(spec_2017_baseline().with_policy(post_policy));

    const VintagePolicy split(DepreciationSchedule(0.4823), DepreciationSchedule(0.4823), 0);
    const TransitionPath p_split =
        solve_transition(make_reform_problem(pre, post, split, 300));

    const VintagePolicy merged = VintagePolicy::uniform(DepreciationSchedule(0.4823));
    const TransitionPath p_single =
        solve_transition(make_reform_problem(pre, post, merged, 300));

    for (int t = 0; t < 300; ++t) {
        for (int v = 0; v < var::count; ++v) {
            if (v == var::cap_sched_b || v == var::cap_sched_a || v == var::q_sched_b ||
                v == var::q_sched_a)
                continue;
            INFO("t=" << t << " " << var_name(v));
            CHECK(std::abs(p_split.states(t, v) - p_single.states(t, v)) < 1e-9);
        }
        const double stock_split =
            p_split.states(t, var::cap_sched_b) + p_split.states(t, var::cap_sched_a);
        const double stock_single =
            p_single.states(t, var::cap_sched_b) + p_single.states(t, var::cap_sched_a);
        CHECK(std::abs(stock_split - stock_single) < 1e-9);
    }
}

TEST_CASE("solved reform path satisfies the per-period equilibrium conditions", "[transition]")
{
    const TransitionProblem prob = tcja_problem(300);
    const TransitionPath path = solve_transition(prob);
    CHECK(path.diag.residual_norm < 1e-9);

    // goods markets clear every period
    std::array<double, eq::count> out;
    for (int t = 0; t < path.horizon(); ++t) {
        const auto prev = t == 0 ? std::span<const double>{prob.initial_prev.data(),
                                                           static_cast<size_t>(var::count)}
                                 : path.period(t - 1);
        const auto next = t == path.horizon() - 1
                              ? std::span<const double>{prob.terminal.data(),
                                                        static_cast<size_t>(var::count)}
                              : path.period(t + 1);
        residuals_period<double>(prob.spec_post, prob.vintage, t, prev, path.period(t), next,
                                 {out.data(), out.size()});
        CHECK(std::abs(out[eq::market_c]) < 1e-9);
        CHECK(std::abs(out[eq::market_pt]) < 1e-9);
    }

    // pre-reform undeducted stock decays geometrically and gets no additions
    const double dB = prob.vintage.sched_before.rate_dbal;
    CHECK(path.states(0, var::cap_sched_b) ==
          Catch::Approx(prob.initial_prev[var::cap_sched_b]).epsilon(1e-12));
    CHECK(path.states(0, var::cap_sched_a) == Catch::Approx(0.0).margin(1e-14));
    for (int t = 0; t + 1 < path.horizon(); ++t)
        CHECK(path.states(t + 1, var::cap_sched_b) ==
              Catch::Approx((1.0 - dB) * path.states(t, var::cap_sched_b)).margin(1e-12));

    // both undeducted stocks stay nonnegative
    for (int t = 0; t < path.horizon(); ++t) {
        CHECK(path.states(t, var::cap_sched_b) >= 0.0);
        CHECK(path.states(t, var::cap_sched_a) >= 0.0);
    }

    // year-1 payout response exceeds year-1 investment response for c-corps
    const SteadyState pre = solve_steady_state(spec_2017_baseline());
    const double payout_dev =
        path.states(0, var::payout_c) / pre.at(var::payout_c) - 1.0;
    const double invest_dev = path.states(0, var::inv_c) / pre.at(var::inv_c) - 1.0;
    CHECK(payout_dev > invest_dev);
    CHECK(payout_dev > 0.0);
}

TEST_CASE("doubling the horizon leaves the early path unchanged", "[transition]")
{
    const TransitionPath p300 = solve_transition(tcja_problem(300));
    const TransitionPath p600 = solve_transition(tcja_problem(600));
    for (int t = 0; t < 20; ++t)
        for (int v = 0; v < var::count; ++v) {
            INFO("t=" << t << " " << var_name(v));
            CHECK(std::abs(p300.states(t, v) - p600.states(t, v)) < 1e-6);
        }
}

TEST_CASE("too-short horizons are rejected with the worst variable named", "[transition]")
{
    CHECK_THROWS_WITH(solve_transition(tcja_problem(40)),
                      Catch::Matchers::ContainsSubstring("horizon too short"));
}

TEST_CASE("euler_wedge_check validates the wedge form of the Euler equation", "[transition]")
{
    SECTION("flat steady-state path")
    {
        const SteadyState ss = solve_steady_state(spec_2017_baseline());
        CHECK(euler_wedge_check(flat_path(ss, 120)) < 1e-10);
    }
    SECTION("full expensing keeps every wedge term at one")
    {
        BaselineParams p;
        p.policy = TaxPolicy(0.35, DepreciationSchedule(1.0), 0.135, 0.0);
        const SteadyState ss = solve_steady_state(ModelSpec::baseline(p));
        CHECK(euler_wedge_check(flat_path(ss, 60)) < 1e-12);
    }
    SECTION("solved reform path")
    {
        const TransitionPath path = solve_transition(tcja_problem(300));
        CHECK(euler_wedge_check(path) < 1e-8);
    }
    SECTION("solved extended-model path with variable utilization")
    {
        const ReformResult r = run_scenario(scenario_kennedy());
        CHECK(euler_wedge_check(r.reform_path) < 1e-8);
        // the household budget clears every period along the path
        for (int t = 0; t < r.reform_path.horizon(); ++t)
            CHECK(std::abs(walras_residual(r.reform_path.spec, r.reform_path.period(t))) < 1e-9);
    }
    SECTION("paths that have not settled are rejected")
    {
        const SteadyState pre = solve_steady_state(spec_2017_baseline());
        const SteadyState post =
            solve_steady_state(spec_2017_baseline().with_policy(policy_tcja_post()));
        TransitionPath fake = flat_path(pre, 30);
        fake.terminal = post.state;
        CHECK_THROWS_WITH(euler_wedge_check(fake),
                          Catch::Matchers::ContainsSubstring("horizon insufficient"));
    }
}
