#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "corptax/model.hpp"
#include "corptax/newton.hpp"
#include "corptax/steady_state.hpp"

namespace corptax {

// Row-major so each period's state is a contiguous row.
using PathMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Perfect-foresight boundary-value problem: an unanticipated permanent reform
// at t = reform_period. The t = -1 state is the pre-reform steady state (with
// the undeducted stock moved into the before-slot); the terminal state is the
// post-reform steady state, held fixed in the forward-looking equations of
// the last period.
struct TransitionProblem {
    ModelSpec spec_post;
    VintagePolicy vintage;
    Eigen::VectorXd initial_prev; // full state at t = -1
    Eigen::VectorXd terminal;     // post-reform steady state
    int horizon = 300;
};

struct TransitionPath {
    ModelSpec spec;
    VintagePolicy vintage;
    PathMatrix states; // horizon rows, var::count columns
    Eigen::VectorXd initial_prev;
    Eigen::VectorXd terminal;
    SolverDiagnostics diag;
    double terminal_gap = 0.0;

    int horizon() const { return static_cast<int>(states.rows()); }
    std::span<const double> period(int t) const
    {
        return {states.row(t).data(), static_cast<size_t>(states.cols())};
    }
};

inline TransitionProblem make_reform_problem(const SteadyState& pre, const SteadyState& post,
                                             const VintagePolicy& vintage, int horizon = 300)
{
    require(horizon >= 2, "horizon must be >= 2");
    TransitionProblem prob{post.spec, vintage, pre.state, post.state, horizon};
    if (!vintage.active_after(-1)) {
        // steady states keep the whole undeducted stock in the after-slot;
        // before the reform it belongs to the before-schedule
        prob.initial_prev[var::cap_sched_b] = pre.state[var::cap_sched_a];
        prob.initial_prev[var::cap_sched_a] = 0.0;
    }
    // the post-reform steady state is solved under the new schedule only; the
    // shadow values of each undeducted stock must converge to the fixed point
    // of their own recursion
    const double tau = post.spec.policy.tau_corp;
    const double beta = post.spec.beta;
    const double dB = vintage.sched_before.rate_dbal;
    const double dA = vintage.sched_after.rate_dbal;
    prob.terminal[var::q_sched_b] = beta * tau * dB / (1.0 - beta * (1.0 - dB));
    prob.terminal[var::q_sched_a] = beta * tau * dA / (1.0 - beta * (1.0 - dA));
    return prob;
}

struct JacobianStructure {
    int horizon;
    int block_dim;
    int diag_blocks;
    int sub_blocks;   // couplings to t-1 (laws of motion)
    int super_blocks; // couplings to t+1 (discounting and Euler rows)
    std::vector<int> backward_rows;
    std::vector<int> forward_rows;
};

// The stacked system is block tridiagonal by construction: each period's
// residuals touch only t-1 (laws of motion) and t+1 (forward-looking rows).
inline JacobianStructure jacobian_structure(const TransitionProblem& prob)
{
    JacobianStructure s;
    s.horizon = prob.horizon;
    s.block_dim = var::count;
    s.diag_blocks = prob.horizon;
    s.sub_blocks = prob.horizon - 1;
    s.super_blocks = prob.horizon - 1;
    s.backward_rows = {eq::lom_cap_c, eq::lom_cap_pt, eq::lom_sched_b, eq::lom_sched_a};
    s.forward_rows = {eq::sdf_def, eq::euler_cap, eq::value_sched_b, eq::value_sched_a,
                      eq::euler_pt};
    return s;
}

// Jacobian blocks of the stacked system at path x:
// A_t = dF_t/dstate_{t-1}, B_t = dF_t/dstate_t, C_t = dF_t/dstate_{t+1},
// assembled column-by-column with dual numbers (A_0 and C_{T-1} are unused
// because those neighbours are fixed boundary states).
inline void transition_jacobian_blocks(const TransitionProblem& prob, const PathMatrix& x,
                                       std::vector<Eigen::MatrixXd>& A,
                                       std::vector<Eigen::MatrixXd>& B,
                                       std::vector<Eigen::MatrixXd>& C)
{
    const ModelSpec& m = prob.spec_post;
    const int n = var::count;
    const int T = prob.horizon;
    A.resize(T);
    B.resize(T);
    C.resize(T);
    std::array<Dual, var::count> dprev, dnow, dnext, dout;
    for (int t = 0; t < T; ++t) {
        A[t].resize(n, n);
        B[t].resize(n, n);
        C[t].resize(n, n);
        const double* prev_v = t == 0 ? prob.initial_prev.data() : x.row(t - 1).data();
        const double* next_v = t == T - 1 ? prob.terminal.data() : x.row(t + 1).data();
        for (int v = 0; v < n; ++v) {
            dprev[v] = Dual(prev_v[v]);
            dnow[v] = Dual(x(t, v));
            dnext[v] = Dual(next_v[v]);
        }
        std::span<const Dual> sp{dprev.data(), dprev.size()};
        std::span<const Dual> sn{dnow.data(), dnow.size()};
        std::span<const Dual> sx{dnext.data(), dnext.size()};
        std::span<Dual> so{dout.data(), dout.size()};
        for (int j = 0; j < n; ++j) {
            dnow[j].dot = 1.0;
            residuals_period<Dual>(m, prob.vintage, t, sp, sn, sx, so);
            for (int r = 0; r < n; ++r) B[t](r, j) = dout[r].dot;
            dnow[j].dot = 0.0;
            if (t > 0) {
                dprev[j].dot = 1.0;
                residuals_period<Dual>(m, prob.vintage, t, sp, sn, sx, so);
                for (int r = 0; r < n; ++r) A[t](r, j) = dout[r].dot;
                dprev[j].dot = 0.0;
            }
            if (t < T - 1) {
                dnext[j].dot = 1.0;
                residuals_period<Dual>(m, prob.vintage, t, sp, sn, sx, so);
                for (int r = 0; r < n; ++r) C[t](r, j) = dout[r].dot;
                dnext[j].dot = 0.0;
            }
        }
    }
}

namespace detail {

constexpr int kGuessRampPeriods = 50;

inline PathMatrix transition_guess(const TransitionProblem& prob)
{
    PathMatrix x(prob.horizon, var::count);
    for (int t = 0; t < prob.horizon; ++t) {
        const double w = std::min(1.0, (t + 1.0) / kGuessRampPeriods);
        // terminal + (1-w)*(initial - terminal): exact at w = 1 and bitwise
        // flat when the endpoints coincide (null reforms)
        x.row(t) = prob.terminal.transpose() +
                   (1.0 - w) * (prob.initial_prev - prob.terminal).transpose();
    }
    return x;
}

} // namespace detail

// Stacked Newton with a block-tridiagonal direct solve and step halving.
inline TransitionPath solve_transition(const TransitionProblem& prob,
                                       const SolverOptions& opt = {})
{
    const ModelSpec& m = prob.spec_post;
    const int n = var::count;
    const int T = prob.horizon;

    auto row_span = [n](const PathMatrix& x, int t) -> std::span<const double> {
        return {x.row(t).data(), static_cast<size_t>(n)};
    };
    auto fixed_span = [n](const Eigen::VectorXd& v) -> std::span<const double> {
        return {v.data(), static_cast<size_t>(n)};
    };

    auto stacked_residual = [&](const PathMatrix& x, Eigen::VectorXd& out) {
        for (int t = 0; t < T; ++t) {
            const auto prev = t == 0 ? fixed_span(prob.initial_prev) : row_span(x, t - 1);
            const auto next = t == T - 1 ? fixed_span(prob.terminal) : row_span(x, t + 1);
            residuals_period<double>(m, prob.vintage, t, prev, row_span(x, t), next,
                                     {out.data() + static_cast<size_t>(t) * n,
                                      static_cast<size_t>(n)});
        }
    };

    auto guard = [&](const PathMatrix& x) -> std::string {
        for (int t = 0; t < T; ++t) {
            const auto bad = positivity_violation(m, row_span(x, t));
            if (bad) {
                std::ostringstream os;
                os << var_name(*bad) << " not positive in period " << t;
                return os.str();
            }
        }
        return {};
    };

    std::vector<Eigen::MatrixXd> A, B, C;
    auto assemble = [&](const PathMatrix& x) { transition_jacobian_blocks(prob, x, A, B, C); };

    // forward block elimination, backward substitution
    std::vector<Eigen::MatrixXd> U(T);
    auto block_solve = [&](const Eigen::VectorXd& rhs, Eigen::VectorXd& dx) {
        Eigen::MatrixXd D = B[0];
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(D);
        U[0] = lu.solve(C[0]);
        dx.segment(0, n) = lu.solve(rhs.segment(0, n));
        for (int t = 1; t < T; ++t) {
            D = B[t] - A[t] * U[t - 1];
            lu.compute(D);
            if (t < T - 1) U[t] = lu.solve(C[t]);
            dx.segment(static_cast<size_t>(t) * n, n) =
                lu.solve((rhs.segment(static_cast<size_t>(t) * n, n) -
                          A[t] * dx.segment(static_cast<size_t>(t - 1) * n, n))
                             .eval());
        }
        for (int t = T - 2; t >= 0; --t)
            dx.segment(static_cast<size_t>(t) * n, n) -=
                U[t] * dx.segment(static_cast<size_t>(t + 1) * n, n);
    };

    PathMatrix x = detail::transition_guess(prob);
    {
        const std::string bad = guard(x);
        if (!bad.empty()) throw SolverError("transition guess inadmissible: " + bad);
    }

    Eigen::VectorXd f(static_cast<size_t>(T) * n), f_trial(f.size()), dx(f.size());
    PathMatrix x_trial(T, n);
    stacked_residual(x, f);
    double norm = f.lpNorm<Eigen::Infinity>();

    SolverDiagnostics diag;
    bool converged = norm < opt.tol;
    while (!converged) {
        if (diag.iterations >= opt.max_iter) {
            int worst;
            f.cwiseAbs().maxCoeff(&worst);
            std::ostringstream os;
            os << "transition: no convergence after " << opt.max_iter
               << " iterations; residual max-norm = " << norm << "; worst equation: "
               << eq_name(worst % n) << " in period " << worst / n;
            throw SolverError(os.str());
        }
        assemble(x);
        block_solve(f, dx);

        double scale = 1.0;
        bool accepted = false;
        std::string last_block;
        for (int bt = 0; bt <= opt.max_backtrack; ++bt) {
            for (int t = 0; t < T; ++t)
                x_trial.row(t) = x.row(t) - scale * dx.segment(static_cast<size_t>(t) * n, n).transpose();
            last_block = guard(x_trial);
            if (last_block.empty()) {
                stacked_residual(x_trial, f_trial);
                const double trial_norm = f_trial.lpNorm<Eigen::Infinity>();
                if (trial_norm < norm && std::isfinite(trial_norm)) {
                    x = x_trial;
                    f = f_trial;
                    norm = trial_norm;
                    accepted = true;
                    break;
                }
                last_block = "residual norm did not decrease";
            }
            scale *= 0.5;
        }
        ++diag.iterations;
        if (!accepted) {
            int worst;
            f.cwiseAbs().maxCoeff(&worst);
            std::ostringstream os;
            os << "transition: line search failed (" << last_block
               << "); residual max-norm = " << norm << "; worst equation: " << eq_name(worst % n)
               << " in period " << worst / n;
            throw SolverError(os.str());
        }
        converged = norm < opt.tol;
    }
    diag.residual_norm = norm;

    TransitionPath path{m, prob.vintage, std::move(x), prob.initial_prev, prob.terminal, diag,
                        0.0};

    // horizon adequacy: the end of the path must have settled on the terminal
    // steady state, and the last tenth of the path must already be close
    int worst_var = 0;
    double worst_gap = 0.0;
    for (int v = 0; v < n; ++v) {
        const double gap = std::abs(path.states(T - 1, v) - prob.terminal[v]) /
                           std::max(1.0, std::abs(prob.terminal[v]));
        if (gap > worst_gap) {
            worst_gap = gap;
            worst_var = v;
        }
    }
    path.terminal_gap = worst_gap;
    if (worst_gap > opt.terminal_gap_tol) {
        std::ostringstream os;
        os << "horizon too short: period " << T - 1 << " deviates from the terminal steady state"
           << " by " << worst_gap << " (worst variable: " << var_name(worst_var) << ")";
        throw SolverError(os.str());
    }
    for (int t = T - std::max(1, T / 10); t < T; ++t)
        for (int v = 0; v < n; ++v) {
            const double gap = std::abs(path.states(t, v) - prob.terminal[v]) /
                               std::max(1.0, std::abs(prob.terminal[v]));
            if (gap > opt.tail_tol) {
                std::ostringstream os;
                os << "horizon too short: tail period " << t << " deviates from terminal by "
                   << gap << " (variable " << var_name(v) << ")";
                throw SolverError(os.str());
            }
        }
    return path;
}

// Independent consistency check of the investment block: rebuild the
// deduction PDV lambda_t by direct summation of the schedule weights
// discounted along the solved path (steady-state tail attached analytically),
// then evaluate the capital Euler equation in its wedge form
//   1 = Lambda_{t,t+1} [ (1-lambda_{t+1} tau)/(1-lambda_t tau) (1-delta(u_{t+1}))
//                        + (1-tau)/(1-lambda_t tau) MPK_{t+1} ]
// and return the largest absolute deviation over the checkable periods.
inline double euler_wedge_check(const TransitionPath& path)
{
    const ModelSpec& m = path.spec;
    const int T = path.horizon();
    require(T >= 3, "euler_wedge_check needs at least 3 periods");

    // the analytic tail assumes the path has settled on the terminal state
    double end_gap = 0.0;
    for (int v = 0; v < var::count; ++v)
        end_gap = std::max(end_gap, std::abs(path.states(T - 1, v) - path.terminal[v]) /
                                        std::max(1.0, std::abs(path.terminal[v])));
    if (end_gap > 1e-4) {
        std::ostringstream os;
        os << "euler_wedge_check: horizon insufficient, path end deviates from the terminal "
              "steady state by "
           << end_gap;
        throw SolverError(os.str());
    }

    const double tau = m.policy.tau_corp;
    auto rate_at = [&](int t) {
        return path.vintage.active_after(t) ? path.vintage.sched_after.rate_dbal
                                            : path.vintage.sched_before.rate_dbal;
    };

    // lambda_t by direct summation for the schedule active at t
    std::vector<double> lambda(T + 1);
    for (int t = 0; t <= T; ++t) {
        const double d = rate_at(std::min(t, T - 1));
        const double lambda_ss = pdv_of_schedule(d, m.beta);
        if (t == T) {
            lambda[t] = lambda_ss;
            continue;
        }
        double cum = 1.0, weight = d, sum = 0.0;
        for (int j = 0; t + j < T; ++j) {
            sum += cum * weight;
            cum *= path.states(t + j, var::sdf);
            weight *= (1.0 - d);
        }
        lambda[t] = sum + cum * std::pow(1.0 - d, T - t) * lambda_ss;
    }

    double max_dev = 0.0;
    for (int t = 0; t < T; ++t) {
        if (!path.vintage.active_after(t) || rate_at(t) != rate_at(t + 1)) continue;
        const auto next = t == T - 1
                              ? std::span<const double>{path.terminal.data(),
                                                        static_cast<size_t>(var::count)}
                              : path.period(t + 1);
        const double mpk = m.alpha_c * next[var::out_c] / next[var::cap_c];
        const double keep = 1.0 - m.depreciation_c(next[var::util]);
        const double lhs = 1.0;
        const double rhs = path.states(t, var::sdf) *
                           ((1.0 - lambda[t + 1] * tau) / (1.0 - lambda[t] * tau) * keep +
                            (1.0 - tau) / (1.0 - lambda[t] * tau) * mpk);
        max_dev = std::max(max_dev, std::abs(lhs - rhs));
    }
    return max_dev;
}

// Flat path at a steady state, mainly for wedge checks and null baselines.
inline TransitionPath flat_path(const SteadyState& ss, int horizon)
{
    TransitionPath p{ss.spec, VintagePolicy::uniform(ss.spec.policy.sched),
                     PathMatrix(horizon, var::count), ss.state, ss.state, {}, 0.0};
    for (int t = 0; t < horizon; ++t) p.states.row(t) = ss.state.transpose();
    return p;
}

} // namespace corptax
