#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace corptax {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverOptions {
    double tol = 1e-11;             // max-norm on the stacked residual
    int max_iter = 200;
    int max_backtrack = 30;         // step halvings per iteration
    double terminal_gap_tol = 1e-7; // transition only: t = T-1 vs terminal
    double tail_tol = 1e-6;         // transition only: last 10% of periods
};

struct SolverDiagnostics {
    int iterations = 0;
    double residual_norm = 0.0;
};

// Damped Newton on a dense square system. guard(x) returns an empty string
// for admissible points, otherwise a description of the violated constraint;
// steps are halved until the trial is admissible and the residual norm
// decreases. label(i) names equation i for diagnostics.
template <class ResidualFn, class JacobianFn, class GuardFn, class LabelFn>
SolverDiagnostics damped_newton(Eigen::VectorXd& x, ResidualFn residual, JacobianFn jacobian,
                                GuardFn guard, LabelFn label, const SolverOptions& opt)
{
    const int n = static_cast<int>(x.size());
    Eigen::VectorXd f(n), f_trial(n), step(n), x_trial(n);
    Eigen::MatrixXd jac(n, n);

    {
        const std::string bad = guard(x);
        if (!bad.empty()) throw SolverError("initial guess inadmissible: " + bad);
    }
    residual(x, f);
    double norm = f.lpNorm<Eigen::Infinity>();

    SolverDiagnostics diag;
    for (int it = 0; it < opt.max_iter; ++it) {
        if (norm < opt.tol) {
            diag.residual_norm = norm;
            return diag;
        }
        jacobian(x, jac);
        step = jac.partialPivLu().solve(f);

        double scale = 1.0;
        bool accepted = false;
        std::string last_block;
        for (int bt = 0; bt <= opt.max_backtrack; ++bt) {
            x_trial = x - scale * step;
            last_block = guard(x_trial);
            if (last_block.empty()) {
                residual(x_trial, f_trial);
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
            os << "line search failed after " << opt.max_backtrack << " halvings ("
               << last_block << "); residual max-norm = " << norm
               << "; worst equation: " << label(worst);
            throw SolverError(os.str());
        }
    }
    int worst;
    f.cwiseAbs().maxCoeff(&worst);
    std::ostringstream os;
    os << "no convergence after " << opt.max_iter << " iterations; residual max-norm = " << norm
       << "; worst equation: " << label(worst);
    throw SolverError(os.str());
}

} // namespace corptax
