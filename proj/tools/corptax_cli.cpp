// corptax: deterministic two-sector general-equilibrium engine for corporate
// tax reform experiments.
//
// Verbs:
//   solve-ss [scenario]   solve a pre-reform steady state, write steady_state.csv
//   run <scenario>        run a reform (builtin name or --config), write csv bundle
//   grid                  emit the distortion map over the (tau, lambda) policy space
//   check                 run the quick invariant suite
//
// Exit codes: 0 success, 1 failed invariant check, 2 configuration error,
// 3 solver failure.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "corptax/config.hpp"
#include "corptax/io.hpp"
#include "corptax/scenarios.hpp"
#include "corptax/steady_state.hpp"
#include "corptax/taxcode.hpp"
#include "corptax/transition.hpp"

using namespace corptax;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    int horizon = 0;
    double tol = 0.0;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--config", config_path, "JSON configuration file");
        cmd->add_option("--out", out_dir, "Output directory (overrides config)");
        cmd->add_option("--horizon", horizon, "Transition horizon in periods (overrides config)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--tol", tol, "Solver tolerance (overrides config)")
            ->check(CLI::PositiveNumber);
    }
};

RunConfig load_config(const CommonFlags& flags, const std::string& scenario_arg)
{
    RunConfig cfg;
    if (!flags.config_path.empty()) {
        std::ifstream in(flags.config_path, std::ios::binary);
        if (!in) throw ConfigException({{flags.config_path, "readable file", "cannot open"}});
        std::ostringstream buf;
        buf << in.rdbuf();
        cfg = parse_config_or_throw(buf.str());
    } else {
        cfg.scenario_name = "null";
    }
    if (!scenario_arg.empty()) {
        cfg.scenario_name = scenario_arg;
        cfg.inline_scenario.reset();
    }
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (flags.horizon > 0) cfg.horizon = flags.horizon;
    if (flags.tol > 0.0) {
        cfg.tol_ss = flags.tol;
        cfg.tol_transition = flags.tol;
    }
    return cfg;
}

SolverOptions solver_options(const RunConfig& cfg, bool transition)
{
    SolverOptions opt;
    opt.tol = transition ? cfg.tol_transition : cfg.tol_ss;
    return opt;
}

int cmd_solve_ss(const CommonFlags& flags, const std::string& scenario_arg)
{
    const RunConfig cfg = load_config(flags, scenario_arg);
    const Scenario sc = materialize_scenario(cfg, solver_options(cfg, false));
    const SteadyState ss =
        solve_steady_state(sc.spec_pre, std::nullopt, solver_options(cfg, false));
    const auto files = emit_steady_state(ss, cfg);
    std::printf("steady state \"%s\": residual %.2e after %d iterations\n", sc.name.c_str(),
                ss.residual_norm, ss.iterations);
    std::printf("  moments: profit/GDP %.3f  payout/GDP %.3f  T_corp/GDP %.3f  T_indiv/GDP %.3f\n",
                ss.moments.profit_over_gdp, ss.moments.payout_over_gdp,
                ss.moments.tax_corp_over_gdp, ss.moments.tax_indiv_over_gdp);
    std::printf("  wedge %.4f  lambda %.4f  distortion %.4f\n", ss.wedge.wedge,
                ss.wedge.lambda_ss, ss.wedge.distortion);
    for (const auto& f : files) std::printf("  wrote %s\n", f.c_str());
    return 0;
}

int cmd_run(const CommonFlags& flags, const std::string& scenario_arg)
{
    if (scenario_arg.empty() && flags.config_path.empty())
        throw ConfigException({{"scenario", "a builtin name argument or --config", "missing"}});
    const RunConfig cfg = load_config(flags, scenario_arg);
    const std::string name = cfg.inline_scenario ? cfg.inline_scenario->name : cfg.scenario_name;

    if (name == "fig10-grid") {
        for (const auto& f : emit_grid(cfg)) std::printf("wrote %s\n", f.c_str());
        return 0;
    }
    if (name == "fig9-decomposition") {
        const FactorDecomposition d = decompose_factors(
            cfg.rate_cut_interpretation == "proportional", cfg.rate_cut_size,
            cfg.horizon.value_or(300), cfg.tau_indiv_1961, solver_options(cfg, true),
            cfg.cum_periods.value_or(20));
        for (const auto& f : emit_factor_decomposition(d, cfg))
            std::printf("wrote %s\n", f.c_str());
        double sum_inv = 0.0;
        for (const auto& [n, v] : d.one_at_a_time_sum)
            if (n == "investment") sum_inv = v;
        std::printf("1961 long-run investment %+.4f; one-at-a-time sum %+.4f (%s cut)\n",
                    d.r1961.stat("investment").long_run_change, sum_inv,
                    cfg.rate_cut_interpretation.c_str());
        return 0;
    }

    const Scenario sc = materialize_scenario(cfg, solver_options(cfg, false));
    const ReformResult r = run_scenario(sc, solver_options(cfg, true));
    const auto files = emit_results(r, cfg);
    std::printf("scenario \"%s\": transition converged to %.2e in %d iterations\n",
                sc.name.c_str(), r.reform_path.diag.residual_norm, r.reform_path.diag.iterations);
    for (const char* key : {"gdp", "investment", "payout", "revenue_corp"}) {
        const VarStat& st = r.stat(key);
        if (st.multiplier_defined)
            std::printf("  %-12s long-run %+8.4f  multiplier %+7.3f\n", key, st.long_run_change,
                        st.multiplier);
        else
            std::printf("  %-12s long-run %+8.4f  multiplier n/a\n", key, st.long_run_change);
    }
    for (const auto& f : files) std::printf("  wrote %s\n", f.c_str());
    return 0;
}

int cmd_grid(const CommonFlags& flags)
{
    RunConfig cfg = load_config(flags, "");
    for (const auto& f : emit_grid(cfg)) std::printf("wrote %s\n", f.c_str());
    return 0;
}

int cmd_check()
{
    int failures = 0;
    auto check = [&](const char* name, bool ok, double value) {
        std::printf("[%s] %-55s %.3e\n", ok ? " ok " : "FAIL", name, value);
        if (!ok) ++failures;
    };

    const double beta = 0.94, alpha = 0.35;

    check("schedule PDV anchor (0.4823 -> 0.9395)",
          std::abs(pdv_of_schedule(0.4823, beta) - 0.9395) < 1e-3,
          pdv_of_schedule(0.4823, beta));
    double max_rt = 0.0;
    for (int i = 1; i <= 10; ++i)
        for (int b = 1; b <= 10; ++b) {
            const double d = i / 10.0, bb = 0.4 + 0.059 * b;
            max_rt = std::max(max_rt, std::abs(rate_from_pdv(pdv_of_schedule(d, bb), bb) - d));
        }
    check("rate_from_pdv round trip on 100 pairs", max_rt < 1e-12, max_rt);

    const WedgeReport w17 = wedge_report(0.35, 0.4823, beta, alpha);
    const WedgeReport w61 = wedge_report(0.52, 0.10, beta, alpha);
    const WedgeReport w65 = wedge_report(0.48, 0.1857, beta, alpha);
    check("2017 wedge anchor (0.97)", std::abs(w17.wedge - 0.97) < 0.005, w17.wedge);
    check("1961 wedge anchor (0.72)", std::abs(w61.wedge - 0.72) < 0.005, w61.wedge);
    check("1965 wedge anchor (0.84)", std::abs(w65.wedge - 0.84) < 0.005, w65.wedge);
    check("1961 distortion anchor (16%)", std::abs(w61.distortion - 0.16) < 0.003, w61.distortion);
    check("2017 distortion anchor (1.7%)", std::abs(w17.distortion - 0.017) < 0.002,
          w17.distortion);

    const SteadyState ss17 = solve_steady_state(spec_2017_baseline());
    check("2017 profit/GDP moment (0.08 +- 0.01)",
          std::abs(ss17.moments.profit_over_gdp - 0.08) < 0.01, ss17.moments.profit_over_gdp);
    check("2017 payout/GDP moment (0.05 +- 0.01)",
          std::abs(ss17.moments.payout_over_gdp - 0.05) < 0.01, ss17.moments.payout_over_gdp);
    check("2017 corporate revenue/GDP moment (0.03 +- 0.01)",
          std::abs(ss17.moments.tax_corp_over_gdp - 0.03) < 0.01,
          ss17.moments.tax_corp_over_gdp);
    check("2017 individual revenue/GDP moment (0.10 +- 0.01)",
          std::abs(ss17.moments.tax_indiv_over_gdp - 0.10) < 0.01,
          ss17.moments.tax_indiv_over_gdp);
    check("household budget clears (Walras)",
          std::abs(walras_residual(ss17.spec, ss17.view())) < 1e-9,
          walras_residual(ss17.spec, ss17.view()));
    const VintagePolicy vp17 = VintagePolicy::uniform(ss17.spec.policy.sched);
    const double tb_gap =
        std::abs(tax_base_capital_route(ss17.spec, vp17, 1, ss17.view()) - ss17.at(var::tax_base));
    check("tax base equals capital income route", tb_gap < 1e-10, tb_gap);

    BaselineParams restricted;
    restricted.gamma = 1.0;
    restricted.labor_c = 1.0;
    restricted.policy = TaxPolicy(0.30, DepreciationSchedule(0.30), 0.0, 0.0);
    const ModelSpec rm = ModelSpec::baseline(restricted);
    const AnalyticSS a = analytic_steady_state(rm);
    const SteadyState n = solve_steady_state(rm);
    check("restricted model: numeric output matches closed form",
          std::abs(n.at(var::out_c) / a.y - 1.0) < 1e-8, n.at(var::out_c) / a.y - 1.0);

    restricted.policy = TaxPolicy(0.35, DepreciationSchedule(1.0), 0.0, 0.0);
    const SteadyState fe = solve_steady_state(ModelSpec::baseline(restricted));
    const double rho = rho_of_beta(beta);
    check("full expensing: tax base = rho * k and revenue > 0",
          std::abs(fe.at(var::tax_base) / (rho * fe.at(var::cap_c)) - 1.0) < 1e-8 &&
              fe.at(var::tax_corp) > 0.0,
          fe.at(var::tax_base) / (rho * fe.at(var::cap_c)) - 1.0);

    const TransitionPath null_path = solve_transition(
        make_reform_problem(ss17, ss17, VintagePolicy::uniform(ss17.spec.policy.sched), 60));
    double flat = 0.0;
    for (int t = 0; t < null_path.horizon(); ++t)
        for (int v = 0; v < var::count; ++v)
            flat = std::max(flat, std::abs(null_path.states(t, v) - ss17.at(v)));
    check("null reform stays flat", flat < 1e-9, flat);

    const double lam_gap =
        std::abs((1.0 - ss17.at(var::q_cap)) / 0.35 - pdv_of_schedule(0.4823, beta));
    check("steady-state capital price implies the schedule PDV", lam_gap < 1e-10, lam_gap);

    std::printf(failures ? "%d check(s) failed\n" : "all checks passed\n", failures);
    return failures ? 1 : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"corptax: two-sector general-equilibrium corporate tax engine"};
    app.require_subcommand(1);

    CommonFlags ss_flags, run_flags, grid_flags;
    std::string ss_scenario = "tcja17-baseline";
    std::string run_scenario_name;

    CLI::App* ss_cmd = app.add_subcommand("solve-ss", "Solve a scenario's pre-reform steady state");
    ss_cmd->add_option("scenario", ss_scenario, "Builtin scenario name");
    ss_flags.attach(ss_cmd);

    CLI::App* run_cmd = app.add_subcommand("run", "Run a reform scenario end to end");
    run_cmd->add_option("scenario", run_scenario_name,
                        "Builtin scenario name (or provide --config)");
    run_flags.attach(run_cmd);

    CLI::App* grid_cmd = app.add_subcommand("grid", "Emit the distortion map");
    grid_flags.attach(grid_cmd);

    app.add_subcommand("check", "Run the quick invariant suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ss_cmd->parsed()) return cmd_solve_ss(ss_flags, ss_scenario);
        if (run_cmd->parsed()) return cmd_run(run_flags, run_scenario_name);
        if (grid_cmd->parsed()) return cmd_grid(grid_flags);
        return cmd_check();
    } catch (const ConfigException& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return 2;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return 3;
    }
}
