#pragma once
#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corptax/config.hpp"
#include "corptax/scenarios.hpp"

namespace corptax {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 17 significant digits, locale-independent: doubles survive a round trip
// through the CSV bit-exactly.
inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace detail {

// Tracks written files so a failed multi-file emission leaves nothing behind.
class Emitter {
public:
    explicit Emitter(const std::filesystem::path& dir) : dir_(dir)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    ~Emitter()
    {
        if (!committed_) {
            std::error_code ec;
            for (const auto& f : files_) std::filesystem::remove(f, ec);
        }
    }

    void write(const std::string& name, const std::string& content)
    {
        const std::filesystem::path target = dir_ / name;
        const std::filesystem::path tmp = target.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
            out << content;
            if (!out.flush()) throw IoError("short write to " + tmp.string());
        }
        std::error_code ec;
        std::filesystem::rename(tmp, target, ec);
        if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
        files_.push_back(target);
    }

    std::vector<std::filesystem::path> commit()
    {
        committed_ = true;
        return files_;
    }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> files_;
    bool committed_ = false;
};

} // namespace detail

// One row per period: period index, every state variable, then the
// aggregates (fixed-price headline plus current-price variants).
inline std::string path_csv(const TransitionPath& path, double price_ref)
{
    std::string out = "period";
    for (int v = 0; v < var::count; ++v) out += std::string(",") + var_name(v);
    out += ",gdp,investment,gdp_current_price,investment_current_price\n";
    for (int t = 0; t < path.horizon(); ++t) {
        out += std::to_string(t);
        for (int v = 0; v < var::count; ++v) out += "," + format_double(path.states(t, v));
        const Aggregates fixed = aggregates_at_price(path.period(t), price_ref);
        const Aggregates cur = aggregates(path.period(t));
        out += "," + format_double(fixed.gdp) + "," + format_double(fixed.investment) + "," +
               format_double(cur.gdp) + "," + format_double(cur.investment) + "\n";
    }
    return out;
}

inline std::string summary_csv(const ReformResult& r)
{
    std::string out = "variable,long_run_change,multiplier,impact_deviation\n";
    for (const auto& [name, st] : r.stats) {
        out += name + "," + format_double(st.long_run_change) + ",";
        out += st.multiplier_defined ? format_double(st.multiplier) : std::string("na");
        out += "," + format_double(st.impact_dev) + "\n";
    }
    return out;
}

inline std::string steady_state_csv(const SteadyState& ss)
{
    std::string out = "variable,value\n";
    for (int v = 0; v < var::count; ++v)
        out += std::string(var_name(v)) + "," + format_double(ss.at(v)) + "\n";
    const Aggregates a = aggregates(ss.view());
    out += "gdp," + format_double(a.gdp) + "\n";
    out += "investment," + format_double(a.investment) + "\n";
    out += "profit_over_gdp," + format_double(ss.moments.profit_over_gdp) + "\n";
    out += "payout_over_gdp," + format_double(ss.moments.payout_over_gdp) + "\n";
    out += "tax_corp_over_gdp," + format_double(ss.moments.tax_corp_over_gdp) + "\n";
    out += "tax_indiv_over_gdp," + format_double(ss.moments.tax_indiv_over_gdp) + "\n";
    out += "lambda_ss," + format_double(ss.wedge.lambda_ss) + "\n";
    out += "wedge," + format_double(ss.wedge.wedge) + "\n";
    out += "distortion," + format_double(ss.wedge.distortion) + "\n";
    return out;
}

inline std::string grid_csv(const DistortionGrid& g)
{
    std::string out = "tau,lambda,distortion\n";
    for (size_t i = 0; i < g.tau.size(); ++i)
        for (size_t j = 0; j < g.lambda.size(); ++j)
            out += format_double(g.tau[i]) + "," + format_double(g.lambda[j]) + "," +
                   format_double(g.at(i, j)) + "\n";
    return out;
}

// Historical tax codes placed in the (tau, lambda) policy space.
struct PolicyPoint {
    std::string label;
    double tau;
    double rate_dbal;
};

inline std::vector<PolicyPoint> policy_points()
{
    return {{"1961", 0.52, 0.10},
            {"1965-kennedy", 0.48, 0.1857},
            {"2017", 0.35, 0.4823},
            {"2018-tcja", 0.21, 0.8305}};
}

inline std::string policy_points_csv(double alpha, double beta)
{
    std::string out = "label,tau,lambda,distortion\n";
    for (const auto& p : policy_points()) {
        const WedgeReport w = wedge_report(p.tau, p.rate_dbal, beta, alpha);
        out += p.label + "," + format_double(p.tau) + "," + format_double(w.lambda_ss) + "," +
               format_double(w.distortion) + "\n";
    }
    return out;
}

inline nlohmann::json solver_json(const SolverDiagnostics& d)
{
    return {{"iterations", d.iterations}, {"residual_norm", d.residual_norm}};
}

inline nlohmann::json policy_json(const TaxPolicy& p)
{
    return {{"tau_corp", p.tau_corp},
            {"rate_dbal", p.sched.rate_dbal},
            {"tau_indiv", p.tau_indiv},
            {"theta", p.theta_waste}};
}

inline nlohmann::json manifest_json(const ReformResult& r, const RunConfig& cfg)
{
    nlohmann::json j;
    j["tool"] = "corptax";
    j["config"] = config_to_json(cfg);
    j["scenario"] = {
        {"name", r.scenario.name},
        {"variant", r.scenario.spec_pre.variant == Variant::baseline ? "baseline" : "extended"},
        {"pre_policy", policy_json(r.scenario.spec_pre.policy)},
        {"post_policy", policy_json(r.scenario.policy_post)},
        {"new_investment_only", r.scenario.new_investment_only},
        {"horizon", r.scenario.horizon},
        {"cum_periods", r.scenario.cum_periods},
        {"beta", r.scenario.spec_pre.beta},
        {"taste_weight", r.scenario.spec_pre.taste_weight()}};
    j["solver"] = {
        {"steady_state_pre", solver_json({r.pre.iterations, r.pre.residual_norm})},
        {"steady_state_post", solver_json({r.post.iterations, r.post.residual_norm})},
        {"transition", solver_json(r.reform_path.diag)},
        {"terminal_gap", r.reform_path.terminal_gap},
        {"tol_ss", cfg.tol_ss},
        {"tol_transition", cfg.tol_transition}};
    j["rate_cut_interpretation"] = cfg.rate_cut_interpretation;
    j["revenue_loss_cum"] = r.revenue_loss_cum;
    nlohmann::json stats;
    for (const auto& [name, st] : r.stats) {
        stats[name] = {{"long_run_change", st.long_run_change},
                       {"impact_deviation", st.impact_dev}};
        if (st.multiplier_defined) stats[name]["multiplier"] = st.multiplier;
    }
    j["stats"] = stats;
    return j;
}

// Write the output bundle for one reform run; returns the files written.
inline std::vector<std::filesystem::path> emit_results(const ReformResult& r,
                                                       const RunConfig& cfg,
                                                       const std::string& subdir = "")
{
    detail::Emitter em(subdir.empty() ? std::filesystem::path(cfg.out_dir)
                                      : std::filesystem::path(cfg.out_dir) / subdir);
    const double price_ref = r.pre.at(var::price_pt);
    if (cfg.emit.paths) {
        em.write("path.csv", path_csv(r.reform_path, price_ref));
        em.write("path_baseline.csv", path_csv(r.baseline_path, price_ref));
    }
    if (cfg.emit.summary) em.write("summary.csv", summary_csv(r));
    if (cfg.emit.manifest) em.write("manifest.json", manifest_json(r, cfg).dump(2) + "\n");
    if (cfg.emit.distortion_grid) {
        em.write("distortion_grid.csv",
                 grid_csv(distortion_grid({cfg.grid.tau_lo, cfg.grid.tau_hi, cfg.grid.tau_n},
                                          {cfg.grid.lambda_lo, cfg.grid.lambda_hi,
                                           cfg.grid.lambda_n},
                                          cfg.grid.alpha)));
        em.write("policy_points.csv", policy_points_csv(cfg.grid.alpha, cfg.grid.beta));
    }
    return em.commit();
}

inline std::vector<std::filesystem::path> emit_grid(const RunConfig& cfg)
{
    detail::Emitter em(cfg.out_dir);
    em.write("distortion_grid.csv",
             grid_csv(distortion_grid({cfg.grid.tau_lo, cfg.grid.tau_hi, cfg.grid.tau_n},
                                      {cfg.grid.lambda_lo, cfg.grid.lambda_hi, cfg.grid.lambda_n},
                                      cfg.grid.alpha)));
    em.write("policy_points.csv", policy_points_csv(cfg.grid.alpha, cfg.grid.beta));
    nlohmann::json j;
    j["tool"] = "corptax";
    j["config"] = config_to_json(cfg);
    em.write("manifest.json", j.dump(2) + "\n");
    return em.commit();
}

inline std::vector<std::filesystem::path> emit_steady_state(const SteadyState& ss,
                                                            const RunConfig& cfg)
{
    detail::Emitter em(cfg.out_dir);
    em.write("steady_state.csv", steady_state_csv(ss));
    nlohmann::json j;
    j["tool"] = "corptax";
    j["config"] = config_to_json(cfg);
    j["solver"] = {{"steady_state", solver_json({ss.iterations, ss.residual_norm})}};
    j["moments"] = {{"profit_over_gdp", ss.moments.profit_over_gdp},
                    {"payout_over_gdp", ss.moments.payout_over_gdp},
                    {"tax_corp_over_gdp", ss.moments.tax_corp_over_gdp},
                    {"tax_indiv_over_gdp", ss.moments.tax_indiv_over_gdp}};
    j["wedge"] = {{"lambda_ss", ss.wedge.lambda_ss},
                  {"wedge", ss.wedge.wedge},
                  {"distortion", ss.wedge.distortion}};
    em.write("manifest.json", j.dump(2) + "\n");
    return em.commit();
}

// The five-way factor decomposition gets one directory per experiment plus a
// comparison table; the manifest records the cut interpretation in force.
inline std::vector<std::filesystem::path> emit_factor_decomposition(const FactorDecomposition& d,
                                                                    const RunConfig& cfg)
{
    std::vector<std::filesystem::path> written;
    auto sub = [&](const ReformResult& r, const std::string& dir) {
        auto files = emit_results(r, cfg, dir);
        written.insert(written.end(), files.begin(), files.end());
    };
    sub(d.r1961, "calibration-1961");
    sub(d.r2017, "calibration-2017");
    sub(d.sched_1961, "calibration-2017-sched61");
    sub(d.rate_1961, "calibration-2017-rate61");
    sub(d.share_1961, "calibration-2017-share61");

    detail::Emitter em(cfg.out_dir);
    std::string csv = "variable,lr_1961,lr_2017,lr_2017_sched61,lr_2017_rate61,lr_2017_share61,"
                      "one_at_a_time_sum,interaction\n";
    for (size_t i = 0; i < d.one_at_a_time_sum.size(); ++i) {
        const std::string& name = d.one_at_a_time_sum[i].first;
        csv += name + "," + format_double(d.r1961.stat(name).long_run_change) + "," +
               format_double(d.r2017.stat(name).long_run_change) + "," +
               format_double(d.sched_1961.stat(name).long_run_change) + "," +
               format_double(d.rate_1961.stat(name).long_run_change) + "," +
               format_double(d.share_1961.stat(name).long_run_change) + "," +
               format_double(d.one_at_a_time_sum[i].second) + "," +
               format_double(d.interaction[i].second) + "\n";
    }
    em.write("factor_decomposition.csv", csv);
    nlohmann::json j;
    j["tool"] = "corptax";
    j["config"] = config_to_json(cfg);
    j["rate_cut_interpretation"] = cfg.rate_cut_interpretation;
    j["rate_cut_size"] = cfg.rate_cut_size;
    em.write("manifest.json", j.dump(2) + "\n");
    auto files = em.commit();
    written.insert(written.end(), files.begin(), files.end());
    return written;
}

} // namespace corptax
