#pragma once
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "corptax/scenarios.hpp"

namespace corptax {

// Declarative scenario description; turned into a Scenario (and, when a share
// target is given, a calibrated eta) by materialize_scenario.
struct ScenarioConfig {
    std::string name = "custom";
    std::string variant = "extended"; // "baseline" | "extended"
    double pre_tau_corp = 0.35;
    double pre_rate_dbal = 0.4823;
    double pre_tau_indiv = 0.135;
    double pre_theta = 0.0;
    double post_tau_corp = 0.35;
    double post_rate_dbal = 0.4823;
    double post_tau_indiv = 0.135;
    double post_theta = 0.0;
    bool new_investment_only = true;
    bool is_null = false;
    double beta = 0.94;
    double sigma = 1.0;
    double gamma = 0.575;
    double labor_c = 0.575;
    double eta = 0.55;
    double epsilon = 0.33;
    double phi = 4.0;
    double alpha_c = 0.35;
    double alpha_p = 0.35;
    double delta_c = 0.10;
    double delta_p = 0.10;
    double delta2 = 0.10;
    std::optional<double> ccorp_share_target; // calibrate eta to this share

    bool operator==(const ScenarioConfig&) const = default;
};

struct GridConfig {
    double tau_lo = 0.0;
    double tau_hi = 0.60;
    int tau_n = 61;
    double lambda_lo = 0.50;
    double lambda_hi = 1.0;
    int lambda_n = 51;
    double alpha = 0.35;
    double beta = 0.94;

    bool operator==(const GridConfig&) const = default;
};

struct EmitConfig {
    bool paths = true;
    bool summary = true;
    bool manifest = true;
    bool distortion_grid = false;

    bool operator==(const EmitConfig&) const = default;
};

struct RunConfig {
    std::string scenario_name;                     // empty when inline
    std::optional<ScenarioConfig> inline_scenario; // set when "scenario" is an object
    std::string out_dir = "out";
    std::optional<int> horizon;
    std::optional<int> cum_periods;
    double tol_ss = 1e-11;
    double tol_transition = 1e-10;
    std::string rate_cut_interpretation = "percentage_point"; // | "proportional"
    double rate_cut_size = 0.10;
    double tau_indiv_1961 = 0.135;
    EmitConfig emit;
    GridConfig grid;

    bool operator==(const RunConfig&) const = default;
};

struct ConfigError {
    std::string key;
    std::string expected;
    std::string got;

    std::string message() const { return key + ": expected " + expected + ", got " + got; }
};

struct ConfigException : std::runtime_error {
    std::vector<ConfigError> violations;

    explicit ConfigException(std::vector<ConfigError> v)
        : std::runtime_error(join(v)), violations(std::move(v))
    {
    }

    static std::string join(const std::vector<ConfigError>& v)
    {
        std::string out = "configuration invalid:";
        for (const auto& e : v) out += "\n  " + e.message();
        return out;
    }
};

struct ParseOutcome {
    std::optional<RunConfig> config; // set when violations is empty
    std::vector<ConfigError> violations;
};

namespace detail {

using nlohmann::json;

inline std::string type_name(const json& j)
{
    if (j.is_null()) return "null";
    if (j.is_boolean()) return "boolean";
    if (j.is_number_integer()) return "integer";
    if (j.is_number()) return "number";
    if (j.is_string()) return "string " + j.dump();
    if (j.is_array()) return "array";
    return "object";
}

class Checker {
public:
    Checker(const json& j, std::string prefix, std::vector<ConfigError>& errs)
        : obj_(j), prefix_(std::move(prefix)), errs_(errs)
    {
    }

    bool has(const char* key) const { return obj_.contains(key); }

    void number(const char* key, double& slot, double lo, double hi, const char* range)
    {
        mark(key);
        if (!obj_.contains(key)) return;
        const json& v = obj_.at(key);
        if (!v.is_number()) {
            fail(key, std::string("number in ") + range, type_name(v));
            return;
        }
        const double x = v.get<double>();
        if (x < lo || x > hi) {
            fail(key, std::string("number in ") + range, v.dump());
            return;
        }
        slot = x;
    }

    void integer(const char* key, std::optional<int>& slot, int lo)
    {
        mark(key);
        if (!obj_.contains(key)) return;
        const json& v = obj_.at(key);
        if (!v.is_number_integer() || v.get<int>() < lo) {
            fail(key, "integer >= " + std::to_string(lo), v.is_number_integer() ? v.dump() : type_name(v));
            return;
        }
        slot = v.get<int>();
    }

    void integer(const char* key, int& slot, int lo)
    {
        std::optional<int> tmp;
        integer(key, tmp, lo);
        if (tmp) slot = *tmp;
    }

    void boolean(const char* key, bool& slot)
    {
        mark(key);
        if (!obj_.contains(key)) return;
        const json& v = obj_.at(key);
        if (!v.is_boolean()) {
            fail(key, "boolean", type_name(v));
            return;
        }
        slot = v.get<bool>();
    }

    void string_choice(const char* key, std::string& slot, std::vector<std::string> allowed)
    {
        mark(key);
        if (!obj_.contains(key)) return;
        const json& v = obj_.at(key);
        std::string expected = "one of {";
        for (size_t i = 0; i < allowed.size(); ++i)
            expected += (i ? ", " : "") + allowed[i];
        expected += "}";
        if (!v.is_string()) {
            fail(key, expected, type_name(v));
            return;
        }
        const std::string s = v.get<std::string>();
        for (const auto& a : allowed)
            if (s == a) {
                slot = s;
                return;
            }
        fail(key, expected, v.dump());
    }

    void string_any(const char* key, std::string& slot)
    {
        mark(key);
        if (!obj_.contains(key)) return;
        const json& v = obj_.at(key);
        if (!v.is_string()) {
            fail(key, "string", type_name(v));
            return;
        }
        slot = v.get<std::string>();
    }

    // every key not visited by a checker is unknown; the schema is strict
    void reject_unknown()
    {
        for (const auto& [key, value] : obj_.items()) {
            bool known = false;
            for (const auto& k : seen_)
                if (k == key) {
                    known = true;
                    break;
                }
            if (!known) fail(key.c_str(), "no such key (strict schema)", type_name(value));
        }
    }

    void fail(const char* key, std::string expected, std::string got)
    {
        errs_.push_back({prefix_ + key, std::move(expected), std::move(got)});
    }

    void mark(const char* key) { seen_.emplace_back(key); }

private:
    const json& obj_;
    std::string prefix_;
    std::vector<ConfigError>& errs_;
    std::vector<std::string> seen_;
};

inline void parse_policy_fields(const json& j, const std::string& prefix, double& tau,
                                double& rate, double& tau_ii, double& theta,
                                std::vector<ConfigError>& errs)
{
    Checker c(j, prefix, errs);
    c.number("tau_corp", tau, 0.0, 0.9999, "[0,1)");
    c.number("rate_dbal", rate, 1e-12, 1.0, "(0,1]");
    c.number("tau_indiv", tau_ii, 0.0, 0.9999, "[0,1)");
    c.number("theta", theta, 0.0, 1.0, "[0,1]");
    c.reject_unknown();
}

inline ScenarioConfig parse_scenario_object(const json& j, std::vector<ConfigError>& errs)
{
    ScenarioConfig sc;
    Checker c(j, "scenario.", errs);
    c.string_any("name", sc.name);
    c.string_choice("variant", sc.variant, {"baseline", "extended"});
    c.mark("pre");
    c.mark("post");
    if (j.contains("pre")) {
        if (!j.at("pre").is_object())
            c.fail("pre", "object with tax policy fields", type_name(j.at("pre")));
        else
            parse_policy_fields(j.at("pre"), "scenario.pre.", sc.pre_tau_corp, sc.pre_rate_dbal,
                                sc.pre_tau_indiv, sc.pre_theta, errs);
    } else {
        c.fail("pre", "object with tax policy fields", "missing");
    }
    if (j.contains("post")) {
        if (!j.at("post").is_object())
            c.fail("post", "object with tax policy fields", type_name(j.at("post")));
        else
            parse_policy_fields(j.at("post"), "scenario.post.", sc.post_tau_corp,
                                sc.post_rate_dbal, sc.post_tau_indiv, sc.post_theta, errs);
    } else {
        c.fail("post", "object with tax policy fields", "missing");
    }
    c.boolean("new_investment_only", sc.new_investment_only);
    c.boolean("is_null", sc.is_null);
    c.number("beta", sc.beta, 1e-6, 0.999999, "(0,1)");
    c.number("sigma", sc.sigma, 1e-9, 1e9, "(0,inf)");
    c.number("gamma", sc.gamma, 1e-9, 1.0, "(0,1]");
    c.number("labor_c", sc.labor_c, 1e-9, 1.0, "(0,1]");
    c.number("eta", sc.eta, 1e-9, 1.0, "(0,1]");
    c.number("epsilon", sc.epsilon, -1e6, 0.999999, "(-inf,1)");
    c.number("phi", sc.phi, 1e-9, 1e9, "(0,inf)");
    c.number("alpha_c", sc.alpha_c, 1e-6, 0.999999, "(0,1)");
    c.number("alpha_p", sc.alpha_p, 1e-6, 0.999999, "(0,1)");
    c.number("delta_c", sc.delta_c, 1e-9, 1.0, "(0,1]");
    c.number("delta_p", sc.delta_p, 1e-9, 1.0, "(0,1]");
    c.number("delta2", sc.delta2, 0.0, 1e9, "[0,inf)");
    c.mark("ccorp_share_target");
    if (j.contains("ccorp_share_target")) {
        double tmp = 0.5;
        Checker inner(j, "scenario.", errs);
        inner.number("ccorp_share_target", tmp, 1e-6, 0.999999, "(0,1)");
        sc.ccorp_share_target = tmp;
    }
    c.reject_unknown();
    return sc;
}

} // namespace detail

// Parse and validate a UTF-8 JSON configuration. Violations are collected
// exhaustively (one entry per offending key) rather than stopping at the
// first. config is set iff violations is empty.
inline ParseOutcome parse_config(const std::string& text)
{
    using detail::json;
    ParseOutcome out;

    json j;
    // an empty file is treated as an empty object so the required-key report
    // fires instead of a bare parse error
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        j = json::object();
    } else {
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            out.violations.push_back({"<document>", "valid JSON", e.what()});
            return out;
        }
    }
    if (!j.is_object()) {
        out.violations.push_back({"<document>", "JSON object", detail::type_name(j)});
        return out;
    }

    RunConfig cfg;
    auto& errs = out.violations;
    detail::Checker c(j, "", errs);

    c.mark("scenario");
    if (!j.contains("scenario")) {
        c.fail("scenario", "required key (builtin name or inline object)", "missing");
    } else if (j.at("scenario").is_string()) {
        cfg.scenario_name = j.at("scenario").get<std::string>();
        bool known = false;
        for (const auto& n : scenario_names())
            if (n == cfg.scenario_name) known = true;
        if (cfg.scenario_name == "fig9-decomposition" || cfg.scenario_name == "fig10-grid")
            known = true;
        if (!known)
            c.fail("scenario", "a builtin scenario name", j.at("scenario").dump());
    } else if (j.at("scenario").is_object()) {
        cfg.inline_scenario = detail::parse_scenario_object(j.at("scenario"), errs);
    } else {
        c.fail("scenario", "builtin name or inline object", detail::type_name(j.at("scenario")));
    }

    c.string_any("out_dir", cfg.out_dir);
    c.integer("horizon", cfg.horizon, 2);
    c.integer("cum_periods", cfg.cum_periods, 1);
    c.number("tol_ss", cfg.tol_ss, 1e-300, 1.0, "(0,1]");
    c.number("tol_transition", cfg.tol_transition, 1e-300, 1.0, "(0,1]");
    c.string_choice("rate_cut_interpretation", cfg.rate_cut_interpretation,
                    {"percentage_point", "proportional"});
    c.number("rate_cut_size", cfg.rate_cut_size, 1e-6, 0.5, "(0,0.5]");
    c.number("tau_indiv_1961", cfg.tau_indiv_1961, 0.0, 0.9999, "[0,1)");

    c.mark("emit");
    if (j.contains("emit")) {
        if (!j.at("emit").is_object()) {
            c.fail("emit", "object", detail::type_name(j.at("emit")));
        } else {
            detail::Checker ce(j.at("emit"), "emit.", errs);
            ce.boolean("paths", cfg.emit.paths);
            ce.boolean("summary", cfg.emit.summary);
            ce.boolean("manifest", cfg.emit.manifest);
            ce.boolean("distortion_grid", cfg.emit.distortion_grid);
            ce.reject_unknown();
        }
    }
    c.mark("grid");
    if (j.contains("grid")) {
        if (!j.at("grid").is_object()) {
            c.fail("grid", "object", detail::type_name(j.at("grid")));
        } else {
            detail::Checker cg(j.at("grid"), "grid.", errs);
            cg.number("tau_lo", cfg.grid.tau_lo, 0.0, 0.9999, "[0,1)");
            cg.number("tau_hi", cfg.grid.tau_hi, 0.0, 0.9999, "[0,1)");
            cg.integer("tau_n", cfg.grid.tau_n, 2);
            cg.number("lambda_lo", cfg.grid.lambda_lo, 1e-9, 1.0, "(0,1]");
            cg.number("lambda_hi", cfg.grid.lambda_hi, 1e-9, 1.0, "(0,1]");
            cg.integer("lambda_n", cfg.grid.lambda_n, 2);
            cg.number("alpha", cfg.grid.alpha, 1e-6, 0.999999, "(0,1)");
            cg.number("beta", cfg.grid.beta, 1e-6, 0.999999, "(0,1)");
            cg.reject_unknown();
        }
    }
    c.reject_unknown();

    if (errs.empty()) out.config = cfg;
    return out;
}

inline RunConfig parse_config_or_throw(const std::string& text)
{
    ParseOutcome out = parse_config(text);
    if (!out.config) throw ConfigException(std::move(out.violations));
    return *out.config;
}

// Full round-trippable echo: every field, defaults included.
inline nlohmann::json config_to_json(const RunConfig& cfg)
{
    nlohmann::json j;
    if (cfg.inline_scenario) {
        const ScenarioConfig& s = *cfg.inline_scenario;
        nlohmann::json js{
            {"name", s.name},
            {"variant", s.variant},
            {"pre",
             {{"tau_corp", s.pre_tau_corp},
              {"rate_dbal", s.pre_rate_dbal},
              {"tau_indiv", s.pre_tau_indiv},
              {"theta", s.pre_theta}}},
            {"post",
             {{"tau_corp", s.post_tau_corp},
              {"rate_dbal", s.post_rate_dbal},
              {"tau_indiv", s.post_tau_indiv},
              {"theta", s.post_theta}}},
            {"new_investment_only", s.new_investment_only},
            {"is_null", s.is_null},
            {"beta", s.beta},
            {"sigma", s.sigma},
            {"gamma", s.gamma},
            {"labor_c", s.labor_c},
            {"eta", s.eta},
            {"epsilon", s.epsilon},
            {"phi", s.phi},
            {"alpha_c", s.alpha_c},
            {"alpha_p", s.alpha_p},
            {"delta_c", s.delta_c},
            {"delta_p", s.delta_p},
            {"delta2", s.delta2}};
        if (s.ccorp_share_target) js["ccorp_share_target"] = *s.ccorp_share_target;
        j["scenario"] = js;
    } else {
        j["scenario"] = cfg.scenario_name;
    }
    j["out_dir"] = cfg.out_dir;
    if (cfg.horizon) j["horizon"] = *cfg.horizon;
    if (cfg.cum_periods) j["cum_periods"] = *cfg.cum_periods;
    j["tol_ss"] = cfg.tol_ss;
    j["tol_transition"] = cfg.tol_transition;
    j["rate_cut_interpretation"] = cfg.rate_cut_interpretation;
    j["rate_cut_size"] = cfg.rate_cut_size;
    j["tau_indiv_1961"] = cfg.tau_indiv_1961;
    j["emit"] = {{"paths", cfg.emit.paths},
                 {"summary", cfg.emit.summary},
                 {"manifest", cfg.emit.manifest},
                 {"distortion_grid", cfg.emit.distortion_grid}};
    j["grid"] = {{"tau_lo", cfg.grid.tau_lo},     {"tau_hi", cfg.grid.tau_hi},
                 {"tau_n", cfg.grid.tau_n},       {"lambda_lo", cfg.grid.lambda_lo},
                 {"lambda_hi", cfg.grid.lambda_hi}, {"lambda_n", cfg.grid.lambda_n},
                 {"alpha", cfg.grid.alpha},       {"beta", cfg.grid.beta}};
    return j;
}

// Build the solvable Scenario from a config. May run the eta calibration when
// a share target is requested.
inline Scenario materialize_scenario(const RunConfig& cfg, const SolverOptions& opt = {})
{
    Scenario sc = [&] {
        if (!cfg.inline_scenario) return scenario_by_name(cfg.scenario_name);
        const ScenarioConfig& s = *cfg.inline_scenario;
        const TaxPolicy pre(s.pre_tau_corp, DepreciationSchedule(s.pre_rate_dbal),
                            s.pre_tau_indiv, s.pre_theta);
        const TaxPolicy post(s.post_tau_corp, DepreciationSchedule(s.post_rate_dbal),
                             s.post_tau_indiv, s.post_theta);
        ModelSpec spec = [&] {
            if (s.variant == "baseline")
                return ModelSpec::baseline({.beta = s.beta,
                                            .sigma = s.sigma,
                                            .gamma = s.gamma,
                                            .alpha_c = s.alpha_c,
                                            .alpha_p = s.alpha_p,
                                            .delta_c = s.delta_c,
                                            .delta_p = s.delta_p,
                                            .labor_c = s.labor_c,
                                            .policy = pre});
            ExtendedParams p{.beta = s.beta,
                             .sigma = s.sigma,
                             .eta = s.eta,
                             .epsilon = s.epsilon,
                             .phi = s.phi,
                             .alpha_c = s.alpha_c,
                             .alpha_p = s.alpha_p,
                             .delta0 = s.delta_c,
                             .delta_p = s.delta_p,
                             .delta2 = s.delta2,
                             .labor_c = s.labor_c,
                             .policy = pre};
            ModelSpec m = ModelSpec::extended(p);
            if (s.ccorp_share_target) {
                p.eta = calibrate_eta(m, *s.ccorp_share_target, opt);
                m = ModelSpec::extended(p);
            }
            return m;
        }();
        Scenario out{s.name, spec, post};
        out.new_investment_only = s.new_investment_only;
        out.is_null = s.is_null;
        return out;
    }();
    if (cfg.horizon) sc.horizon = *cfg.horizon;
    if (cfg.cum_periods) sc.cum_periods = *cfg.cum_periods;
    return sc;
}

} // namespace corptax
