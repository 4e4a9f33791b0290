#include "hct/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace hct {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& path,
                       const std::string& what) {
    throw ConfigError(origin + ": " + path + ": " + what);
}

double as_number(const json& v, const std::string& origin, const std::string& path) {
    if (!v.is_number()) fail(origin, path, "expected a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& origin, const std::string& path) {
    if (!v.is_number_integer()) fail(origin, path, "expected an integer");
    return v.get<int>();
}

std::uint64_t as_u64(const json& v, const std::string& origin, const std::string& path) {
    if (!v.is_number_unsigned() && !v.is_number_integer())
        fail(origin, path, "expected a non-negative integer");
    const auto x = v.get<long long>();
    if (x < 0) fail(origin, path, "expected a non-negative integer");
    return static_cast<std::uint64_t>(x);
}

bool as_bool(const json& v, const std::string& origin, const std::string& path) {
    if (!v.is_boolean()) fail(origin, path, "expected a boolean");
    return v.get<bool>();
}

// theta fields accept "-inf"/"inf" so that a disabled futility threshold
// survives the JSON round trip.
double as_theta(const json& v, const std::string& origin, const std::string& path) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        fail(origin, path, "expected a number or \"-inf\"/\"inf\"");
    }
    return as_number(v, origin, path);
}

json theta_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return json(v);
}

std::vector<double> as_grid(const json& v, const std::string& origin,
                            const std::string& path) {
    std::vector<double> out;
    if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(as_number(v[i], origin, path + "[" + std::to_string(i) + "]"));
    } else if (v.is_object()) {
        double from = 0, to = 0, step = 0;
        for (const auto& [key, val] : v.items()) {
            if (key == "from") from = as_number(val, origin, path + ".from");
            else if (key == "to") to = as_number(val, origin, path + ".to");
            else if (key == "step") step = as_number(val, origin, path + ".step");
            else fail(origin, path, "unknown field '" + key + "'");
        }
        if (!(step > 0)) fail(origin, path + ".step", "must be > 0");
        if (to < from) fail(origin, path, "'to' must be >= 'from'");
        const int count = static_cast<int>(std::floor((to - from) / step + 1e-9)) + 1;
        out.reserve(count);
        for (int i = 0; i < count; ++i) out.push_back(from + i * step);
    } else {
        fail(origin, path, "expected an array or {from, to, step}");
    }
    if (out.empty()) fail(origin, path, "grid must be non-empty");
    return out;
}

void apply_model(const json& j, OutcomeModel& m, const std::string& origin,
                 const std::string& path) {
    if (!j.is_object()) fail(origin, path, "expected an object");
    for (const auto& [key, v] : j.items()) {
        const std::string p = path + "." + key;
        if (key == "theta") m.theta = as_number(v, origin, p);
        else if (key == "sigma") m.sigma = as_number(v, origin, p);
        else if (key == "beta0") m.beta0 = as_number(v, origin, p);
        else if (key == "beta_age") m.beta_age = as_number(v, origin, p);
        else if (key == "beta_cyto") m.beta_cyto = as_number(v, origin, p);
        else if (key == "age_mean") m.age_mean = as_number(v, origin, p);
        else if (key == "age_sd") m.age_sd = as_number(v, origin, p);
        else if (key == "cyto_prev") m.cyto_prev = as_number(v, origin, p);
        else fail(origin, path, "unknown field '" + key + "'");
    }
}

void apply_design(const json& j, DesignParams& d, const std::string& origin,
                  const std::string& path) {
    if (!j.is_object()) fail(origin, path, "expected an object");
    for (const auto& [key, v] : j.items()) {
        const std::string p = path + "." + key;
        if (key == "alpha") d.alpha = as_number(v, origin, p);
        else if (key == "beta") d.beta = as_number(v, origin, p);
        else if (key == "theta_plan") d.theta_plan = as_theta(v, origin, p);
        else if (key == "theta_stop") d.theta_stop = as_theta(v, origin, p);
        else if (key == "theta_cross") d.theta_cross = as_theta(v, origin, p);
        else if (key == "w1") d.w1 = as_number(v, origin, p);
        else if (key == "w2") d.w2 = as_number(v, origin, p);
        else if (key == "n1") d.n1 = as_int(v, origin, p);
        else if (key == "n2_min") d.n2_min = as_int(v, origin, p);
        else if (key == "n2_max") d.n2_max = as_int(v, origin, p);
        else if (key == "tau") d.tau = as_number(v, origin, p);
        else if (key == "m_max") d.m_max = as_int(v, origin, p);
        else if (key == "cp_cap") d.cp_cap = as_number(v, origin, p);
        else if (key == "pi_c_plan") d.pi_c_plan = as_number(v, origin, p);
        else if (key == "recalc") {
            const std::string s = v.is_string() ? v.get<std::string>() : "";
            if (s == "planned") d.recalc = RecalcMode::planned_effect;
            else if (s == "interim") d.recalc = RecalcMode::interim_estimate;
            else fail(origin, p, "expected \"planned\" or \"interim\"");
        } else if (key == "mr2_mode") {
            const std::string s = v.is_string() ? v.get<std::string>() : "";
            if (s == "naive") d.mr2_mode = Mr2Mode::naive;
            else if (s == "wald") d.mr2_mode = Mr2Mode::wald_lower_99;
            else fail(origin, p, "expected \"naive\" or \"wald\"");
        } else {
            fail(origin, path, "unknown field '" + key + "'");
        }
    }
}

void apply_run(const json& j, ScenarioConfig& s, const std::string& origin,
               const std::string& path) {
    if (!j.is_object()) fail(origin, path, "expected an object");
    for (const auto& [key, v] : j.items()) {
        const std::string p = path + "." + key;
        if (key == "kind") {
            const std::string k = v.is_string() ? v.get<std::string>() : "";
            if (k == "adaptive") s.kind = DesignKind::adaptive;
            else if (k == "single-arm") s.kind = DesignKind::single_arm;
            else if (k == "rct") s.kind = DesignKind::rct;
            else if (k == "one-stage") s.kind = DesignKind::one_stage;
            else fail(origin, p, "expected one of adaptive/single-arm/rct/one-stage");
        } else if (key == "n_controls") s.n_controls = as_int(v, origin, p);
        else if (key == "replications") s.replications = as_int(v, origin, p);
        else if (key == "base_seed") s.base_seed = as_u64(v, origin, p);
        else if (key == "fixed_pool") s.fixed_pool = as_bool(v, origin, p);
        else if (key == "analysis") {
            const std::string a = v.is_string() ? v.get<std::string>() : "";
            if (a == "logistic") s.analysis = OutcomeAnalysis::logistic;
            else if (a == "cmh") s.analysis = OutcomeAnalysis::cmh;
            else fail(origin, p, "expected \"logistic\" or \"cmh\"");
        } else if (key == "ml_weights") {
            const std::string w = v.is_string() ? v.get<std::string>() : "";
            if (w == "normalized") s.ml_weights = MlWeightMode::normalized;
            else if (w == "as-printed") s.ml_weights = MlWeightMode::as_printed;
            else fail(origin, p, "expected \"normalized\" or \"as-printed\"");
        } else if (key == "single_arm_n") s.single_arm_n = as_int(v, origin, p);
        else if (key == "single_arm_p0") s.single_arm_p0 = as_number(v, origin, p);
        else if (key == "rct_n_per_arm") s.rct_n_per_arm = as_int(v, origin, p);
        else if (key == "rct_alpha") s.rct_alpha = as_number(v, origin, p);
        else if (key == "rct_analysis") {
            const std::string a = v.is_string() ? v.get<std::string>() : "";
            if (a == "z") s.rct_analysis = RctAnalysis::z_test;
            else if (a == "logistic") s.rct_analysis = RctAnalysis::adjusted_logistic;
            else if (a == "cmh") s.rct_analysis = RctAnalysis::cmh;
            else fail(origin, p, "expected one of z/logistic/cmh");
        } else if (key == "one_stage_n") s.one_stage_n = as_int(v, origin, p);
        else fail(origin, path, "unknown field '" + key + "'");
    }
}

void apply_scenario_sections(const json& j, ScenarioConfig& s, const std::string& origin,
                             const std::string& path) {
    for (const auto& [key, v] : j.items()) {
        if (key == "name") {
            if (!v.is_string()) fail(origin, path + ".name", "expected a string");
            s.name = v.get<std::string>();
        } else if (key == "model") apply_model(v, s.model, origin, path + ".model");
        else if (key == "design") apply_design(v, s.design, origin, path + ".design");
        else if (key == "run") apply_run(v, s, origin, path + ".run");
        else fail(origin, path, "unknown field '" + key + "'");
    }
}

void validate_scenario(const ScenarioConfig& s, const std::string& origin,
                       const std::string& path) {
    try {
        validate(s.design);
    } catch (const std::invalid_argument& e) {
        fail(origin, path, e.what());
    }
    if (s.replications < 1) fail(origin, path + ".run.replications", "must be >= 1");
    if ((s.kind == DesignKind::adaptive || s.kind == DesignKind::one_stage) &&
        s.n_controls < 1)
        fail(origin, path + ".run.n_controls", "must be >= 1");
    if (s.kind == DesignKind::single_arm) {
        if (s.single_arm_n < 1) fail(origin, path + ".run.single_arm_n", "must be >= 1");
        if (!(s.single_arm_p0 > 0.0 && s.single_arm_p0 < 1.0))
            fail(origin, path + ".run.single_arm_p0", "must lie in (0, 1)");
    }
    if (s.kind == DesignKind::rct) {
        if (s.rct_n_per_arm < 2) fail(origin, path + ".run.rct_n_per_arm", "must be >= 2");
        if (!(s.rct_alpha > 0.0 && s.rct_alpha <= 0.5))
            fail(origin, path + ".run.rct_alpha", "must lie in (0, 0.5]");
    }
    if (s.kind == DesignKind::one_stage && s.one_stage_n < 1)
        fail(origin, path + ".run.one_stage_n", "must be >= 1");
}

PlanSpec parse_plan(const json& j, const std::string& origin, const std::string& path) {
    PlanSpec plan;
    plan.present = true;
    if (!j.is_object()) fail(origin, path, "expected an object");
    for (const auto& [key, v] : j.items()) {
        const std::string p = path + "." + key;
        if (key == "n_eff") plan.n_eff = as_grid(v, origin, p);
        else if (key == "m") plan.m = as_grid(v, origin, p);
        else if (key == "theta_stop") plan.theta_stop = as_grid(v, origin, p);
        else if (key == "or_stop") {
            for (double x : as_grid(v, origin, p)) {
                if (!(x > 0)) fail(origin, p, "odds ratios must be positive");
                plan.theta_stop.push_back(std::log(x));
            }
        } else if (key == "theta") plan.theta = as_grid(v, origin, p);
        else if (key == "pi_c") plan.pi_c = as_number(v, origin, p);
        else if (key == "design") apply_design(v, plan.design, origin, p);
        else fail(origin, path, "unknown field '" + key + "'");
    }
    if (!(plan.pi_c > 0.0 && plan.pi_c < 1.0))
        fail(origin, path + ".pi_c", "must lie in (0, 1)");
    if (plan.n_eff.empty()) fail(origin, path + ".n_eff", "grid must be non-empty");
    if (plan.m.empty()) fail(origin, path + ".m", "grid must be non-empty");
    if (plan.theta_stop.empty())
        fail(origin, path + ".theta_stop", "grid must be non-empty (theta_stop or or_stop)");
    if (plan.theta.empty()) fail(origin, path + ".theta", "grid must be non-empty");
    try {
        validate(plan.design);
    } catch (const std::invalid_argument& e) {
        fail(origin, path + ".design", e.what());
    }
    return plan;
}

json model_to_json(const OutcomeModel& m) {
    return json{{"theta", m.theta},         {"sigma", m.sigma},
                {"beta0", m.beta0},         {"beta_age", m.beta_age},
                {"beta_cyto", m.beta_cyto}, {"age_mean", m.age_mean},
                {"age_sd", m.age_sd},       {"cyto_prev", m.cyto_prev}};
}

json design_to_json(const DesignParams& d) {
    return json{{"alpha", d.alpha},
                {"beta", d.beta},
                {"theta_plan", theta_to_json(d.theta_plan)},
                {"theta_stop", theta_to_json(d.theta_stop)},
                {"theta_cross", theta_to_json(d.theta_cross)},
                {"w1", d.w1},
                {"w2", d.w2},
                {"n1", d.n1},
                {"n2_min", d.n2_min},
                {"n2_max", d.n2_max},
                {"tau", d.tau},
                {"m_max", d.m_max},
                {"recalc", to_string(d.recalc)},
                {"cp_cap", d.cp_cap},
                {"mr2_mode", to_string(d.mr2_mode)},
                {"pi_c_plan", d.pi_c_plan}};
}

json run_to_json(const ScenarioConfig& s) {
    return json{{"kind", to_string(s.kind)},
                {"n_controls", s.n_controls},
                {"replications", s.replications},
                {"base_seed", s.base_seed},
                {"fixed_pool", s.fixed_pool},
                {"analysis", to_string(s.analysis)},
                {"ml_weights", to_string(s.ml_weights)},
                {"single_arm_n", s.single_arm_n},
                {"single_arm_p0", s.single_arm_p0},
                {"rct_n_per_arm", s.rct_n_per_arm},
                {"rct_alpha", s.rct_alpha},
                {"rct_analysis", to_string(s.rct_analysis)},
                {"one_stage_n", s.one_stage_n}};
}

} // namespace

const char* to_string(DesignKind k) {
    switch (k) {
        case DesignKind::adaptive: return "adaptive";
        case DesignKind::single_arm: return "single-arm";
        case DesignKind::rct: return "rct";
        case DesignKind::one_stage: return "one-stage";
    }
    return "?";
}

const char* to_string(OutcomeAnalysis a) {
    return a == OutcomeAnalysis::logistic ? "logistic" : "cmh";
}

const char* to_string(RctAnalysis a) {
    switch (a) {
        case RctAnalysis::z_test: return "z";
        case RctAnalysis::adjusted_logistic: return "logistic";
        case RctAnalysis::cmh: return "cmh";
    }
    return "?";
}

const char* to_string(RecalcMode m) {
    return m == RecalcMode::planned_effect ? "planned" : "interim";
}

const char* to_string(Mr2Mode m) { return m == Mr2Mode::naive ? "naive" : "wald"; }

const char* to_string(MlWeightMode m) {
    return m == MlWeightMode::normalized ? "normalized" : "as-printed";
}

ResolvedConfig parse_config(const nlohmann::json& j, const std::string& origin) {
    if (!j.is_object()) fail(origin, "$", "top level must be an object");

    ResolvedConfig out;
    out.name = origin;
    ScenarioConfig base;
    const json* scenarios = nullptr;

    for (const auto& [key, v] : j.items()) {
        if (key == "name") {
            if (!v.is_string()) fail(origin, "name", "expected a string");
            out.name = v.get<std::string>();
        } else if (key == "defaults") {
            if (!v.is_object()) fail(origin, "defaults", "expected an object");
            apply_scenario_sections(v, base, origin, "defaults");
        } else if (key == "theta_grid") {
            out.theta_grid = as_grid(v, origin, "theta_grid");
        } else if (key == "plan") {
            out.plan = parse_plan(v, origin, "plan");
        } else if (key == "scenarios") {
            if (!v.is_array()) fail(origin, "scenarios", "expected an array");
            scenarios = &v;
        } else {
            fail(origin, "$", "unknown field '" + key + "'");
        }
    }

    if (scenarios) {
        for (std::size_t i = 0; i < scenarios->size(); ++i) {
            const std::string path = "scenarios[" + std::to_string(i) + "]";
            const json& sj = (*scenarios)[i];
            if (!sj.is_object()) fail(origin, path, "expected an object");
            ScenarioConfig sc = base;
            sc.name = "scenario_" + std::to_string(i);
            apply_scenario_sections(sj, sc, origin, path);
            validate_scenario(sc, origin, path);
            out.scenarios.push_back(std::move(sc));
        }
    }
    if (out.scenarios.empty() && !out.plan.present)
        fail(origin, "$", "config defines neither scenarios nor a plan grid");
    return out;
}

ResolvedConfig load_config(const std::string& path_or_preset) {
    std::ifstream in(path_or_preset);
    if (in.good()) {
        json j;
        try {
            j = json::parse(in, nullptr, true, true);  // allow comments
        } catch (const json::parse_error& e) {
            throw ConfigError(path_or_preset + ": " + e.what());
        }
        return parse_config(j, path_or_preset);
    }
    if (is_preset(path_or_preset))
        return parse_config(preset_json(path_or_preset), path_or_preset);

    std::string names;
    for (const std::string& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError(path_or_preset + ": no such file or preset (presets: " + names + ")");
}

nlohmann::json config_echo(const ResolvedConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    if (!cfg.theta_grid.empty()) j["theta_grid"] = cfg.theta_grid;
    if (cfg.plan.present) {
        j["plan"] = json{{"n_eff", cfg.plan.n_eff},
                         {"m", cfg.plan.m},
                         {"theta_stop", cfg.plan.theta_stop},
                         {"theta", cfg.plan.theta},
                         {"pi_c", cfg.plan.pi_c},
                         {"design", design_to_json(cfg.plan.design)}};
    }
    json arr = json::array();
    for (const ScenarioConfig& s : cfg.scenarios) {
        arr.push_back(json{{"name", s.name},
                           {"model", model_to_json(s.model)},
                           {"design", design_to_json(s.design)},
                           {"run", run_to_json(s)}});
    }
    if (!arr.empty()) j["scenarios"] = arr;
    return j;
}

} // namespace hct
