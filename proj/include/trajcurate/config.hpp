#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajcurate/curate.hpp"
#include "trajcurate/errors.hpp"
#include "trajcurate/features.hpp"
#include "trajcurate/judge_remote.hpp"
#include "trajcurate/logreg.hpp"
#include "trajcurate/partition.hpp"
#include "trajcurate/scoring.hpp"

namespace trajcurate {

struct JudgeSettings {
    std::string mode = "mock"; // mock | remote
    RemoteJudgeConfig remote;
    FailurePolicy failure_policy = FailurePolicy::Exclude;
    std::string reduce_mode = "deterministic"; // deterministic | judge

    bool operator==(const JudgeSettings&) const = default;
};

struct IoSettings {
    std::string input;
    std::string output;
    std::string model;
    std::string decisions;
    std::string segments;
    std::string report;

    bool operator==(const IoSettings&) const = default;
};

/// Everything a corpus run needs, in one editable document. Sections
/// mirror the pipeline stages; the command line can override any field
/// and wins when it does.
struct PipelineConfig {
    FeatureConfig features;
    ScoringConfig scoring;
    FitConfig fit;
    double tau_global = 0.5;
    SplitPolicy partition;
    JudgeSettings judge;
    double tau_seg = 6.0;
    EmitMode emit_mode = EmitMode::Segments;
    IoSettings io;

    CurationConfig curation() const {
        return {tau_global, tau_seg, emit_mode, judge.failure_policy};
    }

    void check() const {
        curation().check();
        partition.check();
        scoring.check();
        if (judge.mode != "mock" && judge.mode != "remote")
            throw ConfigError("judge.mode must be mock or remote");
        if (judge.reduce_mode != "deterministic" && judge.reduce_mode != "judge")
            throw ConfigError("judge.reduce_mode must be deterministic or judge");
        if (fit.learning_rate <= 0) throw ConfigError("fit.learning_rate must be > 0");
        if (fit.l2_lambda < 0) throw ConfigError("fit.l2_lambda must be >= 0");
        if (fit.convergence_tol < 0) throw ConfigError("fit.convergence_tol must be >= 0");
    }

    bool operator==(const PipelineConfig&) const = default;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                           const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
}

inline ScoringFunction scoring_function_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("family"))
        throw ConfigError("scoring.functions entries need a family");
    const std::string family = j.at("family").get<std::string>();
    if (family == "cap") {
        reject_unknown(j, {"family", "feature", "w", "M"}, "scoring cap function");
        return CapFunction{j.at("feature").get<std::string>(), j.value("w", 1.0),
                           j.value("M", 10.0)};
    }
    if (family == "ratio") {
        reject_unknown(j, {"family", "target", "total", "M"}, "scoring ratio function");
        return RatioFunction{j.at("target").get<std::string>(),
                             j.at("total").get<std::string>(), j.value("M", 10.0)};
    }
    if (family == "decay") {
        reject_unknown(j, {"family", "feature", "c_min", "c_opt", "p", "M", "m"},
                       "scoring decay function");
        return DecayFunction{j.at("feature").get<std::string>(), j.value("c_min", 0.0),
                             j.value("c_opt", 0.0),  j.value("p", 0.0),
                             j.value("M", 10.0),     j.value("m", 0.0)};
    }
    throw ConfigError("scoring family must be cap, ratio, or decay: " + family);
}

inline nlohmann::ordered_json scoring_function_to_json(const ScoringFunction& f) {
    nlohmann::ordered_json j;
    if (const auto* c = std::get_if<CapFunction>(&f)) {
        j["family"] = "cap";
        j["feature"] = c->feature;
        j["w"] = c->w;
        j["M"] = c->M;
    } else if (const auto* r = std::get_if<RatioFunction>(&f)) {
        j["family"] = "ratio";
        j["target"] = r->target;
        j["total"] = r->total;
        j["M"] = r->M;
    } else if (const auto* d = std::get_if<DecayFunction>(&f)) {
        j["family"] = "decay";
        j["feature"] = d->feature;
        j["c_min"] = d->c_min;
        j["c_opt"] = d->c_opt;
        j["p"] = d->p;
        j["M"] = d->M;
        j["m"] = d->m;
    }
    return j;
}

} // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    detail::reject_unknown(j,
                           {"features", "scoring", "fit", "screen", "partition", "judge",
                            "curate", "io"},
                           "config root");
    PipelineConfig c;
    if (j.contains("features")) {
        const auto& f = j["features"];
        detail::reject_unknown(f, {"file_op_tools", "early_window"}, "features");
        if (f.contains("file_op_tools")) {
            c.features.file_op_tools.clear();
            for (const auto& t : f["file_op_tools"])
                c.features.file_op_tools.insert(t.get<std::string>());
        }
        if (f.contains("early_window"))
            c.features.early_window = f["early_window"].get<std::size_t>();
    }
    if (j.contains("scoring")) {
        const auto& s = j["scoring"];
        detail::reject_unknown(s, {"functions"}, "scoring");
        if (s.contains("functions"))
            for (const auto& fn : s["functions"])
                c.scoring.functions.push_back(detail::scoring_function_from_json(fn));
    }
    if (j.contains("fit")) {
        const auto& f = j["fit"];
        detail::reject_unknown(
            f, {"learning_rate", "epochs", "l2_lambda", "convergence_tol", "seed"}, "fit");
        c.fit.learning_rate = f.value("learning_rate", c.fit.learning_rate);
        c.fit.epochs = f.value("epochs", c.fit.epochs);
        c.fit.l2_lambda = f.value("l2_lambda", c.fit.l2_lambda);
        c.fit.convergence_tol = f.value("convergence_tol", c.fit.convergence_tol);
        c.fit.seed = f.value("seed", c.fit.seed);
    }
    if (j.contains("screen")) {
        detail::reject_unknown(j["screen"], {"tau_global"}, "screen");
        c.tau_global = j["screen"].value("tau_global", c.tau_global);
    }
    if (j.contains("partition")) {
        const auto& p = j["partition"];
        detail::reject_unknown(p, {"l_min", "l_max"}, "partition");
        c.partition.l_min = p.value("l_min", c.partition.l_min);
        c.partition.l_max = p.value("l_max", c.partition.l_max);
    }
    if (j.contains("judge")) {
        const auto& jd = j["judge"];
        detail::reject_unknown(jd,
                               {"mode", "base_url", "model", "auth_env", "timeout_ms",
                                "max_retries", "retry_backoff_ms", "memory_cap",
                                "concurrency", "failure_policy", "reduce_mode"},
                               "judge");
        c.judge.mode = jd.value("mode", c.judge.mode);
        c.judge.remote.base_url = jd.value("base_url", c.judge.remote.base_url);
        c.judge.remote.model = jd.value("model", c.judge.remote.model);
        c.judge.remote.auth_env = jd.value("auth_env", c.judge.remote.auth_env);
        c.judge.remote.timeout_ms = jd.value("timeout_ms", c.judge.remote.timeout_ms);
        c.judge.remote.max_retries = jd.value("max_retries", c.judge.remote.max_retries);
        c.judge.remote.retry_backoff_ms =
            jd.value("retry_backoff_ms", c.judge.remote.retry_backoff_ms);
        c.judge.remote.memory_cap = jd.value("memory_cap", c.judge.remote.memory_cap);
        c.judge.remote.concurrency = jd.value("concurrency", c.judge.remote.concurrency);
        if (jd.contains("failure_policy")) {
            const std::string p = jd["failure_policy"].get<std::string>();
            if (p == "exclude")
                c.judge.failure_policy = FailurePolicy::Exclude;
            else if (p == "degrade")
                c.judge.failure_policy = FailurePolicy::Degrade;
            else
                throw ConfigError("judge.failure_policy must be exclude or degrade");
        }
        c.judge.reduce_mode = jd.value("reduce_mode", c.judge.reduce_mode);
    }
    if (j.contains("curate")) {
        const auto& cu = j["curate"];
        detail::reject_unknown(cu, {"tau_seg", "emit_mode"}, "curate");
        c.tau_seg = cu.value("tau_seg", c.tau_seg);
        if (cu.contains("emit_mode")) {
            auto m = emit_mode_from_name(cu["emit_mode"].get<std::string>());
            if (!m) throw ConfigError("curate.emit_mode must be segments, "
                                      "full_trajectory, or both");
            c.emit_mode = *m;
        }
    }
    if (j.contains("io")) {
        const auto& io = j["io"];
        detail::reject_unknown(
            io, {"input", "output", "model", "decisions", "segments", "report"}, "io");
        c.io.input = io.value("input", std::string());
        c.io.output = io.value("output", std::string());
        c.io.model = io.value("model", std::string());
        c.io.decisions = io.value("decisions", std::string());
        c.io.segments = io.value("segments", std::string());
        c.io.report = io.value("report", std::string());
    }
    c.check();
    return c;
}

inline nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["features"] = {
        {"file_op_tools",
         std::vector<std::string>(c.features.file_op_tools.begin(),
                                  c.features.file_op_tools.end())},
        {"early_window", c.features.early_window}};
    nlohmann::ordered_json fns = nlohmann::ordered_json::array();
    for (const ScoringFunction& f : c.scoring.functions)
        fns.push_back(detail::scoring_function_to_json(f));
    j["scoring"] = {{"functions", fns}};
    j["fit"] = {{"learning_rate", c.fit.learning_rate},
                {"epochs", c.fit.epochs},
                {"l2_lambda", c.fit.l2_lambda},
                {"convergence_tol", c.fit.convergence_tol},
                {"seed", c.fit.seed}};
    j["screen"] = {{"tau_global", c.tau_global}};
    j["partition"] = {{"l_min", c.partition.l_min}, {"l_max", c.partition.l_max}};
    j["judge"] = {{"mode", c.judge.mode},
                  {"base_url", c.judge.remote.base_url},
                  {"model", c.judge.remote.model},
                  {"auth_env", c.judge.remote.auth_env},
                  {"timeout_ms", c.judge.remote.timeout_ms},
                  {"max_retries", c.judge.remote.max_retries},
                  {"retry_backoff_ms", c.judge.remote.retry_backoff_ms},
                  {"memory_cap", c.judge.remote.memory_cap},
                  {"concurrency", c.judge.remote.concurrency},
                  {"failure_policy",
                   c.judge.failure_policy == FailurePolicy::Exclude ? "exclude" : "degrade"},
                  {"reduce_mode", c.judge.reduce_mode}};
    j["curate"] = {{"tau_seg", c.tau_seg}, {"emit_mode", emit_mode_name(c.emit_mode)}};
    j["io"] = {{"input", c.io.input},       {"output", c.io.output},
               {"model", c.io.model},       {"decisions", c.io.decisions},
               {"segments", c.io.segments}, {"report", c.io.report}};
    return j;
}

inline PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open config file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
    return config_from_json(j);
}

} // namespace trajcurate
