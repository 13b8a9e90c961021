#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "trajcurate/errors.hpp"

namespace trajcurate {

enum class Role { System, User, Assistant, Tool };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
        case Role::Tool: return "tool";
    }
    return "?";
}

inline std::optional<Role> role_from_name(std::string_view s) {
    if (s == "system") return Role::System;
    if (s == "user") return Role::User;
    if (s == "assistant") return Role::Assistant;
    if (s == "tool") return Role::Tool;
    return std::nullopt;
}

struct ToolCall {
    std::string name;
    std::string arguments;
    bool operator==(const ToolCall&) const = default;
};

struct ToolResult {
    bool ok = true; // status: ok | error
    std::string output;
    bool operator==(const ToolResult&) const = default;
};

/// One unit of a trajectory: a system/user message, an assistant
/// thought/action, or a tool observation. `index` is the record's
/// 0-based ordinal; window arithmetic elsewhere uses 1-based positions.
struct Step {
    int index = 0;
    Role role = Role::User;
    std::string content;
    std::vector<ToolCall> tool_calls;      // assistant steps only
    std::optional<ToolResult> tool_result; // tool steps only
    std::optional<std::uint64_t> tokens;

    // Fallback estimate when the log omits token counts.
    std::uint64_t token_count() const {
        if (tokens) return *tokens;
        return static_cast<std::uint64_t>((content.size() + 3) / 4);
    }
    bool tokens_estimated() const { return !tokens.has_value(); }

    bool operator==(const Step&) const = default;
};

/// The full ordered log of one agent run plus its terminal reward.
/// Immutable by convention after construction; safe to share across threads.
struct Trajectory {
    std::string task_id;
    std::vector<Step> steps;
    double reward = 0.0;
    std::optional<std::string> patch;
    std::map<std::string, std::string> meta;

    int length() const { return static_cast<int>(steps.size()); }

    // 1-based position access (positions 1..N).
    const Step& at_pos(int pos) const { return steps[static_cast<std::size_t>(pos - 1)]; }

    bool operator==(const Trajectory&) const = default;
};

/// A broken invariant found by validate(). Violations are values;
/// validate itself never throws.
struct Violation {
    std::string invariant;
    int step_index = 0;
    std::string detail;
};

/// A malformed input line. Carries enough to locate and explain the
/// problem without aborting a corpus run.
struct SchemaError {
    std::size_t line = 0;
    std::string field;
    std::string reason;
};

namespace detail {

// Scan forward for a tool step before the next user step.
inline bool tool_results_follow(const std::vector<Step>& steps, std::size_t i) {
    for (std::size_t j = i + 1; j < steps.size(); ++j) {
        if (steps[j].role == Role::Tool) return true;
        if (steps[j].role == Role::User) return false;
    }
    return false;
}

inline bool is_last_assistant(const std::vector<Step>& steps, std::size_t i) {
    for (std::size_t j = i + 1; j < steps.size(); ++j) {
        if (steps[j].role == Role::Assistant) return false;
    }
    return true;
}

} // namespace detail

/// Check every Step/Trajectory invariant. Empty result means valid.
/// Total: well-typed input never raises.
inline std::vector<Violation> validate(const Trajectory& t) {
    std::vector<Violation> out;
    if (t.steps.empty()) {
        out.push_back({"steps_nonempty", 0, "trajectory has no steps"});
        return out;
    }
    if (!(t.reward >= 0.0 && t.reward <= 1.0)) {
        out.push_back({"reward_range", 0, "reward outside [0,1]"});
    }
    if (t.steps.front().role != Role::System && t.steps.front().role != Role::User) {
        out.push_back({"first_role", 0, "first step must be system or user"});
    }
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        if (t.steps[i].index != static_cast<int>(i)) {
            out.push_back({"index_contiguity", static_cast<int>(i),
                           "expected index " + std::to_string(i) + ", got " +
                               std::to_string(t.steps[i].index)});
            break; // one violation per contiguity break
        }
    }
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const Step& s = t.steps[i];
        const int idx = static_cast<int>(i);
        if (s.role == Role::Tool && !s.tool_result) {
            out.push_back({"tool_result_presence", idx, "tool step missing tool_result"});
        }
        if (s.role != Role::Tool && s.tool_result) {
            out.push_back({"tool_result_presence", idx, "tool_result on non-tool step"});
        }
        if (s.role != Role::Assistant && !s.tool_calls.empty()) {
            out.push_back({"tool_calls_role", idx, "tool_calls on non-assistant step"});
        }
        if (s.role == Role::Assistant && !s.tool_calls.empty()) {
            // A pending call is fine only on the trailing assistant step
            // (truncated run).
            if (!detail::tool_results_follow(t.steps, i) &&
                !detail::is_last_assistant(t.steps, i)) {
                out.push_back({"pending_tool_call", idx,
                               "tool_calls without a tool step before the next user step"});
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Line-delimited record schema (see README for the full contract):
//   {"task_id": str, "reward": num, "patch": str?, "meta": {str: str}?,
//    "steps": [{"index": int, "role": str, "content": str,
//               "tool_calls": [{"name": str, "arguments": str}]?,
//               "tool_result": {"status": "ok"|"error", "output": str}?,
//               "tokens": int?}]}
// ---------------------------------------------------------------------------

using ParseOutcome = std::variant<Trajectory, SchemaError>;

namespace detail {

struct FieldError {
    std::string field;
    std::string reason;
};

inline FieldError field_error(const std::string& field, const std::string& reason) {
    return {field, reason};
}

inline Step parse_step(const nlohmann::json& j, std::size_t pos) {
    const std::string prefix = "steps[" + std::to_string(pos) + "]";
    if (!j.is_object()) throw field_error(prefix, "step must be an object");
    static const std::map<std::string, int> known = {
        {"index", 0}, {"role", 0}, {"content", 0},
        {"tool_calls", 0}, {"tool_result", 0}, {"tokens", 0}};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) throw field_error(prefix + "." + it.key(), "unknown key");
    }
    Step s;
    if (!j.contains("index") || !j["index"].is_number_integer())
        throw field_error(prefix + ".index", "required integer");
    s.index = j["index"].get<int>();
    if (!j.contains("role") || !j["role"].is_string())
        throw field_error(prefix + ".role", "required string");
    auto role = role_from_name(j["role"].get<std::string>());
    if (!role) throw field_error(prefix + ".role", "must be system|user|assistant|tool");
    s.role = *role;
    if (!j.contains("content") || !j["content"].is_string())
        throw field_error(prefix + ".content", "required string");
    s.content = j["content"].get<std::string>();
    if (j.contains("tool_calls")) {
        if (!j["tool_calls"].is_array())
            throw field_error(prefix + ".tool_calls", "must be an array");
        for (const auto& c : j["tool_calls"]) {
            if (!c.is_object() || !c.contains("name") || !c["name"].is_string() ||
                !c.contains("arguments") || !c["arguments"].is_string())
                throw field_error(prefix + ".tool_calls",
                                  "entries must be {name: str, arguments: str}");
            s.tool_calls.push_back({c["name"].get<std::string>(),
                                    c["arguments"].get<std::string>()});
        }
    }
    if (j.contains("tool_result")) {
        const auto& r = j["tool_result"];
        if (!r.is_object() || !r.contains("status") || !r["status"].is_string() ||
            !r.contains("output") || !r["output"].is_string())
            throw field_error(prefix + ".tool_result",
                              "must be {status: ok|error, output: str}");
        const std::string status = r["status"].get<std::string>();
        if (status != "ok" && status != "error")
            throw field_error(prefix + ".tool_result.status", "must be ok or error");
        s.tool_result = ToolResult{status == "ok", r["output"].get<std::string>()};
    }
    if (j.contains("tokens")) {
        if (!j["tokens"].is_number_integer() || j["tokens"].get<std::int64_t>() < 0)
            throw field_error(prefix + ".tokens", "must be a non-negative integer");
        s.tokens = j["tokens"].get<std::uint64_t>();
    }
    return s;
}

} // namespace detail

/// Parse one line. Invalid input comes back as a SchemaError value.
inline ParseOutcome parse_trajectory_line(const std::string& line, std::size_t lineno = 0) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) return SchemaError{lineno, "", "not valid JSON"};
    if (!j.is_object()) return SchemaError{lineno, "", "record must be an object"};
    try {
        static const std::map<std::string, int> known = {
            {"task_id", 0}, {"reward", 0}, {"patch", 0}, {"meta", 0}, {"steps", 0}};
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!known.count(it.key()))
                throw detail::field_error(it.key(), "unknown key");
        }
        Trajectory t;
        if (!j.contains("task_id") || !j["task_id"].is_string())
            throw detail::field_error("task_id", "required string");
        t.task_id = j["task_id"].get<std::string>();
        if (!j.contains("reward") || !j["reward"].is_number())
            throw detail::field_error("reward", "required number");
        t.reward = j["reward"].get<double>();
        if (!(t.reward >= 0.0 && t.reward <= 1.0))
            throw detail::field_error("reward", "outside [0,1]");
        if (j.contains("patch")) {
            if (!j["patch"].is_string()) throw detail::field_error("patch", "must be a string");
            t.patch = j["patch"].get<std::string>();
        }
        if (j.contains("meta")) {
            if (!j["meta"].is_object()) throw detail::field_error("meta", "must be an object");
            for (auto it = j["meta"].begin(); it != j["meta"].end(); ++it) {
                if (!it.value().is_string())
                    throw detail::field_error("meta." + it.key(), "values must be strings");
                t.meta[it.key()] = it.value().get<std::string>();
            }
        }
        if (!j.contains("steps") || !j["steps"].is_array() || j["steps"].empty())
            throw detail::field_error("steps", "required non-empty array");
        std::size_t pos = 0;
        for (const auto& js : j["steps"]) {
            t.steps.push_back(detail::parse_step(js, pos++));
        }
        auto violations = validate(t);
        if (!violations.empty()) {
            const Violation& v = violations.front();
            throw detail::field_error(
                "steps[" + std::to_string(v.step_index) + "]:" + v.invariant, v.detail);
        }
        return t;
    } catch (const detail::FieldError& e) {
        return SchemaError{lineno, e.field, e.reason};
    }
}

/// Serialize to the single-line record schema. parse(serialize(t)) is
/// semantically t (absent optionals are omitted).
inline std::string serialize_trajectory(const Trajectory& t) {
    nlohmann::ordered_json j;
    j["task_id"] = t.task_id;
    j["reward"] = t.reward;
    if (t.patch) j["patch"] = *t.patch;
    if (!t.meta.empty()) {
        nlohmann::ordered_json m = nlohmann::ordered_json::object();
        for (const auto& [k, v] : t.meta) m[k] = v;
        j["meta"] = m;
    }
    j["steps"] = nlohmann::ordered_json::array();
    for (const Step& s : t.steps) {
        nlohmann::ordered_json js;
        js["index"] = s.index;
        js["role"] = role_name(s.role);
        js["content"] = s.content;
        if (!s.tool_calls.empty()) {
            js["tool_calls"] = nlohmann::ordered_json::array();
            for (const ToolCall& c : s.tool_calls)
                js["tool_calls"].push_back({{"name", c.name}, {"arguments", c.arguments}});
        }
        if (s.tool_result) {
            js["tool_result"] = {{"status", s.tool_result->ok ? "ok" : "error"},
                                 {"output", s.tool_result->output}};
        }
        if (s.tokens) js["tokens"] = *s.tokens;
        j["steps"].push_back(std::move(js));
    }
    return j.dump();
}

/// Streaming reader over line-delimited trajectory records. Blank lines
/// are skipped; each remaining line yields either a Trajectory or a
/// SchemaError, in input order. Empty input is an empty sequence.
class TrajectoryReader {
public:
    explicit TrajectoryReader(std::istream& in) : in_(in) {}

    std::optional<ParseOutcome> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++lineno_;
            if (line.empty()) continue;
            return parse_trajectory_line(line, lineno_);
        }
        return std::nullopt;
    }

    std::size_t line_number() const { return lineno_; }

private:
    std::istream& in_;
    std::size_t lineno_ = 0;
};

} // namespace trajcurate
