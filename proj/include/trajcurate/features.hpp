#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "trajcurate/diff.hpp"
#include "trajcurate/errors.hpp"
#include "trajcurate/trajectory.hpp"

namespace trajcurate {

/// Knobs the extraction rules need but the trajectory format does not fix:
/// which tool names count as file operations, and how many leading tool
/// results the early success rate looks at.
struct FeatureConfig {
    std::set<std::string> file_op_tools = {"read",   "write",  "edit",
                                           "create", "delete", "str_replace"};
    std::size_t early_window = 5;

    bool operator==(const FeatureConfig&) const = default;
};

/// The built-in agentic feature vector. Field order here is the canonical
/// feature order; fitted models record it and refuse anything else.
struct FeatureVector {
    double lines_changed = 0;
    double file_ops = 0;
    double tool_calls = 0;
    double agent_turns = 0;
    double tool_success_rate = 0;
    double early_tool_success_rate = 0;
    double max_consecutive_failures = 0;
    double tool_diversity = 0;
    double total_tokens = 0;
    double recovery_attempts = 0;

    static const std::array<std::string, 10>& names() {
        static const std::array<std::string, 10> kNames = {
            "lines_changed",         "file_ops",
            "tool_calls",            "agent_turns",
            "tool_success_rate",     "early_tool_success_rate",
            "max_consecutive_failures", "tool_diversity",
            "total_tokens",          "recovery_attempts"};
        return kNames;
    }

    std::array<double, 10> values() const {
        return {lines_changed,         file_ops,
                tool_calls,            agent_turns,
                tool_success_rate,     early_tool_success_rate,
                max_consecutive_failures, tool_diversity,
                total_tokens,          recovery_attempts};
    }

    bool operator==(const FeatureVector&) const = default;
};

/// Deterministic extraction of the built-in features. Pure: equal
/// trajectories give equal vectors.
inline FeatureVector extract(const Trajectory& t, const FeatureConfig& cfg = {}) {
    FeatureVector fv;

    // lines_changed: final patch wins; otherwise diff blocks embedded in
    // assistant messages.
    if (t.patch) {
        fv.lines_changed = static_cast<double>(diff_lines_changed(*t.patch));
    } else {
        std::size_t n = 0;
        for (const Step& s : t.steps)
            if (s.role == Role::Assistant) n += diff_lines_changed(s.content);
        fv.lines_changed = static_cast<double>(n);
    }

    std::set<std::string> tool_names;
    for (const Step& s : t.steps) {
        if (s.role == Role::Assistant) {
            fv.agent_turns += 1;
            for (const ToolCall& c : s.tool_calls) {
                fv.tool_calls += 1;
                tool_names.insert(c.name);
                if (cfg.file_op_tools.count(c.name)) fv.file_ops += 1;
            }
        }
        fv.total_tokens += static_cast<double>(s.token_count());
    }
    fv.tool_diversity = static_cast<double>(tool_names.size());

    // Success statistics over tool observations, in step order.
    std::size_t results = 0, ok = 0, early_ok = 0, early_n = 0;
    std::size_t consec = 0, max_consec = 0;
    for (const Step& s : t.steps) {
        if (s.role != Role::Tool || !s.tool_result) continue;
        ++results;
        if (results <= cfg.early_window) ++early_n;
        if (s.tool_result->ok) {
            ++ok;
            if (results <= cfg.early_window) ++early_ok;
            consec = 0;
        } else {
            ++consec;
            max_consec = std::max(max_consec, consec);
        }
    }
    fv.tool_success_rate = results ? static_cast<double>(ok) / results : 0.0;
    fv.early_tool_success_rate = early_n ? static_cast<double>(early_ok) / early_n : 0.0;
    fv.max_consecutive_failures = static_cast<double>(max_consec);

    // recovery_attempts: an error observation followed by a tool-calling
    // assistant step within the next 3 assistant steps. Each error counts
    // at most once.
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const Step& s = t.steps[i];
        if (s.role != Role::Tool || !s.tool_result || s.tool_result->ok) continue;
        int assistants_seen = 0;
        for (std::size_t j = i + 1; j < t.steps.size() && assistants_seen < 3; ++j) {
            if (t.steps[j].role != Role::Assistant) continue;
            ++assistants_seen;
            if (!t.steps[j].tool_calls.empty()) {
                fv.recovery_attempts += 1;
                break;
            }
        }
    }
    return fv;
}

/// Named extractors. Fitted models store the names they trained on, so a
/// model meets exactly the features it expects even when extra extractors
/// are registered later.
class FeatureRegistry {
public:
    using Fn = std::function<double(const Trajectory&)>;

    explicit FeatureRegistry(FeatureConfig cfg = {}) : cfg_(std::move(cfg)) {}

    void add(std::string name, Fn fn) {
        if (is_builtin(name) || custom_.count(name))
            throw ConfigError("feature already registered: " + name);
        order_.push_back(name);
        custom_.emplace(std::move(name), std::move(fn));
    }

    /// Canonical names: built-ins in declaration order, then custom
    /// extractors in registration order.
    std::vector<std::string> names() const {
        std::vector<std::string> out(FeatureVector::names().begin(),
                                     FeatureVector::names().end());
        out.insert(out.end(), order_.begin(), order_.end());
        return out;
    }

    std::vector<double> extract_named(const Trajectory& t,
                                      std::span<const std::string> which) const {
        FeatureVector fv;
        bool have_builtin = false;
        std::vector<double> out;
        out.reserve(which.size());
        for (const std::string& name : which) {
            if (is_builtin(name)) {
                if (!have_builtin) {
                    fv = extract(t, cfg_);
                    have_builtin = true;
                }
                out.push_back(builtin_value(fv, name));
            } else if (auto it = custom_.find(name); it != custom_.end()) {
                out.push_back(it->second(t));
            } else {
                throw UnknownFeature("unknown feature: " + name);
            }
        }
        return out;
    }

    std::vector<double> extract_all(const Trajectory& t) const {
        auto all = names();
        return extract_named(t, all);
    }

    const FeatureConfig& config() const { return cfg_; }

private:
    static bool is_builtin(const std::string& name) {
        const auto& ns = FeatureVector::names();
        return std::find(ns.begin(), ns.end(), name) != ns.end();
    }

    static double builtin_value(const FeatureVector& fv, const std::string& name) {
        const auto& ns = FeatureVector::names();
        auto vals = fv.values();
        auto it = std::find(ns.begin(), ns.end(), name);
        return vals[static_cast<std::size_t>(it - ns.begin())];
    }

    FeatureConfig cfg_;
    std::vector<std::string> order_;
    std::map<std::string, Fn> custom_;
};

/// Z-score statistics. std uses the population form (divide by n);
/// a column with spread below 1e-12 gets std 1 so transform stays defined.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> std;

    bool operator==(const NormStats&) const = default;
};

inline NormStats fit_norm(std::span<const std::vector<double>> rows) {
    if (rows.size() < 2)
        throw TooFewSamples("fit_norm needs at least 2 samples, got " +
                            std::to_string(rows.size()));
    const std::size_t dim = rows[0].size();
    for (const auto& r : rows)
        if (r.size() != dim)
            throw FeatureMismatch("inconsistent feature dimensions in fit_norm");
    NormStats s;
    s.mean.assign(dim, 0.0);
    s.std.assign(dim, 0.0);
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows)
        for (std::size_t i = 0; i < dim; ++i) s.mean[i] += r[i];
    for (std::size_t i = 0; i < dim; ++i) s.mean[i] /= n;
    for (const auto& r : rows)
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = r[i] - s.mean[i];
            s.std[i] += d * d;
        }
    for (std::size_t i = 0; i < dim; ++i) {
        s.std[i] = std::sqrt(s.std[i] / n);
        if (s.std[i] < 1e-12) s.std[i] = 1.0;
    }
    return s;
}

inline NormStats fit_norm(std::span<const FeatureVector> vs) {
    std::vector<std::vector<double>> rows;
    rows.reserve(vs.size());
    for (const FeatureVector& v : vs) {
        auto a = v.values();
        rows.emplace_back(a.begin(), a.end());
    }
    return fit_norm(std::span<const std::vector<double>>(rows));
}

inline std::vector<double> transform(std::span<const double> x, const NormStats& s) {
    if (x.size() != s.mean.size())
        throw FeatureMismatch("transform: vector has " + std::to_string(x.size()) +
                              " features, stats have " + std::to_string(s.mean.size()));
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - s.mean[i]) / s.std[i];
    return out;
}

inline std::vector<double> inverse_transform(std::span<const double> z, const NormStats& s) {
    if (z.size() != s.mean.size())
        throw FeatureMismatch("inverse_transform: dimension mismatch");
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] * s.std[i] + s.mean[i];
    return out;
}

inline std::vector<double> transform(const FeatureVector& v, const NormStats& s) {
    auto a = v.values();
    return transform(std::span<const double>(a.data(), a.size()), s);
}

} // namespace trajcurate
