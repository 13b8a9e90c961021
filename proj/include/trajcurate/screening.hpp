#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trajcurate/features.hpp"
#include "trajcurate/logreg.hpp"
#include "trajcurate/trajectory.hpp"

namespace trajcurate {

/// One macro-screening verdict. kept <=> probability >= threshold; a
/// trajectory whose features could not be extracted carries `error`
/// instead and is never kept.
struct ScreenDecision {
    std::string task_id;
    double probability = 0.0;
    bool kept = false;
    double threshold_used = 0.0;
    std::optional<std::string> error;
};

inline ScreenDecision screen_one(const Trajectory& t, const ScreeningModel& m,
                                 double tau_global, const FeatureRegistry& reg) {
    ScreenDecision d;
    d.task_id = t.task_id;
    d.threshold_used = tau_global;
    try {
        auto raw = reg.extract_named(t, m.feature_names);
        d.probability = m.predict_from_raw(raw);
        d.kept = d.probability >= tau_global; // boundary is kept
    } catch (const Error& e) {
        d.error = e.what();
        d.kept = false;
    }
    return d;
}

/// Filter a corpus. Order preserved; one decision per input; a bad
/// trajectory yields an error decision instead of aborting the stream.
inline std::pair<std::vector<Trajectory>, std::vector<ScreenDecision>> screen(
    std::span<const Trajectory> ts, const ScreeningModel& m, double tau_global,
    const FeatureRegistry& reg) {
    std::vector<Trajectory> kept;
    std::vector<ScreenDecision> decisions;
    decisions.reserve(ts.size());
    for (const Trajectory& t : ts) {
        ScreenDecision d = screen_one(t, m, tau_global, reg);
        if (d.kept) kept.push_back(t);
        decisions.push_back(std::move(d));
    }
    return {std::move(kept), std::move(decisions)};
}

/// Line format of the decisions report.
inline nlohmann::ordered_json decision_to_json(const ScreenDecision& d) {
    nlohmann::ordered_json j;
    j["task_id"] = d.task_id;
    if (!d.error) j["probability"] = d.probability;
    j["kept"] = d.kept;
    j["threshold"] = d.threshold_used;
    if (d.error) j["error"] = *d.error;
    return j;
}

} // namespace trajcurate
