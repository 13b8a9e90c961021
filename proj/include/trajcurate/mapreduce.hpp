#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "trajcurate/errors.hpp"
#include "trajcurate/judge.hpp"
#include "trajcurate/partition.hpp"
#include "trajcurate/trajectory.hpp"

namespace trajcurate {

/// A judged sub-task: bounds, summary, structural intent, and a 1-10
/// quality score, plus provenance of the batch and memory it was judged
/// under.
struct Segment {
    std::string task_id;
    int start = 1;
    int end = 1;
    std::string summary;
    std::string intent;
    double score = 5.0;
    int batch_index = 1;
    std::string memory_in_digest;

    bool operator==(const Segment&) const = default;
};

/// The condensed trajectory: its segments in order, tiling 1..N.
struct AbstractTrajectory {
    std::string task_id;
    std::vector<Segment> segments;

    bool operator==(const AbstractTrajectory&) const = default;
};

/// Trajectory-level aggregation over segment scores plus loop detection.
struct GlobalEvaluation {
    double mean_score = 0.0;
    double min_score = 0.0;
    double max_score = 0.0;
    bool loop_flag = false;
    std::vector<int> loop_evidence; // positions in the segment list
    double completion_estimate = 0.0;
    double e_global = 0.0;
};

enum class FailurePolicy { Exclude, Degrade };

constexpr std::size_t kMemoryDigestLimit = 160;

inline std::string memory_digest(const std::string& memory) {
    return truncate_at_whitespace(memory, kMemoryDigestLimit);
}

/// Task instruction handed to the judge: the first user message, falling
/// back to the opening step.
inline std::string task_instruction_of(const Trajectory& t) {
    for (const Step& s : t.steps)
        if (s.role == Role::User) return s.content;
    return t.steps.empty() ? std::string() : t.steps.front().content;
}

inline JudgeRequest make_judge_request(const Trajectory& t, const Batch& b,
                                       const std::string& memory_in) {
    JudgeRequest req;
    req.task_id = t.task_id;
    req.batch_index = b.k;
    req.task_instruction = task_instruction_of(t);
    req.memory_in = memory_in;
    req.batch_rendering = render_batch(t, b);
    req.start = b.start;
    req.end = b.end;
    req.forced_split = b.forced;
    req.trajectory_meta = t.meta;
    return req;
}

/// Map phase over one trajectory: batches are judged strictly in order,
/// each request carrying the previous response's memory. Judge failures
/// follow the policy: Exclude throws TrajectoryExcluded (no partial
/// output); Degrade turns the failed batch into a single score-1 segment
/// and carries the memory through unchanged.
inline AbstractTrajectory map_trajectory(const Trajectory& t, std::span<const Batch> batches,
                                         Judge& judge,
                                         FailurePolicy policy = FailurePolicy::Exclude) {
    AbstractTrajectory abs;
    abs.task_id = t.task_id;
    std::string memory; // m_0 is empty
    for (const Batch& b : batches) {
        JudgeRequest req = make_judge_request(t, b, memory);
        const std::string digest = memory_digest(memory);
        try {
            JudgeResponse resp = judge.judge_batch(req);
            if (auto err = check_response(resp, b.start, b.end))
                throw JudgeMalformed("judge response invalid: " + *err);
            for (const JudgeSegment& s : resp.segments)
                abs.segments.push_back({t.task_id, s.start, s.end, s.summary, s.intent,
                                        s.score, b.k, digest});
            memory = resp.memory_out;
        } catch (const JudgeMalformed& e) {
            if (policy == FailurePolicy::Exclude)
                throw TrajectoryExcluded(t.task_id + " batch " + std::to_string(b.k) +
                                         ": " + e.what());
            abs.segments.push_back({t.task_id, b.start, b.end, "unjudged batch",
                                    "unjudged", 1.0, b.k, digest});
        } catch (const JudgeUnavailable& e) {
            if (policy == FailurePolicy::Exclude)
                throw TrajectoryExcluded(t.task_id + " batch " + std::to_string(b.k) +
                                         ": " + e.what());
            abs.segments.push_back({t.task_id, b.start, b.end, "unjudged batch",
                                    "unjudged", 1.0, b.k, digest});
        }
    }
    return abs;
}

/// Deterministic Reduce: score statistics, loop detection (three or more
/// segments sharing a normalized intent), completion as the fraction of
/// segments scoring >= 6, and e_global = clamp(mean - 2*loop, 1, 10).
inline GlobalEvaluation reduce(const AbstractTrajectory& a) {
    GlobalEvaluation g;
    if (a.segments.empty()) return g;
    g.min_score = a.segments.front().score;
    g.max_score = a.segments.front().score;
    std::size_t completed = 0;
    std::vector<double> scores;
    scores.reserve(a.segments.size());
    std::map<std::string, std::vector<int>> by_intent;
    for (std::size_t i = 0; i < a.segments.size(); ++i) {
        const Segment& s = a.segments[i];
        scores.push_back(s.score);
        g.min_score = std::min(g.min_score, s.score);
        g.max_score = std::max(g.max_score, s.score);
        if (s.score >= 6.0) ++completed;
        by_intent[normalize_intent(s.intent)].push_back(static_cast<int>(i));
    }
    // Sum in value order so the mean is bit-stable under segment reordering.
    std::sort(scores.begin(), scores.end());
    double sum = 0.0;
    for (double q : scores) sum += q;
    g.mean_score = sum / static_cast<double>(a.segments.size());
    for (const auto& [intent, ids] : by_intent) {
        if (ids.size() >= 3) {
            g.loop_flag = true;
            g.loop_evidence.insert(g.loop_evidence.end(), ids.begin(), ids.end());
        }
    }
    std::sort(g.loop_evidence.begin(), g.loop_evidence.end());
    g.completion_estimate =
        static_cast<double>(completed) / static_cast<double>(a.segments.size());
    g.e_global = std::clamp(g.mean_score - (g.loop_flag ? 2.0 : 0.0), 1.0, 10.0);
    return g;
}

/// Optional judge-backed Reduce: statistics stay deterministic, only
/// e_global comes from the judge's overall scoring of the condensed
/// segment list.
inline GlobalEvaluation reduce_with_judge(const AbstractTrajectory& a, Judge& judge) {
    GlobalEvaluation g = reduce(a);
    if (a.segments.empty()) return g;
    JudgeRequest req;
    req.task_id = a.task_id;
    req.batch_index = 0;
    req.task_instruction = "Rate the overall trajectory from its judged segments.";
    req.start = 1;
    req.end = static_cast<int>(a.segments.size());
    std::string rendering;
    for (std::size_t i = 0; i < a.segments.size(); ++i) {
        const Segment& s = a.segments[i];
        rendering += "[step " + std::to_string(i + 1) + " | system]\n| segment steps " +
                     std::to_string(s.start) + "-" + std::to_string(s.end) + " intent: " +
                     s.intent + " score: " + std::to_string(s.score) + "\n";
    }
    req.batch_rendering = rendering;
    JudgeResponse resp = judge.judge_batch(req);
    if (!resp.segments.empty()) {
        double sum = 0.0;
        for (const JudgeSegment& s : resp.segments) sum += s.score;
        g.e_global = std::clamp(sum / static_cast<double>(resp.segments.size()), 1.0, 10.0);
    }
    return g;
}

/// Outcome of mapping one trajectory in a corpus run.
struct MapResult {
    std::string task_id;
    std::optional<AbstractTrajectory> abstracted;
    std::optional<GlobalEvaluation> global;
    std::string error; // set when excluded
};

/// Map a corpus with bounded cross-trajectory parallelism. Each worker
/// owns whole trajectories, so batches of one trajectory are always
/// issued sequentially; results land in input order.
inline std::vector<MapResult> map_corpus(std::span<const Trajectory> ts,
                                         const SplitPolicy& policy, Judge& judge,
                                         FailurePolicy failure_policy, int concurrency) {
    std::vector<MapResult> results(ts.size());
    if (ts.empty()) return results;
    const int workers =
        std::max(1, std::min<int>(concurrency, static_cast<int>(ts.size())));
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= ts.size()) return;
            MapResult& r = results[i];
            r.task_id = ts[i].task_id;
            try {
                auto batches = partition(ts[i], policy);
                auto abs = map_trajectory(ts[i], batches, judge, failure_policy);
                r.global = reduce(abs);
                r.abstracted = std::move(abs);
            } catch (const Error& e) {
                r.error = e.what();
            }
        }
    };
    if (workers == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(run);
        for (auto& th : pool) th.join();
    }
    return results;
}

// Line formats of the segment dump: one "segment" record per Segment and
// one "global" record per trajectory.
inline nlohmann::ordered_json segment_to_json(const Segment& s) {
    nlohmann::ordered_json j;
    j["type"] = "segment";
    j["task_id"] = s.task_id;
    j["start"] = s.start;
    j["end"] = s.end;
    j["summary"] = s.summary;
    j["intent"] = s.intent;
    j["score"] = s.score;
    j["batch"] = s.batch_index;
    j["memory_in_digest"] = s.memory_in_digest;
    return j;
}

inline Segment segment_from_json(const nlohmann::json& j) {
    Segment s;
    s.task_id = j.at("task_id").get<std::string>();
    s.start = j.at("start").get<int>();
    s.end = j.at("end").get<int>();
    s.summary = j.at("summary").get<std::string>();
    s.intent = j.at("intent").get<std::string>();
    s.score = j.at("score").get<double>();
    s.batch_index = j.value("batch", 1);
    s.memory_in_digest = j.value("memory_in_digest", std::string());
    return s;
}

inline nlohmann::ordered_json global_to_json(const std::string& task_id,
                                             const GlobalEvaluation& g) {
    nlohmann::ordered_json j;
    j["type"] = "global";
    j["task_id"] = task_id;
    j["mean_score"] = g.mean_score;
    j["min_score"] = g.min_score;
    j["max_score"] = g.max_score;
    j["loop_flag"] = g.loop_flag;
    j["loop_evidence"] = g.loop_evidence;
    j["completion_estimate"] = g.completion_estimate;
    j["e_global"] = g.e_global;
    return j;
}

} // namespace trajcurate
