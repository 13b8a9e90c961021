#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajcurate/errors.hpp"
#include "trajcurate/features.hpp"
#include "trajcurate/judge.hpp"
#include "trajcurate/logreg.hpp"
#include "trajcurate/mapreduce.hpp"
#include "trajcurate/partition.hpp"
#include "trajcurate/screening.hpp"
#include "trajcurate/trajectory.hpp"

namespace trajcurate {

inline constexpr const char* kPipelineVersion = "1";

enum class EmitMode { Segments, FullTrajectory, Both };

inline const char* emit_mode_name(EmitMode m) {
    switch (m) {
        case EmitMode::Segments: return "segments";
        case EmitMode::FullTrajectory: return "full_trajectory";
        case EmitMode::Both: return "both";
    }
    return "?";
}

inline std::optional<EmitMode> emit_mode_from_name(std::string_view s) {
    if (s == "segments") return EmitMode::Segments;
    if (s == "full_trajectory") return EmitMode::FullTrajectory;
    if (s == "both") return EmitMode::Both;
    return std::nullopt;
}

struct CurationConfig {
    double tau_global = 0.5;
    double tau_seg = 6.0;
    EmitMode emit_mode = EmitMode::Segments;
    FailurePolicy failure_policy = FailurePolicy::Exclude;

    void check() const {
        if (!(tau_global >= 0.0 && tau_global <= 1.0))
            throw ConfigError("curate: tau_global must be in [0,1]");
        if (!(tau_seg >= 1.0 && tau_seg <= 10.0))
            throw ConfigError("curate: tau_seg must be in [1,10]");
    }

    bool operator==(const CurationConfig&) const = default;
};

struct Message {
    std::string role;
    std::string content;
    bool operator==(const Message&) const = default;
};

struct Provenance {
    std::string judge_id;
    std::string model_id;
    double tau_global = 0.5;
    double tau_seg = 6.0;
    std::string pipeline_version = kPipelineVersion;
    bool operator==(const Provenance&) const = default;
};

/// One emitted training sample: the raw step slice of a judged segment
/// plus enough context (task instruction, carried memory) to stand alone.
struct CurationRecord {
    std::string task_id;
    int start = 1;
    int end = 1;
    double score = 0.0;
    std::string intent;
    std::string summary;
    std::vector<Message> messages;
    std::string instruction;
    std::string memory_in;
    Provenance provenance;

    bool operator==(const CurationRecord&) const = default;
};

struct StageError {
    std::string task_id;
    std::string stage; // parse | screen | judge
    std::string message;
};

/// Aggregates for a corpus run: per-stage counts, 10-bucket histograms
/// over [1,10] for segment scores and e_global, and the error ledger.
struct CurationReport {
    std::size_t input = 0;
    std::size_t screen_kept = 0;
    std::size_t screen_dropped = 0;
    std::size_t screen_errors = 0;
    std::size_t judged_ok = 0;
    std::size_t judged_excluded = 0;
    std::size_t segments_total = 0;
    std::size_t records_emitted = 0;
    std::array<std::size_t, 10> score_histogram{};
    std::array<std::size_t, 10> e_global_histogram{};
    std::vector<StageError> errors;
};

inline std::size_t score_bucket(double q) {
    const double clamped = std::clamp(q, 1.0, 10.0);
    auto idx = static_cast<std::size_t>((clamped - 1.0) / 0.9);
    return std::min<std::size_t>(idx, 9);
}

/// Fold a windowed run's report into the whole-corpus one.
inline void merge_into(CurationReport& into, const CurationReport& part) {
    into.input += part.input;
    into.screen_kept += part.screen_kept;
    into.screen_dropped += part.screen_dropped;
    into.screen_errors += part.screen_errors;
    into.judged_ok += part.judged_ok;
    into.judged_excluded += part.judged_excluded;
    into.segments_total += part.segments_total;
    into.records_emitted += part.records_emitted;
    for (std::size_t b = 0; b < 10; ++b) {
        into.score_histogram[b] += part.score_histogram[b];
        into.e_global_histogram[b] += part.e_global_histogram[b];
    }
    into.errors.insert(into.errors.end(), part.errors.begin(), part.errors.end());
}

namespace detail {

inline Message message_of(const Step& s) {
    std::string content = s.content;
    if (s.role == Role::Tool && content.empty() && s.tool_result)
        content = s.tool_result->output;
    return {role_name(s.role), std::move(content)};
}

} // namespace detail

inline CurationRecord record_for_slice(const Trajectory& t, int start, int end,
                                       double score, const std::string& intent,
                                       const std::string& summary,
                                       const std::string& memory_in,
                                       const Provenance& prov) {
    CurationRecord r;
    r.task_id = t.task_id;
    r.start = start;
    r.end = end;
    r.score = score;
    r.intent = intent;
    r.summary = summary;
    for (int pos = start; pos <= end; ++pos)
        r.messages.push_back(detail::message_of(t.at_pos(pos)));
    r.instruction = task_instruction_of(t);
    r.memory_in = memory_in;
    r.provenance = prov;
    return r;
}

/// Segment-threshold filter and record assembly for one mapped
/// trajectory. E_global never gates anything here: a single strong
/// segment of an otherwise poor trajectory still comes through.
inline std::vector<CurationRecord> records_from_abstract(const Trajectory& t,
                                                         const AbstractTrajectory& a,
                                                         const CurationConfig& cfg,
                                                         const Provenance& prov) {
    std::vector<CurationRecord> out;
    const bool want_segments =
        cfg.emit_mode == EmitMode::Segments || cfg.emit_mode == EmitMode::Both;
    const bool want_full =
        cfg.emit_mode == EmitMode::FullTrajectory || cfg.emit_mode == EmitMode::Both;
    if (want_segments) {
        for (const Segment& s : a.segments) {
            if (s.score >= cfg.tau_seg)
                out.push_back(record_for_slice(t, s.start, s.end, s.score, s.intent,
                                               s.summary, s.memory_in_digest, prov));
        }
    }
    if (want_full && !a.segments.empty()) {
        double min_q = a.segments.front().score;
        for (const Segment& s : a.segments) min_q = std::min(min_q, s.score);
        if (min_q >= cfg.tau_seg) {
            CurationRecord whole = record_for_slice(
                t, 1, t.length(), min_q, "full trajectory",
                "full trajectory (" + std::to_string(a.segments.size()) + " segments)",
                "", prov);
            out.push_back(std::move(whole));
        }
    }
    return out;
}

struct CurateResult {
    std::vector<CurationRecord> records;
    std::vector<MapResult> mapped; // per kept trajectory, input order
    CurationReport report;
};

/// The end-to-end two-stage pipeline: macro screening, safe-split
/// partitioning, memory-threaded judging, then the segment-score filter.
/// Per-item failures are attributed in the report; the run never aborts
/// on one bad trajectory.
inline CurateResult curate(std::span<const Trajectory> ts, const ScreeningModel& model,
                           Judge& judge, const CurationConfig& cfg,
                           const SplitPolicy& split, const FeatureRegistry& reg,
                           int concurrency = 4, const std::string& model_id = "model") {
    cfg.check();
    split.check();
    CurateResult result;
    result.report.input = ts.size();

    Provenance prov;
    prov.judge_id = judge.id();
    prov.model_id = model_id;
    prov.tau_global = cfg.tau_global;
    prov.tau_seg = cfg.tau_seg;

    std::vector<Trajectory> kept;
    for (const Trajectory& t : ts) {
        ScreenDecision d = screen_one(t, model, cfg.tau_global, reg);
        if (d.error) {
            ++result.report.screen_errors;
            result.report.errors.push_back({t.task_id, "screen", *d.error});
        } else if (d.kept) {
            ++result.report.screen_kept;
            kept.push_back(t);
        } else {
            ++result.report.screen_dropped;
        }
    }

    result.mapped = map_corpus(kept, split, judge, cfg.failure_policy, concurrency);

    for (std::size_t i = 0; i < result.mapped.size(); ++i) {
        const MapResult& m = result.mapped[i];
        if (!m.abstracted) {
            ++result.report.judged_excluded;
            result.report.errors.push_back({m.task_id, "judge", m.error});
            continue;
        }
        ++result.report.judged_ok;
        result.report.segments_total += m.abstracted->segments.size();
        for (const Segment& s : m.abstracted->segments)
            ++result.report.score_histogram[score_bucket(s.score)];
        if (m.global) ++result.report.e_global_histogram[score_bucket(m.global->e_global)];
        auto records = records_from_abstract(kept[i], *m.abstracted, cfg, prov);
        for (auto& r : records) result.records.push_back(std::move(r));
    }
    result.report.records_emitted = result.records.size();
    return result;
}

// ---------------------------------------------------------------------------
// Dataset emission (line-delimited, deterministic field order)
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json record_to_json(const CurationRecord& r) {
    nlohmann::ordered_json j;
    j["task_id"] = r.task_id;
    j["start"] = r.start;
    j["end"] = r.end;
    j["score"] = r.score;
    j["intent"] = r.intent;
    j["summary"] = r.summary;
    j["messages"] = nlohmann::ordered_json::array();
    for (const Message& m : r.messages)
        j["messages"].push_back({{"role", m.role}, {"content", m.content}});
    j["context"] = {{"instruction", r.instruction}, {"memory_in", r.memory_in}};
    j["provenance"] = {{"judge", r.provenance.judge_id},
                       {"model", r.provenance.model_id},
                       {"tau_global", r.provenance.tau_global},
                       {"tau_seg", r.provenance.tau_seg},
                       {"pipeline_version", r.provenance.pipeline_version}};
    return j;
}

inline CurationRecord record_from_json(const nlohmann::json& j) {
    CurationRecord r;
    r.task_id = j.at("task_id").get<std::string>();
    r.start = j.at("start").get<int>();
    r.end = j.at("end").get<int>();
    r.score = j.at("score").get<double>();
    r.intent = j.at("intent").get<std::string>();
    r.summary = j.at("summary").get<std::string>();
    for (const auto& m : j.at("messages"))
        r.messages.push_back(
            {m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    r.instruction = j.at("context").at("instruction").get<std::string>();
    r.memory_in = j.at("context").at("memory_in").get<std::string>();
    const auto& p = j.at("provenance");
    r.provenance.judge_id = p.at("judge").get<std::string>();
    r.provenance.model_id = p.at("model").get<std::string>();
    r.provenance.tau_global = p.at("tau_global").get<double>();
    r.provenance.tau_seg = p.at("tau_seg").get<double>();
    r.provenance.pipeline_version = p.at("pipeline_version").get<std::string>();
    return r;
}

/// Streaming sink: one record per line, written as it arrives. Holds no
/// buffered records, so the high-water mark stays flat on large corpora.
class DatasetWriter {
public:
    explicit DatasetWriter(std::ostream& out) : out_(out) {}

    void write(const CurationRecord& r) {
        out_ << record_to_json(r).dump() << '\n';
        if (!out_) throw IoFailure("dataset sink write failed");
        ++count_;
    }

    std::size_t count() const { return count_; }

private:
    std::ostream& out_;
    std::size_t count_ = 0;
};

inline std::size_t emit_dataset(std::span<const CurationRecord> records, std::ostream& out) {
    DatasetWriter writer(out);
    for (const CurationRecord& r : records) writer.write(r);
    return writer.count();
}

inline nlohmann::ordered_json report_to_json(const CurationReport& r) {
    nlohmann::ordered_json j;
    j["input"] = r.input;
    j["screen"] = {{"kept", r.screen_kept},
                   {"dropped", r.screen_dropped},
                   {"errors", r.screen_errors}};
    j["judged"] = {{"ok", r.judged_ok}, {"excluded", r.judged_excluded}};
    j["segments"] = {{"total", r.segments_total}, {"emitted", r.records_emitted}};
    j["score_histogram"] = r.score_histogram;
    j["e_global_histogram"] = r.e_global_histogram;
    j["errors"] = nlohmann::ordered_json::array();
    for (const StageError& e : r.errors)
        j["errors"].push_back(
            {{"task_id", e.task_id}, {"stage", e.stage}, {"message", e.message}});
    return j;
}

} // namespace trajcurate
