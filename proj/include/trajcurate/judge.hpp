#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "trajcurate/errors.hpp"
#include "trajcurate/partition.hpp"
#include "trajcurate/trajectory.hpp"

namespace trajcurate {

/// One Map-phase call: a rendered batch plus the memory carried from the
/// previous batch (empty for the first). `trajectory_meta` rides along so
/// deterministic judges can read fixture annotations; remote judges
/// ignore it.
struct JudgeRequest {
    std::string task_id;
    int batch_index = 1;
    std::string task_instruction;
    std::string memory_in; // empty = initial state
    std::string batch_rendering;
    int start = 1;
    int end = 1;
    bool forced_split = false;
    std::map<std::string, std::string> trajectory_meta;
};

struct JudgeSegment {
    int start = 1;
    int end = 1;
    std::string summary;
    std::string intent;
    double score = 5.0; // 1..10

    bool operator==(const JudgeSegment&) const = default;
};

struct JudgeResponse {
    std::vector<JudgeSegment> segments;
    std::string memory_out;

    bool operator==(const JudgeResponse&) const = default;
};

constexpr std::size_t kDefaultMemoryCap = 2000;

/// Cut to at most `cap` bytes, preferring the last whitespace before the
/// limit so words stay whole.
inline std::string truncate_at_whitespace(std::string_view s, std::size_t cap) {
    if (s.size() <= cap) return std::string(s);
    std::size_t cut = cap;
    while (cut > 0 && !std::isspace(static_cast<unsigned char>(s[cut]))) --cut;
    if (cut == 0) cut = cap; // no whitespace to land on
    std::string out(s.substr(0, cut));
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back())))
        out.pop_back();
    return out;
}

/// Schema check for a judge reply: segments must tile [start..end] in
/// order with scores inside [1,10], and memory must respect the cap.
/// Out-of-range scores are rejected, never clamped.
inline std::optional<std::string> check_response(const JudgeResponse& r, int start, int end,
                                                 std::size_t memory_cap = kDefaultMemoryCap) {
    if (r.segments.empty()) return "no segments";
    int expect = start;
    for (const JudgeSegment& s : r.segments) {
        if (s.start != expect)
            return "segments do not tile the batch: expected start " +
                   std::to_string(expect) + ", got " + std::to_string(s.start);
        if (s.end < s.start) return "segment end before start";
        if (!(s.score >= 1.0 && s.score <= 10.0))
            return "score out of range [1,10]: " + std::to_string(s.score);
        expect = s.end + 1;
    }
    if (expect != end + 1)
        return "segments do not cover the batch: stop at " + std::to_string(expect - 1) +
               ", batch ends at " + std::to_string(end);
    if (r.memory_out.size() > memory_cap) return "memory exceeds cap";
    return std::nullopt;
}

/// Deterministic, lossless role-tagged rendering with absolute 1-based
/// positions so the judge can cite boundaries. Step headers sit at column
/// zero; content lines carry a "| " prefix and calls a "+ call " prefix,
/// which keeps distinct step contents distinguishable after rendering.
inline std::string render_batch(const Trajectory& t, const Batch& b) {
    std::ostringstream out;
    for (int pos = b.start; pos <= b.end; ++pos) {
        const Step& s = t.at_pos(pos);
        out << "[step " << pos << " | " << role_name(s.role);
        if (s.role == Role::Tool && s.tool_result)
            out << ':' << (s.tool_result->ok ? "ok" : "error");
        out << "]\n";
        std::string_view content = s.content;
        if (s.role == Role::Tool && s.tool_result && content.empty())
            content = s.tool_result->output;
        std::size_t p = 0;
        while (p <= content.size()) {
            const std::size_t eol = content.find('\n', p);
            const auto line = content.substr(
                p, eol == std::string_view::npos ? std::string_view::npos : eol - p);
            out << "| " << line << "\n";
            if (eol == std::string_view::npos) break;
            p = eol + 1;
        }
        for (const ToolCall& c : s.tool_calls)
            out << "+ call " << c.name << " " << c.arguments << "\n";
    }
    return out.str();
}

/// f_map implementations: scored segments plus the carried memory state.
class Judge {
public:
    virtual ~Judge() = default;
    virtual JudgeResponse judge_batch(const JudgeRequest& req) = 0;
    virtual std::string id() const = 0;
};

namespace detail {

inline std::string collapse_ws(std::string_view s, std::size_t limit) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
            if (out.size() >= limit) break;
        }
    }
    return out;
}

inline std::string fold_case(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Per-step annotations from trajectory meta: "oracle_quality" is a
// comma-separated list aligned with the 0-based step index.
inline std::vector<double> parse_oracle_quality(
    const std::map<std::string, std::string>& meta) {
    std::vector<double> out;
    auto it = meta.find("oracle_quality");
    if (it == meta.end()) return out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            out.push_back(5.0);
        }
    }
    return out;
}

} // namespace detail

/// Normalized intent key used by loop detection: case-folded,
/// whitespace-collapsed.
inline std::string normalize_intent(std::string_view intent) {
    return detail::fold_case(detail::collapse_ws(intent, std::string::npos));
}

/// Deterministic judge for tests and offline runs. Pure function of the
/// request: segments split where a user message begins (whole batch
/// otherwise); a segment scores the mean of its steps' "oracle_quality"
/// annotations, 5 where absent; memory is the capped concatenation of the
/// incoming memory and the new segment summaries.
///
/// Every call is appended to an internal log so tests can assert memory
/// chaining and per-trajectory ordering.
class MockJudge : public Judge {
public:
    struct LoggedCall {
        JudgeRequest request;
        JudgeResponse response;
    };

    explicit MockJudge(std::size_t memory_cap = kDefaultMemoryCap)
        : memory_cap_(memory_cap) {}

    std::string id() const override { return "mock"; }

    JudgeResponse judge_batch(const JudgeRequest& req) override {
        JudgeResponse resp = evaluate(req, memory_cap_);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            log_.push_back({req, resp});
        }
        return resp;
    }

    /// The pure evaluation, exposed so oracles can call it without
    /// touching the log.
    static JudgeResponse evaluate(const JudgeRequest& req,
                                  std::size_t memory_cap = kDefaultMemoryCap) {
        const auto steps = parse_rendering(req.batch_rendering);
        const auto quality = detail::parse_oracle_quality(req.trajectory_meta);

        JudgeResponse resp;
        if (steps.size() != static_cast<std::size_t>(req.end - req.start + 1)) {
            // rendering does not line up with the declared bounds
            resp.segments.push_back({req.start, req.end, "whole batch", "unlabeled", 5.0});
            resp.memory_out = truncate_at_whitespace(req.memory_in, memory_cap);
            return resp;
        }
        int seg_start = req.start;
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const int pos = req.start + static_cast<int>(i);
            const bool last = i + 1 == steps.size();
            const bool next_is_user = !last && steps[i + 1].role == "user";
            if (next_is_user || last) {
                resp.segments.push_back(
                    make_segment(steps, quality, req.start, seg_start, pos));
                seg_start = pos + 1;
            }
        }
        std::string mem = req.memory_in;
        for (const JudgeSegment& s : resp.segments) {
            if (!mem.empty()) mem += " ";
            mem += s.summary;
        }
        resp.memory_out = truncate_at_whitespace(mem, memory_cap);
        return resp;
    }

    std::vector<LoggedCall> log() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return log_;
    }

    void clear_log() {
        std::lock_guard<std::mutex> lock(mutex_);
        log_.clear();
    }

private:
    struct RenderedStep {
        std::string role;
        std::string first_line;
        bool has_first = false;
    };

    // Recover roles and first content lines from the render_batch format.
    static std::vector<RenderedStep> parse_rendering(const std::string& rendering) {
        std::vector<RenderedStep> steps;
        std::stringstream ss(rendering);
        std::string line;
        while (std::getline(ss, line)) {
            if (line.starts_with("[step ")) {
                const auto bar = line.find("| ");
                if (bar == std::string::npos) continue;
                auto role = line.substr(bar + 2);
                if (!role.empty() && role.back() == ']') role.pop_back();
                const auto colon = role.find(':');
                if (colon != std::string::npos) role = role.substr(0, colon);
                steps.push_back({role, "", false});
            } else if (line.starts_with("| ") && !steps.empty() && !steps.back().has_first) {
                steps.back().first_line = line.substr(2);
                steps.back().has_first = true;
            }
        }
        return steps;
    }

    static JudgeSegment make_segment(const std::vector<RenderedStep>& steps,
                                     const std::vector<double>& quality, int batch_start,
                                     int seg_start, int seg_end) {
        JudgeSegment seg;
        seg.start = seg_start;
        seg.end = seg_end;
        double sum = 0.0;
        for (int pos = seg_start; pos <= seg_end; ++pos) {
            const std::size_t idx = static_cast<std::size_t>(pos - 1); // 0-based step
            sum += idx < quality.size() ? quality[idx] : 5.0;
        }
        seg.score = sum / static_cast<double>(seg_end - seg_start + 1);

        // Intent from the segment's opening user message, else its first
        // step; indices stay out so repeated behavior maps to equal intents.
        std::string intent_src;
        for (int pos = seg_start; pos <= seg_end; ++pos) {
            const auto& st = steps[static_cast<std::size_t>(pos - batch_start)];
            if (st.role == "user") {
                intent_src = st.first_line;
                break;
            }
        }
        if (intent_src.empty())
            intent_src = steps[static_cast<std::size_t>(seg_start - batch_start)].first_line;
        seg.intent = detail::collapse_ws(intent_src, 80);
        if (seg.intent.empty()) seg.intent = "unlabeled";
        seg.summary = "steps " + std::to_string(seg_start) + "-" + std::to_string(seg_end) +
                      " " + seg.intent + " q=" + format_score(seg.score) + ";";
        return seg;
    }

    static std::string format_score(double q) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", q);
        return buf;
    }

    std::size_t memory_cap_;
    mutable std::mutex mutex_;
    std::vector<LoggedCall> log_;
};

} // namespace trajcurate
