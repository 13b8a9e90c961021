#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "trajcurate/errors.hpp"
#include "trajcurate/judge.hpp"

namespace trajcurate {

struct RemoteJudgeConfig {
    std::string base_url;            // e.g. http://localhost:8000
    std::string model;               // judge model name
    std::string auth_env = "JUDGE_API_KEY"; // token comes from the environment only
    int timeout_ms = 30000;
    int max_retries = 3;             // extra attempts after the first
    int retry_backoff_ms = 250;
    std::size_t memory_cap = kDefaultMemoryCap;
    int concurrency = 4;             // bound on in-flight requests

    bool operator==(const RemoteJudgeConfig&) const = default;
};

namespace detail {

// Bounded in-flight guard; plain mutex/cv to keep the count runtime-chosen.
class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [this] { return count_ > 0; });
        --count_;
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int count_;
};

struct SemaphoreGuard {
    Semaphore& sem;
    explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~SemaphoreGuard() { sem.release(); }
};

/// The reply must carry exactly one fenced JSON object.
inline std::optional<std::string> extract_single_fenced_json(const std::string& text) {
    std::size_t first = text.find("```");
    if (first == std::string::npos) return std::nullopt;
    std::size_t body_start = text.find('\n', first);
    if (body_start == std::string::npos) return std::nullopt;
    ++body_start;
    const std::size_t close = text.find("```", body_start);
    if (close == std::string::npos) return std::nullopt;
    if (text.find("```", close + 3) != std::string::npos) return std::nullopt; // more fences
    return text.substr(body_start, close - body_start);
}

inline std::optional<JudgeResponse> response_from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    if (!j.contains("segments") || !j["segments"].is_array() || !j.contains("memory") ||
        !j["memory"].is_string())
        return std::nullopt;
    JudgeResponse r;
    for (const auto& js : j["segments"]) {
        if (!js.is_object() || !js.contains("start") || !js["start"].is_number_integer() ||
            !js.contains("end") || !js["end"].is_number_integer() ||
            !js.contains("summary") || !js["summary"].is_string() ||
            !js.contains("intent") || !js["intent"].is_string() ||
            !js.contains("score") || !js["score"].is_number())
            return std::nullopt;
        r.segments.push_back({js["start"].get<int>(), js["end"].get<int>(),
                              js["summary"].get<std::string>(),
                              js["intent"].get<std::string>(), js["score"].get<double>()});
    }
    r.memory_out = j["memory"].get<std::string>();
    return r;
}

} // namespace detail

/// Chat-completions client for the Map phase. Sends one message list per
/// batch, expects exactly one fenced JSON object back, and retries schema
/// violations up to max_retries before giving up with JudgeMalformed.
/// Transport failures retry the same way and end in JudgeUnavailable.
/// Oversized memory is the one repair applied silently (whitespace
/// truncation); everything else is rejected, not repaired.
class RemoteJudge : public Judge {
public:
    explicit RemoteJudge(RemoteJudgeConfig cfg)
        : cfg_(std::move(cfg)), sem_(cfg_.concurrency > 0 ? cfg_.concurrency : 1) {
        if (cfg_.base_url.empty()) throw ConfigError("remote judge: base_url required");
    }

    std::string id() const override { return "remote:" + cfg_.model; }

    /// Total schema/transport retries performed over the client lifetime.
    int retries_used() const { return retries_.load(); }

    /// Whether the endpoint answers HTTP at all (any status counts).
    bool probe() {
        httplib::Client client(cfg_.base_url);
        client.set_connection_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
        client.set_read_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
        auto res = client.Get("/");
        return static_cast<bool>(res);
    }

    const RemoteJudgeConfig& config() const { return cfg_; }

    JudgeResponse judge_batch(const JudgeRequest& req) override {
        detail::SemaphoreGuard guard(sem_);
        std::string last_error;
        bool transport_failed = false;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                retries_.fetch_add(1);
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(cfg_.retry_backoff_ms));
            }
            transport_failed = false;
            auto body = post_chat(req, last_error);
            if (!body) {
                transport_failed = true;
                continue;
            }
            auto fenced = detail::extract_single_fenced_json(*body);
            if (!fenced) {
                last_error = "reply did not contain exactly one fenced JSON object";
                continue;
            }
            auto resp = detail::response_from_json_text(*fenced);
            if (!resp) {
                last_error = "fenced JSON does not match the response schema";
                continue;
            }
            if (resp->memory_out.size() > cfg_.memory_cap)
                resp->memory_out = truncate_at_whitespace(resp->memory_out, cfg_.memory_cap);
            if (auto err = check_response(*resp, req.start, req.end, cfg_.memory_cap)) {
                last_error = *err;
                continue;
            }
            return *resp;
        }
        if (transport_failed)
            throw JudgeUnavailable("judge endpoint unreachable: " + last_error);
        throw JudgeMalformed("judge reply invalid after " +
                             std::to_string(cfg_.max_retries) + " retries: " + last_error);
    }

private:
    std::optional<std::string> post_chat(const JudgeRequest& req, std::string& error) {
        httplib::Client client(cfg_.base_url);
        client.set_connection_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
        client.set_read_timeout(std::chrono::milliseconds(cfg_.timeout_ms));

        httplib::Headers headers;
        if (const char* token = std::getenv(cfg_.auth_env.c_str()); token && *token)
            headers.emplace("Authorization", std::string("Bearer ") + token);

        nlohmann::json payload;
        payload["model"] = cfg_.model;
        payload["temperature"] = 0.0;
        payload["messages"] = {
            {{"role", "system"}, {"content", system_prompt()}},
            {{"role", "user"}, {"content", user_prompt(req)}},
        };

        auto res = client.Post("/v1/chat/completions", headers, payload.dump(),
                               "application/json");
        if (!res) {
            error = "transport: " + httplib::to_string(res.error());
            return std::nullopt;
        }
        if (res->status != 200) {
            error = "http status " + std::to_string(res->status);
            return std::nullopt;
        }
        nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
            !j["choices"][0].contains("message")) {
            error = "malformed completion envelope";
            return std::nullopt;
        }
        const auto& msg = j["choices"][0]["message"];
        if (!msg.contains("content") || !msg["content"].is_string()) {
            error = "completion has no text content";
            return std::nullopt;
        }
        return msg["content"].get<std::string>();
    }

    static std::string system_prompt() {
        return "You segment and score windows of an agent trajectory.\n"
               "Split the window into contiguous sub-task segments and rate each one.\n"
               "Reply with exactly one fenced JSON object and nothing else:\n"
               "```json\n"
               "{\"segments\":[{\"start\":int,\"end\":int,\"summary\":str,"
               "\"intent\":str,\"score\":number}],\"memory\":str}\n"
               "```\n"
               "Rules: segments must tile the window's step range in order with no "
               "gaps or overlaps; start/end are the absolute step positions shown in "
               "the window; score is 1..10 judging the agent's local reasoning and "
               "execution; memory is a short running summary (under 2000 characters) "
               "that lets the next window be judged in context.";
    }

    static std::string user_prompt(const JudgeRequest& req) {
        std::string out = "Task instruction:\n" + req.task_instruction + "\n\n";
        out += "Carried memory of earlier steps:\n";
        out += req.memory_in.empty() ? "(none: this is the first window)" : req.memory_in;
        out += "\n\nWindow covers steps " + std::to_string(req.start) + ".." +
               std::to_string(req.end) + ".";
        if (req.forced_split)
            out += " Note: this window was split at a hard cap, so an action and its "
                   "observation may be truncated at the edges.";
        out += "\n\n" + req.batch_rendering;
        return out;
    }

    RemoteJudgeConfig cfg_;
    detail::Semaphore sem_;
    std::atomic<int> retries_{0};
};

} // namespace trajcurate
