#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>

#include "trajcurate/mapreduce.hpp"

#include "support/generators.hpp"

using namespace trajcurate;
namespace tg = testgen;

namespace {

// Three-window fixture: user-led blocks so every window opens on a user
// step and windows end post-observation.
Trajectory three_block_fixture(const std::string& id) {
    std::vector<Step> steps;
    int idx = 0;
    for (int b = 0; b < 3; ++b) {
        steps.push_back(tg::step(idx++, Role::User, "phase " + std::to_string(b)));
        steps.push_back(tg::assistant_call(idx++, "bash"));
        steps.push_back(tg::tool_step(idx++, true, "ok"));
        steps.push_back(tg::step(idx++, Role::Assistant, "summary " + std::to_string(b)));
    }
    return tg::trajectory(id, std::move(steps));
}

Segment seg(const std::string& id, int start, int end, double q,
            const std::string& intent) {
    return {id, start, end, "s", intent, q, 1, ""};
}

// Judge that always produces schema-violating replies.
class BrokenJudge : public Judge {
public:
    std::string id() const override { return "broken"; }
    JudgeResponse judge_batch(const JudgeRequest&) override {
        throw JudgeMalformed("scripted failure");
    }
};

// Fails only on a specific batch index.
class FailAtBatch : public Judge {
public:
    explicit FailAtBatch(int k) : k_(k) {}
    std::string id() const override { return "fail-at"; }
    JudgeResponse judge_batch(const JudgeRequest& req) override {
        if (req.batch_index == k_) throw JudgeMalformed("scripted failure");
        return MockJudge::evaluate(req);
    }

private:
    int k_;
};

} // namespace

TEST_CASE("single-batch trajectory: one call with empty memory") {
    Trajectory t = tg::trajectory("one", {tg::step(0, Role::User, "ask"),
                                          tg::step(1, Role::Assistant, "answer")});
    MockJudge judge;
    auto batches = partition(t, {1, 10});
    REQUIRE(batches.size() == 1);
    AbstractTrajectory abs = map_trajectory(t, batches, judge);
    auto log = judge.log();
    REQUIRE(log.size() == 1);
    CHECK(log[0].request.memory_in.empty());
    REQUIRE(!abs.segments.empty());
    CHECK(abs.segments.front().start == 1);
    CHECK(abs.segments.back().end == t.length());
}

TEST_CASE("three-batch run chains memory exactly") {
    Trajectory t = three_block_fixture("chain");
    MockJudge judge;
    SplitPolicy pol{4, 4}; // forces window = block
    auto batches = partition(t, pol);
    REQUIRE(batches.size() == 3);
    AbstractTrajectory abs = map_trajectory(t, batches, judge);

    auto log = judge.log();
    REQUIRE(log.size() == 3);
    CHECK(log[0].request.memory_in.empty()); // m0
    CHECK(log[1].request.memory_in == log[0].response.memory_out);
    CHECK(log[2].request.memory_in == log[1].response.memory_out);

    // each m_k is the mock's deterministic function of its predecessor
    for (int k = 0; k < 3; ++k) {
        JudgeResponse expect = MockJudge::evaluate(log[static_cast<std::size_t>(k)].request);
        REQUIRE(log[static_cast<std::size_t>(k)].response == expect);
    }

    // segments concatenate to tile 1..N
    REQUIRE(!abs.segments.empty());
    CHECK(abs.segments.front().start == 1);
    CHECK(abs.segments.back().end == t.length());
    for (std::size_t i = 1; i < abs.segments.size(); ++i)
        REQUIRE(abs.segments[i].start == abs.segments[i - 1].end + 1);

    // provenance: segment digests reflect the memory the window saw
    CHECK(abs.segments.front().memory_in_digest.empty());
}

TEST_CASE("exclude policy: failure wipes the whole trajectory") {
    Trajectory t = three_block_fixture("boom");
    FailAtBatch judge(2);
    auto batches = partition(t, {4, 4});
    CHECK_THROWS_AS(map_trajectory(t, batches, judge, FailurePolicy::Exclude),
                    TrajectoryExcluded);
}

TEST_CASE("degrade policy: failed batch becomes a single score-1 segment") {
    Trajectory t = three_block_fixture("limp");
    FailAtBatch judge(2);
    auto batches = partition(t, {4, 4});
    AbstractTrajectory abs = map_trajectory(t, batches, judge, FailurePolicy::Degrade);
    std::vector<Segment> degraded;
    for (const Segment& s : abs.segments)
        if (s.intent == "unjudged") degraded.push_back(s);
    REQUIRE(degraded.size() == 1);
    CHECK(degraded[0].start == 5);
    CHECK(degraded[0].end == 8);
    CHECK(degraded[0].score == 1.0);
    // tiling still holds
    CHECK(abs.segments.front().start == 1);
    CHECK(abs.segments.back().end == t.length());
    for (std::size_t i = 1; i < abs.segments.size(); ++i)
        REQUIRE(abs.segments[i].start == abs.segments[i - 1].end + 1);
}

TEST_CASE("reduce: uniform scores, distinct intents") {
    AbstractTrajectory a{"r", {seg("r", 1, 2, 7, "alpha"), seg("r", 3, 4, 7, "beta"),
                               seg("r", 5, 6, 7, "gamma")}};
    GlobalEvaluation g = reduce(a);
    CHECK(g.mean_score == 7.0);
    CHECK(g.min_score == 7.0);
    CHECK(g.max_score == 7.0);
    CHECK_FALSE(g.loop_flag);
    CHECK(g.loop_evidence.empty());
    CHECK(g.e_global == 7.0);
    CHECK(g.completion_estimate == 1.0);
}

TEST_CASE("reduce: three segments sharing an intent flag a loop") {
    AbstractTrajectory a{"r",
                         {seg("r", 1, 2, 6, "Retry  failing TEST"),
                          seg("r", 3, 4, 8, "retry failing test"),
                          seg("r", 5, 6, 7, "retry FAILING   test"),
                          seg("r", 7, 8, 9, "ship it")}};
    GlobalEvaluation g = reduce(a);
    CHECK(g.loop_flag);
    CHECK(g.loop_evidence == std::vector<int>{0, 1, 2});
    CHECK(g.mean_score == 7.5);
    CHECK(g.e_global == 5.5); // mean - 2
}

TEST_CASE("reduce: single perfect segment") {
    AbstractTrajectory a{"r", {seg("r", 1, 4, 10, "solve")}};
    GlobalEvaluation g = reduce(a);
    CHECK(g.completion_estimate == 1.0);
    CHECK(g.e_global == 10.0);
}

TEST_CASE("reduce: e_global clamps at the floor") {
    AbstractTrajectory a{"r", {seg("r", 1, 1, 2, "x"), seg("r", 2, 2, 2, "x"),
                               seg("r", 3, 3, 2, "x")}};
    GlobalEvaluation g = reduce(a);
    CHECK(g.loop_flag);
    CHECK(g.e_global == 1.0); // clamp(2 - 2, 1, 10)
}

TEST_CASE("reduce statistics are invariant to segment order") {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> q(1.0, 10.0);
    const char* intents[] = {"a", "b", "c", "loopy", "loopy", "loopy"};
    AbstractTrajectory a;
    a.task_id = "perm";
    int pos = 1;
    for (int i = 0; i < 6; ++i) {
        a.segments.push_back(seg("perm", pos, pos + 1, q(rng), intents[i]));
        pos += 2;
    }
    GlobalEvaluation base = reduce(a);
    AbstractTrajectory shuffled = a;
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(shuffled.segments.begin(), shuffled.segments.end(), rng);
        GlobalEvaluation g = reduce(shuffled);
        REQUIRE(g.mean_score == base.mean_score);
        REQUIRE(g.min_score == base.min_score);
        REQUIRE(g.max_score == base.max_score);
        REQUIRE(g.loop_flag == base.loop_flag);
        REQUIRE(g.completion_estimate == base.completion_estimate);
        REQUIRE(g.e_global == base.e_global);
    }
}

TEST_CASE("batched and unbatched mock runs agree on boundary-aligned fixtures") {
    // Window = block = oracle segment: every batch boundary is a user
    // boundary, so no segment straddles.
    std::mt19937_64 rng(9090);
    std::uniform_real_distribution<double> q(1.0, 10.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int blocks = 2 + static_cast<int>(rng() % 4);
        std::vector<Step> steps;
        std::vector<double> quality;
        int idx = 0;
        for (int b = 0; b < blocks; ++b) {
            steps.push_back(tg::step(idx++, Role::User, "goal " + std::to_string(b)));
            steps.push_back(tg::assistant_call(idx++, "bash"));
            steps.push_back(tg::tool_step(idx++, true));
            steps.push_back(tg::step(idx++, Role::Assistant, "wrap"));
        }
        for (int i = 0; i < idx; ++i) quality.push_back(std::round(q(rng) * 2) / 2);
        Trajectory t = tg::trajectory("align" + std::to_string(trial), std::move(steps));
        tg::annotate_quality(t, quality);

        MockJudge judge;
        auto batched = map_trajectory(t, partition(t, {4, 4}), judge);
        auto whole = map_trajectory(t, partition(t, {4 * blocks, 4 * blocks}), judge);
        REQUIRE(batched.segments.size() == whole.segments.size());
        for (std::size_t i = 0; i < batched.segments.size(); ++i) {
            REQUIRE(batched.segments[i].start == whole.segments[i].start);
            REQUIRE(batched.segments[i].end == whole.segments[i].end);
            REQUIRE(batched.segments[i].score == whole.segments[i].score);
            REQUIRE(batched.segments[i].intent == whole.segments[i].intent);
        }
    }
}

TEST_CASE("map_corpus: strict per-trajectory ordering under concurrency") {
    std::vector<Trajectory> corpus;
    for (int i = 0; i < 8; ++i)
        corpus.push_back(three_block_fixture("task-" + std::to_string(i)));
    MockJudge judge;
    auto results = map_corpus(corpus, {4, 4}, judge, FailurePolicy::Exclude, 4);
    REQUIRE(results.size() == corpus.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        REQUIRE(results[i].task_id == corpus[i].task_id); // input order
        REQUIRE(results[i].abstracted.has_value());
    }

    // per-task: batch indices strictly increase and memory chains hold
    std::map<std::string, std::vector<MockJudge::LoggedCall>> by_task;
    for (const auto& call : judge.log()) by_task[call.request.task_id].push_back(call);
    REQUIRE(by_task.size() == corpus.size());
    for (const auto& [task, calls] : by_task) {
        REQUIRE(calls.size() == 3);
        for (std::size_t k = 0; k < calls.size(); ++k) {
            REQUIRE(calls[k].request.batch_index == static_cast<int>(k) + 1);
            if (k == 0)
                REQUIRE(calls[k].request.memory_in.empty());
            else
                REQUIRE(calls[k].request.memory_in == calls[k - 1].response.memory_out);
        }
    }
}

TEST_CASE("map_corpus records exclusions without aborting the run") {
    std::vector<Trajectory> corpus = {three_block_fixture("a"),
                                      three_block_fixture("b")};
    BrokenJudge judge;
    auto results = map_corpus(corpus, {4, 4}, judge, FailurePolicy::Exclude, 2);
    REQUIRE(results.size() == 2);
    for (const auto& r : results) {
        REQUIRE_FALSE(r.abstracted.has_value());
        REQUIRE_FALSE(r.error.empty());
    }
}

TEST_CASE("judge-backed reduce keeps deterministic statistics") {
    AbstractTrajectory a{"jr", {seg("jr", 1, 2, 4, "x"), seg("jr", 3, 4, 8, "y")}};
    MockJudge judge;
    GlobalEvaluation g = reduce_with_judge(a, judge);
    CHECK(g.mean_score == 6.0);
    CHECK(g.min_score == 4.0);
    CHECK(g.max_score == 8.0);
    // mock scores the rendered segment list with default 5s
    CHECK(g.e_global == 5.0);
}
