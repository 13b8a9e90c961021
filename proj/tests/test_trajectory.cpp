#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "trajcurate/trajectory.hpp"

#include "support/generators.hpp"

using namespace trajcurate;
namespace tg = testgen;

namespace {

Trajectory must_parse(const std::string& line) {
    auto outcome = parse_trajectory_line(line, 1);
    REQUIRE(std::holds_alternative<Trajectory>(outcome));
    return std::get<Trajectory>(outcome);
}

SchemaError must_fail(const std::string& line) {
    auto outcome = parse_trajectory_line(line, 1);
    REQUIRE(std::holds_alternative<SchemaError>(outcome));
    return std::get<SchemaError>(outcome);
}

} // namespace

TEST_CASE("well-formed record round-trips with the right shape") {
    const std::string line = R"({"task_id":"demo","reward":1.0,"steps":[)"
                             R"({"index":0,"role":"user","content":"fix it"},)"
                             R"({"index":1,"role":"assistant","content":"ok",)"
                             R"("tool_calls":[{"name":"edit","arguments":"{}"}]},)"
                             R"({"index":2,"role":"tool","content":"",)"
                             R"("tool_result":{"status":"ok","output":"done"},"tokens":7}]})";
    Trajectory t = must_parse(line);
    CHECK(t.length() == 3);
    CHECK(t.task_id == "demo");
    CHECK(t.steps[1].tool_calls.size() == 1);
    CHECK(t.steps[2].tool_result->ok);
    CHECK(t.steps[2].tokens == 7);
    CHECK(t.steps[0].tokens_estimated());
}

TEST_CASE("reward out of range is a schema error naming the field") {
    const auto err = must_fail(
        R"({"task_id":"x","reward":1.3,"steps":[{"index":0,"role":"user","content":"a"}]})");
    CHECK(err.field == "reward");
}

TEST_CASE("non-JSON and wrong-typed lines are schema errors, not crashes") {
    CHECK(must_fail("not json at all").field.empty());
    CHECK(must_fail("[1,2,3]").reason == "record must be an object");
    CHECK(must_fail(R"({"task_id":1,"reward":0,"steps":[]})").field == "task_id");
    CHECK(must_fail(R"({"task_id":"x","reward":0,"steps":[]})").field == "steps");
    CHECK(must_fail(R"({"task_id":"x","reward":0,"bogus":1,"steps":[)"
                    R"({"index":0,"role":"user","content":"a"}]})")
              .field == "bogus");
}

TEST_CASE("tokens must be a non-negative integer") {
    const auto err = must_fail(
        R"({"task_id":"x","reward":0,"steps":[)"
        R"({"index":0,"role":"user","content":"a","tokens":-4}]})");
    CHECK(err.field == "steps[0].tokens");
}

TEST_CASE("corpus with malformed lines yields errors in order, valid elsewhere") {
    // 1000 lines, lines 400 and 777 malformed.
    std::ostringstream corpus;
    for (int i = 1; i <= 1000; ++i) {
        if (i == 400 || i == 777) {
            corpus << "{broken\n";
            continue;
        }
        Trajectory t = tg::trajectory(
            "task-" + std::to_string(i), {tg::step(0, Role::User, "go")}, 0.0);
        corpus << serialize_trajectory(t) << "\n";
    }
    std::istringstream in(corpus.str());
    TrajectoryReader reader(in);
    std::size_t ok = 0;
    std::vector<std::size_t> error_lines;
    std::vector<std::string> ids;
    while (auto outcome = reader.next()) {
        if (const auto* err = std::get_if<SchemaError>(&*outcome))
            error_lines.push_back(err->line);
        else {
            ++ok;
            ids.push_back(std::get<Trajectory>(*outcome).task_id);
        }
    }
    CHECK(ok == 998);
    CHECK(error_lines == std::vector<std::size_t>{400, 777});
    CHECK(ids.front() == "task-1");
    CHECK(ids.back() == "task-1000");
    // Order preserved: task numbers strictly increase.
    for (std::size_t i = 1; i < ids.size(); ++i)
        REQUIRE(std::stoi(ids[i - 1].substr(5)) < std::stoi(ids[i].substr(5)));
}

TEST_CASE("empty input is an empty sequence") {
    std::istringstream in("");
    TrajectoryReader reader(in);
    CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("validate flags tool_result on an assistant step") {
    Trajectory t = tg::trajectory("v", {tg::step(0, Role::User, "q"),
                                        tg::step(1, Role::Assistant, "a")});
    t.steps[1].tool_result = ToolResult{true, "oops"};
    auto vs = validate(t);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0].invariant == "tool_result_presence");
    CHECK(vs[0].step_index == 1);
}

TEST_CASE("dangling tool_calls on the final step is allowed (truncated run)") {
    Trajectory t = tg::trajectory(
        "v", {tg::step(0, Role::User, "q"), tg::assistant_call(1, "edit")});
    CHECK(validate(t).empty());
}

TEST_CASE("pending tool call before a user step is a violation") {
    Trajectory t = tg::trajectory("v", {tg::step(0, Role::User, "q"),
                                        tg::assistant_call(1, "edit"),
                                        tg::step(2, Role::User, "hello?"),
                                        tg::step(3, Role::Assistant, "hi")});
    auto vs = validate(t);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0].invariant == "pending_tool_call");
    CHECK(vs[0].step_index == 1);
}

TEST_CASE("broken index contiguity is one violation") {
    Trajectory t = tg::trajectory("v", {tg::step(0, Role::User, "a"),
                                        tg::step(1, Role::Assistant, "b"),
                                        tg::step(3, Role::Assistant, "c")});
    auto vs = validate(t);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0].invariant == "index_contiguity");
    CHECK(vs[0].step_index == 2);
}

TEST_CASE("parse-serialize-parse is the identity on valid records") {
    std::mt19937_64 rng(20240811);
    for (int i = 0; i < 200; ++i) {
        Trajectory t = tg::random_valid_trajectory(rng);
        REQUIRE(validate(t).empty());
        auto once = parse_trajectory_line(serialize_trajectory(t), 1);
        REQUIRE(std::holds_alternative<Trajectory>(once));
        const Trajectory& t2 = std::get<Trajectory>(once);
        CHECK(t2 == t);
        auto twice = parse_trajectory_line(serialize_trajectory(t2), 1);
        REQUIRE(std::holds_alternative<Trajectory>(twice));
        CHECK(std::get<Trajectory>(twice) == t);
    }
}

TEST_CASE("validate is total over arbitrary well-typed trajectories") {
    std::mt19937_64 rng(999);
    for (int i = 0; i < 500; ++i) {
        Trajectory t = tg::random_role_soup(rng);
        CHECK_NOTHROW(validate(t));
    }
}

TEST_CASE("token estimate is ceil(len/4) and flagged") {
    Step s = tg::step(0, Role::User, "abcdefghi"); // 9 chars -> ceil(9/4) = 3
    CHECK(s.token_count() == 3);
    CHECK(s.tokens_estimated());
    s.tokens = 11;
    CHECK(s.token_count() == 11);
    CHECK_FALSE(s.tokens_estimated());
}
