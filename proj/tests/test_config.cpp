#include <catch2/catch_amalgamated.hpp>

#include "trajcurate/config.hpp"

using namespace trajcurate;

TEST_CASE("defaults pass validation and round-trip") {
    PipelineConfig cfg;
    cfg.check();
    PipelineConfig back = config_from_json(nlohmann::json::parse(config_to_json(cfg).dump()));
    CHECK(back == cfg);
}

TEST_CASE("a fully populated config round-trips") {
    PipelineConfig cfg;
    cfg.features.file_op_tools = {"write_file", "apply_patch"};
    cfg.features.early_window = 3;
    cfg.scoring.functions.push_back(CapFunction{"lines_changed", 0.25, 10.0});
    cfg.scoring.functions.push_back(RatioFunction{"file_ops", "tool_calls", 5.0});
    cfg.scoring.functions.push_back(
        DecayFunction{"total_tokens", 100.0, 4000.0, 0.001, 10.0, 1.0});
    cfg.fit.learning_rate = 0.05;
    cfg.fit.epochs = 250;
    cfg.fit.l2_lambda = 0.5;
    cfg.fit.seed = 7;
    cfg.tau_global = 0.65;
    cfg.partition = {4, 16};
    cfg.judge.mode = "remote";
    cfg.judge.remote.base_url = "http://judge.internal:8080";
    cfg.judge.remote.model = "judge-large";
    cfg.judge.remote.concurrency = 8;
    cfg.judge.failure_policy = FailurePolicy::Degrade;
    cfg.judge.reduce_mode = "judge";
    cfg.tau_seg = 7.5;
    cfg.emit_mode = EmitMode::Both;
    cfg.io.input = "in.jsonl";
    cfg.io.output = "out.jsonl";
    cfg.check();
    PipelineConfig back = config_from_json(nlohmann::json::parse(config_to_json(cfg).dump()));
    CHECK(back == cfg);
}

TEST_CASE("unknown keys are rejected at every level") {
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"bogus":{}})")),
                    ConfigError);
    CHECK_THROWS_AS(
        config_from_json(nlohmann::json::parse(R"({"screen":{"tau":0.5}})")),
        ConfigError);
    CHECK_THROWS_AS(
        config_from_json(nlohmann::json::parse(R"({"partition":{"lmin":2}})")),
        ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(
                        R"({"scoring":{"functions":[{"family":"cap","feature":"x","slope":1}]}})")),
                    ConfigError);
}

TEST_CASE("invalid values are rejected") {
    CHECK_THROWS_AS(
        config_from_json(nlohmann::json::parse(R"({"screen":{"tau_global":1.5}})")),
        ConfigError);
    CHECK_THROWS_AS(
        config_from_json(nlohmann::json::parse(R"({"curate":{"tau_seg":0.5}})")),
        ConfigError);
    CHECK_THROWS_AS(
        config_from_json(nlohmann::json::parse(R"({"partition":{"l_min":5,"l_max":2}})")),
        ConfigError);
    CHECK_THROWS_AS(
        config_from_json(nlohmann::json::parse(R"({"judge":{"mode":"psychic"}})")),
        ConfigError);
    CHECK_THROWS_AS(
        config_from_json(nlohmann::json::parse(R"({"judge":{"failure_policy":"shrug"}})")),
        ConfigError);
    CHECK_THROWS_AS(
        config_from_json(nlohmann::json::parse(R"({"curate":{"emit_mode":"everything"}})")),
        ConfigError);
    CHECK_THROWS_AS(
        config_from_json(nlohmann::json::parse(R"({"fit":{"learning_rate":0}})")),
        ConfigError);
}

TEST_CASE("partial configs inherit defaults") {
    PipelineConfig cfg =
        config_from_json(nlohmann::json::parse(R"({"screen":{"tau_global":0.7}})"));
    CHECK(cfg.tau_global == 0.7);
    CHECK(cfg.tau_seg == 6.0);
    CHECK(cfg.partition.l_min == 8);
    CHECK(cfg.partition.l_max == 40);
    CHECK(cfg.judge.mode == "mock");
    CHECK(cfg.fit.learning_rate == 0.1);
    CHECK(cfg.features.file_op_tools.count("str_replace") == 1);
}
