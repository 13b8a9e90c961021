// trajcurate: coarse-to-fine curation of agent trajectories into an SFT
// dataset. Subcommands cover each stage (extract, fit, screen, partition,
// judge, curate, report) so runs compose through files.
//
// Exit codes: 0 clean, 1 completed with per-line errors, 2 fatal.

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trajcurate/config.hpp"
#include "trajcurate/curate.hpp"
#include "trajcurate/features.hpp"
#include "trajcurate/judge.hpp"
#include "trajcurate/judge_remote.hpp"
#include "trajcurate/logreg.hpp"
#include "trajcurate/mapreduce.hpp"
#include "trajcurate/partition.hpp"
#include "trajcurate/screening.hpp"
#include "trajcurate/trajectory.hpp"

namespace tc = trajcurate;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kFatal = 2;

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw tc::IoFailure("cannot open input file: " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw tc::IoFailure("cannot open output file: " + path);
    return out;
}

struct CorpusStats {
    std::size_t ok = 0;
    std::size_t bad = 0;
};

// Stream a trajectory file; parse errors go to stderr. With strict=true
// the first bad line aborts.
template <typename Fn>
CorpusStats for_each_trajectory(const std::string& path, bool strict, Fn&& fn) {
    auto in = open_input(path);
    tc::TrajectoryReader reader(in);
    CorpusStats stats;
    while (auto outcome = reader.next()) {
        if (const auto* err = std::get_if<tc::SchemaError>(&*outcome)) {
            ++stats.bad;
            std::cerr << "line " << err->line << ": schema error";
            if (!err->field.empty()) std::cerr << " at " << err->field;
            std::cerr << ": " << err->reason << "\n";
            if (strict) throw tc::Error("aborting on schema error (--strict)");
            continue;
        }
        ++stats.ok;
        fn(std::get<tc::Trajectory>(*outcome));
    }
    return stats;
}

std::vector<tc::Trajectory> read_corpus(const std::string& path, bool strict,
                                        CorpusStats& stats) {
    std::vector<tc::Trajectory> out;
    stats = for_each_trajectory(path, strict,
                                [&](tc::Trajectory t) { out.push_back(std::move(t)); });
    return out;
}

// Corpus runs work in bounded windows so memory stays flat on large
// inputs; record/segment order still follows input order.
constexpr std::size_t kWindow = 64;

template <typename Fn>
CorpusStats for_each_window(const std::string& path, bool strict, Fn&& fn) {
    std::vector<tc::Trajectory> window;
    window.reserve(kWindow);
    auto stats = for_each_trajectory(path, strict, [&](tc::Trajectory t) {
        window.push_back(std::move(t));
        if (window.size() == kWindow) {
            fn(window);
            window.clear();
        }
    });
    if (!window.empty()) fn(window);
    return stats;
}

tc::ScreeningModel load_model(const std::string& path) {
    auto in = open_input(path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw tc::ConfigError("model file is not valid JSON: " + path);
    return tc::ScreeningModel::from_json(j);
}

std::unique_ptr<tc::Judge> make_judge(const tc::PipelineConfig& cfg) {
    if (cfg.judge.mode == "remote") {
        auto judge = std::make_unique<tc::RemoteJudge>(cfg.judge.remote);
        if (!judge->probe())
            throw tc::JudgeUnavailable("judge endpoint unreachable: " +
                                       cfg.judge.remote.base_url);
        return judge;
    }
    return std::make_unique<tc::MockJudge>(cfg.judge.remote.memory_cap);
}

std::string judge_identifier(const tc::PipelineConfig& cfg) {
    return cfg.judge.mode == "remote" ? "remote:" + cfg.judge.remote.model : "mock";
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

int cmd_extract(const tc::PipelineConfig& cfg, const std::string& in_path,
                const std::string& out_path, bool strict) {
    tc::FeatureRegistry registry(cfg.features);
    const auto names = registry.names();
    auto out = open_output(out_path);
    auto stats = for_each_trajectory(in_path, strict, [&](const tc::Trajectory& t) {
        auto values = registry.extract_named(t, names);
        ordered_json j;
        j["task_id"] = t.task_id;
        j["label"] = tc::label(t.reward);
        ordered_json fs = ordered_json::object();
        for (std::size_t i = 0; i < names.size(); ++i) fs[names[i]] = values[i];
        j["features"] = fs;
        out << j.dump() << '\n';
    });
    std::cerr << "extracted " << stats.ok << " records, " << stats.bad << " bad lines\n";
    return stats.bad ? kPartial : kOk;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FeatureFile {
    std::vector<std::string> names;
    std::vector<tc::LabeledSample> samples;
};

FeatureFile read_feature_file(const std::string& path) {
    auto in = open_input(path);
    FeatureFile ff;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json j = ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("features") ||
            !j.contains("label"))
            throw tc::ConfigError("feature file line " + std::to_string(lineno) +
                                  " is not a feature record");
        if (ff.names.empty())
            for (auto it = j["features"].begin(); it != j["features"].end(); ++it)
                ff.names.push_back(it.key());
        tc::LabeledSample s;
        s.label = j["label"].get<int>();
        for (const auto& name : ff.names) {
            if (!j["features"].contains(name))
                throw tc::FeatureMismatch("feature file line " + std::to_string(lineno) +
                                          " is missing feature " + name);
            s.features.push_back(j["features"][name].get<double>());
        }
        ff.samples.push_back(std::move(s));
    }
    return ff;
}

int cmd_fit(const tc::PipelineConfig& cfg, const std::string& in_path,
            const std::string& model_out, const std::string& theta_out) {
    FeatureFile ff = read_feature_file(in_path);
    tc::ScreeningModel model = tc::fit(ff.samples, ff.names, cfg.fit);
    {
        auto out = open_output(model_out);
        out << model.to_json().dump(2) << '\n';
    }
    const auto& rep = model.fit_report;
    std::cerr << "fit " << ff.samples.size() << " samples; holdout accuracy "
              << rep.accuracy << ", f1 " << rep.f1 << "\n";
    for (std::size_t i = 0; i < model.feature_names.size(); ++i)
        std::cerr << "  " << model.feature_names[i] << ": w=" << model.weights[i]
                  << " corr=" << rep.correlation[i]
                  << (rep.degenerate[i] ? " (degenerate)" : "") << "\n";
    if (!theta_out.empty()) {
        tc::ScoringConfig updated = tc::weights_to_theta(model, cfg.scoring);
        ordered_json fns = ordered_json::array();
        for (const tc::ScoringFunction& f : updated.functions)
            fns.push_back(tc::detail::scoring_function_to_json(f));
        auto out = open_output(theta_out);
        out << ordered_json{{"functions", fns}}.dump(2) << '\n';
        std::cerr << "scoring parameters updated from fitted weights -> " << theta_out
                  << "\n";
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// screen
// ---------------------------------------------------------------------------

int cmd_screen(const tc::PipelineConfig& cfg, const std::string& in_path,
               const std::string& model_path, const std::string& out_path,
               const std::string& decisions_path, bool strict) {
    tc::ScreeningModel model = load_model(model_path);
    tc::FeatureRegistry registry(cfg.features);
    auto out = open_output(out_path);
    std::ofstream decisions;
    if (!decisions_path.empty()) decisions = open_output(decisions_path);

    std::size_t kept = 0, dropped = 0, errors = 0;
    auto stats = for_each_trajectory(in_path, strict, [&](const tc::Trajectory& t) {
        tc::ScreenDecision d = tc::screen_one(t, model, cfg.tau_global, registry);
        if (decisions.is_open()) decisions << tc::decision_to_json(d).dump() << '\n';
        if (d.error) {
            ++errors;
            std::cerr << t.task_id << ": screening error: " << *d.error << "\n";
        } else if (d.kept) {
            ++kept;
            out << tc::serialize_trajectory(t) << '\n';
        } else {
            ++dropped;
        }
    });
    std::cerr << "screened: kept " << kept << ", dropped " << dropped << ", errors "
              << errors << ", bad lines " << stats.bad << "\n";
    return (stats.bad || errors) ? kPartial : kOk;
}

// ---------------------------------------------------------------------------
// partition
// ---------------------------------------------------------------------------

int cmd_partition(const tc::PipelineConfig& cfg, const std::string& in_path,
                  const std::string& out_path, bool strict) {
    auto out = open_output(out_path);
    auto stats = for_each_trajectory(in_path, strict, [&](const tc::Trajectory& t) {
        auto batches = tc::partition(t, cfg.partition);
        ordered_json j;
        j["task_id"] = t.task_id;
        std::vector<int> bounds;
        std::vector<bool> forced;
        for (const tc::Batch& b : batches) {
            bounds.push_back(b.end);
            forced.push_back(b.forced);
        }
        j["boundaries"] = bounds;
        j["forced"] = forced;
        out << j.dump() << '\n';
    });
    return stats.bad ? kPartial : kOk;
}

// ---------------------------------------------------------------------------
// judge
// ---------------------------------------------------------------------------

int cmd_judge(const tc::PipelineConfig& cfg, const std::string& in_path,
              const std::string& out_path, bool strict) {
    auto judge = make_judge(cfg);
    auto out = open_output(out_path);
    std::size_t judged = 0, excluded = 0;
    auto stats = for_each_window(in_path, strict, [&](const std::vector<tc::Trajectory>& ts) {
        auto results = tc::map_corpus(ts, cfg.partition, *judge, cfg.judge.failure_policy,
                                      cfg.judge.remote.concurrency);
        for (const tc::MapResult& r : results) {
            if (!r.abstracted) {
                ++excluded;
                std::cerr << r.task_id << ": excluded: " << r.error << "\n";
                continue;
            }
            ++judged;
            for (const tc::Segment& s : r.abstracted->segments)
                out << tc::segment_to_json(s).dump() << '\n';
            tc::GlobalEvaluation g = *r.global;
            if (cfg.judge.reduce_mode == "judge")
                g = tc::reduce_with_judge(*r.abstracted, *judge);
            out << tc::global_to_json(r.task_id, g).dump() << '\n';
        }
    });
    std::cerr << "judged " << judged << " trajectories, excluded " << excluded
              << ", bad lines " << stats.bad << "\n";
    return (stats.bad || excluded) ? kPartial : kOk;
}

// ---------------------------------------------------------------------------
// curate
// ---------------------------------------------------------------------------

int curate_full(const tc::PipelineConfig& cfg, const std::string& in_path,
                const std::string& model_path, const std::string& out_path,
                const std::string& report_path, bool strict) {
    tc::ScreeningModel model = load_model(model_path);
    tc::FeatureRegistry registry(cfg.features);
    auto judge = make_judge(cfg);

    auto out = open_output(out_path);
    tc::DatasetWriter writer(out);
    tc::CurationReport report;
    auto stats = for_each_window(in_path, strict, [&](const std::vector<tc::Trajectory>& ts) {
        tc::CurateResult part =
            tc::curate(ts, model, *judge, cfg.curation(), cfg.partition, registry,
                       cfg.judge.remote.concurrency, model_path);
        for (const tc::CurationRecord& r : part.records) writer.write(r);
        tc::merge_into(report, part.report);
    });
    report.input += stats.bad;
    for (std::size_t i = 0; i < stats.bad; ++i)
        report.errors.push_back({"", "parse", "schema error (see diagnostics)"});

    if (!report_path.empty()) {
        auto rep_out = open_output(report_path);
        rep_out << tc::report_to_json(report).dump(2) << '\n';
    }
    std::cerr << "curated " << writer.count() << " records from " << report.input
              << " trajectories (kept " << report.screen_kept << ", excluded "
              << report.judged_excluded << ")\n";
    return (stats.bad || report.judged_excluded || report.screen_errors) ? kPartial
                                                                         : kOk;
}

// Assemble records from a precomputed segment dump (the staged pipeline:
// screen and judge already ran; this applies the segment threshold and
// slices messages).
int curate_from_segments(const tc::PipelineConfig& cfg, const std::string& in_path,
                         const std::string& segments_path, const std::string& model_path,
                         const std::string& out_path, const std::string& report_path,
                         bool strict) {
    CorpusStats stats;
    std::vector<tc::Trajectory> ts = read_corpus(in_path, strict, stats);
    std::map<std::string, const tc::Trajectory*> by_task;
    for (const tc::Trajectory& t : ts) by_task[t.task_id] = &t;

    std::map<std::string, tc::AbstractTrajectory> abstracts;
    std::map<std::string, tc::GlobalEvaluation> globals;
    std::vector<std::string> task_order;
    {
        auto in = open_input(segments_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("type"))
                throw tc::ConfigError("segment dump line " + std::to_string(lineno) +
                                      " is not a segment record");
            const std::string type = j["type"].get<std::string>();
            if (type == "segment") {
                tc::Segment s = tc::segment_from_json(j);
                auto [it, fresh] = abstracts.try_emplace(s.task_id);
                if (fresh) {
                    it->second.task_id = s.task_id;
                    task_order.push_back(s.task_id);
                }
                it->second.segments.push_back(std::move(s));
            } else if (type == "global") {
                tc::GlobalEvaluation g;
                g.mean_score = j.value("mean_score", 0.0);
                g.min_score = j.value("min_score", 0.0);
                g.max_score = j.value("max_score", 0.0);
                g.loop_flag = j.value("loop_flag", false);
                g.completion_estimate = j.value("completion_estimate", 0.0);
                g.e_global = j.value("e_global", 0.0);
                globals[j["task_id"].get<std::string>()] = g;
            }
        }
    }

    tc::Provenance prov;
    prov.judge_id = judge_identifier(cfg);
    prov.model_id = model_path;
    prov.tau_global = cfg.tau_global;
    prov.tau_seg = cfg.tau_seg;

    tc::CurationReport report;
    report.input = ts.size() + stats.bad;
    report.screen_kept = task_order.size();
    report.screen_dropped = ts.size() - std::min(ts.size(), task_order.size());
    const tc::CurationConfig ccfg = cfg.curation();

    auto out = open_output(out_path);
    tc::DatasetWriter writer(out);
    for (const std::string& task : task_order) {
        auto t_it = by_task.find(task);
        if (t_it == by_task.end()) {
            report.errors.push_back({task, "curate", "segments refer to a task_id "
                                                     "missing from the corpus"});
            continue;
        }
        const tc::AbstractTrajectory& abs = abstracts[task];
        ++report.judged_ok;
        report.segments_total += abs.segments.size();
        for (const tc::Segment& s : abs.segments)
            ++report.score_histogram[tc::score_bucket(s.score)];
        if (auto g = globals.find(task); g != globals.end())
            ++report.e_global_histogram[tc::score_bucket(g->second.e_global)];
        for (const tc::CurationRecord& r :
             tc::records_from_abstract(*t_it->second, abs, ccfg, prov))
            writer.write(r);
    }
    report.records_emitted = writer.count();
    if (!report_path.empty()) {
        auto rep_out = open_output(report_path);
        rep_out << tc::report_to_json(report).dump(2) << '\n';
    }
    std::cerr << "assembled " << writer.count() << " records from segment dump\n";
    return (stats.bad || !report.errors.empty()) ? kPartial : kOk;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const std::string& in_path, const std::string& out_path) {
    std::size_t segments = 0, trajectories = 0, loops = 0;
    std::array<std::size_t, 10> score_hist{};
    std::array<std::size_t, 10> e_hist{};
    double e_sum = 0.0, q_sum = 0.0;
    {
        auto in = open_input(in_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) continue;
            const std::string type = j.value("type", "");
            if (type == "segment") {
                ++segments;
                const double q = j.value("score", 0.0);
                q_sum += q;
                ++score_hist[tc::score_bucket(q)];
            } else if (type == "global") {
                ++trajectories;
                const double e = j.value("e_global", 0.0);
                e_sum += e;
                ++e_hist[tc::score_bucket(e)];
                if (j.value("loop_flag", false)) ++loops;
            }
        }
    }
    std::ostringstream text;
    text << "segments: " << segments;
    if (segments) text << " (mean score " << q_sum / static_cast<double>(segments) << ")";
    text << "\ntrajectories: " << trajectories;
    if (trajectories) {
        text << " (mean e_global " << e_sum / static_cast<double>(trajectories)
             << ", loops flagged " << loops << ")";
    }
    text << "\n";
    auto bar = [](std::size_t n) { return std::string(std::min<std::size_t>(n, 60), '#'); };
    text << "segment score histogram [1,10]:\n";
    for (int b = 0; b < 10; ++b) {
        const double lo = 1.0 + 0.9 * b;
        char label[32];
        std::snprintf(label, sizeof(label), "  [%4.1f,%4.1f%c ", lo, lo + 0.9,
                      b == 9 ? ']' : ')');
        text << label << bar(score_hist[b]) << " " << score_hist[b] << "\n";
    }
    text << "e_global histogram [1,10]:\n";
    for (int b = 0; b < 10; ++b) {
        const double lo = 1.0 + 0.9 * b;
        char label[32];
        std::snprintf(label, sizeof(label), "  [%4.1f,%4.1f%c ", lo, lo + 0.9,
                      b == 9 ? ']' : ')');
        text << label << bar(e_hist[b]) << " " << e_hist[b] << "\n";
    }
    if (out_path.empty() || out_path == "-") {
        std::cout << text.str();
    } else {
        auto out = open_output(out_path);
        out << text.str();
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coarse-to-fine curation of agent trajectories"};
    app.require_subcommand(1);

    std::string config_path;
    bool strict = false;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "pipeline config file (JSON)");
    app.add_flag("--strict", strict, "abort on the first malformed input line");
    app.add_option("--seed", seed, "override the fit seed");

    std::string in_path, out_path, model_path, decisions_path, segments_path,
        report_path, theta_out;
    std::optional<double> tau_global, tau_seg;
    std::optional<double> lr_opt, l2_opt, tol_opt;
    std::optional<std::size_t> epochs_opt;
    std::optional<int> lmin_opt, lmax_opt;
    std::string emit_mode_opt;

    // Paths default from the config's io section; flags win.
    auto* extract = app.add_subcommand("extract", "trajectories -> feature records");
    extract->add_option("--in", in_path, "trajectory corpus (JSONL)");
    extract->add_option("--out", out_path, "feature records out (JSONL)");

    auto* fit = app.add_subcommand("fit", "feature records -> screening model");
    fit->add_option("--in", in_path, "feature records (JSONL)");
    fit->add_option("--model", model_path, "model file out (JSON)");
    fit->add_option("--theta-out", theta_out, "write scoring config updated from weights");
    fit->add_option("--lr", lr_opt, "learning rate");
    fit->add_option("--epochs", epochs_opt, "max epochs");
    fit->add_option("--l2", l2_opt, "L2 strength");
    fit->add_option("--tol", tol_opt, "convergence tolerance");

    auto* screen = app.add_subcommand("screen", "macro pre-screening filter");
    screen->add_option("--in", in_path, "trajectory corpus (JSONL)");
    screen->add_option("--model", model_path, "screening model file");
    screen->add_option("--out", out_path, "kept trajectories out (JSONL)");
    screen->add_option("--decisions", decisions_path, "decision report out (JSONL)");
    screen->add_option("--tau", tau_global, "probability threshold");

    auto* part = app.add_subcommand("partition", "safe-split window dump");
    part->add_option("--in", in_path, "trajectory corpus (JSONL)");
    part->add_option("--out", out_path, "window dump out (JSONL)");
    part->add_option("--l-min", lmin_opt, "minimum window size");
    part->add_option("--l-max", lmax_opt, "maximum window size");

    auto* judge = app.add_subcommand("judge", "map-reduce segment scoring");
    judge->add_option("--in", in_path, "kept trajectories (JSONL)");
    judge->add_option("--out", out_path, "segment dump out (JSONL)");

    auto* curate = app.add_subcommand("curate", "end-to-end curation");
    curate->add_option("--in", in_path, "trajectory corpus (JSONL)");
    curate->add_option("--model", model_path, "screening model file");
    curate->add_option("--out", out_path, "dataset out (JSONL)");
    curate->add_option("--segments", segments_path,
                       "assemble from an existing segment dump instead of judging");
    curate->add_option("--report", report_path, "run report out (JSON)");
    curate->add_option("--tau", tau_global, "screening threshold");
    curate->add_option("--tau-seg", tau_seg, "segment score threshold");
    curate->add_option("--emit-mode", emit_mode_opt, "segments|full_trajectory|both");

    auto* report = app.add_subcommand("report", "render histograms from a segment dump");
    report->add_option("--in", in_path, "segment dump (JSONL)");
    report->add_option("--out", report_path, "write the summary here instead of stdout");

    // let the global flags appear after the subcommand name too
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        tc::PipelineConfig cfg;
        if (!config_path.empty()) cfg = tc::load_config_file(config_path);
        if (seed) cfg.fit.seed = *seed;
        if (tau_global) cfg.tau_global = *tau_global;
        if (tau_seg) cfg.tau_seg = *tau_seg;
        if (lr_opt) cfg.fit.learning_rate = *lr_opt;
        if (epochs_opt) cfg.fit.epochs = *epochs_opt;
        if (l2_opt) cfg.fit.l2_lambda = *l2_opt;
        if (tol_opt) cfg.fit.convergence_tol = *tol_opt;
        if (lmin_opt) cfg.partition.l_min = *lmin_opt;
        if (lmax_opt) cfg.partition.l_max = *lmax_opt;
        if (!emit_mode_opt.empty()) {
            auto m = tc::emit_mode_from_name(emit_mode_opt);
            if (!m) throw tc::ConfigError("invalid --emit-mode: " + emit_mode_opt);
            cfg.emit_mode = *m;
        }
        cfg.check();

        if (in_path.empty()) in_path = cfg.io.input;
        if (out_path.empty()) out_path = cfg.io.output;
        if (model_path.empty()) model_path = cfg.io.model;
        if (decisions_path.empty()) decisions_path = cfg.io.decisions;
        if (segments_path.empty()) segments_path = cfg.io.segments;
        if (report_path.empty()) report_path = cfg.io.report;
        auto need = [](const std::string& value, const char* flag) {
            if (value.empty())
                throw tc::ConfigError(std::string(flag) +
                                      " is required (flag or config io section)");
        };
        need(in_path, "--in");
        if (extract->parsed() || screen->parsed() || part->parsed() || judge->parsed() ||
            curate->parsed())
            need(out_path, "--out");
        if (fit->parsed() || screen->parsed() || curate->parsed())
            need(model_path, "--model");

        if (extract->parsed()) return cmd_extract(cfg, in_path, out_path, strict);
        if (fit->parsed()) return cmd_fit(cfg, in_path, model_path, theta_out);
        if (screen->parsed())
            return cmd_screen(cfg, in_path, model_path, out_path, decisions_path, strict);
        if (part->parsed()) return cmd_partition(cfg, in_path, out_path, strict);
        if (judge->parsed()) return cmd_judge(cfg, in_path, out_path, strict);
        if (curate->parsed()) {
            if (!segments_path.empty())
                return curate_from_segments(cfg, in_path, segments_path, model_path,
                                            out_path, report_path, strict);
            return curate_full(cfg, in_path, model_path, out_path, report_path, strict);
        }
        if (report->parsed()) return cmd_report(in_path, report_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFatal;
    }
    return kFatal;
}
