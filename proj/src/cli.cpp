/*
 Copyright 2026 The annofix Authors.
 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "annofix/cli.hpp"

#include "annofix/anomaly.hpp"
#include "annofix/config.hpp"
#include "annofix/error.hpp"
#include "annofix/evaluation.hpp"
#include "annofix/interchange.hpp"
#include "annofix/io.hpp"
#include "annofix/json_format.hpp"
#include "annofix/pseudolabel.hpp"
#include "annofix/trace_metrics.hpp"

#include <CLI11.hpp>

#include <functional>
#include <ostream>
#include <thread>

namespace annofix {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// An error tied to the file it came from.
class FileError : public std::runtime_error {
public:
    FileError(const fs::path& path, json detail, int exit_code)
        : std::runtime_error(detail.value("message", std::string("error"))),
          path_(path.string()),
          detail_(std::move(detail)),
          exit_code_(exit_code)
    {
    }
    json to_json() const
    {
        json j = detail_;
        j["path"] = path_;
        return j;
    }
    int exit_code() const noexcept { return exit_code_; }

private:
    std::string path_;
    json detail_;
    int exit_code_;
};

json record_errors(const std::vector<RecordError>& errors)
{
    json arr = json::array();
    for (const RecordError& e : errors) {
        json j = {{"message", e.message}};
        if (e.line > 0) {
            j["line"] = e.line;
        }
        if (!e.record.empty()) {
            j["record"] = e.record;
        }
        if (!e.field.empty()) {
            j["field"] = e.field;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

/// Reads and strictly parses one file; schema problems are rethrown with the path attached.
template <typename Parse>
auto load(const fs::path& path, Parse&& parse)
{
    const std::string text = read_file(path);
    try {
        return std::move(parse(text)).value();
    } catch (const ValidationError& e) {
        throw FileError(path, {{"kind", "validation"}, {"message", e.what()}, {"records", record_errors(e.errors())}},
                        3);
    } catch (const ParseError& e) {
        json j = {{"kind", "parse"}, {"message", e.what()}, {"offset", e.offset()}};
        if (e.line() > 0) {
            j["line"] = e.line();
        }
        throw FileError(path, std::move(j), 3);
    }
}

CocoDocument load_coco(const fs::path& path)
{
    auto docs = load(path, [](std::string_view t) { return parse_coco(t); });
    return std::move(docs.front());
}

void emit(const fs::path& path, const std::string& contents, std::ostream& out)
{
    write_file(path, contents);
    out << "wrote " << path.generic_string() << '\n';
}

struct Context {
    fs::path config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::optional<double> flag_fraction;
    std::optional<int> k;
    std::optional<int> epochs;
    std::optional<double> step;
    std::string ladder;
    std::string truth = "annotations";

    RunConfig resolve() const
    {
        RunConfig c = load_config(config_path);
        if (seed) {
            c.autoencoder.seed = *seed;
        }
        if (jobs) {
            c.jobs = *jobs;
        }
        if (flag_fraction) {
            c.flag_fraction = *flag_fraction;
        }
        if (k) {
            c.autoencoder.k = *k;
        }
        if (epochs) {
            c.autoencoder.epochs = *epochs;
        }
        if (step) {
            c.autoencoder.step = *step;
        }
        if (!ladder.empty()) {
            try {
                c.pipeline.ladder = LadderConfig::named(ladder);
            } catch (const DomainError& e) {
                throw InputError(e.what());
            }
        }
        if (c.jobs == 0) {
            c.jobs = std::max(1u, std::thread::hardware_concurrency());
        }
        c.pipeline.jobs = c.jobs;
        c.validate();
        return c;
    }
};

void cmd_traces_normalize(const RunConfig& c, std::ostream& out)
{
    const auto samples = load(c.paths.at("traces"), [](std::string_view t) { return parse_traces(t); });
    if (samples.empty()) {
        throw InputError("traces file holds no samples", c.paths.at("traces").string());
    }
    const auto rows = prepare_traces(samples, {c.aggregation});
    const NormalizationStats stats = fit_normalization(rows, c.normalization);
    std::vector<json> features;
    features.reserve(rows.size());
    for (const FeatureVector& row : rows) {
        features.push_back(to_json(assemble_features(row, stats, c.weights)));
    }
    emit(c.paths.at("features"), write_ndjson(features), out);
    emit(c.paths.at("normstats"), dump_document(to_json(stats)), out);
}

void cmd_anomaly_train(const RunConfig& c, std::ostream& out)
{
    const auto features = load(c.paths.at("features"), [](std::string_view t) { return parse_features(t); });
    const LinearAutoencoder model = train(features, c.autoencoder);
    out << "trained k=" << model.k() << " epochs=" << c.autoencoder.epochs
        << " final mean error=" << stable(model.loss_history().back()) << '\n';
    emit(c.paths.at("model"), dump_document(to_json(model)), out);
}

LinearAutoencoder load_model(const fs::path& path)
{
    const std::string text = read_file(path);
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        throw FileError(path, {{"kind", "parse"}, {"message", "malformed model JSON"}}, 3);
    }
    try {
        return model_from_json(doc);
    } catch (const Error& e) {
        throw FileError(path, {{"kind", e.kind()}, {"message", e.what()}}, 3);
    }
}

void cmd_anomaly_score(const RunConfig& c, std::ostream& out)
{
    const LinearAutoencoder model = load_model(c.paths.at("model"));
    const auto features = load(c.paths.at("features"), [](std::string_view t) { return parse_features(t); });
    if (features.empty()) {
        throw InputError("features file holds no vectors", c.paths.at("features").string());
    }
    const auto scores = flag_top_fraction(score_all(model, features), c.flag_fraction);
    emit(c.paths.at("scores"), write_records(scores), out);
}

void cmd_anomaly_eval(const RunConfig& c, std::ostream& out)
{
    const auto scores = load(c.paths.at("scores"), [](std::string_view t) { return parse_scores(t); });
    const auto oracle = load(c.paths.at("oracle"), [](std::string_view t) { return parse_oracle(t); });
    const FixedMetrics fixed = evaluate_fixed(scores, oracle);
    const CurveReport curves = evaluate_curves(scores, oracle);
    json report = {{"flag_fraction", c.flag_fraction}, {"fixed", to_json(fixed)}, {"curves", to_json(curves)}};
    out << "accuracy=" << stable(fixed.accuracy) << " f1=" << stable(fixed.f1) << " auroc=" << stable(curves.auroc)
        << " prauc=" << stable(curves.prauc) << '\n';
    emit(c.paths.at("eval_report"), dump_document(report), out);
}

struct PseudoInputs {
    CocoDocument original;
    std::set<ImageId> flagged;
    std::vector<Detection> detections;
    std::vector<ClassifierVerdict> verdicts;
    std::vector<ActivationGrid> grids;

    PipelineInputs view() const { return {&original, flagged, detections, verdicts, grids}; }
};

PseudoInputs load_pseudo_inputs(const RunConfig& c, int last_stage)
{
    PseudoInputs in;
    in.original = load_coco(c.paths.at("annotations"));
    for (const AnomalyScore& s : load(c.paths.at("scores"), [](std::string_view t) { return parse_scores(t); })) {
        if (s.flagged) {
            in.flagged.insert(s.image_id);
        }
    }
    in.detections = load(c.paths.at("detections"), [](std::string_view t) { return parse_detections(t); });
    if (last_stage >= 3) {
        in.verdicts = load(c.paths.at("verdicts"), [](std::string_view t) { return parse_verdicts(t); });
    }
    if (last_stage >= 4) {
        in.grids = load(c.paths.at("cams"), [](std::string_view t) { return parse_grids(t); });
    }
    return in;
}

void cmd_pseudo_run(const RunConfig& c, std::ostream& out)
{
    const PseudoInputs in = load_pseudo_inputs(c, 4);
    const PipelineResult result = run_pipeline(in.view(), c.pipeline);
    out << "refined " << result.report.flagged_images << " flagged image(s): " << result.report.output_annotations
        << " annotation(s), " << result.report.zero_box_images.size() << " image(s) without boxes\n";
    emit(c.paths.at("refined_annotations"), dump_document(result.refined), out);
    emit(c.paths.at("pipeline_report"), dump_document(to_json(result.report)), out);
}

void cmd_pseudo_stage(const RunConfig& c, int stage, std::ostream& out)
{
    const PseudoInputs in = load_pseudo_inputs(c, stage);
    const auto outcomes = run_stages(in.view(), c.pipeline, stage);
    std::vector<json> rows;
    for (const ImageOutcome& o : outcomes) {
        const std::vector<CandidateBox>* list = nullptr;
        switch (stage) {
        case 1:
            list = &o.trace.stage1;
            break;
        case 2:
            list = &o.trace.stage2;
            break;
        case 3:
            list = &o.trace.stage3;
            break;
        default:
            list = &o.trace.stage4;
            break;
        }
        for (std::size_t i = 0; i < list->size(); ++i) {
            json row = to_json((*list)[i]);
            if (stage == 2) {
                row["box_ref"] = make_box_ref(o.image_id, i);
            }
            rows.push_back(std::move(row));
        }
    }
    emit(c.paths.at("stages") / ("stage" + std::to_string(stage) + ".ndjson"), write_ndjson(rows), out);
}

void cmd_dataset_diff(const RunConfig& c, std::ostream& out)
{
    const CocoDocument before = load_coco(c.paths.at("annotations"));
    const CocoDocument after = load_coco(c.paths.at("refined_annotations"));
    std::vector<Category> categories = before.categories;
    for (const Category& cat : after.categories) {
        if (std::none_of(categories.begin(), categories.end(), [&](const Category& x) { return x.id == cat.id; })) {
            categories.push_back(cat);
        }
    }
    const DiffReport report = diff_report(before.annotations, after.annotations, categories, c.diff_grouping);
    emit(c.paths.at("diff_report"), dump_document(to_json(report)), out);
    emit(c.paths.at("diff_table"), render_table(report), out);
}

void cmd_dataset_ap(const RunConfig& c, const std::string& truth_role, std::ostream& out)
{
    const auto predictions = load(c.paths.at("predictions"), [](std::string_view t) { return parse_predictions(t); });
    const CocoDocument truth = load_coco(c.paths.at(truth_role));
    const ApResult overall = average_precision(predictions, truth.annotations, c.iou_thresholds);
    json by_size = json::object();
    for (const auto& [bucket, result] : average_precision_by_size(predictions, truth.annotations, c.iou_thresholds)) {
        by_size[std::string(to_string(bucket))] = to_json(result);
    }
    json report = {{"truth", truth_role}, {"overall", to_json(overall)}, {"by_size", std::move(by_size)}};
    out << "AP=" << stable(overall.mean_ap) << '\n';
    emit(c.paths.at("ap_report"), dump_document(report), out);
}

json error_json(const char* kind, const std::string& message)
{
    return {{"kind", kind}, {"message", message}};
}

void report_error(std::ostream& err, json detail)
{
    err << json{{"error", std::move(detail)}}.dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"annofix: annotation error detection and pseudo-label refinement", "annofix"};
    app.require_subcommand(1);
    app.set_version_flag("--version",
                         std::string("annofix ") + kVersion + " (config schema " +
                             std::to_string(kConfigSchemaVersion) + ")");

    Context ctx;
    std::function<void(const RunConfig&)> action;

    auto add = [&](const std::string& name, const std::string& description, std::function<void(const RunConfig&)> fn) {
        CLI::App* sub = app.add_subcommand(name, description);
        sub->add_option("--config", ctx.config_path, "run configuration (JSON)")->required();
        sub->add_option("--seed", ctx.seed, "override the configured seed");
        sub->add_option("--jobs", ctx.jobs, "worker threads (0 = all cores)");
        sub->callback([&action, fn = std::move(fn)] { action = fn; });
        return sub;
    };

    add("traces-normalize", "normalize training traces into weighted feature vectors",
        [&](const RunConfig& c) { cmd_traces_normalize(c, out); });
    auto* train_cmd = add("anomaly-train", "train the linear autoencoder on feature vectors",
                          [&](const RunConfig& c) { cmd_anomaly_train(c, out); });
    train_cmd->add_option("--k", ctx.k, "bottleneck width");
    train_cmd->add_option("--epochs", ctx.epochs, "training epochs");
    train_cmd->add_option("--step", ctx.step, "gradient-descent step");
    auto* score_cmd = add("anomaly-score", "score feature vectors and flag the top fraction",
                          [&](const RunConfig& c) { cmd_anomaly_score(c, out); });
    score_cmd->add_option("--flag-fraction", ctx.flag_fraction, "fraction of images to flag");
    add("anomaly-eval", "evaluate flags and scores against oracle labels",
        [&](const RunConfig& c) { cmd_anomaly_eval(c, out); });
    auto* run_cmd = add("pseudo-run", "refine annotations of flagged images",
                        [&](const RunConfig& c) { cmd_pseudo_run(c, out); });
    run_cmd->add_option("--ladder", ctx.ladder, "validation ladder: algorithm or prose");
    for (int stage = 1; stage <= 4; ++stage) {
        auto* s = add("pseudo-stage" + std::to_string(stage),
                      "dump candidates after refinement stage " + std::to_string(stage),
                      [&, stage](const RunConfig& c) { cmd_pseudo_stage(c, stage, out); });
        if (stage >= 3) {
            s->add_option("--ladder", ctx.ladder, "validation ladder: algorithm or prose");
        }
    }
    add("dataset-diff", "per-category annotation counts before and after refinement",
        [&](const RunConfig& c) { cmd_dataset_diff(c, out); });
    auto* ap_cmd = add("dataset-ap", "average precision of predictions against a truth document",
                       [&](const RunConfig& c) { cmd_dataset_ap(c, ctx.truth == "refined" ? "refined_annotations" : "annotations", out); });
    ap_cmd->add_option("--truth", ctx.truth, "truth document: annotations or refined")
        ->check(CLI::IsMember({"annotations", "refined"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e, out, err);  // --help, --version
        }
        report_error(err, error_json("usage", e.what()));
        return 2;
    }

    try {
        const RunConfig config = ctx.resolve();
        action(config);
        return 0;
    } catch (const FileError& e) {
        report_error(err, e.to_json());
        return e.exit_code();
    } catch (const InputError& e) {
        json j = error_json(e.kind(), e.what());
        if (!e.path().empty()) {
            j["path"] = e.path();
        }
        report_error(err, std::move(j));
        return 2;
    } catch (const ValidationError& e) {
        json j = error_json(e.kind(), e.what());
        j["records"] = record_errors(e.errors());
        report_error(err, std::move(j));
        return 3;
    } catch (const ParseError& e) {
        report_error(err, error_json(e.kind(), e.what()));
        return 3;
    } catch (const Error& e) {
        report_error(err, error_json(e.kind(), e.what()));
        return 1;
    } catch (const std::exception& e) {
        report_error(err, error_json("internal", e.what()));
        return 1;
    }
}

}  // namespace annofix
