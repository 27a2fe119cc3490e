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

#include "annofix/config.hpp"

#include "annofix/error.hpp"
#include "annofix/io.hpp"

#include <cmath>
#include <set>

namespace annofix {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<std::string, std::string>>& default_files()
{
    static const std::vector<std::pair<std::string, std::string>> files = {
        {"annotations", "annotations.json"},
        {"traces", "traces.ndjson"},
        {"features", "features.ndjson"},
        {"normstats", "normstats.json"},
        {"model", "model.json"},
        {"scores", "scores.ndjson"},
        {"oracle", "oracle.ndjson"},
        {"eval_report", "eval_report.json"},
        {"detections", "detections.ndjson"},
        {"verdicts", "verdicts.ndjson"},
        {"cams", "cams.ndjson"},
        {"refined_annotations", "refined_annotations.json"},
        {"pipeline_report", "pipeline_report.json"},
        {"stages", "stages"},
        {"diff_report", "diff_report.json"},
        {"diff_table", "diff_report.txt"},
        {"predictions", "predictions.json"},
        {"ap_report", "ap_report.json"},
    };
    return files;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where)
{
    if (!obj.is_object()) {
        throw InputError("config: '" + where + "' must be an object");
    }
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) {
            throw InputError("config: unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& target, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        return;
    }
    try {
        target = it->get<T>();
    } catch (const json::exception&) {
        throw InputError("config: " + where + "." + key + " has the wrong type");
    }
}

}  // namespace

const fs::path& PathConfig::at(const std::string& role) const
{
    auto it = files.find(role);
    if (it == files.end()) {
        throw InputError("config: no path configured for '" + role + "'");
    }
    return it->second;
}

const std::vector<std::string>& PathConfig::roles()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [role, _] : default_files()) {
            out.push_back(role);
        }
        return out;
    }();
    return names;
}

void RunConfig::validate() const
{
    try {
        weights.validate();
        autoencoder.validate();
        pipeline.consensus.factors.validate();
        pipeline.ladder.validate();
        pipeline.cam.validate();
    } catch (const DomainError& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    if (!(flag_fraction > 0.0 && flag_fraction < 1.0)) {
        throw InputError("config: flag_fraction must lie in (0, 1)");
    }
    if (pipeline.consensus.min_views < 1 || pipeline.consensus.min_views > 6) {
        throw InputError("config: min_views must lie in [1, 6]");
    }
    if (!(pipeline.consensus.cluster_iou > 0.0 && pipeline.consensus.cluster_iou <= 1.0)) {
        throw InputError("config: cluster_iou must lie in (0, 1]");
    }
    if (!(pipeline.dedupe.iou_thresh > 0.0 && pipeline.dedupe.iou_thresh <= 1.0)) {
        throw InputError("config: dedupe_iou must lie in (0, 1]");
    }
    for (double t : iou_thresholds) {
        if (!(t > 0.0 && t <= 1.0)) {
            throw InputError("config: iou_thresholds must lie in (0, 1]");
        }
    }
    if (iou_thresholds.empty()) {
        throw InputError("config: iou_thresholds must not be empty");
    }
    std::map<fs::path, std::string> seen;
    for (const auto& [role, path] : paths.files) {
        const fs::path norm = path.lexically_normal();
        auto [it, inserted] = seen.emplace(norm, role);
        if (!inserted) {
            throw InputError("config: paths for '" + it->second + "' and '" + role + "' collide: " + path.string(),
                             path.string());
        }
    }
}

RunConfig default_config(const fs::path& base_dir)
{
    RunConfig c;
    for (const auto& [role, file] : default_files()) {
        c.paths.files[role] = base_dir / file;
    }
    return c;
}

RunConfig parse_config(const json& doc, const fs::path& base_dir)
{
    RunConfig c = default_config(base_dir);
    reject_unknown(doc,
                   {"schema_version", "seed", "jobs", "paths", "weights", "normalization", "autoencoder",
                    "flag_fraction", "transforms", "pseudo", "evaluation"},
                   "config");
    read(doc, "schema_version", c.schema_version, "config");
    if (c.schema_version != kConfigSchemaVersion) {
        throw InputError("config: unsupported schema_version " + std::to_string(c.schema_version));
    }
    read(doc, "seed", c.autoencoder.seed, "config");
    read(doc, "jobs", c.jobs, "config");
    read(doc, "flag_fraction", c.flag_fraction, "config");

    if (auto it = doc.find("paths"); it != doc.end()) {
        if (!it->is_object()) {
            throw InputError("config: 'paths' must be an object");
        }
        for (const auto& [role, value] : it->items()) {
            if (!c.paths.files.count(role)) {
                throw InputError("config: unknown path role '" + role + "'");
            }
            if (!value.is_string()) {
                throw InputError("config: paths." + role + " must be a string");
            }
            const fs::path p = value.get<std::string>();
            c.paths.files[role] = p.is_absolute() ? p : base_dir / p;
        }
    }

    if (auto it = doc.find("weights"); it != doc.end()) {
        reject_unknown(*it, {"lambda_loss", "component_weights", "weight_gradients"}, "weights");
        read(*it, "lambda_loss", c.weights.lambda_loss, "weights");
        read(*it, "component_weights", c.weights.component_weights, "weights");
        read(*it, "weight_gradients", c.weights.weight_gradients, "weights");
    }

    if (auto it = doc.find("normalization"); it != doc.end()) {
        reject_unknown(*it, {"scheme", "aggregation"}, "normalization");
        std::string scheme = "zscore";
        std::string aggregation = "mean";
        read(*it, "scheme", scheme, "normalization");
        read(*it, "aggregation", aggregation, "normalization");
        if (scheme == "zscore") {
            c.normalization = NormalizationScheme::ZScore;
        } else if (scheme == "minmax") {
            c.normalization = NormalizationScheme::MinMax;
        } else {
            throw InputError("config: normalization.scheme must be zscore or minmax");
        }
        if (aggregation == "mean") {
            c.aggregation = EpochAggregation::Mean;
        } else if (aggregation == "last_epoch") {
            c.aggregation = EpochAggregation::LastEpoch;
        } else {
            throw InputError("config: normalization.aggregation must be mean or last_epoch");
        }
    }

    if (auto it = doc.find("autoencoder"); it != doc.end()) {
        reject_unknown(*it, {"k", "epochs", "step"}, "autoencoder");
        read(*it, "k", c.autoencoder.k, "autoencoder");
        read(*it, "epochs", c.autoencoder.epochs, "autoencoder");
        read(*it, "step", c.autoencoder.step, "autoencoder");
    }

    if (auto it = doc.find("transforms"); it != doc.end()) {
        reject_unknown(*it, {"up_factor", "down_factor"}, "transforms");
        read(*it, "up_factor", c.pipeline.consensus.factors.up, "transforms");
        read(*it, "down_factor", c.pipeline.consensus.factors.down, "transforms");
    }

    if (auto it = doc.find("pseudo"); it != doc.end()) {
        reject_unknown(*it, {"min_views", "cluster_iou", "dedupe_iou", "dedupe_mode", "ladder", "cam"}, "pseudo");
        read(*it, "min_views", c.pipeline.consensus.min_views, "pseudo");
        read(*it, "cluster_iou", c.pipeline.consensus.cluster_iou, "pseudo");
        read(*it, "dedupe_iou", c.pipeline.dedupe.iou_thresh, "pseudo");
        std::string mode = "merge_extent";
        read(*it, "dedupe_mode", mode, "pseudo");
        if (mode == "merge_extent") {
            c.pipeline.dedupe.mode = DedupeMode::MergeExtent;
        } else if (mode == "keep_max") {
            c.pipeline.dedupe.mode = DedupeMode::KeepMax;
        } else {
            throw InputError("config: pseudo.dedupe_mode must be merge_extent or keep_max");
        }
        if (auto ladder = it->find("ladder"); ladder != it->end()) {
            try {
                c.pipeline.ladder = ladder_from_json(*ladder);
            } catch (const DomainError& e) {
                throw InputError(std::string("config: ") + e.what());
            }
        }
        if (auto cam = it->find("cam"); cam != it->end()) {
            reject_unknown(*cam, {"var_alpha", "conc_beta", "mass_tau"}, "pseudo.cam");
            read(*cam, "var_alpha", c.pipeline.cam.var_alpha, "pseudo.cam");
            read(*cam, "conc_beta", c.pipeline.cam.conc_beta, "pseudo.cam");
            read(*cam, "mass_tau", c.pipeline.cam.mass_tau, "pseudo.cam");
        }
    }

    if (auto it = doc.find("evaluation"); it != doc.end()) {
        reject_unknown(*it, {"grouping", "iou_thresholds"}, "evaluation");
        std::string grouping = "per_category_mean_area";
        read(*it, "grouping", grouping, "evaluation");
        if (grouping == "per_category_mean_area") {
            c.diff_grouping = DiffGrouping::PerCategoryMeanArea;
        } else if (grouping == "per_annotation_bucket") {
            c.diff_grouping = DiffGrouping::PerAnnotationBucket;
        } else {
            throw InputError("config: evaluation.grouping must be per_category_mean_area or per_annotation_bucket");
        }
        read(*it, "iou_thresholds", c.iou_thresholds, "evaluation");
    }
    return c;
}

RunConfig load_config(const fs::path& path)
{
    const std::string text = read_file(path);
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        throw InputError("config: malformed JSON in " + path.string(), path.string());
    }
    return parse_config(doc, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

json to_json(const RunConfig& c, const fs::path& base_dir)
{
    json paths = json::object();
    for (const auto& [role, p] : c.paths.files) {
        paths[role] = p.lexically_relative(base_dir).generic_string();
    }
    return {
        {"schema_version", c.schema_version},
        {"seed", c.autoencoder.seed},
        {"jobs", c.jobs},
        {"paths", paths},
        {"weights",
         {{"lambda_loss", c.weights.lambda_loss},
          {"component_weights", c.weights.component_weights},
          {"weight_gradients", c.weights.weight_gradients}}},
        {"normalization",
         {{"scheme", c.normalization == NormalizationScheme::ZScore ? "zscore" : "minmax"},
          {"aggregation", c.aggregation == EpochAggregation::Mean ? "mean" : "last_epoch"}}},
        {"autoencoder", {{"k", c.autoencoder.k}, {"epochs", c.autoencoder.epochs}, {"step", c.autoencoder.step}}},
        {"flag_fraction", c.flag_fraction},
        {"transforms",
         {{"up_factor", c.pipeline.consensus.factors.up}, {"down_factor", c.pipeline.consensus.factors.down}}},
        {"pseudo",
         {{"min_views", c.pipeline.consensus.min_views},
          {"cluster_iou", c.pipeline.consensus.cluster_iou},
          {"dedupe_iou", c.pipeline.dedupe.iou_thresh},
          {"dedupe_mode", c.pipeline.dedupe.mode == DedupeMode::MergeExtent ? "merge_extent" : "keep_max"},
          {"ladder", to_json(c.pipeline.ladder)},
          {"cam",
           {{"var_alpha", c.pipeline.cam.var_alpha},
            {"conc_beta", c.pipeline.cam.conc_beta},
            {"mass_tau", c.pipeline.cam.mass_tau}}}}},
        {"evaluation",
         {{"grouping", c.diff_grouping == DiffGrouping::PerCategoryMeanArea ? "per_category_mean_area"
                                                                             : "per_annotation_bucket"},
          {"iou_thresholds", c.iou_thresholds}}},
    };
}

}  // namespace annofix
