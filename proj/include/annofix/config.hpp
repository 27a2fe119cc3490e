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

#pragma once

#include "annofix/anomaly.hpp"
#include "annofix/evaluation.hpp"
#include "annofix/pseudolabel.hpp"
#include "annofix/trace_metrics.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace annofix {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kConfigSchemaVersion = 1;

/// Every file a run reads or writes, keyed by role ("annotations", "traces", ...).
/// Relative paths resolve against the config file's directory.
struct PathConfig {
    std::map<std::string, std::filesystem::path> files;

    const std::filesystem::path& at(const std::string& role) const;
    static const std::vector<std::string>& roles();
};

/// Single-document run configuration. Unknown keys are rejected so typos surface early.
struct RunConfig {
    int schema_version = kConfigSchemaVersion;
    PathConfig paths;
    WeightConfig weights;
    NormalizationScheme normalization = NormalizationScheme::ZScore;
    EpochAggregation aggregation = EpochAggregation::Mean;
    AutoencoderConfig autoencoder;
    double flag_fraction = 0.35;
    PipelineConfig pipeline;
    DiffGrouping diff_grouping = DiffGrouping::PerCategoryMeanArea;
    std::vector<double> iou_thresholds = coco_iou_thresholds();
    unsigned jobs = 0;  // 0 = available cores

    /// Throws InputError on out-of-range values or colliding paths.
    void validate() const;
};

/// Defaults for every path are "<role>.<ext>" inside `base_dir`.
RunConfig default_config(const std::filesystem::path& base_dir);

/// Parses a config document; keys absent from it keep their defaults.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& c, const std::filesystem::path& base_dir);

}  // namespace annofix
