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

#include "annofix/interchange.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace annofix {

enum class SizeBucket { Small, Medium, Large };

inline constexpr std::array<SizeBucket, 3> kAllBuckets = {SizeBucket::Small, SizeBucket::Medium, SizeBucket::Large};

std::string_view to_string(SizeBucket b) noexcept;

/// area < 32^2 small, < 96^2 medium, otherwise large.
SizeBucket bucket_of(double area) noexcept;

struct CategoryDiff {
    CategoryId category_id = 0;
    std::string name;
    std::int64_t count_before = 0;
    std::int64_t count_after = 0;
    std::int64_t difference = 0;  // count_after - count_before
    double average_area = 0.0;    // mean over the after set; 0 when the after set is empty
};

enum class DiffGrouping { PerAnnotationBucket, PerCategoryMeanArea };

struct DiffReport {
    DiffGrouping grouping = DiffGrouping::PerCategoryMeanArea;
    std::map<SizeBucket, std::vector<CategoryDiff>> buckets;  // rows ordered by category id
    std::int64_t total_before = 0;
    std::int64_t total_after = 0;
};

/// Per-category annotation counts before and after refinement, bucketed by object size.
/// PerCategoryMeanArea assigns each category to the bucket of its mean after-area; PerAnnotationBucket
/// counts every annotation in its own size bucket. Categories named only in `after` get count_before 0.
DiffReport diff_report(std::span<const AnnotationRecord> before, std::span<const AnnotationRecord> after,
                       std::span<const Category> categories, DiffGrouping grouping);

/// Fixed-width table with the columns Category, Before, After, Difference, Average Area.
std::string render_table(const DiffReport& report);

struct ScoredBox {
    ImageId image_id = 0;
    CategoryId category_id = 0;
    Box box;
    double score = 0.0;
};

/// Default IoU thresholds 0.50:0.05:0.95.
std::vector<double> coco_iou_thresholds();

struct ApResult {
    std::vector<double> thresholds;
    std::vector<double> ap;  // per threshold, mean over categories with truth
    double mean_ap = 0.0;
    std::map<CategoryId, std::vector<double>> per_category;
    std::vector<std::string> warnings;
};

/// Greedy matching in descending score order against unmatched same-class truth in the same image with the
/// highest IoU >= threshold; AP is the area under the monotone precision envelope. Crowd truth is ignored.
ApResult average_precision(std::span<const ScoredBox> predictions, std::span<const AnnotationRecord> truth,
                           std::span<const double> iou_thresholds);

/// AP of one category's predictions at one threshold (building block, exposed for tests).
double average_precision_single(std::span<const ScoredBox> predictions, std::span<const AnnotationRecord> truth,
                                double iou_threshold);

/// AP restricted to truth and predictions whose area falls in each size bucket.
std::map<SizeBucket, ApResult> average_precision_by_size(std::span<const ScoredBox> predictions,
                                                          std::span<const AnnotationRecord> truth,
                                                          std::span<const double> iou_thresholds);

/// COCO results format: JSON array of {image_id, category_id, bbox [x,y,w,h], score}.
ParseResult<ScoredBox> parse_predictions(std::string_view text);

nlohmann::json to_json(const DiffReport& r);
nlohmann::json to_json(const ApResult& r);

}  // namespace annofix
