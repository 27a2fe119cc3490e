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

#include "annofix/evaluation.hpp"

#include "annofix/error.hpp"
#include "annofix/geometry.hpp"
#include "annofix/json_format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace annofix {

using nlohmann::json;

std::string_view to_string(SizeBucket b) noexcept
{
    switch (b) {
    case SizeBucket::Small:
        return "small";
    case SizeBucket::Medium:
        return "medium";
    case SizeBucket::Large:
        return "large";
    }
    return "unknown";
}

SizeBucket bucket_of(double area) noexcept
{
    if (area < 32.0 * 32.0) {
        return SizeBucket::Small;
    }
    if (area < 96.0 * 96.0) {
        return SizeBucket::Medium;
    }
    return SizeBucket::Large;
}

DiffReport diff_report(std::span<const AnnotationRecord> before, std::span<const AnnotationRecord> after,
                       std::span<const Category> categories, DiffGrouping grouping)
{
    std::map<CategoryId, std::string> names;
    for (const Category& c : categories) {
        names.emplace(c.id, c.name);
    }
    auto name_of = [&](CategoryId id) {
        auto it = names.find(id);
        return it == names.end() ? std::string{} : it->second;
    };

    DiffReport report;
    report.grouping = grouping;
    report.total_before = static_cast<std::int64_t>(before.size());
    report.total_after = static_cast<std::int64_t>(after.size());
    for (SizeBucket b : kAllBuckets) {
        report.buckets[b];
    }

    if (grouping == DiffGrouping::PerCategoryMeanArea) {
        struct Tally {
            std::int64_t before = 0;
            std::int64_t after = 0;
            double area_sum = 0.0;
        };
        std::map<CategoryId, Tally> tally;
        for (const Category& c : categories) {
            tally[c.id];
        }
        for (const AnnotationRecord& r : before) {
            ++tally[r.category_id].before;
        }
        for (const AnnotationRecord& r : after) {
            Tally& t = tally[r.category_id];
            ++t.after;
            t.area_sum += r.area;
        }
        for (const auto& [id, t] : tally) {
            CategoryDiff d;
            d.category_id = id;
            d.name = name_of(id);
            d.count_before = t.before;
            d.count_after = t.after;
            d.difference = t.after - t.before;
            d.average_area = t.after > 0 ? t.area_sum / static_cast<double>(t.after) : 0.0;
            report.buckets[bucket_of(d.average_area)].push_back(std::move(d));
        }
        return report;
    }

    struct Tally {
        std::int64_t before = 0;
        std::int64_t after = 0;
        double area_sum = 0.0;
    };
    std::map<std::pair<SizeBucket, CategoryId>, Tally> tally;
    for (const AnnotationRecord& r : before) {
        ++tally[{bucket_of(r.area), r.category_id}].before;
    }
    for (const AnnotationRecord& r : after) {
        Tally& t = tally[{bucket_of(r.area), r.category_id}];
        ++t.after;
        t.area_sum += r.area;
    }
    for (const auto& [key, t] : tally) {
        CategoryDiff d;
        d.category_id = key.second;
        d.name = name_of(key.second);
        d.count_before = t.before;
        d.count_after = t.after;
        d.difference = t.after - t.before;
        d.average_area = t.after > 0 ? t.area_sum / static_cast<double>(t.after) : 0.0;
        report.buckets[key.first].push_back(std::move(d));
    }
    return report;
}

std::string render_table(const DiffReport& report)
{
    std::ostringstream os;
    char line[160];
    for (SizeBucket b : kAllBuckets) {
        const auto& rows = report.buckets.at(b);
        std::string title(to_string(b));
        title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
        os << title << " objects\n";
        std::snprintf(line, sizeof line, "%-20s %10s %10s %11s %14s\n", "Category", "Before", "After", "Difference",
                      "Average Area");
        os << line;
        for (const CategoryDiff& d : rows) {
            const std::string label = d.name.empty() ? std::to_string(d.category_id) : d.name;
            std::snprintf(line, sizeof line, "%-20s %10lld %10lld %11lld %14.2f\n", label.c_str(),
                          static_cast<long long>(d.count_before), static_cast<long long>(d.count_after),
                          static_cast<long long>(d.difference), d.average_area);
            os << line;
        }
        os << '\n';
    }
    return os.str();
}

std::vector<double> coco_iou_thresholds()
{
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) {
        t.push_back((50.0 + 5.0 * i) / 100.0);
    }
    return t;
}

double average_precision_single(std::span<const ScoredBox> predictions, std::span<const AnnotationRecord> truth,
                                double iou_threshold)
{
    std::map<ImageId, std::vector<const AnnotationRecord*>> truth_by_image;
    std::size_t n_truth = 0;
    for (const AnnotationRecord& t : truth) {
        if (t.is_crowd) {
            continue;
        }
        truth_by_image[t.image_id].push_back(&t);
        ++n_truth;
    }
    if (n_truth == 0) {
        return 0.0;
    }

    std::vector<std::size_t> order(predictions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return predictions[a].score > predictions[b].score; });

    std::set<const AnnotationRecord*> matched;
    std::vector<double> precision;
    std::vector<double> recall;
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t idx : order) {
        const ScoredBox& p = predictions[idx];
        const AnnotationRecord* best = nullptr;
        double best_iou = -1.0;
        if (auto it = truth_by_image.find(p.image_id); it != truth_by_image.end()) {
            for (const AnnotationRecord* t : it->second) {
                if (t->category_id != p.category_id || matched.count(t)) {
                    continue;
                }
                const double o = iou(p.box, t->box);
                if (o >= iou_threshold && o > best_iou) {
                    best = t;
                    best_iou = o;
                }
            }
        }
        if (best != nullptr) {
            matched.insert(best);
            tp += 1.0;
        } else {
            fp += 1.0;
        }
        precision.push_back(tp / (tp + fp));
        recall.push_back(tp / static_cast<double>(n_truth));
    }

    // monotone envelope, then sum precision over recall increments
    for (std::size_t i = precision.size(); i-- > 1;) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return std::clamp(ap, 0.0, 1.0);
}

ApResult average_precision(std::span<const ScoredBox> predictions, std::span<const AnnotationRecord> truth,
                           std::span<const double> iou_thresholds)
{
    ApResult out;
    out.thresholds.assign(iou_thresholds.begin(), iou_thresholds.end());
    out.ap.assign(out.thresholds.size(), 0.0);

    std::map<CategoryId, std::vector<AnnotationRecord>> truth_by_cat;
    for (const AnnotationRecord& t : truth) {
        if (!t.is_crowd) {
            truth_by_cat[t.category_id].push_back(t);
        }
    }
    std::map<CategoryId, std::vector<ScoredBox>> pred_by_cat;
    for (const ScoredBox& p : predictions) {
        pred_by_cat[p.category_id].push_back(p);
    }

    if (truth_by_cat.empty()) {
        if (!predictions.empty()) {
            out.warnings.push_back("no ground truth: AP reported as 0");
        }
        return out;
    }

    for (const auto& [cat, cat_truth] : truth_by_cat) {
        const auto& cat_preds = pred_by_cat[cat];
        std::vector<double> per_threshold;
        for (double t : out.thresholds) {
            per_threshold.push_back(average_precision_single(cat_preds, cat_truth, t));
        }
        out.per_category.emplace(cat, std::move(per_threshold));
    }
    for (std::size_t i = 0; i < out.thresholds.size(); ++i) {
        double sum = 0.0;
        for (const auto& [cat, values] : out.per_category) {
            sum += values[i];
        }
        out.ap[i] = sum / static_cast<double>(out.per_category.size());
    }
    if (!out.ap.empty()) {
        out.mean_ap = std::accumulate(out.ap.begin(), out.ap.end(), 0.0) / static_cast<double>(out.ap.size());
    }
    return out;
}

std::map<SizeBucket, ApResult> average_precision_by_size(std::span<const ScoredBox> predictions,
                                                          std::span<const AnnotationRecord> truth,
                                                          std::span<const double> iou_thresholds)
{
    std::map<SizeBucket, ApResult> out;
    for (SizeBucket b : kAllBuckets) {
        std::vector<AnnotationRecord> t;
        for (const AnnotationRecord& r : truth) {
            if (bucket_of(r.area) == b) {
                t.push_back(r);
            }
        }
        std::vector<ScoredBox> p;
        for (const ScoredBox& s : predictions) {
            if (bucket_of(s.box.area()) == b) {
                p.push_back(s);
            }
        }
        out.emplace(b, average_precision(p, t, iou_thresholds));
    }
    return out;
}

ParseResult<ScoredBox> parse_predictions(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_array()) {
        throw ParseError("predictions must be a JSON array", 0);
    }
    ParseResult<ScoredBox> out;
    std::size_t index = 0;
    for (const json& p : doc) {
        ++index;
        const std::string rec = "prediction " + std::to_string(index);
        try {
            ScoredBox s;
            s.image_id = p.at("image_id").get<ImageId>();
            s.category_id = p.at("category_id").get<CategoryId>();
            const auto bbox = p.at("bbox").get<std::array<double, 4>>();
            s.box = Box::from_xywh(bbox[0], bbox[1], bbox[2], bbox[3]);
            s.score = p.at("score").get<double>();
            if (!s.box.valid()) {
                out.errors.push_back({0, rec, "bbox", "width and height must be positive and finite"});
                continue;
            }
            if (!(s.score >= 0.0 && s.score <= 1.0)) {
                out.errors.push_back({0, rec, "score", "score out of [0,1]"});
                continue;
            }
            out.records.push_back(s);
        } catch (const json::exception& e) {
            out.errors.push_back({0, rec, {}, e.what()});
        }
    }
    return out;
}

json to_json(const DiffReport& r)
{
    json buckets = json::object();
    for (const auto& [bucket, rows] : r.buckets) {
        json arr = json::array();
        for (const CategoryDiff& d : rows) {
            arr.push_back({
                {"category_id", d.category_id},
                {"name", d.name},
                {"count_before", d.count_before},
                {"count_after", d.count_after},
                {"difference", d.difference},
                {"average_area", stable(d.average_area)},
            });
        }
        buckets[std::string(to_string(bucket))] = std::move(arr);
    }
    return {
        {"grouping", r.grouping == DiffGrouping::PerCategoryMeanArea ? "per_category_mean_area"
                                                                      : "per_annotation_bucket"},
        {"total_before", r.total_before},
        {"total_after", r.total_after},
        {"buckets", std::move(buckets)},
    };
}

json to_json(const ApResult& r)
{
    auto rounded = [](const std::vector<double>& v) {
        json a = json::array();
        for (double x : v) {
            a.push_back(stable(x));
        }
        return a;
    };
    json per_cat = json::object();
    for (const auto& [cat, values] : r.per_category) {
        per_cat[std::to_string(cat)] = rounded(values);
    }
    return {
        {"iou_thresholds", rounded(r.thresholds)},
        {"ap", rounded(r.ap)},
        {"mean_ap", stable(r.mean_ap)},
        {"per_category", std::move(per_cat)},
        {"warnings", r.warnings},
    };
}

}  // namespace annofix
