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

#include "annofix/pseudolabel.hpp"

#include "annofix/error.hpp"
#include "annofix/json_format.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

namespace annofix {

using nlohmann::json;

std::string_view to_string(Provenance p) noexcept
{
    switch (p) {
    case Provenance::Consensus:
        return "consensus";
    case Provenance::Merged:
        return "merged";
    case Provenance::Validated:
        return "validated";
    case Provenance::CamKept:
        return "cam_kept";
    case Provenance::CamAdjusted:
        return "cam_adjusted";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------------------------------------------------
// stage 1

std::vector<CandidateBox> stage1_consensus(std::span<const Detection> detections, const ImageDims& dims,
                                           const ConsensusConfig& config)
{
    if (config.min_views < 1) {
        throw DomainError("stage1: min_views must be at least 1");
    }
    struct Member {
        Box box;
        TransformKind view;
        CategoryId label;
        double score;
    };
    std::vector<Member> members;
    members.reserve(detections.size());
    for (const Detection& d : detections) {
        if (static_cast<std::size_t>(d.view) >= kAllTransforms.size()) {
            throw DomainError("stage1: detection references an unknown view");
        }
        const Box original = clip_to_image(from_view(d.box, d.view, dims, config.factors), dims);
        members.push_back({original, d.view, d.category_id, d.score});
    }

    std::vector<std::size_t> order(members.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return members[a].score > members[b].score; });

    // each cluster lists member indices; element 0 is the seed and representative
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t idx : order) {
        bool placed = false;
        for (auto& cluster : clusters) {
            if (iou(members[cluster.front()].box, members[idx].box) >= config.cluster_iou) {
                cluster.push_back(idx);
                placed = true;
                break;
            }
        }
        if (!placed) {
            clusters.push_back({idx});
        }
    }

    std::vector<CandidateBox> out;
    for (const auto& cluster : clusters) {
        std::map<CategoryId, std::set<TransformKind>> views_by_label;
        for (std::size_t idx : cluster) {
            views_by_label[members[idx].label].insert(members[idx].view);
        }
        const bool quorum = std::any_of(views_by_label.begin(), views_by_label.end(), [&](const auto& entry) {
            return entry.second.size() >= static_cast<std::size_t>(config.min_views);
        });
        if (!quorum) {
            continue;
        }
        const Member& top = members[cluster.front()];
        std::vector<Box> boxes;
        for (std::size_t idx : cluster) {
            if (members[idx].label == top.label) {
                boxes.push_back(members[idx].box);
            }
        }
        CandidateBox c;
        c.box = average_boxes(boxes);
        c.category_id = top.label;
        c.score = top.score;
        c.supporting_views = views_by_label[top.label];
        c.stage = Provenance::Consensus;
        if (!detections.empty()) {
            c.image_id = detections.front().image_id;
        }
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------------------------------------------------
// stage 2

std::vector<CandidateBox> stage2_dedupe(std::span<const CandidateBox> candidates, const DedupeConfig& config)
{
    const std::size_t n = candidates.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (candidates[i].category_id == candidates[j].category_id &&
                iou(candidates[i].box, candidates[j].box) >= config.iou_thresh) {
                const std::size_t a = find(i);
                const std::size_t b = find(j);
                if (a != b) {
                    parent[std::max(a, b)] = std::min(a, b);
                }
            }
        }
    }

    // groups keyed by root; roots are the smallest index, so map order is first-member order
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) {
        groups[find(i)].push_back(i);
    }

    std::vector<CandidateBox> out;
    out.reserve(groups.size());
    for (const auto& [root, group] : groups) {
        if (group.size() == 1) {
            out.push_back(candidates[group.front()]);
            continue;
        }
        std::set<TransformKind> views;
        for (std::size_t i : group) {
            views.insert(candidates[i].supporting_views.begin(), candidates[i].supporting_views.end());
        }
        if (config.mode == DedupeMode::KeepMax) {
            std::size_t best = group.front();
            for (std::size_t i : group) {
                const CandidateBox& c = candidates[i];
                const CandidateBox& b = candidates[best];
                if (c.score > b.score || (c.score == b.score && c.box.area() > b.box.area())) {
                    best = i;
                }
            }
            CandidateBox kept = candidates[best];
            kept.stage = Provenance::Merged;
            out.push_back(std::move(kept));
        } else {
            std::vector<Box> boxes;
            double score_sum = 0.0;
            for (std::size_t i : group) {
                boxes.push_back(candidates[i].box);
                score_sum += candidates[i].score;
            }
            CandidateBox merged = candidates[group.front()];
            merged.box = merge_extents(boxes);
            merged.score = score_sum / static_cast<double>(group.size());
            merged.supporting_views = std::move(views);
            merged.stage = Provenance::Merged;
            out.push_back(std::move(merged));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------------------------------------
// stage 3

std::string_view to_string(LadderRule rule) noexcept
{
    switch (rule) {
    case LadderRule::AlwaysKeep:
        return "always_keep";
    case LadderRule::Top3Match:
        return "top3_match";
    case LadderRule::Top1Match:
        return "top1_match";
    case LadderRule::Top1MatchAndConfidence:
        return "top1_match_and_pc";
    }
    return "unknown";
}

std::optional<LadderRule> ladder_rule_from_string(std::string_view name) noexcept
{
    for (LadderRule r : {LadderRule::AlwaysKeep, LadderRule::Top3Match, LadderRule::Top1Match,
                         LadderRule::Top1MatchAndConfidence}) {
        if (to_string(r) == name) {
            return r;
        }
    }
    return std::nullopt;
}

const LadderRung* LadderConfig::find(double score) const noexcept
{
    for (const LadderRung& r : rungs) {
        if (score >= r.lo && (score < r.hi || (r.hi == 1.0 && score == 1.0))) {
            return &r;
        }
    }
    return nullptr;
}

void LadderConfig::validate() const
{
    if (rungs.empty()) {
        throw DomainError("ladder: no rungs");
    }
    std::vector<LadderRung> sorted = rungs;
    std::sort(sorted.begin(), sorted.end(), [](const LadderRung& a, const LadderRung& b) { return a.lo < b.lo; });
    if (sorted.front().lo != 0.0 || sorted.back().hi != 1.0) {
        throw DomainError("ladder: rungs must cover [0, 1]");
    }
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const LadderRung& r = sorted[i];
        if (!(r.lo < r.hi)) {
            throw DomainError("ladder: every rung needs lo < hi");
        }
        if (i + 1 < sorted.size() && r.hi != sorted[i + 1].lo) {
            throw DomainError("ladder: rungs must be contiguous and non-overlapping");
        }
        if (r.rule == LadderRule::Top1MatchAndConfidence && !(r.theta >= 0.0 && r.theta <= 1.0)) {
            throw DomainError("ladder: theta must lie in [0, 1]");
        }
    }
}

LadderConfig LadderConfig::algorithm()
{
    return {{
        {0.6, 1.0, LadderRule::AlwaysKeep, 0.0},
        {0.3, 0.6, LadderRule::Top3Match, 0.0},
        {0.2, 0.3, LadderRule::Top1Match, 0.0},
        {0.1, 0.2, LadderRule::Top1MatchAndConfidence, 0.8},
        {0.0, 0.1, LadderRule::Top1MatchAndConfidence, 0.9},
    }};
}

LadderConfig LadderConfig::prose()
{
    return {{
        {0.5, 1.0, LadderRule::AlwaysKeep, 0.0},
        {0.3, 0.5, LadderRule::Top3Match, 0.0},
        {0.2, 0.3, LadderRule::Top1Match, 0.0},
        {0.1, 0.2, LadderRule::Top1MatchAndConfidence, 0.5},
        {0.08, 0.1, LadderRule::Top1MatchAndConfidence, 0.6},
        {0.0, 0.08, LadderRule::Top1MatchAndConfidence, 0.7},
    }};
}

LadderConfig LadderConfig::named(std::string_view name)
{
    if (name == "algorithm") {
        return algorithm();
    }
    if (name == "prose") {
        return prose();
    }
    throw DomainError("unknown ladder '" + std::string(name) + "' (expected algorithm or prose)");
}

bool needs_verdict(const CandidateBox& candidate, const LadderConfig& ladder)
{
    const LadderRung* rung = ladder.find(candidate.score);
    return rung == nullptr || rung->rule != LadderRule::AlwaysKeep;
}

Verdict stage3_validate(const CandidateBox& candidate, const ClassifierVerdict* verdict, const LadderConfig& ladder)
{
    const LadderRung* rung = ladder.find(candidate.score);
    if (rung == nullptr) {
        throw DomainError("stage3: no ladder rung owns score " + std::to_string(candidate.score));
    }
    if (rung->rule == LadderRule::AlwaysKeep) {
        return Verdict::Keep;
    }
    if (verdict == nullptr) {
        throw DomainError("stage3: missing classifier verdict for a candidate with score " +
                          std::to_string(candidate.score));
    }
    const CategoryId label = candidate.category_id;
    bool keep = false;
    switch (rung->rule) {
    case LadderRule::AlwaysKeep:
        keep = true;
        break;
    case LadderRule::Top3Match:
        keep = std::find(verdict->top3.begin(), verdict->top3.end(), label) != verdict->top3.end();
        break;
    case LadderRule::Top1Match:
        keep = verdict->top1 == label;
        break;
    case LadderRule::Top1MatchAndConfidence:
        keep = verdict->top1 == label && verdict->p_c >= rung->theta;
        break;
    }
    return keep ? Verdict::Keep : Verdict::Drop;
}

// ---------------------------------------------------------------------------------------------------------------------
// stage 4

void CamThresholds::validate() const
{
    if (!std::isfinite(var_alpha) || var_alpha < 0.0) {
        throw DomainError("cam: var_alpha must be non-negative");
    }
    if (!(conc_beta >= 0.0 && conc_beta <= 1.0)) {
        throw DomainError("cam: conc_beta must lie in [0, 1]");
    }
    if (!(mass_tau > 0.0 && mass_tau < 1.0)) {
        throw DomainError("cam: mass_tau must lie in (0, 1)");
    }
}

CamStatistics cam_statistics(const ActivationGrid& grid)
{
    if (grid.width == 0 || grid.height == 0 || grid.values.size() != grid.width * grid.height) {
        throw DomainError("cam: grid shape does not match its values");
    }
    double mass = 0.0;
    double peak = 0.0;
    for (double v : grid.values) {
        mass += v;
        peak = std::max(peak, v);
    }
    if (!(mass > 0.0)) {
        throw DomainError("cam: grid " + grid.box_ref + " has zero mass");
    }

    double cx = 0.0;
    double cy = 0.0;
    for (std::size_t r = 0; r < grid.height; ++r) {
        for (std::size_t c = 0; c < grid.width; ++c) {
            const double p = grid.at(r, c) / mass;
            cx += p * (static_cast<double>(c) + 0.5);
            cy += p * (static_cast<double>(r) + 0.5);
        }
    }
    double spread = 0.0;
    double concentrated = 0.0;
    for (std::size_t r = 0; r < grid.height; ++r) {
        for (std::size_t c = 0; c < grid.width; ++c) {
            const double v = grid.at(r, c);
            const double dx = static_cast<double>(c) + 0.5 - cx;
            const double dy = static_cast<double>(r) + 0.5 - cy;
            spread += (v / mass) * (dx * dx + dy * dy);
            if (v >= 0.5 * peak) {
                concentrated += v;
            }
        }
    }
    const auto w = static_cast<double>(grid.width);
    const auto h = static_cast<double>(grid.height);
    return {spread / (w * w + h * h), concentrated / mass};
}

CamOutcome stage4_cam_refine(const CandidateBox& candidate, const ActivationGrid& grid, const CamThresholds& th,
                             const ImageDims& dims)
{
    const CamStatistics stats = cam_statistics(grid);
    if (stats.variance <= th.var_alpha) {
        return CamKept{};
    }
    if (stats.concentration < th.conc_beta) {
        return CamDropped{"activation too diffuse"};
    }

    const double peak = *std::max_element(grid.values.begin(), grid.values.end());
    std::size_t c_min = grid.width;
    std::size_t c_max = 0;
    std::size_t r_min = grid.height;
    std::size_t r_max = 0;
    for (std::size_t r = 0; r < grid.height; ++r) {
        for (std::size_t c = 0; c < grid.width; ++c) {
            if (grid.at(r, c) >= th.mass_tau * peak) {
                c_min = std::min(c_min, c);
                c_max = std::max(c_max, c);
                r_min = std::min(r_min, r);
                r_max = std::max(r_max, r);
            }
        }
    }
    const Box& b = candidate.box;
    const auto w = static_cast<double>(grid.width);
    const auto h = static_cast<double>(grid.height);
    const Box fitted{
        b.x_min + b.width() * static_cast<double>(c_min) / w,
        b.y_min + b.height() * static_cast<double>(r_min) / h,
        b.x_min + b.width() * static_cast<double>(c_max + 1) / w,
        b.y_min + b.height() * static_cast<double>(r_max + 1) / h,
    };
    const Box clipped = clip_to_image(fitted, dims);
    if (!clipped.valid()) {
        return CamDropped{"adjusted box is degenerate"};
    }
    return CamAdjusted{clipped};
}

// ---------------------------------------------------------------------------------------------------------------------
// pipeline

ImageOutcome refine_image(ImageId image_id, const ImageDims& dims, std::span<const Detection> detections,
                          const std::map<std::string, const ClassifierVerdict*>& verdicts,
                          const std::map<std::string, const ActivationGrid*>& grids, const PipelineConfig& config,
                          int last_stage)
{
    ImageOutcome out;
    out.image_id = image_id;

    out.trace.stage1 = stage1_consensus(detections, dims, config.consensus);
    for (CandidateBox& c : out.trace.stage1) {
        c.image_id = image_id;
    }
    if (last_stage < 2) {
        return out;
    }

    out.trace.stage2 = stage2_dedupe(out.trace.stage1, config.dedupe);
    out.merged = out.trace.stage1.size() - out.trace.stage2.size();
    if (last_stage < 3) {
        return out;
    }

    std::vector<std::size_t> validated_index;  // stage-2 index of each stage-3 survivor
    for (std::size_t i = 0; i < out.trace.stage2.size(); ++i) {
        const CandidateBox& c = out.trace.stage2[i];
        const std::string ref = make_box_ref(image_id, i);
        const ClassifierVerdict* verdict = nullptr;
        if (auto it = verdicts.find(ref); it != verdicts.end()) {
            verdict = it->second;
        }
        if (verdict == nullptr && needs_verdict(c, config.ladder)) {
            throw DomainError("missing classifier verdict for " + ref);
        }
        if (stage3_validate(c, verdict, config.ladder) == Verdict::Keep) {
            CandidateBox kept = c;
            kept.stage = Provenance::Validated;
            out.trace.stage3.push_back(std::move(kept));
            validated_index.push_back(i);
        } else {
            ++out.ladder_dropped;
        }
    }
    if (last_stage < 4) {
        return out;
    }

    for (std::size_t j = 0; j < out.trace.stage3.size(); ++j) {
        const CandidateBox& c = out.trace.stage3[j];
        const std::string ref = make_box_ref(image_id, validated_index[j]);
        auto it = grids.find(ref);
        if (it == grids.end()) {
            throw DomainError("missing activation grid for " + ref);
        }
        const CamOutcome outcome = stage4_cam_refine(c, *it->second, config.cam, dims);
        if (std::holds_alternative<CamKept>(outcome)) {
            CandidateBox kept = c;
            kept.stage = Provenance::CamKept;
            out.trace.stage4.push_back(std::move(kept));
            ++out.cam_kept;
        } else if (const auto* adjusted = std::get_if<CamAdjusted>(&outcome)) {
            CandidateBox moved = c;
            moved.box = adjusted->box;
            moved.stage = Provenance::CamAdjusted;
            out.trace.stage4.push_back(std::move(moved));
            ++out.cam_adjusted;
        } else {
            const auto& dropped = std::get<CamDropped>(outcome);
            ++out.cam_dropped;
            if (dropped.reason != "activation too diffuse") {
                out.warnings.push_back(ref + ": " + dropped.reason);
            }
        }
    }
    return out;
}

namespace {

struct Indexed {
    std::map<ImageId, std::vector<Detection>> detections;
    std::map<std::string, const ClassifierVerdict*> verdicts;
    std::map<std::string, const ActivationGrid*> grids;
    std::map<ImageId, ImageDims> dims;
};

Indexed index_inputs(const PipelineInputs& inputs)
{
    if (inputs.original == nullptr) {
        throw DomainError("pipeline: original annotations missing");
    }
    Indexed idx;
    for (const Detection& d : inputs.detections) {
        if (inputs.flagged.count(d.image_id)) {
            idx.detections[d.image_id].push_back(d);
        }
    }
    for (const ClassifierVerdict& v : inputs.verdicts) {
        idx.verdicts.emplace(v.box_ref, &v);
    }
    for (const ActivationGrid& g : inputs.grids) {
        idx.grids.emplace(g.box_ref, &g);
    }
    for (const ImageInfo& img : inputs.original->images) {
        idx.dims.emplace(img.id, img.dims);
    }
    return idx;
}

/// Runs refine_image over the flagged set on `jobs` threads; results come back in ascending image_id.
std::vector<ImageOutcome> run_all(const PipelineInputs& inputs, const PipelineConfig& config, int last_stage)
{
    const Indexed idx = index_inputs(inputs);
    const std::vector<ImageId> ids(inputs.flagged.begin(), inputs.flagged.end());

    std::vector<std::string> missing;
    for (ImageId id : ids) {
        if (!idx.dims.count(id)) {
            missing.push_back(std::to_string(id) + " (not in annotations images)");
        } else if (!idx.detections.count(id)) {
            missing.push_back(std::to_string(id) + " (no detections)");
        }
    }

    std::vector<ImageOutcome> outcomes(ids.size());
    std::vector<std::string> failures(ids.size());
    if (missing.empty()) {
        auto work = [&](std::size_t i) {
            try {
                const ImageId id = ids[i];
                outcomes[i] = refine_image(id, idx.dims.at(id), idx.detections.at(id), idx.verdicts, idx.grids, config,
                                           last_stage);
            } catch (const std::exception& e) {
                failures[i] = std::to_string(ids[i]) + " (" + e.what() + ")";
            }
        };
        const std::size_t jobs = std::clamp<std::size_t>(config.jobs == 0 ? 1 : config.jobs, 1, std::max<std::size_t>(ids.size(), 1));
        if (jobs == 1) {
            for (std::size_t i = 0; i < ids.size(); ++i) {
                work(i);
            }
        } else {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < jobs; ++t) {
                pool.emplace_back([&, t] {
                    for (std::size_t i = t; i < ids.size(); i += jobs) {
                        work(i);
                    }
                });
            }
            for (auto& th : pool) {
                th.join();
            }
        }
        for (auto& f : failures) {
            if (!f.empty()) {
                missing.push_back(std::move(f));
            }
        }
    }

    if (!missing.empty()) {
        std::ostringstream os;
        os << "pipeline inputs incomplete for image(s):";
        for (const auto& m : missing) {
            os << ' ' << m << ';';
        }
        throw DomainError(os.str());
    }
    return outcomes;
}

json annotation_json(const CandidateBox& c, AnnotationId id)
{
    const auto xywh = c.box.to_xywh();
    return {
        {"id", id},
        {"image_id", c.image_id},
        {"category_id", c.category_id},
        {"bbox", {xywh[0], xywh[1], xywh[2], xywh[3]}},
        {"area", c.box.area()},
        {"iscrowd", 0},
        {"score", stable(c.score)},
        {"provenance", std::string(to_string(c.stage))},
    };
}

}  // namespace

std::vector<ImageOutcome> run_stages(const PipelineInputs& inputs, const PipelineConfig& config, int last_stage)
{
    return run_all(inputs, config, std::clamp(last_stage, 1, 4));
}

PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config)
{
    std::vector<ImageOutcome> outcomes = run_all(inputs, config, 4);

    PipelineResult result;
    result.refined = inputs.original->source;
    json annotations = json::array();
    AnnotationId max_id = 0;
    for (const json& ann : inputs.original->source["annotations"]) {
        if (ann.contains("id") && ann["id"].is_number_integer()) {
            max_id = std::max(max_id, ann["id"].get<AnnotationId>());
        }
        const bool flagged = ann.contains("image_id") && ann["image_id"].is_number_integer() &&
                             inputs.flagged.count(ann["image_id"].get<ImageId>()) > 0;
        if (!flagged) {
            annotations.push_back(ann);
        }
    }

    PipelineReport& report = result.report;
    report.flagged_images = outcomes.size();
    AnnotationId next_id = max_id + 1;
    for (const ImageOutcome& o : outcomes) {
        report.stage1_candidates += o.trace.stage1.size();
        report.stage2_candidates += o.trace.stage2.size();
        report.stage2_merged += o.merged;
        report.stage3_dropped += o.ladder_dropped;
        report.stage3_kept += o.trace.stage3.size();
        report.cam_kept += o.cam_kept;
        report.cam_adjusted += o.cam_adjusted;
        report.cam_dropped += o.cam_dropped;
        if (o.trace.stage4.empty()) {
            report.zero_box_images.push_back(o.image_id);
        }
        for (const CandidateBox& c : o.trace.stage4) {
            annotations.push_back(annotation_json(c, next_id++));
            ++report.output_annotations;
        }
    }
    report.images = std::move(outcomes);
    result.refined["annotations"] = std::move(annotations);
    return result;
}

json to_json(const CandidateBox& c)
{
    json views = json::array();
    for (TransformKind v : c.supporting_views) {
        views.push_back(std::string(to_string(v)));
    }
    const auto xywh = c.box.to_xywh();
    return {
        {"image_id", c.image_id},
        {"bbox", {xywh[0], xywh[1], xywh[2], xywh[3]}},
        {"category_id", c.category_id},
        {"score", stable(c.score)},
        {"supporting_views", std::move(views)},
        {"stage", std::string(to_string(c.stage))},
    };
}

json to_json(const PipelineReport& r)
{
    json images = json::array();
    for (const ImageOutcome& o : r.images) {
        images.push_back({
            {"image_id", o.image_id},
            {"stage1_candidates", o.trace.stage1.size()},
            {"stage2_candidates", o.trace.stage2.size()},
            {"stage2_merged", o.merged},
            {"stage3_dropped", o.ladder_dropped},
            {"cam_kept", o.cam_kept},
            {"cam_adjusted", o.cam_adjusted},
            {"cam_dropped", o.cam_dropped},
            {"output_boxes", o.trace.stage4.size()},
            {"warnings", o.warnings},
        });
    }
    return {
        {"flagged_images", r.flagged_images},
        {"stage1_candidates", r.stage1_candidates},
        {"stage2_candidates", r.stage2_candidates},
        {"stage2_merged", r.stage2_merged},
        {"stage3_kept", r.stage3_kept},
        {"stage3_dropped", r.stage3_dropped},
        {"cam_kept", r.cam_kept},
        {"cam_adjusted", r.cam_adjusted},
        {"cam_dropped", r.cam_dropped},
        {"output_annotations", r.output_annotations},
        {"zero_box_images", r.zero_box_images},
        {"images", std::move(images)},
    };
}

json to_json(const LadderConfig& l)
{
    json rungs = json::array();
    for (const LadderRung& r : l.rungs) {
        json j = {{"lo", r.lo}, {"hi", r.hi}, {"rule", std::string(to_string(r.rule))}};
        if (r.rule == LadderRule::Top1MatchAndConfidence) {
            j["theta"] = r.theta;
        }
        rungs.push_back(std::move(j));
    }
    return rungs;
}

LadderConfig ladder_from_json(const json& j)
{
    if (j.is_string()) {
        return LadderConfig::named(j.get<std::string>());
    }
    if (!j.is_array()) {
        throw DomainError("ladder must be a name or an array of rungs");
    }
    LadderConfig out;
    for (const json& r : j) {
        LadderRung rung;
        try {
            rung.lo = r.at("lo").get<double>();
            rung.hi = r.at("hi").get<double>();
            const std::string name = r.at("rule").get<std::string>();
            const auto rule = ladder_rule_from_string(name);
            if (!rule) {
                throw DomainError("unknown ladder rule '" + name + "'");
            }
            rung.rule = *rule;
            if (rung.rule == LadderRule::Top1MatchAndConfidence) {
                rung.theta = r.at("theta").get<double>();
            }
        } catch (const json::exception& e) {
            throw DomainError(std::string("ladder rung: ") + e.what());
        }
        out.rungs.push_back(rung);
    }
    out.validate();
    return out;
}

}  // namespace annofix
