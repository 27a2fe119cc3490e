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

// Four-stage pseudo-label refinement for images flagged as mis-annotated:
//   1. cross-view consensus over six invertible views
//   2. same-class IoU deduplication
//   3. score-stratified classifier validation ("ladder")
//   4. activation-map (CAM) spread / concentration refinement

#include "annofix/geometry.hpp"
#include "annofix/interchange.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace annofix {

enum class Provenance { Consensus, Merged, Validated, CamKept, CamAdjusted };
std::string_view to_string(Provenance p) noexcept;

struct CandidateBox {
    ImageId image_id = 0;
    Box box;  // original-image coordinates
    CategoryId category_id = 0;
    double score = 0.0;
    std::set<TransformKind> supporting_views;
    Provenance stage = Provenance::Consensus;

    friend bool operator==(const CandidateBox&, const CandidateBox&) = default;
};

// ---------------------------------------------------------------------------------------------------------------------
// stage 1

struct ConsensusConfig {
    int min_views = 4;
    double cluster_iou = 0.5;
    TransformFactors factors;
};

/// Back-projects every detection, clusters greedily by descending score (label-free, IoU against each
/// cluster's seed), and emits one candidate per cluster in which some label is seen in >= min_views
/// distinct views. The candidate takes the label of the cluster's highest-score member, the mean box of
/// members carrying that label, and the maximum member score.
std::vector<CandidateBox> stage1_consensus(std::span<const Detection> detections, const ImageDims& dims,
                                           const ConsensusConfig& config = {});

// ---------------------------------------------------------------------------------------------------------------------
// stage 2

enum class DedupeMode { KeepMax, MergeExtent };

struct DedupeConfig {
    double iou_thresh = 0.8;
    DedupeMode mode = DedupeMode::MergeExtent;
};

/// Groups candidates transitively by (IoU >= iou_thresh and equal category). Singletons pass through;
/// larger groups collapse to one candidate per `mode`. Output is ordered by each group's first member.
std::vector<CandidateBox> stage2_dedupe(std::span<const CandidateBox> candidates, const DedupeConfig& config = {});

// ---------------------------------------------------------------------------------------------------------------------
// stage 3

enum class LadderRule { AlwaysKeep, Top3Match, Top1Match, Top1MatchAndConfidence };

struct LadderRung {
    double lo = 0.0;  // inclusive
    double hi = 1.0;  // exclusive, except a rung ending at 1 also owns score 1
    LadderRule rule = LadderRule::AlwaysKeep;
    double theta = 0.0;  // p_c threshold for Top1MatchAndConfidence
};

struct LadderConfig {
    std::vector<LadderRung> rungs;

    /// The rung owning `score`, or nullptr when none does.
    const LadderRung* find(double score) const noexcept;

    /// Throws DomainError unless the rungs partition [0,1] without overlap and every theta lies in [0,1].
    void validate() const;

    /// s >= 0.6 keep; [0.3,0.6) top-3; [0.2,0.3) top-1; [0.1,0.2) top-1 and p_c >= 0.8; [0,0.1) top-1 and p_c >= 0.9.
    static LadderConfig algorithm();

    /// s >= 0.5 keep; [0.3,0.5) top-3; [0.2,0.3) top-1; [0.1,0.2) p_c >= 0.5; [0.08,0.1) p_c >= 0.6; [0,0.08) p_c >= 0.7.
    static LadderConfig prose();

    static LadderConfig named(std::string_view name);
};

std::string_view to_string(LadderRule rule) noexcept;
std::optional<LadderRule> ladder_rule_from_string(std::string_view name) noexcept;

enum class Verdict { Keep, Drop };

/// Whether a candidate survives classifier validation. `verdict` may be null only when the owning rung
/// is AlwaysKeep; otherwise DomainError (the adapter failed to supply one).
Verdict stage3_validate(const CandidateBox& candidate, const ClassifierVerdict* verdict, const LadderConfig& ladder);

/// True when the candidate's rung needs a classifier verdict.
bool needs_verdict(const CandidateBox& candidate, const LadderConfig& ladder);

// ---------------------------------------------------------------------------------------------------------------------
// stage 4

struct CamThresholds {
    double var_alpha = 0.08;
    double conc_beta = 0.5;
    double mass_tau = 0.15;

    void validate() const;
};

struct CamStatistics {
    double variance = 0.0;       // mass-weighted squared spread / squared grid diagonal
    double concentration = 0.0;  // mass fraction in cells >= half the peak
};

/// Throws DomainError for an empty or zero-mass grid.
CamStatistics cam_statistics(const ActivationGrid& grid);

struct CamKept {};
struct CamAdjusted {
    Box box;
};
struct CamDropped {
    std::string reason;
};
using CamOutcome = std::variant<CamKept, CamAdjusted, CamDropped>;

/// Kept when spread <= var_alpha; otherwise adjusted to the tight rectangle of cells >= mass_tau * peak
/// (mapped onto the candidate box and clipped to the image) when concentration >= conc_beta; otherwise dropped.
CamOutcome stage4_cam_refine(const CandidateBox& candidate, const ActivationGrid& grid, const CamThresholds& th,
                             const ImageDims& dims);

// ---------------------------------------------------------------------------------------------------------------------
// end-to-end

struct PipelineConfig {
    ConsensusConfig consensus;
    DedupeConfig dedupe;
    LadderConfig ladder = LadderConfig::algorithm();
    CamThresholds cam;
    unsigned jobs = 1;
};

/// Candidate state after a given stage, for debugging dumps.
struct StageTrace {
    std::vector<CandidateBox> stage1;
    std::vector<CandidateBox> stage2;  // index == box_ref suffix
    std::vector<CandidateBox> stage3;
    std::vector<CandidateBox> stage4;
};

struct ImageOutcome {
    ImageId image_id = 0;
    StageTrace trace;
    std::size_t merged = 0;  // stage-1 candidates absorbed by stage-2 grouping
    std::size_t ladder_dropped = 0;
    std::size_t cam_kept = 0;
    std::size_t cam_adjusted = 0;
    std::size_t cam_dropped = 0;
    std::vector<std::string> warnings;
};

struct PipelineInputs {
    const CocoDocument* original = nullptr;
    std::set<ImageId> flagged;
    std::span<const Detection> detections;
    std::span<const ClassifierVerdict> verdicts;
    std::span<const ActivationGrid> grids;
};

struct PipelineReport {
    std::size_t flagged_images = 0;
    std::size_t stage1_candidates = 0;
    std::size_t stage2_candidates = 0;
    std::size_t stage2_merged = 0;
    std::size_t stage3_dropped = 0;
    std::size_t stage3_kept = 0;
    std::size_t cam_kept = 0;
    std::size_t cam_adjusted = 0;
    std::size_t cam_dropped = 0;
    std::size_t output_annotations = 0;
    std::vector<ImageId> zero_box_images;
    std::vector<ImageOutcome> images;  // ascending image_id
};

struct PipelineResult {
    nlohmann::json refined;  // COCO document
    PipelineReport report;
};

/// Runs all four stages for one image. Verdicts and grids are looked up by box_ref.
ImageOutcome refine_image(ImageId image_id, const ImageDims& dims, std::span<const Detection> detections,
                          const std::map<std::string, const ClassifierVerdict*>& verdicts,
                          const std::map<std::string, const ActivationGrid*>& grids, const PipelineConfig& config,
                          int last_stage = 4);

/// Refines every flagged image and rebuilds the COCO document: annotations of unflagged images are copied
/// verbatim, flagged images get their refined boxes appended (ids continue after the largest existing id).
/// Throws DomainError listing image ids whose inputs are missing.
PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config);

/// Stages 1..last_stage only; returns per-image traces without building a document.
std::vector<ImageOutcome> run_stages(const PipelineInputs& inputs, const PipelineConfig& config, int last_stage);

nlohmann::json to_json(const CandidateBox& c);
nlohmann::json to_json(const PipelineReport& r);
nlohmann::json to_json(const LadderConfig& l);
LadderConfig ladder_from_json(const nlohmann::json& j);

}  // namespace annofix
