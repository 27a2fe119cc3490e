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

// Per-image training traces -> 8-dim feature vectors for the anomaly detector.
//
// Feature order everywhere: loss_rpn_cls, loss_rpn_bbox, loss_cls, loss_bbox,
//                           grad_rpn_cls, grad_rpn_bbox, grad_cls, grad_bbox.

#include "annofix/interchange.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <span>
#include <vector>

namespace annofix {

inline constexpr std::size_t kFeatureDim = 8;
using Features = std::array<double, kFeatureDim>;

inline constexpr std::array<const char*, kFeatureDim> kFeatureNames = {
    "loss_rpn_cls", "loss_rpn_bbox", "loss_cls", "loss_bbox",
    "grad_rpn_cls", "grad_rpn_bbox", "grad_cls", "grad_bbox",
};

struct FeatureVector {
    ImageId image_id = 0;
    Features z{};

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct WeightConfig {
    double lambda_loss = 0.7;
    std::array<double, 4> component_weights{0.3, 0.1, 0.3, 0.3};  // rpn_cls, rpn_bbox, roi_cls, roi_bbox
    bool weight_gradients = true;  // apply component weights to the gradient half as well

    /// Throws DomainError: lambda outside [0,1], negative weights, or weights not summing to 1 (1e-9).
    void validate() const;
};

enum class NormalizationScheme { ZScore, MinMax };
enum class EpochAggregation { Mean, LastEpoch };

struct NormalizationStats {
    NormalizationScheme scheme = NormalizationScheme::ZScore;
    Features mean{};
    Features std{};  // population convention
    Features min{};
    Features max{};
    std::array<bool, kFeatureDim> constant{};

    /// Normalized value of feature `i`; constant features map to 0.
    double apply(std::size_t i, double value) const noexcept;
};

/// L / max(n_matched, 1) * (1 + n_fp). Throws DomainError on negative or non-finite L.
double normalize_regression_loss(double loss, std::int64_t n_matched, std::int64_t n_fp);

/// history_max when the loss is zero although ground truth exists, otherwise the loss itself.
double adjust_zero_loss(double loss, std::int64_t n_gt, double history_max) noexcept;

/// Raw (un-normalized) metric vector of one sample in feature order.
Features raw_metrics(const TraceSample& sample) noexcept;

struct TracePreparation {
    EpochAggregation aggregation = EpochAggregation::Mean;
};

/// Applies the regression-loss normalization and zero-loss substitution to both regression-loss fields,
/// divides gradients by the learning rate, then aggregates epochs into one row per image (ascending
/// image_id). The zero-loss history is a running maximum per loss component within each epoch, in file
/// order.
std::vector<FeatureVector> prepare_traces(std::span<const TraceSample> samples, const TracePreparation& options = {});

/// Per-feature statistics over the corpus. Throws DomainError on an empty corpus.
NormalizationStats fit_normalization(std::span<const FeatureVector> rows,
                                     NormalizationScheme scheme = NormalizationScheme::ZScore);
NormalizationStats fit_normalization(std::span<const TraceSample> samples,
                                     NormalizationScheme scheme = NormalizationScheme::ZScore);

/// Normalizes then weights one row: lambda * c_i for losses, (1 - lambda) * c_i for gradients.
FeatureVector assemble_features(const FeatureVector& row, const NormalizationStats& stats, const WeightConfig& w);
FeatureVector assemble_features(const TraceSample& sample, const NormalizationStats& stats, const WeightConfig& w);

/// Weights applied to an already-normalized vector.
Features weight_vector(const WeightConfig& w) noexcept;

nlohmann::json to_json(const FeatureVector& f);
nlohmann::json to_json(const NormalizationStats& s);
ParseResult<FeatureVector> parse_features(std::string_view text);
NormalizationStats parse_normstats(std::string_view text);

}  // namespace annofix
