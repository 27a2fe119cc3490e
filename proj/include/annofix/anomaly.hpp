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
#include "annofix/trace_metrics.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace annofix {

/// Anything that turns a feature vector into a non-negative anomaly score (higher = more anomalous).
class AnomalyScorer {
public:
    virtual ~AnomalyScorer() = default;
    virtual double score(const Features& z) const = 0;
};

struct AutoencoderConfig {
    int k = 4;             // bottleneck width, 1 <= k < 8
    int epochs = 2000;
    double step = 0.05;    // full-batch gradient-descent step
    std::uint64_t seed = 0;

    void validate() const;
};

/// z -> W_d (W_e z + b_e) + b_d, trained by full-batch gradient descent on mean squared reconstruction error.
class LinearAutoencoder final : public AnomalyScorer {
public:
    LinearAutoencoder() = default;
    LinearAutoencoder(Eigen::MatrixXd encoder, Eigen::VectorXd encoder_bias, Eigen::MatrixXd decoder,
                      Eigen::VectorXd decoder_bias);

    int k() const noexcept { return static_cast<int>(encoder_.rows()); }
    const Eigen::MatrixXd& encoder() const noexcept { return encoder_; }
    const Eigen::VectorXd& encoder_bias() const noexcept { return encoder_bias_; }
    const Eigen::MatrixXd& decoder() const noexcept { return decoder_; }
    const Eigen::VectorXd& decoder_bias() const noexcept { return decoder_bias_; }

    Eigen::VectorXd reconstruct(const Features& z) const;

    /// Squared Euclidean reconstruction error.
    double score(const Features& z) const override;

    /// Mean reconstruction error over the training set, recorded before the first epoch and after each one.
    const std::vector<double>& loss_history() const noexcept { return loss_history_; }
    const AutoencoderConfig& config() const noexcept { return config_; }

    friend LinearAutoencoder train(std::span<const FeatureVector> features, const AutoencoderConfig& config);
    friend LinearAutoencoder model_from_json(const nlohmann::json& doc);

private:
    Eigen::MatrixXd encoder_;       // k x 8
    Eigen::VectorXd encoder_bias_;  // k
    Eigen::MatrixXd decoder_;       // 8 x k
    Eigen::VectorXd decoder_bias_;  // 8
    AutoencoderConfig config_;
    std::vector<double> loss_history_;
};

/// Throws DomainError on empty input or fewer than 2k rows, DivergedError when a weight becomes non-finite.
LinearAutoencoder train(std::span<const FeatureVector> features, const AutoencoderConfig& config);

nlohmann::json to_json(const LinearAutoencoder& model);
LinearAutoencoder model_from_json(const nlohmann::json& doc);

struct AnomalyScore {
    ImageId image_id = 0;
    double error = 0.0;
    bool flagged = false;

    friend bool operator==(const AnomalyScore&, const AnomalyScore&) = default;
};

std::vector<AnomalyScore> score_all(const AnomalyScorer& scorer, std::span<const FeatureVector> features);

/// Flags exactly ceil(fraction * n) highest-error entries; ties go to the smaller image_id.
/// Input order is preserved. Throws DomainError for an empty list or fraction outside (0,1).
std::vector<AnomalyScore> flag_top_fraction(std::vector<AnomalyScore> scores, double fraction);

nlohmann::json to_json(const AnomalyScore& s);
ParseResult<AnomalyScore> parse_scores(std::string_view text);

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct FixedMetrics {
    ConfusionCounts counts;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<std::string> warnings;  // one entry per metric whose denominator was zero
};

/// Accuracy, precision, recall and F1 from counts; zero denominators yield 0 plus a warning.
FixedMetrics fixed_metrics(const ConfusionCounts& counts);

/// Joins flags with oracle labels by image_id. Throws DomainError listing ids present in only one input.
FixedMetrics evaluate_fixed(std::span<const AnomalyScore> flags, std::span<const OracleLabel> oracle);

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    double threshold = 0.0;
};

struct CurveReport {
    double auroc = 0.0;
    double prauc = 0.0;
    std::vector<CurvePoint> roc;  // (false-positive rate, true-positive rate)
    std::vector<CurvePoint> pr;   // (recall, precision)
};

/// Threshold sweep over distinct scores with trapezoidal areas. The PR curve starts at (recall 0, precision 1).
/// Throws DomainError when the oracle lacks either class or ids do not match.
CurveReport evaluate_curves(std::span<const AnomalyScore> scores, std::span<const OracleLabel> oracle);

/// Lower-level entry used by evaluate_curves: parallel score / label arrays.
CurveReport evaluate_curves(std::span<const double> scores, std::span<const bool> positive);

nlohmann::json to_json(const FixedMetrics& m);
nlohmann::json to_json(const CurveReport& c);

}  // namespace annofix
