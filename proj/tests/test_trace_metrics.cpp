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

#include "annofix/anomaly.hpp"
#include "annofix/error.hpp"
#include "annofix/trace_metrics.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace annofix;
using annofix::testing::uniform;

namespace {

TraceSample sample(ImageId id, std::int64_t epoch, double rpn_bbox, std::int64_t matched, std::int64_t fp,
                   std::int64_t gt)
{
    TraceSample s;
    s.image_id = id;
    s.epoch = epoch;
    s.loss_rpn_bbox = rpn_bbox;
    s.n_matched = matched;
    s.n_false_positive = fp;
    s.n_ground_truth = gt;
    s.learning_rate = 1.0;
    return s;
}

std::vector<FeatureVector> rows_of(const std::vector<Features>& v)
{
    std::vector<FeatureVector> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back({static_cast<ImageId>(i), v[i]});
    }
    return out;
}

}  // namespace

TEST(NormalizeRegressionLoss, Examples)
{
    EXPECT_EQ(normalize_regression_loss(2.0, 4, 1), 1.0);
    EXPECT_EQ(normalize_regression_loss(2.0, 4, 0), 0.5);
    EXPECT_EQ(normalize_regression_loss(1.5, 0, 3), 6.0);
}

TEST(NormalizeRegressionLoss, RejectsNegativeLoss)
{
    EXPECT_THROW(normalize_regression_loss(-0.1, 1, 0), DomainError);
    EXPECT_THROW(normalize_regression_loss(std::nan(""), 1, 0), DomainError);
}

TEST(NormalizeRegressionLoss, MonotoneInFalsePositivesProperty)
{
    std::mt19937_64 rng(101);
    for (int i = 0; i < 10000; ++i) {
        const double loss = uniform(rng, 1e-6, 50.0);
        const auto matched = static_cast<std::int64_t>(rng() % 200);
        const auto fp = static_cast<std::int64_t>(rng() % 200);
        const auto more = fp + 1 + static_cast<std::int64_t>(rng() % 50);
        EXPECT_LT(normalize_regression_loss(loss, matched, fp), normalize_regression_loss(loss, matched, more));
    }
}

TEST(AdjustZeroLoss, Examples)
{
    EXPECT_EQ(adjust_zero_loss(0.0, 3, 3.7), 3.7);
    EXPECT_EQ(adjust_zero_loss(0.8, 3, 3.7), 0.8);
    EXPECT_EQ(adjust_zero_loss(0.0, 0, 3.7), 0.0);
}

TEST(AdjustZeroLoss, NeverZeroWithTruthProperty)
{
    std::mt19937_64 rng(103);
    for (int i = 0; i < 10000; ++i) {
        const double loss = rng() % 2 ? 0.0 : uniform(rng, 1e-9, 5.0);
        const auto gt = 1 + static_cast<std::int64_t>(rng() % 20);
        EXPECT_GT(adjust_zero_loss(loss, gt, uniform(rng, 1e-9, 5.0)), 0.0);
    }
}

TEST(PrepareTraces, HistoryRunsPerEpochInFileOrder)
{
    std::vector<TraceSample> s = {
        sample(1, 0, 2.0, 4, 1, 2),  // 1.0
        sample(2, 0, 0.0, 0, 0, 3),  // zero with truth: running max so far, 1.0
        sample(3, 0, 0.0, 0, 0, 0),  // no truth: stays 0
        sample(4, 0, 9.0, 3, 0, 1),  // 3.0
        sample(2, 1, 0.0, 0, 0, 3),  // epoch 1 has no history yet: 0
        sample(1, 1, 4.0, 1, 0, 1),  // 4.0
        sample(3, 1, 0.0, 2, 0, 5),  // 4.0
        sample(4, 1, 1.0, 1, 0, 1),  // 1.0
    };
    s[0].grad_cls = 0.02;
    s[0].learning_rate = 0.01;
    s[5].grad_cls = 0.5;

    const auto mean = prepare_traces(s);
    ASSERT_EQ(mean.size(), 4U);
    EXPECT_EQ(mean[0].image_id, 1);
    EXPECT_DOUBLE_EQ(mean[0].z[1], (1.0 + 4.0) / 2);
    EXPECT_DOUBLE_EQ(mean[1].z[1], (1.0 + 0.0) / 2);
    EXPECT_DOUBLE_EQ(mean[2].z[1], (0.0 + 4.0) / 2);
    EXPECT_DOUBLE_EQ(mean[3].z[1], (3.0 + 1.0) / 2);
    EXPECT_DOUBLE_EQ(mean[0].z[6], (2.0 + 0.5) / 2);

    const auto last = prepare_traces(s, {EpochAggregation::LastEpoch});
    EXPECT_DOUBLE_EQ(last[0].z[1], 4.0);
    EXPECT_DOUBLE_EQ(last[0].z[6], 0.5);
    EXPECT_DOUBLE_EQ(last[2].z[1], 4.0);
}

TEST(PrepareTraces, ClassificationLossesPassThrough)
{
    TraceSample s = sample(9, 0, 0.0, 0, 0, 0);
    s.loss_rpn_cls = 0.0;
    s.n_ground_truth = 4;
    s.loss_cls = 1.25;
    const auto rows = prepare_traces(std::vector<TraceSample>{s});
    EXPECT_EQ(rows[0].z[0], 0.0);
    EXPECT_EQ(rows[0].z[2], 1.25);
}

TEST(FitNormalization, Examples)
{
    Features same{1, 2, 3, 4, 5, 6, 7, 8};
    const auto constant = fit_normalization(rows_of({same, same, same}));
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
        EXPECT_EQ(constant.std[i], 0.0);
        EXPECT_TRUE(constant.constant[i]);
        EXPECT_EQ(constant.apply(i, same[i]), 0.0);
    }

    Features a{};
    Features b{};
    a[0] = 1.0;
    b[0] = 3.0;
    const auto two = fit_normalization(rows_of({a, b}));
    EXPECT_EQ(two.mean[0], 2.0);
    EXPECT_EQ(two.std[0], 1.0);
    EXPECT_FALSE(two.constant[0]);
    EXPECT_TRUE(two.constant[1]);

    EXPECT_THROW(fit_normalization(std::span<const FeatureVector>{}), DomainError);
}

TEST(FitNormalization, MatchesTextbookOracle)
{
    std::mt19937_64 rng(107);
    std::vector<Features> corpus(100);
    for (auto& f : corpus) {
        for (std::size_t i = 0; i < kFeatureDim; ++i) {
            f[i] = uniform(rng, -3.0, 3.0) * static_cast<double>(i + 1) + static_cast<double>(i);
        }
    }
    const auto stats = fit_normalization(rows_of(corpus));
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
        // one-pass sum / sum-of-squares in extended precision: a different route to the same numbers
        long double s = 0;
        long double ss = 0;
        for (const auto& f : corpus) {
            s += f[i];
            ss += static_cast<long double>(f[i]) * f[i];
        }
        const long double m = s / 100;
        const long double var = ss / 100 - m * m;
        EXPECT_NEAR(stats.mean[i], static_cast<double>(m), 1e-12);
        EXPECT_NEAR(stats.std[i], std::sqrt(static_cast<double>(var)), 1e-10);
        EXPECT_EQ(stats.min[i], std::min_element(corpus.begin(), corpus.end(), [&](auto& x, auto& y) {
                                    return x[i] < y[i];
                                })->at(i));
    }
}

TEST(FitNormalization, ZScoredCorpusIsStandardProperty)
{
    std::mt19937_64 rng(109);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Features> corpus(20 + rng() % 200);
        for (auto& f : corpus) {
            for (std::size_t i = 0; i < kFeatureDim; ++i) {
                f[i] = uniform(rng, -100.0, 100.0);
            }
        }
        const auto stats = fit_normalization(rows_of(corpus));
        for (std::size_t i = 0; i < kFeatureDim; ++i) {
            double s = 0;
            double ss = 0;
            for (const auto& f : corpus) {
                const double z = stats.apply(i, f[i]);
                s += z;
                ss += z * z;
            }
            const double n = static_cast<double>(corpus.size());
            EXPECT_NEAR(s / n, 0.0, 1e-9);
            EXPECT_NEAR(std::sqrt(ss / n - (s / n) * (s / n)), 1.0, 1e-9);
        }
    }
}

TEST(FitNormalization, MinMaxScheme)
{
    Features a{};
    Features b{};
    Features c{};
    a[2] = 2.0;
    b[2] = 4.0;
    c[2] = 10.0;
    const auto stats = fit_normalization(rows_of({a, b, c}), NormalizationScheme::MinMax);
    EXPECT_EQ(stats.apply(2, 2.0), 0.0);
    EXPECT_EQ(stats.apply(2, 4.0), 0.25);
    EXPECT_EQ(stats.apply(2, 10.0), 1.0);
}

TEST(AssembleFeatures, Examples)
{
    std::mt19937_64 rng(113);
    std::vector<Features> corpus(10);
    for (auto& f : corpus) {
        for (auto& v : f) {
            v = uniform(rng, 0, 1);
        }
    }
    const auto rows = rows_of(corpus);
    const auto stats = fit_normalization(rows);
    const WeightConfig loss_only{1.0, {0.25, 0.25, 0.25, 0.25}, true};
    for (const auto& r : rows) {
        const auto out = assemble_features(r, stats, loss_only);
        for (std::size_t i = 4; i < kFeatureDim; ++i) {
            EXPECT_EQ(out.z[i], 0.0);
        }
    }

    // stats that turn every feature into exactly 1
    NormalizationStats ones;
    ones.mean.fill(0.0);
    ones.std.fill(1.0);
    const WeightConfig half{0.5, {0.25, 0.25, 0.25, 0.25}, true};
    const auto out = assemble_features(FeatureVector{1, {1, 1, 1, 1, 1, 1, 1, 1}}, ones, half);
    for (double v : out.z) {
        EXPECT_EQ(v, 0.125);
    }
}

TEST(AssembleFeatures, DefaultWeightingFixture)
{
    const std::vector<Features> corpus = {
        {0.5, 1.2, 0.9, 2.0, 3.0, 0.1, 7.0, 1.0},
        {0.7, 0.4, 1.5, 2.0, 1.0, 0.3, 5.0, 2.0},
        {0.1, 2.0, 0.3, 2.0, 2.0, 0.2, 6.0, 4.0},
        {1.1, 0.8, 0.6, 2.0, 6.0, 0.6, 2.0, 3.0},
    };
    // frozen from an independent computation (Python statistics.pstdev)
    const std::vector<Features> expected = {
        {-0.058243520603649034, 0.011832159566199214, 0.035496478698597726, 0.0, 0.0, -0.032071349029490936,
         0.0962140470884728, -0.12074767078498866},
        {0.058243520603649034, -0.08282511696339463, 0.31946830828737927, 0.0, -0.0962140470884728, 0.0, 0.0,
         -0.04024922359499622},
        {-0.2912176030182453, 0.10648943609579306, -0.2484753508901838, 0.0, -0.0481070235442364,
         -0.016035674514745465, 0.0481070235442364, 0.12074767078498866},
        {0.29121760301824534, -0.0354964786985977, -0.10648943609579306, 0.0, 0.1443210706327092, 0.0481070235442364,
         -0.1443210706327092, 0.04024922359499622},
    };
    const auto rows = rows_of(corpus);
    const auto stats = fit_normalization(rows);
    const WeightConfig w;
    EXPECT_TRUE(stats.constant[3]);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto out = assemble_features(rows[r], stats, w);
        for (std::size_t i = 0; i < kFeatureDim; ++i) {
            EXPECT_NEAR(out.z[i], expected[r][i], 1e-15) << "row " << r << " feature " << i;
        }
    }
}

TEST(AssembleFeatures, WeightVector)
{
    const Features w = weight_vector(WeightConfig{});
    const Features expected{0.21, 0.07, 0.21, 0.21, 0.09, 0.03, 0.09, 0.09};
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
        EXPECT_NEAR(w[i], expected[i], 1e-15);
    }
    const Features unweighted = weight_vector(WeightConfig{0.7, {0.3, 0.1, 0.3, 0.3}, false});
    EXPECT_NEAR(unweighted[5], 0.3, 1e-15);
}

TEST(AssembleFeatures, LinearInNormalizedValueProperty)
{
    std::mt19937_64 rng(127);
    NormalizationStats unit;
    unit.mean.fill(0.0);
    unit.std.fill(1.0);
    const WeightConfig w;
    for (int i = 0; i < 1000; ++i) {
        Features zhat{};
        for (auto& v : zhat) {
            v = uniform(rng, -5, 5);
        }
        const double t = uniform(rng, -3, 3);
        Features scaled = zhat;
        for (auto& v : scaled) {
            v *= t;
        }
        const auto a = assemble_features(FeatureVector{0, zhat}, unit, w);
        const auto b = assemble_features(FeatureVector{0, scaled}, unit, w);
        for (std::size_t k = 0; k < kFeatureDim; ++k) {
            EXPECT_NEAR(b.z[k], t * a.z[k], 1e-12);
        }
    }
}

TEST(AssembleFeatures, RankingInvariantToCorpusScaleProperty)
{
    std::mt19937_64 rng(131);
    const auto corpus = annofix::testing::subspace_corpus(7, 300, 3, 0.05, 0.1).features;
    const WeightConfig w;
    // a fixed scorer so only the features change between runs
    Eigen::MatrixXd enc = Eigen::MatrixXd::Zero(2, 8);
    Eigen::MatrixXd dec = Eigen::MatrixXd::Zero(8, 2);
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 8; ++c) {
            enc(r, c) = uniform(rng, -1, 1);
            dec(c, r) = uniform(rng, -1, 1);
        }
    }
    const LinearAutoencoder scorer(enc, Eigen::VectorXd::Zero(2), dec, Eigen::VectorXd::Zero(8));

    auto ranking = [&](double t) {
        std::vector<FeatureVector> scaled = corpus;
        for (auto& f : scaled) {
            for (auto& v : f.z) {
                v *= t;
            }
        }
        const auto stats = fit_normalization(scaled);
        std::vector<FeatureVector> assembled;
        for (const auto& f : scaled) {
            assembled.push_back(assemble_features(f, stats, w));
        }
        const auto scores = score_all(scorer, assembled);
        std::vector<std::size_t> order(scores.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a].error > scores[b].error; });
        return order;
    };
    const auto base = ranking(1.0);
    for (double t : {0.001, 0.37, 2.0, 1234.5}) {
        EXPECT_EQ(ranking(t), base) << "t=" << t;
    }
}

TEST(WeightConfig, Validation)
{
    EXPECT_NO_THROW(WeightConfig{}.validate());
    EXPECT_THROW((WeightConfig{1.2, {0.25, 0.25, 0.25, 0.25}, true}.validate()), DomainError);
    EXPECT_THROW((WeightConfig{0.5, {0.3, 0.3, 0.3, 0.3}, true}.validate()), DomainError);
    EXPECT_THROW((WeightConfig{0.5, {-0.1, 0.5, 0.3, 0.3}, true}.validate()), DomainError);
}

TEST(FeatureSerialization, RoundTrip)
{
    const FeatureVector f{5, {0.125, -1.5, 2.0, 0.0, 3.25, 1e-3, -7.0, 8.5}};
    const auto back = std::move(parse_features(write_ndjson({to_json(f)}))).value();
    ASSERT_EQ(back.size(), 1U);
    EXPECT_EQ(back[0], f);

    NormalizationStats s;
    s.mean = {1, 2, 3, 4, 5, 6, 7, 8};
    s.std = {0.5, 0, 1, 1, 1, 1, 1, 2};
    s.constant[1] = true;
    const auto parsed = parse_normstats(to_json(s).dump());
    EXPECT_EQ(parsed.mean, s.mean);
    EXPECT_EQ(parsed.std, s.std);
    EXPECT_EQ(parsed.constant, s.constant);

    auto bad = parse_features("{\"image_id\": 1, \"z\": [1, 2, 3]}\n");
    ASSERT_EQ(bad.errors.size(), 1U);
    EXPECT_EQ(bad.errors[0].field, "z");
}
