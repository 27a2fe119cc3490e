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

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <numeric>

using namespace annofix;
using annofix::testing::uniform;

namespace {

/// AUROC as P(score_pos > score_neg) + 0.5 P(tie), enumerated over every pair.
double pairwise_auroc(const std::vector<double>& scores, const std::vector<bool>& positive)
{
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!positive[i]) {
            continue;
        }
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (positive[j]) {
                continue;
            }
            pairs += 1.0;
            wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
        }
    }
    return wins / pairs;
}

CurveReport curves(const std::vector<double>& scores, const std::vector<bool>& positive)
{
    std::unique_ptr<bool[]> flags(new bool[positive.size()]);
    std::copy(positive.begin(), positive.end(), flags.get());
    return evaluate_curves(scores, std::span<const bool>(flags.get(), positive.size()));
}

std::vector<AnomalyScore> scores_of(const std::vector<double>& errors)
{
    std::vector<AnomalyScore> out;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        out.push_back({static_cast<ImageId>(i + 1), errors[i], false});
    }
    return out;
}

std::set<ImageId> flagged_ids(const std::vector<AnomalyScore>& s)
{
    std::set<ImageId> out;
    for (const auto& x : s) {
        if (x.flagged) {
            out.insert(x.image_id);
        }
    }
    return out;
}

}  // namespace

TEST(Train, RecoversExactSubspace)
{
    const auto corpus = annofix::testing::subspace_corpus(3, 400, 2, 0.0, 0.0);
    const auto model = train(corpus.features, {2, 5000, 0.1, 0});
    double mean = 0.0;
    for (const auto& f : corpus.features) {
        mean += model.score(f.z);
    }
    mean /= static_cast<double>(corpus.features.size());
    EXPECT_LT(mean, 1e-6);
    EXPECT_NEAR(model.loss_history().back(), mean, 1e-9);
}

TEST(Train, ConstantDataIsAbsorbedByBiases)
{
    std::vector<FeatureVector> same(10, FeatureVector{0, {0.3, -1.0, 2.0, 0.5, 0.0, 1.5, -0.25, 4.0}});
    for (std::size_t i = 0; i < same.size(); ++i) {
        same[i].image_id = static_cast<ImageId>(i);
    }
    const auto model = train(same, {1, 2000, 0.02, 0});
    EXPECT_LT(model.score(same[0].z), 1e-10);
}

TEST(Train, DeterministicPerSeed)
{
    const auto corpus = annofix::testing::subspace_corpus(5, 200, 3, 0.05, 0.1);
    const auto a = train(corpus.features, {4, 300, 0.05, 99});
    const auto b = train(corpus.features, {4, 300, 0.05, 99});
    const auto c = train(corpus.features, {4, 300, 0.05, 100});
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    EXPECT_TRUE(a.encoder() == b.encoder());
    EXPECT_TRUE(a.decoder() == b.decoder());
    EXPECT_FALSE(a.encoder() == c.encoder());
}

TEST(Train, LossHistoryIsNonIncreasing)
{
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const auto corpus = annofix::testing::subspace_corpus(seed, 500, 3, 0.01, 0.1);
        const auto model = train(corpus.features, {4, 1000, 0.05, seed});
        const auto& h = model.loss_history();
        ASSERT_EQ(h.size(), 1001U);
        for (std::size_t i = 1; i < h.size(); ++i) {
            EXPECT_LE(h[i], h[i - 1] * (1.0 + 1e-12)) << "epoch " << i;
        }
        EXPECT_LT(h.back(), h.front());
    }
}

TEST(Train, Errors)
{
    EXPECT_THROW(train({}, {}), DomainError);
    std::vector<FeatureVector> three(3);
    EXPECT_THROW(train(three, {2, 10, 0.05, 0}), DomainError);
    EXPECT_THROW(train(three, {8, 10, 0.05, 0}), DomainError);
    EXPECT_THROW(train(three, {0, 10, 0.05, 0}), DomainError);

    std::vector<FeatureVector> big(20);
    for (std::size_t i = 0; i < big.size(); ++i) {
        big[i].z.fill(1e6 * static_cast<double>(i));
    }
    EXPECT_THROW(train(big, {2, 50, 0.5, 0}), DivergedError);
}

TEST(Score, Examples)
{
    // decode(encode(z)) = z for a model that passes the first coordinate straight through
    Eigen::MatrixXd enc = Eigen::MatrixXd::Zero(1, 8);
    Eigen::MatrixXd dec = Eigen::MatrixXd::Zero(8, 1);
    enc(0, 0) = 1.0;
    dec(0, 0) = 1.0;
    const LinearAutoencoder pass(enc, Eigen::VectorXd::Zero(1), dec, Eigen::VectorXd::Zero(8));
    EXPECT_EQ(pass.score({4.5, 0, 0, 0, 0, 0, 0, 0}), 0.0);

    const LinearAutoencoder zero(Eigen::MatrixXd::Zero(1, 8), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(8, 1),
                                 Eigen::VectorXd::Zero(8));
    EXPECT_EQ(zero.score({1, 0, 0, 0, 0, 0, 0, 0}), 1.0);

    // by hand: h = 1*1 + 0.5 = 1.5; recon = (2h, 1, 0, 0, 0, 0, 0, h) = (3, 1, 0, .., 1.5)
    // residual = (1-3, 2-1, 0, .., 3-1.5) -> 4 + 1 + 2.25
    Eigen::VectorXd be(1);
    be << 0.5;
    Eigen::VectorXd bd = Eigen::VectorXd::Zero(8);
    bd(1) = 1.0;
    dec(0, 0) = 2.0;
    dec(7, 0) = 1.0;
    const LinearAutoencoder fixture(enc, be, dec, bd);
    EXPECT_DOUBLE_EQ(fixture.score({1, 2, 0, 0, 0, 0, 0, 3}), 7.25);
}

TEST(Score, NonNegativeProperty)
{
    const auto corpus = annofix::testing::subspace_corpus(8, 300, 3, 0.1, 0.2);
    const auto model = train(corpus.features, {3, 100, 0.05, 1});
    for (const auto& s : score_all(model, corpus.features)) {
        EXPECT_GE(s.error, 0.0);
    }
}

TEST(Model, JsonRoundTripIsExact)
{
    const auto corpus = annofix::testing::subspace_corpus(9, 100, 3, 0.1, 0.1);
    const auto model = train(corpus.features, {4, 50, 0.05, 4});
    const auto back = model_from_json(nlohmann::json::parse(to_json(model).dump()));
    EXPECT_TRUE(back.encoder() == model.encoder());
    EXPECT_TRUE(back.decoder_bias() == model.decoder_bias());
    for (const auto& f : corpus.features) {
        EXPECT_EQ(back.score(f.z), model.score(f.z));
    }
    EXPECT_THROW(model_from_json(nlohmann::json::parse("{\"k\": 2}")), ParseError);
}

TEST(FlagTopFraction, Examples)
{
    const auto ten = flag_top_fraction(scores_of({5, 1, 9, 3, 7, 2, 8, 4, 6, 0}), 0.35);
    EXPECT_EQ(flagged_ids(ten).size(), 4U);
    EXPECT_EQ(flagged_ids(ten), (std::set<ImageId>{3, 5, 7, 9}));

    std::vector<AnomalyScore> ties;
    for (ImageId id : {40, 7, 13, 2, 99, 21}) {
        ties.push_back({id, 1.0, false});
    }
    EXPECT_EQ(flagged_ids(flag_top_fraction(ties, 0.5)), (std::set<ImageId>{2, 7, 13}));
}

TEST(FlagTopFraction, TwentyDistinctAgainstSortingOracle)
{
    std::mt19937_64 rng(211);
    std::vector<double> errors(20);
    for (auto& e : errors) {
        e = uniform(rng, 0, 10);
    }
    const auto flagged = flag_top_fraction(scores_of(errors), 0.35);
    std::vector<std::pair<double, ImageId>> sorted;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        sorted.emplace_back(errors[i], static_cast<ImageId>(i + 1));
    }
    std::sort(sorted.rbegin(), sorted.rend());
    std::set<ImageId> expected;
    for (std::size_t i = 0; i < 7; ++i) {
        expected.insert(sorted[i].second);
    }
    EXPECT_EQ(flagged_ids(flagged), expected);
    // input order is preserved
    for (std::size_t i = 0; i < flagged.size(); ++i) {
        EXPECT_EQ(flagged[i].image_id, static_cast<ImageId>(i + 1));
    }
}

TEST(FlagTopFraction, CountAndScaleInvarianceProperty)
{
    std::mt19937_64 rng(223);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng() % 300;
        std::vector<double> errors(n);
        for (auto& e : errors) {
            e = rng() % 4 == 0 ? 1.0 : uniform(rng, 0, 5);
        }
        const double f = uniform(rng, 0.01, 0.99);
        const auto base = flag_top_fraction(scores_of(errors), f);
        // random f is never within 1e-9 of an integer multiple of 1/n, so this is plain ceil(f n)
        const std::size_t expected = static_cast<std::size_t>(std::ceil(f * static_cast<double>(n) - 1e-9));
        EXPECT_EQ(flagged_ids(base).size(), expected);
        const double t = uniform(rng, 0.01, 100);
        auto scaled = errors;
        for (auto& e : scaled) {
            e *= t;
        }
        EXPECT_EQ(flagged_ids(flag_top_fraction(scores_of(scaled), f)), flagged_ids(base));
    }
}

TEST(FlagTopFraction, Errors)
{
    EXPECT_THROW(flag_top_fraction({}, 0.3), DomainError);
    EXPECT_THROW(flag_top_fraction(scores_of({1, 2}), 0.0), DomainError);
    EXPECT_THROW(flag_top_fraction(scores_of({1, 2}), 1.0), DomainError);
}

TEST(FixedMetrics, Examples)
{
    const auto combined = fixed_metrics({29267, 11776, 11578, 64645});
    EXPECT_NEAR(combined.accuracy, 0.8008, 0.0005);
    EXPECT_NEAR(combined.f1, 0.7148, 0.0005);
    EXPECT_TRUE(combined.warnings.empty());

    const auto degenerate = fixed_metrics({0, 0, 0, 5});
    EXPECT_EQ(degenerate.accuracy, 1.0);
    EXPECT_EQ(degenerate.precision, 0.0);
    EXPECT_EQ(degenerate.recall, 0.0);
    EXPECT_EQ(degenerate.f1, 0.0);
    EXPECT_EQ(degenerate.warnings.size(), 3U);

    const auto ones = fixed_metrics({1, 1, 1, 1});
    EXPECT_EQ(ones.accuracy, 0.5);
    EXPECT_EQ(ones.precision, 0.5);
    EXPECT_EQ(ones.recall, 0.5);
    EXPECT_EQ(ones.f1, 0.5);
}

TEST(EvaluateFixed, CountsMatchOracleClassesProperty)
{
    std::mt19937_64 rng(227);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<AnomalyScore> flags;
        std::vector<OracleLabel> oracle;
        const std::size_t n = 1 + rng() % 100;
        std::int64_t positives = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto id = static_cast<ImageId>(i * 3 + 1);
            flags.push_back({id, 0.0, rng() % 2 == 0});
            oracle.push_back({id, rng() % 3 == 0});
            positives += oracle.back().erroneous;
        }
        std::shuffle(oracle.begin(), oracle.end(), rng);
        const auto m = evaluate_fixed(flags, oracle);
        EXPECT_EQ(m.counts.tp + m.counts.fn, positives);
        EXPECT_EQ(m.counts.fp + m.counts.tn, static_cast<std::int64_t>(n) - positives);
    }
}

TEST(EvaluateFixed, MismatchedIdsAreListed)
{
    const std::vector<AnomalyScore> flags{{1, 0, true}, {2, 0, false}, {5, 0, false}};
    const std::vector<OracleLabel> oracle{{1, true}, {2, false}, {8, true}};
    try {
        evaluate_fixed(flags, oracle);
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("missing from oracle: 5"), std::string::npos) << msg;
        EXPECT_NE(msg.find("missing from scores: 8"), std::string::npos) << msg;
    }
}

TEST(EvaluateCurves, Examples)
{
    EXPECT_EQ(curves({0.9, 0.8, 0.7, 0.2, 0.1}, {true, true, true, false, false}).auroc, 1.0);
    EXPECT_EQ(curves({0.5, 0.5, 0.5, 0.5}, {true, false, true, false}).auroc, 0.5);

    const std::vector<double> eight{0.9, 0.8, 0.8, 0.6, 0.55, 0.4, 0.3, 0.1};
    const std::vector<bool> labels{true, false, true, true, false, false, true, false};
    EXPECT_NEAR(curves(eight, labels).auroc, pairwise_auroc(eight, labels), 1e-12);
    // 16 pairs: hand count 11.5 wins
    EXPECT_NEAR(pairwise_auroc(eight, labels), 11.5 / 16.0, 1e-15);
}

TEST(EvaluateCurves, SingleClassIsAnError)
{
    EXPECT_THROW(curves({0.1, 0.2}, {true, true}), DomainError);
    EXPECT_THROW(curves({0.1, 0.2}, {false, false}), DomainError);
}

TEST(EvaluateCurves, CurveShape)
{
    const auto c = curves({0.9, 0.5, 0.1}, {true, false, true});
    ASSERT_EQ(c.roc.size(), 4U);
    EXPECT_EQ(c.roc.front().x, 0.0);
    EXPECT_EQ(c.roc.front().y, 0.0);
    EXPECT_EQ(c.roc.back().x, 1.0);
    EXPECT_EQ(c.roc.back().y, 1.0);
    EXPECT_EQ(c.pr.front().x, 0.0);
    EXPECT_EQ(c.pr.front().y, 1.0);
    // PR points: (0,1) (0.5,1) (0.5,0.5) (1,2/3); trapezoids 0.5 + 0 + 0.5*(0.5+2/3)/2
    EXPECT_NEAR(c.prauc, 0.5 + 0.25 * (0.5 + 2.0 / 3.0), 1e-12);
    EXPECT_NEAR(c.auroc, 0.5, 1e-12);
}

TEST(EvaluateCurves, PairwiseOracleProperty)
{
    std::mt19937_64 rng(229);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng() % 60;
        std::vector<double> s(n);
        std::vector<bool> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            // coarse scores force ties
            s[i] = static_cast<double>(rng() % 12) / 4.0;
            y[i] = rng() % 2 == 0;
        }
        y[0] = true;
        y[1] = false;
        const auto c = curves(s, y);
        EXPECT_NEAR(c.auroc, pairwise_auroc(s, y), 1e-9);
        EXPECT_GE(c.prauc, 0.0);
        EXPECT_LE(c.prauc, 1.0);
    }
}

TEST(EvaluateCurves, MonotoneTransformInvarianceProperty)
{
    std::mt19937_64 rng(233);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 10 + rng() % 40;
        std::vector<double> s(n);
        std::vector<bool> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = uniform(rng, -2, 2);
            y[i] = rng() % 2 == 0;
        }
        y[0] = true;
        y[1] = false;
        const double base = curves(s, y).auroc;
        auto ex = s;
        auto affine = s;
        for (std::size_t i = 0; i < n; ++i) {
            ex[i] = std::exp(s[i]);
            affine[i] = 3.5 * s[i] + 11.0;
        }
        EXPECT_NEAR(curves(ex, y).auroc, base, 1e-12);
        EXPECT_NEAR(curves(affine, y).auroc, base, 1e-12);
    }
}

TEST(EvaluateCurves, JoinsScoresWithOracleById)
{
    const std::vector<AnomalyScore> s{{3, 0.9, false}, {1, 0.1, false}, {2, 0.5, false}};
    const std::vector<OracleLabel> o{{1, false}, {2, true}, {3, true}};
    EXPECT_EQ(evaluate_curves(s, o).auroc, 1.0);
}

TEST(ScoresSerialization, RoundTrip)
{
    const std::vector<AnomalyScore> s{{3, 0.25, true}, {1, 1.5, false}};
    EXPECT_EQ(std::move(parse_scores(write_records(s))).value(), s);
    auto bad = parse_scores("{\"image_id\": 1, \"error\": -1, \"flagged\": true}\n");
    ASSERT_EQ(bad.errors.size(), 1U);
    EXPECT_EQ(bad.errors[0].field, "error");
}
