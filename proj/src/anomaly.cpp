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
#include "annofix/json_format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace annofix {

using nlohmann::json;

void AutoencoderConfig::validate() const
{
    if (k < 1 || k >= static_cast<int>(kFeatureDim)) {
        throw DomainError("autoencoder bottleneck k must satisfy 1 <= k < 8");
    }
    if (epochs < 0) {
        throw DomainError("autoencoder epochs must be non-negative");
    }
    if (!std::isfinite(step) || step <= 0.0) {
        throw DomainError("autoencoder step must be positive");
    }
}

LinearAutoencoder::LinearAutoencoder(Eigen::MatrixXd encoder, Eigen::VectorXd encoder_bias, Eigen::MatrixXd decoder,
                                     Eigen::VectorXd decoder_bias)
    : encoder_(std::move(encoder)),
      encoder_bias_(std::move(encoder_bias)),
      decoder_(std::move(decoder)),
      decoder_bias_(std::move(decoder_bias))
{
    const auto dim = static_cast<Eigen::Index>(kFeatureDim);
    const Eigen::Index k = encoder_.rows();
    if (encoder_.cols() != dim || encoder_bias_.size() != k || decoder_.rows() != dim || decoder_.cols() != k ||
        decoder_bias_.size() != dim) {
        throw DomainError("autoencoder weight shapes are inconsistent");
    }
    if (!encoder_.allFinite() || !encoder_bias_.allFinite() || !decoder_.allFinite() || !decoder_bias_.allFinite()) {
        throw DomainError("autoencoder weights must be finite");
    }
    config_.k = static_cast<int>(k);
}

Eigen::VectorXd LinearAutoencoder::reconstruct(const Features& z) const
{
    const Eigen::Map<const Eigen::VectorXd> v(z.data(), static_cast<Eigen::Index>(kFeatureDim));
    return decoder_ * (encoder_ * v + encoder_bias_) + decoder_bias_;
}

double LinearAutoencoder::score(const Features& z) const
{
    const Eigen::Map<const Eigen::VectorXd> v(z.data(), static_cast<Eigen::Index>(kFeatureDim));
    return (v - reconstruct(z)).squaredNorm();
}

namespace {

/// Uniform in [lo, hi) from the top 53 bits of a 64-bit Mersenne twister; identical on every platform,
/// unlike std::uniform_real_distribution.
double uniform(std::mt19937_64& rng, double lo, double hi)
{
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

}  // namespace

LinearAutoencoder train(std::span<const FeatureVector> features, const AutoencoderConfig& config)
{
    config.validate();
    if (features.empty()) {
        throw DomainError("autoencoder training needs at least one feature vector");
    }
    if (features.size() < 2 * static_cast<std::size_t>(config.k)) {
        throw DomainError("autoencoder training needs at least 2k feature vectors");
    }

    const auto n = static_cast<Eigen::Index>(features.size());
    const auto dim = static_cast<Eigen::Index>(kFeatureDim);
    const Eigen::Index k = config.k;

    Eigen::MatrixXd data(n, dim);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            const double v = features[static_cast<std::size_t>(r)].z[static_cast<std::size_t>(c)];
            if (!std::isfinite(v)) {
                throw DomainError("autoencoder training input contains a non-finite value");
            }
            data(r, c) = v;
        }
    }

    std::mt19937_64 rng(config.seed);
    Eigen::MatrixXd we(k, dim);
    Eigen::MatrixXd wd(dim, k);
    for (Eigen::Index r = 0; r < k; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            we(r, c) = uniform(rng, -0.1, 0.1);
        }
    }
    for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) {
            wd(r, c) = uniform(rng, -0.1, 0.1);
        }
    }
    Eigen::VectorXd be = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd bd = Eigen::VectorXd::Zero(dim);

    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(config.epochs) + 1);

    Eigen::MatrixXd hidden;
    Eigen::MatrixXd residual;
    auto forward = [&]() {
        hidden = (data * we.transpose()).rowwise() + be.transpose();
        residual = ((hidden * wd.transpose()).rowwise() + bd.transpose()) - data;
        return residual.squaredNorm() * inv_n;
    };

    history.push_back(forward());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const Eigen::MatrixXd d_out = residual * (2.0 * inv_n);  // n x 8
        const Eigen::MatrixXd d_hidden = d_out * wd;              // n x k
        const Eigen::MatrixXd g_wd = d_out.transpose() * hidden;
        const Eigen::VectorXd g_bd = d_out.colwise().sum().transpose();
        const Eigen::MatrixXd g_we = d_hidden.transpose() * data;
        const Eigen::VectorXd g_be = d_hidden.colwise().sum().transpose();

        wd -= config.step * g_wd;
        bd -= config.step * g_bd;
        we -= config.step * g_we;
        be -= config.step * g_be;

        if (!we.allFinite() || !wd.allFinite() || !be.allFinite() || !bd.allFinite()) {
            std::ostringstream os;
            os << "autoencoder training diverged at epoch " << epoch << "; retry with a smaller step than "
               << config.step;
            throw DivergedError(os.str());
        }
        history.push_back(forward());
    }

    LinearAutoencoder model(std::move(we), std::move(be), std::move(wd), std::move(bd));
    model.config_ = config;
    model.loss_history_ = std::move(history);
    return model;
}

json to_json(const LinearAutoencoder& model)
{
    auto matrix = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                row.push_back(m(r, c));
            }
            rows.push_back(std::move(row));
        }
        return rows;
    };
    auto vector = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    json history = json::array();
    for (double l : model.loss_history()) {
        history.push_back(stable(l));
    }
    const AutoencoderConfig& cfg = model.config();
    return {
        {"model", "linear_autoencoder"},
        {"k", model.k()},
        {"encoder", {{"weights", matrix(model.encoder())}, {"bias", vector(model.encoder_bias())}}},
        {"decoder", {{"weights", matrix(model.decoder())}, {"bias", vector(model.decoder_bias())}}},
        {"training", {{"epochs", cfg.epochs}, {"step", cfg.step}, {"seed", cfg.seed}, {"loss_history", history}}},
    };
}

LinearAutoencoder model_from_json(const json& doc)
{
    try {
        auto matrix = [](const json& rows) {
            const auto r = static_cast<Eigen::Index>(rows.size());
            const auto c = r == 0 ? 0 : static_cast<Eigen::Index>(rows.at(0).size());
            Eigen::MatrixXd m(r, c);
            for (Eigen::Index i = 0; i < r; ++i) {
                if (static_cast<Eigen::Index>(rows.at(i).size()) != c) {
                    throw DomainError("ragged weight matrix");
                }
                for (Eigen::Index j = 0; j < c; ++j) {
                    m(i, j) = rows.at(i).at(j).get<double>();
                }
            }
            return m;
        };
        auto vector = [](const json& v) {
            const auto values = v.get<std::vector<double>>();
            return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
        };
        LinearAutoencoder model(matrix(doc.at("encoder").at("weights")), vector(doc.at("encoder").at("bias")),
                                matrix(doc.at("decoder").at("weights")), vector(doc.at("decoder").at("bias")));
        const json& t = doc.at("training");
        model.config_.epochs = t.at("epochs").get<int>();
        model.config_.step = t.at("step").get<double>();
        model.config_.seed = t.at("seed").get<std::uint64_t>();
        model.loss_history_ = t.at("loss_history").get<std::vector<double>>();
        return model;
    } catch (const json::exception& e) {
        throw ParseError(std::string("model: ") + e.what(), 0);
    }
}

std::vector<AnomalyScore> score_all(const AnomalyScorer& scorer, std::span<const FeatureVector> features)
{
    std::vector<AnomalyScore> out;
    out.reserve(features.size());
    for (const FeatureVector& f : features) {
        out.push_back({f.image_id, scorer.score(f.z), false});
    }
    return out;
}

std::vector<AnomalyScore> flag_top_fraction(std::vector<AnomalyScore> scores, double fraction)
{
    if (scores.empty()) {
        throw DomainError("flag_top_fraction: empty score list");
    }
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw DomainError("flag_top_fraction: fraction must lie in (0, 1)");
    }
    const double exact = fraction * static_cast<double>(scores.size());
    // absorb representation error: 0.35 * 20 must give 7, not 8
    const auto count = static_cast<std::size_t>(std::ceil(exact - 1e-9));

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].error != scores[b].error) {
            return scores[a].error > scores[b].error;
        }
        if (scores[a].image_id != scores[b].image_id) {
            return scores[a].image_id < scores[b].image_id;
        }
        return a < b;
    });
    for (auto& s : scores) {
        s.flagged = false;
    }
    for (std::size_t i = 0; i < count && i < order.size(); ++i) {
        scores[order[i]].flagged = true;
    }
    return scores;
}

json to_json(const AnomalyScore& s)
{
    return {{"image_id", s.image_id}, {"error", stable(s.error)}, {"flagged", s.flagged}};
}

ParseResult<AnomalyScore> parse_scores(std::string_view text)
{
    ParseResult<NdjsonLine> lines = read_ndjson(text);
    ParseResult<AnomalyScore> out;
    out.errors = std::move(lines.errors);
    for (const NdjsonLine& l : lines.records) {
        const json& o = l.value;
        if (!o.contains("image_id") || !o["image_id"].is_number_integer()) {
            out.errors.push_back({l.line, {}, "image_id", "missing or not an integer"});
            continue;
        }
        if (!o.contains("error") || !o["error"].is_number() || !std::isfinite(o["error"].get<double>()) ||
            o["error"].get<double>() < 0.0) {
            out.errors.push_back({l.line, {}, "error", "must be a finite non-negative number"});
            continue;
        }
        if (!o.contains("flagged") || !o["flagged"].is_boolean()) {
            out.errors.push_back({l.line, {}, "flagged", "missing or not a boolean"});
            continue;
        }
        out.records.push_back({o["image_id"].get<ImageId>(), o["error"].get<double>(), o["flagged"].get<bool>()});
    }
    std::stable_sort(out.errors.begin(), out.errors.end(),
                     [](const RecordError& a, const RecordError& b) { return a.line < b.line; });
    return out;
}

FixedMetrics fixed_metrics(const ConfusionCounts& c)
{
    FixedMetrics m;
    m.counts = c;
    auto ratio = [&](double num, double den, const char* name) {
        if (den == 0.0) {
            m.warnings.push_back(std::string(name) + " undefined (zero denominator), reported as 0");
            return 0.0;
        }
        return num / den;
    };
    const auto tp = static_cast<double>(c.tp);
    const auto fp = static_cast<double>(c.fp);
    const auto fn = static_cast<double>(c.fn);
    const auto tn = static_cast<double>(c.tn);
    m.accuracy = ratio(tp + tn, tp + tn + fp + fn, "accuracy");
    m.precision = ratio(tp, tp + fp, "precision");
    m.recall = ratio(tp, tp + fn, "recall");
    m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall, "f1");
    return m;
}

namespace {

/// Pairs each score with its oracle label, in score order. Throws listing ids missing from either side.
std::vector<std::pair<const AnomalyScore*, bool>> join(std::span<const AnomalyScore> scores,
                                                       std::span<const OracleLabel> oracle)
{
    std::map<ImageId, bool> labels;
    for (const OracleLabel& o : oracle) {
        labels[o.image_id] = o.erroneous;
    }
    std::set<ImageId> seen;
    std::vector<ImageId> missing_oracle;
    std::vector<std::pair<const AnomalyScore*, bool>> out;
    out.reserve(scores.size());
    for (const AnomalyScore& s : scores) {
        seen.insert(s.image_id);
        auto it = labels.find(s.image_id);
        if (it == labels.end()) {
            missing_oracle.push_back(s.image_id);
        } else {
            out.emplace_back(&s, it->second);
        }
    }
    std::vector<ImageId> missing_scores;
    for (const auto& [id, _] : labels) {
        if (!seen.count(id)) {
            missing_scores.push_back(id);
        }
    }
    if (!missing_oracle.empty() || !missing_scores.empty()) {
        std::ostringstream os;
        os << "image ids do not match between scores and oracle";
        auto list = [&](const char* what, const std::vector<ImageId>& ids) {
            if (ids.empty()) {
                return;
            }
            os << "; " << what << ":";
            for (ImageId id : ids) {
                os << ' ' << id;
            }
        };
        list("missing from oracle", missing_oracle);
        list("missing from scores", missing_scores);
        throw DomainError(os.str());
    }
    return out;
}

}  // namespace

FixedMetrics evaluate_fixed(std::span<const AnomalyScore> flags, std::span<const OracleLabel> oracle)
{
    ConfusionCounts c;
    for (const auto& [s, erroneous] : join(flags, oracle)) {
        if (s->flagged) {
            (erroneous ? c.tp : c.fp) += 1;
        } else {
            (erroneous ? c.fn : c.tn) += 1;
        }
    }
    return fixed_metrics(c);
}

CurveReport evaluate_curves(std::span<const double> scores, std::span<const bool> positive)
{
    if (scores.size() != positive.size()) {
        throw DomainError("evaluate_curves: score and label arrays differ in length");
    }
    const auto n_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
    const auto n_neg = static_cast<double>(positive.size()) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) {
        throw DomainError("evaluate_curves: oracle must contain both erroneous and correct images");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    CurveReport out;
    const double inf = std::numeric_limits<double>::infinity();
    out.roc.push_back({0.0, 0.0, inf});
    out.pr.push_back({0.0, 1.0, inf});

    double tp = 0.0;
    double fp = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        while (i < order.size() && scores[order[i]] == threshold) {
            (positive[order[i]] ? tp : fp) += 1.0;
            ++i;
        }
        out.roc.push_back({fp / n_neg, tp / n_pos, threshold});
        out.pr.push_back({tp / n_pos, tp / (tp + fp), threshold});
    }

    auto trapezoid = [](const std::vector<CurvePoint>& pts) {
        double area = 0.0;
        for (std::size_t j = 1; j < pts.size(); ++j) {
            area += (pts[j].x - pts[j - 1].x) * (pts[j].y + pts[j - 1].y) * 0.5;
        }
        return std::clamp(area, 0.0, 1.0);
    };
    out.auroc = trapezoid(out.roc);
    out.prauc = trapezoid(out.pr);
    return out;
}

CurveReport evaluate_curves(std::span<const AnomalyScore> scores, std::span<const OracleLabel> oracle)
{
    const auto joined = join(scores, oracle);
    std::vector<double> values;
    std::vector<char> labels;
    values.reserve(joined.size());
    labels.reserve(joined.size());
    for (const auto& [s, erroneous] : joined) {
        values.push_back(s->error);
        labels.push_back(erroneous ? 1 : 0);
    }
    // std::vector<bool> has no contiguous storage; go through a plain bool array
    std::unique_ptr<bool[]> flags(new bool[labels.size()]);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        flags[i] = labels[i] != 0;
    }
    return evaluate_curves(values, std::span<const bool>(flags.get(), labels.size()));
}

json to_json(const FixedMetrics& m)
{
    return {
        {"counts", {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"fn", m.counts.fn}, {"tn", m.counts.tn}}},
        {"accuracy", stable(m.accuracy)},
        {"precision", stable(m.precision)},
        {"recall", stable(m.recall)},
        {"f1", stable(m.f1)},
        {"warnings", m.warnings},
    };
}

json to_json(const CurveReport& c)
{
    auto points = [](const std::vector<CurvePoint>& pts, const char* xname, const char* yname) {
        json arr = json::array();
        for (const CurvePoint& p : pts) {
            json t = std::isfinite(p.threshold) ? json(stable(p.threshold)) : json("inf");
            arr.push_back({{xname, stable(p.x)}, {yname, stable(p.y)}, {"threshold", t}});
        }
        return arr;
    };
    return {
        {"auroc", stable(c.auroc)},
        {"prauc", stable(c.prauc)},
        {"roc", points(c.roc, "fpr", "tpr")},
        {"pr", points(c.pr, "recall", "precision")},
    };
}

}  // namespace annofix
