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

#include "annofix/trace_metrics.hpp"

#include "annofix/error.hpp"
#include "annofix/json_format.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace annofix {

using nlohmann::json;

void WeightConfig::validate() const
{
    if (!std::isfinite(lambda_loss) || lambda_loss < 0.0 || lambda_loss > 1.0) {
        throw DomainError("lambda_loss must lie in [0, 1]");
    }
    double sum = 0.0;
    for (double c : component_weights) {
        if (!std::isfinite(c) || c < 0.0) {
            throw DomainError("component weights must be finite and non-negative");
        }
        sum += c;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw DomainError("component weights must sum to 1");
    }
}

double NormalizationStats::apply(std::size_t i, double value) const noexcept
{
    if (constant[i]) {
        return 0.0;
    }
    if (scheme == NormalizationScheme::MinMax) {
        return (value - min[i]) / (max[i] - min[i]);
    }
    return (value - mean[i]) / std[i];
}

double normalize_regression_loss(double loss, std::int64_t n_matched, std::int64_t n_fp)
{
    if (!std::isfinite(loss) || loss < 0.0) {
        throw DomainError("regression loss must be finite and non-negative");
    }
    if (n_matched < 0 || n_fp < 0) {
        throw DomainError("match counts must be non-negative");
    }
    const double divisor = static_cast<double>(std::max<std::int64_t>(n_matched, 1));
    return loss / divisor * (1.0 + static_cast<double>(n_fp));
}

double adjust_zero_loss(double loss, std::int64_t n_gt, double history_max) noexcept
{
    if (loss == 0.0 && n_gt > 0) {
        return history_max;
    }
    return loss;
}

Features raw_metrics(const TraceSample& s) noexcept
{
    return {s.loss_rpn_cls, s.loss_rpn_bbox, s.loss_cls, s.loss_bbox,
            s.grad_rpn_cls, s.grad_rpn_bbox, s.grad_cls, s.grad_bbox};
}

std::vector<FeatureVector> prepare_traces(std::span<const TraceSample> samples, const TracePreparation& options)
{
    // indices of the two regression losses inside Features
    constexpr std::array<std::size_t, 2> kRegression = {1, 3};

    std::map<std::int64_t, std::array<double, 2>> history;  // epoch -> running max per regression loss
    struct Accumulator {
        Features sum{};
        std::size_t count = 0;
        std::int64_t last_epoch = 0;
        Features last{};
    };
    std::map<ImageId, Accumulator> per_image;

    for (const TraceSample& s : samples) {
        Features f = raw_metrics(s);
        auto& hist = history[s.epoch];
        for (std::size_t r = 0; r < kRegression.size(); ++r) {
            const std::size_t i = kRegression[r];
            const double normalized = normalize_regression_loss(f[i], s.n_matched, s.n_false_positive);
            f[i] = adjust_zero_loss(normalized, s.n_ground_truth, hist[r]);
            hist[r] = std::max(hist[r], f[i]);
        }
        for (std::size_t i = 4; i < kFeatureDim; ++i) {
            f[i] /= s.learning_rate;
        }

        Accumulator& acc = per_image[s.image_id];
        for (std::size_t i = 0; i < kFeatureDim; ++i) {
            acc.sum[i] += f[i];
        }
        if (acc.count == 0 || s.epoch >= acc.last_epoch) {
            acc.last_epoch = s.epoch;
            acc.last = f;
        }
        ++acc.count;
    }

    std::vector<FeatureVector> rows;
    rows.reserve(per_image.size());
    for (const auto& [image_id, acc] : per_image) {
        FeatureVector row{image_id, {}};
        if (options.aggregation == EpochAggregation::LastEpoch) {
            row.z = acc.last;
        } else {
            for (std::size_t i = 0; i < kFeatureDim; ++i) {
                row.z[i] = acc.sum[i] / static_cast<double>(acc.count);
            }
        }
        rows.push_back(row);
    }
    return rows;
}

NormalizationStats fit_normalization(std::span<const FeatureVector> rows, NormalizationScheme scheme)
{
    if (rows.empty()) {
        throw DomainError("fit_normalization: empty corpus");
    }
    NormalizationStats stats;
    stats.scheme = scheme;
    const double n = static_cast<double>(rows.size());
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
        double sum = 0.0;
        double lo = rows.front().z[i];
        double hi = lo;
        for (const FeatureVector& r : rows) {
            sum += r.z[i];
            lo = std::min(lo, r.z[i]);
            hi = std::max(hi, r.z[i]);
        }
        const double mean = sum / n;
        double ss = 0.0;
        for (const FeatureVector& r : rows) {
            const double d = r.z[i] - mean;
            ss += d * d;
        }
        stats.mean[i] = mean;
        stats.std[i] = std::sqrt(ss / n);
        stats.min[i] = lo;
        stats.max[i] = hi;
        stats.constant[i] = (hi == lo) || stats.std[i] == 0.0;
    }
    return stats;
}

NormalizationStats fit_normalization(std::span<const TraceSample> samples, NormalizationScheme scheme)
{
    std::vector<FeatureVector> rows;
    rows.reserve(samples.size());
    for (const TraceSample& s : samples) {
        rows.push_back({s.image_id, raw_metrics(s)});
    }
    return fit_normalization(rows, scheme);
}

Features weight_vector(const WeightConfig& w) noexcept
{
    Features out{};
    for (std::size_t c = 0; c < 4; ++c) {
        out[c] = w.lambda_loss * w.component_weights[c];
        out[c + 4] = (1.0 - w.lambda_loss) * (w.weight_gradients ? w.component_weights[c] : 1.0);
    }
    return out;
}

FeatureVector assemble_features(const FeatureVector& row, const NormalizationStats& stats, const WeightConfig& w)
{
    const Features weights = weight_vector(w);
    FeatureVector out{row.image_id, {}};
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
        out.z[i] = weights[i] * stats.apply(i, row.z[i]);
    }
    return out;
}

FeatureVector assemble_features(const TraceSample& sample, const NormalizationStats& stats, const WeightConfig& w)
{
    return assemble_features(FeatureVector{sample.image_id, raw_metrics(sample)}, stats, w);
}

json to_json(const FeatureVector& f)
{
    json z = json::array();
    for (double v : f.z) {
        z.push_back(stable(v));
    }
    return {{"image_id", f.image_id}, {"z", std::move(z)}};
}

json to_json(const NormalizationStats& s)
{
    auto arr = [](const Features& f) {
        json a = json::array();
        for (double v : f) {
            a.push_back(stable(v));
        }
        return a;
    };
    return {
        {"scheme", s.scheme == NormalizationScheme::ZScore ? "zscore" : "minmax"},
        {"features", kFeatureNames},
        {"mean", arr(s.mean)},
        {"std", arr(s.std)},
        {"min", arr(s.min)},
        {"max", arr(s.max)},
        {"constant", s.constant},
    };
}

ParseResult<FeatureVector> parse_features(std::string_view text)
{
    ParseResult<NdjsonLine> lines = read_ndjson(text);
    ParseResult<FeatureVector> out;
    out.errors = std::move(lines.errors);
    for (const NdjsonLine& l : lines.records) {
        const json& o = l.value;
        auto fail = [&](const char* field, const char* msg) { out.errors.push_back({l.line, {}, field, msg}); };
        if (!o.contains("image_id") || !o["image_id"].is_number_integer()) {
            fail("image_id", "missing or not an integer");
            continue;
        }
        if (!o.contains("z") || !o["z"].is_array() || o["z"].size() != kFeatureDim) {
            fail("z", "expected 8 numbers");
            continue;
        }
        FeatureVector f{o["image_id"].get<ImageId>(), {}};
        bool good = true;
        for (std::size_t i = 0; i < kFeatureDim && good; ++i) {
            const json& v = o["z"][i];
            good = v.is_number() && std::isfinite(v.get<double>());
            if (good) {
                f.z[i] = v.get<double>();
            }
        }
        if (!good) {
            fail("z", "entries must be finite numbers");
            continue;
        }
        out.records.push_back(f);
    }
    std::stable_sort(out.errors.begin(), out.errors.end(),
                     [](const RecordError& a, const RecordError& b) { return a.line < b.line; });
    return out;
}

NormalizationStats parse_normstats(std::string_view text)
{
    json doc = json::parse(text.begin(), text.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ParseError("normstats: malformed JSON document", 0);
    }
    NormalizationStats s;
    try {
        const std::string scheme = doc.at("scheme").get<std::string>();
        if (scheme == "zscore") {
            s.scheme = NormalizationScheme::ZScore;
        } else if (scheme == "minmax") {
            s.scheme = NormalizationScheme::MinMax;
        } else {
            throw ParseError("normstats: unknown scheme '" + scheme + "'", 0);
        }
        s.mean = doc.at("mean").get<Features>();
        s.std = doc.at("std").get<Features>();
        s.min = doc.at("min").get<Features>();
        s.max = doc.at("max").get<Features>();
        s.constant = doc.at("constant").get<std::array<bool, kFeatureDim>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("normstats: ") + e.what(), 0);
    }
    return s;
}

}  // namespace annofix
