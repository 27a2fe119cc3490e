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

// Seeded generators shared by the unit and acceptance suites. Everything draws from mt19937_64 through
// hand-written transforms so corpora are identical on every standard library.

#include "annofix/trace_metrics.hpp"
#include "annofix/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace annofix::testing {

inline double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

inline double gaussian(std::mt19937_64& rng)
{
    // Box-Muller; 1 - u keeps the log argument away from zero
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Random valid box inside a w x h image.
inline Box random_box(std::mt19937_64& rng, double w, double h)
{
    const double x0 = uniform(rng, 0.0, w - 1.0);
    const double y0 = uniform(rng, 0.0, h - 1.0);
    const double x1 = uniform(rng, x0 + 0.5, w);
    const double y1 = uniform(rng, y0 + 0.5, h);
    return {x0, y0, x1, y1};
}

struct LabeledCorpus {
    std::vector<FeatureVector> features;
    std::vector<bool> outlier;
};

/// `n` vectors: (1 - outlier_share) lie on a random `dim`-dimensional affine subspace plus N(0, noise^2)
/// jitter, the rest are uniform in a box around the subspace's offset.
inline LabeledCorpus subspace_corpus(std::uint64_t seed, std::size_t n, int dim, double noise, double outlier_share)
{
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd raw(8, dim);
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < dim; ++c) {
            raw(r, c) = gaussian(rng);
        }
    }
    const Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ() *
                                  Eigen::MatrixXd::Identity(8, dim);
    Eigen::VectorXd offset(8);
    for (int i = 0; i < 8; ++i) {
        offset(i) = uniform(rng, -0.5, 0.5);
    }

    LabeledCorpus out;
    const auto n_out = static_cast<std::size_t>(std::llround(outlier_share * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
        const bool is_outlier = i % (n / std::max<std::size_t>(n_out, 1)) == 0 && n_out > 0 &&
                                i / (n / n_out) < n_out;
        Eigen::VectorXd v(8);
        if (is_outlier) {
            for (int j = 0; j < 8; ++j) {
                v(j) = offset(j) + uniform(rng, -2.5, 2.5);
            }
        } else {
            Eigen::VectorXd a(dim);
            for (int j = 0; j < dim; ++j) {
                a(j) = gaussian(rng);
            }
            v = offset + basis * a;
            for (int j = 0; j < 8; ++j) {
                v(j) += noise * gaussian(rng);
            }
        }
        FeatureVector f{static_cast<ImageId>(i), {}};
        for (int j = 0; j < 8; ++j) {
            f.z[static_cast<std::size_t>(j)] = v(j);
        }
        out.features.push_back(f);
        out.outlier.push_back(is_outlier);
    }
    return out;
}

inline std::filesystem::path data_dir()
{
    return ANNOFIX_TEST_DATA;
}

/// Fresh scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("annofix_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace annofix::testing
