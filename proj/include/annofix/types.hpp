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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace annofix {

using ImageId = std::int64_t;
using CategoryId = std::int64_t;
using AnnotationId = std::int64_t;

/// Axis-aligned rectangle in absolute pixel coordinates, corner form, origin top-left.
struct Box {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const noexcept { return x_max - x_min; }
    double height() const noexcept { return y_max - y_min; }
    double area() const noexcept { return width() * height(); }

    /// Finite coordinates and strictly positive extent on both axes.
    bool valid() const noexcept;

    static Box from_xywh(double x, double y, double w, double h) noexcept { return {x, y, x + w, y + h}; }
    std::array<double, 4> to_xywh() const noexcept { return {x_min, y_min, width(), height()}; }

    friend bool operator==(const Box&, const Box&) = default;
};

struct ImageDims {
    double width = 0.0;
    double height = 0.0;

    friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

/// The six invertible views an image is inspected under.
enum class TransformKind { Identity, HFlip, VFlip, UpscaleHFlip, UpscaleVFlip, Downscale };

inline constexpr std::array<TransformKind, 6> kAllTransforms = {
    TransformKind::Identity,     TransformKind::HFlip,        TransformKind::VFlip,
    TransformKind::UpscaleHFlip, TransformKind::UpscaleVFlip, TransformKind::Downscale,
};

std::string_view to_string(TransformKind kind) noexcept;
std::optional<TransformKind> transform_from_string(std::string_view name) noexcept;

}  // namespace annofix
