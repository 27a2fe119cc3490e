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

#include "annofix/geometry.hpp"

#include "annofix/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace annofix {

namespace {

// Back-projected detections carry rounding from the detector's own scaling; accept a hair outside.
constexpr double kBoundsTolerance = 1e-6;

double scale_of(TransformKind kind, const TransformFactors& f) noexcept
{
    switch (kind) {
    case TransformKind::UpscaleHFlip:
    case TransformKind::UpscaleVFlip:
        return f.up;
    case TransformKind::Downscale:
        return f.down;
    default:
        return 1.0;
    }
}

bool flips_x(TransformKind kind) noexcept
{
    return kind == TransformKind::HFlip || kind == TransformKind::UpscaleHFlip;
}

bool flips_y(TransformKind kind) noexcept
{
    return kind == TransformKind::VFlip || kind == TransformKind::UpscaleVFlip;
}

Box flip(const Box& b, TransformKind kind, const ImageDims& frame) noexcept
{
    Box out = b;
    if (flips_x(kind)) {
        out.x_min = frame.width - b.x_max;
        out.x_max = frame.width - b.x_min;
    }
    if (flips_y(kind)) {
        out.y_min = frame.height - b.y_max;
        out.y_max = frame.height - b.y_min;
    }
    return out;
}

void check_box(const Box& box, const ImageDims& frame, const char* what)
{
    if (!box.valid()) {
        throw DomainError(std::string(what) + ": box must be finite with positive area");
    }
    if (!inside_image(box, frame, kBoundsTolerance)) {
        std::ostringstream os;
        os << what << ": box (" << box.x_min << ", " << box.y_min << ", " << box.x_max << ", " << box.y_max
           << ") lies outside the " << frame.width << "x" << frame.height << " frame";
        throw DomainError(os.str());
    }
}

}  // namespace

void TransformFactors::validate() const
{
    if (!std::isfinite(up) || up <= 1.0) {
        throw DomainError("upscale factor must be finite and > 1");
    }
    if (!std::isfinite(down) || down <= 0.0 || down >= 1.0) {
        throw DomainError("downscale factor must lie in (0, 1)");
    }
}

double iou(const Box& a, const Box& b) noexcept
{
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0.0 || ih <= 0.0) {
        return 0.0;
    }
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) {
        return 0.0;
    }
    return std::clamp(inter / uni, 0.0, 1.0);
}

ImageDims view_dims(TransformKind kind, const ImageDims& dims, const TransformFactors& factors)
{
    const double s = scale_of(kind, factors);
    return {dims.width * s, dims.height * s};
}

Box to_view(const Box& box, TransformKind kind, const ImageDims& dims, const TransformFactors& factors)
{
    check_box(box, dims, "to_view");
    const double s = scale_of(kind, factors);
    const Box scaled{box.x_min * s, box.y_min * s, box.x_max * s, box.y_max * s};
    return flip(scaled, kind, view_dims(kind, dims, factors));
}

Box from_view(const Box& box, TransformKind kind, const ImageDims& dims, const TransformFactors& factors)
{
    const ImageDims frame = view_dims(kind, dims, factors);
    check_box(box, frame, "from_view");
    const Box unflipped = flip(box, kind, frame);
    const double s = scale_of(kind, factors);
    return {unflipped.x_min / s, unflipped.y_min / s, unflipped.x_max / s, unflipped.y_max / s};
}

Box average_boxes(std::span<const Box> boxes)
{
    if (boxes.empty()) {
        throw DomainError("average_boxes: empty box list");
    }
    Box sum{};
    for (const Box& b : boxes) {
        sum.x_min += b.x_min;
        sum.y_min += b.y_min;
        sum.x_max += b.x_max;
        sum.y_max += b.y_max;
    }
    const double n = static_cast<double>(boxes.size());
    return {sum.x_min / n, sum.y_min / n, sum.x_max / n, sum.y_max / n};
}

Box merge_extents(std::span<const Box> boxes)
{
    if (boxes.empty()) {
        throw DomainError("merge_extents: empty box list");
    }
    Box out = boxes.front();
    for (const Box& b : boxes.subspan(1)) {
        out.x_min = std::min(out.x_min, b.x_min);
        out.y_min = std::min(out.y_min, b.y_min);
        out.x_max = std::max(out.x_max, b.x_max);
        out.y_max = std::max(out.y_max, b.y_max);
    }
    return out;
}

Box clip_to_image(const Box& box, const ImageDims& dims) noexcept
{
    return {std::clamp(box.x_min, 0.0, dims.width), std::clamp(box.y_min, 0.0, dims.height),
            std::clamp(box.x_max, 0.0, dims.width), std::clamp(box.y_max, 0.0, dims.height)};
}

bool inside_image(const Box& box, const ImageDims& dims, double tolerance) noexcept
{
    return box.x_min >= -tolerance && box.y_min >= -tolerance && box.x_max <= dims.width + tolerance &&
           box.y_max <= dims.height + tolerance;
}

}  // namespace annofix
