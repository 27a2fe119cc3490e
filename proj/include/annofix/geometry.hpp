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

#include "annofix/types.hpp"

#include <span>

namespace annofix {

/// Scale factors for the scaled views. Composite views scale first, then flip inside the scaled frame.
struct TransformFactors {
    double up = 1.5;
    double down = 0.75;

    /// Throws DomainError unless up > 1 and 0 < down < 1 (both finite).
    void validate() const;
};

/// Intersection over union. Boxes that only share an edge have IoU 0.
double iou(const Box& a, const Box& b) noexcept;

/// Frame dimensions of an image seen under `kind`.
ImageDims view_dims(TransformKind kind, const ImageDims& dims, const TransformFactors& factors = {});

/// Maps a box from original-image coordinates into the view's frame.
/// Throws DomainError when the box is invalid or not inside [0,width]x[0,height].
Box to_view(const Box& box, TransformKind kind, const ImageDims& dims, const TransformFactors& factors = {});

/// Inverse of to_view: maps a box given in the view's frame back to original-image coordinates.
/// `dims` are the ORIGINAL image dimensions; the box must lie inside view_dims(kind, dims).
Box from_view(const Box& box, TransformKind kind, const ImageDims& dims, const TransformFactors& factors = {});

/// Per-coordinate arithmetic mean. Throws DomainError on an empty list.
Box average_boxes(std::span<const Box> boxes);

/// Smallest box enclosing every input. Throws DomainError on an empty list.
Box merge_extents(std::span<const Box> boxes);

/// Intersection of `box` with the image rectangle; may be degenerate.
Box clip_to_image(const Box& box, const ImageDims& dims) noexcept;

bool inside_image(const Box& box, const ImageDims& dims, double tolerance = 0.0) noexcept;

}  // namespace annofix
