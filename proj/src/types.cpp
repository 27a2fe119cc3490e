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

#include "annofix/types.hpp"

#include <cmath>

namespace annofix {

bool Box::valid() const noexcept
{
    return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) && std::isfinite(y_max) &&
           x_max > x_min && y_max > y_min;
}

namespace {

constexpr std::array<std::string_view, 6> kTransformNames = {
    "identity", "hflip", "vflip", "upscale_hflip", "upscale_vflip", "downscale",
};

}  // namespace

std::string_view to_string(TransformKind kind) noexcept
{
    return kTransformNames[static_cast<std::size_t>(kind)];
}

std::optional<TransformKind> transform_from_string(std::string_view name) noexcept
{
    for (std::size_t i = 0; i < kTransformNames.size(); ++i) {
        if (kTransformNames[i] == name) {
            return static_cast<TransformKind>(i);
        }
    }
    return std::nullopt;
}

}  // namespace annofix
