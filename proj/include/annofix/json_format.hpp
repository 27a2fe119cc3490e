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

#include <nlohmann/json.hpp>

#include <string>

namespace annofix {

/// Rounds to 9 significant digits so emitted reports are stable across platforms and libm versions.
double stable(double value);

/// Pretty-printed document (2-space indent, sorted keys) with a trailing newline.
std::string dump_document(const nlohmann::json& doc);

}  // namespace annofix
