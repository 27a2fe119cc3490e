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

#include <filesystem>
#include <string>
#include <string_view>

namespace annofix {

/// Reads a whole file. Paths ending in ".gz" are decompressed transparently.
/// Throws InputError naming the path when the file is missing or unreadable.
std::string read_file(const std::filesystem::path& path);

/// Writes a whole file, creating parent directories. ".gz" paths are compressed.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace annofix
