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

#include "annofix/io.hpp"

#include "annofix/error.hpp"

#include <zlib.h>

#include <fstream>
#include <sstream>

namespace annofix {

namespace {

bool is_gzip(const std::filesystem::path& path)
{
    return path.extension() == ".gz";
}

}  // namespace

std::string read_file(const std::filesystem::path& path)
{
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw InputError("input file not found: " + path.string(), path.string());
    }
    if (is_gzip(path)) {
        gzFile gz = gzopen(path.string().c_str(), "rb");
        if (gz == nullptr) {
            throw InputError("cannot open " + path.string(), path.string());
        }
        std::string out;
        char buf[1 << 16];
        int n = 0;
        while ((n = gzread(gz, buf, sizeof buf)) > 0) {
            out.append(buf, static_cast<std::size_t>(n));
        }
        const bool failed = n < 0;
        gzclose(gz);
        if (failed) {
            throw InputError("corrupt gzip stream: " + path.string(), path.string());
        }
        return out;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string(), path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    if (is_gzip(path)) {
        // mtime is not recorded by gzwrite, so output bytes depend only on contents
        gzFile gz = gzopen(path.string().c_str(), "wb9");
        if (gz == nullptr || gzwrite(gz, contents.data(), static_cast<unsigned>(contents.size())) !=
                                 static_cast<int>(contents.size())) {
            if (gz != nullptr) {
                gzclose(gz);
            }
            throw InputError("cannot write " + path.string(), path.string());
        }
        gzclose(gz);
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string(), path.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw InputError("cannot write " + path.string(), path.string());
    }
}

}  // namespace annofix
