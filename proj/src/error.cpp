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

#include "annofix/error.hpp"

#include <algorithm>
#include <sstream>

namespace annofix {

std::string describe(const RecordError& e)
{
    std::ostringstream os;
    if (e.line > 0) {
        os << "line " << e.line << ": ";
    }
    if (!e.record.empty()) {
        os << "record " << e.record << ": ";
    }
    if (!e.field.empty()) {
        os << "field '" << e.field << "': ";
    }
    os << e.message;
    return os.str();
}

namespace {

std::string summarize(const std::vector<RecordError>& errors)
{
    std::ostringstream os;
    os << errors.size() << " invalid record(s)";
    const std::size_t shown = std::min<std::size_t>(errors.size(), 5);
    for (std::size_t i = 0; i < shown; ++i) {
        os << (i == 0 ? ": " : "; ") << describe(errors[i]);
    }
    if (shown < errors.size()) {
        os << "; ...";
    }
    return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<RecordError> errors)
    : Error(summarize(errors)), errors_(std::move(errors))
{
}

}  // namespace annofix
