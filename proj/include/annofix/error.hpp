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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace annofix {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

/// Argument outside an operation's mathematical domain (negative loss, empty corpus, ...).
class DomainError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "domain"; }
};

/// Missing or unreadable input file, bad configuration value.
class InputError : public Error {
public:
    InputError(const std::string& message, std::string path = {})
        : Error(message), path_(std::move(path)) {}
    const char* kind() const noexcept override { return "input"; }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Syntactically malformed document. `offset` is the byte position reported by the JSON reader,
/// `line` is 1-based for newline-delimited streams (0 when not applicable).
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t offset, std::size_t line = 0)
        : Error(message), offset_(offset), line_(line) {}
    const char* kind() const noexcept override { return "parse"; }
    std::size_t offset() const noexcept { return offset_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t offset_;
    std::size_t line_;
};

/// One rejected record. `line` is 1-based for ndjson, `record` names the entity (annotation id, box_ref).
struct RecordError {
    std::size_t line = 0;
    std::string record;
    std::string field;
    std::string message;
};

std::string describe(const RecordError& e);

/// Raised when a stream contains records violating type invariants.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<RecordError> errors);
    const char* kind() const noexcept override { return "validation"; }
    const std::vector<RecordError>& errors() const noexcept { return errors_; }

private:
    std::vector<RecordError> errors_;
};

/// Autoencoder training produced a non-finite weight.
class DivergedError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "diverged"; }
};

}  // namespace annofix
