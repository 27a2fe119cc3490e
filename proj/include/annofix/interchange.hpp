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

// File formats crossing the toolkit boundary.
//
// annotations.json is a COCO subset (single document). Every other stream is newline-delimited JSON,
// one entity per line. Boxes are xywh at the boundary and corner form in memory.

#include "annofix/error.hpp"
#include "annofix/types.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace annofix {

struct AnnotationRecord {
    AnnotationId id = 0;
    ImageId image_id = 0;
    CategoryId category_id = 0;
    Box box;
    double area = 0.0;
    bool is_crowd = false;

    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct ImageInfo {
    ImageId id = 0;
    std::string file_name;
    ImageDims dims;

    friend bool operator==(const ImageInfo&, const ImageInfo&) = default;
};

struct Category {
    CategoryId id = 0;
    std::string name;
    std::string supercategory;

    friend bool operator==(const Category&, const Category&) = default;
};

struct TraceSample {
    ImageId image_id = 0;
    std::int64_t epoch = 0;
    double loss_rpn_cls = 0.0;
    double loss_rpn_bbox = 0.0;
    double loss_cls = 0.0;
    double loss_bbox = 0.0;
    double grad_rpn_cls = 0.0;
    double grad_rpn_bbox = 0.0;
    double grad_cls = 0.0;
    double grad_bbox = 0.0;
    std::int64_t n_matched = 0;
    std::int64_t n_false_positive = 0;
    std::int64_t n_ground_truth = 0;
    double learning_rate = 1.0;

    friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

struct Detection {
    ImageId image_id = 0;
    TransformKind view = TransformKind::Identity;
    Box box;  // in the transformed view's frame
    CategoryId category_id = 0;
    double score = 0.0;

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct ClassifierVerdict {
    ImageId image_id = 0;
    std::string box_ref;
    std::array<CategoryId, 3> top3{};
    CategoryId top1 = 0;
    double p_c = 0.0;

    friend bool operator==(const ClassifierVerdict&, const ClassifierVerdict&) = default;
};

struct ActivationGrid {
    std::string box_ref;
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;  // row-major, height rows of width cells

    double at(std::size_t row, std::size_t col) const { return values[row * width + col]; }

    friend bool operator==(const ActivationGrid&, const ActivationGrid&) = default;
};

struct OracleLabel {
    ImageId image_id = 0;
    bool erroneous = false;

    friend bool operator==(const OracleLabel&, const OracleLabel&) = default;
};

/// "{image_id}#{index}" where index is the candidate's position after deduplication.
std::string make_box_ref(ImageId image_id, std::size_t index);

/// Result of a lenient parse. Invariant: records.size() + errors.size() equals the number of input records.
template <typename T>
struct ParseResult {
    std::vector<T> records;
    std::vector<RecordError> errors;

    bool ok() const noexcept { return errors.empty(); }

    /// Returns the records, or throws ValidationError when any record was rejected.
    std::vector<T> value() &&
    {
        if (!errors.empty()) {
            throw ValidationError(std::move(errors));
        }
        return std::move(records);
    }
};

/// COCO subset. `source` keeps the parsed document so pass-through writers can reproduce
/// untouched entries (segmentation, info, licenses) verbatim.
struct CocoDocument {
    nlohmann::json source;
    std::vector<ImageInfo> images;
    std::vector<Category> categories;
    std::vector<AnnotationRecord> annotations;
};

ParseResult<AnnotationRecord> parse_annotations(std::string_view text);
ParseResult<CocoDocument> parse_coco(std::string_view text);

std::string write_annotations(const std::vector<AnnotationRecord>& records, const std::vector<Category>& categories,
                              const std::vector<ImageInfo>& images = {});

ParseResult<TraceSample> parse_traces(std::string_view text);
ParseResult<Detection> parse_detections(std::string_view text);
ParseResult<ClassifierVerdict> parse_verdicts(std::string_view text);
ParseResult<ActivationGrid> parse_grids(std::string_view text);
ParseResult<OracleLabel> parse_oracle(std::string_view text);

nlohmann::json to_json(const AnnotationRecord& r);
nlohmann::json to_json(const TraceSample& t);
nlohmann::json to_json(const Detection& d);
nlohmann::json to_json(const ClassifierVerdict& v);
nlohmann::json to_json(const ActivationGrid& g);
nlohmann::json to_json(const OracleLabel& o);

/// One compact JSON object per line, trailing newline after each.
std::string write_ndjson(const std::vector<nlohmann::json>& rows);

template <typename T>
std::string write_records(const std::vector<T>& records)
{
    std::vector<nlohmann::json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) {
        rows.push_back(to_json(r));
    }
    return write_ndjson(rows);
}

struct NdjsonLine {
    std::size_t line = 0;  // 1-based
    nlohmann::json value;
};

/// Splits an ndjson stream into parsed lines. Blank lines are skipped; a line that is not a JSON
/// object becomes a RecordError rather than aborting the stream.
ParseResult<NdjsonLine> read_ndjson(std::string_view text);

}  // namespace annofix
