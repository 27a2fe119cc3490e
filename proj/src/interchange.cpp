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

#include "annofix/interchange.hpp"

#include "annofix/json_format.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace annofix {

using nlohmann::json;

namespace {

/// Thrown by field readers; converted into a RecordError by the line loop.
struct FieldError {
    std::string field;
    std::string message;
};

const json& require(const json& obj, const char* field)
{
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) {
        throw FieldError{field, "missing"};
    }
    return *it;
}

double get_real(const json& obj, const char* field)
{
    const json& v = require(obj, field);
    if (!v.is_number()) {
        throw FieldError{field, "not a number"};
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw FieldError{field, "not finite"};
    }
    return d;
}

double get_nonnegative(const json& obj, const char* field)
{
    const double d = get_real(obj, field);
    if (d < 0.0) {
        throw FieldError{field, "negative"};
    }
    return d;
}

double get_unit(const json& obj, const char* field)
{
    const double d = get_real(obj, field);
    if (d < 0.0 || d > 1.0) {
        throw FieldError{field, std::string(field) + " out of [0,1]"};
    }
    return d;
}

std::int64_t get_int(const json& obj, const char* field)
{
    const json& v = require(obj, field);
    if (v.is_number_integer()) {
        return v.get<std::int64_t>();
    }
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15) {
            return static_cast<std::int64_t>(d);
        }
    }
    throw FieldError{field, "not an integer"};
}

std::int64_t get_count(const json& obj, const char* field)
{
    const std::int64_t n = get_int(obj, field);
    if (n < 0) {
        throw FieldError{field, "negative count"};
    }
    return n;
}

bool get_flag(const json& obj, const char* field, std::optional<bool> fallback = std::nullopt)
{
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) {
        if (fallback) {
            return *fallback;
        }
        throw FieldError{field, "missing"};
    }
    if (it->is_boolean()) {
        return it->get<bool>();
    }
    if (it->is_number_integer()) {
        const auto n = it->get<std::int64_t>();
        if (n == 0 || n == 1) {
            return n == 1;
        }
    }
    throw FieldError{field, "not a flag"};
}

std::string get_string(const json& obj, const char* field)
{
    const json& v = require(obj, field);
    if (!v.is_string()) {
        throw FieldError{field, "not a string"};
    }
    return v.get<std::string>();
}

/// Reads [x, y, w, h] into a corner-form box; w and h must be positive.
Box get_xywh(const json& obj, const char* field)
{
    const json& v = require(obj, field);
    if (!v.is_array() || v.size() != 4) {
        throw FieldError{field, "expected [x, y, w, h]"};
    }
    std::array<double, 4> c{};
    for (std::size_t i = 0; i < 4; ++i) {
        if (!v[i].is_number()) {
            throw FieldError{field, "non-numeric coordinate"};
        }
        c[i] = v[i].get<double>();
        if (!std::isfinite(c[i])) {
            throw FieldError{field, "non-finite coordinate"};
        }
    }
    if (c[2] <= 0.0 || c[3] <= 0.0) {
        throw FieldError{field, "width and height must be positive"};
    }
    return Box::from_xywh(c[0], c[1], c[2], c[3]);
}

json xywh(const Box& b)
{
    const auto c = b.to_xywh();
    return json::array({c[0], c[1], c[2], c[3]});
}

std::string id_string(const json& obj, const char* field)
{
    auto it = obj.find(field);
    if (it == obj.end()) {
        return {};
    }
    return it->dump();
}

template <typename T, typename Fn>
ParseResult<T> parse_lines(std::string_view text, Fn&& decode)
{
    ParseResult<NdjsonLine> lines = read_ndjson(text);
    ParseResult<T> out;
    out.errors = std::move(lines.errors);
    out.records.reserve(lines.records.size());
    for (const NdjsonLine& l : lines.records) {
        try {
            out.records.push_back(decode(l.value));
        } catch (const FieldError& fe) {
            out.errors.push_back(RecordError{l.line, {}, fe.field, fe.message});
        }
    }
    std::stable_sort(out.errors.begin(), out.errors.end(),
                     [](const RecordError& a, const RecordError& b) { return a.line < b.line; });
    return out;
}

}  // namespace

std::string make_box_ref(ImageId image_id, std::size_t index)
{
    return std::to_string(image_id) + "#" + std::to_string(index);
}

ParseResult<NdjsonLine> read_ndjson(std::string_view text)
{
    ParseResult<NdjsonLine> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }
        json value = json::parse(line.begin(), line.end(), nullptr, false);
        if (value.is_discarded()) {
            out.errors.push_back(RecordError{line_no, {}, {}, "malformed JSON"});
        } else if (!value.is_object()) {
            out.errors.push_back(RecordError{line_no, {}, {}, "expected a JSON object"});
        } else {
            out.records.push_back(NdjsonLine{line_no, std::move(value)});
        }
    }
    return out;
}

std::string write_ndjson(const std::vector<json>& rows)
{
    std::string out;
    for (const json& row : rows) {
        out += row.dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------------------------------------------------
// COCO

ParseResult<CocoDocument> parse_coco(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object()) {
        throw ParseError("COCO document must be a JSON object", 0);
    }
    for (const char* key : {"images", "annotations", "categories"}) {
        auto it = doc.find(key);
        if (it == doc.end() || !it->is_array()) {
            throw ParseError(std::string("COCO document lacks a \"") + key + "\" array", 0);
        }
    }

    ParseResult<CocoDocument> out;
    out.records.emplace_back();
    CocoDocument& coco = out.records.front();

    for (const json& img : doc["images"]) {
        try {
            ImageInfo info;
            info.id = get_int(img, "id");
            info.file_name = img.contains("file_name") && img["file_name"].is_string()
                                 ? img["file_name"].get<std::string>()
                                 : std::string{};
            info.dims.width = get_real(img, "width");
            info.dims.height = get_real(img, "height");
            if (info.dims.width <= 0.0 || info.dims.height <= 0.0) {
                throw FieldError{"width", "image dimensions must be positive"};
            }
            coco.images.push_back(std::move(info));
        } catch (const FieldError& fe) {
            out.errors.push_back(RecordError{0, "image " + id_string(img, "id"), fe.field, fe.message});
        }
    }

    for (const json& cat : doc["categories"]) {
        try {
            Category c;
            c.id = get_int(cat, "id");
            c.name = cat.contains("name") && cat["name"].is_string() ? cat["name"].get<std::string>() : std::string{};
            c.supercategory = cat.contains("supercategory") && cat["supercategory"].is_string()
                                  ? cat["supercategory"].get<std::string>()
                                  : std::string{};
            coco.categories.push_back(std::move(c));
        } catch (const FieldError& fe) {
            out.errors.push_back(RecordError{0, "category " + id_string(cat, "id"), fe.field, fe.message});
        }
    }

    for (const json& ann : doc["annotations"]) {
        if (!ann.is_object() || !ann.contains("bbox")) {
            continue;  // segmentation-only entries are not box annotations
        }
        try {
            AnnotationRecord r;
            r.id = get_int(ann, "id");
            r.image_id = get_int(ann, "image_id");
            r.category_id = get_int(ann, "category_id");
            r.box = get_xywh(ann, "bbox");
            r.area = ann.contains("area") ? get_real(ann, "area") : r.box.area();
            if (r.area <= 0.0) {
                throw FieldError{"area", "must be positive"};
            }
            r.is_crowd = get_flag(ann, "iscrowd", false);
            coco.annotations.push_back(r);
        } catch (const FieldError& fe) {
            out.errors.push_back(RecordError{0, "annotation " + id_string(ann, "id"), fe.field, fe.message});
        }
    }

    coco.source = std::move(doc);
    return out;
}

ParseResult<AnnotationRecord> parse_annotations(std::string_view text)
{
    ParseResult<CocoDocument> coco = parse_coco(text);
    ParseResult<AnnotationRecord> out;
    out.records = std::move(coco.records.front().annotations);
    out.errors = std::move(coco.errors);
    return out;
}

json to_json(const AnnotationRecord& r)
{
    json j;
    j["id"] = r.id;
    j["image_id"] = r.image_id;
    j["category_id"] = r.category_id;
    j["bbox"] = xywh(r.box);
    j["area"] = r.area;
    j["iscrowd"] = r.is_crowd ? 1 : 0;
    return j;
}

std::string write_annotations(const std::vector<AnnotationRecord>& records, const std::vector<Category>& categories,
                              const std::vector<ImageInfo>& images)
{
    json doc;
    doc["images"] = json::array();
    for (const ImageInfo& img : images) {
        doc["images"].push_back(
            {{"id", img.id}, {"file_name", img.file_name}, {"width", img.dims.width}, {"height", img.dims.height}});
    }
    doc["annotations"] = json::array();
    for (const AnnotationRecord& r : records) {
        doc["annotations"].push_back(to_json(r));
    }
    doc["categories"] = json::array();
    for (const Category& c : categories) {
        doc["categories"].push_back({{"id", c.id}, {"name", c.name}, {"supercategory", c.supercategory}});
    }
    return dump_document(doc);
}

// ---------------------------------------------------------------------------------------------------------------------
// ndjson streams

ParseResult<TraceSample> parse_traces(std::string_view text)
{
    return parse_lines<TraceSample>(text, [](const json& o) {
        TraceSample t;
        t.image_id = get_int(o, "image_id");
        t.epoch = get_count(o, "epoch");
        t.loss_rpn_cls = get_nonnegative(o, "loss_rpn_cls");
        t.loss_rpn_bbox = get_nonnegative(o, "loss_rpn_bbox");
        t.loss_cls = get_nonnegative(o, "loss_cls");
        t.loss_bbox = get_nonnegative(o, "loss_bbox");
        t.grad_rpn_cls = get_nonnegative(o, "grad_rpn_cls");
        t.grad_rpn_bbox = get_nonnegative(o, "grad_rpn_bbox");
        t.grad_cls = get_nonnegative(o, "grad_cls");
        t.grad_bbox = get_nonnegative(o, "grad_bbox");
        t.n_matched = get_count(o, "n_matched");
        t.n_false_positive = get_count(o, "n_false_positive");
        t.n_ground_truth = get_count(o, "n_ground_truth");
        t.learning_rate = get_real(o, "learning_rate");
        if (t.learning_rate <= 0.0) {
            throw FieldError{"learning_rate", "must be positive"};
        }
        return t;
    });
}

json to_json(const TraceSample& t)
{
    return {
        {"image_id", t.image_id},
        {"epoch", t.epoch},
        {"loss_rpn_cls", t.loss_rpn_cls},
        {"loss_rpn_bbox", t.loss_rpn_bbox},
        {"loss_cls", t.loss_cls},
        {"loss_bbox", t.loss_bbox},
        {"grad_rpn_cls", t.grad_rpn_cls},
        {"grad_rpn_bbox", t.grad_rpn_bbox},
        {"grad_cls", t.grad_cls},
        {"grad_bbox", t.grad_bbox},
        {"n_matched", t.n_matched},
        {"n_false_positive", t.n_false_positive},
        {"n_ground_truth", t.n_ground_truth},
        {"learning_rate", t.learning_rate},
    };
}

ParseResult<Detection> parse_detections(std::string_view text)
{
    return parse_lines<Detection>(text, [](const json& o) {
        Detection d;
        d.image_id = get_int(o, "image_id");
        const std::string view = get_string(o, "view");
        const auto kind = transform_from_string(view);
        if (!kind) {
            throw FieldError{"view", "unknown view '" + view + "'"};
        }
        d.view = *kind;
        d.box = get_xywh(o, "bbox");
        d.category_id = get_int(o, "category_id");
        d.score = get_unit(o, "score");
        return d;
    });
}

json to_json(const Detection& d)
{
    return {
        {"image_id", d.image_id}, {"view", std::string(to_string(d.view))}, {"bbox", xywh(d.box)},
        {"category_id", d.category_id}, {"score", d.score},
    };
}

ParseResult<ClassifierVerdict> parse_verdicts(std::string_view text)
{
    return parse_lines<ClassifierVerdict>(text, [](const json& o) {
        ClassifierVerdict v;
        v.image_id = get_int(o, "image_id");
        v.box_ref = get_string(o, "box_ref");
        const json& top3 = require(o, "top3");
        if (!top3.is_array() || top3.size() != 3) {
            throw FieldError{"top3", "expected exactly 3 category ids"};
        }
        for (std::size_t i = 0; i < 3; ++i) {
            if (!top3[i].is_number_integer()) {
                throw FieldError{"top3", "non-integer category id"};
            }
            v.top3[i] = top3[i].get<CategoryId>();
        }
        v.top1 = get_int(o, "top1");
        if (v.top1 != v.top3[0]) {
            throw FieldError{"top1", "top1 must equal the first element of top3"};
        }
        v.p_c = get_unit(o, "p_c");
        return v;
    });
}

json to_json(const ClassifierVerdict& v)
{
    return {
        {"image_id", v.image_id}, {"box_ref", v.box_ref}, {"top3", v.top3}, {"top1", v.top1}, {"p_c", v.p_c},
    };
}

ParseResult<ActivationGrid> parse_grids(std::string_view text)
{
    return parse_lines<ActivationGrid>(text, [](const json& o) {
        ActivationGrid g;
        g.box_ref = get_string(o, "box_ref");
        g.width = static_cast<std::size_t>(get_count(o, "width"));
        g.height = static_cast<std::size_t>(get_count(o, "height"));
        const json& values = require(o, "values");
        if (!values.is_array()) {
            throw FieldError{"values", "expected an array"};
        }
        if (g.width == 0 || g.height == 0 || values.size() != g.width * g.height) {
            throw FieldError{"values", "length must equal width*height"};
        }
        g.values.reserve(values.size());
        bool any_positive = false;
        for (const json& v : values) {
            if (!v.is_number()) {
                throw FieldError{"values", "non-numeric cell"};
            }
            const double d = v.get<double>();
            if (!std::isfinite(d) || d < 0.0) {
                throw FieldError{"values", "cells must be finite and non-negative"};
            }
            any_positive = any_positive || d > 0.0;
            g.values.push_back(d);
        }
        if (!any_positive) {
            throw FieldError{"values", "grid has zero mass"};
        }
        return g;
    });
}

json to_json(const ActivationGrid& g)
{
    return {{"box_ref", g.box_ref}, {"width", g.width}, {"height", g.height}, {"values", g.values}};
}

ParseResult<OracleLabel> parse_oracle(std::string_view text)
{
    return parse_lines<OracleLabel>(text, [](const json& o) {
        OracleLabel l;
        l.image_id = get_int(o, "image_id");
        l.erroneous = get_flag(o, "erroneous");
        return l;
    });
}

json to_json(const OracleLabel& o)
{
    return {{"image_id", o.image_id}, {"erroneous", o.erroneous}};
}

}  // namespace annofix
