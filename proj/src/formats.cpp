// Copyright 2026 The midbox Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "midbox/formats.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace midbox {

namespace {

using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

constexpr std::array<char, 4> kMtfMagic = {'M', 'T', 'F', '1'};

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xffu),
                              static_cast<unsigned char>((v >> 8) & 0xffu),
                              static_cast<unsigned char>((v >> 16) & 0xffu),
                              static_cast<unsigned char>((v >> 24) & 0xffu)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(const unsigned char* b) {
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

[[noreturn]] void mtf_error(std::size_t offset, const std::string& what) {
  throw Error(ErrorKind::kParse, "MTF offset " + std::to_string(offset) + ": " + what);
}

std::vector<std::string> target_channel_names(std::size_t num_classes) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < num_classes; ++k) names.push_back("center/" + std::to_string(k));
  for (std::size_t k = 0; k < num_classes; ++k) {
    for (MidLabel label : kMidLabels) {
      names.push_back("mid/" + std::to_string(k) + "/" + label_name(label));
    }
  }
  for (MidLabel label : kMidLabels) {
    names.push_back(std::string("shift/") + label_name(label) + "/dx");
    names.push_back(std::string("shift/") + label_name(label) + "/dy");
  }
  names.emplace_back("radius");
  for (MidLabel label : kMidLabels) names.push_back(std::string("mask/") + label_name(label));
  names.emplace_back("mask/c");
  return names;
}

std::string image_id_of(const json& j) {
  const json& id = j.at("image");
  if (id.is_string()) return id.get<std::string>();
  if (id.is_number_integer()) return std::to_string(id.get<long long>());
  throw Error(ErrorKind::kParse, "\"image\" must be a string or an integer");
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::kParse, std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::kParse, std::string("field \"") + key + "\" has the wrong type");
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? field<T>(j, key) : fallback;
}

json parse_json_line(const std::string& line) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw Error(ErrorKind::kParse, "line is not a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, std::string("invalid JSON: ") + e.what());
  }
}

template <typename Record, typename Parse>
std::vector<Record> read_lines(std::istream& in, Parse parse) {
  std::vector<Record> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(line));
    } catch (const Error& e) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": " + e.message());
    }
  }
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kParse, "cannot open " + path);
  return in;
}

}  // namespace

void write_mtf(std::ostream& out, const MtfFile& file) {
  const Shape3& s = file.tensor.shape();
  if (file.names.size() != s.channels) {
    throw Error(ErrorKind::kShapeMismatch, "one channel name per channel required");
  }
  ordered_json header;
  header["dtype"] = "f32le";
  header["shape"] = {s.channels, s.height, s.width};
  header["names"] = file.names;
  const std::string text = header.dump();

  out.write(kMtfMagic.data(), kMtfMagic.size());
  put_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::vector<char> payload(file.tensor.size() * 4);
  for (std::size_t i = 0; i < file.tensor.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(file.tensor.data()[i]);
    for (int b = 0; b < 4; ++b) payload[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

MtfFile read_mtf(std::istream& in) {
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());

  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMtfMagic.data(), 4) != 0) {
    mtf_error(0, "missing \"MTF1\" magic");
  }
  if (bytes.size() < 8) mtf_error(4, "truncated header length");
  const std::size_t header_len = get_u32_le(raw + 4);
  if (bytes.size() < 8 + header_len) mtf_error(8, "header of " + std::to_string(header_len) +
                                                      " bytes runs past end of file");
  json header;
  try {
    header = json::parse(bytes.substr(8, header_len));
  } catch (const json::parse_error& e) {
    mtf_error(8 + e.byte, std::string("malformed header JSON: ") + e.what());
  }

  if (!header.is_object() || header.value("dtype", "") != "f32le") {
    mtf_error(8, "header dtype must be \"f32le\"");
  }
  const json& shape = header.contains("shape") ? header["shape"] : json();
  if (!shape.is_array() || shape.size() != 3 ||
      !std::all_of(shape.begin(), shape.end(), [](const json& v) { return v.is_number_unsigned(); })) {
    mtf_error(8, "header shape must be three non-negative integers");
  }
  const Shape3 s{shape[0].get<std::size_t>(), shape[1].get<std::size_t>(),
                 shape[2].get<std::size_t>()};

  MtfFile file;
  if (header.contains("names")) {
    const json& names = header["names"];
    if (!names.is_array() || names.size() != s.channels) {
      mtf_error(8, "header names must list one string per channel");
    }
    for (const json& n : names) {
      if (!n.is_string()) mtf_error(8, "header names must be strings");
      file.names.push_back(n.get<std::string>());
    }
  } else {
    file.names.assign(s.channels, "");
  }

  const std::size_t payload_at = 8 + header_len;
  const std::size_t expected = s.size() * 4;
  if (bytes.size() < payload_at + expected) {
    mtf_error(bytes.size(), "payload truncated, expected " + std::to_string(expected) +
                                " bytes from offset " + std::to_string(payload_at));
  }
  if (bytes.size() > payload_at + expected) mtf_error(payload_at + expected, "trailing bytes");

  std::vector<float> data(s.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32_le(raw + payload_at + 4 * i));
  }
  file.tensor = Tensor(s, std::move(data));
  return file;
}

void write_mtf_file(const std::string& path, const MtfFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kInvalidArgument, "cannot write " + path);
  write_mtf(out, file);
}

MtfFile read_mtf_file(const std::string& path) {
  std::ifstream in = open_input(path);
  return read_mtf(in);
}

MtfFile pack_targets(const TargetSet& targets) {
  targets.validate();
  const std::size_t k = targets.num_classes();
  const Tensor* parts[] = {&targets.center_heat, &targets.mid_heat, &targets.shift_map,
                           &targets.radius_map, &targets.pos_mask};
  std::vector<float> data;
  data.reserve((5 * k + 14) * targets.center_heat.shape().plane());
  for (const Tensor* t : parts) data.insert(data.end(), t->data().begin(), t->data().end());
  const Shape3 s{5 * k + 14, targets.center_heat.height(), targets.center_heat.width()};
  return {Tensor(s, std::move(data)), target_channel_names(k)};
}

TargetSet unpack_targets(const MtfFile& file) {
  const Shape3& s = file.tensor.shape();
  if (s.channels < 19 || (s.channels - 14) % 5 != 0) {
    throw Error(ErrorKind::kShapeMismatch,
                "target tensor needs 5K+14 channels, got " + std::to_string(s.channels));
  }
  const std::size_t k = (s.channels - 14) / 5;
  const auto expected = target_channel_names(k);
  for (std::size_t c = 0; c < s.channels; ++c) {
    if (!file.names[c].empty() && file.names[c] != expected[c]) {
      throw Error(ErrorKind::kShapeMismatch, "channel " + std::to_string(c) + " is \"" +
                                                 file.names[c] + "\", expected \"" + expected[c] +
                                                 "\"");
    }
  }
  std::size_t next = 0;
  auto take = [&](std::size_t channels) {
    const auto src = file.tensor.data().subspan(next * s.plane(), channels * s.plane());
    next += channels;
    return Tensor({channels, s.height, s.width}, std::vector<float>(src.begin(), src.end()));
  };
  TargetSet t;
  t.center_heat = take(k);
  t.mid_heat = take(4 * k);
  t.shift_map = take(8);
  t.radius_map = take(1);
  t.pos_mask = take(5);
  return t;
}

std::string to_jsonl(const ImageAnnotation& image) {
  ordered_json j;
  j["image"] = image.image;
  if (image.width > 0) j["width"] = image.width;
  if (image.height > 0) j["height"] = image.height;
  if (image.tile) {
    j["source"] = image.tile->source;
    j["x0"] = image.tile->x0;
    j["y0"] = image.tile->y0;
  }
  ordered_json objects = ordered_json::array();
  for (const AnnotatedObject& o : image.objects) {
    ordered_json jo;
    jo["cx"] = o.box.center.x;
    jo["cy"] = o.box.center.y;
    jo["w"] = o.box.w;
    jo["h"] = o.box.h;
    jo["theta"] = o.box.theta;
    jo["class"] = o.box.class_id;
    jo["difficult"] = o.difficult;
    if (o.score) jo["score"] = *o.score;
    if (o.truncated) jo["truncated"] = *o.truncated;
    objects.push_back(std::move(jo));
  }
  j["objects"] = std::move(objects);
  return j.dump();
}

ImageAnnotation parse_annotation_line(const std::string& line) {
  const json j = parse_json_line(line);
  ImageAnnotation image;
  if (!j.contains("image")) throw Error(ErrorKind::kParse, "missing field \"image\"");
  image.image = image_id_of(j);
  image.width = field_or<int>(j, "width", 0);
  image.height = field_or<int>(j, "height", 0);
  if (j.contains("source")) {
    image.tile = TileOrigin{field<std::string>(j, "source"), field_or<int>(j, "x0", 0),
                            field_or<int>(j, "y0", 0)};
  }
  if (!j.contains("objects") || !j["objects"].is_array()) {
    throw Error(ErrorKind::kParse, "\"objects\" must be an array");
  }
  for (const json& jo : j["objects"]) {
    if (!jo.is_object()) throw Error(ErrorKind::kParse, "object entries must be JSON objects");
    AnnotatedObject o;
    o.box.center = {field<double>(jo, "cx"), field<double>(jo, "cy")};
    o.box.w = field<double>(jo, "w");
    o.box.h = field<double>(jo, "h");
    o.box.theta = field<double>(jo, "theta");
    o.box.class_id = field<int>(jo, "class");
    o.difficult = field_or<bool>(jo, "difficult", false);
    if (jo.contains("score")) o.score = field<double>(jo, "score");
    if (jo.contains("truncated")) o.truncated = field<bool>(jo, "truncated");
    image.objects.push_back(o);
  }
  return image;
}

std::vector<ImageAnnotation> read_annotations(std::istream& in) {
  return read_lines<ImageAnnotation>(in, parse_annotation_line);
}

std::vector<ImageAnnotation> read_annotations_file(const std::string& path) {
  std::ifstream in = open_input(path);
  return read_annotations(in);
}

void write_annotations(std::ostream& out, const std::vector<ImageAnnotation>& images) {
  for (const ImageAnnotation& image : images) out << to_jsonl(image) << '\n';
}

std::string to_jsonl(const ImageKeypoints& image) {
  auto object_of = [](const std::vector<int>& v, std::size_t i) {
    return i < v.size() ? v[i] : -1;
  };
  ordered_json j;
  j["image"] = image.image;
  if (image.width > 0) j["width"] = image.width;
  if (image.height > 0) j["height"] = image.height;
  ordered_json centers = ordered_json::array();
  for (std::size_t i = 0; i < image.centers.size(); ++i) {
    const CenterDet& c = image.centers[i];
    ordered_json jc;
    jc["x"] = c.pos.x;
    jc["y"] = c.pos.y;
    jc["score"] = c.score;
    jc["radius"] = c.radius;
    jc["class"] = c.class_id;
    jc["object"] = object_of(image.center_object, i);
    centers.push_back(std::move(jc));
  }
  ordered_json midpoints = ordered_json::array();
  for (std::size_t i = 0; i < image.midpoints.size(); ++i) {
    const MidpointDet& m = image.midpoints[i];
    ordered_json jm;
    jm["label"] = label_name(m.label);
    jm["x"] = m.pos.x;
    jm["y"] = m.pos.y;
    jm["score"] = m.score;
    jm["sx"] = m.shift.x;
    jm["sy"] = m.shift.y;
    jm["class"] = m.class_id;
    jm["object"] = object_of(image.midpoint_object, i);
    midpoints.push_back(std::move(jm));
  }
  j["centers"] = std::move(centers);
  j["midpoints"] = std::move(midpoints);
  return j.dump();
}

ImageKeypoints parse_keypoint_line(const std::string& line) {
  const json j = parse_json_line(line);
  ImageKeypoints image;
  if (!j.contains("image")) throw Error(ErrorKind::kParse, "missing field \"image\"");
  image.image = image_id_of(j);
  image.width = field_or<int>(j, "width", 0);
  image.height = field_or<int>(j, "height", 0);
  for (const char* key : {"centers", "midpoints"}) {
    if (!j.contains(key) || !j[key].is_array()) {
      throw Error(ErrorKind::kParse, std::string("\"") + key + "\" must be an array");
    }
  }
  for (const json& jc : j["centers"]) {
    CenterDet c;
    c.pos = {field<double>(jc, "x"), field<double>(jc, "y")};
    c.score = field<double>(jc, "score");
    c.radius = field<double>(jc, "radius");
    c.class_id = field_or<int>(jc, "class", 0);
    if (!(c.radius > 0.0)) throw Error(ErrorKind::kParse, "center radius must be positive");
    image.centers.push_back(c);
    image.center_object.push_back(field_or<int>(jc, "object", -1));
  }
  for (const json& jm : j["midpoints"]) {
    MidpointDet m;
    m.label = label_from_name(field<std::string>(jm, "label"));
    m.pos = {field<double>(jm, "x"), field<double>(jm, "y")};
    m.score = field<double>(jm, "score");
    m.shift = {field<double>(jm, "sx"), field<double>(jm, "sy")};
    m.class_id = field_or<int>(jm, "class", 0);
    if (m.shift.x < 0.0 || m.shift.y < 0.0) {
      throw Error(ErrorKind::kParse, "shift magnitudes must be non-negative");
    }
    image.midpoints.push_back(m);
    image.midpoint_object.push_back(field_or<int>(jm, "object", -1));
  }
  return image;
}

std::vector<ImageKeypoints> read_keypoints(std::istream& in) {
  return read_lines<ImageKeypoints>(in, parse_keypoint_line);
}

std::vector<ImageKeypoints> read_keypoints_file(const std::string& path) {
  std::ifstream in = open_input(path);
  return read_keypoints(in);
}

}  // namespace midbox
