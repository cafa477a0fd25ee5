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

#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "midbox/error.hpp"
#include "midbox/eval.hpp"
#include "midbox/formats.hpp"
#include "midbox/heatmap.hpp"
#include "midbox/matcher.hpp"
#include "midbox/parallel.hpp"
#include "midbox/synth.hpp"
#include "midbox/tiling.hpp"

namespace midbox::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct EncodeOptions {
  std::string annotations;
  std::string out_dir;
  int stride = 4;
  int classes = 1;
};

struct DecodeOptions {
  std::string maps;
  std::string keypoints;
  std::string out;
  std::string decoder = "refined";
  int stride = 4;
  double score_thresh = 0.1;
  double center_thresh = -1.0;
  double mid_thresh = -1.0;
  std::size_t topk = 100;
};

struct EvalOptions {
  std::string gt;
  std::string det;
  std::string out;
  std::string metric = "voc07";
  double iou_thr = kDefaultIouThreshold;
  int classes = 0;
};

struct SynthOptions {
  std::string out_dir;
  std::string layout = "random";
  std::size_t images = 1;
  SceneSpec spec;
};

struct TileOptions {
  std::string annotations;
  std::string out;
  TileSpec spec;
};

// Input problems the library does not detect itself.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

// Writes to `path`, or to `fallback` when the path is empty.
template <typename Fn>
void emit(const std::string& path, std::ostream& fallback, Fn write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream out = open_output(path);
  write(out);
}

std::string file_stem_for(std::size_t index, const std::string& image) {
  std::string safe;
  for (char c : image) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    safe.push_back(ok ? c : '_');
  }
  std::ostringstream name;
  name << std::setw(5) << std::setfill('0') << index << '_' << safe;
  return name.str();
}

void report_warnings(const std::string& image, const Diagnostics& diag, std::ostream& err) {
  for (const std::string& w : diag.warnings) err << "warning: " << image << ": " << w << '\n';
}

// ---------------------------------------------------------------------------

int cmd_encode(const EncodeOptions& opt, std::ostream& err) {
  const std::vector<ImageAnnotation> images = read_annotations_file(opt.annotations);
  fs::create_directories(opt.out_dir);

  std::vector<Shape3> shapes(images.size());
  std::vector<Diagnostics> diags(images.size());
  for (const ImageAnnotation& image : images) {
    if (image.width <= 0 || image.height <= 0) {
      throw InputError("image " + image.image + " needs positive width and height");
    }
  }
  parallel_for(images.size(), [&](std::size_t i) {
    const ImageAnnotation& image = images[i];
    std::vector<OrientedBox> boxes;
    for (const AnnotatedObject& o : image.objects) boxes.push_back(o.box);
    const TargetSet targets = encode_targets(boxes, {image.width, image.height}, opt.stride,
                                             opt.classes, &diags[i]);
    const MtfFile file = pack_targets(targets);
    shapes[i] = file.tensor.shape();
    write_mtf_file((fs::path(opt.out_dir) / (file_stem_for(i, image.image) + ".mtf")).string(),
                   file);
  });

  ordered_json manifest;
  manifest["stride"] = opt.stride;
  manifest["num_classes"] = opt.classes;
  manifest["images"] = ordered_json::array();
  for (std::size_t i = 0; i < images.size(); ++i) {
    report_warnings(images[i].image, diags[i], err);
    ordered_json entry;
    entry["image"] = images[i].image;
    entry["file"] = file_stem_for(i, images[i].image) + ".mtf";
    entry["width"] = images[i].width;
    entry["height"] = images[i].height;
    entry["shape"] = {shapes[i].channels, shapes[i].height, shapes[i].width};
    manifest["images"].push_back(std::move(entry));
  }
  std::ofstream out = open_output(fs::path(opt.out_dir) / "manifest.json");
  out << manifest.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct MapInput {
  std::string image;
  fs::path file;
};

std::vector<MapInput> map_inputs(const DecodeOptions& opt, int& stride) {
  const fs::path path(opt.maps);
  if (path.extension() == ".mtf") return {{path.stem().string(), path}};

  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + opt.maps);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
    stride = manifest.at("stride").get<int>();
    std::vector<MapInput> inputs;
    for (const auto& entry : manifest.at("images")) {
      const auto& id = entry.at("image");
      const std::string image =
          id.is_string() ? id.get<std::string>() : std::to_string(id.get<long long>());
      inputs.push_back({image, path.parent_path() / entry.at("file").get<std::string>()});
    }
    return inputs;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(opt.maps + ": malformed manifest: " + e.what());
  }
}

ImageAnnotation to_annotation(const std::string& image, const DecodeResult& result) {
  ImageAnnotation out;
  out.image = image;
  for (const Detection& d : result.detections) out.objects.push_back({d.box, false, d.score, {}});
  return out;
}

int cmd_decode(const DecodeOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.maps.empty() == opt.keypoints.empty()) {
    throw InputError("decode needs exactly one of --maps or --keypoints");
  }
  GroupThresholds thresholds;
  thresholds.center = opt.center_thresh >= 0.0 ? opt.center_thresh : opt.score_thresh;
  thresholds.midpoint = opt.mid_thresh >= 0.0 ? opt.mid_thresh : opt.score_thresh;
  const BoxBuilder builder = opt.decoder == "simple" ? BoxBuilder::kSimple : BoxBuilder::kRefined;

  std::vector<ImageAnnotation> results;
  if (!opt.maps.empty()) {
    int stride = opt.stride;
    const std::vector<MapInput> inputs = map_inputs(opt, stride);
    results.resize(inputs.size());
    std::vector<std::size_t> dropped(inputs.size(), 0);
    parallel_for(inputs.size(), [&](std::size_t i) {
      const TargetSet pred = unpack_targets(read_mtf_file(inputs[i].file.string()));
      const KeypointDetections kp = decode_maps(pred, stride, opt.topk, thresholds);
      const DecodeResult r = decode(kp.centers, kp.midpoints, thresholds, builder);
      dropped[i] = r.dropped;
      results[i] = to_annotation(inputs[i].image, r);
      results[i].width = static_cast<int>(pred.center_heat.width()) * stride;
      results[i].height = static_cast<int>(pred.center_heat.height()) * stride;
    });
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (dropped[i] > 0) {
        err << "warning: " << inputs[i].image << ": " << dropped[i]
            << " degenerate groups dropped\n";
      }
    }
  } else {
    const std::vector<ImageKeypoints> images = read_keypoints_file(opt.keypoints);
    results.resize(images.size());
    parallel_for(images.size(), [&](std::size_t i) {
      const DecodeResult r = decode(images[i].centers, images[i].midpoints, thresholds, builder);
      results[i] = to_annotation(images[i].image, r);
      results[i].width = images[i].width;
      results[i].height = images[i].height;
    });
  }

  emit(opt.out, out, [&](std::ostream& o) {
    for (const ImageAnnotation& r : results) {
      if (!r.objects.empty()) o << to_jsonl(r) << '\n';
    }
  });
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  const std::vector<ImageAnnotation> gt_images = read_annotations_file(opt.gt);
  const std::vector<ImageAnnotation> det_images = read_annotations_file(opt.det);

  std::set<std::string> image_ids;
  std::set<int> gt_classes;
  std::vector<GroundTruth> gts;
  for (const ImageAnnotation& image : gt_images) {
    image_ids.insert(image.image);
    for (const AnnotatedObject& o : image.objects) {
      if (o.box.class_id < 0 || (opt.classes > 0 && o.box.class_id >= opt.classes)) {
        throw InputError("ground truth of image " + image.image + " has unknown class " +
                         std::to_string(o.box.class_id));
      }
      gt_classes.insert(o.box.class_id);
      gts.push_back({image.image, o.box, o.difficult});
    }
  }

  std::vector<DetectionRecord> dets;
  for (const ImageAnnotation& image : det_images) {
    if (!image_ids.contains(image.image)) {
      throw InputError("detections reference unknown image " + image.image);
    }
    for (const AnnotatedObject& o : image.objects) {
      const int c = o.box.class_id;
      const bool known = opt.classes > 0 ? (c >= 0 && c < opt.classes) : gt_classes.contains(c);
      if (!known) {
        throw InputError("detection in image " + image.image + " has unknown class " +
                         std::to_string(c));
      }
      if (!o.score) throw InputError("detection in image " + image.image + " lacks a score");
      dets.push_back({image.image, o.box, *o.score});
    }
  }

  const EvalReport report = evaluate_voc07(dets, gts, opt.iou_thr);
  ordered_json j;
  j["metric"] = opt.metric;
  j["iou_thr"] = opt.iou_thr;
  j["map"] = report.map;
  j["classes"] = ordered_json::array();
  for (const ClassReport& c : report.classes) {
    ordered_json jc;
    jc["class"] = c.class_id;
    jc["ap"] = c.ap;
    jc["tp"] = c.true_positives;
    jc["fp"] = c.false_positives;
    jc["num_gt"] = c.num_gt;
    j["classes"].push_back(std::move(jc));
  }
  emit(opt.out, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_synth(const SynthOptions& opt) {
  SceneSpec spec = opt.spec;
  spec.layout = opt.layout == "harbor" ? Layout::kHarborRows : Layout::kRandom;
  spec.validate();
  fs::create_directories(opt.out_dir);

  std::vector<Scene> scenes(opt.images);
  parallel_for(opt.images, [&](std::size_t i) { scenes[i] = generate_scene(spec, i); });

  std::ofstream gt = open_output(fs::path(opt.out_dir) / "gt.jsonl");
  std::ofstream kp = open_output(fs::path(opt.out_dir) / "keypoints.jsonl");
  for (const Scene& s : scenes) {
    gt << to_jsonl(s.truth) << '\n';
    kp << to_jsonl(s.keypoints) << '\n';
  }
  return kExitOk;
}

int cmd_tile(const TileOptions& opt, std::ostream& out) {
  opt.spec.validate();
  const std::vector<ImageAnnotation> images = read_annotations_file(opt.annotations);
  std::vector<std::vector<ImageAnnotation>> tiles(images.size());
  parallel_for(images.size(), [&](std::size_t i) { tiles[i] = tile_annotation(images[i], opt.spec); });
  emit(opt.out, out, [&](std::ostream& o) {
    for (const auto& per_image : tiles) write_annotations(o, per_image);
  });
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Oriented-box keypoint encoding, decoding and evaluation"};
  app.name("midbox");
  app.require_subcommand(1);

  EncodeOptions enc;
  CLI::App* encode = app.add_subcommand("encode", "Render training targets from annotations");
  encode->add_option("annotations", enc.annotations, "Annotation JSONL")->required();
  encode->add_option("-o,--out-dir", enc.out_dir, "Directory for MTF files and manifest.json")
      ->required();
  encode->add_option("--stride", enc.stride, "Output stride")->capture_default_str()
      ->check(CLI::PositiveNumber);
  encode->add_option("--classes", enc.classes, "Number of classes")->capture_default_str()
      ->check(CLI::PositiveNumber);

  DecodeOptions dec;
  CLI::App* decode_cmd = app.add_subcommand("decode", "Decode maps or keypoints into boxes");
  decode_cmd->add_option("--maps", dec.maps, "manifest.json or a single .mtf file");
  decode_cmd->add_option("--keypoints", dec.keypoints, "Keypoint JSONL");
  decode_cmd->add_option("-o,--out", dec.out, "Detection JSONL (default stdout)");
  decode_cmd->add_option("--decoder", dec.decoder, "Box builder")
      ->capture_default_str()
      ->check(CLI::IsMember({"refined", "simple"}));
  decode_cmd->add_option("--stride", dec.stride, "Stride of a bare .mtf input")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  decode_cmd->add_option("--score-thresh", dec.score_thresh, "Keypoint score threshold")
      ->capture_default_str();
  decode_cmd->add_option("--center-thresh", dec.center_thresh, "Center threshold override");
  decode_cmd->add_option("--mid-thresh", dec.mid_thresh, "Midpoint threshold override");
  decode_cmd->add_option("--topk", dec.topk, "Peaks kept per channel")->capture_default_str();

  EvalOptions ev;
  CLI::App* eval = app.add_subcommand("eval", "VOC07 evaluation of detections");
  eval->add_option("gt", ev.gt, "Ground-truth JSONL")->required();
  eval->add_option("det", ev.det, "Detection JSONL")->required();
  eval->add_option("-o,--out", ev.out, "Report JSON (default stdout)");
  eval->add_option("--iou-thr", ev.iou_thr, "IoU threshold")->capture_default_str();
  eval->add_option("--metric", ev.metric, "Metric")
      ->capture_default_str()
      ->check(CLI::IsMember({"voc07"}));
  eval->add_option("--classes", ev.classes, "Number of classes (default: classes in the GT)");

  SynthOptions syn;
  CLI::App* synth = app.add_subcommand("synth", "Generate seeded synthetic scenes");
  synth->add_option("-o,--out-dir", syn.out_dir, "Directory for gt.jsonl and keypoints.jsonl")
      ->required();
  synth->add_option("--images", syn.images, "Number of scenes")->capture_default_str();
  synth->add_option("--seed", syn.spec.seed, "Master seed")->capture_default_str();
  synth->add_option("--width", syn.spec.width)->capture_default_str();
  synth->add_option("--height", syn.spec.height)->capture_default_str();
  synth->add_option("--objects", syn.spec.object_count)->capture_default_str();
  synth->add_option("--layout", syn.layout)
      ->capture_default_str()
      ->check(CLI::IsMember({"random", "harbor"}));
  synth->add_option("--gap", syn.spec.gap)->capture_default_str();
  synth->add_option("--ships-per-row", syn.spec.ships_per_row)->capture_default_str();
  synth->add_option("--length-min", syn.spec.length_min)->capture_default_str();
  synth->add_option("--length-max", syn.spec.length_max)->capture_default_str();
  synth->add_option("--beam-min", syn.spec.beam_min)->capture_default_str();
  synth->add_option("--beam-max", syn.spec.beam_max)->capture_default_str();
  synth->add_option("--angle-min", syn.spec.angle_min)->capture_default_str();
  synth->add_option("--angle-max", syn.spec.angle_max)->capture_default_str();
  synth->add_option("--classes", syn.spec.num_classes)->capture_default_str();
  synth->add_option("--sigma", syn.spec.noise.jitter_sigma, "Keypoint jitter (px)")
      ->capture_default_str();
  synth->add_option("--drop", syn.spec.noise.drop_prob, "Keypoint drop probability")
      ->capture_default_str();
  synth->add_option("--spurious", syn.spec.noise.spurious_rate, "Spurious points per image")
      ->capture_default_str();

  TileOptions til;
  CLI::App* tile = app.add_subcommand("tile", "Split annotations into overlapping tiles");
  tile->add_option("annotations", til.annotations, "Annotation JSONL")->required();
  tile->add_option("-o,--out", til.out, "Tiled JSONL (default stdout)");
  tile->add_option("--size", til.spec.size)->capture_default_str();
  tile->add_option("--overlap", til.spec.overlap)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*encode) return cmd_encode(enc, err);
    if (*decode_cmd) return cmd_decode(dec, out, err);
    if (*eval) return cmd_eval(ev, out);
    if (*synth) return cmd_synth(syn);
    if (*tile) return cmd_tile(til, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace midbox::cli
