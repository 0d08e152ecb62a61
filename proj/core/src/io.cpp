// Copyright 2026 The hoi-relparse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "hoi/io.hpp"

#include <fstream>
#include <sstream>

#include "hoi/errors.hpp"
#include "json.hpp"

namespace hoi {

using nlohmann::json;

namespace {

json box_json(const BoundingBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw DataError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(where + ": field '" + key + "' has the wrong type");
  }
}

BoundingBox box_from(const json& j, const char* key, const std::string& where) {
  const auto v = field<std::vector<double>>(j, key, where);
  if (v.size() != 4) throw DataError(where + ": '" + key + "' must hold 4 numbers");
  return {v[0], v[1], v[2], v[3]};
}

json parse(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(where + ": malformed JSON (" + e.what() + ")");
  }
}

json scene_json(const Scene& scene) {
  json instances = json::array();
  auto add = [&](const Instance& inst) {
    json j{{"id", inst.id},         {"is_human", inst.is_human},       {"class_id", inst.class_id},
           {"box", box_json(inst.box)}, {"score", inst.score}, {"appearance", inst.appearance}};
    if (inst.keypoints) {
      json kp = json::array();
      for (const auto& k : *inst.keypoints) kp.push_back({k.x, k.y});
      j["keypoints"] = kp;
    }
    instances.push_back(std::move(j));
  };
  for (const auto& h : scene.humans) add(h);
  for (const auto& o : scene.objects) add(o);
  json gts = json::array();
  for (const auto& g : scene.gt_triplets) {
    gts.push_back({{"human_box", box_json(g.human_box)},
                   {"object_box", box_json(g.object_box)},
                   {"object_class", g.object_class},
                   {"verb", g.verb}});
  }
  return {{"scene_id", scene.scene_id},
          {"image_width", scene.image_width},
          {"image_height", scene.image_height},
          {"instances", instances},
          {"gt_triplets", gts}};
}

Scene scene_from(const json& j, int default_id) {
  const std::string where = "scene";
  if (!j.is_object()) throw DataError("scene record is not a JSON object");
  Scene scene;
  scene.scene_id = j.contains("scene_id") ? field<int>(j, "scene_id", where) : default_id;
  const std::string at = "scene " + std::to_string(scene.scene_id);
  scene.image_width = field<int>(j, "image_width", at);
  scene.image_height = field<int>(j, "image_height", at);
  for (const auto& ij : field<json>(j, "instances", at)) {
    Instance inst;
    inst.id = field<int>(ij, "id", at);
    const std::string where_inst = at + " instance " + std::to_string(inst.id);
    inst.is_human = field<bool>(ij, "is_human", where_inst);
    inst.class_id = field<int>(ij, "class_id", where_inst);
    inst.box = box_from(ij, "box", where_inst);
    inst.score = field<double>(ij, "score", where_inst);
    inst.appearance = field<std::vector<double>>(ij, "appearance", where_inst);
    if (ij.contains("keypoints") && !ij.at("keypoints").is_null()) {
      const auto pts = field<std::vector<std::vector<double>>>(ij, "keypoints", where_inst);
      if (pts.size() != kNumKeypoints) {
        throw DataError(where_inst + ": expected " + std::to_string(kNumKeypoints) + " keypoints, got " +
                        std::to_string(pts.size()));
      }
      Keypoints kp{};
      for (std::size_t k = 0; k < kNumKeypoints; ++k) {
        if (pts[k].size() != 2) throw DataError(where_inst + ": keypoint must be an [x, y] pair");
        kp[k] = {pts[k][0], pts[k][1]};
      }
      inst.keypoints = kp;
    }
    (inst.is_human ? scene.humans : scene.objects).push_back(std::move(inst));
  }
  if (j.contains("gt_triplets")) {
    for (const auto& gj : j.at("gt_triplets")) {
      GtTriplet g;
      g.human_box = box_from(gj, "human_box", at);
      g.object_box = box_from(gj, "object_box", at);
      g.object_class = field<int>(gj, "object_class", at);
      g.verb = field<int>(gj, "verb", at);
      scene.gt_triplets.push_back(g);
    }
  }
  validate_scene(scene);
  return scene;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out.flush()) throw DataError("cannot write '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot write '" + path.string() + "': " + ec.message());
}

std::string scene_to_json(const Scene& scene) { return scene_json(scene).dump(); }

Scene scene_from_json(const std::string& text, int default_id) {
  return scene_from(parse(text, "scene"), default_id);
}

std::vector<Scene> read_scenes(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  const std::string where = "'" + path.string() + "'";
  std::vector<Scene> scenes;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return scenes;
  json doc;
  bool whole = true;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error&) {
    whole = false;
  }
  if (whole) {
    if (doc.is_array()) {
      for (std::size_t i = 0; i < doc.size(); ++i) scenes.push_back(scene_from(doc[i], static_cast<int>(i)));
    } else {
      scenes.push_back(scene_from(doc, 0));
    }
    return scenes;
  }
  std::istringstream lines(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = parse(line, where + " line " + std::to_string(number));
    scenes.push_back(scene_from(j, static_cast<int>(scenes.size())));
  }
  return scenes;
}

void write_scenes(const std::filesystem::path& path, std::span<const Scene> scenes) {
  std::string text;
  for (const auto& s : scenes) text += scene_to_json(s) + "\n";
  write_text(path, text);
}

std::string knowledge_to_json(const KnowledgeBase& kb) {
  json cooccur = json::object();
  for (std::size_t c = 0; c < kb.cooccur().size(); ++c) {
    if (!kb.cooccur()[c].empty()) cooccur[std::to_string(c)] = kb.cooccur()[c];
  }
  json j{{"num_verbs", kb.num_verbs()},
         {"num_object_classes", kb.num_object_classes()},
         {"cooccur", cooccur},
         {"embedding_seed", kb.embedding_seed()}};
  return j.dump(2);
}

KnowledgeBase knowledge_from_json(const std::string& text) {
  const json j = parse(text, "knowledge base");
  const std::string where = "knowledge base";
  const int num_verbs = field<int>(j, "num_verbs", where);
  const int num_classes = field<int>(j, "num_object_classes", where);
  if (num_classes < 1) throw DataError("knowledge base: num_object_classes must be positive");
  std::vector<std::vector<int>> cooccur(static_cast<std::size_t>(num_classes));
  const json entries = field<json>(j, "cooccur", where);
  if (!entries.is_object()) throw DataError("knowledge base: 'cooccur' must map class ids to verb lists");
  for (const auto& [key, value] : entries.items()) {
    int c = 0;
    try {
      std::size_t used = 0;
      c = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw DataError("knowledge base: class key '" + key + "' is not an integer");
    }
    if (c < 0 || c >= num_classes) {
      throw DataError("knowledge base: class " + key + " outside " + std::to_string(num_classes) + " classes");
    }
    try {
      cooccur[static_cast<std::size_t>(c)] = value.get<std::vector<int>>();
    } catch (const json::exception&) {
      throw DataError("knowledge base: verbs of class " + key + " must be integers");
    }
  }
  const std::uint64_t seed =
      j.contains("embedding_seed") ? field<std::uint64_t>(j, "embedding_seed", where) : kDefaultEmbeddingSeed;
  try {
    return KnowledgeBase(num_verbs, num_classes, std::move(cooccur), seed);
  } catch (const ConfigError& e) {
    throw DataError(std::string("knowledge base: ") + e.what());
  }
}

KnowledgeBase read_knowledge(const std::filesystem::path& path) {
  return knowledge_from_json(read_text(path));
}

void write_knowledge(const std::filesystem::path& path, const KnowledgeBase& kb) {
  write_text(path, knowledge_to_json(kb) + "\n");
}

std::string triplet_to_json(const ScoredTriplet& t) {
  json j{{"scene_id", t.scene_id},   {"human_id", t.human_id},         {"human_box", box_json(t.human_box)},
         {"human_score", t.human_score}, {"object_id", t.object_id}, {"object_box", box_json(t.object_box)},
         {"object_class", t.object_class}, {"object_score", t.object_score}, {"verb", t.verb},
         {"s_r", t.s_r},             {"s_c", t.s_c},                   {"score", t.score}};
  return j.dump();
}

ScoredTriplet triplet_from_json(const std::string& text) {
  const json j = parse(text, "detection");
  const std::string where = "detection";
  ScoredTriplet t;
  t.scene_id = field<int>(j, "scene_id", where);
  t.human_id = field<int>(j, "human_id", where);
  t.human_box = box_from(j, "human_box", where);
  t.human_score = field<double>(j, "human_score", where);
  t.object_id = field<int>(j, "object_id", where);
  t.object_box = box_from(j, "object_box", where);
  t.object_class = field<int>(j, "object_class", where);
  t.object_score = field<double>(j, "object_score", where);
  t.verb = field<int>(j, "verb", where);
  t.s_r = field<double>(j, "s_r", where);
  t.s_c = field<double>(j, "s_c", where);
  t.score = field<double>(j, "score", where);
  return t;
}

std::vector<ScoredTriplet> read_detections(const std::filesystem::path& path) {
  std::istringstream lines(read_text(path));
  std::vector<ScoredTriplet> out;
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(triplet_from_json(line));
  }
  return out;
}

void write_detections(const std::filesystem::path& path, std::span<const ScoredTriplet> triplets) {
  std::string text;
  for (const auto& t : triplets) text += triplet_to_json(t) + "\n";
  write_text(path, text);
}

std::string report_to_json(const ApReport& report) {
  json verbs = json::array();
  for (const auto& v : report.per_verb) {
    verbs.push_back({{"verb", v.verb},
                     {"ap", v.ap},
                     {"num_gt", v.num_gt},
                     {"detections", v.detections},
                     {"true_positives", v.true_positives}});
  }
  json j{{"mean_ap", report.mean_ap},
         {"per_verb", verbs},
         {"detections", report.detections},
         {"ground_truths", report.ground_truths}};
  return j.dump(2);
}

}  // namespace hoi
