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
#include "hoi/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>

#include <zlib.h>

#include "hoi/errors.hpp"
#include "hoi/io.hpp"

namespace hoi {

namespace {

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const T le = to_little(value);
    const auto* p = reinterpret_cast<const char*>(&le);
    out_.append(p, sizeof(T));
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void put_doubles(std::span<const double> values) {
    for (double v : values) put<double>(v);
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(value);
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> get_doubles(std::uint64_t n) {
    if (n > (end_ - pos_) / sizeof(double)) throw DataError("checkpoint: payload overruns the file");
    std::vector<double> v(n);
    for (auto& x : v) x = get<double>();
    return v;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw DataError("checkpoint: payload overruns the file");
  }
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::string& bytes, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < n) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n - done, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + done), chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string describe(const ModelConfig& c, int verbs, int classes) {
  return "L_enc=" + std::to_string(c.encoder_layers) + " L_dec=" + std::to_string(c.decoder_layers) +
         " d=" + std::to_string(c.model_dim) + " heads=" + std::to_string(c.heads) +
         " V=" + std::to_string(verbs) + " O=" + std::to_string(classes) +
         " d_app=" + std::to_string(c.appearance_dim) + " hidden=" + std::to_string(c.hidden_dim) +
         " ka=" + (c.knowledge_augmentation ? "on" : "off");
}

}  // namespace

std::string encode_checkpoint(const Model& model, const SgdOptimizer* optimizer,
                              std::uint64_t iteration, std::uint64_t data_seed) {
  Writer w;
  w.bytes().append(kCheckpointMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  const ModelConfig& c = model.config();
  const KnowledgeBase& kb = model.knowledge();
  for (std::size_t v : {c.encoder_layers, c.decoder_layers, c.model_dim, c.heads}) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(kb.num_verbs()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(kb.num_object_classes()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.appearance_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.hidden_dim));
  w.put<std::uint8_t>(c.knowledge_augmentation ? 1 : 0);

  w.put<std::uint64_t>(kb.embedding_seed());
  for (const auto& verbs : kb.cooccur()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(verbs.size()));
    for (int v : verbs) w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
  }

  w.put<std::uint64_t>(iteration);
  w.put<std::uint64_t>(model.seed());
  w.put<std::uint64_t>(data_seed);

  const auto& entries = model.parameters().entries();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    w.put_string(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) w.put<std::uint64_t>(e);
    w.put_doubles(t.data());
  }

  const bool with_opt = optimizer != nullptr;
  w.put<std::uint8_t>(with_opt ? 1 : 0);
  if (with_opt) {
    w.put<double>(optimizer->learning_rate());
    w.put<double>(optimizer->momentum());
    w.put<double>(optimizer->weight_decay());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(optimizer->velocity().size()));
    for (const auto& v : optimizer->velocity()) {
      w.put<std::uint64_t>(v.size());
      w.put_doubles(v);
    }
  }
  w.put<std::uint32_t>(crc_of(w.bytes(), w.bytes().size()));
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw DataError("not a checkpoint: bad magic");
  }
  Checkpoint ck;
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  stored = to_little(stored);
  const std::uint32_t actual = crc_of(bytes, body);
  if (stored != actual) throw DataError("checkpoint checksum mismatch (truncated or corrupted file)");
  ck.checksum = actual;

  Reader r(bytes, body);
  r.get<std::uint32_t>();  // magic
  ck.version = r.get<std::uint32_t>();
  if (ck.version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(ck.version));
  }
  ck.config.encoder_layers = r.get<std::uint32_t>();
  ck.config.decoder_layers = r.get<std::uint32_t>();
  ck.config.model_dim = r.get<std::uint32_t>();
  ck.config.heads = r.get<std::uint32_t>();
  const auto num_verbs = static_cast<int>(r.get<std::uint32_t>());
  const auto num_classes = static_cast<int>(r.get<std::uint32_t>());
  ck.config.appearance_dim = r.get<std::uint32_t>();
  ck.config.hidden_dim = r.get<std::uint32_t>();
  ck.config.knowledge_augmentation = r.get<std::uint8_t>() != 0;

  const auto embedding_seed = r.get<std::uint64_t>();
  std::vector<std::vector<int>> cooccur(static_cast<std::size_t>(std::max(num_classes, 0)));
  for (auto& verbs : cooccur) {
    const auto n = r.get<std::uint32_t>();
    if (n > static_cast<std::uint32_t>(num_verbs)) throw DataError("checkpoint: malformed co-occurrence table");
    for (std::uint32_t i = 0; i < n; ++i) verbs.push_back(static_cast<int>(r.get<std::uint32_t>()));
  }
  try {
    ck.kb = KnowledgeBase(num_verbs, num_classes, std::move(cooccur), embedding_seed);
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }

  ck.iteration = r.get<std::uint64_t>();
  ck.model_seed = r.get<std::uint64_t>();
  ck.data_seed = r.get<std::uint64_t>();

  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    if (rank == 0 || rank > 8) throw DataError("checkpoint: tensor '" + name + "' has invalid rank");
    Shape shape(rank);
    for (auto& e : shape) e = r.get<std::uint64_t>();
    auto values = r.get_doubles(shape_numel(shape));
    ck.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }

  if (r.get<std::uint8_t>() != 0) {
    OptimizerRecord opt;
    opt.learning_rate = r.get<double>();
    opt.momentum = r.get<double>();
    opt.weight_decay = r.get<double>();
    const auto buffers = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < buffers; ++i) opt.velocity.push_back(r.get_doubles(r.get<std::uint64_t>()));
    ck.optimizer = std::move(opt);
  }
  if (r.position() != body) throw DataError("checkpoint: trailing bytes after payload");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const SgdOptimizer* optimizer, std::uint64_t iteration,
                     std::uint64_t data_seed) {
  write_text(path, encode_checkpoint(model, optimizer, iteration, data_seed));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_text(path));
}

void restore_parameters(Model& model, const Checkpoint& ck) {
  const ModelConfig& c = model.config();
  const ModelConfig& s = ck.config;
  const KnowledgeBase& kb = model.knowledge();
  if (c.encoder_layers != s.encoder_layers || c.decoder_layers != s.decoder_layers ||
      c.model_dim != s.model_dim || c.heads != s.heads || c.appearance_dim != s.appearance_dim ||
      c.hidden_dim != s.hidden_dim || c.knowledge_augmentation != s.knowledge_augmentation ||
      kb.num_verbs() != ck.kb.num_verbs() || kb.num_object_classes() != ck.kb.num_object_classes()) {
    throw ConfigError("checkpoint hyperparameters (" + describe(s, ck.kb.num_verbs(), ck.kb.num_object_classes()) +
                      ") do not match the model (" + describe(c, kb.num_verbs(), kb.num_object_classes()) + ")");
  }
  const auto& entries = model.parameters().entries();
  if (entries.size() != ck.tensors.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(ck.tensors.size()) + " tensors, model has " +
                      std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [name, target] = entries[i];
    const auto& [stored_name, stored] = ck.tensors[i];
    if (name != stored_name || target.shape() != stored.shape()) {
      throw ConfigError("checkpoint tensor '" + stored_name + "' " + shape_string(stored.shape()) +
                        " does not match model tensor '" + name + "' " + shape_string(target.shape()));
    }
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor target = entries[i].second;
    const auto src = ck.tensors[i].second.data();
    std::copy(src.begin(), src.end(), target.mutable_data().begin());
  }
}

Model model_from_checkpoint(const Checkpoint& checkpoint) {
  Model model(checkpoint.config, checkpoint.kb, checkpoint.model_seed);
  restore_parameters(model, checkpoint);
  return model;
}

std::optional<SgdOptimizer> optimizer_from_checkpoint(const Checkpoint& checkpoint) {
  if (!checkpoint.optimizer) return std::nullopt;
  const auto& o = *checkpoint.optimizer;
  SgdOptimizer opt(o.learning_rate, o.momentum, o.weight_decay);
  if (!o.velocity.empty()) opt.set_velocity(o.velocity);
  return opt;
}

}  // namespace hoi
