// Copyright 2026 The vocrep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vocrep/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "vocrep/error.hpp"

namespace vocrep {

namespace {

constexpr char kMagic[4] = {'V', 'O', 'C', '2'};
constexpr std::uint8_t kDtypeF32 = 0;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void put(U v) {
    bytes(&v, sizeof v);
  }
  void record(const TensorRecord& r) {
    if (r.name.size() > 0xFFFF) throw ArgumentError("checkpoint: tensor name too long");
    if (r.shape.size() > 0xFF) throw ArgumentError("checkpoint: tensor rank too large");
    put<std::uint16_t>(static_cast<std::uint16_t>(r.name.size()));
    bytes(r.name.data(), r.name.size());
    put<std::uint8_t>(kDtypeF32);
    put<std::uint8_t>(static_cast<std::uint8_t>(r.shape.size()));
    for (auto d : r.shape) put<std::uint64_t>(d);
    bytes(r.values.data(), r.values.size() * sizeof(float));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  void bytes(void* p, std::size_t n) {
    if (n > b_.size() - pos_) throw CheckpointFormatError("checkpoint: unexpected end of data");
    std::memcpy(p, b_.data() + pos_, n);
    pos_ += n;
  }
  template <typename U>
  U get() {
    U v;
    bytes(&v, sizeof v);
    return v;
  }
  bool done() const { return pos_ == b_.size(); }
  TensorRecord record() {
    TensorRecord r;
    r.name.resize(get<std::uint16_t>());
    bytes(r.name.data(), r.name.size());
    const auto dtype = get<std::uint8_t>();
    if (dtype != kDtypeF32) {
      throw CheckpointFormatError("checkpoint: unsupported dtype " + std::to_string(dtype) +
                                  " for " + r.name);
    }
    const auto rank = get<std::uint8_t>();
    std::uint64_t count = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
      const auto d = get<std::uint64_t>();
      r.shape.push_back(static_cast<std::size_t>(d));
      count *= d;
    }
    if (count > (b_.size() - pos_) / sizeof(float)) {
      throw CheckpointFormatError("checkpoint: tensor " + r.name + " overruns the file");
    }
    r.values.resize(count);
    bytes(r.values.data(), count * sizeof(float));
    return r;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

const TensorRecord* Checkpoint::find(const std::string& name) const {
  for (const auto& r : params)
    if (r.name == name) return &r;
  return nullptr;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& c) {
  ojson header = ojson::object();
  header["config"] = c.config;
  header["update_step"] = c.update_step;
  header["validation_loss"] = c.validation_loss ? ojson(*c.validation_loss) : ojson(nullptr);
  header["num_params"] = c.params.size();
  header["optimizer_step"] = c.optimizer_step;
  const std::string text = header.dump();

  Writer w;
  w.bytes(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(text.size());
  w.bytes(text.data(), text.size());
  for (const auto& r : c.params) w.record(r);
  for (const auto& r : c.optimizer) w.record(r);
  return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointFormatError("checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointFormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto len = r.get<std::uint64_t>();
  if (len > bytes.size()) throw CheckpointFormatError("checkpoint: header length overruns file");
  std::string text(len, '\0');
  r.bytes(text.data(), text.size());

  Checkpoint c;
  std::uint64_t num_params = 0;
  try {
    const auto header = ojson::parse(text);
    c.config = header.at("config");
    c.update_step = header.at("update_step").get<std::uint64_t>();
    if (!header.at("validation_loss").is_null()) {
      c.validation_loss = header["validation_loss"].get<double>();
    }
    num_params = header.at("num_params").get<std::uint64_t>();
    c.optimizer_step = header.value("optimizer_step", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointFormatError(std::string("checkpoint header: ") + e.what());
  }
  while (!r.done()) {
    auto rec = r.record();
    (c.params.size() < num_params ? c.params : c.optimizer).push_back(std::move(rec));
  }
  if (c.params.size() != num_params) {
    throw CheckpointFormatError("checkpoint: header announces " + std::to_string(num_params) +
                                " tensors, file holds " + std::to_string(c.params.size()));
  }
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const auto bytes = serialize_checkpoint(c);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
  return deserialize_checkpoint(bytes);
}

Checkpoint make_checkpoint(const RunConfig& cfg, const model::NamedParams<float>& params,
                           std::uint64_t update_step, std::optional<double> validation_loss,
                           const std::vector<nn::AdamState<float>>* adam) {
  Checkpoint c;
  c.config = to_json(cfg);
  c.update_step = update_step;
  c.validation_loss = validation_loss;
  for (const auto& [name, t] : params) {
    c.params.push_back({name, t.shape(), std::vector<float>(t.values().begin(), t.values().end())});
  }
  if (adam) {
    if (adam->size() != params.size()) throw ArgumentError("make_checkpoint: optimizer size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& s = (*adam)[i];
      if (s.m.empty()) continue;
      c.optimizer.push_back({"adam.m." + params[i].first, params[i].second.shape(), s.m});
      c.optimizer.push_back({"adam.v." + params[i].first, params[i].second.shape(), s.v});
      c.optimizer_step = s.step;
    }
  }
  return c;
}

LoadReport load_params(const Checkpoint& c, model::NamedParams<float>& params, bool require_all) {
  std::unordered_map<std::string, const TensorRecord*> by_name;
  for (const auto& r : c.params) by_name.emplace(r.name, &r);

  LoadReport report;
  std::vector<std::string> mismatched;
  for (const auto& [name, t] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      report.missing.push_back(name);
    } else if (it->second->shape != t.shape()) {
      mismatched.push_back(name + " (file " + nn::shape_str(it->second->shape) + ", model " +
                           nn::shape_str(t.shape()) + ")");
    }
  }
  std::unordered_map<std::string, bool> known;
  for (const auto& [name, _] : params) known.emplace(name, true);
  for (const auto& r : c.params)
    if (!known.count(r.name)) report.unused.push_back(r.name);

  if (!mismatched.empty() || (require_all && !report.missing.empty())) {
    std::string msg = "checkpoint is incompatible with the configured architecture:";
    for (const auto& m : mismatched) msg += "\n  shape mismatch: " + m;
    if (require_all)
      for (const auto& m : report.missing) msg += "\n  missing: " + m;
    throw IncompatibleCheckpointError(msg);
  }
  for (auto& [name, t] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) continue;
    std::copy(it->second->values.begin(), it->second->values.end(), t.mutable_values().begin());
    report.loaded.push_back(name);
  }
  return report;
}

}  // namespace vocrep
