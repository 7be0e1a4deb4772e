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

#include "vocrep/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "vocrep/error.hpp"
#include "vocrep/kernels.hpp"
#include "vocrep/rng.hpp"

namespace vocrep::audio {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

float clamp_unit(float v) { return std::clamp(v, -1.0f, 1.0f); }

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

// ---------------------------------------------------------------------------
// WAV
// ---------------------------------------------------------------------------

RawWaveform decode_wav(std::span<const std::uint8_t> bytes, std::string source_path) {
  const std::string where = source_path.empty() ? std::string("wav") : source_path;
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw DecodeError(where + ": not a RIFF/WAVE stream");
  }
  std::optional<std::uint16_t> format;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      throw DecodeError(where + ": chunk '" + std::string(bytes.begin() + pos, bytes.begin() + pos + 4) +
                        "' truncated (" + std::to_string(size) + " bytes declared, " +
                        std::to_string(bytes.size() - body) + " present)");
    }
    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) throw DecodeError(where + ": fmt chunk too small");
      format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      bits = read_u16(bytes, body + 14);
      if (*format == kFormatExtensible) {
        if (size < 40) throw DecodeError(where + ": extensible fmt chunk too small");
        format = read_u16(bytes, body + 24);
      }
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, size);
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!format) throw DecodeError(where + ": missing fmt chunk");
  if (!have_data) throw DecodeError(where + ": missing data chunk");
  if (channels == 0 || rate == 0) throw DecodeError(where + ": zero channels or sample rate");

  const bool pcm16 = *format == kFormatPcm && bits == 16;
  const bool f32 = *format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw UnsupportedFormatError(where + ": unsupported encoding (format " +
                                 std::to_string(*format) + ", " + std::to_string(bits) +
                                 " bits); expected PCM16 or FLOAT32");
  }
  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  if (data.size() % frame_bytes != 0) {
    throw DecodeError(where + ": data chunk is not a whole number of frames");
  }
  const std::size_t frames = data.size() / frame_bytes;

  RawWaveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  w.source_path = std::move(source_path);
  w.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = f * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(data, at)) / 32768.0;
      } else {
        const std::uint32_t raw = read_u32(data, at);
        float v;
        std::memcpy(&v, &raw, sizeof v);
        acc += std::isfinite(v) ? v : 0.0f;
      }
    }
    w.samples[f] = clamp_unit(static_cast<float>(acc / channels));
  }
  return w;
}

std::vector<std::uint8_t> encode_wav(std::span<const float> samples, int sample_rate_hz,
                                     WavEncoding encoding, int channels) {
  if (channels < 1) throw ArgumentError("encode_wav: channels must be >= 1");
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t frames = static_cast<std::uint32_t>(samples.size() / channels);
  const std::uint32_t data_bytes = frames * channels * (bits / 8);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * channels * (bits / 8));
  put_u16(out, static_cast<std::uint16_t>(channels * (bits / 8)));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (std::size_t i = 0; i < static_cast<std::size_t>(frames) * channels; ++i) {
    const float v = clamp_unit(samples[i]);
    if (pcm16) {
      const long q = std::lround(v * 32768.0f);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L))));
    } else {
      std::uint32_t raw;
      std::memcpy(&raw, &v, sizeof raw);
      put_u32(out, raw);
    }
  }
  return out;
}

RawWaveform read_wav(const fs::path& path) {
  const auto bytes = read_file(path);
  return decode_wav(bytes, path.string());
}

void write_wav(const fs::path& path, const RawWaveform& w, WavEncoding encoding) {
  const auto bytes = encode_wav(w.samples, w.sample_rate_hz, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// resampling
// ---------------------------------------------------------------------------

RawWaveform resample(const RawWaveform& w, int target_hz) {
  if (w.sample_rate_hz < 8000) {
    throw ArgumentError("resample: source rate " + std::to_string(w.sample_rate_hz) +
                        " Hz below the 8000 Hz minimum");
  }
  if (target_hz != kSampleRate) throw ArgumentError("resample: target rate must be 16000 Hz");
  if (w.sample_rate_hz == target_hz) return w;

  RawWaveform out;
  out.sample_rate_hz = target_hz;
  out.source_path = w.source_path;
  const auto n = static_cast<std::size_t>(
      std::llround(static_cast<double>(w.samples.size()) * target_hz / w.sample_rate_hz));
  out.samples.resize(n);
  kernels::parallel::resample(w.samples, w.sample_rate_hz, target_hz, kKaiserBeta, out.samples);
  for (float& v : out.samples) v = clamp_unit(v);
  return out;
}

RawWaveform load_audio(const fs::path& path) {
  const char* cache_env = std::getenv("VOCREP_CACHE");
  fs::path cached;
  if (cache_env && *cache_env) {
    std::error_code ec;
    const auto abs = fs::absolute(path, ec);
    const auto size = fs::file_size(path, ec);
    const auto mtime = fs::last_write_time(path, ec).time_since_epoch().count();
    std::ostringstream key;
    key << abs.string() << '|' << size << '|' << mtime;
    std::ostringstream name;
    name << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(key.str()) << ".wav";
    cached = fs::path(cache_env) / name.str();
    if (fs::exists(cached, ec)) {
      auto w = read_wav(cached);
      w.source_path = path.string();
      return w;
    }
  }
  auto w = resample(read_wav(path));
  w.source_path = path.string();
  if (!cached.empty()) {
    std::error_code ec;
    fs::create_directories(cached.parent_path(), ec);
    // Write to a temporary name first so a concurrent reader never sees a
    // partial file.
    const fs::path tmp = cached.string() + ".tmp";
    write_wav(tmp, w, WavEncoding::kFloat32);
    fs::rename(tmp, cached, ec);
  }
  return w;
}

// ---------------------------------------------------------------------------
// chunking
// ---------------------------------------------------------------------------

std::vector<Chunk> chunk_for_pretraining(const RawWaveform& w, double chunk_s) {
  if (!(chunk_s > 0.0)) throw ArgumentError("chunk_for_pretraining: chunk length must be > 0");
  const auto chunk_len = static_cast<std::size_t>(std::llround(chunk_s * w.sample_rate_hz));
  const auto min_tail = static_cast<std::size_t>(std::llround(0.2 * chunk_s * w.sample_rate_hz));
  std::vector<Chunk> out;
  const std::size_t n = w.samples.size();
  std::size_t start = 0;
  for (; start + chunk_len <= n; start += chunk_len) {
    Chunk c;
    c.audio.sample_rate_hz = w.sample_rate_hz;
    c.audio.source_path = w.source_path;
    c.audio.samples.assign(w.samples.begin() + start, w.samples.begin() + start + chunk_len);
    out.push_back(std::move(c));
  }
  const std::size_t rest = n - start;
  if (rest > 0 && rest >= min_tail) {
    Chunk c;
    c.audio.sample_rate_hz = w.sample_rate_hz;
    c.audio.source_path = w.source_path;
    c.audio.samples.assign(chunk_len, 0.0f);
    std::copy(w.samples.begin() + start, w.samples.end(), c.audio.samples.begin());
    c.padded = true;
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// manifest
// ---------------------------------------------------------------------------

Manifest::Manifest(std::vector<ManifestEntry> entries) {
  for (auto& e : entries) add(std::move(e));
}

void Manifest::add(ManifestEntry e) {
  if (index_.count(e.path)) throw ArgumentError("manifest: duplicate path " + e.path);
  if (e.duration_s < 0.0 || e.num_samples < 0) {
    throw ArgumentError("manifest: negative duration for " + e.path);
  }
  const double expected = static_cast<double>(e.num_samples) / kSampleRate;
  if (std::abs(expected - e.duration_s) > 1e-3) {
    throw ArgumentError("manifest: duration_s " + std::to_string(e.duration_s) +
                        " disagrees with num_samples for " + e.path);
  }
  index_.emplace(e.path, entries_.size());
  entries_.push_back(std::move(e));
}

std::vector<std::string> Manifest::labels() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (e.label) out.push_back(*e.label);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Manifest Manifest::subset(const std::vector<std::size_t>& indices) const {
  Manifest m;
  for (std::size_t i : indices) m.add(entries_.at(i));
  return m;
}

std::string Manifest::to_jsonl() const {
  std::string out;
  for (const auto& e : entries_) {
    json j;
    j["path"] = e.path;
    j["dataset"] = e.dataset;
    j["label"] = e.label ? json(*e.label) : json(nullptr);
    j["duration_s"] = e.duration_s;
    j["num_samples"] = e.num_samples;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Manifest Manifest::from_jsonl(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.dataset = j.value("dataset", std::string());
      if (j.contains("label") && !j["label"].is_null()) e.label = j["label"].get<std::string>();
      e.num_samples = j.at("num_samples").get<std::int64_t>();
      e.duration_s = j.contains("duration_s") ? j["duration_s"].get<double>()
                                              : static_cast<double>(e.num_samples) / kSampleRate;
      m.add(std::move(e));
    } catch (const json::exception& ex) {
      throw ArgumentError("manifest line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return m;
}

Manifest Manifest::read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_jsonl(ss.str());
}

void Manifest::write(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << to_jsonl();
}

// ---------------------------------------------------------------------------
// statistics
// ---------------------------------------------------------------------------

namespace {

CorpusStats stats_of(double total_s, std::int64_t count) {
  CorpusStats s;
  s.total_hours = total_s / 3600.0;
  s.num_samples = count;
  s.avg_duration_s = count > 0 ? total_s / static_cast<double>(count) : 0.0;
  return s;
}

}  // namespace

CorpusStats corpus_stats(const Manifest& m) {
  if (m.empty()) throw EmptyCorpusError("corpus_stats: manifest is empty");
  // Sort before summing so the result does not depend on manifest order.
  std::vector<double> d;
  d.reserve(m.size());
  for (const auto& e : m.entries()) d.push_back(e.duration_s);
  std::sort(d.begin(), d.end());
  double total = 0.0;
  for (double v : d) total += v;
  return stats_of(total, static_cast<std::int64_t>(m.size()));
}

std::vector<std::pair<std::string, CorpusStats>> corpus_stats_by_dataset(const Manifest& m) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> groups;
  for (const auto& e : m.entries()) {
    auto [it, inserted] = groups.try_emplace(e.dataset);
    if (inserted) order.push_back(e.dataset);
    it->second.push_back(e.duration_s);
  }
  std::vector<std::pair<std::string, CorpusStats>> out;
  for (const auto& name : order) {
    auto d = groups[name];
    std::sort(d.begin(), d.end());
    double total = 0.0;
    for (double v : d) total += v;
    out.emplace_back(name, stats_of(total, static_cast<std::int64_t>(d.size())));
  }
  return out;
}

std::string format_stats_table(const Manifest& m, const std::string& total_name) {
  const auto rows = corpus_stats_by_dataset(m);
  const auto total = corpus_stats(m);
  std::size_t width = std::max<std::size_t>(total_name.size(), 7);
  for (const auto& [name, _] : rows) width = std::max(width, name.size());
  std::ostringstream os;
  auto line = [&](const std::string& name, const CorpusStats& s) {
    os << std::left << std::setw(static_cast<int>(width)) << name << "  " << std::right
       << std::fixed << std::setprecision(2) << std::setw(9) << s.total_hours << "  "
       << std::setw(9) << s.num_samples << "  " << std::setw(12) << s.avg_duration_s << '\n';
  };
  os << std::left << std::setw(static_cast<int>(width)) << "Dataset" << "  " << std::right
     << std::setw(9) << "Dur. (h)" << "  " << std::setw(9) << "# Samples" << "  " << std::setw(12)
     << "Avg Dur. (s)" << '\n';
  for (const auto& [name, s] : rows) line(name.empty() ? std::string("(none)") : name, s);
  line(total_name, total);
  return os.str();
}

// ---------------------------------------------------------------------------
// folds
// ---------------------------------------------------------------------------

std::vector<std::size_t> FoldSplit::members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldSplit::complement(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldSplit::fold_sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(num_folds), 0);
  for (int a : assignments) ++out[static_cast<std::size_t>(a)];
  return out;
}

std::string FoldSplit::to_json() const {
  json j;
  j["num_folds"] = num_folds;
  j["seed"] = seed;
  j["stratified"] = stratified;
  j["assignments"] = assignments;
  return j.dump();
}

FoldSplit FoldSplit::from_json(const std::string& text) {
  const json j = json::parse(text);
  FoldSplit f;
  f.num_folds = j.at("num_folds").get<int>();
  f.seed = j.at("seed").get<std::uint64_t>();
  f.stratified = j.at("stratified").get<bool>();
  f.assignments = j.at("assignments").get<std::vector<int>>();
  for (int a : f.assignments) {
    if (a < 0 || a >= f.num_folds) throw ArgumentError("fold split: assignment out of range");
  }
  return f;
}

FoldSplit split_folds(const Manifest& m, int k, std::uint64_t seed, bool stratified) {
  if (k < 2) throw ArgumentError("split_folds: need at least 2 folds");
  FoldSplit split;
  split.num_folds = k;
  split.seed = seed;
  split.stratified = stratified;
  split.assignments.assign(m.size(), -1);
  Rng rng = Rng::substream(seed, "folds");

  if (!stratified) {
    std::vector<std::size_t> order(m.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i) split.assignments[order[i]] = static_cast<int>(i % k);
    return split;
  }

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i].label) {
      throw ArgumentError("split_folds: stratified split needs a label on every entry (" +
                          m[i].path + ")");
    }
    groups[*m[i].label].push_back(i);
  }
  std::size_t dealer = 0;
  for (auto& [label, members] : groups) {
    if (members.size() < static_cast<std::size_t>(k)) {
      split.warnings.push_back("class '" + label + "' has " + std::to_string(members.size()) +
                               " members, fewer than " + std::to_string(k) + " folds");
    }
    rng.shuffle(members);
    for (std::size_t i : members) {
      split.assignments[i] = static_cast<int>(dealer % k);
      ++dealer;
    }
  }
  return split;
}

std::pair<Manifest, Manifest> holdout_validation(const Manifest& m, double fraction,
                                                 std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 0.5)) {
    throw ArgumentError("holdout_validation: fraction must lie in (0, 0.5)");
  }
  std::vector<std::size_t> order(m.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = Rng::substream(seed, "holdout");
  rng.shuffle(order);
  auto n_valid = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m.size())));
  if (n_valid == 0 && m.size() >= 2) n_valid = 1;
  std::vector<std::uint8_t> is_valid(m.size(), 0);
  for (std::size_t i = 0; i < n_valid; ++i) is_valid[order[i]] = 1;
  std::vector<std::size_t> train, valid;
  for (std::size_t i = 0; i < m.size(); ++i) (is_valid[i] ? valid : train).push_back(i);
  return {m.subset(train), m.subset(valid)};
}

}  // namespace vocrep::audio
