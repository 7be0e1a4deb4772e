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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace vocrep::audio {

inline constexpr int kSampleRate = 16000;
inline constexpr double kKaiserBeta = 8.6;

/// Mono amplitudes in [-1, 1].
struct RawWaveform {
  std::vector<float> samples;
  int sample_rate_hz = kSampleRate;
  std::string source_path;

  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

/// Parses a RIFF/WAVE byte stream (PCM16 or FLOAT32, any channel count).
/// Channels are averaged to mono; the file's sample rate is kept.
RawWaveform decode_wav(std::span<const std::uint8_t> bytes, std::string source_path = {});
std::vector<std::uint8_t> encode_wav(std::span<const float> samples, int sample_rate_hz,
                                     WavEncoding encoding = WavEncoding::kPcm16,
                                     int channels = 1);

RawWaveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const RawWaveform& w,
               WavEncoding encoding = WavEncoding::kPcm16);

/// Band-limited resampling with a Kaiser-windowed sinc (beta 8.6, 32 taps per
/// phase at the lower rate). Identity when the rates already match.
RawWaveform resample(const RawWaveform& w, int target_hz = kSampleRate);

/// Decodes and resamples to 16 kHz. When VOCREP_CACHE names a directory the
/// resampled audio is cached there keyed by path, size and modification time.
RawWaveform load_audio(const std::filesystem::path& path);

struct Chunk {
  RawWaveform audio;
  bool padded = false;
};

/// Splits into consecutive non-overlapping windows of `chunk_s` seconds. A
/// trailing remainder of at least a fifth of a window (2 s for 10 s windows)
/// is zero-padded to full length; shorter remainders are dropped.
std::vector<Chunk> chunk_for_pretraining(const RawWaveform& w, double chunk_s = 10.0);

struct ManifestEntry {
  std::string path;
  std::string dataset;
  std::optional<std::string> label;
  double duration_s = 0.0;
  std::int64_t num_samples = 0;
};

class Manifest {
 public:
  Manifest() = default;
  explicit Manifest(std::vector<ManifestEntry> entries);

  /// Throws ArgumentError on a duplicate path or inconsistent duration.
  void add(ManifestEntry e);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const ManifestEntry& operator[](std::size_t i) const { return entries_[i]; }

  /// Sorted distinct labels; entries without a label are skipped.
  std::vector<std::string> labels() const;
  Manifest subset(const std::vector<std::size_t>& indices) const;

  std::string to_jsonl() const;
  static Manifest from_jsonl(const std::string& text);
  static Manifest read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<ManifestEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct CorpusStats {
  double total_hours = 0.0;
  std::int64_t num_samples = 0;
  double avg_duration_s = 0.0;
};

CorpusStats corpus_stats(const Manifest& m);
/// Per-dataset statistics in order of first appearance.
std::vector<std::pair<std::string, CorpusStats>> corpus_stats_by_dataset(const Manifest& m);
/// Table with Dur. (h), # Samples and Avg Dur. (s) columns plus a total row.
std::string format_stats_table(const Manifest& m, const std::string& total_name = "Total");

struct FoldSplit {
  int num_folds = 10;
  std::uint64_t seed = 0;
  bool stratified = false;
  std::vector<int> assignments;
  std::vector<std::string> warnings;

  std::vector<std::size_t> members(int fold) const;
  std::vector<std::size_t> complement(int fold) const;
  std::vector<std::size_t> fold_sizes() const;

  std::string to_json() const;
  static FoldSplit from_json(const std::string& text);
};

/// Deterministic k-fold assignment. Stratified mode shuffles each label group
/// and deals its members round-robin, continuing the dealer position across
/// groups so total fold sizes also stay within one of each other.
FoldSplit split_folds(const Manifest& m, int k, std::uint64_t seed, bool stratified);

/// Seeded disjoint split; the validation side gets round(fraction * n) entries.
std::pair<Manifest, Manifest> holdout_validation(const Manifest& m, double fraction,
                                                 std::uint64_t seed);

}  // namespace vocrep::audio
