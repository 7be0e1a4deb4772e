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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "vocrep/audio_io.hpp"
#include "vocrep/error.hpp"
#include "vocrep/synth.hpp"

using namespace vocrep;
using namespace vocrep::audio;
namespace fs = std::filesystem;

namespace {

// Magnitude of the DFT bin nearest `freq` (Goertzel), normalized by length.
double tone_level(const std::vector<float>& x, double freq, int rate) {
  const double w = 2.0 * std::numbers::pi * freq / rate;
  double re = 0, im = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    re += x[i] * std::cos(w * i);
    im -= x[i] * std::sin(w * i);
  }
  return 2.0 * std::hypot(re, im) / static_cast<double>(x.size());
}

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("vocrep_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Manifest labeled_manifest(const std::vector<std::pair<std::string, std::size_t>>& counts) {
  Manifest m;
  std::size_t id = 0;
  for (const auto& [label, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) {
      m.add({"clip" + std::to_string(id++) + ".wav", "toy", label, 1.0, kSampleRate});
    }
  }
  return m;
}

}  // namespace

TEST(Wav, Pcm16RoundTrip) {
  const auto x = synth::tone(440.0, 0.1, 0.5);
  const auto bytes = encode_wav(x, kSampleRate);
  EXPECT_EQ(bytes.size(), 44 + 2 * x.size());
  const auto w = decode_wav(bytes);
  ASSERT_EQ(w.samples.size(), x.size());
  EXPECT_EQ(w.sample_rate_hz, kSampleRate);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(w.samples[i], x[i], 1.0 / 32767);
}

TEST(Wav, Float32RoundTripIsExact) {
  const auto x = synth::tone(1000.0, 0.05, 0.9, 0.3);
  const auto w = decode_wav(encode_wav(x, 22050, WavEncoding::kFloat32));
  EXPECT_EQ(w.sample_rate_hz, 22050);
  EXPECT_EQ(w.samples, x);
}

TEST(Wav, StereoIsAveraged) {
  // Interleaved L/R: (0.5, -0.5) and (0.25, 0.75)
  const std::vector<float> lr{0.5f, -0.5f, 0.25f, 0.75f};
  const auto w = decode_wav(encode_wav(lr, kSampleRate, WavEncoding::kFloat32, 2));
  ASSERT_EQ(w.samples.size(), 2u);
  EXPECT_FLOAT_EQ(w.samples[0], 0.0f);
  EXPECT_FLOAT_EQ(w.samples[1], 0.5f);
}

TEST(Wav, RejectsGarbageAndTruncation) {
  const std::vector<std::uint8_t> junk(64, 7);
  EXPECT_THROW(decode_wav(junk), DecodeError);
  auto bytes = encode_wav(synth::tone(440.0, 0.01, 0.5), kSampleRate);
  bytes.resize(30);
  EXPECT_THROW(decode_wav(bytes), DecodeError);
}

TEST(Wav, RejectsCompressedEncoding) {
  auto bytes = encode_wav(synth::tone(440.0, 0.01, 0.5), kSampleRate);
  bytes[20] = 2;  // ADPCM format tag
  EXPECT_THROW(decode_wav(bytes), UnsupportedFormatError);
}

TEST(Resample, KeepsToneAndRemovesAlias) {
  // 44.1 kHz input holding 1 kHz (kept) and 12 kHz (above the 8 kHz Nyquist).
  const int src = 44100;
  auto a = synth::tone(1000.0, 1.0, 0.4, 0.0, src);
  const auto b = synth::tone(12000.0, 1.0, 0.4, 0.0, src);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  const auto out = resample(RawWaveform{a, src, ""});
  EXPECT_EQ(out.samples.size(), 16000u);
  EXPECT_NEAR(tone_level(out.samples, 1000.0, kSampleRate), 0.4, 0.01);
  // 12 kHz folds to 4 kHz when not filtered.
  EXPECT_LT(tone_level(out.samples, 4000.0, kSampleRate), 0.005);
}

TEST(Resample, IdentityAtTargetRate) {
  const auto x = synth::tone(300.0, 0.1, 0.5);
  EXPECT_EQ(resample(RawWaveform{x, kSampleRate, ""}).samples, x);
}

TEST(Resample, RejectsLowRate) {
  EXPECT_THROW(resample(RawWaveform{std::vector<float>(100), 4000, ""}), ArgumentError);
}

TEST(Chunking, TenSecondWindows) {
  // 23 s -> two full windows and a 3 s remainder padded to 10 s.
  RawWaveform w{std::vector<float>(23 * kSampleRate, 0.1f), kSampleRate, ""};
  const auto c = chunk_for_pretraining(w, 10.0);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_FALSE(c[0].padded);
  EXPECT_TRUE(c[2].padded);
  EXPECT_EQ(c[2].audio.samples.size(), 10u * kSampleRate);
  EXPECT_EQ(c[2].audio.samples[3 * kSampleRate - 1], 0.1f);
  EXPECT_EQ(c[2].audio.samples[3 * kSampleRate], 0.0f);
}

TEST(Chunking, ShortRemainderDropped) {
  RawWaveform w{std::vector<float>(21 * kSampleRate), kSampleRate, ""};
  EXPECT_EQ(chunk_for_pretraining(w, 10.0).size(), 2u);
  RawWaveform tiny{std::vector<float>(kSampleRate), kSampleRate, ""};
  EXPECT_TRUE(chunk_for_pretraining(tiny, 10.0).empty());
}

TEST(LoadAudio, CacheReturnsSameSamples) {
  const auto dir = temp_dir("cache");
  const auto x = synth::tone(500.0, 0.3, 0.5, 0.0, 22050);
  write_wav(dir / "a.wav", RawWaveform{x, 22050, ""});
  ::unsetenv("VOCREP_CACHE");
  const auto direct = load_audio(dir / "a.wav");
  ::setenv("VOCREP_CACHE", (dir / "cache").c_str(), 1);
  const auto first = load_audio(dir / "a.wav");
  const auto second = load_audio(dir / "a.wav");
  ::unsetenv("VOCREP_CACHE");
  EXPECT_EQ(direct.samples.size(), first.samples.size());
  for (std::size_t i = 0; i < direct.samples.size(); ++i) EXPECT_NEAR(direct.samples[i], first.samples[i], 1.0 / 32767);
  EXPECT_EQ(first.samples, second.samples);
  EXPECT_FALSE(fs::is_empty(dir / "cache"));
}

TEST(Manifest, JsonlRoundTrip) {
  Manifest m;
  m.add({"a.wav", "d1", "laugh", 1.5, 24000});
  m.add({"b.wav", "d1", std::nullopt, 0.5, 8000});
  const auto back = Manifest::from_jsonl(m.to_jsonl());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].label, std::optional<std::string>("laugh"));
  EXPECT_FALSE(back[1].label.has_value());
  EXPECT_EQ(back.to_jsonl(), m.to_jsonl());
  EXPECT_EQ(m.labels(), std::vector<std::string>{"laugh"});
}

TEST(Manifest, RejectsDuplicatesAndInconsistentDurations) {
  Manifest m;
  m.add({"a.wav", "d", std::nullopt, 1.0, 16000});
  EXPECT_THROW(m.add({"a.wav", "d", std::nullopt, 1.0, 16000}), ArgumentError);
  EXPECT_THROW(m.add({"b.wav", "d", std::nullopt, 2.0, 16000}), ArgumentError);
}

TEST(Stats, TotalsAndTable) {
  Manifest m;
  m.add({"a", "A", std::nullopt, 2.0, 32000});
  m.add({"b", "A", std::nullopt, 4.0, 64000});
  m.add({"c", "B", std::nullopt, 3.0, 48000});
  const auto s = corpus_stats(m);
  EXPECT_EQ(s.num_samples, 3);
  EXPECT_NEAR(s.total_hours, 9.0 / 3600.0, 1e-15);
  EXPECT_NEAR(s.avg_duration_s, 3.0, 1e-15);
  const auto table = format_stats_table(m);
  EXPECT_NE(table.find("Avg Dur. (s)"), std::string::npos);
  EXPECT_NE(table.find("3.00"), std::string::npos);
  EXPECT_THROW(corpus_stats(Manifest{}), EmptyCorpusError);
}

TEST(Folds, SizesDifferByAtMostOne) {
  Manifest m;
  for (int i = 0; i < 457; ++i) m.add({"f" + std::to_string(i), "d", std::nullopt, 0.0, 0});
  const auto split = split_folds(m, 10, 42, false);
  std::map<std::size_t, int> histogram;
  for (auto s : split.fold_sizes()) ++histogram[s];
  EXPECT_EQ(histogram[46], 7);
  EXPECT_EQ(histogram[45], 3);
  std::vector<int> seen(457, 0);
  for (int f = 0; f < 10; ++f)
    for (auto i : split.members(f)) ++seen[i];
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(Folds, StratifiedKeepsClassBalance) {
  const auto m = labeled_manifest({{"a", 30}, {"b", 20}, {"c", 10}});
  const auto split = split_folds(m, 5, 1, true);
  for (int f = 0; f < 5; ++f) {
    std::map<std::string, int> per;
    for (auto i : split.members(f)) ++per[*m[i].label];
    EXPECT_EQ(per["a"], 6);
    EXPECT_EQ(per["b"], 4);
    EXPECT_EQ(per["c"], 2);
  }
  EXPECT_TRUE(split.warnings.empty());
}

TEST(Folds, WarnsOnSmallClassAndNeedsLabels) {
  const auto m = labeled_manifest({{"a", 20}, {"rare", 3}});
  EXPECT_EQ(split_folds(m, 5, 0, true).warnings.size(), 1u);
  Manifest unlabeled;
  unlabeled.add({"x", "d", std::nullopt, 0.0, 0});
  EXPECT_THROW(split_folds(unlabeled, 5, 0, true), ArgumentError);
}

TEST(Folds, JsonRoundTripAndSeedDependence) {
  const auto m = labeled_manifest({{"a", 17}, {"b", 9}});
  const auto s1 = split_folds(m, 4, 5, true);
  EXPECT_EQ(FoldSplit::from_json(s1.to_json()).assignments, s1.assignments);
  EXPECT_EQ(split_folds(m, 4, 5, true).assignments, s1.assignments);
  EXPECT_NE(split_folds(m, 4, 6, true).assignments, s1.assignments);
}

TEST(Holdout, DisjointAndSized) {
  const auto m = labeled_manifest({{"a", 40}});
  const auto [train, valid] = holdout_validation(m, 0.05, 3);
  EXPECT_EQ(valid.size(), 2u);
  EXPECT_EQ(train.size(), 38u);
  std::set<std::string> paths;
  for (const auto& e : train.entries()) paths.insert(e.path);
  for (const auto& e : valid.entries()) EXPECT_FALSE(paths.count(e.path));
}
