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

#include "vocrep/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "vocrep/error.hpp"

namespace vocrep::synth {

namespace {

std::size_t sample_count(double seconds, int rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

}  // namespace

std::vector<float> tone(double freq_hz, double seconds, double amplitude, double phase, int rate) {
  std::vector<float> out(sample_count(seconds, rate));
  const double w = 2.0 * std::numbers::pi * freq_hz / rate;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(amplitude * std::sin(w * static_cast<double>(i) + phase));
  }
  return out;
}

std::vector<float> chirp(double f0, double f1, double seconds, double amplitude, double phase, int rate) {
  std::vector<float> out(sample_count(seconds, rate));
  const double k = std::log(f1 / f0) / seconds;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    // Phase of an exponential sweep: integral of f0 * exp(k t).
    const double ph = std::abs(k) < 1e-12 ? 2.0 * std::numbers::pi * f0 * t
                                          : 2.0 * std::numbers::pi * f0 * (std::exp(k * t) - 1.0) / k;
    out[i] = static_cast<float>(amplitude * std::sin(ph + phase));
  }
  return out;
}

std::vector<float> white_noise(double seconds, double amplitude, Rng& rng, int rate) {
  std::vector<float> out(sample_count(seconds, rate));
  for (auto& v : out) v = static_cast<float>(amplitude * rng.uniform(-1.0, 1.0));
  return out;
}

std::vector<std::vector<float>> pretraining_clips(std::size_t n, double seconds, std::uint64_t seed) {
  // Each 20 ms frame carries one symbol of a fixed cycle (silence and four
  // tones), so a masked frame's identity follows from its unmasked neighbours.
  constexpr std::array<double, 5> kAlphabet{0.0, 150.0, 600.0, 2000.0, 6000.0};
  constexpr std::size_t kFrame = 320;
  std::vector<std::vector<float>> clips;
  for (std::size_t c = 0; c < n; ++c) {
    Rng rng = Rng::substream(seed, "synth.pretrain", c);
    const std::size_t offset = rng.below(kAlphabet.size());
    const double phase = rng.uniform(0.0, 6.28);
    std::vector<float> clip(sample_count(seconds, audio::kSampleRate), 0.0f);
    for (std::size_t i = 0; i < clip.size(); ++i) {
      const double f = kAlphabet[(i / kFrame + offset) % kAlphabet.size()];
      if (f == 0.0) continue;
      clip[i] = static_cast<float>(
          0.5 * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / audio::kSampleRate + phase));
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

std::vector<LabeledClip> sine_vs_noise(std::size_t n, double seconds, std::uint64_t seed) {
  std::vector<LabeledClip> out;
  for (std::size_t c = 0; c < n; ++c) {
    Rng rng = Rng::substream(seed, "synth.sine_vs_noise", c);
    LabeledClip clip;
    if (c % 2 == 0) {
      clip.samples = tone(rng.uniform(200.0, 2000.0), seconds, rng.uniform(0.3, 0.6), rng.uniform(0.0, 6.28));
      clip.label = "sine";
    } else {
      clip.samples = white_noise(seconds, rng.uniform(0.3, 0.6), rng);
      clip.label = "noise";
    }
    out.push_back(std::move(clip));
  }
  return out;
}

Blobs gaussian_blobs(std::size_t per_blob, std::size_t dim, std::size_t count, double separation,
                     std::uint64_t seed) {
  if (count > dim) throw ArgumentError("gaussian_blobs: need at least as many dimensions as blobs");
  Rng rng = Rng::substream(seed, "synth.blobs");
  Blobs b;
  b.n = per_blob * count;
  b.dim = dim;
  b.points.resize(b.n * dim);
  for (std::size_t c = 0; c < count; ++c) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      const std::size_t row = c * per_blob + i;
      for (std::size_t d = 0; d < dim; ++d) {
        // Centers at separation/sqrt(2) on distinct axes are `separation` apart.
        const double center = d == c ? separation / std::numbers::sqrt2 : 0.0;
        b.points[row * dim + d] = center + rng.normal();
      }
      b.labels.push_back("blob" + std::to_string(c));
    }
  }
  return b;
}

audio::Manifest write_corpus(const std::filesystem::path& dir, const std::string& dataset,
                             const std::vector<std::vector<float>>& clips,
                             const std::vector<std::optional<std::string>>& labels,
                             const std::string& prefix) {
  std::filesystem::create_directories(dir);
  audio::Manifest m;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "%s%04zu.wav", prefix.c_str(), i);
    const auto path = dir / name;
    audio::RawWaveform w;
    w.samples = clips[i];
    audio::write_wav(path, w);
    audio::ManifestEntry e;
    e.path = path.string();
    e.dataset = dataset;
    if (i < labels.size()) e.label = labels[i];
    e.num_samples = static_cast<std::int64_t>(clips[i].size());
    e.duration_s = static_cast<double>(clips[i].size()) / audio::kSampleRate;
    m.add(std::move(e));
  }
  return m;
}

}  // namespace vocrep::synth
