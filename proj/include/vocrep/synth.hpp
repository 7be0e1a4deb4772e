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
#include <string>
#include <vector>

#include "vocrep/audio_io.hpp"
#include "vocrep/rng.hpp"

// Seeded synthetic signals for smoke runs and tests.
namespace vocrep::synth {

std::vector<float> tone(double freq_hz, double seconds, double amplitude, double phase = 0.0,
                        int rate = audio::kSampleRate);
/// Exponential sweep from f0 to f1 Hz.
std::vector<float> chirp(double f0, double f1, double seconds, double amplitude, double phase = 0.0,
                         int rate = audio::kSampleRate);
std::vector<float> white_noise(double seconds, double amplitude, Rng& rng,
                               int rate = audio::kSampleRate);

/// Unlabeled clips cycling frame by frame through silence and four tones,
/// each clip starting at a random point of the cycle.
std::vector<std::vector<float>> pretraining_clips(std::size_t n, double seconds, std::uint64_t seed);

struct LabeledClip {
  std::vector<float> samples;
  std::string label;
};

/// Alternating "sine" (random pure tone) and "noise" (white noise) clips.
std::vector<LabeledClip> sine_vs_noise(std::size_t n, double seconds, std::uint64_t seed);

struct Blobs {
  std::size_t n = 0, dim = 0;
  std::vector<double> points;  // row-major [n x dim]
  std::vector<std::string> labels;
};

/// `count` isotropic unit-variance Gaussian blobs whose centers sit
/// `separation` standard deviations apart along distinct axes.
Blobs gaussian_blobs(std::size_t per_blob, std::size_t dim, std::size_t count, double separation,
                     std::uint64_t seed);

/// Writes each clip as a 16 kHz PCM16 WAV named <prefix><index>.wav under
/// `dir` and returns the matching manifest (labels optional).
audio::Manifest write_corpus(const std::filesystem::path& dir, const std::string& dataset,
                             const std::vector<std::vector<float>>& clips,
                             const std::vector<std::optional<std::string>>& labels = {},
                             const std::string& prefix = "clip");

}  // namespace vocrep::synth
