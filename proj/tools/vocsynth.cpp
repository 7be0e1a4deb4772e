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

// vocsynth: writes the synthetic corpora used for smoke runs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "vocrep/error.hpp"
#include "vocrep/finetuner.hpp"
#include "vocrep/synth.hpp"

namespace fs = std::filesystem;
using namespace vocrep;

int main(int argc, char** argv) {
  CLI::App app{"vocsynth: synthetic audio corpora with manifests"};
  app.require_subcommand(1, 1);
  std::string out;
  std::uint64_t seed = 0;
  std::size_t count = 32;
  double seconds = 1.0;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--seed", seed, "Seed");
  app.add_option("--count", count, "Number of clips or points per blob")->check(CLI::PositiveNumber);
  app.add_option("--seconds", seconds, "Clip length")->check(CLI::PositiveNumber);

  auto* s_pre = app.add_subcommand("pretrain", "Unlabeled cyclic tone clips");
  auto* s_sn = app.add_subcommand("sine-noise", "Labeled sine vs white-noise clips");
  std::size_t dim = 64, blobs = 3;
  double separation = 10.0;
  auto* s_bl = app.add_subcommand("blobs", "Gaussian blobs as an embeddings CSV plus labels CSV");
  s_bl->add_option("--dim", dim, "Dimensions");
  s_bl->add_option("--blobs", blobs, "Number of blobs");
  s_bl->add_option("--separation", separation, "Center spacing in standard deviations");

  CLI11_PARSE(app, argc, argv);
  try {
    fs::create_directories(out);
    if (s_pre->parsed()) {
      const auto clips = synth::pretraining_clips(count, seconds, seed);
      const auto m = synth::write_corpus(fs::path(out) / "wav", "synth-pretrain", clips);
      m.write(fs::path(out) / "manifest.jsonl");
      std::printf("wrote %zu clips\n", m.size());
    } else if (s_sn->parsed()) {
      const auto labeled = synth::sine_vs_noise(count, seconds, seed);
      std::vector<std::vector<float>> clips;
      std::vector<std::optional<std::string>> labels;
      for (const auto& c : labeled) {
        clips.push_back(c.samples);
        labels.emplace_back(c.label);
      }
      const auto m = synth::write_corpus(fs::path(out) / "wav", "sine-noise", clips, labels);
      m.write(fs::path(out) / "manifest.jsonl");
      std::printf("wrote %zu clips\n", m.size());
    } else {
      const auto b = synth::gaussian_blobs(count, dim, blobs, separation, seed);
      finetune::ProbeFeatures f;
      f.dim = b.dim;
      f.rows = b.points;
      std::string labels = "path,label\n";
      for (std::size_t i = 0; i < b.n; ++i) {
        f.paths.push_back("p" + std::to_string(i));
        labels += f.paths.back() + "," + b.labels[i] + "\n";
      }
      std::ofstream(fs::path(out) / "embeddings.csv") << f.to_csv();
      std::ofstream(fs::path(out) / "labels.csv") << labels;
      std::printf("wrote %zu points\n", b.n);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
