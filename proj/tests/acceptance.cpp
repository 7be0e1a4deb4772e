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

// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// fails. Tolerances are fixed here, not taken from the command line.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "vocrep/audio_io.hpp"
#include "vocrep/checkpoint.hpp"
#include "vocrep/config.hpp"
#include "vocrep/finetuner.hpp"
#include "vocrep/kernels.hpp"
#include "vocrep/metrics.hpp"
#include "vocrep/model/context_network.hpp"
#include "vocrep/model/feature_encoder.hpp"
#include "vocrep/model/model.hpp"
#include "vocrep/model/quantizer.hpp"
#include "vocrep/nn/grad_check.hpp"
#include "vocrep/nn/ops.hpp"
#include "vocrep/pretrainer.hpp"
#include "vocrep/projector.hpp"
#include "vocrep/synth.hpp"

using namespace vocrep;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using TD = nn::Tensor<double>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string run_capture(const std::string& cmd, int* status) {
  std::string out;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    *status = -1;
    return out;
  }
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  *status = ::pclose(pipe);
  return out;
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("vocrep_acceptance_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// ---------------------------------------------------------------------------

Outcome frame_arithmetic() {
  const auto t0 = Clock::now();
  const auto base = make_profile("base");
  const auto rf = model::receptive_field(base.encoder);
  const auto frames = model::output_frames(base.encoder, 160000);
  // Desk model: same strides and kernels, narrow channels.
  const auto desk = make_profile("desk");
  model::Model<float> m(desk);
  model::init_scratch(m.params(), 0);
  const auto wave = nn::Tensor<float>::from({160000}, synth::tone(440.0, 10.0, 0.5));
  const auto lat = m.latent(wave);
  const auto ctx = m.context_frames(wave);
  const double secs = seconds_since(t0);
  const bool ok = rf.samples == 400 && rf.stride_samples == 320 && frames == 499 && lat.dim(0) == 499 &&
                  ctx.dim(0) == 499 && secs < 1.0;
  return {ok, fmt("receptive field %zu/%zu samples, %zu frames (latent %zu, context %zu), %.2f s", rf.samples,
                  rf.stride_samples, frames, lat.dim(0), ctx.dim(0), secs)};
}

Outcome golden_config() {
  const auto golden = slurp(fs::path(VOCREP_SOURCE_DIR) / "tests/golden/base_config.json");
  int status = 0;
  const auto cli = run_capture(std::string("\"") + VOCREP_CLI + "\" --profile base --dump-config", &status);
  const auto lib = dump_config(make_profile("base"));
  const auto j = ojson::parse(cli.empty() ? "{}" : cli);
  bool quoted = false;
  try {
    quoted = j.at("pretrain").at("peak_lr").get<double>() == 5e-4 &&
             j.at("pretrain").at("warmup_fraction").get<double>() == 0.08 &&
             j.at("pretrain").at("total_updates").get<int>() == 400000 &&
             j.at("pretrain").at("chunk_s").get<double>() == 10.0 &&
             j.at("finetune").at("batch_size").get<int>() == 16 && j.at("finetune").at("max_epochs").get<int>() == 50 &&
             j.at("finetune").at("patience").get<int>() == 5 && j.at("finetune").at("warmup_steps").get<int>() == 500 &&
             j.at("finetune").at("peak_lr").get<double>() == 1e-4 && j.at("finetune").at("folds").get<int>() == 10;
  } catch (const std::exception&) {
    quoted = false;
  }
  const bool ok = status == 0 && cli == golden && lib == golden && quoted;
  return {ok, fmt("cli dump %s golden, library dump %s golden, quoted values %s", cli == golden ? "==" : "!=",
                  lib == golden ? "==" : "!=", quoted ? "match" : "differ")};
}

TD random(nn::Shape shape, Rng& rng, double scale = 1.0) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return TD::from(std::move(shape), std::move(v));
}

TD weighted_sum(const TD& y, std::uint64_t seed) {
  Rng rng(seed ^ 0x5bd1e995ULL);
  std::vector<double> w(y.size());
  for (auto& x : w) x = rng.normal();
  return nn::sum(nn::mul(y, TD::from(y.shape(), std::move(w))));
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, norm = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    norm += a[i] * a[i] + b[i] * b[i];
  }
  return norm > 0 ? std::sqrt(diff) / std::sqrt(norm) : 0.0;
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  using Case = std::function<double(std::uint64_t)>;
  const std::vector<std::pair<std::string, Case>> cases{
      {"conv1d",
       [](std::uint64_t s) {
         Rng rng(s);
         const nn::Conv1dOptions opt{2, 1, 1, 2};
         return nn::grad_check(
                    [&](const std::vector<TD>& in) { return weighted_sum(nn::conv1d(in[0], in[1], in[2], opt), s); },
                    {random({4, 12}, rng), random({4, 2, 3}, rng), random({4}, rng)})
             .max_relative_error;
       }},
      {"layer_norm",
       [](std::uint64_t s) {
         Rng rng(s);
         return nn::grad_check(
                    [&](const std::vector<TD>& in) { return weighted_sum(nn::layer_norm(in[0], in[1], in[2]), s); },
                    {random({3, 8}, rng), random({8}, rng), random({8}, rng)})
             .max_relative_error;
       }},
      {"gelu",
       [](std::uint64_t s) {
         Rng rng(s);
         return nn::grad_check([&](const TD& x) { return weighted_sum(nn::gelu(x), s); }, random({4, 6}, rng, 2.0));
       }},
      {"softmax",
       [](std::uint64_t s) {
         Rng rng(s);
         return nn::grad_check([&](const TD& x) { return weighted_sum(nn::softmax(x), s); }, random({3, 7}, rng, 2.0));
       }},
      {"attention",
       [](std::uint64_t s) {
         Rng rng(s);
         return nn::grad_check(
                    [&](const std::vector<TD>& in) { return weighted_sum(nn::attention(in[0], in[1], in[2], 2), s); },
                    {random({6, 4}, rng), random({6, 4}, rng), random({6, 4}, rng)})
             .max_relative_error;
       }},
      {"cross_entropy",
       [](std::uint64_t s) {
         Rng rng(s);
         std::vector<std::size_t> t(5);
         for (auto& v : t) v = rng.below(4);
         return nn::grad_check([&](const TD& x) { return nn::cross_entropy(x, t); }, random({5, 4}, rng, 2.0));
       }},
      {"quantizer_st",
       [](std::uint64_t s) {
         QuantizerConfig qc;
         qc.groups = 2;
         qc.entries = 4;
         qc.entry_dim = 3;
         qc.output_dim = 5;
         model::NamedParams<double> reg;
         model::Quantizer<double> q(qc, 6, reg);
         model::init_scratch(reg, s);
         Rng rng(s);
         const auto z = random({4, 6}, rng);
         const auto noise = q.sample_noise(4, rng);
         auto zg = z.clone();
         zg.set_requires_grad(true);
         weighted_sum(q.forward(zg, 0.7, noise, true).vectors, s).backward();
         const std::vector<double> analytic(zg.grad().begin(), zg.grad().end());
         const auto numeric = nn::numeric_gradient(
             [&](const std::vector<TD>& in) { return weighted_sum(q.forward(in[0], 0.7, noise, false).vectors, s); },
             {z})[0];
         return relative_error(analytic, numeric);
       }},
      {"contrastive_loss",
       [](std::uint64_t s) {
         Rng rng(s);
         const auto cand = pretrain::sample_candidates(7, 4, rng);
         return nn::grad_check(
                    [&](const std::vector<TD>& in) { return pretrain::contrastive_loss(in[0], in[1], cand, 4, 0.1); },
                    {random({7, 5}, rng), random({7, 5}, rng)})
             .max_relative_error;
       }},
  };
  double worst = 0;
  std::string worst_name;
  for (const auto& [name, fn] : cases) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const double e = fn(seed);
      if (!(e <= worst) || !std::isfinite(e)) {
        worst = e;
        worst_name = name;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0,
          fmt("%zu ops x 5 seeds, worst relative error %.2e (%s), %.2f s", cases.size(), worst, worst_name.c_str(), secs)};
}

Outcome loss_baselines() {
  double worst = 0;
  for (std::size_t k : {1, 20, 100}) {
    Rng rng(k);
    const auto cand = pretrain::sample_candidates(10, k, rng);
    const double l = pretrain::contrastive_loss(TD::full({10, 6}, 0.3), TD::full({10, 6}, 0.7), cand, k, 0.1).item();
    worst = std::max(worst, std::abs(l - std::log(k + 1.0)));
  }
  const double div = model::diversity_loss(TD::full({7, 2 * 16}, 1.0 / 16), 2, 16).item();
  const double ce = nn::cross_entropy(TD::zeros({4, 2}), std::vector<std::size_t>{0, 1, 0, 1}).item();
  const bool ok = worst <= 1e-9 && std::abs(div) <= 1e-9 && std::abs(ce - std::log(2.0)) <= 1e-9;
  return {ok, fmt("contrastive |dev| %.1e over K in {1,20,100}, diversity %.1e, cross-entropy - ln2 %.1e", worst,
                  std::abs(div), std::abs(ce - std::log(2.0)))};
}

Outcome trainability() {
  const auto t0 = Clock::now();
  auto cfg = make_profile("desk");
  cfg.seed = 7;
  cfg.deterministic = true;
  model::Model<float> m(cfg);
  pretrain::initialize(m, {}, cfg.seed);
  const auto r = pretrain::run_pretraining(cfg, m, synth::pretraining_clips(32, 1.0, cfg.seed), {});
  const double first = r.history.front().total, last = r.history.back().total;
  const double ratio = last / first;
  const double t_pre = seconds_since(t0);

  const auto sv = synth::sine_vs_noise(160, 1.0, cfg.seed);
  std::vector<finetune::LabeledWave> clips;
  audio::Manifest man;
  for (std::size_t i = 0; i < sv.size(); ++i) {
    clips.push_back({sv[i].samples, sv[i].label == "noise" ? 0u : 1u, "c" + std::to_string(i)});
    man.add({"c" + std::to_string(i), "synth", sv[i].label, 1.0, audio::kSampleRate});
  }
  finetune::CvOptions opt;
  opt.base = r.last;
  const auto rep = finetune::cross_validate(clips, {"noise", "sine"}, audio::split_folds(man, 5, cfg.seed, true), cfg, opt);
  const double secs = seconds_since(t0);
  const bool ok = r.history.size() == 300 && ratio <= 0.5 && rep.aggregate.uar.mean >= 0.95 && secs < 300.0;
  return {ok, fmt("pretrain loss %.3f -> %.3f over %zu updates (ratio %.2f; eval-mode %.3f -> %.3f), "
                  "fine-tune 5-fold %s, %.0f s (pretrain %.0f s)",
                  first, last, r.history.size(), ratio, r.initial_train_loss, r.final_train_loss,
                  metrics::format_aggregate(rep.aggregate).c_str(), secs, t_pre)};
}

Outcome metric_oracle() {
  Rng rng(31);
  double worst = 0, identity = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng.below(7), n = 1 + rng.below(80);
    std::vector<std::size_t> t(n), p(n);
    for (auto& v : t) v = rng.below(k);
    for (std::size_t i = 0; i < n; ++i) p[i] = rng.uniform() < 0.4 ? t[i] : rng.below(k);
    // Brute-force counting straight from the label lists.
    double acc = 0, uar_sum = 0, f1_sum = 0;
    std::size_t uar_classes = 0, f1_classes = 0;
    double weighted = 0;
    for (std::size_t i = 0; i < n; ++i) acc += t[i] == p[i];
    acc /= static_cast<double>(n);
    for (std::size_t c = 0; c < k; ++c) {
      double tp = 0, sup = 0, pred = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += t[i] == c && p[i] == c;
        sup += t[i] == c;
        pred += p[i] == c;
      }
      if (sup > 0) {
        uar_sum += tp / sup;
        ++uar_classes;
        weighted += (sup / static_cast<double>(n)) * (tp / sup);
      }
      if (sup > 0 || pred > 0) {
        const double prec = pred > 0 ? tp / pred : 0, rec = sup > 0 ? tp / sup : 0;
        f1_sum += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0;
        ++f1_classes;
      }
    }
    const auto cm = metrics::ConfusionMatrix::from_labels(t, p, k);
    worst = std::max({worst, std::abs(metrics::uar(cm) - uar_sum / uar_classes),
                      std::abs(metrics::accuracy(cm) - acc), std::abs(metrics::f1_macro(cm) - f1_sum / f1_classes)});
    identity = std::max(identity, std::abs(weighted - metrics::accuracy(cm)));
  }
  // Exact form of the identity: sum_c n_c * (tp_c / n_c) = trace over integers.
  return {worst <= 1e-12 && identity <= 1e-15,
          fmt("1000 random sets, worst |metric - oracle| %.1e, |accuracy - sum prior*recall| %.1e", worst, identity)};
}

Outcome masking_statistics() {
  const auto t0 = Clock::now();
  const std::size_t frames = 499, span = 10;
  const double p = 0.065;
  const int draws = 100000;
  Rng rng = Rng::substream(11, "mask");
  double covered = 0;
  for (int d = 0; d < draws; ++d)
    for (auto v : model::sample_mask(frames, p, span, rng)) covered += v;
  const double empirical = covered / (static_cast<double>(draws) * frames);
  // Monte-Carlo oracle written independently on the standard library engine.
  std::mt19937_64 gen(99);
  std::bernoulli_distribution open(p);
  std::uniform_int_distribution<std::size_t> start(0, frames - span);
  std::vector<char> hit(frames);
  double oracle_covered = 0;
  for (int d = 0; d < draws; ++d) {
    std::fill(hit.begin(), hit.end(), 0);
    bool any = false;
    for (std::size_t t = 0; t < frames; ++t) {
      if (!open(gen)) continue;
      any = true;
      for (std::size_t u = t; u < std::min(frames, t + span); ++u) hit[u] = 1;
    }
    if (!any) {
      const auto s = start(gen);
      std::fill(hit.begin() + static_cast<std::ptrdiff_t>(s), hit.begin() + static_cast<std::ptrdiff_t>(s + span), 1);
    }
    for (char h : hit) oracle_covered += h;
  }
  const double oracle = oracle_covered / (static_cast<double>(draws) * frames);
  const double secs = seconds_since(t0);
  return {std::abs(empirical - oracle) <= 0.02 && secs < 30.0,
          fmt("masked fraction %.4f vs oracle %.4f over %d draws, %.1f s", empirical, oracle, draws, secs)};
}

// Runs a CLI pipeline twice in the same directory and compares every output.
Outcome reproducibility() {
  const auto dir = scratch("repro");
  std::ofstream(dir / "run.json") << R"({"profile":"desk","seed":5,"pretrain":{"total_updates":12},)"
                                  << R"("finetune":{"max_epochs":4,"patience":2}})";
  const std::string cli = std::string("\"") + VOCREP_CLI + "\"";
  const std::string synth = std::string("\"") + VOCSYNTH + "\"";
  const std::string cd = "cd \"" + dir.string() + "\" && ";
  const std::vector<std::string> steps{
      synth + " --out pre --seed 5 --count 8 pretrain",
      synth + " --out sn --seed 5 --count 16 --seconds 0.5 sine-noise",
      cli + " pretrain --config run.json --manifest pre/manifest.jsonl --out out/pre",
      cli + " finetune --config run.json --manifest sn/manifest.jsonl --checkpoint out/pre/last.ckpt --folds 2 "
            "--out out/ft",
      cli + " evaluate --predictions out/ft/predictions.csv --out out/ev",
      cli + " embed --config run.json --checkpoint out/pre/last.ckpt --manifest sn/manifest.jsonl --out out/em",
      cli + " project --config run.json --from-csv out/em/embeddings.csv --manifest sn/manifest.jsonl "
            "--iterations 300 --out out/pj",
  };
  auto run_all = [&](std::map<std::string, std::string>& files) {
    fs::remove_all(dir / "out");
    fs::remove_all(dir / "pre");
    fs::remove_all(dir / "sn");
    for (const auto& s : steps) {
      int status = 0;
      run_capture(cd + s + " >/dev/null 2>&1", &status);
      if (status != 0) return s;
    }
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
    return std::string();
  };
  std::map<std::string, std::string> a, b;
  const auto fail_a = run_all(a);
  const auto fail_b = fail_a.empty() ? run_all(b) : fail_a;
  if (!fail_a.empty() || !fail_b.empty()) return {false, "command failed: " + (fail_a.empty() ? fail_b : fail_a)};
  std::size_t differing = 0;
  std::string first_diff;
  for (const auto& [name, bytes] : a) {
    if (!b.count(name) || b[name] != bytes) {
      ++differing;
      if (first_diff.empty()) first_diff = name;
    }
  }
  differing += b.size() > a.size() ? b.size() - a.size() : 0;

  // Checkpoint write -> read -> write.
  write_checkpoint(dir / "copy.ckpt", read_checkpoint(dir / "out/pre/last.ckpt"));
  const bool ckpt_same = slurp(dir / "copy.ckpt") == slurp(dir / "out/pre/last.ckpt");
  return {differing == 0 && ckpt_same,
          fmt("%zu output files over %zu commands, %zu differ%s%s; checkpoint rewrite %s", a.size(), steps.size(),
              differing, first_diff.empty() ? "" : " e.g. ", first_diff.c_str(), ckpt_same ? "identical" : "differs")};
}

Outcome cv_protocol() {
  // 457 entries over two labels, 10 stratified folds.
  audio::Manifest m;
  finetune::ProbeFeatures f;
  f.dim = 3;
  std::vector<std::size_t> labels;
  Rng rng(8);
  for (std::size_t i = 0; i < 457; ++i) {
    const std::size_t y = i % 3 == 0 ? 1 : 0;
    m.add({"e" + std::to_string(i), "toy", y ? "b" : "a", 0.0, 0});
    f.paths.push_back("e" + std::to_string(i));
    for (int d = 0; d < 3; ++d) f.rows.push_back(rng.normal() + (d == 0 ? 3.0 * y : 0.0));
    labels.push_back(y);
  }
  const auto split = audio::split_folds(m, 10, 0, true);
  std::map<std::size_t, int> sizes;
  for (auto s : split.fold_sizes()) ++sizes[s];
  auto cfg = make_profile("desk");
  cfg.finetune.max_epochs = 3;
  cfg.finetune.patience = 1;
  const auto rep = finetune::probe_train(f, labels, {"a", "b"}, split, cfg);
  std::vector<int> seen(457, 0);
  for (const auto& p : rep.predictions) ++seen[p.index];
  const bool once = std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });

  // Scripted validation histories: stop exactly `patience` epochs past the best.
  const std::vector<std::pair<std::vector<double>, std::pair<std::size_t, std::size_t>>> scripts{
      {{.5, .6, .6, .6, .6, .6, .6}, {7, 2}},
      {{.3, .5, .4, .7, .6, .6, .65, .69, .7, .1}, {9, 4}},
      {{.9, .8, .8, .8, .8, .8}, {6, 1}},
  };
  bool stops = true;
  for (const auto& [hist, expect] : scripts) {
    finetune::EarlyStopping es(5);
    std::size_t stopped = 0;
    for (double v : hist)
      if (es.update(v)) {
        stopped = es.epochs_seen();
        break;
      }
    stops = stops && stopped == expect.first && es.best_epoch() == expect.second;
  }
  finetune::EarlyStopping never(5);
  for (int e = 1; e <= 50; ++e) stops = stops && !never.update(e / 100.0);

  const bool ok = sizes[46] == 7 && sizes[45] == 3 && once && stops;
  return {ok, fmt("fold sizes 7x46 + 3x45: %s; every entry evaluated once: %s; scripted early stopping: %s",
                  sizes[46] == 7 && sizes[45] == 3 ? "yes" : "no", once ? "yes" : "no", stops ? "exact" : "wrong")};
}

Outcome projection() {
  const auto t0 = Clock::now();
  const auto b = synth::gaussian_blobs(50, 64, 2, 10.0, 1);
  std::vector<double> d(b.n * b.n);
  kernels::parallel::pairwise_sq_distances<double>(b.points, b.n, b.dim, d);
  const auto p = project::joint_affinities(project::conditional_affinities(d, b.n, 30.0), b.n);
  const double psum = std::accumulate(p.begin(), p.end(), 0.0);
  project::TsneOptions opt;
  opt.seed = 3;
  const auto y1 = project::tsne(b.points, b.n, b.dim, opt);
  const auto y2 = project::tsne(b.points, b.n, b.dim, opt);
  const double sil = project::silhouette(y1.points, b.n, 2, b.labels);
  const bool same = y1.points == y2.points && y1.final_kl == y2.final_kl;
  const double secs = seconds_since(t0);
  return {sil >= 0.3 && std::abs(psum - 1.0) <= 1e-9 && same && secs < 60.0,
          fmt("N=%zu silhouette %.3f, sum P - 1 = %.1e, reruns %s, KL %.3f, %.2f s", b.n, sil, psum - 1.0,
              same ? "bit-identical" : "differ", y1.final_kl, secs)};
}

Outcome stats_formatting() {
  // Per-source hours and sample counts as listed for the pretraining corpus.
  const std::vector<std::tuple<const char*, double, int>> rows{
      {"AudioSet (vocalization)", 36.94, 13439}, {"FreeSound (babies)", 23.42, 1450}, {"HumanVoiceDataset", 0.06, 179},
      {"NNIME", 3.55, 5596},                     {"NonSpeech7K", 6.72, 6983},       {"ReCANVo", 2.46, 7077},
      {"SingingDatabase", 3.97, 113},            {"TUT (babies)", 13.17, 1540},     {"VocalSketch", 10.53, 10705},
      {"VocalSound", 24.37, 20985},
  };
  audio::Manifest m;
  for (const auto& [name, hours, count] : rows) {
    // Spread the dataset's total duration over its clips to the sample.
    const auto total = static_cast<std::int64_t>(std::llround(hours * 3600.0 * audio::kSampleRate));
    for (int i = 0; i < count; ++i) {
      const std::int64_t n = total / count + (i < total % count ? 1 : 0);
      m.add({std::string(name) + "/" + std::to_string(i), name, std::nullopt,
             static_cast<double>(n) / audio::kSampleRate, n});
    }
  }
  const auto table = audio::format_stats_table(m, "Voc125 (Total)");
  std::istringstream in(table);
  std::string line, total_line;
  while (std::getline(in, line))
    if (line.rfind("Voc125 (Total)", 0) == 0) total_line = line;
  std::istringstream cells(total_line.substr(std::string("Voc125 (Total)").size()));
  std::string hours, count, avg;
  cells >> hours >> count >> avg;
  const bool totals = hours == "125.19" && count == "68067" && avg == "6.67";

  const std::string published_cell = metrics::format_mean_std({0.661, 0.206});
  const auto line_out = metrics::format_aggregate(metrics::aggregate({{0.70, 0.81, 0.69}, {0.62, 0.78, 0.60}}));
  const std::regex shape(R"(UAR \.\d{3}±\.\d{3}  Acc \.\d{3}±\.\d{3}  F1 \.\d{3}±\.\d{3})");
  const bool format_ok = published_cell == ".661±.206" && std::regex_match(line_out, shape);
  return {totals && format_ok,
          fmt("totals %s h, %s samples, %s s avg (expected 125.19, 68067, 6.67); aggregate line \"%s\" %s",
              hours.c_str(), count.c_str(), avg.c_str(), line_out.c_str(), format_ok ? "ok" : "malformed")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"frame arithmetic", frame_arithmetic},   {"golden config", golden_config},
      {"gradient suite", gradient_suite},       {"loss baselines", loss_baselines},
      {"trainability", trainability},           {"metric oracle equivalence", metric_oracle},
      {"masking statistics", masking_statistics}, {"reproducibility", reproducibility},
      {"cv protocol", cv_protocol},             {"projection", projection},
      {"stats formatting", stats_formatting},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
