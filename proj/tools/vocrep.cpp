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

// vocrep: ingest -> pretrain -> finetune -> evaluate -> embed -> project -> report.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "vocrep/audio_io.hpp"
#include "vocrep/checkpoint.hpp"
#include "vocrep/config.hpp"
#include "vocrep/error.hpp"
#include "vocrep/finetuner.hpp"
#include "vocrep/kernels.hpp"
#include "vocrep/metrics.hpp"
#include "vocrep/pretrainer.hpp"
#include "vocrep/projector.hpp"

namespace fs = std::filesystem;
using namespace vocrep;

namespace {

struct Common {
  std::string config;
  std::string profile;
  std::uint64_t seed = 0;
  bool deterministic = false;
  int jobs = 0;
  std::string out;
  bool dump_config = false;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON run configuration (profile plus overrides)");
  app->add_option("--profile", c.profile, "Base profile")->check(CLI::IsMember({"base", "desk"}));
  c.seed_opt = app->add_option("--seed", c.seed, "Root seed for every random stream");
  app->add_flag("--deterministic", c.deterministic, "Disable dropout and layerdrop");
  app->add_option("--jobs", c.jobs, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
  app->add_option("--out", c.out, "Output directory");
  app->add_flag("--dump-config", c.dump_config, "Print the resolved configuration and exit");
}

RunConfig resolve(const Common& c) {
  ojson j = ojson::object();
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw ConfigError("cannot open config " + c.config);
    try {
      j = ojson::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(c.config + ": " + e.what());
    }
  }
  if (!c.profile.empty()) j["profile"] = c.profile;
  if (c.seed_opt && c.seed_opt->count() > 0) j["seed"] = c.seed;
  if (c.deterministic) j["deterministic"] = true;
  return run_config_from_json(j);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path require_out(const Common& c) {
  if (c.out.empty()) throw ArgumentError("--out is required");
  fs::create_directories(c.out);
  return c.out;
}

// Architecture sections come from the checkpoint so its tensors fit.
RunConfig with_checkpoint_architecture(RunConfig cfg, const Checkpoint& ckpt) {
  if (ckpt.config.empty()) return cfg;
  const RunConfig arch = run_config_from_json(ckpt.config);
  cfg.encoder = arch.encoder;
  cfg.quantizer = arch.quantizer;
  cfg.context = arch.context;
  cfg.validate();
  return cfg;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

// Two-column CSV (key,label) with a header row.
std::map<std::string, std::string> read_label_map(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::string> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < 2) throw ArgumentError(path.string() + ": expected key,label rows");
    out[cells[0]] = cells[1];
  }
  return out;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input, dataset, labels;
};

int cmd_ingest(const Common& c, const IngestArgs& a) {
  const fs::path out = require_out(c);
  const fs::path root(a.input);
  if (!fs::is_directory(root)) throw ArgumentError("input directory " + a.input + " does not exist");
  std::map<std::string, std::string> labels;
  if (!a.labels.empty()) labels = read_label_map(a.labels);
  const std::string dataset = a.dataset.empty() ? root.filename().string() : a.dataset;

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  audio::Manifest m;
  std::size_t failed = 0;
  for (const auto& f : files) {
    try {
      const auto w = audio::load_audio(f);
      audio::ManifestEntry e;
      e.path = fs::absolute(f).lexically_normal().string();
      e.dataset = dataset;
      const std::string rel = fs::relative(f, root).generic_string();
      if (auto it = labels.find(rel); it != labels.end()) e.label = it->second;
      else if (auto it2 = labels.find(f.filename().string()); it2 != labels.end()) e.label = it2->second;
      e.num_samples = static_cast<std::int64_t>(w.samples.size());
      e.duration_s = static_cast<double>(w.samples.size()) / audio::kSampleRate;
      m.add(std::move(e));
    } catch (const Error& err) {
      ++failed;
      std::cerr << "skipped " << f.string() << ": " << err.what() << "\n";
    }
  }
  if (m.empty()) {
    std::cerr << "no audio found under " << a.input << "\n";
    return 1;
  }
  m.write(out / "manifest.jsonl");
  std::cout << audio::format_stats_table(m);
  if (failed > 0) std::cerr << failed << " file(s) could not be read\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct PretrainArgs {
  std::string manifest, valid_manifest, init_from;
  std::uint64_t total_updates = 0;
};

std::vector<std::vector<float>> load_chunks(const audio::Manifest& m, double chunk_s) {
  std::vector<std::vector<float>> out;
  for (const auto& e : m.entries()) {
    for (auto& ch : audio::chunk_for_pretraining(audio::load_audio(e.path), chunk_s)) {
      out.push_back(std::move(ch.audio.samples));
    }
  }
  return out;
}

int cmd_pretrain(const Common& c, RunConfig cfg, const PretrainArgs& a) {
  if (a.total_updates > 0) cfg.pretrain.total_updates = a.total_updates;
  cfg.validate();
  const fs::path out = require_out(c);
  const auto all = audio::Manifest::read(a.manifest);
  audio::Manifest train_m, valid_m;
  if (!a.valid_manifest.empty()) {
    train_m = all;
    valid_m = audio::Manifest::read(a.valid_manifest);
  } else {
    std::tie(train_m, valid_m) = audio::holdout_validation(all, cfg.pretrain.valid_fraction, cfg.seed);
  }
  auto train = load_chunks(train_m, cfg.pretrain.chunk_s);
  auto valid = load_chunks(valid_m, cfg.pretrain.chunk_s);
  if (train.empty()) {
    throw EmptyCorpusError("pretrain: no training chunks in " + a.manifest + " (clips shorter than a fifth of " +
                           std::to_string(cfg.pretrain.chunk_s) + " s are dropped)");
  }

  model::Model<float> m(cfg);
  pretrain::InitStrategy init;
  if (!a.init_from.empty()) {
    init.kind = pretrain::InitStrategy::Kind::kWarmStart;
    init.checkpoint = a.init_from;
  }
  pretrain::initialize(m, init, cfg.seed);
  write_text(out / "config.json", dump_config(cfg));

  std::cout << "pretraining on " << train.size() << " chunks (" << valid.size() << " validation), "
            << cfg.pretrain.total_updates << " updates\n";
  pretrain::RunOptions opt;
  opt.out_dir = out;
  opt.on_step = [](const pretrain::StepLosses& s) {
    if (!s.validation) return;
    std::printf("step %llu  lr %.3g  temp %.3f  loss %.4f (con %.4f div %.4f)  valid %.4f\n",
                static_cast<unsigned long long>(s.step), s.lr, s.temperature, s.total, s.contrastive,
                s.diversity, *s.validation);
  };
  const auto r = pretrain::run_pretraining(cfg, m, std::move(train), std::move(valid), opt);
  std::printf("step-0 loss %.4f  final loss %.4f  best step %llu (valid %.4f)\n", r.history.front().total,
              r.history.back().total, static_cast<unsigned long long>(r.best_step), r.best_validation);
  return 0;
}

// ---------------------------------------------------------------------------

struct FinetuneArgs {
  std::string manifest, checkpoint, probe, splits, dataset;
  int folds = 0;
};

void write_report(const fs::path& out, const metrics::MetricsReport& report,
                  const std::vector<std::string>& paths) {
  write_text(out / "report.json", report.to_json());
  write_text(out / "report.csv", report.to_csv());
  std::string pred = "fold,path,label,predicted\n";
  for (const auto& p : report.predictions) {
    pred += std::to_string(p.fold) + "," + csv_field(paths.at(p.index)) + "," +
            csv_field(report.class_names.at(p.truth)) + "," + csv_field(report.class_names.at(p.predicted)) + "\n";
  }
  write_text(out / "predictions.csv", pred);
}

void print_report(const metrics::MetricsReport& report) {
  for (const auto& f : report.folds) {
    std::printf("fold %d  UAR %.3f  Acc %.3f  F1 %.3f  (n=%zu)\n", f.fold, f.scores.uar, f.scores.accuracy,
                f.scores.f1_macro, f.num_test);
  }
  std::printf("%s\n", metrics::format_aggregate(report.aggregate).c_str());
}

int cmd_finetune(const Common& c, RunConfig cfg, const FinetuneArgs& a) {
  if (a.folds > 0) cfg.finetune.folds = a.folds;
  cfg.validate();
  const fs::path out = require_out(c);
  const auto m = audio::Manifest::read(a.manifest);
  std::vector<std::string> unlabeled;
  for (const auto& e : m.entries())
    if (!e.label) unlabeled.push_back(e.path);
  if (!unlabeled.empty()) {
    std::cerr << unlabeled.size() << " manifest entries have no label, e.g. " << unlabeled.front() << "\n";
    return 1;
  }
  const auto folds = a.splits.empty()
                         ? audio::split_folds(m, cfg.finetune.folds, cfg.seed, cfg.finetune.stratified)
                         : audio::FoldSplit::from_json(read_text(a.splits));
  for (const auto& w : folds.warnings) std::cerr << "warning: " << w << "\n";
  write_text(out / "folds.json", folds.to_json());

  finetune::CvOptions opt;
  opt.dataset = a.dataset.empty() ? (m.empty() ? std::string() : m[0].dataset) : a.dataset;
  opt.on_fold = [](int fold, const finetune::FoldTraining& t, const metrics::Scores& s) {
    std::fprintf(stderr, "fold %d: %zu epochs, best epoch %zu (valid UAR %.3f), test UAR %.3f\n", fold,
                 t.history.size(), t.best_epoch, t.best_valid_uar, s.uar);
  };
  std::vector<std::string> paths;
  for (const auto& e : m.entries()) paths.push_back(e.path);

  metrics::MetricsReport report;
  if (!a.probe.empty()) {
    const auto raw = finetune::ProbeFeatures::read_csv(a.probe);
    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < raw.paths.size(); ++i) row_of[raw.paths[i]] = i;
    finetune::ProbeFeatures aligned;
    aligned.dim = raw.dim;
    const auto class_names = m.labels();
    std::vector<std::size_t> labels;
    std::vector<std::string> missing;
    for (const auto& e : m.entries()) {
      const auto it = row_of.find(e.path);
      if (it == row_of.end()) {
        missing.push_back(e.path);
        continue;
      }
      aligned.paths.push_back(e.path);
      aligned.rows.insert(aligned.rows.end(), raw.rows.begin() + static_cast<std::ptrdiff_t>(it->second * raw.dim),
                          raw.rows.begin() + static_cast<std::ptrdiff_t>((it->second + 1) * raw.dim));
      labels.push_back(static_cast<std::size_t>(
          std::lower_bound(class_names.begin(), class_names.end(), *e.label) - class_names.begin()));
    }
    if (!missing.empty()) {
      std::cerr << missing.size() << " manifest entries have no feature row in " << a.probe << ", e.g. "
                << missing.front() << "\n";
      return 1;
    }
    write_text(out / "config.json", dump_config(cfg));
    report = finetune::probe_train(aligned, labels, class_names, folds, cfg, opt);
  } else {
    if (!a.checkpoint.empty()) {
      opt.base = read_checkpoint(a.checkpoint);
      cfg = with_checkpoint_architecture(cfg, *opt.base);
    }
    write_text(out / "config.json", dump_config(cfg));
    std::vector<std::string> class_names;
    const auto clips = finetune::load_labeled(m, cfg.finetune.max_clip_s, class_names);
    report = finetune::cross_validate(clips, class_names, folds, cfg, opt);
  }
  write_report(out, report, paths);
  print_report(report);
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string predictions, dataset;
};

// Rebuilds a report from a predictions CSV (fold,path,label,predicted), e.g.
// one written by `finetune` or by an external system.
int cmd_evaluate(const Common& c, const RunConfig& cfg, const EvaluateArgs& a) {
  const fs::path out = require_out(c);
  std::istringstream in(read_text(a.predictions));
  std::string line;
  std::getline(in, line);
  if (line.rfind("fold,path,label,predicted", 0) != 0) {
    throw ArgumentError(a.predictions + ": expected header fold,path,label,predicted");
  }
  struct Row {
    int fold;
    std::string path, label, predicted;
  };
  std::vector<Row> rows;
  std::set<std::string> names;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 4) throw ArgumentError(a.predictions + ": malformed row '" + line + "'");
    rows.push_back({std::stoi(cells[0]), cells[1], cells[2], cells[3]});
    names.insert(cells[2]);
    names.insert(cells[3]);
  }
  if (rows.empty()) throw ArgumentError(a.predictions + ": no predictions");
  const std::vector<std::string> class_names(names.begin(), names.end());
  auto index = [&](const std::string& s) {
    return static_cast<std::size_t>(std::lower_bound(class_names.begin(), class_names.end(), s) -
                                    class_names.begin());
  };
  std::map<int, metrics::ConfusionMatrix> per_fold;
  metrics::MetricsReport report;
  report.dataset = a.dataset;
  report.config_fingerprint = [&] {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(dump_config(cfg))));
    return std::string(buf);
  }();
  report.class_names = class_names;
  report.pooled = metrics::ConfusionMatrix(class_names.size());
  std::vector<std::string> paths;
  for (const auto& r : rows) {
    auto [it, _] = per_fold.try_emplace(r.fold, class_names.size());
    it->second.add(index(r.label), index(r.predicted));
    report.pooled.add(index(r.label), index(r.predicted));
    report.predictions.push_back({r.fold, paths.size(), index(r.label), index(r.predicted)});
    paths.push_back(r.path);
  }
  for (const auto& [fold, cm] : per_fold) {
    metrics::FoldResult f;
    f.fold = fold;
    f.scores = metrics::score(cm);
    f.num_test = static_cast<std::size_t>(cm.total());
    report.folds.push_back(f);
  }
  report.finalize();
  write_report(out, report, paths);
  print_report(report);
  return 0;
}

// ---------------------------------------------------------------------------

struct EmbedArgs {
  std::string manifest, checkpoint;
};

int cmd_embed(const Common& c, RunConfig cfg, const EmbedArgs& a) {
  const fs::path out = require_out(c);
  const auto ckpt = read_checkpoint(a.checkpoint);
  cfg = with_checkpoint_architecture(cfg, ckpt);
  const auto m = audio::Manifest::read(a.manifest);
  finetune::Classifier clf(cfg, 1);
  model::init_scratch(clf.backbone().params(), cfg.seed);
  load_params(ckpt, clf.backbone().params(), true);

  finetune::ProbeFeatures emb;
  emb.dim = cfg.context.model_dim;
  std::string labels = "path,label\n";
  const auto cap = static_cast<std::size_t>(std::llround(cfg.finetune.max_clip_s * audio::kSampleRate));
  for (const auto& e : m.entries()) {
    auto w = audio::load_audio(e.path);
    if (w.samples.size() > cap) w.samples.resize(cap);
    const auto v = clf.embed(w.samples);
    emb.paths.push_back(e.path);
    emb.rows.insert(emb.rows.end(), v.values().begin(), v.values().end());
    labels += csv_field(e.path) + "," + csv_field(e.label.value_or("")) + "\n";
  }
  write_text(out / "embeddings.csv", emb.to_csv());
  write_text(out / "labels.csv", labels);
  std::cout << "embedded " << emb.paths.size() << " clips (" << emb.dim << " dims)\n";
  return 0;
}

struct ProjectArgs {
  std::string from_csv, manifest, labels;
  double perplexity = 30.0;
  std::size_t iterations = 1000;
};

int cmd_project(const Common& c, const RunConfig& cfg, const ProjectArgs& a) {
  const fs::path out = require_out(c);
  const auto emb = finetune::ProbeFeatures::read_csv(a.from_csv);
  const std::size_t n = emb.paths.size();
  if (n < 5) {
    std::cerr << "too few points: t-SNE needs at least 5 rows, " << a.from_csv << " has " << n << "\n";
    return 1;
  }
  std::map<std::string, std::string> label_of;
  if (!a.labels.empty()) label_of = read_label_map(a.labels);
  if (!a.manifest.empty()) {
    const auto m = audio::Manifest::read(a.manifest);
    for (const auto& e : m.entries()) label_of[e.path] = e.label.value_or("");
  }
  std::vector<std::string> labels;
  for (const auto& p : emb.paths) labels.push_back(label_of.count(p) ? label_of[p] : "");

  project::TsneOptions opt;
  opt.seed = cfg.seed;
  opt.iterations = a.iterations;
  opt.perplexity = a.perplexity;
  const double max_perplexity = static_cast<double>(n - 1) / 3.0;
  if (opt.perplexity > max_perplexity) {
    std::cerr << "perplexity " << opt.perplexity << " too large for " << n << " points; using "
              << max_perplexity << "\n";
    opt.perplexity = max_perplexity;
  }
  const auto p = project::tsne(emb.rows, n, emb.dim, opt);
  write_text(out / "projection.csv", project::projection_csv(p, emb.paths, labels));
  write_text(out / "projection.svg", project::render_scatter(p, labels));
  std::printf("t-SNE: %zu points, %zu iterations, KL %.4f\n", n, p.iterations_run, p.final_kl);
  if (std::set<std::string>(labels.begin(), labels.end()).size() >= 2) {
    std::printf("silhouette %.3f\n", project::silhouette(p.points, n, 2, labels));
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string manifest;
  std::vector<std::string> reports;
};

int cmd_report(const ReportArgs& a) {
  if (a.manifest.empty() && a.reports.empty()) throw ArgumentError("report: give --manifest and/or --reports");
  if (!a.manifest.empty()) std::cout << audio::format_stats_table(audio::Manifest::read(a.manifest));
  if (a.reports.empty()) return 0;
  std::vector<double> uar, acc, f1;
  std::printf("%-24s %-12s %-12s %-12s\n", "Dataset", "UAR", "Acc", "F1");
  for (const auto& path : a.reports) {
    const auto j = ojson::parse(read_text(path));
    const auto& agg = j.at("aggregate");
    auto ms = [&](const char* k) {
      return metrics::MeanStd{agg.at(k).at("mean").get<double>(), agg.at(k).at("std").get<double>()};
    };
    const auto u = ms("uar"), ac = ms("accuracy"), f = ms("f1_macro");
    std::printf("%-24s %-12s %-12s %-12s\n", j.at("dataset").get<std::string>().c_str(),
                metrics::format_mean_std(u).c_str(), metrics::format_mean_std(ac).c_str(),
                metrics::format_mean_std(f).c_str());
    uar.push_back(u.mean);
    acc.push_back(ac.mean);
    f1.push_back(f.mean);
  }
  if (a.reports.size() > 1) {
    std::printf("%-24s %-12s %-12s %-12s\n", "Average", metrics::format_mean_std(metrics::mean_std(uar)).c_str(),
                metrics::format_mean_std(metrics::mean_std(acc)).c_str(),
                metrics::format_mean_std(metrics::mean_std(f1)).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vocrep: self-supervised pretraining and evaluation for non-verbal vocalization audio"};
  app.require_subcommand(0, 1);
  Common top;
  add_common(&app, top);

  Common ci, cp, cf, ce, cm, cj, cr;
  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "Index a directory of WAV files into a manifest");
  add_common(s_ingest, ci);
  s_ingest->add_option("--input", ingest.input, "Directory scanned recursively for .wav files")->required();
  s_ingest->add_option("--dataset", ingest.dataset, "Dataset name (default: directory name)");
  s_ingest->add_option("--labels", ingest.labels, "CSV with header; rows of relative path or file name, label");

  PretrainArgs pre;
  auto* s_pre = app.add_subcommand("pretrain", "Contrastive pretraining");
  add_common(s_pre, cp);
  s_pre->add_option("--manifest", pre.manifest, "Training manifest (JSONL)")->required();
  s_pre->add_option("--valid-manifest", pre.valid_manifest, "Validation manifest (default: seeded holdout)");
  s_pre->add_option("--init-from", pre.init_from, "Warm-start checkpoint");
  s_pre->add_option("--total-updates", pre.total_updates, "Override pretrain.total_updates");

  FinetuneArgs ft;
  auto* s_ft = app.add_subcommand("finetune", "Cross-validated fine-tuning (or probe training)");
  add_common(s_ft, cf);
  s_ft->add_option("--manifest", ft.manifest, "Labeled manifest (JSONL)")->required();
  s_ft->add_option("--checkpoint", ft.checkpoint, "Pretrained checkpoint (default: scratch init)");
  s_ft->add_option("--probe", ft.probe, "Feature CSV (path,f0,...): train the two-layer probe instead");
  s_ft->add_option("--folds", ft.folds, "Override finetune.folds")->check(CLI::Range(2, 1000));
  s_ft->add_option("--splits", ft.splits, "Fold assignment JSON to reuse");
  s_ft->add_option("--dataset", ft.dataset, "Dataset name in the report");

  EvaluateArgs ev;
  auto* s_ev = app.add_subcommand("evaluate", "Metrics report from a predictions CSV");
  add_common(s_ev, ce);
  s_ev->add_option("--predictions", ev.predictions, "CSV fold,path,label,predicted")->required();
  s_ev->add_option("--dataset", ev.dataset, "Dataset name in the report");

  EmbedArgs em;
  auto* s_em = app.add_subcommand("embed", "Pooled clip embeddings from a checkpoint");
  add_common(s_em, cm);
  s_em->add_option("--manifest", em.manifest, "Manifest of clips to embed")->required();
  s_em->add_option("--checkpoint", em.checkpoint, "Checkpoint")->required();

  ProjectArgs pj;
  auto* s_pj = app.add_subcommand("project", "t-SNE projection of an embeddings CSV");
  add_common(s_pj, cj);
  s_pj->add_option("--from-csv", pj.from_csv, "Embeddings CSV (path,f0,...)")->required();
  s_pj->add_option("--manifest", pj.manifest, "Manifest supplying labels by path");
  s_pj->add_option("--labels", pj.labels, "CSV path,label supplying labels");
  s_pj->add_option("--perplexity", pj.perplexity, "t-SNE perplexity");
  s_pj->add_option("--iterations", pj.iterations, "t-SNE iterations");

  ReportArgs rp;
  auto* s_rp = app.add_subcommand("report", "Corpus statistics and cross-dataset summaries");
  add_common(s_rp, cr);
  s_rp->add_option("--manifest", rp.manifest, "Manifest for the statistics table");
  s_rp->add_option("--reports", rp.reports, "report.json files, one per dataset");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
    Common* common = &top;
    for (auto [s, c] : std::initializer_list<std::pair<CLI::App*, Common*>>{
             {s_ingest, &ci}, {s_pre, &cp}, {s_ft, &cf}, {s_ev, &ce}, {s_em, &cm}, {s_pj, &cj}, {s_rp, &cr}}) {
      if (s == sub) common = c;
    }
    // Options given before the subcommand apply unless repeated after it.
    if (common->config.empty()) common->config = top.config;
    if (common->profile.empty()) common->profile = top.profile;
    if (common->seed_opt->count() == 0 && top.seed_opt->count() > 0) {
      common->seed = top.seed;
      common->seed_opt = top.seed_opt;
    }
    common->deterministic = common->deterministic || top.deterministic;
    if (common->jobs == 0) common->jobs = top.jobs;
    if (common->out.empty()) common->out = top.out;
    common->dump_config = common->dump_config || top.dump_config;

    kernels::set_num_threads(common->jobs);
    const RunConfig cfg = resolve(*common);
    if (common->dump_config) {
      std::cout << dump_config(cfg);
      return 0;
    }
    if (sub == nullptr) {
      std::cout << app.help();
      return 1;
    }
    if (sub == s_ingest) return cmd_ingest(*common, ingest);
    if (sub == s_pre) return cmd_pretrain(*common, cfg, pre);
    if (sub == s_ft) return cmd_finetune(*common, cfg, ft);
    if (sub == s_ev) return cmd_evaluate(*common, cfg, ev);
    if (sub == s_em) return cmd_embed(*common, cfg, em);
    if (sub == s_pj) return cmd_project(*common, cfg, pj);
    if (sub == s_rp) return cmd_report(rp);
  } catch (const IncompatibleCheckpointError& e) {
    std::cerr << "incompatible checkpoint:\n" << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
