// Copyright 2026 The molfuse Authors.
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

// molfuse command-line tool. Exit status: 0 success, 1 validation error,
// 2 internal error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "molfuse/checkpoint.h"
#include "molfuse/curation.h"
#include "molfuse/cv.h"
#include "molfuse/dataset.h"
#include "molfuse/error.h"
#include "molfuse/fingerprint.h"
#include "molfuse/fusion.h"
#include "molfuse/influence.h"
#include "molfuse/models.h"
#include "molfuse/molgraph.h"
#include "molfuse/random.h"

namespace molfuse {
namespace {

using nlohmann::json;

constexpr const char* kEmbeddingsFormat = "molfuse-embeddings";
constexpr int kEmbeddingsVersion = 1;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// First comma-separated field of every non-empty line; a leading "smiles"
// header is skipped.
std::vector<std::pair<std::size_t, std::string>> read_smiles_column(const std::string& path) {
  std::vector<std::pair<std::size_t, std::string>> out;
  const std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string field = lines[i].substr(0, lines[i].find(','));
    if (field.empty()) continue;
    if (i == 0 && field == "smiles") continue;
    out.emplace_back(i + 1, field);
  }
  return out;
}

// ---------------------------------------------------------------- parse

int run_parse(const std::string& path) {
  std::size_t failed = 0, total = 0;
  for (const auto& [line, smiles] : read_smiles_column(path)) {
    ++total;
    try {
      const MolecularGraph g = parse_smiles(smiles);
      std::cout << line << "\tok\t" << g.num_atoms() << '\t' << g.num_bonds() << '\t' << smiles << '\n';
    } catch (const Error& e) {
      ++failed;
      std::cout << line << '\t' << error_name(e.code()) << '\t' << e.what() << '\t' << smiles << '\n';
    }
  }
  std::cerr << total - failed << " of " << total << " parsed\n";
  return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------- curate

struct CurateOptions {
  std::string data;
  std::string reference;
  std::string caps = "225,97";
  std::size_t bins = 10;
  double ob_threshold = kOxygenBalanceThreshold;
  std::string out = "-";
  std::string report;
};

json stage_json(const CurationStage& s) {
  json census = json::array();
  for (const BucketCount& c : s.census) {
    census.push_back({{"bucket", c.bucket},
                      {"x_bin", c.bucket / s.grid.y_bins()},
                      {"y_bin", c.bucket % s.grid.y_bins()},
                      {"before", c.before},
                      {"after", c.after}});
  }
  return {{"x_axis", axis_name(s.grid.x_axis)}, {"y_axis", axis_name(s.grid.y_axis)},
          {"x_edges", s.grid.x_edges},          {"y_edges", s.grid.y_edges},
          {"cap", s.grid.cap},                  {"kept", s.kept.size()},
          {"census", census}};
}

int run_curate(const CurateOptions& o) {
  const std::vector<std::string> caps = split(o.caps, ',');
  if (caps.size() != 2) throw Error(ErrorCode::kInvalidArgument, "--caps expects two values, e.g. 225,97");
  std::size_t cap1 = 0, cap2 = 0;
  try {
    cap1 = std::stoul(caps[0]);
    cap2 = std::stoul(caps[1]);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "--caps expects two integers");
  }

  std::vector<Fingerprint> refs;
  for (const auto& [line, smiles] : read_smiles_column(o.reference)) {
    refs.push_back(morgan_fingerprint(parse_smiles(smiles)));
  }

  json rejected = json::array();
  std::vector<ScoredMolecule> candidates;
  std::vector<Descriptors> descriptors;
  std::vector<MolecularGraph> graphs;
  for (const auto& [line, smiles] : read_smiles_column(o.data)) {
    try {
      MolecularGraph g = parse_smiles(smiles);
      descriptors.push_back(composition_descriptors(g));
      candidates.push_back({smiles, descriptors.back(), 0.0});
      graphs.push_back(std::move(g));
    } catch (const Error& e) {
      rejected.push_back({{"line", line}, {"smiles", smiles}, {"error", error_name(e.code())}});
    }
  }
  const std::vector<std::size_t> passing = filter_oxygen_balance(descriptors, o.ob_threshold);
  std::vector<ScoredMolecule> rows;
  rows.reserve(passing.size());
  for (std::size_t i : passing) {
    ScoredMolecule r = candidates[i];
    r.similarity = max_similarity(morgan_fingerprint(graphs[i]), refs);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error(ErrorCode::kAllRowsInvalid, "no molecule passes the oxygen-balance filter");
  const CurationResult result = two_stage_select(rows, cap1, cap2, o.bins);

  std::string csv = "smiles,ob100,mw,n_percent,similarity\n";
  for (std::size_t i : result.mw_n.kept) {
    const ScoredMolecule& r = rows[i];
    csv += r.smiles + ',' + fmt_double(r.descriptors.ob100) + ',' + fmt_double(r.descriptors.mw) + ',' +
           fmt_double(r.descriptors.n_percent) + ',' + fmt_double(r.similarity) + '\n';
  }
  write_output(o.out, csv);

  if (!o.report.empty()) {
    const json report = {{"format", "molfuse-curation"},
                         {"version", 1},
                         {"input_rows", candidates.size() + rejected.size()},
                         {"rejected", rejected},
                         {"ob_threshold", o.ob_threshold},
                         {"after_ob_filter", rows.size()},
                         {"references", refs.size()},
                         {"stages", {stage_json(result.ob_mw), stage_json(result.mw_n)}},
                         {"selected", result.mw_n.kept.size()}};
    write_text_file(o.report, report.dump(2) + "\n");
  }
  std::cerr << "selected " << result.mw_n.kept.size() << " of " << candidates.size() << " molecules\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct ModelOptions {
  int hidden = 300;
  int depth = 3;
  int ffn_width = 256;
  int ffn_layers = 2;
  double dropout = 0.0;
  int epochs = 50;
  int batch_size = 64;
  std::uint64_t seed = 0;
  double lr = 1e-3;

  void add_to(CLI::App* app) {
    app->add_option("--hidden", hidden, "encoder hidden size")->capture_default_str();
    app->add_option("--depth", depth, "message-passing depth")->capture_default_str();
    app->add_option("--ffn-width", ffn_width, "FFN hidden width")->capture_default_str();
    app->add_option("--ffn-layers", ffn_layers, "FFN hidden layers")->capture_default_str();
    app->add_option("--dropout", dropout, "FFN dropout")->capture_default_str();
    app->add_option("--epochs", epochs)->capture_default_str();
    app->add_option("--batch-size", batch_size)->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
  }

  FFNConfig ffn() const { return {ffn_layers, ffn_width, dropout, 1}; }

  TrainConfig train() const {
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.seed = seed;
    t.adam.lr = lr;
    return t;
  }
};

struct TrainOptions {
  std::string model = "st";
  std::string tasks;
  std::string data;
  std::string out;
  std::vector<std::string> log10;
  ModelOptions m;
};

int run_train(const TrainOptions& o) {
  const ModelKind kind = o.model == "st" ? ModelKind::kSingleTask : ModelKind::kMultiTask;
  const DatasetTable full = load_dataset(o.data, o.log10);
  const std::vector<std::string> tasks = o.tasks.empty() ? full.target_names : split(o.tasks, ',');
  const DatasetTable table = select_tasks(full, tasks);
  const std::vector<PreparedMolecule> mols = prepare_all(table);
  const EncoderConfig enc{o.m.hidden, o.m.depth, derive_seed(o.m.seed, {0})};
  const GraphTrainResult r =
      train_model(kind, mols, table.targets, table.target_names, table.log_flags, enc, o.m.ffn(), o.m.train());
  write_text_file(o.out, save_checkpoint(r.model));
  std::cerr << model_kind_name(kind) << " model on " << table.rows() << " rows, final loss "
            << (r.loss_trace.empty() ? 0.0 : r.loss_trace.back()) << '\n';
  return 0;
}

// ---------------------------------------------------------------- embed

json embeddings_json(const DatasetTable& table, const std::vector<EmbeddingBlock>& blocks) {
  json jb = json::array();
  for (const EmbeddingBlock& b : blocks) {
    jb.push_back({{"label", b.label}, {"provenance", b.provenance}, {"values", matrix_to_json(b.values)}});
  }
  return {{"format", kEmbeddingsFormat},
          {"version", kEmbeddingsVersion},
          {"smiles", table.smiles},
          {"row_ids", table.row_ids},
          {"blocks", jb}};
}

struct EmbeddingFile {
  std::vector<std::string> smiles;
  std::vector<std::size_t> row_ids;
  std::vector<EmbeddingBlock> blocks;
};

EmbeddingFile load_embeddings(const std::string& path) {
  const json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.value("format", "") != kEmbeddingsFormat) {
    throw Error(ErrorCode::kCorruptCheckpoint, path + " is not an embeddings file");
  }
  if (j.value("version", -1) != kEmbeddingsVersion) {
    throw Error(ErrorCode::kVersionMismatch, path + " has an unsupported version");
  }
  try {
    EmbeddingFile f;
    f.smiles = j.at("smiles").get<std::vector<std::string>>();
    f.row_ids = j.at("row_ids").get<std::vector<std::size_t>>();
    for (const json& b : j.at("blocks")) {
      f.blocks.push_back({b.at("label").get<std::string>(), b.at("provenance").get<std::string>(),
                          matrix_from_json(b.at("values"))});
    }
    return f;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, path + ": " + e.what());
  }
}

int run_embed(const std::string& models, const std::string& data, const std::string& out) {
  std::vector<GraphModel> loaded;
  for (const std::string& path : split(models, ',')) loaded.push_back(load_graph_model(read_text_file(path)));
  const DatasetTable table = load_dataset(data);
  const std::vector<PreparedMolecule> mols = prepare_all(table);
  std::vector<const GraphModel*> ptrs;
  for (const GraphModel& m : loaded) ptrs.push_back(&m);
  write_text_file(out, embeddings_json(table, embed_dataset(ptrs, mols)).dump() + "\n");
  return 0;
}

// Embeddings re-aligned to the dataset rows.
FusedMatrix fused_for(const EmbeddingFile& f, const DatasetTable& table) {
  if (f.smiles != table.smiles) {
    throw Error(ErrorCode::kRowCountMismatch, "embeddings and dataset rows differ");
  }
  return fuse_concat(f.blocks);
}

// ---------------------------------------------------------------- fuse-train

struct FuseOptions {
  std::string blocks;
  std::string data;
  std::string tasks;
  std::string fusion = "concat";
  std::size_t components = 0;
  std::string out;
  std::vector<std::string> log10;
  ModelOptions m;
};

int run_fuse_train(const FuseOptions& o) {
  const EmbeddingFile f = load_embeddings(o.blocks);
  const DatasetTable full = load_dataset(o.data, o.log10);
  const DatasetTable table = select_tasks(full, o.tasks.empty() ? full.target_names : split(o.tasks, ','));
  const FusedMatrix fused = fused_for(f, table);
  FusionSpec spec;
  if (o.fusion == "pca") {
    spec.mode = FusionMode::kPca;
    spec.components = o.components;
  } else if (o.fusion != "concat") {
    throw Error(ErrorCode::kInvalidArgument, "--fusion must be concat or pca");
  }
  const FusedTrainResult r = train_fused(fused, table.row_ids, table.targets, table.target_names, table.log_flags,
                                         spec, std::nullopt, o.m.ffn(), o.m.train());
  write_text_file(o.out, save_checkpoint(r.model));
  return 0;
}

// ---------------------------------------------------------------- cv

struct CvOptions {
  std::string models = "st,mt,fmt";
  std::string grid = "default";
  std::uint64_t seed = 0;
  std::string data;
  std::string report;
  std::vector<std::string> task_subsets;
  std::vector<std::string> log10;
  int epochs = 50;
  int batch_size = 64;
  int ffn_layers = 2;
  double dropout = 0.0;
  double lr = 1e-3;
  bool no_analyses = false;
  std::size_t cur_k = 50;
  double noise_multiplier = 3.0;
  int noise_seeds = 5;
};

int run_cv(const CvOptions& o) {
  CVConfig c;
  for (const std::string& m : split(o.models, ',')) c.models.push_back(parse_model_spec(m));
  for (const std::string& s : o.task_subsets) c.task_subsets.push_back(split(s, ','));
  c.grid = parse_grid(o.grid);
  c.seed = o.seed;
  c.epochs = o.epochs;
  c.batch_size = o.batch_size;
  c.ffn_layers = o.ffn_layers;
  c.dropout = o.dropout;
  c.adam.lr = o.lr;
  c.analyses = !o.no_analyses;
  c.cur_k = o.cur_k;
  c.noise_multiplier = o.noise_multiplier;
  c.noise_seeds = o.noise_seeds;
  const DatasetTable table = load_dataset(o.data, o.log10);
  for (const DroppedRow& d : table.dropped) {
    std::cerr << "dropped line " << d.line << " (" << error_name(d.code) << "): " << d.smiles << '\n';
  }
  write_output(o.report, nested_cv(table, c).dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- analyze

int run_analyze_cur(const std::string& blocks, std::size_t k, std::size_t rank, const std::string& out) {
  const EmbeddingFile f = load_embeddings(blocks);
  const FusedMatrix fused = fuse_concat(f.blocks);
  const CURSelection s = cur_select(fused.values, k, rank, fused.layout);
  json counts = json::object();
  for (const auto& [label, n] : s.source_counts) counts[label] = n;
  json cols = json::array();
  for (std::size_t c : s.columns) {
    std::string source;
    for (const BlockInfo& b : fused.layout) {
      if (c >= b.offset && c < b.offset + b.width) source = b.label;
    }
    cols.push_back({{"column", c}, {"source", source}, {"leverage", s.leverage[c]}});
  }
  const json report = {{"format", "molfuse-cur"}, {"version", 1},         {"k", k},
                       {"rank", rank == 0 ? k : rank}, {"columns", cols}, {"source_counts", counts}};
  write_output(out, report.dump(2) + "\n");
  return 0;
}

struct NoiseOptions {
  std::string model;
  std::string blocks;
  std::string data;
  std::vector<std::string> log10;
  double multiplier = 3.0;
  int seeds = 5;
  std::uint64_t seed = 0;
  std::string out = "-";
};

int run_analyze_noise(const NoiseOptions& o) {
  const FusedModel model = load_fused_model(read_text_file(o.model));
  const EmbeddingFile f = load_embeddings(o.blocks);
  const DatasetTable table = select_tasks(load_dataset(o.data, o.log10), model.tasks);
  const FusedMatrix fused = fused_for(f, table);
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < o.seeds; ++s) seeds.push_back(derive_seed(o.seed, {static_cast<std::uint64_t>(s)}));
  const InfluenceMatrix inf = influence_averaged(model, fused.values, table.targets, o.multiplier, seeds);
  json a = json::array();
  for (std::size_t i = 0; i < inf.a.rows(); ++i) {
    a.push_back(std::vector<double>(inf.a.row(i).begin(), inf.a.row(i).end()));
  }
  const json report = {{"format", "molfuse-influence"}, {"version", 1},     {"blocks", inf.blocks},
                       {"tasks", inf.tasks},            {"multiplier", inf.multiplier},
                       {"seeds", inf.seeds},            {"a", a}};
  write_output(o.out, report.dump(2) + "\n");
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"molfuse: molecular property models with fused embeddings"};
  app.require_subcommand(1);

  std::string parse_file;
  CLI::App* parse = app.add_subcommand("parse", "parse SMILES and report per-line diagnostics");
  parse->add_option("file", parse_file, "one SMILES per line (or a CSV whose first column is smiles)")->required();

  CurateOptions cur_o;
  CLI::App* curate = app.add_subcommand("curate", "oxygen-balance filter and two-stage bucket selection");
  curate->add_option("--data", cur_o.data, "candidate SMILES CSV")->required();
  curate->add_option("--reference", cur_o.reference, "reference SMILES file")->required();
  curate->add_option("--caps", cur_o.caps, "per-bucket caps of the two stages")->capture_default_str();
  curate->add_option("--bins", cur_o.bins, "bins per axis")->capture_default_str();
  curate->add_option("--ob-threshold", cur_o.ob_threshold)->capture_default_str();
  curate->add_option("--out", cur_o.out, "selected rows CSV (- for stdout)")->capture_default_str();
  curate->add_option("--report", cur_o.report, "census report JSON");

  TrainOptions tr_o;
  CLI::App* train = app.add_subcommand("train", "train a single-task or multi-task graph model");
  train->add_option("--model", tr_o.model)->check(CLI::IsMember({"st", "mt"}))->capture_default_str();
  train->add_option("--tasks", tr_o.tasks, "comma-separated target columns (default: all)");
  train->add_option("--data", tr_o.data)->required();
  train->add_option("--out", tr_o.out, "checkpoint path")->required();
  train->add_option("--log10", tr_o.log10, "columns scaled by log10")->delimiter(',');
  tr_o.m.add_to(train);

  std::string emb_models, emb_data, emb_out;
  CLI::App* embed = app.add_subcommand("embed", "embed a dataset with frozen graph-model encoders");
  embed->add_option("--models", emb_models, "comma-separated graph checkpoints")->required();
  embed->add_option("--data", emb_data)->required();
  embed->add_option("--out", emb_out)->required();

  FuseOptions fu_o;
  CLI::App* fuse = app.add_subcommand("fuse-train", "train an FFN over fused embeddings");
  fuse->add_option("--blocks", fu_o.blocks, "embeddings file from embed")->required();
  fuse->add_option("--data", fu_o.data)->required();
  fuse->add_option("--tasks", fu_o.tasks);
  fuse->add_option("--fusion", fu_o.fusion)->check(CLI::IsMember({"concat", "pca"}))->capture_default_str();
  fuse->add_option("--components", fu_o.components, "PCA components");
  fuse->add_option("--out", fu_o.out)->required();
  fuse->add_option("--log10", fu_o.log10)->delimiter(',');
  fu_o.m.add_to(fuse);

  CvOptions cv_o;
  CLI::App* cv = app.add_subcommand("cv", "nested cross-validation over shared folds");
  cv->add_option("--models", cv_o.models, "st, mt, fmt, fmt-concat, fmt-pca<n>")->capture_default_str();
  cv->add_option("--grid", cv_o.grid, "default or h:T:w,...")->capture_default_str();
  cv->add_option("--seed", cv_o.seed)->capture_default_str();
  cv->add_option("--data", cv_o.data)->required();
  cv->add_option("--report", cv_o.report, "report path (- for stdout)")->required();
  cv->add_option("--tasks", cv_o.task_subsets, "task subset, repeatable (default: all targets)");
  cv->add_option("--log10", cv_o.log10)->delimiter(',');
  cv->add_option("--epochs", cv_o.epochs)->capture_default_str();
  cv->add_option("--batch-size", cv_o.batch_size)->capture_default_str();
  cv->add_option("--ffn-layers", cv_o.ffn_layers)->capture_default_str();
  cv->add_option("--dropout", cv_o.dropout)->capture_default_str();
  cv->add_option("--lr", cv_o.lr)->capture_default_str();
  cv->add_flag("--no-analyses", cv_o.no_analyses, "skip CUR and influence analyses");
  cv->add_option("--cur-k", cv_o.cur_k)->capture_default_str();
  cv->add_option("--noise-multiplier", cv_o.noise_multiplier)->capture_default_str();
  cv->add_option("--noise-seeds", cv_o.noise_seeds)->capture_default_str();

  CLI::App* analyze = app.add_subcommand("analyze", "analyses of fused embeddings");
  analyze->require_subcommand(1);
  std::string acur_blocks, acur_out = "-";
  std::size_t acur_k = 50, acur_rank = 0;
  CLI::App* acur = analyze->add_subcommand("cur", "leverage-score column selection");
  acur->add_option("--blocks", acur_blocks)->required();
  acur->add_option("--k", acur_k)->capture_default_str();
  acur->add_option("--rank", acur_rank, "singular vectors used for leverage (0: k)")->capture_default_str();
  acur->add_option("--out", acur_out)->capture_default_str();

  NoiseOptions an_o;
  CLI::App* anoise = analyze->add_subcommand("noise", "per-block noise influence ratios");
  anoise->add_option("--model", an_o.model, "fused checkpoint (concat)")->required();
  anoise->add_option("--blocks", an_o.blocks)->required();
  anoise->add_option("--data", an_o.data)->required();
  anoise->add_option("--log10", an_o.log10)->delimiter(',');
  anoise->add_option("--multiplier", an_o.multiplier)->capture_default_str();
  anoise->add_option("--seeds", an_o.seeds)->capture_default_str();
  anoise->add_option("--seed", an_o.seed)->capture_default_str();
  anoise->add_option("--out", an_o.out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*parse) return run_parse(parse_file);
  if (*curate) return run_curate(cur_o);
  if (*train) return run_train(tr_o);
  if (*embed) return run_embed(emb_models, emb_data, emb_out);
  if (*fuse) return run_fuse_train(fu_o);
  if (*cv) return run_cv(cv_o);
  if (*acur) return run_analyze_cur(acur_blocks, acur_k, acur_rank, acur_out);
  if (*anoise) return run_analyze_noise(an_o);
  return 1;
}

}  // namespace
}  // namespace molfuse

int main(int argc, char** argv) {
  try {
    return molfuse::run(argc, argv);
  } catch (const molfuse::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}
