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

#include "molfuse/cv.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "molfuse/error.h"
#include "molfuse/fingerprint.h"
#include "molfuse/influence.h"
#include "molfuse/metrics.h"
#include "molfuse/random.h"

namespace molfuse {

using nlohmann::json;

namespace {

std::uint64_t tasks_hash(const std::vector<std::string>& tasks) {
  std::vector<std::uint8_t> bytes;
  for (const std::string& t : tasks) {
    bytes.insert(bytes.end(), t.begin(), t.end());
    bytes.push_back(0);
  }
  return fnv1a64(bytes);
}

std::vector<std::size_t> rows_with_targets(std::span<const std::size_t> rows, const SparseTargets& t) {
  std::vector<std::size_t> out;
  for (std::size_t r : rows) {
    for (std::size_t j = 0; j < t.tasks(); ++j) {
      if (t.present(r, j)) {
        out.push_back(r);
        break;
      }
    }
  }
  return out;
}

std::vector<PreparedMolecule> take(std::span<const PreparedMolecule> mols, std::span<const std::size_t> rows) {
  std::vector<PreparedMolecule> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(mols[r]);
  return out;
}

void assert_disjoint(std::span<const std::size_t> train, std::span<const std::size_t> eval) {
  std::vector<std::size_t> a(train.begin(), train.end());
  std::sort(a.begin(), a.end());
  for (std::size_t r : eval) {
    if (std::binary_search(a.begin(), a.end(), r)) {
      throw Error(ErrorCode::kFoldLeakage, "evaluation row " + std::to_string(r) + " is also a training row");
    }
  }
}

TrainConfig train_config_for(const CVConfig& config, std::uint64_t seed) {
  TrainConfig t;
  t.epochs = config.epochs;
  t.batch_size = config.batch_size;
  t.seed = derive_seed(seed, {1});
  t.adam = config.adam;
  return t;
}

FFNConfig ffn_config_for(const CVConfig& config, int width) {
  FFNConfig f;
  f.n_layers = config.ffn_layers;
  f.width = width;
  f.dropout = config.dropout;
  return f;
}

GraphModel train_graph(ModelKind kind, const DatasetTable& table, std::span<const PreparedMolecule> mols,
                       std::span<const std::size_t> rows, const HyperParams& hp, const CVConfig& config,
                       std::uint64_t seed) {
  const std::vector<std::size_t> used = rows_with_targets(rows, table.targets);
  const std::vector<PreparedMolecule> train_mols = take(mols, used);
  const EncoderConfig enc{hp.hidden_size, hp.depth, derive_seed(seed, {0})};
  return train_model(kind, train_mols, select_rows(table.targets, used), table.target_names, table.log_flags, enc,
                     ffn_config_for(config, hp.ffn_width), train_config_for(config, seed))
      .model;
}

// Mean over tasks (with at least one present entry) of the RMSE in scaled units.
double scaled_score(const Matrix& pred_scaled, const TargetScaler& scaler, const SparseTargets& raw) {
  const SparseTargets scaled = scaler.transform(raw);
  double total = 0.0;
  int counted = 0;
  for (std::size_t j = 0; j < scaled.tasks(); ++j) {
    double ss = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < scaled.rows(); ++i) {
      if (!scaled.present(i, j)) continue;
      const double r = pred_scaled(i, j) - scaled.values(i, j);
      ss += r * r;
      ++n;
    }
    if (n == 0) continue;
    total += std::sqrt(ss / static_cast<double>(n));
    ++counted;
  }
  return counted ? total / counted : 0.0;
}

json metrics_json(const TaskMetrics& m) { return {{"rmse", m.rmse}, {"mae", m.mae}, {"r2", m.r2}}; }

json matrix_rows_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return rows;
}

struct StEntry {
  HyperParams hp;
  GraphModel model;
};

struct FoldOutcome {
  json record;
  std::map<std::string, TaskMetrics> metrics;
};

class NestedRun {
 public:
  NestedRun(const DatasetTable& table, const CVConfig& config)
      : table_(table), config_(config), plan_(make_folds(table.rows(), config.seed)), mols_(prepare_all(table)) {}

  json run() {
    std::vector<std::vector<std::string>> subsets = config_.task_subsets;
    if (subsets.empty()) subsets.push_back(table_.target_names);
    if (config_.models.empty()) throw Error(ErrorCode::kInvalidArgument, "no model kinds requested");
    if (config_.grid.empty()) throw Error(ErrorCode::kInvalidArgument, "hyperparameter grid is empty");

    json report;
    report["format"] = "molfuse-run-report";
    report["version"] = kReportVersion;
    report["config"] = config_json();
    report["dataset"] = {{"rows", table_.rows()},
                         {"dropped", table_.dropped.size()},
                         {"targets", table_.target_names},
                         {"log10", table_.log_flags}};
    json sizes = json::array();
    for (int f = 0; f < kOuterFolds; ++f) sizes.push_back(plan_.outer_test(f).size());
    report["fold_plan"] = {{"hash", plan_.hash()}, {"seed", plan_.seed}, {"outer_test_sizes", sizes}};
    report["results"] = json::array();
    for (const auto& subset : subsets) report["results"].push_back(run_subset(subset));
    return report;
  }

 private:
  json config_json() const {
    json grid = json::array();
    for (const HyperParams& hp : config_.grid) grid.push_back(to_json(hp));
    json models = json::array();
    for (const CVModelSpec& m : config_.models) models.push_back(m.name());
    return {{"seed", config_.seed},
            {"epochs", config_.epochs},
            {"batch_size", config_.batch_size},
            {"ffn_layers", config_.ffn_layers},
            {"dropout", config_.dropout},
            {"adam",
             {{"lr", config_.adam.lr},
              {"beta1", config_.adam.beta1},
              {"beta2", config_.adam.beta2},
              {"eps", config_.adam.eps}}},
            {"grid", grid},
            {"models", models},
            {"task_subsets", config_.task_subsets},
            {"analyses", config_.analyses},
            {"cur_k", config_.cur_k},
            {"noise_multiplier", config_.noise_multiplier},
            {"noise_seeds", config_.noise_seeds}};
  }

  // Single-task model for `task` in `fold`, tuned and trained once per run.
  const StEntry& st_model(int fold, const std::string& task) {
    const auto key = std::make_pair(fold, task);
    auto it = st_cache_.find(key);
    if (it != st_cache_.end()) return it->second;
    const DatasetTable single = select_tasks(table_, {task});
    const HyperParams hp = grid_search(single, mols_, plan_, fold, ModelKind::kSingleTask, config_).best;
    GraphModel model = train_graph(ModelKind::kSingleTask, single, mols_, plan_.outer_train(fold), hp, config_,
                                   model_seed(config_.seed, fold, -1, {task}));
    return st_cache_.emplace(key, StEntry{hp, std::move(model)}).first->second;
  }

  FoldOutcome run_graph_fold(const CVModelSpec& spec, const DatasetTable& sub, int fold) {
    const std::vector<std::size_t> train = plan_.outer_train(fold);
    const std::vector<std::size_t> test = plan_.outer_test(fold);
    assert_disjoint(train, test);
    const std::vector<PreparedMolecule> test_mols = take(mols_, test);
    FoldOutcome out;
    out.record["fold"] = fold;
    if (spec.kind == CVKind::kSingleTask) {
      for (const std::string& task : sub.target_names) {
        const StEntry& e = st_model(fold, task);
        const DatasetTable single = select_tasks(table_, {task});
        const SparseTargets truth = select_rows(single.targets, test);
        const TaskMetrics m = compute_metrics(predict(e.model, test_mols), truth).front();
        out.metrics[task] = m;
        out.record["hyperparameters"][task] = to_json(e.hp);
        out.record["metrics"][task] = metrics_json(m);
        out.record["checkpoint_ids"][task] = encoder_id(e.model.encoder);
      }
      return out;
    }
    const HyperParams hp = grid_search(sub, mols_, plan_, fold, ModelKind::kMultiTask, config_).best;
    const GraphModel model = train_graph(ModelKind::kMultiTask, sub, mols_, train, hp, config_,
                                         model_seed(config_.seed, fold, -1, sub.target_names));
    const SparseTargets truth = select_rows(sub.targets, test);
    const std::vector<TaskMetrics> ms = compute_metrics(predict(model, test_mols), truth);
    out.record["hyperparameters"] = to_json(hp);
    out.record["checkpoint_ids"] = json::array({encoder_id(model.encoder)});
    for (std::size_t j = 0; j < ms.size(); ++j) {
      out.metrics[sub.target_names[j]] = ms[j];
      out.record["metrics"][sub.target_names[j]] = metrics_json(ms[j]);
    }
    return out;
  }

  FoldOutcome run_fused_fold(const CVModelSpec& spec, const DatasetTable& sub, int fold) {
    const std::vector<std::size_t> train_all = plan_.outer_train(fold);
    const std::vector<std::size_t> test = plan_.outer_test(fold);
    assert_disjoint(train_all, test);

    std::vector<const GraphModel*> encoders;
    json encoder_hp;
    for (const std::string& task : sub.target_names) {
      const StEntry& e = st_model(fold, task);
      encoders.push_back(&e.model);
      encoder_hp[task] = to_json(e.hp);
    }
    const FusedMatrix fused = fuse_concat(embed_dataset(encoders, mols_));
    FusionSpec fusion;
    if (spec.kind == CVKind::kFusedPca) fusion = {FusionMode::kPca, spec.components};

    // Only the FFN width is tuned; encoders stay fixed from the outer-train fit.
    std::vector<int> widths;
    for (const HyperParams& hp : config_.grid) {
      if (std::find(widths.begin(), widths.end(), hp.ffn_width) == widths.end()) widths.push_back(hp.ffn_width);
    }
    int best_width = widths.front();
    if (widths.size() > 1) {
      double best_score = std::numeric_limits<double>::infinity();
      for (int w : widths) {
        double total = 0.0;
        for (int g = 0; g < kInnerFolds; ++g) {
          const FusedModel m = fit_fused(sub, fused, plan_.inner_train(fold, g), fusion, w,
                                         model_seed(config_.seed, fold, g, sub.target_names));
          const std::vector<std::size_t> val = plan_.inner_validation(fold, g);
          total += scaled_score(predict_scaled(m, select_rows(fused.values, val)), m.scaler,
                                select_rows(sub.targets, val));
        }
        const double score = total / kInnerFolds;
        if (score < best_score) {
          best_score = score;
          best_width = w;
        }
      }
    }
    const FusedModel model =
        fit_fused(sub, fused, train_all, fusion, best_width, model_seed(config_.seed, fold, -1, sub.target_names));
    if (model.pca) assert_pca_excludes(*model.pca, test);

    const Matrix test_x = select_rows(fused.values, test);
    const SparseTargets truth = select_rows(sub.targets, test);
    const std::vector<TaskMetrics> ms = compute_metrics(predict(model, test_x), truth);
    FoldOutcome out;
    out.record["fold"] = fold;
    out.record["hyperparameters"] = {{"ffn_width", best_width}, {"encoders", encoder_hp}};
    json provenance = json::array();
    for (const BlockInfo& b : model.layout) provenance.push_back({{"label", b.label}, {"encoder_id", b.provenance}});
    out.record["checkpoint_ids"] = provenance;
    for (std::size_t j = 0; j < ms.size(); ++j) {
      out.metrics[sub.target_names[j]] = ms[j];
      out.record["metrics"][sub.target_names[j]] = metrics_json(ms[j]);
    }
    if (config_.analyses && spec.kind == CVKind::kFusedConcat) {
      out.record["analysis"] = analyses(model, fused, train_all, test_x, truth, fold);
    }
    return out;
  }

  FusedModel fit_fused(const DatasetTable& sub, const FusedMatrix& fused, std::span<const std::size_t> rows,
                       const FusionSpec& fusion, int width, std::uint64_t seed) {
    const std::vector<std::size_t> used = rows_with_targets(rows, sub.targets);
    FusedMatrix part{select_rows(fused.values, used), fused.layout};
    return train_fused(part, used, select_rows(sub.targets, used), sub.target_names, sub.log_flags, fusion,
                       std::nullopt, ffn_config_for(config_, width), train_config_for(config_, seed))
        .model;
  }

  json analyses(const FusedModel& model, const FusedMatrix& fused, std::span<const std::size_t> train,
                const Matrix& test_x, const SparseTargets& truth, int fold) {
    json out;
    const Matrix train_x = select_rows(fused.values, train);
    const std::size_t k = std::min(config_.cur_k, std::min(train_x.rows(), train_x.cols()));
    const CURSelection cur = cur_select(train_x, k, k, fused.layout);
    json counts;
    for (const auto& [label, n] : cur.source_counts) counts[label] = n;
    out["cur"] = {{"k", k}, {"columns", cur.columns}, {"source_counts", counts}};

    for (std::size_t j = 0; j < truth.tasks(); ++j) {
      if (truth.count_present(j) == 0) {
        out["influence"] = nullptr;
        return out;
      }
    }
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < config_.noise_seeds; ++s) {
      seeds.push_back(derive_seed(config_.seed, {0x6e6f697365, static_cast<std::uint64_t>(fold),
                                                 static_cast<std::uint64_t>(s)}));
    }
    const InfluenceMatrix inf = influence_averaged(model, test_x, truth, config_.noise_multiplier, seeds);
    out["influence"] = {{"blocks", inf.blocks}, {"tasks", inf.tasks}, {"multiplier", inf.multiplier},
                        {"seeds", inf.seeds}, {"a", matrix_rows_json(inf.a)}};
    return out;
  }

  json run_subset(const std::vector<std::string>& tasks) {
    const DatasetTable sub = select_tasks(table_, tasks);
    json result;
    result["tasks"] = tasks;
    std::map<std::string, std::map<std::string, MeanStd>> rmse_summary;  // task -> model -> rmse
    for (const CVModelSpec& spec : config_.models) {
      json section;
      section["fold_plan_hash"] = plan_.hash();
      section["folds"] = json::array();
      std::map<std::string, std::vector<TaskMetrics>> per_task;
      for (int f = 0; f < kOuterFolds; ++f) {
        FoldOutcome o = spec.kind == CVKind::kSingleTask || spec.kind == CVKind::kMultiTask
                            ? run_graph_fold(spec, sub, f)
                            : run_fused_fold(spec, sub, f);
        for (const auto& [task, m] : o.metrics) per_task[task].push_back(m);
        section["folds"].push_back(std::move(o.record));
      }
      for (const auto& [task, ms] : per_task) {
        std::vector<double> rmse, mae, r2;
        for (const TaskMetrics& m : ms) {
          rmse.push_back(m.rmse);
          mae.push_back(m.mae);
          r2.push_back(m.r2);
        }
        const MeanStd r = mean_std(rmse), a = mean_std(mae), q = mean_std(r2);
        section["summary"][task] = {{"rmse", {{"mean", r.mean}, {"std", r.std}}},
                                    {"mae", {{"mean", a.mean}, {"std", a.std}}},
                                    {"r2", {{"mean", q.mean}, {"std", q.std}}}};
        rmse_summary[task][spec.name()] = r;
      }
      result["models"][spec.name()] = std::move(section);
    }
    // Equivalent: the +-1 std interval of mean RMSE overlaps the best model's.
    for (const auto& [task, by_model] : rmse_summary) {
      const auto best = std::min_element(by_model.begin(), by_model.end(), [](const auto& a, const auto& b) {
        return a.second.mean < b.second.mean;
      });
      json names = json::array();
      for (const auto& [name, s] : by_model) {
        if (s.mean - s.std <= best->second.mean + best->second.std) names.push_back(name);
      }
      result["best_or_equivalent"][task] = {{"best", best->first}, {"models", names}};
    }
    return result;
  }

  const DatasetTable& table_;
  const CVConfig& config_;
  FoldPlan plan_;
  std::vector<PreparedMolecule> mols_;
  std::map<std::pair<int, std::string>, StEntry> st_cache_;
};

}  // namespace

json to_json(const HyperParams& hp) {
  return {{"hidden_size", hp.hidden_size}, {"depth", hp.depth}, {"ffn_width", hp.ffn_width}};
}

std::vector<HyperParams> default_grid() {
  std::vector<HyperParams> grid;
  for (int h : {64, 300}) {
    for (int t : {2, 3}) {
      for (int w : {128, 256}) grid.push_back({h, t, w});
    }
  }
  return grid;
}

std::vector<HyperParams> parse_grid(const std::string& text) {
  if (text == "default") return default_grid();
  std::vector<HyperParams> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    HyperParams hp;
    char c1 = 0, c2 = 0;
    std::istringstream is(item);
    if (!(is >> hp.hidden_size >> c1 >> hp.depth >> c2 >> hp.ffn_width) || c1 != ':' || c2 != ':' ||
        !(is >> std::ws).eof()) {
      throw Error(ErrorCode::kInvalidArgument, "grid point '" + item + "' is not h:T:width");
    }
    grid.push_back(hp);
  }
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "empty grid");
  return grid;
}

std::string CVModelSpec::name() const {
  switch (kind) {
    case CVKind::kSingleTask:
      return "st";
    case CVKind::kMultiTask:
      return "mt";
    case CVKind::kFusedConcat:
      return "fmt-concat";
    case CVKind::kFusedPca:
      return "fmt-pca" + std::to_string(components);
  }
  return "?";
}

CVModelSpec parse_model_spec(const std::string& text) {
  if (text == "st") return {CVKind::kSingleTask, 0};
  if (text == "mt") return {CVKind::kMultiTask, 0};
  if (text == "fmt" || text == "fmt-concat") return {CVKind::kFusedConcat, 0};
  const std::string prefix = "fmt-pca";
  if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size()) {
    const std::string digits = text.substr(prefix.size());
    if (std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      const std::size_t n = std::stoul(digits);
      if (n > 0) return {CVKind::kFusedPca, n};
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown model kind '" + text + "'");
}

std::uint64_t model_seed(std::uint64_t run_seed, int fold, int inner, const std::vector<std::string>& tasks) {
  return derive_seed(run_seed, {static_cast<std::uint64_t>(fold), static_cast<std::uint64_t>(inner + 1),
                                tasks_hash(tasks)});
}

GridSearchResult grid_search(const DatasetTable& table, std::span<const PreparedMolecule> molecules,
                             const FoldPlan& plan, int fold, ModelKind kind, const CVConfig& config) {
  if (config.grid.empty()) throw Error(ErrorCode::kInvalidArgument, "hyperparameter grid is empty");
  GridSearchResult result;
  result.best = config.grid.front();
  if (config.grid.size() == 1) return result;
  double best_score = std::numeric_limits<double>::infinity();
  for (const HyperParams& hp : config.grid) {
    double total = 0.0;
    for (int g = 0; g < kInnerFolds; ++g) {
      const GraphModel m = train_graph(kind, table, molecules, plan.inner_train(fold, g), hp, config,
                                       model_seed(config.seed, fold, g, table.target_names));
      const std::vector<std::size_t> val = plan.inner_validation(fold, g);
      const std::vector<PreparedMolecule> val_mols = take(molecules, val);
      total += scaled_score(predict_scaled(m, val_mols), m.scaler, select_rows(table.targets, val));
    }
    const double score = total / kInnerFolds;
    result.scores.push_back(score);
    if (score < best_score) {
      best_score = score;
      result.best = hp;
    }
  }
  return result;
}

json nested_cv(const DatasetTable& table, const CVConfig& config) { return NestedRun(table, config).run(); }

}  // namespace molfuse
