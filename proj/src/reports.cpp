#include "gapkit/reports.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "gapkit/errors.hpp"

namespace gapkit {
namespace {

std::string Fixed(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string Exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Left-aligned first column, right-aligned remaining columns.
std::string Align(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::string pad(width[i] - r[i].size(), ' ');
      if (i > 0) line += "  ";
      line += i == 0 ? r[i] + pad : pad + r[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

json VectorJson(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json Summary(const MeanStd& s) { return {{"mean", s.mean}, {"std", s.std}}; }

void RejectUnknown(const json& doc, const std::set<std::string>& known, const char* what) {
  if (!doc.is_object()) throw ValidationError(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (known.count(key) == 0) {
      throw ValidationError(std::string("unknown key '") + key + "' in " + what);
    }
  }
}

}  // namespace

std::string Dump(const json& doc) { return doc.dump(2) + "\n"; }

json ToJson(const GapReport& r, bool include_vector) {
  json j = {{"mean_paired_cos", r.mean_paired_cos},
            {"mean_unpaired_cos", r.mean_unpaired_cos},
            {"gap_norm", r.gap_norm},
            {"pairs_sampled", r.pairs_sampled}};
  if (include_vector) j["gap_vector"] = VectorJson(r.gap_vector);
  return j;
}

json ToJson(const PcaReport& r, bool include_components) {
  json j = {{"explained_variance", r.explained_variance},
            {"explained_ratio", r.explained_ratio},
            {"total_variance", r.total_variance},
            {"n_components", r.explained_variance.size()}};
  if (include_components) {
    json comps = json::array();
    for (Eigen::Index k = 0; k < r.components.rows(); ++k) {
      comps.push_back(VectorJson(r.components.row(k).transpose()));
    }
    j["components"] = comps;
    j["mean"] = VectorJson(r.mean);
  }
  return j;
}

json ToJson(const CorrelationReport& r) {
  json pairs = json::array();
  for (const auto& c : r.top) {
    pairs.push_back({{"feature_i", c.feature_i}, {"feature_j", c.feature_j},
                     {"pearson_r", c.pearson_r}});
  }
  return {{"pairs", pairs}, {"excluded_zero_variance", r.excluded}};
}

json ToJson(const std::vector<SensitivityRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"condition", r.condition.Name()},
                   {"magnitude", r.condition.magnitude},
                   {"runs", r.runs},
                   {"mean_metric", r.mean_metric},
                   {"std_metric", r.std_metric},
                   {"per_run", r.per_run}});
  }
  return {{"metric", "image_eval_acc"}, {"rows", out}};
}

json ToJson(const TransferReport& r) {
  json conds = json::array();
  for (const auto& c : r.conditions) {
    json cells = json::array();
    for (const auto& cell : c.cells) {
      cells.push_back({{"seed", cell.seed},
                       {"train_acc", cell.train_acc},
                       {"text_eval_acc", cell.text_eval_acc},
                       {"image_eval_acc", cell.image_eval_acc}});
    }
    conds.push_back({{"name", c.name},
                     {"cells", cells},
                     {"train_acc", Summary(c.train_acc)},
                     {"text_eval_acc", Summary(c.text_eval_acc)},
                     {"image_eval_acc", Summary(c.image_eval_acc)}});
  }
  return {{"seeds", r.seeds}, {"conditions", conds}};
}

json ToJson(const KeywordStats& s) {
  return {{"individual_rate", s.individual_rate},
          {"any_rate", s.any_rate},
          {"prompts", s.prompts},
          {"candidates", s.candidates}};
}

json ToJson(const ValidationReport& r) {
  json issues = json::array();
  for (const auto& i : r.issues) {
    json e = {{"kind", IssueKindName(i.kind)}, {"block", BlockName(i.block)},
              {"message", i.message}};
    e["row"] = i.row ? json(*i.row) : json(nullptr);
    issues.push_back(e);
  }
  return {{"valid", r.ok()}, {"issues", issues}};
}

json ToJson(const SyntheticCorpusSpec& s) {
  json noise;
  if (s.image_noise.kind == ImageNoiseSpec::Kind::kIsotropic) {
    noise = {{"kind", "isotropic"}, {"sd", s.image_noise.sd}};
  } else {
    noise = {{"kind", "low_rank"}, {"rank", s.image_noise.rank},
             {"sd_major", s.image_noise.sd_major}, {"sd_minor", s.image_noise.sd_minor}};
  }
  return {{"n_classes", s.n_classes},
          {"rows", s.rows},
          {"dim", s.dim},
          {"class_sep", s.class_sep},
          {"semantic_jitter_sd", s.semantic_jitter_sd},
          {"text_offset_norm", s.text_offset_norm},
          {"image_offset_norm", s.image_offset_norm},
          {"text_noise_sd", s.text_noise_sd},
          {"image_noise", noise},
          {"seed", s.seed}};
}

json ToJson(const TrainConfig& c) {
  return {{"optimizer", c.optimizer == Optimizer::kAdam ? "adam" : "sgd"},
          {"learning_rate", c.learning_rate},
          {"linear_decay", c.linear_decay},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps}};
}

SyntheticCorpusSpec SyntheticSpecFromJson(const json& doc) {
  RejectUnknown(doc,
                {"n_classes", "rows", "dim", "class_sep", "semantic_jitter_sd",
                 "text_offset_norm", "image_offset_norm", "text_noise_sd", "image_noise", "seed"},
                "corpus spec");
  SyntheticCorpusSpec s;
  try {
    s.n_classes = doc.value("n_classes", s.n_classes);
    s.rows = doc.value("rows", s.rows);
    s.dim = doc.value("dim", s.dim);
    s.class_sep = doc.value("class_sep", s.class_sep);
    s.semantic_jitter_sd = doc.value("semantic_jitter_sd", s.semantic_jitter_sd);
    s.text_offset_norm = doc.value("text_offset_norm", s.text_offset_norm);
    s.image_offset_norm = doc.value("image_offset_norm", s.image_offset_norm);
    s.text_noise_sd = doc.value("text_noise_sd", s.text_noise_sd);
    s.seed = doc.value("seed", s.seed);
    if (doc.contains("image_noise")) {
      const auto& n = doc["image_noise"];
      const auto kind = n.at("kind").get<std::string>();
      if (kind == "isotropic") {
        RejectUnknown(n, {"kind", "sd"}, "image_noise");
        s.image_noise = ImageNoiseSpec::Isotropic(n.at("sd").get<double>());
      } else if (kind == "low_rank") {
        RejectUnknown(n, {"kind", "rank", "sd_major", "sd_minor"}, "image_noise");
        s.image_noise = ImageNoiseSpec::LowRank(n.at("rank").get<std::size_t>(),
                                                n.at("sd_major").get<double>(),
                                                n.at("sd_minor").get<double>());
      } else {
        throw ValidationError("image_noise kind must be 'isotropic' or 'low_rank'");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed corpus spec: ") + e.what());
  }
  s.Validate();
  return s;
}

TrainConfig TrainConfigFromJson(const json& doc) {
  RejectUnknown(doc,
                {"optimizer", "learning_rate", "linear_decay", "batch_size", "epochs", "beta1",
                 "beta2", "adam_eps"},
                "train config");
  TrainConfig c;
  try {
    const auto opt = doc.value("optimizer", std::string("adam"));
    if (opt == "adam") {
      c.optimizer = Optimizer::kAdam;
    } else if (opt == "sgd") {
      c.optimizer = Optimizer::kSgd;
    } else {
      throw ValidationError("optimizer must be 'adam' or 'sgd'");
    }
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.linear_decay = doc.value("linear_decay", c.linear_decay);
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.epochs = doc.value("epochs", c.epochs);
    c.beta1 = doc.value("beta1", c.beta1);
    c.beta2 = doc.value("beta2", c.beta2);
    c.adam_eps = doc.value("adam_eps", c.adam_eps);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed train config: ") + e.what());
  }
  if (!(c.learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  json doc = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (doc.is_discarded()) throw ValidationError("'" + path.string() + "' is not valid JSON");
  RejectUnknown(doc, {"corpus", "train", "description"}, "experiment config");
  ExperimentConfig cfg;
  if (doc.contains("corpus")) cfg.corpus = SyntheticSpecFromJson(doc["corpus"]);
  if (doc.contains("train")) cfg.train = TrainConfigFromJson(doc["train"]);
  return cfg;
}

std::string GapTable(const GapReport& r) {
  return Align({{"statistic", "value"},
                {"mean_paired_cos", Fixed(r.mean_paired_cos, 6)},
                {"mean_unpaired_cos", Fixed(r.mean_unpaired_cos, 6)},
                {"gap_norm", Fixed(r.gap_norm, 6)},
                {"pairs_sampled", std::to_string(r.pairs_sampled)}});
}

std::string PcaTable(const PcaReport& r) {
  std::vector<std::vector<std::string>> rows = {{"component", "variance", "ratio", "cumulative"}};
  double cum = 0.0;
  for (std::size_t k = 0; k < r.explained_ratio.size(); ++k) {
    cum += r.explained_ratio[k];
    rows.push_back({std::to_string(k + 1), Fixed(r.explained_variance[k], 6),
                    Fixed(r.explained_ratio[k]), Fixed(cum)});
  }
  return Align(rows);
}

std::string CorrelationTable(const CorrelationReport& r) {
  std::vector<std::vector<std::string>> rows = {{"feature_i", "feature_j", "pearson_r"}};
  for (const auto& c : r.top) {
    rows.push_back({std::to_string(c.feature_i), std::to_string(c.feature_j),
                    Fixed(c.pearson_r)});
  }
  std::string out = Align(rows);
  if (!r.excluded.empty()) {
    out += "excluded (zero variance):";
    for (auto f : r.excluded) out += " " + std::to_string(f);
    out += "\n";
  }
  return out;
}

std::string SensitivityTable(const std::vector<SensitivityRow>& rows) {
  std::vector<std::vector<std::string>> t = {{"condition", "runs", "image_acc", "std"}};
  for (const auto& r : rows) {
    t.push_back({r.condition.Name(), std::to_string(r.runs), Fixed(100.0 * r.mean_metric, 2),
                 Fixed(100.0 * r.std_metric, 2)});
  }
  return Align(t);
}

std::string TransferTable(const TransferReport& r) {
  std::vector<std::vector<std::string>> t = {
      {"condition", "seeds", "train_acc", "text_acc", "image_acc", "image_std"}};
  for (const auto& c : r.conditions) {
    t.push_back({c.name, std::to_string(c.cells.size()), Fixed(100.0 * c.train_acc.mean, 2),
                 Fixed(100.0 * c.text_eval_acc.mean, 2), Fixed(100.0 * c.image_eval_acc.mean, 2),
                 Fixed(100.0 * c.image_eval_acc.std, 2)});
  }
  return Align(t);
}

std::string PcaCsv(const PcaReport& r) {
  std::string out = "component,explained_variance,explained_ratio,cumulative_ratio\n";
  double cum = 0.0;
  for (std::size_t k = 0; k < r.explained_ratio.size(); ++k) {
    cum += r.explained_ratio[k];
    out += std::to_string(k + 1) + "," + Exact(r.explained_variance[k]) + "," +
           Exact(r.explained_ratio[k]) + "," + Exact(cum) + "\n";
  }
  return out;
}

std::string TransferCsv(const TransferReport& r) {
  std::string out = "condition,seed,train_acc,text_eval_acc,image_eval_acc\n";
  for (const auto& c : r.conditions) {
    for (const auto& cell : c.cells) {
      out += "\"" + c.name + "\"," + std::to_string(cell.seed) + "," + Exact(cell.train_acc) +
             "," + Exact(cell.text_eval_acc) + "," + Exact(cell.image_eval_acc) + "\n";
    }
  }
  return out;
}

}  // namespace gapkit
