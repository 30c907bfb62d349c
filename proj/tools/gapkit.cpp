// gapkit: command-line front end.
//
// Exit codes: 0 success, 1 environment / I/O failure, 2 usage or validation
// error. Every stochastic subcommand takes --seed; internal streams are
// derived from it with DeriveSeed(seed, label).

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gapkit/adapter_io.hpp"
#include "gapkit/analysis.hpp"
#include "gapkit/conditions.hpp"
#include "gapkit/errors.hpp"
#include "gapkit/geometry.hpp"
#include "gapkit/promptgen.hpp"
#include "gapkit/reports.hpp"
#include "gapkit/transferlab.hpp"

namespace {

using namespace gapkit;

void Emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    WriteFileAtomic(out_path, text);
  }
}

std::vector<std::uint64_t> ParseSeedList(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(part, &used));
      if (used != part.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParameterError("bad seed '" + part + "' in --seeds");
    }
  }
  if (seeds.empty()) throw ParameterError("--seeds needs at least one seed");
  return seeds;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) out.push_back(part);
  return out;
}

std::vector<std::string> ReadLines(const std::string& path) {
  const auto bytes = ReadFileBytes(path);
  std::vector<std::string> lines;
  std::string cur;
  for (auto b : bytes) {
    if (b == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      if (!cur.empty()) lines.push_back(cur);
      cur.clear();
    } else {
      cur += static_cast<char>(b);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

std::vector<json> ReadJsonl(const std::string& path) {
  std::vector<json> docs;
  std::size_t line_no = 0;
  for (const auto& line : ReadLines(path)) {
    ++line_no;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": not a JSON object");
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

// Rows of the corpus restricted to one split of the seeded 80/10/10 shuffle.
PairedCorpus SelectSplit(const PairedCorpus& corpus, const std::string& split,
                         std::uint64_t split_seed) {
  if (split == "all") return corpus;
  const auto s = SplitRows(corpus.rows(), split_seed);
  if (split == "train") return corpus.Select(s.train);
  if (split == "val") return corpus.Select(s.val);
  if (split == "test") return corpus.Select(s.test);
  throw ParameterError("--split must be all, train, val or test");
}

// --corpus wins; otherwise the corpus described by --config is synthesized.
PairedCorpus CorpusFromFlags(const std::string& corpus_path, const std::string& config_path) {
  if (!corpus_path.empty()) return LoadCorpus(corpus_path);
  if (!config_path.empty()) return GenerateSyntheticCorpus(LoadExperimentConfig(config_path).corpus);
  throw ParameterError("either --corpus or --config is required");
}

TrainConfig TrainFromFlags(const std::string& config_path) {
  if (config_path.empty()) return TrainConfig{};
  return LoadExperimentConfig(config_path).train;
}

std::map<std::string, std::vector<std::string>> KeywordsByPrompt(const std::string& path) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& doc : ReadJsonl(path)) {
    if (!doc.contains("prompt_id") || !doc.contains("keywords")) {
      throw ValidationError(path + ": each line needs prompt_id and keywords");
    }
    out[doc["prompt_id"].dump()] = doc["keywords"].get<std::vector<std::string>>();
  }
  return out;
}

struct CandidateRecord {
  json prompt_id;
  std::vector<std::string> candidates;
  std::vector<std::string> keywords;
};

std::vector<CandidateRecord> JoinCandidates(const std::string& prompts_path,
                                            const std::string& candidates_path) {
  const auto keywords = KeywordsByPrompt(prompts_path);
  std::vector<CandidateRecord> out;
  for (const auto& doc : ReadJsonl(candidates_path)) {
    if (!doc.contains("prompt_id") || !doc.contains("candidates")) {
      throw ValidationError(candidates_path + ": each line needs prompt_id and candidates");
    }
    auto it = keywords.find(doc["prompt_id"].dump());
    if (it == keywords.end()) {
      throw ValidationError("candidates reference unknown prompt_id " + doc["prompt_id"].dump());
    }
    out.push_back({doc["prompt_id"], doc["candidates"].get<std::vector<std::string>>(), it->second});
  }
  return out;
}

WordSet StopwordsFromFlags(const std::string& path, bool none) {
  if (none) return {};
  if (path.empty()) return DefaultStopwords();
  WordSet words;
  for (const auto& line : ReadLines(path)) {
    for (auto& tok : Tokenize(line)) words.insert(tok);
  }
  return words;
}

int Run(int argc, char** argv) {
  CLI::App app{"gapkit: modality-gap measurement and adaptation toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  std::string corpus_path, config_path, out_path, format = "json";
  std::uint64_t seed = 0;
  auto add_format = [&](CLI::App* cmd, std::vector<std::string> allowed) {
    cmd->add_option("--format", format, "Report format")->check(CLI::IsMember(allowed));
  };
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Seed for every internal random stream")->required();
  };

  // validate
  auto* validate = app.add_subcommand("validate", "Check every corpus invariant");
  validate->add_option("--corpus", corpus_path, "Corpus file")->required();
  validate->add_option("--out", out_path, "Write the report here instead of stdout");

  // gap-stats
  std::size_t samples = kDefaultUnpairedSamples;
  bool with_vector = false;
  auto* gap = app.add_subcommand("gap-stats", "Paired vs unpaired cosine and the gap vector");
  gap->add_option("--corpus", corpus_path, "Corpus file")->required();
  gap->add_option("--samples", samples, "Unpaired pairs to sample")->capture_default_str();
  gap->add_flag("--vector", with_vector, "Include the gap vector");
  gap->add_option("--out", out_path, "Output file");
  add_seed(gap);
  add_format(gap, {"json", "table"});

  // recall
  std::size_t recall_k = 1;
  std::string adapter_path;
  double noise_w = -1.0;
  auto* recall = app.add_subcommand("recall", "Text-to-image retrieval recall@k");
  recall->add_option("--corpus", corpus_path, "Corpus file")->required();
  recall->add_option("--k", recall_k, "k")->capture_default_str();
  recall->add_option("--adapter", adapter_path, "Adapter or pipeline JSON applied to text rows");
  recall->add_option("--out", out_path, "Output file");
  add_seed(recall);

  // fit-adapter
  std::string kind;
  double lambda = kDefaultRidgeLambda, jitter = kDefaultCholeskyJitter, scale = 1.0, magnitude = 1.0;
  auto* fit = app.add_subcommand("fit-adapter", "Fit an adapter and write it as JSON");
  fit->add_option("--kind", kind, "Adapter kind")
      ->required()
      ->check(CLI::IsMember({"mean_shift", "neg_mean_shift", "linear", "cov_noise", "random_shift",
                             "noise"}));
  fit->add_option("--corpus", corpus_path, "Corpus file (not needed for noise / random_shift)");
  fit->add_option("--lambda", lambda, "Ridge lambda (linear)")->capture_default_str();
  fit->add_option("--jitter", jitter, "Diagonal jitter (cov_noise)")->capture_default_str();
  fit->add_option("--scale", scale, "Noise scale (cov_noise)")->capture_default_str();
  fit->add_option("--magnitude", magnitude, "Shift magnitude (random_shift)")->capture_default_str();
  fit->add_option("--w", noise_w, "Noise level (noise)");
  std::size_t fit_dim = 0;
  fit->add_option("--dim", fit_dim, "Dimension (random_shift without --corpus)");
  fit->add_option("--seed", seed, "Seed (random_shift)");
  fit->add_option("--out", out_path, "Adapter JSON output")->required();

  // apply
  auto* apply = app.add_subcommand("apply", "Apply an adapter to the text side of a corpus");
  apply->add_option("--corpus", corpus_path, "Input corpus")->required();
  apply->add_option("--adapter", adapter_path, "Adapter or pipeline JSON");
  apply->add_option("--noise", noise_w, "Append Gaussian noise with this w");
  apply->add_option("--out", out_path, "Output corpus")->required();
  add_seed(apply);

  // pca / correlations
  std::size_t components = 8, top = 20;
  std::string split = "all";
  std::uint64_t split_seed = 0;
  bool with_components = false;
  auto* pca = app.add_subcommand("pca", "PCA of centered difference vectors");
  pca->add_option("--corpus", corpus_path, "Corpus file")->required();
  pca->add_option("--components", components, "Number of components")->capture_default_str();
  pca->add_option("--split", split, "Rows to analyze: all, train, val, test")->capture_default_str();
  pca->add_option("--split-seed", split_seed, "Seed of the 80/10/10 split");
  pca->add_flag("--with-components", with_components, "Include component vectors in JSON");
  pca->add_option("--out", out_path, "Output file");
  add_format(pca, {"json", "table", "csv"});

  auto* corr = app.add_subcommand("correlations", "Strongest Pearson correlations between difference features");
  corr->add_option("--corpus", corpus_path, "Corpus file")->required();
  corr->add_option("--top", top, "Pairs to report")->capture_default_str();
  corr->add_option("--split", split, "Rows to analyze: all, train, val, test")->capture_default_str();
  corr->add_option("--split-seed", split_seed, "Seed of the 80/10/10 split");
  corr->add_option("--out", out_path, "Output file");
  add_format(corr, {"json", "table"});

  // sensitivity
  std::string conditions = "none,rng:0.5,rng:1,rng:2,mean,neg_mean";
  std::size_t runs = 3;
  double sweep_noise = kDefaultNoiseW;
  auto* sens = app.add_subcommand("sensitivity", "Constant-shift sensitivity sweep");
  sens->add_option("--corpus", corpus_path, "Labelled corpus (else synthesized from --config)");
  sens->add_option("--config", config_path, "Experiment config (corpus spec and training)");
  sens->add_option("--conditions", conditions, "none, rng:<m>, mean, neg_mean")->capture_default_str();
  sens->add_option("--noise", sweep_noise, "Gaussian noise added in every condition")->capture_default_str();
  sens->add_option("--runs", runs, "Runs per condition")->capture_default_str();
  sens->add_option("--out", out_path, "Output file");
  add_seed(sens);
  add_format(sens, {"json", "table"});

  // synth
  std::string spec_path;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with a planted gap");
  synth->add_option("--spec", spec_path, "Corpus spec or experiment config JSON")->required();
  synth->add_option("--out", out_path, "Corpus output")->required();
  add_seed(synth);

  // transfer
  std::string transfer_conditions = "none,noise:0.08";
  std::string seeds_text;
  auto* transfer = app.add_subcommand("transfer", "Train on text, evaluate on text and images");
  transfer->add_option("--corpus", corpus_path, "Labelled corpus (else synthesized from --config)");
  transfer->add_option("--config", config_path, "Experiment config (corpus spec and training)");
  transfer->add_option("--conditions", transfer_conditions, "Comma-separated conditions")
      ->capture_default_str();
  transfer->add_option("--seeds", seeds_text, "Comma-separated seeds")->required();
  transfer->add_option("--out", out_path, "Output file");
  add_format(transfer, {"json", "table", "csv"});

  // prompt tooling
  std::string captions_path, stopwords_path, prompts_path, candidates_path;
  std::string instruction(kDefaultInstruction);
  std::size_t n_prompts = 10, n_examples = 5;
  bool no_stopwords = false;
  auto* pbuild = app.add_subcommand("prompt-build", "Keyword-conditioned caption prompts as JSONL");
  pbuild->add_option("--captions", captions_path, "Reference captions, one per line")->required();
  pbuild->add_option("--n", n_prompts, "Number of prompts")->capture_default_str();
  pbuild->add_option("--examples", n_examples, "In-context examples per prompt")->capture_default_str();
  pbuild->add_option("--instruction", instruction, "First prompt line");
  pbuild->add_option("--stopwords", stopwords_path, "Stopword file (default: built-in list)");
  pbuild->add_flag("--no-stopwords", no_stopwords, "Disable stopword removal");
  pbuild->add_option("--out", out_path, "Output JSONL");
  add_seed(pbuild);

  auto* pfilter = app.add_subcommand("prompt-filter", "Pick one caption per prompt from its candidates");
  pfilter->add_option("--prompts", prompts_path, "Prompt JSONL")->required();
  pfilter->add_option("--candidates", candidates_path, "Candidate JSONL")->required();
  pfilter->add_option("--out", out_path, "Output JSONL");
  add_seed(pfilter);

  auto* kstats = app.add_subcommand("keyword-stats", "How often candidates contain their keywords");
  kstats->add_option("--prompts", prompts_path, "Prompt JSONL")->required();
  kstats->add_option("--candidates", candidates_path, "Candidate JSONL")->required();
  kstats->add_option("--out", out_path, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (validate->parsed()) {
    const PairedCorpus c = LoadCorpus(corpus_path, DecodeOptions{.validate = false});
    const ValidationReport report = ValidateCorpus(c);
    Emit(Dump(ToJson(report)), out_path);
    return report.ok() ? 0 : 2;
  }

  if (gap->parsed()) {
    const GapReport r = GapStats(LoadCorpus(corpus_path), samples, seed);
    Emit(format == "table" ? GapTable(r) : Dump(ToJson(r, with_vector)), out_path);
    return 0;
  }

  if (recall->parsed()) {
    const PairedCorpus c = LoadCorpus(corpus_path);
    std::optional<AdapterPipeline> p;
    if (!adapter_path.empty()) p = LoadPipeline(adapter_path);
    const double r = RetrievalRecallAtK(c, recall_k, p ? &*p : nullptr, seed);
    Emit(Dump({{"k", recall_k}, {"recall_at_k", r}, {"rows", c.rows()}}), out_path);
    return 0;
  }

  if (fit->parsed()) {
    Adapter a;
    if (kind == "noise") {
      if (noise_w < 0.0) throw ParameterError("--w is required for kind=noise");
      a = GaussianNoise{noise_w};
    } else if (kind == "random_shift") {
      std::size_t dim = fit_dim;
      if (!corpus_path.empty()) dim = LoadCorpus(corpus_path).dim();
      if (dim == 0) throw ParameterError("random_shift needs --corpus or --dim");
      if (fit->count("--seed") == 0) throw ParameterError("random_shift needs --seed");
      Rng rng(DeriveSeed(seed, "fit-adapter/random_shift"));
      a = RandomShift(dim, magnitude, rng);
    } else {
      if (corpus_path.empty()) throw ParameterError("--corpus is required for kind=" + kind);
      const PairedCorpus c = LoadCorpus(corpus_path);
      if (kind == "mean_shift") {
        a = FitMeanShift(c);
      } else if (kind == "neg_mean_shift") {
        ConstantShift s = FitMeanShift(c);
        s.shift = -s.shift;
        a = s;
      } else if (kind == "linear") {
        a = FitLinear(c, lambda);
      } else {
        a = FitCovarianceNoise(c, jitter, scale);
      }
    }
    Emit(Dump(AdapterToJson(a)), out_path);
    return 0;
  }

  if (apply->parsed()) {
    PairedCorpus c = LoadCorpus(corpus_path);
    AdapterPipeline p;
    if (!adapter_path.empty()) p = LoadPipeline(adapter_path);
    if (noise_w >= 0.0) p.steps.push_back(GaussianNoise{noise_w});
    if (p.steps.empty()) throw ParameterError("apply needs --adapter and/or --noise");
    Rng rng(DeriveSeed(seed, "apply"));
    c.text = EmbeddingMatrix::FromF64(ApplyPipelineRows(c.text.ToF64(), p, rng));
    SaveCorpus(c, out_path);
    return 0;
  }

  if (pca->parsed()) {
    const PairedCorpus c = SelectSplit(LoadCorpus(corpus_path), split, split_seed);
    const PcaReport r = DiffPca(c, components);
    if (format == "table") {
      Emit(PcaTable(r), out_path);
    } else if (format == "csv") {
      Emit(PcaCsv(r), out_path);
    } else {
      Emit(Dump(ToJson(r, with_components)), out_path);
    }
    return 0;
  }

  if (corr->parsed()) {
    const PairedCorpus c = SelectSplit(LoadCorpus(corpus_path), split, split_seed);
    const CorrelationReport r = FeatureCorrelations(c, top);
    Emit(format == "table" ? CorrelationTable(r) : Dump(ToJson(r)), out_path);
    return 0;
  }

  if (sens->parsed()) {
    const PairedCorpus c = CorpusFromFlags(corpus_path, config_path);
    const TrainConfig hyper = TrainFromFlags(config_path);
    std::vector<ShiftCondition> conds;
    for (const auto& s : SplitList(conditions)) conds.push_back(ShiftCondition::Parse(s));
    const auto rows = SensitivitySweep(c, conds, sweep_noise, runs, seed, hyper);
    Emit(format == "table" ? SensitivityTable(rows) : Dump(ToJson(rows)), out_path);
    return 0;
  }

  if (synth->parsed()) {
    const auto bytes = ReadFileBytes(spec_path);
    json doc = json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (doc.is_discarded()) throw ValidationError("'" + spec_path + "' is not valid JSON");
    SyntheticCorpusSpec spec = doc.contains("corpus") ? LoadExperimentConfig(spec_path).corpus
                                                      : SyntheticSpecFromJson(doc);
    spec.seed = seed;
    const PairedCorpus c = GenerateSyntheticCorpus(spec);
    SaveCorpus(c, out_path);
    WriteSidecar(out_path, Dump({{"source", "gapkit synth"}, {"spec", ToJson(spec)}}));
    return 0;
  }

  if (transfer->parsed()) {
    const PairedCorpus c = CorpusFromFlags(corpus_path, config_path);
    const TrainConfig hyper = TrainFromFlags(config_path);
    const auto conds = ParseConditionList(transfer_conditions);
    const auto seeds = ParseSeedList(seeds_text);
    const TransferReport r = CrossModalExperiment(c, conds, hyper, seeds);
    if (format == "table") {
      Emit(TransferTable(r), out_path);
    } else if (format == "csv") {
      Emit(TransferCsv(r), out_path);
    } else {
      json doc = ToJson(r);
      doc["train"] = ToJson(hyper);
      Emit(Dump(doc), out_path);
    }
    return 0;
  }

  if (pbuild->parsed()) {
    const auto captions = ReadLines(captions_path);
    const WordSet stop = StopwordsFromFlags(stopwords_path, no_stopwords);
    UnigramSampler sampler =
        BuildTargetDistribution(captions, stop, DeriveSeed(seed, "prompt-build/keywords"));
    Rng example_rng(DeriveSeed(seed, "prompt-build/examples"));
    Rng shuffle_rng(DeriveSeed(seed, "prompt-build/shuffle"));

    // Captions usable as in-context examples (two distinct content words).
    std::vector<std::string> pool;
    for (const auto& cap : captions) {
      std::size_t content = 0;
      for (const auto& tok : TokenSet(cap)) content += stop.count(tok) == 0;
      if (content >= 2) pool.push_back(cap);
    }
    if (pool.size() < n_examples) {
      throw ValidationError("only " + std::to_string(pool.size()) +
                            " captions usable as examples, need " + std::to_string(n_examples));
    }

    std::string out;
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t p = 0; p < n_prompts; ++p) {
      const auto kw = SampleKeywords(sampler, 2);
      PromptSpec spec;
      spec.instruction = instruction;
      spec.target_keywords = {kw[0], kw[1]};
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      for (std::size_t e = 0; e < n_examples; ++e) {
        const std::size_t j = e + example_rng.UniformInt(idx.size() - e);
        std::swap(idx[e], idx[j]);
        const auto& cap = pool[idx[e]];
        spec.examples.push_back({ChooseExampleKeywords(cap, stop, example_rng), cap});
      }
      json line = {{"prompt_id", p}, {"keywords", kw}, {"prompt_text", BuildPrompt(spec, shuffle_rng)}};
      out += line.dump() + "\n";
    }
    Emit(out, out_path);
    return 0;
  }

  if (pfilter->parsed()) {
    Rng rng(DeriveSeed(seed, "prompt-filter"));
    std::string out;
    for (const auto& rec : JoinCandidates(prompts_path, candidates_path)) {
      const FilterResult r = FilterCandidates(rec.candidates, rec.keywords, rng);
      json line = {{"prompt_id", rec.prompt_id},
                   {"chosen", r.chosen},
                   {"index", r.index},
                   {"contains_keywords", r.contains_keywords},
                   {"hits", KeywordHits(rec.candidates, rec.keywords)}};
      out += line.dump() + "\n";
    }
    Emit(out, out_path);
    return 0;
  }

  if (kstats->parsed()) {
    std::vector<std::vector<bool>> results;
    for (const auto& rec : JoinCandidates(prompts_path, candidates_path)) {
      results.push_back(KeywordHits(rec.candidates, rec.keywords));
    }
    Emit(Dump(ToJson(KeywordSuccessStats(results))), out_path);
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Run(argc, argv);
  } catch (const gapkit::Error& e) {
    std::cerr << "gapkit: " << e.what() << "\n";
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "gapkit: malformed JSON input: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "gapkit: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "gapkit: " << e.what() << "\n";
    return 1;
  }
}
