#include "gapkit/promptgen.hpp"

#include <algorithm>
#include <numeric>

#include "gapkit/errors.hpp"

namespace gapkit {
namespace {

bool IsWordByte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c >= 0x80;
}

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace

const WordSet& DefaultStopwords() {
  static const WordSet kWords = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your",
      "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "her",
      "hers", "herself", "it", "its", "itself", "they", "them", "their", "theirs",
      "themselves", "what", "which", "who", "whom", "this", "that", "these", "those",
      "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had",
      "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if",
      "or", "because", "as", "until", "while", "of", "at", "by", "for", "with",
      "about", "against", "between", "into", "through", "during", "before", "after",
      "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
      "under", "again", "further", "then", "once", "here", "there", "when", "where",
      "why", "how", "all", "any", "both", "each", "few", "more", "most", "other",
      "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than", "too",
      "very", "s", "t", "can", "will", "just", "don", "should", "now"};
  return kWords;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (IsWordByte(c)) {
      cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

WordSet TokenSet(std::string_view text) {
  auto tokens = Tokenize(text);
  return WordSet(std::make_move_iterator(tokens.begin()), std::make_move_iterator(tokens.end()));
}

bool ContainsKeywords(std::string_view text, const std::vector<std::string>& keywords) {
  const WordSet tokens = TokenSet(text);
  return std::all_of(keywords.begin(), keywords.end(),
                     [&](const std::string& k) { return tokens.count(Lower(k)) > 0; });
}

UnigramSampler::UnigramSampler(WordCounts target_counts, std::uint64_t rng_seed)
    : target_(std::move(target_counts)), seed_(rng_seed), rng_(rng_seed) {
  for (const auto& [w, c] : target_) target_total_ += c;
  if (target_.empty() || target_total_ == 0) {
    throw ValidationError("target vocabulary is empty");
  }
}

void UnigramSampler::SetGeneratedCount(const std::string& word, std::uint64_t count) {
  auto& slot = generated_[word];
  total_generated_ = total_generated_ - slot + count;
  slot = count;
}

double UnigramSampler::TargetShare(std::string_view word) const {
  auto it = target_.find(word);
  if (it == target_.end()) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(target_total_);
}

double UnigramSampler::Deficit(std::string_view word, std::size_t k) const {
  const double expected =
      TargetShare(word) * static_cast<double>(total_generated_ + k);
  auto it = generated_.find(word);
  const double have = it == generated_.end() ? 0.0 : static_cast<double>(it->second);
  return std::max(0.0, expected - have);
}

std::vector<std::string> UnigramSampler::Sample(std::size_t k) {
  if (k < 1) throw ParameterError("k must be >= 1");
  std::vector<const std::string*> words;
  std::vector<double> weights;
  for (const auto& [w, c] : target_) {
    const double d = Deficit(w, k);
    if (d > 0.0) {
      words.push_back(&w);
      weights.push_back(d);
    }
  }
  if (words.size() < k) {
    throw ExhaustionError("only " + std::to_string(words.size()) +
                          " under-represented words available, need " + std::to_string(k));
  }

  std::vector<std::string> out;
  for (std::size_t draw = 0; draw < k; ++draw) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    const double u = rng_.Uniform() * total;
    double acc = 0.0;
    std::size_t pick = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      acc += weights[i];
      pick = i;  // last positive-weight entry absorbs rounding at the top end
      if (u < acc) break;
    }
    out.push_back(*words[pick]);
    weights[pick] = 0.0;
  }
  for (const auto& w : out) {
    ++generated_[w];
    ++total_generated_;
  }
  return out;
}

UnigramSampler BuildTargetDistribution(const std::vector<std::string>& captions,
                                       const WordSet& stopwords, std::uint64_t rng_seed) {
  if (captions.empty()) throw ValidationError("no reference captions given");
  WordCounts counts;
  for (const auto& c : captions) {
    for (auto& tok : Tokenize(c)) {
      if (stopwords.count(tok) == 0) ++counts[tok];
    }
  }
  if (counts.empty()) {
    throw ValidationError("vocabulary is empty after stopword removal");
  }
  return UnigramSampler(std::move(counts), rng_seed);
}

std::vector<std::string> SampleKeywords(UnigramSampler& sampler, std::size_t k) {
  return sampler.Sample(k);
}

void ValidatePromptSpec(const PromptSpec& spec) {
  for (const auto& k : spec.target_keywords) {
    if (Tokenize(k).size() != 1) {
      throw ValidationError("target keyword '" + k + "' must be a single token");
    }
  }
  for (std::size_t i = 0; i < spec.examples.size(); ++i) {
    const auto& ex = spec.examples[i];
    for (const auto& k : ex.keywords) {
      if (k.empty() || !ContainsKeywords(ex.caption, {k})) {
        throw ValidationError("example " + std::to_string(i) + " caption does not contain keyword '" +
                                  k + "'",
                              i);
      }
    }
  }
}

std::string BuildPrompt(const PromptSpec& spec, Rng& rng) {
  ValidatePromptSpec(spec);
  std::vector<std::size_t> order(spec.examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.UniformInt(i)]);
  }
  std::string out = spec.instruction;
  for (std::size_t idx : order) {
    const auto& ex = spec.examples[idx];
    out += '\n';
    out += ex.keywords[0] + ", " + ex.keywords[1] + ": " + ex.caption;
  }
  out += '\n';
  out += spec.target_keywords[0] + ", " + spec.target_keywords[1] + ":";
  return out;
}

std::array<std::string, 2> ChooseExampleKeywords(std::string_view caption,
                                                 const WordSet& stopwords, Rng& rng) {
  std::vector<std::string> pool;
  for (const auto& tok : TokenSet(caption)) {
    if (stopwords.count(tok) == 0) pool.push_back(tok);
  }
  if (pool.size() < 2) {
    throw ValidationError("caption has fewer than two distinct non-stopword tokens: '" +
                          std::string(caption) + "'");
  }
  const std::size_t a = rng.UniformInt(pool.size());
  std::size_t b = rng.UniformInt(pool.size() - 1);
  if (b >= a) ++b;
  return {pool[a], pool[b]};
}

std::vector<bool> KeywordHits(const std::vector<std::string>& candidates,
                              const std::vector<std::string>& keywords) {
  std::vector<bool> hits;
  hits.reserve(candidates.size());
  for (const auto& c : candidates) hits.push_back(ContainsKeywords(c, keywords));
  return hits;
}

FilterResult FilterCandidates(const std::vector<std::string>& candidates,
                              const std::vector<std::string>& keywords, Rng& rng) {
  if (candidates.empty()) throw ParameterError("no candidates to choose from");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (ContainsKeywords(candidates[i], keywords)) return {candidates[i], i, true};
  }
  const std::size_t i = rng.UniformInt(candidates.size());
  return {candidates[i], i, false};
}

KeywordStats KeywordSuccessStats(const std::vector<std::vector<bool>>& results) {
  if (results.empty()) throw ParameterError("no prompts to summarize");
  KeywordStats s;
  std::size_t hits = 0, any = 0;
  for (const auto& prompt : results) {
    s.candidates += prompt.size();
    const auto h = static_cast<std::size_t>(std::count(prompt.begin(), prompt.end(), true));
    hits += h;
    any += h > 0;
  }
  s.prompts = results.size();
  s.individual_rate = s.candidates ? static_cast<double>(hits) / static_cast<double>(s.candidates) : 0.0;
  s.any_rate = static_cast<double>(any) / static_cast<double>(s.prompts);
  return s;
}

}  // namespace gapkit
