#pragma once

// Keyword-conditioned caption prompts: a unigram-matching keyword sampler,
// prompt assembly from keyword-prefixed examples, selection among generated
// candidates, and keyword success statistics. Text generation itself happens
// elsewhere; this module only produces prompts and consumes candidates.

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gapkit/rng.hpp"

namespace gapkit {

using WordSet = std::set<std::string, std::less<>>;
using WordCounts = std::map<std::string, std::uint64_t, std::less<>>;

// The 127-word English stopword list shipped with the toolkit.
const WordSet& DefaultStopwords();

// Lowercases ASCII letters and splits on every byte that is not an ASCII
// letter or digit. Bytes >= 0x80 are kept inside words so UTF-8 text is not
// torn apart. Empty tokens are dropped.
std::vector<std::string> Tokenize(std::string_view text);

// Lowercased token set of `text` (no stopword removal).
WordSet TokenSet(std::string_view text);

// True when every keyword (lowercased) is a token of `text`. Exact token
// equality: "hydrants" does not match "hydrant".
bool ContainsKeywords(std::string_view text, const std::vector<std::string>& keywords);

// Draws keywords with probability proportional to how far each word's
// generated count lags its share of the target distribution:
//
//   deficit(w) = max(0, share(w) * (sum(generated) + k) - generated(w))
//
// where share(w) = target(w) / sum(target). Words with zero deficit are never
// drawn.
class UnigramSampler {
 public:
  UnigramSampler(WordCounts target_counts, std::uint64_t rng_seed);

  const WordCounts& target_counts() const noexcept { return target_; }
  const WordCounts& generated_counts() const noexcept { return generated_; }
  std::uint64_t rng_seed() const noexcept { return seed_; }
  std::uint64_t total_generated() const noexcept { return total_generated_; }

  // Overrides the running tally for one word (resuming a run, tests).
  void SetGeneratedCount(const std::string& word, std::uint64_t count);

  double TargetShare(std::string_view word) const;
  double Deficit(std::string_view word, std::size_t k) const;

  // k distinct words, drawn sequentially without replacement in proportion to
  // deficit; the tally is updated with the drawn words. Throws ExhaustionError
  // when fewer than k words have a positive deficit.
  std::vector<std::string> Sample(std::size_t k);

 private:
  WordCounts target_;
  WordCounts generated_;
  std::uint64_t target_total_ = 0;
  std::uint64_t total_generated_ = 0;
  std::uint64_t seed_;
  Rng rng_;
};

// Tallies non-stopword tokens of `captions`. Throws ValidationError when the
// vocabulary is empty after filtering.
UnigramSampler BuildTargetDistribution(const std::vector<std::string>& captions,
                                       const WordSet& stopwords, std::uint64_t rng_seed);

std::vector<std::string> SampleKeywords(UnigramSampler& sampler, std::size_t k);

struct PromptExample {
  std::array<std::string, 2> keywords;
  std::string caption;
};

struct PromptSpec {
  std::string instruction;
  std::vector<PromptExample> examples;
  std::array<std::string, 2> target_keywords;
};

inline constexpr std::string_view kDefaultInstruction =
    "Write a short caption describing an image that uses both keywords.";

// Throws ValidationError when an example caption lacks one of its keywords
// or a keyword is empty.
void ValidatePromptSpec(const PromptSpec& spec);

// instruction, the examples in Fisher-Yates shuffled order as
// "<kw1>, <kw2>: <caption>" lines, then "<t1>, <t2>:". Lines are joined with
// '\n' and there is no trailing newline.
std::string BuildPrompt(const PromptSpec& spec, Rng& rng);

// Two distinct non-stopword tokens of `caption`, chosen uniformly.
std::array<std::string, 2> ChooseExampleKeywords(std::string_view caption,
                                                 const WordSet& stopwords, Rng& rng);

struct FilterResult {
  std::string chosen;
  std::size_t index = 0;
  bool contains_keywords = false;
};

// The first candidate containing every keyword, else a uniformly random one.
// The stream is only consumed on the fallback branch.
FilterResult FilterCandidates(const std::vector<std::string>& candidates,
                              const std::vector<std::string>& keywords, Rng& rng);

std::vector<bool> KeywordHits(const std::vector<std::string>& candidates,
                              const std::vector<std::string>& keywords);

struct KeywordStats {
  double individual_rate = 0.0;  // share of all candidates containing the keywords
  double any_rate = 0.0;         // share of prompts with at least one such candidate
  std::size_t prompts = 0;
  std::size_t candidates = 0;
};

KeywordStats KeywordSuccessStats(const std::vector<std::vector<bool>>& results);

}  // namespace gapkit
