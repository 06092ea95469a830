#ifndef DDSEL_CORPUS_HPP
#define DDSEL_CORPUS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace ddsel {

// One aligned sentence pair. The id is the 0-based line index in the original
// bitext and survives every downstream filter, so manifests always reference
// the original files.
struct SentencePair {
  std::uint64_t id = 0;
  std::vector<std::string> source;
  std::vector<std::string> target;

  std::size_t source_len() const { return source.size(); }
  std::size_t target_len() const { return target.size(); }
};

// Immutable after construction; safe to share across threads for reads.
struct Corpus {
  std::string name;
  std::vector<SentencePair> pairs;  // ascending by id
  std::uint64_t total_source_tokens = 0;
  std::uint64_t total_target_tokens = 0;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }

  // Recompute token totals from the pairs (used after any construction).
  void refresh_totals();
};

// Reads two aligned one-sentence-per-line UTF-8 files, whitespace-tokenized.
// Throws DataError on line-count mismatch (naming both counts) and IoError on
// unreadable files or invalid UTF-8.
Corpus load_parallel(const std::string& source_path, const std::string& target_path,
                     const std::string& name = "");

// Lowercases (ASCII range; multi-byte sequences pass through) and drops pairs
// where either side exceeds max_len tokens or is empty. Retained pairs keep
// their original ids. Idempotent.
Corpus preprocess(const Corpus& corpus, std::size_t max_len = 50, bool lowercase = true);

// Seeded Fisher-Yates shuffle followed by a greedy prefix-take: pairs are
// accepted in shuffled order while cumulative source tokens stay within the
// budget; the first pair that would exceed it stops the take. Output is
// re-sorted ascending by id.
Corpus sample_general_subset(const Corpus& corpus, std::uint64_t target_size_tokens,
                             std::uint64_t seed);

// Writes source/target text plus a sidecar id list (one original id per line).
// Pass an empty ids_path to skip the sidecar.
void write_corpus(const Corpus& corpus, const std::string& source_path,
                  const std::string& target_path, const std::string& ids_path = "");

}  // namespace ddsel

#endif
