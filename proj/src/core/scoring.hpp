#ifndef DDSEL_SCORING_HPP
#define DDSEL_SCORING_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/ngram_lm.hpp"

namespace ddsel {

// Four per-side cross-entropies (nats/token) and their bilingual difference:
// ced = (h_if - h_gf) + (h_ie - h_ge).
struct CedRecord {
  std::uint64_t pair_id = 0;
  double h_if = 0, h_gf = 0, h_ie = 0, h_ge = 0;
  double ced = 0;
};

enum class RankingOrigin { kRelevance, kRandom, kImported };

struct Ranking {
  std::vector<std::uint64_t> pair_ids;  // best first
  RankingOrigin origin = RankingOrigin::kRelevance;
  std::optional<std::uint64_t> seed;
};

// One record per pair, in corpus order. Parallelized over pairs; output is
// identical for any worker count. Throws DataError on an empty corpus.
std::vector<CedRecord> compute_ced(const Corpus& bitext, const NGramLM& lm_if,
                                   const NGramLM& lm_gf, const NGramLM& lm_ie,
                                   const NGramLM& lm_ge, unsigned workers = 1);

// Ascending by ced, ties broken by ascending pair_id.
Ranking rank_bitext(const std::vector<CedRecord>& records);

// Seeded uniform permutation of the corpus's pair ids.
Ranking random_ranking(const Corpus& bitext, std::uint64_t seed);

// Scores TSV: header pair_id\th_if\th_gf\th_ie\th_ge\tced, full precision.
void save_scores_tsv(const std::vector<CedRecord>& records, const std::string& path);

// Validates that the file covers exactly the corpus's pair ids and that each
// stored ced agrees with its four entropies within 1e-6.
std::vector<CedRecord> import_external_scores(const std::string& path, const Corpus& bitext);

// Ranking file: "# origin=<tag> seed=<n|none>" then one pair id per line.
void save_ranking(const Ranking& ranking, const std::string& path);
Ranking load_ranking(const std::string& path);

}  // namespace ddsel

#endif
