#ifndef DDSEL_NGRAM_LM_HPP
#define DDSEL_NGRAM_LM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/corpus.hpp"

namespace ddsel {

using TokenId = std::int32_t;

// Count-thresholded vocabulary with reserved <unk>, <s>, </s> symbols.
// Reserved symbols occupy fixed ids and literal occurrences of them in text
// are mapped to <unk> so they can never be injected from data.
class Vocabulary {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;

  Vocabulary();

  // Adds a content token (reserved spellings are ignored). Returns its id.
  TokenId add(const std::string& token);

  // Id for a text token; reserved spellings and unknown tokens map to <unk>.
  TokenId map_text_token(const std::string& token) const;

  const std::string& token(TokenId id) const { return id_to_token_[id]; }
  std::size_t size() const { return id_to_token_.size(); }
  bool contains(const std::string& token) const;

  std::uint32_t min_count = 0;  // provenance, recorded in the sidecar

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

// Tokens occurring >= min_count times in corpus_side become vocabulary.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus_side,
                            std::uint32_t min_count = 2);

enum class Smoothing {
  kModifiedKneserNey,  // falls back to Witten-Bell per order when discounts degenerate
  kWittenBell,
};

Smoothing parse_smoothing(const std::string& tag);  // "kn" | "wb"
std::string smoothing_tag(Smoothing s);

// Back-off n-gram model in interpolated form: each stored n-gram carries its
// full interpolated probability, each stored context its back-off weight.
// Log10 is kept internally so ARPA round-trips are bit-exact.
class NGramLM {
 public:
  struct Entry {
    double logp10 = 0.0;  // log10 probability
    double logbo10 = 0.0;  // log10 back-off weight (0 when none)
    bool has_prob = false;
    bool has_backoff = false;
  };

  std::uint32_t order() const { return order_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  std::uint64_t training_token_count() const { return training_tokens_; }
  Smoothing smoothing() const { return smoothing_; }

  // log10 P(word | history), standard back-off query. History may be any
  // length; only the last order-1 ids are used.
  double log10_prob(std::span<const TokenId> history, TokenId word) const;

  // Nats per token: -(1/(L+1)) sum log P over the L tokens plus </s>,
  // histories padded with <s>. Throws UsageError on an empty sentence.
  double cross_entropy(const std::vector<std::string>& sentence) const;

  // exp of the token-weighted mean cross-entropy over the corpus side.
  double perplexity(const std::vector<std::vector<std::string>>& corpus_side) const;

  void save_arpa(const std::string& path) const;  // plus <path>.meta.json sidecar
  static NGramLM load_arpa(const std::string& path);

  friend NGramLM train_lm(const std::vector<std::vector<std::string>>& corpus_side,
                          const Vocabulary& vocab, std::uint32_t order, Smoothing smoothing);

  // Exposed for normalization checks and tests.
  const std::unordered_map<std::string, Entry>& entries(std::uint32_t order) const {
    return tables_[order - 1];
  }
  static std::string key(std::span<const TokenId> ids);

 private:
  std::uint32_t order_ = 0;
  Vocabulary vocab_;
  Smoothing smoothing_ = Smoothing::kModifiedKneserNey;
  std::uint64_t training_tokens_ = 0;
  // tables_[k-1]: k-gram id-key -> entry
  std::vector<std::unordered_map<std::string, Entry>> tables_;
};

// Trains an interpolated model; OOV training tokens count as <unk>, each
// sentence is padded with order-1 <s> and one </s>. Throws DataError on an
// empty corpus and UsageError on order < 1.
NGramLM train_lm(const std::vector<std::vector<std::string>>& corpus_side,
                 const Vocabulary& vocab, std::uint32_t order = 5,
                 Smoothing smoothing = Smoothing::kModifiedKneserNey);

// Convenience views over a corpus.
std::vector<std::vector<std::string>> source_side(const Corpus& corpus);
std::vector<std::vector<std::string>> target_side(const Corpus& corpus);

}  // namespace ddsel

#endif
