#include "core/ngram_lm.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"
#include "json.hpp"

namespace ddsel {

namespace {

constexpr double kLn10 = 2.302585092994045684017991454684364208;
constexpr const char* kUnkStr = "<unk>";
constexpr const char* kBosStr = "<s>";
constexpr const char* kEosStr = "</s>";

bool is_reserved(const std::string& t) {
  return t == kUnkStr || t == kBosStr || t == kEosStr;
}

std::string fmt_double(double d) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

}  // namespace

Vocabulary::Vocabulary() {
  id_to_token_ = {kUnkStr, kBosStr, kEosStr};
  for (TokenId i = 0; i < 3; ++i) token_to_id_[id_to_token_[i]] = i;
}

TokenId Vocabulary::add(const std::string& token) {
  if (is_reserved(token)) return kUnk;
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  const TokenId id = static_cast<TokenId>(id_to_token_.size());
  id_to_token_.push_back(token);
  token_to_id_[token] = id;
  return id;
}

TokenId Vocabulary::map_text_token(const std::string& token) const {
  if (is_reserved(token)) return kUnk;
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) != 0;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus_side,
                            std::uint32_t min_count) {
  if (min_count < 1) throw UsageError("min_count must be >= 1");
  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& sent : corpus_side) {
    for (const auto& tok : sent) ++freq[tok];
  }
  // Sorted insertion keeps id assignment independent of hash-map order.
  std::vector<const std::string*> keep;
  for (const auto& [tok, c] : freq) {
    if (c >= min_count && !is_reserved(tok)) keep.push_back(&tok);
  }
  std::sort(keep.begin(), keep.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  Vocabulary vocab;
  vocab.min_count = min_count;
  for (const auto* tok : keep) vocab.add(*tok);
  return vocab;
}

Smoothing parse_smoothing(const std::string& tag) {
  if (tag == "kn") return Smoothing::kModifiedKneserNey;
  if (tag == "wb") return Smoothing::kWittenBell;
  throw UsageError("unknown smoothing tag: " + tag + " (expected kn or wb)");
}

std::string smoothing_tag(Smoothing s) {
  return s == Smoothing::kModifiedKneserNey ? "kn" : "wb";
}

std::string NGramLM::key(std::span<const TokenId> ids) {
  std::string k(ids.size() * sizeof(TokenId), '\0');
  std::memcpy(k.data(), ids.data(), k.size());
  return k;
}

namespace {

std::vector<TokenId> decode_key(const std::string& k) {
  std::vector<TokenId> ids(k.size() / sizeof(TokenId));
  std::memcpy(ids.data(), k.data(), k.size());
  return ids;
}

using CountMap = std::unordered_map<std::string, std::uint64_t>;

// Per-order discounting scheme. Modified Kneser-Ney when the count-of-counts
// statistics allow it; otherwise fixed absolute discounting D=0.5 (the Witten-
// Bell fallback named in the design notes over-discounts tiny corpora; see
// decision ledger). Explicit Witten-Bell is available as its own mode.
struct Discounts {
  bool witten_bell = false;
  double d1 = 0.5, d2 = 0.5, d3 = 0.5;

  double operator()(std::uint64_t count) const {
    if (count >= 3) return d3;
    return count == 2 ? d2 : d1;
  }
};

Discounts estimate_discounts(const CountMap& counts, Smoothing smoothing) {
  Discounts d;
  if (smoothing == Smoothing::kWittenBell) {
    d.witten_bell = true;
    return d;
  }
  std::uint64_t n[5] = {0, 0, 0, 0, 0};
  for (const auto& [k, c] : counts) {
    if (c >= 1 && c <= 4) ++n[c];
  }
  if (n[1] > 0 && n[2] > 0 && n[3] > 0) {
    const double y = static_cast<double>(n[1]) / (n[1] + 2.0 * n[2]);
    const double d1 = 1.0 - 2.0 * y * n[2] / n[1];
    const double d2 = 2.0 - 3.0 * y * n[3] / n[2];
    const double d3 = 3.0 - 4.0 * y * n[4] / n[3];
    if (d1 > 0 && d2 > 0 && d3 > 0) {
      d.d1 = d1;
      d.d2 = d2;
      d.d3 = d3;
    }
  }
  return d;
}

}  // namespace

NGramLM train_lm(const std::vector<std::vector<std::string>>& corpus_side,
                 const Vocabulary& vocab, std::uint32_t order, Smoothing smoothing) {
  if (order < 1) throw UsageError("n-gram order must be >= 1");
  bool any_tokens = false;
  for (const auto& s : corpus_side) {
    if (!s.empty()) {
      any_tokens = true;
      break;
    }
  }
  if (!any_tokens) throw DataError("cannot train a language model on an empty corpus");

  NGramLM lm;
  lm.order_ = order;
  lm.vocab_ = vocab;
  lm.smoothing_ = smoothing;

  // Raw n-gram counts per order over <s>-padded, </s>-terminated sentences.
  // Windows ending in <s> are context-only and never counted.
  std::vector<CountMap> raw(order);
  for (const auto& sent : corpus_side) {
    if (sent.empty()) continue;
    std::vector<TokenId> padded(order - 1, Vocabulary::kBos);
    for (const auto& tok : sent) padded.push_back(vocab.map_text_token(tok));
    padded.push_back(Vocabulary::kEos);
    lm.training_tokens_ += sent.size();
    for (std::uint32_t k = 1; k <= order; ++k) {
      for (std::size_t start = 0; start + k <= padded.size(); ++start) {
        if (padded[start + k - 1] == Vocabulary::kBos) continue;
        ++raw[k - 1][NGramLM::key({padded.data() + start, k})];
      }
    }
  }

  // Effective counts per order: highest order raw; lower orders continuation
  // counts (distinct left-extensions), except <s>-initial grams which keep raw
  // counts. Witten-Bell mode uses raw counts throughout.
  std::vector<CountMap> eff(order);
  eff[order - 1] = raw[order - 1];
  for (std::uint32_t k = 1; k < order; ++k) {
    if (smoothing == Smoothing::kWittenBell) {
      eff[k - 1] = raw[k - 1];
      continue;
    }
    CountMap& adj = eff[k - 1];
    for (const auto& [gk, c] : raw[k - 1]) {
      const auto ids = decode_key(gk);
      if (ids.front() == Vocabulary::kBos) adj[gk] = c;
    }
    for (const auto& [gk, c] : raw[k]) {
      const auto ids = decode_key(gk);
      if (ids[1] == Vocabulary::kBos) continue;  // suffix starts with <s>; raw kept above
      ++adj[NGramLM::key({ids.data() + 1, static_cast<std::size_t>(k)})];
    }
  }

  std::vector<Discounts> disc(order);
  for (std::uint32_t k = 1; k <= order; ++k) disc[k - 1] = estimate_discounts(eff[k - 1], smoothing);

  // probs[k-1]: k-gram -> interpolated probability; gammas[k-1]: (k)-gram
  // context -> back-off weight of its order-(k+1) distribution.
  std::vector<std::unordered_map<std::string, double>> probs(order);
  std::vector<std::unordered_map<std::string, double>> gammas(order);

  // Unigrams: interpolate with the uniform distribution over the predictable
  // vocabulary (everything except <s>) so every word, including <unk> and
  // words unseen in this corpus, gets positive mass.
  const double vsize = static_cast<double>(vocab.size() - 1);
  {
    const CountMap& uni = eff[0];
    double total = 0;
    for (const auto& [k, c] : uni) total += static_cast<double>(c);
    const Discounts& d = disc[0];
    double gamma1;
    if (d.witten_bell) {
      const double t = static_cast<double>(uni.size());
      gamma1 = t / (total + t);
      for (TokenId w = 0; w < static_cast<TokenId>(vocab.size()); ++w) {
        if (w == Vocabulary::kBos) continue;
        const std::string gk = NGramLM::key({&w, 1});
        auto it = uni.find(gk);
        const double c = it == uni.end() ? 0.0 : static_cast<double>(it->second);
        probs[0][gk] = c / (total + t) + gamma1 / vsize;
      }
    } else {
      double discount_mass = 0;
      for (const auto& [k, c] : uni) discount_mass += d(c);
      gamma1 = discount_mass / total;
      for (TokenId w = 0; w < static_cast<TokenId>(vocab.size()); ++w) {
        if (w == Vocabulary::kBos) continue;
        const std::string gk = NGramLM::key({&w, 1});
        auto it = uni.find(gk);
        const double c = it == uni.end() ? 0.0 : static_cast<double>(it->second);
        const double discounted = c > 0 ? std::max(c - d(it->second), 0.0) / total : 0.0;
        probs[0][gk] = discounted + gamma1 / vsize;
      }
    }
  }

  for (std::uint32_t k = 2; k <= order; ++k) {
    // Group grams by context.
    std::unordered_map<std::string, std::vector<std::pair<const std::string*, std::uint64_t>>> by_ctx;
    for (const auto& kv : eff[k - 1]) {
      by_ctx[kv.first.substr(0, (k - 1) * sizeof(TokenId))].push_back({&kv.first, kv.second});
    }
    const Discounts& d = disc[k - 1];
    for (const auto& [ctx, grams] : by_ctx) {
      double denom = 0;
      for (const auto& [gk, c] : grams) denom += static_cast<double>(c);
      double gamma;
      if (d.witten_bell) {
        const double t = static_cast<double>(grams.size());
        gamma = t / (denom + t);
      } else {
        double discount_mass = 0;
        for (const auto& [gk, c] : grams) discount_mass += d(c);
        gamma = discount_mass / denom;
      }
      gammas[k - 2][ctx] = gamma;
      for (const auto& [gk, c] : grams) {
        const std::string lower = gk->substr(sizeof(TokenId));
        auto lo = probs[k - 2].find(lower);
        assert(lo != probs[k - 2].end());
        const double p_lower = lo->second;
        double p;
        if (d.witten_bell) {
          p = static_cast<double>(c) / (denom + static_cast<double>(grams.size())) +
              gamma * p_lower;
        } else {
          p = std::max(static_cast<double>(c) - d(c), 0.0) / denom + gamma * p_lower;
        }
        probs[k - 1][*gk] = p;
      }
    }
  }

  lm.tables_.assign(order, {});
  for (std::uint32_t k = 1; k <= order; ++k) {
    for (const auto& [gk, p] : probs[k - 1]) {
      auto& e = lm.tables_[k - 1][gk];
      e.logp10 = std::log10(p);
      e.has_prob = true;
    }
    if (k < order) {
      for (const auto& [ctx, g] : gammas[k - 1]) {
        auto& e = lm.tables_[k - 1][ctx];
        e.logbo10 = std::log10(g);
        e.has_backoff = true;
      }
    }
  }
  // Context-only grams (pure-<s> runs) get the conventional placeholder.
  for (auto& table : lm.tables_) {
    for (auto& [gk, e] : table) {
      if (!e.has_prob) e.logp10 = -99.0;
    }
  }
  return lm;
}

double NGramLM::log10_prob(std::span<const TokenId> history, TokenId word) const {
  if (word == Vocabulary::kBos || word < 0 ||
      word >= static_cast<TokenId>(vocab_.size())) {
    word = Vocabulary::kUnk;
  }
  const std::size_t m = std::min<std::size_t>(history.size(), order_ - 1);
  const TokenId* hist = history.data() + (history.size() - m);

  double backoff = 0.0;
  std::vector<TokenId> gram(m + 1);
  for (std::size_t n = m + 1; n >= 2; --n) {
    // gram = last n-1 history ids + word
    for (std::size_t i = 0; i < n - 1; ++i) gram[i] = hist[m - (n - 1) + i];
    gram[n - 1] = word;
    const auto& table = tables_[n - 1];
    auto it = table.find(key({gram.data(), n}));
    if (it != table.end() && it->second.has_prob) return it->second.logp10 + backoff;
    const auto& ctx_table = tables_[n - 2];
    auto ctx_it = ctx_table.find(key({gram.data(), n - 1}));
    if (ctx_it != ctx_table.end() && ctx_it->second.has_backoff) {
      backoff += ctx_it->second.logbo10;
    }
  }
  auto it = tables_[0].find(key({&word, 1}));
  if (it == tables_[0].end() || !it->second.has_prob) {
    const TokenId unk = Vocabulary::kUnk;
    it = tables_[0].find(key({&unk, 1}));
  }
  return it->second.logp10 + backoff;
}

double NGramLM::cross_entropy(const std::vector<std::string>& sentence) const {
  if (sentence.empty()) throw UsageError("cross_entropy of an empty sentence");
  std::vector<TokenId> history(order_ - 1, Vocabulary::kBos);
  double sum10 = 0;
  for (const auto& tok : sentence) {
    const TokenId id = vocab_.map_text_token(tok);
    sum10 += log10_prob(history, id);
    history.push_back(id);
  }
  sum10 += log10_prob(history, Vocabulary::kEos);
  return -sum10 * kLn10 / static_cast<double>(sentence.size() + 1);
}

double NGramLM::perplexity(const std::vector<std::vector<std::string>>& corpus_side) const {
  double sum10 = 0;
  std::uint64_t events = 0;
  for (const auto& sent : corpus_side) {
    if (sent.empty()) continue;
    std::vector<TokenId> history(order_ - 1, Vocabulary::kBos);
    for (const auto& tok : sent) {
      const TokenId id = vocab_.map_text_token(tok);
      sum10 += log10_prob(history, id);
      history.push_back(id);
    }
    sum10 += log10_prob(history, Vocabulary::kEos);
    events += sent.size() + 1;
  }
  if (events == 0) throw UsageError("perplexity of an empty corpus");
  return std::pow(10.0, -sum10 / static_cast<double>(events));
}

void NGramLM::save_arpa(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);

  out << "\\data\\\n";
  for (std::uint32_t k = 1; k <= order_; ++k) {
    out << "ngram " << k << "=" << tables_[k - 1].size() << "\n";
  }
  for (std::uint32_t k = 1; k <= order_; ++k) {
    out << "\n\\" << k << "-grams:\n";
    std::vector<const std::string*> keys;
    keys.reserve(tables_[k - 1].size());
    for (const auto& kv : tables_[k - 1]) keys.push_back(&kv.first);
    std::sort(keys.begin(), keys.end(), [](const std::string* a, const std::string* b) {
      const auto ia = decode_key(*a);
      const auto ib = decode_key(*b);
      return ia < ib;
    });
    for (const auto* gk : keys) {
      const Entry& e = tables_[k - 1].at(*gk);
      out << fmt_double(e.logp10) << '\t';
      const auto ids = decode_key(*gk);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out << ' ';
        out << vocab_.token(ids[i]);
      }
      if (e.has_backoff) out << '\t' << fmt_double(e.logbo10);
      out << "\n";
    }
  }
  out << "\n\\end\\\n";
  if (!out) throw IoError("write failed: " + path);

  nlohmann::ordered_json meta;
  meta["order"] = order_;
  meta["smoothing"] = smoothing_tag(smoothing_);
  meta["vocab_min_count"] = vocab_.min_count;
  meta["training_token_count"] = training_tokens_;
  meta["vocab_size"] = vocab_.size();
  std::ofstream mout(path + ".meta.json", std::ios::binary);
  if (mout) mout << meta.dump(2) << "\n";
}

NGramLM NGramLM::load_arpa(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);

  NGramLM lm;
  std::unordered_map<std::string, TokenId> token_to_id = {
      {kUnkStr, Vocabulary::kUnk}, {kBosStr, Vocabulary::kBos}, {kEosStr, Vocabulary::kEos}};

  std::string line;
  std::vector<std::uint64_t> declared;
  bool in_data = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "\\data\\") {
      in_data = true;
      continue;
    }
    if (in_data) {
      if (line.rfind("ngram ", 0) == 0) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("malformed ARPA header line: " + line);
        declared.push_back(std::stoull(line.substr(eq + 1)));
        continue;
      }
      if (line.empty()) break;
      throw DataError("malformed ARPA header line: " + line);
    }
  }
  if (declared.empty()) throw DataError("no \\data\\ section in " + path);
  lm.order_ = static_cast<std::uint32_t>(declared.size());
  lm.tables_.assign(lm.order_, {});

  std::uint32_t current = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "\\end\\") break;
    if (line[0] == '\\') {
      const auto dash = line.find("-grams:");
      if (dash == std::string::npos) throw DataError("unexpected ARPA section: " + line);
      current = static_cast<std::uint32_t>(std::stoul(line.substr(1, dash - 1)));
      if (current < 1 || current > lm.order_) {
        throw DataError("ARPA section out of range: " + line);
      }
      continue;
    }
    if (current == 0) throw DataError("ARPA n-gram line before any section: " + line);
    std::istringstream iss(line);
    double logp;
    if (!(iss >> logp)) throw DataError("bad ARPA probability line: " + line);
    std::vector<TokenId> ids(current);
    std::string tok;
    for (std::uint32_t i = 0; i < current; ++i) {
      if (!(iss >> tok)) throw DataError("truncated ARPA n-gram line: " + line);
      auto it = token_to_id.find(tok);
      if (it == token_to_id.end()) {
        if (current != 1) throw DataError("ARPA n-gram uses unlisted token: " + tok);
        const TokenId id = lm.vocab_.add(tok);
        it = token_to_id.emplace(tok, id).first;
      }
      ids[i] = it->second;
    }
    auto& e = lm.tables_[current - 1][key(ids)];
    e.logp10 = logp;
    e.has_prob = true;
    double bo;
    if (iss >> bo) {
      e.logbo10 = bo;
      e.has_backoff = true;
    }
  }
  for (std::uint32_t k = 1; k <= lm.order_; ++k) {
    if (lm.tables_[k - 1].size() != declared[k - 1]) {
      throw DataError("ARPA count mismatch at order " + std::to_string(k) + ": declared " +
                      std::to_string(declared[k - 1]) + ", found " +
                      std::to_string(lm.tables_[k - 1].size()));
    }
  }

  std::ifstream meta(path + ".meta.json", std::ios::binary);
  if (meta) {
    try {
      const auto j = nlohmann::json::parse(meta);
      if (j.contains("smoothing")) lm.smoothing_ = parse_smoothing(j["smoothing"]);
      if (j.contains("vocab_min_count")) lm.vocab_.min_count = j["vocab_min_count"];
      if (j.contains("training_token_count")) lm.training_tokens_ = j["training_token_count"];
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("bad LM sidecar: ") + e.what());
    }
  }
  return lm;
}

std::vector<std::vector<std::string>> source_side(const Corpus& corpus) {
  std::vector<std::vector<std::string>> out;
  out.reserve(corpus.pairs.size());
  for (const auto& p : corpus.pairs) out.push_back(p.source);
  return out;
}

std::vector<std::vector<std::string>> target_side(const Corpus& corpus) {
  std::vector<std::vector<std::string>> out;
  out.reserve(corpus.pairs.size());
  for (const auto& p : corpus.pairs) out.push_back(p.target);
  return out;
}

}  // namespace ddsel
