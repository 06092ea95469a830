#include "core/ngram_lm.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include "core/errors.hpp"
#include "doctest.h"
#include "oracle_arpa.hpp"
#include "testutil.hpp"

using namespace ddsel;
using testutil::TempDir;

namespace {

using Side = std::vector<std::vector<std::string>>;

// Sum of P(w | context) over the full predictable vocabulary via the public
// query path.
double distribution_sum(const NGramLM& lm, const std::vector<TokenId>& context) {
  double sum = 0;
  for (TokenId w = 0; w < static_cast<TokenId>(lm.vocabulary().size()); ++w) {
    if (w == Vocabulary::kBos) continue;
    sum += std::pow(10.0, lm.log10_prob(context, w));
  }
  return sum;
}

Side tiny_medical_corpus() {
  return {
      {"the", "patient", "received", "the", "dose"},
      {"the", "patient", "was", "stable"},
      {"the", "dose", "was", "low"},
      {"a", "stable", "patient", "received", "a", "low", "dose"},
      {"the", "patient", "received", "a", "dose"},
  };
}

}  // namespace

TEST_CASE("build_vocabulary: nothing passes a threshold above every count") {
  const Side side = {{"a", "b"}, {"c", "d"}};
  const Vocabulary v = build_vocabulary(side, 2);
  CHECK(v.size() == 3);  // only <unk>, <s>, </s>
}

TEST_CASE("build_vocabulary: a word appearing exactly twice is included") {
  const Side side = {{"x", "y"}, {"x"}};
  const Vocabulary v = build_vocabulary(side, 2);
  CHECK(v.contains("x"));
  CHECK(!v.contains("y"));
}

TEST_CASE("build_vocabulary: direct count example") {
  const Side side = {{"a", "a", "b"}, {"a", "c"}};
  const Vocabulary v = build_vocabulary(side, 2);
  CHECK(v.size() == 4);
  CHECK(v.contains("a"));
  CHECK(!v.contains("b"));
  CHECK(!v.contains("c"));
}

TEST_CASE("build_vocabulary: reserved spellings never enter as content") {
  const Side side = {{"<s>", "<s>", "</s>", "</s>", "<unk>", "<unk>", "ok", "ok"}};
  const Vocabulary v = build_vocabulary(side, 2);
  CHECK(v.size() == 4);
  CHECK(v.contains("ok"));
  CHECK(v.map_text_token("<s>") == Vocabulary::kUnk);
}

TEST_CASE("train_lm: unigram model on 'a a a' approximates the empirical counts") {
  const Side side = {{"a", "a", "a"}};
  Vocabulary vocab;
  vocab.add("a");
  const NGramLM lm = train_lm(side, vocab, 1);
  const TokenId a = vocab.map_text_token("a");
  const double p_a = std::pow(10.0, lm.log10_prob({}, a));
  const double p_eos = std::pow(10.0, lm.log10_prob({}, Vocabulary::kEos));
  const double p_unk = std::pow(10.0, lm.log10_prob({}, Vocabulary::kUnk));
  CHECK(std::abs(p_a - 0.75) <= 0.05);
  CHECK(std::abs(p_eos - 0.25) <= 0.05);
  CHECK(p_unk > 0.0);
  CHECK(p_a + p_eos + p_unk == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("train_lm: empty corpus and bad order are errors") {
  Vocabulary vocab;
  CHECK_THROWS_AS(train_lm({}, vocab, 5), DataError);
  CHECK_THROWS_AS(train_lm({{}}, vocab, 5), DataError);
  CHECK_THROWS_AS(train_lm({{"a"}}, vocab, 0), UsageError);
}

TEST_CASE("train_lm: OOV training tokens score as <unk>") {
  const Side side = {{"a", "a", "rare", "a"}, {"a", "rare2", "a"}};
  const Vocabulary vocab = build_vocabulary(side, 2);  // only "a" survives
  const NGramLM lm = train_lm(side, vocab, 2);
  // A raw token outside the vocabulary scores identically to <unk>.
  const double ce_rare = lm.cross_entropy({"rare"});
  const double ce_unk = lm.cross_entropy({"<unk>"});
  CHECK(ce_rare == ce_unk);
}

TEST_CASE("train_lm: distributions normalize at the start-of-sentence context") {
  const Side side = tiny_medical_corpus();
  const Vocabulary vocab = build_vocabulary(side, 1);
  for (const std::uint32_t order : {1u, 2u, 3u, 5u}) {
    const NGramLM lm = train_lm(side, vocab, order);
    const std::vector<TokenId> bos_ctx(order - 1, Vocabulary::kBos);
    CHECK(distribution_sum(lm, bos_ctx) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("train_lm: 100 sampled contexts of a 5-gram model normalize") {
  const Side side = tiny_medical_corpus();
  const Vocabulary vocab = build_vocabulary(side, 1);
  const NGramLM lm = train_lm(side, vocab, 5);

  // Contexts sampled from observed 4-grams plus random vocabulary contexts.
  std::vector<std::vector<TokenId>> contexts;
  std::mt19937_64 rng(7);
  for (const auto& [key, entry] : lm.entries(4)) {
    std::vector<TokenId> ids(key.size() / sizeof(TokenId));
    std::memcpy(ids.data(), key.data(), key.size());
    contexts.push_back(ids);
  }
  while (contexts.size() < 100) {
    std::vector<TokenId> ctx;
    for (int i = 0; i < 4; ++i) {
      ctx.push_back(static_cast<TokenId>(rng() % lm.vocabulary().size()));
    }
    contexts.push_back(ctx);
  }
  for (const auto& ctx : contexts) {
    CHECK(distribution_sum(lm, ctx) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("train_lm: every queried probability is strictly positive") {
  const Side side = tiny_medical_corpus();
  const Vocabulary vocab = build_vocabulary(side, 1);
  const NGramLM lm = train_lm(side, vocab, 5);
  const std::vector<TokenId> ctx = {Vocabulary::kBos, Vocabulary::kBos, Vocabulary::kBos,
                                    Vocabulary::kBos};
  for (TokenId w = 0; w < static_cast<TokenId>(vocab.size()); ++w) {
    if (w == Vocabulary::kBos) continue;
    CHECK(std::pow(10.0, lm.log10_prob(ctx, w)) > 0.0);
    CHECK(std::pow(10.0, lm.log10_prob({}, w)) > 0.0);
  }
}

TEST_CASE("cross_entropy: uniform unigram ARPA model scores exactly ln V") {
  TempDir dir("lm");
  const double lp = std::log10(0.25);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", lp);
  testutil::write_lines(dir.file("uniform.arpa"),
                        {"\\data\\", "ngram 1=4", "", "\\1-grams:",
                         std::string(buf) + "\t<unk>", std::string(buf) + "\t</s>",
                         std::string(buf) + "\ta", std::string(buf) + "\tb", "", "\\end\\"});
  const NGramLM lm = NGramLM::load_arpa(dir.file("uniform.arpa"));
  const double expected = std::log(4.0);
  CHECK(lm.cross_entropy({"a", "b", "a"}) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(lm.cross_entropy({"a"}) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(lm.perplexity({{"a", "b"}, {"b"}}) == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("cross_entropy: deterministic and rejects empty sentences") {
  const Side side = tiny_medical_corpus();
  const Vocabulary vocab = build_vocabulary(side, 1);
  const NGramLM lm = train_lm(side, vocab, 3);
  CHECK(lm.cross_entropy({"the", "patient"}) == lm.cross_entropy({"the", "patient"}));
  CHECK_THROWS_AS(lm.cross_entropy({}), UsageError);
}

TEST_CASE("cross_entropy: matches hand recomputation from serialized probabilities") {
  const Side side = {{"a", "a", "a"}};
  Vocabulary vocab;
  vocab.add("a");
  const NGramLM lm = train_lm(side, vocab, 1);
  TempDir dir("lm");
  lm.save_arpa(dir.file("aaa.arpa"));
  const auto oracle = oracle::parse_arpa(dir.file("aaa.arpa"));
  // Independent route: read log10 p from the ARPA text, recompute Eq. by hand.
  const double p_a = std::pow(10.0, oracle.logp.at("a"));
  const double p_eos = std::pow(10.0, oracle.logp.at("</s>"));
  const double expected = -(std::log(p_a) + std::log(p_eos)) / 2.0;
  CHECK(lm.cross_entropy({"a"}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("perplexity: reduces to exp(cross_entropy) for one sentence") {
  const Side side = tiny_medical_corpus();
  const Vocabulary vocab = build_vocabulary(side, 1);
  const NGramLM lm = train_lm(side, vocab, 5);
  const std::vector<std::string> sent = {"the", "patient", "was", "stable"};
  CHECK(lm.perplexity({sent}) == doctest::Approx(std::exp(lm.cross_entropy(sent))).epsilon(1e-12));
  CHECK_THROWS_AS(lm.perplexity({}), UsageError);
}

TEST_CASE("perplexity: training text beats disjoint-vocabulary text") {
  const Side side = tiny_medical_corpus();
  const Vocabulary vocab = build_vocabulary(side, 1);
  const NGramLM lm = train_lm(side, vocab, 5);
  const Side disjoint = {{"qq1", "qq2", "qq3"}, {"qq4", "qq5"}};
  CHECK(lm.perplexity(side) <= lm.perplexity(disjoint));
}

TEST_CASE("cross_entropy: held-in sentence beats its all-OOV twin") {
  const Side side = tiny_medical_corpus();
  const Vocabulary vocab = build_vocabulary(side, 1);
  const NGramLM lm = train_lm(side, vocab, 5);
  for (const auto& sent : side) {
    const std::vector<std::string> oov(sent.size(), "zzz-never-seen");
    CHECK(lm.cross_entropy(sent) <= lm.cross_entropy(oov));
  }
}

TEST_CASE("ARPA round-trip preserves cross_entropy exactly on a probe set") {
  // Probe sentences mix in-vocabulary, OOV, and length variation.
  Side train;
  std::mt19937_64 rng(99);
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "epsilon",
                                          "zeta",  "eta",  "theta", "iota",  "kappa"};
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> sent;
    const std::size_t len = 3 + rng() % 10;
    for (std::size_t k = 0; k < len; ++k) sent.push_back(words[rng() % words.size()]);
    train.push_back(sent);
  }
  const Vocabulary vocab = build_vocabulary(train, 2);
  const NGramLM lm = train_lm(train, vocab, 5);

  TempDir dir("lm");
  lm.save_arpa(dir.file("model.arpa"));
  const NGramLM reloaded = NGramLM::load_arpa(dir.file("model.arpa"));

  CHECK(reloaded.order() == lm.order());
  CHECK(reloaded.training_token_count() == lm.training_token_count());
  CHECK(reloaded.smoothing() == lm.smoothing());

  std::size_t checked = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<std::string> probe;
    const std::size_t len = 1 + rng() % 12;
    for (std::size_t k = 0; k < len; ++k) {
      probe.push_back(rng() % 5 == 0 ? "oov" + std::to_string(rng() % 3)
                                     : words[rng() % words.size()]);
    }
    CHECK(lm.cross_entropy(probe) == reloaded.cross_entropy(probe));  // bitwise equal
    ++checked;
  }
  CHECK(checked == 100);

  // A second save of the reloaded model is byte-identical.
  reloaded.save_arpa(dir.file("model2.arpa"));
  CHECK(testutil::read_file(dir.file("model.arpa")) ==
        testutil::read_file(dir.file("model2.arpa")));
}

TEST_CASE("ARPA output matches the independent oracle scorer") {
  const Side side = tiny_medical_corpus();
  const Vocabulary vocab = build_vocabulary(side, 1);
  for (const auto smoothing : {Smoothing::kModifiedKneserNey, Smoothing::kWittenBell}) {
    const NGramLM lm = train_lm(side, vocab, 3, smoothing);
    TempDir dir("lm");
    lm.save_arpa(dir.file("m.arpa"));
    const auto oracle = oracle::parse_arpa(dir.file("m.arpa"));
    const Side probes = {{"the", "patient", "received", "a", "dose"},
                         {"a", "low", "dose"},
                         {"nonexistent", "tokens", "only"},
                         {"the", "the", "the"}};
    for (const auto& probe : probes) {
      CHECK(lm.cross_entropy(probe) ==
            doctest::Approx(oracle.cross_entropy_nats(probe)).epsilon(1e-12));
    }
  }
}

TEST_CASE("witten-bell smoothing mode also normalizes and round-trips") {
  const Side side = tiny_medical_corpus();
  const Vocabulary vocab = build_vocabulary(side, 1);
  const NGramLM lm = train_lm(side, vocab, 4, Smoothing::kWittenBell);
  const std::vector<TokenId> ctx(3, Vocabulary::kBos);
  CHECK(distribution_sum(lm, ctx) == doctest::Approx(1.0).epsilon(1e-6));
  TempDir dir("lm");
  lm.save_arpa(dir.file("wb.arpa"));
  const NGramLM back = NGramLM::load_arpa(dir.file("wb.arpa"));
  CHECK(back.cross_entropy({"the", "dose"}) == lm.cross_entropy({"the", "dose"}));
}
