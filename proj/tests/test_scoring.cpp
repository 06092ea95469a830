#include "core/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "core/errors.hpp"
#include "core/ngram_lm.hpp"
#include "doctest.h"
#include "oracle_arpa.hpp"
#include "synthetic.hpp"
#include "testutil.hpp"

using namespace ddsel;
using testutil::TempDir;

namespace {

struct Models {
  NGramLM lm_if, lm_gf, lm_ie, lm_ge;
};

Models train_models(const Corpus& in_domain, const Corpus& general, std::uint32_t order = 3,
                    std::uint32_t min_count = 1) {
  const auto src = source_side(in_domain);
  const auto tgt = target_side(in_domain);
  const Vocabulary vsrc = build_vocabulary(src, min_count);
  const Vocabulary vtgt = build_vocabulary(tgt, min_count);
  return {train_lm(src, vsrc, order), train_lm(source_side(general), vsrc, order),
          train_lm(tgt, vtgt, order), train_lm(target_side(general), vtgt, order)};
}

Corpus toy_bitext() {
  Corpus c;
  c.name = "toy";
  const std::vector<std::pair<std::string, std::string>> lines = {
      {"smed1 smed2 smed3", "tmed1 tmed2"},
      {"snews9 snews8", "tnews9 tnews8 tnews7"},
      {"smed1 snews1", "tmed1 tnews1"},
      {"smed2 smed2 smed2 smed2", "tmed2 tmed2"},
      {"unseen words here", "also unseen here"},
  };
  std::uint64_t id = 0;
  for (const auto& [s, t] : lines) {
    SentencePair p;
    p.id = id++;
    std::istringstream ss(s), ts(t);
    for (std::string tok; ss >> tok;) p.source.push_back(tok);
    for (std::string tok; ts >> tok;) p.target.push_back(tok);
    c.pairs.push_back(std::move(p));
  }
  c.refresh_totals();
  return c;
}

std::vector<CedRecord> records_from_ced(const std::vector<double>& ceds) {
  std::vector<CedRecord> recs;
  for (std::size_t i = 0; i < ceds.size(); ++i) {
    CedRecord r;
    r.pair_id = i;
    r.h_if = ceds[i];  // keep ced == (h_if - h_gf) + (h_ie - h_ge) consistent
    r.ced = ceds[i];
    recs.push_back(r);
  }
  return recs;
}

}  // namespace

TEST_CASE("compute_ced: identical model pairs give ced exactly zero") {
  const auto bench = synthetic::make_benchmark(1, 50, 50, 10);
  const auto src = source_side(bench.in_domain);
  const auto tgt = target_side(bench.in_domain);
  const Vocabulary vsrc = build_vocabulary(src, 1);
  const Vocabulary vtgt = build_vocabulary(tgt, 1);
  const NGramLM f = train_lm(src, vsrc, 3);
  const NGramLM e = train_lm(tgt, vtgt, 3);
  const auto records = compute_ced(bench.general, f, f, e, e);
  REQUIRE(records.size() == bench.general.size());
  for (const auto& r : records) {
    CHECK(r.ced == 0.0);
    CHECK(r.h_if == r.h_gf);
    CHECK(r.h_ie == r.h_ge);
  }
}

TEST_CASE("compute_ced: matches the brute-force oracle on a toy bitext") {
  const auto bench = synthetic::make_benchmark(2, 60, 80, 10);
  const Models m = train_models(bench.in_domain, bench.general);
  const Corpus toy = toy_bitext();
  const auto records = compute_ced(toy, m.lm_if, m.lm_gf, m.lm_ie, m.lm_ge);

  TempDir dir("ced");
  m.lm_if.save_arpa(dir.file("if.arpa"));
  m.lm_gf.save_arpa(dir.file("gf.arpa"));
  m.lm_ie.save_arpa(dir.file("ie.arpa"));
  m.lm_ge.save_arpa(dir.file("ge.arpa"));
  const oracle::CedOracle ced_oracle{
      oracle::parse_arpa(dir.file("if.arpa")), oracle::parse_arpa(dir.file("gf.arpa")),
      oracle::parse_arpa(dir.file("ie.arpa")), oracle::parse_arpa(dir.file("ge.arpa"))};

  REQUIRE(records.size() == toy.size());
  for (std::size_t i = 0; i < toy.size(); ++i) {
    const auto& p = toy.pairs[i];
    CHECK(records[i].pair_id == p.id);
    CHECK(records[i].ced ==
          doctest::Approx(ced_oracle.ced(p.source, p.target)).epsilon(1e-9));
    CHECK(records[i].ced == doctest::Approx((records[i].h_if - records[i].h_gf) +
                                            (records[i].h_ie - records[i].h_ge))
                                .epsilon(1e-12));
  }
}

TEST_CASE("compute_ced: in-domain-like pairs score lower than out-of-domain pairs") {
  const auto bench = synthetic::make_benchmark(3);
  const Models m = train_models(bench.in_domain, bench.general);
  const auto records = compute_ced(bench.general, m.lm_if, m.lm_gf, m.lm_ie, m.lm_ge);

  // In the benchmark, pairs with (id % 10) < 3 are medical; they should have
  // lower ced than the news pairs, on average and at the median.
  std::vector<double> med, news;
  for (const auto& r : records) {
    ((r.pair_id % 10) < 3 ? med : news).push_back(r.ced);
  }
  std::sort(med.begin(), med.end());
  std::sort(news.begin(), news.end());
  CHECK(med[med.size() / 2] < news[news.size() / 2]);
  // Nearly perfect separation: the worst medical pair still beats most news.
  std::size_t inversions = 0;
  for (const double n : news) {
    if (n < med.back()) ++inversions;
  }
  CHECK(inversions < news.size() / 10);
}

TEST_CASE("compute_ced: worker count does not change the output") {
  const auto bench = synthetic::make_benchmark(4, 200, 80, 10);
  const Models m = train_models(bench.in_domain, bench.general);
  const auto one = compute_ced(bench.general, m.lm_if, m.lm_gf, m.lm_ie, m.lm_ge, 1);
  const auto eight = compute_ced(bench.general, m.lm_if, m.lm_gf, m.lm_ie, m.lm_ge, 8);
  REQUIRE(one.size() == eight.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].pair_id == eight[i].pair_id);
    CHECK(one[i].ced == eight[i].ced);  // bitwise equal
    CHECK(one[i].h_if == eight[i].h_if);
  }
}

TEST_CASE("compute_ced: empty corpus is a data error") {
  const auto bench = synthetic::make_benchmark(5, 10, 50, 10);
  const Models m = train_models(bench.in_domain, bench.general);
  const Corpus empty;
  CHECK_THROWS_AS(compute_ced(empty, m.lm_if, m.lm_gf, m.lm_ie, m.lm_ge), DataError);
}

TEST_CASE("rank_bitext: ascending ced, ties by pair id") {
  const auto recs = records_from_ced({0.5, -1.2, 0.0});
  const Ranking r = rank_bitext(recs);
  CHECK(r.pair_ids == std::vector<std::uint64_t>{1, 2, 0});
  CHECK(r.origin == RankingOrigin::kRelevance);
  CHECK(!r.seed.has_value());
}

TEST_CASE("rank_bitext: equal scores break ties by ascending pair id") {
  std::vector<CedRecord> recs;
  for (const std::uint64_t id : {7, 3}) {
    CedRecord r;
    r.pair_id = id;
    r.ced = 1.25;
    recs.push_back(r);
  }
  const Ranking r = rank_bitext(recs);
  CHECK(r.pair_ids == std::vector<std::uint64_t>{3, 7});
}

TEST_CASE("rank_bitext: negating every score reverses a tie-free ranking") {
  const std::vector<double> ceds = {0.4, -0.9, 2.2, 0.0, -3.1};
  const Ranking fwd = rank_bitext(records_from_ced(ceds));
  std::vector<double> neg;
  for (const double c : ceds) neg.push_back(-c);
  const Ranking rev = rank_bitext(records_from_ced(neg));
  std::vector<std::uint64_t> reversed(rev.pair_ids.rbegin(), rev.pair_ids.rend());
  CHECK(fwd.pair_ids == reversed);
}

TEST_CASE("rank_bitext: adding a constant to every score changes nothing") {
  const std::vector<double> ceds = {0.25, -1.5, 0.75, 3.0};
  std::vector<double> shifted;
  for (const double c : ceds) shifted.push_back(c + 10.0);
  CHECK(rank_bitext(records_from_ced(ceds)).pair_ids ==
        rank_bitext(records_from_ced(shifted)).pair_ids);
}

TEST_CASE("random_ranking: seeded permutation of the corpus ids") {
  const auto bench = synthetic::make_benchmark(6, 300, 50, 10);
  const Ranking a = random_ranking(bench.general, 17);
  const Ranking b = random_ranking(bench.general, 17);
  const Ranking c = random_ranking(bench.general, 18);
  CHECK(a.pair_ids == b.pair_ids);
  CHECK(a.pair_ids != c.pair_ids);
  CHECK(a.origin == RankingOrigin::kRandom);
  REQUIRE(a.seed.has_value());
  CHECK(*a.seed == 17);

  std::set<std::uint64_t> seen(a.pair_ids.begin(), a.pair_ids.end());
  CHECK(seen.size() == bench.general.size());
  for (const auto& p : bench.general.pairs) CHECK(seen.count(p.id) == 1);
}

TEST_CASE("scores TSV round-trip returns identical records") {
  const auto bench = synthetic::make_benchmark(7, 120, 80, 10);
  const Models m = train_models(bench.in_domain, bench.general);
  const auto records = compute_ced(bench.general, m.lm_if, m.lm_gf, m.lm_ie, m.lm_ge);
  TempDir dir("tsv");
  save_scores_tsv(records, dir.file("scores.tsv"));

  const std::string text = testutil::read_file(dir.file("scores.tsv"));
  CHECK(text.rfind("pair_id\th_if\th_gf\th_ie\th_ge\tced\n", 0) == 0);

  const auto back = import_external_scores(dir.file("scores.tsv"), bench.general);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].pair_id == records[i].pair_id);
    CHECK(back[i].h_if == records[i].h_if);
    CHECK(back[i].h_gf == records[i].h_gf);
    CHECK(back[i].h_ie == records[i].h_ie);
    CHECK(back[i].h_ge == records[i].h_ge);
    CHECK(back[i].ced == records[i].ced);
  }
}

TEST_CASE("import_external_scores: a missing pair id is named in the error") {
  const auto bench = synthetic::make_benchmark(8, 10, 50, 10);
  const Models m = train_models(bench.in_domain, bench.general);
  auto records = compute_ced(bench.general, m.lm_if, m.lm_gf, m.lm_ie, m.lm_ge);
  records.erase(records.begin() + 5);  // drop pair 5
  TempDir dir("tsv");
  save_scores_tsv(records, dir.file("scores.tsv"));
  CHECK_THROWS_WITH_AS(import_external_scores(dir.file("scores.tsv"), bench.general),
                       doctest::Contains("5"), DataError);
}

TEST_CASE("import_external_scores: unknown and duplicate ids are rejected") {
  const auto bench = synthetic::make_benchmark(9, 10, 50, 10);
  const Models m = train_models(bench.in_domain, bench.general);
  auto records = compute_ced(bench.general, m.lm_if, m.lm_gf, m.lm_ie, m.lm_ge);
  TempDir dir("tsv");

  auto extra = records;
  extra.push_back(records[0]);
  extra.back().pair_id = 999;
  save_scores_tsv(extra, dir.file("extra.tsv"));
  CHECK_THROWS_WITH_AS(import_external_scores(dir.file("extra.tsv"), bench.general),
                       doctest::Contains("999"), DataError);

  auto dup = records;
  dup.push_back(records[3]);
  save_scores_tsv(dup, dir.file("dup.tsv"));
  CHECK_THROWS_AS(import_external_scores(dir.file("dup.tsv"), bench.general), DataError);
}

TEST_CASE("import_external_scores: ced inconsistent with the entropies is rejected") {
  const auto bench = synthetic::make_benchmark(10, 10, 50, 10);
  const Models m = train_models(bench.in_domain, bench.general);
  auto records = compute_ced(bench.general, m.lm_if, m.lm_gf, m.lm_ie, m.lm_ge);
  records[2].ced += 0.001;  // well past the 1e-6 tolerance
  TempDir dir("tsv");
  save_scores_tsv(records, dir.file("bad.tsv"));
  CHECK_THROWS_AS(import_external_scores(dir.file("bad.tsv"), bench.general), DataError);
}

TEST_CASE("import_external_scores: a non-numeric field reports its line number") {
  const auto bench = synthetic::make_benchmark(11, 3, 50, 10);
  TempDir dir("tsv");
  testutil::write_lines(dir.file("bad.tsv"),
                        {"pair_id\th_if\th_gf\th_ie\th_ge\tced",
                         "0\t1.0\t1.0\t1.0\t1.0\t0.0",
                         "1\t1.0\toops\t1.0\t1.0\t0.0",
                         "2\t1.0\t1.0\t1.0\t1.0\t0.0"});
  CHECK_THROWS_WITH_AS(import_external_scores(dir.file("bad.tsv"), bench.general),
                       doctest::Contains("3"), DataError);
}

TEST_CASE("save_ranking/load_ranking round-trips origin and seed") {
  TempDir dir("rank");

  Ranking rel;
  rel.pair_ids = {4, 1, 3};
  rel.origin = RankingOrigin::kRelevance;
  save_ranking(rel, dir.file("rel.txt"));
  const std::string text = testutil::read_file(dir.file("rel.txt"));
  CHECK(text.rfind("# origin=relevance seed=none\n", 0) == 0);
  const Ranking rel_back = load_ranking(dir.file("rel.txt"));
  CHECK(rel_back.pair_ids == rel.pair_ids);
  CHECK(rel_back.origin == RankingOrigin::kRelevance);
  CHECK(!rel_back.seed.has_value());

  Ranking rnd;
  rnd.pair_ids = {2, 0};
  rnd.origin = RankingOrigin::kRandom;
  rnd.seed = 42;
  save_ranking(rnd, dir.file("rnd.txt"));
  CHECK(testutil::read_file(dir.file("rnd.txt")).rfind("# origin=random seed=42\n", 0) == 0);
  const Ranking rnd_back = load_ranking(dir.file("rnd.txt"));
  CHECK(rnd_back.pair_ids == rnd.pair_ids);
  CHECK(rnd_back.origin == RankingOrigin::kRandom);
  REQUIRE(rnd_back.seed.has_value());
  CHECK(*rnd_back.seed == 42);

  Ranking imp;
  imp.pair_ids = {0};
  imp.origin = RankingOrigin::kImported;
  save_ranking(imp, dir.file("imp.txt"));
  CHECK(load_ranking(dir.file("imp.txt")).origin == RankingOrigin::kImported);
}
