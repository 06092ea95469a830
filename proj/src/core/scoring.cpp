#include "core/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace ddsel {

namespace {

std::string fmt_double(double d) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

constexpr const char* kTsvHeader = "pair_id\th_if\th_gf\th_ie\th_ge\tced";

}  // namespace

std::vector<CedRecord> compute_ced(const Corpus& bitext, const NGramLM& lm_if,
                                   const NGramLM& lm_gf, const NGramLM& lm_ie,
                                   const NGramLM& lm_ge, unsigned workers) {
  if (bitext.empty()) throw DataError("compute_ced on an empty corpus");
  if (workers == 0) workers = 1;

  std::vector<CedRecord> records(bitext.size());
  auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const SentencePair& p = bitext.pairs[i];
      CedRecord& r = records[i];
      r.pair_id = p.id;
      r.h_if = lm_if.cross_entropy(p.source);
      r.h_gf = lm_gf.cross_entropy(p.source);
      r.h_ie = lm_ie.cross_entropy(p.target);
      r.h_ge = lm_ge.cross_entropy(p.target);
      r.ced = (r.h_if - r.h_gf) + (r.h_ie - r.h_ge);
    }
  };

  if (workers == 1 || bitext.size() < 2) {
    score_range(0, bitext.size());
  } else {
    const std::size_t n = bitext.size();
    const unsigned w = std::min<std::size_t>(workers, n);
    std::vector<std::thread> threads;
    threads.reserve(w);
    for (unsigned t = 0; t < w; ++t) {
      const std::size_t begin = n * t / w;
      const std::size_t end = n * (t + 1) / w;
      threads.emplace_back(score_range, begin, end);
    }
    for (auto& th : threads) th.join();
  }
  return records;
}

Ranking rank_bitext(const std::vector<CedRecord>& records) {
  if (records.empty()) throw UsageError("rank_bitext on an empty record sequence");
  std::vector<const CedRecord*> order(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) order[i] = &records[i];
  std::stable_sort(order.begin(), order.end(), [](const CedRecord* a, const CedRecord* b) {
    if (a->ced != b->ced) return a->ced < b->ced;
    return a->pair_id < b->pair_id;
  });
  Ranking r;
  r.origin = RankingOrigin::kRelevance;
  r.pair_ids.reserve(records.size());
  for (const auto* rec : order) r.pair_ids.push_back(rec->pair_id);
  return r;
}

Ranking random_ranking(const Corpus& bitext, std::uint64_t seed) {
  if (bitext.empty()) throw DataError("random_ranking on an empty corpus");
  Ranking r;
  r.origin = RankingOrigin::kRandom;
  r.seed = seed;
  r.pair_ids.reserve(bitext.size());
  for (const auto& p : bitext.pairs) r.pair_ids.push_back(p.id);
  auto rng = make_rng(seed);
  for (std::size_t i = r.pair_ids.size(); i > 1; --i) {
    std::swap(r.pair_ids[i - 1], r.pair_ids[bounded(rng, i)]);
  }
  return r;
}

void save_scores_tsv(const std::vector<CedRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << kTsvHeader << "\n";
  for (const auto& r : records) {
    out << r.pair_id << '\t' << fmt_double(r.h_if) << '\t' << fmt_double(r.h_gf) << '\t'
        << fmt_double(r.h_ie) << '\t' << fmt_double(r.h_ge) << '\t' << fmt_double(r.ced)
        << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<CedRecord> import_external_scores(const std::string& path, const Corpus& bitext) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty scores file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTsvHeader) {
    throw DataError("bad scores header in " + path + " (expected '" + kTsvHeader + "')");
  }

  std::vector<CedRecord> records;
  std::uint64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream iss(line);
    CedRecord r;
    std::string field;
    auto next_double = [&](double& v) {
      if (!std::getline(iss, field, '\t')) {
        throw DataError("truncated scores row at line " + std::to_string(lineno));
      }
      std::size_t pos = 0;
      try {
        v = std::stod(field, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != field.size() || field.empty()) {
        throw DataError("non-numeric field '" + field + "' at line " + std::to_string(lineno));
      }
    };
    if (!std::getline(iss, field, '\t')) {
      throw DataError("truncated scores row at line " + std::to_string(lineno));
    }
    try {
      std::size_t pos = 0;
      r.pair_id = std::stoull(field, &pos);
      if (pos != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw DataError("non-numeric pair_id '" + field + "' at line " + std::to_string(lineno));
    }
    next_double(r.h_if);
    next_double(r.h_gf);
    next_double(r.h_ie);
    next_double(r.h_ge);
    next_double(r.ced);
    const double recomputed = (r.h_if - r.h_gf) + (r.h_ie - r.h_ge);
    if (std::abs(recomputed - r.ced) > 1e-6) {
      throw DataError("ced field inconsistent with entropies for pair " +
                      std::to_string(r.pair_id) + " at line " + std::to_string(lineno) +
                      " (stored " + fmt_double(r.ced) + ", recomputed " +
                      fmt_double(recomputed) + ")");
    }
    records.push_back(r);
  }

  // Exactly the corpus's ids, no duplicates, no extras.
  std::vector<std::uint64_t> seen;
  seen.reserve(records.size());
  for (const auto& r : records) seen.push_back(r.pair_id);
  std::vector<std::uint64_t> sorted = seen;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] == sorted[i - 1]) {
      throw DataError("duplicate pair_id " + std::to_string(sorted[i]) + " in " + path);
    }
  }
  std::vector<std::uint64_t> expected;
  expected.reserve(bitext.size());
  for (const auto& p : bitext.pairs) expected.push_back(p.id);
  std::vector<std::uint64_t> missing, extra;
  std::set_difference(expected.begin(), expected.end(), sorted.begin(), sorted.end(),
                      std::back_inserter(missing));
  std::set_difference(sorted.begin(), sorted.end(), expected.begin(), expected.end(),
                      std::back_inserter(extra));
  if (!missing.empty() || !extra.empty()) {
    std::ostringstream msg;
    msg << "scores file does not match corpus:";
    if (!missing.empty()) {
      msg << " missing ids";
      for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg << ' ' << missing[i];
      if (missing.size() > 10) msg << " (+" << missing.size() - 10 << " more)";
    }
    if (!extra.empty()) {
      msg << " extra ids";
      for (std::size_t i = 0; i < extra.size() && i < 10; ++i) msg << ' ' << extra[i];
      if (extra.size() > 10) msg << " (+" << extra.size() - 10 << " more)";
    }
    throw DataError(msg.str());
  }

  // Return in corpus order.
  std::sort(records.begin(), records.end(),
            [](const CedRecord& a, const CedRecord& b) { return a.pair_id < b.pair_id; });
  return records;
}

void save_ranking(const Ranking& ranking, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  const char* origin = ranking.origin == RankingOrigin::kRelevance ? "relevance"
                       : ranking.origin == RankingOrigin::kRandom  ? "random"
                                                                   : "imported";
  out << "# origin=" << origin << " seed=";
  if (ranking.seed) {
    out << *ranking.seed;
  } else {
    out << "none";
  }
  out << "\n";
  for (const auto id : ranking.pair_ids) out << id << "\n";
  if (!out) throw IoError("write failed: " + path);
}

Ranking load_ranking(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty ranking file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  Ranking r;
  std::istringstream header(line);
  std::string hash, origin_kv, seed_kv;
  header >> hash >> origin_kv >> seed_kv;
  if (hash != "#" || origin_kv.rfind("origin=", 0) != 0 || seed_kv.rfind("seed=", 0) != 0) {
    throw DataError("bad ranking header in " + path + ": " + line);
  }
  const std::string origin = origin_kv.substr(7);
  if (origin == "relevance") {
    r.origin = RankingOrigin::kRelevance;
  } else if (origin == "random") {
    r.origin = RankingOrigin::kRandom;
  } else if (origin == "imported") {
    r.origin = RankingOrigin::kImported;
  } else {
    throw DataError("unknown ranking origin: " + origin);
  }
  const std::string seed = seed_kv.substr(5);
  if (seed != "none") r.seed = std::stoull(seed);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    r.pair_ids.push_back(std::stoull(line));
  }
  return r;
}

}  // namespace ddsel
