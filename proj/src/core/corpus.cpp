#include "core/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace ddsel {

namespace {

bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t extra;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= n) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!valid_utf8(line)) {
      throw IoError("invalid UTF-8 in " + path + " at line " + std::to_string(lineno));
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) tokens.push_back(std::move(tok));
  return tokens;
}

void lowercase_ascii(std::string& s) {
  for (char& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
}

}  // namespace

void Corpus::refresh_totals() {
  total_source_tokens = 0;
  total_target_tokens = 0;
  for (const auto& p : pairs) {
    total_source_tokens += p.source_len();
    total_target_tokens += p.target_len();
  }
}

Corpus load_parallel(const std::string& source_path, const std::string& target_path,
                     const std::string& name) {
  const auto src_lines = read_lines(source_path);
  const auto tgt_lines = read_lines(target_path);
  if (src_lines.size() != tgt_lines.size()) {
    throw DataError("alignment error: " + source_path + " has " +
                    std::to_string(src_lines.size()) + " lines but " + target_path + " has " +
                    std::to_string(tgt_lines.size()));
  }
  Corpus corpus;
  corpus.name = name;
  corpus.pairs.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    SentencePair p;
    p.id = i;
    p.source = tokenize(src_lines[i]);
    p.target = tokenize(tgt_lines[i]);
    corpus.pairs.push_back(std::move(p));
  }
  corpus.refresh_totals();
  return corpus;
}

Corpus preprocess(const Corpus& corpus, std::size_t max_len, bool lowercase) {
  Corpus out;
  out.name = corpus.name;
  out.pairs.reserve(corpus.pairs.size());
  for (const auto& p : corpus.pairs) {
    if (p.source_len() == 0 || p.target_len() == 0) continue;
    if (p.source_len() > max_len || p.target_len() > max_len) continue;
    SentencePair q = p;
    if (lowercase) {
      for (auto& t : q.source) lowercase_ascii(t);
      for (auto& t : q.target) lowercase_ascii(t);
    }
    out.pairs.push_back(std::move(q));
  }
  out.refresh_totals();
  return out;
}

Corpus sample_general_subset(const Corpus& corpus, std::uint64_t target_size_tokens,
                             std::uint64_t seed) {
  std::vector<std::size_t> order(corpus.pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[bounded(rng, i)]);
  }

  std::vector<std::size_t> taken;
  std::uint64_t cum = 0;
  for (const std::size_t idx : order) {
    const std::uint64_t len = corpus.pairs[idx].source_len();
    if (cum + len > target_size_tokens) break;
    cum += len;
    taken.push_back(idx);
  }
  std::sort(taken.begin(), taken.end());

  Corpus out;
  out.name = corpus.name.empty() ? "sample" : corpus.name + ".sample";
  out.pairs.reserve(taken.size());
  for (const std::size_t idx : taken) out.pairs.push_back(corpus.pairs[idx]);
  out.refresh_totals();
  return out;
}

void write_corpus(const Corpus& corpus, const std::string& source_path,
                  const std::string& target_path, const std::string& ids_path) {
  std::ofstream src(source_path, std::ios::binary);
  if (!src) throw IoError("cannot write file: " + source_path);
  std::ofstream tgt(target_path, std::ios::binary);
  if (!tgt) throw IoError("cannot write file: " + target_path);
  std::ofstream ids;
  if (!ids_path.empty()) {
    ids.open(ids_path, std::ios::binary);
    if (!ids) throw IoError("cannot write file: " + ids_path);
  }
  for (const auto& p : corpus.pairs) {
    for (std::size_t i = 0; i < p.source.size(); ++i) {
      if (i) src << ' ';
      src << p.source[i];
    }
    src << '\n';
    for (std::size_t i = 0; i < p.target.size(); ++i) {
      if (i) tgt << ' ';
      tgt << p.target[i];
    }
    tgt << '\n';
    if (ids.is_open()) ids << p.id << '\n';
  }
}

}  // namespace ddsel
