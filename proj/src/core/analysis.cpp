#include "core/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "core/errors.hpp"
#include "core/ngram_lm.hpp"
#include "json.hpp"

namespace ddsel {

namespace {

using json = nlohmann::ordered_json;

}  // namespace

CoverageReport unseen_word_types(const std::vector<std::vector<std::string>>& test_source,
                                 const std::vector<EpochManifest>& manifests,
                                 const Corpus& bitext, const std::string& method) {
  std::unordered_map<std::uint64_t, const SentencePair*> by_id;
  by_id.reserve(bitext.size());
  for (const auto& p : bitext.pairs) by_id[p.id] = &p;

  std::unordered_set<std::uint64_t> selected_ids;
  for (const auto& m : manifests) {
    for (const auto id : m.pair_ids) {
      if (by_id.find(id) == by_id.end()) {
        throw DataError("manifest references pair id " + std::to_string(id) +
                        " absent from the bitext");
      }
      selected_ids.insert(id);
    }
  }

  std::unordered_set<std::string> covered;
  for (const auto id : selected_ids) {
    for (const auto& tok : by_id[id]->source) covered.insert(tok);
  }

  std::unordered_set<std::string> test_types;
  for (const auto& sent : test_source) {
    for (const auto& tok : sent) test_types.insert(tok);
  }

  CoverageReport report;
  report.method = method;
  report.test_types = test_types.size();
  for (const auto& t : test_types) {
    if (covered.find(t) == covered.end()) ++report.unseen_types;
  }
  return report;
}

FrequencyReport selection_frequencies(const std::vector<EpochManifest>& manifests) {
  if (manifests.empty()) throw UsageError("selection_frequencies on empty manifests");
  FrequencyReport report;
  report.epochs = static_cast<std::uint32_t>(manifests.size());
  for (const auto& m : manifests) {
    for (const auto id : m.pair_ids) ++report.epochs_selected[id];
  }
  return report;
}

double proxy_domain_fit(const std::vector<std::uint64_t>& selected, const Corpus& bitext,
                        const Corpus& in_domain_dev) {
  if (selected.empty()) throw UsageError("proxy_domain_fit on an empty selection");
  if (in_domain_dev.empty()) throw UsageError("proxy_domain_fit with an empty dev corpus");

  std::unordered_map<std::uint64_t, const SentencePair*> by_id;
  by_id.reserve(bitext.size());
  for (const auto& p : bitext.pairs) by_id[p.id] = &p;

  std::vector<std::vector<std::string>> train_target;
  train_target.reserve(selected.size());
  for (const auto id : selected) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw DataError("selection references pair id " + std::to_string(id) +
                      " absent from the bitext");
    }
    train_target.push_back(it->second->target);
  }

  const Vocabulary vocab = build_vocabulary(train_target, 1);
  const NGramLM lm = train_lm(train_target, vocab, 5);

  // Token-weighted mean cross-entropy of the dev target side, nats/token.
  const double ppl = lm.perplexity(target_side(in_domain_dev));
  return std::log(ppl);
}

std::string coverage_json(const std::vector<CoverageReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json obj;
    obj["method"] = r.method;
    obj["test_types"] = r.test_types;
    obj["unseen_types"] = r.unseen_types;
    arr.push_back(obj);
  }
  return arr.dump(2);
}

std::string coverage_table(const std::vector<CoverageReport>& reports) {
  std::size_t name_width = 6;
  for (const auto& r : reports) name_width = std::max(name_width, r.method.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.resize(w, ' ');
    return s;
  };
  std::ostringstream out;
  out << pad("method", name_width + 2) << pad("test_types", 12) << "unseen_types\n";
  for (const auto& r : reports) {
    out << pad(r.method, name_width + 2) << pad(std::to_string(r.test_types), 12)
        << r.unseen_types << "\n";
  }
  return out.str();
}

std::string coverage_csv(const std::vector<CoverageReport>& reports) {
  std::ostringstream out;
  out << "method,test_types,unseen_types\n";
  for (const auto& r : reports) {
    out << r.method << ',' << r.test_types << ',' << r.unseen_types << "\n";
  }
  return out.str();
}

std::string frequencies_json(const FrequencyReport& report) {
  json obj;
  obj["epochs"] = report.epochs;
  json freq = json::object();
  for (const auto& [id, count] : report.epochs_selected) {
    freq[std::to_string(id)] = count;
  }
  obj["epochs_selected"] = freq;
  return obj.dump(2);
}

}  // namespace ddsel
