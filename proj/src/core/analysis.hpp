#ifndef DDSEL_ANALYSIS_HPP
#define DDSEL_ANALYSIS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/selection.hpp"

namespace ddsel {

struct CoverageReport {
  std::string method;
  std::uint64_t test_types = 0;    // distinct source word types in the test set
  std::uint64_t unseen_types = 0;  // test types absent from the selected training data
};

// Test types not covered by the union of all epochs' selected source
// sentences. The union is what an NMT trainer would observe over a full run.
CoverageReport unseen_word_types(const std::vector<std::vector<std::string>>& test_source,
                                 const std::vector<EpochManifest>& manifests,
                                 const Corpus& bitext, const std::string& method = "");

struct FrequencyReport {
  std::map<std::uint64_t, std::uint32_t> epochs_selected;  // pair_id -> epoch count
  std::uint32_t epochs = 0;
};

FrequencyReport selection_frequencies(const std::vector<EpochManifest>& manifests);

// Desk-scale stand-in for a translation-quality comparison: trains a fresh
// 5-gram LM (full vocabulary of the selection, min_count 1) on the selected
// target side and returns the dev target side's cross-entropy under it, in
// nats per token. Lower is better.
double proxy_domain_fit(const std::vector<std::uint64_t>& selected, const Corpus& bitext,
                        const Corpus& in_domain_dev);

// Machine- and human-readable report renderings.
std::string coverage_json(const std::vector<CoverageReport>& reports);
std::string coverage_table(const std::vector<CoverageReport>& reports);
std::string coverage_csv(const std::vector<CoverageReport>& reports);
std::string frequencies_json(const FrequencyReport& report);

}  // namespace ddsel

#endif
