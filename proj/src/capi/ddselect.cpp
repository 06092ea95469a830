#include "ddselect.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "core/analysis.hpp"
#include "core/corpus.hpp"
#include "core/errors.hpp"
#include "core/ngram_lm.hpp"
#include "core/scoring.hpp"
#include "core/selection.hpp"

// Handle types wrap the core value types; the C surface owns them by pointer.
struct dds_corpus {
  ddsel::Corpus value;
};
struct dds_vocab {
  ddsel::Vocabulary value;
};
struct dds_lm {
  ddsel::NGramLM value;
};
struct dds_records {
  std::vector<ddsel::CedRecord> value;
};
struct dds_ranking {
  ddsel::Ranking value;
};
struct dds_weights {
  ddsel::SamplingWeights value;
};
struct dds_manifests {
  std::vector<ddsel::EpochManifest> value;
  ddsel::SelectionSchedule schedule;
};

namespace {

thread_local std::string g_last_error;

dds_status fail(dds_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

// Runs fn, translating the core exception taxonomy into status codes.
template <typename Fn>
dds_status guarded(Fn&& fn) {
  try {
    fn();
    return DDS_OK;
  } catch (const ddsel::UsageError& e) {
    return fail(DDS_ERR_USAGE, e.what());
  } catch (const ddsel::DataError& e) {
    return fail(DDS_ERR_DATA, e.what());
  } catch (const ddsel::IoError& e) {
    return fail(DDS_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(DDS_ERR_DATA, e.what());
  }
}

dds_status require(bool ok, const char* what) {
  return ok ? DDS_OK : fail(DDS_ERR_USAGE, std::string("null argument: ") + what);
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ddsel::SelectionSchedule to_schedule(const dds_schedule& s) {
  ddsel::SelectionSchedule out;
  if (s.method == nullptr) throw ddsel::UsageError("schedule.method is null");
  out.method = ddsel::parse_method(s.method);
  out.epochs = s.epochs;
  if (s.budget_tokens >= 0 && s.budget_sentences >= 0) {
    throw ddsel::UsageError("--budget-tokens and --budget-sentences are mutually exclusive");
  }
  if (s.budget_tokens >= 0) {
    out.budget = static_cast<std::uint64_t>(s.budget_tokens);
    out.budget_unit = ddsel::BudgetUnit::kTokens;
  } else if (s.budget_sentences >= 0) {
    out.budget = static_cast<std::uint64_t>(s.budget_sentences);
    out.budget_unit = ddsel::BudgetUnit::kSentences;
  }
  if (!std::isnan(s.alpha)) out.alpha = s.alpha;
  if (!std::isnan(s.beta)) out.beta = s.beta;
  if (s.eta >= 0) out.eta = static_cast<std::uint32_t>(s.eta);
  if (s.seed >= 0) out.seed = static_cast<std::uint64_t>(s.seed);
  return out;
}

}  // namespace

extern "C" {

const char* dds_version(void) { return "ddselect 1.0.0"; }

const char* dds_last_error(void) { return g_last_error.c_str(); }

void dds_string_free(char* s) { delete[] s; }

/* ---- corpus ---- */

dds_status dds_corpus_load(const char* source_path, const char* target_path, const char* name,
                           dds_corpus** out) {
  if (auto s = require(source_path && target_path && out, "paths/out")) return s;
  return guarded([&] {
    *out = new dds_corpus{ddsel::load_parallel(source_path, target_path, name ? name : "")};
  });
}

dds_status dds_corpus_preprocess(const dds_corpus* corpus, size_t max_len, int lowercase,
                                 dds_corpus** out) {
  if (auto s = require(corpus && out, "corpus/out")) return s;
  return guarded(
      [&] { *out = new dds_corpus{ddsel::preprocess(corpus->value, max_len, lowercase != 0)}; });
}

dds_status dds_corpus_sample(const dds_corpus* corpus, uint64_t target_size_tokens,
                             uint64_t seed, dds_corpus** out) {
  if (auto s = require(corpus && out, "corpus/out")) return s;
  return guarded([&] {
    *out = new dds_corpus{ddsel::sample_general_subset(corpus->value, target_size_tokens, seed)};
  });
}

dds_status dds_corpus_write(const dds_corpus* corpus, const char* source_path,
                            const char* target_path, const char* ids_path_or_null) {
  if (auto s = require(corpus && source_path && target_path, "corpus/paths")) return s;
  return guarded([&] {
    ddsel::write_corpus(corpus->value, source_path, target_path,
                        ids_path_or_null ? ids_path_or_null : "");
  });
}

uint64_t dds_corpus_num_pairs(const dds_corpus* corpus) {
  return corpus ? corpus->value.size() : 0;
}

uint64_t dds_corpus_source_tokens(const dds_corpus* corpus) {
  return corpus ? corpus->value.total_source_tokens : 0;
}

uint64_t dds_corpus_target_tokens(const dds_corpus* corpus) {
  return corpus ? corpus->value.total_target_tokens : 0;
}

void dds_corpus_free(dds_corpus* corpus) { delete corpus; }

/* ---- vocabulary and language models ---- */

dds_status dds_vocab_build(const dds_corpus* corpus, dds_side side, uint32_t min_count,
                           dds_vocab** out) {
  if (auto s = require(corpus && out, "corpus/out")) return s;
  return guarded([&] {
    const auto sentences = side == DDS_SIDE_SOURCE ? ddsel::source_side(corpus->value)
                                                   : ddsel::target_side(corpus->value);
    *out = new dds_vocab{ddsel::build_vocabulary(sentences, min_count)};
  });
}

uint64_t dds_vocab_size(const dds_vocab* vocab) { return vocab ? vocab->value.size() : 0; }

void dds_vocab_free(dds_vocab* vocab) { delete vocab; }

dds_status dds_lm_train(const dds_corpus* corpus, dds_side side, const dds_vocab* vocab,
                        uint32_t order, const char* smoothing, dds_lm** out) {
  if (auto s = require(corpus && vocab && out, "corpus/vocab/out")) return s;
  return guarded([&] {
    const auto sentences = side == DDS_SIDE_SOURCE ? ddsel::source_side(corpus->value)
                                                   : ddsel::target_side(corpus->value);
    const auto method = ddsel::parse_smoothing(smoothing ? smoothing : "kn");
    *out = new dds_lm{ddsel::train_lm(sentences, vocab->value, order, method)};
  });
}

dds_status dds_lm_save_arpa(const dds_lm* lm, const char* path) {
  if (auto s = require(lm && path, "lm/path")) return s;
  return guarded([&] { lm->value.save_arpa(path); });
}

dds_status dds_lm_load_arpa(const char* path, dds_lm** out) {
  if (auto s = require(path && out, "path/out")) return s;
  return guarded([&] { *out = new dds_lm{ddsel::NGramLM::load_arpa(path)}; });
}

dds_status dds_lm_cross_entropy(const dds_lm* lm, const char* sentence, double* out) {
  if (auto s = require(lm && sentence && out, "lm/sentence/out")) return s;
  return guarded([&] {
    std::vector<std::string> tokens;
    std::istringstream iss(sentence);
    std::string tok;
    while (iss >> tok) tokens.push_back(std::move(tok));
    *out = lm->value.cross_entropy(tokens);
  });
}

dds_status dds_lm_perplexity(const dds_lm* lm, const dds_corpus* corpus, dds_side side,
                             double* out) {
  if (auto s = require(lm && corpus && out, "lm/corpus/out")) return s;
  return guarded([&] {
    const auto sentences = side == DDS_SIDE_SOURCE ? ddsel::source_side(corpus->value)
                                                   : ddsel::target_side(corpus->value);
    *out = lm->value.perplexity(sentences);
  });
}

void dds_lm_free(dds_lm* lm) { delete lm; }

/* ---- scoring and ranking ---- */

dds_status dds_ced_compute(const dds_corpus* bitext, const dds_lm* lm_in_source,
                           const dds_lm* lm_general_source, const dds_lm* lm_in_target,
                           const dds_lm* lm_general_target, unsigned workers,
                           dds_records** out) {
  if (auto s = require(bitext && lm_in_source && lm_general_source && lm_in_target &&
                           lm_general_target && out,
                       "bitext/lms/out")) {
    return s;
  }
  return guarded([&] {
    *out = new dds_records{ddsel::compute_ced(bitext->value, lm_in_source->value,
                                              lm_general_source->value, lm_in_target->value,
                                              lm_general_target->value, workers)};
  });
}

dds_status dds_records_save_tsv(const dds_records* records, const char* path) {
  if (auto s = require(records && path, "records/path")) return s;
  return guarded([&] { ddsel::save_scores_tsv(records->value, path); });
}

dds_status dds_records_load_tsv(const char* path, const dds_corpus* bitext, dds_records** out) {
  if (auto s = require(path && bitext && out, "path/bitext/out")) return s;
  return guarded(
      [&] { *out = new dds_records{ddsel::import_external_scores(path, bitext->value)}; });
}

uint64_t dds_records_count(const dds_records* records) {
  return records ? records->value.size() : 0;
}

void dds_records_free(dds_records* records) { delete records; }

dds_status dds_ranking_relevance(const dds_records* records, dds_ranking** out) {
  if (auto s = require(records && out, "records/out")) return s;
  return guarded([&] { *out = new dds_ranking{ddsel::rank_bitext(records->value)}; });
}

dds_status dds_ranking_random(const dds_corpus* bitext, uint64_t seed, dds_ranking** out) {
  if (auto s = require(bitext && out, "bitext/out")) return s;
  return guarded([&] { *out = new dds_ranking{ddsel::random_ranking(bitext->value, seed)}; });
}

dds_status dds_ranking_save(const dds_ranking* ranking, const char* path) {
  if (auto s = require(ranking && path, "ranking/path")) return s;
  return guarded([&] { ddsel::save_ranking(ranking->value, path); });
}

dds_status dds_ranking_load(const char* path, dds_ranking** out) {
  if (auto s = require(path && out, "path/out")) return s;
  return guarded([&] { *out = new dds_ranking{ddsel::load_ranking(path)}; });
}

void dds_ranking_free(dds_ranking* ranking) { delete ranking; }

/* ---- selection ---- */

dds_status dds_weights_compute(const dds_records* records, dds_weights** out) {
  if (auto s = require(records && out, "records/out")) return s;
  return guarded(
      [&] { *out = new dds_weights{ddsel::compute_sampling_weights(records->value)}; });
}

void dds_weights_free(dds_weights* weights) { delete weights; }

dds_status dds_manifests_build(const dds_ranking* ranking, const dds_corpus* bitext,
                               const dds_schedule* schedule, const dds_weights* weights_or_null,
                               dds_manifests** out) {
  if (auto s = require(ranking && bitext && schedule && out, "ranking/bitext/schedule/out")) {
    return s;
  }
  return guarded([&] {
    const auto sched = to_schedule(*schedule);
    auto manifests = ddsel::build_epoch_manifests(
        ranking->value, bitext->value, sched,
        weights_or_null ? &weights_or_null->value : nullptr);
    *out = new dds_manifests{std::move(manifests), sched};
  });
}

dds_status dds_manifests_save(const dds_manifests* manifests, const char* path) {
  if (auto s = require(manifests && path, "manifests/path")) return s;
  return guarded(
      [&] { ddsel::save_manifests_jsonl(manifests->value, manifests->schedule, path); });
}

dds_status dds_manifests_load(const char* path, dds_manifests** out) {
  if (auto s = require(path && out, "path/out")) return s;
  return guarded([&] {
    ddsel::SelectionSchedule sched;
    auto manifests = ddsel::load_manifests_jsonl(path, &sched);
    *out = new dds_manifests{std::move(manifests), sched};
  });
}

dds_status dds_manifests_emit_text(const dds_manifests* manifests, const dds_corpus* bitext,
                                   const char* dir) {
  if (auto s = require(manifests && bitext && dir, "manifests/bitext/dir")) return s;
  return guarded([&] { ddsel::emit_epoch_text(manifests->value, bitext->value, dir); });
}

uint32_t dds_manifests_epochs(const dds_manifests* manifests) {
  return manifests ? static_cast<uint32_t>(manifests->value.size()) : 0;
}

dds_status dds_relative_training_time(const dds_manifests* manifests, const dds_corpus* bitext,
                                      uint32_t baseline_epochs, double* out) {
  if (auto s = require(manifests && bitext && out, "manifests/bitext/out")) return s;
  return guarded([&] {
    *out = ddsel::relative_training_time(manifests->value, bitext->value, baseline_epochs);
  });
}

dds_status dds_manifests_summary_json(const dds_manifests* manifests, const dds_corpus* bitext,
                                      uint32_t baseline_epochs, char** json_out) {
  if (auto s = require(manifests && bitext && json_out, "manifests/bitext/out")) return s;
  return guarded([&] {
    *json_out =
        dup_string(ddsel::manifests_summary_json(manifests->value, bitext->value, baseline_epochs));
  });
}

void dds_manifests_free(dds_manifests* manifests) { delete manifests; }

/* ---- diagnostics ---- */

dds_status dds_coverage(const char* test_source_path, const dds_manifests* manifests,
                        const dds_corpus* bitext, uint64_t* test_types, uint64_t* unseen_types) {
  if (auto s = require(test_source_path && manifests && bitext && test_types && unseen_types,
                       "test/manifests/bitext/out")) {
    return s;
  }
  return guarded([&] {
    // The test file only needs one side; load it as its own source side.
    const auto test = ddsel::load_parallel(test_source_path, test_source_path, "test");
    const auto report = ddsel::unseen_word_types(ddsel::source_side(test), manifests->value,
                                                 bitext->value);
    *test_types = report.test_types;
    *unseen_types = report.unseen_types;
  });
}

dds_status dds_frequencies_json(const dds_manifests* manifests, char** json_out) {
  if (auto s = require(manifests && json_out, "manifests/out")) return s;
  return guarded([&] {
    *json_out = dup_string(ddsel::frequencies_json(ddsel::selection_frequencies(manifests->value)));
  });
}

dds_status dds_proxy_fit(const dds_manifests* manifests, uint32_t epoch,
                         const dds_corpus* bitext, const dds_corpus* dev, double* out) {
  if (auto s = require(manifests && bitext && dev && out, "manifests/bitext/dev/out")) return s;
  return guarded([&] {
    std::vector<std::uint64_t> selected;
    if (epoch == 0) {
      std::unordered_set<std::uint64_t> ids;
      for (const auto& m : manifests->value) ids.insert(m.pair_ids.begin(), m.pair_ids.end());
      selected.assign(ids.begin(), ids.end());
      std::sort(selected.begin(), selected.end());
    } else {
      if (epoch > manifests->value.size()) {
        throw ddsel::UsageError("epoch " + std::to_string(epoch) + " out of range (1.." +
                                std::to_string(manifests->value.size()) + ")");
      }
      selected = manifests->value[epoch - 1].pair_ids;
    }
    *out = ddsel::proxy_domain_fit(selected, bitext->value, dev->value);
  });
}

} /* extern "C" */
