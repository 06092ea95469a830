#ifndef DDSEL_SELECTION_HPP
#define DDSEL_SELECTION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/scoring.hpp"

namespace ddsel {

enum class SelectionMethod { kStatic, kSampling, kGradual };

SelectionMethod parse_method(const std::string& tag);  // "static" | "sampling" | "gradual"
std::string method_tag(SelectionMethod m);

enum class BudgetUnit { kTokens, kSentences };

// Parameters for one selection run. Static and sampling take a budget (token
// or sentence unit); gradual takes (alpha, beta, eta). Sampling needs a seed.
struct SelectionSchedule {
  SelectionMethod method = SelectionMethod::kStatic;
  std::uint32_t epochs = 16;
  std::optional<std::uint64_t> budget;  // static / sampling
  BudgetUnit budget_unit = BudgetUnit::kTokens;
  std::optional<double> alpha;          // gradual: relative start size, [0,1]
  std::optional<double> beta;           // gradual: retention rate, (0,1]
  std::optional<std::uint32_t> eta;     // gradual: epochs per step, >= 1
  std::optional<std::uint64_t> seed;    // sampling

  void validate() const;  // throws UsageError naming the offending field
};

// Scaled-inverted scores and normalized sampling weights, aligned with the
// record order they were computed from.
struct SamplingWeights {
  std::vector<std::uint64_t> pair_ids;
  std::vector<double> ced_prime;  // in [0,1], 1 at min ced
  std::vector<double> weight;     // sums to 1
};

struct EpochManifest {
  std::uint32_t epoch = 0;  // 1-based
  std::vector<std::uint64_t> pair_ids;  // ascending
  std::uint64_t source_tokens = 0;
  std::uint64_t cumulative_source_tokens = 0;
};

// Longest ranking prefix whose cumulative source tokens stay <= budget; the
// result is sorted ascending by pair id.
std::vector<std::uint64_t> select_static(const Ranking& ranking, const Corpus& bitext,
                                         std::uint64_t budget_tokens);

// Sentence-count variant of the prefix rule (top-n pairs of the ranking).
std::vector<std::uint64_t> select_top_n(const Ranking& ranking, std::uint64_t n);

// ced' = 1 - (ced - min)/(max - min); w = ced' / sum(ced'). When all scores
// are equal the weights are uniform.
SamplingWeights compute_sampling_weights(const std::vector<CedRecord>& records);

// Weighted sampling without replacement via exponential keys: each pair draws
// key -ln(u)/w from a generator derived from (seed, epoch) and the n smallest
// keys win. Zero-weight pairs only draw after every positive-weight pair.
std::vector<std::uint64_t> sample_epoch(const SamplingWeights& weights, std::uint64_t n,
                                        std::uint64_t seed, std::uint32_t epoch);

// Per-epoch sizes n(i) = round(alpha * population * beta^floor((i-1)/eta)),
// floored at 1.
std::vector<std::uint64_t> gradual_schedule(std::uint64_t population, double alpha, double beta,
                                            std::uint32_t eta, std::uint32_t epochs);

// Turns a ranking plus schedule into concrete per-epoch selections. Weights
// are required exactly when method == sampling.
std::vector<EpochManifest> build_epoch_manifests(const Ranking& ranking, const Corpus& bitext,
                                                 const SelectionSchedule& schedule,
                                                 const SamplingWeights* weights = nullptr);

// Tokens observed across all epochs relative to baseline_epochs passes over
// the complete bitext.
double relative_training_time(const std::vector<EpochManifest>& manifests, const Corpus& bitext,
                              std::uint32_t baseline_epochs = 16);

// JSON Lines, one object per epoch.
void save_manifests_jsonl(const std::vector<EpochManifest>& manifests,
                          const SelectionSchedule& schedule, const std::string& path);
std::vector<EpochManifest> load_manifests_jsonl(const std::string& path,
                                                SelectionSchedule* schedule_out = nullptr);

// Materializes epoch_<k>.src / epoch_<k>.tgt under dir.
void emit_epoch_text(const std::vector<EpochManifest>& manifests, const Corpus& bitext,
                     const std::string& dir);

// Summary JSON: per-epoch sizes plus relative training time.
std::string manifests_summary_json(const std::vector<EpochManifest>& manifests,
                                   const Corpus& bitext, std::uint32_t baseline_epochs = 16);

}  // namespace ddsel

#endif
