#include "core/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "json.hpp"

namespace ddsel {

namespace {

using json = nlohmann::ordered_json;

std::unordered_map<std::uint64_t, std::uint64_t> source_len_by_id(const Corpus& bitext) {
  std::unordered_map<std::uint64_t, std::uint64_t> len;
  len.reserve(bitext.size());
  for (const auto& p : bitext.pairs) len[p.id] = p.source_len();
  return len;
}

std::uint64_t sum_lengths(const std::vector<std::uint64_t>& ids,
                          const std::unordered_map<std::uint64_t, std::uint64_t>& len) {
  std::uint64_t total = 0;
  for (const auto id : ids) {
    auto it = len.find(id);
    if (it == len.end()) {
      throw DataError("pair id " + std::to_string(id) + " not present in the bitext");
    }
    total += it->second;
  }
  return total;
}

}  // namespace

SelectionMethod parse_method(const std::string& tag) {
  if (tag == "static") return SelectionMethod::kStatic;
  if (tag == "sampling") return SelectionMethod::kSampling;
  if (tag == "gradual") return SelectionMethod::kGradual;
  throw UsageError("unknown selection method: " + tag +
                   " (expected static, sampling, or gradual)");
}

std::string method_tag(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::kStatic:
      return "static";
    case SelectionMethod::kSampling:
      return "sampling";
    default:
      return "gradual";
  }
}

void SelectionSchedule::validate() const {
  if (epochs < 1) throw UsageError("--epochs must be >= 1");
  const bool is_gradual = method == SelectionMethod::kGradual;
  const bool is_sampling = method == SelectionMethod::kSampling;
  if (is_gradual) {
    if (!alpha) throw UsageError("--method gradual requires --alpha");
    if (!beta) throw UsageError("--method gradual requires --beta");
    if (!eta) throw UsageError("--method gradual requires --eta");
    if (budget) throw UsageError("--method gradual does not take a budget");
    if (seed) throw UsageError("--method gradual does not take --seed");
    if (*alpha < 0.0 || *alpha > 1.0) throw UsageError("--alpha must be in [0,1]");
    if (*beta <= 0.0 || *beta > 1.0) throw UsageError("--beta must be in (0,1]");
    if (*eta < 1) throw UsageError("--eta must be >= 1");
  } else {
    if (!budget) {
      throw UsageError("--method " + method_tag(method) +
                       " requires --budget-tokens or --budget-sentences");
    }
    if (alpha || beta || eta) {
      throw UsageError("--alpha/--beta/--eta apply only to --method gradual");
    }
    if (is_sampling && !seed) throw UsageError("--method sampling requires --seed");
    if (!is_sampling && seed) throw UsageError("--seed applies only to --method sampling");
  }
}

std::vector<std::uint64_t> select_static(const Ranking& ranking, const Corpus& bitext,
                                         std::uint64_t budget_tokens) {
  const auto len = source_len_by_id(bitext);
  std::vector<std::uint64_t> selected;
  std::uint64_t cum = 0;
  for (const auto id : ranking.pair_ids) {
    auto it = len.find(id);
    if (it == len.end()) {
      throw DataError("ranking references pair id " + std::to_string(id) +
                      " absent from the bitext");
    }
    if (cum + it->second > budget_tokens) break;
    cum += it->second;
    selected.push_back(id);
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

std::vector<std::uint64_t> select_top_n(const Ranking& ranking, std::uint64_t n) {
  const std::uint64_t take = std::min<std::uint64_t>(n, ranking.pair_ids.size());
  std::vector<std::uint64_t> selected(ranking.pair_ids.begin(),
                                      ranking.pair_ids.begin() + take);
  std::sort(selected.begin(), selected.end());
  return selected;
}

SamplingWeights compute_sampling_weights(const std::vector<CedRecord>& records) {
  if (records.empty()) throw UsageError("compute_sampling_weights on empty records");
  SamplingWeights w;
  w.pair_ids.reserve(records.size());
  w.ced_prime.reserve(records.size());
  double lo = records[0].ced, hi = records[0].ced;
  for (const auto& r : records) {
    lo = std::min(lo, r.ced);
    hi = std::max(hi, r.ced);
  }
  double sum_prime = 0;
  for (const auto& r : records) {
    // Degenerate all-equal case: uniform.
    const double prime = hi > lo ? 1.0 - (r.ced - lo) / (hi - lo) : 1.0;
    w.pair_ids.push_back(r.pair_id);
    w.ced_prime.push_back(prime);
    sum_prime += prime;
  }
  w.weight.reserve(records.size());
  for (const double prime : w.ced_prime) w.weight.push_back(prime / sum_prime);
  return w;
}

std::vector<std::uint64_t> sample_epoch(const SamplingWeights& weights, std::uint64_t n,
                                        std::uint64_t seed, std::uint32_t epoch) {
  const std::size_t population = weights.pair_ids.size();
  if (n > population) {
    throw UsageError("sample size " + std::to_string(n) + " exceeds population " +
                     std::to_string(population));
  }
  auto rng = make_rng(seed, epoch);
  struct Keyed {
    double key;
    double tiebreak;
    std::uint64_t id;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(population);
  for (std::size_t i = 0; i < population; ++i) {
    const double u = uniform01(rng);
    const double w = weights.weight[i];
    // Zero-weight pairs draw only after every positive-weight pair.
    const double key = w > 0 ? -std::log(u) / w : std::numeric_limits<double>::infinity();
    keyed.push_back({key, u, weights.pair_ids[i]});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.tiebreak != b.tiebreak) return a.tiebreak < b.tiebreak;
    return a.id < b.id;
  });
  std::vector<std::uint64_t> selected;
  selected.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) selected.push_back(keyed[i].id);
  std::sort(selected.begin(), selected.end());
  return selected;
}

std::vector<std::uint64_t> gradual_schedule(std::uint64_t population, double alpha, double beta,
                                            std::uint32_t eta, std::uint32_t epochs) {
  if (alpha < 0.0 || alpha > 1.0) throw UsageError("alpha must be in [0,1]");
  if (beta <= 0.0 || beta > 1.0) throw UsageError("beta must be in (0,1]");
  if (eta < 1) throw UsageError("eta must be >= 1");
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  std::vector<std::uint64_t> sizes;
  sizes.reserve(epochs);
  for (std::uint32_t i = 1; i <= epochs; ++i) {
    const std::uint32_t step = (i - 1) / eta;
    const double n = alpha * static_cast<double>(population) * std::pow(beta, step);
    // Half-up rounding of the exact decimal value; the relative nudge keeps
    // exact halves (e.g. 58824.5) from landing one ulp low after pow().
    const double rounded = std::floor(n + 0.5 + n * 1e-10);
    sizes.push_back(rounded < 1.0 ? 1 : static_cast<std::uint64_t>(rounded));
  }
  return sizes;
}

std::vector<EpochManifest> build_epoch_manifests(const Ranking& ranking, const Corpus& bitext,
                                                 const SelectionSchedule& schedule,
                                                 const SamplingWeights* weights) {
  schedule.validate();
  if (schedule.method == SelectionMethod::kSampling && weights == nullptr) {
    throw UsageError("sampling selection requires CED-derived weights");
  }
  if (schedule.method != SelectionMethod::kSampling && weights != nullptr) {
    throw UsageError("weights are only meaningful for --method sampling");
  }
  const auto len = source_len_by_id(bitext);

  std::vector<std::vector<std::uint64_t>> per_epoch(schedule.epochs);
  switch (schedule.method) {
    case SelectionMethod::kStatic: {
      const auto ids = schedule.budget_unit == BudgetUnit::kTokens
                           ? select_static(ranking, bitext, *schedule.budget)
                           : select_top_n(ranking, *schedule.budget);
      for (auto& e : per_epoch) e = ids;
      break;
    }
    case SelectionMethod::kSampling: {
      const std::uint64_t n =
          schedule.budget_unit == BudgetUnit::kSentences
              ? *schedule.budget
              : select_static(ranking, bitext, *schedule.budget).size();
      for (std::uint32_t e = 1; e <= schedule.epochs; ++e) {
        per_epoch[e - 1] = sample_epoch(*weights, n, *schedule.seed, e);
      }
      break;
    }
    case SelectionMethod::kGradual: {
      const auto sizes = gradual_schedule(ranking.pair_ids.size(), *schedule.alpha,
                                          *schedule.beta, *schedule.eta, schedule.epochs);
      for (std::uint32_t e = 0; e < schedule.epochs; ++e) {
        per_epoch[e] = select_top_n(ranking, sizes[e]);
      }
      break;
    }
  }

  std::vector<EpochManifest> manifests;
  manifests.reserve(schedule.epochs);
  std::uint64_t cumulative = 0;
  for (std::uint32_t e = 0; e < schedule.epochs; ++e) {
    EpochManifest m;
    m.epoch = e + 1;
    m.pair_ids = std::move(per_epoch[e]);
    m.source_tokens = sum_lengths(m.pair_ids, len);
    cumulative += m.source_tokens;
    m.cumulative_source_tokens = cumulative;
    manifests.push_back(std::move(m));
  }
  return manifests;
}

double relative_training_time(const std::vector<EpochManifest>& manifests, const Corpus& bitext,
                              std::uint32_t baseline_epochs) {
  if (manifests.empty()) throw UsageError("relative_training_time on empty manifests");
  if (baseline_epochs < 1) throw UsageError("baseline_epochs must be >= 1");
  if (bitext.total_source_tokens == 0) throw DataError("bitext has no source tokens");
  std::uint64_t observed = 0;
  for (const auto& m : manifests) observed += m.source_tokens;
  return static_cast<double>(observed) /
         (static_cast<double>(baseline_epochs) * static_cast<double>(bitext.total_source_tokens));
}

void save_manifests_jsonl(const std::vector<EpochManifest>& manifests,
                          const SelectionSchedule& schedule, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  for (const auto& m : manifests) {
    json obj;
    obj["epoch"] = m.epoch;
    obj["method"] = method_tag(schedule.method);
    obj["pair_ids"] = m.pair_ids;
    obj["source_tokens"] = m.source_tokens;
    json params;
    params["epochs"] = schedule.epochs;
    if (schedule.method == SelectionMethod::kGradual) {
      params["alpha"] = *schedule.alpha;
      params["beta"] = *schedule.beta;
      params["eta"] = *schedule.eta;
    } else {
      params["budget"] = *schedule.budget;
      params["unit"] = schedule.budget_unit == BudgetUnit::kTokens ? "tokens" : "sentences";
    }
    obj["params"] = params;
    if (schedule.seed) {
      obj["seed"] = *schedule.seed;
    } else {
      obj["seed"] = nullptr;
    }
    out << obj.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<EpochManifest> load_manifests_jsonl(const std::string& path,
                                                SelectionSchedule* schedule_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::vector<EpochManifest> manifests;
  std::string line;
  std::uint64_t cumulative = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("bad manifest line in " + path + ": " + e.what());
    }
    EpochManifest m;
    m.epoch = obj.at("epoch");
    m.pair_ids = obj.at("pair_ids").get<std::vector<std::uint64_t>>();
    m.source_tokens = obj.at("source_tokens");
    cumulative += m.source_tokens;
    m.cumulative_source_tokens = cumulative;
    if (first && schedule_out != nullptr) {
      SelectionSchedule s;
      s.method = parse_method(obj.at("method"));
      const auto& params = obj.at("params");
      s.epochs = params.at("epochs");
      if (s.method == SelectionMethod::kGradual) {
        s.alpha = params.at("alpha").get<double>();
        s.beta = params.at("beta").get<double>();
        s.eta = params.at("eta").get<std::uint32_t>();
      } else {
        s.budget = params.at("budget").get<std::uint64_t>();
        s.budget_unit =
            params.at("unit") == "sentences" ? BudgetUnit::kSentences : BudgetUnit::kTokens;
      }
      if (!obj.at("seed").is_null()) s.seed = obj.at("seed").get<std::uint64_t>();
      *schedule_out = s;
    }
    first = false;
    manifests.push_back(std::move(m));
  }
  if (manifests.empty()) throw DataError("no epochs in manifest file: " + path);
  return manifests;
}

void emit_epoch_text(const std::vector<EpochManifest>& manifests, const Corpus& bitext,
                     const std::string& dir) {
  std::unordered_map<std::uint64_t, const SentencePair*> by_id;
  by_id.reserve(bitext.size());
  for (const auto& p : bitext.pairs) by_id[p.id] = &p;
  for (const auto& m : manifests) {
    const std::string base = dir + "/epoch_" + std::to_string(m.epoch);
    std::ofstream src(base + ".src", std::ios::binary);
    std::ofstream tgt(base + ".tgt", std::ios::binary);
    if (!src || !tgt) throw IoError("cannot write epoch files under " + dir);
    for (const auto id : m.pair_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw DataError("manifest references pair id " + std::to_string(id) +
                        " absent from the bitext");
      }
      const SentencePair& p = *it->second;
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
    }
  }
}

std::string manifests_summary_json(const std::vector<EpochManifest>& manifests,
                                   const Corpus& bitext, std::uint32_t baseline_epochs) {
  json summary;
  summary["epochs"] = manifests.size();
  json sentences = json::array();
  json tokens = json::array();
  std::uint64_t observed = 0;
  for (const auto& m : manifests) {
    sentences.push_back(m.pair_ids.size());
    tokens.push_back(m.source_tokens);
    observed += m.source_tokens;
  }
  summary["per_epoch_sentences"] = sentences;
  summary["per_epoch_source_tokens"] = tokens;
  summary["total_source_tokens_observed"] = observed;
  summary["baseline_epochs"] = baseline_epochs;
  summary["relative_training_time"] = relative_training_time(manifests, bitext, baseline_epochs);
  return summary.dump(2);
}

}  // namespace ddsel
