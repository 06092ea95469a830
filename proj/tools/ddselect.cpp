// ddselect command-line front end. Pipeline stages mirror the data-selection
// workflow: prep -> train-lm -> rank -> select -> stats / eval-proxy. Each run
// writes a config.snapshot.json next to its artifacts so every output
// directory is self-describing. Diagnostics go to stderr; data only to files.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ddselect.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct ToolError {
  int code;
  std::string message;
};

void check(dds_status status) {
  if (status != DDS_OK) throw ToolError{static_cast<int>(status), dds_last_error()};
}

template <typename T>
using Handle = std::unique_ptr<T, void (*)(T*)>;

Handle<dds_corpus> load_corpus(const std::string& src, const std::string& tgt,
                               const std::string& name) {
  dds_corpus* c = nullptr;
  check(dds_corpus_load(src.c_str(), tgt.c_str(), name.c_str(), &c));
  return {c, dds_corpus_free};
}

Handle<dds_lm> load_lm(const std::string& path) {
  dds_lm* lm = nullptr;
  check(dds_lm_load_arpa(path.c_str(), &lm));
  return {lm, dds_lm_free};
}

std::string owned_string(char* s) {
  std::string out = s ? s : "";
  dds_string_free(s);
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ToolError{DDS_ERR_IO, "cannot write file: " + path};
  out << content;
  if (!out) throw ToolError{DDS_ERR_IO, "write failed: " + path};
}

void write_snapshot(const std::string& out_dir, const std::string& command, json params) {
  json snapshot;
  snapshot["tool"] = dds_version();
  snapshot["command"] = command;
  snapshot["params"] = std::move(params);
  write_file(out_dir + "/config.snapshot.json", snapshot.dump(2) + "\n");
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ToolError{DDS_ERR_IO, "cannot create output directory " + out_dir};
}

// ---- subcommand option blocks ----

struct PrepOpts {
  std::string in_src, in_tgt, gen_src, gen_tgt, out_dir;
  std::size_t max_len = 50;
  bool no_lowercase = false;
  std::int64_t sample_tokens = -1;
  std::int64_t seed = -1;
};

int run_prep(const PrepOpts& o) {
  ensure_out_dir(o.out_dir);

  auto in_raw = load_corpus(o.in_src, o.in_tgt, "in-domain");
  auto gen_raw = load_corpus(o.gen_src, o.gen_tgt, "general");

  dds_corpus* p = nullptr;
  check(dds_corpus_preprocess(in_raw.get(), o.max_len, o.no_lowercase ? 0 : 1, &p));
  Handle<dds_corpus> in_domain{p, dds_corpus_free};
  check(dds_corpus_preprocess(gen_raw.get(), o.max_len, o.no_lowercase ? 0 : 1, &p));
  Handle<dds_corpus> general{p, dds_corpus_free};

  const std::uint64_t sample_tokens = o.sample_tokens >= 0
                                          ? static_cast<std::uint64_t>(o.sample_tokens)
                                          : dds_corpus_source_tokens(in_domain.get());
  check(dds_corpus_sample(general.get(), sample_tokens, static_cast<std::uint64_t>(o.seed), &p));
  Handle<dds_corpus> sample{p, dds_corpus_free};

  check(dds_corpus_write(in_domain.get(), (o.out_dir + "/in_domain.src").c_str(),
                         (o.out_dir + "/in_domain.tgt").c_str(),
                         (o.out_dir + "/in_domain.ids").c_str()));
  check(dds_corpus_write(general.get(), (o.out_dir + "/general.src").c_str(),
                         (o.out_dir + "/general.tgt").c_str(),
                         (o.out_dir + "/general.ids").c_str()));
  check(dds_corpus_write(sample.get(), (o.out_dir + "/general_sample.src").c_str(),
                         (o.out_dir + "/general_sample.tgt").c_str(),
                         (o.out_dir + "/general_sample.ids").c_str()));

  write_snapshot(o.out_dir, "prep",
                 {{"in-domain-src", o.in_src},
                  {"in-domain-tgt", o.in_tgt},
                  {"general-src", o.gen_src},
                  {"general-tgt", o.gen_tgt},
                  {"max-len", o.max_len},
                  {"lowercase", !o.no_lowercase},
                  {"sample-tokens", sample_tokens},
                  {"seed", o.seed}});

  std::cerr << "prep: in-domain " << dds_corpus_num_pairs(in_domain.get()) << " pairs ("
            << dds_corpus_source_tokens(in_domain.get()) << " src tokens), general "
            << dds_corpus_num_pairs(general.get()) << " pairs, sample "
            << dds_corpus_num_pairs(sample.get()) << " pairs ("
            << dds_corpus_source_tokens(sample.get()) << " src tokens)\n";
  return 0;
}

struct TrainLmOpts {
  std::string in_src, in_tgt, gen_src, gen_tgt, out_dir;
  std::uint32_t order = 5;
  std::uint32_t min_count = 2;
  std::string smoothing = "kn";
};

int run_train_lm(const TrainLmOpts& o) {
  ensure_out_dir(o.out_dir);

  auto in_domain = load_corpus(o.in_src, o.in_tgt, "in-domain");
  auto general = load_corpus(o.gen_src, o.gen_tgt, "general-sample");

  // The vocabulary is restricted to frequent in-domain words; the general LMs
  // share it so all four models score over the same event space.
  dds_vocab* v = nullptr;
  check(dds_vocab_build(in_domain.get(), DDS_SIDE_SOURCE, o.min_count, &v));
  Handle<dds_vocab> vocab_src{v, dds_vocab_free};
  check(dds_vocab_build(in_domain.get(), DDS_SIDE_TARGET, o.min_count, &v));
  Handle<dds_vocab> vocab_tgt{v, dds_vocab_free};

  struct Job {
    const dds_corpus* corpus;
    dds_side side;
    const dds_vocab* vocab;
    const char* file;
  };
  const Job jobs[] = {
      {in_domain.get(), DDS_SIDE_SOURCE, vocab_src.get(), "lm_if.arpa"},
      {general.get(), DDS_SIDE_SOURCE, vocab_src.get(), "lm_gf.arpa"},
      {in_domain.get(), DDS_SIDE_TARGET, vocab_tgt.get(), "lm_ie.arpa"},
      {general.get(), DDS_SIDE_TARGET, vocab_tgt.get(), "lm_ge.arpa"},
  };
  for (const auto& job : jobs) {
    dds_lm* lm = nullptr;
    check(dds_lm_train(job.corpus, job.side, job.vocab, o.order, o.smoothing.c_str(), &lm));
    Handle<dds_lm> handle{lm, dds_lm_free};
    const std::string path = o.out_dir + "/" + job.file;
    check(dds_lm_save_arpa(handle.get(), path.c_str()));
    std::cerr << "train-lm: wrote " << path << "\n";
  }

  write_snapshot(o.out_dir, "train-lm",
                 {{"in-domain-src", o.in_src},
                  {"in-domain-tgt", o.in_tgt},
                  {"general-src", o.gen_src},
                  {"general-tgt", o.gen_tgt},
                  {"order", o.order},
                  {"min-count", o.min_count},
                  {"smoothing", o.smoothing}});
  return 0;
}

struct RankOpts {
  std::string gen_src, gen_tgt, out_dir;
  std::string lm_dir;
  std::string import_scores;
  bool random = false;
  std::int64_t seed = -1;
  unsigned workers = 1;
};

int run_rank(const RankOpts& o) {
  ensure_out_dir(o.out_dir);
  auto bitext = load_corpus(o.gen_src, o.gen_tgt, "general");

  Handle<dds_ranking> ranking{nullptr, dds_ranking_free};
  Handle<dds_records> records{nullptr, dds_records_free};

  if (o.random) {
    if (o.seed < 0) {
      throw ToolError{DDS_ERR_USAGE, "--random requires --seed"};
    }
    dds_ranking* r = nullptr;
    check(dds_ranking_random(bitext.get(), static_cast<std::uint64_t>(o.seed), &r));
    ranking.reset(r);
  } else {
    dds_records* recs = nullptr;
    if (!o.import_scores.empty()) {
      check(dds_records_load_tsv(o.import_scores.c_str(), bitext.get(), &recs));
    } else {
      if (o.lm_dir.empty()) {
        throw ToolError{DDS_ERR_USAGE,
                        "rank requires --lm-dir (or --import-scores / --random)"};
      }
      auto lm_if = load_lm(o.lm_dir + "/lm_if.arpa");
      auto lm_gf = load_lm(o.lm_dir + "/lm_gf.arpa");
      auto lm_ie = load_lm(o.lm_dir + "/lm_ie.arpa");
      auto lm_ge = load_lm(o.lm_dir + "/lm_ge.arpa");
      check(dds_ced_compute(bitext.get(), lm_if.get(), lm_gf.get(), lm_ie.get(), lm_ge.get(),
                            o.workers, &recs));
    }
    records.reset(recs);
    check(dds_records_save_tsv(records.get(), (o.out_dir + "/scores.tsv").c_str()));
    dds_ranking* r = nullptr;
    check(dds_ranking_relevance(records.get(), &r));
    ranking.reset(r);
  }

  check(dds_ranking_save(ranking.get(), (o.out_dir + "/ranking.txt").c_str()));

  write_snapshot(o.out_dir, "rank",
                 {{"general-src", o.gen_src},
                  {"general-tgt", o.gen_tgt},
                  {"lm-dir", o.lm_dir},
                  {"import-scores", o.import_scores},
                  {"random", o.random},
                  {"seed", o.seed},
                  {"workers", o.workers}});
  std::cerr << "rank: wrote " << o.out_dir << "/ranking.txt\n";
  return 0;
}

struct SelectOpts {
  std::string ranking_path, gen_src, gen_tgt, scores_path, out_dir;
  std::string method;
  std::int64_t budget_tokens = -1;
  std::int64_t budget_sentences = -1;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  std::int32_t eta = -1;
  std::uint32_t epochs = 16;
  std::int64_t seed = -1;
  std::uint32_t baseline_epochs = 16;
  bool emit_text = false;
};

int run_select(const SelectOpts& o) {
  ensure_out_dir(o.out_dir);
  auto bitext = load_corpus(o.gen_src, o.gen_tgt, "general");

  dds_ranking* r = nullptr;
  check(dds_ranking_load(o.ranking_path.c_str(), &r));
  Handle<dds_ranking> ranking{r, dds_ranking_free};

  Handle<dds_weights> weights{nullptr, dds_weights_free};
  if (o.method == "sampling") {
    if (o.scores_path.empty()) {
      throw ToolError{DDS_ERR_USAGE, "--method sampling requires --scores (the scores TSV)"};
    }
    dds_records* recs = nullptr;
    check(dds_records_load_tsv(o.scores_path.c_str(), bitext.get(), &recs));
    Handle<dds_records> records{recs, dds_records_free};
    dds_weights* w = nullptr;
    check(dds_weights_compute(records.get(), &w));
    weights.reset(w);
  }

  dds_schedule schedule{};
  schedule.method = o.method.c_str();
  schedule.epochs = o.epochs;
  schedule.budget_tokens = o.budget_tokens;
  schedule.budget_sentences = o.budget_sentences;
  schedule.alpha = o.alpha;
  schedule.beta = o.beta;
  schedule.eta = o.eta;
  schedule.seed = o.seed;

  dds_manifests* m = nullptr;
  check(dds_manifests_build(ranking.get(), bitext.get(), &schedule, weights.get(), &m));
  Handle<dds_manifests> manifests{m, dds_manifests_free};

  check(dds_manifests_save(manifests.get(), (o.out_dir + "/manifests.jsonl").c_str()));
  char* summary = nullptr;
  check(dds_manifests_summary_json(manifests.get(), bitext.get(), o.baseline_epochs, &summary));
  const std::string summary_str = owned_string(summary);
  write_file(o.out_dir + "/summary.json", summary_str + "\n");

  if (o.emit_text) {
    check(dds_manifests_emit_text(manifests.get(), bitext.get(), o.out_dir.c_str()));
  }

  const auto parsed = json::parse(summary_str);
  bool any_empty = false;
  for (const auto& n : parsed["per_epoch_sentences"]) {
    if (n.get<std::uint64_t>() == 0) any_empty = true;
  }
  if (any_empty) std::cerr << "select: warning: at least one epoch selects zero pairs\n";

  write_snapshot(o.out_dir, "select",
                 {{"ranking", o.ranking_path},
                  {"general-src", o.gen_src},
                  {"general-tgt", o.gen_tgt},
                  {"scores", o.scores_path},
                  {"method", o.method},
                  {"budget-tokens", o.budget_tokens},
                  {"budget-sentences", o.budget_sentences},
                  {"alpha", o.alpha},
                  {"beta", o.beta},
                  {"eta", o.eta},
                  {"epochs", o.epochs},
                  {"seed", o.seed},
                  {"baseline-epochs", o.baseline_epochs},
                  {"emit-text", o.emit_text}});
  std::cerr << "select: wrote " << o.out_dir << "/manifests.jsonl ("
            << dds_manifests_epochs(manifests.get()) << " epochs)\n";
  return 0;
}

struct StatsOpts {
  std::vector<std::string> manifest_paths;
  std::string gen_src, gen_tgt, test_src, out_dir;
  std::uint32_t baseline_epochs = 16;
  bool csv = false;
};

int run_stats(const StatsOpts& o) {
  ensure_out_dir(o.out_dir);
  auto bitext = load_corpus(o.gen_src, o.gen_tgt, "general");

  json coverage = json::array();
  json stats = json::array();
  std::string coverage_csv = "method,test_types,unseen_types\n";
  std::string table = "method                test_types  unseen_types\n";

  for (const auto& path : o.manifest_paths) {
    dds_manifests* m = nullptr;
    check(dds_manifests_load(path.c_str(), &m));
    Handle<dds_manifests> manifests{m, dds_manifests_free};
    const std::string label = fs::path(path).stem().string();

    double rel_time = 0;
    check(dds_relative_training_time(manifests.get(), bitext.get(), o.baseline_epochs,
                                     &rel_time));
    json entry;
    entry["manifest"] = path;
    entry["label"] = label;
    entry["epochs"] = dds_manifests_epochs(manifests.get());
    entry["relative_training_time"] = rel_time;
    stats.push_back(entry);

    char* freq = nullptr;
    check(dds_frequencies_json(manifests.get(), &freq));
    write_file(o.out_dir + "/frequencies_" + label + ".json", owned_string(freq) + "\n");

    if (!o.test_src.empty()) {
      std::uint64_t test_types = 0, unseen = 0;
      check(dds_coverage(o.test_src.c_str(), manifests.get(), bitext.get(), &test_types,
                         &unseen));
      json c;
      c["method"] = label;
      c["test_types"] = test_types;
      c["unseen_types"] = unseen;
      coverage.push_back(c);
      coverage_csv += label + "," + std::to_string(test_types) + "," + std::to_string(unseen) +
                      "\n";
      std::string padded = label;
      if (padded.size() < 22) padded.resize(22, ' ');
      std::string tt = std::to_string(test_types);
      if (tt.size() < 12) tt.resize(12, ' ');
      table += padded + tt + std::to_string(unseen) + "\n";
    }
  }

  write_file(o.out_dir + "/stats.json", stats.dump(2) + "\n");
  if (!o.test_src.empty()) {
    write_file(o.out_dir + "/coverage.json", coverage.dump(2) + "\n");
    write_file(o.out_dir + "/coverage.txt", table);
    if (o.csv) write_file(o.out_dir + "/coverage.csv", coverage_csv);
  }

  write_snapshot(o.out_dir, "stats",
                 {{"manifests", o.manifest_paths},
                  {"general-src", o.gen_src},
                  {"general-tgt", o.gen_tgt},
                  {"test-src", o.test_src},
                  {"baseline-epochs", o.baseline_epochs},
                  {"csv", o.csv}});
  std::cerr << "stats: wrote " << o.out_dir << "/stats.json\n";
  return 0;
}

struct EvalProxyOpts {
  std::string manifest_path, gen_src, gen_tgt, dev_src, dev_tgt, out_dir;
  std::uint32_t epoch = 0;  // 0 = union of all epochs
};

int run_eval_proxy(const EvalProxyOpts& o) {
  ensure_out_dir(o.out_dir);
  auto bitext = load_corpus(o.gen_src, o.gen_tgt, "general");
  auto dev = load_corpus(o.dev_src, o.dev_tgt, "dev");

  dds_manifests* m = nullptr;
  check(dds_manifests_load(o.manifest_path.c_str(), &m));
  Handle<dds_manifests> manifests{m, dds_manifests_free};

  double fit = 0;
  check(dds_proxy_fit(manifests.get(), o.epoch, bitext.get(), dev.get(), &fit));

  json result;
  result["manifest"] = o.manifest_path;
  result["epoch"] = o.epoch == 0 ? json(nullptr) : json(o.epoch);
  result["selection"] = o.epoch == 0 ? "union" : "epoch";
  result["proxy_fit_nats_per_token"] = fit;
  write_file(o.out_dir + "/proxy_fit.json", result.dump(2) + "\n");

  write_snapshot(o.out_dir, "eval-proxy",
                 {{"manifest", o.manifest_path},
                  {"general-src", o.gen_src},
                  {"general-tgt", o.gen_tgt},
                  {"dev-src", o.dev_src},
                  {"dev-tgt", o.dev_tgt},
                  {"epoch", o.epoch}});
  std::cerr << "eval-proxy: " << fit << " nats/token\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ddselect: bilingual cross-entropy-difference data selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dds_version());

  PrepOpts prep;
  auto* prep_cmd = app.add_subcommand("prep", "Load, preprocess, and sample corpora");
  prep_cmd->add_option("--in-domain-src", prep.in_src)->required();
  prep_cmd->add_option("--in-domain-tgt", prep.in_tgt)->required();
  prep_cmd->add_option("--general-src", prep.gen_src)->required();
  prep_cmd->add_option("--general-tgt", prep.gen_tgt)->required();
  prep_cmd->add_option("--max-len", prep.max_len, "Length filter (tokens, per side)");
  prep_cmd->add_flag("--no-lowercase", prep.no_lowercase);
  prep_cmd->add_option("--sample-tokens", prep.sample_tokens,
                       "General-sample source-token budget (default: in-domain size)");
  prep_cmd->add_option("--seed", prep.seed)->required();
  prep_cmd->add_option("--out-dir", prep.out_dir)->required();

  TrainLmOpts train;
  auto* train_cmd = app.add_subcommand("train-lm", "Train the four selection LMs");
  train_cmd->add_option("--in-domain-src", train.in_src)->required();
  train_cmd->add_option("--in-domain-tgt", train.in_tgt)->required();
  train_cmd->add_option("--general-src", train.gen_src)->required();
  train_cmd->add_option("--general-tgt", train.gen_tgt)->required();
  train_cmd->add_option("--order", train.order);
  train_cmd->add_option("--min-count", train.min_count);
  train_cmd->add_option("--smoothing", train.smoothing, "kn or wb");
  train_cmd->add_option("--out-dir", train.out_dir)->required();

  RankOpts rank;
  auto* rank_cmd = app.add_subcommand("rank", "Score and rank the bitext");
  rank_cmd->add_option("--general-src", rank.gen_src)->required();
  rank_cmd->add_option("--general-tgt", rank.gen_tgt)->required();
  rank_cmd->add_option("--lm-dir", rank.lm_dir, "Directory with lm_{if,gf,ie,ge}.arpa");
  rank_cmd->add_option("--import-scores", rank.import_scores, "Externally computed scores TSV");
  rank_cmd->add_flag("--random", rank.random, "Random ranking (ablation)");
  rank_cmd->add_option("--seed", rank.seed);
  rank_cmd->add_option("--workers", rank.workers);
  rank_cmd->add_option("--out-dir", rank.out_dir)->required();

  SelectOpts select;
  auto* select_cmd = app.add_subcommand("select", "Build per-epoch training manifests");
  select_cmd->add_option("--ranking", select.ranking_path)->required();
  select_cmd->add_option("--general-src", select.gen_src)->required();
  select_cmd->add_option("--general-tgt", select.gen_tgt)->required();
  select_cmd->add_option("--scores", select.scores_path, "Scores TSV (sampling weights)");
  select_cmd->add_option("--method", select.method, "static, sampling, or gradual")->required();
  select_cmd->add_option("--budget-tokens", select.budget_tokens);
  select_cmd->add_option("--budget-sentences", select.budget_sentences);
  select_cmd->add_option("--alpha", select.alpha);
  select_cmd->add_option("--beta", select.beta);
  select_cmd->add_option("--eta", select.eta);
  select_cmd->add_option("--epochs", select.epochs);
  select_cmd->add_option("--seed", select.seed);
  select_cmd->add_option("--baseline-epochs", select.baseline_epochs);
  select_cmd->add_flag("--emit-text", select.emit_text);
  select_cmd->add_option("--out-dir", select.out_dir)->required();

  StatsOpts stats;
  auto* stats_cmd = app.add_subcommand("stats", "Coverage, frequency, and training-time reports");
  stats_cmd->add_option("--manifests", stats.manifest_paths)->required()->expected(-1);
  stats_cmd->add_option("--general-src", stats.gen_src)->required();
  stats_cmd->add_option("--general-tgt", stats.gen_tgt)->required();
  stats_cmd->add_option("--test-src", stats.test_src, "Test source file for coverage");
  stats_cmd->add_option("--baseline-epochs", stats.baseline_epochs);
  stats_cmd->add_flag("--csv", stats.csv);
  stats_cmd->add_option("--out-dir", stats.out_dir)->required();

  EvalProxyOpts eval;
  auto* eval_cmd = app.add_subcommand("eval-proxy", "Target-side LM fit of a selection");
  eval_cmd->add_option("--manifest", eval.manifest_path)->required();
  eval_cmd->add_option("--general-src", eval.gen_src)->required();
  eval_cmd->add_option("--general-tgt", eval.gen_tgt)->required();
  eval_cmd->add_option("--dev-src", eval.dev_src)->required();
  eval_cmd->add_option("--dev-tgt", eval.dev_tgt)->required();
  eval_cmd->add_option("--epoch", eval.epoch, "1-based epoch; 0 evaluates the union");
  eval_cmd->add_option("--out-dir", eval.out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return DDS_ERR_USAGE;
  }

  try {
    if (prep_cmd->parsed()) return run_prep(prep);
    if (train_cmd->parsed()) return run_train_lm(train);
    if (rank_cmd->parsed()) return run_rank(rank);
    if (select_cmd->parsed()) return run_select(select);
    if (stats_cmd->parsed()) return run_stats(stats);
    if (eval_cmd->parsed()) return run_eval_proxy(eval);
  } catch (const ToolError& e) {
    const char* kind = e.code == DDS_ERR_USAGE ? "usage error"
                       : e.code == DDS_ERR_IO  ? "io error"
                                               : "data error";
    std::cerr << kind << ": " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return DDS_ERR_DATA;
  }
  return 0;
}
