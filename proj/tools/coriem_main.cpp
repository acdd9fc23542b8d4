#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coriem/coriem.h"

namespace {

namespace fs = std::filesystem;

struct Failure {
  coriem_status status;
};

void check(coriem_status s) {
  if (s != CORIEM_OK) throw Failure{s};
}

struct ConfigDeleter {
  void operator()(coriem_config* p) const { coriem_config_destroy(p); }
};
struct DatasetDeleter {
  void operator()(coriem_dataset* p) const { coriem_dataset_destroy(p); }
};
struct ModelDeleter {
  void operator()(coriem_model* p) const { coriem_model_destroy(p); }
};
struct ReportDeleter {
  void operator()(coriem_report* p) const { coriem_report_destroy(p); }
};

using Config = std::unique_ptr<coriem_config, ConfigDeleter>;
using Dataset = std::unique_ptr<coriem_dataset, DatasetDeleter>;
using Model = std::unique_ptr<coriem_model, ModelDeleter>;
using Report = std::unique_ptr<coriem_report, ReportDeleter>;

Config new_config() {
  coriem_config* c = nullptr;
  check(coriem_config_create(&c));
  return Config(c);
}

std::string get(const coriem_config* c, const char* key) {
  std::size_t needed = 0;
  check(coriem_config_get(c, key, nullptr, 0, &needed));
  std::string out(needed, '\0');
  check(coriem_config_get(c, key, out.data(), out.size(), &needed));
  out.resize(needed - 1);
  return out;
}

fs::path out_dir(const coriem_config* c) {
  auto dir = get(c, "out-dir");
  if (dir.empty()) {
    const char* env = std::getenv("CORIEM_OUT_DIR");
    dir = env != nullptr && *env != '\0' ? env : "coriem_out";
  }
  return dir;
}

Dataset load_data(const coriem_config* c) {
  const auto path = get(c, "data");
  if (path.empty()) {
    std::fprintf(stderr, "error: --data is required\n");
    throw Failure{CORIEM_ERR_USAGE};
  }
  coriem_dataset* ds = nullptr;
  check(coriem_dataset_load(path.c_str(), &ds));
  return Dataset(ds);
}

// Config flags shared by train, evaluate and curvature. Values are kept as
// strings and applied after parsing so that flags override the config file.
class ConfigFlags {
 public:
  void attach(CLI::App* cmd) {
    cmd->add_option("--config", file_, "JSON file of configuration values (flags take precedence)");
    const auto defaults = new_config();
    const std::size_t n = coriem_config_key_count();
    for (std::size_t i = 0; i < n; ++i) {
      const char* name = nullptr;
      const char* help = nullptr;
      const char* choices = nullptr;
      coriem_key_kind kind{};
      check(coriem_config_key_info(i, &name, &help, &kind, &choices));
      const std::string flag = std::string("--") + name;
      if (kind == CORIEM_KEY_BOOL) {
        flags_[name] = cmd->add_flag(flag)->description(help);
        continue;
      }
      auto* opt = cmd->add_option(flag, values_[name], help);
      opt->default_str(get(defaults.get(), name));
      if (kind == CORIEM_KEY_CHOICE) opt->type_name(std::string("{") + choices + "}");
      if (kind == CORIEM_KEY_INT) opt->type_name("INT");
      if (kind == CORIEM_KEY_REAL) opt->type_name("REAL");
      options_[name] = opt;
    }
  }

  // Applies the config file and then every flag given on the command line.
  void apply(coriem_config* c) const {
    if (!file_.empty()) check(coriem_config_apply_json_file(c, file_.c_str()));
    for (const auto& [name, opt] : flags_) {
      if (opt->count() > 0) check(coriem_config_set(c, name.c_str(), "true"));
    }
    for (const auto& [name, value] : values_) {
      if (options_.at(name)->count() > 0) check(coriem_config_set(c, name.c_str(), value.c_str()));
    }
  }

  Config build() const {
    auto c = new_config();
    apply(c.get());
    return c;
  }

 private:
  std::string file_;
  std::map<std::string, std::string> values_;
  std::map<std::string, CLI::Option*> flags_;
  std::map<std::string, CLI::Option*> options_;
};

void print_progress(const coriem_progress* row, void* user_data) {
  auto* state = static_cast<std::pair<int, double>*>(user_data);
  if (row->interval == 0 && row->epoch != state->first && state->first >= 0) {
    std::fprintf(stderr, "epoch %d  last loss %.6g\n", state->first, state->second);
  }
  state->first = row->epoch;
  state->second = row->loss;
}

int cmd_train(const ConfigFlags& flags) {
  const auto c = flags.build();
  const auto ds = load_data(c.get());
  const auto dir = out_dir(c.get());
  fs::create_directories(dir);
  std::pair<int, double> state{-1, 0.0};
  coriem_model* raw = nullptr;
  check(coriem_train(c.get(), ds.get(), (dir / "curvature").c_str(), print_progress, &state, &raw));
  const Model model(raw);
  if (state.first >= 0) std::fprintf(stderr, "epoch %d  last loss %.6g\n", state.first, state.second);
  const auto ckpt = dir / "checkpoint.json";
  const auto log = dir / "train_log.csv";
  check(coriem_model_save(model.get(), ckpt.c_str()));
  check(coriem_model_write_log(model.get(), log.c_str()));
  char digest[17];
  check(coriem_model_digest(model.get(), digest));
  std::printf("checkpoint %s\ndigest %s\nlog %s\n", ckpt.c_str(), digest, log.c_str());
  return 0;
}

int cmd_evaluate(const ConfigFlags& flags, const std::string& split) {
  const auto user = flags.build();
  auto path = get(user.get(), "checkpoint");
  if (path.empty()) path = (out_dir(user.get()) / "checkpoint.json").string();
  coriem_model* raw = nullptr;
  check(coriem_model_load(path.c_str(), &raw));
  const Model model(raw);

  coriem_config* merged_raw = nullptr;
  check(coriem_model_config(model.get(), &merged_raw));
  const Config merged(merged_raw);
  flags.apply(merged.get());
  const auto ds = load_data(merged.get());
  check(coriem_model_check_compatible(model.get(), ds.get(), merged.get()));

  coriem_report* rep_raw = nullptr;
  const auto target = split == "valid" ? CORIEM_TARGET_VALID : CORIEM_TARGET_TEST;
  check(coriem_evaluate(model.get(), ds.get(), merged.get(), target, &rep_raw));
  const Report rep(rep_raw);

  double mrr = 0.0;
  std::size_t events = 0, skipped = 0;
  check(coriem_report_summary(rep.get(), &mrr, &events, &skipped));
  std::printf("split %s  events %zu  skipped %zu\n", split.c_str(), events, skipped);
  std::printf("%-10s %.6f\n", "MRR", mrr);
  for (std::size_t i = 0; i < coriem_report_k_count(rep.get()); ++i) {
    int k = 0;
    double r = 0.0;
    check(coriem_report_recall(rep.get(), i, &k, &r));
    std::printf("%-10s %.6f\n", ("Recall@" + std::to_string(k)).c_str(), r);
  }
  const auto dir = out_dir(merged.get());
  const auto summary = dir / "report.csv";
  const auto ranks = dir / "ranks.csv";
  check(coriem_report_write(rep.get(), summary.c_str(), ranks.c_str()));
  std::printf("report %s\n", summary.c_str());
  return 0;
}

int cmd_curvature(const ConfigFlags& flags) {
  const auto c = flags.build();
  const auto ds = load_data(c.get());
  const auto dir = out_dir(c.get());
  const auto cache = dir / "curvature";
  const auto summary = dir / "curvature_summary.csv";
  std::size_t entries = 0;
  check(coriem_curvature(c.get(), ds.get(), cache.c_str(), summary.c_str(), &entries));
  std::printf("%zu cache entries under %s\nsummary %s\n", entries, cache.c_str(), summary.c_str());
  return 0;
}

struct SynthArgs {
  std::uint32_t users = 50;
  std::uint32_t items = 50;
  std::uint32_t clusters = 5;
  std::size_t events = 5000;
  double noise = 0.1;
  std::size_t features = 0;
  std::uint64_t seed = 0;
  std::string output;
  std::string out_dir;
};

int cmd_synth(const SynthArgs& a) {
  coriem_dataset* raw = nullptr;
  check(coriem_dataset_synth(a.users, a.items, a.clusters, a.events, a.noise, a.features, a.seed, &raw));
  const Dataset ds(raw);
  fs::path path = a.output;
  if (path.empty()) {
    auto c = new_config();
    if (!a.out_dir.empty()) check(coriem_config_set(c.get(), "out-dir", a.out_dir.c_str()));
    path = out_dir(c.get()) / "synth.csv";
  }
  check(coriem_dataset_save(ds.get(), path.c_str()));
  std::printf("%s\n", path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-evolving curvature representation learning on interaction event logs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", coriem_version());

  ConfigFlags train_flags, eval_flags, curv_flags;
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint and training log");
  train_flags.attach(train);

  std::string split = "test";
  auto* evaluate = app.add_subcommand("evaluate", "rank held-out events with a trained checkpoint");
  eval_flags.attach(evaluate);
  evaluate->add_option("--split", split, "segment to evaluate")
      ->check(CLI::IsMember({"valid", "test"}))
      ->default_str("test");

  auto* curvature = app.add_subcommand("curvature", "precompute per-interval curvature caches");
  curv_flags.attach(curvature);

  SynthArgs s;
  auto* synth = app.add_subcommand("synth", "generate a planted-cluster event log");
  synth->add_option("--users", s.users, "number of users")->default_str("50");
  synth->add_option("--items", s.items, "number of items")->default_str("50");
  synth->add_option("--clusters", s.clusters, "number of planted clusters")->default_str("5");
  synth->add_option("--events", s.events, "number of events")->default_str("5000");
  synth->add_option("--noise", s.noise, "probability of an out-of-cluster item")->default_str("0.1");
  synth->add_option("--feature-dim", s.features, "event feature width")->default_str("0");
  synth->add_option("--seed", s.seed, "random seed")->default_str("0");
  synth->add_option("--output", s.output, "event-log path (default: <out-dir>/synth.csv)");
  synth->add_option("--out-dir", s.out_dir, "output directory (default: $CORIEM_OUT_DIR or ./coriem_out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return cmd_train(train_flags);
    if (evaluate->parsed()) return cmd_evaluate(eval_flags, split);
    if (curvature->parsed()) return cmd_curvature(curv_flags);
    return cmd_synth(s);
  } catch (const Failure& f) {
    const char* msg = coriem_last_error();
    if (msg != nullptr && *msg != '\0') std::fprintf(stderr, "error: %s\n", msg);
    return static_cast<int>(f.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
