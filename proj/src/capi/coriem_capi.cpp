#include "coriem/coriem.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include "coriem/checkpoint.hpp"
#include "coriem/error.hpp"
#include "coriem/eval.hpp"
#include "coriem/log.hpp"
#include "coriem/trainer.hpp"

struct coriem_config {
  coriem::RunConfig value;
};

struct coriem_dataset {
  coriem::data::Dataset value;
};

struct coriem_model {
  coriem::ckpt::Checkpoint value;
};

struct coriem_report {
  coriem::eval::RankReport value;
};

namespace {

thread_local std::string last_error;

coriem_status fail(coriem_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename F>
coriem_status guarded(F&& body) {
  try {
    body();
    return CORIEM_OK;
  } catch (const coriem::Error& e) {
    return fail(static_cast<coriem_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CORIEM_ERR_RUNTIME, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(CORIEM_ERR_DATA, e.what());
  } catch (const std::exception& e) {
    return fail(CORIEM_ERR_RUNTIME, e.what());
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw coriem::UsageError(std::string(what) + " must not be null");
}

std::filesystem::path parent_ready(const char* path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p;
}

void write_text(const char* path, const std::string& text) {
  const auto p = parent_ready(path);
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw coriem::DataError("cannot write '" + p.string() + "'");
}

std::filesystem::path cache_subdir(const char* root, const coriem::data::Dataset& ds,
                                   const coriem::RunConfig& c) {
  std::string key = coriem::data::to_string(ds);
  for (const char* k : {"intervals", "cooccur-k", "sample-ratio", "alpha", "ricci-width", "ricci-max-edges",
                        "curvature-iterations", "kappa-init"}) {
    key += '\n';
    key += k;
    key += '=';
    key += c.get(k);
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(coriem::ckpt::fnv1a64(key)));
  return std::filesystem::path(root) / hex;
}

struct ChoiceCache {
  std::vector<std::string> joined;
  ChoiceCache() {
    for (const auto& k : coriem::RunConfig::keys()) {
      std::string s;
      for (const auto& c : k.choices) s += (s.empty() ? "" : "|") + c;
      joined.push_back(std::move(s));
    }
  }
};

}  // namespace

extern "C" {

const char* coriem_version(void) { return "0.1.0"; }

const char* coriem_last_error(void) { return last_error.c_str(); }

void coriem_set_warning_handler(coriem_warning_fn fn, void* user_data) {
  if (fn == nullptr) {
    coriem::set_warning_handler({});
    return;
  }
  coriem::set_warning_handler([fn, user_data](std::string_view msg) {
    const std::string s(msg);
    fn(s.c_str(), user_data);
  });
}

coriem_status coriem_config_create(coriem_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new coriem_config{};
  });
}

void coriem_config_destroy(coriem_config* config) { delete config; }

coriem_status coriem_config_set(coriem_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->value.set(key, value);
  });
}

coriem_status coriem_config_get(const coriem_config* config, const char* key, char* buf, size_t cap,
                                size_t* needed) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    const auto v = config->value.get(key);
    if (needed != nullptr) *needed = v.size() + 1;
    if (buf != nullptr && cap > v.size()) std::memcpy(buf, v.c_str(), v.size() + 1);
  });
}

coriem_status coriem_config_apply_json_file(coriem_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    config->value.apply_json_file(path);
  });
}

coriem_status coriem_config_validate(const coriem_config* config) {
  return guarded([&] {
    require(config, "config");
    config->value.validate();
  });
}

size_t coriem_config_key_count(void) { return coriem::RunConfig::keys().size(); }

coriem_status coriem_config_key_info(size_t index, const char** name, const char** help, coriem_key_kind* kind,
                                     const char** choices) {
  return guarded([&] {
    static const ChoiceCache cache;
    const auto& keys = coriem::RunConfig::keys();
    if (index >= keys.size()) throw coriem::UsageError("key index " + std::to_string(index) + " out of range");
    const auto& k = keys[index];
    if (name != nullptr) *name = k.name.c_str();
    if (help != nullptr) *help = k.help.c_str();
    if (kind != nullptr) *kind = static_cast<coriem_key_kind>(k.kind);
    if (choices != nullptr) *choices = cache.joined[index].c_str();
  });
}

coriem_status coriem_dataset_load(const char* path, coriem_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto ds = coriem::data::parse(path);
    *out = new coriem_dataset{std::move(ds)};
  });
}

coriem_status coriem_dataset_synth(uint32_t n_users, uint32_t n_items, uint32_t n_clusters, size_t n_events,
                                   double noise, size_t feature_dim, uint64_t seed, coriem_dataset** out) {
  return guarded([&] {
    require(out, "out");
    coriem::data::SynthOptions o;
    o.n_users = n_users;
    o.n_items = n_items;
    o.n_clusters = n_clusters;
    o.n_events = n_events;
    o.noise = noise;
    o.feature_dim = feature_dim;
    o.seed = seed;
    auto ds = coriem::data::synth_generate(o);
    *out = new coriem_dataset{std::move(ds)};
  });
}

coriem_status coriem_dataset_save(const coriem_dataset* ds, const char* path) {
  return guarded([&] {
    require(ds, "dataset");
    require(path, "path");
    coriem::data::write(parent_ready(path), ds->value);
  });
}

coriem_status coriem_dataset_info(const coriem_dataset* ds, uint32_t* n_users, uint32_t* n_items,
                                  size_t* n_events, size_t* feature_dim) {
  return guarded([&] {
    require(ds, "dataset");
    if (n_users != nullptr) *n_users = ds->value.n_users;
    if (n_items != nullptr) *n_items = ds->value.n_items;
    if (n_events != nullptr) *n_events = ds->value.size();
    if (feature_dim != nullptr) *feature_dim = ds->value.feature_dim;
  });
}

void coriem_dataset_destroy(coriem_dataset* ds) { delete ds; }

coriem_status coriem_curvature(const coriem_config* config, const coriem_dataset* ds, const char* cache_dir,
                               const char* summary_path, size_t* entries) {
  return guarded([&] {
    require(config, "config");
    require(ds, "dataset");
    require(cache_dir, "cache_dir");
    const auto& c = config->value;
    c.validate();
    const auto split = coriem::data::chrono_split(ds->value);
    const auto events = split.train(ds->value);
    if (events.empty()) throw coriem::DataError("training segment is empty");
    const auto batches = coriem::data::interval_partition(events, static_cast<std::size_t>(c.intervals));
    coriem::curv::CurvatureCache cache;
    const auto result = coriem::train::batch_curvatures(events, batches, c, 0, c.kappa_init, &cache);
    const auto dir = cache_subdir(cache_dir, ds->value, c);
    std::filesystem::create_directories(dir);
    cache.save(dir);
    if (summary_path != nullptr) {
      std::string text = "interval,side,nodes,edges,observed,kappa_o\n";
      char line[160];
      for (std::size_t n = 0; n < result.size(); ++n) {
        for (const auto* side : {&result[n].user, &result[n].item}) {
          std::snprintf(line, sizeof line, "%zu,%s,%zu,%zu,%d,%.17g\n", n, side == &result[n].user ? "user" : "item",
                        side->nodes, side->edges, side->observed ? 1 : 0, side->kappa_o);
          text += line;
        }
      }
      write_text(summary_path, text);
    }
    if (entries != nullptr) *entries = cache.size();
  });
}

coriem_status coriem_train(const coriem_config* config, const coriem_dataset* ds, const char* cache_dir,
                           coriem_progress_fn progress, void* user_data, coriem_model** out) {
  return guarded([&] {
    require(config, "config");
    require(ds, "dataset");
    require(out, "out");
    config->value.validate();
    coriem::train::Progress report;
    if (progress != nullptr) {
      report = [progress, user_data](const coriem::train::LogRow& r) {
        const coriem_progress row{r.epoch,   r.interval, r.loss,    r.j_user, r.j_item,
                                  r.j_curv, r.kappa_u,  r.kappa_i, r.wall_ms};
        progress(&row, user_data);
      };
    }
    coriem::curv::CurvatureCache cache;
    std::filesystem::path dir;
    if (cache_dir != nullptr) {
      dir = cache_subdir(cache_dir, ds->value, config->value);
      if (std::filesystem::is_directory(dir)) cache.load(dir);
    }
    auto result = coriem::train::train(ds->value, config->value, report, &cache);
    if (!dir.empty()) {
      std::filesystem::create_directories(dir);
      cache.save(dir);
    }
    *out = new coriem_model{{config->value, std::move(result)}};
  });
}

coriem_status coriem_model_save(const coriem_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    coriem::ckpt::save(parent_ready(path), model->value);
  });
}

coriem_status coriem_model_load(const char* path, coriem_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto c = coriem::ckpt::load(path);
    *out = new coriem_model{std::move(c)};
  });
}

coriem_status coriem_model_digest(const coriem_model* model, char out[17]) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    const auto d = coriem::ckpt::digest(model->value);
    std::memcpy(out, d.c_str(), 17);
  });
}

coriem_status coriem_model_write_log(const coriem_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    const auto p = parent_ready(path);
    std::ofstream out(p);
    coriem::train::write_log(out, model->value.model.log);
    if (!out) throw coriem::DataError("cannot write '" + p.string() + "'");
  });
}

coriem_status coriem_model_check_compatible(const coriem_model* model, const coriem_dataset* ds,
                                            const coriem_config* config) {
  return guarded([&] {
    require(model, "model");
    require(ds, "dataset");
    require(config, "config");
    coriem::ckpt::check_compatible(model->value, ds->value, config->value);
  });
}

coriem_status coriem_model_config(const coriem_model* model, coriem_config** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    auto c = model->value.config;
    c.data.clear();
    c.out_dir.clear();
    c.checkpoint.clear();
    *out = new coriem_config{std::move(c)};
  });
}

void coriem_model_destroy(coriem_model* model) { delete model; }

coriem_status coriem_evaluate(const coriem_model* model, const coriem_dataset* ds, const coriem_config* config,
                              coriem_target target, coriem_report** out) {
  return guarded([&] {
    require(model, "model");
    require(ds, "dataset");
    require(config, "config");
    require(out, "out");
    if (target != CORIEM_TARGET_VALID && target != CORIEM_TARGET_TEST) {
      throw coriem::UsageError("unknown evaluation target");
    }
    const auto ks = config->value.recall_ks();
    auto rep = coriem::eval::evaluate(
        model->value.model, ds->value, model->value.config,
        target == CORIEM_TARGET_TEST ? coriem::eval::Target::Test : coriem::eval::Target::Valid, ks);
    *out = new coriem_report{std::move(rep)};
  });
}

coriem_status coriem_report_summary(const coriem_report* report, double* mrr, size_t* events, size_t* skipped) {
  return guarded([&] {
    require(report, "report");
    if (mrr != nullptr) *mrr = report->value.mrr;
    if (events != nullptr) *events = report->value.events.size();
    if (skipped != nullptr) *skipped = report->value.skipped;
  });
}

size_t coriem_report_k_count(const coriem_report* report) {
  return report == nullptr ? 0 : report->value.ks.size();
}

coriem_status coriem_report_recall(const coriem_report* report, size_t index, int* k, double* recall) {
  return guarded([&] {
    require(report, "report");
    if (index >= report->value.ks.size()) throw coriem::UsageError("recall index out of range");
    if (k != nullptr) *k = report->value.ks[index];
    if (recall != nullptr) *recall = report->value.recall[index];
  });
}

coriem_status coriem_report_write(const coriem_report* report, const char* summary_path, const char* ranks_path) {
  return guarded([&] {
    require(report, "report");
    require(summary_path, "summary_path");
    {
      const auto p = parent_ready(summary_path);
      std::ofstream out(p);
      coriem::eval::write_summary(out, report->value);
      if (!out) throw coriem::DataError("cannot write '" + p.string() + "'");
    }
    if (ranks_path != nullptr) {
      const auto p = parent_ready(ranks_path);
      std::ofstream out(p);
      coriem::eval::write_ranks(out, report->value);
      if (!out) throw coriem::DataError("cannot write '" + p.string() + "'");
    }
  });
}

void coriem_report_destroy(coriem_report* report) { delete report; }

}  // extern "C"
