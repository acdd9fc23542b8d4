#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "coriem/coriem.h"

static int failures = 0;

#define EXPECT(cond)                                          \
  do {                                                        \
    if (!(cond)) {                                            \
      fprintf(stderr, "%s:%d: failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                             \
    }                                                         \
  } while (0)

static void count_rows(const coriem_progress* row, void* user_data) {
  EXPECT(isfinite(row->loss));
  ++*(int*)user_data;
}

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  char path[1024];

  coriem_config* cfg = NULL;
  EXPECT(coriem_config_create(&cfg) == CORIEM_OK);
  EXPECT(coriem_config_set(cfg, "dim", "6") == CORIEM_OK);
  EXPECT(coriem_config_set(cfg, "intervals", "4") == CORIEM_OK);
  EXPECT(coriem_config_set(cfg, "epochs", "2") == CORIEM_OK);
  EXPECT(coriem_config_set(cfg, "ricci-width", "6") == CORIEM_OK);
  EXPECT(coriem_config_set(cfg, "k", "1,5") == CORIEM_OK);

  EXPECT(coriem_config_set(cfg, "dim", "-3") == CORIEM_ERR_USAGE);
  EXPECT(strstr(coriem_last_error(), "dim") != NULL);
  EXPECT(coriem_config_set(cfg, "nonexistent", "1") == CORIEM_ERR_USAGE);
  EXPECT(coriem_config_set(NULL, "dim", "1") == CORIEM_ERR_USAGE);

  char buf[8];
  size_t needed = 0;
  EXPECT(coriem_config_get(cfg, "dim", buf, sizeof buf, &needed) == CORIEM_OK);
  EXPECT(needed == 2 && strcmp(buf, "6") == 0);

  EXPECT(coriem_config_key_count() > 20);
  const char *name = NULL, *help = NULL, *choices = NULL;
  coriem_key_kind kind;
  int saw_choice = 0;
  for (size_t i = 0; i < coriem_config_key_count(); ++i) {
    EXPECT(coriem_config_key_info(i, &name, &help, &kind, &choices) == CORIEM_OK);
    if (strcmp(name, "curvature") == 0) {
      saw_choice = 1;
      EXPECT(kind == CORIEM_KEY_CHOICE);
      EXPECT(strcmp(choices, "evolve|static|zero") == 0);
    }
  }
  EXPECT(saw_choice);
  EXPECT(coriem_config_key_info(coriem_config_key_count(), &name, NULL, NULL, NULL) == CORIEM_ERR_USAGE);

  coriem_dataset* ds = NULL;
  EXPECT(coriem_dataset_synth(8, 6, 2, 200, 0.1, 0, 1, &ds) == CORIEM_OK);
  uint32_t users = 0, items = 0;
  size_t events = 0, fdim = 7;
  EXPECT(coriem_dataset_info(ds, &users, &items, &events, &fdim) == CORIEM_OK);
  EXPECT(users == 8 && items == 6 && events == 200 && fdim == 0);

  snprintf(path, sizeof path, "%s/events.csv", dir);
  EXPECT(coriem_dataset_save(ds, path) == CORIEM_OK);
  coriem_dataset* loaded = NULL;
  EXPECT(coriem_dataset_load(path, &loaded) == CORIEM_OK);
  coriem_dataset* missing = NULL;
  EXPECT(coriem_dataset_load("/nonexistent/events.csv", &missing) == CORIEM_ERR_DATA);
  EXPECT(strstr(coriem_last_error(), "/nonexistent/events.csv") != NULL);
  EXPECT(missing == NULL);

  int rows = 0;
  coriem_model* model = NULL;
  EXPECT(coriem_train(cfg, loaded, NULL, count_rows, &rows, &model) == CORIEM_OK);
  EXPECT(rows == 8);

  char d1[17], d2[17];
  EXPECT(coriem_model_digest(model, d1) == CORIEM_OK);
  EXPECT(strlen(d1) == 16);
  snprintf(path, sizeof path, "%s/model.json", dir);
  EXPECT(coriem_model_save(model, path) == CORIEM_OK);
  coriem_model* back = NULL;
  EXPECT(coriem_model_load(path, &back) == CORIEM_OK);
  EXPECT(coriem_model_digest(back, d2) == CORIEM_OK);
  EXPECT(strcmp(d1, d2) == 0);

  coriem_config* trained = NULL;
  EXPECT(coriem_model_config(back, &trained) == CORIEM_OK);
  EXPECT(coriem_model_check_compatible(back, loaded, trained) == CORIEM_OK);
  EXPECT(coriem_config_set(trained, "dim", "10") == CORIEM_OK);
  EXPECT(coriem_model_check_compatible(back, loaded, trained) == CORIEM_ERR_USAGE);
  EXPECT(strstr(coriem_last_error(), "6") != NULL && strstr(coriem_last_error(), "10") != NULL);

  coriem_report* rep = NULL;
  EXPECT(coriem_evaluate(back, loaded, cfg, CORIEM_TARGET_TEST, &rep) == CORIEM_OK);
  double mrr = 0.0;
  size_t n = 0, skipped = 1;
  EXPECT(coriem_report_summary(rep, &mrr, &n, &skipped) == CORIEM_OK);
  EXPECT(mrr > 0.0 && mrr <= 1.0);
  EXPECT(n == 20 && skipped == 0);
  EXPECT(coriem_report_k_count(rep) == 2);
  int k = 0;
  double r1 = -1.0, r5 = -1.0;
  EXPECT(coriem_report_recall(rep, 0, &k, &r1) == CORIEM_OK && k == 1);
  EXPECT(coriem_report_recall(rep, 1, &k, &r5) == CORIEM_OK && k == 5);
  EXPECT(r1 <= r5);
  EXPECT(coriem_report_recall(rep, 2, &k, &r5) == CORIEM_ERR_USAGE);
  snprintf(path, sizeof path, "%s/report.csv", dir);
  EXPECT(coriem_report_write(rep, path, NULL) == CORIEM_OK);

  snprintf(path, sizeof path, "%s/cache", dir);
  size_t entries = 0;
  EXPECT(coriem_curvature(cfg, loaded, path, NULL, &entries) == CORIEM_OK);
  EXPECT(entries == 8);

  coriem_report_destroy(rep);
  coriem_config_destroy(trained);
  coriem_model_destroy(back);
  coriem_model_destroy(model);
  coriem_dataset_destroy(loaded);
  coriem_dataset_destroy(ds);
  coriem_config_destroy(cfg);

  if (failures != 0) {
    fprintf(stderr, "%d failures\n", failures);
    return 1;
  }
  printf("c api: all checks passed\n");
  return 0;
}
