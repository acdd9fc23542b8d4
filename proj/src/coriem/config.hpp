#pragma once

// Run configuration shared by the trainer, evaluator, C API and CLI.
//
// Every field is reachable through a string key so front ends can enumerate
// options, set them from flags or a JSON file, and print defaults.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace coriem {

enum class FusionMode { Late, Early };
enum class EncoderMode { Cosine, Fourier };
enum class CurvatureMode { Evolve, Static, Zero };

struct RunConfig {
  std::string data;
  int dim = 64;
  int intervals = 300;
  double lr = 1e-3;
  int epochs = 20;
  double eta = 2.0;
  double w1 = 1.0;
  double w2 = 10.0;
  double alpha = 0.5;
  int cooccur_k = 1;
  double sample_ratio = 0.2;
  int layers = 1;
  FusionMode fusion = FusionMode::Late;
  EncoderMode encoder = EncoderMode::Cosine;
  CurvatureMode curvature = CurvatureMode::Evolve;
  bool no_reweigh = false;
  bool no_cocon = false;
  bool no_kernel = false;
  int negatives = 16;
  std::uint64_t seed = 0;
  std::string out_dir;
  double dropout = 0.3;
  int ricci_width = 64;
  int ricci_max_edges = 64;
  int curvature_iterations = 10;
  double kappa_init = -1.0;
  double kappa_max = 10.0;
  std::string recall_k = "1,5,10,20";
  std::string checkpoint;

  enum class Kind { Int, Real, Bool, String, Choice };

  struct Key {
    std::string name;
    Kind kind;
    std::string help;
    std::vector<std::string> choices;  // Kind::Choice only
  };

  static const std::vector<Key>& keys();
  static const Key* find_key(std::string_view name);

  /// Parses and range-checks `value`; throws UsageError naming the key.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  /// Applies a JSON object of key/value pairs. Unknown keys are rejected.
  void apply_json(const std::string& text);
  void apply_json_file(const std::string& path);
  /// All keys with their current values, in key order.
  std::string to_json() const;

  std::vector<int> recall_ks() const;
  /// Cross-field checks (e.g. an even dimension for the fourier encoder).
  void validate() const;
};

const char* to_string(FusionMode m);
const char* to_string(EncoderMode m);
const char* to_string(CurvatureMode m);

}  // namespace coriem
