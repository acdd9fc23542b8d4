#pragma once

// Event logs of sequential interaction networks.
//
// File format: UTF-8 text, one header line, comma-separated rows
//   user_id,item_id,timestamp[,state_label],f1,...,fk
// The state_label column is recognised by its header name and ignored. The
// feature width k is fixed by the first data row.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace coriem::data {

struct InteractionEvent {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  double t = 0.0;
  std::vector<double> features;
};

struct Dataset {
  std::vector<InteractionEvent> events;  // non-decreasing in t
  std::uint32_t n_users = 0;
  std::uint32_t n_items = 0;
  std::size_t feature_dim = 0;
  /// Original identifiers, indexed by dense id.
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;

  std::size_t size() const noexcept { return events.size(); }
};

/// Throws DataError on unreadable files, malformed rows (with line number),
/// inconsistent feature widths, negative timestamps, or an empty log.
/// Out-of-order rows are stably sorted by timestamp with a warning.
Dataset parse(const std::filesystem::path& path);
Dataset parse_string(const std::string& text, const std::string& source = "<memory>");

void write(const std::filesystem::path& path, const Dataset& ds);
std::string to_string(const Dataset& ds);

/// Throws DataError when an id is out of range, a timestamp is negative or
/// out of order, or a feature vector has the wrong width.
void validate(const Dataset& ds);

struct Split {
  std::size_t train_end = 0;
  std::size_t valid_end = 0;
  std::size_t total = 0;

  std::span<const InteractionEvent> train(const Dataset& ds) const;
  std::span<const InteractionEvent> valid(const Dataset& ds) const;
  std::span<const InteractionEvent> test(const Dataset& ds) const;
};

struct SplitFractions {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

/// Contiguous chronological split by event count; train and valid sizes are
/// floor(fraction * n), test takes the rest.
Split chrono_split(const Dataset& ds, SplitFractions fractions = {});

struct IntervalBatch {
  std::size_t index = 0;
  std::size_t begin = 0;  // offsets into the partitioned event range
  std::size_t end = 0;
  double t_start = 0.0;
  double t_end = 0.0;

  std::size_t size() const noexcept { return end - begin; }
};

/// Equal-count partition; the last interval absorbs the remainder. Asking for
/// more intervals than events yields one event per interval and a warning.
std::vector<IntervalBatch> interval_partition(std::span<const InteractionEvent> events,
                                              std::size_t n_intervals);

/// Consecutive batches of `batch_size` events; the last may be shorter.
std::vector<IntervalBatch> fixed_batches(std::span<const InteractionEvent> events,
                                         std::size_t batch_size);

struct SynthOptions {
  std::uint32_t n_users = 50;
  std::uint32_t n_items = 50;
  std::uint32_t n_clusters = 5;
  std::size_t n_events = 5000;
  double noise = 0.1;
  std::size_t feature_dim = 0;
  std::uint64_t seed = 0;
};

/// Planted-cluster generator. User u and item i belong to clusters u % C and
/// i % C. Each event draws a user uniformly, then an item from the user's
/// cluster with probability 1 - noise and uniformly otherwise.
Dataset synth_generate(const SynthOptions& options);

inline std::uint32_t synth_cluster(std::uint32_t id, std::uint32_t n_clusters) {
  return id % n_clusters;
}

}  // namespace coriem::data
