#pragma once

// Ranking metrics and the rolling next-item evaluation protocol.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "coriem/config.hpp"
#include "coriem/curvature.hpp"
#include "coriem/data.hpp"
#include "coriem/trainer.hpp"

namespace coriem::eval {

/// Mean of 1/rank. Throws UsageError on empty input or a rank of 0.
double mrr(std::span<const std::size_t> ranks);
/// Fraction of ranks <= k. Throws UsageError on empty input or k < 1.
double recall_at_k(std::span<const std::size_t> ranks, int k);
/// 1-based rank of `truth`: items scoring higher come first, ties by
/// ascending item id.
std::size_t rank_of(std::span<const double> scores, std::uint32_t truth);

struct RankedEvent {
  std::size_t index = 0;  // position in the dataset
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  double t = 0.0;
  std::size_t rank = 0;
};

struct RankReport {
  std::vector<RankedEvent> events;
  std::vector<int> ks;
  std::vector<double> recall;  // parallel to ks
  double mrr = 0.0;
  std::size_t skipped = 0;  // events naming entities outside the model
  std::size_t n_items = 0;

  std::vector<std::size_t> ranks() const;
};

enum class Target { Valid, Test };

/// Rolls the trained model forward from its initial table through the
/// training intervals, then through the later segments in batches of
/// floor(train size / intervals) events, scoring every event of the target
/// segment before its batch updates the state. Parameters stay frozen.
RankReport evaluate(const train::TrainResult& model, const data::Dataset& ds, const RunConfig& config,
                    Target target, std::span<const int> ks, curv::CurvatureCache* cache = nullptr);

void write_summary(std::ostream& out, const RankReport& report);
void write_ranks(std::ostream& out, const RankReport& report);

}  // namespace coriem::eval
