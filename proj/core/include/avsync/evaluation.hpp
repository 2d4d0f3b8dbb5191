#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "avsync/detectors.hpp"
#include "avsync/sync_engine.hpp"

namespace avsync {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  [[nodiscard]] std::uint64_t total() const { return tp + fp + fn + tn; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) { return a += b; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Undefined ratios (zero denominator) are nullopt, never 0 or NaN.
struct Metrics {
  std::optional<double> precision;
  std::optional<double> recall;
};

Metrics metrics(const ConfusionMatrix& cm);

/// Counts over indices [0, universe). Throws RangeError if a predicted or
/// truth index falls outside the universe.
ConfusionMatrix confusion(const DetectionStream& predicted, std::span<const std::int64_t> truth,
                          std::int64_t universe);

struct AdjacencyResult {
  ConfusionMatrix adjusted;
  std::uint64_t pairs = 0;
  /// (false positive, false negative) index pairs.
  std::vector<std::pair<std::int64_t, std::int64_t>> matched;
};

/// Pairs false positives with unpaired false negatives within +-radius.
/// False positives are visited in ascending order; each takes the nearest
/// free false negative, the earlier one on ties. Every pair moves one count
/// fp -> tp and one fn -> tn.
AdjacencyResult adjacency_adjust(const DetectionStream& predicted,
                                 std::span<const std::int64_t> truth, std::int64_t universe,
                                 int radius = 1);

/// Applies k adjacency pairs to raw counts. Throws RangeError if
/// k > min(fp, fn).
ConfusionMatrix apply_pairs(const ConfusionMatrix& raw, std::uint64_t k);

struct SyncReport {
  ConfusionMatrix raw;
  std::optional<ConfusionMatrix> adjusted;
  std::uint64_t pairs = 0;
  /// From `adjusted` when present, otherwise from `raw`.
  Metrics metrics;
};

/// Detector report: raw confusion plus the adjacency-adjusted matrix.
SyncReport detector_report(const DetectionStream& predicted, std::span<const std::int64_t> truth,
                           std::int64_t universe, int radius = 1);

/// Positive = the verdict's detection carries an injected offset; predicted
/// positive = flagged.
SyncReport sync_error_report(std::span<const SyncVerdict> verdicts, const OffsetMap& injected);

/// Metric rounded to 6 decimals, or null.
nlohmann::json metric_json(const std::optional<double>& value);
nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const SyncReport& report);

/// Two-by-two table with "Predicted Positives/Negatives" rows.
std::string format_table(const ConfusionMatrix& cm, const std::string& title);

}  // namespace avsync
