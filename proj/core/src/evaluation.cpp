#include "avsync/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "avsync/errors.hpp"

namespace avsync {

namespace {

std::vector<bool> truth_mask(std::span<const std::int64_t> truth, std::int64_t universe) {
  if (universe < 0) throw RangeError("negative universe size");
  std::vector<bool> mask(static_cast<std::size_t>(universe), false);
  for (auto t : truth) {
    if (t < 0 || t >= universe) {
      throw RangeError("truth index " + std::to_string(t) + " outside universe of " +
                       std::to_string(universe));
    }
    mask[static_cast<std::size_t>(t)] = true;
  }
  return mask;
}

void check_predictions(const DetectionStream& predicted, std::int64_t universe) {
  if (predicted.max_index() >= universe) {
    throw RangeError("predicted index " + std::to_string(predicted.max_index()) +
                     " outside universe of " + std::to_string(universe));
  }
}

}  // namespace

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  return *this;
}

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  if (cm.tp + cm.fp > 0) m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  if (cm.tp + cm.fn > 0) m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  return m;
}

ConfusionMatrix confusion(const DetectionStream& predicted, std::span<const std::int64_t> truth,
                          std::int64_t universe) {
  check_predictions(predicted, universe);
  const auto mask = truth_mask(truth, universe);
  ConfusionMatrix cm;
  std::uint64_t positives = 0;
  for (bool b : mask) positives += b ? 1 : 0;
  for (const auto& d : predicted.decisions()) {
    if (!d.is_hit) continue;
    if (mask[static_cast<std::size_t>(d.index)]) {
      ++cm.tp;
    } else {
      ++cm.fp;
    }
  }
  cm.fn = positives - cm.tp;
  cm.tn = static_cast<std::uint64_t>(universe) - positives - cm.fp;
  return cm;
}

AdjacencyResult adjacency_adjust(const DetectionStream& predicted,
                                 std::span<const std::int64_t> truth, std::int64_t universe,
                                 int radius) {
  if (radius < 0) throw ConfigError("adjacency radius must be non-negative");
  AdjacencyResult result;
  result.adjusted = confusion(predicted, truth, universe);
  if (radius == 0) return result;

  const auto mask = truth_mask(truth, universe);
  std::vector<std::int64_t> false_positives;
  std::vector<bool> predicted_hit(static_cast<std::size_t>(universe), false);
  for (const auto& d : predicted.decisions()) {
    if (!d.is_hit) continue;
    predicted_hit[static_cast<std::size_t>(d.index)] = true;
    if (!mask[static_cast<std::size_t>(d.index)]) false_positives.push_back(d.index);
  }
  // Unpaired false negatives: truth positives that were not predicted.
  std::vector<bool> free_fn(static_cast<std::size_t>(universe), false);
  for (std::int64_t i = 0; i < universe; ++i) {
    free_fn[static_cast<std::size_t>(i)] =
        mask[static_cast<std::size_t>(i)] && !predicted_hit[static_cast<std::size_t>(i)];
  }

  for (auto fp : false_positives) {
    for (int dist = 1; dist <= radius; ++dist) {
      std::int64_t chosen = -1;
      for (std::int64_t cand : {fp - dist, fp + dist}) {
        if (cand >= 0 && cand < universe && free_fn[static_cast<std::size_t>(cand)]) {
          chosen = cand;
          break;
        }
      }
      if (chosen >= 0) {
        free_fn[static_cast<std::size_t>(chosen)] = false;
        result.matched.emplace_back(fp, chosen);
        break;
      }
    }
  }
  result.pairs = result.matched.size();
  result.adjusted = apply_pairs(result.adjusted, result.pairs);
  return result;
}

ConfusionMatrix apply_pairs(const ConfusionMatrix& raw, std::uint64_t k) {
  if (k > std::min(raw.fp, raw.fn)) {
    throw RangeError("cannot apply " + std::to_string(k) + " adjacency pairs to fp=" +
                     std::to_string(raw.fp) + ", fn=" + std::to_string(raw.fn));
  }
  return {raw.tp + k, raw.fp - k, raw.fn - k, raw.tn + k};
}

SyncReport detector_report(const DetectionStream& predicted, std::span<const std::int64_t> truth,
                           std::int64_t universe, int radius) {
  SyncReport report;
  auto adj = adjacency_adjust(predicted, truth, universe, radius);
  report.raw = confusion(predicted, truth, universe);
  report.adjusted = adj.adjusted;
  report.pairs = adj.pairs;
  report.metrics = metrics(adj.adjusted);
  return report;
}

SyncReport sync_error_report(std::span<const SyncVerdict> verdicts, const OffsetMap& injected) {
  SyncReport report;
  for (const auto& v : verdicts) {
    const bool positive = injected.contains(v.detection_index);
    if (positive && v.flagged) {
      ++report.raw.tp;
    } else if (!positive && v.flagged) {
      ++report.raw.fp;
    } else if (positive) {
      ++report.raw.fn;
    } else {
      ++report.raw.tn;
    }
  }
  report.metrics = metrics(report.raw);
  return report;
}

nlohmann::json metric_json(const std::optional<double>& value) {
  if (!value) return nullptr;
  return std::round(*value * 1e6) / 1e6;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}, {"total", cm.total()}};
}

nlohmann::json to_json(const SyncReport& report) {
  nlohmann::json j;
  j["raw"] = to_json(report.raw);
  j["adjusted"] = report.adjusted ? to_json(*report.adjusted) : nlohmann::json(nullptr);
  j["pairs_adjusted"] = report.pairs;
  j["precision"] = metric_json(report.metrics.precision);
  j["recall"] = metric_json(report.metrics.recall);
  return j;
}

std::string format_table(const ConfusionMatrix& cm, const std::string& title) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%s\n"
                "+---------------------+------------+------------+\n"
                "|                     |  Positives |  Negatives |\n"
                "+---------------------+------------+------------+\n"
                "| Predicted Positives | %10llu | %10llu |\n"
                "+---------------------+------------+------------+\n"
                "| Predicted Negatives | %10llu | %10llu |\n"
                "+---------------------+------------+------------+\n",
                title.c_str(), static_cast<unsigned long long>(cm.tp),
                static_cast<unsigned long long>(cm.fp), static_cast<unsigned long long>(cm.fn),
                static_cast<unsigned long long>(cm.tn));
  return buf;
}

}  // namespace avsync
