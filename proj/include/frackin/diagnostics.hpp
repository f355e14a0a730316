#ifndef FRACKIN_DIAGNOSTICS_HPP
#define FRACKIN_DIAGNOSTICS_HPP

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "frackin/error.hpp"

namespace frackin {

/// One row of a run's time series. Metrics keep insertion order so that
/// emitted tables are stable.
struct DiagnosticsRecord {
  double time = 0.0;
  double plain_mass = 0.0;
  double fractional_mass = 0.0;
  double min_value = 0.0;
  double l2_norm = 0.0;
  std::vector<std::pair<std::string, double>> metrics;

  void set(const std::string& key, double value) {
    for (auto& [k, v] : metrics) {
      if (k == key) {
        v = value;
        return;
      }
    }
    metrics.emplace_back(key, value);
  }

  double get(const std::string& key) const {
    for (const auto& [k, v] : metrics) {
      if (k == key) {
        return v;
      }
    }
    throw Error("diagnostics: no metric named '" + key + "'");
  }

  bool finite() const {
    if (!std::isfinite(time) || !std::isfinite(plain_mass) ||
        !std::isfinite(fractional_mass) || !std::isfinite(min_value) ||
        !std::isfinite(l2_norm)) {
      return false;
    }
    for (const auto& kv : metrics) {
      if (!std::isfinite(kv.second)) {
        return false;
      }
    }
    return true;
  }
};

/// Appends with the monotone-time check.
class DiagnosticsLog {
public:
  void push(DiagnosticsRecord r) {
    if (!records_.empty() && r.time < records_.back().time) {
      throw Error("diagnostics: time stamps must not decrease");
    }
    records_.push_back(std::move(r));
  }
  const std::vector<DiagnosticsRecord>& records() const noexcept { return records_; }
  const DiagnosticsRecord& back() const { return records_.back(); }
  const DiagnosticsRecord& front() const { return records_.front(); }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

private:
  std::vector<DiagnosticsRecord> records_;
};

} // namespace frackin

#endif // FRACKIN_DIAGNOSTICS_HPP
