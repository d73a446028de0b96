#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <span>

#include "cellsleep/errors.hpp"
#include "cellsleep/netmodel.hpp"

namespace cellsleep {

inline constexpr int kPerCellFeatures = 4;  // ue_count, throughput, load ratio, on bit
inline constexpr int kStateFeatures = kCells * kPerCellFeatures;
inline constexpr int kFeatureDim = kStateFeatures + kSwitchable;
inline constexpr int kSequenceFeatureDim = kFeatureDim + kCells;  // + previous on/off bits

using StateFeatures = std::array<double, kStateFeatures>;
using FeatureVector = std::array<double, kFeatureDim>;

inline StateFeatures raw_state_features(const StationState& s, const CarrierProfiles& profiles) {
  StateFeatures f{};
  for (int c = 0; c < kCells; ++c) {
    const auto& cell = s.cells[c];
    const double on = s.config.bits[c] ? 1.0 : 0.0;
    f[c * kPerCellFeatures + 0] = cell.ue_count;
    f[c * kPerCellFeatures + 1] = cell.throughput;
    f[c * kPerCellFeatures + 2] = cell.allocated_prbs / profiles[c % kCarriers].max_prbs;
    f[c * kPerCellFeatures + 3] = on;
  }
  return f;
}

// Per-feature min/max from training data. Scaled values are clamped to [0,1];
// a constant feature maps to 0.
struct FeatureStats {
  StateFeatures lo{};
  StateFeatures hi{};
  bool fitted = false;

  void reset() {
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    fitted = false;
  }
  void include(const StateFeatures& f) {
    for (int k = 0; k < kStateFeatures; ++k) {
      lo[k] = std::min(lo[k], f[k]);
      hi[k] = std::max(hi[k], f[k]);
    }
    fitted = true;
  }
  double scale(int k, double v) const {
    const double range = hi[k] - lo[k];
    if (!(range > 1e-12)) return 0.0;
    return std::clamp((v - lo[k]) / range, 0.0, 1.0);
  }
};

inline FeatureVector featurize(const StationState& s, const Action& action, const CarrierProfiles& profiles,
                               const FeatureStats& stats) {
  if (!stats.fitted) throw NotFitted("featurize: normalization statistics not fitted");
  const auto raw = raw_state_features(s, profiles);
  FeatureVector out{};
  for (int k = 0; k < kStateFeatures; ++k) out[k] = stats.scale(k, raw[k]);
  for (int j = 1; j < kCarriers; ++j) out[kStateFeatures + j - 1] = action.carrier_on(j) ? 1.0 : 0.0;
  return out;
}

// Min-max scaling of regression targets.
struct TargetScaler {
  double lo = 0.0;
  double hi = 1.0;

  static TargetScaler fit(std::span<const double> values) {
    TargetScaler t{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (double v : values) {
      t.lo = std::min(t.lo, v);
      t.hi = std::max(t.hi, v);
    }
    if (values.empty()) t = TargetScaler{};
    if (!(t.hi - t.lo > 1e-12)) t.hi = t.lo + 1.0;
    return t;
  }
  double to_unit(double v) const { return (v - lo) / (hi - lo); }
  double from_unit(double u) const { return lo + u * (hi - lo); }
};

}  // namespace cellsleep
