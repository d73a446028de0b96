#pragma once

// Comparison policies: always-on, threshold rules, and the uniform random
// policy used for training-data generation.

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include "cellsleep/netmodel.hpp"
#include "cellsleep/rng.hpp"

namespace cellsleep {

class NoEsPolicy {
 public:
  explicit NoEsPolicy(Mode mode = Mode::FourCell) : mode_(mode) {}
  Action act(const StationState&, const OnOffConfig&) { return all_on_action(mode_); }
  void observe(const StepMetrics&) {}

 private:
  Mode mode_;
};

struct RuleParams {
  double th_deac = 0.2;
  double th_ac = 0.8;
  int window = 1;

  void validate() const {
    if (!(th_deac >= 0.0 && th_deac < th_ac && th_ac <= 1.0))
      throw std::invalid_argument("rule params: need 0 <= th_deac < th_ac <= 1");
    if (window < 1) throw std::invalid_argument("rule params: window must be >= 1");
  }
};

using CellLoads = std::array<double, kCells>;

inline CellLoads cell_loads(const StationState& s, const CarrierProfiles& profiles) {
  CellLoads out{};
  for (int c = 0; c < kCells; ++c) {
    const double m = profiles[c % kCarriers].max_prbs;
    out[c] = s.cells[c].on ? std::clamp(s.cells[c].allocated_prbs / m, 0.0, 1.0) : 0.0;
  }
  return out;
}

// Stateless rule evaluation on an averaged load picture.
//  - If the active cells of any sector average above th_ac, every switchable
//    carrier comes back on.
//  - Otherwise each switchable carrier, highest first, is switched off when it
//    is on and its load (mean over sectors) is below th_deac.
inline Action rule_decision(const CellLoads& loads, const OnOffConfig& current, const RuleParams& p, Mode mode) {
  for (int i = 0; i < kSectors; ++i) {
    double sum = 0.0;
    int active = 0;
    for (int j = 0; j < kCarriers; ++j) {
      if (!current.on(i, j)) continue;
      sum += loads[i * kCarriers + j];
      ++active;
    }
    if (active > 0 && sum / active > p.th_ac) return all_on_action(mode);
  }

  // carrier j is "on" for the station when it is on in every sector
  std::uint8_t mask = 0;
  for (int j = 1; j < kCarriers; ++j) {
    bool on = true;
    for (int i = 0; i < kSectors; ++i) on = on && current.on(i, j);
    if (on) mask |= static_cast<std::uint8_t>(1U << Action::bit_of(j));
  }
  const int lowest = mode == Mode::TwoCell ? 3 : 1;
  for (int j = kCarriers - 1; j >= lowest; --j) {
    const std::uint8_t bit = static_cast<std::uint8_t>(1U << Action::bit_of(j));
    if (!(mask & bit)) continue;
    double mean = 0.0;
    for (int i = 0; i < kSectors; ++i) mean += loads[i * kCarriers + j];
    mean /= kSectors;
    if (mean < p.th_deac) mask &= static_cast<std::uint8_t>(~bit);
  }
  if (mode == Mode::TwoCell) mask |= 0b1100;
  return Action{mask, mode};
}

class RuleBasedPolicy {
 public:
  RuleBasedPolicy(RuleParams params, Mode mode, CarrierProfiles profiles = default_profiles())
      : params_(params), mode_(mode), profiles_(profiles) {
    params_.validate();
  }

  Action act(const StationState& state, const OnOffConfig& current) {
    history_.push_back(cell_loads(state, profiles_));
    while (static_cast<int>(history_.size()) > params_.window) history_.pop_front();
    CellLoads avg{};
    for (const auto& l : history_)
      for (int c = 0; c < kCells; ++c) avg[c] += l[c];
    for (auto& v : avg) v /= static_cast<double>(history_.size());
    return rule_decision(avg, current, params_, mode_);
  }
  void observe(const StepMetrics&) {}

 private:
  RuleParams params_;
  Mode mode_;
  CarrierProfiles profiles_;
  std::deque<CellLoads> history_;
};

class RandomPolicy {
 public:
  RandomPolicy(std::uint64_t seed, Mode mode = Mode::FourCell) : rng_(seed), actions_(action_space(mode)) {}

  Action act(const StationState&, const OnOffConfig&) { return actions_[rng_.index(actions_.size())]; }
  void observe(const StepMetrics&) {}

 private:
  Rng rng_;
  std::vector<Action> actions_;
};

}  // namespace cellsleep
