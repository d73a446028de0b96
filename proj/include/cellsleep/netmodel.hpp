#pragma once

// Station topology, on/off configurations, and the closed-form per-step
// metrics: cell power, switching cost, QoS (uncongested cells) and handovers.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cellsleep/errors.hpp"

namespace cellsleep {

inline constexpr int kSectors = 3;
inline constexpr int kCarriers = 5;
inline constexpr int kCells = kSectors * kCarriers;
inline constexpr int kSwitchable = kCarriers - 1;
inline constexpr int kStepsPerDay = 96;
inline constexpr double kStepSeconds = 900.0;

struct CellId {
  int station = 0;
  int sector = 0;
  int carrier = 0;

  constexpr int index() const { return sector * kCarriers + carrier; }
  static constexpr CellId from_index(int idx, int station = 0) {
    return CellId{station, idx / kCarriers, idx % kCarriers};
  }
  constexpr bool valid() const {
    return station >= 0 && sector >= 0 && sector < kSectors && carrier >= 0 && carrier < kCarriers;
  }
  friend constexpr bool operator==(const CellId&, const CellId&) = default;
};

struct CarrierProfile {
  int carrier = 0;
  int max_prbs = 100;     // M_j
  double prb_rate = 0.5;  // Mbps per PRB
  double p_sleep = 5.0;   // P0_j, W
  double p_standby = 100.0;  // P1_j, W
  double p_load = 150.0;     // P2_j, W at full load
  int coverage_rank = 0;

  void validate() const {
    if (max_prbs <= 0) throw std::invalid_argument("carrier profile: max_prbs must be > 0");
    if (!(prb_rate > 0.0)) throw std::invalid_argument("carrier profile: prb_rate must be > 0");
    if (!(p_sleep >= 0.0) || !(p_standby >= p_sleep))
      throw std::invalid_argument("carrier profile: need P1 >= P0 >= 0");
    if (!(p_load >= 0.0)) throw std::invalid_argument("carrier profile: P2 must be >= 0");
    if (carrier == 0 && coverage_rank != 0)
      throw std::invalid_argument("carrier profile: carrier 0 must have coverage rank 0");
  }
};

using CarrierProfiles = std::array<CarrierProfile, kCarriers>;

// Lower carriers: wider coverage, higher standby draw, flatter load slope.
inline CarrierProfiles default_profiles() {
  constexpr std::array<int, kCarriers> prbs{25, 100, 100, 100, 100};
  constexpr std::array<double, kCarriers> p1{130.0, 100.0, 90.0, 85.0, 80.0};
  constexpr std::array<double, kCarriers> p2{120.0, 140.0, 150.0, 160.0, 170.0};
  CarrierProfiles out{};
  for (int j = 0; j < kCarriers; ++j) {
    out[j] = CarrierProfile{j, prbs[j], 0.5, 5.0, p1[j], p2[j], j};
  }
  return out;
}

inline void validate_profiles(const CarrierProfiles& profiles) {
  for (int j = 0; j < kCarriers; ++j) {
    if (profiles[j].carrier != j) throw std::invalid_argument("carrier profiles out of order");
    profiles[j].validate();
  }
}

enum class Mode { TwoCell, FourCell };

inline std::string to_string(Mode m) { return m == Mode::TwoCell ? "2cell" : "4cell"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "2cell" || s == "TwoCell") return Mode::TwoCell;
  if (s == "4cell" || s == "FourCell") return Mode::FourCell;
  throw std::invalid_argument("unknown mode: " + s);
}

// On/off bits for the 15 cells of one station, indexed sector * 5 + carrier.
struct OnOffConfig {
  std::array<bool, kCells> bits{};

  static OnOffConfig all_on() {
    OnOffConfig c;
    c.bits.fill(true);
    return c;
  }
  static OnOffConfig all_off() { return OnOffConfig{}; }

  bool on(int sector, int carrier) const { return bits[sector * kCarriers + carrier]; }
  bool operator[](int idx) const { return bits[idx]; }
  void set(int sector, int carrier, bool v) { bits[sector * kCarriers + carrier] = v; }

  int count_on() const { return static_cast<int>(std::count(bits.begin(), bits.end(), true)); }

  bool valid(Mode mode) const {
    for (int i = 0; i < kSectors; ++i) {
      if (!on(i, 0)) return false;
      if (mode == Mode::TwoCell && (!on(i, 1) || !on(i, 2))) return false;
    }
    return true;
  }
  friend bool operator==(const OnOffConfig&, const OnOffConfig&) = default;
};

// Switching action for one station. The mask covers carriers 1..4 and is read
// as a 4-bit binary number with carrier 1 as the most significant bit, so
// "1010" (= 10) keeps carriers 1 and 3 on. The same mask applies to all sectors.
struct Action {
  std::uint8_t mask = 0b1111;
  Mode mode = Mode::FourCell;

  static constexpr int bit_of(int carrier) { return kSwitchable - carrier; }

  bool carrier_on(int carrier) const {
    if (carrier == 0) return true;
    return (mask >> bit_of(carrier)) & 1U;
  }
  int cells_off_per_sector() const { return kSwitchable - std::popcount(static_cast<unsigned>(mask)); }

  bool valid() const {
    if (mask > 0b1111) return false;
    if (mode == Mode::TwoCell && (!carrier_on(1) || !carrier_on(2))) return false;
    return true;
  }
  friend bool operator==(const Action&, const Action&) = default;
};

inline Action all_on_action(Mode mode) { return Action{0b1111, mode}; }

struct CellObservation {
  double ue_count = 0.0;        // integral in simulated states, fractional in mean traffic
  double throughput = 0.0;      // TP, Mbps
  double allocated_prbs = 0.0;  // N
  bool on = true;
  double delivered = 0.0;  // D, megabits
  double tx_time = 0.0;    // TT, seconds
};

struct StationState {
  int step = 0;
  std::array<CellObservation, kCells> cells{};
  OnOffConfig config = OnOffConfig::all_on();
};

struct StepMetrics {
  double power = 0.0;
  double qos = 100.0;
  int handovers = 0;
};

inline double load_ratio(double allocated, double max) {
  if (!(max > 0.0)) throw std::invalid_argument("load_ratio: max must be > 0");
  if (allocated < 0.0 || allocated > max)
    throw std::invalid_argument("load_ratio: allocated must lie in [0, max]");
  return allocated / max;
}

inline double cell_power(bool on, double load, const CarrierProfile& profile, bool just_switched_on,
                         double beta, double p_gamma) {
  if (!(load >= 0.0 && load <= 1.0)) throw std::invalid_argument("cell_power: load ratio outside [0,1]");
  if (!on) return profile.p_sleep;
  double p = profile.p_standby + load * profile.p_load;
  if (just_switched_on) p += beta * p_gamma;
  return p;
}

// Only off -> on transitions are charged.
inline int cells_switched_on(const OnOffConfig& prev, const OnOffConfig& next) {
  int n = 0;
  for (int c = 0; c < kCells; ++c) n += (!prev.bits[c] && next.bits[c]) ? 1 : 0;
  return n;
}

inline double switching_cost(const OnOffConfig& prev, const OnOffConfig& next, double beta,
                             double p_gamma) {
  return beta * p_gamma * cells_switched_on(prev, next);
}

inline double station_power(const StationState& state, const OnOffConfig& prev,
                            const CarrierProfiles& profiles, double beta, double p_gamma) {
  double total = 0.0;
  for (int c = 0; c < kCells; ++c) {
    const auto& cell = state.cells[c];
    const auto& prof = profiles[c % kCarriers];
    const bool on = state.config.bits[c];
    const double lambda = on ? load_ratio(cell.allocated_prbs, prof.max_prbs) : 0.0;
    total += cell_power(on, lambda, prof, false, beta, p_gamma);
  }
  return total + switching_cost(prev, state.config, beta, p_gamma);
}

// Percentage of busy active cells whose per-UE delivered rate clears tau.
// An idle network (no cell transmitting) counts as fully uncongested.
inline double qos_uncongested_pct(std::span<const CellObservation> cells, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("qos: tau must be > 0");
  int busy = 0;
  int ok = 0;
  for (const auto& c : cells) {
    if (!c.on || !(c.tx_time > 0.0)) continue;
    ++busy;
    const double rate = c.delivered / c.tx_time;
    const double per_ue = c.ue_count > 0.0 ? rate / c.ue_count : rate;
    if (per_ue >= tau) ++ok;
  }
  if (busy == 0) return 100.0;
  return 100.0 * ok / busy;
}

using CellCounts = std::array<int, kCells>;

inline int handover_count(std::span<const int> prev, std::span<const int> cur) {
  if (prev.size() != cur.size()) throw std::invalid_argument("handover_count: length mismatch");
  long total = 0;
  for (std::size_t i = 0; i < prev.size(); ++i) total += std::abs(prev[i] - cur[i]);
  return static_cast<int>((total + 1) / 2);
}

inline std::vector<Action> action_space(Mode mode) {
  std::vector<Action> out;
  for (std::uint8_t m = 0; m < 16; ++m) {
    Action a{m, mode};
    if (a.valid()) out.push_back(a);
  }
  return out;
}

// Position of an action inside action_space(mode).
inline int action_index(const Action& a) {
  if (!a.valid()) throw InvalidAction("action_index: invalid action");
  return a.mode == Mode::FourCell ? a.mask : a.mask - 0b1100;
}

inline OnOffConfig apply_action(const Action& action) {
  if (!action.valid()) throw InvalidAction("apply_action: invalid action for mode");
  OnOffConfig cfg;
  for (int i = 0; i < kSectors; ++i)
    for (int j = 0; j < kCarriers; ++j) cfg.set(i, j, action.carrier_on(j));
  return cfg;
}

}  // namespace cellsleep
