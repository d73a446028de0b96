#pragma once

// Offline cost-to-go under certainty equivalence: traffic is replaced by its
// per-step mean, which leaves the on/off configuration as the only state.

#include <bit>
#include <concepts>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "cellsleep/errors.hpp"
#include "cellsleep/netmodel.hpp"

namespace cellsleep {

template <class E>
concept ActionEstimator = requires(const E& e, const StationState& s, std::span<const Action> a) {
  { e.predict_power(s, a) } -> std::convertible_to<std::vector<double>>;
  { e.predict_qos(s, a) } -> std::convertible_to<std::vector<double>>;
};

struct ControllerConfig {
  Mode mode = Mode::FourCell;
  double offline_qos_threshold = 80.0;
  double beta = 0.3;
  double p_gamma = 162.0;

  void validate() const {
    if (!(offline_qos_threshold >= 0.0 && offline_qos_threshold <= 100.0))
      throw std::invalid_argument("controller: offline threshold must be in [0,100]");
    if (beta < 0.0 || p_gamma < 0.0) throw std::invalid_argument("controller: negative switching cost");
  }
};

// True when a should win a tie against b: more cells on, then the lower mask.
inline bool tie_prefers(const Action& a, const Action& b) {
  const int on_a = std::popcount(static_cast<unsigned>(a.mask));
  const int on_b = std::popcount(static_cast<unsigned>(b.mask));
  if (on_a != on_b) return on_a > on_b;
  return a.mask < b.mask;
}

struct CostToGoTable {
  Mode mode = Mode::FourCell;
  int horizon = kStepsPerDay;
  std::vector<Action> actions;
  std::vector<std::vector<double>> J;              // (horizon+1) x |U|, row horizon is zero
  std::vector<std::vector<int>> argmin;            // horizon x |U|, index into actions
  std::vector<std::vector<char>> infeasible;       // horizon x |U|
  std::vector<std::vector<std::vector<double>>> scores;  // horizon x |U| x |U|, for consistency checks

  std::size_t size() const { return actions.size(); }
  double at(int t, const Action& a) const { return J.at(static_cast<std::size_t>(t)).at(index_of(a)); }
  std::size_t index_of(const Action& a) const {
    for (std::size_t k = 0; k < actions.size(); ++k)
      if (actions[k].mask == a.mask) return k;
    throw InvalidAction("cost-to-go: action not in table");
  }
};

inline StationState with_config(StationState s, const OnOffConfig& config) {
  s.config = config;
  for (int c = 0; c < kCells; ++c) s.cells[c].on = config.bits[c];
  return s;
}

template <ActionEstimator E>
CostToGoTable build_ctg_table(std::span<const StationState> mean_traffic, const E& est, const ControllerConfig& cfg) {
  cfg.validate();
  if (mean_traffic.empty()) throw std::invalid_argument("build_ctg_table: empty mean traffic");
  CostToGoTable tab;
  tab.mode = cfg.mode;
  tab.horizon = static_cast<int>(mean_traffic.size());
  tab.actions = action_space(cfg.mode);
  const std::size_t n = tab.actions.size();
  const auto T = static_cast<std::size_t>(tab.horizon);
  tab.J.assign(T + 1, std::vector<double>(n, 0.0));
  tab.argmin.assign(T, std::vector<int>(n, 0));
  tab.infeasible.assign(T, std::vector<char>(n, 0));
  tab.scores.assign(T, std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));

  std::vector<OnOffConfig> configs;
  for (const auto& a : tab.actions) configs.push_back(apply_action(a));

  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t a = 0; a < n; ++a) {
      const StationState s = with_config(mean_traffic[t], configs[a]);
      const auto p = est.predict_power(s, tab.actions);
      const auto q = est.predict_qos(s, tab.actions);
      if (p.size() != n || q.size() != n) throw std::logic_error("build_ctg_table: estimator returned wrong size");
      int best = -1;
      int best_any = -1;
      for (std::size_t u = 0; u < n; ++u) {
        const double score = p[u] + switching_cost(configs[a], configs[u], cfg.beta, cfg.p_gamma) + tab.J[t + 1][u];
        tab.scores[t][a][u] = score;
        auto better = [&](int cur) {
          if (cur < 0) return true;
          const double sc = tab.scores[t][a][static_cast<std::size_t>(cur)];
          return score < sc || (score == sc && tie_prefers(tab.actions[u], tab.actions[static_cast<std::size_t>(cur)]));
        };
        if (better(best_any)) best_any = static_cast<int>(u);
        if (q[u] >= cfg.offline_qos_threshold && better(best)) best = static_cast<int>(u);
      }
      if (best < 0) {
        tab.infeasible[t][a] = 1;
        best = best_any;
      }
      tab.argmin[t][a] = best;
      tab.J[t][a] = tab.scores[t][a][static_cast<std::size_t>(best)];
    }
  }
  return tab;
}

}  // namespace cellsleep
