#pragma once

// Online controller: score every action by predicted power, switching cost and
// the offline cost-to-go of the configuration it leads to, subject to the
// predicted QoS clearing the current threshold.

#include <concepts>
#include <deque>
#include <span>
#include <vector>

#include "cellsleep/ctg.hpp"
#include "cellsleep/errors.hpp"
#include "cellsleep/estimators.hpp"
#include "cellsleep/simkernel.hpp"
#include "cellsleep/threshold.hpp"

namespace cellsleep {

struct ActionScore {
  Action action;
  double power = 0.0;
  double qos = 0.0;
  double delta = 0.0;
  double ctg = 0.0;
  double score = 0.0;
  bool feasible = false;
};

struct Decision {
  int t = 0;
  Action chosen;
  bool fallback = false;
  double qos_threshold = 0.0;
  double mean_handover = 0.0;
  std::vector<ActionScore> scores;
};

template <ActionEstimator E>
Decision select_action(const StationState& x, const OnOffConfig& current, const CostToGoTable& table, const E& est,
                       double qos_threshold, const ControllerConfig& cfg) {
  const int t = x.step;
  if (t < 0 || t >= table.horizon) throw EpisodeFinished("select_action: step outside the table horizon");
  const auto& actions = table.actions;
  const auto p = est.predict_power(x, actions);
  const auto q = est.predict_qos(x, actions);
  Decision d;
  d.t = t;
  d.qos_threshold = qos_threshold;
  d.scores.resize(actions.size());
  int best = -1;
  int best_qos = -1;
  for (std::size_t u = 0; u < actions.size(); ++u) {
    auto& s = d.scores[u];
    s.action = actions[u];
    s.power = p[u];
    s.qos = q[u];
    s.delta = switching_cost(current, apply_action(actions[u]), cfg.beta, cfg.p_gamma);
    s.ctg = table.J[static_cast<std::size_t>(t) + 1][u];
    s.score = s.power + s.delta + s.ctg;
    s.feasible = s.qos >= qos_threshold;
    if (s.feasible) {
      const auto& b = d.scores[static_cast<std::size_t>(best < 0 ? 0 : best)];
      if (best < 0 || s.score < b.score || (s.score == b.score && tie_prefers(s.action, b.action)))
        best = static_cast<int>(u);
    }
    const auto& bq = d.scores[static_cast<std::size_t>(best_qos < 0 ? 0 : best_qos)];
    if (best_qos < 0 || s.qos > bq.qos || (s.qos == bq.qos && tie_prefers(s.action, bq.action)))
      best_qos = static_cast<int>(u);
  }
  if (best < 0) {
    d.fallback = true;
    best = best_qos;
  }
  d.chosen = actions[static_cast<std::size_t>(best)];
  return d;
}

template <class E>
concept HandoverEstimator = requires(const E& e, std::span<const HandoverStep> past, const StationState& s,
                                     const OnOffConfig& c, std::span<const Action> a) {
  { e.predict_handover(past, s, c, a) } -> std::convertible_to<std::vector<double>>;
};

template <HandoverEstimator E>
double mean_predicted_handover(const E& est, std::span<const HandoverStep> past, const StationState& s,
                               const OnOffConfig& prev_config, std::span<const Action> actions) {
  if (actions.empty()) return 0.0;
  const auto h = est.predict_handover(past, s, prev_config, actions);
  double sum = 0.0;
  for (double v : h) sum += v;
  return sum / static_cast<double>(h.size());
}

// Step policy over a trained estimator bundle and a cost-to-go table. With
// adaptive = false the threshold stays at fixed_threshold for the whole day.
template <class E = Estimators>
class AdpPolicy {
 public:
  AdpPolicy(const CostToGoTable& table, const E& est, ControllerConfig cfg, ThresholdModel model = {},
            bool adaptive = true, double fixed_threshold = 92.0)
      : table_(table), est_(est), cfg_(cfg), model_(model), adaptive_(adaptive), fixed_threshold_(fixed_threshold) {
    cfg_.validate();
    if (table_.mode != cfg_.mode) throw std::invalid_argument("adp policy: table mode does not match controller");
  }

  Action act(const StationState& state, const OnOffConfig& current) {
    const std::vector<HandoverStep> past(history_.begin(), history_.end());
    last_hbar_ = mean_predicted_handover(est_, std::span<const HandoverStep>(past), state, prev_config_, table_.actions);
    double qtau = fixed_threshold_;
    if (adaptive_) {
      qtau = state.step == 0 ? update_threshold(model_, model_.qos_target, last_hbar_) : model_.threshold(last_hbar_);
    }
    Decision d = select_action(state, current, table_, est_, qtau, cfg_);
    d.mean_handover = last_hbar_;
    history_.push_back(HandoverStep{state, d.chosen, prev_config_});
    while (static_cast<int>(history_.size()) > est_.window) history_.pop_front();
    prev_config_ = current;
    log_.push_back(std::move(d));
    return log_.back().chosen;
  }

  void observe(const StepMetrics& m) {
    if (!adaptive_) return;
    model_.record_qos(m.qos);
    update_threshold(model_, adaptive_target(model_), last_hbar_);
  }

  const std::vector<Decision>& decisions() const { return log_; }
  const ThresholdModel& threshold_model() const { return model_; }

 private:
  const CostToGoTable& table_;
  const E& est_;
  ControllerConfig cfg_;
  ThresholdModel model_;
  bool adaptive_;
  double fixed_threshold_;
  std::deque<HandoverStep> history_;
  OnOffConfig prev_config_ = OnOffConfig::all_on();
  double last_hbar_ = 0.0;
  std::vector<Decision> log_;
};

struct ObjectiveEstimate {
  double total_power = 0.0;
  int violations = 0;  // steps whose observed QoS fell below the target
};

inline ObjectiveEstimate policy_objective_estimate(std::span<const TraceRecord> trace, double qos_target = 92.0) {
  ObjectiveEstimate o;
  for (const auto& r : trace) {
    o.total_power += r.power;
    if (r.qos < qos_target) ++o.violations;
  }
  return o;
}

}  // namespace cellsleep
