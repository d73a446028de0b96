#pragma once

// The three learned surrogates: operating power and QoS from (X^t, u^t), and
// handovers from a short window of past steps plus the previous config.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cellsleep/dataset.hpp"
#include "cellsleep/errors.hpp"
#include "cellsleep/features.hpp"
#include "cellsleep/lstm.hpp"
#include "cellsleep/mlp.hpp"
#include "cellsleep/training.hpp"

namespace cellsleep {

using Real = float;  // network arithmetic; features and targets stay double

inline const std::vector<int>& default_mlp_dims() {
  static const std::vector<int> d{kFeatureDim, 64, 128, 128, 64, 1};
  return d;
}
inline const std::vector<int>& default_lstm_hidden() {
  static const std::vector<int> h{64, 32, 32};
  return h;
}

struct TrainedMlp {
  Mlp<Real> net;
  TargetScaler target;
};

struct TrainedLstm {
  Lstm<Real> net;
  TargetScaler target;
};

// One completed step as the handover model sees it.
struct HandoverStep {
  StationState state;
  Action action;
  OnOffConfig prev_config;  // config entering the step before
};

struct Estimators {
  CarrierProfiles profiles = default_profiles();
  FeatureStats stats;
  int window = kDefaultWindow;
  std::optional<TrainedMlp> power;
  std::optional<TrainedMlp> qos;
  std::optional<TrainedLstm> handover;

  bool fitted() const { return stats.fitted && power && qos && handover; }

  Mlp<Real>::Mat mlp_inputs(const StationState& s, std::span<const Action> actions) const {
    Mlp<Real>::Mat x(static_cast<Eigen::Index>(actions.size()), kFeatureDim);
    for (std::size_t a = 0; a < actions.size(); ++a) {
      const auto f = featurize(s, actions[a], profiles, stats);
      for (int k = 0; k < kFeatureDim; ++k) x(static_cast<Eigen::Index>(a), k) = static_cast<Real>(f[k]);
    }
    return x;
  }

  std::vector<double> predict_power(const StationState& s, std::span<const Action> actions) const {
    if (!power) throw NotFitted("predict_power: model not loaded");
    const auto y = mlp_forward_batch(power->net, mlp_inputs(s, actions));
    std::vector<double> out(actions.size());
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = power->target.from_unit(y(static_cast<Eigen::Index>(a), 0));
    return out;
  }
  double predict_power(const StationState& s, const Action& a) const { return predict_power(s, std::span(&a, 1))[0]; }

  std::vector<double> predict_qos(const StationState& s, std::span<const Action> actions) const {
    if (!qos) throw NotFitted("predict_qos: model not loaded");
    const auto y = mlp_forward_batch(qos->net, mlp_inputs(s, actions));
    std::vector<double> out(actions.size());
    for (std::size_t a = 0; a < out.size(); ++a)
      out[a] = std::clamp(qos->target.from_unit(y(static_cast<Eigen::Index>(a), 0)), 0.0, 100.0);
    return out;
  }
  double predict_qos(const StationState& s, const Action& a) const { return predict_qos(s, std::span(&a, 1))[0]; }

  // past holds completed steps, oldest first; only the last window-1 are used
  // and a short history is padded by repeating its oldest entry.
  std::vector<double> predict_handover(std::span<const HandoverStep> past, const StationState& s,
                                       const OnOffConfig& prev_config, std::span<const Action> actions) const {
    if (!handover) throw NotFitted("predict_handover: model not loaded");
    const int w = window;
    const Eigen::Index n = static_cast<Eigen::Index>(actions.size());
    const std::size_t keep = std::min<std::size_t>(past.size(), static_cast<std::size_t>(w - 1));
    const auto used = past.subspan(past.size() - keep);

    auto row_of = [&](const StationState& st, const Action& a, const OnOffConfig& prev) {
      const auto f = featurize(st, a, profiles, stats);
      Eigen::Matrix<Real, 1, Eigen::Dynamic> row(kSequenceFeatureDim);
      for (int k = 0; k < kFeatureDim; ++k) row(k) = static_cast<Real>(f[k]);
      for (int c = 0; c < kCells; ++c) row(kFeatureDim + c) = prev.bits[c] ? Real(1) : Real(0);
      return row;
    };

    Sequence<Real> seq;
    std::vector<Eigen::Matrix<Real, 1, Eigen::Dynamic>> history;
    for (const auto& h : used) history.push_back(row_of(h.state, h.action, h.prev_config));
    const int pad = w - 1 - static_cast<int>(history.size());
    for (int k = 0; k < w - 1; ++k) {
      typename Lstm<Real>::Mat x(n, kSequenceFeatureDim);
      if (history.empty()) {
        for (Eigen::Index a = 0; a < n; ++a) x.row(a) = row_of(s, actions[static_cast<std::size_t>(a)], prev_config);
      } else {
        x = history[static_cast<std::size_t>(std::max(0, k - pad))].replicate(n, 1);
      }
      seq.push_back(std::move(x));
    }
    typename Lstm<Real>::Mat last(n, kSequenceFeatureDim);
    for (Eigen::Index a = 0; a < n; ++a) last.row(a) = row_of(s, actions[static_cast<std::size_t>(a)], prev_config);
    seq.push_back(std::move(last));

    const auto y = lstm_forward_batch(handover->net, seq);
    std::vector<double> out(actions.size());
    for (std::size_t a = 0; a < out.size(); ++a)
      out[a] = std::max(0.0, handover->target.from_unit(y(static_cast<Eigen::Index>(a), 0)));
    return out;
  }
};

struct EstimatorTrainOptions {
  TrainOptions mlp{50, 64, 10, 1};
  TrainOptions lstm{50, 64, 10, 2};
  double mlp_learning_rate = 0.001;
  double lstm_learning_rate = 0.05;
  std::uint64_t init_seed = 1;
};

struct HeldoutQuality {
  double power_relative_mae = 0.0;
  double qos_mae = 0.0;
  double handover_mae = 0.0;
};

struct EstimatorTrainResult {
  Estimators estimators;
  TrainReport power_report, qos_report, handover_report;
  HeldoutQuality quality;
};

namespace detail {

inline Mlp<Real>::Mat gather_rows(const RowMatrix& src, std::span<const std::size_t> idx, int cols) {
  Mlp<Real>::Mat x(static_cast<Eigen::Index>(idx.size()), cols);
  for (std::size_t i = 0; i < idx.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = src.row(static_cast<Eigen::Index>(idx[i])).leftCols(cols).cast<Real>();
  return x;
}

inline Sequence<Real> gather_windows(const Dataset& ds, std::span<const std::size_t> idx) {
  Sequence<Real> seq;
  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
  for (int k = 0; k < ds.window; ++k) {
    Lstm<Real>::Mat x(n, kSequenceFeatureDim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]) - (ds.window - 1 - k);
      x.row(i).leftCols(kFeatureDim) = ds.features.row(r).cast<Real>();
      x.row(i).rightCols(kCells) = ds.prev_config.row(r).cast<Real>();
    }
    seq.push_back(std::move(x));
  }
  return seq;
}

inline std::vector<Real> unit_targets(const std::vector<double>& y, const TargetScaler& sc,
                                      std::span<const std::size_t> idx) {
  std::vector<Real> t(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) t[i] = static_cast<Real>(sc.to_unit(y[idx[i]]));
  return t;
}

inline TargetScaler fit_target(const std::vector<double>& y, std::span<const std::size_t> idx) {
  std::vector<double> v;
  v.reserve(idx.size());
  for (auto i : idx) v.push_back(y[i]);
  return TargetScaler::fit(v);
}

inline TrainedMlp train_mlp(const Dataset& ds, const std::vector<double>& y, const EstimatorTrainOptions& opt,
                            std::uint64_t init_seed, TrainReport& report) {
  Rng rng(init_seed);
  TrainedMlp m{Mlp<Real>::glorot(default_mlp_dims(), rng), fit_target(y, ds.mlp_train)};
  auto loss = [&](const Mlp<Real>& p, std::span<const std::size_t> idx, Mlp<Real>* grad) {
    const auto x = gather_rows(ds.features, idx, kFeatureDim);
    const auto t = unit_targets(y, m.target, idx);
    return static_cast<double>(mlp_loss_gradient(p, x, std::span<const Real>(t), grad));
  };
  auto ada = AdagradState<Mlp<Real>>::for_model(m.net, opt.mlp_learning_rate);
  report = train(m.net, std::span<const std::size_t>(ds.mlp_train), std::span<const std::size_t>(ds.mlp_heldout), loss,
                 ada, opt.mlp);
  return m;
}

inline TrainedLstm train_lstm(const Dataset& ds, const EstimatorTrainOptions& opt, std::uint64_t init_seed,
                              TrainReport& report) {
  Rng rng(init_seed);
  TrainedLstm m{Lstm<Real>::glorot(kSequenceFeatureDim, default_lstm_hidden(), rng),
                fit_target(ds.handover, ds.seq_train)};
  auto loss = [&](const Lstm<Real>& p, std::span<const std::size_t> idx, Lstm<Real>* grad) {
    const auto seq = gather_windows(ds, idx);
    const auto t = unit_targets(ds.handover, m.target, idx);
    return static_cast<double>(lstm_loss_gradient(p, seq, std::span<const Real>(t), grad));
  };
  auto ada = AdagradState<Lstm<Real>>::for_model(m.net, opt.lstm_learning_rate);
  report = train(m.net, std::span<const std::size_t>(ds.seq_train), std::span<const std::size_t>(ds.seq_heldout), loss,
                 ada, opt.lstm);
  return m;
}

}  // namespace detail

// Heldout errors in natural units: relative MAE of power, absolute MAE of QoS
// points and of handover counts (after the same clamps used at prediction).
inline HeldoutQuality heldout_quality(const Estimators& est, const Dataset& ds) {
  HeldoutQuality q;
  if (ds.mlp_heldout.empty()) return q;
  const auto x = detail::gather_rows(ds.features, ds.mlp_heldout, kFeatureDim);
  const auto yp = mlp_forward_batch(est.power->net, x);
  const auto yq = mlp_forward_batch(est.qos->net, x);
  double abs_err = 0.0, abs_true = 0.0, qerr = 0.0;
  for (std::size_t i = 0; i < ds.mlp_heldout.size(); ++i) {
    const auto r = ds.mlp_heldout[i];
    const auto ii = static_cast<Eigen::Index>(i);
    abs_err += std::abs(est.power->target.from_unit(yp(ii, 0)) - ds.power[r]);
    abs_true += std::abs(ds.power[r]);
    qerr += std::abs(std::clamp(est.qos->target.from_unit(yq(ii, 0)), 0.0, 100.0) - ds.qos[r]);
  }
  q.power_relative_mae = abs_err / abs_true;
  q.qos_mae = qerr / static_cast<double>(ds.mlp_heldout.size());
  if (!ds.seq_heldout.empty()) {
    const auto yh = lstm_forward_batch(est.handover->net, detail::gather_windows(ds, ds.seq_heldout));
    double herr = 0.0;
    for (std::size_t i = 0; i < ds.seq_heldout.size(); ++i)
      herr += std::abs(std::max(0.0, est.handover->target.from_unit(yh(static_cast<Eigen::Index>(i), 0))) -
                       ds.handover[ds.seq_heldout[i]]);
    q.handover_mae = herr / static_cast<double>(ds.seq_heldout.size());
  }
  return q;
}

inline EstimatorTrainResult train_estimators(const Dataset& ds, const CarrierProfiles& profiles,
                                             const EstimatorTrainOptions& opt = {}) {
  if (ds.mlp_train.empty() || ds.seq_train.empty()) throw std::invalid_argument("train_estimators: empty dataset");
  EstimatorTrainResult res;
  auto& est = res.estimators;
  est.profiles = profiles;
  est.stats = ds.stats;
  est.window = ds.window;
  est.power = detail::train_mlp(ds, ds.power, opt, derive_seed({opt.init_seed, 1}), res.power_report);
  est.qos = detail::train_mlp(ds, ds.qos, opt, derive_seed({opt.init_seed, 2}), res.qos_report);
  est.handover = detail::train_lstm(ds, opt, derive_seed({opt.init_seed, 3}), res.handover_report);
  res.quality = heldout_quality(est, ds);
  return res;
}

}  // namespace cellsleep
