#pragma once

// Supervised samples from random-action traces. Each record yields one MLP
// sample (features of X^t with u^t); each run of W consecutive records inside
// a trace yields one LSTM sample ending at its last record.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cellsleep/features.hpp"
#include "cellsleep/rng.hpp"
#include "cellsleep/simkernel.hpp"

namespace cellsleep {

inline constexpr int kDefaultWindow = 4;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
  FeatureStats stats;
  int window = kDefaultWindow;
  RowMatrix features;     // N x kFeatureDim, scaled
  RowMatrix prev_config;  // N x kCells, on/off bits of the config entering the previous step
  std::vector<double> power;  // operating power, switching cost excluded
  std::vector<double> qos;
  std::vector<double> handover;
  std::vector<std::size_t> mlp_train, mlp_heldout;  // record indices
  std::vector<std::size_t> seq_train, seq_heldout;  // index of the last record of each window
  int skipped_traces = 0;

  std::size_t records() const { return power.size(); }
  std::size_t mlp_samples() const { return mlp_train.size() + mlp_heldout.size(); }
  std::size_t seq_samples() const { return seq_train.size() + seq_heldout.size(); }
};

struct DatasetOptions {
  int window = kDefaultWindow;
  double heldout_fraction = 0.1;
  std::uint64_t seed = 1;
  double beta = 0.3;
  double p_gamma = 162.0;
};

inline Dataset build_dataset(const std::vector<std::vector<TraceRecord>>& traces, const CarrierProfiles& profiles,
                             const DatasetOptions& opt = {}) {
  if (opt.window < 1) throw std::invalid_argument("build_dataset: window must be >= 1");
  if (!(opt.heldout_fraction >= 0.0 && opt.heldout_fraction < 1.0))
    throw std::invalid_argument("build_dataset: heldout fraction must be in [0,1)");
  Dataset ds;
  ds.window = opt.window;

  std::vector<const std::vector<TraceRecord>*> kept;
  std::size_t n = 0;
  for (const auto& tr : traces) {
    if (static_cast<int>(tr.size()) < opt.window) {
      ++ds.skipped_traces;
      continue;
    }
    kept.push_back(&tr);
    n += tr.size();
  }
  if (n == 0) throw std::invalid_argument("build_dataset: no usable traces");

  // The split is drawn per record before statistics are fitted so that the
  // heldout part never influences normalization.
  Rng rng(derive_seed({opt.seed, 0xDA7A5E7ULL}));
  std::vector<char> heldout(n);
  for (auto& h : heldout) h = rng.uniform() < opt.heldout_fraction ? 1 : 0;

  std::vector<StateFeatures> raw(n);
  ds.stats.reset();
  ds.prev_config = RowMatrix::Zero(static_cast<Eigen::Index>(n), kCells);
  ds.power.reserve(n);
  ds.qos.reserve(n);
  ds.handover.reserve(n);
  std::size_t r = 0;
  for (const auto* tr : kept) {
    for (std::size_t k = 0; k < tr->size(); ++k, ++r) {
      const auto& rec = (*tr)[k];
      for (double v : {rec.power, rec.qos, static_cast<double>(rec.handovers)})
        if (!std::isfinite(v)) throw std::invalid_argument("build_dataset: non-finite target");
      raw[r] = raw_state_features(rec.state, profiles);
      if (!heldout[r]) ds.stats.include(raw[r]);
      const OnOffConfig prev = k == 0 ? OnOffConfig::all_on() : (*tr)[k - 1].state.config;
      for (int c = 0; c < kCells; ++c) ds.prev_config(static_cast<Eigen::Index>(r), c) = prev.bits[c] ? 1.0 : 0.0;
      const double delta = switching_cost(rec.state.config, apply_action(rec.action), opt.beta, opt.p_gamma);
      ds.power.push_back(rec.power - delta);
      ds.qos.push_back(rec.qos);
      ds.handover.push_back(rec.handovers);
      (heldout[r] ? ds.mlp_heldout : ds.mlp_train).push_back(r);
      if (k + 1 >= static_cast<std::size_t>(opt.window)) (heldout[r] ? ds.seq_heldout : ds.seq_train).push_back(r);
    }
  }
  if (!ds.stats.fitted) throw std::invalid_argument("build_dataset: empty training split");

  ds.features = RowMatrix::Zero(static_cast<Eigen::Index>(n), kFeatureDim);
  r = 0;
  for (const auto* tr : kept) {
    for (const auto& rec : *tr) {
      for (int k = 0; k < kStateFeatures; ++k) ds.features(static_cast<Eigen::Index>(r), k) = ds.stats.scale(k, raw[r][k]);
      for (int j = 1; j < kCarriers; ++j)
        ds.features(static_cast<Eigen::Index>(r), kStateFeatures + j - 1) = rec.action.carrier_on(j) ? 1.0 : 0.0;
      ++r;
    }
  }
  return ds;
}

}  // namespace cellsleep
