#pragma once

// Minimal system-level simulator for one base station: diurnal synthetic
// traffic, session lifecycle, greedy cell association, PRB allocation, and the
// per-step transition producing observations and metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cellsleep/netmodel.hpp"
#include "cellsleep/rng.hpp"

namespace cellsleep {

struct ScenarioSpec {
  int id = 1;
  double base_ue = 10.0;
  double peak_amp = 20.0;
  std::array<double, 2> peak_hours{12.0, 20.0};
  double peak_width = 2.5;
  double noise_sd = 2.0;
  double demand_mean = 2.0;
  double demand_sd = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (base_ue < 0.0) throw std::invalid_argument("scenario: base_ue must be >= 0");
    if (peak_amp < 0.0) throw std::invalid_argument("scenario: peak_amp must be >= 0");
    if (!(demand_mean > 0.0)) throw std::invalid_argument("scenario: demand_mean must be > 0");
    if (!(peak_width > 0.0)) throw std::invalid_argument("scenario: peak_width must be > 0");
    if (demand_sd < 0.0 || noise_sd < 0.0) throw std::invalid_argument("scenario: negative sd");
  }
};

// Volume-ordered defaults: (base, amplitude) spaced linearly from (10, 20) to (45, 90).
inline std::vector<ScenarioSpec> default_scenarios(std::uint64_t master_seed, int count = 8) {
  if (count < 1) throw std::invalid_argument("default_scenarios: count must be >= 1");
  std::vector<ScenarioSpec> out;
  for (int i = 0; i < count; ++i) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    ScenarioSpec s;
    s.id = i + 1;
    s.base_ue = 10.0 + 35.0 * frac;
    s.peak_amp = 20.0 + 70.0 * frac;
    s.seed = derive_seed({master_seed, 0x5CE7A210ULL, static_cast<std::uint64_t>(s.id)});
    out.push_back(s);
  }
  return out;
}

inline double step_hour(int t) { return t / 4.0; }

inline double expected_ue_count(const ScenarioSpec& spec, int t) {
  if (t < 0 || t >= kStepsPerDay) throw std::invalid_argument("expected_ue_count: step out of range");
  const double h = step_hour(t);
  double bump = 0.0;
  for (double peak : spec.peak_hours) {
    const double d = h - peak;
    bump += std::exp(-d * d / (2.0 * spec.peak_width * spec.peak_width));
  }
  return spec.base_ue + spec.peak_amp * bump;
}

struct UESession {
  std::int64_t id = 0;
  int sector = 0;
  double demand = 1.0;  // Mbps
  int arrival_step = 0;
  int departure_step = 1;  // first step the session is no longer active
};

using Assignment = std::map<std::int64_t, CellId>;

struct SimParams {
  CarrierProfiles profiles = default_profiles();
  double beta = 0.3;
  double p_gamma = 162.0;
  double tau = 1.0;               // Mbps per UE
  double mean_lifetime = 8.0;     // steps
};

struct SimState {
  int t = 0;
  std::vector<UESession> sessions;
  Assignment assignment;
  OnOffConfig config = OnOffConfig::all_on();
  CellCounts prev_counts{};
  StationState observed;  // what the controller sees before deciding at step t
  std::int64_t next_id = 0;
  Rng rng{0};
};

struct TraceRecord {
  int t = 0;
  StationState state;
  Action action;
  double power = 0.0;
  double qos = 100.0;
  int handovers = 0;
};

namespace detail {

inline UESession spawn_session(Rng& rng, const ScenarioSpec& spec, double mean_lifetime, std::int64_t id,
                               int arrival) {
  UESession s;
  s.id = id;
  const double lo = std::max(0.1, spec.demand_mean - 3.0 * spec.demand_sd);
  const double hi = spec.demand_mean + 3.0 * spec.demand_sd;
  s.demand = std::clamp(rng.normal(spec.demand_mean, spec.demand_sd), lo, hi);
  s.sector = static_cast<int>(rng.index(kSectors));
  s.arrival_step = arrival;
  s.departure_step = arrival + static_cast<int>(rng.geometric(1.0 / mean_lifetime));
  return s;
}

inline int prb_request(double demand, const CarrierProfile& p) {
  return static_cast<int>(std::ceil(demand / p.prb_rate - 1e-12));
}

}  // namespace detail

// Drops departed sessions, then tops the population up towards the diurnal
// expectation with Poisson arrivals. Draw order is independent of the
// configuration, so every policy sees the same traffic for a given seed.
inline std::vector<UESession> evolve_sessions(SimState& sim, const ScenarioSpec& spec, Rng& rng,
                                              double mean_lifetime = 8.0) {
  const int t = sim.t;
  std::vector<UESession> next;
  next.reserve(sim.sessions.size() + 16);
  for (const auto& s : sim.sessions)
    if (s.departure_step > t) next.push_back(s);
  const double noise = rng.normal(0.0, spec.noise_sd);
  const double deficit = expected_ue_count(spec, t) - static_cast<double>(next.size()) + noise;
  const long spawns = rng.poisson(std::max(0.0, deficit));
  for (long k = 0; k < spawns; ++k) next.push_back(detail::spawn_session(rng, spec, mean_lifetime, sim.next_id++, t));
  return next;
}

// Greedy association in id order: each session goes to the on cell of its
// sector with the most free PRBs that can still hold its request (ties to the
// lower carrier), else to the coverage carrier.
inline Assignment associate(const std::vector<UESession>& sessions, const OnOffConfig& config,
                            const CarrierProfiles& profiles) {
  for (int i = 0; i < kSectors; ++i)
    if (!config.on(i, 0)) throw std::invalid_argument("associate: coverage carrier must be on");
  std::vector<const UESession*> order;
  order.reserve(sessions.size());
  for (const auto& s : sessions) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const UESession* a, const UESession* b) { return a->id < b->id; });

  std::array<int, kCells> used{};
  Assignment out;
  for (const UESession* s : order) {
    int best = -1;
    int best_free = -1;
    for (int j = 0; j < kCarriers; ++j) {
      if (!config.on(s->sector, j)) continue;
      const int cell = s->sector * kCarriers + j;
      const int free = profiles[j].max_prbs - used[cell];
      if (free < detail::prb_request(s->demand, profiles[j])) continue;
      if (free > best_free) {
        best_free = free;
        best = j;
      }
    }
    if (best < 0) best = 0;
    const int cell = s->sector * kCarriers + best;
    used[cell] += detail::prb_request(s->demand, profiles[best]);
    out.emplace(s->id, CellId{0, s->sector, best});
  }
  return out;
}

// Grants per session (same order as the input). Oversubscribed cells share
// PRBs proportionally with largest-remainder rounding, ties to lower id.
inline std::vector<int> allocate_prbs(const std::vector<UESession>& cell_sessions, const CarrierProfile& profile) {
  const std::size_t n = cell_sessions.size();
  std::vector<int> req(n);
  long total = 0;
  for (std::size_t k = 0; k < n; ++k) {
    req[k] = detail::prb_request(cell_sessions[k].demand, profile);
    total += req[k];
  }
  if (total <= profile.max_prbs) return req;

  std::vector<int> grant(n);
  std::vector<double> frac(n);
  long granted = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double share = static_cast<double>(req[k]) * profile.max_prbs / static_cast<double>(total);
    grant[k] = static_cast<int>(std::floor(share));
    frac[k] = share - grant[k];
    granted += grant[k];
  }
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    return cell_sessions[a].id < cell_sessions[b].id;
  });
  for (std::size_t k = 0; granted < profile.max_prbs && k < n; ++k, ++granted) ++grant[order[k]];
  return grant;
}

inline CellCounts counts_of(const StationState& s) {
  CellCounts c{};
  for (int k = 0; k < kCells; ++k) c[k] = static_cast<int>(std::lround(s.cells[k].ue_count));
  return c;
}

// Per-cell observation for a given population, assignment, and configuration.
inline StationState observe(const std::vector<UESession>& sessions, const Assignment& assignment,
                            const OnOffConfig& config, const CarrierProfiles& profiles, int step) {
  std::array<std::vector<UESession>, kCells> per_cell;
  for (const auto& s : sessions) per_cell[assignment.at(s.id).index()].push_back(s);

  StationState st;
  st.step = step;
  st.config = config;
  for (int c = 0; c < kCells; ++c) {
    auto& obs = st.cells[c];
    obs.on = config.bits[c];
    const auto& prof = profiles[c % kCarriers];
    auto& members = per_cell[c];
    std::sort(members.begin(), members.end(), [](const UESession& a, const UESession& b) { return a.id < b.id; });
    if (members.empty()) continue;
    const auto grants = allocate_prbs(members, prof);
    long prbs = 0;
    for (int g : grants) prbs += g;
    obs.ue_count = static_cast<double>(members.size());
    obs.allocated_prbs = static_cast<double>(prbs);
    obs.throughput = static_cast<double>(prbs) * prof.prb_rate;
    obs.tx_time = kStepSeconds;
    obs.delivered = obs.throughput * obs.tx_time;
  }
  return st;
}

inline StepMetrics metrics_for(const StationState& realized, const OnOffConfig& prev_config,
                               const CellCounts& prev_counts, const SimParams& params) {
  StepMetrics m;
  m.power = station_power(realized, prev_config, params.profiles, params.beta, params.p_gamma);
  m.qos = qos_uncongested_pct(realized.cells, params.tau);
  const auto cur = counts_of(realized);
  m.handovers = handover_count(prev_counts, cur);
  return m;
}

// Start of day: the population is pre-filled to the expected level at step 0
// and served by the all-on configuration; that snapshot is the first observation.
inline SimState initial_state(const ScenarioSpec& spec, std::uint64_t run_seed, const SimParams& params) {
  spec.validate();
  SimState sim;
  sim.rng = Rng(derive_seed({spec.seed, run_seed}));
  sim.config = OnOffConfig::all_on();
  const long n = sim.rng.poisson(expected_ue_count(spec, 0));
  for (long k = 0; k < n; ++k)
    sim.sessions.push_back(detail::spawn_session(sim.rng, spec, params.mean_lifetime, sim.next_id++, -1));
  sim.assignment = associate(sim.sessions, sim.config, params.profiles);
  sim.observed = observe(sim.sessions, sim.assignment, sim.config, params.profiles, 0);
  sim.prev_counts = counts_of(sim.observed);
  return sim;
}

struct StepResult {
  SimState next;
  StationState state;  // realized during the step; the next observation
  StepMetrics metrics;
};

inline StepResult step(const SimState& sim, const Action& action, const ScenarioSpec& spec, const SimParams& params) {
  if (sim.t >= kStepsPerDay) throw EpisodeFinished("step: episode already finished");
  if (!action.valid()) throw InvalidAction("step: invalid action");
  StepResult r;
  r.next = sim;
  auto& nx = r.next;
  nx.config = apply_action(action);
  nx.sessions = evolve_sessions(nx, spec, nx.rng, params.mean_lifetime);
  nx.assignment = associate(nx.sessions, nx.config, params.profiles);
  r.state = observe(nx.sessions, nx.assignment, nx.config, params.profiles, sim.t + 1);
  r.metrics = metrics_for(r.state, sim.config, sim.prev_counts, params);
  nx.prev_counts = counts_of(r.state);
  nx.observed = r.state;
  nx.t = sim.t + 1;
  return r;
}

template <class P>
concept StepPolicy = requires(P& p, const StationState& s, const OnOffConfig& c, const StepMetrics& m) {
  { p.act(s, c) } -> std::convertible_to<Action>;
  p.observe(m);
};

inline std::vector<TraceRecord> run_episode(const ScenarioSpec& spec, StepPolicy auto& policy, std::uint64_t run_seed,
                                            const SimParams& params = {}) {
  SimState sim = initial_state(spec, run_seed, params);
  std::vector<TraceRecord> trace;
  trace.reserve(kStepsPerDay);
  for (int t = 0; t < kStepsPerDay; ++t) {
    const Action a = policy.act(sim.observed, sim.config);
    if (!a.valid()) throw InvalidAction("run_episode: policy returned an invalid action");
    TraceRecord rec;
    rec.t = t;
    rec.state = sim.observed;
    rec.action = a;
    auto r = step(sim, a, spec, params);
    rec.power = r.metrics.power;
    rec.qos = r.metrics.qos;
    rec.handovers = r.metrics.handovers;
    policy.observe(r.metrics);
    trace.push_back(rec);
    sim = std::move(r.next);
  }
  return trace;
}

// Per-step mean of the numeric observation fields. On/off fields are decision
// variables and are left at the all-on default.
inline std::vector<StationState> mean_traffic(const std::vector<std::vector<TraceRecord>>& traces) {
  if (traces.empty()) throw std::invalid_argument("mean_traffic: no traces");
  std::vector<StationState> out(kStepsPerDay);
  for (int t = 0; t < kStepsPerDay; ++t) out[t].step = t;
  for (const auto& tr : traces) {
    if (static_cast<int>(tr.size()) != kStepsPerDay) throw std::invalid_argument("mean_traffic: trace length != 96");
    for (int t = 0; t < kStepsPerDay; ++t) {
      for (int c = 0; c < kCells; ++c) {
        const auto& src = tr[t].state.cells[c];
        auto& dst = out[t].cells[c];
        dst.ue_count += src.ue_count;
        dst.throughput += src.throughput;
        dst.allocated_prbs += src.allocated_prbs;
        dst.delivered += src.delivered;
        dst.tx_time += src.tx_time;
      }
    }
  }
  const double n = static_cast<double>(traces.size());
  for (auto& st : out) {
    for (auto& c : st.cells) {
      c.ue_count /= n;
      c.throughput /= n;
      c.allocated_prbs /= n;
      c.delivered /= n;
      c.tx_time /= n;
      c.on = true;
    }
  }
  return out;
}

}  // namespace cellsleep
