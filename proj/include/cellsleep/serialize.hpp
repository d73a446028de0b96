#pragma once

// JSON mappings for scenarios, carrier profiles, trace records, trained
// models and cost-to-go tables.

#include <string>
#include <vector>

#include "cellsleep/ctg.hpp"
#include "cellsleep/estimators.hpp"
#include "cellsleep/io.hpp"
#include "cellsleep/simkernel.hpp"

namespace cellsleep {

inline constexpr int kSchemaVersion = 1;

inline void require_schema(const Json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("schema_version"))
    throw ArtifactError(what + ": missing schema_version");
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw ArtifactError(what + ": unsupported schema_version " + j.at("schema_version").dump());
}

template <class F>
auto artifact_field(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw ArtifactError(what + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ArtifactError(what + ": " + e.what());
  }
}

inline std::string mask_string(std::uint8_t mask) {
  std::string s(kSwitchable, '0');
  for (int j = 1; j < kCarriers; ++j)
    if ((mask >> Action::bit_of(j)) & 1U) s[static_cast<std::size_t>(j - 1)] = '1';
  return s;
}

inline std::uint8_t parse_mask(const std::string& s) {
  if (s.size() != kSwitchable) throw ArtifactError("action mask must have 4 digits: " + s);
  std::uint8_t m = 0;
  for (int j = 1; j < kCarriers; ++j) {
    const char c = s[static_cast<std::size_t>(j - 1)];
    if (c != '0' && c != '1') throw ArtifactError("action mask must be binary: " + s);
    if (c == '1') m |= static_cast<std::uint8_t>(1U << Action::bit_of(j));
  }
  return m;
}

// ---- scenarios and profiles

inline Json to_json(const ScenarioSpec& s) {
  return Json{{"id", s.id},
              {"base_ue", s.base_ue},
              {"peak_amp", s.peak_amp},
              {"peak_hours", {s.peak_hours[0], s.peak_hours[1]}},
              {"peak_width", s.peak_width},
              {"noise_sd", s.noise_sd},
              {"demand_mean", s.demand_mean},
              {"demand_sd", s.demand_sd},
              {"seed", s.seed}};
}

inline ScenarioSpec scenario_from_json(const Json& j) {
  return artifact_field("scenario", [&] {
    ScenarioSpec s;
    s.id = j.at("id").get<int>();
    s.base_ue = j.at("base_ue").get<double>();
    s.peak_amp = j.at("peak_amp").get<double>();
    s.peak_hours = {j.at("peak_hours").at(0).get<double>(), j.at("peak_hours").at(1).get<double>()};
    s.peak_width = j.at("peak_width").get<double>();
    s.noise_sd = j.at("noise_sd").get<double>();
    s.demand_mean = j.at("demand_mean").get<double>();
    s.demand_sd = j.at("demand_sd").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  });
}

inline Json scenarios_to_json(const std::vector<ScenarioSpec>& specs) {
  Json arr = Json::array();
  for (const auto& s : specs) arr.push_back(to_json(s));
  return Json{{"schema_version", kSchemaVersion}, {"scenarios", arr}};
}

inline std::vector<ScenarioSpec> scenarios_from_json(const Json& j) {
  require_schema(j, "scenario file");
  std::vector<ScenarioSpec> out;
  for (const auto& s : artifact_field("scenario file", [&] { return j.at("scenarios"); })) {
    out.push_back(scenario_from_json(s));
    try {
      out.back().validate();
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
  }
  if (out.empty()) throw ArtifactError("scenario file: no scenarios");
  return out;
}

inline Json to_json(const CarrierProfiles& p) {
  Json arr = Json::array();
  for (const auto& c : p)
    arr.push_back(Json{{"carrier", c.carrier},
                       {"max_prbs", c.max_prbs},
                       {"prb_rate", c.prb_rate},
                       {"p_sleep", c.p_sleep},
                       {"p_standby", c.p_standby},
                       {"p_load", c.p_load},
                       {"coverage_rank", c.coverage_rank}});
  return arr;
}

inline CarrierProfiles profiles_from_json(const Json& j) {
  return artifact_field("carrier profiles", [&] {
    if (!j.is_array() || j.size() != kCarriers) throw ValidationError("carrier profiles: need exactly 5 entries");
    CarrierProfiles p{};
    for (int k = 0; k < kCarriers; ++k) {
      const auto& c = j.at(static_cast<std::size_t>(k));
      p[k] = CarrierProfile{c.at("carrier").get<int>(),      c.at("max_prbs").get<int>(),
                            c.at("prb_rate").get<double>(),  c.at("p_sleep").get<double>(),
                            c.at("p_standby").get<double>(), c.at("p_load").get<double>(),
                            c.at("coverage_rank").get<int>()};
    }
    try {
      validate_profiles(p);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
    return p;
  });
}

// ---- traces

inline Json to_json(const TraceRecord& r) {
  Json ue = Json::array(), tp = Json::array(), prb = Json::array(), e = Json::array();
  for (int c = 0; c < kCells; ++c) {
    const auto& cell = r.state.cells[c];
    ue.push_back(cell.ue_count);
    tp.push_back(cell.throughput);
    prb.push_back(cell.allocated_prbs);
    e.push_back(r.state.config.bits[c] ? 1 : 0);
  }
  return Json{{"t", r.t},         {"ue", ue},          {"tp", tp},          {"prb", prb},
              {"e", e},           {"action", mask_string(r.action.mask)},   {"power", r.power},
              {"qos", r.qos},     {"handover", r.handovers}};
}

inline TraceRecord trace_record_from_json(const Json& j, Mode mode) {
  return artifact_field("trace record", [&] {
    TraceRecord r;
    r.t = j.at("t").get<int>();
    r.state.step = r.t;
    for (int c = 0; c < kCells; ++c) {
      auto& cell = r.state.cells[c];
      const auto k = static_cast<std::size_t>(c);
      cell.ue_count = j.at("ue").at(k).get<double>();
      cell.throughput = j.at("tp").at(k).get<double>();
      cell.allocated_prbs = j.at("prb").at(k).get<double>();
      const bool on = j.at("e").at(k).get<int>() != 0;
      cell.on = on;
      r.state.config.bits[c] = on;
      cell.tx_time = cell.ue_count > 0.0 ? kStepSeconds : 0.0;
      cell.delivered = cell.throughput * cell.tx_time;
    }
    r.action = Action{parse_mask(j.at("action").get<std::string>()), mode};
    if (!r.action.valid()) r.action.mode = Mode::FourCell;
    r.power = j.at("power").get<double>();
    r.qos = j.at("qos").get<double>();
    r.handovers = j.at("handover").get<int>();
    return r;
  });
}

inline std::vector<Json> trace_to_rows(const std::vector<TraceRecord>& trace) {
  std::vector<Json> rows;
  rows.reserve(trace.size());
  for (const auto& r : trace) rows.push_back(to_json(r));
  return rows;
}

inline std::vector<TraceRecord> trace_from_rows(const std::vector<Json>& rows, Mode mode = Mode::FourCell) {
  std::vector<TraceRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(trace_record_from_json(r, mode));
  return out;
}

// ---- models

template <class S>
Json flat(const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& m) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < m.size(); ++k) a.push_back(static_cast<double>(m.data()[k]));
  return a;
}
template <class S>
Json flat(const Eigen::Matrix<S, Eigen::Dynamic, 1>& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(static_cast<double>(v(k)));
  return a;
}

template <class M>
void unflat(const Json& a, M& m, const std::string& what) {
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != m.size())
    throw ArtifactError(what + ": tensor size does not match dims");
  for (Eigen::Index k = 0; k < m.size(); ++k)
    m.data()[k] = static_cast<typename M::Scalar>(a.at(static_cast<std::size_t>(k)).get<double>());
}

inline Json to_json(const FeatureStats& s) {
  Json lo = Json::array(), hi = Json::array();
  for (int k = 0; k < kStateFeatures; ++k) {
    lo.push_back(s.lo[k]);
    hi.push_back(s.hi[k]);
  }
  return Json{{"min", lo}, {"max", hi}};
}

inline FeatureStats stats_from_json(const Json& j) {
  return artifact_field("norm_stats", [&] {
    FeatureStats s;
    if (j.at("min").size() != kStateFeatures || j.at("max").size() != kStateFeatures)
      throw ArtifactError("norm_stats: expected 60 entries");
    for (int k = 0; k < kStateFeatures; ++k) {
      s.lo[k] = j.at("min").at(static_cast<std::size_t>(k)).get<double>();
      s.hi[k] = j.at("max").at(static_cast<std::size_t>(k)).get<double>();
    }
    s.fitted = true;
    return s;
  });
}

inline Json model_json(const TrainedMlp& m, const std::string& target, const FeatureStats& stats, int window) {
  Json w = Json::array();
  for (std::size_t l = 0; l < m.net.layers(); ++l) w.push_back(Json{{"w", flat(m.net.weights[l])}, {"b", flat(m.net.biases[l])}});
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "mlp"},
              {"target", target},
              {"dims", m.net.dims},
              {"weights", w},
              {"target_scale", {m.target.lo, m.target.hi}},
              {"window", window},
              {"norm_stats", to_json(stats)}};
}

inline Json model_json(const TrainedLstm& m, const FeatureStats& stats, int window) {
  Json cells = Json::array();
  for (const auto& c : m.net.cells) cells.push_back(Json{{"w", flat(c.w)}, {"u", flat(c.u)}, {"b", flat(c.b)}});
  std::vector<int> dims{m.net.input_dim};
  dims.insert(dims.end(), m.net.hidden.begin(), m.net.hidden.end());
  dims.push_back(1);
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "lstm"},
              {"target", "handover"},
              {"dims", dims},
              {"weights", {{"cells", cells}, {"head_w", flat(m.net.head_w)}, {"head_b", flat(m.net.head_b)}}},
              {"target_scale", {m.target.lo, m.target.hi}},
              {"window", window},
              {"norm_stats", to_json(stats)}};
}

inline TrainedMlp mlp_from_json(const Json& j) {
  require_schema(j, "model");
  return artifact_field("mlp model", [&] {
    if (j.at("kind") != "mlp") throw ArtifactError("model: expected kind mlp");
    TrainedMlp m;
    m.net = Mlp<Real>::zeros(j.at("dims").get<std::vector<int>>());
    const auto& w = j.at("weights");
    if (w.size() != m.net.layers()) throw ArtifactError("mlp model: layer count does not match dims");
    for (std::size_t l = 0; l < m.net.layers(); ++l) {
      unflat(w.at(l).at("w"), m.net.weights[l], "mlp model");
      unflat(w.at(l).at("b"), m.net.biases[l], "mlp model");
    }
    m.target = TargetScaler{j.at("target_scale").at(0).get<double>(), j.at("target_scale").at(1).get<double>()};
    if (!m.net.all_finite()) throw ArtifactError("mlp model: non-finite weights");
    return m;
  });
}

inline TrainedLstm lstm_from_json(const Json& j) {
  require_schema(j, "model");
  return artifact_field("lstm model", [&] {
    if (j.at("kind") != "lstm") throw ArtifactError("model: expected kind lstm");
    const auto dims = j.at("dims").get<std::vector<int>>();
    if (dims.size() < 3 || dims.back() != 1) throw ArtifactError("lstm model: bad dims");
    TrainedLstm m;
    m.net = Lstm<Real>::zeros(dims.front(), std::vector<int>(dims.begin() + 1, dims.end() - 1));
    const auto& w = j.at("weights");
    if (w.at("cells").size() != m.net.cells.size()) throw ArtifactError("lstm model: layer count does not match dims");
    for (std::size_t l = 0; l < m.net.cells.size(); ++l) {
      unflat(w.at("cells").at(l).at("w"), m.net.cells[l].w, "lstm model");
      unflat(w.at("cells").at(l).at("u"), m.net.cells[l].u, "lstm model");
      unflat(w.at("cells").at(l).at("b"), m.net.cells[l].b, "lstm model");
    }
    unflat(w.at("head_w"), m.net.head_w, "lstm model");
    unflat(w.at("head_b"), m.net.head_b, "lstm model");
    m.target = TargetScaler{j.at("target_scale").at(0).get<double>(), j.at("target_scale").at(1).get<double>()};
    if (!m.net.all_finite()) throw ArtifactError("lstm model: non-finite weights");
    return m;
  });
}

// The three model documents each carry the normalization statistics; they
// must agree when loaded together.
inline Estimators estimators_from_json(const Json& power, const Json& qos, const Json& handover,
                                       const CarrierProfiles& profiles) {
  Estimators e;
  e.profiles = profiles;
  e.power = mlp_from_json(power);
  e.qos = mlp_from_json(qos);
  e.handover = lstm_from_json(handover);
  e.stats = stats_from_json(power.at("norm_stats"));
  for (const Json* other : {&qos, &handover}) {
    const auto s = stats_from_json(other->at("norm_stats"));
    if (s.lo != e.stats.lo || s.hi != e.stats.hi) throw ArtifactError("model files disagree on normalization");
  }
  e.window = artifact_field("lstm model", [&] { return handover.at("window").get<int>(); });
  if (e.window < 1) throw ArtifactError("lstm model: window must be >= 1");
  return e;
}

// ---- cost-to-go tables

inline Json to_json(const CostToGoTable& t) {
  Json actions = Json::array(), J = Json::array(), arg = Json::array(), inf = Json::array();
  for (const auto& a : t.actions) actions.push_back(mask_string(a.mask));
  for (const auto& row : t.J) J.push_back(row);
  for (const auto& row : t.argmin) arg.push_back(row);
  for (const auto& row : t.infeasible) {
    Json r = Json::array();
    for (char c : row) r.push_back(c != 0);
    inf.push_back(r);
  }
  return Json{{"schema_version", kSchemaVersion}, {"mode", to_string(t.mode)}, {"T", t.horizon},
              {"actions", actions},             {"J", J},                    {"argmin", arg},
              {"infeasible_flags", inf}};
}

inline CostToGoTable table_from_json(const Json& j) {
  require_schema(j, "cost-to-go table");
  return artifact_field("cost-to-go table", [&] {
    CostToGoTable t;
    t.mode = parse_mode(j.at("mode").get<std::string>());
    t.horizon = j.at("T").get<int>();
    for (const auto& a : j.at("actions")) t.actions.push_back(Action{parse_mask(a.get<std::string>()), t.mode});
    t.J = j.at("J").get<std::vector<std::vector<double>>>();
    t.argmin = j.at("argmin").get<std::vector<std::vector<int>>>();
    for (const auto& row : j.at("infeasible_flags")) {
      std::vector<char> r;
      for (const auto& v : row) r.push_back(v.get<bool>() ? 1 : 0);
      t.infeasible.push_back(r);
    }
    if (t.horizon < 1 || t.J.size() != static_cast<std::size_t>(t.horizon) + 1)
      throw ArtifactError("cost-to-go table: row count does not match T");
    for (const auto& row : t.J)
      if (row.size() != t.actions.size()) throw ArtifactError("cost-to-go table: column count does not match actions");
    return t;
  });
}

}  // namespace cellsleep
