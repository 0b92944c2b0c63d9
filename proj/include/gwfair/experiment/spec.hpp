#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gwfair/erica.hpp"
#include "gwfair/fairness.hpp"
#include "gwfair/network.hpp"
#include "gwfair/sim/engine.hpp"

namespace gwfair::experiment {

enum class Provenance { Oracle, PaperTable };

struct Expected {
  Provenance provenance = Provenance::Oracle;
  std::map<std::string, double> rates;  // report row label -> Mbps

  bool operator==(const Expected&) const = default;
};

// What a run must show to pass.
struct VerdictRule {
  double rel_tol = 0.02;
  double abs_tol_mbps = 1.0;
  double window = 0.2;      // trailing fraction measured in single-phase runs
  double settle_ms = 100.0; // skipped after every phase change in multi-phase runs
  bool require_oracle_match = true;
  bool expect_not_converged = false;
  std::optional<double> min_utilization;
  double max_dip_ms = 50.0;
  std::optional<double> max_z_deviation;
  bool require_stable_queue = false;
  // VCs whose ACR must settle near a given value (checked in the last phase).
  std::map<std::string, double> acr_targets;

  bool operator==(const VerdictRule&) const = default;
};

struct ExperimentSpec {
  std::string name;
  NetworkSpec network;
  std::map<std::string, sim::SourceModel> sources;
  SwitchParams switch_params;
  sim::EngineOptions engine;
  double duration_ms = 400.0;
  std::optional<WeightPolicy> policy;  // when set, session weights derive from it
  std::optional<Expected> expected;
  std::map<std::string, double> paper;  // informational table values, by row label
  VerdictRule verdict;

  bool operator==(const ExperimentSpec&) const = default;

  // Resolves session weights from the policy, if any.
  void apply_policy() {
    if (!policy) return;
    std::vector<SessionParams> params;
    for (const auto& s : network.sessions) params.push_back({s.id, s.mcr_mbps, s.weight});
    const auto weights = resolve_weights(*policy, params);
    for (std::size_t i = 0; i < weights.size(); ++i) network.sessions[i].weight = weights[i];
  }

  void validate() const {
    if (name.empty()) throw Error(ErrorKind::SemanticError, "experiment needs a name");
    if (!(duration_ms > 0.0)) throw Error(ErrorKind::SemanticError, "duration must be > 0");
    try {
      network.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::SemanticError, e.message());
    }
    if (network.sessions.empty()) throw Error(ErrorKind::SemanticError, "no sessions");
    for (const auto& s : network.sessions)
      if (!sources.count(s.id)) throw Error(ErrorKind::SemanticError, "session " + s.id + " has no source");
    if (!(verdict.window > 0.0 && verdict.window <= 1.0))
      throw Error(ErrorKind::SemanticError, "verdict window must lie in (0, 1]");
  }
};

// A stretch of the run with a fixed set of active sources.
struct Phase {
  double start_ms;
  double end_ms;
  std::vector<std::string> active;
};

inline std::vector<Phase> phases(const ExperimentSpec& spec) {
  std::vector<double> cuts{0.0, spec.duration_ms};
  for (const auto& [_, m] : spec.sources) {
    if (m.kind != sim::SourceModel::Kind::Transient) continue;
    for (double t : {m.start_ms, m.stop_ms})
      if (t > 0.0 && t < spec.duration_ms) cuts.push_back(t);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<Phase> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Phase p{cuts[i], cuts[i + 1], {}};
    for (const auto& s : spec.network.sessions) {
      const auto& m = spec.sources.at(s.id);
      const bool on = m.kind != sim::SourceModel::Kind::Transient || (m.start_ms <= p.start_ms && m.stop_ms >= p.end_ms);
      if (on) p.active.push_back(s.id);
    }
    if (!p.active.empty()) out.push_back(std::move(p));
  }
  return out;
}

inline std::string format_ms(double ms) {
  // Phase boundaries are whole milliseconds in every shipped configuration.
  if (ms == static_cast<double>(static_cast<long long>(ms))) return std::to_string(static_cast<long long>(ms));
  return std::to_string(ms);
}

inline std::string row_label(const std::string& vc, const Phase& p, bool multi_phase) {
  if (!multi_phase) return vc;
  return vc + "@" + format_ms(p.start_ms) + "-" + format_ms(p.end_ms);
}

// The network restricted to the sessions active in a phase.
inline NetworkSpec phase_network(const ExperimentSpec& spec, const Phase& p) {
  NetworkSpec net;
  net.links = spec.network.links;
  for (const auto& s : spec.network.sessions)
    if (std::find(p.active.begin(), p.active.end(), s.id) != p.active.end()) net.sessions.push_back(s);
  return net;
}

}  // namespace gwfair::experiment
