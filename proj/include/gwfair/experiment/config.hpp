#pragma once

// Line-oriented experiment files.
//
//   # comment
//   [experiment]        name, duration_ms
//   [switch]            averaging_interval_ms, target_delay_ms, qdlf_floor,
//                       fraction_steepness, z_min, use_measured_source_rate
//   [engine]            sample_period_ms, nrm
//   [policy]            kind = max_min | mcr_plus_equal | proportional_to_mcr
//                              | pricing | explicit; a (pricing); weights (explicit)
//   [link ID]           capacity_mbps, length_km, from, to, vbr_mbps
//   [session ID]        route, mcr_mbps, weight, source = greedy | rate_capped
//                       | transient, icr_mbps, pcr_mbps, cap_mbps, start_ms,
//                       stop_ms, access_km
//   [verdict]           rel_tol, abs_tol_mbps, window, settle_ms,
//                       require_oracle_match, expect_not_converged,
//                       min_utilization, max_dip_ms, max_z_deviation,
//                       require_stable_queue, acr_target.VC
//   [expected]          provenance = oracle | paper-table, then LABEL = Mbps
//   [paper]             LABEL = Mbps
//
// Lists (route, weights) are whitespace or comma separated.

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <variant>
#include <vector>

#include "gwfair/experiment/spec.hpp"

namespace gwfair::experiment {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view text, int line) {
  text = trim(text);
  if (text == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc{} || res.ptr != end)
    throw Error(ErrorKind::ParseError, "expected a number, got '" + std::string(text) + "'", line);
  return v;
}

inline bool parse_bool(std::string_view text, int line) {
  text = trim(text);
  if (text == "true") return true;
  if (text == "false") return false;
  throw Error(ErrorKind::ParseError, "expected true or false, got '" + std::string(text) + "'", line);
}

inline std::vector<std::string> parse_list(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct Entry {
  std::string value;
  int line;
};

struct Section {
  std::string kind;
  std::string id;
  int line;
  std::vector<std::pair<std::string, Entry>> entries;  // file order
};

inline std::vector<Section> split_sections(const std::string& text) {
  std::vector<Section> out;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw Error(ErrorKind::ParseError, "unterminated section header", line);
      auto inner = trim(s.substr(1, s.size() - 2));
      Section sec;
      sec.line = line;
      const auto sp = inner.find_first_of(" \t");
      sec.kind = std::string(inner.substr(0, sp));
      if (sp != std::string_view::npos) sec.id = std::string(trim(inner.substr(sp)));
      out.push_back(std::move(sec));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::ParseError, "expected key = value", line);
    if (out.empty()) throw Error(ErrorKind::ParseError, "key outside any section", line);
    const std::string key(trim(s.substr(0, eq)));
    if (key.empty()) throw Error(ErrorKind::ParseError, "empty key", line);
    for (const auto& [k, _] : out.back().entries)
      if (k == key) throw Error(ErrorKind::ParseError, "duplicate key " + key, line);
    out.back().entries.push_back({key, Entry{std::string(trim(s.substr(eq + 1))), line}});
  }
  return out;
}

// Dispatches each key of a section to its handler; unknown keys are errors.
using Handlers = std::map<std::string, std::function<void(const Entry&)>>;

inline void dispatch(const Section& sec, const Handlers& handlers) {
  for (const auto& [key, entry] : sec.entries) {
    auto it = handlers.find(key);
    if (it == handlers.end())
      throw Error(ErrorKind::ParseError, "unknown key '" + key + "' in [" + sec.kind + "]", entry.line);
    it->second(entry);
  }
}

inline bool has(const Section& sec, const std::string& key) {
  for (const auto& [k, _] : sec.entries)
    if (k == key) return true;
  return false;
}

inline void require_id(const Section& sec, bool wanted) {
  if (wanted && sec.id.empty()) throw Error(ErrorKind::ParseError, "[" + sec.kind + "] needs an id", sec.line);
  if (!wanted && !sec.id.empty())
    throw Error(ErrorKind::ParseError, "[" + sec.kind + "] takes no id", sec.line);
}

inline void parse_session(const Section& sec, ExperimentSpec& spec) {
  Session s;
  s.id = sec.id;
  sim::SourceModel m;
  std::string source = "greedy";
  std::optional<double> cap;
  int cap_line = sec.line;
  auto num = [](double& dst) { return [&dst](const Entry& e) { dst = parse_number(e.value, e.line); }; };
  dispatch(sec, Handlers{
                 {"route", [&](const Entry& e) { s.route = parse_list(e.value); }},
                 {"mcr_mbps", num(s.mcr_mbps)},
                 {"weight", num(s.weight)},
                 {"source", [&](const Entry& e) { source = e.value; }},
                 {"icr_mbps", num(m.icr_mbps)},
                 {"pcr_mbps", num(m.pcr_mbps)},
                 {"cap_mbps",
                  [&](const Entry& e) {
                    cap = parse_number(e.value, e.line);
                    cap_line = e.line;
                  }},
                 {"start_ms", num(m.start_ms)},
                 {"stop_ms", num(m.stop_ms)},
                 {"access_km", num(m.access_km)},
             });
  if (!has(sec, "route")) throw Error(ErrorKind::ParseError, "session " + s.id + " needs a route", sec.line);
  if (!has(sec, "icr_mbps")) throw Error(ErrorKind::ParseError, "session " + s.id + " needs icr_mbps", sec.line);
  if (source == "greedy") {
    m.kind = sim::SourceModel::Kind::Greedy;
  } else if (source == "rate_capped") {
    m.kind = sim::SourceModel::Kind::RateCapped;
    if (!cap) throw Error(ErrorKind::ParseError, "rate_capped session " + s.id + " needs cap_mbps", sec.line);
  } else if (source == "transient") {
    m.kind = sim::SourceModel::Kind::Transient;
    if (!has(sec, "start_ms") || !has(sec, "stop_ms"))
      throw Error(ErrorKind::ParseError, "transient session " + s.id + " needs start_ms and stop_ms", sec.line);
  } else {
    throw Error(ErrorKind::ParseError, "unknown source kind '" + source + "'", sec.line);
  }
  if (cap && m.kind != sim::SourceModel::Kind::RateCapped)
    throw Error(ErrorKind::ParseError, "cap_mbps needs source = rate_capped", cap_line);
  if (cap) {
    m.cap_mbps = *cap;
    s.cap_mbps = cap;
  }
  if (spec.sources.count(s.id)) throw Error(ErrorKind::SemanticError, "duplicate session " + s.id, sec.line);
  spec.sources[s.id] = m;
  spec.network.sessions.push_back(std::move(s));
}

inline WeightPolicy parse_policy(const Section& sec) {
  std::string kind;
  std::optional<double> a;
  std::vector<double> weights;
  int line = sec.line;
  dispatch(sec, Handlers{
                 {"kind", [&](const Entry& e) { kind = e.value; }},
                 {"a",
                  [&](const Entry& e) {
                    a = parse_number(e.value, e.line);
                    line = e.line;
                  }},
                 {"weights",
                  [&](const Entry& e) {
                    for (const auto& w : parse_list(e.value)) weights.push_back(parse_number(w, e.line));
                  }},
             });
  if (kind == "max_min") return policy::MaxMin{};
  if (kind == "mcr_plus_equal") return policy::McrPlusEqual{};
  if (kind == "proportional_to_mcr") return policy::ProportionalToMcr{};
  if (kind == "explicit") return policy::Explicit{weights};
  if (kind == "pricing") {
    if (!a) throw Error(ErrorKind::ParseError, "pricing policy needs a", sec.line);
    if (std::isinf(*a)) return policy::Pricing{FixedCostRatio::infinite()};
    try {
      return policy::Pricing{FixedCostRatio::finite(*a)};
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, e.message(), line);
    }
  }
  throw Error(ErrorKind::ParseError, "unknown policy kind '" + kind + "'", sec.line);
}

}  // namespace detail

inline ExperimentSpec parse_config(const std::string& text) {
  using namespace detail;
  ExperimentSpec spec;
  const auto sections = split_sections(text);
  std::set<std::string> singletons;
  bool saw_experiment = false;
  std::set<std::string> link_ids;
  auto num = [](double& dst) { return [&dst](const Entry& e) { dst = parse_number(e.value, e.line); }; };
  auto opt = [](std::optional<double>& dst) {
    return [&dst](const Entry& e) { dst = parse_number(e.value, e.line); };
  };
  auto flag = [](bool& dst) { return [&dst](const Entry& e) { dst = parse_bool(e.value, e.line); }; };

  for (const auto& sec : sections) {
    const bool keyed = sec.kind == "link" || sec.kind == "session";
    if (!keyed && !singletons.insert(sec.kind).second)
      throw Error(ErrorKind::ParseError, "duplicate section [" + sec.kind + "]", sec.line);

    if (sec.kind == "experiment") {
      require_id(sec, false);
      saw_experiment = true;
      dispatch(sec, Handlers{{"name", [&](const Entry& e) { spec.name = e.value; }},
                          {"duration_ms", num(spec.duration_ms)}});
    } else if (sec.kind == "switch") {
      require_id(sec, false);
      auto& p = spec.switch_params;
      dispatch(sec, Handlers{{"averaging_interval_ms", num(p.averaging_interval_ms)},
                          {"target_delay_ms", num(p.target_delay_ms)},
                          {"qdlf_floor", num(p.qdlf_floor)},
                          {"fraction_steepness", num(p.fraction_steepness)},
                          {"z_min", num(p.z_min)},
                          {"use_measured_source_rate", flag(p.use_measured_source_rate)}});
    } else if (sec.kind == "engine") {
      require_id(sec, false);
      dispatch(sec, Handlers{{"sample_period_ms", num(spec.engine.sample_period_ms)},
                          {"nrm", [&](const Entry& e) {
                             const double v = parse_number(e.value, e.line);
                             if (v != std::floor(v)) throw Error(ErrorKind::ParseError, "nrm must be an integer", e.line);
                             spec.engine.nrm = static_cast<int>(v);
                           }}});
    } else if (sec.kind == "policy") {
      require_id(sec, false);
      spec.policy = parse_policy(sec);
    } else if (sec.kind == "link") {
      require_id(sec, true);
      Link l;
      l.id = sec.id;
      std::optional<double> vbr;
      dispatch(sec, Handlers{{"capacity_mbps", num(l.capacity_mbps)},
                          {"length_km", num(l.length_km)},
                          {"from", [&](const Entry& e) { l.from = e.value; }},
                          {"to", [&](const Entry& e) { l.to = e.value; }},
                          {"vbr_mbps", opt(vbr)}});
      if (!has(sec, "capacity_mbps"))
        throw Error(ErrorKind::ParseError, "link " + l.id + " needs capacity_mbps", sec.line);
      if (!link_ids.insert(l.id).second) throw Error(ErrorKind::SemanticError, "duplicate link " + l.id, sec.line);
      if (vbr) spec.engine.vbr_reservation_mbps[l.id] = *vbr;
      spec.network.links.push_back(std::move(l));
    } else if (sec.kind == "session") {
      require_id(sec, true);
      parse_session(sec, spec);
    } else if (sec.kind == "verdict") {
      require_id(sec, false);
      auto& v = spec.verdict;
      for (const auto& [key, entry] : sec.entries) {
        static constexpr std::string_view prefix = "acr_target.";
        if (key.rfind(prefix, 0) == 0 && key.size() > prefix.size()) {
          v.acr_targets[key.substr(prefix.size())] = parse_number(entry.value, entry.line);
          continue;
        }
        Section one{sec.kind, sec.id, sec.line, {{key, entry}}};
        dispatch(one, Handlers{{"rel_tol", num(v.rel_tol)},
                            {"abs_tol_mbps", num(v.abs_tol_mbps)},
                            {"window", num(v.window)},
                            {"settle_ms", num(v.settle_ms)},
                            {"require_oracle_match", flag(v.require_oracle_match)},
                            {"expect_not_converged", flag(v.expect_not_converged)},
                            {"min_utilization", opt(v.min_utilization)},
                            {"max_dip_ms", num(v.max_dip_ms)},
                            {"max_z_deviation", opt(v.max_z_deviation)},
                            {"require_stable_queue", flag(v.require_stable_queue)}});
      }
    } else if (sec.kind == "expected") {
      require_id(sec, false);
      Expected ex;
      for (const auto& [key, entry] : sec.entries) {
        if (key == "provenance") {
          if (entry.value == "oracle") ex.provenance = Provenance::Oracle;
          else if (entry.value == "paper-table") ex.provenance = Provenance::PaperTable;
          else throw Error(ErrorKind::ParseError, "provenance must be oracle or paper-table", entry.line);
        } else {
          ex.rates[key] = parse_number(entry.value, entry.line);
        }
      }
      spec.expected = std::move(ex);
    } else if (sec.kind == "paper") {
      require_id(sec, false);
      for (const auto& [key, entry] : sec.entries) spec.paper[key] = parse_number(entry.value, entry.line);
    } else {
      throw Error(ErrorKind::ParseError, "unknown section [" + sec.kind + "]", sec.line);
    }
  }
  if (!saw_experiment) throw Error(ErrorKind::ParseError, "missing [experiment] section", 1);
  try {
    spec.apply_policy();
  } catch (const Error& e) {
    throw Error(ErrorKind::SemanticError, e.message());
  }
  spec.validate();
  if (spec.expected) {
    for (const auto& s : spec.network.sessions) {
      bool covered = false;
      for (const auto& [label, _] : spec.expected->rates)
        if (label == s.id || label.rfind(s.id + "@", 0) == 0) covered = true;
      if (!covered) throw Error(ErrorKind::SemanticError, "[expected] does not cover session " + s.id);
    }
  }
  return spec;
}

inline ExperimentSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

inline std::string serialize(const ExperimentSpec& spec) {
  using detail::fmt;
  std::ostringstream out;
  out << "[experiment]\nname = " << spec.name << "\nduration_ms = " << fmt(spec.duration_ms) << "\n";

  const auto& p = spec.switch_params;
  out << "\n[switch]\naveraging_interval_ms = " << fmt(p.averaging_interval_ms)
      << "\ntarget_delay_ms = " << fmt(p.target_delay_ms) << "\nqdlf_floor = " << fmt(p.qdlf_floor)
      << "\nfraction_steepness = " << fmt(p.fraction_steepness) << "\nz_min = " << fmt(p.z_min)
      << "\nuse_measured_source_rate = " << (p.use_measured_source_rate ? "true" : "false") << "\n";

  out << "\n[engine]\nsample_period_ms = " << fmt(spec.engine.sample_period_ms) << "\nnrm = " << spec.engine.nrm
      << "\n";

  if (spec.policy) {
    out << "\n[policy]\n";
    std::visit(
        [&out](const auto& pol) {
          using T = std::decay_t<decltype(pol)>;
          if constexpr (std::is_same_v<T, policy::MaxMin>) out << "kind = max_min\n";
          else if constexpr (std::is_same_v<T, policy::McrPlusEqual>) out << "kind = mcr_plus_equal\n";
          else if constexpr (std::is_same_v<T, policy::ProportionalToMcr>) out << "kind = proportional_to_mcr\n";
          else if constexpr (std::is_same_v<T, policy::Pricing>)
            out << "kind = pricing\na = " << (pol.a.is_infinite() ? std::string("inf") : fmt(pol.a.value())) << "\n";
          else {
            out << "kind = explicit\nweights =";
            for (double w : pol.weights) out << " " << fmt(w);
            out << "\n";
          }
        },
        *spec.policy);
  }

  for (const auto& l : spec.network.links) {
    out << "\n[link " << l.id << "]\ncapacity_mbps = " << fmt(l.capacity_mbps) << "\nlength_km = " << fmt(l.length_km)
        << "\n";
    if (!l.from.empty()) out << "from = " << l.from << "\n";
    if (!l.to.empty()) out << "to = " << l.to << "\n";
    if (auto it = spec.engine.vbr_reservation_mbps.find(l.id); it != spec.engine.vbr_reservation_mbps.end())
      out << "vbr_mbps = " << fmt(it->second) << "\n";
  }

  for (const auto& s : spec.network.sessions) {
    const auto& m = spec.sources.at(s.id);
    out << "\n[session " << s.id << "]\nroute =";
    for (const auto& l : s.route) out << " " << l;
    out << "\nmcr_mbps = " << fmt(s.mcr_mbps) << "\n";
    if (!spec.policy) out << "weight = " << fmt(s.weight) << "\n";
    switch (m.kind) {
      case sim::SourceModel::Kind::Greedy: out << "source = greedy\n"; break;
      case sim::SourceModel::Kind::RateCapped:
        out << "source = rate_capped\ncap_mbps = " << fmt(m.cap_mbps) << "\n";
        break;
      case sim::SourceModel::Kind::Transient:
        out << "source = transient\nstart_ms = " << fmt(m.start_ms) << "\nstop_ms = " << fmt(m.stop_ms) << "\n";
        break;
    }
    out << "icr_mbps = " << fmt(m.icr_mbps) << "\npcr_mbps = " << fmt(m.pcr_mbps) << "\n";
    if (m.access_km != 0.0) out << "access_km = " << fmt(m.access_km) << "\n";
  }

  const auto& v = spec.verdict;
  out << "\n[verdict]\nrel_tol = " << fmt(v.rel_tol) << "\nabs_tol_mbps = " << fmt(v.abs_tol_mbps)
      << "\nwindow = " << fmt(v.window) << "\nsettle_ms = " << fmt(v.settle_ms)
      << "\nrequire_oracle_match = " << (v.require_oracle_match ? "true" : "false")
      << "\nexpect_not_converged = " << (v.expect_not_converged ? "true" : "false") << "\n";
  if (v.min_utilization) out << "min_utilization = " << fmt(*v.min_utilization) << "\n";
  out << "max_dip_ms = " << fmt(v.max_dip_ms) << "\n";
  if (v.max_z_deviation) out << "max_z_deviation = " << fmt(*v.max_z_deviation) << "\n";
  out << "require_stable_queue = " << (v.require_stable_queue ? "true" : "false") << "\n";
  for (const auto& [vc, target] : v.acr_targets) out << "acr_target." << vc << " = " << fmt(target) << "\n";

  if (spec.expected) {
    out << "\n[expected]\nprovenance = "
        << (spec.expected->provenance == Provenance::Oracle ? "oracle" : "paper-table") << "\n";
    for (const auto& [label, rate] : spec.expected->rates) out << label << " = " << fmt(rate) << "\n";
  }
  if (!spec.paper.empty()) {
    out << "\n[paper]\n";
    for (const auto& [label, rate] : spec.paper) out << label << " = " << fmt(rate) << "\n";
  }
  return out.str();
}

}  // namespace gwfair::experiment
