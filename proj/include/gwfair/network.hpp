#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "gwfair/error.hpp"
#include "gwfair/fairness.hpp"

namespace gwfair {

struct Link {
  std::string id;
  double capacity_mbps = 0.0;
  double length_km = 0.0;
  // Switch names at either end; only the simulator uses them.
  std::string from;
  std::string to;

  bool operator==(const Link&) const = default;
};

struct Session {
  std::string id;
  std::vector<std::string> route;  // ordered link ids
  double mcr_mbps = 0.0;
  double weight = 1.0;
  std::optional<double> cap_mbps;  // source bottleneck

  bool operator==(const Session&) const = default;
};

struct NetworkSpec {
  std::vector<Link> links;
  std::vector<Session> sessions;

  bool operator==(const NetworkSpec&) const = default;

  std::optional<std::size_t> link_index(const std::string& id) const {
    for (std::size_t i = 0; i < links.size(); ++i)
      if (links[i].id == id) return i;
    return std::nullopt;
  }

  std::optional<std::size_t> session_index(const std::string& id) const {
    for (std::size_t i = 0; i < sessions.size(); ++i)
      if (sessions[i].id == id) return i;
    return std::nullopt;
  }

  // Throws SemanticError for structural problems and Infeasible when MCRs
  // oversubscribe a link.
  void validate() const {
    std::set<std::string> link_ids;
    for (const auto& l : links) {
      if (l.id.empty()) throw Error(ErrorKind::SemanticError, "link with empty id");
      if (!link_ids.insert(l.id).second) throw Error(ErrorKind::SemanticError, "duplicate link " + l.id);
      if (!(l.capacity_mbps > 0.0))
        throw Error(ErrorKind::SemanticError, "link " + l.id + " needs capacity > 0");
      if (!(l.length_km >= 0.0)) throw Error(ErrorKind::SemanticError, "link " + l.id + " has negative length");
    }
    std::set<std::string> session_ids;
    std::map<std::string, std::vector<double>> mcrs_on_link;
    for (const auto& s : sessions) {
      if (s.id.empty()) throw Error(ErrorKind::SemanticError, "session with empty id");
      if (!session_ids.insert(s.id).second) throw Error(ErrorKind::SemanticError, "duplicate session " + s.id);
      if (s.route.empty()) throw Error(ErrorKind::SemanticError, "session " + s.id + " has an empty route");
      if (!(s.mcr_mbps >= 0.0)) throw Error(ErrorKind::SemanticError, "session " + s.id + " has negative MCR");
      if (!(s.weight > 0.0)) throw Error(ErrorKind::SemanticError, "session " + s.id + " needs weight > 0");
      if (s.cap_mbps && !(*s.cap_mbps >= s.mcr_mbps))
        throw Error(ErrorKind::SemanticError, "session " + s.id + " has cap below its MCR");
      std::set<std::string> seen;
      for (const auto& l : s.route) {
        if (!link_ids.count(l))
          throw Error(ErrorKind::SemanticError, "session " + s.id + " routes over unknown link " + l);
        if (!seen.insert(l).second)
          throw Error(ErrorKind::SemanticError, "session " + s.id + " crosses link " + l + " twice");
        mcrs_on_link[l].push_back(s.mcr_mbps);
      }
    }
    for (const auto& l : links) {
      const auto& mcrs = mcrs_on_link[l.id];
      if (auto bad = validate_feasible(l.capacity_mbps, mcrs))
        throw Error(ErrorKind::Infeasible,
                    "MCRs on link " + l.id + " exceed capacity by " + std::to_string(bad->deficit));
    }
  }
};

struct Allocation {
  std::map<std::string, double> rates;  // session id -> Mbps

  double at(const std::string& id) const {
    auto it = rates.find(id);
    if (it == rates.end()) throw Error(ErrorKind::InvalidArgument, "no rate for session " + id);
    return it->second;
  }

  bool operator==(const Allocation&) const = default;
};

}  // namespace gwfair
