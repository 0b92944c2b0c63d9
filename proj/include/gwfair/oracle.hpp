#pragma once

// Centralized GW-fair allocation by progressive bottleneck elimination.
//
// Every unresolved session s sits at rate mcr_s + w_s * lambda for a common
// level lambda. Each round finds the smallest level at which either a link
// saturates or a capped session reaches its cap, freezes the affected
// sessions, and repeats on the residual network.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "gwfair/network.hpp"

namespace gwfair {

struct EliminationStep {
  int iteration = 0;                          // 1-based
  double level = 0.0;                         // normalized excess (r - mcr) / w at this step
  std::vector<std::string> links;             // links saturated at this step
  std::vector<std::string> capped_sessions;   // sessions frozen at their cap
  std::vector<std::string> resolved_sessions; // every session frozen at this step
};

struct Solution {
  Allocation allocation;
  std::vector<EliminationStep> order;
};

namespace detail {

inline bool level_ties(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

inline Solution solve_with_order(const NetworkSpec& net) {
  net.validate();
  const std::size_t n_links = net.links.size();
  const std::size_t n_sessions = net.sessions.size();

  std::vector<std::vector<std::size_t>> on_link(n_links);
  for (std::size_t s = 0; s < n_sessions; ++s)
    for (const auto& l : net.sessions[s].route) on_link[*net.link_index(l)].push_back(s);

  std::vector<bool> session_done(n_sessions, false);
  std::vector<bool> link_done(n_links, false);
  std::vector<double> rate(n_sessions, 0.0);
  std::size_t remaining = n_sessions;

  Solution out;
  int iteration = 0;
  while (remaining > 0) {
    ++iteration;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> link_level(n_links, inf);
    double best = inf;

    for (std::size_t l = 0; l < n_links; ++l) {
      if (link_done[l]) continue;
      double residual = net.links[l].capacity_mbps;
      double weight_sum = 0.0;
      for (std::size_t s : on_link[l]) {
        if (session_done[s]) {
          residual -= rate[s];
        } else {
          residual -= net.sessions[s].mcr_mbps;
          weight_sum += net.sessions[s].weight;
        }
      }
      // A link with nothing left to share cannot be a bottleneck.
      if (weight_sum == 0.0) continue;
      link_level[l] = std::max(0.0, residual) / weight_sum;
      best = std::min(best, link_level[l]);
    }

    std::vector<double> cap_level(n_sessions, inf);
    for (std::size_t s = 0; s < n_sessions; ++s) {
      const auto& sess = net.sessions[s];
      if (session_done[s] || !sess.cap_mbps) continue;
      cap_level[s] = (*sess.cap_mbps - sess.mcr_mbps) / sess.weight;
      best = std::min(best, cap_level[s]);
    }

    EliminationStep step;
    step.iteration = iteration;
    step.level = best;

    if (std::isinf(best)) {
      // Only sessions crossing no live link could remain; validate() forbids that.
      throw Error(ErrorKind::SemanticError, "unresolvable sessions remain");
    }

    for (std::size_t s = 0; s < n_sessions; ++s) {
      if (session_done[s] || !detail::level_ties(cap_level[s], best)) continue;
      rate[s] = *net.sessions[s].cap_mbps;
      session_done[s] = true;
      --remaining;
      step.capped_sessions.push_back(net.sessions[s].id);
      step.resolved_sessions.push_back(net.sessions[s].id);
    }
    for (std::size_t l = 0; l < n_links; ++l) {
      if (link_done[l] || !detail::level_ties(link_level[l], best)) continue;
      link_done[l] = true;
      step.links.push_back(net.links[l].id);
      for (std::size_t s : on_link[l]) {
        if (session_done[s]) continue;
        rate[s] = net.sessions[s].mcr_mbps + net.sessions[s].weight * best;
        session_done[s] = true;
        --remaining;
        step.resolved_sessions.push_back(net.sessions[s].id);
      }
    }
    out.order.push_back(std::move(step));
  }

  for (std::size_t s = 0; s < n_sessions; ++s) out.allocation.rates[net.sessions[s].id] = rate[s];
  return out;
}

inline Allocation solve(const NetworkSpec& net) { return solve_with_order(net).allocation; }

inline std::vector<EliminationStep> bottleneck_order(const NetworkSpec& net) {
  return solve_with_order(net).order;
}

struct Violation {
  enum class Kind { MissingRate, LinkOversubscribed, BelowMcr, AboveCap, NoBottleneck };
  Kind kind;
  std::string subject;  // link or session id
  std::string message;
};

// Restates the GW-fair definition as checkable conditions: feasibility,
// per-session bounds, and for every session either its cap or a saturated
// link on which it holds the largest normalized excess. Empty result means ok.
inline std::vector<Violation> verify_allocation(const NetworkSpec& net, const Allocation& alloc,
                                                double tol = 1e-6) {
  std::vector<Violation> out;
  auto scaled = [tol](double v) { return tol * std::max(1.0, std::abs(v)); };

  for (const auto& s : net.sessions)
    if (!alloc.rates.count(s.id))
      out.push_back({Violation::Kind::MissingRate, s.id, "no rate for session " + s.id});
  if (!out.empty()) return out;

  std::vector<double> load(net.links.size(), 0.0);
  std::vector<double> max_excess(net.links.size(), -std::numeric_limits<double>::infinity());
  for (const auto& s : net.sessions) {
    const double r = alloc.rates.at(s.id);
    for (const auto& l : s.route) {
      const std::size_t li = *net.link_index(l);
      load[li] += r;
      max_excess[li] = std::max(max_excess[li], (r - s.mcr_mbps) / s.weight);
    }
  }

  std::vector<bool> saturated(net.links.size(), false);
  for (std::size_t l = 0; l < net.links.size(); ++l) {
    const double cap = net.links[l].capacity_mbps;
    if (load[l] > cap + scaled(cap)) {
      std::ostringstream m;
      m << "link " << net.links[l].id << " carries " << load[l] << " > capacity " << cap;
      out.push_back({Violation::Kind::LinkOversubscribed, net.links[l].id, m.str()});
    }
    saturated[l] = load[l] >= cap - scaled(cap);
  }

  for (const auto& s : net.sessions) {
    const double r = alloc.rates.at(s.id);
    if (r < s.mcr_mbps - scaled(s.mcr_mbps)) {
      std::ostringstream m;
      m << "session " << s.id << " rate " << r << " below MCR " << s.mcr_mbps;
      out.push_back({Violation::Kind::BelowMcr, s.id, m.str()});
    }
    if (s.cap_mbps && r > *s.cap_mbps + scaled(*s.cap_mbps)) {
      std::ostringstream m;
      m << "session " << s.id << " rate " << r << " above cap " << *s.cap_mbps;
      out.push_back({Violation::Kind::AboveCap, s.id, m.str()});
    }
    if (s.cap_mbps && std::abs(r - *s.cap_mbps) <= scaled(*s.cap_mbps)) continue;

    const double excess = (r - s.mcr_mbps) / s.weight;
    bool bottlenecked = false;
    for (const auto& l : s.route) {
      const std::size_t li = *net.link_index(l);
      if (saturated[li] && excess >= max_excess[li] - scaled(max_excess[li])) {
        bottlenecked = true;
        break;
      }
    }
    if (!bottlenecked) {
      std::ostringstream m;
      m << "session " << s.id << " (rate " << r
        << ") is neither capped nor holds the largest normalized excess on a saturated link";
      out.push_back({Violation::Kind::NoBottleneck, s.id, m.str()});
    }
  }
  return out;
}

}  // namespace gwfair
