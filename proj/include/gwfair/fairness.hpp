#pragma once

// Single-link general weighted (GW) fair sharing: every contender receives its
// minimum rate plus a weight-proportional slice of the excess bandwidth.
//
//   g_i = mcr_i + w_i * (A - sum_j mcr_j) / sum_j w_j
//
// Weight policies map the classic ABR fairness criteria onto this rule.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gwfair/error.hpp"

namespace gwfair {

struct SessionParams {
  std::string id;
  double mcr = 0.0;     // Mbps
  double weight = 1.0;  // > 0

  bool operator==(const SessionParams&) const = default;
};

// Ratio of fixed per-connection cost to cost per Mbps of MCR. The infinite
// value is a distinguished marker rather than a large float.
class FixedCostRatio {
 public:
  static FixedCostRatio infinite() { return FixedCostRatio{}; }
  static FixedCostRatio finite(double a) {
    if (!(a >= 0.0) || std::isinf(a))
      throw Error(ErrorKind::InvalidArgument, "pricing ratio must be a finite value >= 0");
    FixedCostRatio r;
    r.value_ = a;
    return r;
  }

  bool is_infinite() const { return !value_.has_value(); }
  double value() const { return value_.value(); }

  bool operator==(const FixedCostRatio&) const = default;

 private:
  FixedCostRatio() = default;
  std::optional<double> value_;
};

namespace policy {
struct MaxMin {
  bool operator==(const MaxMin&) const = default;
};
struct McrPlusEqual {
  bool operator==(const McrPlusEqual&) const = default;
};
struct ProportionalToMcr {
  bool operator==(const ProportionalToMcr&) const = default;
};
struct Pricing {
  FixedCostRatio a = FixedCostRatio::infinite();
  bool operator==(const Pricing&) const = default;
};
struct Explicit {
  std::vector<double> weights;
  bool operator==(const Explicit&) const = default;
};
}  // namespace policy

using WeightPolicy = std::variant<policy::MaxMin, policy::McrPlusEqual, policy::ProportionalToMcr,
                                  policy::Pricing, policy::Explicit>;

struct LinkShareProblem {
  double capacity = 0.0;  // excess bandwidth A available to the contenders, Mbps
  std::vector<SessionParams> contenders;
};

struct Infeasible {
  double deficit = 0.0;  // sum of MCRs minus capacity, Mbps
};

// nullopt when the MCRs fit on the link.
inline std::optional<Infeasible> validate_feasible(double link_capacity, std::span<const double> mcrs) {
  const double total = std::accumulate(mcrs.begin(), mcrs.end(), 0.0);
  // Relative slack so that MCR sums equal to capacity up to rounding pass.
  const double slack = 1e-12 * std::max(1.0, std::abs(link_capacity));
  if (total > link_capacity + slack) return Infeasible{total - link_capacity};
  return std::nullopt;
}

// Rates are returned in contender order.
inline std::vector<double> gw_share(const LinkShareProblem& problem) {
  if (problem.contenders.empty()) throw Error(ErrorKind::EmptyProblem, "no contenders");
  double mcr_sum = 0.0;
  double weight_sum = 0.0;
  for (const auto& s : problem.contenders) {
    if (!(s.mcr >= 0.0)) throw Error(ErrorKind::InvalidArgument, "negative MCR for " + s.id);
    if (!(s.weight > 0.0)) throw Error(ErrorKind::InvalidArgument, "non-positive weight for " + s.id);
    mcr_sum += s.mcr;
    weight_sum += s.weight;
  }
  std::vector<double> mcrs;
  mcrs.reserve(problem.contenders.size());
  for (const auto& s : problem.contenders) mcrs.push_back(s.mcr);
  if (auto bad = validate_feasible(problem.capacity, mcrs))
    throw Error(ErrorKind::Infeasible, "MCR sum exceeds capacity by " + std::to_string(bad->deficit));

  const double per_weight = std::max(0.0, problem.capacity - mcr_sum) / weight_sum;
  std::vector<double> rates;
  rates.reserve(problem.contenders.size());
  for (const auto& s : problem.contenders) rates.push_back(s.mcr + s.weight * per_weight);
  return rates;
}

// Weight proportional to a + MCR; an infinite fixed-cost ratio yields equal weights.
inline double weight_from_pricing(FixedCostRatio a, double mcr) {
  if (a.is_infinite()) return 1.0;
  return a.value() + mcr;
}

inline std::vector<double> resolve_weights(const WeightPolicy& policy,
                                           std::span<const SessionParams> sessions) {
  std::vector<double> out;
  out.reserve(sessions.size());
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, policy::MaxMin>) {
          for (const auto& s : sessions) {
            if (s.mcr != 0.0)
              throw Error(ErrorKind::PolicyMismatch, "max-min requires zero MCR, " + s.id + " has " +
                                                         std::to_string(s.mcr));
            out.push_back(1.0);
          }
        } else if constexpr (std::is_same_v<P, policy::McrPlusEqual>) {
          out.assign(sessions.size(), 1.0);
        } else if constexpr (std::is_same_v<P, policy::ProportionalToMcr>) {
          for (const auto& s : sessions) {
            if (!(s.mcr > 0.0))
              throw Error(ErrorKind::PolicyMismatch, "proportional-to-MCR requires MCR > 0 for " + s.id);
            out.push_back(s.mcr);
          }
        } else if constexpr (std::is_same_v<P, policy::Pricing>) {
          for (const auto& s : sessions) out.push_back(weight_from_pricing(p.a, s.mcr));
          // a = 0 with a zero MCR would give a zero weight.
          for (std::size_t i = 0; i < out.size(); ++i)
            if (!(out[i] > 0.0))
              throw Error(ErrorKind::PolicyMismatch, "pricing weight is zero for " + sessions[i].id);
        } else {
          if (p.weights.size() != sessions.size())
            throw Error(ErrorKind::PolicyMismatch, "explicit weight count does not match sessions");
          for (double w : p.weights)
            if (!(w > 0.0)) throw Error(ErrorKind::PolicyMismatch, "explicit weights must be > 0");
          out = p.weights;
        }
      },
      policy);
  return out;
}

}  // namespace gwfair
