#pragma once

// Time series recorded by a simulation run, plus the steady-state, convergence
// and utilization measurements taken from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gwfair/error.hpp"

namespace gwfair::sim {

struct RateSample {
  double time_ms;
  std::uint32_t vc;
  double acr_mbps;
  double rate_mbps;  // what the source actually sends: min(acr, cap)

  bool operator==(const RateSample&) const = default;
};

struct QueueSample {
  double time_ms;
  std::uint32_t link;
  double queue_cells;

  bool operator==(const QueueSample&) const = default;
};

struct UtilSample {
  double time_ms;  // end of the sampling period
  std::uint32_t link;
  double utilization;

  bool operator==(const UtilSample&) const = default;
};

// Switch measurements taken at every averaging-interval end.
struct LoadSample {
  double time_ms;
  std::uint32_t link;
  double z;
  double target_abr_mbps;
  double input_rate_mbps;

  bool operator==(const LoadSample&) const = default;
};

struct CellCounters {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t in_flight = 0;
  std::uint64_t queued = 0;

  bool operator==(const CellCounters&) const = default;
};

struct Trace {
  std::vector<std::string> vc_names;
  std::vector<std::string> link_names;
  std::vector<double> link_capacity_mbps;
  double duration_ms = 0.0;
  double sample_period_ms = 1.0;

  std::vector<RateSample> rates;
  std::vector<QueueSample> queues;
  std::vector<UtilSample> utilization;
  std::vector<LoadSample> load;

  CellCounters final_counters;
  // Sample points at which sent != delivered + in flight + queued.
  std::uint64_t conservation_failures = 0;

  bool operator==(const Trace&) const = default;

  std::optional<std::uint32_t> vc_index(const std::string& name) const {
    for (std::size_t i = 0; i < vc_names.size(); ++i)
      if (vc_names[i] == name) return static_cast<std::uint32_t>(i);
    return std::nullopt;
  }
  std::optional<std::uint32_t> link_index(const std::string& name) const {
    for (std::size_t i = 0; i < link_names.size(); ++i)
      if (link_names[i] == name) return static_cast<std::uint32_t>(i);
    return std::nullopt;
  }
};

enum class RateKind { Acr, Sending };

namespace detail {

inline double pick(const RateSample& s, RateKind kind) {
  return kind == RateKind::Acr ? s.acr_mbps : s.rate_mbps;
}

inline std::vector<std::vector<const RateSample*>> by_vc(const Trace& trace) {
  std::vector<std::vector<const RateSample*>> out(trace.vc_names.size());
  for (const auto& s : trace.rates) out[s.vc].push_back(&s);
  return out;
}

}  // namespace detail

// Time-weighted mean per VC over [t0_ms, t1_ms]. Each sample holds until the
// next sample period; VCs with no samples in the window are omitted.
inline std::map<std::string, double> mean_rates(const Trace& trace, double t0_ms, double t1_ms,
                                                RateKind kind = RateKind::Sending) {
  if (trace.rates.empty()) throw Error(ErrorKind::EmptyTrace, "trace has no rate samples");
  std::map<std::string, double> out;
  const auto series = detail::by_vc(trace);
  for (std::size_t vc = 0; vc < series.size(); ++vc) {
    double weighted = 0.0;
    double covered = 0.0;
    for (const auto* s : series[vc]) {
      const double a = std::max(t0_ms, s->time_ms);
      const double b = std::min(t1_ms, s->time_ms + trace.sample_period_ms);
      if (b <= a) continue;
      weighted += detail::pick(*s, kind) * (b - a);
      covered += b - a;
    }
    if (covered > 0.0) out[trace.vc_names[vc]] = weighted / covered;
  }
  return out;
}

// Mean over the trailing `window` fraction of the run.
inline std::map<std::string, double> steady_state_rates(const Trace& trace, double window = 0.2,
                                                        RateKind kind = RateKind::Sending) {
  if (!(window > 0.0 && window <= 1.0)) throw Error(ErrorKind::InvalidArgument, "window must lie in (0, 1]");
  return mean_rates(trace, trace.duration_ms * (1.0 - window), trace.duration_ms, kind);
}

struct Tolerance {
  double relative = 0.02;
  double absolute = 0.0;  // Mbps; the larger of the two bounds applies

  double bound(double target) const { return std::max(relative * std::abs(target), absolute); }
};

// Earliest sample time in [t0, t1] after which every targeted VC stays within
// tolerance until t1. nullopt means not converged.
inline std::optional<double> convergence_time(const Trace& trace, const std::map<std::string, double>& targets,
                                              Tolerance tol, double t0_ms = 0.0,
                                              std::optional<double> t1_ms = std::nullopt,
                                              RateKind kind = RateKind::Sending) {
  const double end = t1_ms.value_or(trace.duration_ms);
  const auto series = detail::by_vc(trace);
  double converged_at = t0_ms;
  for (const auto& [name, target] : targets) {
    auto vc = trace.vc_index(name);
    if (!vc) throw Error(ErrorKind::InvalidArgument, "unknown VC " + name);
    // Last violating sample, and whether the VC was observed at all.
    double last_bad = -std::numeric_limits<double>::infinity();
    bool seen = false;
    double last_seen = -std::numeric_limits<double>::infinity();
    for (const auto* s : series[*vc]) {
      if (s->time_ms < t0_ms || s->time_ms > end) continue;
      seen = true;
      last_seen = s->time_ms;
      if (std::abs(detail::pick(*s, kind) - target) > tol.bound(target)) last_bad = s->time_ms;
    }
    if (!seen) return std::nullopt;
    if (last_bad == last_seen) return std::nullopt;
    if (std::isfinite(last_bad)) converged_at = std::max(converged_at, last_bad + trace.sample_period_ms);
  }
  return converged_at;
}

// Delivered bits over capacity times the window, from the per-period samples.
inline double utilization(const Trace& trace, const std::string& link, double t0_ms, double t1_ms) {
  auto li = trace.link_index(link);
  if (!li) throw Error(ErrorKind::InvalidArgument, "unknown link " + link);
  if (!(t1_ms > t0_ms)) throw Error(ErrorKind::InvalidArgument, "empty utilization window");
  double busy = 0.0;
  for (const auto& s : trace.utilization) {
    if (s.link != *li) continue;
    const double start = s.time_ms - trace.sample_period_ms;
    const double a = std::max(t0_ms, start);
    const double b = std::min(t1_ms, s.time_ms);
    if (b > a) busy += s.utilization * (b - a);
  }
  return busy / (t1_ms - t0_ms);
}

struct QueueStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

inline QueueStats queue_stats(const Trace& trace, const std::string& link, double t0_ms, double t1_ms) {
  auto li = trace.link_index(link);
  if (!li) throw Error(ErrorKind::InvalidArgument, "unknown link " + link);
  QueueStats st{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0.0};
  std::size_t n = 0;
  for (const auto& q : trace.queues) {
    if (q.link != *li || q.time_ms < t0_ms || q.time_ms > t1_ms) continue;
    st.min = std::min(st.min, q.queue_cells);
    st.max = std::max(st.max, q.queue_cells);
    st.mean += q.queue_cells;
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::EmptyTrace, "no queue samples for " + link + " in window");
  st.mean /= static_cast<double>(n);
  return st;
}

// Steady queue: spread within 20% of the mean plus 10 cells.
inline bool queue_stable(const QueueStats& st) { return st.max - st.min <= 0.2 * st.mean + 10.0; }

inline double mean_load_factor(const Trace& trace, const std::string& link, double t0_ms, double t1_ms) {
  auto li = trace.link_index(link);
  if (!li) throw Error(ErrorKind::InvalidArgument, "unknown link " + link);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : trace.load) {
    if (s.link != *li || s.time_ms < t0_ms || s.time_ms > t1_ms) continue;
    sum += s.z;
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::EmptyTrace, "no load samples for " + link + " in window");
  return sum / static_cast<double>(n);
}

}  // namespace gwfair::sim
