#pragma once

// ERICA+ output-port algorithm modified for general weighted fairness.
//
// Once per averaging interval the port turns its forward-direction counts into
// per-VC source rates, reserves the honored MCRs, derives the load factor z
// and splits the target ABR capacity by weight times activity level. Each
// backward RM cell then gets
//
//   ER = mcr + max(weighted share, (source rate - mcr) / z)
//
// min-reduced into the cell's ER field.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "gwfair/error.hpp"

namespace gwfair {

using VcId = std::uint32_t;

inline constexpr double kCellBits = 424.0;
inline constexpr double kShareEpsilon = 1e-9;  // Mbps

struct VcConfig {
  double mcr_mbps = 0.0;
  double weight = 1.0;

  bool operator==(const VcConfig&) const = default;
};

struct SwitchParams {
  double averaging_interval_ms = 5.0;
  double target_delay_ms = 1.5;
  double qdlf_floor = 0.5;
  double fraction_steepness = 1.0;
  double z_min = 0.01;
  bool use_measured_source_rate = true;
  // MCR and weight tables, keyed by VC.
  std::map<VcId, VcConfig> vc_table;

  bool operator==(const SwitchParams&) const = default;

  void validate() const {
    if (!(averaging_interval_ms > 0.0))
      throw Error(ErrorKind::ConfigError, "averaging interval must be > 0");
    if (!(target_delay_ms > 0.0)) throw Error(ErrorKind::ConfigError, "target delay must be > 0");
    if (!(qdlf_floor > 0.0 && qdlf_floor <= 1.0))
      throw Error(ErrorKind::ConfigError, "queue-drain floor must lie in (0, 1]");
    if (!(fraction_steepness > 0.0)) throw Error(ErrorKind::ConfigError, "fraction steepness must be > 0");
    if (!(z_min > 0.0)) throw Error(ErrorKind::ConfigError, "z floor must be > 0");
  }
};

enum class Direction { Forward, Backward };

struct RmCell {
  VcId vc = 0;
  Direction direction = Direction::Forward;
  double er = 0.0;   // Mbps
  double ccr = 0.0;  // Mbps
  double mcr = 0.0;  // Mbps

  bool operator==(const RmCell&) const = default;
};

// Queue control: 1 up to q0, then a hyperbolic decay bounded below by the floor.
inline double fraction(double queue_len, double q0, double qdlf_floor, double steepness = 1.0) {
  if (queue_len <= q0) return 1.0;
  return std::max(qdlf_floor, q0 / (q0 + steepness * (queue_len - q0)));
}

// Share of `reference_share` the VC actually uses above its MCR, in [0, 1].
inline double activity_level(double source_rate, double mcr, double reference_share) {
  if (reference_share <= kShareEpsilon) return 1.0;
  return std::min(1.0, std::max(0.0, source_rate - mcr) / reference_share);
}

// Per-VC explicit rate, capped at mcr plus the whole target.
inline double explicit_rate(double source_rate, double mcr, double offered_share, double z, double target) {
  const double vc_share = std::max(0.0, source_rate - mcr) / z;
  return std::min(mcr + std::max(offered_share, vc_share), mcr + target);
}

struct VcState {
  VcConfig config;
  std::uint64_t cell_count = 0;  // this interval
  std::optional<double> ccr_from_rm;
  double source_rate = 0.0;  // estimate used at the last interval end
  bool active = false;       // active during the last completed interval
  double activity_level = 1.0;
  double excess_fairshare = 0.0;  // weight * AL * unit share
};

class PortState {
 public:
  PortState(double link_capacity_mbps, SwitchParams params, double vbr_reservation_mbps = 0.0)
      : link_capacity_(link_capacity_mbps), vbr_reservation_(vbr_reservation_mbps), params_(std::move(params)) {
    params_.validate();
    if (!(link_capacity_ > vbr_reservation_ && vbr_reservation_ >= 0.0))
      throw Error(ErrorKind::ConfigError, "link capacity must exceed the VBR reservation");
    VcId max_vc = 0;
    for (const auto& [vc, _] : params_.vc_table) max_vc = std::max(max_vc, vc);
    vcs_.resize(params_.vc_table.empty() ? 0 : max_vc + 1);
    configured_.assign(vcs_.size(), false);

    // Before any interval completes every configured VC counts as fully
    // active and the target is the capacity net of all configured MCRs.
    double mcr_sum = 0.0;
    double weight_sum = 0.0;
    for (const auto& [vc, cfg] : params_.vc_table) {
      vcs_[vc].config = cfg;
      configured_[vc] = true;
      mcr_sum += cfg.mcr_mbps;
      weight_sum += cfg.weight;
    }
    total_abr_capacity_ = std::max(0.0, abr_capacity() - mcr_sum);
    target_abr_capacity_ = total_abr_capacity_;
    if (weight_sum > 0.0) unit_share_ = target_abr_capacity_ / weight_sum;
    for (const auto& [vc, cfg] : params_.vc_table) vcs_[vc].excess_fairshare = cfg.weight * unit_share_;
  }

  const SwitchParams& params() const { return params_; }
  double link_capacity() const { return link_capacity_; }
  double abr_capacity() const { return link_capacity_ - vbr_reservation_; }

  // Queue threshold q0 in cells: the target delay's worth of ABR capacity.
  double q0_cells() const {
    return params_.target_delay_ms * 1e-3 * abr_capacity() * 1e6 / kCellBits;
  }

  bool knows(VcId vc) const { return vc < configured_.size() && configured_[vc]; }
  const VcState& vc(VcId id) const {
    if (!knows(id)) throw Error(ErrorKind::InvalidArgument, "VC not configured on this port");
    return vcs_[id];
  }

  void set_queue_len(double cells) { queue_len_ = cells; }
  double queue_len() const { return queue_len_; }

  double total_abr_capacity() const { return total_abr_capacity_; }
  double target_abr_capacity() const { return target_abr_capacity_; }
  double input_rate() const { return input_rate_; }
  double load_factor() const { return z_; }
  // Excess bandwidth per unit of weight: target / sum(w * AL) over active VCs.
  double unit_share() const { return unit_share_; }
  std::size_t active_vcs() const { return active_count_; }
  int intervals_completed() const { return intervals_; }

  // Counts a forward cell; forward RM cells also refresh the VC's CCR.
  void record_forward_cell(VcId vc, bool is_rm, std::optional<double> ccr_field = std::nullopt) {
    ++interval_cells_;
    if (!knows(vc)) return;
    auto& st = vcs_[vc];
    ++st.cell_count;
    if (is_rm && ccr_field) st.ccr_from_rm = *ccr_field;
  }

  void end_interval() { end_interval(params_.averaging_interval_ms); }

  void end_interval(double elapsed_ms) {
    if (!(elapsed_ms > 0.0)) throw Error(ErrorKind::InvalidArgument, "interval length must be > 0");
    const double seconds = elapsed_ms * 1e-3;
    auto measured = [seconds](std::uint64_t cells) { return static_cast<double>(cells) * kCellBits / seconds / 1e6; };

    double honored = 0.0;
    active_count_ = 0;
    for (VcId i = 0; i < vcs_.size(); ++i) {
      if (!configured_[i]) continue;
      auto& st = vcs_[i];
      st.active = st.cell_count > 0;
      if (!st.active) continue;
      ++active_count_;
      if (params_.use_measured_source_rate || !st.ccr_from_rm)
        st.source_rate = measured(st.cell_count);
      else
        st.source_rate = *st.ccr_from_rm;
      honored += std::min(st.source_rate, st.config.mcr_mbps);
    }

    total_abr_capacity_ = std::max(0.0, abr_capacity() - honored);
    target_abr_capacity_ = fraction(queue_len_, q0_cells(), params_.qdlf_floor, params_.fraction_steepness) *
                           total_abr_capacity_;
    input_rate_ = measured(interval_cells_) - honored;

    const double raw_z = target_abr_capacity_ > 0.0 ? input_rate_ / target_abr_capacity_ : 0.0;
    z_ = std::max(params_.z_min, raw_z);

    // Activity is judged against the full weighted share offered last interval.
    const double previous_unit_share = unit_share_;
    double weighted_activity = 0.0;
    double weight_sum = 0.0;
    for (VcId i = 0; i < vcs_.size(); ++i) {
      if (!configured_[i] || !vcs_[i].active) continue;
      auto& st = vcs_[i];
      st.activity_level =
          activity_level(st.source_rate, st.config.mcr_mbps, st.config.weight * previous_unit_share);
      weighted_activity += st.config.weight * st.activity_level;
      weight_sum += st.config.weight;
    }
    // Everyone at or below MCR: fall back to plain weights.
    const bool all_idle = weighted_activity <= 0.0;
    if (all_idle) weighted_activity = weight_sum;
    if (active_count_ > 0) unit_share_ = target_abr_capacity_ / weighted_activity;
    else unit_share_ = target_abr_capacity_ / std::max(configured_weight_sum(), kShareEpsilon);

    for (VcId i = 0; i < vcs_.size(); ++i) {
      if (!configured_[i]) continue;
      auto& st = vcs_[i];
      if (!st.active) {
        st.excess_fairshare = 0.0;
        st.source_rate = 0.0;
      } else {
        const double al = all_idle ? 1.0 : st.activity_level;
        st.excess_fairshare = st.config.weight * al * unit_share_;
      }
      st.cell_count = 0;
    }
    interval_cells_ = 0;
    ++intervals_;
  }

  // Explicit-rate feedback for a backward RM cell. Unknown VCs pass through.
  RmCell process_brm(RmCell cell) const {
    if (!knows(cell.vc)) return cell;
    const auto& st = vcs_[cell.vc];
    const double offered = st.config.weight * unit_share_;
    cell.er = std::min(cell.er, explicit_rate(st.source_rate, st.config.mcr_mbps, offered, z_, target_abr_capacity_));
    return cell;
  }

 private:
  double configured_weight_sum() const {
    double sum = 0.0;
    for (VcId i = 0; i < vcs_.size(); ++i)
      if (configured_[i]) sum += vcs_[i].config.weight;
    return sum;
  }

  double link_capacity_;
  double vbr_reservation_;
  SwitchParams params_;
  std::vector<VcState> vcs_;
  std::vector<bool> configured_;

  double queue_len_ = 0.0;
  std::uint64_t interval_cells_ = 0;
  double total_abr_capacity_ = 0.0;
  double target_abr_capacity_ = 0.0;
  double input_rate_ = 0.0;
  double z_ = 1.0;
  double unit_share_ = 0.0;
  std::size_t active_count_ = 0;
  int intervals_ = 0;
};

}  // namespace gwfair
