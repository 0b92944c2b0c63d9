#pragma once

// Cell-level discrete-event ABR simulator.
//
// Sources emit 424-bit cells back to back at min(ACR, cap); every Nrm-th cell
// is a forward RM cell. Each configured link is an output port with a FIFO
// queue that runs the GW-fair ERICA+ algorithm. Destinations turn RM cells
// around at once; backward RM cells only see propagation delay and are
// min-reduced by every port on the way back to the source.

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "gwfair/erica.hpp"
#include "gwfair/network.hpp"
#include "gwfair/sim/trace.hpp"

namespace gwfair::sim {

inline constexpr double kDefaultPcr = 149.76;     // Mbps
inline constexpr double kPropagationUsPerKm = 5.0;  // 200,000 km/s

// Simulated clock in picoseconds.
class SimTime {
 public:
  constexpr SimTime() = default;
  constexpr explicit SimTime(std::int64_t ps) : ps_(ps) {}

  static SimTime from_ms(double ms) { return SimTime(static_cast<std::int64_t>(std::llround(ms * 1e9))); }
  static SimTime from_us(double us) { return SimTime(static_cast<std::int64_t>(std::llround(us * 1e6))); }
  // Serialization time of one cell at `mbps`.
  static SimTime cell_time(double mbps) {
    return SimTime(static_cast<std::int64_t>(std::llround(kCellBits / mbps * 1e6)));
  }

  constexpr std::int64_t ps() const { return ps_; }
  double ms() const { return static_cast<double>(ps_) * 1e-9; }

  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime(a.ps_ + b.ps_); }
  friend constexpr auto operator<=>(SimTime, SimTime) = default;

 private:
  std::int64_t ps_ = 0;
};

struct SourceModel {
  enum class Kind { Greedy, RateCapped, Transient };

  Kind kind = Kind::Greedy;
  double icr_mbps = 0.0;
  double pcr_mbps = kDefaultPcr;
  double cap_mbps = 0.0;    // RateCapped only
  double start_ms = 0.0;    // Transient only
  double stop_ms = 0.0;     // Transient only
  double access_km = 0.0;   // source to first switch

  bool operator==(const SourceModel&) const = default;

  static SourceModel greedy(double icr) { return SourceModel{Kind::Greedy, icr}; }
  static SourceModel rate_capped(double icr, double cap) {
    SourceModel m{Kind::RateCapped, icr};
    m.cap_mbps = cap;
    return m;
  }
  static SourceModel transient(double icr, double start_ms, double stop_ms) {
    SourceModel m{Kind::Transient, icr};
    m.start_ms = start_ms;
    m.stop_ms = stop_ms;
    return m;
  }

  std::optional<double> cap() const {
    if (kind == Kind::RateCapped) return cap_mbps;
    return std::nullopt;
  }

  void validate(const std::string& id, double mcr) const {
    if (!(mcr <= icr_mbps && icr_mbps <= pcr_mbps))
      throw Error(ErrorKind::ConfigError, "source " + id + " needs mcr <= icr <= pcr");
    if (kind == Kind::Transient && !(start_ms < stop_ms && start_ms >= 0.0))
      throw Error(ErrorKind::ConfigError, "transient source " + id + " needs 0 <= start < stop");
    if (kind == Kind::RateCapped && !(cap_mbps >= 0.0))
      throw Error(ErrorKind::ConfigError, "source " + id + " needs cap >= 0");
    if (!(access_km >= 0.0)) throw Error(ErrorKind::ConfigError, "source " + id + " has negative access length");
  }
};

namespace detail {
struct SimCell {
  VcId vc = 0;
  bool rm = false;
  double er = 0.0;
  double ccr = 0.0;
  double mcr = 0.0;
  std::uint32_t hop = 0;  // index into the route
};
}  // namespace detail

struct EngineOptions {
  double sample_period_ms = 1.0;
  int nrm = 32;
  std::map<std::string, double> vbr_reservation_mbps;  // per link, default 0

  bool operator==(const EngineOptions&) const = default;
};

class Engine {
 public:
  static Engine build(const NetworkSpec& net, const SwitchParams& switch_params,
                      const std::map<std::string, SourceModel>& sources, EngineOptions options = {}) {
    if (net.sessions.empty()) throw Error(ErrorKind::ConfigError, "no sessions configured");
    try {
      net.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, e.message());
    }
    switch_params.validate();
    if (!(options.sample_period_ms > 0.0)) throw Error(ErrorKind::ConfigError, "sample period must be > 0");
    if (options.nrm < 2) throw Error(ErrorKind::ConfigError, "Nrm must be >= 2");

    Engine e;
    e.net_ = net;
    e.params_ = switch_params;
    e.options_ = options;

    for (std::size_t s = 0; s < net.sessions.size(); ++s) {
      const auto& sess = net.sessions[s];
      auto it = sources.find(sess.id);
      if (it == sources.end()) throw Error(ErrorKind::ConfigError, "no source model for session " + sess.id);
      it->second.validate(sess.id, sess.mcr_mbps);
      if (auto cap = it->second.cap(); cap != sess.cap_mbps)
        throw Error(ErrorKind::ConfigError, "source cap of " + sess.id + " disagrees with the network spec");
      e.sources_.push_back(it->second);

      std::vector<std::uint32_t> ports;
      for (std::size_t h = 0; h < sess.route.size(); ++h) {
        const auto li = *net.link_index(sess.route[h]);
        if (h > 0) {
          const auto& prev = net.links[ports.back()];
          const auto& cur = net.links[li];
          if (!prev.to.empty() && !cur.from.empty() && prev.to != cur.from)
            throw Error(ErrorKind::ConfigError, "route of " + sess.id + " is not a path: " + prev.id +
                                                    " ends at " + prev.to + " but " + cur.id + " starts at " +
                                                    cur.from);
        }
        ports.push_back(static_cast<std::uint32_t>(li));
      }
      e.routes_.push_back(std::move(ports));
    }
    for (const auto& [link, _] : sources)
      if (!net.session_index(link)) throw Error(ErrorKind::ConfigError, "source model for unknown session " + link);
    for (const auto& [link, _] : options.vbr_reservation_mbps)
      if (!net.link_index(link)) throw Error(ErrorKind::ConfigError, "VBR reservation for unknown link " + link);
    // Construct once so that capacity/VBR problems surface at build time.
    for (std::size_t l = 0; l < net.links.size(); ++l) (void)e.make_port(l);
    return e;
  }

  std::size_t num_sources() const { return sources_.size(); }
  std::size_t num_ports() const { return net_.links.size(); }
  // Distinct switch names at link ends; unnamed ends count as their own switch.
  std::size_t num_switches() const {
    std::set<std::string> names;
    for (const auto& l : net_.links) {
      names.insert(l.from.empty() ? "<" + l.id + ":from>" : l.from);
      names.insert(l.to.empty() ? "<" + l.id + ":to>" : l.to);
    }
    return names.size();
  }
  const NetworkSpec& network() const { return net_; }

  // VC table for the port on `link`: every session routed over it.
  SwitchParams port_params(std::size_t link) const {
    SwitchParams p = params_;
    p.vc_table.clear();
    for (std::size_t s = 0; s < routes_.size(); ++s)
      for (auto l : routes_[s])
        if (l == link) p.vc_table[static_cast<VcId>(s)] = {net_.sessions[s].mcr_mbps, net_.sessions[s].weight};
    return p;
  }

  Trace run(double duration_ms) const {
    if (!(duration_ms > 0.0)) throw Error(ErrorKind::ConfigError, "duration must be > 0");
    Simulation sim(*this, duration_ms);
    return sim.execute();
  }

 private:
  Engine() = default;

  PortState make_port(std::size_t link) const {
    double vbr = 0.0;
    if (auto it = options_.vbr_reservation_mbps.find(net_.links[link].id); it != options_.vbr_reservation_mbps.end())
      vbr = it->second;
    return PortState(net_.links[link].capacity_mbps, port_params(link), vbr);
  }

  using Cell = detail::SimCell;

  // Ordering of simultaneous events; earlier enumerators run first.
  enum class EventKind : std::uint8_t {
    SourceStart,
    SourceStop,
    IntervalEnd,
    CellDeparture,
    CellArrival,
    DestinationArrival,
    BackwardArrival,
    SourceFeedback,
    SourceEmit,
    Sample,
  };

  struct Event {
    SimTime time;
    EventKind kind;
    std::uint32_t entity;
    std::uint64_t seq;
    std::uint64_t generation = 0;
    Cell cell;
  };

  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.kind != b.kind) return a.kind > b.kind;
      if (a.entity != b.entity) return a.entity > b.entity;
      return a.seq > b.seq;
    }
  };

  struct Port {
    PortState state;
    std::deque<Cell> queue;  // front is in service
    bool busy = false;
    SimTime cell_time;
    SimTime propagation;
    std::uint64_t departed_since_sample = 0;
  };

  struct Source {
    double acr = 0.0;
    bool active = false;
    std::uint64_t cells_sent = 0;
    std::uint64_t generation = 0;
    std::optional<SimTime> last_emit;
    SimTime access;
  };

  class Simulation {
   public:
    Simulation(const Engine& engine, double duration_ms)
        : e_(engine), end_(SimTime::from_ms(duration_ms)) {
      for (std::size_t l = 0; l < e_.net_.links.size(); ++l) {
        const auto& link = e_.net_.links[l];
        ports_.push_back(Port{e_.make_port(l), {}, false, SimTime::cell_time(link.capacity_mbps),
                              SimTime::from_us(link.length_km * kPropagationUsPerKm)});
      }
      for (const auto& m : e_.sources_) {
        Source s;
        s.acr = m.icr_mbps;
        s.access = SimTime::from_us(m.access_km * kPropagationUsPerKm);
        sources_.push_back(s);
      }
      trace_.duration_ms = duration_ms;
      trace_.sample_period_ms = e_.options_.sample_period_ms;
      for (const auto& s : e_.net_.sessions) trace_.vc_names.push_back(s.id);
      for (const auto& l : e_.net_.links) {
        trace_.link_names.push_back(l.id);
        trace_.link_capacity_mbps.push_back(l.capacity_mbps);
      }
    }

    Trace execute() {
      for (std::uint32_t s = 0; s < sources_.size(); ++s) {
        const auto& m = e_.sources_[s];
        if (m.kind == SourceModel::Kind::Transient) {
          push(SimTime::from_ms(m.start_ms), EventKind::SourceStart, s);
          push(SimTime::from_ms(m.stop_ms), EventKind::SourceStop, s);
        } else {
          push(SimTime{}, EventKind::SourceStart, s);
        }
      }
      const SimTime interval = SimTime::from_ms(e_.params_.averaging_interval_ms);
      for (std::uint32_t l = 0; l < ports_.size(); ++l) push(interval, EventKind::IntervalEnd, l);
      push(SimTime{}, EventKind::Sample, 0);

      while (!events_.empty()) {
        Event ev = events_.top();
        if (ev.time > end_) break;
        events_.pop();
        now_ = ev.time;
        dispatch(ev);
      }
      trace_.final_counters = counters();
      return std::move(trace_);
    }

   private:
    void push(SimTime t, EventKind kind, std::uint32_t entity, Cell cell = {}, std::uint64_t generation = 0) {
      events_.push(Event{t, kind, entity, seq_++, generation, cell});
    }

    void dispatch(const Event& ev) {
      switch (ev.kind) {
        case EventKind::SourceStart: on_source_start(ev.entity); break;
        case EventKind::SourceStop: on_source_stop(ev.entity); break;
        case EventKind::IntervalEnd: on_interval_end(ev.entity); break;
        case EventKind::CellDeparture: on_departure(ev.entity); break;
        case EventKind::CellArrival: on_arrival(ev.entity, ev.cell); break;
        case EventKind::DestinationArrival: on_destination(ev.entity, ev.cell); break;
        case EventKind::BackwardArrival: on_backward(ev.entity, ev.cell); break;
        case EventKind::SourceFeedback: on_feedback(ev.entity, ev.cell); break;
        case EventKind::SourceEmit: on_emit(ev.entity, ev.generation); break;
        case EventKind::Sample: on_sample(); break;
      }
    }

    double sending_rate(std::uint32_t s) const {
      const auto cap = e_.sources_[s].cap();
      return cap ? std::min(sources_[s].acr, *cap) : sources_[s].acr;
    }

    // Next emission honours the gap implied by the current rate.
    void schedule_emit(std::uint32_t s) {
      auto& src = sources_[s];
      ++src.generation;
      const double rate = sending_rate(s);
      if (!(rate > 0.0)) return;
      SimTime next = now_;
      if (src.last_emit) next = std::max(now_, *src.last_emit + SimTime::cell_time(rate));
      push(next, EventKind::SourceEmit, s, {}, src.generation);
    }

    void on_source_start(std::uint32_t s) {
      auto& src = sources_[s];
      src.active = true;
      src.acr = e_.sources_[s].icr_mbps;
      src.last_emit.reset();
      schedule_emit(s);
    }

    void on_source_stop(std::uint32_t s) {
      sources_[s].active = false;
      ++sources_[s].generation;
    }

    void on_emit(std::uint32_t s, std::uint64_t generation) {
      auto& src = sources_[s];
      if (!src.active || generation != src.generation) return;
      const auto& sess = e_.net_.sessions[s];
      Cell c;
      c.vc = s;
      c.rm = src.cells_sent % static_cast<std::uint64_t>(e_.options_.nrm) == 0;
      if (c.rm) {
        c.er = e_.sources_[s].pcr_mbps;
        c.ccr = src.acr;
        c.mcr = sess.mcr_mbps;
      }
      ++src.cells_sent;
      ++sent_;
      ++in_flight_;
      src.last_emit = now_;
      push(now_ + src.access, EventKind::CellArrival, e_.routes_[s][0], c);
      schedule_emit(s);
    }

    void on_arrival(std::uint32_t port_id, const Cell& c) {
      --in_flight_;
      auto& port = ports_[port_id];
      port.state.record_forward_cell(c.vc, c.rm, c.rm ? std::optional<double>(c.ccr) : std::nullopt);
      port.queue.push_back(c);
      ++queued_;
      port.state.set_queue_len(static_cast<double>(port.queue.size()));
      if (!port.busy) start_service(port_id);
    }

    void start_service(std::uint32_t port_id) {
      auto& port = ports_[port_id];
      port.busy = true;
      push(now_ + port.cell_time, EventKind::CellDeparture, port_id);
    }

    void on_departure(std::uint32_t port_id) {
      auto& port = ports_[port_id];
      Cell c = port.queue.front();
      port.queue.pop_front();
      --queued_;
      ++port.departed_since_sample;
      port.state.set_queue_len(static_cast<double>(port.queue.size()));
      const auto& route = e_.routes_[c.vc];
      ++in_flight_;
      if (c.hop + 1 < route.size()) {
        ++c.hop;
        push(now_ + port.propagation, EventKind::CellArrival, route[c.hop], c);
      } else {
        push(now_ + port.propagation, EventKind::DestinationArrival, c.vc, c);
      }
      port.busy = false;
      if (!port.queue.empty()) start_service(port_id);
    }

    void on_destination(std::uint32_t, Cell c) {
      --in_flight_;
      ++delivered_;
      if (!c.rm) return;
      const auto& route = e_.routes_[c.vc];
      c.hop = static_cast<std::uint32_t>(route.size() - 1);
      push(now_ + ports_[route[c.hop]].propagation, EventKind::BackwardArrival, route[c.hop], c);
    }

    void on_backward(std::uint32_t port_id, Cell c) {
      RmCell rm{c.vc, Direction::Backward, c.er, c.ccr, c.mcr};
      c.er = ports_[port_id].state.process_brm(rm).er;
      const auto& route = e_.routes_[c.vc];
      if (c.hop == 0) {
        push(now_ + sources_[c.vc].access, EventKind::SourceFeedback, c.vc, c);
      } else {
        --c.hop;
        push(now_ + ports_[route[c.hop]].propagation, EventKind::BackwardArrival, route[c.hop], c);
      }
    }

    void on_feedback(std::uint32_t s, const Cell& c) {
      auto& src = sources_[s];
      if (!src.active) return;
      const auto& m = e_.sources_[s];
      const double mcr = e_.net_.sessions[s].mcr_mbps;
      const double acr = std::clamp(c.er, mcr, m.pcr_mbps);
      if (acr == src.acr) return;
      src.acr = acr;
      schedule_emit(s);
    }

    void on_interval_end(std::uint32_t port_id) {
      auto& port = ports_[port_id];
      port.state.end_interval();
      trace_.load.push_back(LoadSample{now_.ms(), port_id, port.state.load_factor(),
                                       port.state.target_abr_capacity(), port.state.input_rate()});
      push(now_ + SimTime::from_ms(e_.params_.averaging_interval_ms), EventKind::IntervalEnd, port_id);
    }

    CellCounters counters() const { return CellCounters{sent_, delivered_, in_flight_, queued_}; }

    void on_sample() {
      const double t = now_.ms();
      for (std::uint32_t s = 0; s < sources_.size(); ++s)
        if (sources_[s].active) trace_.rates.push_back(RateSample{t, s, sources_[s].acr, sending_rate(s)});
      const double period_s = e_.options_.sample_period_ms * 1e-3;
      for (std::uint32_t l = 0; l < ports_.size(); ++l) {
        auto& port = ports_[l];
        trace_.queues.push_back(QueueSample{t, l, static_cast<double>(port.queue.size())});
        if (t > 0.0) {
          const double bits = static_cast<double>(port.departed_since_sample) * kCellBits;
          trace_.utilization.push_back(
              UtilSample{t, l, bits / (e_.net_.links[l].capacity_mbps * 1e6 * period_s)});
        }
        port.departed_since_sample = 0;
      }
      if (sent_ != delivered_ + in_flight_ + queued_) ++trace_.conservation_failures;
      push(now_ + SimTime::from_ms(e_.options_.sample_period_ms), EventKind::Sample, 0);
    }

    const Engine& e_;
    SimTime end_;
    SimTime now_;
    std::priority_queue<Event, std::vector<Event>, Later> events_;
    std::uint64_t seq_ = 0;
    std::vector<Port> ports_;
    std::vector<Source> sources_;
    Trace trace_;
    std::uint64_t sent_ = 0;
    std::uint64_t delivered_ = 0;
    std::uint64_t in_flight_ = 0;
    std::uint64_t queued_ = 0;
  };

  NetworkSpec net_;
  SwitchParams params_;
  EngineOptions options_;
  std::vector<SourceModel> sources_;
  std::vector<std::vector<std::uint32_t>> routes_;
};

}  // namespace gwfair::sim
