use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use log::{debug, trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mobility::{in_range, MobilityParams, Position, Waypoint};
use super::scenario::{Placement, Scenario, ScenarioError, Variant};
use super::trace::TraceRecord;
use crate::graph::{CostPolicy, NodeId};
use crate::mdc::{BufferedPacket, CodecConfig, GroupDecoder, GroupEncoder, TaggedDescription};
use crate::metrics::MetricsReport;
use crate::olsr::{DuplicateSet, HelloMessage, ProtocolState, TcMessage};
use crate::routing::{
    allocate_route, forward, DataPacket, DropReason, ForwardDecision, ForwardingConfig,
    RouteCache, SourceRouteHeader, UnipathRouter, UnipathVariant,
};
use crate::time::SimTime;

/// How long a flooded `(originator, sequence)` pair is remembered.
const DUPLICATE_HOLD: SimTime = SimTime(30_000_000_000);

const RNG_STREAM_LAYOUT: u64 = 0;
const RNG_STREAM_MOBILITY: u64 = 1;

#[derive(Debug, Clone)]
pub enum Payload {
    Hello(HelloMessage),
    Tc(TcMessage),
    Data(DataPacket),
}

/// A MAC frame: broadcast when `dest` is `None`.
#[derive(Debug, Clone)]
pub struct Frame {
    pub dest: Option<NodeId>,
    pub payload: Payload,
}

impl Frame {
    /// Network-layer size in bytes, before MAC overhead.
    pub fn size_bytes(&self) -> usize {
        match &self.payload {
            Payload::Hello(h) => 16 + 8 * h.listed_neighbors.len(),
            Payload::Tc(t) => 16 + 4 * t.advertised.len(),
            Payload::Data(p) => {
                let route = p.header.as_ref().map_or(0, |h| 8 + 4 * h.route.len());
                p.payload_size + route
            }
        }
    }

    fn is_data(&self) -> bool {
        matches!(self.payload, Payload::Data(_))
    }
}

/// Time to put `bytes + overhead` on the air at `bandwidth_bps`.
pub fn mac_service_time(bytes: usize, overhead: usize, bandwidth_bps: u64) -> SimTime {
    let bits = ((bytes + overhead) * 8) as u128;
    SimTime((bits * 1_000_000_000).div_ceil(bandwidth_bps as u128) as u64)
}

#[derive(Debug, Clone)]
pub enum EventKind {
    HelloDue(NodeId),
    TcDue(NodeId),
    CbrSend(usize),
    MacDequeue(NodeId),
    PacketArrival { to: NodeId, from: NodeId, frame: Frame },
    ExpirySweep,
    MobilityUpdate,
    SimEnd,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::HelloDue(_) => "hello_due",
            EventKind::TcDue(_) => "tc_due",
            EventKind::CbrSend(_) => "cbr_send",
            EventKind::MacDequeue(_) => "mac_dequeue",
            EventKind::PacketArrival { .. } => "packet_arrival",
            EventKind::ExpirySweep => "expiry_sweep",
            EventKind::MobilityUpdate => "mobility_update",
            EventKind::SimEnd => "sim_end",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Event {
    pub time: SimTime,
    pub ordinal: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.ordinal) == (other.time, other.ordinal)
    }
}

impl Eq for Event {}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest (time, ordinal).
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.ordinal).cmp(&(self.time, self.ordinal))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
pub struct MobileNode {
    pub id: NodeId,
    pub mobility: Waypoint,
    pub olsr: ProtocolState,
    pub seen: DuplicateSet,
    pub route_cache: RouteCache,
    pub unipath: UnipathRouter,
    pub mac_queue: VecDeque<Frame>,
    pub mac_busy: bool,
    pub last_dequeue: Option<SimTime>,
    pub forwarded_data_count: u64,
    advertised_last_tc: bool,
}

#[derive(Debug, Clone)]
struct Flow {
    source: NodeId,
    destination: NodeId,
    interval: SimTime,
    next_sequence: u64,
    encoder: Option<GroupEncoder>,
    decoder: Option<GroupDecoder>,
}

/// One deterministic simulation run.
pub struct Simulator {
    scenario: Scenario,
    nodes: Vec<MobileNode>,
    flows: Vec<Flow>,
    events: BinaryHeap<Event>,
    next_ordinal: u64,
    now: SimTime,
    end: SimTime,
    mobility_rng: ChaCha8Rng,
    mobility: MobilityParams,
    policy: CostPolicy,
    forwarding: ForwardingConfig,
    report: MetricsReport,
    trace: Option<Vec<TraceRecord>>,
    dequeue_violations: u64,
}

impl Simulator {
    pub fn new(scenario: &Scenario, tracing: bool) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let codec: Option<CodecConfig> = if scenario.variant == Variant::MdcMpolsr {
            Some(
                scenario
                    .codec_config()
                    .map_err(|e| ScenarioError::InvalidScenario(vec![e.to_string()]))?,
            )
        } else {
            None
        };

        let mut layout_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        layout_rng.set_stream(RNG_STREAM_LAYOUT);
        let mut mobility_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        mobility_rng.set_stream(RNG_STREAM_MOBILITY);

        let timers = scenario.timers();
        let unipath_variant = if scenario.variant.link_feedback() {
            UnipathVariant::Feedback
        } else {
            UnipathVariant::Periodic
        };
        let nodes: Vec<MobileNode> = (0..scenario.node_count)
            .map(|i| {
                let position = match scenario.placement {
                    Placement::Uniform => Position::new(
                        layout_rng.random_range(0.0..=scenario.area_width_m),
                        layout_rng.random_range(0.0..=scenario.area_height_m),
                    ),
                    Placement::Line => Position::new(
                        i as f64 * scenario.line_spacing_m,
                        scenario.area_height_m / 2.0,
                    ),
                };
                let id = NodeId(i as u32);
                MobileNode {
                    id,
                    mobility: Waypoint::at(position),
                    olsr: ProtocolState::new(id, timers),
                    seen: DuplicateSet::new(),
                    route_cache: RouteCache::new(),
                    unipath: UnipathRouter::new(unipath_variant),
                    mac_queue: VecDeque::new(),
                    mac_busy: false,
                    last_dequeue: None,
                    forwarded_data_count: 0,
                    advertised_last_tc: false,
                }
            })
            .collect();

        let interval = SimTime::from_secs_f64(1.0 / scenario.cbr_rate_pps);
        let flush_timeout = SimTime(interval.0 * scenario.mdc_group_size as u64 * 2);
        let n = scenario.node_count as u32;
        let flows: Vec<Flow> = (0..scenario.cbr_flows)
            .map(|f| {
                let source = layout_rng.random_range(0..n);
                let mut destination = layout_rng.random_range(0..n - 1);
                if destination >= source {
                    destination += 1;
                }
                Flow {
                    source: NodeId(source),
                    destination: NodeId(destination),
                    interval,
                    next_sequence: 0,
                    encoder: codec
                        .clone()
                        .map(|c| GroupEncoder::new(f as u32, c, scenario.mdc_group_size, flush_timeout)),
                    decoder: codec.clone().map(GroupDecoder::new),
                }
            })
            .collect();

        let mut sim = Simulator {
            scenario: scenario.clone(),
            nodes,
            flows,
            events: BinaryHeap::new(),
            next_ordinal: 0,
            now: SimTime::ZERO,
            end: SimTime::from_secs_f64(scenario.duration_s),
            mobility_rng,
            mobility: MobilityParams {
                width: scenario.area_width_m,
                height: scenario.area_height_m,
                v_min: scenario.v_min_mps,
                v_max: scenario.v_max_mps,
                pause: SimTime::from_secs_f64(scenario.pause_s),
            },
            policy: scenario.cost_policy(),
            forwarding: ForwardingConfig {
                recovery_enabled: scenario.variant.recovery(),
                recovery_cap: scenario.recovery_cap,
                ttl: scenario.ttl,
            },
            report: MetricsReport::default(),
            trace: tracing.then(Vec::new),
            dequeue_violations: 0,
        };

        for i in 0..sim.nodes.len() {
            let id = NodeId(i as u32);
            let h = SimTime(layout_rng.random_range(0..timers.hello_interval.0));
            let t = SimTime(layout_rng.random_range(0..timers.tc_interval.0));
            sim.schedule(h, EventKind::HelloDue(id));
            sim.schedule(t, EventKind::TcDue(id));
        }
        let warmup = SimTime::from_secs_f64(scenario.warmup_s);
        for f in 0..sim.flows.len() {
            let offset = SimTime(layout_rng.random_range(0..interval.0.max(1)));
            sim.schedule(warmup + offset, EventKind::CbrSend(f));
        }
        sim.schedule(SimTime::ZERO, EventKind::ExpirySweep);
        if !sim.mobility.is_static() {
            sim.schedule(SimTime::ZERO, EventKind::MobilityUpdate);
        }
        let end = sim.end;
        sim.schedule(end, EventKind::SimEnd);
        Ok(sim)
    }

    pub fn nodes(&self) -> &[MobileNode] {
        &self.nodes
    }

    /// Count of MAC dequeues that were not strictly after the previous one
    /// at the same node. Always zero in a correct run.
    pub fn dequeue_violations(&self) -> u64 {
        self.dequeue_violations
    }

    fn schedule(&mut self, time: SimTime, kind: EventKind) {
        let ordinal = self.next_ordinal;
        self.next_ordinal += 1;
        self.events.push(Event { time, ordinal, kind });
    }

    fn record(&mut self, node: Option<NodeId>, kind: &'static str, detail: impl FnOnce() -> String) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceRecord {
                time: self.now,
                node,
                kind,
                detail: detail(),
            });
        }
    }

    /// Processes events until the end of the run and returns the counters
    /// plus the trace, if tracing was requested.
    pub fn run(mut self) -> (MetricsReport, Option<Vec<TraceRecord>>) {
        self.advance();
        self.finish()
    }

    pub fn finish(self) -> (MetricsReport, Option<Vec<TraceRecord>>) {
        (self.report, self.trace)
    }

    /// Processes every event up to and including the end of the run. Node
    /// state stays inspectable afterwards.
    pub fn advance(&mut self) {
        while let Some(event) = self.events.pop() {
            self.now = event.time;
            let node = match &event.kind {
                EventKind::HelloDue(n)
                | EventKind::TcDue(n)
                | EventKind::MacDequeue(n)
                | EventKind::PacketArrival { to: n, .. } => Some(*n),
                EventKind::CbrSend(f) => Some(self.flows[*f].source),
                _ => None,
            };
            let name = event.kind.name();
            if !matches!(event.kind, EventKind::SimEnd) {
                self.record(node, name, String::new);
            }
            match event.kind {
                EventKind::HelloDue(n) => self.on_hello_due(n),
                EventKind::TcDue(n) => self.on_tc_due(n),
                EventKind::CbrSend(f) => self.on_cbr_send(f),
                EventKind::MacDequeue(n) => self.on_mac_dequeue(n),
                EventKind::PacketArrival { to, from, frame } => self.on_arrival(to, from, frame),
                EventKind::ExpirySweep => self.on_expiry_sweep(),
                EventKind::MobilityUpdate => self.on_mobility_update(),
                EventKind::SimEnd => {
                    self.on_sim_end();
                    break;
                }
            }
        }
    }

    fn on_hello_due(&mut self, n: NodeId) {
        let node = &self.nodes[n.0 as usize];
        let hello = node.olsr.generate_hello(self.now);
        let next = self.now + node.olsr.timers.hello_interval;
        self.enqueue(n, Frame {
            dest: None,
            payload: Payload::Hello(hello),
        });
        self.schedule(next, EventKind::HelloDue(n));
    }

    fn on_tc_due(&mut self, n: NodeId) {
        let now = self.now;
        let node = &mut self.nodes[n.0 as usize];
        let next = now + node.olsr.timers.tc_interval;
        let has_selectors = node.olsr.mpr_selectors(now).next().is_some();
        if has_selectors || node.advertised_last_tc {
            let tc = node.olsr.generate_tc(now);
            node.seen.insert(n, tc.sequence, now + DUPLICATE_HOLD);
            node.advertised_last_tc = has_selectors;
            self.enqueue(n, Frame {
                dest: None,
                payload: Payload::Tc(tc),
            });
        }
        self.schedule(next, EventKind::TcDue(n));
    }

    fn on_cbr_send(&mut self, f: usize) {
        let now = self.now;
        if now >= self.end {
            return;
        }
        let flow = &mut self.flows[f];
        let sequence = flow.next_sequence;
        flow.next_sequence += 1;
        let (source, destination, interval) = (flow.source, flow.destination, flow.interval);
        self.report.data_sent += 1;
        self.record(Some(source), "data_send", || format!("flow={f} seq={sequence}"));

        let payload_bytes = self.scenario.cbr_payload_bytes;
        if self.flows[f].encoder.is_some() {
            let payload = synthetic_payload(f as u32, sequence, payload_bytes);
            let encoder = self.flows[f].encoder.as_mut().unwrap();
            if let Some(group) = encoder.push(
                BufferedPacket {
                    sequence,
                    created_at: now,
                    payload,
                },
                now,
            ) {
                self.send_descriptions(f, group);
            }
        } else {
            let packet = DataPacket {
                flow_id: f as u32,
                sequence,
                source,
                destination,
                payload_size: payload_bytes,
                header: None,
                mdc: None,
                created_at: now,
                hop_count: 0,
            };
            self.originate(packet, sequence);
        }

        if now + interval < self.end {
            self.schedule(now + interval, EventKind::CbrSend(f));
        }
    }

    fn send_descriptions(&mut self, f: usize, group: Vec<TaggedDescription>) {
        let flow = &self.flows[f];
        let (source, destination) = (flow.source, flow.destination);
        for tagged in group {
            let index = tagged.description_index as u64;
            let packet = DataPacket {
                flow_id: f as u32,
                sequence: tagged.group_id,
                source,
                destination,
                payload_size: tagged.description.wire_size(),
                header: None,
                mdc: Some(Box::new(tagged)),
                created_at: self.now,
                hop_count: 0,
            };
            self.originate(packet, index);
        }
    }

    /// Injects a new data unit at its source. `route_key` selects the route
    /// among the multipath set.
    fn originate(&mut self, mut packet: DataPacket, route_key: u64) {
        self.report.units_sent += 1;
        let source = packet.source;
        let unit = unit_label(&packet);
        self.record(Some(source), "unit_send", || unit);

        if !self.scenario.variant.is_multipath() {
            self.unipath_step(source, packet, true);
            return;
        }
        let now = self.now;
        let node = &mut self.nodes[source.0 as usize];
        let routes = node.route_cache.routes(
            &node.olsr,
            packet.destination,
            self.scenario.n_routes,
            &self.policy,
            now,
        );
        match routes {
            Ok(routes) => {
                packet.header = Some(SourceRouteHeader::new(allocate_route(route_key, routes)));
                self.source_route_step(source, packet, true);
            }
            Err(e) => {
                debug!("node {source}: {e}");
                self.drop_unit(source, DropReason::NoRoute);
            }
        }
    }

    fn source_route_step(&mut self, at: NodeId, mut packet: DataPacket, at_source: bool) {
        let node = &self.nodes[at.0 as usize];
        let decision = forward(&node.olsr, &packet, &self.forwarding, self.now)
            .unwrap_or_else(|e| panic!("node {at}: {e}"));
        match decision {
            ForwardDecision::Deliver => self.deliver(at, packet),
            ForwardDecision::ForwardTo(next_hop) => {
                packet.header.as_mut().unwrap().advance();
                self.relay(at, packet, next_hop, at_source);
            }
            ForwardDecision::Recovered { new_route, next_hop } => {
                self.record(Some(at), "recovery", || {
                    let hops: Vec<String> = new_route.iter().map(|n| n.to_string()).collect();
                    format!("route={}", hops.join(","))
                });
                let header = packet.header.as_mut().unwrap();
                header.splice(&new_route);
                header.advance();
                self.relay(at, packet, next_hop, at_source);
            }
            ForwardDecision::Drop(reason) => self.drop_unit(at, reason),
        }
    }

    fn unipath_step(&mut self, at: NodeId, packet: DataPacket, at_source: bool) {
        if packet.destination == at {
            self.deliver(at, packet);
            return;
        }
        if packet.hop_count >= self.scenario.ttl {
            self.drop_unit(at, DropReason::TtlExceeded);
            return;
        }
        let now = self.now;
        let node = &mut self.nodes[at.0 as usize];
        match node.unipath.next_hop(&node.olsr, packet.destination, now) {
            Ok(next_hop) => self.relay(at, packet, next_hop, at_source),
            Err(_) => self.drop_unit(at, DropReason::NoRoute),
        }
    }

    fn relay(&mut self, at: NodeId, packet: DataPacket, next_hop: NodeId, at_source: bool) {
        if !at_source {
            self.nodes[at.0 as usize].forwarded_data_count += 1;
            let unit = unit_label(&packet);
            self.record(Some(at), "forward", || format!("{unit} to={next_hop}"));
        }
        self.enqueue(at, Frame {
            dest: Some(next_hop),
            payload: Payload::Data(packet),
        });
    }

    fn deliver(&mut self, at: NodeId, packet: DataPacket) {
        let now = self.now;
        self.report.units_delivered += 1;
        let unit = unit_label(&packet);
        self.record(Some(at), "unit_deliver", || unit);
        let flow = packet.flow_id as usize;
        match packet.mdc {
            Some(tagged) => {
                let decoder = self.flows[flow]
                    .decoder
                    .as_mut()
                    .expect("MDC unit on a flow without decoder");
                match decoder.receive(*tagged) {
                    Ok(Some(packets)) => {
                        for p in packets {
                            self.count_delivery(at, flow, p.sequence, now - p.created_at);
                        }
                    }
                    Ok(None) => {}
                    Err(e) => debug!("flow {flow}: group decode failed: {e}"),
                }
            }
            None => self.count_delivery(at, flow, packet.sequence, now - packet.created_at),
        }
    }

    fn count_delivery(&mut self, at: NodeId, flow: usize, seq: u64, delay: SimTime) {
        self.report.data_delivered += 1;
        self.report.per_packet_delay.push(delay);
        self.record(Some(at), "deliver", || {
            format!("flow={flow} seq={seq} delay_ns={}", delay.as_nanos())
        });
    }

    fn drop_unit(&mut self, at: NodeId, reason: DropReason) {
        self.report.record_drop(reason);
        self.record(Some(at), "drop", || format!("reason={}", reason.as_str()));
    }

    fn enqueue(&mut self, n: NodeId, frame: Frame) {
        let limit = self.scenario.mac_queue_limit;
        let node = &mut self.nodes[n.0 as usize];
        if node.mac_queue.len() >= limit {
            if frame.is_data() {
                self.drop_unit(n, DropReason::QueueOverflow);
            }
            return;
        }
        node.mac_queue.push_back(frame);
        if !node.mac_busy {
            node.mac_busy = true;
            let now = self.now;
            self.schedule(now, EventKind::MacDequeue(n));
        }
    }

    fn on_mac_dequeue(&mut self, n: NodeId) {
        let now = self.now;
        let idx = n.0 as usize;
        let Some(frame) = self.nodes[idx].mac_queue.pop_front() else {
            self.nodes[idx].mac_busy = false;
            return;
        };
        if let Some(last) = self.nodes[idx].last_dequeue {
            if now <= last {
                self.dequeue_violations += 1;
            }
        }
        self.nodes[idx].last_dequeue = Some(now);

        let service = mac_service_time(
            frame.size_bytes(),
            self.scenario.mac_overhead_bytes,
            self.scenario.bandwidth_bps,
        );
        let range = self.scenario.tx_range_m;
        let here = self.nodes[idx].mobility.position;
        let busy = match frame.dest {
            None => {
                match &frame.payload {
                    Payload::Hello(_) => {
                        self.report.control_transmissions += 1;
                        self.record(Some(n), "ctrl_tx", || "msg=hello".into());
                    }
                    Payload::Tc(tc) => {
                        self.report.control_transmissions += 1;
                        self.record(Some(n), "ctrl_tx", || {
                            format!("msg=tc orig={} seq={}", tc.originator, tc.sequence)
                        });
                    }
                    Payload::Data(_) => {}
                }
                let receivers: Vec<NodeId> = self
                    .nodes
                    .iter()
                    .filter(|m| m.id != n && in_range(here, m.mobility.position, range))
                    .map(|m| m.id)
                    .collect();
                for to in receivers {
                    self.schedule(now + service, EventKind::PacketArrival {
                        to,
                        from: n,
                        frame: frame.clone(),
                    });
                }
                service
            }
            Some(next_hop) => {
                let there = self.nodes[next_hop.0 as usize].mobility.position;
                if in_range(here, there, range) {
                    self.schedule(now + service, EventKind::PacketArrival {
                        to: next_hop,
                        from: n,
                        frame,
                    });
                    service
                } else {
                    self.drop_unit(n, DropReason::LinkFailure);
                    if self.scenario.variant.link_feedback() {
                        self.link_failure_feedback(n, next_hop);
                    }
                    service.max(SimTime::from_secs_f64(self.scenario.mac_retry_timeout_s))
                }
            }
        };
        self.schedule(now + busy, EventKind::MacDequeue(n));
    }

    fn link_failure_feedback(&mut self, n: NodeId, lost: NodeId) {
        self.record(Some(n), "link_feedback", || format!("lost={lost}"));
        let node = &mut self.nodes[n.0 as usize];
        if self.scenario.variant.is_multipath() {
            node.olsr.remove_neighbor(lost);
        } else {
            node.unipath.on_link_failure(&mut node.olsr, lost);
        }
    }

    fn on_arrival(&mut self, to: NodeId, from: NodeId, frame: Frame) {
        let now = self.now;
        match frame.payload {
            Payload::Hello(hello) => {
                let _ = self.nodes[to.0 as usize].olsr.process_hello(&hello, now);
            }
            Payload::Tc(tc) => self.on_tc(to, from, tc),
            Payload::Data(mut packet) => {
                packet.hop_count += 1;
                if self.scenario.variant.is_multipath() {
                    self.source_route_step(to, packet, false);
                } else {
                    self.unipath_step(to, packet, false);
                }
            }
        }
    }

    fn on_tc(&mut self, to: NodeId, from: NodeId, tc: TcMessage) {
        let now = self.now;
        let node = &mut self.nodes[to.0 as usize];
        if tc.originator == to || !node.olsr.is_symmetric_neighbor(from, now) {
            return;
        }
        let retransmit = node.olsr.should_forward_flood(&tc, from, &node.seen, now);
        if !node.seen.contains(tc.originator, tc.sequence) {
            if let Err(e) = node.olsr.process_tc(&tc, now) {
                trace!("node {to}: {e}");
            }
        }
        node.seen.insert(tc.originator, tc.sequence, now + DUPLICATE_HOLD);
        if retransmit {
            self.enqueue(to, Frame {
                dest: None,
                payload: Payload::Tc(tc),
            });
        }
    }

    fn on_expiry_sweep(&mut self) {
        let now = self.now;
        for node in &mut self.nodes {
            node.olsr.expire(now);
            node.seen.expire(now);
        }
        for f in 0..self.flows.len() {
            let group = self.flows[f]
                .encoder
                .as_mut()
                .and_then(|e| e.poll_timeout(now));
            if let Some(group) = group {
                self.send_descriptions(f, group);
            }
        }
        let next = now + SimTime::from_secs_f64(self.scenario.expiry_sweep_s);
        self.schedule(next, EventKind::ExpirySweep);
    }

    fn on_mobility_update(&mut self) {
        let now = self.now;
        let dt = self.scenario.mobility_tick_s;
        for node in &mut self.nodes {
            node.mobility.step(now, dt, &self.mobility, &mut self.mobility_rng);
        }
        self.schedule(now + SimTime::from_secs_f64(dt), EventKind::MobilityUpdate);
    }

    fn on_sim_end(&mut self) {
        let queued: u64 = self
            .nodes
            .iter()
            .map(|n| n.mac_queue.iter().filter(|f| f.is_data()).count() as u64)
            .sum();
        let airborne = self
            .events
            .iter()
            .filter(|e| matches!(&e.kind, EventKind::PacketArrival { frame, .. } if frame.is_data()))
            .count() as u64;
        for _ in 0..queued + airborne {
            self.report.record_drop(DropReason::InFlight);
        }
        self.record(None, "in_flight", || format!("count={}", queued + airborne));
        self.report.per_node_forwarded = self
            .nodes
            .iter()
            .map(|n| (n.id, n.forwarded_data_count))
            .collect();
        let nodes = self.nodes.len();
        self.record(None, "sim_end", || format!("nodes={nodes}"));
    }
}

/// `flow=F seq=S`, plus `desc=I` for MDC descriptions.
fn unit_label(packet: &DataPacket) -> String {
    match &packet.mdc {
        Some(t) => format!(
            "flow={} seq={} desc={}",
            packet.flow_id, packet.sequence, t.description_index
        ),
        None => format!("flow={} seq={}", packet.flow_id, packet.sequence),
    }
}

/// Deterministic payload bytes for packet `sequence` of `flow`.
fn synthetic_payload(flow: u32, sequence: u64, len: usize) -> Vec<u8> {
    let mut state = (flow as u64) << 32 ^ sequence ^ 0x9E37_79B9_7F4A_7C15;
    (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state as u8
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn service_time_rounds_up() {
        assert_eq!(mac_service_time(512, 24, 11_000_000), SimTime(389_819));
        assert_eq!(mac_service_time(0, 1, 8_000_000_000), SimTime(1));
    }

    #[test]
    fn heap_pops_by_time_then_ordinal() {
        let mut heap = BinaryHeap::new();
        for (t, o) in [(5, 2), (3, 9), (5, 1), (3, 4)] {
            heap.push(Event {
                time: SimTime(t),
                ordinal: o,
                kind: EventKind::ExpirySweep,
            });
        }
        let order: Vec<(u64, u64)> = std::iter::from_fn(|| heap.pop())
            .map(|e| (e.time.0, e.ordinal))
            .collect();
        assert_eq!(order, vec![(3, 4), (3, 9), (5, 1), (5, 2)]);
    }

    #[test]
    fn frame_sizes() {
        let hello = Frame {
            dest: None,
            payload: Payload::Hello(HelloMessage {
                originator: NodeId(0),
                listed_neighbors: vec![(NodeId(1), crate::olsr::LinkStatus::Mpr)],
                validity: SimTime::ZERO,
            }),
        };
        assert_eq!(hello.size_bytes(), 24);
        assert!(!hello.is_data());
    }

    #[test]
    fn payload_bytes_are_reproducible() {
        assert_eq!(synthetic_payload(3, 7, 64), synthetic_payload(3, 7, 64));
        assert_ne!(synthetic_payload(3, 7, 64), synthetic_payload(3, 8, 64));
        assert_eq!(synthetic_payload(0, 0, 5).len(), 5);
    }

    #[test]
    fn flows_have_distinct_endpoints() {
        let s = Scenario {
            node_count: 2,
            cbr_flows: 50,
            ..Scenario::default()
        };
        let sim = Simulator::new(&s, false).unwrap();
        assert!(sim.flows.iter().all(|f| f.source != f.destination));
    }
}
