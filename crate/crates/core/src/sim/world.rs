use std::collections::{BTreeMap, HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::event::EventQueue;
use super::link::LinkDirection;
use crate::ids::{IfaceId, NodeId};
use crate::message::{AlertMessage, ContentObject, Interest, Message};
use crate::metrics::{MetricsBundle, MetricsRecord};
use crate::name::Name;
use crate::poseidon::{Admission, Poseidon, RouterAlertOutcome};
use crate::router::{ContentStore, ForwardDecision, Forwarder, Pit};
use crate::scenario::{PoseidonMode, Role, Scenario, ScenarioError};
use crate::time::SimTime;
use crate::traffic::{Attacker, Consumer, Producer};
use crate::trust::TrustRegistry;

/// Per-router counters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RouterStats {
    pub interests_received: u64,
    pub interests_forwarded: u64,
    pub contents_forwarded: u64,
    pub cache_hits: u64,
    pub collapsed: u64,
    pub drops_poseidon: u64,
    pub drops_pitfull: u64,
    pub drops_dup: u64,
    pub drops_noroute: u64,
    pub alerts_sent: u64,
    pub alerts_received: u64,
    pub alerts_applied: u64,
    pub first_poseidon_drop: Option<SimTime>,
    pub first_alert_sent: Option<SimTime>,
    /// Set when an insertion first fails for lack of space, i.e. when the
    /// PIT is within one entry of capacity.
    pub first_pitfull_drop: Option<SimTime>,
    pub pit_peak_bytes: u64,
}

/// Whole-run totals, used for the conservation check.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub interests_emitted: u64,
    pub honest_emitted: u64,
    pub honest_satisfied: u64,
    pub attack_emitted: u64,
    pub delivered_to_producers: u64,
    pub producer_replies: u64,
    pub misdelivered: u64,
    pub link_drops_interest: u64,
    pub link_drops_content: u64,
    pub in_flight_interests: u64,
    pub events_processed: u64,
    pub routers: BTreeMap<String, RouterStats>,
}

impl RunSummary {
    pub fn total(&self, f: impl Fn(&RouterStats) -> u64) -> u64 {
        self.routers.values().map(f).sum()
    }

    /// Every emitted interest ends exactly once: at a producer, dropped by a
    /// router or a link, collapsed, answered from a cache, or still in
    /// flight when the run stops.
    pub fn check_conservation(&self) -> Result<(), String> {
        let accounted = self.delivered_to_producers
            + self.misdelivered
            + self.link_drops_interest
            + self.in_flight_interests
            + self.total(|r| {
                r.drops_poseidon
                    + r.drops_pitfull
                    + r.drops_dup
                    + r.drops_noroute
                    + r.collapsed
                    + r.cache_hits
            });
        if accounted == self.interests_emitted {
            Ok(())
        } else {
            Err(format!(
                "{} interests emitted but {accounted} accounted for",
                self.interests_emitted
            ))
        }
    }
}

#[derive(Clone, Debug)]
enum Event {
    Deliver {
        node: NodeId,
        iface: IfaceId,
        msg: Message,
    },
    Send {
        node: NodeId,
        iface: IfaceId,
        msg: Message,
    },
    Generate {
        node: NodeId,
    },
    Retransmit {
        node: NodeId,
        name: Name,
    },
    Detection,
    Sample,
}

struct RouterNode {
    fwd: Forwarder,
    poseidon: Option<Poseidon>,
    stats: RouterStats,
}

struct ConsumerNode {
    consumer: Consumer,
    retransmit: bool,
    pending: HashSet<Name>,
}

enum NodeKind {
    Router(Box<RouterNode>),
    Consumer(ConsumerNode),
    Attacker(Attacker),
    Producer(Producer),
    Idle,
}

struct Node {
    label: String,
    kind: NodeKind,
    rng: ChaCha8Rng,
    /// Interface to (link index, direction from this end).
    ifaces: BTreeMap<IfaceId, (usize, usize)>,
}

struct Link {
    ends: [(NodeId, IfaceId); 2],
    dirs: [LinkDirection; 2],
}

/// A simulated network built from a [`Scenario`].
pub struct World {
    nodes: Vec<Node>,
    links: Vec<Link>,
    queue: EventQueue<Event>,
    registry: TrustRegistry,
    lifetime: SimTime,
    horizon: SimTime,
    detection_interval: Option<SimTime>,
    sample_interval: SimTime,
    summary: RunSummary,
    records: Vec<MetricsRecord>,
}

impl World {
    pub fn from_scenario(scenario: &Scenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let topo = &scenario.topology;
        let index: HashMap<&str, NodeId> = topo
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), NodeId(i as u32)))
            .collect();
        let mut registry = TrustRegistry::new();
        for (i, n) in topo.nodes.iter().enumerate() {
            if matches!(n.role, Role::Router | Role::Producer) {
                registry.register_derived(NodeId(i as u32), scenario.seed);
            }
        }
        let consumer_tags: Vec<String> =
            scenario.consumers.iter().map(|c| c.node.clone()).collect();
        let any_poseidon = topo
            .routers()
            .any(|r| scenario.poseidon.mode_of(r) != PoseidonMode::Off);

        let mut nodes = Vec::with_capacity(topo.nodes.len());
        for (i, spec) in topo.nodes.iter().enumerate() {
            let id = NodeId(i as u32);
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            rng.set_stream(u64::from(id.0));
            let kind = match spec.role {
                Role::Router => {
                    let fwd = Forwarder::new(
                        topo.build_fib(&spec.id)?,
                        Pit::new(scenario.pit_capacity_bytes, scenario.interest_lifetime),
                        ContentStore::new(scenario.cs_capacity_bytes),
                    );
                    let ifaces = topo.ifaces(&spec.id).into_iter().map(IfaceId);
                    let poseidon = match scenario.poseidon.mode_of(&spec.id) {
                        PoseidonMode::Off => None,
                        mode => Some(Poseidon::new(
                            id,
                            spec.id.clone(),
                            scenario.poseidon.params.clone(),
                            scenario.pit_capacity_bytes,
                            ifaces,
                            mode == PoseidonMode::Pushback,
                        )),
                    };
                    NodeKind::Router(Box::new(RouterNode {
                        fwd,
                        poseidon,
                        stats: RouterStats::default(),
                    }))
                }
                Role::Consumer => match scenario.consumers.iter().find(|c| c.node == spec.id) {
                    Some(c) => NodeKind::Consumer(ConsumerNode {
                        consumer: Consumer::new(c.node.clone(), c.schedule.clone(), &mut rng),
                        retransmit: c.retransmit,
                        pending: HashSet::new(),
                    }),
                    None => NodeKind::Idle,
                },
                Role::Attacker => match scenario.attackers.iter().find(|a| a.node == spec.id) {
                    Some(a) => NodeKind::Attacker(Attacker::new(a.schedule.clone(), &mut rng)),
                    None => NodeKind::Idle,
                },
                Role::Producer => match scenario.producers.iter().find(|p| p.node == spec.id) {
                    Some(p) => NodeKind::Producer(Producer::new(
                        id,
                        p.spec.clone(),
                        consumer_tags.iter().cloned(),
                    )),
                    None => NodeKind::Idle,
                },
            };
            nodes.push(Node {
                label: spec.id.clone(),
                kind,
                rng,
                ifaces: BTreeMap::new(),
            });
        }

        let mut links = Vec::with_capacity(topo.links.len());
        for (k, l) in topo.links.iter().enumerate() {
            let (a, b) = (index[l.a.as_str()], index[l.b.as_str()]);
            let (ai, bi) = (IfaceId(l.a_iface), IfaceId(l.b_iface));
            nodes[a.0 as usize].ifaces.insert(ai, (k, 0));
            nodes[b.0 as usize].ifaces.insert(bi, (k, 1));
            links.push(Link {
                ends: [(a, ai), (b, bi)],
                dirs: [
                    LinkDirection::new(l.params()),
                    LinkDirection::new(l.params()),
                ],
            });
        }

        let mut summary = RunSummary::default();
        for r in topo.routers() {
            summary
                .routers
                .insert(r.to_string(), RouterStats::default());
        }

        let mut world = Self {
            nodes,
            links,
            queue: EventQueue::new(),
            registry,
            lifetime: scenario.interest_lifetime,
            horizon: scenario.horizon,
            detection_interval: any_poseidon.then_some(scenario.poseidon.params.detection_interval),
            sample_interval: scenario.sample_interval,
            summary,
            records: Vec::new(),
        };
        world.schedule_initial(scenario);
        Ok(world)
    }

    fn schedule_initial(&mut self, scenario: &Scenario) {
        let t0 = SimTime::ZERO;
        for i in 0..self.nodes.len() {
            let next = match &self.nodes[i].kind {
                NodeKind::Consumer(c) => c.consumer.schedule.next_instant_at_or_after(t0),
                NodeKind::Attacker(a) => a.schedule.next_instant_at_or_after(t0),
                _ => None,
            };
            if let Some(at) = next {
                self.schedule(
                    at,
                    Event::Generate {
                        node: NodeId(i as u32),
                    },
                );
            }
        }
        // Sweeping expired PIT entries on the detection grid also bounds the
        // expiry latency of routers without Poseidon.
        let sweep = self
            .detection_interval
            .unwrap_or(scenario.poseidon.params.detection_interval);
        self.detection_interval = Some(sweep);
        self.schedule(sweep, Event::Detection);
        self.schedule(self.sample_interval, Event::Sample);
    }

    fn schedule(&mut self, at: SimTime, ev: Event) {
        self.queue
            .schedule(at, ev)
            .expect("handlers never schedule in the past");
    }

    pub fn registry(&self) -> &TrustRegistry {
        &self.registry
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    fn router_index(&self, label: &str) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n.label == label && matches!(n.kind, NodeKind::Router(_)))
    }

    pub fn poseidon(&self, router: &str) -> Option<&Poseidon> {
        match &self.nodes[self.router_index(router)?].kind {
            NodeKind::Router(r) => r.poseidon.as_ref(),
            _ => None,
        }
    }

    /// Keeps every Poseidon decision of `router` for later inspection.
    pub fn enable_decision_log(&mut self, router: &str) {
        if let Some(i) = self.router_index(router) {
            if let NodeKind::Router(r) = &mut self.nodes[i].kind {
                if let Some(p) = &mut r.poseidon {
                    p.enable_log();
                }
            }
        }
    }

    pub fn forwarder(&self, router: &str) -> Option<&Forwarder> {
        match &self.nodes[self.router_index(router)?].kind {
            NodeKind::Router(r) => Some(&r.fwd),
            _ => None,
        }
    }

    /// Runs until `until` (inclusive) or the scenario horizon, whichever is
    /// earlier.
    pub fn run(&mut self, until: SimTime) -> (MetricsBundle, RunSummary) {
        let until = until.min(self.horizon);
        while let Some((now, ev)) = self.queue.pop_until(until) {
            self.summary.events_processed += 1;
            self.handle(now, ev);
        }
        let mut summary = self.summary.clone();
        summary.in_flight_interests = self
            .queue
            .pending()
            .filter(|e| {
                matches!(
                    e,
                    Event::Deliver {
                        msg: Message::Interest(_),
                        ..
                    }
                )
            })
            .count() as u64;
        for n in &self.nodes {
            if let NodeKind::Router(r) = &n.kind {
                summary.routers.insert(n.label.clone(), r.stats.clone());
            }
        }
        (
            MetricsBundle {
                records: self.records.clone(),
            },
            summary,
        )
    }

    fn handle(&mut self, now: SimTime, ev: Event) {
        match ev {
            Event::Deliver { node, iface, msg } => self.deliver(now, node, iface, msg),
            Event::Send { node, iface, msg } => self.transmit(now, node, iface, msg),
            Event::Generate { node } => self.generate(now, node),
            Event::Retransmit { node, name } => self.retransmit(now, node, name),
            Event::Detection => {
                for n in &mut self.nodes {
                    if let NodeKind::Router(r) = &mut n.kind {
                        r.fwd.pit_expire(now);
                        if let Some(p) = &mut r.poseidon {
                            p.end_interval(now, &r.fwd.pit);
                        }
                    }
                }
                let step = self.detection_interval.expect("set at construction");
                self.schedule(now + step, Event::Detection);
            }
            Event::Sample => {
                self.sample(now);
                self.schedule(now + self.sample_interval, Event::Sample);
            }
        }
    }

    fn sample(&mut self, now: SimTime) {
        for n in &mut self.nodes {
            if let NodeKind::Router(r) = &mut n.kind {
                r.fwd.pit_expire(now);
                let s = &r.stats;
                self.records.push(MetricsRecord {
                    time: now,
                    router: n.label.clone(),
                    pit_used_bytes: r.fwd.pit.used_bytes() as f64,
                    contents_cum: s.contents_forwarded as f64,
                    drops_poseidon_cum: s.drops_poseidon as f64,
                    drops_pitfull_cum: s.drops_pitfull as f64,
                    drops_dup_cum: s.drops_dup as f64,
                    alerts_sent_cum: s.alerts_sent as f64,
                });
            }
        }
    }

    fn transmit(&mut self, now: SimTime, node: NodeId, iface: IfaceId, msg: Message) {
        let Some(&(link, dir)) = self.nodes[node.0 as usize].ifaces.get(&iface) else {
            self.count_link_drop(&msg);
            return;
        };
        let l = &mut self.links[link];
        let (peer, peer_iface) = l.ends[1 - dir];
        match l.dirs[dir].transmit(msg.wire_size(), now) {
            Some(at) => self.schedule(
                at,
                Event::Deliver {
                    node: peer,
                    iface: peer_iface,
                    msg,
                },
            ),
            None => self.count_link_drop(&msg),
        }
    }

    fn count_link_drop(&mut self, msg: &Message) {
        match msg {
            Message::Interest(_) => self.summary.link_drops_interest += 1,
            Message::Content(_) => self.summary.link_drops_content += 1,
        }
    }

    fn uplink(&self, node: NodeId) -> IfaceId {
        *self.nodes[node.0 as usize]
            .ifaces
            .keys()
            .next()
            .expect("end hosts have one link")
    }

    fn generate(&mut self, now: SimTime, node: NodeId) {
        let n = &mut self.nodes[node.0 as usize];
        let (interest, next, retransmit) = match &mut n.kind {
            NodeKind::Consumer(c) => {
                let i = c.consumer.emit(now, &mut n.rng);
                if let Some(i) = &i {
                    c.pending.insert(i.name.clone());
                    self.summary.honest_emitted += 1;
                }
                let next = c
                    .consumer
                    .schedule
                    .next_instant_at_or_after(now + SimTime::from_micros(1));
                (i, next, c.retransmit)
            }
            NodeKind::Attacker(a) => {
                let i = a.emit(now, &mut n.rng);
                if i.is_some() {
                    self.summary.attack_emitted += 1;
                }
                (
                    i,
                    a.schedule
                        .next_instant_at_or_after(now + SimTime::from_micros(1)),
                    false,
                )
            }
            _ => return,
        };
        if let Some(at) = next {
            self.schedule(at, Event::Generate { node });
        }
        if let Some(i) = interest {
            if retransmit {
                self.schedule(
                    now + self.lifetime,
                    Event::Retransmit {
                        node,
                        name: i.name.clone(),
                    },
                );
            }
            self.summary.interests_emitted += 1;
            let up = self.uplink(node);
            self.transmit(now, node, up, Message::Interest(i));
        }
    }

    fn retransmit(&mut self, now: SimTime, node: NodeId, name: Name) {
        let n = &mut self.nodes[node.0 as usize];
        let NodeKind::Consumer(c) = &mut n.kind else {
            return;
        };
        if !c.pending.contains(&name) {
            return;
        }
        let interest = Interest {
            name: name.clone(),
            nonce: rand::Rng::random(&mut n.rng),
            create_time: now,
        };
        self.summary.interests_emitted += 1;
        self.schedule(now + self.lifetime, Event::Retransmit { node, name });
        let up = self.uplink(node);
        self.transmit(now, node, up, Message::Interest(interest));
    }

    fn deliver(&mut self, now: SimTime, node: NodeId, iface: IfaceId, msg: Message) {
        let idx = node.0 as usize;
        match (&mut self.nodes[idx].kind, msg) {
            (NodeKind::Router(_), Message::Interest(i)) => {
                self.router_interest(now, node, iface, i)
            }
            (NodeKind::Router(_), Message::Content(c)) => self.router_content(now, node, iface, c),
            (NodeKind::Producer(p), Message::Interest(i)) => {
                self.summary.delivered_to_producers += 1;
                if let Some(resp) = p.on_interest(&i, now, &self.registry) {
                    self.summary.producer_replies += 1;
                    let at = resp.at;
                    self.schedule(
                        at,
                        Event::Send {
                            node,
                            iface,
                            msg: Message::Content(resp.content),
                        },
                    );
                }
            }
            (NodeKind::Consumer(c), Message::Content(obj)) => {
                if c.pending.remove(&obj.name) {
                    self.summary.honest_satisfied += 1;
                }
            }
            (_, Message::Interest(_)) => self.summary.misdelivered += 1,
            (_, Message::Content(_)) => {}
        }
    }

    fn router_interest(&mut self, now: SimTime, node: NodeId, iface: IfaceId, interest: Interest) {
        let NodeKind::Router(r) = &mut self.nodes[node.0 as usize].kind else {
            unreachable!()
        };
        let r = &mut **r;
        r.stats.interests_received += 1;
        r.fwd.pit_expire(now);
        if let Some(p) = &mut r.poseidon {
            if let Admission::Drop { alert_sent } = p.admit(iface, now, &r.fwd.pit) {
                r.stats.drops_poseidon += 1;
                r.stats.first_poseidon_drop.get_or_insert(now);
                if alert_sent {
                    let alert = p
                        .build_alert(iface, now, &r.fwd, &self.registry)
                        .expect("routers are registered signers");
                    r.stats.alerts_sent += 1;
                    r.stats.first_alert_sent.get_or_insert(now);
                    log::debug!(
                        "{} alerts on {iface} at {now} ms: {:?}",
                        r_label(&self.nodes, node),
                        alert.offending_namespaces
                    );
                    self.transmit(now, node, iface, Message::Content(alert.carrier));
                }
                return;
            }
        }
        let out = match r.fwd.on_interest(iface, &interest, now) {
            Ok(ForwardDecision::Forward(out)) => {
                r.stats.interests_forwarded += 1;
                Some((out, Message::Interest(interest)))
            }
            Ok(ForwardDecision::ReplyFromCache(c)) => {
                r.stats.cache_hits += 1;
                r.stats.contents_forwarded += 1;
                if let Some(p) = &mut r.poseidon {
                    p.note_content_out(iface);
                }
                Some((iface, Message::Content(c)))
            }
            Ok(ForwardDecision::Collapsed) => {
                r.stats.collapsed += 1;
                None
            }
            Ok(ForwardDecision::DroppedDuplicate) => {
                r.stats.drops_dup += 1;
                None
            }
            Ok(ForwardDecision::DroppedPitFull) => {
                r.stats.drops_pitfull += 1;
                r.stats.first_pitfull_drop.get_or_insert(now);
                None
            }
            Err(_) => {
                r.stats.drops_noroute += 1;
                None
            }
        };
        r.stats.pit_peak_bytes = r.stats.pit_peak_bytes.max(r.fwd.pit.used_bytes());
        if let Some((out, msg)) = out {
            self.transmit(now, node, out, msg);
        }
    }

    fn router_content(
        &mut self,
        now: SimTime,
        node: NodeId,
        iface: IfaceId,
        content: ContentObject,
    ) {
        let NodeKind::Router(r) = &mut self.nodes[node.0 as usize].kind else {
            unreachable!()
        };
        let r = &mut **r;
        if content.is_alert() {
            // Alerts stop here whether or not they are acted upon.
            let Some(p) = r.poseidon.as_mut().filter(|p| p.alerts_enabled()) else {
                return;
            };
            r.stats.alerts_received += 1;
            r.fwd.pit_expire(now);
            let Ok(alert) = AlertMessage::from_carrier(content) else {
                return;
            };
            if let RouterAlertOutcome::Applied { targets } =
                p.receive_alert(&alert, iface, now, &self.registry, &r.fwd)
            {
                r.stats.alerts_applied += 1;
                log::debug!(
                    "{} applied alert from {iface} at {now} ms to {targets:?}",
                    r_label(&self.nodes, node)
                );
            }
            return;
        }
        let copies = r.fwd.on_content(iface, &content, now);
        for (out, _) in &copies {
            r.stats.contents_forwarded += 1;
            if let Some(p) = &mut r.poseidon {
                p.note_content_out(*out);
            }
        }
        for (out, c) in copies {
            self.transmit(now, node, out, Message::Content(c));
        }
    }
}

fn r_label(nodes: &[Node], node: NodeId) -> &str {
    &nodes[node.0 as usize].label
}

/// Builds a world for `scenario` and runs it to the horizon.
pub fn run_scenario(scenario: &Scenario) -> Result<(MetricsBundle, RunSummary), ScenarioError> {
    let mut world = World::from_scenario(scenario)?;
    Ok(world.run(scenario.horizon))
}
