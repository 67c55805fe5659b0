//! Honest consumers, producers and flooding adversaries.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ids::NodeId;
use crate::message::{ContentObject, Interest};
use crate::name::Name;
use crate::time::SimTime;
use crate::trust::TrustRegistry;

pub const DEFAULT_PAYLOAD_SIZE: u32 = 1024;

const STATIC_COMPONENT: &[u8] = b"static";
const DYNAMIC_COMPONENT: &[u8] = b"dyn";

/// Burst-then-steady emission schedule of an honest consumer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsumerSchedule {
    pub target_prefix: Name,
    #[serde(default = "default_burst_count")]
    pub burst_count: u32,
    #[serde(
        rename = "burst_spacing_ms",
        with = "crate::serde_ms",
        default = "default_burst_spacing"
    )]
    pub burst_spacing: SimTime,
    #[serde(
        rename = "burst_start_ms",
        with = "crate::serde_ms",
        default = "default_burst_start"
    )]
    pub burst_start: SimTime,
    #[serde(
        rename = "steady_start_ms",
        with = "crate::serde_ms",
        default = "default_steady_start"
    )]
    pub steady_start: SimTime,
    #[serde(
        rename = "steady_spacing_ms",
        with = "crate::serde_ms",
        default = "default_steady_spacing"
    )]
    pub steady_spacing: SimTime,
    #[serde(
        rename = "stop_time_ms",
        with = "crate::serde_ms",
        default = "default_stop_time"
    )]
    pub stop_time: SimTime,
}

fn default_burst_count() -> u32 {
    30
}
fn default_burst_spacing() -> SimTime {
    SimTime::from_millis(2)
}
fn default_burst_start() -> SimTime {
    SimTime::from_millis(1000)
}
fn default_steady_start() -> SimTime {
    SimTime::from_millis(1200)
}
fn default_steady_spacing() -> SimTime {
    SimTime::from_micros(10_700)
}
fn default_stop_time() -> SimTime {
    SimTime::from_millis(26_000)
}
fn default_attack_spacing() -> SimTime {
    SimTime::from_micros(1_337)
}
fn default_attack_start() -> SimTime {
    SimTime::from_millis(1000)
}

impl ConsumerSchedule {
    pub fn new(target_prefix: Name) -> Self {
        Self {
            target_prefix,
            burst_count: default_burst_count(),
            burst_spacing: default_burst_spacing(),
            burst_start: default_burst_start(),
            steady_start: default_steady_start(),
            steady_spacing: default_steady_spacing(),
            stop_time: default_stop_time(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.burst_spacing == SimTime::ZERO || self.steady_spacing == SimTime::ZERO {
            return Err("consumer spacing must be > 0".into());
        }
        Ok(())
    }

    fn is_burst_instant(&self, t: SimTime) -> bool {
        if self.burst_count == 0 || t < self.burst_start {
            return false;
        }
        let off = (t - self.burst_start).as_micros();
        let step = self.burst_spacing.as_micros();
        off.is_multiple_of(step) && off / step < u64::from(self.burst_count)
    }

    fn is_steady_instant(&self, t: SimTime) -> bool {
        t >= self.steady_start
            && t <= self.stop_time
            && (t - self.steady_start)
                .as_micros()
                .is_multiple_of(self.steady_spacing.as_micros())
    }

    pub fn is_instant(&self, t: SimTime) -> bool {
        self.is_burst_instant(t) || self.is_steady_instant(t)
    }

    /// First emission instant at or after `t`.
    pub fn next_instant_at_or_after(&self, t: SimTime) -> Option<SimTime> {
        let burst = (self.burst_count > 0)
            .then(|| {
                let step = self.burst_spacing.as_micros();
                let k = if t <= self.burst_start {
                    0
                } else {
                    (t - self.burst_start).as_micros().div_ceil(step)
                };
                (k < u64::from(self.burst_count))
                    .then(|| self.burst_start + SimTime::from_micros(k * step))
            })
            .flatten();
        let steady = {
            let step = self.steady_spacing.as_micros();
            let k = if t <= self.steady_start {
                0
            } else {
                (t - self.steady_start).as_micros().div_ceil(step)
            };
            let at = self.steady_start + SimTime::from_micros(k * step);
            (at <= self.stop_time).then_some(at)
        };
        match (burst, steady) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Every emission instant in order.
    pub fn instants(&self) -> impl Iterator<Item = SimTime> + '_ {
        let mut next = self.next_instant_at_or_after(SimTime::ZERO);
        std::iter::from_fn(move || {
            let cur = next?;
            next = self.next_instant_at_or_after(cur + SimTime::from_micros(1));
            Some(cur)
        })
    }
}

/// Honest consumer. Names are `<prefix>/<tag>-<session>/<seq>`: the tag lets
/// the producer recognize them, the per-run random session makes runs with
/// different seeds request different names, and the sequence number keeps
/// every request unique so nothing collapses or hits a cache.
#[derive(Clone, Debug)]
pub struct Consumer {
    pub tag: String,
    pub schedule: ConsumerSchedule,
    session: u32,
    seq: u64,
}

impl Consumer {
    pub fn new(tag: impl Into<String>, schedule: ConsumerSchedule, rng: &mut impl Rng) -> Self {
        Self {
            tag: tag.into(),
            schedule,
            session: rng.random(),
            seq: 0,
        }
    }

    pub fn emitted(&self) -> u64 {
        self.seq
    }

    /// Emits the interest scheduled for `now`, if any.
    pub fn emit(&mut self, now: SimTime, rng: &mut impl Rng) -> Option<Interest> {
        if !self.schedule.is_instant(now) {
            return None;
        }
        let name = self
            .schedule
            .target_prefix
            .child(format!("{}-{:08x}", self.tag, self.session))
            .and_then(|n| n.child(self.seq.to_string()))
            .expect("consumer tag has no separator");
        self.seq += 1;
        Some(Interest {
            name,
            nonce: rng.random(),
            create_time: now,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackStrategy {
    /// Distinct names from the producer's static catalog.
    ExistingStatic,
    /// Names the producer generates content for on demand.
    Dynamic,
    /// Random names that no producer can satisfy.
    NonExistent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackerSchedule {
    pub strategy: AttackStrategy,
    pub target_prefix: Name,
    #[serde(
        rename = "spacing_ms",
        with = "crate::serde_ms",
        default = "default_attack_spacing"
    )]
    pub spacing: SimTime,
    #[serde(
        rename = "start_ms",
        with = "crate::serde_ms",
        default = "default_attack_start"
    )]
    pub start: SimTime,
    #[serde(
        rename = "stop_ms",
        with = "crate::serde_ms::option",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub stop: Option<SimTime>,
    /// Size of the static catalog walked by `existing_static`.
    #[serde(default = "default_static_catalog")]
    pub static_catalog_size: u64,
}

fn default_static_catalog() -> u64 {
    10_000
}

impl AttackerSchedule {
    pub fn new(strategy: AttackStrategy, target_prefix: Name) -> Self {
        Self {
            strategy,
            target_prefix,
            spacing: default_attack_spacing(),
            start: default_attack_start(),
            stop: None,
            static_catalog_size: default_static_catalog(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.spacing == SimTime::ZERO {
            return Err("attacker spacing must be > 0".into());
        }
        if self.strategy == AttackStrategy::ExistingStatic && self.static_catalog_size == 0 {
            return Err("static catalog must not be empty".into());
        }
        Ok(())
    }

    pub fn is_instant(&self, t: SimTime) -> bool {
        t >= self.start
            && self.stop.is_none_or(|s| t <= s)
            && (t - self.start)
                .as_micros()
                .is_multiple_of(self.spacing.as_micros())
    }

    pub fn next_instant_at_or_after(&self, t: SimTime) -> Option<SimTime> {
        let step = self.spacing.as_micros();
        let k = if t <= self.start {
            0
        } else {
            (t - self.start).as_micros().div_ceil(step)
        };
        let at = self.start + SimTime::from_micros(k * step);
        self.stop.is_none_or(|s| at <= s).then_some(at)
    }
}

#[derive(Clone, Debug)]
pub struct Attacker {
    pub schedule: AttackerSchedule,
    issued: HashSet<u64>,
    static_cursor: u64,
    emitted: u64,
}

impl Attacker {
    pub fn new(schedule: AttackerSchedule, rng: &mut impl Rng) -> Self {
        let static_cursor = rng.random_range(0..schedule.static_catalog_size.max(1));
        Self {
            schedule,
            issued: HashSet::new(),
            static_cursor,
            emitted: 0,
        }
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    fn fresh_token(&mut self, rng: &mut impl Rng) -> u64 {
        loop {
            let v: u64 = rng.random();
            if self.issued.insert(v) {
                return v;
            }
        }
    }

    pub fn emit(&mut self, now: SimTime, rng: &mut impl Rng) -> Option<Interest> {
        if !self.schedule.is_instant(now) {
            return None;
        }
        let prefix = self.schedule.target_prefix.clone();
        let name = match self.schedule.strategy {
            AttackStrategy::NonExistent => {
                let token = self.fresh_token(rng);
                prefix.child(format!("{token:016x}"))
            }
            AttackStrategy::Dynamic => {
                let token = self.fresh_token(rng);
                prefix
                    .child(DYNAMIC_COMPONENT)
                    .and_then(|n| n.child(format!("{token:016x}")))
            }
            AttackStrategy::ExistingStatic => {
                let k = self.static_cursor % self.schedule.static_catalog_size;
                self.static_cursor += 1;
                prefix
                    .child(STATIC_COMPONENT)
                    .and_then(|n| n.child(k.to_string()))
            }
        }
        .expect("generated components are valid");
        self.emitted += 1;
        Some(Interest {
            name,
            nonce: rng.random(),
            create_time: now,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProducerSpec {
    pub namespace: Name,
    #[serde(
        rename = "response_delay_ms",
        with = "crate::serde_ms",
        default = "default_response_delay"
    )]
    pub response_delay: SimTime,
    /// Extra latency for content generated on demand.
    #[serde(
        rename = "dynamic_delay_ms",
        with = "crate::serde_ms",
        default = "default_dynamic_delay"
    )]
    pub dynamic_delay: SimTime,
    #[serde(default = "default_static_catalog")]
    pub static_catalog_size: u64,
    #[serde(default = "default_payload")]
    pub payload_size: u32,
}

fn default_response_delay() -> SimTime {
    SimTime::from_millis(1)
}

fn default_dynamic_delay() -> SimTime {
    SimTime::from_millis(5)
}

fn default_payload() -> u32 {
    DEFAULT_PAYLOAD_SIZE
}

impl ProducerSpec {
    pub fn new(namespace: Name) -> Self {
        Self {
            namespace,
            response_delay: default_response_delay(),
            dynamic_delay: default_dynamic_delay(),
            static_catalog_size: default_static_catalog(),
            payload_size: DEFAULT_PAYLOAD_SIZE,
        }
    }
}

/// A producer's reply: the content and the time it leaves the producer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Response {
    pub at: SimTime,
    pub content: ContentObject,
}

#[derive(Clone, Debug)]
pub struct Producer {
    pub node: NodeId,
    pub spec: ProducerSpec,
    consumer_tags: HashSet<String>,
}

impl Producer {
    /// `consumer_tags` are the honest consumers whose sequence names are in
    /// this producer's catalog.
    pub fn new(
        node: NodeId,
        spec: ProducerSpec,
        consumer_tags: impl IntoIterator<Item = String>,
    ) -> Self {
        Self {
            node,
            spec,
            consumer_tags: consumer_tags.into_iter().collect(),
        }
    }

    /// Extra delay for `name` if it is in the catalog, `None` otherwise.
    fn catalog_delay(&self, name: &Name) -> Option<SimTime> {
        if !self.spec.namespace.is_prefix_of(name) {
            return None;
        }
        let rest: Vec<&[u8]> = name.components().skip(self.spec.namespace.len()).collect();
        match rest.as_slice() {
            [tagged, seq] if *tagged == STATIC_COMPONENT => std::str::from_utf8(seq)
                .ok()
                .and_then(|s| s.parse::<u64>().ok())
                .filter(|k| *k < self.spec.static_catalog_size)
                .map(|_| SimTime::ZERO),
            [tagged, token] if *tagged == DYNAMIC_COMPONENT => (token.len() == 16
                && token.iter().all(u8::is_ascii_hexdigit))
            .then_some(self.spec.dynamic_delay),
            [tagged, seq] => {
                let tagged = std::str::from_utf8(tagged).ok()?;
                let (tag, session) = tagged.rsplit_once('-')?;
                let ok = self.consumer_tags.contains(tag)
                    && session.len() == 8
                    && session.bytes().all(|b| b.is_ascii_hexdigit())
                    && !seq.is_empty()
                    && seq.iter().all(u8::is_ascii_digit);
                ok.then_some(SimTime::ZERO)
            }
            _ => None,
        }
    }

    /// Content for catalog names, nothing otherwise (including names outside
    /// the namespace, which can only arrive through misrouting).
    pub fn on_interest(
        &self,
        interest: &Interest,
        now: SimTime,
        registry: &TrustRegistry,
    ) -> Option<Response> {
        let extra = self.catalog_delay(&interest.name)?;
        let content = ContentObject::signed(
            interest.name.clone(),
            self.spec.payload_size,
            self.node,
            registry,
        )?;
        Some(Response {
            at: now + self.spec.response_delay + extra,
            content,
        })
    }
}
