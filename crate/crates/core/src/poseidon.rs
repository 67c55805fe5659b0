//! Interest-flooding detection and mitigation.
//!
//! Every router interface tracks two signals: the ratio of interests
//! received to content packets sent back over a detection interval, and the
//! occupancy, the PIT bytes held by interests that arrived on the interface.
//! An interface is considered under attack while both exceed their
//! thresholds. Interests arriving on such an interface are dropped, and with
//! push-back enabled a signed alert is sent back over it, at most once per
//! `wait_time`. A router receiving a valid alert divides both thresholds by the
//! scaling factor on the interfaces that feed the alerting neighbour, so it
//! starts filtering closer to the source. Thresholds creep back towards their
//! base values once an interface has been quiet for `quiet_period`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ids::{IfaceId, NodeId};
use crate::message::{AlertError, AlertMessage};
use crate::name::Name;
use crate::router::{Forwarder, Pit};
use crate::time::SimTime;
use crate::trust::{verify_signature, TrustRegistry};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseidonConfig {
    #[serde(rename = "detection_interval_ms", with = "crate::serde_ms")]
    pub detection_interval: SimTime,
    #[serde(rename = "wait_time_ms", with = "crate::serde_ms")]
    pub wait_time: SimTime,
    /// Divisor applied to both thresholds per accepted alert.
    pub scale: f64,
    /// Relative increase applied to both thresholds per quiet interval.
    pub restore_fraction: f64,
    #[serde(rename = "quiet_period_ms", with = "crate::serde_ms")]
    pub quiet_period: SimTime,
    #[serde(rename = "alert_freshness_ms", with = "crate::serde_ms")]
    pub alert_freshness: SimTime,
    pub ratio_base: f64,
    /// Base occupancy threshold as a fraction of the PIT capacity.
    pub occupancy_base_fraction: f64,
}

impl Default for PoseidonConfig {
    fn default() -> Self {
        Self {
            detection_interval: SimTime::from_millis(60),
            wait_time: SimTime::from_millis(60),
            scale: 2.0,
            restore_fraction: 1.0 / 8.0,
            quiet_period: SimTime::from_millis(1000),
            alert_freshness: SimTime::from_millis(500),
            ratio_base: 3.0,
            occupancy_base_fraction: 1.0 / 8.0,
        }
    }
}

impl PoseidonConfig {
    /// The negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        if !(self.scale > 1.0) {
            return Err(format!("scale must be > 1, got {}", self.scale));
        }
        for (what, d) in [
            ("detection_interval", self.detection_interval),
            ("wait_time", self.wait_time),
            ("quiet_period", self.quiet_period),
            ("alert_freshness", self.alert_freshness),
        ] {
            if d == SimTime::ZERO {
                return Err(format!("{what} must be > 0"));
            }
        }
        if !(self.restore_fraction > 0.0) {
            return Err("restore_fraction must be > 0".into());
        }
        if !(self.ratio_base > 0.0) || !(self.occupancy_base_fraction > 0.0) {
            return Err("threshold bases must be > 0".into());
        }
        Ok(())
    }

    pub fn occupancy_base(&self, pit_capacity: u64) -> f64 {
        pit_capacity as f64 * self.occupancy_base_fraction
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoseidonIfaceState {
    pub interests_in: u64,
    pub contents_out: u64,
    /// Interest ratio of the most recently completed interval.
    pub last_ratio: f64,
    pub last_contents_out: u64,
    pub ratio_base: f64,
    pub ratio_thresh: f64,
    pub occupancy_base: f64,
    pub occupancy_thresh: f64,
    pub last_alert_sent: Option<SimTime>,
    pub last_alert_received: Option<SimTime>,
    pub last_detection: Option<SimTime>,
    /// Last time an accepted alert lowered this interface's thresholds.
    pub last_threshold_cut: Option<SimTime>,
}

impl PoseidonIfaceState {
    pub fn new(ratio_base: f64, occupancy_base: f64) -> Self {
        Self {
            interests_in: 0,
            contents_out: 0,
            last_ratio: 0.0,
            last_contents_out: 0,
            ratio_base,
            ratio_thresh: ratio_base,
            occupancy_base,
            occupancy_thresh: occupancy_base,
            last_alert_sent: None,
            last_alert_received: None,
            last_detection: None,
            last_threshold_cut: None,
        }
    }

    pub fn decrease(&mut self, scale: f64, now: SimTime) {
        self.ratio_thresh /= scale;
        self.occupancy_thresh /= scale;
        self.last_threshold_cut = Some(now);
    }

    /// Closes the current interval: stores its interest ratio and resets the counters.
    pub fn close_interval(&mut self) -> f64 {
        let ratio = compute_ratio(self);
        self.last_ratio = ratio;
        self.last_contents_out = self.contents_out;
        self.interests_in = 0;
        self.contents_out = 0;
        ratio
    }

    fn last_activity(&self) -> Option<SimTime> {
        [
            self.last_detection,
            self.last_alert_received,
            self.last_threshold_cut,
        ]
        .into_iter()
        .flatten()
        .max()
    }
}

/// Interests received per content sent back. An interval with interests but
/// no content is `+∞`; an idle interval is 0.
pub fn compute_ratio(state: &PoseidonIfaceState) -> f64 {
    match (state.interests_in, state.contents_out) {
        (0, _) => 0.0,
        (_, 0) => f64::INFINITY,
        (i, c) => i as f64 / c as f64,
    }
}

pub fn compute_occupancy(pit: &Pit, iface: IfaceId) -> u64 {
    pit.iface_bytes(iface)
}

pub fn detect(ratio: f64, occupancy: u64, state: &PoseidonIfaceState) -> bool {
    ratio > state.ratio_thresh && occupancy as f64 > state.occupancy_thresh
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Admission {
    Admit,
    Drop { alert_sent: bool },
}

/// Per-interest admission check against the last interval's interest ratio and the live occupancy.
/// `alerts_enabled` is false for the local-only countermeasure.
pub fn admit_interest(
    iface: IfaceId,
    now: SimTime,
    state: &mut PoseidonIfaceState,
    pit: &Pit,
    cfg: &PoseidonConfig,
    alerts_enabled: bool,
) -> Admission {
    state.interests_in += 1;
    let occupancy = compute_occupancy(pit, iface);
    if !detect(state.last_ratio, occupancy, state) {
        return Admission::Admit;
    }
    state.last_detection = Some(now);
    let alert_sent = alerts_enabled && now.elapsed_more_than(state.last_alert_sent, cfg.wait_time);
    if alert_sent {
        state.last_alert_sent = Some(now);
    }
    Admission::Drop { alert_sent }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlertRejection {
    BadSignature,
    Stale,
    TooSoon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlertOutcome {
    Applied,
    Rejected(AlertRejection),
}

/// Signature, freshness and rate-limit checks for an alert received on the
/// interface owning `gate`. On success `gate.last_alert_received` is updated.
pub fn accept_alert(
    msg: &AlertMessage,
    now: SimTime,
    gate: &mut PoseidonIfaceState,
    registry: &TrustRegistry,
    cfg: &PoseidonConfig,
) -> Result<(), AlertRejection> {
    if !verify_signature(&msg.carrier, registry) {
        return Err(AlertRejection::BadSignature);
    }
    // Timestamps travel at millisecond granularity.
    let now_ms = SimTime::from_millis(now.as_millis());
    if msg.timestamp > now_ms || now_ms - msg.timestamp > cfg.alert_freshness {
        return Err(AlertRejection::Stale);
    }
    if !now.elapsed_more_than(gate.last_alert_received, cfg.wait_time) {
        return Err(AlertRejection::TooSoon);
    }
    gate.last_alert_received = Some(now);
    Ok(())
}

/// Single-interface alert reaction: gate the alert and, if accepted, divide
/// both thresholds of `state` by the scaling factor.
pub fn on_alert(
    msg: &AlertMessage,
    now: SimTime,
    state: &mut PoseidonIfaceState,
    registry: &TrustRegistry,
    cfg: &PoseidonConfig,
) -> AlertOutcome {
    match accept_alert(msg, now, state, registry, cfg) {
        Ok(()) => {
            state.decrease(cfg.scale, now);
            AlertOutcome::Applied
        }
        Err(r) => AlertOutcome::Rejected(r),
    }
}

/// Raises both thresholds by `restore_fraction` of their current value
/// (capped at the base) once the interface has been quiet for longer than
/// `quiet_period`. Returns true if anything changed.
pub fn restore_tick(now: SimTime, state: &mut PoseidonIfaceState, cfg: &PoseidonConfig) -> bool {
    if !now.elapsed_more_than(state.last_activity(), cfg.quiet_period) {
        return false;
    }
    let factor = 1.0 + cfg.restore_fraction;
    let ratio = (state.ratio_thresh * factor).min(state.ratio_base);
    let occupancy = (state.occupancy_thresh * factor).min(state.occupancy_base);
    let changed = ratio != state.ratio_thresh || occupancy != state.occupancy_thresh;
    state.ratio_thresh = ratio;
    state.occupancy_thresh = occupancy;
    changed
}

pub fn make_alert(
    victim: NodeId,
    victim_label: &str,
    iface: IfaceId,
    now: SimTime,
    offending: Vec<Name>,
    reduced_rate: u64,
    registry: &TrustRegistry,
) -> Result<AlertMessage, AlertError> {
    AlertMessage::new_signed(
        victim_label,
        victim,
        iface.0,
        now,
        reduced_rate,
        offending,
        registry,
    )
}

/// One logged admission or interval-boundary evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionRecord {
    pub time: SimTime,
    pub iface: IfaceId,
    pub ratio: f64,
    pub occupancy: u64,
    pub ratio_thresh: f64,
    pub occupancy_thresh: f64,
    pub kind: DecisionKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecisionKind {
    Admitted,
    Dropped,
    /// Boundary evaluation; `true` when both thresholds were exceeded.
    Interval(bool),
}

/// Outcome of an alert handled at router level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RouterAlertOutcome {
    Applied { targets: Vec<IfaceId> },
    Rejected(AlertRejection),
}

/// Poseidon state of one router.
#[derive(Clone, Debug)]
pub struct Poseidon {
    cfg: PoseidonConfig,
    node: NodeId,
    label: String,
    alerts_enabled: bool,
    ifaces: BTreeMap<IfaceId, PoseidonIfaceState>,
    log: Option<Vec<DecisionRecord>>,
}

impl Poseidon {
    pub fn new(
        node: NodeId,
        label: impl Into<String>,
        cfg: PoseidonConfig,
        pit_capacity: u64,
        ifaces: impl IntoIterator<Item = IfaceId>,
        alerts_enabled: bool,
    ) -> Self {
        let occupancy_base = cfg.occupancy_base(pit_capacity);
        let ifaces = ifaces
            .into_iter()
            .map(|i| (i, PoseidonIfaceState::new(cfg.ratio_base, occupancy_base)))
            .collect();
        Self {
            cfg,
            node,
            label: label.into(),
            alerts_enabled,
            ifaces,
            log: None,
        }
    }

    /// Keeps every admission and boundary evaluation in memory.
    pub fn enable_log(&mut self) {
        self.log = Some(Vec::new());
    }

    pub fn log(&self) -> &[DecisionRecord] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn config(&self) -> &PoseidonConfig {
        &self.cfg
    }

    pub fn alerts_enabled(&self) -> bool {
        self.alerts_enabled
    }

    pub fn state(&self, iface: IfaceId) -> Option<&PoseidonIfaceState> {
        self.ifaces.get(&iface)
    }

    pub fn state_mut(&mut self, iface: IfaceId) -> Option<&mut PoseidonIfaceState> {
        self.ifaces.get_mut(&iface)
    }

    pub fn ifaces(&self) -> impl Iterator<Item = (&IfaceId, &PoseidonIfaceState)> {
        self.ifaces.iter()
    }

    pub fn admit(&mut self, iface: IfaceId, now: SimTime, pit: &Pit) -> Admission {
        let Some(state) = self.ifaces.get_mut(&iface) else {
            return Admission::Admit;
        };
        let decision = admit_interest(iface, now, state, pit, &self.cfg, self.alerts_enabled);
        if let Some(log) = &mut self.log {
            log.push(DecisionRecord {
                time: now,
                iface,
                ratio: state.last_ratio,
                occupancy: compute_occupancy(pit, iface),
                ratio_thresh: state.ratio_thresh,
                occupancy_thresh: state.occupancy_thresh,
                kind: match decision {
                    Admission::Admit => DecisionKind::Admitted,
                    Admission::Drop { .. } => DecisionKind::Dropped,
                },
            });
        }
        decision
    }

    pub fn note_content_out(&mut self, iface: IfaceId) {
        if let Some(s) = self.ifaces.get_mut(&iface) {
            s.contents_out += 1;
        }
    }

    /// Interval boundary: close the interest ratio of every interface, run the boundary
    /// detection, and apply threshold restoration.
    pub fn end_interval(&mut self, now: SimTime, pit: &Pit) {
        for (iface, state) in self.ifaces.iter_mut() {
            let ratio = state.close_interval();
            let occupancy = compute_occupancy(pit, *iface);
            let detected = detect(ratio, occupancy, state);
            if let Some(log) = &mut self.log {
                log.push(DecisionRecord {
                    time: now,
                    iface: *iface,
                    ratio,
                    occupancy,
                    ratio_thresh: state.ratio_thresh,
                    occupancy_thresh: state.occupancy_thresh,
                    kind: DecisionKind::Interval(detected),
                });
            }
            if detected {
                state.last_detection = Some(now);
            }
            restore_tick(now, state, &self.cfg);
        }
    }

    /// Handles an alert received on `iface`. The alert is gated on `iface`;
    /// when accepted, the thresholds of every other interface that currently
    /// (or within the last interest lifetime) fed interests for the offending
    /// namespaces out of `iface` are divided by the scaling factor.
    pub fn receive_alert(
        &mut self,
        msg: &AlertMessage,
        iface: IfaceId,
        now: SimTime,
        registry: &TrustRegistry,
        forwarder: &Forwarder,
    ) -> RouterAlertOutcome {
        let Some(gate) = self.ifaces.get_mut(&iface) else {
            return RouterAlertOutcome::Rejected(AlertRejection::BadSignature);
        };
        if let Err(r) = accept_alert(msg, now, gate, registry, &self.cfg) {
            return RouterAlertOutcome::Rejected(r);
        }
        let offending = &msg.offending_namespaces;
        let matches = |name: Option<&Name>| match name {
            _ if offending.is_empty() => true,
            None => false,
            Some(n) => offending
                .iter()
                .any(|p| p.is_prefix_of(n) || n.is_prefix_of(p)),
        };
        let mut targets = BTreeSet::new();
        for entry in forwarder.pit.entries() {
            if entry.out_iface == Some(iface) && matches(Some(&entry.name)) {
                targets.extend(entry.ifaces());
            }
        }
        for rec in forwarder.expired_records() {
            if rec.out_iface == Some(iface) && matches(rec.namespace.as_ref()) {
                targets.extend(rec.in_ifaces.iter().copied());
            }
        }
        targets.remove(&iface);
        let mut applied = Vec::new();
        for t in targets {
            if let Some(s) = self.ifaces.get_mut(&t) {
                s.decrease(self.cfg.scale, now);
                applied.push(t);
            }
        }
        RouterAlertOutcome::Applied { targets: applied }
    }

    /// Namespaces blamed for an attack on `iface`: the FIB prefix with the
    /// most expired interests from `iface` over the last interest lifetime,
    /// falling back to the prefix most represented among its live PIT entries.
    pub fn offending_namespaces(&self, iface: IfaceId, forwarder: &Forwarder) -> Vec<Name> {
        let mut counts: BTreeMap<Name, u64> = BTreeMap::new();
        for rec in forwarder.expired_records() {
            if let Some(ns) = &rec.namespace {
                if rec.in_ifaces.contains(&iface) {
                    *counts.entry(ns.clone()).or_default() += 1;
                }
            }
        }
        if counts.is_empty() {
            for e in forwarder.pit.entries() {
                if let Some(ns) = &e.route_prefix {
                    if e.has_arrival(iface) {
                        *counts.entry(ns.clone()).or_default() += 1;
                    }
                }
            }
        }
        // Highest count wins; ties go to the smallest name.
        counts
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
            .map(|(n, _)| vec![n])
            .unwrap_or_default()
    }

    /// Builds the signed alert for `iface`. The advertised rate is the
    /// interest rate that would keep the interest ratio at the current threshold given the
    /// content rate of the last interval.
    pub fn build_alert(
        &self,
        iface: IfaceId,
        now: SimTime,
        forwarder: &Forwarder,
        registry: &TrustRegistry,
    ) -> Result<AlertMessage, AlertError> {
        let state = &self.ifaces[&iface];
        let secs = self.cfg.detection_interval.as_micros() as f64 / 1e6;
        let reduced_rate =
            (state.last_contents_out as f64 * state.ratio_thresh / secs).round() as u64;
        make_alert(
            self.node,
            &self.label,
            iface,
            now,
            self.offending_namespaces(iface, forwarder),
            reduced_rate,
            registry,
        )
    }
}
