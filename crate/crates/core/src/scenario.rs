//! Scenario and topology files.
//!
//! A scenario is a JSON document; its `topology` is either inline or a path
//! resolved relative to the scenario file. See `docs/scenario-format.md`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ids::IfaceId;
use crate::name::Name;
use crate::poseidon::PoseidonConfig;
use crate::router::{Fib, DEFAULT_INTEREST_LIFETIME, DEFAULT_PIT_CAPACITY};
use crate::sim::link::{LinkParams, DEFAULT_BANDWIDTH_BPS, DEFAULT_DELAY, DEFAULT_QUEUE_PACKETS};
use crate::time::SimTime;
use crate::traffic::{AttackerSchedule, ConsumerSchedule, ProducerSpec};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: at `{field}`: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Router,
    Consumer,
    Producer,
    Attacker,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub a: String,
    pub a_iface: u32,
    pub b: String,
    pub b_iface: u32,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_bps: u64,
    #[serde(
        rename = "delay_ms",
        with = "crate::serde_ms",
        default = "default_delay"
    )]
    pub delay: SimTime,
    #[serde(default = "default_queue")]
    pub queue_packets: usize,
}

fn default_bandwidth() -> u64 {
    DEFAULT_BANDWIDTH_BPS
}
fn default_delay() -> SimTime {
    DEFAULT_DELAY
}
fn default_queue() -> usize {
    DEFAULT_QUEUE_PACKETS
}

impl LinkSpec {
    pub fn params(&self) -> LinkParams {
        LinkParams {
            bandwidth_bps: self.bandwidth_bps,
            delay: self.delay,
            queue_packets: self.queue_packets,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSpec {
    /// `"/"` is the default route.
    pub prefix: String,
    pub iface: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub fib: BTreeMap<String, Vec<RouteSpec>>,
}

impl Topology {
    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn role(&self, id: &str) -> Option<Role> {
        self.node(id).map(|n| n.role)
    }

    pub fn routers(&self) -> impl Iterator<Item = &str> {
        self.nodes
            .iter()
            .filter(|n| n.role == Role::Router)
            .map(|n| n.id.as_str())
    }

    /// Builds the FIB of `router` from its route list.
    pub fn build_fib(&self, router: &str) -> Result<Fib, ScenarioError> {
        let mut fib = Fib::new();
        for r in self.fib.get(router).map(Vec::as_slice).unwrap_or(&[]) {
            let out = IfaceId(r.iface);
            let previous = if r.prefix == "/" {
                fib.set_default(out)
            } else {
                let prefix = Name::parse(&r.prefix)
                    .map_err(|e| invalid(format!("route {:?} of {router}: {e}", r.prefix)))?;
                fib.insert(prefix, out)
            };
            if previous.is_some() {
                return Err(invalid(format!("{router} has two routes for {}", r.prefix)));
            }
        }
        Ok(fib)
    }

    /// Far end of the link attached to `(node, iface)`.
    pub fn peer(&self, node: &str, iface: u32) -> Option<(&str, u32)> {
        self.links.iter().find_map(|l| {
            if l.a == node && l.a_iface == iface {
                Some((l.b.as_str(), l.b_iface))
            } else if l.b == node && l.b_iface == iface {
                Some((l.a.as_str(), l.a_iface))
            } else {
                None
            }
        })
    }

    /// Interfaces of `node`, sorted.
    pub fn ifaces(&self, node: &str) -> Vec<u32> {
        let mut v: Vec<u32> = self
            .links
            .iter()
            .flat_map(|l| {
                let a = (l.a == node).then_some(l.a_iface);
                let b = (l.b == node).then_some(l.b_iface);
                a.into_iter().chain(b)
            })
            .collect();
        v.sort_unstable();
        v
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if n.id.is_empty() || n.id.contains('/') {
                return Err(invalid(format!(
                    "node id {:?} must be non-empty and contain no '/'",
                    n.id
                )));
            }
            if !ids.insert(n.id.as_str()) {
                return Err(invalid(format!("duplicate node id {}", n.id)));
            }
        }
        let mut used: BTreeSet<(&str, u32)> = BTreeSet::new();
        for (k, l) in self.links.iter().enumerate() {
            for (end, iface) in [(&l.a, l.a_iface), (&l.b, l.b_iface)] {
                if !ids.contains(end.as_str()) {
                    return Err(invalid(format!("link {k} references unknown node {end}")));
                }
                if !used.insert((end.as_str(), iface)) {
                    return Err(invalid(format!(
                        "interface {iface} of {end} is used by more than one link"
                    )));
                }
            }
            if l.a == l.b {
                return Err(invalid(format!("link {k} connects {} to itself", l.a)));
            }
            if l.bandwidth_bps == 0 {
                return Err(invalid(format!("link {k} has zero bandwidth")));
            }
            if l.queue_packets == 0 {
                return Err(invalid(format!("link {k} has a zero-length queue")));
            }
        }
        for n in &self.nodes {
            if n.role != Role::Router && self.ifaces(&n.id).len() != 1 {
                return Err(invalid(format!(
                    "end host {} must have exactly one link",
                    n.id
                )));
            }
        }
        for (router, routes) in &self.fib {
            match self.role(router) {
                Some(Role::Router) => {}
                Some(_) => return Err(invalid(format!("FIB given for non-router {router}"))),
                None => return Err(invalid(format!("FIB given for unknown node {router}"))),
            }
            for r in routes {
                if !used.contains(&(router.as_str(), r.iface)) {
                    return Err(invalid(format!(
                        "route {} of {router} uses missing interface {}",
                        r.prefix, r.iface
                    )));
                }
            }
            self.build_fib(router)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseidonMode {
    /// No detection at all.
    #[default]
    Off,
    /// Detection and dropping, no alerts.
    Local,
    /// Detection, dropping and alerts.
    Pushback,
}

impl std::str::FromStr for PoseidonMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(Self::Off),
            "local" => Ok(Self::Local),
            "pushback" => Ok(Self::Pushback),
            _ => Err(format!(
                "unknown mode {s:?} (expected off, local or pushback)"
            )),
        }
    }
}

impl std::fmt::Display for PoseidonMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Off => "off",
            Self::Local => "local",
            Self::Pushback => "pushback",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseidonSettings {
    #[serde(default)]
    pub mode: PoseidonMode,
    #[serde(default)]
    pub params: PoseidonConfig,
    /// Per-router mode, overriding `mode`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, PoseidonMode>,
}

impl PoseidonSettings {
    pub fn mode_of(&self, router: &str) -> PoseidonMode {
        self.overrides.get(router).copied().unwrap_or(self.mode)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsumerSpec {
    pub node: String,
    #[serde(flatten)]
    pub schedule: ConsumerSchedule,
    /// Re-issue an interest that is still unsatisfied when its lifetime ends.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub retransmit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackerSpec {
    pub node: String,
    #[serde(flatten)]
    pub schedule: AttackerSchedule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProducerEntry {
    pub node: String,
    #[serde(flatten)]
    pub spec: ProducerSpec,
}

fn default_horizon() -> SimTime {
    SimTime::from_millis(30_000)
}
fn default_sample_interval() -> SimTime {
    SimTime::from_millis(100)
}
fn default_pit_capacity() -> u64 {
    DEFAULT_PIT_CAPACITY
}
fn default_lifetime() -> SimTime {
    DEFAULT_INTEREST_LIFETIME
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub topology: Topology,
    #[serde(default)]
    pub seed: u64,
    #[serde(
        rename = "horizon_ms",
        with = "crate::serde_ms",
        default = "default_horizon"
    )]
    pub horizon: SimTime,
    #[serde(
        rename = "sample_interval_ms",
        with = "crate::serde_ms",
        default = "default_sample_interval"
    )]
    pub sample_interval: SimTime,
    #[serde(default = "default_pit_capacity")]
    pub pit_capacity_bytes: u64,
    #[serde(
        rename = "interest_lifetime_ms",
        with = "crate::serde_ms",
        default = "default_lifetime"
    )]
    pub interest_lifetime: SimTime,
    #[serde(default)]
    pub cs_capacity_bytes: u64,
    #[serde(default)]
    pub poseidon: PoseidonSettings,
    #[serde(default)]
    pub consumers: Vec<ConsumerSpec>,
    #[serde(default)]
    pub attackers: Vec<AttackerSpec>,
    #[serde(default)]
    pub producers: Vec<ProducerEntry>,
}

/// On-disk form: identical to [`Scenario`] except that the topology may be a
/// path.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    topology: TopologyRef,
    #[serde(default)]
    seed: u64,
    #[serde(
        rename = "horizon_ms",
        with = "crate::serde_ms",
        default = "default_horizon"
    )]
    horizon: SimTime,
    #[serde(
        rename = "sample_interval_ms",
        with = "crate::serde_ms",
        default = "default_sample_interval"
    )]
    sample_interval: SimTime,
    #[serde(default = "default_pit_capacity")]
    pit_capacity_bytes: u64,
    #[serde(
        rename = "interest_lifetime_ms",
        with = "crate::serde_ms",
        default = "default_lifetime"
    )]
    interest_lifetime: SimTime,
    #[serde(default)]
    cs_capacity_bytes: u64,
    #[serde(default)]
    poseidon: PoseidonSettings,
    #[serde(default)]
    consumers: Vec<ConsumerSpec>,
    #[serde(default)]
    attackers: Vec<AttackerSpec>,
    #[serde(default)]
    producers: Vec<ProducerEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TopologyRef {
    Path(PathBuf),
    Inline(Topology),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(msg.into())
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Parse {
            path: path.to_path_buf(),
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_topology(path: &Path) -> Result<Topology, ScenarioError> {
    let topo: Topology = parse_json(&read(path)?, path)?;
    topo.validate()?;
    Ok(topo)
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = read(path)?;
    let file: ScenarioFile = parse_json(&text, path)?;
    let topology = match file.topology {
        TopologyRef::Inline(t) => t,
        TopologyRef::Path(p) => {
            let p = if p.is_relative() {
                path.parent().unwrap_or(Path::new(".")).join(p)
            } else {
                p
            };
            load_topology(&p)?
        }
    };
    let scenario = Scenario {
        topology,
        seed: file.seed,
        horizon: file.horizon,
        sample_interval: file.sample_interval,
        pit_capacity_bytes: file.pit_capacity_bytes,
        interest_lifetime: file.interest_lifetime,
        cs_capacity_bytes: file.cs_capacity_bytes,
        poseidon: file.poseidon,
        consumers: file.consumers,
        attackers: file.attackers,
        producers: file.producers,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Parses a scenario with an inline topology from a string.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = parse_json(text, Path::new("<inline>"))?;
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn with_mode(mut self, mode: PoseidonMode) -> Self {
        self.poseidon.mode = mode;
        self.poseidon.overrides.clear();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.topology.validate()?;
        if self.sample_interval == SimTime::ZERO {
            return Err(invalid("sample_interval_ms must be > 0"));
        }
        if self.interest_lifetime == SimTime::ZERO {
            return Err(invalid("interest_lifetime_ms must be > 0"));
        }
        self.poseidon.params.validate().map_err(invalid)?;
        for r in self.poseidon.overrides.keys() {
            if self.topology.role(r) != Some(Role::Router) {
                return Err(invalid(format!(
                    "mode override for {r}, which is not a router"
                )));
            }
        }
        let mut hosts = BTreeSet::new();
        let mut check_host = |node: &str, role: Role| {
            if self.topology.role(node) != Some(role) {
                return Err(invalid(
                    format!("{node} is not a {role:?} node of the topology").to_lowercase(),
                ));
            }
            if !hosts.insert(node.to_string()) {
                return Err(invalid(format!("{node} is configured twice")));
            }
            Ok(())
        };
        for c in &self.consumers {
            check_host(&c.node, Role::Consumer)?;
            c.schedule.validate().map_err(invalid)?;
            if c.node.contains('-') {
                return Err(invalid(format!(
                    "consumer id {} must not contain '-'",
                    c.node
                )));
            }
        }
        for a in &self.attackers {
            check_host(&a.node, Role::Attacker)?;
            a.schedule.validate().map_err(invalid)?;
        }
        for p in &self.producers {
            check_host(&p.node, Role::Producer)?;
        }
        for c in &self.consumers {
            let probe = c
                .schedule
                .target_prefix
                .child(format!("{}-00000000", c.node))
                .and_then(|n| n.child("0"));
            self.walk(&c.node, &probe.map_err(|e| invalid(e.to_string()))?)?;
        }
        for a in &self.attackers {
            let probe = a
                .schedule
                .target_prefix
                .child("probe")
                .map_err(|e| invalid(e.to_string()))?;
            self.walk(&a.node, &probe)?;
        }
        Ok(())
    }

    /// Routers an interest for `name` crosses from end host `from`, ending
    /// at the producer that serves it.
    pub fn walk(&self, from: &str, name: &Name) -> Result<(Vec<String>, String), ScenarioError> {
        let topo = &self.topology;
        let producers: HashMap<&str, &ProducerEntry> = self
            .producers
            .iter()
            .map(|p| (p.node.as_str(), p))
            .collect();
        let iface = topo.ifaces(from)[0];
        let (mut node, _) = topo
            .peer(from, iface)
            .ok_or_else(|| invalid(format!("{from} is not connected")))?;
        let mut path = Vec::new();
        loop {
            match topo.role(node) {
                Some(Role::Router) => {}
                Some(Role::Producer) => {
                    let serves = producers
                        .get(node)
                        .is_some_and(|p| p.spec.namespace.is_prefix_of(name));
                    return if serves {
                        Ok((path, node.to_string()))
                    } else {
                        Err(invalid(format!(
                            "{name} from {from} reaches {node}, which does not serve it"
                        )))
                    };
                }
                _ => {
                    return Err(invalid(format!(
                        "{name} from {from} is routed to end host {node}"
                    )))
                }
            }
            if path.iter().any(|p| p == node) || path.len() > topo.nodes.len() {
                return Err(invalid(format!("{name} from {from} loops at {node}")));
            }
            path.push(node.to_string());
            let out = topo
                .build_fib(node)?
                .lookup(name)
                .map_err(|_| invalid(format!("{node} has no route for {name} (from {from})")))?
                .out;
            node = topo
                .peer(node, out.0)
                .ok_or_else(|| {
                    invalid(format!(
                        "{node} routes {name} to unconnected interface {}",
                        out.0
                    ))
                })?
                .0;
        }
    }

    /// Routers on the path from any attacker to its target producer.
    pub fn attack_path_routers(&self) -> BTreeSet<String> {
        self.attackers
            .iter()
            .filter_map(|a| {
                let probe = a.schedule.target_prefix.child("probe").ok()?;
                self.walk(&a.node, &probe).ok()
            })
            .flat_map(|(path, _)| path)
            .collect()
    }

    /// Router adjacent to the producer targeted by the first attacker.
    pub fn victim_router(&self) -> Option<String> {
        let a = self.attackers.first()?;
        let probe = a.schedule.target_prefix.child("probe").ok()?;
        self.walk(&a.node, &probe).ok()?.0.pop()
    }

    /// First router reached by each attacker.
    pub fn attacker_access_routers(&self) -> BTreeSet<String> {
        self.attackers
            .iter()
            .filter_map(|a| {
                let probe = a.schedule.target_prefix.child("probe").ok()?;
                self.walk(&a.node, &probe).ok()?.0.into_iter().next()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> &'static str {
        r#"{
          "topology": {
            "nodes": [
              {"id": "C0", "role": "consumer"},
              {"id": "R0", "role": "router"},
              {"id": "P0", "role": "producer"}
            ],
            "links": [
              {"a": "C0", "a_iface": 0, "b": "R0", "b_iface": 0},
              {"a": "R0", "a_iface": 1, "b": "P0", "b_iface": 0, "delay_ms": 2.5}
            ],
            "fib": {"R0": [{"prefix": "/p0", "iface": 1}]}
          },
          "seed": 7,
          "consumers": [{"node": "C0", "target_prefix": "/p0"}],
          "producers": [{"node": "P0", "namespace": "/p0"}]
        }"#
    }

    #[test]
    fn parses_with_defaults() {
        let s = parse_scenario(small()).unwrap();
        assert_eq!(s.horizon, SimTime::from_millis(30_000));
        assert_eq!(s.pit_capacity_bytes, 120 * 1024);
        assert_eq!(
            s.consumers[0].schedule.steady_spacing,
            SimTime::from_micros(10_700)
        );
        assert_eq!(s.topology.links[1].delay, SimTime::from_micros(2_500));
        assert_eq!(s.poseidon.mode, PoseidonMode::Off);
    }

    #[test]
    fn round_trip() {
        let s = parse_scenario(small()).unwrap();
        let again = parse_scenario(&s.to_json()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn dangling_link_endpoint() {
        let text = small().replace(r#""b": "P0", "b_iface": 0"#, r#""b": "P9", "b_iface": 0"#);
        let err = parse_scenario(&text).unwrap_err();
        assert!(
            matches!(err, ScenarioError::Validation(ref m) if m.contains("P9")),
            "{err}"
        );
    }

    #[test]
    fn unreachable_producer() {
        let text = small().replace(r#""prefix": "/p0""#, r#""prefix": "/p1""#);
        let err = parse_scenario(&text).unwrap_err();
        assert!(
            matches!(err, ScenarioError::Validation(ref m) if m.contains("no route")),
            "{err}"
        );
    }

    #[test]
    fn parse_error_has_location() {
        let text = small().replace(r#""seed": 7"#, r#""seed": "seven""#);
        match parse_scenario(&text).unwrap_err() {
            ScenarioError::Parse { line, field, .. } => {
                assert_eq!(line, 14);
                assert_eq!(field, "seed");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn topology_by_path() {
        let dir = tempfile::tempdir().unwrap();
        let s = parse_scenario(small()).unwrap();
        std::fs::write(
            dir.path().join("topo.json"),
            serde_json::to_string(&s.topology).unwrap(),
        )
        .unwrap();
        let mut v: serde_json::Value = serde_json::from_str(small()).unwrap();
        v["topology"] = "topo.json".into();
        std::fs::write(dir.path().join("scn.json"), v.to_string()).unwrap();
        let loaded = load_scenario(&dir.path().join("scn.json")).unwrap();
        assert_eq!(loaded, s);
        assert!(matches!(
            load_scenario(&dir.path().join("missing.json")),
            Err(ScenarioError::Io { .. })
        ));
    }

    #[test]
    fn mode_overrides() {
        let mut s = parse_scenario(small()).unwrap();
        s.poseidon.mode = PoseidonMode::Local;
        s.poseidon
            .overrides
            .insert("R0".into(), PoseidonMode::Pushback);
        assert_eq!(s.poseidon.mode_of("R0"), PoseidonMode::Pushback);
        assert_eq!(
            s.clone()
                .with_mode(PoseidonMode::Off)
                .poseidon
                .mode_of("R0"),
            PoseidonMode::Off
        );
        s.poseidon.overrides.insert("C0".into(), PoseidonMode::Off);
        assert!(s.validate().is_err());
    }
}
