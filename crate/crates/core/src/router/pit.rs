use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use crate::ids::IfaceId;
use crate::name::Name;
use crate::time::SimTime;

/// Fixed per-entry overhead (timers, nonce bookkeeping) in bytes.
pub const PIT_ENTRY_FIXED_BYTES: u64 = 16;
/// Cost of each recorded arrival interface in bytes.
pub const PIT_BYTES_PER_IFACE: u64 = 4;

pub const DEFAULT_PIT_CAPACITY: u64 = 120 * 1024;
pub const DEFAULT_INTEREST_LIFETIME: SimTime = SimTime::from_millis(4000);

pub fn entry_size(name: &Name, ifaces: usize) -> u64 {
    name.serialized_len() as u64 + PIT_ENTRY_FIXED_BYTES + PIT_BYTES_PER_IFACE * ifaces as u64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PitEntry {
    pub name: Name,
    /// Arrival interfaces with their first arrival time, sorted by interface.
    pub arrivals: Vec<(IfaceId, SimTime)>,
    pub insert_time: SimTime,
    pub expiry_time: SimTime,
    pub size_bytes: u64,
    /// Interface the interest was forwarded on.
    pub out_iface: Option<IfaceId>,
    /// FIB prefix that routed the interest (`None` for the root route).
    pub route_prefix: Option<Name>,
    id: u64,
}

impl PitEntry {
    pub fn has_arrival(&self, iface: IfaceId) -> bool {
        self.arrivals
            .binary_search_by_key(&iface, |(i, _)| *i)
            .is_ok()
    }

    pub fn ifaces(&self) -> impl Iterator<Item = IfaceId> + '_ {
        self.arrivals.iter().map(|(i, _)| *i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArrivalOutcome {
    Duplicate,
    Collapsed,
    Full,
}

/// Pending interest table bounded by a byte budget.
///
/// Every arrival interface of an entry is charged the full entry size in
/// `per_iface_bytes`, so the per-interface totals can exceed `used_bytes`
/// when entries have collapsed arrivals.
#[derive(Clone, Debug)]
pub struct Pit {
    capacity_bytes: u64,
    lifetime: SimTime,
    entries: HashMap<Name, PitEntry>,
    used_bytes: u64,
    per_iface_bytes: BTreeMap<IfaceId, u64>,
    expiry: BinaryHeap<Reverse<(SimTime, u64, Name)>>,
    next_id: u64,
}

impl Pit {
    pub fn new(capacity_bytes: u64, lifetime: SimTime) -> Self {
        Self {
            capacity_bytes,
            lifetime,
            entries: HashMap::new(),
            used_bytes: 0,
            per_iface_bytes: BTreeMap::new(),
            expiry: BinaryHeap::new(),
            next_id: 0,
        }
    }

    pub fn capacity_bytes(&self) -> u64 {
        self.capacity_bytes
    }

    pub fn lifetime(&self) -> SimTime {
        self.lifetime
    }

    pub fn used_bytes(&self) -> u64 {
        self.used_bytes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &Name) -> Option<&PitEntry> {
        self.entries.get(name)
    }

    /// Bytes charged to `iface` (0 if it has no entries).
    pub fn iface_bytes(&self, iface: IfaceId) -> u64 {
        self.per_iface_bytes.get(&iface).copied().unwrap_or(0)
    }

    pub fn per_iface_bytes(&self) -> &BTreeMap<IfaceId, u64> {
        &self.per_iface_bytes
    }

    pub fn entries(&self) -> impl Iterator<Item = &PitEntry> {
        self.entries.values()
    }

    /// Entries sorted by name, for deterministic inspection.
    pub fn sorted_entries(&self) -> Vec<&PitEntry> {
        let mut v: Vec<_> = self.entries.values().collect();
        v.sort_by(|a, b| a.name.cmp(&b.name));
        v
    }

    /// Records another arrival for an existing entry. Panics if `name` has no
    /// entry; callers check with [`Pit::get`] first.
    pub fn add_arrival(&mut self, name: &Name, iface: IfaceId, now: SimTime) -> ArrivalOutcome {
        let entry = self
            .entries
            .get_mut(name)
            .expect("add_arrival on missing entry");
        let pos = match entry.arrivals.binary_search_by_key(&iface, |(i, _)| *i) {
            Ok(_) => return ArrivalOutcome::Duplicate,
            Err(pos) => pos,
        };
        if self.used_bytes + PIT_BYTES_PER_IFACE > self.capacity_bytes {
            return ArrivalOutcome::Full;
        }
        for (existing, _) in &entry.arrivals {
            *self.per_iface_bytes.entry(*existing).or_default() += PIT_BYTES_PER_IFACE;
        }
        entry.arrivals.insert(pos, (iface, now));
        entry.size_bytes += PIT_BYTES_PER_IFACE;
        *self.per_iface_bytes.entry(iface).or_default() += entry.size_bytes;
        self.used_bytes += PIT_BYTES_PER_IFACE;
        ArrivalOutcome::Collapsed
    }

    /// Creates a new entry. Returns `false` (and changes nothing) if it does
    /// not fit. Panics if an entry for `name` already exists.
    pub fn insert(
        &mut self,
        name: Name,
        iface: IfaceId,
        now: SimTime,
        out_iface: Option<IfaceId>,
        route_prefix: Option<Name>,
    ) -> bool {
        assert!(
            !self.entries.contains_key(&name),
            "insert on existing entry {name}"
        );
        let size = entry_size(&name, 1);
        if self.used_bytes + size > self.capacity_bytes {
            return false;
        }
        let id = self.next_id;
        self.next_id += 1;
        let expiry_time = now + self.lifetime;
        self.expiry.push(Reverse((expiry_time, id, name.clone())));
        self.used_bytes += size;
        *self.per_iface_bytes.entry(iface).or_default() += size;
        self.entries.insert(
            name.clone(),
            PitEntry {
                name,
                arrivals: vec![(iface, now)],
                insert_time: now,
                expiry_time,
                size_bytes: size,
                out_iface,
                route_prefix,
                id,
            },
        );
        true
    }

    pub fn remove(&mut self, name: &Name) -> Option<PitEntry> {
        let entry = self.entries.remove(name)?;
        self.release(&entry);
        Some(entry)
    }

    /// Removes every entry with `expiry_time <= now`, oldest first.
    pub fn expire(&mut self, now: SimTime) -> Vec<PitEntry> {
        let mut out = Vec::new();
        while let Some(Reverse((t, id, _))) = self.expiry.peek() {
            if *t > now {
                break;
            }
            let (id, name) = (*id, self.expiry.pop().unwrap().0 .2);
            // Entries satisfied earlier (or re-created under the same name)
            // leave stale heap items behind.
            if self.entries.get(&name).is_some_and(|e| e.id == id) {
                let entry = self.entries.remove(&name).unwrap();
                self.release(&entry);
                out.push(entry);
            }
        }
        out
    }

    fn release(&mut self, entry: &PitEntry) {
        self.used_bytes -= entry.size_bytes;
        for iface in entry.ifaces() {
            let slot = self.per_iface_bytes.get_mut(&iface).expect("charged iface");
            *slot -= entry.size_bytes;
            if *slot == 0 {
                self.per_iface_bytes.remove(&iface);
            }
        }
    }

    /// Recomputes the byte accounting from the entries and compares it with
    /// the incremental counters.
    pub fn check_accounting(&self) -> Result<(), String> {
        let used: u64 = self.entries.values().map(|e| e.size_bytes).sum();
        if used != self.used_bytes {
            return Err(format!(
                "used_bytes {} != sum of entries {used}",
                self.used_bytes
            ));
        }
        if used > self.capacity_bytes {
            return Err(format!(
                "used_bytes {used} exceeds capacity {}",
                self.capacity_bytes
            ));
        }
        let mut per: BTreeMap<IfaceId, u64> = BTreeMap::new();
        for e in self.entries.values() {
            if e.arrivals.is_empty() {
                return Err(format!("entry {} has no arrival interface", e.name));
            }
            if e.size_bytes != entry_size(&e.name, e.arrivals.len()) {
                return Err(format!("entry {} has size {}", e.name, e.size_bytes));
            }
            for i in e.ifaces() {
                *per.entry(i).or_default() += e.size_bytes;
            }
        }
        if per != self.per_iface_bytes {
            return Err(format!(
                "per-iface bytes {:?} != recomputed {per:?}",
                self.per_iface_bytes
            ));
        }
        Ok(())
    }
}
