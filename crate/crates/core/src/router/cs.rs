use std::collections::{BTreeMap, HashMap};

use crate::message::ContentObject;
use crate::name::Name;

/// Byte-bounded content store with strict LRU eviction. A capacity of zero
/// disables caching.
#[derive(Clone, Debug, Default)]
pub struct ContentStore {
    capacity_bytes: u64,
    used_bytes: u64,
    entries: HashMap<Name, (ContentObject, u64)>,
    recency: BTreeMap<u64, Name>,
    tick: u64,
}

impl ContentStore {
    pub fn new(capacity_bytes: u64) -> Self {
        Self {
            capacity_bytes,
            ..Self::default()
        }
    }

    pub fn capacity_bytes(&self) -> u64 {
        self.capacity_bytes
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

    pub fn contains(&self, name: &Name) -> bool {
        self.entries.contains_key(name)
    }

    /// Returns a cached copy and marks it most recently used.
    pub fn get(&mut self, name: &Name) -> Option<ContentObject> {
        let tick = self.next_tick();
        let (obj, last) = self.entries.get_mut(name)?;
        self.recency.remove(last);
        *last = tick;
        self.recency.insert(tick, name.clone());
        Some(obj.clone())
    }

    pub fn insert(&mut self, obj: ContentObject) {
        let size = u64::from(obj.payload_size);
        if size > self.capacity_bytes {
            return;
        }
        if let Some((old, last)) = self.entries.remove(&obj.name) {
            self.recency.remove(&last);
            self.used_bytes -= u64::from(old.payload_size);
        }
        while self.used_bytes + size > self.capacity_bytes {
            let Some((_, victim)) = self.recency.pop_first() else {
                break;
            };
            if let Some((evicted, _)) = self.entries.remove(&victim) {
                self.used_bytes -= u64::from(evicted.payload_size);
            }
        }
        let tick = self.next_tick();
        self.recency.insert(tick, obj.name.clone());
        self.used_bytes += size;
        self.entries.insert(obj.name.clone(), (obj, tick));
    }

    /// Names from least to most recently used.
    pub fn lru_order(&self) -> Vec<Name> {
        self.recency.values().cloned().collect()
    }

    fn next_tick(&mut self) -> u64 {
        self.tick += 1;
        self.tick
    }
}
