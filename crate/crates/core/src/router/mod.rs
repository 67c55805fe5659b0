//! Per-node NDN forwarding: FIB, content store and PIT.

mod cs;
mod fib;
mod pit;

use std::collections::VecDeque;

pub use cs::ContentStore;
pub use fib::{Fib, Route};
pub use pit::{
    entry_size, ArrivalOutcome, Pit, PitEntry, DEFAULT_INTEREST_LIFETIME, DEFAULT_PIT_CAPACITY,
    PIT_BYTES_PER_IFACE, PIT_ENTRY_FIXED_BYTES,
};

use crate::ids::IfaceId;
use crate::message::{ContentObject, Interest};
use crate::name::Name;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RouterError {
    #[error("no route for {0}")]
    NoRoute(Name),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ForwardDecision {
    ReplyFromCache(ContentObject),
    Collapsed,
    DroppedDuplicate,
    Forward(IfaceId),
    DroppedPitFull,
}

/// One expired interest, as kept for push-back namespace selection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpiredRecord {
    pub time: SimTime,
    pub namespace: Option<Name>,
    pub in_ifaces: Vec<IfaceId>,
    pub out_iface: Option<IfaceId>,
}

#[derive(Clone, Debug)]
pub struct Forwarder {
    pub fib: Fib,
    pub pit: Pit,
    pub cs: ContentStore,
    expired: VecDeque<ExpiredRecord>,
    stats_window: SimTime,
}

impl Forwarder {
    pub fn new(fib: Fib, pit: Pit, cs: ContentStore) -> Self {
        let stats_window = pit.lifetime();
        Self {
            fib,
            pit,
            cs,
            expired: VecDeque::new(),
            stats_window,
        }
    }

    /// Handles an interest that passed admission control.
    pub fn on_interest(
        &mut self,
        iface: IfaceId,
        interest: &Interest,
        now: SimTime,
    ) -> Result<ForwardDecision, RouterError> {
        self.pit_expire(now);
        if let Some(cached) = self.cs.get(&interest.name) {
            return Ok(ForwardDecision::ReplyFromCache(cached));
        }
        if self.pit.get(&interest.name).is_some() {
            return Ok(match self.pit.add_arrival(&interest.name, iface, now) {
                ArrivalOutcome::Duplicate => ForwardDecision::DroppedDuplicate,
                ArrivalOutcome::Collapsed => ForwardDecision::Collapsed,
                ArrivalOutcome::Full => ForwardDecision::DroppedPitFull,
            });
        }
        let route = self.fib.lookup(&interest.name)?;
        let (out, prefix) = (route.out, route.prefix.cloned());
        if self
            .pit
            .insert(interest.name.clone(), iface, now, Some(out), prefix)
        {
            Ok(ForwardDecision::Forward(out))
        } else {
            Ok(ForwardDecision::DroppedPitFull)
        }
    }

    /// Satisfies the matching PIT entry, returning one copy per arrival
    /// interface. Unsolicited content yields nothing.
    pub fn on_content(
        &mut self,
        _iface: IfaceId,
        content: &ContentObject,
        now: SimTime,
    ) -> Vec<(IfaceId, ContentObject)> {
        self.pit_expire(now);
        let Some(entry) = self.pit.remove(&content.name) else {
            return Vec::new();
        };
        self.cs.insert(content.clone());
        entry.ifaces().map(|i| (i, content.clone())).collect()
    }

    /// Removes expired entries and records them for namespace statistics.
    pub fn pit_expire(&mut self, now: SimTime) -> usize {
        let expired = self.pit.expire(now);
        let count = expired.len();
        for e in expired {
            self.expired.push_back(ExpiredRecord {
                time: e.expiry_time,
                namespace: e.route_prefix.clone(),
                in_ifaces: e.ifaces().collect(),
                out_iface: e.out_iface,
            });
        }
        let horizon = now.saturating_sub(self.stats_window);
        while self.expired.front().is_some_and(|r| r.time < horizon) {
            self.expired.pop_front();
        }
        count
    }

    pub fn fib_lookup(&self, name: &Name) -> Result<IfaceId, RouterError> {
        self.fib.lookup(name).map(|r| r.out)
    }

    /// Expired interests within the statistics window (one interest
    /// lifetime), oldest first.
    pub fn expired_records(&self) -> impl Iterator<Item = &ExpiredRecord> {
        self.expired.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::NodeId;
    use crate::trust::TrustRegistry;

    fn n(s: &str) -> Name {
        Name::parse(s).unwrap()
    }

    fn ms(v: u64) -> SimTime {
        SimTime::from_millis(v)
    }

    fn interest(name: &str, t: u64) -> Interest {
        Interest {
            name: n(name),
            nonce: t,
            create_time: ms(t),
        }
    }

    fn forwarder(cs_bytes: u64) -> Forwarder {
        let mut fib = Fib::new();
        fib.insert(n("/nsf"), IfaceId(9));
        Forwarder::new(
            fib,
            Pit::new(DEFAULT_PIT_CAPACITY, DEFAULT_INTEREST_LIFETIME),
            ContentStore::new(cs_bytes),
        )
    }

    fn content(name: &str) -> ContentObject {
        let mut reg = TrustRegistry::new();
        reg.register_derived(NodeId(1), 1);
        ContentObject::signed(n(name), 1024, NodeId(1), &reg).unwrap()
    }

    #[test]
    fn three_outcomes() {
        let mut f = forwarder(0);
        assert_eq!(
            f.on_interest(IfaceId(2), &interest("/nsf/x", 0), ms(0)),
            Ok(ForwardDecision::Forward(IfaceId(9)))
        );
        assert_eq!(
            f.on_interest(IfaceId(2), &interest("/nsf/x", 1), ms(1)),
            Ok(ForwardDecision::DroppedDuplicate)
        );
        assert_eq!(
            f.on_interest(IfaceId(5), &interest("/nsf/x", 2), ms(2)),
            Ok(ForwardDecision::Collapsed)
        );
        assert_eq!(f.pit.len(), 1);
    }

    #[test]
    fn saturated_pit_drops_new_entries() {
        let mut f = forwarder(0);
        let mut i = 0;
        while f.pit.used_bytes() + entry_size(&n(&format!("/nsf/{i:08}")), 1)
            <= f.pit.capacity_bytes()
        {
            assert!(matches!(
                f.on_interest(IfaceId(1), &interest(&format!("/nsf/{i:08}"), 0), ms(0)),
                Ok(ForwardDecision::Forward(_))
            ));
            i += 1;
        }
        assert_eq!(
            f.on_interest(
                IfaceId(1),
                &interest("/nsf/one-more-interest-that-cannot-fit", 0),
                ms(0)
            ),
            Ok(ForwardDecision::DroppedPitFull)
        );
        assert!(f.pit.capacity_bytes() - f.pit.used_bytes() < entry_size(&n("/nsf/00000000"), 1));
    }

    #[test]
    fn no_route_leaves_no_state() {
        let mut f = forwarder(0);
        assert_eq!(
            f.on_interest(IfaceId(1), &interest("/cnn/x", 0), ms(0)),
            Err(RouterError::NoRoute(n("/cnn/x")))
        );
        assert!(f.pit.is_empty());
    }

    #[test]
    fn content_follows_reverse_path() {
        let mut f = forwarder(0);
        f.on_interest(IfaceId(2), &interest("/nsf/x", 0), ms(0))
            .unwrap();
        f.on_interest(IfaceId(5), &interest("/nsf/x", 0), ms(1))
            .unwrap();
        let out = f.on_content(IfaceId(9), &content("/nsf/x"), ms(3));
        let ifaces: Vec<_> = out.iter().map(|(i, _)| *i).collect();
        assert_eq!(ifaces, vec![IfaceId(2), IfaceId(5)]);
        assert!(f.pit.is_empty());
        assert_eq!(f.pit.used_bytes(), 0);
        assert!(f
            .on_content(IfaceId(9), &content("/nsf/x"), ms(4))
            .is_empty());
    }

    #[test]
    fn cache_hit_after_satisfaction() {
        let mut f = forwarder(1 << 20);
        f.on_interest(IfaceId(2), &interest("/nsf/x", 0), ms(0))
            .unwrap();
        f.on_content(IfaceId(9), &content("/nsf/x"), ms(3));
        let d = f
            .on_interest(IfaceId(7), &interest("/nsf/x", 1), ms(10))
            .unwrap();
        assert!(matches!(d, ForwardDecision::ReplyFromCache(c) if c.name == n("/nsf/x")));
        assert!(f.pit.is_empty());
    }

    #[test]
    fn expiry_is_recorded() {
        let mut f = forwarder(0);
        assert_eq!(f.pit_expire(ms(0)), 0);
        f.on_interest(IfaceId(3), &interest("/nsf/x", 0), ms(1000))
            .unwrap();
        assert_eq!(f.pit_expire(ms(4999)), 0);
        assert_eq!(f.pit_expire(ms(5000)), 1);
        let rec: Vec<_> = f.expired_records().collect();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec[0].namespace, Some(n("/nsf")));
        assert_eq!(rec[0].in_ifaces, vec![IfaceId(3)]);
        assert_eq!(rec[0].out_iface, Some(IfaceId(9)));
        // statistics only cover one lifetime
        f.pit_expire(ms(9001));
        assert_eq!(f.expired_records().count(), 0);
    }

    #[test]
    fn lazy_expiry_frees_space_before_lookup() {
        let mut f = forwarder(0);
        f.on_interest(IfaceId(3), &interest("/nsf/x", 0), ms(0))
            .unwrap();
        // same name from same iface after expiry is a fresh entry, not a duplicate
        assert_eq!(
            f.on_interest(IfaceId(3), &interest("/nsf/x", 1), ms(4000)),
            Ok(ForwardDecision::Forward(IfaceId(9)))
        );
    }
}
