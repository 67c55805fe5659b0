use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::time::SimTime;

pub const DEFAULT_BANDWIDTH_BPS: u64 = 10_000_000;
pub const DEFAULT_DELAY: SimTime = SimTime::from_millis(1);
pub const DEFAULT_QUEUE_PACKETS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkParams {
    pub bandwidth_bps: u64,
    pub delay: SimTime,
    pub queue_packets: usize,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            bandwidth_bps: DEFAULT_BANDWIDTH_BPS,
            delay: DEFAULT_DELAY,
            queue_packets: DEFAULT_QUEUE_PACKETS,
        }
    }
}

/// One direction of a point-to-point link: a FIFO transmit queue drained at
/// the link bandwidth, followed by a fixed propagation delay.
#[derive(Clone, Debug)]
pub struct LinkDirection {
    params: LinkParams,
    /// Transmission end times (ns) of packets queued or on the wire.
    finish_ns: VecDeque<u64>,
    pub sent: u64,
    pub dropped: u64,
}

impl LinkDirection {
    pub fn new(params: LinkParams) -> Self {
        Self {
            params,
            finish_ns: VecDeque::new(),
            sent: 0,
            dropped: 0,
        }
    }

    pub fn params(&self) -> &LinkParams {
        &self.params
    }

    pub fn serialization_ns(&self, bytes: usize) -> u64 {
        (bytes as u64 * 8 * 1_000_000_000).div_ceil(self.params.bandwidth_bps)
    }

    /// Packets queued or being serialized at `now`.
    pub fn backlog(&mut self, now: SimTime) -> usize {
        let now_ns = now.as_micros() * 1000;
        while self.finish_ns.front().is_some_and(|f| *f <= now_ns) {
            self.finish_ns.pop_front();
        }
        self.finish_ns.len()
    }

    /// Enqueues a packet of `bytes`; returns its arrival time at the far end,
    /// or `None` if the queue is full (tail drop).
    pub fn transmit(&mut self, bytes: usize, now: SimTime) -> Option<SimTime> {
        if self.backlog(now) >= self.params.queue_packets {
            self.dropped += 1;
            return None;
        }
        let now_ns = now.as_micros() * 1000;
        let start = self.finish_ns.back().copied().unwrap_or(0).max(now_ns);
        let finish = start + self.serialization_ns(bytes);
        self.finish_ns.push_back(finish);
        self.sent += 1;
        let arrival_ns = finish + self.params.delay.as_micros() * 1000;
        Some(SimTime::from_micros((arrival_ns + 500) / 1000))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_plus_delay() {
        let mut l = LinkDirection::new(LinkParams::default());
        // 1024 bytes = 8192 bits: 0.8192 ms on the wire + 1 ms delay
        assert_eq!(
            l.transmit(1024, SimTime::from_millis(5)),
            Some(SimTime::from_micros(6_819))
        );
    }

    #[test]
    fn zero_delay() {
        let mut l = LinkDirection::new(LinkParams {
            delay: SimTime::ZERO,
            ..LinkParams::default()
        });
        assert_eq!(
            l.transmit(1250, SimTime::ZERO),
            Some(SimTime::from_millis(1))
        );
    }

    #[test]
    fn fifo_and_tail_drop() {
        let mut l = LinkDirection::new(LinkParams {
            queue_packets: 2,
            ..LinkParams::default()
        });
        let t = SimTime::ZERO;
        let a = l.transmit(1250, t).unwrap();
        let b = l.transmit(1250, t).unwrap();
        assert_eq!(b - a, SimTime::from_millis(1));
        assert_eq!(l.transmit(1250, t), None);
        assert_eq!(l.dropped, 1);
        // first packet has left the queue after 1 ms
        assert!(l.transmit(1250, SimTime::from_millis(1)).is_some());
    }
}
