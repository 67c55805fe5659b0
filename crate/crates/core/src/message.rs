//! Wire messages: interests, content objects and push-back alerts.

use std::sync::Arc;

use crate::ids::NodeId;
use crate::name::{Name, NameError};
use crate::time::SimTime;
use crate::trust::{SigToken, TrustRegistry};

/// Reserved namespace for push-back alerts.
pub const ALERT_PREFIX: &str = "/pushback/alerts";

/// Fixed per-packet overheads used for link serialization.
pub const INTEREST_HEADER_BYTES: usize = 24;
pub const CONTENT_HEADER_BYTES: usize = 48;

pub fn alert_prefix() -> Name {
    Name::parse(ALERT_PREFIX).expect("alert prefix is a valid name")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interest {
    pub name: Name,
    pub nonce: u64,
    pub create_time: SimTime,
}

impl Interest {
    pub fn wire_size(&self) -> usize {
        INTEREST_HEADER_BYTES + self.name.serialized_len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContentObject {
    pub name: Name,
    pub payload_size: u32,
    /// Payload bytes actually carried. Empty for ordinary content, whose
    /// payload is represented by `payload_size` alone.
    pub payload: Arc<[u8]>,
    pub signer: NodeId,
    pub sig_token: SigToken,
}

impl ContentObject {
    /// Builds content signed by `signer`; `None` if the signer is not in the
    /// registry.
    pub fn signed(
        name: Name,
        payload_size: u32,
        signer: NodeId,
        registry: &TrustRegistry,
    ) -> Option<Self> {
        let sig_token = registry.sign(signer, &name, payload_size, &[])?;
        Some(Self {
            name,
            payload_size,
            payload: Arc::from(&[][..]),
            signer,
            sig_token,
        })
    }

    pub fn wire_size(&self) -> usize {
        CONTENT_HEADER_BYTES + self.name.serialized_len() + self.payload_size as usize
    }

    pub fn is_alert(&self) -> bool {
        alert_prefix().is_prefix_of(&self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Interest(Interest),
    Content(ContentObject),
}

impl Message {
    pub fn wire_size(&self) -> usize {
        match self {
            Message::Interest(i) => i.wire_size(),
            Message::Content(c) => c.wire_size(),
        }
    }

    pub fn name(&self) -> &Name {
        match self {
            Message::Interest(i) => &i.name,
            Message::Content(c) => &c.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlertError {
    #[error("content is not in the alert namespace")]
    NotAnAlert,
    #[error("alert payload truncated at byte {0}")]
    Truncated(usize),
    #[error("alert payload has {0} trailing bytes")]
    TrailingBytes(usize),
    #[error("alert namespace is not UTF-8")]
    InvalidUtf8,
    #[error(transparent)]
    Name(#[from] NameError),
    #[error("signer is not registered")]
    UnknownSigner,
}

/// Decoded push-back alert. The signed carrier is kept alongside the decoded
/// fields so receivers can verify it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlertMessage {
    pub carrier: ContentObject,
    pub timestamp: SimTime,
    pub reduced_rate: u64,
    pub offending_namespaces: Vec<Name>,
}

impl AlertMessage {
    /// Builds and signs an alert. The carrier name is
    /// `/pushback/alerts/<origin>/<iface>/<timestamp_us>`.
    pub fn new_signed(
        origin: &str,
        signer: NodeId,
        iface: u32,
        timestamp: SimTime,
        reduced_rate: u64,
        offending_namespaces: Vec<Name>,
        registry: &TrustRegistry,
    ) -> Result<Self, AlertError> {
        let name = alert_prefix()
            .child(origin)?
            .child(format!("if{iface}"))?
            .child(timestamp.as_micros().to_string())?;
        let payload = encode_alert_payload(timestamp, reduced_rate, &offending_namespaces);
        let payload_size = payload.len() as u32;
        let sig_token = registry
            .sign(signer, &name, payload_size, &payload)
            .ok_or(AlertError::UnknownSigner)?;
        Ok(Self {
            carrier: ContentObject {
                name,
                payload_size,
                payload: payload.into(),
                signer,
                sig_token,
            },
            timestamp,
            reduced_rate,
            offending_namespaces,
        })
    }

    /// Decodes the alert fields carried by `carrier`.
    pub fn from_carrier(carrier: ContentObject) -> Result<Self, AlertError> {
        if !carrier.is_alert() {
            return Err(AlertError::NotAnAlert);
        }
        let (timestamp, reduced_rate, offending_namespaces) =
            decode_alert_payload(&carrier.payload)?;
        Ok(Self {
            carrier,
            timestamp,
            reduced_rate,
            offending_namespaces,
        })
    }
}

/// Alert payload layout, all integers big-endian:
///
/// ```text
/// u64 timestamp_ms | u64 reduced_rate | u32 count | count x (u16 len | name bytes)
/// ```
pub fn encode_alert_payload(timestamp: SimTime, reduced_rate: u64, namespaces: &[Name]) -> Vec<u8> {
    let mut out = Vec::with_capacity(
        20 + namespaces
            .iter()
            .map(|n| 2 + n.serialized_len())
            .sum::<usize>(),
    );
    out.extend_from_slice(&timestamp.as_millis().to_be_bytes());
    out.extend_from_slice(&reduced_rate.to_be_bytes());
    out.extend_from_slice(&(namespaces.len() as u32).to_be_bytes());
    for ns in namespaces {
        let bytes = ns.as_bytes();
        out.extend_from_slice(&(bytes.len() as u16).to_be_bytes());
        out.extend_from_slice(bytes);
    }
    out
}

pub fn decode_alert_payload(buf: &[u8]) -> Result<(SimTime, u64, Vec<Name>), AlertError> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8], AlertError> {
        let end = pos
            .checked_add(n)
            .filter(|e| *e <= buf.len())
            .ok_or(AlertError::Truncated(pos))?;
        let slice = &buf[pos..end];
        pos = end;
        Ok(slice)
    };
    let ts = u64::from_be_bytes(take(8)?.try_into().unwrap());
    let rate = u64::from_be_bytes(take(8)?.try_into().unwrap());
    let count = u32::from_be_bytes(take(4)?.try_into().unwrap());
    let mut names = Vec::with_capacity(count.min(64) as usize);
    for _ in 0..count {
        let len = u16::from_be_bytes(take(2)?.try_into().unwrap()) as usize;
        let text = std::str::from_utf8(take(len)?).map_err(|_| AlertError::InvalidUtf8)?;
        names.push(Name::parse(text)?);
    }
    if pos != buf.len() {
        return Err(AlertError::TrailingBytes(buf.len() - pos));
    }
    Ok((SimTime::from_millis(ts), rate, names))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trust::{sign_with_secret, verify_signature};
    use proptest::prelude::*;

    fn registry() -> TrustRegistry {
        let mut r = TrustRegistry::new();
        r.register_derived(NodeId(3), 7);
        r
    }

    #[test]
    fn golden_payload_bytes() {
        let payload = encode_alert_payload(
            SimTime::from_millis(1234),
            500,
            &[Name::parse("/nsf").unwrap()],
        );
        let expected: Vec<u8> = [
            &1234u64.to_be_bytes()[..],
            &500u64.to_be_bytes()[..],
            &1u32.to_be_bytes()[..],
            &4u16.to_be_bytes()[..],
            b"/nsf",
        ]
        .concat();
        assert_eq!(payload, expected);
    }

    #[test]
    fn decode_rejects_truncation_and_trailing() {
        let payload =
            encode_alert_payload(SimTime::from_millis(5), 1, &[Name::parse("/a/b").unwrap()]);
        assert!(matches!(
            decode_alert_payload(&payload[..payload.len() - 1]),
            Err(AlertError::Truncated(_))
        ));
        let mut longer = payload.clone();
        longer.push(0);
        assert_eq!(
            decode_alert_payload(&longer),
            Err(AlertError::TrailingBytes(1))
        );
    }

    #[test]
    fn honest_alert_verifies() {
        let reg = registry();
        let alert = AlertMessage::new_signed(
            "R3",
            NodeId(3),
            2,
            SimTime::from_millis(1100),
            250,
            vec![Name::parse("/nsf").unwrap()],
            &reg,
        )
        .unwrap();
        assert!(alert_prefix().is_prefix_of(&alert.carrier.name));
        assert!(alert.carrier.is_alert());
        assert!(verify_signature(&alert.carrier, &reg));
        let decoded = AlertMessage::from_carrier(alert.carrier.clone()).unwrap();
        assert_eq!(decoded, alert);
    }

    #[test]
    fn tampered_payload_size_fails() {
        let reg = registry();
        let mut obj =
            ContentObject::signed(Name::parse("/nsf/x").unwrap(), 1024, NodeId(3), &reg).unwrap();
        assert!(verify_signature(&obj, &reg));
        obj.payload_size = 1025;
        assert!(!verify_signature(&obj, &reg));
    }

    #[test]
    fn tampered_alert_payload_fails() {
        let reg = registry();
        let mut alert =
            AlertMessage::new_signed("R3", NodeId(3), 0, SimTime::from_millis(9), 1, vec![], &reg)
                .unwrap();
        let mut bytes = alert.carrier.payload.to_vec();
        bytes[7] ^= 1;
        alert.carrier.payload = bytes.into();
        assert!(!verify_signature(&alert.carrier, &reg));
    }

    #[test]
    fn unregistered_signer_fails() {
        // An adversary (node 40, not registered) mints a token with its own
        // secret; the registry has no entry for it.
        let reg = registry();
        let name = Name::parse("/pushback/alerts/A0/if0/1").unwrap();
        let forged = ContentObject {
            sig_token: sign_with_secret(&[9u8; 32], NodeId(40), &name, 0, &[]),
            name,
            payload_size: 0,
            payload: Arc::from(&[][..]),
            signer: NodeId(40),
        };
        assert!(!reg.contains(NodeId(40)));
        assert!(!verify_signature(&forged, &reg));
        // Claiming to be a registered router without its secret also fails.
        let impersonated = ContentObject {
            signer: NodeId(3),
            ..forged
        };
        assert!(!verify_signature(&impersonated, &reg));
    }

    proptest! {
        #[test]
        fn payload_round_trip(ts in 0u64..1 << 40, rate in any::<u64>(), n in 0usize..4) {
            let names: Vec<Name> = (0..n).map(|i| Name::parse(&format!("/ns{i}/x")).unwrap()).collect();
            let bytes = encode_alert_payload(SimTime::from_millis(ts), rate, &names);
            let (t, r, decoded) = decode_alert_payload(&bytes).unwrap();
            prop_assert_eq!(t.as_millis(), ts);
            prop_assert_eq!(r, rate);
            prop_assert_eq!(decoded, names);
        }
    }
}
