//! Simulated content signatures.
//!
//! Each registered node holds a secret; a signature token is a keyed SHA-256
//! digest over the signer id, the name, the payload size and any carried
//! payload bytes. Forging a token without the secret is treated as impossible.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::ids::NodeId;
use crate::message::ContentObject;
use crate::name::Name;

pub type Secret = [u8; 32];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct SigToken(pub [u8; 16]);

#[derive(Clone, Debug, Default)]
pub struct TrustRegistry {
    secrets: BTreeMap<NodeId, Secret>,
}

impl TrustRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, node: NodeId, secret: Secret) {
        self.secrets.insert(node, secret);
    }

    /// Registers `node` with a secret derived from the scenario seed.
    pub fn register_derived(&mut self, node: NodeId, seed: u64) {
        let mut h = Sha256::new();
        h.update(b"poseidon-sim/trust");
        h.update(seed.to_be_bytes());
        h.update(node.0.to_be_bytes());
        self.register(node, h.finalize().into());
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.secrets.contains_key(&node)
    }

    pub fn len(&self) -> usize {
        self.secrets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.secrets.is_empty()
    }

    /// Signs on behalf of a registered node; `None` if the node is unknown.
    pub fn sign(
        &self,
        signer: NodeId,
        name: &Name,
        payload_size: u32,
        payload: &[u8],
    ) -> Option<SigToken> {
        self.secrets
            .get(&signer)
            .map(|secret| sign_with_secret(secret, signer, name, payload_size, payload))
    }
}

pub fn sign_with_secret(
    secret: &Secret,
    signer: NodeId,
    name: &Name,
    payload_size: u32,
    payload: &[u8],
) -> SigToken {
    let mut h = Sha256::new();
    h.update(secret);
    h.update(signer.0.to_be_bytes());
    h.update((name.serialized_len() as u32).to_be_bytes());
    h.update(name.as_bytes());
    h.update(payload_size.to_be_bytes());
    h.update(payload);
    let digest = h.finalize();
    let mut token = [0u8; 16];
    token.copy_from_slice(&digest[..16]);
    SigToken(token)
}

/// True iff the token was minted by the claimed signer and the signer is
/// registered.
pub fn verify_signature(obj: &ContentObject, registry: &TrustRegistry) -> bool {
    match registry.sign(obj.signer, &obj.name, obj.payload_size, &obj.payload) {
        Some(expected) => expected == obj.sig_token,
        None => false,
    }
}
