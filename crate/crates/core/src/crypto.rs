//! Proof of a shared secret over secp256k1.
//!
//! Two observers who both know a target's pseudonym and number plate hash
//! that pair into the same ECDSA private key. Each one signs its own salt
//! (its own pseudonym) with that key. A third party recovers the public key
//! from each signature; equal keys under distinct salts mean both provers
//! hold the same secret, while the secret itself never leaves the provers.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use dashmap::DashMap;
use k256::ecdsa::{RecoveryId, Signature, SigningKey, VerifyingKey};
use sha2::{Digest, Sha256};

/// secp256k1 group order, big-endian.
pub const CURVE_ORDER: [u8; 32] = [
    0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFE, 0xBA, 0xAE, 0xDC,
    0xE6, 0xAF, 0x48, 0xA0, 0x3B, 0xBF, 0xD2, 0x5E, 0x8C, 0xD0, 0x36, 0x41, 0x41,
];

/// Upper bound of the re-hash loop. Reaching it means the hash function is
/// broken, not that the input was unlucky.
const MAX_REHASH_ROUNDS: usize = 1024;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("plate must be non-empty")]
    EmptyPlate,
    #[error("salt must be non-empty")]
    EmptySalt,
    #[error("iterations must be at least 1")]
    ZeroIterations,
    #[error("public key recovery failed")]
    RecoveryFailure,
    #[error("invalid public point encoding")]
    InvalidPoint,
    #[error("scalar out of range (must satisfy 0 < k < n)")]
    ScalarOutOfRange,
}

/// A target's pseudonym and number plate, as linked by an observer that both
/// saw the plate and heard the pseudonym.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SharedSecret {
    station_id: u32,
    plate: Vec<u8>,
}

impl SharedSecret {
    pub fn new(station_id: u32, plate: impl Into<Vec<u8>>) -> Result<Self, CryptoError> {
        let plate = plate.into();
        if plate.is_empty() {
            return Err(CryptoError::EmptyPlate);
        }
        Ok(Self { station_id, plate })
    }

    pub fn station_id(&self) -> u32 {
        self.station_id
    }

    /// `station_id` (4 bytes, big-endian) || 0x00 || plate.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + self.plate.len());
        out.extend_from_slice(&self.station_id.to_be_bytes());
        out.push(0);
        out.extend_from_slice(&self.plate);
        out
    }
}

impl fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SharedSecret(<redacted>)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KdfMode {
    PlainHash,
    IteratedHash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KdfConfig {
    pub mode: KdfMode,
    #[serde(default = "default_iterations")]
    pub iterations: u32,
}

fn default_iterations() -> u32 {
    1
}

impl KdfConfig {
    pub const PLAIN: KdfConfig = KdfConfig { mode: KdfMode::PlainHash, iterations: 1 };

    pub fn iterated(iterations: u32) -> Result<Self, CryptoError> {
        if iterations == 0 {
            return Err(CryptoError::ZeroIterations);
        }
        Ok(Self { mode: KdfMode::IteratedHash, iterations })
    }

    pub fn validate(&self) -> Result<(), CryptoError> {
        if self.iterations == 0 {
            return Err(CryptoError::ZeroIterations);
        }
        Ok(())
    }

    fn hash(&self, input: &[u8]) -> [u8; 32] {
        let mut digest: [u8; 32] = Sha256::digest(input).into();
        if self.mode == KdfMode::IteratedHash {
            for _ in 1..self.iterations {
                digest = Sha256::digest(digest).into();
            }
        }
        digest
    }
}

impl Default for KdfConfig {
    fn default() -> Self {
        Self::PLAIN
    }
}

/// A private scalar in (0, n). Only the holder of the shared secret can
/// compute it; `Debug` never prints it.
#[derive(Clone, PartialEq, Eq)]
pub struct ProofScalar([u8; 32]);

impl ProofScalar {
    pub fn from_be_bytes(bytes: [u8; 32]) -> Result<Self, CryptoError> {
        if in_scalar_range(&bytes) {
            Ok(Self(bytes))
        } else {
            Err(CryptoError::ScalarOutOfRange)
        }
    }

    pub fn to_be_bytes(&self) -> [u8; 32] {
        self.0
    }

    fn signing_key(&self) -> SigningKey {
        SigningKey::from_bytes((&self.0).into()).expect("scalar range checked at construction")
    }
}

impl fmt::Debug for ProofScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ProofScalar(<redacted>)")
    }
}

/// A curve point other than the identity, held in compressed SEC1 form.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PublicPoint([u8; 33]);

impl PublicPoint {
    pub fn from_compressed(bytes: &[u8]) -> Result<Self, CryptoError> {
        let key = VerifyingKey::from_sec1_bytes(bytes).map_err(|_| CryptoError::InvalidPoint)?;
        Ok(Self::from_key(&key))
    }

    pub fn to_compressed(&self) -> [u8; 33] {
        self.0
    }

    fn from_key(key: &VerifyingKey) -> Self {
        let encoded = key.to_encoded_point(true);
        let mut out = [0u8; 33];
        out.copy_from_slice(encoded.as_bytes());
        Self(out)
    }

    /// The generator point G.
    pub fn generator() -> Self {
        let one = ProofScalar::from_be_bytes(scalar_one()).expect("1 is in range");
        point_of(&one)
    }
}

impl Hash for PublicPoint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state);
    }
}

impl fmt::Debug for PublicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicPoint({})", hex::encode(self.0))
    }
}

/// Recoverable signature (v, r, s) over `salt`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrafficProof {
    pub v: bool,
    pub r: [u8; 32],
    pub s: [u8; 32],
    pub salt: Vec<u8>,
}

impl TrafficProof {
    /// v || r || s, 65 bytes.
    pub fn signature_bytes(&self) -> [u8; 65] {
        let mut out = [0u8; 65];
        out[0] = u8::from(self.v);
        out[1..33].copy_from_slice(&self.r);
        out[33..].copy_from_slice(&self.s);
        out
    }
}

fn scalar_one() -> [u8; 32] {
    let mut one = [0u8; 32];
    one[31] = 1;
    one
}

fn in_scalar_range(bytes: &[u8; 32]) -> bool {
    bytes.iter().any(|&b| b != 0) && bytes.as_slice() < CURVE_ORDER.as_slice()
}

fn point_of(sk: &ProofScalar) -> PublicPoint {
    PublicPoint::from_key(sk.signing_key().verifying_key())
}

/// Hash-and-retry loop shared by every entry point. Round `k` hashes `k`
/// concatenated copies of the serialization.
fn rehash_into_range<F>(serialization: &[u8], mut hash: F) -> ProofScalar
where
    F: FnMut(&[u8]) -> [u8; 32],
{
    let mut input = serialization.to_vec();
    for _ in 0..MAX_REHASH_ROUNDS {
        let candidate = hash(&input);
        if in_scalar_range(&candidate) {
            return ProofScalar(candidate);
        }
        input.extend_from_slice(serialization);
    }
    panic!("hash produced no in-range scalar after {MAX_REHASH_ROUNDS} rounds");
}

/// Derives the private scalar from a raw serialization. Exposed for
/// conformance vectors, which carry the serialization rather than the
/// structured secret.
pub fn derive_scalar_from_serialization(serialization: &[u8], kdf: KdfConfig) -> ProofScalar {
    rehash_into_range(serialization, |input| kdf.hash(input))
}

pub fn derive_scalar(secret: &SharedSecret, kdf: KdfConfig) -> ProofScalar {
    derive_scalar_from_serialization(&secret.serialize(), kdf)
}

pub fn derive_keypair(secret: &SharedSecret, kdf: KdfConfig) -> (ProofScalar, PublicPoint) {
    let sk = derive_scalar(secret, kdf);
    let pk = point_of(&sk);
    (sk, pk)
}

/// Public point for an arbitrary in-range scalar.
pub fn public_point(sk: &ProofScalar) -> PublicPoint {
    point_of(sk)
}

fn salt_digest(salt: &[u8]) -> [u8; 32] {
    Sha256::digest(salt).into()
}

/// Signs `SHA-256(salt)` with an already-derived scalar. RFC 6979 nonces and
/// low-s normalization make the output a pure function of its inputs.
pub fn sign_with_scalar(sk: &ProofScalar, salt: &[u8]) -> Result<TrafficProof, CryptoError> {
    if salt.is_empty() {
        return Err(CryptoError::EmptySalt);
    }
    let digest = salt_digest(salt);
    let (sig, recid) = sk
        .signing_key()
        .sign_prehash_recoverable(&digest)
        .expect("signing a 32-byte prehash with a valid key cannot fail");
    // x-reduced recovery ids occur with probability ~2^-127 and have no wire encoding.
    debug_assert!(!recid.is_x_reduced());
    let (r, s) = sig.split_bytes();
    Ok(TrafficProof { v: recid.is_y_odd(), r: r.into(), s: s.into(), salt: salt.to_vec() })
}

pub fn sign_proof(secret: &SharedSecret, salt: &[u8], kdf: KdfConfig) -> Result<TrafficProof, CryptoError> {
    sign_with_scalar(&derive_scalar(secret, kdf), salt)
}

pub fn recover_public_key(proof: &TrafficProof) -> Result<PublicPoint, CryptoError> {
    let sig = Signature::from_scalars(proof.r, proof.s).map_err(|_| CryptoError::RecoveryFailure)?;
    let recid = RecoveryId::new(proof.v, false);
    let digest = salt_digest(&proof.salt);
    let key = VerifyingKey::recover_from_prehash(&digest, &sig, recid).map_err(|_| CryptoError::RecoveryFailure)?;
    Ok(PublicPoint::from_key(&key))
}

/// True iff both proofs recover to the same key under different salts.
pub fn proofs_corroborate(a: &TrafficProof, b: &TrafficProof) -> bool {
    if a.salt == b.salt {
        return false;
    }
    match (recover_public_key(a), recover_public_key(b)) {
        (Ok(ka), Ok(kb)) => ka == kb,
        _ => false,
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct RecoveryKey {
    salt: Vec<u8>,
    sig: [u8; 65],
}

/// Thread-safe memo of [`recover_public_key`]. Recovery is a pure function,
/// so sharing one cache across stations changes cost, not results.
#[derive(Clone, Default)]
pub struct RecoveryCache {
    inner: Arc<DashMap<RecoveryKey, Result<PublicPoint, CryptoError>>>,
}

impl RecoveryCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn recover(&self, proof: &TrafficProof) -> Result<PublicPoint, CryptoError> {
        let key = RecoveryKey { salt: proof.salt.clone(), sig: proof.signature_bytes() };
        if let Some(hit) = self.inner.get(&key) {
            return hit.clone();
        }
        let result = recover_public_key(proof);
        self.inner.insert(key, result.clone());
        result
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn clear(&self) {
        self.inner.clear();
    }
}

impl fmt::Debug for RecoveryCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RecoveryCache").field("entries", &self.inner.len()).finish()
    }
}
