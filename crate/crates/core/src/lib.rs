//! Deterministic, privacy-preserving cross verification of cooperative
//! perception data.
//!
//! Observers that both saw a vehicle's number plate and heard its V2X
//! pseudonym derive the same secp256k1 key from that pair and sign their own
//! pseudonym with it. Receivers recover the public key from each proof and
//! accept a perceived vehicle once two distinct provers recover to the same
//! key.
//!
//! - [`crypto`]: key derivation, signing, recovery, corroboration.
//! - [`wire`]: the CPM codec and the 71-byte proof entry.
//! - [`station`]: prover inclusion management and the verifier gate.
//! - [`sim`]: the tick-based world, attackers, and metrics.
//!
//! ```
//! use trafficproof::{proofs_corroborate, sign_proof, CryptoError, KdfConfig, SharedSecret};
//!
//! fn main() -> Result<(), CryptoError> {
//!     // Two provers that both saw and heard the same target.
//!     let target = SharedSecret::new(0x1234_5678, "B-AB 123")?;
//!     let a = sign_proof(&target, &1u32.to_be_bytes(), KdfConfig::PLAIN)?;
//!     let b = sign_proof(&target, &2u32.to_be_bytes(), KdfConfig::PLAIN)?;
//!     assert!(proofs_corroborate(&a, &b));
//!     Ok(())
//! }
//! ```

pub mod crypto;
pub mod sim;
pub mod station;
pub mod vectors;
pub mod wire;

pub use crypto::{
    derive_keypair, derive_scalar, proofs_corroborate, recover_public_key, sign_proof, CryptoError, KdfConfig, KdfMode,
    ProofScalar, PublicPoint, RecoveryCache, SharedSecret, TrafficProof,
};
pub use station::{Station, StationConfig, StationMode, VerificationEvent};
pub use wire::{
    cpm_size_bytes, decode_cpm, decode_proof_entry, encode_cpm, encode_proof_entry, CpmMessage, PerceivedObject,
    ProofEntry, WireError,
};
