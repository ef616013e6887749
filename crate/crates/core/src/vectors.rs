//! Conformance vectors for the proof construction.
//!
//! One record per line:
//! `hex(serialization),hex(scalar),hex(compressed PK),hex(salt),hex(v||r||s)`.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::crypto::{
    derive_scalar_from_serialization, public_point, recover_public_key, sign_with_scalar, KdfConfig, SharedSecret,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorRecord {
    pub serialization: Vec<u8>,
    pub scalar: [u8; 32],
    pub public_key: [u8; 33],
    pub salt: Vec<u8>,
    pub signature: [u8; 65],
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum VectorError {
    #[error("record {index}: parse error: {reason}")]
    Parse { index: usize, reason: String },
    #[error("record {index}: {field} mismatch")]
    Mismatch { index: usize, field: &'static str },
}

impl VectorError {
    pub fn index(&self) -> usize {
        match self {
            VectorError::Parse { index, .. } | VectorError::Mismatch { index, .. } => *index,
        }
    }
}

impl VectorRecord {
    /// Computes the expected record for a serialization and salt.
    pub fn compute(serialization: &[u8], salt: &[u8], kdf: KdfConfig) -> Self {
        let sk = derive_scalar_from_serialization(serialization, kdf);
        let proof = sign_with_scalar(&sk, salt).expect("vector salts are non-empty");
        Self {
            serialization: serialization.to_vec(),
            scalar: sk.to_be_bytes(),
            public_key: public_point(&sk).to_compressed(),
            salt: salt.to_vec(),
            signature: proof.signature_bytes(),
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            hex::encode(&self.serialization),
            hex::encode(self.scalar),
            hex::encode(self.public_key),
            hex::encode(&self.salt),
            hex::encode(self.signature)
        )
    }

    pub fn parse_line(line: &str, index: usize) -> Result<Self, VectorError> {
        let err = |reason: String| VectorError::Parse { index, reason };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, got {}", fields.len())));
        }
        let decode = |i: usize| hex::decode(fields[i]).map_err(|e| err(format!("field {i}: {e}")));
        let fixed = |i: usize, bytes: Vec<u8>, len: usize| {
            if bytes.len() == len {
                Ok(bytes)
            } else {
                Err(err(format!("field {i}: expected {len} bytes, got {}", bytes.len())))
            }
        };
        let serialization = decode(0)?;
        let scalar = fixed(1, decode(1)?, 32)?;
        let public_key = fixed(2, decode(2)?, 33)?;
        let salt = decode(3)?;
        let signature = fixed(4, decode(4)?, 65)?;
        if serialization.is_empty() || salt.is_empty() {
            return Err(err("serialization and salt must be non-empty".into()));
        }
        Ok(Self {
            serialization,
            scalar: scalar.try_into().unwrap(),
            public_key: public_key.try_into().unwrap(),
            salt,
            signature: signature.try_into().unwrap(),
        })
    }

    /// Re-derives every field and reports the first mismatch.
    pub fn check(&self, index: usize, kdf: KdfConfig) -> Result<(), VectorError> {
        let expected = Self::compute(&self.serialization, &self.salt, kdf);
        let mismatch = |field| Err(VectorError::Mismatch { index, field });
        if expected.scalar != self.scalar {
            return mismatch("scalar");
        }
        if expected.public_key != self.public_key {
            return mismatch("public key");
        }
        if expected.signature != self.signature {
            return mismatch("signature");
        }
        let proof = crate::crypto::TrafficProof {
            v: self.signature[0] == 1,
            r: self.signature[1..33].try_into().unwrap(),
            s: self.signature[33..].try_into().unwrap(),
            salt: self.salt.clone(),
        };
        match recover_public_key(&proof) {
            Ok(pk) if pk.to_compressed() == self.public_key => Ok(()),
            _ => mismatch("recovered key"),
        }
    }
}

const PLATE_ALPHABET: &[u8] = b"ABCDEFGHJKLMNPRSTUVWXYZ0123456789-";

/// Random secrets and salts drawn from a seeded stream.
pub fn generate(count: usize, seed: u64, kdf: KdfConfig) -> Vec<VectorRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let plate_len = rng.gen_range(4..=10);
            let plate: Vec<u8> =
                (0..plate_len).map(|_| PLATE_ALPHABET[rng.gen_range(0..PLATE_ALPHABET.len())]).collect();
            let secret = SharedSecret::new(rng.gen(), plate).expect("plate is non-empty");
            let salt = rng.gen::<u32>().to_be_bytes();
            VectorRecord::compute(&secret.serialize(), &salt, kdf)
        })
        .collect()
}

pub fn render(records: &[VectorRecord]) -> String {
    let mut out = String::from("# serialization,scalar,compressed_pk,salt,v||r||s\n");
    for r in records {
        writeln!(out, "{}", r.to_line()).unwrap();
    }
    out
}

/// Parses and checks a whole file; returns the record count on success.
pub fn check_text(text: &str, kdf: KdfConfig) -> Result<usize, VectorError> {
    let mut index = 0;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        VectorRecord::parse_line(line, index)?.check(index, kdf)?;
        index += 1;
    }
    Ok(index)
}
