//! Binary layout of the extended collective perception message.
//!
//! Header: sender pseudonym (u32), tick (u64), object count (u16), proof
//! count (u8). Objects: id (u16) then dx, dy, vx, vy as i16 hundredths, with
//! the position taken relative to the sender. Proof entries: 71 bytes each.
//! All integers big-endian.

use crate::crypto::TrafficProof;

pub const PROOF_ENTRY_LEN: usize = 71;
pub const CPM_HEADER_LEN: usize = 15;
pub const OBJECT_LEN: usize = 10;
pub const MAX_PROOFS_PER_CPM: usize = 8;

/// Quantization step for positions (m) and velocities (m/s).
pub const FIXED_POINT_SCALE: f64 = 100.0;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("proof entry must be {PROOF_ENTRY_LEN} bytes, got {0}")]
    Length(usize),
    #[error("invalid recovery flag byte {0:#04x}")]
    Value(u8),
    #[error("malformed message: {0}")]
    MalformedMessage(String),
}

/// One proof about a perceived object. The salt is not carried here; it is
/// the sender pseudonym from the CPM header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProofEntry {
    pub object_id: u16,
    pub pid_prefix: u32,
    pub v: bool,
    pub r: [u8; 32],
    pub s: [u8; 32],
}

impl ProofEntry {
    pub fn from_proof(object_id: u16, pid_prefix: u32, proof: &TrafficProof) -> Self {
        Self { object_id, pid_prefix, v: proof.v, r: proof.r, s: proof.s }
    }

    /// Reattaches the salt taken from the carrying message.
    pub fn to_proof(&self, salt: &[u8]) -> TrafficProof {
        TrafficProof { v: self.v, r: self.r, s: self.s, salt: salt.to_vec() }
    }
}

pub fn encode_proof_entry(e: &ProofEntry) -> [u8; PROOF_ENTRY_LEN] {
    let mut out = [0u8; PROOF_ENTRY_LEN];
    out[0..2].copy_from_slice(&e.object_id.to_be_bytes());
    out[2..6].copy_from_slice(&e.pid_prefix.to_be_bytes());
    out[6] = u8::from(e.v);
    out[7..39].copy_from_slice(&e.r);
    out[39..71].copy_from_slice(&e.s);
    out
}

pub fn decode_proof_entry(bytes: &[u8]) -> Result<ProofEntry, WireError> {
    if bytes.len() != PROOF_ENTRY_LEN {
        return Err(WireError::Length(bytes.len()));
    }
    let v = match bytes[6] {
        0 => false,
        1 => true,
        other => return Err(WireError::Value(other)),
    };
    let mut r = [0u8; 32];
    let mut s = [0u8; 32];
    r.copy_from_slice(&bytes[7..39]);
    s.copy_from_slice(&bytes[39..71]);
    Ok(ProofEntry {
        object_id: u16::from_be_bytes([bytes[0], bytes[1]]),
        pid_prefix: u32::from_be_bytes([bytes[2], bytes[3], bytes[4], bytes[5]]),
        v,
        r,
        s,
    })
}

/// Perceived object in quantized form: offset from the sender in
/// centimetres, velocity in cm/s. Values beyond ±327.67 saturate, which is
/// far outside the perception range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PerceivedObject {
    pub object_id: u16,
    pub x_cm: i16,
    pub y_cm: i16,
    pub vx_cms: i16,
    pub vy_cms: i16,
}

fn quantize(value: f64) -> i16 {
    let q = (value * FIXED_POINT_SCALE).round();
    q.clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

impl PerceivedObject {
    pub fn from_metric(object_id: u16, position: (f64, f64), velocity: (f64, f64)) -> Self {
        Self {
            object_id,
            x_cm: quantize(position.0),
            y_cm: quantize(position.1),
            vx_cms: quantize(velocity.0),
            vy_cms: quantize(velocity.1),
        }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x_cm as f64 / FIXED_POINT_SCALE, self.y_cm as f64 / FIXED_POINT_SCALE)
    }

    pub fn velocity(&self) -> (f64, f64) {
        (self.vx_cms as f64 / FIXED_POINT_SCALE, self.vy_cms as f64 / FIXED_POINT_SCALE)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CpmMessage {
    pub sender_pseudonym: u32,
    pub tick: u64,
    pub objects: Vec<PerceivedObject>,
    pub proofs: Vec<ProofEntry>,
}

impl CpmMessage {
    /// Salt bytes under which every proof in this message was signed.
    pub fn salt(&self) -> [u8; 4] {
        self.sender_pseudonym.to_be_bytes()
    }

    pub fn validate(&self) -> Result<(), WireError> {
        if self.proofs.len() > MAX_PROOFS_PER_CPM {
            return Err(WireError::MalformedMessage(format!(
                "{} proof entries exceed the limit of {MAX_PROOFS_PER_CPM}",
                self.proofs.len()
            )));
        }
        if self.objects.len() > u16::MAX as usize {
            return Err(WireError::MalformedMessage("too many objects".into()));
        }
        let mut ids: Vec<u16> = self.objects.iter().map(|o| o.object_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(WireError::MalformedMessage("duplicate object id".into()));
        }
        for p in &self.proofs {
            if ids.binary_search(&p.object_id).is_err() {
                return Err(WireError::MalformedMessage(format!("proof references unknown object {}", p.object_id)));
            }
        }
        Ok(())
    }
}

pub fn cpm_size_bytes(m: &CpmMessage) -> usize {
    CPM_HEADER_LEN + OBJECT_LEN * m.objects.len() + PROOF_ENTRY_LEN * m.proofs.len()
}

pub fn encode_cpm(m: &CpmMessage) -> Result<Vec<u8>, WireError> {
    m.validate()?;
    let mut out = Vec::with_capacity(cpm_size_bytes(m));
    out.extend_from_slice(&m.sender_pseudonym.to_be_bytes());
    out.extend_from_slice(&m.tick.to_be_bytes());
    out.extend_from_slice(&(m.objects.len() as u16).to_be_bytes());
    out.push(m.proofs.len() as u8);
    for o in &m.objects {
        out.extend_from_slice(&o.object_id.to_be_bytes());
        for field in [o.x_cm, o.y_cm, o.vx_cms, o.vy_cms] {
            out.extend_from_slice(&field.to_be_bytes());
        }
    }
    for p in &m.proofs {
        out.extend_from_slice(&encode_proof_entry(p));
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], WireError> {
        let end = self.pos.checked_add(n).filter(|&end| end <= self.buf.len()).ok_or_else(|| {
            WireError::MalformedMessage(format!("truncated while reading {what} at byte {}", self.pos))
        })?;
        let slice = &self.buf[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N], WireError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N, what)?);
        Ok(out)
    }
}

pub fn decode_cpm(bytes: &[u8]) -> Result<CpmMessage, WireError> {
    let mut rd = Reader { buf: bytes, pos: 0 };
    let sender_pseudonym = u32::from_be_bytes(rd.array("sender pseudonym")?);
    let tick = u64::from_be_bytes(rd.array("tick")?);
    let object_count = u16::from_be_bytes(rd.array("object count")?) as usize;
    let proof_count = rd.array::<1>("proof count")?[0] as usize;
    if proof_count > MAX_PROOFS_PER_CPM {
        return Err(WireError::MalformedMessage(format!("proof count {proof_count} exceeds {MAX_PROOFS_PER_CPM}")));
    }
    let expected = CPM_HEADER_LEN + OBJECT_LEN * object_count + PROOF_ENTRY_LEN * proof_count;
    if bytes.len() < expected {
        return Err(WireError::MalformedMessage(format!("declared {expected} bytes, got {}", bytes.len())));
    }
    let mut objects = Vec::with_capacity(object_count);
    for _ in 0..object_count {
        let object_id = u16::from_be_bytes(rd.array("object id")?);
        let mut fields = [0i16; 4];
        for f in &mut fields {
            *f = i16::from_be_bytes(rd.array("object field")?);
        }
        objects.push(PerceivedObject {
            object_id,
            x_cm: fields[0],
            y_cm: fields[1],
            vx_cms: fields[2],
            vy_cms: fields[3],
        });
    }
    let mut proofs = Vec::with_capacity(proof_count);
    for _ in 0..proof_count {
        let raw = rd.take(PROOF_ENTRY_LEN, "proof entry")?;
        proofs.push(decode_proof_entry(raw).map_err(|e| WireError::MalformedMessage(e.to_string()))?);
    }
    if rd.pos != bytes.len() {
        return Err(WireError::MalformedMessage(format!("{} trailing bytes", bytes.len() - rd.pos)));
    }
    let msg = CpmMessage { sender_pseudonym, tick, objects, proofs };
    msg.validate()?;
    Ok(msg)
}
