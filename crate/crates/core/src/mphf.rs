//! Perfect hashing into `[2m]` from an acyclic graph `G(S, h1, h2)`.
//!
//! With bit tables `b1, b2` of length `m`,
//!
//! ```text
//! sigma(x) = h1(x)       if b1[h1(x)] ^ b2[h2(x)] == 0
//!            m + h2(x)   otherwise
//! ```
//!
//! Construction redraws `(h1, h2)` from Z until the graph peels completely,
//! then walks the peel order backwards and fixes, for every key, the bit of
//! the vertex it was peeled at so that `sigma` selects that vertex.

use std::fs;
use std::path::Path;

use crate::error::{param, Error, Result};
use crate::hashfam::check_key;
use crate::hypergraph::LabeledHypergraph;
use crate::prng::Prng;
use crate::zclass::{ell_for, ByteReader, ZFamily, ZParams};

pub const DEFAULT_MAX_ATTEMPTS: u32 = 64;
/// Smallest `eps` for which the acyclicity lower bound is meaningful.
pub const MIN_EPSILON: f64 = 0.08;

const MAGIC: &[u8; 4] = b"ZBPZ";
const VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bpz {
    fam: ZFamily,
    m: u64,
    bits1: Vec<u64>,
    bits2: Vec<u64>,
}

/// Side information from a successful build.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildInfo {
    pub attempts: u32,
    /// Construction keys in ascending order.
    pub keys: Vec<u64>,
    /// `sigma` of `keys[i]` as dictated by its peel vertex.
    pub peel_assignment: Vec<u64>,
}

#[inline]
fn get_bit(words: &[u64], i: u64) -> bool {
    (words[(i / 64) as usize] >> (i % 64)) & 1 == 1
}

#[inline]
fn set_bit(words: &mut [u64], i: u64, value: bool) {
    let w = &mut words[(i / 64) as usize];
    if value {
        *w |= 1 << (i % 64);
    } else {
        *w &= !(1 << (i % 64));
    }
}

pub fn build_mphf(prng: &mut Prng, keys: &[u64], epsilon: f64, delta: f64, c: usize) -> Result<(Bpz, BuildInfo)> {
    build_mphf_with_cap(prng, keys, epsilon, delta, c, DEFAULT_MAX_ATTEMPTS)
}

pub fn build_mphf_with_cap(
    prng: &mut Prng,
    keys: &[u64],
    epsilon: f64,
    delta: f64,
    c: usize,
    max_attempts: u32,
) -> Result<(Bpz, BuildInfo)> {
    if !(epsilon >= MIN_EPSILON) || !epsilon.is_finite() {
        return Err(param(format!("epsilon must be at least {MIN_EPSILON}, got {epsilon}")));
    }
    if keys.is_empty() {
        return Err(param("key set is empty"));
    }
    let n = keys.len() as u64;
    let m = ((1.0 + epsilon) * n as f64).ceil() as u64;
    let params = ZParams::new(c, 2, 2, ell_for(n, delta)?, m)?;
    for attempt in 1..=max_attempts {
        let fam = ZFamily::draw(prng, params)?;
        let g = LabeledHypergraph::build(&fam, keys)?;
        let peeling = g.peel();
        if !peeling.is_complete() {
            continue;
        }
        let words = m.div_ceil(64) as usize;
        let mut bits = [vec![0u64; words], vec![0u64; words]];
        let mut peel_assignment = vec![0u64; g.edge_count()];
        for step in peeling.order.iter().rev() {
            let (part, _) = g.local(step.vertex);
            let e = g.edge(step.edge);
            let (u1, u2) = (e[0] as u64, e[1] as u64);
            let want = part == 1;
            if part == 0 {
                let other = get_bit(&bits[1], u2);
                set_bit(&mut bits[0], u1, want ^ other);
            } else {
                let other = get_bit(&bits[0], u1);
                set_bit(&mut bits[1], u2, want ^ other);
            }
            peel_assignment[step.edge] = step.vertex as u64;
        }
        let [bits1, bits2] = bits;
        let bpz = Bpz { fam, m, bits1, bits2 };
        let info = BuildInfo { attempts: attempt, keys: g.keys().to_vec(), peel_assignment };
        return Ok((bpz, info));
    }
    Err(Error::Construction(format!("no acyclic graph within {max_attempts} attempts")))
}

impl Bpz {
    /// Assembles a function from a family and bit tables of `m` bits each
    /// (given as 64-bit words, low bit first).
    pub fn from_parts(fam: ZFamily, bits1: Vec<u64>, bits2: Vec<u64>) -> Result<Self> {
        if fam.params().d != 2 {
            return Err(param("perfect hashing uses a pair of hash functions (d = 2)"));
        }
        let m = fam.params().m;
        let words = m.div_ceil(64) as usize;
        if bits1.len() != words || bits2.len() != words {
            return Err(param(format!("bit tables need {words} words")));
        }
        Ok(Bpz { fam, m, bits1, bits2 })
    }

    /// `sigma(x)`, a value in `[2m]`.
    pub fn eval(&self, x: u64) -> Result<u64> {
        check_key(x)?;
        let mut h = [0u64; 2];
        self.fam.eval_into(x, &mut h)?;
        Ok(if get_bit(&self.bits1, h[0]) ^ get_bit(&self.bits2, h[1]) {
            self.m + h[1]
        } else {
            h[0]
        })
    }

    pub fn table_size(&self) -> u64 {
        self.m
    }

    /// Size of the output range, `2m`.
    pub fn range(&self) -> u64 {
        2 * self.m
    }

    pub fn family(&self) -> &ZFamily {
        &self.fam
    }

    pub fn bits(&self) -> (&[u64], &[u64]) {
        (&self.bits1, &self.bits2)
    }

    /// Whether `sigma` is injective on `keys`.
    pub fn is_injective_on(&self, keys: &[u64]) -> Result<bool> {
        let mut seen = vec![0u64; (2 * self.m).div_ceil(64) as usize];
        for &x in keys {
            let v = self.eval(x)?;
            if get_bit(&seen, v) {
                return Ok(false);
            }
            set_bit(&mut seen, v, true);
        }
        Ok(true)
    }

    /// Magic, version, the family blob, then both bit tables as
    /// little-endian words.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.fam.to_bytes());
        for &w in self.bits1.iter().chain(&self.bits2) {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(Error::Decode("not a perfect hash function blob".into()));
        }
        let version = r.take(1)?[0];
        if version != VERSION {
            return Err(Error::Decode(format!("unsupported version {version}")));
        }
        let (fam, used) = ZFamily::from_bytes(&bytes[r.pos..])?;
        r.take(used)?;
        let words = fam.params().m.div_ceil(64) as usize;
        let mut read = || (0..words).map(|_| r.u64()).collect::<Result<Vec<_>>>();
        let bits1 = read()?;
        let bits2 = read()?;
        if r.pos != bytes.len() {
            return Err(Error::Decode(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Bpz::from_parts(fam, bits1, bits2).map_err(|e| Error::Decode(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Bpz::from_bytes(&fs::read(path)?)
    }
}

/// Probability that `G(S, h1, h2)` with fully random functions and
/// `m = (1 + eps) n` is acyclic, `sqrt(1 - (1/(1+eps))^2)`, and the lower
/// bound `1 + ln(1 - (1/(1+eps))^2) / 2` that holds for Z.
pub fn acyclic_prob_bounds(epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0) {
        return Err(param(format!("epsilon must be positive, got {epsilon}")));
    }
    let q = 1.0 - (1.0 / (1.0 + epsilon)).powi(2);
    Ok((q.sqrt(), 1.0 + 0.5 * q.ln()))
}

/// Whether `G(keys, h1, h2)` is acyclic (its 2-core is empty).
pub fn is_acyclic(fam: &ZFamily, keys: &[u64]) -> Result<bool> {
    Ok(LabeledHypergraph::build(fam, keys)?.peel().is_complete())
}
