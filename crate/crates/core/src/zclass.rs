//! The hash class Z.
//!
//! A member is a sequence `(h_1, ..., h_d)` assembled from `d` polynomial
//! functions `f_i` into `[m]`, `c` polynomial functions `g_j` into `[ell]`,
//! and `d` random tables `z^(i)` of shape `c x ell` with entries in `[m]`:
//!
//! ```text
//! h_i(x) = (f_i(x) + sum_j z^(i)[j, g_j(x)]) mod m
//! ```
//!
//! The *deficiency* of a member on a key set `T` depends only on the `g_j`
//! and decides whether the hash values on `T` are fully random.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{param, Error, Result};
use crate::hashfam::{check_key, PolyHash, MAX_KAPPA};
use crate::prng::{keyed_word, Prng};

/// Upper limit on `c`; g-values are staged in a stack buffer of this size.
pub const MAX_C: usize = 64;
/// Upper limit on the output range so that sums of two residues cannot overflow.
pub const MAX_RANGE: u64 = 1 << 62;

/// Anything that maps a key to `arity()` values in `[range()]`.
///
/// Implemented by [`ZFamily`] and by the [`FullyRandom`] baseline, so graph
/// builders and simulators run unchanged against either.
pub trait HashSequence: Sync {
    fn arity(&self) -> usize;
    fn range(&self) -> u64;
    fn hash_into(&self, x: u64, out: &mut [u64]) -> Result<()>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZParams {
    /// Number of g-functions.
    pub c: usize,
    /// Number of output functions.
    pub d: usize,
    /// Independence degree of every f and g component.
    pub kappa: usize,
    /// Range of the g-functions (row length of the z tables).
    pub ell: u64,
    /// Output range.
    pub m: u64,
}

impl ZParams {
    pub fn new(c: usize, d: usize, kappa: usize, ell: u64, m: u64) -> Result<Self> {
        let p = ZParams { c, d, kappa, ell, m };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `ell = ceil(n^delta)`.
    pub fn with_delta(n: u64, delta: f64, c: usize, d: usize, kappa: usize, m: u64) -> Result<Self> {
        Self::new(c, d, kappa, ell_for(n, delta)?, m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c == 0 || self.c > MAX_C {
            return Err(param(format!("c must lie in 1..={MAX_C}, got {}", self.c)));
        }
        if self.d < 2 {
            return Err(param(format!("d must be at least 2, got {}", self.d)));
        }
        if self.kappa < 2 || self.kappa > MAX_KAPPA || self.kappa % 2 != 0 {
            return Err(param(format!(
                "kappa must be even and in 2..={MAX_KAPPA}, got {}",
                self.kappa
            )));
        }
        if self.ell == 0 {
            return Err(param("ell must be at least 1"));
        }
        if self.m == 0 || self.m > MAX_RANGE {
            return Err(param(format!("m must lie in 1..=2^62, got {}", self.m)));
        }
        let cells = (self.d as u128) * (self.c as u128) * (self.ell as u128);
        if cells > (1u128 << 34) {
            return Err(param("z tables too large (d * c * ell > 2^34)"));
        }
        Ok(())
    }

    /// The `k` of the generalized deficiency, `kappa / 2`.
    pub fn k(&self) -> u64 {
        (self.kappa / 2) as u64
    }
}

/// `ceil(n^delta)`, with values within floating-point noise of an integer
/// snapped to it (so `10000^0.5` is 100, not 101).
pub fn ell_for(n: u64, delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(param(format!("delta must lie in (0, 1), got {delta}")));
    }
    if n == 0 {
        return Err(param("n must be at least 1"));
    }
    let r = (n as f64).powf(delta);
    let nearest = r.round();
    let ell = if (r - nearest).abs() <= 1e-9 * r.max(1.0) {
        nearest
    } else {
        r.ceil()
    };
    Ok((ell as u64).max(1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZFamily {
    params: ZParams,
    f: Vec<PolyHash>,
    g: Vec<PolyHash>,
    /// `d` tables, each `c x ell`, row-major by `[j][g-value]`.
    z: Vec<u64>,
}

impl ZFamily {
    /// Draws a uniformly random member of the class.
    pub fn draw(prng: &mut Prng, params: ZParams) -> Result<Self> {
        params.validate()?;
        let f = (0..params.d)
            .map(|_| PolyHash::draw(prng, params.kappa, params.m))
            .collect::<Result<Vec<_>>>()?;
        let g = (0..params.c)
            .map(|_| PolyHash::draw(prng, params.kappa, params.ell))
            .collect::<Result<Vec<_>>>()?;
        let cells = params.d * params.c * params.ell as usize;
        let z = (0..cells).map(|_| prng.random_range(0..params.m)).collect();
        Ok(ZFamily { params, f, g, z })
    }

    /// Assembles a member from explicit components.
    ///
    /// `z[i]` is table `i` in row-major `[j][g-value]` order.
    pub fn from_parts(params: ZParams, f: Vec<PolyHash>, g: Vec<PolyHash>, z: Vec<Vec<u64>>) -> Result<Self> {
        params.validate()?;
        if f.len() != params.d || g.len() != params.c || z.len() != params.d {
            return Err(param("component counts do not match (c, d)"));
        }
        if f.iter().any(|h| h.range() != params.m || h.kappa() != params.kappa) {
            return Err(param("every f must have range m and kappa coefficients"));
        }
        if g.iter().any(|h| h.range() != params.ell || h.kappa() != params.kappa) {
            return Err(param("every g must have range ell and kappa coefficients"));
        }
        let row = params.c * params.ell as usize;
        if z.iter().any(|t| t.len() != row) {
            return Err(param("every z table must hold c * ell entries"));
        }
        let z: Vec<u64> = z.into_iter().flatten().collect();
        if z.iter().any(|&v| v >= params.m) {
            return Err(param("z table entries must be < m"));
        }
        Ok(ZFamily { params, f, g, z })
    }

    pub fn params(&self) -> &ZParams {
        &self.params
    }

    pub fn f(&self) -> &[PolyHash] {
        &self.f
    }

    pub fn g(&self) -> &[PolyHash] {
        &self.g
    }

    /// Table `i` (0-based) as a flat `c * ell` slice.
    pub fn z_table(&self, i: usize) -> &[u64] {
        let row = self.params.c * self.params.ell as usize;
        &self.z[i * row..(i + 1) * row]
    }

    #[inline]
    fn z_at(&self, i: usize, j: usize, v: u64) -> u64 {
        let ell = self.params.ell as usize;
        self.z[(i * self.params.c + j) * ell + v as usize]
    }

    /// `(h_1(x), ..., h_d(x))`.
    pub fn eval(&self, x: u64) -> Result<Vec<u64>> {
        let mut out = vec![0; self.params.d];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, x: u64, out: &mut [u64]) -> Result<()> {
        check_key(x)?;
        if out.len() != self.params.d {
            return Err(param(format!("output buffer needs {} slots", self.params.d)));
        }
        let mut gv = [0u64; MAX_C];
        for (slot, g) in gv.iter_mut().zip(&self.g) {
            *slot = g.eval_unchecked(x);
        }
        let m = self.params.m;
        for (i, (o, f)) in out.iter_mut().zip(&self.f).enumerate() {
            let mut acc = f.eval_unchecked(x);
            for (j, &v) in gv[..self.params.c].iter().enumerate() {
                acc += self.z_at(i, j, v);
                if acc >= m {
                    acc -= m;
                }
            }
            *o = acc;
        }
        Ok(())
    }

    /// `(g_1(x), ..., g_c(x))`.
    pub fn g_values(&self, x: u64) -> Result<Vec<u64>> {
        check_key(x)?;
        Ok(self.g.iter().map(|g| g.eval_unchecked(x)).collect())
    }

    /// Deficiency of this member with respect to the key set `keys`
    /// (duplicates are ignored).
    pub fn classify_deficiency(&self, keys: &[u64]) -> Result<DeficiencyReport> {
        for &x in keys {
            check_key(x)?;
        }
        let set: BTreeSet<u64> = keys.iter().copied().collect();
        let per_g_distinct = self
            .g
            .iter()
            .map(|g| set.iter().map(|&x| g.eval_unchecked(x)).collect::<BTreeSet<_>>().len())
            .collect::<Vec<_>>();
        Ok(DeficiencyReport::from_counts(set.len(), per_g_distinct, self.params.k()))
    }

    /// Self-describing little-endian encoding: magic, version, parameter
    /// header, then f coefficients, g coefficients and the z tables.
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut out = Vec::with_capacity(40 + 8 * (self.z.len() + (p.c + p.d) * p.kappa));
        out.extend_from_slice(FAMILY_MAGIC);
        out.push(FAMILY_VERSION);
        out.extend_from_slice(&(p.c as u32).to_le_bytes());
        out.extend_from_slice(&(p.d as u32).to_le_bytes());
        out.extend_from_slice(&(p.kappa as u32).to_le_bytes());
        out.extend_from_slice(&p.ell.to_le_bytes());
        out.extend_from_slice(&p.m.to_le_bytes());
        for h in self.f.iter().chain(&self.g) {
            for &a in h.coefficients() {
                out.extend_from_slice(&a.to_le_bytes());
            }
        }
        for &v in &self.z {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Inverse of [`ZFamily::to_bytes`]. Returns the family and the number of
    /// bytes consumed, so the blob can be embedded in a larger record.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize)> {
        let mut r = ByteReader::new(bytes);
        if r.take(4)? != FAMILY_MAGIC {
            return Err(Error::Decode("not a Z family blob".into()));
        }
        let version = r.take(1)?[0];
        if version != FAMILY_VERSION {
            return Err(Error::Decode(format!("unsupported family version {version}")));
        }
        let c = r.u32()? as usize;
        let d = r.u32()? as usize;
        let kappa = r.u32()? as usize;
        let ell = r.u64()?;
        let m = r.u64()?;
        let params = ZParams::new(c, d, kappa, ell, m).map_err(|e| Error::Decode(e.to_string()))?;
        let mut read_poly = |range: u64| -> Result<PolyHash> {
            let coeffs = (0..kappa).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            PolyHash::new(coeffs, range).map_err(|e| Error::Decode(e.to_string()))
        };
        let f = (0..d).map(|_| read_poly(m)).collect::<Result<Vec<_>>>()?;
        let g = (0..c).map(|_| read_poly(ell)).collect::<Result<Vec<_>>>()?;
        let row = c * ell as usize;
        let z = (0..d)
            .map(|_| (0..row).map(|_| r.u64()).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let fam = ZFamily::from_parts(params, f, g, z).map_err(|e| Error::Decode(e.to_string()))?;
        Ok((fam, r.pos))
    }
}

const FAMILY_MAGIC: &[u8; 4] = b"ZFAM";
const FAMILY_VERSION: u8 = 1;

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Decode("unexpected end of input".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl HashSequence for ZFamily {
    fn arity(&self) -> usize {
        self.params.d
    }

    fn range(&self) -> u64 {
        self.params.m
    }

    fn hash_into(&self, x: u64, out: &mut [u64]) -> Result<()> {
        self.eval_into(x, out)
    }
}

/// Fully random baseline: each key gets `arity` independent uniform values
/// drawn from a stream selected by `(seed, key)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FullyRandom {
    seed: u64,
    arity: usize,
    range: u64,
}

impl FullyRandom {
    pub fn new(seed: u64, arity: usize, range: u64) -> Result<Self> {
        if arity == 0 {
            return Err(param("arity must be at least 1"));
        }
        if range == 0 {
            return Err(param("range must be at least 1"));
        }
        Ok(FullyRandom { seed, arity, range })
    }
}

impl HashSequence for FullyRandom {
    fn arity(&self) -> usize {
        self.arity
    }

    fn range(&self) -> u64 {
        self.range
    }

    fn hash_into(&self, x: u64, out: &mut [u64]) -> Result<()> {
        check_key(x)?;
        if out.len() != self.arity {
            return Err(param(format!("output buffer needs {} slots", self.arity)));
        }
        let mut stream = Prng::new(keyed_word(self.seed, x, 0));
        for o in out.iter_mut() {
            *o = stream.random_range(0..self.range);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DeficiencyClass {
    /// `d_T < k`.
    Good,
    /// `d_T = k` (still good, but on the boundary).
    Critical,
    /// `d_T > k`.
    Bad,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeficiencyReport {
    pub deficiency: u64,
    pub class: DeficiencyClass,
    /// `|g_j(T)|` for each `j`.
    pub per_g_distinct: Vec<usize>,
}

impl DeficiencyReport {
    /// `d_T = |T| - max(k, max_j |g_j(T)|)`, clipped at zero.
    pub fn from_counts(set_size: usize, per_g_distinct: Vec<usize>, k: u64) -> Self {
        let best = per_g_distinct.iter().copied().max().unwrap_or(0) as u64;
        let deficiency = (set_size as u64).saturating_sub(best.max(k));
        let class = match deficiency.cmp(&k) {
            std::cmp::Ordering::Less => DeficiencyClass::Good,
            std::cmp::Ordering::Equal => DeficiencyClass::Critical,
            std::cmp::Ordering::Greater => DeficiencyClass::Bad,
        };
        DeficiencyReport { deficiency, class, per_g_distinct }
    }

    /// `good_T` in the inclusive sense: `d_T <= k`.
    pub fn is_good(&self) -> bool {
        self.class != DeficiencyClass::Bad
    }

    /// The event `bad_T or crit_T`.
    pub fn is_bad_or_critical(&self) -> bool {
        self.class != DeficiencyClass::Good
    }
}

/// Monte-Carlo estimate of `Pr(bad_T or crit_T)` next to its upper bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    pub hits: u64,
    pub trials: u64,
    pub rate: f64,
    /// `(|T|^2 / ell)^(c k)`, not clipped at 1.
    pub bound: f64,
    /// Binomial standard deviation at `min(bound, 1)`.
    pub sigma: f64,
}

impl RateEstimate {
    pub fn within_bound(&self, sigmas: f64) -> bool {
        self.rate <= self.bound.min(1.0) + sigmas * self.sigma
    }
}

/// Draws a random key set of size `t_size` once, then `trials` independent
/// families, and counts how often the set is bad or critical.
pub fn estimate_bad_rate(params: ZParams, t_size: usize, trials: u64, seed: u64) -> Result<RateEstimate> {
    params.validate()?;
    if trials == 0 {
        return Err(param("trials must be at least 1"));
    }
    let root = Prng::new(seed);
    let keys = distinct_keys(&mut root.child(0), t_size);
    let mut hits = 0u64;
    for t in 0..trials {
        let fam = ZFamily::draw(&mut root.child(t + 1), params)?;
        if fam.classify_deficiency(&keys)?.is_bad_or_critical() {
            hits += 1;
        }
    }
    let bound = deficiency_bound(t_size, params.ell, params.c, params.k());
    let p = bound.min(1.0);
    Ok(RateEstimate {
        hits,
        trials,
        rate: hits as f64 / trials as f64,
        bound,
        sigma: (p * (1.0 - p) / trials as f64).sqrt(),
    })
}

/// `(|T|^2 / ell)^(c k)`.
pub fn deficiency_bound(t_size: usize, ell: u64, c: usize, k: u64) -> f64 {
    ((t_size * t_size) as f64 / ell as f64).powf((c as u64 * k) as f64)
}

/// `count` distinct uniformly random admissible keys, in draw order.
pub fn distinct_keys(prng: &mut Prng, count: usize) -> Vec<u64> {
    let mut seen = std::collections::HashSet::with_capacity(count);
    let mut keys = Vec::with_capacity(count);
    while keys.len() < count {
        let x = prng.random_range(0..crate::hashfam::PRIME);
        if seen.insert(x) {
            keys.push(x);
        }
    }
    keys
}
