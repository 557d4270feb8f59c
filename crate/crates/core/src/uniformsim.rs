//! Simulation of a uniform hash function on a key set of size `n`:
//!
//! ```text
//! h(x) = t1[h1(x)] ^ t2[h2(x)] ^ f(x) ^ y_1[g_1(x)] ^ ... ^ y_c[g_c(x)]
//! ```
//!
//! over `w`-bit words with XOR as the group operation. `(h1, h2)` is a member
//! of Z with range `m = ceil((1 + eps) n)` and the `g_j` are its own
//! component functions; all tables hold uniform `w`-bit words.

use rand::Rng;

use crate::error::{param, Result};
use crate::hashfam::{check_key, PolyHash};
use crate::prng::Prng;
use crate::stats::{chi_square_uniform, ChiSquare};
use crate::zclass::{ell_for, ZFamily, ZParams};

/// Build parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub n: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub c: usize,
    /// Word width in bits, 1..=64.
    pub w: u32,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(param("n must be at least 1"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(param(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(param(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(1..=64).contains(&self.w) {
            return Err(param(format!("word width must be in 1..=64, got {}", self.w)));
        }
        Ok(())
    }

    pub fn table_size(&self) -> u64 {
        ((1.0 + self.epsilon) * self.n as f64).ceil() as u64
    }
}

fn mask_for(w: u32) -> u64 {
    if w == 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

#[derive(Clone, Debug)]
pub struct UniformSim {
    fam: ZFamily,
    w: u32,
    mask: u64,
    t1: Vec<u64>,
    t2: Vec<u64>,
    y: Vec<Vec<u64>>,
    f: PolyHash,
}

impl UniformSim {
    pub fn build(prng: &mut Prng, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let params = ZParams::new(cfg.c, 2, 2, ell_for(cfg.n, cfg.delta)?, cfg.table_size())?;
        let fam = ZFamily::draw(prng, params)?;
        let mask = mask_for(cfg.w);
        let m = params.m as usize;
        let t1 = (0..m).map(|_| prng.next_word() & mask).collect();
        let t2 = (0..m).map(|_| prng.next_word() & mask).collect();
        let y = (0..cfg.c)
            .map(|_| (0..params.ell).map(|_| prng.next_word() & mask).collect())
            .collect();
        // the field has 61 bits; wider words keep their top bits from the tables
        let f = PolyHash::draw(prng, 2, 1u64 << cfg.w.min(61))?;
        Ok(UniformSim { fam, w: cfg.w, mask, t1, t2, y, f })
    }

    /// Assembles a structure from explicit parts. Table entries must fit in
    /// `w` bits.
    pub fn from_parts(fam: ZFamily, f: PolyHash, t1: Vec<u64>, t2: Vec<u64>, y: Vec<Vec<u64>>, w: u32) -> Result<Self> {
        if !(1..=64).contains(&w) {
            return Err(param(format!("word width must be in 1..=64, got {w}")));
        }
        let p = fam.params();
        if p.d != 2 {
            return Err(param("the simulation uses a pair of hash functions (d = 2)"));
        }
        let m = p.m as usize;
        if t1.len() != m || t2.len() != m {
            return Err(param(format!("t1 and t2 need {m} entries")));
        }
        if y.len() != p.c || y.iter().any(|row| row.len() as u64 != p.ell) {
            return Err(param(format!("y needs {} rows of {} entries", p.c, p.ell)));
        }
        let mask = mask_for(w);
        if t1.iter().chain(&t2).chain(y.iter().flatten()).any(|&v| v & !mask != 0) {
            return Err(param(format!("table entry wider than {w} bits")));
        }
        Ok(UniformSim { fam, w, mask, t1, t2, y, f })
    }

    pub fn eval(&self, x: u64) -> Result<u64> {
        check_key(x)?;
        let mut h = [0u64; 2];
        self.fam.eval_into(x, &mut h)?;
        let mut acc = self.t1[h[0] as usize] ^ self.t2[h[1] as usize] ^ (self.f.eval_unchecked(x) & self.mask);
        for (g, row) in self.fam.g().iter().zip(&self.y) {
            acc ^= row[g.eval_unchecked(x) as usize];
        }
        Ok(acc)
    }

    /// Replaces `t1` and `t2` by fresh uniform words, keeping everything else.
    pub fn redraw_pair_tables(&mut self, prng: &mut Prng) {
        for v in self.t1.iter_mut().chain(self.t2.iter_mut()) {
            *v = prng.random::<u64>() & self.mask;
        }
    }

    pub fn family(&self) -> &ZFamily {
        &self.fam
    }

    pub fn width(&self) -> u32 {
        self.w
    }

    pub fn t1(&self) -> &[u64] {
        &self.t1
    }

    pub fn t2(&self) -> &[u64] {
        &self.t2
    }

    pub fn y(&self) -> &[Vec<u64>] {
        &self.y
    }

    pub fn f(&self) -> &PolyHash {
        &self.f
    }

    /// Bits held in the random tables: `(2m + c * ell) * w`. The hash
    /// functions' coefficients add `O(c + kappa)` words on top.
    pub fn memory_bits(&self) -> u64 {
        let p = self.fam.params();
        (2 * p.m + p.c as u64 * p.ell) * self.w as u64
    }
}

/// Empirical joint distribution of `(h(x))_{x in keys}` over `trials`
/// independent structures, with a chi-square test against the uniform
/// distribution on `(2^w)^|keys|` cells.
#[derive(Clone, Debug)]
pub struct ProbeResult {
    pub counts: Vec<u64>,
    pub chi_square: ChiSquare,
}

/// Joint-space size limit of [`uniformity_probe`].
pub const MAX_PROBE_CELLS: u64 = 1 << 16;

pub fn uniformity_probe(cfg: &SimConfig, keys: &[u64], trials: u64, seed: u64) -> Result<ProbeResult> {
    cfg.validate()?;
    if keys.is_empty() || keys.len() > 6 {
        return Err(param("probe key set must have 1..=6 keys"));
    }
    let cells = 1u64
        .checked_shl(cfg.w * keys.len() as u32)
        .filter(|&c| c <= MAX_PROBE_CELLS)
        .ok_or_else(|| param("joint space too large to enumerate; lower w or |S|"))?;
    if trials == 0 {
        return Err(param("trials must be at least 1"));
    }
    let root = Prng::new(seed);
    let mut counts = vec![0u64; cells as usize];
    for t in 0..trials {
        let ds = UniformSim::build(&mut root.child(t), cfg)?;
        let mut cell = 0u64;
        for &x in keys {
            cell = (cell << cfg.w) | ds.eval(x)?;
        }
        counts[cell as usize] += 1;
    }
    let chi_square = chi_square_uniform(&counts).ok_or_else(|| param("probe needs at least two cells"))?;
    Ok(ProbeResult { counts, chi_square })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::LabeledHypergraph;
    use crate::zclass::distinct_keys;

    fn cfg(n: u64, w: u32) -> SimConfig {
        SimConfig { n, epsilon: 1.0, delta: 0.5, c: 2, w }
    }

    fn zero_sim(fam: ZFamily, w: u32) -> UniformSim {
        let p = *fam.params();
        let m = p.m as usize;
        let f = PolyHash::new(vec![0, 0], 1 << w).unwrap();
        UniformSim::from_parts(fam, f, vec![0; m], vec![0; m], vec![vec![0; p.ell as usize]; p.c], w).unwrap()
    }

    #[test]
    fn deterministic_and_shaped() {
        let c = cfg(100, 16);
        let a = UniformSim::build(&mut Prng::new(9), &c).unwrap();
        let b = UniformSim::build(&mut Prng::new(9), &c).unwrap();
        for x in 0..50 {
            assert_eq!(a.eval(x).unwrap(), b.eval(x).unwrap());
        }
        assert_eq!(a.t1().len(), 200);
        assert_eq!(a.t2().len(), 200);
        assert!(a.y().iter().all(|row| row.len() == 10));
        assert_eq!(a.memory_bits(), (400 + 20) * 16);
        assert!(a.t1().iter().all(|&v| v < 1 << 16));
    }

    #[test]
    fn memory_accounting_tracks_the_leading_term() {
        let c = SimConfig { n: 100_000, epsilon: 0.5, delta: 0.5, c: 3, w: 32 };
        let ds = UniformSim::build(&mut Prng::new(1), &c).unwrap();
        let leading = 2.0 * 1.5 * 1e5 * 32.0;
        let extra = 3.0 * (1e5f64).sqrt().ceil() * 32.0;
        assert!((ds.memory_bits() as f64 - leading - extra).abs() < 64.0);
    }

    #[test]
    fn zero_tables_give_identity() {
        let ds = UniformSim::build(&mut Prng::new(3), &cfg(50, 8)).unwrap();
        let z = zero_sim(ds.family().clone(), 8);
        assert!((0..100).all(|x| z.eval(x).unwrap() == 0));
    }

    #[test]
    fn single_entry_passes_through() {
        let ds = UniformSim::build(&mut Prng::new(3), &cfg(50, 8)).unwrap();
        let mut z = zero_sim(ds.family().clone(), 8);
        let x = 17;
        let h1 = z.family().eval(x).unwrap()[0] as usize;
        z.t1[h1] = 0xA5;
        assert_eq!(z.eval(x).unwrap(), 0xA5);
    }

    #[test]
    fn matches_direct_recomputation() {
        let ds = UniformSim::build(&mut Prng::new(5), &cfg(500, 24)).unwrap();
        let keys = distinct_keys(&mut Prng::new(6), 1000);
        let fam = ds.family();
        for &x in &keys {
            let h = fam.eval(x).unwrap();
            let gv = fam.g_values(x).unwrap();
            let mut expect = ds.t1()[h[0] as usize] ^ ds.t2()[h[1] as usize] ^ (ds.f().eval(x).unwrap() & 0xFF_FFFF);
            for (row, &v) in ds.y().iter().zip(&gv) {
                expect ^= row[v as usize];
            }
            assert_eq!(ds.eval(x).unwrap(), expect);
        }
        assert!(ds.eval(crate::hashfam::PRIME).is_err());
    }

    #[test]
    fn parameter_errors() {
        let bad = [
            SimConfig { n: 0, ..cfg(1, 8) },
            SimConfig { epsilon: 0.0, ..cfg(1, 8) },
            SimConfig { delta: 1.0, ..cfg(1, 8) },
            SimConfig { w: 0, ..cfg(1, 8) },
            SimConfig { w: 65, ..cfg(1, 8) },
            SimConfig { c: 0, ..cfg(1, 8) },
        ];
        for c in bad {
            assert!(UniformSim::build(&mut Prng::new(1), &c).is_err(), "{c:?}");
        }
        assert!(uniformity_probe(&cfg(16, 2), &[1, 2, 3, 4, 5, 6, 7], 10, 1).is_err());
    }

    #[test]
    fn single_key_marginal_is_uniform() {
        let r = uniformity_probe(&cfg(16, 2), &[42], 20_000, 11).unwrap();
        assert_eq!(r.counts.len(), 4);
        assert!(r.chi_square.p_value > 0.001, "{:?}", r.chi_square);
    }

    #[test]
    fn pair_is_jointly_uniform() {
        let r = uniformity_probe(&cfg(16, 2), &[3, 1_000_003], 100_000, 12).unwrap();
        assert_eq!(r.counts.len(), 16);
        assert!(r.chi_square.p_value > 0.001, "{:?}", r.chi_square);
    }

    #[test]
    fn five_consecutive_keys_are_jointly_uniform() {
        // consecutive keys collide often under g with ell = 4
        let r = uniformity_probe(&cfg(16, 1), &[10, 11, 12, 13, 14], 60_000, 13).unwrap();
        assert!(r.chi_square.p_value > 0.001, "{:?}", r.chi_square);
    }

    #[test]
    fn pair_tables_alone_uniformize_peelable_keys() {
        let base = UniformSim::build(&mut Prng::new(21), &cfg(16, 2)).unwrap();
        let keys = [5u64, 6, 7];
        let g = LabeledHypergraph::build(base.family(), &keys).unwrap();
        assert!(g.peel().is_complete());
        let root = Prng::new(22);
        let mut counts = vec![0u64; 64];
        let mut ds = base.clone();
        for t in 0..30_000 {
            ds.redraw_pair_tables(&mut root.child(t));
            let cell = keys.iter().fold(0u64, |acc, &x| (acc << 2) | ds.eval(x).unwrap());
            counts[cell as usize] += 1;
        }
        let chi = chi_square_uniform(&counts).unwrap();
        assert!(chi.p_value > 0.001, "{chi:?}");
    }

    #[test]
    fn pair_tables_cannot_separate_keys_on_a_double_edge() {
        // both keys sit on the same edge and share all g-values: their xor
        // is fixed by f alone
        let params = ZParams::new(1, 2, 2, 2, 4).unwrap();
        let f = vec![PolyHash::new(vec![1, 0], 4).unwrap(), PolyHash::new(vec![2, 0], 4).unwrap()];
        let g = vec![PolyHash::new(vec![0, 0], 2).unwrap()];
        let fam = ZFamily::from_parts(params, f, g, vec![vec![0, 0], vec![0, 0]]).unwrap();
        let fw = PolyHash::new(vec![0, 1], 4).unwrap();
        let mut ds = UniformSim::from_parts(fam, fw, vec![0; 4], vec![0; 4], vec![vec![0; 2]], 2).unwrap();
        let root = Prng::new(1);
        for t in 0..200 {
            ds.redraw_pair_tables(&mut root.child(t));
            assert_eq!(ds.eval(1).unwrap() ^ ds.eval(2).unwrap(), 1 ^ 2);
        }
    }
}
