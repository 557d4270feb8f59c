//! Two-table cuckoo hashing with a stash, driven by a Z family with `d = 2`.
//!
//! Key `x` lives in `T_1[h_1(x)]`, `T_2[h_2(x)]` or the stash. A key set can
//! be stored with a stash of size `s` exactly when the excess of
//! `G(S, h_1, h_2)` is at most `s`, which is what [`suitable`] checks.

use crate::error::{param, Error, Result};
use crate::hashfam::check_key;
use crate::hypergraph::LabeledHypergraph;
use crate::prng::Prng;
use crate::zclass::{ell_for, ZFamily, ZParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertOutcome {
    Placed,
    /// The eviction budget ran out and the homeless key went to the stash.
    PlacedViaStash,
    /// Budget exhausted with a full stash. The table is left exactly as it
    /// was before the call and the caller is expected to redraw and rebuild.
    RehashNeeded,
}

#[derive(Clone, Debug)]
pub struct CuckooTable {
    fam: ZFamily,
    tables: [Vec<Option<u64>>; 2],
    stash: Vec<u64>,
    stash_capacity: usize,
    max_loop: usize,
    len: usize,
}

/// `ceil(3 * log_{1+eps} n) + 16`.
pub fn default_max_loop(n: usize, epsilon: f64) -> usize {
    let n = n.max(2) as f64;
    (3.0 * n.ln() / epsilon.ln_1p()).ceil() as usize + 16
}

impl CuckooTable {
    pub fn new(fam: ZFamily, stash_capacity: usize, max_loop: usize) -> Result<Self> {
        if fam.params().d != 2 {
            return Err(param(format!("cuckoo hashing needs d = 2, got {}", fam.params().d)));
        }
        if max_loop == 0 {
            return Err(param("max_loop must be at least 1"));
        }
        let m = fam.params().m as usize;
        Ok(CuckooTable {
            fam,
            tables: [vec![None; m], vec![None; m]],
            stash: Vec::with_capacity(stash_capacity),
            stash_capacity,
            max_loop,
            len: 0,
        })
    }

    /// Table for `n` keys: `m = ceil((1 + eps) n)`, `ell = ceil(n^delta)`,
    /// `kappa = 2` and the default eviction budget.
    pub fn for_capacity(prng: &mut Prng, n: usize, epsilon: f64, delta: f64, c: usize, stash_capacity: usize) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(param(format!("epsilon must be positive, got {epsilon}")));
        }
        let m = ((1.0 + epsilon) * n.max(1) as f64).ceil() as u64;
        let params = ZParams::new(c, 2, 2, ell_for(n.max(1) as u64, delta)?, m)?;
        Self::new(ZFamily::draw(prng, params)?, stash_capacity, default_max_loop(n, epsilon))
    }

    pub fn family(&self) -> &ZFamily {
        &self.fam
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stash(&self) -> &[u64] {
        &self.stash
    }

    pub fn table(&self, side: usize) -> &[Option<u64>] {
        &self.tables[side]
    }

    fn slots(&self, x: u64) -> [usize; 2] {
        let mut h = [0u64; 2];
        self.fam.eval_into(x, &mut h).expect("key checked by caller");
        [h[0] as usize, h[1] as usize]
    }

    pub fn insert(&mut self, x: u64) -> Result<InsertOutcome> {
        check_key(x)?;
        if self.contains(x)? {
            return Err(Error::Input(format!("key {x} is already stored")));
        }
        let [a, b] = self.slots(x);
        if self.tables[0][a].is_none() {
            self.tables[0][a] = Some(x);
            self.len += 1;
            return Ok(InsertOutcome::Placed);
        }
        if self.tables[1][b].is_none() {
            self.tables[1][b] = Some(x);
            self.len += 1;
            return Ok(InsertOutcome::Placed);
        }

        // evict along alternating tables, starting with table 1
        let mut cur = x;
        let mut side = 0;
        let mut path = Vec::new();
        for _ in 0..self.max_loop {
            let slot = self.slots(cur)[side];
            path.push((side, slot));
            match self.tables[side][slot].replace(cur) {
                None => {
                    self.len += 1;
                    return Ok(InsertOutcome::Placed);
                }
                Some(evicted) => cur = evicted,
            }
            side ^= 1;
        }

        if self.stash.len() < self.stash_capacity {
            self.stash.push(cur);
            self.len += 1;
            return Ok(InsertOutcome::PlacedViaStash);
        }
        for &(side, slot) in path.iter().rev() {
            cur = self.tables[side][slot].replace(cur).expect("slot on the eviction path is occupied");
        }
        debug_assert_eq!(cur, x);
        Ok(InsertOutcome::RehashNeeded)
    }

    /// Two probes plus a stash scan.
    pub fn contains(&self, x: u64) -> Result<bool> {
        check_key(x)?;
        let [a, b] = self.slots(x);
        Ok(self.tables[0][a] == Some(x) || self.tables[1][b] == Some(x) || self.stash.contains(&x))
    }

    pub fn remove(&mut self, x: u64) -> Result<bool> {
        check_key(x)?;
        let [a, b] = self.slots(x);
        let removed = if self.tables[0][a] == Some(x) {
            self.tables[0][a] = None;
            true
        } else if self.tables[1][b] == Some(x) {
            self.tables[1][b] = None;
            true
        } else if let Some(pos) = self.stash.iter().position(|&y| y == x) {
            self.stash.swap_remove(pos);
            true
        } else {
            false
        };
        if removed {
            self.len -= 1;
        }
        Ok(removed)
    }

    /// Full scan of the placement invariant: every stored key sits at one of
    /// its two cells or in the stash, at most once, and the stash fits.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut seen = std::collections::HashSet::new();
        for side in 0..2 {
            for (slot, cell) in self.tables[side].iter().enumerate() {
                if let Some(x) = *cell {
                    if self.slots(x)[side] != slot {
                        return Err(format!("key {x} in table {} slot {slot} does not hash there", side + 1));
                    }
                    if !seen.insert(x) {
                        return Err(format!("key {x} stored twice"));
                    }
                }
            }
        }
        if self.stash.len() > self.stash_capacity {
            return Err(format!("stash holds {} > {} keys", self.stash.len(), self.stash_capacity));
        }
        for &x in &self.stash {
            if !seen.insert(x) {
                return Err(format!("key {x} stored twice"));
            }
        }
        if seen.len() != self.len {
            return Err(format!("length {} but {} keys stored", self.len, seen.len()));
        }
        Ok(())
    }
}

/// Whether `keys` can be stored under `fam` with a stash of `s` keys, i.e.
/// `ex(G(S, h_1, h_2)) <= s`.
pub fn suitable(keys: &[u64], fam: &ZFamily, s: u64) -> Result<bool> {
    if fam.params().d != 2 {
        return Err(param("suitability for cuckoo hashing needs d = 2"));
    }
    Ok(LabeledHypergraph::build(fam, keys)?.excess()? <= s)
}
