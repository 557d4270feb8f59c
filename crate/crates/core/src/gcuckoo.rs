//! Generalized cuckoo hashing with `d` tables and label-guided insertion.
//!
//! Every cell `(j, i)` carries a label `l(j, i)`, initially 0. A key goes to
//! the candidate cell with the smallest label (lowest table index on ties);
//! if that cell is occupied the occupant is evicted and reinserted the same
//! way, after the cell's label has been updated:
//!
//! * Khosla: `l(j, h_j(x)) <- min_{j' != j} l(j', h_{j'}(x)) + 1`, a lower
//!   bound on the eviction distance to a free cell;
//! * Eppstein et al.: `l(j, h_j(x)) <- l(j, h_j(x)) + 1`, the cell's wear.

use crate::error::{param, Error, Result};
use crate::hashfam::check_key;
use crate::hypergraph::LabeledHypergraph;
use crate::prng::Prng;
use crate::zclass::{ell_for, ZFamily, ZParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LabelMode {
    Khosla,
    Eppstein,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabeledInsert {
    Ok,
    /// A label reached the abort threshold (or the move cap was hit). The
    /// key `homeless` is no longer stored; the table must be rebuilt.
    Aborted { homeless: u64 },
}

/// Default abort threshold: `ceil(4 log2 n)` for Khosla,
/// `ceil(log2 log2 n) + 10` for Eppstein et al.
pub fn default_max_label(mode: LabelMode, n: usize) -> u32 {
    let lg = (n.max(2) as f64).log2();
    match mode {
        LabelMode::Khosla => (4.0 * lg).ceil() as u32,
        LabelMode::Eppstein => lg.log2().max(0.0).ceil() as u32 + 10,
    }
}

#[derive(Clone, Debug)]
pub struct GCuckooTable {
    fam: ZFamily,
    d: usize,
    m: usize,
    /// `cells[j * m + i]`
    cells: Vec<Option<u64>>,
    labels: Vec<u32>,
    mode: LabelMode,
    max_label: u32,
    max_moves: u64,
    len: usize,
}

impl GCuckooTable {
    pub fn new(fam: ZFamily, mode: LabelMode, max_label: u32) -> Result<Self> {
        let d = fam.params().d;
        let m = fam.params().m as usize;
        if max_label == 0 {
            return Err(param("max_label must be at least 1"));
        }
        let cells = d * m;
        Ok(GCuckooTable {
            fam,
            d,
            m,
            cells: vec![None; cells],
            labels: vec![0; cells],
            mode,
            max_label,
            max_moves: (cells as u64).saturating_mul(max_label as u64).max(1024),
            len: 0,
        })
    }

    /// `d` tables of `m = ceil((1 + eps)(d - 1) n)` cells each, `ell =
    /// ceil(n^delta)`, default abort threshold.
    pub fn for_capacity(
        prng: &mut Prng,
        n: usize,
        d: usize,
        epsilon: f64,
        delta: f64,
        c: usize,
        mode: LabelMode,
    ) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(param(format!("epsilon must be positive, got {epsilon}")));
        }
        if d < 2 {
            return Err(param("need at least two tables"));
        }
        let m = ((1.0 + epsilon) * (d as f64 - 1.0) * n.max(1) as f64).ceil() as u64;
        let params = ZParams::new(c, d, 2, ell_for(n.max(1) as u64, delta)?, m)?;
        Self::new(ZFamily::draw(prng, params)?, mode, default_max_label(mode, n))
    }

    pub fn arity(&self) -> usize {
        self.d
    }

    pub fn table_size(&self) -> u64 {
        self.m as u64
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn family(&self) -> &ZFamily {
        &self.fam
    }

    /// Table `j` (0-based), slot `i`.
    pub fn occupant(&self, j: usize, i: u64) -> Option<u64> {
        self.cells[j * self.m + i as usize]
    }

    pub fn label(&self, j: usize, i: u64) -> u32 {
        self.labels[j * self.m + i as usize]
    }

    /// All labels, indexed `[j * m + i]`.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn max_label(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    pub fn candidates(&self, x: u64) -> Result<Vec<u64>> {
        self.fam.eval(x)
    }

    pub fn contains(&self, x: u64) -> Result<bool> {
        let h = self.candidates(x)?;
        Ok(h.iter().enumerate().any(|(j, &i)| self.occupant(j, i) == Some(x)))
    }

    pub fn insert_labeled(&mut self, x: u64) -> Result<LabeledInsert> {
        self.insert_labeled_observed(x, |_| {})
    }

    /// Like [`insert_labeled`](Self::insert_labeled), calling `observe` after
    /// every move (every write of a key into a cell).
    pub fn insert_labeled_observed<F: FnMut(&Self)>(&mut self, x: u64, mut observe: F) -> Result<LabeledInsert> {
        check_key(x)?;
        if self.contains(x)? {
            return Err(Error::Input(format!("key {x} is already stored")));
        }
        let mut h = vec![0u64; self.d];
        let mut cur = x;
        let mut moves = 0u64;
        loop {
            self.fam.eval_into(cur, &mut h)?;
            let cell_of = |j: usize| j * self.m + h[j] as usize;
            let j = (0..self.d)
                .min_by_key(|&j| (self.labels[cell_of(j)], j))
                .expect("d >= 2");
            let cell = cell_of(j);
            let evicted = self.cells[cell].replace(cur);
            let Some(y) = evicted else {
                self.len += 1;
                observe(self);
                return Ok(LabeledInsert::Ok);
            };
            self.labels[cell] = match self.mode {
                LabelMode::Khosla => {
                    (0..self.d)
                        .filter(|&jj| jj != j)
                        .map(|jj| self.labels[cell_of(jj)])
                        .min()
                        .expect("d >= 2")
                        + 1
                }
                LabelMode::Eppstein => self.labels[cell] + 1,
            };
            observe(self);
            moves += 1;
            if self.labels[cell] >= self.max_label || moves >= self.max_moves {
                return Ok(LabeledInsert::Aborted { homeless: y });
            }
            cur = y;
        }
    }

    /// Every stored key occupies one of its own candidate cells and no key
    /// is stored twice, i.e. the placement is a 1-orientation.
    pub fn is_valid_placement(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        let mut h = vec![0u64; self.d];
        for (cell, occ) in self.cells.iter().enumerate() {
            if let Some(x) = *occ {
                let (j, i) = (cell / self.m, cell % self.m);
                if self.fam.eval_into(x, &mut h).is_err() || h[j] as usize != i || !seen.insert(x) {
                    return false;
                }
            }
        }
        seen.len() == self.len
    }
}

/// Whether `keys` admit a 1-orientation in `G(S, h)` (every key gets its own
/// cell among its `d` candidates).
pub fn static_suitable(keys: &[u64], fam: &ZFamily) -> Result<bool> {
    if fam.params().d < 3 {
        return Err(param("generalized cuckoo suitability needs d >= 3; use cuckoo::suitable for d = 2"));
    }
    Ok(LabeledHypergraph::build(fam, keys)?.one_orientation().is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashfam::PolyHash;
    use crate::oracles;
    use crate::zclass::distinct_keys;

    /// d = 3, m slots, f_i = constants given, no z contribution.
    fn constant_family(m: u64, values: [u64; 3]) -> ZFamily {
        let params = ZParams::new(1, 3, 2, 1, m).unwrap();
        let f = values.iter().map(|&v| PolyHash::new(vec![v, 0], m).unwrap()).collect();
        let g = vec![PolyHash::new(vec![0, 0], 1).unwrap()];
        ZFamily::from_parts(params, f, g, vec![vec![0]; 3]).unwrap()
    }

    #[test]
    fn empty_table_places_in_table_one_without_label_change() {
        for mode in [LabelMode::Khosla, LabelMode::Eppstein] {
            let mut t = GCuckooTable::new(constant_family(4, [1, 2, 3]), mode, 10).unwrap();
            assert_eq!(t.max_label(), 0);
            assert_eq!(t.insert_labeled(5).unwrap(), LabeledInsert::Ok);
            assert_eq!(t.occupant(0, 1), Some(5));
            assert_eq!(t.max_label(), 0);
            assert!(matches!(t.insert_labeled(5), Err(Error::Input(_))));
        }
    }

    #[test]
    fn khosla_update_uses_min_of_other_cells() {
        let mut t = GCuckooTable::new(constant_family(4, [0, 0, 0]), LabelMode::Khosla, 100).unwrap();
        t.insert_labeled(1).unwrap();
        t.labels[0] = 1; // (table 1, slot 0)
        t.labels[4] = 2; // (table 2, slot 0)
        t.labels[8] = 5; // (table 3, slot 0)
        let mut first_label = None;
        t.insert_labeled_observed(2, |tbl| {
            first_label.get_or_insert(tbl.label(0, 0));
        })
        .unwrap();
        assert_eq!(first_label, Some(3));
    }

    #[test]
    fn eppstein_wear_counts_overwrites() {
        let mut t = GCuckooTable::new(constant_family(4, [0, 0, 0]), LabelMode::Eppstein, 100).unwrap();
        t.insert_labeled(1).unwrap();
        t.labels[0] = 4;
        t.labels[4] = 9;
        t.labels[8] = 9;
        let mut first_label = None;
        t.insert_labeled_observed(2, |tbl| {
            first_label.get_or_insert(tbl.label(0, 0));
        })
        .unwrap();
        assert_eq!(first_label, Some(5));
    }

    #[test]
    fn one_overwrite_gives_max_wear_one() {
        let mut t = GCuckooTable::new(constant_family(4, [0, 0, 0]), LabelMode::Eppstein, 100).unwrap();
        t.insert_labeled(1).unwrap();
        t.insert_labeled(2).unwrap();
        assert_eq!(t.max_label(), 1);
        assert!(t.is_valid_placement());
    }

    #[test]
    fn overfull_cells_abort() {
        // three cells, four keys
        for mode in [LabelMode::Khosla, LabelMode::Eppstein] {
            let mut t = GCuckooTable::new(constant_family(1, [0, 0, 0]), mode, 8).unwrap();
            for x in 1..=3 {
                assert_eq!(t.insert_labeled(x).unwrap(), LabeledInsert::Ok);
            }
            assert!(matches!(t.insert_labeled(4).unwrap(), LabeledInsert::Aborted { .. }));
        }
    }

    #[test]
    fn static_suitability_examples() {
        let mut keys: Vec<u64> = (0..30).collect();
        let fam = ZFamily::draw(&mut Prng::new(4), ZParams::new(2, 3, 2, 8, 1000).unwrap()).unwrap();
        // far below capacity, edges pairwise disjoint with high probability
        assert!(static_suitable(&keys, &fam).unwrap());
        let fam = constant_family(1, [0, 0, 0]);
        keys.truncate(3);
        assert!(static_suitable(&keys, &fam).unwrap());
        keys.push(3);
        assert!(!static_suitable(&keys, &fam).unwrap());
        let d2 = ZFamily::draw(&mut Prng::new(4), ZParams::new(2, 2, 2, 8, 10).unwrap()).unwrap();
        assert!(static_suitable(&keys, &d2).is_err());
    }

    #[test]
    fn static_suitability_agrees_with_matching_oracle() {
        let n = 300;
        for inst in 0..200u64 {
            let root = Prng::new(500 + inst);
            let keys = distinct_keys(&mut root.child(0), n);
            let d = 3 + (inst % 2) as usize;
            // around the orientability threshold of d-ary cuckoo hashing
            let load = [0.85, 0.9, 0.93, 0.97][(inst / 2 % 4) as usize];
            let m = (n as f64 / (load * d as f64)).ceil() as u64;
            let fam = ZFamily::draw(&mut root.child(1), ZParams::new(3, d, 2, 18, m).unwrap()).unwrap();
            let g = LabeledHypergraph::build(&fam, &keys).unwrap();
            assert_eq!(static_suitable(&keys, &fam).unwrap(), oracles::orientability_matching(&g).unwrap(), "instance {inst}");
        }
    }

    #[test]
    fn successful_inserts_form_a_valid_orientation() {
        for mode in [LabelMode::Khosla, LabelMode::Eppstein] {
            for seed in 0..10 {
                let root = Prng::new(seed);
                let mut t = GCuckooTable::for_capacity(&mut root.child(0), 2000, 3, 0.1, 0.5, 4, mode).unwrap();
                let keys = distinct_keys(&mut root.child(1), 2000);
                assert!(keys.iter().all(|&x| t.insert_labeled(x).unwrap() == LabeledInsert::Ok));
                assert!(t.is_valid_placement());
                assert_eq!(t.len(), 2000);
            }
        }
    }

    #[test]
    fn khosla_labels_never_exceed_free_distance() {
        for inst in 0..50u64 {
            let root = Prng::new(800 + inst);
            // dense: 24 cells, up to 22 keys
            let fam = ZFamily::draw(&mut root.child(0), ZParams::new(2, 3, 2, 4, 8).unwrap()).unwrap();
            let mut t = GCuckooTable::new(fam, LabelMode::Khosla, 64).unwrap();
            let keys = distinct_keys(&mut root.child(1), 22);
            let mut violation = None;
            for &x in &keys {
                let out = t
                    .insert_labeled_observed(x, |tbl| {
                        let dist = oracles::free_distances(tbl).unwrap();
                        for (cell, dv) in dist.iter().enumerate() {
                            let l = tbl.labels()[cell];
                            if let Some(dv) = dv {
                                if l > *dv && violation.is_none() {
                                    violation = Some((cell, l, *dv));
                                }
                            }
                        }
                    })
                    .unwrap();
                if out != LabeledInsert::Ok {
                    break;
                }
            }
            assert_eq!(violation, None, "instance {inst}");
        }
    }

    #[test]
    fn default_thresholds() {
        assert_eq!(default_max_label(LabelMode::Khosla, 1 << 10), 40);
        assert_eq!(default_max_label(LabelMode::Eppstein, 1 << 16), 14);
        assert_eq!(default_max_label(LabelMode::Eppstein, 1), 10);
    }
}
