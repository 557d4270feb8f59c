//! Brute-force reference implementations.
//!
//! These are deliberately naive and share no code with the production paths
//! they check. They are used by tests only and refuse inputs beyond
//! [`OracleBudget`].

use std::collections::{BTreeSet, VecDeque};

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::gcuckoo::GCuckooTable;
use crate::hashfam::PRIME;
use crate::hypergraph::LabeledHypergraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    /// Exhaustive edge-subset searches.
    pub max_edges: usize,
    /// Matching-based orientability.
    pub max_matching_edges: usize,
    /// Shadow dictionary models.
    pub max_keys: usize,
}

pub const BUDGET: OracleBudget = OracleBudget { max_edges: 12, max_matching_edges: 1000, max_keys: 10_000 };

fn over(what: &str, got: usize, limit: usize) -> Error {
    Error::OverBudget(format!("{what}: {got} > {limit}"))
}

/// Edge lists as sets of `(part, vertex)` pairs.
fn edge_vertex_sets(g: &LabeledHypergraph) -> Vec<Vec<(usize, u32)>> {
    (0..g.edge_count())
        .map(|i| g.edge(i).iter().enumerate().map(|(p, &v)| (p, v)).collect())
        .collect()
}

/// `(vertices, edges)` of every connected component of the sub-hypergraph
/// spanned by `chosen`, by repeated depth-first search.
fn component_sizes(edges: &[Vec<(usize, u32)>], chosen: &[usize]) -> Vec<(usize, usize)> {
    let mut done = vec![false; chosen.len()];
    let mut out = Vec::new();
    for start in 0..chosen.len() {
        if done[start] {
            continue;
        }
        done[start] = true;
        let mut stack = vec![start];
        let mut verts = BTreeSet::new();
        let mut count = 0;
        while let Some(a) = stack.pop() {
            count += 1;
            for v in &edges[chosen[a]] {
                verts.insert(*v);
            }
            for b in 0..chosen.len() {
                if !done[b] && edges[chosen[b]].iter().any(|v| edges[chosen[a]].contains(v)) {
                    done[b] = true;
                    stack.push(b);
                }
            }
        }
        out.push((verts.len(), count));
    }
    out
}

/// Minimum number of edges whose removal leaves every component with at
/// most one cycle, by trying removal sets of increasing size.
pub fn excess_bruteforce(g: &LabeledHypergraph) -> Result<u64> {
    let n = g.edge_count();
    if n > BUDGET.max_edges {
        return Err(over("excess_bruteforce edges", n, BUDGET.max_edges));
    }
    if g.arity() != 2 {
        return Err(Error::Unsupported("excess oracle needs d = 2".into()));
    }
    let edges = edge_vertex_sets(g);
    let mut best = u64::MAX;
    for removed in 0u32..(1 << n) {
        let k = removed.count_ones() as u64;
        if k >= best {
            continue;
        }
        let kept: Vec<usize> = (0..n).filter(|&i| removed & (1 << i) == 0).collect();
        if component_sizes(&edges, &kept).iter().all(|&(v, e)| e <= v) {
            best = k;
        }
    }
    Ok(best)
}

/// Whether some connected edge subset has at least two independent cycles
/// (`edges >= vertices + 1`), by enumerating all edge subsets.
pub fn has_bicyclic_subgraph(g: &LabeledHypergraph) -> Result<bool> {
    let n = g.edge_count();
    if n > BUDGET.max_edges {
        return Err(over("has_bicyclic_subgraph edges", n, BUDGET.max_edges));
    }
    if g.arity() != 2 {
        return Err(Error::Unsupported("bicyclic oracle needs d = 2".into()));
    }
    let edges = edge_vertex_sets(g);
    for subset in 1u32..(1 << n) {
        let chosen: Vec<usize> = (0..n).filter(|&i| subset & (1 << i) != 0).collect();
        let comps = component_sizes(&edges, &chosen);
        if comps.len() == 1 && comps[0].1 > comps[0].0 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether a system of distinct representatives exists: every edge matched
/// to one of its own vertices, no vertex used twice. Kuhn's augmenting-path
/// algorithm on the edge/vertex incidence graph.
pub fn orientability_matching(g: &LabeledHypergraph) -> Result<bool> {
    let n = g.edge_count();
    if n > BUDGET.max_matching_edges {
        return Err(over("orientability_matching edges", n, BUDGET.max_matching_edges));
    }
    let edges = edge_vertex_sets(g);
    let mut matched_to: std::collections::HashMap<(usize, u32), usize> = Default::default();

    fn augment(
        e: usize,
        edges: &[Vec<(usize, u32)>],
        visited: &mut BTreeSet<(usize, u32)>,
        matched_to: &mut std::collections::HashMap<(usize, u32), usize>,
    ) -> bool {
        for &v in &edges[e] {
            if !visited.insert(v) {
                continue;
            }
            let free = match matched_to.get(&v) {
                None => true,
                Some(&other) => augment(other, edges, visited, matched_to),
            };
            if free {
                matched_to.insert(v, e);
                return true;
            }
        }
        false
    }

    for e in 0..n {
        let mut visited = BTreeSet::new();
        if !augment(e, &edges, &mut visited, &mut matched_to) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// 2-core by repeated full rescans: drop every edge touching a degree-1
/// vertex until a pass removes nothing. Returns surviving edge indices.
pub fn two_core_by_rescan(g: &LabeledHypergraph) -> Vec<usize> {
    let edges = edge_vertex_sets(g);
    let mut alive: Vec<usize> = (0..edges.len()).collect();
    loop {
        let mut degree: std::collections::HashMap<(usize, u32), usize> = Default::default();
        for &e in &alive {
            for v in &edges[e] {
                *degree.entry(*v).or_default() += 1;
            }
        }
        let before = alive.len();
        alive.retain(|&e| edges[e].iter().all(|v| degree[v] >= 2));
        if alive.len() == before {
            return alive;
        }
    }
}

/// `((sum_i coeffs[i] * x^i) mod p) mod range` in arbitrary precision.
pub fn poly_eval_wide(coeffs: &[u64], x: u64, range: u64) -> u64 {
    let x = BigUint::from(x);
    let mut sum = BigUint::from(0u32);
    let mut power = BigUint::from(1u32);
    for &a in coeffs {
        sum += BigUint::from(a) * &power;
        power *= &x;
    }
    let v = (sum % BigUint::from(PRIME)) % BigUint::from(range);
    u64::try_from(v).expect("reduced below a u64 range")
}

/// Shortest eviction distance from every cell to a free cell in the cuckoo
/// allocation graph (cell of key x -> the other d-1 cells of x), computed by
/// a breadth-first search from each cell. `None` when no free cell is
/// reachable. Indexed `[table * m + slot]`.
pub fn free_distances(table: &GCuckooTable) -> Result<Vec<Option<u32>>> {
    let d = table.arity();
    let m = table.table_size() as usize;
    if d * m > BUDGET.max_keys {
        return Err(over("free_distances cells", d * m, BUDGET.max_keys));
    }
    let successors = |cell: usize| -> Result<Vec<usize>> {
        let (j, i) = (cell / m, cell % m);
        match table.occupant(j, i as u64) {
            None => Ok(Vec::new()),
            Some(x) => {
                let h = table.candidates(x)?;
                Ok((0..d).filter(|&jj| jj != j).map(|jj| jj * m + h[jj] as usize).collect())
            }
        }
    };
    let mut out = Vec::with_capacity(d * m);
    for start in 0..d * m {
        let mut dist = vec![u32::MAX; d * m];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        let mut found = None;
        while let Some(u) = queue.pop_front() {
            if table.occupant(u / m, (u % m) as u64).is_none() {
                found = Some(dist[u]);
                break;
            }
            for v in successors(u)? {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        out.push(found);
    }
    Ok(out)
}

/// Reference dictionary: a plain ordered set with a size budget.
#[derive(Clone, Debug, Default)]
pub struct ShadowSet {
    keys: BTreeSet<u64>,
}

impl ShadowSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, x: u64) -> Result<bool> {
        if self.keys.len() >= BUDGET.max_keys && !self.keys.contains(&x) {
            return Err(over("shadow set keys", self.keys.len() + 1, BUDGET.max_keys));
        }
        Ok(self.keys.insert(x))
    }

    pub fn remove(&mut self, x: u64) -> bool {
        self.keys.remove(&x)
    }

    pub fn contains(&self, x: u64) -> bool {
        self.keys.contains(&x)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.keys.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2(edges: &[(u64, u64)]) -> LabeledHypergraph {
        LabeledHypergraph::from_edges(2, 8, &edges.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn excess_oracle_examples() {
        assert_eq!(excess_bruteforce(&g2(&[(0, 0), (1, 0), (1, 1)])).unwrap(), 0);
        let chord = g2(&[(0, 0), (0, 1), (1, 1), (1, 0), (0, 2), (1, 2)]);
        assert_eq!(excess_bruteforce(&chord).unwrap(), 1);
        let big = g2(&vec![(0, 0); 13]);
        assert!(matches!(excess_bruteforce(&big), Err(Error::OverBudget(_))));
    }

    #[test]
    fn matching_oracle_examples() {
        let tree = LabeledHypergraph::from_edges(3, 4, &[vec![0, 0, 0], vec![0, 1, 1]]).unwrap();
        assert!(orientability_matching(&tree).unwrap());
        let three = LabeledHypergraph::from_edges(3, 1, &vec![vec![0, 0, 0]; 3]).unwrap();
        assert!(orientability_matching(&three).unwrap());
        let four = LabeledHypergraph::from_edges(3, 1, &vec![vec![0, 0, 0]; 4]).unwrap();
        assert!(!orientability_matching(&four).unwrap());
    }

    #[test]
    fn bicyclic_oracle_examples() {
        assert!(!has_bicyclic_subgraph(&g2(&[(0, 0), (0, 0)])).unwrap());
        assert!(has_bicyclic_subgraph(&g2(&[(0, 0), (0, 0), (0, 0)])).unwrap());
    }

    #[test]
    fn wide_eval() {
        assert_eq!(poly_eval_wide(&[5], 99, 3), 2);
        assert_eq!(poly_eval_wide(&[1, 1], PRIME - 1, u64::MAX), 0);
    }

    #[test]
    fn shadow_set() {
        let mut s = ShadowSet::new();
        assert!(s.insert(3).unwrap());
        assert!(!s.insert(3).unwrap());
        assert!(s.contains(3));
        assert!(s.remove(3));
        assert!(s.is_empty());
    }
}
