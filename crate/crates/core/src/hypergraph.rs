//! The labeled d-partite hypergraph `G(S, h)`.
//!
//! Vertices live in `d` disjoint copies of `[m]`; edge `i` is the tuple
//! `(h_1(x), ..., h_d(x))` of the `i`-th smallest key `x`, labeled `i + 1`.
//! Isolated vertices are never counted. Cycle structure is measured on the
//! bipartite representation, so a connected component with `e` edges and `v`
//! vertices has cyclomatic number `(d - 1) e - v + 1`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::io::{self, Write};

use petgraph::unionfind::UnionFind;

use crate::error::{param, Error, Result};
use crate::zclass::HashSequence;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledHypergraph {
    d: usize,
    m: u64,
    /// Sorted keys; edge `i` belongs to `keys[i]`.
    keys: Vec<u64>,
    /// `verts[i * d + p]` is the vertex of edge `i` in part `p`.
    verts: Vec<u32>,
}

impl LabeledHypergraph {
    /// Builds `G(S, h)`. Keys are sorted first so labels follow key order.
    pub fn build<H: HashSequence + ?Sized>(h: &H, keys: &[u64]) -> Result<Self> {
        let d = h.arity();
        let m = h.range();
        check_shape(d, m)?;
        let mut sorted = keys.to_vec();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Input(format!("duplicate key {}", w[0])));
        }
        let mut verts = vec![0u32; sorted.len() * d];
        let mut buf = vec![0u64; d];
        for (i, &x) in sorted.iter().enumerate() {
            h.hash_into(x, &mut buf)?;
            for (slot, &v) in verts[i * d..(i + 1) * d].iter_mut().zip(&buf) {
                *slot = v as u32;
            }
        }
        Ok(LabeledHypergraph { d, m, keys: sorted, verts })
    }

    /// Graph from explicit edges; edge `i` gets key `i` and label `i + 1`.
    pub fn from_edges(d: usize, m: u64, edges: &[Vec<u64>]) -> Result<Self> {
        check_shape(d, m)?;
        let mut verts = Vec::with_capacity(edges.len() * d);
        for e in edges {
            if e.len() != d {
                return Err(Error::Input(format!("edge {e:?} does not have {d} vertices")));
            }
            if let Some(&v) = e.iter().find(|&&v| v >= m) {
                return Err(Error::Input(format!("vertex {v} out of range [0, {m})")));
            }
            verts.extend(e.iter().map(|&v| v as u32));
        }
        Ok(LabeledHypergraph { d, m, keys: (0..edges.len() as u64).collect(), verts })
    }

    pub fn arity(&self) -> usize {
        self.d
    }

    /// Vertices per part.
    pub fn part_size(&self) -> u64 {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    /// Per-part vertex ids of edge `i`.
    pub fn edge(&self, i: usize) -> &[u32] {
        &self.verts[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> usize {
        i + 1
    }

    /// Global id of vertex `v` in part `p`; ordering of global ids is the
    /// `(part, vertex)` order.
    pub fn global(&self, part: usize, v: u32) -> usize {
        part * self.m as usize + v as usize
    }

    /// `(part, vertex)` of a global id.
    pub fn local(&self, global: usize) -> (usize, u32) {
        (global / self.m as usize, (global % self.m as usize) as u32)
    }

    fn global_edge(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edge(i).iter().enumerate().map(move |(p, &v)| self.global(p, v))
    }

    fn vertex_total(&self) -> usize {
        self.d * self.m as usize
    }

    fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.vertex_total()];
        for i in 0..self.edge_count() {
            for g in self.global_edge(i) {
                deg[g] += 1;
            }
        }
        deg
    }

    /// Connected components (ordered by their smallest edge index).
    pub fn components(&self) -> Components {
        let n = self.edge_count();
        let deg = self.degrees();
        let mut uf = UnionFind::<usize>::new(self.vertex_total());
        for i in 0..n {
            let mut it = self.global_edge(i);
            let first = it.next().expect("d >= 2");
            for g in it {
                uf.union(first, g);
            }
        }
        let mut slot_of_root = std::collections::HashMap::new();
        let mut summaries: Vec<ComponentSummary> = Vec::new();
        let mut edge_component = Vec::with_capacity(n);
        for i in 0..n {
            let root = uf.find(self.global(0, self.edge(i)[0]));
            let next = summaries.len();
            let slot = *slot_of_root.entry(root).or_insert(next);
            if slot == next {
                summaries.push(ComponentSummary::default());
            }
            let s = &mut summaries[slot];
            s.edge_count += 1;
            if self.global_edge(i).any(|g| deg[g] == 1) {
                s.leaf_edge_count += 1;
            }
            edge_component.push(slot);
        }
        for (g, &dg) in deg.iter().enumerate() {
            if dg > 0 {
                summaries[slot_of_root[&uf.find(g)]].vertex_count += 1;
            }
        }
        for s in &mut summaries {
            s.finish(self.d);
        }
        Components { summaries, edge_component }
    }

    /// `ex(G) = gamma(G) - (number of cyclic components)`; only defined for
    /// ordinary graphs (`d = 2`).
    pub fn excess(&self) -> Result<u64> {
        if self.d != 2 {
            return Err(Error::Unsupported(format!("excess is defined for d = 2, got d = {}", self.d)));
        }
        Ok(self
            .components()
            .summaries
            .iter()
            .map(|s| s.cyclomatic.saturating_sub(1))
            .sum())
    }

    /// Peels edges incident to a degree-1 vertex until none is left. Among
    /// several degree-1 vertices the smallest `(part, vertex)` goes first.
    pub fn peel(&self) -> Peeling {
        let n = self.edge_count();
        let mut deg = self.degrees();
        // xor of the indices of live incident edges; names the last one
        let mut xor = vec![0usize; deg.len()];
        for i in 0..n {
            for g in self.global_edge(i) {
                xor[g] ^= i;
            }
        }
        let mut heap: BinaryHeap<Reverse<usize>> = deg
            .iter()
            .enumerate()
            .filter(|&(_, &dg)| dg == 1)
            .map(|(g, _)| Reverse(g))
            .collect();
        let mut alive = vec![true; n];
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(v)) = heap.pop() {
            if deg[v] != 1 {
                continue;
            }
            let e = xor[v];
            alive[e] = false;
            order.push(PeelStep { edge: e, vertex: v });
            for g in self.global_edge(e) {
                deg[g] -= 1;
                xor[g] ^= e;
                if deg[g] == 1 {
                    heap.push(Reverse(g));
                }
            }
        }
        let residual = (0..n).filter(|&i| alive[i]).collect();
        Peeling { order, residual }
    }

    /// Assigns every edge a distinct vertex of its own, if possible.
    ///
    /// Peeled edges are oriented to their peel vertex. What remains is the
    /// 2-core: for `d = 2` it is orientable exactly when it consists of pure
    /// cycles, which are oriented around the cycle; for `d >= 3` the core
    /// edges are placed by shortest eviction paths (breadth-first search).
    /// Returns edge -> global vertex id.
    pub fn one_orientation(&self) -> Option<Vec<usize>> {
        const UNSET: usize = usize::MAX;
        let peeling = self.peel();
        let mut target = vec![UNSET; self.edge_count()];
        for step in &peeling.order {
            target[step.edge] = step.vertex;
        }
        if peeling.residual.is_empty() {
            return Some(target);
        }
        if self.d == 2 {
            self.orient_cycles(&peeling.residual, &mut target)?;
        } else {
            self.orient_core_by_search(&peeling.residual, &mut target)?;
        }
        debug_assert!(target.iter().all(|&t| t != UNSET));
        Some(target)
    }

    fn orient_cycles(&self, residual: &[usize], target: &mut [usize]) -> Option<()> {
        let mut deg = vec![0u32; self.vertex_total()];
        let mut incident: std::collections::HashMap<usize, Vec<usize>> = Default::default();
        for &e in residual {
            for g in self.global_edge(e) {
                deg[g] += 1;
                incident.entry(g).or_default().push(e);
            }
        }
        // in a 2-core, all degrees equal to 2 <=> every component is a cycle
        if incident.keys().any(|&g| deg[g] != 2) {
            return None;
        }
        let mut done = vec![false; self.edge_count()];
        for &start in residual {
            if done[start] {
                continue;
            }
            let mut e = start;
            let mut head = self.global(1, self.edge(e)[1]);
            loop {
                done[e] = true;
                target[e] = head;
                let pair = &incident[&head];
                let next = if pair[0] == e { pair[1] } else { pair[0] };
                if next == start {
                    break;
                }
                let [a, b] = [self.global(0, self.edge(next)[0]), self.global(1, self.edge(next)[1])];
                head = if a == head { b } else { a };
                e = next;
            }
        }
        Some(())
    }

    fn orient_core_by_search(&self, residual: &[usize], target: &mut [usize]) -> Option<()> {
        const NONE: usize = usize::MAX;
        // owner[v] = core edge currently oriented to v
        let mut owner = vec![NONE; self.vertex_total()];
        let mut parent_vertex = vec![NONE; self.vertex_total()];
        let mut seen_epoch = vec![0u32; self.vertex_total()];
        let mut epoch = 0u32;
        for &e in residual {
            epoch += 1;
            let mut queue = VecDeque::new();
            for g in self.global_edge(e) {
                seen_epoch[g] = epoch;
                parent_vertex[g] = NONE;
                queue.push_back(g);
            }
            let mut free = None;
            while let Some(v) = queue.pop_front() {
                if owner[v] == NONE {
                    free = Some(v);
                    break;
                }
                for u in self.global_edge(owner[v]) {
                    if seen_epoch[u] != epoch {
                        seen_epoch[u] = epoch;
                        parent_vertex[u] = v;
                        queue.push_back(u);
                    }
                }
            }
            // shift occupants one step along the path back to e
            let mut v = free?;
            while parent_vertex[v] != NONE {
                let p = parent_vertex[v];
                let moved = owner[p];
                owner[v] = moved;
                target[moved] = v;
                v = p;
            }
            owner[v] = e;
            target[e] = v;
        }
        Some(())
    }

    /// Whether `targets` is an injective edge -> incident-vertex map.
    pub fn is_valid_orientation(&self, targets: &[usize]) -> bool {
        if targets.len() != self.edge_count() {
            return false;
        }
        let mut used = vec![false; self.vertex_total()];
        for (e, &t) in targets.iter().enumerate() {
            if t >= used.len() || used[t] || !self.global_edge(e).any(|g| g == t) {
                return false;
            }
            used[t] = true;
        }
        true
    }

    pub fn detect_obstructions(&self) -> Obstructions {
        let has_complex = self.components().summaries.iter().any(|s| s.is_complex);
        Obstructions { has_mog: self.d == 2 && has_complex, has_complex }
    }

    /// One edge per line: `label v_1 ... v_d` (per-part vertex ids).
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        for i in 0..self.edge_count() {
            write!(w, "{}", self.label(i))?;
            for v in self.edge(i) {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn check_shape(d: usize, m: u64) -> Result<()> {
    if d < 2 {
        return Err(param(format!("hypergraph arity must be at least 2, got {d}")));
    }
    if m == 0 || m > u32::MAX as u64 {
        return Err(param(format!("part size must lie in 1..=2^32-1, got {m}")));
    }
    if (d as u128) * (m as u128) > isize::MAX as u128 / 8 {
        return Err(param("vertex set too large"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ComponentSummary {
    pub vertex_count: u64,
    pub edge_count: u64,
    /// Cyclomatic number of the bipartite representation.
    pub cyclomatic: u64,
    pub is_cyclic: bool,
    /// `(d - 1) * edges > vertices`, i.e. at least two independent cycles.
    pub is_complex: bool,
    /// Edges containing at least one vertex of degree 1.
    pub leaf_edge_count: u64,
}

impl ComponentSummary {
    fn finish(&mut self, d: usize) {
        let weighted = (d as u64 - 1) * self.edge_count;
        self.cyclomatic = (weighted + 1).saturating_sub(self.vertex_count);
        self.is_cyclic = self.cyclomatic >= 1;
        self.is_complex = weighted > self.vertex_count;
    }

    /// `edges - vertices`, the quantity bounded for sparse graphs.
    pub fn surplus(&self) -> i64 {
        self.edge_count as i64 - self.vertex_count as i64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    pub summaries: Vec<ComponentSummary>,
    /// Component index of every edge.
    pub edge_component: Vec<usize>,
}

impl Components {
    pub fn cyclomatic_total(&self) -> u64 {
        self.summaries.iter().map(|s| s.cyclomatic).sum()
    }

    pub fn cyclic_count(&self) -> u64 {
        self.summaries.iter().filter(|s| s.is_cyclic).count() as u64
    }

    pub fn max_vertex_count(&self) -> u64 {
        self.summaries.iter().map(|s| s.vertex_count).max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeelStep {
    pub edge: usize,
    /// Global id of the degree-1 vertex the edge was peeled at.
    pub vertex: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Peeling {
    pub order: Vec<PeelStep>,
    /// Edges of the 2-core, ascending.
    pub residual: Vec<usize>,
}

impl Peeling {
    pub fn is_complete(&self) -> bool {
        self.residual.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Obstructions {
    /// Cycle with a chord or two cycles joined by a path (`d = 2` only).
    pub has_mog: bool,
    pub has_complex: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;
    use crate::prng::Prng;
    use crate::zclass::{FullyRandom, ZFamily, ZParams};
    use proptest::prelude::*;
    use rand::Rng;

    fn graph(edges: &[(u64, u64)]) -> LabeledHypergraph {
        let m = edges.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0) + 1;
        LabeledHypergraph::from_edges(2, m, &edges.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>()).unwrap()
    }

    fn random_graph(prng: &mut Prng, d: usize, m: u64, edges: usize) -> LabeledHypergraph {
        let e: Vec<Vec<u64>> = (0..edges).map(|_| (0..d).map(|_| prng.random_range(0..m)).collect()).collect();
        LabeledHypergraph::from_edges(d, m, &e).unwrap()
    }

    // four-cycle in a bipartite graph: left {0,1}, right {0,1}
    fn four_cycle() -> LabeledHypergraph {
        graph(&[(0, 0), (0, 1), (1, 1), (1, 0)])
    }

    fn cycle_with_chord() -> LabeledHypergraph {
        graph(&[(0, 0), (0, 1), (1, 1), (1, 0), (0, 2), (1, 2)])
    }

    #[test]
    fn empty_key_set() {
        let h = FullyRandom::new(1, 2, 10).unwrap();
        let g = LabeledHypergraph::build(&h, &[]).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(g.components().summaries.is_empty());
        assert_eq!(g.excess().unwrap(), 0);
    }

    #[test]
    fn build_sorts_labels_and_rejects_duplicates() {
        let fam = ZFamily::draw(&mut Prng::new(1), ZParams::new(2, 3, 2, 8, 20).unwrap()).unwrap();
        let g = LabeledHypergraph::build(&fam, &[30, 10, 20]).unwrap();
        assert_eq!(g.keys(), &[10, 20, 30]);
        assert_eq!(g.edge_count(), 3);
        for i in 0..3 {
            let want: Vec<u32> = fam.eval(g.keys()[i]).unwrap().iter().map(|&v| v as u32).collect();
            assert_eq!(g.edge(i), &want[..]);
            assert_eq!(g.label(i), i + 1);
        }
        assert!(matches!(LabeledHypergraph::build(&fam, &[1, 2, 1]), Err(Error::Input(_))));
    }

    #[test]
    fn doubled_edge_is_one_cycle() {
        let g = graph(&[(0, 1), (0, 1)]);
        let c = g.components();
        assert_eq!(c.summaries.len(), 1);
        assert_eq!(c.summaries[0].cyclomatic, 1);
        assert_eq!(c.summaries[0].vertex_count, 2);
    }

    #[test]
    fn four_cycle_summary() {
        let c = four_cycle().components();
        assert_eq!(c.summaries.len(), 1);
        let s = c.summaries[0];
        assert_eq!((s.cyclomatic, s.is_cyclic, s.is_complex, s.leaf_edge_count), (1, true, false, 0));
    }

    #[test]
    fn path_summary() {
        // L0 - R0 - L1 - R1
        let s = graph(&[(0, 0), (1, 0), (1, 1)]).components().summaries[0];
        assert_eq!((s.cyclomatic, s.leaf_edge_count, s.vertex_count), (0, 2, 4));
    }

    #[test]
    fn chord_gives_two_cycles() {
        // 5 edges on 4 vertices
        let s = graph(&[(0, 0), (0, 1), (1, 1), (1, 0), (0, 0)]).components().summaries[0];
        assert_eq!(s.cyclomatic, 2);
        assert!(s.is_complex);
    }

    #[test]
    fn excess_examples() {
        assert_eq!(graph(&[(0, 0), (1, 0), (2, 1)]).excess().unwrap(), 0);
        let two_cycles = graph(&[(0, 0), (0, 0), (1, 1), (1, 1)]);
        assert_eq!(two_cycles.components().cyclic_count(), 2);
        assert_eq!(two_cycles.excess().unwrap(), 0);
        let chord = cycle_with_chord();
        assert_eq!(chord.excess().unwrap(), 1);
        assert_eq!(oracles::excess_bruteforce(&chord).unwrap(), 1);
        let h3 = LabeledHypergraph::from_edges(3, 2, &[vec![0, 0, 0]]).unwrap();
        assert!(matches!(h3.excess(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn peel_tree_and_cycle() {
        let tree = graph(&[(0, 0), (1, 0), (1, 1), (2, 1)]);
        let p = tree.peel();
        assert!(p.is_complete());
        assert_eq!(p.order.len(), 4);
        let p = four_cycle().peel();
        assert!(p.order.is_empty());
        assert_eq!(p.residual, vec![0, 1, 2, 3]);
    }

    #[test]
    fn peel_prefers_smallest_vertex() {
        // two disjoint single edges: first peel happens at global vertex 0
        let g = graph(&[(1, 1), (0, 0)]);
        let p = g.peel();
        assert_eq!(p.order[0], PeelStep { edge: 1, vertex: 0 });
    }

    #[test]
    fn orientation_of_hypertree_and_cycle() {
        let tree = LabeledHypergraph::from_edges(3, 4, &[vec![0, 0, 0], vec![0, 1, 1], vec![1, 1, 2]]).unwrap();
        let t = tree.one_orientation().unwrap();
        assert!(tree.is_valid_orientation(&t));
        let p = tree.peel();
        for s in p.order {
            assert_eq!(t[s.edge], s.vertex);
        }
        let cyc = four_cycle();
        let t = cyc.one_orientation().unwrap();
        assert!(cyc.is_valid_orientation(&t));
        assert!(cycle_with_chord().one_orientation().is_none());
    }

    #[test]
    fn complex_but_orientable_hypergraph() {
        // three d=3 edges sharing parts 0 and 1: complex, yet each edge has
        // its own vertex in part 2
        let g = LabeledHypergraph::from_edges(3, 3, &[vec![0, 0, 0], vec![0, 0, 1], vec![0, 0, 2]]).unwrap();
        assert!(g.detect_obstructions().has_complex);
        assert!(g.one_orientation().is_some());
        let g = LabeledHypergraph::from_edges(3, 1, &vec![vec![0, 0, 0]; 4]).unwrap();
        assert!(g.one_orientation().is_none());
    }

    #[test]
    fn obstruction_examples() {
        // two cycles joined by a path
        let dumbbell = graph(&[(0, 0), (0, 0), (1, 0), (1, 1), (1, 1)]);
        let o = dumbbell.detect_obstructions();
        assert!(o.has_mog && o.has_complex);
        let unicyclic = graph(&[(0, 0), (0, 1), (1, 1), (1, 0), (2, 0)]);
        assert_eq!(unicyclic.detect_obstructions(), Obstructions { has_mog: false, has_complex: false });
    }

    #[test]
    fn text_dump() {
        let g = graph(&[(3, 1), (0, 2)]);
        let mut out = Vec::new();
        g.write_text(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1 3 1\n2 0 2\n");
    }

    #[test]
    fn random_acyclic_graphs_peel_fully() {
        let mut prng = Prng::new(77);
        let mut checked = 0;
        while checked < 50 {
            let g = random_graph(&mut prng, 2, 60, 25);
            if g.components().cyclomatic_total() != 0 {
                continue;
            }
            checked += 1;
            assert!(g.peel().is_complete());
            assert!(oracles::two_core_by_rescan(&g).is_empty());
        }
    }

    #[test]
    fn excess_agrees_with_bruteforce() {
        let mut prng = Prng::new(5);
        for _ in 0..100 {
            let edges = prng.random_range(1..=10);
            let g = random_graph(&mut prng, 2, 4, edges);
            assert_eq!(g.excess().unwrap(), oracles::excess_bruteforce(&g).unwrap());
        }
    }

    proptest! {
        #[test]
        fn structural_invariants(seed: u64, d in 2usize..5, m in 1u64..12, edges in 0usize..40) {
            let g = random_graph(&mut Prng::new(seed), d, m, edges);
            let comps = g.components();
            prop_assert_eq!(comps.summaries.iter().map(|s| s.edge_count).sum::<u64>(), edges as u64);
            prop_assert_eq!(comps.edge_component.len(), edges);
            for s in &comps.summaries {
                prop_assert!((d as u64 - 1) * s.edge_count + 1 >= s.vertex_count);
            }

            let peel = g.peel();
            prop_assert_eq!(peel.order.len() + peel.residual.len(), edges);
            prop_assert_eq!(oracles::two_core_by_rescan(&g), peel.residual.clone());
            let mut deg = std::collections::HashMap::new();
            for &e in &peel.residual {
                for (p, &v) in g.edge(e).iter().enumerate() {
                    *deg.entry((p, v)).or_insert(0) += 1;
                }
            }
            prop_assert!(deg.values().all(|&k| k >= 2));

            let obs = g.detect_obstructions();
            let orientation = g.one_orientation();
            if let Some(t) = &orientation {
                prop_assert!(g.is_valid_orientation(t));
            }
            if !obs.has_complex {
                prop_assert!(orientation.is_some());
            }
            if d == 2 {
                prop_assert_eq!(orientation.is_some(), !obs.has_complex);
                prop_assert_eq!(g.excess().unwrap() == 0, !obs.has_mog);
            }
        }

        #[test]
        fn orientation_matches_matching_oracle(seed: u64, d in 2usize..5, m in 1u64..8, edges in 0usize..13) {
            let g = random_graph(&mut Prng::new(seed), d, m, edges);
            prop_assert_eq!(g.one_orientation().is_some(), oracles::orientability_matching(&g).unwrap());
        }

        #[test]
        fn mog_matches_exhaustive_search(seed: u64, m in 1u64..6, edges in 0usize..13) {
            let g = random_graph(&mut Prng::new(seed), 2, m, edges);
            prop_assert_eq!(g.detect_obstructions().has_mog, oracles::has_bicyclic_subgraph(&g).unwrap());
        }
    }
}
