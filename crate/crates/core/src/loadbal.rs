//! Parallel and sequential load balancing with `d` choices.
//!
//! `n` jobs are allocated to `n` machines split into `d` groups of `n / d`;
//! job `j` has candidate machine `h_i(j)` in group `i`.
//!
//! * [`run_collision`]: the tau-collision protocol. In every synchronous
//!   round each unassigned job requests all its candidates; a machine that
//!   receives at most `tau` requests in the round acknowledges all of them;
//!   a job with an acknowledgement is assigned to the acknowledging machine
//!   in the lowest group.
//! * [`run_goleft`]: jobs arrive one by one and join their least loaded
//!   candidate, the leftmost group winning ties.
//!
//! The calculators give the protocol parameters `(tau, t)` for which the
//! protocol finishes within `t` rounds with high probability, and the size
//! `j_t` of the witness trees used in that argument.

use crate::error::{param, Error, Result};
use crate::hypergraph::LabeledHypergraph;
use crate::zclass::HashSequence;

pub const DEFAULT_MAX_ROUNDS: u32 = 64;

fn check_layout<H: HashSequence + ?Sized>(h: &H, n: u64) -> Result<(usize, u64)> {
    let d = h.arity();
    if d == 0 || n % d as u64 != 0 {
        return Err(param(format!("{d} groups must divide {n} machines")));
    }
    let group = n / d as u64;
    if n > 0 && h.range() != group {
        return Err(param(format!("hash range {} must equal the group size {group}", h.range())));
    }
    Ok((d, group))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollisionRun {
    pub n: u64,
    pub d: usize,
    pub tau: u32,
    /// Round in which the last job was assigned; `None` if `max_rounds`
    /// passed with jobs left over.
    pub rounds_used: Option<u32>,
    /// Job -> global machine id `group * (n / d) + slot`.
    pub assignment: Vec<Option<u64>>,
    /// Job -> round (1-based) of its assignment.
    pub assigned_round: Vec<Option<u32>>,
    /// Unassigned jobs after each executed round.
    pub round_log: Vec<u64>,
}

impl CollisionRun {
    pub fn max_load(&self) -> u64 {
        let mut load = vec![0u64; self.n as usize];
        for m in self.assignment.iter().flatten() {
            load[*m as usize] += 1;
        }
        load.into_iter().max().unwrap_or(0)
    }
}

/// Runs the tau-collision protocol on jobs `0..n`.
pub fn run_collision<H: HashSequence + ?Sized>(h: &H, n: u64, tau: u32, max_rounds: u32) -> Result<CollisionRun> {
    let (d, group) = check_layout(h, n)?;
    if tau == 0 {
        return Err(param("tau must be at least 1"));
    }
    let jobs = n as usize;
    let mut cand = vec![0u64; jobs * d];
    for j in 0..jobs {
        let row = &mut cand[j * d..(j + 1) * d];
        h.hash_into(j as u64, row)?;
        for (i, v) in row.iter_mut().enumerate() {
            *v += i as u64 * group;
        }
    }
    let mut assignment = vec![None; jobs];
    let mut assigned_round = vec![None; jobs];
    let mut round_log = Vec::new();
    let mut pending: Vec<usize> = (0..jobs).collect();
    let mut requests = vec![0u32; jobs];
    let mut rounds_used = if pending.is_empty() { Some(0) } else { None };
    for round in 1..=max_rounds {
        if pending.is_empty() {
            break;
        }
        for &j in &pending {
            for &mach in &cand[j * d..(j + 1) * d] {
                requests[mach as usize] += 1;
            }
        }
        let mut still = Vec::with_capacity(pending.len());
        for &j in &pending {
            let row = &cand[j * d..(j + 1) * d];
            match row.iter().find(|&&mach| requests[mach as usize] <= tau) {
                Some(&mach) => {
                    assignment[j] = Some(mach);
                    assigned_round[j] = Some(round);
                }
                None => still.push(j),
            }
        }
        for &j in &pending {
            for &mach in &cand[j * d..(j + 1) * d] {
                requests[mach as usize] = 0;
            }
        }
        pending = still;
        round_log.push(pending.len() as u64);
        if pending.is_empty() {
            rounds_used = Some(round);
        }
    }
    Ok(CollisionRun { n, d, tau, rounds_used, assignment, assigned_round, round_log })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoLeftRun {
    pub n: u64,
    pub d: usize,
    /// Indexed by global machine id.
    pub loads: Vec<u32>,
    pub max_load: u32,
}

/// Sequential allocation of jobs `0..n`.
pub fn run_goleft<H: HashSequence + ?Sized>(h: &H, n: u64) -> Result<GoLeftRun> {
    let (d, group) = check_layout(h, n)?;
    let mut loads = vec![0u32; n as usize];
    let mut row = vec![0u64; d];
    for j in 0..n {
        h.hash_into(j, &mut row)?;
        let target = (0..d)
            .map(|i| (i as u64 * group + row[i]) as usize)
            .min_by_key(|&mach| (loads[mach], mach))
            .expect("d >= 1");
        loads[target] += 1;
    }
    let max_load = loads.iter().copied().max().unwrap_or(0);
    Ok(GoLeftRun { n, d, loads, max_load })
}

/// Protocol parameters for `n` jobs, `d` choices and target failure
/// probability `O(n^-alpha)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauParams {
    pub tau: u64,
    pub t: u32,
    pub beta: f64,
    pub k: f64,
}

/// `beta = 2d(alpha + ln d + 3/2)`, `k = alpha + 2`,
/// `t = max(3, floor(ln ln n / beta))` and
///
/// ```text
/// tau = ceil(max{ (beta t ln n / ln ln n)^(1/(t-2)) / (d-1),  d^(d+1) e^d + 1,  2k + 1 })
/// ```
pub fn tau_threshold(n: u64, d: usize, alpha: f64) -> Result<TauParams> {
    if n < 16 {
        return Err(param(format!("n must be at least 16, got {n}")));
    }
    if d < 2 {
        return Err(param("need at least two choices"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(param(format!("alpha must be positive, got {alpha}")));
    }
    let df = d as f64;
    let ln_n = (n as f64).ln();
    let lnln_n = ln_n.ln();
    let beta = 2.0 * df * (alpha + df.ln() + 1.5);
    let k = alpha + 2.0;
    let t = ((lnln_n / beta).floor() as u32).max(3);
    let growth = (beta * t as f64 * ln_n / lnln_n).powf(1.0 / (t as f64 - 2.0)) / (df - 1.0);
    let structural = df.powi(d as i32 + 1) * df.exp() + 1.0;
    let tau = growth.max(structural).max(2.0 * k + 1.0).ceil() as u64;
    Ok(TauParams { tau, t, beta, k })
}

/// `j_t = (tau^t (d-1)^(t-1) - tau) / (tau (d-1) - 1)`, evaluated exactly as
/// `tau (1 + q + ... + q^(t-2))` with `q = tau (d-1)`.
pub fn witness_tree_jobs(tau: u64, d: usize, t: u32) -> Result<u128> {
    if d < 2 {
        return Err(param("need at least two choices"));
    }
    let q = (tau as u128)
        .checked_mul(d as u128 - 1)
        .ok_or_else(|| param("tau (d - 1) overflows"))?;
    if q < 2 {
        return Err(param(format!("tau (d - 1) = {q}: the denominator tau (d - 1) - 1 must be positive")));
    }
    let overflow = || Error::Parameter(format!("j_t overflows 128 bits (tau = {tau}, d = {d}, t = {t})"));
    let mut sum: u128 = 0;
    let mut power: u128 = 1;
    for _ in 0..t.saturating_sub(1) {
        sum = sum.checked_add(power).ok_or_else(overflow)?;
        power = power.saturating_mul(q);
    }
    sum.checked_mul(tau as u128).ok_or_else(overflow)
}

/// Largest real root of `x^d = x^(d-1) + ... + x + 1` (the golden ratio for
/// `d = 2`); it lies in `[1, 2)`.
pub fn phi_d(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(param("phi_d needs d >= 2"));
    }
    let p = |x: f64| {
        let mut rhs = 0.0;
        let mut pow = 1.0;
        for _ in 0..d {
            rhs += pow;
            pow *= x;
        }
        pow - rhs
    };
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Leading term `ln ln n / (d ln phi_d)` of the Go-Left maximum load.
pub fn goleft_leading_term(n: u64, d: usize) -> Result<f64> {
    Ok((n as f64).ln().ln() / (d as f64 * phi_d(d)?.ln()))
}

/// Part size `ceil(n / (ratio d))` giving `n` edges on about `n / ratio`
/// vertices split over `d` parts.
pub fn core_part_size(n: u64, d: usize, ratio: f64) -> Result<u64> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(param(format!("edge/vertex ratio must be positive, got {ratio}")));
    }
    if d == 0 {
        return Err(param("need at least one part"));
    }
    Ok(((n as f64 / (ratio * d as f64)).ceil() as u64).max(1))
}

/// Number of edges in the 2-core of the hypergraph with edges
/// `h(0), ..., h(n - 1)`.
pub fn core_edges<H: HashSequence + ?Sized>(h: &H, n: u64) -> Result<usize> {
    let keys: Vec<u64> = (0..n).collect();
    Ok(LabeledHypergraph::build(h, &keys)?.peel().residual.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashfam::PolyHash;
    use crate::prng::Prng;
    use crate::zclass::{FullyRandom, ZFamily, ZParams};

    /// Group `i` candidate of job `j` is `(j + shift_i) mod range`.
    fn shifted(d: usize, range: u64, shifts: &[u64]) -> ZFamily {
        let params = ZParams::new(1, d, 2, 1, range).unwrap();
        let f = shifts.iter().map(|&s| PolyHash::new(vec![s, 1], range).unwrap()).collect();
        let g = vec![PolyHash::new(vec![0, 0], 1).unwrap()];
        ZFamily::from_parts(params, f, g, vec![vec![0]; d]).unwrap()
    }

    fn constant(d: usize, range: u64) -> ZFamily {
        let params = ZParams::new(1, d, 2, 1, range).unwrap();
        let f = (0..d).map(|_| PolyHash::new(vec![0, 0], range).unwrap()).collect();
        let g = vec![PolyHash::new(vec![0, 0], 1).unwrap()];
        ZFamily::from_parts(params, f, g, vec![vec![0]; d]).unwrap()
    }

    /// Replays a run from its log and checks the protocol rules.
    fn replay(h: &dyn HashSequence, run: &CollisionRun) {
        let d = run.d;
        let group = run.n / d as u64;
        let cands: Vec<Vec<u64>> = (0..run.n)
            .map(|j| {
                let mut r = vec![0; d];
                h.hash_into(j, &mut r).unwrap();
                r.iter().enumerate().map(|(i, v)| v + i as u64 * group).collect()
            })
            .collect();
        for round in 1..=run.round_log.len() as u32 {
            let active: Vec<usize> = (0..run.n as usize)
                .filter(|&j| run.assigned_round[j].is_none_or(|r| r >= round))
                .collect();
            let mut req = std::collections::HashMap::new();
            for &j in &active {
                for &mach in &cands[j] {
                    *req.entry(mach).or_insert(0u32) += 1;
                }
            }
            for &j in &active {
                let acked = cands[j].iter().find(|m| req[*m] <= run.tau).copied();
                if run.assigned_round[j] == Some(round) {
                    assert_eq!(run.assignment[j], acked);
                } else {
                    assert_eq!(acked, None);
                }
            }
            let left = active.len() - active.iter().filter(|&&j| run.assigned_round[j] == Some(round)).count();
            assert_eq!(run.round_log[round as usize - 1], left as u64);
        }
    }

    #[test]
    fn distinct_candidates_finish_in_one_round() {
        // every machine receives exactly d = 2 requests
        let h = shifted(2, 50, &[0, 7]);
        assert_eq!(run_collision(&h, 100, 1, 10).unwrap().rounds_used, None);
        let run = run_collision(&h, 100, 2, 10).unwrap();
        assert_eq!(run.rounds_used, Some(1));
        assert_eq!(run.round_log, vec![0]);
        assert!(run.assignment.iter().all(|a| a.is_some()));
        replay(&h, &run);
        let gl = run_goleft(&h, 100).unwrap();
        assert_eq!(gl.max_load, 1);
    }

    #[test]
    fn shared_candidates_never_finish() {
        let h = constant(2, 5);
        let run = run_collision(&h, 10, 9, 20).unwrap();
        assert_eq!(run.rounds_used, None);
        assert_eq!(run.round_log, vec![10; 20]);
        // tau = n lets every machine acknowledge
        let run = run_collision(&h, 10, 10, 20).unwrap();
        assert_eq!(run.rounds_used, Some(1));
        assert!(run.assignment.iter().all(|&a| a == Some(0)));
    }

    #[test]
    fn layout_errors() {
        let h = constant(3, 3);
        assert!(run_collision(&h, 10, 1, 5).is_err());
        assert!(run_goleft(&h, 10).is_err());
        assert!(run_collision(&h, 9, 0, 5).is_err());
        assert!(run_collision(&h, 12, 1, 5).is_err());
        let run = run_collision(&h, 0, 1, 5).unwrap();
        assert_eq!(run.rounds_used, Some(0));
    }

    #[test]
    fn random_runs_obey_protocol() {
        for seed in 0..20 {
            let n = 3000;
            let h = FullyRandom::new(seed, 3, n / 3).unwrap();
            let run = run_collision(&h, n, 2 + (seed % 3) as u32, 30).unwrap();
            replay(&h, &run);
            assert!(run.round_log.windows(2).all(|w| w[1] <= w[0]));
            for (j, a) in run.assignment.iter().enumerate() {
                if let Some(mach) = a {
                    let mut r = vec![0; 3];
                    h.hash_into(j as u64, &mut r).unwrap();
                    assert!(r.iter().enumerate().any(|(i, v)| v + i as u64 * 1000 == *mach));
                }
            }
        }
    }

    #[test]
    fn goleft_single_choice_is_max_bin() {
        let n = 1000;
        let h = FullyRandom::new(5, 1, n).unwrap();
        let run = run_goleft(&h, n).unwrap();
        let mut bins = vec![0u32; n as usize];
        let mut r = [0u64];
        for j in 0..n {
            h.hash_into(j, &mut r).unwrap();
            bins[r[0] as usize] += 1;
        }
        assert_eq!(run.max_load, *bins.iter().max().unwrap());
        assert_eq!(run.loads, bins);
    }

    #[test]
    fn goleft_prefers_left_on_ties_and_sums_to_n() {
        let h = constant(2, 4);
        let run = run_goleft(&h, 8).unwrap();
        // machines 0 and 4 alternate, left first
        assert_eq!(run.loads[0], 4);
        assert_eq!(run.loads[4], 4);
        let h = FullyRandom::new(3, 4, 1000).unwrap();
        let run = run_goleft(&h, 4000).unwrap();
        assert_eq!(run.loads.iter().map(|&l| l as u64).sum::<u64>(), 4000);
    }

    #[test]
    fn tau_threshold_components() {
        let p = tau_threshold(10_000, 2, 1.0).unwrap();
        assert!((p.beta - 4.0 * (2.5 + 2f64.ln())).abs() < 1e-12);
        assert!((p.beta - 12.772_588_722_239_78).abs() < 1e-9);
        assert_eq!(p.k, 3.0);
        assert_eq!(p.t, 3);
        // growth term: beta * 3 * ln n / ln ln n
        let ln_n = 10_000f64.ln();
        let growth = p.beta * 3.0 * ln_n / ln_n.ln();
        assert_eq!(p.tau, growth.max(8.0 * 2f64.exp() + 1.0).ceil() as u64);
        assert_eq!((8.0 * 2f64.exp() + 1.0).ceil(), 61.0);
        assert!(tau_threshold(15, 2, 1.0).is_err());
        assert!(tau_threshold(100, 1, 1.0).is_err());
        assert!(tau_threshold(100, 2, 0.0).is_err());
    }

    #[test]
    fn witness_tree_examples() {
        assert_eq!(witness_tree_jobs(2, 2, 2).unwrap(), 2);
        assert_eq!(witness_tree_jobs(2, 3, 2).unwrap(), 2);
        // (3^3 * 2^2 - 3) / (3 * 2 - 1) = 105 / 5 = 21
        assert_eq!(witness_tree_jobs(3, 3, 3).unwrap(), 21);
        assert!(witness_tree_jobs(1, 2, 3).is_err());
        assert!(witness_tree_jobs(u64::MAX, 3, 40).is_err());
    }

    #[test]
    fn witness_tree_matches_closed_form() {
        for tau in 2..20u64 {
            for d in 2..5usize {
                for t in 1..6u32 {
                    let q = tau as i128 * (d as i128 - 1);
                    let num = tau as i128 * q.pow(t - 1) - tau as i128;
                    let den = q - 1;
                    assert_eq!(num % den, 0);
                    assert_eq!(witness_tree_jobs(tau, d, t).unwrap() as i128, num / den);
                }
            }
        }
    }

    #[test]
    fn phi_values() {
        assert!((phi_d(2).unwrap() - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        // tribonacci constant
        assert!((phi_d(3).unwrap() - 1.839_286_755_214_161).abs() < 1e-12);
        assert!(phi_d(1).is_err());
        let mut prev = 1.0;
        for d in 2..10 {
            let p = phi_d(d).unwrap();
            assert!(p > prev && p < 2.0);
            prev = p;
        }
    }

    #[test]
    fn core_on_both_sides_of_threshold() {
        let n = 20_000;
        for (ratio, empty) in [(0.7, true), (0.9, false)] {
            let m = core_part_size(n, 3, ratio).unwrap();
            let z = ZFamily::draw(&mut Prng::new(4), ZParams::new(2, 3, 2, 142, m).unwrap()).unwrap();
            assert_eq!(core_edges(&z, n).unwrap() == 0, empty);
            let r = FullyRandom::new(4, 3, m).unwrap();
            assert_eq!(core_edges(&r, n).unwrap() == 0, empty);
        }
        assert_eq!(core_part_size(100, 3, 0.8).unwrap(), 42);
        assert!(core_part_size(10, 3, 0.0).is_err());
    }
}
