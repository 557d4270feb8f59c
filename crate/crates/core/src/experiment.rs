//! Seeded Monte-Carlo harness.
//!
//! Trial `i` of a run with seed `s` draws everything from
//! `Prng::new(s).child(i)`: keys from its child 0, hash functions from its
//! child 1. Trials run in parallel and are collected in index order, so a
//! run is a pure function of its configuration (apart from wall time).

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::cuckoo::{default_max_loop, CuckooTable, InsertOutcome};
use crate::error::{param, Error, Result};
use crate::gcuckoo::{default_max_label, GCuckooTable, LabelMode, LabeledInsert};
use crate::hypergraph::LabeledHypergraph;
use crate::loadbal::{core_edges, core_part_size, goleft_leading_term, run_collision, run_goleft, tau_threshold, witness_tree_jobs};
use crate::mphf::{acyclic_prob_bounds, build_mphf};
use crate::prng::Prng;
use crate::stats::{binomial_sigma, chi_square_uniform, fmt_sig6};
use crate::uniformsim::{SimConfig, UniformSim};
use crate::zclass::{deficiency_bound, distinct_keys, ell_for, FullyRandom, HashSequence, ZFamily, ZParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Cuckoo,
    Stash,
    MphfAcyclic,
    UniformProbe,
    GcuckooKhosla,
    GcuckooEppstein,
    Collision,
    Goleft,
    CoreThreshold,
    Components,
    Deficiency,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::Cuckoo,
        ExperimentKind::Stash,
        ExperimentKind::MphfAcyclic,
        ExperimentKind::UniformProbe,
        ExperimentKind::GcuckooKhosla,
        ExperimentKind::GcuckooEppstein,
        ExperimentKind::Collision,
        ExperimentKind::Goleft,
        ExperimentKind::CoreThreshold,
        ExperimentKind::Components,
        ExperimentKind::Deficiency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Cuckoo => "cuckoo",
            ExperimentKind::Stash => "stash",
            ExperimentKind::MphfAcyclic => "mphf-acyclic",
            ExperimentKind::UniformProbe => "uniform-probe",
            ExperimentKind::GcuckooKhosla => "gcuckoo-khosla",
            ExperimentKind::GcuckooEppstein => "gcuckoo-eppstein",
            ExperimentKind::Collision => "collision",
            ExperimentKind::Goleft => "goleft",
            ExperimentKind::CoreThreshold => "core-threshold",
            ExperimentKind::Components => "components",
            ExperimentKind::Deficiency => "deficiency",
        }
    }

    /// CSV columns, excluding the trailing wall-time column.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Cuckoo => &["trial", "suitable", "excess"],
            ExperimentKind::Stash => &["trial", "excess", "stash_used"],
            ExperimentKind::MphfAcyclic => &["trial", "acyclic", "attempts", "injective"],
            ExperimentKind::UniformProbe => &["trial", "cell"],
            ExperimentKind::GcuckooKhosla | ExperimentKind::GcuckooEppstein => {
                &["trial", "inserted", "success", "max_label"]
            }
            ExperimentKind::Collision => &["trial", "rounds_used", "unassigned_at_t", "max_load"],
            ExperimentKind::Goleft => &["trial", "max_load"],
            ExperimentKind::CoreThreshold => &["trial", "core_edges", "core_empty"],
            ExperimentKind::Components => &["trial", "components", "max_component_vertices", "max_surplus"],
            ExperimentKind::Deficiency => &["trial", "ell", "deficiency", "bad_or_critical"],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| param(format!("unknown experiment {s:?}")))
    }
}

/// Full parameter set of a run. [`ExperimentConfig::new`] fills in the
/// defaults of the given experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: u64,
    pub d: usize,
    pub c: usize,
    pub kappa: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Stash size.
    pub s: u64,
    /// Collision threshold; derived from `alpha` when absent.
    pub tau: Option<u32>,
    pub trials: u64,
    pub seed: u64,
    pub oracle_random: bool,
    pub threads: Option<usize>,
    /// Overrides `ceil(n^delta)`.
    pub ell: Option<u64>,
    /// Edge/vertex ratio for `core-threshold`.
    pub ratio: f64,
    /// Table size over key count for `components`.
    pub table_factor: f64,
    /// `|T|` for `deficiency`, `|S|` for `uniform-probe`.
    pub set_size: usize,
    pub alpha: f64,
    /// Word width for `uniform-probe`.
    pub w: u32,
    pub max_rounds: u32,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            kind,
            n: 10_000,
            d: 2,
            c: 4,
            kappa: 2,
            epsilon: 1.0,
            delta: 0.5,
            s: 0,
            tau: None,
            trials: 100,
            seed: 42,
            oracle_random: false,
            threads: None,
            ell: None,
            ratio: 0.80,
            table_factor: 6.0,
            set_size: 2,
            alpha: 1.0,
            w: 2,
            max_rounds: crate::loadbal::DEFAULT_MAX_ROUNDS,
        };
        match kind {
            ExperimentKind::Cuckoo => ExperimentConfig { trials: 500, ..base },
            ExperimentKind::Stash => ExperimentConfig { n: 1000, epsilon: 0.1, trials: 2000, ..base },
            ExperimentKind::MphfAcyclic => ExperimentConfig { n: 100_000, trials: 500, ..base },
            ExperimentKind::UniformProbe => ExperimentConfig { n: 64, trials: 100_000, ..base },
            ExperimentKind::GcuckooKhosla | ExperimentKind::GcuckooEppstein => {
                ExperimentConfig { d: 3, epsilon: 0.1, ..base }
            }
            ExperimentKind::Collision => ExperimentConfig { n: 1 << 14, d: 3, ..base },
            ExperimentKind::Goleft => ExperimentConfig { n: 1 << 16, ..base },
            ExperimentKind::CoreThreshold => ExperimentConfig { n: 100_000, d: 3, ..base },
            ExperimentKind::Components => base,
            ExperimentKind::Deficiency => {
                ExperimentConfig { c: 1, ell: Some(64), set_size: 8, trials: 10_000, ..base }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        if self.trials == 0 {
            return Err(param("trials must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(param(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(param(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.threads == Some(0) {
            return Err(param("threads must be at least 1"));
        }
        match self.kind {
            Cuckoo | Stash | MphfAcyclic | UniformProbe | Components if self.d != 2 => {
                return Err(param(format!("{} uses d = 2", self.kind)))
            }
            GcuckooKhosla | GcuckooEppstein | CoreThreshold if self.d < 2 => {
                return Err(param(format!("{} needs d >= 2", self.kind)))
            }
            Collision | Goleft if self.d == 0 || self.n < self.d as u64 => {
                return Err(param(format!("need 1 <= d <= n, got d = {}, n = {}", self.d, self.n)))
            }
            Collision if self.d < 2 => return Err(param("collision needs d >= 2")),
            UniformProbe | Deficiency if self.oracle_random => {
                return Err(param(format!("{} has no fully random counterpart", self.kind)))
            }
            Deficiency if self.set_size == 0 => return Err(param("set size must be at least 1")),
            UniformProbe if !(1..=6).contains(&self.set_size) || self.w == 0 || self.w as usize * self.set_size > 16 => {
                return Err(param("uniform-probe needs 1..=6 keys and w * |S| <= 16"))
            }
            MphfAcyclic if self.epsilon < crate::mphf::MIN_EPSILON => {
                return Err(param(format!("mphf-acyclic needs epsilon >= {}", crate::mphf::MIN_EPSILON)))
            }
            MphfAcyclic if !self.oracle_random && (self.kappa != 2 || self.ell.is_some()) => {
                return Err(param("mphf-acyclic uses kappa = 2 and ell = ceil(n^delta)"))
            }
            _ => {}
        }
        if self.kind != Goleft && self.kind != Collision && self.n == 0 && self.kind != Components {
            return Err(param("n must be at least 1"));
        }
        // probe the Z parameters once so that errors surface before any trial
        if !self.oracle_random {
            ZParams::new(self.c, self.d.max(2), self.kappa, self.ell()?, 1)?;
        }
        Ok(())
    }

    /// Job and machine count of the allocation experiments: `n` rounded
    /// down to a multiple of `d`.
    pub fn allocation_size(&self) -> u64 {
        let d = self.d.max(1) as u64;
        self.n / d * d
    }

    pub fn ell(&self) -> Result<u64> {
        match self.ell {
            Some(0) => Err(param("ell must be at least 1")),
            Some(l) => Ok(l),
            None => ell_for(self.n.max(1), self.delta),
        }
    }

    /// `(name, value)` pairs of every parameter.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("experiment".to_string(), self.kind.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("trials".into(), self.trials.to_string()),
            ("n".into(), self.n.to_string()),
            ("d".into(), self.d.to_string()),
            ("c".into(), self.c.to_string()),
            ("kappa".into(), self.kappa.to_string()),
            ("epsilon".into(), fmt_sig6(self.epsilon)),
            ("delta".into(), fmt_sig6(self.delta)),
            ("ell".into(), self.ell().map(|l| l.to_string()).unwrap_or_else(|_| "invalid".into())),
            ("s".into(), self.s.to_string()),
            ("tau".into(), self.tau.map(|t| t.to_string()).unwrap_or_else(|| "derived".into())),
            ("alpha".into(), fmt_sig6(self.alpha)),
            ("ratio".into(), fmt_sig6(self.ratio)),
            ("table_factor".into(), fmt_sig6(self.table_factor)),
            ("set_size".into(), self.set_size.to_string()),
            ("w".into(), self.w.to_string()),
            ("max_rounds".into(), self.max_rounds.to_string()),
            ("hash".into(), if self.oracle_random { "fully-random" } else { "Z" }.into()),
        ];
        if let Some(t) = self.threads {
            v.push(("threads".into(), t.to_string()));
        }
        v
    }
}

/// One CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Signed(i64),
    Float(f64),
    Bool(bool),
    Empty,
}

impl Cell {
    fn as_u64(&self) -> Option<u64> {
        match *self {
            Cell::Int(v) => Some(v),
            Cell::Bool(b) => Some(b as u64),
            _ => None,
        }
    }

    fn is_true(&self) -> bool {
        matches!(self, Cell::Bool(true))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Signed(v) => write!(f, "{v}"),
            Cell::Float(x) => f.write_str(&fmt_sig6(*x)),
            Cell::Bool(b) => f.write_str(if *b { "1" } else { "0" }),
            Cell::Empty => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub params: Vec<(String, String)>,
    /// Empirical statistics and theoretical reference values.
    pub stats: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn stat(&mut self, name: &str, value: impl fmt::Display) {
        self.stats.push((name.to_string(), value.to_string()));
    }

    fn float(&mut self, name: &str, value: f64) {
        self.stat(name, fmt_sig6(value));
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "parameters")?;
        for (k, v) in &self.params {
            writeln!(f, "  {k:<14} {v}")?;
        }
        writeln!(f, "results")?;
        for (k, v) in &self.stats {
            writeln!(f, "  {k:<28} {v}")?;
        }
        writeln!(f, "checks")?;
        for c in &self.checks {
            writeln!(f, "  [{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        write!(f, "overall {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Per-trial wall time in milliseconds.
    pub wall_ms: Vec<f64>,
    pub summary: Summary,
}

impl ExperimentOutput {
    /// Writes the CSV; the wall-time column comes last when included.
    pub fn write_csv<W: Write>(&self, w: W, with_timing: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.columns.clone();
        if with_timing {
            header.push("wall_ms");
        }
        out.write_record(&header)?;
        for (row, ms) in self.rows.iter().zip(&self.wall_ms) {
            let mut rec: Vec<String> = row.iter().map(Cell::to_string).collect();
            if with_timing {
                rec.push(fmt_sig6(*ms));
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn csv_string(&self, with_timing: bool) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, with_timing)?;
        Ok(String::from_utf8(buf).expect("csv output is ASCII"))
    }
}

fn hash_for(cfg: &ExperimentConfig, prng: &mut Prng, d: usize, m: u64) -> Result<Box<dyn HashSequence>> {
    Ok(if cfg.oracle_random {
        Box::new(FullyRandom::new(prng.next_word(), d, m)?)
    } else {
        Box::new(draw_z(cfg, prng, d, m)?)
    })
}

fn draw_z(cfg: &ExperimentConfig, prng: &mut Prng, d: usize, m: u64) -> Result<ZFamily> {
    ZFamily::draw(prng, ZParams::new(cfg.c, d, cfg.kappa, cfg.ell()?, m)?)
}

fn cuckoo_table_size(cfg: &ExperimentConfig) -> u64 {
    ((1.0 + cfg.epsilon) * cfg.n as f64).ceil() as u64
}

fn probe_keys(cfg: &ExperimentConfig) -> Vec<u64> {
    (1..=cfg.set_size as u64).collect()
}

/// Resolved `(tau, t)` for the collision protocol.
fn collision_params(cfg: &ExperimentConfig) -> Result<(u32, u32)> {
    let derived = tau_threshold(cfg.allocation_size(), cfg.d, cfg.alpha)?;
    let tau = match cfg.tau {
        Some(t) => t,
        None => u32::try_from(derived.tau).map_err(|_| param("derived tau does not fit 32 bits"))?,
    };
    Ok((tau, derived.t))
}

fn run_trial(cfg: &ExperimentConfig, index: u64) -> Result<Vec<Cell>> {
    use ExperimentKind::*;
    let stream = Prng::new(cfg.seed).child(index);
    let mut key_rng = stream.child(0);
    let mut hash_rng = stream.child(1);
    let n = cfg.n as usize;
    let trial = Cell::Int(index);
    Ok(match cfg.kind {
        Cuckoo => {
            let keys = distinct_keys(&mut key_rng, n);
            let h = hash_for(cfg, &mut hash_rng, 2, cuckoo_table_size(cfg))?;
            let ex = LabeledHypergraph::build(h.as_ref(), &keys)?.excess()?;
            vec![trial, Cell::Bool(ex <= cfg.s), Cell::Int(ex)]
        }
        Stash => {
            let keys = distinct_keys(&mut key_rng, n);
            let m = cuckoo_table_size(cfg);
            if cfg.oracle_random {
                let h = FullyRandom::new(hash_rng.next_word(), 2, m)?;
                let ex = LabeledHypergraph::build(&h, &keys)?.excess()?;
                vec![trial, Cell::Int(ex), Cell::Empty]
            } else {
                let fam = draw_z(cfg, &mut hash_rng, 2, m)?;
                let ex = LabeledHypergraph::build(&fam, &keys)?.excess()?;
                let mut table = CuckooTable::new(fam, n, default_max_loop(n, cfg.epsilon))?;
                let mut ok = true;
                for &x in &keys {
                    ok &= table.insert(x)? != InsertOutcome::RehashNeeded;
                }
                let used = if ok { Cell::Int(table.stash().len() as u64) } else { Cell::Empty };
                vec![trial, Cell::Int(ex), used]
            }
        }
        MphfAcyclic => {
            let keys = distinct_keys(&mut key_rng, n);
            if cfg.oracle_random {
                let h = FullyRandom::new(hash_rng.next_word(), 2, cuckoo_table_size(cfg))?;
                let acyclic = LabeledHypergraph::build(&h, &keys)?.peel().is_complete();
                vec![trial, Cell::Bool(acyclic), Cell::Empty, Cell::Empty]
            } else {
                // the first attempt of the build is the acyclicity trial
                let (ph, info) = build_mphf(&mut hash_rng, &keys, cfg.epsilon, cfg.delta, cfg.c)?;
                vec![trial, Cell::Bool(info.attempts == 1), Cell::Int(info.attempts as u64), Cell::Bool(ph.is_injective_on(&keys)?)]
            }
        }
        UniformProbe => {
            let sim = SimConfig { n: cfg.n, epsilon: cfg.epsilon, delta: cfg.delta, c: cfg.c, w: cfg.w };
            let ds = UniformSim::build(&mut hash_rng, &sim)?;
            let mut cell = 0u64;
            for x in probe_keys(cfg) {
                cell = (cell << cfg.w) | ds.eval(x)?;
            }
            vec![trial, Cell::Int(cell)]
        }
        GcuckooKhosla | GcuckooEppstein => {
            let mode = if cfg.kind == GcuckooKhosla { LabelMode::Khosla } else { LabelMode::Eppstein };
            let keys = distinct_keys(&mut key_rng, n);
            let m = ((1.0 + cfg.epsilon) * (cfg.d as f64 - 1.0) * n as f64).ceil() as u64;
            if cfg.oracle_random {
                return Err(param("generalized cuckoo tables are driven by Z; drop --oracle-random"));
            }
            let fam = draw_z(cfg, &mut hash_rng, cfg.d, m)?;
            let mut table = GCuckooTable::new(fam, mode, default_max_label(mode, n))?;
            let mut inserted = 0u64;
            for &x in &keys {
                if table.insert_labeled(x)? != LabeledInsert::Ok {
                    break;
                }
                inserted += 1;
            }
            vec![trial, Cell::Int(inserted), Cell::Bool(inserted == cfg.n), Cell::Int(table.max_label() as u64)]
        }
        Collision => {
            let (tau, t) = collision_params(cfg)?;
            let size = cfg.allocation_size();
            let h = hash_for(cfg, &mut hash_rng, cfg.d, size / cfg.d as u64)?;
            let run = run_collision(h.as_ref(), size, tau, cfg.max_rounds)?;
            let at_t = match run.round_log.get(t as usize - 1) {
                Some(&left) => left,
                None => 0,
            };
            let rounds = run.rounds_used.map_or(Cell::Empty, |r| Cell::Int(r as u64));
            vec![trial, rounds, Cell::Int(at_t), Cell::Int(run.max_load())]
        }
        Goleft => {
            let size = cfg.allocation_size();
            let h: Box<dyn HashSequence> = if cfg.d == 1 || cfg.oracle_random {
                Box::new(FullyRandom::new(hash_rng.next_word(), cfg.d, size / cfg.d as u64)?)
            } else {
                Box::new(draw_z(cfg, &mut hash_rng, cfg.d, size / cfg.d as u64)?)
            };
            vec![trial, Cell::Int(run_goleft(h.as_ref(), size)?.max_load as u64)]
        }
        CoreThreshold => {
            let m = core_part_size(cfg.n, cfg.d, cfg.ratio)?;
            let h = hash_for(cfg, &mut hash_rng, cfg.d, m)?;
            let core = core_edges(h.as_ref(), cfg.n)?;
            vec![trial, Cell::Int(core as u64), Cell::Bool(core == 0)]
        }
        Components => {
            if !(cfg.table_factor > 0.0) {
                return Err(param("table factor must be positive"));
            }
            let keys = distinct_keys(&mut key_rng, n);
            let m = ((cfg.table_factor * n as f64).ceil() as u64).max(1);
            let h = hash_for(cfg, &mut hash_rng, 2, m)?;
            let comps = LabeledHypergraph::build(h.as_ref(), &keys)?.components();
            let surplus = comps.summaries.iter().map(|s| s.edge_count as i64 - s.vertex_count as i64).max();
            let surplus = surplus.map_or(Cell::Empty, Cell::Signed);
            vec![
                trial,
                Cell::Int(comps.summaries.len() as u64),
                Cell::Int(comps.max_vertex_count()),
                surplus,
            ]
        }
        Deficiency => {
            let keys = distinct_keys(&mut key_rng, cfg.set_size);
            let fam = draw_z(cfg, &mut hash_rng, cfg.d, cfg.n.max(1))?;
            let report = fam.classify_deficiency(&keys)?;
            vec![trial, Cell::Int(cfg.ell()?), Cell::Int(report.deficiency), Cell::Bool(report.is_bad_or_critical())]
        }
    })
}

fn column(rows: &[Vec<Cell>], i: usize) -> impl Iterator<Item = &Cell> {
    rows.iter().map(move |r| &r[i])
}

fn rate(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

fn summarize(cfg: &ExperimentConfig, rows: &[Vec<Cell>]) -> Result<Summary> {
    use ExperimentKind::*;
    let mut s = Summary { params: cfg.echo(), stats: Vec::new(), checks: Vec::new() };
    let trials = rows.len();
    let lg = (cfg.n.max(2) as f64).log2();
    match cfg.kind {
        Cuckoo => {
            let failures = column(rows, 1).filter(|c| !c.is_true()).count();
            let r = rate(failures, trials);
            s.float("failure_rate", r);
            s.float("one_over_n", 1.0 / cfg.n as f64);
            s.check("failure rate <= 0.02", r <= 0.02, format!("{} of {trials} trials unsuitable", failures));
        }
        Stash => {
            let ex: Vec<u64> = column(rows, 1).filter_map(Cell::as_u64).collect();
            let tail: Vec<f64> = (1..=3).map(|k| rate(ex.iter().filter(|&&e| e >= k).count(), trials)).collect();
            for (k, p) in tail.iter().enumerate() {
                s.float(&format!("pr_excess_ge_{}", k + 1), *p);
            }
            let ratio = if tail[0] > 0.0 { tail[1] / tail[0] } else { f64::NAN };
            s.float("ratio_ge2_over_ge1", ratio);
            s.float("one_over_n", 1.0 / cfg.n as f64);
            let mismatched = rows.iter().filter(|r| r[2] != Cell::Empty && r[2] != r[1]).count();
            s.stat("stash_used_differs_from_excess", mismatched);
            s.check(
                "tail strictly decreasing over s = 0, 1, 2",
                tail[0] > tail[1] && tail[1] > tail[2],
                format!("{} > {} > {}", fmt_sig6(tail[0]), fmt_sig6(tail[1]), fmt_sig6(tail[2])),
            );
            s.check("Pr(ex >= 2) / Pr(ex >= 1) <= 0.1", ratio <= 0.1, format!("ratio {}", fmt_sig6(ratio)));
        }
        MphfAcyclic => {
            let acyclic = column(rows, 1).filter(|c| c.is_true()).count();
            let r = rate(acyclic, trials);
            let (exact, lower) = acyclic_prob_bounds(cfg.epsilon)?;
            s.float("acyclic_rate", r);
            s.stat("exact_rate", format!("{exact:.4}"));
            s.stat("lower_bound", format!("{lower:.4}"));
            s.check(
                "acyclic rate within [lower_bound - 0.03, exact_rate + 0.03]",
                r >= lower - 0.03 && r <= exact + 0.03,
                format!("{} in [{:.4}, {:.4}]", fmt_sig6(r), lower - 0.03, exact + 0.03),
            );
            if !cfg.oracle_random {
                let attempts: Vec<u64> = column(rows, 2).filter_map(Cell::as_u64).collect();
                let mean = attempts.iter().sum::<u64>() as f64 / trials as f64;
                let limit = 1.0 / (lower - 0.05);
                s.float("mean_attempts", mean);
                s.check("mean attempts <= 1 / (lower_bound - 0.05)", mean <= limit, format!("{} <= {}", fmt_sig6(mean), fmt_sig6(limit)));
                let injective = column(rows, 3).filter(|c| c.is_true()).count();
                s.check("every build injective", injective == trials, format!("{injective} of {trials}"));
            }
        }
        UniformProbe => {
            let cells = 1usize << (cfg.w as usize * cfg.set_size);
            let mut counts = vec![0u64; cells];
            for c in column(rows, 1).filter_map(Cell::as_u64) {
                counts[c as usize] += 1;
            }
            let chi = chi_square_uniform(&counts).ok_or_else(|| param("probe needs at least two cells"))?;
            s.stat("keys", format!("{:?}", probe_keys(cfg)));
            s.float("chi_square", chi.statistic);
            s.stat("dof", chi.dof);
            s.float("p_value", chi.p_value);
            s.check("joint distribution uniform (p > 0.001)", chi.p_value > 0.001, format!("p = {}", fmt_sig6(chi.p_value)));
        }
        GcuckooKhosla | GcuckooEppstein => {
            let mode = if cfg.kind == GcuckooKhosla { LabelMode::Khosla } else { LabelMode::Eppstein };
            let bound = match mode {
                LabelMode::Khosla => 4.0 * lg,
                LabelMode::Eppstein => lg.log2() + 10.0,
            };
            let ok = column(rows, 2).filter(|c| c.is_true()).count();
            let within = column(rows, 3).filter_map(Cell::as_u64).filter(|&l| l as f64 <= bound).count();
            let max = column(rows, 3).filter_map(Cell::as_u64).max().unwrap_or(0);
            s.float("success_rate", rate(ok, trials));
            s.stat("max_label_overall", max);
            s.float("label_bound", bound);
            s.stat("abort_threshold", default_max_label(mode, cfg.n as usize));
            let need = (0.99 * trials as f64).ceil() as usize;
            s.check("full insertion in >= 99% of trials", ok >= need, format!("{ok} of {trials}"));
            s.check("max label within bound in >= 99% of trials", within >= need, format!("{within} of {trials}"));
        }
        Collision => {
            let (tau, t) = collision_params(cfg)?;
            s.stat("n_effective", cfg.allocation_size());
            let derived = tau_threshold(cfg.allocation_size(), cfg.d, cfg.alpha)?;
            s.stat("tau", tau);
            s.stat("t", t);
            s.float("beta", derived.beta);
            s.float("k", derived.k);
            s.stat("tau_derived", derived.tau);
            match witness_tree_jobs(tau as u64, cfg.d, t) {
                Ok(j) => s.stat("j_t", j),
                Err(e) => s.stat("j_t", e),
            }
            s.float("ln_n", (cfg.n as f64).ln());
            s.float("log2_n", lg);
            let done = column(rows, 1).filter_map(Cell::as_u64).filter(|&r| r <= t as u64).count();
            let exhausted = column(rows, 1).filter(|c| **c == Cell::Empty).count();
            s.float("terminated_within_t_rate", rate(done, trials));
            s.stat("exhausted_trials", exhausted);
            let need = (0.99 * trials as f64).ceil() as usize;
            s.check("terminates within t rounds in >= 99% of trials", done >= need, format!("{done} of {trials}"));
        }
        Goleft => {
            let loads: Vec<u64> = column(rows, 1).filter_map(Cell::as_u64).collect();
            s.stat("n_effective", cfg.allocation_size());
            s.stat("max_load_overall", loads.iter().max().copied().unwrap_or(0));
            s.float("mean_max_load", loads.iter().sum::<u64>() as f64 / trials as f64);
            if cfg.d >= 2 {
                let lead = goleft_leading_term(cfg.allocation_size(), cfg.d)?;
                let bound = lead + 8.0;
                let within = loads.iter().filter(|&&l| l as f64 <= bound).count();
                s.float("leading_term", lead);
                s.check(
                    "max load <= ln ln n / (d ln phi_d) + 8 in >= 95% of trials",
                    within as f64 >= 0.95 * trials as f64,
                    format!("{within} of {trials} within {}", fmt_sig6(bound)),
                );
            }
        }
        CoreThreshold => {
            let empty = column(rows, 2).filter(|c| c.is_true()).count();
            s.float("empty_core_rate", rate(empty, trials));
            s.stat("part_size", core_part_size(cfg.n, cfg.d, cfg.ratio)?);
            if cfg.d == 3 {
                let threshold = 0.818;
                s.float("threshold", threshold);
                let need = 0.95 * trials as f64;
                if cfg.ratio < threshold {
                    s.check("2-core empty in >= 95% of trials", empty as f64 >= need, format!("{empty} of {trials}"));
                } else {
                    let nonempty = trials - empty;
                    s.check("2-core nonempty in >= 95% of trials", nonempty as f64 >= need, format!("{nonempty} of {trials}"));
                }
            }
        }
        Components => {
            let maxes: Vec<u64> = rows
                .iter()
                .filter(|r| r[1] != Cell::Int(0))
                .filter_map(|r| r[2].as_u64())
                .collect();
            let mut hist = std::collections::BTreeMap::new();
            for &v in &maxes {
                *hist.entry(v).or_insert(0u64) += 1;
            }
            s.stat(
                "histogram_max_component",
                hist.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(" "),
            );
            s.stat("max_component_overall", maxes.iter().max().copied().unwrap_or(0));
            if cfg.table_factor >= 6.0 {
                let bound = 40.0 * lg;
                let ok = maxes.iter().all(|&v| v as f64 <= bound);
                s.check("max component <= 40 log2 n in every trial", ok, format!("bound {}", fmt_sig6(bound)));
            }
        }
        Deficiency => {
            let hits = column(rows, 3).filter(|c| c.is_true()).count();
            let r = rate(hits, trials);
            let bound = deficiency_bound(cfg.set_size, cfg.ell()?, cfg.c, (cfg.kappa / 2) as u64);
            let capped = bound.min(1.0);
            let sigma = binomial_sigma(capped, trials as u64);
            s.float("bad_or_critical_rate", r);
            s.float("bound", bound);
            s.float("sigma", sigma);
            s.check(
                "rate <= min(1, bound) + 3 sigma",
                r <= capped + 3.0 * sigma,
                format!("{} <= {}", fmt_sig6(r), fmt_sig6(capped + 3.0 * sigma)),
            );
        }
    }
    Ok(s)
}

/// Runs all trials of `cfg` (in parallel, on `cfg.threads` workers if set).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let work = || -> Result<Vec<(Vec<Cell>, f64)>> {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let start = Instant::now();
                let row = run_trial(cfg, i)?;
                Ok((row, start.elapsed().as_secs_f64() * 1e3))
            })
            .collect()
    };
    let results = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| param(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let (rows, wall_ms): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summary = summarize(cfg, &rows)?;
    Ok(ExperimentOutput { columns: cfg.kind.columns().to_vec(), rows, wall_ms, summary })
}
