use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zhash::experiment::{run_experiment, ExperimentConfig, ExperimentKind};
use zhash::mphf::{build_mphf, Bpz};
use zhash::{Error, Prng};

const EXIT_FAIL: u8 = 2;
const EXIT_USAGE: u8 = 1;

/// Experiments and tools for the hash class Z.
#[derive(Parser, Debug)]
#[command(name = "zhash", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cuckoo suitability (excess <= s) over random key sets.
    Cuckoo(ExpArgs),
    /// Excess distribution, i.e. the stash size a cuckoo table needs.
    Stash(ExpArgs),
    /// Acyclicity rate of G(S, h1, h2) and perfect hash function builds.
    MphfAcyclic(ExpArgs),
    /// Joint distribution of the uniform-hash simulation on a few keys.
    UniformProbe(ExpArgs),
    /// Generalized cuckoo insertion with distance labels.
    GcuckooKhosla(ExpArgs),
    /// Generalized cuckoo insertion with wear counters.
    GcuckooEppstein(ExpArgs),
    /// The tau-collision parallel allocation protocol.
    Collision(ExpArgs),
    /// Sequential Go-Left allocation.
    Goleft(ExpArgs),
    /// 2-core emptiness of random d-uniform hypergraphs.
    CoreThreshold(ExpArgs),
    /// Component sizes of sparse random graphs.
    Components(ExpArgs),
    /// Bad-or-critical rate of the deficiency classifier.
    Deficiency(ExpArgs),
    /// Builds a perfect hash function from a file of decimal keys, one per line.
    MphfBuild(BuildArgs),
    /// Evaluates a stored perfect hash function on a key file.
    MphfEval(EvalArgs),
}

#[derive(Args, Debug)]
struct ExpArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    kappa: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Stash size.
    #[arg(long)]
    s: Option<u64>,
    /// Collision threshold (default: derived from --alpha).
    #[arg(long)]
    tau: Option<u32>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (default: <experiment>-seed<seed>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace Z by fully random hash functions.
    #[arg(long)]
    oracle_random: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// Size of the g ranges (default: ceil(n^delta)).
    #[arg(long)]
    ell: Option<u64>,
    /// Edge/vertex ratio (core-threshold).
    #[arg(long)]
    ratio: Option<f64>,
    /// Table size as a multiple of n (components).
    #[arg(long)]
    table_factor: Option<f64>,
    /// Key-set size (deficiency, uniform-probe).
    #[arg(long, alias = "t-size")]
    set_size: Option<usize>,
    /// Failure exponent for the derived tau.
    #[arg(long)]
    alpha: Option<f64>,
    /// Word width in bits (uniform-probe).
    #[arg(long)]
    w: Option<u32>,
    #[arg(long)]
    max_rounds: Option<u32>,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long)]
    keys: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 4)]
    c: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    mphf: PathBuf,
    #[arg(long)]
    keys: PathBuf,
}

impl ExpArgs {
    fn into_config(self, kind: ExperimentKind) -> (ExperimentConfig, Option<PathBuf>) {
        let mut cfg = ExperimentConfig::new(kind);
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        set!(n, d, c, kappa, epsilon, delta, s, trials, seed, ratio, table_factor, set_size, alpha, w, max_rounds);
        if self.tau.is_some() {
            cfg.tau = self.tau;
        }
        if self.ell.is_some() {
            cfg.ell = self.ell;
        }
        cfg.threads = self.threads;
        cfg.oracle_random = self.oracle_random;
        (cfg, self.out)
    }
}

fn read_keys(path: &PathBuf) -> Result<Vec<u64>, Error> {
    let mut keys = Vec::new();
    for (no, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let k = t
            .parse::<u64>()
            .map_err(|e| Error::Input(format!("{}:{}: {e}", path.display(), no + 1)))?;
        keys.push(k);
    }
    Ok(keys)
}

fn experiment(kind: ExperimentKind, args: ExpArgs) -> Result<bool, Error> {
    let (cfg, out) = args.into_config(kind);
    let result = run_experiment(&cfg)?;
    let path = out.unwrap_or_else(|| PathBuf::from(format!("{}-seed{}.csv", kind, cfg.seed)));
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    result.write_csv(BufWriter::new(File::create(&path)?), true)?;
    let stdout = io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "{}", result.summary)?;
    writeln!(w, "csv {}", path.display())?;
    Ok(result.summary.passed())
}

fn run(cli: Cli) -> Result<bool, Error> {
    use ExperimentKind as K;
    match cli.command {
        Command::Cuckoo(a) => experiment(K::Cuckoo, a),
        Command::Stash(a) => experiment(K::Stash, a),
        Command::MphfAcyclic(a) => experiment(K::MphfAcyclic, a),
        Command::UniformProbe(a) => experiment(K::UniformProbe, a),
        Command::GcuckooKhosla(a) => experiment(K::GcuckooKhosla, a),
        Command::GcuckooEppstein(a) => experiment(K::GcuckooEppstein, a),
        Command::Collision(a) => experiment(K::Collision, a),
        Command::Goleft(a) => experiment(K::Goleft, a),
        Command::CoreThreshold(a) => experiment(K::CoreThreshold, a),
        Command::Components(a) => experiment(K::Components, a),
        Command::Deficiency(a) => experiment(K::Deficiency, a),
        Command::MphfBuild(a) => {
            let keys = read_keys(&a.keys)?;
            let (ph, info) = build_mphf(&mut Prng::new(a.seed), &keys, a.epsilon, a.delta, a.c)?;
            ph.save(&a.out)?;
            println!("keys {}", keys.len());
            println!("range {}", ph.range());
            println!("attempts {}", info.attempts);
            println!("written {}", a.out.display());
            Ok(true)
        }
        Command::MphfEval(a) => {
            let ph = Bpz::load(&a.mphf)?;
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            for x in read_keys(&a.keys)? {
                writeln!(w, "{x} {}", ph.eval(x)?)?;
            }
            w.flush()?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e @ Error::Construction(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAIL)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
