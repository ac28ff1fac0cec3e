//! The command surface behind the `typmatch` binary: file formats, CSV
//! schemas, and the experiment sweep.
//!
//! Every command is a pure function of its flags, input files, and seed;
//! repeated runs produce byte-identical output, including CSV row order
//! and independent of how many threads the process uses. Exit codes are
//! fixed for scripting: 0 success, 2 usage (the argument parser's own),
//! 3 bad input or I/O, 4 a size guard refused the computation.
//!
//! A generated pair directory holds four files: the two graphs, the
//! ground-truth labeling, and a verbatim copy of the distribution the
//! pair was drawn from, so the directory is self-contained for matching.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dist::{JointDist, LogBase, NEAR_ZERO_WARN};
use crate::graph::{LabeledGraph, MatchInstance};
use crate::matcher::{
    match_instance, EpsilonChoice, MatchConfig, MatchError, MatchOutcome, SearchMode,
};
use crate::perm::{CycleType, Permutation};
use crate::rng::{derive_seed, streams};
use crate::typicality::{
    exact_permutation_typicality, mc_permutation_typicality, typicality_bound, McEstimate,
    TypicalityError, MAX_ENUM_STATES,
};

pub const GRAPH1_FILE: &str = "graph1.txt";
pub const GRAPH2_ANON_FILE: &str = "graph2_anon.txt";
pub const TRUTH_FILE: &str = "truth.txt";
pub const DIST_FILE: &str = "dist.txt";

pub const MATCH_CSV_HEADER: &str = "n,l,epsilon,mode,heuristic,outcome,candidate_count,\
correct_fraction,mismatch_count,max_deviation,automorphism_ties,seed";
pub const PERMTYP_CSV_HEADER: &str = "n,cycle_type,epsilon,exact,estimate,ci_lo,ci_hi,bound";
pub const SWEEP_CSV_HEADER: &str = "n,rho,mi_bits,epsilon,trials,mean_correct_fraction,\
std_correct_fraction,mean_candidate_count,empty_sigma_rate,seed";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("cannot {action} {path}: {source}")]
    Io { action: &'static str, path: PathBuf, source: std::io::Error },
    #[error("distribution: {0}")]
    Dist(#[from] crate::dist::DistError),
    #[error("graph: {0}")]
    Graph(#[from] crate::graph::GraphError),
    #[error("permutation: {0}")]
    Perm(#[from] crate::perm::PermError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Typ(#[from] TypicalityError),
    #[error("{0}")]
    Config(String),
}

impl HarnessError {
    /// Process exit code for scripting: guard refusals are 4, everything
    /// else here is an input problem, 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Match(MatchError::TooLargeForExhaustive { .. })
            | HarnessError::Match(MatchError::CapTooLarge(_))
            | HarnessError::Typ(TypicalityError::EnumerationTooLarge { .. }) => 4,
            _ => 3,
        }
    }
}

/// What a command wants printed where. Both streams are as deterministic
/// as the outputs themselves.
#[derive(Debug, Default, Clone)]
pub struct CmdOutput {
    pub stdout: String,
    pub stderr: String,
}

fn read_file(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        action: "read",
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|source| HarnessError::Io {
        action: "write",
        path: path.to_path_buf(),
        source,
    })
}

/// `auto` or a positive number.
pub fn parse_epsilon_arg(s: &str) -> Result<EpsilonChoice, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(EpsilonChoice::Auto);
    }
    match s.parse::<f64>() {
        Ok(e) if e > 0.0 => Ok(EpsilonChoice::Fixed(e)),
        Ok(e) => Err(format!("epsilon must be positive, got {e}")),
        Err(_) => Err(format!("expected 'auto' or a number, got {s:?}")),
    }
}

/// `exhaustive` or `greedy`.
pub fn parse_mode_arg(s: &str) -> Result<SearchMode, String> {
    match s {
        "exhaustive" => Ok(SearchMode::Exhaustive),
        "greedy" => Ok(SearchMode::Greedy),
        other => Err(format!("expected 'exhaustive' or 'greedy', got {other:?}")),
    }
}

/// `2` or `e`.
pub fn parse_base_arg(s: &str) -> Result<LogBase, String> {
    match s {
        "2" => Ok(LogBase::Two),
        "e" => Ok(LogBase::E),
        other => Err(format!("expected '2' or 'e', got {other:?}")),
    }
}

fn mode_name(mode: SearchMode) -> &'static str {
    match mode {
        SearchMode::Exhaustive => "exhaustive",
        SearchMode::Greedy => "greedy",
    }
}

fn near_zero_warning(dist: &JointDist) -> String {
    if dist.min_cell() < NEAR_ZERO_WARN {
        format!(
            "warning: smallest distribution cell {:e} is below {:e}; \
             typicality thresholds behave poorly near empty cells\n",
            dist.min_cell(),
            NEAR_ZERO_WARN
        )
    } else {
        String::new()
    }
}

/// Generates one instance and writes the pair directory. Prints the
/// distribution's mutual information so sweeps over generated pairs can
/// be labeled without recomputation.
pub fn cmd_gen(
    n: usize,
    dist_path: &Path,
    seed: u64,
    out_dir: &Path,
) -> Result<CmdOutput, HarnessError> {
    let dist_text = read_file(dist_path)?;
    let dist = JointDist::parse(&dist_text)?;
    let inst = MatchInstance::generate(&dist, n, seed)?;
    std::fs::create_dir_all(out_dir).map_err(|source| HarnessError::Io {
        action: "create",
        path: out_dir.to_path_buf(),
        source,
    })?;
    write_file(&out_dir.join(GRAPH1_FILE), &inst.g1.file_string())?;
    write_file(&out_dir.join(GRAPH2_ANON_FILE), &inst.g2_anon.file_string())?;
    write_file(&out_dir.join(TRUTH_FILE), &inst.secret.labeling_file_string())?;
    write_file(&out_dir.join(DIST_FILE), &dist_text)?;
    Ok(CmdOutput {
        stdout: format!("mi_bits={:.12}\n", dist.mutual_information(LogBase::Two)),
        stderr: near_zero_warning(&dist),
    })
}

fn load_pair_dir(pair_dir: &Path) -> Result<MatchInstance, HarnessError> {
    let g1 = LabeledGraph::parse(&read_file(&pair_dir.join(GRAPH1_FILE))?)?;
    let g2_anon = LabeledGraph::parse(&read_file(&pair_dir.join(GRAPH2_ANON_FILE))?)?;
    let secret = Permutation::parse_labeling(&read_file(&pair_dir.join(TRUTH_FILE))?)?;
    let dist = JointDist::parse(&read_file(&pair_dir.join(DIST_FILE))?)?;
    if g1.n() != g2_anon.n() || g1.n() != secret.n() {
        return Err(HarnessError::Config(format!(
            "pair directory is inconsistent: graph sizes {} and {}, truth size {}",
            g1.n(),
            g2_anon.n(),
            secret.n()
        )));
    }
    if g1.alphabet_size() != dist.alphabet_size() || g2_anon.alphabet_size() != dist.alphabet_size()
    {
        return Err(HarnessError::Config(format!(
            "pair directory is inconsistent: graphs use alphabet {}, distribution {}",
            g1.alphabet_size(),
            dist.alphabet_size()
        )));
    }
    Ok(MatchInstance { g1, g2_anon, secret, dist })
}

/// Matches a generated pair directory and prints one CSV row. The
/// elapsed time is deliberately not a column; rows must be byte-stable.
pub fn cmd_match(
    pair_dir: &Path,
    epsilon: EpsilonChoice,
    mode: SearchMode,
    seed: u64,
) -> Result<CmdOutput, HarnessError> {
    let inst = load_pair_dir(pair_dir)?;
    let config = MatchConfig { epsilon, mode, seed, ..MatchConfig::default() };
    let outcome = match_instance(&inst, &config)?;
    let n = inst.g1.n();
    let eps = epsilon.resolve(n);
    let mut row = format!(
        "{},{},{:.9},{},{},",
        n,
        inst.dist.alphabet_size(),
        eps,
        mode_name(mode),
        mode == SearchMode::Greedy
    );
    match outcome {
        MatchOutcome::Matched(r) => {
            let _ = write!(
                row,
                "matched,{},{:.6},{},{:.6},{},{}",
                r.candidate_count,
                r.correct_fraction,
                r.mismatch_count,
                r.max_deviation,
                r.automorphism_ties,
                seed
            );
        }
        MatchOutcome::NoTypicalLabeling { .. } => {
            let _ = write!(row, "empty,0,,,,,{seed}");
        }
    }
    Ok(CmdOutput {
        stdout: format!("{MATCH_CSV_HEADER}\n{row}\n"),
        stderr: near_zero_warning(&inst.dist),
    })
}

/// Estimates the permuted-pair typicality probability for a cycle type,
/// exactly when the enumeration guard allows it and by Monte Carlo
/// otherwise, and prints it next to the decay bound.
#[allow(clippy::too_many_arguments)]
pub fn cmd_permtyp(
    dist_path: &Path,
    n: usize,
    cycles: &str,
    epsilon: f64,
    trials: u64,
    t: Option<usize>,
    seed: u64,
    trust_positive_m: bool,
) -> Result<CmdOutput, HarnessError> {
    let dist = JointDist::parse(&read_file(dist_path)?)?;
    let ct: CycleType =
        cycles.parse().map_err(|e: crate::perm::PermError| HarnessError::Config(e.to_string()))?;
    if ct.n() != n {
        return Err(HarnessError::Config(format!(
            "cycle type {ct} covers {} points but --n is {n}",
            ct.n()
        )));
    }
    if epsilon < 0.0 {
        return Err(HarnessError::Config(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let perm = ct.standard_permutation();
    let l = dist.alphabet_size();
    let states = ((l * l) as u128).saturating_pow(n as u32);
    let est: (bool, McEstimate) = if states <= MAX_ENUM_STATES as u128 {
        let exact = exact_permutation_typicality(&dist, &perm, epsilon)?;
        (
            true,
            McEstimate { estimate: exact, ci_lo: exact, ci_hi: exact, trials: 0, successes: 0 },
        )
    } else {
        (false, mc_permutation_typicality(&dist, &perm, epsilon, trials, seed))
    };
    let bound = typicality_bound(&dist, &ct, epsilon, t, trust_positive_m)?;
    let mut stderr = near_zero_warning(&dist);
    if !bound.valid {
        let why = bound.note.as_deref().unwrap_or("hypotheses not met");
        let _ = writeln!(stderr, "warning: decay bound is vacuous here: {why}");
    }
    let (is_exact, e) = est;
    let row = format!(
        "{},\"{}\",{:.9},{},{:.10e},{:.10e},{:.10e},{:.10e}",
        n, ct, epsilon, is_exact, e.estimate, e.ci_lo, e.ci_hi, bound.bound
    );
    Ok(CmdOutput { stdout: format!("{PERMTYP_CSV_HEADER}\n{row}\n"), stderr })
}

/// Prints the mutual information of a distribution file, base 2 or e.
pub fn cmd_mi(dist_path: &Path, base: LogBase) -> Result<CmdOutput, HarnessError> {
    let dist = JointDist::parse(&read_file(dist_path)?)?;
    Ok(CmdOutput {
        stdout: format!("{:.12}\n", dist.mutual_information(base)),
        stderr: near_zero_warning(&dist),
    })
}

/// The grid a sweep runs over: the one-parameter family of uniform
/// mixtures, indexed by correlation `rho`, crossed with vertex counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub rho_list: Vec<f64>,
    pub trials: usize,
    pub epsilon: EpsilonChoice,
    pub seed: u64,
    pub mode: SearchMode,
    /// Alphabet size of the family; 2 unless the config overrides it.
    pub l: usize,
}

impl SweepConfig {
    /// Parses the flat `key=value` config format. Keys: `n_list`,
    /// `rho_list`, `trials`, `epsilon` (`auto` or a number), `seed`,
    /// `mode`, and optionally `l`. Blank lines and `#` comments are
    /// ignored; unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let bad = |msg: String| HarnessError::Config(msg);
        let mut seen = std::collections::HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if seen.insert(key.clone(), value).is_some() {
                return Err(bad(format!("key {key} given twice")));
            }
        }
        let mut take = |key: &str| {
            seen.remove(key).ok_or_else(|| bad(format!("missing required key {key}")))
        };

        let n_list = take("n_list")?
            .split(',')
            .map(|tok| tok.trim().parse::<usize>().map_err(|_| bad(format!("bad n {tok:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let rho_list = take("rho_list")?
            .split(',')
            .map(|tok| tok.trim().parse::<f64>().map_err(|_| bad(format!("bad rho {tok:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let trials = take("trials")?
            .parse::<usize>()
            .map_err(|_| bad("trials must be a positive integer".into()))?;
        let epsilon = parse_epsilon_arg(&take("epsilon")?).map_err(bad)?;
        let seed =
            take("seed")?.parse::<u64>().map_err(|_| bad("seed must be an integer".into()))?;
        let mode = parse_mode_arg(&take("mode")?).map_err(bad)?;
        let l = match seen.remove("l") {
            None => 2,
            Some(v) => v.parse::<usize>().map_err(|_| bad(format!("bad l {v:?}")))?,
        };
        if let Some(key) = seen.into_keys().next() {
            return Err(bad(format!("unknown key {key}")));
        }

        if n_list.is_empty() || n_list.iter().any(|&n| n < 2) {
            return Err(bad("n_list needs entries of at least 2".into()));
        }
        if rho_list.is_empty() || rho_list.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return Err(bad("rho_list entries must lie in [0,1]".into()));
        }
        if trials == 0 {
            return Err(bad("trials must be at least 1".into()));
        }
        Ok(SweepConfig { n_list, rho_list, trials, epsilon, seed, mode, l })
    }
}

/// One matched-or-not instance inside a sweep cell.
#[derive(Debug, Clone)]
pub struct InstanceRecord {
    pub instance_seed: u64,
    pub matched: bool,
    /// Meaningful only when matched.
    pub correct_fraction: f64,
    pub candidate_count: usize,
    pub automorphism_ties: usize,
}

/// Everything a sweep learned about one (n, rho) cell.
#[derive(Debug, Clone)]
pub struct CellStats {
    pub n: usize,
    pub rho: f64,
    pub mi_bits: f64,
    pub epsilon: f64,
    pub records: Vec<InstanceRecord>,
}

impl CellStats {
    fn matched(&self) -> impl Iterator<Item = &InstanceRecord> {
        self.records.iter().filter(|r| r.matched)
    }

    /// Mean correct fraction over matched instances; empty cells have no
    /// mean and serialize as an empty field.
    pub fn mean_correct_fraction(&self) -> Option<f64> {
        mean(self.matched().map(|r| r.correct_fraction))
    }

    /// Sample standard deviation over matched instances (0 for a single
    /// one).
    pub fn std_correct_fraction(&self) -> Option<f64> {
        sample_std(self.matched().map(|r| r.correct_fraction))
    }

    pub fn mean_candidate_count(&self) -> Option<f64> {
        mean(self.matched().map(|r| r.candidate_count as f64))
    }

    /// Fraction of instances whose candidate set was empty.
    pub fn empty_sigma_rate(&self) -> f64 {
        let empty = self.records.iter().filter(|r| !r.matched).count();
        empty as f64 / self.records.len() as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let values: Vec<f64> = values.collect();
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn sample_std(values: impl Iterator<Item = f64>) -> Option<f64> {
    let values: Vec<f64> = values.collect();
    match values.len() {
        0 => None,
        1 => Some(0.0),
        k => {
            let m = values.iter().sum::<f64>() / k as f64;
            let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (k - 1) as f64;
            Some(var.sqrt())
        }
    }
}

/// Runs one cell of the sweep grid. Instance seeds are derived from
/// (master seed, n, rho position, trial index), so any cell can be
/// recomputed alone and trials can run on any number of threads.
pub fn run_sweep_cell(
    cfg: &SweepConfig,
    n: usize,
    rho_index: usize,
) -> Result<CellStats, HarnessError> {
    let rho = cfg.rho_list[rho_index];
    let dist = JointDist::correlated_uniform(cfg.l, rho)?;
    let records: Vec<InstanceRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<InstanceRecord, HarnessError> {
            let instance_seed = derive_seed(
                cfg.seed,
                &[streams::SWEEP, n as u64, rho_index as u64, trial as u64],
            );
            let inst = MatchInstance::generate(&dist, n, instance_seed)?;
            let config = MatchConfig {
                epsilon: cfg.epsilon,
                mode: cfg.mode,
                seed: instance_seed,
                ..MatchConfig::default()
            };
            Ok(match match_instance(&inst, &config)? {
                MatchOutcome::Matched(r) => InstanceRecord {
                    instance_seed,
                    matched: true,
                    correct_fraction: r.correct_fraction,
                    candidate_count: r.candidate_count,
                    automorphism_ties: r.automorphism_ties,
                },
                MatchOutcome::NoTypicalLabeling { .. } => InstanceRecord {
                    instance_seed,
                    matched: false,
                    correct_fraction: 0.0,
                    candidate_count: 0,
                    automorphism_ties: 0,
                },
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CellStats {
        n,
        rho,
        mi_bits: dist.mutual_information(LogBase::Two),
        epsilon: cfg.epsilon.resolve(n),
        records,
    })
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Runs the full grid in the order the config lists it and renders the
/// CSV, one row per cell.
pub fn run_sweep(cfg: &SweepConfig) -> Result<String, HarnessError> {
    let mut csv = format!("{SWEEP_CSV_HEADER}\n");
    for &n in &cfg.n_list {
        for rho_index in 0..cfg.rho_list.len() {
            let cell = run_sweep_cell(cfg, n, rho_index)?;
            let _ = writeln!(
                csv,
                "{},{:.6},{:.15},{:.9},{},{},{},{},{:.6},{}",
                cell.n,
                cell.rho,
                cell.mi_bits,
                cell.epsilon,
                cfg.trials,
                opt_field(cell.mean_correct_fraction()),
                opt_field(cell.std_correct_fraction()),
                opt_field(cell.mean_candidate_count()),
                cell.empty_sigma_rate(),
                cfg.seed
            );
        }
    }
    Ok(csv)
}

/// Parses the config, runs the sweep, writes the CSV.
pub fn cmd_sweep(config_path: &Path, out_path: &Path) -> Result<CmdOutput, HarnessError> {
    let cfg = SweepConfig::parse(&read_file(config_path)?)?;
    let csv = run_sweep(&cfg)?;
    write_file(out_path, &csv)?;
    let cells = cfg.n_list.len() * cfg.rho_list.len();
    Ok(CmdOutput { stdout: format!("wrote {cells} cells\n"), ..Default::default() })
}
