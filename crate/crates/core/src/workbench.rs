//! Instance generators, file formats, and experiment drivers.
//!
//! Experiments are reproducible end to end: the generator is deterministic
//! given its spec (including its own seed), per-trial selector seeds derive
//! from the master seed through a splittable counter scheme, and trials
//! aggregate in trial order, so parallel and serial runs emit identical
//! bytes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ocs::{Element, OcsError, Pair, Selector, SelectorKind};
use crate::oracle::{offline_optimum, Instance, OracleError};
use crate::primal_dual::{replay_value, Engine, EngineError, GainTable, RoundRecord, TranscriptRound};
use crate::recurrences::RecurrenceTable;
use crate::unweighted::{
    perfect_correlation_sim, TieBreak, UnweightedDualTable, UnweightedEngine, UnweightedError,
};

#[derive(Debug)]
pub enum WorkbenchError {
    SpecParse(String),
    BadParameter(String),
    EngineInstanceMismatch(String),
    Io(std::io::Error),
    Json(serde_json::Error),
    Oracle(OracleError),
    Engine(EngineError),
    Unweighted(UnweightedError),
    Ocs(OcsError),
}

impl fmt::Display for WorkbenchError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            WorkbenchError::SpecParse(msg) => write!(f, "cannot parse generator spec: {}", msg),
            WorkbenchError::BadParameter(msg) => write!(f, "bad parameter: {}", msg),
            WorkbenchError::EngineInstanceMismatch(msg) => write!(f, "{}", msg),
            WorkbenchError::Io(e) => write!(f, "io error: {}", e),
            WorkbenchError::Json(e) => write!(f, "json error: {}", e),
            WorkbenchError::Oracle(e) => write!(f, "{}", e),
            WorkbenchError::Engine(e) => write!(f, "{}", e),
            WorkbenchError::Unweighted(e) => write!(f, "{}", e),
            WorkbenchError::Ocs(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for WorkbenchError {}

impl From<std::io::Error> for WorkbenchError {
    fn from(e: std::io::Error) -> Self {
        WorkbenchError::Io(e)
    }
}

impl From<serde_json::Error> for WorkbenchError {
    fn from(e: serde_json::Error) -> Self {
        WorkbenchError::Json(e)
    }
}

impl From<OracleError> for WorkbenchError {
    fn from(e: OracleError) -> Self {
        WorkbenchError::Oracle(e)
    }
}

impl From<EngineError> for WorkbenchError {
    fn from(e: EngineError) -> Self {
        WorkbenchError::Engine(e)
    }
}

impl From<UnweightedError> for WorkbenchError {
    fn from(e: UnweightedError) -> Self {
        WorkbenchError::Unweighted(e)
    }
}

impl From<OcsError> for WorkbenchError {
    fn from(e: OcsError) -> Self {
        WorkbenchError::Ocs(e)
    }
}

/// Per-trial selector seed: SplitMix64 over the (master seed, trial) pair,
/// so trials are independent of execution order and thread count.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(master_seed ^ mix(trial.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// What instance to build.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// Online vertex `j` neighbors offline vertices `j..n`, all weight 1.
    UpperTriangular { n: usize },
    /// Diagonal edge certain; edge `(i, j)` for `i > j` present
    /// independently with probability `p_edge`.
    ErUpperTriangular { n: usize, p_edge: f64, seed: u64 },
    /// The 9-vertex upper triangular walkthrough instance.
    NineVertexTriangular,
    /// Random weighted bipartite graph; weights uniform on `(0, max_weight]`.
    RandomBipartite { n: usize, m: usize, max_weight: f64, density: f64, seed: u64 },
    File { path: PathBuf },
}

impl GeneratorSpec {
    /// Parse the CLI form: `ut:N`, `er_ut:N:P[:SEED]`, `nine`,
    /// `rand:N:M:MAXW:DENSITY[:SEED]`, `file:PATH`. Seeds default to
    /// `default_seed`.
    pub fn parse(text: &str, default_seed: u64) -> Result<Self, WorkbenchError> {
        let parts: Vec<&str> = text.split(':').collect();
        let parse_usize = |s: &str, what: &str| -> Result<usize, WorkbenchError> {
            s.parse()
                .map_err(|_| WorkbenchError::SpecParse(format!("{} `{}` in `{}`", what, s, text)))
        };
        let parse_f64 = |s: &str, what: &str| -> Result<f64, WorkbenchError> {
            s.parse()
                .map_err(|_| WorkbenchError::SpecParse(format!("{} `{}` in `{}`", what, s, text)))
        };
        let parse_u64 = |s: &str, what: &str| -> Result<u64, WorkbenchError> {
            s.parse()
                .map_err(|_| WorkbenchError::SpecParse(format!("{} `{}` in `{}`", what, s, text)))
        };
        match parts.as_slice() {
            ["ut", n] => Ok(GeneratorSpec::UpperTriangular { n: parse_usize(n, "n")? }),
            ["er_ut", n, p] => Ok(GeneratorSpec::ErUpperTriangular {
                n: parse_usize(n, "n")?,
                p_edge: parse_f64(p, "p_edge")?,
                seed: default_seed,
            }),
            ["er_ut", n, p, seed] => Ok(GeneratorSpec::ErUpperTriangular {
                n: parse_usize(n, "n")?,
                p_edge: parse_f64(p, "p_edge")?,
                seed: parse_u64(seed, "seed")?,
            }),
            ["nine"] => Ok(GeneratorSpec::NineVertexTriangular),
            ["rand", n, m, maxw, density] => Ok(GeneratorSpec::RandomBipartite {
                n: parse_usize(n, "n")?,
                m: parse_usize(m, "m")?,
                max_weight: parse_f64(maxw, "max_weight")?,
                density: parse_f64(density, "density")?,
                seed: default_seed,
            }),
            ["rand", n, m, maxw, density, seed] => Ok(GeneratorSpec::RandomBipartite {
                n: parse_usize(n, "n")?,
                m: parse_usize(m, "m")?,
                max_weight: parse_f64(maxw, "max_weight")?,
                density: parse_f64(density, "density")?,
                seed: parse_u64(seed, "seed")?,
            }),
            ["file", ..] => Ok(GeneratorSpec::File {
                path: PathBuf::from(text.strip_prefix("file:").unwrap()),
            }),
            _ => Err(WorkbenchError::SpecParse(text.to_owned())),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GeneratorSpec::UpperTriangular { n } => format!("ut:{}", n),
            GeneratorSpec::ErUpperTriangular { n, p_edge, seed } => {
                format!("er_ut:{}:{}:{}", n, p_edge, seed)
            }
            GeneratorSpec::NineVertexTriangular => "nine".to_owned(),
            GeneratorSpec::RandomBipartite { n, m, max_weight, density, seed } => {
                format!("rand:{}:{}:{}:{}:{}", n, m, max_weight, density, seed)
            }
            GeneratorSpec::File { path } => format!("file:{}", path.display()),
        }
    }
}

fn upper_triangular_instance(n: usize, name: &str) -> Instance {
    Instance {
        name: name.to_owned(),
        n_offline: n,
        arrivals: (0..n)
            .map(|j| (j..n).map(|i| (i, 1.0)).collect())
            .collect(),
        seed: None,
        generator: Some(name.to_owned()),
    }
}

/// Build the instance a spec describes; deterministic given the spec.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance, WorkbenchError> {
    match spec {
        GeneratorSpec::UpperTriangular { n } => {
            if *n == 0 {
                return Err(WorkbenchError::BadParameter("ut: n must be >= 1".into()));
            }
            Ok(upper_triangular_instance(*n, &spec.describe()))
        }
        GeneratorSpec::NineVertexTriangular => Ok(upper_triangular_instance(9, "nine")),
        GeneratorSpec::ErUpperTriangular { n, p_edge, seed } => {
            if *n == 0 {
                return Err(WorkbenchError::BadParameter("er_ut: n must be >= 1".into()));
            }
            if !(0.0..=1.0).contains(p_edge) {
                return Err(WorkbenchError::BadParameter(format!(
                    "er_ut: p_edge {} outside [0, 1]",
                    p_edge
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let arrivals = (0..*n)
                .map(|j| {
                    let mut edges = vec![(j, 1.0)];
                    for i in j + 1..*n {
                        if rng.gen_bool(*p_edge) {
                            edges.push((i, 1.0));
                        }
                    }
                    edges
                })
                .collect();
            Ok(Instance {
                name: spec.describe(),
                n_offline: *n,
                arrivals,
                seed: Some(*seed),
                generator: Some(spec.describe()),
            })
        }
        GeneratorSpec::RandomBipartite { n, m, max_weight, density, seed } => {
            if *n == 0 || *m == 0 {
                return Err(WorkbenchError::BadParameter("rand: n, m must be >= 1".into()));
            }
            if !(0.0..=1.0).contains(density) {
                return Err(WorkbenchError::BadParameter(format!(
                    "rand: density {} outside [0, 1]",
                    density
                )));
            }
            if !(max_weight.is_finite() && *max_weight > 0.0) {
                return Err(WorkbenchError::BadParameter(format!(
                    "rand: max_weight {} must be positive",
                    max_weight
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut arrivals: Vec<Vec<(usize, f64)>> = (0..*m)
                .map(|_| {
                    let mut edges = Vec::new();
                    for i in 0..*n {
                        if rng.gen_bool(*density) {
                            // Uniform on (0, max_weight]: no zero-weight edges.
                            let w = (1.0 - rng.gen::<f64>()) * max_weight;
                            edges.push((i, w));
                        }
                    }
                    edges
                })
                .collect();
            if arrivals.iter().all(|a| a.is_empty()) {
                arrivals[0].push((0, *max_weight));
            }
            Ok(Instance {
                name: spec.describe(),
                n_offline: *n,
                arrivals,
                seed: Some(*seed),
                generator: Some(spec.describe()),
            })
        }
        GeneratorSpec::File { path } => read_instance(path),
    }
}

// ---------------------------------------------------------------------------
// Instance files
// ---------------------------------------------------------------------------

pub fn instance_to_json(instance: &Instance) -> Result<String, WorkbenchError> {
    let mut s = serde_json::to_string_pretty(instance)?;
    s.push('\n');
    Ok(s)
}

pub fn instance_from_json(text: &str) -> Result<Instance, WorkbenchError> {
    let instance: Instance = serde_json::from_str(text)?;
    instance.validate()?;
    Ok(instance)
}

pub fn write_instance(path: &Path, instance: &Instance) -> Result<(), WorkbenchError> {
    fs::write(path, instance_to_json(instance)?)?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<Instance, WorkbenchError> {
    instance_from_json(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/// Engine selection for experiment and single runs.
#[derive(Debug, Clone)]
pub enum ExperimentEngine {
    EdgeWeighted { table: GainTable },
    Unweighted { table: UnweightedDualTable, tie: TieBreak },
    /// The imaginary fractional baseline; deterministic.
    PerfectCorrelation,
    /// Two-choice greedy with a fresh fair bit per randomized round.
    IndependentGreedy { tie: TieBreak },
}

impl ExperimentEngine {
    pub fn id(&self) -> String {
        match self {
            ExperimentEngine::EdgeWeighted { table } => format!("edge_weighted({})", table.label()),
            ExperimentEngine::Unweighted { table, tie } => {
                format!("unweighted({},{})", table.label(), tie_id(*tie))
            }
            ExperimentEngine::PerfectCorrelation => "perfect_correlation".into(),
            ExperimentEngine::IndependentGreedy { tie } => {
                format!("independent_greedy({})", tie_id(*tie))
            }
        }
    }
}

fn tie_id(tie: TieBreak) -> &'static str {
    match tie {
        TieBreak::SmallestId => "smallest",
        TieBreak::ReverseLex => "reverse_lex",
    }
}

fn selector_id(kind: SelectorKind) -> String {
    kind.to_string()
}

/// Aggregated outcome of a batch of seeded trials on one instance.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub instance_name: String,
    pub generator: Option<String>,
    pub n_offline: usize,
    pub n_online: usize,
    pub engine_id: String,
    pub selector_id: String,
    pub trials: usize,
    pub master_seed: u64,
    pub opt: f64,
    /// Realized value per trial, indexed by trial.
    pub values: Vec<f64>,
    pub mean_value: f64,
    pub mean_ratio: f64,
    pub std_error: f64,
}

impl ExperimentResult {
    fn aggregate(
        instance: &Instance,
        engine_id: String,
        selector_id: String,
        master_seed: u64,
        opt: f64,
        values: Vec<f64>,
    ) -> Self {
        let trials = values.len();
        let mean_value = values.iter().sum::<f64>() / trials as f64;
        let ratios: Vec<f64> = values.iter().map(|v| v / opt).collect();
        let mean_ratio = mean_value / opt;
        let var = ratios
            .iter()
            .map(|r| (r - mean_ratio) * (r - mean_ratio))
            .sum::<f64>()
            / (trials.max(2) - 1) as f64;
        let std_error = (var / trials as f64).sqrt();
        ExperimentResult {
            instance_name: instance.name.clone(),
            generator: instance.generator.clone(),
            n_offline: instance.n_offline,
            n_online: instance.n_online(),
            engine_id,
            selector_id,
            trials,
            master_seed,
            opt,
            values,
            mean_value,
            mean_ratio,
            std_error,
        }
    }
}

fn g_table_for(kind: SelectorKind) -> RecurrenceTable {
    match kind {
        SelectorKind::Warmup => RecurrenceTable::warmup(),
        SelectorKind::Improved { p } => {
            RecurrenceTable::improved(p).expect("selector validated p already")
        }
        // Independent bits: no correlation, the recurrence is identically 1.
        SelectorKind::Independent => {
            RecurrenceTable::improved(0.0).expect("0 is a valid coefficient probability")
        }
    }
}

/// Run the structure once and replay per-trial selections. Valid because
/// round structure is seed-independent for both engines.
fn structure_rounds(
    instance: &Instance,
    engine: &ExperimentEngine,
    selector_kind: SelectorKind,
) -> Result<Vec<TranscriptRound>, WorkbenchError> {
    let mut sel = Selector::new(selector_kind, 0)?;
    match engine {
        ExperimentEngine::EdgeWeighted { table } => {
            let mut e = Engine::new(instance.n_offline, table.clone());
            for arrival in &instance.arrivals {
                e.arrive(arrival, &mut sel)?;
            }
            Ok(e.rounds())
        }
        ExperimentEngine::Unweighted { table, tie } => {
            let neighbors = instance.unit_neighbors().ok_or_else(|| {
                WorkbenchError::EngineInstanceMismatch(
                    "unweighted engine requires a unit-weight instance".into(),
                )
            })?;
            let mut e = UnweightedEngine::new(
                instance.n_offline,
                table.clone(),
                g_table_for(selector_kind),
                *tie,
            );
            for a in &neighbors {
                e.greedy_arrive(a, &mut sel)?;
            }
            Ok(e.rounds())
        }
        _ => unreachable!("structure_rounds is only called for transcript engines"),
    }
}

/// Run a seeded batch: the offline optimum is computed once, per-trial
/// seeds derive from the master seed, and aggregation is by trial index.
pub fn run_experiment(
    spec: &GeneratorSpec,
    engine: &ExperimentEngine,
    selector_kind: SelectorKind,
    trials: usize,
    master_seed: u64,
) -> Result<ExperimentResult, WorkbenchError> {
    if trials == 0 {
        return Err(WorkbenchError::BadParameter("trials must be >= 1".into()));
    }
    let instance = generate(spec)?;
    let opt = offline_optimum(&instance)?;
    if opt <= 0.0 {
        return Err(WorkbenchError::BadParameter(
            "instance has zero offline optimum; ratios are undefined".into(),
        ));
    }

    let selector_kind = match engine {
        ExperimentEngine::IndependentGreedy { .. } => SelectorKind::Independent,
        _ => selector_kind,
    };

    let values: Vec<f64> = match engine {
        ExperimentEngine::PerfectCorrelation => {
            let neighbors = instance.unit_neighbors().ok_or_else(|| {
                WorkbenchError::EngineInstanceMismatch(
                    "perfect_correlation requires a unit-weight instance".into(),
                )
            })?;
            let v = perfect_correlation_sim(instance.n_offline, &neighbors);
            vec![v; trials]
        }
        ExperimentEngine::EdgeWeighted { .. } | ExperimentEngine::Unweighted { .. } => {
            let rounds = structure_rounds(&instance, engine, selector_kind)?;
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut sel = Selector::new(selector_kind, trial_seed(master_seed, t as u64))
                        .expect("selector kind validated");
                    replay_value(&rounds, &mut sel).expect("engine pairs are never degenerate")
                })
                .collect()
        }
        ExperimentEngine::IndependentGreedy { tie } => {
            let inner = ExperimentEngine::Unweighted {
                table: crate::unweighted::table_3(),
                tie: *tie,
            };
            let rounds = structure_rounds(&instance, &inner, selector_kind)?;
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut sel = Selector::new(selector_kind, trial_seed(master_seed, t as u64))
                        .expect("selector kind validated");
                    replay_value(&rounds, &mut sel).expect("engine pairs are never degenerate")
                })
                .collect()
        }
    };

    Ok(ExperimentResult::aggregate(
        &instance,
        engine.id(),
        selector_id(selector_kind),
        master_seed,
        opt,
        values,
    ))
}

// ---------------------------------------------------------------------------
// Monte Carlo selection frequencies
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeverSelectedStats {
    pub trials: u64,
    pub never_count: u64,
    pub frequency: f64,
}

/// Empirical probability that `element` is selected in none of the indexed
/// pairs, over seeded trials.
pub fn montecarlo_never_selected(
    kind: SelectorKind,
    pairs: &[Pair],
    element: Element,
    subsequence: &[usize],
    trials: u64,
    master_seed: u64,
) -> Result<NeverSelectedStats, WorkbenchError> {
    for &idx in subsequence {
        if idx >= pairs.len() {
            return Err(WorkbenchError::Ocs(OcsError::IndexOutOfRange {
                index: idx,
                len: pairs.len(),
            }));
        }
    }
    let in_subsequence: Vec<bool> = {
        let mut v = vec![false; pairs.len()];
        for &idx in subsequence {
            v[idx] = true;
        }
        v
    };
    let never_count: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut sel =
                Selector::new(kind, trial_seed(master_seed, t)).expect("kind validated by caller");
            let mut never = true;
            for (idx, &pair) in pairs.iter().enumerate() {
                let chosen = sel.select(pair).expect("pairs validated by caller");
                if in_subsequence[idx] && chosen == element {
                    never = false;
                }
            }
            u64::from(never)
        })
        .sum();
    Ok(NeverSelectedStats {
        trials,
        never_count,
        frequency: never_count as f64 / trials as f64,
    })
}

/// A binding-case stress sequence: element 0 appears in exactly `k`
/// consecutive pairs, each partner introduced by an earlier pair, padded
/// with dummy pairs to `total_len`. Returns the sequence and the indices
/// of the pairs containing element 0.
pub fn adversarial_consecutive_sequence(k: usize, total_len: usize) -> (Vec<Pair>, Vec<usize>) {
    assert!(2 * k <= total_len, "need room for {} intro and run pairs", k);
    let mut pairs = Vec::with_capacity(total_len);
    // Partners 1..=k, introducers' mates k+1..=2k.
    for s in 0..k {
        pairs.push(Pair::new(Element(1 + s as u32), Element(1 + (k + s) as u32)));
    }
    let indices: Vec<usize> = (k..2 * k).collect();
    for s in 0..k {
        pairs.push(Pair::new(Element(0), Element(1 + s as u32)));
    }
    let mut next_dummy = 1 + 2 * k as u32;
    while pairs.len() < total_len {
        pairs.push(Pair::new(Element(next_dummy), Element(next_dummy + 1)));
        next_dummy += 2;
    }
    (pairs, indices)
}

// ---------------------------------------------------------------------------
// Table files
// ---------------------------------------------------------------------------

/// On-disk table format for user-supplied gain tables.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind")]
pub enum TableFile {
    #[serde(rename = "edge_weighted")]
    EdgeWeighted {
        label: String,
        gamma: f64,
        kappa: f64,
        big_gamma: f64,
        a: Vec<f64>,
        b: Vec<f64>,
    },
    #[serde(rename = "unweighted")]
    Unweighted {
        label: String,
        big_gamma: f64,
        dalpha: Vec<f64>,
        dbeta: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub enum ResolvedTable {
    Gain(GainTable),
    Unweighted(UnweightedDualTable),
}

/// Resolve a `--table` argument: `1a`, `1b`, `t3`, or `file:PATH`.
pub fn resolve_table(spec: &str) -> Result<ResolvedTable, WorkbenchError> {
    match spec {
        "1a" => Ok(ResolvedTable::Gain(crate::primal_dual::table_1a())),
        "1b" => Ok(ResolvedTable::Gain(crate::primal_dual::table_1b())),
        "t3" => Ok(ResolvedTable::Unweighted(crate::unweighted::table_3())),
        _ => {
            let Some(path) = spec.strip_prefix("file:") else {
                return Err(WorkbenchError::BadParameter(format!(
                    "unknown table `{}` (expected 1a, 1b, t3, or file:PATH)",
                    spec
                )));
            };
            let text = fs::read_to_string(path)?;
            let file: TableFile = serde_json::from_str(&text)?;
            match file {
                TableFile::EdgeWeighted { label, gamma, kappa, big_gamma, a, b } => {
                    let table = GainTable::new(&label, gamma, kappa, big_gamma, a, b)
                        .map_err(|e| WorkbenchError::BadParameter(e.to_string()))?;
                    Ok(ResolvedTable::Gain(table))
                }
                TableFile::Unweighted { label, big_gamma, dalpha, dbeta } => {
                    let table = UnweightedDualTable::new(&label, big_gamma, dalpha, dbeta)
                        .map_err(|e| WorkbenchError::BadParameter(e.to_string()))?;
                    Ok(ResolvedTable::Unweighted(table))
                }
            }
        }
    }
}

/// Certified never-selected bound for the indexed pairs: the product over
/// the maximal consecutive runs of `2^-k` times the selector's recurrence
/// value at `k`.
pub fn never_selected_bound(
    kind: SelectorKind,
    pairs: &[Pair],
    element: Element,
    subsequence: &[usize],
) -> Result<f64, WorkbenchError> {
    let runs = crate::ocs::consecutive_decomposition(pairs, element, subsequence)?;
    let table = g_table_for(kind);
    Ok(runs.iter().map(|&k| table.bound_factor(k)).product())
}

// ---------------------------------------------------------------------------
// CSV schemas
// ---------------------------------------------------------------------------

/// Experiment CSV: one row per trial, `trial,value,opt,ratio`.
pub fn experiment_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("trial,value,opt,ratio\n");
    for (t, v) in result.values.iter().enumerate() {
        out.push_str(&format!("{},{},{},{}\n", t, v, result.opt, v / result.opt));
    }
    out
}

/// Transcript CSV: `round,type,i1,i2,selected,beta,pbar,dual`; fields that
/// do not apply to a round type stay empty.
pub fn transcript_csv(records: &[RoundRecord]) -> String {
    let mut out = String::from("round,type,i1,i2,selected,beta,pbar,dual\n");
    for (idx, rec) in records.iter().enumerate() {
        let (kind, i1, i2, selected) = match &rec.round {
            TranscriptRound::Unmatched => ("unmatched", String::new(), String::new(), String::new()),
            TranscriptRound::Deterministic { vertex, .. } => {
                ("deterministic", vertex.to_string(), String::new(), vertex.to_string())
            }
            TranscriptRound::Randomized { i1, i2, selected, .. } => {
                ("randomized", i1.to_string(), i2.to_string(), selected.to_string())
            }
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            idx, kind, i1, i2, selected, rec.beta, rec.pbar, rec.dual
        ));
    }
    out
}
