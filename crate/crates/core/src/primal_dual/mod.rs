//! Edge-weighted online matching engine with CCDF-based primal/dual
//! bookkeeping.
//!
//! For every offline vertex `i` and weight-level `w > 0` the engine
//! maintains step functions over `w`:
//!
//! * `k_i(w)` — how many randomized rounds chose `i` as a candidate with
//!   edge weight at least `w` (infinite once a deterministic round matched
//!   `i` at weight at least `w`);
//! * `alpha_i(w)` — the offline dual share;
//! * `ybar_i(w)` — a certified lower bound on the probability that `i` is
//!   matched at weight at least `w`, driven by the selector's correlation
//!   guarantee.
//!
//! On each arrival the engine scores every offline vertex by the dual gain
//! of a randomized round (`delta_r`) and of a deterministic round
//! (`delta_d = kappa * delta_r`), picks the round type greedily, matches
//! through the selector, and applies the dual update rules. The
//! [`Engine::check_invariants`] report certifies approximate dual
//! feasibility and reverse weak duality on the actual execution.

pub mod step;

use std::fmt;

use crate::ocs::{Element, OcsError, Pair, Selector};
pub use step::{Piece, StepFunction};

/// A randomized-round count that saturates at infinity after a
/// deterministic match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtendedCount {
    Finite(u32),
    Infinite,
}

impl ExtendedCount {
    pub fn increment(&mut self) {
        if let ExtendedCount::Finite(k) = self {
            *k += 1;
        }
    }

    pub fn finite(&self) -> Option<u32> {
        match self {
            ExtendedCount::Finite(k) => Some(*k),
            ExtendedCount::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedCount::Infinite)
    }
}

impl fmt::Display for ExtendedCount {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            ExtendedCount::Finite(k) => k.fmt(f),
            ExtendedCount::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EngineError {
    VertexOutOfRange { vertex: usize, n: usize },
    DuplicateVertex(usize),
    InvalidWeight { vertex: usize, weight: f64 },
    Selector(OcsError),
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            EngineError::VertexOutOfRange { vertex, n } => {
                write!(f, "offline vertex {} out of range for {} vertices", vertex, n)
            }
            EngineError::DuplicateVertex(v) => write!(f, "duplicate weight entry for vertex {}", v),
            EngineError::InvalidWeight { vertex, weight } => {
                write!(f, "weight {} for vertex {} is not a finite nonnegative real", weight, vertex)
            }
            EngineError::Selector(e) => write!(f, "selector error: {}", e),
        }
    }
}

impl std::error::Error for EngineError {}

impl From<OcsError> for EngineError {
    fn from(e: OcsError) -> Self {
        EngineError::Selector(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableError {
    LengthMismatch,
    NegativeEntry { index: usize, value: f64 },
    KappaOutOfRange(f64),
    GammaOutOfRange(f64),
    PrepaySplitViolated { a0: f64, half_gamma: f64 },
}

impl fmt::Display for TableError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            TableError::LengthMismatch => write!(f, "a and b must have equal lengths"),
            TableError::NegativeEntry { index, value } => {
                write!(f, "table entry {} at index {} is negative", value, index)
            }
            TableError::KappaOutOfRange(k) => write!(f, "kappa {} must lie strictly in (1, 2)", k),
            TableError::GammaOutOfRange(g) => write!(f, "gamma {} must lie in [0, 1]", g),
            TableError::PrepaySplitViolated { a0, half_gamma } => {
                write!(f, "a(0) = {} must be at least gamma/2 = {}", a0, half_gamma)
            }
        }
    }
}

impl std::error::Error for TableError {}

/// Gain-sharing parameters `a(k)`, `b(k)` splitting each randomized round's
/// certified primal increment between the offline dual `alpha` and the
/// online dual `beta`, together with the correlation level `gamma`, the
/// deterministic-offer multiplier `kappa`, and the competitive ratio
/// `Gamma` the table certifies. Entries vanish beyond `k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    label: String,
    gamma: f64,
    kappa: f64,
    big_gamma: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    prefix_a: Vec<f64>,
}

impl GainTable {
    pub fn new(
        label: &str,
        gamma: f64,
        kappa: f64,
        big_gamma: f64,
        a: Vec<f64>,
        b: Vec<f64>,
    ) -> Result<Self, TableError> {
        if a.len() != b.len() || a.is_empty() {
            return Err(TableError::LengthMismatch);
        }
        if !(kappa > 1.0 && kappa < 2.0) {
            return Err(TableError::KappaOutOfRange(kappa));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(TableError::GammaOutOfRange(gamma));
        }
        for (idx, &v) in a.iter().chain(b.iter()).enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(TableError::NegativeEntry { index: idx % a.len(), value: v });
            }
        }
        if a[0] < gamma / 2.0 - 1e-12 {
            return Err(TableError::PrepaySplitViolated { a0: a[0], half_gamma: gamma / 2.0 });
        }
        let mut prefix_a = Vec::with_capacity(a.len() + 1);
        let mut acc = 0.0;
        prefix_a.push(0.0);
        for &v in &a {
            acc += v;
            prefix_a.push(acc);
        }
        Ok(GainTable {
            label: label.to_owned(),
            gamma,
            kappa,
            big_gamma,
            a,
            b,
            prefix_a,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// The competitive ratio this table certifies.
    pub fn big_gamma(&self) -> f64 {
        self.big_gamma
    }

    pub fn k_max(&self) -> usize {
        self.a.len() - 1
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a
    }

    pub fn b_values(&self) -> &[f64] {
        &self.b
    }

    /// `a(k)`; zero beyond `k_max` and at infinity.
    pub fn a_at(&self, k: ExtendedCount) -> f64 {
        match k.finite() {
            Some(k) => self.a.get(k as usize).copied().unwrap_or(0.0),
            None => 0.0,
        }
    }

    /// `b(k)`; zero beyond `k_max` and at infinity.
    pub fn b_at(&self, k: ExtendedCount) -> f64 {
        match k.finite() {
            Some(k) => self.b.get(k as usize).copied().unwrap_or(0.0),
            None => 0.0,
        }
    }

    /// `sum_{l < k} a(l)`; the full sum at infinity.
    pub fn sum_a_below(&self, k: ExtendedCount) -> f64 {
        let top = self.prefix_a.len() - 1;
        match k.finite() {
            Some(k) => self.prefix_a[(k as usize).min(top)],
            None => self.prefix_a[top],
        }
    }

    /// `sum_{l >= k} a(l)`; zero at infinity.
    pub fn sum_a_from(&self, k: ExtendedCount) -> f64 {
        let top = self.prefix_a.len() - 1;
        match k.finite() {
            Some(k) => self.prefix_a[top] - self.prefix_a[(k as usize).min(top)],
            None => 0.0,
        }
    }

    /// The prepaid offline-dual increment `2^{-k-1} (1-gamma)^{k-1} gamma`
    /// for finite `k >= 1`.
    fn prepay(&self, k: u32) -> f64 {
        debug_assert!(k >= 1);
        0.5_f64.powi(k as i32 + 1) * (1.0 - self.gamma).powi(k as i32 - 1) * self.gamma
    }
}

/// Built-in gain-sharing table for correlation level 1/16 (warmup
/// selector), kappa 3/2, k_max 8; certifies ratio 0.50503484.
pub fn table_1a() -> GainTable {
    GainTable::new(
        "1a",
        1.0 / 16.0,
        1.5,
        0.50503484,
        vec![
            0.24748256, 0.13684883, 0.06415997, 0.03009310, 0.01413332, 0.00666576, 0.00318572,
            0.00158503, 0.00088057,
        ],
        vec![
            0.25251744, 0.12877617, 0.06035174, 0.02827176, 0.01322521, 0.00615855, 0.00282566,
            0.00123280, 0.00044028,
        ],
    )
    .expect("built-in table is valid")
}

/// Built-in gain-sharing table for the improved selector's correlation
/// level `(13 sqrt 13 - 35)/108`, kappa 3/2, k_max 8; certifies 0.508672.
pub fn table_1b() -> GainTable {
    GainTable::new(
        "1b",
        (13.0 * 13.0_f64.sqrt() - 35.0) / 108.0,
        1.5,
        0.508672,
        vec![
            0.24566361, 0.14597716, 0.06497349, 0.02892807, 0.01289279, 0.00576587, 0.00260819,
            0.00122399, 0.00063960,
        ],
        vec![
            0.25433639, 0.13150459, 0.05851601, 0.02602926, 0.01156523, 0.00511883, 0.00223589,
            0.00093180, 0.00031980,
        ],
    )
    .expect("built-in table is valid")
}

/// Dual state of one offline vertex.
#[derive(Debug, Clone)]
pub struct OfflineDualState {
    k: StepFunction<ExtendedCount>,
    alpha: StepFunction<f64>,
    ybar: StepFunction<f64>,
    /// Edge weight in the last randomized round involving this vertex;
    /// zero if there has been none.
    last_randomized_weight: f64,
}

impl OfflineDualState {
    fn new() -> Self {
        OfflineDualState {
            k: StepFunction::constant(ExtendedCount::Finite(0)),
            alpha: StepFunction::constant(0.0),
            ybar: StepFunction::constant(0.0),
            last_randomized_weight: 0.0,
        }
    }

    pub fn k(&self) -> &StepFunction<ExtendedCount> {
        &self.k
    }

    pub fn alpha(&self) -> &StepFunction<f64> {
        &self.alpha
    }

    pub fn ybar(&self) -> &StepFunction<f64> {
        &self.ybar
    }

    pub fn last_randomized_weight(&self) -> f64 {
        self.last_randomized_weight
    }

    fn insert_break(&mut self, w: f64) {
        self.k.insert_break(w);
        self.alpha.insert_break(w);
        self.ybar.insert_break(w);
    }

    /// `delta_r`: dual gain for the online vertex if this vertex joins a
    /// randomized round at edge weight `w`.
    fn delta_r(&self, w: f64, table: &GainTable) -> f64 {
        let gain = self.k.integrate(0.0, w, |k| table.b_at(*k));
        let cancel = self.k.integrate(w, f64::INFINITY, |k| table.sum_a_below(*k));
        gain - 0.5 * cancel
    }

    fn apply_randomized(&mut self, w: f64, table: &GainTable) {
        let w_prev = self.last_randomized_weight;
        self.insert_break(w);
        // w_prev, if positive, is already a breakpoint from its own round.
        let gamma = table.gamma();
        let ks: Vec<(f64, ExtendedCount)> = self
            .k
            .pieces()
            .map(|p| (p.hi, *p.value))
            .collect();
        let mut idx = 0;
        self.alpha.update_pieces(|hi, alpha| {
            let (khk, k) = ks[idx];
            debug_assert_eq!(hi, khk, "k and alpha share breakpoints");
            idx += 1;
            if hi <= w {
                match k.finite() {
                    Some(0) => *alpha += table.a_at(k),
                    Some(_) if hi <= w_prev => *alpha += table.a_at(k),
                    Some(kf) => *alpha += table.a_at(k) - table.prepay(kf),
                    // Increment vanishes in the limit at infinity.
                    None => {}
                }
            } else if let Some(kf) = k.finite() {
                if kf >= 1 {
                    *alpha += table.prepay(kf);
                }
            }
        });
        idx = 0;
        self.ybar.update_pieces(|hi, ybar| {
            let (_, k) = ks[idx];
            idx += 1;
            if hi <= w {
                let factor = if hi <= w_prev && k >= ExtendedCount::Finite(1) {
                    0.5 * (1.0 - gamma)
                } else {
                    0.5
                };
                *ybar = 1.0 - (1.0 - *ybar) * factor;
            }
        });
        self.k.update_pieces(|hi, k| {
            if hi <= w {
                k.increment();
            }
        });
        self.last_randomized_weight = w;
    }

    fn apply_deterministic(&mut self, w: f64, table: &GainTable) {
        self.insert_break(w);
        let ks: Vec<ExtendedCount> = self.k.pieces().map(|p| *p.value).collect();
        let mut idx = 0;
        self.alpha.update_pieces(|hi, alpha| {
            let k = ks[idx];
            idx += 1;
            if hi <= w {
                *alpha += table.sum_a_from(k);
            }
        });
        self.ybar.update_pieces(|hi, ybar| {
            if hi <= w {
                *ybar = 1.0;
            }
        });
        self.k.update_pieces(|hi, k| {
            if hi <= w {
                *k = ExtendedCount::Infinite;
            }
        });
    }
}

/// How one arrival was resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoundChoice {
    Unmatched,
    Deterministic { vertex: usize },
    Randomized { i1: usize, i2: usize, selected: usize },
}

/// Outcome of one arrival: the round choice and the online dual `beta_j`
/// frozen at arrival time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub choice: RoundChoice,
    pub beta: f64,
}

/// Transcript entry with enough data to replay selections independently.
#[derive(Debug, Clone, PartialEq)]
pub enum TranscriptRound {
    Unmatched,
    Deterministic { vertex: usize, weight: f64 },
    Randomized { i1: usize, w1: f64, i2: usize, w2: f64, selected: usize },
}

impl TranscriptRound {
    /// The seed-independent part: round type, candidates, weights.
    pub fn structure(&self) -> TranscriptRound {
        match self {
            TranscriptRound::Randomized { i1, w1, i2, w2, .. } => TranscriptRound::Randomized {
                i1: *i1,
                w1: *w1,
                i2: *i2,
                w2: *w2,
                selected: usize::MAX,
            },
            other => other.clone(),
        }
    }
}

/// One transcript record, as exported to CSV by the workbench.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: TranscriptRound,
    pub beta: f64,
    /// Surrogate primal after this round.
    pub pbar: f64,
    /// Dual objective after this round.
    pub dual: f64,
}

/// Replay the realized matching value of a recorded round structure under a
/// fresh selector. The round structure is seed-independent, so this
/// reproduces exactly what a full engine run with the same selector seed
/// would realize.
pub fn replay_value(rounds: &[TranscriptRound], selector: &mut Selector) -> Result<f64, OcsError> {
    let n = rounds
        .iter()
        .map(|r| match r {
            TranscriptRound::Unmatched => 0,
            TranscriptRound::Deterministic { vertex, .. } => vertex + 1,
            TranscriptRound::Randomized { i1, i2, .. } => i1.max(i2) + 1,
        })
        .max()
        .unwrap_or(0);
    let mut best = vec![0.0f64; n];
    for round in rounds {
        match round {
            TranscriptRound::Unmatched => {}
            TranscriptRound::Deterministic { vertex, weight } => {
                best[*vertex] = best[*vertex].max(*weight);
            }
            TranscriptRound::Randomized { i1, w1, i2, w2, .. } => {
                let pair = Pair::new(Element(*i1 as u32), Element(*i2 as u32));
                let chosen = selector.select(pair)?;
                let (v, w) = if chosen.0 as usize == *i1 { (*i1, *w1) } else { (*i2, *w2) };
                best[v] = best[v].max(w);
            }
        }
    }
    Ok(best.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantCheck {
    AlphaLowerBound,
    YbarLowerBound,
    ReverseWeakDuality,
    ApproximateDualFeasibility,
}

impl fmt::Display for InvariantCheck {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        let name = match self {
            InvariantCheck::AlphaLowerBound => "alpha lower bound",
            InvariantCheck::YbarLowerBound => "ybar lower bound",
            InvariantCheck::ReverseWeakDuality => "reverse weak duality",
            InvariantCheck::ApproximateDualFeasibility => "approximate dual feasibility",
        };
        f.write_str(name)
    }
}

/// A single violated check, naming where and by how much.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantViolation {
    pub check: InvariantCheck,
    pub vertex: Option<usize>,
    pub arrival: Option<usize>,
    pub weight_level: Option<f64>,
    /// Amount by which the inequality failed (positive).
    pub slack: f64,
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{} violated by {:.3e}", self.check, self.slack)?;
        if let Some(v) = self.vertex {
            write!(f, " at vertex {}", v)?;
        }
        if let Some(j) = self.arrival {
            write!(f, " for arrival {}", j)?;
        }
        if let Some(w) = self.weight_level {
            write!(f, " at weight-level {}", w)?;
        }
        Ok(())
    }
}

/// Result of [`Engine::check_invariants`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantReport {
    pub violations: Vec<InvariantViolation>,
}

impl InvariantReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

const CHECK_TOL: f64 = 1e-9;

/// The edge-weighted online matching engine. One engine per run;
/// single-threaded and order-dependent.
#[derive(Debug, Clone)]
pub struct Engine {
    table: GainTable,
    verts: Vec<OfflineDualState>,
    betas: Vec<f64>,
    /// Normalized weight list per arrival (for feasibility checks).
    arrivals: Vec<Vec<(usize, f64)>>,
    records: Vec<RoundRecord>,
    realized_best: Vec<f64>,
    pbar: f64,
    alpha_int: f64,
    beta_sum: f64,
}

impl Engine {
    pub fn new(n_offline: usize, table: GainTable) -> Self {
        Engine {
            table,
            verts: (0..n_offline).map(|_| OfflineDualState::new()).collect(),
            betas: Vec::new(),
            arrivals: Vec::new(),
            records: Vec::new(),
            realized_best: vec![0.0; n_offline],
            pbar: 0.0,
            alpha_int: 0.0,
            beta_sum: 0.0,
        }
    }

    pub fn n_offline(&self) -> usize {
        self.verts.len()
    }

    pub fn table(&self) -> &GainTable {
        &self.table
    }

    pub fn vertex(&self, i: usize) -> &OfflineDualState {
        &self.verts[i]
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn rounds(&self) -> Vec<TranscriptRound> {
        self.records.iter().map(|r| r.round.clone()).collect()
    }

    /// Realized matching value: the heaviest weight matched to each offline
    /// vertex in this realization, summed.
    pub fn algorithm_value(&self) -> f64 {
        self.realized_best.iter().sum()
    }

    /// Surrogate primal: the certified lower bound on the expected value.
    pub fn surrogate_primal(&self) -> f64 {
        self.pbar
    }

    /// Dual objective sum(int alpha) + sum(beta).
    pub fn dual_objective(&self) -> f64 {
        self.alpha_int + self.beta_sum
    }

    /// Dual gain for the online vertex if `vertex` joined a randomized
    /// round at edge weight `weight` now.
    pub fn delta_r(&self, vertex: usize, weight: f64) -> f64 {
        self.verts[vertex].delta_r(weight, &self.table)
    }

    /// Dual gain of a deterministic round: `kappa * delta_r`.
    pub fn delta_d(&self, vertex: usize, weight: f64) -> f64 {
        self.table.kappa() * self.delta_r(vertex, weight)
    }

    fn normalize_weights(&self, weights: &[(usize, f64)]) -> Result<Vec<(usize, f64)>, EngineError> {
        let n = self.verts.len();
        let mut seen = vec![false; n];
        let mut out = Vec::with_capacity(weights.len());
        for &(v, w) in weights {
            if v >= n {
                return Err(EngineError::VertexOutOfRange { vertex: v, n });
            }
            if seen[v] {
                return Err(EngineError::DuplicateVertex(v));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(EngineError::InvalidWeight { vertex: v, weight: w });
            }
            seen[v] = true;
            out.push((v, w));
        }
        out.sort_unstable_by_key(|&(v, _)| v);
        Ok(out)
    }

    /// Process one online arrival. Missing offline vertices have weight
    /// zero. Ties in the candidate argmaxes break toward smaller ids.
    pub fn arrive(
        &mut self,
        weights: &[(usize, f64)],
        selector: &mut Selector,
    ) -> Result<RoundOutcome, EngineError> {
        let weights = self.normalize_weights(weights)?;
        let n = self.verts.len();
        let weight_of = |v: usize| -> f64 {
            weights
                .binary_search_by_key(&v, |&(i, _)| i)
                .map(|idx| weights[idx].1)
                .unwrap_or(0.0)
        };

        let dr: Vec<f64> = (0..n).map(|v| self.delta_r(v, weight_of(v))).collect();
        let kappa = self.table.kappa();

        let argmax = |score: &dyn Fn(usize) -> f64, skip: Option<usize>| -> Option<usize> {
            let mut best: Option<(usize, f64)> = None;
            for v in 0..n {
                if Some(v) == skip {
                    continue;
                }
                let s = score(v);
                if best.map_or(true, |(_, bs)| s > bs) {
                    best = Some((v, s));
                }
            }
            best.map(|(v, _)| v)
        };

        let outcome = if n == 0 {
            RoundOutcome { choice: RoundChoice::Unmatched, beta: 0.0 }
        } else if n == 1 {
            let d_star = kappa * dr[0];
            if d_star >= 0.0 {
                RoundOutcome { choice: RoundChoice::Deterministic { vertex: 0 }, beta: d_star }
            } else {
                RoundOutcome { choice: RoundChoice::Unmatched, beta: 0.0 }
            }
        } else {
            let i1 = argmax(&|v| dr[v], None).expect("n >= 2");
            let i2 = argmax(&|v| dr[v], Some(i1)).expect("n >= 2");
            let i_star = argmax(&|v| kappa * dr[v], None).expect("n >= 2");
            let r_sum = dr[i1] + dr[i2];
            let d_star = kappa * dr[i_star];
            if r_sum >= d_star.max(0.0) {
                RoundOutcome {
                    choice: RoundChoice::Randomized { i1, i2, selected: usize::MAX },
                    beta: r_sum,
                }
            } else if d_star >= 0.0 {
                RoundOutcome {
                    choice: RoundChoice::Deterministic { vertex: i_star },
                    beta: d_star,
                }
            } else {
                RoundOutcome { choice: RoundChoice::Unmatched, beta: 0.0 }
            }
        };

        // Apply the dual/state updates and resolve the selection.
        let (outcome, round) = match outcome.choice {
            RoundChoice::Unmatched => (outcome, TranscriptRound::Unmatched),
            RoundChoice::Deterministic { vertex } => {
                let w = weight_of(vertex);
                self.touch(vertex, |state, table| state.apply_deterministic(w, table));
                if w > self.realized_best[vertex] {
                    self.realized_best[vertex] = w;
                }
                (outcome, TranscriptRound::Deterministic { vertex, weight: w })
            }
            RoundChoice::Randomized { i1, i2, .. } => {
                let (w1, w2) = (weight_of(i1), weight_of(i2));
                let chosen = selector.select(Pair::new(Element(i1 as u32), Element(i2 as u32)))?;
                let selected = chosen.0 as usize;
                let w_sel = if selected == i1 { w1 } else { w2 };
                if w_sel > self.realized_best[selected] {
                    self.realized_best[selected] = w_sel;
                }
                self.touch(i1, |state, table| state.apply_randomized(w1, table));
                self.touch(i2, |state, table| state.apply_randomized(w2, table));
                (
                    RoundOutcome {
                        choice: RoundChoice::Randomized { i1, i2, selected },
                        beta: outcome.beta,
                    },
                    TranscriptRound::Randomized { i1, w1, i2, w2, selected },
                )
            }
        };

        self.betas.push(outcome.beta);
        self.beta_sum += outcome.beta;
        self.arrivals.push(weights);
        self.records.push(RoundRecord {
            round,
            beta: outcome.beta,
            pbar: self.pbar,
            dual: self.alpha_int + self.beta_sum,
        });
        Ok(outcome)
    }

    /// Update one vertex's state, keeping the running primal/dual sums in
    /// step.
    fn touch(&mut self, vertex: usize, f: impl FnOnce(&mut OfflineDualState, &GainTable)) {
        let state = &mut self.verts[vertex];
        let old_ybar = state.ybar.integrate_full(|v| *v);
        let old_alpha = state.alpha.integrate_full(|v| *v);
        f(state, &self.table);
        self.pbar += state.ybar.integrate_full(|v| *v) - old_ybar;
        self.alpha_int += state.alpha.integrate_full(|v| *v) - old_alpha;
    }

    /// Verify the primal-dual invariants on the current state:
    ///
    /// 1. `alpha_i(w) >= sum_{l < k_i(w)} a(l)` at every piece;
    /// 2. reverse weak duality `D <= Pbar`;
    /// 3. approximate dual feasibility
    ///    `int alpha_i + beta_j >= Gamma * w_ij - 1e-9` for every offline
    ///    vertex and every arrived online vertex (betas frozen at arrival);
    /// 4. `1 - ybar_i(w) >= 2^{-k} (1-gamma)^{max(k-1,0)}`, with
    ///    `1 - ybar = 0` at `k = inf`.
    pub fn check_invariants(&self) -> InvariantReport {
        let mut report = InvariantReport::default();
        let gamma = self.table.gamma();

        for (v, state) in self.verts.iter().enumerate() {
            let ks: Vec<(f64, ExtendedCount)> = state.k.pieces().map(|p| (p.hi, *p.value)).collect();
            for (piece, &(hi, k)) in state.alpha.pieces().zip(&ks) {
                let needed = self.table.sum_a_below(k);
                if *piece.value < needed - CHECK_TOL {
                    report.violations.push(InvariantViolation {
                        check: InvariantCheck::AlphaLowerBound,
                        vertex: Some(v),
                        arrival: None,
                        weight_level: Some(if hi.is_finite() { hi } else { piece.lo }),
                        slack: needed - *piece.value,
                    });
                }
            }
            for (piece, &(hi, k)) in state.ybar.pieces().zip(&ks) {
                let gap = 1.0 - *piece.value;
                let bound = match k.finite() {
                    Some(kf) => {
                        0.5_f64.powi(kf as i32)
                            * (1.0 - gamma).powi((kf as i32 - 1).max(0))
                    }
                    None => 0.0,
                };
                let violated = match k.finite() {
                    Some(_) => gap < bound - CHECK_TOL,
                    None => gap.abs() > CHECK_TOL,
                };
                if violated {
                    report.violations.push(InvariantViolation {
                        check: InvariantCheck::YbarLowerBound,
                        vertex: Some(v),
                        arrival: None,
                        weight_level: Some(if hi.is_finite() { hi } else { piece.lo }),
                        slack: (bound - gap).abs(),
                    });
                }
            }
        }

        let pbar: f64 = self.verts.iter().map(|s| s.ybar.integrate_full(|v| *v)).sum();
        let alpha_ints: Vec<f64> = self
            .verts
            .iter()
            .map(|s| s.alpha.integrate_full(|v| *v))
            .collect();
        let dual: f64 = alpha_ints.iter().sum::<f64>() + self.betas.iter().sum::<f64>();
        if dual > pbar + CHECK_TOL * (1.0 + pbar.abs()) {
            report.violations.push(InvariantViolation {
                check: InvariantCheck::ReverseWeakDuality,
                vertex: None,
                arrival: None,
                weight_level: None,
                slack: dual - pbar,
            });
        }

        let big_gamma = self.table.big_gamma();
        for (j, weights) in self.arrivals.iter().enumerate() {
            let beta = self.betas[j];
            for &(i, w) in weights {
                let lhs = alpha_ints[i] + beta;
                let rhs = big_gamma * w;
                if lhs < rhs - CHECK_TOL {
                    report.violations.push(InvariantViolation {
                        check: InvariantCheck::ApproximateDualFeasibility,
                        vertex: Some(i),
                        arrival: Some(j),
                        weight_level: Some(w),
                        slack: rhs - lhs,
                    });
                }
            }
        }

        report
    }

    /// Test hook: wipe one vertex's offline dual to fault the alpha
    /// invariant.
    #[doc(hidden)]
    pub fn zero_alpha_for_test(&mut self, vertex: usize) {
        let state = &mut self.verts[vertex];
        let old = state.alpha.integrate_full(|v| *v);
        state.alpha = StepFunction::constant(0.0);
        self.alpha_int -= old;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocs::SelectorKind;

    fn selector(seed: u64) -> Selector {
        Selector::new(SelectorKind::Warmup, seed).unwrap()
    }

    fn random_weights(
        rng: &mut rand_chacha::ChaCha8Rng,
        n: usize,
        density: f64,
        max: f64,
    ) -> Vec<(usize, f64)> {
        use rand::Rng;
        let mut out = Vec::new();
        for v in 0..n {
            if rng.gen_bool(density) {
                out.push((v, rng.gen_range(0.0..max)));
            }
        }
        out
    }

    #[test]
    fn delta_r_fresh_vertex_is_b0() {
        let engine = Engine::new(2, table_1a());
        assert!((engine.delta_r(0, 1.0) - 0.25251744).abs() < 1e-12);
        assert_eq!(engine.delta_r(0, 0.0), 0.0);
        assert!((engine.delta_d(0, 1.0) - 0.37877616).abs() < 1e-12);
    }

    #[test]
    fn delta_r_after_one_randomized_round_is_b1() {
        let mut engine = Engine::new(2, table_1a());
        let mut sel = selector(1);
        let out = engine.arrive(&[(0, 1.0), (1, 1.0)], &mut sel).unwrap();
        assert!(matches!(out.choice, RoundChoice::Randomized { i1: 0, i2: 1, .. }));
        assert!((out.beta - 0.50503488).abs() < 1e-8);
        // k_0 is 1 on (0,1], 0 above; the cancel integral vanishes.
        assert!((engine.delta_r(0, 1.0) - 0.12877617).abs() < 1e-12);
        assert!((engine.delta_d(0, 1.0) - 1.5 * 0.12877617).abs() < 1e-12);
    }

    #[test]
    fn ybar_after_two_randomized_rounds_at_same_level() {
        // Fresh vertex 0 in two randomized rounds at weight 1 with fresh
        // partners: the gap halves, then shrinks by (1-gamma)/2.
        let mut engine = Engine::new(3, table_1a());
        let mut sel = selector(5);
        engine.arrive(&[(0, 1.0), (1, 1.0)], &mut sel).unwrap();
        engine.arrive(&[(0, 1.0), (2, 1.0)], &mut sel).unwrap();
        let ybar = *engine.vertex(0).ybar().value_at(1.0);
        assert!((ybar - 49.0 / 64.0).abs() < 1e-12);
        assert_eq!(*engine.vertex(0).ybar().value_at(1.5), 0.0);
    }

    #[test]
    fn zero_weights_prefer_randomized_with_zero_beta() {
        let mut engine = Engine::new(3, table_1a());
        let mut sel = selector(9);
        let out = engine.arrive(&[], &mut sel).unwrap();
        assert!(matches!(out.choice, RoundChoice::Randomized { i1: 0, i2: 1, .. }));
        assert_eq!(out.beta, 0.0);
    }

    #[test]
    fn single_vertex_takes_deterministic_round_iff_gain_nonnegative() {
        let mut engine = Engine::new(1, table_1a());
        let mut sel = selector(2);
        let out = engine.arrive(&[(0, 3.5)], &mut sel).unwrap();
        assert_eq!(out.choice, RoundChoice::Deterministic { vertex: 0 });
        assert!((engine.algorithm_value() - 3.5).abs() < 1e-12);
        // A later zero-weight arrival: delta_d < 0 (the cancel term), so
        // the vertex is left unmatched.
        let out = engine.arrive(&[(0, 0.0)], &mut sel).unwrap();
        assert_eq!(out.choice, RoundChoice::Unmatched);
        assert_eq!(out.beta, 0.0);
    }

    #[test]
    fn single_vertex_zero_weight_is_deterministic_with_zero_beta() {
        let mut engine = Engine::new(1, table_1a());
        let mut sel = selector(2);
        let out = engine.arrive(&[(0, 0.0)], &mut sel).unwrap();
        assert_eq!(out.choice, RoundChoice::Deterministic { vertex: 0 });
        assert_eq!(out.beta, 0.0);
    }

    #[test]
    fn empty_engine_passes_vacuously() {
        let engine = Engine::new(4, table_1b());
        assert!(engine.check_invariants().is_ok());
        assert_eq!(engine.algorithm_value(), 0.0);
    }

    #[test]
    fn invariants_hold_on_seeded_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for trial in 0..60 {
            let n = rng.gen_range(1..=8);
            let m = rng.gen_range(1..=8);
            let table = if trial % 2 == 0 { table_1a() } else { table_1b() };
            let mut engine = Engine::new(n, table);
            let mut sel = Selector::new(
                if trial % 2 == 0 { SelectorKind::Warmup } else { SelectorKind::Improved { p: 0.4648 } },
                trial,
            )
            .unwrap();
            for _ in 0..m {
                let weights = random_weights(&mut rng, n, 0.7, 10.0);
                engine.arrive(&weights, &mut sel).unwrap();
                let report = engine.check_invariants();
                assert!(report.is_ok(), "violations: {:?}", report.violations);
            }
        }
    }

    #[test]
    fn injected_alpha_fault_is_reported() {
        let mut engine = Engine::new(2, table_1a());
        let mut sel = selector(3);
        engine.arrive(&[(0, 2.0), (1, 2.0)], &mut sel).unwrap();
        engine.zero_alpha_for_test(0);
        let report = engine.check_invariants();
        assert!(report
            .violations
            .iter()
            .any(|v| v.check == InvariantCheck::AlphaLowerBound && v.vertex == Some(0)));
    }

    #[test]
    fn round_structure_is_seed_independent() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 6;
        let arrivals: Vec<Vec<(usize, f64)>> =
            (0..10).map(|_| random_weights(&mut rng, n, 0.6, 5.0)).collect();
        let run = |seed: u64| {
            let mut engine = Engine::new(n, table_1b());
            let mut sel = Selector::new(SelectorKind::Improved { p: 0.4648 }, seed).unwrap();
            for w in &arrivals {
                engine.arrive(w, &mut sel).unwrap();
            }
            engine
                .rounds()
                .iter()
                .map(|r| r.structure())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(1), run(999));
    }

    #[test]
    fn replay_matches_engine_realization() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let n = 5;
        let arrivals: Vec<Vec<(usize, f64)>> =
            (0..8).map(|_| random_weights(&mut rng, n, 0.7, 4.0)).collect();
        for seed in 0..20 {
            let mut engine = Engine::new(n, table_1a());
            let mut sel = Selector::new(SelectorKind::Warmup, seed).unwrap();
            for w in &arrivals {
                engine.arrive(w, &mut sel).unwrap();
            }
            let mut replay_sel = Selector::new(SelectorKind::Warmup, seed).unwrap();
            let replayed = replay_value(&engine.rounds(), &mut replay_sel).unwrap();
            assert!((replayed - engine.algorithm_value()).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_step_functions_and_breakpoints_from_weights() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        let n = 5;
        let mut engine = Engine::new(n, table_1a());
        let mut sel = selector(4);
        let mut observed: Vec<f64> = Vec::new();
        for _ in 0..12 {
            let weights: Vec<(usize, f64)> = (0..n)
                .map(|v| (v, (rng.gen_range(0..5) as f64) / 2.0))
                .collect();
            observed.extend(weights.iter().map(|&(_, w)| w));
            engine.arrive(&weights, &mut sel).unwrap();
            for v in 0..n {
                let state = engine.vertex(v);
                let ks: Vec<ExtendedCount> = state.k().pieces().map(|p| *p.value).collect();
                assert!(ks.windows(2).all(|w| w[0] >= w[1]), "k not non-increasing");
                let ys: Vec<f64> = state.ybar().pieces().map(|p| *p.value).collect();
                assert!(ys.windows(2).all(|w| w[0] >= w[1] - 1e-12));
                for b in state.alpha().breaks() {
                    assert!(observed.iter().any(|w| w == b));
                }
            }
        }
    }

    #[test]
    fn table_validation_rejects_bad_parameters() {
        assert!(GainTable::new("x", 0.05, 1.0, 0.5, vec![0.1], vec![0.1]).is_err());
        assert!(GainTable::new("x", 1.5, 1.5, 0.5, vec![0.1], vec![0.1]).is_err());
        assert!(GainTable::new("x", 0.05, 1.5, 0.5, vec![-0.1], vec![0.1]).is_err());
        // a(0) below gamma/2.
        assert!(GainTable::new("x", 0.5, 1.5, 0.5, vec![0.2], vec![0.1]).is_err());
        assert!(GainTable::new("x", 0.05, 1.5, 0.5, vec![0.1], vec![0.1, 0.2]).is_err());
    }
}
