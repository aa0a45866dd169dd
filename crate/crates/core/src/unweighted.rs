//! Two-choice greedy for unweighted matching, with dual maintenance.
//!
//! Offline vertices are ranked by how many randomized rounds have chosen
//! them (`k`, infinite after a deterministic match). An arrival restricted
//! to its eligible neighbors either enters a randomized round on the two
//! minimum-`k` attainers, a deterministic round on a unique attainer, or
//! stays unmatched. `xbar_i = 1 - 2^{-k} g_k` tracks the certified match
//! probability, and a separate dual table splits each increment between
//! `alpha_i` and `beta_j`.
//!
//! Also hosts the imaginary perfect-negative-correlation simulator where a
//! vertex is fully matched after two randomized rounds.

use std::collections::BTreeSet;
use std::fmt;

use crate::ocs::{Element, OcsError, Pair, Selector};
use crate::primal_dual::{
    ExtendedCount, InvariantCheck, InvariantReport, InvariantViolation, RoundChoice, RoundOutcome,
    RoundRecord, TranscriptRound,
};
use crate::recurrences::RecurrenceTable;

#[derive(Debug, Clone, PartialEq)]
pub enum UnweightedError {
    VertexOutOfRange { vertex: usize, n: usize },
    Selector(OcsError),
}

impl fmt::Display for UnweightedError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            UnweightedError::VertexOutOfRange { vertex, n } => {
                write!(f, "offline vertex {} out of range for {} vertices", vertex, n)
            }
            UnweightedError::Selector(e) => write!(f, "selector error: {}", e),
        }
    }
}

impl std::error::Error for UnweightedError {}

impl From<OcsError> for UnweightedError {
    fn from(e: OcsError) -> Self {
        UnweightedError::Selector(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UnweightedTableError {
    LengthMismatch,
    NegativeEntry { index: usize, value: f64 },
    BetaNotMonotone { index: usize },
}

impl fmt::Display for UnweightedTableError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            UnweightedTableError::LengthMismatch => write!(f, "dalpha and dbeta lengths differ"),
            UnweightedTableError::NegativeEntry { index, value } => {
                write!(f, "entry {} at index {} is negative", value, index)
            }
            UnweightedTableError::BetaNotMonotone { index } => {
                write!(f, "dbeta must be non-increasing; violated at index {}", index)
            }
        }
    }
}

impl std::error::Error for UnweightedTableError {}

/// Dual increments for the unweighted greedy: `dalpha(k)` goes to the
/// offline vertex and `dbeta(k)` to the online vertex, indexed by the
/// randomized-round count; zero beyond `k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnweightedDualTable {
    label: String,
    big_gamma: f64,
    dalpha: Vec<f64>,
    dbeta: Vec<f64>,
    prefix_dalpha: Vec<f64>,
}

impl UnweightedDualTable {
    pub fn new(
        label: &str,
        big_gamma: f64,
        dalpha: Vec<f64>,
        dbeta: Vec<f64>,
    ) -> Result<Self, UnweightedTableError> {
        if dalpha.len() != dbeta.len() || dalpha.is_empty() {
            return Err(UnweightedTableError::LengthMismatch);
        }
        for (index, &v) in dalpha.iter().chain(dbeta.iter()).enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(UnweightedTableError::NegativeEntry { index: index % dalpha.len(), value: v });
            }
        }
        for (index, w) in dbeta.windows(2).enumerate() {
            if w[0] < w[1] - 1e-12 {
                return Err(UnweightedTableError::BetaNotMonotone { index });
            }
        }
        let mut prefix_dalpha = Vec::with_capacity(dalpha.len() + 1);
        let mut acc = 0.0;
        prefix_dalpha.push(0.0);
        for &v in &dalpha {
            acc += v;
            prefix_dalpha.push(acc);
        }
        Ok(UnweightedDualTable {
            label: label.to_owned(),
            big_gamma,
            dalpha,
            dbeta,
            prefix_dalpha,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn big_gamma(&self) -> f64 {
        self.big_gamma
    }

    pub fn k_max(&self) -> usize {
        self.dalpha.len() - 1
    }

    pub fn dalpha_values(&self) -> &[f64] {
        &self.dalpha
    }

    pub fn dbeta_values(&self) -> &[f64] {
        &self.dbeta
    }

    pub fn dalpha_at(&self, k: usize) -> f64 {
        self.dalpha.get(k).copied().unwrap_or(0.0)
    }

    pub fn dbeta_at(&self, k: usize) -> f64 {
        self.dbeta.get(k).copied().unwrap_or(0.0)
    }

    pub fn sum_dalpha_below(&self, k: ExtendedCount) -> f64 {
        let top = self.prefix_dalpha.len() - 1;
        match k.finite() {
            Some(k) => self.prefix_dalpha[(k as usize).min(top)],
            None => self.prefix_dalpha[top],
        }
    }

    pub fn sum_dalpha_from(&self, k: usize) -> f64 {
        let top = self.prefix_dalpha.len() - 1;
        self.prefix_dalpha[top] - self.prefix_dalpha[k.min(top)]
    }
}

/// Built-in dual table for the unweighted greedy with the improved
/// selector at its optimal sender probability; certifies ratio 0.508986
/// at k_max 8.
pub fn table_3() -> UnweightedDualTable {
    UnweightedDualTable::new(
        "t3",
        0.508986,
        vec![
            0.24550678, 0.14574204, 0.06613120, 0.02907108, 0.01273424, 0.00559236, 0.00248248,
            0.00114193, 0.00058431,
        ],
        vec![
            0.25449322, 0.13173982, 0.05886880, 0.02580320, 0.01126766, 0.00490054, 0.00210436,
            0.00086312, 0.00029216,
        ],
    )
    .expect("built-in table is valid")
}

/// Candidate order within a round: ties in the minimum-`k` rule break
/// toward smaller ids by default, or toward larger ids (reverse
/// lexicographic) to mirror the hard-instance walkthroughs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    SmallestId,
    ReverseLex,
}

/// Per-vertex state of the unweighted greedy.
#[derive(Debug, Clone, PartialEq)]
pub struct UnweightedVertex {
    pub k: ExtendedCount,
    pub xbar: f64,
    pub alpha: f64,
    pub matched: bool,
}

/// The unweighted two-choice greedy engine.
#[derive(Debug, Clone)]
pub struct UnweightedEngine {
    table: UnweightedDualTable,
    g: RecurrenceTable,
    tie: TieBreak,
    verts: Vec<UnweightedVertex>,
    betas: Vec<f64>,
    neighbor_lists: Vec<Vec<usize>>,
    records: Vec<RoundRecord>,
}

impl UnweightedEngine {
    pub fn new(n_offline: usize, table: UnweightedDualTable, g: RecurrenceTable, tie: TieBreak) -> Self {
        UnweightedEngine {
            table,
            g,
            tie,
            verts: (0..n_offline)
                .map(|_| UnweightedVertex {
                    k: ExtendedCount::Finite(0),
                    xbar: 0.0,
                    alpha: 0.0,
                    matched: false,
                })
                .collect(),
            betas: Vec::new(),
            neighbor_lists: Vec::new(),
            records: Vec::new(),
        }
    }

    /// Table 3 with the improved recurrence at the optimal sender
    /// probability, smallest-id tie-break.
    pub fn with_defaults(n_offline: usize) -> Self {
        let (p, _) = crate::recurrences::optimal_p();
        Self::new(
            n_offline,
            table_3(),
            RecurrenceTable::improved(p).expect("optimal p is interior"),
            TieBreak::SmallestId,
        )
    }

    pub fn n_offline(&self) -> usize {
        self.verts.len()
    }

    pub fn table(&self) -> &UnweightedDualTable {
        &self.table
    }

    pub fn vertex(&self, i: usize) -> &UnweightedVertex {
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

    /// Number of distinct offline vertices matched in this realization.
    pub fn algorithm_value(&self) -> f64 {
        self.verts.iter().filter(|v| v.matched).count() as f64
    }

    pub fn surrogate_primal(&self) -> f64 {
        self.verts.iter().map(|v| v.xbar).sum()
    }

    pub fn dual_objective(&self) -> f64 {
        self.verts.iter().map(|v| v.alpha).sum::<f64>() + self.betas.iter().sum::<f64>()
    }

    fn xbar_for(&self, k: ExtendedCount) -> f64 {
        match k.finite() {
            Some(k) => 1.0 - self.g.bound_factor(k as usize),
            None => 1.0,
        }
    }

    /// Process one arrival adjacent to `neighbors`.
    pub fn greedy_arrive(
        &mut self,
        neighbors: &[usize],
        selector: &mut Selector,
    ) -> Result<RoundOutcome, UnweightedError> {
        let n = self.verts.len();
        let mut uniq = BTreeSet::new();
        for &v in neighbors {
            if v >= n {
                return Err(UnweightedError::VertexOutOfRange { vertex: v, n });
            }
            uniq.insert(v);
        }

        // Eligible: never deterministically matched.
        let k_min = uniq
            .iter()
            .filter_map(|&v| self.verts[v].k.finite())
            .min();

        let outcome = match k_min {
            None => RoundOutcome { choice: RoundChoice::Unmatched, beta: 0.0 },
            Some(k_min) => {
                let mut attainers: Vec<usize> = uniq
                    .iter()
                    .copied()
                    .filter(|&v| self.verts[v].k == ExtendedCount::Finite(k_min))
                    .collect();
                if self.tie == TieBreak::ReverseLex {
                    attainers.reverse();
                }
                if attainers.len() >= 2 {
                    let (i1, i2) = (attainers[0], attainers[1]);
                    let chosen =
                        selector.select(Pair::new(Element(i1 as u32), Element(i2 as u32)))?;
                    let selected = chosen.0 as usize;
                    for &i in &[i1, i2] {
                        let vert = &mut self.verts[i];
                        vert.alpha += self.table.dalpha_at(k_min as usize);
                        vert.k.increment();
                    }
                    self.verts[i1].xbar = self.xbar_for(self.verts[i1].k);
                    self.verts[i2].xbar = self.xbar_for(self.verts[i2].k);
                    self.verts[selected].matched = true;
                    RoundOutcome {
                        choice: RoundChoice::Randomized { i1, i2, selected },
                        beta: 2.0 * self.table.dbeta_at(k_min as usize),
                    }
                } else {
                    let i_star = attainers[0];
                    let vert = &mut self.verts[i_star];
                    vert.alpha += self.table.sum_dalpha_from(k_min as usize);
                    vert.k = ExtendedCount::Infinite;
                    vert.xbar = 1.0;
                    vert.matched = true;
                    RoundOutcome {
                        choice: RoundChoice::Deterministic { vertex: i_star },
                        beta: 2.0 * self.table.dbeta_at(k_min as usize + 1),
                    }
                }
            }
        };

        self.betas.push(outcome.beta);
        self.neighbor_lists.push(uniq.into_iter().collect());
        let round = match outcome.choice {
            RoundChoice::Unmatched => TranscriptRound::Unmatched,
            RoundChoice::Deterministic { vertex } => {
                TranscriptRound::Deterministic { vertex, weight: 1.0 }
            }
            RoundChoice::Randomized { i1, i2, selected } => {
                TranscriptRound::Randomized { i1, w1: 1.0, i2, w2: 1.0, selected }
            }
        };
        self.records.push(RoundRecord {
            round,
            beta: outcome.beta,
            pbar: self.surrogate_primal(),
            dual: self.dual_objective(),
        });
        Ok(outcome)
    }

    /// Verify the unweighted invariants: the dual objective never exceeds
    /// the surrogate primal, every arrived edge is approximately feasible,
    /// `alpha_i` equals its prescribed partial sum, and `xbar` shows no
    /// drift against recomputation from `k`.
    pub fn check_invariants(&self) -> InvariantReport {
        const TOL: f64 = 1e-9;
        let mut report = InvariantReport::default();

        let pbar = self.surrogate_primal();
        let dual = self.dual_objective();
        if dual > pbar + TOL * (1.0 + pbar.abs()) {
            report.violations.push(InvariantViolation {
                check: InvariantCheck::ReverseWeakDuality,
                vertex: None,
                arrival: None,
                weight_level: None,
                slack: dual - pbar,
            });
        }

        for (i, vert) in self.verts.iter().enumerate() {
            let prescribed = self.table.sum_dalpha_below(vert.k);
            if (vert.alpha - prescribed).abs() > TOL {
                report.violations.push(InvariantViolation {
                    check: InvariantCheck::AlphaLowerBound,
                    vertex: Some(i),
                    arrival: None,
                    weight_level: None,
                    slack: (vert.alpha - prescribed).abs(),
                });
            }
            let recomputed = self.xbar_for(vert.k);
            if (vert.xbar - recomputed).abs() > TOL {
                report.violations.push(InvariantViolation {
                    check: InvariantCheck::YbarLowerBound,
                    vertex: Some(i),
                    arrival: None,
                    weight_level: None,
                    slack: (vert.xbar - recomputed).abs(),
                });
            }
        }

        let big_gamma = self.table.big_gamma();
        for (j, neighbors) in self.neighbor_lists.iter().enumerate() {
            let beta = self.betas[j];
            for &i in neighbors {
                let lhs = self.verts[i].alpha + beta;
                if lhs < big_gamma - TOL {
                    report.violations.push(InvariantViolation {
                        check: InvariantCheck::ApproximateDualFeasibility,
                        vertex: Some(i),
                        arrival: Some(j),
                        weight_level: None,
                        slack: big_gamma - lhs,
                    });
                }
            }
        }

        report
    }

    /// Test hook: drop one vertex's offline dual to fault feasibility.
    #[doc(hidden)]
    pub fn zero_alpha_for_test(&mut self, vertex: usize) {
        self.verts[vertex].alpha = 0.0;
    }
}

/// Deterministic fractional simulation of two-choice greedy with perfect
/// negative correlation: matched mass lives in half-units, a randomized
/// round adds one half to each candidate, a deterministic round fills the
/// unique candidate. Candidates take the least-matched neighbors with
/// reverse-lexicographic tie-break, mirroring the hard-instance
/// walkthroughs. Returns the total matched mass.
pub fn perfect_correlation_sim(n_offline: usize, arrivals: &[Vec<usize>]) -> f64 {
    // Mass in half-units: 0, 1, or 2.
    let mut mass = vec![0u8; n_offline];
    for neighbors in arrivals {
        let viable: Vec<usize> = {
            let mut v: Vec<usize> = neighbors
                .iter()
                .copied()
                .filter(|&i| i < n_offline && mass[i] < 2)
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let Some(&min_mass) = viable.iter().map(|&i| &mass[i]).min() else {
            continue;
        };
        let attainers: Vec<usize> = viable
            .into_iter()
            .rev()
            .filter(|&i| mass[i] == min_mass)
            .collect();
        if attainers.len() >= 2 {
            mass[attainers[0]] += 1;
            mass[attainers[1]] += 1;
        } else {
            mass[attainers[0]] = 2;
        }
    }
    mass.iter().map(|&m| m as f64 / 2.0).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocs::SelectorKind;

    fn selector(seed: u64) -> Selector {
        let (p, _) = crate::recurrences::optimal_p();
        Selector::new(SelectorKind::Improved { p }, seed).unwrap()
    }

    #[test]
    fn unique_minimum_takes_deterministic_round() {
        let mut engine = UnweightedEngine::with_defaults(1);
        let mut sel = selector(1);
        let out = engine.greedy_arrive(&[0], &mut sel).unwrap();
        assert_eq!(out.choice, RoundChoice::Deterministic { vertex: 0 });
        assert_eq!(engine.vertex(0).k, ExtendedCount::Infinite);
        assert_eq!(engine.vertex(0).xbar, 1.0);
        assert_eq!(engine.algorithm_value(), 1.0);
    }

    #[test]
    fn two_fresh_neighbors_enter_randomized_round() {
        let mut engine = UnweightedEngine::with_defaults(3);
        let mut sel = selector(2);
        let out = engine.greedy_arrive(&[0, 1, 2], &mut sel).unwrap();
        match out.choice {
            RoundChoice::Randomized { i1, i2, .. } => {
                assert_eq!((i1, i2), (0, 1));
            }
            other => panic!("expected randomized round, got {:?}", other),
        }
        assert_eq!(engine.vertex(0).k, ExtendedCount::Finite(1));
        assert_eq!(engine.vertex(1).k, ExtendedCount::Finite(1));
        assert!((engine.vertex(0).xbar - 0.5).abs() < 1e-15);
        assert!((out.beta - 2.0 * 0.25449322).abs() < 1e-12);
    }

    #[test]
    fn exhausted_neighborhood_is_unmatched() {
        let mut engine = UnweightedEngine::with_defaults(1);
        let mut sel = selector(3);
        engine.greedy_arrive(&[0], &mut sel).unwrap();
        let out = engine.greedy_arrive(&[0], &mut sel).unwrap();
        assert_eq!(out.choice, RoundChoice::Unmatched);
        assert_eq!(out.beta, 0.0);
    }

    #[test]
    fn reverse_lex_prefers_largest_ids() {
        let mut engine = UnweightedEngine::new(
            4,
            table_3(),
            RecurrenceTable::improved(crate::recurrences::optimal_p().0).unwrap(),
            TieBreak::ReverseLex,
        );
        let mut sel = selector(4);
        let out = engine.greedy_arrive(&[0, 1, 2, 3], &mut sel).unwrap();
        match out.choice {
            RoundChoice::Randomized { i1, i2, .. } => assert_eq!((i1, i2), (3, 2)),
            other => panic!("expected randomized round, got {:?}", other),
        }
    }

    #[test]
    fn empty_run_passes_checks() {
        let engine = UnweightedEngine::with_defaults(5);
        assert!(engine.check_invariants().is_ok());
    }

    #[test]
    fn invariants_hold_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..120 {
            let n = rng.gen_range(1..=12);
            let m = rng.gen_range(1..=12);
            let mut engine = UnweightedEngine::with_defaults(n);
            let mut sel = selector(trial);
            for _ in 0..m {
                let neighbors: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
                engine.greedy_arrive(&neighbors, &mut sel).unwrap();
                let report = engine.check_invariants();
                assert!(report.is_ok(), "violations: {:?}", report.violations);
            }
        }
    }

    #[test]
    fn skipped_alpha_update_breaks_feasibility() {
        let mut engine = UnweightedEngine::with_defaults(2);
        let mut sel = selector(8);
        engine.greedy_arrive(&[0, 1], &mut sel).unwrap();
        engine.greedy_arrive(&[0, 1], &mut sel).unwrap();
        engine.greedy_arrive(&[0], &mut sel).unwrap();
        engine.zero_alpha_for_test(0);
        let report = engine.check_invariants();
        assert!(!report.is_ok());
        assert!(report
            .violations
            .iter()
            .any(|v| v.check == InvariantCheck::ApproximateDualFeasibility));
    }

    #[test]
    fn transcript_structure_is_seed_independent() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let n = 7;
        let arrivals: Vec<Vec<usize>> = (0..12)
            .map(|_| (0..n).filter(|_| rng.gen_bool(0.5)).collect())
            .collect();
        let run = |seed: u64| {
            let mut engine = UnweightedEngine::with_defaults(n);
            let mut sel = selector(seed);
            for a in &arrivals {
                engine.greedy_arrive(a, &mut sel).unwrap();
            }
            engine.rounds().iter().map(|r| r.structure()).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(777));
    }

    #[test]
    fn perfect_correlation_walkthroughs() {
        // Single edge: one deterministic round.
        assert_eq!(perfect_correlation_sim(1, &[vec![0]]), 1.0);
        // One arrival adjacent to two fresh vertices: half mass each.
        assert_eq!(perfect_correlation_sim(2, &[vec![0, 1]]), 1.0);
        // The nine-vertex upper triangular walkthrough ends at mass 5.
        let arrivals: Vec<Vec<usize>> = (0..9).map(|j| (j..9).collect()).collect();
        assert_eq!(perfect_correlation_sim(9, &arrivals), 5.0);
    }

    #[test]
    fn table_rejects_non_monotone_beta() {
        let err = UnweightedDualTable::new("x", 0.5, vec![0.1, 0.1], vec![0.1, 0.2]);
        assert!(matches!(err, Err(UnweightedTableError::BetaNotMonotone { .. })));
    }
}
