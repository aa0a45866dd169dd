//! Exact ground truth on desk-scale inputs.
//!
//! Three oracles certify the fast paths: the exact offline optimum under
//! free disposal (a maximum-weight matching), exact never-selected
//! probabilities for any selector by weighted enumeration of its
//! randomness, and the exact expected matching value of an engine run
//! (possible because the round structure is seed-independent, leaving only
//! the selector's draws to enumerate).

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ocs::{DrawSource, Element, OcsError, Pair, Selector, SelectorKind, SelectorState};
use crate::primal_dual::{Engine, EngineError, GainTable, TranscriptRound};
use crate::unweighted::{TieBreak, UnweightedDualTable, UnweightedEngine, UnweightedError};

/// A weighted bipartite instance with a fixed online arrival order. Each
/// arrival lists `(offline id, weight)` edges; anything missing has weight
/// zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub n_offline: usize,
    pub arrivals: Vec<Vec<(usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
}

impl Instance {
    pub fn n_online(&self) -> usize {
        self.arrivals.len()
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        for (j, arrival) in self.arrivals.iter().enumerate() {
            for &(i, w) in arrival {
                if i >= self.n_offline {
                    return Err(OracleError::BadInstance(format!(
                        "arrival {} references offline vertex {} (n_offline = {})",
                        j, i, self.n_offline
                    )));
                }
                if !(w.is_finite() && w >= 0.0) {
                    return Err(OracleError::BadInstance(format!(
                        "arrival {} has invalid weight {} on vertex {}",
                        j, w, i
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when every listed edge has weight exactly 1.
    pub fn is_unit_weight(&self) -> bool {
        self.arrivals
            .iter()
            .all(|a| a.iter().all(|&(_, w)| w == 1.0))
    }

    /// Neighbor lists for the unweighted engines; `None` unless every edge
    /// has weight exactly 1.
    pub fn unit_neighbors(&self) -> Option<Vec<Vec<usize>>> {
        if !self.is_unit_weight() {
            return None;
        }
        Some(
            self.arrivals
                .iter()
                .map(|a| a.iter().map(|&(i, _)| i).collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    BadInstance(String),
    /// Exact enumeration is limited to 8 pairs.
    TooManyPairs { pairs: usize, limit: usize },
    /// Exact engine expectation is limited to 8 randomized rounds.
    TooManyRandomizedRounds { rounds: usize, limit: usize },
    NotUnitWeight,
    Ocs(OcsError),
    Engine(EngineError),
    Unweighted(UnweightedError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            OracleError::BadInstance(msg) => write!(f, "bad instance: {}", msg),
            OracleError::TooManyPairs { pairs, limit } => {
                write!(f, "{} pairs exceed the enumeration limit of {}", pairs, limit)
            }
            OracleError::TooManyRandomizedRounds { rounds, limit } => write!(
                f,
                "{} randomized rounds exceed the enumeration limit of {}",
                rounds, limit
            ),
            OracleError::NotUnitWeight => write!(f, "instance is not unit-weight"),
            OracleError::Ocs(e) => write!(f, "{}", e),
            OracleError::Engine(e) => write!(f, "{}", e),
            OracleError::Unweighted(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for OracleError {}

impl From<OcsError> for OracleError {
    fn from(e: OcsError) -> Self {
        OracleError::Ocs(e)
    }
}

impl From<EngineError> for OracleError {
    fn from(e: EngineError) -> Self {
        OracleError::Engine(e)
    }
}

impl From<UnweightedError> for OracleError {
    fn from(e: UnweightedError) -> Self {
        OracleError::Unweighted(e)
    }
}

// ---------------------------------------------------------------------------
// Offline optimum
// ---------------------------------------------------------------------------

/// Exact offline optimum under free disposal.
///
/// Assigning extra online vertices to an offline vertex adds nothing beyond
/// its heaviest edge, so this equals a plain maximum-weight bipartite
/// matching: unit-weight instances go through Hopcroft-Karp, everything
/// else through shortest augmenting paths with potentials.
pub fn offline_optimum(instance: &Instance) -> Result<f64, OracleError> {
    instance.validate()?;
    let n = instance.n_offline;
    let m = instance.arrivals.len();
    if n == 0 || m == 0 {
        return Ok(0.0);
    }
    if instance.is_unit_weight() {
        let adj: Vec<Vec<usize>> = instance
            .arrivals
            .iter()
            .map(|a| a.iter().map(|&(i, _)| i).collect())
            .collect();
        return Ok(hopcroft_karp(n, &adj) as f64);
    }
    Ok(max_weight_matching(instance))
}

/// Maximum cardinality matching; `adj[j]` lists the offline neighbors of
/// online vertex `j`.
fn hopcroft_karp(n_offline: usize, adj: &[Vec<usize>]) -> usize {
    let m = adj.len();
    const NIL: usize = usize::MAX;
    let mut match_online = vec![NIL; m];
    let mut match_offline = vec![NIL; n_offline];
    let mut dist = vec![0u32; m];
    let mut queue = Vec::with_capacity(m);

    loop {
        // BFS over free online vertices to layer the graph.
        queue.clear();
        const INF: u32 = u32::MAX;
        for j in 0..m {
            if match_online[j] == NIL {
                dist[j] = 0;
                queue.push(j);
            } else {
                dist[j] = INF;
            }
        }
        let mut found = false;
        let mut head = 0;
        while head < queue.len() {
            let j = queue[head];
            head += 1;
            for &i in &adj[j] {
                let jj = match_offline[i];
                if jj == NIL {
                    found = true;
                } else if dist[jj] == INF {
                    dist[jj] = dist[j] + 1;
                    queue.push(jj);
                }
            }
        }
        if !found {
            break;
        }

        fn dfs(
            j: usize,
            adj: &[Vec<usize>],
            dist: &mut [u32],
            match_online: &mut [usize],
            match_offline: &mut [usize],
        ) -> bool {
            for idx in 0..adj[j].len() {
                let i = adj[j][idx];
                let jj = match_offline[i];
                if jj == usize::MAX
                    || (dist[jj] == dist[j] + 1
                        && dfs(jj, adj, dist, match_online, match_offline))
                {
                    match_online[j] = i;
                    match_offline[i] = j;
                    return true;
                }
            }
            dist[j] = u32::MAX;
            false
        }

        for j in 0..m {
            if match_online[j] == NIL {
                dfs(j, adj, &mut dist, &mut match_online, &mut match_offline);
            }
        }
    }
    match_online.iter().filter(|&&i| i != NIL).count()
}

/// Maximum-weight matching by successive shortest augmenting paths with
/// potentials on a square padded cost matrix (absent edges act as free
/// skips). Exact for integer-scaled weights, 1e-9-tolerant otherwise.
fn max_weight_matching(instance: &Instance) -> f64 {
    let n = instance.n_offline;
    let m = instance.arrivals.len();
    let size = n.max(m);
    // cost[j][i] = -w(i, j); rows are online vertices.
    let mut cost = vec![vec![0.0f64; size]; size];
    for (j, arrival) in instance.arrivals.iter().enumerate() {
        for &(i, w) in arrival {
            // Duplicate listings keep the heaviest edge.
            cost[j][i] = cost[j][i].min(-w);
        }
    }

    // Potential-based assignment over rows; 1-indexed helper arrays.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; size + 1];
    let mut v = vec![0.0; size + 1];
    let mut way = vec![0usize; size + 1];
    let mut p = vec![0usize; size + 1]; // p[col] = row matched to col
    for row in 1..=size {
        p[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![inf; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=size {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut total = 0.0;
    for col in 1..=size {
        let row = p[col];
        if row >= 1 {
            total -= cost[row - 1][col - 1];
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Exact selection enumeration
// ---------------------------------------------------------------------------

/// Enumeration cap: full weighted enumeration stays exact and fast up to
/// this many pairs.
pub const ENUMERATION_LIMIT: usize = 8;

/// Scripted draw source: replays a decision prefix, answers `false` past
/// it, and records every decision with its branch probability.
struct Script {
    decisions: Vec<(bool, f64)>,
    pos: usize,
}

impl Script {
    fn with_prefix(prefix: Vec<bool>) -> Self {
        Script {
            decisions: prefix.into_iter().map(|b| (b, f64::NAN)).collect(),
            pos: 0,
        }
    }

    fn probability(&self) -> f64 {
        self.decisions
            .iter()
            .map(|&(b, p)| if b { p } else { 1.0 - p })
            .product()
    }
}

impl DrawSource for Script {
    fn draw(&mut self, p_true: f64) -> bool {
        if self.pos < self.decisions.len() {
            self.decisions[self.pos].1 = p_true;
        } else {
            self.decisions.push((false, p_true));
        }
        let b = self.decisions[self.pos].0;
        self.pos += 1;
        b
    }
}

/// All `(probability, selected element, next state)` branches of one pair,
/// produced by driving the real transition code over every decision path.
fn enumerate_step(
    state: &SelectorState,
    pair: Pair,
) -> Result<Vec<(f64, Element, SelectorState)>, OcsError> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<bool>> = vec![Vec::new()];
    while let Some(prefix) = stack.pop() {
        let prefix_len = prefix.len();
        let mut script = Script::with_prefix(prefix);
        let mut next = state.clone();
        let selected = next.step(pair, &mut script)?;
        // Fork every fresh decision point that defaulted to `false`.
        for i in prefix_len..script.decisions.len() {
            let mut alt: Vec<bool> = script.decisions[..i].iter().map(|&(b, _)| b).collect();
            alt.push(true);
            stack.push(alt);
        }
        out.push((script.probability(), selected, next));
    }
    Ok(out)
}

/// Exact joint distribution of the selections on a short pair sequence:
/// each entry maps the per-pair selected slots (0 = first, 1 = second) to
/// its probability. States that agree on everything a future pair can
/// observe are merged as the enumeration advances.
pub fn selection_distribution(
    kind: SelectorKind,
    pairs: &[Pair],
) -> Result<Vec<(Vec<u8>, f64)>, OracleError> {
    if pairs.len() > ENUMERATION_LIMIT {
        return Err(OracleError::TooManyPairs {
            pairs: pairs.len(),
            limit: ENUMERATION_LIMIT,
        });
    }
    let initial = SelectorState::new(kind)?;
    let mut layer: HashMap<(Vec<u8>, Vec<u8>), (f64, SelectorState)> = HashMap::new();
    layer.insert((initial.behavior_key(), Vec::new()), (1.0, initial));
    for &pair in pairs {
        let mut next: HashMap<(Vec<u8>, Vec<u8>), (f64, SelectorState)> = HashMap::new();
        for ((_, selections), (prob, state)) in layer {
            for (branch_prob, selected, new_state) in enumerate_step(&state, pair)? {
                let mut sel = selections.clone();
                sel.push(if selected == pair.first { 0 } else { 1 });
                let key = (new_state.behavior_key(), sel);
                let entry = next.entry(key).or_insert((0.0, new_state));
                entry.0 += prob * branch_prob;
            }
        }
        layer = next;
    }
    let mut dist: HashMap<Vec<u8>, f64> = HashMap::new();
    for ((_, selections), (prob, _)) in layer {
        *dist.entry(selections).or_insert(0.0) += prob;
    }
    let mut out: Vec<(Vec<u8>, f64)> = dist.into_iter().collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Probability that `element` is selected in none of the indexed pairs,
/// given a precomputed selection distribution.
pub fn never_selected_probability(
    dist: &[(Vec<u8>, f64)],
    pairs: &[Pair],
    element: Element,
    subsequence: &[usize],
) -> f64 {
    dist.iter()
        .filter(|(slots, _)| {
            subsequence
                .iter()
                .all(|&idx| pairs[idx].get(slots[idx] as usize) != element)
        })
        .map(|&(_, p)| p)
        .sum()
}

/// Exact probability that `element` is selected in none of the indexed
/// pairs, by full weighted enumeration of the selector's randomness.
pub fn exact_never_selected(
    kind: SelectorKind,
    pairs: &[Pair],
    element: Element,
    subsequence: &[usize],
) -> Result<f64, OracleError> {
    for &idx in subsequence {
        if idx >= pairs.len() {
            return Err(OracleError::Ocs(OcsError::IndexOutOfRange {
                index: idx,
                len: pairs.len(),
            }));
        }
        if !pairs[idx].contains(element) {
            return Err(OracleError::Ocs(OcsError::ElementNotInPair {
                index: idx,
                element,
            }));
        }
    }
    let dist = selection_distribution(kind, pairs)?;
    Ok(never_selected_probability(&dist, pairs, element, subsequence))
}

// ---------------------------------------------------------------------------
// Exact expected algorithm value
// ---------------------------------------------------------------------------

/// Which matching engine the exact-value oracle should replicate.
#[derive(Debug, Clone)]
pub enum OracleEngine {
    EdgeWeighted { table: GainTable },
    Unweighted { table: UnweightedDualTable, tie: TieBreak },
}

/// Exact expected value of an engine run, with the engine's surrogate for
/// comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactValueReport {
    pub expected_value: f64,
    pub surrogate: f64,
    pub randomized_rounds: usize,
}

/// Exact expected matching weight of the chosen engine on `instance`,
/// enumerating the selector's randomness over the randomized rounds. The
/// round structure is seed-independent, so one structure run pins the pair
/// sequence.
pub fn exact_algorithm_value(
    instance: &Instance,
    engine: &OracleEngine,
    selector_kind: SelectorKind,
) -> Result<ExactValueReport, OracleError> {
    instance.validate()?;
    let mut structure_selector = Selector::new(selector_kind, 0)?;
    let (rounds, surrogate) = match engine {
        OracleEngine::EdgeWeighted { table } => {
            let mut e = Engine::new(instance.n_offline, table.clone());
            for arrival in &instance.arrivals {
                e.arrive(arrival, &mut structure_selector)?;
            }
            (e.rounds(), e.surrogate_primal())
        }
        OracleEngine::Unweighted { table, tie } => {
            let neighbors = instance.unit_neighbors().ok_or(OracleError::NotUnitWeight)?;
            let (p, _) = crate::recurrences::optimal_p();
            let g = crate::recurrences::RecurrenceTable::improved(p)
                .expect("optimal p is interior");
            let mut e = UnweightedEngine::new(instance.n_offline, table.clone(), g, *tie);
            for a in &neighbors {
                e.greedy_arrive(a, &mut structure_selector)?;
            }
            (e.rounds(), e.surrogate_primal())
        }
    };

    let mut base_best: Vec<f64> = vec![0.0; instance.n_offline];
    let mut pairs: Vec<Pair> = Vec::new();
    let mut pair_weights: Vec<(usize, f64, usize, f64)> = Vec::new();
    for round in &rounds {
        match round {
            TranscriptRound::Unmatched => {}
            TranscriptRound::Deterministic { vertex, weight } => {
                base_best[*vertex] = base_best[*vertex].max(*weight);
            }
            TranscriptRound::Randomized { i1, w1, i2, w2, .. } => {
                pairs.push(Pair::new(Element(*i1 as u32), Element(*i2 as u32)));
                pair_weights.push((*i1, *w1, *i2, *w2));
            }
        }
    }
    if pairs.len() > ENUMERATION_LIMIT {
        return Err(OracleError::TooManyRandomizedRounds {
            rounds: pairs.len(),
            limit: ENUMERATION_LIMIT,
        });
    }

    let dist = selection_distribution(selector_kind, &pairs)?;
    let mut expected = 0.0;
    let mut best = vec![0.0; instance.n_offline];
    for (slots, prob) in &dist {
        best.copy_from_slice(&base_best);
        for (idx, &slot) in slots.iter().enumerate() {
            let (i1, w1, i2, w2) = pair_weights[idx];
            let (v, w) = if slot == 0 { (i1, w1) } else { (i2, w2) };
            if w > best[v] {
                best[v] = w;
            }
        }
        expected += prob * best.iter().sum::<f64>();
    }

    Ok(ExactValueReport {
        expected_value: expected,
        surrogate,
        randomized_rounds: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primal_dual::table_1a;
    use crate::recurrences::{eval_f, eval_g, optimal_p};
    use crate::unweighted::table_3;
    use rand::{Rng, SeedableRng};

    fn pair(a: u32, b: u32) -> Pair {
        Pair::new(Element(a), Element(b))
    }

    fn instance(n: usize, arrivals: Vec<Vec<(usize, f64)>>) -> Instance {
        Instance {
            name: "test".into(),
            n_offline: n,
            arrivals,
            seed: None,
            generator: None,
        }
    }

    /// Brute force over all matchings, the independent check for the fast
    /// optimum paths.
    fn brute_force_optimum(instance: &Instance) -> f64 {
        fn go(j: usize, instance: &Instance, used: &mut Vec<bool>) -> f64 {
            if j == instance.arrivals.len() {
                return 0.0;
            }
            let mut best = go(j + 1, instance, used);
            for &(i, w) in &instance.arrivals[j] {
                if !used[i] {
                    used[i] = true;
                    let v = w + go(j + 1, instance, used);
                    used[i] = false;
                    best = best.max(v);
                }
            }
            best
        }
        let mut used = vec![false; instance.n_offline];
        go(0, instance, &mut used)
    }

    #[test]
    fn optimum_on_tiny_instances() {
        let single = instance(1, vec![vec![(0, 3.5)]]);
        assert_eq!(offline_optimum(&single).unwrap(), 3.5);

        let two = instance(2, vec![vec![(0, 1.0), (1, 2.0)], vec![(0, 2.0), (1, 1.0)]]);
        assert_eq!(offline_optimum(&two).unwrap(), 4.0);
    }

    #[test]
    fn optimum_on_upper_triangular_is_n() {
        for n in [1usize, 3, 9, 25] {
            let arrivals = (0..n)
                .map(|j| (j..n).map(|i| (i, 1.0)).collect())
                .collect();
            let inst = instance(n, arrivals);
            assert_eq!(offline_optimum(&inst).unwrap(), n as f64);
        }
    }

    #[test]
    fn optimum_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for trial in 0..200 {
            let n = rng.gen_range(1..=8);
            let m = rng.gen_range(1..=8);
            let unit = trial % 3 == 0;
            let arrivals: Vec<Vec<(usize, f64)>> = (0..m)
                .map(|_| {
                    let mut edges = Vec::new();
                    for i in 0..n {
                        if rng.gen_bool(0.6) {
                            let w = if unit { 1.0 } else { (rng.gen_range(0..40) as f64) / 4.0 };
                            edges.push((i, w));
                        }
                    }
                    edges
                })
                .collect();
            let inst = instance(n, arrivals);
            let fast = offline_optimum(&inst).unwrap();
            let brute = brute_force_optimum(&inst);
            assert!(
                (fast - brute).abs() < 1e-9,
                "trial {}: fast {} vs brute {}",
                trial,
                fast,
                brute
            );
        }
    }

    #[test]
    fn independent_selector_never_selected_is_dyadic() {
        let pairs = [pair(0, 1), pair(0, 2), pair(0, 3), pair(4, 0)];
        for k in 1..=4 {
            let subset: Vec<usize> = (0..k).collect();
            let p = exact_never_selected(SelectorKind::Independent, &pairs, Element(0), &subset)
                .unwrap();
            assert_eq!(p, 0.5_f64.powi(k as i32));
        }
    }

    #[test]
    fn warmup_two_consecutive_pairs_beat_the_bound() {
        let pairs = [pair(0, 1), pair(0, 2)];
        let p = exact_never_selected(SelectorKind::Warmup, &pairs, Element(0), &[0, 1]).unwrap();
        let bound = 0.25 * eval_f(2); // 15/64
        assert!(p <= bound + 1e-12, "p = {}, bound = {}", p, bound);
        assert!((bound - 15.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn improved_disjoint_runs_beat_the_product_bound() {
        // The worked sequence: runs of length 2 and 1 for element 1.
        let (p_opt, _) = optimal_p();
        let pairs = [pair(10, 1), pair(11, 1), pair(12, 13), pair(14, 1), pair(1, 15)];
        let kind = SelectorKind::Improved { p: p_opt };
        let p = exact_never_selected(kind, &pairs, Element(1), &[0, 1, 4]).unwrap();
        let bound = 0.25 * eval_g(2, p_opt).unwrap() * 0.5 * eval_g(1, p_opt).unwrap();
        assert!(p <= bound + 1e-12, "p = {}, bound = {}", p, bound);
        assert!((bound - 0.111259).abs() < 1e-6);
    }

    #[test]
    fn single_pair_marginals_are_uniform() {
        let (p_opt, _) = optimal_p();
        for kind in [
            SelectorKind::Independent,
            SelectorKind::Warmup,
            SelectorKind::Improved { p: p_opt },
        ] {
            let dist = selection_distribution(kind, &[pair(0, 1)]).unwrap();
            let first: f64 = dist
                .iter()
                .filter(|(s, _)| s[0] == 0)
                .map(|&(_, p)| p)
                .sum();
            assert!((first - 0.5).abs() < 1e-12, "{:?}: {}", kind, first);
        }
    }

    #[test]
    fn marginals_stay_uniform_mid_sequence() {
        let (p_opt, _) = optimal_p();
        let pairs = [pair(0, 1), pair(1, 2), pair(0, 2), pair(2, 1)];
        for kind in [SelectorKind::Warmup, SelectorKind::Improved { p: p_opt }] {
            let dist = selection_distribution(kind, &pairs).unwrap();
            let total: f64 = dist.iter().map(|&(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for idx in 0..pairs.len() {
                let first: f64 = dist
                    .iter()
                    .filter(|(s, _)| s[idx] == 0)
                    .map(|&(_, p)| p)
                    .sum();
                assert!((first - 0.5).abs() < 1e-12, "{:?} pair {}: {}", kind, idx, first);
            }
        }
    }

    #[test]
    fn enumeration_rejects_long_sequences() {
        let pairs: Vec<Pair> = (0..9).map(|i| pair(i, i + 1)).collect();
        assert!(matches!(
            selection_distribution(SelectorKind::Warmup, &pairs),
            Err(OracleError::TooManyPairs { .. })
        ));
    }

    #[test]
    fn exact_value_on_deterministic_instance_matches_run() {
        // One offline vertex: every round is deterministic or unmatched.
        let inst = instance(1, vec![vec![(0, 2.0)], vec![(0, 3.0)]]);
        let report = exact_algorithm_value(
            &inst,
            &OracleEngine::EdgeWeighted { table: table_1a() },
            SelectorKind::Warmup,
        )
        .unwrap();
        assert_eq!(report.randomized_rounds, 0);
        let mut engine = Engine::new(1, table_1a());
        let mut sel = Selector::new(SelectorKind::Warmup, 3).unwrap();
        for a in &inst.arrivals {
            engine.arrive(a, &mut sel).unwrap();
        }
        assert!((report.expected_value - engine.algorithm_value()).abs() < 1e-12);
    }

    #[test]
    fn exact_value_matches_monte_carlo_and_dominates_surrogate() {
        let (p_opt, _) = optimal_p();
        // Complete 2x2 unit bipartite graph.
        let inst = instance(2, vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (1, 1.0)]]);
        let kind = SelectorKind::Improved { p: p_opt };
        let report = exact_algorithm_value(
            &inst,
            &OracleEngine::Unweighted { table: table_3(), tie: TieBreak::SmallestId },
            kind,
        )
        .unwrap();
        assert!(report.expected_value >= report.surrogate - 1e-12);

        let trials = 40_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for seed in 0..trials {
            let mut engine = UnweightedEngine::with_defaults(2);
            let mut sel = Selector::new(kind, seed).unwrap();
            for a in inst.unit_neighbors().unwrap() {
                engine.greedy_arrive(&a, &mut sel).unwrap();
            }
            let v = engine.algorithm_value();
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / trials as f64;
        let var = (sumsq / trials as f64 - mean * mean).max(0.0);
        let se = (var / trials as f64).sqrt();
        assert!(
            (report.expected_value - mean).abs() <= 5.0 * se + 1e-9,
            "exact {} vs mc {} (se {})",
            report.expected_value,
            mean,
            se
        );
    }

    #[test]
    fn unweighted_oracle_rejects_weighted_instances() {
        let inst = instance(2, vec![vec![(0, 2.0)]]);
        let err = exact_algorithm_value(
            &inst,
            &OracleEngine::Unweighted { table: table_3(), tie: TieBreak::SmallestId },
            SelectorKind::Warmup,
        );
        assert!(matches!(err, Err(OracleError::NotUnitWeight)));
    }
}
