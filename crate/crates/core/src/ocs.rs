//! Online correlated selection.
//!
//! A selector consumes a sequence of pairs of ground elements and picks one
//! element per pair. The independent selector uses a fresh fair bit each
//! time. The warmup selector forwards one pair's selection to a later pair
//! through per-element state so that around 1/16 of adjacent repeats are
//! perfectly negatively correlated. The improved selector realizes the
//! negative correlation through sender/receiver roles on a dependence graph
//! over pairs and reaches correlation level `p(1-p)(4-p)/8` at sender
//! probability `p`.
//!
//! All randomness flows through [`DrawSource`], so the exact-enumeration
//! oracle replays the very same transition code with scripted draws.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A ground element (an offline vertex, in the matching engines).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element(pub u32);

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An ordered pair of distinct elements fed to a selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pair {
    pub first: Element,
    pub second: Element,
}

impl Pair {
    pub fn new(first: Element, second: Element) -> Self {
        Pair { first, second }
    }

    pub fn get(&self, slot: usize) -> Element {
        match slot {
            0 => self.first,
            _ => self.second,
        }
    }

    pub fn contains(&self, element: Element) -> bool {
        self.first == element || self.second == element
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OcsError {
    /// A pair held the same element twice.
    DegeneratePair(Element),
    /// The improved selector requires a sender probability strictly inside (0, 1).
    InvalidSenderProbability(f64),
    /// A subsequence index does not refer to any pair.
    IndexOutOfRange { index: usize, len: usize },
    /// A subsequence index refers to a pair that does not contain the element.
    ElementNotInPair { index: usize, element: Element },
}

impl fmt::Display for OcsError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            OcsError::DegeneratePair(e) => write!(f, "pair holds element {} twice", e),
            OcsError::InvalidSenderProbability(p) => {
                write!(f, "sender probability {} is outside (0, 1)", p)
            }
            OcsError::IndexOutOfRange { index, len } => {
                write!(f, "pair index {} out of range for {} pairs", index, len)
            }
            OcsError::ElementNotInPair { index, element } => {
                write!(f, "pair {} does not contain element {}", index, element)
            }
        }
    }
}

impl std::error::Error for OcsError {}

/// Which selection algorithm a [`Selector`] runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectorKind {
    /// Fresh fair bit per pair; no correlation.
    Independent,
    /// Per-element forwarding state; 1/16-level correlation.
    Warmup,
    /// Sender/receiver dependence graph with sender probability `p`.
    Improved { p: f64 },
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            SelectorKind::Independent => write!(f, "independent"),
            SelectorKind::Warmup => write!(f, "warmup"),
            SelectorKind::Improved { p } => write!(f, "improved(p={})", p),
        }
    }
}

/// Source of weighted binary draws. `draw(p)` is true with probability `p`.
///
/// The seeded selector pulls from a ChaCha stream; the exact oracle replays
/// scripted decision paths carrying their branch probabilities.
pub trait DrawSource {
    fn draw(&mut self, p_true: f64) -> bool;
}

impl DrawSource for ChaCha8Rng {
    fn draw(&mut self, p_true: f64) -> bool {
        self.gen_bool(p_true)
    }
}

/// Uniform choice between slot 0 and slot 1 of a pair.
fn pick_slot(draws: &mut dyn DrawSource) -> usize {
    if draws.draw(0.5) {
        0
    } else {
        1
    }
}

/// Forwarding state of the warmup selector for one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tau {
    Unknown,
    Selected,
    NotSelected,
}

/// Warmup selector state: the most recent pair containing an element may
/// leave behind whether the element was selected there.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct WarmupState {
    tau: Vec<Tau>,
}

impl WarmupState {
    fn slot(&mut self, element: Element) -> &mut Tau {
        let idx = element.0 as usize;
        if idx >= self.tau.len() {
            self.tau.resize(idx + 1, Tau::Unknown);
        }
        &mut self.tau[idx]
    }

    pub fn tau(&self, element: Element) -> Tau {
        self.tau
            .get(element.0 as usize)
            .copied()
            .unwrap_or(Tau::Unknown)
    }

    /// One pair: sender with probability 1/2 (draws slot for the selection
    /// and slot for the forwarded state), receiver otherwise (draws the slot
    /// to consult, plus a fresh bit when that state is unknown).
    fn step(&mut self, pair: Pair, draws: &mut dyn DrawSource) -> Element {
        if draws.draw(0.5) {
            // Sender.
            let l = pick_slot(draws);
            let m = pick_slot(draws);
            *self.slot(pair.get(1 - m)) = Tau::Unknown;
            *self.slot(pair.get(m)) = if m == l {
                Tau::Selected
            } else {
                Tau::NotSelected
            };
            pair.get(l)
        } else {
            // Receiver: consult one element's forwarded state and select
            // the opposite whenever it is known.
            let m = pick_slot(draws);
            let l = match self.tau(pair.get(m)) {
                Tau::Selected => 1 - m,
                Tau::NotSelected => m,
                Tau::Unknown => pick_slot(draws),
            };
            *self.slot(pair.first) = Tau::Unknown;
            *self.slot(pair.second) = Tau::Unknown;
            pair.get(l)
        }
    }

    /// Canonical encoding of the future-relevant state, for the oracle's
    /// state-merging enumeration.
    fn behavior_key(&self, out: &mut Vec<u8>) {
        for t in &self.tau {
            out.push(match t {
                Tau::Unknown => 0,
                Tau::Selected => 1,
                Tau::NotSelected => 2,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Sender,
    Receiver,
}

/// What one pair of the improved selector left behind.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeRecord {
    pub kind: NodeKind,
    /// The element whose next pair this sender directed its selection at.
    pub sent_toward: Option<Element>,
    /// The element selected in this pair.
    pub selection: Element,
}

/// A realized negative-correlation arc: the receiver pair `to` reused the
/// selection that sender pair `from` made for `element`, oppositely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RealizedArc {
    pub from: u32,
    pub to: u32,
    pub element: Element,
}

/// Improved selector state: per-element last pair, per-pair node records,
/// and the realized arcs (kept for inspection; they never influence future
/// selections).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImprovedState {
    last_pair: Vec<Option<u32>>,
    records: Vec<NodeRecord>,
    arcs: Vec<RealizedArc>,
}

impl ImprovedState {
    fn last_pair_slot(&mut self, element: Element) -> &mut Option<u32> {
        let idx = element.0 as usize;
        if idx >= self.last_pair.len() {
            self.last_pair.resize(idx + 1, None);
        }
        &mut self.last_pair[idx]
    }

    pub fn last_pair(&self, element: Element) -> Option<u32> {
        self.last_pair.get(element.0 as usize).copied().flatten()
    }

    pub fn records(&self) -> &[NodeRecord] {
        &self.records
    }

    pub fn realized_arcs(&self) -> &[RealizedArc] {
        &self.arcs
    }

    /// Every pair node is incident to at most one realized arc.
    pub fn arcs_form_matching(&self) -> bool {
        let mut seen = BTreeSet::new();
        for arc in &self.arcs {
            if !seen.insert(arc.from) || !seen.insert(arc.to) {
                return false;
            }
        }
        true
    }

    /// The in-arc of `pair.get(slot)` can deliver a selection iff the last
    /// pair containing that element was a sender that directed its out-arc
    /// here. Returns that pair's index and whether it selected the element.
    fn deliverable(&self, pair: Pair, slot: usize) -> Option<(u32, bool)> {
        let element = pair.get(slot);
        let from = self.last_pair(element)?;
        let rec = &self.records[from as usize];
        if rec.kind == NodeKind::Sender && rec.sent_toward == Some(element) {
            Some((from, rec.selection == element))
        } else {
            None
        }
    }

    fn step(&mut self, p: f64, pair: Pair, draws: &mut dyn DrawSource) -> Element {
        let j = self.records.len() as u32;
        let record = if draws.draw(p) {
            // Sender: fresh selection, and one out-arc picked before its
            // target pair exists (it may never arrive).
            let selection = pair.get(pick_slot(draws));
            let sent_toward = Some(pair.get(pick_slot(draws)));
            NodeRecord {
                kind: NodeKind::Sender,
                sent_toward,
                selection,
            }
        } else {
            // Receiver: inspect both in-arcs, take a deliverable one
            // (uniform tie-break), and select opposite to the sender.
            let q0 = self.deliverable(pair, 0);
            let q1 = self.deliverable(pair, 1);
            let chosen = match (q0, q1) {
                (Some(a), Some(b)) => {
                    if pick_slot(draws) == 0 {
                        Some((0, a))
                    } else {
                        Some((1, b))
                    }
                }
                (Some(a), None) => Some((0, a)),
                (None, Some(b)) => Some((1, b)),
                (None, None) => None,
            };
            let selection = match chosen {
                Some((slot, (from, sender_selected_it))) => {
                    self.arcs.push(RealizedArc {
                        from,
                        to: j,
                        element: pair.get(slot),
                    });
                    if sender_selected_it {
                        pair.get(1 - slot)
                    } else {
                        pair.get(slot)
                    }
                }
                None => pair.get(pick_slot(draws)),
            };
            NodeRecord {
                kind: NodeKind::Receiver,
                sent_toward: None,
                selection,
            }
        };
        let selection = record.selection;
        self.records.push(record);
        *self.last_pair_slot(pair.first) = Some(j);
        *self.last_pair_slot(pair.second) = Some(j);
        selection
    }

    /// Per-element summary of what a future pair can observe: nothing, a
    /// dead in-arc, or a deliverable sender selection (for / against).
    fn behavior_key(&self, out: &mut Vec<u8>) {
        for id in 0..self.last_pair.len() {
            let element = Element(id as u32);
            out.push(match self.last_pair[id] {
                None => 0u8,
                Some(j) => {
                    let rec = &self.records[j as usize];
                    if rec.kind == NodeKind::Sender && rec.sent_toward == Some(element) {
                        if rec.selection == element {
                            2
                        } else {
                            3
                        }
                    } else {
                        1
                    }
                }
            });
        }
    }
}

/// Internal state machine shared by the seeded selector and the exact
/// enumeration oracle.
#[derive(Debug, Clone)]
pub enum SelectorState {
    Independent,
    Warmup(WarmupState),
    Improved { p: f64, state: ImprovedState },
}

impl SelectorState {
    pub fn new(kind: SelectorKind) -> Result<Self, OcsError> {
        match kind {
            SelectorKind::Independent => Ok(SelectorState::Independent),
            SelectorKind::Warmup => Ok(SelectorState::Warmup(WarmupState::default())),
            SelectorKind::Improved { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(OcsError::InvalidSenderProbability(p));
                }
                Ok(SelectorState::Improved {
                    p,
                    state: ImprovedState::default(),
                })
            }
        }
    }

    /// Advance by one pair, pulling randomness from `draws`.
    pub fn step(&mut self, pair: Pair, draws: &mut dyn DrawSource) -> Result<Element, OcsError> {
        if pair.first == pair.second {
            return Err(OcsError::DegeneratePair(pair.first));
        }
        Ok(match self {
            SelectorState::Independent => pair.get(pick_slot(draws)),
            SelectorState::Warmup(state) => state.step(pair, draws),
            SelectorState::Improved { p, state } => state.step(*p, pair, draws),
        })
    }

    /// Canonical encoding of everything a future pair can observe. Paths
    /// with equal keys behave identically from here on.
    pub fn behavior_key(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            SelectorState::Independent => {}
            SelectorState::Warmup(state) => state.behavior_key(&mut out),
            SelectorState::Improved { state, .. } => state.behavior_key(&mut out),
        }
        out
    }
}

/// A seeded online selector. Deterministic given `(kind, seed)` and the
/// input sequence; single-threaded by construction.
#[derive(Debug, Clone)]
pub struct Selector {
    kind: SelectorKind,
    rng: ChaCha8Rng,
    state: SelectorState,
    pairs_seen: usize,
}

impl Selector {
    pub fn new(kind: SelectorKind, seed: u64) -> Result<Self, OcsError> {
        Ok(Selector {
            kind,
            rng: ChaCha8Rng::seed_from_u64(seed),
            state: SelectorState::new(kind)?,
            pairs_seen: 0,
        })
    }

    pub fn kind(&self) -> SelectorKind {
        self.kind
    }

    pub fn pairs_seen(&self) -> usize {
        self.pairs_seen
    }

    /// Select one element of the pair and update internal state.
    pub fn select(&mut self, pair: Pair) -> Result<Element, OcsError> {
        let chosen = self.state.step(pair, &mut self.rng)?;
        self.pairs_seen += 1;
        Ok(chosen)
    }

    /// Realized negative-correlation arcs so far (improved selector only).
    pub fn realized_arcs(&self) -> &[RealizedArc] {
        match &self.state {
            SelectorState::Improved { state, .. } => state.realized_arcs(),
            _ => &[],
        }
    }

    pub fn state(&self) -> &SelectorState {
        &self.state
    }
}

/// Convenience constructor mirroring [`Selector::new`].
pub fn new_selector(kind: SelectorKind, seed: u64) -> Result<Selector, OcsError> {
    Selector::new(kind, seed)
}

/// Partition a set of pair indices (all containing `element`) into maximal
/// consecutive runs and return the run lengths.
///
/// A run is consecutive iff it includes every pair containing the element
/// between its first and last member.
pub fn consecutive_decomposition(
    pairs: &[Pair],
    element: Element,
    subsequence: &[usize],
) -> Result<Vec<usize>, OcsError> {
    let mut position = vec![usize::MAX; pairs.len()];
    let mut count = 0usize;
    for (idx, pair) in pairs.iter().enumerate() {
        if pair.contains(element) {
            position[idx] = count;
            count += 1;
        }
    }

    let mut chosen: BTreeSet<usize> = BTreeSet::new();
    for &idx in subsequence {
        if idx >= pairs.len() {
            return Err(OcsError::IndexOutOfRange {
                index: idx,
                len: pairs.len(),
            });
        }
        if position[idx] == usize::MAX {
            return Err(OcsError::ElementNotInPair {
                index: idx,
                element,
            });
        }
        chosen.insert(position[idx]);
    }

    let mut runs = Vec::new();
    let mut prev: Option<usize> = None;
    let mut run_len = 0usize;
    for pos in chosen {
        match prev {
            Some(p) if pos == p + 1 => run_len += 1,
            _ => {
                if run_len > 0 {
                    runs.push(run_len);
                }
                run_len = 1;
            }
        }
        prev = Some(pos);
    }
    if run_len > 0 {
        runs.push(run_len);
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(a: u32, b: u32) -> Pair {
        Pair::new(Element(a), Element(b))
    }

    fn run_sequence(kind: SelectorKind, seed: u64, pairs: &[Pair]) -> Vec<Element> {
        let mut sel = Selector::new(kind, seed).unwrap();
        pairs.iter().map(|&p| sel.select(p).unwrap()).collect()
    }

    #[test]
    fn seeded_replay_is_identical() {
        let pairs: Vec<Pair> = (0..40).map(|i| pair(i % 5, (i + 1) % 5)).collect();
        for kind in [
            SelectorKind::Independent,
            SelectorKind::Warmup,
            SelectorKind::Improved { p: 0.4648 },
        ] {
            let a = run_sequence(kind, 7, &pairs);
            let b = run_sequence(kind, 7, &pairs);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn improved_requires_interior_p() {
        assert!(Selector::new(SelectorKind::Improved { p: 0.0 }, 1).is_err());
        assert!(Selector::new(SelectorKind::Improved { p: 1.0 }, 1).is_err());
        assert!(Selector::new(SelectorKind::Improved { p: 0.4648 }, 1).is_ok());
    }

    #[test]
    fn degenerate_pair_is_rejected() {
        let mut sel = Selector::new(SelectorKind::Warmup, 3).unwrap();
        let err = sel.select(pair(2, 2)).unwrap_err();
        assert_eq!(err, OcsError::DegeneratePair(Element(2)));
    }

    #[test]
    fn decomposition_matches_worked_example() {
        let pairs = [pair(10, 1), pair(11, 1), pair(12, 13), pair(14, 1), pair(1, 15)];
        let i = Element(1);
        assert_eq!(
            consecutive_decomposition(&pairs, i, &[0, 1, 4]).unwrap(),
            vec![2, 1]
        );
        assert_eq!(
            consecutive_decomposition(&pairs, i, &[0, 1, 3, 4]).unwrap(),
            vec![4]
        );
        assert_eq!(consecutive_decomposition(&pairs, i, &[]).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn decomposition_rejects_bad_indices() {
        let pairs = [pair(0, 1), pair(2, 3)];
        assert!(matches!(
            consecutive_decomposition(&pairs, Element(0), &[5]),
            Err(OcsError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            consecutive_decomposition(&pairs, Element(0), &[1]),
            Err(OcsError::ElementNotInPair { .. })
        ));
    }

    #[test]
    fn identical_pairs_are_allowed() {
        let pairs = [pair(0, 1), pair(0, 1), pair(0, 1)];
        for kind in [SelectorKind::Warmup, SelectorKind::Improved { p: 0.5 }] {
            for seed in 0..50 {
                let out = run_sequence(kind, seed, &pairs);
                assert!(out.iter().all(|e| e.0 <= 1));
            }
        }
    }

    proptest! {
        #[test]
        fn selection_is_always_a_member(seed in 0u64..500, raw in proptest::collection::vec((0u32..6, 0u32..6), 1..30)) {
            let pairs: Vec<Pair> = raw
                .into_iter()
                .map(|(a, b)| if a == b { pair(a, (a + 1) % 6) } else { pair(a, b) })
                .collect();
            for kind in [SelectorKind::Independent, SelectorKind::Warmup, SelectorKind::Improved { p: 0.4648 }] {
                let mut sel = Selector::new(kind, seed).unwrap();
                for &p in &pairs {
                    let got = sel.select(p).unwrap();
                    prop_assert!(got == p.first || got == p.second);
                }
            }
        }

        #[test]
        fn realized_arcs_form_a_matching(seed in 0u64..500, raw in proptest::collection::vec((0u32..5, 0u32..5), 1..40)) {
            let pairs: Vec<Pair> = raw
                .into_iter()
                .map(|(a, b)| if a == b { pair(a, (a + 1) % 5) } else { pair(a, b) })
                .collect();
            let mut sel = Selector::new(SelectorKind::Improved { p: 0.4648 }, seed).unwrap();
            for &p in &pairs {
                sel.select(p).unwrap();
            }
            if let SelectorState::Improved { state, .. } = sel.state() {
                prop_assert!(state.arcs_form_matching());
                for arc in state.realized_arcs() {
                    prop_assert!(arc.from < arc.to);
                    prop_assert!(pairs[arc.from as usize].contains(arc.element));
                    prop_assert!(pairs[arc.to as usize].contains(arc.element));
                    // No pair between the endpoints contains the element.
                    for t in arc.from + 1..arc.to {
                        prop_assert!(!pairs[t as usize].contains(arc.element));
                    }
                }
            } else {
                unreachable!();
            }
        }
    }
}
