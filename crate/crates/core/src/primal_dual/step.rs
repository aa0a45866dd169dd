//! Piecewise-constant functions over weight-levels `w > 0`.
//!
//! A [`StepFunction`] holds finitely many half-open pieces
//! `(0, b_1], (b_1, b_2], ..., (b_t, inf)`. All integrals are computed
//! exactly as sums of piece length times piece value; there is no
//! quadrature anywhere.

/// One piece of a step function: the value on `(lo, hi]`, where the last
/// piece has `hi = f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece<'a, T> {
    pub lo: f64,
    pub hi: f64,
    pub value: &'a T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T> {
    /// Strictly increasing breakpoints, all > 0.
    breaks: Vec<f64>,
    /// One value per piece; `values.len() == breaks.len() + 1`. The last
    /// entry is the tail value on `(breaks.last(), inf)`.
    values: Vec<T>,
}

impl<T: Clone> StepFunction<T> {
    pub fn constant(value: T) -> Self {
        StepFunction {
            breaks: Vec::new(),
            values: vec![value],
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn piece_count(&self) -> usize {
        self.values.len()
    }

    pub fn tail(&self) -> &T {
        self.values.last().expect("at least one piece")
    }

    /// Value at a weight-level `w > 0`.
    pub fn value_at(&self, w: f64) -> &T {
        let idx = self.breaks.partition_point(|&b| b < w);
        &self.values[idx]
    }

    /// Refine the partition at `w` without changing the function.
    /// No-op for `w <= 0` or an existing breakpoint.
    pub fn insert_break(&mut self, w: f64) {
        if w <= 0.0 {
            return;
        }
        match self.breaks.binary_search_by(|b| b.partial_cmp(&w).unwrap()) {
            Ok(_) => {}
            Err(pos) => {
                self.breaks.insert(pos, w);
                let v = self.values[pos].clone();
                self.values.insert(pos, v);
            }
        }
    }

    pub fn pieces(&self) -> impl Iterator<Item = Piece<'_, T>> {
        let breaks = &self.breaks;
        self.values.iter().enumerate().map(move |(idx, value)| {
            let lo = if idx == 0 { 0.0 } else { breaks[idx - 1] };
            let hi = breaks.get(idx).copied().unwrap_or(f64::INFINITY);
            Piece { lo, hi, value }
        })
    }

    /// Apply `update(piece_hi, value)` to every piece, where `piece_hi` is
    /// the piece's closed upper endpoint (infinite for the tail).
    pub fn update_pieces(&mut self, mut update: impl FnMut(f64, &mut T)) {
        for idx in 0..self.values.len() {
            let hi = self.breaks.get(idx).copied().unwrap_or(f64::INFINITY);
            update(hi, &mut self.values[idx]);
        }
    }

    /// Exact integral of `map(value)` over `(lo, hi]`, clipping pieces. A
    /// `hi` of infinity requires the mapped tail to be zero.
    pub fn integrate(&self, lo: f64, hi: f64, map: impl Fn(&T) -> f64) -> f64 {
        let mut total = 0.0;
        for piece in self.pieces() {
            let a = piece.lo.max(lo);
            let b = piece.hi.min(hi);
            if b <= a {
                continue;
            }
            let v = map(piece.value);
            if b.is_infinite() {
                debug_assert_eq!(v, 0.0, "tail value must integrate to zero");
                continue;
            }
            total += (b - a) * v;
        }
        total
    }

    /// Exact integral of `map(value)` over all weight-levels.
    pub fn integrate_full(&self, map: impl Fn(&T) -> f64) -> f64 {
        self.integrate(0.0, f64::INFINITY, map)
    }
}
