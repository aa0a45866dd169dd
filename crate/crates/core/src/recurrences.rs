//! Closed evaluation of the selection-quality recurrences.
//!
//! Both correlated selectors guarantee that an element appearing in `k`
//! consecutive pairs is left unselected with probability at most
//! `2^-k * f_k` (warmup) or `2^-k * g_k` (improved with sender
//! probability `p`). This module evaluates `f_k`, `g_k`, and the
//! correlation level `gamma` those recurrences certify.

use std::fmt;

/// Largest index kept in a [`RecurrenceTable`]. Beyond this the bound factor
/// `2^-k * g_k` is below 1e-12 and treated as zero by every consumer.
pub const K_MAX: usize = 64;

/// Warmup decay coefficient: two adjacent pairs are perfectly negatively
/// correlated with probability 1/16.
pub const WARMUP_GAMMA: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, PartialEq)]
pub enum RecurrenceError {
    /// A probability argument was outside `[0, 1]`.
    ProbabilityOutOfRange(f64),
}

impl fmt::Display for RecurrenceError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            RecurrenceError::ProbabilityOutOfRange(p) => {
                write!(f, "probability {} is outside [0, 1]", p)
            }
        }
    }
}

impl std::error::Error for RecurrenceError {}

/// Which recurrence a table holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecurrenceKind {
    Warmup,
    Improved { p: f64 },
}

/// Memoized forward evaluation of `x_k = x_{k-1} - gamma * x_{k-2}` with
/// `x_0 = x_1 = 1`, for indices `0..=K_MAX`.
#[derive(Debug, Clone)]
pub struct RecurrenceTable {
    kind: RecurrenceKind,
    values: Vec<f64>,
}

impl RecurrenceTable {
    pub fn warmup() -> Self {
        Self::with_coefficient(RecurrenceKind::Warmup, WARMUP_GAMMA)
    }

    pub fn improved(p: f64) -> Result<Self, RecurrenceError> {
        let gamma = gamma_from_p(p)?;
        Ok(Self::with_coefficient(RecurrenceKind::Improved { p }, gamma))
    }

    fn with_coefficient(kind: RecurrenceKind, gamma: f64) -> Self {
        let mut values = Vec::with_capacity(K_MAX + 1);
        values.push(1.0);
        values.push(1.0);
        for k in 2..=K_MAX {
            let next = values[k - 1] - gamma * values[k - 2];
            values.push(next);
        }
        RecurrenceTable { kind, values }
    }

    pub fn kind(&self) -> RecurrenceKind {
        self.kind
    }

    /// `f_k` or `g_k`. Indices beyond [`K_MAX`] are not stored.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// The never-selected probability bound `2^-k * value(k)` for a run of
    /// `k` consecutive pairs; zero past [`K_MAX`] where it is below 1e-12.
    pub fn bound_factor(&self, k: usize) -> f64 {
        if k > K_MAX {
            0.0
        } else {
            0.5_f64.powi(k as i32) * self.values[k]
        }
    }
}

/// `f_k` from the warmup recurrence `f_k = f_{k-1} - f_{k-2}/16`.
pub fn eval_f(k: usize) -> f64 {
    eval_recurrence(k, WARMUP_GAMMA)
}

/// `g_k` from the improved recurrence with coefficient `p(1-p)(4-p)/8`.
pub fn eval_g(k: usize, p: f64) -> Result<f64, RecurrenceError> {
    Ok(eval_recurrence(k, gamma_from_p(p)?))
}

fn eval_recurrence(k: usize, gamma: f64) -> f64 {
    if k < 2 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, 1.0);
    for _ in 2..=k {
        let next = cur - gamma * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Correlation level certified by the improved selector at sender
/// probability `p`: `p(1-p)(4-p)/8`.
pub fn gamma_from_p(p: f64) -> Result<f64, RecurrenceError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(RecurrenceError::ProbabilityOutOfRange(p));
    }
    Ok(p * (1.0 - p) * (4.0 - p) / 8.0)
}

/// The sender probability maximizing [`gamma_from_p`] together with the
/// maximum itself: `((5 - sqrt 13)/3, (13 sqrt 13 - 35)/108)`.
pub fn optimal_p() -> (f64, f64) {
    let p = (5.0 - 13.0_f64.sqrt()) / 3.0;
    let gamma = gamma_from_p(p).expect("optimal p lies in [0, 1]");
    (p, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warmup_base_cases_and_first_steps() {
        assert_eq!(eval_f(0), 1.0);
        assert_eq!(eval_f(1), 1.0);
        assert_eq!(eval_f(2), 0.9375);
        assert_eq!(eval_f(3), 0.875);
    }

    #[test]
    fn improved_matches_published_values() {
        let (p, _) = optimal_p();
        assert_eq!(eval_g(0, p).unwrap(), 1.0);
        assert!((eval_g(2, p).unwrap() - 0.89007253).abs() < 1e-8);
        assert!((eval_g(4, p).unwrap() - 0.68230164).abs() < 1e-8);
    }

    #[test]
    fn probability_domain_is_enforced() {
        assert!(eval_g(3, -0.1).is_err());
        assert!(eval_g(3, 1.5).is_err());
        assert!(gamma_from_p(f64::NAN).is_err());
    }

    #[test]
    fn gamma_endpoints_vanish() {
        assert_eq!(gamma_from_p(0.0).unwrap(), 0.0);
        assert_eq!(gamma_from_p(1.0).unwrap(), 0.0);
    }

    #[test]
    fn optimal_p_closed_form() {
        let (p, gamma) = optimal_p();
        assert!((p - 0.4648162).abs() < 1e-7);
        let expected = (13.0 * 13.0_f64.sqrt() - 35.0) / 108.0;
        assert!((gamma - expected).abs() < 1e-15);
        // Internal consistency is exact, not approximate.
        assert_eq!(gamma_from_p(p).unwrap(), gamma);
    }

    #[test]
    fn optimal_p_agrees_with_numeric_maximization() {
        // gamma_from_p is a cubic, so the interpolant through four samples
        // reproduces it exactly; its interior stationary point is the
        // numeric maximizer to machine precision.
        let xs = [0.0, 0.25, 0.5, 0.75];
        let ys: Vec<f64> = xs.iter().map(|&x| gamma_from_p(x).unwrap()).collect();
        let d01 = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        let d12 = (ys[2] - ys[1]) / (xs[2] - xs[1]);
        let d23 = (ys[3] - ys[2]) / (xs[3] - xs[2]);
        let d012 = (d12 - d01) / (xs[2] - xs[0]);
        let d123 = (d23 - d12) / (xs[3] - xs[1]);
        let d0123 = (d123 - d012) / (xs[3] - xs[0]);
        // Derivative of the Newton-form interpolant.
        let deriv = |x: f64| {
            d01 + d012 * ((x - xs[0]) + (x - xs[1]))
                + d0123
                    * ((x - xs[1]) * (x - xs[2])
                        + (x - xs[0]) * (x - xs[2])
                        + (x - xs[0]) * (x - xs[1]))
        };
        // deriv is a quadratic; recover its coefficients from three values.
        let (q0, q1, q2) = (deriv(0.0), deriv(0.5), deriv(1.0));
        let a = 2.0 * q0 - 4.0 * q1 + 2.0 * q2;
        let b = q2 - q0 - a;
        let c = q0;
        let disc = (b * b - 4.0 * a * c).sqrt();
        let maximizer = [(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)]
            .into_iter()
            .filter(|r| (0.0..=1.0).contains(r))
            .max_by(|x, y| gamma_from_p(*x).unwrap().total_cmp(&gamma_from_p(*y).unwrap()))
            .unwrap();
        let (p, gamma) = optimal_p();
        assert!((p - maximizer).abs() < 1e-9, "p {} vs fit {}", p, maximizer);
        assert!((gamma - gamma_from_p(maximizer).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn grid_search_locates_the_maximizer() {
        let mut best = (0.0, -1.0);
        let mut x = 0.0;
        while x <= 1.0 {
            let g = gamma_from_p(x).unwrap();
            if g > best.1 {
                best = (x, g);
            }
            x += 1e-4;
        }
        assert!((best.0 - optimal_p().0).abs() < 1e-3);
    }

    #[test]
    fn tables_are_positive_and_non_increasing() {
        let mut tables = vec![RecurrenceTable::warmup()];
        for i in 0..=10 {
            tables.push(RecurrenceTable::improved(i as f64 / 10.0).unwrap());
        }
        for table in &tables {
            for k in 1..=K_MAX {
                assert!(table.value(k) > 0.0, "{:?} at k={}", table.kind(), k);
                assert!(table.value(k) <= table.value(k - 1));
            }
        }
    }

    #[test]
    fn warmup_is_dominated_by_semi_ocs_chain() {
        for k in 1..=K_MAX {
            let chain = (1.0 - WARMUP_GAMMA).powi(k as i32 - 1);
            assert!(eval_f(k) <= chain + 1e-15);
        }
    }

    #[test]
    fn bound_factor_caps_beyond_table() {
        let t = RecurrenceTable::warmup();
        assert_eq!(t.bound_factor(K_MAX + 1), 0.0);
        assert!((t.bound_factor(2) - 0.25 * 0.9375).abs() < 1e-15);
    }
}
