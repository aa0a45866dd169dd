//! Factor-revealing linear programs and a dense simplex solver.
//!
//! The gain-sharing parameters of both matching engines are optimal
//! solutions of small LPs over `k = 0..=k_max`. This module builds those
//! models, solves them with a two-phase dense tableau simplex (Bland's
//! rule for anti-cycling), re-verifies every reported optimum against the
//! model, and checks the built-in tables against their constraint
//! families.
//!
//! The models here have at most a few dozen rows, so a dense tableau is
//! the right tool; results are bit-reproducible across runs.

use std::collections::HashMap;
use std::fmt;

use crate::primal_dual::GainTable;
use crate::recurrences::{RecurrenceTable, K_MAX};
use crate::unweighted::UnweightedDualTable;

#[derive(Debug, Clone, PartialEq)]
pub enum LpError {
    ParameterOutOfRange(String),
    Malformed(String),
    /// The solver's own certificate failed; indicates a solver defect.
    CertificationFailed { constraint: String, violation: f64 },
    IterationLimit,
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            LpError::ParameterOutOfRange(msg) => write!(f, "parameter out of range: {}", msg),
            LpError::Malformed(msg) => write!(f, "malformed model: {}", msg),
            LpError::CertificationFailed { constraint, violation } => {
                write!(f, "solution fails {} by {:.3e}", constraint, violation)
            }
            LpError::IterationLimit => write!(f, "simplex iteration limit reached"),
        }
    }
}

impl std::error::Error for LpError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub label: String,
    /// Dense coefficient row over the model's variables.
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A dense LP in inequality form: maximize `c . x` subject to the rows and
/// `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LpModel {
    names: Vec<String>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: &str, objective: f64) -> usize {
        self.names.push(name.to_owned());
        self.objective.push(objective);
        for c in &mut self.constraints {
            c.coeffs.push(0.0);
        }
        self.names.len() - 1
    }

    /// Add a row given sparse `(variable, coefficient)` terms.
    pub fn add_constraint(
        &mut self,
        label: &str,
        terms: &[(usize, f64)],
        relation: Relation,
        rhs: f64,
    ) {
        let mut coeffs = vec![0.0; self.names.len()];
        for &(v, c) in terms {
            coeffs[v] += c;
        }
        self.constraints.push(Constraint {
            label: label.to_owned(),
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.names
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.names.is_empty() {
            return Err(LpError::Malformed("no variables".into()));
        }
        for v in self.objective.iter().chain(
            self.constraints
                .iter()
                .flat_map(|c| c.coeffs.iter().chain(std::iter::once(&c.rhs))),
        ) {
            if !v.is_finite() {
                return Err(LpError::Malformed("non-finite coefficient".into()));
            }
        }
        Ok(())
    }

    /// Violations of each row at the assignment `x` (positive = violated).
    pub fn violations(&self, x: &[f64]) -> Vec<(String, f64)> {
        self.constraints
            .iter()
            .map(|c| {
                let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
                let v = match c.relation {
                    Relation::Le => lhs - c.rhs,
                    Relation::Ge => c.rhs - lhs,
                };
                (c.label.clone(), v.max(0.0))
            })
            .collect()
    }

    /// Plain-text listing for debugging.
    pub fn dump(&self) -> String {
        let mut out = String::from("maximize\n  ");
        let mut first = true;
        for (name, &c) in self.names.iter().zip(&self.objective) {
            if c != 0.0 {
                if !first {
                    out.push_str(" + ");
                }
                if c == 1.0 {
                    out.push_str(name);
                } else {
                    out.push_str(&format!("{} {}", c, name));
                }
                first = false;
            }
        }
        out.push_str("\nsubject to\n");
        for c in &self.constraints {
            out.push_str(&format!("  {}: ", c.label));
            let mut first = true;
            for (name, &a) in self.names.iter().zip(&c.coeffs) {
                if a != 0.0 {
                    if !first {
                        out.push_str(if a < 0.0 { " - " } else { " + " });
                    } else if a < 0.0 {
                        out.push('-');
                    }
                    let mag = a.abs();
                    if mag == 1.0 {
                        out.push_str(name);
                    } else {
                        out.push_str(&format!("{} {}", mag, name));
                    }
                    first = false;
                }
            }
            out.push_str(&format!(" {} {}\n", c.relation, c.rhs));
        }
        out.push_str("  all variables >= 0\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    values: HashMap<String, f64>,
}

impl LpSolution {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn values(&self) -> &HashMap<String, f64> {
        &self.values
    }
}

const PIVOT_TOL: f64 = 1e-9;
const CERT_TOL: f64 = 1e-8;

/// Solve with a two-phase dense tableau simplex under Bland's rule. Every
/// optimum is re-verified against the model before being reported.
pub fn solve(model: &LpModel) -> Result<LpSolution, LpError> {
    model.validate()?;
    let n = model.n_vars();
    let m = model.n_constraints();

    // Column layout: structural | slack/surplus (one per row) | artificial.
    let mut art_of_row: Vec<Option<usize>> = vec![None; m];
    let mut n_art = 0usize;
    let mut need_art = vec![false; m];
    for (r, c) in model.constraints.iter().enumerate() {
        // After normalizing to rhs >= 0, Ge rows need an artificial.
        let rel = if c.rhs < 0.0 {
            match c.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
            }
        } else {
            c.relation
        };
        if rel == Relation::Ge {
            need_art[r] = true;
            n_art += 1;
        }
    }
    let total = n + m + n_art;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut next_art = n + m;
    for (r, c) in model.constraints.iter().enumerate() {
        let mut row = vec![0.0; total + 1];
        let flip = c.rhs < 0.0;
        let sign = if flip { -1.0 } else { 1.0 };
        for (j, &a) in c.coeffs.iter().enumerate() {
            row[j] = sign * a;
        }
        row[total] = sign * c.rhs;
        let rel = match (c.relation, flip) {
            (Relation::Le, false) | (Relation::Ge, true) => Relation::Le,
            _ => Relation::Ge,
        };
        match rel {
            Relation::Le => {
                row[n + r] = 1.0;
                basis.push(n + r);
            }
            Relation::Ge => {
                row[n + r] = -1.0;
                row[next_art] = 1.0;
                art_of_row[r] = Some(next_art);
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
    }

    let is_artificial = |j: usize| j >= n + m;

    // Reduced-cost row for maximization: pick entering with cost > tol.
    let build_cost_row = |rows: &[Vec<f64>], basis: &[usize], c: &dyn Fn(usize) -> f64| {
        let mut cost = vec![0.0; total + 1];
        for j in 0..total {
            cost[j] = c(j);
        }
        for (r, &b) in basis.iter().enumerate() {
            let cb = c(b);
            if cb != 0.0 {
                for j in 0..=total {
                    cost[j] -= cb * rows[r][j];
                }
            }
        }
        cost
    };

    let pivot = |rows: &mut Vec<Vec<f64>>, cost: &mut Vec<f64>, basis: &mut Vec<usize>, r: usize, j: usize| {
        let p = rows[r][j];
        for v in rows[r].iter_mut() {
            *v /= p;
        }
        for rr in 0..rows.len() {
            if rr != r {
                let f = rows[rr][j];
                if f != 0.0 {
                    for col in 0..=total {
                        let delta = f * rows[r][col];
                        rows[rr][col] -= delta;
                    }
                }
            }
        }
        let f = cost[j];
        if f != 0.0 {
            for col in 0..=total {
                cost[col] -= f * rows[r][col];
            }
        }
        basis[r] = j;
    };

    let run_phase = |rows: &mut Vec<Vec<f64>>,
                         cost: &mut Vec<f64>,
                         basis: &mut Vec<usize>,
                         banned: &dyn Fn(usize) -> bool|
     -> Result<bool, LpError> {
        let max_iters = 20_000 + 200 * (total + m);
        for _ in 0..max_iters {
            // Bland: smallest improving column index.
            let entering = (0..total).find(|&j| !banned(j) && cost[j] > PIVOT_TOL);
            let Some(j) = entering else {
                return Ok(true);
            };
            // Ratio test; ties break toward the smallest basis index.
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..rows.len() {
                let a = rows[r][j];
                if a > PIVOT_TOL {
                    let ratio = (rows[r][total].max(0.0)) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - PIVOT_TOL
                                || (ratio < lratio + PIVOT_TOL && basis[r] < basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false); // unbounded direction
            };
            pivot(rows, cost, basis, r, j);
        }
        Err(LpError::IterationLimit)
    };

    // Phase 1: drive artificials to zero.
    if n_art > 0 {
        let phase1_cost = |j: usize| if is_artificial(j) { -1.0 } else { 0.0 };
        let mut cost = build_cost_row(&rows, &basis, &phase1_cost);
        let bounded = run_phase(&mut rows, &mut cost, &mut basis, &|_| false)?;
        debug_assert!(bounded, "phase 1 objective is bounded by construction");
        let art_sum: f64 = basis
            .iter()
            .enumerate()
            .filter(|&(_, &b)| is_artificial(b))
            .map(|(r, _)| rows[r][total])
            .sum();
        if art_sum > 1e-7 {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: 0.0,
                values: HashMap::new(),
            });
        }
        // Pivot lingering degenerate artificials out of the basis.
        for r in 0..rows.len() {
            if is_artificial(basis[r]) {
                if let Some(j) = (0..n + m).find(|&j| rows[r][j].abs() > PIVOT_TOL) {
                    pivot(&mut rows, &mut cost, &mut basis, r, j);
                }
            }
        }
    }

    // Phase 2 with the real objective; artificial columns are banned.
    let obj = model.objective.clone();
    let phase2_cost = move |j: usize| if j < n { obj[j] } else { 0.0 };
    let mut cost = build_cost_row(&rows, &basis, &phase2_cost);
    let bounded = run_phase(&mut rows, &mut cost, &mut basis, &|j| {
        is_artificial(j)
    })?;
    if !bounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective: f64::INFINITY,
            values: HashMap::new(),
        });
    }

    let mut x = vec![0.0; n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = rows[r][total];
        }
    }
    let objective: f64 = model.objective.iter().zip(&x).map(|(a, b)| a * b).sum();

    // Certificate: the reported optimum must satisfy the model.
    for (label, v) in model.violations(&x) {
        if v > CERT_TOL {
            return Err(LpError::CertificationFailed {
                constraint: label,
                violation: v,
            });
        }
    }

    let values = model
        .names
        .iter()
        .cloned()
        .zip(x.iter().copied())
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        values,
    })
}

/// Factor-revealing LP for the edge-weighted engine: maximize the ratio
/// `Gamma` over gain-sharing parameters `a(0..=k_max)`, `b(0..=k_max)`.
///
/// `kappa` may take the closed endpoints 1 and 2 so parameter sweeps can
/// reproduce the degenerate `Gamma = 1/2` boundary cases, even though the
/// engine itself requires `kappa` strictly inside `(1, 2)`.
pub fn build_edge_weighted_lp(gamma: f64, kappa: f64, k_max: usize) -> Result<LpModel, LpError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(LpError::ParameterOutOfRange(format!("gamma = {}", gamma)));
    }
    if !(1.0..=2.0).contains(&kappa) {
        return Err(LpError::ParameterOutOfRange(format!("kappa = {}", kappa)));
    }
    if k_max < 1 {
        return Err(LpError::ParameterOutOfRange("k_max must be >= 1".into()));
    }

    let mut model = LpModel::new();
    let g = model.add_var("Gamma", 1.0);
    let a: Vec<usize> = (0..=k_max)
        .map(|k| model.add_var(&format!("a{}", k), 0.0))
        .collect();
    let b: Vec<usize> = (0..=k_max)
        .map(|k| model.add_var(&format!("b{}", k), 0.0))
        .collect();

    let pow = |k: usize| 0.5_f64.powi(k as i32) * (1.0 - gamma).powi((k as i32 - 1).max(0));

    for k in 0..=k_max {
        // Deterministic-round split: the offline tail plus the scaled
        // online share fits inside the certified primal increment.
        let mut terms: Vec<(usize, f64)> = (k..=k_max).map(|l| (a[l], 1.0)).collect();
        terms.push((b[k], kappa));
        model.add_constraint(&format!("det-split[{}]", k), &terms, Relation::Le, pow(k));
    }

    model.add_constraint("rand-split[0]", &[(a[0], 1.0), (b[0], 1.0)], Relation::Le, 0.5);
    for k in 1..=k_max {
        let rhs = 0.5_f64.powi(k as i32 + 1) * (1.0 - gamma).powi(k as i32 - 1) * (1.0 + gamma);
        model.add_constraint(
            &format!("rand-split[{}]", k),
            &[(a[k], 1.0), (b[k], 1.0)],
            Relation::Le,
            rhs,
        );
    }

    model.add_constraint("prepaid", &[(a[0], 1.0)], Relation::Ge, gamma / 2.0);

    let mut tail: Vec<(usize, f64)> = (0..=k_max).map(|l| (a[l], 1.0)).collect();
    tail.push((g, -1.0));
    model.add_constraint("alpha-tail", &tail, Relation::Ge, 0.0);

    for k in 0..=k_max {
        let mut terms: Vec<(usize, f64)> = (0..k).map(|l| (a[l], 1.0)).collect();
        terms.push((b[k], 2.0));
        terms.push((g, -1.0));
        model.add_constraint(&format!("feas-unchosen[{}]", k), &terms, Relation::Ge, 0.0);
    }

    for k in 0..=k_max {
        let mut terms: Vec<(usize, f64)> = (0..=k).map(|l| (a[l], 1.0)).collect();
        terms.push((b[k], kappa));
        terms.push((g, -1.0));
        model.add_constraint(&format!("feas-chosen[{}]", k), &terms, Relation::Ge, 0.0);
    }

    Ok(model)
}

/// Factor-revealing LP for the unweighted greedy: maximize `Gamma` over
/// dual increments `dalpha(0..=k_max)`, `dbeta(0..=k_max)` given the
/// improved-selector recurrence values.
pub fn build_unweighted_lp(g: &RecurrenceTable, k_max: usize) -> Result<LpModel, LpError> {
    if k_max < 1 {
        return Err(LpError::ParameterOutOfRange("k_max must be >= 1".into()));
    }
    if k_max + 1 > K_MAX {
        return Err(LpError::ParameterOutOfRange(format!(
            "recurrence table covers indices up to {}, need {}",
            K_MAX,
            k_max + 1
        )));
    }

    let mut model = LpModel::new();
    let gv = model.add_var("Gamma", 1.0);
    let da: Vec<usize> = (0..=k_max)
        .map(|k| model.add_var(&format!("dalpha{}", k), 0.0))
        .collect();
    let db: Vec<usize> = (0..=k_max)
        .map(|k| model.add_var(&format!("dbeta{}", k), 0.0))
        .collect();

    for k in 0..=k_max {
        let rhs = 0.5_f64.powi(k as i32) * g.value(k) - 0.5_f64.powi(k as i32 + 1) * g.value(k + 1);
        model.add_constraint(
            &format!("gain-split[{}]", k),
            &[(da[k], 1.0), (db[k], 1.0)],
            Relation::Le,
            rhs,
        );
    }

    for k in 0..=k_max {
        let mut terms: Vec<(usize, f64)> = (0..k).map(|l| (da[l], 1.0)).collect();
        terms.push((db[k], 2.0));
        terms.push((gv, -1.0));
        model.add_constraint(&format!("feas[{}]", k), &terms, Relation::Ge, 0.0);
    }

    let mut tail: Vec<(usize, f64)> = (0..=k_max).map(|l| (da[l], 1.0)).collect();
    tail.push((gv, -1.0));
    model.add_constraint("alpha-tail", &tail, Relation::Ge, 0.0);

    for k in 0..k_max {
        model.add_constraint(
            &format!("beta-monotone[{}]", k),
            &[(db[k], 1.0), (db[k + 1], -1.0)],
            Relation::Ge,
            0.0,
        );
    }

    Ok(model)
}

/// Outcome of checking a published table against its constraint families.
#[derive(Debug, Clone)]
pub struct TableVerifyReport {
    pub max_violation: f64,
    /// Rows violated beyond the tolerance.
    pub violations: Vec<(String, f64)>,
    pub pass: bool,
}

fn verify_against(model: &LpModel, x: &[f64], tolerance: f64) -> TableVerifyReport {
    let all = model.violations(x);
    let max_violation = all.iter().map(|&(_, v)| v).fold(0.0, f64::max);
    let violations: Vec<(String, f64)> = all.into_iter().filter(|&(_, v)| v > tolerance).collect();
    TableVerifyReport {
        max_violation,
        pass: violations.is_empty(),
        violations,
    }
}

/// Check a gain-sharing table against the edge-weighted LP at its own
/// `(gamma, kappa, k_max, Gamma)`.
pub fn verify_gain_table(table: &GainTable, tolerance: f64) -> Result<TableVerifyReport, LpError> {
    let model = build_edge_weighted_lp(table.gamma(), table.kappa(), table.k_max())?;
    let mut x = vec![table.big_gamma()];
    x.extend_from_slice(table.a_values());
    x.extend_from_slice(table.b_values());
    Ok(verify_against(&model, &x, tolerance))
}

/// Check an unweighted dual table against its LP given the recurrence
/// values in use.
pub fn verify_unweighted_table(
    table: &UnweightedDualTable,
    g: &RecurrenceTable,
    tolerance: f64,
) -> Result<TableVerifyReport, LpError> {
    let model = build_unweighted_lp(g, table.k_max())?;
    let mut x = vec![table.big_gamma()];
    x.extend_from_slice(table.dalpha_values());
    x.extend_from_slice(table.dbeta_values());
    Ok(verify_against(&model, &x, tolerance))
}

/// Optimal ratio per `kappa`, at fixed `gamma` and `k_max`.
pub fn kappa_sweep(
    gamma: f64,
    k_max: usize,
    kappas: &[f64],
) -> Result<Vec<(f64, f64)>, LpError> {
    let mut out = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let model = build_edge_weighted_lp(gamma, kappa, k_max)?;
        let sol = solve(&model)?;
        if sol.status != LpStatus::Optimal {
            return Err(LpError::Malformed(format!(
                "sweep LP at kappa {} ended {:?}",
                kappa, sol.status
            )));
        }
        out.push((kappa, sol.objective));
    }
    Ok(out)
}

/// CSV rendering of a gain-sharing table in the `k,a,b` layout.
pub fn gain_table_csv(table: &GainTable) -> String {
    let mut out = String::from("k,a,b\n");
    for k in 0..=table.k_max() {
        out.push_str(&format!("{},{},{}\n", k, table.a_values()[k], table.b_values()[k]));
    }
    out
}

/// CSV rendering of an unweighted dual table in the `k,g,dalpha,dbeta`
/// layout.
pub fn unweighted_table_csv(table: &UnweightedDualTable, g: &RecurrenceTable) -> String {
    let mut out = String::from("k,g,dalpha,dbeta\n");
    for k in 0..=table.k_max() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            k,
            g.value(k),
            table.dalpha_values()[k],
            table.dbeta_values()[k]
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primal_dual::{table_1a, table_1b};
    use crate::recurrences::optimal_p;
    use crate::unweighted::table_3;

    #[test]
    fn solves_a_one_variable_program() {
        let mut m = LpModel::new();
        let x = m.add_var("x", 1.0);
        m.add_constraint("cap", &[(x, 1.0)], Relation::Le, 3.0);
        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-9);
        assert!((sol.value("x").unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn reports_infeasible_and_unbounded() {
        let mut m = LpModel::new();
        let x = m.add_var("x", 1.0);
        m.add_constraint("hi", &[(x, 1.0)], Relation::Ge, 2.0);
        m.add_constraint("lo", &[(x, 1.0)], Relation::Le, 1.0);
        assert_eq!(solve(&m).unwrap().status, LpStatus::Infeasible);

        let mut m = LpModel::new();
        let x = m.add_var("x", 1.0);
        m.add_constraint("floor", &[(x, 1.0)], Relation::Ge, 1.0);
        assert_eq!(solve(&m).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn solves_a_degenerate_corner() {
        // Max x + y with x + y <= 1 twice, plus x <= 1: degenerate ties.
        let mut m = LpModel::new();
        let x = m.add_var("x", 1.0);
        let y = m.add_var("y", 1.0);
        m.add_constraint("s1", &[(x, 1.0), (y, 1.0)], Relation::Le, 1.0);
        m.add_constraint("s2", &[(x, 1.0), (y, 1.0)], Relation::Le, 1.0);
        m.add_constraint("s3", &[(x, 1.0)], Relation::Le, 1.0);
        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_rows_are_normalized() {
        // x >= 0.5 written as -x <= -0.5.
        let mut m = LpModel::new();
        let x = m.add_var("x", -1.0);
        m.add_constraint("lb", &[(x, -1.0)], Relation::Le, -0.5);
        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value("x").unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn edge_weighted_model_shape_and_rhs() {
        let m = build_edge_weighted_lp(1.0 / 16.0, 1.5, 8).unwrap();
        assert_eq!(m.n_vars(), 19); // Gamma + a(0..=8) + b(0..=8)
        assert_eq!(m.n_constraints(), 9 + 1 + 8 + 1 + 1 + 9 + 9);
        let det0 = m.constraints().iter().find(|c| c.label == "det-split[0]").unwrap();
        assert_eq!(det0.rhs, 1.0);
        let rs1 = m.constraints().iter().find(|c| c.label == "rand-split[1]").unwrap();
        assert!((rs1.rhs - 0.265625).abs() < 1e-12);

        let m = build_edge_weighted_lp(0.109927, 1.5, 8).unwrap();
        let pre = m.constraints().iter().find(|c| c.label == "prepaid").unwrap();
        assert!((pre.rhs - 0.0549635).abs() < 1e-9);
    }

    #[test]
    fn edge_weighted_optimum_matches_published_ratios() {
        let m = build_edge_weighted_lp(1.0 / 16.0, 1.5, 8).unwrap();
        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(
            (sol.objective - 0.50503484).abs() < 1e-6,
            "got {}",
            sol.objective
        );

        let gamma = (13.0 * 13.0_f64.sqrt() - 35.0) / 108.0;
        let sol = solve(&build_edge_weighted_lp(gamma, 1.5, 8).unwrap()).unwrap();
        assert!((sol.objective - 0.508672).abs() < 1e-5, "got {}", sol.objective);
    }

    #[test]
    fn unweighted_model_rhs_and_optimum() {
        let (p, _) = optimal_p();
        let g = RecurrenceTable::improved(p).unwrap();
        let m = build_unweighted_lp(&g, 8).unwrap();
        let gs0 = m.constraints().iter().find(|c| c.label == "gain-split[0]").unwrap();
        assert!((gs0.rhs - 0.5).abs() < 1e-12);
        let gs2 = m.constraints().iter().find(|c| c.label == "gain-split[2]").unwrap();
        assert!((gs2.rhs - 0.125).abs() < 1e-9);

        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 0.508986).abs() < 1e-5, "got {}", sol.objective);
        assert!(sol.objective >= 0.508);
    }

    #[test]
    fn built_in_tables_verify_and_perturbations_fail() {
        for table in [table_1a(), table_1b()] {
            let report = verify_gain_table(&table, 1e-6).unwrap();
            assert!(report.pass, "{}: {:?}", table.label(), report.violations);
        }
        let (p, _) = optimal_p();
        let g = RecurrenceTable::improved(p).unwrap();
        let report = verify_unweighted_table(&table_3(), &g, 1e-6).unwrap();
        assert!(report.pass, "{:?}", report.violations);

        // A bumped b(0) breaks the first randomized-round split.
        let t = table_1a();
        let mut b = t.b_values().to_vec();
        b[0] += 0.1;
        let bad = GainTable::new("1a+", t.gamma(), t.kappa(), t.big_gamma(), t.a_values().to_vec(), b)
            .unwrap();
        let report = verify_gain_table(&bad, 1e-6).unwrap();
        assert!(!report.pass);
        assert!(report
            .violations
            .iter()
            .any(|(label, v)| label == "rand-split[0]" && (*v - 0.1).abs() < 1e-9));
    }

    #[test]
    fn kappa_sweep_reproduces_boundary_behavior() {
        let sweep = kappa_sweep(1.0 / 16.0, 8, &[1.0, 1.0 + 15.0 / 16.0, 1.5]).unwrap();
        assert!((sweep[0].1 - 0.5).abs() < 1e-6, "kappa=1 gave {}", sweep[0].1);
        assert!((sweep[1].1 - 0.5026).abs() < 5e-4, "kappa=31/16 gave {}", sweep[1].1);
        assert!(sweep[2].1 > 0.505);
    }

    #[test]
    fn optimum_is_monotone_in_gamma() {
        let mut last = 0.0;
        for i in 1..=6 {
            let gamma = 0.02 * i as f64;
            let sol = solve(&build_edge_weighted_lp(gamma, 1.5, 8).unwrap()).unwrap();
            assert!(sol.objective >= last - 1e-9);
            last = sol.objective;
        }
    }

    #[test]
    fn k_max_tail_is_negligible() {
        let at = |k_max| {
            solve(&build_edge_weighted_lp(1.0 / 16.0, 1.5, k_max).unwrap())
                .unwrap()
                .objective
        };
        assert!(at(8) - at(12) <= 1e-4);
    }

    #[test]
    fn dump_lists_every_row() {
        let m = build_edge_weighted_lp(1.0 / 16.0, 1.5, 2).unwrap();
        let text = m.dump();
        assert!(text.contains("maximize"));
        assert!(text.contains("det-split[0]"));
        assert!(text.contains("feas-chosen[2]"));
    }
}
