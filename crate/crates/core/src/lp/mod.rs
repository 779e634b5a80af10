//! Exact linear programs over [`Rational`].

mod guided;
mod simplex;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

pub use simplex::{solve, solve_with, SolverMode};

/// Default ceiling on structural columns; override with `PROPA_MAX_LP_COLS`.
pub const DEFAULT_MAX_LP_COLS: usize = 6000;

pub fn max_lp_cols() -> usize {
    std::env::var("PROPA_MAX_LP_COLS")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_LP_COLS)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("assignment has {got} entries, LP has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("variable index {0} out of range")]
    BadVariable(usize),
    #[error("LP too large: {cols} columns, {rows} rows (ceiling {limit} columns)")]
    TooLarge { cols: usize, rows: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    /// Sparse coefficients, sorted by variable index, no zeros.
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
    pub name: String,
}

impl Constraint {
    pub fn lhs(&self, x: &[Rational]) -> Rational {
        self.coeffs.iter().map(|(j, a)| a * &x[*j]).sum()
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        let v = self.lhs(x);
        match self.relation {
            Relation::Le => v <= self.rhs,
            Relation::Eq => v == self.rhs,
            Relation::Ge => v >= self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bound {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Bound {
    pub fn nonneg() -> Self {
        Bound { lower: Some(Rational::zero()), upper: None }
    }

    pub fn free() -> Self {
        Bound { lower: None, upper: None }
    }

    pub fn fixed(v: Rational) -> Self {
        Bound { lower: Some(v.clone()), upper: Some(v) }
    }

    pub fn holds(&self, v: &Rational) -> bool {
        self.lower.as_ref().map_or(true, |l| v >= l) && self.upper.as_ref().map_or(true, |u| v <= u)
    }
}

/// `opt objective·x` subject to sparse rows and per-variable bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<(usize, Rational)>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bound>,
    pub names: Vec<String>,
}

fn normalize(mut coeffs: Vec<(usize, Rational)>) -> Vec<(usize, Rational)> {
    coeffs.sort_by_key(|(j, _)| *j);
    let mut out: Vec<(usize, Rational)> = Vec::with_capacity(coeffs.len());
    for (j, a) in coeffs {
        match out.last_mut() {
            Some((k, b)) if *k == j => *b += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|(_, a)| !a.is_zero());
    out
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            constraints: Vec::new(),
            bounds: Vec::new(),
            names: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, bound: Bound) -> usize {
        self.bounds.push(bound);
        self.names.push(name.into());
        self.bounds.len() - 1
    }

    /// Duplicate indices are merged and zero coefficients dropped.
    pub fn set_objective(&mut self, coeffs: Vec<(usize, Rational)>) {
        self.objective = normalize(coeffs);
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) -> usize {
        self.constraints.push(Constraint {
            coeffs: normalize(coeffs),
            relation,
            rhs,
            name: name.into(),
        });
        self.constraints.len() - 1
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let rows = self.constraints.iter().flat_map(|c| c.coeffs.iter());
        for (j, _) in self.objective.iter().chain(rows) {
            if *j >= n {
                return Err(LpError::BadVariable(*j));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[Rational]) -> Rational {
        self.objective.iter().map(|(j, c)| c * &x[*j]).sum()
    }

    /// Human-readable names of every violated row or bound; empty iff feasible.
    pub fn violations(&self, x: &[Rational]) -> Result<Vec<String>, LpError> {
        if x.len() != self.num_vars() {
            return Err(LpError::LengthMismatch { expected: self.num_vars(), got: x.len() });
        }
        self.validate()?;
        let mut out = Vec::new();
        for (j, b) in self.bounds.iter().enumerate() {
            if !b.holds(&x[j]) {
                out.push(format!("bound {} = {}", self.names[j], x[j]));
            }
        }
        for c in &self.constraints {
            if !c.holds(x) {
                out.push(format!(
                    "row {}: {} {} {}",
                    c.name,
                    c.lhs(x),
                    c.relation.symbol(),
                    c.rhs
                ));
            }
        }
        Ok(out)
    }

    /// Text dump in CPLEX-LP layout with exact `p/q` coefficients.
    pub fn to_lp_text(&self) -> String {
        let mut s = String::new();
        s.push_str(match self.sense {
            Sense::Min => "Minimize\n",
            Sense::Max => "Maximize\n",
        });
        let _ = writeln!(s, " obj: {}", self.linear_text(&self.objective));
        s.push_str("Subject To\n");
        for c in &self.constraints {
            let _ = writeln!(
                s,
                " {}: {} {} {}",
                c.name,
                self.linear_text(&c.coeffs),
                c.relation.symbol(),
                c.rhs
            );
        }
        s.push_str("Bounds\n");
        for (j, b) in self.bounds.iter().enumerate() {
            let name = &self.names[j];
            let _ = match (&b.lower, &b.upper) {
                (None, None) => writeln!(s, " {} free", name),
                (Some(l), None) => writeln!(s, " {} >= {}", name, l),
                (None, Some(u)) => writeln!(s, " -inf <= {} <= {}", name, u),
                (Some(l), Some(u)) => writeln!(s, " {} <= {} <= {}", l, name, u),
            };
        }
        s.push_str("End\n");
        s
    }

    fn linear_text(&self, coeffs: &[(usize, Rational)]) -> String {
        if coeffs.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (idx, (j, a)) in coeffs.iter().enumerate() {
            let (sign, mag) = if a.is_negative() { ("-", a.abs()) } else { ("+", a.clone()) };
            if idx == 0 && sign == "+" {
                let _ = write!(s, "{} {}", mag, self.names[*j]);
            } else {
                let _ = write!(s, "{}{} {} {}", if idx == 0 { "" } else { " " }, sign, mag, self.names[*j]);
            }
        }
        s
    }
}

/// True iff every row and bound holds exactly.
pub fn check_feasible(lp: &LinearProgram, x: &[Rational]) -> Result<bool, LpError> {
    Ok(lp.violations(x)?.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub rows: usize,
    pub columns: usize,
    pub phase1_pivots: usize,
    pub phase2_pivots: usize,
    pub degenerate_pivots: usize,
    pub bland_pivots: usize,
    /// Basis found in floating point and certified exactly.
    pub guided: bool,
    /// Exact pivots taken after the floating-point phase.
    pub repair_pivots: usize,
    pub reinversions: usize,
    pub millis: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values in the caller's variable space (empty unless optimal).
    pub assignment: Vec<Rational>,
    pub objective_value: Rational,
    /// Shadow price of each constraint: d(objective)/d(rhs). Empty unless optimal.
    pub duals: Vec<Rational>,
    pub stats: SolveStats,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}
