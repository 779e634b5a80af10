//! Two-phase primal simplex on a sparse exact tableau.
//!
//! Pricing is Dantzig's rule (most negative reduced cost, lowest index on
//! ties). After a run of degenerate pivots it falls back to Bland's rule until
//! the objective moves again, which rules out cycling. Ratio-test ties go to
//! the smallest basic column index. Every choice is deterministic.

use std::time::Instant;

use super::guided;
use super::{LinearProgram, LpSolution, LpStatus, Relation, Sense, SolveStats};
use crate::rational::Rational;

const DEGENERATE_STREAK: usize = 30;

pub(super) type Row = Vec<(u32, Rational)>;

/// How a caller variable maps onto nonnegative tableau columns.
pub(super) enum VarMap {
    /// x = shift + col
    Shift(usize, Rational),
    /// x = shift - col
    Mirror(usize, Rational),
    /// x = pos - neg
    Split(usize, usize),
}

struct Tableau {
    rows: Vec<Row>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Columns at or past this index are artificial and may never enter.
    first_artificial: usize,
    d: Vec<Rational>,
    z: Rational,
    degenerate_streak: usize,
    stats: SolveStats,
}

fn entry(row: &Row, col: usize) -> Option<&Rational> {
    row.binary_search_by_key(&(col as u32), |(j, _)| *j)
        .ok()
        .map(|p| &row[p].1)
}

/// `a - f * b` on sorted sparse rows.
fn axpy(a: &Row, f: &Rational, b: &Row) -> Row {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut k) = (0, 0);
    while i < a.len() || k < b.len() {
        let ja = a.get(i).map_or(u32::MAX, |e| e.0);
        let jb = b.get(k).map_or(u32::MAX, |e| e.0);
        if ja < jb {
            out.push(a[i].clone());
            i += 1;
        } else if jb < ja {
            out.push((jb, -(f * &b[k].1)));
            k += 1;
        } else {
            let v = &a[i].1 - &(f * &b[k].1);
            if !v.is_zero() {
                out.push((ja, v));
            }
            i += 1;
            k += 1;
        }
    }
    out
}

#[derive(PartialEq)]
enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize, column: &[(usize, Rational)]) {
        let piv = entry(&self.rows[r], c).expect("pivot on zero").clone();
        if piv != Rational::one() {
            for (_, a) in self.rows[r].iter_mut() {
                *a = &*a / &piv;
            }
            self.rhs[r] = &self.rhs[r] / &piv;
        }
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for (i, f) in column {
            if *i == r {
                continue;
            }
            self.rows[*i] = axpy(&self.rows[*i], f, &prow);
            let t = f * &prhs;
            self.rhs[*i] -= t;
        }
        let dc = self.d[c].clone();
        if !dc.is_zero() {
            for (j, a) in &prow {
                let t = &dc * a;
                self.d[*j as usize] -= t;
            }
            self.z += &dc * &prhs;
        }
        self.rows[r] = prow;
        self.basis[r] = c;
    }

    fn column(&self, c: usize) -> Vec<(usize, Rational)> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, row)| entry(row, c).map(|a| (i, a.clone())))
            .collect()
    }

    fn choose_entering(&self) -> Option<usize> {
        let bland = self.degenerate_streak >= DEGENERATE_STREAK;
        let mut best: Option<usize> = None;
        for j in 0..self.first_artificial {
            if !self.d[j].is_negative() {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.map_or(true, |b| self.d[j] < self.d[b]) {
                best = Some(j);
            }
        }
        best
    }

    fn run(&mut self, phase1: bool) -> Outcome {
        loop {
            let Some(c) = self.choose_entering() else {
                return Outcome::Optimal;
            };
            let column = self.column(c);
            let mut leave: Option<(usize, Rational)> = None;
            for (i, a) in &column {
                if !a.is_positive() {
                    continue;
                }
                let theta = &self.rhs[*i] / a;
                let better = match &leave {
                    None => true,
                    Some((l, t)) => theta < *t || (theta == *t && self.basis[*i] < self.basis[*l]),
                };
                if better {
                    leave = Some((*i, theta));
                }
            }
            let Some((r, theta)) = leave else {
                return Outcome::Unbounded;
            };
            if self.degenerate_streak >= DEGENERATE_STREAK {
                self.stats.bland_pivots += 1;
            }
            if theta.is_zero() {
                self.degenerate_streak += 1;
                self.stats.degenerate_pivots += 1;
            } else {
                self.degenerate_streak = 0;
            }
            if phase1 {
                self.stats.phase1_pivots += 1;
            } else {
                self.stats.phase2_pivots += 1;
            }
            self.pivot(r, c, &column);
        }
    }
}

/// Which algorithm [`solve_with`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    /// Exact tableau for small programs, float-guided otherwise.
    Auto,
    /// Pivot exclusively in exact arithmetic.
    Exact,
    /// Find a basis in floating point, then certify it exactly; falls back to
    /// [`SolverMode::Exact`] whenever the certificate fails.
    Guided,
}

/// Below this many tableau entries the exact tableau is used directly.
const GUIDED_THRESHOLD: usize = 20_000;

/// `min c·x` subject to `A x = b`, `x ≥ 0`, `b ≥ 0`, with one logical
/// column per row forming the starting basis.
pub(super) struct StandardForm {
    pub maps: Vec<VarMap>,
    pub structural: usize,
    pub rows: Vec<Row>,
    pub rhs: Vec<Rational>,
    pub cost: Vec<Rational>,
    offset: Rational,
    flip: bool,
    /// Rows negated to make `b ≥ 0`.
    sign: Vec<bool>,
    /// The unit column of each row (slack or artificial).
    ident: Vec<usize>,
    pub first_artificial: usize,
    pub total: usize,
    pub initial_basis: Vec<usize>,
    /// Rows of the caller's program (the rest are upper-bound rows).
    lp_rows: usize,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> StandardForm {
        let n = lp.num_vars();
        let mut maps = Vec::with_capacity(n);
        let mut ncols = 0usize;
        // (column, upper bound on the column)
        let mut upper_rows: Vec<(usize, Rational)> = Vec::new();
        for b in &lp.bounds {
            match (&b.lower, &b.upper) {
                (Some(l), u) => {
                    maps.push(VarMap::Shift(ncols, l.clone()));
                    if let Some(u) = u {
                        upper_rows.push((ncols, u - l));
                    }
                    ncols += 1;
                }
                (None, Some(u)) => {
                    maps.push(VarMap::Mirror(ncols, u.clone()));
                    ncols += 1;
                }
                (None, None) => {
                    maps.push(VarMap::Split(ncols, ncols + 1));
                    ncols += 2;
                }
            }
        }
        let structural = ncols;

        let mut raw: Vec<(Vec<(usize, Rational)>, Relation, Rational)> = Vec::new();
        for c in &lp.constraints {
            let mut coeffs = Vec::with_capacity(c.coeffs.len() + 1);
            let mut rhs = c.rhs.clone();
            for (j, a) in &c.coeffs {
                match &maps[*j] {
                    VarMap::Shift(col, s) => {
                        coeffs.push((*col, a.clone()));
                        rhs -= a * s;
                    }
                    VarMap::Mirror(col, s) => {
                        coeffs.push((*col, -a));
                        rhs -= a * s;
                    }
                    VarMap::Split(p, q) => {
                        coeffs.push((*p, a.clone()));
                        coeffs.push((*q, -a));
                    }
                }
            }
            coeffs.sort_by_key(|(j, _)| *j);
            raw.push((coeffs, c.relation, rhs));
        }
        for (col, u) in upper_rows {
            raw.push((vec![(col, Rational::one())], Relation::Le, u));
        }

        let mut cost = vec![Rational::zero(); structural];
        let mut offset = Rational::zero();
        let flip = lp.sense == Sense::Max;
        for (j, c) in &lp.objective {
            let c = if flip { -c } else { c.clone() };
            match &maps[*j] {
                VarMap::Shift(col, s) => {
                    offset += &c * s;
                    cost[*col] += &c;
                }
                VarMap::Mirror(col, s) => {
                    offset += &c * s;
                    cost[*col] -= &c;
                }
                VarMap::Split(p, q) => {
                    cost[*p] += &c;
                    cost[*q] -= &c;
                }
            }
        }

        let m = raw.len();
        let mut sign = vec![false; m];
        let n_slack = raw.iter().filter(|(_, rel, _)| *rel != Relation::Eq).count();
        let first_artificial = structural + n_slack;
        let mut rows: Vec<Row> = Vec::with_capacity(m);
        let mut rhs_v = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut ident = Vec::with_capacity(m);
        let mut next_slack = structural;
        let mut next_art = first_artificial;
        for (r, (coeffs, rel, rhs)) in raw.into_iter().enumerate() {
            let neg = rhs.is_negative();
            sign[r] = neg;
            let rel = match (rel, neg) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (rel, _) => rel,
            };
            let mut row: Row = coeffs
                .into_iter()
                .map(|(j, a)| (j as u32, if neg { -a } else { a }))
                .collect();
            let rhs = if neg { -rhs } else { rhs };
            match rel {
                Relation::Le => {
                    row.push((next_slack as u32, Rational::one()));
                    basis.push(next_slack);
                    ident.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row.push((next_slack as u32, -Rational::one()));
                    row.push((next_art as u32, Rational::one()));
                    basis.push(next_art);
                    ident.push(next_art);
                    next_slack += 1;
                    next_art += 1;
                }
                Relation::Eq => {
                    row.push((next_art as u32, Rational::one()));
                    basis.push(next_art);
                    ident.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
            rhs_v.push(rhs);
        }
        StandardForm {
            maps,
            structural,
            rows,
            rhs: rhs_v,
            cost,
            offset,
            flip,
            sign,
            ident,
            first_artificial,
            total: next_art,
            initial_basis: basis,
            lp_rows: lp.num_rows(),
        }
    }

    /// Caller-facing solution from structural column values and the duals
    /// `y` of the standard-form rows.
    fn finish(&self, lp: &LinearProgram, value: &[Rational], y: &[Rational], stats: SolveStats) -> LpSolution {
        let assignment: Vec<Rational> = self
            .maps
            .iter()
            .map(|mp| match mp {
                VarMap::Shift(c, s) => s + &value[*c],
                VarMap::Mirror(c, s) => s - &value[*c],
                VarMap::Split(p, q) => &value[*p] - &value[*q],
            })
            .collect();
        let duals: Vec<Rational> = (0..self.lp_rows)
            .map(|r| {
                let y = if self.sign[r] { -&y[r] } else { y[r].clone() };
                if self.flip {
                    -y
                } else {
                    y
                }
            })
            .collect();
        let mut min_obj = self.offset.clone();
        for (c, x) in self.cost.iter().zip(value) {
            if !c.is_zero() && !x.is_zero() {
                min_obj += c * x;
            }
        }
        let objective_value = if self.flip { -min_obj } else { min_obj };
        debug_assert_eq!(objective_value, lp.evaluate(&assignment));
        LpSolution { status: LpStatus::Optimal, assignment, objective_value, duals, stats }
    }

    fn failed(status: LpStatus, stats: SolveStats) -> LpSolution {
        LpSolution { status, assignment: Vec::new(), objective_value: Rational::zero(), duals: Vec::new(), stats }
    }
}

/// Solve `lp` exactly. Infeasible and unbounded programs are reported through
/// the status; the solver itself never fails on a well-formed program.
pub fn solve(lp: &LinearProgram) -> LpSolution {
    solve_with(lp, SolverMode::Auto)
}

pub fn solve_with(lp: &LinearProgram, mode: SolverMode) -> LpSolution {
    let started = Instant::now();
    let sf = StandardForm::build(lp);
    let size = sf.rows.len() * sf.total;
    let guided = match mode {
        SolverMode::Exact => false,
        SolverMode::Guided => true,
        SolverMode::Auto => size > GUIDED_THRESHOLD,
    };
    let mut sol = None;
    if guided {
        if let Some((value, y, mut stats)) = guided::solve(&sf) {
            stats.millis = started.elapsed().as_millis();
            sol = Some(sf.finish(lp, &value, &y, stats));
        }
    }
    let mut sol = sol.unwrap_or_else(|| exact(lp, &sf));
    sol.stats.millis = started.elapsed().as_millis();
    sol
}

fn exact(lp: &LinearProgram, sf: &StandardForm) -> LpSolution {
    let m = sf.rows.len();
    let (structural, first_artificial, total) = (sf.structural, sf.first_artificial, sf.total);
    let mut t = Tableau {
        rows: sf.rows.clone(),
        rhs: sf.rhs.clone(),
        basis: sf.initial_basis.clone(),
        first_artificial,
        d: vec![Rational::zero(); total],
        z: Rational::zero(),
        degenerate_streak: 0,
        stats: SolveStats { rows: m, columns: total, ..SolveStats::default() },
    };

    // Phase 1: minimize the sum of artificials.
    if first_artificial < total {
        for i in 0..m {
            if t.basis[i] >= first_artificial {
                for (j, a) in &t.rows[i] {
                    if (*j as usize) < first_artificial {
                        t.d[*j as usize] -= a;
                    }
                }
                t.z += &t.rhs[i];
            }
        }
        t.run(true);
        if t.z.is_positive() {
            return StandardForm::failed(LpStatus::Infeasible, t.stats);
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if t.basis[r] < first_artificial {
                continue;
            }
            let target = t.rows[r]
                .iter()
                .find(|(j, _)| (*j as usize) < first_artificial)
                .map(|(j, _)| *j as usize);
            if let Some(c) = target {
                let column = t.column(c);
                t.pivot(r, c, &column);
                t.stats.phase1_pivots += 1;
            }
        }
    }

    // Phase 2.
    t.d = vec![Rational::zero(); total];
    t.d[..structural].clone_from_slice(&sf.cost);
    t.z = Rational::zero();
    for i in 0..m {
        let cb = if t.basis[i] < structural { sf.cost[t.basis[i]].clone() } else { Rational::zero() };
        if cb.is_zero() {
            continue;
        }
        for (j, a) in &t.rows[i] {
            let v = &cb * a;
            t.d[*j as usize] -= v;
        }
        t.z += &cb * &t.rhs[i];
    }
    t.degenerate_streak = 0;
    if t.run(false) == Outcome::Unbounded {
        return StandardForm::failed(LpStatus::Unbounded, t.stats);
    }

    let mut value = vec![Rational::zero(); structural];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < structural {
            value[b] = t.rhs[i].clone();
        }
    }
    let y: Vec<Rational> = (0..m).map(|r| -&t.d[sf.ident[r]]).collect();
    sf.finish(lp, &value, &y, t.stats)
}
