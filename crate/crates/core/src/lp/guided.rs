//! Basis search in floating point, certified in exact arithmetic.
//!
//! A dense `f64` tableau runs the same two-phase method as the exact solver.
//! Its final basis `B` is then checked exactly: `B x_B = b` and `Bᵀ y = c_B`
//! are solved over the rationals, and the basis is accepted only if `x_B ≥ 0`,
//! basic artificials are zero and every reduced cost is nonnegative. Rounding
//! can therefore only cost time, never correctness.

use std::collections::{BTreeMap, BTreeSet};

use super::simplex::StandardForm;
use super::SolveStats;
use crate::rational::Rational;

/// Largest dense tableau attempted (entries).
const DENSE_LIMIT: usize = 40_000_000;
const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-11;
const DEGENERATE_STREAK: usize = 50;
const PERTURB: f64 = 1e-7;
const HARRIS_SLACK: f64 = 1e-9;

struct Dense {
    w: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    /// The unperturbed right-hand side, carried through the same pivots.
    rhs0: Vec<f64>,
    basis: Vec<usize>,
    first_artificial: usize,
    d: Vec<f64>,
    /// Cost of every column in the current phase.
    cost: Vec<f64>,
    streak: usize,
    stats: SolveStats,
}

impl Dense {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.w + j]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.w;
        let p = self.at(r, c);
        let mut prow = Vec::new();
        for j in 0..w {
            let v = self.a[r * w + j] / p;
            let v = if v.abs() < ZERO_TOL { 0.0 } else { v };
            self.a[r * w + j] = v;
            if v != 0.0 {
                prow.push((j, v));
            }
        }
        self.a[r * w + c] = 1.0;
        self.rhs[r] /= p;
        self.rhs0[r] /= p;
        let prhs = self.rhs[r];
        let prhs0 = self.rhs0[r];
        for i in 0..self.rhs.len() {
            if i == r {
                continue;
            }
            let f = self.a[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * w..(i + 1) * w];
            for &(j, v) in &prow {
                let x = row[j] - f * v;
                row[j] = if x.abs() < ZERO_TOL { 0.0 } else { x };
            }
            row[c] = 0.0;
            let x = self.rhs[i] - f * prhs;
            self.rhs[i] = if x.abs() < ZERO_TOL { 0.0 } else { x };
            let x = self.rhs0[i] - f * prhs0;
            self.rhs0[i] = if x.abs() < ZERO_TOL { 0.0 } else { x };
        }
        let f = self.d[c];
        if f != 0.0 {
            for &(j, v) in &prow {
                self.d[j] -= f * v;
            }
            self.d[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Recomputes `d = c − c_B B⁻¹A` from the tableau, discarding drift.
    fn refresh(&mut self) {
        let w = self.w;
        self.d.clone_from(&self.cost);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b];
            if cb == 0.0 {
                continue;
            }
            for (dj, a) in self.d.iter_mut().zip(&self.a[i * w..(i + 1) * w]) {
                *dj -= cb * a;
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn entering(&self) -> Option<usize> {
        let bland = self.streak >= DEGENERATE_STREAK;
        let mut best: Option<usize> = None;
        for j in 0..self.first_artificial {
            if self.d[j] >= -COST_TOL {
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

    /// Rebuilds the tableau for the current basis from the original rows,
    /// discarding accumulated rounding. `false` if the basis looks singular.
    fn reinvert(&mut self, sf: &StandardForm) -> bool {
        let (m, w) = (self.rhs.len(), self.w);
        let (a, rhs, rhs0) = initial_tableau(sf);
        self.a = a;
        self.rhs = rhs;
        self.rhs0 = rhs0;
        let cols = std::mem::take(&mut self.basis);
        self.basis = vec![usize::MAX; m];
        let mut free = vec![true; m];
        for c in cols {
            let mut best: Option<(usize, f64)> = None;
            for (i, &f) in free.iter().enumerate() {
                let v = self.a[i * w + c].abs();
                if f && v > PIVOT_TOL && best.map_or(true, |(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
            let Some((r, _)) = best else {
                return false;
            };
            free[r] = false;
            self.pivot(r, c);
        }
        self.stats.reinversions += 1;
        true
    }

    /// `Some(true)` at optimality, `Some(false)` if unbounded, `None` when
    /// the iteration budget runs out.
    fn run(&mut self, sf: &StandardForm, phase1: bool, budget: usize) -> Option<bool> {
        self.refresh();
        let mut fresh = true;
        let mut reinverted = false;
        for _ in 0..budget {
            let Some(c) = self.entering() else {
                if fresh {
                    return Some(true);
                }
                self.refresh();
                fresh = true;
                continue;
            };
            // Harris: bound the step with a small slack, then take the
            // largest pivot among rows within that bound
            let mut bound = f64::INFINITY;
            for i in 0..self.rhs.len() {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    bound = bound.min((self.rhs[i].max(0.0) + HARRIS_SLACK) / a);
                }
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rhs.len() {
                let a = self.at(i, c);
                if a <= PIVOT_TOL {
                    continue;
                }
                let theta = self.rhs[i].max(0.0) / a;
                if theta > bound {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((l, _)) => {
                        let b = self.at(l, c);
                        a > b || (a == b && self.basis[i] < self.basis[l])
                    }
                };
                if better {
                    leave = Some((i, theta));
                }
            }
            let Some((r, theta)) = leave else {
                if fresh {
                    // a ray in a drifted tableau may be spurious
                    if reinverted || !self.reinvert(sf) {
                        return Some(false);
                    }
                    reinverted = true;
                    self.refresh();
                    continue;
                }
                self.refresh();
                fresh = true;
                continue;
            };
            fresh = false;
            reinverted = false;
            if self.streak >= DEGENERATE_STREAK {
                self.stats.bland_pivots += 1;
            }
            if theta <= 1e-12 {
                self.streak += 1;
                self.stats.degenerate_pivots += 1;
            } else {
                self.streak = 0;
            }
            if phase1 {
                self.stats.phase1_pivots += 1;
            } else {
                self.stats.phase2_pivots += 1;
            }
            self.pivot(r, c);
        }
        None
    }
}

impl Dense {
    /// Dual simplex on the unperturbed right-hand side, starting from a
    /// dual-feasible basis. `false` if it stalls or detects infeasibility.
    fn dual_cleanup(&mut self, budget: usize) -> bool {
        self.rhs.clone_from(&self.rhs0);
        for _ in 0..budget {
            let mut leave: Option<usize> = None;
            for i in 0..self.rhs.len() {
                if self.rhs[i] < -PIVOT_TOL && leave.map_or(true, |l| self.rhs[i] < self.rhs[l]) {
                    leave = Some(i);
                }
            }
            let Some(r) = leave else {
                return true;
            };
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.first_artificial {
                let a = self.at(r, j);
                if a >= -PIVOT_TOL {
                    continue;
                }
                let ratio = self.d[j].max(0.0) / -a;
                if enter.map_or(true, |(_, t)| ratio < t - 1e-12) {
                    enter = Some((j, ratio));
                }
            }
            let Some((c, _)) = enter else {
                return false;
            };
            self.stats.phase2_pivots += 1;
            self.pivot(r, c);
            self.rhs0.clone_from(&self.rhs);
        }
        false
    }
}

/// Dense rows, perturbed right-hand side and the unperturbed one. The tiny
/// deterministic perturbation breaks ties; certification uses the original.
fn initial_tableau(sf: &StandardForm) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let w = sf.total;
    let mut a = vec![0.0; sf.rows.len() * w];
    for (i, row) in sf.rows.iter().enumerate() {
        for (j, v) in row {
            a[i * w + *j as usize] = v.to_f64();
        }
    }
    let rhs = sf
        .rhs
        .iter()
        .enumerate()
        .map(|(i, b)| b.to_f64() + PERTURB * (1.0 + ((i as f64) * 0.618_033_988_75).fract()))
        .collect();
    (a, rhs, sf.rhs.iter().map(Rational::to_f64).collect())
}

fn float_basis(sf: &StandardForm) -> Option<(Vec<usize>, SolveStats)> {
    let m = sf.rows.len();
    let w = sf.total;
    if m.checked_mul(w)? > DENSE_LIMIT {
        return None;
    }
    let (a, rhs, rhs0) = initial_tableau(sf);
    let mut t = Dense {
        w,
        a,
        rhs,
        rhs0,
        basis: sf.initial_basis.clone(),
        first_artificial: sf.first_artificial,
        d: vec![0.0; w],
        cost: vec![0.0; w],
        streak: 0,
        stats: SolveStats { rows: m, columns: w, guided: true, ..SolveStats::default() },
    };
    let budget = 20 * (m + w) + 1000;
    if sf.first_artificial < w {
        for j in sf.first_artificial..w {
            t.cost[j] = 1.0;
        }
        t.run(sf, true, budget)?;
        let scale = 1.0 + t.rhs.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        let residual: f64 = (0..m).filter(|&i| t.basis[i] >= sf.first_artificial).map(|i| t.rhs[i]).sum();
        if residual > 1e-5 * scale {
            return None;
        }
        for r in 0..m {
            if t.basis[r] < sf.first_artificial {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..sf.first_artificial {
                let v = t.at(r, j).abs();
                if v > 1e-7 && best.map_or(true, |(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            if let Some((c, _)) = best {
                t.pivot(r, c);
                t.stats.phase1_pivots += 1;
            }
        }
    }
    t.cost = vec![0.0; w];
    for (j, c) in sf.cost.iter().enumerate() {
        t.cost[j] = c.to_f64();
    }
    t.streak = 0;
    if !t.run(sf, false, budget)? {
        return None;
    }
    if !t.dual_cleanup(budget) {
        return None;
    }
    Some((t.basis, t.stats))
}

/// Sparse exact LU: the elimination steps `v[i] -= f·v[p]` and the reduced
/// pivot rows, with pivots chosen by a column-count Markowitz rule.
pub(super) struct Lu {
    n: usize,
    /// `(pivot row, pivot column)` in elimination order.
    order: Vec<(usize, usize)>,
    /// Row operations `(target, source, factor)` in application order.
    ops: Vec<(usize, usize, Rational)>,
    urows: Vec<BTreeMap<usize, Rational>>,
}

impl Lu {
    /// Factors the square matrix whose row `i` has nonzero `(column, value)`
    /// entries `rows[i]`; `None` if it is singular.
    pub(super) fn factor(rows: Vec<Vec<(usize, Rational)>>) -> Option<Lu> {
        let n = rows.len();
        let mut rows: Vec<BTreeMap<usize, Rational>> =
            rows.into_iter().map(|r| r.into_iter().filter(|(_, v)| !v.is_zero()).collect()).collect();
        let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (i, r) in rows.iter().enumerate() {
            for &j in r.keys() {
                if j >= n {
                    return None;
                }
                col_rows[j].insert(i);
            }
        }
        let mut col_done = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut ops = Vec::new();
        for _ in 0..n {
            let mut pick: Option<usize> = None;
            for j in 0..n {
                if !col_done[j] && pick.map_or(true, |p| col_rows[j].len() < col_rows[p].len()) {
                    pick = Some(j);
                }
            }
            let c = pick?;
            let p = *col_rows[c].iter().min_by_key(|&&i| rows[i].len())?;
            let prow = std::mem::take(&mut rows[p]);
            for &j in prow.keys() {
                col_rows[j].remove(&p);
            }
            let piv = prow[&c].clone();
            let others: Vec<usize> = col_rows[c].iter().copied().collect();
            for i in others {
                let f = &rows[i][&c] / &piv;
                for (j, v) in &prow {
                    let slot = rows[i].entry(*j).or_default();
                    *slot -= &f * v;
                    if slot.is_zero() {
                        rows[i].remove(j);
                        col_rows[*j].remove(&i);
                    } else {
                        col_rows[*j].insert(i);
                    }
                }
                ops.push((i, p, f));
            }
            col_done[c] = true;
            rows[p] = prow;
            order.push((p, c));
        }
        Some(Lu { n, order, ops, urows: rows })
    }

    /// `x` with `M x = b`.
    pub(super) fn solve(&self, mut b: Vec<Rational>) -> Vec<Rational> {
        for (i, p, f) in &self.ops {
            if !b[*p].is_zero() {
                let t = f * &b[*p];
                b[*i] -= t;
            }
        }
        let mut x = vec![Rational::zero(); self.n];
        for &(p, c) in self.order.iter().rev() {
            let mut acc = std::mem::take(&mut b[p]);
            for (j, v) in &self.urows[p] {
                if *j != c && !x[*j].is_zero() {
                    acc -= v * &x[*j];
                }
            }
            x[c] = acc / &self.urows[p][&c];
        }
        x
    }

    /// `y` with `Mᵀ y = c`.
    pub(super) fn solve_t(&self, mut c: Vec<Rational>) -> Vec<Rational> {
        let mut z = vec![Rational::zero(); self.n];
        for &(p, col) in &self.order {
            let zp = std::mem::take(&mut c[col]) / &self.urows[p][&col];
            if !zp.is_zero() {
                for (j, v) in &self.urows[p] {
                    if *j != col {
                        c[*j] -= v * &zp;
                    }
                }
            }
            z[p] = zp;
        }
        for (i, p, f) in self.ops.iter().rev() {
            if !z[*i].is_zero() {
                let t = f * &z[*i];
                z[*p] -= t;
            }
        }
        z
    }
}

/// Solves the square system `M x = rhs`; `None` if `M` is singular.
#[cfg(test)]
fn sparse_solve(rows: Vec<Vec<(usize, Rational)>>, rhs: Vec<Rational>) -> Option<Vec<Rational>> {
    Lu::factor(rows).map(|lu| lu.solve(rhs))
}

/// Exact revised simplex started from `basis`: primal steps while the basis
/// is primal feasible, dual steps while it is only dual feasible. Returns
/// structural values and row duals at a certified optimum, or `None` when the
/// start is unusable (then the caller solves from scratch).
fn repair(sf: &StandardForm, mut basis: Vec<usize>, stats: &mut SolveStats) -> Option<(Vec<Rational>, Vec<Rational>)> {
    let m = sf.rows.len();
    let fa = sf.first_artificial;
    let mut cols: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); sf.total];
    for (i, row) in sf.rows.iter().enumerate() {
        for (j, a) in row {
            cols[*j as usize].push((i, a.clone()));
        }
    }
    let cost = |j: usize| if j < sf.structural { sf.cost[j].clone() } else { Rational::zero() };
    let mut streak = 0usize;
    for _ in 0..20 * m + 100 {
        let mut pos = vec![usize::MAX; sf.total];
        for (k, &b) in basis.iter().enumerate() {
            if pos[b] != usize::MAX {
                return None;
            }
            pos[b] = k;
        }
        let mut b_rows = vec![Vec::new(); m];
        for (k, &b) in basis.iter().enumerate() {
            for (i, a) in &cols[b] {
                b_rows[*i].push((k, a.clone()));
            }
        }
        let lu = Lu::factor(b_rows)?;
        let x = lu.solve(sf.rhs.clone());
        if basis.iter().zip(&x).any(|(&b, v)| b >= fa && !v.is_zero()) {
            return None;
        }
        let y = lu.solve_t(basis.iter().map(|&b| cost(b)).collect());
        let reduced = |j: usize| -> Rational {
            let mut d = cost(j);
            for (i, a) in &cols[j] {
                if !y[*i].is_zero() {
                    d -= &y[*i] * a;
                }
            }
            d
        };
        let d: Vec<Option<Rational>> = (0..fa).map(|j| (pos[j] == usize::MAX).then(|| reduced(j))).collect();
        let leaving_row = (0..m).filter(|&k| x[k].is_negative()).min_by(|&a, &b| x[a].cmp(&x[b]).then(basis[a].cmp(&basis[b])));
        match leaving_row {
            None => {
                let bland = streak >= 30;
                let mut enter: Option<usize> = None;
                for (j, dj) in d.iter().enumerate() {
                    let Some(dj) = dj else { continue };
                    if !dj.is_negative() {
                        continue;
                    }
                    if bland {
                        enter = Some(j);
                        break;
                    }
                    if enter.map_or(true, |e| dj < d[e].as_ref().unwrap()) {
                        enter = Some(j);
                    }
                }
                let Some(c) = enter else {
                    let mut value = vec![Rational::zero(); sf.structural];
                    for (k, &b) in basis.iter().enumerate() {
                        if b < sf.structural {
                            value[b] = x[k].clone();
                        }
                    }
                    return Some((value, y));
                };
                let mut dense = vec![Rational::zero(); m];
                for (i, a) in &cols[c] {
                    dense[*i] = a.clone();
                }
                let col = lu.solve(dense);
                let mut leave: Option<(usize, Rational)> = None;
                for k in 0..m {
                    if !col[k].is_positive() {
                        continue;
                    }
                    let theta = &x[k] / &col[k];
                    let better = match &leave {
                        None => true,
                        Some((l, t)) => theta < *t || (theta == *t && basis[k] < basis[*l]),
                    };
                    if better {
                        leave = Some((k, theta));
                    }
                }
                let (r, theta) = leave?;
                if theta.is_zero() {
                    streak += 1;
                    stats.degenerate_pivots += 1;
                } else {
                    streak = 0;
                }
                stats.repair_pivots += 1;
                basis[r] = c;
            }
            Some(r) => {
                if d.iter().flatten().any(Rational::is_negative) {
                    return None;
                }
                let mut unit = vec![Rational::zero(); m];
                unit[r] = Rational::one();
                let rho = lu.solve_t(unit);
                let mut enter: Option<(usize, Rational)> = None;
                for (j, dj) in d.iter().enumerate() {
                    let Some(dj) = dj else { continue };
                    let mut alpha = Rational::zero();
                    for (i, a) in &cols[j] {
                        if !rho[*i].is_zero() {
                            alpha += &rho[*i] * a;
                        }
                    }
                    if !alpha.is_negative() {
                        continue;
                    }
                    let ratio = dj / &(-alpha);
                    if enter.as_ref().map_or(true, |(_, t)| ratio < *t) {
                        enter = Some((j, ratio));
                    }
                }
                let (c, _) = enter?;
                stats.repair_pivots += 1;
                basis[r] = c;
            }
        }
    }
    None
}

pub(super) fn solve(sf: &StandardForm) -> Option<(Vec<Rational>, Vec<Rational>, SolveStats)> {
    let (basis, mut stats) = float_basis(sf)?;
    let (value, y) = repair(sf, basis, &mut stats)?;
    Some((value, y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn sparse_solve_small_systems() {
        // x + y = 3, x - y = 1
        let rows = vec![vec![(0, r("1")), (1, r("1"))], vec![(0, r("1")), (1, r("-1"))]];
        assert_eq!(sparse_solve(rows, vec![r("3"), r("1")]).unwrap(), vec![r("2"), r("1")]);
        let singular = vec![vec![(0, r("1")), (1, r("2"))], vec![(0, r("2")), (1, r("4"))]];
        assert!(sparse_solve(singular, vec![r("1"), r("2")]).is_none());
        let thirds = vec![vec![(0, r("3"))], vec![(0, r("1")), (1, r("7"))]];
        assert_eq!(sparse_solve(thirds, vec![r("1"), r("0")]).unwrap(), vec![r("1/3"), r("-1/21")]);
    }
}
