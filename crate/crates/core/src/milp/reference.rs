//! Exhaustive reference solver for small models. Every integer assignment
//! and every SOS-2 segment is enumerated; subtrees are discarded only when
//! bound propagation proves them infeasible, never by objective bounds. Each
//! leaf LP goes through a textbook two-phase primal simplex that shares no
//! code with the branch-and-bound engine.

use std::time::Instant;

use super::model::{MilpModel, Relation};
use super::{MilpBackend, MilpError, Solution, SolveStats, SolveStatus, SolverConfig};

#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceEnumeration;

impl MilpBackend for ReferenceEnumeration {
    fn name(&self) -> &'static str {
        "reference-enumeration"
    }

    fn solve(&self, model: &MilpModel, cfg: &SolverConfig) -> Result<Solution, MilpError> {
        solve_reference(model, cfg)
    }
}

const TOL: f64 = 1e-9;
const PROPAGATION_PASSES: usize = 30;

pub fn solve_reference(model: &MilpModel, cfg: &SolverConfig) -> Result<Solution, MilpError> {
    if model.is_empty() {
        return Err(MilpError::EmptyModel);
    }
    let count = model.free_discrete_count();
    if count > cfg.reference_ceiling {
        return Err(MilpError::CeilingExceeded { count, ceiling: cfg.reference_ceiling });
    }
    let start = Instant::now();
    let mut e = Enumerator {
        model,
        discrete: (0..model.num_vars()).filter(|&j| model.variables()[j].kind.is_discrete()).collect(),
        best: None,
        unbounded: false,
        limit: false,
        stats: SolveStats::default(),
        feas_tol: cfg.feas_tol,
    };
    let lo: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
    let hi: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
    e.descend(0, lo, hi);
    let mut stats = e.stats.clone();
    stats.wall_time = start.elapsed();
    if e.unbounded {
        return Ok(Solution::without_point(SolveStatus::Unbounded, stats, None));
    }
    Ok(match e.best {
        Some((objective, values)) => Solution {
            status: if e.limit { SolveStatus::Limit } else { SolveStatus::Optimal },
            objective,
            values,
            stats,
            diagnostics: None,
        },
        None if e.limit => Solution::without_point(SolveStatus::Limit, stats, Some("leaf LP iteration cap".into())),
        None => Solution::without_point(SolveStatus::Infeasible, stats, None),
    })
}

struct Enumerator<'a> {
    model: &'a MilpModel,
    discrete: Vec<usize>,
    best: Option<(f64, Vec<f64>)>,
    unbounded: bool,
    limit: bool,
    stats: SolveStats,
    feas_tol: f64,
}

impl Enumerator<'_> {
    /// Decision `depth` indexes the discrete variables first, then the SOS-2 groups.
    fn descend(&mut self, depth: usize, mut lo: Vec<f64>, mut hi: Vec<f64>) {
        self.stats.nodes += 1;
        if self.unbounded || !propagate(self.model, &mut lo, &mut hi) {
            return;
        }
        let nd = self.discrete.len();
        if depth < nd {
            let j = self.discrete[depth];
            let (a, b) = (lo[j].ceil() as i64, hi[j].floor() as i64);
            for v in a..=b {
                let (mut l2, mut h2) = (lo.clone(), hi.clone());
                l2[j] = v as f64;
                h2[j] = v as f64;
                self.descend(depth + 1, l2, h2);
            }
        } else if depth < nd + self.model.sos2_groups().len() {
            let members = self.model.sos2_groups()[depth - nd].members.clone();
            for seg in 0..members.len() - 1 {
                let (mut l2, mut h2) = (lo.clone(), hi.clone());
                let mut ok = true;
                for (k, m) in members.iter().enumerate() {
                    if k != seg && k != seg + 1 {
                        let j = m.index();
                        if l2[j] > TOL || h2[j] < -TOL {
                            ok = false;
                        }
                        l2[j] = 0.0;
                        h2[j] = 0.0;
                    }
                }
                if ok {
                    self.descend(depth + 1, l2, h2);
                }
            }
        } else {
            self.leaf(lo, hi);
        }
    }

    fn leaf(&mut self, lo: Vec<f64>, hi: Vec<f64>) {
        self.stats.subproblems += 1;
        let Some(leaf) = LeafLp::build(self.model, lo, hi) else { return };
        match leaf.solve(&mut self.stats.lp_iterations) {
            Primal::Optimal(values) => {
                let obj = self.model.objective_value(&values);
                if self.model.constraints().iter().any(|c| c.violation(&values) > self.feas_tol) {
                    // numerically marginal leaf; the audit would reject it anyway
                    return;
                }
                if self.best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    self.best = Some((obj, values));
                }
            }
            Primal::Infeasible => {}
            Primal::Unbounded => self.unbounded = true,
            Primal::IterationLimit => self.limit = true,
        }
    }
}

/// Activity-bound propagation over every row until a fixpoint. Returns
/// false when some row cannot be satisfied within the bounds.
fn propagate(model: &MilpModel, lo: &mut [f64], hi: &mut [f64]) -> bool {
    let vars = model.variables();
    for _ in 0..PROPAGATION_PASSES {
        let mut changed = false;
        for c in model.constraints() {
            let (mut min_fin, mut min_inf, mut max_fin, mut max_inf) = (0.0, 0usize, 0.0, 0usize);
            for &(v, a) in &c.terms {
                let j = v.index();
                let (l, h) = if a > 0.0 { (lo[j], hi[j]) } else { (hi[j], lo[j]) };
                if l.is_finite() { min_fin += a * l } else { min_inf += 1 }
                if h.is_finite() { max_fin += a * h } else { max_inf += 1 }
            }
            let slack = 1e-7 * (1.0 + c.rhs.abs());
            let need_upper = matches!(c.relation, Relation::Le | Relation::Eq);
            let need_lower = matches!(c.relation, Relation::Ge | Relation::Eq);
            if need_upper && min_inf == 0 && min_fin > c.rhs + slack {
                return false;
            }
            if need_lower && max_inf == 0 && max_fin < c.rhs - slack {
                return false;
            }
            for &(v, a) in &c.terms {
                let j = v.index();
                let integral = vars[j].kind.is_discrete();
                let (l, h) = if a > 0.0 { (lo[j], hi[j]) } else { (hi[j], lo[j]) };
                // a*x <= rhs - (min activity of the other terms)
                if need_upper {
                    let rest = match (min_inf, l.is_finite()) {
                        (0, _) => Some(min_fin - a * l),
                        (1, false) => Some(min_fin),
                        _ => None,
                    };
                    if let Some(rest) = rest {
                        let bound = (c.rhs - rest) / a;
                        changed |= tighten(a > 0.0, bound, integral, &mut lo[j], &mut hi[j]);
                    }
                }
                if need_lower {
                    let rest = match (max_inf, h.is_finite()) {
                        (0, _) => Some(max_fin - a * h),
                        (1, false) => Some(max_fin),
                        _ => None,
                    };
                    if let Some(rest) = rest {
                        let bound = (c.rhs - rest) / a;
                        changed |= tighten(a < 0.0, bound, integral, &mut lo[j], &mut hi[j]);
                    }
                }
                if lo[j] > hi[j] + 1e-7 * (1.0 + lo[j].abs()) {
                    return false;
                }
            }
        }
        if !changed {
            break;
        }
    }
    true
}

/// Applies `x <= bound` when `upper`, else `x >= bound`.
fn tighten(upper: bool, bound: f64, integral: bool, lo: &mut f64, hi: &mut f64) -> bool {
    if !bound.is_finite() {
        return false;
    }
    let min_step = 1e-6 * (1.0 + bound.abs());
    if upper {
        let b = if integral { (bound + 1e-6).floor() } else { bound };
        if b < *hi - min_step || (integral && b < *hi) {
            *hi = b;
            return true;
        }
    } else {
        let b = if integral { (bound - 1e-6).ceil() } else { bound };
        if b > *lo + min_step || (integral && b > *lo) {
            *lo = b;
            return true;
        }
    }
    false
}

enum Primal {
    Optimal(Vec<f64>),
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// How a model column maps onto nonnegative standard-form columns.
#[derive(Clone, Copy)]
enum ColMap {
    Fixed(f64),
    /// x = base + s * y[col]
    Shift { col: usize, base: f64, sign: f64 },
    /// x = y[pos] - y[pos + 1]
    Split { col: usize },
}

struct LeafLp {
    map: Vec<ColMap>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl LeafLp {
    /// Substitutes fixed columns, turns singleton rows into bounds and
    /// emits `min c y, A y = b, y >= 0` with b >= 0. None if presolve
    /// already proves infeasibility.
    fn build(model: &MilpModel, mut lo: Vec<f64>, mut hi: Vec<f64>) -> Option<Self> {
        let n = model.num_vars();
        let rows = model.constraints();
        let mut live = vec![true; rows.len()];
        loop {
            let mut changed = false;
            for (i, r) in rows.iter().enumerate() {
                if !live[i] {
                    continue;
                }
                let mut rhs = r.rhs;
                let mut free = Vec::new();
                for &(v, a) in &r.terms {
                    let j = v.index();
                    if hi[j] - lo[j] <= TOL {
                        rhs -= a * lo[j];
                    } else {
                        free.push((j, a));
                    }
                }
                let slack = 1e-7 * (1.0 + r.rhs.abs());
                match free.as_slice() {
                    [] => {
                        let ok = match r.relation {
                            Relation::Le => rhs >= -slack,
                            Relation::Ge => rhs <= slack,
                            Relation::Eq => rhs.abs() <= slack,
                        };
                        if !ok {
                            return None;
                        }
                        live[i] = false;
                    }
                    [(j, a)] => {
                        let v = rhs / a;
                        let (j, a) = (*j, *a);
                        let caps_upper = matches!((r.relation, a > 0.0), (Relation::Le, true) | (Relation::Ge, false));
                        match r.relation {
                            Relation::Eq => {
                                if v < lo[j] - slack || v > hi[j] + slack {
                                    return None;
                                }
                                lo[j] = v;
                                hi[j] = v;
                            }
                            _ if caps_upper => hi[j] = hi[j].min(v),
                            _ => lo[j] = lo[j].max(v),
                        }
                        if lo[j] > hi[j] + slack {
                            return None;
                        }
                        if hi[j] < lo[j] {
                            hi[j] = lo[j];
                        }
                        live[i] = false;
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }

        let mut map = Vec::with_capacity(n);
        let mut ncols = 0usize;
        let mut upper_rows: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            let m = if hi[j] - lo[j] <= TOL {
                ColMap::Fixed(lo[j])
            } else if lo[j].is_finite() {
                if hi[j].is_finite() {
                    upper_rows.push((ncols, hi[j] - lo[j]));
                }
                ColMap::Shift { col: ncols, base: lo[j], sign: 1.0 }
            } else if hi[j].is_finite() {
                ColMap::Shift { col: ncols, base: hi[j], sign: -1.0 }
            } else {
                ncols += 1;
                ColMap::Split { col: ncols - 1 }
            };
            if !matches!(m, ColMap::Fixed(_)) {
                ncols += 1;
            }
            map.push(m);
        }

        let mut c = vec![0.0; ncols];
        for (j, &cj) in model.objective().iter().enumerate() {
            match map[j] {
                ColMap::Fixed(_) => {}
                ColMap::Shift { col, sign, .. } => c[col] += sign * cj,
                ColMap::Split { col } => {
                    c[col] += cj;
                    c[col + 1] -= cj;
                }
            }
        }

        // structural rows, then one slack column per inequality
        let mut dense: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            if !live[i] {
                continue;
            }
            let mut row = vec![0.0; ncols];
            let mut rhs = r.rhs;
            for &(v, a) in &r.terms {
                match map[v.index()] {
                    ColMap::Fixed(x) => rhs -= a * x,
                    ColMap::Shift { col, base, sign } => {
                        rhs -= a * base;
                        row[col] += sign * a;
                    }
                    ColMap::Split { col } => {
                        row[col] += a;
                        row[col + 1] -= a;
                    }
                }
            }
            dense.push((row, r.relation, rhs));
        }
        for (col, width) in upper_rows {
            let mut row = vec![0.0; ncols];
            row[col] = 1.0;
            dense.push((row, Relation::Le, width));
        }
        let slacks = dense.iter().filter(|d| d.1 != Relation::Eq).count();
        let total = ncols + slacks;
        let mut a = Vec::with_capacity(dense.len());
        let mut b = Vec::with_capacity(dense.len());
        let mut next_slack = ncols;
        for (mut row, rel, mut rhs) in dense {
            row.resize(total, 0.0);
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                }
                Relation::Eq => {}
            }
            if rhs < 0.0 {
                row.iter_mut().for_each(|x| *x = -*x);
                rhs = -rhs;
            }
            a.push(row);
            b.push(rhs);
        }
        c.resize(total, 0.0);
        Some(LeafLp { map, a, b, c })
    }

    fn recover(&self, y: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .map(|m| match *m {
                ColMap::Fixed(x) => x,
                ColMap::Shift { col, base, sign } => base + sign * y[col],
                ColMap::Split { col } => y[col] - y[col + 1],
            })
            .collect()
    }

    fn solve(&self, iterations: &mut u64) -> Primal {
        let m = self.a.len();
        let n = self.c.len();
        if m == 0 {
            if self.c.iter().any(|&cj| cj < -TOL) {
                return Primal::Unbounded;
            }
            return Primal::Optimal(self.recover(&vec![0.0; n]));
        }
        let mut t = Tableau::new(&self.a, &self.b);
        // phase 1: minimise the artificial sum
        let mut cost = vec![0.0; n + m];
        cost[n..].iter_mut().for_each(|x| *x = 1.0);
        let allowed: Vec<bool> = (0..n + m).map(|_| true).collect();
        match t.optimise(&cost, &allowed, iterations) {
            Step::Optimal => {}
            Step::Unbounded => return Primal::Infeasible,
            Step::Limit => return Primal::IterationLimit,
        }
        let infeas: f64 = (0..m).filter(|&i| t.basis[i] >= n).map(|i| t.rhs(i)).sum();
        if infeas > 1e-7 * (1.0 + self.b.iter().fold(0.0f64, |s, x| s.max(x.abs()))) {
            return Primal::Infeasible;
        }
        for i in 0..m {
            if t.basis[i] >= n {
                if let Some(j) = (0..n).find(|&j| t.at(i, j).abs() > 1e-9) {
                    t.pivot(i, j);
                }
            }
        }
        let mut cost2 = self.c.clone();
        cost2.resize(n + m, 0.0);
        let allowed2: Vec<bool> = (0..n + m).map(|j| j < n).collect();
        match t.optimise(&cost2, &allowed2, iterations) {
            Step::Optimal => {}
            Step::Unbounded => return Primal::Unbounded,
            Step::Limit => return Primal::IterationLimit,
        }
        let mut y = vec![0.0; n];
        for i in 0..m {
            if t.basis[i] < n {
                y[t.basis[i]] = t.rhs(i).max(0.0);
            }
        }
        Primal::Optimal(self.recover(&y))
    }
}

enum Step {
    Optimal,
    Unbounded,
    Limit,
}

/// Dense tableau `[A | I | b]` with an artificial identity block.
struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

const LEAF_ITERATION_CAP: u64 = 200_000;

impl Tableau {
    fn new(a: &[Vec<f64>], b: &[f64]) -> Self {
        let m = a.len();
        let n = a[0].len();
        let width = n + m + 1;
        let mut data = vec![0.0; m * width];
        for i in 0..m {
            data[i * width..i * width + n].copy_from_slice(&a[i]);
            data[i * width + n + i] = 1.0;
            data[i * width + width - 1] = b[i];
        }
        Tableau { rows: m, width, data, basis: (n..n + m).collect() }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let p = self.at(r, q);
        for k in 0..w {
            self.data[r * w + k] /= p;
        }
        let prow: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * w + q];
            if f != 0.0 {
                for k in 0..w {
                    self.data[i * w + k] -= f * prow[k];
                }
                self.data[i * w + q] = 0.0;
            }
        }
        self.basis[r] = q;
    }

    /// Primal simplex with Bland's rule, so it terminates without cycling.
    fn optimise(&mut self, cost: &[f64], allowed: &[bool], iterations: &mut u64) -> Step {
        let cols = self.width - 1;
        let mut done = 0u64;
        loop {
            let mut entering = None;
            for j in 0..cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let d = cost[j] - (0..self.rows).map(|i| cost[self.basis[i]] * self.at(i, j)).sum::<f64>();
                if d < -TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(q) = entering else { return Step::Optimal };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, q);
                if a > TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((l, best)) => ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[i] < self.basis[l]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return Step::Unbounded };
            self.pivot(r, q);
            *iterations += 1;
            done += 1;
            if done > LEAF_ITERATION_CAP {
                return Step::Limit;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::VarId;

    #[test]
    fn knapsack_matches_hand_optimum() {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut m = MilpModel::new("k");
        let v: Vec<VarId> = (0..3).map(|k| m.integer(format!("x{k}"), 0.0, 5.0).unwrap()).collect();
        m.add_constraint("r1", &[(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)], Relation::Le, 5.0).unwrap();
        m.add_constraint("r2", &[(v[0], 4.0), (v[1], 1.0), (v[2], 2.0)], Relation::Le, 11.0).unwrap();
        m.add_constraint("r3", &[(v[0], 3.0), (v[1], 4.0), (v[2], 2.0)], Relation::Le, 8.0).unwrap();
        m.set_objective(&[(v[0], -5.0), (v[1], -4.0), (v[2], -3.0)]).unwrap();
        let s = solve_reference(&m, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective + 13.0).abs() < 1e-9, "{}", s.objective);
        assert!(s.stats.subproblems > 0);
    }

    #[test]
    fn ceiling_enforced() {
        let mut m = MilpModel::new("big");
        for k in 0..4 {
            m.binary(format!("b{k}")).unwrap();
        }
        let cfg = SolverConfig { reference_ceiling: 3, ..Default::default() };
        assert_eq!(solve_reference(&m, &cfg).unwrap_err(), MilpError::CeilingExceeded { count: 4, ceiling: 3 });
    }

    #[test]
    fn free_and_negative_columns() {
        // min x - y  s.t. x + y = 1, x >= -2 (free otherwise), y <= 4
        let mut m = MilpModel::new("f");
        let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let y = m.continuous("y", f64::NEG_INFINITY, 4.0).unwrap();
        m.add_constraint("s", &[(x, 1.0), (y, 1.0)], Relation::Eq, 1.0).unwrap();
        m.add_constraint("lx", &[(x, 1.0), (y, 0.5)], Relation::Ge, -1.5).unwrap();
        m.set_objective(&[(x, 1.0), (y, -1.0)]).unwrap();
        let s = solve_reference(&m, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        // y = 4 gives x = -3 but lx: -3 + 2 = -1 >= -1.5 ok; objective -7
        assert!((s.objective + 7.0).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn unbounded_and_infeasible() {
        let mut m = MilpModel::new("u");
        let x = m.continuous("x", 0.0, f64::INFINITY).unwrap();
        let y = m.continuous("y", 0.0, f64::INFINITY).unwrap();
        m.add_constraint("r", &[(x, 1.0), (y, -1.0)], Relation::Le, 1.0).unwrap();
        m.set_objective(&[(x, -1.0)]).unwrap();
        assert_eq!(solve_reference(&m, &SolverConfig::default()).unwrap().status, SolveStatus::Unbounded);

        let mut m = MilpModel::new("i");
        let x = m.continuous("x", 0.0, 10.0).unwrap();
        let y = m.continuous("y", 0.0, 10.0).unwrap();
        m.add_constraint("a", &[(x, 1.0), (y, 1.0)], Relation::Ge, 5.0).unwrap();
        m.add_constraint("b", &[(x, 1.0), (y, 2.0)], Relation::Le, 4.0).unwrap();
        assert_eq!(solve_reference(&m, &SolverConfig::default()).unwrap().status, SolveStatus::Infeasible);
    }
}
