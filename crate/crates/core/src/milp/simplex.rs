//! Bounded-variable dual simplex on a compact (nonbasic-columns-only) dense
//! tableau.
//!
//! Every row `a x (rel) b` is turned into `a x + s = b` with a slack whose
//! bounds encode the relation, so the all-slack basis is always a valid start.
//! Structural variables are boxed (infinite bounds replaced by `±BOX`), which
//! makes any reduced-cost vector dual feasible by placing each nonbasic
//! variable at the matching bound. Bound changes between solves therefore
//! never require a primal phase: the engine relocates affected nonbasic
//! variables and re-runs the dual simplex from the current basis.

use super::model::Relation;

/// Stand-in for an infinite bound on a structural variable.
pub(crate) const BOX: f64 = 1e7;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    /// Optimal only thanks to an artificial `BOX` bound.
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct DualSimplex {
    m: usize,
    n: usize,
    /// Row-major `m x n` block of `B^-1 N`; slot `j` holds nonbasic `slot_var[j]`.
    tab: Vec<f64>,
    rhs: Vec<f64>,
    slot_var: Vec<usize>,
    row_var: Vec<usize>,
    state: Vec<State>,
    slot_of: Vec<usize>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    artificial: Vec<bool>,
    cost: Vec<f64>,
    d: Vec<f64>,
    x: Vec<f64>,
    dead: Vec<bool>,
    rows: Vec<LpRow>,
    pub iterations: u64,
    since_reinvert: u64,
}

impl DualSimplex {
    /// `lb`/`ub`/`cost` are per structural variable.
    pub fn new(n: usize, rows: Vec<LpRow>, cost: &[f64], lb: &[f64], ub: &[f64]) -> Self {
        let m = rows.len();
        let total = n + m;
        let mut s = DualSimplex {
            m,
            n,
            tab: vec![0.0; m * n],
            rhs: rows.iter().map(|r| r.rhs).collect(),
            slot_var: (0..n).collect(),
            row_var: (n..total).collect(),
            state: vec![State::Lower; total],
            slot_of: (0..total).map(|j| if j < n { j } else { usize::MAX }).collect(),
            lb: vec![0.0; total],
            ub: vec![0.0; total],
            artificial: vec![false; total],
            cost: vec![0.0; total],
            d: cost.to_vec(),
            x: vec![0.0; total],
            dead: vec![false; n],
            rows,
            iterations: 0,
            since_reinvert: 0,
        };
        for (i, row) in s.rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                s.tab[i * n + j] += a;
            }
            let (lo, hi) = match row.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            s.lb[n + i] = lo;
            s.ub[n + i] = hi;
            s.state[n + i] = State::Basic(i);
        }
        for j in 0..n {
            s.cost[j] = cost[j];
            s.store_bounds(j, lb[j], ub[j]);
            let v = s.preferred_value(j, cost[j]);
            s.x[j] = v;
            s.state[j] = if v == s.ub[j] && s.lb[j] != s.ub[j] { State::Upper } else { State::Lower };
        }
        s.recompute_basic_values();
        s
    }

    fn store_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        let lo_art = !lo.is_finite();
        let hi_art = !hi.is_finite();
        self.lb[j] = if lo_art { -BOX } else { lo };
        self.ub[j] = if hi_art { BOX } else { hi };
        self.artificial[j] = lo_art || hi_art;
    }

    /// Bound a nonbasic variable should sit on. Slacks keep an infinite
    /// side; a drifted reduced cost pointing there is left alone.
    fn preferred_value(&self, j: usize, dj: f64) -> f64 {
        if self.lb[j] == self.ub[j] || !self.ub[j].is_finite() {
            self.lb[j]
        } else if !self.lb[j].is_finite() {
            self.ub[j]
        } else if dj > DUAL_TOL {
            self.lb[j]
        } else if dj < -DUAL_TOL || self.state[j] == State::Upper {
            self.ub[j]
        } else {
            self.lb[j]
        }
    }

    /// Changes the bounds of structural `j`, keeping the basis dual feasible.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.store_bounds(j, lo, hi);
        if let State::Basic(_) = self.state[j] {
            return;
        }
        let slot = self.slot_of[j];
        let v = self.preferred_value(j, self.d[slot]);
        self.move_nonbasic(j, v);
    }

    fn move_nonbasic(&mut self, j: usize, v: f64) {
        let slot = self.slot_of[j];
        self.state[j] = if v == self.ub[j] && self.lb[j] != self.ub[j] { State::Upper } else { State::Lower };
        let delta = v - self.x[j];
        if delta != 0.0 {
            let nc = self.n;
            for i in 0..self.m {
                let t = self.tab[i * nc + slot];
                if t != 0.0 {
                    let b = self.row_var[i];
                    self.x[b] -= t * delta;
                }
            }
            self.x[j] = v;
        }
    }

    fn recompute_basic_values(&mut self) {
        let nc = self.n;
        for i in 0..self.m {
            let mut v = self.rhs[i];
            let row = &self.tab[i * nc..(i + 1) * nc];
            for (slot, &t) in row.iter().enumerate() {
                if t != 0.0 && !self.dead[slot] {
                    v -= t * self.x[self.slot_var[slot]];
                }
            }
            self.x[self.row_var[i]] = v;
        }
    }

    fn recompute_reduced_costs(&mut self) {
        let nc = self.n;
        for slot in 0..nc {
            self.d[slot] = self.cost[self.slot_var[slot]];
        }
        for i in 0..self.m {
            let cb = self.cost[self.row_var[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.tab[i * nc..(i + 1) * nc];
            for (slot, &t) in row.iter().enumerate() {
                if t != 0.0 {
                    self.d[slot] -= cb * t;
                }
            }
        }
    }

    /// Runs the dual simplex until primal feasibility (optimality),
    /// infeasibility, or `max_iter` pivots.
    pub fn solve(&mut self, max_iter: u64) -> LpOutcome {
        let mut cleanups = 0;
        let start = self.iterations;
        loop {
            match self.dual_loop(start + max_iter) {
                LpOutcome::Optimal => {}
                other => return other,
            }
            // Refresh values and duals from the tableau to shed drift, then
            // confirm; a second pass is rarely needed.
            self.recompute_basic_values();
            self.recompute_reduced_costs();
            let mut moved = false;
            for slot in 0..self.n {
                if self.dead[slot] {
                    continue;
                }
                let j = self.slot_var[slot];
                if self.lb[j] == self.ub[j] {
                    continue;
                }
                let dj = self.d[slot];
                let v = self.preferred_value(j, dj);
                if v != self.x[j] {
                    self.move_nonbasic(j, v);
                    moved = true;
                }
            }
            let feasible = (0..self.m).all(|i| {
                let b = self.row_var[i];
                self.x[b] >= self.lb[b] - PRIMAL_TOL && self.x[b] <= self.ub[b] + PRIMAL_TOL
            });
            if (!moved && feasible) || cleanups >= 3 {
                break;
            }
            cleanups += 1;
        }
        let unbounded = (0..self.n).any(|j| match self.state[j] {
            State::Basic(_) => self.x[j].abs() >= BOX * 0.5,
            _ => self.artificial[j] && self.x[j].abs() >= BOX * 0.5 && self.d[self.slot_of[j]].abs() > DUAL_TOL,
        });
        if unbounded {
            return LpOutcome::Unbounded;
        }
        LpOutcome::Optimal
    }

    fn dual_loop(&mut self, limit: u64) -> LpOutcome {
        let nc = self.n;
        loop {
            if self.iterations >= limit {
                return LpOutcome::IterationLimit;
            }
            if self.since_reinvert > (4 * self.m as u64).max(800) {
                self.reinvert();
            }
            // leaving row: largest bound violation
            let mut r = usize::MAX;
            let mut worst = PRIMAL_TOL;
            let mut to_lower = true;
            for i in 0..self.m {
                let b = self.row_var[i];
                let v = self.x[b];
                if v < self.lb[b] - worst {
                    worst = self.lb[b] - v;
                    r = i;
                    to_lower = true;
                } else if v > self.ub[b] + worst {
                    worst = v - self.ub[b];
                    r = i;
                    to_lower = false;
                }
            }
            if r == usize::MAX {
                return LpOutcome::Optimal;
            }
            let sign = if to_lower { 1.0 } else { -1.0 };
            let row = &self.tab[r * nc..(r + 1) * nc];

            // Harris two-pass ratio test
            let mut theta = f64::INFINITY;
            for slot in 0..nc {
                let alpha = sign * row[slot];
                if alpha.abs() <= PIVOT_TOL || self.dead[slot] {
                    continue;
                }
                let j = self.slot_var[slot];
                if self.lb[j] == self.ub[j] {
                    continue;
                }
                let val = match self.state[j] {
                    State::Lower if alpha < 0.0 => self.d[slot],
                    State::Upper if alpha > 0.0 => -self.d[slot],
                    _ => continue,
                };
                let t = (val.max(0.0) + DUAL_TOL) / alpha.abs();
                if t < theta {
                    theta = t;
                }
            }
            if theta == f64::INFINITY {
                // Only trust an infeasibility proof read off a fresh tableau.
                if self.since_reinvert > 0 {
                    self.reinvert();
                    continue;
                }
                return LpOutcome::Infeasible;
            }
            let mut q = usize::MAX;
            let mut best_alpha = 0.0;
            for slot in 0..nc {
                let alpha = sign * row[slot];
                if alpha.abs() <= PIVOT_TOL || self.dead[slot] {
                    continue;
                }
                let j = self.slot_var[slot];
                if self.lb[j] == self.ub[j] {
                    continue;
                }
                let val = match self.state[j] {
                    State::Lower if alpha < 0.0 => self.d[slot],
                    State::Upper if alpha > 0.0 => -self.d[slot],
                    _ => continue,
                };
                if val.max(0.0) / alpha.abs() <= theta && alpha.abs() > best_alpha {
                    best_alpha = alpha.abs();
                    q = slot;
                }
            }
            let leaving = self.row_var[r];
            let target = if to_lower { self.lb[leaving] } else { self.ub[leaving] };
            let p = self.tab[r * nc + q];
            let entering = self.slot_var[q];
            let delta = (self.x[leaving] - target) / p;
            for i in 0..self.m {
                let t = self.tab[i * nc + q];
                if t != 0.0 {
                    let b = self.row_var[i];
                    self.x[b] -= t * delta;
                }
            }
            self.x[entering] += delta;
            self.x[leaving] = target;
            self.pivot(r, q);
            self.state[leaving] = if to_lower { State::Lower } else { State::Upper };
            if self.lb[leaving] == self.ub[leaving] {
                self.state[leaving] = State::Lower;
                if leaving >= self.n {
                    self.dead[q] = true;
                }
            }
            self.iterations += 1;
            self.since_reinvert += 1;
        }
    }

    /// Exchanges basic row `r` with nonbasic slot `q` in the tableau, the
    /// right-hand side and the reduced costs. Variable values are untouched.
    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.n;
        let p = self.tab[r * nc + q];
        let mut row_nz: Vec<(usize, f64)> = Vec::new();
        for slot in 0..nc {
            if slot == q || self.dead[slot] {
                continue;
            }
            let v = self.tab[r * nc + slot];
            if v.abs() > DROP_TOL {
                row_nz.push((slot, v));
            }
        }
        let rhs_r = self.rhs[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let tiq = self.tab[i * nc + q];
            if tiq == 0.0 {
                continue;
            }
            let f = tiq / p;
            let base = i * nc;
            for &(slot, v) in &row_nz {
                let cell = &mut self.tab[base + slot];
                *cell -= f * v;
                if cell.abs() < DROP_TOL {
                    *cell = 0.0;
                }
            }
            self.tab[base + q] = -f;
            self.rhs[i] -= f * rhs_r;
        }
        let base = r * nc;
        for slot in 0..nc {
            if slot != q {
                self.tab[base + slot] /= p;
            }
        }
        self.tab[base + q] = 1.0 / p;
        self.rhs[r] = rhs_r / p;
        let g = self.d[q] / p;
        if g != 0.0 {
            for &(slot, v) in &row_nz {
                self.d[slot] -= g * v;
            }
        }
        self.d[q] = -g;

        let entering = self.slot_var[q];
        let leaving = self.row_var[r];
        self.row_var[r] = entering;
        self.slot_var[q] = leaving;
        self.state[entering] = State::Basic(r);
        // callers place the leaving variable on its bound
        self.state[leaving] = State::Lower;
        self.slot_of[entering] = usize::MAX;
        self.slot_of[leaving] = q;
    }

    /// Rebuilds the tableau from the original rows for the current basis.
    fn reinvert(&mut self) {
        self.since_reinvert = 0;
        let n = self.n;
        let m = self.m;
        let target_basic: Vec<usize> = self.row_var.clone();
        let saved_state = self.state.clone();
        let saved_x = self.x.clone();

        self.tab.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                self.tab[i * n + j] += a;
            }
            self.rhs[i] = row.rhs;
        }
        self.slot_var = (0..n).collect();
        self.row_var = (n..n + m).collect();
        for j in 0..n + m {
            self.slot_of[j] = if j < n { j } else { usize::MAX };
            self.state[j] = if j < n { State::Lower } else { State::Basic(j - n) };
        }
        self.dead.iter_mut().for_each(|d| *d = false);

        let mut in_target = vec![false; n + m];
        for &b in &target_basic {
            in_target[b] = true;
        }
        for &e in target_basic.iter().filter(|&&b| b < n) {
            let q = self.slot_of[e];
            let mut best = (usize::MAX, 0.0);
            for i in 0..m {
                let b = self.row_var[i];
                if b >= n && !in_target[b] {
                    let t = self.tab[i * n + q].abs();
                    if t > best.1 {
                        best = (i, t);
                    }
                }
            }
            if best.0 == usize::MAX || best.1 < 1e-11 {
                // basis became numerically singular; keep what we have
                continue;
            }
            self.pivot(best.0, q);
        }
        for j in 0..n + m {
            if let State::Basic(_) = self.state[j] {
                continue;
            }
            self.state[j] = match saved_state[j] {
                State::Upper => State::Upper,
                _ => State::Lower,
            };
            self.x[j] = if self.state[j] == State::Upper {
                self.ub[j]
            } else if j < n && !matches!(saved_state[j], State::Basic(_)) {
                saved_x[j]
            } else {
                self.lb[j]
            };
            if j >= n && self.lb[j] == self.ub[j] {
                self.dead[self.slot_of[j]] = true;
            }
        }
        self.recompute_basic_values();
        self.recompute_reduced_costs();
        // Nonbasic variables must sit on the bound their reduced cost asks for.
        for slot in 0..n {
            if self.dead[slot] {
                continue;
            }
            let j = self.slot_var[slot];
            let v = self.preferred_value(j, self.d[slot]);
            if v != self.x[j] {
                self.move_nonbasic(j, v);
            }
        }
    }

    /// Values of the structural variables.
    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn objective(&self) -> f64 {
        self.cost[..self.n].iter().zip(&self.x[..self.n]).map(|(c, x)| c * x).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(terms: &[(usize, f64)], relation: Relation, rhs: f64) -> LpRow {
        LpRow { terms: terms.to_vec(), relation, rhs }
    }

    #[test]
    fn simple_lower_bound_row() {
        // min x s.t. x >= 3
        let mut s = DualSimplex::new(1, vec![row(&[(0, 1.0)], Relation::Ge, 3.0)], &[1.0], &[0.0], &[f64::INFINITY]);
        assert_eq!(s.solve(100), LpOutcome::Optimal);
        assert!((s.objective() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_var_lp() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6 -> (1.6, 1.2), obj 2.8
        let rows = vec![
            row(&[(0, 1.0), (1, 2.0)], Relation::Le, 4.0),
            row(&[(0, 3.0), (1, 1.0)], Relation::Le, 6.0),
        ];
        let mut s = DualSimplex::new(2, rows, &[-1.0, -1.0], &[0.0, 0.0], &[f64::INFINITY, f64::INFINITY]);
        assert_eq!(s.solve(100), LpOutcome::Optimal);
        assert!((s.objective() + 2.8).abs() < 1e-9, "{}", s.objective());
        assert!((s.values()[0] - 1.6).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let rows = vec![row(&[(0, 1.0)], Relation::Ge, 2.0), row(&[(0, 1.0)], Relation::Le, 1.0)];
        let mut s = DualSimplex::new(1, rows, &[1.0], &[f64::NEG_INFINITY], &[f64::INFINITY]);
        assert_eq!(s.solve(100), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let rows = vec![row(&[(0, 1.0), (1, -1.0)], Relation::Le, 1.0)];
        let mut s = DualSimplex::new(2, rows, &[-1.0, 0.0], &[0.0, 0.0], &[f64::INFINITY, f64::INFINITY]);
        assert_eq!(s.solve(100), LpOutcome::Unbounded);
    }

    #[test]
    fn warm_start_after_bound_change() {
        // min -x - y, x + y <= 1.5, x,y in [0,1]
        let rows = vec![row(&[(0, 1.0), (1, 1.0)], Relation::Le, 1.5)];
        let mut s = DualSimplex::new(2, rows, &[-1.0, -1.0], &[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(s.solve(100), LpOutcome::Optimal);
        assert!((s.objective() + 1.5).abs() < 1e-12);
        s.set_bounds(0, 0.0, 0.0);
        assert_eq!(s.solve(100), LpOutcome::Optimal);
        assert!((s.objective() + 1.0).abs() < 1e-12);
        s.set_bounds(0, 0.0, 1.0);
        s.set_bounds(1, 0.0, 0.0);
        assert_eq!(s.solve(100), LpOutcome::Optimal);
        assert!((s.objective() + 1.0).abs() < 1e-12);
        s.set_bounds(1, 1.0, 1.0);
        assert_eq!(s.solve(100), LpOutcome::Optimal);
        assert!((s.objective() + 1.5).abs() < 1e-12);
    }

    #[test]
    fn long_warm_sequence_matches_fresh_solves() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 24;
        let mut rows = Vec::new();
        for i in 0..18 {
            let mut terms = Vec::new();
            for j in 0..n {
                if rng.gen_bool(0.4) {
                    terms.push((j, rng.gen_range(-3.0..3.0)));
                }
            }
            let relation = [Relation::Le, Relation::Ge, Relation::Eq][i % 3];
            rows.push(row(&terms, relation, rng.gen_range(-2.0..2.0)));
        }
        let cost: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut lb = vec![-4.0; n];
        let mut ub = vec![4.0; n];
        let mut warm = DualSimplex::new(n, rows.clone(), &cost, &lb, &ub);
        for _ in 0..400 {
            let j = rng.gen_range(0..n);
            let lo = rng.gen_range(-4..=4) as f64;
            let hi = (lo + rng.gen_range(0..=3) as f64).min(4.0);
            lb[j] = lo;
            ub[j] = hi;
            warm.set_bounds(j, lo, hi);
            let a = warm.solve(100_000);
            let mut fresh = DualSimplex::new(n, rows.clone(), &cost, &lb, &ub);
            let b = fresh.solve(100_000);
            assert_eq!(a, b);
            if a == LpOutcome::Optimal {
                assert!((warm.objective() - fresh.objective()).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn equality_rows_and_reinvert_agree() {
        // transportation-like problem exercised through many pivots
        let n = 12;
        let mut rows = Vec::new();
        for i in 0..3 {
            rows.push(row(&(0..4).map(|j| (i * 4 + j, 1.0)).collect::<Vec<_>>(), Relation::Eq, 5.0));
        }
        for j in 0..4 {
            rows.push(row(&(0..3).map(|i| (i * 4 + j, 1.0)).collect::<Vec<_>>(), Relation::Le, 4.5));
        }
        let cost: Vec<f64> = (0..n).map(|k| ((k * 7) % 5) as f64 + 1.0).collect();
        let mut s = DualSimplex::new(n, rows, &cost, &vec![0.0; n], &vec![f64::INFINITY; n]);
        assert_eq!(s.solve(1000), LpOutcome::Optimal);
        let before = s.objective();
        s.reinvert();
        assert_eq!(s.solve(1000), LpOutcome::Optimal);
        assert!((s.objective() - before).abs() < 1e-9);
    }

    #[test]
    fn basis_bookkeeping_survives_reinvert() {
        let n = 12;
        let mut rows = Vec::new();
        for i in 0..3 {
            rows.push(row(&(0..4).map(|j| (i * 4 + j, 1.0)).collect::<Vec<_>>(), Relation::Ge, 3.0 + i as f64));
        }
        for j in 0..4 {
            rows.push(row(&(0..3).map(|i| (i * 4 + j, 1.0)).collect::<Vec<_>>(), Relation::Le, 4.5));
        }
        let cost: Vec<f64> = (0..n).map(|k| ((k * 7) % 5) as f64 + 1.0).collect();
        let mut s = DualSimplex::new(n, rows, &cost, &vec![0.0; n], &vec![f64::INFINITY; n]);
        assert_eq!(s.solve(1000), LpOutcome::Optimal);
        s.reinvert();
        for slot in 0..n {
            assert!(!matches!(s.state[s.slot_var[slot]], State::Basic(_)), "slot {slot}");
        }
        for (i, &b) in s.row_var.iter().enumerate() {
            assert_eq!(s.state[b], State::Basic(i));
        }
    }
}
