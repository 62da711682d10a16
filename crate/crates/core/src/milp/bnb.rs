//! Best-bound branch-and-bound with depth-first dives, native SOS-2
//! branching and a lock-style rounding heuristic.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use super::model::{MilpModel, Relation};
use super::simplex::{DualSimplex, LpOutcome, LpRow};
use super::{MilpBackend, MilpError, Solution, SolveStats, SolveStatus, SolverConfig};

/// The bundled exact MILP backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct BranchAndBound;

impl MilpBackend for BranchAndBound {
    fn name(&self) -> &'static str {
        "branch-and-bound"
    }

    fn solve(&self, model: &MilpModel, cfg: &SolverConfig) -> Result<Solution, MilpError> {
        if model.is_empty() {
            return Err(MilpError::EmptyModel);
        }
        Ok(Search::new(model, cfg).run())
    }
}

type BoundChange = (usize, f64, f64);

struct Node {
    bound: f64,
    seq: u64,
    changes: Vec<BoundChange>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap on "best": smaller bound first, then older node
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

enum Branch {
    Var { var: usize, value: f64 },
    Sos { group: usize, split: usize, left_mass: f64, right_mass: f64 },
}

enum NodeOutcome {
    Pruned,
    Feasible,
    Branch(f64, Branch),
    Unbounded,
    Limit,
}

struct Search<'a> {
    model: &'a MilpModel,
    cfg: &'a SolverConfig,
    lp: DualSimplex,
    root_lb: Vec<f64>,
    root_ub: Vec<f64>,
    applied: HashMap<usize, (f64, f64)>,
    /// Column view for the rounding heuristic: (row, coefficient).
    cols: Vec<Vec<(usize, f64)>>,
    discrete: Vec<usize>,
    incumbent: Option<(f64, Vec<f64>)>,
    nodes: u64,
    seq: u64,
    start: Instant,
}

impl<'a> Search<'a> {
    fn new(model: &'a MilpModel, cfg: &'a SolverConfig) -> Self {
        let rows: Vec<LpRow> = model
            .constraints()
            .iter()
            .map(|c| LpRow {
                terms: c.terms.iter().map(|(v, a)| (v.index(), *a)).collect(),
                relation: c.relation,
                rhs: c.rhs,
            })
            .collect();
        let mut cols = vec![Vec::new(); model.num_vars()];
        for (i, r) in rows.iter().enumerate() {
            for &(j, a) in &r.terms {
                cols[j].push((i, a));
            }
        }
        let root_lb: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
        let root_ub: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
        let lp = DualSimplex::new(model.num_vars(), rows, model.objective(), &root_lb, &root_ub);
        let discrete = model
            .variables()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind.is_discrete())
            .map(|(j, _)| j)
            .collect();
        Search {
            model,
            cfg,
            lp,
            root_lb,
            root_ub,
            applied: HashMap::new(),
            cols,
            discrete,
            incumbent: None,
            nodes: 0,
            seq: 0,
            start: Instant::now(),
        }
    }

    fn gap_tol(&self, incumbent: f64) -> f64 {
        self.cfg.abs_gap.max(self.cfg.rel_gap * incumbent.abs())
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((obj, _)) => obj - self.gap_tol(*obj),
            None => f64::INFINITY,
        }
    }

    fn out_of_budget(&self) -> bool {
        self.nodes >= self.cfg.node_limit
            || self.lp.iterations >= self.cfg.lp_iteration_limit
            || self.cfg.time_limit.is_some_and(|t| self.start.elapsed() >= t)
    }

    fn apply(&mut self, changes: &[BoundChange]) {
        let mut wanted: HashMap<usize, (f64, f64)> = HashMap::new();
        for &(j, lo, hi) in changes {
            wanted.insert(j, (lo, hi));
        }
        let mut stale: Vec<usize> = self.applied.keys().filter(|j| !wanted.contains_key(j)).copied().collect();
        stale.sort_unstable();
        for j in stale {
            self.lp.set_bounds(j, self.root_lb[j], self.root_ub[j]);
            self.applied.remove(&j);
        }
        let mut keys: Vec<usize> = wanted.keys().copied().collect();
        keys.sort_unstable();
        for j in keys {
            let b = wanted[&j];
            if self.applied.get(&j) != Some(&b) {
                self.lp.set_bounds(j, b.0, b.1);
                self.applied.insert(j, b);
            }
        }
    }

    fn current_bounds(&self, j: usize) -> (f64, f64) {
        self.applied.get(&j).copied().unwrap_or((self.root_lb[j], self.root_ub[j]))
    }

    fn process(&mut self, changes: &[BoundChange]) -> NodeOutcome {
        self.nodes += 1;
        self.apply(changes);
        let budget = self.cfg.lp_iteration_limit.saturating_sub(self.lp.iterations).max(1);
        match self.lp.solve(budget) {
            LpOutcome::Optimal => {}
            LpOutcome::Infeasible => return NodeOutcome::Pruned,
            LpOutcome::Unbounded => return NodeOutcome::Unbounded,
            LpOutcome::IterationLimit => return NodeOutcome::Limit,
        }
        let obj = self.lp.objective() + self.model.objective_offset();
        if obj >= self.cutoff() {
            return NodeOutcome::Pruned;
        }
        let x = self.lp.values().to_vec();
        let int_tol = self.cfg.int_tol;

        let mut best: Option<(usize, f64)> = None;
        for &j in &self.discrete {
            let f = x[j] - x[j].floor();
            let frac = f.min(1.0 - f);
            if frac > int_tol && best.is_none_or(|(_, b)| frac > b) {
                best = Some((j, frac));
            }
        }
        let branch = if let Some((var, _)) = best {
            Some(Branch::Var { var, value: x[var] })
        } else {
            self.sos_branch(&x)
        };
        match branch {
            None => {
                self.incumbent = Some((obj, x));
                NodeOutcome::Feasible
            }
            Some(b) => {
                if let Some(y) = self.round(&x) {
                    let val = self.model.objective_value(&y);
                    if val < self.incumbent.as_ref().map_or(f64::INFINITY, |i| i.0) {
                        self.incumbent = Some((val, y));
                        if obj >= self.cutoff() {
                            return NodeOutcome::Feasible;
                        }
                    }
                }
                NodeOutcome::Branch(obj, b)
            }
        }
    }

    fn sos_branch(&self, x: &[f64]) -> Option<Branch> {
        let tol = self.cfg.int_tol;
        for (g, group) in self.model.sos2_groups().iter().enumerate() {
            if group.is_satisfied(x, tol) {
                continue;
            }
            let nz: Vec<usize> = (0..group.members.len()).filter(|&k| x[group.members[k].index()].abs() > tol).collect();
            let (first, last) = (nz[0], *nz.last().unwrap());
            let split = (first + last).div_ceil(2).clamp(first + 1, last - 1);
            let mass = |range: std::ops::Range<usize>| range.map(|k| x[group.members[k].index()].abs()).sum::<f64>();
            let left_mass = mass(0..split);
            let right_mass = mass(split + 1..group.members.len());
            return Some(Branch::Sos { group: g, split, left_mass, right_mass });
        }
        None
    }

    /// Rounds fractional discrete values one at a time, accepting a
    /// direction only if every row touching the variable stays satisfied.
    fn round(&self, x: &[f64]) -> Option<Vec<f64>> {
        let tol = 1e-9;
        let mut y = x.to_vec();
        let cons = self.model.constraints();
        let mut act: Vec<f64> = cons.iter().map(|c| c.activity(&y)).collect();
        for &j in &self.discrete {
            let v = y[j];
            let lo = v.floor();
            let hi = v.ceil();
            if (v - v.round()).abs() <= self.cfg.int_tol {
                continue;
            }
            let (lb, ub) = self.current_bounds(j);
            let first = if v - lo >= 0.5 { [hi, lo] } else { [lo, hi] };
            let mut done = false;
            for cand in first {
                if cand < lb - tol || cand > ub + tol {
                    continue;
                }
                let delta = cand - v;
                let ok = self.cols[j].iter().all(|&(i, a)| {
                    let na = act[i] + a * delta;
                    match cons[i].relation {
                        Relation::Le => na <= cons[i].rhs + tol,
                        Relation::Ge => na >= cons[i].rhs - tol,
                        Relation::Eq => (na - cons[i].rhs).abs() <= tol,
                    }
                });
                if ok {
                    for &(i, a) in &self.cols[j] {
                        act[i] += a * delta;
                    }
                    y[j] = cand;
                    done = true;
                    break;
                }
            }
            if !done {
                return None;
            }
        }
        let sos_ok = self.model.sos2_groups().iter().all(|g| g.is_satisfied(&y, self.cfg.int_tol));
        sos_ok.then_some(y)
    }

    fn children(&self, changes: &[BoundChange], branch: &Branch) -> (Vec<BoundChange>, Vec<BoundChange>) {
        let mut a = changes.to_vec();
        let mut b = changes.to_vec();
        match *branch {
            Branch::Var { var, value } => {
                let (lb, ub) = self.current_bounds(var);
                let down = (var, lb, value.floor());
                let up = (var, value.ceil(), ub);
                if value - value.floor() >= 0.5 {
                    a.push(up);
                    b.push(down);
                } else {
                    a.push(down);
                    b.push(up);
                }
            }
            Branch::Sos { group, split, left_mass, right_mass } => {
                let members = &self.model.sos2_groups()[group].members;
                let keep_left: Vec<BoundChange> = members[split + 1..].iter().map(|v| (v.index(), 0.0, 0.0)).collect();
                let keep_right: Vec<BoundChange> = members[..split].iter().map(|v| (v.index(), 0.0, 0.0)).collect();
                if left_mass >= right_mass {
                    a.extend(keep_left);
                    b.extend(keep_right);
                } else {
                    a.extend(keep_right);
                    b.extend(keep_left);
                }
            }
        }
        (a, b)
    }

    fn run(mut self) -> Solution {
        let mut open: BinaryHeap<Node> = BinaryHeap::new();
        let mut dive: Option<Vec<BoundChange>> = Some(Vec::new());
        let mut hit_limit = false;
        let mut unbounded = false;
        loop {
            let changes = match dive.take() {
                Some(c) => c,
                None => match open.pop() {
                    Some(node) => {
                        if node.bound >= self.cutoff() {
                            open.clear();
                            continue;
                        }
                        node.changes
                    }
                    None => break,
                },
            };
            if self.out_of_budget() {
                hit_limit = true;
                break;
            }
            match self.process(&changes) {
                NodeOutcome::Pruned | NodeOutcome::Feasible => {}
                NodeOutcome::Unbounded => {
                    unbounded = true;
                    break;
                }
                NodeOutcome::Limit => {
                    hit_limit = true;
                    break;
                }
                NodeOutcome::Branch(bound, branch) => {
                    let (first, second) = self.children(&changes, &branch);
                    self.seq += 1;
                    open.push(Node { bound, seq: self.seq, changes: second });
                    dive = Some(first);
                }
            }
        }
        let stats = SolveStats {
            nodes: self.nodes,
            lp_iterations: self.lp.iterations,
            subproblems: self.nodes,
            wall_time: self.start.elapsed(),
        };
        if unbounded && self.incumbent.is_none() {
            return Solution::without_point(SolveStatus::Unbounded, stats, Some("LP relaxation unbounded".into()));
        }
        let status = if hit_limit { SolveStatus::Limit } else { SolveStatus::Optimal };
        match self.incumbent.take() {
            None if hit_limit => Solution::without_point(
                SolveStatus::Limit,
                stats,
                Some(format!("budget exhausted after {} nodes without an incumbent", self.nodes)),
            ),
            None => Solution::without_point(SolveStatus::Infeasible, stats, None),
            Some((_, x)) => {
                let values = self.polish(x);
                let mut stats = stats;
                stats.lp_iterations = self.lp.iterations;
                let diagnostics = hit_limit.then(|| format!("stopped at limit after {} nodes", self.nodes));
                Solution {
                    status,
                    objective: self.model.objective_value(&values),
                    values,
                    stats,
                    diagnostics,
                }
            }
        }
    }

    /// Re-solves the continuous part with every discrete choice pinned, so the
    /// reported point has exact integers and tight rows.
    fn polish(&mut self, x: Vec<f64>) -> Vec<f64> {
        let mut changes: Vec<BoundChange> = self.discrete.iter().map(|&j| (j, x[j].round(), x[j].round())).collect();
        for g in self.model.sos2_groups() {
            let nz: Vec<usize> = (0..g.members.len()).filter(|&k| x[g.members[k].index()].abs() > self.cfg.int_tol).collect();
            let keep = match nz.as_slice() {
                [] => 0..0,
                [a] => *a..*a + 1,
                [a, .., b] => *a..*b + 1,
            };
            for (k, v) in g.members.iter().enumerate() {
                if !keep.contains(&k) {
                    changes.push((v.index(), 0.0, 0.0));
                }
            }
        }
        self.apply(&changes);
        match self.lp.solve(100_000) {
            LpOutcome::Optimal => {
                let mut y = self.lp.values().to_vec();
                for &j in &self.discrete {
                    y[j] = x[j].round();
                }
                y
            }
            _ => {
                let mut y = x;
                for &j in &self.discrete {
                    y[j] = y[j].round();
                }
                y
            }
        }
    }
}
