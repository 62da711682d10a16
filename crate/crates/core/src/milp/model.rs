//! Model-building side of the MILP layer: variables, linear rows, SOS-2
//! groups and a linear objective (always minimized).

use serde::{Deserialize, Serialize};

use super::MilpError;

/// Dense, insertion-ordered handle to a model variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Dense, insertion-ordered handle to a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConstraintId(pub(crate) usize);

impl ConstraintId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    /// Always bounded to `[0, 1]`.
    Binary,
    /// Integer with finite bounds, e.g. `{-1, 0}` end markers.
    Integer,
}

impl VarKind {
    pub fn is_discrete(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violate this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.relation {
            Relation::Le => (act - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - act).max(0.0),
            Relation::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Ordered variable list of which at most two adjacent members may be nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sos2Group {
    pub name: String,
    pub members: Vec<VarId>,
}

impl Sos2Group {
    /// True when at most two members exceed `tol` and those are adjacent.
    pub fn is_satisfied(&self, values: &[f64], tol: f64) -> bool {
        let nz: Vec<usize> = self
            .members
            .iter()
            .enumerate()
            .filter(|(_, v)| values[v.0].abs() > tol)
            .map(|(k, _)| k)
            .collect();
        match nz.as_slice() {
            [] | [_] => true,
            [a, b] => b - a == 1,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    sos2: Vec<Sos2Group>,
    objective: Vec<f64>,
    objective_offset: f64,
}

fn check_finite(what: &str, x: f64) -> Result<(), MilpError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(MilpError::NonFinite(format!("{what} = {x}")))
    }
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel { name: name.into(), ..Default::default() }
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, MilpError> {
        let name = name.into();
        let (lower, upper) = match kind {
            VarKind::Binary => (0.0, 1.0),
            VarKind::Integer => {
                if !lower.is_finite() || !upper.is_finite() {
                    return Err(MilpError::InvalidBounds { name, lower, upper });
                }
                (lower.ceil(), upper.floor())
            }
            VarKind::Continuous => (lower, upper),
        };
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(MilpError::InvalidBounds { name, lower, upper });
        }
        let id = VarId(self.variables.len());
        self.variables.push(Variable { name, kind, lower, upper });
        self.objective.push(0.0);
        Ok(id)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId, MilpError> {
        self.add_variable(name, VarKind::Continuous, lower, upper)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> Result<VarId, MilpError> {
        self.add_variable(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn integer(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId, MilpError> {
        self.add_variable(name, VarKind::Integer, lower, upper)
    }

    /// Adds a row; duplicate variables in `terms` are merged and exact zeros dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: &[(VarId, f64)],
        relation: Relation,
        rhs: f64,
    ) -> Result<ConstraintId, MilpError> {
        let name = name.into();
        check_finite(&format!("rhs of {name}"), rhs)?;
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for &(v, a) in terms {
            self.check_var(v)?;
            check_finite(&format!("coefficient of {} in {name}", self.variables[v.0].name), a)?;
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += a,
                None => merged.push((v, a)),
            }
        }
        merged.retain(|(_, a)| *a != 0.0);
        let id = ConstraintId(self.constraints.len());
        self.constraints.push(Constraint { name, terms: merged, relation, rhs });
        Ok(id)
    }

    pub fn add_sos2(&mut self, name: impl Into<String>, members: &[VarId]) -> Result<usize, MilpError> {
        let name = name.into();
        if members.len() < 2 {
            return Err(MilpError::Sos2TooShort(name));
        }
        for (k, &v) in members.iter().enumerate() {
            self.check_var(v)?;
            if members[..k].contains(&v) {
                return Err(MilpError::Sos2Duplicate(name));
            }
        }
        self.sos2.push(Sos2Group { name, members: members.to_vec() });
        Ok(self.sos2.len() - 1)
    }

    /// Replaces the objective with `terms` (minimized).
    pub fn set_objective(&mut self, terms: &[(VarId, f64)]) -> Result<(), MilpError> {
        for c in self.objective.iter_mut() {
            *c = 0.0;
        }
        self.objective_offset = 0.0;
        for &(v, c) in terms {
            self.add_objective_term(v, c)?;
        }
        Ok(())
    }

    pub fn add_objective_term(&mut self, v: VarId, coef: f64) -> Result<(), MilpError> {
        self.check_var(v)?;
        check_finite("objective coefficient", coef)?;
        self.objective[v.0] += coef;
        Ok(())
    }

    pub fn add_objective_offset(&mut self, c: f64) -> Result<(), MilpError> {
        check_finite("objective offset", c)?;
        self.objective_offset += c;
        Ok(())
    }

    /// Tightens or relaxes a variable's bounds after creation.
    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) -> Result<(), MilpError> {
        self.check_var(v)?;
        let var = &mut self.variables[v.0];
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(MilpError::InvalidBounds { name: var.name.clone(), lower, upper });
        }
        if var.kind.is_discrete() && (!lower.is_finite() || !upper.is_finite()) {
            return Err(MilpError::InvalidBounds { name: var.name.clone(), lower, upper });
        }
        var.lower = lower;
        var.upper = upper;
        Ok(())
    }

    pub fn fix(&mut self, v: VarId, value: f64) -> Result<(), MilpError> {
        self.set_bounds(v, value, value)
    }

    fn check_var(&self, v: VarId) -> Result<(), MilpError> {
        if v.0 < self.variables.len() {
            Ok(())
        } else {
            Err(MilpError::UnknownVariable(v.0))
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, v: VarId) -> &Variable {
        &self.variables[v.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, c: ConstraintId) -> &Constraint {
        &self.constraints[c.0]
    }

    pub fn sos2_groups(&self) -> &[Sos2Group] {
        &self.sos2
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(values).map(|(c, x)| c * x).sum::<f64>()
    }

    pub fn discrete_count(&self) -> usize {
        self.variables.iter().filter(|v| v.kind.is_discrete()).count()
    }

    /// Discrete variables whose bounds still leave a choice.
    pub fn free_discrete_count(&self) -> usize {
        self.variables.iter().filter(|v| v.kind.is_discrete() && v.lower < v.upper).count()
    }

    /// Copy of the model keeping only the rows accepted by `keep`.
    pub fn filter_constraints(&self, keep: impl Fn(&Constraint) -> bool) -> MilpModel {
        let mut m = self.clone();
        m.constraints.retain(|c| keep(c));
        m
    }

    pub(crate) fn take_sos2(&mut self) -> Vec<Sos2Group> {
        std::mem::take(&mut self.sos2)
    }

    /// Appends every variable, row and SOS-2 group of `other`, returning the
    /// offset applied to its variable ids.
    pub fn absorb(&mut self, other: MilpModel) -> usize {
        let shift = self.variables.len();
        self.variables.extend(other.variables);
        self.objective.extend(other.objective);
        self.objective_offset += other.objective_offset;
        for mut c in other.constraints {
            for t in c.terms.iter_mut() {
                t.0 = VarId(t.0 .0 + shift);
            }
            self.constraints.push(c);
        }
        for mut g in other.sos2 {
            for m in g.members.iter_mut() {
                *m = VarId(m.0 + shift);
            }
            self.sos2.push(g);
        }
        shift
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_bounds_are_forced() {
        let mut m = MilpModel::new("t");
        let u = m.add_variable("u", VarKind::Binary, -3.0, 7.0).unwrap();
        let v = m.variable(u);
        assert_eq!(v.kind, VarKind::Binary);
        assert_eq!((v.lower, v.upper), (0.0, 1.0));
    }

    #[test]
    fn sos2_group_is_registered_in_order() {
        let mut m = MilpModel::new("t");
        let a: Vec<VarId> = (0..3).map(|k| m.continuous(format!("a{k}"), 0.0, 1.0).unwrap()).collect();
        let g = m.add_sos2("deg", &a).unwrap();
        assert_eq!(g, 0);
        assert_eq!(m.sos2_groups()[0].members, a);
        assert!(m.add_sos2("short", &a[..1]).is_err());
        assert!(m.add_sos2("dup", &[a[0], a[0]]).is_err());
    }

    #[test]
    fn nan_coefficient_rejected() {
        let mut m = MilpModel::new("t");
        let x = m.continuous("x", 0.0, 1.0).unwrap();
        let err = m.add_constraint("bad", &[(x, f64::NAN)], Relation::Le, 1.0).unwrap_err();
        assert!(matches!(err, MilpError::NonFinite(_)));
        assert!(m.add_constraint("bad_rhs", &[(x, 1.0)], Relation::Le, f64::INFINITY).is_err());
    }

    #[test]
    fn unknown_variable_rejected() {
        let mut m = MilpModel::new("t");
        let _ = m.continuous("x", 0.0, 1.0).unwrap();
        let err = m.add_constraint("r", &[(VarId(5), 1.0)], Relation::Le, 1.0).unwrap_err();
        assert_eq!(err, MilpError::UnknownVariable(5));
    }

    #[test]
    fn duplicate_terms_merge() {
        let mut m = MilpModel::new("t");
        let x = m.continuous("x", 0.0, 1.0).unwrap();
        let y = m.continuous("y", 0.0, 1.0).unwrap();
        let c = m.add_constraint("r", &[(x, 1.0), (y, 2.0), (x, -1.0)], Relation::Le, 1.0).unwrap();
        assert_eq!(m.constraint(c).terms, vec![(y, 2.0)]);
    }

    #[test]
    fn ids_are_dense_in_insertion_order() {
        let mut m = MilpModel::new("t");
        let ids: Vec<usize> = (0..4).map(|k| m.continuous(format!("x{k}"), 0.0, 1.0).unwrap().index()).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
    }
}
