use std::fmt;

use super::model::MilpModel;

#[derive(Debug, Clone, PartialEq)]
pub enum AuditIssue {
    WrongLength { expected: usize, got: usize },
    Bound { var: String, value: f64, lower: f64, upper: f64 },
    Integrality { var: String, value: f64 },
    Row { row: String, violation: f64 },
    Sos2 { group: String },
}

impl fmt::Display for AuditIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditIssue::WrongLength { expected, got } => write!(f, "expected {expected} values, got {got}"),
            AuditIssue::Bound { var, value, lower, upper } => write!(f, "{var} = {value} outside [{lower}, {upper}]"),
            AuditIssue::Integrality { var, value } => write!(f, "{var} = {value} is not integral"),
            AuditIssue::Row { row, violation } => write!(f, "row {row} violated by {violation:e}"),
            AuditIssue::Sos2 { group } => write!(f, "SOS-2 group {group} has non-adjacent nonzeros"),
        }
    }
}

/// Checks a point against every bound, row, integrality and SOS-2 condition
/// of `model` using only the model data. Empty result means feasible.
pub fn audit(model: &MilpModel, values: &[f64], tol: f64) -> Vec<AuditIssue> {
    if values.len() != model.num_vars() {
        return vec![AuditIssue::WrongLength { expected: model.num_vars(), got: values.len() }];
    }
    let mut issues = Vec::new();
    for (v, &x) in model.variables().iter().zip(values) {
        if !x.is_finite() || x < v.lower - tol || x > v.upper + tol {
            issues.push(AuditIssue::Bound { var: v.name.clone(), value: x, lower: v.lower, upper: v.upper });
        }
        if v.kind.is_discrete() && (x - x.round()).abs() > tol {
            issues.push(AuditIssue::Integrality { var: v.name.clone(), value: x });
        }
    }
    for c in model.constraints() {
        let viol = c.violation(values);
        if viol > tol {
            issues.push(AuditIssue::Row { row: c.name.clone(), violation: viol });
        }
    }
    for g in model.sos2_groups() {
        if !g.is_satisfied(values, tol) {
            issues.push(AuditIssue::Sos2 { group: g.name.clone() });
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::Relation;

    #[test]
    fn flags_each_kind_of_violation() {
        let mut m = MilpModel::new("a");
        let x = m.binary("x").unwrap();
        let y = m.continuous("y", 0.0, 1.0).unwrap();
        let z = m.continuous("z", 0.0, 1.0).unwrap();
        let w = m.continuous("w", 0.0, 1.0).unwrap();
        m.add_constraint("r", &[(x, 1.0), (y, 1.0)], Relation::Le, 1.0).unwrap();
        m.add_sos2("s", &[y, z, w]).unwrap();
        assert!(audit(&m, &[1.0, 0.0, 0.0, 0.0], 1e-9).is_empty());
        let issues = audit(&m, &[0.5, 0.9, 0.0, 0.5], 1e-9);
        assert!(issues.iter().any(|i| matches!(i, AuditIssue::Integrality { .. })));
        assert!(issues.iter().any(|i| matches!(i, AuditIssue::Row { .. })));
        assert!(issues.iter().any(|i| matches!(i, AuditIssue::Sos2 { .. })));
        assert!(matches!(audit(&m, &[0.0], 1e-9)[0], AuditIssue::WrongLength { .. }));
        assert!(matches!(audit(&m, &[0.0, 2.0, 0.0, 0.0], 1e-9)[0], AuditIssue::Bound { .. }));
    }
}
