use super::model::{MilpModel, Relation, VarId};
use super::MilpError;

/// Rewrites every SOS-2 group as one segment-selector binary per interval:
/// exactly one segment is active and a member may be nonzero only if an
/// adjacent segment is. Members need finite bounds.
pub fn encode_sos2_as_binaries(model: &MilpModel) -> Result<MilpModel, MilpError> {
    let mut out = model.clone();
    let groups = out.take_sos2();
    for g in groups {
        let n = g.members.len();
        let seg: Vec<VarId> =
            (0..n - 1).map(|k| out.binary(format!("{}_seg{}", g.name, k))).collect::<Result<_, _>>()?;
        let pick: Vec<(VarId, f64)> = seg.iter().map(|&z| (z, 1.0)).collect();
        out.add_constraint(format!("{}_one", g.name), &pick, Relation::Eq, 1.0)?;
        for (k, &m) in g.members.iter().enumerate() {
            let var = out.variable(m).clone();
            if !var.lower.is_finite() || !var.upper.is_finite() {
                return Err(MilpError::InvalidBounds { name: var.name, lower: var.lower, upper: var.upper });
            }
            let adj: Vec<VarId> = [k.checked_sub(1), (k < n - 1).then_some(k)].into_iter().flatten().map(|s| seg[s]).collect();
            // x_m <= ub * sum(adj), x_m >= lb * sum(adj)
            let mut up = vec![(m, 1.0)];
            let mut lo = vec![(m, 1.0)];
            for &z in &adj {
                up.push((z, -var.upper));
                lo.push((z, -var.lower));
            }
            out.add_constraint(format!("{}_ub{}", g.name, k), &up, Relation::Le, 0.0)?;
            out.add_constraint(format!("{}_lb{}", g.name, k), &lo, Relation::Ge, 0.0)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{solve, SolverConfig};

    #[test]
    fn encoded_model_has_no_sos_and_same_optimum() {
        // minimise a concave-looking piecewise cost so adjacency matters
        let mut m = MilpModel::new("pw");
        let a: Vec<VarId> = (0..4).map(|k| m.continuous(format!("a{k}"), 0.0, 1.0).unwrap()).collect();
        let pts = [0.0, 1.0, 2.0, 3.0];
        let cost = [0.0, 2.0, 2.5, 2.6];
        m.add_constraint("sum", &a.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), Relation::Eq, 1.0).unwrap();
        m.add_constraint("x", &a.iter().zip(pts).map(|(&v, p)| (v, p)).collect::<Vec<_>>(), Relation::Eq, 1.5).unwrap();
        m.set_objective(&a.iter().zip(cost).map(|(&v, c)| (v, c)).collect::<Vec<_>>()).unwrap();
        m.add_sos2("curve", &a).unwrap();
        let enc = encode_sos2_as_binaries(&m).unwrap();
        assert!(enc.sos2_groups().is_empty());
        assert_eq!(enc.discrete_count(), 3);
        let cfg = SolverConfig::default();
        let s1 = solve(&m, &cfg).unwrap();
        let s2 = solve(&enc, &cfg).unwrap();
        assert!((s1.objective - 2.25).abs() < 1e-9, "{}", s1.objective);
        assert!((s1.objective - s2.objective).abs() < 1e-9);
    }
}
