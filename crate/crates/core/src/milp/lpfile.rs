//! CPLEX LP text export, for inspecting models in other solvers.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use super::model::{MilpModel, Relation, VarKind};

fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.[]".contains(c) { c } else { '_' })
        .collect();
    match s.chars().next() {
        Some(c) if c.is_ascii_digit() || c == '.' => format!("_{s}"),
        None => "_".to_string(),
        _ => s,
    }
}

fn var_names(model: &MilpModel) -> Vec<String> {
    model.variables().iter().enumerate().map(|(j, v)| format!("{}_{j}", sanitize(&v.name))).collect()
}

fn linear(out: &mut String, terms: impl Iterator<Item = (usize, f64)>, names: &[String]) {
    let mut first = true;
    for (j, a) in terms {
        if a == 0.0 {
            continue;
        }
        let sign = if a < 0.0 { "-" } else if first { "" } else { "+" };
        let _ = write!(out, " {sign} {} {}", a.abs(), names[j]);
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

pub fn to_lp_string(model: &MilpModel) -> String {
    let names = var_names(model);
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    if model.objective_offset() != 0.0 {
        let _ = writeln!(out, "\\ objective offset {}", model.objective_offset());
    }
    out.push_str("Minimize\n obj:");
    linear(&mut out, model.objective().iter().copied().enumerate(), &names);
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints().iter().enumerate() {
        let _ = write!(out, " {}_{i}:", sanitize(&c.name));
        linear(&mut out, c.terms.iter().map(|(v, a)| (v.index(), *a)), &names);
        let op = match c.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for (v, n) in model.variables().iter().zip(&names) {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {n} free");
            }
            (true, true) if v.lower == v.upper => {
                let _ = writeln!(out, " {n} = {}", v.lower);
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {n} <= {}", v.lower, v.upper);
            }
            (true, false) => {
                let _ = writeln!(out, " {n} >= {}", v.lower);
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {n} <= {}", v.upper);
            }
        }
    }
    let bins: Vec<&String> =
        model.variables().iter().zip(&names).filter(|(v, _)| v.kind == VarKind::Binary).map(|(_, n)| n).collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for n in bins {
            let _ = writeln!(out, " {n}");
        }
    }
    let ints: Vec<&String> =
        model.variables().iter().zip(&names).filter(|(v, _)| v.kind == VarKind::Integer).map(|(_, n)| n).collect();
    if !ints.is_empty() {
        out.push_str("Generals\n");
        for n in ints {
            let _ = writeln!(out, " {n}");
        }
    }
    if !model.sos2_groups().is_empty() {
        out.push_str("SOS\n");
        for g in model.sos2_groups() {
            let _ = write!(out, " {}: S2::", sanitize(&g.name));
            for (k, m) in g.members.iter().enumerate() {
                let _ = write!(out, " {}:{}", names[m.index()], k + 1);
            }
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}

pub fn write_lp(model: &MilpModel, path: &Path) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, to_lp_string(model))
}
