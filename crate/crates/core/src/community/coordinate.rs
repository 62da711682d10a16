use serde::{Deserialize, Serialize};

use crate::local::LocalSchedule;
use crate::scenario::PriceSchedule;

use super::{find_pairing, mask_by_sign, settle_pair, CommunityError, Settlement, WeightMatrix};

/// Settlements of one step plus the net exchanges before and after.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLedger {
    pub t: usize,
    /// Community price applied to every settlement of the step.
    pub price: f64,
    pub initial: Vec<f64>,
    /// Exchange left for the upstream grid; positive is import.
    pub residual: Vec<f64>,
    pub settlements: Vec<Settlement>,
}

impl StepLedger {
    pub fn loss_kw(&self) -> f64 {
        self.settlements.iter().map(|s| s.loss_kw).sum()
    }

    /// Net peer exchange of MG `i` (received minus sent).
    pub fn peer_net(&self, i: usize) -> f64 {
        self.settlements
            .iter()
            .map(|s| {
                if s.buyer == i {
                    s.received_kw
                } else if s.seller == i {
                    -s.sent_kw
                } else {
                    0.0
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionLedger {
    pub mg_ids: Vec<String>,
    pub dt_hours: f64,
    pub steps: Vec<StepLedger>,
}

impl TransactionLedger {
    /// Ledger with no settlements: every MG trades its net exchange with the grid.
    pub fn direct(mg_ids: Vec<String>, dt_hours: f64, p_c: &[Vec<f64>], prices: &PriceSchedule) -> Self {
        let steps = (0..prices.buy.len())
            .map(|t| {
                let p: Vec<f64> = p_c.iter().map(|row| row[t]).collect();
                StepLedger { t, price: prices.community[t], residual: p.clone(), initial: p, settlements: vec![] }
            })
            .collect();
        TransactionLedger { mg_ids, dt_hours, steps }
    }

    pub fn settlement_count(&self) -> usize {
        self.steps.iter().map(|s| s.settlements.len()).sum()
    }

    pub fn total_loss_kwh(&self) -> f64 {
        self.steps.iter().map(|s| s.loss_kw()).sum::<f64>() * self.dt_hours
    }
}

/// One iteration of the literal coordination loop, for `--trace-pairing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingEvent {
    pub t: usize,
    pub iteration: usize,
    /// Masked matrix the pairing was searched in; `null` marks `M`.
    pub matrix: Vec<Vec<Option<f64>>>,
    pub pair: Option<(usize, usize)>,
    pub case: Option<u8>,
    pub residual_before: Vec<f64>,
    pub residual_after: Vec<f64>,
}

fn one_sided(p: &[f64]) -> bool {
    !(p.iter().any(|&x| x > 0.0) && p.iter().any(|&x| x < 0.0))
}

/// Matrix-level coordination of one step: mask, pair, settle, exclude,
/// until no opposite-sign pairing is left.
pub fn coordinate_step(
    t: usize,
    p_c: &[f64],
    w0: &WeightMatrix,
    price: f64,
    mut trace: Option<&mut Vec<PairingEvent>>,
) -> Result<StepLedger, CommunityError> {
    let mut p = p_c.to_vec();
    let mut w = w0.clone();
    let mut settlements = Vec::new();
    for iteration in 0.. {
        if one_sided(&p) {
            break;
        }
        w = mask_by_sign(&w, &p)?;
        let pair = find_pairing(&w)?;
        let searched = trace.is_some().then(|| w.rows());
        let before = p.clone();
        let case = match pair {
            Some((x, y)) => {
                let s = settle_pair(x, y, &mut p, w.get(x, y))?;
                for i in [x, y] {
                    if p[i] == 0.0 {
                        w.exclude(i);
                    }
                }
                let c = s.case;
                settlements.push(s);
                Some(c)
            }
            None => None,
        };
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(PairingEvent {
                t,
                iteration,
                matrix: searched.unwrap_or_default(),
                pair,
                case,
                residual_before: before,
                residual_after: p.clone(),
            });
        }
        if pair.is_none() {
            break;
        }
    }
    Ok(StepLedger { t, price, initial: p_c.to_vec(), residual: p, settlements })
}

/// The literal loop always settles the lightest valid edge next, and an
/// edge never becomes valid again once masked, so walking the edges of
/// `W0` in `(weight, x, y)` order once gives the same settlements.
#[derive(Debug, Clone)]
pub struct CoordinationPlan {
    edges: Vec<(f64, usize, usize)>,
    n: usize,
}

impl CoordinationPlan {
    pub fn new(w0: &WeightMatrix) -> Result<Self, CommunityError> {
        w0.check_symmetric()?;
        let n = w0.len();
        let mut edges: Vec<(f64, usize, usize)> =
            (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).filter(|&(x, y)| w0.is_valid(x, y)).map(|(x, y)| (w0.get(x, y), x, y)).collect();
        edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        Ok(CoordinationPlan { edges, n })
    }

    pub fn step(&self, t: usize, p_c: &[f64], price: f64) -> Result<StepLedger, CommunityError> {
        if p_c.len() != self.n {
            return Err(CommunityError::Dimension { expected: self.n, got: p_c.len() });
        }
        let mut p = p_c.to_vec();
        let mut settlements = Vec::new();
        let (mut buyers, mut sellers) = (p.iter().filter(|&&x| x > 0.0).count(), p.iter().filter(|&&x| x < 0.0).count());
        for &(w, x, y) in &self.edges {
            if buyers == 0 || sellers == 0 {
                break;
            }
            if p[x] * p[y] >= 0.0 {
                continue;
            }
            let s = settle_pair(x, y, &mut p, w)?;
            for i in [x, y] {
                if p[i] == 0.0 {
                    if i == s.buyer {
                        buyers -= 1;
                    } else {
                        sellers -= 1;
                    }
                }
            }
            settlements.push(s);
        }
        Ok(StepLedger { t, price, initial: p_c.to_vec(), residual: p, settlements })
    }
}

/// Coordinates every step of the horizon from the local schedules' net exchange.
pub fn coordinate(
    schedules: &[LocalSchedule],
    w0: &WeightMatrix,
    prices: &PriceSchedule,
) -> Result<TransactionLedger, CommunityError> {
    if schedules.len() != w0.len() {
        return Err(CommunityError::Dimension { expected: w0.len(), got: schedules.len() });
    }
    let plan = CoordinationPlan::new(w0)?;
    let steps = schedules.first().map_or(0, |s| s.steps);
    let dt_hours = schedules.first().map_or(0.0, |s| s.dt_hours);
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let p: Vec<f64> = schedules.iter().map(|s| s.net_exchange[t]).collect();
        out.push(plan.step(t, &p, prices.community[t])?);
    }
    Ok(TransactionLedger { mg_ids: schedules.iter().map(|s| s.mg_id.clone()).collect(), dt_hours, steps: out })
}

/// Same as [`coordinate`] through the matrix loop, recording every iteration.
pub fn coordinate_traced(
    schedules: &[LocalSchedule],
    w0: &WeightMatrix,
    prices: &PriceSchedule,
) -> Result<(TransactionLedger, Vec<PairingEvent>), CommunityError> {
    if schedules.len() != w0.len() {
        return Err(CommunityError::Dimension { expected: w0.len(), got: schedules.len() });
    }
    let steps = schedules.first().map_or(0, |s| s.steps);
    let dt_hours = schedules.first().map_or(0.0, |s| s.dt_hours);
    let mut trace = Vec::new();
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let p: Vec<f64> = schedules.iter().map(|s| s.net_exchange[t]).collect();
        out.push(coordinate_step(t, &p, w0, prices.community[t], Some(&mut trace))?);
    }
    let ledger = TransactionLedger { mg_ids: schedules.iter().map(|s| s.mg_id.clone()).collect(), dt_hours, steps: out };
    Ok((ledger, trace))
}
