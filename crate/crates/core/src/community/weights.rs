use serde::{Deserialize, Serialize};

use crate::scenario::{MicrogridSpec, Topology};

use super::CommunityError;

/// Symmetric pairing weights. Entries at or above `big_m` mean "no valid
/// pairing" (self, unconnected, or excluded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    n: usize,
    big_m: f64,
    values: Vec<f64>,
}

impl WeightMatrix {
    pub fn all_m(n: usize, big_m: f64) -> Self {
        WeightMatrix { n, big_m, values: vec![big_m; n * n] }
    }

    /// `None` entries become `big_m`. Rejects non-square or asymmetric input.
    pub fn from_rows(rows: &[Vec<Option<f64>>], big_m: f64) -> Result<Self, CommunityError> {
        let n = rows.len();
        let mut w = WeightMatrix::all_m(n, big_m);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(CommunityError::Dimension { expected: n, got: r.len() });
            }
            for (j, v) in r.iter().enumerate() {
                w.values[i * n + j] = v.map_or(big_m, |x| x.min(big_m));
            }
        }
        w.check_symmetric()?;
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.get(i, j) < self.big_m
    }

    /// Writes both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
        self.values[j * self.n + i] = v;
    }

    /// Masks row and column `i`.
    pub fn exclude(&mut self, i: usize) {
        for j in 0..self.n {
            self.set(i, j, self.big_m);
        }
    }

    pub fn all_invalid(&self) -> bool {
        self.values.iter().all(|&v| v >= self.big_m)
    }

    pub fn check_symmetric(&self) -> Result<(), CommunityError> {
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.get(i, j) != self.get(j, i) {
                    return Err(CommunityError::Asymmetric { i, j });
                }
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.is_valid(i, j).then(|| self.get(i, j))).collect()).collect()
    }
}

/// `w_ij = eps_ij * |l_i - l_j|` for connected pairs, `M` elsewhere.
pub fn build_weight_matrix(topology: &Topology, specs: &[MicrogridSpec]) -> Result<WeightMatrix, CommunityError> {
    let n = specs.len();
    let mut w = WeightMatrix::all_m(n, topology.big_m);
    for i in 0..n {
        for j in i + 1..n {
            if !topology.connected(i, j) {
                continue;
            }
            let v = topology.loss_factor(i, j) * specs[i].location.distance(&specs[j].location);
            if !(0.0..1.0).contains(&v) {
                return Err(CommunityError::InvalidWeight { a: specs[i].id.clone(), b: specs[j].id.clone(), w: v });
            }
            w.set(i, j, v);
        }
    }
    Ok(w)
}

/// Excludes every pair whose net exchanges do not have strictly opposite
/// signs; an MG at zero is excluded entirely.
pub fn mask_by_sign(w: &WeightMatrix, p: &[f64]) -> Result<WeightMatrix, CommunityError> {
    if p.len() != w.n {
        return Err(CommunityError::Dimension { expected: w.n, got: p.len() });
    }
    let mut out = w.clone();
    for i in 0..w.n {
        for j in i..w.n {
            if p[i] * p[j] >= 0.0 {
                out.set(i, j, w.big_m);
            }
        }
    }
    Ok(out)
}

/// A pair `(x, y)`, `x < y`, whose weight is the minimum of both row `x`
/// and row `y`. Several such pairs may exist; the lightest wins, then the
/// smallest `(x, y)`. `None` only when every entry is invalid.
pub fn find_pairing(w: &WeightMatrix) -> Result<Option<(usize, usize)>, CommunityError> {
    w.check_symmetric()?;
    let n = w.n;
    let row_min: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w.get(i, j)).fold(f64::INFINITY, f64::min)).collect();
    let mut best: Option<(f64, usize, usize)> = None;
    for x in 0..n {
        for y in x + 1..n {
            let v = w.get(x, y);
            if !w.is_valid(x, y) || v != row_min[x] || w.get(y, x) != row_min[y] {
                continue;
            }
            if best.is_none_or(|(b, _, _)| v < b) {
                best = Some((v, x, y));
            }
        }
    }
    Ok(best.map(|(_, x, y)| (x, y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const M: f64 = 1e9;

    fn m(rows: &[&[f64]]) -> WeightMatrix {
        let r: Vec<Vec<Option<f64>>> =
            rows.iter().map(|r| r.iter().map(|&v| (v < M).then_some(v)).collect()).collect();
        WeightMatrix::from_rows(&r, M).unwrap()
    }

    #[test]
    fn three_by_three_pairing() {
        let w = m(&[&[M, 3.0, 7.0], &[3.0, M, 5.0], &[7.0, 5.0, M]]);
        assert_eq!(find_pairing(&w).unwrap(), Some((0, 1)));
    }

    #[test]
    fn single_entry_and_empty() {
        let w = m(&[&[M, 0.2], &[0.2, M]]);
        assert_eq!(find_pairing(&w).unwrap(), Some((0, 1)));
        assert_eq!(find_pairing(&WeightMatrix::all_m(5, M)).unwrap(), None);
    }

    #[test]
    fn lightest_mutual_minimum_wins_over_index_order() {
        // (0,1) and (2,3) are both mutual row minima
        let w = m(&[&[M, 3.0, M, M], &[3.0, M, M, M], &[M, M, M, 1.0], &[M, M, 1.0, M]]);
        assert_eq!(find_pairing(&w).unwrap(), Some((2, 3)));
    }

    #[test]
    fn asymmetric_rejected() {
        let mut w = WeightMatrix::all_m(2, M);
        w.values[1] = 0.5;
        assert!(matches!(find_pairing(&w), Err(CommunityError::Asymmetric { i: 0, j: 1 })));
    }

    #[test]
    fn sign_mask() {
        let w = m(&[&[M, 1.0, 2.0], &[1.0, M, 3.0], &[2.0, 3.0, M]]);
        let masked = mask_by_sign(&w, &[2.0, 1.0, -3.0]).unwrap();
        assert!(!masked.is_valid(0, 1));
        assert!(masked.is_valid(0, 2) && masked.is_valid(1, 2));
        assert!(mask_by_sign(&w, &[1.0, 2.0, 3.0]).unwrap().all_invalid());
        let with_zero = mask_by_sign(&w, &[0.0, 1.0, -3.0]).unwrap();
        assert!((0..3).all(|j| !with_zero.is_valid(0, j)));
        assert!(with_zero.is_valid(1, 2));
    }
}
