use serde::{Deserialize, Serialize};

use super::CommunityError;

/// One loss-adjusted transfer. `received_kw = (1 - w) sent_kw`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settlement {
    pub seller: usize,
    pub buyer: usize,
    pub sent_kw: f64,
    pub received_kw: f64,
    pub loss_kw: f64,
    pub weight: f64,
    /// Which of the four update rules applied, 1-based; see [`settle_pair`].
    pub case: u8,
}

impl Settlement {
    /// Peer-exchange value of `i` towards `j` under the net-exchange sign
    /// convention: the buyer's import is positive, the seller's export negative.
    pub fn exchange(&self, i: usize, j: usize) -> f64 {
        if i == self.buyer && j == self.seller {
            self.received_kw
        } else if i == self.seller && j == self.buyer {
            -self.sent_kw
        } else {
            0.0
        }
    }
}

/// Settles `x` against `y` in place. Positive residuals are deficits.
///
/// | case | `p[x]` | limiting side | transfer |
/// |------|--------|---------------|----------|
/// | 1 | > 0 | `x` buys all it needs | `x` receives `p[x]`, `y` sends `p[x]/(1-w)` |
/// | 2 | > 0 | `y` sells all it has | `y` sends `-p[y]`, `x` receives `-(1-w)p[y]` |
/// | 3 | < 0 | `x` sells all it has | `x` sends `-p[x]`, `y` receives `-(1-w)p[x]` |
/// | 4 | < 0 | `y` buys all it needs | `y` receives `p[y]`, `x` sends `p[y]/(1-w)` |
///
/// When both sides match exactly the `x`-limited case is used and both
/// residuals become zero.
pub fn settle_pair(x: usize, y: usize, p: &mut [f64], w: f64) -> Result<Settlement, CommunityError> {
    let (px, py) = (p[x], p[y]);
    if !(px * py < 0.0) || !(0.0..1.0).contains(&w) || x == y {
        return Err(CommunityError::Precondition { x, y, px, py, w });
    }
    let keep = 1.0 - w;
    let (seller, buyer, sent, received, case);
    if px > 0.0 {
        let offer = -keep * py;
        (seller, buyer) = (y, x);
        if px <= offer {
            (case, received, sent) = (1, px, px / keep);
            p[x] = 0.0;
            p[y] = if px == offer { 0.0 } else { py + sent };
        } else {
            (case, received, sent) = (2, offer, -py);
            p[x] = px - received;
            p[y] = 0.0;
        }
    } else {
        let offer = -keep * px;
        (seller, buyer) = (x, y);
        if offer <= py {
            (case, received, sent) = (3, offer, -px);
            p[x] = 0.0;
            p[y] = if offer == py { 0.0 } else { py - received };
        } else {
            (case, received, sent) = (4, py, py / keep);
            p[x] = px + sent;
            p[y] = 0.0;
        }
    }
    // floating-point remainders must not flip a sign
    for (i, before) in [(x, px), (y, py)] {
        if p[i] * before < 0.0 {
            p[i] = 0.0;
        }
    }
    Ok(Settlement { seller, buyer, sent_kw: sent, received_kw: received, loss_kw: sent - received, weight: w, case })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buyer_limited() {
        let mut p = [1.9, -3.0];
        let s = settle_pair(0, 1, &mut p, 0.05).unwrap();
        assert_eq!(s.case, 1);
        assert_eq!((s.buyer, s.seller), (0, 1));
        assert!((s.received_kw - 1.9).abs() < 1e-15);
        assert!((s.sent_kw - 2.0).abs() < 1e-12);
        assert!((s.exchange(1, 0) + 2.0).abs() < 1e-12);
        assert_eq!(p[0], 0.0);
        assert!((p[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lossless_seller_limited() {
        let mut p = [5.0, -2.0];
        let s = settle_pair(0, 1, &mut p, 0.0).unwrap();
        assert_eq!(s.case, 2);
        assert_eq!(s.sent_kw, 2.0);
        assert_eq!(s.received_kw, 2.0);
        assert_eq!(p, [3.0, 0.0]);
    }

    #[test]
    fn mirrored_roles() {
        let mut a = [1.9, -3.0];
        let mut b = [-3.0, 1.9];
        let sa = settle_pair(0, 1, &mut a, 0.05).unwrap();
        let sb = settle_pair(0, 1, &mut b, 0.05).unwrap();
        assert_eq!(sb.case, 4);
        assert_eq!((sb.seller, sb.buyer), (0, 1));
        assert_eq!(sa.sent_kw, sb.sent_kw);
        assert_eq!(sa.received_kw, sb.received_kw);
        assert_eq!(a, [b[1], b[0]]);

        let mut c = [-1.0, 4.0];
        let sc = settle_pair(0, 1, &mut c, 0.1).unwrap();
        assert_eq!(sc.case, 3);
        assert!((sc.received_kw - 0.9).abs() < 1e-15);
        assert_eq!(c[0], 0.0);
        assert!((c[1] - 3.1).abs() < 1e-12);
    }

    #[test]
    fn exact_match_clears_both() {
        let mut p = [2.0, -2.0];
        settle_pair(0, 1, &mut p, 0.0).unwrap();
        assert_eq!(p, [0.0, 0.0]);
        let mut q = [-2.0, 2.0];
        settle_pair(0, 1, &mut q, 0.0).unwrap();
        assert_eq!(q, [0.0, 0.0]);
    }

    #[test]
    fn same_sign_rejected() {
        assert!(settle_pair(0, 1, &mut [1.0, 2.0], 0.1).is_err());
        assert!(settle_pair(0, 1, &mut [1.0, -2.0], 1.0).is_err());
        assert!(settle_pair(0, 1, &mut [0.0, -2.0], 0.1).is_err());
    }
}
