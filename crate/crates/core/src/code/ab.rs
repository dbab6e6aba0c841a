use super::ParityCheckMatrix;
use crate::error::{Error, Result};

pub(crate) fn is_prime(p: usize) -> bool {
    if p < 2 {
        return false;
    }
    (2..)
        .take_while(|d| d * d <= p)
        .all(|d| !p.is_multiple_of(d))
}

/// Builds the `(gamma, p)` array-based code: a `gamma x p` grid of `p x p`
/// circulants where block `(r, c)` is `sigma^(r*c)`, with
/// `sigma^s[i][j] = 1` iff `j = i + s (mod p)`.
pub fn build_ab_code(gamma: usize, p: usize) -> Result<ParityCheckMatrix> {
    if !is_prime(p) {
        return Err(Error::InvalidCodeParams(format!("p = {p} is not prime")));
    }
    if gamma < 2 || gamma > p {
        return Err(Error::InvalidCodeParams(format!(
            "gamma = {gamma} outside [2, {p}]"
        )));
    }
    let entries = (0..gamma).flat_map(move |r| {
        (0..p).flat_map(move |c| {
            let shift = (r * c) % p;
            (0..p).map(move |i| (r * p + i, c * p + (i + shift) % p))
        })
    });
    ParityCheckMatrix::from_entries(gamma * p, p * p, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ab_3_5_shape_and_weights() {
        let h = build_ab_code(3, 5).unwrap();
        assert_eq!((h.rows(), h.cols()), (15, 25));
        assert!(h.col_weights().iter().all(|&w| w == 3));
        assert!(h.row_weights().iter().all(|&w| w == 5));
        assert_eq!(h.num_entries(), 75);
    }

    #[test]
    fn first_block_row_is_identity() {
        let h = build_ab_code(3, 5).unwrap();
        let d = h.to_dense();
        for c in 0..5 {
            for i in 0..5 {
                for j in 0..5 {
                    assert_eq!(d[i][c * 5 + j], u8::from(i == j));
                }
            }
        }
    }

    #[test]
    fn block_2_3_is_sigma_one() {
        // sigma^6 = sigma^1 for p = 5: entry (i, i+1 mod 5)
        let d = build_ab_code(3, 5).unwrap().to_dense();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(d[10 + i][15 + j], u8::from(j == (i + 1) % 5), "({i},{j})");
            }
        }
    }

    #[test]
    fn weights_hold_for_several_parameters() {
        for (g, p) in [(2, 3), (3, 7), (4, 7), (5, 11), (3, 13)] {
            let h = build_ab_code(g, p).unwrap();
            assert!(h.col_weights().iter().all(|&w| w == g));
            assert!(h.row_weights().iter().all(|&w| w == p));
            let rate = h.rate();
            assert!(rate > 0.0 && rate < 1.0);
        }
    }

    #[test]
    fn ab_rank() {
        // rank(H(gamma, p)) = gamma * p - gamma + 1
        assert_eq!(build_ab_code(3, 5).unwrap().rank_gf2(), 13);
        assert_eq!(build_ab_code(3, 7).unwrap().rank_gf2(), 19);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_ab_code(3, 6).is_err());
        assert!(build_ab_code(1, 5).is_err());
        assert!(build_ab_code(6, 5).is_err());
        assert!(build_ab_code(2, 1).is_err());
    }
}
