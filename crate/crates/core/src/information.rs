//! Entropy and relative entropy in bits.

use crate::dist::{Distribution, JointDistribution};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `−Σ p log₂ p` with `0·log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// `D(p ‖ q)` over matching matrices.
pub fn relative_entropy_bits(p: &Matrix, q: &Matrix) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..p.rows() {
        for k in 0..p.cols() {
            let pj = p[(j, k)];
            if pj <= 0.0 {
                continue;
            }
            let qj = q[(j, k)];
            if qj <= 0.0 {
                return Err(Error::InfiniteDivergence { row: j, col: k });
            }
            total += pj * (pj / qj).log2();
        }
    }
    Ok(total)
}

/// `I(r▶; r◀) = D(r̂ ‖ r▶ ⊗ r◀)` in bits.
pub fn mutual_information(
    joint: &JointDistribution,
    fo: &Distribution,
    bi: &Distribution,
) -> Result<f64> {
    let n = joint.n();
    for len in [fo.len(), bi.len()] {
        if len != n {
            return Err(Error::Dimension {
                expected: n,
                got: len,
            });
        }
    }
    relative_entropy_bits(&joint.values, &Matrix::outer(&fo.values, &bi.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{JointKind, RankKind};

    #[test]
    fn product_joint_has_zero_information() {
        let fo = Distribution::new(vec![0.1, 0.6, 0.3], RankKind::ForwardOut);
        let bi = Distribution::new(vec![0.5, 0.25, 0.25], RankKind::BackwardIn);
        let joint = JointDistribution::new(
            Matrix::outer(&fo.values, &bi.values),
            JointKind::NodeAttraction,
        );
        assert!(mutual_information(&joint, &fo, &bi).unwrap().abs() < 1e-15);
    }

    #[test]
    fn diagonal_joint_has_entropy_of_marginal() {
        let r = vec![0.5, 0.25, 0.125, 0.125];
        let mut m = Matrix::square(4);
        for (i, &p) in r.iter().enumerate() {
            m[(i, i)] = p;
        }
        let joint = JointDistribution::new(m, JointKind::NodeAttraction);
        let d = Distribution::new(r.clone(), RankKind::ForwardOut);
        let i = mutual_information(&joint, &d, &d).unwrap();
        assert!((i - 1.75).abs() < 1e-15);
        assert!((i - entropy_bits(&r)).abs() < 1e-15);

        let u = Distribution::uniform(4, RankKind::ForwardOut);
        let joint =
            JointDistribution::new(Matrix::identity(4).scale(0.25), JointKind::NodeAttraction);
        assert!((mutual_information(&joint, &u, &u).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mass_outside_support_is_infinite() {
        let joint =
            JointDistribution::new(Matrix::identity(2).scale(0.5), JointKind::NodeAttraction);
        let fo = Distribution::new(vec![1.0, 0.0], RankKind::ForwardOut);
        let bi = Distribution::new(vec![0.5, 0.5], RankKind::BackwardIn);
        let err = mutual_information(&joint, &fo, &bi).unwrap_err();
        assert!(err.to_string().contains("infinite divergence"));
    }
}
