use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Batch, Objective};
use crate::error::{Error, Result};
use crate::linalg::{dot, mat_vec, spd_solve, sym_eigenvalues};
use crate::rng::{stream, Purpose};

/// `f(theta) = 1/2 theta' H theta + b' theta + c` with symmetric PSD `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    pub h: DMatrix<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl QuadraticProblem {
    pub fn new(h: DMatrix<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() != b.len() {
            return Err(Error::invalid("H must be d x d and b length d"));
        }
        let asym = (&h - h.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::invalid(format!("H not symmetric (max asymmetry {asym:e})")));
        }
        if h.nrows() > 0 && sym_eigenvalues(&h)[0] < -1e-12 {
            return Err(Error::invalid("H is not positive semi-definite"));
        }
        Ok(QuadraticProblem { h, b, c })
    }

    /// Zero objective of dimension `d`.
    pub fn zero(d: usize) -> Self {
        QuadraticProblem { h: DMatrix::zeros(d, d), b: vec![0.0; d], c: 0.0 }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        0.5 * dot(theta, &mat_vec(&self.h, theta)) + dot(&self.b, theta) + self.c
    }

    /// `H theta + b`
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = mat_vec(&self.h, theta);
        g.iter_mut().zip(&self.b).for_each(|(gi, bi)| *gi += bi);
        g
    }
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn num_samples(&self) -> usize {
        1
    }

    fn loss(&self, theta: &[f64], _batch: Batch<'_>) -> f64 {
        self.value(theta)
    }

    fn grad(&self, theta: &[f64], _batch: Batch<'_>) -> Vec<f64> {
        self.gradient(theta)
    }

    fn as_quadratic(&self) -> Option<&QuadraticProblem> {
        Some(self)
    }
}

pub type QuadraticFamily = Vec<QuadraticProblem>;

/// Heterogeneous quadratic family around a shared base Hessian.
///
/// The base Hessian has eigenvalues log-spaced in `[1, condition]` under a
/// random rotation. Node `i` gets `H_i = base + heterogeneity * S_i` where
/// `S_i` is a random symmetric matrix of unit Frobenius norm; if that leaves
/// `H_i` indefinite, negative eigenvalues are clipped to zero and `1e-6 I`
/// is added. Linear terms are a shared Gaussian vector plus
/// `heterogeneity` times a private one.
pub fn make_quadratic_family(n: usize, d: usize, condition: f64, heterogeneity: f64, seed: u64) -> Result<QuadraticFamily> {
    if n < 1 || d < 1 {
        return Err(Error::invalid("need n >= 1 and d >= 1"));
    }
    if !(condition >= 1.0) || !(heterogeneity >= 0.0) {
        return Err(Error::invalid("need condition >= 1 and heterogeneity >= 0"));
    }
    let mut rng = stream(seed, Purpose::Data, 0);
    let gauss = |rng: &mut crate::rng::StreamRng| -> f64 { rng.sample(StandardNormal) };

    let q = DMatrix::from_fn(d, d, |_, _| gauss(&mut rng)).qr().q();
    let spectrum = DVector::from_fn(d, |k, _| {
        if d == 1 {
            1.0
        } else {
            condition.powf(k as f64 / (d - 1) as f64)
        }
    });
    let base = symmetrize(&q * DMatrix::from_diagonal(&spectrum) * q.transpose());
    let shared_b: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();

    let mut family = Vec::with_capacity(n);
    for i in 0..n {
        let mut node_rng = stream(seed, Purpose::Data, 1 + i as u64);
        let a = DMatrix::from_fn(d, d, |_, _| gauss(&mut node_rng));
        let s = symmetrize(&a + a.transpose());
        let s_norm = s.norm();
        let mut h = base.clone();
        if heterogeneity > 0.0 && s_norm > 0.0 {
            h += s * (heterogeneity / s_norm);
            h = symmetrize(h);
        }
        if sym_eigenvalues(&h)[0] < 0.0 {
            h = psd_repair(h);
        }
        let b: Vec<f64> = shared_b.iter().map(|&sb| sb + heterogeneity * gauss(&mut node_rng)).collect();
        family.push(QuadraticProblem { h, b, c: 0.0 });
    }
    Ok(family)
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn psd_repair(h: DMatrix<f64>) -> DMatrix<f64> {
    let d = h.nrows();
    let eig = h.symmetric_eigen();
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    symmetrize(out + DMatrix::identity(d, d) * 1e-6)
}

/// Minimizer of `sum_i f_i`: solves `(sum H_i) theta = -sum b_i`.
pub fn quadratic_optimum(family: &[QuadraticProblem]) -> Result<Vec<f64>> {
    let (h, b) = aggregate(family)?;
    let rhs: Vec<f64> = b.iter().map(|v| -v).collect();
    spd_solve(&h, &rhs)
}

fn aggregate(family: &[QuadraticProblem]) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let first = family.first().ok_or_else(|| Error::invalid("empty family"))?;
    let d = first.b.len();
    let mut h = DMatrix::zeros(d, d);
    let mut b = vec![0.0; d];
    for q in family {
        if q.b.len() != d {
            return Err(Error::invalid("family members differ in dimension"));
        }
        h += &q.h;
        b.iter_mut().zip(&q.b).for_each(|(x, y)| *x += y);
    }
    Ok((h, b))
}

/// Mean Hessian `H_bar` and mean linear term of a family.
pub fn mean_hessian(family: &[QuadraticProblem]) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let (h, b) = aggregate(family)?;
    let inv = 1.0 / family.len() as f64;
    Ok((h * inv, b.into_iter().map(|v| v * inv).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    /// `|| I - (H_i + mu I)^{-1} H_bar ||_2` per node.
    pub per_node: Vec<f64>,
    /// `mu / (lambda_min(H_bar) + mu)`.
    pub reference: f64,
}

/// How far each node's preconditioned step is from a Newton step.
pub fn similarity_deviation(family: &[QuadraticProblem], mu: f64) -> Result<SimilarityReport> {
    if !(mu >= 0.0) {
        return Err(Error::invalid("mu must be nonnegative"));
    }
    let (h_bar, _) = mean_hessian(family)?;
    let d = h_bar.nrows();
    let lambda_min = sym_eigenvalues(&h_bar)[0];
    let per_node = family
        .iter()
        .map(|q| {
            let shifted = &q.h + DMatrix::identity(d, d) * mu;
            let solved = shifted
                .clone()
                .lu()
                .solve(&h_bar)
                .filter(|m| m.iter().all(|v| v.is_finite()))
                .ok_or_else(|| Error::SingularSystem("H_i + mu I is singular".into()))?;
            let resid = (&shifted * &solved - &h_bar).amax();
            if resid > 1e-8 * h_bar.amax().max(1.0) {
                return Err(Error::SingularSystem("H_i + mu I is singular".into()));
            }
            let m = DMatrix::identity(d, d) - solved;
            Ok(m.singular_values().max())
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = if mu == 0.0 { 0.0 } else { mu / (lambda_min + mu) };
    Ok(SimilarityReport { per_node, reference })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_limit() {
        let fam = make_quadratic_family(4, 6, 10.0, 0.0, 1).unwrap();
        for q in &fam[1..] {
            assert_eq!(q.h, fam[0].h);
            assert_eq!(q.b, fam[0].b);
        }
    }

    #[test]
    fn base_spectrum_is_log_spaced() {
        let fam = make_quadratic_family(2, 5, 16.0, 0.0, 3).unwrap();
        let ev = sym_eigenvalues(&fam[0].h);
        for (k, l) in ev.iter().enumerate() {
            assert!((l - 2f64.powi(k as i32)).abs() < 1e-9, "{ev:?}");
        }
    }

    #[test]
    fn one_dimensional_optimum() {
        let q = QuadraticProblem::new(DMatrix::from_element(1, 1, 2.0), vec![-4.0], 0.0).unwrap();
        let fam = vec![q.clone(), q];
        assert!((quadratic_optimum(&fam).unwrap()[0] - 2.0).abs() < 1e-12);
        assert!((quadratic_optimum(&fam[..1]).unwrap()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_hessians_average_b() {
        let bs = [vec![1.0, 2.0], vec![3.0, -2.0], vec![-1.0, 6.0]];
        let fam: Vec<_> = bs.iter().map(|b| QuadraticProblem::new(DMatrix::identity(2, 2), b.clone(), 0.0).unwrap()).collect();
        let opt = quadratic_optimum(&fam).unwrap();
        assert!((opt[0] + 1.0).abs() < 1e-12 && (opt[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_aggregate() {
        let fam = vec![QuadraticProblem::zero(3)];
        assert!(matches!(quadratic_optimum(&fam), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn diagonal_similarity() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let fam = vec![QuadraticProblem::new(h, vec![0.0; 2], 0.0).unwrap(); 3];
        let rep = similarity_deviation(&fam, 1.0).unwrap();
        assert!(rep.per_node.iter().all(|v| (v - 0.5).abs() < 1e-12));
        assert!((rep.reference - 0.5).abs() < 1e-12);
        let rep = similarity_deviation(&fam, 0.0).unwrap();
        assert!(rep.per_node.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn singular_similarity_with_zero_mu() {
        let fam = vec![QuadraticProblem::zero(2), QuadraticProblem::new(DMatrix::identity(2, 2), vec![0.0; 2], 0.0).unwrap()];
        assert!(matches!(similarity_deviation(&fam, 0.0), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn rejects_asymmetric_or_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(QuadraticProblem::new(a, vec![0.0; 2], 0.0).is_err());
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(QuadraticProblem::new(a, vec![0.0; 2], 0.0).is_err());
    }

    #[test]
    fn psd_repair_clips() {
        let fam = make_quadratic_family(3, 4, 1.0, 50.0, 2).unwrap();
        for q in &fam {
            assert!(sym_eigenvalues(&q.h)[0] >= -1e-12);
        }
    }
}
