//! Small dense complex linear-algebra helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `(A + Aᴴ) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    a.is_square() && (a - a.adjoint()).norm() <= tol * (1.0 + a.norm())
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Column `i` of the returned matrix pairs with value `i`.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("hermitian eigendecomposition input"));
    }
    let n = a.nrows();
    let eig = SymmetricEigen::try_new(hermitian_part(a), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// `Q diag(d) Qᴴ` for real `d`.
pub fn reconstruct(q: &CMat, d: &[f64]) -> CMat {
    let mut scaled = q.clone();
    for (j, &dj) in d.iter().enumerate() {
        scaled.column_mut(j).scale_mut(dj);
    }
    &scaled * q.adjoint()
}

/// Principal square root of a Hermitian matrix; negative eigenvalues are floored at zero.
pub fn sqrtm_psd(a: &CMat) -> Result<CMat> {
    let (values, vectors) = hermitian_eigen(a)?;
    let roots: Vec<f64> = values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    Ok(hermitian_part(&reconstruct(&vectors, &roots)))
}

/// `‖QᴴQ − I‖_F`.
pub fn unitarity_residual(q: &CMat) -> f64 {
    let n = q.ncols();
    (q.adjoint() * q - CMat::identity(n, n)).norm()
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

/// Column-stacking `vec(A)`.
pub fn vec_cols(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

/// Inverse of [`vec_cols`].
pub fn unvec_cols(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

pub fn diag_real(d: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&x| c64(x, 0.0))))
}

/// Circularly-symmetric complex Gaussian sample with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// phase of `R`'s diagonal folded back into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| complex_normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

pub fn all_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = CMat::from_fn(4, 4, |_, _| complex_normal(&mut rng));
        let a = &g * g.adjoint();
        let (vals, vecs) = hermitian_eigen(&a).unwrap();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        assert!((reconstruct(&vecs, &vals) - &a).norm() < 1e-10);
        assert!(unitarity_residual(&vecs) < 1e-10);
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = CMat::from_fn(3, 3, |_, _| complex_normal(&mut rng));
        let a = &g * g.adjoint();
        let s = sqrtm_psd(&a).unwrap();
        assert!((&s * &s - &a).norm() < 1e-10);
        assert!(is_hermitian(&s, 1e-12));
    }

    #[test]
    fn kron_vec_identity() {
        // vec(A X B) = (Bᵀ ⊗ A) vec(X)
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = CMat::from_fn(2, 3, |_, _| complex_normal(&mut rng));
        let x = CMat::from_fn(3, 2, |_, _| complex_normal(&mut rng));
        let b = CMat::from_fn(2, 2, |_, _| complex_normal(&mut rng));
        let lhs = vec_cols(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec_cols(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = random_unitary(5, &mut rng);
        assert!(unitarity_residual(&q) < 1e-12);
    }
}
