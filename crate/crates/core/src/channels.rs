//! Channel matrices: built-in reference channels, Gaussian and
//! Kronecker-correlated ensembles, SVD factorization, and JSON file I/O.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, complex_normal, unitarity_residual, CMat};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: CMat,
}

impl ChannelMatrix {
    pub fn new(entries: CMat) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::DimensionMismatch("channel dimensions must be positive".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("channel entries"));
        }
        Ok(Self { entries })
    }

    /// Row-major construction from `(re, im)` pairs.
    pub fn from_rows(n_r: usize, n_t: usize, values: &[(f64, f64)]) -> Result<Self> {
        if values.len() != n_r * n_t {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {n_r}x{n_t} channel, got {}",
                n_r * n_t,
                values.len()
            )));
        }
        Self::new(CMat::from_fn(n_r, n_t, |r, c| {
            let (re, im) = values[r * n_t + c];
            c64(re, im)
        }))
    }

    pub fn n_r(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &CMat {
        &self.entries
    }

    pub fn into_matrix(self) -> CMat {
        self.entries
    }
}

/// `H = U diag(σ_H) V_Hᴴ` with square unitary factors.
///
/// `sigma_h` has `min(N_r, N_t)` entries, sorted descending.
#[derive(Debug, Clone)]
pub struct ChannelFactors {
    pub u: CMat,
    pub sigma_h: Vec<f64>,
    pub v_h: CMat,
}

impl ChannelFactors {
    /// Singular values padded with zeros (or truncated) to length `n`, the
    /// square virtual-channel size used when forming `W`.
    pub fn sigma_h_padded(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.sigma_h.get(i).copied().unwrap_or(0.0)).collect()
    }

    pub fn reconstruct(&self) -> CMat {
        let (n_r, n_t) = (self.u.nrows(), self.v_h.nrows());
        let mut s = CMat::zeros(n_r, n_t);
        for (i, &v) in self.sigma_h.iter().enumerate() {
            s[(i, i)] = c64(v, 0.0);
        }
        &self.u * s * self.v_h.adjoint()
    }
}

/// Complete an orthonormal set of columns to a square unitary matrix using
/// Gram-Schmidt against the standard basis.
fn complete_unitary(cols: &CMat, n: usize) -> CMat {
    let mut basis: Vec<nalgebra::DVector<Complex64>> =
        cols.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while basis.len() < n {
        let mut v = nalgebra::DVector::<Complex64>::zeros(n);
        v[e] = c64(1.0, 0.0);
        e += 1;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / c64(norm, 0.0));
        }
    }
    CMat::from_columns(&basis)
}

pub fn svd_factor(h: &ChannelMatrix) -> Result<ChannelFactors> {
    let a = h.matrix();
    let (n_r, n_t) = a.shape();
    let svd = nalgebra::SVD::try_new(a.clone(), true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let u_thin = svd.u.expect("requested U");
    let vt_thin = svd.v_t.expect("requested Vᴴ");
    let r = svd.singular_values.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .total_cmp(&svd.singular_values[i])
            .then(i.cmp(&j))
    });
    let sigma_h: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = CMat::from_fn(n_r, r, |row, c| u_thin[(row, order[c])]);
    let v_sorted = CMat::from_fn(n_t, r, |row, c| vt_thin[(order[c], row)].conj());
    let factors = ChannelFactors {
        u: complete_unitary(&u_sorted, n_r),
        sigma_h,
        v_h: complete_unitary(&v_sorted, n_t),
    };
    if unitarity_residual(&factors.u) > 1e-9 || unitarity_residual(&factors.v_h) > 1e-9 {
        return Err(Error::NumericalFailure("SVD factors are not unitary".into()));
    }
    Ok(factors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinChannel {
    H1,
    H2,
    H4x4,
}

impl std::str::FromStr for BuiltinChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h1" => Ok(Self::H1),
            "h2" => Ok(Self::H2),
            "h4x4" => Ok(Self::H4x4),
            _ => Err(Error::UnknownChannel(s.to_string())),
        }
    }
}

pub fn builtin(name: BuiltinChannel) -> ChannelMatrix {
    let m = match name {
        BuiltinChannel::H1 => ChannelMatrix::from_rows(
            2,
            2,
            &[(2.0, 0.0), (1.0, 0.0), (1.0, 0.0), (1.0, 0.0)],
        ),
        BuiltinChannel::H2 => ChannelMatrix::from_rows(
            2,
            2,
            &[(1.98, 0.12), (0.0124, -0.0016), (-0.2487, -0.0314), (0.0992, -0.1)],
        ),
        BuiltinChannel::H4x4 => ChannelMatrix::from_rows(
            4,
            4,
            &[
                (-1.5362, 0.3151),
                (0.5714, 0.9123),
                (0.1394, -0.3407),
                (-0.0085, 0.0081),
                (-1.5571, 1.0171),
                (-0.3071, 0.3765),
                (-0.3073, 0.5680),
                (-0.0035, 0.0041),
                (0.4550, -0.2484),
                (0.7266, -1.2195),
                (0.0780, 0.1645),
                (-0.0131, 0.0008),
                (-0.2278, 3.1243),
                (-0.6890, -0.3397),
                (0.0175, -0.2322),
                (-0.0045, -0.0064),
            ],
        ),
    };
    m.expect("built-in channels are well formed")
}

pub fn builtin_by_name(name: &str) -> Result<ChannelMatrix> {
    Ok(builtin(name.parse()?))
}

fn gaussian_matrix(n_r: usize, n_t: usize, rng: &mut ChaCha8Rng) -> CMat {
    // row-major draw order so the stream layout matches the file format
    let mut values = Vec::with_capacity(n_r * n_t);
    for _ in 0..n_r * n_t {
        values.push(complex_normal(rng));
    }
    CMat::from_fn(n_r, n_t, |r, c| values[r * n_t + c])
}

/// I.i.d. `CN(0, 1)` entries, deterministic in `seed`.
pub fn random_gaussian(n_r: usize, n_t: usize, seed: u64) -> Result<ChannelMatrix> {
    if n_r == 0 || n_t == 0 {
        return Err(Error::DimensionMismatch("channel dimensions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ChannelMatrix::new(gaussian_matrix(n_r, n_t, &mut rng))
}

/// Exponential correlation matrix `R[i][j] = ρ^{|i−j|}`.
pub fn exponential_correlation(n: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| rho.powi((i as i32 - j as i32).abs()))
}

fn real_sqrt_psd(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = nalgebra::SymmetricEigen::try_new(r.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("correlation eigensolver did not converge".into()))?;
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

/// `H = R_r^{1/2} H_w R_t^{1/2}` with exponential correlation on both sides.
///
/// `H_w` is drawn from the same stream as [`random_gaussian`], so `ρ = 0`
/// reproduces the uncorrelated ensemble draw-for-draw.
pub fn kronecker_correlated(
    n_r: usize,
    n_t: usize,
    rho_r: f64,
    rho_t: f64,
    seed: u64,
) -> Result<ChannelMatrix> {
    for rho in [rho_r, rho_t] {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidCorrelation(rho));
        }
    }
    let w = random_gaussian(n_r, n_t, seed)?.into_matrix();
    let to_complex = |m: DMatrix<f64>| m.map(|x| c64(x, 0.0));
    let mut h = w;
    if rho_r != 0.0 {
        h = to_complex(real_sqrt_psd(&exponential_correlation(n_r, rho_r))?) * h;
    }
    if rho_t != 0.0 {
        h *= to_complex(real_sqrt_psd(&exponential_correlation(n_t, rho_t))?);
    }
    ChannelMatrix::new(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleKind {
    Fixed { channel: FixedChannel },
    Gaussian { n_r: usize, n_t: usize },
    Kronecker { n_r: usize, n_t: usize, rho_r: f64, rho_t: f64 },
}

/// Plain row-major copy of a channel, used where the ensemble is serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedChannel {
    pub n_r: usize,
    pub n_t: usize,
    pub entries: Vec<[f64; 2]>,
}

/// A reproducible sequence of channel draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEnsemble {
    pub kind: EnsembleKind,
    pub draws: usize,
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl ChannelEnsemble {
    pub fn fixed(h: ChannelMatrix, draws: usize) -> Self {
        let m = h.matrix();
        let entries = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| [m[(r, c)].re, m[(r, c)].im])
            .collect();
        Self {
            kind: EnsembleKind::Fixed {
                channel: FixedChannel {
                    n_r: h.n_r(),
                    n_t: h.n_t(),
                    entries,
                },
            },
            draws,
            seed: 0,
        }
    }

    pub fn gaussian(n_r: usize, n_t: usize, draws: usize, seed: u64) -> Self {
        Self {
            kind: EnsembleKind::Gaussian { n_r, n_t },
            draws,
            seed,
        }
    }

    pub fn kronecker(n_r: usize, n_t: usize, rho_r: f64, rho_t: f64, draws: usize, seed: u64) -> Self {
        Self {
            kind: EnsembleKind::Kronecker { n_r, n_t, rho_r, rho_t },
            draws,
            seed,
        }
    }

    /// Seed of draw `i`; independent of how many draws are requested.
    pub fn draw_seed(&self, i: usize) -> u64 {
        splitmix64(self.seed ^ splitmix64(i as u64))
    }

    pub fn draw(&self, i: usize) -> Result<ChannelMatrix> {
        match &self.kind {
            EnsembleKind::Fixed { channel } => {
                let values: Vec<(f64, f64)> = channel.entries.iter().map(|p| (p[0], p[1])).collect();
                ChannelMatrix::from_rows(channel.n_r, channel.n_t, &values)
            }
            EnsembleKind::Gaussian { n_r, n_t } => random_gaussian(*n_r, *n_t, self.draw_seed(i)),
            EnsembleKind::Kronecker { n_r, n_t, rho_r, rho_t } => {
                kronecker_correlated(*n_r, *n_t, *rho_r, *rho_t, self.draw_seed(i))
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Result<ChannelMatrix>> + '_ {
        (0..self.draws).map(move |i| self.draw(i))
    }
}

/// On-disk channel representation.
#[derive(Debug, Serialize, Deserialize)]
struct ChannelFile {
    n_r: usize,
    n_t: usize,
    entries: Vec<[f64; 2]>,
}

pub fn parse_channel(text: &str) -> Result<ChannelMatrix> {
    let file: ChannelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.n_r == 0 || file.n_t == 0 {
        return Err(Error::DimensionMismatch("n_r and n_t must be positive".into()));
    }
    let values: Vec<(f64, f64)> = file.entries.iter().map(|p| (p[0], p[1])).collect();
    ChannelMatrix::from_rows(file.n_r, file.n_t, &values)
}

pub fn channel_to_json(h: &ChannelMatrix) -> String {
    let m = h.matrix();
    let entries = (0..m.nrows())
        .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
        .map(|(r, c)| [m[(r, c)].re, m[(r, c)].im])
        .collect();
    let file = ChannelFile {
        n_r: h.n_r(),
        n_t: h.n_t(),
        entries,
    };
    serde_json::to_string_pretty(&file).expect("channel serializes")
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<ChannelMatrix> {
    parse_channel(&std::fs::read_to_string(path)?)
}

pub fn save_channel(h: &ChannelMatrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, channel_to_json(h) + "\n")?;
    Ok(())
}

/// Additive noise with variance `σ²` per complex dimension; `σ² = 1/SNR`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma2: f64,
}

impl NoiseModel {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise variance must be positive, got {sigma2}")));
        }
        Ok(Self { sigma2 })
    }

    pub fn from_snr_linear(snr: f64) -> Result<Self> {
        Self::new(1.0 / snr)
    }

    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::from_snr_linear(10f64.powf(snr_db / 10.0))
    }

    /// Per-bit SNR convention: `SNR = SNR_b · log₂M`.
    pub fn from_snr_b_db(snr_b_db: f64, order: usize) -> Result<Self> {
        Self::from_snr_linear(10f64.powf(snr_b_db / 10.0) * (order as f64).log2())
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn snr(&self) -> f64 {
        1.0 / self.sigma2
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr().log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unitary;

    fn cond(f: &ChannelFactors) -> f64 {
        f.sigma_h[0] / f.sigma_h.last().unwrap()
    }

    #[test]
    fn identity_svd() {
        let h = ChannelMatrix::new(CMat::identity(2, 2)).unwrap();
        let f = svd_factor(&h).unwrap();
        assert!((f.sigma_h[0] - 1.0).abs() < 1e-14 && (f.sigma_h[1] - 1.0).abs() < 1e-14);
        assert!((f.reconstruct() - h.matrix()).norm() < 1e-12);
    }

    #[test]
    fn h1_singular_values() {
        let f = svd_factor(&builtin(BuiltinChannel::H1)).unwrap();
        let s5 = 5f64.sqrt();
        // eigenvalues of H₁ᵀH₁ = [[5,3],[3,2]] are (7 ± 3√5)/2
        let l1 = (7.0 + 3.0 * s5) / 2.0;
        let l2 = (7.0 - 3.0 * s5) / 2.0;
        assert!((f.sigma_h[0] - l1.sqrt()).abs() < 1e-12);
        assert!((f.sigma_h[1] - l2.sqrt()).abs() < 1e-12);
        // H₁ is symmetric positive definite, so these are its eigenvalues (3 ± √5)/2
        assert!((f.sigma_h[0] - 2.618_033_988_749_895).abs() < 1e-12);
        assert!((f.sigma_h[1] - 0.381_966_011_250_105).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_svd() {
        let h = ChannelMatrix::new(CMat::zeros(2, 2)).unwrap();
        let f = svd_factor(&h).unwrap();
        assert_eq!(f.sigma_h, vec![0.0, 0.0]);
        assert!(unitarity_residual(&f.u) < 1e-12 && unitarity_residual(&f.v_h) < 1e-12);
    }

    #[test]
    fn rectangular_svd_reconstructs() {
        for (r, c) in [(10, 4), (4, 10), (3, 3)] {
            let h = random_gaussian(r, c, 17).unwrap();
            let f = svd_factor(&h).unwrap();
            assert_eq!(f.sigma_h.len(), r.min(c));
            assert_eq!(f.u.shape(), (r, r));
            assert_eq!(f.v_h.shape(), (c, c));
            assert!((f.reconstruct() - h.matrix()).norm() < 1e-10);
            assert!(unitarity_residual(&f.u) < 1e-10 && unitarity_residual(&f.v_h) < 1e-10);
        }
    }

    #[test]
    fn svd_large_random() {
        let h = random_gaussian(100, 100, 1).unwrap();
        let f = svd_factor(&h).unwrap();
        assert!((f.reconstruct() - h.matrix()).norm() < 1e-10);
        assert!(f.sigma_h.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn singular_values_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for seed in 0..5 {
            let h = random_gaussian(5, 5, seed).unwrap();
            let q1 = random_unitary(5, &mut rng);
            let q2 = random_unitary(5, &mut rng);
            let rotated = ChannelMatrix::new(&q1 * h.matrix() * &q2).unwrap();
            let a = svd_factor(&h).unwrap().sigma_h;
            let b = svd_factor(&rotated).unwrap().sigma_h;
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn builtin_values() {
        let h1 = builtin(BuiltinChannel::H1);
        assert_eq!(h1.matrix()[(0, 0)], c64(2.0, 0.0));
        assert_eq!(h1.matrix()[(1, 1)], c64(1.0, 0.0));
        let h2 = builtin(BuiltinChannel::H2);
        assert_eq!(h2.matrix()[(0, 1)], c64(0.0124, -0.0016));
        assert_eq!(h2.matrix()[(1, 0)], c64(-0.2487, -0.0314));
        let h4 = builtin(BuiltinChannel::H4x4);
        assert_eq!(h4.matrix()[(0, 0)], c64(-1.5362, 0.3151));
        assert_eq!(h4.matrix()[(3, 1)], c64(-0.6890, -0.3397));
        assert!(matches!(builtin_by_name("h9"), Err(Error::UnknownChannel(_))));
    }

    #[test]
    fn gaussian_determinism_and_shape() {
        let a = random_gaussian(10, 4, 7).unwrap();
        let b = random_gaussian(10, 4, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.n_r(), a.n_t()), (10, 4));
        assert_ne!(a, random_gaussian(10, 4, 8).unwrap());
    }

    #[test]
    fn gaussian_unit_variance() {
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|s| random_gaussian(1, 1, s).unwrap().matrix()[(0, 0)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean power {mean}");
    }

    #[test]
    fn kronecker_zero_rho_matches_gaussian() {
        for seed in 0..5 {
            assert_eq!(
                kronecker_correlated(4, 3, 0.0, 0.0, seed).unwrap(),
                random_gaussian(4, 3, seed).unwrap()
            );
        }
    }

    #[test]
    fn kronecker_row_covariance() {
        let (n_r, n_t, rho) = (2, 3, 0.7);
        let draws = 10_000;
        let mut cov = CMat::zeros(n_t, n_t);
        for seed in 0..draws {
            let h = kronecker_correlated(n_r, n_t, 0.5, rho, seed).unwrap();
            for r in 0..n_r {
                let row = h.matrix().row(r);
                cov += row.transpose() * row.map(|z| z.conj());
            }
        }
        cov /= c64((draws * n_r as u64) as f64, 0.0);
        let target = exponential_correlation(n_t, rho);
        for i in 0..n_t {
            for j in 0..n_t {
                assert!((cov[(i, j)] - c64(target[(i, j)], 0.0)).norm() < 0.05, "{i},{j}: {}", cov[(i, j)]);
            }
        }
    }

    #[test]
    fn kronecker_high_rho_worse_conditioning() {
        let a = svd_factor(&kronecker_correlated(4, 4, 0.0, 0.0, 21).unwrap()).unwrap();
        let b = svd_factor(&kronecker_correlated(4, 4, 0.99, 0.99, 21).unwrap()).unwrap();
        assert!(cond(&b) > cond(&a));
        assert!(matches!(kronecker_correlated(2, 2, 1.0, 0.0, 0), Err(Error::InvalidCorrelation(_))));
        assert!(matches!(kronecker_correlated(2, 2, 0.0, -0.1, 0), Err(Error::InvalidCorrelation(_))));
    }

    #[test]
    fn file_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.json");
        for h in [builtin(BuiltinChannel::H1), builtin(BuiltinChannel::H4x4), random_gaussian(3, 2, 5).unwrap()] {
            save_channel(&h, &path).unwrap();
            assert_eq!(load_channel(&path).unwrap(), h);
        }
        let bad = r#"{"n_r": 2, "n_t": 2, "entries": [[1,0],[0,0],[0,1]]}"#;
        assert!(matches!(parse_channel(bad), Err(Error::DimensionMismatch(_))));
        assert!(matches!(parse_channel(""), Err(Error::Parse { .. })));
        match parse_channel("{\n  \"n_r\": 2,\n  oops") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_channel(dir.path().join("missing.json")), Err(Error::Io(_))));
    }

    #[test]
    fn snr_b_conversion() {
        let n = NoiseModel::from_snr_b_db(0.0, 16).unwrap();
        assert!((n.sigma2() - 0.25).abs() < 1e-15);
        assert!(NoiseModel::new(0.0).is_err());
    }
}
