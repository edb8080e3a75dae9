//! Storage-and-retrieval channels on single-rail logical registers.
//!
//! Logical basis: `|i1 ... iN>` with `i1` the most significant bit, where
//! `|0>` of mode r is the vacuum and `|1>` is the mode's single-photon
//! wavepacket. The retrieval map multiplies matrix elements per mode by
//! `1`, `1 - |f_r|^2` (loss folded from the excited population into the
//! vacuum), `conj(f_r)`, `f_r`, or `|f_r|^2`, and is identical to the
//! tensor product of per-mode amplitude-damping channels with Kraus pair
//! `K0 = |0><0| + f |1><1|`, `K1 = sqrt(1 - |f|^2) |0><1|`. Both routes
//! are implemented independently, plus a full Fock-space oracle.

use crate::error::{Error, Result};
use crate::fockspace::{FockSpace, ModeGrid, TruncatedFockRegister};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

const HERM_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-9;
/// Eigenvalues in `[PSD_TOL, 0)` are clipped to zero inside matrix
/// functions; anything lower is rejected.
const EIG_CLIP: f64 = 1e-9;

/// Physical encoding label of a logical register. The retrieval map is the
/// same in all three; converting between them is a pure relabeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    #[default]
    SingleRail,
    Path,
    Polarization,
}

/// Density matrix over `N` single-rail logical modes.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalDensityMatrix {
    n_qubits: usize,
    matrix: DMatrix<Complex64>,
    encoding: Encoding,
}

impl LogicalDensityMatrix {
    /// Validate and wrap a `2^N x 2^N` density matrix.
    pub fn new(n_qubits: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        if matrix.nrows() != dim {
            return Err(Error::DimensionMismatch { left: matrix.nrows(), right: dim });
        }
        let asym = (&matrix - matrix.adjoint()).camax();
        if asym > HERM_TOL {
            return Err(Error::NotHermitian(asym));
        }
        let tr = matrix.diagonal().sum();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min_eig = hermitian_eigenvalues(&matrix)
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if min_eig < PSD_TOL {
            return Err(Error::NotPsd(min_eig));
        }
        Ok(LogicalDensityMatrix {
            n_qubits,
            matrix,
            encoding: Encoding::SingleRail,
        })
    }

    /// Rank-1 register `|psi><psi|` from a normalized state vector.
    pub fn from_pure(n_qubits: usize, psi: &DVector<Complex64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if psi.len() != dim {
            return Err(Error::DimensionMismatch { left: psi.len(), right: dim });
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("state norm {norm} != 1")));
        }
        LogicalDensityMatrix::new(n_qubits, psi * psi.adjoint())
    }

    /// The maximally path-entangled single-photon state
    /// `(|10> - |01>) / sqrt(2)` as a density matrix.
    pub fn bell_singlet() -> Self {
        LogicalDensityMatrix::from_pure(2, &bell_singlet_state()).expect("valid Bell state")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    /// Relabel the register between single-rail, path and polarization
    /// encodings. The matrix is untouched; only the metadata changes.
    pub fn relabel(mut self, encoding: Encoding) -> Self {
        self.encoding = encoding;
        self
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Serialize as row-major `(re, im)` pairs in the documented basis
    /// order (`|i1 ... iN>`, `i1` most significant).
    pub fn to_json(&self) -> String {
        let elements: Vec<(f64, f64)> = (0..self.matrix.nrows())
            .flat_map(|r| {
                let m = &self.matrix;
                (0..m.ncols()).map(move |c| (m[(r, c)].re, m[(r, c)].im))
            })
            .collect();
        serde_json::to_string(&DensityDoc {
            n_qubits: self.n_qubits,
            encoding: self.encoding,
            elements,
        })
        .expect("density matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DensityDoc = serde_json::from_str(text)?;
        let dim = 1usize << doc.n_qubits;
        if doc.elements.len() != dim * dim {
            return Err(Error::DimensionMismatch { left: doc.elements.len(), right: dim * dim });
        }
        let matrix = DMatrix::from_fn(dim, dim, |r, c| {
            let (re, im) = doc.elements[r * dim + c];
            Complex64::new(re, im)
        });
        Ok(LogicalDensityMatrix::new(doc.n_qubits, matrix)?.relabel(doc.encoding))
    }
}

#[derive(Serialize, Deserialize)]
struct DensityDoc {
    n_qubits: usize,
    encoding: Encoding,
    elements: Vec<(f64, f64)>,
}

/// `(|10> - |01>) / sqrt(2)` in the documented basis order.
pub fn bell_singlet_state() -> DVector<Complex64> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DVector::from_vec(vec![Complex64::ZERO, -s, s, Complex64::ZERO])
}

/// Per-memory complex attenuation factors, one per spatially separated
/// ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    factors: Vec<Complex64>,
}

impl ChannelParams {
    pub fn new(factors: Vec<Complex64>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("at least one attenuation factor".into()));
        }
        for f in &factors {
            let mag = f.norm();
            if mag > 1.0 + 1e-9 {
                return Err(Error::UnphysicalAttenuation(mag));
            }
        }
        Ok(ChannelParams { factors })
    }

    pub fn uniform(f: Complex64, n: usize) -> Result<Self> {
        ChannelParams::new(vec![f; n])
    }

    /// From efficiencies, taking the phase-corrected real amplitudes
    /// `f_r = sqrt(eta_r)`.
    pub fn from_efficiencies(etas: &[f64]) -> Result<Self> {
        for &eta in etas {
            if !(0.0..=1.0 + 1e-12).contains(&eta) {
                return Err(Error::InvalidParameter(format!("efficiency {eta} outside [0, 1]")));
            }
        }
        ChannelParams::new(etas.iter().map(|&e| Complex64::new(e.sqrt(), 0.0)).collect())
    }

    /// Phase-shifter correction: replace every `f_r` by `|f_r|`.
    pub fn phase_corrected(&self) -> ChannelParams {
        ChannelParams {
            factors: self.factors.iter().map(|f| Complex64::new(f.norm(), 0.0)).collect(),
        }
    }

    pub fn factors(&self) -> &[Complex64] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

fn bit(index: usize, mode: usize, n_modes: usize) -> usize {
    (index >> (n_modes - 1 - mode)) & 1
}

/// Per-mode element weight of the retrieval map.
fn mode_weight(m_r: usize, n_r: usize, i_r: usize, j_r: usize, f: Complex64) -> Complex64 {
    match (m_r, n_r, i_r, j_r) {
        (0, 0, 0, 0) => Complex64::ONE,
        (0, 0, 1, 1) => Complex64::new(1.0 - f.norm_sqr(), 0.0),
        (0, 1, 0, 1) => f.conj(),
        (1, 0, 1, 0) => f,
        (1, 1, 1, 1) => Complex64::new(f.norm_sqr(), 0.0),
        _ => Complex64::ZERO,
    }
}

/// Re-symmetrize a channel output and panic if the drift exceeds the
/// documented tripwire.
fn hermitize(matrix: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let drift = (&matrix - matrix.adjoint()).camax();
    assert!(
        drift < 1e-12,
        "channel output drifted from Hermiticity by {drift:e}"
    );
    (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Single-qubit storage and retrieval:
/// `[[rho00 + (1-|f|^2) rho11, conj(f) rho01], [f rho10, |f|^2 rho11]]`.
pub fn store_retrieve_qubit(rho: &LogicalDensityMatrix, f: Complex64) -> Result<LogicalDensityMatrix> {
    if rho.n_qubits() != 1 {
        return Err(Error::DimensionMismatch { left: rho.n_qubits(), right: 1 });
    }
    store_retrieve_nqubit(rho, &ChannelParams::new(vec![f])?)
}

/// N-qubit storage and retrieval by the elementwise per-mode rule.
pub fn store_retrieve_nqubit(
    rho: &LogicalDensityMatrix,
    params: &ChannelParams,
) -> Result<LogicalDensityMatrix> {
    let n = rho.n_qubits();
    if params.len() != n {
        return Err(Error::DimensionMismatch { left: params.len(), right: n });
    }
    let dim = 1usize << n;
    let fs = params.factors();
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for m in 0..dim {
        for nn in 0..dim {
            let mut acc = Complex64::ZERO;
            for i in 0..dim {
                'j: for j in 0..dim {
                    let mut w = Complex64::ONE;
                    for (r, &f) in fs.iter().enumerate() {
                        let wr = mode_weight(bit(m, r, n), bit(nn, r, n), bit(i, r, n), bit(j, r, n), f);
                        if wr == Complex64::ZERO {
                            continue 'j;
                        }
                        w *= wr;
                    }
                    acc += rho.matrix()[(i, j)] * w;
                }
            }
            out[(m, nn)] = acc;
        }
    }
    let out = LogicalDensityMatrix::new(n, hermitize(out))?;
    Ok(out.relabel(rho.encoding()))
}

/// The same channel as the tensor product of per-mode Kraus pairs;
/// kept as an independent route for cross-validation.
pub fn store_retrieve_nqubit_kraus(
    rho: &LogicalDensityMatrix,
    params: &ChannelParams,
) -> Result<LogicalDensityMatrix> {
    let n = rho.n_qubits();
    if params.len() != n {
        return Err(Error::DimensionMismatch { left: params.len(), right: n });
    }
    let dim = 1usize << n;
    let pairs: Vec<[DMatrix<Complex64>; 2]> = params
        .factors()
        .iter()
        .map(|&f| {
            let mut k0 = DMatrix::<Complex64>::zeros(2, 2);
            k0[(0, 0)] = Complex64::ONE;
            k0[(1, 1)] = f;
            let mut k1 = DMatrix::<Complex64>::zeros(2, 2);
            k1[(0, 1)] = Complex64::new((1.0 - f.norm_sqr()).max(0.0).sqrt(), 0.0);
            [k0, k1]
        })
        .collect();
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for pattern in 0..dim {
        let mut kraus = DMatrix::<Complex64>::identity(1, 1);
        for (r, pair) in pairs.iter().enumerate() {
            kraus = kraus.kronecker(&pair[bit(pattern, r, n)]);
        }
        out += &kraus * rho.matrix() * kraus.adjoint();
    }
    let out = LogicalDensityMatrix::new(n, hermitize(out))?;
    Ok(out.relabel(rho.encoding()))
}

/// Brute-force oracle: embed the logical register into a truncated Fock
/// space with one momentum mode per memory, apply the bosonic pure-loss
/// channel mode by mode, and read the logical block back out.
pub fn store_retrieve_nqubit_fock_oracle(
    rho: &LogicalDensityMatrix,
    params: &ChannelParams,
    cutoff: usize,
) -> Result<LogicalDensityMatrix> {
    let n = rho.n_qubits();
    if params.len() != n {
        return Err(Error::DimensionMismatch { left: params.len(), right: n });
    }
    if cutoff < 1 {
        return Err(Error::InvalidParameter("oracle needs cutoff >= 1".into()));
    }
    let grid = ModeGrid::new(0.0, 1.0, n, 1.0)?;
    let space = FockSpace::new(grid, cutoff)?;
    let fdim = space.dim();
    let ldim = 1usize << n;
    let embed = |logical: usize| -> usize {
        let occ: Vec<usize> = (0..n).map(|r| bit(logical, r, n)).collect();
        space.basis_index(&occ)
    };
    let mut rho_f = DMatrix::<Complex64>::zeros(fdim, fdim);
    for i in 0..ldim {
        for j in 0..ldim {
            rho_f[(embed(i), embed(j))] = rho.matrix()[(i, j)];
        }
    }
    let mut reg = TruncatedFockRegister::from_density(space, rho_f)?;
    for (r, &f) in params.factors().iter().enumerate() {
        reg = reg.apply_mode_loss(r, f)?;
    }
    let mut out = DMatrix::<Complex64>::zeros(ldim, ldim);
    for i in 0..ldim {
        for j in 0..ldim {
            out[(i, j)] = reg.density()[(embed(i), embed(j))];
        }
    }
    let out = LogicalDensityMatrix::new(n, hermitize(out))?;
    Ok(out.relabel(rho.encoding()))
}

/// Retrieved two-memory Bell state with phase-shifter correction: the
/// five-term mixture built term by term from the storage efficiencies.
pub fn bell_state_retrieved(eta_a: f64, eta_b: f64) -> Result<LogicalDensityMatrix> {
    for (label, eta) in [("eta_a", eta_a), ("eta_b", eta_b)] {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!("{label} = {eta} outside [0, 1]")));
        }
    }
    let mut m = DMatrix::<Complex64>::zeros(4, 4);
    let root = (eta_a * eta_b).sqrt();
    m[(0, 0)] = Complex64::new(1.0 - 0.5 * eta_a - 0.5 * eta_b, 0.0); // |00><00|
    m[(2, 2)] = Complex64::new(0.5 * eta_a, 0.0); // |10><10|
    m[(1, 1)] = Complex64::new(0.5 * eta_b, 0.0); // |01><01|
    m[(2, 1)] = Complex64::new(-0.5 * root, 0.0); // |10><01|
    m[(1, 2)] = Complex64::new(-0.5 * root, 0.0); // |01><10|
    LogicalDensityMatrix::new(2, m)
}

/// Real eigenvalues of a Hermitian matrix.
fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// Relative floor below which eigenvalues of a nominally rank-deficient
/// PSD matrix count as numerical noise. Taking square roots amplifies
/// eigensolver noise at scale `eps * lambda_max` into `~1e-8` absolute
/// errors unless those values are zeroed first.
const REL_EIG_FLOOR: f64 = 1e-13;

/// Square roots of the eigenvalues of a Hermitian PSD matrix, with
/// tiny-negative and noise-floor clipping.
fn clipped_sqrt_eigenvalues(eigenvalues: &nalgebra::DVector<f64>) -> Result<Vec<f64>> {
    let max = eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let floor = REL_EIG_FLOOR * max;
    eigenvalues
        .iter()
        .map(|&v| {
            if v < -EIG_CLIP {
                return Err(Error::NotPsd(v));
            }
            Ok(if v < floor { 0.0 } else { v.sqrt() })
        })
        .collect()
}

/// Hermitian square root with noise clipping.
fn psd_sqrt(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let eig = m.clone().symmetric_eigen();
    let roots = clipped_sqrt_eigenvalues(&eig.eigenvalues)?;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        roots.len(),
        roots.into_iter().map(|x| Complex64::new(x, 0.0)),
    ));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Uhlmann fidelity `F(rho, sigma) = tr sqrt(sqrt(rho) sigma sqrt(rho))`,
/// clamped to `[0, 1]`.
pub fn fidelity(rho: &LogicalDensityMatrix, sigma: &LogicalDensityMatrix) -> Result<f64> {
    if rho.matrix().nrows() != sigma.matrix().nrows() {
        return Err(Error::DimensionMismatch {
            left: rho.matrix().nrows(),
            right: sigma.matrix().nrows(),
        });
    }
    let root = psd_sqrt(rho.matrix())?;
    let inner = &root * sigma.matrix() * &root;
    // Numerical drift control before the second eigendecomposition.
    let inner = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = inner.symmetric_eigen();
    let f: f64 = clipped_sqrt_eigenvalues(&eig.eigenvalues)?.into_iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Pure-target shortcut `F = sqrt(<psi| rho |psi>)`.
pub fn fidelity_to_pure(rho: &LogicalDensityMatrix, psi: &DVector<Complex64>) -> Result<f64> {
    if psi.len() != rho.matrix().nrows() {
        return Err(Error::DimensionMismatch { left: psi.len(), right: rho.matrix().nrows() });
    }
    let v = (psi.adjoint() * rho.matrix() * psi)[(0, 0)];
    Ok(v.re.max(0.0).sqrt().clamp(0.0, 1.0))
}

/// Choi matrix of the single-qubit channel, `sum_ij |i><j| (x) C(|i><j|)`,
/// for the complete-positivity property check.
pub fn choi_matrix_qubit(f: Complex64) -> DMatrix<Complex64> {
    let mut choi = DMatrix::<Complex64>::zeros(4, 4);
    for i in 0..2usize {
        for j in 0..2usize {
            // The elementwise rule extended linearly to the matrix unit E_ij.
            let mut unit = DMatrix::<Complex64>::zeros(2, 2);
            unit[(i, j)] = Complex64::ONE;
            let mut mapped = DMatrix::<Complex64>::zeros(2, 2);
            mapped[(0, 0)] = unit[(0, 0)] + Complex64::new(1.0 - f.norm_sqr(), 0.0) * unit[(1, 1)];
            mapped[(0, 1)] = f.conj() * unit[(0, 1)];
            mapped[(1, 0)] = f * unit[(1, 0)];
            mapped[(1, 1)] = Complex64::new(f.norm_sqr(), 0.0) * unit[(1, 1)];
            for r in 0..2 {
                for c in 0..2 {
                    choi[(2 * i + r, 2 * j + c)] = mapped[(r, c)];
                }
            }
        }
    }
    choi
}

/// Ginibre-sampled random density matrix, for oracle cross-checks.
pub fn random_density_matrix(n_qubits: usize, rng: &mut impl Rng) -> LogicalDensityMatrix {
    let dim = 1usize << n_qubits;
    let mut normal = || {
        // Box-Muller from two uniforms.
        let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let g = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(normal(), normal()));
    let mut rho = &g * g.adjoint();
    let tr = rho.diagonal().sum().re;
    rho /= Complex64::new(tr, 0.0);
    // Exact re-symmetrization keeps the constructor's tight tolerances.
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    LogicalDensityMatrix::new(n_qubits, rho).expect("Ginibre matrix is a valid state")
}

/// Format a rectangular numeric grid as CSV with the given header line.
pub fn grid_csv(header: &str, rows: &[Vec<f64>]) -> String {
    let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit(rho00: f64, rho01: Complex64, rho11: f64) -> LogicalDensityMatrix {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = Complex64::new(rho00, 0.0);
        m[(0, 1)] = rho01;
        m[(1, 0)] = rho01.conj();
        m[(1, 1)] = Complex64::new(rho11, 0.0);
        LogicalDensityMatrix::new(1, m).unwrap()
    }

    #[test]
    fn constructor_rejects_invalid_matrices() {
        // Trace != 1
        let m = DMatrix::<Complex64>::identity(2, 2);
        assert!(matches!(LogicalDensityMatrix::new(1, m), Err(Error::InvalidTrace(_))));
        // Non-Hermitian
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = Complex64::ONE;
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(LogicalDensityMatrix::new(1, m), Err(Error::NotHermitian(_))));
        // Negative eigenvalue
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(matches!(LogicalDensityMatrix::new(1, m), Err(Error::NotPsd(_))));
        // Wrong dimension
        let m = DMatrix::<Complex64>::identity(3, 3);
        assert!(LogicalDensityMatrix::new(1, m).is_err());
    }

    #[test]
    fn fock_state_storage_becomes_loss_mixture() {
        let rho = qubit(0.0, Complex64::ZERO, 1.0);
        let eta = 0.64f64;
        let out = store_retrieve_qubit(&rho, Complex64::new(eta.sqrt(), 0.0)).unwrap();
        assert_relative_eq!(out.matrix()[(0, 0)].re, 1.0 - eta, epsilon = 1e-14);
        assert_relative_eq!(out.matrix()[(1, 1)].re, eta, epsilon = 1e-14);
        assert!(out.matrix()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn unit_attenuation_is_identity_channel() {
        let rho = qubit(0.3, Complex64::new(0.2, 0.1), 0.7);
        let out = store_retrieve_qubit(&rho, Complex64::ONE).unwrap();
        assert!((out.matrix() - rho.matrix()).camax() < 1e-15);
    }

    #[test]
    fn plus_state_coherences_scale_with_f() {
        let rho = qubit(0.5, Complex64::new(0.5, 0.0), 0.5);
        let f = Complex64::new(0.8, 0.0);
        let out = store_retrieve_qubit(&rho, f).unwrap();
        assert_relative_eq!(out.matrix()[(0, 1)].re, 0.4, epsilon = 1e-14);
        // Independent Kraus route agrees elementwise.
        let kraus = store_retrieve_nqubit_kraus(&rho, &ChannelParams::new(vec![f]).unwrap()).unwrap();
        assert!((out.matrix() - kraus.matrix()).camax() < 1e-14);
    }

    #[test]
    fn identity_and_full_loss_nqubit() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let rho = random_density_matrix(3, &mut rng);
            let id = ChannelParams::uniform(Complex64::ONE, 3).unwrap();
            let out = store_retrieve_nqubit(&rho, &id).unwrap();
            assert!((out.matrix() - rho.matrix()).camax() < 1e-12);

            let dead = ChannelParams::uniform(Complex64::ZERO, 3).unwrap();
            let out = store_retrieve_nqubit(&rho, &dead).unwrap();
            assert_relative_eq!(out.matrix()[(0, 0)].re, 1.0, epsilon = 1e-12);
            assert!(out.matrix().iter().skip(1).all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn elementwise_rule_matches_fock_oracle_two_qubits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_density_matrix(2, &mut rng);
        let params =
            ChannelParams::new(vec![Complex64::new(0.9, 0.0), Complex64::new(0.6, 0.2)]).unwrap();
        let direct = store_retrieve_nqubit(&rho, &params).unwrap();
        let oracle = store_retrieve_nqubit_fock_oracle(&rho, &params, 2).unwrap();
        assert!((direct.matrix() - oracle.matrix()).camax() < 1e-12);
    }

    #[test]
    fn unphysical_factor_rejected() {
        assert!(matches!(
            ChannelParams::new(vec![Complex64::new(1.1, 0.0)]),
            Err(Error::UnphysicalAttenuation(_))
        ));
    }

    #[test]
    fn bell_state_retrieved_limits() {
        let pure = bell_state_retrieved(1.0, 1.0).unwrap();
        let target = LogicalDensityMatrix::bell_singlet();
        assert!((pure.matrix() - target.matrix()).camax() < 1e-15);

        let dead = bell_state_retrieved(0.0, 0.0).unwrap();
        assert_relative_eq!(dead.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);

        assert!(bell_state_retrieved(1.2, 0.5).is_err());
    }

    #[test]
    fn bell_state_matches_channel_route() {
        let mixture = bell_state_retrieved(1.0, 0.25).unwrap();
        let channel = store_retrieve_nqubit(
            &LogicalDensityMatrix::bell_singlet(),
            &ChannelParams::new(vec![Complex64::ONE, Complex64::new(0.5, 0.0)]).unwrap(),
        )
        .unwrap();
        assert!((mixture.matrix() - channel.matrix()).camax() < 1e-14);
    }

    #[test]
    fn fidelity_examples() {
        // Stored Fock state: F = sqrt(eta).
        let input = qubit(0.0, Complex64::ZERO, 1.0);
        let out = store_retrieve_qubit(&input, Complex64::new(0.9, 0.0)).unwrap();
        assert_relative_eq!(fidelity(&out, &input).unwrap(), 0.9, epsilon = 1e-12);

        // Bell storage at (1, 0): F = 1/2.
        let out = bell_state_retrieved(1.0, 0.0).unwrap();
        let target = LogicalDensityMatrix::bell_singlet();
        assert_relative_eq!(fidelity(&out, &target).unwrap(), 0.5, epsilon = 1e-12);

        // Identical states.
        assert_relative_eq!(fidelity(&target, &target).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_matches_pure_shortcut_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density_matrix(2, &mut rng);
        let target = LogicalDensityMatrix::bell_singlet();
        let f_general = fidelity(&rho, &target).unwrap();
        let f_short = fidelity_to_pure(&rho, &bell_singlet_state()).unwrap();
        assert_relative_eq!(f_general, f_short, epsilon = 1e-10);
        let f_rev = fidelity(&target, &rho).unwrap();
        assert_relative_eq!(f_general, f_rev, epsilon = 1e-10);
    }

    #[test]
    fn relabel_round_trip_keeps_matrix() {
        let rho = LogicalDensityMatrix::bell_singlet();
        let snapshot = rho.matrix().clone();
        assert_eq!(rho.encoding(), Encoding::SingleRail);
        let path = rho.relabel(Encoding::Path);
        assert_eq!(path.encoding(), Encoding::Path);
        let pol = path.relabel(Encoding::Polarization);
        assert_eq!(pol.encoding(), Encoding::Polarization);
        let back = pol.relabel(Encoding::Path);
        assert_eq!(back.encoding(), Encoding::Path);
        assert_eq!(back.matrix(), &snapshot);
    }

    #[test]
    fn choi_matrix_is_psd_for_physical_f() {
        for mag in [0.0, 0.3, 0.7, 1.0] {
            for arg in [0.0, 1.0, 2.5] {
                let f = Complex64::from_polar(mag, arg);
                let choi = choi_matrix_qubit(f);
                let min = choi
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .fold(f64::INFINITY, |a, &b| a.min(b));
                assert!(min > -1e-12, "min eig {min} at f = {f}");
            }
        }
    }

    #[test]
    fn fidelity_monotone_in_efficiency_for_bell_input() {
        let target = LogicalDensityMatrix::bell_singlet();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        for &eta_b in &grid {
            let mut prev = -1.0;
            for &eta_a in &grid {
                let f = fidelity(&bell_state_retrieved(eta_a, eta_b).unwrap(), &target).unwrap();
                assert!(f >= prev - 1e-12, "not monotone at ({eta_a}, {eta_b})");
                prev = f;
            }
        }
    }

    #[test]
    fn json_round_trip_preserves_elements_and_encoding() {
        let rho = LogicalDensityMatrix::bell_singlet().relabel(Encoding::Path);
        let text = rho.to_json();
        let back = LogicalDensityMatrix::from_json(&text).unwrap();
        assert_eq!(back.encoding(), Encoding::Path);
        assert!((back.matrix() - rho.matrix()).camax() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn channel_outputs_are_valid_states(
            seed in 0u64..500,
            mag_a in 0.0f64..1.0,
            mag_b in 0.0f64..1.0,
            arg_a in 0.0f64..std::f64::consts::TAU,
            arg_b in 0.0f64..std::f64::consts::TAU,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density_matrix(2, &mut rng);
            let params = ChannelParams::new(vec![
                Complex64::from_polar(mag_a, arg_a),
                Complex64::from_polar(mag_b, arg_b),
            ]).unwrap();
            // Constructor re-validates trace, Hermiticity and positivity.
            let out = store_retrieve_nqubit(&rho, &params).unwrap();
            prop_assert!(out.min_eigenvalue() > -1e-9);
        }

        #[test]
        fn elementwise_rule_equals_kraus_route(
            seed in 0u64..500,
            n_qubits in 1usize..=3,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density_matrix(n_qubits, &mut rng);
            let factors: Vec<Complex64> = (0..n_qubits)
                .map(|_| Complex64::from_polar(rng.random::<f64>(), rng.random::<f64>() * std::f64::consts::TAU))
                .collect();
            let params = ChannelParams::new(factors).unwrap();
            let a = store_retrieve_nqubit(&rho, &params).unwrap();
            let b = store_retrieve_nqubit_kraus(&rho, &params).unwrap();
            prop_assert!((a.matrix() - b.matrix()).camax() < 1e-12);
        }
    }
}
