//! Truncated multimode Fock-space algebra, used as the brute-force oracle
//! layer behind the logical-basis channels.
//!
//! Continuum quantities are mapped onto a uniform momentum grid by
//! `delta(k - k') -> delta_kk' / dk` and `int dk -> sum dk`. The
//! continuum-normalized field operators carry a weight `sqrt(L / (2 pi dk))`
//! relative to the unit-commutator ladder operators stored here; the quantization length
//! `l_quant` therefore cancels in every physical expectation value, which
//! the tests exercise explicitly.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Dense registers are capped at this dimension; this layer is an oracle,
/// not a performance layer.
pub const MAX_REGISTER_DIM: usize = 4096;

/// Uniform momentum grid of `modes` points spaced `dk`, starting at `k0`,
/// with quantization length `l_quant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeGrid {
    pub k0: f64,
    pub dk: f64,
    pub modes: usize,
    pub l_quant: f64,
}

impl ModeGrid {
    pub fn new(k0: f64, dk: f64, modes: usize, l_quant: f64) -> Result<Self> {
        if modes == 0 || !dk.is_finite() || dk <= 0.0 || !l_quant.is_finite() || l_quant <= 0.0 {
            return Err(Error::InvalidParameter(
                "grid needs modes >= 1, dk > 0, l_quant > 0".into(),
            ));
        }
        Ok(ModeGrid { k0, dk, modes, l_quant })
    }

    pub fn wavenumber(&self, mode: usize) -> f64 {
        self.k0 + mode as f64 * self.dk
    }

    /// Weight `L / (2 pi dk)` relating continuum-normalized ladder operators to
    /// the unit-commutator ones: `a_tilde = sqrt(weight) * a`.
    pub fn weight(&self) -> f64 {
        self.l_quant / (TAU * self.dk)
    }

    fn modes_in(&self, k_lo: f64, k_hi: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.modes).filter(move |&i| {
            let k = self.wavenumber(i);
            k >= k_lo && k <= k_hi
        })
    }
}

/// Spectral amplitude `phi'(k)` of a single-photon wavepacket on a grid.
///
/// Normalized so that `sum |phi'(k_i)|^2 dk = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    grid: ModeGrid,
    amps: Vec<Complex64>,
}

impl SpectralProfile {
    pub const NORM_TOL: f64 = 1e-10;

    pub fn new(grid: ModeGrid, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.modes {
            return Err(Error::DimensionMismatch { left: amps.len(), right: grid.modes });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dk;
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::UnnormalizedProfile(norm));
        }
        Ok(SpectralProfile { grid, amps })
    }

    /// Rescale arbitrary amplitudes onto the unit norm.
    pub fn normalized(grid: ModeGrid, amps: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dk;
        if norm <= 0.0 {
            return Err(Error::UnnormalizedProfile(norm));
        }
        let scale = norm.sqrt().recip();
        SpectralProfile::new(grid, amps.into_iter().map(|a| a * scale).collect())
    }

    /// All amplitude in a single grid mode.
    pub fn delta_at(grid: ModeGrid, mode: usize) -> Result<Self> {
        if mode >= grid.modes {
            return Err(Error::InvalidParameter(format!("mode {mode} outside grid")));
        }
        let mut amps = vec![Complex64::ZERO; grid.modes];
        amps[mode] = Complex64::new(grid.dk.sqrt().recip(), 0.0);
        SpectralProfile::new(grid, amps)
    }

    /// Discretized Gaussian centred on `k_center` with width `sigma_k`.
    pub fn gaussian(grid: ModeGrid, k_center: f64, sigma_k: f64) -> Result<Self> {
        let amps = (0..grid.modes)
            .map(|i| {
                let x = (grid.wavenumber(i) - k_center) / sigma_k;
                Complex64::new((-0.25 * x * x).exp(), 0.0)
            })
            .collect();
        SpectralProfile::normalized(grid, amps)
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn amplitude(&self, mode: usize) -> Complex64 {
        self.amps[mode]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dk
    }

    /// Photon-number expectation of `|1; phi'>` restricted to
    /// `k in [k_lo, k_hi]`, evaluated in the one-photon sector as the
    /// discrete sum `sum |phi'(k)|^2 dk`. Works for any mode count.
    pub fn number_expectation_range(&self, k_lo: f64, k_hi: f64) -> f64 {
        self.grid
            .modes_in(k_lo, k_hi)
            .map(|i| self.amps[i].norm_sqr() * self.grid.dk)
            .sum()
    }
}

/// Shape of one truncated register: grid plus per-mode photon cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockSpace {
    pub grid: ModeGrid,
    pub cutoff: usize,
}

impl FockSpace {
    pub fn new(grid: ModeGrid, cutoff: usize) -> Result<Self> {
        let per_mode = cutoff + 1;
        let mut dim: usize = 1;
        for _ in 0..grid.modes {
            dim = dim
                .checked_mul(per_mode)
                .filter(|&d| d <= MAX_REGISTER_DIM)
                .ok_or(Error::RegisterTooLarge {
                    dim: per_mode.saturating_pow(grid.modes as u32),
                    max: MAX_REGISTER_DIM,
                })?;
        }
        Ok(FockSpace { grid, cutoff })
    }

    pub fn dim(&self) -> usize {
        (self.cutoff + 1).pow(self.grid.modes as u32)
    }

    /// Basis index of an occupation vector; mode 0 is the most significant
    /// digit.
    pub fn basis_index(&self, occ: &[usize]) -> usize {
        debug_assert_eq!(occ.len(), self.grid.modes);
        occ.iter().fold(0, |acc, &n| {
            debug_assert!(n <= self.cutoff);
            acc * (self.cutoff + 1) + n
        })
    }

    /// Occupation of mode `mode` within basis state `index`.
    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        let base = self.cutoff + 1;
        let place = self.grid.modes - 1 - mode;
        (index / base.pow(place as u32)) % base
    }

    pub fn total_photons(&self, index: usize) -> usize {
        (0..self.grid.modes).map(|m| self.occupation(index, m)).sum()
    }

    fn check_same(&self, other: &FockSpace) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Unit-commutator lowering operator for one mode, as a dense matrix.
pub fn lowering_matrix(space: &FockSpace, mode: usize) -> DMatrix<Complex64> {
    let dim = space.dim();
    let base = space.cutoff + 1;
    let place = space.grid.modes - 1 - mode;
    let stride = base.pow(place as u32);
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        let n = space.occupation(s, mode);
        if n > 0 {
            m[(s - stride, s)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
    }
    m
}

/// Continuum-normalized lowering operator `a_tilde = sqrt(L / (2 pi dk)) a`.
pub fn weighted_lowering_matrix(space: &FockSpace, mode: usize) -> DMatrix<Complex64> {
    lowering_matrix(space, mode) * Complex64::new(space.grid.weight().sqrt(), 0.0)
}

/// Pure state on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockStateVector {
    space: FockSpace,
    amps: DVector<Complex64>,
}

impl FockStateVector {
    pub fn vacuum(space: FockSpace) -> Self {
        let mut amps = DVector::zeros(space.dim());
        amps[0] = Complex64::ONE;
        FockStateVector { space, amps }
    }

    pub fn basis_state(space: FockSpace, occ: &[usize]) -> Result<Self> {
        if occ.len() != space.grid.modes {
            return Err(Error::DimensionMismatch { left: occ.len(), right: space.grid.modes });
        }
        if occ.iter().any(|&n| n > space.cutoff) {
            return Err(Error::InvalidParameter("occupation above cutoff".into()));
        }
        let mut amps = DVector::zeros(space.dim());
        amps[space.basis_index(occ)] = Complex64::ONE;
        Ok(FockStateVector { space, amps })
    }

    pub fn from_amplitudes(space: FockSpace, amps: DVector<Complex64>) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::DimensionMismatch { left: amps.len(), right: space.dim() });
        }
        Ok(FockStateVector { space, amps })
    }

    /// Discretized multimode single-photon state `|1; phi'>` with one basis
    /// amplitude `phi'(k_i) sqrt(dk)` per mode.
    pub fn single_photon(profile: &SpectralProfile, cutoff: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::InvalidParameter("single photon needs cutoff >= 1".into()));
        }
        // Construction requires unit norm; reject anything else up front.
        let norm = profile.norm_sq();
        if (norm - 1.0).abs() > SpectralProfile::NORM_TOL {
            return Err(Error::UnnormalizedProfile(norm));
        }
        let space = FockSpace::new(profile.grid, cutoff)?;
        let mut amps = DVector::zeros(space.dim());
        let root_dk = profile.grid.dk.sqrt();
        let mut occ = vec![0usize; profile.grid.modes];
        for i in 0..profile.grid.modes {
            occ[i] = 1;
            amps[space.basis_index(&occ)] = profile.amplitude(i) * root_dk;
            occ[i] = 0;
        }
        Ok(FockStateVector { space, amps })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Hilbert-space inner product `<self|other>`; the grids must match.
    pub fn inner(&self, other: &FockStateVector) -> Result<Complex64> {
        self.space.check_same(&other.space)?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `<n_range>` over modes with wavenumber in `[k_lo, k_hi]`.
    pub fn number_expectation(&self, k_lo: f64, k_hi: f64) -> f64 {
        let modes: Vec<usize> = self.space.grid.modes_in(k_lo, k_hi).collect();
        self.amps
            .iter()
            .enumerate()
            .map(|(s, a)| {
                let n: usize = modes.iter().map(|&m| self.space.occupation(s, m)).sum();
                a.norm_sqr() * n as f64
            })
            .sum()
    }

    pub fn to_register(&self) -> TruncatedFockRegister {
        TruncatedFockRegister {
            space: self.space,
            rho: &self.amps * self.amps.adjoint(),
        }
    }
}

/// Dense multimode density matrix with per-mode photon cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedFockRegister {
    space: FockSpace,
    rho: DMatrix<Complex64>,
}

impl TruncatedFockRegister {
    pub fn vacuum(space: FockSpace) -> Self {
        FockStateVector::vacuum(space).to_register()
    }

    /// Rank-1 register holding the multimode single-photon state.
    pub fn single_photon(profile: &SpectralProfile, cutoff: usize) -> Result<Self> {
        Ok(FockStateVector::single_photon(profile, cutoff)?.to_register())
    }

    pub fn from_density(space: FockSpace, rho: DMatrix<Complex64>) -> Result<Self> {
        if rho.nrows() != space.dim() || rho.ncols() != space.dim() {
            return Err(Error::DimensionMismatch { left: rho.nrows(), right: space.dim() });
        }
        Ok(TruncatedFockRegister { space, rho })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn density(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.diagonal().sum()
    }

    /// Check the register invariants: trace one, Hermitian, and positive
    /// semidefinite within the documented tolerances.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidTrace(tr.re));
        }
        let asym = (&self.rho - self.rho.adjoint()).camax();
        if asym > 1e-10 {
            return Err(Error::NotHermitian(asym));
        }
        let eigs = self.rho.clone().symmetric_eigen().eigenvalues;
        let min = eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if min < -1e-9 {
            return Err(Error::NotPsd(min));
        }
        Ok(())
    }

    /// `tr(op rho)`, scanning the density matrix so sparse states stay
    /// cheap even at large operator dimensions.
    pub fn expectation(&self, op: &DMatrix<Complex64>) -> Complex64 {
        let dim = self.space.dim();
        let mut acc = Complex64::ZERO;
        for y in 0..dim {
            for x in 0..dim {
                let r = self.rho[(y, x)];
                if r != Complex64::ZERO {
                    acc += op[(x, y)] * r;
                }
            }
        }
        acc
    }

    /// `<n_range>` over modes with wavenumber in `[k_lo, k_hi]`.
    pub fn number_expectation(&self, k_lo: f64, k_hi: f64) -> f64 {
        let modes: Vec<usize> = self.space.grid.modes_in(k_lo, k_hi).collect();
        (0..self.space.dim())
            .map(|s| {
                let n: usize = modes.iter().map(|&m| self.space.occupation(s, m)).sum();
                self.rho[(s, s)].re * n as f64
            })
            .sum()
    }

    /// Bosonic pure-loss channel with amplitude `f` applied to one mode:
    /// Kraus operators `E_j = (1-|f|^2)^(j/2) / sqrt(j!) * f^n * a^j`.
    pub fn apply_mode_loss(&self, mode: usize, f: Complex64) -> Result<Self> {
        if mode >= self.space.grid.modes {
            return Err(Error::InvalidParameter(format!("mode {mode} outside register")));
        }
        let mag = f.norm();
        if mag > 1.0 + 1e-9 {
            return Err(Error::UnphysicalAttenuation(mag));
        }
        let loss = (1.0 - mag * mag).max(0.0);
        let dim = self.space.dim();
        let a = lowering_matrix(&self.space, mode);
        // f^n as a diagonal in the occupation of `mode`; 0^0 = 1.
        let mut f_pow_n = DMatrix::zeros(dim, dim);
        for s in 0..dim {
            let n = self.space.occupation(s, mode) as i32;
            f_pow_n[(s, s)] = if n == 0 { Complex64::ONE } else { f.powi(n) };
        }
        let mut out = DMatrix::zeros(dim, dim);
        let mut a_pow = DMatrix::identity(dim, dim);
        for j in 0..=self.space.cutoff {
            let coef = loss.powf(0.5 * j as f64) * (-0.5 * ln_factorial(j)).exp();
            let kraus = &f_pow_n * &a_pow * Complex64::new(coef, 0.0);
            out += &kraus * &self.rho * kraus.adjoint();
            a_pow = &a * &a_pow;
            if loss == 0.0 {
                break; // only E_0 survives
            }
        }
        Ok(TruncatedFockRegister { space: self.space, rho: out })
    }

    pub fn to_json(&self) -> String {
        let doc = RegisterDoc {
            space: self.space,
            rho: self.rho.iter().map(|z| (z.re, z.im)).collect(),
        };
        serde_json::to_string(&doc).expect("register serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: RegisterDoc = serde_json::from_str(text)?;
        let dim = FockSpace::new(doc.space.grid, doc.space.cutoff)?.dim();
        if doc.rho.len() != dim * dim {
            return Err(Error::DimensionMismatch { left: doc.rho.len(), right: dim * dim });
        }
        let rho = DMatrix::from_iterator(dim, dim, doc.rho.iter().map(|&(re, im)| Complex64::new(re, im)));
        TruncatedFockRegister::from_density(doc.space, rho)
    }
}

/// Column-major register fixture: complex entries as `(re, im)` pairs.
#[derive(Serialize, Deserialize)]
struct RegisterDoc {
    space: FockSpace,
    rho: Vec<(f64, f64)>,
}

/// `ln(n!)` accumulated in log space.
pub fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Coherent-state number amplitude `<n|alpha> = e^(-|alpha|^2/2) alpha^n / sqrt(n!)`,
/// evaluated in log space to stay finite for extreme `|alpha|`.
pub fn coherent_overlap(n: usize, alpha: Complex64) -> Complex64 {
    let mag = alpha.norm();
    if mag == 0.0 {
        return if n == 0 { Complex64::ONE } else { Complex64::ZERO };
    }
    let ln_mag = -0.5 * mag * mag + n as f64 * mag.ln() - 0.5 * ln_factorial(n);
    if ln_mag < -745.0 {
        return Complex64::ZERO; // below the f64 subnormal range
    }
    Complex64::from_polar(ln_mag.exp(), n as f64 * alpha.arg())
}

/// Truncated single-mode displacement operator `exp(alpha a^dag - alpha* a)`
/// built by matrix exponential; the oracle route against the analytic
/// coherent overlaps.
pub fn displacement_matrix(cutoff: usize, alpha: Complex64) -> DMatrix<Complex64> {
    let dim = cutoff + 1;
    let mut gen = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        let root = Complex64::new((n as f64).sqrt(), 0.0);
        gen[(n, n - 1)] = alpha * root; // alpha a^dag
        gen[(n - 1, n)] = -alpha.conj() * root; // -alpha* a
    }
    gen.exp()
}

/// `D(alpha) |0><0| D(alpha)^dag` on the truncated space, via the matrix
/// exponential.
pub fn displaced_vacuum_projector(cutoff: usize, alpha: Complex64) -> DMatrix<Complex64> {
    let d = displacement_matrix(cutoff, alpha);
    let col = d.column(0);
    col * col.adjoint()
}

/// The complementary click operator `D (sum_{n>=1} |n><n|) D^dag` on the
/// truncated space, assembled from the displaced number projectors rather
/// than as `I - Q` so that completeness stays a real check.
pub fn click_operator(cutoff: usize, alpha: Complex64) -> DMatrix<Complex64> {
    let d = displacement_matrix(cutoff, alpha);
    let mut excited = DMatrix::<Complex64>::identity(cutoff + 1, cutoff + 1);
    excited[(0, 0)] = Complex64::ZERO;
    &d * excited * d.adjoint()
}

/// Analytic coherent projector `|alpha><alpha|` truncated at `cutoff`,
/// assembled from `coherent_overlap` amplitudes.
pub fn coherent_projector(cutoff: usize, alpha: Complex64) -> DMatrix<Complex64> {
    let col = DVector::from_iterator(cutoff + 1, (0..=cutoff).map(|n| coherent_overlap(n, alpha)));
    &col * col.adjoint()
}

/// Truncated expansion of the multimode vacuum projector as normally
/// ordered strings of continuum-normalized ladder operators, summed to series
/// depth `l_max`.
///
/// Returns the maximum elementwise deviation from `|0><0|` over the
/// subspace with total photon number `<= l_max`; the expansion is exact
/// there, and exact everywhere once `l_max >= modes * cutoff`.
pub fn vacuum_projector_expansion_check(modes: usize, cutoff: usize, l_max: usize) -> Result<f64> {
    // Deliberately non-trivial grid constants: every (2 pi / L)^l and dk^l
    // prefactor must cancel against the operator weights.
    let grid = ModeGrid::new(-1.0, 0.37, modes, 11.3)?;
    let space = FockSpace::new(grid, cutoff)?;
    let dim = space.dim();
    if (modes as u64).pow(l_max as u32) > 2_000_000 {
        return Err(Error::InvalidParameter(format!(
            "expansion over {modes}^{l_max} index tuples is too large"
        )));
    }

    let lowering: Vec<DMatrix<Complex64>> =
        (0..modes).map(|m| weighted_lowering_matrix(&space, m)).collect();

    let mut sum = DMatrix::<Complex64>::identity(dim, dim); // l = 0 term
    for l in 1..=l_max {
        let prefactor = ((-1.0f64).powi(l as i32) / ln_factorial(l).exp())
            * (TAU / grid.l_quant).powi(l as i32)
            * grid.dk.powi(l as i32);
        let mut term = DMatrix::<Complex64>::zeros(dim, dim);
        let mut tuple = vec![0usize; l];
        loop {
            // B = a_tilde_{i1} ... a_tilde_{il}; the string contributes B^dag B.
            let mut b = lowering[tuple[0]].clone();
            for &idx in &tuple[1..] {
                b = &lowering[idx] * b;
            }
            term += b.adjoint() * b;
            // next tuple in lexicographic order
            let mut pos = l;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < modes {
                    break;
                }
                tuple[pos] = 0;
            }
            if pos == 0 && tuple[0] == 0 {
                break;
            }
        }
        sum += term * Complex64::new(prefactor, 0.0);
    }

    let mut vac = DMatrix::<Complex64>::zeros(dim, dim);
    vac[(0, 0)] = Complex64::ONE;
    let mut max_dev = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            if space.total_photons(r) <= l_max && space.total_photons(c) <= l_max {
                max_dev = max_dev.max((sum[(r, c)] - vac[(r, c)]).norm());
            }
        }
    }
    Ok(max_dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(modes: usize) -> ModeGrid {
        ModeGrid::new(0.0, 0.5, modes, 7.3).unwrap()
    }

    #[test]
    fn single_mode_delta_profile() {
        let p = SpectralProfile::delta_at(grid(3), 1).unwrap();
        let psi = FockStateVector::single_photon(&p, 1).unwrap();
        let expect = FockStateVector::basis_state(*psi.space(), &[0, 1, 0]).unwrap();
        assert!((psi.inner(&expect).unwrap().norm() - 1.0).abs() < 1e-12);
        assert_relative_eq!(psi.number_expectation(f64::MIN, f64::MAX), 1.0, epsilon = 1e-12);
        let vac = FockStateVector::vacuum(*psi.space());
        assert_eq!(vac.number_expectation(f64::MIN, f64::MAX), 0.0);
    }

    #[test]
    fn two_mode_equal_profile_splits_number() {
        let g = grid(2);
        let p = SpectralProfile::normalized(g, vec![Complex64::ONE, Complex64::ONE]).unwrap();
        let psi = FockStateVector::single_photon(&p, 1).unwrap();
        let k0 = g.wavenumber(0);
        assert_relative_eq!(psi.number_expectation(k0, k0), 0.5, epsilon = 1e-12);
        assert_relative_eq!(psi.number_expectation(f64::MIN, f64::MAX), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_profile_unit_photon_number_32_modes() {
        // The one-photon-sector sum handles mode counts far beyond the dense
        // register cap.
        let g = ModeGrid::new(-4.0, 0.25, 32, 5.0).unwrap();
        let p = SpectralProfile::gaussian(g, 0.0, 1.1).unwrap();
        assert_relative_eq!(p.number_expectation_range(f64::MIN, f64::MAX), 1.0, epsilon = 1e-10);
        // Dense-register route agrees where it exists.
        let g4 = ModeGrid::new(-0.75, 0.5, 4, 5.0).unwrap();
        let p4 = SpectralProfile::gaussian(g4, 0.0, 0.8).unwrap();
        let psi = FockStateVector::single_photon(&p4, 1).unwrap();
        assert_relative_eq!(
            psi.number_expectation(f64::MIN, f64::MAX),
            p4.number_expectation_range(f64::MIN, f64::MAX),
            epsilon = 1e-12
        );
    }

    #[test]
    fn unnormalized_profile_rejected() {
        let g = grid(2);
        let two = Complex64::new(2.0, 0.0);
        let bad = SpectralProfile::new(g, vec![two, two]);
        assert!(matches!(bad, Err(Error::UnnormalizedProfile(_))));
    }

    #[test]
    fn register_cap_enforced() {
        let g = ModeGrid::new(0.0, 1.0, 13, 1.0).unwrap();
        assert!(matches!(
            FockSpace::new(g, 1),
            Err(Error::RegisterTooLarge { .. })
        ));
    }

    #[test]
    fn inner_product_reproduces_discretized_single_photon_overlap() {
        // <1_k | 1; phi'> = sqrt(L / 2 pi) phi'(k) once the bra carries the
        // continuum normalization sqrt(weight).
        let g = grid(3);
        let p = SpectralProfile::normalized(
            g,
            vec![Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.4), Complex64::new(0.5, 0.0)],
        )
        .unwrap();
        let psi = FockStateVector::single_photon(&p, 1).unwrap();
        for mode in 0..3 {
            let mut occ = [0usize; 3];
            occ[mode] = 1;
            let bra = FockStateVector::basis_state(*psi.space(), &occ).unwrap();
            let inner = bra.inner(&psi).unwrap() * g.weight().sqrt();
            let expected = (g.l_quant / TAU).sqrt() * p.amplitude(mode);
            assert!((inner - expected).norm() < 1e-12);
        }
        // Vacuum overlap of vacuum is one.
        let vac = FockStateVector::vacuum(*psi.space());
        assert_eq!(vac.inner(&vac).unwrap(), Complex64::ONE);
    }

    #[test]
    fn inner_product_rejects_mismatched_grids() {
        let a = FockStateVector::vacuum(FockSpace::new(grid(2), 1).unwrap());
        let b = FockStateVector::vacuum(FockSpace::new(grid(3), 1).unwrap());
        assert!(matches!(a.inner(&b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn weighted_commutator_on_grid() {
        // [a_tilde_k, a_tilde_k'^dag] = (L / 2 pi) delta_kk' / dk on basis
        // states below the cutoff.
        let space = FockSpace::new(grid(2), 3).unwrap();
        let w = space.grid.weight();
        for k in 0..2 {
            for kp in 0..2 {
                let a_k = weighted_lowering_matrix(&space, k);
                let ad_kp = weighted_lowering_matrix(&space, kp).adjoint();
                let comm = &a_k * &ad_kp - &ad_kp * &a_k;
                let expected = if k == kp { w } else { 0.0 };
                for s in 0..space.dim() {
                    if space.occupation(s, k) < space.cutoff && space.occupation(s, kp) < space.cutoff {
                        assert_relative_eq!(comm[(s, s)].re, expected, epsilon = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn weighted_lowering_action_matches_ladder_rule() {
        // a_tilde_k' |n_k> = (L / 2 pi dk) delta_kk' sqrt(n) |(n-1)_k> in
        // continuum normalization, for every n up to the cutoff.
        let space = FockSpace::new(grid(2), 3).unwrap();
        let w = space.grid.weight();
        for n in 1..=space.cutoff {
            let ket = FockStateVector::basis_state(space, &[n, 0]).unwrap();
            let weighted_ket = &ket.amps * Complex64::new(w.powf(n as f64 / 2.0), 0.0);
            let lowered = weighted_lowering_matrix(&space, 0) * &weighted_ket;
            let target = FockStateVector::basis_state(space, &[n - 1, 0]).unwrap();
            let weighted_target = &target.amps
                * Complex64::new(w * (n as f64).sqrt() * w.powf((n as f64 - 1.0) / 2.0), 0.0);
            assert!((lowered - weighted_target).camax() < 1e-9);
            // Wrong mode annihilates nothing from a pure |n_k> of mode 0.
            let other = weighted_lowering_matrix(&space, 1) * &ket.amps;
            assert!(other.camax() < 1e-15);
        }
    }

    #[test]
    fn single_photon_register_is_rank_one() {
        let g = grid(3);
        let p = SpectralProfile::gaussian(g, 0.5, 0.6).unwrap();
        let reg = TruncatedFockRegister::single_photon(&p, 1).unwrap();
        reg.validate().unwrap();
        let eigs = reg.density().clone().symmetric_eigen().eigenvalues;
        let mut sorted: Vec<f64> = eigs.iter().copied().collect();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_relative_eq!(sorted[0], 1.0, epsilon = 1e-10);
        assert!(sorted[1].abs() < 1e-10);
    }

    #[test]
    fn coherent_overlap_values() {
        assert_eq!(coherent_overlap(0, Complex64::ZERO), Complex64::ONE);
        assert_eq!(coherent_overlap(3, Complex64::ZERO), Complex64::ZERO);
        assert_relative_eq!(
            coherent_overlap(1, Complex64::ONE).re,
            (-0.5f64).exp(),
            epsilon = 1e-15
        );
        // Guarded extreme displacement.
        let z = coherent_overlap(5, Complex64::new(60.0, 0.0));
        assert_eq!(z, Complex64::ZERO);
    }

    #[test]
    fn coherent_poisson_tail_below_truncation_bound() {
        // Frozen tail value at |alpha|^2 = 2, cutoff 20: ~6.1e-15 < 1e-12.
        for j in [0.5f64, 1.0, 2.0] {
            let alpha = Complex64::new(j.sqrt(), 0.0);
            let total: f64 = (0..=20).map(|n| coherent_overlap(n, alpha).norm_sqr()).sum();
            assert!(1.0 - total < 1e-12, "tail {} at J = {}", 1.0 - total, j);
        }
    }

    #[test]
    fn displacement_matrix_matches_coherent_column() {
        let alpha = Complex64::new(0.8, -0.6);
        let d = displacement_matrix(30, alpha);
        for n in 0..=20 {
            let expected = coherent_overlap(n, alpha);
            assert!(
                (d[(n, 0)] - expected).norm() < 1e-10,
                "n = {n}: {} vs {expected}",
                d[(n, 0)]
            );
        }
        // Unitary on the truncated space by construction.
        let dim = 31;
        let err = (d.adjoint() * &d - DMatrix::identity(dim, dim)).camax();
        assert!(err < 1e-12);
    }

    #[test]
    fn povm_completeness_on_truncated_space() {
        let alpha = Complex64::new(1.1, 0.4);
        let q = displaced_vacuum_projector(20, alpha);
        let p = click_operator(20, alpha);
        let err = (q + p - DMatrix::identity(21, 21)).camax();
        assert!(err < 1e-12);
    }

    #[test]
    fn mode_loss_reduces_to_qubit_channel() {
        // One memory spread over two k-modes with a uniform loss behaves as
        // the single-rail qubit channel on the wavepacket basis.
        let g = grid(2);
        let p = SpectralProfile::normalized(g, vec![Complex64::new(0.6, 0.2), Complex64::new(0.1, -0.7)])
            .unwrap();
        let psi = FockStateVector::single_photon(&p, 2).unwrap();
        let space = *psi.space();
        let vac = FockStateVector::vacuum(space);
        // (|0> + |1;phi>)/sqrt(2)
        let amps = (vac.amplitudes() + psi.amplitudes()) / Complex64::new(2.0f64.sqrt(), 0.0);
        let reg = FockStateVector::from_amplitudes(space, amps).unwrap().to_register();
        let f = Complex64::new(0.7, 0.3);
        let out = reg.apply_mode_loss(0, f).unwrap().apply_mode_loss(1, f).unwrap();
        out.validate().unwrap();
        // Logical matrix elements after the loss.
        let v = vac.amplitudes();
        let s = psi.amplitudes();
        let rho = out.density();
        let elem = |a: &DVector<Complex64>, b: &DVector<Complex64>| (a.adjoint() * rho * b)[(0, 0)];
        let eta = f.norm_sqr();
        assert!((elem(v, v) - Complex64::new(0.5 + 0.5 * (1.0 - eta), 0.0)).norm() < 1e-12);
        assert!((elem(v, s) - 0.5 * f.conj()).norm() < 1e-12);
        assert!((elem(s, v) - 0.5 * f).norm() < 1e-12);
        assert!((elem(s, s) - Complex64::new(0.5 * eta, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn mode_loss_rejects_unphysical_amplitude() {
        let space = FockSpace::new(grid(1), 2).unwrap();
        let reg = TruncatedFockRegister::vacuum(space);
        assert!(matches!(
            reg.apply_mode_loss(0, Complex64::new(1.2, 0.0)),
            Err(Error::UnphysicalAttenuation(_))
        ));
    }

    #[test]
    fn vacuum_expansion_small_cases() {
        assert_eq!(vacuum_projector_expansion_check(1, 0, 0).unwrap(), 0.0);
        let dev = vacuum_projector_expansion_check(1, 3, 3).unwrap();
        assert!(dev < 1e-10, "dev = {dev:e}");
        let dev = vacuum_projector_expansion_check(2, 2, 4).unwrap();
        assert!(dev < 1e-10, "dev = {dev:e}");
    }

    #[test]
    fn vacuum_expansion_truncated_depth_still_exact_on_low_sectors() {
        // l_max below modes*cutoff: exact only on total photon number <= l_max,
        // which is precisely the subspace the check reports on.
        let dev = vacuum_projector_expansion_check(2, 3, 3).unwrap();
        assert!(dev < 1e-10, "dev = {dev:e}");
    }

    #[test]
    fn register_json_round_trip() {
        let g = grid(2);
        let p = SpectralProfile::gaussian(g, 0.3, 0.7).unwrap();
        let reg = TruncatedFockRegister::single_photon(&p, 1).unwrap();
        let text = reg.to_json();
        let back = TruncatedFockRegister::from_json(&text).unwrap();
        assert_eq!(back.space(), reg.space());
        assert!((back.density() - reg.density()).camax() < 1e-15);
    }

    proptest! {
        #[test]
        fn inner_product_conjugate_symmetry(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let space = FockSpace::new(grid(2), 2).unwrap();
            let dim = space.dim();
            let rand_state = |rng: &mut rand_chacha::ChaCha8Rng| {
                let amps = DVector::from_iterator(
                    dim,
                    (0..dim).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)),
                );
                FockStateVector::from_amplitudes(space, amps).unwrap()
            };
            let a = rand_state(&mut rng);
            let b = rand_state(&mut rng);
            let ab = a.inner(&b).unwrap();
            let ba = b.inner(&a).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-12);
        }

        #[test]
        fn mode_loss_preserves_register_validity(
            re in -1.0f64..1.0,
            im in -1.0f64..1.0,
        ) {
            let f = Complex64::new(re * 0.7, im * 0.7);
            let g = grid(2);
            let p = SpectralProfile::gaussian(g, 0.4, 0.9).unwrap();
            let reg = TruncatedFockRegister::single_photon(&p, 2).unwrap();
            let out = reg.apply_mode_loss(0, f).unwrap().apply_mode_loss(1, f).unwrap();
            out.validate().unwrap();
        }
    }
}
