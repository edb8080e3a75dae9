//! Cross-route validation suites: every analytically derived quantity in
//! the library is re-computed along an independent numerical route and the
//! maximum deviation is reported. The CLI `validate` experiment and the
//! acceptance tests both run these.

use crate::bell::{ch_closed_form, ch_from_probs, ch_from_probs_fock, DisplacementSetting};
use crate::error::{Error, Result};
use crate::fockspace::{self, ModeGrid, TruncatedFockRegister};
use crate::memorychannel::{
    bell_state_retrieved, random_density_matrix, store_retrieve_nqubit,
    store_retrieve_nqubit_fock_oracle, store_retrieve_nqubit_kraus, ChannelParams,
};
use crate::polariton::{attenuation_factor, dsp_evolve_numeric, CouplingSchedule, MemoryParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x0E17_51AB;

/// Outcome of one validation suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteReport {
    fn from_deviation(name: &str, cases: usize, max_deviation: f64, tolerance: f64) -> Self {
        SuiteReport {
            name: name.to_string(),
            cases,
            max_deviation,
            tolerance,
            passed: max_deviation <= tolerance,
        }
    }
}

/// Combined report over all suites.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Attenuation factor by quadrature vs. the polariton equation of motion,
/// over randomized parameter sets including detuned ones.
pub fn suite_quadrature_vs_ode(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_dev = 0.0f64;
    for i in 0..cases {
        let detuned = i % 2 == 1;
        let params = MemoryParams::new(
            rng.random::<f64>() * 2.0,
            0.05 + rng.random::<f64>() * 5.0,
            if detuned { rng.random::<f64>() * 6.0 - 3.0 } else { 0.0 },
            if detuned { rng.random::<f64>() * 6.0 - 3.0 } else { 0.0 },
            10.0 + rng.random::<f64>() * 1990.0,
        )?;
        let omega_in = (params.coupling_strength_sq * (1.0 + rng.random::<f64>() * 99.0)).sqrt();
        let t1 = 0.2 + rng.random::<f64>() * 0.8;
        let dt_s = 0.5 + rng.random::<f64>() * 7.5;
        let ramp = if i % 3 == 0 { 0.0 } else { rng.random::<f64>() * 0.2 };
        let schedule =
            CouplingSchedule::storage_protocol(omega_in, t1, t1 + dt_s, t1 + dt_s + 0.5, ramp)?;

        let f = attenuation_factor(&params, &schedule, schedule.t_end())?;
        let psi0 = Complex64::ONE;
        let psi = dsp_evolve_numeric(&params, &schedule, 0.0, psi0)?;
        let dev = ((psi / psi0).norm() / f.value.norm() - 1.0).abs();
        max_dev = max_dev.max(dev);
    }
    Ok(SuiteReport::from_deviation("quadrature_vs_ode", cases, max_dev, 1e-6))
}

/// Elementwise retrieval map vs. the Kraus tensor route vs. the truncated
/// Fock-space oracle, on random registers of 1 to 3 qubits.
pub fn suite_channel_routes(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51);
    let mut max_dev = 0.0f64;
    for i in 0..cases {
        let n = 1 + i % 3;
        let rho = random_density_matrix(n, &mut rng);
        let factors: Vec<Complex64> = (0..n)
            .map(|_| {
                Complex64::from_polar(rng.random::<f64>(), rng.random::<f64>() * std::f64::consts::TAU)
            })
            .collect();
        let params = ChannelParams::new(factors)?;
        let direct = store_retrieve_nqubit(&rho, &params)?;
        let kraus = store_retrieve_nqubit_kraus(&rho, &params)?;
        let fock = store_retrieve_nqubit_fock_oracle(&rho, &params, 2)?;
        max_dev = max_dev.max((direct.matrix() - kraus.matrix()).camax());
        max_dev = max_dev.max((direct.matrix() - fock.matrix()).camax());
        max_dev = max_dev.max((kraus.matrix() - fock.matrix()).camax());
    }
    Ok(SuiteReport::from_deviation("channel_vs_kraus_vs_fock", cases, max_dev, 1e-12))
}

/// Closed-form CH combination vs. the POVM pipeline on the retrieved Bell
/// state, over an efficiency-by-displacement grid.
pub fn suite_ch_closed_vs_povm(eta_points: usize, j_points: usize) -> Result<SuiteReport> {
    let mut max_dev = 0.0f64;
    let mut cases = 0;
    for ia in 0..eta_points {
        let eta_a = ia as f64 / (eta_points - 1) as f64;
        for ib in 0..eta_points {
            let eta_b = ib as f64 / (eta_points - 1) as f64;
            let rho = bell_state_retrieved(eta_a, eta_b)?;
            for ij in 0..j_points {
                let j = 5.0 * (ij + 1) as f64 / j_points as f64;
                let setting = DisplacementSetting::symmetric(j)?;
                let pipeline = ch_from_probs(
                    &rho,
                    (Complex64::ZERO, setting.alpha),
                    (Complex64::ZERO, setting.beta),
                )?;
                max_dev = max_dev.max((pipeline - ch_closed_form(eta_a, eta_b, j)).abs());
                cases += 1;
            }
        }
    }
    Ok(SuiteReport::from_deviation("ch_closed_vs_povm", cases, max_dev, 1e-10))
}

/// Spot checks of the truncated-Fock POVM oracle (matrix-exponential
/// displacements, cutoff 20) against the closed form.
pub fn suite_ch_fock_spots(cutoff: usize) -> Result<SuiteReport> {
    let etas = [0.0, 0.25, 0.5, 0.75, 1.0];
    let js = [0.1, 0.26, 1.0, 2.5];
    let mut max_dev = 0.0f64;
    let mut cases = 0;
    for (i, &eta_a) in etas.iter().enumerate() {
        let eta_b = etas[(i + 2) % etas.len()];
        let rho = bell_state_retrieved(eta_a, eta_b)?;
        for &j in &js {
            let setting = DisplacementSetting::symmetric(j)?;
            let fock = ch_from_probs_fock(
                &rho,
                (Complex64::ZERO, setting.alpha),
                (Complex64::ZERO, setting.beta),
                cutoff,
            )?;
            max_dev = max_dev.max((fock - ch_closed_form(eta_a, eta_b, j)).abs());
            cases += 1;
        }
    }
    Ok(SuiteReport::from_deviation("ch_povm_fock_spots", cases, max_dev, 1e-8))
}

/// Truncated expansion of the vacuum projector as normally ordered ladder
/// strings, at the three smallest register shapes.
pub fn suite_vacuum_identity() -> Result<SuiteReport> {
    let shapes = [(1usize, 3usize), (2, 2), (3, 1)];
    let mut max_dev = 0.0f64;
    for &(modes, cutoff) in &shapes {
        let dev = fockspace::vacuum_projector_expansion_check(modes, cutoff, modes * cutoff)?;
        max_dev = max_dev.max(dev);
    }
    Ok(SuiteReport::from_deviation("vacuum_projector_identity", shapes.len(), max_dev, 1e-10))
}

/// Unphysical fixtures must be rejected loudly: an attenuation factor
/// above unit magnitude and a negative decoherence rate.
pub fn suite_unphysical_rejection() -> SuiteReport {
    let f_fixture = Complex64::new(1.0 + 1e-3, 0.0);
    let channel_rejects = matches!(
        ChannelParams::new(vec![f_fixture]),
        Err(Error::UnphysicalAttenuation(_))
    );
    let register_rejects = ModeGrid::new(0.0, 1.0, 1, 1.0)
        .and_then(|g| fockspace::FockSpace::new(g, 1))
        .map(TruncatedFockRegister::vacuum)
        .and_then(|reg| reg.apply_mode_loss(0, f_fixture))
        .is_err();
    let params_reject = MemoryParams::new(-0.1, 1.0, 0.0, 0.0, 10.0).is_err();
    let all = channel_rejects && register_rejects && params_reject;
    SuiteReport {
        name: "unphysical_rejection".to_string(),
        cases: 3,
        max_deviation: if all { 0.0 } else { 1.0 },
        tolerance: 0.0,
        passed: all,
    }
}

/// Run every suite with the canonical acceptance-sized grids.
pub fn run_all(seed: u64) -> Result<ValidationReport> {
    let suites = vec![
        suite_quadrature_vs_ode(seed, 50)?,
        suite_channel_routes(seed, 100)?,
        suite_ch_closed_vs_povm(21, 50)?,
        suite_ch_fock_spots(20)?,
        suite_vacuum_identity()?,
        suite_unphysical_rejection(),
    ];
    let passed = suites.iter().all(|s| s.passed);
    Ok(ValidationReport { seed, suites, passed })
}
