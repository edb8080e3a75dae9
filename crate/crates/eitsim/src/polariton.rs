//! Dark-state-polariton storage and retrieval for a Lambda-type EIT memory.
//!
//! The central object is the complex attenuation factor `f(t)` that
//! multiplies every momentum mode of the retrieved probe field. It is
//! computed by adaptive quadrature of the spin-wave damping coefficient
//! over the coupling-field schedule; `|f|^2` is the storage efficiency.
//! An independent ODE integration of the momentum-space polariton equation
//! of motion serves as the numerical cross-check for the analytic route.
//!
//! Units: rates in multiples of `GAMMA_780`, times in `1 / GAMMA_780`,
//! wavenumbers scaled so that the vacuum speed of light is 1 (i.e. `k` is
//! an angular frequency in rate units).
//!
//! Limitation: the equations of motion hold in the adiabatic limit of slow
//! coupling-field switching. No quantitative validity check on the
//! switching rate is performed here; callers choosing very fast ramps get
//! the adiabatic prediction for them regardless.

use crate::error::{Error, Result};
use crate::numerics::{self, Rk45Options, QUAD_ABS_TOL};
use crate::units::UnitSystem;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Relative tolerance below which the `g1`/`g2` denominator counts as
/// singular.
const DENOM_REL_TOL: f64 = 1e-12;

/// Physical rates and detunings of one EIT ensemble.
///
/// `coupling_strength_sq` is the collective coupling `4 g_p^2 N`, a squared
/// angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryParams {
    pub gamma21: f64,
    pub gamma31: f64,
    pub delta: f64,
    pub delta_p: f64,
    pub coupling_strength_sq: f64,
}

impl MemoryParams {
    pub fn new(
        gamma21: f64,
        gamma31: f64,
        delta: f64,
        delta_p: f64,
        coupling_strength_sq: f64,
    ) -> Result<Self> {
        if !gamma21.is_finite() || gamma21 < 0.0 {
            return Err(Error::InvalidParameter(format!("gamma21 = {gamma21} must be >= 0")));
        }
        if !gamma31.is_finite() || gamma31 < 0.0 {
            return Err(Error::InvalidParameter(format!("gamma31 = {gamma31} must be >= 0")));
        }
        if !coupling_strength_sq.is_finite() || coupling_strength_sq <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coupling_strength_sq = {coupling_strength_sq} must be > 0"
            )));
        }
        if !delta.is_finite() || !delta_p.is_finite() {
            return Err(Error::InvalidParameter("detunings must be finite".into()));
        }
        Ok(MemoryParams {
            gamma21,
            gamma31,
            delta,
            delta_p,
            coupling_strength_sq,
        })
    }

    /// Complex ground-state decoherence rate, `gamma21 - 2i delta`.
    pub fn gamma21_prime(&self) -> Complex64 {
        Complex64::new(self.gamma21, -2.0 * self.delta)
    }

    /// Complex optical decoherence rate, `gamma31 - 2i delta_p`.
    pub fn gamma31_prime(&self) -> Complex64 {
        Complex64::new(self.gamma31, -2.0 * self.delta_p)
    }

    /// Convert a parameter set declared in `units` into Gamma units.
    pub fn into_gamma_units(self, units: UnitSystem) -> Result<Self> {
        MemoryParams::new(
            units.rate_to_gamma(self.gamma21),
            units.rate_to_gamma(self.gamma31),
            units.rate_to_gamma(self.delta),
            units.rate_to_gamma(self.delta_p),
            units.rate_sq_to_gamma(self.coupling_strength_sq),
        )
    }
}

/// Shape of one schedule segment for the coupling Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SegmentShape {
    /// Constant coupling.
    Hold { omega: f64 },
    /// Linear interpolation between the endpoint values.
    LinearRamp { omega_start: f64, omega_end: f64 },
    /// Raised-cosine interpolation; `steepness` is an exponent on the
    /// cosine window (1 = plain raised cosine, larger = sharper onset).
    SmoothRamp {
        omega_start: f64,
        omega_end: f64,
        steepness: f64,
    },
}

impl SegmentShape {
    fn endpoints(&self) -> (f64, f64) {
        match *self {
            SegmentShape::Hold { omega } => (omega, omega),
            SegmentShape::LinearRamp { omega_start, omega_end }
            | SegmentShape::SmoothRamp { omega_start, omega_end, .. } => (omega_start, omega_end),
        }
    }

    fn value(&self, u: f64) -> f64 {
        match *self {
            SegmentShape::Hold { omega } => omega,
            SegmentShape::LinearRamp { omega_start, omega_end } => {
                omega_start + (omega_end - omega_start) * u
            }
            SegmentShape::SmoothRamp { omega_start, omega_end, steepness } => {
                let w = (0.5 * (1.0 - (std::f64::consts::PI * u).cos())).powf(steepness);
                omega_start + (omega_end - omega_start) * w
            }
        }
    }
}

/// One contiguous piece of the coupling schedule over `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub shape: SegmentShape,
}

/// Piecewise description of the coupling Rabi frequency over `[0, t_end]`,
/// with the storage window `[t1, t2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSchedule {
    segments: Vec<Segment>,
    t1: f64,
    t2: f64,
}

impl CouplingSchedule {
    pub fn new(segments: Vec<Segment>, t1: f64, t2: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidSchedule("no segments".into()));
        }
        let t_end = segments.last().unwrap().end;
        let tol = 1e-9 * t_end.max(1.0);
        if segments[0].start.abs() > tol {
            return Err(Error::InvalidSchedule(format!(
                "segments must start at 0, got {}",
                segments[0].start
            )));
        }
        for w in segments.windows(2) {
            if (w[0].end - w[1].start).abs() > tol {
                return Err(Error::InvalidSchedule(format!(
                    "gap or overlap between segments at t = {} vs {}",
                    w[0].end, w[1].start
                )));
            }
        }
        for s in &segments {
            if s.end < s.start {
                return Err(Error::InvalidSchedule(format!(
                    "segment ends before it starts: [{}, {}]",
                    s.start, s.end
                )));
            }
            let (a, b) = s.shape.endpoints();
            if a < 0.0 || b < 0.0 {
                return Err(Error::InvalidSchedule("coupling must be non-negative".into()));
            }
            if let SegmentShape::SmoothRamp { steepness, .. } = s.shape {
                if !steepness.is_finite() || steepness <= 0.0 {
                    return Err(Error::InvalidSchedule("steepness must be > 0".into()));
                }
            }
        }
        let omega0 = segments[0].shape.value(0.0);
        let omega_end = segments.last().unwrap().shape.value(1.0);
        if (omega0 - omega_end).abs() > 1e-9 * omega0.max(1.0) {
            return Err(Error::InvalidSchedule(format!(
                "retrieval coupling {omega_end} must match input coupling {omega0}"
            )));
        }
        if !(0.0 - tol..=t_end + tol).contains(&t1) || !(t1 - tol..=t_end + tol).contains(&t2) {
            return Err(Error::InvalidSchedule(format!(
                "storage window [{t1}, {t2}] must satisfy 0 <= t1 <= t2 <= {t_end}"
            )));
        }
        Ok(CouplingSchedule { segments, t1, t2 })
    }

    /// Standard storage protocol: hold the input coupling until `t1`, switch
    /// off over `ramp` (raised cosine), hold zero, switch back on over the
    /// last `ramp` of the storage window, hold until `t_end`.
    ///
    /// `ramp = 0` gives the instantaneous-switching schedule under which the
    /// strong-coupling closed form becomes an exact description of the
    /// storage window.
    pub fn storage_protocol(
        omega_in: f64,
        t1: f64,
        t2: f64,
        t_end: f64,
        ramp: f64,
    ) -> Result<Self> {
        if omega_in < 0.0 || ramp < 0.0 {
            return Err(Error::InvalidSchedule("negative coupling or ramp".into()));
        }
        if 2.0 * ramp > t2 - t1 {
            return Err(Error::InvalidSchedule(format!(
                "ramps ({ramp} each) do not fit in the storage window [{t1}, {t2}]"
            )));
        }
        let hold_in = SegmentShape::Hold { omega: omega_in };
        let hold_off = SegmentShape::Hold { omega: 0.0 };
        let mut segments = Vec::new();
        let mut push = |start: f64, end: f64, shape: SegmentShape| {
            if end > start {
                segments.push(Segment { start, end, shape });
            }
        };
        push(0.0, t1, hold_in);
        if ramp > 0.0 {
            push(
                t1,
                t1 + ramp,
                SegmentShape::SmoothRamp { omega_start: omega_in, omega_end: 0.0, steepness: 1.0 },
            );
            push(t1 + ramp, t2 - ramp, hold_off);
            push(
                t2 - ramp,
                t2,
                SegmentShape::SmoothRamp { omega_start: 0.0, omega_end: omega_in, steepness: 1.0 },
            );
        } else {
            push(t1, t2, hold_off);
        }
        push(t2, t_end, hold_in);
        CouplingSchedule::new(segments, t1, t2)
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().unwrap().end
    }

    /// Storage time `t2 - t1`.
    pub fn storage_time(&self) -> f64 {
        self.t2 - self.t1
    }

    /// Coupling Rabi frequency at time `t`; constant continuation outside
    /// `[0, t_end]`.
    pub fn omega(&self, t: f64) -> f64 {
        if t <= self.segments[0].start {
            return self.segments[0].shape.value(0.0);
        }
        for s in &self.segments {
            if t <= s.end {
                let span = s.end - s.start;
                let u = if span > 0.0 { (t - s.start) / span } else { 1.0 };
                return s.shape.value(u);
            }
        }
        self.segments.last().unwrap().shape.value(1.0)
    }

    /// Segment boundaries clipped to `[0, t]`, for piecewise integration.
    fn breakpoints_to(&self, t: f64) -> Vec<f64> {
        let mut pts = vec![0.0];
        for s in &self.segments {
            if s.end < t {
                pts.push(s.end);
            }
        }
        pts.push(t);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        pts
    }
}

/// Complex attenuation factor of the retrieved field, with its modulus
/// squared cached as the storage efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationFactor {
    pub value: Complex64,
    pub efficiency: f64,
}

impl AttenuationFactor {
    pub fn new(value: Complex64) -> Self {
        AttenuationFactor {
            value,
            efficiency: (value * value.conj()).re,
        }
    }
}

/// Mixing angle `theta` of the dark-state polariton,
/// `tan(theta) = sqrt(4 g_p^2 N) / Omega_c`.
///
/// Returns an angle in `[0, pi/2]`; exactly `pi/2` for zero coupling.
pub fn mixing_angle(omega_c: f64, coupling_strength_sq: f64) -> Result<f64> {
    if omega_c < 0.0 {
        return Err(Error::InvalidParameter(format!("omega_c = {omega_c} must be >= 0")));
    }
    if !coupling_strength_sq.is_finite() || coupling_strength_sq <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "coupling_strength_sq = {coupling_strength_sq} must be > 0"
        )));
    }
    if omega_c == 0.0 {
        return Ok(FRAC_PI_2);
    }
    Ok(coupling_strength_sq.sqrt().atan2(omega_c))
}

fn g_denominator(params: &MemoryParams, omega_c: f64) -> Result<Complex64> {
    let gg = params.gamma21_prime() * params.gamma31_prime();
    let den = Complex64::new(omega_c * omega_c + params.coupling_strength_sq, 0.0) + gg;
    let scale = (omega_c * omega_c + params.coupling_strength_sq + gg.norm()).max(1.0);
    if den.norm() < DENOM_REL_TOL * scale {
        return Err(Error::SingularDenominator {
            denom: den.norm(),
            tol: DENOM_REL_TOL,
            scale,
        });
    }
    Ok(den)
}

/// Spin-wave damping fraction
/// `g1 = 4 g_p^2 N / (Omega_c^2 + 4 g_p^2 N + gamma21' gamma31')`.
pub fn g1(params: &MemoryParams, omega_c: f64) -> Result<Complex64> {
    let den = g_denominator(params, omega_c)?;
    Ok(Complex64::new(params.coupling_strength_sq, 0.0) / den)
}

/// Group-velocity fraction
/// `g2 = (Omega_c^2 + gamma21' gamma31') / (Omega_c^2 + 4 g_p^2 N + gamma21' gamma31')`.
pub fn g2(params: &MemoryParams, omega_c: f64) -> Result<Complex64> {
    let den = g_denominator(params, omega_c)?;
    let gg = params.gamma21_prime() * params.gamma31_prime();
    Ok((Complex64::new(omega_c * omega_c, 0.0) + gg) / den)
}

/// Attenuation factor `f(t) = exp(-(gamma21'/2) int_0^t g1(tau) dtau)`
/// evaluated by adaptive quadrature over the schedule.
///
/// Requires `t >= t2` (the field has been retrieved).
pub fn attenuation_factor(
    params: &MemoryParams,
    schedule: &CouplingSchedule,
    t: f64,
) -> Result<AttenuationFactor> {
    if t < schedule.t2() {
        return Err(Error::InvalidParameter(format!(
            "evaluation time {t} precedes retrieval start {}",
            schedule.t2()
        )));
    }
    let integral = integrate_g1(params, schedule, t)?;
    let f = (-(params.gamma21_prime() / 2.0) * integral).exp();
    Ok(AttenuationFactor::new(f))
}

/// Integrate a schedule-dependent complex coefficient, surfacing the first
/// singular-denominator error hit anywhere on the quadrature grid.
fn integrate_coefficient(
    schedule: &CouplingSchedule,
    t: f64,
    eval: impl Fn(f64) -> Result<Complex64>,
) -> Result<Complex64> {
    let singularity = std::cell::RefCell::new(None);
    let value = numerics::integrate_piecewise(
        |tau| match eval(schedule.omega(tau)) {
            Ok(v) => v,
            Err(e) => {
                singularity.borrow_mut().get_or_insert(e);
                Complex64::ZERO
            }
        },
        &schedule.breakpoints_to(t),
        QUAD_ABS_TOL,
    )?;
    match singularity.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// `int_0^t g1(tau) dtau` with panel splits at the segment boundaries.
pub fn integrate_g1(params: &MemoryParams, schedule: &CouplingSchedule, t: f64) -> Result<Complex64> {
    integrate_coefficient(schedule, t, |omega| g1(params, omega))
}

/// `int_0^t g2(tau) dtau`, used by the phase cross-check of the ODE oracle.
pub fn integrate_g2(params: &MemoryParams, schedule: &CouplingSchedule, t: f64) -> Result<Complex64> {
    integrate_coefficient(schedule, t, |omega| g2(params, omega))
}

/// Strong-coupling closed form of the attenuation factor,
/// `f ~ exp(-(gamma21'/2) * 4g_p^2 N / (4g_p^2 N + gamma21' gamma31') * dt_s)`,
/// which confines the damping to the storage window `[t1, t2]`.
pub fn attenuation_factor_closed_form(
    params: &MemoryParams,
    storage_time: f64,
) -> Result<AttenuationFactor> {
    if storage_time < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "storage_time = {storage_time} must be >= 0"
        )));
    }
    let g1_storage = g1(params, 0.0)?;
    let f = (-(params.gamma21_prime() / 2.0) * g1_storage * storage_time).exp();
    Ok(AttenuationFactor::new(f))
}

/// Storage efficiency `eta = |f|^2`.
pub fn storage_efficiency(f: &AttenuationFactor) -> f64 {
    (f.value * f.value.conj()).re
}

/// Integrate the momentum-space polariton equation of motion from 0 to
/// `t_end` and return the final amplitude.
///
/// The right-hand side is coded in its mixing-angle form, making this an
/// independent numerical route against the quadrature of `g1`/`g2`. The
/// wavenumber `k` is kept so the oracle also tracks the propagation phase
/// that the channel layer discards.
pub fn dsp_evolve_numeric(
    params: &MemoryParams,
    schedule: &CouplingSchedule,
    k: f64,
    psi0: Complex64,
) -> Result<Complex64> {
    let g21p = params.gamma21_prime();
    let gg = g21p * params.gamma31_prime();
    let coupling = params.coupling_strength_sq;
    let i = Complex64::I;
    let rhs = move |t: f64, psi: Complex64, sched: &CouplingSchedule| -> Complex64 {
        let omega = sched.omega(t);
        let denom_angle = omega * omega + coupling;
        let cos2 = omega * omega / denom_angle;
        let sin2 = coupling / denom_angle;
        let free = i * k * cos2 - 0.5 * g21p * sin2;
        let bright = (i * k + 0.5 * g21p) * (gg * sin2 * sin2)
            / (Complex64::new(coupling, 0.0) + gg * sin2);
        (free + bright) * psi
    };

    let opts = Rk45Options::default();
    let mut psi = psi0;
    let points = schedule.breakpoints_to(schedule.t_end());
    for w in points.windows(2) {
        psi = numerics::integrate_rk45(|t, y| rhs(t, y, schedule), w[0], w[1], psi, opts)?;
    }
    Ok(psi)
}

/// On-disk description of one memory: parameters plus coupling schedule.
///
/// `unit_system` declares the units of the numbers in the document; when
/// absent the caller supplies a default (the CLI uses `EITSIM_UNITS`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemoryDocument {
    pub gamma21: f64,
    pub gamma31: f64,
    pub delta: f64,
    pub delta_p: f64,
    pub coupling_strength_sq: f64,
    pub segments: Vec<Segment>,
    pub t1: f64,
    pub t2: f64,
    #[serde(default)]
    pub unit_system: Option<UnitSystem>,
}

impl MemoryDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// Validate and convert into Gamma-unit parameter and schedule values.
    pub fn resolve(&self, default_units: UnitSystem) -> Result<(MemoryParams, CouplingSchedule)> {
        let units = self.unit_system.unwrap_or(default_units);
        let params = MemoryParams::new(
            self.gamma21,
            self.gamma31,
            self.delta,
            self.delta_p,
            self.coupling_strength_sq,
        )?
        .into_gamma_units(units)?;
        let segments = self
            .segments
            .iter()
            .map(|s| {
                let shape = match s.shape {
                    SegmentShape::Hold { omega } => SegmentShape::Hold {
                        omega: units.rate_to_gamma(omega),
                    },
                    SegmentShape::LinearRamp { omega_start, omega_end } => SegmentShape::LinearRamp {
                        omega_start: units.rate_to_gamma(omega_start),
                        omega_end: units.rate_to_gamma(omega_end),
                    },
                    SegmentShape::SmoothRamp { omega_start, omega_end, steepness } => {
                        SegmentShape::SmoothRamp {
                            omega_start: units.rate_to_gamma(omega_start),
                            omega_end: units.rate_to_gamma(omega_end),
                            steepness,
                        }
                    }
                };
                Segment {
                    start: units.time_to_gamma(s.start),
                    end: units.time_to_gamma(s.end),
                    shape,
                }
            })
            .collect();
        let schedule = CouplingSchedule::new(
            segments,
            units.time_to_gamma(self.t1),
            units.time_to_gamma(self.t2),
        )?;
        Ok((params, schedule))
    }
}
