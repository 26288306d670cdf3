//! Amplitude dynamics `ψ̇ = −iH(t)ψ` with an adaptive Dormand–Prince 5(4) pair.
//!
//! Non-Hermitian evolution grows or decays exponentially, so the integrator
//! keeps the state in range by renormalising whenever its norm leaves
//! `[1e-150, 1e150]` and accumulating `ln‖ψ‖` in a per-sample log scale. The
//! absolute tolerance is measured relative to the current state norm, which
//! makes the step sequence invariant under rescaling of the initial state.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    build_hamiltonian, ComplexMatrix2, ErrorParams, Protocol, SystemParams, Vector2,
};
use crate::spectra::{Branch, EigenSystem};

const RESCALE_HIGH: f64 = 1e150;
const RESCALE_LOW: f64 = 1e-150;
const MAX_STEPS: usize = 20_000_000;

/// Cavity and magnon amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector2 {
    pub a: C64,
    pub m: C64,
}

impl StateVector2 {
    pub fn new(a: C64, m: C64) -> Self {
        StateVector2 { a, m }
    }

    /// Pure photon `(1, 0)`.
    pub fn photon() -> Self {
        StateVector2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    pub fn from_array(v: Vector2) -> Self {
        StateVector2::new(v[0], v[1])
    }

    pub fn as_array(&self) -> Vector2 {
        [self.a, self.m]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.m.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.a.norm().hypot(self.m.norm())
    }

    pub fn scale(&self, s: C64) -> Self {
        StateVector2::new(self.a * s, self.m * s)
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.m]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// `(|a|², |m|²) / (|a|² + |m|²)`.
pub fn relative_populations(s: &StateVector2) -> Result<(f64, f64)> {
    // Work with the larger modulus factored out so tiny and huge states behave.
    let big = s.a.norm().max(s.m.norm());
    if big == 0.0 || !big.is_finite() {
        return Err(Error::ZeroNorm);
    }
    let a = (s.a / big).norm_sqr();
    let m = (s.m / big).norm_sqr();
    let total = a + m;
    Ok((a / total, m / total))
}

/// How the nominal time axis maps onto integration time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeConvention {
    /// Axis value is `ω_d t`.
    #[default]
    Raw,
    /// Axis value counts drive periods: integration time is `2π ×` axis.
    Period,
}

impl TimeConvention {
    pub const ALL: [TimeConvention; 2] = [TimeConvention::Raw, TimeConvention::Period];

    pub fn factor(self) -> f64 {
        match self {
            TimeConvention::Raw => 1.0,
            TimeConvention::Period => TAU,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeConvention::Raw => "raw",
            TimeConvention::Period => "period",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        TimeConvention::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::NotFound {
                kind: "time convention",
                name: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub sample_count: usize,
    pub time_convention: TimeConvention,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 1e-2,
            t_start: 0.0,
            t_end: 2.0,
            sample_count: 1001,
            time_convention: TimeConvention::Raw,
        }
    }
}

impl IntegratorConfig {
    pub fn with_span(t_start: f64, t_end: f64) -> Self {
        IntegratorConfig {
            t_start,
            t_end,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be > 0");
        }
        if self.max_step.is_nan() || self.max_step <= 0.0 {
            return bad("max_step must be > 0");
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end > self.t_start) {
            return bad("t_end must exceed t_start");
        }
        if self.sample_count < 2 {
            return bad("sample_count must be >= 2");
        }
        Ok(())
    }

    /// Sample times in axis units.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.sample_count;
        let span = self.t_end - self.t_start;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.t_end
                } else {
                    self.t_start + span * (i as f64) / ((n - 1) as f64)
                }
            })
            .collect()
    }
}

/// Sampled solution of one evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Sample times in axis units.
    pub times: Vec<f64>,
    pub time_convention: TimeConvention,
    pub states: Vec<StateVector2>,
    pub p0r: Vec<f64>,
    pub p1r: Vec<f64>,
    /// Natural log of the factor removed from `states` by renormalisation.
    pub log_scale: Vec<f64>,
    pub tracking_fidelity: Option<Vec<Option<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Integration time of sample `i`.
    pub fn physical_time(&self, i: usize) -> f64 {
        self.times[i] * self.time_convention.factor()
    }

    pub fn final_populations(&self) -> (f64, f64) {
        let i = self.len() - 1;
        (self.p0r[i], self.p1r[i])
    }

    /// Smallest defined tracking fidelity, if any was computed.
    pub fn min_tracking_fidelity(&self) -> Option<f64> {
        self.tracking_fidelity
            .as_ref()?
            .iter()
            .flatten()
            .copied()
            .fold(None, |acc: Option<f64>, f| {
                Some(acc.map_or(f, |a| a.min(f)))
            })
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: &Vector2, terms: &[(f64, &Vector2)], h: f64) -> Vector2 {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += k[0] * (h * c);
        out[1] += k[1] * (h * c);
    }
    out
}

#[inline]
fn vnorm(v: &Vector2) -> f64 {
    v[0].norm().hypot(v[1].norm())
}

/// Adaptive integration of `ψ̇ = −iH(t)ψ` for an arbitrary Hamiltonian source.
///
/// `hamiltonian` receives integration time. Returns the sampled trajectory with
/// tracking fidelity left empty.
pub fn evolve_with<F>(
    hamiltonian: F,
    psi0: StateVector2,
    cfg: &IntegratorConfig,
) -> Result<Trajectory>
where
    F: Fn(f64) -> Result<ComplexMatrix2>,
{
    cfg.validate()?;
    if !psi0.is_finite() {
        return Err(Error::NonFiniteState { t: cfg.t_start });
    }
    if psi0.norm() == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let factor = cfg.time_convention.factor();
    let axis = cfg.sample_times();
    let n = axis.len();

    let minus_i = C64::new(0.0, -1.0);
    let rhs = |t: f64, y: &Vector2| -> Result<Vector2> {
        let h = hamiltonian(t)?;
        let hy = h.apply(y);
        Ok([hy[0] * minus_i, hy[1] * minus_i])
    };

    let mut traj = Trajectory {
        times: axis.clone(),
        time_convention: cfg.time_convention,
        states: Vec::with_capacity(n),
        p0r: Vec::with_capacity(n),
        p1r: Vec::with_capacity(n),
        log_scale: Vec::with_capacity(n),
        tracking_fidelity: None,
    };

    let mut t = axis[0] * factor;
    let mut y = psi0.as_array();
    let mut log_scale = 0.0;
    let rescale = |y: &mut Vector2, k: &mut Vector2, log_scale: &mut f64| {
        let nrm = vnorm(y);
        if !(RESCALE_LOW..=RESCALE_HIGH).contains(&nrm) {
            for z in y.iter_mut().chain(k.iter_mut()) {
                *z /= nrm;
            }
            *log_scale += nrm.ln();
        }
    };

    let mut k1 = rhs(t, &y)?;
    rescale(&mut y, &mut k1, &mut log_scale);
    let record = |traj: &mut Trajectory, y: &Vector2, log_scale: f64| -> Result<()> {
        let s = StateVector2::from_array(*y);
        let (p0, p1) = relative_populations(&s)?;
        traj.states.push(s);
        traj.p0r.push(p0);
        traj.p1r.push(p1);
        traj.log_scale.push(log_scale);
        Ok(())
    };
    record(&mut traj, &y, log_scale)?;

    let fnorm = vnorm(&k1);
    let mut h = if fnorm > 0.0 {
        0.01 * vnorm(&y) / fnorm
    } else {
        cfg.max_step
    };
    h = h.min(cfg.max_step);
    let mut steps = 0usize;
    let mut last_rejected = false;

    for &target_axis in &axis[1..] {
        let target = target_axis * factor;
        while t < target {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::TooManySteps { t });
            }
            let remaining = target - t;
            let landing = h >= remaining * (1.0 - 1e-12);
            let step = if landing { remaining } else { h };
            if step < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, h: step });
            }

            let k2 = rhs(t + C2 * step, &axpy(&y, &[(A21, &k1)], step))?;
            let k3 = rhs(t + C3 * step, &axpy(&y, &[(A31, &k1), (A32, &k2)], step))?;
            let k4 = rhs(
                t + C4 * step,
                &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], step),
            )?;
            let k5 = rhs(
                t + C5 * step,
                &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], step),
            )?;
            let t_new = if landing { target } else { t + step };
            let k6 = rhs(
                t_new,
                &axpy(
                    &y,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    step,
                ),
            )?;
            let y_new = axpy(
                &y,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                step,
            );
            let k7 = rhs(t_new, &y_new)?;
            let err_vec = axpy(
                &[C64::new(0.0, 0.0); 2],
                &[
                    (E1, &k1),
                    (E3, &k3),
                    (E4, &k4),
                    (E5, &k5),
                    (E6, &k6),
                    (E7, &k7),
                ],
                step,
            );

            let floor = cfg.abs_tol * vnorm(&y).max(vnorm(&y_new));
            let mut acc = 0.0;
            for i in 0..2 {
                let sc = floor + cfg.rel_tol * y[i].norm().max(y_new[i].norm());
                let r = err_vec[i].norm() / sc;
                acc += r * r;
            }
            let err = (acc / 2.0).sqrt();
            if !err.is_finite() {
                if !(y_new[0].re.is_finite() && y_new[1].re.is_finite())
                    && step <= cfg.max_step * 1e-12
                {
                    return Err(Error::NonFiniteState { t });
                }
                h = step * 0.1;
                last_rejected = true;
                continue;
            }

            if err <= 1.0 {
                t = t_new;
                y = y_new;
                k1 = k7;
                if !(y[0].re.is_finite()
                    && y[0].im.is_finite()
                    && y[1].re.is_finite()
                    && y[1].im.is_finite())
                {
                    return Err(Error::NonFiniteState { t });
                }
                rescale(&mut y, &mut k1, &mut log_scale);
                let mut grow = if err == 0.0 {
                    5.0
                } else {
                    0.9 * err.powf(-0.2)
                };
                grow = grow.clamp(0.2, 5.0);
                if last_rejected {
                    grow = grow.min(1.0);
                }
                // A landing step may be artificially short; keep the proposal.
                let base = if landing { h.max(step) } else { step };
                h = (base * grow).min(cfg.max_step);
                last_rejected = false;
            } else {
                let shrink = (0.9 * err.powf(-0.2)).max(0.2);
                h = step * shrink;
                last_rejected = true;
            }
        }
        record(&mut traj, &y, log_scale)?;
    }
    Ok(traj)
}

/// Integrates the protocol Hamiltonian from `psi0` over the configured span.
pub fn evolve(
    p: &SystemParams,
    proto: Protocol,
    err: &ErrorParams,
    psi0: StateVector2,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    p.validate()?;
    err.validate()?;
    evolve_with(|t| build_hamiltonian(p, proto, err, t), psi0, cfg)
}

/// Endpoint magnon population starting from the pure photon state.
pub fn transition_probability(
    p: &SystemParams,
    proto: Protocol,
    err: &ErrorParams,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let endpoint_cfg = IntegratorConfig {
        sample_count: 2,
        ..*cfg
    };
    let traj = evolve(p, proto, err, StateVector2::photon(), &endpoint_cfg)?;
    Ok(traj.final_populations().1)
}

fn hermitian_overlap(u: &Vector2, v: &Vector2) -> f64 {
    (u[0].conj() * v[0] + u[1].conj() * v[1]).norm() / (vnorm(u) * vnorm(v))
}

/// Weight of `psi` on eigenbranch `branch`, normalised over both branches:
/// `|c_k|²‖φ_k‖² / Σ_j |c_j|²‖φ_j‖²` with `c_k = ⟨φ̂_k|ψ⟩`.
pub fn branch_weight(es: &EigenSystem, psi: &Vector2, branch: Branch) -> f64 {
    let (c1, c2) = es.coefficients(psi);
    let w1 = c1.norm_sqr() * vnorm(&es.right1).powi(2);
    let w2 = c2.norm_sqr() * vnorm(&es.right2).powi(2);
    let total = w1 + w2;
    match branch {
        Branch::Plus => w1 / total,
        Branch::Minus => w2 / total,
    }
}

/// Per-sample fidelity of the evolving state with the instantaneous eigenstate
/// of the protocol's reference Hamiltonian that it starts closest to.
///
/// The tracked branch is followed by eigenvector continuity between samples.
/// Samples with a defective eigensystem are `None`.
pub fn tracking_fidelity(
    p: &SystemParams,
    proto: Protocol,
    traj: &Trajectory,
) -> Result<Vec<Option<f64>>> {
    let strategy = proto.strategy();
    let mut out = Vec::with_capacity(traj.len());
    let mut tracked: Option<(Branch, Vector2)> = None;
    for i in 0..traj.len() {
        let h = strategy.reference_hamiltonian(p, traj.physical_time(i))?;
        let es = EigenSystem::new(&h);
        let psi = traj.states[i].as_array();
        if es.defective {
            out.push(None);
            continue;
        }
        let branch = match tracked {
            None => {
                if branch_weight(&es, &psi, Branch::Plus) >= branch_weight(&es, &psi, Branch::Minus)
                {
                    Branch::Plus
                } else {
                    Branch::Minus
                }
            }
            Some((_, prev)) => {
                if hermitian_overlap(&prev, &es.right1) >= hermitian_overlap(&prev, &es.right2) {
                    Branch::Plus
                } else {
                    Branch::Minus
                }
            }
        };
        tracked = Some((branch, es.right(branch)));
        out.push(Some(branch_weight(&es, &psi, branch)));
    }
    Ok(out)
}
