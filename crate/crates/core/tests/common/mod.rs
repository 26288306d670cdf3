#![allow(dead_code)]

use magnon_sta::model::{build_hamiltonian, ErrorParams, Protocol, SystemParams, Vector2};
use magnon_sta::Result;
use num_complex::Complex64 as C64;

/// Classical fixed-step RK4 for `ψ̇ = −iH(t)ψ` from `t0` to `t1` in integration time.
///
/// Kept separate from the library integrator on purpose: no adaptivity, no
/// rescaling, no sample clipping.
pub fn rk4<F>(h_of: F, psi0: Vector2, t0: f64, t1: f64, dt: f64) -> Result<Vector2>
where
    F: Fn(f64) -> Result<[[C64; 2]; 2]>,
{
    let steps = ((t1 - t0) / dt).round() as usize;
    let dt = (t1 - t0) / steps as f64;
    let mi = C64::new(0.0, -1.0);
    let rhs = |t: f64, y: &Vector2| -> Result<Vector2> {
        let h = h_of(t)?;
        Ok([
            mi * (h[0][0] * y[0] + h[0][1] * y[1]),
            mi * (h[1][0] * y[0] + h[1][1] * y[1]),
        ])
    };
    let add = |y: &Vector2, k: &Vector2, s: f64| [y[0] + k[0] * s, y[1] + k[1] * s];
    let mut y = psi0;
    for n in 0..steps {
        let t = t0 + n as f64 * dt;
        let k1 = rhs(t, &y)?;
        let k2 = rhs(t + 0.5 * dt, &add(&y, &k1, 0.5 * dt))?;
        let k3 = rhs(t + 0.5 * dt, &add(&y, &k2, 0.5 * dt))?;
        let k4 = rhs(t + dt, &add(&y, &k3, dt))?;
        for i in 0..2 {
            y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
        }
        let big = y[0].norm().max(y[1].norm());
        if !(1e-100..=1e100).contains(&big) {
            y = [y[0] / big, y[1] / big];
        }
    }
    Ok(y)
}

pub fn protocol_rk4(
    p: &SystemParams,
    proto: Protocol,
    err: &ErrorParams,
    psi0: Vector2,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Vector2> {
    rk4(
        |t| Ok(build_hamiltonian(p, proto, err, t)?.entries()),
        psi0,
        t0,
        t1,
        dt,
    )
}

pub fn populations(y: &Vector2) -> (f64, f64) {
    let a = y[0].norm_sqr();
    let m = y[1].norm_sqr();
    (a / (a + m), m / (a + m))
}

pub fn photon() -> Vector2 {
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
}

pub struct Case {
    pub name: &'static str,
    pub params: SystemParams,
    pub protocol: Protocol,
    pub errors: ErrorParams,
    pub span: [f64; 2],
    pub time_convention: magnon_sta::dynamics::TimeConvention,
}

fn case(name: &'static str, g: f64, kc: f64, km: f64, protocol: Protocol) -> Case {
    Case {
        name,
        params: SystemParams {
            g_m: g,
            kappa_c: kc,
            kappa_m: km,
            ..SystemParams::default()
        },
        protocol,
        errors: ErrorParams::default(),
        span: [0.0, 2.0],
        time_convention: magnon_sta::dynamics::TimeConvention::Raw,
    }
}

/// Twenty cases over the three protocols and the three phases.
pub fn battery() -> Vec<Case> {
    use magnon_sta::dynamics::TimeConvention;
    use magnon_sta::model::DiagonalSign;
    use Protocol::{Bare, Cd, Nhs};
    let mut v = vec![
        case("bare hermitian", 1.0, 0.0, 0.0, Bare),
        case("bare pt", 1.0, 1.0, 0.3, Bare),
        case("bare ep", 0.65, 1.0, 0.3, Bare),
        case("bare ep equal rates", 0.5, 0.5, 0.5, Bare),
        case("bare broken", 0.3, 1.0, 0.6, Bare),
        case("bare broken strong", 1.0, 2.0, 2.0, Bare),
        case("nhs g=0.1", 0.1, 0.0, 0.0, Nhs),
        case("nhs g=0.3", 0.3, 0.0, 0.0, Nhs),
        case("nhs g=0.6", 0.6, 0.0, 0.0, Nhs),
        case("nhs g=1", 1.0, 0.0, 0.0, Nhs),
        case("nhs with errors", 1.0, 0.0, 0.0, Nhs),
        case("nhs period axis", 0.6, 0.0, 0.0, Nhs),
        case("cd pt", 1.0, 1.0, 0.3, Cd),
        case("cd pt closer", 1.0, 1.0, 0.6, Cd),
        case("cd ep", 1.0, 1.0, 1.0, Cd),
        case("cd broken", 1.0, 2.0, 2.0, Cd),
        case("cd pt gain-loss", 1.0, 1.0, 0.3, Cd),
        case("cd broken with errors", 1.0, 2.0, 2.0, Cd),
        case("cd broken loss-loss", 1.0, 2.0, 2.0, Cd),
        case("bare broken gain-loss", 0.3, 1.0, 0.6, Bare),
    ];
    for c in v.iter_mut() {
        match c.name {
            "nhs with errors" => c.errors = ErrorParams::new(0.2, -0.3),
            "nhs period axis" => c.time_convention = TimeConvention::Period,
            // The counterdiabatic field has a pole at t = 0 on the EP.
            "cd ep" => c.span = [0.5, 2.0],
            "cd pt gain-loss" | "bare broken gain-loss" => {
                c.params.diagonal_sign = DiagonalSign::GainLoss
            }
            "cd broken with errors" => c.errors = ErrorParams::new(-0.3, 0.25),
            "cd broken loss-loss" => c.params.diagonal_sign = DiagonalSign::LossLoss,
            _ => {}
        }
    }
    v
}

/// Largest endpoint population difference between the library integrator and RK4 at `dt`.
pub fn oracle_gap(c: &Case, dt: f64) -> Result<f64> {
    use magnon_sta::dynamics::{evolve, IntegratorConfig, StateVector2};
    let cfg = IntegratorConfig {
        t_start: c.span[0],
        t_end: c.span[1],
        sample_count: 2,
        time_convention: c.time_convention,
        ..IntegratorConfig::default()
    };
    let traj = evolve(
        &c.params,
        c.protocol,
        &c.errors,
        StateVector2::photon(),
        &cfg,
    )?;
    let f = c.time_convention.factor();
    let y = protocol_rk4(
        &c.params,
        c.protocol,
        &c.errors,
        photon(),
        c.span[0] * f,
        c.span[1] * f,
        dt,
    )?;
    let (q0, q1) = populations(&y);
    let (p0, p1) = traj.final_populations();
    Ok((p0 - q0).abs().max((p1 - q1).abs()))
}
