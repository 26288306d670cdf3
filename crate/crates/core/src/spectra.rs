//! Instantaneous spectra: biorthogonal eigensystems, the adiabatic basis,
//! the shortcut ingredients κ(t) and Q(t), supermodes and phase classification.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    bare_hamiltonian_rate, build_hamiltonian, detuning, detuning_rate, magnon_frequency,
    ComplexMatrix2, ErrorParams, Protocol, SystemParams, Vector2,
};

/// Relative eigenvalue gap below which a matrix is treated as defective.
pub const DEFECTIVE_GAP: f64 = 1e-8;

/// Absolute tolerance on `g − (κ_c+κ_m)/2` for the exceptional-point label.
pub const EP_TOLERANCE: f64 = 1e-12;

/// Relative size of `|Δ'² + 4g²|` (in units of `4g²`) below which Q(t) is a pole.
pub const POLE_TOLERANCE: f64 = 1e-9;

/// Right eigenvectors and left covectors of a 2×2 non-Hermitian matrix.
///
/// Branch 1 is `λ₁ = tr/2 + √((H₀₀−H₁₁)²/4 + H₀₁H₁₀)` with the principal root;
/// for the cavity-magnon matrix this is the `|φ₊⟩ ∝ (g, A₊)` branch. Right
/// vectors have unit Euclidean norm; when the matrix is not defective the
/// left covectors satisfy `left_k · right_k = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    pub lambda1: C64,
    pub lambda2: C64,
    pub right1: Vector2,
    pub right2: Vector2,
    pub left1: Vector2,
    pub left2: Vector2,
    pub defective: bool,
}

fn dot(a: &Vector2, b: &Vector2) -> C64 {
    a[0] * b[0] + a[1] * b[1]
}

fn euclid(v: &Vector2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

fn normalized(v: Vector2) -> Vector2 {
    let n = euclid(&v);
    [v[0] / n, v[1] / n]
}

/// Picks the better-conditioned of two candidate null vectors.
fn pick(a: Vector2, b: Vector2) -> Vector2 {
    if euclid(&a) >= euclid(&b) {
        normalized(a)
    } else {
        normalized(b)
    }
}

impl EigenSystem {
    pub fn new(h: &ComplexMatrix2) -> Self {
        let (a, b, c, d) = (h.get(0, 0), h.get(0, 1), h.get(1, 0), h.get(1, 1));
        let mean = (a + d) * 0.5;
        let half = (a - d) * 0.5;
        let root = (half * half + b * c).sqrt();
        let lambda1 = mean + root;
        let lambda2 = mean - root;
        let scale = h.max_norm();
        let defective = (lambda1 - lambda2).norm() < DEFECTIVE_GAP * scale;

        let zero = C64::new(0.0, 0.0);
        let e0 = [C64::new(1.0, 0.0), zero];
        let e1 = [zero, C64::new(1.0, 0.0)];
        let (right1, right2, mut left1, mut left2) = if b == zero && c == zero {
            // Diagonal: λ₁ sits on whichever entry the principal root selects.
            if (lambda1 - a).norm() <= (lambda1 - d).norm() {
                (e0, e1, e0, e1)
            } else {
                (e1, e0, e1, e0)
            }
        } else {
            let right = |lam: C64| pick([b, lam - a], [lam - d, c]);
            let left = |lam: C64| pick([c, lam - a], [lam - d, b]);
            (right(lambda1), right(lambda2), left(lambda1), left(lambda2))
        };
        if !defective {
            let n1 = dot(&left1, &right1);
            let n2 = dot(&left2, &right2);
            left1 = [left1[0] / n1, left1[1] / n1];
            left2 = [left2[0] / n2, left2[1] / n2];
        }
        EigenSystem {
            lambda1,
            lambda2,
            right1,
            right2,
            left1,
            left2,
            defective,
        }
    }

    pub fn eigenvalue(&self, branch: Branch) -> C64 {
        match branch {
            Branch::Plus => self.lambda1,
            Branch::Minus => self.lambda2,
        }
    }

    pub fn right(&self, branch: Branch) -> Vector2 {
        match branch {
            Branch::Plus => self.right1,
            Branch::Minus => self.right2,
        }
    }

    pub fn left(&self, branch: Branch) -> Vector2 {
        match branch {
            Branch::Plus => self.left1,
            Branch::Minus => self.left2,
        }
    }

    /// Biorthogonal coefficients `(⟨φ̂₁|ψ⟩, ⟨φ̂₂|ψ⟩)`.
    pub fn coefficients(&self, psi: &Vector2) -> (C64, C64) {
        (dot(&self.left1, psi), dot(&self.left2, psi))
    }

    /// Max-norm residual `‖H r_k − λ_k r_k‖` over both branches.
    pub fn residual(&self, h: &ComplexMatrix2) -> f64 {
        [(self.lambda1, self.right1), (self.lambda2, self.right2)]
            .iter()
            .map(|(lam, r)| {
                let hr = h.apply(r);
                (hr[0] - lam * r[0]).norm().max((hr[1] - lam * r[1]).norm())
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|left_j · right_k|` for `j ≠ k`.
    pub fn biorthogonality_defect(&self) -> f64 {
        dot(&self.left1, &self.right2)
            .norm()
            .max(dot(&self.left2, &self.right1).norm())
    }
}

/// Eigenbranch label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn other(self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    PTSymmetric,
    BrokenPT,
    ExceptionalPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stability {
    Unstable,
    AsymptoticallyStable,
    Marginal,
}

impl Symmetry {
    /// +1 symmetric, −1 broken, 0 exceptional point.
    pub fn code(self) -> i32 {
        match self {
            Symmetry::PTSymmetric => 1,
            Symmetry::BrokenPT => -1,
            Symmetry::ExceptionalPoint => 0,
        }
    }
}

impl Stability {
    /// +1 unstable, −1 asymptotically stable, 0 marginal.
    pub fn code(self) -> i32 {
        match self {
            Stability::Unstable => 1,
            Stability::AsymptoticallyStable => -1,
            Stability::Marginal => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhasePoint {
    pub symmetry: Symmetry,
    pub stability: Stability,
}

impl PhasePoint {
    /// Phase-diagram region: 1 broken/unstable, 2 symmetric/unstable,
    /// 3 broken/stable, 4 symmetric/stable, 0 on a border.
    pub fn region(self) -> u8 {
        match (self.symmetry, self.stability) {
            (Symmetry::BrokenPT, Stability::Unstable) => 1,
            (Symmetry::PTSymmetric, Stability::Unstable) => 2,
            (Symmetry::BrokenPT, Stability::AsymptoticallyStable) => 3,
            (Symmetry::PTSymmetric, Stability::AsymptoticallyStable) => 4,
            _ => 0,
        }
    }
}

impl fmt::Display for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{:?}", self.symmetry, self.stability)
    }
}

pub fn classify_phase(g_m: f64, kappa_c: f64, kappa_m: f64) -> PhasePoint {
    let border = g_m - 0.5 * (kappa_c + kappa_m);
    let symmetry = if border.abs() <= EP_TOLERANCE {
        Symmetry::ExceptionalPoint
    } else if border > 0.0 {
        Symmetry::PTSymmetric
    } else {
        Symmetry::BrokenPT
    };
    let stability = if kappa_c > kappa_m {
        Stability::Unstable
    } else if kappa_c < kappa_m {
        Stability::AsymptoticallyStable
    } else {
        Stability::Marginal
    };
    PhasePoint {
        symmetry,
        stability,
    }
}

/// `ω± = ω₁ − (i/2)(κ_c − κ_m) ± √(g² − (κ_c+κ_m)²/4)`, principal root.
pub fn supermode_frequencies(omega_1: f64, p: &SystemParams) -> (C64, C64) {
    let centre = C64::new(omega_1, -0.5 * (p.kappa_c - p.kappa_m));
    let s = 0.5 * (p.kappa_c + p.kappa_m);
    let root = C64::new(p.g_m * p.g_m - s * s, 0.0).sqrt();
    (centre + root, centre - root)
}

/// θ(t) = ½·atan2(2g, Δ(t)), continuous through Δ = 0 and in (0, π/2) for g > 0.
pub fn mixing_angle(p: &SystemParams, t: f64) -> Result<f64> {
    let delta = detuning(p, t);
    if p.g_m == 0.0 && delta == 0.0 {
        return Err(Error::UndefinedAngle { t });
    }
    Ok(0.5 * (2.0 * p.g_m).atan2(delta))
}

/// Nonadiabatic coupling `g Δ̇ / (Δ² + 4g²)`.
///
/// This is the coupling that the dissipation schedule [`nhs_kappa`] cancels;
/// it equals `−dθ/dt` for the angle returned by [`mixing_angle`].
pub fn nonadiabatic_coupling(p: &SystemParams, t: f64) -> f64 {
    if p.g_m == 0.0 {
        return 0.0;
    }
    let delta = detuning(p, t);
    p.g_m * detuning_rate(p, t) / (delta * delta + 4.0 * p.g_m * p.g_m)
}

/// Dissipation schedule κ(t) = −Δ̇ / (2√(Δ² + 4g²)).
pub fn nhs_kappa(p: &SystemParams, t: f64) -> f64 {
    let delta = detuning(p, t);
    -detuning_rate(p, t) / (2.0 * (delta * delta + 4.0 * p.g_m * p.g_m).sqrt())
}

/// Complex detuning Δ' = H₁₁ − H₀₀ of the bare matrix.
pub fn complex_detuning(p: &SystemParams, t: f64) -> C64 {
    let (h00, h11) = p.diagonal(t, p.kappa_c, p.kappa_m);
    h11 - h00
}

/// Counterdiabatic amplitude `Q(t) = i g ω_d ε_m sin(ω_d t) / (Δ'² + 4g²)`.
pub fn cd_coupling(p: &SystemParams, t: f64) -> Result<C64> {
    if p.g_m == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let dp = complex_detuning(p, t);
    let four_g2 = 4.0 * p.g_m * p.g_m;
    let denom = dp * dp + four_g2;
    if denom.norm() < POLE_TOLERANCE * four_g2 {
        return Err(Error::Pole {
            t,
            magnitude: denom.norm(),
        });
    }
    let numer = C64::new(0.0, p.g_m * p.omega_d * p.epsilon_m * (p.omega_d * t).sin());
    Ok(numer / denom)
}

/// `H_c(t) = [[0, Q], [−Q, 0]]` (ħ = 1).
pub fn counterdiabatic_hamiltonian(p: &SystemParams, t: f64) -> Result<ComplexMatrix2> {
    let q = cd_coupling(p, t)?;
    let zero = C64::new(0.0, 0.0);
    Ok(ComplexMatrix2::from_entries([[zero, q], [-q, zero]]))
}

/// Counterdiabatic field from biorthogonal projectors,
/// `i Σ_{m≠n} |φ_m⟩⟨φ̂_m|Ḣ|φ_n⟩⟨φ̂_n| / (λ_n − λ_m)`.
///
/// Independent of the closed form in [`counterdiabatic_hamiltonian`]; requires a
/// non-defective eigensystem.
pub fn projector_counterdiabatic(
    h: &ComplexMatrix2,
    h_rate: &ComplexMatrix2,
) -> Result<ComplexMatrix2> {
    let es = EigenSystem::new(h);
    if es.defective {
        return Err(Error::InvalidParameter("defective eigensystem".into()));
    }
    let pairs = [(Branch::Plus, Branch::Minus), (Branch::Minus, Branch::Plus)];
    let mut out = ComplexMatrix2::zero();
    for (m, n) in pairs {
        let element = dot(&es.left(m), &h_rate.apply(&es.right(n)));
        let weight = C64::new(0.0, 1.0) * element / (es.eigenvalue(n) - es.eigenvalue(m));
        out = out + ComplexMatrix2::outer(&es.right(m), &es.left(n)).scale(weight);
    }
    Ok(out)
}

/// Projector-form counterdiabatic field for the bare Hamiltonian of `p` at `t`.
pub fn projector_counterdiabatic_at(p: &SystemParams, t: f64) -> Result<ComplexMatrix2> {
    let h = build_hamiltonian(p, Protocol::Bare, &ErrorParams::default(), t)?;
    projector_counterdiabatic(&h, &bare_hamiltonian_rate(p, t))
}

/// Adiabatic-basis description at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticFrame {
    pub theta: f64,
    pub theta_dot: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Frame matrix in the ordered basis `(|φ₋⟩, |φ₊⟩)`: `[[E₋₋, E₋₊], [E₊₋, E₊₊]]`.
    pub frame_hamiltonian: ComplexMatrix2,
}

impl AdiabaticFrame {
    pub fn e_minus_plus(&self) -> C64 {
        self.frame_hamiltonian.get(0, 1)
    }

    pub fn e_plus_minus(&self) -> C64 {
        self.frame_hamiltonian.get(1, 0)
    }
}

/// Frame matrix built from the cavity rate `kappa_c` and magnon rate `kappa_m`.
pub fn adiabatic_frame_with_rates(
    p: &SystemParams,
    t: f64,
    kappa_c: f64,
    kappa_m: f64,
) -> Result<AdiabaticFrame> {
    let theta = mixing_angle(p, t)?;
    let theta_dot = nonadiabatic_coupling(p, t);
    let delta = detuning(p, t);
    let centre = 0.5 * (p.omega_c + magnon_frequency(p, t));
    let half_gap = (p.g_m * p.g_m + 0.25 * delta * delta).sqrt();
    let (lambda_plus, lambda_minus) = (centre + half_gap, centre - half_gap);

    let (sc, sm) = p.diagonal_sign.multipliers();
    let (rc, rm) = (sc * kappa_c, sm * kappa_m);
    let (s, c) = theta.sin_cos();
    let i = C64::new(0.0, 1.0);
    let mixed = i * (s * c) * (rm - rc);
    let e_mm = lambda_minus + i * (rc * c * c + rm * s * s);
    let e_mp = mixed - i * theta_dot;
    let e_pm = mixed + i * theta_dot;
    let e_pp = lambda_plus + i * (rc * s * s + rm * c * c);
    Ok(AdiabaticFrame {
        theta,
        theta_dot,
        lambda_plus,
        lambda_minus,
        frame_hamiltonian: ComplexMatrix2::from_entries([[e_mm, e_mp], [e_pm, e_pp]]),
    })
}

pub fn adiabatic_frame(p: &SystemParams, t: f64) -> Result<AdiabaticFrame> {
    adiabatic_frame_with_rates(p, t, p.kappa_c, p.kappa_m)
}

/// Frame matrix with both rates set to the dissipation schedule κ(t).
pub fn adiabatic_frame_nhs(p: &SystemParams, t: f64) -> Result<AdiabaticFrame> {
    let k = nhs_kappa(p, t);
    adiabatic_frame_with_rates(p, t, k, k)
}

/// Amplitudes `(c₋, c₊)` of `psi` on `|φ₋⟩ = (−sin θ, cos θ)`, `|φ₊⟩ = (cos θ, sin θ)`.
pub fn adiabatic_amplitudes(theta: f64, psi: &Vector2) -> (C64, C64) {
    let (s, c) = theta.sin_cos();
    (psi[1] * c - psi[0] * s, psi[0] * c + psi[1] * s)
}
