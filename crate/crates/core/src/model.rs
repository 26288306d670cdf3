//! Parameter types, the 2×2 complex matrix, and Hamiltonian assembly.
//!
//! All frequencies and rates are in units of the drive frequency ω_d, and time
//! is dimensionless in units of 1/ω_d. The single-excitation coefficient matrix
//! acts on (a, m): cavity photon amplitude first, magnon amplitude second.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::control;
use crate::error::{Error, Result};

/// Placement of ±i on the cavity/magnon diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalSign {
    /// `ω_c + iκ_c` on the cavity, `ω_m(t) − iκ_m` on the magnon.
    #[default]
    AsPrinted,
    /// `ω_c − iκ_c` and `ω_m(t) − iκ_m`: both rates damp.
    LossLoss,
    /// `ω_c − iκ_c` and `ω_m(t) + iκ_m`: lossy cavity, amplifying magnon.
    GainLoss,
}

impl DiagonalSign {
    pub const ALL: [DiagonalSign; 3] = [
        DiagonalSign::AsPrinted,
        DiagonalSign::LossLoss,
        DiagonalSign::GainLoss,
    ];

    /// Multipliers `(s_c, s_m)` such that the diagonal reads
    /// `ω_c + i·s_c·κ_c` and `ω_m(t) + i·s_m·κ_m`.
    pub fn multipliers(self) -> (f64, f64) {
        match self {
            DiagonalSign::AsPrinted => (1.0, -1.0),
            DiagonalSign::LossLoss => (-1.0, -1.0),
            DiagonalSign::GainLoss => (-1.0, 1.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DiagonalSign::AsPrinted => "as-printed",
            DiagonalSign::LossLoss => "loss-loss",
            DiagonalSign::GainLoss => "gain-loss",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        DiagonalSign::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::NotFound {
                kind: "diagonal sign convention",
                name: s.to_string(),
            })
    }
}

impl fmt::Display for DiagonalSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Physical rates and frequencies of the driven cavity-magnon pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub omega_c: f64,
    pub omega_m: f64,
    pub epsilon_m: f64,
    pub omega_d: f64,
    pub g_m: f64,
    pub kappa_c: f64,
    pub kappa_m: f64,
    #[serde(default)]
    pub diagonal_sign: DiagonalSign,
}

impl Default for SystemParams {
    /// Frequencies of the Floquet transfer experiments, no coupling, no rates.
    fn default() -> Self {
        SystemParams {
            omega_c: 85.0,
            omega_m: 35.0,
            epsilon_m: 50.0,
            omega_d: 1.0,
            g_m: 0.0,
            kappa_c: 0.0,
            kappa_m: 0.0,
            diagonal_sign: DiagonalSign::AsPrinted,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_c", self.omega_c),
            ("omega_m", self.omega_m),
            ("epsilon_m", self.epsilon_m),
            ("omega_d", self.omega_d),
            ("g_m", self.g_m),
            ("kappa_c", self.kappa_c),
            ("kappa_m", self.kappa_m),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be finite")));
        }
        if self.g_m < 0.0 {
            return Err(Error::InvalidParameter("g_m must be >= 0".into()));
        }
        if self.epsilon_m < 0.0 {
            return Err(Error::InvalidParameter("epsilon_m must be >= 0".into()));
        }
        if self.omega_d <= 0.0 {
            return Err(Error::InvalidParameter("omega_d must be > 0".into()));
        }
        Ok(())
    }

    /// Diagonal entries `(H₀₀, H₁₁)` for the given rates at time `t`.
    pub(crate) fn diagonal(&self, t: f64, kappa_c: f64, kappa_m: f64) -> (C64, C64) {
        let (sc, sm) = self.diagonal_sign.multipliers();
        (
            C64::new(self.omega_c, sc * kappa_c),
            C64::new(magnon_frequency(self, t), sm * kappa_m),
        )
    }
}

/// Coupling-strength error α and systematic error η.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorParams {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub eta: f64,
}

impl ErrorParams {
    pub fn new(alpha: f64, eta: f64) -> Self {
        ErrorParams { alpha, eta }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || !self.eta.is_finite() {
            return Err(Error::InvalidParameter(
                "error parameters must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Control protocol tag. The Hamiltonian of each variant is provided by a
/// [`control::ControlProtocol`] implementation looked up by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Bare,
    Nhs,
    Cd,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Bare, Protocol::Nhs, Protocol::Cd];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Bare => "bare",
            Protocol::Nhs => "nhs",
            Protocol::Cd => "cd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::NotFound {
                kind: "protocol",
                name: s.to_string(),
            })
    }

    pub fn strategy(self) -> &'static dyn control::ControlProtocol {
        control::registry().must_get(self.name())
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Column-vector amplitudes `(a, m)`.
pub type Vector2 = [C64; 2];

/// A 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2 {
    entries: [[C64; 2]; 2],
}

impl ComplexMatrix2 {
    /// Builds a matrix, rejecting NaN/Inf entries.
    pub fn new(entries: [[C64; 2]; 2]) -> Result<Self> {
        let m = ComplexMatrix2 { entries };
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::InvalidParameter(
                "matrix entries must be finite".into(),
            ))
        }
    }

    pub(crate) fn from_entries(entries: [[C64; 2]; 2]) -> Self {
        ComplexMatrix2 { entries }
    }

    pub fn zero() -> Self {
        ComplexMatrix2 {
            entries: [[C64::new(0.0, 0.0); 2]; 2],
        }
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        ComplexMatrix2 {
            entries: [[one, zero], [zero, one]],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row][col]
    }

    pub fn entries(&self) -> [[C64; 2]; 2] {
        self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, s: C64) -> Self {
        let e = &self.entries;
        ComplexMatrix2 {
            entries: [[e[0][0] * s, e[0][1] * s], [e[1][0] * s, e[1][1] * s]],
        }
    }

    pub fn trace(&self) -> C64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn determinant(&self) -> C64 {
        let e = &self.entries;
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        let e = &self.entries;
        ComplexMatrix2 {
            entries: [
                [e[0][0].conj(), e[1][0].conj()],
                [e[0][1].conj(), e[1][1].conj()],
            ],
        }
    }

    pub fn is_hermitian(&self) -> bool {
        *self == self.adjoint()
    }

    #[inline]
    pub fn apply(&self, v: &Vector2) -> Vector2 {
        let e = &self.entries;
        [
            e[0][0] * v[0] + e[0][1] * v[1],
            e[1][0] * v[0] + e[1][1] * v[1],
        ]
    }

    /// Outer product `|u⟩⟨w|` with `w` a row covector (no conjugation).
    pub fn outer(u: &Vector2, w: &Vector2) -> Self {
        ComplexMatrix2 {
            entries: [[u[0] * w[0], u[0] * w[1]], [u[1] * w[0], u[1] * w[1]]],
        }
    }
}

impl Add for ComplexMatrix2 {
    type Output = ComplexMatrix2;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (&self.entries, &rhs.entries);
        ComplexMatrix2 {
            entries: [
                [a[0][0] + b[0][0], a[0][1] + b[0][1]],
                [a[1][0] + b[1][0], a[1][1] + b[1][1]],
            ],
        }
    }
}

impl Sub for ComplexMatrix2 {
    type Output = ComplexMatrix2;
    fn sub(self, rhs: Self) -> Self {
        let (a, b) = (&self.entries, &rhs.entries);
        ComplexMatrix2 {
            entries: [
                [a[0][0] - b[0][0], a[0][1] - b[0][1]],
                [a[1][0] - b[1][0], a[1][1] - b[1][1]],
            ],
        }
    }
}

impl Mul for ComplexMatrix2 {
    type Output = ComplexMatrix2;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.entries, &rhs.entries);
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        ComplexMatrix2 { entries: out }
    }
}

/// ω_m(t) = ω_m + ε_m cos(ω_d t).
pub fn magnon_frequency(p: &SystemParams, t: f64) -> f64 {
    p.omega_m + p.epsilon_m * (p.omega_d * t).cos()
}

/// Δ(t) = ω_c − ω_m(t).
pub fn detuning(p: &SystemParams, t: f64) -> f64 {
    p.omega_c - magnon_frequency(p, t)
}

/// Δ̇(t) = ε_m ω_d sin(ω_d t).
pub fn detuning_rate(p: &SystemParams, t: f64) -> f64 {
    p.epsilon_m * p.omega_d * (p.omega_d * t).sin()
}

/// ∂H/∂t of the bare Hamiltonian: only the magnon diagonal depends on time.
pub fn bare_hamiltonian_rate(p: &SystemParams, t: f64) -> ComplexMatrix2 {
    let mut m = ComplexMatrix2::zero();
    m.entries[1][1] = C64::new(-detuning_rate(p, t), 0.0);
    m
}

/// Coefficient matrix for `proto` with errors `err` applied, at time `t`.
pub fn build_hamiltonian(
    p: &SystemParams,
    proto: Protocol,
    err: &ErrorParams,
    t: f64,
) -> Result<ComplexMatrix2> {
    let h = proto.strategy().hamiltonian(p, err, t)?;
    if h.is_finite() {
        Ok(h)
    } else {
        Err(Error::NonFiniteMatrix { t })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fig3() -> SystemParams {
        SystemParams {
            g_m: 1.0,
            ..SystemParams::default()
        }
    }

    #[test]
    fn magnon_frequency_examples() {
        let p = fig3();
        assert_eq!(magnon_frequency(&p, 0.0), 85.0);
        assert!((magnon_frequency(&p, PI) - (-15.0)).abs() < 1e-12);
        let flat = SystemParams {
            epsilon_m: 0.0,
            ..p
        };
        assert_eq!(magnon_frequency(&flat, 7.3), 35.0);
    }

    #[test]
    fn detuning_examples() {
        let p = fig3();
        assert_eq!(detuning(&p, 0.0), 0.0);
        assert!((detuning(&p, PI) - 100.0).abs() < 1e-12);
        let res = SystemParams {
            epsilon_m: 0.0,
            omega_c: 35.0,
            ..p
        };
        for t in [0.0, 0.4, 3.1, 17.0] {
            assert_eq!(detuning(&res, t), 0.0);
        }
    }

    #[test]
    fn detuning_rate_examples() {
        let p = fig3();
        assert_eq!(detuning_rate(&p, 0.0), 0.0);
        assert!((detuning_rate(&p, PI / 2.0) - 50.0).abs() < 1e-12);
        let (t, h) = (0.7, 1e-5);
        let fd = (detuning(&p, t + h) - detuning(&p, t - h)) / (2.0 * h);
        assert!((detuning_rate(&p, t) - fd).abs() <= 1e-6);
    }

    #[test]
    fn hermitian_limit() {
        let p = SystemParams {
            epsilon_m: 0.0,
            ..fig3()
        };
        let h = build_hamiltonian(&p, Protocol::Bare, &ErrorParams::default(), 2.2).unwrap();
        assert!(h.is_hermitian());
        assert_eq!(h.get(0, 0), C64::new(85.0, 0.0));
        assert_eq!(h.get(1, 1), C64::new(35.0, 0.0));
        assert_eq!(h.get(0, 1), C64::new(1.0, 0.0));
        assert_eq!(h.get(1, 0), C64::new(1.0, 0.0));
    }

    #[test]
    fn coupling_error_scales_off_diagonals() {
        let p = fig3();
        let h = build_hamiltonian(&p, Protocol::Bare, &ErrorParams::new(0.5, 0.0), 0.3).unwrap();
        assert_eq!(h.get(0, 1), C64::new(1.5, 0.0));
        assert_eq!(h.get(1, 0), C64::new(1.5, 0.0));
    }

    #[test]
    fn cd_at_zero_time_has_plain_coupling() {
        let p = SystemParams {
            kappa_c: 1.0,
            kappa_m: 0.3,
            ..fig3()
        };
        let h = build_hamiltonian(&p, Protocol::Cd, &ErrorParams::default(), 0.0).unwrap();
        assert_eq!(h.get(0, 1), C64::new(1.0, 0.0));
        assert_eq!(h.get(1, 0), C64::new(1.0, 0.0));
    }

    #[test]
    fn sign_conventions_place_rates() {
        let base = SystemParams {
            kappa_c: 1.0,
            kappa_m: 0.3,
            ..fig3()
        };
        let cases = [
            (DiagonalSign::AsPrinted, 1.0, -0.3),
            (DiagonalSign::LossLoss, -1.0, -0.3),
            (DiagonalSign::GainLoss, -1.0, 0.3),
        ];
        for (sign, im_c, im_m) in cases {
            let p = SystemParams {
                diagonal_sign: sign,
                ..base
            };
            let h = build_hamiltonian(&p, Protocol::Bare, &ErrorParams::default(), 1.0).unwrap();
            assert_eq!(h.get(0, 0).im, im_c);
            assert_eq!(h.get(1, 1).im, im_m);
        }
    }

    #[test]
    fn validation_rejects_bad_params() {
        assert!(SystemParams {
            g_m: -1.0,
            ..fig3()
        }
        .validate()
        .is_err());
        assert!(SystemParams {
            epsilon_m: -0.1,
            ..fig3()
        }
        .validate()
        .is_err());
        assert!(SystemParams {
            omega_d: 0.0,
            ..fig3()
        }
        .validate()
        .is_err());
        assert!(SystemParams {
            kappa_c: f64::NAN,
            ..fig3()
        }
        .validate()
        .is_err());
        assert!(SystemParams {
            kappa_c: -3.0,
            kappa_m: -2.0,
            ..fig3()
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn matrix_rejects_non_finite() {
        let nan = C64::new(f64::NAN, 0.0);
        let one = C64::new(1.0, 0.0);
        assert!(ComplexMatrix2::new([[nan, one], [one, one]]).is_err());
        assert!(ComplexMatrix2::new([[one, one], [one, one]]).is_ok());
    }

    #[test]
    fn parse_names() {
        assert_eq!(Protocol::parse("CD").unwrap(), Protocol::Cd);
        assert!(Protocol::parse("stirap").is_err());
        assert_eq!(
            DiagonalSign::parse("gain-loss").unwrap(),
            DiagonalSign::GainLoss
        );
    }
}
