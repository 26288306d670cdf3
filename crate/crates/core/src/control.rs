//! Control protocols behind a common trait, registered by name.
//!
//! Each protocol turns `(params, errors, t)` into the coefficient matrix that
//! drives `ψ̇ = −iHψ`. The standard registry holds `bare`, `nhs` and `cd`;
//! callers select one at runtime by name (config files and CLI) or through
//! the [`Protocol`](crate::model::Protocol) tag.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{ComplexMatrix2, ErrorParams, SystemParams};
use crate::spectra;

pub trait ControlProtocol: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    /// Full coefficient matrix including error perturbations.
    fn hamiltonian(&self, p: &SystemParams, err: &ErrorParams, t: f64) -> Result<ComplexMatrix2>;

    /// Hamiltonian whose instantaneous eigenstates the protocol is meant to follow.
    fn reference_hamiltonian(&self, p: &SystemParams, t: f64) -> Result<ComplexMatrix2> {
        Bare.hamiltonian(p, &ErrorParams::default(), t)
    }
}

/// Constant rates from the parameters, no auxiliary field.
///
/// Only the coupling error applies; the systematic error is defined for the
/// shortcut protocols.
pub struct Bare;

impl ControlProtocol for Bare {
    fn name(&self) -> &'static str {
        "bare"
    }

    fn description(&self) -> &'static str {
        "reference Hamiltonian with constant rates"
    }

    fn hamiltonian(&self, p: &SystemParams, err: &ErrorParams, t: f64) -> Result<ComplexMatrix2> {
        let (h00, h11) = p.diagonal(t, p.kappa_c, p.kappa_m);
        let g = C64::new((1.0 + err.alpha) * p.g_m, 0.0);
        Ok(ComplexMatrix2::from_entries([[h00, g], [g, h11]]))
    }
}

/// Both rates replaced by the time-dependent dissipation schedule κ(t).
pub struct NonHermitianShortcut;

impl ControlProtocol for NonHermitianShortcut {
    fn name(&self) -> &'static str {
        "nhs"
    }

    fn description(&self) -> &'static str {
        "engineered dissipation κ(t) on both diagonals"
    }

    fn hamiltonian(&self, p: &SystemParams, err: &ErrorParams, t: f64) -> Result<ComplexMatrix2> {
        if p.g_m.is_nan() || p.g_m <= 0.0 {
            return Err(Error::InvalidParameter("nhs needs g_m > 0".into()));
        }
        let kappa = spectra::nhs_kappa(p, t);
        let (h00, h11) = p.diagonal(t, kappa, kappa);
        let g = C64::new((1.0 + err.alpha) * p.g_m, 0.0);
        let h = ComplexMatrix2::from_entries([[h00, g], [g, h11]]);
        Ok(h.scale(C64::new(1.0 + err.eta, 0.0)))
    }

    fn reference_hamiltonian(&self, p: &SystemParams, t: f64) -> Result<ComplexMatrix2> {
        self.hamiltonian(p, &ErrorParams::default(), t)
    }
}

/// Bare Hamiltonian plus the antisymmetric counterdiabatic field `H_c(t)`.
///
/// Errors act on the sum: `(g ± Q) → (1+α)(g ± Q)` and `H + H_c → (1+η)(H + H_c)`.
pub struct Counterdiabatic;

impl ControlProtocol for Counterdiabatic {
    fn name(&self) -> &'static str {
        "cd"
    }

    fn description(&self) -> &'static str {
        "bare Hamiltonian with the counterdiabatic field H_c(t)"
    }

    fn hamiltonian(&self, p: &SystemParams, err: &ErrorParams, t: f64) -> Result<ComplexMatrix2> {
        let q = spectra::cd_coupling(p, t)?;
        let (h00, h11) = p.diagonal(t, p.kappa_c, p.kappa_m);
        let g = C64::new(p.g_m, 0.0);
        let a = 1.0 + err.alpha;
        let h = ComplexMatrix2::from_entries([[h00, (g + q) * a], [(g - q) * a, h11]]);
        Ok(h.scale(C64::new(1.0 + err.eta, 0.0)))
    }
}

/// Name-keyed set of protocols.
pub struct ProtocolRegistry {
    protocols: BTreeMap<&'static str, Box<dyn ControlProtocol>>,
}

pub struct ProtocolRegistryBuilder {
    protocols: Vec<Box<dyn ControlProtocol>>,
}

impl ProtocolRegistryBuilder {
    pub fn register(mut self, protocol: impl ControlProtocol + 'static) -> Self {
        self.protocols.push(Box::new(protocol));
        self
    }

    pub fn build(self) -> Result<ProtocolRegistry> {
        let mut protocols = BTreeMap::new();
        for protocol in self.protocols {
            let name = protocol.name();
            if protocols.insert(name, protocol).is_some() {
                return Err(Error::Config(format!("protocol {name} already registered")));
            }
        }
        Ok(ProtocolRegistry { protocols })
    }
}

impl ProtocolRegistry {
    pub fn builder() -> ProtocolRegistryBuilder {
        ProtocolRegistryBuilder {
            protocols: Vec::new(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&dyn ControlProtocol> {
        self.protocols.get(name).map(|p| &**p)
    }

    pub fn must_get(&self, name: &str) -> &dyn ControlProtocol {
        self.get(name)
            .unwrap_or_else(|| panic!("protocol {name} not registered"))
    }

    pub fn lookup(&self, name: &str) -> Result<&dyn ControlProtocol> {
        self.get(name).ok_or_else(|| Error::NotFound {
            kind: "protocol",
            name: name.to_string(),
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.protocols.keys().copied()
    }
}

/// The standard registry: `bare`, `nhs`, `cd`.
pub fn registry() -> &'static ProtocolRegistry {
    static REGISTRY: OnceLock<ProtocolRegistry> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        ProtocolRegistry::builder()
            .register(Bare)
            .register(NonHermitianShortcut)
            .register(Counterdiabatic)
            .build()
            .expect("standard protocols have distinct names")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, Protocol};

    #[test]
    fn standard_registry_contents() {
        let names: Vec<_> = registry().names().collect();
        assert_eq!(names, vec!["bare", "cd", "nhs"]);
        for p in Protocol::ALL {
            assert_eq!(p.strategy().name(), p.name());
        }
        assert!(registry().lookup("stirap").is_err());
    }

    #[test]
    fn duplicate_registration_is_rejected() {
        let r = ProtocolRegistry::builder()
            .register(Bare)
            .register(Bare)
            .build();
        assert!(r.is_err());
    }

    #[test]
    fn systematic_error_is_linear() {
        let p = SystemParams {
            g_m: 1.0,
            kappa_c: 1.0,
            kappa_m: 0.3,
            ..SystemParams::default()
        };
        for proto in [Protocol::Nhs, Protocol::Cd] {
            for &t in &[0.1, 0.77, 1.5, 2.0] {
                let base = build_hamiltonian(&p, proto, &ErrorParams::new(0.2, 0.0), t).unwrap();
                let pert = build_hamiltonian(&p, proto, &ErrorParams::new(0.2, 0.35), t).unwrap();
                let expect = base.scale(C64::new(1.35, 0.0));
                assert!((pert - expect).max_norm() <= 1e-13 * expect.max_norm());
            }
        }
    }

    #[test]
    fn bare_ignores_systematic_error() {
        let p = SystemParams {
            g_m: 1.0,
            ..SystemParams::default()
        };
        let a = build_hamiltonian(&p, Protocol::Bare, &ErrorParams::new(0.0, 0.4), 0.5).unwrap();
        let b = build_hamiltonian(&p, Protocol::Bare, &ErrorParams::default(), 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nhs_replaces_both_rates() {
        let p = SystemParams {
            g_m: 1.0,
            kappa_c: 5.0,
            kappa_m: 7.0,
            ..SystemParams::default()
        };
        let t = 0.9;
        let k = spectra::nhs_kappa(&p, t);
        let h = build_hamiltonian(&p, Protocol::Nhs, &ErrorParams::default(), t).unwrap();
        assert_eq!(h.get(0, 0).im, k);
        assert_eq!(h.get(1, 1).im, -k);
    }

    #[test]
    fn nhs_rejects_zero_coupling() {
        let p = SystemParams::default();
        let r = build_hamiltonian(&p, Protocol::Nhs, &ErrorParams::default(), 0.3);
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }
}
