//! Endpoint populations of every preset under every (time, diagonal-sign)
//! convention pair, scored against the quoted endpoint values.

use serde::{Deserialize, Serialize};

use crate::dynamics::{transition_probability, IntegratorConfig, TimeConvention};
use crate::error::Result;
use crate::model::{DiagonalSign, ErrorParams, Protocol, SystemParams};
use crate::presets::{preset_registry, ExperimentPreset, TargetKind};
use crate::robustness::par_map;
use crate::spectra::supermode_frequencies;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConventionPair {
    pub time_convention: TimeConvention,
    pub diagonal_sign: DiagonalSign,
}

impl std::fmt::Display for ConventionPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}/{}",
            self.time_convention.as_str(),
            self.diagonal_sign.as_str()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub preset: String,
    pub protocol: Protocol,
    pub time_convention: TimeConvention,
    pub diagonal_sign: DiagonalSign,
    pub p1r: Option<f64>,
    /// Set when the run diverged or hit a singularity.
    pub error: Option<String>,
    pub target: Option<f64>,
    pub target_kind: Option<TargetKind>,
    pub tolerance: Option<f64>,
    pub deviation: Option<f64>,
    pub within_tolerance: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pair: ConventionPair,
    /// Restricted to presets of one protocol when reported per protocol.
    pub protocol: Option<Protocol>,
    pub matched: usize,
    pub targets: usize,
    /// Sum of deviations over targeted presets; absent if any of them diverged.
    pub total_deviation: Option<f64>,
    pub all_matched: bool,
}

/// Centre of the eigenvalue pair from the bare matrix versus the supermode formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImaginaryShiftCheck {
    pub diagonal_sign: DiagonalSign,
    pub kappa_c: f64,
    pub kappa_m: f64,
    pub matrix_centre_im: f64,
    pub supermode_centre_im: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub entries: Vec<CalibrationEntry>,
    pub scores: Vec<PairScore>,
    pub best: ConventionPair,
    pub best_matches_all: bool,
    pub per_protocol_best: Vec<PairScore>,
    pub imaginary_shift: Vec<ImaginaryShiftCheck>,
    pub flags: Vec<String>,
}

impl CalibrationReport {
    pub fn entry(&self, preset: &str, pair: ConventionPair) -> Option<&CalibrationEntry> {
        self.entries.iter().find(|e| {
            e.preset == preset
                && e.time_convention == pair.time_convention
                && e.diagonal_sign == pair.diagonal_sign
        })
    }

    pub fn best_for(&self, protocol: Protocol) -> Option<&PairScore> {
        self.per_protocol_best
            .iter()
            .find(|s| s.protocol == Some(protocol))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub time_conventions: Vec<TimeConvention>,
    pub diagonal_signs: Vec<DiagonalSign>,
    pub integrator: IntegratorConfig,
    pub jobs: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            time_conventions: TimeConvention::ALL.to_vec(),
            diagonal_signs: DiagonalSign::ALL.to_vec(),
            integrator: IntegratorConfig::default(),
            jobs: 1,
        }
    }
}

fn run_entry(
    preset: &ExperimentPreset,
    pair: ConventionPair,
    base: &IntegratorConfig,
) -> CalibrationEntry {
    let params = SystemParams {
        diagonal_sign: pair.diagonal_sign,
        ..preset.params
    };
    let cfg = IntegratorConfig {
        time_convention: pair.time_convention,
        ..preset.integrator(base)
    };
    let result = transition_probability(&params, preset.protocol, &ErrorParams::default(), &cfg);
    let (p1r, error) = match result {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let expected = preset.expected.as_ref();
    let deviation = expected.zip(p1r).map(|(e, v)| e.deviation(v));
    CalibrationEntry {
        preset: preset.name.clone(),
        protocol: preset.protocol,
        time_convention: pair.time_convention,
        diagonal_sign: pair.diagonal_sign,
        p1r,
        error,
        target: expected.map(|e| e.value),
        target_kind: expected.map(|e| e.kind),
        tolerance: expected.map(|e| e.tolerance),
        deviation,
        within_tolerance: expected.map(|e| p1r.is_some_and(|v| e.is_met(v))),
    }
}

fn score(
    entries: &[CalibrationEntry],
    pair: ConventionPair,
    protocol: Option<Protocol>,
) -> PairScore {
    let targeted: Vec<_> = entries
        .iter()
        .filter(|e| {
            e.time_convention == pair.time_convention && e.diagonal_sign == pair.diagonal_sign
        })
        .filter(|e| protocol.is_none_or(|p| e.protocol == p))
        .filter(|e| e.target.is_some())
        .collect();
    let matched = targeted
        .iter()
        .filter(|e| e.within_tolerance == Some(true))
        .count();
    let total_deviation = targeted.iter().map(|e| e.deviation).sum::<Option<f64>>();
    PairScore {
        pair,
        protocol,
        matched,
        targets: targeted.len(),
        total_deviation,
        all_matched: matched == targeted.len(),
    }
}

/// Most matches first, then smallest total deviation, then enumeration order.
fn pick_best(scores: &[PairScore]) -> Option<&PairScore> {
    let key = |s: &PairScore| (s.matched, -s.total_deviation.unwrap_or(f64::INFINITY));
    scores
        .iter()
        .reduce(|best, s| if key(s) > key(best) { s } else { best })
}

fn imaginary_shift_checks(signs: &[DiagonalSign]) -> Vec<ImaginaryShiftCheck> {
    let Some(preset) = preset_registry().get("CD-a") else {
        return Vec::new();
    };
    signs
        .iter()
        .map(|&diagonal_sign| {
            let p = SystemParams {
                diagonal_sign,
                ..preset.params
            };
            let h =
                crate::model::build_hamiltonian(&p, Protocol::Bare, &ErrorParams::default(), 0.0)
                    .expect("bare matrix is finite");
            let matrix_centre_im = 0.5 * h.trace().im;
            let supermode_centre_im = supermode_frequencies(0.0, &p).0.im;
            ImaginaryShiftCheck {
                diagonal_sign,
                kappa_c: p.kappa_c,
                kappa_m: p.kappa_m,
                matrix_centre_im,
                supermode_centre_im,
                agree: (matrix_centre_im - supermode_centre_im).abs() <= 1e-12,
            }
        })
        .collect()
}

/// Never fails on numerics: diverged runs appear as entries with an error.
pub fn calibrate(opts: &CalibrationOptions) -> Result<CalibrationReport> {
    opts.integrator.validate()?;
    let pairs: Vec<ConventionPair> = opts
        .time_conventions
        .iter()
        .flat_map(|&time_convention| {
            opts.diagonal_signs
                .iter()
                .map(move |&diagonal_sign| ConventionPair {
                    time_convention,
                    diagonal_sign,
                })
        })
        .collect();
    let presets: Vec<&ExperimentPreset> = preset_registry().iter().collect();
    let jobs: Vec<(usize, ConventionPair)> = (0..presets.len())
        .flat_map(|i| pairs.iter().map(move |&pair| (i, pair)))
        .collect();
    let entries = par_map(jobs.len(), opts.jobs, |k| {
        let (i, pair) = jobs[k];
        run_entry(presets[i], pair, &opts.integrator)
    })?;

    let scores: Vec<PairScore> = pairs
        .iter()
        .map(|&pair| score(&entries, pair, None))
        .collect();
    let best = pick_best(&scores).cloned().ok_or_else(|| {
        crate::error::Error::Config("calibration needs at least one convention of each kind".into())
    })?;

    let mut per_protocol_best = Vec::new();
    for protocol in [Protocol::Nhs, Protocol::Cd] {
        let by_protocol: Vec<PairScore> = pairs
            .iter()
            .map(|&pair| score(&entries, pair, Some(protocol)))
            .collect();
        if let Some(b) = pick_best(&by_protocol) {
            per_protocol_best.push(b.clone());
        }
    }

    let mut flags = Vec::new();
    if !best.all_matched {
        flags.push(format!(
            "no convention match: best pair {} meets {} of {} quoted endpoints",
            best.pair, best.matched, best.targets
        ));
    }
    for preset in presets.iter().filter(|p| p.expected.is_some()) {
        let any = entries
            .iter()
            .any(|e| e.preset == preset.name && e.within_tolerance == Some(true));
        if !any {
            flags.push(format!("no convention match: {}", preset.name));
        }
    }
    let imaginary_shift = imaginary_shift_checks(&opts.diagonal_signs);
    if imaginary_shift.iter().any(|c| !c.agree) {
        flags.push(
            "eigenvalue centre of the matrix and of the supermode formula differ in imaginary sign"
                .into(),
        );
    }

    Ok(CalibrationReport {
        entries,
        scores,
        best_matches_all: best.all_matched,
        best: best.pair,
        per_protocol_best,
        imaginary_shift,
        flags,
    })
}
