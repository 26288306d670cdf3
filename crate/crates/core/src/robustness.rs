//! Parameter sweeps of the transition probability and the phase diagram.
//!
//! Cells are independent; they are evaluated on a rayon pool of configurable
//! width and written back by index, so a grid does not depend on the pool
//! width or on evaluation order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{transition_probability, IntegratorConfig};
use crate::error::{Error, Result};
use crate::model::{ErrorParams, Protocol, SystemParams};
use crate::spectra::{classify_phase, PhasePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Alpha,
    Eta,
    /// `g_m / κ_c`, with κ_c taken from the base parameters.
    GOverKc,
    /// `κ_m / κ_c`, with κ_c taken from the base parameters.
    KmOverKc,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 4] = [
        SweepAxis::Alpha,
        SweepAxis::Eta,
        SweepAxis::GOverKc,
        SweepAxis::KmOverKc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::Eta => "eta",
            SweepAxis::GOverKc => "g_over_kc",
            SweepAxis::KmOverKc => "km_over_kc",
        }
    }

    fn apply(self, x: f64, p: &mut SystemParams, err: &mut ErrorParams) {
        match self {
            SweepAxis::Alpha => err.alpha = x,
            SweepAxis::Eta => err.eta = x,
            SweepAxis::GOverKc => p.g_m = x * p.kappa_c,
            SweepAxis::KmOverKc => p.kappa_m = x * p.kappa_c,
        }
    }
}

/// One sweep axis: `points` uniform values over `range`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub axis: SweepAxis,
    pub range: [f64; 2],
    pub points: usize,
}

impl AxisSpec {
    pub fn new(axis: SweepAxis, lo: f64, hi: f64, points: usize) -> Self {
        AxisSpec {
            axis,
            range: [lo, hi],
            points,
        }
    }

    /// `lo < hi` with at least two points, or the degenerate `lo == hi` with one.
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.range;
        let name = self.axis.as_str();
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} range must be finite"
            )));
        }
        let ok = (lo < hi && self.points >= 2) || (lo == hi && self.points == 1);
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "{name} axis needs lo < hi with points >= 2 (or lo == hi with 1 point), got [{lo}, {hi}] x {}",
                self.points
            )));
        }
        if self.axis == SweepAxis::GOverKc && lo < 0.0 {
            return Err(Error::InvalidParameter("g_over_kc must be >= 0".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.range[0], self.range[1], self.points)
    }
}

/// `n` uniform values from `lo` to `hi`, the last one exactly `hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * (i as f64) / last
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub x: AxisSpec,
    pub y: Option<AxisSpec>,
    pub base: SystemParams,
    pub protocol: Protocol,
    /// Error values for axes that are not swept.
    pub errors: ErrorParams,
    pub integrator: IntegratorConfig,
}

impl SweepSpec {
    pub fn one_d(x: AxisSpec, base: SystemParams, protocol: Protocol) -> Self {
        SweepSpec {
            x,
            y: None,
            base,
            protocol,
            errors: ErrorParams::default(),
            integrator: IntegratorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.errors.validate()?;
        self.integrator.validate()?;
        self.x.validate()?;
        if let Some(y) = &self.y {
            y.validate()?;
            if y.axis == self.x.axis {
                return Err(Error::InvalidParameter(
                    "x and y sweep the same axis".into(),
                ));
            }
        }
        let needs_kc = [Some(self.x), self.y]
            .iter()
            .flatten()
            .any(|a| matches!(a.axis, SweepAxis::GOverKc | SweepAxis::KmOverKc));
        if needs_kc && (self.base.kappa_c.is_nan() || self.base.kappa_c <= 0.0) {
            return Err(Error::InvalidParameter(
                "ratio axes need kappa_c > 0".into(),
            ));
        }
        Ok(())
    }

    /// Parameters and errors of cell `(ix, iy)`.
    pub fn cell(&self, x: f64, y: Option<f64>) -> (SystemParams, ErrorParams) {
        let mut p = self.base;
        let mut err = self.errors;
        self.x.axis.apply(x, &mut p, &mut err);
        if let (Some(ax), Some(y)) = (&self.y, y) {
            ax.axis.apply(y, &mut p, &mut err);
        }
        (p, err)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    /// Flat row-major index into [`SweepGrid::values`].
    pub index: usize,
    pub message: String,
}

/// Row-major grid: `values[ix * y_values.len().max(1) + iy]`.
///
/// Failed cells hold NaN and have an entry in `failures`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub x_axis: SweepAxis,
    pub y_axis: Option<SweepAxis>,
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub values: Vec<f64>,
    pub failures: Vec<CellFailure>,
}

impl SweepGrid {
    pub fn ny(&self) -> usize {
        self.y_values.len().max(1)
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.ny() + iy]
    }

    /// Values of the row at `ix` (all y for one x).
    pub fn row(&self, ix: usize) -> &[f64] {
        let ny = self.ny();
        &self.values[ix * ny..(ix + 1) * ny]
    }

    pub fn defined_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|v| !v.is_nan())
    }

    pub fn min(&self) -> Option<f64> {
        self.defined_values().reduce(f64::min)
    }

    /// Fraction of all cells whose value is at least `threshold`; failed cells count as below.
    pub fn fraction_at_least(&self, threshold: f64) -> f64 {
        let n = self.defined_values().filter(|&v| v >= threshold).count();
        n as f64 / self.values.len() as f64
    }

    /// `Σ |P_i − P_ref|` over defined cells.
    pub fn total_variation(&self, reference: f64) -> f64 {
        self.defined_values().map(|v| (v - reference).abs()).sum()
    }

    /// Bitwise equality, treating NaN cells as equal to each other.
    pub fn bit_identical(&self, other: &SweepGrid) -> bool {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        self.x_axis == other.x_axis
            && self.y_axis == other.y_axis
            && bits(&self.x_values) == bits(&other.x_values)
            && bits(&self.y_values) == bits(&other.y_values)
            && bits(&self.values) == bits(&other.values)
            && self.failures == other.failures
    }
}

/// Worker count from an explicit request, `NHS_NUM_THREADS`, or the core count.
pub fn resolve_jobs(requested: Option<usize>, env: Option<&str>) -> Result<usize> {
    if let Some(s) = env {
        return match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!(
                "NHS_NUM_THREADS must be a positive integer, got {s:?}"
            ))),
        };
    }
    match requested {
        Some(0) => Err(Error::Config("--jobs must be >= 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Evaluates `f` at `0..n` with `jobs` workers; the result is ordered by index.
pub fn par_map<T, F>(n: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if jobs <= 1 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

fn evaluate(spec: &SweepSpec, x: f64, y: Option<f64>) -> std::result::Result<f64, String> {
    let (p, err) = spec.cell(x, y);
    let v = transition_probability(&p, spec.protocol, &err, &spec.integrator)
        .map_err(|e| e.to_string())?;
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("transition probability {v} outside [0, 1]"));
    }
    Ok(v)
}

fn collect(
    spec: &SweepSpec,
    x_values: Vec<f64>,
    y_values: Vec<f64>,
    jobs: usize,
) -> Result<SweepGrid> {
    let ny = y_values.len().max(1);
    let results = par_map(x_values.len() * ny, jobs, |k| {
        let x = x_values[k / ny];
        let y = y_values.get(k % ny).copied();
        evaluate(spec, x, y)
    })?;
    let mut values = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(message) => {
                values.push(f64::NAN);
                failures.push(CellFailure { index, message });
            }
        }
    }
    Ok(SweepGrid {
        x_axis: spec.x.axis,
        y_axis: spec.y.map(|a| a.axis),
        x_values,
        y_values,
        values,
        failures,
    })
}

/// Transition probability along the x axis. A y axis, if present, is ignored.
pub fn sweep_1d(spec: &SweepSpec, jobs: usize) -> Result<SweepGrid> {
    let spec = SweepSpec { y: None, ..*spec };
    spec.validate()?;
    collect(&spec, spec.x.values(), Vec::new(), jobs)
}

/// Transition probability over the full x × y rectangle.
pub fn sweep_2d(spec: &SweepSpec, jobs: usize) -> Result<SweepGrid> {
    spec.validate()?;
    let y = spec
        .y
        .ok_or_else(|| Error::InvalidParameter("2D sweep needs a y axis".into()))?;
    collect(spec, spec.x.values(), y.values(), jobs)
}

/// Dispatches on the presence of a y axis.
pub fn sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepGrid> {
    if spec.y.is_some() {
        sweep_2d(spec, jobs)
    } else {
        sweep_1d(spec, jobs)
    }
}

/// Grid in units of κ_c: `g/κ_c = g_max·i/N` for `i = 1..=N` and
/// `κ_m/κ_c` uniform over `[0, km_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseGridSpec {
    pub g_points: usize,
    pub km_points: usize,
    pub g_max: f64,
    pub km_max: f64,
}

impl Default for PhaseGridSpec {
    fn default() -> Self {
        PhaseGridSpec {
            g_points: 200,
            km_points: 200,
            g_max: 2.0,
            km_max: 3.0,
        }
    }
}

impl PhaseGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.g_points < 1 || self.km_points < 2 {
            return Err(Error::InvalidParameter(
                "phase grid needs g_points >= 1 and km_points >= 2".into(),
            ));
        }
        if !(self.g_max > 0.0
            && self.g_max.is_finite()
            && self.km_max > 0.0
            && self.km_max.is_finite())
        {
            return Err(Error::InvalidParameter(
                "phase grid bounds must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn g_values(&self) -> Vec<f64> {
        let n = self.g_points as f64;
        (1..=self.g_points)
            .map(|i| self.g_max * (i as f64) / n)
            .collect()
    }

    pub fn km_values(&self) -> Vec<f64> {
        linspace(0.0, self.km_max, self.km_points)
    }
}

/// Row-major over `g_over_kc` (outer) and `km_over_kc` (inner).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub g_over_kc: Vec<f64>,
    pub km_over_kc: Vec<f64>,
    pub cells: Vec<PhasePoint>,
}

impl PhaseDiagram {
    pub fn get(&self, ig: usize, ik: usize) -> PhasePoint {
        self.cells[ig * self.km_over_kc.len() + ik]
    }

    /// Cell count per region code `0..=4`.
    pub fn region_counts(&self) -> [usize; 5] {
        let mut counts = [0; 5];
        for c in &self.cells {
            counts[c.region() as usize] += 1;
        }
        counts
    }
}

pub fn phase_diagram(spec: &PhaseGridSpec) -> Result<PhaseDiagram> {
    spec.validate()?;
    let g_over_kc = spec.g_values();
    let km_over_kc = spec.km_values();
    let cells = g_over_kc
        .iter()
        .flat_map(|&g| km_over_kc.iter().map(move |&km| classify_phase(g, 1.0, km)))
        .collect();
    Ok(PhaseDiagram {
        g_over_kc,
        km_over_kc,
        cells,
    })
}

/// Exceptional-point line `g/κ_c = (1 + κ_m/κ_c)/2` sampled at `km_over_kc`.
pub fn ep_locus(km_over_kc: &[f64]) -> Vec<(f64, f64)> {
    km_over_kc.iter().map(|&k| (k, 0.5 * (1.0 + k))).collect()
}
