//! Experiment drivers: asynchrony curves and their classification, density
//! classification with the C3 rule, and Hamming-distance grids over the
//! binary totalistic family.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::cca::{cca_converged, cca_evolve, density_trace, CcaRunner, ContinuousConfiguration, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::lattice::{config_random, config_with_ones, Configuration, Geometry, InitMode, Lut, StateId};
use crate::rng::RngSeed;
use crate::rules::{alpha_async_plut, c3_plut, eca_lut, totalistic_plut, EcaNumber, TotalisticParams};
use crate::sca::{sca_evolve, sca_run_until_homogeneous, SpaceTimeDiagram};

/// Per-time-step distance used in `D(alpha)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Sum over cells of the total-variation distance.
    #[default]
    Tv,
    /// Euclidean norm over cells and states, divided by `sqrt(2)` so that
    /// two distinct basis states are at distance 1.
    Euclidean,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tv" => Ok(Metric::Tv),
            "euclidean" => Ok(Metric::Euclidean),
            _ => Err(Error::Validation(format!("unknown metric {s:?}; expected tv or euclidean"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Tv => "tv",
            Metric::Euclidean => "euclidean",
        })
    }
}

/// `points` evenly spaced synchrony rates on `[lo, 1]`, ending exactly at 1.
pub fn alpha_grid(lo: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(0.0..1.0).contains(&lo) {
        return Err(Error::Validation(format!(
            "an alpha grid needs at least 2 points and 0 <= lo < 1, got {points} points from {lo}"
        )));
    }
    let last = points - 1;
    Ok((0..points)
        .map(|i| if i == last { 1.0 } else { lo + (1.0 - lo) * i as f64 / last as f64 })
        .collect())
}

/// `D(alpha)` sampled on a grid of synchrony rates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DAlphaCurve {
    pub rule: EcaNumber,
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    pub cells: usize,
    pub steps: usize,
    pub seed: u64,
    pub metric: Metric,
}

fn step_distance(exact: &[StateId], approx: &ContinuousConfiguration, metric: Metric) -> f64 {
    let n = approx.n_states();
    match metric {
        Metric::Tv => exact
            .iter()
            .enumerate()
            .map(|(i, s)| 1.0 - approx.cell(i)[s.index()])
            .sum(),
        Metric::Euclidean => {
            let sq: f64 = exact
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    (0..n)
                        .map(|j| {
                            let e = if j == s.index() { 1.0 } else { 0.0 };
                            (e - approx.cell(i)[j]).powi(2)
                        })
                        .sum::<f64>()
                })
                .sum();
            (sq / 2.0).sqrt()
        }
    }
}

/// `D(alpha) = 1/(M T) sum_{t=1..T} || A^t(I0) - A_alpha^t(I0) ||`.
///
/// `I0` is drawn uniformly from `seed` once and shared by all grid points;
/// `A_alpha` is the continuous evolution of the alpha-asynchronous table.
pub fn run_dalpha(
    rule: EcaNumber,
    alphas: &[f64],
    cells: usize,
    steps: usize,
    seed: &RngSeed,
    metric: Metric,
) -> Result<DAlphaCurve> {
    if steps == 0 {
        return Err(Error::Validation("D(alpha) needs at least one time step".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Validation(format!("synchrony rate {a} is outside [0, 1]")));
    }
    let geometry = Geometry::new(cells, 1)?;
    let init = config_random(geometry, 2, InitMode::Uniform, &seed.experiment("dalpha-init"))?;
    let lut = eca_lut(rule);
    let exact = lut.evolve(&init, steps)?;
    let values = alphas
        .par_iter()
        .map(|&alpha| {
            let plut = alpha_async_plut(&lut, alpha)?;
            let mut runner = CcaRunner::new(&plut, &init)?;
            let mut total = 0.0;
            for row in &exact[1..] {
                runner.step();
                total += step_distance(row.states(), runner.current(), metric);
            }
            Ok(total / (cells * steps) as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DAlphaCurve {
        rule,
        alphas: alphas.to_vec(),
        values,
        cells,
        steps,
        seed: seed.master(),
        metric,
    })
}

/// Behavior classes of alpha-asynchronous rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum AcaClass {
    /// Almost unaffected by asynchrony.
    I,
    /// Smooth decrease towards 0 as alpha approaches 1.
    II,
    /// Sudden drop at alpha = 1.
    IIIa,
    /// Sudden drop and non-monotonic behavior.
    IIIb,
}

impl fmt::Display for AcaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AcaClass::I => "I",
            AcaClass::II => "II",
            AcaClass::IIIa => "IIIa",
            AcaClass::IIIb => "IIIb",
        })
    }
}

impl FromStr for AcaClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" => Ok(AcaClass::I),
            "II" => Ok(AcaClass::II),
            "IIIa" => Ok(AcaClass::IIIa),
            "IIIb" => Ok(AcaClass::IIIb),
            _ => Err(Error::Validation(format!("unknown class {s:?}"))),
        }
    }
}

/// Thresholds for [`classify_aca`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AcaThresholds {
    /// Class I if every value is below this.
    pub flat: f64,
    /// Sudden drop if the last step down exceeds this fraction of the
    /// curve's range.
    pub drop_fraction: f64,
    /// Non-monotonic if the discrete derivative changes sign at least this
    /// many times.
    pub noise: usize,
}

impl Default for AcaThresholds {
    fn default() -> Self {
        Self {
            flat: 0.02,
            drop_fraction: 0.75,
            noise: 2,
        }
    }
}

/// Minimum number of grid points accepted by [`classify_aca`].
pub const MIN_CLASSIFY_POINTS: usize = 11;

/// Number of sign changes in the successive differences, ignoring zeros.
fn sign_changes(values: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut changes = 0;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d == 0.0 {
            continue;
        }
        if last != 0.0 && d.signum() != last.signum() {
            changes += 1;
        }
        last = d;
    }
    changes
}

pub fn classify_aca(curve: &DAlphaCurve, thresholds: &AcaThresholds) -> Result<AcaClass> {
    let (a, v) = (&curve.alphas, &curve.values);
    if a.len() < MIN_CLASSIFY_POINTS || a.len() != v.len() {
        return Err(Error::Domain(format!(
            "classification needs at least {MIN_CLASSIFY_POINTS} points, got {}",
            a.len()
        )));
    }
    if a.windows(2).any(|w| w[0] >= w[1]) || a[a.len() - 1] != 1.0 {
        return Err(Error::Domain("alphas must increase strictly and end at 1".into()));
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    if max < thresholds.flat {
        return Ok(AcaClass::I);
    }
    let drop = v[v.len() - 2] - v[v.len() - 1];
    let theta = thresholds.drop_fraction * (max - min);
    if drop > theta {
        if sign_changes(v) >= thresholds.noise {
            Ok(AcaClass::IIIb)
        } else {
            Ok(AcaClass::IIIa)
        }
    } else {
        Ok(AcaClass::II)
    }
}

const TABLE_CLASSES: [(AcaClass, &str); 4] = [
    (
        AcaClass::I,
        "0 8 12 32 40 64 68 72 76 77 93 96 128 132 136 140 160 168 192 196 200 205-207 220 221 224 \
         232 233 235-239 249-255",
    ),
    (
        AcaClass::II,
        "1-5 7 10 13 15-17 19 21 23 24 29 31 34 36 42 44 48 50 51 55 56 63 66 69 71 79 80 85 87 92 95 \
         100 104 108 112 119 127 130 138 141 144 152 162 164 170-172 174-176 178 179 186-191 194 197 \
         201-203 208 216-219 222 223 226 228 230 231 234 240-248",
    ),
    (
        AcaClass::IIIa,
        "6 9 18 20 22 25-28 30 33 35 37-39 41 45 46 49 52-54 57-62 65 67 70 73-75 78 82 83 86 88-91 94 \
         97-99 101-103 105-107 109-111 114-116 118 120-126 129 131 133-135 137 139 145-151 153-159 161 \
         163 165-167 169 173 177 180-185 193 195 198 199 204 209-211 214 215 225 227 229",
    ),
    (AcaClass::IIIb, "11 14 43 47 81 84 113 117 142 143 212 213"),
];

fn listed(list: &str, n: u32) -> bool {
    list.split_whitespace().any(|item| match item.split_once('-') {
        Some((lo, hi)) => (lo.parse::<u32>().unwrap()..=hi.parse().unwrap()).contains(&n),
        None => item.parse::<u32>().unwrap() == n,
    })
}

/// Published class of an ECA, if it is listed.
pub fn reference_class(rule: EcaNumber) -> Option<AcaClass> {
    TABLE_CLASSES
        .iter()
        .find(|(_, list)| listed(list, rule.value() as u32))
        .map(|(class, _)| *class)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcaReportRow {
    pub rule: u8,
    pub class: AcaClass,
    pub reference: Option<AcaClass>,
    pub agrees: bool,
    pub max_value: f64,
    pub last_drop: f64,
    pub sign_changes: usize,
}

/// Classifies every ECA and compares with the published table.
pub fn aca_report(
    alphas: &[f64],
    cells: usize,
    steps: usize,
    seed: &RngSeed,
    metric: Metric,
    thresholds: &AcaThresholds,
) -> Result<Vec<AcaReportRow>> {
    let rules: Vec<EcaNumber> = EcaNumber::all().collect();
    aca_report_for(&rules, alphas, cells, steps, seed, metric, thresholds)
}

/// [`aca_report`] restricted to `rules`, in the given order.
pub fn aca_report_for(
    rules: &[EcaNumber],
    alphas: &[f64],
    cells: usize,
    steps: usize,
    seed: &RngSeed,
    metric: Metric,
    thresholds: &AcaThresholds,
) -> Result<Vec<AcaReportRow>> {
    rules
        .par_iter()
        .map(|&rule| {
            let curve = run_dalpha(rule, alphas, cells, steps, seed, metric)?;
            let class = classify_aca(&curve, thresholds)?;
            let reference = reference_class(rule);
            let v = &curve.values;
            Ok(AcaReportRow {
                rule: rule.value(),
                class,
                reference,
                agrees: reference == Some(class),
                max_value: v.iter().copied().fold(0.0, f64::max),
                last_drop: v[v.len() - 2] - v[v.len() - 1],
                sign_changes: sign_changes(v),
            })
        })
        .collect()
}

/// How the C3 ensemble is evolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact probabilities; converged when all cells agree within epsilon.
    Cca,
    /// Sampled runs; converged when the configuration is homogeneous.
    Sca,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cca" => Ok(Mode::Cca),
            "sca" => Ok(Mode::Sca),
            _ => Err(Error::Validation(format!("unknown mode {s:?}; expected cca or sca"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Cca => "cca",
            Mode::Sca => "sca",
        })
    }
}

/// Default step cap `50 M`.
pub fn default_step_cap(cells: usize) -> usize {
    50 * cells
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct C3Params {
    pub eta: f64,
    pub cells: usize,
    pub ensemble: usize,
    pub mode: Mode,
    /// Ignored in CCA mode.
    pub runs_per_ic: usize,
    pub max_steps: usize,
    pub epsilon: f64,
}

impl C3Params {
    pub fn new(eta: f64, cells: usize, ensemble: usize, mode: Mode, runs_per_ic: usize) -> Self {
        Self {
            eta,
            cells,
            ensemble,
            mode,
            runs_per_ic,
            max_steps: default_step_cap(cells),
            epsilon: DEFAULT_EPSILON,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.cells.is_multiple_of(2) {
            return Err(Error::Validation(format!(
                "density classification needs an odd number of cells, got {}",
                self.cells
            )));
        }
        if self.ensemble == 0 {
            return Err(Error::Validation("ensemble must not be empty".into()));
        }
        if self.mode == Mode::Sca && self.runs_per_ic == 0 {
            return Err(Error::Validation("at least one run per initial condition is required".into()));
        }
        Ok(())
    }
}

/// Outcome for one initial condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IcRecord {
    pub ic: usize,
    pub ones: usize,
    pub majority: usize,
    pub runs: usize,
    pub converged: usize,
    pub correct: usize,
    /// Mean steps over converged runs; NaN if none converged.
    pub mean_time: f64,
    pub success_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct C3Summary {
    pub ics: usize,
    pub runs: usize,
    pub converged: usize,
    pub correct: usize,
    pub mean_time: f64,
    pub success_rate: f64,
}

fn majority(config: &Configuration) -> StateId {
    if 2 * config.count(StateId::ONE) > config.len() {
        StateId::ONE
    } else {
        StateId::ZERO
    }
}

/// Per-run outcome: steps taken and final homogeneous state.
type Run = (usize, Option<StateId>);

fn record(ic: usize, config: &Configuration, runs: &[Run]) -> IcRecord {
    let target = majority(config);
    let converged: Vec<usize> = runs.iter().filter(|r| r.1.is_some()).map(|r| r.0).collect();
    let correct = runs.iter().filter(|r| r.1 == Some(target)).count();
    IcRecord {
        ic,
        ones: config.count(StateId::ONE),
        majority: target.index(),
        runs: runs.len(),
        converged: converged.len(),
        correct,
        mean_time: if converged.is_empty() {
            f64::NAN
        } else {
            converged.iter().sum::<usize>() as f64 / converged.len() as f64
        },
        success_rate: correct as f64 / runs.len() as f64,
    }
}

fn summarize(records: &[IcRecord]) -> C3Summary {
    let runs: usize = records.iter().map(|r| r.runs).sum();
    let converged: usize = records.iter().map(|r| r.converged).sum();
    let correct: usize = records.iter().map(|r| r.correct).sum();
    let time: f64 = records
        .iter()
        .filter(|r| r.converged > 0)
        .map(|r| r.mean_time * r.converged as f64)
        .sum();
    C3Summary {
        ics: records.len(),
        runs,
        converged,
        correct,
        mean_time: if converged == 0 { f64::NAN } else { time / converged as f64 },
        success_rate: if runs == 0 { f64::NAN } else { correct as f64 / runs as f64 },
    }
}

/// CCA run until the spread drops below `epsilon`; the outcome is the
/// majority of the converged probabilities.
fn cca_until_converged(eta: f64, init: &Configuration, max_steps: usize, epsilon: f64) -> Result<Run> {
    let plut = c3_plut(eta)?;
    let mut runner = CcaRunner::new(&plut, init)?;
    loop {
        let c = cca_converged(runner.current(), epsilon)?;
        if c.converged {
            return Ok((runner.time(), Some(c.majority)));
        }
        if runner.time() == max_steps {
            return Ok((runner.time(), None));
        }
        runner.step();
    }
}

/// `runs` sampled runs from one initial condition (run `r` uses
/// `seed.derive(r)`).
pub fn c3_runs(eta: f64, init: &Configuration, runs: usize, max_steps: usize, seed: &RngSeed) -> Result<IcRecord> {
    let plut = c3_plut(eta)?;
    let results = (0..runs)
        .into_par_iter()
        .map(|r| sca_run_until_homogeneous(&plut, init, max_steps, seed.derive(r as u64).rng()))
        .collect::<Result<Vec<Run>>>()?;
    Ok(record(0, init, &results))
}

/// Density-balanced ensemble of initial conditions, each classified by C3.
pub fn run_c3_convergence(params: &C3Params, seed: &RngSeed) -> Result<(Vec<IcRecord>, C3Summary)> {
    params.validate()?;
    c3_plut(params.eta)?;
    let geometry = Geometry::new(params.cells, 1)?;
    let ic_seed = seed.experiment("c3-ic");
    let run_seed = seed.experiment("c3-run");
    let ics = (0..params.ensemble)
        .map(|k| config_random(geometry, 2, InitMode::DensityBalanced, &ic_seed.derive(k as u64)))
        .collect::<Result<Vec<_>>>()?;
    let records = match params.mode {
        Mode::Cca => ics
            .par_iter()
            .enumerate()
            .map(|(k, ic)| {
                let run = cca_until_converged(params.eta, ic, params.max_steps, params.epsilon)?;
                Ok(record(k, ic, &[run]))
            })
            .collect::<Result<Vec<_>>>()?,
        Mode::Sca => {
            let plut = c3_plut(params.eta)?;
            let runs = params.runs_per_ic;
            let flat = (0..ics.len() * runs)
                .into_par_iter()
                .map(|j| {
                    let (k, r) = (j / runs, j % runs);
                    let rng = run_seed.derive(k as u64).derive(r as u64).rng();
                    sca_run_until_homogeneous(&plut, &ics[k], params.max_steps, rng)
                })
                .collect::<Result<Vec<Run>>>()?;
            ics.iter()
                .zip(flat.chunks(runs))
                .enumerate()
                .map(|(k, (ic, chunk))| record(k, ic, chunk))
                .collect()
        }
    };
    let summary = summarize(&records);
    Ok((records, summary))
}

/// Initial conditions with exactly `ones` ones, positions drawn from `seed`.
pub fn fixed_density_ics(cells: usize, ones: usize, count: usize, seed: &RngSeed) -> Result<Vec<Configuration>> {
    let geometry = Geometry::new(cells, 1)?;
    (0..count)
        .map(|k| config_with_ones(geometry, ones, &mut seed.derive(k as u64).rng()))
        .collect()
}

/// Density traces of the continuous C3 evolution from a density-balanced
/// ensemble, one trace of `steps + 1` values per initial condition.
pub fn c3_density_traces(
    eta: f64,
    cells: usize,
    ensemble: usize,
    steps: usize,
    seed: &RngSeed,
) -> Result<Vec<Vec<f64>>> {
    let plut = c3_plut(eta)?;
    let geometry = Geometry::new(cells, 1)?;
    let ic_seed = seed.experiment("c3-ic");
    (0..ensemble)
        .into_par_iter()
        .map(|k| {
            let ic = config_random(geometry, 2, InitMode::DensityBalanced, &ic_seed.derive(k as u64))?;
            density_trace(&cca_evolve(&plut, &ic, steps)?)
        })
        .collect()
}

/// Fraction of cells (over all rows) in which two diagrams differ.
pub fn hamming(a: &SpaceTimeDiagram, b: &SpaceTimeDiagram) -> Result<f64> {
    check_shapes(a, b)?;
    Ok(a.count_differences(b, 0..a.rows()) as f64 / (a.cells() * a.rows()) as f64)
}

/// Fraction of cells in which the last rows of two diagrams differ.
pub fn hamming_final(a: &SpaceTimeDiagram, b: &SpaceTimeDiagram) -> Result<f64> {
    check_shapes(a, b)?;
    let last = a.rows() - 1;
    Ok(a.count_differences(b, last..a.rows()) as f64 / a.cells() as f64)
}

fn check_shapes(a: &SpaceTimeDiagram, b: &SpaceTimeDiagram) -> Result<()> {
    if a.cells() != b.cells() || a.rows() != b.rows() || a.n_states() != b.n_states() {
        return Err(Error::Domain(format!(
            "diagram shapes differ: {}x{} ({} states) vs {}x{} ({} states)",
            a.rows(),
            a.cells(),
            a.n_states(),
            b.rows(),
            b.cells(),
            b.n_states()
        )));
    }
    Ok(())
}

/// Pairwise distances at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridStats {
    pub p1: f64,
    pub p2: f64,
    pub delta_min: f64,
    pub delta_mean: f64,
    pub delta_max: f64,
    pub final_min: f64,
    pub final_mean: f64,
    pub final_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridParams {
    pub resolution: usize,
    pub cells: usize,
    pub steps: usize,
    pub runs: usize,
}

impl GridParams {
    /// 21 x 21 grid, 49 cells, 49 steps, 30 runs.
    pub fn desk() -> Self {
        Self {
            resolution: 21,
            cells: 49,
            steps: 49,
            runs: 30,
        }
    }

    /// 101 x 101 grid, 49 cells, 49 steps, 100 runs.
    pub fn full() -> Self {
        Self {
            resolution: 101,
            runs: 100,
            ..Self::desk()
        }
    }
}

/// `resolution` evenly spaced values on `[0, 1]`.
pub fn grid_axis(resolution: usize) -> Vec<f64> {
    let last = (resolution - 1) as f64;
    (0..resolution).map(|i| i as f64 / last).collect()
}

/// Min, mean and max of pairwise distances from integer difference counts.
fn pair_stats(counts: &[usize], denom: usize) -> (f64, f64, f64) {
    let min = *counts.iter().min().expect("at least one pair");
    let max = *counts.iter().max().expect("at least one pair");
    let sum: u64 = counts.iter().map(|&c| c as u64).sum();
    let d = denom as f64;
    (
        min as f64 / d,
        sum as f64 / (counts.len() as f64 * d),
        max as f64 / d,
    )
}

fn grid_point(p1: f64, p2: f64, init: &Configuration, params: &GridParams, seed: &RngSeed) -> Result<GridStats> {
    let plut = totalistic_plut(TotalisticParams::new(p1, p2)?);
    let diagrams = (0..params.runs)
        .map(|r| sca_evolve(&plut, init, params.steps, &seed.derive(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let rows = params.steps + 1;
    let pairs = params.runs * (params.runs - 1) / 2;
    let (mut full, mut last) = (Vec::with_capacity(pairs), Vec::with_capacity(pairs));
    for i in 0..diagrams.len() {
        for j in i + 1..diagrams.len() {
            full.push(diagrams[i].count_differences(&diagrams[j], 0..rows));
            last.push(diagrams[i].count_differences(&diagrams[j], rows - 1..rows));
        }
    }
    let (delta_min, delta_mean, delta_max) = pair_stats(&full, params.cells * rows);
    let (final_min, final_mean, final_max) = pair_stats(&last, params.cells);
    Ok(GridStats {
        p1,
        p2,
        delta_min,
        delta_mean,
        delta_max,
        final_min,
        final_mean,
        final_max,
    })
}

/// Hamming statistics over a `resolution x resolution` grid of `(p1, p2)`.
///
/// One uniform initial configuration is shared by all grid points and runs.
/// Points are ordered with `p1` outer and `p2` inner.
pub fn run_totalistic_grid(params: &GridParams, seed: &RngSeed) -> Result<Vec<GridStats>> {
    if params.resolution < 2 || params.runs < 2 || params.steps == 0 {
        return Err(Error::Validation(
            "grid needs resolution >= 2, runs >= 2 and at least one step".into(),
        ));
    }
    let geometry = Geometry::new(params.cells, 1)?;
    let init = config_random(geometry, 2, InitMode::Uniform, &seed.experiment("grid-init"))?;
    let run_seed = seed.experiment("grid-run");
    let axis = grid_axis(params.resolution);
    let res = params.resolution;
    (0..res * res)
        .into_par_iter()
        .map(|g| grid_point(axis[g / res], axis[g % res], &init, params, &run_seed.derive(g as u64)))
        .collect()
}

/// Mean of `delta_mean` over grid points satisfying `pred`.
pub fn quadrant_mean(stats: &[GridStats], pred: impl Fn(f64, f64) -> bool) -> Option<f64> {
    let picked: Vec<f64> = stats.iter().filter(|s| pred(s.p1, s.p2)).map(|s| s.delta_mean).collect();
    (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
}

/// ECA number of the component with the largest greedy coefficient for a
/// totalistic rule, with that coefficient.
pub fn totalistic_dominant(params: TotalisticParams) -> Result<(f64, EcaNumber)> {
    let (alpha, lut): (f64, Lut) = crate::decompose::dominant_component(&totalistic_plut(params))?;
    Ok((alpha, crate::rules::lut_number(&lut)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Geometry;

    fn diagram(rows: &[&[usize]]) -> SpaceTimeDiagram {
        let g = Geometry::new(rows[0].len(), 1).unwrap();
        let configs: Vec<_> = rows
            .iter()
            .map(|r| Configuration::from_indices(g, 2, r).unwrap())
            .collect();
        SpaceTimeDiagram::from_rows(&configs).unwrap()
    }

    #[test]
    fn alpha_grid_ends_at_one() {
        let g = alpha_grid(0.9, 11).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 0.9);
        assert_eq!(g[10], 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(alpha_grid(0.9, 1).is_err());
    }

    #[test]
    fn dalpha_vanishes_at_one() {
        let seed = RngSeed::new(3);
        let curve = run_dalpha(EcaNumber::from(110), &[0.5, 1.0], 31, 20, &seed, Metric::Tv).unwrap();
        assert_eq!(curve.values[1], 0.0);
        assert!(curve.values[0] > 0.0 && curve.values[0] <= 1.0);
        let e = run_dalpha(EcaNumber::from(110), &[0.5, 1.0], 31, 20, &seed, Metric::Euclidean).unwrap();
        assert_eq!(e.values[1], 0.0);
        assert!(run_dalpha(EcaNumber::from(110), &[1.5], 31, 20, &seed, Metric::Tv).is_err());
    }

    #[test]
    fn tv_matches_scalar_view() {
        // For two states the per-cell distance is |s - p| on the state-1 probability.
        let g = Geometry::new(3, 1).unwrap();
        let approx = ContinuousConfiguration::from_flat(g, 2, vec![0.25, 0.75, 1.0, 0.0, 0.5, 0.5]).unwrap();
        let exact = [StateId::ONE, StateId::ONE, StateId::ZERO];
        let tv = step_distance(&exact, &approx, Metric::Tv);
        assert!((tv - (0.25 + 1.0 + 0.5)).abs() < 1e-15);
        let eu = step_distance(&exact, &approx, Metric::Euclidean);
        assert!((eu - (0.0625f64 + 1.0 + 0.25).sqrt()).abs() < 1e-15);
    }

    fn curve(values: Vec<f64>) -> DAlphaCurve {
        DAlphaCurve {
            rule: EcaNumber::from(0),
            alphas: alpha_grid(0.9, values.len()).unwrap(),
            values,
            cells: 1,
            steps: 1,
            seed: 0,
            metric: Metric::Tv,
        }
    }

    #[test]
    fn classification_rules() {
        let t = AcaThresholds::default();
        assert_eq!(classify_aca(&curve(vec![0.01; 10].into_iter().chain([0.0]).collect()), &t).unwrap(), AcaClass::I);
        let smooth: Vec<f64> = (0..11).map(|i| 0.3 * (10 - i) as f64 / 10.0).collect();
        assert_eq!(classify_aca(&curve(smooth), &t).unwrap(), AcaClass::II);
        let cliff: Vec<f64> = (0..11).map(|i| if i == 10 { 0.0 } else { 0.3 + 0.001 * i as f64 }).collect();
        assert_eq!(classify_aca(&curve(cliff), &t).unwrap(), AcaClass::IIIa);
        let noisy: Vec<f64> = (0..11)
            .map(|i| if i == 10 { 0.0 } else { 0.3 + 0.01 * (i % 2) as f64 })
            .collect();
        assert_eq!(classify_aca(&curve(noisy), &t).unwrap(), AcaClass::IIIb);
        assert!(matches!(classify_aca(&curve(vec![0.0; 5]), &t), Err(Error::Domain(_))));
    }

    #[test]
    fn reference_table_lists_each_rule_at_most_once() {
        for rule in EcaNumber::all() {
            let hits = TABLE_CLASSES.iter().filter(|(_, l)| listed(l, rule.value() as u32)).count();
            assert!(hits <= 1, "rule {rule} listed {hits} times");
        }
        assert_eq!(reference_class(EcaNumber::from(40)), Some(AcaClass::I));
        assert_eq!(reference_class(EcaNumber::from(42)), Some(AcaClass::II));
        assert_eq!(reference_class(EcaNumber::from(38)), Some(AcaClass::IIIa));
        assert_eq!(reference_class(EcaNumber::from(43)), Some(AcaClass::IIIb));
    }

    #[test]
    fn hamming_examples() {
        let a = diagram(&[&[1, 0, 1], &[0, 0, 1]]);
        let b = diagram(&[&[0, 1, 0], &[1, 1, 0]]);
        let c = diagram(&[&[1, 0, 1], &[0, 1, 1]]);
        assert_eq!(hamming(&a, &a).unwrap(), 0.0);
        assert_eq!(hamming(&a, &b).unwrap(), 1.0);
        assert_eq!(hamming(&a, &c).unwrap(), 1.0 / 6.0);
        assert_eq!(hamming_final(&a, &c).unwrap(), 1.0 / 3.0);
        let short = diagram(&[&[1, 0, 1]]);
        assert!(matches!(hamming(&a, &short), Err(Error::Domain(_))));
    }

    #[test]
    fn single_cell_difference_in_large_diagram() {
        let g = Geometry::new(49, 1).unwrap();
        let zero = Configuration::homogeneous(g, 2, StateId::ZERO).unwrap();
        let mut rows = vec![zero.clone(); 50];
        let mut flipped = vec![0usize; 49];
        flipped[48] = 1;
        rows[17] = Configuration::from_indices(g, 2, &flipped).unwrap();
        let a = SpaceTimeDiagram::from_rows(&vec![zero; 50]).unwrap();
        let b = SpaceTimeDiagram::from_rows(&rows).unwrap();
        assert_eq!(hamming(&a, &b).unwrap(), 1.0 / 2450.0);
    }

    #[test]
    fn deterministic_grid_corners() {
        let params = GridParams {
            resolution: 2,
            cells: 15,
            steps: 10,
            runs: 4,
        };
        let stats = run_totalistic_grid(&params, &RngSeed::new(5)).unwrap();
        assert_eq!(stats.len(), 4);
        for s in &stats {
            assert!(s.delta_min <= s.delta_mean && s.delta_mean <= s.delta_max);
            // (0,0) and (1,1) are deterministic; so are (0,1) and (1,0).
            assert_eq!(s.delta_max, 0.0);
            assert_eq!(s.final_max, 0.0);
        }
    }

    #[test]
    fn c3_eta_zero_all_ones_is_fixed() {
        let g = Geometry::new(29, 1).unwrap();
        let ones = Configuration::homogeneous(g, 2, StateId::ONE).unwrap();
        let r = c3_runs(0.0, &ones, 5, 100, &RngSeed::new(1)).unwrap();
        assert_eq!((r.converged, r.correct, r.mean_time), (5, 5, 0.0));
        assert_eq!(cca_until_converged(0.0, &ones, 100, DEFAULT_EPSILON).unwrap(), (0, Some(StateId::ONE)));
    }

    #[test]
    fn c3_modes_run() {
        for mode in [Mode::Cca, Mode::Sca] {
            let p = C3Params::new(0.1, 15, 4, mode, 5);
            let (records, summary) = run_c3_convergence(&p, &RngSeed::new(2)).unwrap();
            assert_eq!(records.len(), 4);
            assert_eq!(summary.ics, 4);
            assert!(records.iter().all(|r| r.correct <= r.converged && r.converged <= r.runs));
        }
        assert!(run_c3_convergence(&C3Params::new(0.1, 14, 4, Mode::Cca, 1), &RngSeed::new(2)).is_err());
    }

    #[test]
    fn totalistic_dominant_components() {
        let d = |p1, p2| totalistic_dominant(TotalisticParams::new(p1, p2).unwrap()).unwrap();
        assert_eq!(d(0.8, 0.2).1.value(), 150);
        assert_eq!(d(0.2, 0.8).1.value(), 232);
        assert_eq!(d(0.1, 0.1).1.value(), 128);
        assert_eq!(d(0.9, 0.9).1.value(), 254);
        assert!((d(0.8, 0.3).0 - 0.7).abs() < 1e-12);
    }
}
