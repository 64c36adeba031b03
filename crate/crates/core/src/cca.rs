//! Exact evolution of cell-wise state distributions.
//!
//! Each cell carries a point of the probability simplex. One step applies the
//! multilinear local rule
//!
//! ```text
//! f_j(s_1, .., s_R) = sum_i P[i][j] * prod_m s_m[ind(i)[m]]
//! ```
//!
//! over the periodic window of every cell. For an SCA with table `P` started
//! from a fixed configuration, this is the total-probability update of the
//! per-cell marginals.

use crate::error::{Error, Result};
use crate::lattice::{
    digits0, Configuration, Geometry, LocalRule, Plut, SimplexVector, StateId,
    ROW_SUM_TOLERANCE,
};

/// Default spread threshold for [`cca_converged`].
pub const DEFAULT_EPSILON: f64 = 0.001;

/// One probability vector per cell, stored flat (`cells * N` values).
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousConfiguration {
    geometry: Geometry,
    n_states: usize,
    probs: Vec<f64>,
}

impl ContinuousConfiguration {
    pub fn new(geometry: Geometry, cells: Vec<SimplexVector>) -> Result<Self> {
        if cells.len() != geometry.cells() {
            return Err(Error::Validation(format!(
                "expected {} cells, got {}",
                geometry.cells(),
                cells.len()
            )));
        }
        let n_states = cells.first().map_or(2, SimplexVector::n_states);
        if cells.iter().any(|c| c.n_states() != n_states) {
            return Err(Error::Validation("cells disagree on the number of states".into()));
        }
        let probs = cells.into_iter().flat_map(SimplexVector::into_vec).collect();
        Ok(Self {
            geometry,
            n_states,
            probs,
        })
    }

    /// Flat row-major values, validated per cell.
    pub fn from_flat(geometry: Geometry, n_states: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != geometry.cells() * n_states {
            return Err(Error::Validation(format!(
                "expected {} values, got {}",
                geometry.cells() * n_states,
                probs.len()
            )));
        }
        for (i, cell) in probs.chunks_exact(n_states).enumerate() {
            SimplexVector::with_tolerance(cell.to_vec(), ROW_SUM_TOLERANCE).map_err(|e| match e {
                Error::InvalidRow { fault, .. } => Error::InvalidRow { row: i + 1, fault },
                other => other,
            })?;
        }
        Ok(Self {
            geometry,
            n_states,
            probs,
        })
    }

    pub(crate) fn from_parts(geometry: Geometry, n_states: usize, probs: Vec<f64>) -> Self {
        Self {
            geometry,
            n_states,
            probs,
        }
    }

    /// Exact one-hot lift of a discrete configuration.
    pub fn lift(config: &Configuration) -> Self {
        let n = config.n_states();
        let mut probs = vec![0.0; config.len() * n];
        for (i, s) in config.states().iter().enumerate() {
            probs[i * n + s.index()] = 1.0;
        }
        Self::from_parts(config.geometry(), n, probs)
    }

    /// Every cell set to the same distribution.
    pub fn uniform_cells(geometry: Geometry, cell: &SimplexVector) -> Self {
        let probs = cell.probs().repeat(geometry.cells());
        Self::from_parts(geometry, cell.n_states(), probs)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn cells(&self) -> usize {
        self.geometry.cells()
    }

    #[inline]
    pub fn cell(&self, i: usize) -> &[f64] {
        &self.probs[i * self.n_states..(i + 1) * self.n_states]
    }

    pub fn cell_vector(&self, i: usize) -> SimplexVector {
        SimplexVector::from_raw(self.cell(i).to_vec())
    }

    pub fn flat(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of `state` in every cell.
    pub fn state_probs(&self, state: StateId) -> impl Iterator<Item = f64> + '_ {
        self.probs
            .chunks_exact(self.n_states)
            .map(move |c| c[state.index()])
    }

    /// Back to discrete states when every cell is exactly one-hot.
    pub fn to_discrete(&self) -> Option<Configuration> {
        let states = self
            .probs
            .chunks_exact(self.n_states)
            .map(|c| {
                let j = c.iter().position(|&p| p == 1.0)?;
                c.iter()
                    .enumerate()
                    .all(|(l, &p)| l == j || p == 0.0)
                    .then(|| StateId::raw(j as u8))
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Configuration::from_parts(self.geometry, self.n_states, states))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<&Configuration> for ContinuousConfiguration {
    fn from(config: &Configuration) -> Self {
        Self::lift(config)
    }
}

/// Distributions at steps `0..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousTrajectory {
    steps: Vec<ContinuousConfiguration>,
}

impl ContinuousTrajectory {
    pub fn new(steps: Vec<ContinuousConfiguration>) -> Result<Self> {
        let first = steps
            .first()
            .ok_or_else(|| Error::Validation("a trajectory needs at least one step".into()))?;
        if steps
            .iter()
            .any(|s| s.geometry != first.geometry || s.n_states != first.n_states)
        {
            return Err(Error::Validation("trajectory steps disagree in shape".into()));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[ContinuousConfiguration] {
        &self.steps
    }

    pub fn step(&self, t: usize) -> &ContinuousConfiguration {
        &self.steps[t]
    }

    pub fn last(&self) -> &ContinuousConfiguration {
        self.steps.last().expect("trajectory is non-empty")
    }

    /// Number of time steps `T` (one less than the number of configurations).
    pub fn len(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.steps.len() == 1
    }

    pub fn geometry(&self) -> Geometry {
        self.steps[0].geometry
    }

    pub fn n_states(&self) -> usize {
        self.steps[0].n_states
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.steps
            .iter()
            .zip(&other.steps)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn mean_abs_diff(&self, other: &Self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (a, b) in self.steps.iter().zip(&other.steps) {
            for (x, y) in a.probs.iter().zip(&b.probs) {
                total += (x - y).abs();
                count += 1;
            }
        }
        total / count as f64
    }
}

fn check_plut_config(plut: &Plut, n_states: usize, cells: usize) -> Result<()> {
    if plut.n_states() != n_states {
        return Err(Error::Domain(format!(
            "pLUT has {} states, configuration has {n_states}",
            plut.n_states()
        )));
    }
    if plut.window_len() > cells {
        return Err(Error::Domain(format!(
            "window {} does not fit in {cells} cells",
            plut.window_len()
        )));
    }
    Ok(())
}

/// Local rule on a window of `R` distributions, evaluated term by term.
pub fn cca_local_eval(plut: &Plut, window: &[SimplexVector]) -> Result<SimplexVector> {
    if window.len() != plut.window_len() {
        return Err(Error::Domain(format!(
            "window has {} cells, rule expects {}",
            window.len(),
            plut.window_len()
        )));
    }
    let n = plut.n_states();
    if window.iter().any(|s| s.n_states() != n) {
        return Err(Error::Domain(format!("window cells must have {n} states")));
    }
    let cells: Vec<&[f64]> = window.iter().map(SimplexVector::probs).collect();
    let mut out = vec![0.0; n];
    let mut digits = vec![0; window.len()];
    local_eval_reference(plut, &cells, &mut digits, &mut out);
    Ok(SimplexVector::from_raw(out))
}

fn local_eval_reference(plut: &Plut, window: &[&[f64]], digits: &mut [usize], out: &mut [f64]) {
    out.fill(0.0);
    for k in 0..plut.table_rows() {
        digits0(k, plut.n_states(), digits);
        let weight: f64 = window
            .iter()
            .zip(digits.iter())
            .map(|(cell, &d)| cell[d])
            .product();
        for (o, p) in out.iter_mut().zip(plut.row(k)) {
            *o += p * weight;
        }
    }
}

/// Reference global step: per cell, per neighborhood, the plain product.
pub fn cca_step_reference(plut: &Plut, config: &ContinuousConfiguration) -> Result<ContinuousConfiguration> {
    check_plut_config(plut, config.n_states, config.cells())?;
    let g = config.geometry;
    let n = config.n_states;
    let r = plut.radius() as isize;
    let mut probs = vec![0.0; config.probs.len()];
    let mut digits = vec![0; plut.window_len()];
    let mut window: Vec<&[f64]> = Vec::with_capacity(plut.window_len());
    for (i, out) in probs.chunks_exact_mut(n).enumerate() {
        window.clear();
        window.extend((-r..=r).map(|o| config.cell(g.wrap(i, o))));
        local_eval_reference(plut, &window, &mut digits, out);
    }
    Ok(ContinuousConfiguration::from_parts(g, n, probs))
}

/// Reusable buffers for the factorized step.
struct StepScratch {
    weights: Vec<f64>,
    next: Vec<f64>,
}

impl StepScratch {
    fn new(rows: usize) -> Self {
        Self {
            weights: Vec::with_capacity(rows),
            next: Vec::with_capacity(rows),
        }
    }

    /// Neighborhood probabilities for one window, built left to right so that
    /// entry `k` holds the product for 0-based index `k`.
    fn neighborhood_weights(&mut self, window: impl Iterator<Item = usize>, config: &ContinuousConfiguration) {
        self.weights.clear();
        self.weights.push(1.0);
        for cell in window {
            let dist = config.cell(cell);
            self.next.clear();
            for &w in &self.weights {
                self.next.extend(dist.iter().map(|&p| w * p));
            }
            std::mem::swap(&mut self.weights, &mut self.next);
        }
    }
}

fn step_into(plut: &Plut, config: &ContinuousConfiguration, scratch: &mut StepScratch, probs: &mut [f64]) {
    let g = config.geometry;
    let n = config.n_states;
    let r = plut.radius() as isize;
    for (i, out) in probs.chunks_exact_mut(n).enumerate() {
        scratch.neighborhood_weights((-r..=r).map(|o| g.wrap(i, o)), config);
        out.fill(0.0);
        for (k, &w) in scratch.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(plut.row(k)) {
                *o += p * w;
            }
        }
        // The map multiplies a cell-sum error by about R each step, so
        // rounding would grow geometrically without this projection.
        let sum: f64 = out.iter().sum();
        if sum != 1.0 {
            out.iter_mut().for_each(|o| *o /= sum);
        }
    }
}

/// One synchronous step of the continuous automaton.
///
/// Neighborhood weights are built incrementally (`O(N^R)` per cell instead of
/// `O(R N^R)`) and each output cell is rescaled to sum to 1; this agrees
/// with [`cca_step_reference`] to within 1e-12.
pub fn cca_step(plut: &Plut, config: &ContinuousConfiguration) -> Result<ContinuousConfiguration> {
    check_plut_config(plut, config.n_states, config.cells())?;
    let mut scratch = StepScratch::new(plut.table_rows());
    let mut probs = vec![0.0; config.probs.len()];
    step_into(plut, config, &mut scratch, &mut probs);
    Ok(ContinuousConfiguration::from_parts(config.geometry, config.n_states, probs))
}

/// Steps `0..=steps` starting from `init` (discrete inits are lifted exactly).
pub fn cca_evolve(
    plut: &Plut,
    init: impl Into<ContinuousConfiguration>,
    steps: usize,
) -> Result<ContinuousTrajectory> {
    let init = init.into();
    check_plut_config(plut, init.n_states, init.cells())?;
    let mut scratch = StepScratch::new(plut.table_rows());
    let mut out = Vec::with_capacity(steps + 1);
    out.push(init);
    for _ in 0..steps {
        let prev = out.last().expect("non-empty");
        let mut probs = vec![0.0; prev.probs.len()];
        step_into(plut, prev, &mut scratch, &mut probs);
        out.push(ContinuousConfiguration::from_parts(prev.geometry, prev.n_states, probs));
    }
    Ok(ContinuousTrajectory { steps: out })
}

/// In-place stepper for long runs that do not keep the trajectory.
pub struct CcaRunner<'a> {
    plut: &'a Plut,
    current: ContinuousConfiguration,
    buffer: Vec<f64>,
    scratch: StepScratch,
    time: usize,
}

impl<'a> CcaRunner<'a> {
    pub fn new(plut: &'a Plut, init: impl Into<ContinuousConfiguration>) -> Result<Self> {
        let current = init.into();
        check_plut_config(plut, current.n_states, current.cells())?;
        let buffer = vec![0.0; current.probs.len()];
        Ok(Self {
            plut,
            current,
            buffer,
            scratch: StepScratch::new(plut.table_rows()),
            time: 0,
        })
    }

    pub fn step(&mut self) {
        step_into(self.plut, &self.current, &mut self.scratch, &mut self.buffer);
        std::mem::swap(&mut self.current.probs, &mut self.buffer);
        self.time += 1;
    }

    pub fn current(&self) -> &ContinuousConfiguration {
        &self.current
    }

    pub fn time(&self) -> usize {
        self.time
    }
}

/// Outcome of [`cca_converged`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convergence {
    pub converged: bool,
    /// `max - min` of the state-1 probability over cells.
    pub spread: f64,
    /// State 1 if the mean state-1 probability exceeds 0.5, else state 0.
    pub majority: StateId,
}

/// Binary convergence test: every pair of cells differs in state-1
/// probability by less than `epsilon`.
pub fn cca_converged(config: &ContinuousConfiguration, epsilon: f64) -> Result<Convergence> {
    if config.n_states != 2 {
        return Err(Error::Unsupported(format!(
            "convergence is defined for 2 states, got {}",
            config.n_states
        )));
    }
    if epsilon <= 0.0 {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for p in config.state_probs(StateId::ONE) {
        lo = lo.min(p);
        hi = hi.max(p);
        sum += p;
    }
    let spread = hi - lo;
    let mean = sum / config.cells() as f64;
    Ok(Convergence {
        converged: spread < epsilon,
        spread,
        majority: if mean > 0.5 { StateId::ONE } else { StateId::ZERO },
    })
}

/// Mean state-1 probability at each step.
pub fn density_trace(traj: &ContinuousTrajectory) -> Result<Vec<f64>> {
    if traj.n_states() != 2 {
        return Err(Error::Unsupported(format!(
            "density traces need 2 states, got {}",
            traj.n_states()
        )));
    }
    Ok(traj.steps.iter().map(density).collect())
}

/// Mean state-1 probability of a binary configuration.
pub fn density(config: &ContinuousConfiguration) -> f64 {
    config.state_probs(StateId::ONE).sum::<f64>() / config.cells() as f64
}
