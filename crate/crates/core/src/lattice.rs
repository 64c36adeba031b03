//! States, periodic lattices, neighborhood indexing and lookup tables.
//!
//! Neighborhood indices appear in two conventions. Public codec functions
//! ([`ind_digits`], [`neighborhood_index`]) are 1-based: index `k` runs over
//! `1..=N^R` and digits over `1..=N`. Table storage and the `*_row`/`output`
//! accessors are 0-based, so row `k - 1` holds neighborhood `k`. The leftmost
//! cell of a window is the most significant base-`N` digit.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowFault};
use crate::rng::RngSeed;

/// Largest supported number of states.
pub const MAX_STATES: usize = 16;
/// Largest supported table size `N^R`.
pub const MAX_TABLE_ROWS: usize = 1 << 24;
/// Default tolerance for row sums of probability vectors.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Number of rows `N^R` of a table, checked against the practical limits.
pub fn table_rows(n_states: usize, window_len: usize) -> Result<usize> {
    if !(2..=MAX_STATES).contains(&n_states) {
        return Err(Error::Validation(format!(
            "number of states must be in 2..={MAX_STATES}, got {n_states}"
        )));
    }
    let mut rows = 1usize;
    for _ in 0..window_len {
        rows = rows
            .checked_mul(n_states)
            .filter(|&r| r <= MAX_TABLE_ROWS)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "table size {n_states}^{window_len} exceeds {MAX_TABLE_ROWS}"
                ))
            })?;
    }
    Ok(rows)
}

/// A basis state `e_{index+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(u8);

impl StateId {
    pub const ZERO: StateId = StateId(0);
    pub const ONE: StateId = StateId(1);

    pub fn new(index: usize, n_states: usize) -> Result<Self> {
        if index >= n_states || n_states > MAX_STATES {
            return Err(Error::Validation(format!(
                "state {index} is not valid for {n_states} states"
            )));
        }
        Ok(StateId(index as u8))
    }

    pub(crate) const fn raw(index: u8) -> Self {
        StateId(index)
    }

    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    /// One-hot vector of length `n_states`.
    pub fn one_hot(self, n_states: usize) -> SimplexVector {
        let mut probs = vec![0.0; n_states];
        probs[self.index()] = 1.0;
        SimplexVector { probs }
    }
}

pub(crate) fn check_row(row: &[f64], n_states: usize, tol: f64) -> std::result::Result<(), RowFault> {
    if row.len() != n_states {
        return Err(RowFault::Width {
            expected: n_states,
            found: row.len(),
        });
    }
    for (state, &value) in row.iter().enumerate() {
        if !value.is_finite() {
            return Err(RowFault::NonFinite { state });
        }
        if value < 0.0 {
            return Err(RowFault::Negative { state, value });
        }
        if value > 1.0 {
            return Err(RowFault::AboveOne { state, value });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(RowFault::RowSum { sum });
    }
    Ok(())
}

/// A probability distribution over `N` states.
///
/// Values are stored exactly as given; construction rejects vectors whose
/// entries leave `[0, 1]` or whose sum is off by more than the tolerance, and
/// never renormalizes.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SimplexVector {
    probs: Vec<f64>,
}

impl SimplexVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, ROW_SUM_TOLERANCE)
    }

    pub fn with_tolerance(probs: Vec<f64>, tol: f64) -> Result<Self> {
        let n = probs.len();
        if n < 2 {
            return Err(Error::Validation(format!(
                "a distribution needs at least 2 states, got {n}"
            )));
        }
        check_row(&probs, n, tol).map_err(|fault| Error::InvalidRow { row: 1, fault })?;
        Ok(Self { probs })
    }

    pub fn uniform(n_states: usize) -> Self {
        Self {
            probs: vec![1.0 / n_states as f64; n_states],
        }
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_states(&self) -> usize {
        self.probs.len()
    }

    pub fn get(&self, state: StateId) -> f64 {
        self.probs[state.index()]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// Lattice of `cells` cells on a ring with a symmetric radius-`radius` window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    cells: usize,
    radius: usize,
}

impl Geometry {
    /// Requires `2 * radius + 1 <= cells`. The model assumes the radius is
    /// much smaller than the lattice, but only the window fit is enforced.
    pub fn new(cells: usize, radius: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Validation("lattice needs at least one cell".into()));
        }
        if 2 * radius + 1 > cells {
            return Err(Error::Validation(format!(
                "window of radius {radius} does not fit in {cells} cells"
            )));
        }
        Ok(Self { cells, radius })
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.cells
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// `R = 2r + 1`.
    #[inline]
    pub fn window_len(&self) -> usize {
        2 * self.radius + 1
    }

    /// Cell index at signed offset `offset` from `cell`, wrapping around.
    #[inline]
    pub fn wrap(&self, cell: usize, offset: isize) -> usize {
        let m = self.cells as isize;
        ((cell as isize + offset).rem_euclid(m)) as usize
    }

    /// Cells of the window centered at `cell`, left to right.
    pub fn window(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let r = self.radius as isize;
        (-r..=r).map(move |offset| self.wrap(cell, offset))
    }
}

/// One discrete state per cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    geometry: Geometry,
    n_states: usize,
    states: Vec<StateId>,
}

impl Configuration {
    pub fn new(geometry: Geometry, n_states: usize, states: Vec<StateId>) -> Result<Self> {
        table_rows(n_states, 1)?;
        if states.len() != geometry.cells() {
            return Err(Error::Validation(format!(
                "configuration has {} cells, geometry expects {}",
                states.len(),
                geometry.cells()
            )));
        }
        if let Some(bad) = states.iter().find(|s| s.index() >= n_states) {
            return Err(Error::Validation(format!(
                "state {} is not valid for {n_states} states",
                bad.index()
            )));
        }
        Ok(Self {
            geometry,
            n_states,
            states,
        })
    }

    pub fn from_indices(geometry: Geometry, n_states: usize, indices: &[usize]) -> Result<Self> {
        let states = indices
            .iter()
            .map(|&i| StateId::new(i, n_states))
            .collect::<Result<Vec<_>>>()?;
        Self::new(geometry, n_states, states)
    }

    /// All cells in `state`.
    pub fn homogeneous(geometry: Geometry, n_states: usize, state: StateId) -> Result<Self> {
        Self::new(geometry, n_states, vec![state; geometry.cells()])
    }

    pub(crate) fn from_parts(geometry: Geometry, n_states: usize, states: Vec<StateId>) -> Self {
        debug_assert_eq!(states.len(), geometry.cells());
        Self {
            geometry,
            n_states,
            states,
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn get(&self, cell: usize) -> StateId {
        self.states[cell]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn count(&self, state: StateId) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }

    /// The common state if every cell agrees.
    pub fn homogeneous_state(&self) -> Option<StateId> {
        let first = *self.states.first()?;
        self.states.iter().all(|&s| s == first).then_some(first)
    }

    /// Same states viewed through a different radius (for wider rules).
    pub fn with_radius(&self, radius: usize) -> Result<Self> {
        let geometry = Geometry::new(self.geometry.cells(), radius)?;
        Ok(Self {
            geometry,
            ..self.clone()
        })
    }
}

/// 0-based neighborhood index of every cell, computed with a rolling window.
pub(crate) fn neighborhood_indices(states: &[StateId], n_states: usize, radius: usize) -> Vec<usize> {
    let m = states.len();
    let window = 2 * radius + 1;
    let top = n_states.pow(window as u32 - 1);
    let mut out = Vec::with_capacity(m);
    let mut k = 0usize;
    for offset in 0..window {
        let cell = (offset + m * window - radius) % m;
        k = k * n_states + states[cell].index();
    }
    out.push(k);
    for i in 1..m {
        let leaving = states[(i + m * window - radius - 1) % m].index();
        let entering = states[(i + radius) % m].index();
        k = (k - leaving * top) * n_states + entering;
        out.push(k);
    }
    out
}

/// 0-based base-`N` digits of the 0-based index `k0`, most significant first.
pub(crate) fn digits0(mut k0: usize, n_states: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = k0 % n_states;
        k0 /= n_states;
    }
}

/// Digits `ind(i)` of neighborhood `i` (1-based index, 1-based digits).
pub fn ind_digits(i: usize, n_states: usize, window_len: usize) -> Result<Vec<usize>> {
    let rows = table_rows(n_states, window_len)?;
    if i == 0 || i > rows {
        return Err(Error::Domain(format!(
            "neighborhood index {i} is outside 1..={rows}"
        )));
    }
    let mut digits = vec![0; window_len];
    digits0(i - 1, n_states, &mut digits);
    digits.iter_mut().for_each(|d| *d += 1);
    Ok(digits)
}

/// Inverse of [`ind_digits`]: `i = 1 + sum_m (d[R-m+1] - 1) N^(m-1)`.
pub fn neighborhood_index(digits: &[usize], n_states: usize) -> Result<usize> {
    table_rows(n_states, digits.len())?;
    let mut k = 0usize;
    for &d in digits {
        if d == 0 || d > n_states {
            return Err(Error::Domain(format!(
                "digit {d} is outside 1..={n_states}"
            )));
        }
        k = k * n_states + (d - 1);
    }
    Ok(k + 1)
}

/// Shared shape of lookup tables.
pub trait LocalRule {
    fn n_states(&self) -> usize;
    fn radius(&self) -> usize;

    fn window_len(&self) -> usize {
        2 * self.radius() + 1
    }

    /// `N^R`.
    fn table_rows(&self) -> usize {
        self.n_states().pow(self.window_len() as u32)
    }
}

/// Deterministic lookup table: one output state per neighborhood.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lut {
    n_states: usize,
    radius: usize,
    outputs: Vec<StateId>,
}

impl Lut {
    /// `outputs[k - 1]` is the image of neighborhood `k`.
    pub fn new(outputs: Vec<StateId>, n_states: usize, radius: usize) -> Result<Self> {
        let rows = table_rows(n_states, 2 * radius + 1)?;
        if outputs.len() != rows {
            return Err(Error::Validation(format!(
                "LUT needs {rows} outputs for N={n_states}, r={radius}, got {}",
                outputs.len()
            )));
        }
        if let Some(k) = outputs.iter().position(|s| s.index() >= n_states) {
            return Err(Error::InvalidRow {
                row: k + 1,
                fault: RowFault::NotOneHot,
            });
        }
        Ok(Self {
            n_states,
            radius,
            outputs,
        })
    }

    pub fn from_indices(outputs: &[usize], n_states: usize, radius: usize) -> Result<Self> {
        let states = outputs
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                StateId::new(s, n_states).map_err(|_| Error::InvalidRow {
                    row: k + 1,
                    fault: RowFault::NotOneHot,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(states, n_states, radius)
    }

    /// Rule that copies the center cell.
    pub fn identity(n_states: usize, radius: usize) -> Result<Self> {
        let window = 2 * radius + 1;
        let rows = table_rows(n_states, window)?;
        let center_weight = n_states.pow(radius as u32);
        let outputs = (0..rows)
            .map(|k| StateId::raw(((k / center_weight) % n_states) as u8))
            .collect();
        Ok(Self {
            n_states,
            radius,
            outputs,
        })
    }

    pub(crate) fn from_parts(outputs: Vec<StateId>, n_states: usize, radius: usize) -> Self {
        Self {
            n_states,
            radius,
            outputs,
        }
    }

    /// Output for the 0-based neighborhood index `k0`.
    #[inline]
    pub fn output(&self, k0: usize) -> StateId {
        self.outputs[k0]
    }

    pub fn outputs(&self) -> &[StateId] {
        &self.outputs
    }

    /// Outputs as plain state indices.
    pub fn output_indices(&self) -> Vec<usize> {
        self.outputs.iter().map(|s| s.index()).collect()
    }

    pub fn to_file(&self) -> TableFile {
        TableFile {
            states: self.n_states,
            radius: self.radius,
            rows: self
                .outputs
                .iter()
                .map(|s| s.one_hot(self.n_states).into_vec())
                .collect(),
        }
    }

    /// Parse the JSON table format; every row must be exactly one-hot.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: TableFile = serde_json::from_str(text)?;
        let plut = file.to_plut(ROW_SUM_TOLERANCE)?;
        plut.as_lut().ok_or_else(|| {
            let row = (0..plut.table_rows())
                .find(|&k| !plut.row(k).iter().all(|&p| p == 0.0 || p == 1.0))
                .unwrap_or(0);
            Error::InvalidRow {
                row: row + 1,
                fault: RowFault::NotOneHot,
            }
        })
    }

    /// Deterministic step of the whole lattice.
    pub fn step(&self, config: &Configuration) -> Result<Configuration> {
        check_config(self, config)?;
        let states = neighborhood_indices(config.states(), self.n_states, self.radius)
            .into_iter()
            .map(|k| self.outputs[k])
            .collect();
        Ok(Configuration::from_parts(
            config.geometry(),
            self.n_states,
            states,
        ))
    }

    /// `steps + 1` configurations starting from `init`.
    pub fn evolve(&self, init: &Configuration, steps: usize) -> Result<Vec<Configuration>> {
        let mut rows = Vec::with_capacity(steps + 1);
        rows.push(init.clone());
        for _ in 0..steps {
            let next = self.step(rows.last().expect("non-empty"))?;
            rows.push(next);
        }
        Ok(rows)
    }
}

impl LocalRule for Lut {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn radius(&self) -> usize {
        self.radius
    }
}

/// Convenience constructor mirroring [`Lut::new`].
pub fn make_lut(outputs: Vec<StateId>, n_states: usize, radius: usize) -> Result<Lut> {
    Lut::new(outputs, n_states, radius)
}

pub(crate) fn check_config(rule: &impl LocalRule, config: &Configuration) -> Result<()> {
    if rule.n_states() != config.n_states() {
        return Err(Error::Domain(format!(
            "rule has {} states, configuration has {}",
            rule.n_states(),
            config.n_states()
        )));
    }
    if rule.window_len() > config.len() {
        return Err(Error::Domain(format!(
            "rule window {} does not fit in {} cells",
            rule.window_len(),
            config.len()
        )));
    }
    Ok(())
}

/// Probabilistic lookup table (stochastic matrix), stored row per neighborhood.
///
/// Row `k - 1` is the distribution of the next state given neighborhood `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Plut {
    n_states: usize,
    radius: usize,
    probs: Vec<f64>,
}

impl Plut {
    /// Validates rows against the simplex constraints with tolerance `tol`.
    pub fn from_rows(rows: &[Vec<f64>], n_states: usize, radius: usize, tol: f64) -> Result<Self> {
        let expected = table_rows(n_states, 2 * radius + 1)?;
        if rows.len() != expected {
            return Err(Error::Validation(format!(
                "pLUT needs {expected} rows for N={n_states}, r={radius}, got {}",
                rows.len()
            )));
        }
        let mut probs = Vec::with_capacity(expected * n_states);
        for (k, row) in rows.iter().enumerate() {
            check_row(row, n_states, tol).map_err(|fault| Error::InvalidRow { row: k + 1, fault })?;
            probs.extend_from_slice(row);
        }
        Ok(Self {
            n_states,
            radius,
            probs,
        })
    }

    /// Row-major flat storage, `N^R * N` values.
    pub fn from_flat(probs: Vec<f64>, n_states: usize, radius: usize, tol: f64) -> Result<Self> {
        let expected = table_rows(n_states, 2 * radius + 1)?;
        if probs.len() != expected * n_states {
            return Err(Error::Validation(format!(
                "pLUT needs {} values, got {}",
                expected * n_states,
                probs.len()
            )));
        }
        for (k, row) in probs.chunks_exact(n_states).enumerate() {
            check_row(row, n_states, tol).map_err(|fault| Error::InvalidRow { row: k + 1, fault })?;
        }
        Ok(Self {
            n_states,
            radius,
            probs,
        })
    }

    pub(crate) fn from_parts(probs: Vec<f64>, n_states: usize, radius: usize) -> Self {
        debug_assert_eq!(probs.len() % n_states, 0);
        Self {
            n_states,
            radius,
            probs,
        }
    }

    /// Rows drawn independently and uniformly from the simplex.
    pub fn random<R: Rng + ?Sized>(n_states: usize, radius: usize, rng: &mut R) -> Result<Self> {
        let rows = table_rows(n_states, 2 * radius + 1)?;
        let mut probs = Vec::with_capacity(rows * n_states);
        let mut row = vec![0.0; n_states];
        for _ in 0..rows {
            // Normalized unit exponentials are Dirichlet(1, ..., 1).
            for slot in row.iter_mut() {
                let u: f64 = rng.gen();
                *slot = -(1.0 - u).ln();
            }
            let sum: f64 = row.iter().sum();
            probs.extend(row.iter().map(|x| x / sum));
        }
        Ok(Self {
            n_states,
            radius,
            probs,
        })
    }

    /// Distribution for the 0-based neighborhood index `k0`.
    #[inline]
    pub fn row(&self, k0: usize) -> &[f64] {
        &self.probs[k0 * self.n_states..(k0 + 1) * self.n_states]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks_exact(self.n_states)
    }

    pub fn flat(&self) -> &[f64] {
        &self.probs
    }

    /// Entrywise maximum absolute difference; `None` if shapes differ.
    pub fn max_abs_diff(&self, other: &Plut) -> Option<f64> {
        if self.n_states != other.n_states || self.radius != other.radius {
            return None;
        }
        Some(
            self.probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// The equivalent LUT if every row is exactly one-hot.
    pub fn as_lut(&self) -> Option<Lut> {
        let outputs = self
            .rows()
            .map(|row| {
                let mut hot = None;
                for (j, &p) in row.iter().enumerate() {
                    if p == 1.0 && hot.is_none() {
                        hot = Some(j);
                    } else if p != 0.0 {
                        return None;
                    }
                }
                hot.map(|j| StateId::raw(j as u8))
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Lut::from_parts(outputs, self.n_states, self.radius))
    }

    pub fn to_file(&self) -> TableFile {
        TableFile {
            states: self.n_states,
            radius: self.radius,
            rows: self.rows().map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: TableFile = serde_json::from_str(text)?;
        file.to_plut(ROW_SUM_TOLERANCE)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("table serializes")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

impl LocalRule for Plut {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn radius(&self) -> usize {
        self.radius
    }
}

/// Validate raw rows into a [`Plut`]; the stored values are the inputs.
pub fn validate_plut(rows: &[Vec<f64>], n_states: usize, radius: usize, tol: f64) -> Result<Plut> {
    Plut::from_rows(rows, n_states, radius, tol)
}

/// One-hot embedding of a deterministic table.
pub fn lut_to_plut(lut: &Lut) -> Plut {
    let n = lut.n_states;
    let mut probs = vec![0.0; lut.outputs.len() * n];
    for (k, s) in lut.outputs.iter().enumerate() {
        probs[k * n + s.index()] = 1.0;
    }
    Plut::from_parts(probs, n, lut.radius)
}

impl From<&Lut> for Plut {
    fn from(lut: &Lut) -> Self {
        lut_to_plut(lut)
    }
}

/// On-disk table: `{"states": N, "radius": r, "rows": [[p_1, .., p_N], ..]}`
/// with rows ordered by neighborhood index `k = 1..N^R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    pub states: usize,
    pub radius: usize,
    pub rows: Vec<Vec<f64>>,
}

impl TableFile {
    pub fn to_plut(&self, tol: f64) -> Result<Plut> {
        Plut::from_rows(&self.rows, self.states, self.radius, tol)
    }
}

/// How [`config_random`] draws initial states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMode {
    /// Every cell independently uniform over the states.
    Uniform,
    /// Binary only: draw `p ~ U[0, 1]`, then each cell is state 0 with
    /// probability `p`, so every density is equally likely.
    DensityBalanced,
}

/// Random configuration from a seed.
pub fn config_random(
    geometry: Geometry,
    n_states: usize,
    mode: InitMode,
    seed: &RngSeed,
) -> Result<Configuration> {
    config_random_with(geometry, n_states, mode, &mut seed.rng())
}

/// [`config_random`] drawing from an existing generator.
pub fn config_random_with<R: Rng + ?Sized>(
    geometry: Geometry,
    n_states: usize,
    mode: InitMode,
    rng: &mut R,
) -> Result<Configuration> {
    table_rows(n_states, 1)?;
    let states = match mode {
        InitMode::Uniform => (0..geometry.cells())
            .map(|_| StateId::raw(rng.gen_range(0..n_states) as u8))
            .collect(),
        InitMode::DensityBalanced => {
            if n_states != 2 {
                return Err(Error::Unsupported(format!(
                    "density-balanced initial conditions need 2 states, got {n_states}"
                )));
            }
            let p_zero: f64 = rng.gen();
            (0..geometry.cells())
                .map(|_| {
                    if rng.gen::<f64>() < p_zero {
                        StateId::ZERO
                    } else {
                        StateId::ONE
                    }
                })
                .collect()
        }
    };
    Ok(Configuration::from_parts(geometry, n_states, states))
}

/// Binary configuration with exactly `ones` cells in state 1 at random positions.
pub fn config_with_ones<R: Rng + ?Sized>(geometry: Geometry, ones: usize, rng: &mut R) -> Result<Configuration> {
    let m = geometry.cells();
    if ones > m {
        return Err(Error::Domain(format!("{ones} ones do not fit in {m} cells")));
    }
    let mut states = vec![StateId::ZERO; m];
    states[..ones].fill(StateId::ONE);
    // Fisher-Yates.
    for i in (1..m).rev() {
        let j = rng.gen_range(0..=i);
        states.swap(i, j);
    }
    Ok(Configuration::from_parts(geometry, 2, states))
}
