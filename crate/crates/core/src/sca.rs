//! Seeded stochastic simulation.
//!
//! Every step draws exactly one uniform `f64` per cell, in cell order
//! `0..M`, and maps it to a state by inverse CDF over the table row of the
//! cell's neighborhood. For stochastic mixtures the single draw selects the
//! component rule instead. Draw order never depends on parallelism: parallel
//! work is split across independent runs, each with its own derived stream.

use rand::Rng;
use rayon::prelude::*;

use crate::cca::{ContinuousConfiguration, ContinuousTrajectory};
use crate::error::{Error, Result};
use crate::lattice::{
    check_config, neighborhood_indices, Configuration, Geometry, LocalRule, Lut, Plut, StateId,
};
use crate::rng::RngSeed;

/// Tolerance on the sum of mixture coefficients.
pub const MIXTURE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Storage {
    /// Binary rows, 64 cells per word, least significant bit first.
    Packed { words_per_row: usize, words: Vec<u64> },
    /// One byte per cell.
    Bytes(Vec<u8>),
}

/// Rows of discrete configurations, row 0 being the initial one.
///
/// Binary diagrams are bit-packed; unused high bits of the last word of a
/// row are always zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceTimeDiagram {
    geometry: Geometry,
    n_states: usize,
    rows: usize,
    storage: Storage,
}

impl SpaceTimeDiagram {
    pub fn new(init: &Configuration) -> Self {
        let storage = if init.n_states() == 2 {
            Storage::Packed {
                words_per_row: init.len().div_ceil(64),
                words: Vec::new(),
            }
        } else {
            Storage::Bytes(Vec::new())
        };
        let mut d = Self {
            geometry: init.geometry(),
            n_states: init.n_states(),
            rows: 0,
            storage,
        };
        d.push(init);
        d
    }

    pub fn from_rows(rows: &[Configuration]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Validation("a diagram needs at least one row".into()))?;
        let mut d = Self::new(first);
        for row in &rows[1..] {
            if row.geometry().cells() != first.len() || row.n_states() != first.n_states() {
                return Err(Error::Validation("diagram rows disagree in shape".into()));
            }
            d.push(row);
        }
        Ok(d)
    }

    fn push(&mut self, config: &Configuration) {
        match &mut self.storage {
            Storage::Packed { words_per_row, words } => {
                let start = words.len();
                words.resize(start + *words_per_row, 0);
                for (i, s) in config.states().iter().enumerate() {
                    words[start + i / 64] |= (s.index() as u64) << (i % 64);
                }
            }
            Storage::Bytes(bytes) => bytes.extend(config.states().iter().map(|s| s.index() as u8)),
        }
        self.rows += 1;
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

    /// Number of rows, `T + 1`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn get(&self, t: usize, cell: usize) -> StateId {
        assert!(t < self.rows && cell < self.cells(), "diagram index out of range");
        match &self.storage {
            Storage::Packed { words_per_row, words } => {
                let w = words[t * words_per_row + cell / 64];
                StateId::raw(((w >> (cell % 64)) & 1) as u8)
            }
            Storage::Bytes(bytes) => StateId::raw(bytes[t * self.cells() + cell]),
        }
    }

    pub fn row(&self, t: usize) -> Configuration {
        let states = (0..self.cells()).map(|i| self.get(t, i)).collect();
        Configuration::from_parts(self.geometry, self.n_states, states)
    }

    pub fn last_row(&self) -> Configuration {
        self.row(self.rows - 1)
    }

    /// Packed words of row `t` (binary diagrams only).
    pub fn packed_row(&self, t: usize) -> Option<&[u64]> {
        match &self.storage {
            Storage::Packed { words_per_row, words } => {
                Some(&words[t * words_per_row..(t + 1) * words_per_row])
            }
            Storage::Bytes(_) => None,
        }
    }

    /// Number of cells differing between `self` rows `range` and `other`'s.
    pub(crate) fn count_differences(&self, other: &Self, rows: std::ops::Range<usize>) -> usize {
        match (&self.storage, &other.storage) {
            (
                Storage::Packed { words_per_row, words: a },
                Storage::Packed { words: b, .. },
            ) => {
                let span = rows.start * words_per_row..rows.end * words_per_row;
                a[span.clone()]
                    .iter()
                    .zip(&b[span])
                    .map(|(x, y)| (x ^ y).count_ones() as usize)
                    .sum()
            }
            (Storage::Bytes(a), Storage::Bytes(b)) => {
                let m = self.cells();
                let span = rows.start * m..rows.end * m;
                a[span.clone()]
                    .iter()
                    .zip(&b[span])
                    .filter(|(x, y)| x != y)
                    .count()
            }
            _ => unreachable!("diagrams with equal state counts share storage kind"),
        }
    }
}

/// Inverse CDF: first state whose cumulative probability exceeds `u`.
/// If rounding leaves `u` above the total mass, the last state with positive
/// probability is used.
#[inline]
pub(crate) fn sample_row(row: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last_positive = j;
            if u < cum {
                return j;
            }
        }
    }
    last_positive
}

fn step_states<R: Rng + ?Sized>(plut: &Plut, states: &[StateId], rng: &mut R, out: &mut Vec<StateId>) {
    out.clear();
    for k in neighborhood_indices(states, plut.n_states(), plut.radius()) {
        let u: f64 = rng.gen();
        out.push(StateId::raw(sample_row(plut.row(k), u) as u8));
    }
}

/// One stochastic step: every cell samples its next state independently.
pub fn sca_step<R: Rng + ?Sized>(plut: &Plut, config: &Configuration, rng: &mut R) -> Result<Configuration> {
    check_config(plut, config)?;
    let mut out = Vec::with_capacity(config.len());
    step_states(plut, config.states(), rng, &mut out);
    Ok(Configuration::from_parts(config.geometry(), config.n_states(), out))
}

/// Drives repeated stochastic steps, reusing buffers.
struct ScaRunner<'a, R: Rng> {
    plut: &'a Plut,
    states: Vec<StateId>,
    next: Vec<StateId>,
    rng: R,
}

impl<'a, R: Rng> ScaRunner<'a, R> {
    fn new(plut: &'a Plut, init: &Configuration, rng: R) -> Result<Self> {
        check_config(plut, init)?;
        Ok(Self {
            plut,
            states: init.states().to_vec(),
            next: Vec::with_capacity(init.len()),
            rng,
        })
    }

    fn step(&mut self) {
        step_states(self.plut, &self.states, &mut self.rng, &mut self.next);
        std::mem::swap(&mut self.states, &mut self.next);
    }
}

/// `steps` stochastic steps from `init` using the stream of `seed`.
pub fn sca_evolve(plut: &Plut, init: &Configuration, steps: usize, seed: &RngSeed) -> Result<SpaceTimeDiagram> {
    let mut runner = ScaRunner::new(plut, init, seed.rng())?;
    let mut diagram = SpaceTimeDiagram::new(init);
    for _ in 0..steps {
        runner.step();
        diagram.push(&Configuration::from_parts(
            init.geometry(),
            init.n_states(),
            runner.states.clone(),
        ));
    }
    Ok(diagram)
}

/// Run until the configuration is homogeneous or `max_steps` is reached.
/// Returns the number of steps taken and the final homogeneous state, if any.
pub fn sca_run_until_homogeneous<R: Rng>(
    plut: &Plut,
    init: &Configuration,
    max_steps: usize,
    rng: R,
) -> Result<(usize, Option<StateId>)> {
    let mut runner = ScaRunner::new(plut, init, rng)?;
    let homogeneous = |s: &[StateId]| s.iter().all(|&x| x == s[0]).then(|| s[0]);
    let mut t = 0;
    loop {
        if let Some(state) = homogeneous(&runner.states) {
            return Ok((t, Some(state)));
        }
        if t == max_steps {
            return Ok((t, None));
        }
        runner.step();
        t += 1;
    }
}

fn check_mixture(components: &[(f64, Lut)], config: &Configuration) -> Result<()> {
    let (_, first) = components
        .first()
        .ok_or_else(|| Error::Domain("a mixture needs at least one component".into()))?;
    if components
        .iter()
        .any(|(_, l)| l.radius() != first.radius() || l.n_states() != first.n_states())
    {
        return Err(Error::Domain(
            "mixture components must share N and radius; widen them first".into(),
        ));
    }
    if let Some((a, _)) = components.iter().find(|(a, _)| !(0.0..=1.0).contains(a)) {
        return Err(Error::Domain(format!("coefficient {a} is not a probability")));
    }
    let total: f64 = components.iter().map(|(a, _)| a).sum();
    if (total - 1.0).abs() > MIXTURE_TOLERANCE {
        return Err(Error::Domain(format!("coefficients sum to {total}, not 1")));
    }
    check_config(first, config)
}

/// One step of a stochastic mixture: each cell picks a component rule with
/// probability equal to its coefficient and applies it to its window.
pub fn mixture_step<R: Rng + ?Sized>(
    components: &[(f64, Lut)],
    config: &Configuration,
    rng: &mut R,
) -> Result<Configuration> {
    check_mixture(components, config)?;
    let alphas: Vec<f64> = components.iter().map(|(a, _)| *a).collect();
    let first = &components[0].1;
    let states = neighborhood_indices(config.states(), first.n_states(), first.radius())
        .into_iter()
        .map(|k| {
            let u: f64 = rng.gen();
            components[sample_row(&alphas, u)].1.output(k)
        })
        .collect();
    Ok(Configuration::from_parts(config.geometry(), config.n_states(), states))
}

/// Monte-Carlo estimate of the per-cell state distributions at each step,
/// from `samples` independent runs (run `s` uses `seed.derive(s)`).
pub fn estimate_pi(
    plut: &Plut,
    init: &Configuration,
    steps: usize,
    samples: usize,
    seed: &RngSeed,
) -> Result<ContinuousTrajectory> {
    if samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    check_config(plut, init)?;
    let n = init.n_states();
    let m = init.len();
    let width = m * n;
    let counts = (0..samples)
        .into_par_iter()
        .fold(
            || vec![0u32; (steps + 1) * width],
            |mut acc, s| {
                let mut runner =
                    ScaRunner::new(plut, init, seed.derive(s as u64).rng()).expect("checked above");
                for t in 0..=steps {
                    if t > 0 {
                        runner.step();
                    }
                    let base = t * width;
                    for (i, st) in runner.states.iter().enumerate() {
                        acc[base + i * n + st.index()] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u32; (steps + 1) * width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let total = samples as f64;
    let configs = counts
        .chunks_exact(width)
        .map(|c| {
            ContinuousConfiguration::from_parts(
                init.geometry(),
                n,
                c.iter().map(|&x| x as f64 / total).collect(),
            )
        })
        .collect();
    ContinuousTrajectory::new(configs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{config_random, lut_to_plut, InitMode};
    use crate::rules::{alpha_async_plut, c3_plut, eca_lut, totalistic_plut, TotalisticParams};

    fn geom(m: usize) -> Geometry {
        Geometry::new(m, 1).unwrap()
    }

    #[test]
    fn sample_row_inverse_cdf() {
        assert_eq!(sample_row(&[1.0, 0.0], 0.999_999), 0);
        assert_eq!(sample_row(&[0.0, 1.0], 0.0), 1);
        assert_eq!(sample_row(&[0.3, 0.0, 0.7], 0.3), 2);
        // Mass slightly below one: fall back to the last positive state.
        assert_eq!(sample_row(&[0.5, 0.5 - 1e-12, 0.0], 0.999_999_999_999_9), 1);
    }

    #[test]
    fn deterministic_plut_ignores_seed() {
        let lut = eca_lut(30.into());
        let init = config_random(geom(20), 2, InitMode::Uniform, &RngSeed::new(1)).unwrap();
        let expected = lut.step(&init).unwrap();
        for s in 0..5 {
            let got = sca_step(&lut_to_plut(&lut), &init, &mut RngSeed::new(s).rng()).unwrap();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn all_ones_fixed_under_p_zero_totalistic() {
        let p = totalistic_plut(TotalisticParams::new(0.0, 0.0).unwrap());
        let ones = Configuration::homogeneous(geom(12), 2, StateId::ONE).unwrap();
        assert_eq!(sca_step(&p, &ones, &mut RngSeed::new(3).rng()).unwrap(), ones);
    }

    #[test]
    fn c3_eta_frequency() {
        let p = c3_plut(0.1).unwrap();
        // Cell 1 of (1,1,0) sees neighborhood 110.
        let init = Configuration::from_indices(geom(3), 2, &[1, 1, 0]).unwrap();
        let mut rng = RngSeed::new(77).rng();
        let draws = 100_000;
        let ones = (0..draws)
            .filter(|_| sca_step(&p, &init, &mut rng).unwrap().get(1) == StateId::ONE)
            .count();
        let freq = ones as f64 / draws as f64;
        assert!((freq - 0.1).abs() < 0.005, "{freq}");
    }

    #[test]
    fn evolve_reproducible() {
        let p = c3_plut(0.1).unwrap();
        let init = config_random(geom(29), 2, InitMode::Uniform, &RngSeed::new(5)).unwrap();
        let t0 = sca_evolve(&p, &init, 0, &RngSeed::new(1)).unwrap();
        assert_eq!(t0.rows(), 1);
        assert_eq!(t0.row(0), init);
        let a = sca_evolve(&p, &init, 40, &RngSeed::new(1)).unwrap();
        let b = sca_evolve(&p, &init, 40, &RngSeed::new(1)).unwrap();
        assert_eq!(a, b);
        let c = sca_evolve(&p, &init, 40, &RngSeed::new(2)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn alpha_one_equals_deterministic() {
        let base = eca_lut(150.into());
        let init = config_random(geom(31), 2, InitMode::Uniform, &RngSeed::new(8)).unwrap();
        let d = sca_evolve(&alpha_async_plut(&base, 1.0).unwrap(), &init, 20, &RngSeed::new(4)).unwrap();
        let expected = base.evolve(&init, 20).unwrap();
        assert_eq!(d, SpaceTimeDiagram::from_rows(&expected).unwrap());
    }

    #[test]
    fn single_component_mixture() {
        let lut = eca_lut(150.into());
        let init = config_random(geom(25), 2, InitMode::Uniform, &RngSeed::new(9)).unwrap();
        let got = mixture_step(&[(1.0, lut.clone())], &init, &mut RngSeed::new(0).rng()).unwrap();
        assert_eq!(got, lut.step(&init).unwrap());
    }

    #[test]
    fn mixture_validation() {
        let init = config_random(geom(9), 2, InitMode::Uniform, &RngSeed::new(9)).unwrap();
        let mut rng = RngSeed::new(0).rng();
        let a = eca_lut(150.into());
        let b = eca_lut(232.into());
        assert!(mixture_step(&[(0.5, a.clone()), (0.4, b.clone())], &init, &mut rng).is_err());
        let wide = Lut::identity(2, 2).unwrap();
        assert!(mixture_step(&[(0.5, a), (0.5, wide)], &init, &mut rng).is_err());
        assert!(mixture_step(&[], &init, &mut rng).is_err());
    }

    #[test]
    fn multi_state_diagram_storage() {
        let g = geom(7);
        let rows = vec![
            Configuration::from_indices(g, 3, &[0, 1, 2, 0, 1, 2, 0]).unwrap(),
            Configuration::from_indices(g, 3, &[2, 2, 2, 0, 0, 0, 1]).unwrap(),
        ];
        let d = SpaceTimeDiagram::from_rows(&rows).unwrap();
        assert_eq!(d.row(1), rows[1]);
        assert!(d.packed_row(0).is_none());
    }

    #[test]
    fn packed_rows_clear_padding() {
        let g = Geometry::new(70, 1).unwrap();
        let ones = Configuration::homogeneous(g, 2, StateId::ONE).unwrap();
        let d = SpaceTimeDiagram::new(&ones);
        let words = d.packed_row(0).unwrap();
        assert_eq!(words.len(), 2);
        assert_eq!(words[1], (1u64 << 6) - 1);
    }

    #[test]
    fn estimate_deterministic_is_one_hot() {
        let lut = eca_lut(110.into());
        let init = config_random(geom(15), 2, InitMode::Uniform, &RngSeed::new(6)).unwrap();
        let est = estimate_pi(&lut_to_plut(&lut), &init, 8, 13, &RngSeed::new(1)).unwrap();
        let exact = crate::cca::cca_evolve(&lut_to_plut(&lut), &init, 8).unwrap();
        assert_eq!(est, exact);
        assert!(estimate_pi(&lut_to_plut(&lut), &init, 8, 0, &RngSeed::new(1)).is_err());
    }

    #[test]
    fn run_until_homogeneous() {
        let p = c3_plut(0.0).unwrap();
        let ones = Configuration::homogeneous(geom(10), 2, StateId::ONE).unwrap();
        assert_eq!(
            sca_run_until_homogeneous(&p, &ones, 100, RngSeed::new(1).rng()).unwrap(),
            (0, Some(StateId::ONE))
        );
        // ECA 184 conserves density, so a mixed start never homogenizes.
        let mixed = Configuration::from_indices(geom(10), 2, &[1, 0, 1, 0, 1, 0, 1, 0, 1, 1]).unwrap();
        assert_eq!(
            sca_run_until_homogeneous(&p, &mixed, 50, RngSeed::new(1).rng()).unwrap(),
            (50, None)
        );
    }
}
