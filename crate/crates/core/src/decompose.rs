//! Greedy decomposition of a probabilistic lookup table into a convex
//! combination of deterministic lookup tables.
//!
//! Starting from `P^0 = P`, each round takes
//!
//! ```text
//! alpha_m = min_k max_j P^{m-1}[k][j]
//! L^m[k]  = lowest j attaining max_j P^{m-1}[k][j]
//! P^m     = P^{m-1} - alpha_m * L^m
//! ```
//!
//! until the residual vanishes. The first coefficient is the largest weight
//! any deterministic component can carry in any convex decomposition of `P`.
//!
//! The loop runs in exact fixed-point arithmetic: every entry is read as its
//! shortest round-trip decimal expansion and scaled by `10^30`. Subtractions
//! and comparisons are then exact, so printed decimal inputs give the
//! decimal coefficients one would get by hand. The loop stops when the
//! residual is zero or some row is exhausted; the latter leaves only the
//! rounding differences between row sums.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{check_row, LocalRule, Lut, Plut, StateId, ROW_SUM_TOLERANCE};
use crate::rules::lut_number;

const SCALE_DIGITS: i32 = 30;
const SCALE: i128 = 10i128.pow(SCALE_DIGITS as u32);

/// `x * 10^30` from the shortest decimal representation of `x`, rounded
/// half-to-even beyond 30 fractional digits.
fn to_fixed(x: f64) -> i128 {
    debug_assert!(x.is_finite() && (0.0..=1.0).contains(&x));
    let text = format!("{x:e}");
    let (mantissa, exp) = text.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let value: i128 = digits.parse().expect("digits");
    let shift = SCALE_DIGITS + 1 + exp - digits.len() as i32;
    if shift >= 0 {
        value * 10i128.pow(shift as u32)
    } else if -shift > 38 {
        0
    } else {
        let div = 10i128.pow((-shift) as u32);
        let (q, r) = (value / div, value % div);
        match (2 * r).cmp(&div) {
            std::cmp::Ordering::Greater => q + 1,
            std::cmp::Ordering::Equal => q + (q & 1),
            std::cmp::Ordering::Less => q,
        }
    }
}

/// Nearest `f64` to `v / 10^30`.
fn from_fixed(v: i128) -> f64 {
    let sign = if v < 0 { "-" } else { "" };
    let a = v.unsigned_abs();
    let scale = SCALE as u128;
    format!("{sign}{}.{:030}", a / scale, a % scale)
        .parse()
        .expect("decimal literal")
}

/// Which maximal entry a row contributes when several tie.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Lowest state index (the defining choice).
    #[default]
    Lowest,
    /// Highest state index; only useful to check that coefficients do not
    /// depend on the tie-break.
    Highest,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub alpha: f64,
    pub lut: Lut,
}

/// Ordered list of `(alpha, LUT)` pairs sharing `N` and the radius.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    n_states: usize,
    radius: usize,
    components: Vec<Component>,
}

impl Decomposition {
    /// Checks only that the components are non-empty and share a shape.
    pub fn from_components(components: Vec<(f64, Lut)>) -> Result<Self> {
        let (_, first) = components
            .first()
            .ok_or_else(|| Error::Domain("a decomposition needs at least one component".into()))?;
        let (n_states, radius) = (first.n_states(), first.radius());
        if components
            .iter()
            .any(|(_, l)| l.n_states() != n_states || l.radius() != radius)
        {
            return Err(Error::Domain("components differ in N or radius".into()));
        }
        Ok(Self {
            n_states,
            radius,
            components: components
                .into_iter()
                .map(|(alpha, lut)| Component { alpha, lut })
                .collect(),
        })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.alpha).collect()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// `(alpha, lut)` pairs, e.g. for [`crate::sca::mixture_step`].
    pub fn to_pairs(&self) -> Vec<(f64, Lut)> {
        self.components
            .iter()
            .map(|c| (c.alpha, c.lut.clone()))
            .collect()
    }

    /// JSON records `{alpha, lut, eca_number}`; `eca_number` only for N=2, r=1.
    pub fn to_records(&self) -> Vec<ComponentRecord> {
        self.components
            .iter()
            .map(|c| ComponentRecord {
                alpha: c.alpha,
                lut: c.lut.output_indices(),
                eca_number: lut_number(&c.lut).ok().map(|n| n.value()),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentRecord {
    pub alpha: f64,
    pub lut: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eca_number: Option<u8>,
}

/// One round on a general row-stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixStep {
    pub alpha: f64,
    /// Selected column per row.
    pub selection: Vec<usize>,
    /// Residual after this round, row-major.
    pub residual: Vec<f64>,
    /// Entries of the residual that are exactly zero.
    pub zeros: usize,
}

/// Greedy loop on any row-stochastic matrix given row-major with `width`
/// columns. Rows need not number `N^R`.
pub fn greedy_matrix(flat: &[f64], width: usize, tie: TieBreak) -> Result<Vec<MatrixStep>> {
    if width == 0 || flat.is_empty() || !flat.len().is_multiple_of(width) {
        return Err(Error::Validation(format!(
            "{} values do not form rows of width {width}",
            flat.len()
        )));
    }
    for (k, row) in flat.chunks_exact(width).enumerate() {
        check_row(row, width, ROW_SUM_TOLERANCE).map_err(|fault| Error::InvalidRow { row: k + 1, fault })?;
    }
    let rows = flat.len() / width;
    let mut residual: Vec<i128> = flat.iter().map(|&x| to_fixed(x)).collect();
    let max_rounds = flat.len();
    let mut steps = Vec::new();
    let mut choice = vec![0usize; rows];
    loop {
        if residual.iter().all(|&x| x == 0) {
            break;
        }
        if steps.len() == max_rounds {
            return Err(Error::Internal(format!(
                "greedy decomposition did not finish within {max_rounds} rounds"
            )));
        }
        let mut alpha = i128::MAX;
        for (k, row) in residual.chunks_exact(width).enumerate() {
            let top = row.iter().copied().max().unwrap_or(0);
            let mut at_top = (0..width).filter(|&j| row[j] == top);
            let best = match tie {
                TieBreak::Lowest => at_top.next(),
                TieBreak::Highest => at_top.next_back(),
            }
            .unwrap_or(0);
            choice[k] = best;
            alpha = alpha.min(row[best]);
        }
        if alpha == 0 {
            // Some row is exhausted while others are not, which happens when
            // row sums differ; what is left cannot be covered by a further
            // deterministic component.
            let left = residual
                .chunks_exact(width)
                .map(|row| row.iter().sum::<i128>())
                .max()
                .unwrap_or(0);
            if from_fixed(left) > 2.0 * ROW_SUM_TOLERANCE {
                return Err(Error::Internal(format!(
                    "greedy decomposition stalled with residual {}",
                    from_fixed(left)
                )));
            }
            break;
        }
        for (k, &j) in choice.iter().enumerate() {
            let cell = &mut residual[k * width + j];
            *cell -= alpha;
            if *cell < 0 {
                return Err(Error::Internal(format!(
                    "negative residual {} in row {}",
                    from_fixed(*cell),
                    k + 1
                )));
            }
        }
        steps.push(MatrixStep {
            alpha: from_fixed(alpha),
            selection: choice.clone(),
            residual: residual.iter().map(|&x| from_fixed(x)).collect(),
            zeros: residual.iter().filter(|&&x| x == 0).count(),
        });
    }
    Ok(steps)
}

/// One round of the greedy loop on a pLUT.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyStep {
    pub alpha: f64,
    pub lut: Lut,
    /// Residual `P^m` after this round, row per neighborhood.
    pub residual: Vec<f64>,
    /// Entries of the residual that are exactly zero.
    pub zeros: usize,
}

/// The greedy loop with every intermediate residual.
pub fn greedy_trace(plut: &Plut, tie: TieBreak) -> Result<Vec<GreedyStep>> {
    let n = plut.n_states();
    Ok(greedy_matrix(plut.flat(), n, tie)?
        .into_iter()
        .map(|s| GreedyStep {
            alpha: s.alpha,
            lut: Lut::from_parts(
                s.selection.iter().map(|&j| StateId::raw(j as u8)).collect(),
                n,
                plut.radius(),
            ),
            residual: s.residual,
            zeros: s.zeros,
        })
        .collect())
}

/// Greedy decomposition with lowest-index tie-breaking.
pub fn greedy_decompose(plut: &Plut) -> Result<Decomposition> {
    greedy_decompose_with(plut, TieBreak::Lowest)
}

pub fn greedy_decompose_with(plut: &Plut, tie: TieBreak) -> Result<Decomposition> {
    let steps = greedy_trace(plut, tie)?;
    Ok(Decomposition {
        n_states: plut.n_states(),
        radius: plut.radius(),
        components: steps
            .into_iter()
            .map(|s| Component {
                alpha: s.alpha,
                lut: s.lut,
            })
            .collect(),
    })
}

/// `sum_i alpha_i * L_i` as a table.
pub fn recompose(d: &Decomposition) -> Result<Plut> {
    let n = d.n_states;
    let first = &d.components[0].lut;
    let mut probs = vec![0.0; first.table_rows() * n];
    for c in &d.components {
        if c.lut.radius() != d.radius || c.lut.n_states() != n {
            return Err(Error::Domain("components differ in N or radius".into()));
        }
        for (k, s) in c.lut.outputs().iter().enumerate() {
            probs[k * n + s.index()] += c.alpha;
        }
    }
    Plut::from_flat(probs, n, d.radius, ROW_SUM_TOLERANCE).map_err(|e| match e {
        Error::InvalidRow { row, fault } => Error::Domain(format!(
            "coefficients do not form a convex combination (row {row}: {fault})"
        )),
        other => other,
    })
}

/// The component with the largest possible coefficient.
pub fn dominant_component(plut: &Plut) -> Result<(f64, Lut)> {
    let mut d = greedy_decompose(plut)?;
    let first = d.components.swap_remove(0);
    Ok((first.alpha, first.lut))
}

/// Result of [`decomposition_valid`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Validity {
    pub reasons: Vec<String>,
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        self.reasons.is_empty()
    }
}

/// Checks coefficients, shapes and reconstruction against `plut`.
pub fn decomposition_valid(d: &Decomposition, plut: &Plut, tol: f64) -> Validity {
    let mut reasons = Vec::new();
    for (i, c) in d.components.iter().enumerate() {
        if !(0.0..=1.0).contains(&c.alpha) {
            reasons.push(format!("coefficient {} = {} outside [0, 1]", i + 1, c.alpha));
        }
        if c.lut.n_states() != plut.n_states() || c.lut.radius() != plut.radius() {
            reasons.push(format!("component {} has a different shape", i + 1));
        }
    }
    let total: f64 = d.components.iter().map(|c| c.alpha).sum();
    if (total - 1.0).abs() > tol {
        reasons.push(format!("coefficients sum to {total}"));
    }
    if reasons.is_empty() {
        let n = plut.n_states();
        let mut probs = vec![0.0; plut.flat().len()];
        for c in &d.components {
            for (k, s) in c.lut.outputs().iter().enumerate() {
                probs[k * n + s.index()] += c.alpha;
            }
        }
        let err = probs
            .iter()
            .zip(plut.flat())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if err > tol {
            reasons.push(format!("reconstruction differs by {err}"));
        }
    }
    Validity { reasons }
}
