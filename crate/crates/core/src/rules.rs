//! Named rule families: Wolfram-numbered ECAs, radius widening,
//! alpha-asynchronous updating, the C3 density classifier and the
//! two-parameter totalistic family.
//!
//! State index 0 is the binary state 0 (basis vector `e_1`) and index 1 is
//! state 1 (`e_2`).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::{digits0, lut_to_plut, table_rows, LocalRule, Lut, Plut, StateId};

/// Wolfram rule number of an elementary CA.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(transparent)]
pub struct EcaNumber(u8);

impl EcaNumber {
    pub fn new(value: u32) -> Result<Self> {
        u8::try_from(value)
            .map(EcaNumber)
            .map_err(|_| Error::Domain(format!("ECA number {value} is outside 0..=255")))
    }

    pub const fn value(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = EcaNumber> {
        (0..=255u8).map(EcaNumber)
    }
}

impl From<u8> for EcaNumber {
    fn from(v: u8) -> Self {
        EcaNumber(v)
    }
}

impl fmt::Display for EcaNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bit `b` of the rule number is the output for the neighborhood whose
/// binary value is `b`.
pub fn eca_lut(n: EcaNumber) -> Lut {
    let outputs = (0..8)
        .map(|b| StateId::raw((n.0 >> b) & 1))
        .collect();
    Lut::from_parts(outputs, 2, 1)
}

pub fn lut_number(lut: &Lut) -> Result<EcaNumber> {
    if lut.n_states() != 2 || lut.radius() != 1 {
        return Err(Error::Unsupported(format!(
            "ECA numbers need N=2, r=1; got N={}, r={}",
            lut.n_states(),
            lut.radius()
        )));
    }
    let value = lut
        .outputs()
        .iter()
        .enumerate()
        .fold(0u8, |acc, (b, s)| acc | ((s.index() as u8) << b));
    Ok(EcaNumber(value))
}

/// Rules that can be re-expressed with a larger radius.
pub trait Widen: LocalRule + Sized {
    /// Equivalent rule of radius `radius` that ignores the extra outer cells.
    fn widen_radius(&self, radius: usize) -> Result<Self>;
}

/// For each neighborhood of the wider window, the 0-based index of its
/// centered sub-window in the narrower table.
fn sub_window_map(n_states: usize, old_radius: usize, new_radius: usize) -> Result<Vec<usize>> {
    if new_radius < old_radius {
        return Err(Error::Domain(format!(
            "cannot shrink radius from {old_radius} to {new_radius}"
        )));
    }
    let new_window = 2 * new_radius + 1;
    let old_window = 2 * old_radius + 1;
    let rows = table_rows(n_states, new_window)?;
    let skip = new_radius - old_radius;
    let mut digits = vec![0; new_window];
    Ok((0..rows)
        .map(|k| {
            digits0(k, n_states, &mut digits);
            digits[skip..skip + old_window]
                .iter()
                .fold(0, |acc, &d| acc * n_states + d)
        })
        .collect())
}

impl Widen for Lut {
    fn widen_radius(&self, radius: usize) -> Result<Self> {
        let map = sub_window_map(self.n_states(), self.radius(), radius)?;
        let outputs = map.into_iter().map(|k| self.output(k)).collect();
        Ok(Lut::from_parts(outputs, self.n_states(), radius))
    }
}

impl Widen for Plut {
    fn widen_radius(&self, radius: usize) -> Result<Self> {
        let map = sub_window_map(self.n_states(), self.radius(), radius)?;
        let mut probs = Vec::with_capacity(map.len() * self.n_states());
        for k in map {
            probs.extend_from_slice(self.row(k));
        }
        Ok(Plut::from_parts(probs, self.n_states(), radius))
    }
}

/// Free-function form of [`Widen::widen_radius`].
pub fn widen_radius<T: Widen>(rule: &T, radius: usize) -> Result<T> {
    rule.widen_radius(radius)
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

/// Alpha-asynchronous variant of `base`: with probability `alpha` a cell
/// applies the base rule, otherwise it keeps its state.
pub fn alpha_async_plut(base: &Lut, alpha: f64) -> Result<Plut> {
    check_probability("alpha", alpha)?;
    let n = base.n_states();
    let center_weight = n.pow(base.radius() as u32);
    let mut probs = vec![0.0; base.table_rows() * n];
    for k in 0..base.table_rows() {
        let center = (k / center_weight) % n;
        let row = &mut probs[k * n..(k + 1) * n];
        row[base.output(k).index()] += alpha;
        row[center] += 1.0 - alpha;
    }
    Ok(Plut::from_parts(probs, n, base.radius()))
}

/// The C3 density classifier. Probability of state 1 for neighborhoods
/// `111, 110, 101, 100, 011, 010, 001, 000` is
/// `1, eta, 1, 1 - eta, 1, 0, 0, 0`.
pub fn c3_plut(eta: f64) -> Result<Plut> {
    check_probability("eta", eta)?;
    // Indexed by the neighborhood's binary value.
    let rows: [[f64; 2]; 8] = [
        [1.0, 0.0],
        [1.0, 0.0],
        [1.0, 0.0],
        [0.0, 1.0],
        [eta, 1.0 - eta],
        [0.0, 1.0],
        [1.0 - eta, eta],
        [0.0, 1.0],
    ];
    Ok(Plut::from_parts(rows.concat(), 2, 1))
}

/// Parameters of the binary radius-1 totalistic family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TotalisticParams {
    p1: f64,
    p2: f64,
}

impl TotalisticParams {
    /// `p1`: probability of state 1 with exactly one 1 in the neighborhood;
    /// `p2`: the same with exactly two.
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        check_probability("p1", p1)?;
        check_probability("p2", p2)?;
        Ok(Self { p1, p2 })
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }
}

/// Totalistic SCA: `000 -> 0`, one 1 -> `p1`, two 1s -> `p2`, `111 -> 1`.
pub fn totalistic_plut(params: TotalisticParams) -> Plut {
    let mut probs = Vec::with_capacity(16);
    for k in 0..8u32 {
        let row = match k.count_ones() {
            0 => [1.0, 0.0],
            1 => [1.0 - params.p1, params.p1],
            2 => [1.0 - params.p2, params.p2],
            _ => [0.0, 1.0],
        };
        probs.extend_from_slice(&row);
    }
    Plut::from_parts(probs, 2, 1)
}

/// Textual rule specifier used on the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum RuleSpec {
    /// `eca:<n>`
    Eca(EcaNumber),
    /// `aaca:<n>:<alpha>`
    AlphaAsync(EcaNumber, f64),
    /// `c3:<eta>`
    C3(f64),
    /// `totalistic:<p1>:<p2>`
    Totalistic(f64, f64),
    /// `file:<path>` to a JSON table
    File(PathBuf),
}

impl RuleSpec {
    pub fn to_plut(&self) -> Result<Plut> {
        match self {
            RuleSpec::Eca(n) => Ok(lut_to_plut(&eca_lut(*n))),
            RuleSpec::AlphaAsync(n, alpha) => alpha_async_plut(&eca_lut(*n), *alpha),
            RuleSpec::C3(eta) => c3_plut(*eta),
            RuleSpec::Totalistic(p1, p2) => Ok(totalistic_plut(TotalisticParams::new(*p1, *p2)?)),
            RuleSpec::File(path) => Plut::read(path),
        }
    }
}

impl FromStr for RuleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("unrecognized rule specifier '{s}'"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        let eca = |t: &str| {
            t.parse::<u32>()
                .map_err(|_| bad())
                .and_then(EcaNumber::new)
        };
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        if kind == "file" {
            return Ok(RuleSpec::File(PathBuf::from(rest)));
        }
        let parts: Vec<&str> = rest.split(':').collect();
        let spec = match (kind, parts.as_slice()) {
            ("eca", [n]) => RuleSpec::Eca(eca(n)?),
            ("aaca", [n, a]) => RuleSpec::AlphaAsync(eca(n)?, num(a)?),
            ("c3", [eta]) => RuleSpec::C3(num(eta)?),
            ("totalistic", [p1, p2]) => RuleSpec::Totalistic(num(p1)?, num(p2)?),
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleSpec::Eca(n) => write!(f, "eca:{n}"),
            RuleSpec::AlphaAsync(n, a) => write!(f, "aaca:{n}:{a}"),
            RuleSpec::C3(eta) => write!(f, "c3:{eta}"),
            RuleSpec::Totalistic(p1, p2) => write!(f, "totalistic:{p1}:{p2}"),
            RuleSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}
