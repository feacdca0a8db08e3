//! Standard states: Bell and maximally entangled pairs, GHZ, product basis
//! states and seeded Haar-random states.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hamiltonian::Spectrum;
use crate::linalg::{c, CMat, CVec};
use crate::qstate::{GroundOverlap, PureState};
use crate::topology::validate_dims;

/// `(|00> + |11>) / sqrt 2`.
pub fn bell() -> PureState {
    max_entangled(2).expect("d = 2 is valid")
}

/// `Σ_j |jj> / sqrt d`.
pub fn max_entangled(d: usize) -> Result<PureState> {
    twisted_pair(d, 0)
}

/// `Σ_j ω^{twist·j} |jj> / sqrt d` with `ω = exp(2πi/d)`. Different twists
/// modulo `d` give mutually orthogonal states with identical one-site
/// marginals.
pub fn twisted_pair(d: usize, twist: usize) -> Result<PureState> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut amps = CVec::zeros(d * d);
    let norm = (d as f64).sqrt();
    for j in 0..d {
        let phase = 2.0 * PI * ((twist * j) % d) as f64 / d as f64;
        amps[j * d + j] = c(phase.cos() / norm, phase.sin() / norm);
    }
    PureState::normalized(vec![d, d], amps)
}

/// `(|0...0> + |1...1>) / sqrt 2` on `n` qubits.
pub fn ghz(n: usize) -> Result<PureState> {
    if n == 0 {
        return Err(Error::InvalidArgument("GHZ needs at least one qubit".into()));
    }
    let dim = 1usize << n;
    let mut amps = CVec::zeros(dim);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    amps[0] = c(h, 0.0);
    amps[dim - 1] = c(h, 0.0);
    PureState::normalized(vec![2; n], amps)
}

/// Product of computational basis states `|digits[0] digits[1] ...>`.
pub fn basis_state(dims: &[usize], digits: &[usize]) -> Result<PureState> {
    validate_dims(dims)?;
    if digits.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} digits for {} subsystems",
            digits.len(),
            dims.len()
        )));
    }
    let mut index = 0usize;
    for (&d, &x) in dims.iter().zip(digits) {
        if x >= d {
            return Err(Error::InvalidArgument(format!("digit {x} out of range for dimension {d}")));
        }
        index = index * d + x;
    }
    let total: usize = dims.iter().product();
    let mut amps = CVec::zeros(total);
    amps[index] = c(1.0, 0.0);
    PureState::new(dims.to_vec(), amps)
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Haar-random pure state; identical seeds give identical amplitudes.
pub fn haar_random(dims: &[usize], seed: u64) -> Result<PureState> {
    validate_dims(dims)?;
    let total: usize = dims.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = CVec::from_fn(total, |_, _| gaussian_complex(&mut rng));
    PureState::normalized(dims.to_vec(), amps)
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix with
/// the phases of `R`'s diagonal absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| gaussian_complex(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let x = r[(j, j)];
        let phase = if x.norm() > 0.0 { x / x.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Textual description of a state, as accepted on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateRecipe {
    /// GHZ on all subsystems (qubits only).
    Ghz,
    /// Maximally entangled pair on the first and last subsystems, `|0>`
    /// elsewhere.
    BellEnds,
    /// As `BellEnds` with phases `ω^j`; orthogonal to it with the same
    /// one-site marginals.
    BellEndsTwisted,
    /// `basis:0,1,0`.
    Basis(Vec<usize>),
    /// `haar:SEED`.
    Haar(u64),
    /// `file:PATH` with a state JSON document.
    File(String),
    /// Projection of `|0...0>` onto the ground space of the Hamiltonian
    /// at hand, or the lowest eigenvector if that projection vanishes.
    Ground,
}

impl FromStr for StateRecipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let parse_err = || Error::Parse(format!("unrecognized state recipe {s:?}"));
        match (head, arg) {
            ("ghz", None) => Ok(StateRecipe::Ghz),
            ("bell-ends", None) => Ok(StateRecipe::BellEnds),
            ("bell-ends-twisted", None) => Ok(StateRecipe::BellEndsTwisted),
            ("ground", None) => Ok(StateRecipe::Ground),
            ("basis", Some(a)) => a
                .split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| parse_err()))
                .collect::<Result<Vec<_>>>()
                .map(StateRecipe::Basis),
            ("haar", Some(a)) => a.trim().parse().map(StateRecipe::Haar).map_err(|_| parse_err()),
            ("file", Some(a)) if !a.is_empty() => Ok(StateRecipe::File(a.to_string())),
            _ => Err(parse_err()),
        }
    }
}

impl StateRecipe {
    /// Builds the state over `dims`. `spectrum` is needed only for
    /// [`StateRecipe::Ground`].
    pub fn build(&self, dims: &[usize], spectrum: Option<&Spectrum>) -> Result<PureState> {
        validate_dims(dims)?;
        let n = dims.len();
        let state = match self {
            StateRecipe::Ghz => {
                if dims.iter().any(|&d| d != 2) {
                    return Err(Error::InvalidArgument("ghz recipe needs qubits".into()));
                }
                ghz(n)?
            }
            StateRecipe::BellEnds | StateRecipe::BellEndsTwisted => {
                if n < 2 || dims[0] != dims[n - 1] {
                    return Err(Error::InvalidArgument(
                        "bell-ends needs equal first and last dimensions".into(),
                    ));
                }
                let twist = usize::from(*self == StateRecipe::BellEndsTwisted);
                let pair = twisted_pair(dims[0], twist)?;
                let middle: Vec<usize> = (1..n - 1).collect();
                let mid_dims: Vec<usize> = middle.iter().map(|&s| dims[s]).collect();
                if middle.is_empty() {
                    pair
                } else {
                    let zero = basis_state(&mid_dims, &vec![0; mid_dims.len()])?;
                    PureState::tensor_placed(dims, &[(&[0, n - 1], &pair), (&middle, &zero)])?
                }
            }
            StateRecipe::Basis(digits) => basis_state(dims, digits)?,
            StateRecipe::Haar(seed) => haar_random(dims, *seed)?,
            StateRecipe::File(path) => {
                let text = std::fs::read_to_string(path)?;
                PureState::from_json(&text)?
            }
            StateRecipe::Ground => {
                let spectrum = spectrum.ok_or_else(|| {
                    Error::InvalidArgument("ground recipe needs a Hamiltonian".into())
                })?;
                let zero = basis_state(dims, &vec![0; n])?;
                match crate::qstate::overlap_with_ground(&zero, spectrum)? {
                    GroundOverlap {
                        projected: Some(p), ..
                    } => p,
                    _ => PureState::normalized(dims.to_vec(), spectrum.eigenvector(0).into_owned())?,
                }
            }
        };
        if state.dims() != dims {
            return Err(Error::DimensionMismatch(format!(
                "state dims {:?}, expected {dims:?}",
                state.dims()
            )));
        }
        Ok(state)
    }
}
