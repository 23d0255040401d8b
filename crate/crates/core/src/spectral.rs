//! Exact-enumeration spectral analysis of reversible kernels.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::chain::{self, check_detailed_balance, StationaryDistribution, TransitionKernel};
use crate::eigen::{symmetric_eigen, DenseMatrix};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Eigenvalues must lie in `[-1 - tol, 1 + tol]`.
pub const RANGE_TOL: f64 = 1e-9;
/// Largest accepted `||S v - lambda v||_2`.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// `lambda_0` must equal 1 to within this.
pub const TOP_TOL: f64 = 1e-9;
/// Slack applied to `lambda_min` in every bound comparison.
pub const LAMBDA_MIN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    pub max_residual: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lambda_1: f64,
    pub lambda_min: f64,
    pub lambda_star: f64,
    pub relaxation_time_star: f64,
    /// `1 / (1 + lambda_min)`; `+inf` when `lambda_min <= -1 + 1e-12`.
    #[serde(with = "crate::report::extended_f64")]
    pub gap_upper_inverse: f64,
}

/// `S[x][y] = sqrt(pi(x) / pi(y)) p(x,y)`, similar to `P` under detailed balance.
pub fn symmetrize(kernel: &TransitionKernel, pi: &StationaryDistribution) -> Result<DenseMatrix> {
    chain::check_dims(kernel, pi)?;
    let balance = check_detailed_balance(kernel, pi);
    if let Some((x, y)) = balance.worst_violation {
        return Err(Error::NotReversible(x, y));
    }
    let n = kernel.len();
    let mut s = DenseMatrix::zeros(n);
    let uniform = pi.is_uniform();
    for (x, y, p) in kernel.transitions() {
        let value = if uniform || x == y {
            rational::to_f64(p)
        } else {
            let ratio = pi.get(x) / pi.get(y);
            rational::to_f64(&ratio).sqrt() * rational::to_f64(p)
        };
        s.set(x, y, value);
    }
    Ok(s)
}

/// Full spectrum of a reversible ergodic kernel.
pub fn eigenvalues(
    kernel: &TransitionKernel,
    pi: &StationaryDistribution,
    max_states: usize,
) -> Result<Spectrum> {
    if kernel.len() > max_states {
        return Err(Error::CapExceeded { cap: max_states });
    }
    let s = symmetrize(kernel, pi)?;
    spectrum_of_symmetric(&s)
}

/// Eigenvalues of an already symmetrised stochastic matrix, with the range,
/// residual and top-eigenvalue checks applied.
pub fn spectrum_of_symmetric(s: &DenseMatrix) -> Result<Spectrum> {
    let eig = symmetric_eigen(s)?;
    let max_residual = eig.max_residual(s);
    if max_residual > RESIDUAL_TOL {
        return Err(Error::Residual {
            residual: max_residual,
            tolerance: RESIDUAL_TOL,
        });
    }
    let mut values = eig.values;
    values.sort_by(|a, b| b.total_cmp(a));
    if let Some(bad) = values.iter().find(|v| v.abs() > 1.0 + RANGE_TOL) {
        return Err(Error::Numerical(format!("eigenvalue {bad} outside [-1, 1]")));
    }
    if (values[0] - 1.0).abs() > TOP_TOL {
        return Err(Error::Numerical(format!(
            "top eigenvalue {} differs from 1",
            values[0]
        )));
    }
    Ok(Spectrum {
        eigenvalues: values,
        max_residual,
    })
}

pub fn summarize(spectrum: &Spectrum) -> Result<SpectralSummary> {
    if spectrum.len() < 2 {
        return Err(Error::Precondition(
            "spectral summary needs at least two states".into(),
        ));
    }
    let lambda_1 = spectrum.eigenvalues[1];
    let lambda_min = spectrum.lambda_min();
    let lambda_star = lambda_1.max(lambda_min.abs());
    let gap_upper_inverse = if lambda_min <= -1.0 + 1e-12 {
        f64::INFINITY
    } else {
        1.0 / (1.0 + lambda_min)
    };
    Ok(SpectralSummary {
        lambda_1,
        lambda_min,
        lambda_star,
        relaxation_time_star: 1.0 / (1.0 - lambda_star),
        gap_upper_inverse,
    })
}

/// `(I + P) / 2`, exactly.
pub fn lazy_transform(kernel: &TransitionKernel) -> TransitionKernel {
    let half = rational::ratio(1, 2);
    let rows = (0..kernel.len())
        .map(|x| {
            let mut row: Vec<(usize, Rational)> = kernel
                .row(x)
                .iter()
                .map(|(y, p)| (*y, p * &half))
                .collect();
            match row.binary_search_by_key(&x, |(y, _)| *y) {
                Ok(i) => row[i].1 += &half,
                Err(i) => row.insert(i, (x, half.clone())),
            }
            row
        })
        .collect();
    TransitionKernel::new(rows).expect("lazy transform of a valid kernel is valid")
}

/// Spectral mixing-time bound `(1 - lambda*)^-1 ln(1 / (eps pi_min))`.
pub fn mixing_time_bound(
    summary: &SpectralSummary,
    pi: &StationaryDistribution,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Precondition(format!("epsilon {epsilon} not in (0,1)")));
    }
    if summary.lambda_star >= 1.0 - 1e-12 {
        return Err(Error::Precondition(
            "lambda* is 1 to within 1e-12; the bound is vacuous".into(),
        ));
    }
    let pi_min = pi.min();
    // ln(1/(eps pi_min)) = -ln(eps) - ln(pi_min); ln of the rational directly
    // keeps tiny pi_min finite.
    let ln_pi_min = ln_rational(pi_min);
    Ok((-epsilon.ln() - ln_pi_min) / (1.0 - summary.lambda_star))
}

fn ln_rational(value: &Rational) -> f64 {
    let direct = rational::to_f64(value);
    if direct > 0.0 && direct.is_finite() {
        return direct.ln();
    }
    let num = value.numer().to_f64().unwrap_or(f64::MAX);
    let den = value.denom().to_f64().unwrap_or(f64::MAX);
    num.ln() - den.ln()
}
