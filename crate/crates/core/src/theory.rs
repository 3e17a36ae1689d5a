//! Closed-form classification of the parameter space.
//!
//! * [`alpha_star`]: the exponent `alpha*` with `H_p(G_n) = n^(alpha* + o(1))`.
//! * [`in_exceptional_set`]: the set `E_p` of `b` values left open at `gamma = 1`.
//! * [`local_limit_assumption_holds`]: the regimes in which the Gibbs graphs
//!   converge locally to the reference graph on the integers.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::graph::PNorm;

/// Absolute tolerance when a float `b` is compared with an endpoint `(k - 1)/k`.
pub const ENDPOINT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRegime {
    GammaLt1,
    GammaEq1,
    GammaGt1,
}

impl GammaRegime {
    pub fn of(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return domain(format!("gamma must be a positive real, got {gamma}"));
        }
        Ok(if gamma < 1.0 {
            GammaRegime::GammaLt1
        } else if gamma > 1.0 {
            GammaRegime::GammaGt1
        } else {
            GammaRegime::GammaEq1
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaStarResult {
    pub value: f64,
    pub regime: GammaRegime,
    /// For `gamma = 1` and `0 <= b < 1`: the `k` with `(k-1)/k <= b < k/(k+1)`.
    pub critical_k: Option<u64>,
}

/// The `k >= 1` with `(k - 1)/k <= b < k/(k + 1)`, for `0 <= b < 1`.
fn step_index(b: f64) -> u64 {
    debug_assert!((0.0..1.0).contains(&b));
    let mut k = (1.0 / (1.0 - b)).floor().max(1.0) as u64;
    // (k - 1)/k <= b  <=>  k - 1 <= b k
    while k > 1 && (k - 1) as f64 > b * k as f64 {
        k -= 1;
    }
    while k as f64 <= b * (k + 1) as f64 {
        k += 1;
    }
    k
}

pub fn alpha_star(gamma: f64, b: f64) -> Result<AlphaStarResult> {
    let regime = GammaRegime::of(gamma)?;
    if b.is_nan() {
        return domain("b must not be NaN");
    }
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    Ok(match regime {
        GammaRegime::GammaLt1 => AlphaStarResult {
            value: clamp((1.0 - b) / (2.0 - gamma)),
            regime,
            critical_k: None,
        },
        GammaRegime::GammaGt1 => AlphaStarResult {
            value: clamp((gamma - b) / gamma),
            regime,
            critical_k: None,
        },
        GammaRegime::GammaEq1 => {
            if b < 0.0 {
                AlphaStarResult {
                    value: 1.0,
                    regime,
                    critical_k: None,
                }
            } else if b >= 1.0 {
                AlphaStarResult {
                    value: 0.0,
                    regime,
                    critical_k: None,
                }
            } else {
                let k = step_index(b);
                AlphaStarResult {
                    value: 1.0 / (k + 1) as f64,
                    regime,
                    critical_k: Some(k),
                }
            }
        }
    })
}

/// Length of the `k`-th interval of `E_p` (finite `p`), zero when the numerator is not positive.
fn interval_width(p: f64, k: u64) -> f64 {
    let k = k as f64;
    let num = 2.0 * p - (p - 1.0) * k;
    (num / (k * (k + 1.0) * (k + 2.0 * p))).max(0.0)
}

/// Largest `k` whose left endpoint `(k - 1)/k` can lie at or below `b < 1`.
fn k_search_bound(b: f64) -> u64 {
    (1.0 / (1.0 - b)).ceil() as u64 + 2
}

/// Membership of `b` in `E_p`, with endpoint comparisons at [`ENDPOINT_TOLERANCE`].
pub fn in_exceptional_set(p: PNorm, b: f64) -> bool {
    if !(-ENDPOINT_TOLERANCE..1.0).contains(&b) {
        // every interval and every point (k-1)/k lies in [0, 1)
        return false;
    }
    let near = |x: f64| (b - x).abs() <= ENDPOINT_TOLERANCE;
    match p {
        PNorm::Infinity => {
            if b <= 0.25 + ENDPOINT_TOLERANCE {
                return true;
            }
            (2..=k_search_bound(b)).any(|k| near((k - 1) as f64 / k as f64))
        }
        PNorm::Finite(p) => (1..=k_search_bound(b)).any(|k| {
            let left = (k - 1) as f64 / k as f64;
            let right = left + interval_width(p, k);
            b >= left - ENDPOINT_TOLERANCE && b <= right + ENDPOINT_TOLERANCE
        }),
    }
}

/// Membership of a rational `b` in `E_p`. Left endpoints are compared exactly;
/// right endpoints are exact when `p` is an integer.
pub fn in_exceptional_set_exact(p: PNorm, b: Ratio<i64>) -> bool {
    let b = Ratio::new(*b.numer() as i128, *b.denom() as i128);
    let zero = Ratio::from_integer(0i128);
    let one = Ratio::from_integer(1i128);
    if b < zero || b >= one {
        return false;
    }
    let left = |k: i128| Ratio::new(k - 1, k);
    // (k - 1)/k <= b  <=>  k <= 1/(1 - b)
    let k_max = (one / (one - b)).floor().to_integer();
    match p {
        PNorm::Infinity => b <= Ratio::new(1, 4) || (2..=k_max).any(|k| left(k) == b),
        PNorm::Finite(pf) => (1..=k_max).any(|k| {
            let l = left(k);
            if b < l {
                return false;
            }
            if pf.fract() == 0.0 && pf < 1e9 {
                let pi = Ratio::from_integer(pf as i128);
                let kr = Ratio::from_integer(k);
                let two = Ratio::from_integer(2);
                let num = two * pi - (pi - one) * kr;
                let width = if num > zero {
                    num / (kr * (kr + one) * (kr + two * pi))
                } else {
                    zero
                };
                b <= l + width
            } else {
                let bf = *b.numer() as f64 / *b.denom() as f64;
                let right = (k - 1) as f64 / k as f64 + interval_width(pf, k as u64);
                bf <= right + ENDPOINT_TOLERANCE
            }
        }),
    }
}

/// Whether `(gamma, b, p)` is covered by the scaling law for `alpha*`
/// (everything except `gamma = 1` with `b` in `E_p`).
pub fn scaling_law_covers(gamma: f64, b: f64, p: PNorm) -> Result<bool> {
    Ok(match GammaRegime::of(gamma)? {
        GammaRegime::GammaEq1 => !in_exceptional_set(p, b),
        _ => true,
    })
}

/// The three-case hypothesis under which the Gibbs graphs have the reference
/// local limit: `gamma < 1, b < 1`; `gamma = 1, b < 1, b not in E_p`; `gamma > 1, b < 0`.
pub fn local_limit_assumption_holds(gamma: f64, b: f64, p: PNorm) -> Result<bool> {
    Ok(match GammaRegime::of(gamma)? {
        GammaRegime::GammaLt1 => b < 1.0,
        GammaRegime::GammaEq1 => b < 1.0 && !in_exceptional_set(p, b),
        GammaRegime::GammaGt1 => b < 0.0,
    })
}

/// One row of the theory table emitted by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct TheoryRow {
    pub gamma: f64,
    pub b: f64,
    pub p: String,
    /// Empty when the scaling law does not cover the point.
    pub alpha_star: Option<f64>,
    pub in_exceptional_set: bool,
    pub local_limit_assumption: bool,
}

pub fn theory_row(gamma: f64, b: f64, p: PNorm) -> Result<TheoryRow> {
    let covered = scaling_law_covers(gamma, b, p)?;
    Ok(TheoryRow {
        gamma,
        b,
        p: p.to_string(),
        alpha_star: if covered {
            Some(alpha_star(gamma, b)?.value)
        } else {
            None
        },
        in_exceptional_set: in_exceptional_set(p, b),
        local_limit_assumption: local_limit_assumption_holds(gamma, b, p)?,
    })
}
