//! Problem instances and the asymptotic regimes they are drawn from.

use serde::Serialize;

use crate::error::{Error, Result};

/// A group-drawing coupon collector instance: `n` coupon types, each draw is a
/// uniformly random set of `s` distinct coupons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Instance {
    n: u64,
    s: u64,
}

impl Instance {
    pub fn new(n: u64, s: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance {
                n,
                s,
                reason: "n must be positive",
            });
        }
        if s == 0 {
            return Err(Error::InvalidInstance {
                n,
                s,
                reason: "s must be positive",
            });
        }
        if s > n {
            return Err(Error::InvalidInstance {
                n,
                s,
                reason: "s must not exceed n",
            });
        }
        Ok(Instance { n, s })
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn s(&self) -> u64 {
        self.s
    }

    /// Probability that a fixed coupon is missed by one draw, `(n - s) / n`.
    #[inline]
    pub fn miss_probability(&self) -> f64 {
        (self.n - self.s) as f64 / self.n as f64
    }

    /// Smallest possible collection time, `ceil(n / s)`.
    #[inline]
    pub fn min_draws(&self) -> u64 {
        self.n.div_ceil(self.s)
    }

    pub(crate) fn check_uncollected(&self, m: u64) -> Result<()> {
        if m > self.n {
            return Err(Error::InvalidArgument(format!(
                "uncollected count {m} exceeds n = {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// One of the three asymptotic regimes for the package size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum RegimeSpec {
    /// Case I: `s` fixed as `n` grows.
    ConstantS { s: u64 },
    /// Case II: `s = c n`.
    Proportional { c: f64 },
    /// Case III(a): `s = n - lambda n^((t-1)/t)`.
    NearCompleteExact { t: u32, lambda: f64 },
    /// Case III(b): `n - s` strictly between `n^((t-1)/t)` and `n^(t/(t+1))`.
    NearCompleteWindow { t: u32 },
}

impl RegimeSpec {
    pub fn constant_s(s: u64) -> Result<Self> {
        let spec = RegimeSpec::ConstantS { s };
        spec.validate()?;
        Ok(spec)
    }

    pub fn proportional(c: f64) -> Result<Self> {
        let spec = RegimeSpec::Proportional { c };
        spec.validate()?;
        Ok(spec)
    }

    pub fn near_complete(t: u32, lambda: f64) -> Result<Self> {
        let spec = RegimeSpec::NearCompleteExact { t, lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn window(t: u32) -> Result<Self> {
        let spec = RegimeSpec::NearCompleteWindow { t };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RegimeSpec::ConstantS { s } if s < 2 => {
                Err(Error::InvalidArgument(format!("constant-s regime needs s >= 2, got {s}")))
            }
            RegimeSpec::Proportional { c } if !(c > 0.0 && c < 1.0) => {
                Err(Error::InvalidArgument(format!("proportional regime needs 0 < c < 1, got {c}")))
            }
            RegimeSpec::NearCompleteExact { t, lambda } if t < 2 || !lambda.is_finite() || lambda <= 0.0 => {
                Err(Error::InvalidArgument(format!(
                    "near-complete regime needs t >= 2 and lambda > 0, got t = {t}, lambda = {lambda}"
                )))
            }
            RegimeSpec::NearCompleteWindow { t } if t < 2 => {
                Err(Error::InvalidArgument(format!("window regime needs t >= 2, got {t}")))
            }
            _ => Ok(()),
        }
    }

    /// The real-valued package size this regime prescribes for `n`, before
    /// rounding. `None` for the constant-s regime.
    pub fn raw_package_size(&self, n: u64) -> Option<f64> {
        let nf = n as f64;
        match *self {
            RegimeSpec::ConstantS { .. } => None,
            RegimeSpec::Proportional { c } => Some(c * nf),
            RegimeSpec::NearCompleteExact { t, lambda } => {
                Some(nf - lambda * nf.powf((t - 1) as f64 / t as f64))
            }
            RegimeSpec::NearCompleteWindow { t } => Some(nf - nf.powf(window_exponent(t))),
        }
    }

    /// Concrete instance for this regime at `n`.
    ///
    /// Fractional sizes are rounded half-up and clamped to `[1, n - 1]`; a
    /// clamp that moves `s` by more than one is rejected.
    pub fn package_size(&self, n: u64) -> Result<Instance> {
        self.validate()?;
        let raw = match self.raw_package_size(n) {
            None => {
                let RegimeSpec::ConstantS { s } = *self else {
                    unreachable!()
                };
                return Instance::new(n, s);
            }
            Some(raw) => raw,
        };
        if n < 2 {
            return Err(Error::RegimeTooSmall {
                n,
                rounded: raw.floor() as i64,
            });
        }
        let rounded = (raw + 0.5).floor() as i64;
        let clamped = rounded.clamp(1, n as i64 - 1);
        if (clamped - rounded).abs() > 1 {
            return Err(Error::RegimeTooSmall { n, rounded });
        }
        Instance::new(n, clamped as u64)
    }
}

/// Exponent used to place a window-regime instance: midway between
/// `(t-1)/t` and `t/(t+1)`.
pub fn window_exponent(t: u32) -> f64 {
    let t = t as f64;
    0.5 * ((t - 1.0) / t + t / (t + 1.0))
}

/// Integer and fractional parts of `log_d n` with `d = 1 / (1 - c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedIndices {
    pub k: u64,
    pub alpha: f64,
    pub d: f64,
}

/// Series truncation and state pruning budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationControl {
    pub abs_tol: f64,
    pub max_terms: u64,
    pub prune_mass: f64,
}

impl TruncationControl {
    pub fn new(abs_tol: f64, max_terms: u64, prune_mass: f64) -> Result<Self> {
        if abs_tol.is_nan() || abs_tol <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "abs_tol must be positive, got {abs_tol}"
            )));
        }
        if max_terms == 0 {
            return Err(Error::InvalidArgument("max_terms must be positive".into()));
        }
        if !(prune_mass >= 0.0 && prune_mass < abs_tol) {
            return Err(Error::InvalidArgument(format!(
                "prune_mass must lie in [0, abs_tol), got {prune_mass}"
            )));
        }
        Ok(TruncationControl {
            abs_tol,
            max_terms,
            prune_mass,
        })
    }

    /// Tolerance `abs_tol` with no pruning.
    pub fn exact(abs_tol: f64) -> Self {
        Self::new(abs_tol, 50_000_000, 0.0).expect("valid tolerance")
    }

    pub fn with_tol(self, abs_tol: f64) -> Result<Self> {
        Self::new(abs_tol, self.max_terms, self.prune_mass.min(abs_tol * 1e-3))
    }
}

impl Default for TruncationControl {
    fn default() -> Self {
        TruncationControl {
            abs_tol: 1e-10,
            max_terms: 50_000_000,
            prune_mass: 1e-22,
        }
    }
}
