use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(p, q, b)` with `1 ≤ p ≤ q < ∞`, `n/q + 1 − n/p ≥ 0` and
/// `b = p (n/q + 1 − n/p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevTriple {
    pub p: f64,
    pub q: f64,
    pub b: f64,
    pub n: usize,
}

pub fn validate_triple(p: f64, q: f64, n: usize) -> Result<SobolevTriple> {
    if n != 2 {
        return Err(Error::Unsupported(format!("dimension {n}; only n = 2 is implemented")));
    }
    let reject = |reason: &str| Error::NotASobolevTriple { p, q, n, reason: reason.into() };
    if !(p.is_finite() && q.is_finite()) {
        return Err(reject("exponents must be finite"));
    }
    if p < 1.0 {
        return Err(reject("p < 1"));
    }
    if p > q {
        return Err(reject("p > q"));
    }
    let nf = n as f64;
    let s = nf / q + 1.0 - nf / p;
    if s < -1e-12 {
        return Err(reject("n/q + 1 - n/p < 0"));
    }
    Ok(SobolevTriple { p, q, b: p * s.max(0.0), n })
}

impl SobolevTriple {
    /// Sobolev conjugate `np/(n−p)`, infinite for `p ≥ n`.
    pub fn p_star(&self) -> f64 {
        let n = self.n as f64;
        if self.p < n {
            n * self.p / (n - self.p)
        } else {
            f64::INFINITY
        }
    }

    /// Hölder conjugate `p/(p−1)`.
    pub fn p_conjugate(&self) -> f64 {
        if self.p == 1.0 {
            f64::INFINITY
        } else {
            self.p / (self.p - 1.0)
        }
    }

    pub fn exponents(&self) -> Exponents {
        Exponents { p: self.p, q: self.q, b: self.b, sobolev_triple: true }
    }
}

/// Exponents of a Poincaré quotient. Built from a [`SobolevTriple`] or, for
/// solver diagnostics only, from arbitrary values (flagged in reports).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
    pub b: f64,
    pub sobolev_triple: bool,
}

impl Exponents {
    pub fn diagnostic(p: f64, q: f64, b: f64) -> Result<Self> {
        if !(p >= 1.0 && q >= 1.0 && b >= 0.0) || !(p.is_finite() && q.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("exponents p={p}, q={q}, b={b}")));
        }
        Ok(Self { p, q, b, sobolev_triple: false })
    }
}

impl From<SobolevTriple> for Exponents {
    fn from(t: SobolevTriple) -> Self {
        t.exponents()
    }
}
