//! Exponent tuple of the logistic problem and its admissibility rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unvalidated exponent tuple as read from a config file or the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawParams {
    pub dim: i64,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

/// Validated `(N, s, p, q, r)` together with the critical exponent `Np/(N - ps)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dim: usize,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub p_star: f64,
}

/// Diffusion regime, decided by the principal exponent `q` against `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Sub,
    Equi,
    Super,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Sub => "sub",
            Regime::Equi => "equi",
            Regime::Super => "super",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sub" => Ok(Regime::Sub),
            "equi" => Ok(Regime::Equi),
            "super" => Ok(Regime::Super),
            other => Err(Error::InvalidParams {
                constraint: format!("unknown regime {other:?} (expected sub, equi or super)"),
            }),
        }
    }
}

fn reject(constraint: impl Into<String>) -> Error {
    Error::InvalidParams {
        constraint: constraint.into(),
    }
}

pub fn validate_params(raw: RawParams) -> Result<ProblemParams> {
    let RawParams { dim, s, p, q, r } = raw;
    if dim != 1 && dim != 2 {
        return Err(reject(format!("N must be 1 or 2 (got {dim})")));
    }
    for (name, v) in [("s", s), ("p", p), ("q", q), ("r", r)] {
        if !v.is_finite() {
            return Err(reject(format!("{name} must be finite (got {v})")));
        }
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(reject(format!("s must lie in (0,1) (got {s})")));
    }
    if p < 2.0 {
        return Err(reject(format!("p >= 2 required (got {p})")));
    }
    let n = dim as f64;
    let ps = p * s;
    if ps >= n {
        return Err(reject(format!("ps >= N (ps = {ps}, N = {dim})")));
    }
    let p_star = n * p / (n - ps);
    // values within rounding of the critical exponent count as critical
    let subcritical = r < p_star * (1.0 - 8.0 * f64::EPSILON);
    if !(1.0 < q && q < r && subcritical) {
        return Err(reject(format!(
            "1 < q < r < p_star violated (q = {q}, r = {r}, p_star = {p_star})"
        )));
    }
    Ok(ProblemParams {
        dim: dim as usize,
        s,
        p,
        q,
        r,
        p_star,
    })
}

impl ProblemParams {
    pub fn ps(&self) -> f64 {
        self.p * self.s
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            dim: self.dim as i64,
            s: self.s,
            p: self.p,
            q: self.q,
            r: self.r,
        }
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self)
    }
}

pub fn classify_regime(params: &ProblemParams) -> Regime {
    if params.q < params.p {
        Regime::Sub
    } else if params.q == params.p {
        Regime::Equi
    } else {
        Regime::Super
    }
}
