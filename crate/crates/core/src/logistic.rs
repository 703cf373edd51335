//! Logistic reaction `lambda (t+)^(q-1) - (t+)^(r-1)`, its energy functional and truncations.

use crate::error::{Error, Result};
use crate::kernel::KernelWeights;
use crate::operator::{check_weights, energy_of, operator_into, DiscreteFunction};
use crate::params::ProblemParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticParams {
    pub lambda: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl LogisticParams {
    pub fn new(lambda: f64, params: &ProblemParams) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParams {
                constraint: format!("lambda must be positive and finite (lambda = {lambda})"),
            });
        }
        Ok(LogisticParams {
            lambda,
            p: params.p,
            q: params.q,
            r: params.r,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParams {
                constraint: format!("lambda must be positive and finite (lambda = {lambda})"),
            });
        }
        Ok(LogisticParams { lambda, ..*self })
    }

    /// Positive zero of the reaction, `lambda^(1/(r-q))`.
    pub fn reaction_root(&self) -> f64 {
        self.lambda.powf(1.0 / (self.r - self.q))
    }
}

pub fn reaction(lp: &LogisticParams, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        lp.lambda * t.powf(lp.q - 1.0) - t.powf(lp.r - 1.0)
    }
}

pub fn reaction_primitive(lp: &LogisticParams, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        lp.lambda * t.powf(lp.q) / lp.q - t.powf(lp.r) / lp.r
    }
}

pub(crate) fn phi_energy_of(kw: &KernelWeights, lp: &LogisticParams, u: &[f64]) -> f64 {
    let measures = &kw.grid().measures;
    let reaction_part: f64 = u
        .iter()
        .zip(measures)
        .map(|(&x, m)| reaction_primitive(lp, x) * m)
        .sum();
    energy_of(kw, u, lp.p) / lp.p - reaction_part
}

pub(crate) fn phi_grad_into(kw: &KernelWeights, lp: &LogisticParams, u: &[f64], out: &mut [f64]) {
    operator_into(kw, u, lp.p, out);
    for (o, &x) in out.iter_mut().zip(u) {
        *o -= reaction(lp, x);
    }
}

/// `energy / p - sum_i F(u_i) |C_i|`
pub fn energy_phi(u: &DiscreteFunction, kw: &KernelWeights, lp: &LogisticParams) -> Result<f64> {
    check_weights(u, kw)?;
    Ok(phi_energy_of(kw, lp, u.values()))
}

/// Mass-scaled gradient `(Lu)_i - f(u_i)`.
pub fn grad_phi(u: &DiscreteFunction, kw: &KernelWeights, lp: &LogisticParams) -> Result<DiscreteFunction> {
    check_weights(u, kw)?;
    let mut out = vec![0.0; u.len()];
    phi_grad_into(kw, lp, u.values(), &mut out);
    u.with_values(out)
}

/// The reaction is decreasing relative to `t^(p-1)` exactly when `q <= p`.
pub fn brezis_oswald_applicable(params: &ProblemParams) -> bool {
    params.q <= params.p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncationKind {
    /// Frozen at `f(anchor)` below the anchor.
    Lower,
    /// Growth `lambda anchor^(q-1)` frozen above the anchor.
    Upper,
}

#[derive(Clone, Debug)]
pub struct TruncatedReaction {
    kind: TruncationKind,
    anchor: DiscreteFunction,
    base: LogisticParams,
}

impl TruncatedReaction {
    /// The anchor must be strictly positive on every cell.
    pub fn new(kind: TruncationKind, anchor: DiscreteFunction, base: LogisticParams) -> Result<Self> {
        if let Some((i, &a)) = anchor
            .values()
            .iter()
            .enumerate()
            .find(|(_, &a)| !(a > 0.0 && a.is_finite()))
        {
            return Err(Error::Precondition(format!(
                "truncation anchor must be positive, found {a} at cell {i}"
            )));
        }
        Ok(TruncatedReaction { kind, anchor, base })
    }

    pub fn kind(&self) -> TruncationKind {
        self.kind
    }

    pub fn anchor(&self) -> &DiscreteFunction {
        &self.anchor
    }

    pub fn base(&self) -> &LogisticParams {
        &self.base
    }
}

pub fn truncated_reaction(tr: &TruncatedReaction, i: usize, t: f64) -> f64 {
    let lp = &tr.base;
    let a = tr.anchor.values()[i];
    match tr.kind {
        TruncationKind::Lower => reaction(lp, t.max(a)),
        TruncationKind::Upper => {
            if t <= a {
                reaction(lp, t)
            } else {
                lp.lambda * a.powf(lp.q - 1.0) - t.powf(lp.r - 1.0)
            }
        }
    }
}

/// Primitive in `t` of the truncated reaction, zero at `t = 0`.
pub fn truncated_primitive(tr: &TruncatedReaction, i: usize, t: f64) -> f64 {
    let lp = &tr.base;
    let a = tr.anchor.values()[i];
    match tr.kind {
        TruncationKind::Lower => {
            let fa = reaction(lp, a);
            if t <= a {
                fa * t
            } else {
                fa * a + reaction_primitive(lp, t) - reaction_primitive(lp, a)
            }
        }
        TruncationKind::Upper => {
            if t <= a {
                reaction_primitive(lp, t)
            } else {
                reaction_primitive(lp, a) + lp.lambda * a.powf(lp.q - 1.0) * (t - a)
                    - (t.powf(lp.r) - a.powf(lp.r)) / lp.r
            }
        }
    }
}

pub(crate) fn truncated_energy_of(kw: &KernelWeights, tr: &TruncatedReaction, u: &[f64]) -> f64 {
    let measures = &kw.grid().measures;
    let reaction_part: f64 = u
        .iter()
        .enumerate()
        .map(|(i, &x)| truncated_primitive(tr, i, x) * measures[i])
        .sum();
    energy_of(kw, u, tr.base.p) / tr.base.p - reaction_part
}

pub(crate) fn truncated_grad_into(kw: &KernelWeights, tr: &TruncatedReaction, u: &[f64], out: &mut [f64]) {
    operator_into(kw, u, tr.base.p, out);
    for (i, (o, &x)) in out.iter_mut().zip(u).enumerate() {
        *o -= truncated_reaction(tr, i, x);
    }
}

pub fn truncated_energy(u: &DiscreteFunction, kw: &KernelWeights, tr: &TruncatedReaction) -> Result<f64> {
    check_weights(u, kw)?;
    u.ensure_same_grid(&tr.anchor)?;
    Ok(truncated_energy_of(kw, tr, u.values()))
}

pub fn truncated_grad(u: &DiscreteFunction, kw: &KernelWeights, tr: &TruncatedReaction) -> Result<DiscreteFunction> {
    check_weights(u, kw)?;
    u.ensure_same_grid(&tr.anchor)?;
    let mut out = vec![0.0; u.len()];
    truncated_grad_into(kw, tr, u.values(), &mut out);
    u.with_values(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, DomainSpec};
    use crate::kernel::assemble;
    use crate::params::{validate_params, RawParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn lp(lambda: f64, p: f64, q: f64, r: f64) -> LogisticParams {
        LogisticParams { lambda, p, q, r }
    }

    fn setup(q: f64, r: f64) -> (KernelWeights, ProblemParams) {
        let params = validate_params(RawParams { dim: 1, s: 0.4, p: 2.0, q, r }).unwrap();
        let grid = Arc::new(build_grid(DomainSpec::Interval { a: 0.0, b: 1.0 }, 20).unwrap());
        (assemble(grid, &params).unwrap(), params)
    }

    #[test]
    fn reaction_examples() {
        assert_eq!(reaction(&lp(3.0, 2.0, 1.5, 3.0), -5.0), 0.0);
        assert_eq!(reaction(&lp(2.0, 2.0, 2.0, 3.0), 1.0), 1.0);
        let l = lp(4.0, 2.0, 2.0, 4.0);
        assert!((l.reaction_root() - 2.0).abs() < 1e-15);
        assert!(reaction(&l, 2.0).abs() < 1e-14);
        assert_eq!(reaction_primitive(&l, -1.0), 0.0);
        assert!((reaction_primitive(&lp(1.0, 2.0, 2.0, 4.0), 1.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn primitive_differentiates_to_reaction() {
        let l = lp(1.7, 2.0, 1.5, 3.2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let t: f64 = rng.random_range(0.01..3.0);
            let h = 1e-6;
            let fd = (reaction_primitive(&l, t + h) - reaction_primitive(&l, t - h)) / (2.0 * h);
            assert!((fd - reaction(&l, t)).abs() < 1e-6 * (1.0 + reaction(&l, t).abs()));
        }
    }

    #[test]
    fn brezis_oswald_cases() {
        let (_, sub) = setup(1.5, 3.0);
        let (_, equi) = setup(2.0, 3.0);
        let (_, sup) = setup(3.0, 4.0);
        assert!(brezis_oswald_applicable(&sub));
        assert!(brezis_oswald_applicable(&equi));
        assert!(!brezis_oswald_applicable(&sup));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (kw, params) = setup(3.0, 4.0);
        let base = LogisticParams::new(12.0, &params).unwrap();
        let g = kw.grid().clone();
        let u = DiscreteFunction::from_fn(g.clone(), |x| 0.5 + x[0] * (1.0 - x[0]));
        let anchor = DiscreteFunction::from_fn(g.clone(), |x| 0.6 + 0.3 * (5.0 * x[0]).sin());
        let lower = TruncatedReaction::new(TruncationKind::Lower, anchor.clone(), base).unwrap();
        let upper = TruncatedReaction::new(TruncationKind::Upper, anchor, base).unwrap();
        let cases: Vec<(Box<dyn Fn(&[f64]) -> f64>, Vec<f64>)> = vec![
            (Box::new(|v: &[f64]| phi_energy_of(&kw, &base, v)), grad_phi(&u, &kw, &base).unwrap().into_values()),
            (
                Box::new(|v: &[f64]| truncated_energy_of(&kw, &lower, v)),
                truncated_grad(&u, &kw, &lower).unwrap().into_values(),
            ),
            (
                Box::new(|v: &[f64]| truncated_energy_of(&kw, &upper, v)),
                truncated_grad(&u, &kw, &upper).unwrap().into_values(),
            ),
        ];
        for (energy, grad) in cases {
            for i in [0, 7, 19] {
                let h = 1e-6;
                let mut a = u.values().to_vec();
                let mut b = a.clone();
                a[i] += h;
                b[i] -= h;
                let fd = (energy(&a) - energy(&b)) / (2.0 * h) / g.measures[i];
                assert!((fd - grad[i]).abs() <= 1e-5 * grad[i].abs().max(1.0), "{fd} vs {}", grad[i]);
            }
        }
    }

    #[test]
    fn truncations_agree_at_the_knee_and_upper_is_dominated() {
        let (kw, params) = setup(3.0, 4.0);
        let base = LogisticParams::new(9.0, &params).unwrap();
        let g = kw.grid().clone();
        let anchor = DiscreteFunction::from_fn(g.clone(), |x| 0.2 + x[0]);
        let lower = TruncatedReaction::new(TruncationKind::Lower, anchor.clone(), base).unwrap();
        let upper = TruncatedReaction::new(TruncationKind::Upper, anchor.clone(), base).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..g.len() {
            let a = anchor.values()[i];
            assert_eq!(truncated_reaction(&lower, i, a), reaction(&base, a));
            assert_eq!(truncated_reaction(&upper, i, a), reaction(&base, a));
            let t = rng.random_range(0.0..a);
            assert_eq!(truncated_reaction(&upper, i, t), reaction(&base, t));
        }
        for _ in 0..100 {
            let i = rng.random_range(0..g.len());
            let t = anchor.values()[i] + rng.random_range(0.0..3.0);
            assert!(truncated_reaction(&upper, i, t) <= reaction(&base, t));
        }
        let z = DiscreteFunction::zeros(g.clone());
        assert_eq!(truncated_energy(&z, &kw, &upper).unwrap(), 0.0);
        for _ in 0..100 {
            let u = DiscreteFunction::new(g.clone(), (0..g.len()).map(|_| rng.random_range(0.0..2.5)).collect()).unwrap();
            assert!(truncated_energy(&u, &kw, &upper).unwrap() >= energy_phi(&u, &kw, &base).unwrap() - 1e-12);
        }
    }

    #[test]
    fn anchor_must_be_positive() {
        let (kw, params) = setup(3.0, 4.0);
        let base = LogisticParams::new(9.0, &params).unwrap();
        let z = DiscreteFunction::zeros(kw.grid().clone());
        assert!(TruncatedReaction::new(TruncationKind::Lower, z, base).is_err());
        assert!(LogisticParams::new(0.0, &params).is_err());
    }
}
