//! Gauss-Legendre and adaptive Gauss-Kronrod rules used by the 2D kernel weights.

use std::f64::consts::PI;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }

    /// Tensor-product rule over `[x0,x1] x [y0,y1]`.
    pub fn integrate_rect(
        &self,
        (x0, x1): (f64, f64),
        (y0, y1): (f64, f64),
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> f64 {
        let hx = 0.5 * (x1 - x0);
        let hy = 0.5 * (y1 - y0);
        let mx = 0.5 * (x0 + x1);
        let my = 0.5 * (y0 + y1);
        let mut sum = 0.0;
        for (xi, wi) in self.nodes.iter().zip(&self.weights) {
            let x = mx + hx * xi;
            let mut row = 0.0;
            for (yj, wj) in self.nodes.iter().zip(&self.weights) {
                row += wj * f(x, my + hy * yj);
            }
            sum += wi * row;
        }
        sum * hx * hy
    }
}

/// Value and derivative of the Legendre polynomial of the given degree.
fn legendre(degree: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=degree {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = degree as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Clone, Copy, Debug)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Globally adaptive Gauss-Kronrod (7/15) integration.
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate drops below `max(abs_tol, rel_tol * |value|)` or `max_intervals` is hit.
pub fn integrate_adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Integral {
    if a == b {
        return Integral {
            value: 0.0,
            error: 0.0,
            converged: true,
        };
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let value: f64 = pieces.iter().map(|p| p.2).sum();
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Integral {
                value,
                error,
                converged: true,
            };
        }
        if pieces.len() >= max_intervals {
            return Integral {
                value,
                error,
                converged: false,
            };
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted at machine precision
            return Integral {
                value,
                error,
                converged: false,
            };
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

/// Tensor Gauss rule on a rectangle, recursively split into quadrants until the
/// parent and children estimates agree.
pub fn integrate_rect_adaptive(
    rule: &GaussLegendre,
    f: &mut impl FnMut(f64, f64) -> f64,
    x: (f64, f64),
    y: (f64, f64),
    rel_tol: f64,
    abs_tol: f64,
    max_depth: usize,
) -> Integral {
    let coarse = rule.integrate_rect(x, y, &mut *f);
    rect_recurse(rule, f, x, y, coarse, rel_tol, abs_tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn rect_recurse(
    rule: &GaussLegendre,
    f: &mut impl FnMut(f64, f64) -> f64,
    x: (f64, f64),
    y: (f64, f64),
    coarse: f64,
    rel_tol: f64,
    abs_tol: f64,
    depth: usize,
) -> Integral {
    let xm = 0.5 * (x.0 + x.1);
    let ym = 0.5 * (y.0 + y.1);
    let quads = [
        ((x.0, xm), (y.0, ym)),
        ((x.0, xm), (ym, y.1)),
        ((xm, x.1), (y.0, ym)),
        ((xm, x.1), (ym, y.1)),
    ];
    let parts: Vec<f64> = quads
        .iter()
        .map(|&(qx, qy)| rule.integrate_rect(qx, qy, &mut *f))
        .collect();
    let fine: f64 = parts.iter().sum();
    let diff = (fine - coarse).abs();
    if diff <= abs_tol.max(rel_tol * fine.abs()) {
        return Integral {
            value: fine,
            error: diff,
            converged: true,
        };
    }
    if depth == 0 {
        return Integral {
            value: fine,
            error: diff,
            converged: false,
        };
    }
    let mut total = Integral {
        value: 0.0,
        error: 0.0,
        converged: true,
    };
    for (&(qx, qy), &part) in quads.iter().zip(&parts) {
        let sub = rect_recurse(rule, f, qx, qy, part, rel_tol, abs_tol / 4.0, depth - 1);
        total.value += sub.value;
        total.error += sub.error;
        total.converged &= sub.converged;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let rule = GaussLegendre::new(6);
        // exact up to degree 11
        let v = rule.integrate(0.0, 2.0, |x| x.powi(11) - 3.0 * x.powi(4));
        let exact = 2f64.powi(12) / 12.0 - 3.0 * 2f64.powi(5) / 5.0;
        assert!((v - exact).abs() < 1e-11 * exact.abs());
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // int_0^1 x^{-0.8} dx = 5
        let r = integrate_adaptive(|x| x.powf(-0.8), 0.0, 1.0, 1e-12, 1e-10, 2000);
        assert!(r.converged);
        assert!((r.value - 5.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn rect_adaptive_smooth() {
        let rule = GaussLegendre::new(6);
        let mut f = |x: f64, y: f64| (x * y).exp();
        let r = integrate_rect_adaptive(&rule, &mut f, (0.0, 1.0), (0.0, 1.0), 1e-12, 0.0, 6);
        // sum_k 1/(k! (k+1)^2)
        let mut exact = 0.0;
        let mut fact = 1.0;
        for k in 0..30 {
            if k > 0 {
                fact *= k as f64;
            }
            exact += 1.0 / (fact * ((k + 1) as f64).powi(2));
        }
        assert!(r.converged);
        assert!((r.value - exact).abs() < 1e-12);
    }
}
