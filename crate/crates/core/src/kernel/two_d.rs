//! Pair and exterior weights for axis-aligned cells in the plane.
//!
//! A pair weight is rewritten over the difference vector `z = y - x` as
//! `int |z|^-(2+ps) wx(z1) wy(z2) dz`, where `wx`, `wy` are the 1D overlap
//! lengths. Both are piecewise linear, so the plane splits into rectangles on
//! which the weight is bilinear. Rectangles with a corner at the origin are
//! integrated radially in closed form, the rest by adaptive tensor Gauss.
//!
//! The exterior indicator of a rectangle is the sum of its four outer
//! half-planes minus its four corner quadrants.

use std::f64::consts::{FRAC_PI_2, PI};

use statrs::function::beta::{beta, beta_reg};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{CellBox, DomainSpec};
use crate::quadrature::{integrate_adaptive, integrate_rect_adaptive, GaussLegendre};

const REL_TOL: f64 = 1e-11;
const MAX_DEPTH: usize = 14;
const MAX_INTERVALS: usize = 400;
const RULE_ORDER: usize = 8;

/// Segment of a piecewise linear overlap function.
#[derive(Clone, Copy, Debug)]
struct Piece {
    t0: f64,
    t1: f64,
    w0: f64,
    w1: f64,
}

impl Piece {
    fn at(&self, t: f64) -> f64 {
        self.w0 + (self.w1 - self.w0) * (t - self.t0) / (self.t1 - self.t0)
    }
}

fn overlap(a: [f64; 2], b: [f64; 2], z: f64) -> f64 {
    (a[1].min(b[1] - z) - a[0].max(b[0] - z)).max(0.0)
}

/// Linear pieces of `z -> |A ∩ (B - z)|`, always broken at `z = 0`.
fn overlap_pieces(a: [f64; 2], b: [f64; 2]) -> Vec<Piece> {
    let lo = b[0] - a[1];
    let hi = b[1] - a[0];
    let mut cuts = vec![lo, b[0] - a[0], b[1] - a[1], hi];
    if lo < 0.0 && hi > 0.0 {
        cuts.push(0.0);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| Piece {
            t0: w[0],
            t1: w[1],
            w0: overlap(a, b, w[0]),
            w1: overlap(a, b, w[1]),
        })
        .collect()
}

/// `int_A int_B |x - y|^-(2+ps) dy dx` for cells with disjoint interiors.
pub fn pair_weight_2d(a: &CellBox, b: &CellBox, ps: f64) -> Result<f64> {
    if !(ps > 0.0 && ps < 2.0) {
        return Err(Error::Precondition(format!("ps = {ps} outside (0, 2)")));
    }
    let ax = [a.lo[0], a.hi[0]];
    let ay = [a.lo[1], a.hi[1]];
    let bx = [b.lo[0], b.hi[0]];
    let by = [b.lo[1], b.hi[1]];
    let ox = ax[1].min(bx[1]) - ax[0].max(bx[0]);
    let oy = ay[1].min(by[1]) - ay[0].max(by[0]);
    if ox > 0.0 && oy > 0.0 {
        return Err(Error::CellOverlap(format!("{a:?} and {b:?}")));
    }
    let px = overlap_pieces(ax, bx);
    let py = overlap_pieces(ay, by);
    let rule = GaussLegendre::new(RULE_ORDER);
    let gamma_exp = 2.0 + ps;
    let mut total = 0.0;
    for x in &px {
        for y in &py {
            let at_origin_x = x.t0 == 0.0 || x.t1 == 0.0;
            let at_origin_y = y.t0 == 0.0 || y.t1 == 0.0;
            let part = if at_origin_x && at_origin_y {
                corner_piece(x, y, ps).map_err(|e| match e {
                    Error::Divergent(msg) => {
                        Error::Divergent(format!("cells {a:?} and {b:?}: {msg}"))
                    }
                    other => other,
                })?
            } else {
                let mut f = |u: f64, v: f64| {
                    let r2 = u * u + v * v;
                    r2.powf(-0.5 * gamma_exp) * x.at(u) * y.at(v)
                };
                let r = integrate_rect_adaptive(
                    &rule,
                    &mut f,
                    (x.t0, x.t1),
                    (y.t0, y.t1),
                    REL_TOL,
                    0.0,
                    MAX_DEPTH,
                );
                if !r.converged {
                    return Err(Error::Quadrature {
                        pair: format!("{a:?} and {b:?}"),
                        last_change: r.error,
                    });
                }
                r.value
            };
            total += part;
        }
    }
    Ok(total)
}

/// Linear factor `c0 + c1 t` of a piece read outward from its zero end.
fn outward(p: &Piece) -> (f64, f64, f64) {
    if p.t0 == 0.0 {
        let len = p.t1;
        (p.w0, (p.w1 - p.w0) / len, len)
    } else {
        let len = -p.t0;
        (p.w1, (p.w0 - p.w1) / len, len)
    }
}

fn corner_piece(x: &Piece, y: &Piece, ps: f64) -> Result<f64> {
    let (c0, c1, xl) = outward(x);
    let (d0, d1, yl) = outward(y);
    let scale = (xl * yl).max(f64::MIN_POSITIVE);
    if (c0 * d0).abs() > 1e-14 * scale {
        return Err(Error::CellOverlap(
            "overlap density is positive at zero separation".into(),
        ));
    }
    let linear = c1 * d0 != 0.0 || c0 * d1 != 0.0;
    if linear && ps >= 1.0 {
        return Err(Error::Divergent(format!(
            "edge-adjacent cells have infinite interaction for ps = {ps} >= 1"
        )));
    }
    let theta_c = yl.atan2(xl);
    let radial = |theta: f64, r: f64| {
        let (s, c) = theta.sin_cos();
        let a1 = c1 * d0 * c + c0 * d1 * s;
        let a2 = c1 * d1 * c * s;
        let mut v = a2 * r.powf(2.0 - ps) / (2.0 - ps);
        if linear {
            v += a1 * r.powf(1.0 - ps) / (1.0 - ps);
        }
        v
    };
    let lo = integrate_adaptive(
        |t| radial(t, xl / t.cos()),
        0.0,
        theta_c,
        0.0,
        1e-13,
        MAX_INTERVALS,
    );
    let hi = integrate_adaptive(
        |t| radial(t, yl / t.sin()),
        theta_c,
        FRAC_PI_2,
        0.0,
        1e-13,
        MAX_INTERVALS,
    );
    if !(lo.converged && hi.converged) {
        return Err(Error::Quadrature {
            pair: "corner piece".into(),
            last_change: lo.error + hi.error,
        });
    }
    Ok(lo.value + hi.value)
}

/// `int_{|y| > R} |y|^-(N+ps) dy`.
pub fn radial_tail(dim: usize, radius: f64, ps: f64) -> f64 {
    let sphere = if dim == 1 { 2.0 } else { 2.0 * PI };
    sphere * radius.powf(-ps) / ps
}

/// `int_{y_1 < 0} |x - y|^-(2+ps) dy` at distance `d` from the line is `B d^-ps / ps`.
pub fn half_plane_constant(ps: f64) -> f64 {
    PI.sqrt() * gamma(0.5 * (1.0 + ps)) / gamma(1.0 + 0.5 * ps)
}

/// `int_0^phi sin(t)^ps dt` for `phi` in `[0, pi/2]`.
fn sin_power_integral(phi: f64, ps: f64) -> f64 {
    if phi <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * (1.0 + ps);
    let x = phi.sin().powi(2).min(1.0);
    0.5 * beta(a, 0.5) * beta_reg(a, 0.5, x)
}

/// Kernel integrated over the quadrant `{u > d1, v > d2}` seen from the origin.
pub fn quadrant_integral(d1: f64, d2: f64, ps: f64) -> f64 {
    let phi_c = d2.atan2(d1);
    let mut v = 0.0;
    if d2 > 0.0 {
        v += d2.powf(-ps) * sin_power_integral(phi_c, ps);
    }
    if d1 > 0.0 {
        v += d1.powf(-ps) * sin_power_integral(FRAC_PI_2 - phi_c, ps);
    }
    v / ps
}

/// `int_lo^hi t^e dt` for `0 <= lo < hi`.
fn power_integral(lo: f64, hi: f64, e: f64) -> Result<f64> {
    if e == -1.0 {
        if lo == 0.0 {
            return Err(Error::Divergent("log singularity at the boundary".into()));
        }
        return Ok((hi / lo).ln());
    }
    if lo == 0.0 && e <= -1.0 {
        return Err(Error::Divergent(format!(
            "t^{e} is not integrable at the boundary"
        )));
    }
    Ok((hi.powf(e + 1.0) - lo.powf(e + 1.0)) / (e + 1.0))
}

/// `int_cell int_{R^2 \ Omega} |x - y|^-(2+ps) dy dx` for a cell inside a rectangle.
pub fn exterior_weight_2d(cell: &CellBox, domain: &DomainSpec, ps: f64) -> Result<f64> {
    let DomainSpec::Rectangle { x0, x1, y0, y1 } = *domain else {
        return Err(Error::InvalidDomain("planar weights need a rectangle".into()));
    };
    if !(ps > 0.0 && ps < 2.0) {
        return Err(Error::Precondition(format!("ps = {ps} outside (0, 2)")));
    }
    let [cx0, cy0] = cell.lo;
    let [cx1, cy1] = cell.hi;
    if !(x0 <= cx0 && cx0 < cx1 && cx1 <= x1 && y0 <= cy0 && cy0 < cy1 && cy1 <= y1) {
        return Err(Error::Precondition(format!(
            "cell {cell:?} is not inside the domain {domain:?}"
        )));
    }
    let hx = cx1 - cx0;
    let hy = cy1 - cy0;
    let e = -ps;
    let sides = hy * power_integral(cx0 - x0, cx1 - x0, e)?
        + hy * power_integral(x1 - cx1, x1 - cx0, e)?
        + hx * power_integral(cy0 - y0, cy1 - y0, e)?
        + hx * power_integral(y1 - cy1, y1 - cy0, e)?;
    let sides = sides * half_plane_constant(ps) / ps;

    let rule = GaussLegendre::new(RULE_ORDER);
    let mut corners = 0.0;
    for (kx, ky) in [(x0, y0), (x0, y1), (x1, y0), (x1, y1)] {
        let u = ordered((cx0 - kx).abs(), (cx1 - kx).abs());
        let v = ordered((cy0 - ky).abs(), (cy1 - ky).abs());
        corners += quadrant_over_cell(&rule, u, v, ps, cell)?;
    }
    Ok(sides - corners)
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn quadrant_over_cell(
    rule: &GaussLegendre,
    u: (f64, f64),
    v: (f64, f64),
    ps: f64,
    cell: &CellBox,
) -> Result<f64> {
    if u.0 == 0.0 && v.0 == 0.0 {
        // homogeneous of degree -ps around the corner
        let theta_c = v.1.atan2(u.1);
        let g = |t: f64, r: f64| {
            let (s, c) = t.sin_cos();
            quadrant_integral(c, s, ps) * r.powf(2.0 - ps) / (2.0 - ps)
        };
        let lo = integrate_adaptive(|t| g(t, u.1 / t.cos()), 0.0, theta_c, 0.0, 1e-13, MAX_INTERVALS);
        let hi = integrate_adaptive(
            |t| g(t, v.1 / t.sin()),
            theta_c,
            FRAC_PI_2,
            0.0,
            1e-13,
            MAX_INTERVALS,
        );
        if !(lo.converged && hi.converged) {
            return Err(Error::Quadrature {
                pair: format!("exterior corner of {cell:?}"),
                last_change: lo.error + hi.error,
            });
        }
        return Ok(lo.value + hi.value);
    }
    let mut f = |a: f64, b: f64| quadrant_integral(a, b, ps);
    let r = integrate_rect_adaptive(rule, &mut f, u, v, REL_TOL, 0.0, MAX_DEPTH);
    if !r.converged {
        return Err(Error::Quadrature {
            pair: format!("exterior of {cell:?}"),
            last_change: r.error,
        });
    }
    Ok(r.value)
}
