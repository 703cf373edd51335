use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use fraclog_core::kernel::{
    exterior_weight_1d, exterior_weight_2d, pair_weight_1d, pair_weight_2d, radial_tail,
};
use fraclog_core::quadrature::integrate_adaptive;
use fraclog_core::{assemble, build_grid, validate_params, CellBox, DomainSpec, RawParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tanh-sinh rule on `[a, b]`; the integrand receives the point and its
/// distances to both endpoints so endpoint singularities keep full precision.
fn tanh_sinh(a: f64, b: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let h = 1.0 / 128.0;
    let mut sum = 0.0;
    for k in -832i32..=832 {
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        // distance to the nearer endpoint without cancellation
        let near = half * 2.0 / (1.0 + (2.0 * u.abs()).exp());
        if near <= 0.0 {
            continue;
        }
        let (x, da, db) = if u < 0.0 {
            (a + near, near, b - a - near)
        } else {
            (b - near, b - a - near, near)
        };
        sum += w * f(x, da, db);
    }
    sum * half * h
}

/// `int_lo^hi t^-beta dt` computed in the log variable.
fn log_power_integral(lo: f64, hi: f64, beta: f64) -> f64 {
    let g = |v: f64| (v * (1.0 - beta)).exp();
    integrate_adaptive(g, lo.ln(), hi.ln(), 0.0, 1e-13, 500).value
}

fn pair_oracle_1d(a: [f64; 2], b: [f64; 2], beta: f64) -> f64 {
    // requires a to the left of b
    let gap = b[0] - a[1];
    tanh_sinh(a[0], a[1], |x, _, to_right| {
        let lo = gap + to_right;
        let hi = b[1] - x;
        log_power_integral(lo, hi, beta)
    })
}

fn exterior_oracle_1d(cell: [f64; 2], dom: [f64; 2], beta: f64) -> f64 {
    let tail = |d: f64| {
        if d == 0.0 {
            return f64::INFINITY;
        }
        // int_d^inf t^-beta dt truncated where the remainder is below 1e-20
        let v0 = d.ln();
        let v1 = v0 + 50.0 / (beta - 1.0);
        let g = |v: f64| (v * (1.0 - beta)).exp();
        integrate_adaptive(g, v0, v1, 0.0, 1e-13, 500).value
    };
    let left0 = cell[0] - dom[0];
    let right1 = dom[1] - cell[1];
    tanh_sinh(cell[0], cell[1], |_, da, db| tail(left0 + da) + tail(right1 + db))
}

#[test]
fn pair_weight_1d_matches_quadrature_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let beta = rng.random_range(1.05..1.95);
        let a0 = rng.random_range(-1.0..1.0);
        let wa = rng.random_range(0.01..0.5);
        let gap = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..0.5) };
        let wb = rng.random_range(0.01..0.5);
        let a = [a0, a0 + wa];
        let b = [a[1] + gap, a[1] + gap + wb];
        let exact = pair_weight_1d(a, b, beta).unwrap();
        let oracle = pair_oracle_1d(a, b, beta);
        worst = worst.max((exact - oracle).abs() / oracle);
    }
    assert!(worst < 1e-8, "worst relative deviation {worst:e}");
}

#[test]
fn pair_weight_1d_example_and_far_field() {
    let w = pair_weight_1d([0.0, 0.1], [0.2, 0.3], 1.8).unwrap();
    let o = pair_oracle_1d([0.0, 0.1], [0.2, 0.3], 1.8);
    assert!((w - o).abs() < 1e-8 * o);
    let h = 0.01;
    let d = 100.0 * h;
    let far = pair_weight_1d([0.0, h], [d, d + h], 1.8).unwrap();
    assert!((far / (h * h * d.powf(-1.8)) - 1.0).abs() < 1e-3);
}

#[test]
fn exterior_weight_1d_matches_quadrature() {
    for (cell, beta) in [([0.0, 0.1], 1.8), ([0.3, 0.45], 1.5), ([0.9, 1.0], 1.2)] {
        let exact = exterior_weight_1d(cell, [0.0, 1.0], beta).unwrap();
        let oracle = exterior_oracle_1d(cell, [0.0, 1.0], beta);
        assert!((exact - oracle).abs() < 1e-8 * oracle, "{cell:?}: {exact} vs {oracle}");
    }
}

#[test]
fn pair_weight_2d_matches_monte_carlo() {
    let a = CellBox::rect(0.0, 1.0, 0.0, 1.0);
    let b = CellBox::rect(2.0, 3.0, 0.0, 1.0);
    let ps = 0.8;
    let exact = pair_weight_2d(&a, &b, ps).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 1_000_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        let y = [2.0 + rng.random::<f64>(), rng.random::<f64>()];
        let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        let f = r2.powf(-0.5 * (2.0 + ps));
        s1 += f;
        s2 += f * f;
    }
    let mean = s1 / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((exact - mean).abs() < 3.0 * se, "{exact} vs {mean} +- {se}");
}

#[test]
fn pair_weight_2d_touching_cells_converge_under_refinement() {
    // splitting each cell into four children must reproduce the parent weight
    let a = CellBox::rect(0.0, 1.0, 0.0, 1.0);
    let b = CellBox::rect(1.0, 2.0, 0.0, 1.0);
    let ps = 0.7;
    let parent = pair_weight_2d(&a, &b, ps).unwrap();
    let kids = |c: &CellBox| {
        let mx = 0.5 * (c.lo[0] + c.hi[0]);
        let my = 0.5 * (c.lo[1] + c.hi[1]);
        vec![
            CellBox::rect(c.lo[0], mx, c.lo[1], my),
            CellBox::rect(c.lo[0], mx, my, c.hi[1]),
            CellBox::rect(mx, c.hi[0], c.lo[1], my),
            CellBox::rect(mx, c.hi[0], my, c.hi[1]),
        ]
    };
    let mut sum = 0.0;
    for ka in kids(&a) {
        for kb in kids(&b) {
            sum += pair_weight_2d(&ka, &kb, ps).unwrap();
        }
    }
    assert!((sum - parent).abs() < 1e-9 * parent, "{sum} vs {parent}");
}

#[test]
fn exterior_weight_2d_matches_monte_carlo_for_interior_cell() {
    let dom = DomainSpec::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
    let cell = CellBox::rect(0.25, 0.5, 0.25, 0.5);
    let ps = 0.8;
    let exact = exterior_weight_2d(&cell, &dom, ps).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 1_000_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    let area = 0.0625;
    for _ in 0..n {
        let x = [0.25 + 0.25 * rng.random::<f64>(), 0.25 + 0.25 * rng.random::<f64>()];
        let r0 = dom.distance_to_complement(x);
        // Pareto radius with density proportional to r^-(1+ps) on [r0, inf)
        let u: f64 = rng.random();
        let r = r0 * (1.0 - u).powf(-1.0 / ps);
        let th = 2.0 * PI * rng.random::<f64>();
        let y = [x[0] + r * th.cos(), x[1] + r * th.sin()];
        let outside = !(0.0..=1.0).contains(&y[0]) || !(0.0..=1.0).contains(&y[1]);
        let f = if outside { area * radial_tail(2, r0, ps) } else { 0.0 };
        s1 += f;
        s2 += f * f;
    }
    let mean = s1 / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((exact - mean).abs() < 3.0 * se, "{exact} vs {mean} +- {se}");
}

#[test]
fn exterior_weight_2d_rotation_invariant_and_larger_at_boundary() {
    let dom = DomainSpec::Rectangle { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 };
    let grid = Arc::new(build_grid(dom, 5).unwrap());
    let params = validate_params(RawParams { dim: 2, s: 0.4, p: 2.0, q: 1.5, r: 3.0 }).unwrap();
    let kw = assemble(grid.clone(), &params).unwrap();
    let v = kw.v();
    let n = 5;
    let idx = |i: usize, j: usize| i * n + j;
    for i in 0..n {
        for j in 0..n {
            // rotation by a quarter turn maps (i, j) to (j, n-1-i)
            let a = v[idx(i, j)];
            let b = v[idx(j, n - 1 - i)];
            assert!((a - b).abs() < 1e-12 * a, "({i},{j}): {a} vs {b}");
        }
    }
    let center = v[idx(2, 2)];
    for k in 0..grid.len() {
        if grid.boundary_adjacent[k] {
            assert!(v[k] > center);
        }
    }
}

#[test]
fn weights_scale_with_domain_size() {
    let c = 2.5;
    for (dom, dim) in [
        (DomainSpec::Interval { a: 0.0, b: 1.0 }, 1),
        (DomainSpec::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 2.0 }, 2),
    ] {
        let params = validate_params(RawParams { dim, s: 0.35, p: 2.0, q: 1.5, r: 3.0 }).unwrap();
        let g1 = Arc::new(build_grid(dom, 6).unwrap());
        let g2 = Arc::new(build_grid(dom.scaled(c), 6).unwrap());
        let k1 = assemble(g1, &params).unwrap();
        let k2 = assemble(g2, &params).unwrap();
        let factor = c.powf(dim as f64 - params.ps());
        for (a, b) in k1.w_dense().iter().zip(k2.w_dense()) {
            assert!((a * factor - b).abs() <= 1e-9 * b.abs());
        }
        for (a, b) in k1.v().iter().zip(k2.v()) {
            assert!((a * factor - b).abs() <= 1e-9 * b);
        }
    }
}

#[test]
fn row_sums_are_reproducible() {
    let params = validate_params(RawParams { dim: 1, s: 0.4, p: 2.0, q: 1.5, r: 3.0 }).unwrap();
    let grid = Arc::new(build_grid(DomainSpec::Interval { a: 0.0, b: 1.0 }, 700).unwrap());
    let a = assemble(grid.clone(), &params).unwrap();
    let b = assemble(grid, &params).unwrap();
    for i in 0..a.len() {
        let sa: f64 = a.row(i).iter().sum();
        let sb: f64 = b.row(i).iter().sum();
        assert_eq!(sa.to_bits(), sb.to_bits());
    }
}
