//! Composite tensor-product Gauss-Legendre quadrature on rectangles.

use std::f64::consts::PI;

use crate::fiber::{Point, Rect};

/// Nodes and weights of the `order`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        if 2 * i + 1 == n {
            x = 0.0;
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Integrates `f` over `rect` split into `cells × cells` sub-rectangles, each
/// with an `order × order` Gauss-Legendre rule.
pub fn integrate<E>(
    rect: &Rect,
    order: usize,
    cells: usize,
    mut f: impl FnMut(Point) -> Result<f64, E>,
) -> Result<f64, E> {
    let (nodes, weights) = gauss_legendre(order);
    let hx = rect.width() / cells as f64;
    let hy = rect.height() / cells as f64;
    let mut total = 0.0;
    for i in 0..cells {
        let cx = rect.x.0 + hx * (i as f64 + 0.5);
        for j in 0..cells {
            let cy = rect.y.0 + hy * (j as f64 + 0.5);
            let mut cell = 0.0;
            for (a, wa) in nodes.iter().zip(&weights) {
                for (b, wb) in nodes.iter().zip(&weights) {
                    let p = Point::new(cx + 0.5 * hx * a, cy + 0.5 * hy * b);
                    cell += wa * wb * f(p)?;
                }
            }
            total += cell * 0.25 * hx * hy;
        }
    }
    Ok(total)
}

/// Value on the refined `2·cells` grid and `|I(2c) − I(c)|` as its error
/// estimate.
pub fn integrate_with_estimate<E>(
    rect: &Rect,
    order: usize,
    cells: usize,
    mut f: impl FnMut(Point) -> Result<f64, E>,
) -> Result<(f64, f64), E> {
    let coarse = integrate(rect, order, cells, &mut f)?;
    let fine = integrate(rect, order, 2 * cells, &mut f)?;
    Ok((fine, (fine - coarse).abs()))
}
