//! Univariate polynomial roots (Aberth–Ehrlich with Newton polishing) and
//! resultants. Coefficients are in ascending order: `c[0] + c[1] t + ...`.

use num_complex::Complex64;

const MAX_ITERS: usize = 500;

fn horner(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// All complex roots of a polynomial whose leading coefficient is nonzero.
/// Returns `None` for a zero leading coefficient or a constant polynomial.
pub fn roots(coeffs: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = coeffs.len().checked_sub(1)?;
    if n == 0 || coeffs[n].norm() == 0.0 {
        return None;
    }
    let lead = coeffs[n];
    let c: Vec<Complex64> = coeffs.iter().map(|a| a / lead).collect();
    if n == 1 {
        return Some(vec![-c[0]]);
    }
    // Cauchy-type bound for the initial circle
    let radius = c[..n]
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm().powf(1.0 / (n - k) as f64))
        .fold(0.0_f64, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();
    for _ in 0..MAX_ITERS {
        let mut moved = 0.0_f64;
        for i in 0..n {
            let (p, dp) = horner(&c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut repulsion = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let diff = z[i] - z[j];
                    if diff.norm() > 0.0 {
                        repulsion += diff.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - ratio * repulsion;
            let step = if denom.norm() > 0.0 { ratio / denom } else { ratio };
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(&c, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() || step.norm() > 1e-6 * (1.0 + zi.norm()) {
                break;
            }
            *zi -= step;
        }
    }
    Some(z)
}

/// Real roots of a real polynomial; a root is real when its imaginary part
/// is below `imag_tol * (1 + |root|)`. The result is sorted.
pub fn real_roots(coeffs: &[f64], imag_tol: f64) -> Option<Vec<f64>> {
    let c: Vec<Complex64> = coeffs.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    let all = roots(&c)?;
    let mut out: Vec<f64> = all
        .iter()
        .filter(|r| r.im.abs() <= imag_tol * (1.0 + r.norm()))
        .map(|r| r.re)
        .collect();
    out.sort_by(f64::total_cmp);
    Some(out)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut m: Vec<Vec<Complex64>>) -> Complex64 {
    let n = m.len();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm()))
            .unwrap();
        if m[pivot][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
        }
    }
    det
}

/// Resultant of two polynomials via the Sylvester matrix.
pub fn resultant(p: &[Complex64], q: &[Complex64]) -> Complex64 {
    let m = p.len() - 1;
    let n = q.len() - 1;
    let size = m + n;
    if size == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut rows = vec![vec![Complex64::new(0.0, 0.0); size]; size];
    for i in 0..n {
        for (k, &a) in p.iter().rev().enumerate() {
            rows[i][i + k] = a;
        }
    }
    for i in 0..m {
        for (k, &b) in q.iter().rev().enumerate() {
            rows[n + i][i + k] = b;
        }
    }
    determinant(rows)
}

/// Formal derivative.
pub fn derivative(c: &[Complex64]) -> Vec<Complex64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| a * k as f64)
        .collect()
}
