//! Second-order finite differences and trapezoidal quadrature on uniform samples.

/// First derivative, centered in the interior, one-sided second order at the ends.
pub fn derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    if n == 2 {
        let s = (f[1] - f[0]) / h;
        return vec![s, s];
    }
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    d
}

/// Second derivative; one-sided four-point stencils at the ends when available.
pub fn second_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        return d;
    }
    let h2 = h * h;
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    }
    if n >= 4 {
        d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
        d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    } else {
        d[0] = d[1];
        d[n - 1] = d[n - 2];
    }
    d
}

/// Composite trapezoid over uniform samples.
pub fn trapezoid(f: &[f64], h: f64) -> f64 {
    match f.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (f[0] + f[n - 1]) + f[1..n - 1].iter().sum::<f64>()),
    }
}

/// Running trapezoid integral `F[i] = int_0^{x_i} f`.
pub fn cumulative_trapezoid(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    for (i, v) in f.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (f[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Trapezoid of samples at uniform nodes `x_0 + i h` over `[a, x_last]`, where `a`
/// may fall between nodes; the integrand at `a` is interpolated linearly.
pub fn trapezoid_from(f: &[f64], x0: f64, h: f64, a: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    let s = ((a - x0) / h).max(0.0);
    let k = (s.floor() as usize).min(n - 2);
    let t = s - k as f64;
    let fa = f[k] * (1.0 - t) + f[k + 1] * t;
    let mut total = 0.5 * (1.0 - t) * h * (fa + f[k + 1]);
    for i in k + 1..n - 1 {
        total += 0.5 * h * (f[i] + f[i + 1]);
    }
    total
}

/// Linear interpolation of uniform samples at `x`.
pub fn interpolate(f: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = f.len();
    let s = ((x - x0) / h).clamp(0.0, (n - 1) as f64);
    let k = (s.floor() as usize).min(n.saturating_sub(2));
    let t = s - k as f64;
    f[k] * (1.0 - t) + f[(k + 1).min(n - 1)] * t
}

/// Least-squares slope of `log2(errors)` against the refinement level.
pub fn fitted_order(errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > 0.0)
        .map(|(i, e)| (i as f64, e.log2()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_exact_on_quadratics() {
        let h = 0.1;
        let f: Vec<f64> = (0..6).map(|i| {
            let x = i as f64 * h;
            1.0 + 2.0 * x - 3.0 * x * x
        }).collect();
        let d = derivative(&f, h);
        let dd = second_derivative(&f, h);
        for (i, (a, b)) in d.iter().zip(&dd).enumerate() {
            let x = i as f64 * h;
            assert!((a - (2.0 - 6.0 * x)).abs() < 1e-12);
            assert!((b + 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn partial_trapezoid_matches_linear_integral() {
        let h = 0.25;
        let f: Vec<f64> = (0..5).map(|i| 2.0 * i as f64 * h + 1.0).collect();
        // int_{0.3}^{1} (2x + 1) dx
        let exact = (1.0 + 1.0) - (0.09 + 0.3);
        assert!((trapezoid_from(&f, 0.0, h, 0.3) - exact).abs() < 1e-14);
        assert!((trapezoid(&f, h) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn order_of_geometric_sequence() {
        assert!((fitted_order(&[1.0, 0.25, 0.0625]) - 2.0).abs() < 1e-12);
    }
}
