//! Adaptive Simpson quadrature and a 64-point Gauss-Legendre rule.

/// Adaptive Simpson on [a, b]. Returns (integral, error estimate).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        (left + right + delta / 15.0, delta.abs() / 15.0)
    } else {
        let (il, el) = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
        let (ir, er) = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
        (il + ir, el + er)
    }
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// ∫ f on [a, b] with the mapped n-point Gauss-Legendre rule.
pub fn gauss_legendre_integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let (xs, ws) = gauss_legendre(n);
    let c = 0.5 * (b - a);
    let d = 0.5 * (a + b);
    xs.iter()
        .zip(&ws)
        .map(|(&x, &w)| w * f(c * x + d))
        .sum::<f64>()
        * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simpson_polynomial() {
        let (v, _) = adaptive_simpson(&|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12, 40);
        assert_abs_diff_eq!(v, 4.0 - 4.0 + 2.0, epsilon = 1e-10);
    }

    #[test]
    fn simpson_kink() {
        let (v, e) = adaptive_simpson(&|x: f64| x.abs(), -1.0, 1.0, 1e-10, 40);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);
        assert!(e < 1e-7);
    }

    #[test]
    fn gauss_legendre_exactness() {
        // 64 points integrate polynomials up to degree 127 exactly
        let v = gauss_legendre_integrate(&|x| x.powi(10), -1.0, 1.0, 64);
        assert_abs_diff_eq!(v, 2.0 / 11.0, epsilon = 1e-13);
        let v = gauss_legendre_integrate(&|x| (3.0 * x + 1.0).powi(7), 0.0, 1.0, 64);
        assert_abs_diff_eq!(v, (4.0f64.powi(8) - 1.0) / 24.0, epsilon = 1e-9);
    }
}
