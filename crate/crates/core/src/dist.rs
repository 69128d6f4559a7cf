//! Univariate distributions: scaled Beta, Uniform, Gaussian, and the
//! degenerate point mass. Power demand is counted negative by convention;
//! the distributions themselves are sign-agnostic.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::special::{betainc, ln_beta, std_normal_cdf};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution1D {
    /// Beta(a, b) rescaled to the support [lo, hi].
    Beta { lo: f64, hi: f64, a: f64, b: f64 },
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, std: f64 },
    /// Point mass; the degenerate case of a "not uncertain" injection.
    Dirac { at: f64 },
}

use Distribution1D::*;

impl Distribution1D {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Beta { lo, hi, a, b } => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(Error::InvalidInput("Beta shapes must be positive".into()));
                }
                if !(lo < hi) {
                    return Err(Error::InvalidInput("Beta support must be nonempty".into()));
                }
            }
            Uniform { lo, hi } => {
                if !(lo < hi) {
                    return Err(Error::InvalidInput("Uniform support must be nonempty".into()));
                }
            }
            Gaussian { std, .. } => {
                if !(std > 0.0) {
                    return Err(Error::InvalidInput("Gaussian std must be positive".into()));
                }
            }
            Dirac { .. } => {}
        }
        Ok(())
    }

    /// Support interval; unbounded sides are ±∞.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Beta { lo, hi, .. } | Uniform { lo, hi } => (lo, hi),
            Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Dirac { at } => (at, at),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Beta { lo, hi, a, b } => lo + (hi - lo) * a / (a + b),
            Uniform { lo, hi } => 0.5 * (lo + hi),
            Gaussian { mean, .. } => mean,
            Dirac { at } => at,
        }
    }

    pub fn std(&self) -> f64 {
        match *self {
            Beta { lo, hi, a, b } => {
                (hi - lo) * (a * b / ((a + b) * (a + b) * (a + b + 1.0))).sqrt()
            }
            Uniform { lo, hi } => (hi - lo) / 12f64.sqrt(),
            Gaussian { std, .. } => std,
            Dirac { .. } => 0.0,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Beta { lo, hi, a, b } => {
                if x < lo || x > hi {
                    return 0.0;
                }
                let w = hi - lo;
                let u = (x - lo) / w;
                if (u == 0.0 && a < 1.0) || (u == 1.0 && b < 1.0) {
                    return f64::INFINITY;
                }
                let lnf = (a - 1.0) * safe_ln(u) + (b - 1.0) * safe_ln(1.0 - u) - ln_beta(a, b);
                lnf.exp() / w
            }
            Uniform { lo, hi } => {
                if x < lo || x > hi {
                    0.0
                } else {
                    1.0 / (hi - lo)
                }
            }
            Gaussian { mean, std } => {
                let z = (x - mean) / std;
                (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
            }
            // the point mass carries no continuous density
            Dirac { .. } => 0.0,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Beta { lo, hi, a, b } => {
                if x <= lo {
                    0.0
                } else if x >= hi {
                    1.0
                } else {
                    betainc(a, b, (x - lo) / (hi - lo))
                }
            }
            Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Gaussian { mean, std } => std_normal_cdf((x - mean) / std),
            Dirac { at } => {
                if x >= at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Inverse CDF by bisection with a Newton polish.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0 < u && u < 1.0) {
            return Err(Error::DomainError(format!(
                "quantile argument {u} outside (0, 1)"
            )));
        }
        match *self {
            Uniform { lo, hi } => Ok(lo + u * (hi - lo)),
            Dirac { at } => Ok(at),
            _ => {
                let (mut lo, mut hi) = self.support();
                if lo.is_infinite() || hi.is_infinite() {
                    // Gaussian: bracket around the mean
                    let (m, s) = (self.mean(), self.std());
                    lo = m - 40.0 * s;
                    hi = m + 40.0 * s;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-14 * (1.0 + mid.abs()) {
                        break;
                    }
                }
                let mut x = 0.5 * (lo + hi);
                for _ in 0..4 {
                    let f = self.cdf(x) - u;
                    let d = self.pdf(x);
                    if d > 0.0 && d.is_finite() {
                        let step = f / d;
                        let x_new = (x - step).clamp(lo.min(hi), hi.max(lo));
                        if x_new.is_finite() {
                            x = x_new;
                        }
                    }
                }
                Ok(x)
            }
        }
    }

    /// Inverse-CDF sampling, deterministic per seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = Rng::seed_from(seed);
        self.sample_with(n, &mut rng)
    }

    /// Sampling from an explicit generator state, for seeded worker streams.
    pub fn sample_with(&self, n: usize, rng: &mut Rng) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let u = rng.next_open01();
                self.quantile(u).expect("u in (0,1)")
            })
            .collect()
    }
}

fn safe_ln(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}

/// Demand Beta distribution of the built-in example scenarios.
pub fn example_demand() -> Distribution1D {
    Beta {
        lo: -1.5,
        hi: -0.9,
        a: 4.0,
        b: 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::adaptive_simpson;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_pdf_outside_support() {
        assert_eq!(example_demand().pdf(-1.6), 0.0);
        assert_eq!(example_demand().pdf(-0.8), 0.0);
    }

    #[test]
    fn beta_uniform_special_case() {
        let d = Beta { lo: 0.0, hi: 1.0, a: 1.0, b: 1.0 };
        assert_abs_diff_eq!(d.pdf(0.3), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn beta_pdf_closed_form() {
        // (2/3)^3 * (1/3) * 20 / 0.6 at x = -1.1, with B(4,2) = 1/20
        let expect = (2.0f64 / 3.0).powi(3) * (1.0 / 3.0) * 20.0 / 0.6;
        assert_abs_diff_eq!(example_demand().pdf(-1.1), expect, epsilon = 1e-10);
    }

    #[test]
    fn beta_cdf_oracle() {
        assert_abs_diff_eq!(example_demand().cdf(-1.2), 0.1875, epsilon = 1e-12);
        let d = Beta { lo: 0.0, hi: 1.0, a: 4.0, b: 2.0 };
        let x: f64 = 0.3103192;
        let exact = 5.0 * x.powi(4) * (1.0 - x) + x.powi(5);
        assert_abs_diff_eq!(d.cdf(x), exact, epsilon = 1e-12);
        assert_abs_diff_eq!(d.cdf(x), 0.034855, epsilon = 1e-6);
    }

    #[test]
    fn cdf_at_support_ends() {
        let d = example_demand();
        assert_eq!(d.cdf(-1.5), 0.0);
        assert_eq!(d.cdf(-0.9), 1.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let d = example_demand();
        assert_abs_diff_eq!(d.quantile(0.1875).unwrap(), -1.2, epsilon = 1e-9);
        let u = Uniform { lo: 0.0, hi: 1.0 };
        assert_abs_diff_eq!(u.quantile(0.25).unwrap(), 0.25, epsilon = 1e-15);
        let g = Gaussian { mean: 0.0, std: 1.0 };
        assert_abs_diff_eq!(g.quantile(0.5).unwrap(), 0.0, epsilon = 1e-9);
        for &p in &[0.01, 0.3, 0.5, 0.77, 0.99] {
            assert_abs_diff_eq!(d.cdf(d.quantile(p).unwrap()), p, epsilon = 1e-9);
            assert_abs_diff_eq!(g.cdf(g.quantile(p).unwrap()), p, epsilon = 1e-9);
        }
    }

    #[test]
    fn quantile_domain_error() {
        assert!(example_demand().quantile(0.0).is_err());
        assert!(example_demand().quantile(1.5).is_err());
    }

    #[test]
    fn density_normalizes() {
        let d = example_demand();
        let (mass, _) = adaptive_simpson(&|x| d.pdf(x), -1.5, -0.9, 1e-10, 30);
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn sampling_deterministic_and_calibrated() {
        let d = example_demand();
        assert_eq!(d.sample(1, 99), d.sample(1, 99));

        let n = 100_000;
        let xs = d.sample(n, 42);
        let mean: f64 = xs.iter().sum::<f64>() / n as f64;
        assert!((mean + 1.1).abs() < 0.002, "mean {mean}");
        let frac = xs.iter().filter(|&&x| x <= -1.2).count() as f64 / n as f64;
        let sd = (0.1875 * 0.8125 / n as f64).sqrt();
        assert!((frac - 0.1875).abs() < 3.0 * sd, "frac {frac}");
    }

    #[test]
    fn sampling_ks_contract() {
        let d = example_demand();
        let n = 100_000;
        let mut xs = d.sample(n, 7);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let f = d.cdf(x);
            ks = ks.max((f - i as f64 / n as f64).abs());
            ks = ks.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        let crit = 1.628 / (n as f64).sqrt(); // 1% level
        assert!(ks < crit, "KS {ks} >= {crit}");
    }
}
