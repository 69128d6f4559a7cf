//! Polynomial chaos machinery: per-distribution orthogonal bases with
//! explicit Gram values, coefficient vectors, moment extraction, the
//! Galerkin-projected DC-OPF KKT system, and the permutation-equivalence
//! check between the policy QP and the projected per-realization QP.
//!
//! The affine basis convention pins ψ₁ so that the physical variable is
//! exactly coeff₀ + coeff₁·ψ₁(ξ); ψ₁ then has non-unit Gram which is
//! carried explicitly through every moment formula. An orthonormal mode
//! (unit Gram) is available for comparison.

use crate::dist::Distribution1D;
use crate::error::{Error, Result};
use crate::integrate::gauss_legendre;
use crate::linalg::{max_abs, solve_linear, DenseMatrix};
use crate::qp::QpProblem;
use serde::{Deserialize, Serialize};

const QUAD_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisNormalization {
    /// ψ₁ is the affine germ map reproducing the canonical coefficients
    /// (mean, scale); Gram values are carried explicitly.
    #[default]
    Affine,
    /// Every ψ_ℓ rescaled to unit Gram.
    Orthonormal,
}

/// Orthogonal polynomial basis in the germ variable ξ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Basis {
    pub germ: Distribution1D,
    /// ψ_ℓ as monomial coefficients in ξ (constant first).
    pub polys: Vec<Vec<f64>>,
    /// ⟨ψ_ℓ, ψ_ℓ⟩ under the germ measure.
    pub gram: Vec<f64>,
    pub normalization: BasisNormalization,
    pub id: String,
}

impl Basis {
    pub fn order(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn eval(&self, ell: usize, xi: f64) -> f64 {
        horner(&self.polys[ell], xi)
    }

    /// ⟨ψ_i, ψ_j⟩ from exact germ moments.
    pub fn inner(&self, i: usize, j: usize) -> f64 {
        poly_expectation(&self.germ, &poly_mul(&self.polys[i], &self.polys[j]))
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// E[ξ^k] for the canonical germ measures in closed form; quadrature is
/// the fallback for anything non-canonical.
fn germ_moment(germ: &Distribution1D, k: usize) -> f64 {
    match *germ {
        Distribution1D::Beta { lo, hi, a, b } if lo == 0.0 && hi == 1.0 => {
            (0..k).fold(1.0, |acc, j| acc * (a + j as f64) / (a + b + j as f64))
        }
        Distribution1D::Uniform { lo, hi } if lo == -1.0 && hi == 1.0 => {
            if k % 2 == 1 {
                0.0
            } else {
                1.0 / (k as f64 + 1.0)
            }
        }
        Distribution1D::Gaussian { mean, std } if mean == 0.0 && std == 1.0 => {
            if k % 2 == 1 {
                0.0
            } else {
                // (k-1)!!
                (1..k).step_by(2).fold(1.0, |acc, j| acc * j as f64)
            }
        }
        _ => germ_expectation(germ, |xi| xi.powi(k as i32)),
    }
}

fn poly_expectation(germ: &Distribution1D, coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c * germ_moment(germ, k))
        .sum()
}

/// E[g(ξ)] under the germ measure. Exact for polynomial integrands with
/// polynomial weights (64-point Gauss rule); analytic recurrences are used
/// for the Gaussian germ elsewhere.
fn germ_expectation<F: Fn(f64) -> f64>(germ: &Distribution1D, g: F) -> f64 {
    match *germ {
        Distribution1D::Gaussian { mean, std } => {
            // Gauss-Legendre on ±12σ captures polynomial moments to ~1e-14
            let (xs, ws) = gauss_legendre(QUAD_POINTS * 2);
            let (a, b) = (mean - 12.0 * std, mean + 12.0 * std);
            let c = 0.5 * (b - a);
            let d = 0.5 * (a + b);
            xs.iter()
                .zip(&ws)
                .map(|(&x, &w)| {
                    let xi = c * x + d;
                    w * g(xi) * germ.pdf(xi)
                })
                .sum::<f64>()
                * c
        }
        _ => {
            let (lo, hi) = germ.support();
            let (xs, ws) = gauss_legendre(QUAD_POINTS);
            let c = 0.5 * (hi - lo);
            let d = 0.5 * (lo + hi);
            xs.iter()
                .zip(&ws)
                .map(|(&x, &w)| {
                    let xi = c * x + d;
                    w * g(xi) * germ.pdf(xi)
                })
                .sum::<f64>()
                * c
        }
    }
}

/// Build the order-L basis for a distribution kind.
pub fn basis_for(d: &Distribution1D, order: usize) -> Result<Basis> {
    basis_for_with(d, order, BasisNormalization::Affine)
}

pub fn basis_for_with(
    d: &Distribution1D,
    order: usize,
    normalization: BasisNormalization,
) -> Result<Basis> {
    if order < 1 {
        return Err(Error::InvalidInput("basis order must be at least 1".into()));
    }
    let (germ, pin_scale, id) = match *d {
        Distribution1D::Beta { a, b, .. } => (
            Distribution1D::Beta {
                lo: 0.0,
                hi: 1.0,
                a,
                b,
            },
            a + b,
            format!("jacobi(a={a},b={b})"),
        ),
        Distribution1D::Uniform { .. } => (
            Distribution1D::Uniform { lo: -1.0, hi: 1.0 },
            1.0,
            "legendre".to_string(),
        ),
        Distribution1D::Gaussian { .. } => (
            Distribution1D::Gaussian { mean: 0.0, std: 1.0 },
            1.0,
            "hermite".to_string(),
        ),
        Distribution1D::Dirac { .. } => {
            return Err(Error::UnsupportedDistribution(
                "no polynomial basis is registered for a point mass".into(),
            ))
        }
    };

    // monic Gram-Schmidt on monomials under the germ measure
    let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
    for ell in 1..=order {
        let mut p = vec![0.0; ell + 1];
        p[ell] = 1.0; // ξ^ell
        for k in 0..ell {
            let mut shifted = vec![0.0; ell + polys[k].len()];
            shifted[ell..ell + polys[k].len()].copy_from_slice(&polys[k]);
            let num = poly_expectation(&germ, &shifted);
            let den = poly_expectation(&germ, &poly_mul(&polys[k], &polys[k]));
            let c = num / den;
            for (pi, bk) in p.iter_mut().zip(polys[k].iter().chain(std::iter::repeat(&0.0))) {
                *pi -= c * bk;
            }
        }
        polys.push(p);
    }

    // pin ψ₁ to the affine convention: ψ₁ = pin_scale · (ξ − E[ξ])
    for c in polys[1].iter_mut() {
        *c *= pin_scale;
    }

    let mut basis = Basis {
        germ,
        polys,
        gram: Vec::new(),
        normalization,
        id,
    };
    basis.gram = (0..=order).map(|l| basis.inner(l, l)).collect();

    if normalization == BasisNormalization::Orthonormal {
        for l in 0..=order {
            let s = basis.gram[l].sqrt();
            for c in basis.polys[l].iter_mut() {
                *c /= s;
            }
            basis.gram[l] = 1.0;
        }
        // keep gram exactly 1 but retain the id suffix for serialization
        basis.id.push_str(":orthonormal");
    }
    Ok(basis)
}

/// PCE coefficients of one or more components in a shared basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PceVector {
    pub basis: Basis,
    /// coeffs[ℓ][i]: coefficient ℓ of component i.
    pub coeffs: Vec<Vec<f64>>,
}

impl PceVector {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn components(&self) -> usize {
        self.coeffs.first().map_or(0, Vec::len)
    }

    /// Σ over components of coefficient ℓ.
    pub fn coeff_sum(&self, ell: usize) -> f64 {
        self.coeffs[ell].iter().sum()
    }

    /// Realization of component i at germ value ξ.
    pub fn eval(&self, component: usize, xi: f64) -> f64 {
        (0..self.coeffs.len())
            .map(|l| self.coeffs[l][component] * self.basis.eval(l, xi))
            .sum()
    }

    /// (mean, std) of component i from the coefficients and Gram values.
    pub fn moments(&self, component: usize) -> (f64, f64) {
        let mean = self.coeffs[0][component];
        let var: f64 = (1..self.coeffs.len())
            .map(|l| self.coeffs[l][component].powi(2) * self.basis.gram[l])
            .sum();
        (mean, var.sqrt())
    }
}

/// Order-1 exact PCE of a canonical distribution: coeff₀ is the mean and
/// coeff₁ the affine scale so that coeff₀ + coeff₁·ψ₁(ξ) has exactly the
/// law of `d`.
pub fn pce_of_demand(d: &Distribution1D) -> Result<PceVector> {
    pce_of_demand_with(d, BasisNormalization::Affine)
}

pub fn pce_of_demand_with(
    d: &Distribution1D,
    normalization: BasisNormalization,
) -> Result<PceVector> {
    d.validate()?;
    let (c0, c1, basis) = match *d {
        Distribution1D::Beta { lo, hi, a, b } => {
            let basis = basis_for_with(d, 1, normalization)?;
            (lo + (hi - lo) * a / (a + b), (hi - lo) / (a + b), basis)
        }
        Distribution1D::Uniform { lo, hi } => {
            let basis = basis_for_with(d, 1, normalization)?;
            (0.5 * (lo + hi), 0.5 * (hi - lo), basis)
        }
        Distribution1D::Gaussian { mean, std } => {
            let basis = basis_for_with(d, 1, normalization)?;
            (mean, std, basis)
        }
        Distribution1D::Dirac { at } => {
            // footnote-style degenerate case: zero fluctuation in any basis
            let basis = basis_for_with(
                &Distribution1D::Gaussian { mean: 0.0, std: 1.0 },
                1,
                normalization,
            )?;
            (at, 0.0, basis)
        }
    };
    let c1 = match normalization {
        BasisNormalization::Affine => c1,
        // ψ₁ was divided by √gram, so the coefficient absorbs it
        BasisNormalization::Orthonormal => {
            let affine = basis_for_with(&d_for_gram(d), 1, BasisNormalization::Affine)?;
            c1 * affine.gram[1].sqrt()
        }
    };
    Ok(PceVector {
        basis,
        coeffs: vec![vec![c0], vec![c1]],
    })
}

fn d_for_gram(d: &Distribution1D) -> Distribution1D {
    match *d {
        Distribution1D::Dirac { .. } => Distribution1D::Gaussian { mean: 0.0, std: 1.0 },
        other => other,
    }
}

/// Galerkin projection of the equality-constrained DC-OPF KKT system:
/// the block-diagonal Kronecker lift I_{L+1} ⊗ [H, 1; 1ᵀ, 0] with the
/// stacked right-hand side −(h, Σp^d₀, 0, Σp^d₁, …).
pub fn galerkin_kkt(q: &QpProblem, demand: &PceVector) -> (DenseMatrix, Vec<f64>) {
    let n = q.n();
    let l1 = demand.coeffs.len();
    let dim = l1 * (n + 1);
    let mut a = DenseMatrix::zeros(dim, dim);
    let mut b = vec![0.0; dim];
    for ell in 0..l1 {
        let off = ell * (n + 1);
        for i in 0..n {
            a[(off + i, off + i)] = q.h_diag[i];
            a[(off + i, off + n)] = 1.0;
            a[(off + n, off + i)] = 1.0;
            if ell == 0 {
                b[off + i] = -q.h_lin[i];
            }
        }
        b[off + n] = -demand.coeff_sum(ell);
    }
    (a, b)
}

/// Solve the Galerkin system; returns (alpha coefficients, multiplier
/// coefficients).
pub fn solve_galerkin(q: &QpProblem, demand: &PceVector) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = q.n();
    let l1 = demand.coeffs.len();
    let (a, b) = galerkin_kkt(q, demand);
    let z = solve_linear(&a, &b)?;
    let mut alpha = Vec::with_capacity(l1);
    let mut lambda = Vec::with_capacity(l1);
    for ell in 0..l1 {
        let off = ell * (n + 1);
        alpha.push(z[off..off + n].to_vec());
        lambda.push(z[off + n]);
    }
    Ok((alpha, lambda))
}

/// Residuals of the permutation identity between the policy-QP ordering
/// (all α stacked, then all λ) and the Galerkin ordering (per-coefficient
/// blocks).
#[derive(Debug, Clone, Serialize)]
pub struct PermutationReport {
    pub z_residual: f64,
    pub rhs_residual: f64,
    pub matrix_residual: f64,
}

impl PermutationReport {
    pub fn max(&self) -> f64 {
        self.z_residual.max(self.rhs_residual).max(self.matrix_residual)
    }
}

/// Permutation matrix M with M z_h = z_s, M b_h = b_s, M A_h Mᵀ = A_s.
pub fn permutation_matrix(n: usize, order: usize) -> DenseMatrix {
    let l1 = order + 1;
    let dim = l1 * (n + 1);
    let mut m = DenseMatrix::zeros(dim, dim);
    for ell in 0..l1 {
        for i in 0..n {
            m[(ell * n + i, ell * (n + 1) + i)] = 1.0;
        }
        m[(l1 * n + ell, ell * (n + 1) + n)] = 1.0;
    }
    m
}

pub fn permutation_equivalence_check(
    q: &QpProblem,
    demand: &PceVector,
) -> Result<PermutationReport> {
    let n = q.n();
    let l1 = demand.coeffs.len();
    let (a_h, b_h) = galerkin_kkt(q, demand);
    let z_h = solve_linear(&a_h, &b_h)?;

    // policy-QP ordering
    let dim = l1 * (n + 1);
    let mut a_s = DenseMatrix::zeros(dim, dim);
    let mut b_s = vec![0.0; dim];
    for ell in 0..l1 {
        for i in 0..n {
            a_s[(ell * n + i, ell * n + i)] = q.h_diag[i];
            a_s[(ell * n + i, l1 * n + ell)] = 1.0;
            a_s[(l1 * n + ell, ell * n + i)] = 1.0;
            if ell == 0 {
                b_s[i] = -q.h_lin[i];
            }
        }
        b_s[l1 * n + ell] = -demand.coeff_sum(ell);
    }
    let z_s = solve_linear(&a_s, &b_s)?;

    let m = permutation_matrix(n, l1 - 1);
    let mz: Vec<f64> = m
        .matvec(&z_h)
        .iter()
        .zip(&z_s)
        .map(|(a, b)| a - b)
        .collect();
    let mb: Vec<f64> = m
        .matvec(&b_h)
        .iter()
        .zip(&b_s)
        .map(|(a, b)| a - b)
        .collect();
    let mam = m.matmul(&a_h).matmul(&m.transpose());
    Ok(PermutationReport {
        z_residual: max_abs(&mz),
        rhs_residual: max_abs(&mb),
        matrix_residual: mam.max_diff(&a_s),
    })
}
