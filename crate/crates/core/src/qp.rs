//! Convex QPs with a diagonal quadratic cost, one balance equality, and
//! box bounds, solved exactly by a primal active-set loop over KKT systems.

use crate::error::{Error, Result};
use crate::linalg::{solve_linear, DenseMatrix};

const FEAS_TOL: f64 = 1e-10;
const TIE_TOL: f64 = 1e-12;

/// Which side of a box bound is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// minimize ½ pᵀ diag(h_diag) p + h_linᵀ p
/// subject to 1ᵀp + balance_rhs = 0 and lower ≤ p ≤ upper.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub h_diag: Vec<f64>,
    pub h_lin: Vec<f64>,
    pub balance_rhs: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl QpProblem {
    pub fn unbounded(h_diag: Vec<f64>, h_lin: Vec<f64>, balance_rhs: f64) -> Self {
        let n = h_diag.len();
        QpProblem {
            h_diag,
            h_lin,
            balance_rhs,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n(&self) -> usize {
        self.h_diag.len()
    }

    pub fn objective(&self, p: &[f64]) -> f64 {
        p.iter()
            .enumerate()
            .map(|(i, &x)| 0.5 * self.h_diag[i] * x * x + self.h_lin[i] * x)
            .sum()
    }

    fn validate(&self) -> Result<()> {
        if self.h_diag.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidInput(
                "quadratic cost coefficients must be strictly positive".into(),
            ));
        }
        if self
            .lower
            .iter()
            .zip(&self.upper)
            .any(|(l, u)| l > u)
        {
            return Err(Error::InvalidInput("lower bound exceeds upper bound".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub primal: Vec<f64>,
    pub multiplier_balance: f64,
    pub multipliers_bounds: Vec<f64>,
    pub active_set: Vec<(usize, BoundSide)>,
}

/// Solve ignoring the box bounds: bordered KKT system [H, 1; 1ᵀ, 0].
pub fn solve_equality_qp(p: &QpProblem) -> Result<QpSolution> {
    p.validate()?;
    let n = p.n();
    let mut kkt = DenseMatrix::zeros(n + 1, n + 1);
    let mut rhs = vec![0.0; n + 1];
    for i in 0..n {
        kkt[(i, i)] = p.h_diag[i];
        kkt[(i, n)] = 1.0;
        kkt[(n, i)] = 1.0;
        rhs[i] = -p.h_lin[i];
    }
    rhs[n] = -p.balance_rhs;
    let sol = solve_linear(&kkt, &rhs)?;
    Ok(QpSolution {
        primal: sol[..n].to_vec(),
        multiplier_balance: sol[n],
        multipliers_bounds: vec![0.0; n],
        active_set: Vec::new(),
    })
}

/// Solve the box-constrained QP with a primal active-set loop.
///
/// Starts from the equality-QP solution, clamps the most-violated bound,
/// re-solves the reduced KKT system, and drops bounds whose multiplier
/// goes negative.
pub fn solve_box_qp(p: &QpProblem) -> Result<QpSolution> {
    p.validate()?;
    let n = p.n();

    // bracket check: the box must be able to absorb the balance
    let lo_sum: f64 = p.lower.iter().sum();
    let up_sum: f64 = p.upper.iter().sum();
    let target = -p.balance_rhs;
    if target < lo_sum - FEAS_TOL || target > up_sum + FEAS_TOL {
        return Err(Error::InfeasibleProblem(format!(
            "balance target {target} outside bound range [{lo_sum}, {up_sum}]"
        )));
    }

    let mut active: Vec<(usize, BoundSide)> = Vec::new();
    let max_iter = 10 * n + 20;
    for _ in 0..max_iter {
        let (primal, lambda, mults) = solve_with_active(p, &active)?;

        // drop an active bound whose multiplier went negative
        if let Some((worst, _)) = mults
            .iter()
            .enumerate()
            .filter(|(_, &m)| m < -FEAS_TOL)
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        {
            active.remove(worst);
            continue;
        }

        // add the most violated inactive bound
        let mut worst: Option<(usize, BoundSide, f64)> = None;
        for i in 0..n {
            if active.iter().any(|&(j, _)| j == i) {
                continue;
            }
            let over = primal[i] - p.upper[i];
            let under = p.lower[i] - primal[i];
            let (side, viol) = if over >= under {
                (BoundSide::Upper, over)
            } else {
                (BoundSide::Lower, under)
            };
            if viol > FEAS_TOL && worst.map_or(true, |(_, _, w)| viol > w) {
                worst = Some((i, side, viol));
            }
        }
        if let Some((i, side, _)) = worst {
            active.push((i, side));
            continue;
        }

        // converged; bounds attained exactly are reported active with zero
        // multiplier (branch-tie convention)
        let mut active_set = active.clone();
        let mut multipliers = vec![0.0; n];
        for (&(i, _), &m) in active.iter().zip(&mults) {
            multipliers[i] = m.max(0.0);
        }
        for i in 0..n {
            if active_set.iter().any(|&(j, _)| j == i) {
                continue;
            }
            if (primal[i] - p.upper[i]).abs() <= TIE_TOL {
                active_set.push((i, BoundSide::Upper));
            } else if (primal[i] - p.lower[i]).abs() <= TIE_TOL {
                active_set.push((i, BoundSide::Lower));
            }
        }
        return Ok(QpSolution {
            primal,
            multiplier_balance: lambda,
            multipliers_bounds: multipliers,
            active_set,
        });
    }
    Err(Error::InfeasibleProblem(
        "active-set loop failed to converge".into(),
    ))
}

/// KKT solve with the balance row plus the given bounds held as equalities.
/// Returns (primal, balance multiplier, bound multipliers in active order),
/// with bound constraints oriented so a nonnegative multiplier is optimal.
fn solve_with_active(
    p: &QpProblem,
    active: &[(usize, BoundSide)],
) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let n = p.n();
    let m = 1 + active.len();
    let dim = n + m;
    let mut kkt = DenseMatrix::zeros(dim, dim);
    let mut rhs = vec![0.0; dim];
    for i in 0..n {
        kkt[(i, i)] = p.h_diag[i];
        rhs[i] = -p.h_lin[i];
    }
    // balance row
    for i in 0..n {
        kkt[(i, n)] = 1.0;
        kkt[(n, i)] = 1.0;
    }
    rhs[n] = -p.balance_rhs;
    // active bounds, in "g·p ≤ r" orientation
    for (k, &(i, side)) in active.iter().enumerate() {
        let row = n + 1 + k;
        let (g, r) = match side {
            BoundSide::Upper => (1.0, p.upper[i]),
            BoundSide::Lower => (-1.0, -p.lower[i]),
        };
        kkt[(i, row)] = g;
        kkt[(row, i)] = g;
        rhs[row] = r;
    }
    let sol = solve_linear(&kkt, &rhs)?;
    Ok((
        sol[..n].to_vec(),
        sol[n],
        sol[n + 1..].to_vec(),
    ))
}
