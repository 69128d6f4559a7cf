//! Chance-constrained DC-OPF over affine polynomial-chaos policies.
//!
//! The policy QP minimizes the Gram-weighted expected cost subject to
//! per-coefficient power balance, with each generation chance constraint
//! tightened to mean + δ·std ≤ bound. For the single-germ order-1 case
//! the std term is linear per sign branch of α₁, so the problem is solved
//! by sign-resolved active-set enumeration over exact KKT systems.

use crate::dcopf::Network;
use crate::density::{MixedDensity1D, Piece};
use crate::dist::Distribution1D;
use crate::error::{Error, Result};
use crate::linalg::{solve_linear, DenseMatrix};
use crate::pce::{pce_of_demand, Basis, PceVector};
use serde::Serialize;

const KKT_TOL: f64 = 1e-8;

/// Affine-in-basis generation response η_p with coefficients α.
#[derive(Debug, Clone, Serialize)]
pub struct Policy {
    pub basis: Basis,
    /// alpha[ℓ][i]: coefficient ℓ of generator i.
    pub alpha: Vec<Vec<f64>>,
    pub delta: f64,
}

impl Policy {
    /// Generation vector at germ value ξ.
    pub fn evaluate(&self, xi: f64) -> Vec<f64> {
        let n = self.alpha[0].len();
        (0..n)
            .map(|i| {
                (0..self.alpha.len())
                    .map(|l| self.alpha[l][i] * self.basis.eval(l, xi))
                    .sum()
            })
            .collect()
    }

    pub fn moments(&self, gen: usize) -> (f64, f64) {
        let mean = self.alpha[0][gen];
        let var: f64 = (1..self.alpha.len())
            .map(|l| self.alpha[l][gen].powi(2) * self.basis.gram[l])
            .sum();
        (mean, var.sqrt())
    }
}

/// Tightening multiplier δ and per-generator bounds.
#[derive(Debug, Clone)]
pub struct ChanceSpec {
    pub delta: f64,
    pub bounds: Vec<(f64, f64)>,
}

impl ChanceSpec {
    pub fn from_network(net: &Network, delta: f64) -> ChanceSpec {
        ChanceSpec {
            delta,
            bounds: net.generators().map(|g| (g.p_min, g.p_max)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Side {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy)]
struct ActiveCon {
    gen: usize,
    side: Side,
    /// assumed sign of α₁ at this generator (resolves |α₁| to ±α₁)
    sigma: f64,
}

/// Solve the tightened policy QP.
pub fn solve_ccopf(net: &Network, demand_pce: &PceVector, spec: &ChanceSpec) -> Result<Policy> {
    net.validate()?;
    if spec.delta < 0.0 {
        return Err(Error::InvalidInput("delta must be nonnegative".into()));
    }
    if demand_pce.order() != 1 {
        return Err(Error::InvalidInput(
            "the tightened policy QP is implemented for order-1 expansions".into(),
        ));
    }
    let n = net.n_generators();
    if spec.bounds.len() != n {
        return Err(Error::InvalidInput("bound list does not match generators".into()));
    }
    let h_diag: Vec<f64> = net.generators().map(|g| g.cost_quadratic).collect();
    let h_lin: Vec<f64> = net.generators().map(|g| g.cost_linear).collect();
    let g1 = demand_pce.basis.gram[1];
    let sg = g1.sqrt();
    let s0 = demand_pce.coeff_sum(0);
    let s1 = demand_pce.coeff_sum(1);

    let solve = |active: &[ActiveCon]| -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        // x = [α₀; α₁], equalities: two balances plus active tightenings
        let m = 2 + active.len();
        let dim = 2 * n + m;
        let mut kkt = DenseMatrix::zeros(dim, dim);
        let mut rhs = vec![0.0; dim];
        for i in 0..n {
            kkt[(i, i)] = h_diag[i];
            kkt[(n + i, n + i)] = g1 * h_diag[i];
            rhs[i] = -h_lin[i];
        }
        for i in 0..n {
            kkt[(i, 2 * n)] = 1.0;
            kkt[(2 * n, i)] = 1.0;
            kkt[(n + i, 2 * n + 1)] = 1.0;
            kkt[(2 * n + 1, n + i)] = 1.0;
        }
        rhs[2 * n] = -s0;
        rhs[2 * n + 1] = -s1;
        for (k, c) in active.iter().enumerate() {
            let row = 2 * n + 2 + k;
            // constraint in "g·x ≤ r" orientation
            let (g0, g1c, r) = match c.side {
                Side::Upper => (1.0, spec.delta * sg * c.sigma, spec.bounds[c.gen].1),
                Side::Lower => (-1.0, spec.delta * sg * c.sigma, -spec.bounds[c.gen].0),
            };
            kkt[(c.gen, row)] = g0;
            kkt[(row, c.gen)] = g0;
            kkt[(n + c.gen, row)] = g1c;
            kkt[(row, n + c.gen)] = g1c;
            rhs[row] = r;
        }
        let z = solve_linear(&kkt, &rhs)?;
        Ok((
            z[..n].to_vec(),
            z[n..2 * n].to_vec(),
            z[2 * n + 2..].to_vec(),
        ))
    };

    let mut active: Vec<ActiveCon> = Vec::new();
    let max_iter = 8 * n + 24;
    for _ in 0..max_iter {
        let (a0, a1, mults) = solve(&active)?;

        // re-resolve |α₁| signs for active constraints
        let mut flipped = false;
        for c in active.iter_mut() {
            let s = sign_of(a1[c.gen]);
            if s != 0.0 && (s - c.sigma).abs() > 0.5 {
                c.sigma = s;
                flipped = true;
            }
        }
        if flipped {
            continue;
        }

        // drop the most negative multiplier
        if let Some((worst, _)) = mults
            .iter()
            .enumerate()
            .filter(|(_, &m)| m < -KKT_TOL)
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        {
            active.remove(worst);
            continue;
        }

        // add the most violated tightened constraint
        let mut worst: Option<(ActiveCon, f64)> = None;
        for i in 0..n {
            let std_term = spec.delta * sg * a1[i].abs();
            let (lo, hi) = spec.bounds[i];
            let candidates = [
                (Side::Upper, a0[i] + std_term - hi),
                (Side::Lower, lo - (a0[i] - std_term)),
            ];
            for (side, viol) in candidates {
                if viol > KKT_TOL
                    && !active.iter().any(|c| c.gen == i && c.side == side)
                    && worst.map_or(true, |(_, w)| viol > w)
                {
                    // sign convention makes the std term shrink toward the bound
                    let sigma = match side {
                        Side::Upper => sign_of(a1[i]),
                        Side::Lower => -sign_of(a1[i]),
                    };
                    worst = Some((ActiveCon { gen: i, side, sigma }, viol));
                }
            }
        }
        if let Some((c, _)) = worst {
            active.push(c);
            continue;
        }

        // converged; per-coefficient balance sanity
        let bal0: f64 = a0.iter().sum::<f64>() + s0;
        let bal1: f64 = a1.iter().sum::<f64>() + s1;
        if bal0.abs() > 1e-9 || bal1.abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "balance residuals ({bal0:.2e}, {bal1:.2e}) after convergence"
            )));
        }
        return Ok(Policy {
            basis: demand_pce.basis.clone(),
            alpha: vec![a0, a1],
            delta: spec.delta,
        });
    }
    Err(Error::InfeasibleTightening(format!(
        "active-set enumeration did not converge for delta = {}",
        spec.delta
    )))
}

fn sign_of(x: f64) -> f64 {
    if x > 1e-12 {
        1.0
    } else if x < -1e-12 {
        -1.0
    } else {
        0.0
    }
}

/// Evaluate the policy at a physical demand value by inverting the
/// demand's affine PCE map.
pub fn evaluate_policy_at_demand(
    p: &Policy,
    demand_pce: &PceVector,
    demand_value: f64,
) -> Result<Vec<f64>> {
    let pd0 = demand_pce.coeff_sum(0);
    let pd1 = demand_pce.coeff_sum(1);
    if pd1 == 0.0 {
        return Ok(p.alpha[0].clone());
    }
    let psi1 = (demand_value - pd0) / pd1;
    let n = p.alpha[0].len();
    Ok((0..n)
        .map(|i| p.alpha[0][i] + p.alpha[1][i] * psi1)
        .collect())
}

/// Push the demand law through the affine policy of one generator.
///
/// A degenerate α₁ component yields a single atom instead of erroring,
/// matching the point-mass convention for deterministic injections.
pub fn policy_density(p: &Policy, demand: &Distribution1D, bus: usize) -> Result<MixedDensity1D> {
    let pce = pce_of_demand(demand)?;
    let pd0 = pce.coeffs[0][0];
    let pd1 = pce.coeffs[1][0];
    let a0 = p.alpha[0][bus];
    let a1 = p.alpha[1][bus];
    if a1 == 0.0 || pd1 == 0.0 {
        return Ok(MixedDensity1D::point_mass(a0));
    }
    let slope = a1 / pd1;
    let intercept = a0 - slope * pd0;
    let (lo, hi) = demand.support();
    Ok(MixedDensity1D::continuous(vec![Piece::affine(
        *demand, intercept, slope, lo, hi,
    )]))
}

/// Exact P(p_bus ≤ bound) through the affine policy map.
pub fn violation_probability(
    p: &Policy,
    demand: &Distribution1D,
    bus: usize,
    bound: f64,
) -> Result<f64> {
    let pce = pce_of_demand(demand)?;
    let pd0 = pce.coeffs[0][0];
    let pd1 = pce.coeffs[1][0];
    let a0 = p.alpha[0][bus];
    let a1 = p.alpha[1][bus];
    if a1 == 0.0 || pd1 == 0.0 {
        return Ok(if a0 <= bound { 1.0 } else { 0.0 });
    }
    let slope = a1 / pd1;
    let intercept = a0 - slope * pd0;
    let t = (bound - intercept) / slope;
    Ok(if slope > 0.0 {
        demand.cdf(t)
    } else {
        1.0 - demand.cdf(t)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcopf::{three_bus, DemandSpec};
    use crate::dist::example_demand;
    use approx::assert_abs_diff_eq;

    fn c2() -> Network {
        three_bus(0.2, 0.2, 0.5, 0.6, 0.85, DemandSpec::Random(example_demand()))
    }

    fn c1(h11: f64) -> Network {
        three_bus(h11, 0.2, 0.5, 0.6, 1.5, DemandSpec::Random(example_demand()))
    }

    fn demand_pce() -> PceVector {
        pce_of_demand(&example_demand()).unwrap()
    }

    /// Hand-derived multiplier solution for case C2 (both costs 0.2,
    /// balance sums 1.1 and −0.1, single active upper bound at 0.85).
    fn c2_oracle(delta: f64) -> (f64, f64) {
        let g: f64 = 72.0 / 63.0;
        let sg = g.sqrt();
        let mu = 0.05 * (delta * sg - 1.0) / (2.5 * (1.0 + delta * delta));
        let a0 = 0.8 - 2.5 * mu;
        let a1 = mu * delta / (0.4 * sg) - 0.05;
        (a0, a1)
    }

    #[test]
    fn c1_inactive_closed_form() {
        for h11 in [0.2, 0.3] {
            for delta in [2.0, 3.0] {
                let net = c1(h11);
                let p = solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, delta))
                    .unwrap();
                let beta = (0.5 - 0.6) / (h11 + 0.2);
                let gamma = 0.2 / (h11 + 0.2);
                assert_abs_diff_eq!(p.alpha[0][0], -beta - gamma * -1.1, epsilon = 1e-9);
                assert_abs_diff_eq!(p.alpha[0][1], beta - (1.0 - gamma) * -1.1, epsilon = 1e-9);
                assert_abs_diff_eq!(p.alpha[1][0], -gamma * 0.1, epsilon = 1e-9);
                assert_abs_diff_eq!(p.alpha[1][1], -(1.0 - gamma) * 0.1, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn c2_tightened_oracle() {
        let net = c2();
        for delta in [2.0, 3.0] {
            let p =
                solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, delta)).unwrap();
            let (a0, a1) = c2_oracle(delta);
            assert_abs_diff_eq!(p.alpha[0][0], a0, epsilon = 1e-9);
            assert_abs_diff_eq!(p.alpha[1][0], a1, epsilon = 1e-9);
        }
        // frozen values from the hand KKT solve
        let p = solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, 2.0)).unwrap();
        assert_abs_diff_eq!(p.alpha[0][0], 0.788619, epsilon = 5e-7);
        assert_abs_diff_eq!(p.alpha[1][0], -0.028708, epsilon = 5e-7);
        let p = solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, 3.0)).unwrap();
        assert_abs_diff_eq!(p.alpha[0][0], 0.788964, epsilon = 5e-7);
        assert_abs_diff_eq!(p.alpha[1][0], -0.019031, epsilon = 5e-7);
    }

    #[test]
    fn delta_zero_mean_clip_only() {
        let net = c2();
        let p = solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, 0.0)).unwrap();
        // unconstrained mean 0.8 already below the bound
        assert_abs_diff_eq!(p.alpha[0][0], 0.8, epsilon = 1e-10);
        assert_abs_diff_eq!(p.alpha[1][0], -0.05, epsilon = 1e-10);
    }

    #[test]
    fn per_coefficient_balance() {
        let net = c2();
        for delta in [0.0, 1.0, 2.0, 3.0] {
            let p =
                solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, delta)).unwrap();
            let d = demand_pce();
            assert_abs_diff_eq!(
                p.alpha[0].iter().sum::<f64>() + d.coeff_sum(0),
                0.0,
                epsilon = 1e-9
            );
            assert_abs_diff_eq!(
                p.alpha[1].iter().sum::<f64>() + d.coeff_sum(1),
                0.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn evaluate_at_mean_returns_alpha0() {
        let net = c1(0.2);
        let p = solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, 2.0)).unwrap();
        let v = evaluate_policy_at_demand(&p, &demand_pce(), -1.1).unwrap();
        assert_abs_diff_eq!(v[0], 0.8, epsilon = 1e-9);
        assert_abs_diff_eq!(v[1], 0.3, epsilon = 1e-9);
    }

    #[test]
    fn policy_matches_hindsight_at_extreme_demand() {
        let net = c1(0.2);
        let p = solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, 2.0)).unwrap();
        let v = evaluate_policy_at_demand(&p, &demand_pce(), -1.5).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v[1], 0.5, epsilon = 1e-9);
        // balance holds per realization
        assert_abs_diff_eq!(v[0] + v[1] - 1.5, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn policy_balance_every_realization() {
        let net = c2();
        let p = solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, 2.0)).unwrap();
        for k in 0..50 {
            let xi = k as f64 / 49.0;
            let v = p.evaluate(xi);
            let pd = -1.1 + 0.1 * (6.0 * xi - 4.0);
            assert_abs_diff_eq!(v.iter().sum::<f64>() + pd, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn density_and_violation_case_c2() {
        let net = c2();
        let d = example_demand();
        let p = solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, 2.0)).unwrap();
        let dens = policy_density(&p, &d, 0).unwrap();
        dens.check_normalized(1e-6).unwrap();
        assert!(dens.atoms.is_empty());
        assert_abs_diff_eq!(
            violation_probability(&p, &d, 0, 0.85).unwrap(),
            0.9651,
            epsilon = 5e-4
        );
        let p3 = solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, 3.0)).unwrap();
        assert_abs_diff_eq!(
            violation_probability(&p3, &d, 0, 0.85).unwrap(),
            0.9986,
            epsilon = 5e-4
        );
    }

    #[test]
    fn violation_c1_never_binding() {
        let net = c1(0.2);
        let d = example_demand();
        let p = solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, 2.0)).unwrap();
        assert_abs_diff_eq!(
            violation_probability(&p, &d, 0, 1.5).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn degenerate_policy_atom() {
        let net = c2();
        let mut p = solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, 2.0)).unwrap();
        p.alpha[1][0] = 0.0;
        let dens = policy_density(&p, &example_demand(), 0).unwrap();
        assert_eq!(dens.pieces.len(), 0);
        assert_abs_diff_eq!(dens.atoms[0].mass, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn tightening_monotonicity() {
        let net = c2();
        let d = example_demand();
        let mut last_p = 0.0;
        let mut last_a1 = f64::INFINITY;
        for delta in [1.0, 1.5, 2.0, 2.5, 3.0, 3.5] {
            let p =
                solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, delta)).unwrap();
            let sat = violation_probability(&p, &d, 0, 0.85).unwrap();
            assert!(sat >= last_p - 1e-12, "satisfaction not monotone at {delta}");
            let a1 = p.alpha[1][0].abs();
            assert!(a1 <= last_a1 + 1e-12, "variability not monotone at {delta}");
            last_p = sat;
            last_a1 = a1;
        }
    }

    #[test]
    fn closed_form_brute_force_equivalence() {
        // unconstrained instances: solver equals the per-block closed form
        let mut state = 555u64;
        for _ in 0..100 {
            let r = |s: &mut u64| (crate::rng::splitmix64(s) % 1000) as f64 / 1000.0;
            let h11 = 0.1 + r(&mut state);
            let h22 = 0.1 + r(&mut state);
            let h1 = r(&mut state);
            let h2 = r(&mut state);
            let net = three_bus(h11, h22, h1, h2, f64::INFINITY, DemandSpec::Random(example_demand()));
            let p = solve_ccopf(&net, &demand_pce(), &ChanceSpec::from_network(&net, 2.0)).unwrap();
            let beta = (h1 - h2) / (h11 + h22);
            let gamma = h22 / (h11 + h22);
            assert_abs_diff_eq!(p.alpha[0][0], -beta + gamma * 1.1, epsilon = 1e-9);
            assert_abs_diff_eq!(p.alpha[1][0], -gamma * 0.1, epsilon = 1e-9);
            assert_abs_diff_eq!(p.alpha[1][1], -(1.0 - gamma) * 0.1, epsilon = 1e-9);
        }
    }

    #[test]
    fn infeasible_tightening_detected() {
        // both generators bounded so tightly the margin cannot fit
        let mut net = c2();
        net.buses[0].p_max = 0.6;
        net.buses[1].p_max = 0.45;
        let spec = ChanceSpec::from_network(&net, 3.0);
        assert!(matches!(
            solve_ccopf(&net, &demand_pce(), &spec),
            Err(Error::InfeasibleTightening(_)) | Err(Error::InvalidInput(_))
        ));
    }
}
