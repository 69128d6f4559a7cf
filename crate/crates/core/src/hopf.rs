//! In-hindsight OPF: per-sample re-optimization over drawn demand
//! realizations, and the analytic density push-forward through the
//! two-generator argmin.

use crate::dcopf::{argmin, build_qp, ArgminCaseSplit, DemandSpec, Network};
use crate::density::{Atom, MixedDensity1D, Piece};
use crate::dist::Distribution1D;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Samples are generated in fixed-size chunks with per-chunk derived
/// seeds, so a partitioned (parallel) evaluation merges to the identical
/// sequence.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone)]
pub struct HopfEmpirical {
    /// n × n_gen per-sample optimal generation.
    pub samples: Vec<Vec<f64>>,
    /// Per-sample optimal objective value.
    pub costs: Vec<f64>,
    pub seed: u64,
    pub n: usize,
}

/// Demand realizations for one draw of the shared germ: every random bus
/// is mapped through its own quantile at the same uniform variate.
fn demand_realization(net: &Network, u: f64) -> Result<Vec<f64>> {
    net.buses
        .iter()
        .map(|b| match &b.demand {
            DemandSpec::Fixed(v) => Ok(*v),
            DemandSpec::Random(d) => d.quantile(u),
        })
        .collect()
}

/// Monte-Carlo per-sample optimization: draw N demand samples, solve the
/// deterministic OPF for each, collect the optimal generation rows.
pub fn run_hopf(net: &Network, n: usize, seed: u64) -> Result<HopfEmpirical> {
    net.validate()?;
    let mut samples = Vec::with_capacity(n);
    let mut costs = Vec::with_capacity(n);
    let mut k = 0usize;
    let mut chunk_idx = 0u64;
    while k < n {
        let take = CHUNK.min(n - k);
        let mut rng = Rng::stream(seed, chunk_idx);
        for j in 0..take {
            let u = rng.next_open01();
            let demands = demand_realization(net, u)?;
            let sol = argmin(net, &demands).map_err(|e| {
                Error::InfeasibleProblem(format!("sample {}: {e}", k + j))
            })?;
            let qp = build_qp(net, &demands);
            costs.push(qp.objective(&sol.primal));
            samples.push(sol.primal);
        }
        k += take;
        chunk_idx += 1;
    }
    Ok(HopfEmpirical {
        samples,
        costs,
        seed,
        n,
    })
}

/// Analytic per-generator densities of the two-generator in-hindsight
/// solution: affine push-forwards of the demand law through the two argmin
/// branches, with the bound-saturation probability collected into an atom
/// at p₁^max.
pub fn analytic_hopf_density(net: &Network) -> Result<Vec<MixedDensity1D>> {
    net.validate()?;
    let gens: Vec<_> = net.generators().collect();
    if gens.len() != 2 {
        return Err(Error::UnsupportedTopology(format!(
            "analytic density needs exactly two generators, got {}",
            gens.len()
        )));
    }
    let uncertain: Vec<_> = net.uncertain_buses().collect();
    let fixed_sum: f64 = net
        .buses
        .iter()
        .filter(|b| !b.demand.is_random())
        .map(|b| b.demand.mean())
        .sum();

    if uncertain.is_empty() {
        // degenerate demand: both generation laws are point masses
        let demands = net.mean_demand();
        let s = argmin(net, &demands)?;
        return Ok(s.primal.iter().map(|&p| MixedDensity1D::point_mass(p)).collect());
    }
    if uncertain.len() != 1 {
        return Err(Error::UnsupportedTopology(
            "analytic density supports a single uncertain load".into(),
        ));
    }
    let d = match &uncertain[0].demand {
        DemandSpec::Random(d) => *d,
        DemandSpec::Fixed(_) => unreachable!(),
    };
    if matches!(d, Distribution1D::Gaussian { .. }) {
        return Err(Error::UnsupportedDistribution(
            "analytic push-forward needs a bounded demand density".into(),
        ));
    }
    if fixed_sum != 0.0 {
        return Err(Error::UnsupportedTopology(
            "mixing fixed and random demand is not supported by the analytic path".into(),
        ));
    }

    let cs = ArgminCaseSplit::for_network(net)?;
    let p1_max = gens[0].p_max;
    let (d_lo, d_hi) = d.support();
    // the bound binds for demand at or below this value
    let d_switch = -cs.switch_point;
    let atom_mass = d.cdf(d_switch);
    let t_free_lo = d_lo.max(d_switch);

    // bus 1: x₁ = −β − γ·t on the unconstrained branch, atom at p₁^max
    let mut bus1 = MixedDensity1D {
        pieces: vec![Piece::affine(d, -cs.beta, -cs.gamma, t_free_lo, d_hi)],
        atoms: Vec::new(),
    };
    if atom_mass > 0.0 {
        bus1.atoms.push(Atom {
            location: p1_max,
            mass: atom_mass,
        });
    }

    // bus 2: x₂ = β − (1−γ)·t unconstrained, x₂ = −t − p₁^max constrained
    let mut pieces2 = vec![Piece::affine(
        d,
        cs.beta,
        -(1.0 - cs.gamma),
        t_free_lo,
        d_hi,
    )];
    if atom_mass > 0.0 {
        pieces2.push(Piece::affine(d, -p1_max, -1.0, d_lo, d_switch));
    }
    let bus2 = MixedDensity1D::continuous(pieces2);

    Ok(vec![bus1, bus2])
}

/// Validation bridge between the Monte-Carlo output and the analytic law.
#[derive(Debug, Clone)]
pub struct EmpiricalReport {
    pub ks_statistic: f64,
    pub ks_critical_1pct: f64,
    /// (location, empirical frequency, expected mass, binomial z-score)
    pub atoms: Vec<(f64, f64, f64, f64)>,
}

pub fn empirical_vs_analytic_report(
    e: &HopfEmpirical,
    a: &MixedDensity1D,
    bus: usize,
) -> EmpiricalReport {
    let n = e.samples.len();
    let values: Vec<f64> = e.samples.iter().map(|row| row[bus]).collect();

    let mut atoms = Vec::new();
    let mut at_atom = vec![false; n];
    for atom in &a.atoms {
        let mut count = 0usize;
        for (i, &v) in values.iter().enumerate() {
            if (v - atom.location).abs() <= 1e-9 {
                at_atom[i] = true;
                count += 1;
            }
        }
        let freq = count as f64 / n as f64;
        let z = if atom.mass > 0.0 && atom.mass < 1.0 {
            (freq - atom.mass) / (atom.mass * (1.0 - atom.mass) / n as f64).sqrt()
        } else {
            0.0
        };
        atoms.push((atom.location, freq, atom.mass, z));
    }

    // conditional KS on the continuous part
    let cont_mass = a.continuous_mass();
    let mut cont: Vec<f64> = values
        .iter()
        .zip(&at_atom)
        .filter(|(_, &hit)| !hit)
        .map(|(&v, _)| v)
        .collect();
    cont.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let m = cont.len();
    let mut ks = 0.0f64;
    for (i, &x) in cont.iter().enumerate() {
        let f: f64 = a
            .pieces
            .iter()
            .map(|p| p.mass_between(f64::NEG_INFINITY, x))
            .sum::<f64>()
            / cont_mass.max(1e-300);
        ks = ks.max((f - i as f64 / m as f64).abs());
        ks = ks.max(((i + 1) as f64 / m as f64 - f).abs());
    }
    EmpiricalReport {
        ks_statistic: ks,
        ks_critical_1pct: 1.628 / (m.max(1) as f64).sqrt(),
        atoms,
    }
}
