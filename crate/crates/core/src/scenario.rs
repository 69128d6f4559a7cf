//! End-to-end scenario pipeline: parse or pick a network configuration,
//! run the in-hindsight analysis and the chance-constrained policies for
//! a sweep of tightening multipliers, compare the resulting laws, and
//! emit deterministic figure data (CSV) and a machine-readable summary
//! (JSON).

use crate::ccopf::{policy_density, solve_ccopf, ChanceSpec, Policy};
use crate::dcopf::{three_bus, DemandSpec, Network};
use crate::density::MixedDensity1D;
use crate::dist::{example_demand, Distribution1D};
use crate::error::{Error, Result};
use crate::hopf::{analytic_hopf_density, empirical_vs_analytic_report, run_hopf, EmpiricalReport};
use crate::metrics::{tvd, TvdReport};
use crate::pce::{pce_of_demand, PceVector};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub network: Network,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Monte-Carlo sample count for the empirical cross-check (0 skips it).
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_deltas() -> Vec<f64> {
    vec![2.0, 3.0]
}

fn default_samples() -> usize {
    10_000
}

/// Built-in example configurations.
///
/// `c1`: wide bound, equal quadratic costs. `c1b`: wide bound, asymmetric
/// quadratic costs. `c2`: tight bound on generator 1.
pub fn builtin(name: &str) -> Option<Scenario> {
    let d = DemandSpec::Random(example_demand());
    let network = match name {
        "c1" => three_bus(0.2, 0.2, 0.5, 0.6, 1.5, d),
        "c1b" => three_bus(0.3, 0.2, 0.5, 0.6, 1.5, d),
        "c2" => three_bus(0.2, 0.2, 0.5, 0.6, 0.85, d),
        _ => return None,
    };
    Some(Scenario {
        name: name.to_string(),
        network,
        deltas: default_deltas(),
        samples: default_samples(),
        seed: 42,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let sc: Scenario = serde_json::from_str(&text)?;
    sc.network.validate().map_err(|e| e.in_stage("parse"))?;
    Ok(sc)
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub delta: f64,
    pub policy: Policy,
    /// Per-generator policy laws, generator order.
    #[serde(skip)]
    pub densities: Vec<MixedDensity1D>,
    /// Probability that every generation bound holds.
    pub p_sat: f64,
    /// Per-generator distance to the in-hindsight law.
    pub tvd: Vec<TvdReport>,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub demand: Distribution1D,
    pub demand_pce: PceVector,
    pub hopf: Vec<MixedDensity1D>,
    pub cases: Vec<CaseResult>,
    pub empirical: Vec<EmpiricalReport>,
}

/// Single-uncertain-bus demand expansion with the fixed demands folded
/// into the mean coefficient.
pub fn scenario_demand_pce(net: &Network) -> Result<(Distribution1D, PceVector)> {
    let uncertain: Vec<_> = net.uncertain_buses().collect();
    if uncertain.len() != 1 {
        return Err(Error::UnsupportedTopology(format!(
            "pipeline needs exactly one uncertain bus, got {}",
            uncertain.len()
        )));
    }
    let dist = match &uncertain[0].demand {
        DemandSpec::Random(d) => *d,
        DemandSpec::Fixed(_) => unreachable!(),
    };
    let mut pce = pce_of_demand(&dist)?;
    let fixed: f64 = net
        .buses
        .iter()
        .filter(|b| !b.demand.is_random())
        .map(|b| b.demand.mean())
        .sum();
    if fixed != 0.0 {
        pce.coeffs[0].push(fixed);
        for l in 1..pce.coeffs.len() {
            pce.coeffs[l].push(0.0);
        }
    }
    Ok((dist, pce))
}

/// Exact probability that all generation bounds hold under the policy:
/// each affine constraint maps to a demand half-line, so the joint event
/// is one demand interval.
pub fn satisfaction_probability(
    policy: &Policy,
    demand: &Distribution1D,
    bounds: &[(f64, f64)],
) -> Result<f64> {
    let pce = pce_of_demand(demand)?;
    let pd0 = pce.coeffs[0][0];
    let pd1 = pce.coeffs[1][0];
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (i, &(bmin, bmax)) in bounds.iter().enumerate() {
        let a0 = policy.alpha[0][i];
        let a1 = policy.alpha[1][i];
        let slope = if pd1 == 0.0 { 0.0 } else { a1 / pd1 };
        let intercept = a0 - slope * pd0;
        for (coef, rhs) in [(slope, bmax - intercept), (-slope, intercept - bmin)] {
            // coef·pd ≤ rhs
            if coef > 0.0 {
                hi = hi.min(rhs / coef);
            } else if coef < 0.0 {
                lo = lo.max(rhs / coef);
            } else if rhs < 0.0 {
                return Ok(0.0);
            }
        }
    }
    if lo >= hi {
        return Ok(0.0);
    }
    Ok((demand.cdf(hi) - demand.cdf(lo)).clamp(0.0, 1.0))
}

/// Run the full pipeline for one scenario.
pub fn run_scenario(sc: &Scenario) -> Result<ScenarioResult> {
    sc.network.validate().map_err(|e| e.in_stage("validate"))?;
    let (demand, demand_pce) =
        scenario_demand_pce(&sc.network).map_err(|e| e.in_stage("expand-demand"))?;
    let hopf = analytic_hopf_density(&sc.network).map_err(|e| e.in_stage("hindsight-law"))?;

    let bounds: Vec<(f64, f64)> = sc.network.generators().map(|g| (g.p_min, g.p_max)).collect();
    let mut cases = Vec::new();
    for &delta in &sc.deltas {
        let spec = ChanceSpec {
            delta,
            bounds: bounds.clone(),
        };
        let policy =
            solve_ccopf(&sc.network, &demand_pce, &spec).map_err(|e| e.in_stage("policy"))?;
        let mut densities = Vec::new();
        let mut tvds = Vec::new();
        for bus in 0..bounds.len() {
            let dens = policy_density(&policy, &demand, bus).map_err(|e| e.in_stage("policy-law"))?;
            tvds.push(tvd(&hopf[bus], &dens).map_err(|e| e.in_stage("distance"))?);
            densities.push(dens);
        }
        let p_sat = satisfaction_probability(&policy, &demand, &bounds)
            .map_err(|e| e.in_stage("satisfaction"))?;
        cases.push(CaseResult {
            delta,
            policy,
            densities,
            p_sat,
            tvd: tvds,
        });
    }

    let mut empirical = Vec::new();
    if sc.samples > 0 {
        let emp = run_hopf(&sc.network, sc.samples, sc.seed).map_err(|e| e.in_stage("sampling"))?;
        for bus in 0..bounds.len() {
            empirical.push(empirical_vs_analytic_report(&emp, &hopf[bus], bus));
        }
    }

    Ok(ScenarioResult {
        scenario: sc.clone(),
        demand,
        demand_pce,
        hopf,
        cases,
        empirical,
    })
}

const GRID_POINTS: usize = 201;

fn fmt_delta(delta: f64) -> String {
    if delta == delta.trunc() {
        format!("{}", delta as i64)
    } else {
        format!("{delta}").replace('.', "p")
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut f = fs::File::create(&path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(contents.as_bytes()).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

fn csv_of_grid(header: &str, rows: &[(f64, f64)]) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for (x, y) in rows {
        s.push_str(&format!("{x:.5e},{y:.5e}\n"));
    }
    s
}

#[derive(Serialize)]
struct SummaryCase {
    delta: f64,
    p_sat: f64,
    tvd_bus1: f64,
    tvd_bus2: f64,
}

#[derive(Serialize)]
struct Summary {
    scenario: String,
    seed: u64,
    samples: usize,
    hopf_atoms: Vec<Vec<(f64, f64)>>,
    cases: Vec<SummaryCase>,
}

/// Write the figure-ready CSV grids and a summary JSON into `out_dir`.
/// Output is a pure function of the result, byte for byte.
pub fn emit_figure_data(res: &ScenarioResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();

    let (dlo, dhi) = res.demand.support();
    let demand_rows: Vec<(f64, f64)> = (0..GRID_POINTS)
        .map(|k| {
            let x = dlo + (dhi - dlo) * k as f64 / (GRID_POINTS - 1) as f64;
            (x, res.demand.pdf(x))
        })
        .collect();
    written.push(write_file(
        out_dir,
        "pdf_demand.csv",
        &csv_of_grid("x,density", &demand_rows),
    )?);

    for (bus, law) in res.hopf.iter().enumerate() {
        written.push(write_file(
            out_dir,
            &format!("pdf_hopf_bus{}.csv", bus + 1),
            &csv_of_grid("x,density", &law.grid(GRID_POINTS)),
        )?);
        let mut atoms = String::from("location,mass\n");
        for a in &law.atoms {
            atoms.push_str(&format!("{:.5e},{:.5e}\n", a.location, a.mass));
        }
        written.push(write_file(
            out_dir,
            &format!("atoms_hopf_bus{}.csv", bus + 1),
            &atoms,
        )?);
    }

    for case in &res.cases {
        for (bus, law) in case.densities.iter().enumerate() {
            written.push(write_file(
                out_dir,
                &format!("pdf_ccopf_bus{}_d{}.csv", bus + 1, fmt_delta(case.delta)),
                &csv_of_grid("x,density", &law.grid(GRID_POINTS)),
            )?);
        }
    }

    let summary = Summary {
        scenario: res.scenario.name.clone(),
        seed: res.scenario.seed,
        samples: res.scenario.samples,
        hopf_atoms: res
            .hopf
            .iter()
            .map(|law| law.atoms.iter().map(|a| (a.location, a.mass)).collect())
            .collect(),
        cases: res
            .cases
            .iter()
            .map(|c| SummaryCase {
                delta: c.delta,
                p_sat: c.p_sat,
                tvd_bus1: c.tvd[0].value,
                tvd_bus2: c.tvd.get(1).map_or(f64::NAN, |t| t.value),
            })
            .collect(),
    };
    written.push(write_file(
        out_dir,
        "summary.json",
        &format!("{}\n", serde_json::to_string_pretty(&summary)?),
    )?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn builtins_parse_and_validate() {
        for name in ["c1", "c1b", "c2"] {
            let sc = builtin(name).unwrap();
            sc.network.validate().unwrap();
        }
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn scenario_roundtrips_through_json() {
        let sc = builtin("c2").unwrap();
        let text = serde_json::to_string(&sc).unwrap();
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(back.name, "c2");
        assert_eq!(back.network.buses.len(), 3);
        assert_eq!(back.deltas, vec![2.0, 3.0]);
    }

    #[test]
    fn c2_summary_numbers() {
        let mut sc = builtin("c2").unwrap();
        sc.samples = 0;
        let res = run_scenario(&sc).unwrap();
        assert_eq!(res.cases.len(), 2);
        let d2 = &res.cases[0];
        assert_abs_diff_eq!(d2.p_sat, 0.9651, epsilon = 5e-4);
        assert_abs_diff_eq!(d2.tvd[0].value, 0.3199, epsilon = 5e-3);
        assert_abs_diff_eq!(d2.tvd[1].value, 0.1883, epsilon = 5e-3);
        let d3 = &res.cases[1];
        assert_abs_diff_eq!(d3.p_sat, 0.9986, epsilon = 5e-4);
        assert_abs_diff_eq!(d3.tvd[0].value, 0.4737, epsilon = 5e-3);
        assert_abs_diff_eq!(d3.tvd[1].value, 0.2452, epsilon = 5e-3);
    }

    #[test]
    fn c1_distance_is_zero() {
        let mut sc = builtin("c1").unwrap();
        sc.samples = 0;
        let res = run_scenario(&sc).unwrap();
        for case in &res.cases {
            assert_abs_diff_eq!(case.p_sat, 1.0, epsilon = 1e-9);
            for t in &case.tvd {
                assert!(t.value < 1e-6, "distance {} should vanish", t.value);
            }
        }
    }

    #[test]
    fn emit_is_deterministic() {
        let mut sc = builtin("c2").unwrap();
        sc.samples = 0;
        let res = run_scenario(&sc).unwrap();
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let w1 = emit_figure_data(&res, dir1.path()).unwrap();
        let w2 = emit_figure_data(&res, dir2.path()).unwrap();
        assert_eq!(w1.len(), w2.len());
        for (a, b) in w1.iter().zip(&w2) {
            let ba = fs::read(a).unwrap();
            let bb = fs::read(b).unwrap();
            assert_eq!(ba, bb, "output differs for {}", a.display());
        }
        let names: Vec<String> = w1
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert!(names.contains(&"pdf_demand.csv".to_string()));
        assert!(names.contains(&"pdf_hopf_bus1.csv".to_string()));
        assert!(names.contains(&"atoms_hopf_bus1.csv".to_string()));
        assert!(names.contains(&"pdf_ccopf_bus1_d2.csv".to_string()));
        assert!(names.contains(&"summary.json".to_string()));
    }

    #[test]
    fn summary_json_parses() {
        let mut sc = builtin("c2").unwrap();
        sc.samples = 0;
        let res = run_scenario(&sc).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_figure_data(&res, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["scenario"], "c2");
        assert_eq!(v["cases"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn empirical_reports_present() {
        let mut sc = builtin("c2").unwrap();
        sc.samples = 2000;
        let res = run_scenario(&sc).unwrap();
        assert_eq!(res.empirical.len(), 2);
        assert!(res.empirical[0].ks_statistic < res.empirical[0].ks_critical_1pct * 2.0);
    }

    #[test]
    fn load_scenario_from_file() {
        let sc = builtin("c1b").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.json");
        fs::write(&path, serde_json::to_string(&sc).unwrap()).unwrap();
        let back = load_scenario(&path).unwrap();
        assert_eq!(back.name, "c1b");
        assert!(load_scenario(&dir.path().join("missing.json")).is_err());
    }

    #[test]
    fn satisfaction_closed_form_c2() {
        let mut sc = builtin("c2").unwrap();
        sc.samples = 0;
        let res = run_scenario(&sc).unwrap();
        // joint equals the single binding generator's marginal here
        let p = &res.cases[0].policy;
        let marginal =
            crate::ccopf::violation_probability(p, &res.demand, 0, 0.85).unwrap();
        assert_abs_diff_eq!(res.cases[0].p_sat, marginal, epsilon = 1e-12);
    }
}
