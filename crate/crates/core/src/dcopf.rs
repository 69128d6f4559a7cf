//! DC optimal power flow model layer: network description, deterministic
//! problem assembly, and the argmin operator (generic solver path plus the
//! two-generator closed form).
//!
//! Power demand is counted negative throughout; the solvers themselves do
//! not enforce the sign convention.

use crate::dist::Distribution1D;
use crate::error::{Error, Result};
use crate::qp::{solve_box_qp, QpProblem, QpSolution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DemandSpec {
    Fixed(f64),
    Random(Distribution1D),
}

impl DemandSpec {
    pub fn is_random(&self) -> bool {
        matches!(self, DemandSpec::Random(d) if !matches!(d, Distribution1D::Dirac { .. }))
    }

    pub fn mean(&self) -> f64 {
        match self {
            DemandSpec::Fixed(v) => *v,
            DemandSpec::Random(d) => d.mean(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    #[serde(default)]
    pub has_generator: bool,
    /// Quadratic cost H_ii (cost/unit²); required for generators.
    #[serde(default)]
    pub cost_quadratic: f64,
    /// Linear cost h_i (cost/unit).
    #[serde(default)]
    pub cost_linear: f64,
    #[serde(default = "neg_inf", with = "lower_bound")]
    pub p_min: f64,
    #[serde(default = "pos_inf", with = "upper_bound")]
    pub p_max: f64,
    #[serde(default = "zero_demand")]
    pub demand: DemandSpec,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}
fn pos_inf() -> f64 {
    f64::INFINITY
}
fn zero_demand() -> DemandSpec {
    DemandSpec::Fixed(0.0)
}

/// JSON has no infinities; absent/null bounds mean "unbounded".
macro_rules! bound_serde {
    ($name:ident, $default:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
                if v.is_finite() {
                    s.serialize_f64(*v)
                } else {
                    s.serialize_none()
                }
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                Ok(Option::<f64>::deserialize(d)?.unwrap_or($default))
            }
        }
    };
}
bound_serde!(lower_bound, f64::NEG_INFINITY);
bound_serde!(upper_bound, f64::INFINITY);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    pub buses: Vec<Bus>,
}

impl Network {
    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::HashSet::new();
        let mut any_gen = false;
        for b in &self.buses {
            if !ids.insert(b.id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate bus id `{}`", b.id)));
            }
            if b.has_generator {
                any_gen = true;
                if !(b.cost_quadratic > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "generator at bus `{}` needs a positive quadratic cost",
                        b.id
                    )));
                }
                if b.p_min > b.p_max {
                    return Err(Error::InvalidInput(format!(
                        "generator at bus `{}` has p_min > p_max",
                        b.id
                    )));
                }
            }
            if let DemandSpec::Random(d) = &b.demand {
                d.validate()?;
            }
        }
        if !any_gen {
            return Err(Error::InvalidInput("network has no generator".into()));
        }
        Ok(())
    }

    pub fn generators(&self) -> impl Iterator<Item = &Bus> {
        self.buses.iter().filter(|b| b.has_generator)
    }

    pub fn n_generators(&self) -> usize {
        self.generators().count()
    }

    /// Buses with genuinely random demand.
    pub fn uncertain_buses(&self) -> impl Iterator<Item = &Bus> {
        self.buses.iter().filter(|b| b.demand.is_random())
    }

    /// Demand vector at the per-bus realizations' mean.
    pub fn mean_demand(&self) -> Vec<f64> {
        self.buses.iter().map(|b| b.demand.mean()).collect()
    }
}

/// Closed-form argmin parameters for the two-generator case.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ArgminCaseSplit {
    pub beta: f64,
    pub gamma: f64,
    /// (p₁^max + β)/γ: the bound binds once −p^d reaches this value.
    pub switch_point: f64,
}

impl ArgminCaseSplit {
    pub fn for_network(net: &Network) -> Result<ArgminCaseSplit> {
        let gens: Vec<&Bus> = net.generators().collect();
        if gens.len() != 2 {
            return Err(Error::UnsupportedTopology(format!(
                "case-split argmin needs exactly two generators, got {}",
                gens.len()
            )));
        }
        let (g1, g2) = (gens[0], gens[1]);
        let beta = (g1.cost_linear - g2.cost_linear) / (g1.cost_quadratic + g2.cost_quadratic);
        let gamma = g2.cost_quadratic / (g1.cost_quadratic + g2.cost_quadratic);
        Ok(ArgminCaseSplit {
            beta,
            gamma,
            switch_point: (g1.p_max + beta) / gamma,
        })
    }
}

/// Assemble the deterministic DC-OPF QP for a demand realization.
pub fn build_qp(net: &Network, demand_realization: &[f64]) -> QpProblem {
    assert_eq!(demand_realization.len(), net.buses.len());
    let mut h_diag = Vec::new();
    let mut h_lin = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for b in net.generators() {
        h_diag.push(b.cost_quadratic);
        h_lin.push(b.cost_linear);
        lower.push(b.p_min);
        upper.push(b.p_max);
    }
    QpProblem {
        h_diag,
        h_lin,
        balance_rhs: demand_realization.iter().sum(),
        lower,
        upper,
    }
}

/// Per-realization optimal generation.
pub fn argmin(net: &Network, demand_realization: &[f64]) -> Result<QpSolution> {
    solve_box_qp(&build_qp(net, demand_realization))
}

/// Two-branch closed form: share the load by (β, γ) below the switch
/// point, clamp generator 1 at its limit above it.
pub fn closed_form_argmin(cs: &ArgminCaseSplit, p1_max: f64, demand: f64) -> [f64; 2] {
    if -demand < cs.switch_point {
        [
            -cs.beta - cs.gamma * demand,
            cs.beta - (1.0 - cs.gamma) * demand,
        ]
    } else {
        [p1_max, -(demand + p1_max)]
    }
}

/// A minimal three-bus network: generators at buses 1 and 2, one load
/// at bus 3.
pub fn three_bus(h11: f64, h22: f64, h1: f64, h2: f64, p1_max: f64, demand: DemandSpec) -> Network {
    Network {
        buses: vec![
            Bus {
                id: "bus1".into(),
                has_generator: true,
                cost_quadratic: h11,
                cost_linear: h1,
                p_min: f64::NEG_INFINITY,
                p_max: p1_max,
                demand: DemandSpec::Fixed(0.0),
            },
            Bus {
                id: "bus2".into(),
                has_generator: true,
                cost_quadratic: h22,
                cost_linear: h2,
                p_min: f64::NEG_INFINITY,
                p_max: f64::INFINITY,
                demand: DemandSpec::Fixed(0.0),
            },
            Bus {
                id: "bus3".into(),
                has_generator: false,
                cost_quadratic: 0.0,
                cost_linear: 0.0,
                p_min: f64::NEG_INFINITY,
                p_max: f64::INFINITY,
                demand,
            },
        ],
    }
}
