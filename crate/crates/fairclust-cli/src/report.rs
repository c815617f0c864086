//! Versioned JSON report shapes. Field order is fixed by declaration, so a
//! given report serializes byte-identically across runs; anything that can
//! vary between identical configs (wall-clock timings) is opt-in.

use fairclust_core::facility_location::{CertificateChain, FlResult};
use fairclust_core::geometry::PointId;
use fairclust_core::lp::{LinearProgram, Relation};
use fairclust_core::oracle::{OracleResult, OracleValue, OracleWitness};
use fairclust_core::reductions::SolveReport;
use serde::Serialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct TimingsJson {
    pub total_ms: f64,
}

#[derive(Serialize)]
pub struct LinkJson {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Serialize)]
pub struct ChainJson {
    pub p: f64,
    pub z_lp: f64,
    pub z_lp_consolidated: f64,
    pub cost_prime: f64,
    pub t_prime: f64,
    pub t_half: f64,
    pub cost_half: f64,
    pub h_tilde_prime: f64,
    pub h_tilde: f64,
    pub cost_tilde: f64,
    pub final_cost: f64,
    pub links: Vec<LinkJson>,
}

impl ChainJson {
    pub fn from_chain(chain: &CertificateChain) -> Self {
        ChainJson {
            p: chain.p,
            z_lp: chain.z_lp,
            z_lp_consolidated: chain.z_lp_consolidated,
            cost_prime: chain.cost_prime,
            t_prime: chain.t_prime,
            t_half: chain.t_half,
            cost_half: chain.cost_half,
            h_tilde_prime: chain.h_tilde_prime,
            h_tilde: chain.h_tilde,
            cost_tilde: chain.cost_tilde,
            final_cost: chain.final_cost,
            links: chain
                .links()
                .into_iter()
                .map(|l| LinkJson { name: l.name, lhs: l.lhs, rhs: l.rhs })
                .collect(),
        }
    }
}

/// Report for `--mode lp-round` / `--mode kcenter` on a point dataset.
#[derive(Serialize)]
pub struct SolveReportJson {
    pub schema_version: u32,
    pub mode: &'static str,
    pub objective: &'static str,
    pub k: usize,
    pub alpha: f64,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub beta: f64,
    pub m: usize,
    pub centers: Vec<PointId>,
    pub cost: f64,
    pub fairness_max_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_chain: Option<ChainJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<TimingsJson>,
}

impl SolveReportJson {
    pub fn new(
        mode: &'static str,
        objective: &'static str,
        rep: &SolveReport,
        timings: Option<TimingsJson>,
    ) -> Self {
        SolveReportJson {
            schema_version: SCHEMA_VERSION,
            mode,
            objective,
            k: rep.k,
            alpha: rep.alpha,
            epsilon: rep.epsilon,
            p: rep.p,
            beta: rep.beta,
            m: rep.m,
            centers: rep.centers.clone(),
            cost: rep.cost,
            fairness_max_ratio: rep.fairness_max_ratio,
            certificate_chain: rep.chain.as_ref().map(ChainJson::from_chain),
            timings,
        }
    }
}

#[derive(Serialize)]
pub struct AssignmentJson {
    pub client: u64,
    pub facility: u64,
}

/// Report for `--mode lp-round` on a raw facility-location instance.
#[derive(Serialize)]
pub struct FlReportJson {
    pub schema_version: u32,
    pub mode: &'static str,
    pub objective: &'static str,
    pub p: f64,
    pub open: Vec<u64>,
    pub assignment: Vec<AssignmentJson>,
    pub cost: f64,
    pub certificate_chain: ChainJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<TimingsJson>,
}

impl FlReportJson {
    pub fn new(
        res: &FlResult,
        p: f64,
        facility_ids: &[u64],
        client_ids: &[u64],
        timings: Option<TimingsJson>,
    ) -> Self {
        FlReportJson {
            schema_version: SCHEMA_VERSION,
            mode: "lp-round",
            objective: "facility-location",
            p,
            open: res.open.iter().map(|&u| facility_ids[u]).collect(),
            assignment: res
                .assignment
                .iter()
                .enumerate()
                .map(|(v, &u)| AssignmentJson { client: client_ids[v], facility: facility_ids[u] })
                .collect(),
            cost: res.cost,
            certificate_chain: ChainJson::from_chain(&res.chain),
            timings,
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessJson {
    Centers { ids: Vec<PointId> },
    Facilities { ids: Vec<u64> },
    GridPoint { coords: Vec<f64> },
    None,
}

#[derive(Serialize)]
pub struct OracleReportJson {
    pub schema_version: u32,
    pub mode: &'static str,
    pub objective: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub infeasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub witness: WitnessJson,
    pub search_space: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<TimingsJson>,
}

impl OracleReportJson {
    pub fn new(
        objective: &'static str,
        k: Option<usize>,
        alpha: Option<f64>,
        p: Option<f64>,
        res: &OracleResult,
        facility_ids: Option<&[u64]>,
        timings: Option<TimingsJson>,
    ) -> Self {
        let witness = match &res.witness {
            OracleWitness::Centers(ids) => WitnessJson::Centers { ids: ids.clone() },
            OracleWitness::Facilities(idxs) => WitnessJson::Facilities {
                ids: idxs
                    .iter()
                    .map(|&u| facility_ids.map_or(u as u64, |ids| ids[u]))
                    .collect(),
            },
            OracleWitness::GridPoint(coords) => WitnessJson::GridPoint { coords: coords.clone() },
            OracleWitness::None => WitnessJson::None,
        };
        OracleReportJson {
            schema_version: SCHEMA_VERSION,
            mode: "oracle",
            objective,
            k,
            alpha,
            p,
            infeasible: res.value == OracleValue::Infeasible,
            value: res.value.finite(),
            witness,
            search_space: res.search_space,
            timings,
        }
    }
}

#[derive(Serialize)]
pub struct AuditReportJson {
    pub schema_version: u32,
    pub mode: &'static str,
    pub k: usize,
    pub centers: Vec<PointId>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

#[derive(Serialize)]
pub struct VariableJson {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

#[derive(Serialize)]
pub struct CoefficientJson {
    pub var: usize,
    pub coef: f64,
}

#[derive(Serialize)]
pub struct ConstraintJson {
    pub relation: &'static str,
    pub rhs: f64,
    pub coeffs: Vec<CoefficientJson>,
}

/// Flat serialization of a linear program for `--dump-lp`.
#[derive(Serialize)]
pub struct LpDumpJson {
    pub schema_version: u32,
    pub variables: Vec<VariableJson>,
    pub constraints: Vec<ConstraintJson>,
}

impl LpDumpJson {
    pub fn from_lp(lp: &LinearProgram) -> Self {
        LpDumpJson {
            schema_version: SCHEMA_VERSION,
            variables: lp
                .variables
                .iter()
                .map(|v| VariableJson {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                    objective: v.objective,
                })
                .collect(),
            constraints: lp
                .constraints
                .iter()
                .map(|c| ConstraintJson {
                    relation: match c.relation {
                        Relation::Le => "le",
                        Relation::Ge => "ge",
                        Relation::Eq => "eq",
                    },
                    rhs: c.rhs,
                    coeffs: c
                        .coeffs
                        .iter()
                        .map(|&(var, coef)| CoefficientJson { var, coef })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Pretty JSON with a trailing newline, the one report encoding everywhere.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Input(format!("cannot encode report: {e}")))
}
