//! Table of the three estimates per (set, alpha, n) with their ratios.

use super::energy::{gamma_plus_energy_with, riesz_capacity_wolff_with, OptimizerConfig};
use super::lp::{gamma_plus_lp, LPConfig};
use super::{CapacityEstimate, Diagnostics};
use crate::error::{invalid, Result};
use crate::io::fmt17;
use crate::kernels::KernelParams;
use crate::measures::WolffParams;
use crate::sets::{PointCloud, SetSpec};
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const CSV_HEADER: &str =
    "set,generation,alpha,n,gamma_lp,gamma_energy,riesz_wolff,ratio_lp_wolff,ratio_energy_wolff,status";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub lp: LPConfig,
    pub opt: OptimizerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostics {
    pub lp: Option<Diagnostics>,
    pub energy: Option<Diagnostics>,
    pub wolff: Option<Diagnostics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub set: String,
    pub generation: u64,
    pub alpha: f64,
    pub n: u32,
    pub gamma_lp: f64,
    pub gamma_energy: f64,
    pub riesz_wolff: f64,
    pub ratio_lp_wolff: f64,
    pub ratio_energy_wolff: f64,
    pub status: String,
    pub atoms: usize,
    pub diagnostics: RowDiagnostics,
}

impl ExperimentRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn csv_record(&self) -> [String; 10] {
        [
            self.set.clone(),
            self.generation.to_string(),
            fmt17(self.alpha),
            self.n.to_string(),
            fmt17(self.gamma_lp),
            fmt17(self.gamma_energy),
            fmt17(self.riesz_wolff),
            fmt17(self.ratio_lp_wolff),
            fmt17(self.ratio_energy_wolff),
            self.status.clone(),
        ]
    }
}

type Outcome = std::result::Result<CapacityEstimate, String>;

fn value_of(o: &Outcome) -> f64 {
    o.as_ref().map_or(f64::NAN, |e| e.value)
}

fn status_part(name: &str, o: &Outcome, bad: &mut Vec<String>, errors: &mut Vec<String>) {
    match o {
        Ok(e) if e.status().is_success() => {}
        Ok(e) => bad.push(format!("{name}={}", e.status().as_str())),
        Err(msg) => {
            bad.push(format!("{name}=error"));
            errors.push(format!("{name}: {msg}"));
        }
    }
}

/// Generates each set and runs [`comparability_experiment_with`].
pub fn comparability_experiment(
    sets: &[SetSpec],
    alphas: &[f64],
    ns: &[u32],
    cfg: &LPConfig,
) -> Result<Vec<ExperimentRow>> {
    let clouds = sets.iter().map(SetSpec::generate).collect::<Result<Vec<_>>>()?;
    comparability_experiment_with(
        &clouds,
        alphas,
        ns,
        &ExperimentConfig {
            lp: cfg.clone(),
            opt: OptimizerConfig::default(),
        },
    )
}

/// Rows in (set, alpha, n) order. Estimator failures are recorded per row.
/// The Wolff estimate depends on alpha only and is shared across `n`.
pub fn comparability_experiment_with(
    clouds: &[PointCloud],
    alphas: &[f64],
    ns: &[u32],
    cfg: &ExperimentConfig,
) -> Result<Vec<ExperimentRow>> {
    if clouds.is_empty() || alphas.is_empty() || ns.is_empty() {
        return Err(invalid("need at least one set, one alpha and one n"));
    }
    if let Some(a) = alphas.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {a}")));
    }
    if ns.contains(&0) {
        return Err(invalid("n must be at least 1"));
    }
    let mut rows = Vec::new();
    for cloud in clouds {
        for &alpha in alphas {
            let wolff: Outcome = WolffParams::for_alpha(alpha)
                .and_then(|wp| riesz_capacity_wolff_with(cloud, &wp, &cfg.opt))
                .map_err(|e| e.to_string());
            for &n in ns {
                let params = KernelParams::new(alpha, n, cloud.d).map_err(|e| e.to_string());
                let lp: Outcome = params
                    .clone()
                    .and_then(|p| gamma_plus_lp(cloud, &p, &cfg.lp).map_err(|e| e.to_string()));
                let energy: Outcome = params
                    .and_then(|p| gamma_plus_energy_with(cloud, &p, &cfg.opt).map_err(|e| e.to_string()));
                let mut bad = Vec::new();
                let mut errors = Vec::new();
                status_part("lp", &lp, &mut bad, &mut errors);
                status_part("energy", &energy, &mut bad, &mut errors);
                status_part("wolff", &wolff, &mut bad, &mut errors);
                let (g_lp, g_en, c) = (value_of(&lp), value_of(&energy), value_of(&wolff));
                rows.push(ExperimentRow {
                    set: cloud.provenance.label(),
                    generation: cloud.provenance.resolution,
                    alpha,
                    n,
                    gamma_lp: g_lp,
                    gamma_energy: g_en,
                    riesz_wolff: c,
                    ratio_lp_wolff: g_lp / c,
                    ratio_energy_wolff: g_en / c,
                    status: if bad.is_empty() {
                        "ok".to_string()
                    } else {
                        bad.join(";")
                    },
                    atoms: cloud.len(),
                    diagnostics: RowDiagnostics {
                        lp: lp.ok().map(|e| e.diagnostics),
                        energy: energy.ok().map(|e| e.diagnostics),
                        wolff: wolff.as_ref().ok().map(|e| e.diagnostics.clone()),
                        errors,
                    },
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(out: W, rows: &[ExperimentRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.write_record(r.csv_record())?;
    }
    w.flush()
}
