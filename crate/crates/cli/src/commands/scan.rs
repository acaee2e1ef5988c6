//! `scan`: exhaustive two-angle search for a projective or adaptive
//! disentangling measurement (no postselection). Reports, per coupling, the
//! best achievable worst-branch residual for both schemes and whether it
//! clears the success tolerance.

use serde::Serialize;

use clusterchain::disentangle::adaptive_scan;

use crate::config::{Common, Grid};
use crate::output::{Cell, Meta, Table};
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct ScanConfig {
    pub j: Grid,
    pub resolution: f64,
}

pub fn resolve(args: &crate::ScanArgs, file: crate::config::ScanFile) -> Result<ScanConfig, CliError> {
    let cfg = ScanConfig {
        j: args.j.clone().or(file.j).unwrap_or(Grid::List(vec![0.5, 1.0])),
        resolution: args.resolution.or(file.resolution).unwrap_or(1e-3),
    };
    if !(cfg.resolution > 0.0 && cfg.resolution <= 1e-2) {
        return Err(CliError::config(format!(
            "resolution must lie in (0, 1e-2] rad, got {}",
            cfg.resolution
        )));
    }
    for j in cfg.j.values()? {
        if j < 0.0 {
            return Err(CliError::config(format!("couplings must be ≥ 0, got {j}")));
        }
    }
    Ok(cfg)
}

pub fn run(cfg: &ScanConfig, common: &Common) -> Result<(Meta, Table), CliError> {
    let mut table = Table::new(vec![
        "j",
        "resolution",
        "projective_possible",
        "projective_theta1",
        "projective_theta2",
        "projective_residual",
        "adaptive_possible",
        "adaptive_theta1",
        "adaptive_theta2_plus",
        "adaptive_theta2_minus",
        "adaptive_residual",
    ]);
    for j in cfg.j.values()? {
        let report = adaptive_scan(j, cfg.resolution)?;
        table.push(vec![
            j.into(),
            cfg.resolution.into(),
            report.projective.possible.into(),
            report.projective.theta1.into(),
            report.projective.theta2[0].into(),
            Cell::from(report.projective.worst_residual),
            report.adaptive.possible.into(),
            report.adaptive.theta1.into(),
            report.adaptive.theta2[0].into(),
            report.adaptive.theta2[1].into(),
            Cell::from(report.adaptive.worst_residual),
        ]);
    }
    Ok((super::meta_for("scan", common, cfg), table))
}
