//! `disentangle`: per-coupling optimal measurement angles on the middle
//! pair of the four-qubit chain, outcome probabilities, residual end-pair
//! entanglement, the fixed-angle (unadapted) baseline, and the postselected
//! POVM's failure probability at the requested scale.

use serde::Serialize;

use clusterchain::disentangle::{
    build_povm, ground4, maximal_c, optimize_disentangling_angles,
};

use crate::config::{Common, Grid};
use crate::output::{Cell, Meta, Table};
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct DisentangleConfig {
    pub j: Grid,
    pub c: f64,
}

pub fn resolve(
    args: &crate::DisentangleArgs,
    file: crate::config::DisentangleFile,
) -> Result<DisentangleConfig, CliError> {
    let cfg = DisentangleConfig {
        j: args.j.clone().or(file.j).unwrap_or(Grid::Range { start: 0.0, stop: 2.0, steps: 21 }),
        c: args.c.or(file.c).unwrap_or(0.8),
    };
    if !(cfg.c > 0.0 && cfg.c <= 1.0) {
        return Err(CliError::config(format!("c must lie in (0, 1], got {}", cfg.c)));
    }
    for j in cfg.j.values()? {
        if j < 0.0 {
            return Err(CliError::config(format!("couplings must be ≥ 0, got {j}")));
        }
    }
    Ok(cfg)
}

pub fn run(cfg: &DisentangleConfig, common: &Common) -> Result<(Meta, Table), CliError> {
    let mut table = Table::new(vec![
        "j",
        "theta_minus",
        "theta_zero",
        "theta_plus",
        "p_minus",
        "p_zero",
        "p_plus",
        "residual_worst",
        "unadapted_minus",
        "unadapted_zero",
        "unadapted_plus",
        "max_c",
        "failure_probability",
    ]);
    for j in cfg.j.values()? {
        let result = optimize_disentangling_angles(j)?;
        let angles = result.angles();
        let povm = build_povm(&angles, cfg.c)?;
        let state = ground4(j)?;
        let worst = result
            .outcomes
            .iter()
            .map(|o| o.residual)
            .fold(0.0f64, f64::max);
        table.push(vec![
            j.into(),
            result.outcome(-1).angle.into(),
            result.outcome(0).angle.into(),
            result.outcome(1).angle.into(),
            result.outcome(-1).probability.into(),
            result.outcome(0).probability.into(),
            result.outcome(1).probability.into(),
            Cell::from(worst),
            result.outcome(-1).unadapted_weighted_residual.into(),
            result.outcome(0).unadapted_weighted_residual.into(),
            result.outcome(1).unadapted_weighted_residual.into(),
            maximal_c(&angles).into(),
            povm.failure_probability(&state).into(),
        ]);
    }
    Ok((super::meta_for("disentangle", common, cfg), table))
}
