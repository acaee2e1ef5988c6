//! `exact`: free-fermion ring solution over a coupling grid — ground
//! energy, gap, and the three string correlators at half-ring separation.
//! The longitudinal field must vanish (that is what makes the model free),
//! and small rings can be cross-checked against dense diagonalization.

use serde::Serialize;

use clusterchain::chain::{ChainParams, Hamiltonian};
use clusterchain::fermion::{solve_ground, StringSpec};
use clusterchain::oracle::{lanczos_ground, LanczosOptions};

use crate::config::{half_ring_separation, Common, Grid};
use crate::output::{Cell, Meta, Table};
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct ExactConfig {
    pub ns: Vec<usize>,
    pub j: Grid,
    pub bx: f64,
    pub bz: f64,
    pub cross_check: bool,
}

pub fn resolve(args: &crate::ExactArgs, file: crate::config::ExactFile) -> Result<ExactConfig, CliError> {
    let cfg = ExactConfig {
        ns: args.ns.clone().or(file.ns).unwrap_or_else(|| vec![100, 200]),
        j: args.j.clone().or(file.j).unwrap_or(Grid::Range { start: 0.0, stop: 0.95, steps: 20 }),
        bx: args.bx.or(file.bx).unwrap_or(0.0),
        bz: file.bz.unwrap_or(0.0),
        cross_check: args.cross_check || file.cross_check.unwrap_or(false),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExactConfig) -> Result<(), CliError> {
    if cfg.bz != 0.0 {
        return Err(CliError::config(
            "exact solves the free-fermion line only; bz must be 0 (use vmps for bz ≠ 0)",
        ));
    }
    if cfg.ns.is_empty() {
        return Err(CliError::config("ns is empty"));
    }
    for &n in &cfg.ns {
        if n < 6 || n % 2 != 0 {
            return Err(CliError::config(format!(
                "string endpoints need an even ring of ≥ 6 sites, got {n}"
            )));
        }
        if cfg.cross_check && n > 14 {
            return Err(CliError::config(format!(
                "cross-check diagonalizes densely and handles n ≤ 14, got {n}"
            )));
        }
    }
    if !cfg.bx.is_finite() || cfg.bx < 0.0 {
        return Err(CliError::config(format!("bx must be finite and ≥ 0, got {}", cfg.bx)));
    }
    cfg.j.values().map(|_| ())
}

/// Mismatch above which the cross-check aborts the run. Looser than the
/// per-method accuracy because the dense and fermionic ground states may
/// split differently at near-degenerate points.
const CROSS_CHECK_TOL: f64 = 1e-6;

pub fn run(cfg: &ExactConfig, common: &Common) -> Result<(Meta, Table), CliError> {
    let mut columns = vec!["n", "j", "bx", "energy", "gap", "zx", "xz", "yy"];
    if cfg.cross_check {
        columns.extend(["oracle_zx", "oracle_xz", "oracle_yy", "cross_check_delta"]);
    }
    let mut table = Table::new(columns);

    for &n in &cfg.ns {
        let a = 2;
        let b = a + half_ring_separation(n);
        for j in cfg.j.values()? {
            let params = ChainParams::ring(n, j, cfg.bx, 0.0);
            let solution = solve_ground(&params)?;
            let specs =
                [StringSpec::zx(a, b), StringSpec::xz(a, b), StringSpec::yy(a, b)];
            let mut strings = [0.0; 3];
            for (slot, spec) in strings.iter_mut().zip(&specs) {
                *slot = solution.correlation.string_correlator(spec)?;
            }
            let mut row: Vec<Cell> = vec![
                n.into(),
                j.into(),
                cfg.bx.into(),
                solution.energy.into(),
                solution.gap.into(),
                strings[0].into(),
                strings[1].into(),
                strings[2].into(),
            ];
            if cfg.cross_check {
                let ham = Hamiltonian::standard(&params)?;
                let ground = lanczos_ground(&ham, &LanczosOptions::default())?;
                let mut worst = (ground.energy - solution.energy).abs();
                let mut oracle_vals = [0.0; 3];
                for (slot, spec) in oracle_vals.iter_mut().zip(&specs) {
                    let op = spec.build(n)?;
                    *slot = ground.state.expect_pauli(&op);
                }
                for (mine, oracle) in strings.iter().zip(&oracle_vals) {
                    worst = worst.max((mine - oracle).abs());
                }
                row.extend([
                    oracle_vals[0].into(),
                    oracle_vals[1].into(),
                    oracle_vals[2].into(),
                    Cell::from(worst),
                ]);
                if worst > CROSS_CHECK_TOL {
                    return Err(CliError::Runtime(anyhow::anyhow!(
                        "cross-check failed at n={n}, J={j}: dense and fermionic answers \
                         differ by {worst:.3e}"
                    )));
                }
            }
            table.push(row);
        }
    }
    Ok((super::meta_for("exact", common, cfg), table))
}
