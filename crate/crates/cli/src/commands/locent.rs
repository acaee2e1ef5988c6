//! `locent`: localizable entanglement between two ring sites under the
//! measure-and-correct protocol. `couplings` mode scans the Ising coupling
//! at fixed (half-ring) endpoints; `separations` mode sweeps the endpoint
//! distance at a fixed parameter point and classifies the decay as finite
//! or infinite entanglement length.
//!
//! State preparation: the zero-coupling, zero-transverse-field line has an
//! exact bond-dimension-2 ground state (any longitudinal field), used
//! directly; every other point runs the variational search first.

use serde::Serialize;

use clusterchain::chain::ChainParams;
use clusterchain::locent::{
    classify_entanglement_length, estimate_localizable_entanglement, exhaustive_protocol_means,
    LengthClass, ProtocolSpec,
};
use clusterchain::mps::{tilted_bz_mps, MatrixProductState};
use clusterchain::vmps::{best_of_restarts, VmpsConfig};

use crate::config::{half_ring_separation, Common, Grid, LocentMode};
use crate::output::{Cell, Meta, Table};
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct LocentRunConfig {
    pub mode: LocentMode,
    pub ns: Vec<usize>,
    pub j: Grid,
    pub bx: f64,
    pub bz: f64,
    pub bond_dim: usize,
    pub samples: usize,
    pub n_z: usize,
    pub restarts: usize,
    pub sweeps: usize,
    pub exhaustive: bool,
    pub separations: Option<Vec<usize>>,
}

pub fn resolve(args: &crate::LocentArgs, file: crate::config::LocentFile) -> Result<LocentRunConfig, CliError> {
    let cfg = LocentRunConfig {
        mode: args.mode.or(file.mode).unwrap_or(LocentMode::Couplings),
        ns: args.ns.clone().or(file.ns).unwrap_or_else(|| vec![60]),
        j: args.j.clone().or(file.j).unwrap_or(Grid::Range { start: 0.0, stop: 0.8, steps: 5 }),
        bx: args.bx.or(file.bx).unwrap_or(0.0),
        bz: args.bz.or(file.bz).unwrap_or(0.0),
        bond_dim: args.bond_dim.or(file.bond_dim).unwrap_or(8),
        samples: args.samples.or(file.samples).unwrap_or(2000),
        n_z: args.n_z.or(file.n_z).unwrap_or(2),
        restarts: args.restarts.or(file.restarts).unwrap_or(10),
        sweeps: args.sweeps.or(file.sweeps).unwrap_or(6),
        exhaustive: args.exhaustive || file.exhaustive.unwrap_or(false),
        separations: args.separations.clone().or(file.separations),
    };
    validate(&cfg)?;
    Ok(cfg)
}

/// Default separation sweep: odd distances from 3 up to the half ring,
/// thinned to at most eight values (the classifier needs at least five).
fn default_separations(n: usize) -> Vec<usize> {
    let max = half_ring_separation(n);
    let all: Vec<usize> = (3..=max).step_by(2).collect();
    if all.len() <= 8 {
        return all;
    }
    let stride = all.len().div_ceil(8);
    let mut picked: Vec<usize> = all.iter().copied().step_by(stride).collect();
    if picked.last() != all.last() {
        picked.push(*all.last().expect("non-empty by construction"));
    }
    picked
}

fn validate(cfg: &LocentRunConfig) -> Result<(), CliError> {
    if cfg.ns.is_empty() {
        return Err(CliError::config("ns is empty"));
    }
    if cfg.samples == 0 && !cfg.exhaustive {
        return Err(CliError::config("samples must be positive in Monte Carlo mode"));
    }
    let j_values = cfg.j.values()?;
    for &n in &cfg.ns {
        if n < 8 || n % 2 != 0 {
            return Err(CliError::config(format!("protocol needs an even ring ≥ 8, got n={n}")));
        }
        if cfg.exhaustive && n > 14 {
            return Err(CliError::config(format!(
                "exhaustive enumeration handles n ≤ 14, got {n}"
            )));
        }
        // Validate protocol geometry for every separation this run uses.
        let seps: Vec<usize> = match cfg.mode {
            LocentMode::Couplings => vec![half_ring_separation(n)],
            LocentMode::Separations => {
                cfg.separations.clone().unwrap_or_else(|| default_separations(n))
            }
        };
        for sep in seps {
            let spec = ProtocolSpec::with_buffers(n, 2, 2 + sep, cfg.n_z);
            spec.validate().map_err(|e| CliError::config(e.to_string()))?;
        }
    }
    match cfg.mode {
        LocentMode::Separations => {
            if j_values.len() != 1 {
                return Err(CliError::config(
                    "separations mode fixes the parameter point; give a single j value",
                ));
            }
            let min_pts = cfg
                .ns
                .iter()
                .map(|&n| {
                    cfg.separations.clone().unwrap_or_else(|| default_separations(n)).len()
                })
                .min()
                .unwrap_or(0);
            if min_pts < 5 {
                return Err(CliError::config(
                    "length classification needs at least 5 separations",
                ));
            }
        }
        LocentMode::Couplings => {}
    }
    // Any point away from the exact line needs the variational search.
    let needs_vmps = j_values.iter().any(|&j| j != 0.0) || cfg.bx != 0.0;
    if needs_vmps {
        for &n in &cfg.ns {
            if cfg.bond_dim < 2 || cfg.bond_dim > 1 << (n / 2 - 2).min(30) {
                return Err(CliError::config(format!(
                    "bond dimension {} unusable for variational preparation at n={n}",
                    cfg.bond_dim
                )));
            }
        }
        if cfg.restarts < 1 || cfg.sweeps < 1 {
            return Err(CliError::config("restarts and sweeps must be ≥ 1"));
        }
    }
    for value in [cfg.bx, cfg.bz] {
        if !value.is_finite() {
            return Err(CliError::config("fields must be finite"));
        }
    }
    Ok(())
}

/// Prepares the ring ground state at one parameter point.
fn prepare_state(
    n: usize,
    j: f64,
    bx: f64,
    bz: f64,
    cfg: &LocentRunConfig,
    seed: u64,
) -> Result<MatrixProductState, CliError> {
    if j == 0.0 && bx == 0.0 {
        return Ok(tilted_bz_mps(n, bz)?);
    }
    let params = ChainParams::ring(n, j, bx, bz);
    let vmps_config = VmpsConfig {
        bond_dim: cfg.bond_dim,
        n_sweeps: cfg.sweeps,
        n_restarts: cfg.restarts,
        rng_seed: seed,
        convergence_tol: 1e-10,
    };
    Ok(best_of_restarts(&params, &vmps_config)?.state)
}

/// One row's worth of measurement results for a protocol on a prepared
/// state, reporting both pair-entanglement measures.
struct Measured {
    method: &'static str,
    samples: usize,
    /// Mean concurrence and its standard error.
    el: (f64, f64),
    /// Mean entropy of entanglement (bits) and its standard error.
    entropy: (f64, f64),
}

fn measure(
    state: &MatrixProductState,
    spec: &ProtocolSpec,
    cfg: &LocentRunConfig,
    seed: u64,
) -> Result<Measured, CliError> {
    if cfg.exhaustive {
        let means = exhaustive_protocol_means(state, spec)?;
        Ok(Measured {
            method: "exhaustive",
            samples: 0,
            el: (means.concurrence, 0.0),
            entropy: (means.entropy, 0.0),
        })
    } else {
        let estimate = estimate_localizable_entanglement(state, spec, cfg.samples, seed)?;
        Ok(Measured {
            method: "mc",
            samples: estimate.n_samples,
            el: (estimate.mean, estimate.std_err),
            entropy: (estimate.entropy_mean, estimate.entropy_std_err),
        })
    }
}

pub fn run(
    cfg: &LocentRunConfig,
    common: &Common,
    checkpoint: &super::Checkpoint,
) -> Result<(Meta, Table), CliError> {
    let columns = vec![
        "n",
        "j",
        "bx",
        "bz",
        "a",
        "b",
        "separation",
        "n_z",
        "method",
        "samples",
        "el",
        "el_stderr",
        "el_entropy",
        "el_entropy_stderr",
    ];
    let mut table = Table::new(columns);
    let mut meta = super::meta_for("locent", common, cfg);

    match cfg.mode {
        LocentMode::Couplings => {
            let mut index = 0;
            for &n in &cfg.ns {
                let sep = half_ring_separation(n);
                for j in cfg.j.values()? {
                    let seed = super::point_seed(common.seed, index);
                    index += 1;
                    let key = ("locent", cfg.point_key(), n, j, sep, seed);
                    let rows = checkpoint.get_or(&key, || {
                        let state = prepare_state(n, j, cfg.bx, cfg.bz, cfg, seed)?;
                        let spec = ProtocolSpec::with_buffers(n, 2, 2 + sep, cfg.n_z);
                        let measured = measure(&state, &spec, cfg, seed)?;
                        Ok(vec![row(n, j, cfg, &spec, &measured)])
                    })?;
                    for r in rows {
                        table.push(r);
                    }
                }
            }
        }
        LocentMode::Separations => {
            let j = cfg.j.values()?[0];
            for (n_index, &n) in cfg.ns.iter().enumerate() {
                let seps =
                    cfg.separations.clone().unwrap_or_else(|| default_separations(n));
                let mut means = Vec::new();
                let mut errs = Vec::new();
                for (s_index, &sep) in seps.iter().enumerate() {
                    let seed =
                        super::point_seed(common.seed, n_index * 1000 + s_index);
                    let key = ("locent", cfg.point_key(), n, j, sep, seed);
                    let rows = checkpoint.get_or(&key, || {
                        let state = prepare_state(n, j, cfg.bx, cfg.bz, cfg, seed)?;
                        let spec = ProtocolSpec::with_buffers(n, 2, 2 + sep, cfg.n_z);
                        let measured = measure(&state, &spec, cfg, seed)?;
                        Ok(vec![row(n, j, cfg, &spec, &measured)])
                    })?;
                    for r in rows {
                        if let (Cell::Float(mean), Cell::Float(err)) = (&r[10], &r[11]) {
                            means.push(*mean);
                            errs.push(*err);
                        }
                        table.push(r);
                    }
                }
                let xs: Vec<f64> = seps.iter().map(|&s| s as f64).collect();
                let verdict = classify_entanglement_length(&xs, &means, &errs)
                    .map_err(|e| CliError::Runtime(anyhow::Error::from(e)))?;
                let text = match verdict {
                    LengthClass::Infinite { slope, slope_se } => format!(
                        "n={n} infinite (slope {slope:.3e} ± {slope_se:.3e})"
                    ),
                    LengthClass::Finite { xi, xi_se, .. } => {
                        format!("n={n} finite (xi {xi:.4} ± {xi_se:.4})")
                    }
                };
                meta.notes.push((format!("classification_n{n}"), text));
            }
        }
    }
    Ok((meta, table))
}

fn row(
    n: usize,
    j: f64,
    cfg: &LocentRunConfig,
    spec: &ProtocolSpec,
    measured: &Measured,
) -> Vec<Cell> {
    vec![
        n.into(),
        j.into(),
        cfg.bx.into(),
        cfg.bz.into(),
        spec.endpoints.0.into(),
        spec.endpoints.1.into(),
        spec.separation().into(),
        cfg.n_z.into(),
        measured.method.into(),
        measured.samples.into(),
        measured.el.0.into(),
        measured.el.1.into(),
        measured.entropy.0.into(),
        measured.entropy.1.into(),
    ]
}

impl LocentRunConfig {
    /// Checkpoint key fragment: the knobs shared by every grid point.
    fn point_key(&self) -> (f64, f64, usize, usize, usize, usize, usize, bool) {
        (
            self.bx,
            self.bz,
            self.bond_dim,
            self.samples,
            self.n_z,
            self.restarts,
            self.sweeps,
            self.exhaustive,
        )
    }
}
