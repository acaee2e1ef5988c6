use clusterchain::chain::ChainParams;
use clusterchain::disentangle::adaptive_scan;
use clusterchain::locent::{estimate_localizable_entanglement, ProtocolSpec};
use clusterchain::vmps::{best_of_restarts, sweep_to_ground, VmpsConfig};
fn main() {
    let t0 = std::time::Instant::now();
    let params = ChainParams::ring(200, 0.5, 0.2, 0.0);
    let config = VmpsConfig { bond_dim: 8, n_sweeps: 6, n_restarts: 1, rng_seed: 7, convergence_tol: 1e-10 };
    sweep_to_ground(&params, &config).unwrap();
    println!("vmps one restart N=200: {:?}", t0.elapsed());

    let t1 = std::time::Instant::now();
    let params60 = ChainParams::ring(60, 0.4, 0.0, 0.0);
    let cfg60 = VmpsConfig { bond_dim: 8, n_sweeps: 6, n_restarts: 10, rng_seed: 7, convergence_tol: 1e-10 };
    let state = best_of_restarts(&params60, &cfg60).unwrap().state;
    println!("vmps prep N=60 x10 restarts: {:?}", t1.elapsed());

    let t2 = std::time::Instant::now();
    let spec = ProtocolSpec::new(60, 2, 2 + 27);
    let est = estimate_localizable_entanglement(&state, &spec, 2000, 5).unwrap();
    println!("locent 2000 samples N=60: {:?}  el {:.4} +- {:.4}", t2.elapsed(), est.mean, est.std_err);

    let t3 = std::time::Instant::now();
    let report = adaptive_scan(0.5, 1e-3).unwrap();
    println!("scan 1e-3: {:?}  proj {:.3e} adapt {:.3e}", t3.elapsed(), report.projective.worst_residual, report.adaptive.worst_residual);
}
