use clusterchain::chain::ChainParams;
use clusterchain::vmps::{sweep_to_ground, VmpsConfig};
fn main() {
    let t0 = std::time::Instant::now();
    let params = ChainParams::ring(200, 0.5, 0.2, 0.0);
    let config = VmpsConfig { bond_dim: 8, n_sweeps: 6, n_restarts: 1, rng_seed: 7, convergence_tol: 1e-10 };
    let r = sweep_to_ground(&params, &config).unwrap();
    println!("one restart: {:?}  energy {:.6} s2 {:.6} converged {}", t0.elapsed(), r.energy, r.s2, r.converged);
}
