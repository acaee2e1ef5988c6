//! Pairwise disentangling measurements on the four-qubit open chain.
//!
//! A `σ^z` measurement removes a qubit from the cluster state and leaves the
//! rest a (smaller) cluster state, so one measured qubit splits an open
//! chain into two unentangled halves. With the Ising coupling switched on,
//! no single-qubit measurement on one qubit achieves that — but measuring
//! *both* middle qubits of the four-qubit chain along an outcome-dependent
//! direction in the `x–z` plane does. This module finds those angles, the
//! outcome probabilities, and the leftover end-pair entanglement; builds the
//! associated postselected POVM with its failure element; and runs the
//! two-angle scan showing that no projective or adaptive (non-postselected)
//! version of the measurement exists at finite coupling.
//!
//! Outcomes are labelled by the total spin `s ∈ {−1, 0, +1}` of the two
//! middle qubits along the measured direction. The model is symmetric under
//! a global spin flip, which maps a measurement at angle `ϑ` to one at
//! `π − ϑ` within the same outcome class; reported angles are therefore
//! folded into `[0, π/2]`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::chain::{ChainError, ChainParams, Hamiltonian};
use crate::numutil;
use crate::oracle::{self, DenseState, OracleError};

/// Errors from the disentangling analysis.
#[derive(Debug, Error)]
pub enum DisentangleError {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("optimizer left residual entanglement {residual:.3e} for outcome {outcome} at J={j}")]
    OptimizerFailure { j: f64, outcome: i8, residual: f64 },
    #[error("POVM element {element} has eigenvalue {min_eigenvalue:.3e} below zero")]
    NotPositive { element: &'static str, min_eigenvalue: f64 },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

type Result<T> = std::result::Result<T, DisentangleError>;

/// Middle-pair sites of the four-qubit chain; the measurement should remove
/// the entanglement between the remaining end sites 0 and 3.
const MEASURED: (usize, usize) = (1, 2);

/// Projector amplitudes `(plus, minus)` for the `±1` outcomes of measuring
/// along direction `ϑ` in the `x–z` plane (`ϑ = 0` is `σ^z`, `ϑ = π/2` is
/// `σ^x`).
pub fn direction_basis(theta: f64) -> ([f64; 2], [f64; 2]) {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    ([c, s], [-s, c])
}

/// Ground state of the four-qubit open chain at coupling `j` (no fields).
/// The open boundary keeps its stabilizer caps, so the `J = 0` ground state
/// is the unique cluster state rather than a degenerate manifold.
pub fn ground4(j: f64) -> Result<DenseState> {
    let params = ChainParams::open(4, j, 0.0, 0.0);
    let ham = Hamiltonian::standard(&params)?;
    let (gs, _gap) = oracle::ground_dense(&ham)?;
    Ok(gs.state)
}

/// Contracts the middle qubits of a four-site state with the given
/// single-qubit basis vectors and returns the unnormalized end-pair
/// amplitudes (indexed `2·s₀ + s₃`); their squared norm is the joint
/// outcome probability.
fn end_pair(state: &DenseState, b1: &[f64; 2], b2: &[f64; 2]) -> [f64; 4] {
    let amps = state.amps();
    let mut pair = [0.0; 4];
    for s0 in 0..2 {
        for s3 in 0..2 {
            let mut acc = 0.0;
            for s1 in 0..2 {
                for s2 in 0..2 {
                    acc += b1[s1] * b2[s2] * amps[s0 + 2 * s1 + 4 * s2 + 8 * s3];
                }
            }
            pair[2 * s0 + s3] = acc;
        }
    }
    pair
}

/// Projects the middle pair onto the `(m₁, m₂)` outcome (0 = `+`) of
/// measurements along `theta1`, `theta2`; returns the joint probability and
/// the unnormalized residual end-pair amplitudes.
pub fn measure_pair(
    state: &DenseState,
    theta1: f64,
    theta2: f64,
    m1: u8,
    m2: u8,
) -> (f64, [f64; 4]) {
    let pick = |theta: f64, m: u8| {
        let (plus, minus) = direction_basis(theta);
        if m == 0 { plus } else { minus }
    };
    let pair = end_pair(state, &pick(theta1, m1), &pick(theta2, m2));
    (pair.iter().map(|x| x * x).sum(), pair)
}

/// Entropy of entanglement (bits) of a pure pair state, through the
/// concurrence: `S = h((1 + √(1 − C²))/2)`.
pub fn end_entropy_bits(pair: &[f64; 4]) -> f64 {
    let c = numutil::concurrence_pure2(pair);
    numutil::binary_entropy_bits(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt()))
}

/// The `(m₁, m₂)` outcome pairs composing a total-spin class.
fn class_branches(outcome: i8) -> &'static [(u8, u8)] {
    match outcome {
        1 => &[(0, 0)],
        0 => &[(0, 1), (1, 0)],
        -1 => &[(1, 1)],
        _ => unreachable!("total spin of two qubits is -1, 0, or +1"),
    }
}

/// Worst residual end-pair entanglement over the branches of an outcome
/// class, both middle qubits measured at the same angle. Branches too rare
/// to occur contribute nothing.
fn class_residual(state: &DenseState, theta: f64, outcome: i8) -> f64 {
    class_branches(outcome)
        .iter()
        .map(|&(m1, m2)| {
            let (prob, pair) = measure_pair(state, theta, theta, m1, m2);
            if prob < 1e-14 { 0.0 } else { end_entropy_bits(&pair) }
        })
        .fold(0.0, f64::max)
}

/// Joint probability of an outcome class at a common angle.
pub fn class_probability(state: &DenseState, theta: f64, outcome: i8) -> f64 {
    class_branches(outcome).iter().map(|&(m1, m2)| measure_pair(state, theta, theta, m1, m2).0).sum()
}

/// One total-spin outcome class of the disentangling measurement.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct OutcomeReport {
    /// Total spin `s ∈ {−1, 0, +1}` along the measured direction.
    pub outcome: i8,
    /// Angle minimizing the class's residual end-pair entanglement, folded
    /// into `[0, π/2]`.
    pub angle: f64,
    /// Class probability at that angle (both `s = 0` branches together).
    pub probability: f64,
    /// Residual end-pair entanglement (bits) at the optimal angle.
    pub residual: f64,
    /// Probability-weighted residual when measuring at the fixed cluster
    /// angle `ϑ = 0` instead of adapting to the outcome.
    pub unadapted_weighted_residual: f64,
}

/// Disentangling angles and bookkeeping for one coupling value.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct DisentangleResult {
    pub j: f64,
    /// Reports for `s = −1, 0, +1` in that order.
    pub outcomes: [OutcomeReport; 3],
}

impl DisentangleResult {
    pub fn outcome(&self, s: i8) -> &OutcomeReport {
        self.outcomes
            .iter()
            .find(|o| o.outcome == s)
            .expect("all three spin classes are always present")
    }

    /// Sum of class probabilities, each at its own optimal angle. This is 1
    /// only when the angles coincide (as at `J = 0`); the deficit is the
    /// price of outcome-adapted angles, mirrored by the POVM's failure
    /// element.
    pub fn probability_sum(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    /// The three optimal angles in `(ϑ₋₁, ϑ₀, ϑ₊₁)` order, as consumed by
    /// [`build_povm`].
    pub fn angles(&self) -> [f64; 3] {
        [self.outcome(-1).angle, self.outcome(0).angle, self.outcome(1).angle]
    }
}

/// Residual-entanglement tolerance at the optimized angles: above this the
/// optimizer result is rejected as a failure rather than reported.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// Folds a direction into `[0, π/2]` using the spin-flip symmetry
/// `ϑ ↦ π − ϑ` of every outcome class.
fn fold(theta: f64) -> f64 {
    let t = theta.rem_euclid(std::f64::consts::PI);
    if t > std::f64::consts::FRAC_PI_2 { std::f64::consts::PI - t } else { t }
}

/// Finds, for each total-spin outcome class, the common measurement angle
/// on the middle pair that disentangles the chain ends, by a coarse grid
/// over `[0, π)` refined with golden-section search.
pub fn optimize_disentangling_angles(j: f64) -> Result<DisentangleResult> {
    if !(j >= 0.0) || !j.is_finite() {
        return Err(DisentangleError::BadInput(format!("J must be finite and ≥ 0, got {j}")));
    }
    let state = ground4(j)?;
    let mut outcomes = Vec::with_capacity(3);
    for s in [-1i8, 0, 1] {
        let (raw_angle, residual) = numutil::grid_then_golden(
            |theta| class_residual(&state, theta, s),
            0.0,
            std::f64::consts::PI,
            1e-3,
            1e-12,
        );
        if residual > RESIDUAL_TOL {
            return Err(DisentangleError::OptimizerFailure { j, outcome: s, residual });
        }
        let angle = fold(raw_angle);
        let unadapted: f64 = class_branches(s)
            .iter()
            .map(|&(m1, m2)| {
                let (prob, pair) = measure_pair(&state, 0.0, 0.0, m1, m2);
                if prob < 1e-14 { 0.0 } else { prob * end_entropy_bits(&pair) }
            })
            .sum();
        outcomes.push(OutcomeReport {
            outcome: s,
            angle,
            probability: class_probability(&state, angle, s),
            residual,
            unadapted_weighted_residual: unadapted,
        });
    }
    Ok(DisentangleResult { j, outcomes: [outcomes[0], outcomes[1], outcomes[2]] })
}

/// Rank-one projector onto `cos(ϑ/2)|0⟩ + sin(ϑ/2)|1⟩` or its complement.
fn projector(theta: f64, minus: bool) -> DMatrix<f64> {
    let (plus, neg) = direction_basis(theta);
    let b = if minus { neg } else { plus };
    DMatrix::from_fn(2, 2, |r, c| b[r] * b[c])
}

fn kron2(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// The postselected weak measurement built from the three disentangling
/// angles: one element per outcome class (two for `s = 0`), scaled by `c`,
/// plus the failure element absorbing the rest of the identity.
#[derive(Clone, Debug)]
pub struct PovmSet {
    pub c: f64,
    /// `E₋₁, E₀, E₀′, E₁` on the measured pair.
    pub outcome_elements: [DMatrix<f64>; 4],
    /// `E_X = 1 − ΣE`; the branch to discard.
    pub failure_element: DMatrix<f64>,
}

/// Sum of the four unscaled projector products for an angle set
/// `(ϑ₋₁, ϑ₀, ϑ₊₁)`.
fn outcome_sum(angles: &[f64; 3]) -> [DMatrix<f64>; 4] {
    let [tm, t0, tp] = *angles;
    [
        kron2(&projector(tm, true), &projector(tm, true)),
        kron2(&projector(t0, true), &projector(t0, false)),
        kron2(&projector(t0, false), &projector(t0, true)),
        kron2(&projector(tp, false), &projector(tp, false)),
    ]
}

/// Largest `c` keeping the failure element positive semidefinite for the
/// given angles: `1/λ_max` of the summed outcome projectors.
pub fn maximal_c(angles: &[f64; 3]) -> f64 {
    let mut s = DMatrix::<f64>::zeros(4, 4);
    for e in outcome_sum(angles) {
        s += e;
    }
    let (eigs, _) = numutil::jacobi_eigen(&s);
    1.0 / eigs.iter().cloned().fold(f64::MIN, f64::max)
}

impl PovmSet {
    /// Failure probability `⟨ψ|E_X ⊗ 1_ends|ψ⟩` on a four-site state.
    pub fn failure_probability(&self, state: &DenseState) -> f64 {
        let rho = state.rdm2(MEASURED.0, MEASURED.1);
        (&rho * &self.failure_element).trace()
    }

    /// Largest deviation of `ΣE` from the identity.
    pub fn completeness_error(&self) -> f64 {
        let mut total = self.failure_element.clone();
        for e in &self.outcome_elements {
            total += e;
        }
        (total - DMatrix::<f64>::identity(4, 4)).abs().max()
    }
}

/// Builds the five-element POVM for an angle set `(ϑ₋₁, ϑ₀, ϑ₊₁)`,
/// verifying the failure element stays positive semidefinite.
pub fn build_povm(angles: &[f64; 3], c: f64) -> Result<PovmSet> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(DisentangleError::BadInput(format!("c must lie in (0, 1], got {c}")));
    }
    let mut outcome_elements = outcome_sum(angles);
    let mut failure_element = DMatrix::<f64>::identity(4, 4);
    for e in outcome_elements.iter_mut() {
        *e *= c;
        failure_element -= &*e;
    }
    let (eigs, _) = numutil::jacobi_eigen(&failure_element);
    let min_eigenvalue = eigs.iter().cloned().fold(f64::MAX, f64::min);
    if min_eigenvalue < -1e-10 {
        return Err(DisentangleError::NotPositive { element: "E_X", min_eigenvalue });
    }
    Ok(PovmSet { c, outcome_elements, failure_element })
}

/// One-sided verdict of the two-angle scan.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct ScanVerdict {
    /// Whether some angle choice pushed every required branch residual
    /// below `1e-8`.
    pub possible: bool,
    pub theta1: f64,
    /// Best second angle: a single shared value for the projective scan,
    /// one per first-qubit outcome for the adaptive scan.
    pub theta2: [f64; 2],
    /// Smallest achievable worst-case residual (bits).
    pub worst_residual: f64,
}

/// Result of scanning measurement angle pairs `(θ₁, θ₂)` for a projective
/// or adaptive (but not postselected) disentangling scheme.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct ScanReport {
    pub j: f64,
    pub resolution: f64,
    /// Fixed `(θ₁, θ₂)` for all four outcome branches.
    pub projective: ScanVerdict,
    /// `θ₂` chosen after observing the first qubit's outcome.
    pub adaptive: ScanVerdict,
}

const SCAN_SUCCESS_TOL: f64 = 1e-8;

/// Residuals of the four `(m₁, m₂)` branches at angles `(θ₁, θ₂)`, given
/// the two first-qubit contractions `v[m₁][s₀ + 2·s₂ + 4·s₃]`.
fn branch_residuals(v: &[[f64; 8]; 2], theta2: f64) -> [[f64; 2]; 2] {
    let (plus, minus) = direction_basis(theta2);
    let mut out = [[0.0; 2]; 2];
    for (m1, vm) in v.iter().enumerate() {
        for (m2, b2) in [plus, minus].iter().enumerate() {
            let mut pair = [0.0; 4];
            for s0 in 0..2 {
                for s3 in 0..2 {
                    pair[2 * s0 + s3] =
                        b2[0] * vm[s0 + 4 * s3] + b2[1] * vm[s0 + 2 + 4 * s3];
                }
            }
            let prob: f64 = pair.iter().map(|x| x * x).sum();
            out[m1][m2] = if prob < 1e-14 { 0.0 } else { end_entropy_bits(&pair) };
        }
    }
    out
}

/// Contracts the first measured qubit at `theta1` for both outcomes.
fn first_contractions(state: &DenseState, theta1: f64) -> [[f64; 8]; 2] {
    let amps = state.amps();
    let (plus, minus) = direction_basis(theta1);
    let mut v = [[0.0; 8]; 2];
    for (m1, b1) in [plus, minus].iter().enumerate() {
        for s0 in 0..2 {
            for s2 in 0..2 {
                for s3 in 0..2 {
                    v[m1][s0 + 2 * s2 + 4 * s3] = b1[0] * amps[s0 + 4 * s2 + 8 * s3]
                        + b1[1] * amps[s0 + 2 + 4 * s2 + 8 * s3];
                }
            }
        }
    }
    v
}

/// Scans measurement angle pairs on the middle qubits for a scheme that
/// disentangles the ends on *every* outcome branch without postselection:
/// projective (one `(θ₁, θ₂)` for all four branches) and adaptive (`θ₂`
/// picked after the first outcome). Expected verdict for `J > 0`: neither
/// exists; only postselection disentangles deterministically.
pub fn adaptive_scan(j: f64, resolution: f64) -> Result<ScanReport> {
    if !(j >= 0.0) || !j.is_finite() {
        return Err(DisentangleError::BadInput(format!("J must be finite and ≥ 0, got {j}")));
    }
    if !(resolution > 0.0 && resolution <= 1e-2) {
        return Err(DisentangleError::BadInput(format!(
            "scan resolution must be at most 1e-2 rad, got {resolution}"
        )));
    }
    let state = ground4(j)?;
    let steps = (std::f64::consts::PI / resolution).ceil() as usize;
    let theta = |k: usize| k as f64 * std::f64::consts::PI / steps as f64;

    let mut projective = ScanVerdict {
        possible: false,
        theta1: 0.0,
        theta2: [0.0; 2],
        worst_residual: f64::MAX,
    };
    let mut adaptive = projective;
    for k1 in 0..steps {
        let t1 = theta(k1);
        let v = first_contractions(&state, t1);
        // Projective: one θ₂ must serve all four branches.
        let all4 = |t2: f64| {
            let r = branch_residuals(&v, t2);
            r[0][0].max(r[0][1]).max(r[1][0]).max(r[1][1])
        };
        let (t2_best, worst) =
            numutil::grid_then_golden(all4, 0.0, std::f64::consts::PI, resolution, 1e-10);
        if worst < projective.worst_residual {
            projective =
                ScanVerdict { possible: false, theta1: t1, theta2: [t2_best; 2], worst_residual: worst };
        }
        // Adaptive: θ₂ may depend on the first outcome, but must then cover
        // both second outcomes.
        let mut t2s = [0.0; 2];
        let mut worst_adaptive = 0.0f64;
        for m1 in 0..2 {
            let pairwise = |t2: f64| {
                let r = branch_residuals(&v, t2);
                r[m1][0].max(r[m1][1])
            };
            let (t2m, w) =
                numutil::grid_then_golden(pairwise, 0.0, std::f64::consts::PI, resolution, 1e-10);
            t2s[m1] = t2m;
            worst_adaptive = worst_adaptive.max(w);
        }
        if worst_adaptive < adaptive.worst_residual {
            adaptive = ScanVerdict {
                possible: false,
                theta1: t1,
                theta2: t2s,
                worst_residual: worst_adaptive,
            };
        }
    }
    projective.possible = projective.worst_residual < SCAN_SUCCESS_TOL;
    adaptive.possible = adaptive.worst_residual < SCAN_SUCCESS_TOL;
    Ok(ScanReport { j, resolution, projective, adaptive })
}

/// Approximate disentangling of a longer even chain: each of the
/// `(n − 2)/2` interior pairs is measured at the four-qubit optimal angle
/// for its requested outcome class, and the leftover end-pair entanglement
/// is reported. Exact only at `n = 4`; for longer chains the four-qubit
/// angles are merely close to optimal.
pub fn approximate_split_residual(n: usize, j: f64, outcomes: &[i8]) -> Result<(f64, f64)> {
    if n < 4 || n % 2 != 0 {
        return Err(DisentangleError::BadInput(format!("chain length must be even and ≥ 4, got {n}")));
    }
    if n > 12 {
        return Err(DisentangleError::BadInput(format!("dense splitting handles n ≤ 12, got {n}")));
    }
    if outcomes.len() != (n - 2) / 2 {
        return Err(DisentangleError::BadInput(format!(
            "need one outcome per interior pair ({}), got {}",
            (n - 2) / 2,
            outcomes.len()
        )));
    }
    if outcomes.iter().any(|s| !(-1..=1).contains(s)) {
        return Err(DisentangleError::BadInput("outcomes are total spins in {-1, 0, +1}".into()));
    }
    let reference = optimize_disentangling_angles(j)?;
    let params = ChainParams::open(n, j, 0.0, 0.0);
    let ham = Hamiltonian::standard(&params)?;
    let (gs, _gap) = oracle::ground_dense(&ham)?;
    let mut state = gs.state;
    let mut probability = 1.0;
    for (k, &s) in outcomes.iter().enumerate() {
        let theta = reference.outcome(s).angle;
        let (plus, minus) = direction_basis(theta);
        // The first listed branch of the class; for s = 0 the two branches
        // give reflection-twin end states, so either serves.
        let (m1, m2) = class_branches(s)[0];
        for (site, m) in [(2 * k + 1, m1), (2 * k + 2, m2)] {
            let b = if m == 0 { plus } else { minus };
            let (next, prob) = state.project_site(site, b[0], b[1]);
            if prob < 1e-14 {
                return Err(DisentangleError::BadInput(format!(
                    "outcome branch at site {site} has probability {prob:.3e}"
                )));
            }
            state = next;
            probability = prob;
        }
    }
    state.normalize();
    let pair = state.pure_two_qubit(0, n - 1)?;
    Ok((probability, end_entropy_bits(&pair)))
}
