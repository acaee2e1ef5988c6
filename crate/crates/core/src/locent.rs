//! Localizable entanglement between two ring sites: the fixed X/Z
//! measurement protocol, outcome-dependent Pauli corrections, Monte Carlo
//! estimation with error bars, entanglement-length classification, and the
//! one-angle characterization of the post-measurement two-qubit family.
//!
//! The protocol measures every site except a chosen pair `(a, b)`: the
//! `n_z` sites just beyond each endpoint in `σ^z` (cutting the pair's
//! neighborhood out of the ring) and every other site in `σ^x` (teleporting
//! correlations along the arc). An outcome-dependent Pauli on `b` then
//! undoes the branch dependence: on the cluster state every record yields
//! the same maximally entangled pair. With an Ising coupling switched on the
//! corrected states spread into the one-parameter family
//! `cos Φ |C₀₀⟩ + sin Φ |C₁₁⟩` (the two-qubit cluster state rotated about
//! `y` on one qubit), which this module characterizes through the sampled
//! distribution of `Φ`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::mps::{MatrixProductState, MeasurementPlan, MpsError, PlanSampler, ResidualPair};
use crate::numutil::{self, MeanStats};

/// Errors from protocol construction, sampling, and the fits.
#[derive(Debug, Error)]
pub enum LocentError {
    #[error("bad protocol: {0}")]
    BadProtocol(String),
    #[error("bad data: {0}")]
    BadData(String),
    #[error(
        "sampled branch probability {probability:.3e} vanishes relative to the \
         4^-m uniform-branch scale; state or protocol is numerically degenerate"
    )]
    BranchBreakdown { probability: f64 },
    #[error(transparent)]
    Mps(#[from] MpsError),
}

type LocentResult<T> = Result<T, LocentError>;

/// The measurement protocol that localizes entanglement onto a site pair.
///
/// Sites strictly between the endpoints, and the remainder of the far arc,
/// are measured in `σ^x`; the `n_z` sites on each side beyond an endpoint
/// are measured in `σ^z`. The separation `b − a` must be odd — the
/// correction rule pairs interior sites by offset parity — and the far arc
/// must be long enough to hold both buffer runs.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct ProtocolSpec {
    /// Ring length.
    pub n: usize,
    /// The unmeasured pair `(a, b)`, `a < b`.
    pub endpoints: (usize, usize),
    /// Number of `σ^z`-measured sites beyond each endpoint.
    pub n_z: usize,
}

impl ProtocolSpec {
    /// Standard protocol with two `σ^z` buffers per side.
    pub fn new(n: usize, a: usize, b: usize) -> Self {
        ProtocolSpec { n, endpoints: (a, b), n_z: 2 }
    }

    /// Protocol with a custom buffer depth.
    pub fn with_buffers(n: usize, a: usize, b: usize, n_z: usize) -> Self {
        ProtocolSpec { n, endpoints: (a, b), n_z }
    }

    /// Interior path length between the endpoints.
    pub fn separation(&self) -> usize {
        self.endpoints.1 - self.endpoints.0
    }

    pub fn validate(&self) -> LocentResult<()> {
        let (a, b) = self.endpoints;
        if b >= self.n || a >= b {
            return Err(LocentError::BadProtocol(format!(
                "endpoints ({a}, {b}) must satisfy a < b < n = {}",
                self.n
            )));
        }
        if (b - a) % 2 == 0 {
            return Err(LocentError::BadProtocol(format!(
                "separation {} must be odd for the offset-parity corrections",
                b - a
            )));
        }
        if self.n_z == 0 {
            return Err(LocentError::BadProtocol("n_z must be at least 1".into()));
        }
        let far_arc = self.n - (b - a + 1);
        if far_arc < 2 * self.n_z {
            return Err(LocentError::BadProtocol(format!(
                "far arc has {far_arc} sites, too short for 2·n_z = {} buffers",
                2 * self.n_z
            )));
        }
        Ok(())
    }

    /// The `σ^z` buffer sites, from the endpoints outward.
    fn buffer_sites(&self) -> Vec<usize> {
        let (a, b) = self.endpoints;
        (1..=self.n_z)
            .flat_map(|k| [(a + self.n - k) % self.n, (b + k) % self.n])
            .collect()
    }

    /// Compiles the site-by-site plan and the correction bookkeeping.
    pub fn compile(&self) -> LocentResult<CompiledProtocol> {
        self.validate()?;
        let (a, b) = self.endpoints;
        let buffers = self.buffer_sites();
        let entries: Vec<(usize, f64)> = (0..self.n)
            .filter(|s| *s != a && *s != b)
            .map(|s| {
                let angle = if buffers.contains(&s) { 0.0 } else { std::f64::consts::FRAC_PI_4 };
                (s, angle)
            })
            .collect();
        let plan = MeasurementPlan::new(entries)?;
        let mut odd_x = Vec::new();
        let mut even_x = Vec::new();
        let mut left_z = None;
        let mut right_z = None;
        for (k, &(site, _)) in plan.entries().iter().enumerate() {
            if site == (a + self.n - 1) % self.n {
                left_z = Some(k);
            } else if site == (b + 1) % self.n {
                right_z = Some(k);
            } else if site > a && site < b {
                if (site - a) % 2 == 1 {
                    odd_x.push(k);
                } else {
                    even_x.push(k);
                }
            }
        }
        Ok(CompiledProtocol {
            spec: *self,
            plan,
            odd_x,
            even_x,
            left_z: left_z.expect("validated spec always has a left buffer"),
            right_z: right_z.expect("validated spec always has a right buffer"),
        })
    }
}

/// A validated protocol with its measurement plan and the plan-entry
/// indices that feed the correction parities.
#[derive(Clone, Debug)]
pub struct CompiledProtocol {
    spec: ProtocolSpec,
    plan: MeasurementPlan,
    /// Plan indices of interior `σ^x` sites at odd offset from `a`.
    odd_x: Vec<usize>,
    /// Plan indices of interior `σ^x` sites at even offset from `a`.
    even_x: Vec<usize>,
    /// Plan index of the `σ^z` site adjacent to `a`.
    left_z: usize,
    /// Plan index of the `σ^z` site adjacent to `b`.
    right_z: usize,
}

/// The correction `X^x Z^z` applied to qubit `b` after a record completes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliCorrection {
    pub x_power: u8,
    pub z_power: u8,
}

impl PauliCorrection {
    /// Applies the correction to the residual pair amplitudes
    /// `[a₀₀, a₀₁, a₁₀, a₁₁]` (second index = qubit `b`), `Z` before `X`.
    pub fn apply(&self, amps: &[f64; 4]) -> [f64; 4] {
        let mut out = *amps;
        if self.z_power == 1 {
            out[1] = -out[1];
            out[3] = -out[3];
        }
        if self.x_power == 1 {
            out.swap(0, 1);
            out.swap(2, 3);
        }
        out
    }
}

impl CompiledProtocol {
    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    pub fn plan(&self) -> &MeasurementPlan {
        &self.plan
    }

    /// The Pauli correction for one complete outcome record (in plan order,
    /// `0` = projection onto the `+1` eigenstate of the measured axis).
    ///
    /// With outcome signs `m = 1 − 2·outcome`, the two parities are
    /// `s₁ = (Π odd-offset m^x) · m^z at b+1` and
    /// `s₂ = m^z at a−1 · (Π even-offset m^x)`; the correction is
    /// `X^{(1−s₂)/2} Z^{(1−s₁)/2}` on `b`. Only the interior arc and the two
    /// adjacent buffers enter — outcomes on the far arc and outer buffers
    /// never reach the pair.
    pub fn correction(&self, outcomes: &[u8]) -> LocentResult<PauliCorrection> {
        if outcomes.len() != self.plan.entries().len() {
            return Err(LocentError::BadData(format!(
                "record has {} outcomes for a plan of {} sites",
                outcomes.len(),
                self.plan.entries().len()
            )));
        }
        let sign = |k: usize| 1 - 2 * i32::from(outcomes[k]);
        let odd: i32 = self.odd_x.iter().map(|&k| sign(k)).product();
        let even: i32 = self.even_x.iter().map(|&k| sign(k)).product();
        let s1 = odd * sign(self.right_z);
        let s2 = sign(self.left_z) * even;
        Ok(PauliCorrection {
            x_power: u8::from(s2 < 0),
            z_power: u8::from(s1 < 0),
        })
    }

    /// Residual pair amplitudes after the record's correction.
    pub fn corrected_amps(&self, outcomes: &[u8], residual: &ResidualPair) -> LocentResult<[f64; 4]> {
        Ok(self.correction(outcomes)?.apply(&residual.amps))
    }
}

/// Amplitudes of the two-qubit cluster state `|C⟩ = |C₀₀⟩` (second index =
/// `b`).
pub const CLUSTER_PAIR: [f64; 4] = [0.5, 0.5, 0.5, -0.5];

/// Amplitudes of its flipped partner `|C₁₁⟩ = σ^x_b σ^z_b |C⟩`. Together the
/// two span the `+1` eigenspace of `σ^y_a σ^y_b`.
pub const CLUSTER_PAIR_FLIPPED: [f64; 4] = [-0.5, 0.5, 0.5, 0.5];

/// Amplitudes of `cos Φ |C₀₀⟩ + sin Φ |C₁₁⟩`.
pub fn phi_family(phi: f64) -> [f64; 4] {
    let (c, s) = (phi.cos(), phi.sin());
    std::array::from_fn(|k| c * CLUSTER_PAIR[k] + s * CLUSTER_PAIR_FLIPPED[k])
}

/// Components of a pair state in the `|C₀₀⟩, |C₁₁⟩` family plane.
#[derive(Clone, Copy, Debug)]
pub struct FamilyProjection {
    /// `⟨C₀₀|ψ⟩` and `⟨C₁₁|ψ⟩` of the normalized state.
    pub c00: f64,
    pub c11: f64,
    /// Weight `⟨ψ|P|ψ⟩ = c₀₀² + c₁₁²` of the family plane; equals
    /// `(1 + ⟨σ^y σ^y⟩)/2` since `P` projects onto the `yy = +1` eigenspace.
    pub p_yy: f64,
    /// The in-plane angle `Φ = atan2(c₁₁, c₀₀)`: `√p_yy · |Φ⟩` is the exact
    /// projection of the state onto the family.
    pub phi: f64,
}

/// Projects a residual pair state onto the family plane.
pub fn project_family(amps: &[f64; 4]) -> FamilyProjection {
    let norm = amps.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let dot = |basis: &[f64; 4]| amps.iter().zip(basis).map(|(x, y)| x * y).sum::<f64>() / norm;
    let (c00, c11) = (dot(&CLUSTER_PAIR), dot(&CLUSTER_PAIR_FLIPPED));
    FamilyProjection { c00, c11, p_yy: c00 * c00 + c11 * c11, phi: c11.atan2(c00) }
}

/// Full two-qubit Pauli tomogram of a residual pair state.
///
/// `correlation(i, j)` indexes `⟨σ^i_a σ^j_b⟩` with `0 = I, 1 = X, 2 = Y,
/// 3 = Z`. States in this module have real amplitudes, so correlators with
/// an odd number of `σ^y` factors vanish identically.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct TwoQubitTomogram {
    corr: [[f64; 4]; 4],
    /// `tr ρ²` reconstructed from the correlators.
    pub purity: f64,
    /// Concurrence of the underlying pure state.
    pub concurrence: f64,
}

/// Real single-qubit matrices; `σ^y = i · ry`, with the `i` tracked by the
/// caller through the `σ^y` count.
fn axis_matrix(axis: usize) -> [[f64; 2]; 2] {
    match axis {
        0 => [[1.0, 0.0], [0.0, 1.0]],
        1 => [[0.0, 1.0], [1.0, 0.0]],
        2 => [[0.0, -1.0], [1.0, 0.0]],
        3 => [[1.0, 0.0], [0.0, -1.0]],
        _ => unreachable!("axis index ranges over I, X, Y, Z"),
    }
}

impl TwoQubitTomogram {
    pub fn from_pure(amps: &[f64; 4]) -> Self {
        let mut corr = [[0.0; 4]; 4];
        for (i, row) in corr.iter_mut().enumerate() {
            for (j, value) in row.iter_mut().enumerate() {
                let ys = usize::from(i == 2) + usize::from(j == 2);
                if ys % 2 == 1 {
                    continue;
                }
                let (ma, mb) = (axis_matrix(i), axis_matrix(j));
                let mut acc = 0.0;
                for sa in 0..2 {
                    for sb in 0..2 {
                        for ta in 0..2 {
                            for tb in 0..2 {
                                acc += amps[2 * sa + sb] * ma[sa][ta] * mb[sb][tb] * amps[2 * ta + tb];
                            }
                        }
                    }
                }
                // i² = −1 for the even-y correlators that survive.
                *value = if ys == 2 { -acc } else { acc };
            }
        }
        let norm_sq = corr[0][0];
        for row in corr.iter_mut() {
            for value in row.iter_mut() {
                *value /= norm_sq;
            }
        }
        let purity = corr.iter().flatten().map(|c| c * c).sum::<f64>() / 4.0;
        TwoQubitTomogram { corr, purity, concurrence: numutil::concurrence_pure2(amps) }
    }

    /// `⟨σ^i_a σ^j_b⟩` with axes `0 = I, 1 = X, 2 = Y, 3 = Z`.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.corr[i][j]
    }

    pub fn xx(&self) -> f64 {
        self.corr[1][1]
    }

    pub fn xz(&self) -> f64 {
        self.corr[1][3]
    }

    pub fn zx(&self) -> f64 {
        self.corr[3][1]
    }

    pub fn zz(&self) -> f64 {
        self.corr[3][3]
    }

    pub fn yy(&self) -> f64 {
        self.corr[2][2]
    }

    /// The fifteen correlators `(i, j) ≠ (I, I)` in row-major axis order.
    pub fn pauli_correlations(&self) -> [f64; 15] {
        let mut out = [0.0; 15];
        let mut k = 0;
        for i in 0..4 {
            for j in 0..4 {
                if (i, j) == (0, 0) {
                    continue;
                }
                out[k] = self.corr[i][j];
                k += 1;
            }
        }
        out
    }

    /// Reconstructs the density matrix `¼ Σ c_ij σ^i ⊗ σ^j`. Real because
    /// every odd-`σ^y` correlator vanishes on this module's states.
    pub fn density(&self) -> DMatrix<f64> {
        let mut rho = DMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                let ys = usize::from(i == 2) + usize::from(j == 2);
                if ys % 2 == 1 {
                    continue;
                }
                let (ma, mb) = (axis_matrix(i), axis_matrix(j));
                let sign = if ys == 2 { -1.0 } else { 1.0 };
                let c = self.corr[i][j] * sign / 4.0;
                for sa in 0..2 {
                    for sb in 0..2 {
                        for ta in 0..2 {
                            for tb in 0..2 {
                                rho[(2 * sa + sb, 2 * ta + tb)] += c * ma[sa][ta] * mb[sb][tb];
                            }
                        }
                    }
                }
            }
        }
        rho
    }
}

/// Monte Carlo estimate of the localizable entanglement of a pair, in both
/// common measures of the per-branch pair entanglement: the concurrence and
/// the entropy of entanglement (bits). The two agree at 0 and 1 and order
/// branches identically; quantitative curves (and decay lengths) differ.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct ElEstimate {
    /// Sample mean of the residual-pair concurrence.
    pub mean: f64,
    /// Monte Carlo standard error of the mean.
    pub std_err: f64,
    /// Sample mean of the residual-pair entropy of entanglement (bits).
    pub entropy_mean: f64,
    /// Standard error of the entropy mean.
    pub entropy_std_err: f64,
    pub n_samples: usize,
    /// Smallest joint record probability seen while sampling.
    pub min_probability: f64,
}

/// Entropy of entanglement (bits) of a pure pair state with concurrence
/// `c`: the binary entropy of the larger Schmidt weight.
fn pair_entropy_bits(c: f64) -> f64 {
    numutil::binary_entropy_bits(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt()))
}

/// Samples the protocol on `state` and averages the concurrence of the
/// residual pair. Sampling is a single deterministic stream seeded by
/// `seed`.
///
/// A legitimate branch's joint probability is exponentially small in the
/// number of measured sites `m` (uniform outcomes give `2^-m`), so
/// "vanishing" is judged relative to that scale: a record whose joint
/// probability falls below `1e-12 · 4^-m` — a factor `1e-12 · 2^-m` under
/// the uniform baseline — aborts with [`LocentError::BranchBreakdown`].
/// The sampler additionally rejects any single conditional outcome below
/// `1e-14` on its own.
pub fn estimate_localizable_entanglement(
    state: &MatrixProductState,
    spec: &ProtocolSpec,
    n_samples: usize,
    seed: u64,
) -> LocentResult<ElEstimate> {
    if n_samples == 0 {
        return Err(LocentError::BadData("n_samples must be positive".into()));
    }
    let protocol = spec.compile()?;
    let sampler = PlanSampler::new(state, protocol.plan())?;
    let floor = 1e-12 * 0.25f64.powi(protocol.plan().entries().len() as i32);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut stats = MeanStats::new();
    let mut entropy_stats = MeanStats::new();
    let mut min_probability = f64::INFINITY;
    for _ in 0..n_samples {
        let (record, residual) = sampler.sample(&mut rng)?;
        if record.joint_probability < floor {
            return Err(LocentError::BranchBreakdown { probability: record.joint_probability });
        }
        min_probability = min_probability.min(record.joint_probability);
        let c = numutil::concurrence_pure2(&residual.amps);
        stats.push(c);
        entropy_stats.push(pair_entropy_bits(c));
    }
    Ok(ElEstimate {
        mean: stats.mean(),
        std_err: stats.stderr(),
        entropy_mean: entropy_stats.mean(),
        entropy_std_err: entropy_stats.stderr(),
        n_samples,
        min_probability,
    })
}

/// Exact protocol averages from exhaustive branch enumeration: the mean
/// concurrence, the mean entropy of entanglement, and the population means
/// of the corrected `⟨zx⟩`, `⟨xz⟩`, and `⟨yy⟩`. Exponential in chain
/// length; for cross-checks on small rings.
#[derive(Clone, Copy, Debug)]
pub struct ExhaustiveMeans {
    pub concurrence: f64,
    /// Probability-weighted mean of the pair entropy of entanglement (bits).
    pub entropy: f64,
    pub zx: f64,
    pub xz: f64,
    pub yy: f64,
    /// Sum of enumerated branch probabilities (should be 1).
    pub total_probability: f64,
}

pub fn exhaustive_protocol_means(
    state: &MatrixProductState,
    spec: &ProtocolSpec,
) -> LocentResult<ExhaustiveMeans> {
    let protocol = spec.compile()?;
    let sampler = PlanSampler::new(state, protocol.plan())?;
    let mut means = ExhaustiveMeans {
        concurrence: 0.0,
        entropy: 0.0,
        zx: 0.0,
        xz: 0.0,
        yy: 0.0,
        total_probability: 0.0,
    };
    for branch in sampler.enumerate()? {
        let amps = protocol.corrected_amps(&branch.outcomes, &branch.residual)?;
        let tomo = TwoQubitTomogram::from_pure(&amps);
        let p = branch.probability;
        means.concurrence += p * tomo.concurrence;
        means.entropy += p * pair_entropy_bits(tomo.concurrence);
        means.zx += p * tomo.zx();
        means.xz += p * tomo.xz();
        means.yy += p * tomo.yy();
        means.total_probability += p;
    }
    Ok(means)
}

/// Entanglement-length classification from `E_L` versus separation.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub enum LengthClass {
    /// Log-slope consistent with zero at two standard errors.
    Infinite { slope: f64, slope_se: f64 },
    /// Exponential decay `E_L ~ e^{−n/ξ}`.
    Finite { xi: f64, xi_se: f64, slope: f64, slope_se: f64 },
}

/// Weighted least squares of `ln E_L` against separation. Needs at least
/// five separations with positive means; a slope within two standard errors
/// of zero classifies as infinite, otherwise `ξ = −1/slope`.
pub fn classify_entanglement_length(
    separations: &[f64],
    means: &[f64],
    errs: &[f64],
) -> LocentResult<LengthClass> {
    if separations.len() != means.len() || means.len() != errs.len() {
        return Err(LocentError::BadData("length mismatch between inputs".into()));
    }
    if separations.len() < 5 {
        return Err(LocentError::BadData(format!(
            "need at least 5 separations, got {}",
            separations.len()
        )));
    }
    let mut ys = Vec::with_capacity(means.len());
    let mut ws = Vec::with_capacity(means.len());
    for (&m, &e) in means.iter().zip(errs) {
        if !(m > 0.0) || !e.is_finite() || e < 0.0 {
            return Err(LocentError::BadData(format!(
                "entanglement means must be positive with finite errors, got ({m}, {e})"
            )));
        }
        let sigma = (e / m).max(1e-12);
        ys.push(m.ln());
        ws.push(1.0 / (sigma * sigma));
    }
    let fit = numutil::weighted_line_fit(separations, &ys, &ws)
        .ok_or_else(|| LocentError::BadData("degenerate separations in fit".into()))?;
    if fit.slope.abs() <= 2.0 * fit.slope_se {
        Ok(LengthClass::Infinite { slope: fit.slope, slope_se: fit.slope_se })
    } else {
        let xi = -1.0 / fit.slope;
        let xi_se = fit.slope_se / (fit.slope * fit.slope);
        Ok(LengthClass::Finite { xi, xi_se, slope: fit.slope, slope_se: fit.slope_se })
    }
}

/// Options for the Φ-family analysis.
#[derive(Clone, Copy, Debug)]
pub struct PhiOptions {
    /// Samples below this concurrence are excluded as not near-maximal.
    pub concurrence_threshold: f64,
    /// Tolerance for the family conditions `⟨zx⟩ = ⟨xz⟩`, `⟨xx⟩ = −⟨zz⟩`,
    /// and `⟨zx⟩² + ⟨xx⟩² = 1`. Near-maximal samples violate them at the
    /// `1 − C` scale (for real pair states the concurrence is exactly
    /// `|⟨σ^y σ^y⟩|`), so the default sits above that but far below the
    /// `O(1)` violations of states outside the class.
    pub condition_tol: f64,
}

impl Default for PhiOptions {
    fn default() -> Self {
        PhiOptions { concurrence_threshold: 0.99, condition_tol: 0.05 }
    }
}

/// The tanh form fitted to `ξ(J)`.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct TanhFit {
    pub k: f64,
    pub eta: f64,
    /// Standard errors from the inverse weighted normal matrix.
    pub k_se: f64,
    pub eta_se: f64,
    pub chi2: f64,
    pub converged: bool,
}

/// Angular characterization of corrected near-maximally-entangled samples.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct PhiCharacterization {
    /// One angle per accepted sample, `Φ ∈ (−π/2, π/2]`.
    pub phi_samples: Vec<f64>,
    /// Mean success probability of the projection onto the family subspace,
    /// `(1 + ⟨yy⟩)/2` averaged over accepted samples.
    pub p_yy: f64,
    /// Resultant length of the doubled angles: `A e^{iξ} = mean(e^{2iΦ})`.
    pub amplitude: f64,
    /// Mean direction of the doubled angles, clamped to `[0, π/2]`.
    pub xi: f64,
    /// Accepted-sample means of `⟨xz⟩` and `⟨yy⟩`.
    pub mean_xz: f64,
    pub mean_yy: f64,
    /// Normalized entropy of a 16-bin Φ histogram (`1` = flat).
    pub histogram_flatness: f64,
    pub n_used: usize,
    pub excluded_low_entanglement: usize,
    pub excluded_condition: usize,
    /// Populated by [`fit_transition`] when a `ξ(J)` family is assembled.
    pub fit: Option<TanhFit>,
}

/// Extracts `Φ = atan2(⟨xx⟩, ⟨zx⟩)/2` from each accepted tomogram and
/// summarizes the distribution. Samples failing the concurrence threshold
/// or the family conditions are counted and excluded.
pub fn characterize_phi(
    tomograms: &[TwoQubitTomogram],
    opts: &PhiOptions,
) -> LocentResult<PhiCharacterization> {
    let mut phis = Vec::new();
    let mut excluded_low = 0;
    let mut excluded_cond = 0;
    let mut p_yy = MeanStats::new();
    let mut xz = MeanStats::new();
    let mut yy = MeanStats::new();
    for t in tomograms {
        if t.concurrence < opts.concurrence_threshold {
            excluded_low += 1;
            continue;
        }
        let conditions = [
            t.zx() - t.xz(),
            t.xx() + t.zz(),
            t.zx() * t.zx() + t.xx() * t.xx() - 1.0,
        ];
        if conditions.iter().any(|c| c.abs() > opts.condition_tol) {
            excluded_cond += 1;
            continue;
        }
        phis.push(0.5 * t.xx().atan2(t.zx()));
        p_yy.push((1.0 + t.yy()) / 2.0);
        xz.push(t.xz());
        yy.push(t.yy());
    }
    if phis.is_empty() {
        return Err(LocentError::BadData(format!(
            "no usable samples: {excluded_low} below the concurrence threshold, {excluded_cond} violating the family conditions"
        )));
    }
    let doubled: Vec<f64> = phis.iter().map(|p| 2.0 * p).collect();
    let (amplitude, direction) = numutil::circular_mean(&doubled);
    Ok(PhiCharacterization {
        histogram_flatness: histogram_flatness(&phis, 16),
        p_yy: p_yy.mean(),
        amplitude,
        xi: direction.clamp(0.0, std::f64::consts::FRAC_PI_2),
        mean_xz: xz.mean(),
        mean_yy: yy.mean(),
        n_used: phis.len(),
        excluded_low_entanglement: excluded_low,
        excluded_condition: excluded_cond,
        fit: None,
        phi_samples: phis,
    })
}

/// Normalized Shannon entropy of a fixed-bin histogram of the angles;
/// `1` for a flat distribution, `→ 0` for a point mass. The angle is
/// `π`-periodic (`Φ` and `Φ ± π` label the same ray), so the bins wrap, and
/// they are offset by half a width so that a point mass at `Φ = 0` — the
/// cluster-point distribution — sits mid-bin instead of on an edge.
fn histogram_flatness(phis: &[f64], bins: usize) -> f64 {
    if phis.is_empty() || bins < 2 {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    let half = std::f64::consts::FRAC_PI_2;
    for &p in phis {
        let t = ((p + half) / std::f64::consts::PI + 0.5 / bins as f64).rem_euclid(1.0);
        counts[((t * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let total = phis.len() as f64;
    let entropy: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    entropy / (bins as f64).ln()
}

/// Fits `ξ(J) = π/4 (tanh[K(J − η)] + 1)` by weighted Levenberg–Marquardt.
/// Standard errors come from the inverse weighted normal matrix at the
/// optimum; a fit that fails to converge is flagged, not silently accepted.
pub fn fit_transition(js: &[f64], xis: &[f64], errs: &[f64]) -> LocentResult<TanhFit> {
    if js.len() != xis.len() || xis.len() != errs.len() {
        return Err(LocentError::BadData("length mismatch between inputs".into()));
    }
    if js.len() < 3 {
        return Err(LocentError::BadData(format!(
            "need at least 3 points to fit two parameters, got {}",
            js.len()
        )));
    }
    let quarter = std::f64::consts::FRAC_PI_4;
    let ws: Vec<f64> = errs
        .iter()
        .map(|&e| {
            let sigma = e.max(1e-9);
            1.0 / (sigma * sigma)
        })
        .collect();
    // Start η where ξ crosses the midpoint π/4, K from the grid scale.
    let eta0 = js
        .iter()
        .zip(xis)
        .min_by(|a, b| (a.1 - quarter).abs().total_cmp(&(b.1 - quarter).abs()))
        .map(|(&j, _)| j)
        .unwrap_or(0.5);
    let span = js.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - js.iter().cloned().fold(f64::INFINITY, f64::min);
    let k0 = if span > 0.0 { 4.0 / span } else { 10.0 };
    let model = |j: f64, p: &[f64]| quarter * ((p[0] * (j - p[1])).tanh() + 1.0);
    let jacobian = |j: f64, p: &[f64]| {
        let u = p[0] * (j - p[1]);
        let sech2 = 1.0 / u.cosh().powi(2);
        vec![quarter * sech2 * (j - p[1]), -quarter * sech2 * p[0]]
    };
    let lm = numutil::levenberg_marquardt(js, xis, &ws, &[k0, eta0], model, jacobian, 200);
    // Parameter covariance from the weighted normal matrix at the optimum.
    let mut jtj = DMatrix::<f64>::zeros(2, 2);
    for (&j, &w) in js.iter().zip(&ws) {
        let g = jacobian(j, &lm.params);
        for a in 0..2 {
            for b in 0..2 {
                jtj[(a, b)] += w * g[a] * g[b];
            }
        }
    }
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| LocentError::BadData("singular normal matrix in transition fit".into()))?;
    Ok(TanhFit {
        k: lm.params[0],
        eta: lm.params[1],
        k_se: cov[(0, 0)].max(0.0).sqrt(),
        eta_se: cov[(1, 1)].max(0.0).sqrt(),
        chi2: lm.chi2,
        converged: lm.converged,
    })
}
