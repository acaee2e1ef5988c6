//! Sequential sampling of single-site measurement plans on an MPS.
//!
//! A plan measures every site of the chain except two, each in its own
//! x–z-plane basis. Outcomes are drawn site by site from the exact
//! conditional Born distribution: sites already measured enter the
//! contraction through their collapsed bond matrices, sites not yet measured
//! through their summed transfer matrices. Because plans run in ascending
//! site order, the environment to the right of the current site never
//! depends on outcomes, so its transfer products are computed once per
//! sampler and shared across samples.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;

use super::{MatrixProductState, MpsBoundary, MpsError, MpsResult};

/// An ordered single-site measurement plan: `(site, ξ)` entries with
/// strictly ascending sites, each angle in `[0, π)`. Outcome 0 projects
/// onto `cos ξ|0⟩ + sin ξ|1⟩` (ξ = 0 measures σ^z, ξ = π/4 measures σ^x),
/// outcome 1 onto the orthogonal state.
#[derive(Clone, Debug)]
pub struct MeasurementPlan {
    entries: Vec<(usize, f64)>,
}

impl MeasurementPlan {
    pub fn new(entries: Vec<(usize, f64)>) -> MpsResult<Self> {
        for pair in entries.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(MpsError::BadPlan(format!(
                    "sites must be strictly ascending, got {} then {}",
                    pair[0].0, pair[1].0
                )));
            }
        }
        for &(site, angle) in &entries {
            if !(0.0..std::f64::consts::PI).contains(&angle) {
                return Err(MpsError::BadPlan(format!("angle {angle} at site {site} outside [0, π)")));
            }
        }
        Ok(MeasurementPlan { entries })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Converts to the `(site, ξ)` list used by dense reference walkers.
    pub fn as_pairs(&self) -> Vec<(usize, f64)> {
        self.entries.clone()
    }
}

/// Outcomes of one sampled run of a measurement plan.
#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    /// One outcome (0 or 1) per plan entry, in plan order.
    pub outcomes: Vec<u8>,
    /// Product of the conditional probabilities of the drawn outcomes.
    pub joint_probability: f64,
}

/// The pure state left on the two unmeasured sites after a plan completes.
#[derive(Clone, Debug)]
pub struct ResidualPair {
    /// The two unmeasured sites `(a, b)` with `a < b`.
    pub sites: (usize, usize),
    /// Normalized amplitudes indexed by `2·s_a + s_b`.
    pub amps: [f64; 4],
}

/// One branch of an exhaustively enumerated plan.
#[derive(Clone, Debug)]
pub struct SampledBranch {
    pub outcomes: Vec<u8>,
    pub probability: f64,
    pub residual: ResidualPair,
}

enum Environment {
    /// Ring: suffix transfer products `T_k ⋯ T_{n-1}` as matrices.
    Ring { suffix: Vec<DMatrix<f64>> },
    /// Open chain: suffix products contracted into the right boundary
    /// pair-vector, `T_k ⋯ T_{n-1} (r⊗r)`.
    Open { left: RowDVector<f64>, suffix: Vec<DVector<f64>> },
}

enum Frontier {
    Ring(DMatrix<f64>),
    Open(RowDVector<f64>),
}

/// Draws measurement-plan samples from a fixed state. Construction
/// precomputes everything outcome-independent (per-site transfers, suffix
/// environments, rotated components per entry), so repeated sampling costs
/// one `D²×D²` product per measured site.
pub struct PlanSampler<'a> {
    state: &'a MatrixProductState,
    entries: Vec<(usize, f64)>,
    residual_sites: (usize, usize),
    transfers: Vec<DMatrix<f64>>,
    env: Environment,
    /// Collapsed bond matrices `B_s` per entry and outcome.
    bonds: Vec<[DMatrix<f64>; 2]>,
    /// Their transfer-level images `B_s ⊗ B_s`.
    kproj: Vec<[DMatrix<f64>; 2]>,
}

impl<'a> PlanSampler<'a> {
    pub fn new(state: &'a MatrixProductState, plan: &MeasurementPlan) -> MpsResult<Self> {
        let n = state.n();
        if n < 3 {
            return Err(MpsError::TooShort { n, min: 3 });
        }
        if let Some(&(site, _)) = plan.entries.iter().find(|(s, _)| *s >= n) {
            return Err(MpsError::SiteOutOfRange { site, n });
        }
        if plan.entries.len() + 2 != n {
            return Err(MpsError::BadPlan(format!(
                "plan covers {} of {} sites; exactly two must stay unmeasured",
                plan.entries.len(),
                n
            )));
        }
        let mut unmeasured = Vec::with_capacity(2);
        let mut next = plan.entries.iter().peekable();
        for site in 0..n {
            if next.peek().is_some_and(|(s, _)| *s == site) {
                next.next();
            } else {
                unmeasured.push(site);
            }
        }
        debug_assert_eq!(unmeasured.len(), 2);
        let residual_sites = (unmeasured[0], unmeasured[1]);

        let transfers: Vec<DMatrix<f64>> = (0..n).map(|s| state.site_transfer(s)).collect();
        let d2 = state.bond_dim() * state.bond_dim();
        let env = match state.boundary() {
            MpsBoundary::Ring => {
                let mut suffix = vec![DMatrix::identity(d2, d2); n + 1];
                for k in (0..n).rev() {
                    suffix[k] = &transfers[k] * &suffix[k + 1];
                }
                Environment::Ring { suffix }
            }
            MpsBoundary::Open { left, right } => {
                let rr = pair_vector(right);
                let mut suffix = vec![rr; n + 1];
                for k in (0..n).rev() {
                    suffix[k] = &transfers[k] * &suffix[k + 1];
                }
                Environment::Open { left: pair_vector(left).transpose(), suffix }
            }
        };
        let mut bonds = Vec::with_capacity(plan.entries.len());
        let mut kproj = Vec::with_capacity(plan.entries.len());
        for &(site, xi) in &plan.entries {
            let b0 = state.collapsed_component(site, xi, 0);
            let b1 = state.collapsed_component(site, xi, 1);
            kproj.push([b0.kronecker(&b0), b1.kronecker(&b1)]);
            bonds.push([b0, b1]);
        }
        Ok(PlanSampler {
            state,
            entries: plan.entries.clone(),
            residual_sites,
            transfers,
            env,
            bonds,
            kproj,
        })
    }

    /// The two sites the plan leaves unmeasured.
    pub fn residual_sites(&self) -> (usize, usize) {
        self.residual_sites
    }

    fn start_frontier(&self) -> Frontier {
        match &self.env {
            Environment::Ring { .. } => {
                let d2 = self.state.bond_dim() * self.state.bond_dim();
                Frontier::Ring(DMatrix::identity(d2, d2))
            }
            Environment::Open { left, .. } => Frontier::Open(left.clone()),
        }
    }

    fn advance(&self, frontier: &mut Frontier, from: usize, to: usize) {
        for site in from..to {
            match frontier {
                Frontier::Ring(l) => *l *= &self.transfers[site],
                Frontier::Open(l) => *l *= &self.transfers[site],
            }
        }
    }

    /// Unnormalized weights of the two outcomes at entry `k` given the
    /// frontier (prefix contraction up to the entry's site).
    fn outcome_weights(&self, frontier: &Frontier, k: usize) -> [f64; 2] {
        let site = self.entries[k].0;
        match (&self.env, frontier) {
            (Environment::Ring { suffix }, Frontier::Ring(l)) => {
                // tr(L·K_s·S) = tr((S·L)·K_s); one product serves both outcomes.
                let sl = &suffix[site + 1] * l;
                [trace_product(&sl, &self.kproj[k][0]), trace_product(&sl, &self.kproj[k][1])]
            }
            (Environment::Open { suffix, .. }, Frontier::Open(l)) => {
                let weight = |m: &DMatrix<f64>| (l * m * &suffix[site + 1])[(0, 0)];
                [weight(&self.kproj[k][0]), weight(&self.kproj[k][1])]
            }
            _ => unreachable!("frontier always matches environment"),
        }
    }

    fn fold_outcome(&self, frontier: &mut Frontier, k: usize, outcome: u8) {
        let kp = &self.kproj[k][outcome as usize];
        match frontier {
            Frontier::Ring(l) => *l *= kp,
            Frontier::Open(l) => *l *= kp,
        }
    }

    /// Draws one full outcome sequence and the residual two-site state.
    pub fn sample(&self, rng: &mut impl Rng) -> MpsResult<(MeasurementRecord, ResidualPair)> {
        let mut frontier = self.start_frontier();
        let mut pos = 0;
        let mut outcomes = Vec::with_capacity(self.entries.len());
        let mut joint = 1.0;
        for k in 0..self.entries.len() {
            let site = self.entries[k].0;
            self.advance(&mut frontier, pos, site);
            let w = self.outcome_weights(&frontier, k);
            let total = w[0] + w[1];
            if !(total > 0.0) {
                return Err(MpsError::ZeroNorm);
            }
            let p0 = (w[0] / total).clamp(0.0, 1.0);
            let outcome = u8::from(rng.gen::<f64>() >= p0);
            joint *= if outcome == 0 { p0 } else { 1.0 - p0 };
            self.fold_outcome(&mut frontier, k, outcome);
            outcomes.push(outcome);
            pos = site + 1;
        }
        let residual = self.residual_pair(&outcomes)?;
        Ok((MeasurementRecord { outcomes, joint_probability: joint }, residual))
    }

    /// Walks every outcome sequence of the plan, returning joint
    /// probabilities and residual pair states. Branches below `1e-14`
    /// probability are dropped. Exponential in plan length; intended for
    /// cross-checks on short chains.
    pub fn enumerate(&self) -> MpsResult<Vec<SampledBranch>> {
        let mut acc = Vec::new();
        let mut outcomes = Vec::with_capacity(self.entries.len());
        self.walk(self.start_frontier(), 0, 0, 1.0, &mut outcomes, &mut acc)?;
        Ok(acc)
    }

    fn walk(
        &self,
        frontier: Frontier,
        k: usize,
        pos: usize,
        prob: f64,
        outcomes: &mut Vec<u8>,
        acc: &mut Vec<SampledBranch>,
    ) -> MpsResult<()> {
        if k == self.entries.len() {
            let residual = self.residual_pair(outcomes)?;
            acc.push(SampledBranch { outcomes: outcomes.clone(), probability: prob, residual });
            return Ok(());
        }
        let site = self.entries[k].0;
        let mut frontier = frontier;
        self.advance(&mut frontier, pos, site);
        let w = self.outcome_weights(&frontier, k);
        let total = w[0] + w[1];
        if !(total > 0.0) {
            return Err(MpsError::ZeroNorm);
        }
        for outcome in 0..2u8 {
            let p = prob * (w[outcome as usize] / total).clamp(0.0, 1.0);
            if p < 1e-14 {
                continue;
            }
            let mut next = match &frontier {
                Frontier::Ring(l) => Frontier::Ring(l.clone()),
                Frontier::Open(l) => Frontier::Open(l.clone()),
            };
            self.fold_outcome(&mut next, k, outcome);
            outcomes.push(outcome);
            self.walk(next, k + 1, site + 1, p, outcomes, acc)?;
            outcomes.pop();
        }
        Ok(())
    }

    /// Reconstructs the normalized residual state on the unmeasured pair
    /// from a complete outcome sequence, by multiplying the collapsed bond
    /// matrices along the chain.
    fn residual_pair(&self, outcomes: &[u8]) -> MpsResult<ResidualPair> {
        let (a, b) = self.residual_sites;
        let d = self.state.bond_dim();
        let bond = |k: usize| &self.bonds[k][outcomes[k] as usize];
        let mut amps = [0.0; 4];
        match self.state.boundary() {
            MpsBoundary::Ring => {
                let mut between = DMatrix::identity(d, d);
                let mut wrap = DMatrix::identity(d, d);
                let mut before = DMatrix::identity(d, d);
                for (k, &(site, _)) in self.entries.iter().enumerate() {
                    if site > a && site < b {
                        between *= bond(k);
                    } else if site > b {
                        wrap *= bond(k);
                    } else {
                        before *= bond(k);
                    }
                }
                let tail = wrap * before;
                for (sa, sb) in (0..2).flat_map(|x| (0..2).map(move |y| (x, y))) {
                    let ta = &self.state.tensor(a)[sa];
                    let tb = &self.state.tensor(b)[sb];
                    amps[2 * sa + sb] = (ta * &between * tb * &tail).trace();
                }
            }
            MpsBoundary::Open { left, right } => {
                let mut head = DMatrix::identity(d, d);
                let mut between = DMatrix::identity(d, d);
                let mut tail = DMatrix::identity(d, d);
                for (k, &(site, _)) in self.entries.iter().enumerate() {
                    if site < a {
                        head *= bond(k);
                    } else if site < b {
                        between *= bond(k);
                    } else {
                        tail *= bond(k);
                    }
                }
                let lrow = left.transpose() * &head;
                let rcol = &tail * right;
                for (sa, sb) in (0..2).flat_map(|x| (0..2).map(move |y| (x, y))) {
                    let ta = &self.state.tensor(a)[sa];
                    let tb = &self.state.tensor(b)[sb];
                    amps[2 * sa + sb] = (&lrow * ta * &between * tb * &rcol)[(0, 0)];
                }
            }
        }
        let norm = amps.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return Err(MpsError::ZeroNorm);
        }
        for x in &mut amps {
            *x /= norm;
        }
        Ok(ResidualPair { sites: (a, b), amps })
    }
}

/// `v ⊗ v` with the same index convention as the matrix Kronecker products
/// used for transfers: component `(i·D + j) = v_i · v_j`.
fn pair_vector(v: &DVector<f64>) -> DVector<f64> {
    let d = v.len();
    DVector::from_fn(d * d, |idx, _| v[idx / d] * v[idx % d])
}

/// `tr(A·B)` without forming the product.
fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}
