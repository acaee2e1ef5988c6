//! Shared model types: chain parameters, Pauli strings, and the Hamiltonian
//! as an explicit list of weighted Pauli strings.
//!
//! Every other module consumes these types, so the conventions are fixed
//! here once:
//!
//! - sites are `0..n`, and on a ring all site arithmetic is mod `n`;
//! - the stabilizer attached to site `μ` is `K_μ = σ^z_{μ-1} σ^x_μ σ^z_{μ+1}`;
//! - the full Hamiltonian is
//!   `H = -Σ K_μ - Σ (Bx σ^x_μ + Bz σ^z_μ) - J Σ σ^z_μ σ^z_{μ+1}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced while constructing model descriptions.
#[derive(Debug, Error)]
pub enum ChainError {
    /// Returned when a chain length is too small for the requested topology.
    #[error("chain length {n} is too small: {reason}")]
    ChainTooShort { n: usize, reason: &'static str },

    /// Returned when a coupling value is outside its allowed range.
    #[error("invalid coupling {name} = {value}: {reason}")]
    BadCoupling {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Returned when a Pauli string repeats a site.
    #[error("pauli string repeats site {0}")]
    RepeatedSite(usize),

    /// Returned when a Pauli string references a site outside the chain.
    #[error("pauli string site {site} out of range for {n} sites")]
    SiteOutOfRange { site: usize, n: usize },
}

/// Result alias for model-construction operations.
pub type ChainResult<T> = Result<T, ChainError>;

/// Boundary conditions for the chain.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Ring: site `n-1` neighbors site `0`. Every site carries a full
    /// three-body stabilizer.
    #[default]
    Periodic,
    /// Open chain with the end stabilizers truncated to their two-body
    /// remnants `σ^x_0 σ^z_1` and `σ^z_{n-2} σ^x_{n-1}`, which keeps the
    /// ground state unique at the cluster point.
    Open,
    /// Open chain with the end stabilizers dropped entirely; only the bulk
    /// stabilizers `K_1 .. K_{n-2}` remain. This is the open-chain variant
    /// that stays quadratic after the fermion mapping, so it is what
    /// [`crate::fermion`] solves; the oracle supports it for cross-checks.
    OpenBare,
}

impl Boundary {
    /// True for either open variant.
    pub fn is_open(self) -> bool {
        !matches!(self, Boundary::Periodic)
    }
}

/// Couplings and geometry of one chain instance.
///
/// `by` is absent by construction: the whole treatment (real ground states,
/// the fermion mapping, the measurement bases) assumes the field lies in the
/// x–z plane.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Number of sites (≥ 3).
    pub n: usize,
    /// Ising coupling `J ≥ 0` on `σ^z σ^z` bonds.
    pub j: f64,
    /// Field component along x.
    pub bx: f64,
    /// Field component along z.
    pub bz: f64,
    /// Boundary conditions.
    pub boundary: Boundary,
}

impl ChainParams {
    /// Periodic chain of `n` sites with the given couplings.
    pub fn ring(n: usize, j: f64, bx: f64, bz: f64) -> Self {
        Self { n, j, bx, bz, boundary: Boundary::Periodic }
    }

    /// Open chain (truncated end stabilizers) of `n` sites.
    pub fn open(n: usize, j: f64, bx: f64, bz: f64) -> Self {
        Self { n, j, bx, bz, boundary: Boundary::Open }
    }

    /// The pure cluster Hamiltonian on a ring: `J = Bx = Bz = 0`.
    pub fn cluster_ring(n: usize) -> Self {
        Self::ring(n, 0.0, 0.0, 0.0)
    }

    /// Checks lengths and coupling ranges.
    pub fn validate(&self) -> ChainResult<()> {
        if self.n < 3 {
            return Err(ChainError::ChainTooShort {
                n: self.n,
                reason: "stabilizers span three sites",
            });
        }
        for (name, value) in [("j", self.j), ("bx", self.bx), ("bz", self.bz)] {
            if !value.is_finite() {
                return Err(ChainError::BadCoupling { name, value, reason: "must be finite" });
            }
        }
        if self.j < 0.0 {
            return Err(ChainError::BadCoupling {
                name: "j",
                value: self.j,
                reason: "the Ising coupling is taken ≥ 0",
            });
        }
        Ok(())
    }

    /// The point `(J/Bx, 1/Bx)` related to `(J, Bx)` by the self-duality of
    /// the `Bz = 0` model. Energies obey
    /// `E(J, Bx) = Bx · E(J/Bx, 1/Bx)` on a ring.
    pub fn dual_point(j: f64, bx: f64) -> (f64, f64) {
        (j / bx, 1.0 / bx)
    }
}

/// Single-site Pauli operators.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    /// Everything downstream works with real arithmetic: `σ^y` is stored as
    /// the real matrix `[[0, -1], [1, 0]]` together with one power of `i`
    /// accounted separately (`σ^y = i · [[0,-1],[1,0]]`).
    ///
    /// `real_action(b)` returns `(b', w)` such that the *real part* of the
    /// operator maps basis state `|b⟩ ↦ w |b'⟩`.
    pub fn real_action(self, b: usize) -> (usize, f64) {
        debug_assert!(b < 2);
        match self {
            Pauli::X => (1 - b, 1.0),
            Pauli::Y => (1 - b, if b == 0 { 1.0 } else { -1.0 }),
            Pauli::Z => (b, if b == 0 { 1.0 } else { -1.0 }),
        }
    }

    /// The real 2×2 matrix of [`Pauli::real_action`], row index first.
    pub fn real_matrix(self) -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for b in 0..2 {
            let (b2, w) = self.real_action(b);
            m[b2][b] = w;
        }
        m
    }

    /// Number of factors of `i` carried by the real-matrix convention
    /// (1 for `σ^y`, 0 otherwise).
    pub fn i_power(self) -> u32 {
        matches!(self, Pauli::Y) as u32
    }
}

/// A product of Pauli operators on *distinct* sites, kept sorted by site.
///
/// The identity is the empty string. With the real-matrix convention of
/// [`Pauli::real_action`], the operator equals `i^y · R` where `y` is the
/// number of `σ^y` factors and `R` is a real matrix; for the real states
/// used throughout this crate, expectation values of strings with odd `y`
/// therefore vanish identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    ops: Vec<(usize, Pauli)>,
}

impl PauliString {
    /// Builds a string from `(site, pauli)` pairs. Sites must be distinct.
    pub fn new(ops: impl IntoIterator<Item = (usize, Pauli)>) -> ChainResult<Self> {
        let mut ops: Vec<_> = ops.into_iter().collect();
        ops.sort_by_key(|&(site, _)| site);
        for w in ops.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ChainError::RepeatedSite(w[0].0));
            }
        }
        Ok(Self { ops })
    }

    /// Single-site string.
    pub fn single(site: usize, p: Pauli) -> Self {
        Self { ops: vec![(site, p)] }
    }

    /// The identity.
    pub fn identity() -> Self {
        Self { ops: Vec::new() }
    }

    /// `(site, pauli)` factors in increasing site order.
    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.ops
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    /// Number of `σ^y` factors.
    pub fn y_count(&self) -> usize {
        self.ops.iter().filter(|&&(_, p)| p == Pauli::Y).count()
    }

    /// Largest site index touched, if any.
    pub fn max_site(&self) -> Option<usize> {
        self.ops.last().map(|&(s, _)| s)
    }

    /// Checks that all sites lie in `0..n`.
    pub fn check_sites(&self, n: usize) -> ChainResult<()> {
        match self.max_site() {
            Some(site) if site >= n => Err(ChainError::SiteOutOfRange { site, n }),
            _ => Ok(()),
        }
    }
}

/// A Hamiltonian as an explicit list of weighted Pauli strings.
///
/// This is the single source of truth for "what the model is": the dense
/// oracle applies these terms directly, ring energies are sums of their
/// expectation values, and the variational solver's operator representation
/// is tested against the dense matrix this list generates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hamiltonian {
    /// Number of sites.
    pub n: usize,
    /// Weighted Pauli strings; `H = Σ_k c_k P_k`.
    pub terms: Vec<(f64, PauliString)>,
}

impl Hamiltonian {
    /// The standard model for the given parameters (see module docs).
    /// Zero couplings contribute no terms.
    pub fn standard(params: &ChainParams) -> ChainResult<Self> {
        params.validate()?;
        let n = params.n;
        let mut terms = Vec::new();

        let stab = |m: usize| -> ChainResult<PauliString> {
            PauliString::new([
                ((m + n - 1) % n, Pauli::Z),
                (m, Pauli::X),
                ((m + 1) % n, Pauli::Z),
            ])
        };

        match params.boundary {
            Boundary::Periodic => {
                for m in 0..n {
                    terms.push((-1.0, stab(m)?));
                }
            }
            Boundary::Open => {
                for m in 1..n - 1 {
                    terms.push((-1.0, stab(m)?));
                }
                terms.push((-1.0, PauliString::new([(0, Pauli::X), (1, Pauli::Z)])?));
                terms.push((-1.0, PauliString::new([(n - 2, Pauli::Z), (n - 1, Pauli::X)])?));
            }
            Boundary::OpenBare => {
                for m in 1..n - 1 {
                    terms.push((-1.0, stab(m)?));
                }
            }
        }

        if params.bx != 0.0 {
            for m in 0..n {
                terms.push((-params.bx, PauliString::single(m, Pauli::X)));
            }
        }
        if params.bz != 0.0 {
            for m in 0..n {
                terms.push((-params.bz, PauliString::single(m, Pauli::Z)));
            }
        }
        if params.j != 0.0 {
            let bonds = if params.boundary.is_open() { n - 1 } else { n };
            for m in 0..bonds {
                terms.push((
                    -params.j,
                    PauliString::new([(m, Pauli::Z), ((m + 1) % n, Pauli::Z)])?,
                ));
            }
        }

        Ok(Self { n, terms })
    }
}
