//! Dense state-vector reference implementation for small chains.
//!
//! Everything here is deliberately simple and assumption-free: states are
//! explicit vectors of `2^n` real amplitudes, operators act term by term,
//! and eigenproblems are solved densely (or by Lanczos for the larger sizes
//! this module allows). The point is not speed — it is to provide ground
//! truth that the clever modules ([`crate::fermion`], [`crate::mps`],
//! [`crate::vmps`]) are tested against.
//!
//! Real amplitudes suffice: the Hamiltonian family has no `σ^y` terms and
//! all measurement bases used by the protocols lie in the x–z plane, so
//! ground states and every post-measurement state are real. `σ^y` in
//! observables is handled by the real-matrix-plus-phase convention of
//! [`Pauli::real_action`].
//!
//! Basis convention: basis states are bit strings where bit `μ` of the index
//! is the state of site `μ` (so site 0 is the least significant bit), and
//! `|0⟩` is the `σ^z = +1` eigenstate.

use crate::chain::{Boundary, ChainError, ChainParams, Hamiltonian, Pauli, PauliString};
use crate::numutil::entropy_bits;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Largest chain a dense state vector is allowed to represent.
pub const MAX_DENSE_SITES: usize = 14;

/// Largest chain for which full dense Hamiltonian matrices may be built.
pub const MAX_DENSE_MATRIX_SITES: usize = 12;

/// Errors from the dense reference simulator.
#[derive(Debug, Error)]
pub enum OracleError {
    /// Returned when a chain is too large for a dense representation.
    #[error("dense simulation limited to {max} sites, got {n}")]
    TooLarge { n: usize, max: usize },

    /// Propagated model-construction error.
    #[error(transparent)]
    Chain(#[from] ChainError),

    /// The parity-sector decomposition only exists without a z field.
    #[error("sector decomposition requires bz = 0, got bz = {0}")]
    SectorNeedsBzZero(f64),

    /// Returned when Lanczos fails to settle within its iteration budget.
    #[error("lanczos did not converge within {0} iterations")]
    NoConvergence(usize),

    /// Returned when a two-site state expected to be pure is not.
    #[error("state on sites ({a}, {b}) is not pure: mixedness defect {defect:.3e}")]
    NotPure { a: usize, b: usize, defect: f64 },

    /// A term with an odd number of `σ^y` factors has no real matrix.
    #[error("operator term has an odd number of σ^y factors and no real representation")]
    OddImaginaryTerm,
}

/// Result alias for oracle operations.
pub type OracleResult<T> = Result<T, OracleError>;

fn check_size(n: usize, max: usize) -> OracleResult<()> {
    if n == 0 || n > max {
        Err(OracleError::TooLarge { n, max })
    } else {
        Ok(())
    }
}

/// A pure state of `n` qubits as a dense vector of real amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<f64>,
}

impl DenseState {
    /// Wraps raw amplitudes (length must be `2^n`); does not normalize.
    pub fn from_amps(n: usize, amps: Vec<f64>) -> OracleResult<Self> {
        check_size(n, MAX_DENSE_SITES)?;
        assert_eq!(amps.len(), 1 << n, "amplitude count must be 2^n");
        Ok(Self { n, amps })
    }

    /// The computational basis state `|b⟩` for bit pattern `index`.
    pub fn computational(n: usize, index: usize) -> OracleResult<Self> {
        check_size(n, MAX_DENSE_SITES)?;
        let mut amps = vec![0.0; 1 << n];
        amps[index] = 1.0;
        Ok(Self { n, amps })
    }

    /// `|+⟩^⊗n`, the uniform superposition.
    pub fn plus(n: usize) -> OracleResult<Self> {
        check_size(n, MAX_DENSE_SITES)?;
        let dim = 1usize << n;
        let a = (dim as f64).sqrt().recip();
        Ok(Self { n, amps: vec![a; dim] })
    }

    /// The cluster state: `|+⟩^⊗n` with a controlled-Z on every bond.
    /// `Periodic` closes the ring; both open variants use `n-1` bonds.
    pub fn cluster(n: usize, boundary: Boundary) -> OracleResult<Self> {
        let mut st = Self::plus(n)?;
        let bonds = if boundary.is_open() { n - 1 } else { n };
        for m in 0..bonds {
            let (a, b) = (m, (m + 1) % n);
            let mask = (1usize << a) | (1usize << b);
            for (idx, amp) in st.amps.iter_mut().enumerate() {
                if idx & mask == mask {
                    *amp = -*amp;
                }
            }
        }
        Ok(st)
    }

    /// `(|0…0⟩ + |1…1⟩)/√2`.
    pub fn ghz(n: usize) -> OracleResult<Self> {
        check_size(n, MAX_DENSE_SITES)?;
        let dim = 1usize << n;
        let mut amps = vec![0.0; dim];
        let a = 0.5_f64.sqrt();
        amps[0] = a;
        amps[dim - 1] = a;
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[f64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            for a in &mut self.amps {
                *a /= norm;
            }
        }
    }

    /// `⟨self|other⟩` (real inner product).
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.amps.iter().zip(&other.amps).map(|(a, b)| a * b).sum()
    }

    /// Applies the *real part* of a Pauli string (see [`Pauli::real_action`]);
    /// the caller is responsible for the accompanying `i^y` phase.
    pub fn apply_pauli_real(&self, s: &PauliString) -> Self {
        let (flip, zy) = string_masks(s);
        let mut out = vec![0.0; self.amps.len()];
        for (idx, &a) in self.amps.iter().enumerate() {
            let sign = 1.0 - 2.0 * ((idx & zy).count_ones() & 1) as f64;
            out[idx ^ flip] = sign * a;
        }
        Self { n: self.n, amps: out }
    }

    /// `⟨ψ|P|ψ⟩` for a Pauli string `P`. Strings with an odd number of `σ^y`
    /// factors have purely imaginary real-matrix parts, hence expectation 0
    /// on the real states this module produces.
    pub fn expect_pauli(&self, s: &PauliString) -> f64 {
        let y = s.y_count();
        if y % 2 == 1 {
            return 0.0;
        }
        let (flip, zy) = string_masks(s);
        let mut acc = 0.0;
        for (idx, &a) in self.amps.iter().enumerate() {
            let sign = 1.0 - 2.0 * ((idx & zy).count_ones() & 1) as f64;
            acc += self.amps[idx ^ flip] * sign * a;
        }
        // i^y = (-1)^(y/2) for even y.
        if y % 4 == 2 {
            -acc
        } else {
            acc
        }
    }

    /// Projects site `site` onto the normalized single-qubit state
    /// `c0|0⟩ + c1|1⟩` without renormalizing. Returns the projected state
    /// and the outcome probability `‖P|ψ⟩‖²` (assuming `‖ψ‖ = 1`).
    pub fn project_site(&self, site: usize, c0: f64, c1: f64) -> (Self, f64) {
        debug_assert!((c0 * c0 + c1 * c1 - 1.0).abs() < 1e-12, "basis state must be normalized");
        let mask = 1usize << site;
        let mut out = vec![0.0; self.amps.len()];
        let mut prob = 0.0;
        for idx0 in 0..self.amps.len() {
            if idx0 & mask != 0 {
                continue;
            }
            let idx1 = idx0 | mask;
            let ovl = c0 * self.amps[idx0] + c1 * self.amps[idx1];
            prob += ovl * ovl;
            out[idx0] = c0 * ovl;
            out[idx1] = c1 * ovl;
        }
        (Self { n: self.n, amps: out }, prob)
    }

    /// Two-site reduced density matrix on `(a, b)`, indexed by
    /// `2·s_a + s_b`.
    pub fn rdm2(&self, a: usize, b: usize) -> DMatrix<f64> {
        assert!(a < self.n && b < self.n && a != b);
        let (ma, mb) = (1usize << a, 1usize << b);
        let pair = ma | mb;
        let embed = |k: usize, base: usize| -> usize {
            base | if k & 2 != 0 { ma } else { 0 } | if k & 1 != 0 { mb } else { 0 }
        };
        let mut rho = DMatrix::<f64>::zeros(4, 4);
        for base in 0..self.amps.len() {
            if base & pair != 0 {
                continue;
            }
            for r in 0..4 {
                let ar = self.amps[embed(r, base)];
                if ar == 0.0 {
                    continue;
                }
                for c in 0..4 {
                    rho[(r, c)] += ar * self.amps[embed(c, base)];
                }
            }
        }
        rho
    }

    /// Single-site reduced density matrix.
    pub fn rdm1(&self, site: usize) -> DMatrix<f64> {
        assert!(site < self.n);
        let mask = 1usize << site;
        let mut rho = DMatrix::<f64>::zeros(2, 2);
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            let a0 = self.amps[base];
            let a1 = self.amps[base | mask];
            rho[(0, 0)] += a0 * a0;
            rho[(0, 1)] += a0 * a1;
            rho[(1, 0)] += a1 * a0;
            rho[(1, 1)] += a1 * a1;
        }
        rho
    }

    /// Entanglement entropy (bits) of the block of sites `0..len` with the
    /// rest of the chain.
    pub fn entropy_prefix_bits(&self, len: usize) -> f64 {
        assert!(len >= 1 && len < self.n);
        let rows = 1usize << len;
        let cols = 1usize << (self.n - len);
        // ρ_block = M Mᵀ with M the amplitude matrix (block index = row).
        let mut rho = DMatrix::<f64>::zeros(rows, rows);
        for c in 0..cols {
            let off = c << len;
            for r1 in 0..rows {
                let a1 = self.amps[off | r1];
                if a1 == 0.0 {
                    continue;
                }
                for r2 in 0..rows {
                    rho[(r1, r2)] += a1 * self.amps[off | r2];
                }
            }
        }
        entropy_bits(rho.symmetric_eigen().eigenvalues.as_slice())
    }

    /// Extracts the pure two-qubit state on `(a, b)`, assuming the rest of
    /// the chain is disentangled from the pair (e.g. after every other site
    /// has been projectively measured). Errors if the pair is actually mixed.
    /// The returned amplitudes are indexed by `2·s_a + s_b` and normalized;
    /// the overall sign is arbitrary.
    pub fn pure_two_qubit(&self, a: usize, b: usize) -> OracleResult<[f64; 4]> {
        let trace_norm = {
            let nrm = self.norm();
            nrm * nrm
        };
        let rho = self.rdm2(a, b) / trace_norm;
        let eig = rho.symmetric_eigen();
        let mut max_i = 0;
        for i in 1..4 {
            if eig.eigenvalues[i] > eig.eigenvalues[max_i] {
                max_i = i;
            }
        }
        let defect = 1.0 - eig.eigenvalues[max_i];
        if defect.abs() > 1e-8 {
            return Err(OracleError::NotPure { a, b, defect });
        }
        let col = eig.eigenvectors.column(max_i);
        Ok([col[0], col[1], col[2], col[3]])
    }

    /// In-place Hadamard on every site (the x↔z basis change). Involutive.
    pub fn hadamard_all(&mut self) {
        let inv_sqrt2 = 0.5_f64.sqrt();
        for site in 0..self.n {
            let mask = 1usize << site;
            for idx0 in 0..self.amps.len() {
                if idx0 & mask != 0 {
                    continue;
                }
                let idx1 = idx0 | mask;
                let (a, b) = (self.amps[idx0], self.amps[idx1]);
                self.amps[idx0] = (a + b) * inv_sqrt2;
                self.amps[idx1] = (a - b) * inv_sqrt2;
            }
        }
    }
}

fn string_masks(s: &PauliString) -> (usize, usize) {
    let mut flip = 0usize;
    let mut zy = 0usize;
    for &(site, p) in s.factors() {
        match p {
            Pauli::X => flip |= 1 << site,
            Pauli::Y => {
                flip |= 1 << site;
                zy |= 1 << site;
            }
            Pauli::Z => zy |= 1 << site,
        }
    }
    (flip, zy)
}

/// A Hamiltonian compiled to bit masks for fast matrix-free application.
/// Only defined for term lists whose strings all have even `σ^y` counts
/// (true of every model in this crate, which has none at all).
pub struct CompiledHamiltonian {
    n: usize,
    terms: Vec<(f64, usize, usize)>, // (coefficient, flip mask, sign mask)
}

impl CompiledHamiltonian {
    pub fn new(h: &Hamiltonian) -> OracleResult<Self> {
        check_size(h.n, MAX_DENSE_SITES)?;
        let mut terms = Vec::with_capacity(h.terms.len());
        for (c, s) in &h.terms {
            s.check_sites(h.n)?;
            let y = s.y_count();
            if y % 2 == 1 {
                return Err(OracleError::OddImaginaryTerm);
            }
            let (flip, zy) = string_masks(s);
            let coeff = if y % 4 == 2 { -c } else { *c };
            terms.push((coeff, flip, zy));
        }
        Ok(Self { n: h.n, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `out = H · x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for &(c, flip, zy) in &self.terms {
            for (idx, &a) in x.iter().enumerate() {
                let sign = 1.0 - 2.0 * ((idx & zy).count_ones() & 1) as f64;
                out[idx ^ flip] += c * sign * a;
            }
        }
    }

    /// `⟨x|H|x⟩ / ⟨x|x⟩`.
    pub fn rayleigh(&self, x: &[f64]) -> f64 {
        let mut hx = vec![0.0; x.len()];
        self.apply(x, &mut hx);
        let num: f64 = x.iter().zip(&hx).map(|(a, b)| a * b).sum();
        let den: f64 = x.iter().map(|a| a * a).sum();
        num / den
    }

    /// Dense matrix form (small chains only).
    pub fn dense(&self) -> OracleResult<DMatrix<f64>> {
        check_size(self.n, MAX_DENSE_MATRIX_SITES)?;
        let dim = 1usize << self.n;
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for &(c, flip, zy) in &self.terms {
            for idx in 0..dim {
                let sign = 1.0 - 2.0 * ((idx & zy).count_ones() & 1) as f64;
                m[(idx ^ flip, idx)] += c * sign;
            }
        }
        Ok(m)
    }
}

/// Options for [`lanczos_ground`].
#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Hard cap on Krylov dimension.
    pub max_iter: usize,
    /// Relative settling tolerance on the two lowest Ritz values.
    pub tol: f64,
    /// Seed for the random start vector.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { max_iter: 300, tol: 1e-13, seed: 7 }
    }
}

/// Ground-state data from an eigensolve.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    /// Second-lowest eigenvalue *seen by the solver*. For Lanczos with a
    /// degenerate ground space this is not a reliable spectral gap — use
    /// [`sector_spectra`] or [`ground_dense`] when the gap matters.
    pub first_excited: Option<f64>,
    pub state: DenseState,
    pub iterations: usize,
}

impl GroundState {
    pub fn gap(&self) -> Option<f64> {
        self.first_excited.map(|e1| e1 - self.energy)
    }
}

/// Lanczos with full reorthogonalization for the ground state of `h`.
///
/// Reliable for the ground *energy and vector* whenever the ground state is
/// unique; see [`GroundState::first_excited`] for the gap caveat.
pub fn lanczos_ground(h: &Hamiltonian, opts: &LanczosOptions) -> OracleResult<GroundState> {
    let ch = CompiledHamiltonian::new(h)?;
    lanczos_ground_compiled(&ch, opts)
}

/// [`lanczos_ground`] on a pre-compiled Hamiltonian.
pub fn lanczos_ground_compiled(
    ch: &CompiledHamiltonian,
    opts: &LanczosOptions,
) -> OracleResult<GroundState> {
    let dim = 1usize << ch.n;
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);

    let mut basis: Vec<Vec<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut prev = (f64::INFINITY, f64::INFINITY);
    let mut settled = false;
    let mut exhausted = false;

    for it in 0..opts.max_iter {
        ch.apply(&v, &mut w);
        if let Some(b) = betas.last() {
            let vm = &basis[basis.len() - 2];
            for (wi, pi) in w.iter_mut().zip(vm) {
                *wi -= b * pi;
            }
        }
        let alpha: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= alpha * vi;
        }
        alphas.push(alpha);
        // Full reorthogonalization, two passes for safety.
        for _ in 0..2 {
            for q in &basis {
                let ovl: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= ovl * qi;
                }
            }
        }
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();

        let check_now = beta < 1e-12 || it % 8 == 7 || it + 1 == opts.max_iter;
        if check_now {
            let (t0, t1) = lowest_two_ritz(&alphas, &betas);
            let scale = t0.abs().max(1.0);
            if (t0 - prev.0).abs() < opts.tol * scale
                && (prev.1.is_infinite() || t1.map_or(true, |t1| (t1 - prev.1).abs() < opts.tol * scale))
                && it > 4
            {
                settled = true;
            }
            prev = (t0, t1.unwrap_or(f64::INFINITY));
        }
        if beta < 1e-12 {
            exhausted = true;
            break;
        }
        if settled {
            break;
        }
        for x in &mut w {
            *x /= beta;
        }
        betas.push(beta);
        v = w.clone();
        basis.push(v.clone());
    }

    if !(settled || exhausted) {
        return Err(OracleError::NoConvergence(opts.max_iter));
    }

    let k = alphas.len();
    let t = tridiagonal(&alphas, &betas);
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let ground_col = eig.eigenvectors.column(order[0]);

    let mut amps = vec![0.0; dim];
    for (i, q) in basis.iter().take(k).enumerate() {
        let c = ground_col[i];
        for (a, qi) in amps.iter_mut().zip(q) {
            *a += c * qi;
        }
    }
    normalize(&mut amps);

    Ok(GroundState {
        energy: eig.eigenvalues[order[0]],
        first_excited: order.get(1).map(|&i| eig.eigenvalues[i]),
        state: DenseState { n: ch.n, amps },
        iterations: k,
    })
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v {
        *x /= norm;
    }
}

fn tridiagonal(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t
}

fn lowest_two_ritz(alphas: &[f64], betas: &[f64]) -> (f64, Option<f64>) {
    let t = tridiagonal(alphas, betas);
    let mut ev: Vec<f64> = t.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    (ev[0], ev.get(1).copied())
}

/// Exact spectra of the two `Π σ^x` parity sectors (requires `bz = 0`,
/// where the parity is conserved). Eigenvalues are sorted ascending within
/// each sector.
#[derive(Clone, Debug)]
pub struct SectorSpectra {
    /// Sector with `Π σ^x = +1`.
    pub plus: Vec<f64>,
    /// Sector with `Π σ^x = -1`.
    pub minus: Vec<f64>,
}

impl SectorSpectra {
    /// Global ground energy.
    pub fn ground_energy(&self) -> f64 {
        self.plus[0].min(self.minus[0])
    }

    /// Parity sector of the global ground state (+1 / -1).
    pub fn ground_parity(&self) -> i8 {
        if self.plus[0] <= self.minus[0] {
            1
        } else {
            -1
        }
    }

    /// Gap between the two lowest levels of the merged spectrum.
    pub fn gap(&self) -> f64 {
        let mut lows = [f64::INFINITY; 4];
        for (i, v) in self.plus.iter().take(2).chain(self.minus.iter().take(2)).enumerate() {
            lows[i] = *v;
        }
        lows.sort_by(f64::total_cmp);
        lows[1] - lows[0]
    }
}

/// Builds and diagonalizes the Hamiltonian restricted to each `Π σ^x`
/// sector. Works in the Hadamard-rotated frame where the parity operator is
/// diagonal, so each sector is an explicit `2^{n-1}`-dimensional block.
pub fn sector_spectra(params: &ChainParams) -> OracleResult<SectorSpectra> {
    let (hp, hm) = sector_matrices(params)?;
    let mut plus: Vec<f64> = hp.symmetric_eigen().eigenvalues.iter().copied().collect();
    let mut minus: Vec<f64> = hm.symmetric_eigen().eigenvalues.iter().copied().collect();
    plus.sort_by(f64::total_cmp);
    minus.sort_by(f64::total_cmp);
    Ok(SectorSpectra { plus, minus })
}

/// Ground state resolved by parity sector: returns the global ground state
/// (in the ordinary z basis), its energy, its parity, and the exact gap.
pub fn sector_ground(params: &ChainParams) -> OracleResult<(GroundState, i8, f64)> {
    let (hp, hm) = sector_matrices(params)?;
    let n = params.n;
    let eig_p = hp.symmetric_eigen();
    let eig_m = hm.symmetric_eigen();
    let (min_p, col_p) = lowest_of(&eig_p);
    let (min_m, col_m) = lowest_of(&eig_m);
    let (parity, energy, col, eig) = if min_p <= min_m {
        (1i8, min_p, col_p, &eig_p)
    } else {
        (-1i8, min_m, col_m, &eig_m)
    };

    // Embed the sector vector into the full rotated basis, then rotate back.
    let want_parity_bit = if parity == 1 { 0 } else { 1 };
    let mut amps = vec![0.0; 1 << n];
    let mut k = 0usize;
    for idx in 0..(1usize << n) {
        if (idx.count_ones() & 1) as usize == want_parity_bit {
            amps[idx] = eig.eigenvectors[(k, col)];
            k += 1;
        }
    }
    let mut state = DenseState { n, amps };
    state.hadamard_all();

    let mut all: Vec<f64> = eig_p
        .eigenvalues
        .iter()
        .chain(eig_m.eigenvalues.iter())
        .copied()
        .collect();
    all.sort_by(f64::total_cmp);
    let gap = all[1] - all[0];

    Ok((
        GroundState {
            energy,
            first_excited: Some(all[1]),
            state,
            iterations: 0,
        },
        parity,
        gap,
    ))
}

fn lowest_of(eig: &nalgebra::SymmetricEigen<f64, nalgebra::Dyn>) -> (f64, usize) {
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], best)
}

fn sector_matrices(params: &ChainParams) -> OracleResult<(DMatrix<f64>, DMatrix<f64>)> {
    if params.bz != 0.0 {
        return Err(OracleError::SectorNeedsBzZero(params.bz));
    }
    let n = params.n;
    check_size(n, MAX_DENSE_MATRIX_SITES)?;
    let h = Hamiltonian::standard(params)?;

    // Rotate every term by the global Hadamard (x↔z; no y terms appear).
    let rotated: Vec<(f64, usize, usize)> = h
        .terms
        .iter()
        .map(|(c, s)| {
            let swapped = PauliString::new(s.factors().iter().map(|&(site, p)| {
                let q = match p {
                    Pauli::X => Pauli::Z,
                    Pauli::Z => Pauli::X,
                    Pauli::Y => Pauli::Y,
                };
                (site, q)
            }))
            .expect("sites unchanged");
            let (flip, zy) = string_masks(&swapped);
            (*c, flip, zy)
        })
        .collect();

    let dim = 1usize << n;
    let half = dim / 2;
    // Index maps between full bit strings and per-sector positions.
    let mut pos = vec![0usize; dim];
    let mut count = [0usize; 2];
    for idx in 0..dim {
        let p = (idx.count_ones() & 1) as usize;
        pos[idx] = count[p];
        count[p] += 1;
    }
    debug_assert_eq!(count, [half, half]);

    let mut hp = DMatrix::<f64>::zeros(half, half);
    let mut hm = DMatrix::<f64>::zeros(half, half);
    for idx in 0..dim {
        let p = (idx.count_ones() & 1) as usize;
        for &(c, flip, zy) in &rotated {
            let tgt = idx ^ flip;
            debug_assert_eq!((tgt.count_ones() & 1) as usize, p, "parity-breaking term");
            let sign = 1.0 - 2.0 * ((idx & zy).count_ones() & 1) as f64;
            let block = if p == 0 { &mut hp } else { &mut hm };
            block[(pos[tgt], pos[idx])] += c * sign;
        }
    }
    Ok((hp, hm))
}

/// Fully dense ground-state solve (small chains): energy, exact gap, state.
pub fn ground_dense(h: &Hamiltonian) -> OracleResult<(GroundState, f64)> {
    let ch = CompiledHamiltonian::new(h)?;
    let m = ch.dense()?;
    let eig = m.symmetric_eigen();
    let dim = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let amps: Vec<f64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
    let gap = eig.eigenvalues[order[1]] - eig.eigenvalues[order[0]];
    Ok((
        GroundState {
            energy: eig.eigenvalues[order[0]],
            first_excited: Some(eig.eigenvalues[order[1]]),
            state: DenseState { n: h.n, amps },
            iterations: 0,
        },
        gap,
    ))
}

/// One branch of an exhaustively enumerated measurement protocol.
#[derive(Clone, Debug)]
pub struct MeasuredBranch {
    /// Outcome per plan entry: +1 for the `cos ξ|0⟩ + sin ξ|1⟩` result,
    /// -1 for its orthogonal complement.
    pub outcomes: Vec<i8>,
    /// Joint probability of this outcome sequence.
    pub probability: f64,
    /// Normalized post-measurement state (measured sites remain in their
    /// outcome states).
    pub state: DenseState,
}

/// Walks every outcome sequence of a sequence of single-site measurements.
/// Each plan entry is `(site, ξ)` where the +1 outcome projects onto
/// `cos ξ|0⟩ + sin ξ|1⟩` (so ξ=0 is a σ^z measurement and ξ=π/4 is σ^x).
/// Branches with probability below `1e-14` are dropped.
pub fn enumerate_protocol(state: &DenseState, plan: &[(usize, f64)]) -> Vec<MeasuredBranch> {
    let mut branches = Vec::new();
    let mut outcomes = Vec::with_capacity(plan.len());
    let mut normalized = state.clone();
    normalized.normalize();
    walk(&normalized, plan, 1.0, &mut outcomes, &mut branches);
    branches
}

fn walk(
    state: &DenseState,
    plan: &[(usize, f64)],
    prob: f64,
    outcomes: &mut Vec<i8>,
    acc: &mut Vec<MeasuredBranch>,
) {
    let Some(&(site, xi)) = plan.first() else {
        acc.push(MeasuredBranch {
            outcomes: outcomes.clone(),
            probability: prob,
            state: state.clone(),
        });
        return;
    };
    let rest = &plan[1..];
    let (c, s) = (xi.cos(), xi.sin());
    for (outcome, b0, b1) in [(1i8, c, s), (-1i8, -s, c)] {
        let (mut projected, p) = state.project_site(site, b0, b1);
        let joint = prob * p;
        if joint < 1e-14 {
            continue;
        }
        projected.normalize();
        outcomes.push(outcome);
        walk(&projected, rest, joint, outcomes, acc);
        outcomes.pop();
    }
}
