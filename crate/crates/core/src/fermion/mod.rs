//! Exact solution of the chain at `b_z = 0` by mapping spins to free
//! Majorana fermions.
//!
//! Every spin operator is translated symbolically into an ordered product of
//! Majorana generators (see [`algebra`]); the Hamiltonian assembles into a
//! real antisymmetric coupling matrix whose canonical form yields energies,
//! ground-state correlation matrices, string correlators (via Wick's theorem
//! and Pfaffians) and block entropies. Periodic chains split into two parity
//! sectors of `Πσ^x`; the boundary terms of the ring pick up the sector sign.
//! Open chains are supported in their bulk-stabilizer form
//! ([`Boundary::OpenBare`]); end-truncated stabilizers would produce terms
//! linear in the generators, outside the quadratic framework.

pub mod algebra;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::chain::{Boundary, ChainError, ChainParams, Hamiltonian, Pauli, PauliString};
use crate::numutil::binary_entropy_bits;
use algebra::{canonical_form, pfaffian, Monomial, Scaled, ZERO_MODE_TOL};

/// Errors from the free-fermion solver.
#[derive(Debug, Error)]
pub enum FermionError {
    /// A longitudinal field breaks the quadratic fermion structure.
    #[error("free-fermion solver requires b_z = 0 (got b_z = {bz})")]
    LongitudinalField { bz: f64 },
    /// End-truncated stabilizers map to odd (linear) fermion terms.
    #[error("boundary {0:?} has no quadratic fermion form; use OpenBare or Periodic")]
    UnsupportedBoundary(Boundary),
    /// The requested parity sector does not exist for this boundary.
    #[error("parity sector {sector:?} is undefined for boundary {boundary:?}")]
    SectorMismatch {
        sector: ParitySector,
        boundary: Boundary,
    },
    /// String endpoints violate the pattern's separation/parity rules.
    #[error("string endpoints ({a}, {b}) invalid for {pattern:?}: {reason}")]
    BadString {
        pattern: StringPattern,
        a: usize,
        b: usize,
        reason: &'static str,
    },
    #[error(transparent)]
    Chain(#[from] ChainError),
    /// Internal consistency failure of the operator calculus.
    #[error("operator algebra inconsistency: {0}")]
    Algebra(String),
}

/// Eigenvalue of the global spin-flip `Πσ^x` selecting a sector of the ring,
/// or `Open` for chains without the wrap-around constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ParitySector {
    Plus,
    Minus,
    Open,
}

impl ParitySector {
    /// The parity eigenvalue, or `None` when unconstrained.
    pub fn sign(self) -> Option<i8> {
        match self {
            ParitySector::Plus => Some(1),
            ParitySector::Minus => Some(-1),
            ParitySector::Open => None,
        }
    }
}

/// Translate a Pauli string into its normal-ordered Majorana monomial.
///
/// Conventions (site strings run over `ν < μ`):
/// `σ^x_μ = 2i γ_{2μ} γ_{2μ+1}`,
/// `σ^z_μ = √2 (Πσ^x_{ν<μ}) γ_{2μ+1}`,
/// `σ^y_μ = −√2 (Πσ^x_{ν<μ}) γ_{2μ}`.
pub fn monomial_of(string: &PauliString) -> Monomial {
    let mut coeff = Scaled::ONE;
    let mut i_pow: u32 = 0;
    let mut gammas: Vec<u32> = Vec::new();
    let push_string = |upto: usize, gammas: &mut Vec<u32>, i_pow: &mut u32, c: &mut Scaled| {
        for nu in 0..upto {
            *c = c.shift(1);
            *i_pow += 1;
            gammas.push(2 * nu as u32);
            gammas.push(2 * nu as u32 + 1);
        }
    };
    for &(site, p) in string.factors() {
        match p {
            Pauli::X => {
                coeff = coeff.shift(1);
                i_pow += 1;
                gammas.push(2 * site as u32);
                gammas.push(2 * site as u32 + 1);
            }
            Pauli::Z => {
                push_string(site, &mut gammas, &mut i_pow, &mut coeff);
                coeff = coeff.mul_f64(std::f64::consts::SQRT_2);
                gammas.push(2 * site as u32 + 1);
            }
            Pauli::Y => {
                push_string(site, &mut gammas, &mut i_pow, &mut coeff);
                coeff = coeff.mul_f64(std::f64::consts::SQRT_2);
                i_pow += 2;
                gammas.push(2 * site as u32);
            }
        }
    }
    let mut m = Monomial {
        coeff,
        i_pow: (i_pow % 4) as u8,
        gammas,
    };
    m.normal_order();
    m
}

/// The global spin flip `Π_μ σ^x_μ = 2^n i^n γ_0 γ_1 ⋯ γ_{2n−1}`.
pub fn parity_monomial(n: usize) -> Monomial {
    Monomial {
        coeff: Scaled::ONE.shift(n as i32),
        i_pow: (n % 4) as u8,
        gammas: (0..2 * n as u32).collect(),
    }
}

/// The antisymmetric coupling matrix of the quadratic fermion form.
///
/// `matrix` is `A` with the Hamiltonian `H = Σ_{ij} γ_i (iA)_{ij} γ_j`; its
/// 2×2 site blocks are `[[0, −B_x], [B_x, 0]]` on the diagonal, `[[0, J],
/// [0, 0]]` at site distance 1, `[[0, 1], [0, 0]]` at distance 2, and
/// parity-weighted wrap-around blocks on a ring.
#[derive(Clone, Debug)]
pub struct MajoranaCoupling {
    pub n: usize,
    pub sector: ParitySector,
    pub matrix: DMatrix<f64>,
}

/// Assemble the coupling matrix for one parity sector.
pub fn build_majorana_coupling(
    params: &ChainParams,
    sector: ParitySector,
) -> Result<MajoranaCoupling, FermionError> {
    params.validate()?;
    if params.bz != 0.0 {
        return Err(FermionError::LongitudinalField { bz: params.bz });
    }
    match (params.boundary, sector) {
        (Boundary::Periodic, ParitySector::Plus | ParitySector::Minus) => {}
        (Boundary::OpenBare, ParitySector::Open) => {}
        (Boundary::Open, _) => return Err(FermionError::UnsupportedBoundary(Boundary::Open)),
        (boundary, sector) => return Err(FermionError::SectorMismatch { sector, boundary }),
    }
    let n = params.n;
    let ham = Hamiltonian::standard(params)?;
    let parity = parity_monomial(n);
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for (coeff, string) in &ham.terms {
        let mut m = monomial_of(string);
        if m.gammas.len() == 2 * n - 2 {
            // Wrap-around term: on the sector it equals ±(Πσ^x · term),
            // which is quadratic.
            m = parity.mul(&m);
            if sector == ParitySector::Minus {
                m.coeff = m.coeff.mul_f64(-1.0);
            }
        }
        if m.gammas.len() != 2 {
            return Err(FermionError::Algebra(format!(
                "Hamiltonian term {string:?} reduced to {} generators, expected 2",
                m.gammas.len()
            )));
        }
        // A Hermitian quadratic term is i·r·γ_aγ_b with real r.
        let r = match m.i_pow {
            1 => m.coeff.value(),
            3 => -m.coeff.value(),
            p => {
                return Err(FermionError::Algebra(format!(
                    "quadratic term with even i-power {p} cannot be Hermitian"
                )))
            }
        };
        let (ga, gb) = (m.gammas[0] as usize, m.gammas[1] as usize);
        // H = Σ i r γ_aγ_b (ordered pairs) = Σ_{ij} γ_i (iA)_{ij} γ_j with
        // A_{ab} = r/2 on each ordered pair.
        a[(ga, gb)] += coeff * r / 2.0;
        a[(gb, ga)] -= coeff * r / 2.0;
    }
    Ok(MajoranaCoupling {
        n,
        sector,
        matrix: a,
    })
}

/// Diagonalized quadratic form for one sector: excitation energies, the
/// reference ("sea") filling, and its parity.
pub struct SectorModes {
    pub n: usize,
    pub sector: ParitySector,
    /// Single-mode excitation energies, ascending.
    pub modes: Vec<f64>,
    /// Energy of the reference filling.
    pub e_sea: f64,
    /// `Πσ^x` eigenvalue of the reference filling.
    pub sea_parity: i8,
    /// True when a mode lies below the zero-mode threshold (level crossing /
    /// criticality); mode occupations there are a convention, not physics.
    pub degenerate: bool,
    q: DMatrix<f64>,
    filled: Vec<bool>,
}

/// Bring one sector's coupling matrix to canonical form.
pub fn diagonalize_coupling(coupling: &MajoranaCoupling) -> SectorModes {
    // H = Σ γ (iA) γ = (i/2) Σ (2A) γγ, so the quadratic form uses 2A.
    let cf = canonical_form(&(2.0 * &coupling.matrix));
    let modes = cf.modes;
    let degenerate = modes.first().is_some_and(|&t| t <= ZERO_MODE_TOL);
    // Ground filling of every mode contributes −t/2; zero modes are filled
    // "unoccupied" (+t/2 ≈ 0) by convention and flagged.
    let filled: Vec<bool> = modes.iter().map(|&t| t > ZERO_MODE_TOL).collect();
    let e_sea: f64 = modes
        .iter()
        .zip(&filled)
        .map(|(&t, &f)| if f { -t / 2.0 } else { t / 2.0 })
        .sum();
    let det_sign = if cf.q.determinant() >= 0.0 { 1i8 } else { -1i8 };
    let unfilled = filled.iter().filter(|&&f| !f).count();
    let sea_parity = if unfilled % 2 == 0 { det_sign } else { -det_sign };
    SectorModes {
        n: coupling.n,
        sector: coupling.sector,
        modes,
        e_sea,
        sea_parity,
        degenerate,
        q: cf.q,
        filled,
    }
}

impl SectorModes {
    /// Energy change from toggling the occupation of mode `k`.
    fn flip_cost(&self, k: usize) -> f64 {
        if self.filled[k] {
            self.modes[k]
        } else {
            -self.modes[k]
        }
    }

    /// The two lowest many-body energies compatible with the sector parity.
    pub fn lowest_energies(&self) -> [f64; 2] {
        match self.sector.sign() {
            None => [self.e_sea, self.e_sea + self.flip_cost(0)],
            Some(p) => {
                if self.sea_parity == p {
                    [
                        self.e_sea,
                        self.e_sea + self.flip_cost(0) + self.flip_cost(1),
                    ]
                } else {
                    [self.e_sea + self.flip_cost(0), self.e_sea + self.flip_cost(1)]
                }
            }
        }
    }

    pub fn ground_energy(&self) -> f64 {
        self.lowest_energies()[0]
    }

    /// Correlation matrix of the sector ground state (parity repaired by
    /// toggling the cheapest mode when the reference filling disagrees).
    pub fn ground_correlation(&self) -> CorrelationMatrix {
        let mut fill = self.filled.clone();
        if let Some(p) = self.sector.sign() {
            if self.sea_parity != p {
                fill[0] = !fill[0];
            }
        }
        let dim = 2 * self.n;
        // Γ = Q Γ' Qᵀ with Γ' the canonical blocks [[0, ±1], [∓1, 0]].
        let mut qg = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..self.n {
            let s = if fill[k] { 1.0 } else { -1.0 };
            let c0 = self.q.column(2 * k) * s;
            let c1 = self.q.column(2 * k + 1) * (-s);
            qg.set_column(2 * k, &c1);
            qg.set_column(2 * k + 1, &c0);
        }
        let gamma = qg * self.q.transpose();
        CorrelationMatrix { n: self.n, gamma }
    }
}

/// Ground-state two-point data: `gamma[(i, j)] = i⟨[γ_i, γ_j]⟩`, real and
/// antisymmetric, with `ΓΓᵀ = 1` for a pure state.
#[derive(Clone, Debug)]
pub struct CorrelationMatrix {
    pub n: usize,
    pub gamma: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// `⟨σ^x_site⟩`, read directly from the matrix.
    pub fn local_x(&self, site: usize) -> f64 {
        self.gamma[(2 * site, 2 * site + 1)]
    }

    /// `⟨Πσ^x⟩` of the state (the Pfaffian of Γ).
    pub fn parity(&self) -> f64 {
        pfaffian(&self.gamma).value()
    }

    /// Expectation value of an arbitrary Pauli string via Wick's theorem:
    /// `⟨γ_{i₁}⋯γ_{i_{2k}}⟩ = (−i/2)^k Pf(Γ restricted to the indices)`.
    pub fn expect_string(&self, string: &PauliString) -> Result<f64, FermionError> {
        string.check_sites(self.n)?;
        let m = monomial_of(string);
        if m.gammas.len() % 2 == 1 {
            return Ok(0.0); // parity symmetry: odd products average to zero
        }
        if m.gammas.is_empty() {
            return match m.i_pow {
                0 => Ok(m.coeff.value()),
                2 => Ok(-m.coeff.value()),
                _ => Err(FermionError::Algebra(
                    "identity reduction with odd i-power".into(),
                )),
            };
        }
        let k = m.gammas.len();
        let pairs = (k / 2) as u32;
        let mut sub = DMatrix::<f64>::zeros(k, k);
        for (r, &gr) in m.gammas.iter().enumerate() {
            for (c, &gc) in m.gammas.iter().enumerate() {
                sub[(r, c)] = self.gamma[(gr as usize, gc as usize)];
            }
        }
        let pf = pfaffian(&sub);
        // (−i/2)^pairs = 2^{−pairs} · i^{3·pairs}
        let total_i = (m.i_pow as u32 + 3 * pairs) % 4;
        let scalar = m.coeff.mul(pf).shift(-(pairs as i32));
        match total_i {
            0 => Ok(scalar.value()),
            2 => Ok(-scalar.value()),
            _ => Err(FermionError::Algebra(format!(
                "non-real expectation for Pauli string {string:?}"
            ))),
        }
    }

    /// Evaluate one of the named string patterns.
    pub fn string_correlator(&self, spec: &StringSpec) -> Result<f64, FermionError> {
        let string = spec.build(self.n)?;
        self.expect_string(&string)
    }

    /// Von Neumann entropy (bits) of `len` contiguous sites starting at
    /// `start`, from the canonical values of the restricted matrix.
    pub fn block_entropy(&self, start: usize, len: usize) -> Result<f64, FermionError> {
        if len == 0 || start + len > self.n {
            return Err(FermionError::Chain(ChainError::SiteOutOfRange {
                site: start + len,
                n: self.n,
            }));
        }
        let sub = self
            .gamma
            .view((2 * start, 2 * start), (2 * len, 2 * len))
            .into_owned();
        let cf = canonical_form(&sub);
        Ok(cf
            .modes
            .iter()
            .map(|&l| binary_entropy_bits((1.0 + l.clamp(0.0, 1.0)) / 2.0))
            .sum())
    }
}

/// Which string-operator pattern to evaluate between endpoints `a < b`.
///
/// `Zx`/`Xz` alternate σ^x on every second interior site with a single σ^z
/// cap on one side; `Yy` is the consecutive-stabilizer product (σ^z caps,
/// σ^y endpoints, σ^x bulk); `UncappedYy` drops the caps (the end-to-end
/// operator of an open chain).
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum StringPattern {
    Zx,
    Xz,
    Yy,
    UncappedYy,
}

/// A string-correlator request: pattern plus endpoint sites.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct StringSpec {
    pub pattern: StringPattern,
    pub a: usize,
    pub b: usize,
}

impl StringSpec {
    pub fn zx(a: usize, b: usize) -> Self {
        StringSpec {
            pattern: StringPattern::Zx,
            a,
            b,
        }
    }

    pub fn xz(a: usize, b: usize) -> Self {
        StringSpec {
            pattern: StringPattern::Xz,
            a,
            b,
        }
    }

    pub fn yy(a: usize, b: usize) -> Self {
        StringSpec {
            pattern: StringPattern::Yy,
            a,
            b,
        }
    }

    pub fn uncapped_yy(a: usize, b: usize) -> Self {
        StringSpec {
            pattern: StringPattern::UncappedYy,
            a,
            b,
        }
    }

    fn bad(&self, reason: &'static str) -> FermionError {
        FermionError::BadString {
            pattern: self.pattern,
            a: self.a,
            b: self.b,
            reason,
        }
    }

    /// Materialize the operator on an `n`-site chain.
    pub fn build(&self, n: usize) -> Result<PauliString, FermionError> {
        let (a, b) = (self.a, self.b);
        if b <= a {
            return Err(self.bad("endpoints must satisfy a < b"));
        }
        let mut ops: Vec<(usize, Pauli)> = Vec::new();
        match self.pattern {
            StringPattern::Zx => {
                if (b - a) % 2 == 0 {
                    return Err(self.bad("separation must be odd"));
                }
                if b + 1 >= n {
                    return Err(self.bad("right cap exceeds the chain"));
                }
                ops.push((a, Pauli::Z));
                let mut s = a + 1;
                while s <= b {
                    ops.push((s, Pauli::X));
                    s += 2;
                }
                ops.push((b + 1, Pauli::Z));
            }
            StringPattern::Xz => {
                if (b - a) % 2 == 0 {
                    return Err(self.bad("separation must be odd"));
                }
                if a == 0 {
                    return Err(self.bad("left cap exceeds the chain"));
                }
                if b >= n {
                    return Err(self.bad("right endpoint exceeds the chain"));
                }
                ops.push((a - 1, Pauli::Z));
                let mut s = a;
                while s < b {
                    ops.push((s, Pauli::X));
                    s += 2;
                }
                ops.push((b, Pauli::Z));
            }
            StringPattern::Yy => {
                if a == 0 || b + 1 >= n {
                    return Err(self.bad("caps exceed the chain"));
                }
                ops.push((a - 1, Pauli::Z));
                ops.push((a, Pauli::Y));
                for s in (a + 1)..b {
                    ops.push((s, Pauli::X));
                }
                ops.push((b, Pauli::Y));
                ops.push((b + 1, Pauli::Z));
            }
            StringPattern::UncappedYy => {
                if b >= n {
                    return Err(self.bad("right endpoint exceeds the chain"));
                }
                ops.push((a, Pauli::Y));
                for s in (a + 1)..b {
                    ops.push((s, Pauli::X));
                }
                ops.push((b, Pauli::Y));
            }
        }
        Ok(PauliString::new(ops)?)
    }
}

/// Full exact solution at one parameter point: ground energy, spectral gap,
/// winning parity sector, and the ground-state correlation matrix.
pub struct ExactSolution {
    pub params: ChainParams,
    pub sector: ParitySector,
    pub energy: f64,
    pub gap: f64,
    pub degenerate: bool,
    pub correlation: CorrelationMatrix,
}

/// Solve the chain: both parity sectors for a ring, the bulk form for an
/// open chain. The gap is taken over the union of sector spectra.
pub fn solve_ground(params: &ChainParams) -> Result<ExactSolution, FermionError> {
    match params.boundary {
        Boundary::Periodic => {
            let plus = diagonalize_coupling(&build_majorana_coupling(params, ParitySector::Plus)?);
            let minus =
                diagonalize_coupling(&build_majorana_coupling(params, ParitySector::Minus)?);
            let [p0, p1] = plus.lowest_energies();
            let [m0, m1] = minus.lowest_energies();
            let mut levels = [
                (p0, ParitySector::Plus),
                (p1, ParitySector::Plus),
                (m0, ParitySector::Minus),
                (m1, ParitySector::Minus),
            ];
            levels.sort_by(|x, y| x.0.total_cmp(&y.0));
            let (energy, sector) = levels[0];
            let gap = levels[1].0 - energy;
            let winner = if sector == ParitySector::Plus {
                &plus
            } else {
                &minus
            };
            Ok(ExactSolution {
                params: *params,
                sector,
                energy,
                gap,
                degenerate: plus.degenerate || minus.degenerate,
                correlation: winner.ground_correlation(),
            })
        }
        Boundary::OpenBare => {
            let modes = diagonalize_coupling(&build_majorana_coupling(params, ParitySector::Open)?);
            let [e0, e1] = modes.lowest_energies();
            Ok(ExactSolution {
                params: *params,
                sector: ParitySector::Open,
                energy: e0,
                gap: e1 - e0,
                degenerate: modes.degenerate,
                correlation: modes.ground_correlation(),
            })
        }
        Boundary::Open => Err(FermionError::UnsupportedBoundary(Boundary::Open)),
    }
}

/// The winning parity sector and its ground energy.
pub fn ground_sector_and_energy(params: &ChainParams) -> Result<(ParitySector, f64), FermionError> {
    let sol = solve_ground(params)?;
    Ok((sol.sector, sol.energy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ChainParams, Pauli, PauliString};
    use crate::oracle::{lanczos_ground, sector_spectra, DenseState};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_string(n: usize, rng: &mut ChaCha12Rng) -> PauliString {
        let len = rng.gen_range(1..=n);
        let mut sites: Vec<usize> = (0..n).collect();
        for i in (1..sites.len()).rev() {
            let j = rng.gen_range(0..=i);
            sites.swap(i, j);
        }
        let ops: Vec<(usize, Pauli)> = sites
            .into_iter()
            .take(len)
            .map(|s| {
                let p = match rng.gen_range(0..3) {
                    0 => Pauli::X,
                    1 => Pauli::Y,
                    _ => Pauli::Z,
                };
                (s, p)
            })
            .collect();
        PauliString::new(ops).unwrap()
    }

    #[test]
    fn monomials_match_dense_pauli_products() {
        let n = 3;
        let gs = algebra::dense_check::gammas(n);
        let dim = 1 << n;
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..40 {
            let string = random_string(n, &mut rng);
            let mono = monomial_of(&string);

            let mut dense = DMatrix::<Complex64>::identity(dim, dim);
            for &(site, p) in string.factors() {
                dense = dense * algebra::dense_check::pauli(n, site, p);
            }
            let mut from_mono = DMatrix::<Complex64>::identity(dim, dim);
            for &g in &mono.gammas {
                from_mono = from_mono * &gs[g as usize];
            }
            let phase = Complex64::i().powu(mono.i_pow as u32) * mono.coeff.value();
            let diff = (&dense - from_mono * phase).norm();
            assert!(diff < 1e-10, "mismatch for {string:?}: {diff}");
        }
    }

    #[test]
    fn parity_monomial_is_product_of_x() {
        let n = 3;
        let all_x = PauliString::new((0..n).map(|s| (s, Pauli::X))).unwrap();
        let direct = monomial_of(&all_x);
        let shortcut = parity_monomial(n);
        assert_eq!(direct.gammas, shortcut.gammas);
        assert_eq!(direct.i_pow, shortcut.i_pow);
        assert_abs_diff_eq!(direct.coeff.value(), shortcut.coeff.value(), epsilon = 0.0);
    }

    #[test]
    fn coupling_blocks_follow_the_standard_pattern() {
        let params = ChainParams::ring(8, 0.7, 0.4, 0.0);
        let plus = build_majorana_coupling(&params, ParitySector::Plus).unwrap();
        let minus = build_majorana_coupling(&params, ParitySector::Minus).unwrap();
        let a = &plus.matrix;
        // exact antisymmetry
        assert_eq!((a + a.transpose()).abs().max(), 0.0);
        // field block on the diagonal: [[0, −B_x], [B_x, 0]]
        assert_abs_diff_eq!(a[(2, 3)], -0.4, epsilon = 1e-14);
        assert_abs_diff_eq!(a[(3, 2)], 0.4, epsilon = 1e-14);
        // Ising block at site distance 1: [[0, J], [0, 0]]
        assert_abs_diff_eq!(a[(2, 5)], 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(a[(3, 4)], 0.0, epsilon = 1e-14);
        // stabilizer block at site distance 2: [[0, 1], [0, 0]]
        assert_abs_diff_eq!(a[(2, 7)], 1.0, epsilon = 1e-14);
        // interior blocks beyond distance 2 vanish
        for mu in 0..8usize {
            for nu in 0..8usize {
                let d = mu.abs_diff(nu);
                let wrapped = d.min(8 - d);
                if wrapped > 2 {
                    for r in 0..2 {
                        for c in 0..2 {
                            assert_eq!(a[(2 * mu + r, 2 * nu + c)], 0.0);
                        }
                    }
                }
            }
        }
        // the sectors differ exactly by the sign of the wrap-around blocks
        let diff = &minus.matrix - a;
        for mu in 0..8usize {
            for nu in 0..8usize {
                let d = mu.abs_diff(nu);
                let wrapped = d.min(8 - d);
                for r in 0..2 {
                    for c in 0..2 {
                        let x = a[(2 * mu + r, 2 * nu + c)];
                        let y = diff[(2 * mu + r, 2 * nu + c)];
                        if d == wrapped {
                            assert_eq!(y, 0.0, "bulk block changed between sectors");
                        } else {
                            assert_abs_diff_eq!(y, -2.0 * x, epsilon = 1e-14);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cluster_point_is_exact() {
        let params = ChainParams::cluster_ring(10);
        let sol = solve_ground(&params).unwrap();
        assert_abs_diff_eq!(sol.energy, -10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.gap, 2.0, epsilon = 1e-12);
        assert_eq!(sol.sector, ParitySector::Plus);
        assert!(!sol.degenerate);
        let corr = &sol.correlation;
        for site in 0..10 {
            assert_abs_diff_eq!(corr.local_x(site), 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(corr.parity(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(corr.block_entropy(0, 1).unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(corr.block_entropy(0, 2).unwrap(), 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(corr.block_entropy(3, 2).unwrap(), 2.0, epsilon = 1e-10);
        for spec in [
            StringSpec::zx(2, 5),
            StringSpec::xz(2, 5),
            StringSpec::yy(2, 5),
            StringSpec::yy(1, 8),
        ] {
            assert_abs_diff_eq!(corr.string_correlator(&spec).unwrap(), 1.0, epsilon = 1e-10);
        }
        // without its caps the end-to-end pattern is not a ring stabilizer
        let bare = corr
            .string_correlator(&StringSpec::uncapped_yy(2, 5))
            .unwrap();
        assert_abs_diff_eq!(bare, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn sector_ladders_match_dense_spectra() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..4 {
            let j = rng.gen_range(0.0..1.3);
            let bx = rng.gen_range(0.0..1.3);
            let params = ChainParams::ring(8, j, bx, 0.0);
            let spectra = sector_spectra(&params).unwrap();
            for (sector, dense) in [
                (ParitySector::Plus, &spectra.plus),
                (ParitySector::Minus, &spectra.minus),
            ] {
                let modes =
                    diagonalize_coupling(&build_majorana_coupling(&params, sector).unwrap());
                let [e0, e1] = modes.lowest_energies();
                assert_abs_diff_eq!(e0, dense[0], epsilon = 1e-9);
                assert_abs_diff_eq!(e1, dense[1], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn ground_energy_and_gap_match_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        for &n in &[4usize, 6, 8] {
            let j = rng.gen_range(0.0..1.2);
            let bx = rng.gen_range(0.0..1.2);
            let params = ChainParams::ring(n, j, bx, 0.0);
            let spectra = sector_spectra(&params).unwrap();
            let sol = solve_ground(&params).unwrap();
            assert_abs_diff_eq!(sol.energy, spectra.ground_energy(), epsilon = 1e-9);
            assert_abs_diff_eq!(sol.gap, spectra.gap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn observables_match_oracle_state() {
        let params = ChainParams::ring(8, 0.3, 0.2, 0.0);
        let sol = solve_ground(&params).unwrap();
        let ham = Hamiltonian::standard(&params).unwrap();
        let ground = lanczos_ground(&ham, &Default::default()).unwrap();
        let state = &ground.state;
        assert_abs_diff_eq!(sol.energy, ground.energy, epsilon = 1e-9);

        for site in 0..8 {
            let x = state.expect_pauli(&PauliString::single(site, Pauli::X));
            assert_abs_diff_eq!(sol.correlation.local_x(site), x, epsilon = 1e-8);
        }
        for len in 1..=4 {
            let dense_s = state.entropy_prefix_bits(len);
            let ff_s = sol.correlation.block_entropy(0, len).unwrap();
            assert_abs_diff_eq!(ff_s, dense_s, epsilon = 1e-8);
        }
        for spec in [
            StringSpec::zx(2, 5),
            StringSpec::xz(2, 5),
            StringSpec::yy(2, 5),
            StringSpec::uncapped_yy(1, 6),
        ] {
            let string = spec.build(8).unwrap();
            let dense_v = state.expect_pauli(&string);
            let ff_v = sol.correlation.string_correlator(&spec).unwrap();
            assert_abs_diff_eq!(ff_v, dense_v, epsilon = 1e-8);
        }
        // arbitrary strings, not only the named patterns
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..25 {
            let string = random_string(8, &mut rng);
            let dense_v = state.expect_pauli(&string);
            let ff_v = sol.correlation.expect_string(&string).unwrap();
            assert_abs_diff_eq!(ff_v, dense_v, epsilon = 1e-8);
        }
    }

    #[test]
    fn correlation_matrix_is_pure_and_checkerboarded() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..5 {
            let j = rng.gen_range(0.0..2.0);
            let bx: f64 = rng.gen_range(0.0..2.0);
            if (bx - 1.0).abs() < 0.05 {
                continue; // keep clear of the critical line for purity checks
            }
            let params = ChainParams::ring(20, j, bx, 0.0);
            let sol = solve_ground(&params).unwrap();
            let g = &sol.correlation.gamma;
            let dim = 2 * params.n;
            let purity = (g * g.transpose() - DMatrix::identity(dim, dim)).abs().max();
            assert!(purity < 1e-10, "ΓΓᵀ deviates by {purity:.2e}");
            // even-even and odd-odd entries vanish
            for i in (0..dim).step_by(2) {
                for j in (0..dim).step_by(2) {
                    assert!(g[(i, j)].abs() < 1e-10);
                    assert!(g[(i + 1, j + 1)].abs() < 1e-10);
                }
            }
            // energy identity E = ½ Σ A∘Γ for H = Σ γ(iA)γ
            let coupling = build_majorana_coupling(&params, ParitySector::Plus).unwrap();
            if sol.sector == ParitySector::Plus {
                let e = coupling.matrix.component_mul(g).sum() / 2.0;
                assert_abs_diff_eq!(e, sol.energy, epsilon = 1e-8);
            }
            // π-rotation symmetry about x: ⟨σ^z⟩ identically zero
            let z = sol
                .correlation
                .expect_string(&PauliString::single(3, Pauli::Z))
                .unwrap();
            assert_eq!(z, 0.0);
            // the state parity equals the winning sector
            let p = sol.correlation.parity();
            let expected = sol.sector.sign().unwrap() as f64;
            assert_abs_diff_eq!(p, expected, epsilon = 1e-8);
        }
    }

    #[test]
    fn duality_relates_energy_densities() {
        let n = 100;
        for (j, bx) in [(0.3, 0.5), (0.8, 1.6), (0.2, 0.7)] {
            let e = solve_ground(&ChainParams::ring(n, j, bx, 0.0)).unwrap().energy;
            let (jd, bd) = ChainParams::dual_point(j, bx);
            let ed = solve_ground(&ChainParams::ring(n, jd, bd, 0.0))
                .unwrap()
                .energy;
            assert_abs_diff_eq!(e / n as f64, bx * ed / n as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn string_size_dependence_matches_the_phase_picture() {
        // At B = 0 the capped yy string is size independent while xz decays.
        let solve = |n: usize| solve_ground(&ChainParams::ring(n, 0.5, 0.0, 0.0)).unwrap();
        let (small, large) = (solve(100), solve(200));
        let sep = |n: usize| {
            let mut s = n / 2 - 1;
            if s % 2 == 0 {
                s -= 1;
            }
            s
        };
        let yy_small = small
            .correlation
            .string_correlator(&StringSpec::yy(2, 2 + sep(100)))
            .unwrap();
        let yy_large = large
            .correlation
            .string_correlator(&StringSpec::yy(2, 2 + sep(200)))
            .unwrap();
        assert!((yy_small - yy_large).abs() < 1e-6);
        assert!(yy_large.abs() > 0.5);

        let xz_small = small
            .correlation
            .string_correlator(&StringSpec::xz(2, 2 + sep(100)))
            .unwrap();
        let xz_large = large
            .correlation
            .string_correlator(&StringSpec::xz(2, 2 + sep(200)))
            .unwrap();
        assert!(xz_small.abs() > 1.5 * xz_large.abs());
    }

    #[test]
    fn bulk_open_chain_has_free_ends() {
        let params = ChainParams {
            n: 10,
            j: 0.0,
            bx: 0.0,
            bz: 0.0,
            boundary: Boundary::OpenBare,
        };
        let sol = solve_ground(&params).unwrap();
        assert!(sol.degenerate, "end modes should be flagged");
        assert_abs_diff_eq!(sol.energy, -8.0, epsilon = 1e-10);
        // the product of all bulk stabilizers is fixed in every ground state
        let yy = sol
            .correlation
            .string_correlator(&StringSpec::yy(1, 8))
            .unwrap();
        assert_abs_diff_eq!(yy, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn rejects_unsupported_inputs() {
        let mut params = ChainParams::ring(8, 0.5, 0.2, 0.0);
        params.bz = 0.3;
        assert!(matches!(
            build_majorana_coupling(&params, ParitySector::Plus),
            Err(FermionError::LongitudinalField { .. })
        ));
        let open = ChainParams::open(8, 0.5, 0.2, 0.0);
        assert!(matches!(
            solve_ground(&open),
            Err(FermionError::UnsupportedBoundary(_))
        ));
        let ring = ChainParams::ring(8, 0.5, 0.2, 0.0);
        assert!(matches!(
            build_majorana_coupling(&ring, ParitySector::Open),
            Err(FermionError::SectorMismatch { .. })
        ));
        assert!(matches!(
            StringSpec::zx(2, 4).build(8),
            Err(FermionError::BadString { .. })
        ));
        assert!(matches!(
            StringSpec::xz(0, 3).build(8),
            Err(FermionError::BadString { .. })
        ));
    }

    #[test]
    fn translation_invariance_of_ring_observables() {
        let params = ChainParams::ring(12, 0.4, 0.6, 0.0);
        let sol = solve_ground(&params).unwrap();
        let x0 = sol.correlation.local_x(0);
        for site in 1..12 {
            assert_abs_diff_eq!(sol.correlation.local_x(site), x0, epsilon = 1e-9);
        }
        let s2a = sol.correlation.block_entropy(0, 2).unwrap();
        let s2b = sol.correlation.block_entropy(5, 2).unwrap();
        assert_abs_diff_eq!(s2a, s2b, epsilon = 1e-9);
        let y1 = sol
            .correlation
            .string_correlator(&StringSpec::yy(1, 4))
            .unwrap();
        let y2 = sol
            .correlation
            .string_correlator(&StringSpec::yy(4, 7))
            .unwrap();
        assert_abs_diff_eq!(y1, y2, epsilon = 1e-9);
    }

    #[test]
    fn cluster_state_oracle_agrees_on_strings() {
        // sanity for the pattern constructors themselves, against the
        // explicitly built stabilizer state
        let n = 8;
        let state = DenseState::cluster(n, Boundary::Periodic).unwrap();
        let corr_checks = [
            (StringSpec::zx(2, 5), 1.0),
            (StringSpec::xz(2, 5), 1.0),
            (StringSpec::yy(2, 5), 1.0),
            (StringSpec::yy(1, 6), 1.0),
            (StringSpec::uncapped_yy(2, 5), 0.0),
        ];
        for (spec, expected) in corr_checks {
            let string = spec.build(n).unwrap();
            assert_abs_diff_eq!(state.expect_pauli(&string), expected, epsilon = 1e-12);
        }
        // on the end-truncated open cluster the uncapped pattern spans the
        // whole chain and is the product of all stabilizers
        let open = DenseState::cluster(n, Boundary::Open).unwrap();
        let full = StringSpec::uncapped_yy(0, n - 1).build(n).unwrap();
        assert_abs_diff_eq!(open.expect_pauli(&full), 1.0, epsilon = 1e-12);
    }
}
