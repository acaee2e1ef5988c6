//! Majorana-operator calculus: scaled floating point, ordered generator
//! monomials, Pfaffians, and the canonical form of real antisymmetric
//! matrices.
//!
//! The generators satisfy `{γ_i, γ_j} = δ_ij` (so `γ_i² = 1/2`). Spin
//! operators map onto products of generators whose scalar prefactors grow
//! like `2^m` in the number of factors, far past `f64` range for long
//! strings, hence [`Scaled`].

use nalgebra::DMatrix;

/// A real number held as `mantissa · 2^exp` so that products of thousands of
/// O(2) factors stay representable. Renormalization scales by exact powers
/// of two and is lossless.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    mantissa: f64,
    exp: i32,
}

impl Scaled {
    pub const ONE: Scaled = Scaled { mantissa: 1.0, exp: 0 };
    pub const ZERO: Scaled = Scaled { mantissa: 0.0, exp: 0 };

    pub fn new(x: f64) -> Self {
        Scaled { mantissa: x, exp: 0 }.normalized()
    }

    fn normalized(mut self) -> Self {
        if self.mantissa == 0.0 {
            self.exp = 0;
            return self;
        }
        let e = self.mantissa.abs().log2().floor() as i32;
        if e.abs() > 256 {
            // Power-of-two scaling is exact in binary floating point.
            self.mantissa *= 2f64.powi(-e);
            self.exp += e;
        }
        self
    }

    pub fn mul_f64(self, x: f64) -> Self {
        Scaled {
            mantissa: self.mantissa * x,
            exp: self.exp,
        }
        .normalized()
    }

    pub fn mul(self, other: Scaled) -> Self {
        Scaled {
            mantissa: self.mantissa * other.mantissa,
            exp: self.exp + other.exp,
        }
        .normalized()
    }

    /// Multiply by 2^k without touching the mantissa.
    pub fn shift(mut self, k: i32) -> Self {
        if self.mantissa != 0.0 {
            self.exp += k;
        }
        self
    }

    /// Collapse to a plain `f64`; overflows to ±∞ if the exponent is
    /// genuinely out of range.
    pub fn value(self) -> f64 {
        if self.mantissa == 0.0 {
            return 0.0;
        }
        self.mantissa * 2f64.powi(self.exp)
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0.0
    }
}

/// A scalar times an ordered product of distinct Majorana generators:
/// `coeff · i^i_pow · γ_{g₀} γ_{g₁} ⋯` with `g₀ < g₁ < ⋯` once normal
/// ordering has run.
#[derive(Clone, Debug)]
pub struct Monomial {
    pub coeff: Scaled,
    /// Power of the imaginary unit, modulo 4.
    pub i_pow: u8,
    pub gammas: Vec<u32>,
}

impl Monomial {
    pub fn identity() -> Self {
        Monomial {
            coeff: Scaled::ONE,
            i_pow: 0,
            gammas: Vec::new(),
        }
    }

    /// Sort the generators ascending, tracking the sign of the permutation,
    /// then contract repeated generators via `γ² = 1/2`.
    pub fn normal_order(&mut self) {
        let inversions = sort_counting_inversions(&mut self.gammas);
        if inversions % 2 == 1 {
            self.i_pow = (self.i_pow + 2) % 4;
        }
        let mut out = Vec::with_capacity(self.gammas.len());
        let mut i = 0;
        while i < self.gammas.len() {
            let mut j = i;
            while j < self.gammas.len() && self.gammas[j] == self.gammas[i] {
                j += 1;
            }
            let run = j - i;
            if run >= 2 {
                self.coeff = self.coeff.shift(-((run / 2) as i32));
            }
            if run % 2 == 1 {
                out.push(self.gammas[i]);
            }
            i = j;
        }
        self.gammas = out;
    }

    /// Product `self · other`, normal ordered.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut gammas = Vec::with_capacity(self.gammas.len() + other.gammas.len());
        gammas.extend_from_slice(&self.gammas);
        gammas.extend_from_slice(&other.gammas);
        let mut m = Monomial {
            coeff: self.coeff.mul(other.coeff),
            i_pow: (self.i_pow + other.i_pow) % 4,
            gammas,
        };
        m.normal_order();
        m
    }

    /// The real number `coeff · i^i_pow`, if the power of i is even.
    pub fn real_scalar(&self) -> Option<Scaled> {
        match self.i_pow {
            0 => Some(self.coeff),
            2 => Some(self.coeff.mul_f64(-1.0)),
            _ => None,
        }
    }
}

/// Stable merge sort returning the number of strict inversions; equal
/// elements are never counted, which matches the fact that exchanging two
/// identical anticommuting generators is never performed.
fn sort_counting_inversions(data: &mut Vec<u32>) -> u64 {
    let n = data.len();
    if n < 2 {
        return 0;
    }
    let mut buf = vec![0u32; n];
    let mut inversions = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo + width < n {
            let mid = lo + width;
            let hi = usize::min(lo + 2 * width, n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                if data[i] <= data[j] {
                    buf[k] = data[i];
                    i += 1;
                } else {
                    buf[k] = data[j];
                    j += 1;
                    inversions += (mid - i) as u64;
                }
                k += 1;
            }
            while i < mid {
                buf[k] = data[i];
                i += 1;
                k += 1;
            }
            while j < hi {
                buf[k] = data[j];
                j += 1;
                k += 1;
            }
            data[lo..hi].copy_from_slice(&buf[lo..hi]);
            lo += 2 * width;
        }
        width *= 2;
    }
    inversions
}

/// Pfaffian of a real antisymmetric matrix by Parlett–Reid elimination with
/// partial pivoting, accumulated in scaled form. Odd dimension gives zero.
pub fn pfaffian(a: &DMatrix<f64>) -> Scaled {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "pfaffian needs a square matrix");
    if n % 2 == 1 {
        return Scaled::ZERO;
    }
    let mut m = a.clone();
    let mut pf = Scaled::ONE;
    for k in (0..n).step_by(2) {
        let mut piv = k + 1;
        for j in (k + 2)..n {
            if m[(k, j)].abs() > m[(k, piv)].abs() {
                piv = j;
            }
        }
        if piv != k + 1 {
            m.swap_rows(piv, k + 1);
            m.swap_columns(piv, k + 1);
            pf = pf.mul_f64(-1.0);
        }
        let pivot = m[(k, k + 1)];
        if pivot == 0.0 {
            return Scaled::ZERO;
        }
        pf = pf.mul_f64(pivot);
        for i in (k + 2)..n {
            let u = m[(k, i)];
            let v = m[(k + 1, i)];
            if u == 0.0 && v == 0.0 {
                continue;
            }
            for j in (k + 2)..n {
                m[(i, j)] -= (u * m[(k + 1, j)] - v * m[(k, j)]) / pivot;
            }
        }
    }
    pf
}

/// Canonical decomposition `Qᵀ A Q = ⊕_k [[0, −t_k], [t_k, 0]]` of a real
/// antisymmetric matrix, with `t_k ≥ 0` ascending and `Q` orthogonal.
pub struct CanonicalForm {
    pub q: DMatrix<f64>,
    /// Canonical values `t_k`, ascending; length is half the dimension.
    pub modes: Vec<f64>,
}

/// Canonical values below this threshold are treated as exact zero modes.
pub const ZERO_MODE_TOL: f64 = 1e-12;

pub fn canonical_form(a: &DMatrix<f64>) -> CanonicalForm {
    let dim = a.nrows();
    assert_eq!(dim, a.ncols());
    assert_eq!(dim % 2, 0, "antisymmetric canonical form needs even dimension");
    let s = -(a * a);
    let eig = s.symmetric_eigen();
    let mut ts: Vec<(f64, usize)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (l.max(0.0).sqrt(), i))
        .collect();
    ts.sort_by(|x, y| x.0.total_cmp(&y.0));

    let t_scale = ts.last().map_or(1.0, |m| m.0).max(1.0);
    let group_tol = 1e-9 * t_scale;

    let mut q = DMatrix::<f64>::zeros(dim, dim);
    let mut modes = Vec::with_capacity(dim / 2);
    let mut col = 0;
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && ts[end].0 - ts[end - 1].0 <= group_tol {
            end += 1;
        }
        let d = end - start;
        debug_assert_eq!(d % 2, 0, "eigenvalues of -A² must pair up");
        let t_group: f64 = ts[start..end].iter().map(|p| p.0).sum::<f64>() / d as f64;

        // Basis of the eigenvalue group, as a dim×d matrix.
        let mut v = DMatrix::<f64>::zeros(dim, d);
        for (c, &(_, idx)) in ts[start..end].iter().enumerate() {
            v.set_column(c, &eig.eigenvectors.column(idx));
        }

        if t_group <= ZERO_MODE_TOL {
            // A vanishes on this subspace; any orthonormal pairing works.
            for c in 0..d {
                q.set_column(col + c, &v.column(c));
            }
            for _ in 0..d / 2 {
                modes.push(t_group);
            }
            col += d;
        } else {
            // Work in the group subspace: W = Vᵀ A V ≈ t · (complex structure).
            let w = v.transpose() * a * &v;
            let p = pair_basis(&w, t_group);
            let cols = &v * &p;
            for c in 0..d {
                q.set_column(col + c, &cols.column(c));
            }
            for _ in 0..d / 2 {
                modes.push(t_group);
            }
            col += d;
        }
        start = end;
    }
    debug_assert_eq!(col, dim);
    CanonicalForm { q, modes }
}

/// Orthogonal `P` (d×d) with `Pᵀ W P` in canonical 2×2 block form, for `W`
/// antisymmetric and close to `t` times an orthogonal complex structure.
fn pair_basis(w: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let d = w.nrows();
    let mut cols: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(d);
    let mut candidate = 0;
    while cols.len() < d {
        assert!(candidate < d, "ran out of directions while pairing modes");
        let mut u = nalgebra::DVector::<f64>::zeros(d);
        u[candidate] = 1.0;
        candidate += 1;
        for c in &cols {
            let overlap = c.dot(&u);
            u.axpy(-overlap, c, 1.0);
        }
        let nu = u.norm();
        if nu < 0.5 {
            continue; // direction already (mostly) consumed by earlier pairs
        }
        u /= nu;
        let mut partner = w * &u / t;
        let overlap_u = u.dot(&partner);
        partner.axpy(-overlap_u, &u, 1.0);
        for c in &cols {
            let overlap = c.dot(&partner);
            partner.axpy(-overlap, c, 1.0);
        }
        let np = partner.norm();
        assert!(
            np > 0.5,
            "mode pairing degenerated (|Wu|/t = {np:.3e}); eigenvalue grouping too coarse"
        );
        partner /= np;
        cols.push(u);
        cols.push(partner);
    }
    let mut p = DMatrix::<f64>::zeros(d, d);
    for (c, v) in cols.iter().enumerate() {
        p.set_column(c, v);
    }
    p
}


#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_antisymmetric(dim: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let x = rng.gen_range(-1.0..1.0);
                a[(i, j)] = x;
                a[(j, i)] = -x;
            }
        }
        a
    }

    #[test]
    fn scaled_survives_huge_products() {
        let mut s = Scaled::ONE;
        for _ in 0..2000 {
            s = s.mul_f64(2.0);
        }
        for _ in 0..2000 {
            s = s.mul_f64(0.5);
        }
        assert_abs_diff_eq!(s.value(), 1.0, epsilon = 1e-12);
        // 2^3000 · 2^-3000 without ever overflowing
        let big = Scaled::new(3.0).shift(3000);
        let small = Scaled::new(1.0 / 3.0).shift(-3000);
        assert_abs_diff_eq!(big.mul(small).value(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn normal_ordering_sorts_and_contracts() {
        // γ₂ γ₀ = −γ₀ γ₂ → one inversion flips the sign (i² bookkeeping)
        let mut m = Monomial {
            coeff: Scaled::ONE,
            i_pow: 0,
            gammas: vec![2, 0],
        };
        m.normal_order();
        assert_eq!(m.gammas, vec![0, 2]);
        assert_eq!(m.i_pow, 2);

        // γ₁ γ₀ γ₁ = −γ₀ γ₁ γ₁ = −γ₀/2
        let mut m = Monomial {
            coeff: Scaled::ONE,
            i_pow: 0,
            gammas: vec![1, 0, 1],
        };
        m.normal_order();
        assert_eq!(m.gammas, vec![0]);
        assert_eq!(m.i_pow, 2);
        assert_abs_diff_eq!(m.coeff.value(), 0.5, epsilon = 0.0);
    }

    #[test]
    fn dense_generators_anticommute_correctly() {
        let gs = dense_check::gammas(2);
        let dim = 4;
        for (i, gi) in gs.iter().enumerate() {
            for (j, gj) in gs.iter().enumerate() {
                let anti = gi * gj + gj * gi;
                let expect = if i == j { 1.0 } else { 0.0 };
                for r in 0..dim {
                    for c in 0..dim {
                        let want = if r == c { expect } else { 0.0 };
                        assert_abs_diff_eq!(anti[(r, c)].re, want, epsilon = 1e-12);
                        assert_abs_diff_eq!(anti[(r, c)].im, 0.0, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn monomial_product_matches_dense_algebra() {
        let n = 3;
        let gs = dense_check::gammas(n);
        let dim = 1 << n;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let len = rng.gen_range(0..7);
            let gammas: Vec<u32> = (0..len).map(|_| rng.gen_range(0..2 * n as u32)).collect();
            let mut mono = Monomial {
                coeff: Scaled::ONE,
                i_pow: 0,
                gammas: gammas.clone(),
            };
            mono.normal_order();

            let mut dense = DMatrix::<Complex64>::identity(dim, dim);
            for &g in &gammas {
                dense = dense * &gs[g as usize];
            }
            let mut expected = DMatrix::<Complex64>::identity(dim, dim);
            for &g in &mono.gammas {
                expected = expected * &gs[g as usize];
            }
            let phase = Complex64::i().powu(mono.i_pow as u32) * mono.coeff.value();
            let diff = (&dense - expected * phase).norm();
            assert!(diff < 1e-10, "ordering mismatch for {gammas:?}: {diff}");
        }
    }

    #[test]
    fn pfaffian_of_canonical_blocks() {
        // Pf of [[0,a,b,c],[−a,0,d,e],[−b,−d,0,f],[−c,−e,−f,0]] = af − be + cd
        let (a, b, c, d, e, f) = (0.7, -1.3, 0.4, 2.0, -0.8, 1.1);
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, a, b, c, //
                -a, 0.0, d, e, //
                -b, -d, 0.0, f, //
                -c, -e, -f, 0.0,
            ],
        );
        assert_abs_diff_eq!(
            pfaffian(&m).value(),
            a * f - b * e + c * d,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pfaffian_squares_to_determinant() {
        for seed in 0..5 {
            let a = random_antisymmetric(8, seed);
            let pf = pfaffian(&a).value();
            let det = a.determinant();
            assert_abs_diff_eq!(pf * pf, det, epsilon = 1e-9 * det.abs().max(1.0));
        }
    }

    #[test]
    fn pfaffian_of_odd_dimension_is_zero() {
        let a = random_antisymmetric(5, 3);
        assert_eq!(pfaffian(&a).value(), 0.0);
    }

    #[test]
    fn canonical_form_reconstructs_generic_matrix() {
        let a = random_antisymmetric(20, 42);
        let cf = canonical_form(&a);
        let q = &cf.q;
        let orth = (q.transpose() * q - DMatrix::identity(20, 20)).norm();
        assert!(orth < 1e-10, "Q not orthogonal: {orth}");
        let b = q.transpose() * &a * q;
        for (k, &t) in cf.modes.iter().enumerate() {
            assert_abs_diff_eq!(b[(2 * k, 2 * k + 1)], -t, epsilon = 1e-9);
            assert_abs_diff_eq!(b[(2 * k + 1, 2 * k)], t, epsilon = 1e-9);
        }
        // everything off the canonical blocks vanishes
        let mut resid = b.clone();
        for k in 0..cf.modes.len() {
            resid[(2 * k, 2 * k + 1)] = 0.0;
            resid[(2 * k + 1, 2 * k)] = 0.0;
        }
        assert!(resid.norm() < 1e-9, "residual {:.3e}", resid.norm());
        // ascending mode order
        for w in cf.modes.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
    }

    #[test]
    fn canonical_form_handles_full_degeneracy() {
        // t = 2 on every mode, conjugated by a random orthogonal matrix.
        let dim = 40;
        let mut blocks = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..dim / 2 {
            blocks[(2 * k, 2 * k + 1)] = -2.0;
            blocks[(2 * k + 1, 2 * k)] = 2.0;
        }
        let r = random_antisymmetric(dim, 7);
        let q0 = (r * 0.1).exp(); // exponential of antisymmetric = orthogonal
        let a = &q0 * blocks * q0.transpose();
        let cf = canonical_form(&a);
        for &t in &cf.modes {
            assert_abs_diff_eq!(t, 2.0, epsilon = 1e-9);
        }
        let b = cf.q.transpose() * &a * &cf.q;
        for k in 0..dim / 2 {
            assert_abs_diff_eq!(b[(2 * k, 2 * k + 1)], -2.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn canonical_form_flags_zero_modes() {
        let mut a = DMatrix::<f64>::zeros(6, 6);
        a[(0, 1)] = -1.5;
        a[(1, 0)] = 1.5;
        a[(2, 3)] = -0.5;
        a[(3, 2)] = 0.5;
        // rows/cols 4,5 are a zero mode
        let cf = canonical_form(&a);
        assert!(cf.modes[0] <= ZERO_MODE_TOL);
        assert_abs_diff_eq!(cf.modes[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(cf.modes[2], 1.5, epsilon = 1e-12);
    }
}
