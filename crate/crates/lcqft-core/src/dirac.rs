//! The Dirac algebra Cl(1,3) with metric diag(1,-1,-1,-1), its complex 4x4
//! representations, intertwiners between representations, and the adjoint /
//! charge-conjugation matrices A and C.
//!
//! Abstract elements carry real coefficients on the 16 canonical monomials
//! {1; g_a; g_a g_b (a<b); g_a g_b g_c (a<b<c); g5}; products reduce through
//! a multiplication table built once from the anticommutation relations.

use crate::linalg::{c, cr, hermitian_eig, CMat, M4};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Metric signature as a diagonal: eta = diag(1,-1,-1,-1).
pub const ETA_DIAG: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Full 4x4 metric matrix.
pub const ETA: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
];

/// Bitmask of generators for each canonical basis monomial, ordered by grade
/// and then lexicographically: 1; g0..g3; g0g1,g0g2,g0g3,g1g2,g1g3,g2g3;
/// g0g1g2,g0g1g3,g0g2g3,g1g2g3; g5 = g0g1g2g3.
pub const MONOMIAL_MASKS: [u8; 16] = [
    0b0000, 0b0001, 0b0010, 0b0100, 0b1000, 0b0011, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100,
    0b0111, 0b1011, 0b1101, 0b1110, 0b1111,
];

const fn index_of_mask_table() -> [usize; 16] {
    let mut t = [0usize; 16];
    let mut i = 0;
    while i < 16 {
        t[MONOMIAL_MASKS[i] as usize] = i;
        i += 1;
    }
    t
}

const INDEX_OF_MASK: [usize; 16] = index_of_mask_table();

/// Product of two basis monomials given as generator bitmasks: returns the
/// mask of the result together with the sign picked up from anticommutation
/// swaps and from squares g_a^2 = eta_aa.
const fn mono_mul(ma: u8, mb: u8) -> (u8, i8) {
    let mut sign: i8 = 1;
    let mut swaps: u32 = 0;
    let mut b: u8 = 0;
    while b < 4 {
        if mb & (1 << b) != 0 {
            swaps += (ma >> (b + 1)).count_ones();
            if ma & (1 << b) != 0 && b != 0 {
                // eta_bb = -1 for the three spatial generators.
                sign = -sign;
            }
        }
        b += 1;
    }
    if swaps % 2 == 1 {
        sign = -sign;
    }
    (ma ^ mb, sign)
}

const fn product_tables() -> ([[u8; 16]; 16], [[i8; 16]; 16]) {
    let mut idx = [[0u8; 16]; 16];
    let mut sgn = [[0i8; 16]; 16];
    let mut i = 0;
    while i < 16 {
        let mut j = 0;
        while j < 16 {
            let (mask, s) = mono_mul(MONOMIAL_MASKS[i], MONOMIAL_MASKS[j]);
            idx[i][j] = INDEX_OF_MASK[mask as usize] as u8;
            sgn[i][j] = s;
            j += 1;
        }
        i += 1;
    }
    (idx, sgn)
}

const PRODUCT_TABLES: ([[u8; 16]; 16], [[i8; 16]; 16]) = product_tables();

/// Grade (number of generators) of basis monomial `i`.
pub fn monomial_grade(i: usize) -> u32 {
    MONOMIAL_MASKS[i].count_ones()
}

/// Element of the real 16-dimensional Dirac algebra.
#[derive(Clone, Copy, PartialEq, Debug, Default)]
pub struct CliffordElement {
    pub c: [f64; 16],
}

impl CliffordElement {
    pub fn zero() -> Self {
        CliffordElement { c: [0.0; 16] }
    }

    pub fn one() -> Self {
        CliffordElement::basis(0)
    }

    pub fn scalar(x: f64) -> Self {
        let mut e = CliffordElement::zero();
        e.c[0] = x;
        e
    }

    /// The basis monomial with canonical index `i`.
    pub fn basis(i: usize) -> Self {
        let mut e = CliffordElement::zero();
        e.c[i] = 1.0;
        e
    }

    /// The generator g_a.
    pub fn gamma(a: usize) -> Self {
        assert!(a < 4);
        CliffordElement::basis(1 + a)
    }

    /// The volume element g5 = g0 g1 g2 g3.
    pub fn gamma5() -> Self {
        CliffordElement::basis(15)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut e = *self;
        for k in 0..16 {
            e.c[k] += o.c[k];
        }
        e
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut e = *self;
        for k in 0..16 {
            e.c[k] -= o.c[k];
        }
        e
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut e = *self;
        for k in 0..16 {
            e.c[k] *= s;
        }
        e
    }

    pub fn product(&self, o: &Self) -> Self {
        let mut e = CliffordElement::zero();
        for i in 0..16 {
            let a = self.c[i];
            if a == 0.0 {
                continue;
            }
            for j in 0..16 {
                let b = o.c[j];
                if b == 0.0 {
                    continue;
                }
                let k = PRODUCT_TABLES.0[i][j] as usize;
                e.c[k] += a * b * PRODUCT_TABLES.1[i][j] as f64;
            }
        }
        e
    }

    /// Keeps only components of grade `k`.
    pub fn grade_part(&self, k: u32) -> Self {
        let mut e = *self;
        for i in 0..16 {
            if monomial_grade(i) != k {
                e.c[i] = 0.0;
            }
        }
        e
    }

    pub fn is_even(&self) -> bool {
        (0..16).all(|i| monomial_grade(i) % 2 == 0 || self.c[i] == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Bilinear product on the canonical basis, exposed for table-level checks.
pub fn clifford_product(a: &CliffordElement, b: &CliffordElement) -> CliffordElement {
    a.product(b)
}

#[derive(Clone, PartialEq, Debug)]
pub enum DiracError {
    /// The four matrices fail the anticommutation relations (max defect given).
    InvalidRep { defect: f64 },
    /// The intertwining system does not have a one-dimensional nullspace.
    NoIntertwiner { smallest: f64, second: f64 },
    /// The A or C linear system is degenerate or violates a required
    /// structural property (Hermitizability, definiteness, conjugation norm).
    NoSolution { context: &'static str },
}

impl core::fmt::Display for DiracError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DiracError::InvalidRep { defect } => {
                write!(f, "matrices violate the Clifford relations (defect {defect:.3e})")
            }
            DiracError::NoIntertwiner { smallest, second } => write!(
                f,
                "intertwiner space is not one-dimensional (singular values {smallest:.3e}, {second:.3e})"
            ),
            DiracError::NoSolution { context } => {
                write!(f, "no admissible solution: {context}")
            }
        }
    }
}

/// Irreducible complex 4x4 representation of the algebra.
#[derive(Clone, PartialEq, Debug)]
pub struct GammaRep {
    pub gamma: [M4; 4],
    pub gamma5: M4,
}

fn sigma_matrices() -> [[[Complex64; 2]; 2]; 3] {
    [
        [[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]],
        [[cr(0.0), c(0.0, -1.0)], [c(0.0, 1.0), cr(0.0)]],
        [[cr(1.0), cr(0.0)], [cr(0.0), cr(-1.0)]],
    ]
}

impl GammaRep {
    /// Chiral matrices: gamma0 = offdiag(1,1), gamma_i = offdiag(-sigma_i, sigma_i).
    pub fn weyl() -> GammaRep {
        let s = sigma_matrices();
        let mut g = [M4::zero(); 4];
        for i in 0..2 {
            for j in 0..2 {
                let d = if i == j { cr(1.0) } else { cr(0.0) };
                g[0].0[i][j + 2] = d;
                g[0].0[i + 2][j] = d;
                for a in 0..3 {
                    g[a + 1].0[i][j + 2] = -s[a][i][j];
                    g[a + 1].0[i + 2][j] = s[a][i][j];
                }
            }
        }
        GammaRep::from_gammas(g).expect("chiral matrices satisfy the relations")
    }

    /// Diagonal-gamma0 matrices: gamma0 = diag(1,1,-1,-1), gamma_i =
    /// blocks [[0, sigma_i], [-sigma_i, 0]].
    pub fn standard() -> GammaRep {
        let s = sigma_matrices();
        let mut g = [M4::zero(); 4];
        for i in 0..2 {
            g[0].0[i][i] = cr(1.0);
            g[0].0[i + 2][i + 2] = cr(-1.0);
            for j in 0..2 {
                for a in 0..3 {
                    g[a + 1].0[i][j + 2] = s[a][i][j];
                    g[a + 1].0[i + 2][j] = -s[a][i][j];
                }
            }
        }
        GammaRep::from_gammas(g).expect("diagonal-gamma0 matrices satisfy the relations")
    }

    pub fn from_gammas(gamma: [M4; 4]) -> Result<GammaRep, DiracError> {
        let mut defect = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == b { ETA_DIAG[a] * 2.0 } else { 0.0 };
                let anti = gamma[a].anticommutator(&gamma[b]);
                let diff = anti.sub(&M4::id().scale_re(want));
                defect = defect.max(diff.max_abs());
            }
            defect = defect.max(gamma[a].tr().norm());
        }
        let gamma5 = gamma[0].mul(&gamma[1]).mul(&gamma[2]).mul(&gamma[3]);
        defect = defect.max(gamma5.mul(&gamma5).add(&M4::id()).max_abs());
        if defect > 1e-13 {
            return Err(DiracError::InvalidRep { defect });
        }
        Ok(GammaRep { gamma, gamma5 })
    }

    /// The representation with matrices K^{-1} gamma_a K.
    pub fn conjugated(&self, k: &M4) -> Result<GammaRep, DiracError> {
        let kinv = k.inv().ok_or(DiracError::NoSolution {
            context: "conjugator is singular",
        })?;
        let mut g = [M4::zero(); 4];
        for a in 0..4 {
            g[a] = kinv.mul(&self.gamma[a]).mul(k);
        }
        // Conjugation keeps the relations exactly up to roundoff; rebuild
        // gamma5 directly rather than re-validating at the strict tolerance.
        let gamma5 = g[0].mul(&g[1]).mul(&g[2]).mul(&g[3]);
        Ok(GammaRep { gamma: g, gamma5 })
    }

    pub fn clifford_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == b { ETA_DIAG[a] * 2.0 } else { 0.0 };
                let anti = self.gamma[a].anticommutator(&self.gamma[b]);
                defect = defect.max(anti.sub(&M4::id().scale_re(want)).max_abs());
            }
        }
        defect
    }

    /// Represented basis monomial with canonical index `i`.
    pub fn monomial(&self, i: usize) -> M4 {
        let mask = MONOMIAL_MASKS[i];
        let mut m = M4::id();
        for a in 0..4 {
            if mask & (1 << a) != 0 {
                m = m.mul(&self.gamma[a]);
            }
        }
        m
    }

    pub fn represent(&self, e: &CliffordElement) -> M4 {
        let mut m = M4::zero();
        for i in 0..16 {
            if e.c[i] != 0.0 {
                m = m.add(&self.monomial(i).scale_re(e.c[i]));
            }
        }
        m
    }

    /// Coefficients of `x` on the represented monomial basis. Exact for any
    /// x in the image of the algebra: monomials are trace-orthogonal with
    /// Tr(m_i m_i) = 4 * (sign of the monomial square).
    pub fn decompose(&self, x: &M4) -> [Complex64; 16] {
        let mut out = [cr(0.0); 16];
        for i in 0..16 {
            let (_, s) = mono_mul(MONOMIAL_MASKS[i], MONOMIAL_MASKS[i]);
            let m = self.monomial(i);
            out[i] = m.mul(x).tr() * cr(s as f64 / 4.0);
        }
        out
    }

    /// gamma(n) = n^a gamma_a for a real covector of frame components.
    pub fn gamma_vec(&self, n: &[f64; 4]) -> M4 {
        let mut m = M4::zero();
        for a in 0..4 {
            m = m.add(&self.gamma[a].scale_re(n[a]));
        }
        m
    }
}

/// Represented matrix together with its trace and determinant; both scalars
/// are representation-independent.
pub fn represent_trace_det(e: &CliffordElement, rep: &GammaRep) -> (M4, Complex64, Complex64) {
    let m = rep.represent(e);
    (m, m.tr(), m.det())
}

/// Intertwiner between two representations: rep1(g_a) L = L rep2(g_a),
/// normalized to det L = 1 with the first nonzero entry (row-major scan)
/// having positive real part.
#[derive(Clone, PartialEq, Debug)]
pub struct Intertwiner {
    pub l: M4,
    pub residual: f64,
}

/// (A ox B^T) acting on row-major vec: vec(A X B)[(i,j)] with entry
/// [(i,j),(k,l)] = A[i][k] B[l][j].
fn kron_left_right(a: &M4, b: &M4) -> CMat {
    let mut m = CMat::zeros(16, 16);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    *m.at_mut(4 * i + j, 4 * k + l) = a.0[i][k] * b.0[l][j];
                }
            }
        }
    }
    m
}

/// Smallest singular direction of the stacked system
/// { lhs_a X - X rhs_a = 0 }: returns the unit 16-vector reshaped to a
/// matrix, together with the smallest and second-smallest singular values
/// scaled relative to the largest.
///
/// The Gram matrix squares the condition number, so its lowest eigenpair is
/// only good to ~1e-8 relative; a few rounds of shifted inverse iteration
/// recover the nullvector to working precision, and the smallest singular
/// value is then measured directly on the unsquared equations.
fn stacked_nullspace(lhs: &[M4; 4], rhs: &[M4; 4]) -> (M4, f64, f64) {
    let id = M4::id();
    let mut gram = CMat::zeros(16, 16);
    for a in 0..4 {
        let op = kron_left_right(&lhs[a], &id).sub(&kron_left_right(&id, &rhs[a]));
        gram = gram.add(&op.adj().mul(&op));
    }
    let (vals, vecs) = hermitian_eig(&gram);
    let lmax = vals[15].max(1e-300);
    let smax = lmax.sqrt();
    let s1 = vals[1].max(0.0).sqrt() / smax;
    let mut v: alloc::vec::Vec<Complex64> = (0..16).map(|i| vecs.at(i, 0)).collect();
    let mut shifted = gram.clone();
    for i in 0..16 {
        *shifted.at_mut(i, i) += cr(lmax * 1e-15);
    }
    for _ in 0..3 {
        if let Some(w) = shifted.solve(&v) {
            let n = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if n > 0.0 {
                v = w.into_iter().map(|x| x / cr(n)).collect();
            }
        }
    }
    let l = M4::from_fn(|i, j| v[4 * i + j]);
    let mut direct = 0.0f64;
    for a in 0..4 {
        let d = lhs[a].mul(&l).sub(&l.mul(&rhs[a]));
        direct += d.norm() * d.norm();
    }
    let s0 = direct.sqrt() / smax;
    (l, s0, s1)
}

fn first_significant_entry(m: &M4) -> Complex64 {
    let cutoff = 1e-12 * m.max_abs();
    for i in 0..4 {
        for j in 0..4 {
            if m.0[i][j].norm() > cutoff {
                return m.0[i][j];
            }
        }
    }
    cr(0.0)
}

/// Rotate by the fourth roots of unity so the first significant entry has
/// positive real part; this is the whole residual freedom once det = 1.
fn fix_quarter_phase(l: &M4) -> M4 {
    let mut best = *l;
    let mut best_key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut cand = *l;
    for _ in 0..4 {
        let e = first_significant_entry(&cand);
        let key = (e.re, e.im);
        if key > best_key {
            best_key = key;
            best = cand;
        }
        cand = cand.scale(c(0.0, 1.0));
    }
    best
}

fn intertwining_residual(lhs: &[M4; 4], l: &M4, rhs: &[M4; 4]) -> f64 {
    let mut r = 0.0f64;
    for a in 0..4 {
        r = r.max(lhs[a].mul(l).sub(&l.mul(&rhs[a])).max_abs());
    }
    r
}

/// Solves rep1(g_a) L = L rep2(g_a). The solution space must be exactly
/// one-dimensional (fundamental-theorem uniqueness); anything else reports
/// `NoIntertwiner`.
pub fn find_intertwiner(rep1: &GammaRep, rep2: &GammaRep) -> Result<Intertwiner, DiracError> {
    let (raw, s0, s1) = stacked_nullspace(&rep1.gamma, &rep2.gamma);
    if s0 > 1e-10 || s1 <= 1e-6 {
        return Err(DiracError::NoIntertwiner {
            smallest: s0,
            second: s1,
        });
    }
    let det = raw.det();
    if det.norm() < 1e-10 {
        return Err(DiracError::NoIntertwiner {
            smallest: s0,
            second: s1,
        });
    }
    let l = fix_quarter_phase(&raw.scale(det.powf(-0.25)));
    let residual = intertwining_residual(&rep1.gamma, &l, &rep2.gamma);
    Ok(Intertwiner { l, residual })
}

/// Adjoint matrix A and charge conjugation C for a representation:
/// gamma_a^dag = A gamma_a A^{-1} with A Hermitian, A gamma(n0) > 0 and
/// Tr(A gamma(n0)) = 4 for n0 = (1,0,0,0); -conj(gamma_a) = C gamma_a C^{-1}
/// with conj(C) C = 1 and the first nonzero entry of C positive real.
#[derive(Clone, PartialEq, Debug)]
pub struct AdjointPair {
    pub a: M4,
    pub c: M4,
}

pub fn find_adjoint_conjugation(rep: &GammaRep) -> Result<AdjointPair, DiracError> {
    let dagger = [
        rep.gamma[0].adj(),
        rep.gamma[1].adj(),
        rep.gamma[2].adj(),
        rep.gamma[3].adj(),
    ];
    let (x, s0, s1) = stacked_nullspace(&dagger, &rep.gamma);
    if s0 > 1e-10 || s1 <= 1e-6 {
        return Err(DiracError::NoSolution {
            context: "adjoint system is not one-dimensional",
        });
    }
    // X^dag = c X with |c| = 1; a half-phase rotation makes it Hermitian.
    let mut pivot = (0usize, 0usize);
    let mut pmax = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if x.0[i][j].norm() > pmax {
                pmax = x.0[i][j].norm();
                pivot = (i, j);
            }
        }
    }
    let phase_sq = x.0[pivot.1][pivot.0].conj() / x.0[pivot.0][pivot.1];
    if (phase_sq.norm() - 1.0).abs() > 1e-8 {
        return Err(DiracError::NoSolution {
            context: "adjoint solution is not Hermitizable",
        });
    }
    let rotated = x.scale(phase_sq.sqrt());
    let mut a = rotated.add(&rotated.adj()).scale(cr(0.5));
    if a.sub(&rotated).max_abs() > 1e-8 * rotated.max_abs() {
        return Err(DiracError::NoSolution {
            context: "adjoint solution is not Hermitizable",
        });
    }
    // Fix sign by definiteness of A gamma(n0) and scale to trace 4.
    let ag0 = a.mul(&rep.gamma[0]);
    let (evals, _) = hermitian_eig(&ag0.to_cmat());
    let scale = ag0.max_abs().max(1e-300);
    if evals.iter().all(|&v| v < -1e-10 * scale) {
        a = a.neg();
    } else if !evals.iter().all(|&v| v > 1e-10 * scale) {
        return Err(DiracError::NoSolution {
            context: "adjoint times gamma(n0) is not definite",
        });
    }
    let t = a.mul(&rep.gamma[0]).tr().re;
    a = a.scale_re(4.0 / t);

    let minus_conj = [
        rep.gamma[0].conj().neg(),
        rep.gamma[1].conj().neg(),
        rep.gamma[2].conj().neg(),
        rep.gamma[3].conj().neg(),
    ];
    let (craw, t0, t1) = stacked_nullspace(&minus_conj, &rep.gamma);
    if t0 > 1e-10 || t1 <= 1e-6 {
        return Err(DiracError::NoSolution {
            context: "conjugation system is not one-dimensional",
        });
    }
    let prod = craw.conj().mul(&craw);
    let kappa = prod.tr() / cr(4.0);
    if prod.sub(&M4::id().scale(kappa)).max_abs() > 1e-8 * prod.max_abs() {
        return Err(DiracError::NoSolution {
            context: "conj(C) C is not scalar",
        });
    }
    if kappa.im.abs() > 1e-10 || kappa.re <= 1e-12 {
        return Err(DiracError::NoSolution {
            context: "conj(C) C has no positive scalar",
        });
    }
    let mut cc = craw.scale_re(1.0 / kappa.re.sqrt());
    // Residual freedom is a pure phase, which conj(C) C = 1 cannot see.
    let e = first_significant_entry(&cc);
    cc = cc.scale(e.conj() / cr(e.norm()));
    Ok(AdjointPair { a, c: cc })
}

/// Max defect across all AdjointPair identities for this representation.
pub fn adjoint_pair_defect(rep: &GammaRep, pair: &AdjointPair) -> f64 {
    let mut d = pair.a.sub(&pair.a.adj()).max_abs();
    d = d.max(pair.c.conj().mul(&pair.c).sub(&M4::id()).max_abs());
    let ainv = pair.a.inv().expect("A is invertible");
    let cinv = pair.c.inv().expect("C is invertible");
    for a in 0..4 {
        let lhs = rep.gamma[a].adj();
        let rhs = pair.a.mul(&rep.gamma[a]).mul(&ainv);
        d = d.max(lhs.sub(&rhs).max_abs());
        let lhs2 = rep.gamma[a].conj().neg();
        let rhs2 = pair.c.mul(&rep.gamma[a]).mul(&cinv);
        d = d.max(lhs2.sub(&rhs2).max_abs());
    }
    // A = -C^dag conj(A) C.
    let rebuilt = pair.c.adj().mul(&pair.a.conj()).mul(&pair.c).neg();
    d = d.max(pair.a.sub(&rebuilt).max_abs());
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cr};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_element(r: &mut ChaCha8Rng) -> CliffordElement {
        let mut e = CliffordElement::zero();
        for k in 0..16 {
            e.c[k] = r.gen_range(-1.0..1.0);
        }
        e
    }

    /// Well-conditioned random invertible matrix: exp of a moderate matrix.
    fn random_conjugator(r: &mut ChaCha8Rng) -> M4 {
        M4::from_fn(|_, _| c(r.gen_range(-0.4..0.4), r.gen_range(-0.4..0.4))).exp()
    }

    #[test]
    fn signature_constants() {
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { ETA_DIAG[i] } else { 0.0 };
                assert_eq!(ETA[i][j], want);
            }
        }
        // eta^2 = 1, trace eta = -2.
        assert_eq!(ETA_DIAG.iter().map(|x| x * x).sum::<f64>(), 4.0);
        assert_eq!(ETA_DIAG.iter().sum::<f64>(), -2.0);
    }

    #[test]
    fn generator_products() {
        let g0 = CliffordElement::gamma(0);
        let g1 = CliffordElement::gamma(1);
        assert_eq!(g0.product(&g0), CliffordElement::one());
        assert_eq!(g1.product(&g1), CliffordElement::scalar(-1.0));
        // g0 g1 is the first grade-2 monomial.
        assert_eq!(g0.product(&g1), CliffordElement::basis(5));
        assert_eq!(g1.product(&g0), CliffordElement::basis(5).scale(-1.0));
        let g5 = CliffordElement::gamma5();
        assert_eq!(g5.product(&g5), CliffordElement::scalar(-1.0));
        // g5 anticommutes with each generator.
        for a in 0..4 {
            let ga = CliffordElement::gamma(a);
            let anti = ga.product(&g5).add(&g5.product(&ga));
            assert_eq!(anti, CliffordElement::zero());
        }
    }

    #[test]
    fn product_associative_and_graded() {
        let mut r = rng(7);
        for _ in 0..1000 {
            let a = random_element(&mut r);
            let b = random_element(&mut r);
            let cc = random_element(&mut r);
            let lhs = a.product(&b).product(&cc);
            let rhs = a.product(&b.product(&cc));
            assert!(lhs.sub(&rhs).max_abs() < 1e-12 * (1.0 + lhs.max_abs()));
        }
        // Grading is exact on basis monomials: parity adds mod 2.
        for i in 0..16 {
            for j in 0..16 {
                let p = CliffordElement::basis(i).product(&CliffordElement::basis(j));
                let k = (0..16).find(|&k| p.c[k] != 0.0).unwrap();
                assert_eq!(
                    monomial_grade(k) % 2,
                    (monomial_grade(i) + monomial_grade(j)) % 2
                );
            }
        }
    }

    #[test]
    fn center_is_scalar() {
        // Exact table check: only the identity monomial commutes with all
        // four generators. (g5 anticommutes with each g_a in dimension 4.)
        for i in 0..16 {
            let e = CliffordElement::basis(i);
            let commutes = (0..4).all(|a| {
                let g = CliffordElement::gamma(a);
                e.product(&g).sub(&g.product(&e)).max_abs() == 0.0
            });
            assert_eq!(commutes, i == 0);
        }
    }

    #[test]
    fn weyl_rep_valid() {
        let rep = GammaRep::weyl();
        assert!(rep.clifford_defect() < 1e-15);
        // gamma0 blocks [[0,1],[1,0]].
        for i in 0..2 {
            assert_eq!(rep.gamma[0].0[i][i + 2], cr(1.0));
            assert_eq!(rep.gamma[0].0[i + 2][i], cr(1.0));
        }
        let sq = rep.gamma[1].mul(&rep.gamma[1]);
        assert!(sq.add(&M4::id()).max_abs() < 1e-15);
        assert!(rep.gamma5.mul(&rep.gamma5).add(&M4::id()).max_abs() < 1e-15);
    }

    #[test]
    fn trace_identities() {
        let rep = GammaRep::weyl();
        for a in 0..4 {
            for b in 0..4 {
                let e = CliffordElement::gamma(a).product(&CliffordElement::gamma(b));
                let (_, tr, _) = represent_trace_det(&e, &rep);
                let want = 4.0 * ETA[a][b];
                assert!((tr - cr(want)).norm() < 1e-13);
            }
        }
        // Tr([g_b,g_c] g_d g_a) = 8 (eta_cd eta_ba - eta_bd eta_ca).
        for b in 0..4 {
            for cc in 0..4 {
                for d in 0..4 {
                    for a in 0..4 {
                        let gb = CliffordElement::gamma(b);
                        let gc = CliffordElement::gamma(cc);
                        let comm = gb.product(&gc).sub(&gc.product(&gb));
                        let e = comm
                            .product(&CliffordElement::gamma(d))
                            .product(&CliffordElement::gamma(a));
                        let (_, tr, _) = represent_trace_det(&e, &rep);
                        let want = 8.0 * (ETA[cc][d] * ETA[b][a] - ETA[b][d] * ETA[cc][a]);
                        assert!((tr - cr(want)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn det_of_vector_is_fourth_power_of_norm() {
        // For u in the real span of the generators, det u = |u|^4 with
        // |u|^2 = eta_ab u^a u^b; for u = 2 g_0 that is 16.
        let rep = GammaRep::weyl();
        let u = CliffordElement::gamma(0).scale(2.0);
        let (_, _, det) = represent_trace_det(&u, &rep);
        assert!((det - cr(16.0)).norm() < 1e-12);
        let mut r = rng(11);
        for _ in 0..50 {
            let mut comp = [0.0; 4];
            for x in comp.iter_mut() {
                *x = r.gen_range(-1.0..1.0);
            }
            let mut u = CliffordElement::zero();
            for a in 0..4 {
                u = u.add(&CliffordElement::gamma(a).scale(comp[a]));
            }
            let norm_sq: f64 = (0..4).map(|a| ETA_DIAG[a] * comp[a] * comp[a]).sum();
            let (_, _, det) = represent_trace_det(&u, &rep);
            assert!((det - cr(norm_sq * norm_sq)).norm() < 1e-10);
        }
    }

    #[test]
    fn trace_det_rep_independent() {
        let weyl = GammaRep::weyl();
        let mut r = rng(23);
        let k = random_conjugator(&mut r);
        let other = weyl.conjugated(&k).unwrap();
        for _ in 0..100 {
            let e = random_element(&mut r);
            let (_, tr1, det1) = represent_trace_det(&e, &weyl);
            let (_, tr2, det2) = represent_trace_det(&e, &other);
            assert!((tr1 - tr2).norm() < 1e-10 * (1.0 + tr1.norm()));
            assert!((det1 - det2).norm() < 1e-10 * (1.0 + det1.norm()));
        }
    }

    #[test]
    fn intertwiner_identity_case() {
        let weyl = GammaRep::weyl();
        let it = find_intertwiner(&weyl, &weyl).unwrap();
        assert!(it.residual < 1e-12);
        assert!(it.l.sub(&M4::id()).max_abs() < 1e-10);
    }

    #[test]
    fn intertwiner_recovers_conjugator() {
        let weyl = GammaRep::weyl();
        let mut r = rng(41);
        for _ in 0..25 {
            let k = random_conjugator(&mut r);
            let rep2 = weyl.conjugated(&k).unwrap();
            let it = find_intertwiner(&weyl, &rep2).unwrap();
            assert!(it.residual < 1e-10);
            assert!((it.l.det() - cr(1.0)).norm() < 1e-9);
            // L must be proportional to K: L K^{-1} = z 1.
            let w = it.l.mul(&k.inv().unwrap());
            let z = w.tr() / cr(4.0);
            assert!(w.sub(&M4::id().scale(z)).max_abs() < 1e-8 * w.max_abs());
            // Normalization picks the positive-real-part representative.
            let e = first_significant_entry(&it.l);
            assert!(e.re > 0.0);
        }
    }

    #[test]
    fn intertwiner_to_standard_rep() {
        let it = find_intertwiner(&GammaRep::weyl(), &GammaRep::standard()).unwrap();
        assert!(it.residual < 1e-10);
        assert!((it.l.det() - cr(1.0)).norm() < 1e-10);
    }

    #[test]
    fn adjoint_pair_weyl() {
        let weyl = GammaRep::weyl();
        let pair = find_adjoint_conjugation(&weyl).unwrap();
        // A = gamma0 exactly after the trace-4 normalization.
        assert!(pair.a.sub(&weyl.gamma[0]).max_abs() < 1e-10);
        // C is proportional to gamma2 with a unit phase.
        let w = pair.c.mul(&weyl.gamma[2].inv().unwrap());
        let z = w.tr() / cr(4.0);
        assert!(w.sub(&M4::id().scale(z)).max_abs() < 1e-9);
        assert!((z.norm() - 1.0).abs() < 1e-9);
        assert!(adjoint_pair_defect(&weyl, &pair) < 1e-12);
    }

    #[test]
    fn adjoint_pair_random_reps() {
        let weyl = GammaRep::weyl();
        let base = find_adjoint_conjugation(&weyl).unwrap();
        let mut r = rng(57);
        for _ in 0..20 {
            let k = random_conjugator(&mut r);
            let rep2 = weyl.conjugated(&k).unwrap();
            let pair = find_adjoint_conjugation(&rep2).unwrap();
            assert!(adjoint_pair_defect(&rep2, &pair) < 1e-11);
            // Transport: A2 is a positive multiple of K^dag A1 K and C2 a
            // unit multiple of conj(K)^{-1} C1 K.
            let a2t = k.adj().mul(&base.a).mul(&k);
            let ratio = pair.a.mul(&a2t.inv().unwrap());
            let z = ratio.tr() / cr(4.0);
            assert!(ratio.sub(&M4::id().scale(z)).max_abs() < 1e-8 * ratio.max_abs());
            assert!(z.im.abs() < 1e-9 && z.re > 0.0);
            let c2t = k.conj().inv().unwrap().mul(&base.c).mul(&k);
            let ratio = pair.c.mul(&c2t.inv().unwrap());
            let z = ratio.tr() / cr(4.0);
            assert!(ratio.sub(&M4::id().scale(z)).max_abs() < 1e-8 * ratio.max_abs());
            assert!((z.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn adjoint_positive_on_future_timelike() {
        let weyl = GammaRep::weyl();
        let pair = find_adjoint_conjugation(&weyl).unwrap();
        let mut r = rng(73);
        for _ in 0..100 {
            let n0 = r.gen_range(0.1..2.0);
            let dir = [
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
            ];
            let len = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
            let scale = n0 * r.gen_range(0.0..0.95) / len.max(1e-9);
            let n = [n0, dir[0] * scale, dir[1] * scale, dir[2] * scale];
            let an = pair.a.mul(&weyl.gamma_vec(&n));
            let (evals, _) = hermitian_eig(&an.to_cmat());
            assert!(evals[0] > 0.0, "A gamma(n) not positive for timelike n");
        }
    }

    #[test]
    fn gamma5_flips_adjoint_sign() {
        // pi(g5)^dag A pi(g5) = -A: the volume element is Pin but not Spin^0.
        let weyl = GammaRep::weyl();
        let pair = find_adjoint_conjugation(&weyl).unwrap();
        let g5 = weyl.gamma5;
        let lhs = g5.adj().mul(&pair.a).mul(&g5);
        assert!(lhs.add(&pair.a).max_abs() < 1e-12);
    }
}
