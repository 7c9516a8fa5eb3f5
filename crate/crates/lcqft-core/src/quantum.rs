//! CCR and CAR algebras over finite-dimensional test spaces.
//!
//! The bosonic side works with formal Weyl words over a real symplectic
//! space: products reduce to a single phase times a generator through
//! `W(f) W(h) = exp(-i/2 sigma(f,h)) W(f+h)`.  Quasi-free states enter
//! through their two-point form; higher moments come from the pairing sum
//! and cumulants from the partition transform, both implemented so that the
//! quasi-free cumulant cancellation is exact in floating point (matchings
//! and partitions are enumerated in the same lexicographic order).
//!
//! The fermionic side models the self-dual CAR algebra on a doubled test
//! space `C^m (+) C^m` carrying an adjoint flip `plus` and a charge
//! conjugation `charge`, represented on the fermionic Fock space of the
//! first summand through Jordan-Wigner operators.  The basis is adapted so
//! that `plus` exchanges paired basis vectors, which makes the canonical
//! anticommutation relations hold without any floating-point error on basis
//! arguments.

use crate::linalg::{c, cr, hermitian_eig, real_det, CMat};
#[allow(unused_imports)]
use num_traits::Float;
use crate::Complex64;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub enum QuantumError {
    /// Symplectic spaces have even dimension.
    OddDimension { dim: usize },
    /// The candidate form is not antisymmetric within tolerance.
    NotAntisymmetric { defect: f64 },
    /// The candidate form is degenerate.
    DegenerateForm { det: f64 },
    /// A Weyl word phase must lie on the unit circle.
    PhaseNotUnit { norm: f64 },
    /// Antisymmetric part of a two-point form disagrees with i/2 sigma.
    FormMismatch { defect: f64 },
    /// Hermitian part of a two-point form has a negative eigenvalue.
    NotPositive { min_eig: f64 },
    /// Moment or cumulant order outside the supported range.
    OrderTooLarge { n: usize, max: usize },
    /// Truncated oscillator too small for the requested check.
    TruncationTooSmall { tail: f64 },
    /// Fock space dimension 2^modes exceeds the supported range.
    DimTooLarge { modes: usize, max: usize },
}

impl fmt::Display for QuantumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantumError::OddDimension { dim } => {
                write!(f, "symplectic dimension {dim} is odd")
            }
            QuantumError::NotAntisymmetric { defect } => {
                write!(f, "form is not antisymmetric (defect {defect:.3e})")
            }
            QuantumError::DegenerateForm { det } => {
                write!(f, "form is degenerate (det {det:.3e})")
            }
            QuantumError::PhaseNotUnit { norm } => {
                write!(f, "Weyl phase has modulus {norm} away from 1")
            }
            QuantumError::FormMismatch { defect } => {
                write!(
                    f,
                    "antisymmetric part differs from i sigma (defect {defect:.3e})"
                )
            }
            QuantumError::NotPositive { min_eig } => {
                write!(f, "Hermitian part has eigenvalue {min_eig:.3e}")
            }
            QuantumError::OrderTooLarge { n, max } => {
                write!(f, "order {n} exceeds supported maximum {max}")
            }
            QuantumError::TruncationTooSmall { tail } => {
                write!(f, "oscillator truncation too small (tail {tail:.3e})")
            }
            QuantumError::DimTooLarge { modes, max } => {
                write!(f, "{modes} fermionic modes exceed supported maximum {max}")
            }
        }
    }
}

/// Real symplectic space: an even-dimensional coordinate space with a
/// nondegenerate antisymmetric bilinear form stored row-major.
#[derive(Debug, Clone)]
pub struct SymplecticSpace {
    pub dim: usize,
    sigma: Vec<f64>,
}

impl SymplecticSpace {
    pub fn new(dim: usize, sigma: Vec<f64>) -> Result<SymplecticSpace, QuantumError> {
        if dim % 2 != 0 {
            return Err(QuantumError::OddDimension { dim });
        }
        assert_eq!(sigma.len(), dim * dim);
        let mut defect = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                defect = defect.max((sigma[i * dim + j] + sigma[j * dim + i]).abs());
            }
        }
        if defect > 1e-14 {
            return Err(QuantumError::NotAntisymmetric { defect });
        }
        let det = real_det(dim, &sigma);
        if det.abs() < 1e-12 {
            return Err(QuantumError::DegenerateForm { det });
        }
        Ok(SymplecticSpace { dim, sigma })
    }

    /// Block form [[0, I], [-I, 0]] on coordinates (q_1..q_m, p_1..p_m).
    pub fn standard(modes: usize) -> SymplecticSpace {
        let dim = 2 * modes;
        let mut sigma = vec![0.0; dim * dim];
        for i in 0..modes {
            sigma[i * dim + modes + i] = 1.0;
            sigma[(modes + i) * dim + i] = -1.0;
        }
        SymplecticSpace { dim, sigma }
    }

    pub fn form(&self, f: &[f64], h: &[f64]) -> f64 {
        assert_eq!(f.len(), self.dim);
        assert_eq!(h.len(), self.dim);
        let mut s = 0.0;
        for i in 0..self.dim {
            let mut row = 0.0;
            for j in 0..self.dim {
                row += self.sigma[i * self.dim + j] * h[j];
            }
            s += f[i] * row;
        }
        s
    }

    pub fn sigma_entry(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.dim + j]
    }
}

/// A reduced Weyl word: unit phase times a single generator.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylWord {
    pub phase: Complex64,
    pub vector: Vec<f64>,
}

impl WeylWord {
    pub fn new(phase: Complex64, vector: Vec<f64>) -> Result<WeylWord, QuantumError> {
        let norm = phase.norm();
        if (norm - 1.0).abs() > 1e-14 {
            return Err(QuantumError::PhaseNotUnit { norm });
        }
        Ok(WeylWord { phase, vector })
    }

    pub fn identity(dim: usize) -> WeylWord {
        WeylWord {
            phase: ONE,
            vector: vec![0.0; dim],
        }
    }

    pub fn generator(vector: Vec<f64>) -> WeylWord {
        WeylWord { phase: ONE, vector }
    }
}

/// Product of two reduced words: phases multiply together with the
/// symplectic twist exp(-i/2 sigma(f,h)), generators add.
pub fn weyl_mul(space: &SymplecticSpace, a: &WeylWord, b: &WeylWord) -> WeylWord {
    let s = space.form(&a.vector, &b.vector);
    let twist = Complex64::from_polar(1.0, -0.5 * s);
    let vector = a
        .vector
        .iter()
        .zip(b.vector.iter())
        .map(|(x, y)| x + y)
        .collect();
    WeylWord {
        phase: a.phase * b.phase * twist,
        vector,
    }
}

/// Adjoint of a reduced word: W(f)^* = W(-f) and the phase conjugates.
pub fn weyl_adjoint(w: &WeylWord) -> WeylWord {
    WeylWord {
        phase: w.phase.conj(),
        vector: w.vector.iter().map(|x| -x).collect(),
    }
}

/// Reduce a product of Weyl generators to normal form by folding from the
/// left.
pub fn weyl_normal_form(space: &SymplecticSpace, factors: &[Vec<f64>]) -> WeylWord {
    let mut acc = WeylWord::identity(space.dim);
    for f in factors {
        acc = weyl_mul(space, &acc, &WeylWord::generator(f.clone()));
    }
    acc
}

/// Same reduction folding from the right; associativity of the twisted
/// product makes this agree with the left fold up to rounding.
pub fn weyl_normal_form_right(space: &SymplecticSpace, factors: &[Vec<f64>]) -> WeylWord {
    let mut acc = WeylWord::identity(space.dim);
    for f in factors.iter().rev() {
        acc = weyl_mul(space, &WeylWord::generator(f.clone()), &acc);
    }
    acc
}

/// Reduced group commutator W(f) W(h) W(f)^{-1} W(h)^{-1}; the exact value
/// is the central phase exp(-i sigma(f,h)) on the zero generator.
pub fn weyl_commutator(space: &SymplecticSpace, f: &[f64], h: &[f64]) -> WeylWord {
    let neg_f: Vec<f64> = f.iter().map(|x| -x).collect();
    let neg_h: Vec<f64> = h.iter().map(|x| -x).collect();
    weyl_normal_form(space, &[f.to_vec(), h.to_vec(), neg_f, neg_h])
}

/// Two-point form of a quasi-free state on a symplectic space.  The
/// antisymmetric part is pinned to i/2 sigma and the Hermitian part must be
/// positive semidefinite within tolerance.
#[derive(Debug, Clone)]
pub struct TwoPointForm {
    pub dim: usize,
    m: Vec<Complex64>,
}

impl TwoPointForm {
    pub fn new(space: &SymplecticSpace, m: Vec<Complex64>) -> Result<TwoPointForm, QuantumError> {
        let dim = space.dim;
        assert_eq!(m.len(), dim * dim);
        let mut defect = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let anti = m[i * dim + j] - m[j * dim + i];
                let want = c(0.0, space.sigma_entry(i, j));
                defect = defect.max((anti - want).norm());
            }
        }
        if defect > 1e-12 {
            return Err(QuantumError::FormMismatch { defect });
        }
        let mut herm = CMat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let h = 0.5 * (m[i * dim + j] + m[j * dim + i].conj());
                *herm.at_mut(i, j) = h;
            }
        }
        let (eigs, _) = hermitian_eig(&herm);
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(QuantumError::NotPositive { min_eig });
        }
        Ok(TwoPointForm { dim, m })
    }

    /// Ground state form of the standard harmonic oscillator family:
    /// 1/2 <f,h> + i/2 sigma(f,h) on standard coordinates.
    pub fn oscillator_vacuum(space: &SymplecticSpace) -> TwoPointForm {
        let dim = space.dim;
        let mut m = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let dot = if i == j { 0.5 } else { 0.0 };
                m[i * dim + j] = c(dot, 0.5 * space.sigma_entry(i, j));
            }
        }
        TwoPointForm { dim, m }
    }

    pub fn eval(&self, f: &[f64], h: &[f64]) -> Complex64 {
        assert_eq!(f.len(), self.dim);
        assert_eq!(h.len(), self.dim);
        let mut s = ZERO;
        for i in 0..self.dim {
            let mut row = ZERO;
            for j in 0..self.dim {
                row += self.m[i * self.dim + j] * h[j];
            }
            s += f[i] * row;
        }
        s
    }
}

/// Visit every perfect matching of {0..n-1} in lexicographic order: each
/// pair is (smaller, larger) and pairs are sorted by their first entry.
pub fn each_matching(n: usize, visit: &mut impl FnMut(&[(usize, usize)])) {
    assert!(n % 2 == 0, "matchings need an even number of points");
    fn rec(
        used: &mut [bool],
        pairs: &mut Vec<(usize, usize)>,
        visit: &mut impl FnMut(&[(usize, usize)]),
    ) {
        let i = match used.iter().position(|u| !u) {
            None => {
                visit(pairs);
                return;
            }
            Some(i) => i,
        };
        used[i] = true;
        for j in (i + 1)..used.len() {
            if !used[j] {
                used[j] = true;
                pairs.push((i, j));
                rec(used, pairs, visit);
                pairs.pop();
                used[j] = false;
            }
        }
        used[i] = false;
    }
    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    rec(&mut used, &mut pairs, visit);
}

/// Number of pair crossings: pairs (a,b) and (c,d) with a < c < b < d.
pub fn crossing_count(pairs: &[(usize, usize)]) -> usize {
    let mut crossings = 0;
    for (k, &(a, b)) in pairs.iter().enumerate() {
        for &(cc, d) in &pairs[k + 1..] {
            let (a, b, cc, d) = if a < cc { (a, b, cc, d) } else { (cc, d, a, b) };
            if a < cc && cc < b && b < d {
                crossings += 1;
            }
        }
    }
    crossings
}

/// Quasi-free n-point value from indexed pair values: zero for odd n, the
/// sum over ordered pairings otherwise.  With `signed` each matching picks
/// up (-1)^crossings; the default convention used throughout is unsigned.
pub fn quasifree_npoint_with(
    n: usize,
    pair_value: &impl Fn(usize, usize) -> Complex64,
    signed: bool,
) -> Complex64 {
    if n % 2 != 0 {
        return ZERO;
    }
    let mut total = ZERO;
    each_matching(n, &mut |pairs| {
        let mut prod = ONE;
        for &(i, j) in pairs {
            prod *= pair_value(i, j);
        }
        if signed && crossing_count(pairs) % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    });
    total
}

/// Quasi-free n-point function of the state with the given two-point form,
/// evaluated on a list of real test vectors.
pub fn quasifree_npoint(tp: &TwoPointForm, args: &[Vec<f64>]) -> Complex64 {
    quasifree_npoint_with(args.len(), &|i, j| tp.eval(&args[i], &args[j]), false)
}

/// Visit every set partition of {0..k-1}.  The visitor receives block ids
/// per element; ids are assigned in order of each block's smallest element.
/// Partitions are ordered lexicographically by their block list (blocks
/// sorted by smallest element, each block read as a sorted tuple), so the
/// partitions into pairs appear in exactly the order `each_matching` visits
/// them; the cumulant transform relies on that to cancel quasi-free moments
/// without rounding residue.
pub fn each_partition(k: usize, visit: &mut impl FnMut(&[usize])) {
    assert!(k > 0);
    const FREE: usize = usize::MAX;
    fn next_block(ids: &mut Vec<usize>, id: usize, visit: &mut impl FnMut(&[usize])) {
        let m = match ids.iter().position(|&a| a == FREE) {
            None => {
                visit(ids);
                return;
            }
            Some(m) => m,
        };
        ids[m] = id;
        extend(ids, id, m + 1, visit);
        ids[m] = FREE;
    }
    fn extend(ids: &mut Vec<usize>, id: usize, start: usize, visit: &mut impl FnMut(&[usize])) {
        next_block(ids, id + 1, visit);
        for e in start..ids.len() {
            if ids[e] == FREE {
                ids[e] = id;
                extend(ids, id, e + 1, visit);
                ids[e] = FREE;
            }
        }
    }
    let mut ids = vec![FREE; k];
    next_block(&mut ids, 0, visit);
}

const MAX_TRUNCATED_ORDER: usize = 8;

/// Cumulants of a moment table.  `moments[mask]` is the joint moment of the
/// arguments selected by `mask` (in increasing index order); the returned
/// table holds the truncated functions of the same index sets, obtained by
/// subtracting, for every partition into at least two blocks, the product of
/// the blocks' cumulants.
pub fn truncated_from_moments(
    n: usize,
    moments: &[Complex64],
) -> Result<Vec<Complex64>, QuantumError> {
    if n > MAX_TRUNCATED_ORDER {
        return Err(QuantumError::OrderTooLarge {
            n,
            max: MAX_TRUNCATED_ORDER,
        });
    }
    assert_eq!(moments.len(), 1 << n);
    let mut cum = vec![ZERO; 1 << n];
    for mask in 1usize..(1 << n) {
        let elems: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let k = elems.len();
        if k == 1 {
            cum[mask] = moments[mask];
            continue;
        }
        let mut sub = ZERO;
        each_partition(k, &mut |rgs| {
            let nblocks = rgs.iter().copied().max().unwrap() + 1;
            if nblocks == 1 {
                return;
            }
            let mut prod = ONE;
            for b in 0..nblocks {
                let mut bm = 0usize;
                for (i, &r) in rgs.iter().enumerate() {
                    if r == b {
                        bm |= 1 << elems[i];
                    }
                }
                prod *= cum[bm];
            }
            sub += prod;
        });
        cum[mask] = moments[mask] - sub;
    }
    Ok(cum)
}

/// Inverse transform: rebuild the moment table from a cumulant table by
/// summing block products over all partitions.
pub fn moments_from_truncated(
    n: usize,
    cumulants: &[Complex64],
) -> Result<Vec<Complex64>, QuantumError> {
    if n > MAX_TRUNCATED_ORDER {
        return Err(QuantumError::OrderTooLarge {
            n,
            max: MAX_TRUNCATED_ORDER,
        });
    }
    assert_eq!(cumulants.len(), 1 << n);
    let mut mom = vec![ZERO; 1 << n];
    for mask in 1usize..(1 << n) {
        let elems: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let k = elems.len();
        let mut total = ZERO;
        each_partition(k, &mut |rgs| {
            let nblocks = rgs.iter().copied().max().unwrap() + 1;
            let mut prod = ONE;
            for b in 0..nblocks {
                let mut bm = 0usize;
                for (i, &r) in rgs.iter().enumerate() {
                    if r == b {
                        bm |= 1 << elems[i];
                    }
                }
                prod *= cumulants[bm];
            }
            total += prod;
        });
        mom[mask] = total;
    }
    Ok(mom)
}

/// Diagnostics from the truncated harmonic oscillator realization of the
/// one-mode Weyl relations.
#[derive(Debug, Clone)]
pub struct OscillatorReport {
    /// Deviation of the finite-difference second derivative of the Weyl
    /// expectation from the closed-form two-point value.
    pub two_point_dev: f64,
    /// Deviation of the reduced group commutator from its central phase,
    /// measured on the low-lying matrix block.
    pub braiding_dev: f64,
    /// Occupation weight of the top levels of the displaced vacuum.
    pub tail: f64,
}

const OSCILLATOR_MIN_LEVELS: usize = 32;
const OSCILLATOR_TAIL_TOL: f64 = 1e-6;

/// Check the one-mode Weyl relations in a level-truncated oscillator
/// representation.  Weyl operators are matrix exponentials of i times the
/// field operator; the vacuum expectation of W(t1 f1) W(t2 f2) reproduces
/// the two-point form through a mixed second derivative at t = 0, and the
/// reduced group commutator reproduces the central braiding phase.
pub fn oscillator_weyl_check(
    levels: usize,
    fd_step: f64,
) -> Result<OscillatorReport, QuantumError> {
    if levels < OSCILLATOR_MIN_LEVELS {
        return Err(QuantumError::TruncationTooSmall { tail: f64::INFINITY });
    }
    // Displacements of a couple of photons keep the finite-difference and
    // braiding checks well conditioned; the truncation gate probes with a
    // deliberately larger displacement (18 photons on average) so that an
    // inadequate ladder is detected before any check runs.
    let f1 = [2.0, 1.2];
    let f2 = [-1.1, 2.1];
    let probe = [6.0, 0.0];

    let mut a = CMat::zeros(levels, levels);
    for k in 1..levels {
        *a.at_mut(k - 1, k) = cr((k as f64).sqrt());
    }
    let adag = a.adj();
    let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
    // q = (a + a*)/sqrt(2), p = i (a* - a)/sqrt(2).
    let q = a.add(&adag).scale(cr(inv_sqrt2));
    let p = adag.sub(&a).scale(c(0.0, inv_sqrt2));

    let weyl = |t: f64, f: &[f64; 2]| -> CMat {
        let phi = q.scale(cr(f[0])).add(&p.scale(cr(f[1])));
        phi.scale(c(0.0, t)).expm()
    };

    // Tail weight of the displaced vacua over the top eighth of the ladder.
    let mut tail = 0.0f64;
    for f in [&probe, &f1, &f2] {
        let w = weyl(1.0, f);
        let mut weight = 0.0;
        for k in (levels - levels / 8)..levels {
            weight += w.at(k, 0).norm_sqr();
        }
        tail = tail.max(weight);
    }
    if tail > OSCILLATOR_TAIL_TOL {
        return Err(QuantumError::TruncationTooSmall { tail });
    }

    let g = |t1: f64, t2: f64| -> Complex64 {
        let m = weyl(t1, &f1).mul(&weyl(t2, &f2));
        m.at(0, 0)
    };
    let s = fd_step;
    let mixed = (g(s, s) - g(s, -s) - g(-s, s) + g(-s, -s)) / cr(4.0 * s * s);
    let fd_two_point = -mixed;
    let space = SymplecticSpace::standard(1);
    let closed = c(
        0.5 * (f1[0] * f2[0] + f1[1] * f2[1]),
        0.5 * space.form(&f1, &f2),
    );
    let two_point_dev = (fd_two_point - closed).norm();

    // Reduced group commutator against its central phase, measured on the
    // low-lying block where truncation effects are negligible.
    let comm = weyl(1.0, &f1)
        .mul(&weyl(1.0, &f2))
        .mul(&weyl(-1.0, &f1))
        .mul(&weyl(-1.0, &f2));
    let target = Complex64::from_polar(1.0, -space.form(&f1, &f2));
    let block = levels / 4;
    let mut braiding_dev = 0.0f64;
    for i in 0..block {
        for j in 0..block {
            let want = if i == j { target } else { ZERO };
            braiding_dev = braiding_dev.max((comm.at(i, j) - want).norm());
        }
    }

    Ok(OscillatorReport {
        two_point_dev,
        braiding_dev,
        tail,
    })
}

/// Doubled fermionic test space C^m (+) C^m with Hermitian inner product,
/// the antilinear adjoint flip `plus` exchanging the summands, and the
/// antilinear charge conjugation `charge`.  Vectors are stored as 2m
/// components (first summand, then second).
#[derive(Debug, Clone)]
pub struct DoubledSpace {
    pub modes: usize,
}

impl DoubledSpace {
    pub fn new(modes: usize) -> DoubledSpace {
        assert!(modes > 0);
        DoubledSpace { modes }
    }

    pub fn dim(&self) -> usize {
        2 * self.modes
    }

    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        assert_eq!(f.len(), self.dim());
        assert_eq!(g.len(), self.dim());
        let mut s = ZERO;
        for i in 0..self.dim() {
            s += f[i].conj() * g[i];
        }
        s
    }

    /// Adjoint flip: (u, v) -> (conj v, conj u).  Involutive, antilinear,
    /// and (plus f, plus g) = conj (f, g).
    pub fn plus(&self, f: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.dim());
        let m = self.modes;
        let mut out = vec![ZERO; 2 * m];
        for j in 0..m {
            out[j] = f[m + j].conj();
            out[m + j] = f[j].conj();
        }
        out
    }

    /// Charge conjugation: (u, v) -> (i R conj v, i R conj u) with R the
    /// mode-reversal permutation.  Involutive, antilinear, and it
    /// anticommutes with the adjoint flip.
    pub fn charge(&self, f: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.dim());
        let m = self.modes;
        let i = c(0.0, 1.0);
        let mut out = vec![ZERO; 2 * m];
        for j in 0..m {
            let r = m - 1 - j;
            out[j] = i * f[m + r].conj();
            out[m + j] = i * f[r].conj();
        }
        out
    }

    /// Pairing entering the field anticommutator: S(f, g) = -i (f, g).
    pub fn s_form(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        c(0.0, -1.0) * self.inner(f, g)
    }

    /// Single-particle leg of the charge automorphism: f -> plus(charge f).
    pub fn charge_plus(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.plus(&self.charge(f))
    }
}

const MAX_FOCK_MODES: usize = 12;

/// Fermionic Fock representation of the self-dual CAR algebra over a
/// doubled space, with one Jordan-Wigner mode per summand pair.  Basis
/// states are bitmasks over modes; operators act directly on state vectors.
#[derive(Debug, Clone)]
pub struct CarFock {
    pub modes: usize,
    pub dim: usize,
}

pub fn car_fock(space: &DoubledSpace) -> Result<CarFock, QuantumError> {
    if space.modes > MAX_FOCK_MODES {
        return Err(QuantumError::DimTooLarge {
            modes: space.modes,
            max: MAX_FOCK_MODES,
        });
    }
    Ok(CarFock {
        modes: space.modes,
        dim: 1 << space.modes,
    })
}

impl CarFock {
    pub fn vacuum(&self) -> Vec<Complex64> {
        let mut v = vec![ZERO; self.dim];
        v[0] = ONE;
        v
    }

    /// Field operator B(f) applied to a state: the first-summand components
    /// of f multiply annihilators, the second-summand components multiply
    /// creators, with Jordan-Wigner signs from the lower modes.  B is
    /// complex linear and B(plus f) acts as the adjoint of B(f).
    pub fn apply_b(&self, f: &[Complex64], psi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(f.len(), 2 * self.modes);
        assert_eq!(psi.len(), self.dim);
        let mut out = vec![ZERO; self.dim];
        for j in 0..self.modes {
            let u = f[j];
            let v = f[self.modes + j];
            if u == ZERO && v == ZERO {
                continue;
            }
            let bit = 1usize << j;
            let low = bit - 1;
            for m in 0..self.dim {
                let amp = psi[m];
                if amp == ZERO {
                    continue;
                }
                let coeff = if m & bit != 0 { u } else { v };
                if coeff == ZERO {
                    continue;
                }
                let signed = if ((m & low).count_ones()) % 2 == 1 {
                    -coeff
                } else {
                    coeff
                };
                out[m ^ bit] += signed * amp;
            }
        }
        out
    }

    /// Adjoint field operator, realized through the adjoint flip.
    pub fn apply_b_dag(
        &self,
        space: &DoubledSpace,
        f: &[Complex64],
        psi: &[Complex64],
    ) -> Vec<Complex64> {
        self.apply_b(&space.plus(f), psi)
    }

    /// Annihilation smeared over the first summand: psi(v) = B((0, v)).
    pub fn apply_psi(&self, v: &[Complex64], psi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.modes);
        let mut f = vec![ZERO; 2 * self.modes];
        f[self.modes..].copy_from_slice(v);
        self.apply_b(&f, psi)
    }

    /// Creation smeared over the first summand: psi_plus(u) = B((u, 0))^*.
    pub fn apply_psi_plus(&self, u: &[Complex64], psi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(u.len(), self.modes);
        let mut f = vec![ZERO; 2 * self.modes];
        for (slot, x) in f[self.modes..].iter_mut().zip(u.iter()) {
            *slot = x.conj();
        }
        self.apply_b(&f, psi)
    }

    /// Charge automorphism on generators: B(f) -> B(plus(charge f)).
    pub fn apply_alpha_c_b(
        &self,
        space: &DoubledSpace,
        f: &[Complex64],
        psi: &[Complex64],
    ) -> Vec<Complex64> {
        self.apply_b(&space.charge_plus(f), psi)
    }
}

pub fn fock_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    let mut s = ZERO;
    for i in 0..a.len() {
        s += a[i].conj() * b[i];
    }
    s
}

pub fn fock_norm(a: &[Complex64]) -> f64 {
    let mut s = 0.0;
    for x in a {
        s += x.norm_sqr();
    }
    s.sqrt()
}
