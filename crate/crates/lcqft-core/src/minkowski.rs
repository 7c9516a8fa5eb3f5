//! Flat-space vacuum two-point machinery over Gaussian-polynomial test
//! functions, evaluated by mass-shell quadrature.
//!
//! Conventions, fixed once for the whole crate: Fourier transforms carry
//! `exp(-i k.x)`, the pairing `x.k` of a point and a covector is the plain
//! component sum, and superscript-plus objects are retarded (supported to
//! the future). With those choices the vacuum pairing reduces to
//!
//! ```text
//!   w2(f, h) = (2 pi)^-3  INT  fhat(l) hhat(-l)  d3k / (2 w_k),
//!   l = (w_k, k),   w_k = sqrt(|k|^2 + m^2),
//! ```
//!
//! an integral over the positive mass shell. The commutator pairing is the
//! odd part of the same shell measure, `e(f, h) = -i (w2(f, h) - w2(h, f))`,
//! which is exactly what the advanced-minus-retarded kernel reduces to under
//! the transform conventions above. The Gaussian-smoothed kernel extends the
//! base point into complex space.
//!
//! Every integral funnels through one Gauss-Hermite integrator whose node
//! placement is derived from the spatial width blocks of the specific term
//! pair being integrated. Extra on-shell multipliers (translation phases,
//! smoothing factors, the wave-operator symbol) never move the nodes, so two
//! evaluation paths that differ only in where a Gaussian multiplier is
//! applied give a genuine cross-check of both the quadrature and the term
//! algebra.

use crate::linalg::{c, cr, gauss_hermite, real_inv, sym_eig};
#[allow(unused_imports)]
use num_traits::Float;

use crate::Complex64;
use alloc::vec::Vec;
use core::fmt;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const TWO_PI: f64 = core::f64::consts::TAU;

/// Failures from test-function construction or shell quadrature.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldError {
    /// Mass must be strictly positive.
    BadMass { mass: f64 },
    /// A width matrix is not positive-definite (smallest eigenvalue shown).
    WidthNotPositive { min_eig: f64 },
    /// A test function needs at least one term.
    EmptyFunction,
    /// Sums require both operands to carry the same support flag.
    MixedSupportFlags,
    /// Smoothing index must be at least 1.
    BadSmoothingIndex,
    /// Node count outside the supported range.
    BadNodeCount { nodes: usize },
    /// Doubling the node count moved the result more than the tolerance.
    QuadratureNotConverged { delta: f64 },
    /// Hard half-space support is not an analytic object; complex-argument
    /// evaluation is only defined for unflagged functions.
    SupportFlagNotAnalytic,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::BadMass { mass } => write!(f, "mass must be positive, got {mass}"),
            FieldError::WidthNotPositive { min_eig } => {
                write!(f, "width matrix not positive-definite (min eigenvalue {min_eig})")
            }
            FieldError::EmptyFunction => write!(f, "test function has no terms"),
            FieldError::MixedSupportFlags => write!(f, "support flags differ"),
            FieldError::BadSmoothingIndex => write!(f, "smoothing index must be >= 1"),
            FieldError::BadNodeCount { nodes } => {
                write!(f, "nodes per axis must lie in [2, 150], got {nodes}")
            }
            FieldError::QuadratureNotConverged { delta } => {
                write!(f, "quadrature moved by {delta} under node doubling")
            }
            FieldError::SupportFlagNotAnalytic => {
                write!(f, "complex evaluation requires an unflagged function")
            }
        }
    }
}

/// Optional hard half-space support of the transform.
///
/// `PositiveL0` means the transform vanishes identically for `l0 < 0`,
/// `NegativeL0` for `l0 > 0`. The flag is an exact multiplicative cutoff,
/// not part of the Gaussian data, so statements like "positive-frequency
/// functions pair to zero with the vacuum" hold exactly rather than up to
/// quadrature error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfSpaceSupport {
    None,
    PositiveL0,
    NegativeL0,
}

impl HalfSpaceSupport {
    fn mirrored(self) -> HalfSpaceSupport {
        match self {
            HalfSpaceSupport::None => HalfSpaceSupport::None,
            HalfSpaceSupport::PositiveL0 => HalfSpaceSupport::NegativeL0,
            HalfSpaceSupport::NegativeL0 => HalfSpaceSupport::PositiveL0,
        }
    }
}

/// One Gaussian-polynomial term `P(l) exp(-(l-c)^T S (l-c))` of a transform.
///
/// `coeffs` lists monomials of `P` as (coefficient, exponents); exponents
/// apply to the absolute argument `l`, not to `l - c`. `width` is the
/// row-major 4x4 positive-definite matrix `S`.
#[derive(Debug, Clone)]
pub struct GaussianTerm {
    pub coeffs: Vec<(Complex64, [u8; 4])>,
    pub center: [f64; 4],
    pub width: [f64; 16],
}

impl GaussianTerm {
    fn poly(&self, l: &[f64; 4]) -> Complex64 {
        let mut acc = ZERO;
        for (a, e) in &self.coeffs {
            let mut m = 1.0f64;
            for d in 0..4 {
                for _ in 0..e[d] {
                    m *= l[d];
                }
            }
            acc += a * m;
        }
        acc
    }

    fn exponent(&self, l: &[f64; 4]) -> f64 {
        let mut q = 0.0;
        for i in 0..4 {
            let di = l[i] - self.center[i];
            for j in 0..4 {
                let dj = l[j] - self.center[j];
                q += di * self.width[4 * i + j] * dj;
            }
        }
        q
    }

    fn eval(&self, l: &[f64; 4]) -> Complex64 {
        self.poly(l) * (-self.exponent(l)).exp()
    }

    fn eval_complex(&self, l: &[Complex64; 4]) -> Complex64 {
        let mut p = ZERO;
        for (a, e) in &self.coeffs {
            let mut m = ONE;
            for d in 0..4 {
                for _ in 0..e[d] {
                    m *= l[d];
                }
            }
            p += a * m;
        }
        let mut q = ZERO;
        for i in 0..4 {
            let di = l[i] - cr(self.center[i]);
            for j in 0..4 {
                let dj = l[j] - cr(self.center[j]);
                q += di * cr(self.width[4 * i + j]) * dj;
            }
        }
        p * (-q).exp()
    }
}

/// A test function given directly by its Fourier transform: a finite sum of
/// Gaussian-polynomial terms, optionally cut off hard on a frequency
/// half-space.
#[derive(Debug, Clone)]
pub struct FourierTestFunction {
    terms: Vec<GaussianTerm>,
    support: HalfSpaceSupport,
}

impl FourierTestFunction {
    /// Validates that every width matrix is symmetric positive-definite.
    pub fn new(
        terms: Vec<GaussianTerm>,
        support: HalfSpaceSupport,
    ) -> Result<FourierTestFunction, FieldError> {
        if terms.is_empty() {
            return Err(FieldError::EmptyFunction);
        }
        for t in &terms {
            let mut sym = t.width;
            for i in 0..4 {
                for j in 0..4 {
                    sym[4 * i + j] = 0.5 * (t.width[4 * i + j] + t.width[4 * j + i]);
                }
            }
            let (eigs, _) = sym_eig(4, &sym);
            let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            if min_eig <= 1e-10 {
                return Err(FieldError::WidthNotPositive { min_eig });
            }
        }
        Ok(FourierTestFunction { terms, support })
    }

    /// Single pure Gaussian term with unit coefficient.
    pub fn gaussian(center: [f64; 4], width: [f64; 16]) -> Result<FourierTestFunction, FieldError> {
        FourierTestFunction::new(
            alloc::vec![GaussianTerm { coeffs: alloc::vec![(ONE, [0, 0, 0, 0])], center, width }],
            HalfSpaceSupport::None,
        )
    }

    pub fn support(&self) -> HalfSpaceSupport {
        self.support
    }

    /// Transform value at a real covector, support flag applied.
    pub fn transform(&self, l: &[f64; 4]) -> Complex64 {
        match self.support {
            HalfSpaceSupport::PositiveL0 if l[0] < 0.0 => return ZERO,
            HalfSpaceSupport::NegativeL0 if l[0] > 0.0 => return ZERO,
            _ => {}
        }
        let mut acc = ZERO;
        for t in &self.terms {
            acc += t.eval(l);
        }
        acc
    }

    /// Transform value at a complex covector. Only defined for unflagged
    /// functions; a hard half-space cutoff has no analytic continuation.
    pub fn transform_complex(&self, l: &[Complex64; 4]) -> Result<Complex64, FieldError> {
        if self.support != HalfSpaceSupport::None {
            return Err(FieldError::SupportFlagNotAnalytic);
        }
        let mut acc = ZERO;
        for t in &self.terms {
            acc += t.eval_complex(l);
        }
        Ok(acc)
    }

    /// The transform of the position-space complex conjugate: coefficients
    /// conjugate and pick up the monomial parity sign, centers reflect, and
    /// the support flag mirrors. Satisfies
    /// `conjugate().transform(l) == conj(transform(-l))` bit for bit.
    pub fn conjugate(&self) -> FourierTestFunction {
        let terms = self
            .terms
            .iter()
            .map(|t| GaussianTerm {
                coeffs: t
                    .coeffs
                    .iter()
                    .map(|(a, e)| {
                        let parity = (e[0] + e[1] + e[2] + e[3]) % 2;
                        let sgn = if parity == 1 { -1.0 } else { 1.0 };
                        (a.conj() * sgn, *e)
                    })
                    .collect(),
                center: [-t.center[0], -t.center[1], -t.center[2], -t.center[3]],
                width: t.width,
            })
            .collect();
        FourierTestFunction { terms, support: self.support.mirrored() }
    }

    /// The function `g` with `ghat(l) = fhat(-l)`.
    pub fn negate_argument(&self) -> FourierTestFunction {
        let terms = self
            .terms
            .iter()
            .map(|t| GaussianTerm {
                coeffs: t
                    .coeffs
                    .iter()
                    .map(|(a, e)| {
                        let parity = (e[0] + e[1] + e[2] + e[3]) % 2;
                        let sgn = if parity == 1 { -1.0 } else { 1.0 };
                        (a * sgn, *e)
                    })
                    .collect(),
                center: [-t.center[0], -t.center[1], -t.center[2], -t.center[3]],
                width: t.width,
            })
            .collect();
        FourierTestFunction { terms, support: self.support.mirrored() }
    }

    /// Termwise sum. Both operands must carry the same support flag.
    pub fn sum(&self, other: &FourierTestFunction) -> Result<FourierTestFunction, FieldError> {
        if self.support != other.support {
            return Err(FieldError::MixedSupportFlags);
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(FourierTestFunction { terms, support: self.support })
    }

    /// The symmetric part `(f + conjugate(f))`: a real-valued position-space
    /// function (its transform satisfies `fhat(-l) = conj(fhat(l))`).
    pub fn realized(&self) -> FourierTestFunction {
        let conj = self.conjugate();
        let mut terms = self.terms.clone();
        terms.extend(conj.terms);
        FourierTestFunction { terms, support: HalfSpaceSupport::None }
    }

    /// Multiplies the transform by the Klein-Gordon symbol
    /// `m^2 - l0^2 + l1^2 + l2^2 + l3^2`, which vanishes on the mass shell.
    pub fn kg_image(&self, p: &KGParams) -> FourierTestFunction {
        let quad: [(f64, [u8; 4]); 5] = [
            (p.mass * p.mass, [0, 0, 0, 0]),
            (-1.0, [2, 0, 0, 0]),
            (1.0, [0, 2, 0, 0]),
            (1.0, [0, 0, 2, 0]),
            (1.0, [0, 0, 0, 2]),
        ];
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut coeffs = Vec::with_capacity(t.coeffs.len() * 5);
                for (a, e) in &t.coeffs {
                    for (qc, qe) in &quad {
                        coeffs.push((
                            a * *qc,
                            [e[0] + qe[0], e[1] + qe[1], e[2] + qe[2], e[3] + qe[3]],
                        ));
                    }
                }
                GaussianTerm { coeffs, center: t.center, width: t.width }
            })
            .collect();
        FourierTestFunction { terms, support: self.support }
    }

    /// Folds the Gaussian multiplier `exp(-|l|^2 / (4 n^2))` (Euclidean
    /// 4-norm) into the term data: widths gain `I/(4n^2)`, centers move to
    /// `S'^-1 S c`, and the completed-square constant scales the
    /// coefficients. This is the transform of the heat-kernel smoothing at
    /// index `n` applied in position space.
    pub fn smoothed(&self, n: u32) -> Result<FourierTestFunction, FieldError> {
        if n == 0 {
            return Err(FieldError::BadSmoothingIndex);
        }
        let d = 1.0 / (4.0 * (n as f64) * (n as f64));
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut wprime = t.width;
            for i in 0..4 {
                wprime[4 * i + i] += d;
            }
            // S' c' = S c, solved with the dense inverse; S' is PD so this
            // never fails for validated inputs.
            let (_, winv) = real_inv(4, &wprime).ok_or(FieldError::WidthNotPositive {
                min_eig: 0.0,
            })?;
            let mut sc = [0.0f64; 4];
            for i in 0..4 {
                for j in 0..4 {
                    sc[i] += t.width[4 * i + j] * t.center[j];
                }
            }
            let mut cprime = [0.0f64; 4];
            for i in 0..4 {
                for j in 0..4 {
                    cprime[i] += winv[4 * i + j] * sc[j];
                }
            }
            let mut q_old = 0.0;
            let mut q_new = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    q_old += t.center[i] * t.width[4 * i + j] * t.center[j];
                    q_new += cprime[i] * wprime[4 * i + j] * cprime[j];
                }
            }
            let scale = (-(q_old - q_new)).exp();
            terms.push(GaussianTerm {
                coeffs: t.coeffs.iter().map(|(a, e)| (a * scale, *e)).collect(),
                center: cprime,
                width: wprime,
            });
        }
        Ok(FourierTestFunction { terms, support: self.support })
    }

    /// Whether the transform vanishes identically on the positive mass
    /// shell (where `l0 > 0` always holds).
    fn dead_on_shell(&self) -> bool {
        self.support == HalfSpaceSupport::NegativeL0
    }
}

/// Klein-Gordon parameters. The curvature coupling is recorded but inert in
/// flat space (scalar curvature vanishes identically).
#[derive(Debug, Clone, Copy)]
pub struct KGParams {
    pub mass: f64,
    pub xi: f64,
}

impl KGParams {
    pub fn new(mass: f64, xi: f64) -> Result<KGParams, FieldError> {
        if !(mass > 0.0) {
            return Err(FieldError::BadMass { mass });
        }
        Ok(KGParams { mass, xi })
    }
}

/// Shell-quadrature configuration: Gauss-Hermite nodes per spatial axis,
/// and the relative tolerance for the node-doubling stability check every
/// public pairing runs internally.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub nodes: usize,
    pub rel_tol: f64,
}

impl QuadratureConfig {
    pub fn new(nodes: usize, rel_tol: f64) -> Result<QuadratureConfig, FieldError> {
        // Above ~150 nodes the raw Hermite weights underflow before the
        // exp(y^2) refold, so the doubled run would lose its extreme nodes.
        if !(2..=150).contains(&nodes) {
            return Err(FieldError::BadNodeCount { nodes });
        }
        Ok(QuadratureConfig { nodes, rel_tol })
    }
}

impl Default for QuadratureConfig {
    fn default() -> QuadratureConfig {
        QuadratureConfig { nodes: 40, rel_tol: 1e-7 }
    }
}

/// Gauss-Hermite nodes with the weight refolded for plain integrals:
/// `INT g(y) dy ~= sum_i wh_i g(y_i)` with `wh_i = w_i exp(y_i^2)`.
fn gh_plain(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (y, w) = gauss_hermite(n);
    let wh = y.iter().zip(&w).map(|(y, w)| w * (y * y).exp()).collect();
    (y, wh)
}

/// Spatial substitution for one term pair: `k = mu + A y` with
/// `A = W^{-1/2}`, `W` the sum of the spatial width blocks and `mu` the
/// stationary point of the combined spatial quadratic. Returns
/// `(mu, A, det A)`.
fn spatial_substitution(terms: &[&GaussianTerm]) -> ([f64; 3], [[f64; 3]; 3], f64) {
    let mut w = [0.0f64; 9];
    let mut rhs = [0.0f64; 3];
    for t in terms {
        for i in 0..3 {
            for j in 0..3 {
                w[3 * i + j] += t.width[4 * (i + 1) + (j + 1)];
            }
            for j in 0..3 {
                rhs[i] += t.width[4 * (i + 1) + (j + 1)] * t.center[j + 1];
            }
        }
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let v = 0.5 * (w[3 * i + j] + w[3 * j + i]);
            w[3 * i + j] = v;
            w[3 * j + i] = v;
        }
    }
    let (_, winv) = real_inv(3, &w).expect("sum of positive-definite blocks is invertible");
    let mut mu = [0.0f64; 3];
    for i in 0..3 {
        for j in 0..3 {
            mu[i] += winv[3 * i + j] * rhs[j];
        }
    }
    let (eigs, vecs) = sym_eig(3, &w);
    let mut a = [[0.0f64; 3]; 3];
    let mut det_a = 1.0;
    for e in 0..3 {
        let inv_sqrt = 1.0 / eigs[e].sqrt();
        det_a *= inv_sqrt;
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += vecs[3 * i + e] * inv_sqrt * vecs[3 * j + e];
            }
        }
    }
    (mu, a, det_a)
}

/// Core shell integrator:
/// `INT a(l) [b(l)] extra(l, w) d3k / (2 w)` over the positive mass shell
/// `l = (w, k)`, decomposed into term pairs, each with its own matched
/// Gauss-Hermite substitution.
fn shell_integral<F>(
    a: &FourierTestFunction,
    b: Option<&FourierTestFunction>,
    mass: f64,
    nodes: usize,
    extra: &F,
) -> Complex64
where
    F: Fn(&[f64; 4], f64) -> Complex64,
{
    if a.dead_on_shell() || b.map(|b| b.dead_on_shell()).unwrap_or(false) {
        return ZERO;
    }
    let (y, wh) = gh_plain(nodes);
    let m2 = mass * mass;
    let mut total = ZERO;
    let b_terms: Vec<Option<&GaussianTerm>> = match b {
        Some(b) => b.terms.iter().map(Some).collect(),
        None => alloc::vec![None],
    };
    for ta in &a.terms {
        for tb in &b_terms {
            let mut stack: Vec<&GaussianTerm> = alloc::vec![ta];
            if let Some(tb) = tb {
                stack.push(tb);
            }
            let (mu, amat, det_a) = spatial_substitution(&stack);
            let mut acc = ZERO;
            for i in 0..nodes {
                for j in 0..nodes {
                    for k in 0..nodes {
                        let yv = [y[i], y[j], y[k]];
                        let mut kv = [0.0f64; 3];
                        for d in 0..3 {
                            kv[d] = mu[d]
                                + amat[d][0] * yv[0]
                                + amat[d][1] * yv[1]
                                + amat[d][2] * yv[2];
                        }
                        let omega =
                            (m2 + kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2]).sqrt();
                        let l = [omega, kv[0], kv[1], kv[2]];
                        let mut val = ta.eval(&l);
                        if let Some(tb) = tb {
                            val *= tb.eval(&l);
                        }
                        val *= extra(&l, omega) * (0.5 / omega);
                        acc += val * (wh[i] * wh[j] * wh[k]);
                    }
                }
            }
            total += acc * det_a;
        }
    }
    total
}

/// Runs an integral at the configured node count and at double that count;
/// errors if the two disagree beyond the relative tolerance, else returns
/// the finer value.
fn converged<G>(q: &QuadratureConfig, eval: G) -> Result<Complex64, FieldError>
where
    G: Fn(usize) -> Complex64,
{
    let coarse = eval(q.nodes);
    let fine = eval(2 * q.nodes);
    let delta = (coarse - fine).norm();
    if delta > q.rel_tol * fine.norm().max(1.0) {
        return Err(FieldError::QuadratureNotConverged { delta });
    }
    Ok(fine)
}

/// Vacuum two-point pairing
/// `w2(f, h) = (2 pi)^-3 INT fhat(l) hhat(-l) d3k / (2 w_k)`.
///
/// For a position-space real `f`, `w2(conjugate(f), f)` accumulates
/// `|fhat(-l)|^2` termwise and is nonnegative node by node; it vanishes
/// identically exactly when the transform is supported in `l0 >= 0`.
pub fn vacuum_two_point(
    f: &FourierTestFunction,
    h: &FourierTestFunction,
    p: &KGParams,
    q: &QuadratureConfig,
) -> Result<Complex64, FieldError> {
    let hneg = h.negate_argument();
    let norm = 1.0 / (TWO_PI * TWO_PI * TWO_PI);
    converged(q, |n| shell_integral(f, Some(&hneg), p.mass, n, &|_, _| ONE) * norm)
}

/// Advanced-minus-retarded pairing, obtained as the odd part of the shell
/// measure: `e(f, h) = -i (w2(f, h) - w2(h, f))`. Antisymmetric by
/// construction; real for position-space real arguments.
pub fn commutator_pairing(
    f: &FourierTestFunction,
    h: &FourierTestFunction,
    p: &KGParams,
    q: &QuadratureConfig,
) -> Result<Complex64, FieldError> {
    let fh = vacuum_two_point(f, h, p, q)?;
    let hf = vacuum_two_point(h, f, p, q)?;
    Ok(c(0.0, -1.0) * (fh - hf))
}

/// Gaussian-smoothed two-point kernel at a complex base point:
///
/// ```text
///   2 pi INT exp(-i x.eta) exp(-|eta|^2 / (4 n^2)) fhat(-eta) d3k / (2 eta0)
/// ```
///
/// over the positive shell, `|eta|^2` the Euclidean 4-norm. As a finite
/// quadrature sum this is an entire function of `x`, which the
/// Cauchy-Riemann checks exploit: their finite-difference residuals see
/// pure truncation error, no quadrature noise.
pub fn smoothed_two_point(
    x: &[Complex64; 4],
    n: u32,
    f: &FourierTestFunction,
    p: &KGParams,
    q: &QuadratureConfig,
) -> Result<Complex64, FieldError> {
    if n == 0 {
        return Err(FieldError::BadSmoothingIndex);
    }
    let fneg = f.negate_argument();
    let inv4n2 = 1.0 / (4.0 * (n as f64) * (n as f64));
    let xl = *x;
    converged(q, |nodes| {
        shell_integral(&fneg, None, p.mass, nodes, &|l, _| {
            let phase = xl[0] * l[0] + xl[1] * l[1] + xl[2] * l[2] + xl[3] * l[3];
            let norm4 = l[0] * l[0] + l[1] * l[1] + l[2] * l[2] + l[3] * l[3];
            (c(0.0, -1.0) * phase).exp() * (-norm4 * inv4n2).exp()
        }) * TWO_PI
    })
}

/// Same kernel with the Gaussian multiplier folded algebraically into the
/// term data (`smoothed`) instead of applied node-wise. The node placement
/// differs between the two paths, so agreement checks both the completion
/// of the square and the quadrature.
pub fn smoothed_two_point_multiplier_path(
    x: &[Complex64; 4],
    n: u32,
    f: &FourierTestFunction,
    p: &KGParams,
    q: &QuadratureConfig,
) -> Result<Complex64, FieldError> {
    let g = f.smoothed(n)?;
    let gneg = g.negate_argument();
    let xl = *x;
    converged(q, |nodes| {
        shell_integral(&gneg, None, p.mass, nodes, &|l, _| {
            let phase = xl[0] * l[0] + xl[1] * l[1] + xl[2] * l[2] + xl[3] * l[3];
            (c(0.0, -1.0) * phase).exp()
        }) * TWO_PI
    })
}

/// The smoothed kernel with the wave-operator symbol `m^2 - l0^2 + |lvec|^2`
/// attached, which vanishes on the shell up to floating-point cancellation.
/// Applying the d'Alembertian plus mass to the smoothed kernel therefore
/// returns zero to roughly machine precision relative to the kernel scale.
pub fn smoothed_wave_residual(
    x: &[Complex64; 4],
    n: u32,
    f: &FourierTestFunction,
    p: &KGParams,
    q: &QuadratureConfig,
) -> Result<Complex64, FieldError> {
    if n == 0 {
        return Err(FieldError::BadSmoothingIndex);
    }
    let fneg = f.negate_argument();
    let inv4n2 = 1.0 / (4.0 * (n as f64) * (n as f64));
    let m2 = p.mass * p.mass;
    let xl = *x;
    // No doubling check here: the value is a pure cancellation residue, so
    // "relative stability" is meaningless; callers compare against the
    // kernel scale instead.
    let nodes = q.nodes;
    Ok(shell_integral(&fneg, None, p.mass, nodes, &|l, _| {
        let phase = xl[0] * l[0] + xl[1] * l[1] + xl[2] * l[2] + xl[3] * l[3];
        let norm4 = l[0] * l[0] + l[1] * l[1] + l[2] * l[2] + l[3] * l[3];
        let spatial = l[1] * l[1] + l[2] * l[2] + l[3] * l[3];
        let symbol = m2 - l[0] * l[0] + spatial;
        (c(0.0, -1.0) * phase).exp() * (-norm4 * inv4n2).exp() * symbol
    }) * TWO_PI)
}
