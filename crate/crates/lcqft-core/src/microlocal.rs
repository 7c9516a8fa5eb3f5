//! Microlocal cone machinery: covector classification, membership in the
//! momentum-flow cones that bound wavefront sets of n-point functions, the
//! two-point Hadamard template, and a windowed-transform decay scan that
//! estimates wavefront directions of closed-form test distributions.
//!
//! Cone membership is decided by linear-programming feasibility. A
//! configuration of points and covectors lies in the n-th cone when
//! future-causal momenta `p_ij` (one per ordered pair `i < j`) satisfy the
//! flow equations
//!
//! ```text
//!   xi_i = sum_{j > i} p_ij - sum_{j < i} p_ji,
//! ```
//!
//! where a momentum between distinct points must be proportional to the
//! lowered null direction connecting them (no connecting null geodesic, no
//! momentum), and a momentum at coincident points ranges over the closed
//! future cone. The future cone enters as the conic hull of finitely many
//! null generators (a Fibonacci sphere plus the time axis), augmented with
//! the future-causal vectors formed from the input covectors themselves so
//! that exact certificates on the cone boundary are never lost to the
//! polyhedral approximation. Feasibility certificates are re-verified
//! against the flow equations before a membership verdict is returned.

use crate::linalg::{c, cr, gauss_legendre, real_inv, simplex_feasible, Feasibility};
#[allow(unused_imports)]
use num_traits::Float;

use crate::Complex64;
use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const TWO_PI: f64 = core::f64::consts::TAU;

/// Failures from cone queries or windowed scans.
#[derive(Debug, Clone, PartialEq)]
pub enum MicrolocalError {
    /// Cone membership is implemented for 1 to 4 points.
    BadDimension { n: usize },
    /// Point and covector lists must have equal length.
    MismatchedLengths { points: usize, covectors: usize },
    /// Pullback by a non-invertible map.
    SingularMap { det: f64 },
    /// A feasibility certificate failed its exact re-verification.
    CertificateInvalid { residual: f64 },
    /// Scan window matrix is not positive-definite.
    BadWindow { min_eig: f64 },
    /// A quadratic form needed by a closed-form transform is degenerate.
    DegenerateQuadratic { det: f64 },
    /// Scans need at least two magnitudes and one direction.
    BadScanGrid,
}

impl fmt::Display for MicrolocalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MicrolocalError::BadDimension { n } => {
                write!(f, "cone membership supports 1..=4 points, got {n}")
            }
            MicrolocalError::MismatchedLengths { points, covectors } => {
                write!(f, "{points} points but {covectors} covectors")
            }
            MicrolocalError::SingularMap { det } => {
                write!(f, "pullback map is singular (det {det})")
            }
            MicrolocalError::CertificateInvalid { residual } => {
                write!(f, "feasibility certificate failed re-verification ({residual})")
            }
            MicrolocalError::BadWindow { min_eig } => {
                write!(f, "window matrix not positive-definite (min eigenvalue {min_eig})")
            }
            MicrolocalError::DegenerateQuadratic { det } => {
                write!(f, "quadratic form degenerate (det {det})")
            }
            MicrolocalError::BadScanGrid => write!(f, "scan needs >= 2 magnitudes and a direction"),
        }
    }
}

/// Causal type of a covector under the mostly-minus metric, `q = xi_0^2 -
/// |xi_vec|^2`, with "future" meaning positive time component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovectorClass {
    Zero,
    NullFuture,
    NullPast,
    TimelikeFuture,
    TimelikePast,
    Spacelike,
}

/// Classifies scale-invariantly: `|q| <= tol * |xi|^2` counts as null.
pub fn classify_covector(xi: &[f64; 4], tol: f64) -> CovectorClass {
    let n2: f64 = xi.iter().map(|v| v * v).sum();
    if n2 == 0.0 {
        return CovectorClass::Zero;
    }
    let q = xi[0] * xi[0] - xi[1] * xi[1] - xi[2] * xi[2] - xi[3] * xi[3];
    if q.abs() <= tol * n2 {
        if xi[0] > 0.0 {
            CovectorClass::NullFuture
        } else if xi[0] < 0.0 {
            CovectorClass::NullPast
        } else {
            CovectorClass::Spacelike
        }
    } else if q > 0.0 {
        if xi[0] > 0.0 {
            CovectorClass::TimelikeFuture
        } else {
            CovectorClass::TimelikePast
        }
    } else {
        CovectorClass::Spacelike
    }
}

/// A configuration of base points with covectors attached.
#[derive(Debug, Clone)]
pub struct ConeConfig {
    pub points: Vec<[f64; 4]>,
    pub covectors: Vec<[f64; 4]>,
}

/// Reading of the one-point cone: `Empty` admits nothing off the zero
/// section, `FutureCone` admits future-causal covectors (a self-momentum).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaOneReading {
    Empty,
    FutureCone,
}

/// Options for cone membership.
#[derive(Debug, Clone, Copy)]
pub struct GammaOptions {
    pub reading: GammaOneReading,
    /// Null generators on the Fibonacci sphere for coincident-point momenta.
    pub null_generators: usize,
    /// Relative tolerance for null/coincidence decisions.
    pub tol: f64,
}

impl Default for GammaOptions {
    fn default() -> GammaOptions {
        GammaOptions { reading: GammaOneReading::Empty, null_generators: 64, tol: 1e-9 }
    }
}

/// Verdict of a cone membership query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeVerdict {
    Member,
    NotMember,
    /// Every covector vanishes; the zero section is reported separately
    /// rather than counted as a member.
    ZeroSection,
}

fn fibonacci_nulls(count: usize) -> Vec<[f64; 4]> {
    let golden = core::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [1.0, r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

fn sub4(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

fn max_abs4(v: &[f64; 4]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// The lowered connecting direction of a null separation, future-directed.
fn null_link_generator(dx: &[f64; 4]) -> [f64; 4] {
    let s = if dx[0] >= 0.0 { 1.0 } else { -1.0 };
    let g = [s * dx[0], -s * dx[1], -s * dx[2], -s * dx[3]];
    let n = max_abs4(&g);
    [g[0] / n, g[1] / n, g[2] / n, g[3] / n]
}

/// Membership of a point-covector configuration in the n-th momentum-flow
/// cone. Returns `ZeroSection` when every covector vanishes.
pub fn in_gamma_n(cfg: &ConeConfig, opts: &GammaOptions) -> Result<ConeVerdict, MicrolocalError> {
    let n = cfg.points.len();
    if cfg.covectors.len() != n {
        return Err(MicrolocalError::MismatchedLengths {
            points: n,
            covectors: cfg.covectors.len(),
        });
    }
    if n == 0 || n > 4 {
        return Err(MicrolocalError::BadDimension { n });
    }
    let scale = cfg.covectors.iter().map(max_abs4).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Ok(ConeVerdict::ZeroSection);
    }
    if n == 1 {
        return Ok(match opts.reading {
            GammaOneReading::Empty => ConeVerdict::NotMember,
            GammaOneReading::FutureCone => match classify_covector(&cfg.covectors[0], opts.tol) {
                CovectorClass::TimelikeFuture | CovectorClass::NullFuture => ConeVerdict::Member,
                _ => ConeVerdict::NotMember,
            },
        });
    }

    let xi: Vec<[f64; 4]> = cfg
        .covectors
        .iter()
        .map(|v| [v[0] / scale, v[1] / scale, v[2] / scale, v[3] / scale])
        .collect();

    // Shared generator pool for coincident pairs: polyhedral null cone,
    // the time axis, and every future-causal combination of the inputs.
    let mut pool = fibonacci_nulls(opts.null_generators);
    pool.push([1.0, 0.0, 0.0, 0.0]);
    let mut candidates: Vec<[f64; 4]> = Vec::new();
    for v in &xi {
        candidates.push(*v);
        candidates.push([-v[0], -v[1], -v[2], -v[3]]);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut w = [0.0f64; 4];
                for d in 0..4 {
                    w[d] = si * xi[i][d] + sj * xi[j][d];
                }
                candidates.push(w);
            }
        }
    }
    for w in candidates {
        let nrm = max_abs4(&w);
        if nrm <= 1e-14 {
            continue;
        }
        let u = [w[0] / nrm, w[1] / nrm, w[2] / nrm, w[3] / nrm];
        match classify_covector(&u, 1e-12) {
            CovectorClass::TimelikeFuture | CovectorClass::NullFuture => pool.push(u),
            _ => {}
        }
    }

    // Column layout: for each pair i < j, a block of generators.
    let coord_scale = cfg.points.iter().map(max_abs4).fold(1.0f64, f64::max);
    let mut columns: Vec<(usize, usize, [f64; 4])> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = sub4(&cfg.points[j], &cfg.points[i]);
            let sep = max_abs4(&dx);
            if sep <= 1e-12 * coord_scale {
                for g in &pool {
                    columns.push((i, j, *g));
                }
            } else {
                let q = dx[0] * dx[0] - dx[1] * dx[1] - dx[2] * dx[2] - dx[3] * dx[3];
                let n2: f64 = dx.iter().map(|v| v * v).sum();
                if q.abs() <= opts.tol * n2 && dx[0] != 0.0 {
                    columns.push((i, j, null_link_generator(&dx)));
                }
                // Non-null separation: no connecting geodesic, no momentum.
            }
        }
    }

    let rows = 4 * n;
    let ncols = columns.len();
    let mut b = vec![0.0f64; rows];
    for i in 0..n {
        for mu in 0..4 {
            b[4 * i + mu] = xi[i][mu];
        }
    }
    if ncols == 0 {
        return Ok(ConeVerdict::NotMember);
    }
    let mut a = vec![0.0f64; rows * ncols];
    for (col, (i, j, g)) in columns.iter().enumerate() {
        for mu in 0..4 {
            a[(4 * i + mu) * ncols + col] = g[mu];
            a[(4 * j + mu) * ncols + col] = -g[mu];
        }
    }
    match simplex_feasible(rows, ncols, &a, &b, 1e-9) {
        Feasibility::Infeasible { .. } => Ok(ConeVerdict::NotMember),
        Feasibility::Feasible(lambda) => {
            // Re-verify the certificate against the flow equations.
            let mut flow = vec![0.0f64; rows];
            for (col, (i, j, g)) in columns.iter().enumerate() {
                let l = lambda[col];
                for mu in 0..4 {
                    flow[4 * i + mu] += l * g[mu];
                    flow[4 * j + mu] -= l * g[mu];
                }
            }
            let mut residual = 0.0f64;
            for r in 0..rows {
                residual = residual.max((flow[r] - b[r]).abs());
            }
            if residual > 1e-8 {
                return Err(MicrolocalError::CertificateInvalid { residual });
            }
            for l in &lambda {
                if *l < -1e-12 {
                    return Err(MicrolocalError::CertificateInvalid { residual: -*l });
                }
            }
            Ok(ConeVerdict::Member)
        }
    }
}

/// Membership in the two-point Hadamard wavefront template: `xi` past null
/// at `x`, `xi2` future null at `y`, equal and opposite after transport,
/// and aligned with the connecting null direction when the points differ.
pub fn in_hadamard_set(
    x: &[f64; 4],
    xi: &[f64; 4],
    y: &[f64; 4],
    xi2: &[f64; 4],
    tol: f64,
) -> bool {
    if classify_covector(xi, tol) != CovectorClass::NullPast {
        return false;
    }
    if classify_covector(xi2, tol) != CovectorClass::NullFuture {
        return false;
    }
    let scale = max_abs4(xi).max(max_abs4(xi2));
    let opposite = (0..4).all(|d| (xi[d] + xi2[d]).abs() <= tol * scale);
    if !opposite {
        return false;
    }
    let dx = sub4(y, x);
    let sep = max_abs4(&dx);
    let coord_scale = max_abs4(x).max(max_abs4(y)).max(1.0);
    if sep <= 1e-12 * coord_scale {
        return true;
    }
    let q = dx[0] * dx[0] - dx[1] * dx[1] - dx[2] * dx[2] - dx[3] * dx[3];
    let n2: f64 = dx.iter().map(|v| v * v).sum();
    if q.abs() > tol * n2 || dx[0] == 0.0 {
        return false;
    }
    let g = null_link_generator(&dx);
    // xi2 must be a positive multiple of the connecting direction.
    let gg: f64 = g.iter().map(|v| v * v).sum();
    let s: f64 = (0..4).map(|d| xi2[d] * g[d]).sum::<f64>() / gg;
    if s <= 0.0 {
        return false;
    }
    (0..4).all(|d| (xi2[d] - s * g[d]).abs() <= tol * scale)
}

/// The cone configuration probed by a two-point Hadamard pair: the
/// wavefront convention attaches the negated covectors to the two slots.
pub fn hadamard_to_cone_config(
    x: &[f64; 4],
    xi: &[f64; 4],
    y: &[f64; 4],
    xi2: &[f64; 4],
) -> ConeConfig {
    ConeConfig {
        points: vec![*x, *y],
        covectors: vec![
            [-xi[0], -xi[1], -xi[2], -xi[3]],
            [-xi2[0], -xi2[1], -xi2[2], -xi2[3]],
        ],
    }
}

/// Distributions with closed-form (or one-dimensional semi-analytic)
/// windowed transforms, for exercising the decay scan.
#[derive(Debug, Clone)]
pub enum TestDistribution {
    /// `u(y) = exp(-1/2 y^T U y)` with `U` symmetric positive-definite.
    Gaussian { quad: [f64; 16] },
    /// Dirac mass at the origin.
    DeltaOrigin,
    /// `u(y) = theta(y^0) exp(-1/2 |y|^2)`: a jump across `{y^0 = 0}`.
    HeavisideGaussian,
    /// Line measure `f |-> INT f(s d) ds` along a direction through 0.
    DeltaLine { dir: [f64; 4] },
    /// `u(y) = inner(map y)`, evaluated exactly via the window transform
    /// rule: value = |det map|^-1 inner(map x, map^-T Q map^-1, map^-T xi).
    LinearPullback { map: [f64; 16], inner: Box<TestDistribution> },
}

fn mat4_apply(m: &[f64; 16], v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0f64; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i] += m[4 * i + j] * v[j];
        }
    }
    out
}

fn quad_form(m: &[f64; 16], a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += a[i] * m[4 * i + j] * b[j];
        }
    }
    acc
}

/// `(2 pi)^2 / sqrt(det M) * exp(1/2 b^T M^-1 b)` for real SPD `M` and
/// complex `b = br + i bi`, the 4-dimensional Gaussian-linear integral.
fn gaussian_integral_4d(
    m: &[f64; 16],
    br: &[f64; 4],
    bi: &[f64; 4],
) -> Result<Complex64, MicrolocalError> {
    let (det, minv) = real_inv(4, m).ok_or(MicrolocalError::DegenerateQuadratic { det: 0.0 })?;
    if det <= 0.0 {
        return Err(MicrolocalError::DegenerateQuadratic { det });
    }
    let minv: [f64; 16] = core::array::from_fn(|k| minv[k]);
    let re = 0.5 * (quad_form(&minv, br, br) - quad_form(&minv, bi, bi));
    let im = quad_form(&minv, br, bi);
    let pref = TWO_PI * TWO_PI / det.sqrt();
    Ok(c(re, im).exp() * pref)
}

/// Windowed transform `INT u(y) exp(-1/2 (y-x)^T Q (y-x)) exp(-i xi.y) dy`.
pub fn windowed_value(
    u: &TestDistribution,
    x: &[f64; 4],
    q: &[f64; 16],
    xi: &[f64; 4],
) -> Result<Complex64, MicrolocalError> {
    let qx = mat4_apply(q, x);
    let window_const = (-0.5 * quad_form(q, x, x)).exp();
    match u {
        TestDistribution::Gaussian { quad } => {
            let mut m = [0.0f64; 16];
            for k in 0..16 {
                m[k] = quad[k] + q[k];
            }
            let bi = [-xi[0], -xi[1], -xi[2], -xi[3]];
            Ok(gaussian_integral_4d(&m, &qx, &bi)? * window_const)
        }
        TestDistribution::DeltaOrigin => Ok(cr(window_const)),
        TestDistribution::DeltaLine { dir } => {
            let a = quad_form(q, dir, dir);
            if a <= 0.0 {
                return Err(MicrolocalError::DegenerateQuadratic { det: a });
            }
            let br: f64 = (0..4).map(|d| dir[d] * qx[d]).sum();
            let bimag: f64 = -(0..4).map(|d| dir[d] * xi[d]).sum::<f64>();
            // INT exp(-1/2 a s^2 + beta s) ds = sqrt(2 pi / a) exp(beta^2 / 2a)
            let b2 = c(br * br - bimag * bimag, 2.0 * br * bimag);
            Ok((b2 / (2.0 * a)).exp() * ((TWO_PI / a).sqrt() * window_const))
        }
        TestDistribution::HeavisideGaussian => {
            // Exponent -1/2 y^T M y + b.y with M = I + Q, b = Qx - i xi;
            // spatial directions integrate in closed form per time value,
            // the time integral runs over [0, span] by panelled quadrature.
            let mut m = [0.0f64; 16];
            for k in 0..16 {
                m[k] = q[k];
            }
            for d in 0..4 {
                m[4 * d + d] += 1.0;
            }
            let mut m3 = [0.0f64; 9];
            for i in 0..3 {
                for j in 0..3 {
                    m3[3 * i + j] = m[4 * (i + 1) + (j + 1)];
                }
            }
            let (det3, w3) =
                real_inv(3, &m3).ok_or(MicrolocalError::DegenerateQuadratic { det: 0.0 })?;
            if det3 <= 0.0 {
                return Err(MicrolocalError::DegenerateQuadratic { det: det3 });
            }
            let cross = [m[4], m[8], m[12]];
            let brs = [qx[1], qx[2], qx[3]];
            let bis = [-xi[1], -xi[2], -xi[3]];
            let wdot = |a: &[f64; 3], b: &[f64; 3]| -> f64 {
                let mut acc = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        acc += a[i] * w3[3 * i + j] * b[j];
                    }
                }
                acc
            };
            // Real part of the time exponent is a fixed quadratic
            // -alpha s^2 + beta0 s + const with alpha the Schur complement,
            // the imaginary part is linear with constant rate omega. The
            // cutoff sits where the envelope is far below working
            // precision; panels are sized so each one sees a bounded
            // exponent variation, keeping the small fixed rule accurate.
            let alpha = 0.5 * (m[0] - wdot(&cross, &cross));
            let beta0 = qx[0] - wdot(&cross, &brs);
            let s_peak = (beta0 / (2.0 * alpha)).max(0.0);
            let span = s_peak + 14.0 / alpha.sqrt().max(1e-6) + 1.0;
            let omega = (wdot(&cross, &bis) + xi[0]).abs();
            let rate = omega + 2.0 * alpha * span + beta0.abs();
            let width = (10.0 / rate.max(1.0)).min(1.0);
            let panels = (span / width).ceil().max(1.0) as usize;
            let (nodes, weights) = gauss_legendre(24);
            let pref = TWO_PI.powi(3).sqrt() / det3.sqrt();
            let mut acc = ZERO;
            for p in 0..panels {
                let lo = span * p as f64 / panels as f64;
                let hi = span * (p + 1) as f64 / panels as f64;
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                for (t, w) in nodes.iter().zip(&weights) {
                    let s = mid + half * t;
                    let crs =
                        [brs[0] - s * cross[0], brs[1] - s * cross[1], brs[2] - s * cross[2]];
                    let re_exp = 0.5 * (wdot(&crs, &crs) - wdot(&bis, &bis))
                        - 0.5 * m[0] * s * s
                        + qx[0] * s;
                    let im_exp = wdot(&crs, &bis) - xi[0] * s;
                    acc += c(re_exp, im_exp).exp() * (w * half);
                }
            }
            Ok(acc * (pref * window_const))
        }
        TestDistribution::LinearPullback { map, inner } => {
            let (det, finv) =
                real_inv(4, map).ok_or(MicrolocalError::SingularMap { det: 0.0 })?;
            if det.abs() < 1e-12 {
                return Err(MicrolocalError::SingularMap { det });
            }
            let finv: [f64; 16] = core::array::from_fn(|k| finv[k]);
            let fx = mat4_apply(map, x);
            // Q' = f^-T Q f^-1, xi' = f^-T xi.
            let mut qp = [0.0f64; 16];
            for i in 0..4 {
                for j in 0..4 {
                    let mut acc = 0.0;
                    for k in 0..4 {
                        for l in 0..4 {
                            acc += finv[4 * k + i] * q[4 * k + l] * finv[4 * l + j];
                        }
                    }
                    qp[4 * i + j] = acc;
                }
            }
            let mut xip = [0.0f64; 4];
            for i in 0..4 {
                for k in 0..4 {
                    xip[i] += finv[4 * k + i] * xi[k];
                }
            }
            Ok(windowed_value(inner, &fx, &qp, &xip)? / det.abs())
        }
    }
}

/// Scan grid and decision rule for the decay scan.
#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Window quadratic form `Q` (row-major 4x4, SPD).
    pub window: [f64; 16],
    pub magnitudes: usize,
    pub mag_lo: f64,
    pub mag_hi: f64,
    /// Log-log slope above which a direction counts as singular.
    pub slope_threshold: f64,
    /// Values are clamped here before taking logs.
    pub clamp: f64,
}

impl Default for ScanOptions {
    fn default() -> ScanOptions {
        let mut window = [0.0f64; 16];
        for d in 0..4 {
            window[4 * d + d] = 1.0;
        }
        ScanOptions {
            window,
            magnitudes: 12,
            mag_lo: 4.0,
            mag_hi: 64.0,
            slope_threshold: -6.0,
            clamp: 1e-290,
        }
    }
}

/// Per-direction scan outcome.
#[derive(Debug, Clone)]
pub struct DirectionVerdict {
    pub direction: [f64; 4],
    pub slope: f64,
    pub singular: bool,
}

/// A spread of sixteen unit covector directions including all signed axes.
pub fn default_directions() -> Vec<[f64; 4]> {
    let mut dirs: Vec<[f64; 4]> = Vec::new();
    for d in 0..4 {
        for s in [1.0, -1.0] {
            let mut v = [0.0f64; 4];
            v[d] = s;
            dirs.push(v);
        }
    }
    let r = 0.5f64.sqrt();
    dirs.push([r, r, 0.0, 0.0]);
    dirs.push([r, -r, 0.0, 0.0]);
    dirs.push([r, 0.0, r, 0.0]);
    dirs.push([r, 0.0, 0.0, r]);
    dirs.push([0.0, r, r, 0.0]);
    dirs.push([0.0, r, 0.0, r]);
    dirs.push([0.0, 0.0, r, r]);
    dirs.push([0.5, 0.5, 0.5, 0.5]);
    dirs
}

/// Measures the decay of the windowed transform along each direction over
/// log-spaced magnitudes and flags directions whose log-log slope stays
/// above the threshold. Directions whose values sit entirely below the
/// clamp are reported as decayed (slope sentinel -9999).
pub fn wf_decay_scan(
    u: &TestDistribution,
    x: &[f64; 4],
    dirs: &[[f64; 4]],
    opts: &ScanOptions,
) -> Result<Vec<DirectionVerdict>, MicrolocalError> {
    if opts.magnitudes < 2 || dirs.is_empty() || !(opts.mag_hi > opts.mag_lo) {
        return Err(MicrolocalError::BadScanGrid);
    }
    {
        let (eigs, _) = crate::linalg::sym_eig(4, &opts.window);
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig <= 0.0 {
            return Err(MicrolocalError::BadWindow { min_eig });
        }
    }
    let kmax = opts.magnitudes;
    let ratio = opts.mag_hi / opts.mag_lo;
    let mut out = Vec::with_capacity(dirs.len());
    for d in dirs {
        let mut xs = Vec::with_capacity(kmax);
        let mut ys = Vec::with_capacity(kmax);
        let mut max_log = f64::NEG_INFINITY;
        for k in 0..kmax {
            let r = opts.mag_lo * ratio.powf(k as f64 / (kmax - 1) as f64);
            let xi = [r * d[0], r * d[1], r * d[2], r * d[3]];
            let v = windowed_value(u, x, &opts.window, &xi)?;
            let mag = v.norm().max(opts.clamp);
            xs.push(r.ln());
            let y = mag.ln();
            max_log = max_log.max(y);
            ys.push(y);
        }
        let clamp_log = opts.clamp.ln();
        if max_log <= clamp_log + 1.0 {
            out.push(DirectionVerdict { direction: *d, slope: -9999.0, singular: false });
            continue;
        }
        let n = kmax as f64;
        let xbar = xs.iter().sum::<f64>() / n;
        let ybar = ys.iter().sum::<f64>() / n;
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..kmax {
            num += (xs[k] - xbar) * (ys[k] - ybar);
            den += (xs[k] - xbar) * (xs[k] - xbar);
        }
        let slope = num / den;
        out.push(DirectionVerdict { direction: *d, slope, singular: slope > opts.slope_threshold });
    }
    Ok(out)
}

/// Scans a pullback and its inner distribution on corresponding data: the
/// pulled-back distribution at `x` along `dirs` against the inner one at
/// `map x` along the normalized images `map^-T dirs`. Under the wavefront
/// transform rule the singularity flags must agree pairwise.
pub fn wf_pullback_check(
    map: &[f64; 16],
    inner: &TestDistribution,
    x: &[f64; 4],
    dirs: &[[f64; 4]],
    opts: &ScanOptions,
) -> Result<(Vec<DirectionVerdict>, Vec<DirectionVerdict>), MicrolocalError> {
    let pulled = TestDistribution::LinearPullback { map: *map, inner: Box::new(inner.clone()) };
    let first = wf_decay_scan(&pulled, x, dirs, opts)?;
    let (det, finv) = real_inv(4, map).ok_or(MicrolocalError::SingularMap { det: 0.0 })?;
    if det.abs() < 1e-12 {
        return Err(MicrolocalError::SingularMap { det });
    }
    let fx = mat4_apply(
        &core::array::from_fn(|k| map[k]),
        x,
    );
    let mut dirs2 = Vec::with_capacity(dirs.len());
    for d in dirs {
        let mut v = [0.0f64; 4];
        for i in 0..4 {
            for k in 0..4 {
                v[i] += finv[4 * k + i] * d[k];
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        for a in v.iter_mut() {
            *a /= norm;
        }
        dirs2.push(v);
    }
    let second = wf_decay_scan(inner, &fx, &dirs2, opts)?;
    Ok((first, second))
}
