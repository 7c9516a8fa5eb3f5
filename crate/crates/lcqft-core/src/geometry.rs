//! Spin-frame geometry on curved backgrounds.
//!
//! A metric is sampled pointwise; frames come from indefinite Gram-Schmidt in
//! a fixed coordinate order, so every frame quantity is a deterministic
//! function of the metric alone. On top of that sit grid discretizations of
//! the Dirac operator, its first variation under metric perturbations, and
//! the classical stress-energy tensor.
//!
//! Index conventions, fixed throughout:
//!   greek/coordinate indices are written `mu`, `nu`, ... and frame indices
//!   `a`, `b`, ...; `e[a][mu]` is the frame vector component `e_a^mu` and
//!   `ecov[a][mu]` the coframe `e^a_mu`. Partial-derivative tables are
//!   indexed derivative-direction first: `dg[s][mu][nu] = d_s g_{mu nu}`.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
// Float provides sqrt/exp/abs in no_std builds; std shadows it harmlessly.
use num_traits::Float;

use crate::dirac::{AdjointPair, GammaRep, ETA_DIAG};
use crate::linalg::{c, cr, real_inv, M4, V4, V4_ZERO};
use crate::Complex64;

pub type Sym4 = [[f64; 4]; 4];

const SYM4_ZERO: Sym4 = [[0.0; 4]; 4];

/// Minkowski metric diag(+1,-1,-1,-1) as a coordinate tensor.
pub const MINKOWSKI: Sym4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
];

#[derive(Clone, Debug, PartialEq)]
pub enum GeometryError {
    /// |det g| fell below threshold at a sampled point.
    SingularMetric { det: f64 },
    /// A Gram-Schmidt pivot lost the expected sign or size; the metric is not
    /// (+,-,-,-) along the coordinate flag at this point.
    FrameDegenerate { pivot: f64 },
    /// An axis has too few points for the stencil order and margin in use.
    GridTooSmall { axis: usize, have: usize, need: usize },
}

impl core::fmt::Display for GeometryError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GeometryError::SingularMetric { det } => {
                write!(f, "metric determinant {det:.3e} below threshold")
            }
            GeometryError::FrameDegenerate { pivot } => {
                write!(f, "frame pivot {pivot:.3e} degenerate or wrongly signed")
            }
            GeometryError::GridTooSmall { axis, have, need } => {
                write!(f, "axis {axis} has {have} points, stencil needs {need}")
            }
        }
    }
}

fn s4_add(a: &Sym4, b: &Sym4) -> Sym4 {
    let mut out = SYM4_ZERO;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[i][j] + b[i][j];
        }
    }
    out
}

fn s4_scale(a: &Sym4, s: f64) -> Sym4 {
    let mut out = SYM4_ZERO;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[i][j] * s;
        }
    }
    out
}

fn s4_flat(a: &Sym4) -> [f64; 16] {
    let mut out = [0.0; 16];
    for i in 0..4 {
        for j in 0..4 {
            out[4 * i + j] = a[i][j];
        }
    }
    out
}

/// Determinant and inverse of a 4x4 coordinate metric, or the singularity
/// error. The determinant threshold is absolute, 1e-12.
fn invert_metric(g: &Sym4) -> Result<(f64, Sym4), GeometryError> {
    let flat = s4_flat(g);
    let (det, inv) = match real_inv(4, &flat) {
        Some(p) => p,
        None => return Err(GeometryError::SingularMetric { det: 0.0 }),
    };
    if det.abs() < 1e-12 {
        return Err(GeometryError::SingularMetric { det });
    }
    let mut out = SYM4_ZERO;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = inv[4 * i + j];
        }
    }
    Ok((det, out))
}

/// Smooth compactly supported profile: exp(-1/(1-s)) for s < 1 and 0 beyond,
/// with s the squared euclidean distance from `center` over `width` squared.
/// Returns the value and its coordinate gradient.
pub fn bump_profile(x: [f64; 4], center: [f64; 4], width: f64) -> (f64, [f64; 4]) {
    let mut s = 0.0;
    for i in 0..4 {
        let d = (x[i] - center[i]) / width;
        s += d * d;
    }
    if s >= 1.0 {
        return (0.0, [0.0; 4]);
    }
    let inv = 1.0 / (1.0 - s);
    let phi = (-inv).exp();
    let dphi_ds = -phi * inv * inv;
    let mut grad = [0.0; 4];
    for i in 0..4 {
        grad[i] = dphi_ds * 2.0 * (x[i] - center[i]) / (width * width);
    }
    (phi, grad)
}

/// Rotation of the spatial frame legs: exp of the so(3) generator `w` (axis
/// times angle), embedded as 1 (+) SO(3) in the Lorentz group.
pub fn spatial_rotation(w: [f64; 3]) -> Sym4 {
    let theta = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let mut r = [[0.0; 4]; 4];
    for i in 0..4 {
        r[i][i] = 1.0;
    }
    if theta < 1e-300 {
        return r;
    }
    let n = [w[0] / theta, w[1] / theta, w[2] / theta];
    let k = [
        [0.0, -n[2], n[1]],
        [n[2], 0.0, -n[0]],
        [-n[1], n[0], 0.0],
    ];
    let (sn, cs) = (theta.sin(), theta.cos());
    for i in 0..3 {
        for j in 0..3 {
            let mut k2 = 0.0;
            for l in 0..3 {
                k2 += k[i][l] * k[l][j];
            }
            r[i + 1][j + 1] = if i == j { 1.0 } else { 0.0 } + sn * k[i][j] + (1.0 - cs) * k2;
        }
    }
    r
}

/// Symmetric rank-2 tensor field, used for metric perturbation directions.
#[derive(Clone)]
pub struct SymTensorField {
    t: Arc<dyn Fn([f64; 4]) -> Sym4 + Send + Sync>,
    dt: Option<Arc<dyn Fn([f64; 4]) -> [Sym4; 4] + Send + Sync>>,
}

impl SymTensorField {
    pub fn from_fn(t: impl Fn([f64; 4]) -> Sym4 + Send + Sync + 'static) -> Self {
        SymTensorField { t: Arc::new(t), dt: None }
    }

    pub fn zero() -> Self {
        SymTensorField {
            t: Arc::new(|_| SYM4_ZERO),
            dt: Some(Arc::new(|_| [SYM4_ZERO; 4])),
        }
    }

    /// Compactly supported perturbation `profile(x) * p` with analytic
    /// derivatives. `p` must be symmetric.
    pub fn bump(center: [f64; 4], width: f64, p: Sym4) -> Self {
        let pv = p;
        let t = move |x: [f64; 4]| {
            let (phi, _) = bump_profile(x, center, width);
            s4_scale(&pv, phi)
        };
        let dt = move |x: [f64; 4]| {
            let (_, grad) = bump_profile(x, center, width);
            let mut out = [SYM4_ZERO; 4];
            for s in 0..4 {
                out[s] = s4_scale(&pv, grad[s]);
            }
            out
        };
        SymTensorField { t: Arc::new(t), dt: Some(Arc::new(dt)) }
    }

    pub fn eval(&self, x: [f64; 4]) -> Sym4 {
        (self.t)(x)
    }
}

/// Position-dependent Lorentzian metric with optional analytic derivatives.
/// When `dg` is absent, derivatives fall back to central differences with
/// relative step `fd_step` (optionally Richardson-extrapolated).
#[derive(Clone)]
pub struct MetricField {
    g: Arc<dyn Fn([f64; 4]) -> Sym4 + Send + Sync>,
    dg: Option<Arc<dyn Fn([f64; 4]) -> [Sym4; 4] + Send + Sync>>,
    pub fd_step: f64,
    pub richardson: bool,
    /// Metric independent of position; frame data may then be shared across
    /// a whole grid.
    pub constant: bool,
}

impl MetricField {
    pub fn from_fn(g: impl Fn([f64; 4]) -> Sym4 + Send + Sync + 'static) -> Self {
        MetricField {
            g: Arc::new(g),
            dg: None,
            fd_step: 1e-5,
            richardson: false,
            constant: false,
        }
    }

    pub fn with_derivative(
        mut self,
        dg: impl Fn([f64; 4]) -> [Sym4; 4] + Send + Sync + 'static,
    ) -> Self {
        self.dg = Some(Arc::new(dg));
        self
    }

    pub fn minkowski() -> Self {
        let mut m = MetricField::from_fn(|_| MINKOWSKI).with_derivative(|_| [SYM4_ZERO; 4]);
        m.constant = true;
        m
    }

    /// Spatially flat expanding metric diag(1, -a^2, -a^2, -a^2) with linear
    /// scale factor a(t) = a0 + adot t.
    pub fn frw(a0: f64, adot: f64) -> Self {
        let g = move |x: [f64; 4]| {
            let a = a0 + adot * x[0];
            let mut out = SYM4_ZERO;
            out[0][0] = 1.0;
            for i in 1..4 {
                out[i][i] = -a * a;
            }
            out
        };
        let dg = move |x: [f64; 4]| {
            let a = a0 + adot * x[0];
            let mut out = [SYM4_ZERO; 4];
            for i in 1..4 {
                out[0][i][i] = -2.0 * a * adot;
            }
            out
        };
        MetricField::from_fn(g).with_derivative(dg)
    }

    /// Minkowski plus a compactly supported symmetric perturbation
    /// `amplitude * profile * P` with a fixed mixing matrix P of spectral
    /// norm below one; amplitudes up to ~0.3 keep the signature Lorentzian.
    pub fn bump(center: [f64; 4], width: f64, amplitude: f64) -> Self {
        const P: Sym4 = [
            [0.6, 0.15, 0.0, 0.1],
            [0.15, 0.5, 0.1, 0.0],
            [0.0, 0.1, 0.4, 0.05],
            [0.1, 0.0, 0.05, 0.3],
        ];
        MetricField::bump_with_matrix(center, width, s4_scale(&P, amplitude))
    }

    pub fn bump_with_matrix(center: [f64; 4], width: f64, p: Sym4) -> Self {
        let delta = SymTensorField::bump(center, width, p);
        MetricField::minkowski().perturbed(&delta, 1.0)
    }

    /// The one-parameter family g + eps * delta evaluated at a fixed eps.
    pub fn perturbed(&self, delta: &SymTensorField, eps: f64) -> Self {
        let g0 = self.g.clone();
        let t = delta.t.clone();
        let g = move |x: [f64; 4]| s4_add(&g0(x), &s4_scale(&t(x), eps));
        let dg = match (&self.dg, &delta.dt) {
            (Some(dg0), Some(dt)) => {
                let dg0 = dg0.clone();
                let dt = dt.clone();
                let f = move |x: [f64; 4]| {
                    let a = dg0(x);
                    let b = dt(x);
                    let mut out = [SYM4_ZERO; 4];
                    for s in 0..4 {
                        out[s] = s4_add(&a[s], &s4_scale(&b[s], eps));
                    }
                    out
                };
                Some(Arc::new(f) as Arc<dyn Fn([f64; 4]) -> [Sym4; 4] + Send + Sync>)
            }
            _ => None,
        };
        MetricField {
            g: Arc::new(g),
            dg,
            fd_step: self.fd_step,
            richardson: self.richardson,
            constant: false,
        }
    }

    pub fn eval(&self, x: [f64; 4]) -> Sym4 {
        (self.g)(x)
    }
}

/// All first partials of the metric at `x`, analytic when available.
pub fn metric_partials(metric: &MetricField, x: [f64; 4]) -> [Sym4; 4] {
    if let Some(dg) = &metric.dg {
        return dg(x);
    }
    let central = |s: usize, h: f64| -> Sym4 {
        let mut xp = x;
        xp[s] += h;
        let mut xm = x;
        xm[s] -= h;
        s4_scale(&s4_add(&metric.eval(xp), &s4_scale(&metric.eval(xm), -1.0)), 0.5 / h)
    };
    let mut out = [SYM4_ZERO; 4];
    for s in 0..4 {
        let h = metric.fd_step * (1.0 + x[s].abs());
        let d = central(s, h);
        out[s] = if metric.richardson {
            let d2 = central(s, 0.5 * h);
            s4_add(&s4_scale(&d2, 4.0 / 3.0), &s4_scale(&d, -1.0 / 3.0))
        } else {
            d
        };
    }
    out
}

/// Christoffel symbols of the second kind, indexed [rho][mu][nu].
pub fn christoffel(
    metric: &MetricField,
    x: [f64; 4],
) -> Result<[[[f64; 4]; 4]; 4], GeometryError> {
    let g = metric.eval(x);
    let (_, ginv) = invert_metric(&g)?;
    let dg = metric_partials(metric, x);
    let mut gamma = [[[0.0; 4]; 4]; 4];
    for rho in 0..4 {
        for mu in 0..4 {
            for nu in 0..4 {
                let mut s = 0.0;
                for sg in 0..4 {
                    s += ginv[rho][sg] * (dg[mu][nu][sg] + dg[nu][mu][sg] - dg[sg][mu][nu]);
                }
                gamma[rho][mu][nu] = 0.5 * s;
            }
        }
    }
    Ok(gamma)
}

/// Orthonormal frame and coframe at a point.
#[derive(Clone, Copy, Debug)]
pub struct Vierbein {
    /// Frame vectors e_a^mu.
    pub e: [[f64; 4]; 4],
    /// Coframe e^a_mu = g_{mu nu} eta^{ab} e_b^nu.
    pub ecov: [[f64; 4]; 4],
}

/// Indefinite Gram-Schmidt on the coordinate basis in the fixed order
/// t, x, y, z. The timelike leg is normalized future-pointing.
pub fn vierbein(metric: &MetricField, x: [f64; 4]) -> Result<Vierbein, GeometryError> {
    let g = metric.eval(x);
    // determinant gate shares the threshold with christoffel
    invert_metric(&g)?;
    let ip = |u: &[f64; 4], v: &[f64; 4]| -> f64 {
        let mut s = 0.0;
        for mu in 0..4 {
            for nu in 0..4 {
                s += u[mu] * g[mu][nu] * v[nu];
            }
        }
        s
    };
    let mut e = [[0.0f64; 4]; 4];
    let q0 = g[0][0];
    if q0 <= 1e-10 {
        return Err(GeometryError::FrameDegenerate { pivot: q0 });
    }
    e[0][0] = 1.0 / q0.sqrt();
    for i in 1..4 {
        let mut u = [0.0f64; 4];
        u[i] = 1.0;
        for a in 0..i {
            let cc = ip(&u, &e[a]);
            for mu in 0..4 {
                u[mu] -= ETA_DIAG[a] * cc * e[a][mu];
            }
        }
        let q = ip(&u, &u);
        if q >= -1e-10 {
            return Err(GeometryError::FrameDegenerate { pivot: q });
        }
        let s = 1.0 / (-q).sqrt();
        for mu in 0..4 {
            e[i][mu] = u[mu] * s;
        }
    }
    if e[0][0] < 0.0 {
        for mu in 0..4 {
            e[0][mu] = -e[0][mu];
        }
    }
    let mut ecov = [[0.0f64; 4]; 4];
    for a in 0..4 {
        for mu in 0..4 {
            let mut s = 0.0;
            for nu in 0..4 {
                s += g[mu][nu] * e[a][nu];
            }
            ecov[a][mu] = ETA_DIAG[a] * s;
        }
    }
    Ok(Vierbein { e, ecov })
}

/// Worst deviation of the frame from orthonormality and coframe duality.
pub fn orthonormality_defect(metric: &MetricField, x: [f64; 4], vb: &Vierbein) -> f64 {
    let g = metric.eval(x);
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let mut s = 0.0;
            let mut d = 0.0;
            for mu in 0..4 {
                d += vb.ecov[a][mu] * vb.e[b][mu];
                for nu in 0..4 {
                    s += vb.e[a][mu] * g[mu][nu] * vb.e[b][nu];
                }
            }
            let eta = if a == b { ETA_DIAG[a] } else { 0.0 };
            let delta = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((s - eta).abs()).max((d - delta).abs());
        }
    }
    worst
}

/// Frame, frame-indexed connection coefficients, and spin connection at a
/// point. `gamma_frame` is the raw computed Gamma^a_{bc}; `sigma` is built
/// from its exactly eta-antisymmetrized part so that the spin matrices are
/// anti-selfadjoint for the adjoint form to rounding, not just to finite
/// difference accuracy.
#[derive(Clone, Debug)]
pub struct ConnectionData {
    pub vb: Vierbein,
    pub gamma_frame: [[[f64; 4]; 4]; 4],
    pub sigma: [M4; 4],
    /// Contractions sum_b Gammahat^b_{bc}, used in covariant divergences.
    pub gamma_trace: [f64; 4],
    pub sqrt_det: f64,
}

/// Connection data via Gamma^a_{bc} = e^a_rho d_b e_c^rho
/// + e^a_rho e_b^mu e_c^nu Gamma^rho_{mu nu}, the frame derivative taken by
/// central differences of the Gram-Schmidt frame field.
pub fn spin_connection(
    metric: &MetricField,
    rep: &GammaRep,
    x: [f64; 4],
) -> Result<ConnectionData, GeometryError> {
    let vb = vierbein(metric, x)?;
    let g = metric.eval(x);
    let (det, _) = invert_metric(&g)?;
    let gamma_coord = christoffel(metric, x)?;
    let mut de = [[[0.0f64; 4]; 4]; 4]; // de[mu][c][rho] = d_mu e_c^rho
    for mu in 0..4 {
        let h = metric.fd_step * (1.0 + x[mu].abs());
        let mut xp = x;
        xp[mu] += h;
        let mut xm = x;
        xm[mu] -= h;
        let vp = vierbein(metric, xp)?;
        let vm = vierbein(metric, xm)?;
        for cc in 0..4 {
            for rho in 0..4 {
                de[mu][cc][rho] = (vp.e[cc][rho] - vm.e[cc][rho]) / (2.0 * h);
            }
        }
    }
    let mut gf = [[[0.0f64; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for cc in 0..4 {
                let mut s = 0.0;
                for rho in 0..4 {
                    let mut db = 0.0;
                    for mu in 0..4 {
                        db += vb.e[b][mu] * de[mu][cc][rho];
                    }
                    s += vb.ecov[a][rho] * db;
                    for mu in 0..4 {
                        for nu in 0..4 {
                            s += vb.ecov[a][rho]
                                * vb.e[b][mu]
                                * vb.e[cc][nu]
                                * gamma_coord[rho][mu][nu];
                        }
                    }
                }
                gf[a][b][cc] = s;
            }
        }
    }
    // project onto the exactly antisymmetric part in the lowered index pair
    let mut ghat = [[[0.0f64; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for cc in 0..4 {
                let low = ETA_DIAG[a] * gf[a][b][cc];
                let low_swap = ETA_DIAG[cc] * gf[cc][b][a];
                ghat[a][b][cc] = ETA_DIAG[a] * 0.5 * (low - low_swap);
            }
        }
    }
    let mut sigma = [M4::zero(); 4];
    for b in 0..4 {
        let mut s = M4::zero();
        for a in 0..4 {
            for cc in 0..4 {
                let coeff = 0.25 * ghat[a][b][cc] * ETA_DIAG[cc];
                if coeff != 0.0 {
                    s = s.add(&rep.gamma[a].mul(&rep.gamma[cc]).scale_re(coeff));
                }
            }
        }
        sigma[b] = s;
    }
    let mut gamma_trace = [0.0f64; 4];
    for cc in 0..4 {
        for b in 0..4 {
            gamma_trace[cc] += ghat[b][b][cc];
        }
    }
    Ok(ConnectionData {
        vb,
        gamma_frame: gf,
        sigma,
        gamma_trace,
        sqrt_det: det.abs().sqrt(),
    })
}

/// Worst violation of metric compatibility in frame form,
/// sigma_b gamma_a - gamma_a sigma_b - Gamma^c_{ba} gamma_c = 0,
/// measured with the raw (unprojected) connection coefficients.
pub fn nabla_gamma_defect(cd: &ConnectionData, rep: &GammaRep) -> f64 {
    let mut worst: f64 = 0.0;
    for b in 0..4 {
        for a in 0..4 {
            let mut m = cd.sigma[b].mul(&rep.gamma[a]).sub(&rep.gamma[a].mul(&cd.sigma[b]));
            for cc in 0..4 {
                m = m.sub(&rep.gamma[cc].scale_re(cd.gamma_frame[cc][b][a]));
            }
            worst = worst.max(m.max_abs());
        }
    }
    worst
}

/// Worst violation of eta_{da} Gamma^a_{bc} + eta_{ca} Gamma^a_{bd} = 0 for
/// the raw connection coefficients.
pub fn antisymmetry_defect(cd: &ConnectionData) -> f64 {
    let mut worst: f64 = 0.0;
    for b in 0..4 {
        for cc in 0..4 {
            for d in 0..4 {
                let v = ETA_DIAG[d] * cd.gamma_frame[d][b][cc]
                    + ETA_DIAG[cc] * cd.gamma_frame[cc][b][d];
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

/// Uniform rectangular grid in coordinate space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid4 {
    pub n: [usize; 4],
    pub h: [f64; 4],
    pub origin: [f64; 4],
}

impl Grid4 {
    /// Cube of `n` points per axis covering [-extent, extent] in each
    /// coordinate.
    pub fn centered(n: usize, extent: f64) -> Self {
        let h = 2.0 * extent / (n as f64 - 1.0);
        Grid4 { n: [n; 4], h: [h; 4], origin: [-extent; 4] }
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2] * self.n[3]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: [usize; 4]) -> [f64; 4] {
        let mut x = [0.0; 4];
        for i in 0..4 {
            x[i] = self.origin[i] + idx[i] as f64 * self.h[i];
        }
        x
    }

    pub fn flat(&self, idx: [usize; 4]) -> usize {
        ((idx[0] * self.n[1] + idx[1]) * self.n[2] + idx[2]) * self.n[3] + idx[3]
    }

    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.n[1] * self.n[2] * self.n[3],
            1 => self.n[2] * self.n[3],
            2 => self.n[3],
            _ => 1,
        }
    }

    pub fn each(&self, mut f: impl FnMut([usize; 4], usize)) {
        let mut flat = 0;
        for i0 in 0..self.n[0] {
            for i1 in 0..self.n[1] {
                for i2 in 0..self.n[2] {
                    for i3 in 0..self.n[3] {
                        f([i0, i1, i2, i3], flat);
                        flat += 1;
                    }
                }
            }
        }
    }

    /// Visit points whose every index lies in [margin, n - margin).
    pub fn each_interior(&self, margin: usize, mut f: impl FnMut([usize; 4], usize)) {
        for i0 in margin..self.n[0].saturating_sub(margin) {
            for i1 in margin..self.n[1].saturating_sub(margin) {
                for i2 in margin..self.n[2].saturating_sub(margin) {
                    for i3 in margin..self.n[3].saturating_sub(margin) {
                        let idx = [i0, i1, i2, i3];
                        f(idx, self.flat(idx));
                    }
                }
            }
        }
    }

    fn check_margin(&self, margin: usize) -> Result<(), GeometryError> {
        for axis in 0..4 {
            let need = 2 * margin + 1;
            if self.n[axis] < need {
                return Err(GeometryError::GridTooSmall { axis, have: self.n[axis], need });
            }
        }
        Ok(())
    }
}

/// Frame and connection data over a grid. Constant metrics share a single
/// point's data.
pub struct FrameGrid {
    pub grid: Grid4,
    storage: FrameStorage,
}

enum FrameStorage {
    Uniform(ConnectionData),
    PerPoint(Vec<ConnectionData>),
}

impl FrameGrid {
    pub fn build(metric: &MetricField, rep: &GammaRep, grid: Grid4) -> Result<Self, GeometryError> {
        if metric.constant {
            let cd = spin_connection(metric, rep, grid.point([0, 0, 0, 0]))?;
            return Ok(FrameGrid { grid, storage: FrameStorage::Uniform(cd) });
        }
        let mut data = Vec::with_capacity(grid.len());
        let mut err = None;
        grid.each(|idx, _| {
            if err.is_some() {
                return;
            }
            match spin_connection(metric, rep, grid.point(idx)) {
                Ok(cd) => data.push(cd),
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        Ok(FrameGrid { grid, storage: FrameStorage::PerPoint(data) })
    }

    pub fn at(&self, flat: usize) -> &ConnectionData {
        match &self.storage {
            FrameStorage::Uniform(cd) => cd,
            FrameStorage::PerPoint(v) => &v[flat],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// Column spinor; the Dirac operator acts as (-i slash + m).
    Spinor,
    /// Row cospinor; the Dirac operator acts as (+i slash + m).
    Cospinor,
}

fn v4_add(a: &V4, b: &V4) -> V4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn v4_sub(a: &V4, b: &V4) -> V4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

fn v4_scale(z: Complex64, a: &V4) -> V4 {
    [a[0] * z, a[1] * z, a[2] * z, a[3] * z]
}

fn v4_axpy_re(r: f64, x: &V4, acc: &mut V4) {
    for i in 0..4 {
        acc[i] += x[i] * r;
    }
}

fn v4_conj(a: &V4) -> V4 {
    [a[0].conj(), a[1].conj(), a[2].conj(), a[3].conj()]
}

fn v4_max_abs(a: &V4) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..4 {
        m = m.max(a[i].norm());
    }
    m
}

/// Pairing of a row value with a column value, no conjugation.
pub fn row_dot(row: &V4, col: &V4) -> Complex64 {
    row[0] * col[0] + row[1] * col[1] + row[2] * col[2] + row[3] * col[3]
}

/// Spinor- or cospinor-valued grid field. Values at indices closer than
/// `margin` to any face are invalid (kept zero); each derivative widens the
/// margin by two for the five-point fourth-order stencil.
#[derive(Clone)]
pub struct SpinorGridField {
    pub grid: Grid4,
    pub kind: FieldKind,
    pub margin: usize,
    pub v: Vec<V4>,
}

impl SpinorGridField {
    pub fn zero(grid: Grid4, kind: FieldKind, margin: usize) -> Self {
        SpinorGridField { grid, kind, margin, v: alloc::vec![V4_ZERO; grid.len()] }
    }

    pub fn from_fn(grid: Grid4, kind: FieldKind, f: impl Fn([f64; 4]) -> V4) -> Self {
        let mut out = SpinorGridField::zero(grid, kind, 0);
        grid.each(|idx, flat| {
            out.v[flat] = f(grid.point(idx));
        });
        out
    }

    fn zip(&self, other: &Self, f: impl Fn(&V4, &V4) -> V4) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        assert_eq!(self.kind, other.kind, "field kind mismatch");
        let margin = self.margin.max(other.margin);
        let mut out = SpinorGridField::zero(self.grid, self.kind, margin);
        self.grid.each_interior(margin, |_, flat| {
            out.v[flat] = f(&self.v[flat], &other.v[flat]);
        });
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| v4_add(a, b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| v4_sub(a, b))
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let mut out = SpinorGridField::zero(self.grid, self.kind, self.margin);
        self.grid.each_interior(self.margin, |_, flat| {
            out.v[flat] = v4_scale(z, &self.v[flat]);
        });
        out
    }

    /// Pointwise matrix action honoring the kind: `m u` on spinors, `v m` on
    /// cospinors.
    pub fn apply_matrix(&self, m: &M4) -> Self {
        let mut out = SpinorGridField::zero(self.grid, self.kind, self.margin);
        self.grid.each_interior(self.margin, |_, flat| {
            out.v[flat] = match self.kind {
                FieldKind::Spinor => m.apply(&self.v[flat]),
                FieldKind::Cospinor => m.apply_left(&self.v[flat]),
            };
        });
        out
    }

    /// Pointwise rescale by a complex scalar field given per flat index.
    pub fn scale_by(&self, w: impl Fn(usize) -> Complex64) -> Self {
        let mut out = SpinorGridField::zero(self.grid, self.kind, self.margin);
        self.grid.each_interior(self.margin, |_, flat| {
            out.v[flat] = v4_scale(w(flat), &self.v[flat]);
        });
        out
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        self.grid.each_interior(self.margin, |_, flat| {
            m = m.max(v4_max_abs(&self.v[flat]));
        });
        m
    }

    /// Max pointwise deviation over the intersection of valid regions.
    pub fn max_dev(&self, other: &Self) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let margin = self.margin.max(other.margin);
        let mut m: f64 = 0.0;
        self.grid.each_interior(margin, |_, flat| {
            m = m.max(v4_max_abs(&v4_sub(&self.v[flat], &other.v[flat])));
        });
        m
    }
}

/// Fourth-order central difference along one coordinate axis. Widens the
/// invalid margin by two.
pub fn partial_axis(f: &SpinorGridField, axis: usize) -> Result<SpinorGridField, GeometryError> {
    let margin = f.margin + 2;
    f.grid.check_margin(margin)?;
    let mut out = SpinorGridField::zero(f.grid, f.kind, margin);
    let stride = f.grid.stride(axis);
    let inv = 1.0 / (12.0 * f.grid.h[axis]);
    f.grid.each_interior(margin, |_, flat| {
        let mut d = V4_ZERO;
        let p2 = &f.v[flat + 2 * stride];
        let p1 = &f.v[flat + stride];
        let m1 = &f.v[flat - stride];
        let m2 = &f.v[flat - 2 * stride];
        for i in 0..4 {
            d[i] = (m2[i] - p2[i] + (p1[i] - m1[i]) * 8.0) * inv;
        }
        out.v[flat] = d;
    });
    Ok(out)
}

fn coordinate_partials(
    f: &SpinorGridField,
) -> Result<[SpinorGridField; 4], GeometryError> {
    Ok([
        partial_axis(f, 0)?,
        partial_axis(f, 1)?,
        partial_axis(f, 2)?,
        partial_axis(f, 3)?,
    ])
}

/// The slash operator alone: gamma^a (d_a + sigma_a) on spinors,
/// (d_a - . sigma_a) gamma^a on cospinors, with d_a = e_a^mu d_mu.
pub fn slash_apply(
    f: &SpinorGridField,
    frames: &FrameGrid,
    rep: &GammaRep,
) -> Result<SpinorGridField, GeometryError> {
    assert_eq!(f.grid, frames.grid, "grid mismatch");
    let p = coordinate_partials(f)?;
    let margin = f.margin + 2;
    let mut out = SpinorGridField::zero(f.grid, f.kind, margin);
    let gamma_up: [M4; 4] = [
        rep.gamma[0].scale_re(ETA_DIAG[0]),
        rep.gamma[1].scale_re(ETA_DIAG[1]),
        rep.gamma[2].scale_re(ETA_DIAG[2]),
        rep.gamma[3].scale_re(ETA_DIAG[3]),
    ];
    f.grid.each_interior(margin, |_, flat| {
        let cd = frames.at(flat);
        let mut acc = V4_ZERO;
        for a in 0..4 {
            let mut da = V4_ZERO;
            for mu in 0..4 {
                let w = cd.vb.e[a][mu];
                if w != 0.0 {
                    v4_axpy_re(w, &p[mu].v[flat], &mut da);
                }
            }
            let term = match f.kind {
                FieldKind::Spinor => {
                    let cov = v4_add(&da, &cd.sigma[a].apply(&f.v[flat]));
                    gamma_up[a].apply(&cov)
                }
                FieldKind::Cospinor => {
                    let cov = v4_sub(&da, &cd.sigma[a].apply_left(&f.v[flat]));
                    gamma_up[a].apply_left(&cov)
                }
            };
            acc = v4_add(&acc, &term);
        }
        out.v[flat] = acc;
    });
    Ok(out)
}

/// The Dirac operator: (-i slash + m) on spinors, (+i slash + m) on
/// cospinors.
pub fn dirac_apply(
    f: &SpinorGridField,
    frames: &FrameGrid,
    rep: &GammaRep,
    mass: f64,
) -> Result<SpinorGridField, GeometryError> {
    let slash = slash_apply(f, frames, rep)?;
    let iunit = match f.kind {
        FieldKind::Spinor => c(0.0, -1.0),
        FieldKind::Cospinor => c(0.0, 1.0),
    };
    let mut out = SpinorGridField::zero(f.grid, f.kind, slash.margin);
    f.grid.each_interior(slash.margin, |_, flat| {
        out.v[flat] = v4_add(&v4_scale(iunit, &slash.v[flat]), &v4_scale(cr(mass), &f.v[flat]));
    });
    Ok(out)
}

/// Future-directed on-shell momentum with the given spatial part.
pub fn on_shell_momentum(mass: f64, kspace: [f64; 3]) -> [f64; 4] {
    let k2 = kspace[0] * kspace[0] + kspace[1] * kspace[1] + kspace[2] * kspace[2];
    [(mass * mass + k2).sqrt(), kspace[0], kspace[1], kspace[2]]
}

fn minkowski_dot(k: &[f64; 4], x: &[f64; 4]) -> f64 {
    k[0] * x[0] - k[1] * x[1] - k[2] * x[2] - k[3] * x[3]
}

/// Exact plane-wave solution of the grid Dirac equation's continuum limit:
/// spinors u0 exp(-i k.x) with (kslash) u0 = m u0 via u0 = (kslash + m) w,
/// cospinors v0 exp(+i k.x) with v0 (kslash) = m v0 via v0 = w (kslash + m).
pub fn plane_wave(
    rep: &GammaRep,
    grid: Grid4,
    kind: FieldKind,
    k: [f64; 4],
    w: V4,
    mass: f64,
) -> SpinorGridField {
    let kslash = rep.gamma_vec(&k);
    let ampl = match kind {
        FieldKind::Spinor => {
            let mut m = kslash;
            for i in 0..4 {
                m.0[i][i] += cr(mass);
            }
            m.apply(&w)
        }
        FieldKind::Cospinor => {
            let mut m = kslash;
            for i in 0..4 {
                m.0[i][i] += cr(mass);
            }
            m.apply_left(&w)
        }
    };
    let sign = match kind {
        FieldKind::Spinor => -1.0,
        FieldKind::Cospinor => 1.0,
    };
    SpinorGridField::from_fn(grid, kind, |x| {
        let phase = Complex64::from_polar(1.0, sign * minkowski_dot(&k, &x));
        v4_scale(phase, &ampl)
    })
}

/// Gaussian-modulated plane wave, a generic smooth compactly concentrated
/// test field (not a solution).
pub fn modulated_gaussian(
    grid: Grid4,
    kind: FieldKind,
    center: [f64; 4],
    width: f64,
    k: [f64; 4],
    pol: V4,
) -> SpinorGridField {
    SpinorGridField::from_fn(grid, kind, |x| {
        let mut r2 = 0.0;
        for i in 0..4 {
            let d = x[i] - center[i];
            r2 += d * d;
        }
        let env = (-r2 / (width * width)).exp();
        let phase = Complex64::from_polar(env, -minkowski_dot(&k, &x));
        v4_scale(phase, &pol)
    })
}

/// u -> u^+ = u^dagger A and v -> A^{-1} vbar^T; swaps the kind.
pub fn plus_map(f: &SpinorGridField, pair: &AdjointPair) -> SpinorGridField {
    let ainv = pair.a.inv().expect("adjoint matrix invertible");
    let (kind, op): (FieldKind, &dyn Fn(&V4) -> V4) = match f.kind {
        FieldKind::Spinor => (FieldKind::Cospinor, &|u: &V4| pair.a.apply_left(&v4_conj(u))),
        FieldKind::Cospinor => (FieldKind::Spinor, &|v: &V4| ainv.apply(&v4_conj(v))),
    };
    let mut out = SpinorGridField::zero(f.grid, kind, f.margin);
    f.grid.each_interior(f.margin, |_, flat| {
        out.v[flat] = op(&f.v[flat]);
    });
    out
}

/// u -> u^c = C^{-1} ubar and v -> v^c = vbar C; preserves the kind.
pub fn charge_map(f: &SpinorGridField, pair: &AdjointPair) -> SpinorGridField {
    let cinv = pair.c.inv().expect("charge matrix invertible");
    let op: &dyn Fn(&V4) -> V4 = match f.kind {
        FieldKind::Spinor => &|u: &V4| cinv.apply(&v4_conj(u)),
        FieldKind::Cospinor => &|v: &V4| pair.c.apply_left(&v4_conj(v)),
    };
    let mut out = SpinorGridField::zero(f.grid, f.kind, f.margin);
    f.grid.each_interior(f.margin, |_, flat| {
        out.v[flat] = op(&f.v[flat]);
    });
    out
}

/// Integral of the pointwise pairing v(x) u(x) against the metric volume
/// element over the common valid region.
pub fn pair_integral(
    v: &SpinorGridField,
    u: &SpinorGridField,
    frames: &FrameGrid,
) -> Complex64 {
    assert_eq!(v.kind, FieldKind::Cospinor, "first argument must be a cospinor");
    assert_eq!(u.kind, FieldKind::Spinor, "second argument must be a spinor");
    assert_eq!(v.grid, u.grid, "grid mismatch");
    assert_eq!(v.grid, frames.grid, "grid mismatch");
    let margin = v.margin.max(u.margin);
    let hvol = v.grid.h[0] * v.grid.h[1] * v.grid.h[2] * v.grid.h[3];
    let mut acc = c(0.0, 0.0);
    v.grid.each_interior(margin, |_, flat| {
        acc += row_dot(&v.v[flat], &u.v[flat]) * cr(frames.at(flat).sqrt_det * hvol);
    });
    acc
}

/// Compactly supported rotation of the frame family: at family parameter
/// eps the frame is rotated by exp(eps * rate * profile(x)) acting on the
/// spatial legs. Compact support keeps the induced delta-e admissible for
/// integration by parts.
#[derive(Clone, Copy)]
pub struct FrameTwist {
    pub rate: [f64; 3],
    pub center: [f64; 4],
    pub width: f64,
}

/// First variation of the slash operator along a metric perturbation, with
/// the frame family induced by Gram-Schmidt (optionally composed with an
/// eps-dependent local frame rotation, which changes delta-e but must not
/// change paired on-shell values).
pub struct VariationProblem<'a> {
    pub rep: &'a GammaRep,
    pub base: &'a MetricField,
    pub delta: &'a SymTensorField,
    pub frames: &'a FrameGrid,
    pub mass: f64,
    /// Step for the centered difference in the family parameter.
    pub frame_step: f64,
    /// Extra frame rotation along the family.
    pub frame_twist: Option<FrameTwist>,
}

struct VariationCoeffs {
    /// phi1[c][b] = delta e^c_beta e_b^beta.
    phi1: [[f64; 4]; 4],
    /// phi[a][b] = delta g^{alpha beta} e^a_alpha e^b_beta.
    phi: [[f64; 4]; 4],
    /// delta g_{alpha beta} g^{alpha beta}.
    trace: f64,
}

fn variation_coeffs(p: &VariationProblem) -> Result<Vec<VariationCoeffs>, GeometryError> {
    let grid = p.frames.grid;
    let eps = p.frame_step;
    let gp = p.base.perturbed(p.delta, eps);
    let gm = p.base.perturbed(p.delta, -eps);
    // rotation of the coframe rows by exp(s * rate * profile(x))
    let twist = |x: [f64; 4], s: f64, ecov: [[f64; 4]; 4]| -> [[f64; 4]; 4] {
        let tw = match &p.frame_twist {
            None => return ecov,
            Some(tw) => tw,
        };
        let (phi, _) = bump_profile(x, tw.center, tw.width);
        let ang = s * phi;
        let r = spatial_rotation([tw.rate[0] * ang, tw.rate[1] * ang, tw.rate[2] * ang]);
        let mut out = [[0.0; 4]; 4];
        for a in 0..4 {
            for mu in 0..4 {
                let mut acc = 0.0;
                for b in 0..4 {
                    acc += r[a][b] * ecov[b][mu];
                }
                out[a][mu] = acc;
            }
        }
        out
    };
    let mut out = Vec::with_capacity(grid.len());
    let mut err = None;
    grid.each(|idx, flat| {
        if err.is_some() {
            return;
        }
        let x = grid.point(idx);
        let g = p.base.eval(x);
        let ginv = match invert_metric(&g) {
            Ok((_, gi)) => gi,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let dg = p.delta.eval(x);
        // delta of the inverse metric: -ginv dg ginv
        let mut dginv = SYM4_ZERO;
        for al in 0..4 {
            for be in 0..4 {
                let mut s = 0.0;
                for mu in 0..4 {
                    for nu in 0..4 {
                        s -= ginv[al][mu] * dg[mu][nu] * ginv[nu][be];
                    }
                }
                dginv[al][be] = s;
            }
        }
        let mut trace = 0.0;
        for al in 0..4 {
            for be in 0..4 {
                trace += dg[al][be] * ginv[al][be];
            }
        }
        let base_vb = p.frames.at(flat).vb;
        let vp = match vierbein(&gp, x) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let vm = match vierbein(&gm, x) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let ep = twist(x, eps, vp.ecov);
        let em = twist(x, -eps, vm.ecov);
        let mut decov = [[0.0f64; 4]; 4];
        for a in 0..4 {
            for mu in 0..4 {
                decov[a][mu] = (ep[a][mu] - em[a][mu]) / (2.0 * eps);
            }
        }
        let mut phi1 = [[0.0f64; 4]; 4];
        for cc in 0..4 {
            for b in 0..4 {
                let mut s = 0.0;
                for be in 0..4 {
                    s += decov[cc][be] * base_vb.e[b][be];
                }
                phi1[cc][b] = s;
            }
        }
        let mut phi = [[0.0f64; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let mut s = 0.0;
                for al in 0..4 {
                    for be in 0..4 {
                        s += dginv[al][be] * base_vb.ecov[a][al] * base_vb.ecov[b][be];
                    }
                }
                phi[a][b] = s;
            }
        }
        out.push(VariationCoeffs { phi1, phi, trace });
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(out)
}

/// Covariant frame derivatives nabla_a f for all four frame directions.
fn covariant_frame_derivatives(
    f: &SpinorGridField,
    frames: &FrameGrid,
) -> Result<[SpinorGridField; 4], GeometryError> {
    let p = coordinate_partials(f)?;
    let margin = f.margin + 2;
    let mut out = [
        SpinorGridField::zero(f.grid, f.kind, margin),
        SpinorGridField::zero(f.grid, f.kind, margin),
        SpinorGridField::zero(f.grid, f.kind, margin),
        SpinorGridField::zero(f.grid, f.kind, margin),
    ];
    f.grid.each_interior(margin, |_, flat| {
        let cd = frames.at(flat);
        for a in 0..4 {
            let mut da = V4_ZERO;
            for mu in 0..4 {
                let w = cd.vb.e[a][mu];
                if w != 0.0 {
                    v4_axpy_re(w, &p[mu].v[flat], &mut da);
                }
            }
            out[a].v[flat] = match f.kind {
                FieldKind::Spinor => v4_add(&da, &cd.sigma[a].apply(&f.v[flat])),
                FieldKind::Cospinor => v4_sub(&da, &cd.sigma[a].apply_left(&f.v[flat])),
            };
        }
    });
    Ok(out)
}

/// Covariant divergence nabla_b Y^b of a frame-indexed family of fields of
/// one kind: sum_b [e_b^mu d_mu Y^b + Gammahat^b_{bc} Y^c] plus the spin
/// term, +sigma_b Y^b on spinors and -Y^b sigma_b on cospinors.
fn covariant_divergence(
    y: &[SpinorGridField; 4],
    frames: &FrameGrid,
) -> Result<SpinorGridField, GeometryError> {
    let kind = y[0].kind;
    let mut base_margin = 0;
    for f in y.iter() {
        assert_eq!(f.kind, kind, "mixed kinds in divergence");
        base_margin = base_margin.max(f.margin);
    }
    let grid = y[0].grid;
    let mut parts = Vec::with_capacity(4);
    for f in y.iter() {
        parts.push(coordinate_partials(f)?);
    }
    let margin = base_margin + 2;
    let mut out = SpinorGridField::zero(grid, kind, margin);
    grid.each_interior(margin, |_, flat| {
        let cd = frames.at(flat);
        let mut acc = V4_ZERO;
        for b in 0..4 {
            for mu in 0..4 {
                let w = cd.vb.e[b][mu];
                if w != 0.0 {
                    v4_axpy_re(w, &parts[b][mu].v[flat], &mut acc);
                }
            }
            let spin = match kind {
                FieldKind::Spinor => cd.sigma[b].apply(&y[b].v[flat]),
                FieldKind::Cospinor => v4_scale(cr(-1.0), &cd.sigma[b].apply_left(&y[b].v[flat])),
            };
            acc = v4_add(&acc, &spin);
        }
        for cc in 0..4 {
            let w = cd.gamma_trace[cc];
            if w != 0.0 {
                v4_axpy_re(w, &y[cc].v[flat], &mut acc);
            }
        }
        out.v[flat] = acc;
    });
    Ok(out)
}

/// Both the full six-term first variation of the slash operator applied to
/// `f`, and the two-term part that survives on-shell pairing:
/// (1/4) phi^{ab} nabla_a f gamma_b + (1/4) nabla_b(phi^{ab} f gamma_a)
/// in the cospinor convention (mirrored for spinors).
pub fn variation_terms(
    p: &VariationProblem,
    f: &SpinorGridField,
) -> Result<(SpinorGridField, SpinorGridField), GeometryError> {
    assert_eq!(f.grid, p.frames.grid, "grid mismatch");
    let coeffs = variation_coeffs(p)?;
    let grid = f.grid;
    let rep = p.rep;
    let gamma_up: [M4; 4] = [
        rep.gamma[0].scale_re(ETA_DIAG[0]),
        rep.gamma[1].scale_re(ETA_DIAG[1]),
        rep.gamma[2].scale_re(ETA_DIAG[2]),
        rep.gamma[3].scale_re(ETA_DIAG[3]),
    ];
    // Pair matrices entering the delta-e terms: v gamma_c gamma^b on
    // cospinors, gamma^b gamma_c u on spinors.
    let mut pairm = [[M4::zero(); 4]; 4];
    for cc in 0..4 {
        for b in 0..4 {
            pairm[cc][b] = match f.kind {
                FieldKind::Cospinor => rep.gamma[cc].mul(&gamma_up[b]),
                FieldKind::Spinor => gamma_up[b].mul(&rep.gamma[cc]),
            };
        }
    }
    let phi1_matrix = |flat: usize| -> M4 {
        let co = &coeffs[flat];
        let mut m = M4::zero();
        for cc in 0..4 {
            for b in 0..4 {
                let w = co.phi1[cc][b];
                if w != 0.0 {
                    m = m.add(&pairm[cc][b].scale_re(w));
                }
            }
        }
        m
    };
    // signs: the delta-e and trace terms carry opposite i-phases for the two
    // kinds; D is the matching Dirac operator in both.
    let (c1, c2, c3, c4) = match f.kind {
        FieldKind::Cospinor => (c(0.0, -0.25), c(0.0, 0.25), c(0.0, -0.125), c(0.0, 0.125)),
        FieldKind::Spinor => (c(0.0, 0.25), c(0.0, -0.25), c(0.0, 0.125), c(0.0, -0.125)),
    };
    let df = dirac_apply(f, p.frames, rep, p.mass)?;
    // T1 = c1 D(X), X = phi1-weighted matrix action on f
    let mut xf = SpinorGridField::zero(grid, f.kind, f.margin);
    grid.each_interior(f.margin, |_, flat| {
        let m = phi1_matrix(flat);
        xf.v[flat] = match f.kind {
            FieldKind::Spinor => m.apply(&f.v[flat]),
            FieldKind::Cospinor => m.apply_left(&f.v[flat]),
        };
    });
    let t1 = dirac_apply(&xf, p.frames, rep, p.mass)?.scale(c1);
    // T2 = c2 phi1-weighted action on D f
    let mut t2 = SpinorGridField::zero(grid, f.kind, df.margin);
    grid.each_interior(df.margin, |_, flat| {
        let m = phi1_matrix(flat);
        let val = match f.kind {
            FieldKind::Spinor => m.apply(&df.v[flat]),
            FieldKind::Cospinor => m.apply_left(&df.v[flat]),
        };
        t2.v[flat] = v4_scale(c2, &val);
    });
    // T3 = c3 D(trace f), T4 = c4 trace D f
    let tf = f.scale_by(|flat| cr(coeffs[flat].trace));
    let t3 = dirac_apply(&tf, p.frames, rep, p.mass)?.scale(c3);
    let t4 = df.scale_by(|flat| cr(coeffs[flat].trace)).scale(c4);
    // T5 = (1/4) phi^{ab} (nabla_a f) gamma_b (cospinor) or mirrored
    let nab = covariant_frame_derivatives(f, p.frames)?;
    let mut t5 = SpinorGridField::zero(grid, f.kind, f.margin + 2);
    grid.each_interior(f.margin + 2, |_, flat| {
        let co = &coeffs[flat];
        let mut acc = V4_ZERO;
        for b in 0..4 {
            let mut vb = V4_ZERO;
            for a in 0..4 {
                let w = co.phi[a][b];
                if w != 0.0 {
                    v4_axpy_re(w, &nab[a].v[flat], &mut vb);
                }
            }
            let term = match f.kind {
                FieldKind::Spinor => rep.gamma[b].apply(&vb),
                FieldKind::Cospinor => rep.gamma[b].apply_left(&vb),
            };
            acc = v4_add(&acc, &term);
        }
        t5.v[flat] = v4_scale(cr(0.25), &acc);
    });
    // T6 = (1/4) nabla_b (phi^{ab} f gamma_a) (cospinor) or mirrored
    let mut yb = [
        SpinorGridField::zero(grid, f.kind, f.margin),
        SpinorGridField::zero(grid, f.kind, f.margin),
        SpinorGridField::zero(grid, f.kind, f.margin),
        SpinorGridField::zero(grid, f.kind, f.margin),
    ];
    grid.each_interior(f.margin, |_, flat| {
        let co = &coeffs[flat];
        let mut gf = [V4_ZERO; 4];
        for a in 0..4 {
            gf[a] = match f.kind {
                FieldKind::Spinor => rep.gamma[a].apply(&f.v[flat]),
                FieldKind::Cospinor => rep.gamma[a].apply_left(&f.v[flat]),
            };
        }
        for b in 0..4 {
            let mut acc = V4_ZERO;
            for a in 0..4 {
                let w = co.phi[a][b];
                if w != 0.0 {
                    v4_axpy_re(w, &gf[a], &mut acc);
                }
            }
            yb[b].v[flat] = acc;
        }
    });
    let t6 = covariant_divergence(&yb, p.frames)?.scale(cr(0.25));
    let two_term = t5.add(&t6);
    let full = t1.add(&t2).add(&t3).add(&t4).add(&two_term);
    Ok((full, two_term))
}

/// The full first variation of the slash operator applied to `f`.
pub fn dirac_variation(
    p: &VariationProblem,
    f: &SpinorGridField,
) -> Result<SpinorGridField, GeometryError> {
    Ok(variation_terms(p, f)?.0)
}

/// Centered finite-difference comparator for the variation: the slash
/// operator of g +/- eps delta applied to the same field, differenced in
/// the family parameter. Uses the plain Gram-Schmidt frame family.
pub fn slash_fd_variation(
    rep: &GammaRep,
    base: &MetricField,
    delta: &SymTensorField,
    f: &SpinorGridField,
    eps: f64,
) -> Result<SpinorGridField, GeometryError> {
    let gp = base.perturbed(delta, eps);
    let gm = base.perturbed(delta, -eps);
    let fp = FrameGrid::build(&gp, rep, f.grid)?;
    let fm = FrameGrid::build(&gm, rep, f.grid)?;
    let sp = slash_apply(f, &fp, rep)?;
    let sm = slash_apply(f, &fm, rep)?;
    Ok(sp.sub(&sm).scale(cr(0.5 / eps)))
}

/// Real symmetric-tensor-valued grid field.
pub struct TensorGridField {
    pub grid: Grid4,
    pub margin: usize,
    pub t: Vec<[[f64; 4]; 4]>,
}

/// Classical stress-energy tensor of a spinor field,
/// T_ab = (i/2) (u^+ gamma_(a nabla_b) u - nabla_(a u^+ gamma_b) u),
/// frame components, symmetrized in (a, b). Returns the field and the worst
/// imaginary part discarded (the form is real on exact arithmetic).
pub fn semt_classical(
    u: &SpinorGridField,
    frames: &FrameGrid,
    rep: &GammaRep,
    pair: &AdjointPair,
) -> Result<(TensorGridField, f64), GeometryError> {
    assert_eq!(u.kind, FieldKind::Spinor, "stress-energy input must be a spinor");
    assert_eq!(u.grid, frames.grid, "grid mismatch");
    let up = plus_map(u, pair);
    let nu = covariant_frame_derivatives(u, frames)?;
    let nup = covariant_frame_derivatives(&up, frames)?;
    let margin = u.margin + 2;
    let mut out = TensorGridField {
        grid: u.grid,
        margin,
        t: alloc::vec![[[0.0; 4]; 4]; u.grid.len()],
    };
    let ihalf = c(0.0, 0.5);
    let mut worst_im: f64 = 0.0;
    u.grid.each_interior(margin, |_, flat| {
        for a in 0..4 {
            for b in 0..=a {
                // u^+ gamma_(a nabla_b) u
                let fwd = row_dot(&up.v[flat], &rep.gamma[a].apply(&nu[b].v[flat]))
                    + row_dot(&up.v[flat], &rep.gamma[b].apply(&nu[a].v[flat]));
                // nabla_(a u^+ gamma_b) u
                let bwd = row_dot(&nup[a].v[flat], &rep.gamma[b].apply(&u.v[flat]))
                    + row_dot(&nup[b].v[flat], &rep.gamma[a].apply(&u.v[flat]));
                let val = ihalf * (fwd - bwd) * 0.5;
                worst_im = worst_im.max(val.im.abs());
                out.t[flat][a][b] = val.re;
                out.t[flat][b][a] = val.re;
            }
        }
    });
    Ok((out, worst_im))
}

/// Worst value over the grid of the covariant divergence nabla^a T_ab.
pub fn semt_divergence_max(t: &TensorGridField, frames: &FrameGrid) -> Result<f64, GeometryError> {
    let margin = t.margin + 2;
    t.grid.check_margin(margin)?;
    let grid = t.grid;
    let hinv = [
        1.0 / (12.0 * grid.h[0]),
        1.0 / (12.0 * grid.h[1]),
        1.0 / (12.0 * grid.h[2]),
        1.0 / (12.0 * grid.h[3]),
    ];
    let mut worst: f64 = 0.0;
    grid.each_interior(margin, |_, flat| {
        let cd = frames.at(flat);
        // coordinate partials of every component at this point
        let mut dt = [[[0.0f64; 4]; 4]; 4]; // [mu][a][b]
        for mu in 0..4 {
            let stride = grid.stride(mu);
            let p2 = &t.t[flat + 2 * stride];
            let p1 = &t.t[flat + stride];
            let m1 = &t.t[flat - stride];
            let m2 = &t.t[flat - 2 * stride];
            for a in 0..4 {
                for b in 0..4 {
                    dt[mu][a][b] = (m2[a][b] - p2[a][b] + 8.0 * (p1[a][b] - m1[a][b])) * hinv[mu];
                }
            }
        }
        for b in 0..4 {
            let mut s = 0.0;
            for a in 0..4 {
                // frame directional derivative d_a T_ab
                let mut da = 0.0;
                for mu in 0..4 {
                    da += cd.vb.e[a][mu] * dt[mu][a][b];
                }
                // connection corrections for both tensor slots
                let mut corr = 0.0;
                for d in 0..4 {
                    corr += cd.gamma_frame[d][a][a] * t.t[flat][d][b];
                    corr += cd.gamma_frame[d][a][b] * t.t[flat][a][d];
                }
                s += ETA_DIAG[a] * (da - corr);
            }
            worst = worst.max(s.abs());
        }
    });
    Ok(worst)
}
