//! The double covering of the proper orthochronous Lorentz group by the
//! identity component of the spin group, realized concretely on 4x4 matrices
//! in the chiral representation.
//!
//! The covering map is the trace formula L^a_b(S) = 1/4 eta^{ac} Tr(g_c S g_b
//! S^{-1}); its differential and the inverse of the differential act on the
//! six-dimensional bivector span; lifting goes through a boost-rotation polar
//! split, matrix logarithms, and exponentiation in the representation.

use crate::dirac::{
    find_adjoint_conjugation, monomial_grade, AdjointPair, GammaRep, ETA_DIAG,
};
use crate::linalg::{cr, sym_eig, M4};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

pub type Real4 = [[f64; 4]; 4];

pub fn r4_id() -> Real4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        m[i][i] = 1.0;
    }
    m
}

pub fn r4_mul(a: &Real4, b: &Real4) -> Real4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            if a[i][k] == 0.0 {
                continue;
            }
            for j in 0..4 {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    m
}

pub fn r4_transpose(a: &Real4) -> Real4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = a[j][i];
        }
    }
    m
}

pub fn r4_max_dev(a: &Real4, b: &Real4) -> f64 {
    let mut d = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            d = d.max((a[i][j] - b[i][j]).abs());
        }
    }
    d
}

pub fn r4_det(a: &Real4) -> f64 {
    let flat: alloc::vec::Vec<f64> = a.iter().flatten().copied().collect();
    crate::linalg::real_det(4, &flat)
}

/// eta as a matrix; numerically its own inverse.
fn eta4() -> Real4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        m[i][i] = ETA_DIAG[i];
    }
    m
}

#[derive(Clone, PartialEq, Debug)]
pub enum SpinError {
    NotInSpinGroup { why: &'static str },
    BadGenerator { defect: f64 },
    NotLorentz { defect: f64 },
    /// Rotation angle within 1e-10 of pi: the matrix logarithm branch is
    /// ambiguous there.
    LogBranchFailure { angle: f64 },
}

impl core::fmt::Display for SpinError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SpinError::NotInSpinGroup { why } => write!(f, "not in the spin group: {why}"),
            SpinError::BadGenerator { defect } => {
                write!(f, "generator is not eta-antisymmetric (defect {defect:.3e})")
            }
            SpinError::NotLorentz { defect } => {
                write!(f, "matrix is not proper orthochronous Lorentz (defect {defect:.3e})")
            }
            SpinError::LogBranchFailure { angle } => {
                write!(f, "rotation angle {angle:.12} is at the log branch cut")
            }
        }
    }
}

/// Proper orthochronous Lorentz matrix.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct LorentzMatrix {
    pub l: Real4,
}

impl LorentzMatrix {
    pub fn new(l: Real4) -> Result<LorentzMatrix, SpinError> {
        let defect = lorentz_defect(&l);
        // Roundoff in the Gram residual grows like the squared entry scale
        // and in the determinant like its fourth power, so the gate must
        // follow suit: composite boosts reach entries ~e^rapidity while a
        // genuinely non-Lorentz matrix of that size has defect ~scale^2.
        let mut s = 0.0f64;
        for row in &l {
            for v in row {
                s = s.max(v.abs());
            }
        }
        let q = 1.0 + s * s;
        if defect > 1e-11 * q * q {
            return Err(SpinError::NotLorentz { defect });
        }
        Ok(LorentzMatrix { l })
    }

    pub fn identity() -> LorentzMatrix {
        LorentzMatrix { l: r4_id() }
    }

    pub fn compose(&self, o: &LorentzMatrix) -> LorentzMatrix {
        LorentzMatrix {
            l: r4_mul(&self.l, &o.l),
        }
    }

    /// Exact inverse through the metric: eta L^T eta.
    pub fn inverse(&self) -> LorentzMatrix {
        let e = eta4();
        LorentzMatrix {
            l: r4_mul(&e, &r4_mul(&r4_transpose(&self.l), &e)),
        }
    }
}

/// Max deviation from L^T eta L = eta, det L = 1, L^0_0 >= 1.
pub fn lorentz_defect(l: &Real4) -> f64 {
    let e = eta4();
    let g = r4_mul(&r4_transpose(l), &r4_mul(&e, l));
    let mut d = r4_max_dev(&g, &e);
    d = d.max((r4_det(l) - 1.0).abs());
    if l[0][0] < 1.0 - 1e-9 {
        d = d.max(1.0 - l[0][0]);
    }
    d
}

/// Bivector with coefficients on the six monomials g_a g_b, a < b, in
/// lexicographic order (0,1),(0,2),(0,3),(1,2),(1,3),(2,3).
#[derive(Clone, Copy, PartialEq, Debug, Default)]
pub struct Bivector {
    pub b: [f64; 6],
}

pub const BIVECTOR_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Membership {
    NotPin,
    PinOnly,
    SpinNotIdentityComponent,
    SpinZero,
}

/// Chiral-representation context: gamma matrices, the adjoint matrix used by
/// the component test, and the cached represented monomial basis.
pub struct SpinAlgebra {
    pub rep: GammaRep,
    pub adjoint: AdjointPair,
    monomials: [M4; 16],
}

impl SpinAlgebra {
    pub fn weyl() -> SpinAlgebra {
        let rep = GammaRep::weyl();
        let adjoint = find_adjoint_conjugation(&rep).expect("chiral rep admits A and C");
        let mut monomials = [M4::zero(); 16];
        for (i, slot) in monomials.iter_mut().enumerate() {
            *slot = rep.monomial(i);
        }
        SpinAlgebra {
            rep,
            adjoint,
            monomials,
        }
    }

    /// Coefficients on the represented monomial basis, via trace pairing.
    pub fn decompose(&self, x: &M4) -> [Complex64; 16] {
        let mut out = [cr(0.0); 16];
        for i in 0..16 {
            let m = &self.monomials[i];
            // Monomials square to +-1; the trace pairing needs that sign.
            let sq = m.mul(m).0[0][0].re;
            out[i] = m.mul(x).tr() * cr(sq / 4.0);
        }
        out
    }

    /// Pin / Spin / identity-component classification.
    pub fn membership(&self, s: &M4) -> Membership {
        let tol = 1e-10;
        let scale = s.max_abs();
        if scale == 0.0 {
            return Membership::NotPin;
        }
        if (s.det() - cr(1.0)).norm() > tol * (1.0 + scale.powi(4)) {
            return Membership::NotPin;
        }
        let Some(sinv) = s.inv() else {
            return Membership::NotPin;
        };
        // Membership in the real algebra: real coefficients throughout.
        let coeffs = self.decompose(s);
        if coeffs.iter().any(|z| z.im.abs() > tol * (1.0 + scale)) {
            return Membership::NotPin;
        }
        // Conjugation must keep the generator span inside itself, with real
        // coefficients.
        for a in 0..4 {
            let t = s.mul(&self.rep.gamma[a]).mul(&sinv);
            let tscale = 1.0 + t.max_abs();
            let d = self.decompose(&t);
            for (i, z) in d.iter().enumerate() {
                let bad = if monomial_grade(i) == 1 {
                    z.im.abs() > tol * tscale
                } else {
                    z.norm() > tol * tscale
                };
                if bad {
                    return Membership::NotPin;
                }
            }
        }
        let odd = coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| monomial_grade(*i) % 2 == 1)
            .fold(0.0f64, |m, (_, z)| m.max(z.norm()));
        if odd > tol * (1.0 + scale) {
            return Membership::PinOnly;
        }
        let a = &self.adjoint.a;
        let sas = s.adj().mul(a).mul(s);
        let ascale = 1.0 + sas.max_abs();
        if sas.sub(a).max_abs() <= tol * ascale {
            Membership::SpinZero
        } else if sas.add(a).max_abs() <= tol * ascale {
            Membership::SpinNotIdentityComponent
        } else {
            Membership::NotPin
        }
    }

    /// Trace formula without membership validation; used internally and by
    /// finite-difference checks.
    pub fn covering_map_raw(&self, s: &M4, sinv: &M4) -> Real4 {
        let mut l = [[0.0; 4]; 4];
        for b in 0..4 {
            let conj = s.mul(&self.rep.gamma[b]).mul(sinv);
            for a in 0..4 {
                l[a][b] = 0.25 * ETA_DIAG[a] * self.rep.gamma[a].mul(&conj).tr().re;
            }
        }
        l
    }

    /// The double covering homomorphism, defined on the identity component.
    pub fn covering_map(&self, s: &M4) -> Result<LorentzMatrix, SpinError> {
        if self.membership(s) != Membership::SpinZero {
            return Err(SpinError::NotInSpinGroup {
                why: "matrix is not in the identity component",
            });
        }
        let sinv = s.inv().expect("membership already checked invertibility");
        LorentzMatrix::new(self.covering_map_raw(s, &sinv))
    }

    /// Differential of the covering map at the identity on a represented
    /// bivector s: dL^a_b(s) = 1/4 eta^{ac} Tr([g_b, g_c] s).
    pub fn d_covering(&self, s: &M4) -> Real4 {
        let mut l = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let comm = self.rep.gamma[b].commutator(&self.rep.gamma[a]);
                l[a][b] = 0.25 * ETA_DIAG[a] * comm.mul(s).tr().re;
            }
        }
        l
    }

    /// Inverse of the differential: lambda -> 1/4 lambda^b_a eta^{ac} g_b g_c,
    /// collected on the ordered bivector basis.
    pub fn d_lambda_inverse(&self, lam: &Real4) -> Result<Bivector, SpinError> {
        // n^{bc} = lambda^b_a eta^{ac} must be antisymmetric.
        let mut n = [[0.0; 4]; 4];
        let mut scale = 1.0f64;
        for b in 0..4 {
            for cc in 0..4 {
                n[b][cc] = lam[b][cc] * ETA_DIAG[cc];
                scale = scale.max(lam[b][cc].abs());
            }
        }
        let mut defect = 0.0f64;
        for b in 0..4 {
            for cc in 0..4 {
                defect = defect.max((n[b][cc] + n[cc][b]).abs());
            }
        }
        if defect > 1e-12 * scale {
            return Err(SpinError::BadGenerator { defect });
        }
        let mut biv = Bivector::default();
        for (k, &(b, cc)) in BIVECTOR_PAIRS.iter().enumerate() {
            biv.b[k] = 0.5 * n[b][cc];
        }
        Ok(biv)
    }

    /// Represented bivector sum(b_k g_{a_k} g_{b_k}).
    pub fn represent_bivector(&self, biv: &Bivector) -> M4 {
        let mut m = M4::zero();
        for (k, &(a, b)) in BIVECTOR_PAIRS.iter().enumerate() {
            if biv.b[k] != 0.0 {
                m = m.add(&self.rep.gamma[a].mul(&self.rep.gamma[b]).scale_re(biv.b[k]));
            }
        }
        m
    }

    /// One-parameter boost curve c_i(t) = cosh(t) + sinh(t) g_0 g_i.
    pub fn boost_curve(&self, i: usize, t: f64) -> M4 {
        assert!((1..4).contains(&i));
        M4::id()
            .scale_re(t.cosh())
            .add(&self.rep.gamma[0].mul(&self.rep.gamma[i]).scale_re(t.sinh()))
    }

    /// One-parameter rotation curve d_ij(t) = cos(t) + sin(t) g_i g_j.
    pub fn rotation_curve(&self, i: usize, j: usize, t: f64) -> M4 {
        assert!((1..4).contains(&i) && (1..4).contains(&j) && i != j);
        M4::id()
            .scale_re(t.cos())
            .add(&self.rep.gamma[i].mul(&self.rep.gamma[j]).scale_re(t.sin()))
    }

    /// Lift of a proper orthochronous Lorentz matrix through the covering:
    /// polar split L = B R with B a symmetric boost and R a spatial rotation,
    /// matrix logs of both factors, the inverse differential, and the
    /// exponential in the representation. Defined up to the global sign; the
    /// representative with nonnegative real trace is returned (ties resolved
    /// by the first significant entry).
    pub fn lift(&self, lm: &LorentzMatrix) -> Result<M4, SpinError> {
        let l = &lm.l;
        // m = L L^T is symmetric positive definite; B = sqrt(m) is itself a
        // Lorentz boost, and log B = 1/2 Q log(D) Q^T is its generator.
        let mut flat = [0.0; 16];
        let m = r4_mul(l, &r4_transpose(l));
        for i in 0..4 {
            for j in 0..4 {
                flat[i * 4 + j] = m[i][j];
            }
        }
        let (d, q) = sym_eig(4, &flat);
        if d[0] <= 0.0 {
            return Err(SpinError::NotLorentz { defect: -d[0] });
        }
        let mut log_b = [[0.0; 4]; 4];
        let mut b_inv = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut s_log = 0.0;
                let mut s_inv = 0.0;
                for k in 0..4 {
                    s_log += 0.5 * q[i * 4 + k] * d[k].ln() * q[j * 4 + k];
                    s_inv += q[i * 4 + k] / d[k].sqrt() * q[j * 4 + k];
                }
                log_b[i][j] = s_log;
                b_inv[i][j] = s_inv;
            }
        }
        let r = r4_mul(&b_inv, l);
        // R is block diag(1, R3) with R3 in SO(3).
        let tr3 = r[1][1] + r[2][2] + r[3][3];
        let cos_angle = ((tr3 - 1.0) / 2.0).clamp(-1.0, 1.0);
        let angle = cos_angle.acos();
        if (angle - core::f64::consts::PI).abs() < 1e-10 {
            return Err(SpinError::LogBranchFailure { angle });
        }
        let factor = if angle < 1e-8 {
            1.0 + angle * angle / 6.0
        } else {
            angle / angle.sin()
        };
        let mut log_r = [[0.0; 4]; 4];
        for i in 1..4 {
            for j in 1..4 {
                log_r[i][j] = factor * 0.5 * (r[i][j] - r[j][i]);
            }
        }
        // Both logs are generators up to eigensolver roundoff; project back
        // onto the eta-antisymmetric subspace so the strict generator check
        // sees clean input.
        let boost_biv = self.d_lambda_inverse(&project_generator(&log_b))?;
        let rot_biv = self.d_lambda_inverse(&project_generator(&log_r))?;
        let mut s = self
            .represent_bivector(&boost_biv)
            .exp()
            .mul(&self.represent_bivector(&rot_biv).exp());
        // The eigensolve acts on L L^T, so the reconstruction error grows
        // like the fourth power of the entry scale. Newton steps against the
        // covering close the gap: with E = cover(S)^{-1} L the update
        // S <- S exp(dLambda^{-1}(E - I)) squares the residual, down to the
        // roundoff floor of forming E itself.
        let mut lmax = 0.0f64;
        for row in l {
            for v in row {
                lmax = lmax.max(v.abs());
            }
        }
        let floor = 1e-14 * (1.0 + lmax * lmax);
        for _ in 0..3 {
            let sinv = match s.inv() {
                Some(v) => v,
                None => break,
            };
            let cur = self.covering_map_raw(&s, &sinv);
            // E - I with E = eta cur^T eta L, the Lorentz inverse of cur
            // applied to the target.
            let mut de = [[0.0; 4]; 4];
            let mut dev = 0.0f64;
            for i in 0..4 {
                for j in 0..4 {
                    let mut acc = 0.0;
                    for k in 0..4 {
                        acc += ETA_DIAG[i] * cur[k][i] * ETA_DIAG[k] * l[k][j];
                    }
                    if i == j {
                        acc -= 1.0;
                    }
                    de[i][j] = acc;
                    dev = dev.max(acc.abs());
                }
            }
            if dev <= floor {
                break;
            }
            let delta = self.d_lambda_inverse(&project_generator(&de))?;
            s = s.mul(&self.represent_bivector(&delta).exp());
        }
        Ok(fix_global_sign(&s))
    }
}

/// Nearest eta-antisymmetric generator: antisymmetrize lambda * eta.
fn project_generator(lam: &Real4) -> Real4 {
    let mut out = [[0.0; 4]; 4];
    for b in 0..4 {
        for cc in 0..4 {
            let n_bc = lam[b][cc] * ETA_DIAG[cc];
            let n_cb = lam[cc][b] * ETA_DIAG[b];
            out[b][cc] = 0.5 * (n_bc - n_cb) * ETA_DIAG[cc];
        }
    }
    out
}

/// Chooses between S and -S: nonnegative real trace wins, exact ties fall to
/// the sign making the first significant entry positive real.
fn fix_global_sign(s: &M4) -> M4 {
    let t = s.tr().re;
    if t < -1e-12 {
        return s.neg();
    }
    if t > 1e-12 {
        return *s;
    }
    let cutoff = 1e-12 * s.max_abs();
    for i in 0..4 {
        for j in 0..4 {
            let e = s.0[i][j];
            if e.norm() > cutoff {
                if (e.re, e.im) >= (-e.re, -e.im) {
                    return *s;
                }
                return s.neg();
            }
        }
    }
    *s
}
