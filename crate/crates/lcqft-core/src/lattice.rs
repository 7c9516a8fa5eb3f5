//! Klein-Gordon operator on a finite 1+1 lattice: leapfrog Green operators,
//! the Cauchy-slice symplectic form, and the timeslice decomposition of a
//! source into a slab part plus an operator image.
//!
//! Fields are row-major over time rows, index `t * nx + x`. The operator is
//! the standard second-order stencil with zero ghost cells on every edge:
//!
//! ```text
//!   (K u)[t,x] = (u[t+1,x] - 2 u[t,x] + u[t-1,x]) / dt^2
//!              - (u[t,x+1] - 2 u[t,x] + u[t,x-1]) / dx^2
//!              + m^2 u[t,x].
//! ```
//!
//! The retarded inverse marches forward from two zero rows, so `K(E+ f) = f`
//! holds on rows `0 .. nt-2` (the last row's identity would need the ghost
//! value the march produced beyond the box). The advanced inverse is the
//! bitwise time reversal of the retarded march, with the mirrored identity
//! on rows `1 .. nt-1`, and the propagator is advanced minus retarded.
//!
//! The timeslice split uses a cutoff profile that is exactly 1 below the
//! slab and exactly 0 above it. Its commutator with `K` is formed pointwise
//! as `K(chi u) - chi K(u)`, which cancels bitwise wherever the profile is
//! constant across the three-row stencil: the slab part of the source is
//! then supported in the slab by construction, not up to rounding.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

/// Failures from lattice construction or field-shape mismatches.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeError {
    /// Grid too small for the stencils and slab margins to make sense.
    BadGeometry { nt: usize, nx: usize },
    /// Spacings must be strictly positive, mass nonnegative.
    BadSpacing { dt: f64, dx: f64, mass: f64 },
    /// Leapfrog stability bound violated (`dt <= dx/2` and `mass * dt <= 1`).
    CflViolation { dt: f64, limit: f64 },
    /// Field slice has the wrong number of entries.
    FieldLength { expected: usize, got: usize },
    /// Cutoff profile must have one entry per time row.
    CutoffLength { expected: usize, got: usize },
    /// Slab rows out of range, inverted, too thin, or without the two-row
    /// margins the solver identities need.
    BadSlab { lo: usize, hi: usize },
    /// Symplectic slices need both temporal neighbours on the grid.
    BadSliceRow { t: usize },
}

impl fmt::Display for LatticeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeError::BadGeometry { nt, nx } => {
                write!(f, "grid {nt} x {nx} too small (need nt >= 12, nx >= 8)")
            }
            LatticeError::BadSpacing { dt, dx, mass } => {
                write!(f, "invalid spacings dt={dt} dx={dx} mass={mass}")
            }
            LatticeError::CflViolation { dt, limit } => {
                write!(f, "time step {dt} exceeds stability limit {limit}")
            }
            LatticeError::FieldLength { expected, got } => {
                write!(f, "field has {got} entries, lattice needs {expected}")
            }
            LatticeError::CutoffLength { expected, got } => {
                write!(f, "cutoff profile has {got} entries, need {expected}")
            }
            LatticeError::BadSlab { lo, hi } => {
                write!(f, "slab rows [{lo}, {hi}] invalid for this grid")
            }
            LatticeError::BadSliceRow { t } => write!(f, "slice row {t} lacks a neighbour"),
        }
    }
}

/// Finite 1+1 grid with uniform spacings and a scalar mass.
#[derive(Debug, Clone)]
pub struct Lattice1p1 {
    pub nt: usize,
    pub nx: usize,
    pub dt: f64,
    pub dx: f64,
    pub mass: f64,
}

/// Result of the timeslice split `f = slab_part + K(solution_part)`.
///
/// `slab_part` vanishes exactly (as stored zeros) outside the slab rows;
/// `solution_part` is the advanced solve of the remainder and is compactly
/// supported between the slab and the top of the source's support. `cutoff`
/// is the per-row profile that produced the split.
#[derive(Debug, Clone)]
pub struct TimesliceSplit {
    pub slab_part: Vec<f64>,
    pub solution_part: Vec<f64>,
    pub cutoff: Vec<f64>,
}

impl Lattice1p1 {
    pub fn new(nt: usize, nx: usize, dt: f64, dx: f64, mass: f64) -> Result<Lattice1p1, LatticeError> {
        if nt < 12 || nx < 8 {
            return Err(LatticeError::BadGeometry { nt, nx });
        }
        if !(dt > 0.0) || !(dx > 0.0) || !(mass >= 0.0) {
            return Err(LatticeError::BadSpacing { dt, dx, mass });
        }
        let limit = if mass > 0.0 { (0.5 * dx).min(1.0 / mass) } else { 0.5 * dx };
        if dt > limit {
            return Err(LatticeError::CflViolation { dt, limit });
        }
        Ok(Lattice1p1 { nt, nx, dt, dx, mass })
    }

    pub fn len(&self) -> usize {
        self.nt * self.nx
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn idx(&self, t: usize, x: usize) -> usize {
        t * self.nx + x
    }

    fn check_field(&self, u: &[f64]) -> Result<(), LatticeError> {
        if u.len() != self.len() {
            return Err(LatticeError::FieldLength { expected: self.len(), got: u.len() });
        }
        Ok(())
    }

    /// Applies the operator with zero ghosts on all four edges.
    pub fn apply_k(&self, u: &[f64]) -> Result<Vec<f64>, LatticeError> {
        self.check_field(u)?;
        let (nt, nx) = (self.nt, self.nx);
        let inv_dt2 = 1.0 / (self.dt * self.dt);
        let inv_dx2 = 1.0 / (self.dx * self.dx);
        let m2 = self.mass * self.mass;
        let mut out = vec![0.0; u.len()];
        for t in 0..nt {
            for x in 0..nx {
                let u0 = u[t * nx + x];
                let up = if t + 1 == nt { 0.0 } else { u[(t + 1) * nx + x] };
                let um = if t == 0 { 0.0 } else { u[(t - 1) * nx + x] };
                let ur = if x + 1 == nx { 0.0 } else { u[t * nx + x + 1] };
                let ul = if x == 0 { 0.0 } else { u[t * nx + x - 1] };
                out[t * nx + x] =
                    (up - 2.0 * u0 + um) * inv_dt2 - (ur - 2.0 * u0 + ul) * inv_dx2 + m2 * u0;
            }
        }
        Ok(out)
    }

    fn march(&self, f: &[f64]) -> Vec<f64> {
        let (nt, nx) = (self.nt, self.nx);
        let dt2 = self.dt * self.dt;
        let inv_dx2 = 1.0 / (self.dx * self.dx);
        let m2 = self.mass * self.mass;
        let mut u = vec![0.0; nt * nx];
        for t in 0..nt - 1 {
            for x in 0..nx {
                let u0 = u[t * nx + x];
                let um = if t == 0 { 0.0 } else { u[(t - 1) * nx + x] };
                let ur = if x + 1 == nx { 0.0 } else { u[t * nx + x + 1] };
                let ul = if x == 0 { 0.0 } else { u[t * nx + x - 1] };
                let lap = (ur - 2.0 * u0 + ul) * inv_dx2;
                u[(t + 1) * nx + x] = 2.0 * u0 - um + dt2 * (lap - m2 * u0 + f[t * nx + x]);
            }
        }
        u
    }

    /// Retarded solve: the unique field vanishing on the bottom rows with
    /// `K(E+ f) = f` on rows `0 .. nt-2`. The value at a point depends only
    /// on source rows strictly below it, one cell of spatial spread per row.
    pub fn retarded(&self, f: &[f64]) -> Result<Vec<f64>, LatticeError> {
        self.check_field(f)?;
        Ok(self.march(f))
    }

    /// Advanced solve, the exact time reversal of the retarded march:
    /// `K(E- f) = f` on rows `1 .. nt-1`, support below the source.
    pub fn advanced(&self, f: &[f64]) -> Result<Vec<f64>, LatticeError> {
        self.check_field(f)?;
        let (nt, nx) = (self.nt, self.nx);
        let mut rev = vec![0.0; f.len()];
        for t in 0..nt {
            rev[t * nx..(t + 1) * nx].copy_from_slice(&f[(nt - 1 - t) * nx..(nt - t) * nx]);
        }
        let sol = self.march(&rev);
        let mut out = vec![0.0; f.len()];
        for t in 0..nt {
            out[t * nx..(t + 1) * nx].copy_from_slice(&sol[(nt - 1 - t) * nx..(nt - t) * nx]);
        }
        Ok(out)
    }

    /// The propagator, advanced minus retarded. Its image is annihilated by
    /// the operator on all interior rows, including across the source.
    pub fn green(&self, f: &[f64]) -> Result<Vec<f64>, LatticeError> {
        let plus = self.retarded(f)?;
        let minus = self.advanced(f)?;
        Ok(minus.iter().zip(&plus).map(|(a, r)| a - r).collect())
    }

    /// The bilinear pairing `sum f * (E h) dx dt`, antisymmetric up to the
    /// solver identities' edge rows.
    pub fn pairing(&self, f: &[f64], h: &[f64]) -> Result<f64, LatticeError> {
        self.check_field(f)?;
        let eh = self.green(h)?;
        let cell = self.dx * self.dt;
        Ok(f.iter().zip(&eh).map(|(a, b)| a * b).sum::<f64>() * cell)
    }

    /// Cauchy-slice symplectic form at time row `t` with centered time
    /// derivatives:
    ///
    /// ```text
    ///   sigma(u, v; t) = sum_x ( u * dv/dt - du/dt * v )(t, x) dx.
    /// ```
    ///
    /// Constant in `t` on rows `1 .. nt-2` whenever both fields are
    /// annihilated by the operator there.
    pub fn cauchy_symplectic(&self, u: &[f64], v: &[f64], t: usize) -> Result<f64, LatticeError> {
        self.check_field(u)?;
        self.check_field(v)?;
        if t == 0 || t + 1 >= self.nt {
            return Err(LatticeError::BadSliceRow { t });
        }
        let nx = self.nx;
        let inv2dt = 1.0 / (2.0 * self.dt);
        let mut acc = 0.0;
        for x in 0..nx {
            let vdot = (v[(t + 1) * nx + x] - v[(t - 1) * nx + x]) * inv2dt;
            let udot = (u[(t + 1) * nx + x] - u[(t - 1) * nx + x]) * inv2dt;
            acc += u[t * nx + x] * vdot - udot * v[t * nx + x];
        }
        Ok(acc * self.dx)
    }

    /// Pointwise commutator of the operator with a per-row cutoff profile:
    /// `K(chi u) - chi K(u)`. Wherever the profile is constant across the
    /// three-row stencil this cancels bitwise (multiplication by an exact
    /// 1.0 or 0.0 is reproduced term for term), so the result is exactly
    /// zero outside the profile's transition rows.
    pub fn cutoff_commutator(&self, chi: &[f64], u: &[f64]) -> Result<Vec<f64>, LatticeError> {
        if chi.len() != self.nt {
            return Err(LatticeError::CutoffLength { expected: self.nt, got: chi.len() });
        }
        self.check_field(u)?;
        let nx = self.nx;
        let mut cu = vec![0.0; u.len()];
        for t in 0..self.nt {
            for x in 0..nx {
                cu[t * nx + x] = chi[t] * u[t * nx + x];
            }
        }
        let k_cu = self.apply_k(&cu)?;
        let k_u = self.apply_k(u)?;
        let mut out = vec![0.0; u.len()];
        for t in 0..self.nt {
            for x in 0..nx {
                out[t * nx + x] = k_cu[t * nx + x] - chi[t] * k_u[t * nx + x];
            }
        }
        Ok(out)
    }

    /// Quintic transition profile: exactly 1 for rows at or below `lo`,
    /// exactly 0 for rows at or above `hi`, monotone `C^2` in between.
    pub fn slab_cutoff(&self, lo: usize, hi: usize) -> Result<Vec<f64>, LatticeError> {
        if lo < 2 || hi + 3 > self.nt || hi <= lo || hi - lo < 4 {
            return Err(LatticeError::BadSlab { lo, hi });
        }
        let mut chi = vec![0.0; self.nt];
        for (t, c) in chi.iter_mut().enumerate() {
            *c = if t <= lo {
                1.0
            } else if t >= hi {
                0.0
            } else {
                let s = (t - lo) as f64 / (hi - lo) as f64;
                1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
            };
        }
        Ok(chi)
    }

    /// Splits a source into a part supported in the slab rows `[lo, hi]`
    /// plus the operator image of a compactly supported field:
    ///
    /// ```text
    ///   f = slab_part + K(solution_part),
    ///   slab_part     = K(chi E f) - chi K(E f),
    ///   solution_part = E-(f - slab_part),
    /// ```
    ///
    /// with `chi` the profile from `slab_cutoff`. The propagator ignores
    /// the move: `E(slab_part) = E(f)` up to accumulated rounding.
    pub fn timeslice_decompose(
        &self,
        f: &[f64],
        lo: usize,
        hi: usize,
    ) -> Result<TimesliceSplit, LatticeError> {
        self.check_field(f)?;
        let chi = self.slab_cutoff(lo, hi)?;
        let u = self.green(f)?;
        let slab_part = self.cutoff_commutator(&chi, &u)?;
        let remainder: Vec<f64> = f.iter().zip(&slab_part).map(|(a, b)| a - b).collect();
        let solution_part = self.advanced(&remainder)?;
        Ok(TimesliceSplit { slab_part, solution_part, cutoff: chi })
    }
}
