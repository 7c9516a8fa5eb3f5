//! Causal structure on a finite spacetime lattice with site-dependent
//! propagation speed `c = sqrt(beta / h)`, in 1+1 or (size-guarded) 2+1
//! dimensions. Every continuum causal notion is bracketed by two discrete
//! apertures: `Inner` under-approximates the light cone (a step of `k`
//! cells needs `k dx <= c dt - slack`), `Outer` over-approximates it
//! (`k dx <= c dt + slack`), with slack half a cell (half a cell diagonal
//! in 2+1). Derived predicates inherit the bracket: convexity is
//! three-valued, domains of dependence come in an inner variant (escape
//! paths walk the outer adjacency) and an outer variant (escape paths walk
//! the inner adjacency), so the inner answer is always contained in the
//! outer one.
//!
//! Edges advance time by exactly one row and a zero spatial step is always
//! allowed, so same-row points are never causally related and time-ordered
//! repetition inside a region is what achronality rules out.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Hard cap on total lattice sites; 2+1 grids grow fast.
const MAX_SITES: usize = 1 << 22;

/// Tie guard when flooring step counts: protects exact half-integer speed
/// ratios from one-ulp rounding in `sqrt(beta/h) * dt / dx`.
const TIE: f64 = 1e-9;

/// Failures from lattice construction or causal queries.
#[derive(Debug, Clone, PartialEq)]
pub enum CausalError {
    BadGeometry { nt: usize, nspace: usize },
    BadSpacing { dt: f64, dx: f64 },
    BadSize { sites: usize },
    /// `beta` or `h` has the wrong length.
    BadField { expected: usize, got: usize },
    /// `beta` or `h` is not strictly positive at a site.
    BadSpeed { site: usize },
    MaskLength { expected: usize, got: usize },
    /// A region handed to a domain computation contains a causally
    /// ordered pair; the site is the later member of one such pair.
    NotAchronal { site: usize },
    BadSlab { lo: usize, hi: usize },
    /// Deformation regions must sit strictly below and above the slab.
    NotSlabSeparated,
    BadScale { scale: f64 },
}

impl fmt::Display for CausalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CausalError::BadGeometry { nt, nspace } => {
                write!(f, "lattice needs nt >= 2 and space >= 2, got {nt} x {nspace}")
            }
            CausalError::BadSpacing { dt, dx } => {
                write!(f, "spacings must be positive, got dt {dt}, dx {dx}")
            }
            CausalError::BadSize { sites } => {
                write!(f, "lattice of {sites} sites exceeds the {MAX_SITES} cap")
            }
            CausalError::BadField { expected, got } => {
                write!(f, "coefficient field length {got}, expected {expected}")
            }
            CausalError::BadSpeed { site } => {
                write!(f, "nonpositive stiffness or density at site {site}")
            }
            CausalError::MaskLength { expected, got } => {
                write!(f, "region mask length {got}, expected {expected}")
            }
            CausalError::NotAchronal { site } => {
                write!(f, "region is not achronal (ordered pair ending at site {site})")
            }
            CausalError::BadSlab { lo, hi } => write!(f, "bad deformation slab [{lo}, {hi}]"),
            CausalError::NotSlabSeparated => {
                write!(f, "deformation regions must be separated by the slab")
            }
            CausalError::BadScale { scale } => write!(f, "bad deformation scale {scale}"),
        }
    }
}

/// Which side of the continuum cone the discrete step rule sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aperture {
    Inner,
    Outer,
}

/// Three-valued convexity verdict: the apertures bracket the continuum
/// answer, and the gap between them is reported as `Inconclusive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    Convex,
    NotConvex,
    Inconclusive,
}

/// Finite lattice with per-site stiffness and density.
#[derive(Debug, Clone)]
pub struct LatticeSpacetime {
    nt: usize,
    nx: usize,
    ny: Option<usize>,
    dt: f64,
    dx: f64,
    beta: Vec<f64>,
    h: Vec<f64>,
}

impl LatticeSpacetime {
    /// 1+1 lattice with spacetime-dependent coefficients (row-major,
    /// `t * nx + x`).
    pub fn with_fields_1p1(
        nt: usize,
        nx: usize,
        dt: f64,
        dx: f64,
        beta: Vec<f64>,
        h: Vec<f64>,
    ) -> Result<LatticeSpacetime, CausalError> {
        Self::build(nt, nx, None, dt, dx, beta, h)
    }

    /// Homogeneous 1+1 lattice.
    pub fn uniform_1p1(
        nt: usize,
        nx: usize,
        dt: f64,
        dx: f64,
        beta: f64,
        h: f64,
    ) -> Result<LatticeSpacetime, CausalError> {
        if nt < 2 || nx < 2 {
            return Err(CausalError::BadGeometry { nt, nspace: nx });
        }
        let sites = nt.checked_mul(nx).ok_or(CausalError::BadSize { sites: usize::MAX })?;
        if sites > MAX_SITES {
            return Err(CausalError::BadSize { sites });
        }
        Self::build(nt, nx, None, dt, dx, vec![beta; sites], vec![h; sites])
    }

    /// Homogeneous 2+1 lattice; the site cap bites here.
    pub fn uniform_2p1(
        nt: usize,
        nx: usize,
        ny: usize,
        dt: f64,
        dx: f64,
        beta: f64,
        h: f64,
    ) -> Result<LatticeSpacetime, CausalError> {
        if nt < 2 || nx < 2 || ny < 2 {
            return Err(CausalError::BadGeometry { nt, nspace: nx * ny });
        }
        let sites = nt
            .checked_mul(nx)
            .and_then(|s| s.checked_mul(ny))
            .ok_or(CausalError::BadSize { sites: usize::MAX })?;
        if sites > MAX_SITES {
            return Err(CausalError::BadSize { sites });
        }
        Self::build(nt, nx, Some(ny), dt, dx, vec![beta; sites], vec![h; sites])
    }

    fn build(
        nt: usize,
        nx: usize,
        ny: Option<usize>,
        dt: f64,
        dx: f64,
        beta: Vec<f64>,
        h: Vec<f64>,
    ) -> Result<LatticeSpacetime, CausalError> {
        let nspace = nx * ny.unwrap_or(1);
        if nt < 2 || nx < 2 || ny.map(|n| n < 2).unwrap_or(false) {
            return Err(CausalError::BadGeometry { nt, nspace });
        }
        if !(dt > 0.0) || !(dx > 0.0) {
            return Err(CausalError::BadSpacing { dt, dx });
        }
        let sites = nt * nspace;
        if sites > MAX_SITES {
            return Err(CausalError::BadSize { sites });
        }
        if beta.len() != sites {
            return Err(CausalError::BadField { expected: sites, got: beta.len() });
        }
        if h.len() != sites {
            return Err(CausalError::BadField { expected: sites, got: h.len() });
        }
        for (i, (b, hh)) in beta.iter().zip(&h).enumerate() {
            if !(*b > 0.0) || !(*hh > 0.0) {
                return Err(CausalError::BadSpeed { site: i });
            }
        }
        Ok(LatticeSpacetime { nt, nx, ny, dt, dx, beta, h })
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> Option<usize> {
        self.ny
    }

    pub fn space_sites(&self) -> usize {
        self.nx * self.ny.unwrap_or(1)
    }

    pub fn sites(&self) -> usize {
        self.nt * self.space_sites()
    }

    /// Flat site index; `y` is ignored on 1+1 lattices.
    pub fn idx(&self, t: usize, x: usize, y: usize) -> usize {
        match self.ny {
            None => t * self.nx + x,
            Some(_) => (t * self.space_sites()) + y * self.nx + x,
        }
    }

    fn speed_ratio(&self, site: usize) -> f64 {
        (self.beta[site] / self.h[site]).sqrt() * self.dt / self.dx
    }

    /// Maximum cell step from a source site under the given aperture.
    fn step_limit(&self, site: usize, ap: Aperture) -> f64 {
        let slack = match self.ny {
            None => 0.5,
            Some(_) => core::f64::consts::FRAC_1_SQRT_2,
        };
        let r = self.speed_ratio(site);
        match ap {
            Aperture::Inner => r - slack + TIE,
            Aperture::Outer => r + slack + TIE,
        }
    }
}

/// Subset of lattice sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    mask: Vec<bool>,
}

impl Region {
    pub fn empty(lat: &LatticeSpacetime) -> Region {
        Region { mask: vec![false; lat.sites()] }
    }

    pub fn from_mask(lat: &LatticeSpacetime, mask: Vec<bool>) -> Result<Region, CausalError> {
        if mask.len() != lat.sites() {
            return Err(CausalError::MaskLength { expected: lat.sites(), got: mask.len() });
        }
        Ok(Region { mask })
    }

    pub fn from_fn(
        lat: &LatticeSpacetime,
        mut f: impl FnMut(usize, usize, usize) -> bool,
    ) -> Region {
        let ny = lat.ny.unwrap_or(1);
        let mut mask = vec![false; lat.sites()];
        for t in 0..lat.nt {
            for y in 0..ny {
                for x in 0..lat.nx {
                    mask[lat.idx(t, x, y)] = f(t, x, y);
                }
            }
        }
        Region { mask }
    }

    /// Contiguous run of sites on one row (1+1 helper; `y = 0`).
    pub fn row_segment(lat: &LatticeSpacetime, t: usize, xlo: usize, xhi: usize) -> Region {
        let mut r = Region::empty(lat);
        for x in xlo..=xhi.min(lat.nx - 1) {
            let i = lat.idx(t, x, 0);
            r.mask[i] = true;
        }
        r
    }

    pub fn single(lat: &LatticeSpacetime, t: usize, x: usize, y: usize) -> Region {
        let mut r = Region::empty(lat);
        let i = lat.idx(t, x, y);
        r.mask[i] = true;
        r
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, site: usize) -> bool {
        self.mask[site]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|b| *b)
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b)
    }

    pub fn union(&self, other: &Region) -> Region {
        Region { mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect() }
    }

    pub fn intersect(&self, other: &Region) -> Region {
        Region { mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect() }
    }

    pub fn complement(&self) -> Region {
        Region { mask: self.mask.iter().map(|a| !*a).collect() }
    }
}

fn check_mask(lat: &LatticeSpacetime, r: &Region) -> Result<(), CausalError> {
    if r.mask.len() != lat.sites() {
        return Err(CausalError::MaskLength { expected: lat.sites(), got: r.mask.len() });
    }
    Ok(())
}

/// Marks every target of one causal step from `(t, x, y)`.
fn mark_step_targets(
    lat: &LatticeSpacetime,
    t: usize,
    x: usize,
    y: usize,
    ap: Aperture,
    out_row: &mut [bool],
) {
    let src = lat.idx(t, x, y);
    let limit = lat.step_limit(src, ap);
    match lat.ny {
        None => {
            let m = if limit < 0.0 { 0 } else { limit.floor() as usize };
            let lo = x.saturating_sub(m);
            let hi = (x + m).min(lat.nx - 1);
            for xp in lo..=hi {
                out_row[xp] = true;
            }
        }
        Some(ny) => {
            let l2 = if limit < 0.0 { -1.0 } else { limit * limit };
            let m = if limit < 0.0 { 0 } else { limit.floor() as usize };
            let ylo = y.saturating_sub(m);
            let yhi = (y + m).min(ny - 1);
            let xlo = x.saturating_sub(m);
            let xhi = (x + m).min(lat.nx - 1);
            for yp in ylo..=yhi {
                let dy = yp as f64 - y as f64;
                for xp in xlo..=xhi {
                    let dxs = xp as f64 - x as f64;
                    if dxs * dxs + dy * dy <= l2 {
                        out_row[yp * lat.nx + xp] = true;
                    }
                }
            }
        }
    }
}

/// Reachability closure: forward (`J^+`) or backward (`J^-`), including the
/// seed set. Backward reachability tests the forward edge from each
/// candidate predecessor, so source-site speeds are honored exactly.
fn reach(lat: &LatticeSpacetime, seed: &[bool], ap: Aperture, forward: bool) -> Vec<bool> {
    let ns = lat.space_sites();
    let mut out = seed.to_vec();
    let mut row = vec![false; ns];
    if forward {
        for t in 0..lat.nt - 1 {
            row.iter_mut().for_each(|b| *b = false);
            let ny = lat.ny.unwrap_or(1);
            for y in 0..ny {
                for x in 0..lat.nx {
                    if out[lat.idx(t, x, y)] {
                        mark_step_targets(lat, t, x, y, ap, &mut row);
                    }
                }
            }
            for (s, hit) in row.iter().enumerate() {
                if *hit {
                    out[(t + 1) * ns + s] = true;
                }
            }
        }
    } else {
        for t in (1..lat.nt).rev() {
            row.iter_mut().for_each(|b| *b = false);
            let ny = lat.ny.unwrap_or(1);
            for y in 0..ny {
                for x in 0..lat.nx {
                    // Predecessors of marked sites: walk sources on row
                    // t - 1 whose step reaches a marked site.
                    if out[lat.idx(t - 1, x, y)] {
                        continue;
                    }
                    let src = lat.idx(t - 1, x, y);
                    let limit = lat.step_limit(src, ap);
                    if limit < 0.0 {
                        continue;
                    }
                    let m = limit.floor() as usize;
                    let hit = match lat.ny {
                        None => {
                            let lo = x.saturating_sub(m);
                            let hi = (x + m).min(lat.nx - 1);
                            (lo..=hi).any(|xp| out[t * ns + xp])
                        }
                        Some(nyv) => {
                            let l2 = limit * limit;
                            let ylo = y.saturating_sub(m);
                            let yhi = (y + m).min(nyv - 1);
                            let xlo = x.saturating_sub(m);
                            let xhi = (x + m).min(lat.nx - 1);
                            let mut found = false;
                            'scan: for yp in ylo..=yhi {
                                let dy = yp as f64 - y as f64;
                                for xp in xlo..=xhi {
                                    let dxs = xp as f64 - x as f64;
                                    if dxs * dxs + dy * dy <= l2 && out[t * ns + yp * lat.nx + xp]
                                    {
                                        found = true;
                                        break 'scan;
                                    }
                                }
                            }
                            found
                        }
                    };
                    if hit {
                        row[match lat.ny {
                            None => x,
                            Some(_) => y * lat.nx + x,
                        }] = true;
                    }
                }
            }
            for (s, hit) in row.iter().enumerate() {
                if *hit {
                    out[(t - 1) * ns + s] = true;
                }
            }
        }
    }
    out
}

/// Causal future `J^+` of a region, including the region.
pub fn causal_future(
    lat: &LatticeSpacetime,
    region: &Region,
    ap: Aperture,
) -> Result<Region, CausalError> {
    check_mask(lat, region)?;
    Ok(Region { mask: reach(lat, &region.mask, ap, true) })
}

/// Causal past `J^-` of a region, including the region.
pub fn causal_past(
    lat: &LatticeSpacetime,
    region: &Region,
    ap: Aperture,
) -> Result<Region, CausalError> {
    check_mask(lat, region)?;
    Ok(Region { mask: reach(lat, &region.mask, ap, false) })
}

/// Three-valued causal convexity. If even the outer causal hull stays
/// inside the region, it is convex for any cone between the apertures; if
/// already the inner hull escapes, it is not; otherwise the discretization
/// cannot decide.
pub fn is_causally_convex(
    lat: &LatticeSpacetime,
    region: &Region,
) -> Result<Convexity, CausalError> {
    check_mask(lat, region)?;
    let fut = causal_future(lat, region, Aperture::Outer)?;
    let pas = causal_past(lat, region, Aperture::Outer)?;
    if fut.intersect(&pas).is_subset_of(region) {
        return Ok(Convexity::Convex);
    }
    let fut = causal_future(lat, region, Aperture::Inner)?;
    let pas = causal_past(lat, region, Aperture::Inner)?;
    if !fut.intersect(&pas).is_subset_of(region) {
        return Ok(Convexity::NotConvex);
    }
    Ok(Convexity::Inconclusive)
}

/// Causal complement: everything the outer cones cannot connect to the
/// region. Using the over-approximating aperture keeps the complement
/// conservatively small and makes it outer-closed, hence always convex.
pub fn causal_complement(
    lat: &LatticeSpacetime,
    region: &Region,
) -> Result<Region, CausalError> {
    check_mask(lat, region)?;
    let fut = causal_future(lat, region, Aperture::Outer)?;
    let pas = causal_past(lat, region, Aperture::Outer)?;
    Ok(fut.union(&pas).complement())
}

/// Escape set: sites outside `block` from which a causal path (in the
/// given aperture) reaches the bottom row (`from_past`) or the top row
/// without touching `block`.
fn escape(lat: &LatticeSpacetime, block: &[bool], ap: Aperture, from_past: bool) -> Vec<bool> {
    let ns = lat.space_sites();
    let mut out = vec![false; lat.sites()];
    if from_past {
        for s in 0..ns {
            out[s] = !block[s];
        }
        let mut row = vec![false; ns];
        for t in 0..lat.nt - 1 {
            row.iter_mut().for_each(|b| *b = false);
            let ny = lat.ny.unwrap_or(1);
            for y in 0..ny {
                for x in 0..lat.nx {
                    if out[lat.idx(t, x, y)] {
                        mark_step_targets(lat, t, x, y, ap, &mut row);
                    }
                }
            }
            for (s, hit) in row.iter().enumerate() {
                let site = (t + 1) * ns + s;
                if *hit && !block[site] {
                    out[site] = true;
                }
            }
        }
    } else {
        let top = (lat.nt - 1) * ns;
        for s in 0..ns {
            out[top + s] = !block[top + s];
        }
        let mut row = vec![false; ns];
        for t in (0..lat.nt - 1).rev() {
            row.iter_mut().for_each(|b| *b = false);
            let ny = lat.ny.unwrap_or(1);
            for y in 0..ny {
                for x in 0..lat.nx {
                    // Does any forward step from (t, x, y) land on an
                    // escaping site of row t + 1?
                    let src = lat.idx(t, x, y);
                    if block[src] {
                        continue;
                    }
                    let limit = lat.step_limit(src, ap);
                    if limit < 0.0 {
                        continue;
                    }
                    let m = limit.floor() as usize;
                    let hit = match lat.ny {
                        None => {
                            let lo = x.saturating_sub(m);
                            let hi = (x + m).min(lat.nx - 1);
                            (lo..=hi).any(|xp| out[(t + 1) * ns + xp])
                        }
                        Some(nyv) => {
                            let l2 = limit * limit;
                            let ylo = y.saturating_sub(m);
                            let yhi = (y + m).min(nyv - 1);
                            let xlo = x.saturating_sub(m);
                            let xhi = (x + m).min(lat.nx - 1);
                            let mut found = false;
                            'scan: for yp in ylo..=yhi {
                                let dy = yp as f64 - y as f64;
                                for xp in xlo..=xhi {
                                    let dxs = xp as f64 - x as f64;
                                    if dxs * dxs + dy * dy <= l2
                                        && out[(t + 1) * ns + yp * lat.nx + xp]
                                    {
                                        found = true;
                                        break 'scan;
                                    }
                                }
                            }
                            found
                        }
                    };
                    if hit {
                        row[match lat.ny {
                            None => x,
                            Some(_) => y * lat.nx + x,
                        }] = true;
                    }
                }
            }
            for (s, hit) in row.iter().enumerate() {
                if *hit {
                    out[t * ns + s] = true;
                }
            }
        }
    }
    out
}

/// Domain of dependence of an achronal region: sites whose every
/// inextendible causal curve meets the region. Escape paths are walked in
/// the opposite aperture (an inner domain must survive outer escapes),
/// which keeps the inner domain inside the outer one. The achronality
/// check always uses the outer adjacency.
pub fn domain_of_dependence(
    lat: &LatticeSpacetime,
    region: &Region,
    ap: Aperture,
) -> Result<Region, CausalError> {
    check_mask(lat, region)?;
    // Strict future of the region must avoid the region.
    let ns = lat.space_sites();
    let mut seed = vec![false; lat.sites()];
    let ny = lat.ny.unwrap_or(1);
    let mut row = vec![false; ns];
    for t in 0..lat.nt - 1 {
        row.iter_mut().for_each(|b| *b = false);
        for y in 0..ny {
            for x in 0..lat.nx {
                if region.mask[lat.idx(t, x, y)] {
                    mark_step_targets(lat, t, x, y, Aperture::Outer, &mut row);
                }
            }
        }
        for (s, hit) in row.iter().enumerate() {
            if *hit {
                seed[(t + 1) * ns + s] = true;
            }
        }
    }
    let strict = reach(lat, &seed, Aperture::Outer, true);
    for (site, (in_future, in_region)) in strict.iter().zip(&region.mask).enumerate() {
        if *in_future && *in_region {
            return Err(CausalError::NotAchronal { site });
        }
    }

    let escape_ap = match ap {
        Aperture::Inner => Aperture::Outer,
        Aperture::Outer => Aperture::Inner,
    };
    let e_past = escape(lat, &region.mask, escape_ap, true);
    let e_future = escape(lat, &region.mask, escape_ap, false);
    let mask = (0..lat.sites())
        .map(|i| region.mask[i] || !e_past[i] || !e_future[i])
        .collect();
    Ok(Region { mask })
}

/// Quintic time profile: 1 at and below `lo`, 0 at and above `hi`.
fn slab_profile(t: usize, lo: usize, hi: usize) -> f64 {
    if t <= lo {
        1.0
    } else if t >= hi {
        0.0
    } else {
        let s = (t - lo) as f64 / (hi - lo) as f64;
        1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }
}

/// The lattice with stiffness rescaled by `scale` below the slab,
/// untouched above it, and interpolated inside by a quintic profile.
pub fn deformed(
    lat: &LatticeSpacetime,
    slab_lo: usize,
    slab_hi: usize,
    scale: f64,
) -> Result<LatticeSpacetime, CausalError> {
    if slab_lo < 1 || slab_hi <= slab_lo || slab_hi >= lat.nt {
        return Err(CausalError::BadSlab { lo: slab_lo, hi: slab_hi });
    }
    if !(scale > 0.0) {
        return Err(CausalError::BadScale { scale });
    }
    let ns = lat.space_sites();
    let mut beta = lat.beta.clone();
    for t in 0..lat.nt {
        let p = slab_profile(t, slab_lo, slab_hi);
        if p == 0.0 {
            continue;
        }
        let factor = 1.0 + (scale - 1.0) * p;
        for s in 0..ns {
            beta[t * ns + s] *= factor;
        }
    }
    Ok(LatticeSpacetime { beta, ..lat.clone() })
}

/// Deformation request: slab rows, initial stiffness scale, halving cap.
#[derive(Debug, Clone, Copy)]
pub struct DeformationPlan {
    pub slab_lo: usize,
    pub slab_hi: usize,
    pub start_scale: f64,
    pub max_halvings: u32,
}

impl Default for DeformationPlan {
    fn default() -> DeformationPlan {
        DeformationPlan { slab_lo: 1, slab_hi: 2, start_scale: 1.0, max_halvings: 20 }
    }
}

/// Result of a certification run.
#[derive(Debug, Clone, Copy)]
pub struct DeformationOutcome {
    pub certified: bool,
    pub halvings: u32,
    pub scale: f64,
    pub inner_ok: bool,
    pub outer_ok: bool,
}

/// Narrows the cones below the slab by repeatedly halving the stiffness
/// scale until the late region lies inside both the inner and the outer
/// domain of dependence of the early region, or the halving cap is hit.
pub fn deform_and_certify(
    lat: &LatticeSpacetime,
    k_early: &Region,
    k_late: &Region,
    plan: &DeformationPlan,
) -> Result<DeformationOutcome, CausalError> {
    check_mask(lat, k_early)?;
    check_mask(lat, k_late)?;
    if plan.slab_lo < 1 || plan.slab_hi <= plan.slab_lo || plan.slab_hi >= lat.nt {
        return Err(CausalError::BadSlab { lo: plan.slab_lo, hi: plan.slab_hi });
    }
    if !(plan.start_scale > 0.0) {
        return Err(CausalError::BadScale { scale: plan.start_scale });
    }
    let ns = lat.space_sites();
    for (site, m) in k_early.mask.iter().enumerate() {
        if *m && site / ns >= plan.slab_lo {
            return Err(CausalError::NotSlabSeparated);
        }
    }
    for (site, m) in k_late.mask.iter().enumerate() {
        if *m && site / ns <= plan.slab_hi {
            return Err(CausalError::NotSlabSeparated);
        }
    }
    let mut outcome = DeformationOutcome {
        certified: false,
        halvings: 0,
        scale: plan.start_scale,
        inner_ok: false,
        outer_ok: false,
    };
    for halvings in 0..=plan.max_halvings {
        let scale = plan.start_scale * 0.5f64.powi(halvings as i32);
        let bent = deformed(lat, plan.slab_lo, plan.slab_hi, scale)?;
        let d_in = domain_of_dependence(&bent, k_early, Aperture::Inner)?;
        let d_out = domain_of_dependence(&bent, k_early, Aperture::Outer)?;
        outcome.halvings = halvings;
        outcome.scale = scale;
        outcome.inner_ok = k_late.is_subset_of(&d_in);
        outcome.outer_ok = k_late.is_subset_of(&d_out);
        if outcome.inner_ok && outcome.outer_ok {
            outcome.certified = true;
            return Ok(outcome);
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rng(u64);

    impl Rng {
        fn next_u64(&mut self) -> u64 {
            self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        }

        fn below(&mut self, n: usize) -> usize {
            (self.next_u64() % n as u64) as usize
        }
    }

    /// Half-step lattice: outer cones advance one cell per row, inner
    /// cones are vertical.
    fn half_step() -> LatticeSpacetime {
        LatticeSpacetime::uniform_1p1(24, 49, 0.5, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn half_step_domains_are_diamond_and_column() {
        let lat = half_step();
        let r = Region::row_segment(&lat, 4, 20, 28);
        let d_in = domain_of_dependence(&lat, &r, Aperture::Inner).unwrap();
        let d_out = domain_of_dependence(&lat, &r, Aperture::Outer).unwrap();
        let diamond = Region::from_fn(&lat, |t, x, _| {
            let k = t.abs_diff(4);
            k <= 4 && x >= 20 + k && x + k <= 28
        });
        let column = Region::from_fn(&lat, |_, x, _| (20..=28).contains(&x));
        assert_eq!(d_in, diamond);
        assert_eq!(d_out, column);
        assert!(d_in.is_subset_of(&d_out));
    }

    #[test]
    fn vertical_pair_is_not_achronal_and_not_convex() {
        let lat = half_step();
        let two = Region::single(&lat, 5, 24, 0).union(&Region::single(&lat, 7, 24, 0));
        assert!(matches!(
            domain_of_dependence(&lat, &two, Aperture::Inner),
            Err(CausalError::NotAchronal { .. })
        ));
        assert_eq!(is_causally_convex(&lat, &two).unwrap(), Convexity::NotConvex);
    }

    #[test]
    fn futures_and_pasts_are_dual_and_nested() {
        let lat = LatticeSpacetime::uniform_1p1(20, 64, 0.7, 1.0, 4.0, 1.0).unwrap();
        let mut rng = Rng(17);
        for ap in [Aperture::Inner, Aperture::Outer] {
            for _ in 0..60 {
                let tp = rng.below(19);
                let xp = rng.below(64);
                let tq = tp + 1 + rng.below(lat.nt() - tp - 1);
                let xq = rng.below(64);
                let p = Region::single(&lat, tp, xp, 0);
                let q = Region::single(&lat, tq, xq, 0);
                let fut = causal_future(&lat, &p, ap).unwrap();
                let pas = causal_past(&lat, &q, ap).unwrap();
                assert_eq!(
                    fut.contains(lat.idx(tq, xq, 0)),
                    pas.contains(lat.idx(tp, xp, 0)),
                    "duality broken at ({tp},{xp}) vs ({tq},{xq})"
                );
            }
        }
        for _ in 0..20 {
            let p = Region::single(&lat, rng.below(20), rng.below(64), 0);
            let inner = causal_future(&lat, &p, Aperture::Inner).unwrap();
            let outer = causal_future(&lat, &p, Aperture::Outer).unwrap();
            assert!(inner.is_subset_of(&outer));
            let inner = causal_past(&lat, &p, Aperture::Inner).unwrap();
            let outer = causal_past(&lat, &p, Aperture::Outer).unwrap();
            assert!(inner.is_subset_of(&outer));
        }
    }

    #[test]
    fn outer_diamonds_and_their_intersections_are_convex() {
        let lat = LatticeSpacetime::uniform_1p1(22, 56, 0.6, 1.0, 2.0, 1.0).unwrap();
        let mut rng = Rng(23);
        let mut checked = 0;
        for _ in 0..200 {
            let tp = rng.below(10);
            let xp = 8 + rng.below(40);
            let tq = tp + 2 + rng.below(lat.nt() - tp - 2);
            let p = Region::single(&lat, tp, xp, 0);
            let fut = causal_future(&lat, &p, Aperture::Outer).unwrap();
            // Pick an apex inside the future so the diamond is nonempty.
            let candidates: alloc::vec::Vec<usize> = (0..lat.sites())
                .filter(|i| fut.contains(*i) && i / lat.nx() == tq)
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let apex = candidates[rng.below(candidates.len())];
            let q = Region::from_mask(&lat, {
                let mut m = alloc::vec![false; lat.sites()];
                m[apex] = true;
                m
            })
            .unwrap();
            let pas = causal_past(&lat, &q, Aperture::Outer).unwrap();
            let diamond = fut.intersect(&pas);
            assert_eq!(is_causally_convex(&lat, &diamond).unwrap(), Convexity::Convex);
            checked += 1;

            // Intersection with a second diamond stays convex.
            let tr = rng.below(12);
            let xr = 8 + rng.below(40);
            let r = Region::single(&lat, tr, xr, 0);
            let fut2 = causal_future(&lat, &r, Aperture::Outer).unwrap();
            let ts = tr + 2 + rng.below(lat.nt() - tr - 2);
            let cands: alloc::vec::Vec<usize> = (0..lat.sites())
                .filter(|i| fut2.contains(*i) && i / lat.nx() == ts)
                .collect();
            if cands.is_empty() {
                continue;
            }
            let apex2 = cands[rng.below(cands.len())];
            let s = Region::from_mask(&lat, {
                let mut m = alloc::vec![false; lat.sites()];
                m[apex2] = true;
                m
            })
            .unwrap();
            let pas2 = causal_past(&lat, &s, Aperture::Outer).unwrap();
            let diamond2 = fut2.intersect(&pas2);
            let both = diamond.intersect(&diamond2);
            assert_eq!(is_causally_convex(&lat, &both).unwrap(), Convexity::Convex);
        }
        assert!(checked >= 150, "only {checked} nonempty diamonds sampled");
    }

    #[test]
    fn causal_complement_is_outer_closed_and_convex() {
        let lat = LatticeSpacetime::uniform_1p1(18, 48, 0.5, 1.0, 1.0, 1.0).unwrap();
        let mut rng = Rng(31);
        for _ in 0..50 {
            let t = 2 + rng.below(14);
            let a = rng.below(30);
            let b = a + 2 + rng.below(10);
            let o = Region::row_segment(&lat, t, a, b.min(47));
            let comp = causal_complement(&lat, &o).unwrap();
            let fut = causal_future(&lat, &o, Aperture::Outer).unwrap();
            let pas = causal_past(&lat, &o, Aperture::Outer).unwrap();
            assert!(comp.intersect(&fut).is_empty());
            assert!(comp.intersect(&pas).is_empty());
            assert_eq!(is_causally_convex(&lat, &comp).unwrap(), Convexity::Convex);
        }
    }

    #[test]
    fn half_step_double_diamond_is_not_ruled_out() {
        let lat = half_step();
        let r = Region::row_segment(&lat, 4, 20, 28);
        let d_in = domain_of_dependence(&lat, &r, Aperture::Inner).unwrap();
        let verdict = is_causally_convex(&lat, &d_in).unwrap();
        assert_ne!(verdict, Convexity::NotConvex);
    }

    #[test]
    fn planar_lattice_steps_match_the_disk_rule_and_duality() {
        let lat = LatticeSpacetime::uniform_2p1(10, 21, 21, 1.0, 1.0, 4.0, 1.0).unwrap();
        let p = Region::single(&lat, 0, 10, 10);
        let fut = causal_future(&lat, &p, Aperture::Outer).unwrap();
        // One row up: Euclidean disk of radius c dt + half diagonal.
        let limit = 2.0 + core::f64::consts::FRAC_1_SQRT_2;
        let mut count = 0;
        for y in 0..21usize {
            for x in 0..21usize {
                let dxs = x as f64 - 10.0;
                let dy = y as f64 - 10.0;
                let inside = dxs * dxs + dy * dy <= limit * limit + 1e-9;
                assert_eq!(fut.contains(lat.idx(1, x, y)), inside, "row 1 at ({x},{y})");
                if inside {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 21);

        let mut rng = Rng(41);
        for _ in 0..40 {
            let tp = rng.below(9);
            let (xp, yp) = (rng.below(21), rng.below(21));
            let tq = tp + 1 + rng.below(10 - tp - 1);
            let (xq, yq) = (rng.below(21), rng.below(21));
            let p = Region::single(&lat, tp, xp, yp);
            let q = Region::single(&lat, tq, xq, yq);
            for ap in [Aperture::Inner, Aperture::Outer] {
                let fut = causal_future(&lat, &p, ap).unwrap();
                let pas = causal_past(&lat, &q, ap).unwrap();
                assert_eq!(
                    fut.contains(lat.idx(tq, xq, yq)),
                    pas.contains(lat.idx(tp, xp, yp))
                );
            }
        }
    }

    #[test]
    fn size_guard_and_constructor_validation() {
        assert!(matches!(
            LatticeSpacetime::uniform_2p1(300, 300, 300, 1.0, 1.0, 1.0, 1.0),
            Err(CausalError::BadSize { .. })
        ));
        assert!(matches!(
            LatticeSpacetime::uniform_1p1(1, 8, 1.0, 1.0, 1.0, 1.0),
            Err(CausalError::BadGeometry { .. })
        ));
        assert!(matches!(
            LatticeSpacetime::uniform_1p1(8, 8, 0.0, 1.0, 1.0, 1.0),
            Err(CausalError::BadSpacing { .. })
        ));
        assert!(matches!(
            LatticeSpacetime::uniform_1p1(8, 8, 1.0, 1.0, -1.0, 1.0),
            Err(CausalError::BadSpeed { .. })
        ));
        let lat = half_step();
        let short = Region { mask: alloc::vec![false; 3] };
        assert!(matches!(
            causal_future(&lat, &short, Aperture::Inner),
            Err(CausalError::MaskLength { .. })
        ));
        assert!(matches!(
            LatticeSpacetime::with_fields_1p1(8, 8, 1.0, 1.0, alloc::vec![1.0; 7], alloc::vec![
                1.0;
                64
            ]),
            Err(CausalError::BadField { .. })
        ));
    }

    #[test]
    fn cone_aperture_shrinks_by_root_two_per_stiffness_halving() {
        // Width of the outer future cone of a point, T rows up, for
        // successively halved stiffness. Each halving divides the speed
        // by sqrt(2); the measured width ratio sits near that, inside
        // [1.25, 1.6] once flooring is accounted for.
        let t_rows = 40usize;
        let mut widths = alloc::vec::Vec::new();
        for k in 0..5 {
            let beta = 144.0 * 0.5f64.powi(k);
            let lat = LatticeSpacetime::uniform_1p1(t_rows + 2, 1100, 1.0, 1.0, beta, 1.0)
                .unwrap();
            let p = Region::single(&lat, 0, 550, 0);
            let fut = causal_future(&lat, &p, Aperture::Outer).unwrap();
            let row: alloc::vec::Vec<usize> = (0..1100)
                .filter(|x| fut.contains(lat.idx(t_rows, *x, 0)))
                .collect();
            let width = row.last().unwrap() - row.first().unwrap();
            assert!(width > 0 && width < 1099, "cone clipped at width {width}");
            widths.push(width as f64);
        }
        for pair in widths.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!(
                (1.25..=1.6).contains(&ratio),
                "aperture ratio {ratio} outside [1.25, 1.6] ({widths:?})"
            );
        }
    }

    #[test]
    fn deformation_certifies_capture_after_a_few_halvings() {
        // Early segment wide, late segment narrow, fast cones: without
        // deformation the late region escapes sideways; narrowing the
        // stiffness below the slab funnels every escape through the early
        // segment. The early half-width must absorb the residual drift
        // the quintic tail leaves open in the upper slab (about 48 cells
        // here), which halving cannot remove.
        let lat = LatticeSpacetime::uniform_1p1(64, 257, 1.0, 1.0, 4.0, 1.0).unwrap();
        let k_early = Region::row_segment(&lat, 8, 68, 188);
        let k_late = Region::row_segment(&lat, 44, 124, 132);
        let plan = DeformationPlan { slab_lo: 12, slab_hi: 40, start_scale: 1.0, max_halvings: 20 };

        // Undeformed lattice does not capture.
        let d0 = domain_of_dependence(&lat, &k_early, Aperture::Inner).unwrap();
        assert!(!k_late.is_subset_of(&d0));

        let outcome = deform_and_certify(&lat, &k_early, &k_late, &plan).unwrap();
        assert!(outcome.certified, "not certified: {outcome:?}");
        assert!(outcome.inner_ok && outcome.outer_ok);
        assert!(outcome.halvings <= 12, "took {} halvings", outcome.halvings);

        // Domains grow monotonically as the scale halves.
        let mut prev: Option<Region> = None;
        for k in 0..=outcome.halvings {
            let bent = deformed(&lat, plan.slab_lo, plan.slab_hi, 0.5f64.powi(k as i32)).unwrap();
            let d = domain_of_dependence(&bent, &k_early, Aperture::Inner).unwrap();
            if let Some(p) = &prev {
                assert!(p.is_subset_of(&d), "domain shrank at halving {k}");
            }
            prev = Some(d);
        }
    }

    #[test]
    fn deformation_input_validation() {
        let lat = LatticeSpacetime::uniform_1p1(64, 64, 1.0, 1.0, 1.0, 1.0).unwrap();
        let early = Region::row_segment(&lat, 8, 10, 50);
        let late = Region::row_segment(&lat, 50, 20, 40);
        let bad_slab = DeformationPlan { slab_lo: 40, slab_hi: 12, ..Default::default() };
        assert!(matches!(
            deform_and_certify(&lat, &early, &late, &bad_slab),
            Err(CausalError::BadSlab { .. })
        ));
        let plan = DeformationPlan { slab_lo: 12, slab_hi: 40, ..Default::default() };
        let inside = Region::row_segment(&lat, 20, 10, 20);
        assert!(matches!(
            deform_and_certify(&lat, &inside, &late, &plan),
            Err(CausalError::NotSlabSeparated)
        ));
        assert!(matches!(
            deform_and_certify(&lat, &early, &inside, &plan),
            Err(CausalError::NotSlabSeparated)
        ));
        assert!(matches!(
            deformed(&lat, 12, 40, 0.0),
            Err(CausalError::BadScale { .. })
        ));
    }
}
