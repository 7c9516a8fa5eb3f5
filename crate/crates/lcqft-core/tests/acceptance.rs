//! Full-scale verification pass: thirteen property bundles, each pinned at
//! its stated tolerance and sample count. Every test prints a single
//! verdict line so a log scan shows one PASS or FAIL per bundle. Seeds are
//! fixed, so the gate is reproducible run to run.

use lcqft_core::causal::{
    deform_and_certify, deformed, domain_of_dependence, Aperture, DeformationPlan,
    LatticeSpacetime, Region,
};
use lcqft_core::dirac::{
    adjoint_pair_defect, find_adjoint_conjugation, find_intertwiner, GammaRep,
};
use lcqft_core::geometry::{
    antisymmetry_defect, christoffel, dirac_variation, nabla_gamma_defect, on_shell_momentum,
    pair_integral, plane_wave, slash_fd_variation, spin_connection, variation_terms, FieldKind,
    FrameGrid, Grid4, MetricField, SymTensorField, VariationProblem,
};
use lcqft_core::lattice::Lattice1p1;
use lcqft_core::linalg::{c, cr, M4};
use lcqft_core::microlocal::{
    default_directions, hadamard_to_cone_config, in_gamma_n, in_hadamard_set, wf_decay_scan,
    wf_pullback_check, ConeConfig, ConeVerdict, GammaOptions, ScanOptions, TestDistribution,
};
use lcqft_core::minkowski::{
    commutator_pairing, smoothed_two_point, vacuum_two_point, FourierTestFunction, GaussianTerm,
    HalfSpaceSupport, KGParams, QuadratureConfig,
};
use lcqft_core::quantum::{
    car_fock, each_matching, fock_norm, moments_from_truncated, oscillator_weyl_check,
    quasifree_npoint, truncated_from_moments, weyl_commutator, DoubledSpace, SymplecticSpace,
    TwoPointForm,
};
use lcqft_core::spin::{r4_id, r4_max_dev, Real4, SpinAlgebra};
use lcqft_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const ETA: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

fn verdict(name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {name}: {detail}");
    assert!(pass, "{name}: {detail}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_conjugator(r: &mut ChaCha8Rng) -> M4 {
    M4::from_fn(|_, _| c(r.gen_range(-0.4..0.4), r.gen_range(-0.4..0.4))).exp()
}

#[test]
fn clifford_relations_traces_and_intertwiner_recovery() {
    let start = Instant::now();
    let mut r = rng(11);
    let weyl = GammaRep::weyl();
    let standard = GammaRep::standard();

    let relations = weyl.clifford_defect().max(standard.clifford_defect());
    let mut g5 = 0.0f64;
    let mut traces = 0.0f64;
    for rep in [&weyl, &standard] {
        g5 = g5.max(rep.gamma5.mul(&rep.gamma5).add(&M4::id()).max_abs());
        for i in 0..16 {
            let want = if i == 0 { cr(4.0) } else { cr(0.0) };
            traces = traces.max((rep.monomial(i).tr() - want).norm());
        }
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == b { 4.0 * ETA[a] } else { 0.0 };
                traces = traces.max((rep.gamma[a].mul(&rep.gamma[b]).tr() - cr(want)).norm());
            }
        }
    }

    let mut residual = 0.0f64;
    let mut recovery = 0.0f64;
    for _ in 0..50 {
        let k = random_conjugator(&mut r);
        let rep2 = weyl.conjugated(&k).expect("exponential conjugators are invertible");
        match find_intertwiner(&weyl, &rep2) {
            Ok(it) => {
                residual = residual.max(it.residual);
                let w = it.l.mul(&k.inv().expect("conjugator inverse exists"));
                let z = w.tr() / cr(4.0);
                recovery = recovery.max(w.sub(&M4::id().scale(z)).max_abs() / w.max_abs());
            }
            Err(_) => residual = f64::INFINITY,
        }
    }
    let elapsed = start.elapsed();

    let pass = relations <= 1e-13
        && g5 <= 1e-13
        && traces <= 1e-13
        && residual < 1e-10
        && recovery <= 1e-8
        && elapsed.as_secs_f64() < 1.0;
    verdict(
        "clifford_relations_traces_and_intertwiner_recovery",
        pass,
        &format!(
            "relations {relations:.1e}, gamma5 {g5:.1e}, traces {traces:.1e}, \
             intertwiner residual {residual:.1e}, recovery {recovery:.1e}, {} ms",
            elapsed.as_millis()
        ),
    );
}

#[test]
fn adjoint_conjugation_pair_and_spin_invariance() {
    let mut r = rng(22);
    let weyl = GammaRep::weyl();

    // Hermitian adjoint matrix, conjugation matrix, and their coupling
    // relation, in the Weyl representation and twenty conjugated ones.
    let mut pair_dev = 0.0f64;
    match find_adjoint_conjugation(&weyl) {
        Ok(pair) => pair_dev = pair_dev.max(adjoint_pair_defect(&weyl, &pair)),
        Err(_) => pair_dev = f64::INFINITY,
    }
    for _ in 0..20 {
        let k = random_conjugator(&mut r);
        let rep2 = weyl.conjugated(&k).expect("conjugator is invertible");
        match find_adjoint_conjugation(&rep2) {
            Ok(pair) => pair_dev = pair_dev.max(adjoint_pair_defect(&rep2, &pair)),
            Err(_) => pair_dev = f64::INFINITY,
        }
    }

    // The adjoint form is invariant under the spin representation.
    let alg = SpinAlgebra::weyl();
    let a_scale = alg.adjoint.a.max_abs();
    let mut invariance = 0.0f64;
    for _ in 0..1000 {
        let s = random_spin_zero(&alg, &mut r);
        let moved = s.adj().mul(&alg.adjoint.a).mul(&s);
        invariance = invariance.max(moved.sub(&alg.adjoint.a).max_abs() / a_scale);
    }

    let pass = pair_dev <= 1e-12 && invariance <= 1e-10;
    verdict(
        "adjoint_conjugation_pair_and_spin_invariance",
        pass,
        &format!("pair relations {pair_dev:.1e}, spin invariance {invariance:.1e}"),
    );
}

fn random_spin_zero(alg: &SpinAlgebra, r: &mut ChaCha8Rng) -> M4 {
    let mut s = M4::id();
    for _ in 0..3 {
        let t = r.gen_range(-1.0..1.0);
        if r.gen_bool(0.5) {
            s = s.mul(&alg.boost_curve(r.gen_range(1..4), t));
        } else {
            let i = r.gen_range(1..4);
            let mut j = r.gen_range(1..4);
            while j == i {
                j = r.gen_range(1..4);
            }
            s = s.mul(&alg.rotation_curve(i, j, t));
        }
    }
    s
}

#[test]
fn covering_homomorphism_kernel_and_lift() {
    let mut r = rng(33);
    let alg = SpinAlgebra::weyl();

    let mut hom = 0.0f64;
    let mut kernel = 0.0f64;
    let mut lift = 0.0f64;
    for _ in 0..1000 {
        let s1 = random_spin_zero(&alg, &mut r);
        let s2 = random_spin_zero(&alg, &mut r);
        let l1 = alg.covering_map(&s1).expect("sample lies in Spin0");
        let l2 = alg.covering_map(&s2).expect("sample lies in Spin0");
        let l12 = alg.covering_map(&s1.mul(&s2)).expect("products stay in Spin0");
        hom = hom.max(r4_max_dev(&l12.l, &l1.compose(&l2).l));

        let lneg = alg.covering_map(&s1.neg()).expect("-S covers like S");
        kernel = kernel.max(r4_max_dev(&l1.l, &lneg.l));

        let back = alg.lift(&l1).expect("orthochronous lifts exist");
        lift = lift.max(back.sub(&s1).max_abs().min(back.add(&s1).max_abs()));
    }
    kernel = kernel.max(r4_max_dev(
        &alg.covering_map(&M4::id()).expect("identity is in Spin0").l,
        &r4_id(),
    ));
    kernel = kernel.max(r4_max_dev(
        &alg.covering_map(&M4::id().neg()).expect("-1 is in Spin0").l,
        &r4_id(),
    ));

    // Differential of the covering composed with its inverse on all six
    // boost/rotation generators.
    let mut round = 0.0f64;
    for &(a, b) in &[(0usize, 1usize), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        let mut lam: Real4 = [[0.0; 4]; 4];
        lam[a][b] = ETA[b];
        lam[b][a] = -ETA[a];
        let biv = alg
            .d_lambda_inverse(&lam)
            .expect("generator is antisymmetric once lowered");
        let back = alg.d_covering(&alg.represent_bivector(&biv));
        round = round.max(r4_max_dev(&lam, &back));
    }

    let pass = hom <= 1e-10 && kernel <= 1e-10 && round <= 1e-10 && lift <= 1e-8;
    verdict(
        "covering_homomorphism_kernel_and_lift",
        pass,
        &format!(
            "homomorphism {hom:.1e}, kernel {kernel:.1e}, generators {round:.1e}, \
             lift round trip {lift:.1e}"
        ),
    );
}

fn frw_christoffel_oracle(a0: f64, adot: f64, t: f64) -> [[[f64; 4]; 4]; 4] {
    let a = a0 + adot * t;
    let mut g = [[[0.0; 4]; 4]; 4];
    for i in 1..4 {
        g[0][i][i] = a * adot;
        g[i][0][i] = adot / a;
        g[i][i][0] = adot / a;
    }
    g
}

#[test]
fn connection_flat_frw_oracle_and_parallel_gamma() {
    let rep = GammaRep::weyl();

    // Flat space: Christoffels and spin connection vanish.
    let mink = MetricField::minkowski();
    let mut flat = 0.0f64;
    let gamma = christoffel(&mink, [0.3, -0.2, 0.9, 0.1]).expect("flat metric is regular");
    for plane in &gamma {
        for row in plane {
            for v in row {
                flat = flat.max(v.abs());
            }
        }
    }
    let cd = spin_connection(&mink, &rep, [0.3, -0.2, 0.9, 0.1]).expect("flat connection");
    for sigma in &cd.sigma {
        flat = flat.max(sigma.max_abs());
    }

    // Expanding metric against the closed-form connection, through the
    // finite-difference path.
    let (a0, adot) = (1.0, 0.1);
    let mfd = MetricField::from_fn(move |x| {
        let a = a0 + adot * x[0];
        let mut out = [[0.0; 4]; 4];
        out[0][0] = 1.0;
        for i in 1..4 {
            out[i][i] = -a * a;
        }
        out
    });
    let mut frw_dev = 0.0f64;
    for &t in &[0.0, 0.7, -1.3] {
        let got = christoffel(&mfd, [t, 0.4, -0.2, 0.8]).expect("expanding metric is regular");
        let want = frw_christoffel_oracle(a0, adot, t);
        for rr in 0..4 {
            for mu in 0..4 {
                for nu in 0..4 {
                    frw_dev = frw_dev.max((got[rr][mu][nu] - want[rr][mu][nu]).abs());
                }
            }
        }
    }

    // Covariant constancy of the curved gammas and antisymmetry of the
    // connection coefficients on the preset metrics.
    let metrics = [
        MetricField::minkowski(),
        MetricField::frw(1.0, 0.1),
        MetricField::bump([0.0; 4], 0.9, 0.2),
    ];
    let mut nabla = 0.0f64;
    let mut anti = 0.0f64;
    for m in &metrics {
        for &x in &[[0.1, 0.2, -0.3, 0.15], [0.0, 0.5, 0.1, -0.4]] {
            let cd = spin_connection(m, &rep, x).expect("preset metrics are regular");
            nabla = nabla.max(nabla_gamma_defect(&cd, &rep));
            anti = anti.max(antisymmetry_defect(&cd));
        }
    }

    let pass = flat <= 1e-9 && frw_dev <= 1e-7 && nabla <= 1e-6 && anti <= 1e-8;
    verdict(
        "connection_flat_frw_oracle_and_parallel_gamma",
        pass,
        &format!(
            "flat {flat:.1e}, analytic oracle {frw_dev:.1e}, parallel gamma {nabla:.1e}, \
             antisymmetry {anti:.1e}"
        ),
    );
}

fn random_sym4(r: &mut ChaCha8Rng, amp: f64) -> [[f64; 4]; 4] {
    let mut p = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let v = r.gen_range(-amp..amp);
            p[i][j] = v;
            p[j][i] = v;
        }
    }
    p
}

#[test]
fn metric_variation_matches_finite_difference_and_reduces_on_shell() {
    let mut r = rng(44);
    let rep = GammaRep::weyl();
    let base = MetricField::minkowski();
    let grid = Grid4::centered(13, 1.2);
    let frames = FrameGrid::build(&base, &rep, grid).expect("flat frames build");
    let eps = 1e-3;
    let h = grid.h[0];
    // 1e-4 floor, quadratic family error, and the differing fourth-order
    // stencil error on the two sides of the comparison.
    let fd_tol = (1e-4f64).max(10.0 * eps * eps + h * h * h * h * 3.0);

    let mut dev_spinor = 0.0f64;
    let mut dev_cospinor = 0.0f64;
    for _ in 0..3 {
        let delta = SymTensorField::bump([0.0; 4], 1.8, random_sym4(&mut r, 0.3));
        let problem = VariationProblem {
            rep: &rep,
            base: &base,
            delta: &delta,
            frames: &frames,
            mass: 1.0,
            frame_step: eps,
            frame_twist: None,
        };
        let k = on_shell_momentum(1.0, [0.2, -0.3, 0.1]);
        for kind in [FieldKind::Spinor, FieldKind::Cospinor] {
            let f = plane_wave(
                &rep,
                grid,
                kind,
                k,
                [cr(1.0), c(0.3, 0.2), cr(-0.4), c(0.1, -0.2)],
                1.0,
            );
            let formula = dirac_variation(&problem, &f).expect("closed form evaluates");
            let fd = slash_fd_variation(&rep, &base, &delta, &f, eps)
                .expect("finite-difference side evaluates");
            let dev = formula.max_dev(&fd) / fd.max_abs().max(1.0);
            match kind {
                FieldKind::Spinor => dev_spinor = dev_spinor.max(dev),
                FieldKind::Cospinor => dev_cospinor = dev_cospinor.max(dev),
            }
        }
    }

    // On shell and under pairing only the two transport terms survive.
    let mass = 1.0;
    let delta = SymTensorField::bump([0.0; 4], 0.55, random_sym4(&mut r, 0.28));
    let problem = VariationProblem {
        rep: &rep,
        base: &base,
        delta: &delta,
        frames: &frames,
        mass,
        frame_step: eps,
        frame_twist: None,
    };
    let kv = on_shell_momentum(mass, [0.25, -0.15, 0.1]);
    let ku = on_shell_momentum(mass, [-0.1, 0.2, 0.15]);
    let v = plane_wave(
        &rep,
        grid,
        FieldKind::Cospinor,
        kv,
        [cr(1.0), cr(-0.3), c(0.2, 0.4), cr(0.5)],
        mass,
    );
    let u = plane_wave(
        &rep,
        grid,
        FieldKind::Spinor,
        ku,
        [c(0.6, -0.1), cr(1.0), cr(0.2), c(-0.4, 0.3)],
        mass,
    );
    let (full, two) = variation_terms(&problem, &v).expect("variation terms evaluate");
    let p_full = pair_integral(&full, &u, &frames);
    let p_two = pair_integral(&two, &u, &frames);
    let reduction = (p_full - p_two).norm() / (1.0 + p_full.norm());

    let pass = dev_spinor <= fd_tol && dev_cospinor <= fd_tol && reduction <= fd_tol;
    verdict(
        "metric_variation_matches_finite_difference_and_reduces_on_shell",
        pass,
        &format!(
            "spinor {dev_spinor:.1e}, cospinor {dev_cospinor:.1e}, on-shell reduction \
             {reduction:.1e} (tolerance {fd_tol:.1e})"
        ),
    );
}

/// Standard next-permutation step; false once the sequence is exhausted.
fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Independent pairing enumerator: all permutations in lexicographic order,
/// keeping those that read off a canonical matching (sorted pairs, blocks
/// sorted by first element). Canonical permutations appear in the same
/// order as a smallest-free-index recursion, so sums agree bit for bit.
fn enumerated_npoint(n: usize, pair: &impl Fn(usize, usize) -> Complex64) -> Complex64 {
    if n % 2 == 1 {
        return cr(0.0);
    }
    let mut p: Vec<usize> = (0..n).collect();
    let mut total = cr(0.0);
    loop {
        let sorted_pairs = (0..n / 2).all(|k| p[2 * k] < p[2 * k + 1]);
        let sorted_blocks = (1..n / 2).all(|k| p[2 * k - 2] < p[2 * k]);
        if sorted_pairs && sorted_blocks {
            let mut prod = cr(1.0);
            for k in 0..n / 2 {
                prod *= pair(p[2 * k], p[2 * k + 1]);
            }
            total += prod;
        }
        if !next_permutation(&mut p) {
            break;
        }
    }
    total
}

fn random_vector(r: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect()
}

fn random_two_point(r: &mut ChaCha8Rng, space: &SymplecticSpace) -> TwoPointForm {
    // mu = G^T G + dim * I is comfortably positive; adding i/2 sigma gives
    // a valid two-point form.
    let dim = space.dim;
    let g: Vec<f64> = (0..dim * dim).map(|_| r.gen_range(-1.0..1.0)).collect();
    let mut m = vec![cr(0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut dot = if i == j { dim as f64 } else { 0.0 };
            for k in 0..dim {
                dot += g[k * dim + i] * g[k * dim + j];
            }
            m[i * dim + j] = c(dot, 0.5 * space.sigma_entry(i, j));
        }
    }
    TwoPointForm::new(space, m).expect("shifted Gram forms are admissible")
}

#[test]
fn pairing_combinatorics_and_quasifree_cumulants() {
    let mut r = rng(55);

    // Matching census: (2m - 1)!! perfect matchings of 2m points.
    let mut census_ok = true;
    let mut want = 1usize;
    for m in 1..=5 {
        want *= 2 * m - 1;
        let mut count = 0usize;
        each_matching(2 * m, &mut |_| count += 1);
        census_ok &= count == want;
    }

    // Quasi-free moments equal the independent pairing enumeration bit for
    // bit through order eight, and odd orders vanish identically.
    let space4 = SymplecticSpace::standard(4);
    let tp = random_two_point(&mut r, &space4);
    let mut moments_exact = true;
    for n in [2usize, 4, 6, 8] {
        let args: Vec<Vec<f64>> = (0..n).map(|_| random_vector(&mut r, 8)).collect();
        let fast = quasifree_npoint(&tp, &args);
        let brute = enumerated_npoint(n, &|i, j| tp.eval(&args[i], &args[j]));
        moments_exact &= fast == brute;
    }
    for n in [1usize, 3, 5, 7] {
        let odd: Vec<Vec<f64>> = (0..n).map(|_| random_vector(&mut r, 8)).collect();
        moments_exact &= quasifree_npoint(&tp, &odd) == cr(0.0);
    }

    // Cumulants of a quasi-free state cancel exactly beyond second order,
    // through order six.
    let space3 = SymplecticSpace::standard(3);
    let tp3 = random_two_point(&mut r, &space3);
    let nc = 6usize;
    let args: Vec<Vec<f64>> = (0..nc).map(|_| random_vector(&mut r, 6)).collect();
    let mut moments = vec![cr(0.0); 1 << nc];
    for mask in 1usize..(1 << nc) {
        let sub: Vec<Vec<f64>> = (0..nc)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| args[i].clone())
            .collect();
        moments[mask] = quasifree_npoint(&tp3, &sub);
    }
    let cum = truncated_from_moments(nc, &moments).expect("order is within bounds");
    let mut cumulants_ok = true;
    for mask in 1usize..(1 << nc) {
        if (mask as u32).count_ones() == 2 {
            cumulants_ok &= cum[mask] == moments[mask];
        } else {
            cumulants_ok &= cum[mask] == cr(0.0);
        }
    }

    // Moment <-> cumulant round trip.
    let cumulants: Vec<Complex64> = (0..(1 << nc))
        .map(|mask| {
            if mask == 0 {
                cr(0.0)
            } else {
                c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
            }
        })
        .collect();
    let mom = moments_from_truncated(nc, &cumulants).expect("order is within bounds");
    let back = truncated_from_moments(nc, &mom).expect("order is within bounds");
    let mut round = 0.0f64;
    for mask in 1usize..(1 << nc) {
        round = round.max((back[mask] - cumulants[mask]).norm());
    }

    let pass = census_ok && moments_exact && cumulants_ok && round <= 1e-12;
    verdict(
        "pairing_combinatorics_and_quasifree_cumulants",
        pass,
        &format!(
            "census {census_ok}, enumeration match {moments_exact}, cumulants vanish \
             {cumulants_ok}, round trip {round:.1e}"
        ),
    );
}

#[test]
fn weyl_braiding_and_oscillator_two_point() {
    let mut r = rng(66);

    // Exponentiated commutation relation: the braiding word of two Weyl
    // generators is a pure central phase.
    let space2 = SymplecticSpace::standard(2);
    let mut phase = 0.0f64;
    for _ in 0..50 {
        let f = random_vector(&mut r, 4);
        let h = random_vector(&mut r, 4);
        let w = weyl_commutator(&space2, &f, &h);
        let want = Complex64::from_polar(1.0, -space2.form(&f, &h));
        phase = phase.max((w.phase - want).norm());
        for x in &w.vector {
            phase = phase.max(x.abs());
        }
    }

    // Truncated oscillator at sixty-four levels: Weyl operators built by
    // matrix exponentials reproduce the vacuum two-point value.
    let (two_point, braiding, tail) = match oscillator_weyl_check(64, 3e-4) {
        Ok(rep) => (rep.two_point_dev, rep.braiding_dev, rep.tail),
        Err(_) => (f64::INFINITY, f64::INFINITY, f64::INFINITY),
    };

    let pass = phase <= 1e-13 && two_point <= 1e-6 && braiding <= 1e-8 && tail <= 1e-10;
    verdict(
        "weyl_braiding_and_oscillator_two_point",
        pass,
        &format!(
            "braiding phase {phase:.1e}, oscillator two-point {two_point:.1e}, \
             oscillator braiding {braiding:.1e}, tail {tail:.1e}"
        ),
    );
}

fn random_cvector(r: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    (0..dim)
        .map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
        .collect()
}

#[test]
fn car_relations_parity_norms_and_even_commutants() {
    let mut r = rng(77);
    let space = DoubledSpace::new(4);
    let fock = car_fock(&space).expect("mode count is within the Fock cap");
    let d = space.dim();

    // Anticommutators on every basis pair and Fock basis state, exactly.
    let mut basis_exact = true;
    for a in 0..d {
        for b in 0..d {
            let mut fa = vec![cr(0.0); d];
            fa[a] = cr(1.0);
            let mut fb = vec![cr(0.0); d];
            fb[b] = cr(1.0);
            let want = if a == b { cr(1.0) } else { cr(0.0) };
            for m in 0..fock.dim {
                let mut psi = vec![cr(0.0); fock.dim];
                psi[m] = cr(1.0);
                let x = fock.apply_b_dag(&space, &fa, &fock.apply_b(&fb, &psi));
                let y = fock.apply_b(&fb, &fock.apply_b_dag(&space, &fa, &psi));
                for k in 0..fock.dim {
                    let rhs = if k == m { want } else { cr(0.0) };
                    basis_exact &= x[k] + y[k] == rhs;
                }
            }
        }
    }

    // The same relations on random vectors and states.
    let mut dev = 0.0f64;
    for _ in 0..10 {
        let f = random_cvector(&mut r, d);
        let g = random_cvector(&mut r, d);
        let psi = random_cvector(&mut r, fock.dim);
        let x = fock.apply_b_dag(&space, &f, &fock.apply_b(&g, &psi));
        let y = fock.apply_b(&g, &fock.apply_b_dag(&space, &f, &psi));
        let want = space.inner(&f, &g);
        for k in 0..fock.dim {
            dev = dev.max((x[k] + y[k] - want * psi[k]).norm());
        }
        let x2 = fock.apply_b(&f, &fock.apply_b(&g, &psi));
        let y2 = fock.apply_b(&g, &fock.apply_b(&f, &psi));
        let want2 = space.inner(&space.plus(&f), &g);
        for k in 0..fock.dim {
            dev = dev.max((x2[k] + y2[k] - want2 * psi[k]).norm());
        }
    }

    // Charge conjugation squares to the fermion parity, exactly.
    let mut parity_exact = true;
    for k in 0..d {
        let mut b = vec![cr(0.0); d];
        b[k] = cr(1.0);
        let twice = space.charge_plus(&space.charge_plus(&b));
        for (tw, orig) in twice.iter().zip(&b) {
            parity_exact &= *tw == -orig;
        }
    }
    let f = random_cvector(&mut r, d);
    let psi = random_cvector(&mut r, fock.dim);
    let twice = fock.apply_b(&space.charge_plus(&space.charge_plus(&f)), &psi);
    let neg = fock.apply_b(&f, &psi);
    for k in 0..fock.dim {
        parity_exact &= twice[k] + neg[k] == cr(0.0);
    }

    // One-particle norm matches the inner-product square root.
    let mut norm_dev = 0.0f64;
    for _ in 0..10 {
        let v = random_cvector(&mut r, space.modes);
        let mut doubled = vec![cr(0.0); d];
        doubled[space.modes..].copy_from_slice(&v);
        let want = space.inner(&doubled, &doubled).re.sqrt();
        let got = fock_norm(&fock.apply_b(&doubled, &fock.vacuum()));
        norm_dev = norm_dev.max((got - want).abs());
    }

    // Even monomials in disjoint mode blocks commute.
    let half = space.modes / 2;
    let sample = |modes: &[usize], r: &mut ChaCha8Rng| -> Vec<Complex64> {
        let mut v = vec![cr(0.0); d];
        for &m in modes {
            v[m] = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
            v[space.modes + m] = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        }
        v
    };
    let lo: Vec<usize> = (0..half).collect();
    let hi: Vec<usize> = (half..space.modes).collect();
    let mut comm = 0.0f64;
    for _ in 0..5 {
        let f1 = sample(&lo, &mut r);
        let f2 = sample(&lo, &mut r);
        let g1 = sample(&hi, &mut r);
        let g2 = sample(&hi, &mut r);
        let psi = random_cvector(&mut r, fock.dim);
        let ac =
            fock.apply_b(&f1, &fock.apply_b(&f2, &fock.apply_b(&g1, &fock.apply_b(&g2, &psi))));
        let ca =
            fock.apply_b(&g1, &fock.apply_b(&g2, &fock.apply_b(&f1, &fock.apply_b(&f2, &psi))));
        for k in 0..fock.dim {
            comm = comm.max((ac[k] - ca[k]).norm());
        }
    }

    let pass = basis_exact && parity_exact && dev <= 1e-12 && norm_dev <= 1e-12 && comm <= 1e-12;
    verdict(
        "car_relations_parity_norms_and_even_commutants",
        pass,
        &format!(
            "basis exact {basis_exact}, parity exact {parity_exact}, random relations \
             {dev:.1e}, norms {norm_dev:.1e}, disjoint commutators {comm:.1e}"
        ),
    );
}

fn random_width(r: &mut ChaCha8Rng) -> [f64; 16] {
    // Q diag(d) Q^T with moderate eigenvalues, Q from a few Givens
    // rotations: keeps the quadrature well inside its comfort zone.
    let mut m = [0.0f64; 16];
    for i in 0..4 {
        m[4 * i + i] = r.gen_range(0.5..1.5);
    }
    for _ in 0..4 {
        let i = r.gen_range(0..4);
        let j = r.gen_range(0..4);
        if i == j {
            continue;
        }
        let th: f64 = r.gen_range(-0.5..0.5);
        let (s, co) = th.sin_cos();
        let mut rot = [0.0f64; 16];
        for k in 0..4 {
            rot[4 * k + k] = 1.0;
        }
        rot[4 * i + i] = co;
        rot[4 * j + j] = co;
        rot[4 * i + j] = s;
        rot[4 * j + i] = -s;
        let mut tmp = [0.0f64; 16];
        for row in 0..4 {
            for col in 0..4 {
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += rot[4 * row + k] * m[4 * k + col];
                }
                tmp[4 * row + col] = acc;
            }
        }
        for row in 0..4 {
            for col in 0..4 {
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += tmp[4 * row + k] * rot[4 * col + k];
                }
                m[4 * row + col] = acc;
            }
        }
    }
    m
}

fn random_center(r: &mut ChaCha8Rng) -> [f64; 4] {
    [
        r.gen_range(-1.0..1.0),
        r.gen_range(-1.0..1.0),
        r.gen_range(-1.0..1.0),
        r.gen_range(-1.0..1.0),
    ]
}

fn random_function(r: &mut ChaCha8Rng, nterms: usize) -> FourierTestFunction {
    let terms = (0..nterms)
        .map(|_| GaussianTerm {
            coeffs: vec![
                (c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)), [0, 0, 0, 0]),
                (
                    c(r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5)),
                    [if r.gen_bool(0.5) { 1 } else { 0 }, 1, 0, 0],
                ),
            ],
            center: random_center(r),
            width: random_width(r),
        })
        .collect();
    FourierTestFunction::new(terms, HalfSpaceSupport::None).expect("widths are positive definite")
}

#[test]
fn vacuum_positivity_annihilation_commutator_and_smoothing() {
    let mut r = rng(88);
    let q = QuadratureConfig::new(24, 1e-4).expect("node count is in range");
    let p = KGParams::new(1.0, 0.0).expect("massive scalar parameters");

    // Positivity of the vacuum pairing on one hundred random Gaussians.
    let mut positivity = 0.0f64;
    for _ in 0..100 {
        let f = FourierTestFunction::new(
            vec![GaussianTerm {
                coeffs: vec![(c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)), [0, 0, 0, 0])],
                center: random_center(&mut r),
                width: random_width(&mut r),
            }],
            HalfSpaceSupport::None,
        )
        .expect("widths are positive definite");
        match vacuum_two_point(&f.conjugate(), &f, &p, &q) {
            Ok(w) => positivity = positivity.max((-w.re).max(w.im.abs())),
            Err(_) => positivity = f64::INFINITY,
        }
    }

    // A transform supported on the positive-frequency half-space pairs to
    // exactly zero against the vacuum shell.
    let mut width = [0.0f64; 16];
    for i in 0..4 {
        width[4 * i + i] = r.gen_range(0.6..1.2);
    }
    let fplus = FourierTestFunction::new(
        vec![GaussianTerm {
            coeffs: vec![(c(0.7, 0.3), [0, 0, 0, 0])],
            center: [1.5, 0.2, -0.1, 0.4],
            width,
        }],
        HalfSpaceSupport::PositiveL0,
    )
    .expect("hard half-space support");
    let annihilated = match vacuum_two_point(&fplus.conjugate(), &fplus, &p, &q) {
        Ok(w) => w == cr(0.0),
        Err(_) => false,
    };

    // Defining identity: w2(f, h) - w2(h, f) = i E(f, h).
    let f = random_function(&mut r, 1).realized();
    let h = random_function(&mut r, 1).realized();
    let defect = (|| -> Option<f64> {
        let e_fh = commutator_pairing(&f, &h, &p, &q).ok()?;
        let w_fh = vacuum_two_point(&f, &h, &p, &q).ok()?;
        let w_hf = vacuum_two_point(&h, &f, &p, &q).ok()?;
        Some((w_fh - w_hf - c(0.0, 1.0) * e_fh).norm())
    })()
    .unwrap_or(f64::INFINITY);

    // The smoothed kernel is holomorphic in the retarded half-plane: the
    // time-step Cauchy-Riemann residual is second order in the step.
    let g1 = random_function(&mut r, 1);
    let x0 = [c(0.3, 0.15), cr(0.2), cr(-0.1), cr(0.05)];
    let residual = |s: f64| -> Option<f64> {
        let shift = |dx: Complex64| -> Option<Complex64> {
            let mut x = x0;
            x[0] += dx;
            smoothed_two_point(&x, 2, &g1, &p, &q).ok()
        };
        let d_re = (shift(cr(s))? - shift(cr(-s))?) / cr(2.0 * s);
        let d_im = (shift(c(0.0, s))? - shift(c(0.0, -s))?) / c(0.0, 2.0 * s);
        Some((d_re - d_im).norm())
    };
    let (ratio, order_ok) = match (residual(1e-3), residual(2e-3)) {
        (Some(r1), Some(r2)) if r1 > 0.0 => {
            let ratio = r2 / r1;
            (ratio, (2.8..=5.5).contains(&ratio))
        }
        _ => (f64::NAN, false),
    };

    let pass = positivity <= 1e-10 && annihilated && defect <= 1e-8 && order_ok;
    verdict(
        "vacuum_positivity_annihilation_commutator_and_smoothing",
        pass,
        &format!(
            "positivity {positivity:.1e}, annihilation {annihilated}, commutator identity \
             {defect:.1e}, residual step ratio {ratio:.2}"
        ),
    );
}

fn random_rows(lat: &Lattice1p1, r: &mut ChaCha8Rng, rows: std::ops::Range<usize>) -> Vec<f64> {
    let mut f = vec![0.0; lat.len()];
    for t in rows {
        for x in 0..lat.nx {
            f[lat.idx(t, x)] = r.gen_range(-1.0..1.0);
        }
    }
    f
}

fn slice_max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn lattice_green_inverse_cone_symplectic_and_timeslice() {
    let mut r = rng(99);
    let lat = Lattice1p1::new(48, 128, 0.05, 0.1, 1.0).expect("grid satisfies the CFL gate");

    // K(E+- f) = f away from the clamped boundary row.
    let f = random_rows(&lat, &mut r, 0..lat.nt);
    let scale = slice_max_abs(&f).max(1.0);
    let mut inverse = 0.0f64;
    match lat.retarded(&f).and_then(|u| lat.apply_k(&u)) {
        Ok(ku) => {
            for t in 0..lat.nt - 1 {
                for x in 0..lat.nx {
                    inverse = inverse.max((ku[lat.idx(t, x)] - f[lat.idx(t, x)]).abs() / scale);
                }
            }
        }
        Err(_) => inverse = f64::INFINITY,
    }
    match lat.advanced(&f).and_then(|u| lat.apply_k(&u)) {
        Ok(ku) => {
            for t in 1..lat.nt {
                for x in 0..lat.nx {
                    inverse = inverse.max((ku[lat.idx(t, x)] - f[lat.idx(t, x)]).abs() / scale);
                }
            }
        }
        Err(_) => inverse = f64::INFINITY,
    }

    // Impulse responses stay inside the stencil cone, within one cell.
    let (t0, x0) = (lat.nt / 4, lat.nx / 2);
    let mut imp = vec![0.0; lat.len()];
    imp[lat.idx(t0, x0)] = 1.0;
    let mut cone_ok = true;
    if let Ok(plus) = lat.retarded(&imp) {
        for t in 0..lat.nt {
            for x in 0..lat.nx {
                let inside = t > t0 && (x as isize - x0 as isize).unsigned_abs() <= (t - t0 - 1);
                if !inside {
                    cone_ok &= plus[lat.idx(t, x)] == 0.0;
                }
            }
        }
        cone_ok &= plus[lat.idx(t0 + 1, x0)] != 0.0;
    } else {
        cone_ok = false;
    }
    if let Ok(minus) = lat.advanced(&imp) {
        for t in 0..lat.nt {
            for x in 0..lat.nx {
                let inside = t < t0 && (x as isize - x0 as isize).unsigned_abs() <= (t0 - t - 1);
                if !inside {
                    cone_ok &= minus[lat.idx(t, x)] == 0.0;
                }
            }
        }
    } else {
        cone_ok = false;
    }

    // The Cauchy symplectic form of propagated solutions is the same on
    // five interior slices.
    let f1 = random_rows(&lat, &mut r, 5..10);
    let f2 = random_rows(&lat, &mut r, 5..10);
    let mut slice_dev = 0.0f64;
    match (lat.green(&f1), lat.green(&f2)) {
        (Ok(u), Ok(v)) => {
            let lo = lat.nt / 4;
            let hi = lat.nt - 2;
            let base = lat.cauchy_symplectic(&u, &v, lo).expect("slice is interior");
            if base.abs() <= 1e-6 {
                slice_dev = f64::INFINITY;
            } else {
                for k in 1..5 {
                    let t = lo + k * (hi - lo) / 5;
                    let s = lat.cauchy_symplectic(&u, &v, t).expect("slice is interior");
                    slice_dev = slice_dev.max((s - base).abs() / base.abs());
                }
            }
        }
        _ => slice_dev = f64::INFINITY,
    }

    // Timeslice decomposition: the slab part is supported in the slab, the
    // decomposition residual vanishes, and the propagator cannot tell the
    // source from its slab representative.
    let (lo, hi) = (lat.nt / 4, lat.nt / 4 + 8);
    let mut src = vec![0.0; lat.len()];
    let tc = (hi + 10).min(lat.nt - 6) as f64 + 3.0;
    for t in 0..lat.nt {
        for x in 0..lat.nx {
            if t as f64 >= tc - 3.0 && t as f64 <= tc + 3.0 {
                let dt = (t as f64 - tc) / 2.0;
                let dxv = (x as f64 - (lat.nx / 2) as f64) / 10.0;
                src[lat.idx(t, x)] = (-dt * dt - dxv * dxv).exp();
            }
        }
    }
    let mut slab_exact = true;
    let mut residual = 0.0f64;
    let mut prop_diff = 0.0f64;
    match lat.timeslice_decompose(&src, lo, hi) {
        Ok(split) => {
            for t in 0..lat.nt {
                for x in 0..lat.nx {
                    if t < lo || t > hi {
                        slab_exact &= split.slab_part[lat.idx(t, x)] == 0.0;
                    }
                }
            }
            slab_exact &= slice_max_abs(&split.slab_part) > 0.0;
            match lat.apply_k(&split.solution_part) {
                Ok(kh) => {
                    for i in 0..lat.len() {
                        residual = residual.max((src[i] - split.slab_part[i] - kh[i]).abs());
                    }
                }
                Err(_) => residual = f64::INFINITY,
            }
            match (lat.green(&src), lat.green(&split.slab_part)) {
                (Ok(ef), Ok(efp)) => {
                    let pscale = slice_max_abs(&ef).max(1e-30);
                    for i in 0..lat.len() {
                        prop_diff = prop_diff.max((ef[i] - efp[i]).abs() / pscale);
                    }
                }
                _ => prop_diff = f64::INFINITY,
            }
        }
        Err(_) => {
            slab_exact = false;
            residual = f64::INFINITY;
            prop_diff = f64::INFINITY;
        }
    }

    let pass = inverse <= 1e-12
        && cone_ok
        && slice_dev <= 1e-10
        && slab_exact
        && residual <= 1e-10
        && prop_diff <= 1e-10;
    verdict(
        "lattice_green_inverse_cone_symplectic_and_timeslice",
        pass,
        &format!(
            "inverse {inverse:.1e}, cone {cone_ok}, slices {slice_dev:.1e}, slab {slab_exact}, \
             residual {residual:.1e}, propagation {prop_diff:.1e}"
        ),
    );
}

fn unit3(r: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v = [
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
        ];
        let n2: f64 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if n2 > 1e-3 && n2 <= 1.0 {
            let n = n2.sqrt();
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Future-timelike covector with spatial-to-time ratio at most 0.9, safely
/// inside the polyhedral hull of the null generators.
fn causal_momentum(r: &mut ChaCha8Rng) -> [f64; 4] {
    let u = unit3(r);
    let rho = r.gen_range(0.0..0.9);
    let m = r.gen_range(0.2..2.0);
    [m, m * rho * u[0], m * rho * u[1], m * rho * u[2]]
}

fn add4(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn sub4(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

fn neg4(a: &[f64; 4]) -> [f64; 4] {
    [-a[0], -a[1], -a[2], -a[3]]
}

#[test]
fn cone_membership_exclusion_products_and_hadamard_pairs() {
    let mut r = rng(111);
    let opts = GammaOptions::default();
    let x = [0.3, -0.2, 0.1, 0.0];

    // Membership: coincident two- and three-point flow configurations and
    // distinct null-linked pairs, ten thousand samples, zero violations.
    let mut member_violations = 0usize;
    for k in 0..10_000 {
        let verdict = match k % 3 {
            0 => {
                let p = causal_momentum(&mut r);
                let cfg2 = ConeConfig {
                    points: vec![x, x],
                    covectors: vec![p, neg4(&p)],
                };
                in_gamma_n(&cfg2, &opts)
            }
            1 => {
                let p12 = causal_momentum(&mut r);
                let p13 = causal_momentum(&mut r);
                let p23 = causal_momentum(&mut r);
                let xi1 = add4(&p12, &p13);
                let xi2 = sub4(&p23, &p12);
                let xi3 = neg4(&add4(&p13, &p23));
                let cfg3 = ConeConfig {
                    points: vec![x, x, x],
                    covectors: vec![xi1, xi2, xi3],
                };
                in_gamma_n(&cfg3, &opts)
            }
            _ => {
                let u = unit3(&mut r);
                let s = r.gen_range(0.3..2.0);
                let x1 = [0.1, 0.2, -0.3, 0.4];
                let x2 = add4(&x1, &[s, s * u[0], s * u[1], s * u[2]]);
                let lam = r.gen_range(0.5..3.0);
                let xi1 = [lam * s, -lam * s * u[0], -lam * s * u[1], -lam * s * u[2]];
                let cfgn = ConeConfig {
                    points: vec![x1, x2],
                    covectors: vec![xi1, neg4(&xi1)],
                };
                in_gamma_n(&cfgn, &opts)
            }
        };
        if verdict != Ok(ConeVerdict::Member) {
            member_violations += 1;
        }
    }

    // Exclusion: negated first vertex, tilted momenta, spacelike links,
    // ten thousand samples, zero violations.
    let mut exclusion_violations = 0usize;
    for k in 0..10_000 {
        let verdict = match k % 3 {
            0 => {
                let p = causal_momentum(&mut r);
                let cfg2 = ConeConfig {
                    points: vec![x, x],
                    covectors: vec![neg4(&p), neg4(&p)],
                };
                in_gamma_n(&cfg2, &opts)
            }
            1 => {
                let u = unit3(&mut r);
                let s = r.gen_range(0.3..2.0);
                let x1 = [0.1, 0.2, -0.3, 0.4];
                let x2 = add4(&x1, &[s, s * u[0], s * u[1], s * u[2]]);
                let lam = r.gen_range(0.5..3.0);
                let mut bad = [lam * s, -lam * s * u[0], -lam * s * u[1], -lam * s * u[2]];
                bad[2] += 0.5 * lam * s;
                bad[3] -= 0.3 * lam * s;
                let cfgn = ConeConfig {
                    points: vec![x1, x2],
                    covectors: vec![bad, neg4(&bad)],
                };
                in_gamma_n(&cfgn, &opts)
            }
            _ => {
                let u = unit3(&mut r);
                let x1 = [0.0; 4];
                let x2 = [0.1, u[0], u[1], u[2]];
                let p = causal_momentum(&mut r);
                let cfgn = ConeConfig {
                    points: vec![x1, x2],
                    covectors: vec![p, neg4(&p)],
                };
                in_gamma_n(&cfgn, &opts)
            }
        };
        if verdict != Ok(ConeVerdict::NotMember) {
            exclusion_violations += 1;
        }
    }

    // Product closure: interleaving two member configurations on disjoint
    // clusters stays a member, one thousand samples.
    let mut product_violations = 0usize;
    for _ in 0..1000 {
        let xa = [0.0; 4];
        let u = unit3(&mut r);
        let xb = [0.05, 0.8 * u[0], 0.8 * u[1], 0.8 * u[2]];
        let p = causal_momentum(&mut r);
        let q = causal_momentum(&mut r);
        let cfgm = ConeConfig {
            points: vec![xa, xb, xa, xb],
            covectors: vec![p, q, neg4(&p), neg4(&q)],
        };
        if in_gamma_n(&cfgm, &opts) != Ok(ConeVerdict::Member) {
            product_violations += 1;
        }
    }

    // Hadamard-template pairs land inside the two-point cone, and the
    // template rejects mismatched configurations, one thousand samples.
    let tol = 1e-9;
    let mut hadamard_violations = 0usize;
    for _ in 0..1000 {
        let u = unit3(&mut r);
        let k = r.gen_range(0.5..2.0);
        let xi2 = [k, k * u[0], k * u[1], k * u[2]];
        let xi = neg4(&xi2);
        let base = [r.gen_range(-1.0..1.0), 0.0, 0.3, -0.2];
        let mut ok = in_hadamard_set(&base, &xi, &base, &xi2, tol);
        ok &= in_gamma_n(&hadamard_to_cone_config(&base, &xi, &base, &xi2), &opts)
            == Ok(ConeVerdict::Member);

        let s = r.gen_range(0.2..1.5);
        let y = add4(&base, &[s, s * u[0], s * u[1], s * u[2]]);
        let xi2b = [k, -k * u[0], -k * u[1], -k * u[2]];
        let xib = neg4(&xi2b);
        ok &= in_hadamard_set(&base, &xib, &y, &xi2b, tol);
        ok &= in_gamma_n(&hadamard_to_cone_config(&base, &xib, &y, &xi2b), &opts)
            == Ok(ConeVerdict::Member);

        ok &= !in_hadamard_set(&base, &xi2, &base, &xi, tol);
        let skew = add4(&xi2, &[0.0, 0.3 * k, 0.0, 0.0]);
        ok &= !in_hadamard_set(&base, &xi, &base, &skew, tol);
        let yy = add4(&base, &[0.1, 0.9, 0.0, 0.0]);
        ok &= !in_hadamard_set(&base, &xib, &yy, &xi2b, tol);
        if !ok {
            hadamard_violations += 1;
        }
    }

    let pass = member_violations == 0
        && exclusion_violations == 0
        && product_violations == 0
        && hadamard_violations == 0;
    verdict(
        "cone_membership_exclusion_products_and_hadamard_pairs",
        pass,
        &format!(
            "member violations {member_violations}, exclusion violations \
             {exclusion_violations}, product violations {product_violations}, hadamard \
             violations {hadamard_violations}"
        ),
    );
}

#[test]
fn wavefront_verdicts_and_pullback_covariance() {
    let mut opts = ScanOptions::default();
    opts.magnitudes = 12;
    let dirs = default_directions();

    // Point mass: singular in every direction.
    let delta_misses = match wf_decay_scan(&TestDistribution::DeltaOrigin, &[0.0; 4], &dirs, &opts)
    {
        Ok(scan) => scan.iter().filter(|v| !v.singular).count(),
        Err(_) => dirs.len(),
    };

    // Smooth Gaussian: regular in every direction, at two base points.
    let mut quad = [0.0f64; 16];
    for d in 0..4 {
        quad[4 * d + d] = 1.0;
    }
    quad[1] = 0.2;
    quad[4] = 0.2;
    let gauss = TestDistribution::Gaussian { quad };
    let mut gauss_misses = 0usize;
    for x in [[0.0; 4], [0.4, -0.2, 0.3, 0.1]] {
        match wf_decay_scan(&gauss, &x, &dirs, &opts) {
            Ok(scan) => gauss_misses += scan.iter().filter(|v| v.singular).count(),
            Err(_) => gauss_misses += dirs.len(),
        }
    }

    // Time jump: singular exactly along the pure +-time covectors.
    let step_misses =
        match wf_decay_scan(&TestDistribution::HeavisideGaussian, &[0.0; 4], &dirs, &opts) {
            Ok(scan) => scan
                .iter()
                .filter(|v| {
                    let conormal =
                        v.direction[1] == 0.0 && v.direction[2] == 0.0 && v.direction[3] == 0.0;
                    v.singular != conormal
                })
                .count(),
            Err(_) => dirs.len(),
        };

    // Line source: singular exactly on the conormal hyperplane.
    let line = TestDistribution::DeltaLine {
        dir: [0.0, 1.0, 0.0, 0.0],
    };
    let line_misses = match wf_decay_scan(&line, &[0.0; 4], &dirs, &opts) {
        Ok(scan) => scan
            .iter()
            .filter(|v| v.singular != (v.direction[1] == 0.0))
            .count(),
        Err(_) => dirs.len(),
    };

    // Verdicts transform covariantly under three linear pullbacks.
    let mut identity = [0.0f64; 16];
    for d in 0..4 {
        identity[4 * d + d] = 1.0;
    }
    let mut shear = identity;
    shear[1] = 0.3;
    let mut rot = identity;
    let (s, co) = 0.7f64.sin_cos();
    rot[5] = co;
    rot[6] = -s;
    rot[9] = s;
    rot[10] = co;
    let mut pullback_misses = 0usize;
    for map in [identity, shear, rot] {
        match wf_pullback_check(&map, &line, &[0.0; 4], &dirs, &opts) {
            Ok((a, b)) => {
                pullback_misses += a
                    .iter()
                    .zip(&b)
                    .filter(|(va, vb)| va.singular != vb.singular)
                    .count();
            }
            Err(_) => pullback_misses += dirs.len(),
        }
    }

    let pass = delta_misses == 0
        && gauss_misses == 0
        && step_misses == 0
        && line_misses == 0
        && pullback_misses == 0;
    verdict(
        "wavefront_verdicts_and_pullback_covariance",
        pass,
        &format!(
            "delta misses {delta_misses}, gaussian misses {gauss_misses}, step misses \
             {step_misses}, line misses {line_misses}, pullback misses {pullback_misses}"
        ),
    );
}

#[test]
fn slab_deformation_certificate_and_monotonicity() {
    // Wide early segment, narrow late segment, fast cones; the slab
    // deformation must funnel the late region's dependence through the
    // early one.
    let lat = LatticeSpacetime::uniform_1p1(64, 257, 1.0, 1.0, 4.0, 1.0)
        .expect("scenario dimensions are valid");
    let k_early = Region::row_segment(&lat, 8, 68, 188);
    let k_late = Region::row_segment(&lat, 44, 124, 132);
    let plan = DeformationPlan {
        slab_lo: 12,
        slab_hi: 40,
        start_scale: 1.0,
        max_halvings: 20,
    };

    let undeformed_misses = match domain_of_dependence(&lat, &k_early, Aperture::Inner) {
        Ok(d0) => !k_late.is_subset_of(&d0),
        Err(_) => false,
    };

    let outcome = deform_and_certify(&lat, &k_early, &k_late, &plan).expect("search completes");
    let within = outcome.certified && outcome.halvings <= 12;
    let inclusions = outcome.certified && outcome.inner_ok && outcome.outer_ok;

    // Inner domains grow monotonically as the scale halves.
    let mut monotone = true;
    let mut prev: Option<Region> = None;
    let top = if outcome.certified { outcome.halvings } else { 6 };
    for k in 0..=top {
        let bent = deformed(&lat, plan.slab_lo, plan.slab_hi, 0.5f64.powi(k as i32))
            .expect("scale stays positive");
        match domain_of_dependence(&bent, &k_early, Aperture::Inner) {
            Ok(d) => {
                if let Some(p) = &prev {
                    monotone &= p.is_subset_of(&d);
                }
                prev = Some(d);
            }
            Err(_) => monotone = false,
        }
    }

    let pass = undeformed_misses && within && inclusions && monotone;
    verdict(
        "slab_deformation_certificate_and_monotonicity",
        pass,
        &format!(
            "undeformed misses {undeformed_misses}, certified in {} halvings (bound 12), \
             inner and outer inclusions {inclusions}, monotone {monotone}",
            outcome.halvings
        ),
    );
}
