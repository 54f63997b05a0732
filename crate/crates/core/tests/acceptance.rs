//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! and asserting its runtime budget. Run with `cargo test --test acceptance`
//! (add `-- --nocapture` to see the lines for passing criteria too).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shtuka_core::adlv::{
    adlv_member_smith, adlv_points, enumerate_lattices, metric_dtilde, oracle_subspace_to_basis,
    oracle_window_subspaces,
};
use shtuka_core::newton::{check_decency, kottwitz_gl, newton_slopes};
use shtuka_core::sample::{
    random_budget_etale_shtuka, random_dual_instance, random_integral_unimodular,
    random_loop_element,
};
use shtuka_core::semilinear::{bounded_by, relative_position, smith_form, BoundSpec, Coweight};
use shtuka_core::shtuka::{
    embed_matrix, epsilon_system_solution_dim, is_quasi_isogeny, lang_trivialize,
    lift_qisog_dual_numbers, minimal_splitting_degree, reduce_matrix_mod_eps, tate_module,
};
use shtuka_core::torus::{component, embedding_ratio, norm_mu_element, torus_mul};
use shtuka_core::{CoeffRing, Error, FieldSpec, LoopElement, Series};
use std::time::Instant;

fn ring_q(q: u64) -> CoeffRing {
    CoeffRing::from_q_ext(q, 1).unwrap()
}

fn report(name: &str, started: Instant, budget_secs: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("ACCEPTANCE {name}: PASS ({elapsed:.2}s, budget {budget_secs}s)");
    assert!(
        elapsed < budget_secs,
        "{name} exceeded its runtime budget: {elapsed:.2}s >= {budget_secs}s"
    );
}

/// Criterion 1: the torus norm computation over F_3 and F_5 with nilpotency
/// order 8 and z-precision 16, exactly.
#[test]
fn criterion_1_torus_norm_reproduction() {
    let started = Instant::now();
    for p in [3u64, 5] {
        let field = FieldSpec::new(p, 1).unwrap();
        let g = norm_mu_element(&field, 8, 16).unwrap();
        // closed-form agreement is certified inside norm_mu_element; check
        // the expansion once more by hand: alpha = -1 - 2 sum zeta^k z^-k
        let ring = g.a.ring().clone();
        let xi = ring.generator().unwrap();
        let zeta = ring.mul(&xi, &xi);
        assert_eq!(g.a.coeff(0).unwrap(), ring.neg(&ring.one()));
        let mut zeta_pow = zeta.clone();
        for k in 1..4 {
            let want = ring.neg(&ring.mul(&ring.from_u64(2), &zeta_pow));
            assert_eq!(g.a.coeff(-k).unwrap(), want, "alpha coefficient at z^-{k}");
            zeta_pow = ring.mul(&zeta_pow, &zeta);
        }
        assert!(ring.is_zero(&g.a.coeff(-4).unwrap()), "zeta^4 = xi^8 = 0");
        for k in 1..16i64 {
            assert!(ring.is_zero(&g.a.coeff(k).unwrap()), "alpha has no positive powers");
        }
        // beta = -2 sum xi^{2k+1} z^{-k-1}
        let mut xi_pow = xi.clone();
        for k in 1..=4i64 {
            let want = ring.neg(&ring.mul(&ring.from_u64(2), &xi_pow));
            assert_eq!(g.b.coeff(-k).unwrap(), want, "beta coefficient at z^-{k}");
            xi_pow = ring.mul(&xi_pow, &zeta);
        }
        // defining equation exactly to precision
        let z = Series::monomial(ring.clone(), ring.one(), 1, 16);
        let lhs = g.a.mul(&g.a).unwrap().sub(&g.b.mul(&g.b).unwrap().mul(&z).unwrap()).unwrap();
        assert!(lhs.eq_to_common_prec(&Series::one(ring.clone(), 16)));
        // embedding ratio equals g^2 and its closed form (certified inside),
        // and coefficientwise against g*g here on the full window [.., 16)
        let ratio = embedding_ratio(&field, 8, 16).unwrap();
        assert!(ratio.a.prec() >= 16 && ratio.b.prec() >= 16);
        let g_wide = norm_mu_element(&field, 8, 22).unwrap();
        let sq = torus_mul(&g_wide, &g_wide).unwrap();
        assert!(sq.a.prec() >= 16 && sq.b.prec() >= 16);
        assert!(ratio.eq_to_common_prec(&sq));
        // the ratio leaves the Neron model: z-integrality fails
        assert!(matches!(component(&ratio), Err(Error::NotInNeronModel(_))));
    }
    report("1 torus norm reproduction", started, 1.0);
}

/// Criterion 2: minors-vs-Smith agreement and exact reconstruction on 500
/// random Laurent-invertible matrices.
#[test]
fn criterion_2_hodge_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0dce);
    let mut done = 0usize;
    while done < 500 {
        let r = if rng.random_bool(0.5) { 2 } else { 3 };
        let q = if rng.random_bool(0.5) { 2 } else { 3 };
        let ring = ring_q(q);
        let g = random_loop_element(&mut rng, &ring, r, -3, 12);
        let (u, mu, v) = smith_form(&g).unwrap();
        // exact reconstruction to the guaranteed precision
        let d = LoopElement::diag_z_powers(ring.clone(), mu.parts(), 12);
        let back = u.mul(&d).unwrap().mul(&v).unwrap();
        assert!(back.eq_to_common_prec(&g), "U diag V must reconstruct g");
        assert!(u.is_integrally_invertible().unwrap());
        assert!(v.is_integrally_invertible().unwrap());

        // candidate bounds near the actual position: perturbations keeping
        // weak decrease, plus total-shifted ones that must fail
        let mut candidates = vec![mu.parts().to_vec()];
        for _ in 0..3 {
            let mut c = mu.parts().to_vec();
            let i = rng.random_range(0..r);
            c[i] += rng.random_range(0..2i64);
            let j = rng.random_range(0..r);
            c[j] -= rng.random_range(0..2i64);
            c.sort_by(|a, b| b.cmp(a));
            candidates.push(c);
        }
        for cand in candidates {
            let Ok(cw) = Coweight::new(cand) else { continue };
            let leq = BoundSpec::leq(cw.clone());
            let eq = BoundSpec::eq(cw.clone());
            let (Ok(minor_leq), Ok(minor_eq)) = (bounded_by(&g, &leq), bounded_by(&g, &eq))
            else {
                // certification needs more precision for this bound; not a
                // disagreement between the two routes
                continue;
            };
            let smith_leq = mu.dominated_by(&cw);
            let smith_eq = mu == cw;
            assert_eq!(minor_leq, smith_leq, "minor/Smith dominance disagree");
            assert_eq!(minor_eq, smith_eq, "minor/Smith equality disagree");
        }
        done += 1;
    }
    report("2 hodge oracle equivalence (500 samples)", started, 10.0);
}

/// Criterion 3: Newton suite: slope sums, conjugation invariance, Mazur
/// dominance, supersingular slopes and decency.
#[test]
fn criterion_3_newton_suite() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xbead);

    // fixed supersingular example
    let r2 = ring_q(2);
    let b = LoopElement::new(
        2,
        vec![
            Series::zero(r2.clone(), 120),
            Series::monomial(r2.clone(), r2.one(), 1, 120),
            Series::one(r2.clone(), 120),
            Series::zero(r2.clone(), 120),
        ],
    )
    .unwrap();
    let s = newton_slopes(&b, 8).unwrap();
    assert_eq!(s.slopes(), &[(1, 2), (1, 2)]);
    assert!(check_decency(&b, 2).unwrap());
    assert!(!check_decency(&b, 1).unwrap());

    // random samples: slope sum and Mazur dominance
    let mut samples = 0usize;
    while samples < 24 {
        let r = if rng.random_bool(0.5) { 2 } else { 3 };
        let q = if rng.random_bool(0.5) { 2 } else { 3 };
        let ring = ring_q(q);
        let g = random_loop_element(&mut rng, &ring, r, -1, 46);
        let max_abs = g
            .entries()
            .iter()
            .map(|e| match e.valuation() {
                shtuka_core::Valuation::At(v) => v.abs(),
                _ => 0,
            })
            .max()
            .unwrap();
        if max_abs > 1 {
            continue;
        }
        let slopes = match newton_slopes(&g, 14) {
            Ok(s) => s,
            Err(Error::DidNotStabilize(_)) => continue,
            Err(e) => panic!("newton failed: {e}"),
        };
        let kott = kottwitz_gl(&g).unwrap();
        assert_eq!(slopes.sum(), (kott, 1), "slope sum equals det valuation");
        let hodge = relative_position(&g).unwrap();
        assert!(
            slopes.dominated_by_coweight(&hodge),
            "Mazur: Newton lies below Hodge"
        );
        samples += 1;
    }

    // sigma-conjugation invariance on 100 random conjugations
    let b_short = b.truncate(40);
    let base_slopes = newton_slopes(&b_short, 6).unwrap();
    let mut conjugations = 0usize;
    while conjugations < 100 {
        let c = random_integral_unimodular(&mut rng, &r2, 2, 40);
        let conj = c
            .mul(&b_short)
            .unwrap()
            .mul(&c.frobenius().inverse().unwrap())
            .unwrap();
        let high_val = conj.entries().iter().any(|e| match e.valuation() {
            shtuka_core::Valuation::At(v) => v.abs() > 3,
            _ => true,
        });
        if high_val {
            // the up-front ladder check would demand more horizon than the
            // sample carries; draw another conjugator
            continue;
        }
        let s2 = newton_slopes(&conj, 6).unwrap();
        assert_eq!(s2.slopes(), base_slopes.slopes());
        conjugations += 1;
    }
    report("3 newton suite", started, 10.0);
}

/// Criterion 4: Lang trivialization and Tate modules on 50 random etale
/// shtukas within extension budget 24. The splitting degree of an etale
/// shtuka equals the order of `b` in the truncated matrix group, so the
/// sampler conditions on that order staying within the budget; the same
/// twisted-norm criterion then serves as an independent oracle for the
/// degree the solver must return.
#[test]
fn criterion_4_lang_tate_suite() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a06);
    for i in 0..50 {
        let r = 1 + (i % 3);
        let q = if i % 2 == 0 { 2 } else { 3 };
        let ring = ring_q(q);
        let shtuka = random_budget_etale_shtuka(&mut rng, &ring, r, 12, 24);
        let oracle_d = minimal_splitting_degree(&shtuka, 24)
            .unwrap()
            .expect("sampler guarantees a budgeted degree");
        let (d, c) = lang_trivialize(&shtuka, 24)
            .unwrap_or_else(|e| panic!("sample {i} (r={r}, q={q}) failed: {e}"));
        assert!(d <= 24);
        assert_eq!(d, oracle_d, "sample {i}: solver degree vs norm-criterion degree");
        // the Lang identity c = b sigma(c), exactly to precision
        let (b_big, _) = embed_matrix(shtuka.frobenius_matrix(), d).unwrap();
        let lhs = b_big.mul(&c.frobenius()).unwrap();
        assert!(lhs.eq_to_common_prec(&c), "sample {i}: c = b sigma(c) fails");
        assert!(c.is_integrally_invertible().unwrap());
        // rank-r freeness and Galois integrality
        let t = tate_module(&shtuka, 24).unwrap();
        assert!(t.basis.is_integrally_invertible().unwrap());
        assert!(t.galois.is_integrally_invertible().unwrap());
    }
    report("4 lang/tate suite (50 samples)", started, 30.0);
}

/// Criterion 5: ADLV counts against the brute-force oracle, representative
/// independence, the rank-1 window count and the rational-base emptiness.
#[test]
fn criterion_5_adlv_oracle_equivalence() {
    let started = Instant::now();
    let r2 = ring_q(2);
    let b = LoopElement::new(
        2,
        vec![
            Series::zero(r2.clone(), 40),
            Series::monomial(r2.clone(), r2.one(), 1, 40),
            Series::one(r2.clone(), 40),
            Series::zero(r2.clone(), 40),
        ],
    )
    .unwrap();
    let bound = BoundSpec::leq(Coweight::new(vec![1, 0]).unwrap());

    for ext in [1usize, 2] {
        let fast = adlv_points(&b, &bound, ext, 2, 1 << 22).unwrap();
        // oracle: same window, membership through the Smith route on a
        // randomized non-canonical representative of every lattice
        let (b_big, ring_d) = if ext == 1 {
            (b.clone(), r2.clone())
        } else {
            embed_matrix(&b, ext).unwrap()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0xad1f + ext as u64);
        let lats = enumerate_lattices(&ring_d, 2, 2, 1 << 22).unwrap();
        let mut oracle_count = 0usize;
        for lat in &lats {
            let g = lat.to_loop_element(&ring_d, 40).unwrap();
            let k = random_integral_unimodular(&mut rng, &ring_d, 2, 40);
            let raw = g.mul(&k).unwrap();
            if adlv_member_smith(&raw, &b_big, &bound).unwrap() {
                oracle_count += 1;
            }
        }
        assert_eq!(fast.points.len(), oracle_count, "ext {ext}: counts differ");
        assert!(!fast.points.is_empty(), "superbasic ADLV should be nonempty");
    }

    // over F_2 the fully independent subspace enumeration must see the same
    // lattices and the same member count
    {
        let subspaces = oracle_window_subspaces(&r2, 2, 2).unwrap();
        let lats = enumerate_lattices(&r2, 2, 2, 1 << 22).unwrap();
        assert_eq!(subspaces.len(), lats.len(), "lattice counts (oracle vs fast)");
        let mut member = 0usize;
        for rows in &subspaces {
            let raw = oracle_subspace_to_basis(&r2, 2, 2, rows).unwrap();
            if adlv_member_smith(&raw, &b, &bound).unwrap() {
                member += 1;
            }
        }
        let fast = adlv_points(&b, &bound, 1, 2, 1 << 22).unwrap();
        assert_eq!(member, fast.points.len(), "subspace-oracle member count");
    }

    // representative independence: 100 random integral coset changes
    {
        let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
        let lats = enumerate_lattices(&r2, 2, 2, 1 << 22).unwrap();
        let fast = adlv_points(&b, &bound, 1, 2, 1 << 22).unwrap();
        for _ in 0..100 {
            let lat = &lats[rng.random_range(0..lats.len())];
            let g = lat.to_loop_element(&r2, 40).unwrap();
            let in_set = fast.points.contains(lat);
            let k = random_integral_unimodular(&mut rng, &r2, 2, 40);
            let gk = g.mul(&k).unwrap();
            let h = gk.inverse().unwrap().mul(&b).unwrap().mul(&gk.frobenius()).unwrap();
            assert_eq!(bounded_by(&h, &bound).unwrap(), in_set);
        }
    }

    // rank 1: b = z^k gives the whole window for the bound {= (k)}
    {
        let r3 = ring_q(3);
        let b1 = LoopElement::diag_z_powers(r3.clone(), &[2], 30);
        let bd = BoundSpec::eq(Coweight::new(vec![2]).unwrap());
        for a in 0..=2i64 {
            let res = adlv_points(&b1, &bd, 1, a, 1 << 22).unwrap();
            assert_eq!(res.points.len() as i64, 2 * a + 1);
        }
    }

    // rational base point: sigma(g) = g forces relative position zero
    {
        let bid = LoopElement::identity(r2.clone(), 2, 30);
        let bd = BoundSpec::eq(Coweight::new(vec![1, 0]).unwrap());
        let res = adlv_points(&bid, &bd, 1, 1, 1 << 22).unwrap();
        assert_eq!(res.points.len(), 0);
    }
    report("5 adlv oracle equivalence", started, 60.0);
}

/// Criterion 6: rigidity round trip on 100 random dual-number instances.
#[test]
fn criterion_6_rigidity_round_trip() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x416d);
    let field = FieldSpec::new(3, 1).unwrap();
    let dual = CoeffRing::dual_numbers(field, 3).unwrap();
    for i in 0..100 {
        let rank = 1 + (i % 3);
        let inst = random_dual_instance(&mut rng, &dual, rank, 8);
        let f = lift_qisog_dual_numbers(&inst.fbar, &inst.source, &inst.target).unwrap();
        assert!(
            is_quasi_isogeny(&f, &inst.source, &inst.target).unwrap(),
            "instance {i}: lift must intertwine"
        );
        assert!(
            reduce_matrix_mod_eps(&f).unwrap().eq_to_common_prec(&inst.fbar),
            "instance {i}: lift must reduce to fbar"
        );
        assert_eq!(
            epsilon_system_solution_dim(&inst.source, 3).unwrap(),
            0,
            "instance {i}: epsilon system must be trivial"
        );
    }
    report("6 rigidity round trip (100 instances)", started, 5.0);
}

/// Criterion 7: metric axioms on sampled triples and the distance-2 example.
#[test]
fn criterion_7_metric_axioms() {
    let started = Instant::now();
    let r2 = ring_q(2);
    let prec = 24;
    let lats = enumerate_lattices(&r2, 2, 2, 1 << 22).unwrap();
    // group by determinant valuation: finite distances need equal ones
    let mut by_det: std::collections::BTreeMap<i64, Vec<&shtuka_core::adlv::Lattice>> =
        Default::default();
    for l in &lats {
        by_det.entry(l.diag_exponents().iter().sum()).or_default().push(l);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x3a1e);
    let classes: Vec<_> = by_det.values().filter(|v| v.len() >= 3).collect();
    let mut triples = 0usize;
    while triples < 200 {
        let class = classes[rng.random_range(0..classes.len())];
        let pick = |rng: &mut ChaCha8Rng| class[rng.random_range(0..class.len())];
        let (x, y, w) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let xr = x.to_loop_element(&r2, prec).unwrap();
        let yr = y.to_loop_element(&r2, prec).unwrap();
        let wr = w.to_loop_element(&r2, prec).unwrap();
        let dxx = metric_dtilde(&xr, &xr).unwrap();
        assert_eq!(dxx, 0, "identity axiom");
        let dxy = metric_dtilde(&xr, &yr).unwrap();
        let dyx = metric_dtilde(&yr, &xr).unwrap();
        assert_eq!(dxy, dyx, "symmetry axiom");
        if x == y {
            assert_eq!(dxy, 0, "coincidence axiom");
        } else {
            assert!(dxy > 0, "distinct lattices are at positive distance");
        }
        let dxw = metric_dtilde(&xr, &wr).unwrap();
        let dyw = metric_dtilde(&yr, &wr).unwrap();
        assert!(dxw <= dxy + dyw, "triangle inequality");
        triples += 1;
    }
    // the displayed distance-2 example
    let id = LoopElement::identity(r2.clone(), 2, prec);
    let g = LoopElement::diag_z_powers(r2, &[2, -2], prec);
    assert_eq!(metric_dtilde(&id, &g).unwrap(), 2);
    report("7 metric axioms (200 triples)", started, 10.0);
}
