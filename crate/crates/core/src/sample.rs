//! Deterministic pseudo-random instances for tests, property suites and the
//! demo subcommands. Everything is driven by a caller-seeded ChaCha stream
//! so reports are reproducible byte for byte.

use crate::matrix::LoopElement;
use crate::ring::CoeffRing;
use crate::series::Series;
use crate::shtuka::{include_matrix_in_dual, LocalShtuka};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random series with valuation at least `min_val` and horizon `prec`.
pub fn random_series(rng: &mut ChaCha8Rng, ring: &CoeffRing, min_val: i64, prec: i64) -> Series {
    let order = ring.field().order().unwrap_or(u128::MAX).min(1 << 20);
    let len = (prec - min_val).max(0) as usize;
    let coeffs: Vec<_> = (0..len)
        .map(|_| {
            let idx = rng.random_range(0..order);
            ring.from_field(&ring.field().element_from_index(idx))
        })
        .collect();
    Series::with_prec(ring.clone(), min_val, coeffs, prec)
}

/// Random Laurent-invertible matrix with entry valuations `>= min_val`.
pub fn random_loop_element(
    rng: &mut ChaCha8Rng,
    ring: &CoeffRing,
    rank: usize,
    min_val: i64,
    prec: i64,
) -> LoopElement {
    loop {
        let entries: Vec<_> = (0..rank * rank)
            .map(|_| random_series(rng, ring, min_val, prec))
            .collect();
        if let Ok(m) = LoopElement::new(rank, entries) {
            return m;
        }
    }
}

/// Random Laurent-invertible matrix in Cartan shape `U1 diag(z^a) U2` with
/// `|a_i| <= depth` and unimodular factors. Inverting such elements spends
/// almost no horizon, which keeps long products at usable precision.
pub fn random_cartan_element(
    rng: &mut ChaCha8Rng,
    ring: &CoeffRing,
    rank: usize,
    depth: i64,
    prec: i64,
) -> LoopElement {
    let u1 = random_integral_unimodular(rng, ring, rank, prec);
    let u2 = random_integral_unimodular(rng, ring, rank, prec);
    let exps: Vec<i64> = (0..rank).map(|_| rng.random_range(-depth..=depth)).collect();
    let d = LoopElement::diag_z_powers(ring.clone(), &exps, prec);
    u1.mul(&d).unwrap().mul(&u2).unwrap()
}

/// Random integral matrix with integral inverse: a unit constant term plus
/// an integral tail.
pub fn random_integral_unimodular(
    rng: &mut ChaCha8Rng,
    ring: &CoeffRing,
    rank: usize,
    prec: i64,
) -> LoopElement {
    let field = ring.field().clone();
    let order = field.order().unwrap_or(u128::MAX).min(1 << 20);
    loop {
        let mut entries = Vec::with_capacity(rank * rank);
        for _ in 0..rank * rank {
            let len = prec.max(1) as usize;
            let coeffs: Vec<_> = (0..len)
                .map(|_| ring.from_field(&field.element_from_index(rng.random_range(0..order))))
                .collect();
            entries.push(Series::with_prec(ring.clone(), 0, coeffs, prec));
        }
        if let Ok(m) = LoopElement::new(rank, entries) {
            if m.is_integrally_invertible().unwrap_or(false) {
                return m;
            }
        }
    }
}

/// Random etale shtuka: integral Frobenius matrix with integral inverse.
pub fn random_etale_shtuka(
    rng: &mut ChaCha8Rng,
    ring: &CoeffRing,
    rank: usize,
    prec: i64,
) -> LocalShtuka {
    let b = random_integral_unimodular(rng, ring, rank, prec);
    LocalShtuka::new(b).expect("unimodular matrices are Frobenius matrices")
}

/// Random etale shtuka whose splitting degree stays within `cap`. The degree
/// equals the order of `b` in the truncated matrix group, whose p-part grows
/// like `p^(log_p prec)`; over `F_3` a raw random tail almost always
/// overshoots a two-digit cap, so the tail is started deeper there and
/// rejection sampling (against the exact twisted-norm criterion) does the
/// rest.
pub fn random_budget_etale_shtuka(
    rng: &mut ChaCha8Rng,
    ring: &CoeffRing,
    rank: usize,
    prec: i64,
    cap: usize,
) -> LocalShtuka {
    let field = ring.field().clone();
    let order = field.order().unwrap_or(u128::MAX).min(1 << 20);
    let tail_depth: i64 = if field.p() == 2 { 1 } else { 4 };
    loop {
        // unit constant part
        let mut entries = Vec::with_capacity(rank * rank);
        for _ in 0..rank * rank {
            let c = ring.from_field(&field.element_from_index(rng.random_range(0..order)));
            entries.push(Series::constant(ring.clone(), c, prec));
        }
        let Ok(b0) = LoopElement::new(rank, entries) else { continue };
        if !b0.is_integrally_invertible().unwrap_or(false) {
            continue;
        }
        // unipotent tail 1 + z^v T
        let mut tail = LoopElement::identity(ring.clone(), rank, prec);
        for i in 0..rank {
            for j in 0..rank {
                let t = random_series(rng, ring, tail_depth, prec);
                *tail.entry_mut(i, j) = tail.entry(i, j).add(&t).unwrap();
            }
        }
        let b = b0.mul(&tail).unwrap();
        let Ok(shtuka) = LocalShtuka::new(b) else { continue };
        match crate::shtuka::minimal_splitting_degree(&shtuka, cap) {
            Ok(Some(_)) => return shtuka,
            _ => continue,
        }
    }
}

/// A rigidity test instance over the dual numbers: shtukas `L`, `L'` whose
/// reductions are joined by the quasi-isogeny `fbar`.
pub struct DualInstance {
    pub source: LocalShtuka,
    pub target: LocalShtuka,
    pub fbar: LoopElement,
}

pub fn random_dual_instance(
    rng: &mut ChaCha8Rng,
    dual: &CoeffRing,
    rank: usize,
    prec: i64,
) -> DualInstance {
    let res = dual.residue_field_ring().expect("dual numbers have a residue field");
    // generous working precision: forming b' = fbar b sigma(fbar)^{-1}
    // spends horizon on the poles of fbar
    let prec = prec + 8;
    let b_red = random_cartan_element(rng, &res, rank, 1, prec);
    let fbar = random_cartan_element(rng, &res, rank, 1, prec);
    // b' = fbar b sigma(fbar)^{-1} makes fbar a quasi-isogeny by construction
    let bp_red = fbar
        .mul(&b_red)
        .unwrap()
        .mul(&fbar.frobenius().inverse().unwrap())
        .unwrap();
    // epsilon-thicken both sides by unipotent factors 1 + eps M
    let thicken = |rng: &mut ChaCha8Rng, base: &LoopElement| -> LoopElement {
        let included = include_matrix_in_dual(base, dual).unwrap();
        let eps = dual.generator().unwrap();
        let mut unip = LoopElement::identity(dual.clone(), rank, prec);
        for i in 0..rank {
            for j in 0..rank {
                let tail = random_series(rng, &res, -1, 3);
                // eps * tail, written directly over the dual numbers
                let eps_tail = match tail.valuation() {
                    crate::series::Valuation::At(v) => {
                        let coeffs: Vec<_> = (v..tail.prec())
                            .map(|e| {
                                let c = tail.coeff(e).unwrap();
                                dual.mul(&eps, &dual.from_field(&res.part(&c, 0)))
                            })
                            .collect();
                        Series::with_prec(dual.clone(), v, coeffs, prec)
                    }
                    _ => Series::zero(dual.clone(), prec),
                };
                *unip.entry_mut(i, j) = unip.entry(i, j).add(&eps_tail).unwrap();
            }
        }
        included.mul(&unip).unwrap()
    };
    let b = thicken(rng, &b_red);
    let bp = thicken(rng, &bp_red);
    DualInstance {
        source: LocalShtuka::new(LoopElement::new(rank, b.entries().to_vec()).unwrap()).unwrap(),
        target: LocalShtuka::new(LoopElement::new(rank, bp.entries().to_vec()).unwrap()).unwrap(),
        fbar,
    }
}
