//! Smith normal form over the series ring, relative position (Hodge
//! polygon), and boundedness of loop elements.
//!
//! The relative position of `g` is the dominant coweight `mu` with
//! `g = U diag(z^mu) V` for integral `U, V` with integral inverses; the
//! boundedness predicate checks the minor-valuation criterion ("all j x j
//! minors lie in `z^{S_j} O[[z]]`" for the partial sums `S_j` of the bound),
//! which agrees with the Smith-form dominance test by Cramer's rule.

use crate::error::{Error, Result};
use crate::matrix::LoopElement;
use crate::ring::{Coeff, RingKind};
use crate::series::{Series, Valuation};

/// A weakly decreasing integer vector: a dominant coweight of `GL_r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coweight {
    parts: Vec<i64>,
}

impl Coweight {
    pub fn new(parts: Vec<i64>) -> Result<Coweight> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(format!(
                "coweight {:?} is not weakly decreasing",
                parts
            )));
        }
        Ok(Coweight { parts })
    }

    pub fn parts(&self) -> &[i64] {
        &self.parts
    }

    pub fn rank(&self) -> usize {
        self.parts.len()
    }

    pub fn total(&self) -> i64 {
        self.parts.iter().sum()
    }

    /// Sum of the `j` smallest parts (the minor-valuation threshold).
    pub fn tail_sum(&self, j: usize) -> i64 {
        let r = self.parts.len();
        self.parts[r - j..].iter().sum()
    }

    /// Negate and reverse: the coweight of the inverse.
    pub fn dual(&self) -> Coweight {
        let mut parts: Vec<i64> = self.parts.iter().map(|&x| -x).collect();
        parts.reverse();
        Coweight { parts }
    }

    /// Dominance order with equal totals: every partial sum of `self` is at
    /// most the corresponding partial sum of `other`, and the full sums agree.
    pub fn dominated_by(&self, other: &Coweight) -> bool {
        if self.parts.len() != other.parts.len() {
            return false;
        }
        let mut a = 0i64;
        let mut b = 0i64;
        for (x, y) in self.parts.iter().zip(&other.parts) {
            a += x;
            b += y;
            if a > b {
                return false;
            }
        }
        a == b
    }

    /// `n * (r-1, r-3, ..., 1-r)`: the coweight `2 n rho^vee` cut out by the
    /// exterior-power criterion (its `j`-th tail sum is `n (j^2 - jr)`).
    pub fn two_n_rho_check(rank: usize, n: i64) -> Coweight {
        let r = rank as i64;
        Coweight {
            parts: (0..rank).map(|i| n * (r - 1 - 2 * i as i64)).collect(),
        }
    }
}

/// Which loop elements count as bounded: `relative_position <= mu` in
/// dominance order, or `= mu` on the nose. `twist` substitutes `z -> z + c`
/// (for a nilpotent `c`, usually `zeta`) before valuations are taken; this
/// is the `(z - zeta, mu)` variant of the bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSpec {
    pub coweight: Coweight,
    pub relation: BoundRelation,
    pub twist: Option<Coeff>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundRelation {
    Equal,
    DominanceLeq,
}

impl BoundSpec {
    pub fn leq(coweight: Coweight) -> BoundSpec {
        BoundSpec { coweight, relation: BoundRelation::DominanceLeq, twist: None }
    }

    pub fn eq(coweight: Coweight) -> BoundSpec {
        BoundSpec { coweight, relation: BoundRelation::Equal, twist: None }
    }
}

/// Smith normal form `g = U diag(z^mu) V` with `U, V` integral with integral
/// inverses and `mu` weakly decreasing. Pivots are chosen by lowest
/// valuation, ties broken by smallest row then column index. Requires field
/// coefficients (elementary divisors over `R[[z]]` with nilpotents in `R`
/// need not exist in this shape).
pub fn smith_form(g: &LoopElement) -> Result<(LoopElement, Coweight, LoopElement)> {
    if g.ring().kind() != &RingKind::FiniteField {
        return Err(Error::InvalidParameter(
            "smith form requires finite-field coefficients".into(),
        ));
    }
    let r = g.rank();
    let ring = g.ring().clone();
    let work_prec = g.prec();
    let mut a = g.clone();
    let mut u = LoopElement::identity(ring.clone(), r, work_prec);
    let mut v = LoopElement::identity(ring.clone(), r, work_prec);

    for k in 0..r {
        // certified pivot search over the trailing submatrix
        let mut best: Option<(i64, usize, usize)> = None;
        let mut blind_horizon: Option<i64> = None;
        for i in k..r {
            for j in k..r {
                match a.entry(i, j).valuation() {
                    Valuation::At(val) => {
                        if best.map_or(true, |(bv, _, _)| val < bv) {
                            best = Some((val, i, j));
                        }
                    }
                    Valuation::ZeroToPrecision { horizon } => {
                        blind_horizon =
                            Some(blind_horizon.map_or(horizon, |h: i64| h.min(horizon)));
                    }
                }
            }
        }
        let Some((pv, pi, pj)) = best else {
            return Err(Error::InsufficientPrecision(format!(
                "pivot {k}: all remaining entries vanish to precision"
            )));
        };
        if let Some(h) = blind_horizon {
            if h <= pv {
                return Err(Error::InsufficientPrecision(format!(
                    "pivot {k}: an entry vanishing to horizon {h} could undercut valuation {pv}"
                )));
            }
        }
        // move pivot to (k, k); row swap E: a <- E a, u <- u E^{-1} (E self-inverse)
        if pi != k {
            a.swap_rows(k, pi);
            u.swap_cols(k, pi);
        }
        if pj != k {
            a.swap_cols(k, pj);
            v.swap_rows(k, pj);
        }
        let pivot = a.entry(k, k).clone();
        let pivot_inv = pivot.invert()?;
        // clear column k below the pivot
        for i in k + 1..r {
            if a.entry(i, k).is_zero_to_prec() {
                continue;
            }
            let q = a.entry(i, k).mul(&pivot_inv)?; // integral: val >= pivot val
            for j in k..r {
                let t = q.mul(a.entry(k, j))?;
                *a.entry_mut(i, j) = a.entry(i, j).sub(&t)?;
            }
            // a <- (I - q e_{ik}) a, so u <- u (I + q e_{ik}): col_k += q col_i... no:
            // (I + q e_{ik}) has q at (i,k): u.col_k += u.col_i * q
            for t in 0..r {
                let add = u.entry(t, i).mul(&q)?;
                *u.entry_mut(t, k) = u.entry(t, k).add(&add)?;
            }
        }
        // clear row k right of the pivot
        for j in k + 1..r {
            if a.entry(k, j).is_zero_to_prec() {
                continue;
            }
            let q = a.entry(k, j).mul(&pivot_inv)?;
            for i in k..r {
                let t = a.entry(i, k).mul(&q)?;
                *a.entry_mut(i, j) = a.entry(i, j).sub(&t)?;
            }
            // a <- a (I - q e_{kj}), so v <- (I + q e_{kj}) v: row_k += q row_j
            for t in 0..r {
                let add = v.entry(j, t).mul(&q)?;
                *v.entry_mut(k, t) = v.entry(k, t).add(&add)?;
            }
        }
    }

    // normalize diagonal units into U: a_kk = z^{d_k} * unit
    let mut exps = Vec::with_capacity(r);
    for k in 0..r {
        let akk = a.entry(k, k).clone();
        let Valuation::At(dk) = akk.valuation() else {
            return Err(Error::InsufficientPrecision(format!(
                "diagonal entry {k} vanishes to precision after elimination"
            )));
        };
        exps.push(dk);
        let unit = akk.shift(-dk); // unit power series
        for t in 0..r {
            *u.entry_mut(t, k) = u.entry(t, k).mul(&unit)?;
        }
        *a.entry_mut(k, k) = Series::monomial(ring.clone(), ring.one(), dk, akk.prec());
    }

    // sort exponents weakly decreasing via a permutation absorbed into U, V
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by_key(|&i| (-exps[i], i));
    let mut u_sorted = u.clone();
    let mut v_sorted = v.clone();
    for (new_pos, &old_pos) in order.iter().enumerate() {
        for t in 0..r {
            *u_sorted.entry_mut(t, new_pos) = u.entry(t, old_pos).clone();
            *v_sorted.entry_mut(new_pos, t) = v.entry(old_pos, t).clone();
        }
    }
    let mu: Vec<i64> = order.iter().map(|&i| exps[i]).collect();

    // the reconstruction claim g = U diag(z^mu) V is only good up to the
    // weakest horizon left anywhere in the elimination, including the
    // produced off-diagonal zeros
    let mut claim = i64::MAX;
    for i in 0..r {
        for j in 0..r {
            claim = claim.min(a.entry(i, j).prec());
        }
    }
    let u_out = u_sorted.truncate(claim);
    let v_out = v_sorted.truncate(claim);
    Ok((u_out, Coweight::new(mu)?, v_out))
}

/// The Hodge polygon: `mu` with `g` in `K z^mu K`.
pub fn relative_position(g: &LoopElement) -> Result<Coweight> {
    Ok(smith_form(g)?.1)
}

/// The exterior-power boundedness test. For `DominanceLeq` with coweight
/// `mu`: every `j x j` minor must vanish below the `j`-th tail sum of `mu`,
/// and the determinant valuation must equal `|mu|` exactly. `Equal` requires
/// in addition a minor of exact valuation equal to the threshold for every
/// `j`, which pins the relative position.
pub fn bounded_by(g: &LoopElement, bound: &BoundSpec) -> Result<bool> {
    let r = g.rank();
    if bound.coweight.rank() != r {
        return Err(Error::ShapeMismatch(format!(
            "bound coweight has rank {}, matrix has rank {r}",
            bound.coweight.rank()
        )));
    }
    let h = match &bound.twist {
        None => g.clone(),
        Some(c) => g.substitute_z_plus(c)?,
    };
    for j in 1..=r {
        let threshold = bound.coweight.tail_sum(j);
        let mv = h.min_minor_valuation(j)?;
        let (vanishes_below, exact_at): (bool, Option<bool>) = match mv {
            Valuation::At(v) => (v >= threshold, Some(v == threshold)),
            Valuation::ZeroToPrecision { horizon } => {
                if horizon >= threshold {
                    (true, Some(false))
                } else {
                    return Err(Error::InsufficientPrecision(format!(
                        "{j}x{j} minors vanish to horizon {horizon} < threshold {threshold}"
                    )));
                }
            }
        };
        if !vanishes_below {
            return Ok(false);
        }
        let need_exact = j == r || bound.relation == BoundRelation::Equal;
        if need_exact && exact_at != Some(true) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::ring::CoeffRing;

    fn ring(p: u64) -> CoeffRing {
        CoeffRing::finite_field(FieldSpec::new(p, 1).unwrap(), p).unwrap()
    }

    fn z_pow(r: &CoeffRing, n: i64, prec: i64) -> Series {
        Series::monomial(r.clone(), r.one(), n, prec)
    }

    fn mat2(r: &CoeffRing, e: [Series; 4]) -> LoopElement {
        LoopElement::new(2, e.to_vec()).unwrap()
    }

    #[test]
    fn smith_of_diagonal() {
        let r = ring(3);
        let g = LoopElement::diag_z_powers(r.clone(), &[2, -1], 12);
        let (u, mu, v) = smith_form(&g).unwrap();
        assert_eq!(mu.parts(), &[2, -1]);
        assert!(u.eq_to_common_prec(&LoopElement::identity(r.clone(), 2, 12)));
        assert!(v.eq_to_common_prec(&LoopElement::identity(r, 2, 12)));
    }

    #[test]
    fn smith_of_identity() {
        let r = ring(2);
        let g = LoopElement::identity(r, 2, 10);
        let (_, mu, _) = smith_form(&g).unwrap();
        assert_eq!(mu.parts(), &[0, 0]);
    }

    #[test]
    fn smith_of_unipotent_with_pole() {
        // [[1, z^{-1}], [0, 1]] has minors of minimum valuation -1 and det
        // valuation 0, so mu = (1, -1)
        let r = ring(3);
        let g = mat2(
            &r,
            [
                Series::one(r.clone(), 12),
                z_pow(&r, -1, 12),
                Series::zero(r.clone(), 12),
                Series::one(r.clone(), 12),
            ],
        );
        let (u, mu, v) = smith_form(&g).unwrap();
        assert_eq!(mu.parts(), &[1, -1]);
        // reconstruction
        let d = LoopElement::diag_z_powers(r.clone(), mu.parts(), 12);
        let back = u.mul(&d).unwrap().mul(&v).unwrap();
        assert!(back.eq_to_common_prec(&g));
        assert!(u.is_integrally_invertible().unwrap());
        assert!(v.is_integrally_invertible().unwrap());
    }

    #[test]
    fn relative_position_examples() {
        let r = ring(2);
        let g = LoopElement::diag_z_powers(r.clone(), &[1, 0], 10);
        assert_eq!(relative_position(&g).unwrap().parts(), &[1, 0]);
        let h = mat2(
            &r,
            [
                z_pow(&r, 1, 10),
                Series::one(r.clone(), 10),
                Series::zero(r.clone(), 10),
                Series::one(r.clone(), 10),
            ],
        );
        assert_eq!(relative_position(&h).unwrap().parts(), &[1, 0]);
    }

    #[test]
    fn duality_negate_reverse() {
        let r = ring(3);
        let g = LoopElement::diag_z_powers(r.clone(), &[2, -1], 14);
        let gi = g.inverse().unwrap();
        assert_eq!(relative_position(&gi).unwrap().parts(), &[1, -2]);
    }

    #[test]
    fn bounded_by_dominance() {
        let r = ring(2);
        let g = LoopElement::diag_z_powers(r.clone(), &[1, 0], 12);
        let mu = Coweight::new(vec![1, 0]).unwrap();
        assert!(bounded_by(&g, &BoundSpec::leq(mu)).unwrap());
        let zero = Coweight::new(vec![0, 0]).unwrap();
        assert!(!bounded_by(&g, &BoundSpec::leq(zero)).unwrap());
    }

    #[test]
    fn bounded_by_two_n_rho() {
        // diag(z^2, z^{-2}) against n(r-1, ..., 1-r): fails for n = 1,
        // holds for n = 2
        let r = ring(2);
        let g = LoopElement::diag_z_powers(r.clone(), &[2, -2], 16);
        let b1 = BoundSpec::leq(Coweight::two_n_rho_check(2, 1));
        let b2 = BoundSpec::leq(Coweight::two_n_rho_check(2, 2));
        assert!(!bounded_by(&g, &b1).unwrap());
        assert!(bounded_by(&g, &b2).unwrap());
    }

    #[test]
    fn equal_relation_pins_position() {
        let r = ring(2);
        let g = mat2(
            &r,
            [
                z_pow(&r, 1, 12),
                Series::one(r.clone(), 12),
                Series::zero(r.clone(), 12),
                Series::one(r.clone(), 12),
            ],
        );
        let mu10 = Coweight::new(vec![1, 0]).unwrap();
        assert!(bounded_by(&g, &BoundSpec::eq(mu10.clone())).unwrap());
        let mu11 = Coweight::new(vec![1, 1]).unwrap();
        assert!(!bounded_by(&g, &BoundSpec::eq(mu11)).unwrap());
    }

    #[test]
    fn twisted_bound_changes_the_variable() {
        // over F_3[xi]/(xi^4) with zeta = xi^2: the element (zeta - z) has
        // plain valuation 0, but after z -> z + zeta it becomes -z, so it is
        // bounded by exactly (1) only in the twisted sense
        let fs = crate::field::FieldSpec::new(3, 1).unwrap();
        let r = CoeffRing::nilpotent_extension(fs, 3, "xi", 4).unwrap();
        let xi = r.generator().unwrap();
        let zeta = r.mul(&xi, &xi);
        let g = LoopElement::new(
            1,
            vec![Series::with_prec(
                r.clone(),
                0,
                vec![zeta.clone(), r.neg(&r.one())],
                16,
            )],
        )
        .unwrap();
        let mu1 = Coweight::new(vec![1]).unwrap();
        let plain = BoundSpec::eq(mu1.clone());
        let twisted = BoundSpec { coweight: mu1, relation: BoundRelation::Equal, twist: Some(zeta) };
        assert!(!bounded_by(&g, &plain).unwrap());
        assert!(bounded_by(&g, &twisted).unwrap());
    }

    #[test]
    fn smith_requires_certifiable_pivots() {
        let r = ring(2);
        // an entry vanishing to a horizon below the best pivot valuation
        let g = LoopElement::new_unchecked(
            2,
            vec![
                Series::zero(r.clone(), -3),
                z_pow(&r, 0, 8),
                z_pow(&r, 0, 8),
                Series::zero(r.clone(), 8),
            ],
        )
        .unwrap();
        assert!(matches!(
            smith_form(&g),
            Err(Error::InsufficientPrecision(_))
        ));
    }
}
