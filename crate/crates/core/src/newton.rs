//! Newton polygons via twisted powers, the decency equation, the Kottwitz
//! invariant and the twisted centralizer membership test.
//!
//! The slope vector of `b` is recovered as the limit of
//! `relative_position(b sigma(b) ... sigma^{n-1}(b)) / n`. Slopes are
//! rational with denominator at most the rank, so the ladder is declared
//! stable once the denominator-bounded roundings agree for `rank`
//! consecutive steps and their sum matches the determinant valuation on the
//! nose.

use crate::error::{Error, Result};
use crate::matrix::LoopElement;
use crate::semilinear::{relative_position, Coweight};
use crate::series::Valuation;

/// Weakly decreasing rationals, denominators at most the rank, summing to
/// the determinant valuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlopeVector {
    /// Reduced fractions, weakly decreasing.
    slopes: Vec<(i64, i64)>,
}

impl SlopeVector {
    pub fn slopes(&self) -> &[(i64, i64)] {
        &self.slopes
    }

    pub fn rank(&self) -> usize {
        self.slopes.len()
    }

    /// Exact rational sum; integral for genuine Newton polygons.
    pub fn sum(&self) -> (i64, i64) {
        let mut num = 0i64;
        let mut den = 1i64;
        for &(n, d) in &self.slopes {
            num = num * d + n * den;
            den *= d;
            let g = gcd(num.abs(), den);
            if g > 1 {
                num /= g;
                den /= g;
            }
        }
        (num, den)
    }

    /// Dominance comparison against an integral coweight (equal sums, partial
    /// sums bounded): the Mazur inequality Newton <= Hodge.
    pub fn dominated_by_coweight(&self, mu: &Coweight) -> bool {
        if self.slopes.len() != mu.parts().len() {
            return false;
        }
        // common denominator comparison of partial sums
        let mut acc_n = 0i64;
        let mut acc_d = 1i64;
        let mut acc_mu = 0i64;
        for (&(n, d), &m) in self.slopes.iter().zip(mu.parts()) {
            acc_n = acc_n * d + n * acc_d;
            acc_d *= d;
            let g = gcd(acc_n.abs(), acc_d);
            if g > 1 {
                acc_n /= g;
                acc_d /= g;
            }
            acc_mu += m;
            // acc_n / acc_d <= acc_mu ?
            if acc_n > acc_mu * acc_d {
                return false;
            }
        }
        acc_n == acc_mu * acc_d
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

/// `N_n = b sigma(b) sigma^2(b) ... sigma^{n-1}(b)`.
pub fn twisted_power(b: &LoopElement, n: usize) -> Result<LoopElement> {
    if n == 0 {
        return Err(Error::InvalidParameter("twisted power needs n >= 1".into()));
    }
    let mut acc = b.clone();
    let mut twist = b.clone();
    for _ in 1..n {
        twist = twist.frobenius();
        acc = acc.mul(&twist)?;
    }
    Ok(acc)
}

/// Nearest rational with denominator at most `max_den`; ties prefer the
/// smaller denominator, then the smaller numerator.
fn round_to_bounded_denominator(num: i64, den: i64, max_den: i64) -> (i64, i64) {
    debug_assert!(den > 0);
    let mut best: Option<(i64, i64)> = None;
    let mut best_err: Option<(i64, i64)> = None; // |num/den - a/b| as fraction
    for b in 1..=max_den {
        // a/b closest to num/den: a = round(num * b / den)
        let doubled = 2 * num * b;
        let a = ((doubled + if doubled >= 0 { den } else { -den }) / (2 * den)) as i64;
        for cand_a in [a - 1, a, a + 1] {
            // error |num * b - cand_a * den| / (den * b)
            let err_num = (num * b - cand_a * den).abs();
            let err_den = den * b;
            let better = match best_err {
                None => true,
                Some((bn, bd)) => err_num * bd < bn * err_den,
            };
            if better {
                best_err = Some((err_num, err_den));
                let g = gcd(cand_a.abs().max(1), b);
                best = Some((cand_a / g, b / g));
            }
        }
    }
    best.unwrap()
}

/// Newton slopes of `b` over a finite field: stabilized value of
/// `relative_position(N_n) / n`.
pub fn newton_slopes(b: &LoopElement, budget: usize) -> Result<SlopeVector> {
    let r = b.rank() as i64;
    let det_val = match b.det()?.valuation() {
        Valuation::At(v) => v,
        Valuation::ZeroToPrecision { .. } => {
            return Err(Error::NotInvertible("determinant vanishes to precision".into()))
        }
    };
    // up-front precision check: minors of N_n drift down by about
    // n * max-entry-valuation per factor and need certifying
    let max_abs_val = b
        .entries()
        .iter()
        .map(|e| match e.valuation() {
            Valuation::At(v) => v.abs(),
            Valuation::ZeroToPrecision { .. } => 0,
        })
        .max()
        .unwrap_or(0);
    let needed = budget as i64 * max_abs_val * r;
    if b.prec() <= needed {
        return Err(Error::InsufficientPrecision(format!(
            "newton ladder to budget {budget} needs precision above {needed}, have {}",
            b.prec()
        )));
    }

    let mut run: Vec<Vec<(i64, i64)>> = vec![];
    let mut acc = b.clone();
    let mut twist = b.clone();
    for n in 1..=budget {
        if n > 1 {
            twist = twist.frobenius();
            acc = acc.mul(&twist)?;
        }
        let mu = relative_position(&acc)?;
        let rounded: Vec<(i64, i64)> = mu
            .parts()
            .iter()
            .map(|&m| round_to_bounded_denominator(m, n as i64, r))
            .collect();
        // exact sum check against det valuation
        let mut sum_n = 0i64;
        let mut sum_d = 1i64;
        for &(a, d) in &rounded {
            sum_n = sum_n * d + a * sum_d;
            sum_d *= d;
            let g = gcd(sum_n.abs(), sum_d);
            if g > 1 {
                sum_n /= g;
                sum_d /= g;
            }
        }
        let sum_ok = sum_d == 1 && sum_n == det_val;
        if sum_ok && run.last() == Some(&rounded) {
            run.push(rounded);
        } else if sum_ok {
            run = vec![rounded];
        } else {
            run = vec![];
        }
        if run.len() >= b.rank() {
            return Ok(SlopeVector { slopes: run.pop().unwrap() });
        }
    }
    Err(Error::DidNotStabilize(format!(
        "slopes did not repeat {} consecutive times within budget {budget}",
        b.rank()
    )))
}

/// The decency equation at `s`: `N_s = diag(z^{s lambda_1}, ..., z^{s lambda_r})`
/// exactly to precision, for the Newton slopes `lambda` of `b`. Non-integral
/// `s lambda_i` means `false`, not an error.
pub fn check_decency(b: &LoopElement, s: usize) -> Result<bool> {
    if s == 0 {
        return Err(Error::InvalidParameter("decency integer must be positive".into()));
    }
    let slopes = newton_slopes(b, decency_budget(b.rank(), s))?;
    let mut exps = Vec::with_capacity(slopes.rank());
    for &(num, den) in slopes.slopes() {
        let scaled = num * s as i64;
        if scaled % den != 0 {
            return Ok(false);
        }
        exps.push(scaled / den);
    }
    let ns = twisted_power(b, s)?;
    let diag = LoopElement::diag_z_powers(b.ring().clone(), &exps, ns.prec());
    Ok(ns.eq_to_common_prec(&diag))
}

/// Slope ladder budget that lets denominator-`r` slopes repeat `r` times.
pub fn decency_budget(rank: usize, s: usize) -> usize {
    (rank * rank + 2 * rank).max(s + rank + 1).max(8)
}

/// The Kottwitz invariant of `GL_r`: valuation of the determinant.
pub fn kottwitz_gl(b: &LoopElement) -> Result<i64> {
    match b.det()?.valuation() {
        Valuation::At(v) => Ok(v),
        Valuation::ZeroToPrecision { horizon } => Err(Error::InsufficientPrecision(format!(
            "determinant vanishes to horizon {horizon}"
        ))),
    }
}

/// Twisted centralizer membership: `g^{-1} b sigma(g) = b` to precision.
pub fn in_jb(g: &LoopElement, b: &LoopElement) -> Result<bool> {
    g.check_compatible(b)?;
    let conj = g.inverse()?.mul(b)?.mul(&g.frobenius())?;
    Ok(conj.eq_to_common_prec(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::ring::CoeffRing;
    use crate::series::Series;

    fn ring(p: u64) -> CoeffRing {
        CoeffRing::finite_field(FieldSpec::new(p, 1).unwrap(), p).unwrap()
    }

    fn supersingular(r: &CoeffRing, prec: i64) -> LoopElement {
        // [[0, z], [1, 0]]
        LoopElement::new(
            2,
            vec![
                Series::zero(r.clone(), prec),
                Series::monomial(r.clone(), r.one(), 1, prec),
                Series::one(r.clone(), prec),
                Series::zero(r.clone(), prec),
            ],
        )
        .unwrap()
    }

    #[test]
    fn twisted_power_basics() {
        let r = ring(2);
        let b = supersingular(&r, 40);
        assert!(twisted_power(&b, 1).unwrap().eq_to_common_prec(&b));
        // constant entries are sigma-fixed: N_2 = b^2 = z * id
        let n2 = twisted_power(&b, 2).unwrap();
        let z_id = LoopElement::diag_z_powers(r.clone(), &[1, 1], 40);
        assert!(n2.eq_to_common_prec(&z_id));
        // diagonal case: z^mu twists to z^{n mu}
        let d = LoopElement::diag_z_powers(r, &[2, -1], 60);
        let n3 = twisted_power(&d, 3).unwrap();
        assert_eq!(relative_position(&n3).unwrap().parts(), &[6, -3]);
    }

    #[test]
    fn slopes_of_diagonal_and_supersingular() {
        let r = ring(2);
        let d = LoopElement::diag_z_powers(r.clone(), &[3, 1], 120);
        let s = newton_slopes(&d, 8).unwrap();
        assert_eq!(s.slopes(), &[(3, 1), (1, 1)]);
        let b = supersingular(&r, 120);
        let s = newton_slopes(&b, 8).unwrap();
        assert_eq!(s.slopes(), &[(1, 2), (1, 2)]);
        // etale: slopes zero
        let u = LoopElement::new(
            2,
            vec![
                Series::one(r.clone(), 120),
                Series::one(r.clone(), 120),
                Series::zero(r.clone(), 120),
                Series::one(r.clone(), 120),
            ],
        )
        .unwrap();
        let s = newton_slopes(&u, 8).unwrap();
        assert_eq!(s.slopes(), &[(0, 1), (0, 1)]);
    }

    #[test]
    fn decency_examples() {
        let r = ring(2);
        let d = LoopElement::diag_z_powers(r.clone(), &[2, -1], 200);
        assert!(check_decency(&d, 1).unwrap());
        let b = supersingular(&r, 200);
        assert!(check_decency(&b, 2).unwrap());
        assert!(!check_decency(&b, 1).unwrap());
    }

    #[test]
    fn kottwitz_examples() {
        let r = ring(3);
        assert_eq!(kottwitz_gl(&LoopElement::identity(r.clone(), 2, 10)).unwrap(), 0);
        assert_eq!(
            kottwitz_gl(&LoopElement::diag_z_powers(r.clone(), &[1, 0], 10)).unwrap(),
            1
        );
        assert_eq!(kottwitz_gl(&supersingular(&r, 10)).unwrap(), 1);
    }

    #[test]
    fn jb_membership() {
        let r = ring(3);
        let b = LoopElement::diag_z_powers(r.clone(), &[1, 0], 20);
        let z_id = LoopElement::diag_z_powers(r.clone(), &[1, 1], 20);
        assert!(in_jb(&z_id, &b).unwrap());
        // b itself commutes with b when constant-structured and sigma-fixed
        let swap = supersingular(&r, 20);
        assert!(in_jb(&swap, &swap).unwrap());
        // a generic non-commuting element fails
        let g = LoopElement::new(
            2,
            vec![
                Series::one(r.clone(), 20),
                Series::one(r.clone(), 20),
                Series::zero(r.clone(), 20),
                Series::one(r.clone(), 20),
            ],
        )
        .unwrap();
        assert!(!in_jb(&g, &b).unwrap());
    }

    #[test]
    fn jb_is_closed_under_the_group_operations() {
        let r = ring(2);
        let b = supersingular(&r, 40);
        // z * id and b itself are in J_b; products and inverses stay inside
        let g1 = LoopElement::diag_z_powers(r.clone(), &[1, 1], 40);
        let g2 = supersingular(&r, 40);
        assert!(in_jb(&g1, &b).unwrap());
        assert!(in_jb(&g2, &b).unwrap());
        assert!(in_jb(&g1.mul(&g2).unwrap(), &b).unwrap());
        assert!(in_jb(&g1.inverse().unwrap(), &b).unwrap());
    }

    #[test]
    fn insufficient_precision_rejected_up_front() {
        let r = ring(2);
        let d = LoopElement::diag_z_powers(r, &[3, 1], 10);
        assert!(matches!(
            newton_slopes(&d, 8),
            Err(Error::InsufficientPrecision(_))
        ));
    }
}
