//! Truncated Laurent series with explicit precision propagation.
//!
//! A series stores its coefficient ring, the valuation `val` of the first
//! stored coefficient, a precision horizon `prec` and the coefficients for
//! exponents `val..prec`. Coefficients below `val` are known to vanish;
//! coefficients at or beyond `prec` are unknown and no operation ever
//! reports one. A series that vanishes on its whole known window is
//! "zero to precision": empty coefficient list and `val == prec`.

use crate::error::{Error, Result};
use crate::ring::{Coeff, CoeffRing};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Series {
    ring: CoeffRing,
    val: i64,
    prec: i64,
    /// Coefficients for exponents `val..prec`; leading entry nonzero unless
    /// the series is zero to precision (then empty).
    coeffs: Vec<Coeff>,
}

/// Either a certified valuation or the certificate that the series vanishes
/// up to its horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    At(i64),
    ZeroToPrecision { horizon: i64 },
}

impl Series {
    /// Builds a series from coefficients for exponents `val..val + len`,
    /// with horizon `prec = val + len`, and normalizes.
    pub fn new(ring: CoeffRing, val: i64, coeffs: Vec<Coeff>) -> Series {
        let prec = val + coeffs.len() as i64;
        Series::with_prec(ring, val, coeffs, prec)
    }

    /// Builds a series with an explicit horizon; the coefficient list is
    /// padded with zeros or truncated to cover exactly `val..prec`. A horizon
    /// at or below `val` leaves no known window: the result is zero to
    /// precision.
    pub fn with_prec(ring: CoeffRing, val: i64, mut coeffs: Vec<Coeff>, prec: i64) -> Series {
        if prec <= val {
            return Series::zero(ring, prec);
        }
        coeffs.resize((prec - val) as usize, ring.zero());
        let mut s = Series { ring, val, prec, coeffs };
        s.normalize();
        s
    }

    pub fn zero(ring: CoeffRing, prec: i64) -> Series {
        Series { ring, val: prec, prec, coeffs: vec![] }
    }

    pub fn one(ring: CoeffRing, prec: i64) -> Series {
        let c = ring.one();
        Series::with_prec(ring, 0, vec![c], prec)
    }

    pub fn constant(ring: CoeffRing, c: Coeff, prec: i64) -> Series {
        Series::with_prec(ring, 0, vec![c], prec)
    }

    /// `c * z^n`.
    pub fn monomial(ring: CoeffRing, c: Coeff, n: i64, prec: i64) -> Series {
        Series::with_prec(ring, n, vec![c], prec)
    }

    fn normalize(&mut self) {
        let mut lead = 0;
        while lead < self.coeffs.len() && self.ring.is_zero(&self.coeffs[lead]) {
            lead += 1;
        }
        if lead == self.coeffs.len() {
            self.coeffs.clear();
            self.val = self.prec;
        } else if lead > 0 {
            self.coeffs.drain(..lead);
            self.val += lead as i64;
        }
    }

    pub fn ring(&self) -> &CoeffRing {
        &self.ring
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn is_zero_to_prec(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// First exponent carrying a nonzero coefficient, or the zero sentinel.
    pub fn valuation(&self) -> Valuation {
        if self.is_zero_to_prec() {
            Valuation::ZeroToPrecision { horizon: self.prec }
        } else {
            Valuation::At(self.val)
        }
    }

    /// Coefficient at exponent `e`; `None` beyond the horizon.
    pub fn coeff(&self, e: i64) -> Option<Coeff> {
        if e >= self.prec {
            return None;
        }
        if e < self.val {
            return Some(self.ring.zero());
        }
        Some(self.coeffs[(e - self.val) as usize].clone())
    }

    pub fn leading_coeff(&self) -> Option<&Coeff> {
        self.coeffs.first()
    }

    /// True when every known coefficient below `e` vanishes and the horizon
    /// reaches `e`; errors when the horizon is too low to certify.
    pub fn vanishes_below(&self, e: i64) -> Result<bool> {
        match self.valuation() {
            Valuation::At(v) => {
                if v < e {
                    Ok(false)
                } else {
                    Ok(true)
                }
            }
            Valuation::ZeroToPrecision { horizon } => {
                if horizon >= e {
                    Ok(true)
                } else {
                    Err(Error::InsufficientPrecision(format!(
                        "vanishing below z^{e} not certifiable at horizon {horizon}"
                    )))
                }
            }
        }
    }

    /// Lowers the horizon (never raises it).
    pub fn truncate(&self, prec: i64) -> Series {
        if prec >= self.prec {
            return self.clone();
        }
        let val = self.val.min(prec);
        let keep = (prec - val).max(0) as usize;
        let coeffs = self.coeffs.iter().take(keep).cloned().collect();
        let mut s = Series { ring: self.ring.clone(), val, prec, coeffs };
        s.normalize();
        s
    }

    fn check_ring(&self, other: &Series) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch("series over different rings".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.check_ring(other)?;
        let prec = self.prec.min(other.prec);
        let val = self.val.min(other.val).min(prec);
        let mut coeffs = vec![self.ring.zero(); (prec - val) as usize];
        for (s, sign) in [(self, false), (other, false)] {
            let _ = sign;
            for (i, c) in s.coeffs.iter().enumerate() {
                let e = s.val + i as i64;
                if e < prec {
                    let idx = (e - val) as usize;
                    coeffs[idx] = self.ring.add(&coeffs[idx], c);
                }
            }
        }
        Ok(Series::with_prec(self.ring.clone(), val, coeffs, prec))
    }

    pub fn neg(&self) -> Series {
        let coeffs = self.coeffs.iter().map(|c| self.ring.neg(c)).collect();
        Series { ring: self.ring.clone(), val: self.val, prec: self.prec, coeffs }
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Series) -> Result<Series> {
        self.check_ring(other)?;
        // coefficient n = sum_{i+j=n} a_i b_j is known iff every contributing
        // pair is, giving the horizon min(a.prec + b.val, b.prec + a.val)
        let prec = (self.prec + other.val).min(other.prec + self.val);
        let val = (self.val + other.val).min(prec);
        if self.is_zero_to_prec() || other.is_zero_to_prec() {
            return Ok(Series::zero(self.ring.clone(), prec));
        }
        let mut coeffs = vec![self.ring.zero(); (prec - val) as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            if self.ring.is_zero(a) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let e = self.val + i as i64 + other.val + j as i64;
                if e >= prec {
                    break;
                }
                let idx = (e - val) as usize;
                let prod = self.ring.mul(a, b);
                coeffs[idx] = self.ring.add(&coeffs[idx], &prod);
            }
        }
        Ok(Series::with_prec(self.ring.clone(), val, coeffs, prec))
    }

    pub fn scale(&self, c: &Coeff) -> Series {
        let coeffs = self.coeffs.iter().map(|a| self.ring.mul(a, c)).collect();
        let mut s = Series { ring: self.ring.clone(), val: self.val, prec: self.prec, coeffs };
        s.normalize();
        s
    }

    /// Multiplies by `z^n` (exact shift of both valuation and horizon).
    pub fn shift(&self, n: i64) -> Series {
        Series {
            ring: self.ring.clone(),
            val: self.val + n,
            prec: self.prec + n,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Multiplicative inverse by Newton iteration `y <- y (2 - x y)`, whose
    /// error squares every step. The leading coefficient need not be a unit:
    /// it suffices that some coefficient is a unit of the ring, with only
    /// nilpotent coefficients below it (so e.g. `zeta - z` over
    /// `F_3[xi]/(xi^4)`, `zeta = xi^2`, inverts to `-z^{-1} - zeta z^{-2}`).
    pub fn invert(&self) -> Result<Series> {
        if self.is_zero_to_prec() {
            return Err(Error::NotInvertible(format!(
                "series is zero to precision {}",
                self.prec
            )));
        }
        // locate the unit pivot exponent
        let mut unit_at = None;
        for (i, c) in self.coeffs.iter().enumerate() {
            if self.ring.is_unit(c) {
                unit_at = Some(self.val + i as i64);
                break;
            }
        }
        let Some(w) = unit_at else {
            return Err(Error::NotInvertible(
                "no unit coefficient below the horizon".into(),
            ));
        };
        let u_inv = self.ring.inv(&self.coeff(w).unwrap())?;
        let mut y = Series::monomial(self.ring.clone(), u_inv, -w, self.prec - 2 * w);
        // the initial error 1 - x y lies in (nilpotents) + (z); squaring
        // kills it nilpotently and z-adically at once
        let window = (self.prec - self.val).max(2);
        let max_iter = self.ring.nil_order() as u32 + window.ilog2() + 3;
        for _ in 0..max_iter {
            let xy = self.mul(&y)?;
            let err = Series::one(self.ring.clone(), xy.prec()).sub(&xy)?;
            if err.is_zero_to_prec() {
                break;
            }
            let corr = Series::one(self.ring.clone(), xy.prec()).add(&err)?;
            y = y.mul(&corr)?;
        }
        // certify the claimed window
        let check = self.mul(&y)?;
        if !check.eq_to_common_prec(&Series::one(self.ring.clone(), check.prec())) {
            return Err(Error::NotInvertible(
                "Newton iteration failed to certify the inverse".into(),
            ));
        }
        Ok(y)
    }

    pub fn div(&self, other: &Series) -> Result<Series> {
        self.mul(&other.invert()?)
    }

    /// Coefficientwise Frobenius. Over a field the valuation and precision
    /// are untouched; over nilpotent extensions leading coefficients can die
    /// and the result is renormalized.
    pub fn frobenius(&self) -> Series {
        let coeffs = self.coeffs.iter().map(|c| self.ring.frobenius(c)).collect();
        let mut s = Series { ring: self.ring.clone(), val: self.val, prec: self.prec, coeffs };
        s.normalize();
        s
    }

    pub fn frobenius_pow(&self, times: usize) -> Series {
        let mut s = self.clone();
        for _ in 0..times {
            s = s.frobenius();
        }
        s
    }

    /// Substitution `z -> z + c` for a nilpotent ring element `c`, the
    /// change of variables behind bounds taken with respect to `z - zeta`.
    /// Finite and triangular because `c` is nilpotent; the horizon drops by
    /// `nil_order - 1`.
    pub fn substitute_z_plus(&self, c: &Coeff) -> Result<Series> {
        if !self.ring.is_nilpotent(c) {
            return Err(Error::InvalidParameter(
                "substitution offset must be nilpotent".into(),
            ));
        }
        let n_max = self.ring.nil_order() as i64; // c^j = 0 for j >= nil_order
        let new_prec = self.prec - (n_max - 1);
        let new_val_floor = self.val - (n_max - 1);
        if self.is_zero_to_prec() {
            return Ok(Series::zero(self.ring.clone(), new_prec));
        }
        let mut powers = vec![self.ring.one()];
        for j in 1..n_max as usize {
            let next = self.ring.mul(&powers[j - 1], c);
            powers.push(next);
        }
        let mut coeffs = vec![self.ring.zero(); ((new_prec - new_val_floor).max(0)) as usize];
        let p = self.ring.field().p();
        for (i, a) in self.coeffs.iter().enumerate() {
            if self.ring.is_zero(a) {
                continue;
            }
            let n = self.val + i as i64;
            // (z + c)^n = sum_j C(n, j) c^j z^{n-j}, truncated by nilpotency
            for (j, cj) in powers.iter().enumerate() {
                if self.ring.is_zero(cj) && j > 0 {
                    continue;
                }
                let m = n - j as i64;
                if m < new_val_floor || m >= new_prec {
                    continue;
                }
                let binom = binomial_mod_p(n, j as u32, p);
                if binom == 0 {
                    continue;
                }
                let contrib = self.ring.mul(a, &self.ring.mul(cj, &self.ring.from_u64(binom)));
                let idx = (m - new_val_floor) as usize;
                coeffs[idx] = self.ring.add(&coeffs[idx], &contrib);
            }
        }
        Ok(Series::with_prec(self.ring.clone(), new_val_floor, coeffs, new_prec))
    }

    /// Exact equality of all coefficients up to the common horizon.
    pub fn eq_to_common_prec(&self, other: &Series) -> bool {
        let prec = self.prec.min(other.prec);
        let lo = self.val.min(other.val);
        for e in lo..prec {
            let a = self.coeff(e).unwrap_or_else(|| self.ring.zero());
            let b = other.coeff(e).unwrap_or_else(|| self.ring.zero());
            if a != b {
                return false;
            }
        }
        true
    }
}

/// Generalized binomial coefficient `C(n, j) mod p` for any integer `n`
/// (including negative), computed exactly over the integers first since `j!`
/// may vanish mod `p`.
fn binomial_mod_p(n: i64, j: u32, p: u64) -> u64 {
    let mut num: i128 = 1;
    for t in 0..j as i64 {
        num *= (n - t) as i128;
    }
    let mut den: i128 = 1;
    for t in 1..=j as i128 {
        den *= t;
    }
    let v = num / den; // exact: C(n, j) is an integer for all integers n
    (v.rem_euclid(p as i128)) as u64
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero_to_prec() {
            return write!(f, "O(z^{})", self.prec);
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if self.ring.is_zero(c) {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let e = self.val + i as i64;
            write!(f, "({})", fmt_coeff(&self.ring, c))?;
            if e != 0 {
                write!(f, "*z^{e}")?;
            }
        }
        write!(f, " + O(z^{})", self.prec)
    }
}

fn fmt_coeff(ring: &CoeffRing, c: &Coeff) -> String {
    let gen = ring.generator_name().unwrap_or("");
    let mut parts = vec![];
    for i in 0..ring.nil_order() {
        let blk = ring.part(c, i);
        if ring.field().is_zero(&blk) {
            continue;
        }
        let mut inner = vec![];
        for (j, &x) in blk.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let t = match j {
                0 => format!("{x}"),
                1 => {
                    if x == 1 {
                        "t".into()
                    } else {
                        format!("{x}t")
                    }
                }
                _ => {
                    if x == 1 {
                        format!("t^{j}")
                    } else {
                        format!("{x}t^{j}")
                    }
                }
            };
            inner.push(t);
        }
        let blk_str = inner.join("+");
        let term = match i {
            0 => blk_str,
            1 => format!("({blk_str}){gen}"),
            _ => format!("({blk_str}){gen}^{i}"),
        };
        parts.push(term);
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}
