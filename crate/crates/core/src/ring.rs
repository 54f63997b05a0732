//! Coefficient rings for series arithmetic.
//!
//! Three kinds are supported: a finite field `F_{p^d}`, a nilpotent
//! extension `F_{p^d}[g]/(g^k)` and dual numbers `F_{p^d}[eps]/(eps^2)`
//! (the latter is just the nilpotent extension of order 2, kept as its own
//! kind because the rigidity machinery pattern-matches on it).
//!
//! Every ring carries a Frobenius `sigma` which raises to the `base_q`-th
//! power, where `base_q = p^{d0}` for a declared base degree `d0 | d`. On the
//! generator the honest power map is used: `sigma(g) = g^q`, which is zero
//! exactly when `q >= k`. The dual-numbers invariant `sigma(eps) = 0` is
//! checked at construction, not assumed.

use crate::error::{Error, Result};
use crate::field::{FieldSpec, FqEl};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RingKind {
    FiniteField,
    /// Generator name and nilpotency order `k >= 2` (`g^k = 0`).
    NilpotentExtension { generator: String, order: usize },
    DualNumbers,
}

/// A coefficient ring element: concatenated field coefficients, one block of
/// length `field.degree()` per generator power (a single block for fields).
pub type Coeff = Vec<u64>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoeffRing {
    field: FieldSpec,
    kind: RingKind,
    /// Frobenius exponent: `sigma(x) = x^base_q`, a power of `p`.
    base_q: u64,
}

impl CoeffRing {
    pub fn finite_field(field: FieldSpec, base_q: u64) -> Result<CoeffRing> {
        let r = CoeffRing { field, kind: RingKind::FiniteField, base_q };
        r.validate()?;
        Ok(r)
    }

    /// `F_{p^d}` with Frobenius `x -> x^{p^d0}` given by the base degree.
    pub fn from_q_ext(q: u64, ext: usize) -> Result<CoeffRing> {
        let (p, d0) = prime_power(q)?;
        let field = FieldSpec::new(p, d0 * ext)?;
        CoeffRing::finite_field(field, q)
    }

    pub fn nilpotent_extension(
        field: FieldSpec,
        base_q: u64,
        generator: &str,
        order: usize,
    ) -> Result<CoeffRing> {
        if order < 2 {
            return Err(Error::InvalidParameter(
                "nilpotency order must be at least 2".into(),
            ));
        }
        let r = CoeffRing {
            field,
            kind: RingKind::NilpotentExtension { generator: generator.to_string(), order },
            base_q,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn dual_numbers(field: FieldSpec, base_q: u64) -> Result<CoeffRing> {
        let r = CoeffRing { field, kind: RingKind::DualNumbers, base_q };
        r.validate()?;
        // sigma(eps) = eps^q must vanish, i.e. q >= 2; q is a prime power so
        // this always holds, but we keep the check explicit.
        let eps = r.generator().expect("dual numbers have a generator");
        if !r.is_zero(&r.frobenius(&eps)) {
            return Err(Error::InvalidParameter("Frobenius does not annihilate eps".into()));
        }
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        let p = self.field.p();
        let mut q = self.base_q;
        if q < 2 {
            return Err(Error::InvalidParameter("base_q must be at least 2".into()));
        }
        let mut d0 = 0usize;
        while q > 1 {
            if q % p != 0 {
                return Err(Error::InvalidParameter(format!(
                    "base_q = {} is not a power of p = {}",
                    self.base_q, p
                )));
            }
            q /= p;
            d0 += 1;
        }
        if self.field.degree() % d0 != 0 {
            return Err(Error::InvalidParameter(format!(
                "Frobenius base F_{} is not a subfield of F_{}^{}",
                self.base_q,
                p,
                self.field.degree()
            )));
        }
        Ok(())
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn kind(&self) -> &RingKind {
        &self.kind
    }

    pub fn base_q(&self) -> u64 {
        self.base_q
    }

    /// Extension degree of the field over the Frobenius base `F_{base_q}`.
    pub fn ext_degree_over_base(&self) -> usize {
        let (_, d0) = prime_power(self.base_q).expect("validated");
        self.field.degree() / d0
    }

    /// Number of generator powers stored per element (1 for fields).
    pub fn nil_order(&self) -> usize {
        match &self.kind {
            RingKind::FiniteField => 1,
            RingKind::NilpotentExtension { order, .. } => *order,
            RingKind::DualNumbers => 2,
        }
    }

    pub fn generator_name(&self) -> Option<&str> {
        match &self.kind {
            RingKind::FiniteField => None,
            RingKind::NilpotentExtension { generator, .. } => Some(generator),
            RingKind::DualNumbers => Some("eps"),
        }
    }

    fn block(&self) -> usize {
        self.field.degree()
    }

    pub fn coeff_len(&self) -> usize {
        self.block() * self.nil_order()
    }

    // ---- element constructors ----

    pub fn zero(&self) -> Coeff {
        vec![0; self.coeff_len()]
    }

    pub fn one(&self) -> Coeff {
        let mut c = self.zero();
        c[0] = 1;
        c
    }

    pub fn from_u64(&self, n: u64) -> Coeff {
        let mut c = self.zero();
        c[0] = n % self.field.p();
        c
    }

    /// The nilpotent generator, if any.
    pub fn generator(&self) -> Option<Coeff> {
        if self.nil_order() < 2 {
            return None;
        }
        let mut c = self.zero();
        c[self.block()] = 1;
        Some(c)
    }

    /// Lifts a field element into the ring (generator power zero).
    pub fn from_field(&self, a: &FqEl) -> Coeff {
        let mut c = self.zero();
        c[..self.block()].copy_from_slice(a);
        c
    }

    /// Field part of generator power `i`.
    pub fn part(&self, a: &Coeff, i: usize) -> FqEl {
        let b = self.block();
        a[i * b..(i + 1) * b].to_vec()
    }

    pub fn is_zero(&self, a: &Coeff) -> bool {
        a.iter().all(|&x| x == 0)
    }

    /// Units are exactly the elements with invertible field part.
    pub fn is_unit(&self, a: &Coeff) -> bool {
        !self.field.is_zero(&self.part(a, 0))
    }

    /// Nonzero nilpotents: zero field part but not zero overall.
    pub fn is_nilpotent(&self, a: &Coeff) -> bool {
        self.field.is_zero(&self.part(a, 0))
    }

    // ---- arithmetic ----

    pub fn add(&self, a: &Coeff, b: &Coeff) -> Coeff {
        let p = self.field.p();
        a.iter().zip(b).map(|(&x, &y)| (x + y) % p).collect()
    }

    pub fn sub(&self, a: &Coeff, b: &Coeff) -> Coeff {
        let p = self.field.p();
        a.iter().zip(b).map(|(&x, &y)| (x + p - y) % p).collect()
    }

    pub fn neg(&self, a: &Coeff) -> Coeff {
        let p = self.field.p();
        a.iter().map(|&x| (p - x) % p).collect()
    }

    pub fn mul(&self, a: &Coeff, b: &Coeff) -> Coeff {
        let n = self.nil_order();
        let mut out = self.zero();
        let bsz = self.block();
        for i in 0..n {
            let ai = self.part(a, i);
            if self.field.is_zero(&ai) {
                continue;
            }
            for j in 0..n - i {
                let bj = self.part(b, j);
                if self.field.is_zero(&bj) {
                    continue;
                }
                let prod = self.field.mul(&ai, &bj);
                let off = (i + j) * bsz;
                for (k, &c) in prod.iter().enumerate() {
                    out[off + k] = (out[off + k] + c) % self.field.p();
                }
            }
        }
        out
    }

    pub fn inv(&self, a: &Coeff) -> Result<Coeff> {
        let a0 = self.part(a, 0);
        if self.field.is_zero(&a0) {
            return Err(Error::NotInvertible("nilpotent ring element".into()));
        }
        let a0_inv = self.field.inv(&a0)?;
        let a0_inv_lift = self.from_field(&a0_inv);
        // a = a0 (1 + n) with n nilpotent; invert the unit part by the
        // finite geometric series.
        let n_part = self.sub(&self.mul(&a0_inv_lift, a), &self.one());
        let mut acc = self.one();
        let mut term = self.one();
        for _ in 1..self.nil_order() {
            term = self.mul(&term, &self.neg(&n_part));
            acc = self.add(&acc, &term);
        }
        Ok(self.mul(&a0_inv_lift, &acc))
    }

    /// The ring Frobenius `x -> x^base_q` (freshman's dream in char p).
    pub fn frobenius(&self, a: &Coeff) -> Coeff {
        let n = self.nil_order();
        let q = self.base_q;
        let mut out = self.zero();
        let bsz = self.block();
        for i in 0..n {
            let target = (i as u128) * (q as u128);
            if target >= n as u128 {
                continue;
            }
            let ai = self.part(a, i);
            if self.field.is_zero(&ai) {
                continue;
            }
            let fi = self.field.frobenius(&ai, q);
            let off = (target as usize) * bsz;
            for (k, &c) in fi.iter().enumerate() {
                out[off + k] = (out[off + k] + c) % self.field.p();
            }
        }
        out
    }

    /// Iterated Frobenius.
    pub fn frobenius_pow(&self, a: &Coeff, times: usize) -> Coeff {
        let mut x = a.clone();
        for _ in 0..times {
            x = self.frobenius(&x);
        }
        x
    }

    pub fn pow(&self, a: &Coeff, mut e: u64) -> Coeff {
        let mut acc = self.one();
        let mut b = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        acc
    }

    /// Reduces a ring element of a nilpotent/dual kind to its field part.
    pub fn residue_field_ring(&self) -> Result<CoeffRing> {
        CoeffRing::finite_field(self.field.clone(), self.base_q)
    }

    /// Same ring data with the field swapped for `F_{p^{d * ext}}`; used to
    /// pass to a splitting extension. Only for finite-field kind.
    pub fn extend_field(&self, ext: usize) -> Result<(CoeffRing, FqEl)> {
        if self.nil_order() != 1 {
            return Err(Error::InvalidParameter(
                "field extension only applies to finite-field coefficient rings".into(),
            ));
        }
        let big_field = FieldSpec::new(self.field.p(), self.field.degree() * ext)?;
        let gen_image = big_field.subfield_generator_image(&self.field)?;
        let big = CoeffRing::finite_field(big_field, self.base_q)?;
        Ok((big, gen_image))
    }

    /// Embeds a coefficient along the extension produced by
    /// [`CoeffRing::extend_field`].
    pub fn embed_coeff(&self, big: &CoeffRing, gen_image: &FqEl, a: &Coeff) -> Coeff {
        big.from_field(&big.field.embed(gen_image, a))
    }

    /// Checked Frobenius-annihilation invariant for nilpotent kinds:
    /// `sigma(g) = 0` iff `base_q >= order`.
    pub fn frobenius_kills_generator(&self) -> Option<bool> {
        let g = self.generator()?;
        Some(self.is_zero(&self.frobenius(&g)))
    }
}

pub(crate) fn prime_power(q: u64) -> Result<(u64, usize)> {
    if q < 2 {
        return Err(Error::InvalidParameter("q must be at least 2".into()));
    }
    let mut p = 2;
    while p * p <= q {
        if q % p == 0 {
            break;
        }
        p += 1;
    }
    if q % p != 0 {
        p = q; // q itself prime
    }
    let mut d = 0;
    let mut m = q;
    while m > 1 {
        if m % p != 0 {
            return Err(Error::InvalidParameter(format!("{q} is not a prime power")));
        }
        m /= p;
        d += 1;
    }
    Ok((p, d))
}
