//! Finite fields `F_{p^d}` in the polynomial basis.
//!
//! A field is described by a [`FieldSpec`]: the characteristic `p`, the
//! extension degree `d` and a monic irreducible modulus of degree `d` over
//! `F_p`. Elements are coefficient vectors of length `d` (lowest power
//! first). The default modulus for a given `(p, d)` is the lexicographically
//! smallest monic irreducible, where candidates are ordered by the value of
//! `c_{d-1} p^{d-1} + ... + c_1 p + c_0`. This is deterministic and needs no
//! table of Conway polynomials.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// An element of `F_{p^d}`: coefficients in the power basis, lowest first,
/// always of length `d`, entries reduced mod `p`.
pub type FqEl = Vec<u64>;

/// Description of a finite field `F_{p^d} = F_p[t]/(modulus)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    p: u64,
    d: usize,
    /// Monic modulus, degree `d`, length `d + 1`, lowest coefficient first.
    modulus: Vec<u64>,
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= p {
        if p % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

// ---- dense F_p[x] helpers (lowest coefficient first, no trailing zeros) ----

fn poly_trim(a: &mut Vec<u64>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

/// Remainder of `a` modulo monic-after-scaling `b` over `F_p`. `b` nonzero.
fn poly_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r: Vec<u64> = a.to_vec();
    poly_trim(&mut r);
    let mut b = b.to_vec();
    poly_trim(&mut b);
    let db = b.len() - 1;
    let lead_inv = mod_inv(*b.last().unwrap(), p);
    while r.len() > db {
        let k = r.len() - 1 - db;
        let c = (*r.last().unwrap() * lead_inv) % p;
        if c != 0 {
            for (i, &bc) in b.iter().enumerate() {
                let idx = k + i;
                r[idx] = (r[idx] + p - (c * bc) % p) % p;
            }
        }
        r.pop();
        poly_trim(&mut r);
        if r.is_empty() {
            break;
        }
    }
    r
}

fn poly_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    poly_trim(&mut out);
    out
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // extended Euclid on i128 to dodge sign fiddling
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (p as i128, (a % p) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert_eq!(r, 1, "not invertible mod p");
    (((t % p as i128) + p as i128) % p as i128) as u64
}

/// `x^(p^k) mod f` by iterated p-th powers.
fn poly_frob_power(f: &[u64], p: u64, k: usize) -> Vec<u64> {
    let mut t = vec![0, 1]; // x
    for _ in 0..k {
        t = poly_pow_mod(&t, p, f, p);
    }
    t
}

fn poly_pow_mod(base: &[u64], mut e: u64, f: &[u64], p: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut b = poly_rem(base, f, p);
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_rem(&poly_mul(&acc, &b, p), f, p);
        }
        b = poly_rem(&poly_mul(&b, &b, p), f, p);
        e >>= 1;
    }
    acc
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    poly_trim(&mut a);
    poly_trim(&mut b);
    while !b.is_empty() {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// Rabin's deterministic irreducibility test. Used to pre-filter candidates
/// in the default-modulus search; construction still verifies the winner by
/// trial division.
fn rabin_irreducible(f: &[u64], p: u64) -> bool {
    let d = f.len() - 1;
    // x^(p^d) == x mod f
    let mut xq = poly_frob_power(f, p, d);
    // subtract x
    if xq.len() < 2 {
        xq.resize(2, 0);
    }
    xq[1] = (xq[1] + p - 1) % p;
    poly_trim(&mut xq);
    if !xq.is_empty() {
        return false;
    }
    // gcd(x^(p^(d/l)) - x, f) == 1 for every prime l | d
    let mut m = d;
    let mut primes = vec![];
    let mut q = 2;
    while q * q <= m {
        if m % q == 0 {
            primes.push(q);
            while m % q == 0 {
                m /= q;
            }
        }
        q += 1;
    }
    if m > 1 {
        primes.push(m);
    }
    for l in primes {
        let mut g = poly_frob_power(f, p, d / l);
        if g.len() < 2 {
            g.resize(2, 0);
        }
        g[1] = (g[1] + p - 1) % p;
        poly_trim(&mut g);
        if poly_gcd(f, &g, p).len() != 1 {
            return false;
        }
    }
    true
}

/// Trial division against every monic polynomial of degree `<= d/2`.
fn trial_division_irreducible(f: &[u64], p: u64) -> bool {
    let d = f.len() - 1;
    for deg in 1..=(d / 2) {
        // iterate the p^deg monic candidates of this degree
        let count = (p as u128).pow(deg as u32);
        let mut g = vec![0u64; deg + 1];
        g[deg] = 1;
        for idx in 0..count {
            let mut n = idx;
            for c in g.iter_mut().take(deg) {
                *c = (n % p as u128) as u64;
                n /= p as u128;
            }
            if poly_rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

fn cache() -> &'static Mutex<HashMap<(u64, usize), FieldSpec>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), FieldSpec>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl FieldSpec {
    /// Field with the default (lexicographically smallest irreducible)
    /// modulus. Results are cached per `(p, d)`.
    pub fn new(p: u64, d: usize) -> Result<FieldSpec> {
        if let Some(f) = cache().lock().unwrap().get(&(p, d)) {
            return Ok(f.clone());
        }
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("degree must be positive".into()));
        }
        if d == 1 {
            let spec = FieldSpec { p, d, modulus: vec![0, 1] };
            cache().lock().unwrap().insert((p, d), spec.clone());
            return Ok(spec);
        }
        let count = (p as u128)
            .checked_pow(d as u32)
            .ok_or_else(|| Error::InvalidParameter("field too large".into()))?;
        let mut modulus = vec![0u64; d + 1];
        modulus[d] = 1;
        let mut found = false;
        for idx in 0..count {
            let mut n = idx;
            for c in modulus.iter_mut().take(d) {
                *c = (n % p as u128) as u64;
                n /= p as u128;
            }
            if rabin_irreducible(&modulus, p) {
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::InvalidParameter(format!(
                "no irreducible of degree {d} over F_{p}"
            )));
        }
        let spec = FieldSpec::with_modulus(p, d, modulus)?;
        cache().lock().unwrap().insert((p, d), spec.clone());
        Ok(spec)
    }

    /// Field with an explicit modulus. The modulus must be monic of degree
    /// `d` and is verified irreducible by trial division.
    pub fn with_modulus(p: u64, d: usize, modulus: Vec<u64>) -> Result<FieldSpec> {
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        if modulus.len() != d + 1 || modulus[d] != 1 {
            return Err(Error::InvalidParameter(
                "modulus must be monic of the declared degree".into(),
            ));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::InvalidParameter("modulus coefficients must be reduced mod p".into()));
        }
        if !trial_division_irreducible(&modulus, p) {
            return Err(Error::InvalidParameter("modulus is reducible".into()));
        }
        Ok(FieldSpec { p, d, modulus })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    /// Field cardinality as u128 (errors if it would overflow).
    pub fn order(&self) -> Result<u128> {
        (self.p as u128)
            .checked_pow(self.d as u32)
            .ok_or_else(|| Error::InvalidParameter("field too large".into()))
    }

    // ---- element arithmetic ----

    pub fn zero(&self) -> FqEl {
        vec![0; self.d]
    }

    pub fn one(&self) -> FqEl {
        let mut e = vec![0; self.d];
        e[0] = 1;
        e
    }

    pub fn from_u64(&self, n: u64) -> FqEl {
        let mut e = vec![0; self.d];
        e[0] = n % self.p;
        e
    }

    /// Element number `n` in base-`p` digit order; enumerates the whole field
    /// as `n` runs over `0..p^d`.
    pub fn element_from_index(&self, mut n: u128) -> FqEl {
        let mut e = vec![0; self.d];
        for c in e.iter_mut() {
            *c = (n % self.p as u128) as u64;
            n /= self.p as u128;
        }
        e
    }

    pub fn is_zero(&self, a: &FqEl) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: &FqEl, b: &FqEl) -> FqEl {
        a.iter().zip(b).map(|(&x, &y)| (x + y) % self.p).collect()
    }

    pub fn sub(&self, a: &FqEl, b: &FqEl) -> FqEl {
        a.iter().zip(b).map(|(&x, &y)| (x + self.p - y) % self.p).collect()
    }

    pub fn neg(&self, a: &FqEl) -> FqEl {
        a.iter().map(|&x| (self.p - x) % self.p).collect()
    }

    pub fn scalar_mul(&self, c: u64, a: &FqEl) -> FqEl {
        let c = c % self.p;
        a.iter().map(|&x| (x * c) % self.p).collect()
    }

    pub fn mul(&self, a: &FqEl, b: &FqEl) -> FqEl {
        let prod = poly_mul(a, b, self.p);
        let mut r = poly_rem(&prod, &self.modulus, self.p);
        r.resize(self.d, 0);
        r
    }

    pub fn pow(&self, a: &FqEl, mut e: u128) -> FqEl {
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

    pub fn inv(&self, a: &FqEl) -> Result<FqEl> {
        if self.is_zero(a) {
            return Err(Error::NotInvertible("zero field element".into()));
        }
        // a^(p^d - 2)
        let e = self.order()? - 2;
        Ok(self.pow(a, e))
    }

    /// `a^q` for `q = p^k`: the k-fold Frobenius.
    pub fn frobenius(&self, a: &FqEl, q: u64) -> FqEl {
        self.pow(a, q as u128)
    }

    /// Finds the embedding image of the generator of `sub` inside `self`,
    /// i.e. a root of `sub.modulus` in this field. Requires
    /// `sub.degree() | self.degree()` and the same characteristic. The search
    /// enumerates the fixed field of `Frob^(sub.d)`, so it is meant for small
    /// subfields (order capped at 2^20).
    pub fn subfield_generator_image(&self, sub: &FieldSpec) -> Result<FqEl> {
        if sub.p != self.p {
            return Err(Error::InvalidParameter("characteristic mismatch".into()));
        }
        if self.d % sub.d != 0 {
            return Err(Error::InvalidParameter(format!(
                "F_{}^{} is not a subfield of F_{}^{}",
                sub.p, sub.d, self.p, self.d
            )));
        }
        if sub == self {
            // generator maps to itself
            let mut g = self.zero();
            if self.d > 1 {
                g[1] = 1;
            } else {
                // prime field: generator is 1? modulus x - 0; use t = 0 root of x
                g[0] = 0;
            }
            // verify anyway below
            if self.eval_poly_fq(&sub.modulus, &g).iter().all(|&c| c == 0) {
                return Ok(g);
            }
        }
        let sub_order = sub.order()?;
        if sub_order > (1 << 20) {
            return Err(Error::InvalidParameter(
                "subfield too large for embedding enumeration".into(),
            ));
        }
        // basis of ker(Frob^{sub.d} - id) over F_p
        let q_sub = (sub.p as u128).pow(sub.d as u32);
        let mut frob_mat: Vec<FqEl> = Vec::with_capacity(self.d);
        for i in 0..self.d {
            let mut e = self.zero();
            e[i] = 1;
            frob_mat.push(self.pow(&e, q_sub));
        }
        // solve (F - I) x = 0 by Gaussian elimination over F_p
        let n = self.d;
        let mut m: Vec<Vec<u64>> = vec![vec![0; n]; n];
        for (j, col) in frob_mat.iter().enumerate() {
            for i in 0..n {
                m[i][j] = col[i];
            }
            m[j][j] = (m[j][j] + self.p - 1) % self.p;
        }
        let kernel = fp_kernel_basis(&m, self.p);
        if kernel.len() != sub.d {
            return Err(Error::InvalidParameter(
                "fixed field has unexpected dimension".into(),
            ));
        }
        // enumerate the fixed field, look for a root of sub.modulus
        let combos = (self.p as u128).pow(sub.d as u32);
        for idx in 0..combos {
            let mut n_ = idx;
            let mut cand = self.zero();
            for basis_vec in &kernel {
                let c = (n_ % self.p as u128) as u64;
                n_ /= self.p as u128;
                if c != 0 {
                    cand = self.add(&cand, &self.scalar_mul(c, basis_vec));
                }
            }
            if self.is_zero(&self.eval_poly_fq(&sub.modulus, &cand)) && !self.is_zero(&cand) || (sub.d == 1 && self.is_zero(&self.eval_poly_fq(&sub.modulus, &cand))) {
                return Ok(cand);
            }
        }
        Err(Error::InvalidParameter("no embedding root found".into()))
    }

    /// Evaluates a polynomial with F_p coefficients at a field element.
    fn eval_poly_fq(&self, poly: &[u64], x: &FqEl) -> FqEl {
        let mut acc = self.zero();
        for &c in poly.iter().rev() {
            acc = self.mul(&acc, x);
            acc[0] = (acc[0] + c) % self.p;
        }
        acc
    }

    /// Maps an element of a subfield into this field, given the image of
    /// the subfield generator.
    pub fn embed(&self, gen_image: &FqEl, a: &FqEl) -> FqEl {
        let mut acc = self.zero();
        for &c in a.iter().rev() {
            acc = self.mul(&acc, gen_image);
            acc[0] = (acc[0] + c) % self.p;
        }
        acc
    }
}

/// Basis of the kernel of an `n x n` matrix over `F_p` (rows of `m`).
pub(crate) fn fp_kernel_basis(m: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut a: Vec<Vec<u64>> = m.to_vec();
    let mut pivot_col_of_row = vec![usize::MAX; rows];
    let mut pivot_cols = vec![];
    let mut rank = 0;
    for col in 0..cols {
        let mut piv = None;
        for r in rank..rows {
            if a[r][col] != 0 {
                piv = Some(r);
                break;
            }
        }
        let Some(pr) = piv else { continue };
        a.swap(rank, pr);
        let inv = mod_inv(a[rank][col], p);
        for c in 0..cols {
            a[rank][c] = (a[rank][c] * inv) % p;
        }
        for r in 0..rows {
            if r != rank && a[r][col] != 0 {
                let f = a[r][col];
                for c in 0..cols {
                    a[r][c] = (a[r][c] + p - (f * a[rank][c]) % p) % p;
                }
            }
        }
        pivot_col_of_row[rank] = col;
        pivot_cols.push(col);
        rank += 1;
        if rank == rows {
            break;
        }
    }
    let mut basis = vec![];
    for free in 0..cols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![0u64; cols];
        v[free] = 1;
        for r in 0..rank {
            let pc = pivot_col_of_row[r];
            v[pc] = (p - a[r][free] % p) % p;
        }
        basis.push(v);
    }
    basis
}

/// Solves `A x = b` over `F_p`; returns one solution if consistent.
pub(crate) fn fp_solve(m: &[Vec<u64>], b: &[u64], p: u64) -> Option<Vec<u64>> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut a: Vec<Vec<u64>> = m
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let mut pivot_col_of_row = vec![usize::MAX; rows];
    let mut rank = 0;
    for col in 0..cols {
        let mut piv = None;
        for r in rank..rows {
            if a[r][col] != 0 {
                piv = Some(r);
                break;
            }
        }
        let Some(pr) = piv else { continue };
        a.swap(rank, pr);
        let inv = mod_inv(a[rank][col], p);
        for c in 0..=cols {
            a[rank][c] = (a[rank][c] * inv) % p;
        }
        for r in 0..rows {
            if r != rank && a[r][col] != 0 {
                let f = a[r][col];
                for c in 0..=cols {
                    a[r][c] = (a[r][c] + p - (f * a[rank][c]) % p) % p;
                }
            }
        }
        pivot_col_of_row[rank] = col;
        rank += 1;
        if rank == rows {
            break;
        }
    }
    // inconsistent?
    for r in rank..rows {
        if a[r][cols] != 0 {
            return None;
        }
    }
    let mut x = vec![0u64; cols];
    for r in 0..rank {
        x[pivot_col_of_row[r]] = a[r][cols];
    }
    Some(x)
}
