//! Local shtukas for `GL_r`: a rank together with a Frobenius matrix `b`,
//! acting on column vectors as `m -> b sigma(m)`.
//!
//! A morphism `f` between `(r, b)` and `(r, b')` intertwines the two
//! semilinear actions: `f b = b' sigma(f)`. Etale shtukas (integral `b` with
//! integral inverse) trivialize over a finite extension: the Lang equation
//! `c = b sigma(c)` is solved degree by degree, first the residue step by
//! linear algebra over the prime field, then one smoothness lift per power
//! of `z`. The resulting `c` is the Tate-module basis and
//! `c^{-1} sigma^m(c)` the matrix of the arithmetic Frobenius of the base
//! `F_{q^m}` on the invariants.

use crate::error::{Error, Result};
use crate::field::{fp_kernel_basis, fp_solve, FqEl};
use crate::matrix::LoopElement;
use crate::ring::{CoeffRing, RingKind};
use crate::series::Series;

#[derive(Debug, Clone)]
pub struct LocalShtuka {
    rank: usize,
    ring: CoeffRing,
    b: LoopElement,
    prec: i64,
}

#[derive(Debug, Clone)]
pub struct QuasiIsogeny {
    pub f: LoopElement,
    pub source: LocalShtuka,
    pub target: LocalShtuka,
}

#[derive(Debug, Clone)]
pub struct TateModule {
    /// Degree of the splitting extension over the base field.
    pub ext_degree: usize,
    /// Columns are tau-fixed vectors; integrally invertible.
    pub basis: LoopElement,
    /// Matrix of the base field's arithmetic Frobenius on the basis.
    pub galois: LoopElement,
}

impl LocalShtuka {
    pub fn new(b: LoopElement) -> Result<LocalShtuka> {
        let prec = b.prec();
        Ok(LocalShtuka { rank: b.rank(), ring: b.ring().clone(), b, prec })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ring(&self) -> &CoeffRing {
        &self.ring
    }

    pub fn frobenius_matrix(&self) -> &LoopElement {
        &self.b
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    /// Etale: `b` and `b^{-1}` are both integral (certified to precision).
    pub fn is_etale(&self) -> Result<bool> {
        Ok(self.b.is_integral()? && self.b.inverse()?.is_integral()?)
    }

    /// Change of trivialization by `f`: the new Frobenius matrix is
    /// `f b sigma(f)^{-1}`, and `f` becomes a quasi-isogeny from `self`
    /// to the result.
    pub fn transport(&self, f: &LoopElement) -> Result<LocalShtuka> {
        self.b.check_compatible(f)?;
        let new_b = f.mul(&self.b)?.mul(&f.frobenius().inverse()?)?;
        LocalShtuka::new(LoopElement::new(self.rank, new_b.entries().to_vec())?)
    }
}

/// `f b = b' sigma(f)` to the common certified precision (and `f` is
/// Laurent-invertible, which its construction as a [`LoopElement`] certifies).
pub fn is_quasi_isogeny(f: &LoopElement, source: &LocalShtuka, target: &LocalShtuka) -> Result<bool> {
    if source.rank != target.rank || f.rank() != source.rank {
        return Err(Error::ShapeMismatch("rank mismatch in quasi-isogeny test".into()));
    }
    let lhs = f.mul(&source.b)?;
    let rhs = target.b.mul(&f.frobenius())?;
    Ok(lhs.eq_to_common_prec(&rhs))
}

impl QuasiIsogeny {
    pub fn new(f: LoopElement, source: LocalShtuka, target: LocalShtuka) -> Result<QuasiIsogeny> {
        if !is_quasi_isogeny(&f, &source, &target)? {
            return Err(Error::InvalidParameter(
                "matrix does not intertwine the Frobenii".into(),
            ));
        }
        Ok(QuasiIsogeny { f, source, target })
    }
}

// ---- Lang trivialization ----

/// Outcome of one attempted trivialization over a fixed extension degree.
struct LangAttempt {
    c: LoopElement,
}

/// Solves `c = b sigma(c)` over the degree-`d` extension of the base, or
/// reports why this degree does not work.
fn try_lang_over(shtuka: &LocalShtuka, d: usize) -> Result<Option<LangAttempt>> {
    let base = &shtuka.ring;
    let (big, gen_image) = base.extend_field(d)?;
    let field = big.field().clone();
    let p = field.p();
    let big_d = field.degree();
    let r = shtuka.rank;
    let prec = shtuka.prec;

    // embed b
    let b_entries: Result<Vec<Series>> = shtuka
        .b
        .entries()
        .iter()
        .map(|s| embed_series(s, base, &big, &gen_image))
        .collect();
    let b = LoopElement::new(r, b_entries?)?;

    // residue step: v = B0 sigma(v), an F_p-linear system on F^r = F_p^{r big_d}
    let b0: Vec<FqEl> = (0..r * r)
        .map(|k| {
            let i = k / r;
            let j = k % r;
            b.entry(i, j)
                .coeff(0)
                .map(|c| big.part(&c, 0))
                .unwrap_or_else(|| field.zero())
        })
        .collect();
    let dim = r * big_d;
    let mut phi = vec![vec![0u64; dim]; dim];
    for col in 0..dim {
        // basis vector: component col / big_d of F^r, field basis index col % big_d
        let comp = col / big_d;
        let mut e = field.zero();
        e[col % big_d] = 1;
        // Phi(v) = v - B0 sigma(v)
        let se = field.frobenius(&e, big.base_q());
        for row_comp in 0..r {
            let mut acc = field.zero();
            let bij = &b0[row_comp * r + comp];
            acc = field.add(&acc, &field.mul(bij, &se));
            for (t, &a) in acc.iter().enumerate() {
                let row = row_comp * big_d + t;
                phi[row][col] = (phi[row][col] + p - a % p) % p;
            }
            if row_comp == comp {
                for t in 0..big_d {
                    let row = row_comp * big_d + t;
                    if t == col % big_d {
                        phi[row][col] = (phi[row][col] + 1) % p;
                    }
                }
            }
        }
    }
    let kernel = fp_kernel_basis(&phi, p);
    // pick r field-linearly-independent solutions
    let mut chosen: Vec<Vec<FqEl>> = vec![];
    for kv in &kernel {
        if chosen.len() == r {
            break;
        }
        let cand: Vec<FqEl> = (0..r)
            .map(|comp| kv[comp * big_d..(comp + 1) * big_d].to_vec())
            .collect();
        let mut trial = chosen.clone();
        trial.push(cand);
        if field_rank(&field, &trial, r) == trial.len() {
            chosen = trial;
        }
    }
    if chosen.len() < r {
        return Ok(None);
    }
    // c0: columns are the chosen solutions
    let mut c_entries = Vec::with_capacity(r * r);
    for i in 0..r {
        for chosen_col in chosen.iter().take(r) {
            let coeff = big.from_field(&chosen_col[i]);
            c_entries.push(Series::constant(big.clone(), coeff, prec));
        }
    }
    let mut c = match LoopElement::new(r, c_entries) {
        Ok(m) => m,
        Err(_) => return Ok(None), // degenerate residue solution
    };

    // lifting: solve x - x^q = e entrywise, one power of z at a time
    let artin_schreier: Vec<Vec<u64>> = {
        let mut m = vec![vec![0u64; big_d]; big_d];
        for col in 0..big_d {
            let mut e = field.zero();
            e[col] = 1;
            let fe = field.frobenius(&e, big.base_q());
            for row in 0..big_d {
                let mut v = if row == col { 1 } else { 0 };
                v = (v + p - fe[row] % p) % p;
                m[row][col] = v;
            }
        }
        m
    };

    for n in 1..prec {
        let residual = c.inverse()?.mul(&b.mul(&c.frobenius())?)?;
        let defect = residual.sub(&LoopElement::identity(big.clone(), r, prec))?;
        // invariant: defect vanishes below z^n
        let mut h_entries = Vec::with_capacity(r * r);
        let mut solvable = true;
        for i in 0..r {
            for j in 0..r {
                let e = match defect.entry(i, j).coeff(n) {
                    Some(cf) => big.part(&cf, 0),
                    None => field.zero(), // beyond horizon: nothing left to correct
                };
                match fp_solve(&artin_schreier, &e, p) {
                    Some(x) => h_entries.push(x),
                    None => {
                        solvable = false;
                        break;
                    }
                }
            }
            if !solvable {
                break;
            }
        }
        if !solvable {
            return Ok(None);
        }
        // c <- c (1 + z^n h)
        let mut corr = LoopElement::identity(big.clone(), r, prec);
        for i in 0..r {
            for j in 0..r {
                let h = big.from_field(&h_entries[i * r + j]);
                let term = Series::monomial(big.clone(), h, n, prec);
                *corr.entry_mut(i, j) = corr.entry(i, j).add(&term)?;
            }
        }
        c = c.mul(&corr)?;
    }

    // final verification of the Lang identity to precision
    let lhs = b.mul(&c.frobenius())?;
    if !lhs.eq_to_common_prec(&c) {
        return Ok(None);
    }
    Ok(Some(LangAttempt { c }))
}

fn field_rank(field: &crate::field::FieldSpec, cols: &[Vec<FqEl>], r: usize) -> usize {
    let mut m: Vec<Vec<FqEl>> = (0..r)
        .map(|i| cols.iter().map(|c| c[i].clone()).collect())
        .collect();
    let ncols = cols.len();
    let mut rank = 0;
    for col in 0..ncols {
        let mut piv = None;
        for row in rank..r {
            if !field.is_zero(&m[row][col]) {
                piv = Some(row);
                break;
            }
        }
        let Some(pr) = piv else { continue };
        m.swap(rank, pr);
        let inv = field.inv(&m[rank][col]).expect("nonzero");
        for cc in 0..ncols {
            m[rank][cc] = field.mul(&m[rank][cc], &inv);
        }
        for row in 0..r {
            if row != rank && !field.is_zero(&m[row][col]) {
                let f = m[row][col].clone();
                for cc in 0..ncols {
                    let t = field.mul(&f, &m[rank][cc]);
                    m[row][cc] = field.sub(&m[row][cc], &t);
                }
            }
        }
        rank += 1;
        if rank == r {
            break;
        }
    }
    rank
}

fn embed_series(
    s: &Series,
    base: &CoeffRing,
    big: &CoeffRing,
    gen_image: &FqEl,
) -> Result<Series> {
    let mut coeffs = vec![];
    let (val, prec) = match s.valuation() {
        crate::series::Valuation::At(v) => (v, s.prec()),
        crate::series::Valuation::ZeroToPrecision { horizon } => {
            return Ok(Series::zero(big.clone(), horizon))
        }
    };
    for e in val..prec {
        let c = s.coeff(e).unwrap();
        coeffs.push(base.embed_coeff(big, gen_image, &c));
    }
    Ok(Series::with_prec(big.clone(), val, coeffs, prec))
}

/// Embeds a whole matrix along a base-field extension of degree `d`.
pub fn embed_matrix(m: &LoopElement, d: usize) -> Result<(LoopElement, CoeffRing)> {
    let base = m.ring().clone();
    let (big, gen_image) = base.extend_field(d)?;
    let entries: Result<Vec<Series>> = m
        .entries()
        .iter()
        .map(|s| embed_series(s, &base, &big, &gen_image))
        .collect();
    Ok((LoopElement::new_unchecked(m.rank(), entries?)?, big))
}

/// Smallest extension degree `d <= cap` over the base field for which the
/// Lang equation `c = b sigma(c)` is solvable to the shtuka's precision:
/// iterating the equation `d` twists around shows this happens exactly when
/// the twisted norm `b sigma(b) ... sigma^{md-1}(b)` is the identity to
/// precision (`m` the base degree over `F_q`). Returns `None` when no degree
/// within the cap works.
pub fn minimal_splitting_degree(shtuka: &LocalShtuka, cap: usize) -> Result<Option<usize>> {
    let m = shtuka.ring.ext_degree_over_base();
    let b = shtuka.b.clone();
    let id = LoopElement::identity(shtuka.ring.clone(), shtuka.rank, shtuka.prec);
    let mut acc = b.clone();
    let mut twist = b.clone();
    for d in 1..=cap {
        // extend the twisted norm from length m(d-1) to length md
        let target_len = m * d;
        let mut cur_len = if d == 1 { 1 } else { m * (d - 1) };
        while cur_len < target_len {
            twist = twist.frobenius();
            acc = acc.mul(&twist)?;
            cur_len += 1;
        }
        if acc.eq_to_common_prec(&id) {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// Lang trivialization of an etale shtuka over a finite field: the smallest
/// extension degree `d <= max_degree` and an integrally invertible `c` over
/// `F_{q^{m d}}` with `c = b sigma(c)` to precision.
pub fn lang_trivialize(shtuka: &LocalShtuka, max_degree: usize) -> Result<(usize, LoopElement)> {
    if shtuka.ring.kind() != &RingKind::FiniteField {
        return Err(Error::InvalidParameter(
            "Lang trivialization requires a finite-field base".into(),
        ));
    }
    if !shtuka.is_etale()? {
        return Err(Error::NotEtale("Lang trivialization needs an etale shtuka".into()));
    }
    for d in 1..=max_degree {
        if let Some(attempt) = try_lang_over(shtuka, d)? {
            return Ok((d, attempt.c));
        }
    }
    Err(Error::BudgetExceeded(format!(
        "no trivialization within extension degree {max_degree}"
    )))
}

/// Tate module of an etale shtuka over `F_{q^m}`: basis from the Lang
/// trivialization, Galois action `c^{-1} sigma^m(c)` of the arithmetic
/// Frobenius of the base.
pub fn tate_module(shtuka: &LocalShtuka, max_degree: usize) -> Result<TateModule> {
    let (d, c) = lang_trivialize(shtuka, max_degree)?;
    let m = shtuka.ring.ext_degree_over_base();
    let galois = c.inverse()?.mul(&c.frobenius_pow(m))?;
    if !c.is_integrally_invertible()? {
        return Err(Error::NotInvertible(
            "Tate basis is not integrally invertible".into(),
        ));
    }
    if !galois.is_integrally_invertible()? {
        return Err(Error::NotInvertible(
            "Galois matrix is not integrally invertible".into(),
        ));
    }
    Ok(TateModule { ext_degree: d, basis: c, galois })
}

/// The induced isomorphism on rational Tate modules: `(c')^{-1} f c` over a
/// common splitting extension, together with its Galois equivariance check.
pub fn rational_tate_of_qisog(
    f: &LoopElement,
    source: &LocalShtuka,
    target: &LocalShtuka,
    max_degree: usize,
) -> Result<LoopElement> {
    if !is_quasi_isogeny(f, source, target)? {
        return Err(Error::InvalidParameter("not a quasi-isogeny".into()));
    }
    for d in 1..=max_degree {
        let (Some(a_src), Some(a_tgt)) = (try_lang_over(source, d)?, try_lang_over(target, d)?)
        else {
            continue;
        };
        let (f_big, _) = embed_matrix(f, d)?;
        let v = a_tgt.c.inverse()?.mul(&f_big)?.mul(&a_src.c)?;
        // Galois equivariance: gamma' sigma^m(v) = v gamma
        let m = source.ring.ext_degree_over_base();
        let gamma = a_src.c.inverse()?.mul(&a_src.c.frobenius_pow(m))?;
        let gamma_t = a_tgt.c.inverse()?.mul(&a_tgt.c.frobenius_pow(m))?;
        let lhs = gamma_t.mul(&v.frobenius_pow(m))?;
        let rhs = v.mul(&gamma)?;
        if !lhs.eq_to_common_prec(&rhs) {
            return Err(Error::InvalidParameter(
                "rational Tate matrix is not Galois-equivariant".into(),
            ));
        }
        // v is Laurent-invertible by construction: a product of certified
        // invertible factors
        return Ok(v);
    }
    Err(Error::BudgetExceeded(format!(
        "no common splitting extension within degree {max_degree}"
    )))
}

// ---- rigidity over dual numbers ----

/// Drops the epsilon part of every coefficient.
pub fn reduce_matrix_mod_eps(m: &LoopElement) -> Result<LoopElement> {
    let ring = m.ring().clone();
    let res_ring = ring.residue_field_ring()?;
    let entries: Result<Vec<Series>> = m
        .entries()
        .iter()
        .map(|s| {
            let (val, prec) = match s.valuation() {
                crate::series::Valuation::At(v) => (v, s.prec()),
                crate::series::Valuation::ZeroToPrecision { horizon } => {
                    return Ok(Series::zero(res_ring.clone(), horizon))
                }
            };
            let coeffs: Vec<_> = (val..prec)
                .map(|e| res_ring.from_field(&ring.part(&s.coeff(e).unwrap(), 0)))
                .collect();
            Ok(Series::with_prec(res_ring.clone(), val, coeffs, prec))
        })
        .collect();
    LoopElement::new_unchecked(m.rank(), entries?)
}

/// Includes a matrix over the residue field into the dual numbers.
pub fn include_matrix_in_dual(m: &LoopElement, dual: &CoeffRing) -> Result<LoopElement> {
    let ring = m.ring().clone();
    let entries: Result<Vec<Series>> = m
        .entries()
        .iter()
        .map(|s| {
            let (val, prec) = match s.valuation() {
                crate::series::Valuation::At(v) => (v, s.prec()),
                crate::series::Valuation::ZeroToPrecision { horizon } => {
                    return Ok(Series::zero(dual.clone(), horizon))
                }
            };
            let coeffs: Vec<_> = (val..prec)
                .map(|e| dual.from_field(&ring.part(&s.coeff(e).unwrap(), 0)))
                .collect();
            Ok(Series::with_prec(dual.clone(), val, coeffs, prec))
        })
        .collect();
    LoopElement::new_unchecked(m.rank(), entries?)
}

/// Rigidity of quasi-isogenies at the dual numbers: given a quasi-isogeny
/// `fbar` between the reductions of `source` and `target`, the unique lift
/// is the closed form `b' sigma(fbar) b^{-1}` (well-defined because the
/// Frobenius annihilates epsilon).
pub fn lift_qisog_dual_numbers(
    fbar: &LoopElement,
    source: &LocalShtuka,
    target: &LocalShtuka,
) -> Result<LoopElement> {
    if source.ring.kind() != &RingKind::DualNumbers {
        return Err(Error::InvalidParameter("source must live over dual numbers".into()));
    }
    let b_red = reduce_matrix_mod_eps(&source.b)?;
    let b_red = LoopElement::new(b_red.rank(), b_red.entries().to_vec())?;
    let bp_red = reduce_matrix_mod_eps(&target.b)?;
    let bp_red = LoopElement::new(bp_red.rank(), bp_red.entries().to_vec())?;
    let red_src = LocalShtuka::new(b_red)?;
    let red_tgt = LocalShtuka::new(bp_red)?;
    if !is_quasi_isogeny(fbar, &red_src, &red_tgt)? {
        return Err(Error::NotQuasiIsogeny);
    }
    // the lift is Laurent-invertible by construction (product of certified
    // invertible factors)
    let fbar_dual = include_matrix_in_dual(fbar, &source.ring)?;
    target
        .b
        .mul(&fbar_dual.frobenius())?
        .mul(&source.b.inverse()?)
}

/// Dimension of the solution space of the homogeneous epsilon-linear system
/// `f b = b' sigma(f)` with `f = eps H`, `H` supported on the exponent
/// window `[-w, w)`. Since `sigma` kills epsilon the system collapses to
/// `H b_red = 0`, and invertibility of `b` forces dimension zero; the
/// computation certifies that on the window.
pub fn epsilon_system_solution_dim(source: &LocalShtuka, window: i64) -> Result<usize> {
    let ring = &source.ring;
    if ring.kind() != &RingKind::DualNumbers {
        return Err(Error::InvalidParameter("dual-number base required".into()));
    }
    let b_red = reduce_matrix_mod_eps(&source.b)?;
    let field = b_red.ring().field().clone();
    let p = field.p();
    let fdim = field.degree();
    let r = source.rank;
    let exps: Vec<i64> = (-window..window).collect();
    let unknowns = r * r * exps.len() * fdim;
    // each unknown-basis H gives known coefficients of H * b_red; collect
    // them as F_p rows of the constraint matrix (transposed at the end)
    let mut columns: Vec<Vec<(usize, u64)>> = Vec::with_capacity(unknowns);
    let mut out_index: std::collections::HashMap<(usize, usize, i64, usize), usize> =
        std::collections::HashMap::new();
    let mut next_out = 0usize;
    for i in 0..r {
        for j in 0..r {
            for &e in &exps {
                for t in 0..fdim {
                    let mut basis_c = field.zero();
                    basis_c[t] = 1;
                    // H = basis_c * z^e at (i, j)
                    // (H b)_{i, l} = H_{ij} * b_{j, l}
                    let mut col = vec![];
                    for l in 0..r {
                        let prod = Series::monomial(
                            b_red.ring().clone(),
                            b_red.ring().from_field(&basis_c),
                            e,
                            source.prec,
                        )
                        .mul(b_red.entry(j, l))?;
                        let (v0, p0) = match prod.valuation() {
                            crate::series::Valuation::At(v) => (v, prod.prec()),
                            crate::series::Valuation::ZeroToPrecision { .. } => continue,
                        };
                        for ee in v0..p0 {
                            let cf = prod.coeff(ee).unwrap();
                            let blk = b_red.ring().part(&cf, 0);
                            for (tt, &digit) in blk.iter().enumerate() {
                                if digit == 0 {
                                    continue;
                                }
                                let key = (i, l, ee, tt);
                                let row = *out_index.entry(key).or_insert_with(|| {
                                    let v = next_out;
                                    next_out += 1;
                                    v
                                });
                                col.push((row, digit));
                            }
                        }
                    }
                    columns.push(col);
                }
            }
        }
    }
    let mut m = vec![vec![0u64; unknowns]; next_out];
    for (ci, col) in columns.iter().enumerate() {
        for &(row, digit) in col {
            m[row][ci] = (m[row][ci] + digit) % p;
        }
    }
    Ok(fp_kernel_basis(&m, p).len())
}
