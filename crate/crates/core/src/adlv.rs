//! Lattices in the affine Grassmannian over a finite field, affine
//! Deligne-Lusztig point sets, the quasi-isogeny metric and balls.
//!
//! A lattice in the window `z^a L0 <= L <= z^{-a} L0` is stored by its
//! canonical coset representative: an upper-triangular basis matrix with
//! monic diagonal `z^{e_i}`, `-a <= e_i <= a`, and above-diagonal entries
//! reduced modulo the pivot power (exponents in `[-a, e_i)`). Two lattices
//! are equal iff their canonical matrices are identical, which makes
//! enumeration, deduplication and deterministic ordering trivial.

use crate::error::{Error, Result};
use crate::matrix::LoopElement;
use crate::ring::{Coeff, CoeffRing, RingKind};
use crate::semilinear::{bounded_by, relative_position, BoundRelation, BoundSpec, Coweight};
use crate::series::{Series, Valuation};
use crate::shtuka::embed_matrix;

/// An exact Laurent polynomial: trimmed coefficients starting at `val`.
/// The zero polynomial is `val = 0`, empty coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LaurentPoly {
    pub val: i64,
    pub coeffs: Vec<Coeff>,
}

impl LaurentPoly {
    pub fn zero() -> LaurentPoly {
        LaurentPoly { val: 0, coeffs: vec![] }
    }

    /// Truncates a series to its known window, requiring exactness is the
    /// caller's business; trailing and leading zeros are trimmed.
    pub fn from_series(s: &Series) -> LaurentPoly {
        match s.valuation() {
            Valuation::ZeroToPrecision { .. } => LaurentPoly::zero(),
            Valuation::At(v) => {
                let mut coeffs = vec![];
                for e in v..s.prec() {
                    coeffs.push(s.coeff(e).unwrap());
                }
                while coeffs.last().map(|c| c.iter().all(|&x| x == 0)) == Some(true) {
                    coeffs.pop();
                }
                LaurentPoly { val: v, coeffs }
            }
        }
    }

    pub fn to_series(&self, ring: &CoeffRing, prec: i64) -> Series {
        if self.coeffs.is_empty() {
            return Series::zero(ring.clone(), prec);
        }
        Series::with_prec(ring.clone(), self.val, self.coeffs.clone(), prec)
    }
}

/// A point of the affine Grassmannian at finite truncation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lattice {
    rank: usize,
    window: i64,
    /// Row-major canonical basis matrix.
    entries: Vec<LaurentPoly>,
}

impl Lattice {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    pub fn entries(&self) -> &[LaurentPoly] {
        &self.entries
    }

    pub fn diag_exponents(&self) -> Vec<i64> {
        (0..self.rank)
            .map(|i| self.entries[i * self.rank + i].val)
            .collect()
    }

    /// The canonical representative as a loop group element.
    pub fn to_loop_element(&self, ring: &CoeffRing, prec: i64) -> Result<LoopElement> {
        let entries: Vec<Series> = self
            .entries
            .iter()
            .map(|p| p.to_series(ring, prec))
            .collect();
        LoopElement::new(self.rank, entries)
    }

    /// The standard lattice `L0`.
    pub fn standard(ring: &CoeffRing, rank: usize, window: i64) -> Lattice {
        let mut entries = vec![LaurentPoly::zero(); rank * rank];
        for i in 0..rank {
            entries[i * rank + i] = LaurentPoly { val: 0, coeffs: vec![ring.one()] };
        }
        Lattice { rank, window, entries }
    }
}

/// Working precision for canonical-form arithmetic inside a window.
fn work_prec(rank: usize, window: i64) -> i64 {
    window * (rank as i64 + 1) + 8
}

/// Column-reduces an arbitrary basis matrix to the canonical representative
/// of its coset `g K`. Entries must be exact within the working precision
/// (true for every matrix arising from window lattices).
pub fn canonicalize(g: &LoopElement, window: i64) -> Result<Lattice> {
    let r = g.rank();
    let ring = g.ring().clone();
    let prec = work_prec(r, window).max(g.prec());
    let mut cols: Vec<Vec<Series>> = (0..r)
        .map(|j| (0..r).map(|i| g.entry(i, j).clone()).collect())
        .collect();

    // bottom-up triangularization by column operations over O
    for i in (0..r).rev() {
        // among columns 0..=i all entries below row i are zero; pick the
        // pivot by smallest valuation at row i, ties by column index
        let mut pivot: Option<(i64, usize)> = None;
        for (j, col) in cols.iter().enumerate().take(i + 1) {
            match col[i].valuation() {
                Valuation::At(v) => {
                    if pivot.map_or(true, |(pv, _)| v < pv) {
                        pivot = Some((v, j));
                    }
                }
                Valuation::ZeroToPrecision { .. } => {}
            }
        }
        let Some((e_i, pj)) = pivot else {
            return Err(Error::NotInvertible(format!(
                "no pivot in row {i}; matrix is singular to precision"
            )));
        };
        cols.swap(i, pj);
        // scale pivot column to monic z^{e_i}
        let unit_inv = cols[i][i].shift(-e_i).invert()?;
        for t in 0..=i {
            cols[i][t] = cols[i][t].mul(&unit_inv)?;
        }
        let piv_inv = cols[i][i].invert()?;
        // eliminate row i from the other columns (their valuations there are
        // >= e_i since the pivot took the minimum)
        for j in 0..i {
            if cols[j][i].is_zero_to_prec() {
                continue;
            }
            let q = cols[j][i].mul(&piv_inv)?;
            for t in 0..=i {
                let sub = q.mul(&cols[i][t])?;
                cols[j][t] = cols[j][t].sub(&sub)?;
            }
        }
    }

    // reduce above-diagonal entries modulo the pivot power
    for j in 0..r {
        for i in (0..j).rev() {
            let e_i = match cols[i][i].valuation() {
                Valuation::At(v) => v,
                _ => unreachable!(),
            };
            // strip exponents >= e_i from cols[j][i]
            let entry = &cols[j][i];
            if entry.is_zero_to_prec() {
                continue;
            }
            let mut high = vec![];
            let Valuation::At(v) = entry.valuation() else { continue };
            for e in e_i.max(v)..entry.prec() {
                high.push(entry.coeff(e).unwrap());
            }
            if high.iter().all(|c| c.iter().all(|&x| x == 0)) {
                continue;
            }
            let h = Series::with_prec(ring.clone(), e_i.max(v) - e_i, high, prec);
            for t in 0..=i {
                let sub = h.mul(&cols[i][t])?;
                cols[j][t] = cols[j][t].sub(&sub)?;
            }
        }
    }

    let mut entries = Vec::with_capacity(r * r);
    for i in 0..r {
        for col in cols.iter().take(r) {
            entries.push(LaurentPoly::from_series(&col[i]));
        }
    }
    Ok(Lattice { rank: r, window, entries })
}

/// All lattices `L` with `z^a L0 <= L <= z^{-a} L0`, in canonical form,
/// sorted. Errors with `WindowTooLarge` above `cap` candidate forms.
pub fn enumerate_lattices(
    ring: &CoeffRing,
    rank: usize,
    window: i64,
    cap: u128,
) -> Result<Vec<Lattice>> {
    if ring.kind() != &RingKind::FiniteField {
        return Err(Error::InvalidParameter(
            "lattice enumeration works over finite fields".into(),
        ));
    }
    if window < 0 {
        return Err(Error::InvalidParameter("window must be nonnegative".into()));
    }
    let q = ring.field().order()?;
    let a = window;
    let r = rank;
    // total candidate count for the cap check
    let mut total: u128 = 0;
    let diag_choices = (2 * a + 1) as u128;
    let mut diag_combos = vec![vec![]];
    for _ in 0..r {
        let mut next = vec![];
        for combo in &diag_combos {
            for e in -a..=a {
                let mut c: Vec<i64> = combo.clone();
                c.push(e);
                next.push(c);
            }
        }
        diag_combos = next;
    }
    debug_assert_eq!(diag_combos.len() as u128, diag_choices.pow(r as u32));
    for combo in &diag_combos {
        let slots: i64 = (0..r)
            .flat_map(|i| ((i + 1)..r).map(move |_| combo[i] + a))
            .sum();
        let count = q.checked_pow(slots as u32).ok_or_else(|| {
            Error::WindowTooLarge("candidate count overflows".into())
        })?;
        total = total
            .checked_add(count)
            .ok_or_else(|| Error::WindowTooLarge("candidate count overflows".into()))?;
    }
    if total > cap {
        return Err(Error::WindowTooLarge(format!(
            "{total} candidate forms exceed the cap {cap}"
        )));
    }

    let prec = work_prec(r, a);
    let z_a_shift = a;
    let mut out = vec![];
    for combo in &diag_combos {
        // slot layout: for i < j, exponents -a..combo[i] at position (i, j)
        let mut slot_sizes = vec![];
        for i in 0..r {
            for j in (i + 1)..r {
                let _ = j;
                slot_sizes.push((combo[i] + a) as usize);
            }
        }
        let total_digits: usize = slot_sizes.iter().sum();
        let assignments = q.pow(total_digits as u32);
        for mut idx in 0..assignments {
            // decode digits
            let mut digits = Vec::with_capacity(total_digits);
            for _ in 0..total_digits {
                digits.push(idx % q);
                idx /= q;
            }
            // build the triangular matrix
            let mut entries = vec![LaurentPoly::zero(); r * r];
            for (i, &e) in combo.iter().enumerate() {
                entries[i * r + i] = LaurentPoly { val: e, coeffs: vec![ring.one()] };
            }
            let mut digit_pos = 0;
            let mut slot = 0;
            let mut ok = true;
            for i in 0..r {
                for j in (i + 1)..r {
                    let n = slot_sizes[slot];
                    slot += 1;
                    let mut coeffs = vec![];
                    for _ in 0..n {
                        let c = ring.from_field(
                            &ring.field().element_from_index(digits[digit_pos]),
                        );
                        digit_pos += 1;
                        coeffs.push(c);
                    }
                    while coeffs.last().map(|c| c.iter().all(|&x| x == 0)) == Some(true) {
                        coeffs.pop();
                    }
                    // leading zeros: shift val
                    let mut val = -a;
                    while coeffs.first().map(|c| c.iter().all(|&x| x == 0)) == Some(true) {
                        coeffs.remove(0);
                        val += 1;
                    }
                    entries[i * r + j] = if coeffs.is_empty() {
                        LaurentPoly::zero()
                    } else {
                        LaurentPoly { val, coeffs }
                    };
                }
            }
            let lat = Lattice { rank: r, window: a, entries };
            // window condition z^a L0 <= L: z^a B^{-1} integral
            let b = lat.to_loop_element(ring, prec)?;
            let binv = b.inverse()?;
            for e in binv.entries() {
                match e.valuation() {
                    Valuation::At(v) => {
                        if v < -z_a_shift {
                            ok = false;
                            break;
                        }
                    }
                    Valuation::ZeroToPrecision { horizon } => {
                        if horizon < -z_a_shift {
                            return Err(Error::InsufficientPrecision(
                                "window check horizon too low".into(),
                            ));
                        }
                    }
                }
            }
            if ok {
                out.push(lat);
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// The affine Deligne-Lusztig point set in a window.
#[derive(Debug, Clone)]
pub struct AdlvResult {
    pub points: Vec<Lattice>,
    pub rank: usize,
    pub window: i64,
    /// Extension degree of the point field over the base field of `b`.
    pub ext: usize,
    pub bound: BoundSpec,
}

/// Points `g K` with `g^{-1} b sigma(g)` bounded, over the degree-`ext`
/// extension of the base field of `b`.
pub fn adlv_points(
    b: &LoopElement,
    bound: &BoundSpec,
    ext: usize,
    window: i64,
    cap: u128,
) -> Result<AdlvResult> {
    let (b_big, ring_d) = if ext == 1 {
        (b.clone(), b.ring().clone())
    } else {
        embed_matrix(b, ext)?
    };
    let lattices = enumerate_lattices(&ring_d, b.rank(), window, cap)?;
    let prec = b_big.prec();
    let mut points = vec![];
    for lat in lattices {
        let g = lat.to_loop_element(&ring_d, prec)?;
        let h = g.inverse()?.mul(&b_big)?.mul(&g.frobenius())?;
        if bounded_by(&h, bound)? {
            points.push(lat);
        }
    }
    Ok(AdlvResult {
        points,
        rank: b.rank(),
        window,
        ext,
        bound: bound.clone(),
    })
}

/// Membership test for a single coset representative (not necessarily
/// canonical) by the Smith-form route; the independent check behind
/// `--oracle`.
pub fn adlv_member_smith(g: &LoopElement, b: &LoopElement, bound: &BoundSpec) -> Result<bool> {
    let h = g.inverse()?.mul(b)?.mul(&g.frobenius())?;
    let nu = relative_position(&h)?;
    Ok(match bound.relation {
        BoundRelation::Equal => nu == bound.coweight,
        BoundRelation::DominanceLeq => nu.dominated_by(&bound.coweight),
    })
}

/// The metric: least `n >= 0` with `x^{-1} x'` bounded by `2 n rho^vee`,
/// i.e. by the coweight `n (r-1, r-3, ..., 1-r)`. Points whose determinant
/// valuations differ are at infinite distance (`Incommensurable`).
pub fn metric_dtilde(x: &LoopElement, x_prime: &LoopElement) -> Result<i64> {
    x.check_compatible(x_prime)?;
    let h = x.inverse()?.mul(x_prime)?;
    let nu = relative_position(&h)?;
    if nu.total() != 0 {
        return Err(Error::Incommensurable(format!(
            "determinant valuations differ by {}",
            nu.total()
        )));
    }
    let r = x.rank() as i64;
    let mut n = 0i64;
    let mut partial = 0i64;
    for (k, &part) in (1..).zip(nu.parts().iter().take(x.rank() - 1)) {
        partial += part;
        // need partial <= n * k * (r - k)
        let denom = k * (r - k);
        if partial > 0 {
            n = n.max((partial + denom - 1) / denom);
        }
    }
    // cross-check the closed form against the boundedness predicate
    debug_assert!(bounded_by(&h, &BoundSpec::leq(Coweight::two_n_rho_check(x.rank(), n)))?);
    if n > 0 {
        debug_assert!(!bounded_by(
            &h,
            &BoundSpec::leq(Coweight::two_n_rho_check(x.rank(), n - 1))
        )?);
    }
    Ok(n)
}

/// The sub-sequence of `points` at metric distance at most `d0` from `y`;
/// points at infinite distance are dropped.
pub fn ball(
    points: &[Lattice],
    y: &Lattice,
    d0: i64,
    ring: &CoeffRing,
    prec: i64,
) -> Result<Vec<Lattice>> {
    let y_rep = y.to_loop_element(ring, prec)?;
    let mut out = vec![];
    for pt in points {
        let rep = pt.to_loop_element(ring, prec)?;
        match metric_dtilde(&rep, &y_rep) {
            Ok(d) if d <= d0 => out.push(pt.clone()),
            Ok(_) => {}
            Err(Error::Incommensurable(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

// ---- independent subspace-enumeration oracle ----

/// Counts window lattices by enumerating `z`-stable `F_q`-subspaces of
/// `(O/z^{2a})^r` in reduced row echelon form; completely independent of the
/// canonical-form enumerator. Practical for small `q^(2 a r)` only.
pub fn oracle_count_window_lattices(ring: &CoeffRing, rank: usize, window: i64) -> Result<u64> {
    Ok(oracle_window_subspaces(ring, rank, window)?.len() as u64)
}

/// Field arithmetic by lookup table on element indices; lets the oracle
/// churn through hundreds of thousands of echelon forms cheaply.
struct FieldTables {
    q: usize,
    add: Vec<u64>,
    mul: Vec<u64>,
    neg: Vec<u64>,
}

impl FieldTables {
    fn new(field: &crate::field::FieldSpec) -> Result<FieldTables> {
        let q = field.order()? as usize;
        if q > 64 {
            return Err(Error::WindowTooLarge("oracle field too large for tables".into()));
        }
        let idx = |el: &crate::field::FqEl| -> u64 {
            let p = field.p();
            el.iter()
                .enumerate()
                .map(|(t, &c)| c * p.pow(t as u32))
                .sum()
        };
        let els: Vec<_> = (0..q as u128).map(|i| field.element_from_index(i)).collect();
        let mut add = vec![0; q * q];
        let mut mul = vec![0; q * q];
        let mut neg = vec![0; q];
        for (i, a) in els.iter().enumerate() {
            neg[i] = idx(&field.neg(a));
            for (j, b) in els.iter().enumerate() {
                add[i * q + j] = idx(&field.add(a, b));
                mul[i * q + j] = idx(&field.mul(a, b));
            }
        }
        Ok(FieldTables { q, add, mul, neg })
    }

    #[inline]
    fn add(&self, a: u64, b: u64) -> u64 {
        self.add[a as usize * self.q + b as usize]
    }

    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.mul[a as usize * self.q + b as usize]
    }

    #[inline]
    fn neg(&self, a: u64) -> u64 {
        self.neg[a as usize]
    }
}

/// The z-stable subspaces themselves, as reduced-row-echelon bases over
/// `F_q` (dimension `n = 2 a r`, coordinate `(component, z-power)` at index
/// `component * 2a + power`, entries encoded as field-element indices).
pub fn oracle_window_subspaces(
    ring: &CoeffRing,
    rank: usize,
    window: i64,
) -> Result<Vec<Vec<Vec<u64>>>> {
    let q = ring.field().order()? as u64;
    let two_a = (2 * window) as usize;
    let n = two_a * rank;
    if n > 20 || (q as u128).pow(n as u32) > (1 << 40) {
        return Err(Error::WindowTooLarge(
            "subspace oracle ambient space too large".into(),
        ));
    }
    let tables = FieldTables::new(ring.field())?;
    let mut subspaces = vec![];
    // iterate pivot column sets; rows here are already in RREF by layout
    for mask in 0u64..(1 << n) {
        let pivots: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let k = pivots.len();
        let mut free_pos = vec![];
        for (t, &pc) in pivots.iter().enumerate() {
            for j in (pc + 1)..n {
                if mask >> j & 1 == 0 {
                    free_pos.push((t, j));
                }
            }
        }
        let combos = (q as u128).pow(free_pos.len() as u32);
        for mut idx in 0..combos {
            let mut rows = vec![vec![0u64; n]; k];
            for (t, &pc) in pivots.iter().enumerate() {
                rows[t][pc] = 1;
            }
            for &(t, j) in &free_pos {
                let digit = (idx % q as u128) as u64;
                idx /= q as u128;
                rows[t][j] = digit;
            }
            if oracle_is_z_stable(&rows, &pivots, &tables, rank, two_a) {
                subspaces.push(rows.clone());
            }
        }
    }
    Ok(subspaces)
}

/// Stability of an RREF row space under the shift `(c, t) -> (c, t + 1)`:
/// reduce each shifted row against the pivots and check the remainder.
fn oracle_is_z_stable(
    rows: &[Vec<u64>],
    pivots: &[usize],
    tables: &FieldTables,
    rank: usize,
    two_a: usize,
) -> bool {
    let n = rank * two_a;
    for v in rows {
        let mut sv = vec![0u64; n];
        for c in 0..rank {
            for t in 0..two_a - 1 {
                sv[c * two_a + t + 1] = v[c * two_a + t];
            }
        }
        for (t, &pc) in pivots.iter().enumerate() {
            let coef = sv[pc];
            if coef == 0 {
                continue;
            }
            for j in 0..n {
                let sub = tables.mul(coef, rows[t][j]);
                sv[j] = tables.add(sv[j], tables.neg(sub));
            }
        }
        if sv.iter().any(|&x| x != 0) {
            return false;
        }
    }
    true
}

/// Pulls an echelon subspace back to a window lattice and returns an O-basis
/// by a plain valuation-pivot column reduction (the oracle's own reduction,
/// not the canonical-form code path).
pub fn oracle_subspace_to_basis(
    ring: &CoeffRing,
    rank: usize,
    window: i64,
    rows: &[Vec<u64>],
) -> Result<LoopElement> {
    let two_a = (2 * window) as usize;
    let prec = work_prec(rank, window);
    let field = ring.field().clone();
    // generators: subspace vectors as Laurent vectors plus z^a * std basis
    let mut gens: Vec<Vec<Series>> = vec![];
    for v in rows {
        let mut vec_entries = vec![];
        for c in 0..rank {
            let coeffs: Vec<Coeff> = (0..two_a)
                .map(|t| ring.from_field(&field.element_from_index(v[c * two_a + t] as u128)))
                .collect();
            vec_entries.push(Series::with_prec(ring.clone(), -window, coeffs, prec));
        }
        gens.push(vec_entries);
    }
    for c in 0..rank {
        let mut vec_entries = vec![Series::zero(ring.clone(), prec); rank];
        vec_entries[c] = Series::monomial(ring.clone(), ring.one(), window, prec);
        gens.push(vec_entries);
    }
    // column reduction: one pivot per row, bottom-up
    let mut basis: Vec<Vec<Series>> = vec![];
    for i in (0..rank).rev() {
        // pivot: minimum valuation at row i among generators whose lowest
        // nonzero row is i
        let mut pivot: Option<(i64, usize)> = None;
        for (gi, gen) in gens.iter().enumerate() {
            let low = (0..rank).rev().find(|&t| !gen[t].is_zero_to_prec());
            if low == Some(i) {
                if let Valuation::At(v) = gen[i].valuation() {
                    if pivot.map_or(true, |(pv, _)| v < pv) {
                        pivot = Some((v, gi));
                    }
                }
            }
        }
        let Some((_, gi)) = pivot else { continue };
        let pv = gens.remove(gi);
        // eliminate row i from all other generators with lowest row i
        let piv_inv = pv[i].invert()?;
        for gen in gens.iter_mut() {
            if gen[i].is_zero_to_prec() {
                continue;
            }
            let low = (0..rank).rev().find(|&t| !gen[t].is_zero_to_prec());
            if low != Some(i) {
                continue;
            }
            let q = gen[i].mul(&piv_inv)?;
            for t in 0..rank {
                let sub = q.mul(&pv[t])?;
                gen[t] = gen[t].sub(&sub)?;
            }
        }
        basis.push(pv);
    }
    if basis.len() != rank {
        return Err(Error::NotInvertible("subspace pullback is not full rank".into()));
    }
    basis.reverse();
    let mut entries = Vec::with_capacity(rank * rank);
    for i in 0..rank {
        for col in &basis {
            entries.push(col[i].clone());
        }
    }
    LoopElement::new(rank, entries)
}
