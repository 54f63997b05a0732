//! Square matrices over truncated Laurent series: elements of the loop group.
//!
//! A [`LoopElement`] is an `r x r` matrix of series over one coefficient
//! ring, certified invertible over Laurent series at construction (its
//! determinant has an invertible series inverse). This is the matrix model
//! of `LP(R)` for `GL_r`.

use crate::error::{Error, Result};
use crate::ring::{Coeff, CoeffRing};
use crate::series::{Series, Valuation};

#[derive(Debug, Clone, PartialEq)]
pub struct LoopElement {
    rank: usize,
    ring: CoeffRing,
    /// Row-major entries.
    entries: Vec<Series>,
}

impl LoopElement {
    /// Builds and certifies Laurent-invertibility (the determinant must have
    /// a unit coefficient below its horizon).
    pub fn new(rank: usize, entries: Vec<Series>) -> Result<LoopElement> {
        let m = LoopElement::new_unchecked(rank, entries)?;
        let det = m.det()?;
        if det.is_zero_to_prec() {
            return Err(Error::NotInvertible(
                "determinant vanishes to precision".into(),
            ));
        }
        // series-invertibility of det certifies Laurent-invertibility
        det.invert().map_err(|_| {
            Error::NotInvertible("determinant is not an invertible series".into())
        })?;
        Ok(m)
    }

    /// Shape/ring checks only; used internally for matrices that are not
    /// required to be invertible (exterior powers, defect matrices).
    pub fn new_unchecked(rank: usize, entries: Vec<Series>) -> Result<LoopElement> {
        if rank == 0 || entries.len() != rank * rank {
            return Err(Error::ShapeMismatch(format!(
                "expected {}x{} entries",
                rank, rank
            )));
        }
        let ring = entries[0].ring().clone();
        if entries.iter().any(|e| e.ring() != &ring) {
            return Err(Error::RingMismatch("matrix entries over different rings".into()));
        }
        Ok(LoopElement { rank, ring, entries })
    }

    pub fn identity(ring: CoeffRing, rank: usize, prec: i64) -> LoopElement {
        let mut entries = Vec::with_capacity(rank * rank);
        for i in 0..rank {
            for j in 0..rank {
                if i == j {
                    entries.push(Series::one(ring.clone(), prec));
                } else {
                    entries.push(Series::zero(ring.clone(), prec));
                }
            }
        }
        LoopElement { rank, ring, entries }
    }

    /// diag(z^{mu_1}, ..., z^{mu_r}).
    pub fn diag_z_powers(ring: CoeffRing, mu: &[i64], prec: i64) -> LoopElement {
        let rank = mu.len();
        let mut entries = Vec::with_capacity(rank * rank);
        for i in 0..rank {
            for j in 0..rank {
                if i == j {
                    entries.push(Series::monomial(ring.clone(), ring.one(), mu[i], prec));
                } else {
                    entries.push(Series::zero(ring.clone(), prec));
                }
            }
        }
        LoopElement { rank, ring, entries }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ring(&self) -> &CoeffRing {
        &self.ring
    }

    pub fn entry(&self, i: usize, j: usize) -> &Series {
        &self.entries[i * self.rank + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut Series {
        &mut self.entries[i * self.rank + j]
    }

    pub fn entries(&self) -> &[Series] {
        &self.entries
    }

    /// Common guaranteed horizon of all entries.
    pub fn prec(&self) -> i64 {
        self.entries.iter().map(|e| e.prec()).min().unwrap_or(0)
    }

    pub fn check_compatible(&self, other: &LoopElement) -> Result<()> {
        if self.rank != other.rank {
            return Err(Error::ShapeMismatch(format!(
                "ranks {} vs {}",
                self.rank, other.rank
            )));
        }
        if self.ring != other.ring {
            return Err(Error::RingMismatch("matrices over different rings".into()));
        }
        Ok(())
    }

    pub fn mul(&self, other: &LoopElement) -> Result<LoopElement> {
        self.check_compatible(other)?;
        let r = self.rank;
        let mut entries = Vec::with_capacity(r * r);
        for i in 0..r {
            for j in 0..r {
                let mut acc: Option<Series> = None;
                for k in 0..r {
                    let term = self.entry(i, k).mul(other.entry(k, j))?;
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a.add(&term)?,
                    });
                }
                entries.push(acc.unwrap());
            }
        }
        LoopElement::new_unchecked(r, entries)
    }

    pub fn add(&self, other: &LoopElement) -> Result<LoopElement> {
        self.check_compatible(other)?;
        let entries: Result<Vec<_>> = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        LoopElement::new_unchecked(self.rank, entries?)
    }

    pub fn sub(&self, other: &LoopElement) -> Result<LoopElement> {
        self.check_compatible(other)?;
        let entries: Result<Vec<_>> = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(b))
            .collect();
        LoopElement::new_unchecked(self.rank, entries?)
    }

    pub fn scale_series(&self, s: &Series) -> Result<LoopElement> {
        let entries: Result<Vec<_>> = self.entries.iter().map(|a| a.mul(s)).collect();
        LoopElement::new_unchecked(self.rank, entries?)
    }

    /// Determinant by cofactor expansion (ranks here are small).
    pub fn det(&self) -> Result<Series> {
        let idx: Vec<usize> = (0..self.rank).collect();
        self.det_sub(&idx, &idx)
    }

    /// Determinant of the submatrix on `rows x cols`.
    pub fn det_sub(&self, rows: &[usize], cols: &[usize]) -> Result<Series> {
        let n = rows.len();
        assert_eq!(n, cols.len());
        assert!(n >= 1, "empty minor");
        if n == 1 {
            return Ok(self.entry(rows[0], cols[0]).clone());
        }
        let mut acc: Option<Series> = None;
        for (k, &row) in rows.iter().enumerate() {
            let sub_rows: Vec<usize> = rows.iter().copied().filter(|&r| r != row).collect();
            let minor = self.det_sub(&sub_rows, &cols[1..])?;
            let term = self.entry(row, cols[0]).mul(&minor)?;
            let signed = if k % 2 == 0 { term } else { term.neg() };
            acc = Some(match acc {
                None => signed,
                Some(a) => a.add(&signed)?,
            });
        }
        Ok(acc.unwrap())
    }

    /// All `j x j` minors in lexicographic row/column-subset order, as a
    /// `C(r,j) x C(r,j)` matrix: the j-th exterior power.
    pub fn exterior_power(&self, j: usize) -> Result<LoopElement> {
        if j == 0 || j > self.rank {
            return Err(Error::InvalidParameter(format!(
                "exterior power index {} out of range 1..={}",
                j, self.rank
            )));
        }
        let subsets = k_subsets(self.rank, j);
        let n = subsets.len();
        let mut entries = Vec::with_capacity(n * n);
        for rows in &subsets {
            for cols in &subsets {
                entries.push(self.det_sub(rows, cols)?);
            }
        }
        LoopElement::new_unchecked(n, entries)
    }

    /// Minimum certified valuation over all `j x j` minors, or the
    /// certificate that all of them vanish up to a common horizon.
    pub fn min_minor_valuation(&self, j: usize) -> Result<Valuation> {
        let subsets = k_subsets(self.rank, j);
        let mut best: Option<i64> = None;
        let mut min_horizon: Option<i64> = None;
        for rows in &subsets {
            for cols in &subsets {
                let minor = self.det_sub(rows, cols)?;
                match minor.valuation() {
                    Valuation::At(v) => best = Some(best.map_or(v, |b: i64| b.min(v))),
                    Valuation::ZeroToPrecision { horizon } => {
                        min_horizon = Some(min_horizon.map_or(horizon, |h: i64| h.min(horizon)))
                    }
                }
            }
        }
        match (best, min_horizon) {
            (Some(v), Some(h)) if h <= v => Err(Error::InsufficientPrecision(format!(
                "a {j}x{j} minor vanishes to horizon {h}, cannot certify the minimum valuation {v}"
            ))),
            (Some(v), _) => Ok(Valuation::At(v)),
            (None, Some(h)) => Ok(Valuation::ZeroToPrecision { horizon: h }),
            (None, None) => unreachable!("no minors"),
        }
    }

    /// Inverse via the adjugate; works over nilpotent coefficient rings too.
    pub fn inverse(&self) -> Result<LoopElement> {
        let det_inv = self.det()?.invert()?;
        let r = self.rank;
        if r == 1 {
            return LoopElement::new_unchecked(1, vec![self.entry(0, 0).invert()?]);
        }
        let all: Vec<usize> = (0..r).collect();
        let mut entries = Vec::with_capacity(r * r);
        for i in 0..r {
            for j in 0..r {
                // adjugate: (-1)^{i+j} * minor with row j, col i removed
                let rows: Vec<usize> = all.iter().copied().filter(|&x| x != j).collect();
                let cols: Vec<usize> = all.iter().copied().filter(|&x| x != i).collect();
                let minor = self.det_sub(&rows, &cols)?;
                let signed = if (i + j) % 2 == 0 { minor } else { minor.neg() };
                entries.push(signed.mul(&det_inv)?);
            }
        }
        LoopElement::new_unchecked(r, entries)
    }

    /// Entrywise Frobenius.
    pub fn frobenius(&self) -> LoopElement {
        let entries = self.entries.iter().map(|e| e.frobenius()).collect();
        LoopElement { rank: self.rank, ring: self.ring.clone(), entries }
    }

    pub fn frobenius_pow(&self, times: usize) -> LoopElement {
        let entries = self.entries.iter().map(|e| e.frobenius_pow(times)).collect();
        LoopElement { rank: self.rank, ring: self.ring.clone(), entries }
    }

    /// Entrywise substitution `z -> z + c`.
    pub fn substitute_z_plus(&self, c: &Coeff) -> Result<LoopElement> {
        let entries: Result<Vec<_>> =
            self.entries.iter().map(|e| e.substitute_z_plus(c)).collect();
        LoopElement::new_unchecked(self.rank, entries?)
    }

    /// True iff every entry has valuation >= 0, certified.
    pub fn is_integral(&self) -> Result<bool> {
        for e in &self.entries {
            match e.valuation() {
                Valuation::At(v) => {
                    if v < 0 {
                        return Ok(false);
                    }
                }
                Valuation::ZeroToPrecision { horizon } => {
                    if horizon < 0 {
                        return Err(Error::InsufficientPrecision(
                            "entry vanishes to a negative horizon; integrality uncertifiable"
                                .into(),
                        ));
                    }
                }
            }
        }
        Ok(true)
    }

    /// Integral with integral inverse.
    pub fn is_integrally_invertible(&self) -> Result<bool> {
        Ok(self.is_integral()? && self.inverse()?.is_integral()?)
    }

    /// Coefficientwise equality on the common certified window.
    pub fn eq_to_common_prec(&self, other: &LoopElement) -> bool {
        self.rank == other.rank
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.eq_to_common_prec(b))
    }

    pub fn truncate(&self, prec: i64) -> LoopElement {
        let entries = self.entries.iter().map(|e| e.truncate(prec)).collect();
        LoopElement { rank: self.rank, ring: self.ring.clone(), entries }
    }

    pub fn transpose(&self) -> LoopElement {
        let r = self.rank;
        let mut entries = Vec::with_capacity(r * r);
        for i in 0..r {
            for j in 0..r {
                entries.push(self.entry(j, i).clone());
            }
        }
        LoopElement { rank: r, ring: self.ring.clone(), entries }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.rank {
            self.entries.swap(a * self.rank + j, b * self.rank + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rank {
            self.entries.swap(i * self.rank + a, i * self.rank + b);
        }
    }
}

/// All j-element subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut cur = vec![0usize; j];
    fn rec(n: usize, j: usize, start: usize, depth: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if depth == j {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur[depth] = v;
            rec(n, j, v + 1, depth + 1, cur, out);
        }
    }
    rec(n, j, 0, 0, &mut cur, &mut out);
    out
}
