use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{FiniteAbelianGroup, IntMatrix, LinalgError};

/// Smith normal form `U·A·V = D` together with `U⁻¹`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: IntMatrix,
    pub u_inv: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl Smith {
    /// Diagonal entries `d_0 | d_1 | …`, `min(rows, cols)` of them.
    pub fn diagonal(&self) -> Vec<BigInt> {
        let k = self.d.rows().min(self.d.cols());
        (0..k).map(|i| self.d.get(i, i).clone()).collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().take_while(|x| !x.is_zero()).count()
    }
}

struct Reducer {
    d: IntMatrix,
    u: IntMatrix,
    u_inv: IntMatrix,
    v: IntMatrix,
}

impl Reducer {
    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.d.cols() {
            let t = self.d.get(a, j).clone();
            *self.d.get_mut(a, j) = self.d.get(b, j).clone();
            *self.d.get_mut(b, j) = t;
        }
        for j in 0..self.u.cols() {
            let t = self.u.get(a, j).clone();
            *self.u.get_mut(a, j) = self.u.get(b, j).clone();
            *self.u.get_mut(b, j) = t;
        }
        for i in 0..self.u_inv.rows() {
            let t = self.u_inv.get(i, a).clone();
            *self.u_inv.get_mut(i, a) = self.u_inv.get(i, b).clone();
            *self.u_inv.get_mut(i, b) = t;
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for m in [&mut self.d, &mut self.v] {
            for i in 0..m.rows() {
                let t = m.get(i, a).clone();
                *m.get_mut(i, a) = m.get(i, b).clone();
                *m.get_mut(i, b) = t;
            }
        }
    }

    /// row_dst += c · row_src
    fn add_row(&mut self, dst: usize, src: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for m in [&mut self.d, &mut self.u] {
            for j in 0..m.cols() {
                let s = m.get(src, j).clone();
                if !s.is_zero() {
                    *m.get_mut(dst, j) += c * s;
                }
            }
        }
        // U⁻¹ ← U⁻¹·E⁻¹, i.e. col_src −= c · col_dst
        for i in 0..self.u_inv.rows() {
            let s = self.u_inv.get(i, dst).clone();
            if !s.is_zero() {
                *self.u_inv.get_mut(i, src) -= c * s;
            }
        }
    }

    /// col_dst += c · col_src
    fn add_col(&mut self, dst: usize, src: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for m in [&mut self.d, &mut self.v] {
            for i in 0..m.rows() {
                let s = m.get(i, src).clone();
                if !s.is_zero() {
                    *m.get_mut(i, dst) += c * s;
                }
            }
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.d.cols() {
            let x = -self.d.get(r, j).clone();
            *self.d.get_mut(r, j) = x;
        }
        for j in 0..self.u.cols() {
            let x = -self.u.get(r, j).clone();
            *self.u.get_mut(r, j) = x;
        }
        for i in 0..self.u_inv.rows() {
            let x = -self.u_inv.get(i, r).clone();
            *self.u_inv.get_mut(i, r) = x;
        }
    }

    /// Rows `(t, i)` ← `[[x, y], [−b', a']]·(t, i)`, a unimodular step.
    fn combine_rows(&mut self, t: usize, i: usize, x: &BigInt, y: &BigInt, a1: &BigInt, b1: &BigInt) {
        for m in [&mut self.d, &mut self.u] {
            for j in 0..m.cols() {
                let (rt, ri) = (m.get(t, j).clone(), m.get(i, j).clone());
                if rt.is_zero() && ri.is_zero() {
                    continue;
                }
                *m.get_mut(t, j) = x * &rt + y * &ri;
                *m.get_mut(i, j) = a1 * &ri - b1 * &rt;
            }
        }
        // U⁻¹ ← U⁻¹·[[a', −y], [b', x]]
        for r in 0..self.u_inv.rows() {
            let (ct, ci) = (self.u_inv.get(r, t).clone(), self.u_inv.get(r, i).clone());
            *self.u_inv.get_mut(r, t) = a1 * &ct + b1 * &ci;
            *self.u_inv.get_mut(r, i) = x * &ci - y * &ct;
        }
    }

    /// Columns `(t, j)` ← `(x·c_t + y·c_j, a'·c_j − b'·c_t)`.
    fn combine_cols(&mut self, t: usize, j: usize, x: &BigInt, y: &BigInt, a1: &BigInt, b1: &BigInt) {
        for m in [&mut self.d, &mut self.v] {
            for r in 0..m.rows() {
                let (ct, cj) = (m.get(r, t).clone(), m.get(r, j).clone());
                if ct.is_zero() && cj.is_zero() {
                    continue;
                }
                *m.get_mut(r, t) = x * &ct + y * &cj;
                *m.get_mut(r, j) = a1 * &cj - b1 * &ct;
            }
        }
    }

    /// Position of the smallest nonzero |entry| in the trailing block.
    fn min_pivot(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), BigInt)> = None;
        for i in t..self.d.rows() {
            for j in t..self.d.cols() {
                let e = self.d.get(i, j);
                if e.is_zero() {
                    continue;
                }
                let a = e.abs();
                if best.as_ref().is_none_or(|(_, b)| a < *b) {
                    let done = a.is_one();
                    best = Some(((i, j), a));
                    if done {
                        return best.map(|(p, _)| p);
                    }
                }
            }
        }
        best.map(|(p, _)| p)
    }

    /// Zeroes column `t` below the pivot.
    fn clear_column(&mut self, t: usize) {
        for i in t + 1..self.d.rows() {
            let b = self.d.get(i, t).clone();
            if b.is_zero() {
                continue;
            }
            let a = self.d.get(t, t).clone();
            if b.is_multiple_of(&a) {
                self.add_row(i, t, &-(&b / &a));
            } else {
                let e = a.extended_gcd(&b);
                let (a1, b1) = (&a / &e.gcd, &b / &e.gcd);
                self.combine_rows(t, i, &e.x, &e.y, &a1, &b1);
            }
        }
    }

    /// Zeroes row `t` right of the pivot; returns whether anything changed.
    fn clear_row(&mut self, t: usize) -> bool {
        let mut changed = false;
        for j in t + 1..self.d.cols() {
            let b = self.d.get(t, j).clone();
            if b.is_zero() {
                continue;
            }
            changed = true;
            let a = self.d.get(t, t).clone();
            if b.is_multiple_of(&a) {
                self.add_col(j, t, &-(&b / &a));
            } else {
                let e = a.extended_gcd(&b);
                let (a1, b1) = (&a / &e.gcd, &b / &e.gcd);
                self.combine_cols(t, j, &e.x, &e.y, &a1, &b1);
            }
        }
        changed
    }

    fn run(&mut self) {
        let k = self.d.rows().min(self.d.cols());
        for t in 0..k {
            loop {
                let Some((pi, pj)) = self.min_pivot(t) else { return };
                self.swap_rows(t, pi);
                self.swap_cols(t, pj);
                // Column operations can refill column t only when the pivot shrinks.
                loop {
                    self.clear_column(t);
                    if !self.clear_row(t) {
                        break;
                    }
                }
                let pivot = self.d.get(t, t).clone();
                let offender = (t + 1..self.d.rows())
                    .find(|&i| (t + 1..self.d.cols()).any(|j| !self.d.get(i, j).is_multiple_of(&pivot)));
                match offender {
                    Some(i) => self.add_row(t, i, &BigInt::one()),
                    None => break,
                }
            }
            if self.d.get(t, t).is_negative() {
                self.negate_row(t);
            }
        }
    }
}

/// Smith normal form with unimodular transforms, choosing the smallest
/// nonzero pivot at each step.
pub fn smith_normal_form(a: &IntMatrix) -> Smith {
    let mut r = Reducer {
        d: a.clone(),
        u: IntMatrix::identity(a.rows()),
        u_inv: IntMatrix::identity(a.rows()),
        v: IntMatrix::identity(a.cols()),
    };
    r.run();
    Smith { u: r.u, u_inv: r.u_inv, d: r.d, v: r.v }
}

/// Finitely generated abelian group `ℤ^free_rank ⊕ torsion`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct AbelianGroup {
    pub free_rank: usize,
    pub torsion: FiniteAbelianGroup,
}

impl AbelianGroup {
    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    /// Order when finite.
    pub fn order(&self) -> Option<BigInt> {
        self.is_finite().then(|| self.torsion.order())
    }

    pub fn into_finite(self) -> Result<FiniteAbelianGroup, LinalgError> {
        if self.free_rank == 0 {
            Ok(self.torsion)
        } else {
            Err(LinalgError::Infinite(self.free_rank))
        }
    }
}

impl std::fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.free_rank, self.torsion.is_trivial()) {
            (0, _) => write!(f, "{}", self.torsion),
            (r, true) => write!(f, "Z^{r}"),
            (r, false) => write!(f, "Z^{r} x {}", self.torsion),
        }
    }
}

/// `ℤ^rows / (column span of a)`.
pub fn cokernel(a: &IntMatrix) -> AbelianGroup {
    let s = smith_normal_form(a);
    let diag = s.diagonal();
    let rank = s.rank();
    let torsion = FiniteAbelianGroup::from_sorted_diagonal(diag[..rank].iter().cloned());
    AbelianGroup { free_rank: a.rows() - rank, torsion }
}

/// Saturated basis (as columns) of `{x : a·x = 0}`.
pub fn kernel_basis(a: &IntMatrix) -> IntMatrix {
    let s = smith_normal_form(a);
    let rank = s.rank();
    let idx: Vec<usize> = (rank..a.cols()).collect();
    hermite_basis(&s.v.select_columns(&idx))
}

/// Basis (as columns) of the column span of `a`, in Hermite normal form.
pub fn image_basis(a: &IntMatrix) -> IntMatrix {
    hermite_basis(a)
}

/// Column-style Hermite normal form of the span of the columns of `a`: the
/// returned columns are echelon with positive pivots and the entries beside
/// each pivot reduced into `[0, pivot)`.
pub fn hermite_basis(a: &IntMatrix) -> IntMatrix {
    let mut rows: Vec<Vec<BigInt>> = a.columns();
    let n = a.rows();
    let mut r = 0;
    for c in 0..n {
        if r == rows.len() {
            break;
        }
        for i in r + 1..rows.len() {
            let b = rows[i][c].clone();
            if b.is_zero() {
                continue;
            }
            let p = rows[r][c].clone();
            if p.is_zero() {
                rows.swap(r, i);
                continue;
            }
            if b.is_multiple_of(&p) {
                let q = &b / &p;
                for k in c..n {
                    let v = &q * &rows[r][k];
                    rows[i][k] -= v;
                }
            } else {
                let e = p.extended_gcd(&b);
                let (p1, b1) = (&p / &e.gcd, &b / &e.gcd);
                for k in c..n {
                    let (x, y) = (rows[r][k].clone(), rows[i][k].clone());
                    rows[r][k] = &e.x * &x + &e.y * &y;
                    rows[i][k] = &p1 * &y - &b1 * &x;
                }
            }
        }
        if rows[r][c].is_zero() {
            continue;
        }
        if rows[r][c].is_negative() {
            for v in rows[r].iter_mut() {
                *v = -v.clone();
            }
        }
        let p = rows[r][c].clone();
        for s in 0..r {
            let q = rows[s][c].div_floor(&p);
            if q.is_zero() {
                continue;
            }
            for k in c..n {
                let v = &q * &rows[r][k];
                rows[s][k] -= v;
            }
        }
        r += 1;
    }
    rows.truncate(r);
    IntMatrix::from_columns(n, &rows)
}

pub fn rank(a: &IntMatrix) -> usize {
    smith_normal_form(a).rank()
}

/// Solves `basis · X = vectors` over ℤ, where `basis` has independent columns.
pub fn express_in_basis(basis: &IntMatrix, vectors: &IntMatrix) -> Result<IntMatrix, LinalgError> {
    if basis.rows() != vectors.rows() {
        return Err(LinalgError::Shape(format!("basis has {} rows but vectors have {}", basis.rows(), vectors.rows())));
    }
    let s = smith_normal_form(basis);
    let k = basis.cols();
    if s.rank() != k {
        return Err(LinalgError::NotABasis);
    }
    let diag = s.diagonal();
    let uy = &s.u * vectors;
    let mut y = IntMatrix::zeros(k, vectors.cols());
    for c in 0..vectors.cols() {
        for i in 0..basis.rows() {
            let e = uy.get(i, c);
            if i < k {
                let (q, r) = e.div_rem(&diag[i]);
                if !r.is_zero() {
                    return Err(LinalgError::Containment);
                }
                y.set(i, c, q);
            } else if !e.is_zero() {
                return Err(LinalgError::Containment);
            }
        }
    }
    Ok(&s.v * &y)
}

/// Structure of `span(amb) / span(sub)`; fails when `sub ⊄ span(amb)`.
pub fn quotient_index(sub: &IntMatrix, amb: &IntMatrix) -> Result<AbelianGroup, LinalgError> {
    let basis = image_basis(amb);
    let coords = express_in_basis(&basis, sub)?;
    Ok(cokernel(&coords))
}

/// Basis of the lattice `{x ∈ ℤ^cols : a·x ∈ span(s)}`.
pub fn preimage_lattice(a: &IntMatrix, s: &IntMatrix) -> IntMatrix {
    let n = a.cols();
    let stacked = a.hstack(&-s);
    let k = kernel_basis(&stacked);
    let top = k.select_rows(&(0..n).collect::<Vec<_>>());
    image_basis(&top)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn check(a: &IntMatrix) -> Smith {
        let s = smith_normal_form(a);
        assert_eq!(&(&s.u * a) * &s.v, s.d);
        assert!((&s.u * &s.u_inv).is_identity());
        assert_eq!(s.u.determinant().abs(), BigInt::one());
        assert_eq!(s.v.determinant().abs(), BigInt::one());
        s
    }

    #[test]
    fn smith_examples() {
        let s = check(&IntMatrix::from_rows(&[[2, 0], [0, 3]]));
        assert_eq!(s.d, IntMatrix::from_rows(&[[1, 0], [0, 6]]));
        let s = check(&IntMatrix::from_rows(&[[0]]));
        assert_eq!(s.d, IntMatrix::from_rows(&[[0]]));
        let s = check(&IntMatrix::from_rows(&[[2, 4], [6, 8]]));
        assert_eq!(s.d, IntMatrix::from_rows(&[[2, 0], [0, 4]]));
    }

    #[test]
    fn smith_degenerate_shapes() {
        let s = check(&IntMatrix::zeros(0, 3));
        assert_eq!((s.u.rows(), s.v.rows()), (0, 3));
        let s = check(&IntMatrix::zeros(2, 0));
        assert_eq!(s.diagonal().len(), 0);
        let s = check(&IntMatrix::from_rows(&[[4, 6, 10]]));
        assert_eq!(s.diagonal(), big(&[2]));
    }

    #[test]
    fn cokernel_examples() {
        let c = cokernel(&IntMatrix::from_rows(&[[1, 0], [0, 6]]));
        assert_eq!((c.free_rank, c.torsion.invariant_factors().to_vec()), (0, big(&[6])));
        let c = cokernel(&IntMatrix::identity(3));
        assert!(c.is_finite() && c.torsion.is_trivial());
        let c = cokernel(&IntMatrix::from_rows(&[[2, 0], [0, 3]]));
        assert_eq!(c.torsion.invariant_factors(), big(&[6]).as_slice());
        let c = cokernel(&IntMatrix::zeros(2, 0));
        assert_eq!(c.free_rank, 2);
    }

    #[test]
    fn cokernel_of_two_by_two_matches_residue_enumeration() {
        // ℤ²/span{(2,0),(0,3)}: count residues mod 6 hit by the span.
        let mut hit = std::collections::HashSet::new();
        for a in 0..6i64 {
            for b in 0..6i64 {
                hit.insert(((2 * a).rem_euclid(6), (3 * b).rem_euclid(6)));
            }
        }
        assert_eq!(36 / hit.len(), 6);
    }

    #[test]
    fn kernel_examples() {
        let k = kernel_basis(&IntMatrix::from_rows(&[[1, 1]]));
        assert_eq!(k.cols(), 1);
        let v = k.column(0);
        assert!(v == big(&[1, -1]) || v == big(&[-1, 1]));
        assert_eq!(kernel_basis(&IntMatrix::identity(2)).cols(), 0);
        let k = kernel_basis(&IntMatrix::from_rows(&[[2, 4]]));
        let v = k.column(0);
        assert!(v == big(&[2, -1]) || v == big(&[-2, 1]));
    }

    #[test]
    fn quotient_index_examples() {
        let q = quotient_index(&IntMatrix::scalar(2, 2), &IntMatrix::identity(2)).unwrap();
        assert_eq!(q.torsion.invariant_factors(), big(&[2, 2]).as_slice());
        let a = IntMatrix::from_rows(&[[3, 1], [1, 5]]);
        let q = quotient_index(&a, &a).unwrap();
        assert!(q.is_finite() && q.torsion.is_trivial());
        let sub = IntMatrix::from_rows(&[[1, 1], [1, -1]]);
        let q = quotient_index(&sub, &IntMatrix::identity(2)).unwrap();
        assert_eq!(q.torsion.invariant_factors(), big(&[2]).as_slice());
        assert!(matches!(quotient_index(&IntMatrix::identity(2), &sub), Err(LinalgError::Containment)));
    }

    #[test]
    fn quotient_index_with_free_part() {
        let sub = IntMatrix::from_rows(&[[2], [0]]);
        let q = quotient_index(&sub, &IntMatrix::identity(2)).unwrap();
        assert_eq!(q.free_rank, 1);
        assert_eq!(q.torsion.invariant_factors(), big(&[2]).as_slice());
    }

    #[test]
    fn hermite_basis_spans_the_same_lattice() {
        let a = IntMatrix::from_rows(&[[4, 6, 10, 0], [2, 3, 5, 7], [1, 0, 3, 14]]);
        let h = hermite_basis(&a);
        assert_eq!(h.cols(), 3);
        assert!(quotient_index(&a, &h).unwrap().torsion.is_trivial());
        assert!(quotient_index(&h, &a).unwrap().torsion.is_trivial());
        // echelon with reduced entries beside each pivot
        let mut last = None;
        for j in 0..h.cols() {
            let c = (0..h.rows()).find(|&i| !h.get(i, j).is_zero()).unwrap();
            assert!(last.is_none_or(|l| c > l));
            assert!(h.get(c, j).is_positive());
            for k in 0..j {
                assert!(!h.get(c, k).is_negative() && h.get(c, k) < h.get(c, j));
            }
            last = Some(c);
        }
        assert_eq!(hermite_basis(&IntMatrix::zeros(3, 2)).cols(), 0);
    }

    #[test]
    fn preimage_lattice_fixed_points() {
        // {x ∈ ℤ² : (T − I)x ∈ 9ℤ ⊕ 3ℤ} for T = diag(−1, 1) on ℤ/9 ⊕ ℤ/3.
        let t_minus_i = IntMatrix::from_rows(&[[-2, 0], [0, 0]]);
        let rel = IntMatrix::from_rows(&[[9, 0], [0, 3]]);
        let l = preimage_lattice(&t_minus_i, &rel);
        let q = quotient_index(&rel, &l).unwrap();
        assert_eq!(q.order(), Some(BigInt::from(3)));
    }
}
