use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::{express_in_basis, image_basis, smith_normal_form, FiniteAbelianGroup, IntMatrix, LinalgError};

/// An explicit finite quotient `L/S` of lattices in ℤ^n, with a canonical
/// normal form for classes. Used to materialize small cohomology groups
/// element by element.
#[derive(Clone, Debug)]
pub struct FiniteQuotient {
    basis: IntMatrix,
    u: IntMatrix,
    u_inv: IntMatrix,
    divisors: Vec<BigInt>,
    /// Positions in the SNF diagonal carrying a nontrivial cyclic factor.
    active: Vec<usize>,
}

impl FiniteQuotient {
    /// `span(lattice) / span(sub)`; errors if `sub` is not contained in
    /// `lattice` or the quotient is infinite.
    pub fn new(lattice: &IntMatrix, sub: &IntMatrix) -> Result<Self, LinalgError> {
        let basis = image_basis(lattice);
        let coords = express_in_basis(&basis, sub)?;
        let s = smith_normal_form(&coords);
        let k = basis.cols();
        if s.rank() < k {
            return Err(LinalgError::Infinite(k - s.rank()));
        }
        let divisors = s.diagonal();
        let active = (0..k).filter(|&i| !divisors[i].is_one()).collect();
        Ok(Self { basis, u: s.u, u_inv: s.u_inv, divisors, active })
    }

    pub fn structure(&self) -> FiniteAbelianGroup {
        FiniteAbelianGroup::from_sorted_diagonal(self.divisors.iter().cloned())
    }

    pub fn order(&self) -> BigInt {
        self.active.iter().map(|&i| &self.divisors[i]).product()
    }

    /// Canonical coordinates of the class of `v` (which must lie in the lattice).
    pub fn reduce(&self, v: &[BigInt]) -> Result<Vec<BigInt>, LinalgError> {
        let col = IntMatrix::from_columns(v.len(), &[v.to_vec()]);
        let c = express_in_basis(&self.basis, &col)?;
        let uc = self.u.apply(&c.column(0));
        Ok(self.active.iter().map(|&i| uc[i].mod_floor(&self.divisors[i])).collect())
    }

    /// A lattice vector in the class with the given canonical coordinates.
    pub fn representative(&self, coords: &[BigInt]) -> Vec<BigInt> {
        let k = self.basis.cols();
        let mut a = vec![BigInt::zero(); k];
        for (&i, c) in self.active.iter().zip(coords) {
            a[i] = c.clone();
        }
        self.basis.apply(&self.u_inv.apply(&a))
    }

    /// Every class, as canonical coordinates. Fails above `limit` elements.
    pub fn elements(&self, limit: usize) -> Result<Vec<Vec<BigInt>>, LinalgError> {
        let order = self.order();
        if order.to_usize().is_none_or(|n| n > limit) {
            return Err(LinalgError::TooLarge(order.to_string()));
        }
        let mods: Vec<BigInt> = self.active.iter().map(|&i| self.divisors[i].clone()).collect();
        let mut out = vec![vec![]];
        for m in &mods {
            let m = m.to_u64().expect("bounded by limit");
            let mut next = Vec::with_capacity(out.len() * m as usize);
            for prefix in &out {
                for x in 0..m {
                    let mut v = prefix.clone();
                    v.push(BigInt::from(x));
                    next.push(v);
                }
            }
            out = next;
        }
        Ok(out)
    }
}
