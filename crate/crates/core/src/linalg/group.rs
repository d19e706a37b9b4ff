use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{smith_normal_form, IntMatrix, LinalgError};

/// Finite abelian group in invariant-factor form `ℤ/d₁ ⊕ … ⊕ ℤ/d_k`,
/// `2 ≤ d₁ | d₂ | … | d_k`. The empty list is the trivial group.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FiniteAbelianGroup {
    invariant_factors: Vec<BigInt>,
}

impl FiniteAbelianGroup {
    pub fn trivial() -> Self {
        Self::default()
    }

    /// Validates an invariant-factor list.
    pub fn new(invariant_factors: Vec<BigInt>) -> Result<Self, LinalgError> {
        let two = BigInt::from(2);
        for (i, d) in invariant_factors.iter().enumerate() {
            if *d < two {
                return Err(LinalgError::InvalidGroup(format!("invariant factor {d} is below 2")));
            }
            if i > 0 && !d.is_multiple_of(&invariant_factors[i - 1]) {
                return Err(LinalgError::InvalidGroup(format!("{} does not divide {d}", invariant_factors[i - 1])));
            }
        }
        Ok(Self { invariant_factors })
    }

    /// `⊕ ℤ/m_i` for arbitrary cyclic orders, normalized to invariant factors.
    pub fn from_cyclic_orders<I: IntoIterator<Item = BigInt>>(orders: I) -> Self {
        let d = IntMatrix::diagonal(orders.into_iter().map(|m| m.abs()));
        let s = smith_normal_form(&d);
        Self::from_sorted_diagonal(s.diagonal().into_iter().filter(|x| !x.is_zero()))
    }

    /// Takes an already divisibility-sorted diagonal and drops the units.
    pub(crate) fn from_sorted_diagonal<I: IntoIterator<Item = BigInt>>(diag: I) -> Self {
        Self { invariant_factors: diag.into_iter().filter(|d| !d.is_one()).collect() }
    }

    pub fn invariant_factors(&self) -> &[BigInt] {
        &self.invariant_factors
    }

    pub fn order(&self) -> BigInt {
        self.invariant_factors.iter().product()
    }

    pub fn exponent(&self) -> BigInt {
        self.invariant_factors.last().cloned().unwrap_or_else(BigInt::one)
    }

    pub fn is_trivial(&self) -> bool {
        self.invariant_factors.is_empty()
    }
}

impl fmt::Display for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        for (i, d) in self.invariant_factors.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "Z/{d}")?;
        }
        Ok(())
    }
}

impl Serialize for FiniteAbelianGroup {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = self.invariant_factors.iter().map(ToString::to_string).collect();
        v.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FiniteAbelianGroup {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(deserializer)?;
        let parsed = v
            .iter()
            .map(|s| s.parse::<BigInt>().map_err(|_| D::Error::custom(format!("invalid integer {s:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(parsed).map_err(D::Error::custom)
    }
}
