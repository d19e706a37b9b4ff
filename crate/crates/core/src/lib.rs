//! Exact-arithmetic machinery for isogeny parity computations: characters of
//! automorphisms of finite abelian p-groups, invariants of lattices with a
//! cyclic group action and an invariant pairing, and Brauer relations with
//! their regulator constants.

pub mod arith;
pub mod brauer;
pub mod gen;
pub mod lattice;
pub mod linalg;
pub mod numserde;
pub mod pgroup;
