//! Concrete groups with exact, canonical element representations.
//!
//! A [`GroupContext`] names the ambient group; [`GroupElement`] values are
//! only meaningful relative to a context. Two elements are equal as group
//! elements exactly when their representations are equal, so elements can be
//! hashed and ordered directly.

mod ball;
mod mat2;
mod subgroup;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use ball::{ball, Ball};
pub use mat2::Mat2;
pub(crate) use subgroup::closure;
pub use subgroup::{Membership, SubgroupOracle};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// The ambient group in which walks and progressions live.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupContext {
    /// `Z / mZ` under addition.
    Cyclic { modulus: u64 },
    /// `Z^d` under addition.
    Lattice { dim: usize },
    /// Permutations of `{1, ..., degree}`.
    Symmetric { degree: usize },
    /// 3x3 upper-unitriangular integer matrices.
    Heisenberg,
    /// Invertible `dim x dim` integer matrices (determinant +-1).
    IntegerMatrix { dim: usize },
    /// 2x2 rational matrices of determinant 1.
    RationalMatrix2,
}

/// An element in canonical form.
///
/// * `Residue(r)` with `0 <= r < m`;
/// * `Vector` of integer coordinates;
/// * `Perm` as a 0-based image array (`p[i]` is the image of `i`);
/// * `Heisenberg([a, b, c])` for the matrix `[[1, a, c], [0, 1, b], [0, 0, 1]]`;
/// * `IntMatrix` row-major entries;
/// * `RatMatrix` in lowest terms.
///
/// Integer arithmetic is checked: an overflow panics rather than producing a
/// wrong element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Residue(u64),
    Vector(Vec<i64>),
    Perm(Vec<u32>),
    Heisenberg([i64; 3]),
    IntMatrix(Vec<i64>),
    RatMatrix(Mat2),
}

fn add(a: i64, b: i64) -> i64 {
    a.checked_add(b).expect("integer overflow in group arithmetic")
}

fn mul(a: i64, b: i64) -> i64 {
    a.checked_mul(b).expect("integer overflow in group arithmetic")
}

fn neg(a: i64) -> i64 {
    a.checked_neg().expect("integer overflow in group arithmetic")
}

impl GroupContext {
    pub fn cyclic(modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::domain("cyclic modulus must be positive"));
        }
        Ok(GroupContext::Cyclic { modulus })
    }

    pub fn lattice(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("lattice dimension must be positive"));
        }
        Ok(GroupContext::Lattice { dim })
    }

    pub fn symmetric(degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::domain("symmetric group degree must be positive"));
        }
        Ok(GroupContext::Symmetric { degree })
    }

    pub fn integer_matrix(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("matrix dimension must be positive"));
        }
        Ok(GroupContext::IntegerMatrix { dim })
    }

    /// Short human-readable name, e.g. `cyclic(12)`.
    pub fn name(&self) -> String {
        match self {
            GroupContext::Cyclic { modulus } => format!("cyclic({modulus})"),
            GroupContext::Lattice { dim } => format!("lattice({dim})"),
            GroupContext::Symmetric { degree } => format!("symmetric({degree})"),
            GroupContext::Heisenberg => "heisenberg".into(),
            GroupContext::IntegerMatrix { dim } => format!("integer-matrix({dim})"),
            GroupContext::RationalMatrix2 => "rational-matrix-2".into(),
        }
    }

    /// Whether the whole ambient group is commutative.
    pub fn is_abelian(&self) -> bool {
        match self {
            GroupContext::Cyclic { .. } | GroupContext::Lattice { .. } => true,
            GroupContext::Symmetric { degree } => *degree <= 2,
            GroupContext::IntegerMatrix { dim } => *dim == 1,
            GroupContext::Heisenberg | GroupContext::RationalMatrix2 => false,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupContext::Cyclic { .. } => GroupElement::Residue(0),
            GroupContext::Lattice { dim } => GroupElement::Vector(vec![0; *dim]),
            GroupContext::Symmetric { degree } => GroupElement::Perm((0..*degree as u32).collect()),
            GroupContext::Heisenberg => GroupElement::Heisenberg([0; 3]),
            GroupContext::IntegerMatrix { dim } => {
                let mut m = vec![0; dim * dim];
                for i in 0..*dim {
                    m[i * dim + i] = 1;
                }
                GroupElement::IntMatrix(m)
            }
            GroupContext::RationalMatrix2 => GroupElement::RatMatrix(Mat2::identity()),
        }
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        *g == self.identity()
    }

    /// Checks that `g` is a canonical element of this group.
    pub fn validate(&self, g: &GroupElement) -> Result<()> {
        match (self, g) {
            (GroupContext::Cyclic { modulus }, GroupElement::Residue(r)) => {
                if r < modulus {
                    Ok(())
                } else {
                    Err(Error::domain(format!("residue {r} not reduced mod {modulus}")))
                }
            }
            (GroupContext::Lattice { dim }, GroupElement::Vector(v)) => {
                if v.len() == *dim {
                    Ok(())
                } else {
                    Err(Error::domain(format!("vector of length {} in lattice({dim})", v.len())))
                }
            }
            (GroupContext::Symmetric { degree }, GroupElement::Perm(p)) => {
                if p.len() != *degree {
                    return Err(Error::domain(format!("permutation of length {} in symmetric({degree})", p.len())));
                }
                let mut seen = vec![false; *degree];
                for &x in p {
                    let x = x as usize;
                    if x >= *degree || seen[x] {
                        return Err(Error::domain("image array is not a bijection"));
                    }
                    seen[x] = true;
                }
                Ok(())
            }
            (GroupContext::Heisenberg, GroupElement::Heisenberg(_)) => Ok(()),
            (GroupContext::IntegerMatrix { dim }, GroupElement::IntMatrix(m)) => {
                if m.len() != dim * dim {
                    return Err(Error::domain(format!("matrix with {} entries in integer-matrix({dim})", m.len())));
                }
                let det = int_det(m, *dim);
                if det == 1 || det == -1 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("integer matrix has determinant {det}, not invertible over Z")))
                }
            }
            (GroupContext::RationalMatrix2, GroupElement::RatMatrix(m)) => {
                if m.is_canonical() && m.det() == Rational::from_integer(1.into()) {
                    Ok(())
                } else {
                    Err(Error::domain("rational 2x2 matrix must have determinant 1"))
                }
            }
            _ => Err(Error::domain(format!("element {g:?} does not belong to {}", self.name()))),
        }
    }

    /// Exact product `a * b`.
    ///
    /// Panics if either element has the wrong kind for this context.
    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        use GroupElement as E;
        match (self, a, b) {
            (GroupContext::Cyclic { modulus }, E::Residue(x), E::Residue(y)) => {
                E::Residue(((*x as u128 + *y as u128) % *modulus as u128) as u64)
            }
            (GroupContext::Lattice { .. }, E::Vector(x), E::Vector(y)) => {
                E::Vector(x.iter().zip(y).map(|(p, q)| add(*p, *q)).collect())
            }
            // (a * b)(i) = a(b(i)): apply b first.
            (GroupContext::Symmetric { .. }, E::Perm(x), E::Perm(y)) => {
                E::Perm(y.iter().map(|&i| x[i as usize]).collect())
            }
            (GroupContext::Heisenberg, E::Heisenberg(x), E::Heisenberg(y)) => {
                E::Heisenberg([add(x[0], y[0]), add(x[1], y[1]), add(add(x[2], y[2]), mul(x[0], y[1]))])
            }
            (GroupContext::IntegerMatrix { dim }, E::IntMatrix(x), E::IntMatrix(y)) => {
                let n = *dim;
                let mut out = vec![0i64; n * n];
                for i in 0..n {
                    for k in 0..n {
                        let xik = x[i * n + k];
                        if xik == 0 {
                            continue;
                        }
                        for j in 0..n {
                            out[i * n + j] = add(out[i * n + j], mul(xik, y[k * n + j]));
                        }
                    }
                }
                E::IntMatrix(out)
            }
            (GroupContext::RationalMatrix2, E::RatMatrix(x), E::RatMatrix(y)) => E::RatMatrix(x.mul(y)),
            _ => panic!("mul: elements {a:?}, {b:?} do not belong to {}", self.name()),
        }
    }

    /// Exact inverse.
    pub fn inv(&self, a: &GroupElement) -> GroupElement {
        use GroupElement as E;
        match (self, a) {
            (GroupContext::Cyclic { modulus }, E::Residue(x)) => E::Residue(if *x == 0 { 0 } else { modulus - x }),
            (GroupContext::Lattice { .. }, E::Vector(x)) => E::Vector(x.iter().map(|&v| neg(v)).collect()),
            (GroupContext::Symmetric { .. }, E::Perm(x)) => {
                let mut out = vec![0u32; x.len()];
                for (i, &img) in x.iter().enumerate() {
                    out[img as usize] = i as u32;
                }
                E::Perm(out)
            }
            (GroupContext::Heisenberg, E::Heisenberg([a, b, c])) => {
                E::Heisenberg([neg(*a), neg(*b), add(neg(*c), mul(*a, *b))])
            }
            (GroupContext::IntegerMatrix { dim }, E::IntMatrix(m)) => E::IntMatrix(int_inverse(m, *dim)),
            (GroupContext::RationalMatrix2, E::RatMatrix(m)) => E::RatMatrix(m.inverse()),
            _ => panic!("inv: element {a:?} does not belong to {}", self.name()),
        }
    }

    /// `a^k` for any integer `k`, by repeated squaring.
    pub fn pow(&self, a: &GroupElement, k: i64) -> GroupElement {
        let base = if k < 0 { self.inv(a) } else { a.clone() };
        let mut e = k.unsigned_abs();
        let mut result = self.identity();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(&result, &sq);
            }
            e >>= 1;
            if e > 0 {
                sq = self.mul(&sq, &sq);
            }
        }
        result
    }

    /// Commutator `[a, b] = a^-1 b^-1 a b`.
    pub fn commutator(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let ab = self.mul(a, b);
        let ba = self.mul(b, a);
        self.mul(&self.inv(&ba), &ab)
    }

    pub fn commutes(&self, a: &GroupElement, b: &GroupElement) -> bool {
        self.mul(a, b) == self.mul(b, a)
    }

    /// Left-to-right product of a sequence.
    pub fn product<'a>(&self, elems: impl IntoIterator<Item = &'a GroupElement>) -> GroupElement {
        elems.into_iter().fold(self.identity(), |acc, g| self.mul(&acc, g))
    }

    /// The order of `g` if it is at most `cap`, found by iterated exact
    /// multiplication; `None` means "exceeds cap".
    pub fn element_order(&self, g: &GroupElement, cap: u64) -> Option<u64> {
        let id = self.identity();
        let mut x = g.clone();
        for k in 1..=cap {
            if x == id {
                return Some(k);
            }
            if k < cap {
                x = self.mul(&x, g);
            }
        }
        None
    }

    /// Product set `A * B`, deduplicated, with a cap on the result size.
    pub fn product_set<'a>(
        &self,
        a: impl IntoIterator<Item = &'a GroupElement>,
        b: &[GroupElement],
        cap: usize,
    ) -> Result<crate::ElementSet> {
        let mut out = crate::ElementSet::default();
        for x in a {
            for y in b {
                out.insert(self.mul(x, y));
                if out.len() > cap {
                    return Err(Error::resource("product set", cap, out.len()));
                }
            }
        }
        Ok(out)
    }
}

/// Determinant of a small integer matrix by fraction-free elimination.
fn int_det(m: &[i64], n: usize) -> i128 {
    let mut a: Vec<i128> = m.iter().map(|&x| x as i128).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k * n + k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| a[r * n + k] != 0) else {
                return 0;
            };
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
            }
        }
        prev = a[k * n + k];
    }
    sign * a[n * n - 1]
}

/// Inverse of a unimodular integer matrix via the adjugate.
fn int_inverse(m: &[i64], n: usize) -> Vec<i64> {
    let det = int_det(m, n);
    assert!(det == 1 || det == -1, "integer matrix is not unimodular");
    if n == 1 {
        return vec![m[0] * det as i64];
    }
    let mut out = vec![0i64; n * n];
    let mut minor = vec![0i64; (n - 1) * (n - 1)];
    for i in 0..n {
        for j in 0..n {
            let mut idx = 0;
            for r in 0..n {
                if r == i {
                    continue;
                }
                for c in 0..n {
                    if c == j {
                        continue;
                    }
                    minor[idx] = m[r * n + c];
                    idx += 1;
                }
            }
            let cof = int_det(&minor, n - 1) * if (i + j) % 2 == 0 { 1 } else { -1 };
            // inverse[j][i] = cofactor(i, j) / det
            out[j * n + i] = i64::try_from(cof * det).expect("integer overflow in matrix inverse");
        }
    }
    out
}

impl fmt::Display for GroupElement {
    /// The text encoding shared by all file formats: residues as plain
    /// integers, vectors as `[x,...]`, permutations as 1-based image arrays,
    /// matrices as nested row lists (Heisenberg elements as their 3x3 matrix).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: impl Iterator<Item = T>) -> fmt::Result {
            f.write_str("[")?;
            for (i, x) in xs.enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str("]")
        }
        match self {
            GroupElement::Residue(r) => write!(f, "{r}"),
            GroupElement::Vector(v) => list(f, v.iter()),
            GroupElement::Perm(p) => list(f, p.iter().map(|x| x + 1)),
            GroupElement::Heisenberg([a, b, c]) => {
                write!(f, "[[1,{a},{c}],[0,1,{b}],[0,0,1]]")
            }
            GroupElement::IntMatrix(m) => {
                let n = num_integer::Roots::sqrt(&m.len());
                f.write_str("[")?;
                for r in 0..n {
                    if r > 0 {
                        f.write_str(",")?;
                    }
                    list(f, m[r * n..(r + 1) * n].iter())?;
                }
                f.write_str("]")
            }
            GroupElement::RatMatrix(m) => {
                let e = m.entries();
                write!(f, "[[{},{}],[{},{}]]", e[0], e[1], e[2], e[3])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use alloc::string::ToString;

    fn perm(one_based: &[u32]) -> GroupElement {
        GroupElement::Perm(one_based.iter().map(|x| x - 1).collect())
    }

    #[test]
    fn identity_is_neutral() {
        let ctx = GroupContext::Heisenberg;
        let g = GroupElement::Heisenberg([2, -3, 5]);
        assert_eq!(ctx.mul(&ctx.identity(), &g), g);
        assert_eq!(ctx.mul(&g, &ctx.identity()), g);
    }

    #[test]
    fn heisenberg_product_matches_matrix_product() {
        let ctx = GroupContext::Heisenberg;
        let (a, b, c) = (2, -1, 4);
        let (a2, b2, c2) = (-3, 5, 7);
        let p = ctx.mul(&GroupElement::Heisenberg([a, b, c]), &GroupElement::Heisenberg([a2, b2, c2]));
        assert_eq!(p, GroupElement::Heisenberg([a + a2, b + b2, c + c2 + a * b2]));
        let m = GroupContext::integer_matrix(3).unwrap();
        let to_mat = |a: i64, b: i64, c: i64| GroupElement::IntMatrix(vec![1, a, c, 0, 1, b, 0, 0, 1]);
        let mp = m.mul(&to_mat(a, b, c), &to_mat(a2, b2, c2));
        let GroupElement::Heisenberg([x, y, z]) = p else { unreachable!() };
        assert_eq!(mp, to_mat(x, y, z));
    }

    #[test]
    fn s3_transposition_product_is_three_cycle() {
        let ctx = GroupContext::symmetric(3).unwrap();
        let t12 = perm(&[2, 1, 3]);
        let t23 = perm(&[1, 3, 2]);
        let p = ctx.mul(&t12, &t23);
        // Brute force over all 6 permutations: p is the unique element of order 3
        // sending 1 -> 2 under "apply t23 then t12".
        let all: Vec<GroupElement> =
            [[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]].iter().map(|p| perm(p)).collect();
        let three_cycles: Vec<&GroupElement> = all.iter().filter(|g| ctx.element_order(g, 6) == Some(3)).collect();
        assert_eq!(three_cycles.len(), 2);
        assert!(three_cycles.contains(&&p));
        let q = ctx.inv(&p);
        assert_ne!(p, q);
        assert!(three_cycles.contains(&&q));
        assert_eq!(p.to_string(), "[2,3,1]");
    }

    #[test]
    fn element_order_examples() {
        let c12 = GroupContext::cyclic(12).unwrap();
        assert_eq!(c12.element_order(&GroupElement::Residue(0), 5), Some(1));
        assert_eq!(c12.element_order(&GroupElement::Residue(4), 100), Some(3));
        assert_eq!(c12.element_order(&GroupElement::Residue(4), 2), None);
        let h = GroupContext::Heisenberg;
        assert_eq!(h.element_order(&GroupElement::Heisenberg([1, 0, 0]), 100), None);
    }

    #[test]
    fn integer_matrix_validation() {
        let m = GroupContext::integer_matrix(2).unwrap();
        assert!(m.validate(&GroupElement::IntMatrix(vec![2, 1, 1, 1])).is_ok());
        assert!(matches!(m.validate(&GroupElement::IntMatrix(vec![2, 0, 0, 1])), Err(Error::Domain(_))));
        let g = GroupElement::IntMatrix(vec![2, 1, 1, 1]);
        assert_eq!(m.mul(&g, &m.inv(&g)), m.identity());
    }

    #[test]
    fn integer_matrix_inverse_3x3() {
        let m = GroupContext::integer_matrix(3).unwrap();
        let g = GroupElement::IntMatrix(vec![1, 2, 3, 0, 1, 4, 5, 6, 0]);
        assert!(m.validate(&g).is_ok());
        assert_eq!(m.mul(&m.inv(&g), &g), m.identity());
    }

    #[test]
    fn rational_matrix_requires_det_one() {
        let ctx = GroupContext::RationalMatrix2;
        let good = GroupElement::RatMatrix(Mat2::new([rat(1, 2), rat(3, 1), rat(0, 1), rat(2, 1)]));
        assert!(ctx.validate(&good).is_ok());
        let bad = GroupElement::RatMatrix(Mat2::new([rat(1, 1), rat(1, 1), rat(1, 1), rat(1, 1)]));
        assert!(ctx.validate(&bad).is_err());
    }

    #[test]
    fn display_encodings() {
        assert_eq!(GroupElement::Residue(7).to_string(), "7");
        assert_eq!(GroupElement::Vector(vec![1, -2]).to_string(), "[1,-2]");
        assert_eq!(GroupElement::Heisenberg([1, 2, 3]).to_string(), "[[1,1,3],[0,1,2],[0,0,1]]");
        assert_eq!(GroupElement::IntMatrix(vec![0, -1, 1, 0]).to_string(), "[[0,-1],[1,0]]");
        let m = GroupElement::RatMatrix(Mat2::new([rat(1, 2), rat(0, 1), rat(0, 1), rat(2, 1)]));
        assert_eq!(m.to_string(), "[[1/2,0],[0,2]]");
    }

    #[test]
    fn pow_and_commutator() {
        let h = GroupContext::Heisenberg;
        let u = GroupElement::Heisenberg([1, 0, 0]);
        let v = GroupElement::Heisenberg([0, 1, 0]);
        assert_eq!(h.commutator(&u, &v), GroupElement::Heisenberg([0, 0, 1]));
        assert_eq!(h.pow(&u, -3), GroupElement::Heisenberg([-3, 0, 0]));
        assert_eq!(h.pow(&u, 0), h.identity());
    }
}
