//! Finite matrix groups, mostly in signed-permutation form `D(t)σ`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use itertools::Itertools;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{rank_of_span, Matrix, Rational, Scalar};

/// Hard cap on enumerated group orders.
pub const GROUP_ORDER_CAP: usize = 1_000_000;

/// The matrix `D(t)σ`: column `j` of `σ` is `e_{perm[j]}`, and row `i` is
/// then multiplied by `signs[i]`.
///
/// Ordering is lexicographic in `(signs, perm)`, which fixes the iteration
/// order of every group.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedPermutation {
    signs: Vec<i8>,
    perm: Vec<usize>,
}

impl fmt::Debug for SignedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{:?}σ{:?}", self.signs, self.perm)
    }
}

impl SignedPermutation {
    pub fn new(perm: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let n = perm.len();
        if signs.len() != n {
            return Err(Error::Dimension(format!("{n} images but {} signs", signs.len())));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter("signs must be ±1".into()));
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter(format!("{perm:?} is not a bijection")));
            }
        }
        Ok(SignedPermutation { signs, perm })
    }

    pub fn identity(n: usize) -> Self {
        SignedPermutation { signs: vec![1; n], perm: (0..n).collect() }
    }

    /// The cyclic shift `j ↦ j+1 mod n` raised to the power `k`.
    pub fn cycle_power(n: usize, k: usize) -> Self {
        SignedPermutation { signs: vec![1; n], perm: (0..n).map(|j| (j + k) % n).collect() }
    }

    pub fn sign_flip(signs: Vec<i8>) -> Result<Self> {
        let n = signs.len();
        Self::new((0..n).collect(), signs)
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n(), other.n());
        let n = self.n();
        let perm: Vec<usize> = other.perm.iter().map(|&k| self.perm[k]).collect();
        let mut signs = vec![1i8; n];
        for k in 0..n {
            let r = self.perm[k];
            signs[r] = self.signs[r] * other.signs[k];
        }
        SignedPermutation { signs, perm }
    }

    pub fn inverse(&self) -> Self {
        let n = self.n();
        let mut perm = vec![0; n];
        let mut signs = vec![1i8; n];
        for j in 0..n {
            let r = self.perm[j];
            perm[r] = j;
            signs[j] = self.signs[r];
        }
        SignedPermutation { signs, perm }
    }

    /// Kronecker product `self ⊗ other` on `n·m` coordinates.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.n(), other.n());
        let mut perm = vec![0; n * m];
        let mut signs = vec![1i8; n * m];
        for j in 0..n {
            for l in 0..m {
                perm[j * m + l] = self.perm[j] * m + other.perm[l];
            }
        }
        for i in 0..n {
            for k in 0..m {
                signs[i * m + k] = self.signs[i] * other.signs[k];
            }
        }
        SignedPermutation { signs, perm }
    }

    pub fn to_matrix<T: Scalar>(&self) -> Matrix<T> {
        let n = self.n();
        let mut m = Matrix::zeros(n, n);
        for (j, &r) in self.perm.iter().enumerate() {
            let v = if self.signs[r] > 0 { T::one() } else { -T::one() };
            m.set(r, j, v);
        }
        m
    }
}

/// Element storage: signed permutations when possible, dense exact
/// matrices otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupElements {
    Signed(Vec<SignedPermutation>),
    Dense(Vec<Matrix<Rational>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGroup {
    n: usize,
    elements: GroupElements,
    generators: Option<Vec<SignedPermutation>>,
}

/// Named group constructions accepted by [`make_group`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupKind {
    Monomial {
        n: usize,
    },
    CyclicMonomial {
        n: usize,
    },
    /// `{D(t)σ}` for `σ` in the permutation group generated by `perms`
    /// (zero-based images).
    TransitiveWithSigns {
        n: usize,
        perms: Vec<Vec<usize>>,
    },
    Tensor {
        left: Box<GroupKind>,
        right: Box<GroupKind>,
    },
    Closure {
        n: usize,
        generators: Vec<GeneratorSpec>,
    },
    /// Sign flips only (reducible for `n ≥ 2`).
    SignFlips {
        n: usize,
    },
}

/// One generator in the group-spec file format; `perm` is one-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub perm: Vec<usize>,
    pub signs: Vec<i8>,
}

/// Group-spec file: `{"n": int, "generators": [{"perm": [..], "signs": [..]}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpecFile {
    pub n: usize,
    pub generators: Vec<GeneratorSpec>,
}

impl GeneratorSpec {
    pub fn to_signed(&self, n: usize) -> Result<SignedPermutation> {
        if self.perm.len() != n {
            return Err(Error::Dimension(format!("generator on {} points in a group of degree {n}", self.perm.len())));
        }
        if self.perm.contains(&0) {
            return Err(Error::InvalidParameter("generator images are one-based".into()));
        }
        SignedPermutation::new(self.perm.iter().map(|p| p - 1).collect(), self.signs.clone())
    }
}

impl GroupSpecFile {
    pub fn build(&self) -> Result<MatrixGroup> {
        let gens = self.generators.iter().map(|g| g.to_signed(self.n)).collect::<Result<Vec<_>>>()?;
        MatrixGroup::closure(self.n, gens)
    }
}

pub fn make_group(kind: &GroupKind) -> Result<MatrixGroup> {
    match kind {
        GroupKind::Monomial { n } => MatrixGroup::monomial(*n),
        GroupKind::CyclicMonomial { n } => MatrixGroup::cyclic_monomial(*n),
        GroupKind::TransitiveWithSigns { n, perms } => MatrixGroup::transitive_with_signs(*n, perms.clone()),
        GroupKind::Tensor { left, right } => MatrixGroup::tensor(&make_group(left)?, &make_group(right)?),
        GroupKind::Closure { n, generators } => GroupSpecFile { n: *n, generators: generators.clone() }.build(),
        GroupKind::SignFlips { n } => MatrixGroup::sign_flips(*n),
    }
}

fn check_degree(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("group degree must be at least 1".into()));
    }
    Ok(())
}

fn sign_vectors(n: usize) -> impl Iterator<Item = Vec<i8>> {
    (0..n).map(|_| [-1i8, 1]).multi_cartesian_product()
}

fn checked_order(base: usize, count: usize) -> Result<usize> {
    base.checked_mul(count).filter(|&o| o <= GROUP_ORDER_CAP).ok_or(Error::OrderCap { cap: GROUP_ORDER_CAP })
}

fn power_of_two(n: usize) -> Result<usize> {
    u32::try_from(n)
        .ok()
        .and_then(|e| 1usize.checked_shl(e))
        .filter(|&v| v <= GROUP_ORDER_CAP)
        .ok_or(Error::OrderCap { cap: GROUP_ORDER_CAP })
}

impl MatrixGroup {
    fn from_signed(n: usize, set: BTreeSet<SignedPermutation>, generators: Option<Vec<SignedPermutation>>) -> Self {
        MatrixGroup { n, elements: GroupElements::Signed(set.into_iter().collect()), generators }
    }

    /// `{D(t)σ : t ∈ {±1}^n, σ ∈ H}` for an explicit permutation list `H`.
    fn with_all_signs(n: usize, perms: &[Vec<usize>]) -> Result<Self> {
        checked_order(power_of_two(n)?, perms.len())?;
        let mut set = BTreeSet::new();
        for signs in sign_vectors(n) {
            for p in perms {
                set.insert(SignedPermutation { signs: signs.clone(), perm: p.clone() });
            }
        }
        Ok(Self::from_signed(n, set, None))
    }

    /// The monomial group of degree `n`, order `2^n·n!`.
    pub fn monomial(n: usize) -> Result<Self> {
        check_degree(n)?;
        let fact = (1..=n).try_fold(1usize, |acc, k| acc.checked_mul(k));
        checked_order(power_of_two(n)?, fact.ok_or(Error::OrderCap { cap: GROUP_ORDER_CAP })?)?;
        let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
        Self::with_all_signs(n, &perms)
    }

    /// `{D(t)σ^k}` with `σ` the full cycle, order `2^n·n`.
    pub fn cyclic_monomial(n: usize) -> Result<Self> {
        check_degree(n)?;
        let perms: Vec<Vec<usize>> = (0..n).map(|k| SignedPermutation::cycle_power(n, k).perm).collect();
        Self::with_all_signs(n, &perms)
    }

    /// All sign flips `D(t)`, no permutations.
    pub fn sign_flips(n: usize) -> Result<Self> {
        check_degree(n)?;
        Self::with_all_signs(n, &[(0..n).collect()])
    }

    /// All sign patterns over the permutation group generated by `perms`,
    /// which must act transitively.
    pub fn transitive_with_signs(n: usize, perms: Vec<Vec<usize>>) -> Result<Self> {
        check_degree(n)?;
        let gens = perms.into_iter().map(|p| SignedPermutation::new(p, vec![1; n])).collect::<Result<Vec<_>>>()?;
        let mut reached = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        reached[0] = true;
        while let Some(i) = queue.pop_front() {
            for g in &gens {
                let j = g.perm[i];
                if !reached[j] {
                    reached[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if reached.iter().any(|r| !r) {
            return Err(Error::NotTransitive { n });
        }
        let h = Self::closure(n, gens)?;
        let perms: Vec<Vec<usize>> = match &h.elements {
            GroupElements::Signed(els) => els.iter().map(|g| g.perm.clone()).collect(),
            GroupElements::Dense(_) => unreachable!("closure of signed generators is signed"),
        };
        Self::with_all_signs(n, &perms)
    }

    /// Smallest group containing the signed-permutation generators.
    pub fn closure(n: usize, generators: Vec<SignedPermutation>) -> Result<Self> {
        check_degree(n)?;
        if let Some(g) = generators.iter().find(|g| g.n() != n) {
            return Err(Error::Dimension(format!("generator of degree {} in degree {n}", g.n())));
        }
        let id = SignedPermutation::identity(n);
        let mut set = BTreeSet::from([id.clone()]);
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for g in &generators {
                let y = x.compose(g);
                if set.insert(y.clone()) {
                    if set.len() > GROUP_ORDER_CAP {
                        return Err(Error::OrderCap { cap: GROUP_ORDER_CAP });
                    }
                    queue.push_back(y);
                }
            }
        }
        Ok(Self::from_signed(n, set, Some(generators)))
    }

    /// Closure of arbitrary invertible exact generators.
    pub fn closure_dense(n: usize, generators: Vec<Matrix<Rational>>) -> Result<Self> {
        check_degree(n)?;
        for g in &generators {
            if g.rows() != n || g.cols() != n {
                return Err(Error::Dimension(format!("{}x{} generator in degree {n}", g.rows(), g.cols())));
            }
            if g.inverse().is_none() {
                return Err(Error::SingularGenerator);
            }
        }
        let id = Matrix::<Rational>::identity(n);
        let mut seen = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for g in &generators {
                let y = &x * g;
                if !seen.contains(&y) {
                    if seen.len() >= GROUP_ORDER_CAP {
                        return Err(Error::OrderCap { cap: GROUP_ORDER_CAP });
                    }
                    seen.push(y.clone());
                    queue.push_back(y);
                }
            }
        }
        seen.sort_by(|a, b| a.entries().cmp(b.entries()));
        Ok(MatrixGroup { n, elements: GroupElements::Dense(seen), generators: None })
    }

    /// `{g ⊗ h}` acting on `n·m` coordinates.
    pub fn tensor(g: &Self, h: &Self) -> Result<Self> {
        checked_order(g.order(), h.order())?;
        let n = g.n * h.n;
        match (&g.elements, &h.elements) {
            (GroupElements::Signed(a), GroupElements::Signed(b)) => {
                let set: BTreeSet<_> = a.iter().cartesian_product(b).map(|(x, y)| x.kron(y)).collect();
                Ok(Self::from_signed(n, set, None))
            }
            _ => {
                let mut els: Vec<Matrix<Rational>> = Vec::new();
                for x in g.dense_elements() {
                    for y in h.dense_elements() {
                        let k = x.kron(&y);
                        if !els.contains(&k) {
                            els.push(k);
                        }
                    }
                }
                els.sort_by(|a, b| a.entries().cmp(b.entries()));
                Ok(MatrixGroup { n, elements: GroupElements::Dense(els), generators: None })
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        match &self.elements {
            GroupElements::Signed(e) => e.len(),
            GroupElements::Dense(e) => e.len(),
        }
    }

    pub fn elements(&self) -> &GroupElements {
        &self.elements
    }

    pub fn generators(&self) -> Option<&[SignedPermutation]> {
        self.generators.as_deref()
    }

    pub fn signed_elements(&self) -> Option<&[SignedPermutation]> {
        match &self.elements {
            GroupElements::Signed(e) => Some(e),
            GroupElements::Dense(_) => None,
        }
    }

    pub fn contains(&self, g: &SignedPermutation) -> bool {
        match &self.elements {
            GroupElements::Signed(e) => e.binary_search(g).is_ok(),
            GroupElements::Dense(e) => e.contains(&g.to_matrix()),
        }
    }

    pub fn dense_elements(&self) -> Vec<Matrix<Rational>> {
        self.dense_elements_as()
    }

    pub fn dense_elements_as<T: Scalar>(&self) -> Vec<Matrix<T>> {
        match &self.elements {
            GroupElements::Signed(e) => e.iter().map(SignedPermutation::to_matrix).collect(),
            GroupElements::Dense(e) => e.iter().map(|m| m.map(|v| T::from_rational(v))).collect(),
        }
    }

    /// `(g, g⁻¹)` for every element, in group order.
    pub fn dense_pairs<T: Scalar>(&self) -> Vec<(Matrix<T>, Matrix<T>)> {
        match &self.elements {
            GroupElements::Signed(e) => e.iter().map(|g| (g.to_matrix(), g.inverse().to_matrix())).collect(),
            GroupElements::Dense(e) => e
                .iter()
                .map(|g| {
                    let inv = g.inverse().expect("group elements are invertible");
                    (g.map(|v| T::from_rational(v)), inv.map(|v| T::from_rational(v)))
                })
                .collect(),
        }
    }

    /// Exact rank of the span of the group elements inside `M_n`.
    pub fn span_rank(&self) -> Result<usize> {
        rank_of_span(&self.dense_elements())
    }

    pub fn is_irreducible(&self) -> Result<bool> {
        Ok(self.span_rank()? == self.n * self.n)
    }

    /// Errors with [`Error::Reducible`] unless the span is all of `M_n`.
    pub fn require_irreducible(&self) -> Result<()> {
        let rank = self.span_rank()?;
        let full = self.n * self.n;
        if rank != full {
            return Err(Error::Reducible { n: self.n, rank, full });
        }
        Ok(())
    }
}

/// Conversion used when lifting exact group data into another scalar type.
pub trait FromRational {
    fn from_rational(v: &Rational) -> Self;
}

impl<T: Scalar> FromRational for T {
    fn from_rational(v: &Rational) -> Self {
        if v.is_zero() {
            return T::zero();
        }
        if v.is_one() {
            return T::one();
        }
        let num: i64 = i64::try_from(v.numer()).expect("group entries fit in i64");
        let den: i64 = i64::try_from(v.denom()).expect("group entries fit in i64");
        T::from_ratio(num, den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn factorial(n: usize) -> usize {
        (1..=n).product()
    }

    #[test]
    fn composition_matches_dense_products() {
        for n in 1..=4 {
            let g = MatrixGroup::monomial(n).unwrap();
            let els = g.signed_elements().unwrap();
            for (i, a) in els.iter().enumerate().step_by(5) {
                for b in els.iter().skip(i % 3).step_by(7) {
                    let lhs: Matrix<Rational> = a.compose(b).to_matrix();
                    let rhs = &a.to_matrix::<Rational>() * &b.to_matrix();
                    assert_eq!(lhs, rhs);
                }
                assert_eq!(a.inverse().compose(a), SignedPermutation::identity(n));
            }
        }
    }

    #[test]
    fn kron_matches_dense_kron() {
        let a = SignedPermutation::new(vec![1, 0], vec![-1, 1]).unwrap();
        let b = SignedPermutation::new(vec![2, 0, 1], vec![1, -1, -1]).unwrap();
        let lhs: Matrix<Rational> = a.kron(&b).to_matrix();
        assert_eq!(lhs, a.to_matrix::<Rational>().kron(&b.to_matrix()));
    }

    #[test]
    fn named_orders() {
        for n in 1..=5 {
            assert_eq!(MatrixGroup::monomial(n).unwrap().order(), (1 << n) * factorial(n));
            assert_eq!(MatrixGroup::cyclic_monomial(n).unwrap().order(), (1 << n) * n);
        }
        assert_eq!(MatrixGroup::monomial(5).unwrap().order(), 3840);
        let c1 = MatrixGroup::cyclic_monomial(1).unwrap();
        assert_eq!(c1.order(), 2);
        let signs: Vec<i8> = c1.signed_elements().unwrap().iter().map(|g| g.signs()[0]).collect();
        assert_eq!(signs, vec![-1, 1]);
    }

    #[test]
    fn tensor_group_is_signed_and_divides_product_order() {
        let g = MatrixGroup::cyclic_monomial(2).unwrap();
        let h = MatrixGroup::cyclic_monomial(3).unwrap();
        let t = MatrixGroup::tensor(&g, &h).unwrap();
        assert_eq!(t.n(), 6);
        assert!(t.signed_elements().is_some());
        assert_eq!((g.order() * h.order()) % t.order(), 0);
        // g⊗h = (−g)⊗(−h) is the only collapse.
        assert_eq!(t.order(), g.order() * h.order() / 2);
    }

    #[test]
    fn irreducibility_examples() {
        let trivial = MatrixGroup::closure(2, vec![]).unwrap();
        assert_eq!(trivial.order(), 1);
        assert!(!trivial.is_irreducible().unwrap());
        assert_eq!(trivial.span_rank().unwrap(), 1);

        let m3 = MatrixGroup::monomial(3).unwrap();
        assert_eq!(m3.order(), 48);
        assert_eq!(m3.span_rank().unwrap(), 9);

        let flips = MatrixGroup::sign_flips(2).unwrap();
        assert_eq!(flips.span_rank().unwrap(), 2);
        assert!(!flips.is_irreducible().unwrap());
        assert!(matches!(flips.require_irreducible(), Err(Error::Reducible { rank: 2, .. })));
    }

    #[test]
    fn tensor_preserves_irreducibility() {
        for n in 2..=3 {
            for m in 2..=3 {
                let g = MatrixGroup::cyclic_monomial(n).unwrap();
                let h = MatrixGroup::monomial(m).unwrap();
                assert!(g.is_irreducible().unwrap() && h.is_irreducible().unwrap());
                assert!(MatrixGroup::tensor(&g, &h).unwrap().is_irreducible().unwrap());
            }
        }
    }

    #[test]
    fn transitive_with_signs_checks_transitivity() {
        let err = MatrixGroup::transitive_with_signs(3, vec![vec![1, 0, 2]]);
        assert_eq!(err.unwrap_err(), Error::NotTransitive { n: 3 });
        let g = MatrixGroup::transitive_with_signs(3, vec![vec![1, 2, 0]]).unwrap();
        assert_eq!(g, MatrixGroup::cyclic_monomial(3).unwrap());
        let s4 = MatrixGroup::transitive_with_signs(4, vec![vec![1, 2, 3, 0], vec![1, 0, 2, 3]]).unwrap();
        assert_eq!(s4.order(), MatrixGroup::monomial(4).unwrap().order());
    }

    #[test]
    fn order_cap_and_singular_generators() {
        assert_eq!(MatrixGroup::monomial(10).unwrap_err(), Error::OrderCap { cap: GROUP_ORDER_CAP });
        assert_eq!(MatrixGroup::cyclic_monomial(16).unwrap_err(), Error::OrderCap { cap: GROUP_ORDER_CAP });
        let singular = Matrix::<Rational>::unit(2, 0, 0);
        assert_eq!(MatrixGroup::closure_dense(2, vec![singular]).unwrap_err(), Error::SingularGenerator);
    }

    #[test]
    fn dense_closure_of_rotation() {
        // Rotation by 90 degrees together with a reflection: dihedral of order 8.
        let r =
            Matrix::from_rows(vec![vec![Rational::zero(), -Rational::one()], vec![Rational::one(), Rational::zero()]])
                .unwrap();
        let f = Matrix::diagonal(&[Rational::one(), -Rational::one()]);
        let g = MatrixGroup::closure_dense(2, vec![r, f]).unwrap();
        assert_eq!(g.order(), 8);
        assert!(g.is_irreducible().unwrap());
    }

    #[test]
    fn group_spec_file_is_one_based() {
        let spec: GroupSpecFile = serde_json_like();
        let g = spec.build().unwrap();
        assert_eq!(g.elements(), MatrixGroup::cyclic_monomial(3).unwrap().elements());
    }

    fn serde_json_like() -> GroupSpecFile {
        GroupSpecFile {
            n: 3,
            generators: vec![
                GeneratorSpec { perm: vec![2, 3, 1], signs: vec![1, 1, 1] },
                GeneratorSpec { perm: vec![1, 2, 3], signs: vec![-1, 1, 1] },
            ],
        }
    }

    proptest! {
        #[test]
        fn groups_are_closed(kind in 0usize..3, n in 1usize..=4, i in any::<usize>(), j in any::<usize>()) {
            let g = match kind {
                0 => MatrixGroup::monomial(n).unwrap(),
                1 => MatrixGroup::cyclic_monomial(n).unwrap(),
                _ => MatrixGroup::tensor(
                    &MatrixGroup::cyclic_monomial(2).unwrap(),
                    &MatrixGroup::cyclic_monomial(n).unwrap(),
                ).unwrap(),
            };
            let els = g.signed_elements().unwrap();
            let a = &els[i % els.len()];
            let b = &els[j % els.len()];
            prop_assert!(g.contains(&a.compose(b)));
            prop_assert!(g.contains(&a.inverse()));
            prop_assert!(g.contains(&SignedPermutation::identity(g.n())));
        }
    }
}
