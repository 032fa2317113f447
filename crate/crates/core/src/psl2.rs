//! Exact arithmetic in PSL(2,p) for odd primes p.
//!
//! An element is stored as a 2x2 matrix over GF(p) with determinant 1. Of the
//! two lifts `M` and `-M` we keep the one whose first nonzero row-major entry
//! lies in `[1, (p-1)/2]`, so equal group elements have equal representations.
//!
//! [`Psl2Group`] is the dense, index-based view of the group for a fixed prime:
//! elements are numbered in lexicographic order of their canonical entries
//! (the [`ElementIndex`]), and small groups get a full multiplication table.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// Dense index of an element of PSL(2,p), in lexicographic order of entries.
pub type ElementIndex = u32;

/// Groups up to this order get a precomputed `|G|^2` multiplication table.
pub const MUL_TABLE_LIMIT: usize = 2500;

/// Dense entry-to-index lookup is used up to this prime; a hash map beyond.
const DENSE_LOOKUP_LIMIT: u32 = 31;

pub fn is_prime(v: u64) -> bool {
    if v < 2 {
        return false;
    }
    if v.is_multiple_of(2) {
        return v == 2;
    }
    let mut d = 3;
    while d * d <= v {
        if v.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// An odd prime, the characteristic of the field PSL(2,p) lives over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u32);

impl Prime {
    pub fn new(value: u32) -> Result<Prime> {
        if value < 3 || !is_prime(value as u64) {
            return Err(Error::InvalidPrime(value as u64));
        }
        Ok(Prime(value))
    }

    /// Like [`Prime::new`] but also enforces `p >= 5`, the range in which
    /// PSL(2,p) is simple and the enumeration pipelines operate.
    pub fn new_enumerable(value: u32) -> Result<Prime> {
        let p = Prime::new(value)?;
        if value < 5 {
            return Err(Error::InvalidPrime(value as u64));
        }
        Ok(p)
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// `|PSL(2,p)| = p(p^2-1)/2`.
    pub fn psl_order(self) -> usize {
        let p = self.0 as usize;
        p * (p * p - 1) / 2
    }

    /// `|PGL(2,p)| = p(p^2-1)`.
    pub fn pgl_order(self) -> usize {
        2 * self.psl_order()
    }

    pub fn smallest_nonresidue(self) -> u32 {
        let p = self.0;
        (2..p)
            .find(|&x| pow_mod(x, (p - 1) / 2, p) == p - 1)
            .expect("every odd prime has a quadratic nonresidue")
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Primes `>= start` in increasing order.
pub fn primes_from(start: u32) -> impl Iterator<Item = u32> {
    (start..).filter(|&v| is_prime(v as u64))
}

#[inline]
fn reduce(x: i64, p: u32) -> u32 {
    x.rem_euclid(p as i64) as u32
}

pub(crate) fn pow_mod(base: u32, mut exp: u32, p: u32) -> u32 {
    let m = p as u64;
    let mut b = base as u64 % m;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u32
}

#[inline]
pub(crate) fn inv_mod(x: u32, p: u32) -> u32 {
    debug_assert!(!x.is_multiple_of(p));
    pow_mod(x, p - 2, p)
}

#[inline]
fn canonical_sign(p: u32, mut m: [u32; 4]) -> [u32; 4] {
    let half = (p - 1) / 2;
    if let Some(&first) = m.iter().find(|&&e| e != 0) {
        if first > half {
            for e in m.iter_mut() {
                if *e != 0 {
                    *e = p - *e;
                }
            }
        }
    }
    m
}

#[inline]
fn raw_mul(p: u32, x: &[u32; 4], y: &[u32; 4]) -> [u32; 4] {
    let q = p as u64;
    let (a, b, c, d) = (x[0] as u64, x[1] as u64, x[2] as u64, x[3] as u64);
    let (e, f, g, h) = (y[0] as u64, y[1] as u64, y[2] as u64, y[3] as u64);
    [
        ((a * e + b * g) % q) as u32,
        ((a * f + b * h) % q) as u32,
        ((c * e + d * g) % q) as u32,
        ((c * f + d * h) % q) as u32,
    ]
}

/// An element of PSL(2,p) in sign-canonical form.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ProjectiveMatrix {
    p: u32,
    m: [u32; 4],
}

impl ProjectiveMatrix {
    /// Builds the canonical representative of `(a b; c d)` reduced mod `p`.
    pub fn new(p: Prime, a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let q = p.get();
        let m = [reduce(a, q), reduce(b, q), reduce(c, q), reduce(d, q)];
        let det = (m[0] as u64 * m[3] as u64 + (q as u64 - m[1] as u64) * m[2] as u64) % q as u64;
        if det != 1 {
            return Err(Error::NonUnitDeterminant { p: q, det: det as u32 });
        }
        Ok(ProjectiveMatrix { p: q, m: canonical_sign(q, m) })
    }

    pub fn identity(p: Prime) -> Self {
        ProjectiveMatrix { p: p.get(), m: [1, 0, 0, 1] }
    }

    #[inline]
    pub fn prime(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn entries(&self) -> [u32; 4] {
        self.m
    }

    pub fn is_identity(&self) -> bool {
        self.m == [1, 0, 0, 1]
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch(self.p, other.p));
        }
        Ok(self.mul_unchecked(other))
    }

    #[inline]
    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        ProjectiveMatrix { p: self.p, m: canonical_sign(self.p, raw_mul(self.p, &self.m, &other.m)) }
    }

    /// Inverse via the adjugate.
    pub fn inv(&self) -> Self {
        let p = self.p;
        let neg = |x: u32| if x == 0 { 0 } else { p - x };
        ProjectiveMatrix { p, m: canonical_sign(p, [self.m[3], neg(self.m[1]), neg(self.m[2]), self.m[0]]) }
    }

    pub fn pow(&self, mut k: u64) -> Self {
        let mut acc = ProjectiveMatrix { p: self.p, m: [1, 0, 0, 1] };
        let mut base = *self;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            base = base.mul_unchecked(&base);
            k >>= 1;
        }
        acc
    }

    /// Least `k >= 1` with `self^k = 1`.
    pub fn order(&self) -> u64 {
        let mut k = 1;
        let mut acc = *self;
        while !acc.is_identity() {
            acc = acc.mul_unchecked(self);
            k += 1;
        }
        k
    }

    /// `g x g^-1` for an arbitrary invertible `g` (given by raw entries mod p).
    /// With `det g` a nonresidue this realizes the outer automorphism class of
    /// PGL(2,p) on PSL(2,p).
    pub fn conjugate_by(&self, g: [u32; 4]) -> Result<Self> {
        let p = self.p;
        let q = p as u64;
        let det = ((g[0] as u64 * g[3] as u64) + (q - g[1] as u64) * g[2] as u64) % q;
        if det == 0 {
            return Err(Error::NonUnitDeterminant { p, det: 0 });
        }
        let neg = |x: u32| if x == 0 { 0 } else { p - x };
        let adj = [g[3], neg(g[1]), neg(g[2]), g[0]];
        let prod = raw_mul(p, &raw_mul(p, &g, &self.m), &adj);
        let s = inv_mod(det as u32, p) as u64;
        let scaled = prod.map(|e| ((e as u64 * s) % q) as u32);
        Ok(ProjectiveMatrix { p, m: canonical_sign(p, scaled) })
    }

    /// Bitmask of the points of the projective line fixed by this element:
    /// bit `x` for `[x:1]`, bit `p` for `[1:0]`. `None` when `p + 1 > 128`.
    pub fn fixed_point_mask(&self) -> Option<u128> {
        let p = self.p;
        if p + 1 > 128 {
            return None;
        }
        let q = p as u64;
        let [a, b, c, d] = self.m.map(|e| e as u64);
        let mut mask = 0u128;
        for x in 0..q {
            // (a x + b) - x (c x + d) == 0
            let lhs = (a * x + b) % q;
            let rhs = x * ((c * x + d) % q) % q;
            if lhs == rhs {
                mask |= 1 << x;
            }
        }
        if c == 0 {
            mask |= 1 << p;
        }
        Some(mask)
    }
}

impl fmt::Display for ProjectiveMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.m[0], self.m[1], self.m[2], self.m[3])
    }
}

/// All elements of PSL(2,p), each exactly once, in lexicographic order of
/// canonical entries. The position in this list is the [`ElementIndex`].
pub fn enumerate(p: Prime) -> Vec<ProjectiveMatrix> {
    let q = p.get();
    let half = (q - 1) / 2;
    let mut out = Vec::with_capacity(p.psl_order());
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                for d in 0..q {
                    let m = [a, b, c, d];
                    let first = *m.iter().find(|&&e| e != 0).unwrap_or(&0);
                    if first == 0 || first > half {
                        continue;
                    }
                    let det = (a as u64 * d as u64 + (q as u64 - b as u64) * c as u64) % q as u64;
                    if det == 1 {
                        out.push(ProjectiveMatrix { p: q, m });
                    }
                }
            }
        }
    }
    debug_assert_eq!(out.len(), p.psl_order());
    out
}

/// Whether `gens` generate all of PSL(2,p), by explicit closure.
pub fn generates(p: Prime, gens: &[ProjectiveMatrix]) -> Result<bool> {
    for g in gens {
        if g.p != p.get() {
            return Err(Error::PrimeMismatch(p.get(), g.p));
        }
    }
    if gens.is_empty() {
        return Ok(false);
    }
    let order = p.psl_order();
    let identity = ProjectiveMatrix::identity(p);
    let mut seen: HashSet<ProjectiveMatrix> = HashSet::from([identity]);
    let mut frontier = vec![identity];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = x.mul_unchecked(g);
            if seen.insert(y) {
                // A subgroup of more than half the group is the whole group.
                if 2 * seen.len() > order {
                    return Ok(true);
                }
                frontier.push(y);
            }
        }
    }
    Ok(seen.len() == order)
}

/// Outcome of extending a subgroup closure.
#[derive(Clone, Debug)]
pub enum Closure {
    Full,
    Proper(Subgroup),
}

/// A proper subgroup as a membership bitset plus its element list.
#[derive(Clone, Debug)]
pub struct Subgroup {
    bits: Vec<u64>,
    elements: Vec<ElementIndex>,
}

impl Subgroup {
    #[inline]
    pub fn contains(&self, x: ElementIndex) -> bool {
        self.bits[(x >> 6) as usize] >> (x & 63) & 1 == 1
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[ElementIndex] {
        &self.elements
    }
}

/// PSL(2,p) for a fixed prime as a dense, index-addressed table.
pub struct Psl2Group {
    prime: Prime,
    elements: Vec<ProjectiveMatrix>,
    dense_lookup: Option<Vec<ElementIndex>>,
    sparse_lookup: HashMap<[u32; 4], ElementIndex>,
    identity: ElementIndex,
    inverses: Vec<ElementIndex>,
    mul_table: Option<Vec<ElementIndex>>,
    fixed_masks: Option<Vec<u128>>,
}

impl fmt::Debug for Psl2Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Psl2Group").field("p", &self.prime.get()).field("order", &self.order()).finish()
    }
}

impl Psl2Group {
    pub fn new(prime: Prime) -> Self {
        let q = prime.get();
        let elements = enumerate(prime);
        let n = elements.len();
        let (dense_lookup, sparse_lookup) = if q <= DENSE_LOOKUP_LIMIT {
            let q = q as usize;
            let mut dense = vec![u32::MAX; q * q * q * q];
            for (i, e) in elements.iter().enumerate() {
                let [a, b, c, d] = e.m.map(|x| x as usize);
                dense[((a * q + b) * q + c) * q + d] = i as u32;
            }
            (Some(dense), HashMap::new())
        } else {
            let sparse = elements.iter().enumerate().map(|(i, e)| (e.m, i as u32)).collect();
            (None, sparse)
        };
        let mut group = Psl2Group {
            prime,
            elements,
            dense_lookup,
            sparse_lookup,
            identity: 0,
            inverses: Vec::new(),
            mul_table: None,
            fixed_masks: None,
        };
        group.identity = group.index_of(&ProjectiveMatrix::identity(prime));
        group.inverses = (0..n).map(|i| group.index_of(&group.elements[i].inv())).collect();
        if n <= MUL_TABLE_LIMIT {
            let mut table = vec![0u32; n * n];
            for i in 0..n {
                for j in 0..n {
                    table[i * n + j] = group.index_of(&group.elements[i].mul_unchecked(&group.elements[j]));
                }
            }
            group.mul_table = Some(table);
        }
        group.fixed_masks = group.elements.iter().map(|e| e.fixed_point_mask()).collect();
        group
    }

    #[inline]
    pub fn prime(&self) -> Prime {
        self.prime
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    #[inline]
    pub fn identity(&self) -> ElementIndex {
        self.identity
    }

    #[inline]
    pub fn element(&self, i: ElementIndex) -> &ProjectiveMatrix {
        &self.elements[i as usize]
    }

    pub fn elements(&self) -> &[ProjectiveMatrix] {
        &self.elements
    }

    /// Index of an element of this group. Panics if `m` lives over another prime.
    pub fn index_of(&self, m: &ProjectiveMatrix) -> ElementIndex {
        assert_eq!(m.p, self.prime.get(), "element over the wrong prime");
        match &self.dense_lookup {
            Some(dense) => {
                let q = self.prime.get() as usize;
                let [a, b, c, d] = m.m.map(|x| x as usize);
                dense[((a * q + b) * q + c) * q + d]
            }
            None => self.sparse_lookup[&m.m],
        }
    }

    pub fn try_index_of(&self, m: &ProjectiveMatrix) -> Result<ElementIndex> {
        if m.p != self.prime.get() {
            return Err(Error::PrimeMismatch(self.prime.get(), m.p));
        }
        Ok(self.index_of(m))
    }

    #[inline]
    pub fn mul(&self, x: ElementIndex, y: ElementIndex) -> ElementIndex {
        match &self.mul_table {
            Some(t) => t[x as usize * self.elements.len() + y as usize],
            None => self.index_of(&self.elements[x as usize].mul_unchecked(&self.elements[y as usize])),
        }
    }

    #[inline]
    pub fn inverse(&self, x: ElementIndex) -> ElementIndex {
        self.inverses[x as usize]
    }

    pub fn has_mul_table(&self) -> bool {
        self.mul_table.is_some()
    }

    pub fn element_order(&self, x: ElementIndex) -> u64 {
        let mut k = 1;
        let mut acc = x;
        while acc != self.identity {
            acc = self.mul(acc, x);
            k += 1;
        }
        k
    }

    /// True when all of `xs` fix a common point of the projective line, i.e.
    /// lie in a common Borel subgroup. Such a set never generates.
    pub fn share_fixed_point(&self, xs: &[ElementIndex]) -> bool {
        match &self.fixed_masks {
            Some(masks) => xs.iter().fold(u128::MAX, |acc, &x| acc & masks[x as usize]) != 0,
            None => false,
        }
    }

    /// Whether `gens` generate the whole group (closure, stopping once the
    /// subgroup exceeds half the group).
    pub fn generates(&self, gens: &[ElementIndex]) -> bool {
        matches!(self.closure(gens), Closure::Full)
    }

    /// The subgroup generated by `gens`.
    pub fn closure(&self, gens: &[ElementIndex]) -> Closure {
        let n = self.order();
        let mut sub = Subgroup { bits: vec![0; n.div_ceil(64)], elements: Vec::new() };
        let id = self.identity;
        sub.bits[(id >> 6) as usize] |= 1 << (id & 63);
        sub.elements.push(id);
        let mut cursor = 0;
        while cursor < sub.elements.len() {
            let x = sub.elements[cursor];
            cursor += 1;
            for &g in gens {
                let y = self.mul(x, g);
                if !sub.contains(y) {
                    sub.bits[(y >> 6) as usize] |= 1 << (y & 63);
                    sub.elements.push(y);
                    if 2 * sub.elements.len() > n {
                        return Closure::Full;
                    }
                }
            }
        }
        Closure::Proper(sub)
    }

    /// The subgroup generated by `base` (generated by `base_gens`) and `extra`.
    pub fn extend_closure(&self, base: &Subgroup, base_gens: &[ElementIndex], extra: ElementIndex) -> Closure {
        if base.contains(extra) {
            return Closure::Proper(base.clone());
        }
        let n = self.order();
        let mut sub = base.clone();
        let old = sub.elements.len();
        // Old elements are already closed under the old generators.
        for i in 0..old {
            let y = self.mul(sub.elements[i], extra);
            if !sub.contains(y) {
                sub.bits[(y >> 6) as usize] |= 1 << (y & 63);
                sub.elements.push(y);
            }
        }
        if 2 * sub.elements.len() > n {
            return Closure::Full;
        }
        let mut cursor = old;
        while cursor < sub.elements.len() {
            let x = sub.elements[cursor];
            cursor += 1;
            for &g in base_gens.iter().chain(std::iter::once(&extra)) {
                let y = self.mul(x, g);
                if !sub.contains(y) {
                    sub.bits[(y >> 6) as usize] |= 1 << (y & 63);
                    sub.elements.push(y);
                    if 2 * sub.elements.len() > n {
                        return Closure::Full;
                    }
                }
            }
        }
        Closure::Proper(sub)
    }
}
