//! Reduced words in free groups, homomorphisms to PSL(2,p) given by tuples,
//! and the Nielsen generators of Aut(F_n) acting on those tuples.
//!
//! Action convention: an automorphism `s` acts on the tuple of a homomorphism
//! `rho` by `rho -> rho . s^-1`. On kernels this is `N -> s(N)`, and it is a
//! left action: `apply(s, apply(t, x)) = apply(s . t, x)`.
//!
//! The Nielsen set (a cyclic shift, a transposition, an inversion and a
//! transvection) generates Aut(F_n); that classical fact is taken as given.

use std::fmt;

use crate::error::{Error, Result};
use crate::psl2::{ElementIndex, Prime, ProjectiveMatrix, Psl2Group};

/// A letter is `+i` for generator `x_i` and `-i` for its inverse (1-based).
pub type Letter = i32;

/// A freely reduced word in the free group of a given rank.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FreeWord {
    rank: usize,
    letters: Vec<Letter>,
}

fn push_reduced(out: &mut Vec<Letter>, l: Letter) {
    if out.last() == Some(&-l) {
        out.pop();
    } else {
        out.push(l);
    }
}

impl FreeWord {
    /// Validates the letters for `rank` and freely reduces them.
    pub fn new(rank: usize, letters: &[Letter]) -> Result<Self> {
        let mut out = Vec::with_capacity(letters.len());
        for &l in letters {
            if l == 0 || l.unsigned_abs() as usize > rank {
                return Err(Error::IndexOutOfRange { index: l as i64, rank });
            }
            push_reduced(&mut out, l);
        }
        Ok(FreeWord { rank, letters: out })
    }

    pub fn identity(rank: usize) -> Self {
        FreeWord { rank, letters: Vec::new() }
    }

    /// The generator `x_i`, 1-based.
    pub fn generator(rank: usize, i: usize) -> Result<Self> {
        FreeWord::new(rank, &[i as Letter])
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn mul(&self, other: &FreeWord) -> Result<FreeWord> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch { expected: self.rank, found: other.rank });
        }
        let mut out = self.letters.clone();
        for &l in &other.letters {
            push_reduced(&mut out, l);
        }
        Ok(FreeWord { rank: self.rank, letters: out })
    }

    pub fn inverse(&self) -> FreeWord {
        FreeWord { rank: self.rank, letters: self.letters.iter().rev().map(|l| -l).collect() }
    }

    pub fn pow(&self, k: i64) -> FreeWord {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut acc = FreeWord::identity(self.rank);
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(&base).expect("same rank");
        }
        acc
    }

    /// `u w u^-1`.
    pub fn conjugate_by(&self, u: &FreeWord) -> Result<FreeWord> {
        u.mul(self)?.mul(&u.inverse())
    }

    /// Strips matching first/last letters `x ... x^-1`; the result is a
    /// conjugate of `self`.
    pub fn cyclically_reduce(&self) -> FreeWord {
        let l = &self.letters;
        let (mut i, mut j) = (0, l.len());
        while j - i >= 2 && l[i] == -l[j - 1] {
            i += 1;
            j -= 1;
        }
        FreeWord { rank: self.rank, letters: l[i..j].to_vec() }
    }

    /// The image under the homomorphism sending `x_i` to `images[i-1]`.
    pub fn substitute(&self, images: &[FreeWord]) -> Result<FreeWord> {
        if images.len() != self.rank {
            return Err(Error::RankMismatch { expected: self.rank, found: images.len() });
        }
        let target = images.first().map(|w| w.rank).unwrap_or(0);
        let mut out = Vec::new();
        for &l in &self.letters {
            let img = &images[l.unsigned_abs() as usize - 1];
            if img.rank != target {
                return Err(Error::RankMismatch { expected: target, found: img.rank });
            }
            if l > 0 {
                img.letters.iter().for_each(|&m| push_reduced(&mut out, m));
            } else {
                img.letters.iter().rev().for_each(|&m| push_reduced(&mut out, -m));
            }
        }
        Ok(FreeWord { rank: target, letters: out })
    }

    /// Exponent sum of each generator (the abelianization image).
    pub fn exponent_sums(&self) -> Vec<i64> {
        let mut sums = vec![0i64; self.rank];
        for &l in &self.letters {
            sums[l.unsigned_abs() as usize - 1] += l.signum() as i64;
        }
        sums
    }

    /// Parses the text encoding `x1.x2.X1` (`X` marks an inverse, dots and
    /// whitespace are optional separators, `1` or the empty string is the
    /// identity).
    pub fn parse(rank: usize, text: &str) -> Result<FreeWord> {
        let letters = parse_letters(text, &['x'], |c, i| match c {
            'x' => Some(i as Letter),
            'X' => Some(-(i as Letter)),
            _ => None,
        })?;
        FreeWord::new(rank, &letters)
    }
}

/// Shared tokenizer for `<letter><index>` word encodings.
pub(crate) fn parse_letters(
    text: &str,
    lower: &[char],
    map: impl Fn(char, u32) -> Option<Letter>,
) -> Result<Vec<Letter>> {
    let t = text.trim();
    if t.is_empty() || t == "1" {
        return Ok(Vec::new());
    }
    let chars: Vec<char> = t.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '.' || c.is_whitespace() {
            i += 1;
            continue;
        }
        if !lower.contains(&c.to_ascii_lowercase()) {
            return Err(Error::Parse(format!("unexpected character {c:?} in word {text:?}")));
        }
        i += 1;
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        let digits: String = chars[start..i].iter().collect();
        let idx: u32 = digits.parse().map_err(|_| Error::Parse(format!("missing index after {c:?} in {text:?}")))?;
        if idx == 0 {
            return Err(Error::Parse(format!("generator index 0 in {text:?}")));
        }
        out.push(map(c, idx).ok_or_else(|| Error::Parse(format!("bad letter {c:?}")))?);
    }
    Ok(out)
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for (k, &l) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, ".")?;
            }
            if l > 0 {
                write!(f, "x{l}")?;
            } else {
                write!(f, "X{}", -l)?;
            }
        }
        Ok(())
    }
}

/// An automorphism of F_n given by generator images and a verified inverse.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FreeAutomorphism {
    rank: usize,
    images: Vec<FreeWord>,
    inverse_images: Vec<FreeWord>,
    name: String,
}

impl FreeAutomorphism {
    /// Checks that both composites of `images` and `inverse_images` freely
    /// reduce to the identity on every generator.
    pub fn new(name: impl Into<String>, images: Vec<FreeWord>, inverse_images: Vec<FreeWord>) -> Result<Self> {
        let rank = images.len();
        if inverse_images.len() != rank {
            return Err(Error::RankMismatch { expected: rank, found: inverse_images.len() });
        }
        for w in images.iter().chain(&inverse_images) {
            if w.rank != rank {
                return Err(Error::RankMismatch { expected: rank, found: w.rank });
            }
        }
        for i in 1..=rank {
            let x = FreeWord::generator(rank, i)?;
            if inverse_images[i - 1].substitute(&images)? != x || images[i - 1].substitute(&inverse_images)? != x {
                return Err(Error::InvalidAutomorphism(format!("inverse table does not invert generator x{i}")));
            }
        }
        Ok(FreeAutomorphism { rank, images, inverse_images, name: name.into() })
    }

    pub fn identity(rank: usize) -> Self {
        let gens: Vec<FreeWord> = (1..=rank).map(|i| FreeWord::generator(rank, i).unwrap()).collect();
        FreeAutomorphism { rank, images: gens.clone(), inverse_images: gens, name: "id".into() }
    }

    /// The inner automorphism `x -> u x u^-1`.
    pub fn conjugation(u: &FreeWord) -> Self {
        let rank = u.rank;
        let ui = u.inverse();
        let images = (1..=rank).map(|i| FreeWord::generator(rank, i).unwrap().conjugate_by(u).unwrap()).collect();
        let inverse_images = (1..=rank).map(|i| FreeWord::generator(rank, i).unwrap().conjugate_by(&ui).unwrap()).collect();
        FreeAutomorphism { rank, images, inverse_images, name: format!("conj[{u}]") }
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn images(&self) -> &[FreeWord] {
        &self.images
    }

    pub fn inverse_images(&self) -> &[FreeWord] {
        &self.inverse_images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, w)| w.letters == [(i + 1) as Letter])
    }

    pub fn apply(&self, w: &FreeWord) -> Result<FreeWord> {
        w.substitute(&self.images)
    }

    pub fn inverse(&self) -> FreeAutomorphism {
        FreeAutomorphism {
            rank: self.rank,
            images: self.inverse_images.clone(),
            inverse_images: self.images.clone(),
            name: format!("({})^-1", self.name),
        }
    }

    /// `self . other`: apply `other` first.
    pub fn compose(&self, other: &FreeAutomorphism) -> Result<FreeAutomorphism> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch { expected: self.rank, found: other.rank });
        }
        let images = other.images.iter().map(|w| w.substitute(&self.images)).collect::<Result<_>>()?;
        let inverse_images =
            self.inverse_images.iter().map(|w| w.substitute(&other.inverse_images)).collect::<Result<_>>()?;
        Ok(FreeAutomorphism { rank: self.rank, images, inverse_images, name: format!("{}*{}", self.name, other.name) })
    }
}

/// The standard Nielsen generators of Aut(F_n): cyclic shift, the swap
/// `x1 <-> x2`, the inversion of `x1` and the transvection `x1 -> x1 x2`.
/// For `n = 2` the shift equals the swap and is returned once.
pub fn nielsen_generators(n: usize) -> Result<Vec<FreeAutomorphism>> {
    if n < 2 {
        return Err(Error::InvalidRank(n));
    }
    let x = |i: usize| FreeWord::generator(n, i).unwrap();
    let gens: Vec<FreeWord> = (1..=n).map(x).collect();
    let with = |i: usize, w: FreeWord| {
        let mut v = gens.clone();
        v[i - 1] = w;
        v
    };

    let mut out = Vec::new();
    if n > 2 {
        let shift: Vec<FreeWord> = (1..=n).map(|i| x(i % n + 1)).collect();
        let unshift: Vec<FreeWord> = (1..=n).map(|i| x((i + n - 2) % n + 1)).collect();
        out.push(FreeAutomorphism::new("cycle", shift, unshift)?);
    }
    let mut swap = gens.clone();
    swap.swap(0, 1);
    out.push(FreeAutomorphism::new("swap", swap.clone(), swap)?);
    let inv = with(1, x(1).inverse());
    out.push(FreeAutomorphism::new("invert", inv.clone(), inv)?);
    out.push(FreeAutomorphism::new(
        "transvect",
        with(1, x(1).mul(&x(2)).unwrap()),
        with(1, x(1).mul(&x(2).inverse()).unwrap()),
    )?);
    Ok(out)
}

/// The homomorphism `F_n -> PSL(2,p)` sending `x_i` to `entries[i-1]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GroupTuple {
    prime: Prime,
    entries: Vec<ProjectiveMatrix>,
}

impl GroupTuple {
    pub fn new(prime: Prime, entries: Vec<ProjectiveMatrix>) -> Result<Self> {
        for e in &entries {
            if e.prime() != prime.get() {
                return Err(Error::PrimeMismatch(prime.get(), e.prime()));
            }
        }
        Ok(GroupTuple { prime, entries })
    }

    pub fn from_indices(group: &Psl2Group, idx: &[ElementIndex]) -> Self {
        GroupTuple { prime: group.prime(), entries: idx.iter().map(|&i| *group.element(i)).collect() }
    }

    pub fn to_indices(&self, group: &Psl2Group) -> Result<Vec<ElementIndex>> {
        self.entries.iter().map(|e| group.try_index_of(e)).collect()
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[ProjectiveMatrix] {
        &self.entries
    }

    pub fn generates(&self) -> bool {
        crate::psl2::generates(self.prime, &self.entries).expect("entries share the prime")
    }
}

/// The image of `w` under the homomorphism given by `t`.
pub fn word_evaluate(w: &FreeWord, t: &GroupTuple) -> Result<ProjectiveMatrix> {
    if w.rank != t.rank() {
        return Err(Error::RankMismatch { expected: w.rank, found: t.rank() });
    }
    let mut acc = ProjectiveMatrix::identity(t.prime);
    for &l in &w.letters {
        let g = t.entries[l.unsigned_abs() as usize - 1];
        acc = acc.mul_unchecked(&if l > 0 { g } else { g.inv() });
    }
    Ok(acc)
}

/// Index-based evaluation for hot loops; ranks are the caller's business.
#[inline]
pub fn evaluate_indices(group: &Psl2Group, w: &FreeWord, t: &[ElementIndex]) -> ElementIndex {
    let mut acc = group.identity();
    for &l in &w.letters {
        let g = t[l.unsigned_abs() as usize - 1];
        acc = group.mul(acc, if l > 0 { g } else { group.inverse(g) });
    }
    acc
}

/// The tuple of `rho . s^-1`, where `rho` is the homomorphism of `t`.
pub fn apply_automorphism(s: &FreeAutomorphism, t: &GroupTuple) -> Result<GroupTuple> {
    if s.rank != t.rank() {
        return Err(Error::RankMismatch { expected: s.rank, found: t.rank() });
    }
    let entries = s.inverse_images.iter().map(|w| word_evaluate(w, t)).collect::<Result<_>>()?;
    Ok(GroupTuple { prime: t.prime, entries })
}

/// Index-based [`apply_automorphism`].
pub fn apply_automorphism_indices(group: &Psl2Group, s: &FreeAutomorphism, t: &[ElementIndex]) -> Vec<ElementIndex> {
    s.inverse_images.iter().map(|w| evaluate_indices(group, w, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(rank: usize, l: &[Letter]) -> FreeWord {
        FreeWord::new(rank, l).unwrap()
    }

    #[test]
    fn reduction_examples() {
        assert!(w(2, &[1, 2, -2, -1]).is_empty());
        assert_eq!(w(3, &[1, 2]).mul(&w(3, &[-2, 3])).unwrap().letters(), &[1, 3]);
        assert_eq!(w(2, &[1, 2]).inverse().letters(), &[-2, -1]);
        assert_eq!(FreeWord::new(2, &[3]), Err(Error::IndexOutOfRange { index: 3, rank: 2 }));
        assert_eq!(FreeWord::new(2, &[0]), Err(Error::IndexOutOfRange { index: 0, rank: 2 }));
        assert!(w(2, &[1]).mul(&w(3, &[1])).is_err());
    }

    #[test]
    fn cyclic_reduction() {
        assert_eq!(w(3, &[2, 1, 3, -2]).cyclically_reduce().letters(), &[1, 3]);
        assert_eq!(w(3, &[1]).cyclically_reduce().letters(), &[1]);
    }

    #[test]
    fn text_encoding() {
        let x = FreeWord::parse(3, "x1.x2.X1").unwrap();
        assert_eq!(x.letters(), &[1, 2, -1]);
        assert_eq!(x.to_string(), "x1.x2.X1");
        assert_eq!(FreeWord::parse(3, "x1x2 X1").unwrap(), x);
        assert!(FreeWord::parse(3, "").unwrap().is_empty());
        assert_eq!(FreeWord::identity(3).to_string(), "1");
        assert!(FreeWord::parse(3, "x4").is_err());
        assert!(FreeWord::parse(3, "y1").is_err());
        assert!(FreeWord::parse(3, "x").is_err());
    }

    #[test]
    fn nielsen_sets() {
        let two = nielsen_generators(2).unwrap();
        assert_eq!(two.len(), 3);
        let three = nielsen_generators(3).unwrap();
        assert_eq!(three.len(), 4);
        let t = &three[3];
        let shown: Vec<String> = t.images().iter().map(|w| w.to_string()).collect();
        assert_eq!(shown, ["x1.x2", "x2", "x3"]);
        for s in two.iter().chain(&three) {
            assert!(s.compose(&s.inverse()).unwrap().is_identity());
        }
        assert_eq!(nielsen_generators(1), Err(Error::InvalidRank(1)));
    }

    #[test]
    fn transvection_action_uses_inverse() {
        let p = Prime::new(5).unwrap();
        let g = |a, b, c, d| ProjectiveMatrix::new(p, a, b, c, d).unwrap();
        let t = GroupTuple::new(p, vec![g(1, 1, 0, 1), g(1, 0, 1, 1), g(2, 0, 0, 3)]).unwrap();
        let s = &nielsen_generators(3).unwrap()[3];
        let out = apply_automorphism(s, &t).unwrap();
        let e = t.entries();
        assert_eq!(out.entries(), &[e[0].mul(&e[1].inv()).unwrap(), e[1], e[2]]);
        assert_eq!(apply_automorphism(&FreeAutomorphism::identity(3), &t).unwrap(), t);
    }

    #[test]
    fn evaluation_is_multiplicative() {
        let p = Prime::new(7).unwrap();
        let g = |a, b, c, d| ProjectiveMatrix::new(p, a, b, c, d).unwrap();
        let t = GroupTuple::new(p, vec![g(1, 1, 0, 1), g(1, 0, 1, 1)]).unwrap();
        assert!(word_evaluate(&FreeWord::identity(2), &t).unwrap().is_identity());
        assert_eq!(word_evaluate(&w(2, &[1]), &t).unwrap(), t.entries()[0]);
        let uv = word_evaluate(&w(2, &[1, 2]), &t).unwrap();
        assert_eq!(uv, t.entries()[0].mul(&t.entries()[1]).unwrap());
        assert!(word_evaluate(&w(3, &[1]), &t).is_err());
    }
}
