//! PSL(2,p)-defining subgroups that exclude a given element.
//!
//! F_n is realized as a finite-index subgroup of F_2 = <a, b>, and F_2 maps
//! injectively into PSL(2,Z) by `a -> (1 2; 0 1)`, `b -> (1 0; 2 1)`. A
//! nontrivial `alpha` then has an integer matrix other than `+-I`, which stays
//! nontrivial mod every prime outside a finite, explicit set; for each
//! candidate prime the surjectivity of the reduced generators is checked by
//! closure, never assumed.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::defsub::{enumerate_classes, out_action, DefiningContext, EnumerationConfig};
use crate::error::{Error, Result};
use crate::freegrp::{word_evaluate, FreeAutomorphism, FreeWord, GroupTuple};
use crate::psl2::{primes_from, Prime, ProjectiveMatrix};

pub const DEFAULT_PRIME_CEILING: u32 = 10_000;

/// A 2x2 integer matrix of determinant 1.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntegerMatrix {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl IntegerMatrix {
    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Self {
        IntegerMatrix { a: a.into(), b: b.into(), c: c.into(), d: d.into() }
    }

    pub fn identity() -> Self {
        Self::from_i64(1, 0, 0, 1)
    }

    pub fn mul(&self, o: &IntegerMatrix) -> IntegerMatrix {
        IntegerMatrix {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    pub fn determinant(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn is_plus_minus_identity(&self) -> bool {
        self.b.is_zero() && self.c.is_zero() && self.a == self.d && self.a.abs().is_one()
    }

    /// The image in PSL(2,p).
    pub fn reduce(&self, p: Prime) -> ProjectiveMatrix {
        let q = BigInt::from(p.get());
        let r = |x: &BigInt| -> i64 { (((x % &q) + &q) % &q).to_i64().expect("residue fits") };
        ProjectiveMatrix::new(p, r(&self.a), r(&self.b), r(&self.c), r(&self.d)).expect("determinant 1 lifts")
    }
}

impl fmt::Display for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.a, self.b, self.c, self.d)
    }
}

/// Integer matrix of a word in F_2 under the embedding into PSL(2,Z).
pub fn matrix_of_word(w: &FreeWord) -> Result<IntegerMatrix> {
    if w.rank() != 2 {
        return Err(Error::RankMismatch { expected: 2, found: w.rank() });
    }
    let gens = [
        IntegerMatrix::from_i64(1, 2, 0, 1),
        IntegerMatrix::from_i64(1, 0, 2, 1),
        IntegerMatrix::from_i64(1, -2, 0, 1),
        IntegerMatrix::from_i64(1, 0, -2, 1),
    ];
    Ok(w.letters().iter().fold(IntegerMatrix::identity(), |acc, &l| {
        let idx = (l.unsigned_abs() as usize - 1) + if l < 0 { 2 } else { 0 };
        acc.mul(&gens[idx])
    }))
}

/// F_n as the kernel of `F_2 -> Z/(n-1)`, `a -> 1`, `b -> 0`, with the
/// Schreier generators for the transversal `1, a, ..., a^(n-2)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SchreierEmbedding {
    rank: usize,
    words: Vec<FreeWord>,
}

impl SchreierEmbedding {
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Images of `x_1..x_n` in F_2.
    pub fn words(&self) -> &[FreeWord] {
        &self.words
    }

    /// The F_2 word of an element of F_n.
    pub fn rewrite(&self, w: &FreeWord) -> Result<FreeWord> {
        if w.rank() != self.rank {
            return Err(Error::RankMismatch { expected: self.rank, found: w.rank() });
        }
        w.substitute(&self.words)
    }

    pub fn generator_matrices(&self) -> Vec<IntegerMatrix> {
        self.words.iter().map(|w| matrix_of_word(w).expect("rank 2 words")).collect()
    }
}

/// Reidemeister-Schreier generators of the stabilizer of coset 0 in a finite
/// action of F_2, given by the images of each coset under `a` and `b`.
/// The spanning tree uses forward edges only, visiting `a` before `b`.
pub fn schreier_generators(action: &[[usize; 2]]) -> Vec<FreeWord> {
    let cosets = action.len();
    let mut tree: Vec<Option<FreeWord>> = vec![None; cosets];
    tree[0] = Some(FreeWord::identity(2));
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for (x, &j) in action[i].iter().enumerate() {
            if tree[j].is_none() {
                let step = FreeWord::generator(2, x + 1).unwrap();
                tree[j] = Some(tree[i].as_ref().unwrap().mul(&step).unwrap());
                queue.push_back(j);
            }
        }
    }
    let mut out = Vec::new();
    for i in 0..cosets {
        for x in 0..2 {
            let t_i = tree[i].as_ref().expect("transitive action");
            let t_j = tree[action[i][x]].as_ref().expect("transitive action");
            let s = t_i.mul(&FreeWord::generator(2, x + 1).unwrap()).unwrap().mul(&t_j.inverse()).unwrap();
            if !s.is_empty() {
                out.push(s);
            }
        }
    }
    out
}

pub fn schreier_embedding(n: usize) -> Result<SchreierEmbedding> {
    if n < 2 {
        return Err(Error::InvalidRank(n));
    }
    let a = FreeWord::generator(2, 1)?;
    let b = FreeWord::generator(2, 2)?;
    let mut words = vec![a.pow(n as i64 - 1), b.clone()];
    for i in 1..n as i64 - 1 {
        words.push(b.conjugate_by(&a.pow(i))?);
    }

    // Cross-check against Reidemeister-Schreier on the coset action of Z/(n-1).
    let index = n - 1;
    let action: Vec<[usize; 2]> = (0..index).map(|i| [(i + 1) % index, i]).collect();
    let mut expected = schreier_generators(&action);
    let mut ours = words.clone();
    expected.sort();
    ours.sort();
    if expected != ours || words.len() != index + 1 {
        return Err(Error::InvalidAutomorphism(format!("Schreier generators disagree at rank {n}")));
    }
    Ok(SchreierEmbedding { rank: n, words })
}

/// The finite set of primes modulo which a matrix might become `+-I`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ExcludedPrimes {
    /// Primes dividing a nonzero off-diagonal entry.
    OffDiagonal { entry: BigInt },
    /// Primes dividing `d - 1` or `d + 1` for a diagonal entry `|d| > 1`.
    Diagonal { entry: BigInt },
}

impl ExcludedPrimes {
    pub fn excludes(&self, p: u32) -> bool {
        let q = BigInt::from(p);
        match self {
            ExcludedPrimes::OffDiagonal { entry } => (entry % &q).is_zero(),
            ExcludedPrimes::Diagonal { entry } => {
                let one = BigInt::from(1);
                ((entry - &one) % &q).is_zero() || ((entry + &one) % &q).is_zero()
            }
        }
    }

    /// The excluded primes up to `bound`.
    pub fn primes_up_to(&self, bound: u32) -> Vec<u32> {
        primes_from(2).take_while(|&p| p <= bound).filter(|&p| self.excludes(p)).collect()
    }
}

/// Picks the entry `d` and describes the primes it excludes. An off-diagonal
/// entry is preferred (upper right first).
pub fn excluded_primes(m: &IntegerMatrix) -> Result<ExcludedPrimes> {
    if m.is_plus_minus_identity() {
        return Err(Error::MatrixIsIdentity);
    }
    if !m.b.is_zero() {
        return Ok(ExcludedPrimes::OffDiagonal { entry: m.b.clone() });
    }
    if !m.c.is_zero() {
        return Ok(ExcludedPrimes::OffDiagonal { entry: m.c.clone() });
    }
    let d = if m.a.abs() > BigInt::one() { m.a.clone() } else { m.d.clone() };
    Ok(ExcludedPrimes::Diagonal { entry: d })
}

/// Direct test: is the mod-p image of `m` trivial in PSL(2,p)?
pub fn is_trivial_mod(m: &IntegerMatrix, p: Prime) -> bool {
    m.reduce(p).is_identity()
}

/// A PSL(2,p)-defining subgroup of F_n (the kernel of `tuple`) not
/// containing `alpha`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RfCertificate {
    pub rank: usize,
    pub alpha: FreeWord,
    pub prime: Prime,
    pub tuple: GroupTuple,
    pub alpha_image: ProjectiveMatrix,
    pub surjective: bool,
}

impl RfCertificate {
    /// Rechecks surjectivity by closure and the image of `alpha`.
    pub fn replay(&self) -> bool {
        self.tuple.rank() == self.rank
            && self.tuple.generates()
            && word_evaluate(&self.alpha, &self.tuple).map(|m| m == self.alpha_image && !m.is_identity()).unwrap_or(false)
    }
}

/// Smallest prime `p >= 5` (up to `ceiling`) whose reduction of the embedded
/// F_n is onto PSL(2,p) and keeps `alpha` nontrivial.
pub fn rf_witness(n: usize, alpha: &FreeWord, ceiling: u32) -> Result<RfCertificate> {
    if alpha.rank() != n {
        return Err(Error::RankMismatch { expected: n, found: alpha.rank() });
    }
    if alpha.is_empty() {
        return Err(Error::TrivialWord);
    }
    let embedding = schreier_embedding(n)?;
    let gens = embedding.generator_matrices();
    let alpha_matrix = matrix_of_word(&embedding.rewrite(alpha)?)?;
    // F_2 embeds in PSL(2,Z), so this only fails for the trivial word.
    excluded_primes(&alpha_matrix)?;
    for q in primes_from(5).take_while(|&q| q <= ceiling) {
        let p = Prime::new(q)?;
        let tuple = GroupTuple::new(p, gens.iter().map(|m| m.reduce(p)).collect())?;
        let image = word_evaluate(alpha, &tuple)?;
        debug_assert_eq!(image, alpha_matrix.reduce(p));
        if image.is_identity() || !tuple.generates() {
            continue;
        }
        return Ok(RfCertificate { rank: n, alpha: alpha.clone(), prime: p, tuple, alpha_image: image, surjective: true });
    }
    Err(Error::PrimeCeilingExceeded(ceiling))
}

/// A prime at which an outer automorphism class moves some defining subgroup.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OutRfWitness {
    pub prime: u32,
    pub class_count: usize,
    pub moved_class: usize,
    pub image_class: usize,
}

/// Smallest `p <= pmax` at which `s` acts nontrivially on X(F_n, PSL(2,p)).
/// `None` for inner automorphisms, and whenever no small prime is found.
pub fn out_rf_witness(
    n: usize,
    s: &FreeAutomorphism,
    pmax: u32,
    config: &EnumerationConfig,
) -> Result<Option<OutRfWitness>> {
    if n < 3 {
        return Err(Error::InvalidRank(n));
    }
    if s.rank() != n {
        return Err(Error::RankMismatch { expected: n, found: s.rank() });
    }
    for q in primes_from(5).take_while(|&q| q <= pmax) {
        let ctx = DefiningContext::new(q)?;
        let table = enumerate_classes(&ctx, n, config)?;
        let perm = out_action(&ctx, &table, s)?;
        if let Some(k) = (0..table.len()).find(|&k| perm.apply(k as u32) != k as u32) {
            return Ok(Some(OutRfWitness {
                prime: q,
                class_count: table.len(),
                moved_class: k,
                image_class: perm.apply(k as u32) as usize,
            }));
        }
    }
    Ok(None)
}
