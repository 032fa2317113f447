//! Permutations of class indices, stabilizer chains, and recognition of
//! symmetric and alternating permutation groups.
//!
//! `compose(a, b)` applies `b` first, then `a`.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psl2::is_prime;

/// Degrees up to this bound are recognized exactly by a stabilizer chain.
pub const EXACT_DEGREE_LIMIT: usize = 200;
pub const DEFAULT_SEED: u64 = 0x005e_ed0f_9111;
pub const DEFAULT_WORD_BUDGET: usize = 512;
pub const DEFAULT_MAX_WORD_LEN: usize = 40;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Permutation {
    images: Vec<u32>,
}

impl TryFrom<Vec<u32>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<u32> {
    fn from(p: Permutation) -> Vec<u32> {
        p.images
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm{:?}", self.images)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Permutation {
    pub fn new(images: Vec<u32>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            let x = x as usize;
            if x >= n || seen[x] {
                return Err(Error::Parse(format!("not a permutation of 0..{n}")));
            }
            seen[x] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n as u32).collect() }
    }

    /// Builds a permutation of `0..n` from disjoint cycles.
    pub fn from_cycles(n: usize, cycles: &[&[u32]]) -> Result<Self> {
        let mut images: Vec<u32> = (0..n as u32).collect();
        for c in cycles {
            for (i, &x) in c.iter().enumerate() {
                let y = c[(i + 1) % c.len()];
                if x as usize >= n || y as usize >= n {
                    return Err(Error::Parse(format!("point out of range in cycle {c:?}")));
                }
                images[x as usize] = y;
            }
        }
        Permutation::new(images)
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.images.len()
    }

    #[inline]
    pub fn apply(&self, x: u32) -> u32 {
        self.images[x as usize]
    }

    pub fn images(&self) -> &[u32] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i as u32 == x)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x as usize] = i as u32;
        }
        Permutation { images: inv }
    }

    /// Sorted cycle lengths, fixed points included.
    pub fn cycle_type(&self) -> Vec<usize> {
        let n = self.images.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                x = self.images[x] as usize;
                len += 1;
            }
            out.push(len);
        }
        out.sort_unstable();
        out
    }

    pub fn parity(&self) -> Parity {
        let transpositions: usize = self.cycle_type().iter().map(|l| l - 1).sum();
        if transpositions.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// `a . b`: apply `b`, then `a`.
pub fn compose(a: &Permutation, b: &Permutation) -> Result<Permutation> {
    if a.degree() != b.degree() {
        return Err(Error::DegreeMismatch(a.degree(), b.degree()));
    }
    Ok(compose_unchecked(a, b))
}

#[inline]
fn compose_unchecked(a: &Permutation, b: &Permutation) -> Permutation {
    Permutation { images: b.images.iter().map(|&x| a.images[x as usize]).collect() }
}

fn check_degrees(gens: &[Permutation], degree: usize) -> Result<()> {
    for g in gens {
        if g.degree() != degree {
            return Err(Error::DegreeMismatch(degree, g.degree()));
        }
    }
    Ok(())
}

/// Evaluates a signed, 1-based word in `gens`, leftmost letter applied first.
pub fn evaluate_word(gens: &[Permutation], degree: usize, word: &[i32]) -> Result<Permutation> {
    check_degrees(gens, degree)?;
    let mut acc = Permutation::identity(degree);
    for &l in word {
        let i = l.unsigned_abs() as usize;
        if l == 0 || i > gens.len() {
            return Err(Error::IndexOutOfRange { index: l as i64, rank: gens.len() });
        }
        let g = if l > 0 { gens[i - 1].clone() } else { gens[i - 1].inverse() };
        acc = compose_unchecked(&g, &acc);
    }
    Ok(acc)
}

pub fn format_word(word: &[i32]) -> String {
    if word.is_empty() {
        return "1".into();
    }
    word.iter()
        .map(|&l| if l > 0 { format!("g{l}") } else { format!("G{}", -l) })
        .collect::<Vec<_>>()
        .join(".")
}

pub fn parse_word(text: &str) -> Result<Vec<i32>> {
    crate::freegrp::parse_letters(text, &['g'], |c, i| match c {
        'g' => Some(i as i32),
        'G' => Some(-(i as i32)),
        _ => None,
    })
}

#[derive(Clone, Debug)]
struct Level {
    base: u32,
    /// Strong generators fixing all earlier base points.
    gens: Vec<Permutation>,
    orbit: Vec<u32>,
    /// `transversal[x]` maps `base` to `x`; `inverse[x]` maps `x` to `base`.
    transversal: Vec<Option<Permutation>>,
    inverse: Vec<Option<Permutation>>,
}

impl Level {
    fn new(base: u32, degree: usize) -> Self {
        let mut transversal = vec![None; degree];
        let mut inverse = vec![None; degree];
        transversal[base as usize] = Some(Permutation::identity(degree));
        inverse[base as usize] = Some(Permutation::identity(degree));
        Level { base, gens: Vec::new(), orbit: vec![base], transversal, inverse }
    }

    fn recompute_orbit(&mut self) {
        let mut queue: VecDeque<u32> = self.orbit.iter().copied().collect();
        while let Some(x) = queue.pop_front() {
            let u = self.transversal[x as usize].clone().expect("orbit point has a coset rep");
            for g in &self.gens {
                let y = g.apply(x);
                if self.transversal[y as usize].is_none() {
                    let v = compose_unchecked(g, &u);
                    self.inverse[y as usize] = Some(v.inverse());
                    self.transversal[y as usize] = Some(v);
                    self.orbit.push(y);
                    queue.push_back(y);
                }
            }
        }
    }
}

/// A permutation group with a deterministic stabilizer chain.
#[derive(Clone, Debug)]
pub struct PermGroup {
    degree: usize,
    generators: Vec<Permutation>,
    levels: Vec<Level>,
}

impl PermGroup {
    /// Builds the chain by the deterministic Schreier-Sims algorithm, with
    /// base points chosen as the smallest point moved by a new generator.
    pub fn new(degree: usize, generators: Vec<Permutation>) -> Result<Self> {
        check_degrees(&generators, degree)?;
        let mut group = PermGroup { degree, generators: generators.clone(), levels: Vec::new() };
        let strong: Vec<Permutation> = generators.into_iter().filter(|g| !g.is_identity()).collect();
        for g in &strong {
            group.add_strong_generator(g.clone(), 0);
        }
        group.schreier_sims();
        Ok(group)
    }

    fn first_moved(g: &Permutation) -> u32 {
        g.images.iter().enumerate().find(|(i, &x)| *i as u32 != x).map(|(i, _)| i as u32).expect("non-identity")
    }

    /// Adds `g` as a strong generator for levels `from..`, extending the base
    /// if `g` fixes every base point.
    fn add_strong_generator(&mut self, g: Permutation, from: usize) -> usize {
        let mut depth = from;
        while depth < self.levels.len() && g.apply(self.levels[depth].base) == self.levels[depth].base {
            depth += 1;
        }
        if depth == self.levels.len() {
            self.levels.push(Level::new(Self::first_moved(&g), self.degree));
        }
        for level in &mut self.levels[from..=depth] {
            level.gens.push(g.clone());
            level.recompute_orbit();
        }
        depth
    }

    /// Sifts `g` through levels `from..`; returns the residue and the level
    /// at which it stopped (`levels.len()` if it passed every level).
    fn strip(&self, mut g: Permutation, from: usize) -> (Permutation, usize) {
        for (i, level) in self.levels.iter().enumerate().skip(from) {
            let x = g.apply(level.base);
            match &level.inverse[x as usize] {
                Some(u) => g = compose_unchecked(u, &g),
                None => return (g, i),
            }
        }
        (g, self.levels.len())
    }

    fn schreier_sims(&mut self) {
        // Transversals never change once set and the chain only grows, so a
        // pair that sifted to the identity once stays trivial.
        let mut checked: Vec<HashSet<(u32, usize)>> = Vec::new();
        let mut i = self.levels.len();
        'outer: while i > 0 {
            let level_idx = i - 1;
            checked.resize_with(self.levels.len(), HashSet::new);
            let level = &self.levels[level_idx];
            let points = level.orbit.clone();
            let gens = level.gens.clone();
            for &x in &points {
                let u = self.levels[level_idx].transversal[x as usize].clone().unwrap();
                for (k, s) in gens.iter().enumerate() {
                    if !checked[level_idx].insert((x, k)) {
                        continue;
                    }
                    let y = s.apply(x);
                    let uy_inv = self.levels[level_idx].inverse[y as usize].clone().unwrap();
                    let schreier = compose_unchecked(&uy_inv, &compose_unchecked(s, &u));
                    if schreier.is_identity() {
                        continue;
                    }
                    let (residue, stop) = self.strip(schreier, level_idx + 1);
                    if stop < self.levels.len() || !residue.is_identity() {
                        // levels below the deepest touched one are unchanged
                        i = self.add_strong_generator(residue, level_idx + 1) + 1;
                        continue 'outer;
                    }
                }
            }
            i -= 1;
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    pub fn base(&self) -> Vec<u32> {
        self.levels.iter().map(|l| l.base).collect()
    }

    pub fn basic_orbit_lengths(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.orbit.len()).collect()
    }

    /// Product of the basic orbit lengths.
    pub fn order(&self) -> BigUint {
        self.levels.iter().fold(BigUint::one(), |acc, l| acc * BigUint::from(l.orbit.len()))
    }

    /// Membership by sifting through the chain.
    pub fn contains(&self, a: &Permutation) -> Result<bool> {
        if a.degree() != self.degree {
            return Err(Error::DegreeMismatch(self.degree, a.degree()));
        }
        let (residue, stop) = self.strip(a.clone(), 0);
        Ok(stop == self.levels.len() && residue.is_identity())
    }
}

/// Order of the group generated by `gens` on `degree` points.
pub fn group_order(degree: usize, gens: &[Permutation]) -> Result<BigUint> {
    Ok(PermGroup::new(degree, gens.to_vec())?.order())
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    Symmetric,
    Alternating,
    Other,
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecognitionPath {
    Exact,
    Giant,
}

/// How a recognition verdict was reached, with enough data to replay it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Evidence {
    pub path: RecognitionPath,
    pub degree: usize,
    /// Decimal group order, when it is known exactly.
    pub order: Option<String>,
    pub transitive: Option<bool>,
    pub primitive: Option<bool>,
    /// A nontrivial block, when primitivity fails.
    pub block: Option<Vec<u32>>,
    pub witness_word: Option<String>,
    pub witness_cycle_type: Option<Vec<usize>>,
    pub jordan_prime: Option<usize>,
    /// Parity of each generator.
    pub parities: Vec<Parity>,
    /// True when `Other` means "not proven giant" rather than "proven not giant".
    pub inconclusive: bool,
    pub seed: u64,
    pub diagnostic: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recognition {
    pub kind: GroupKind,
    pub evidence: Evidence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecognitionConfig {
    pub seed: u64,
    pub word_budget: usize,
    pub max_word_len: usize,
    pub exact_limit: usize,
}

impl Default for RecognitionConfig {
    fn default() -> Self {
        RecognitionConfig {
            seed: DEFAULT_SEED,
            word_budget: DEFAULT_WORD_BUDGET,
            max_word_len: DEFAULT_MAX_WORD_LEN,
            exact_limit: EXACT_DEGREE_LIMIT,
        }
    }
}

/// Decides whether `gens` generate Sym(N), Alt(N), or something else.
pub fn recognize_sym_alt(gens: &[Permutation], degree: usize, config: &RecognitionConfig) -> Result<Recognition> {
    check_degrees(gens, degree)?;
    if degree <= config.exact_limit {
        recognize_exact(gens, degree, config.seed)
    } else {
        Ok(recognize_giant(gens, degree, config))
    }
}

fn parities(gens: &[Permutation]) -> Vec<Parity> {
    gens.iter().map(|g| g.parity()).collect()
}

fn blank_evidence(path: RecognitionPath, degree: usize, gens: &[Permutation], seed: u64) -> Evidence {
    Evidence {
        path,
        degree,
        order: None,
        transitive: None,
        primitive: None,
        block: None,
        witness_word: None,
        witness_cycle_type: None,
        jordan_prime: None,
        parities: parities(gens),
        inconclusive: false,
        seed,
        diagnostic: String::new(),
    }
}

/// Exact recognition by comparing the chain order with N! and N!/2.
pub fn recognize_exact(gens: &[Permutation], degree: usize, seed: u64) -> Result<Recognition> {
    check_degrees(gens, degree)?;
    let mut ev = blank_evidence(RecognitionPath::Exact, degree, gens, seed);
    if degree == 0 {
        ev.diagnostic = "no points".into();
        return Ok(Recognition { kind: GroupKind::Other, evidence: ev });
    }
    let order = group_order(degree, gens)?;
    let full = factorial(degree);
    let kind = if order == full {
        GroupKind::Symmetric
    } else if &order * 2u32 == full {
        GroupKind::Alternating
    } else {
        GroupKind::Other
    };
    ev.transitive = Some(is_transitive(gens, degree));
    ev.order = Some(order.to_string());
    ev.diagnostic = format!("stabilizer chain order {order}");
    Ok(Recognition { kind, evidence: ev })
}

pub fn is_transitive(gens: &[Permutation], degree: usize) -> bool {
    if degree == 0 {
        return true;
    }
    let mut seen = vec![false; degree];
    seen[0] = true;
    let mut stack = vec![0u32];
    let mut count = 1;
    while let Some(x) = stack.pop() {
        for g in gens {
            let y = g.apply(x) as usize;
            if !seen[y] {
                seen[y] = true;
                count += 1;
                stack.push(y as u32);
            }
        }
    }
    count == degree
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

/// The finest block system in which `0` and `seed` share a block, as the
/// block containing `0` (Atkinson's union-find closure).
pub fn minimal_block(gens: &[Permutation], degree: usize, seed: u32) -> Vec<u32> {
    let mut parent: Vec<u32> = (0..degree as u32).collect();
    let mut pending = vec![(0u32, seed)];
    while let Some((a, b)) = pending.pop() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            continue;
        }
        parent[rb as usize] = ra;
        for g in gens {
            pending.push((g.apply(a), g.apply(b)));
        }
    }
    let root = find(&mut parent, 0);
    (0..degree as u32).filter(|&x| find(&mut parent, x) == root).collect()
}

/// A nontrivial block of a transitive group, or `None` if it is primitive.
pub fn nontrivial_block(gens: &[Permutation], degree: usize) -> Option<Vec<u32>> {
    (1..degree as u32).map(|j| minimal_block(gens, degree, j)).find(|b| b.len() < degree)
}

/// Longest-cycle prime `q` with `N/2 < q < N-2` in the cycle type, if any.
pub fn jordan_prime(cycle_type: &[usize], degree: usize) -> Option<usize> {
    cycle_type.iter().copied().filter(|&q| 2 * q > degree && q + 2 < degree && is_prime(q as u64)).max()
}

fn random_word(rng: &mut ChaCha8Rng, gens: usize, max_len: usize) -> Vec<i32> {
    let len = rng.gen_range(1..=max_len);
    (0..len)
        .map(|_| {
            let g = rng.gen_range(1..=gens) as i32;
            if rng.gen_bool(0.5) {
                g
            } else {
                -g
            }
        })
        .collect()
}

/// Transitivity, primitivity, then a seeded search for an element with a
/// prime cycle of length `q`, `N/2 < q < N-2`. Such an element has a power
/// that is a `q`-cycle, and a primitive group containing one contains
/// Alt(N) by Jordan's theorem; generator parities settle the rest.
pub fn recognize_giant(gens: &[Permutation], degree: usize, config: &RecognitionConfig) -> Recognition {
    let mut ev = blank_evidence(RecognitionPath::Giant, degree, gens, config.seed);
    let other = |mut ev: Evidence, inconclusive: bool, why: String| {
        ev.inconclusive = inconclusive;
        ev.diagnostic = why;
        Recognition { kind: GroupKind::Other, evidence: ev }
    };
    if degree == 0 || gens.is_empty() {
        return other(ev, false, "no points or no generators".into());
    }
    let transitive = is_transitive(gens, degree);
    ev.transitive = Some(transitive);
    if !transitive {
        return other(ev, false, "intransitive".into());
    }
    let block = nontrivial_block(gens, degree);
    ev.primitive = Some(block.is_none());
    if let Some(b) = block {
        ev.block = Some(b);
        return other(ev, false, "imprimitive".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.word_budget {
        let word = random_word(&mut rng, gens.len(), config.max_word_len);
        let elt = evaluate_word(gens, degree, &word).expect("degrees checked");
        let ct = elt.cycle_type();
        if let Some(q) = jordan_prime(&ct, degree) {
            ev.witness_word = Some(format_word(&word));
            ev.witness_cycle_type = Some(ct);
            ev.jordan_prime = Some(q);
            let full = factorial(degree);
            let kind = if ev.parities.contains(&Parity::Odd) {
                ev.order = Some(full.to_string());
                GroupKind::Symmetric
            } else {
                ev.order = Some((full / 2u32).to_string());
                GroupKind::Alternating
            };
            ev.diagnostic = format!("primitive with a {q}-cycle power; Jordan bound satisfied");
            return Recognition { kind, evidence: ev };
        }
    }
    other(ev, true, format!("no Jordan element in {} random words", config.word_budget))
}

/// Membership in a group known to be Sym(N) or Alt(N).
pub fn giant_contains(kind: GroupKind, a: &Permutation) -> Option<bool> {
    match kind {
        GroupKind::Symmetric => Some(true),
        GroupKind::Alternating => Some(a.parity() == Parity::Even),
        GroupKind::Other => None,
    }
}
