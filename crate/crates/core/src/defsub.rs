//! PSL(2,p)-defining subgroups of F_n.
//!
//! A defining subgroup is the kernel of an epimorphism `F_n -> PSL(2,p)`, and
//! two epimorphisms have the same kernel exactly when they differ by an
//! automorphism of PSL(2,p). For prime `p` that automorphism group is
//! PGL(2,p) acting by conjugation (a classical fact used as input here), so a
//! class is stored as the lexicographically least tuple of element indices in
//! the PGL-orbit of any generating tuple.
//!
//! PGL(2,p) is realized as `2|PSL|` conjugation maps: by each element of
//! PSL(2,p), and by `diag(nu, 1)` composed with each of those, where `nu` is
//! the least quadratic nonresidue mod p.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::freegrp::{apply_automorphism_indices, FreeAutomorphism, GroupTuple};
use crate::permgrp::Permutation;
use crate::psl2::{Closure, ElementIndex, Prime, Psl2Group, Subgroup};

/// Default ceiling on tuple visits for a single enumeration.
pub const DEFAULT_BUDGET: u64 = 500_000_000;

const CACHE_MAGIC: &[u8; 4] = b"XPSL";
pub const CACHE_VERSION: u32 = 1;

/// Aut(PSL(2,p)) as explicit permutations of the element indices.
pub struct DefiningContext {
    group: Arc<Psl2Group>,
    /// `images[h * |G| + x]` is the image of `x` under automorphism `h`.
    images: Vec<ElementIndex>,
    aut_count: usize,
    /// Least element of each element's PGL-conjugacy class.
    min_image: Vec<ElementIndex>,
    /// For each `x`, the automorphisms sending `x` to `min_image[x]`.
    movers: Vec<Vec<u32>>,
}

impl std::fmt::Debug for DefiningContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DefiningContext").field("group", &self.group).field("automorphisms", &self.aut_count).finish()
    }
}

impl DefiningContext {
    /// Builds the context; `p` must be at least 5.
    pub fn new(p: u32) -> Result<Self> {
        let prime = Prime::new_enumerable(p)?;
        Ok(Self::from_group(Arc::new(Psl2Group::new(prime))))
    }

    pub fn from_group(group: Arc<Psl2Group>) -> Self {
        let n = group.order();
        let nu = group.prime().smallest_nonresidue();
        let delta: Vec<ElementIndex> = group
            .elements()
            .iter()
            .map(|e| group.index_of(&e.conjugate_by([nu, 0, 0, 1]).expect("nonzero determinant")))
            .collect();
        let aut_count = 2 * n;
        let mut images = vec![0u32; aut_count * n];
        for m in 0..n as u32 {
            let mi = group.inverse(m);
            let row = m as usize * n;
            let twisted = (n + m as usize) * n;
            for x in 0..n as u32 {
                let y = group.mul(group.mul(m, x), mi);
                images[row + x as usize] = y;
                images[twisted + x as usize] = delta[y as usize];
            }
        }
        let mut min_image = vec![u32::MAX; n];
        for h in 0..aut_count {
            for x in 0..n {
                min_image[x] = min_image[x].min(images[h * n + x]);
            }
        }
        let mut movers = vec![Vec::new(); n];
        for h in 0..aut_count {
            for x in 0..n {
                if images[h * n + x] == min_image[x] {
                    movers[x].push(h as u32);
                }
            }
        }
        DefiningContext { group, images, aut_count, min_image, movers }
    }

    pub fn group(&self) -> &Arc<Psl2Group> {
        &self.group
    }

    pub fn prime(&self) -> Prime {
        self.group.prime()
    }

    /// `|PGL(2,p)|`.
    pub fn automorphism_count(&self) -> usize {
        self.aut_count
    }

    #[inline]
    pub fn apply_aut(&self, h: usize, x: ElementIndex) -> ElementIndex {
        self.images[h * self.group.order() + x as usize]
    }

    /// Elements that are the least in their PGL-conjugacy class.
    pub fn class_representatives(&self) -> Vec<ElementIndex> {
        (0..self.group.order() as u32).filter(|&x| self.min_image[x as usize] == x).collect()
    }

    /// Least tuple in the PGL-orbit of `t`, without checking generation.
    pub fn canonical_unchecked(&self, t: &[ElementIndex]) -> Vec<ElementIndex> {
        let Some(&first) = t.first() else { return Vec::new() };
        let n = self.group.order();
        let movers = &self.movers[first as usize];
        let mut best = movers[0] as usize;
        for &h in &movers[1..] {
            let h = h as usize;
            for &x in &t[1..] {
                let a = self.images[h * n + x as usize];
                let b = self.images[best * n + x as usize];
                if a != b {
                    if a < b {
                        best = h;
                    }
                    break;
                }
            }
        }
        t.iter().map(|&x| self.images[best * n + x as usize]).collect()
    }

    /// Canonical orbit representative of a generating tuple.
    pub fn canonical(&self, t: &[ElementIndex]) -> Result<Vec<ElementIndex>> {
        if !self.group.generates(t) {
            return Err(Error::NotGenerating(self.prime().get()));
        }
        Ok(self.canonical_unchecked(t))
    }

    /// The whole PGL-orbit of `t` (with repetitions when the action is not free).
    pub fn orbit(&self, t: &[ElementIndex]) -> Vec<Vec<ElementIndex>> {
        (0..self.aut_count).map(|h| t.iter().map(|&x| self.apply_aut(h, x)).collect()).collect()
    }
}

/// Canonical form of a generating tuple given as matrices.
pub fn aut_orbit_canonical(ctx: &DefiningContext, t: &GroupTuple) -> Result<GroupTuple> {
    let idx = t.to_indices(ctx.group())?;
    Ok(GroupTuple::from_indices(ctx.group(), &ctx.canonical(&idx)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Scan all `|G|^n` tuples.
    #[default]
    Full,
    /// Restrict the first coordinate to PGL-class representatives.
    Pruned,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Strategy::Full),
            "pruned" => Ok(Strategy::Pruned),
            _ => Err(Error::Parse(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationConfig {
    pub strategy: Strategy,
    pub workers: usize,
    pub budget: u64,
    /// Reject leaf tuples lying in a common Borel subgroup before the
    /// closure test. Never changes the result.
    pub prefilter: bool,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        EnumerationConfig { strategy: Strategy::Pruned, workers: 1, budget: DEFAULT_BUDGET, prefilter: true }
    }
}

/// The set X(F_n, PSL(2,p)) as sorted canonical tuples.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ClassTable {
    prime: u32,
    rank: usize,
    tuples: Vec<ElementIndex>,
}

impl ClassTable {
    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.tuples.len().checked_div(self.rank).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn canon(&self, k: usize) -> &[ElementIndex] {
        &self.tuples[k * self.rank..(k + 1) * self.rank]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[ElementIndex]> {
        self.tuples.chunks_exact(self.rank.max(1))
    }

    /// Class index of an already canonical tuple.
    pub fn find(&self, canon: &[ElementIndex]) -> Option<usize> {
        if canon.len() != self.rank {
            return None;
        }
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.canon(mid).cmp(canon) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn from_sorted(prime: u32, rank: usize, classes: Vec<Vec<ElementIndex>>) -> Self {
        debug_assert!(classes.windows(2).all(|w| w[0] < w[1]));
        ClassTable { prime, rank, tuples: classes.into_iter().flatten().collect() }
    }

    /// Versioned little-endian cache encoding.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 4 * self.tuples.len());
        out.extend_from_slice(CACHE_MAGIC);
        for v in [CACHE_VERSION, self.rank as u32, self.prime, self.len() as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &x in &self.tuples {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::CacheFormat(m.to_string());
        if bytes.len() < 20 || &bytes[..4] != CACHE_MAGIC {
            return Err(bad("missing header"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let (version, rank, prime, count) = (word(4), word(8) as usize, word(12), word(16) as usize);
        if version != CACHE_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let p = Prime::new_enumerable(prime).map_err(|_| bad("invalid prime"))?;
        if bytes.len() != 20 + 4 * rank * count {
            return Err(bad("length does not match header"));
        }
        let order = p.psl_order() as u32;
        let tuples: Vec<u32> = (0..rank * count).map(|i| word(20 + 4 * i)).collect();
        if tuples.iter().any(|&x| x >= order) {
            return Err(bad("element index out of range"));
        }
        let table = ClassTable { prime, rank, tuples };
        if rank > 0 && !table.iter().zip(table.iter().skip(1)).all(|(a, b)| a < b) {
            return Err(bad("classes not strictly sorted"));
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

fn visits(order: usize, first: usize, n: usize) -> u128 {
    if n == 0 {
        return 0;
    }
    (first as u128) * (order as u128).pow(n as u32 - 1)
}

fn check_budget(estimated: u128, budget: u64) -> Result<()> {
    if estimated > budget as u128 {
        return Err(Error::ResourceLimit { estimated, budget });
    }
    Ok(())
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool construction");
    pool.install(f)
}

/// Enumerates X(F_n, PSL(2,p)). The result does not depend on the strategy,
/// on the prefilter, or on the number of workers.
pub fn enumerate_classes(ctx: &DefiningContext, n: usize, config: &EnumerationConfig) -> Result<ClassTable> {
    if n == 0 {
        return Err(Error::InvalidRank(0));
    }
    let g = ctx.group();
    let firsts: Vec<ElementIndex> = match config.strategy {
        Strategy::Full => (0..g.order() as u32).collect(),
        Strategy::Pruned => ctx.class_representatives(),
    };
    check_budget(visits(g.order(), firsts.len(), n), config.budget)?;

    let chunks: Vec<Vec<Vec<ElementIndex>>> = with_pool(config.workers, || {
        firsts
            .par_iter()
            .map(|&x| {
                let mut found = BTreeSet::new();
                let mut tuple = vec![x; n];
                let state = g.closure(&[x]);
                scan(ctx, &mut tuple, 1, state, config.prefilter, &mut found);
                found.into_iter().collect()
            })
            .collect()
    });
    let merged: BTreeSet<Vec<ElementIndex>> = chunks.into_iter().flatten().collect();
    Ok(ClassTable::from_sorted(ctx.prime().get(), n, merged.into_iter().collect()))
}

fn scan(
    ctx: &DefiningContext,
    tuple: &mut [ElementIndex],
    depth: usize,
    state: Closure,
    prefilter: bool,
    found: &mut BTreeSet<Vec<ElementIndex>>,
) {
    let n = tuple.len();
    if depth == n {
        if matches!(state, Closure::Full) {
            found.insert(ctx.canonical_unchecked(tuple));
        }
        return;
    }
    let g = ctx.group();
    for y in 0..g.order() as u32 {
        tuple[depth] = y;
        let next = match &state {
            Closure::Full => Closure::Full,
            Closure::Proper(sub) => {
                if depth + 1 == n && prefilter && g.share_fixed_point(&tuple[..=depth]) {
                    continue;
                }
                extend(g, sub, &tuple[..depth], y)
            }
        };
        scan(ctx, tuple, depth + 1, next, prefilter, found);
    }
}

fn extend(g: &Psl2Group, sub: &Subgroup, gens: &[ElementIndex], y: ElementIndex) -> Closure {
    g.extend_closure(sub, gens, y)
}

/// Number of generating n-tuples, by direct scan and closure. Shares no
/// orbit logic with [`enumerate_classes`].
pub fn count_generating_tuples(group: &Psl2Group, n: usize, workers: usize, budget: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidRank(0));
    }
    let order = group.order();
    check_budget(visits(order, order, n), budget)?;
    Ok(with_pool(workers, || {
        (0..order as u32)
            .into_par_iter()
            .map(|x| {
                let mut tuple = vec![0u32; n];
                tuple[0] = x;
                let mut count = 0u64;
                loop {
                    if group.generates(&tuple) {
                        count += 1;
                    }
                    // odometer over coordinates 1..n
                    let mut i = n - 1;
                    loop {
                        if i == 0 {
                            return count;
                        }
                        tuple[i] += 1;
                        if (tuple[i] as usize) < order {
                            break;
                        }
                        tuple[i] = 0;
                        i -= 1;
                    }
                }
            })
            .sum()
    }))
}

/// Index of the class containing the generating tuple `t`.
pub fn class_of(ctx: &DefiningContext, table: &ClassTable, t: &[ElementIndex]) -> Result<usize> {
    if t.len() != table.rank() {
        return Err(Error::RankMismatch { expected: table.rank(), found: t.len() });
    }
    let canon = ctx.canonical(t)?;
    table.find(&canon).ok_or(Error::NotInTable)
}

/// The permutation `k -> class_of(s . canon_k)` of the class list.
pub fn out_action(ctx: &DefiningContext, table: &ClassTable, s: &FreeAutomorphism) -> Result<Permutation> {
    if s.rank() != table.rank() {
        return Err(Error::RankMismatch { expected: table.rank(), found: s.rank() });
    }
    let g = ctx.group();
    let images = (0..table.len())
        .map(|k| {
            let moved = apply_automorphism_indices(g, s, table.canon(k));
            class_of(ctx, table, &moved).map(|j| j as u32)
        })
        .collect::<Result<Vec<u32>>>()?;
    // A non-bijection here would mean the canonical forms are broken.
    Permutation::new(images).map_err(|_| Error::NotInTable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegrp::{nielsen_generators, FreeWord};

    #[test]
    fn orbit_of_a_generating_pair_is_free() {
        let ctx = DefiningContext::new(5).unwrap();
        let g = ctx.group();
        let t = (0..g.order() as u32)
            .flat_map(|a| (0..g.order() as u32).map(move |b| vec![a, b]))
            .find(|t| g.generates(t))
            .unwrap();
        let distinct: BTreeSet<_> = ctx.orbit(&t).into_iter().collect();
        assert_eq!(distinct.len(), 120);
        let c = ctx.canonical(&t).unwrap();
        assert_eq!(&c, distinct.iter().next().unwrap());
        assert_eq!(ctx.canonical(&c).unwrap(), c);
    }

    #[test]
    fn canonical_is_orbit_invariant() {
        let ctx = DefiningContext::new(7).unwrap();
        let g = ctx.group();
        let t = vec![3, 100, 17];
        assert!(g.generates(&t));
        let c = ctx.canonical(&t).unwrap();
        for image in ctx.orbit(&t).iter().step_by(7) {
            assert_eq!(ctx.canonical(image).unwrap(), c);
        }
    }

    #[test]
    fn rank_one_has_no_classes() {
        let ctx = DefiningContext::new(5).unwrap();
        let table = enumerate_classes(&ctx, 1, &EnumerationConfig::default()).unwrap();
        assert_eq!(table.len(), 0);
        assert_eq!(count_generating_tuples(ctx.group(), 1, 1, DEFAULT_BUDGET).unwrap(), 0);
    }

    #[test]
    fn non_generating_is_rejected() {
        let ctx = DefiningContext::new(5).unwrap();
        let id = ctx.group().identity();
        assert_eq!(ctx.canonical(&[id, id]), Err(Error::NotGenerating(5)));
        assert!(DefiningContext::new(3).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let ctx = DefiningContext::new(5).unwrap();
        let cfg = EnumerationConfig { strategy: Strategy::Full, budget: 1000, ..Default::default() };
        assert!(matches!(enumerate_classes(&ctx, 2, &cfg), Err(Error::ResourceLimit { estimated: 3600, .. })));
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let ctx = DefiningContext::new(5).unwrap();
        let table = enumerate_classes(&ctx, 2, &EnumerationConfig::default()).unwrap();
        let bytes = table.to_bytes();
        assert_eq!(ClassTable::from_bytes(&bytes).unwrap(), table);
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(ClassTable::from_bytes(&bad).is_err());
        assert!(ClassTable::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn identity_and_inner_automorphisms_act_trivially() {
        let ctx = DefiningContext::new(5).unwrap();
        let table = enumerate_classes(&ctx, 2, &EnumerationConfig::default()).unwrap();
        assert!(out_action(&ctx, &table, &FreeAutomorphism::identity(2)).unwrap().is_identity());
        let u = FreeWord::parse(2, "x1.x2").unwrap();
        assert!(out_action(&ctx, &table, &FreeAutomorphism::conjugation(&u)).unwrap().is_identity());
        for s in nielsen_generators(2).unwrap() {
            out_action(&ctx, &table, &s).unwrap();
        }
    }
}
