//! Closed surface groups, the standard handlebody marking, Dehn twists and
//! the certificate pipelines built on top of them.
//!
//! The genus-g surface group is modelled on a free group of rank 2g with
//! `a_i` stored as letter `2i-1` and `b_i` as letter `2i`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::defsub::{enumerate_classes, out_action, ClassTable, DefiningContext, EnumerationConfig};
use crate::error::{Error, Result};
use crate::freegrp::{
    evaluate_indices, nielsen_generators, parse_letters, word_evaluate, FreeAutomorphism, FreeWord, Letter,
};
use crate::permgrp::{giant_contains, recognize_sym_alt, GroupKind, PermGroup, Permutation, Recognition, RecognitionConfig, RecognitionPath};
use crate::psl2::{primes_from, ElementIndex};
use crate::rfwitness::{rf_witness, RfCertificate};

/// Default length bound for the conjugators tried in the separability search.
pub const DEFAULT_GAMMA_DEPTH: usize = 4;

const TWIST_TABLE: &str = include_str!("../data/twists.txt");

fn check_genus(g: usize) -> Result<()> {
    if g < 2 {
        return Err(Error::InvalidGenus(g));
    }
    Ok(())
}

fn a_letter(i: usize) -> Letter {
    (2 * i - 1) as Letter
}

fn b_letter(i: usize) -> Letter {
    (2 * i) as Letter
}

fn free_reduce(letters: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

fn cyclic_reduce(mut w: Vec<Letter>) -> Vec<Letter> {
    let mut lo = 0;
    let mut hi = w.len();
    while hi - lo >= 2 && w[lo] == -w[hi - 1] {
        lo += 1;
        hi -= 1;
    }
    w.truncate(hi);
    w.drain(..lo);
    w
}

fn invert(letters: &[Letter]) -> Vec<Letter> {
    letters.iter().rev().map(|l| -l).collect()
}

/// Parses a surface word written with `a1`, `B2`, ... letters. Words in the
/// free-group alphabet (`x1`, `X2`, ...) are accepted too, using the letter
/// numbering of the underlying free group.
pub fn parse_surface_word(genus: usize, text: &str) -> Result<FreeWord> {
    let letters = parse_letters(text, &['a', 'b', 'x'], |c, i| {
        let i = i as Letter;
        match c {
            'a' => Some(2 * i - 1),
            'A' => Some(-(2 * i - 1)),
            'b' => Some(2 * i),
            'B' => Some(-(2 * i)),
            'x' => Some(i),
            'X' => Some(-i),
            _ => None,
        }
    })?;
    FreeWord::new(2 * genus, &letters)
}

/// Formats a surface word as `a1.b1.A1.B1`, or `1` when empty.
pub fn format_surface_word(w: &FreeWord) -> String {
    if w.is_empty() {
        return "1".into();
    }
    w.letters()
        .iter()
        .map(|&l| {
            let idx = (l.unsigned_abs() as usize).div_ceil(2);
            let c = match (l.unsigned_abs() % 2 == 1, l > 0) {
                (true, true) => 'a',
                (true, false) => 'A',
                (false, true) => 'b',
                (false, false) => 'B',
            };
            format!("{c}{idx}")
        })
        .collect::<Vec<_>>()
        .join(".")
}

/// The fundamental group of the closed orientable surface of genus `g`, with
/// relator `[a1,b1]...[ag,bg]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceGroup {
    genus: usize,
    relator: Vec<Letter>,
    relator_inv: Vec<Letter>,
    /// Position of each letter in `relator` and `relator_inv`, indexed by `l + 2g`.
    pos: Vec<usize>,
    pos_inv: Vec<usize>,
}

impl SurfaceGroup {
    pub fn new(genus: usize) -> Result<Self> {
        check_genus(genus)?;
        let relator: Vec<Letter> = (1..=genus)
            .flat_map(|i| [a_letter(i), b_letter(i), -a_letter(i), -b_letter(i)])
            .collect();
        let relator_inv = invert(&relator);
        let index = |r: &[Letter]| {
            let mut pos = vec![usize::MAX; 4 * genus + 1];
            for (k, &l) in r.iter().enumerate() {
                pos[(l + 2 * genus as Letter) as usize] = k;
            }
            pos
        };
        let pos = index(&relator);
        let pos_inv = index(&relator_inv);
        Ok(SurfaceGroup { genus, relator, relator_inv, pos, pos_inv })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// Rank of the free group carrying the presentation.
    pub fn rank(&self) -> usize {
        2 * self.genus
    }

    pub fn relator(&self) -> FreeWord {
        FreeWord::new(self.rank(), &self.relator).expect("relator is reduced")
    }

    pub fn a(&self, i: usize) -> Result<FreeWord> {
        FreeWord::generator(self.rank(), 2 * i - 1)
    }

    pub fn b(&self, i: usize) -> Result<FreeWord> {
        FreeWord::generator(self.rank(), 2 * i)
    }

    fn check_rank(&self, w: &FreeWord) -> Result<()> {
        if w.rank() != self.rank() {
            return Err(Error::RankMismatch { expected: self.rank(), found: w.rank() });
        }
        Ok(())
    }

    /// Dehn reduction of `w` as a cyclic word: the result is empty exactly
    /// when `w` is trivial in the surface group.
    pub fn dehn_reduce(&self, w: &FreeWord) -> Result<FreeWord> {
        self.check_rank(w)?;
        let rel_len = self.relator.len();
        let mut word = cyclic_reduce(w.letters().to_vec());
        'outer: loop {
            for s in 0..word.len() {
                for (rel, pos) in [(&self.relator, &self.pos), (&self.relator_inv, &self.pos_inv)] {
                    let o = pos[(word[s] + 2 * self.genus as Letter) as usize];
                    let mut len = 0;
                    while s + len < word.len() && len < rel_len && word[s + len] == rel[(o + len) % rel_len] {
                        len += 1;
                    }
                    if 2 * len > rel_len {
                        let rest: Vec<Letter> = (len..rel_len).map(|k| rel[(o + k) % rel_len]).collect();
                        let mut next = word[..s].to_vec();
                        next.extend(invert(&rest));
                        next.extend_from_slice(&word[s + len..]);
                        word = cyclic_reduce(free_reduce(&next));
                        continue 'outer;
                    }
                }
            }
            break;
        }
        FreeWord::new(self.rank(), &word)
    }

    /// Word problem by Dehn's algorithm.
    pub fn is_trivial(&self, w: &FreeWord) -> Result<bool> {
        Ok(self.dehn_reduce(w)?.is_empty())
    }

    /// True if `w` cyclically reduces to a rotation of the relator or its inverse.
    pub fn is_relator_rotation(&self, w: &FreeWord) -> bool {
        let c = w.cyclically_reduce();
        let c = c.letters();
        if c.len() != self.relator.len() {
            return false;
        }
        [&self.relator, &self.relator_inv].iter().any(|r| {
            let doubled: Vec<Letter> = r.iter().chain(r.iter()).copied().collect();
            doubled.windows(c.len()).any(|win| win == c)
        })
    }
}

/// Convenience constructor for [`SurfaceGroup`].
pub fn surface_group(g: usize) -> Result<SurfaceGroup> {
    SurfaceGroup::new(g)
}

/// Word problem in the genus-`g` surface group.
pub fn dehn_word_problem(group: &SurfaceGroup, w: &FreeWord) -> Result<bool> {
    group.is_trivial(w)
}

/// The standard handlebody epimorphism `a_i -> x_i`, `b_i -> 1` onto F_g.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandlebodyEpi {
    genus: usize,
    images: Vec<FreeWord>,
}

impl HandlebodyEpi {
    pub fn standard(genus: usize) -> Result<Self> {
        let surface = SurfaceGroup::new(genus)?;
        let mut images = Vec::with_capacity(2 * genus);
        for i in 1..=genus {
            images.push(FreeWord::generator(genus, i)?);
            images.push(FreeWord::identity(genus));
        }
        let epi = HandlebodyEpi { genus, images };
        debug_assert!(epi.apply(&surface.relator()).unwrap().is_empty());
        Ok(epi)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn images(&self) -> &[FreeWord] {
        &self.images
    }

    pub fn apply(&self, w: &FreeWord) -> Result<FreeWord> {
        w.substitute(&self.images)
    }

    /// Membership in the kernel of the marking.
    pub fn in_delta(&self, w: &FreeWord) -> Result<bool> {
        Ok(self.apply(w)?.is_empty())
    }
}

/// Convenience constructor for [`HandlebodyEpi::standard`].
pub fn standard_handlebody_epi(g: usize) -> Result<HandlebodyEpi> {
    HandlebodyEpi::standard(g)
}

/// An automorphism of the surface group given by generator images, together
/// with an inverse table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceAutomorphism {
    genus: usize,
    images: Vec<FreeWord>,
    inverse_images: Vec<FreeWord>,
    label: String,
}

impl SurfaceAutomorphism {
    /// Validates relator preservation in both directions and that the two
    /// tables compose to a common inner automorphism.
    pub fn new(
        genus: usize,
        images: Vec<FreeWord>,
        inverse_images: Vec<FreeWord>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let surface = SurfaceGroup::new(genus)?;
        let f = SurfaceAutomorphism { genus, images, inverse_images, label: label.into() };
        f.validate(&surface)?;
        Ok(f)
    }

    pub fn identity(genus: usize) -> Result<Self> {
        check_genus(genus)?;
        let gens: Vec<FreeWord> = (1..=2 * genus).map(|i| FreeWord::generator(2 * genus, i)).collect::<Result<_>>()?;
        Ok(SurfaceAutomorphism { genus, images: gens.clone(), inverse_images: gens, label: "id".into() })
    }

    fn validate(&self, surface: &SurfaceGroup) -> Result<()> {
        let rank = surface.rank();
        for table in [&self.images, &self.inverse_images] {
            if table.len() != rank {
                return Err(Error::RankMismatch { expected: rank, found: table.len() });
            }
            if let Some(w) = table.iter().find(|w| w.rank() != rank) {
                return Err(Error::RankMismatch { expected: rank, found: w.rank() });
            }
        }
        let bad = |msg: String| Error::InvalidAutomorphism(format!("{}: {msg}", self.label));
        let r = surface.relator();
        if !surface.is_relator_rotation(&r.substitute(&self.images)?) {
            return Err(bad("image of the relator is not a rotation of the relator".into()));
        }
        if !surface.is_relator_rotation(&r.substitute(&self.inverse_images)?) {
            return Err(bad("inverse table does not preserve the relator".into()));
        }
        let forward: Vec<FreeWord> =
            self.inverse_images.iter().map(|w| w.substitute(&self.images)).collect::<Result<_>>()?;
        let backward: Vec<FreeWord> =
            self.images.iter().map(|w| w.substitute(&self.inverse_images)).collect::<Result<_>>()?;
        for composite in [forward, backward] {
            if !is_inner_on_generators(surface, &composite)? {
                return Err(bad("tables are not mutually inverse up to conjugation".into()));
            }
        }
        Ok(())
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn images(&self) -> &[FreeWord] {
        &self.images
    }

    pub fn inverse_images(&self) -> &[FreeWord] {
        &self.inverse_images
    }

    pub fn apply(&self, w: &FreeWord) -> Result<FreeWord> {
        w.substitute(&self.images)
    }

    pub fn inverse(&self) -> SurfaceAutomorphism {
        SurfaceAutomorphism {
            genus: self.genus,
            images: self.inverse_images.clone(),
            inverse_images: self.images.clone(),
            label: format!("({})^-1", self.label),
        }
    }

    /// `self ∘ other`: `other` is applied first. Both factors are already
    /// validated, so the product is not rechecked.
    pub fn compose(&self, other: &SurfaceAutomorphism) -> Result<SurfaceAutomorphism> {
        if other.genus != self.genus {
            return Err(Error::GenusMismatch { expected: self.genus, found: other.genus });
        }
        let images = other.images.iter().map(|w| w.substitute(&self.images)).collect::<Result<_>>()?;
        let inverse_images =
            self.inverse_images.iter().map(|w| w.substitute(&other.inverse_images)).collect::<Result<_>>()?;
        Ok(SurfaceAutomorphism {
            genus: self.genus,
            images,
            inverse_images,
            label: format!("{}*{}", self.label, other.label),
        })
    }
}

impl fmt::Display for SurfaceAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.label)?;
        for (k, w) in self.images.iter().enumerate() {
            let gen = format_surface_word(&FreeWord::generator(self.images.len(), k + 1).unwrap());
            write!(f, " {gen}={}", format_surface_word(w))?;
        }
        Ok(())
    }
}

/// True if `images[k] = c x_k c^-1` in the surface group for one `c` and all
/// generators. The conjugator is read off the first image.
fn is_inner_on_generators(surface: &SurfaceGroup, images: &[FreeWord]) -> Result<bool> {
    let rank = surface.rank();
    let check = |c: &FreeWord| -> Result<bool> {
        for (k, w) in images.iter().enumerate() {
            let x = FreeWord::generator(rank, k + 1)?.conjugate_by(c)?;
            if !surface.is_trivial(&w.mul(&x.inverse())?)? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if check(&FreeWord::identity(rank))? {
        return Ok(true);
    }
    let first = images[0].letters();
    let n = first.len();
    if n % 2 == 1 && first[n / 2] == 1 {
        let c = FreeWord::new(rank, &first[..n / 2])?;
        return check(&c);
    }
    Ok(false)
}

fn expand_range_bound(text: &str, g: usize) -> Result<usize> {
    match text.trim() {
        "g" => Ok(g),
        "g-1" => Ok(g - 1),
        t => t.parse().map_err(|_| Error::Parse(format!("bad twist range bound {t:?}"))),
    }
}

fn parse_assignments(genus: usize, text: &str) -> Result<Vec<FreeWord>> {
    let rank = 2 * genus;
    let mut images: Vec<FreeWord> = (1..=rank).map(|i| FreeWord::generator(rank, i)).collect::<Result<_>>()?;
    for item in text.split_whitespace() {
        let (lhs, rhs) = item.split_once('=').ok_or_else(|| Error::Parse(format!("bad assignment {item:?}")))?;
        let gen = parse_surface_word(genus, lhs)?;
        match gen.letters() {
            [l] if *l > 0 => images[*l as usize - 1] = parse_surface_word(genus, rhs)?,
            _ => return Err(Error::Parse(format!("left side {lhs:?} is not a generator"))),
        }
    }
    Ok(images)
}

/// Expands a twist table (see `data/twists.txt` for the format) at genus `g`
/// and validates every map.
pub fn parse_twist_table(text: &str, g: usize) -> Result<Vec<SurfaceAutomorphism>> {
    check_genus(g)?;
    let mut out = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        let [name, range, images, inverse] = fields[..] else {
            return Err(Error::Parse(format!("twist line needs four fields: {line:?}")));
        };
        let (lo, hi) = range.split_once("..").ok_or_else(|| Error::Parse(format!("bad range {range:?}")))?;
        let (lo, hi) = (expand_range_bound(lo, g)?, expand_range_bound(hi, g)?);
        for i in lo..=hi.min(g) {
            let subst = |s: &str| s.replace("{i}", &i.to_string()).replace("{j}", &(i + 1).to_string());
            out.push(SurfaceAutomorphism::new(
                g,
                parse_assignments(g, &subst(images))?,
                parse_assignments(g, &subst(inverse))?,
                subst(name),
            )?);
        }
    }
    Ok(out)
}

/// The 2g+1 shipped Humphries-type twists at genus `g`.
pub fn builtin_twists(g: usize) -> Result<Vec<SurfaceAutomorphism>> {
    parse_twist_table(TWIST_TABLE, g)
}

/// Looks up a builtin twist by name, or `name^-1` for its inverse.
pub fn builtin_twist(g: usize, name: &str) -> Result<SurfaceAutomorphism> {
    let (base, inv) = match name.strip_suffix("^-1") {
        Some(b) => (b, true),
        None => (name, false),
    };
    let f = builtin_twists(g)?
        .into_iter()
        .find(|f| f.label() == base)
        .ok_or_else(|| Error::Parse(format!("no builtin twist named {name:?} at genus {g}")))?;
    Ok(if inv { f.inverse().with_label(name) } else { f })
}

fn check_same_genus(phi: &HandlebodyEpi, f: &SurfaceAutomorphism) -> Result<()> {
    if phi.genus != f.genus {
        return Err(Error::GenusMismatch { expected: phi.genus, found: f.genus });
    }
    Ok(())
}

/// The automorphism of F_g induced by a map preserving the kernel of `phi`.
pub fn induced_free_automorphism(phi: &HandlebodyEpi, f: &SurfaceAutomorphism) -> Result<FreeAutomorphism> {
    check_same_genus(phi, f)?;
    let g = phi.genus;
    for (table, suffix) in [(&f.images, ""), (&f.inverse_images, " under the inverse")] {
        for i in 1..=g {
            if !phi.apply(&table[2 * i - 1])?.is_empty() {
                return Err(Error::NotStabilizing { generator: format!("b{i}{suffix}") });
            }
        }
    }
    let images = (1..=g).map(|i| phi.apply(&f.images[2 * i - 2])).collect::<Result<_>>()?;
    let inverse_images = (1..=g).map(|i| phi.apply(&f.inverse_images[2 * i - 2])).collect::<Result<_>>()?;
    FreeAutomorphism::new(f.label.clone(), images, inverse_images)
}

/// How [`action_on_xphi`] computes the permutation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ActionMode {
    /// Through the induced automorphism of F_g.
    #[default]
    Fast,
    /// By classifying `rho ∘ phi ∘ f^-1` directly on the surface group.
    CrossCheck,
}

/// The permutation of the classes of `table` induced by `f`.
pub fn action_on_xphi(
    ctx: &DefiningContext,
    table: &ClassTable,
    phi: &HandlebodyEpi,
    f: &SurfaceAutomorphism,
    mode: ActionMode,
) -> Result<Permutation> {
    check_same_genus(phi, f)?;
    if table.rank() != phi.genus {
        return Err(Error::RankMismatch { expected: phi.genus, found: table.rank() });
    }
    match mode {
        ActionMode::Fast => out_action(ctx, table, &induced_free_automorphism(phi, f)?),
        ActionMode::CrossCheck => cross_check_action(ctx, table, f),
    }
}

fn cross_check_action(ctx: &DefiningContext, table: &ClassTable, f: &SurfaceAutomorphism) -> Result<Permutation> {
    let g = f.genus;
    let group = ctx.group();
    let id = group.identity();
    let mut images = Vec::with_capacity(table.len());
    for k in 0..table.len() {
        // rho ∘ phi as a map on the surface group: a_i -> rho_i, b_i -> 1.
        let surface_rho: Vec<ElementIndex> = table.canon(k).iter().flat_map(|&x| [x, id]).collect();
        for i in 1..=g {
            if evaluate_indices(group, &f.inverse_images[2 * i - 1], &surface_rho) != id {
                return Err(Error::NotStabilizing { generator: format!("b{i}") });
            }
        }
        let t: Vec<ElementIndex> =
            (1..=g).map(|i| evaluate_indices(group, &f.inverse_images[2 * i - 2], &surface_rho)).collect();
        images.push(crate::defsub::class_of(ctx, table, &t)? as u32);
    }
    Permutation::new(images).map_err(|_| Error::NotInTable)
}

/// Knobs shared by the certificate pipelines.
#[derive(Clone, Copy, Debug, Default)]
pub struct PipelineConfig {
    pub enumeration: EnumerationConfig,
    pub recognition: RecognitionConfig,
}

/// What was found at one prime while searching for a symmetric action.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PrimeReport {
    pub prime: u32,
    pub class_count: usize,
    pub kind: GroupKind,
}

/// The Nielsen generators of Aut(F_n) and their permutations of `table`.
pub fn nielsen_action(ctx: &DefiningContext, table: &ClassTable) -> Result<(Vec<FreeAutomorphism>, Vec<Permutation>)> {
    let gens = nielsen_generators(table.rank())?;
    let perms = gens.iter().map(|s| out_action(ctx, table, s)).collect::<Result<_>>()?;
    Ok((gens, perms))
}

/// A prime at which the stabilizer of the handlebody marking acts as the full
/// symmetric group on at least `requested` defining subgroups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theorem1Certificate {
    pub genus: usize,
    pub prime: u32,
    pub requested: usize,
    pub table: ClassTable,
    pub generators: Vec<FreeAutomorphism>,
    pub permutations: Vec<Permutation>,
    pub recognition: Recognition,
    pub scanned: Vec<PrimeReport>,
}

impl Theorem1Certificate {
    pub fn class_count(&self) -> usize {
        self.table.len()
    }

    pub fn statement(&self) -> String {
        format!(
            "stabilizer acts as the full symmetric group on R = {} >= r = {} classes (g = {}, p = {})",
            self.class_count(),
            self.requested,
            self.genus,
            self.prime
        )
    }

    /// Reruns recognition on the stored permutations with the recorded seed.
    pub fn replay(&self, config: &RecognitionConfig) -> Result<bool> {
        let config = RecognitionConfig { seed: self.recognition.evidence.seed, ..*config };
        let again = recognize_sym_alt(&self.permutations, self.class_count(), &config)?;
        Ok(again.kind == GroupKind::Symmetric
            && again.evidence.order == self.recognition.evidence.order
            && self.class_count() >= self.requested)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Theorem1Outcome {
    Certificate(Box<Theorem1Certificate>),
    /// Only alternating actions on enough classes were seen up to `pmax`.
    AlternatingOnly { pmax: u32, scanned: Vec<PrimeReport> },
    /// No prime up to `pmax` had enough classes with a giant action.
    NotFound { pmax: u32, scanned: Vec<PrimeReport> },
}

impl Theorem1Outcome {
    pub fn certificate(&self) -> Option<&Theorem1Certificate> {
        match self {
            Theorem1Outcome::Certificate(c) => Some(c),
            _ => None,
        }
    }

    pub fn scanned(&self) -> &[PrimeReport] {
        match self {
            Theorem1Outcome::Certificate(c) => &c.scanned,
            Theorem1Outcome::AlternatingOnly { scanned, .. } | Theorem1Outcome::NotFound { scanned, .. } => scanned,
        }
    }
}

/// Scans primes `5 <= p <= pmax` for a symmetric action of the Nielsen
/// generators on at least `r` classes of X(F_g, PSL(2,p)).
pub fn theorem1_certificate(g: usize, r: usize, pmax: u32, config: &PipelineConfig) -> Result<Theorem1Outcome> {
    if g < 3 {
        return Err(Error::InvalidGenus(g));
    }
    if r == 0 {
        return Err(Error::InvalidOrder);
    }
    let mut scanned = Vec::new();
    for p in primes_from(5).take_while(|&p| p <= pmax) {
        let ctx = DefiningContext::new(p)?;
        let table = enumerate_classes(&ctx, g, &config.enumeration)?;
        let (generators, permutations) = nielsen_action(&ctx, &table)?;
        let recognition = recognize_sym_alt(&permutations, table.len(), &config.recognition)?;
        scanned.push(PrimeReport { prime: p, class_count: table.len(), kind: recognition.kind });
        if table.len() >= r && recognition.kind == GroupKind::Symmetric {
            return Ok(Theorem1Outcome::Certificate(Box::new(Theorem1Certificate {
                genus: g,
                prime: p,
                requested: r,
                table,
                generators,
                permutations,
                recognition,
                scanned,
            })));
        }
    }
    let alternating = scanned.iter().any(|s| s.class_count >= r && s.kind == GroupKind::Alternating);
    Ok(if alternating {
        Theorem1Outcome::AlternatingOnly { pmax, scanned }
    } else {
        Theorem1Outcome::NotFound { pmax, scanned }
    })
}

/// A genus-3 certificate large enough to contain every group of order `order`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvolveCertificate {
    pub order: usize,
    pub outcome: Theorem1Outcome,
}

impl InvolveCertificate {
    pub fn note(&self) -> String {
        match self.outcome.certificate() {
            Some(c) => format!(
                "a finite index subgroup of the genus-3 mapping class group surjects onto S_{} which contains S_{} \
                 and hence every group of order {}",
                c.class_count(),
                self.order,
                self.order
            ),
            None => format!("no symmetric action on at least {} classes found", self.order),
        }
    }
}

/// Runs [`theorem1_certificate`] at genus 3 with `r` equal to the group order.
pub fn involve_certificate(order: usize, pmax: u32, config: &PipelineConfig) -> Result<InvolveCertificate> {
    if order == 0 {
        return Err(Error::InvalidOrder);
    }
    Ok(InvolveCertificate { order, outcome: theorem1_certificate(3, order, pmax, config)? })
}

/// An element `gamma` of the marking kernel whose image under `map` leaves
/// it, and a finite quotient of F_g detecting the image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparabilityWitness {
    pub genus: usize,
    pub map: SurfaceAutomorphism,
    pub gamma: FreeWord,
    /// `phi(map(gamma))`, a nontrivial word in F_g.
    pub image: FreeWord,
    pub rf: RfCertificate,
}

impl SeparabilityWitness {
    pub fn replay(&self) -> Result<bool> {
        let phi = HandlebodyEpi::standard(self.genus)?;
        let image = phi.apply(&self.map.apply(&self.gamma)?)?;
        Ok(phi.in_delta(&self.gamma)?
            && image == self.image
            && !image.is_empty()
            && self.rf.alpha == image
            && !word_evaluate(&image, &self.rf.tuple)?.is_identity()
            && self.rf.replay())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeparabilityOutcome {
    Witness(Box<SeparabilityWitness>),
    /// No `gamma` left the kernel; the map induces this automorphism of F_g.
    StabilizesInstead(FreeAutomorphism),
}

/// Reduced words of length exactly `len` on `rank` generators, in
/// lexicographic order of letter codes.
fn reduced_words(rank: usize, len: usize) -> Vec<Vec<Letter>> {
    let letters: Vec<Letter> = (1..=rank as Letter).flat_map(|l| [l, -l]).collect();
    let mut layer = vec![Vec::new()];
    for _ in 0..len {
        layer = layer
            .into_iter()
            .flat_map(|w: Vec<Letter>| {
                letters
                    .iter()
                    .filter(|&&l| w.last() != Some(&-l))
                    .map(|&l| {
                        let mut v = w.clone();
                        v.push(l);
                        v
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    layer
}

/// Searches `u b_i u^-1` over conjugators `u` of length at most `depth`
/// (shortest first) for an element whose image leaves the marking kernel.
pub fn separability_witness(
    g: usize,
    f: &SurfaceAutomorphism,
    prime_ceiling: u32,
    depth: usize,
) -> Result<SeparabilityOutcome> {
    let phi = HandlebodyEpi::standard(g)?;
    check_same_genus(&phi, f)?;
    let rank = 2 * g;
    for len in 0..=depth {
        for u in reduced_words(rank, len) {
            let u = FreeWord::new(rank, &u)?;
            for i in 1..=g {
                let gamma = FreeWord::generator(rank, 2 * i)?.conjugate_by(&u)?;
                let image = phi.apply(&f.apply(&gamma)?)?;
                if image.is_empty() {
                    continue;
                }
                let rf = rf_witness(g, &image, prime_ceiling)?;
                return Ok(SeparabilityOutcome::Witness(Box::new(SeparabilityWitness {
                    genus: g,
                    map: f.clone(),
                    gamma,
                    image,
                    rf,
                })));
            }
        }
    }
    Ok(SeparabilityOutcome::StabilizesInstead(induced_free_automorphism(&phi, f)?))
}

/// Stabilizing products of builtin twists and their inverses, one for each
/// distinct induced automorphism of F_g, found breadth first over words of
/// length at most `max_len`.
///
/// The search only tracks `phi ∘ f`, which determines both the stabilizing
/// test and the induced map, and `phi ∘ (f ∘ t)` depends only on `phi ∘ f`
/// and `t`. States are therefore deduplicated on it.
pub fn stabilizing_twist_words(g: usize, max_len: usize) -> Result<Vec<SurfaceAutomorphism>> {
    let phi = HandlebodyEpi::standard(g)?;
    let twists = builtin_twists(g)?;
    let inverses: Vec<SurfaceAutomorphism> = twists.iter().map(|t| t.inverse().with_label(format!("{}^-1", t.label))).collect();
    let letter = |l: Letter| if l > 0 { &twists[l as usize - 1] } else { &inverses[(-l) as usize - 1] };
    let alphabet: Vec<Letter> = (1..=twists.len() as Letter).flat_map(|l| [l, -l]).collect();

    let mut seen: HashSet<Vec<FreeWord>> = HashSet::new();
    let mut induced_seen: HashSet<Vec<FreeWord>> = HashSet::new();
    let mut found: Vec<Vec<Letter>> = Vec::new();
    let start = phi.images().to_vec();
    seen.insert(start.clone());
    let mut layer = vec![(Vec::<Letter>::new(), start)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (word, psi) in &layer {
            for &l in &alphabet {
                if word.last() == Some(&-l) {
                    continue;
                }
                let psi2: Vec<FreeWord> = letter(l).images.iter().map(|w| w.substitute(psi)).collect::<Result<_>>()?;
                if !seen.insert(psi2.clone()) {
                    continue;
                }
                let mut w = word.clone();
                w.push(l);
                if (1..=g).all(|i| psi2[2 * i - 1].is_empty()) {
                    let induced: Vec<FreeWord> = (1..=g).map(|i| psi2[2 * i - 2].clone()).collect();
                    if induced_seen.insert(induced) {
                        found.push(w.clone());
                    }
                }
                next.push((w, psi2));
            }
        }
        layer = next;
    }
    found
        .iter()
        .map(|w| {
            let mut f = letter(w[0]).clone();
            for &l in &w[1..] {
                f = f.compose(letter(l))?;
            }
            Ok(f)
        })
        .collect()
}

/// Outcome of comparing the twist-word action on X^phi with the Nielsen action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainmentReport {
    pub genus: usize,
    pub prime: u32,
    pub class_count: usize,
    pub words_checked: usize,
    /// Distinct permutations among the stabilizing twist words.
    pub distinct_permutations: usize,
    pub all_contained: bool,
    /// How membership was decided: exact sifting or parity in a recognized giant.
    pub membership_path: RecognitionPath,
    pub nielsen: Recognition,
    /// Whether the twist words alone already generate a giant.
    pub twist: Recognition,
}

/// Checks that every stabilizing twist word of length at most `max_len`
/// acts on X^phi inside the group generated by the Nielsen action, and
/// reports what the twist words generate on their own.
pub fn containment_check(g: usize, p: u32, max_len: usize, config: &PipelineConfig) -> Result<ContainmentReport> {
    let ctx = DefiningContext::new(p)?;
    let table = enumerate_classes(&ctx, g, &config.enumeration)?;
    let phi = HandlebodyEpi::standard(g)?;
    let (_, nielsen_perms) = nielsen_action(&ctx, &table)?;
    let n = table.len();
    let nielsen = recognize_sym_alt(&nielsen_perms, n, &config.recognition)?;
    let words = stabilizing_twist_words(g, max_len)?;
    let mut perms = BTreeSet::new();
    for f in &words {
        perms.insert(action_on_xphi(&ctx, &table, &phi, f, ActionMode::Fast)?.images().to_vec());
    }
    let perms: Vec<Permutation> = perms.into_iter().map(Permutation::new).collect::<Result<_>>()?;
    let (membership_path, all_contained) = if n <= config.recognition.exact_limit {
        let group = PermGroup::new(n, nielsen_perms)?;
        let ok = perms.iter().map(|a| group.contains(a)).collect::<Result<Vec<bool>>>()?.into_iter().all(|b| b);
        (RecognitionPath::Exact, ok)
    } else {
        let ok = perms.iter().all(|a| giant_contains(nielsen.kind, a) == Some(true));
        (RecognitionPath::Giant, ok)
    };
    let twist = recognize_sym_alt(&perms, n, &config.recognition)?;
    Ok(ContainmentReport {
        genus: g,
        prime: p,
        class_count: n,
        words_checked: words.len(),
        distinct_permutations: perms.len(),
        all_contained,
        membership_path,
        nielsen,
        twist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sw(g: usize, s: &str) -> FreeWord {
        parse_surface_word(g, s).unwrap()
    }

    #[test]
    fn relator_and_marking() {
        let s = SurfaceGroup::new(2).unwrap();
        assert_eq!(format_surface_word(&s.relator()), "a1.b1.A1.B1.a2.b2.A2.B2");
        let phi = HandlebodyEpi::standard(2).unwrap();
        assert_eq!(phi.apply(&sw(2, "a1.b1.a2")).unwrap().to_string(), "x1.x2");
        assert!(phi.in_delta(&s.relator()).unwrap());
        assert!(matches!(SurfaceGroup::new(1), Err(Error::InvalidGenus(_))));
    }

    #[test]
    fn word_text_round_trip() {
        let w = sw(3, "a1.B2.A3.b3");
        assert_eq!(parse_surface_word(3, &format_surface_word(&w)).unwrap(), w);
        assert_eq!(sw(2, "x1.x2"), sw(2, "a1.b1"));
        assert_eq!(format_surface_word(&FreeWord::identity(4)), "1");
    }

    #[test]
    fn dehn_examples() {
        let s = SurfaceGroup::new(2).unwrap();
        assert!(s.is_trivial(&s.relator()).unwrap());
        assert!(s.is_trivial(&s.relator().inverse()).unwrap());
        assert!(!s.is_trivial(&sw(2, "a1")).unwrap());
        assert!(!s.is_trivial(&sw(2, "a1.b1.A1.B1")).unwrap());
        // R conjugated and split around a rotation.
        let u = sw(2, "a2.b1");
        let w = s.relator().conjugate_by(&u).unwrap().mul(&sw(2, "b2.A2.B2.a1.b1.A1.B1.a2")).unwrap();
        assert!(s.is_trivial(&w).unwrap());
    }

    #[test]
    fn builtin_twist_counts_and_names() {
        for g in 2..=4 {
            assert_eq!(builtin_twists(g).unwrap().len(), 2 * g + 1);
        }
        let names: Vec<String> = builtin_twists(3).unwrap().iter().map(|f| f.label().to_string()).collect();
        assert_eq!(names, ["twist_b1", "twist_b2", "twist_a1", "twist_a2", "twist_a3", "twist_c1", "twist_c2"]);
    }

    #[test]
    fn meridian_twist_fixes_relator_exactly() {
        let s = SurfaceGroup::new(2).unwrap();
        let f = builtin_twist(2, "twist_b1").unwrap();
        assert_eq!(f.apply(&s.relator()).unwrap(), s.relator());
        assert_eq!(format_surface_word(&f.images()[0]), "a1.b1");
    }

    #[test]
    fn bad_tables_are_rejected() {
        let bad = "bad | 1..1 | a1=a1.a1 | a1=a1";
        assert!(matches!(parse_twist_table(bad, 2), Err(Error::InvalidAutomorphism(_))));
        let not_inverse = "bad | 1..1 | a{i}=a{i}.b{i} | a{i}=a{i}.b{i}";
        assert!(parse_twist_table(not_inverse, 2).is_err());
    }

    #[test]
    fn induced_maps() {
        let phi = HandlebodyEpi::standard(3).unwrap();
        let id = SurfaceAutomorphism::identity(3).unwrap();
        assert!(induced_free_automorphism(&phi, &id).unwrap().is_identity());
        let tb = builtin_twist(3, "twist_b1").unwrap();
        assert!(induced_free_automorphism(&phi, &tb).unwrap().is_identity());
        let ta = builtin_twist(3, "twist_a1").unwrap();
        assert_eq!(
            induced_free_automorphism(&phi, &ta),
            Err(Error::NotStabilizing { generator: "b1".into() })
        );
    }

    #[test]
    fn compose_with_inverse_is_identity_in_surface_group() {
        let s = SurfaceGroup::new(3).unwrap();
        for f in builtin_twists(3).unwrap() {
            let h = f.compose(&f.inverse()).unwrap();
            for (k, w) in h.images().iter().enumerate() {
                let x = FreeWord::generator(6, k + 1).unwrap();
                assert!(s.is_trivial(&w.mul(&x.inverse()).unwrap()).unwrap(), "{}", f.label());
            }
        }
    }

    #[test]
    fn separability_examples() {
        let ta = builtin_twist(2, "twist_a1").unwrap();
        let SeparabilityOutcome::Witness(w) = separability_witness(2, &ta, 1000, 0).unwrap() else {
            panic!("expected a witness");
        };
        assert_eq!(format_surface_word(&w.gamma), "b1");
        assert_eq!(w.image.to_string(), "x1");
        assert!(w.replay().unwrap());
        let tb = builtin_twist(2, "twist_b1").unwrap();
        let SeparabilityOutcome::StabilizesInstead(s) = separability_witness(2, &tb, 1000, 1).unwrap() else {
            panic!("expected a stabilizing map");
        };
        assert!(s.is_identity());
    }

    #[test]
    fn theorem1_preconditions() {
        let cfg = PipelineConfig::default();
        assert!(matches!(theorem1_certificate(2, 2, 7, &cfg), Err(Error::InvalidGenus(_))));
        assert!(matches!(involve_certificate(0, 7, &cfg), Err(Error::InvalidOrder)));
    }

    #[test]
    fn reduced_word_counts() {
        assert_eq!(reduced_words(4, 0).len(), 1);
        assert_eq!(reduced_words(4, 3).len(), 8 * 7 * 7);
    }
}
