//! JSON certificates and a standalone verifier.
//!
//! The verifier shares only the psl2, freegrp and permgrp primitives with the
//! code that produces certificates. In particular it canonicalizes tuples with
//! its own PGL(2,p) action built from matrix conjugation, and it never calls
//! the class enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freegrp::{nielsen_generators, word_evaluate, FreeAutomorphism, FreeWord, GroupTuple};
use crate::permgrp::{recognize_sym_alt, Evidence, GroupKind, Permutation, RecognitionConfig};
use crate::psl2::{generates, ElementIndex, Prime, Psl2Group};
use crate::rfwitness::RfCertificate;
use crate::surface::{
    format_surface_word, parse_surface_word, HandlebodyEpi, InvolveCertificate, PrimeReport, SeparabilityWitness,
    SurfaceAutomorphism, Theorem1Certificate,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub schema_version: u32,
    /// Seed of the run that produced the certificate.
    pub seed: u64,
    #[serde(flatten)]
    pub body: CertificateBody,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertificateBody {
    RfWitness(RfWitnessJson),
    Theorem1(Theorem1Json),
    Involve(InvolveJson),
    Separability(SeparabilityJson),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RfWitnessJson {
    pub n: usize,
    pub alpha: String,
    pub p: u32,
    pub tuple: Vec<ElementIndex>,
    pub alpha_image: [u32; 4],
    pub surjective: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AutomorphismJson {
    pub name: String,
    pub images: Vec<String>,
    pub inverse_images: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Theorem1Json {
    pub g: usize,
    pub p: u32,
    pub r: usize,
    pub class_count: usize,
    /// Canonical tuples in table order.
    pub classes: Vec<Vec<ElementIndex>>,
    pub generators: Vec<AutomorphismJson>,
    /// Raw image arrays; bijectivity is part of verification.
    pub permutations: Vec<Vec<u32>>,
    pub result: GroupKind,
    pub evidence: Evidence,
    pub statement: String,
    pub scanned: Vec<PrimeReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InvolveJson {
    pub order: usize,
    pub note: String,
    pub theorem1: Theorem1Json,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SurfaceMapJson {
    pub label: String,
    pub images: Vec<String>,
    pub inverse_images: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeparabilityJson {
    pub g: usize,
    pub map: SurfaceMapJson,
    pub gamma: String,
    pub image: String,
    pub witness: RfWitnessJson,
}

impl From<&RfCertificate> for RfWitnessJson {
    fn from(c: &RfCertificate) -> Self {
        let group = Psl2Group::new(c.prime);
        RfWitnessJson {
            n: c.rank,
            alpha: c.alpha.to_string(),
            p: c.prime.get(),
            tuple: c.tuple.entries().iter().map(|m| group.index_of(m)).collect(),
            alpha_image: c.alpha_image.entries(),
            surjective: c.surjective,
        }
    }
}

impl From<&FreeAutomorphism> for AutomorphismJson {
    fn from(s: &FreeAutomorphism) -> Self {
        AutomorphismJson {
            name: s.name().to_string(),
            images: s.images().iter().map(|w| w.to_string()).collect(),
            inverse_images: s.inverse_images().iter().map(|w| w.to_string()).collect(),
        }
    }
}

impl From<&Theorem1Certificate> for Theorem1Json {
    fn from(c: &Theorem1Certificate) -> Self {
        Theorem1Json {
            g: c.genus,
            p: c.prime,
            r: c.requested,
            class_count: c.class_count(),
            classes: c.table.iter().map(<[ElementIndex]>::to_vec).collect(),
            generators: c.generators.iter().map(AutomorphismJson::from).collect(),
            permutations: c.permutations.iter().map(|p| p.images().to_vec()).collect(),
            result: c.recognition.kind,
            evidence: c.recognition.evidence.clone(),
            statement: c.statement(),
            scanned: c.scanned.clone(),
        }
    }
}

impl From<&SurfaceAutomorphism> for SurfaceMapJson {
    fn from(f: &SurfaceAutomorphism) -> Self {
        SurfaceMapJson {
            label: f.label().to_string(),
            images: f.images().iter().map(format_surface_word).collect(),
            inverse_images: f.inverse_images().iter().map(format_surface_word).collect(),
        }
    }
}

impl SurfaceMapJson {
    /// Rebuilds and revalidates the map.
    pub fn to_automorphism(&self, genus: usize) -> Result<SurfaceAutomorphism> {
        let parse = |ws: &[String]| ws.iter().map(|w| parse_surface_word(genus, w)).collect::<Result<Vec<_>>>();
        SurfaceAutomorphism::new(genus, parse(&self.images)?, parse(&self.inverse_images)?, self.label.clone())
    }
}

impl Certificate {
    pub fn new(seed: u64, body: CertificateBody) -> Self {
        Certificate { schema_version: SCHEMA_VERSION, seed, body }
    }

    pub fn rf_witness(seed: u64, c: &RfCertificate) -> Self {
        Certificate::new(seed, CertificateBody::RfWitness(c.into()))
    }

    pub fn theorem1(seed: u64, c: &Theorem1Certificate) -> Self {
        Certificate::new(seed, CertificateBody::Theorem1(c.into()))
    }

    /// `None` unless the wrapped search produced a certificate.
    pub fn involve(seed: u64, c: &InvolveCertificate) -> Option<Self> {
        let t = c.outcome.certificate()?;
        Some(Certificate::new(
            seed,
            CertificateBody::Involve(InvolveJson { order: c.order, note: c.note(), theorem1: t.into() }),
        ))
    }

    pub fn separability(seed: u64, w: &SeparabilityWitness) -> Self {
        Certificate::new(
            seed,
            CertificateBody::Separability(SeparabilityJson {
                g: w.genus,
                map: (&w.map).into(),
                gamma: format_surface_word(&w.gamma),
                image: w.image.to_string(),
                witness: (&w.rf).into(),
            }),
        )
    }

    pub fn kind(&self) -> &'static str {
        match self.body {
            CertificateBody::RfWitness(_) => "rf-witness",
            CertificateBody::Theorem1(_) => "theorem1",
            CertificateBody::Involve(_) => "involve",
            CertificateBody::Separability(_) => "separability",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Certificate = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema version {}", c.schema_version)));
        }
        Ok(c)
    }
}

/// One named check and whether it passed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    fn check(&mut self, name: &str, passed: bool) -> bool {
        self.checks.push(Check { name: name.into(), passed, detail: String::new() });
        passed
    }

    fn fail(&mut self, name: &str, detail: impl Into<String>) -> bool {
        self.checks.push(Check { name: name.into(), passed: false, detail: detail.into() });
        false
    }

    /// Records `r` as a check, turning errors into failures.
    fn attempt<T>(&mut self, name: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.fail(name, e.to_string());
                None
            }
        }
    }
}

/// PGL(2,p) acting on element indices, built by conjugating matrices.
struct PglAction {
    maps: Vec<Vec<ElementIndex>>,
}

impl PglAction {
    fn new(group: &Psl2Group) -> Result<Self> {
        let p = group.prime().get();
        let nu = group.prime().smallest_nonresidue();
        let mut conjugators: Vec<[u32; 4]> = group.elements().iter().map(|m| m.entries()).collect();
        let twisted: Vec<[u32; 4]> = conjugators
            .iter()
            .map(|&[a, b, c, d]| [(nu as u64 * a as u64 % p as u64) as u32, (nu as u64 * b as u64 % p as u64) as u32, c, d])
            .collect();
        conjugators.extend(twisted);
        let maps = conjugators
            .iter()
            .map(|&g| {
                group.elements().iter().map(|m| m.conjugate_by(g).map(|c| group.index_of(&c))).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PglAction { maps })
    }

    fn canonical(&self, t: &[ElementIndex]) -> Vec<ElementIndex> {
        self.maps.iter().map(|h| t.iter().map(|&x| h[x as usize]).collect::<Vec<_>>()).min().unwrap_or_default()
    }
}

fn verify_rf(report: &mut VerificationReport, c: &RfWitnessJson) -> Option<FreeWord> {
    let p = report.attempt("prime", Prime::new_enumerable(c.p))?;
    let alpha = report.attempt("alpha parses", FreeWord::parse(c.n, &c.alpha))?;
    report.check("alpha nontrivial", !alpha.is_empty());
    let group = Psl2Group::new(p);
    if !report.check("tuple length", c.tuple.len() == c.n) {
        return None;
    }
    if !report.check("tuple indices in range", c.tuple.iter().all(|&x| (x as usize) < group.order())) {
        return None;
    }
    let mats: Vec<_> = c.tuple.iter().map(|&x| *group.element(x)).collect();
    let surjective = generates(p, &mats).unwrap_or(false);
    report.check("tuple generates PSL(2,p)", surjective);
    report.check("surjective flag", c.surjective == surjective);
    let tuple = report.attempt("tuple", GroupTuple::new(p, mats))?;
    let image = report.attempt("alpha evaluates", word_evaluate(&alpha, &tuple))?;
    report.check("alpha image matches", image.entries() == c.alpha_image);
    report.check("alpha image nontrivial", !image.is_identity());
    Some(alpha)
}

fn verify_theorem1(report: &mut VerificationReport, c: &Theorem1Json, seed: u64, config: &RecognitionConfig) {
    report.check("genus at least 3", c.g >= 3);
    let Some(p) = report.attempt("prime", Prime::new_enumerable(c.p)) else { return };
    let group = Psl2Group::new(p);
    let n = c.classes.len();
    report.check("class count", c.class_count == n);
    report.check("at least r classes", c.r >= 1 && n >= c.r);
    let shapes_ok = c.classes.iter().all(|t| t.len() == c.g && t.iter().all(|&x| (x as usize) < group.order()));
    if !report.check("class tuples well formed", shapes_ok) {
        return;
    }
    report.check("classes strictly increasing", c.classes.windows(2).all(|w| w[0] < w[1]));
    report.check("classes generate", c.classes.iter().all(|t| group.generates(t)));
    let Some(action) = report.attempt("PGL action", PglAction::new(&group)) else { return };
    report.check("classes canonical", c.classes.iter().all(|t| action.canonical(t) == *t));

    let Some(expected) = report.attempt("Nielsen generators", nielsen_generators(c.g)) else { return };
    let given: Vec<Option<FreeAutomorphism>> = c
        .generators
        .iter()
        .map(|a| {
            let parse = |ws: &[String]| ws.iter().map(|w| FreeWord::parse(c.g, w)).collect::<Result<Vec<_>>>();
            FreeAutomorphism::new(a.name.clone(), parse(&a.images).ok()?, parse(&a.inverse_images).ok()?).ok()
        })
        .collect();
    let same = given.len() == expected.len()
        && given.iter().zip(&expected).all(|(g, e)| g.as_ref().is_some_and(|g| g.images() == e.images()));
    report.check("generators are the Nielsen generators", same);
    if !report.check("one permutation per generator", c.permutations.len() == expected.len()) {
        return;
    }
    let mut perms = Vec::new();
    for (k, images) in c.permutations.iter().enumerate() {
        match Permutation::new(images.clone()) {
            Ok(perm) if perm.degree() == n => perms.push(perm),
            _ => {
                report.fail("permutations are bijections", format!("permutation {k}"));
                return;
            }
        }
    }
    report.check("permutations are bijections", true);
    let mut consistent = true;
    'outer: for (s, perm) in expected.iter().zip(&perms) {
        for (k, t) in c.classes.iter().enumerate() {
            let moved = GroupTuple::from_indices(&group, t);
            let Ok(image) = crate::freegrp::apply_automorphism(s, &moved) else {
                consistent = false;
                break 'outer;
            };
            let Ok(idx) = image.to_indices(&group) else {
                consistent = false;
                break 'outer;
            };
            if action.canonical(&idx) != c.classes[perm.apply(k as u32) as usize] {
                consistent = false;
                break 'outer;
            }
        }
    }
    report.check("permutations match the action on classes", consistent);

    let config = RecognitionConfig { seed: c.evidence.seed, ..*config };
    report.check("evidence seed recorded", c.evidence.seed == seed);
    match recognize_sym_alt(&perms, n, &config) {
        Ok(rec) => {
            report.check("recognized as symmetric", rec.kind == GroupKind::Symmetric && c.result == GroupKind::Symmetric);
            report.check("recognition evidence reproduces", rec.evidence == c.evidence);
        }
        Err(e) => {
            report.fail("recognized as symmetric", e.to_string());
        }
    }
    report.check(
        "statement",
        c.statement
            == format!(
                "stabilizer acts as the full symmetric group on R = {} >= r = {} classes (g = {}, p = {})",
                n, c.r, c.g, c.p
            ),
    );
}

fn verify_separability(report: &mut VerificationReport, c: &SeparabilityJson) {
    let Some(phi) = report.attempt("genus", HandlebodyEpi::standard(c.g)) else { return };
    let Some(f) = report.attempt("map is a valid automorphism", c.map.to_automorphism(c.g)) else { return };
    let Some(gamma) = report.attempt("gamma parses", parse_surface_word(c.g, &c.gamma)) else { return };
    let Some(image) = report.attempt("image parses", FreeWord::parse(c.g, &c.image)) else { return };
    report.check("gamma lies in the marking kernel", phi.in_delta(&gamma).unwrap_or(false));
    let recomputed = f.apply(&gamma).and_then(|w| phi.apply(&w));
    report.check("image of gamma matches", recomputed.as_ref() == Ok(&image));
    report.check("image leaves the marking kernel", !image.is_empty());
    report.check("witness rank", c.witness.n == c.g);
    if let Some(alpha) = verify_rf(report, &c.witness) {
        report.check("witness separates the image", alpha == image);
    }
}

/// Replays every invariant recorded in `cert`.
pub fn verify(cert: &Certificate, config: &RecognitionConfig) -> VerificationReport {
    let mut report = VerificationReport::default();
    report.check("schema version", cert.schema_version == SCHEMA_VERSION);
    match &cert.body {
        CertificateBody::RfWitness(c) => {
            verify_rf(&mut report, c);
        }
        CertificateBody::Theorem1(c) => verify_theorem1(&mut report, c, cert.seed, config),
        CertificateBody::Involve(c) => {
            report.check("order positive", c.order >= 1);
            report.check("requested classes equal the order", c.theorem1.r == c.order && c.theorem1.g == 3);
            verify_theorem1(&mut report, &c.theorem1, cert.seed, config);
        }
        CertificateBody::Separability(c) => verify_separability(&mut report, c),
    }
    report
}
