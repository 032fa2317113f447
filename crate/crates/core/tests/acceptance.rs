//! Acceptance suite. Every criterion prints one PASS or FAIL line and then
//! asserts. Run with `cargo test -p modquot-core --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modquot::cert::{verify, Certificate};
use modquot::defsub::{count_generating_tuples, enumerate_classes, DefiningContext, EnumerationConfig, DEFAULT_BUDGET};
use modquot::freegrp::{evaluate_indices, FreeWord};
use modquot::permgrp::{factorial, recognize_sym_alt, GroupKind, RecognitionConfig, RecognitionPath};
use modquot::psl2::{enumerate, Prime, Psl2Group};
use modquot::rfwitness::rf_witness;
use modquot::surface::{
    action_on_xphi, builtin_twist, builtin_twists, containment_check, induced_free_automorphism, nielsen_action,
    separability_witness, theorem1_certificate, ActionMode, HandlebodyEpi, PipelineConfig, SeparabilityOutcome,
    SurfaceGroup, Theorem1Outcome,
};
use modquot::Error;

const LIMIT_1: Duration = Duration::from_secs(1);
const LIMIT_2: Duration = Duration::from_secs(120);
const LIMIT_3: Duration = Duration::from_secs(600);
const LIMIT_4: Duration = Duration::from_secs(300);
const LIMIT_5: Duration = Duration::from_secs(120);

/// Free-action instances `(n, p, classes)`; class counts frozen after the
/// brute-force oracle in `oracles.rs` agreed with them.
const FREE_ACTION: [(usize, u32, usize); 3] = [(2, 5, 19), (3, 5, 1668), (2, 7, 57)];
/// Frozen outcome of the Nielsen action on X(F_3, PSL(2,5)).
const NIELSEN_KIND_3_5: GroupKind = GroupKind::Symmetric;
/// Frozen outcome of the genus-3, r = 2, pmax = 7 search: a certificate at p = 5.
const THEOREM1_PRIME: u32 = 5;
const RF_WORDS: usize = 100;
const RF_MAX_LEN: usize = 12;
const RF_PRIME_BOUND: u32 = 200;
const RF_SEED: u64 = 0x00f3_0004;
const DEHN_SAMPLES: usize = 200;
const DEHN_MAX_LEN: usize = 20;
const DEHN_SEED: u64 = 0x00de_0007;
/// Longest twist word used for the containment check.
const TWIST_WORD_LEN: usize = 4;
const WORKER_COUNTS: [usize; 2] = [1, 4];

fn report(criterion: u32, what: &str, ok: bool, detail: String) {
    println!("{} criterion {criterion}: {what} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion} failed: {what} ({detail})");
}

fn enum_config(workers: usize) -> EnumerationConfig {
    EnumerationConfig { workers, ..EnumerationConfig::default() }
}

fn pipeline(workers: usize) -> PipelineConfig {
    PipelineConfig { enumeration: enum_config(workers), recognition: RecognitionConfig::default() }
}

#[test]
fn criterion_1_group_orders() {
    let start = Instant::now();
    let mut got = Vec::new();
    for (p, want) in [(5, 60), (7, 168), (11, 660), (13, 1092)] {
        let prime = Prime::new(p).unwrap();
        let n = enumerate(prime).len();
        got.push((p, n, want, n == want && n == (p * (p * p - 1) / 2) as usize));
    }
    let elapsed = start.elapsed();
    let ok = got.iter().all(|g| g.3) && elapsed < LIMIT_1;
    report(1, "|PSL(2,p)| by enumeration", ok, format!("{:?} in {elapsed:?}", got.iter().map(|g| (g.0, g.1)).collect::<Vec<_>>()));
}

fn free_action_run(workers: usize) -> Vec<(usize, u32, usize, u64, Vec<u8>)> {
    FREE_ACTION
        .iter()
        .map(|&(n, p, _)| {
            let ctx = DefiningContext::new(p).unwrap();
            let table = enumerate_classes(&ctx, n, &enum_config(workers)).unwrap();
            let count = count_generating_tuples(ctx.group(), n, workers, DEFAULT_BUDGET).unwrap();
            (n, p, table.len(), count, table.to_bytes())
        })
        .collect()
}

#[test]
fn criterion_2_free_action_identity() {
    let start = Instant::now();
    let runs = free_action_run(4);
    let elapsed = start.elapsed();
    let mut ok = elapsed < LIMIT_2;
    let mut detail = Vec::new();
    for ((n, p, classes, count, _), &(_, _, frozen)) in runs.iter().zip(&FREE_ACTION) {
        let pgl = (*p as u64) * (*p as u64 * *p as u64 - 1);
        ok &= *count == *classes as u64 * pgl && *classes == frozen;
        detail.push(format!("({n},{p}): {count} = {classes}*{pgl}"));
    }
    report(2, "generating tuples = classes * |PGL(2,p)|", ok, format!("{} in {elapsed:?}", detail.join(", ")));
}

fn nielsen_run(workers: usize) -> (usize, modquot::Recognition) {
    let ctx = DefiningContext::new(5).unwrap();
    let table = enumerate_classes(&ctx, 3, &enum_config(workers)).unwrap();
    let (_, perms) = nielsen_action(&ctx, &table).unwrap();
    let rec = recognize_sym_alt(&perms, table.len(), &RecognitionConfig::default()).unwrap();
    (table.len(), rec)
}

#[test]
fn criterion_3_nielsen_action_rank3_p5() {
    let start = Instant::now();
    let (n, rec) = nielsen_run(4);
    let elapsed = start.elapsed();
    let full = factorial(n);
    let expected_order = match rec.kind {
        GroupKind::Symmetric => Some(full),
        GroupKind::Alternating => Some(full / 2u32),
        GroupKind::Other => None,
    };
    let path_ok = match rec.evidence.path {
        RecognitionPath::Exact => n <= 200,
        RecognitionPath::Giant => n > 200 && rec.evidence.jordan_prime.is_some() && rec.evidence.primitive == Some(true),
    };
    let ok = rec.kind == NIELSEN_KIND_3_5
        && expected_order.map(|o| o.to_string()) == rec.evidence.order
        && path_ok
        && elapsed < LIMIT_3;
    report(
        3,
        "Nielsen action on X(F_3, PSL(2,5)) is a giant of order N! or N!/2",
        ok,
        format!("N = {n}, {:?} via {:?} path, Jordan prime {:?}, {elapsed:?}", rec.kind, rec.evidence.path, rec.evidence.jordan_prime),
    );
}

fn random_reduced_word(rng: &mut ChaCha8Rng, rank: usize, max_len: usize) -> FreeWord {
    loop {
        let len = rng.gen_range(1..=max_len);
        let mut letters: Vec<i32> = Vec::with_capacity(len);
        while letters.len() < len {
            let g = rng.gen_range(1..=rank as i32);
            let l = if rng.gen_bool(0.5) { g } else { -g };
            if letters.last() != Some(&-l) {
                letters.push(l);
            }
        }
        let w = FreeWord::new(rank, &letters).unwrap();
        if !w.is_empty() {
            return w;
        }
    }
}

#[test]
fn criterion_4_rf_witnesses() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(RF_SEED);
    let mut failures = Vec::new();
    let mut max_prime = 0;
    for _ in 0..RF_WORDS {
        let alpha = random_reduced_word(&mut rng, 3, RF_MAX_LEN);
        match rf_witness(3, &alpha, RF_PRIME_BOUND) {
            Ok(c) => {
                max_prime = max_prime.max(c.prime.get());
                let json = Certificate::rf_witness(0, &c).to_json();
                let replayed = c.replay() && verify(&Certificate::from_json(&json).unwrap(), &RecognitionConfig::default()).passed();
                if !replayed {
                    failures.push(format!("{alpha}: replay"));
                }
            }
            Err(e) => failures.push(format!("{alpha}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < LIMIT_4;
    report(
        4,
        "rf witnesses for random words in F_3 with p <= 200",
        ok,
        format!("{RF_WORDS} words, largest prime {max_prime}, failures {failures:?}, {elapsed:?}"),
    );
}

#[test]
fn criterion_5_surface_validation() {
    let start = Instant::now();
    let mut checks = Vec::new();
    for g in [2, 3] {
        let surface = SurfaceGroup::new(g).unwrap();
        let twists = builtin_twists(g).unwrap();
        let valid = twists.len() == 2 * g + 1
            && twists.iter().all(|f| {
                let back = f.compose(&f.inverse()).unwrap();
                surface.is_relator_rotation(&f.apply(&surface.relator()).unwrap())
                    && back.images().iter().enumerate().all(|(k, w)| {
                        let x = FreeWord::generator(2 * g, k + 1).unwrap();
                        surface.is_trivial(&w.mul(&x.inverse()).unwrap()).unwrap()
                    })
            });
        checks.push((format!("twists valid at g={g}"), valid));
    }

    let ctx = DefiningContext::new(5).unwrap();
    let table = enumerate_classes(&ctx, 3, &enum_config(4)).unwrap();
    let phi = HandlebodyEpi::standard(3).unwrap();
    let meridians = ["twist_b1", "twist_b2"].map(|n| builtin_twist(3, n).unwrap());
    let identity = meridians.iter().all(|f| {
        [ActionMode::Fast, ActionMode::CrossCheck]
            .iter()
            .all(|&m| action_on_xphi(&ctx, &table, &phi, f, m).unwrap().is_identity())
    });
    checks.push(("meridian twists act trivially at (3,5)".into(), identity));

    let ta = builtin_twist(3, "twist_a1").unwrap();
    let flagged = induced_free_automorphism(&phi, &ta) == Err(Error::NotStabilizing { generator: "b1".into() });
    checks.push(("twist_a1 flagged NotStabilizing(b1)".into(), flagged));
    let witness = match separability_witness(3, &ta, 10_000, 4).unwrap() {
        SeparabilityOutcome::Witness(w) => {
            let cert = Certificate::separability(0, &w);
            w.replay().unwrap()
                && w.gamma == FreeWord::generator(6, 2).unwrap()
                && verify(&Certificate::from_json(&cert.to_json()).unwrap(), &RecognitionConfig::default()).passed()
        }
        SeparabilityOutcome::StabilizesInstead(_) => false,
    };
    checks.push(("complete separability witness for twist_a1".into(), witness));
    let elapsed = start.elapsed();
    let ok = checks.iter().all(|c| c.1) && elapsed < LIMIT_5;
    report(5, "surface twists, marking stabilizer and separability", ok, format!("{checks:?}, {elapsed:?}"));
}

fn theorem1_json(workers: usize) -> (Theorem1Outcome, Option<String>) {
    let cfg = pipeline(workers);
    let out = theorem1_certificate(3, 2, 7, &cfg).unwrap();
    let json = out.certificate().map(|c| Certificate::theorem1(cfg.recognition.seed, c).to_json());
    (out, json)
}

#[test]
fn criterion_6_theorem1_certificate() {
    let (out, json) = theorem1_json(4);
    let cert_ok = match (&out, &json) {
        (Theorem1Outcome::Certificate(c), Some(json)) => {
            c.prime == THEOREM1_PRIME
                && c.class_count() >= 2
                && c.replay(&RecognitionConfig::default()).unwrap()
                && verify(&Certificate::from_json(json).unwrap(), &RecognitionConfig::default()).passed()
        }
        _ => false,
    };
    let containment = containment_check(3, 5, TWIST_WORD_LEN, &pipeline(4)).unwrap();
    let ok = cert_ok && containment.all_contained && containment.words_checked > 0;
    report(
        6,
        "symmetric certificate for (g=3, r=2, pmax=7) and twist containment at (3,5)",
        ok,
        format!(
            "scanned {:?}; {} stabilizing twist words, contained {}, twist words alone give {:?}",
            out.scanned(),
            containment.words_checked,
            containment.all_contained,
            containment.twist.kind
        ),
    );
}

/// Homomorphisms from the genus-2 surface group to PSL(2,p), as images of
/// a1, b1, a2, b2.
fn surface_quotients(p: u32, count: usize, rng: &mut ChaCha8Rng) -> (Psl2Group, Vec<[u32; 4]>) {
    let group = Psl2Group::new(Prime::new(p).unwrap());
    let n = group.order() as u32;
    let comm = |x: u32, y: u32| group.mul(group.mul(x, y), group.mul(group.inverse(x), group.inverse(y)));
    let mut out = Vec::new();
    while out.len() < count {
        let (a1, b1, a2) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
        let target = group.inverse(comm(a1, b1));
        let choices: Vec<u32> = (0..n).filter(|&b2| comm(a2, b2) == target).collect();
        if !choices.is_empty() {
            out.push([a1, b1, a2, choices[rng.gen_range(0..choices.len())]]);
        }
    }
    (group, out)
}

#[test]
fn criterion_7_dehn_algorithm() {
    let mut rng = ChaCha8Rng::seed_from_u64(DEHN_SEED);
    let surface = SurfaceGroup::new(2).unwrap();
    let r = surface.relator();
    let mut disagreements = Vec::new();
    for _ in 0..DEHN_SAMPLES {
        let k = rng.gen_range(1..=3);
        let mut w = FreeWord::identity(4);
        for _ in 0..k {
            let u = random_reduced_word(&mut rng, 4, 8);
            let rel = if rng.gen_bool(0.5) { r.clone() } else { r.inverse() };
            w = w.mul(&rel.conjugate_by(&u).unwrap()).unwrap();
        }
        if !surface.is_trivial(&w).unwrap() {
            disagreements.push(format!("trivial word {w} reported nontrivial"));
        }
    }
    let quotients: Vec<_> = [5, 7].iter().map(|&p| surface_quotients(p, 40, &mut rng)).collect();
    let mut certified = 0;
    let mut tried = 0;
    while certified < DEHN_SAMPLES {
        tried += 1;
        let w = random_reduced_word(&mut rng, 4, DEHN_MAX_LEN);
        let survives = quotients
            .iter()
            .any(|(group, homs)| homs.iter().any(|h| evaluate_indices(group, &w, h) != group.identity()));
        if !survives {
            continue;
        }
        certified += 1;
        if surface.is_trivial(&w).unwrap() {
            disagreements.push(format!("nontrivial word {w} reported trivial"));
        }
    }
    report(
        7,
        "Dehn's algorithm on genus 2",
        disagreements.is_empty(),
        format!("{DEHN_SAMPLES} relator products, {certified} certified nontrivial words of {tried} drawn, disagreements {disagreements:?}"),
    );
}

#[test]
fn criterion_8_determinism() {
    let [w1, w4] = WORKER_COUNTS;
    let free = free_action_run(w1) == free_action_run(w4);
    let nielsen = nielsen_run(w1) == nielsen_run(w4);
    let (_, json1) = theorem1_json(w1);
    let (_, json4) = theorem1_json(w4);
    let thm = json1.is_some() && json1 == json4;
    report(
        8,
        "criteria 2, 3 and 6 are identical with 1 and 4 workers",
        free && nielsen && thm,
        format!("free action {free}, Nielsen recognition {nielsen}, certificate bytes {thm}"),
    );
}
