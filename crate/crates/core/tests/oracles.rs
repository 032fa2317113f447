//! Independent oracles for the frozen regression values, and the worked
//! examples of each module.

use std::collections::{BTreeSet, HashMap, VecDeque};

use modquot::defsub::{
    class_of, enumerate_classes, out_action, ClassTable, DefiningContext, EnumerationConfig, Strategy,
};
use modquot::freegrp::{nielsen_generators, FreeAutomorphism, FreeWord, GroupTuple};
use modquot::permgrp::compose;
use modquot::psl2::{enumerate, generates, Prime, ProjectiveMatrix, Psl2Group};
use modquot::rfwitness::{
    excluded_primes, matrix_of_word, out_rf_witness, rf_witness, schreier_embedding, IntegerMatrix,
};
use modquot::surface::{format_surface_word, parse_surface_word, SurfaceGroup};
use modquot::Error;

/// Every invertible 2x2 matrix mod p.
fn gl2(p: u32) -> Vec<[u32; 4]> {
    let mut out = Vec::new();
    for a in 0..p {
        for b in 0..p {
            for c in 0..p {
                for d in 0..p {
                    if !(a * d + p * p - b * c % p).is_multiple_of(p) {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

/// Orbits of generating pairs under conjugation by all of GL(2,p), found by
/// breadth-first search over matrices rather than canonical forms.
fn brute_force_pair_orbits(p: u32) -> Vec<usize> {
    let prime = Prime::new(p).unwrap();
    let elems = enumerate(prime);
    let conj = gl2(p);
    let mut seen: HashMap<(ProjectiveMatrix, ProjectiveMatrix), usize> = HashMap::new();
    let mut sizes = Vec::new();
    for x in &elems {
        for y in &elems {
            if seen.contains_key(&(*x, *y)) || !generates(prime, &[*x, *y]).unwrap() {
                continue;
            }
            let id = sizes.len();
            let mut size = 0;
            let mut queue = VecDeque::from([(*x, *y)]);
            seen.insert((*x, *y), id);
            while let Some((u, v)) = queue.pop_front() {
                size += 1;
                for g in &conj {
                    let next = (u.conjugate_by(*g).unwrap(), v.conjugate_by(*g).unwrap());
                    if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(next) {
                        e.insert(id);
                        queue.push_back(next);
                    }
                }
            }
            sizes.push(size);
        }
    }
    sizes
}

#[test]
fn brute_force_class_count_at_rank_2_prime_5() {
    let sizes = brute_force_pair_orbits(5);
    assert_eq!(sizes.len(), 19);
    assert!(sizes.iter().all(|&s| s == 120));
    let ctx = DefiningContext::new(5).unwrap();
    assert_eq!(enumerate_classes(&ctx, 2, &EnumerationConfig::default()).unwrap().len(), 19);
}

/// Automorphisms of a group given by a multiplication table, counted as the
/// pairs that a fixed generating pair can be sent to.
fn automorphism_count(group: &Psl2Group) -> usize {
    let n = group.order() as u32;
    let (x, y) = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).find(|&(a, b)| group.generates(&[a, b])).unwrap();
    let mut count = 0;
    for x2 in 0..n {
        for y2 in 0..n {
            let mut image = vec![u32::MAX; n as usize];
            image[group.identity() as usize] = group.identity();
            let mut queue = VecDeque::from([group.identity()]);
            let mut consistent = true;
            'bfs: while let Some(z) = queue.pop_front() {
                for (s, s2) in [(x, x2), (y, y2)] {
                    let (w, w2) = (group.mul(z, s), group.mul(image[z as usize], s2));
                    if image[w as usize] == u32::MAX {
                        image[w as usize] = w2;
                        queue.push_back(w);
                    } else if image[w as usize] != w2 {
                        consistent = false;
                        break 'bfs;
                    }
                }
            }
            if consistent && image.iter().collect::<BTreeSet<_>>().len() == n as usize {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn automorphism_group_of_a5_has_order_120() {
    let group = Psl2Group::new(Prime::new(5).unwrap());
    assert_eq!(automorphism_count(&group), 120);
    let ctx = DefiningContext::new(5).unwrap();
    assert_eq!(ctx.automorphism_count(), 120);
    let maps: BTreeSet<Vec<u32>> =
        (0..120).map(|h| (0..60).map(|x| ctx.apply_aut(h, x)).collect()).collect();
    assert_eq!(maps.len(), 120);
}

#[test]
fn strategies_and_prefilter_agree() {
    for (n, p) in [(2, 5), (3, 5), (2, 7)] {
        let ctx = DefiningContext::new(p).unwrap();
        let tables: Vec<ClassTable> = [(Strategy::Full, true), (Strategy::Pruned, true), (Strategy::Pruned, false)]
            .iter()
            .map(|&(strategy, prefilter)| {
                let cfg = EnumerationConfig { strategy, prefilter, workers: 2, ..EnumerationConfig::default() };
                enumerate_classes(&ctx, n, &cfg).unwrap()
            })
            .collect();
        assert!(tables.windows(2).all(|w| w[0] == w[1]), "({n},{p})");
    }
}

#[test]
fn cache_file_round_trip_is_byte_identical() {
    let ctx = DefiningContext::new(7).unwrap();
    let table = enumerate_classes(&ctx, 2, &EnumerationConfig::default()).unwrap();
    let path = std::env::temp_dir().join(format!("modquot-oracle-{}.bin", std::process::id()));
    table.save(&path).unwrap();
    let back = ClassTable::load(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(back, table);
    assert_eq!(back.to_bytes(), bytes);
}

#[test]
fn out_action_at_rank_3_prime_5() {
    let ctx = DefiningContext::new(5).unwrap();
    let table = enumerate_classes(&ctx, 3, &EnumerationConfig::default()).unwrap();
    let gens = nielsen_generators(3).unwrap();
    let perms: Vec<_> = gens.iter().map(|s| out_action(&ctx, &table, s).unwrap()).collect();
    assert!(perms.iter().all(|p| p.degree() == table.len()));
    assert!(out_action(&ctx, &table, &FreeAutomorphism::identity(3)).unwrap().is_identity());
    for w in ["x1", "x2.X3", "x1.x2.x3"] {
        let inner = FreeAutomorphism::conjugation(&FreeWord::parse(3, w).unwrap());
        assert!(out_action(&ctx, &table, &inner).unwrap().is_identity(), "{w}");
    }
    for (i, s) in gens.iter().enumerate() {
        for (j, t) in gens.iter().enumerate() {
            let st = s.compose(t).unwrap();
            assert_eq!(out_action(&ctx, &table, &st).unwrap(), compose(&perms[i], &perms[j]).unwrap());
        }
    }
    for k in [0, 17, table.len() - 1] {
        let canon = table.canon(k);
        assert_eq!(class_of(&ctx, &table, canon).unwrap(), k);
        for t in ctx.orbit(canon).iter().step_by(37) {
            assert_eq!(class_of(&ctx, &table, t).unwrap(), k);
        }
    }
}

#[test]
fn rank_one_has_no_classes() {
    let ctx = DefiningContext::new(5).unwrap();
    assert!(enumerate_classes(&ctx, 1, &EnumerationConfig::default()).unwrap().is_empty());
}

#[test]
fn integer_matrix_examples() {
    let comm = FreeWord::parse(2, "x1.x2.X1.X2").unwrap();
    let m = matrix_of_word(&comm).unwrap();
    assert_eq!(m, IntegerMatrix::from_i64(21, -8, 8, -3));
    assert_eq!(excluded_primes(&m).unwrap().primes_up_to(100), vec![2]);
    assert_eq!(excluded_primes(&IntegerMatrix::identity()), Err(Error::MatrixIsIdentity));
    let e4 = schreier_embedding(4).unwrap();
    let words: Vec<String> = e4.words().iter().map(|w| w.to_string()).collect();
    assert_eq!(words, ["x1.x1.x1", "x2", "x1.x2.X1", "x1.x1.x2.X1.X1"]);
}

#[test]
fn rf_witness_examples() {
    let c = rf_witness(2, &FreeWord::parse(2, "x1.x2.X1.X2").unwrap(), 1000).unwrap();
    assert_eq!((c.prime.get(), c.alpha_image.entries()), (5, [1, 2, 3, 2]));
    let c = rf_witness(3, &FreeWord::parse(3, "x1").unwrap(), 1000).unwrap();
    assert_eq!(c.prime.get(), 5);
    let entries: Vec<[u32; 4]> = c.tuple.entries().iter().map(|m| m.entries()).collect();
    assert_eq!(entries, [[1, 4, 0, 1], [1, 0, 2, 1], [0, 2, 2, 2]]);
    assert!(c.surjective && c.replay());
    assert_eq!(rf_witness(2, &FreeWord::identity(2), 1000), Err(Error::TrivialWord));
}

#[test]
fn out_rf_witness_examples() {
    let cfg = EnumerationConfig::default();
    let transvect = nielsen_generators(3).unwrap().into_iter().find(|s| s.name() == "transvect").unwrap();
    assert_eq!(out_rf_witness(3, &transvect, 7, &cfg).unwrap().map(|w| w.prime), Some(5));
    assert_eq!(out_rf_witness(3, &FreeAutomorphism::identity(3), 5, &cfg).unwrap(), None);
    let inner = FreeAutomorphism::conjugation(&FreeWord::parse(3, "x1").unwrap());
    assert_eq!(out_rf_witness(3, &inner, 5, &cfg).unwrap(), None);
}

#[test]
fn commutator_of_one_handle_is_nontrivial() {
    let surface = SurfaceGroup::new(2).unwrap();
    let w = parse_surface_word(2, "a1.b1.A1.B1").unwrap();
    assert!(!surface.is_trivial(&w).unwrap());
    // a1 -> x, b1 -> y, a2 -> y, b2 -> x respects the relator and keeps [a1,b1] alive.
    let p = Prime::new(5).unwrap();
    let x = ProjectiveMatrix::new(p, 1, 1, 0, 1).unwrap();
    let y = ProjectiveMatrix::new(p, 1, 0, 1, 1).unwrap();
    let hom = GroupTuple::new(p, vec![x, y, y, x]).unwrap();
    let eval = |s: &str| modquot::freegrp::word_evaluate(&parse_surface_word(2, s).unwrap(), &hom).unwrap();
    assert!(eval(&format_surface_word(&surface.relator())).is_identity());
    assert!(!eval("a1.b1.A1.B1").is_identity());
}
