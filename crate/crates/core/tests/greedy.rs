mod common;

use std::collections::BTreeSet;

use bierstar::baselines::{greedy_walk, GreedyVariant};
use bierstar::graph::Failures;
use bierstar::orbit::{Constellation, ShellSpec, Snapshot};
use bierstar::protocol::DEFAULT_TTL;
use bierstar::simcore::bier_star_delivery;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn linked(snap: &Snapshot, a: usize, b: usize) -> bool {
    snap.graph().edges().iter().any(|e| (e.a, e.b) == (a, b) || (e.a, e.b) == (b, a))
}

/// On a polar Walker Star the counter-rotating seam and the polar gaps
/// strand pure greedy even though a detour exists.
#[test]
fn pure_greedy_stalls_on_star_constellation() {
    let snap = Constellation::build_walker(ShellSpec::oneweb_like()).unwrap().propagate(0.0).unwrap();
    let none = Failures::none();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut stuck_but_connected = 0;
    for _ in 0..200 {
        let p = sample(&mut rng, snap.len(), 2);
        let (src, dst) = (p.index(0), p.index(1));
        let (s, d) = (snap.id_of(src), snap.id_of(dst));
        match greedy_walk(GreedyVariant::PureGreedy, src, dst, &snap, &none, DEFAULT_TTL) {
            Ok(path) => {
                assert_eq!(path.first(), Some(&src));
                assert_eq!(path.last(), Some(&dst));
                assert!(path.windows(2).all(|w| linked(&snap, w[0], w[1])));
                assert!(path.len() as u32 <= DEFAULT_TTL + 1);
            }
            Err(_) => {
                if reachable(&snap, src, &none).contains(&dst) {
                    stuck_but_connected += 1;
                    let out =
                        bier_star_delivery(&snap, &none, s, &BTreeSet::from([d]), 4, 1, DEFAULT_TTL).unwrap();
                    assert!(out.report.delivered.contains_key(&d), "{s} -> {d}");
                }
            }
        }
    }
    assert!(stuck_but_connected > 0);
}

#[test]
fn pure_greedy_steps_strictly_closer() {
    let snap = Constellation::build_walker(ShellSpec::starlink_like()).unwrap().propagate(60.0).unwrap();
    let none = Failures::none();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let p = sample(&mut rng, snap.len(), 2);
        let target = snap.sat(p.index(1)).subpoint;
        if let Ok(path) =
            greedy_walk(GreedyVariant::PureGreedy, p.index(0), p.index(1), &snap, &none, 200)
        {
            let d: Vec<f64> = path.iter().map(|&ix| snap.ground_distance_km(ix, &target)).collect();
            assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
        }
    }
}
