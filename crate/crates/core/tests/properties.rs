use std::collections::BTreeSet;

use fsd_core::approx::{find_closest_fast, find_closest_oracle, Lattices, TargetCf};
use fsd_core::fsd::{
    bs_sequence, fsd_sequence, reduced_farey, reduced_farey_by_pairs, verify_theorems,
    AccuracyLevel,
};
use fsd_core::hydro::{flux_profile, reynolds, ChannelSpec, FluidProps};
use fsd_core::layout::{
    emit_description, emit_schematic, parse_description, ArmOrder, NetworkModel,
};
use fsd_core::mixplan::{
    decode, inlet_states, make_plan, make_plan_in, replay_tree, throughput_options,
};
use fsd_core::rational::{farey_by_enumeration, farey_neighbors_check, farey_sequence, Fraction};
use num_integer::Integer;
use num_traits::Signed;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lvl(n: u32) -> AccuracyLevel {
    AccuracyLevel::new(n).unwrap()
}

fn totient(m: u64) -> u64 {
    (1..=m).filter(|k| k.gcd(&m) == 1).count() as u64
}

// Brute force: all b/d pairs, minimum numerator in each half gap, ties to the smaller denominator.
fn fsd_reference(n: u32) -> Vec<(u64, u64)> {
    let base = 1u64 << n;
    let cap = base - 1;
    let mut rf = BTreeSet::new();
    for a in 0..=cap {
        for b in 0..=cap {
            if a + b > 0 {
                let g = a.gcd(&(a + b));
                rf.insert((a / g, (a + b) / g));
            }
        }
    }
    let less = |x: (u64, u64), y: (u64, u64)| x.0 * y.1 < y.0 * x.1;
    let mut out: Vec<(u64, u64)> = (0..=base)
        .map(|k| {
            let g = k.gcd(&base);
            (k / g, base / g)
        })
        .collect();
    for k in 0..base {
        let lo = (2 * k, 2 * base);
        let mid = (2 * k + 1, 2 * base);
        let hi = (2 * k + 2, 2 * base);
        for (a, b) in [(lo, mid), (mid, hi)] {
            let best = rf
                .iter()
                .filter(|&&x| less(a, x) && less(x, b))
                .min_by_key(|&&(p, q)| (p, q));
            if let Some(&x) = best {
                out.push(x);
            }
        }
    }
    out.sort_by(|x, y| (x.0 * y.1).cmp(&(y.0 * x.1)));
    out.dedup();
    out
}

fn pairs(elems: &[Fraction]) -> Vec<(u64, u64)> {
    elems.iter().map(|f| f.to_u64_pair().unwrap()).collect()
}

#[test]
fn farey_cardinality_is_totient_sum() {
    for m in 1..=64u64 {
        let expected = 1 + (1..=m).map(totient).sum::<u64>();
        assert_eq!(farey_sequence(m).unwrap().len() as u64, expected, "m={m}");
    }
}

#[test]
fn farey_orders_nest() {
    for m in 1..64u64 {
        let small: BTreeSet<_> = pairs(&farey_sequence(m).unwrap().elems)
            .into_iter()
            .collect();
        let big: BTreeSet<_> = pairs(&farey_sequence(m + 1).unwrap().elems)
            .into_iter()
            .collect();
        assert!(small.is_subset(&big), "m={m}");
    }
}

#[test]
fn farey_neighbor_identity_to_100() {
    for m in 1..=100 {
        assert!(
            farey_neighbors_check(&farey_sequence(m).unwrap().elems),
            "m={m}"
        );
    }
}

#[test]
fn farey_recurrence_matches_enumeration() {
    for m in (1..=64).chain([100, 128, 200, 256]) {
        assert_eq!(
            farey_sequence(m).unwrap(),
            farey_by_enumeration(m).unwrap(),
            "m={m}"
        );
    }
}

#[test]
fn reduced_farey_routes_agree() {
    for n in 1..=8 {
        assert_eq!(
            reduced_farey(lvl(n)),
            reduced_farey_by_pairs(lvl(n)),
            "n={n}"
        );
    }
}

#[test]
fn fsd_matches_brute_force() {
    for n in 1..=6 {
        assert_eq!(
            pairs(fsd_sequence(lvl(n)).elems()),
            fsd_reference(n),
            "n={n}"
        );
    }
}

#[test]
fn fsd_theorems_and_gap() {
    for n in 2..=10 {
        let seq = fsd_sequence(lvl(n));
        let report = verify_theorems(&seq).unwrap();
        assert!(report.all_passed(), "n={n}: {:?}", report.checks);
        assert!(report.closed_form_matches(), "n={n}");
        assert!(seq.max_gap() <= Fraction::from_u64(1, 1 << n), "n={n}");
        let bs = bs_sequence(lvl(n));
        assert!(bs.elems().iter().all(|x| seq.contains(x)));
    }
}

#[test]
fn fast_search_agrees_on_lattice_and_midpoints() {
    for n in 1..=8 {
        let seq = fsd_sequence(lvl(n));
        for x in seq.elems() {
            let t = TargetCf::from_fraction(x.clone()).unwrap();
            assert_eq!(find_closest_fast(&t, &seq), find_closest_oracle(&t, &seq));
        }
        for w in seq.elems().windows(2) {
            let t = TargetCf::from_fraction(w[0].midpoint(&w[1])).unwrap();
            let fast = find_closest_fast(&t, &seq);
            assert_eq!(fast, find_closest_oracle(&t, &seq));
            assert_eq!(fast.chosen, w[0]);
        }
    }
}

#[test]
fn bs_error_bounded_by_half_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=8u32 {
        let lattices = Lattices::new(lvl(n));
        let bound = Fraction::from_u64(1, 1 << (n + 1));
        for _ in 0..2000 {
            let q = rng.gen_range(1..=1_000_000u64);
            let t = TargetCf::from_fraction(Fraction::from_u64(rng.gen_range(0..=q), q)).unwrap();
            let cmp = lattices.compare(&t);
            assert!(cmp.bs.abs_error() <= *bound.as_ratio());
            assert!(cmp.fsd_dominates());
        }
    }
}

#[test]
fn every_plan_replays_for_small_levels() {
    for n in 1..=8 {
        let seq = fsd_sequence(lvl(n));
        for cf in seq.elems() {
            let plan = make_plan(cf, lvl(n)).unwrap();
            assert_eq!(&replay_tree(&plan.tree).unwrap(), cf);
            assert!(plan.tree.is_split_free());
            assert!(plan.sample_units <= lvl(n).max_units());
            assert!(plan.buffer_units <= lvl(n).max_units());
            let states = inlet_states(&plan);
            assert!(states.is_complementary());
            assert_eq!(decode(&states.sample_mix), plan.sample_units);
            assert_eq!(decode(&states.buffer_mix), plan.buffer_units);
        }
    }
}

#[test]
fn throughput_closure_and_maximality() {
    let n = lvl(6);
    for cf in fsd_sequence(n).elems() {
        let opts = throughput_options(cf, n).unwrap();
        assert!(!opts.is_empty());
        for o in &opts {
            assert!(o.a <= 63 && o.b <= 63);
            assert_eq!(o.rate, o.a + o.b);
            assert_eq!(&Fraction::from_u64(o.a, o.a + o.b), cf);
        }
        let last = opts.last().unwrap();
        let (a, b) = (opts[0].a, opts[0].b);
        assert!(last.a + a > 63 || last.b + b > 63);
    }
}

#[test]
fn flux_conserves_units() {
    let n = lvl(6);
    let spec = ChannelSpec::new(n);
    for cf in fsd_sequence(n).elems() {
        let plan = make_plan(cf, n).unwrap();
        let profile = flux_profile(&inlet_states(&plan), &spec).unwrap();
        assert_eq!(profile.final_units(), plan.total_units());
        assert_eq!(profile.final_sample_units(), plan.sample_units);
        assert_eq!(profile.output_cf().as_ref(), Some(cf));
        assert!(profile.is_monotone());
    }
}

fn random_model(rng: &mut ChaCha8Rng) -> NetworkModel {
    let n = rng.gen_range(1..=8u32);
    let bits = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.gen_bool(0.5)).collect::<Vec<_>>();
    let (s, b) = (bits(rng), bits(rng));
    let order = if rng.gen_bool(0.5) {
        ArmOrder::Alternating
    } else {
        ArmOrder::SampleFirst
    };
    let states = fsd_core::mixplan::InletStates::from_mix_bits(&s, &b);
    NetworkModel::from_states(lvl(n), &states, order).unwrap()
}

#[test]
fn layout_round_trips_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let model = random_model(&mut rng);
        let text = emit_description(&model);
        let back = parse_description(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(emit_description(&back), text);
        assert_eq!(emit_schematic(&model), emit_schematic(&back));
    }
}

#[test]
fn schematic_port_colors_follow_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let model = random_model(&mut rng);
        let svg = emit_schematic(&model);
        let mix_green = svg.matches("class=\"port mix").count();
        assert_eq!(mix_green, 2 * model.n.get() as usize);
        let open = svg
            .lines()
            .filter(|l| l.contains("class=\"port mix") && l.contains("fill=\"green\""))
            .count();
        assert_eq!(open, model.open_mix_ports());
    }
}

proptest! {
    #[test]
    fn fast_equals_oracle(n in 1u32..=8, p in 0u64..=1_000_000, q in 1u64..=1_000_000) {
        let (p, q) = if p > q { (q, p.max(1)) } else { (p, q) };
        let seq = fsd_sequence(lvl(n));
        let t = TargetCf::from_fraction(Fraction::from_u64(p, q)).unwrap();
        let fast = find_closest_fast(&t, &seq);
        prop_assert_eq!(&fast, &find_closest_oracle(&t, &seq));
        prop_assert!(!fast.fell_back);
    }

    #[test]
    fn approximation_error_is_minimal(n in 1u32..=6, p in 0u64..=5000, q in 1u64..=5000) {
        let (p, q) = if p > q { (q, p.max(1)) } else { (p, q) };
        let seq = fsd_sequence(lvl(n));
        let t = TargetCf::from_fraction(Fraction::from_u64(p, q)).unwrap();
        let got = find_closest_fast(&t, &seq);
        for x in seq.elems() {
            prop_assert!(got.abs_error() <= x.signed_diff(&t.value).abs());
        }
    }

    #[test]
    fn reynolds_scales_linearly(rho in 1.0f64..2000.0, u in 1e-6f64..1.0, l in 1e-6f64..1e-2, mu in 1e-4f64..1.0, k in 1.0f64..100.0) {
        let base = reynolds(&FluidProps::new(rho, mu).unwrap(), u, l).unwrap();
        let scaled = reynolds(&FluidProps::new(rho * k, mu).unwrap(), u, l).unwrap();
        prop_assert!((scaled - k * base).abs() <= 1e-9 * scaled.abs());
        let thinner = reynolds(&FluidProps::new(rho, mu * k).unwrap(), u, l).unwrap();
        prop_assert!((thinner * k - base).abs() <= 1e-9 * base.abs());
    }

    #[test]
    fn ladder_ratios_replay_exactly(n in 1u32..=7, a in 0u64..128, b in 0u64..128) {
        let cap = lvl(n).max_units();
        let (a, b) = (a % (cap + 1), b % (cap + 1));
        prop_assume!(a + b > 0);
        let cf = Fraction::from_u64(a, a + b);
        let plan = make_plan_in(&cf, &reduced_farey(lvl(n))).unwrap();
        prop_assert_eq!(replay_tree(&plan.tree).unwrap(), cf);
    }
}
