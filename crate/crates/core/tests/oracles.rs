//! Worked examples checked through the public API only.

use approx::assert_abs_diff_eq;
use dirty_mac::bounds::{
    binning_sum_bound, cap, common_interference_region, helper_rates, inner_doubly, k_user_bounds, outer_region,
    region_single_dirty, zeta_supremum, DoublyMode,
};
use dirty_mac::channel::{channel_output, draw_state, ChannelKind, CorrelatedInterference, InterferenceSpec, PowerConfig};
use dirty_mac::entropy::{diff_entropy, gaussian_entropy, mc_entropy, rate_of_spec, GridDensity, GridSettings};
use dirty_mac::lattice::{is_nested, Lattice, NestingWitness};
use dirty_mac::region::{HalfPlane, RatePair};
use dirty_mac::schemes::{build_preset, encode, simulate_stage, PresetKind, SimRequest};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pc(p1: f64, p2: f64, n: f64) -> PowerConfig {
    PowerConfig::new(p1, p2, n).unwrap()
}

fn settings() -> GridSettings {
    GridSettings { bins: 1 << 14, unwrapped_check: false }
}

#[test]
fn quantizer_and_modulo_examples() {
    let two = Lattice::scalar(2.0).unwrap();
    assert_eq!(two.nearest_point(&[2.7]).unwrap().point, vec![2.0]);
    assert_eq!(two.nearest_point(&[1.0]).unwrap().point, vec![0.0]);
    assert_eq!(Lattice::integer(2).unwrap().nearest_point(&[0.6, -1.4]).unwrap().coords, vec![1, -1]);
    assert_abs_diff_eq!(two.mod_lattice(&[2.7]).unwrap()[0], 0.7, epsilon = 1e-12);
    assert_abs_diff_eq!(two.mod_lattice(&[-5.05]).unwrap()[0], 0.95, epsilon = 1e-12);
    assert_eq!(two.second_moment(), Some(1.0 / 3.0));
    assert_eq!(is_nested(&Lattice::scalar(4.0).unwrap(), &two).unwrap(), Some(NestingWitness::Scale(2)));
    assert_eq!(is_nested(&Lattice::scalar(3.0).unwrap(), &two).unwrap(), None);
    assert!(is_nested(&two, &two.scaled(0.5).unwrap()).unwrap().is_some());
}

#[test]
fn channel_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    assert_eq!(draw_state(&InterferenceSpec::Gaussian { variance: 0.0 }, 5, &mut rng).unwrap(), vec![0.0; 5]);
    let fixed = InterferenceSpec::FixedSequence(vec![1.0, 2.0, 3.0]);
    assert_eq!(draw_state(&fixed, 3, &mut rng).unwrap(), vec![1.0, 2.0, 3.0]);
    let s = draw_state(&InterferenceSpec::Gaussian { variance: 1e4 }, 100_000, &mut rng).unwrap();
    let var = s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64;
    assert!((var / 1e4 - 1.0).abs() < 0.03, "{var}");
    let y = channel_output(ChannelKind::SingleDirty, &[&[1.0], &[2.0]], &[&[3.0]], &[0.5]).unwrap();
    assert_eq!(y, vec![6.5]);
    let y = channel_output(ChannelKind::DoublyDirty, &[&[1.0], &[2.0]], &[&[0.0], &[0.0]], &[0.0]).unwrap();
    assert_eq!(y, vec![3.0]);
    let d = CorrelatedInterference::new(2.0, 2.0, 0.5).unwrap().decompose();
    let cov = d.covariance();
    assert_abs_diff_eq!(cov[0][0], 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(cov[0][1], 2.0, epsilon = 1e-12);
}

#[test]
fn encoder_examples() {
    let two = Lattice::scalar(2.0).unwrap();
    assert_abs_diff_eq!(encode(&[0.3], &[5.45], &[0.1], 1.0, &two).unwrap()[0], 0.95, epsilon = 1e-12);
    assert_eq!(encode(&[0.3], &[0.0], &[0.0], 0.37, &two).unwrap(), vec![0.3]);
}

#[test]
fn preset_predictions() {
    let helper = build_preset(&PresetKind::Thm3Helper, pc(4.0, 1.0, 1.0)).unwrap();
    assert_abs_diff_eq!(helper.cfg.alpha2, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(helper.stages[0].predicted, 0.5, epsilon = 1e-12);
    assert!(build_preset(&PresetKind::Thm3Helper, pc(3.9, 1.0, 1.0)).is_err());
    let sym = build_preset(&PresetKind::SymmetricMmse, pc(1.0, 1.0, 1.0)).unwrap();
    assert_abs_diff_eq!(sym.cfg.alpha_r, 2.0 / 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sym.stages[0].predicted, 0.5 * 1.5f64.log2(), epsilon = 1e-12);
    let common = build_preset(&PresetKind::Common, pc(1.0, 1.0, 1.0)).unwrap();
    assert_abs_diff_eq!(common.stages[0].predicted, 0.5 * 1.5f64.log2(), epsilon = 1e-12);
    assert_abs_diff_eq!(common.stages[1].predicted, 0.5, epsilon = 1e-12);
}

#[test]
fn bound_examples() {
    let outer = outer_region(ChannelKind::DoublyDirty, &pc(1.0, 1.0, 1.0)).unwrap();
    assert_abs_diff_eq!(outer.max_sum(), 0.5, epsilon = 1e-12);
    let single = outer_region(ChannelKind::SingleDirty, &pc(3.0, 1.0, 1.0)).unwrap();
    assert!(single.constraints.contains(&HalfPlane::r2(0.5)));
    assert!(single.constraints.contains(&HalfPlane::sum(1.0)));
    let inside = 0.5 * 4.5f64.log2();
    assert_abs_diff_eq!(inside, 1.0850, epsilon = 1e-4);
    assert!(inner_doubly(&pc(4.0, 4.0, 1.0), DoublyMode::Symmetric).unwrap() >= inside - 1e-12);
    let (sup, _) = zeta_supremum();
    assert_abs_diff_eq!(sup.gap, 0.167, epsilon = 1e-3);
    assert_abs_diff_eq!(sup.snr, 1.155, epsilon = 5e-3);
    let h = helper_rates(&pc(1.0, 1.0, 1.0)).unwrap();
    assert_abs_diff_eq!(h.inner_raw, cap(0.8), epsilon = 1e-12);
    assert_abs_diff_eq!(h.outer, 0.5, epsilon = 1e-12);
    let exact = helper_rates(&pc(2.0, 3.0, 1.0)).unwrap();
    assert_abs_diff_eq!(exact.inner_raw, exact.outer, epsilon = 1e-12);
    let k = k_user_bounds(4, 10.0, 1.0).unwrap();
    assert_abs_diff_eq!(k.inner_raw, 0.5 * 10.25f64.log2(), epsilon = 1e-12);
    assert_abs_diff_eq!(k.outer, 1.7297, epsilon = 1e-4);
    let small = binning_sum_bound(1.0, 1.0, 1e-3, 1e-3, 1.0).unwrap();
    let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
    assert_abs_diff_eq!(small, 0.5 * (2000.0 / (two_pi_e * two_pi_e)).log2(), epsilon = 1e-12);
    assert_eq!(binning_sum_bound(1.0, 1.0, 1e6, 1e6, 1.0).unwrap(), 0.0);
}

#[test]
fn region_examples() {
    let mac = common_interference_region(&pc(1.0, 1.0, 1.0)).unwrap();
    let corner = RatePair::new(0.5 * 1.5f64.log2(), 0.5);
    assert!(mac.vertices.iter().any(|v| (v.r1 - corner.r1).abs() < 1e-12 && (v.r2 - corner.r2).abs() < 1e-12));
    assert!(mac.vertices.iter().any(|v| (v.r2 - corner.r1).abs() < 1e-12 && (v.r1 - corner.r2).abs() < 1e-12));
    assert_abs_diff_eq!(mac.max_sum(), 0.5 * 3f64.log2(), epsilon = 1e-12);
    let alphas: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
    let r = region_single_dirty(&pc(5.0, 1.0, 1.0), &alphas).unwrap();
    assert_abs_diff_eq!(r.star.sum(), cap(5.0), epsilon = 1e-12);
    let circ = r.circ.unwrap();
    assert_abs_diff_eq!(circ.r1, 0.5 * (5.0f64 / 2.0).log2(), epsilon = 1e-12);
    assert_abs_diff_eq!(circ.r2, cap(1.0), epsilon = 1e-12);
    let tri = region_single_dirty(&pc(1.0, 3.0, 1.0), &alphas).unwrap();
    assert!(tri.sum_line_only);
    assert_abs_diff_eq!(tri.region.max_sum(), cap(1.0), epsilon = 1e-9);
}

#[test]
fn entropy_examples() {
    let h = 1.0 / 4096.0;
    assert_abs_diff_eq!(diff_entropy(&GridDensity::uniform(2.0, h).unwrap()).unwrap(), 1.0, epsilon = 1e-3);
    assert_abs_diff_eq!(diff_entropy(&GridDensity::gaussian(1.0, h).unwrap()).unwrap(), 2.0471, epsilon = 1e-4);
    assert_abs_diff_eq!(gaussian_entropy(1.0), 2.0471, epsilon = 1e-4);
    let wrapped = GridDensity::gaussian(1.0, h).unwrap().wrap(1.0).unwrap();
    let hw = diff_entropy(&wrapped).unwrap();
    assert!(hw < 0.0 && hw < gaussian_entropy(1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = draw_state(&InterferenceSpec::Gaussian { variance: 1.0 }, 200_000, &mut rng).unwrap();
    assert_abs_diff_eq!(mc_entropy(&u, 1024, None).unwrap(), 2.047, epsilon = 0.01);
}

#[test]
fn rate_examples() {
    let thm2 = build_preset(&PresetKind::Thm2 { dithered: true }, pc(10.0, 10.0, 1.0)).unwrap();
    let r = rate_of_spec(&thm2.stages[0].spec, settings()).unwrap();
    let floor = 0.5 * 10f64.log2() - 0.5 * (std::f64::consts::PI * std::f64::consts::E / 6.0).log2();
    assert!(r.rate > floor, "{} ≤ {floor}", r.rate);
    let sym = build_preset(&PresetKind::SymmetricMmse, pc(4.0, 4.0, 1.0)).unwrap();
    let r = rate_of_spec(&sym.stages[0].spec, settings()).unwrap();
    assert!(r.rate >= 0.8303 - 1e-4, "{}", r.rate);
    let sim = simulate_stage(&sym, 0, &SimRequest::new(400_000, 9, &sym)).unwrap();
    let support = Some((-sim.wrap / 2.0, sim.wrap / 2.0));
    let mc = mc_entropy(&sim.noise, 1024, support).unwrap();
    assert_abs_diff_eq!(mc, r.h_noise, epsilon = 0.01);
}
