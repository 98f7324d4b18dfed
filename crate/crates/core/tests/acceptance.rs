//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every tolerance used below is a named constant in this file.

use std::process::ExitCode;
use std::time::Instant;

use dirty_mac::bounds::{
    binning_sum_bound, cap, common_interference_region, doubly_threshold, eta_supremum, gap_eta, gap_zeta, helper_inner_raw,
    helper_low_snr_timeshare, helper_rates, inner_doubly, k_user_bounds, outer_region, thm4_raw, zeta_supremum, DoublyMode,
};
use dirty_mac::channel::{AdversarialPattern, ChannelKind, InterferenceSpec, PowerConfig};
use dirty_mac::entropy::{mc_entropy, rate_of_spec, GridSettings, DEFAULT_BINS};
use dirty_mac::envelope::golden_max;
use dirty_mac::lattice::Lattice;
use dirty_mac::region::{containment_check, RatePair, Region};
use dirty_mac::roots::solve_roots;
use dirty_mac::schemes::{
    build_preset, decode_common_three_stage, shaping_loss_1d, simulate_stage, PresetKind, SimRequest, StageOneDecision,
    StageSamples,
};
use dirty_mac::stats::{correlation, ks_one_sample, ks_two_sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ZETA_SUP: f64 = 0.167;
const ZETA_TOL: f64 = 1e-3;
const ZETA_ARGMAX: f64 = 1.155;
const ZETA_ARGMAX_TOL: f64 = 5e-3;
const X_STAR: f64 = 1.655;
const X_STAR_TOL: f64 = 1e-3;
const U_STAR: f64 = 1.832;
const U_STAR_TOL: f64 = 5e-3;
const HELPER_SLOPE: f64 = 0.324;
const HELPER_SLOPE_TOL: f64 = 2e-3;
const ETA_SUP_TOL: f64 = 1e-3;
const ETA_ARGMAX: f64 = 0.5;
const ETA_ARGMAX_TOL: f64 = 5e-3;
const ZETA_COARSE: f64 = 0.292;
const IDENTITY_TOL: f64 = 1e-9;
/// Grid discretisation error allowed between the numeric rate and the
/// closed-form bounds.
const GRID_TOL: f64 = 1e-6;
const MC_SAMPLES: usize = 1_000_000;
const MC_BINS: usize = 1024;
const MC_TOL: f64 = 0.01;
/// The self-noise samples change with the interference realisation, so the
/// histogram rate estimates of two conditions differ by their own sampling
/// error. 2²⁴ samples keep that error near a third of the tolerance.
const INVARIANCE_SAMPLES: usize = 1 << 24;
const INVARIANCE_RATE_TOL: f64 = 1e-3;
const INVARIANCE_KS_TOL: f64 = 0.005;
const DISTRIBUTIVE_CASES: usize = 10_000;
const DITHER_SAMPLES: usize = 1_000_000;
const DITHER_KS_TOL: f64 = 0.005;
const RESIDUAL_TOL: f64 = 0.02;
const RESIDUAL_SAMPLES: usize = 400_000;
const CORNER_TOL: f64 = 1e-9;
const K_USER_GAP: f64 = 0.5;
const LITERAL_SLOPE: f64 = 0.425;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn pc(p1: f64, p2: f64, n: f64) -> PowerConfig {
    PowerConfig::new(p1, p2, n).expect("positive powers")
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Grid maximisation followed by golden-section refinement around the best
/// grid point.
fn refine_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> (f64, f64) {
    let h = (hi - lo) / steps as f64;
    let best = (0..=steps).map(|i| lo + i as f64 * h).fold(lo, |b, x| if f(x) > f(b) { x } else { b });
    golden_max(f, (best - h).max(lo), (best + h).min(hi))
}

fn criterion_1() -> Verdict {
    let zeta = |x: f64| gap_zeta(&PowerConfig::symmetric(x, 1.0).unwrap()).unwrap();
    let (arg, sup) = refine_max(zeta, 0.05, 10.0, 400);
    let (closed, x) = zeta_supremum();
    let want = (0.5 + x).log2() / (4.0 * x);
    let pass = (sup - ZETA_SUP).abs() <= ZETA_TOL
        && (sup - want).abs() <= ZETA_TOL
        && (arg - ZETA_ARGMAX).abs() <= ZETA_ARGMAX_TOL
        && (closed.snr - ZETA_ARGMAX).abs() <= ZETA_ARGMAX_TOL;
    verdict(pass, format!("sup ζ(P,P) = {sup:.5} at P/N = {arg:.4}; closed form {want:.5} at {:.4}", closed.snr))
}

fn criterion_2() -> Verdict {
    let r = solve_roots();
    let ts = helper_low_snr_timeshare(&PowerConfig::symmetric(0.1, 1.0).unwrap()).unwrap();
    let pass = (r.x_star - X_STAR).abs() <= X_STAR_TOL
        && (r.snr_star - r.x_star).abs() <= IDENTITY_TOL
        && (r.u_star - U_STAR).abs() <= U_STAR_TOL
        && (ts.slope - HELPER_SLOPE).abs() <= HELPER_SLOPE_TOL;
    verdict(pass, format!("x* = {:.6}, u* = {:.6}, helper slope = {:.5}", r.x_star, r.u_star, ts.slope))
}

fn criterion_3() -> Verdict {
    // The supremum is that of the gap before time sharing, which bounds the
    // time-shared gap from above.
    let raw = |x: f64| cap(x) - helper_inner_raw(PowerConfig::symmetric(x, 1.0).unwrap());
    let (arg, sup) = refine_max(raw, 0.01, 10.0, 1000);
    let want = 0.5 * (9.0f64 / 8.0).log2();
    let closed = eta_supremum();
    let shared = gap_eta(&PowerConfig::symmetric(arg, 1.0).unwrap()).unwrap();
    let eta_coarse = 3f64.log2() - 1.5;
    let mut worst_zeta: f64 = 0.0;
    let mut worst_eta: f64 = 0.0;
    let powers = log_grid(1e-2, 1e2, 100);
    for &n in &log_grid(1e-1, 1e1, 10) {
        for &p1 in &powers {
            for &p2 in &powers {
                let c = pc(p1, p2, n);
                worst_zeta = worst_zeta.max(gap_zeta(&c).unwrap());
                if (p1 - p2).abs() < n {
                    worst_eta = worst_eta.max(gap_eta(&c).unwrap());
                }
            }
        }
    }
    let pass = (sup - want).abs() <= ETA_SUP_TOL
        && (closed.gap - want).abs() <= ETA_SUP_TOL
        && (arg - ETA_ARGMAX).abs() <= ETA_ARGMAX_TOL
        && shared <= sup + IDENTITY_TOL
        && worst_zeta <= ZETA_COARSE
        && worst_eta <= eta_coarse;
    verdict(
        pass,
        format!(
            "sup η = {sup:.5} at P/N = {arg:.4} (time-shared {shared:.5}); grid max ζ = {worst_zeta:.4}, max η = {worst_eta:.4}"
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut failures = Vec::new();
    let eps = [-0.1, -1e-2, -1e-3, 0.0, 1e-3, 1e-2, 0.1];
    let mut worst_identity: f64 = 0.0;
    // Dyadic powers and square ratios keep both boundaries exactly
    // representable, so the comparison at the boundary itself is meaningful.
    for &p1 in &[0.25, 1.0, 4.0, 16.0] {
        // Helper regime boundary N = |P₁ − P₂| approached through P₂.
        for &n in &[0.25, 1.0, 3.0] {
            let p2 = p1 + n;
            let at = pc(p1, p2, n);
            worst_identity = worst_identity.max((helper_inner_raw(at) - cap(p1 / n)).abs());
            for e in eps {
                let c = pc(p1, p2, n * (1.0 + e));
                let h = helper_rates(&c).unwrap();
                let zero = h.outer - h.inner == 0.0;
                let expect_zero = c.n <= (c.p1 - c.p2).abs();
                if zero != expect_zero || expect_zero != h.capacity.is_some() {
                    failures.push(format!("η at {c:?}"));
                }
            }
        }
        // Doubly dirty boundary N = √(P₁P₂) − min.
        for &ratio in &[2.25, 4.0, 25.0] {
            let at0 = pc(p1, p1 * ratio, 1.0);
            let t = doubly_threshold(&at0);
            let at = pc(p1, p1 * ratio, t);
            worst_identity = worst_identity.max((thm4_raw(at) - cap(at.p_min() / t)).abs());
            for e in eps {
                let c = pc(p1, p1 * ratio, t * (1.0 + e));
                let z = gap_zeta(&c).unwrap();
                let expect_zero = c.n <= doubly_threshold(&c);
                if (z == 0.0) != expect_zero {
                    failures.push(format!("ζ = {z:e} at {c:?}"));
                }
            }
        }
    }
    let pass = failures.is_empty() && worst_identity <= IDENTITY_TOL;
    verdict(pass, format!("boundary identity error {worst_identity:.1e}; mismatches {failures:?}"))
}

fn mc_rate(s: &StageSamples) -> f64 {
    let support = Some((-s.wrap / 2.0, s.wrap / 2.0));
    mc_entropy(&s.output, MC_BINS, support).unwrap() - mc_entropy(&s.noise, MC_BINS, support).unwrap()
}

/// Preset with its power configuration at one point of the SNR sweep.
fn family_point(name: &str, s: f64) -> (PresetKind, PowerConfig) {
    match name {
        "thm2" => (PresetKind::Thm2 { dithered: false }, pc(s, s, 1.0)),
        "thm2_dithered" => (PresetKind::Thm2 { dithered: true }, pc(s, 1.5 * s, 1.0)),
        "symmetric_mmse" => (PresetKind::SymmetricMmse, pc(s, s, 1.0)),
        "thm3_helper" => (PresetKind::Thm3Helper, pc(4.0 * s, s, 1.0)),
        "thm4" => (PresetKind::Thm4, pc(s, 2.0 * s, 1.0)),
        "helper_thm5" => (PresetKind::HelperThm5, pc(s, s + 2.0, 1.0)),
        "helper_lemma4" => (PresetKind::HelperLemma4, pc(s, s + 0.5, 1.0)),
        "lemma7" => (PresetKind::Lemma7 { alpha1: 3.0 * s / (3.0 * s + 1.0) }, pc(3.0 * s, s, 1.0)),
        "common" => (PresetKind::Common, pc(2.0 * s, s, 1.0)),
        other => unreachable!("{other}"),
    }
}

/// SNR sweep of each family, restricted to points where the preset's
/// regime condition holds.
fn family_snrs(name: &str) -> [f64; 5] {
    match name {
        "thm3_helper" => [1.0, 2.0, 4.0, 5.0, 10.0],
        "thm4" => [0.25, 0.5, 1.0, 1.5, 2.0],
        _ => [0.5, 1.0, 2.0, 5.0, 10.0],
    }
}

const FAMILIES: [&str; 9] = [
    "thm2",
    "thm2_dithered",
    "symmetric_mmse",
    "thm3_helper",
    "thm4",
    "helper_thm5",
    "helper_lemma4",
    "lemma7",
    "common",
];

fn criterion_5() -> Verdict {
    let settings = GridSettings { bins: DEFAULT_BINS, unwrapped_check: false };
    let mut failures = Vec::new();
    let (mut points, mut worst_mc, mut worst_low, mut worst_high) = (0, 0.0f64, f64::INFINITY, f64::INFINITY);
    for name in FAMILIES {
        for s in family_snrs(name) {
            let (kind, p) = family_point(name, s);
            let pre = build_preset(&kind, p).unwrap_or_else(|e| panic!("{name} at {s}: {e}"));
            for (i, st) in pre.stages.iter().enumerate() {
                points += 1;
                let r = rate_of_spec(&st.spec, settings).unwrap();
                let bound = st.spec.analytic_1d_bound();
                let sim = simulate_stage(&pre, i, &SimRequest::new(MC_SAMPLES, 1000 + points as u64, &pre)).unwrap();
                let mc = (mc_rate(&sim) - r.raw).abs();
                worst_mc = worst_mc.max(mc);
                worst_low = worst_low.min(r.rate - bound);
                worst_high = worst_high.min(st.outer - r.rate);
                if r.rate < bound - GRID_TOL || r.rate > st.outer + GRID_TOL || mc > MC_TOL {
                    failures.push(format!("{name} s={s} {}: rate {:.5} bound {bound:.5} outer {:.5} mc {mc:.4}", st.label, r.rate, st.outer));
                }
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{points} stage points; min(rate − bound) = {worst_low:.2e}, min(outer − rate) = {worst_high:.2e}, max |MC − numeric| = {worst_mc:.4}{}",
            if failures.is_empty() { String::new() } else { format!("; {failures:?}") }
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut worst_rate: f64 = 0.0;
    let mut worst_ks: f64 = 0.0;
    let mut stages = 0;
    for name in FAMILIES {
        let (kind, p) = family_point(name, family_snrs(name)[2]);
        let pre = build_preset(&kind, p).unwrap();
        let q = 1e4 * p.p_max();
        let conditions = [
            InterferenceSpec::Gaussian { variance: q },
            InterferenceSpec::Gaussian { variance: 10.0 * q },
            InterferenceSpec::Adversarial { pattern: AdversarialPattern::Sawtooth, amplitude: q.sqrt() },
        ];
        for i in 0..pre.stages.len() {
            stages += 1;
            let runs: Vec<StageSamples> = conditions
                .iter()
                .map(|spec| {
                    let mut req = SimRequest::new(INVARIANCE_SAMPLES, 7, &pre);
                    req.interference = [spec.clone(), spec.clone()];
                    simulate_stage(&pre, i, &req).unwrap()
                })
                .collect();
            let rates: Vec<f64> = runs.iter().map(mc_rate).collect();
            for (r, run) in rates[1..].iter().zip(&runs[1..]) {
                worst_rate = worst_rate.max((r - rates[0]).abs());
                worst_ks = worst_ks.max(ks_two_sample(&runs[0].output, &run.output));
            }
        }
    }
    verdict(
        worst_rate <= INVARIANCE_RATE_TOL && worst_ks <= INVARIANCE_KS_TOL,
        format!("{stages} stages × 3 interference conditions; max rate difference {worst_rate:.2e} bit, max KS {worst_ks:.4}"),
    )
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let dyadic = |rng: &mut ChaCha8Rng| rng.gen_range(-(1i64 << 30)..(1i64 << 30)) as f64 / (1u64 << 16) as f64;
    let mut mismatches = 0;
    for i in 0..DISTRIBUTIVE_CASES {
        let (x, y) = (dyadic(&mut rng), dyadic(&mut rng));
        let l = Lattice::scalar(2f64.powi(i as i32 % 9 - 4)).unwrap();
        let lhs = l.mod_lattice(&[l.mod_lattice(&[x]).unwrap()[0] + y]).unwrap();
        mismatches += usize::from(lhs != l.mod_lattice(&[x + y]).unwrap());
        let z = Lattice::integer(3).unwrap();
        let v = [x, y, x - y];
        let w = [y, x, 0.5 * y];
        let inner = z.mod_lattice(&v).unwrap();
        let lhs = z.mod_lattice(&[inner[0] + w[0], inner[1] + w[1], inner[2] + w[2]]).unwrap();
        mismatches += usize::from(lhs != z.mod_lattice(&[v[0] + w[0], v[1] + w[1], v[2] + w[2]]).unwrap());
    }
    let g_exact = [1e-3, 0.5, 1.0, 3.7, 1e4]
        .iter()
        .all(|&d| Lattice::scalar(d).unwrap().normalized_second_moment() == Some(1.0 / 12.0));
    // Crypto lemma: [v + D] mod Λ is uniform over the cell whatever v is.
    let l = Lattice::scalar(2.0).unwrap();
    let mut worst_ks: f64 = 0.0;
    let mut worst_corr: f64 = 0.0;
    let mut v = vec![0.0; DITHER_SAMPLES];
    let mut out = vec![0.0; DITHER_SAMPLES];
    for fixed in [None, Some(0.0), Some(0.73), Some(-0.999)] {
        for (vi, oi) in v.iter_mut().zip(out.iter_mut()) {
            *vi = fixed.unwrap_or_else(|| rng.gen_range(-1.0..1.0));
            let d = l.sample_dither(&mut rng).unwrap()[0];
            *oi = Lattice::mod_scalar(2.0, *vi + d);
        }
        worst_ks = worst_ks.max(ks_one_sample(&out, |t| ((t + 1.0) / 2.0).clamp(0.0, 1.0)));
        if fixed.is_none() {
            worst_corr = correlation(&v, &out).abs();
        }
    }
    let corr_limit = 3.0 / (DITHER_SAMPLES as f64).sqrt();
    verdict(
        mismatches == 0 && g_exact && worst_ks < DITHER_KS_TOL && worst_corr < corr_limit,
        format!(
            "{mismatches} distributive mismatches in {} cases; G exact: {g_exact}; dither KS {worst_ks:.5}, |corr| {worst_corr:.5}",
            2 * DISTRIBUTIVE_CASES
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut worst_residual: f64 = 0.0;
    for (i, &(p1, p2, n)) in [(10.0, 1.0, 1.0), (20.0, 5.0, 1.0), (8.0, 2.0, 0.5)].iter().enumerate() {
        let pre = build_preset(&PresetKind::Common, pc(p1, p2, n)).unwrap();
        let req = SimRequest::new(RESIDUAL_SAMPLES, 40 + i as u64, &pre);
        let out = decode_common_three_stage(&pre, &req, StageOneDecision::Genie).unwrap();
        let want = p1 * (p2 + n) / (p1 + p2 + n);
        worst_residual = worst_residual.max((out.residual_power / want - 1.0).abs());
    }
    let mut worst_corner: f64 = 0.0;
    let mut pentagon_ok = true;
    for &(p1, p2, n) in &[(1.0, 1.0, 1.0), (3.0, 1.0, 1.0), (0.5, 4.0, 2.0), (100.0, 7.0, 0.1)] {
        let c = pc(p1, p2, n);
        let corner = |p: PowerConfig| {
            let pre = build_preset(&PresetKind::Common, p).unwrap();
            RatePair::new(pre.stages[0].predicted, pre.stages[1].predicted)
        };
        let a = corner(c);
        let b = corner(c.swapped()).swapped();
        worst_corner = worst_corner
            .max((a.r1 - cap(p1 / (p2 + n))).abs())
            .max((a.r2 - cap(p2 / n)).abs())
            .max((a.sum() - cap((p1 + p2) / n)).abs())
            .max((b.sum() - cap((p1 + p2) / n)).abs());
        let pentagon = common_interference_region(&c).unwrap();
        let achieved = Region::from_points(
            "common scheme",
            &[a, b, RatePair::new(cap(p1 / n), 0.0), RatePair::new(0.0, cap(p2 / n))],
        );
        let both_ways = containment_check(&achieved, &pentagon).contained && containment_check(&pentagon, &achieved).contained;
        let same_outer = outer_region(ChannelKind::Common, &c).unwrap() == pentagon;
        pentagon_ok &= both_ways && same_outer && pentagon.vertices.len() == 5;
    }
    verdict(
        worst_residual <= RESIDUAL_TOL && worst_corner <= CORNER_TOL && pentagon_ok,
        format!("residual power error {:.2}%; corner error {worst_corner:.1e}; pentagon match {pentagon_ok}", 100.0 * worst_residual),
    )
}

fn criterion_9() -> Verdict {
    let mut monotone = true;
    let mut vanishes = true;
    for &n in &[0.01, 0.1, 1.0, 10.0] {
        let threshold = 1.0 / (std::f64::consts::PI * std::f64::consts::E * n);
        let qs = log_grid(1e-4 / n, 1e4 / n, 400);
        let vals: Vec<f64> = qs.iter().map(|&q| binning_sum_bound(1.0, 1.0, q, q, n).unwrap()).collect();
        monotone &= vals.windows(2).all(|w| w[1] <= w[0]);
        vanishes &= qs.iter().zip(&vals).filter(|(q, _)| **q >= threshold).all(|(_, v)| *v == 0.0);
        vanishes &= binning_sum_bound(1.0, 1.0, threshold, threshold, n).unwrap() == 0.0;
    }
    let mut worst_gap: f64 = 0.0;
    let mut ordered = true;
    for k in 2..=64 {
        for &x in &log_grid(1e-3, 1e3, 61) {
            let b = k_user_bounds(k, x, 1.0).unwrap();
            worst_gap = worst_gap.max(b.outer - b.inner);
            ordered &= b.inner <= b.outer + IDENTITY_TOL;
        }
    }
    verdict(
        monotone && vanishes && ordered && worst_gap <= K_USER_GAP,
        format!("binning nonincreasing {monotone}, zero beyond 1/(πeN) {vanishes}; K-user max gap {worst_gap:.4} bit"),
    )
}

fn criterion_10() -> Verdict {
    let x = solve_roots().x_star;
    let derived = 0.5 * (0.5 + x).log2() / x;
    let snr = 1e-3;
    let numeric = inner_doubly(&PowerConfig::symmetric(snr, 1.0).unwrap(), DoublyMode::Symmetric).unwrap() / snr;
    let pass = (numeric - derived).abs() <= 1e-6;
    verdict(
        pass,
        format!(
            "declared: good high-dimensional lattices are replaced by their limit formulas and 1-D checks (shaping loss {:.4} bit); \
             low-SNR slope {derived:.4}·P/N derived (numeric {numeric:.4}) vs {LITERAL_SLOPE}·P/N quoted, discrepancy {:.4} reported",
            shaping_loss_1d(),
            LITERAL_SLOPE - derived
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u8, fn() -> Verdict); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (n, run) in criteria {
        let t = Instant::now();
        let v = run();
        failed += usize::from(!v.pass);
        println!(
            "{} criterion {n}: {} [{:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 10 passed in {:.1} s", 10 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
