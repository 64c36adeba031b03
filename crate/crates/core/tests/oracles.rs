//! Checks against independent oracles: exact Markov-chain marginals,
//! sampling frequencies and hand-derived values.

use rand::Rng;

use sca_core::cca::cca_evolve;
use sca_core::decompose::{greedy_decompose, greedy_trace, recompose, TieBreak};
use sca_core::experiments::{
    alpha_grid, quadrant_mean, run_c3_convergence, run_dalpha, run_totalistic_grid, C3Params, GridParams, Metric,
    Mode,
};
use sca_core::lattice::{config_random, Configuration, Geometry, InitMode, LocalRule, Lut, Plut};
use sca_core::rules::{eca_lut, totalistic_plut, EcaNumber, TotalisticParams};
use sca_core::sca::{estimate_pi, mixture_step, sca_step};
use sca_core::RngSeed;

/// Exact per-cell marginals of state 1 for a binary radius-1 rule on a small
/// ring, by propagating the full distribution over all `2^M` configurations.
fn exact_marginals(plut: &Plut, init: &[usize], steps: usize) -> Vec<Vec<f64>> {
    let m = init.len();
    let size = 1usize << m;
    let bit = |x: usize, i: usize| (x >> i) & 1;
    let start = init.iter().enumerate().map(|(i, &b)| b << i).sum::<usize>();
    let mut dist = vec![0.0; size];
    dist[start] = 1.0;
    let marg = |dist: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| (0..size).filter(|&x| bit(x, i) == 1).map(|x| dist[x]).sum())
            .collect()
    };
    let mut out = vec![marg(&dist)];
    for _ in 0..steps {
        let mut next = vec![0.0; size];
        for x in 0..size {
            if dist[x] == 0.0 {
                continue;
            }
            let rows: Vec<&[f64]> = (0..m)
                .map(|i| {
                    let k = 4 * bit(x, (i + m - 1) % m) + 2 * bit(x, i) + bit(x, (i + 1) % m);
                    plut.row(k)
                })
                .collect();
            for (y, slot) in next.iter_mut().enumerate() {
                *slot += dist[x] * (0..m).map(|i| rows[i][bit(y, i)]).product::<f64>();
            }
        }
        dist = next;
        out.push(marg(&dist));
    }
    out
}

fn binary(bits: &[usize]) -> Configuration {
    Configuration::from_indices(Geometry::new(bits.len(), 1).unwrap(), 2, bits).unwrap()
}

#[test]
fn continuous_evolution_is_exact_for_two_steps_then_drifts() {
    let init = [1, 0, 0, 1, 1, 0];
    let mut worst_late = 0.0f64;
    for s in 0..10 {
        let plut = Plut::random(2, 1, &mut RngSeed::new(s).rng()).unwrap();
        let exact = exact_marginals(&plut, &init, 4);
        let cca = cca_evolve(&plut, &binary(&init), 4).unwrap();
        for t in 0..=4 {
            let gap = cca
                .step(t)
                .state_probs(sca_core::StateId::ONE)
                .zip(&exact[t])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if t <= 2 {
                assert!(gap < 1e-12, "seed {s} t {t}: gap {gap}");
            } else {
                worst_late = worst_late.max(gap);
            }
        }
    }
    // Neighboring cells become correlated from t = 2 on, so the product
    // formula is no longer exact at t = 3.
    assert!(worst_late > 1e-3, "expected a visible gap, got {worst_late}");
}

#[test]
fn sampling_matches_exact_marginals() {
    let init = [1, 0, 0, 1, 1, 0];
    let plut = Plut::random(2, 1, &mut RngSeed::new(77).rng()).unwrap();
    let exact = exact_marginals(&plut, &init, 6);
    let samples = 40_000;
    let est = estimate_pi(&plut, &binary(&init), 6, samples, &RngSeed::new(78)).unwrap();
    for (t, row) in exact.iter().enumerate() {
        for (i, &p) in row.iter().enumerate() {
            let sigma = (p * (1.0 - p) / samples as f64).sqrt().max(1e-9);
            let got = est.step(t).cell(i)[1];
            assert!((got - p).abs() <= 5.0 * sigma, "t {t} cell {i}: {got} vs {p}");
        }
    }
}

#[test]
fn one_step_estimate_matches_continuous_step() {
    let plut = Plut::random(3, 1, &mut RngSeed::new(5).rng()).unwrap();
    let g = Geometry::new(20, 1).unwrap();
    let init = config_random(g, 3, InitMode::Uniform, &RngSeed::new(6)).unwrap();
    let cca = cca_evolve(&plut, &init, 1).unwrap();
    let est = estimate_pi(&plut, &init, 1, 100_000, &RngSeed::new(7)).unwrap();
    assert!(cca.max_abs_diff(&est) <= 0.01);
}

/// Binary ring in which each radius-1 neighborhood appears exactly once.
fn de_bruijn() -> Configuration {
    binary(&[0, 0, 0, 1, 0, 1, 1, 1])
}

/// Per-neighborhood frequency of state 1 over `draws` steps from the same
/// configuration.
fn frequencies(mut step: impl FnMut(&Configuration) -> Configuration, draws: usize) -> [f64; 8] {
    let init = de_bruijn();
    let mut ones = [0usize; 8];
    for _ in 0..draws {
        let next = step(&init);
        for i in 0..8 {
            let s = init.states();
            let k = 4 * s[(i + 7) % 8].index() + 2 * s[i].index() + s[(i + 1) % 8].index();
            ones[k] += next.states()[i].index();
        }
    }
    ones.map(|c| c as f64 / draws as f64)
}

#[test]
fn mixtures_sample_their_convex_combination() {
    let draws = 100_000;
    // Worst-case standard error of a frequency.
    let bound = 3.0 * (0.25 / draws as f64).sqrt();
    for m in 0..50u64 {
        let seed = RngSeed::new(1000 + m);
        let mut rng = seed.rng();
        let k = rng.gen_range(1..=4);
        let weights: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 0.05).collect();
        let total: f64 = weights.iter().sum();
        let components: Vec<(f64, Lut)> = weights
            .iter()
            .map(|w| (w / total, eca_lut(EcaNumber::from(rng.gen::<u8>()))))
            .collect();
        let expected: Vec<f64> = (0..8)
            .map(|k| components.iter().filter(|(_, l)| l.output(k).index() == 1).map(|(a, _)| a).sum())
            .collect();
        let mut rng = seed.derive(1).rng();
        let freq = frequencies(|c| mixture_step(&components, c, &mut rng).unwrap(), draws);
        for k in 0..8 {
            assert!((freq[k] - expected[k]).abs() <= bound, "mixture {m} row {k}");
        }
    }
}

#[test]
fn totalistic_mixture_matches_direct_sampling() {
    let plut = totalistic_plut(TotalisticParams::new(0.3, 0.7).unwrap());
    let d = greedy_decompose(&plut).unwrap();
    let pairs = d.to_pairs();
    let numbers: Vec<u8> = d.to_records().iter().map(|r| r.eca_number.unwrap()).collect();
    assert_eq!(numbers, vec![232, 150]);
    let draws = 100_000;
    let mut a = RngSeed::new(1).rng();
    let mut b = RngSeed::new(2).rng();
    let mixed = frequencies(|c| mixture_step(&pairs, c, &mut a).unwrap(), draws);
    let direct = frequencies(|c| sca_step(&plut, c, &mut b).unwrap(), draws);
    for k in 0..8 {
        let p = plut.row(k)[1];
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        // Difference of two independent estimates.
        assert!((mixed[k] - direct[k]).abs() <= 3.0 * sigma * 2f64.sqrt() + 1e-12, "row {k}");
    }
}

#[test]
fn monte_carlo_error_shrinks_like_inverse_square_root() {
    // Two steps from a discrete start, where the continuous evolution is exact.
    let mut ratios = 0.0;
    for s in 0..20u64 {
        let plut = Plut::random(2, 1, &mut RngSeed::new(s).rng()).unwrap();
        let g = Geometry::new(20, 1).unwrap();
        let init = config_random(g, 2, InitMode::Uniform, &RngSeed::new(100 + s)).unwrap();
        let exact = cca_evolve(&plut, &init, 2).unwrap();
        let rms = |n: usize| {
            let est = estimate_pi(&plut, &init, 2, n, &RngSeed::new(200 + s).derive(n as u64)).unwrap();
            let sq: f64 = exact.steps()[1..]
                .iter()
                .zip(&est.steps()[1..])
                .flat_map(|(a, b)| a.flat().iter().zip(b.flat()).map(|(x, y)| (x - y).powi(2)))
                .sum();
            sq.sqrt()
        };
        ratios += rms(4000) / rms(2000);
    }
    let ratio = ratios / 20.0;
    assert!((0.5..=0.9).contains(&ratio), "ratio {ratio}");
}

#[test]
fn greedy_zero_count_grows_every_round() {
    for s in 0..50 {
        let plut = Plut::random(3, 1, &mut RngSeed::new(s).rng()).unwrap();
        let trace = greedy_trace(&plut, TieBreak::Lowest).unwrap();
        assert!(trace.windows(2).all(|w| w[1].zeros > w[0].zeros));
        assert!(trace.len() <= 3 * plut.table_rows());
        let d = greedy_decompose(&plut).unwrap();
        assert!(plut.max_abs_diff(&recompose(&d).unwrap()).unwrap() <= 1e-12);
    }
}

#[test]
fn class_one_and_two_curve_shapes() {
    let alphas = alpha_grid(0.9, 11).unwrap();
    let seed = RngSeed::new(11);
    let c40 = run_dalpha(EcaNumber::from(40), &alphas, 69, 69, &seed, Metric::Tv).unwrap();
    assert!(c40.values.iter().all(|&v| v < 0.05));
    let c42 = run_dalpha(EcaNumber::from(42), &alphas, 69, 69, &seed, Metric::Tv).unwrap();
    // Every pair ordered by alpha is ordered the other way by D.
    let v = &c42.values;
    let mut concordant = 0i32;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            concordant += if v[j] < v[i] { -1 } else { 1 };
        }
    }
    assert!(concordant < 0);
    assert!(v.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn convergence_slows_as_noise_drops() {
    let times: Vec<f64> = [0.1, 0.05, 0.01]
        .iter()
        .map(|&eta| {
            let p = C3Params::new(eta, 29, 200, Mode::Sca, 5);
            let (_, summary) = run_c3_convergence(&p, &RngSeed::new(4)).unwrap();
            summary.mean_time
        })
        .collect();
    assert!(times[0] < times[1] && times[1] < times[2], "{times:?}");
}

#[test]
fn hamming_distance_is_higher_where_rule_150_dominates() {
    let params = GridParams {
        resolution: 11,
        cells: 49,
        steps: 49,
        runs: 10,
    };
    let at = |p1: f64, p2: f64| {
        move |a: f64, b: f64| (a - p1).abs() < 1e-9 && (b - p2).abs() < 1e-9
    };
    let (mut hot, mut cold) = (0.0, 0.0);
    for s in 0..5 {
        let stats = run_totalistic_grid(&params, &RngSeed::new(s)).unwrap();
        hot += quadrant_mean(&stats, at(0.7, 0.3)).unwrap();
        cold += quadrant_mean(&stats, at(0.1, 0.1)).unwrap();
        assert!(stats
            .iter()
            .all(|g| g.delta_min <= g.delta_mean && g.delta_mean <= g.delta_max && g.delta_max <= 1.0));
    }
    assert!(hot > cold, "{hot} vs {cold}");
}
