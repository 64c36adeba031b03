use proptest::prelude::*;
use rand::Rng;

use sca_core::cca::{cca_local_eval, cca_step, ContinuousConfiguration};
use sca_core::decompose::{greedy_decompose, greedy_decompose_with, recompose, TieBreak};
use sca_core::experiments::hamming;
use sca_core::lattice::{ind_digits, neighborhood_index, Configuration, Geometry, LocalRule, Plut, SimplexVector};
use sca_core::rules::widen_radius;
use sca_core::sca::{sca_evolve, SpaceTimeDiagram};
use sca_core::RngSeed;

fn random_plut(n: usize, radius: usize, seed: u64) -> Plut {
    Plut::random(n, radius, &mut RngSeed::new(seed).rng()).unwrap()
}

fn random_cell<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn codec_round_trip(n in 2usize..=5, window in 1usize..=5, frac in 0.0f64..1.0) {
        let rows = n.pow(window as u32);
        let i = 1 + ((rows as f64 * frac) as usize).min(rows - 1);
        let d = ind_digits(i, n, window).unwrap();
        prop_assert!(d.iter().all(|&x| (1..=n).contains(&x)));
        prop_assert_eq!(neighborhood_index(&d, n).unwrap(), i);
    }

    #[test]
    fn step_stays_in_simplex(n in 2usize..=4, radius in 0usize..=1, cells in 3usize..12, seed: u64) {
        let plut = random_plut(n, radius, seed);
        let mut rng = RngSeed::new(seed).derive(1).rng();
        let flat: Vec<f64> = (0..cells).flat_map(|_| random_cell(n, &mut rng)).collect();
        let config = ContinuousConfiguration::from_flat(Geometry::new(cells, radius).unwrap(), n, flat).unwrap();
        let next = cca_step(&plut, &config).unwrap();
        for i in 0..cells {
            let c = next.cell(i);
            prop_assert!(c.iter().all(|&p| (-1e-12..=1.0 + 1e-12).contains(&p)));
            prop_assert!((c.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        let window: Vec<SimplexVector> = (0..2 * radius + 1).map(|m| config.cell_vector(m)).collect();
        let local = cca_local_eval(&plut, &window).unwrap();
        prop_assert!((local.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn decomposition_reconstructs(n in 2usize..=4, radius in 0usize..=1, seed: u64) {
        let plut = random_plut(n, radius, seed);
        let d = greedy_decompose(&plut).unwrap();
        prop_assert!(plut.max_abs_diff(&recompose(&d).unwrap()).unwrap() <= 1e-12);
        let a = d.alphas();
        prop_assert!(a.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(d.len() <= n * plut.table_rows());
    }

    #[test]
    fn tie_break_does_not_change_coefficients(cells in proptest::collection::vec(0usize..=4, 9)) {
        // Three states, radius 0; entries in quarters make ties common.
        let rows: Vec<Vec<f64>> = cells
            .chunks(3)
            .map(|c| {
                let (a, b) = (c[0].min(4), c[1].min(4 - c[0].min(4)));
                vec![a as f64 / 4.0, b as f64 / 4.0, (4 - a - b) as f64 / 4.0]
            })
            .collect();
        let plut = Plut::from_rows(&rows, 3, 0, 1e-12).unwrap();
        let lo = greedy_decompose_with(&plut, TieBreak::Lowest).unwrap();
        let hi = greedy_decompose_with(&plut, TieBreak::Highest).unwrap();
        prop_assert_eq!(lo.alphas(), hi.alphas());
        prop_assert!(plut.max_abs_diff(&recompose(&hi).unwrap()).unwrap() <= 1e-12);
    }

    #[test]
    fn widening_preserves_continuous_step(n in 2usize..=3, cells in 5usize..10, seed: u64) {
        let plut = random_plut(n, 1, seed);
        let wide = widen_radius(&plut, 2).unwrap();
        let mut rng = RngSeed::new(seed).derive(2).rng();
        let flat: Vec<f64> = (0..cells).flat_map(|_| random_cell(n, &mut rng)).collect();
        let c1 = ContinuousConfiguration::from_flat(Geometry::new(cells, 1).unwrap(), n, flat.clone()).unwrap();
        let c2 = ContinuousConfiguration::from_flat(Geometry::new(cells, 2).unwrap(), n, flat).unwrap();
        let a = cca_step(&plut, &c1).unwrap();
        let b = cca_step(&wide, &c2).unwrap();
        prop_assert!(a.flat().iter().zip(b.flat()).all(|(x, y)| (x - y).abs() <= 1e-12));
    }

    #[test]
    fn hamming_is_a_metric(cells in 3usize..70, steps in 0usize..6, seed: u64) {
        let g = Geometry::new(cells, 1).unwrap();
        let plut = random_plut(2, 1, seed);
        let diagram = |k: u64| -> SpaceTimeDiagram {
            let s = RngSeed::new(seed).derive(k);
            let mut rng = s.rng();
            let bits: Vec<usize> = (0..cells).map(|_| rng.gen_range(0..2)).collect();
            let init = Configuration::from_indices(g, 2, &bits).unwrap();
            sca_evolve(&plut, &init, steps, &s.derive(9)).unwrap()
        };
        let (a, b, c) = (diagram(1), diagram(2), diagram(3));
        let ab = hamming(&a, &b).unwrap();
        prop_assert_eq!(hamming(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(ab, hamming(&b, &a).unwrap());
        prop_assert_eq!(ab == 0.0, a == b);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!(hamming(&a, &c).unwrap() <= ab + hamming(&b, &c).unwrap() + 1e-15);
    }
}
