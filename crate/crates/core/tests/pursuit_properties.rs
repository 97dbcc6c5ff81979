mod common;

use common::*;
use gwdc::dictionary::{Dictionary, DictionaryConfig};
use gwdc::pursuit::{
    approximate_blocks, oomp_approximate, oomp_approximate_observed, partition_signal,
    reconstruct_block, Block, StopRule,
};
use proptest::prelude::*;

fn dictionary(block_size: usize) -> Dictionary {
    Dictionary::new(DictionaryConfig::with_redundancy(block_size, 2)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn duals_are_biorthogonal_to_selected_atoms(seed in any::<u64>(), k in 1usize..24) {
        let dict = dictionary(32);
        let f = unit(random_signal(&mut rng(seed), 32));
        let stop = StopRule::residual_norm(0.0).with_max_atoms(k);
        let mut checked = false;
        oomp_approximate_observed(&Block { index: 1, samples: f }, &dict, &stop, |s| {
            for (i, b) in s.b_vectors().iter().enumerate() {
                for (j, &id) in s.selected().iter().enumerate() {
                    let v = dot(b, &dict.atom(id).unwrap());
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-8, "<b_{i}, d_{id}> = {v}");
                }
            }
            for (i, wi) in s.w_vectors().iter().enumerate() {
                for wj in &s.w_vectors()[..i] {
                    assert!(dot(wi, wj).abs() < 1e-10 * norm(wi) * norm(wj));
                }
            }
            checked = true;
        })
        .unwrap();
        prop_assert!(checked);
    }

    #[test]
    fn residual_is_orthogonal_projection_error(seed in any::<u64>(), k in 1usize..16) {
        let dict = dictionary(64);
        let f = random_signal(&mut rng(seed), 64);
        let stop = StopRule::residual_norm(0.0).with_max_atoms(k);
        let d = oomp_approximate(&Block { index: 1, samples: f.clone() }, &dict, &stop).unwrap();
        let atoms: Vec<Vec<f64>> = d.atom_indices.iter().map(|&id| dict.atom(id).unwrap()).collect();
        let refs: Vec<&[f64]> = atoms.iter().map(Vec::as_slice).collect();
        let exact = residual_norm_after(&refs, &f);
        let approx = reconstruct_block(&d, &dict).unwrap();
        let ours = norm(&f.iter().zip(&approx).map(|(a, b)| a - b).collect::<Vec<_>>());
        prop_assert!((exact - ours).abs() <= 1e-9 * norm(&f));
    }

    #[test]
    fn caches_track_direct_inner_products(seed in any::<u64>(), k in 1usize..10) {
        let dict = dictionary(16);
        let atoms = all_atoms(&dict);
        let f = random_signal(&mut rng(seed), 16);
        let stop = StopRule::residual_norm(0.0).with_max_atoms(k);
        oomp_approximate_observed(&Block { index: 1, samples: f }, &dict, &stop, |s| {
            for (n, atom) in atoms.iter().enumerate() {
                let corr = dot(atom, s.residual());
                assert!((corr - s.correlation_cache()[n]).abs() < 1e-10);
                let denom: f64 = s
                    .w_vectors()
                    .iter()
                    .map(|w| dot(atom, w).powi(2) / dot(w, w))
                    .sum();
                assert!((denom - s.denominator_cache()[n]).abs() < 1e-10);
            }
        })
        .unwrap();
    }

    #[test]
    fn block_snr_rule_is_met_or_atoms_run_out(seed in any::<u64>(), db in 5.0f64..80.0) {
        let dict = dictionary(64);
        let f = random_signal(&mut rng(seed), 64);
        let d = oomp_approximate(&Block { index: 1, samples: f.clone() }, &dict, &StopRule::block_snr_db(db)).unwrap();
        let approx = reconstruct_block(&d, &dict).unwrap();
        let err = norm(&f.iter().zip(&approx).map(|(a, b)| a - b).collect::<Vec<_>>());
        let rho = norm(&f) * 10f64.powf(-db / 20.0);
        prop_assert!(err < rho * (1.0 + 1e-9) || d.iterations() == 64);
    }

    #[test]
    fn worker_count_does_not_change_models(seed in any::<u64>(), n in 1usize..700) {
        let dict = dictionary(64);
        let signal = random_signal(&mut rng(seed), n);
        let blocks = partition_signal(&signal, 64).unwrap().blocks;
        let stop = StopRule::block_snr_db(30.0);
        let one = approximate_blocks(&blocks, &dict, &stop, 1).unwrap();
        let many = approximate_blocks(&blocks, &dict, &stop, 4).unwrap();
        prop_assert_eq!(one, many);
    }
}

#[test]
fn default_dictionary_reaches_high_snr_on_tones() {
    let dict = Dictionary::new(DictionaryConfig::default()).unwrap();
    let f = multi_tone_chirp(65536, 8000.0)[..2048].to_vec();
    let d = oomp_approximate(
        &Block {
            index: 1,
            samples: f.clone(),
        },
        &dict,
        &StopRule::block_snr_db(60.0),
    )
    .unwrap();
    let approx = reconstruct_block(&d, &dict).unwrap();
    assert!(naive_snr(&f, &approx) >= 60.0);
    assert!(d.iterations() < 2048 / 2, "{} atoms", d.iterations());
}
