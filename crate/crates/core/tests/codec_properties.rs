mod common;

use common::*;
use gwdc::container::{decode_signal, parse_header, EncodedFile, Encoder};
use gwdc::dictionary::{Dictionary, DictionaryConfig};
use gwdc::entropy::{
    arith_decode, arith_encode, build_index_stream, parse_index_stream, SymbolStream,
};
use gwdc::metrics::snr;
use gwdc::pursuit::AtomicDecomposition;
use gwdc::pursuit::StopRule;
use gwdc::quantizer::{dequantize_block, quantize_block, quantize_magnitude, QuantizedBlock};
use gwdc::Error;
use proptest::prelude::*;
use rand::Rng;

fn quantized_model() -> impl Strategy<Value = Vec<QuantizedBlock>> {
    prop::collection::vec(
        prop::collection::btree_set(1u32..20_000, 0..25).prop_flat_map(|ids| {
            let n = ids.len();
            (
                Just(ids.into_iter().collect::<Vec<_>>()),
                prop::collection::vec(1u32..2000, n),
                prop::collection::vec(any::<bool>(), n),
            )
                .prop_map(|(atom_indices, magnitudes, signs)| QuantizedBlock {
                    atom_indices,
                    magnitudes,
                    signs,
                })
        }),
        1..20,
    )
}

proptest! {
    #[test]
    fn magnitude_error_within_half_step(c in -1e3f64..1e3, delta in 1e-5f64..2.0) {
        let m = quantize_magnitude(c, delta).unwrap();
        prop_assert!((delta * m as f64 - c.abs()).abs() <= delta / 2.0);
    }

    #[test]
    fn requantizing_is_a_fixed_point(cs in prop::collection::vec(-10.0f64..10.0, 1..40), delta in 1e-3f64..1.0) {
        let decomp = AtomicDecomposition {
            block_index: 1,
            atom_indices: (1..=cs.len() as u32).rev().collect(),
            coefficients: cs,
        };
        let q = quantize_block(&decomp, delta).unwrap();
        q.validate().unwrap();
        let again = quantize_block(
            &AtomicDecomposition {
                block_index: 1,
                atom_indices: q.atom_indices.clone(),
                coefficients: dequantize_block(&q, delta),
            },
            delta,
        )
        .unwrap();
        prop_assert_eq!(q, again);
    }

    #[test]
    fn index_stream_round_trip(model in quantized_model()) {
        let stream = build_index_stream(&model).unwrap();
        let lists = parse_index_stream(&stream.symbols, model.len()).unwrap();
        let expected: Vec<Vec<u32>> = model.iter().map(|b| b.atom_indices.clone()).collect();
        prop_assert_eq!(lists, expected);
    }

    #[test]
    fn arithmetic_round_trip(alphabet in 1u32..5000, seed in any::<u64>(), len in 0usize..4000) {
        let mut r = rng(seed);
        let symbols: Vec<u32> = (0..len).map(|_| r.gen_range(0..alphabet)).collect();
        let stream = SymbolStream::new(symbols, alphabet).unwrap();
        let coded = arith_encode(&stream).unwrap();
        prop_assert_eq!(arith_decode(&coded).unwrap(), stream);
    }

    #[test]
    fn corrupted_payloads_never_panic(seed in any::<u64>(), flip in any::<prop::sample::Index>()) {
        let mut r = rng(seed);
        let symbols: Vec<u32> = (0..500).map(|_| r.gen_range(0..300)).collect();
        let mut coded = arith_encode(&SymbolStream::new(symbols, 300).unwrap()).unwrap();
        let i = flip.index(coded.payload.len());
        coded.payload[i] ^= 0x5a;
        let _ = arith_decode(&coded);
    }
}

#[test]
fn uniform_source_costs_about_one_byte_per_symbol() {
    let mut r = rng(42);
    let symbols: Vec<u32> = (0..100_000).map(|_| r.gen_range(0..256)).collect();
    let coded = arith_encode(&SymbolStream::new(symbols, 256).unwrap()).unwrap();
    let ratio = coded.payload.len() as f64 / 100_000.0;
    assert!((0.99..1.01).contains(&ratio), "{ratio}");
}

#[test]
fn in_span_signal_survives_the_codec() {
    let encoder = Encoder::new(DictionaryConfig::with_redundancy(256, 2)).unwrap();
    let dict = encoder.dictionary();
    let mut r = rng(3);
    let mut signal = Vec::new();
    for _ in 0..4 {
        let mut block = vec![0.0; 256];
        for id in rand::seq::index::sample(&mut r, dict.len(), 5) {
            dict.add_scaled_atom(id as u32 + 1, r.gen_range(-2.0..2.0), &mut block)
                .unwrap();
        }
        signal.extend(block);
    }
    let approx = encoder
        .approximate(&signal, &StopRule::residual_norm(1e-12))
        .unwrap();
    let fine = approx.max_abs_coefficient() / (1u32 << 23) as f64;
    let out = encoder
        .encode_approximation(&approx, 8000, Some(fine))
        .unwrap();
    let decoded = decode_signal(&out.bytes).unwrap();
    let quality = snr(&signal, &decoded.samples).unwrap();
    assert!(quality >= 120.0, "{quality} dB");
}

#[test]
fn coarser_steps_never_grow_the_file_much_and_lose_quality() {
    let encoder = Encoder::new(DictionaryConfig::with_redundancy(512, 2)).unwrap();
    let signal = multi_tone_chirp(4096, 8000.0);
    let approx = encoder
        .approximate(&signal, &StopRule::block_snr_db(50.0))
        .unwrap();
    let finest = encoder.default_delta(&approx);
    let mut last_snr = f64::INFINITY;
    let mut last_size = usize::MAX;
    for k in 0..8 {
        let delta = finest * 4f64.powi(k);
        let out = encoder
            .encode_approximation(&approx, 8000, Some(delta))
            .unwrap();
        let s = snr(&signal, &out.reconstruction).unwrap();
        assert!(s <= last_snr + 0.5, "step {k}: {s} after {last_snr}");
        assert!(out.bytes.len() <= last_size, "step {k}");
        last_snr = s;
        last_size = out.bytes.len();
    }
}

#[test]
fn quantization_error_respects_triangle_bound() {
    // ||f_model - f_quantized|| <= sum over kept atoms of delta/2 plus the
    // pruned coefficients, each atom having unit norm.
    let encoder = Encoder::new(DictionaryConfig::with_redundancy(256, 2)).unwrap();
    let mut r = rng(8);
    let signal = random_signal(&mut r, 1024);
    let approx = encoder
        .approximate(&signal, &StopRule::block_snr_db(40.0))
        .unwrap();
    let delta = encoder.default_delta(&approx) * 3000.0;
    let (_, quantized) = encoder.quantize(&approx, delta).unwrap();
    let dict = encoder.dictionary();
    let mut model = vec![0.0; 1024];
    for (q, d) in approx.decompositions.iter().enumerate() {
        for (&id, &c) in d.atom_indices.iter().zip(&d.coefficients) {
            dict.add_scaled_atom(id, c, &mut model[q * 256..(q + 1) * 256])
                .unwrap();
        }
    }
    let bound: f64 = approx
        .decompositions
        .iter()
        .flat_map(|d| d.coefficients.iter())
        .map(|&c| (c.abs() - delta * (c.abs() / delta + 0.5).floor()).abs())
        .sum();
    let err = norm(
        &model
            .iter()
            .zip(&quantized)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    assert!(err <= bound * (1.0 + 1e-9), "{err} > {bound}");
}

#[test]
fn encodings_are_reproducible_and_headers_parse() {
    let mut r = rng(12);
    let signal = random_signal(&mut r, 5000);
    let encoder = Encoder::new(DictionaryConfig::with_redundancy(256, 2)).unwrap();
    let a = encoder
        .encode(&signal, 22050, &StopRule::block_snr_db(35.0), None)
        .unwrap();
    let b = encoder
        .encode(&signal, 22050, &StopRule::block_snr_db(35.0), None)
        .unwrap();
    assert_eq!(a.bytes, b.bytes);
    let header = parse_header(&a.bytes).unwrap();
    assert_eq!(header.original_length, 5000);
    assert_eq!(header.block_count, 20);
    assert_eq!(header.pad_length, 120);
    assert_eq!(header.sample_rate, 22050);
    assert_eq!(
        EncodedFile::from_bytes(&a.bytes).unwrap().to_bytes(),
        a.bytes
    );
}

#[test]
fn damaged_files_are_reported_not_panicked_on() {
    let mut r = rng(13);
    let signal = random_signal(&mut r, 2000);
    let encoder = Encoder::new(DictionaryConfig::with_redundancy(128, 2)).unwrap();
    let bytes = encoder
        .encode(&signal, 8000, &StopRule::block_snr_db(30.0), None)
        .unwrap()
        .bytes;
    for _ in 0..300 {
        let mut damaged = bytes.clone();
        let i = r.gen_range(0..damaged.len());
        damaged[i] ^= 1 << r.gen_range(0..8);
        match decode_signal(&damaged) {
            Ok(d) => assert_eq!(d.samples.len(), 2000),
            Err(Error::Corrupt { offset, .. }) => assert!(offset <= damaged.len()),
            Err(e) => panic!("unexpected error kind: {e}"),
        }
    }
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(matches!(
        decode_signal(&bad_magic),
        Err(Error::Corrupt { offset: 0, .. })
    ));
}

#[test]
fn explicit_dictionaries_match_their_atoms() {
    let mut r = rng(14);
    let dict = mixed_dictionary(&mut r, 32, 64);
    let v = noise(&mut r, 32);
    let fast = dict.correlate_all(&v).unwrap();
    for (n, c) in fast.iter().enumerate() {
        assert!((c - dot(&dict.atom(n as u32 + 1).unwrap(), &v)).abs() < 1e-12);
    }
    let _: &Dictionary = &dict;
}
