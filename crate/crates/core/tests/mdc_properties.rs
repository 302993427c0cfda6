use mpolsr::mdc::{
    bin_count, decode, encode, make_block, project, Block, CodecConfig, MdcError,
    DESCRIPTION_HEADER_BYTES,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_block<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Block {
    Block {
        rows,
        cols,
        symbols: (0..rows * cols).map(|_| rng.random()).collect(),
        pad_len: 0,
    }
}

/// Direct projection: bins indexed from the smallest `k + p*l` over the block.
fn reference_projection(block: &Block, p: i32) -> Vec<u64> {
    let idx = |k: usize, l: usize| k as i64 + p as i64 * l as i64;
    let coords: Vec<(usize, usize)> = (0..block.rows)
        .flat_map(|l| (0..block.cols).map(move |k| (k, l)))
        .collect();
    let lo = coords.iter().map(|&(k, l)| idx(k, l)).min().unwrap();
    let hi = coords.iter().map(|&(k, l)| idx(k, l)).max().unwrap();
    let mut bins = vec![0u64; (hi - lo + 1) as usize];
    for (k, l) in coords {
        bins[(idx(k, l) - lo) as usize] += block.get(k, l) as u64;
    }
    bins
}

#[test]
fn threshold_holds_for_every_subset_up_to_five_descriptions() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in 1..=5usize {
        for m in 1..=n {
            let cfg = CodecConfig::with_default_dirs(n, m).unwrap();
            for _ in 0..20 {
                let len = rng.random_range(0..300);
                let payload: Vec<u8> = (0..len).map(|_| rng.random()).collect();
                let descriptions = encode(&payload, &cfg, 7);
                for mask in 0u32..(1 << n) {
                    let subset: Vec<_> = (0..n)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| descriptions[i].clone())
                        .collect();
                    let result = decode(&subset, &cfg);
                    if subset.len() >= m {
                        assert_eq!(result.unwrap(), payload, "n={n} m={m} mask={mask:b}");
                    } else {
                        assert!(
                            matches!(result, Err(MdcError::InsufficientDescriptions { .. })),
                            "n={n} m={m} mask={mask:b}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn duplicates_do_not_count_toward_threshold() {
    let cfg = CodecConfig::with_default_dirs(4, 2).unwrap();
    let d = encode(b"duplicate", &cfg, 0);
    let err = decode(&[d[1].clone(), d[1].clone()], &cfg).unwrap_err();
    assert_eq!(
        err,
        MdcError::InsufficientDescriptions {
            required: 2,
            available: 1
        }
    );
}

#[test]
fn projection_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..500 {
        let rows = rng.random_range(1..6);
        let cols = rng.random_range(1..20);
        let p = rng.random_range(-4..=4);
        let block = random_block(&mut rng, rows, cols);
        assert_eq!(project(&block, p).bins, reference_projection(&block, p));
    }
}

#[test]
fn wire_overhead_grows_with_direction() {
    let block = make_block(&[0xAB; 512], 2);
    let sizes: Vec<usize> = (0..=4).map(|p| {
        let d = project(&block, p);
        assert_eq!(project(&block, -p).bins.len(), d.bins.len());
        d.wire_size()
    }).collect();
    assert!(sizes.windows(2).all(|w| w[0] < w[1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bin_count_and_mass(seed in any::<u64>(), rows in 1usize..8, cols in 1usize..40, p in -4i32..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let block = random_block(&mut rng, rows, cols);
        let d = project(&block, p);
        prop_assert_eq!(d.bins.len(), cols + (rows - 1) * p.unsigned_abs() as usize);
        prop_assert_eq!(d.bins.len(), bin_count(cols, rows, p));
        prop_assert_eq!(d.bins.iter().sum::<u64>(), block.symbol_sum());
    }

    #[test]
    fn encoded_size_ratio(payload in proptest::collection::vec(any::<u8>(), 1..2000), n in 1usize..7, m_frac in 0.0f64..1.0) {
        let m = 1 + ((n as f64 - 1.0) * m_frac) as usize;
        let cfg = CodecConfig::with_default_dirs(n, m).unwrap();
        let descriptions = encode(&payload, &cfg, 0);
        let total: usize = descriptions.iter().map(|d| d.wire_size()).sum();
        let block = make_block(&payload, m);
        let overhang: usize = cfg.projection_dirs.iter().map(|p| (m - 1) * p.unsigned_abs() as usize).sum();
        let expected = n * DESCRIPTION_HEADER_BYTES + 2 * (n * block.cols + overhang);
        prop_assert_eq!(total, expected);
        let ratio = total as f64 / payload.len() as f64;
        prop_assert!(ratio >= n as f64 / m as f64);
    }

    #[test]
    fn any_m_descriptions_roundtrip(payload in proptest::collection::vec(any::<u8>(), 0..600), pick in any::<u64>()) {
        let cfg = CodecConfig::with_default_dirs(6, 3).unwrap();
        let all = encode(&payload, &cfg, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(pick);
        let mut idx: Vec<usize> = (0..6).collect();
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.random_range(0..=i));
        }
        let subset: Vec<_> = idx[..3].iter().map(|&i| all[i].clone()).collect();
        prop_assert_eq!(decode(&subset, &cfg).unwrap(), payload);
    }
}
