mod common;

use std::collections::BTreeSet;
use std::path::Path;

use btdqos::io::{parse_qos_reader, write_qos_log};
use btdqos::{
    epoch, mae, reduce_to_cp, rmse, split, BnbtModel, Dims, EntryIndex, Mode, ParseOptions, SparseTensor3, SplitSpec,
    TrainConfig,
};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn build_roundtrips_entries(seed in any::<u64>(), density in 0.05f64..0.9) {
        let mut r = rng(seed);
        let dims = random_dims(&mut r, 6);
        let t = random_tensor(&mut r, dims, density);
        let mut shuffled: Vec<(EntryIndex, f64)> = t.entries().collect();
        shuffled.shuffle(&mut r);
        // exact duplicates collapse
        let extra = shuffled[0];
        shuffled.push(extra);
        let rebuilt = SparseTensor3::build(dims, shuffled).unwrap();
        prop_assert_eq!(&rebuilt, &t);
        let indices = t.indices();
        prop_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        for (idx, v) in t.entries() {
            prop_assert_eq!(t.get(idx), Some(v));
        }
    }

    #[test]
    fn slice_counts_sum_to_entry_count(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dims = random_dims(&mut r, 10);
        let t = random_tensor(&mut r, dims, 0.3);
        for mode in Mode::ALL {
            let mut total = 0;
            for s in 0..dims.extent(mode) {
                let count = t.slice_count(mode, s).unwrap();
                let brute = t.indices().iter().filter(|idx| idx.along(mode) == s).count();
                prop_assert_eq!(count, brute);
                total += count;
            }
            prop_assert_eq!(total, t.len());
            prop_assert!(t.slice_count(mode, dims.extent(mode)).is_err());
        }
    }

    #[test]
    fn split_is_a_partition(seed in any::<u64>(), a in 0.01f64..0.5, b in 0.01f64..0.4) {
        let mut r = rng(seed);
        let t = random_tensor(&mut r, Dims::new(7, 8, 5), 0.4);
        let c = (1.0 - a - b).max(0.01);
        let spec = SplitSpec::new(a, b, c, seed).unwrap();
        let parts = split(&t, &spec).unwrap();
        let (na, nb, nc) = spec.sizes(t.len());
        prop_assert_eq!((parts.train.len(), parts.validation.len(), parts.test.len()), (na, nb, nc));
        prop_assert_eq!(na, (a * t.len() as f64 + 1e-9).floor() as usize);
        let sets: Vec<BTreeSet<EntryIndex>> = [&parts.train, &parts.validation, &parts.test]
            .iter()
            .map(|p| p.indices().iter().copied().collect())
            .collect();
        prop_assert!(sets[0].is_disjoint(&sets[1]));
        prop_assert!(sets[0].is_disjoint(&sets[2]));
        prop_assert!(sets[1].is_disjoint(&sets[2]));
        let mut union: Vec<(EntryIndex, f64)> = parts
            .train
            .entries()
            .chain(parts.validation.entries())
            .chain(parts.test.entries())
            .collect();
        union.sort_by_key(|x| x.0);
        let original: Vec<(EntryIndex, f64)> = t.entries().collect();
        if (a + b + c - 1.0).abs() < 1e-9 {
            prop_assert_eq!(union, original);
        } else {
            prop_assert!(union.iter().all(|e| original.contains(e)));
        }
        prop_assert_eq!(split(&t, &spec).unwrap(), parts);
    }

    #[test]
    fn parse_serialize_is_idempotent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dims = random_dims(&mut r, 6);
        let t = random_tensor(&mut r, dims, 0.5);
        let mut text = Vec::new();
        write_qos_log(&t, &mut text).unwrap();
        let once = parse_qos_reader(&text[..], Path::new("mem"), dims, ParseOptions::default()).unwrap();
        prop_assert_eq!(&once.tensor, &t);
        prop_assert_eq!(once.kept + once.dropped, once.records);
        let mut again = Vec::new();
        write_qos_log(&once.tensor, &mut again).unwrap();
        prop_assert_eq!(text, again);
    }

    #[test]
    fn ingest_counts_balance(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut lines = String::new();
        let mut negatives = 0;
        let n = r.random_range(1..40);
        for x in 0..n {
            let v: f64 = if r.random::<f64>() < 0.3 { negatives += 1; -1.0 } else { r.random_range(0.0..9.0) };
            lines.push_str(&format!("{} {} {} {v}\n", x % 4, x / 4 % 5, x / 20));
        }
        let log = parse_qos_reader(lines.as_bytes(), Path::new("mem"), Dims::new(4, 5, 2), ParseOptions::default()).unwrap();
        prop_assert_eq!(log.records, n);
        prop_assert_eq!(log.dropped, negatives);
        prop_assert_eq!(log.kept, n - negatives);
        prop_assert_eq!(log.tensor.len(), log.kept);
    }

    #[test]
    fn prediction_matches_naive_loops(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dims = random_dims(&mut r, 6);
        let structure = random_structure(&mut r, 3, 3);
        let model = random_model(&mut r, dims, &structure);
        for i in 0..dims.users {
            for j in 0..dims.services {
                for k in 0..dims.slices {
                    let fast = model.predict_entry(EntryIndex::new(i, j, k)).unwrap();
                    prop_assert!((fast - naive_predict(&model, i, j, k)).abs() <= 1e-10);
                    prop_assert!(fast >= 0.0);
                }
            }
        }
    }

    #[test]
    fn block_order_does_not_matter(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dims = random_dims(&mut r, 5);
        let structure = random_structure(&mut r, 3, 3);
        let model = random_model(&mut r, dims, &structure);
        let mut order: Vec<usize> = (0..structure.len()).collect();
        order.shuffle(&mut r);
        let permuted = model.permute_blocks(&order).unwrap();
        for i in 0..dims.users {
            for j in 0..dims.services {
                for k in 0..dims.slices {
                    let idx = EntryIndex::new(i, j, k);
                    let d = model.predict_entry(idx).unwrap() - permuted.predict_entry(idx).unwrap();
                    prop_assert!(d.abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn cp_degeneration(seed in any::<u64>(), rank in 1usize..4) {
        let mut r = rng(seed);
        let dims = random_dims(&mut r, 5);
        let mut model = random_model(&mut r, dims, &reduce_to_cp(rank).unwrap());
        for b in &mut model.blocks {
            b.core.fill(1.0);
        }
        for i in 0..dims.users {
            for j in 0..dims.services {
                for k in 0..dims.slices {
                    let mut cp = model.user_bias[i] + model.service_bias[j] + model.time_bias[k];
                    for b in &model.blocks {
                        cp += b.user_factors[[i, 0]] * b.service_factors[[j, 0]] * b.time_factors[[k, 0]];
                    }
                    let got = model.predict_entry(EntryIndex::new(i, j, k)).unwrap();
                    prop_assert!((got - cp).abs() <= 1e-12 * cp.max(1.0));
                }
            }
        }
    }

    #[test]
    fn epochs_preserve_nonnegativity(seed in any::<u64>(), lambda in 0.0f64..1.0) {
        let mut r = rng(seed);
        let dims = random_dims(&mut r, 5);
        let structure = random_structure(&mut r, 2, 2);
        let train = random_tensor(&mut r, dims, 0.5);
        let cfg = TrainConfig { lambda1: lambda, lambda2: lambda, lambda3: lambda, ..TrainConfig::default() };
        let mut model = BnbtModel::init_random(dims, &structure, seed).unwrap();
        for _ in 0..5 {
            model = epoch(&model, &train, &cfg).unwrap();
            prop_assert!(model.is_nonnegative());
        }
    }

    #[test]
    fn metrics_are_ordered_and_permutation_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dims = random_dims(&mut r, 5);
        let structure = random_structure(&mut r, 2, 2);
        let model = random_model(&mut r, dims, &structure);
        let test = random_tensor(&mut r, dims, 0.6);
        let (e, a) = (rmse(&model, &test).unwrap(), mae(&model, &test).unwrap());
        prop_assert!(e >= a - 1e-12);
        let mut residuals: Vec<f64> = test.entries().map(|(idx, y)| y - naive_predict(&model, idx.i, idx.j, idx.k)).collect();
        residuals.shuffle(&mut r);
        let shuffled_rmse = btdqos::eval::rmse_of(&residuals).unwrap();
        prop_assert!((shuffled_rmse - e).abs() <= 1e-12 * e.max(1.0));
    }

    #[test]
    fn checkpoint_roundtrip_is_bitwise(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dims = random_dims(&mut r, 5);
        let structure = random_structure(&mut r, 3, 3);
        let mut model = random_model(&mut r, dims, &structure);
        // exercise awkward magnitudes
        model.user_bias[0] = f64::MIN_POSITIVE;
        model.blocks[0].core[[0, 0, 0]] = 1.0 / 3.0 * 1e300;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        btdqos::save_model(&model, &path, None).unwrap();
        let back = btdqos::load_model(&path).unwrap();
        let bits = |m: &BnbtModel| m.parameters().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&model));
        prop_assert_eq!(back.structure(), model.structure());
    }
}
