use proptest::prelude::*;

use hermite_lab::dyadic::{block_partition, index_set, locate_block};
use hermite_lab::io::PathFile;
use hermite_lab::osc::oscillation;
use hermite_lab::path::ChaosPath;
use hermite_lab::stats::select_n0;
use hermite_lab::{kernel_time_integral, HermiteParams, QuadratureConfig};

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default().with_tol(1e-11)
}

fn params() -> impl Strategy<Value = HermiteParams> {
    (1u32..=3, 0.0f64..1.0).prop_map(|(n, u)| {
        let lo = 1.0 - 1.0 / (2.0 * n as f64);
        HermiteParams::new(n, lo + (1.0 - lo) * (0.1 + 0.8 * u)).unwrap()
    })
}

fn point(n: u32) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..-0.05, n as usize)
}

fn params_and_point() -> impl Strategy<Value = (HermiteParams, Vec<f64>)> {
    params().prop_flat_map(|p| (Just(p), point(p.rank())))
}

fn noisy_path(seed: u64, spu: u64, steps: u64) -> ChaosPath {
    let p = HermiteParams::new(1, 0.7).unwrap();
    // Deterministic rough function; any finite values will do here.
    ChaosPath::from_fn(p, spu, steps, move |t| {
        let k = (t * spu as f64).round() as u64 ^ seed;
        (k.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 11) as f64 / (1u64 << 53) as f64 + t
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_integral_grows_with_upper_limit(p in params(), b in 0.2f64..2.0, extra in 0.05f64..1.0, seed in 0u64..1000) {
        let x: Vec<f64> = (0..p.rank()).map(|i| -0.1 - ((seed + 7 * i as u64) % 13) as f64 * 0.2).collect();
        let a = kernel_time_integral(&p, 0.0, b, &x, &cfg()).unwrap().value;
        let c = kernel_time_integral(&p, 0.0, b + extra, &x, &cfg()).unwrap().value;
        prop_assert!(a > 0.0 && c > a);
    }

    #[test]
    fn kernel_integral_scales((p, x) in params_and_point(), lambda in 0.2f64..5.0) {
        let base = kernel_time_integral(&p, 0.0, 1.0, &x, &cfg()).unwrap().value;
        let xs: Vec<f64> = x.iter().map(|v| v * lambda).collect();
        let scaled = kernel_time_integral(&p, 0.0, lambda, &xs, &cfg()).unwrap().value;
        let expo = p.rank() as f64 * p.alpha() + 1.0;
        let want = lambda.powf(expo) * base;
        prop_assert!((scaled - want).abs() <= 1e-8 * want.abs().max(1.0), "{scaled} vs {want}");
    }

    #[test]
    fn kernel_integral_is_translation_invariant((p, x) in params_and_point(), shift in -5.0f64..5.0) {
        let base = kernel_time_integral(&p, 0.0, 1.0, &x, &cfg()).unwrap().value;
        let xs: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let moved = kernel_time_integral(&p, shift, 1.0 + shift, &xs, &cfg()).unwrap().value;
        prop_assert!((moved - base).abs() <= 1e-8 * base.max(1.0));
    }

    #[test]
    fn block_partitions_hold_invariants(j in 8u32..=22, e_exp in 0u32..6, n0 in 2u64..8) {
        let e = 1u64 << e_exp;
        match block_partition(j, e, n0) {
            Ok(bp) => {
                prop_assert!(bp.verify().is_ok(), "{:?}", bp.verify());
                let set = index_set(j, e).unwrap();
                for l in set.clone().step_by(1 + (*set.end() as usize / 50)) {
                    prop_assert!(bp.block_of(l).is_some());
                }
                let tau = 0.5;
                if let Ok((l, m)) = locate_block(tau, &bp) {
                    let (a, b) = bp.blocks[m - 1];
                    prop_assert!(a <= l && l <= b);
                }
            }
            Err(_) => {
                let diam = (1u64 << j) as f64 / e as f64 - 2.0;
                prop_assert!(diam < 10.0 * (n0 * j as u64) as f64);
            }
        }
    }

    #[test]
    fn select_n0_is_minimal(g in 0.0f64..0.999) {
        let n0 = select_n0(g).unwrap();
        prop_assert!(n0 >= 2);
        prop_assert!(2.0 * g.powi(n0 as i32) < 1.0);
        if n0 > 2 {
            prop_assert!(2.0 * g.powi(n0 as i32 - 1) >= 1.0);
        }
    }

    #[test]
    fn oscillation_ignores_shift_and_scales(seed in 0u64..10_000, c in -3.0f64..3.0, k in 0.1f64..4.0, tau in 0.3f64..0.7, r in 0.01f64..0.25) {
        let path = noisy_path(seed, 256, 256);
        let p = path.params;
        let base = oscillation(&path, tau, r).unwrap();
        let moved = ChaosPath::from_fn(p, 256, 256, |t| {
            let i = (t * 256.0).round() as usize;
            k * path.values()[i] + c
        }).unwrap();
        let o = oscillation(&moved, tau, r).unwrap();
        prop_assert!((o - k * base).abs() <= 1e-12 * (1.0 + k * base));
        prop_assert!(base >= 0.0);
        // Larger windows never see less.
        prop_assert!(oscillation(&path, tau, r * 1.1).unwrap() >= base);
    }

    #[test]
    fn path_file_round_trips(seed in 0u64..1000, count in 1usize..5, steps in 1u64..300) {
        let paths: Vec<ChaosPath> = (0..count).map(|i| noisy_path(seed + i as u64, 64, steps)).collect();
        let file = PathFile::from_paths(&paths).unwrap();
        let back = PathFile::from_bytes(&file.to_bytes()).unwrap();
        prop_assert_eq!(&back, &file);
        let again = back.to_paths().unwrap();
        for (a, b) in again.iter().zip(&paths) {
            prop_assert_eq!(a.values(), b.values());
            prop_assert_eq!(a.steps_per_unit(), b.steps_per_unit());
        }
    }
}
