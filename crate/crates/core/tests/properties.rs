use mel_core::allocator::{
    check_feasible, solve_analytical, solve_eta, solve_oracle, solve_relaxed, ProblemInstance,
};
use mel_core::model::{
    batch_bits, compute_coefficients, cycle_time, iteration_flops, link_rate, model_bits, EdgeNode,
    LearningTask, LinkParams, Mode, NodeCoefficients,
};
use proptest::prelude::*;

/// Exhaustive search over every split of `d` samples and every `tau` up to
/// `tau_max`, evaluating the time constraint directly.
fn brute_force_tau(coeffs: &[(f64, f64, f64)], t: f64, d: u64, tau_max: u64) -> u64 {
    fn splits(k: usize, d: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if k == 1 {
            prefix.push(d);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=d {
            prefix.push(first);
            splits(k - 1, d - first, prefix, out);
            prefix.pop();
        }
    }
    let mut all = Vec::new();
    splits(coeffs.len(), d, &mut Vec::new(), &mut all);
    let mut best = 0;
    for tau in 1..=tau_max {
        let fits = all.iter().any(|split| {
            split.iter().zip(coeffs).all(|(&dk, &(c2, c1, c0))| {
                dk == 0 || c2 * tau as f64 * dk as f64 + c1 * dk as f64 + c0 <= t
            })
        });
        if fits {
            best = tau;
        }
    }
    best
}

fn instance(c: &[(f64, f64, f64)], t: f64, d: u64) -> ProblemInstance {
    ProblemInstance::new(
        c.iter()
            .map(|&(c2, c1, c0)| NodeCoefficients::new(c2, c1, c0).unwrap())
            .collect(),
        t,
        d,
    )
    .unwrap()
}

fn coeff_triple() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.05f64..3.0, 0.01f64..2.0, 0.0f64..6.0)
}

fn task_strategy() -> impl Strategy<Value = LearningTask> {
    (
        1u64..2000,
        1u64..64,
        1u64..64,
        0u64..50,
        0u64..500_000,
        1u64..5_000_000,
        1u64..100_000,
    )
        .prop_map(|(f, pd, pm, sd, sm, cm, d)| LearningTask {
            features: f,
            data_precision_bits: pd,
            model_precision_bits: pm,
            per_sample_model_coeffs: sd,
            fixed_model_coeffs: sm,
            model_complexity_flops: cm,
            total_samples: d,
        })
}

fn node_strategy() -> impl Strategy<Value = EdgeNode> {
    (1e8f64..5e9, 1e-3f64..1.0, -9.0f64..-2.0)
        .prop_map(|(f, p, h)| EdgeNode::new("n", f, p, 10f64.powf(h)).unwrap())
}

fn link_strategy() -> impl Strategy<Value = LinkParams> {
    (1e5f64..2e7, -21.0f64..-18.0).prop_map(|(w, n0)| LinkParams::new(w, 10f64.powf(n0)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn compact_time_equals_sum_of_legs(
        task in task_strategy(),
        node in node_strategy(),
        link in link_strategy(),
        tau in 0u64..200,
        dk in 0u64..100_000,
    ) {
        let c = compute_coefficients(&task, &node, &link, Mode::TaskParallelization).unwrap();
        let rate = link_rate(&node, &link);
        let send = (batch_bits(&task, dk) + model_bits(&task, dk)) / rate;
        let compute = iteration_flops(&task, dk) / node.cpu_frequency_hz;
        let ret = model_bits(&task, dk) / rate;
        let direct = send + tau as f64 * compute + ret;
        let compact = cycle_time(&c, tau, dk);
        prop_assert!((compact - direct).abs() <= 1e-12 * direct.abs().max(f64::MIN_POSITIVE));
    }
}

proptest! {
    #[test]
    fn distributed_mode_shrinks_only_the_linear_term(
        task in task_strategy(),
        node in node_strategy(),
        link in link_strategy(),
    ) {
        prop_assume!(task.per_sample_model_coeffs > 0);
        let tp = compute_coefficients(&task, &node, &link, Mode::TaskParallelization).unwrap();
        let dd = compute_coefficients(&task, &node, &link, Mode::DistributedDatasets).unwrap();
        prop_assert_eq!(tp.c2, dd.c2);
        prop_assert_eq!(tp.c0, dd.c0);
        prop_assert!(dd.c1 < tp.c1);
    }

    #[test]
    fn cycle_time_is_increasing(c in coeff_triple(), tau in 0u64..1000, dk in 1u64..1000) {
        let c = NodeCoefficients::new(c.0, c.1, c.2).unwrap();
        prop_assert!(cycle_time(&c, tau + 1, dk) > cycle_time(&c, tau, dk));
        prop_assert!(cycle_time(&c, tau, dk + 1) > cycle_time(&c, tau, dk));
    }

    #[test]
    fn link_rate_is_monotone(node in node_strategy(), link in link_strategy(), s in 1.01f64..10.0) {
        let r = link_rate(&node, &link);
        let more_power = EdgeNode { tx_power_w: node.tx_power_w * s, ..node.clone() };
        let more_gain = EdgeNode { channel_gain_linear: node.channel_gain_linear * s, ..node.clone() };
        let wider = LinkParams { bandwidth_hz: link.bandwidth_hz * s, ..link };
        prop_assert!(link_rate(&more_power, &link) > r);
        prop_assert!(link_rate(&more_gain, &link) > r);
        prop_assert!(link_rate(&node, &wider) > r);
    }

    #[test]
    fn schemes_match_exhaustive_search(
        c in prop::collection::vec(coeff_triple(), 1..=3),
        t in 1.0f64..40.0,
        d in 1u64..=8,
    ) {
        let p = instance(&c, t, d);
        let expected = brute_force_tau(&c, t, d, 1000);
        let a = solve_analytical(&p);
        let o = solve_oracle(&p);
        prop_assert_eq!(a.tau, expected);
        prop_assert_eq!(o.tau, expected);
        prop_assert_eq!(a.feasible, expected >= 1);
        prop_assert_eq!(o.feasible, expected >= 1);
    }

    #[test]
    fn analytical_matches_oracle_and_dominates_eta(
        c in prop::collection::vec(coeff_triple(), 1..=20),
        t in 1.0f64..200.0,
        d in 1u64..5000,
    ) {
        let p = instance(&c, t, d);
        let a = solve_analytical(&p);
        let o = solve_oracle(&p);
        let e = solve_eta(&p);
        prop_assert_eq!(a.tau, o.tau);
        prop_assert_eq!(a.feasible, o.feasible);
        prop_assert!(a.tau >= e.tau);
        for alloc in [&a, &o, &e] {
            if alloc.feasible {
                prop_assert_eq!(alloc.d_int.iter().sum::<u64>(), d);
                prop_assert!(check_feasible(&p, alloc).unwrap().ok);
            } else {
                prop_assert_eq!(alloc.tau, 0);
            }
        }
    }

    #[test]
    fn identical_learners_get_equal_batches(
        c in coeff_triple(),
        k in 1usize..=12,
        per_node in 1u64..400,
        t in 5.0f64..300.0,
    ) {
        let p = instance(&vec![c; k], t, per_node * k as u64);
        let a = solve_analytical(&p);
        let e = solve_eta(&p);
        prop_assert_eq!(a.tau, e.tau);
        if a.feasible {
            prop_assert!(a.d_int.iter().all(|&x| x == per_node));
            prop_assert_eq!(&a.d_int, &e.d_int);
        }
    }

    #[test]
    fn relaxed_batches_sum_to_dataset(
        c in prop::collection::vec(coeff_triple(), 1..=20),
        t in 1.0f64..200.0,
        d in 1u64..100_000,
    ) {
        let p = instance(&c, t, d);
        if let Ok(sol) = solve_relaxed(&p) {
            let total: f64 = sol.d_real.iter().sum();
            prop_assert!((total - d as f64).abs() <= 1e-9 * d as f64);
            prop_assert!(sol.residual.abs() <= 1e-9 * d as f64);
            prop_assert!(sol.tau_real >= 0.0);
        }
    }

    #[test]
    fn oracle_frontier_is_monotone(
        c in prop::collection::vec(coeff_triple(), 1..=8),
        t in 1.0f64..100.0,
        dt in 0.0f64..50.0,
        d in 1u64..2000,
        dd in 0u64..500,
    ) {
        let p = instance(&c, t, d);
        let base = solve_oracle(&p).tau;
        prop_assert!(solve_oracle(&p.with_clock(t + dt).unwrap()).tau >= base);
        prop_assert!(solve_oracle(&p.with_total_samples(d + dd).unwrap()).tau <= base);
    }
}
