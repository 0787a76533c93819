mod common;

use std::collections::BTreeMap;

use common::names;
use lbaudit::aggregate::{aggregate, AggregationSpec, Method};
use lbaudit::rankstats::{
    binomial, enumerate_subsets, kendall_tau_b, unique_topk_audit, unrank_subset, AuditOptions,
};
use lbaudit::scorebank::{
    human_normalize, load_matrix, orient, save_matrix, Direction, Format, MetricSpec, MetricsConfig,
    ScoreMatrix,
};
use lbaudit::Ranking;
use proptest::prelude::*;

fn rows_strategy(models: usize, tasks: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(1u32..1000, tasks), models)
        .prop_map(|r| r.into_iter().map(|row| row.into_iter().map(|v| v as f64 / 10.0).collect()).collect())
}

/// (models, tasks, rows) with at least two models and one task.
fn matrix_strategy() -> impl Strategy<Value = ScoreMatrix> {
    (2usize..8, 1usize..6)
        .prop_flat_map(|(m, t)| rows_strategy(m, t))
        .prop_map(|rows| {
            let (m, t) = (rows.len(), rows[0].len());
            grouped(ScoreMatrix::dense(&names("m", m), &names("t", t), rows).unwrap(), |t| t % 2)
        })
}

/// Sets each task's macro-average group to `g{group_of(task)}`.
fn grouped(m: ScoreMatrix, group_of: impl Fn(usize) -> usize) -> ScoreMatrix {
    let tasks = m
        .task_ids()
        .iter()
        .enumerate()
        .map(|(t, id)| (id.clone(), MetricSpec { group: Some(format!("g{}", group_of(t))), ..Default::default() }))
        .collect();
    m.with_metrics(MetricsConfig { tasks }).unwrap()
}

fn all_tasks(m: &ScoreMatrix) -> Vec<usize> {
    (0..m.n_tasks()).collect()
}

fn rebuild(m: &ScoreMatrix, f: impl Fn(usize, usize, f64) -> f64) -> ScoreMatrix {
    let rows = (0..m.n_models())
        .map(|i| (0..m.n_tasks()).map(|t| f(i, t, m.score(i, t).unwrap())).collect())
        .collect();
    ScoreMatrix::dense(m.model_ids(), m.task_ids(), rows)
        .and_then(|r| r.with_metrics(m.metrics_config()))
        .unwrap()
}

fn sorted_entries(r: &Ranking) -> Vec<(String, f64)> {
    let mut e = r.entries().to_vec();
    e.sort_by(|a, b| a.0.cmp(&b.0));
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_and_json_round_trip(
        rows in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, -1e6f64..1e6), 4), 1..6),
        lower in prop::collection::vec(any::<bool>(), 4),
    ) {
        let metrics: BTreeMap<String, MetricSpec> = lower
            .iter()
            .enumerate()
            .filter(|(_, l)| **l)
            .map(|(t, _)| (format!("t{t}"), MetricSpec { group: Some("g".into()), ..MetricSpec::lower_better() }))
            .collect();
        let m = ScoreMatrix::new(names("m", rows.len()), names("t", 4), rows, metrics).unwrap();
        let mut json = Vec::new();
        save_matrix(&m, &mut json, Format::Json).unwrap();
        prop_assert_eq!(&load_matrix(json.as_slice(), Format::Json).unwrap(), &m);

        let mut csv = Vec::new();
        save_matrix(&m, &mut csv, Format::Csv).unwrap();
        let back = load_matrix(csv.as_slice(), Format::Csv).unwrap().with_metrics(m.metrics_config()).unwrap();
        prop_assert_eq!(&back, &m);
    }

    #[test]
    fn orient_is_idempotent_and_flips_lower(m in matrix_strategy()) {
        let cfg = m.metrics_config();
        let mut tasks = cfg.tasks.clone();
        tasks.insert("t0".into(), MetricSpec::lower_better());
        let lowered = m.clone().with_metrics(MetricsConfig { tasks }).unwrap();
        let once = orient(&lowered);
        let twice = orient(&once);
        prop_assert_eq!(&*once, &*twice);
        for i in 0..m.n_models() {
            prop_assert_eq!(once.score(i, 0), m.score(i, 0).map(|v| -v));
        }
        prop_assert!(once.metrics().all(|(_, s)| s.direction == Direction::Higher));
    }

    #[test]
    fn human_normalize_keeps_order_and_anchors(
        m in matrix_strategy(),
        random in -50.0f64..40.0,
        gap in 1.0f64..80.0,
        lower in any::<bool>(),
    ) {
        let spec = MetricSpec {
            direction: if lower { Direction::Lower } else { Direction::Higher },
            random_baseline: Some(random),
            human_reference: Some(if lower { random - gap } else { random + gap }),
            ..Default::default()
        };
        let tasks = m.task_ids().iter().map(|t| (t.clone(), spec.clone())).collect();
        let m = m.with_metrics(MetricsConfig { tasks }).unwrap();
        let n = human_normalize(&m).unwrap();
        prop_assert!(n.is_human_normalized());
        let o = orient(&m);
        for t in 0..m.n_tasks() {
            prop_assert_eq!(n.metric(t).random_baseline, Some(0.0));
            prop_assert_eq!(n.metric(t).human_reference, Some(1.0));
            for i in 0..m.n_models() {
                for j in 0..m.n_models() {
                    let (a, b) = (o.score(i, t).unwrap(), o.score(j, t).unwrap());
                    let (na, nb) = (n.score(i, t).unwrap(), n.score(j, t).unwrap());
                    if a < b { prop_assert!(na < nb); }
                }
            }
        }
    }

    #[test]
    fn rankings_ignore_task_order(m in matrix_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let o = orient(&m);
        let mut perm = all_tasks(&m);
        perm.shuffle(&mut lbaudit::seed::rng(seed));
        for method in Method::ALL {
            let spec = AggregationSpec::new(method);
            let a = aggregate(&o, &all_tasks(&m), &spec).unwrap();
            let b = aggregate(&o, &perm, &spec).unwrap();
            prop_assert_eq!(a, b, "{}", method);
        }
    }

    #[test]
    fn rankings_follow_model_relabeling(m in matrix_strategy()) {
        // rename models in reverse; ranks must travel with the rows
        let renamed: Vec<String> = m.model_ids().iter().rev().cloned().collect();
        let rows = (0..m.n_models()).map(|i| (0..m.n_tasks()).map(|t| m.score(i, t).unwrap()).collect()).collect();
        let r = ScoreMatrix::dense(&renamed, m.task_ids(), rows)
            .and_then(|r| r.with_metrics(m.metrics_config()))
            .unwrap();
        for method in Method::ALL {
            let spec = AggregationSpec::new(method);
            let a = aggregate(&orient(&m), &all_tasks(&m), &spec).unwrap();
            let b = aggregate(&orient(&r), &all_tasks(&m), &spec).unwrap();
            for (i, name) in m.model_ids().iter().enumerate() {
                prop_assert_eq!(a.rank_of(name), b.rank_of(&renamed[i]));
            }
        }
    }

    #[test]
    fn monotone_transforms_keep_rank_based_outputs(m in matrix_strategy(), k in 0.1f64..3.0) {
        // a different strictly increasing map per task
        let t = rebuild(&m, |_, task, v| match task % 3 {
            0 => (v * k).exp(),
            1 => v * v * v + k,
            _ => (v + 1.0).ln() * k,
        });
        for method in [Method::AverageRank, Method::EliminationRanking] {
            let spec = AggregationSpec::new(method);
            prop_assert_eq!(
                aggregate(&orient(&m), &all_tasks(&m), &spec).unwrap(),
                aggregate(&orient(&t), &all_tasks(&m), &spec).unwrap()
            );
        }
    }

    #[test]
    fn geometric_mean_ignores_per_task_scale(
        m in matrix_strategy(),
        scales in prop::collection::vec(0.01f64..100.0, 6),
    ) {
        let pos = rebuild(&m, |_, _, v| v + 1.0);
        let scaled = rebuild(&pos, |_, t, v| v * scales[t]);
        let spec = AggregationSpec::new(Method::GeometricMean);
        prop_assert_eq!(
            aggregate(&orient(&pos), &all_tasks(&m), &spec).unwrap(),
            aggregate(&orient(&scaled), &all_tasks(&m), &spec).unwrap()
        );
    }

    #[test]
    fn mean_and_median_commute_with_common_affine_maps(
        m in matrix_strategy(),
        a in 1u32..8,
        b in -20i32..20,
    ) {
        // powers of two keep the arithmetic exact
        let scale = f64::from(1u32 << a) / 4.0;
        let t = rebuild(&m, |_, _, v| v * scale + f64::from(b));
        for method in [Method::ArithmeticMean, Method::Median] {
            let spec = AggregationSpec::new(method);
            prop_assert_eq!(
                aggregate(&orient(&m), &all_tasks(&m), &spec).unwrap(),
                aggregate(&orient(&t), &all_tasks(&m), &spec).unwrap()
            );
        }
    }

    #[test]
    fn every_method_agrees_on_one_task(
        col in prop::collection::btree_set(1u32..500, 2..9),
        frac in prop::collection::vec(0u32..10, 9),
        shuffle_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        // distinct integer parts so unit-width bins stay injective
        let mut vals: Vec<f64> = col.iter().zip(&frac).map(|(&v, &f)| f64::from(v) + f64::from(f) / 10.0).collect();
        vals.shuffle(&mut lbaudit::seed::rng(shuffle_seed));
        let rows: Vec<Vec<f64>> = vals.iter().map(|&v| vec![v]).collect();
        let m = orient(&grouped(ScoreMatrix::dense(&names("m", rows.len()), &["t"], rows).unwrap(), |_| 0));
        let reference = aggregate(&m, &[0], &AggregationSpec::new(Method::ArithmeticMean)).unwrap();
        for method in Method::ALL {
            prop_assert_eq!(&aggregate(&m, &[0], &AggregationSpec::new(method)).unwrap(), &reference, "{}", method);
        }
    }

    #[test]
    fn wide_bins_tie_everyone(m in matrix_strategy()) {
        let spec = AggregationSpec::new(Method::RobustAverageRank).with_bin_width(1e6);
        let r = aggregate(&orient(&m), &all_tasks(&m), &spec).unwrap();
        let tied = (m.n_models() as f64 + 1.0) / 2.0;
        prop_assert!(r.entries().iter().all(|(_, rank)| *rank == tied));
    }

    #[test]
    fn kendall_basic_identities(m in matrix_strategy()) {
        let o = orient(&m);
        let a = aggregate(&o, &all_tasks(&m), &AggregationSpec::new(Method::ArithmeticMean)).unwrap();
        let b = aggregate(&o, &[0], &AggregationSpec::new(Method::ArithmeticMean)).unwrap();
        if let Ok(t) = kendall_tau_b(&a, &a) { prop_assert_eq!(t, 1.0); }
        match (kendall_tau_b(&a, &b), kendall_tau_b(&b, &a)) {
            (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-15 && (-1.0..=1.0).contains(&x)),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "asymmetric outcome {:?}", other),
        }
        let reversed = Ranking::new(
            a.entries().iter().map(|(n, r)| (n.clone(), a.len() as f64 + 1.0 - r)).collect()
        ).unwrap();
        if let Ok(t) = kendall_tau_b(&a, &reversed) { prop_assert_eq!(t, -1.0); }
        prop_assert_eq!(sorted_entries(&a).len(), m.n_models());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unique_topk_properties(
        rows in (3usize..8, 2usize..6).prop_flat_map(|(m, t)| rows_strategy(m, t)),
        method_idx in 0usize..7,
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let (nm, nt) = (rows.len(), rows[0].len());
        let m = grouped(ScoreMatrix::dense(&names("m", nm), &names("t", nt), rows.clone()).unwrap(), |t| t % 2);
        let o = orient(&m);
        let spec = AggregationSpec::new(Method::ALL[method_idx]);
        let opts = AuditOptions::default();

        // task relabeling: permute columns under new names
        let mut perm: Vec<usize> = (0..nt).collect();
        perm.shuffle(&mut lbaudit::seed::rng(seed));
        let prow = rows.iter().map(|r| perm.iter().map(|&p| r[p]).collect()).collect();
        let relabeled = ScoreMatrix::dense(&names("m", nm), &names("x", nt), prow).unwrap();
        let relabeled = orient(&grouped(relabeled, |j| perm[j] % 2));

        for size in 1..=nt {
            let mut last = 0;
            for k in 1..=nm {
                let a = unique_topk_audit(&o, &spec, size, k, &opts).unwrap();
                prop_assert!(a.unique_count >= last, "not monotone in k");
                prop_assert!(a.unique_count as u64 <= a.total_combinations);
                last = a.unique_count;
                let b = unique_topk_audit(&relabeled, &spec, size, k, &opts).unwrap();
                prop_assert_eq!(a.unique_count, b.unique_count);
                if size == nt {
                    prop_assert_eq!(a.unique_count, 1);
                }
            }
        }
    }
}

#[test]
fn subset_counts_follow_pascal() {
    let mut table = vec![vec![1u64]];
    for n in 1..=12usize {
        let prev = &table[n - 1];
        let row: Vec<u64> = (0..=n)
            .map(|k| {
                let left = if k > 0 { prev[k - 1] } else { 0 };
                let right = prev.get(k).copied().unwrap_or(0);
                left + right
            })
            .collect();
        table.push(row);
    }
    for n in 1..=12usize {
        for k in 1..=n {
            let subsets: Vec<Vec<usize>> = enumerate_subsets(n, k).unwrap().collect();
            assert_eq!(subsets.len() as u64, table[n][k]);
            assert_eq!(binomial(n as u64, k as u64), Some(table[n][k]));
            assert!(subsets.windows(2).all(|w| w[0] < w[1]), "lexicographic");
            for (r, s) in subsets.iter().enumerate() {
                assert_eq!(unrank_subset(n, k, r as u64).as_ref(), Some(s));
            }
            assert_eq!(unrank_subset(n, k, subsets.len() as u64), None);
        }
    }
    assert_eq!(enumerate_subsets(8, 4).unwrap().count(), 70);
}
