mod common;

use common::metrics as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use tdur_core::baselines::mean_fit;
use tdur_core::eval::*;
use tdur_core::ingest::Phase;

fn pair(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = (0..n).map(|_| rng.random_range(0.0..6.0)).collect();
    let p = (0..n).map(|_| rng.random_range(0.0..6.0)).collect();
    (y, p)
}

#[test]
fn metrics_match_loop_oracles() {
    for seed in 0..100 {
        let (y, p) = pair(3 + (seed as usize % 40), seed);
        assert!((mae(&y, &p).unwrap() - oracle::mae(&y, &p)).abs() <= 1e-12);
        assert!((rmse(&y, &p).unwrap() - oracle::rmse(&y, &p)).abs() <= 1e-12);
        assert!((r2(&y, &p).unwrap() - oracle::r2(&y, &p)).abs() <= 1e-12);
        assert!((pearson(&y, &p).unwrap() - oracle::pearson(&y, &p)).abs() <= 1e-12);
        assert!(rmse(&y, &p).unwrap() >= mae(&y, &p).unwrap());
    }
}

#[test]
fn mean_predictor_r2_is_exactly_zero_on_train() {
    for seed in 0..20 {
        let (y, _) = pair(17, seed);
        let m = mean_fit(&y).unwrap();
        assert_eq!(r2(&y, &vec![m.value; y.len()]).unwrap(), 0.0);
    }
}

#[test]
fn pearson_affine_invariance() {
    let (y, p) = pair(10, 3);
    let base = pearson(&y, &p).unwrap();
    let q: Vec<f64> = p.iter().map(|v| 3.5 * v - 2.0).collect();
    assert!((pearson(&y, &q).unwrap() - base).abs() < 1e-12);
    let z: Vec<f64> = y.iter().map(|v| 0.25 * v + 7.0).collect();
    assert!((pearson(&z, &p).unwrap() - base).abs() < 1e-12);
}

fn phases(v: &[i64]) -> Vec<Phase> {
    v.iter().map(|&p| Phase::new(p).unwrap()).collect()
}

#[test]
fn one_record_per_phase_gives_five_rows() {
    let y = [1.0, 2.0, 3.0, 4.0];
    let rows = evaluate(&y, &[1.5, 2.0, 2.0, 5.0], &phases(&[1, 2, 3, 4])).unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0].phase, "All");
    assert!(rows[1..]
        .iter()
        .all(|r| r.n == 1 && r.r2.is_none() && r.pearson.is_none()));
}

#[test]
fn perfect_predictor_row() {
    let y = [0.5, 1.5, 2.5, 4.0];
    let rows = evaluate(&y, &y, &phases(&[1, 1, 2, 2])).unwrap();
    let all = &rows[0];
    assert_eq!(
        (all.mae, all.rmse, all.r2, all.pearson),
        (0.0, 0.0, Some(1.0), Some(1.0))
    );
}

#[test]
fn mean_predictor_on_held_out_fixture() {
    let train = [1.0, 2.0, 3.0];
    let test = [0.5, 2.0, 4.5, 1.0];
    let m = mean_fit(&train).unwrap();
    let pred = vec![m.value; 4];
    let rows = evaluate(&test, &pred, &phases(&[2, 2, 3, 3])).unwrap();
    // |0.5−2| + 0 + |4.5−2| + |1−2| = 5 over 4.
    assert_eq!(rows[0].mae, 1.25);
    assert!((rows[0].rmse - ((2.25 + 0.0 + 6.25 + 1.0) / 4.0f64).sqrt()).abs() < 1e-15);
    // mean(test) = 2, SS_total = 2.25+0+6.25+1 = 9.5, SS_res = 9.5.
    assert_eq!(rows[0].r2, Some(0.0));
    assert_eq!(rows[0].pearson, None);
    assert_eq!(rows[1].mae, 0.75);
    assert_eq!(rows[2].mae, 1.75);
}

#[test]
fn bootstrap_is_calibrated_under_the_null() {
    let exp = Exp::new(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let sims = 1000;
    let mut rejections = 0;
    for s in 0..sims {
        let a: Vec<f64> = (0..60).map(|_| exp.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..60).map(|_| exp.sample(&mut rng)).collect();
        if significance(&a, &b, 999, s).unwrap() < 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / sims as f64;
    println!("null rejection rate {rate}");
    assert!((0.03..=0.07).contains(&rate), "rate {rate}");
}

#[test]
fn bootstrap_is_seeded() {
    let (a, b) = pair(30, 1);
    assert_eq!(
        significance(&a, &b, 2000, 5).unwrap(),
        significance(&a, &b, 2000, 5).unwrap()
    );
}

fn sample_report() -> EvalReport {
    let (y, p1) = pair(40, 11);
    let (_, p2) = pair(40, 12);
    let ph: Vec<Phase> = (0..40).map(|i| Phase::new(i % 3 + 1).unwrap()).collect();
    let ids: Vec<String> = (0..40).map(|i| format!("NCT{i:08}")).collect();
    let mean = mean_fit(&y[..20]).unwrap().value;
    let models = vec![
        ModelRuns {
            model: "mean".into(),
            predictions: vec![vec![mean; 40]],
        },
        ModelRuns {
            model: "a".into(),
            predictions: vec![p1.clone(), p2.clone()],
        },
        ModelRuns {
            model: "b".into(),
            predictions: vec![p2, p1],
        },
    ];
    compare(&ids, &y, &ph, &models, Some("mean"), 1000, 3).unwrap()
}

#[test]
fn report_round_trips_and_csv_layout() {
    let report = sample_report();
    assert!(report.models[0].p_value.is_none());
    assert!(report.models[1].p_value.is_some());
    assert_eq!(report.models[0].aggregate[0].pearson, None);

    let dir = tempfile::tempdir().unwrap();
    let (json, csv_path) = emit_report(&report, &dir.path().join("out/report")).unwrap();
    assert_eq!(read_report(&json).unwrap(), report);

    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3 * 4 * 4);
    for row in &rows {
        let m = report.models.iter().find(|m| m.model == row[0]).unwrap();
        let agg = m.aggregate.iter().find(|a| a.phase == row[1]).unwrap();
        match agg.metric(&row[2]) {
            Some(ms) => {
                assert_eq!(row[3].parse::<f64>().unwrap(), ms.mean);
                assert_eq!(row[4].parse::<f64>().unwrap(), ms.std);
            }
            None => assert_eq!(&row[3], NA),
        }
        assert_eq!(row[5].parse::<usize>().unwrap(), agg.n);
    }
    // Models a and b see the same runs in a different order.
    assert_eq!(report.models[1].abs_errors, report.models[2].abs_errors);
    assert!(render_table(&report).contains("NA"));
}

#[test]
fn invariants_hold_on_every_row() {
    let report = sample_report();
    for m in &report.models {
        for run in &m.runs {
            for row in run {
                assert!(row.rmse >= row.mae && row.mae >= 0.0);
                assert!(row.r2.is_none_or(|v| v <= 1.0));
                assert!(row.pearson.is_none_or(|v| (-1.0..=1.0).contains(&v)));
            }
        }
    }
}

#[test]
fn unknown_reference_is_an_error() {
    let y = vec![1.0; 12];
    let ph = vec![Phase::new(1).unwrap(); 12];
    let ids = vec![String::from("x"); 12];
    let models = vec![ModelRuns {
        model: "a".into(),
        predictions: vec![y.clone()],
    }];
    assert!(compare(&ids, &y, &ph, &models, Some("zzz"), 10, 0).is_err());
}
