use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sigpath::harness::{
    emit_report, parse_results_csv, render_barplot, render_results_csv, run_experiment, synth_dataset, DatasetSource,
    ExperimentConfig, SearchSpace, Subsampling, SynthSpec,
};
use sigpath::timeseries::{parse_long_csv, to_long_csv};
use sigpath::{Error, ImputationKind};

fn tiny(imputations: Vec<ImputationKind>, final_fits: usize) -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetSource::Synthetic(SynthSpec {
            train_instances: 40,
            test_instances: 20,
            timestamps: 10,
            ..SynthSpec::default()
        }),
        subsampling: Subsampling::Label { lo: 0.4, hi: 0.6 },
        imputations,
        search: SearchSpace {
            calls: 2,
            final_fits,
            max_epochs: 4,
            patience: 2,
            depths: vec![2],
            augment_widths: vec![3],
            batch_sizes: vec![16],
            ..SearchSpace::default()
        },
        mc_samples: 2,
        seed: 17,
        ..ExperimentConfig::default()
    }
}

#[test]
fn synthetic_round_trips_through_long_csv() {
    let spec = SynthSpec::default();
    let ds = synth_dataset(&spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(ds.len(), 300);
    let (series, labels) = to_long_csv(&ds);
    assert_eq!(parse_long_csv(&series, &labels).unwrap(), ds);
    let again = synth_dataset(&spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(again, ds);
}

#[test]
fn synthetic_class_means_differ() {
    // Welch t statistic on the second channel at the first timestamp. Phases
    // are restricted to a quarter period; with the default full period the
    // class means coincide by symmetry.
    let spec = SynthSpec {
        phase_jitter: std::f64::consts::FRAC_PI_2,
        ..SynthSpec::default()
    };
    let ds = synth_dataset(&spec, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let group = |c: usize| -> Vec<f64> {
        (0..ds.len())
            .filter(|&i| ds.labels[i] == c)
            .map(|i| ds.instances[i].value(0, 1).unwrap())
            .collect()
    };
    let stats = |xs: &[f64]| {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0), n)
    };
    let (m0, v0, n0) = stats(&group(0));
    let (m1, v1, n1) = stats(&group(1));
    let t = (m0 - m1) / (v0 / n0 + v1 / n1).sqrt();
    assert!(t.abs() > 5.0, "t = {t}");
}

#[test]
fn reruns_are_identical() {
    let cfg = tiny(vec![ImputationKind::Zero, ImputationKind::GpMc], 2);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.without_timings(), b.without_timings());
    assert_eq!(render_results_csv(&a), render_results_csv(&b));
    let c = run_experiment(&ExperimentConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(render_results_csv(&a), render_results_csv(&c));
}

#[test]
fn sweep_has_one_block_per_strategy_and_seed() {
    let kinds = vec![ImputationKind::Zero, ImputationKind::Indicator, ImputationKind::GpPom];
    let report = run_experiment(&tiny(kinds.clone(), 5)).unwrap();
    assert_eq!(report.strategies.len(), 3);
    for (block, kind) in report.strategies.iter().zip(&kinds) {
        assert_eq!(block.imputation, *kind);
        assert_eq!(block.fits.len(), 5);
        let mut seeds: Vec<u64> = block.fits.iter().map(|f| f.seed).collect();
        seeds.dedup();
        assert_eq!(seeds.len(), 5);
        for s in &block.summary {
            assert!((0.0..=1.0).contains(&s.mean));
            assert!(s.std.is_some());
        }
    }
    let rates = report.label_rates.as_ref().unwrap();
    assert!(rates.iter().all(|r| (0.4..0.6).contains(r)));

    let dir = tempfile::tempdir().unwrap();
    emit_report(&report, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let rows = parse_results_csv(&csv).unwrap();
    assert_eq!(rows.len(), 3 * 5 * 5);
    assert_eq!(rows, report.result_rows());

    let svg = std::fs::read_to_string(dir.path().join("barplot_balanced_accuracy.svg")).unwrap();
    let mut reader = quick_xml::Reader::from_str(&svg);
    let mut groups = 0;
    loop {
        match reader.read_event().expect("well-formed svg") {
            quick_xml::events::Event::Eof => break,
            quick_xml::events::Event::Start(e) if e.name().as_ref() == "g" => {
                let class = e.try_get_attribute("class").unwrap().map(|a| a.value.into_owned());
                if class.as_deref() == Some("bar-group") {
                    groups += 1;
                }
            }
            _ => {}
        }
    }
    assert_eq!(groups, 3);
    assert_eq!(render_barplot(&report, "auroc").matches("<rect").count(), 3);
}

#[test]
fn failures_flush_a_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(vec![ImputationKind::Zero], 1);
    cfg.dataset = DatasetSource::Csv {
        series: dir.path().join("missing.csv"),
        labels: dir.path().join("labels.csv"),
        name: None,
    };
    cfg.out_dir = Some(dir.path().join("out"));
    let err = run_experiment(&cfg).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    let md = std::fs::read_to_string(dir.path().join("out/results.md")).unwrap();
    assert!(md.contains("Incomplete run"));
    let csv = std::fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn diverging_search_reports_all_arms() {
    let mut cfg = tiny(vec![ImputationKind::Zero], 1);
    cfg.search.learning_rate = (1e300, 1e300);
    match run_experiment(&cfg) {
        Err(Error::AllArmsDiverged(n)) => assert_eq!(n, 2),
        other => panic!("expected divergence, got {other:?}"),
    }
}
