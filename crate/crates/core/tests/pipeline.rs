use kernelscope::data::{gen_quantum_dataset, subsample, Dataset};
use kernelscope::engineer::engineer_against_suite;
use kernelscope::geometry::{effective_dimension, model_complexity, screen, PairSweep, DEFAULT_LAMBDA_GRID};
use kernelscope::kernels::{fidelity_cross, normalize_trace};
use kernelscope::learn::{fit, predict, predict_raw};
use kernelscope::pipeline::{classical_suite, fidelity_normalized, pauli_features, projected_gram, synthetic_inputs};
use kernelscope::{Embedding, EmbeddingSpec, GramMatrix, ScreenConfig};

fn setup(embedding: Embedding, n: usize, count: usize, seed: u64) -> (Dataset, Vec<GramMatrix>, Vec<GramMatrix>) {
    let spec = EmbeddingSpec::new(embedding, n, seed ^ 0xe3);
    let x = synthetic_inputs(count, n, seed).unwrap();
    let ds = gen_quantum_dataset(&x, &spec, seed + 1).unwrap();
    let states = spec.embed_all(&ds.x).unwrap();
    let quantum = vec![
        fidelity_normalized(&states).unwrap(),
        projected_gram(&pauli_features(&states), None).unwrap(),
    ];
    let classical = classical_suite(&ds.x, None).unwrap();
    (ds, quantum, classical)
}

#[test]
fn screen_is_deterministic_and_serializes() {
    let run = || {
        let (ds, q, c) = setup(Embedding::E2, 3, 40, 11);
        let cfg = ScreenConfig::default();
        serde_json::to_string(&screen(&q, &c, &cfg, Some(&ds.y)).unwrap()).unwrap()
    };
    let a = run();
    assert_eq!(a, run());
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["N"], 40);
    assert!(v["verdict"].is_string());
}

#[test]
fn kernel_against_itself_has_unit_geometry() {
    for emb in [Embedding::E1, Embedding::E2, Embedding::E3] {
        let (_, _, c) = setup(emb, 3, 30, 5);
        // the sharpest RBF in the suite is comfortably full rank
        let k = c.last().unwrap();
        let g = PairSweep::new(k, k).unwrap().at(0.0).g_gen;
        assert!((g - 1.0).abs() < 1e-6, "{emb:?} {}: {g}", k.label());
    }
}

#[test]
fn trace_normalized_grams_have_trace_n_and_bounded_dimension() {
    let (_, q, c) = setup(Embedding::E3, 2, 25, 2);
    for k in q.iter().chain(&c) {
        assert!((k.base.trace() - 25.0).abs() < 1e-9, "{}", k.label());
        let d = effective_dimension(k).unwrap();
        assert!((1.0 - 1e-9..=25.0 + 1e-9).contains(&d), "{}: {d}", k.label());
    }
}

#[test]
fn engineered_labels_reach_requested_geometry() {
    let (_, q, c) = setup(Embedding::E2, 3, 40, 8);
    let (idx, e) = engineer_against_suite(&q[0], &c, &DEFAULT_LAMBDA_GRID, 0.05).unwrap();
    let s_q = model_complexity(&q[0], &e.y_real, 0.0).unwrap();
    let s_c = model_complexity(&c[idx], &e.y_real, e.lambda_used).unwrap();
    assert!((s_q - 1.0).abs() < 1e-6);
    assert!((s_c - e.g_gen_achieved.powi(2)).abs() < 1e-6 * s_c.max(1.0));
}

#[test]
fn fidelity_model_interpolates_through_cross_rows() {
    let spec = EmbeddingSpec::new(Embedding::E1, 2, 0);
    let x = synthetic_inputs(30, 2, 4).unwrap();
    let ds = gen_quantum_dataset(&x, &spec, 6).unwrap();
    let ds = subsample(&ds, 20, 1).unwrap();
    let states = spec.embed_all(&ds.x).unwrap();
    let k = normalize_trace(&kernelscope::kernels::fidelity_gram(&states).unwrap()).unwrap();
    let model = fit(&k, &ds.y, 1e-8).unwrap();
    // cross rows against the training set itself recover the fit
    let pred = predict(&model, &fidelity_cross(&states, &states).unwrap()).unwrap();
    let raw = predict_raw(&model, &fidelity_cross(&states, &states).unwrap()).unwrap();
    for ((p, r), y) in pred.iter().zip(&raw).zip(&ds.y) {
        assert!((p - y).abs() < 1e-3);
        assert!(p.abs() <= 1.0 && (p - r.clamp(-1.0, 1.0)).abs() < 1e-15);
    }
}

#[test]
fn dataset_files_round_trip_with_hash_check() {
    let (ds, q, _) = setup(Embedding::E1, 2, 12, 3);
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("d.csv");
    ds.write(&path).unwrap();
    let back = Dataset::read(&path).unwrap();
    assert_eq!(back.x, ds.x);
    assert_eq!(back.y, ds.y);

    let gpath = tmp.path().join("k.gram");
    q[0].write_binary(&gpath).unwrap();
    let g = GramMatrix::read_binary(&gpath).unwrap();
    assert_eq!(g, q[0]);

    // tampering with the CSV invalidates the sidecar hash
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen('1', "2", 1)).unwrap();
    assert!(Dataset::read(&path).is_err());
}
