use qphi_wasm::{dephasing_heatmap_native, depolarizing_curve_native, named_state, summary_native};

#[test]
fn heatmap_peaks_on_the_diagonal() {
    let n = 9;
    let h = dephasing_heatmap_native(n, 0.0, 0.0).unwrap();
    assert_eq!(h.len(), n * n);
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!((max - 0.2157615).abs() < 1e-6);
    for i in 0..n {
        assert!((h[i * n + i] - max).abs() < 1e-9);
    }
    // computational basis on one side, equatorial on the other
    assert!(h[n / 2].abs() < 1e-9);
    assert!(dephasing_heatmap_native(0, 0.0, 0.0).is_err());
}

#[test]
fn depolarizing_curve_falls_to_zero() {
    let c = depolarizing_curve_native("ghz3", 11).unwrap();
    assert!((c[0] - 0.3803957).abs() < 1e-6);
    assert!(c[10].abs() < 1e-12);
    assert!(c.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(depolarizing_curve_native("nope", 3).is_err());
}

#[test]
fn summary_for_bell() {
    let s: serde_json::Value = serde_json::from_str(&summary_native("bell").unwrap()).unwrap();
    assert_eq!(s["newick"], "(0,1)[&phi=0.380396];");
    assert_eq!(s["cut"], "{0}|{1}");
    assert_eq!(named_state("w4").unwrap().n(), 4);
}
