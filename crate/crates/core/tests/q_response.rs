use hcscale::spectral::{estimate_eq, PairGeometry};

/// Beyond the knee where M leaves 1, shorter wavelengths never raise E[Q]
/// by more than the Monte Carlo noise.
#[test]
fn mean_q_is_non_increasing_in_inverse_wavelength() {
    let points: Vec<_> = (3..=11)
        .map(|k| {
            let geom = PairGeometry::new(1.0, 2.0, 2f64.powi(-k), 2.0).unwrap();
            (geom.dof(), estimate_eq(&geom, 20_000, 32, 1000 + k as u64).unwrap())
        })
        .collect();
    assert!(points.iter().all(|(m, _)| *m > 1.0));
    for w in points.windows(2) {
        let (a, b) = (&w[0].1, &w[1].1);
        let noise = 3.0 * a.std_error.hypot(b.std_error);
        assert!(
            b.mean <= a.mean + noise,
            "E[Q] rose from {} to {} (noise {noise})",
            a.mean,
            b.mean
        );
    }
    // the sweep spans a real decay, not a flat line
    assert!(points[points.len() - 1].1.mean < 0.2 * points[0].1.mean);
}
