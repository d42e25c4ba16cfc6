use beamlab::manifold::TransversalMetric;
use beamlab::ray::{fan_beam, injectivity_probe, SplineBasis};

#[test]
fn disk_probe_functions_and_forms() {
    let m0 = TransversalMetric::disk();
    let basis = SplineBasis::inscribed(1.0, 15);
    let family = fan_beam(&m0, 40, 50).unwrap();
    let t = std::time::Instant::now();
    let f = injectivity_probe(&m0, &basis, false, &family, 0.05).unwrap();
    eprintln!("functions: ratio {:e} kernel {} ({:?})", f.min_ratio, f.kernel_dimension, t.elapsed());
    assert!(f.min_ratio > 1e-6);
    assert_eq!(f.kernel_dimension, 0);
    let t = std::time::Instant::now();
    let r = injectivity_probe(&m0, &basis, true, &family, 0.05).unwrap();
    eprintln!(
        "forms: kernel {} gauge {} residual {:e} image {:e} next {:e} ({:?})",
        r.kernel_dimension, r.gauge_dimension, r.gauge_residual, r.gauge_image, r.smallest_nonkernel_ratio, t.elapsed()
    );
    let k = r.unknowns - r.kernel_dimension;
    eprintln!("{:?}", &r.singular_values[k.saturating_sub(5)..(k + 3).min(r.unknowns)]);
    assert_eq!(r.kernel_dimension, r.gauge_dimension);
}

#[test]
fn spline_gauge_annihilated_by_generic_transform() {
    use beamlab::ray::{random_fan, RayTracer};
    use beamlab::Complex64;
    let m0 = TransversalMetric::disk();
    let basis = SplineBasis::inscribed(1.0, 15);
    let tr = RayTracer::new(&m0, 0.05);
    let zero = |_: &[f64]| Complex64::new(0.0, 0.0);
    let kinks = basis.kinks();
    let mut worst: f64 = 0.0;
    for bp in random_fan(&m0, 200, 7).unwrap().iter().take(40) {
        for &(i, j) in basis.interior_functions().iter().step_by(7) {
            let dp = |x: &[f64]| basis.differential(i, j, x).iter().map(|v| Complex64::new(*v, 0.0)).collect::<Vec<_>>();
            worst = worst.max(tr.xray_split(&zero, Some(&dp), bp, &kinks).unwrap().norm());
        }
    }
    assert!(worst <= 1e-8, "{worst:e}");
}
