use std::f64::consts::PI;

use klx_core::montecarlo::{mean_with_se, sample_norm2, tail_estimate};
use klx_core::smallball::{eval_asymptotic, predict, Branch};
use klx_core::spectral::{nystrom_spectrum, transformed_kl};
use klx_core::{Kernel, Transform, Weight};

fn bridge(alpha: f64) -> Transform {
    Transform::new(&Kernel::bridge(), &Weight::constant(1.0), alpha).unwrap()
}

/// Positive roots of `tan x = x` by Newton from `(k + ½)π` downward.
fn tan_roots(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            let mut x = (k as f64 + 0.5) * PI - 1e-3;
            for _ in 0..60 {
                let f = x.sin() - x * x.cos();
                let df = x * x.sin();
                x -= f / df;
            }
            x
        })
        .collect()
}

#[test]
fn critical_bridge_spectrum_from_first_principles() {
    let ev = transformed_kl(&bridge(12.0), 40).unwrap().eigenvalues;
    let mut oracle: Vec<f64> = (1..=20).map(|k| (2.0 * k as f64 * PI).powi(-2)).collect();
    oracle.extend(tan_roots(20).iter().map(|t| (2.0 * t).powi(-2)));
    oracle.sort_by(|a, b| b.total_cmp(a));
    for (k, (a, b)) in ev.iter().zip(&oracle).enumerate().take(30) {
        assert!((a - b).abs() <= 1e-12 * b, "k={k}: {a} vs {b}");
    }
}

#[test]
fn dual_parameters_share_a_spectrum() {
    let tr = Transform::new(
        &Kernel::wiener(),
        &Weight::parse("poly:t*(1-t)").unwrap(),
        0.8,
    )
    .unwrap();
    let a = transformed_kl(&tr, 12).unwrap().eigenvalues;
    let b = transformed_kl(&tr.dual(), 12).unwrap().eigenvalues;
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-10 * x, "{x} vs {y}");
    }
}

#[test]
fn analytic_and_nystrom_routes_agree() {
    let tr = bridge(5.0);
    let a = transformed_kl(&tr, 8).unwrap().eigenvalues;
    let n = nystrom_spectrum(&tr.transformed_kernel(), 800, 8)
        .unwrap()
        .eigenvalues;
    for (x, y) in a.iter().zip(&n) {
        assert!((x - y).abs() / x < 1e-3, "{x} vs {y}");
    }
}

#[test]
fn eigenvalues_exhaust_the_trace() {
    // ∫ t(1-t) dt + Q ∫ (t(1-t)/2)² dt
    let tr = bridge(3.0);
    let trace = 1.0 / 6.0 + tr.big_q() / 120.0;
    let ev = transformed_kl(&tr, 2000).unwrap().eigenvalues;
    let sum: f64 = ev.iter().sum::<f64>() + tail_estimate(&ev, ev.len());
    assert!((sum - trace).abs() < 1e-6, "{sum} vs {trace}");

    let batch = sample_norm2(&ev, 50_000, 11).unwrap();
    let (mean, se) = mean_with_se(&batch.norms2().unwrap());
    let listed: f64 = ev.iter().sum();
    assert!(
        (mean - listed).abs() < 4.0 * se,
        "{mean} vs {listed} ± {se}"
    );
}

#[test]
fn untransformed_wiener_small_ball_value() {
    let tr = Transform::new(&Kernel::wiener(), &Weight::constant(1.0), 0.0).unwrap();
    let (desc, branch) = predict(&tr).unwrap();
    assert_eq!(branch, Branch::Theorem1);
    let (v, clamped) = eval_asymptotic(&desc, 0.1);
    let exact = 4.0 / PI.sqrt() * 0.1 * (-12.5f64).exp();
    assert!(!clamped);
    assert!((v - exact).abs() <= 1e-12 * exact, "{v} vs {exact}");
}
