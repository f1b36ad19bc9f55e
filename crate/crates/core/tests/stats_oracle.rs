use efmetrics_core::stats::{f_p_value, ols_zero_intercept, t_p_value, DesignData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// ∫₀^φ 2 sin^(2a−1)θ cos^(2b−1)θ dθ by composite Simpson. With u = sin²θ this
/// is the unnormalised incomplete beta integral up to u = sin²φ.
fn beta_integral(a: f64, b: f64, phi: f64) -> f64 {
    let n = 20_000;
    let h = phi / n as f64;
    let g = |t: f64| {
        let (s, c) = t.sin_cos();
        2.0 * s.powf(2.0 * a - 1.0) * c.powf(2.0 * b - 1.0)
    };
    let mut sum = g(0.0) + g(phi);
    for i in 1..n {
        sum += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn inc_beta_oracle(a: f64, b: f64, x: f64) -> f64 {
    let full = beta_integral(a, b, std::f64::consts::FRAC_PI_2);
    beta_integral(a, b, x.sqrt().asin()) / full
}

#[test]
fn t_and_f_match_quadrature() {
    let t_cases = [
        (0.5, 3.0),
        (1.0, 1.0),
        (1.3, 7.0),
        (2.0, 5.0),
        (2.228, 10.0),
        (2.5, 20.0),
        (3.1, 12.0),
        (4.0, 30.0),
        (0.2, 40.0),
        (5.0, 9.0),
    ];
    let f_cases = [
        (1.0, 1.0, 10.0),
        (2.5, 2.0, 15.0),
        (4.96, 1.0, 10.0),
        (0.7, 3.0, 8.0),
        (10.0, 1.0, 24.0),
        (3.2, 4.0, 30.0),
        (1.8, 5.0, 5.0),
        (6.0, 2.0, 40.0),
        (0.3, 1.0, 17.0),
        (12.0, 3.0, 14.0),
    ];
    for (t, df) in t_cases {
        let oracle = inc_beta_oracle(df / 2.0, 0.5, df / (df + t * t));
        let got = t_p_value(t, df);
        assert!((got - oracle).abs() < 1e-8, "t={t} df={df}: {got} vs {oracle}");
    }
    for (f, d1, d2) in f_cases {
        let oracle = inc_beta_oracle(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
        let got = f_p_value(f, d1, d2);
        assert!((got - oracle).abs() < 1e-8, "F={f} ({d1},{d2}): {got} vs {oracle}");
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn ols_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let b1: f64 = rng.gen_range(-5.0..5.0);
        let b2: f64 = rng.gen_range(-5.0..5.0);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..50 {
            let x1: f64 = rng.gen_range(0.0..100.0);
            let x2: f64 = rng.gen_range(0.0..100.0);
            rows.push(vec![x1, x2]);
            y.push(b1 * x1 + b2 * x2 + rng.gen_range(-20.0..20.0));
        }
        let (mut s11, mut s12, mut s22, mut s1y, mut s2y, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (r, &v) in rows.iter().zip(&y) {
            s11 += r[0] * r[0];
            s12 += r[0] * r[1];
            s22 += r[1] * r[1];
            s1y += r[0] * v;
            s2y += r[1] * v;
            syy += v * v;
        }
        let det = s11 * s22 - s12 * s12;
        let c1 = (s1y * s22 - s12 * s2y) / det;
        let c2 = (s11 * s2y - s12 * s1y) / det;
        let sse: f64 = rows
            .iter()
            .zip(&y)
            .map(|(r, v)| (v - c1 * r[0] - c2 * r[1]).powi(2))
            .sum();
        let s2 = sse / 48.0;
        let se1 = (s2 * s22 / det).sqrt();
        let se2 = (s2 * s11 / det).sqrt();
        let f = ((syy - sse) / 2.0) / s2;

        let fit = ols_zero_intercept(&DesignData::new(&rows, y).unwrap()).unwrap();
        assert!(rel(fit.coeffs[0], c1) < 1e-9 && rel(fit.coeffs[1], c2) < 1e-9);
        assert!(rel(fit.std_errors[0], se1) < 1e-9 && rel(fit.std_errors[1], se2) < 1e-9);
        assert!(rel(fit.sse, sse) < 1e-9);
        assert!(rel(fit.r2_uncentered, 1.0 - sse / syy) < 1e-9);
        assert!(rel(fit.f_stat, f) < 1e-9);
    }
}

#[test]
fn ols_scale_and_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|_| vec![rng.gen_range(1.0..50.0), rng.gen_range(1.0..50.0)])
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| 2.0 * r[0] + 0.5 * r[1] + rng.gen_range(-3.0..3.0))
        .collect();
    let base = ols_zero_intercept(&DesignData::new(&rows, y.clone()).unwrap()).unwrap();

    let scaled: Vec<f64> = y.iter().map(|v| v * 8.0).collect();
    let s = ols_zero_intercept(&DesignData::new(&rows, scaled).unwrap()).unwrap();
    assert!(rel(s.coeffs[0], 8.0 * base.coeffs[0]) < 1e-12);
    assert!(rel(s.r2_uncentered, base.r2_uncentered) < 1e-12);
    assert!(rel(s.t_stats[1], base.t_stats[1]) < 1e-10);

    let mut idx: Vec<usize> = (0..rows.len()).collect();
    idx.reverse();
    idx.swap(3, 17);
    let prow: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
    let py: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let p = ols_zero_intercept(&DesignData::new(&prow, py).unwrap()).unwrap();
    assert!(rel(p.coeffs[0], base.coeffs[0]) < 1e-10 && rel(p.coeffs[1], base.coeffs[1]) < 1e-10);
    assert!(rel(p.r2_uncentered, base.r2_uncentered) < 1e-12);
}
