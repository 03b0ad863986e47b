use cornergrowth::airy::{airy, airy_kernel, airy_prime, AiryTable, TracyWidom};

#[test]
fn airy_derivative_at_zero() {
    // -3^{-1/3} / Γ(1/3)
    let want = -3f64.powf(-1.0 / 3.0) / 2.678_938_534_707_747_6;
    assert!((airy_prime(0.0).unwrap() - want).abs() < 1e-10);
}

#[test]
fn airy_wronskian_like_decay() {
    // Ai(s) ~ exp(-2/3 s^{3/2}) / (2 √π s^{1/4}) for large s
    let s: f64 = 8.0;
    let asym = (-2.0 / 3.0 * s.powf(1.5)).exp() / (2.0 * std::f64::consts::PI.sqrt() * s.powf(0.25));
    assert!((airy(s).unwrap() / asym - 1.0).abs() < 0.01);
}

#[test]
fn kernel_diagonal_is_positive() {
    let table = AiryTable::<f64>::standard().unwrap();
    for s in [-3.0, 0.0, 2.0] {
        assert!(airy_kernel(&table, s, s).unwrap() > 0.0);
    }
}

#[test]
fn tracy_widom_moments() {
    let tw = TracyWidom::<f64>::new().unwrap();
    let h = 0.02;
    let grid: Vec<f64> = (0..=900).map(|k| -9.0 + h * k as f64).collect();
    let f: Vec<f64> = grid.iter().map(|&s| tw.fredholm(s).unwrap().f).collect();
    assert!(f.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    // E[X] = ∫ s dF and E[X²] by the trapezoid rule on dF
    let (mut m1, mut m2) = (0.0, 0.0);
    for k in 0..grid.len() - 1 {
        let mid = 0.5 * (grid[k] + grid[k + 1]);
        let df = f[k + 1] - f[k];
        m1 += mid * df;
        m2 += mid * mid * df;
    }
    let var = m2 - m1 * m1;
    assert!((m1 + 1.771_086_807).abs() < 1e-3, "mean {m1}");
    assert!((var - 0.813_194_792).abs() < 2e-3, "variance {var}");
}

#[test]
fn painleve_start_is_insensitive() {
    let base = TracyWidom::<f64>::new().unwrap();
    for t0 in [8.0, 12.0] {
        let moved = TracyWidom::<f64>::new().unwrap().with_start(t0);
        for s in [-5.0, -3.0, -1.0, 0.0, 2.0] {
            let (u, v) = (base.painleve(s).unwrap().f, moved.painleve(s).unwrap().f);
            assert!((u - v).abs() < 1e-8, "t0 {t0}, s {s}: {u} vs {v}");
        }
    }
}

#[test]
fn fredholm_and_painleve_agree() {
    let tw = TracyWidom::<f64>::new().unwrap();
    for s in -5..=2 {
        let (u, v) = (tw.fredholm(s as f64).unwrap().f, tw.painleve(s as f64).unwrap().f);
        assert!((u - v).abs() <= 1e-6, "s {s}: {u} vs {v}");
    }
}
