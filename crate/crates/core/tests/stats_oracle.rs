use reactkit_core::stats::{paired_ttest, student_ttest, welch_ttest};
use statrs::distribution::{ContinuousCDF, StudentsT};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn two_sided(t: f64, df: f64) -> f64 {
    2.0 * StudentsT::new(0.0, 1.0, df).unwrap().cdf(-t.abs())
}

fn assert_close(got: f64, want: f64) {
    assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{got} vs {want}");
}

const A: [f64; 8] = [438.0, 512.0, 397.0, 455.0, 620.0, 401.0, 389.0, 477.0];
const B: [f64; 6] = [597.0, 642.0, 503.0, 711.0, 580.0, 655.0];

#[test]
fn welch_matches_textbook() {
    let r = welch_ttest(&A, &B).unwrap();
    let (sa, sb) = (var(&A) / 8.0, var(&B) / 6.0);
    let t = (mean(&A) - mean(&B)) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / 7.0 + sb * sb / 5.0);
    assert_close(r.t, t);
    assert_close(r.df, df);
    assert_close(r.p, two_sided(t, df));
}

#[test]
fn student_matches_textbook() {
    let r = student_ttest(&A, &B).unwrap();
    let sp = (7.0 * var(&A) + 5.0 * var(&B)) / 12.0;
    let t = (mean(&A) - mean(&B)) / (sp * (1.0 / 8.0 + 1.0 / 6.0)).sqrt();
    assert_close(r.t, t);
    assert_close(r.df, 12.0);
    assert_close(r.p, two_sided(t, 12.0));
}

#[test]
fn paired_matches_textbook() {
    let b: Vec<f64> = A.iter().enumerate().map(|(i, v)| v + 20.0 + (i as f64 * 7.0) % 13.0).collect();
    let r = paired_ttest(&A, &b).unwrap();
    let d: Vec<f64> = A.iter().zip(&b).map(|(x, y)| x - y).collect();
    let t = mean(&d) / (var(&d) / 8.0).sqrt();
    assert_close(r.t, t);
    assert_close(r.df, 7.0);
    assert_close(r.p, two_sided(t, 7.0));
}

#[test]
fn tiny_p_values_stay_accurate() {
    let far: Vec<f64> = B.iter().map(|v| v + 2000.0).collect();
    let r = welch_ttest(&A, &far).unwrap();
    let want = two_sided(r.t, r.df);
    assert!(r.p > 0.0 && (r.p / want - 1.0).abs() < 1e-6, "{} vs {want}", r.p);
}
