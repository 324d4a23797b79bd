//! Product-moment correlation, Welch's t-test and small summary helpers.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    (xs.len() >= 2).then(|| xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64)
}

/// Median; even counts average the two middle values.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Data(format!("length mismatch: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::Degenerate(format!("correlation needs at least 3 pairs, got {}", xs.len())));
    }
    let (mx, my) = (mean(xs).unwrap_or(0.0), mean(ys).unwrap_or(0.0));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchTest {
    pub t: f64,
    pub dof: f64,
    pub p_two_sided: f64,
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of freedom.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Degenerate(format!("each sample needs >= 2 values, got {} and {}", a.len(), b.len())));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite sample value".into()));
    }
    let (ma, mb) = (mean(a).unwrap_or(0.0), mean(b).unwrap_or(0.0));
    let va = sample_variance(a).unwrap_or(0.0) / a.len() as f64;
    let vb = sample_variance(b).unwrap_or(0.0) / b.len() as f64;
    let se2 = va + vb;
    if se2 <= 0.0 {
        return Err(Error::Degenerate("both samples have zero variance".into()));
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2 / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Degenerate(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(WelchTest { t, dof, p_two_sided: p })
}

/// min / median / p95 / max plus count and mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Option<Summary> {
        if xs.is_empty() {
            return None;
        }
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        let rank = ((0.95 * v.len() as f64).ceil() as usize).clamp(1, v.len());
        Some(Summary {
            count: v.len(),
            mean: mean(&v)?,
            min: v[0],
            median: median(&v)?,
            p95: v[rank - 1],
            max: v[v.len() - 1],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson_r(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson_r(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        // hand computation: cov 2.5/3, var 5/3 each -> 0.8
        assert!((pearson_r(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(pearson_r(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn welch_examples() {
        let a = [1.0, 2.0, 3.0];
        let w = welch_t(&a, &a).unwrap();
        assert_eq!(w.t, 0.0);
        assert!((w.p_two_sided - 1.0).abs() < 1e-12);
        let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        let w = welch_t(&a, &b).unwrap();
        assert!(w.t < -5.0 && w.p_two_sided < 0.01);
        assert!(welch_t(&[1.0], &a).is_err());
        assert!(welch_t(&[2.0, 2.0], &[2.0, 2.0]).is_err());
    }

    #[test]
    fn welch_textbook_values() {
        let a = [2.1, 2.5, 2.3, 2.7];
        let b = [1.9, 2.0, 2.2];
        // means 2.4 and 2.0333..; variances 0.0666.. and 0.02333..
        let (ma, mb) = (2.4, 6.1 / 3.0);
        let (va, vb): (f64, f64) = (0.2 / 3.0, 0.046_666_666_666_666_67 / 2.0);
        let se2 = va / 4.0 + vb / 3.0;
        let t = (ma - mb) / se2.sqrt();
        let dof = se2 * se2 / ((va / 4.0).powi(2) / 3.0 + (vb / 3.0).powi(2) / 2.0);
        let w = welch_t(&a, &b).unwrap();
        assert!((w.t - t).abs() < 1e-9, "{} vs {t}", w.t);
        assert!((w.dof - dof).abs() < 1e-9);
        assert!(w.p_two_sided > 0.0 && w.p_two_sided < 0.1);
    }

    #[test]
    fn median_and_summary() {
        assert_eq!(median(&[40_000.0, 60_000.0]), Some(50_000.0));
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        let s = Summary::of(&(1..=100).map(f64::from).collect::<Vec<_>>()).unwrap();
        assert_eq!((s.min, s.p95, s.max, s.count), (1.0, 95.0, 100.0, 100));
        assert!(Summary::of(&[]).is_none());
    }

    proptest! {
        #[test]
        fn pearson_affine_invariant(v in proptest::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 3..30), s in 0.1..10.0f64, c in -50.0..50.0f64) {
            let xs: Vec<f64> = v.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = v.iter().map(|p| p.1).collect();
            if let Ok(r) = pearson_r(&xs, &ys) {
                let scaled: Vec<f64> = xs.iter().map(|x| s * x + c).collect();
                prop_assert!((pearson_r(&scaled, &ys).unwrap() - r).abs() < 1e-9);
            }
        }

        #[test]
        fn welch_antisymmetric(a in proptest::collection::vec(-10.0..10.0f64, 2..20), b in proptest::collection::vec(-10.0..10.0f64, 2..20)) {
            if let (Ok(ab), Ok(ba)) = (welch_t(&a, &b), welch_t(&b, &a)) {
                prop_assert!((ab.t + ba.t).abs() < 1e-12);
                prop_assert!((ab.p_two_sided - ba.p_two_sided).abs() < 1e-12);
            }
        }
    }
}
