//! Descriptive statistics and simple t-tests used by the report tables.

use crate::types::TStat;

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

// the rounded mean of identical values can differ from them by an ulp
fn all_equal(xs: &[f64]) -> bool {
    xs.iter().all(|x| *x == xs[0])
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    if all_equal(xs) {
        return Some(0.0);
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Population standard deviation (n denominator); zero for a single value.
pub fn population_std(xs: &[f64]) -> Option<f64> {
    if !xs.is_empty() && all_equal(xs) {
        return Some(0.0);
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    Some((ss / xs.len() as f64).sqrt())
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Linear-interpolation quantile (the common "type 7" definition), `p` in [0, 1].
pub fn quantile(xs: &[f64], p: f64) -> Option<f64> {
    if xs.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn min_max(xs: &[f64]) -> Option<(f64, f64)> {
    let first = *xs.first()?;
    Some(xs.iter().fold((first, first), |(lo, hi), &x| (lo.min(x), hi.max(x))))
}

/// `mean / (sd / sqrt(n))`.
pub fn one_sample_t(xs: &[f64]) -> Option<TStat> {
    let m = mean(xs)?;
    let sd = sample_std(xs)?;
    let scale = xs.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    Some(TStat::from_ratio(m, sd / (xs.len() as f64).sqrt(), scale))
}

/// Welch two-sample statistic for `mean(a) - mean(b)`.
pub fn welch_t(a: &[f64], b: &[f64]) -> Option<TStat> {
    let (ma, mb) = (mean(a)?, mean(b)?);
    let (sa, sb) = (sample_std(a)?, sample_std(b)?);
    let se = (sa * sa / a.len() as f64 + sb * sb / b.len() as f64).sqrt();
    let scale = a.iter().chain(b).fold(0.0_f64, |m, x| m.max(x.abs()));
    Some(TStat::from_ratio(ma - mb, se, scale))
}

/// Pearson correlation; `None` if either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mx = mean(x)?;
    let my = mean(y)?;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    let scale_x = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale_y = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    // treat rounding-level dispersion as none at all
    let tiny = |ss: f64, scale: f64| ss <= (1e-12 * scale).powi(2) * x.len() as f64;
    if tiny(sxx, scale_x) || tiny(syy, scale_y) {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
