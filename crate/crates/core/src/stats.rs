//! Nonparametric statistics and density estimation.
//!
//! Every function returns a [`StatReport`] that echoes its parameters, so
//! serialized reports are reproducible without the calling context. A
//! statistic that is undefined on its input (constant ranks, zero-entropy
//! marginals, degenerate chance agreement) is reported with
//! `statistic: None` rather than an error; genuinely unusable input
//! (empty samples, zero variance for KDE) is an error.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// A named statistic with its p-value (when the test has a null
/// distribution) and the parameters that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct StatReport {
    pub name: String,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub n1: usize,
    pub n2: usize,
    pub params: BTreeMap<String, String>,
}

impl StatReport {
    fn new(name: &str, n1: usize, n2: usize) -> Self {
        StatReport {
            name: name.to_string(),
            statistic: None,
            p_value: None,
            n1,
            n2,
            params: BTreeMap::new(),
        }
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

const KS_SERIES_TRUNCATION: f64 = 1e-10;

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`,
/// truncated when a term drops below `truncation`.
pub fn kolmogorov_survival(lambda: f64, truncation: f64) -> f64 {
    if lambda < 1e-12 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..10_000u64 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < truncation {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test.
///
/// D is the supremum distance between the two empirical CDFs; the p-value
/// comes from the asymptotic Kolmogorov distribution evaluated at
/// `sqrt(n1*n2/(n1+n2)) * D`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<StatReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample("ks_two_sample"));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len(), sb.len());

    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < na && j < nb {
        let x = sa[i].min(sb[j]);
        while i < na && sa[i] <= x {
            i += 1;
        }
        while j < nb && sb[j] <= x {
            j += 1;
        }
        let diff = (i as f64 / na as f64 - j as f64 / nb as f64).abs();
        if diff > d {
            d = diff;
        }
    }

    let effective_n = (na * nb) as f64 / (na + nb) as f64;
    let p = kolmogorov_survival(effective_n.sqrt() * d, KS_SERIES_TRUNCATION);

    let mut report = StatReport::new("ks_two_sample", na, nb);
    report.statistic = Some(d);
    report.p_value = Some(p);
    Ok(report
        .param("p_value_method", "asymptotic kolmogorov series")
        .param("series_truncation", KS_SERIES_TRUNCATION))
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation with a t-approximation p-value on n-2 degrees
/// of freedom. A constant input leaves the statistic undefined (absent).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<StatReport> {
    if x.len() != y.len() {
        return Err(Error::EmptySample("spearman: length mismatch"));
    }
    if x.len() < 3 {
        return Err(Error::SampleTooSmall("spearman", 3));
    }
    let n = x.len();
    let mut report = StatReport::new("spearman", n, n).param("ties", "average ranks");
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let Some(rho) = pearson(&rx, &ry) else {
        return Ok(report.param("note", "constant input, statistic undefined"));
    };
    let rho = rho.clamp(-1.0, 1.0);
    report.statistic = Some(rho);
    let df = (n - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    report.p_value = Some(p.clamp(0.0, 1.0));
    Ok(report.param("p_value_method", "t approximation, df = n - 2"))
}

fn entropy_nats(counts: &BTreeMap<u64, usize>, total: f64) -> f64 {
    counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information `I(X;Y) / sqrt(H(X) H(Y))` with
/// natural-log entropies from the empirical joint table. A zero-entropy
/// marginal leaves the statistic undefined (absent). NMI has no null
/// distribution here, so no p-value is reported.
pub fn nmi<T: Ord, U: Ord>(x: &[T], y: &[U]) -> Result<StatReport> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::EmptySample("nmi"));
    }
    let n = x.len();
    let mut x_codes: BTreeMap<&T, u64> = BTreeMap::new();
    for v in x {
        let next = x_codes.len() as u64;
        x_codes.entry(v).or_insert(next);
    }
    let mut y_codes: BTreeMap<&U, u64> = BTreeMap::new();
    for v in y {
        let next = y_codes.len() as u64;
        y_codes.entry(v).or_insert(next);
    }

    let mut joint: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    let mut mx: BTreeMap<u64, usize> = BTreeMap::new();
    let mut my: BTreeMap<u64, usize> = BTreeMap::new();
    for (a, b) in x.iter().zip(y) {
        let (ca, cb) = (x_codes[a], y_codes[b]);
        *joint.entry((ca, cb)).or_insert(0) += 1;
        *mx.entry(ca).or_insert(0) += 1;
        *my.entry(cb).or_insert(0) += 1;
    }
    let total = n as f64;
    let hx = entropy_nats(&mx, total);
    let hy = entropy_nats(&my, total);

    let mut report = StatReport::new("nmi", n, n).param("entropy_base", "nats");
    if hx == 0.0 || hy == 0.0 {
        return Ok(report.param("note", "zero-entropy marginal, statistic undefined"));
    }
    let mut mi = 0.0;
    for (&(a, b), &c) in &joint {
        let pxy = c as f64 / total;
        let px = mx[&a] as f64 / total;
        let py = my[&b] as f64 / total;
        mi += pxy * (pxy / (px * py)).ln();
    }
    report.statistic = Some((mi / (hx * hy).sqrt()).clamp(0.0, 1.0));
    Ok(report)
}

/// Cohen's kappa `(p_o - p_e) / (1 - p_e)` with marginal-product chance
/// agreement. Undefined (absent) when chance agreement is exactly 1.
pub fn cohens_kappa<T: Ord>(r1: &[T], r2: &[T]) -> Result<StatReport> {
    if r1.is_empty() || r1.len() != r2.len() {
        return Err(Error::EmptySample("cohens_kappa"));
    }
    let n = r1.len() as f64;
    let mut m1: BTreeMap<&T, usize> = BTreeMap::new();
    let mut m2: BTreeMap<&T, usize> = BTreeMap::new();
    let mut agree = 0usize;
    for (a, b) in r1.iter().zip(r2) {
        *m1.entry(a).or_insert(0) += 1;
        *m2.entry(b).or_insert(0) += 1;
        if a == b {
            agree += 1;
        }
    }
    let p_o = agree as f64 / n;
    let mut p_e = 0.0;
    for (cat, &c1) in &m1 {
        if let Some(&c2) = m2.get(cat) {
            p_e += (c1 as f64 / n) * (c2 as f64 / n);
        }
    }
    let mut report = StatReport::new("cohens_kappa", r1.len(), r2.len());
    if (1.0 - p_e).abs() < 1e-15 {
        return Ok(report.param("note", "chance agreement is 1, statistic undefined"));
    }
    report.statistic = Some((p_o - p_e) / (1.0 - p_e));
    Ok(report)
}

/// Gaussian kernel density estimate with the Silverman rule-of-thumb
/// bandwidth `1.06 * sd * n^(-1/5)`.
pub fn kde(sample: &[f64], eval_points: &[f64]) -> Result<(Vec<f64>, StatReport)> {
    if sample.len() < 2 {
        return Err(Error::SampleTooSmall("kde", 2));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 {
        return Err(Error::ZeroVariance("kde"));
    }
    let bandwidth = 1.06 * var.sqrt() * n.powf(-0.2);
    let norm = 1.0 / (n * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let density = eval_points
        .iter()
        .map(|&x| {
            sample
                .iter()
                .map(|&xi| {
                    let z = (x - xi) / bandwidth;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    let report = StatReport::new("kde", sample.len(), eval_points.len())
        .param("kernel", "gaussian")
        .param("bandwidth_rule", "silverman 1.06*sd*n^(-1/5)")
        .param("bandwidth", bandwidth);
    Ok((density, report))
}

/// Silverman bandwidth for a sample, exposed for building evaluation grids.
pub fn silverman_bandwidth(sample: &[f64]) -> Option<f64> {
    if sample.len() < 2 {
        return None;
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 {
        return None;
    }
    Some(1.06 * var.sqrt() * n.powf(-0.2))
}

/// Decile bins for a continuous covariate: zeros go to bin 0, nonzero
/// values to bins 1..=10 by the deciles of the nonzero subsample. Equal
/// values always share a bin, so the binning is scale-free and stable.
pub fn decile_bins(values: &[f64]) -> Vec<u8> {
    let mut nonzero: Vec<f64> = values.iter().copied().filter(|&v| v != 0.0).collect();
    if nonzero.is_empty() {
        return vec![0; values.len()];
    }
    nonzero.sort_by(f64::total_cmp);
    let cuts: Vec<f64> = (1..10)
        .map(|i| {
            let idx = (i * nonzero.len()).div_ceil(10).saturating_sub(1);
            nonzero[idx.min(nonzero.len() - 1)]
        })
        .collect();
    values
        .iter()
        .map(|&v| {
            if v == 0.0 {
                0
            } else {
                1 + cuts.iter().filter(|&&c| c < v).count() as u8
            }
        })
        .collect()
}
