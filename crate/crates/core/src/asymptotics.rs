//! Finite-sample surrogates for the stochastic big-O of a random series.
//!
//! A statistic collected over a width grid and several seeds is summarized
//! per width by an upper quantile, and the quantile envelope is fitted with a
//! pure power law `c·n^b` by least squares in log-log coordinates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One draw of a statistic at limiting parameter `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub n: usize,
    pub seed: u64,
    pub value: f64,
}

impl SweepSample {
    pub fn new(n: usize, seed: u64, value: f64) -> Self {
        Self { n, seed, value }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthStats {
    pub mean: f64,
    pub median: f64,
    pub q_quantile: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FitStatus {
    Ok,
    /// Some width had only zero values; the exponent is NaN.
    Degenerate {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub exponent_stderr: f64,
    pub r_squared: f64,
    pub quantile: f64,
    pub per_width_stats: BTreeMap<usize, WidthStats>,
    pub status: FitStatus,
    /// Number of zero quantiles replaced by the floor before taking logs.
    pub floored: usize,
}

impl AsymptoticFit {
    pub fn is_degenerate(&self) -> bool {
        matches!(self.status, FitStatus::Degenerate { .. })
    }

    pub fn widths(&self) -> Vec<usize> {
        self.per_width_stats.keys().copied().collect()
    }

    /// `e^{log_prefactor}·n^{exponent}`
    pub fn envelope(&self, n: usize) -> f64 {
        (self.log_prefactor + self.exponent * (n as f64).ln()).exp()
    }
}

/// Serialized fit summary; field set is fixed by the output format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub statistic: String,
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
    pub quantile: f64,
    pub widths: Vec<usize>,
    pub seeds_per_width: usize,
}

impl FitReport {
    pub fn from_fit(statistic: &str, fit: &AsymptoticFit) -> Self {
        Self {
            statistic: statistic.to_string(),
            exponent: fit.exponent,
            exponent_stderr: fit.exponent_stderr,
            log_prefactor: fit.log_prefactor,
            r_squared: fit.r_squared,
            quantile: fit.quantile,
            widths: fit.widths(),
            seeds_per_width: fit.per_width_stats.values().map(|s| s.count).min().unwrap_or(0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub quantile: f64,
    pub zero_floor: f64,
    pub min_widths: usize,
    pub min_seeds: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            quantile: 0.95,
            zero_floor: 1e-300,
            min_widths: 3,
            min_seeds: 3,
        }
    }
}

/// Linear-interpolated quantile of sorted data (Hyndman–Fan type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn group(samples: &[SweepSample]) -> BTreeMap<usize, Vec<f64>> {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in samples {
        by_n.entry(s.n).or_default().push(s.value);
    }
    for v in by_n.values_mut() {
        v.sort_by(f64::total_cmp);
    }
    by_n
}

fn width_stats(sorted: &[f64], q: f64) -> WidthStats {
    WidthStats {
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        median: quantile_sorted(sorted, 0.5),
        q_quantile: quantile_sorted(sorted, q),
        count: sorted.len(),
    }
}

fn validate(samples: &[SweepSample], opts: &FitOptions) -> Result<BTreeMap<usize, Vec<f64>>> {
    if !(opts.quantile > 0.0 && opts.quantile <= 1.0) {
        return Err(Error::Input(format!("quantile {} outside (0, 1]", opts.quantile)));
    }
    if let Some(s) = samples.iter().find(|s| !(s.value >= 0.0) || s.n == 0) {
        return Err(Error::Input(format!("invalid sample {s:?}")));
    }
    let by_n = group(samples);
    if by_n.len() < opts.min_widths {
        return Err(Error::InsufficientData(format!(
            "{} distinct widths, need {}",
            by_n.len(),
            opts.min_widths
        )));
    }
    if let Some((n, v)) = by_n.iter().find(|(_, v)| v.len() < opts.min_seeds) {
        return Err(Error::InsufficientData(format!(
            "width {n} has {} seeds, need {}",
            v.len(),
            opts.min_seeds
        )));
    }
    Ok(by_n)
}

/// Ordinary least squares of `ys` on `xs`: (slope, intercept, slope stderr, r²).
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let sst: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let stderr = if xs.len() > 2 && sxx > 0.0 {
        (ssr / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    // an exactly constant response is perfectly explained
    let r2 = if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, intercept, stderr, r2)
}

fn fit_envelope(stats: BTreeMap<usize, WidthStats>, opts: &FitOptions) -> AsymptoticFit {
    if let Some((n, _)) = stats.iter().find(|(_, s)| s.q_quantile == 0.0 && s.mean == 0.0) {
        return AsymptoticFit {
            exponent: f64::NAN,
            log_prefactor: f64::NAN,
            exponent_stderr: f64::NAN,
            r_squared: 0.0,
            quantile: opts.quantile,
            per_width_stats: stats.clone(),
            status: FitStatus::Degenerate {
                reason: format!("all values are zero at width {n}"),
            },
            floored: 0,
        };
    }
    let mut floored = 0;
    let xs: Vec<f64> = stats.keys().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = stats
        .values()
        .map(|s| {
            if s.q_quantile <= 0.0 {
                floored += 1;
                opts.zero_floor.ln()
            } else {
                s.q_quantile.ln()
            }
        })
        .collect();
    let (exponent, log_prefactor, exponent_stderr, r_squared) = ols(&xs, &ys);
    AsymptoticFit {
        exponent,
        log_prefactor,
        exponent_stderr,
        r_squared,
        quantile: opts.quantile,
        per_width_stats: stats,
        status: FitStatus::Ok,
        floored,
    }
}

/// Fit `log q_n = log c + b·log n` to the per-width `quantile` of the samples.
pub fn fit_power_law(samples: &[SweepSample], quantile: f64) -> Result<AsymptoticFit> {
    fit_power_law_with(
        samples,
        &FitOptions {
            quantile,
            ..FitOptions::default()
        },
    )
}

pub fn fit_power_law_with(samples: &[SweepSample], opts: &FitOptions) -> Result<AsymptoticFit> {
    let by_n = validate(samples, opts)?;
    let stats = by_n.iter().map(|(n, v)| (*n, width_stats(v, opts.quantile))).collect();
    Ok(fit_envelope(stats, opts))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub c: f64,
    pub n: usize,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub rows: Vec<BoundRow>,
    pub consistent: bool,
    /// Spearman correlation of probability with `n` over the top half of the grid at the largest `c`.
    pub trend: f64,
}

/// Empirical `P(value <= c·n^f_exponent)` for every `(c, n)`.
///
/// `consistent` requires, at the largest `c`, probability ≥ 0.95 at the
/// largest width and a nonnegative rank correlation with `n` over the upper
/// half of the width grid.
pub fn verify_bound(samples: &[SweepSample], f_exponent: f64, c_grid: &[f64]) -> Result<BoundTable> {
    if c_grid.is_empty() {
        return Err(Error::Input("empty c grid".into()));
    }
    if c_grid.iter().any(|c| !(*c > 0.0)) || c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("c grid must be positive and ascending".into()));
    }
    let by_n = group(samples);
    if by_n.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    let mut rows = Vec::with_capacity(c_grid.len() * by_n.len());
    for &c in c_grid {
        for (&n, vals) in &by_n {
            let bound = c * (n as f64).powf(f_exponent);
            let hits = vals.iter().filter(|v| **v <= bound).count();
            rows.push(BoundRow {
                c,
                n,
                probability: hits as f64 / vals.len() as f64,
            });
        }
    }
    let c_max = *c_grid.last().expect("nonempty");
    let top: Vec<&BoundRow> = rows.iter().filter(|r| r.c == c_max).collect();
    let half = top.len() / 2;
    let upper = &top[half.min(top.len().saturating_sub(2))..];
    let xs: Vec<f64> = upper.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = upper.iter().map(|r| r.probability).collect();
    let trend = spearman(&xs, &ys);
    let last = top.last().expect("nonempty").probability;
    Ok(BoundTable {
        consistent: last >= 0.95 && trend >= 0.0,
        rows,
        trend,
    })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|a, b| v[*a].total_cmp(&v[*b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[order[k]] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; 0 when either side has no variance.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let m = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / m, ry.iter().sum::<f64>() / m);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformFit {
    pub fits: BTreeMap<String, AsymptoticFit>,
    /// Fit of the per-width maximum of the family quantiles.
    pub shared: AsymptoticFit,
}

/// Fit every family and the envelope shared by all of them.
pub fn uniform_family_fit(families: &BTreeMap<String, Vec<SweepSample>>, quantile: f64) -> Result<UniformFit> {
    if families.is_empty() {
        return Err(Error::Input("no families".into()));
    }
    let opts = FitOptions {
        quantile,
        ..FitOptions::default()
    };
    let mut fits = BTreeMap::new();
    let mut shared: BTreeMap<usize, WidthStats> = BTreeMap::new();
    for (label, samples) in families {
        let fit = fit_power_law_with(samples, &opts)?;
        for (n, s) in &fit.per_width_stats {
            shared
                .entry(*n)
                .and_modify(|acc| {
                    acc.mean = acc.mean.max(s.mean);
                    acc.median = acc.median.max(s.median);
                    acc.q_quantile = acc.q_quantile.max(s.q_quantile);
                    acc.count = acc.count.min(s.count);
                })
                .or_insert(*s);
        }
        fits.insert(label.clone(), fit);
    }
    Ok(UniformFit {
        fits,
        shared: fit_envelope(shared, &opts),
    })
}

pub const SAMPLES_CSV_HEADER: &str = "statistic,n,seed,value";

/// Write samples in canonical `(statistic, n, seed)` order, so the body does
/// not depend on the order in which cells finished.
pub fn write_samples_csv<W: std::io::Write>(rows: &[(String, SweepSample)], mut out: W) -> Result<()> {
    let mut sorted: Vec<&(String, SweepSample)> = rows.iter().collect();
    sorted.sort_by(|a, b| (&a.0, a.1.n, a.1.seed).cmp(&(&b.0, b.1.n, b.1.seed)));
    writeln!(out, "{SAMPLES_CSV_HEADER}")?;
    for (name, s) in sorted {
        if name.contains(',') || name.contains('\n') {
            return Err(Error::Input(format!(
                "statistic name `{name}` cannot be written to CSV"
            )));
        }
        writeln!(out, "{name},{},{},{:e}", s.n, s.seed, s.value)?;
    }
    Ok(())
}

/// Parse a samples CSV into per-statistic sample lists.
pub fn read_samples_csv<R: std::io::BufRead>(input: R) -> Result<BTreeMap<String, Vec<SweepSample>>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != SAMPLES_CSV_HEADER {
        return Err(Error::Input(format!("expected header `{SAMPLES_CSV_HEADER}`")));
    }
    let mut out: BTreeMap<String, Vec<SweepSample>> = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Input(format!("malformed samples row {}: `{line}`", i + 2));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad());
        }
        let sample = SweepSample::new(
            f[1].trim().parse().map_err(|_| bad())?,
            f[2].trim().parse().map_err(|_| bad())?,
            f[3].trim().parse().map_err(|_| bad())?,
        );
        out.entry(f[0].to_string()).or_default().push(sample);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, Normal};

    const WIDTHS: [usize; 6] = [32, 64, 128, 256, 512, 1024];

    fn deterministic(f: impl Fn(f64) -> f64) -> Vec<SweepSample> {
        WIDTHS
            .iter()
            .flat_map(|&n| (0..4).map(move |s| (n, s)))
            .map(|(n, s)| SweepSample::new(n, s, f(n as f64)))
            .collect()
    }

    fn noisy(exponent: f64, sigma: f64, seeds: u64, seed: u64) -> Vec<SweepSample> {
        let mut g = rng::seeded(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut out = Vec::new();
        for &n in &WIDTHS {
            for s in 0..seeds {
                let eps: f64 = noise.sample(&mut g);
                out.push(SweepSample::new(n, s, (n as f64).powf(exponent) * eps.exp()));
            }
        }
        out
    }

    #[test]
    fn samples_csv_round_trip_in_canonical_order() {
        let rows = vec![
            ("b".to_string(), SweepSample::new(64, 1, 0.5)),
            ("a".to_string(), SweepSample::new(64, 0, f64::NAN)),
            ("b".to_string(), SweepSample::new(32, 2, 1.25e-7)),
        ];
        let mut buf = Vec::new();
        write_samples_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "a,64,0,NaN");
        assert_eq!(text.lines().nth(2).unwrap(), "b,32,2,1.25e-7");
        let back = read_samples_csv(buf.as_slice()).unwrap();
        assert_eq!(
            back["b"],
            vec![SweepSample::new(32, 2, 1.25e-7), SweepSample::new(64, 1, 0.5)]
        );
        assert!(back["a"][0].value.is_nan());
        assert!(read_samples_csv("n,seed\n".as_bytes()).is_err());
    }

    #[test]
    fn exact_power_laws() {
        let fit = fit_power_law(&deterministic(|n| n), 0.95).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-12);
        let fit = fit_power_law(&deterministic(|_| 7.0), 0.95).unwrap();
        assert!(fit.exponent.abs() < 1e-12);
        assert!((fit.log_prefactor - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn noisy_inverse_square_root() {
        let fit = fit_power_law(&noisy(-0.5, 0.1, 32, 17), 0.95).unwrap();
        assert!((fit.exponent + 0.5).abs() < 0.1, "{}", fit.exponent);
    }

    #[test]
    fn planted_exponents_are_recovered() {
        for (i, b) in [-1.5, -1.0, -0.5, 0.0].into_iter().enumerate() {
            let fit = fit_power_law(&noisy(b, 0.1, 32, 100 + i as u64), 0.95).unwrap();
            assert!((fit.exponent - b).abs() < 0.1, "planted {b}, got {}", fit.exponent);
        }
    }

    #[test]
    fn insufficient_data() {
        let two: Vec<_> = deterministic(|n| n).into_iter().filter(|s| s.n <= 64).collect();
        assert!(matches!(fit_power_law(&two, 0.95), Err(Error::InsufficientData(_))));
        let few_seeds: Vec<_> = deterministic(|n| n).into_iter().filter(|s| s.seed < 2).collect();
        assert!(matches!(
            fit_power_law(&few_seeds, 0.95),
            Err(Error::InsufficientData(_))
        ));
        assert!(fit_power_law(&deterministic(|n| n), 0.0).is_err());
    }

    #[test]
    fn all_zero_width_is_degenerate() {
        let fit = fit_power_law(&deterministic(|n| if n < 100.0 { 0.0 } else { n }), 0.95).unwrap();
        assert!(fit.is_degenerate());
        assert!(fit.exponent.is_nan());
    }

    #[test]
    fn scale_equivariance() {
        let base = noisy(-0.7, 0.2, 8, 3);
        let f0 = fit_power_law(&base, 0.95).unwrap();
        let scaled: Vec<_> = base
            .iter()
            .map(|s| SweepSample::new(s.n, s.seed, s.value * 3.5))
            .collect();
        let f1 = fit_power_law(&scaled, 0.95).unwrap();
        assert!((f1.exponent - f0.exponent).abs() < 1e-12);
        assert!((f1.log_prefactor - f0.log_prefactor - 3.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn verify_bound_examples() {
        let t = verify_bound(&deterministic(|_| 1.0), 0.0, &[2.0]).unwrap();
        assert!(t.rows.iter().all(|r| r.probability == 1.0));
        assert!(t.consistent);

        let t = verify_bound(&deterministic(|n| n), 0.0, &[1.0, 10.0, 100.0]).unwrap();
        assert!(!t.consistent);
        let last = t.rows.iter().filter(|r| r.c == 100.0).last().unwrap();
        assert_eq!(last.probability, 0.0);

        assert!(verify_bound(&deterministic(|n| n), 0.0, &[]).is_err());
        assert!(verify_bound(&deterministic(|n| n), 0.0, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn verify_bound_with_lognormal_noise() {
        let samples = noisy(-1.0, 0.3, 64, 8);
        // 95th percentile of the ratio value / n^-1
        let mut ratios: Vec<f64> = samples.iter().map(|s| s.value * s.n as f64).collect();
        ratios.sort_by(f64::total_cmp);
        let c95 = quantile_sorted(&ratios, 0.95);
        let t = verify_bound(&samples, -1.0, &[c95 / 4.0, c95, 4.0 * c95]).unwrap();
        assert!(t.consistent, "{t:?}");
        // monotone in c at fixed n
        for &n in &WIDTHS {
            let probs: Vec<f64> = t.rows.iter().filter(|r| r.n == n).map(|r| r.probability).collect();
            assert!(probs.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn uniform_family_examples() {
        let mut fams = BTreeMap::new();
        fams.insert("a".to_string(), noisy(-0.5, 0.05, 16, 1));
        let single = uniform_family_fit(&fams, 0.95).unwrap();
        assert_eq!(single.shared.exponent, single.fits["a"].exponent);

        fams.insert("b".to_string(), noisy(-0.5, 0.05, 16, 1));
        let twins = uniform_family_fit(&fams, 0.95).unwrap();
        assert!((twins.shared.exponent - twins.fits["a"].exponent).abs() < 1e-12);

        fams.insert("b".to_string(), noisy(-1.0, 0.05, 16, 2));
        let mixed = uniform_family_fit(&fams, 0.95).unwrap();
        assert!((mixed.shared.exponent + 0.5).abs() < 0.1);
    }

    #[test]
    fn report_fields() {
        let fit = fit_power_law(&deterministic(|n| n), 0.9).unwrap();
        let json = serde_json::to_value(FitReport::from_fit("x", &fit)).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        let mut expected = vec![
            "statistic",
            "exponent",
            "exponent_stderr",
            "log_prefactor",
            "r_squared",
            "quantile",
            "widths",
            "seeds_per_width",
        ];
        expected.sort();
        let mut got = keys.clone();
        got.sort();
        assert_eq!(got, expected);
        assert_eq!(json["seeds_per_width"], 4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn monotone_quantiles_give_nonpositive_exponent(
                vals in proptest::collection::vec(0.01f64..100.0, 6)
            ) {
                let mut sorted = vals.clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                let samples: Vec<_> = WIDTHS.iter().zip(&sorted)
                    .flat_map(|(&n, &v)| (0..3).map(move |s| SweepSample::new(n, s, v)))
                    .collect();
                let fit = fit_power_law(&samples, 0.95).unwrap();
                prop_assert!(fit.exponent <= fit.exponent_stderr + 1e-12);
            }

            #[test]
            fn bound_probability_nondecreasing_in_c(
                vals in proptest::collection::vec(0.0f64..10.0, 18),
                c0 in 0.1f64..5.0,
            ) {
                let samples: Vec<_> = vals.iter().enumerate()
                    .map(|(i, v)| SweepSample::new(WIDTHS[i % 3], i as u64, *v))
                    .collect();
                let t = verify_bound(&samples, -0.5, &[c0, 2.0 * c0, 4.0 * c0]).unwrap();
                for n in [32usize, 64, 128] {
                    let p: Vec<f64> = t.rows.iter().filter(|r| r.n == n).map(|r| r.probability).collect();
                    prop_assert!(p.windows(2).all(|w| w[1] >= w[0]));
                }
            }
        }
    }
}
