//! Daily category volumes, recall-adjusted prevalence and peak detection over predictions.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::annotate::taxonomy::Level;
use crate::error::{Error, Result};

pub const DEFAULT_PEAKS: usize = 5;
pub const DEFAULT_MIN_SEPARATION_DAYS: i64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRow {
    pub date: NaiveDate,
    pub total: u64,
    /// Counts aligned with `DailySeries::categories`.
    pub counts: Vec<u64>,
}

impl DailyRow {
    pub fn share(&self, category: usize) -> f64 {
        100.0 * self.counts[category] as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub categories: Vec<String>,
    /// Ascending by date; days without posts are absent.
    pub rows: Vec<DailyRow>,
}

impl DailySeries {
    pub fn category_index(&self, category: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == category)
    }

    pub fn shares(&self, category: &str) -> Result<Vec<(NaiveDate, f64)>> {
        let idx = self
            .category_index(category)
            .ok_or_else(|| Error::UnknownLabel { label: category.into(), context: "daily series".into() })?;
        Ok(self.rows.iter().map(|r| (r.date, r.share(idx))).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("date,total");
        for c in &self.categories {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            write!(out, "{},{}", r.date, r.total).unwrap();
            for i in 0..self.categories.len() {
                write!(out, ",{:.6}", r.share(i)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Groups `(date, category)` pairs by UTC date. A `None` date is an error.
pub fn daily_shares<S: AsRef<str>>(items: &[(Option<NaiveDate>, S)], level: Level) -> Result<DailySeries> {
    let categories = level.class_names();
    let mut days: BTreeMap<NaiveDate, Vec<u64>> = BTreeMap::new();
    for (i, (date, label)) in items.iter().enumerate() {
        let date = date.ok_or_else(|| Error::InvalidInput(format!("prediction {i} has no date")))?;
        let label = label.as_ref();
        let idx = categories
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnknownLabel { label: label.into(), context: format!("{level}-class prediction") })?;
        days.entry(date).or_insert_with(|| vec![0; categories.len()])[idx] += 1;
    }
    let rows = days
        .into_iter()
        .map(|(date, counts)| DailyRow { date, total: counts.iter().sum(), counts })
        .collect();
    Ok(DailySeries { categories, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedShare {
    pub category: String,
    pub raw: f64,
    pub recall: f64,
    pub adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceEstimate {
    pub categories: Vec<AdjustedShare>,
    /// 100 minus the adjusted relevant shares, never below zero.
    pub residual: f64,
    /// Set when the adjusted shares exceeded 100 and the residual was clamped.
    pub clamped: bool,
}

/// Divides each relevant category's share by the model's recall for it.
/// `raw` is in percent, in the order the output should follow.
pub fn recall_adjust(raw: &[(String, f64)], recalls: &HashMap<String, f64>) -> Result<PrevalenceEstimate> {
    let mut categories = Vec::with_capacity(raw.len());
    for (category, share) in raw {
        if share.is_nan() || *share < 0.0 {
            return Err(Error::InvalidInput(format!("share for {category} must be >= 0, got {share}")));
        }
        let recall = *recalls
            .get(category)
            .ok_or_else(|| Error::InvalidInput(format!("no recall for category {category}")))?;
        if !(recall > 0.0 && recall <= 1.0) {
            return Err(Error::InvalidInput(format!("recall for {category} must be in (0, 1], got {recall}")));
        }
        categories.push(AdjustedShare { category: category.clone(), raw: *share, recall, adjusted: share / recall });
    }
    let residual = 100.0 - categories.iter().map(|c| c.adjusted).sum::<f64>();
    let clamped = residual < 0.0;
    if clamped {
        log::warn!("adjusted shares sum to {:.2}%, residual clamped to 0", 100.0 - residual);
    }
    Ok(PrevalenceEstimate { categories, residual: residual.max(0.0), clamped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub category: String,
    pub date: NaiveDate,
    pub share: f64,
    pub rank: usize,
}

/// Up to `k` strict local maxima of a category's daily share, taken greedily by
/// descending share and kept at least `min_separation` calendar days apart.
/// Neighbours are the adjacent rows of the series; edge rows have one neighbour.
pub fn detect_peaks(series: &DailySeries, category: &str, k: usize, min_separation: i64) -> Result<Vec<Peak>> {
    if k == 0 {
        return Err(Error::InvalidInput("peak count must be >= 1".into()));
    }
    let points = series.shares(category)?;
    let n = points.len();
    let mut candidates: Vec<(NaiveDate, f64)> = (0..n)
        .filter(|&i| {
            let s = points[i].1;
            let left = i == 0 || s > points[i - 1].1;
            let right = i + 1 == n || s > points[i + 1].1;
            left && right
        })
        .map(|i| points[i])
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut chosen: Vec<(NaiveDate, f64)> = Vec::new();
    for (date, share) in candidates {
        if chosen.len() == k {
            break;
        }
        if chosen.iter().all(|(d, _)| (*d - date).num_days().abs() >= min_separation) {
            chosen.push((date, share));
        }
    }
    Ok(chosen
        .into_iter()
        .enumerate()
        .map(|(i, (date, share))| Peak { category: category.into(), date, share, rank: i + 1 })
        .collect())
}

pub fn peaks_to_csv(peaks: &[Peak]) -> String {
    let mut out = String::from("category,date,share,rank\n");
    for p in peaks {
        writeln!(out, "{},{},{:.6},{}", p.category, p.date, p.share, p.rank).unwrap();
    }
    out
}

/// Percent of items per class of `level`, in class order. Labels may be finer than `level`;
/// fine labels dropped by the level (none for Task 1 and Task 2) are rejected.
pub fn category_frequencies<S: AsRef<str>>(labels: &[S], level: Level) -> Result<Vec<(String, f64)>> {
    if labels.is_empty() {
        return Err(Error::InvalidInput("no labels to count".into()));
    }
    let classes = level.class_names();
    let mut counts = vec![0u64; classes.len()];
    for l in labels {
        let coarse = level
            .coarsen(l.as_ref())
            .ok_or_else(|| Error::UnknownLabel { label: l.as_ref().into(), context: format!("{level}-class frequency") })?;
        counts[classes.iter().position(|c| c == coarse).expect("coarsen returns a class")] += 1;
    }
    let n = labels.len() as f64;
    Ok(classes.into_iter().zip(counts).map(|(c, k)| (c, 100.0 * k as f64 / n)).collect())
}

const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939",
];

/// Static line chart, one series per category, with optional peak markers.
pub fn render_svg(series: &DailySeries, categories: &[String], peaks: &[Peak]) -> Result<String> {
    let (w, h, pad) = (960.0, 120.0 * categories.len().max(1) as f64, 40.0);
    let panel = (h - pad) / categories.len().max(1) as f64;
    let n = series.rows.len();
    let x_of = |i: usize| pad + (w - 2.0 * pad) * if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (p, cat) in categories.iter().enumerate() {
        let shares = series.shares(cat)?;
        let top = pad / 2.0 + p as f64 * panel;
        let max = shares.iter().map(|s| s.1).fold(0.0, f64::max).max(1e-9);
        let y_of = |s: f64| top + panel - 10.0 - (panel - 24.0) * s / max;
        let color = PALETTE[p % PALETTE.len()];
        writeln!(out, r#"<text x="{pad}" y="{:.1}">{cat} (max {:.1}%)</text>"#, top + 10.0, max).unwrap();
        let pts: Vec<String> = shares.iter().enumerate().map(|(i, s)| format!("{:.1},{:.1}", x_of(i), y_of(s.1))).collect();
        writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#, pts.join(" ")).unwrap();
        for peak in peaks.iter().filter(|pk| &pk.category == cat) {
            if let Some(i) = series.rows.iter().position(|r| r.date == peak.date) {
                let (x, y) = (x_of(i), y_of(peak.share));
                writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#, x + 4.0, y - 4.0, peak.date).unwrap();
            }
        }
    }
    if let (Some(first), Some(last)) = (series.rows.first(), series.rows.last()) {
        writeln!(out, r#"<text x="{pad}" y="{:.1}">{}</text>"#, h - 6.0, first.date).unwrap();
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, w - pad, h - 6.0, last.date).unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(d: u32) -> Option<NaiveDate> {
        NaiveDate::from_ymd_opt(2019, 1, d)
    }

    fn series_of(values: &[f64]) -> DailySeries {
        // shares in percent for "coping" out of 1000 posts per day
        DailySeries {
            categories: vec!["coping".into(), "irrelevant".into()],
            rows: values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let c = (v * 10.0).round() as u64;
                    DailyRow { date: day(1).unwrap() + chrono::Days::new(i as u64), total: 1000, counts: vec![c, 1000 - c] }
                })
                .collect(),
        }
    }

    #[test]
    fn one_day_shares() {
        let items = [(day(1), "coping"), (day(1), "awareness"), (day(1), "awareness"), (day(1), "awareness")];
        let s = daily_shares(&items, Level::Task1).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.shares("coping").unwrap()[0].1, 25.0);
        assert_eq!(s.shares("awareness").unwrap()[0].1, 75.0);
    }

    #[test]
    fn two_days_independent() {
        let items = [(day(2), "coping"), (day(1), "irrelevant"), (day(1), "irrelevant")];
        let s = daily_shares(&items, Level::Task1).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.rows[0].date, day(1).unwrap());
        assert_eq!(s.shares("irrelevant").unwrap()[0].1, 100.0);
        assert_eq!(s.shares("coping").unwrap()[1].1, 100.0);
        assert!(s.to_csv().starts_with("date,total,suicidal_ideation_attempts,coping"));
    }

    #[test]
    fn missing_date_or_label() {
        assert!(daily_shares(&[(None, "coping")], Level::Task1).is_err());
        assert!(daily_shares(&[(day(1), "nope")], Level::Task1).is_err());
    }

    #[test]
    fn recall_examples() {
        let recalls: HashMap<String, f64> = [("a".to_string(), 0.5)].into();
        let est = recall_adjust(&[("a".into(), 10.0)], &recalls).unwrap();
        assert_eq!(est.categories[0].adjusted, 20.0);
        assert_eq!(est.residual, 80.0);

        let shares = [5.13, 1.26, 22.06, 15.51, 16.16];
        let raw: Vec<(String, f64)> = shares.iter().enumerate().map(|(i, s)| (format!("c{i}"), *s)).collect();
        let ones: HashMap<String, f64> = raw.iter().map(|(c, _)| (c.clone(), 1.0)).collect();
        let est = recall_adjust(&raw, &ones).unwrap();
        assert!((est.residual - 39.88).abs() < 0.01);
        assert!(!est.clamped);

        let zero: HashMap<String, f64> = [("a".to_string(), 0.0)].into();
        assert!(recall_adjust(&[("a".into(), 10.0)], &zero).is_err());
        let over = recall_adjust(&[("a".into(), 60.0)], &recalls).unwrap();
        assert!(over.clamped);
        assert_eq!(over.residual, 0.0);
    }

    #[test]
    fn peak_examples() {
        let s = series_of(&[1.0, 5.0, 1.0, 4.0, 1.0]);
        let p = detect_peaks(&s, "coping", 2, 1).unwrap();
        assert_eq!(p.iter().map(|p| p.date).collect::<Vec<_>>(), vec![day(2).unwrap(), day(4).unwrap()]);
        assert_eq!(p[1].rank, 2);

        let mono = series_of(&[1.0, 2.0, 3.0, 4.0]);
        let p = detect_peaks(&mono, "coping", 5, 1).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].date, day(4).unwrap());

        let flat = series_of(&[3.0, 3.0, 3.0]);
        assert!(detect_peaks(&flat, "coping", 1, 1).unwrap().is_empty());

        // 5 and 4 are two days apart; a week of separation keeps only the larger
        let p = detect_peaks(&s, "coping", 2, 7).unwrap();
        assert_eq!(p.len(), 1);
        assert!(detect_peaks(&s, "coping", 0, 7).is_err());
        assert!(peaks_to_csv(&p).contains("coping,2019-01-02,5.000000,1"));
    }

    #[test]
    fn frequency_examples() {
        let mut labels = vec!["suicidal_ideation_attempts"; 284];
        labels.extend(vec!["off_topic"; 812]);
        labels.extend(vec!["coping"; 3202 - 284 - 812]);
        let f = category_frequencies(&labels, Level::Fine).unwrap();
        let get = |c: &str| f.iter().find(|x| x.0 == c).unwrap().1;
        assert!((get("suicidal_ideation_attempts") - 8.87).abs() < 0.005);
        assert!((get("off_topic") - 25.36).abs() < 0.005);
        let uniform = ["about_suicide", "off_topic"];
        let f = category_frequencies(&uniform, Level::Task2).unwrap();
        assert_eq!(f[0].1, 50.0);
        assert!(category_frequencies::<&str>(&[], Level::Task1).is_err());
    }

    #[test]
    fn svg_has_one_line_per_category() {
        let s = series_of(&[1.0, 5.0, 1.0]);
        let peaks = detect_peaks(&s, "coping", 1, 1).unwrap();
        let svg = render_svg(&s, &s.categories, &peaks).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("<circle"));
    }

    fn fine_label() -> impl Strategy<Value = &'static str> {
        proptest::sample::select(crate::annotate::taxonomy::FineCategory::ALL.iter().map(|c| c.as_str()).collect::<Vec<_>>())
    }

    proptest! {
        #[test]
        fn daily_rows_sum_to_100(items in proptest::collection::vec((1u32..10, 0usize..6), 1..200)) {
            let classes = Level::Task1.classes();
            let items: Vec<_> = items.iter().map(|(d, c)| (day(*d), classes[*c])).collect();
            let s = daily_shares(&items, Level::Task1).unwrap();
            for r in &s.rows {
                prop_assert_eq!(r.counts.iter().sum::<u64>(), r.total);
                let sum: f64 = (0..s.categories.len()).map(|i| r.share(i)).sum();
                prop_assert!((sum - 100.0).abs() < 1e-9);
            }
        }

        #[test]
        fn frequencies_sum_to_100(labels in proptest::collection::vec(fine_label(), 1..300)) {
            for level in [Level::Fine, Level::Task1, Level::Task2] {
                let f = category_frequencies(&labels, level).unwrap();
                prop_assert!((f.iter().map(|x| x.1).sum::<f64>() - 100.0).abs() < 1e-9);
            }
        }

        #[test]
        fn unit_recall_is_identity(shares in proptest::collection::vec(0.0f64..20.0, 1..5)) {
            let raw: Vec<(String, f64)> = shares.iter().enumerate().map(|(i, s)| (format!("c{i}"), *s)).collect();
            let ones: HashMap<String, f64> = raw.iter().map(|(c, _)| (c.clone(), 1.0)).collect();
            let est = recall_adjust(&raw, &ones).unwrap();
            for (a, (_, r)) in est.categories.iter().zip(&raw) {
                prop_assert_eq!(a.adjusted, *r);
            }
            prop_assert!((est.residual - (100.0 - shares.iter().sum::<f64>())).abs() < 1e-9);
        }

        #[test]
        fn peaks_are_separated_local_maxima(values in proptest::collection::vec(0u32..100, 1..40), k in 1usize..6, sep in 1i64..5) {
            let s = series_of(&values.iter().map(|v| *v as f64 / 10.0).collect::<Vec<_>>());
            let peaks = detect_peaks(&s, "coping", k, sep).unwrap();
            prop_assert!(peaks.len() <= k);
            let shares = s.shares("coping").unwrap();
            for (i, p) in peaks.iter().enumerate() {
                if i > 0 { prop_assert!(peaks[i - 1].share >= p.share); }
                for q in &peaks[..i] { prop_assert!((q.date - p.date).num_days().abs() >= sep); }
                let j = shares.iter().position(|x| x.0 == p.date).unwrap();
                if j > 0 { prop_assert!(shares[j].1 > shares[j - 1].1); }
                if j + 1 < shares.len() { prop_assert!(shares[j].1 > shares[j + 1].1); }
            }
        }
    }
}
