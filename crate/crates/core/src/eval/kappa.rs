use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    /// Observed agreement.
    pub po: f64,
    /// Chance agreement from the two raters' marginals.
    pub pe: f64,
    pub n: usize,
    pub se: f64,
    pub ci: (f64, f64),
}

/// Cohen's kappa with an asymptotic 95% interval, `κ ± z·sqrt(po(1−po) / (n(1−pe)²))`.
pub fn cohens_kappa<S: AsRef<str>, T: AsRef<str>>(a: &[S], b: &[T]) -> Result<KappaResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("rater sequences differ in length: {} vs {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("kappa needs at least 2 jointly rated items, got {n}")));
    }
    let mut count_a: HashMap<&str, usize> = HashMap::new();
    let mut count_b: HashMap<&str, usize> = HashMap::new();
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.as_ref(), y.as_ref());
        *count_a.entry(x).or_insert(0) += 1;
        *count_b.entry(y).or_insert(0) += 1;
        agree += usize::from(x == y);
    }
    let nf = n as f64;
    let po = agree as f64 / nf;
    let classes: BTreeSet<&str> = count_a.keys().chain(count_b.keys()).copied().collect();
    let pe: f64 = classes
        .iter()
        .map(|c| {
            let pa = *count_a.get(c).unwrap_or(&0) as f64 / nf;
            let pb = *count_b.get(c).unwrap_or(&0) as f64 / nf;
            pa * pb
        })
        .sum();
    if (1.0 - pe).abs() < 1e-15 {
        if agree == n {
            return Ok(KappaResult { kappa: 1.0, po, pe, n, se: 0.0, ci: (1.0, 1.0) });
        }
        return Err(Error::Degenerate("chance agreement is 1 but raters disagree".into()));
    }
    let kappa = (po - pe) / (1.0 - pe);
    let se = (po * (1.0 - po) / (nf * (1.0 - pe).powi(2))).sqrt();
    let ci = ((kappa - Z_95 * se).max(-1.0), (kappa + Z_95 * se).min(1.0));
    Ok(KappaResult { kappa, po, pe, n, se, ci })
}

/// Percentile bootstrap interval for kappa, resampling item pairs.
pub fn kappa_bootstrap_ci<S: AsRef<str>, T: AsRef<str>>(
    a: &[S],
    b: &[T],
    replicates: usize,
    confidence: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    cohens_kappa(a, b)?;
    if replicates == 0 || !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidInput("bootstrap needs replicates > 0 and confidence in (0, 1)".into()));
    }
    let n = a.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = Vec::with_capacity(replicates);
    let mut ra = Vec::with_capacity(n);
    let mut rb = Vec::with_capacity(n);
    for _ in 0..replicates {
        ra.clear();
        rb.clear();
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            ra.push(a[i].as_ref());
            rb.push(b[i].as_ref());
        }
        if let Ok(k) = cohens_kappa(&ra, &rb) {
            stats.push(k.kappa);
        }
    }
    if stats.is_empty() {
        return Err(Error::Degenerate("every bootstrap replicate was degenerate".into()));
    }
    stats.sort_by(f64::total_cmp);
    let alpha = 1.0 - confidence;
    let pick = |q: f64| stats[((q * (stats.len() - 1) as f64).round() as usize).min(stats.len() - 1)];
    Ok((pick(alpha / 2.0), pick(1.0 - alpha / 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::{prop_assert, proptest};

    /// Expands a 2×2 cross-tab into paired label sequences.
    fn from_crosstab(t: [[usize; 2]; 2]) -> (Vec<&'static str>, Vec<&'static str>) {
        let names = ["x", "y"];
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..2 {
            for j in 0..2 {
                for _ in 0..t[i][j] {
                    a.push(names[i]);
                    b.push(names[j]);
                }
            }
        }
        (a, b)
    }

    #[test]
    fn hand_computed_crosstab() {
        // po = 35/50 = 0.7; marginals a: 25/25, b: 30/20 → pe = 0.5·0.6 + 0.5·0.4 = 0.5
        let (a, b) = from_crosstab([[20, 5], [10, 15]]);
        let k = cohens_kappa(&a, &b).unwrap();
        assert_abs_diff_eq!(k.po, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(k.pe, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(k.kappa, 0.4, epsilon = 1e-9);
        let se = (0.7f64 * 0.3 / (50.0 * 0.25)).sqrt();
        assert_abs_diff_eq!(k.se, se, epsilon = 1e-12);
        assert!(k.ci.0 < 0.4 && 0.4 < k.ci.1);
    }

    #[test]
    fn perfect_agreement() {
        let a = ["p", "q", "p", "r"];
        assert_eq!(cohens_kappa(&a, &a).unwrap().kappa, 1.0);
        let same = ["p", "p", "p"];
        assert_eq!(cohens_kappa(&same, &same).unwrap().kappa, 1.0);
    }

    #[test]
    fn errors() {
        assert!(cohens_kappa(&["a", "b"], &["a"]).is_err());
        assert!(cohens_kappa(&["a"], &["a"]).is_err());
    }

    #[test]
    fn independent_raters_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let classes = ["a", "b", "c", "d"];
        let a: Vec<&str> = (0..10_000).map(|_| classes[rng.gen_range(0..4)]).collect();
        let b: Vec<&str> = (0..10_000).map(|_| classes[rng.gen_range(0..4)]).collect();
        let k = cohens_kappa(&a, &b).unwrap();
        assert!(k.kappa.abs() < 0.03);
        assert!(k.ci.0 <= 0.0 && 0.0 <= k.ci.1, "{:?}", k);
    }

    #[test]
    fn bootstrap_brackets_estimate() {
        let (a, b) = from_crosstab([[20, 5], [10, 15]]);
        let (lo, hi) = kappa_bootstrap_ci(&a, &b, 500, 0.95, 1).unwrap();
        assert!(lo < 0.4 && 0.4 < hi);
    }

    proptest! {
        #[test]
        fn relabeling_invariance(pairs in proptest::collection::vec((0usize..3, 0usize..3), 2..60)) {
            let names = ["a", "b", "c"];
            let renamed = ["z", "x", "y"];
            let a: Vec<&str> = pairs.iter().map(|p| names[p.0]).collect();
            let b: Vec<&str> = pairs.iter().map(|p| names[p.1]).collect();
            let a2: Vec<&str> = pairs.iter().map(|p| renamed[p.0]).collect();
            let b2: Vec<&str> = pairs.iter().map(|p| renamed[p.1]).collect();
            match (cohens_kappa(&a, &b), cohens_kappa(&a2, &b2)) {
                (Ok(k1), Ok(k2)) => {
                    prop_assert!((k1.kappa - k2.kappa).abs() < 1e-12);
                    prop_assert!((-1.0..=1.0).contains(&k1.kappa));
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "relabeling changed definedness"),
            }
        }
    }
}
