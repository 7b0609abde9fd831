//! Paired comparisons: t-test, Wilcoxon signed-rank and Cohen's d_z.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::Result;

/// Largest nonzero-difference count handled by exact enumeration.
pub const WILCOXON_EXACT_MAX: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedStats {
    pub n: usize,
    pub mean_diff: f64,
    pub t_statistic: Option<f64>,
    /// Two-sided p-values.
    pub t_p: f64,
    pub wilcoxon_p: f64,
    pub wilcoxon_exact: bool,
    /// `None` when every difference is the same nonzero value.
    pub cohens_dz: Option<f64>,
    /// Counts of `a > b`, `a < b` and ties.
    pub wins: (usize, usize, usize),
    /// Every difference is zero; p-values are set to 1 and d_z to 0.
    pub degenerate: bool,
}

/// Compares paired samples through `d = a - b`.
pub fn paired_stats(a: &[f64], b: &[f64]) -> Result<PairedStats> {
    if a.len() != b.len() {
        return Err(bpinn_core::Error::InvalidArgument("paired samples differ in length".into()).into());
    }
    if a.len() < 3 {
        return Err(bpinn_core::Error::InvalidArgument("paired tests need at least 3 pairs".into()).into());
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let wins = (
        d.iter().filter(|x| **x > 0.0).count(),
        d.iter().filter(|x| **x < 0.0).count(),
        d.iter().filter(|x| **x == 0.0).count(),
    );
    let mean = d.iter().sum::<f64>() / n as f64;
    if wins.2 == n {
        return Ok(PairedStats {
            n,
            mean_diff: 0.0,
            t_statistic: None,
            t_p: 1.0,
            wilcoxon_p: 1.0,
            wilcoxon_exact: true,
            cohens_dz: Some(0.0),
            wins,
            degenerate: true,
        });
    }
    let sd = (d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    let (t_statistic, t_p, cohens_dz) = if sd > 0.0 {
        let t = mean / (sd / (n as f64).sqrt());
        let dist = StudentsT::new(0.0, 1.0, n as f64 - 1.0).expect("valid degrees of freedom");
        (Some(t), (2.0 * dist.cdf(-t.abs())).min(1.0), Some(mean / sd))
    } else {
        (None, 0.0, None)
    };
    let (wilcoxon_p, wilcoxon_exact) = wilcoxon(&d);
    Ok(PairedStats {
        n,
        mean_diff: mean,
        t_statistic,
        t_p,
        wilcoxon_p,
        wilcoxon_exact,
        cohens_dz,
        wins,
        degenerate: false,
    })
}

/// Average ranks of `|d|` over the nonzero differences.
fn signed_ranks(d: &[f64]) -> Vec<(f64, bool)> {
    let mut nz: Vec<f64> = d.iter().copied().filter(|x| *x != 0.0).collect();
    nz.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let mut out = Vec::with_capacity(nz.len());
    let mut i = 0;
    while i < nz.len() {
        let mut j = i;
        while j + 1 < nz.len() && nz[j + 1].abs() == nz[i].abs() {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for x in &nz[i..=j] {
            out.push((rank, *x > 0.0));
        }
        i = j + 1;
    }
    out
}

/// Two-sided signed-rank p-value: zero differences dropped, ties get average
/// ranks. Exact enumeration up to [`WILCOXON_EXACT_MAX`] nonzero differences,
/// otherwise the tie-corrected normal approximation without continuity
/// correction.
fn wilcoxon(d: &[f64]) -> (f64, bool) {
    let ranks = signed_ranks(d);
    let m = ranks.len();
    let w: f64 = ranks.iter().filter(|r| r.1).map(|r| r.0).sum();
    if m <= WILCOXON_EXACT_MAX {
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0u32..(1 << m) {
            let s: f64 = (0..m).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k].0).sum();
            if s <= w + 1e-9 {
                le += 1;
            }
            if s >= w - 1e-9 {
                ge += 1;
            }
        }
        let total = (1u64 << m) as f64;
        return ((2.0 * le.min(ge) as f64 / total).min(1.0), true);
    }
    let mf = m as f64;
    let mean = mf * (mf + 1.0) / 4.0;
    let mut ties = 0.0;
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j + 1 < m && ranks[j + 1].0 == ranks[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - ties / 48.0;
    let z = (w - mean) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    ((2.0 * normal.cdf(-z.abs())).min(1.0), false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diffs(d: &[f64]) -> PairedStats {
        paired_stats(d, &vec![0.0; d.len()]).unwrap()
    }

    #[test]
    fn effect_size() {
        assert!((diffs(&[0.0, 2.0, 4.0]).cohens_dz.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_wilcoxon_enumeration() {
        let s = diffs(&[1.0, 2.0, 3.0]);
        assert!(s.wilcoxon_exact);
        assert!((s.wilcoxon_p - 0.25).abs() < 1e-12);
        // 4 differences all positive: one assignment of 16 per tail.
        assert!((diffs(&[1.0, 2.0, 3.0, 4.0]).wilcoxon_p - 0.125).abs() < 1e-12);
    }

    #[test]
    fn symmetric_differences() {
        let s = diffs(&[-1.0, 1.0, -2.0, 2.0]);
        assert_eq!(s.t_statistic, Some(0.0));
        assert!((s.t_p - 1.0).abs() < 1e-9);
        assert!((s.wilcoxon_p - 1.0).abs() < 1e-12);
        assert_eq!(s.wins, (2, 2, 0));
    }

    #[test]
    fn t_test_matches_reference() {
        // Reference p from scipy.stats.ttest_1samp.
        let s = diffs(&[1.0, 2.0, 3.0, 4.0, 6.0]);
        let t = 3.2 / ((14.8f64 / 4.0).sqrt() / 5f64.sqrt());
        assert!((s.t_statistic.unwrap() - t).abs() < 1e-12);
        assert!((s.t_p - 0.020_475_874_420_910_676).abs() < 1e-9, "{}", s.t_p);
    }

    #[test]
    fn normal_approximation_for_larger_samples() {
        let d: Vec<f64> = (1..=20).map(|i| if i % 4 == 0 { -(i as f64) } else { i as f64 }).collect();
        let s = diffs(&d);
        assert!(!s.wilcoxon_exact);
        // W+ = 210 - (4 + 8 + 12 + 16 + 20) = 150, mean 105, var 717.5.
        let z: f64 = (150.0 - 105.0) / 717.5f64.sqrt();
        let p = 2.0 * Normal::new(0.0, 1.0).unwrap().cdf(-z);
        assert!((s.wilcoxon_p - p).abs() < 1e-12);
        // scipy.stats.wilcoxon(d, correction=False, method="approx")
        assert!((s.wilcoxon_p - 0.092_963_126_712_486_24).abs() < 1e-9);
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let s = diffs(&[0.0, 0.0, 0.0]);
        assert!(s.degenerate);
        assert_eq!((s.t_p, s.wilcoxon_p, s.cohens_dz), (1.0, 1.0, Some(0.0)));
        assert!(paired_stats(&[1.0, 2.0], &[0.0, 0.0]).is_err());
        assert!(paired_stats(&[1.0, 2.0, 3.0], &[0.0, 0.0]).is_err());
        let ties = diffs(&[0.0, 1.0, -1.0, 2.0]);
        assert_eq!(ties.wins, (2, 1, 1));
        assert_eq!(ties.wins.0 + ties.wins.1, ties.n - ties.wins.2);
    }
}
