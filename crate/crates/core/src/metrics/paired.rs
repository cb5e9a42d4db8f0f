use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    LowerIsBetter,
    HigherIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedResult {
    pub n: usize,
    /// Pairs where `a` is better than `b`.
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    pub mean_diff: f64,
    pub t: f64,
    pub p: f64,
    /// The differences have zero variance.
    pub degenerate_variance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PairedError {
    #[error("paired series differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("paired comparison needs at least two pairs, got {0}")]
    TooFew(usize),
}

/// Win/tie/loss counts and a two-sided paired t-test on `a - b`.
///
/// With zero-variance differences: all-zero differences give `t = 0`,
/// `p = 1`; a constant non-zero difference gives an infinite `t` and
/// `p = 0`.
pub fn paired_compare(a: &[f64], b: &[f64], direction: Direction) -> Result<PairedResult, PairedError> {
    if a.len() != b.len() {
        return Err(PairedError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(PairedError::TooFew(n));
    }
    let (mut wins, mut ties, mut losses) = (0, 0, 0);
    for (x, y) in a.iter().zip(b) {
        let better = match direction {
            Direction::LowerIsBetter => x < y,
            Direction::HigherIsBetter => x > y,
        };
        if x == y {
            ties += 1;
        } else if better {
            wins += 1;
        } else {
            losses += 1;
        }
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let (t, p, degenerate) = if var <= f64::EPSILON * mean.abs().max(1.0) {
        if mean == 0.0 {
            (0.0, 1.0, true)
        } else {
            (mean.signum() * f64::INFINITY, 0.0, true)
        }
    } else {
        let t = mean / (var / n as f64).sqrt();
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid degrees of freedom");
        let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
        (t, p, false)
    };
    Ok(PairedResult { n, wins, ties, losses, mean_diff: mean, t, p, degenerate_variance: degenerate })
}
