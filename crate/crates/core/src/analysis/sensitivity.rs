use std::fmt;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cell::{run_cycle_scaled, CellConfig, WritePattern};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// How write-amplitude perturbations are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Every `1 ± delta` sign combination over the nonzero digits.
    Corners,
    /// `count` draws per pattern, each factor uniform in `[1 − delta, 1 + delta]`.
    MonteCarlo { count: usize, seed: u64 },
}

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sampling::Corners => f.write_str("corners"),
            Sampling::MonteCarlo { count, seed } => {
                write!(f, "monte-carlo(count={count},seed={seed})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub pattern: WritePattern,
    /// Mean relative error in percent.
    pub mean: f64,
    /// Population standard deviation of the relative error, in percent.
    pub std: f64,
    pub samples: usize,
    /// Set when the nominal output of a nonzero pattern is 0, which leaves
    /// the relative error undefined; such rows are excluded from the average.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub delta: f64,
    pub sampling: Sampling,
    pub rows: Vec<SensitivityRow>,
    /// Unweighted means of the per-pattern means and deviations.
    pub average_mean: f64,
    pub average_std: f64,
    pub average_samples: usize,
}

impl SensitivityReport {
    pub fn row(&self, pattern: &str) -> Option<&SensitivityRow> {
        self.rows.iter().find(|r| r.pattern.to_string() == pattern)
    }
}

fn corner_factors(pattern: &WritePattern, delta: f64) -> Vec<Vec<f64>> {
    let active: Vec<usize> = (0..pattern.len())
        .filter(|&i| pattern.digits[i] != 0)
        .collect();
    (0..1usize << active.len())
        .map(|mask| {
            let mut f = vec![1.0; pattern.len()];
            for (bit, &i) in active.iter().enumerate() {
                f[i] = if mask >> bit & 1 == 1 {
                    1.0 + delta
                } else {
                    1.0 - delta
                };
            }
            f
        })
        .collect()
}

/// Relative output error under perturbed write amplitudes, per pattern.
///
/// Every perturbed cycle is simulated end to end with the reset pulse left
/// nominal. Monte-Carlo factors are drawn from one ChaCha8 stream in
/// (pattern, sample, sub-cell) order, so results do not depend on `exec`.
pub fn sensitivity(
    config: &CellConfig,
    delta: f64,
    sampling: Sampling,
    exec: Exec,
) -> Result<SensitivityReport> {
    config.validate()?;
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Config(format!(
            "delta must lie in [0, 1), got {delta}"
        )));
    }
    let patterns = WritePattern::all(config.n, config.m);
    let per_pattern: Vec<Vec<Vec<f64>>> = match sampling {
        Sampling::Corners => patterns.iter().map(|p| corner_factors(p, delta)).collect(),
        Sampling::MonteCarlo { count, seed } => {
            if count == 0 {
                return Err(Error::Config(
                    "monte-carlo sample count must be positive".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dist = Uniform::new_inclusive(1.0 - delta, 1.0 + delta);
            patterns
                .iter()
                .map(|p| {
                    (0..count)
                        .map(|_| (0..p.len()).map(|_| dist.sample(&mut rng)).collect())
                        .collect()
                })
                .collect()
        }
    };

    let nominal = exec.try_map(&patterns, |p| {
        Ok::<_, Error>(run_cycle_scaled(config, p, &vec![1.0; p.len()])?.v_out)
    })?;
    let jobs: Vec<(usize, &[f64])> = per_pattern
        .iter()
        .enumerate()
        .flat_map(|(i, fs)| fs.iter().map(move |f| (i, f.as_slice())))
        .collect();
    let perturbed = exec.try_map(&jobs, |&(i, f)| {
        Ok::<_, Error>(run_cycle_scaled(config, &patterns[i], f)?.v_out)
    })?;

    let mut rows = Vec::with_capacity(patterns.len());
    let mut cursor = 0;
    for (i, pattern) in patterns.into_iter().enumerate() {
        let k = per_pattern[i].len();
        let outs = &perturbed[cursor..cursor + k];
        cursor += k;
        let all_zero = pattern.digits.iter().all(|&d| d == 0);
        let flagged = !all_zero && nominal[i] == 0.0;
        let errs: Vec<f64> = if all_zero || flagged {
            vec![0.0; k]
        } else {
            outs.iter()
                .map(|v| 100.0 * (v - nominal[i]).abs() / nominal[i])
                .collect()
        };
        let mean = errs.iter().sum::<f64>() / k as f64;
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / k as f64;
        rows.push(SensitivityRow {
            pattern,
            mean: if flagged { f64::NAN } else { mean },
            std: if flagged { f64::NAN } else { var.sqrt() },
            samples: k,
            flagged,
        });
    }
    let kept: Vec<&SensitivityRow> = rows.iter().filter(|r| !r.flagged).collect();
    let denom = kept.len().max(1) as f64;
    Ok(SensitivityReport {
        delta,
        sampling,
        average_mean: kept.iter().map(|r| r.mean).sum::<f64>() / denom,
        average_std: kept.iter().map(|r| r.std).sum::<f64>() / denom,
        average_samples: kept.iter().map(|r| r.samples).sum(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_enumeration() {
        let p: WritePattern = "021".parse().unwrap();
        let c = corner_factors(&p, 0.05);
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|f| f[0] == 1.0));
        assert!(c.contains(&vec![1.0, 0.95, 1.05]));
        assert_eq!(
            corner_factors(&"000".parse().unwrap(), 0.05),
            vec![vec![1.0; 3]]
        );
    }

    #[test]
    fn rejects_bad_delta() {
        let c = CellConfig::default();
        assert!(sensitivity(&c, 1.0, Sampling::Corners, Exec::Sequential).is_err());
        assert!(sensitivity(&c, -0.1, Sampling::Corners, Exec::Sequential).is_err());
    }
}
