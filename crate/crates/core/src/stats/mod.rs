//! Aggregate evaluation: IQM/median/mean across tasks with stratified
//! bootstrap confidence intervals, learning-curve aggregation, and SVG
//! plot emission.

mod bootstrap;
mod curves;
mod plot;

pub use bootstrap::{stratified_bootstrap_ci, AggregateResult, ScoreMatrix};
pub use curves::{aggregate_curves, CurveTable, EvalSeries};
pub use plot::{emit_curve_plot, emit_interval_plot, CurvePlotSeries};

use crate::{Error, Result};

/// Aggregate statistic over a flat score sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Iqm,
    Median,
    Mean,
}

impl std::fmt::Display for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Statistic::Iqm => write!(f, "iqm"),
            Statistic::Median => write!(f, "median"),
            Statistic::Mean => write!(f, "mean"),
        }
    }
}

impl std::str::FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iqm" => Ok(Statistic::Iqm),
            "median" => Ok(Statistic::Median),
            "mean" => Ok(Statistic::Mean),
            other => Err(Error::Config(format!("unknown statistic '{other}'"))),
        }
    }
}

/// Interquartile mean: sort, discard floor(N/4) from each side, average the
/// rest.
pub fn iqm(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Config("iqm of empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let drop = sorted.len() / 4;
    let kept = &sorted[drop..sorted.len() - drop];
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

pub fn median(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Config("median of empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

pub fn mean(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Config("mean of empty sample".into()));
    }
    // Sum in sorted order so the result is exactly permutation-invariant.
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    Ok(sorted.iter().sum::<f64>() / sorted.len() as f64)
}

pub fn evaluate(stat: Statistic, samples: &[f64]) -> Result<f64> {
    match stat {
        Statistic::Iqm => iqm(samples),
        Statistic::Median => median(samples),
        Statistic::Mean => mean(samples),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn iqm_drops_one_from_each_side_of_four() {
        assert_eq!(iqm(&[0.0, 10.0, 20.0, 100.0]).unwrap(), 15.0);
        // Order must not matter.
        assert_eq!(iqm(&[100.0, 0.0, 20.0, 10.0]).unwrap(), 15.0);
    }

    #[test]
    fn constant_samples_are_fixed_points() {
        for stat in [Statistic::Iqm, Statistic::Median, Statistic::Mean] {
            assert_eq!(evaluate(stat, &[3.25; 7]).unwrap(), 3.25);
        }
    }

    #[test]
    fn empty_input_is_config_error() {
        assert!(iqm(&[]).is_err());
        assert!(median(&[]).is_err());
        assert!(mean(&[]).is_err());
    }

    #[test]
    fn iqm_matches_brute_force_oracle_on_random_data() {
        let mut rng = rng_from_seed(0);
        for trial in 0..50 {
            let n = 1 + (trial * 37) % 1000;
            let data: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
            // Independent oracle: explicit sort-trim-mean.
            let mut sorted = data.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let k = n / 4;
            let slice = &sorted[k..n - k];
            let oracle = slice.iter().sum::<f64>() / slice.len() as f64;
            assert_eq!(iqm(&data).unwrap(), oracle);
        }
    }

    proptest! {
        #[test]
        fn stats_translation_equivariant_and_bounded(
            data in proptest::collection::vec(-1e3f64..1e3, 1..60),
            shift in -100.0f64..100.0,
        ) {
            for stat in [Statistic::Iqm, Statistic::Median, Statistic::Mean] {
                let base = evaluate(stat, &data).unwrap();
                let shifted: Vec<f64> = data.iter().map(|x| x + shift).collect();
                let moved = evaluate(stat, &shifted).unwrap();
                prop_assert!((moved - (base + shift)).abs() < 1e-9);
                let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(base >= lo - 1e-12 && base <= hi + 1e-12);
            }
        }

        #[test]
        fn stats_permutation_invariant(
            data in proptest::collection::vec(-1e3f64..1e3, 2..40),
        ) {
            let mut reversed = data.clone();
            reversed.reverse();
            for stat in [Statistic::Iqm, Statistic::Median, Statistic::Mean] {
                prop_assert_eq!(
                    evaluate(stat, &data).unwrap(),
                    evaluate(stat, &reversed).unwrap()
                );
            }
        }
    }
}
