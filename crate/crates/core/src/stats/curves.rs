use crate::{Error, Result};

/// One run's evaluation returns over training, named for error reporting.
#[derive(Debug, Clone)]
pub struct EvalSeries {
    pub name: String,
    pub points: Vec<(u64, f64)>,
}

/// Aligned learning curves: per eval step, mean and population std across
/// runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub steps: Vec<u64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn aggregate_curves(runs: &[EvalSeries]) -> Result<CurveTable> {
    if runs.is_empty() {
        return Err(Error::Config("no runs to aggregate".into()));
    }
    let steps: Vec<u64> = runs[0].points.iter().map(|(s, _)| *s).collect();
    for run in &runs[1..] {
        let other: Vec<u64> = run.points.iter().map(|(s, _)| *s).collect();
        if other != steps {
            return Err(Error::Alignment(format!(
                "run '{}' has a different eval cadence than '{}'",
                run.name, runs[0].name
            )));
        }
    }
    let n = runs.len() as f64;
    let mut mean = Vec::with_capacity(steps.len());
    let mut std = Vec::with_capacity(steps.len());
    for i in 0..steps.len() {
        let m = runs.iter().map(|r| r.points[i].1).sum::<f64>() / n;
        let var = runs
            .iter()
            .map(|r| {
                let d = r.points[i].1 - m;
                d * d
            })
            .sum::<f64>()
            / n;
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(CurveTable { steps, mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(name: &str, vals: &[f64]) -> EvalSeries {
        EvalSeries {
            name: name.into(),
            points: vals.iter().enumerate().map(|(i, v)| (1000 * (i as u64 + 1), *v)).collect(),
        }
    }

    #[test]
    fn single_run_has_zero_std() {
        let t = aggregate_curves(&[series("a", &[1.0, 2.0, 3.0])]).unwrap();
        assert_eq!(t.mean, vec![1.0, 2.0, 3.0]);
        assert!(t.std.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn symmetric_runs_average_to_zero() {
        let t = aggregate_curves(&[series("a", &[5.0, -2.0]), series("b", &[-5.0, 2.0])]).unwrap();
        assert_eq!(t.mean, vec![0.0, 0.0]);
        assert_eq!(t.std, vec![5.0, 2.0]);
    }

    #[test]
    fn matches_direct_recomputation() {
        let runs = [
            series("a", &[1.0, 4.0, 2.0]),
            series("b", &[3.0, 0.0, 2.0]),
            series("c", &[2.0, 2.0, 5.0]),
        ];
        let t = aggregate_curves(&runs).unwrap();
        for i in 0..3 {
            let vals: Vec<f64> = runs.iter().map(|r| r.points[i].1).collect();
            let m = vals.iter().sum::<f64>() / 3.0;
            let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 3.0;
            assert!((t.mean[i] - m).abs() < 1e-15);
            assert!((t.std[i] - v.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn cadence_mismatch_names_offender() {
        let a = series("good", &[1.0, 2.0]);
        let mut b = series("bad", &[1.0, 2.0]);
        b.points[1].0 += 1;
        match aggregate_curves(&[a, b]) {
            Err(Error::Alignment(msg)) => assert!(msg.contains("bad")),
            other => panic!("expected alignment error, got {other:?}"),
        }
    }
}
