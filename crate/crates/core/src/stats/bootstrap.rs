use rand::Rng;

use super::{evaluate, Statistic};
use crate::{Error, Result};

/// Final scores on a task-by-seed grid, optionally normalized by the task's
/// return cap before insertion.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    tasks: Vec<String>,
    /// scores[t][s] = final score of seed s on task t.
    scores: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(tasks: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if tasks.len() != scores.len() || tasks.is_empty() {
            return Err(Error::Config("score matrix needs one row per task".into()));
        }
        for (t, row) in scores.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::Config(format!("task '{}' has no seeds", tasks[t])));
            }
            if row.iter().any(|s| !s.is_finite()) {
                return Err(Error::Config(format!("task '{}' has non-finite scores", tasks[t])));
            }
        }
        Ok(ScoreMatrix { tasks, scores })
    }

    pub fn single_task(task: &str, scores: Vec<f64>) -> Result<Self> {
        ScoreMatrix::new(vec![task.to_string()], vec![scores])
    }

    pub fn tasks(&self) -> &[String] {
        &self.tasks
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.scores
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.scores.iter().flatten().copied().collect()
    }

    pub fn total_scores(&self) -> usize {
        self.scores.iter().map(Vec::len).sum()
    }

    /// One task with one seed: the bootstrap distribution collapses.
    pub fn is_degenerate(&self) -> bool {
        self.scores.iter().all(|row| row.len() == 1)
    }
}

/// Point estimate with a percentile-bootstrap confidence interval.
#[derive(Debug, Clone, Copy)]
pub struct AggregateResult {
    pub statistic: Statistic,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub resamples: u32,
    /// True when the grid admits no resampling variation (single task,
    /// single seed); the interval then collapses to the point.
    pub degenerate: bool,
}

/// Percentile (type-7 linear interpolation) of pre-sorted data.
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Stratified bootstrap: every resample redraws seeds with replacement
/// independently within each task, recomputes the statistic over the
/// flattened redraw, and the interval is the percentile range of the
/// resample distribution. The point estimate uses the original matrix.
pub fn stratified_bootstrap_ci<R: Rng>(
    matrix: &ScoreMatrix,
    statistic: Statistic,
    confidence: f64,
    resamples: u32,
    rng: &mut R,
) -> Result<AggregateResult> {
    if resamples < 100 {
        return Err(Error::Config(format!("need >= 100 resamples, got {resamples}")));
    }
    if !(0.0..1.0).contains(&confidence) || confidence <= 0.0 {
        return Err(Error::Config(format!("confidence {confidence} outside (0,1)")));
    }
    let point = evaluate(statistic, &matrix.flatten())?;
    if matrix.is_degenerate() {
        return Ok(AggregateResult {
            statistic,
            point,
            ci_low: point,
            ci_high: point,
            confidence,
            resamples,
            degenerate: true,
        });
    }

    let mut stats = Vec::with_capacity(resamples as usize);
    let mut redraw = Vec::with_capacity(matrix.total_scores());
    for _ in 0..resamples {
        redraw.clear();
        for row in matrix.rows() {
            for _ in 0..row.len() {
                redraw.push(row[rng.random_range(0..row.len())]);
            }
        }
        stats.push(evaluate(statistic, &redraw)?);
    }
    stats.sort_by(|a, b| a.partial_cmp(b).expect("finite stats"));
    let tail = (1.0 - confidence) / 2.0;
    Ok(AggregateResult {
        statistic,
        point,
        ci_low: percentile_sorted(&stats, tail),
        ci_high: percentile_sorted(&stats, 1.0 - tail),
        confidence,
        resamples,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::StandardNormal;

    fn normal_matrix(tasks: usize, seeds: usize, mu: f64, seed: u64) -> ScoreMatrix {
        let mut rng = rng_from_seed(seed);
        let rows: Vec<Vec<f64>> = (0..tasks)
            .map(|_| {
                (0..seeds)
                    .map(|_| mu + rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let names = (0..tasks).map(|t| format!("task{t}")).collect();
        ScoreMatrix::new(names, rows).unwrap()
    }

    #[test]
    fn constant_scores_collapse_interval() {
        let m = ScoreMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![5.0; 4], vec![5.0; 4]],
        )
        .unwrap();
        let mut rng = rng_from_seed(1);
        let r = stratified_bootstrap_ci(&m, Statistic::Mean, 0.95, 500, &mut rng).unwrap();
        assert_eq!(r.point, 5.0);
        assert_eq!((r.ci_low, r.ci_high), (5.0, 5.0));
        assert!(!r.degenerate);
    }

    #[test]
    fn degenerate_grid_collapses_with_flag() {
        let m = ScoreMatrix::single_task("solo", vec![3.0]).unwrap();
        let mut rng = rng_from_seed(2);
        let r = stratified_bootstrap_ci(&m, Statistic::Iqm, 0.95, 500, &mut rng).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.ci_low, r.point, r.ci_high), (3.0, 3.0, 3.0));
    }

    #[test]
    fn ci_width_matches_normal_theory_for_mean() {
        // 10 tasks x 10 seeds of N(0,1): se of the grand mean is 1/10, and a
        // 95% normal interval has width 2 * 1.96 / 10.
        let m = normal_matrix(10, 10, 0.0, 3);
        let mut rng = rng_from_seed(4);
        let r = stratified_bootstrap_ci(&m, Statistic::Mean, 0.95, 2000, &mut rng).unwrap();
        let width = r.ci_high - r.ci_low;
        let analytic = 2.0 * 1.96 / 10.0;
        assert!(
            (width - analytic).abs() / analytic < 0.2,
            "width {width} vs analytic {analytic}"
        );
        assert!(r.ci_low <= r.point && r.point <= r.ci_high);
    }

    #[test]
    fn deterministic_for_fixed_rng() {
        let m = normal_matrix(4, 6, 1.0, 5);
        let a = stratified_bootstrap_ci(&m, Statistic::Iqm, 0.95, 300, &mut rng_from_seed(6)).unwrap();
        let b = stratified_bootstrap_ci(&m, Statistic::Iqm, 0.95, 300, &mut rng_from_seed(6)).unwrap();
        assert_eq!((a.ci_low, a.ci_high), (b.ci_low, b.ci_high));
    }

    #[test]
    fn seed_permutation_keeps_point_estimate() {
        let m = normal_matrix(3, 5, 2.0, 7);
        let mut permuted_rows = m.rows().to_vec();
        for row in &mut permuted_rows {
            row.reverse();
        }
        let m2 = ScoreMatrix::new(m.tasks().to_vec(), permuted_rows).unwrap();
        let mut rng = rng_from_seed(8);
        let a = stratified_bootstrap_ci(&m, Statistic::Median, 0.95, 200, &mut rng).unwrap();
        let mut rng = rng_from_seed(8);
        let b = stratified_bootstrap_ci(&m2, Statistic::Median, 0.95, 200, &mut rng).unwrap();
        assert_eq!(a.point, b.point);
    }

    #[test]
    fn coverage_of_mean_ci_is_near_nominal() {
        // 200 synthetic grids from a known distribution; the 95% CI for the
        // mean should contain the true mean in 95% +/- 5% of trials.
        let true_mu = 1.5;
        let mut hits = 0;
        let trials = 200;
        for trial in 0..trials {
            let m = normal_matrix(10, 10, true_mu, 100 + trial);
            let mut rng = rng_from_seed(10_000 + trial);
            let r = stratified_bootstrap_ci(&m, Statistic::Mean, 0.95, 500, &mut rng).unwrap();
            if r.ci_low <= true_mu && true_mu <= r.ci_high {
                hits += 1;
            }
        }
        let coverage = hits as f64 / trials as f64;
        assert!(
            (0.90..=1.0).contains(&coverage),
            "coverage {coverage} outside [0.90, 1.00]"
        );
    }

    #[test]
    fn too_few_resamples_rejected() {
        let m = normal_matrix(2, 3, 0.0, 9);
        let mut rng = rng_from_seed(10);
        assert!(stratified_bootstrap_ci(&m, Statistic::Mean, 0.95, 99, &mut rng).is_err());
    }
}
