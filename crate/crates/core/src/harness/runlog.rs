//! Append-only run log with a fixed CSV schema:
//! `env_step,kind,episode_return,critic_loss,actor_loss,alpha,q_mean,q_max,param_norm,grad_norm`
//! Non-applicable fields stay empty. Floats use shortest round-trip
//! formatting, so identical runs serialize to identical bytes.

use std::path::Path;

use crate::sac::UpdateDiagnostics;
use crate::stats::EvalSeries;
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "env_step,kind,episode_return,critic_loss,actor_loss,alpha,q_mean,q_max,param_norm,grad_norm";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Train,
    Eval,
    Reset,
    Diag,
}

impl RowKind {
    fn as_str(self) -> &'static str {
        match self {
            RowKind::Train => "train",
            RowKind::Eval => "eval",
            RowKind::Reset => "reset",
            RowKind::Diag => "diag",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(RowKind::Train),
            "eval" => Ok(RowKind::Eval),
            "reset" => Ok(RowKind::Reset),
            "diag" => Ok(RowKind::Diag),
            other => Err(Error::Format(format!("unknown log row kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub env_step: u64,
    pub kind: RowKind,
    pub episode_return: Option<f64>,
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    pub alpha: Option<f64>,
    pub q_mean: Option<f64>,
    pub q_max: Option<f64>,
    pub param_norm: Option<f64>,
    pub grad_norm: Option<f64>,
}

impl LogRow {
    fn empty(env_step: u64, kind: RowKind) -> Self {
        LogRow {
            env_step,
            kind,
            episode_return: None,
            critic_loss: None,
            actor_loss: None,
            alpha: None,
            q_mean: None,
            q_max: None,
            param_norm: None,
            grad_norm: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub rows: Vec<LogRow>,
    /// Set when training aborted on non-finite parameters.
    pub aborted: Option<String>,
    /// Env steps where a scheduled reset was suppressed by the
    /// unrecoverable-final rule (not part of the CSV schema).
    pub skipped_resets: Vec<u64>,
}

impl RunLog {
    pub fn new() -> Self {
        RunLog::default()
    }

    fn push(&mut self, row: LogRow) {
        debug_assert!(self
            .rows
            .last()
            .map_or(true, |last| last.env_step <= row.env_step));
        self.rows.push(row);
    }

    pub fn push_train(&mut self, env_step: u64, episode_return: f64) {
        let mut row = LogRow::empty(env_step, RowKind::Train);
        row.episode_return = Some(episode_return);
        self.push(row);
    }

    pub fn push_eval(&mut self, env_step: u64, mean_return: f64) {
        let mut row = LogRow::empty(env_step, RowKind::Eval);
        row.episode_return = Some(mean_return);
        self.push(row);
    }

    pub fn push_reset(&mut self, env_step: u64) {
        self.push(LogRow::empty(env_step, RowKind::Reset));
    }

    pub fn push_diag(&mut self, env_step: u64, d: &UpdateDiagnostics) {
        let mut row = LogRow::empty(env_step, RowKind::Diag);
        row.critic_loss = Some(d.critic_loss);
        row.actor_loss = Some(d.actor_loss);
        row.alpha = Some(d.alpha);
        row.q_mean = Some(d.q_mean);
        row.q_max = Some(d.q_max);
        row.param_norm = Some(d.param_norm);
        row.grad_norm = Some(d.grad_norm);
        self.push(row);
    }

    /// Diag row with empty numeric fields, marking a failed update.
    pub fn push_diag_failure(&mut self, env_step: u64) {
        self.push(LogRow::empty(env_step, RowKind::Diag));
    }

    pub fn eval_points(&self) -> Vec<(u64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.kind == RowKind::Eval)
            .filter_map(|r| r.episode_return.map(|v| (r.env_step, v)))
            .collect()
    }

    pub fn eval_series(&self, name: &str) -> EvalSeries {
        EvalSeries {
            name: name.to_string(),
            points: self.eval_points(),
        }
    }

    pub fn reset_steps(&self) -> Vec<u64> {
        self.rows
            .iter()
            .filter(|r| r.kind == RowKind::Reset)
            .map(|r| r.env_step)
            .collect()
    }

    /// Final score: mean of the last `window` eval returns.
    pub fn final_score(&self, window: usize) -> Option<f64> {
        let evals = self.eval_points();
        if evals.is_empty() || window == 0 {
            return None;
        }
        let tail = &evals[evals.len().saturating_sub(window)..];
        Some(tail.iter().map(|(_, v)| v).sum::<f64>() / tail.len() as f64)
    }

    /// Best (maximum) eval return and its step.
    pub fn best_eval(&self) -> Option<(u64, f64)> {
        self.eval_points()
            .into_iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite eval returns"))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 48 + 128);
        out.push_str(CSV_HEADER);
        out.push('\n');
        let field = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.env_step,
                r.kind.as_str(),
                field(r.episode_return),
                field(r.critic_loss),
                field(r.actor_loss),
                field(r.alpha),
                field(r.q_mean),
                field(r.q_max),
                field(r.param_norm),
                field(r.grad_norm),
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<RunLog> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == CSV_HEADER => {}
            other => {
                return Err(Error::Format(format!(
                    "bad run log header: {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut log = RunLog::new();
        let mut last_step = 0u64;
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 10 {
                return Err(Error::Format(format!("row {}: expected 10 fields", i + 2)));
            }
            let env_step: u64 = parts[0]
                .parse()
                .map_err(|_| Error::Format(format!("row {}: bad env_step", i + 2)))?;
            if env_step < last_step {
                return Err(Error::Format(format!("row {}: env_step not monotone", i + 2)));
            }
            last_step = env_step;
            let parse_opt = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse()
                        .map(Some)
                        .map_err(|_| Error::Format(format!("bad float '{s}'")))
                }
            };
            log.rows.push(LogRow {
                env_step,
                kind: RowKind::parse(parts[1])?,
                episode_return: parse_opt(parts[2])?,
                critic_loss: parse_opt(parts[3])?,
                actor_loss: parse_opt(parts[4])?,
                alpha: parse_opt(parts[5])?,
                q_mean: parse_opt(parts[6])?,
                q_max: parse_opt(parts[7])?,
                param_norm: parse_opt(parts[8])?,
                grad_norm: parse_opt(parts[9])?,
            });
        }
        Ok(log)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv_file(path: &Path) -> Result<RunLog> {
        let text = std::fs::read_to_string(path)?;
        RunLog::from_csv(&text)
    }
}
