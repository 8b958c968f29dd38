use serde::Serialize;

use super::artifacts::comment_block;
use super::config::ExperimentConfig;

/// One evaluated method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub method: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub metric: String,
    pub mean_reward: f64,
    pub stderr: f64,
    pub solve_seconds: f64,
    pub eval_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    method: &'a str,
    #[serde(rename = "K")]
    k: usize,
    metric: &'a str,
    mean_reward: f64,
    stderr: f64,
    solve_seconds: Option<f64>,
    eval_seconds: Option<f64>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    seed: u64,
    config: serde_json::Value,
    rows: Vec<JsonRow<'a>>,
}

impl Report {
    fn timing(&self, secs: f64) -> Option<f64> {
        self.config.report.wall_times.then_some(secs)
    }

    /// Timing cells are left empty unless wall times are enabled.
    pub fn to_csv(&self) -> String {
        let mut out = comment_block(&self.config, &[]);
        out.push_str("method,K,metric,mean_reward,stderr,solve_seconds,eval_seconds\n");
        let cell = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.method,
                r.k,
                r.metric,
                r.mean_reward,
                r.stderr,
                cell(self.timing(r.solve_seconds)),
                cell(self.timing(r.eval_seconds)),
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = JsonReport {
            seed: self.seed,
            config: self.config.stamp_value(),
            rows: self
                .rows
                .iter()
                .map(|r| JsonRow {
                    method: &r.method,
                    k: r.k,
                    metric: &r.metric,
                    mean_reward: r.mean_reward,
                    stderr: r.stderr,
                    solve_seconds: self.timing(r.solve_seconds),
                    eval_seconds: self.timing(r.eval_seconds),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }
}
