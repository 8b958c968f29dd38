use super::artifacts::NetworkVariant;
use super::stages::Pipeline;
use crate::error::{Error, Result};
use crate::evaluator::{average_reward, best_response, ModelNodePrior};
use crate::policy_tree::PolicyTree;
use crate::rng::{derive_seed, from_seed};
use crate::selection::{icd, mdf, score, top_k, CandidateSet, MetricKind, Provenance};

pub const K_SWEEP_FILE: &str = "sweep_k.csv";
pub const METRIC_SWEEP_FILE: &str = "sweep_metric_reward.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// `(K, MDF, ICD)` of the top-K set for each selector.
    KRange,
    /// Normalized selector score against mean reward.
    MetricVsReward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KRow {
    pub k: usize,
    pub selector: MetricKind,
    pub mdf: f64,
    pub icd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardRow {
    pub selector: MetricKind,
    pub k: usize,
    pub metric: f64,
    /// Min-max normalized `metric` over this selector's rows.
    pub d_bar: f64,
    pub mean_reward: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepTable {
    K(Vec<KRow>),
    Reward(Vec<RewardRow>),
}

/// Min-max normalization into `[0, 1]`; a constant column maps to zeros.
pub fn min_max(xs: &[f64]) -> Vec<f64> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; xs.len()];
    }
    xs.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

const SELECTORS: [MetricKind; 2] = [MetricKind::Mdf, MetricKind::Icd];

fn chosen(pool: &CandidateSet, k: usize, metric: MetricKind, p: &Pipeline) -> Result<Vec<PolicyTree>> {
    Ok(top_k(pool, k, metric, p.config().selection)?
        .into_iter()
        .map(|i| pool.trees()[i].clone())
        .collect())
}

pub fn run_sweep(p: &mut Pipeline, kind: SweepKind, from: usize, to: usize) -> Result<SweepTable> {
    let seed = p.config().seed;
    let (trees, _) = p.candidates(NetworkVariant::TreeLoss)?;
    if from == 0 || from > to || to > trees.len() {
        return Err(Error::Config(format!(
            "K range {from}..={to} must satisfy 1 ≤ from ≤ to ≤ {}",
            trees.len()
        ))
        .in_stage("sweep", seed));
    }
    let pool = CandidateSet::new(
        trees,
        Provenance {
            seed,
            source_index: None,
        },
    )?;
    let table = match kind {
        SweepKind::KRange => {
            let mut rows = Vec::new();
            for selector in SELECTORS {
                for k in from..=to {
                    let set = chosen(&pool, k, selector, p)?;
                    let refs: Vec<&PolicyTree> = set.iter().collect();
                    rows.push(KRow {
                        k,
                        selector,
                        mdf: mdf(&refs)?,
                        icd: icd(&refs)?,
                    });
                }
            }
            let mut csv = p.header_for_sweep();
            csv.push_str("k,selector,mdf,icd\n");
            for r in &rows {
                csv.push_str(&format!("{},{},{},{}\n", r.k, r.selector, r.mdf, r.icd));
            }
            p.output().write(K_SWEEP_FILE, csv)?;
            SweepTable::K(rows)
        }
        SweepKind::MetricVsReward => {
            let truth = p.truth()?;
            let cfg = p.config().clone();
            let mut rows = Vec::new();
            for selector in SELECTORS {
                let mut block = Vec::new();
                for k in from..=to {
                    let set = chosen(&pool, k, selector, p)?;
                    let refs: Vec<&PolicyTree> = set.iter().collect();
                    let metric = score(&refs, selector)?;
                    let policy = best_response(p.spec(), &ModelNodePrior::uniform(set)?, cfg.horizon)?;
                    let mut rng = from_seed(derive_seed(seed, "episodes"));
                    let (mean_reward, stderr) = average_reward(p.spec(), &policy, &truth, cfg.runs, cfg.horizon, &mut rng)?;
                    block.push(RewardRow {
                        selector,
                        k,
                        metric,
                        d_bar: 0.0,
                        mean_reward,
                        stderr,
                    });
                }
                let norm = min_max(&block.iter().map(|r| r.metric).collect::<Vec<_>>());
                for (r, d) in block.iter_mut().zip(norm) {
                    r.d_bar = d;
                }
                rows.extend(block);
            }
            let mut csv = p.header_for_sweep();
            csv.push_str("selector,k,metric,d_bar,mean_reward,stderr\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.selector, r.k, r.metric, r.d_bar, r.mean_reward, r.stderr
                ));
            }
            p.output().write(METRIC_SWEEP_FILE, csv)?;
            SweepTable::Reward(rows)
        }
    };
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_max_edges() {
        assert_eq!(min_max(&[3.0, 3.0]), vec![0.0, 0.0]);
        assert_eq!(min_max(&[1.0, 3.0, 2.0]), vec![0.0, 1.0, 0.5]);
        assert!(min_max(&[]).is_empty());
    }
}
