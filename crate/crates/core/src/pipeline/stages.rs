use std::collections::HashMap;
use std::time::Instant;

use rand::seq::index;

use super::artifacts::{self, comment_block, selected_file, NetworkVariant, OutputDir};
use super::config::{ExperimentConfig, IncompletePolicy, Method, TruthMode};
use super::report::{Report, ReportRow};
use crate::codec::{read_matrix, write_matrix, zzoh_encode, EncodedTree};
use crate::domain::{simulate_history, DomainSpec, GroundTruthPolicy, InteractionHistory};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate_pipeline, ModelNodePrior};
use crate::policy_tree::{read_trees, reconstruct_trees, write_trees, PolicyTree};
use crate::rng::{derive_seed, from_seed};
use crate::selection::{top_k, CandidateSet, MetricKind, Provenance};
use crate::vae::{generate, read_params, train, write_params, write_training_log, LossWeighting, TrainedVae, TreeShape, VaeNetwork};

/// The trees a method hands to the evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub method: Method,
    pub trees: Vec<PolicyTree>,
    /// EMPTY nodes replaced by the fallback action.
    pub filled_nodes: usize,
}

impl Selection {
    pub fn metric_label(&self, cfg: &ExperimentConfig) -> String {
        match self.method {
            Method::VaeMdf => MetricKind::Mdf.to_string(),
            Method::VaeIcd => MetricKind::Icd.to_string(),
            Method::VaeBceloss => cfg.metric.to_string(),
            Method::Random | Method::IdidKnownModels => "none".into(),
        }
    }
}

/// Stage runner over one output directory. Intermediate results are cached in
/// memory; with `reuse` set, artifacts already on disk that were written
/// under the same configuration are loaded instead of recomputed.
pub struct Pipeline {
    cfg: ExperimentConfig,
    spec: DomainSpec,
    shape: TreeShape,
    out: OutputDir,
    reuse: bool,
    timings: Vec<(String, f64)>,
    history: Option<InteractionHistory>,
    reconstructed: Option<Vec<PolicyTree>>,
    encoded: Option<Vec<EncodedTree>>,
    networks: HashMap<&'static str, VaeNetwork>,
    generated: HashMap<&'static str, Vec<PolicyTree>>,
}

fn variant_key(v: NetworkVariant) -> &'static str {
    match v {
        NetworkVariant::TreeLoss => "tree",
        NetworkVariant::Bce => "bce",
    }
}

impl Pipeline {
    pub fn open(cfg: &ExperimentConfig, reuse: bool) -> Result<Self> {
        cfg.validate()?;
        let spec = cfg.domain.spec()?;
        let shape = cfg.shape(&spec);
        let out = OutputDir::open(&cfg.out_dir)?;
        Ok(Self {
            cfg: cfg.clone(),
            spec,
            shape,
            out,
            reuse,
            timings: Vec::new(),
            history: None,
            reconstructed: None,
            encoded: None,
            networks: HashMap::new(),
            generated: HashMap::new(),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn output(&self) -> &OutputDir {
        &self.out
    }

    fn seed(&self, label: &str) -> u64 {
        derive_seed(self.cfg.seed, label)
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self).map_err(|e| e.in_stage(stage, self.cfg.seed))?;
        self.timings.push((stage.to_string(), start.elapsed().as_secs_f64()));
        Ok(out)
    }

    fn header(&self, extra: &[String]) -> String {
        comment_block(&self.cfg, extra)
    }

    pub(crate) fn header_for_sweep(&self) -> String {
        self.header(&[])
    }

    /// Text of an artifact if it exists and was written under this exact
    /// configuration.
    fn fresh(&self, name: &str) -> Result<Option<String>> {
        if !self.reuse || !self.out.exists(name) {
            return Ok(None);
        }
        let text = self.out.read_string(name)?;
        let stamp = format!("# config {}", self.cfg.stamp());
        Ok(text.lines().any(|l| l == stamp).then_some(text))
    }

    /// Most frequent opponent action in the history: the fill-in for EMPTY
    /// nodes.
    pub fn fallback_action(&mut self) -> Result<usize> {
        let n = self.spec.n_actions_j();
        Ok(self.history()?.most_frequent_action(n).unwrap_or(0))
    }

    pub fn history(&mut self) -> Result<&InteractionHistory> {
        if self.history.is_none() {
            let h = match self.fresh(artifacts::HISTORY)? {
                Some(text) => artifacts::read_history(&text).map_err(|e| e.in_stage("simulate", self.cfg.seed))?,
                None => self.simulate()?,
            };
            self.history = Some(h);
        }
        Ok(self.history.as_ref().expect("set above"))
    }

    /// Records a fresh history from the generator tree; writes the history
    /// and the generator.
    pub fn simulate(&mut self) -> Result<InteractionHistory> {
        self.timed("simulate", |p| {
            let generator = p.cfg.domain.generator_tree(p.cfg.horizon);
            let policy = GroundTruthPolicy::Tree {
                tree: generator.clone(),
                action_noise: p.cfg.history_noise,
            };
            let mut rng = from_seed(p.seed("history"));
            let h = simulate_history(&p.spec, &policy, p.cfg.history_length, &mut rng)?;
            let extra = [format!("generator_noise {}", p.cfg.history_noise)];
            p.out.write(
                artifacts::HISTORY,
                p.header(&[]) + &artifacts::write_history(&h),
            )?;
            p.out.write(artifacts::GENERATOR, p.header(&extra) + &write_trees(&[generator]))?;
            p.history = Some(h.clone());
            Ok(h)
        })
    }

    pub fn reconstructed(&mut self) -> Result<&[PolicyTree]> {
        if self.reconstructed.is_none() {
            let trees = match self.fresh(artifacts::RECONSTRUCTED)? {
                Some(text) => {
                    read_trees(&text, self.shape.n_actions).map_err(|e| e.in_stage("reconstruct", self.cfg.seed))?
                }
                None => self.reconstruct()?,
            };
            self.reconstructed = Some(trees);
        }
        Ok(self.reconstructed.as_deref().expect("set above"))
    }

    /// Rebuilds `m` trees from the history and writes them with their
    /// encodings.
    pub fn reconstruct(&mut self) -> Result<Vec<PolicyTree>> {
        self.history()?;
        self.timed("reconstruct", |p| {
            let h = p.history.as_ref().expect("loaded");
            let mut rng = from_seed(p.seed("reconstruct"));
            let trees = reconstruct_trees(h, p.cfg.horizon, p.cfg.reconstructed, &p.spec, &mut rng)?;
            let alphabet = p.shape.alphabet();
            let encoded = trees
                .iter()
                .map(|t| zzoh_encode(t, &alphabet))
                .collect::<Result<Vec<_>>>()?;
            let incomplete = trees.iter().filter(|t| !t.is_complete()).count();
            p.out.write(
                artifacts::RECONSTRUCTED,
                p.header(&[format!("incomplete {incomplete}")]) + &write_trees(&trees),
            )?;
            p.out.write(
                artifacts::ENCODED,
                p.header(&[])
                    + &write_matrix(&encoded, p.shape.n_actions, p.shape.branching, p.shape.depth),
            )?;
            p.reconstructed = Some(trees.clone());
            p.encoded = Some(encoded);
            Ok(trees)
        })
    }

    pub fn encoded(&mut self) -> Result<&[EncodedTree]> {
        if self.encoded.is_none() {
            let rows = match self.fresh(artifacts::ENCODED)? {
                Some(text) => {
                    let (_, rows) = read_matrix(&text).map_err(|e| e.in_stage("reconstruct", self.cfg.seed))?;
                    rows
                }
                None => {
                    self.reconstruct()?;
                    self.encoded.take().expect("reconstruct sets encodings")
                }
            };
            self.encoded = Some(rows);
        }
        Ok(self.encoded.as_deref().expect("set above"))
    }

    /// Variants the configured methods need.
    pub fn variants(&self) -> Vec<NetworkVariant> {
        let m = &self.cfg.methods;
        let mut v = Vec::new();
        if m.iter().any(|m| matches!(m, Method::Random | Method::VaeMdf | Method::VaeIcd)) {
            v.push(NetworkVariant::TreeLoss);
        }
        if m.contains(&Method::VaeBceloss) {
            v.push(NetworkVariant::Bce);
        }
        v
    }

    pub fn network(&mut self, variant: NetworkVariant) -> Result<&VaeNetwork> {
        let key = variant_key(variant);
        if !self.networks.contains_key(key) {
            let file = variant.params_file();
            let stamp = format!("# config {}", self.cfg.stamp());
            let loaded = if self.reuse && self.out.exists(&file) {
                let bytes = self.out.read_bytes(&file)?;
                let head_matches = bytes
                    .split(|&b| b == b'\n')
                    .take_while(|l| *l != b"end_header")
                    .any(|l| l == stamp.as_bytes());
                if head_matches {
                    Some(read_params(&bytes).map_err(|e| e.in_stage("train", self.cfg.seed))?.1)
                } else {
                    None
                }
            } else {
                None
            };
            let net = match loaded {
                Some(net) => net,
                None => self.train(variant)?.net,
            };
            self.networks.insert(key, net);
        }
        Ok(&self.networks[key])
    }

    /// Trains one network variant on the encoded reconstructions and writes
    /// its parameters and loss log.
    pub fn train(&mut self, variant: NetworkVariant) -> Result<TrainedVae> {
        self.encoded()?;
        self.timed("train", |p| {
            let mut tc = p.cfg.train.clone();
            tc.seed = p.seed(match variant {
                NetworkVariant::TreeLoss => "train",
                NetworkVariant::Bce => "train-bceloss",
            });
            if variant == NetworkVariant::Bce {
                tc.weighting = LossWeighting::Uniform;
            }
            let data = p.encoded.as_deref().expect("loaded");
            let trained = train(data, p.shape, &tc)?;
            let comments: Vec<String> = artifacts::provenance(&p.cfg);
            p.out.write(&variant.params_file(), write_params(&trained, &comments)?)?;
            let log_header = p.header(&[format!("train_seed {}", tc.seed), format!("epochs {}", trained.epochs())]);
            p.out.write(&variant.log_file(), log_header + &write_training_log(&trained.log))?;
            p.networks.insert(variant_key(variant), trained.net.clone());
            Ok(trained)
        })
    }

    pub fn generated(&mut self, variant: NetworkVariant) -> Result<&[PolicyTree]> {
        let key = variant_key(variant);
        if !self.generated.contains_key(key) {
            let trees = match self.fresh(&variant.generated_file())? {
                Some(text) => {
                    read_trees(&text, self.shape.n_actions).map_err(|e| e.in_stage("generate", self.cfg.seed))?
                }
                None => self.generate(variant)?,
            };
            self.generated.insert(key, trees);
        }
        Ok(&self.generated[key])
    }

    /// Draws `M` trees from a trained network.
    pub fn generate(&mut self, variant: NetworkVariant) -> Result<Vec<PolicyTree>> {
        self.encoded()?;
        self.network(variant)?;
        self.timed("generate", |p| {
            let net = &p.networks[variant_key(variant)];
            let source = p.encoded.as_deref().expect("loaded");
            let mut rng = from_seed(p.seed(match variant {
                NetworkVariant::TreeLoss => "generate",
                NetworkVariant::Bce => "generate-bceloss",
            }));
            let trees = generate(net, source, p.cfg.generated, p.shape, &mut rng)?;
            let incomplete = trees.iter().filter(|t| !t.is_complete()).count();
            p.out.write(
                &variant.generated_file(),
                p.header(&[format!("incomplete {incomplete}")]) + &write_trees(&trees),
            )?;
            p.generated.insert(variant_key(variant), trees.clone());
            Ok(trees)
        })
    }

    /// Complete candidates from the generated trees, per the incomplete-tree
    /// policy; returns the kept trees and the number of filled nodes.
    pub(crate) fn candidates(&mut self, variant: NetworkVariant) -> Result<(Vec<PolicyTree>, usize)> {
        let fallback = self.fallback_action()?;
        let policy = self.cfg.incomplete;
        let trees = self.generated(variant)?;
        let mut filled = 0;
        let kept = trees
            .iter()
            .filter_map(|t| match (t.is_complete(), policy) {
                (true, _) => Some(t.clone()),
                (false, IncompletePolicy::Exclude) => None,
                (false, IncompletePolicy::Fill) => {
                    let (full, n) = t.fill_empty(fallback);
                    filled += n;
                    Some(full)
                }
            })
            .collect();
        Ok((kept, filled))
    }

    /// Picks the trees `method` evaluates with and writes them.
    pub fn select(&mut self, method: Method) -> Result<Selection> {
        self.history()?;
        match method {
            Method::IdidKnownModels => {
                self.reconstructed()?;
            }
            Method::VaeBceloss => {
                self.generated(NetworkVariant::Bce)?;
            }
            _ => {
                self.generated(NetworkVariant::TreeLoss)?;
            }
        }
        self.timed("select", |p| {
            let k = p.cfg.k;
            let (trees, filled_nodes): (Vec<PolicyTree>, usize) = match method {
                Method::IdidKnownModels => {
                    let fallback = p.fallback_action()?;
                    let mut filled = 0;
                    let trees = p
                        .reconstructed
                        .as_deref()
                        .expect("loaded")
                        .iter()
                        .map(|t| {
                            let (full, n) = t.fill_empty(fallback);
                            filled += n;
                            full
                        })
                        .collect();
                    (trees, filled)
                }
                _ => {
                    let variant = match method {
                        Method::VaeBceloss => NetworkVariant::Bce,
                        _ => NetworkVariant::TreeLoss,
                    };
                    let (pool, filled) = p.candidates(variant)?;
                    if pool.len() < k {
                        return Err(Error::KOutOfRange { k, n: pool.len() });
                    }
                    let picked: Vec<usize> = match method {
                        Method::Random => {
                            let mut rng = from_seed(p.seed("random-select"));
                            let mut idx = index::sample(&mut rng, pool.len(), k).into_vec();
                            idx.sort_unstable();
                            idx
                        }
                        _ => {
                            let metric = match method {
                                Method::VaeMdf => MetricKind::Mdf,
                                Method::VaeIcd => MetricKind::Icd,
                                _ => p.cfg.metric,
                            };
                            let provenance = Provenance {
                                seed: p.cfg.seed,
                                source_index: None,
                            };
                            let set = CandidateSet::new(pool.clone(), provenance)?;
                            top_k(&set, k, metric, p.cfg.selection)?
                        }
                    };
                    (picked.into_iter().map(|i| pool[i].clone()).collect(), filled)
                }
            };
            let extra = [format!("method {method}"), format!("filled_nodes {filled_nodes}")];
            p.out.write(&selected_file(method.name()), p.header(&extra) + &write_trees(&trees))?;
            Ok(Selection {
                method,
                trees,
                filled_nodes,
            })
        })
    }

    /// Loads a method's persisted selection when fresh, else recomputes it.
    pub fn selection(&mut self, method: Method) -> Result<Selection> {
        if let Some(text) = self.fresh(&selected_file(method.name()))? {
            let trees = read_trees(&text, self.shape.n_actions).map_err(|e| e.in_stage("select", self.cfg.seed))?;
            let filled_nodes = text
                .lines()
                .find_map(|l| l.strip_prefix("# filled_nodes "))
                .and_then(|v| v.parse().ok())
                .unwrap_or(0);
            return Ok(Selection {
                method,
                trees,
                filled_nodes,
            });
        }
        self.select(method)
    }

    /// The opponent tree used for evaluation, written to `truth.txt`.
    pub fn truth(&mut self) -> Result<PolicyTree> {
        let tree = match self.cfg.truth {
            TruthMode::Generator => self.cfg.domain.generator_tree(self.cfg.horizon),
            TruthMode::Reconstructed => {
                let fallback = self.fallback_action()?;
                let mut rng = from_seed(derive_seed(self.cfg.seed, "truth"));
                let trees = self.reconstructed()?;
                let pick = index::sample(&mut rng, trees.len(), 1).index(0);
                trees[pick].fill_empty(fallback).0
            }
        };
        let extra = [format!("truth_mode {:?}", self.cfg.truth)];
        self.out.write(artifacts::TRUTH, self.header(&extra) + &write_trees(std::slice::from_ref(&tree)))?;
        Ok(tree)
    }

    fn prior(&self, sel: &Selection) -> Result<ModelNodePrior> {
        let w = &self.cfg.prior_weights;
        if w.is_empty() || sel.method == Method::IdidKnownModels {
            return ModelNodePrior::uniform(sel.trees.clone());
        }
        if w.len() != sel.trees.len() {
            return Err(Error::LengthMismatch {
                expected: sel.trees.len(),
                actual: w.len(),
            });
        }
        let sum: f64 = w.iter().sum();
        ModelNodePrior::new(sel.trees.clone(), w.iter().map(|x| x / sum).collect())
    }

    /// Best response and seeded rollouts for every selection; writes the
    /// report files.
    pub fn evaluate(&mut self, selections: &[Selection]) -> Result<Report> {
        let truth = self.timed("truth", |p| p.truth())?;
        self.timed("evaluate", |p| {
            let priors = selections
                .iter()
                .map(|s| Ok((s.method.name().to_string(), p.prior(s)?)))
                .collect::<Result<Vec<_>>>()?;
            let results = evaluate_pipeline(
                &p.spec,
                &priors,
                &truth,
                p.cfg.horizon,
                p.cfg.runs,
                p.seed("episodes"),
            )?;
            let rows = selections
                .iter()
                .zip(results)
                .map(|(s, r)| ReportRow {
                    method: r.method,
                    k: s.trees.len(),
                    metric: s.metric_label(&p.cfg),
                    mean_reward: r.mean_reward,
                    stderr: r.stderr,
                    solve_seconds: r.solve_seconds,
                    eval_seconds: r.eval_seconds,
                })
                .collect();
            let report = Report {
                seed: p.cfg.seed,
                config: p.cfg.clone(),
                rows,
            };
            p.out.write(artifacts::REPORT_CSV, report.to_csv())?;
            p.out.write(artifacts::REPORT_JSON, report.to_json())?;
            Ok(report)
        })
    }

    /// Writes `timings.csv` with the wall time of every stage run so far.
    pub fn write_timings(&self) -> Result<()> {
        let mut out = self.header(&[]) + "stage,seconds\n";
        for (stage, secs) in &self.timings {
            out.push_str(&format!("{stage},{secs}\n"));
        }
        self.out.write(artifacts::TIMINGS, out)?;
        Ok(())
    }
}
