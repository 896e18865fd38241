//! Replicated simulations and regret aggregation.

use std::time::Instant;

use cascade_bandits_core::envgen::{
    misspecified_prior, sample_beta_prior, sample_instance_from_prior, sample_linear_instance,
    sample_logistic_instance, Environment,
};
use cascade_bandits_core::policies::{
    BayesUcb, CascadeKlUcb, CascadeLinUcb, CascadeUcb1, ContextualConfig, FixedList, GaussianTs,
    GlmTs, GlmTsConfig, LinTs, NewtonGlmTs, TsBeta,
};
use cascade_bandits_core::posterior::RadiusPrefactor;
use cascade_bandits_core::{
    best_action, BanditInstance, FeedbackMode, LinkFunction, Policy, PriorSpec,
};
use log::{debug, warn};
use rayon::prelude::*;

use crate::config::{EnvKind, ExperimentConfig, FeedbackKind, PrefactorKind};
use crate::error::{HarnessError, Result};
use crate::instance_io::read_instances;
use crate::output::{ResultRow, ResultTable, RunMeta, SweepRow, SweepTable};
use crate::seeds::{stream_rng, ENV_STREAM, INSTANCE_STREAM, POLICY_STREAM_BASE, PRIOR_STREAM};

/// Public algorithm registry, in display order.
pub const ALGORITHMS: &[&str] = &[
    "gts",
    "lints",
    "glmts",
    "newton-glmts",
    "ts-beta",
    "bayes-ucb",
    "cascade-ucb1",
    "cascade-klucb",
    "cascade-linucb",
];

/// Plays the optimal list; not listed, used to check the harness.
pub const ORACLE: &str = "oracle";

pub fn is_known_algorithm(name: &str) -> bool {
    name == ORACLE || ALGORITHMS.contains(&name)
}

fn is_contextual_algorithm(name: &str) -> bool {
    matches!(name, "lints" | "glmts" | "newton-glmts" | "cascade-linucb")
}

/// Where replication instances come from.
#[derive(Debug, Clone)]
pub enum InstanceSource {
    /// Per-item `β₁ ~ U{1..10}`, `β₂ = 10`, redrawn every `n_inner` replications.
    NestedBeta { num_items: usize, list_len: usize, n_inner: usize },
    /// Every replication draws from the same prior.
    FixedPrior { prior: PriorSpec, list_len: usize },
    Linear { num_items: usize, list_len: usize, dim: usize },
    Logistic { num_items: usize, list_len: usize, dim: usize },
    /// Each instance is run `replications` times.
    Fixed { instances: Vec<BanditInstance>, replications: usize },
}

impl InstanceSource {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(match cfg.env {
            EnvKind::Bernoulli => Self::NestedBeta {
                num_items: cfg.num_items,
                list_len: cfg.list_len,
                n_inner: cfg.n_inner,
            },
            EnvKind::Linear => Self::Linear {
                num_items: cfg.num_items,
                list_len: cfg.list_len,
                dim: cfg.d,
            },
            EnvKind::Logistic => Self::Logistic {
                num_items: cfg.num_items,
                list_len: cfg.list_len,
                dim: cfg.d,
            },
            EnvKind::Instances => {
                let path = cfg.instances.as_ref().expect("validated");
                Self::Fixed {
                    instances: read_instances(path, cfg.max_instances)?,
                    replications: cfg.replications,
                }
            }
        })
    }

    fn runs(&self, replications: usize) -> usize {
        match self {
            Self::Fixed { instances, replications } => instances.len() * replications,
            _ => replications,
        }
    }

    fn instance(&self, cfg: &ExperimentConfig, run: usize) -> Result<BanditInstance> {
        let seed = cfg.seed;
        let mut rng = stream_rng(seed, run as u64, INSTANCE_STREAM);
        let inst = match self {
            Self::NestedBeta { num_items, list_len, n_inner } => {
                let outer = (run / n_inner) as u64;
                let prior = sample_beta_prior(*num_items, &mut stream_rng(seed, outer, PRIOR_STREAM))?;
                sample_instance_from_prior(&prior, *list_len, &mut rng)?
            }
            Self::FixedPrior { prior, list_len } => sample_instance_from_prior(prior, *list_len, &mut rng)?,
            Self::Linear { num_items, list_len, dim } => {
                apply_env_options(cfg, sample_linear_instance(*num_items, *list_len, *dim, &mut rng)?)?
            }
            Self::Logistic { num_items, list_len, dim } => {
                apply_env_options(cfg, sample_logistic_instance(*num_items, *list_len, *dim, &mut rng)?)?
            }
            Self::Fixed { instances, replications } => instances[run / replications].clone(),
        };
        Ok(inst)
    }

    fn is_contextual(&self) -> bool {
        match self {
            Self::NestedBeta { .. } | Self::FixedPrior { .. } => false,
            Self::Linear { .. } | Self::Logistic { .. } => true,
            Self::Fixed { instances, .. } => instances.iter().all(|i| i.is_contextual()),
        }
    }
}

fn apply_env_options(cfg: &ExperimentConfig, inst: BanditInstance) -> Result<BanditInstance> {
    let inst = if cfg.feedback == FeedbackKind::Gaussian {
        inst.with_feedback(FeedbackMode::Gaussian {
            noise_var: cfg.feedback_noise_var,
            threshold: cfg.feedback_threshold,
        })?
    } else {
        inst
    };
    Ok(inst.with_redraw(cfg.redraw)?)
}

/// Builds a fresh policy for `instance`. `prior_shift` moves the Beta prior
/// of the prior-informed algorithms (`ts-beta`, `bayes-ucb`); instances
/// without a prior give them `Beta(1, 1)`.
pub fn build_policy(
    name: &str,
    cfg: &ExperimentConfig,
    instance: &BanditInstance,
    prior_shift: u32,
    horizon: u64,
) -> Result<Box<dyn Policy>> {
    let l = instance.num_items();
    let k = instance.list_len();
    let beta_prior = || -> Result<(Vec<f64>, Vec<f64>)> {
        match instance.prior() {
            Some(p) => {
                let p = p.with_shift(prior_shift)?;
                Ok((p.alphas(), p.betas()))
            }
            None => Ok((vec![1.0; l], vec![1.0; l])),
        }
    };
    let contextual = || {
        let mut c = ContextualConfig::new(
            instance.dim(),
            k,
            cfg.lambda,
            cfg.norm_bound,
            cfg.sigma_sq,
            cfg.delta_for(horizon),
        );
        c.prefactor = match cfg.radius_prefactor {
            PrefactorKind::SigmaSq => RadiusPrefactor::SigmaSq,
            PrefactorKind::Sigma => RadiusPrefactor::Sigma,
        };
        c
    };
    if is_contextual_algorithm(name) && !instance.is_contextual() {
        return Err(HarnessError::Config(format!(
            "{name} needs a contextual environment (linear, logistic or feature instances)"
        )));
    }
    let policy: Box<dyn Policy> = match name {
        "gts" => Box::new(GaussianTs::new(l, k, cfg.prior_mean, cfg.prior_var, cfg.noise_var)?),
        "ts-beta" => {
            let (a, b) = beta_prior()?;
            Box::new(TsBeta::new(k, a, b)?)
        }
        "bayes-ucb" => {
            let (a, b) = beta_prior()?;
            Box::new(BayesUcb::new(k, a, b)?)
        }
        "cascade-ucb1" => Box::new(CascadeUcb1::new(l, k)?),
        "cascade-klucb" => Box::new(CascadeKlUcb::new(l, k)?),
        "lints" => Box::new(LinTs::new(contextual())?),
        "glmts" => {
            let mut g = GlmTsConfig::new(contextual(), LinkFunction::Sigmoid);
            g.refit_every = cfg.refit_every;
            Box::new(GlmTs::new(g)?)
        }
        "newton-glmts" => Box::new(NewtonGlmTs::new(instance.dim(), k, cfg.newton_step)?),
        "cascade-linucb" => {
            let mut c = contextual();
            c.scale_override = cfg.linucb_c;
            Box::new(CascadeLinUcb::new(c)?)
        }
        ORACLE => Box::new(FixedList::new(best_action(instance.attraction_means(), k)?)),
        other => return Err(HarnessError::Config(format!("unknown algorithm '{other}'"))),
    };
    Ok(policy)
}

/// Rounds at which cumulative regret is recorded: every `log_every` rounds
/// and at the horizon.
pub fn checkpoints(horizon: u64, log_every: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=horizon / log_every).map(|i| i * log_every).collect();
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

struct Plan<'a> {
    cfg: &'a ExperimentConfig,
    source: &'a InstanceSource,
    prior_shift: u32,
    horizon: u64,
    checkpoints: Vec<u64>,
}

impl Plan<'_> {
    /// All algorithms on one replication's instance, sharing environment
    /// randomness.
    fn replication(&self, run: usize) -> Result<Vec<Vec<f64>>> {
        let cfg = self.cfg;
        let instance = self.source.instance(cfg, run)?;
        let mut per_alg = Vec::with_capacity(cfg.algorithms.len());
        for (a, name) in cfg.algorithms.iter().enumerate() {
            let mut policy = build_policy(name, cfg, &instance, self.prior_shift, self.horizon)?;
            let regret = run_policy(
                policy.as_mut(),
                &instance,
                self.horizon,
                &self.checkpoints,
                cfg.seed,
                run as u64,
                POLICY_STREAM_BASE + a as u64,
            )
            .map_err(|e| HarnessError::Runtime(format!("replication {run}, {name}: {e}")))?;
            per_alg.push(regret);
        }
        Ok(per_alg)
    }
}

/// Runs one algorithm on one instance with the harness's seed layout for
/// `(master, run)` and returns cumulative regret at each checkpoint.
pub fn run_policy(
    policy: &mut dyn Policy,
    instance: &BanditInstance,
    horizon: u64,
    checkpoints: &[u64],
    master: u64,
    run: u64,
    policy_stream: u64,
) -> Result<Vec<f64>> {
    let mut env = Environment::new(instance);
    let mut env_rng = stream_rng(master, run, ENV_STREAM);
    let mut pol_rng = stream_rng(master, run, policy_stream);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    let mut cum = 0.0;
    for t in 1..=horizon {
        let context = env.begin_round(&mut env_rng)?.cloned();
        let action = policy.select(context.as_ref(), &mut pol_rng)?;
        cum += env.step_regret(&action)?;
        let feedback = env.step(&action, &mut env_rng)?;
        policy.update(&action, &feedback)?;
        if next < checkpoints.len() && checkpoints[next] == t {
            out.push(cum);
            next += 1;
        }
    }
    Ok(out)
}

fn execute(plan: &Plan<'_>) -> Result<(Vec<Vec<Vec<f64>>>, Vec<String>)> {
    let cfg = plan.cfg;
    if !plan.source.is_contextual() {
        if let Some(name) = cfg.algorithms.iter().find(|n| is_contextual_algorithm(n)) {
            return Err(HarnessError::Config(format!(
                "{name} needs a contextual environment (linear, logistic or feature instances)"
            )));
        }
    }
    let runs = plan.source.runs(cfg.replications);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads())
        .build()
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let results: Vec<Result<Vec<Vec<f64>>>> = pool.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|run| {
                let out = plan.replication(run);
                debug!("replication {run} done");
                out
            })
            .collect()
    });
    let mut ok = Vec::with_capacity(runs);
    let mut failures = Vec::new();
    for res in results {
        match res {
            Ok(r) => ok.push(r),
            Err(e) if cfg.strict => return Err(e),
            Err(e) => {
                warn!("dropping {e}");
                failures.push(e.to_string());
            }
        }
    }
    if ok.is_empty() {
        return Err(HarnessError::Runtime(format!(
            "every replication failed; first error: {}",
            failures.first().map_or("none", String::as_str)
        )));
    }
    Ok((ok, failures))
}

/// Mean and standard error (sample standard deviation over `√n`).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn aggregate(cfg: &ExperimentConfig, checkpoints: &[u64], reps: &[Vec<Vec<f64>>]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for (a, name) in cfg.algorithms.iter().enumerate() {
        for (c, &round) in checkpoints.iter().enumerate() {
            let values: Vec<f64> = reps.iter().map(|r| r[a][c]).collect();
            let (mean, stderr) = mean_stderr(&values);
            rows.push(ResultRow {
                algorithm: name.clone(),
                round,
                mean_cum_regret: mean,
                stderr,
                n_reps: values.len(),
            });
        }
    }
    rows
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

/// Runs every configured algorithm on every replication.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let start = Instant::now();
    let source = InstanceSource::from_config(cfg)?;
    let plan = Plan {
        cfg,
        source: &source,
        prior_shift: 0,
        horizon: cfg.horizon,
        checkpoints: checkpoints(cfg.horizon, cfg.log_every),
    };
    let (reps, failures) = execute(&plan)?;
    Ok(ResultTable {
        rows: aggregate(cfg, &plan.checkpoints, &reps),
        meta: RunMeta {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            git_describe: git_describe(),
            wall_time_secs: start.elapsed().as_secs_f64(),
            failed_replications: failures,
        },
    })
}

/// Final regret versus prior shift `c`. True instances come from
/// `Beta(1, 10)`; only the prior-informed algorithms see the shifted prior,
/// and seeds do not depend on `c`.
pub fn run_misspecification_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    let start = Instant::now();
    if cfg.env != EnvKind::Bernoulli {
        return Err(HarnessError::Config("the sweep needs env = \"bernoulli\"".into()));
    }
    let source = InstanceSource::FixedPrior {
        prior: misspecified_prior(0, cfg.num_items)?,
        list_len: cfg.list_len,
    };
    let horizon = cfg.sweep_horizon;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &c in &cfg.sweep {
        let plan = Plan {
            cfg,
            source: &source,
            prior_shift: c,
            horizon,
            checkpoints: vec![horizon],
        };
        let (reps, failed) = execute(&plan)?;
        failures.extend(failed.into_iter().map(|f| format!("c={c}: {f}")));
        for (a, name) in cfg.algorithms.iter().enumerate() {
            let values: Vec<f64> = reps.iter().map(|r| r[a][0]).collect();
            let (mean, stderr) = mean_stderr(&values);
            rows.push(SweepRow {
                c,
                algorithm: name.clone(),
                final_mean_cum_regret: mean,
                stderr,
                n_reps: values.len(),
            });
        }
    }
    Ok(SweepTable {
        rows,
        meta: RunMeta {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            git_describe: git_describe(),
            wall_time_secs: start.elapsed().as_secs_f64(),
            failed_replications: failures,
        },
    })
}
