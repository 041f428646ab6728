//! Commands behind the `blicket` binary. Each returns its report as text so
//! it can be tested without spawning a process.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use blicket_core::causal::{enumerate_structures, experimental_prior, uniform_prior};
use blicket_core::traces::{parse_jsonl, StatsTable};
use blicket_core::{
    blicket_rates, condition_stats, disambiguation_sufficient, empty_check, expected_steps,
    min_step_policy, order_variation, per_step_policy, reset, validate, BeliefState,
    CausalStructure, Condition, HypothesisSpace, MacroAction, PolicyTree, Prior, SessionTrace,
};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PriorName {
    Uniform,
    Experimental,
}

impl PriorName {
    pub fn label(self) -> &'static str {
        match self {
            PriorName::Uniform => "uniform",
            PriorName::Experimental => "experimental",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Model {
    PerStep,
    MinStep,
}

impl Model {
    pub fn label(self) -> &'static str {
        match self {
            Model::PerStep => "per-step",
            Model::MinStep => "min-step",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Export {
    Text,
    Dot,
}

/// `full` for every structure over `n_objects`, or a comma-separated list
/// such as `AB-con,AB-dis`.
pub fn parse_space(spec: &str, n_objects: usize) -> Result<Arc<HypothesisSpace>> {
    let space = if spec == "full" {
        enumerate_structures(n_objects)?
    } else {
        let hs = spec
            .split(',')
            .map(|s| s.trim().parse::<CausalStructure>())
            .collect::<Result<Vec<_>, _>>()?;
        HypothesisSpace::new(n_objects, hs)?
    };
    Ok(Arc::new(space))
}

pub fn make_prior(space: Arc<HypothesisSpace>, name: PriorName) -> Result<Prior> {
    Ok(match name {
        PriorName::Uniform => uniform_prior(space),
        PriorName::Experimental => experimental_prior(space)?,
    })
}

pub fn policy(prior: &Prior, model: Model) -> Result<PolicyTree> {
    Ok(match model {
        Model::MinStep => min_step_policy(prior)?.tree,
        Model::PerStep => per_step_policy(&BeliefState::from_prior(prior))?,
    })
}

pub fn solve(prior: &Prior, model: Model, export: Export) -> Result<String> {
    let tree = policy(prior, model)?;
    let steps = expected_steps(&tree, prior)?;
    let mut out = match export {
        Export::Text => tree.to_text(),
        Export::Dot => tree.to_dot(&format!("{}_{}", model.label().replace('-', "_"), prior.name())),
    };
    if export == Export::Text {
        writeln!(out)?;
        writeln!(out, "model: {}", model.label())?;
        writeln!(out, "prior: {}", prior.name())?;
        writeln!(out, "expected steps: {:.2}", blicket_core::causal::ratio_to_f64(steps))?;
        writeln!(out, "exact: {steps}")?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedRun {
    pub truth: CausalStructure,
    /// Tests until the policy names a structure.
    pub steps: usize,
    /// Place, remove and check actions spent on those tests.
    pub micro_actions: u64,
    pub identified: CausalStructure,
}

/// Run the policy against the detector for each truth. The detector is
/// deterministic, so one trial per truth suffices.
pub fn simulate(prior: &Prior, model: Model, truth: Option<CausalStructure>) -> Result<Vec<SimulatedRun>> {
    let space = prior.space();
    let truths: Vec<CausalStructure> = match truth {
        Some(t) => {
            let i = space.index_of(&t).with_context(|| format!("{t} is not in the space"))?;
            if !prior.support().contains(i) {
                bail!("{t} has zero weight under the {} prior", prior.name());
            }
            vec![t]
        }
        None => prior.support().iter().map(|i| space.get(i)).collect(),
    };
    let tree = policy(prior, model)?;
    let mut runs = Vec::new();
    for t in truths {
        let mut state = reset(t, space.n_objects(), 0);
        let mut node = &tree;
        let mut steps = 0;
        while let PolicyTree::Node { action, on, off } = node {
            let (next, obs) = state.run_macro(MacroAction::new(*action))?;
            state = next;
            steps += 1;
            node = if obs.is_on() { on } else { off };
        }
        let PolicyTree::Leaf { identified } = node else { unreachable!() };
        runs.push(SimulatedRun {
            truth: t,
            steps,
            micro_actions: state.step_count(),
            identified: *identified,
        });
    }
    Ok(runs)
}

pub fn simulate_report(prior: &Prior, model: Model, runs: &[SimulatedRun]) -> String {
    let mut out = String::new();
    let space = prior.space();
    let mut mean = 0.0;
    for r in runs {
        let w = prior.weights_f64()[space.index_of(&r.truth).unwrap()];
        mean += w * r.steps as f64;
        let _ = writeln!(
            out,
            "{:<8} steps {}  micro actions {}  identified {}",
            r.truth.to_string(),
            r.steps,
            r.micro_actions,
            r.identified
        );
    }
    let _ = writeln!(out, "model: {}  prior: {}", model.label(), prior.name());
    if runs.len() == prior.support().len() {
        let _ = writeln!(out, "mean steps (prior-weighted): {mean:.2}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileIssue {
    pub file: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sufficiency {
    pub prior: String,
    /// Condition label to (sufficient, total).
    pub by_condition: BTreeMap<String, (usize, usize)>,
    pub sufficient: usize,
    pub total: usize,
    /// Traces whose evidence the prior rules out entirely.
    pub inconsistent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub files_read: usize,
    pub skipped: Vec<FileIssue>,
    pub traces: usize,
    pub table: StatsTable,
    pub sufficiency: Vec<Sufficiency>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub order_variation: usize,
    pub empty_check: usize,
}

/// Load trace files; a file with any unreadable or non-replaying trace is
/// skipped whole and reported.
pub fn load_traces(files: &[PathBuf]) -> (Vec<SessionTrace>, Vec<FileIssue>) {
    let mut traces = Vec::new();
    let mut skipped = Vec::new();
    for f in files {
        let name = f.display().to_string();
        let loaded = std::fs::read_to_string(f)
            .map_err(|e| e.to_string())
            .and_then(|text| parse_jsonl(&text).map_err(|e| e.to_string()))
            .and_then(|ts| {
                for t in &ts {
                    validate(t).map_err(|e| format!("session {}: {e}", t.session_id))?;
                }
                Ok(ts)
            });
        match loaded {
            Ok(ts) => traces.extend(ts),
            Err(error) => skipped.push(FileIssue { file: name, error }),
        }
    }
    (traces, skipped)
}

pub fn analyze(files: &[PathBuf], priors: &[PriorName]) -> Result<AnalysisReport> {
    let (traces, skipped) = load_traces(files);
    let space = Arc::new(enumerate_structures(3)?);
    let mut sufficiency = Vec::new();
    for &p in priors {
        let prior = make_prior(space.clone(), p)?;
        let mut s = Sufficiency {
            prior: p.label().to_string(),
            by_condition: BTreeMap::new(),
            sufficient: 0,
            total: 0,
            inconsistent: 0,
        };
        for t in &traces {
            let ok = match disambiguation_sufficient(t, &prior) {
                Ok(ok) => ok,
                Err(_) => {
                    s.inconsistent += 1;
                    false
                }
            };
            let cell = s.by_condition.entry(t.condition.to_string()).or_default();
            cell.0 += ok as usize;
            cell.1 += 1;
            s.sufficient += ok as usize;
            s.total += 1;
        }
        sufficiency.push(s);
    }
    let rates = blicket_rates(&traces).ok();
    Ok(AnalysisReport {
        files_read: files.len(),
        skipped,
        traces: traces.len(),
        table: condition_stats(&traces),
        sufficiency,
        tpr: rates.map(|r| r.tpr),
        fpr: rates.map(|r| r.fpr),
        order_variation: traces.iter().filter(|t| order_variation(t)).count(),
        empty_check: traces.iter().filter(|t| empty_check(t)).count(),
    })
}

fn percent(a: usize, b: usize) -> String {
    if b == 0 {
        "n/a".into()
    } else {
        format!("{:.0}%", 100.0 * a as f64 / b as f64)
    }
}

pub fn render_report(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "files: {}  traces: {}  skipped files: {}", r.files_read, r.traces, r.skipped.len());
    for s in &r.skipped {
        let _ = writeln!(out, "  skipped {}: {}", s.file, s.error);
    }
    for w in &r.table.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    if r.traces == 0 {
        return out;
    }
    let _ = writeln!(out, "\n{}", r.table.render());
    let _ = writeln!(out, "{}", r.table.render_micro());
    for s in &r.sufficiency {
        let _ = writeln!(
            out,
            "sufficient evidence ({} prior): {} of {} ({})",
            s.prior,
            s.sufficient,
            s.total,
            percent(s.sufficient, s.total)
        );
        for c in Condition::ALL {
            if let Some((a, b)) = s.by_condition.get(&c.to_string()) {
                let _ = writeln!(out, "  {c}: {a} of {b} ({})", percent(*a, *b));
            }
        }
        if s.inconsistent > 0 {
            let _ = writeln!(out, "  {} traces contradict every structure with positive weight", s.inconsistent);
        }
    }
    match (r.tpr, r.fpr) {
        (Some(t), Some(f)) => {
            let _ = writeln!(out, "blicket judgments: TPR {t:.2}  FPR {f:.2}");
        }
        _ => {
            let _ = writeln!(out, "blicket judgments: undefined (not enough judgments)");
        }
    }
    let _ = writeln!(out, "tried different orders: {} of {}", r.order_variation, r.traces);
    let _ = writeln!(out, "checked the empty detector: {} of {}", r.empty_check, r.traces);
    out
}

pub fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = glob::glob(pattern)?.collect::<Result<_, _>>()?;
    files.sort();
    Ok(files)
}
