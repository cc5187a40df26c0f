//! Python bindings: parse, saturate, prove, check and compare against the
//! model oracle from Python.
//!
//! Build the importable module with
//! `cargo build -p rankprover-py --release --features extension-module`
//! and see `python/smoke_test.py` for usage.

// the #[pyfunction]/#[pymethods] expansions trip this lint
#![allow(clippy::useless_conversion)]

use std::collections::HashMap;
use std::time::Duration;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use rankprover_core::checker::check_trace as core_check_trace;
use rankprover_core::emitter::{emit_script, extract_trace, lemma_name};
use rankprover_core::engine::{
    saturate as core_saturate, EngineError, PairStrategy, RuleId, SaturateOptions,
    SaturationState, DEFAULT_STEP_LIMIT,
};
use rankprover_core::geom::{Configuration, PointSet, RankStatement};
use rankprover_core::goal::{match_statement as core_match_statement, parse_goal_with_dimension};
use rankprover_core::oracle::{enumerate_models, semantic_entails, SemanticVerdict};
use rankprover_core::parser::{parse_config as core_parse_config, print_config, Warning};
use rankprover_core::tracefile::{parse_trace, write_trace};

fn emit_warnings(py: Python<'_>, warnings: &[Warning]) -> PyResult<()> {
    if warnings.is_empty() {
        return Ok(());
    }
    let module = py.import_bound("warnings")?;
    for warning in warnings {
        module.call_method1("warn", (warning.to_string(),))?;
    }
    Ok(())
}

fn statement_from(cfg: &Configuration, points: Vec<String>, rank: u8) -> PyResult<RankStatement> {
    let mut set = PointSet::EMPTY;
    for name in &points {
        let index = cfg
            .point_index(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown point {name:?}")))?;
        set = set.union(PointSet::singleton(index));
    }
    Ok(RankStatement { set, rank })
}

fn names_of(cfg: &Configuration, set: PointSet) -> Vec<String> {
    set.iter().map(|i| cfg.point_name(i).to_string()).collect()
}

fn statements_out(cfg: &Configuration, statements: &[RankStatement]) -> Vec<(Vec<String>, u8)> {
    statements.iter().map(|s| (names_of(cfg, s.set), s.rank)).collect()
}

/// A point configuration with rank hypotheses and conclusions.
#[pyclass(name = "Config")]
#[derive(Clone)]
struct PyConfig {
    inner: Configuration,
}

#[pymethods]
impl PyConfig {
    /// Build a configuration from point names and (points, rank) pairs.
    #[new]
    #[pyo3(signature = (dimension, points, hypotheses, conclusions))]
    fn new(
        dimension: u8,
        points: Vec<String>,
        hypotheses: Vec<(Vec<String>, u8)>,
        conclusions: Vec<(Vec<String>, u8)>,
    ) -> PyResult<Self> {
        // two passes: the set encoding needs the point order fixed first
        let probe = Configuration::new(
            dimension,
            points.clone(),
            vec![],
            vec![RankStatement { set: PointSet::singleton(0), rank: 1 }],
        )
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let hyp: Vec<RankStatement> = hypotheses
            .into_iter()
            .map(|(names, rank)| statement_from(&probe, names, rank))
            .collect::<PyResult<_>>()?;
        let goals: Vec<RankStatement> = conclusions
            .into_iter()
            .map(|(names, rank)| statement_from(&probe, names, rank))
            .collect::<PyResult<_>>()?;
        let inner = Configuration::new(dimension, points, hyp, goals)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyConfig { inner })
    }

    #[getter]
    fn dimension(&self) -> u8 {
        self.inner.dimension()
    }

    fn points(&self) -> Vec<String> {
        self.inner.points().iter().map(|p| p.name.clone()).collect()
    }

    fn hypotheses(&self) -> Vec<(Vec<String>, u8)> {
        statements_out(&self.inner, self.inner.hypotheses())
    }

    fn conclusions(&self) -> Vec<(Vec<String>, u8)> {
        statements_out(&self.inner, self.inner.conclusions())
    }

    /// Render in the prover's input language.
    fn to_text(&self) -> String {
        print_config(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(dimension={}, points={:?}, hypotheses={}, conclusions={})",
            self.inner.dimension(),
            self.points(),
            self.inner.hypotheses().len(),
            self.inner.conclusions().len()
        )
    }
}

fn build_options(
    cfg: &Configuration,
    strategy: &str,
    step_limit: Option<u64>,
    time_limit_secs: Option<u64>,
    schedule_seed: Option<u64>,
) -> PyResult<SaturateOptions> {
    let strategy = match strategy {
        "auto" => PairStrategy::auto(cfg.point_count()),
        "full" => PairStrategy::Full,
        "adjacent" => PairStrategy::Adjacent,
        other => {
            return Err(PyValueError::new_err(format!(
                "strategy must be auto, full or adjacent, got {other:?}"
            )))
        }
    };
    Ok(SaturateOptions {
        strategy,
        step_limit: step_limit.unwrap_or(DEFAULT_STEP_LIMIT),
        time_limit: time_limit_secs.map(Duration::from_secs),
        schedule_seed,
    })
}

fn engine_err(error: EngineError) -> PyErr {
    match error {
        EngineError::Aborted { .. } => PyRuntimeError::new_err(error.to_string()),
        _ => PyValueError::new_err(error.to_string()),
    }
}

/// A saturated interval map.
#[pyclass(name = "Saturation")]
struct PySaturation {
    cfg: Configuration,
    state: SaturationState,
}

#[pymethods]
impl PySaturation {
    /// The proved `[lo, hi]` interval of a subset, given by point names.
    fn interval(&self, points: Vec<String>) -> PyResult<(u8, u8)> {
        let st = statement_from(&self.cfg, points, 1)?;
        let interval = self.state.interval(st.set);
        Ok((interval.lo, interval.hi))
    }

    fn entails(&self, points: Vec<String>, rank: u8) -> PyResult<bool> {
        let goal = statement_from(&self.cfg, points, rank)?;
        Ok(self.state.entails(goal))
    }

    fn step_count(&self) -> usize {
        self.state.steps().len()
    }

    fn stats(&self) -> HashMap<String, u64> {
        let stats = self.state.stats();
        let mut out = HashMap::new();
        out.insert("subsets".to_string(), stats.subsets);
        out.insert("steps".to_string(), stats.steps_applied());
        out.insert("instances".to_string(), stats.instances_tried);
        out.insert("wall_ms".to_string(), stats.wall.as_millis() as u64);
        for rule in RuleId::ALL {
            out.insert(format!("rule_{}", rule.name()), stats.applied(rule));
        }
        out
    }
}

/// One proved (or not) conclusion.
#[pyclass(name = "Proof")]
struct PyProof {
    #[pyo3(get)]
    goal_points: Vec<String>,
    #[pyo3(get)]
    goal_rank: u8,
    /// "proved" or "not-derivable".
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    lemma: Option<String>,
    #[pyo3(get)]
    script: Option<String>,
    #[pyo3(get)]
    trace: Option<String>,
    /// True when the independent certificate checker accepted the trace.
    #[pyo3(get)]
    checked: bool,
    /// Residual interval when not derivable.
    #[pyo3(get)]
    residual: Option<(u8, u8)>,
}

#[pymethods]
impl PyProof {
    fn __repr__(&self) -> String {
        format!(
            "Proof(goal=rk({:?})={}, status={:?}, checked={})",
            self.goal_points, self.goal_rank, self.status, self.checked
        )
    }
}

/// Parse the prover's input language.
#[pyfunction]
fn parse_config(py: Python<'_>, text: &str) -> PyResult<PyConfig> {
    let outcome = core_parse_config(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    emit_warnings(py, &outcome.warnings)?;
    Ok(PyConfig { inner: outcome.config })
}

/// Parse a Coq-style lemma statement.
#[pyfunction]
#[pyo3(signature = (text, dimension = 3))]
fn parse_goal(py: Python<'_>, text: &str, dimension: u8) -> PyResult<PyConfig> {
    let outcome = parse_goal_with_dimension(text, dimension)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    emit_warnings(py, &outcome.warnings)?;
    Ok(PyConfig { inner: outcome.config })
}

/// Saturate the rank intervals of a configuration.
#[pyfunction]
#[pyo3(signature = (config, strategy = "auto", step_limit = None, time_limit_secs = None, schedule_seed = None))]
fn saturate(
    py: Python<'_>,
    config: &PyConfig,
    strategy: &str,
    step_limit: Option<u64>,
    time_limit_secs: Option<u64>,
    schedule_seed: Option<u64>,
) -> PyResult<PySaturation> {
    let options =
        build_options(&config.inner, strategy, step_limit, time_limit_secs, schedule_seed)?;
    let cfg = config.inner.clone();
    let state = py
        .allow_threads(|| core_saturate(&cfg, &options))
        .map_err(engine_err)?;
    Ok(PySaturation { cfg, state })
}

/// Prove every conclusion: saturate, extract a certificate, emit the
/// script, and re-check the certificate independently.
#[pyfunction]
#[pyo3(signature = (config, strategy = "auto", step_limit = None, time_limit_secs = None, schedule_seed = None))]
fn prove(
    py: Python<'_>,
    config: &PyConfig,
    strategy: &str,
    step_limit: Option<u64>,
    time_limit_secs: Option<u64>,
    schedule_seed: Option<u64>,
) -> PyResult<Vec<PyProof>> {
    let cfg = &config.inner;
    let options = build_options(cfg, strategy, step_limit, time_limit_secs, schedule_seed)?;
    let state = py
        .allow_threads(|| core_saturate(cfg, &options))
        .map_err(engine_err)?;
    let mut proofs = Vec::new();
    for goal in cfg.conclusions() {
        match extract_trace(&state, *goal) {
            Ok(trace) => {
                let script = emit_script(cfg, &trace);
                let checked = core_check_trace(cfg, &trace).is_accepted();
                proofs.push(PyProof {
                    goal_points: names_of(cfg, goal.set),
                    goal_rank: goal.rank,
                    status: "proved".to_string(),
                    lemma: Some(lemma_name(goal.set, cfg)),
                    script: Some(script.render()),
                    trace: Some(write_trace(&trace)),
                    checked,
                    residual: None,
                });
            }
            Err(_) => {
                let residual = state.interval(goal.set);
                proofs.push(PyProof {
                    goal_points: names_of(cfg, goal.set),
                    goal_rank: goal.rank,
                    status: "not-derivable".to_string(),
                    lemma: None,
                    script: None,
                    trace: None,
                    checked: false,
                    residual: Some((residual.lo, residual.hi)),
                });
            }
        }
    }
    Ok(proofs)
}

/// Re-verify a trace file's text against a configuration. Returns the
/// verdict as a string, "Accepted" on success.
#[pyfunction]
fn check(config: &PyConfig, trace_text: &str) -> PyResult<String> {
    let trace = parse_trace(trace_text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(core_check_trace(&config.inner, &trace).to_string())
}

/// Statement equivalence up to point renaming and clause order.
#[pyfunction]
fn match_statement(a: &PyConfig, b: &PyConfig) -> bool {
    core_match_statement(&a.inner, &b.inner)
}

/// Brute-force semantic verdict: "yes", "no" or "no-models".
#[pyfunction]
fn oracle_entails(config: &PyConfig, points: Vec<String>, rank: u8) -> PyResult<String> {
    let goal = statement_from(&config.inner, points, rank)?;
    let verdict = semantic_entails(&config.inner, goal)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(match verdict {
        SemanticVerdict::Yes => "yes".to_string(),
        SemanticVerdict::No(_) => "no".to_string(),
        SemanticVerdict::NoModels => "no-models".to_string(),
    })
}

/// Number of rank models of the hypotheses (small configurations only).
#[pyfunction]
fn count_models(config: &PyConfig) -> PyResult<usize> {
    enumerate_models(&config.inner)
        .map(|models| models.len())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn rankprover_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PySaturation>()?;
    m.add_class::<PyProof>()?;
    m.add_function(wrap_pyfunction!(parse_config, m)?)?;
    m.add_function(wrap_pyfunction!(parse_goal, m)?)?;
    m.add_function(wrap_pyfunction!(saturate, m)?)?;
    m.add_function(wrap_pyfunction!(prove, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(match_statement, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_entails, m)?)?;
    m.add_function(wrap_pyfunction!(count_models, m)?)?;
    Ok(())
}
