//! Line-oriented serialization of proof traces.
//!
//! A trace file holds one `goal` line and one line per step:
//!
//! ```text
//! # rankprover trace v1
//! goal 7 3
//! 1 HYP 5 lo 2 - -
//! 12 MONO_LO 15 lo 3 11:lo:4 11
//! 15 SUBMOD_LO 7 lo 3 15:lo:12,5:lo:1,13:hi:3 7,13
//! ```
//!
//! Columns: step id, rule, target mask, bound, value, premises, operand
//! masks. A premise is `mask:bound:source` with source `d` for a bound
//! still at its default or the id of the step that established it. `-`
//! marks an empty list. `#` starts a comment.

use thiserror::Error;

use crate::emitter::ProofTrace;
use crate::engine::RuleId;
use crate::geom::{BoundKind, DeductionStep, PointSet, Premise, PremiseSource, RankStatement};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("trace line {line}: {message}")]
pub struct TraceFileError {
    pub line: usize,
    pub message: String,
}

fn bound_token(bound: BoundKind) -> &'static str {
    match bound {
        BoundKind::Lo => "lo",
        BoundKind::Hi => "hi",
    }
}

/// Renders a trace in the line format above.
pub fn write_trace(trace: &ProofTrace) -> String {
    let mut out = String::from("# rankprover trace v1\n");
    out.push_str(&format!("goal {} {}\n", trace.goal.set.bits(), trace.goal.rank));
    for step in &trace.steps {
        let premises = if step.premises.is_empty() {
            "-".to_string()
        } else {
            step.premises
                .iter()
                .map(|p| {
                    let source = match p.source {
                        PremiseSource::Default => "d".to_string(),
                        PremiseSource::Step(id) => id.to_string(),
                    };
                    format!("{}:{}:{}", p.set.bits(), bound_token(p.bound), source)
                })
                .collect::<Vec<_>>()
                .join(",")
        };
        let params = if step.params.is_empty() {
            "-".to_string()
        } else {
            step.params.iter().map(|s| s.bits().to_string()).collect::<Vec<_>>().join(",")
        };
        out.push_str(&format!(
            "{} {} {} {} {} {} {}\n",
            step.id,
            step.rule.name(),
            step.target.bits(),
            bound_token(step.bound),
            step.value,
            premises,
            params
        ));
    }
    out
}

fn parse_bound(token: &str, line: usize) -> Result<BoundKind, TraceFileError> {
    match token {
        "lo" => Ok(BoundKind::Lo),
        "hi" => Ok(BoundKind::Hi),
        other => Err(TraceFileError {
            line,
            message: format!("expected `lo` or `hi`, found {other:?}"),
        }),
    }
}

fn parse_num<T: std::str::FromStr>(token: &str, what: &str, line: usize) -> Result<T, TraceFileError> {
    token.parse().map_err(|_| TraceFileError {
        line,
        message: format!("invalid {what} {token:?}"),
    })
}

/// Parses the line format back into a [`ProofTrace`]. Purely syntactic;
/// semantic validation is the certificate checker's job.
pub fn parse_trace(text: &str) -> Result<ProofTrace, TraceFileError> {
    let mut goal: Option<RankStatement> = None;
    let mut steps: Vec<DeductionStep> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "goal" {
            if goal.is_some() {
                return Err(TraceFileError {
                    line: line_no,
                    message: "duplicate goal line".to_string(),
                });
            }
            if fields.len() != 3 {
                return Err(TraceFileError {
                    line: line_no,
                    message: "goal line needs a mask and a rank".to_string(),
                });
            }
            let bits: u32 = parse_num(fields[1], "goal mask", line_no)?;
            let rank: u8 = parse_num(fields[2], "goal rank", line_no)?;
            goal = Some(RankStatement { set: PointSet::from_bits(bits), rank });
            continue;
        }
        if fields.len() != 7 {
            return Err(TraceFileError {
                line: line_no,
                message: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let id: u32 = parse_num(fields[0], "step id", line_no)?;
        let rule = RuleId::from_name(fields[1]).ok_or_else(|| TraceFileError {
            line: line_no,
            message: format!("unknown rule {:?}", fields[1]),
        })?;
        let target = PointSet::from_bits(parse_num(fields[2], "target mask", line_no)?);
        let bound = parse_bound(fields[3], line_no)?;
        let value: u8 = parse_num(fields[4], "value", line_no)?;
        let mut premises = Vec::new();
        if fields[5] != "-" {
            for chunk in fields[5].split(',') {
                let parts: Vec<&str> = chunk.split(':').collect();
                if parts.len() != 3 {
                    return Err(TraceFileError {
                        line: line_no,
                        message: format!("malformed premise {chunk:?}"),
                    });
                }
                let set = PointSet::from_bits(parse_num(parts[0], "premise mask", line_no)?);
                let bound = parse_bound(parts[1], line_no)?;
                let source = if parts[2] == "d" {
                    PremiseSource::Default
                } else {
                    PremiseSource::Step(parse_num(parts[2], "premise source", line_no)?)
                };
                premises.push(Premise { set, bound, source });
            }
        }
        let mut params = Vec::new();
        if fields[6] != "-" {
            for chunk in fields[6].split(',') {
                params.push(PointSet::from_bits(parse_num(chunk, "operand mask", line_no)?));
            }
        }
        steps.push(DeductionStep { id, rule, target, bound, value, premises, params });
    }
    let goal = goal.ok_or_else(|| TraceFileError {
        line: text.lines().count(),
        message: "missing goal line".to_string(),
    })?;
    Ok(ProofTrace { goal, steps })
}
