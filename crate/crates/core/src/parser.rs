//! Parser and printer for the prover's input language.
//!
//! A document looks like:
//!
//! ```text
//! context
//!   dimension 3
//!   layers 1
//! endofcontext
//! layer 0
//!  points
//! A B C D
//!  hypotheses
//! C D : 2
//!  conclusion
//! endoflayer
//! conclusion
//! A C B : 3
//! end
//! ```
//!
//! Keywords are lowercase and case-sensitive; tokens are separated by
//! whitespace, with `:` always its own token. Layers are a legacy
//! decomposition device: every layer's points and hypotheses are merged,
//! per-layer conclusion blocks are ignored (with a warning) and the
//! trailing global conclusion block is authoritative.

use std::fmt;

use thiserror::Error;

use crate::geom::{valid_point_name, ConfigError, Configuration, PointSet, RankStatement};

/// 1-based position of a token in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub span: SourceSpan,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: warning: {}", self.span, self.message)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("expected {expected}, found {found:?}")]
    Unexpected { expected: String, found: String },
    #[error("unexpected end of input, expected {expected}")]
    Eof { expected: String },
    #[error("invalid integer {0:?}")]
    BadNumber(String),
    #[error("dimension must be 2 or 3, got {0}")]
    BadDimension(String),
    #[error("invalid point name {0:?}")]
    BadPointName(String),
    #[error("{0:?} is a reserved keyword and cannot name a point")]
    ReservedPointName(String),
    #[error("duplicate point name {0:?}")]
    DuplicatePoint(String),
    #[error("unknown point name {0:?}")]
    UnknownPoint(String),
    #[error("rank {rank} out of range: must be between 1 and {max} and at most the set size {size}")]
    RankOutOfRange { rank: u64, max: u8, size: usize },
    #[error("the same set already has rank {previous}, cannot also have rank {rank}")]
    ContradictoryHypothesis { previous: u8, rank: u8 },
    #[error(transparent)]
    Config(ConfigError),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ParseErrorKind,
}

/// A parsed configuration plus any non-fatal diagnostics.
#[derive(Debug)]
pub struct ParseOutcome {
    pub config: Configuration,
    pub warnings: Vec<Warning>,
}

pub const KEYWORDS: [&str; 10] = [
    "context",
    "dimension",
    "layers",
    "endofcontext",
    "layer",
    "points",
    "hypotheses",
    "conclusion",
    "endoflayer",
    "end",
];

/// Words that can never name a point: input-language keywords plus the
/// tokens the Coq-style statements use.
pub fn reserved_word(word: &str) -> bool {
    KEYWORDS.contains(&word)
        || matches!(word, "rk" | "nil" | "Point" | "Lemma" | "forall" | "Proof" | "Qed")
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    span: SourceSpan,
}

fn lex(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let mut start: Option<usize> = None;
        for (byte, ch) in line.char_indices() {
            if ch.is_whitespace() || ch == ':' {
                if let Some(s) = start.take() {
                    tokens.push(Token {
                        text: &line[s..byte],
                        span: SourceSpan { line: line_idx as u32 + 1, column: s as u32 + 1 },
                    });
                }
                if ch == ':' {
                    tokens.push(Token {
                        text: &line[byte..byte + 1],
                        span: SourceSpan { line: line_idx as u32 + 1, column: byte as u32 + 1 },
                    });
                }
            } else if start.is_none() {
                start = Some(byte);
            }
        }
        if let Some(s) = start {
            tokens.push(Token {
                text: &line[s..],
                span: SourceSpan { line: line_idx as u32 + 1, column: s as u32 + 1 },
            });
        }
    }
    tokens
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_span: SourceSpan,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Parser<'a> {
        let tokens = lex(text);
        let end_span = tokens
            .last()
            .map(|t| SourceSpan { line: t.span.line, column: t.span.column + t.text.len() as u32 })
            .unwrap_or(SourceSpan { line: 1, column: 1 });
        Parser { tokens, pos: 0, end_span }
    }

    fn peek(&self) -> Option<Token<'a>> {
        self.tokens.get(self.pos).copied()
    }

    fn next(&mut self, expected: &str) -> Result<Token<'a>, ParseError> {
        match self.tokens.get(self.pos) {
            Some(tok) => {
                self.pos += 1;
                Ok(*tok)
            }
            None => Err(ParseError {
                span: self.end_span,
                kind: ParseErrorKind::Eof { expected: expected.to_string() },
            }),
        }
    }

    fn expect(&mut self, keyword: &str) -> Result<Token<'a>, ParseError> {
        let tok = self.next(&format!("`{keyword}`"))?;
        if tok.text == keyword {
            Ok(tok)
        } else {
            Err(ParseError {
                span: tok.span,
                kind: ParseErrorKind::Unexpected {
                    expected: format!("`{keyword}`"),
                    found: tok.text.to_string(),
                },
            })
        }
    }

    fn integer(&mut self, what: &str) -> Result<(u64, SourceSpan), ParseError> {
        let tok = self.next(what)?;
        match tok.text.parse::<u64>() {
            Ok(v) => Ok((v, tok.span)),
            Err(_) => Err(ParseError {
                span: tok.span,
                kind: ParseErrorKind::BadNumber(tok.text.to_string()),
            }),
        }
    }
}

struct RankLine {
    set: PointSet,
    rank: u8,
    span: SourceSpan,
}

struct DocBuilder {
    dimension: u8,
    names: Vec<String>,
    hypotheses: Vec<RankLine>,
    warnings: Vec<Warning>,
}

impl DocBuilder {
    fn point_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Parses `NAME+ : INT` starting at the current token (already known
    /// to be a plain word).
    fn rank_line(&mut self, p: &mut Parser<'_>) -> Result<RankLine, ParseError> {
        let mut set = PointSet::EMPTY;
        let line_span = p.peek().expect("caller checked").span;
        loop {
            let tok = p.next("a point name or `:`")?;
            if tok.text == ":" {
                break;
            }
            let index = self.point_index(tok.text).ok_or(ParseError {
                span: tok.span,
                kind: ParseErrorKind::UnknownPoint(tok.text.to_string()),
            })?;
            if set.contains(index) {
                self.warnings.push(Warning {
                    span: tok.span,
                    message: format!("duplicate point {:?} in rank statement collapses", tok.text),
                });
            }
            set = set.union(PointSet::singleton(index));
        }
        let (rank, rank_span) = p.integer("a rank")?;
        let max = self.dimension + 1;
        if rank < 1 || rank > max as u64 || rank > set.len() as u64 {
            return Err(ParseError {
                span: rank_span,
                kind: ParseErrorKind::RankOutOfRange { rank, max, size: set.len() },
            });
        }
        Ok(RankLine { set, rank: rank as u8, span: line_span })
    }

    /// Rank lines run until the next keyword.
    fn rank_lines(&mut self, p: &mut Parser<'_>) -> Result<Vec<RankLine>, ParseError> {
        let mut lines = Vec::new();
        while let Some(tok) = p.peek() {
            if KEYWORDS.contains(&tok.text) {
                break;
            }
            lines.push(self.rank_line(p)?);
        }
        Ok(lines)
    }

    fn add_hypothesis(&mut self, line: RankLine) -> Result<(), ParseError> {
        if let Some(prev) = self.hypotheses.iter().find(|h| h.set == line.set) {
            if prev.rank != line.rank {
                return Err(ParseError {
                    span: line.span,
                    kind: ParseErrorKind::ContradictoryHypothesis {
                        previous: prev.rank,
                        rank: line.rank,
                    },
                });
            }
            return Ok(()); // identical duplicate: drop silently
        }
        self.hypotheses.push(line);
        Ok(())
    }
}

/// Parses a complete input document into a [`Configuration`].
pub fn parse_config(text: &str) -> Result<ParseOutcome, ParseError> {
    let mut p = Parser::new(text);
    p.expect("context")?;
    p.expect("dimension")?;
    let (dimension, dim_span) = p.integer("a dimension")?;
    if dimension != 2 && dimension != 3 {
        return Err(ParseError {
            span: dim_span,
            kind: ParseErrorKind::BadDimension(dimension.to_string()),
        });
    }
    p.expect("layers")?;
    let (declared_layers, _) = p.integer("a layer count")?;
    p.expect("endofcontext")?;

    let mut doc = DocBuilder {
        dimension: dimension as u8,
        names: Vec::new(),
        hypotheses: Vec::new(),
        warnings: Vec::new(),
    };

    let mut layer_blocks = 0u32;
    loop {
        match p.peek() {
            Some(tok) if tok.text == "layer" => {}
            Some(tok) if layer_blocks == 0 => {
                return Err(ParseError {
                    span: tok.span,
                    kind: ParseErrorKind::Unexpected {
                        expected: "`layer`".to_string(),
                        found: tok.text.to_string(),
                    },
                });
            }
            Some(_) => break,
            None => {
                return Err(ParseError {
                    span: p.end_span,
                    kind: ParseErrorKind::Eof {
                        expected: if layer_blocks == 0 { "`layer`" } else { "`conclusion`" }
                            .to_string(),
                    },
                });
            }
        }
        p.expect("layer")?;
        layer_blocks += 1;
        p.integer("a layer number")?;
        p.expect("points")?;
        while let Some(tok) = p.peek() {
            if KEYWORDS.contains(&tok.text) {
                break;
            }
            p.next("a point name")?;
            if !valid_point_name(tok.text) {
                return Err(ParseError {
                    span: tok.span,
                    kind: ParseErrorKind::BadPointName(tok.text.to_string()),
                });
            }
            if reserved_word(tok.text) {
                return Err(ParseError {
                    span: tok.span,
                    kind: ParseErrorKind::ReservedPointName(tok.text.to_string()),
                });
            }
            if doc.point_index(tok.text).is_some() {
                return Err(ParseError {
                    span: tok.span,
                    kind: ParseErrorKind::DuplicatePoint(tok.text.to_string()),
                });
            }
            if doc.names.len() == crate::geom::MAX_POINTS {
                return Err(ParseError {
                    span: tok.span,
                    kind: ParseErrorKind::Config(ConfigError::TooManyPoints(doc.names.len() + 1)),
                });
            }
            doc.names.push(tok.text.to_string());
        }
        p.expect("hypotheses")?;
        let hyp_lines = doc.rank_lines(&mut p)?;
        for line in hyp_lines {
            doc.add_hypothesis(line)?;
        }
        let conclusion_tok = p.expect("conclusion")?;
        let layer_conclusions = doc.rank_lines(&mut p)?;
        if !layer_conclusions.is_empty() {
            doc.warnings.push(Warning {
                span: conclusion_tok.span,
                message: "per-layer conclusion block is ignored; the global conclusion after \
                          the layers is authoritative"
                    .to_string(),
            });
        }
        p.expect("endoflayer")?;
    }

    p.expect("conclusion")?;
    let conclusion_lines = doc.rank_lines(&mut p)?;
    if conclusion_lines.is_empty() {
        let span = p.peek().map(|t| t.span).unwrap_or(p.end_span);
        return Err(ParseError {
            span,
            kind: ParseErrorKind::Config(ConfigError::NoConclusion),
        });
    }
    p.expect("end")?;
    if let Some(tok) = p.peek() {
        return Err(ParseError {
            span: tok.span,
            kind: ParseErrorKind::Unexpected {
                expected: "end of input".to_string(),
                found: tok.text.to_string(),
            },
        });
    }

    let hypotheses: Vec<RankStatement> =
        doc.hypotheses.iter().map(|l| RankStatement { set: l.set, rank: l.rank }).collect();
    let conclusions: Vec<RankStatement> =
        conclusion_lines.iter().map(|l| RankStatement { set: l.set, rank: l.rank }).collect();
    let mut config = Configuration::new(dimension as u8, doc.names, hypotheses, conclusions)
        .map_err(|e| ParseError {
            span: SourceSpan { line: 1, column: 1 },
            kind: ParseErrorKind::Config(e),
        })?;
    config.set_layer_count(declared_layers.min(u32::MAX as u64) as u32);
    Ok(ParseOutcome { config, warnings: doc.warnings })
}

fn write_rank_line(out: &mut String, cfg: &Configuration, st: &RankStatement) {
    let names: Vec<&str> = st.set.iter().map(|i| cfg.point_name(i)).collect();
    out.push_str(&names.join(" "));
    out.push_str(&format!(" : {}\n", st.rank));
}

/// Prints a configuration as a single-layer document that re-parses to a
/// semantically equal configuration: points in introduction order,
/// hypotheses in ascending bitmask order.
pub fn print_config(cfg: &Configuration) -> String {
    let mut out = String::new();
    out.push_str("context\n");
    out.push_str(&format!("  dimension {}\n", cfg.dimension()));
    out.push_str("  layers 1\n");
    out.push_str("endofcontext\n");
    out.push_str("layer 0\n");
    out.push_str(" points\n");
    let names: Vec<&str> = cfg.points().iter().map(|p| p.name.as_str()).collect();
    out.push_str(&names.join(" "));
    out.push('\n');
    out.push_str(" hypotheses\n");
    let mut hyps = cfg.hypotheses().to_vec();
    hyps.sort_by_key(|h| h.set.bits());
    for hyp in &hyps {
        write_rank_line(&mut out, cfg, hyp);
    }
    out.push_str(" conclusion\n");
    out.push_str("endoflayer\n");
    out.push_str("conclusion\n");
    for goal in cfg.conclusions() {
        write_rank_line(&mut out, cfg, goal);
    }
    out.push_str("end\n");
    out
}

/// Semantic configuration equality: same dimension, same points in the
/// same order, same hypothesis and conclusion sets. The parsed layer
/// count is presentation detail and does not participate.
pub fn semantically_equal(a: &Configuration, b: &Configuration) -> bool {
    let key = |cfg: &Configuration| {
        let mut hyps: Vec<(u32, u8)> = cfg.hypotheses().iter().map(|h| (h.set.bits(), h.rank)).collect();
        hyps.sort_unstable();
        let mut goals: Vec<(u32, u8)> = cfg.conclusions().iter().map(|c| (c.set.bits(), c.rank)).collect();
        goals.sort_unstable();
        (hyps, goals)
    };
    a.dimension() == b.dimension()
        && a.points().iter().map(|p| &p.name).eq(b.points().iter().map(|p| &p.name))
        && key(a) == key(b)
}
