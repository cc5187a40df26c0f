//! Translates a Coq-style lemma statement into a [`Configuration`].
//!
//! Mirrors how the prover's frontend harvests a goal: every binder of type
//! `Point` becomes a point (in binder order), every `rk(...) = k` clause
//! before the final arrow becomes a hypothesis, the last one becomes the
//! conclusion, and any other clause is dropped with a warning.

use thiserror::Error;

use crate::geom::{valid_point_name, ConfigError, Configuration, PointSet, RankStatement};
use crate::parser::{reserved_word, SourceSpan, Warning};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GoalErrorKind {
    #[error("expected {expected}, found {found:?}")]
    Unexpected { expected: String, found: String },
    #[error("unexpected end of input, expected {expected}")]
    Eof { expected: String },
    #[error("the statement binds no points")]
    NoPointBinders,
    #[error("invalid point binder {0:?}")]
    BadBinder(String),
    #[error("duplicate point binder {0:?}")]
    DuplicateBinder(String),
    #[error("unknown identifier {0:?} inside rk(...)")]
    UnknownIdentifier(String),
    #[error("invalid rank {0:?}")]
    BadNumber(String),
    #[error("the statement does not end with a rank equality conclusion")]
    NoFinalRankEquality,
    #[error(transparent)]
    Config(ConfigError),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{span}: {kind}")]
pub struct GoalError {
    pub span: SourceSpan,
    pub kind: GoalErrorKind,
}

#[derive(Debug)]
pub struct GoalOutcome {
    pub config: Configuration,
    /// The name after `Lemma` in the source text.
    pub lemma_name: String,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    span: SourceSpan,
}

fn lex(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let line_no = line_idx as u32 + 1;
        let mut chars = line.char_indices().peekable();
        while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
                continue;
            }
            let span = SourceSpan { line: line_no, column: i as u32 + 1 };
            if c.is_ascii_alphanumeric() || c == '_' {
                let start = i;
                let mut end = i;
                while let Some(&(j, cj)) = chars.peek() {
                    if cj.is_ascii_alphanumeric() || cj == '_' {
                        end = j + cj.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push(Token { text: &line[start..end], span });
            } else {
                // get() rejects non-boundary ranges, so multi-byte input
                // falls through to the single-char case
                let two = line.get(i..i + 2).unwrap_or("");
                if matches!(two, "::" | "->" | "<>") {
                    tokens.push(Token { text: two, span });
                    chars.next();
                    chars.next();
                } else {
                    tokens.push(Token { text: &line[i..i + c.len_utf8()], span });
                    chars.next();
                }
            }
        }
    }
    tokens
}

struct GoalParser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_span: SourceSpan,
    warnings: Vec<Warning>,
}

impl<'a> GoalParser<'a> {
    fn peek(&self) -> Option<Token<'a>> {
        self.tokens.get(self.pos).copied()
    }

    fn next(&mut self, expected: &str) -> Result<Token<'a>, GoalError> {
        match self.tokens.get(self.pos) {
            Some(tok) => {
                self.pos += 1;
                Ok(*tok)
            }
            None => Err(GoalError {
                span: self.end_span,
                kind: GoalErrorKind::Eof { expected: expected.to_string() },
            }),
        }
    }

    fn expect(&mut self, text: &str) -> Result<Token<'a>, GoalError> {
        let tok = self.next(&format!("`{text}`"))?;
        if tok.text == text {
            Ok(tok)
        } else {
            Err(GoalError {
                span: tok.span,
                kind: GoalErrorKind::Unexpected {
                    expected: format!("`{text}`"),
                    found: tok.text.to_string(),
                },
            })
        }
    }

    /// `rk ( NAME :: ... :: nil ) = INT`, resolving names to indices.
    fn rank_clause(&mut self, points: &[String]) -> Result<RankStatement, GoalError> {
        self.expect("rk")?;
        self.expect("(")?;
        let mut set = PointSet::EMPTY;
        loop {
            let tok = self.next("a point name or `nil`")?;
            if tok.text == "nil" {
                break;
            }
            let index = points.iter().position(|p| p == tok.text).ok_or(GoalError {
                span: tok.span,
                kind: GoalErrorKind::UnknownIdentifier(tok.text.to_string()),
            })?;
            if set.contains(index) {
                self.warnings.push(Warning {
                    span: tok.span,
                    message: format!("duplicate point {:?} in rk(...) collapses", tok.text),
                });
            }
            set = set.union(PointSet::singleton(index));
            let sep = self.next("`::`")?;
            if sep.text != "::" {
                return Err(GoalError {
                    span: sep.span,
                    kind: GoalErrorKind::Unexpected {
                        expected: "`::`".to_string(),
                        found: sep.text.to_string(),
                    },
                });
            }
        }
        self.expect(")")?;
        self.expect("=")?;
        let tok = self.next("a rank")?;
        let rank: u8 = tok.text.parse().map_err(|_| GoalError {
            span: tok.span,
            kind: GoalErrorKind::BadNumber(tok.text.to_string()),
        })?;
        Ok(RankStatement { set, rank })
    }

    /// Skips a non-rank clause up to its trailing `->`. Reaching the final
    /// `.` means the conclusion was not a rank equality.
    fn skip_clause(&mut self) -> Result<(), GoalError> {
        let start = self.peek().map(|t| t.span).unwrap_or(self.end_span);
        let mut depth = 0i32;
        loop {
            let tok = self.next("`->` or `.`")?;
            match tok.text {
                "(" => depth += 1,
                ")" => depth -= 1,
                "->" if depth == 0 => {
                    self.warnings.push(Warning {
                        span: start,
                        message: "clause is not a rank equality and was dropped".to_string(),
                    });
                    return Ok(());
                }
                "." if depth == 0 => {
                    return Err(GoalError {
                        span: tok.span,
                        kind: GoalErrorKind::NoFinalRankEquality,
                    });
                }
                _ => {}
            }
        }
    }
}

/// Parses a lemma statement with the default ambient dimension of 3.
pub fn parse_goal(text: &str) -> Result<GoalOutcome, GoalError> {
    parse_goal_with_dimension(text, 3)
}

/// Parses `Lemma NAME : forall P1 ... Pn : Point, <clauses>.` where the
/// clauses are `rk(...) = k ->` chains ending in a final `rk(...) = k`.
/// The `: Point` annotation may be omitted, as the generated scripts do.
/// Text after the statement's closing `.` (a `Proof.`, say) is ignored.
pub fn parse_goal_with_dimension(text: &str, dimension: u8) -> Result<GoalOutcome, GoalError> {
    let tokens = lex(text);
    let end_span = tokens
        .last()
        .map(|t| SourceSpan { line: t.span.line, column: t.span.column + t.text.len() as u32 })
        .unwrap_or(SourceSpan { line: 1, column: 1 });
    let mut p = GoalParser { tokens, pos: 0, end_span, warnings: Vec::new() };

    p.expect("Lemma")?;
    let lemma_name = p.next("a lemma name")?.text.to_string();
    p.expect(":")?;
    p.expect("forall")?;

    let mut points: Vec<String> = Vec::new();
    loop {
        let tok = p.next("a point binder, `:` or `,`")?;
        match tok.text {
            ":" => {
                p.expect("Point")?;
                p.expect(",")?;
                break;
            }
            "," => break,
            name => {
                if !valid_point_name(name) || reserved_word(name) {
                    return Err(GoalError {
                        span: tok.span,
                        kind: GoalErrorKind::BadBinder(name.to_string()),
                    });
                }
                if points.iter().any(|p| p == name) {
                    return Err(GoalError {
                        span: tok.span,
                        kind: GoalErrorKind::DuplicateBinder(name.to_string()),
                    });
                }
                points.push(name.to_string());
            }
        }
    }
    if points.is_empty() {
        return Err(GoalError { span: end_span, kind: GoalErrorKind::NoPointBinders });
    }

    let mut clauses: Vec<RankStatement> = Vec::new();
    loop {
        match p.peek() {
            Some(tok) if tok.text == "rk" => {
                let clause_span = tok.span;
                let clause = p.rank_clause(&points)?;
                if clause.set.is_empty() {
                    return Err(GoalError {
                        span: clause_span,
                        kind: GoalErrorKind::Config(ConfigError::EmptySet("rank statement")),
                    });
                }
                let tok = p.next("`->` or `.`")?;
                match tok.text {
                    "->" => clauses.push(clause),
                    "." => {
                        let config =
                            Configuration::new(dimension, points, clauses, vec![clause])
                                .map_err(|e| GoalError {
                                    span: clause_span,
                                    kind: GoalErrorKind::Config(e),
                                })?;
                        return Ok(GoalOutcome { config, lemma_name, warnings: p.warnings });
                    }
                    other => {
                        return Err(GoalError {
                            span: tok.span,
                            kind: GoalErrorKind::Unexpected {
                                expected: "`->` or `.`".to_string(),
                                found: other.to_string(),
                            },
                        });
                    }
                }
            }
            Some(_) => p.skip_clause()?,
            None => {
                return Err(GoalError {
                    span: p.end_span,
                    kind: GoalErrorKind::Eof { expected: "a rank equality clause".to_string() },
                });
            }
        }
    }
}

/// True iff two configurations state the same theorem up to point
/// renaming and clause order: same point count, same hypothesis and
/// conclusion sets over point indices.
pub fn match_statement(goal: &Configuration, proved: &Configuration) -> bool {
    let key = |cfg: &Configuration| {
        let mut hyps: Vec<(u32, u8)> =
            cfg.hypotheses().iter().map(|h| (h.set.bits(), h.rank)).collect();
        hyps.sort_unstable();
        let mut goals: Vec<(u32, u8)> =
            cfg.conclusions().iter().map(|c| (c.set.bits(), c.rank)).collect();
        goals.sort_unstable();
        (hyps, goals)
    };
    goal.point_count() == proved.point_count() && key(goal) == key(proved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{ex2_config, mask, stmt};

    pub const FIG2_LEMMA: &str = "\
Lemma ex2 :
    forall A B C D:Point,
    rk(A :: D :: B :: nil) = 3 ->
    rk(A :: C :: D :: nil) = 2 ->
    rk(C :: A :: nil) = 2 ->
    rk(C :: D :: nil) = 2 ->
    rk(A :: C :: B :: nil) = 3.
Proof.
";

    #[test]
    fn parses_the_reference_lemma() {
        let outcome = parse_goal(FIG2_LEMMA).unwrap();
        assert_eq!(outcome.lemma_name, "ex2");
        let cfg = &outcome.config;
        assert_eq!(cfg.point_count(), 4);
        assert_eq!(cfg.dimension(), 3);
        assert_eq!(cfg.hypothesis_rank(mask(0b1011)), Some(3));
        assert_eq!(cfg.hypothesis_rank(mask(0b1101)), Some(2));
        assert_eq!(cfg.hypothesis_rank(mask(0b0101)), Some(2));
        assert_eq!(cfg.hypothesis_rank(mask(0b1100)), Some(2));
        assert_eq!(cfg.conclusions(), &[stmt(0b0111, 3)]);
        assert!(match_statement(cfg, &ex2_config()));
    }

    #[test]
    fn parses_a_single_point_lemma() {
        let outcome = parse_goal("Lemma t : forall A : Point, rk(A :: nil) = 1.").unwrap();
        assert_eq!(outcome.config.point_count(), 1);
        assert!(outcome.config.hypotheses().is_empty());
        assert_eq!(outcome.config.conclusions(), &[stmt(0b1, 1)]);
    }

    #[test]
    fn non_rank_clauses_are_dropped_with_a_warning() {
        let text = "Lemma t : forall A B C D : Point, rk(A :: D :: B :: nil) = 3 -> A <> B -> \
                    rk(A :: C :: D :: nil) = 2 -> rk(C :: A :: nil) = 2 -> \
                    rk(C :: D :: nil) = 2 -> rk(A :: C :: B :: nil) = 3.";
        let outcome = parse_goal(text).unwrap();
        assert!(match_statement(&outcome.config, &ex2_config()));
        assert_eq!(outcome.warnings.len(), 1);
        assert!(outcome.warnings[0].message.contains("dropped"));
    }

    #[test]
    fn statement_parsing_ignores_layout() {
        let flat = FIG2_LEMMA.split_whitespace().collect::<Vec<_>>().join(" ");
        let a = parse_goal(FIG2_LEMMA).unwrap();
        let b = parse_goal(&flat).unwrap();
        assert!(match_statement(&a.config, &b.config));
    }

    #[test]
    fn binderless_annotation_is_accepted() {
        // the generated scripts write `forall A B C D ,` with no type
        let outcome =
            parse_goal("Lemma LA : forall A B , rk(A :: B :: nil) = 2 -> rk(A :: nil) = 1.")
                .unwrap();
        assert_eq!(outcome.config.point_count(), 2);
        assert_eq!(outcome.config.hypotheses().len(), 1);
    }

    #[test]
    fn rejects_malformed_statements() {
        assert_eq!(
            parse_goal("Lemma t : forall : Point, rk(A :: nil) = 1.").unwrap_err().kind,
            GoalErrorKind::NoPointBinders
        );
        assert_eq!(
            parse_goal("Lemma t : forall A : Point, A <> A.").unwrap_err().kind,
            GoalErrorKind::NoFinalRankEquality
        );
        assert_eq!(
            parse_goal("Lemma t : forall A : Point, rk(B :: nil) = 1.").unwrap_err().kind,
            GoalErrorKind::UnknownIdentifier("B".to_string())
        );
        assert!(parse_goal("").is_err());
    }

    #[test]
    fn lexer_survives_arbitrary_text() {
        let samples = [
            "€€€ :: -> ężż",
            "Lemma t\u{0301} : forall ∀ : Point, rk(é :: nil) = 1.",
            "Lemma € : forall A : Point, rk(A :: nil) = 1.",
            ":::::",
            "\u{10FFFF}\u{10FFFF}",
        ];
        for s in samples {
            let _ = parse_goal(s);
        }
    }

    #[test]
    fn match_statement_is_reflexive_symmetric_and_rank_sensitive() {
        let a = ex2_config();
        assert!(match_statement(&a, &a));
        let weaker = Configuration::new(
            3,
            vec!["A".into(), "B".into(), "C".into(), "D".into()],
            a.hypotheses().to_vec(),
            vec![stmt(0b0111, 2)],
        )
        .unwrap();
        assert!(!match_statement(&a, &weaker));
        assert!(!match_statement(&weaker, &a));
    }
}
