//! Line-oriented grounded interchange format:
//!
//! ```text
//! fond 1
//! atoms N
//! <atom name>            (N lines)
//! init i j k…
//! goal i j…
//! group NAME fair|unfair K
//! outcome BASE#x pre(i…) add(i…) del(i…)   (K lines per group)
//! ```
//!
//! Names must not contain whitespace. `load(write(P))` is structurally
//! identical to `P`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Fairness, FondProblem, ModelError, OutcomeSpec};

#[derive(Debug, Error)]
pub enum GroundedError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Model {
        line: usize,
        source: ModelError,
    },
}

fn err(line: usize, msg: impl Into<String>) -> GroundedError {
    GroundedError::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn write_grounded(p: &FondProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "fond 1");
    let _ = writeln!(out, "atoms {}", p.atoms.len());
    for a in &p.atoms {
        let _ = writeln!(out, "{}", a.name);
    }
    let ids = |s: &crate::model::State| {
        s.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "init {}", ids(&p.init));
    let _ = writeln!(out, "goal {}", ids(&p.goal));
    for g in &p.groups {
        let fair = match g.fairness {
            Fairness::Fair => "fair",
            Fairness::Unfair => "unfair",
        };
        let _ = writeln!(out, "group {} {} {}", g.name, fair, g.outcomes.len());
        for &oid in &g.outcomes {
            let o = &p.outcomes[oid];
            let _ = writeln!(
                out,
                "outcome {} pre({}) add({}) del({})",
                o.group_name,
                ids(&o.pre),
                ids(&o.add),
                ids(&o.del)
            );
        }
    }
    out
}

/// Extracts the id list of `key(…)` from an outcome line tail; ids may be
/// space separated, so sections are delimited by the parens, not tokens.
fn parse_ids(rest: &str, line: usize, key: &str) -> Result<Vec<usize>, GroundedError> {
    let marker = format!("{}(", key);
    let start = rest
        .find(&marker)
        .ok_or_else(|| err(line, format!("missing `{}(…)`", key)))?
        + marker.len();
    let end = rest[start..]
        .find(')')
        .ok_or_else(|| err(line, format!("unclosed `{}(…)`", key)))?
        + start;
    rest[start..end]
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| err(line, format!("bad atom id `{}`", t)))
        })
        .collect()
}

pub fn load_grounded(text: &str) -> Result<FondProblem, GroundedError> {
    // outcome lines use parenthesized id lists, so split on known markers
    // instead of plain whitespace where needed
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut fond = FondProblem::new();

    let (ln, header) = lines.next().ok_or_else(|| err(0, "empty file"))?;
    if header != "fond 1" {
        return Err(err(ln, format!("expected `fond 1`, got `{}`", header)));
    }
    let (ln, atoms_line) = lines.next().ok_or_else(|| err(ln, "missing `atoms N`"))?;
    let n: usize = atoms_line
        .strip_prefix("atoms ")
        .and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| err(ln, "expected `atoms N`"))?;
    for _ in 0..n {
        let (ln, name) = lines.next().ok_or_else(|| err(ln, "missing atom name"))?;
        fond.add_atom(name)
            .map_err(|source| GroundedError::Model { line: ln, source })?;
    }

    let (ln, init_line) = lines.next().ok_or_else(|| err(ln, "missing `init`"))?;
    let init = init_line
        .strip_prefix("init")
        .ok_or_else(|| err(ln, "expected `init`"))?;
    let init_ids: Vec<usize> = init
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(ln, format!("bad id `{}`", t))))
        .collect::<Result<_, _>>()?;
    fond.set_init(init_ids)
        .map_err(|source| GroundedError::Model { line: ln, source })?;

    let (ln, goal_line) = lines.next().ok_or_else(|| err(ln, "missing `goal`"))?;
    let goal = goal_line
        .strip_prefix("goal")
        .ok_or_else(|| err(ln, "expected `goal`"))?;
    let goal_ids: Vec<usize> = goal
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(ln, format!("bad id `{}`", t))))
        .collect::<Result<_, _>>()?;
    fond.set_goal(goal_ids)
        .map_err(|source| GroundedError::Model { line: ln, source })?;

    let mut last_ln;
    while let Some((ln, line)) = lines.next() {
        last_ln = ln;
        let mut toks = line.split_whitespace();
        if toks.next() != Some("group") {
            return Err(err(ln, format!("expected `group`, got `{}`", line)));
        }
        let gname = toks.next().ok_or_else(|| err(ln, "missing group name"))?;
        let fairness = match toks.next() {
            Some("fair") => Fairness::Fair,
            Some("unfair") => Fairness::Unfair,
            other => {
                return Err(err(
                    ln,
                    format!("expected fair|unfair, got `{}`", other.unwrap_or("")),
                ))
            }
        };
        let count: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(ln, "missing outcome count"))?;
        let mut specs = Vec::with_capacity(count);
        let mut basename: Option<String> = None;
        for _ in 0..count {
            let (oln, oline) = lines
                .next()
                .ok_or_else(|| err(last_ln, "missing outcome line"))?;
            last_ln = oln;
            let mut toks = oline.split_whitespace();
            if toks.next() != Some("outcome") {
                return Err(err(oln, format!("expected `outcome`, got `{}`", oline)));
            }
            let oname = toks.next().ok_or_else(|| err(oln, "missing outcome name"))?;
            let base = oname
                .rsplit_once('#')
                .map(|(b, _)| b.to_string())
                .ok_or_else(|| err(oln, format!("outcome name `{}` lacks `#`", oname)))?;
            match &basename {
                None => basename = Some(base),
                Some(prev) if *prev == base => {}
                Some(prev) => {
                    return Err(err(
                        oln,
                        format!("outcome base `{}` differs from `{}`", base, prev),
                    ))
                }
            }
            let rest = oline
                .splitn(3, ' ')
                .nth(2)
                .ok_or_else(|| err(oln, "expected pre(…) add(…) del(…)"))?;
            specs.push(OutcomeSpec {
                pre: parse_ids(rest, oln, "pre")?,
                add: parse_ids(rest, oln, "add")?,
                del: parse_ids(rest, oln, "del")?,
            });
        }
        let basename = basename.ok_or_else(|| err(ln, "group with no outcomes"))?;
        fond.add_group_with_basename(gname, basename, fairness, specs)
            .map_err(|source| GroundedError::Model { line: ln, source })?;
    }
    Ok(fond)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FondProblem {
        let mut p = FondProblem::new();
        let a = p.add_atom("at(l0)").unwrap();
        let b = p.add_atom("at(l1)").unwrap();
        let flat = p.add_atom("flat").unwrap();
        p.set_init([a]).unwrap();
        p.set_goal([b]).unwrap();
        p.add_group_with_basename(
            "drive(l0,l1)",
            "drive",
            Fairness::Fair,
            vec![
                OutcomeSpec {
                    pre: vec![a],
                    add: vec![b],
                    del: vec![a],
                },
                OutcomeSpec {
                    pre: vec![a],
                    add: vec![b, flat],
                    del: vec![a],
                },
            ],
        )
        .unwrap();
        p.add_group("patch", Fairness::Unfair, vec![OutcomeSpec {
            pre: vec![flat],
            add: vec![],
            del: vec![flat],
        }])
        .unwrap();
        p
    }

    #[test]
    fn round_trip_identity() {
        let p = sample();
        let text = write_grounded(&p);
        let q = load_grounded(&text).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn empty_goal_round_trips() {
        let mut p = FondProblem::new();
        p.add_atom("x").unwrap();
        let q = load_grounded(&write_grounded(&p)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn goal_id_out_of_range() {
        let text = "fond 1\natoms 1\np\ninit\ngoal 5\n";
        assert!(matches!(
            load_grounded(text),
            Err(GroundedError::Model { line: 5, .. })
        ));
    }

    #[test]
    fn malformed_outcome_line() {
        let text = "fond 1\natoms 1\np\ninit\ngoal 0\ngroup a fair 1\noutcome a#1 pre() add(0\n";
        match load_grounded(text) {
            Err(GroundedError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_header() {
        assert!(matches!(
            load_grounded("fnord 2\n"),
            Err(GroundedError::Parse { line: 1, .. })
        ));
    }
}
