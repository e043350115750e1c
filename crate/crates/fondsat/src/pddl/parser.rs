//! Parser for the FOND PDDL subset: :strips, :typing, :equality (static
//! use only) and :non-deterministic oneof effects nested directly under
//! the top-level `and`. Everything else is rejected with a distinct error.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum PddlError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("unsupported construct at {pos}: {what}")]
    Unsupported { pos: Pos, what: String },
    #[error("validation error: {0}")]
    Validation(String),
}

fn syntax(pos: Pos, msg: impl Into<String>) -> PddlError {
    PddlError::Syntax {
        pos,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone)]
enum SExp {
    Sym(String, Pos),
    List(Vec<SExp>, Pos),
}

impl SExp {
    fn pos(&self) -> Pos {
        match self {
            SExp::Sym(_, p) | SExp::List(_, p) => *p,
        }
    }

    fn as_sym(&self) -> Result<&str, PddlError> {
        match self {
            SExp::Sym(s, _) => Ok(s),
            SExp::List(_, p) => Err(syntax(*p, "expected a symbol, found a list")),
        }
    }

    fn as_list(&self) -> Result<&[SExp], PddlError> {
        match self {
            SExp::List(items, _) => Ok(items),
            SExp::Sym(s, p) => Err(syntax(*p, format!("expected a list, found `{}`", s))),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(String, Pos)>, PddlError> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut cur = String::new();
    let mut cur_pos = Pos { line: 1, col: 1 };
    let mut in_comment = false;
    for ch in text.chars() {
        let pos = Pos { line, col };
        if ch == '\n' {
            line += 1;
            col = 1;
            in_comment = false;
        } else {
            col += 1;
        }
        if in_comment {
            continue;
        }
        match ch {
            ';' => {
                if !cur.is_empty() {
                    tokens.push((std::mem::take(&mut cur), cur_pos));
                }
                in_comment = true;
            }
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push((std::mem::take(&mut cur), cur_pos));
                }
                tokens.push((ch.to_string(), pos));
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push((std::mem::take(&mut cur), cur_pos));
                }
            }
            c => {
                if cur.is_empty() {
                    cur_pos = pos;
                }
                cur.push(c.to_ascii_lowercase());
            }
        }
    }
    if !cur.is_empty() {
        tokens.push((cur, cur_pos));
    }
    Ok(tokens)
}

fn parse_sexp(text: &str) -> Result<SExp, PddlError> {
    let tokens = tokenize(text)?;
    let mut stack: Vec<(Vec<SExp>, Pos)> = Vec::new();
    let mut top: Option<SExp> = None;
    for (tok, pos) in tokens {
        if top.is_some() {
            return Err(syntax(pos, "trailing content after top-level form"));
        }
        match tok.as_str() {
            "(" => stack.push((Vec::new(), pos)),
            ")" => {
                let (items, open) = stack
                    .pop()
                    .ok_or_else(|| syntax(pos, "unbalanced `)`"))?;
                let exp = SExp::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(exp),
                    None => top = Some(exp),
                }
            }
            _ => {
                let exp = SExp::Sym(tok, pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(exp),
                    None => top = Some(exp),
                }
            }
        }
    }
    if let Some((_, open)) = stack.last() {
        return Err(syntax(*open, "unclosed `(`"));
    }
    top.ok_or_else(|| syntax(Pos { line: 1, col: 1 }, "empty input"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

/// Positive or negative predicate application with variable or constant
/// arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub neg: bool,
    pub pred: String,
    pub args: Vec<String>,
    pub pos: Pos,
}

/// Static (in)equality constraint between two parameters or constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqConstraint {
    pub negated: bool,
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EffectItem {
    Literal(Literal),
    /// Each arm is a conjunction of literals.
    Oneof(Vec<Vec<Literal>>),
}

#[derive(Debug, Clone)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub pre: Vec<Literal>,
    pub eq_constraints: Vec<EqConstraint>,
    pub effect: Vec<EffectItem>,
}

#[derive(Debug, Clone)]
pub struct Predicate {
    pub name: String,
    pub params: Vec<TypedName>,
}

#[derive(Debug, Clone)]
pub struct DomainAst {
    pub name: String,
    /// (type, supertype) pairs; "object" is the implicit root.
    pub types: Vec<(String, String)>,
    pub predicates: Vec<Predicate>,
    pub actions: Vec<ActionSchema>,
}

#[derive(Debug, Clone)]
pub struct GroundAtom {
    pub pred: String,
    pub args: Vec<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct ProblemAst {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedName>,
    pub init: Vec<GroundAtom>,
    pub goal: Vec<GroundAtom>,
    /// Schema names whose ground actions are unfair (dual mode).
    pub unfair: Vec<String>,
}

const SUPPORTED_REQUIREMENTS: &[&str] =
    &[":strips", ":typing", ":equality", ":non-deterministic"];

/// Parses `?x ?y - t ?z - u` style typed lists; untyped names get `object`.
fn parse_typed_list(items: &[SExp]) -> Result<Vec<TypedName>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sym = items[i].as_sym()?;
        if sym == "-" {
            i += 1;
            let ty = items
                .get(i)
                .ok_or_else(|| syntax(items[i - 1].pos(), "type name missing after `-`"))?
                .as_sym()?;
            for name in pending.drain(..) {
                out.push(TypedName {
                    name,
                    ty: ty.to_string(),
                });
            }
        } else {
            pending.push(sym.to_string());
        }
        i += 1;
    }
    for name in pending {
        out.push(TypedName {
            name,
            ty: "object".to_string(),
        });
    }
    Ok(out)
}

fn parse_atom(exp: &SExp) -> Result<Literal, PddlError> {
    let items = exp.as_list()?;
    if items.is_empty() {
        return Err(syntax(exp.pos(), "empty atom"));
    }
    let pred = items[0].as_sym()?.to_string();
    let args = items[1..]
        .iter()
        .map(|a| a.as_sym().map(str::to_string))
        .collect::<Result<_, _>>()?;
    Ok(Literal {
        neg: false,
        pred,
        args,
        pos: exp.pos(),
    })
}

fn parse_literal(exp: &SExp) -> Result<Literal, PddlError> {
    let items = exp.as_list()?;
    if items.first().and_then(|h| h.as_sym().ok()) == Some("not") {
        if items.len() != 2 {
            return Err(syntax(exp.pos(), "`not` takes exactly one atom"));
        }
        let mut lit = parse_atom(&items[1])?;
        lit.neg = true;
        Ok(lit)
    } else {
        parse_atom(exp)
    }
}

fn head(exp: &SExp) -> Option<&str> {
    exp.as_list().ok()?.first()?.as_sym().ok()
}

/// Precondition: a single atom, an equality constraint, or an `and` of
/// those. Negation is only allowed on `=`.
fn parse_precondition(
    exp: &SExp,
) -> Result<(Vec<Literal>, Vec<EqConstraint>), PddlError> {
    let mut pre = Vec::new();
    let mut eqs = Vec::new();
    let conjuncts: Vec<&SExp> = if head(exp) == Some("and") {
        exp.as_list()?[1..].iter().collect()
    } else {
        vec![exp]
    };
    for c in conjuncts {
        match head(c) {
            Some("=") => {
                let items = c.as_list()?;
                if items.len() != 3 {
                    return Err(syntax(c.pos(), "`=` takes two arguments"));
                }
                eqs.push(EqConstraint {
                    negated: false,
                    a: items[1].as_sym()?.to_string(),
                    b: items[2].as_sym()?.to_string(),
                });
            }
            Some("not") => {
                let inner = &c.as_list()?[1..];
                if inner.len() == 1 && head(&inner[0]) == Some("=") {
                    let items = inner[0].as_list()?;
                    if items.len() != 3 {
                        return Err(syntax(c.pos(), "`=` takes two arguments"));
                    }
                    eqs.push(EqConstraint {
                        negated: true,
                        a: items[1].as_sym()?.to_string(),
                        b: items[2].as_sym()?.to_string(),
                    });
                } else {
                    return Err(PddlError::Unsupported {
                        pos: c.pos(),
                        what: "negative precondition".to_string(),
                    });
                }
            }
            Some("or") | Some("imply") | Some("exists") | Some("forall") => {
                return Err(PddlError::Unsupported {
                    pos: c.pos(),
                    what: format!("`{}` in precondition", head(c).unwrap()),
                })
            }
            _ => pre.push(parse_atom(c)?),
        }
    }
    Ok((pre, eqs))
}

/// One oneof arm: a literal or an `and` of literals. Nested oneof is
/// rejected here.
fn parse_oneof_arm(exp: &SExp) -> Result<Vec<Literal>, PddlError> {
    match head(exp) {
        Some("oneof") => Err(PddlError::Unsupported {
            pos: exp.pos(),
            what: "nested oneof".to_string(),
        }),
        Some("and") => exp.as_list()?[1..]
            .iter()
            .map(|l| match head(l) {
                Some("oneof") => Err(PddlError::Unsupported {
                    pos: l.pos(),
                    what: "nested oneof".to_string(),
                }),
                _ => parse_literal(l),
            })
            .collect(),
        _ => Ok(vec![parse_literal(exp)?]),
    }
}

fn parse_effect(exp: &SExp) -> Result<Vec<EffectItem>, PddlError> {
    let items: Vec<&SExp> = if head(exp) == Some("and") {
        exp.as_list()?[1..].iter().collect()
    } else {
        vec![exp]
    };
    let mut out = Vec::new();
    for item in items {
        match head(item) {
            Some("oneof") => {
                let arms = item.as_list()?[1..]
                    .iter()
                    .map(parse_oneof_arm)
                    .collect::<Result<Vec<_>, _>>()?;
                if arms.is_empty() {
                    return Err(syntax(item.pos(), "oneof needs at least one arm"));
                }
                out.push(EffectItem::Oneof(arms));
            }
            Some("when") | Some("forall") => {
                return Err(PddlError::Unsupported {
                    pos: item.pos(),
                    what: format!("`{}` effect", head(item).unwrap()),
                })
            }
            _ => out.push(EffectItem::Literal(parse_literal(item)?)),
        }
    }
    Ok(out)
}

pub fn parse_domain(text: &str) -> Result<DomainAst, PddlError> {
    let top = parse_sexp(text)?;
    let items = top.as_list()?;
    if head(&top) != Some("define") {
        return Err(syntax(top.pos(), "expected `(define (domain …) …)`"));
    }
    let mut name = None;
    let mut types = Vec::new();
    let mut predicates = Vec::new();
    let mut actions = Vec::new();
    for section in &items[1..] {
        let sec = section.as_list()?;
        let kind = sec
            .first()
            .ok_or_else(|| syntax(section.pos(), "empty section"))?
            .as_sym()?;
        match kind {
            "domain" => {
                name = Some(sec[1].as_sym()?.to_string());
            }
            ":requirements" => {
                for r in &sec[1..] {
                    let r = r.as_sym()?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r) {
                        return Err(PddlError::Unsupported {
                            pos: section.pos(),
                            what: format!("requirement {}", r),
                        });
                    }
                }
            }
            ":types" => {
                let typed = parse_typed_list(&sec[1..])?;
                for t in typed {
                    types.push((t.name, t.ty));
                }
            }
            ":constants" => {
                return Err(PddlError::Unsupported {
                    pos: section.pos(),
                    what: ":constants (declare objects in the problem)".to_string(),
                })
            }
            ":predicates" => {
                for p in &sec[1..] {
                    let pl = p.as_list()?;
                    let pname = pl
                        .first()
                        .ok_or_else(|| syntax(p.pos(), "empty predicate"))?
                        .as_sym()?
                        .to_string();
                    predicates.push(Predicate {
                        name: pname,
                        params: parse_typed_list(&pl[1..])?,
                    });
                }
            }
            ":action" => {
                let aname = sec[1].as_sym()?.to_string();
                let mut params = Vec::new();
                let mut pre = Vec::new();
                let mut eq_constraints = Vec::new();
                let mut effect = Vec::new();
                let mut i = 2;
                while i < sec.len() {
                    let key = sec[i].as_sym()?;
                    let val = sec.get(i + 1).ok_or_else(|| {
                        syntax(sec[i].pos(), format!("missing value for {}", key))
                    })?;
                    match key {
                        ":parameters" => params = parse_typed_list(val.as_list()?)?,
                        ":precondition" => {
                            let (p, e) = parse_precondition(val)?;
                            pre = p;
                            eq_constraints = e;
                        }
                        ":effect" => effect = parse_effect(val)?,
                        other => {
                            return Err(PddlError::Unsupported {
                                pos: sec[i].pos(),
                                what: format!("action field {}", other),
                            })
                        }
                    }
                    i += 2;
                }
                actions.push(ActionSchema {
                    name: aname,
                    params,
                    pre,
                    eq_constraints,
                    effect,
                });
            }
            other => {
                return Err(PddlError::Unsupported {
                    pos: section.pos(),
                    what: format!("domain section {}", other),
                })
            }
        }
    }
    Ok(DomainAst {
        name: name.ok_or_else(|| PddlError::Validation("domain has no name".into()))?,
        types,
        predicates,
        actions,
    })
}

pub fn parse_problem(text: &str) -> Result<ProblemAst, PddlError> {
    let top = parse_sexp(text)?;
    let items = top.as_list()?;
    if head(&top) != Some("define") {
        return Err(syntax(top.pos(), "expected `(define (problem …) …)`"));
    }
    let mut name = None;
    let mut domain = None;
    let mut objects = Vec::new();
    let mut init = Vec::new();
    let mut goal = Vec::new();
    let mut unfair = Vec::new();
    for section in &items[1..] {
        let sec = section.as_list()?;
        let kind = sec
            .first()
            .ok_or_else(|| syntax(section.pos(), "empty section"))?
            .as_sym()?;
        match kind {
            "problem" => name = Some(sec[1].as_sym()?.to_string()),
            ":domain" => domain = Some(sec[1].as_sym()?.to_string()),
            ":requirements" => {}
            ":objects" => objects = parse_typed_list(&sec[1..])?,
            ":init" => {
                for a in &sec[1..] {
                    let lit = parse_atom(a)?;
                    init.push(GroundAtom {
                        pred: lit.pred,
                        args: lit.args,
                        pos: lit.pos,
                    });
                }
            }
            ":goal" => {
                let g = &sec[1];
                let atoms: Vec<&SExp> = if head(g) == Some("and") {
                    g.as_list()?[1..].iter().collect()
                } else {
                    vec![g]
                };
                for a in atoms {
                    if head(a) == Some("not") {
                        return Err(PddlError::Unsupported {
                            pos: a.pos(),
                            what: "negative goal".to_string(),
                        });
                    }
                    let lit = parse_atom(a)?;
                    goal.push(GroundAtom {
                        pred: lit.pred,
                        args: lit.args,
                        pos: lit.pos,
                    });
                }
            }
            ":unfair" => {
                for s in &sec[1..] {
                    unfair.push(s.as_sym()?.to_string());
                }
            }
            other => {
                return Err(PddlError::Unsupported {
                    pos: section.pos(),
                    what: format!("problem section {}", other),
                })
            }
        }
    }
    Ok(ProblemAst {
        name: name.ok_or_else(|| PddlError::Validation("problem has no name".into()))?,
        domain: domain
            .ok_or_else(|| PddlError::Validation("problem names no domain".into()))?,
        objects,
        init,
        goal,
        unfair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI_DOMAIN: &str = "
(define (domain mini)
  (:requirements :strips)
  (:predicates (p) (q))
  (:action go
    :parameters ()
    :precondition (p)
    :effect (and (q) (not (p)))))";

    #[test]
    fn minimal_domain() {
        let d = parse_domain(MINI_DOMAIN).unwrap();
        assert_eq!(d.name, "mini");
        assert_eq!(d.actions.len(), 1);
        assert_eq!(d.actions[0].pre.len(), 1);
        assert_eq!(d.actions[0].effect.len(), 2);
    }

    #[test]
    fn oneof_with_empty_arm() {
        let text = "
(define (domain flip)
  (:requirements :strips :non-deterministic)
  (:predicates (p))
  (:action toss
    :parameters ()
    :precondition (and)
    :effect (oneof (p) (and))))";
        let d = parse_domain(text).unwrap();
        let eff = &d.actions[0].effect;
        assert_eq!(eff.len(), 1);
        match &eff[0] {
            EffectItem::Oneof(arms) => {
                assert_eq!(arms.len(), 2);
                assert_eq!(arms[0].len(), 1);
                assert!(arms[1].is_empty());
            }
            _ => panic!("expected oneof"),
        }
    }

    #[test]
    fn nested_oneof_rejected() {
        let text = "
(define (domain bad)
  (:predicates (p) (q) (r))
  (:action a
    :parameters ()
    :effect (oneof (oneof (p) (q)) (r))))";
        let err = parse_domain(text).unwrap_err();
        assert!(matches!(err, PddlError::Unsupported { ref what, .. } if what == "nested oneof"));
    }

    #[test]
    fn unsupported_requirement() {
        let text = "(define (domain x) (:requirements :adl))";
        assert!(matches!(
            parse_domain(text),
            Err(PddlError::Unsupported { .. })
        ));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_domain("(define (domain x)").unwrap_err();
        match err {
            PddlError::Syntax { pos, .. } => assert_eq!(pos.line, 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn problem_with_unfair_block() {
        let text = "
(define (problem p1)
  (:domain mini)
  (:objects a b - loc)
  (:init (p))
  (:goal (and (q)))
  (:unfair adv-step))";
        let p = parse_problem(text).unwrap();
        assert_eq!(p.domain, "mini");
        assert_eq!(p.objects.len(), 2);
        assert_eq!(p.objects[0].ty, "loc");
        assert_eq!(p.unfair, vec!["adv-step"]);
    }

    #[test]
    fn typed_parameter_parsing() {
        let text = "
(define (domain t)
  (:requirements :typing :equality)
  (:types loc)
  (:predicates (at ?l - loc) (adj ?a ?b - loc))
  (:action move
    :parameters (?from ?to - loc)
    :precondition (and (at ?from) (adj ?from ?to) (not (= ?from ?to)))
    :effect (and (at ?to) (not (at ?from)))))";
        let d = parse_domain(text).unwrap();
        let a = &d.actions[0];
        assert_eq!(a.params.len(), 2);
        assert_eq!(a.params[1].ty, "loc");
        assert_eq!(a.eq_constraints.len(), 1);
        assert!(a.eq_constraints[0].negated);
    }
}
