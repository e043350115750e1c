//! Grounds a parsed domain/problem pair into a [`FondProblem`]. Atoms are
//! the full typed enumeration of every predicate over the declared objects;
//! groups are the type-consistent schema instantiations, filtered by the
//! static equality constraints. Id assignment is deterministic: declaration
//! order, then object declaration order per argument position.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{Fairness, FondProblem, ModelError, OutcomeSpec};

use super::parser::{DomainAst, EffectItem, GroundAtom, Literal, ProblemAst, TypedName};

#[derive(Debug, Error)]
pub enum GroundError {
    #[error("problem `{problem}` targets domain `{wanted}`, got `{domain}`")]
    DomainMismatch {
        problem: String,
        wanted: String,
        domain: String,
    },
    #[error("object `{object}` has undeclared type `{ty}`")]
    UnknownType { object: String, ty: String },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate `{pred}` takes {expected} arguments, got {got}")]
    ArityMismatch {
        pred: String,
        expected: usize,
        got: usize,
    },
    #[error("atom `{0}` is not type-consistent")]
    IllTypedAtom(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

struct TypeTable {
    /// type -> supertype; "object" is the root and maps to itself.
    parent: HashMap<String, String>,
}

impl TypeTable {
    fn new(types: &[(String, String)]) -> Self {
        let mut parent = HashMap::new();
        parent.insert("object".to_string(), "object".to_string());
        for (t, sup) in types {
            parent.insert(t.clone(), sup.clone());
            parent
                .entry(sup.clone())
                .or_insert_with(|| "object".to_string());
        }
        TypeTable { parent }
    }

    fn known(&self, ty: &str) -> bool {
        self.parent.contains_key(ty)
    }

    /// `ty` is `ancestor` or a (transitive) subtype of it.
    fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut cur = ty;
        loop {
            if cur == ancestor {
                return true;
            }
            match self.parent.get(cur) {
                Some(p) if p != cur => cur = p,
                _ => return false,
            }
        }
    }
}

fn atom_name(pred: &str, args: &[&str]) -> String {
    if args.is_empty() {
        pred.to_string()
    } else {
        format!("{}({})", pred, args.join(","))
    }
}

fn group_name(schema: &str, args: &[&str]) -> String {
    atom_name(schema, args)
}

/// All assignments of objects to the typed slots, in object declaration
/// order per slot.
fn enumerate_bindings<'a>(
    slots: &[TypedName],
    objects: &'a [TypedName],
    types: &TypeTable,
) -> Vec<Vec<&'a str>> {
    let mut out: Vec<Vec<&str>> = vec![Vec::new()];
    for slot in slots {
        let mut next = Vec::new();
        for combo in &out {
            for obj in objects {
                if types.is_subtype(&obj.ty, &slot.ty) {
                    let mut c = combo.clone();
                    c.push(obj.name.as_str());
                    next.push(c);
                }
            }
        }
        out = next;
    }
    out
}

pub fn ground(domain: &DomainAst, problem: &ProblemAst) -> Result<FondProblem, GroundError> {
    if problem.domain != domain.name {
        return Err(GroundError::DomainMismatch {
            problem: problem.name.clone(),
            wanted: problem.domain.clone(),
            domain: domain.name.clone(),
        });
    }
    let types = TypeTable::new(&domain.types);
    for obj in &problem.objects {
        if !types.known(&obj.ty) {
            return Err(GroundError::UnknownType {
                object: obj.name.clone(),
                ty: obj.ty.clone(),
            });
        }
    }
    let object_ty: HashMap<&str, &str> = problem
        .objects
        .iter()
        .map(|o| (o.name.as_str(), o.ty.as_str()))
        .collect();

    let mut fond = FondProblem::new();
    for pred in &domain.predicates {
        for combo in enumerate_bindings(&pred.params, &problem.objects, &types) {
            fond.add_atom(atom_name(&pred.name, &combo))?;
        }
    }
    let atom_ids: HashMap<String, usize> = fond
        .atoms
        .iter()
        .map(|a| (a.name.clone(), a.id))
        .collect();

    let pred_arity: HashMap<&str, usize> = domain
        .predicates
        .iter()
        .map(|p| (p.name.as_str(), p.params.len()))
        .collect();

    // resolves a literal's arguments under a binding and returns the atom id
    let resolve = |lit_pred: &str,
                   lit_args: &[String],
                   binding: &HashMap<&str, &str>|
     -> Result<usize, GroundError> {
        let expected = *pred_arity
            .get(lit_pred)
            .ok_or_else(|| GroundError::UnknownPredicate(lit_pred.to_string()))?;
        if lit_args.len() != expected {
            return Err(GroundError::ArityMismatch {
                pred: lit_pred.to_string(),
                expected,
                got: lit_args.len(),
            });
        }
        let mut args: Vec<&str> = Vec::with_capacity(lit_args.len());
        for a in lit_args {
            if let Some(var) = a.strip_prefix('?') {
                let _ = var;
                args.push(
                    binding
                        .get(a.as_str())
                        .copied()
                        .ok_or_else(|| GroundError::UnboundVariable(a.clone()))?,
                );
            } else {
                if !object_ty.contains_key(a.as_str()) {
                    return Err(GroundError::UnknownObject(a.clone()));
                }
                args.push(a.as_str());
            }
        }
        let name = atom_name(lit_pred, &args);
        atom_ids
            .get(&name)
            .copied()
            .ok_or(GroundError::IllTypedAtom(name))
    };

    for schema in &domain.actions {
        let unfair = problem.unfair.iter().any(|u| u == &schema.name);
        let fairness = if unfair {
            Fairness::Unfair
        } else {
            Fairness::Fair
        };
        for combo in enumerate_bindings(&schema.params, &problem.objects, &types) {
            let binding: HashMap<&str, &str> = schema
                .params
                .iter()
                .map(|p| p.name.as_str())
                .zip(combo.iter().copied())
                .collect();
            let term = |t: &'_ str| -> Result<String, GroundError> {
                if t.starts_with('?') {
                    binding
                        .get(t)
                        .map(|s| s.to_string())
                        .ok_or_else(|| GroundError::UnboundVariable(t.to_string()))
                } else {
                    Ok(t.to_string())
                }
            };
            let mut keep = true;
            for eq in &schema.eq_constraints {
                let same = term(&eq.a)? == term(&eq.b)?;
                if same == eq.negated {
                    keep = false;
                    break;
                }
            }
            if !keep {
                continue;
            }

            let mut pre = Vec::new();
            for lit in &schema.pre {
                pre.push(resolve(&lit.pred, &lit.args, &binding)?);
            }

            // base effects plus the cross product of all oneof arms
            let mut base_add = Vec::new();
            let mut base_del = Vec::new();
            let mut oneofs: Vec<&Vec<Vec<Literal>>> = Vec::new();
            for item in &schema.effect {
                match item {
                    EffectItem::Literal(lit) => {
                        let id = resolve(&lit.pred, &lit.args, &binding)?;
                        if lit.neg {
                            base_del.push(id);
                        } else {
                            base_add.push(id);
                        }
                    }
                    EffectItem::Oneof(arms) => oneofs.push(arms),
                }
            }
            let mut specs = vec![OutcomeSpec {
                pre: pre.clone(),
                add: base_add,
                del: base_del,
            }];
            for arms in oneofs {
                let mut next = Vec::new();
                for spec in &specs {
                    for arm in arms {
                        let mut s = spec.clone();
                        for lit in arm {
                            let id = resolve(&lit.pred, &lit.args, &binding)?;
                            if lit.neg {
                                s.del.push(id);
                            } else {
                                s.add.push(id);
                            }
                        }
                        next.push(s);
                    }
                }
                specs = next;
            }
            fond.add_group_with_basename(
                group_name(&schema.name, &combo),
                schema.name.clone(),
                fairness,
                specs,
            )?;
        }
    }

    let lookup_ground = |a: &GroundAtom| -> Result<usize, GroundError> {
        let expected = *pred_arity
            .get(a.pred.as_str())
            .ok_or_else(|| GroundError::UnknownPredicate(a.pred.clone()))?;
        if a.args.len() != expected {
            return Err(GroundError::ArityMismatch {
                pred: a.pred.clone(),
                expected,
                got: a.args.len(),
            });
        }
        for arg in &a.args {
            if !object_ty.contains_key(arg.as_str()) {
                return Err(GroundError::UnknownObject(arg.clone()));
            }
        }
        let args: Vec<&str> = a.args.iter().map(String::as_str).collect();
        let name = atom_name(&a.pred, &args);
        atom_ids
            .get(&name)
            .copied()
            .ok_or(GroundError::IllTypedAtom(name))
    };

    let init = problem
        .init
        .iter()
        .map(&lookup_ground)
        .collect::<Result<Vec<_>, _>>()?;
    fond.set_init(init)?;
    let goal = problem
        .goal
        .iter()
        .map(&lookup_ground)
        .collect::<Result<Vec<_>, _>>()?;
    fond.set_goal(goal)?;
    Ok(fond)
}
