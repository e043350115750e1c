//! Grounded FOND model: atoms, non-deterministic action groups with
//! deterministic sibling outcomes, states as bit-sets, and the transition
//! semantics shared by the encoder, verifier and analysis passes.

use std::fmt;

use thiserror::Error;

pub type AtomId = usize;
pub type OutcomeId = usize;
pub type GroupId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("atom name `{0}` declared twice")]
    DuplicateAtom(String),
    #[error("outcome `{0}` references atom id {1} outside the atom table")]
    AtomOutOfRange(String, AtomId),
    #[error("outcome `{0}` adds and deletes atom `{1}`")]
    AddDelOverlap(String, String),
    #[error("group `{0}` has no outcomes")]
    EmptyGroup(String),
    #[error("sibling outcomes of group `{0}` share the name `{1}`")]
    DuplicateOutcomeName(String, String),
    #[error("init or goal references atom id {0} outside the atom table")]
    InitGoalOutOfRange(AtomId),
}

/// Fairness tag of an action group. Defaults to `Fair`, so plain
/// strong-cyclic problems need no annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fairness {
    Fair,
    Unfair,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub id: AtomId,
    pub name: String,
}

/// One deterministic sibling of an action group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub id: OutcomeId,
    pub group: GroupId,
    /// Schema name plus outcome ordinal, no arguments (the `B` of the
    /// compact transition variables). Distinct among siblings.
    pub group_name: String,
    pub pre: State,
    pub add: State,
    pub del: State,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionGroup {
    pub id: GroupId,
    pub name: String,
    pub outcomes: Vec<OutcomeId>,
    pub fairness: Fairness,
}

impl ActionGroup {
    pub fn is_deterministic(&self) -> bool {
        self.outcomes.len() == 1
    }
}

/// A state is the set of true atoms, kept canonical so states can key
/// hash maps directly.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    bits: Vec<u64>,
}

impl State {
    // canonical form: no trailing zero words, so Eq/Hash work structurally
    pub fn empty(num_atoms: usize) -> Self {
        State {
            bits: Vec::with_capacity(num_atoms.div_ceil(64)),
        }
    }

    pub fn from_atoms(num_atoms: usize, atoms: impl IntoIterator<Item = AtomId>) -> Self {
        let mut s = State::empty(num_atoms);
        for a in atoms {
            s.insert(a);
        }
        s
    }

    pub fn insert(&mut self, atom: AtomId) {
        let w = atom / 64;
        if w >= self.bits.len() {
            self.bits.resize(w + 1, 0);
        }
        self.bits[w] |= 1 << (atom % 64);
    }

    pub fn remove(&mut self, atom: AtomId) {
        if let Some(w) = self.bits.get_mut(atom / 64) {
            *w &= !(1 << (atom % 64));
        }
        while self.bits.last() == Some(&0) {
            self.bits.pop();
        }
    }

    pub fn contains(&self, atom: AtomId) -> bool {
        self.bits
            .get(atom / 64)
            .is_some_and(|w| w & (1 << (atom % 64)) != 0)
    }

    pub fn is_superset(&self, other: &State) -> bool {
        other
            .bits
            .iter()
            .zip(self.bits.iter().chain(std::iter::repeat(&0)))
            .all(|(o, s)| o & !s == 0)
    }

    pub fn is_disjoint(&self, other: &State) -> bool {
        self.bits.iter().zip(other.bits.iter()).all(|(a, b)| a & b == 0)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.bits.iter().enumerate().flat_map(|(i, w)| {
            (0..64).filter_map(move |b| {
                if w & (1 << b) != 0 {
                    Some(i * 64 + b)
                } else {
                    None
                }
            })
        })
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl serde::Serialize for State {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

/// Specification of one outcome handed to [`FondProblem::add_group`].
#[derive(Debug, Clone, Default)]
pub struct OutcomeSpec {
    pub pre: Vec<AtomId>,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
}

/// A grounded FOND problem `⟨At, I, Act, G⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FondProblem {
    pub atoms: Vec<Atom>,
    pub init: State,
    pub goal: State,
    pub groups: Vec<ActionGroup>,
    pub outcomes: Vec<Outcome>,
}

impl FondProblem {
    pub fn new() -> Self {
        FondProblem {
            atoms: Vec::new(),
            init: State::empty(0),
            goal: State::empty(0),
            groups: Vec::new(),
            outcomes: Vec::new(),
        }
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn add_atom(&mut self, name: impl Into<String>) -> Result<AtomId, ModelError> {
        let name = name.into();
        if self.atoms.iter().any(|a| a.name == name) {
            return Err(ModelError::DuplicateAtom(name));
        }
        let id = self.atoms.len();
        self.atoms.push(Atom { id, name });
        Ok(id)
    }

    pub fn atom_id(&self, name: &str) -> Option<AtomId> {
        self.atoms.iter().find(|a| a.name == name).map(|a| a.id)
    }

    /// Must be called after all atoms are declared.
    pub fn set_init(&mut self, atoms: impl IntoIterator<Item = AtomId>) -> Result<(), ModelError> {
        self.init = self.checked_state(atoms)?;
        Ok(())
    }

    pub fn set_goal(&mut self, atoms: impl IntoIterator<Item = AtomId>) -> Result<(), ModelError> {
        self.goal = self.checked_state(atoms)?;
        Ok(())
    }

    fn checked_state(
        &self,
        atoms: impl IntoIterator<Item = AtomId>,
    ) -> Result<State, ModelError> {
        let mut s = State::empty(self.num_atoms());
        for a in atoms {
            if a >= self.num_atoms() {
                return Err(ModelError::InitGoalOutOfRange(a));
            }
            s.insert(a);
        }
        Ok(s)
    }

    /// Adds an action group. Sibling outcomes share the precondition of the
    /// first spec; each outcome gets the name `{name}#{ordinal}`.
    pub fn add_group(
        &mut self,
        name: impl Into<String>,
        fairness: Fairness,
        specs: Vec<OutcomeSpec>,
    ) -> Result<GroupId, ModelError> {
        let name = name.into();
        let base = name.clone();
        self.add_group_with_basename(name, base, fairness, specs)
    }

    /// Like [`add_group`](Self::add_group) but outcome names derive from
    /// `basename` (the schema name without arguments), so sibling outcomes of
    /// different instantiations of one schema share their `B` name.
    pub fn add_group_with_basename(
        &mut self,
        name: impl Into<String>,
        basename: impl Into<String>,
        fairness: Fairness,
        specs: Vec<OutcomeSpec>,
    ) -> Result<GroupId, ModelError> {
        let name = name.into();
        let basename = basename.into();
        if specs.is_empty() {
            return Err(ModelError::EmptyGroup(name));
        }
        let gid = self.groups.len();
        let mut outcome_ids = Vec::with_capacity(specs.len());
        let mut staged = Vec::with_capacity(specs.len());
        for (ordinal, spec) in specs.iter().enumerate() {
            let group_name = format!("{}#{}", basename, ordinal + 1);
            for &a in spec.pre.iter().chain(&spec.add).chain(&spec.del) {
                if a >= self.num_atoms() {
                    return Err(ModelError::AtomOutOfRange(group_name, a));
                }
            }
            let pre = State::from_atoms(self.num_atoms(), spec.pre.iter().copied());
            let add = State::from_atoms(self.num_atoms(), spec.add.iter().copied());
            let del = State::from_atoms(self.num_atoms(), spec.del.iter().copied());
            if !add.is_disjoint(&del) {
                let clash = add
                    .iter()
                    .find(|a| del.contains(*a))
                    .map(|a| self.atoms[a].name.clone())
                    .unwrap_or_default();
                return Err(ModelError::AddDelOverlap(group_name, clash));
            }
            staged.push(Outcome {
                id: self.outcomes.len() + ordinal,
                group: gid,
                group_name,
                pre,
                add,
                del,
            });
        }
        for outcome in staged {
            outcome_ids.push(outcome.id);
            self.outcomes.push(outcome);
        }
        self.groups.push(ActionGroup {
            id: gid,
            name,
            outcomes: outcome_ids,
            fairness,
        });
        Ok(gid)
    }

    pub fn initial_state(&self) -> State {
        self.init.clone()
    }

    /// Shared precondition of a group (all siblings carry the same one).
    pub fn group_pre(&self, g: &ActionGroup) -> &State {
        &self.outcomes[g.outcomes[0]].pre
    }

    /// `A(s)`: a group applies when its precondition holds in `s`.
    pub fn applicable(&self, g: &ActionGroup, s: &State) -> bool {
        s.is_superset(self.group_pre(g))
    }

    /// `f(b,s) = (s \ del(b)) ∪ add(b)`. Contract: the owning group must be
    /// applicable in `s`.
    pub fn apply_outcome(&self, b: &Outcome, s: &State) -> State {
        assert!(
            s.is_superset(&b.pre),
            "apply_outcome: outcome `{}` not applicable",
            b.group_name
        );
        let mut next = s.clone();
        for a in b.del.iter() {
            next.remove(a);
        }
        for a in b.add.iter() {
            next.insert(a);
        }
        next
    }

    /// `F(a,s)`: one pair per outcome of `g`, duplicates kept.
    pub fn successors(&self, g: &ActionGroup, s: &State) -> Vec<(OutcomeId, State)> {
        assert!(
            self.applicable(g, s),
            "successors: group `{}` not applicable",
            g.name
        );
        g.outcomes
            .iter()
            .map(|&b| (b, self.apply_outcome(&self.outcomes[b], s)))
            .collect()
    }

    pub fn is_goal(&self, s: &State) -> bool {
        s.is_superset(&self.goal)
    }

    /// All-outcome deterministic relaxation: every outcome of a
    /// non-deterministic group becomes its own singleton group, preserving
    /// preconditions. Deterministic groups are kept as-is, so the relaxation
    /// is idempotent.
    pub fn relaxation(&self) -> FondProblem {
        let mut relaxed = FondProblem {
            atoms: self.atoms.clone(),
            init: self.init.clone(),
            goal: self.goal.clone(),
            groups: Vec::new(),
            outcomes: Vec::new(),
        };
        for g in &self.groups {
            if g.is_deterministic() {
                let b = &self.outcomes[g.outcomes[0]];
                let gid = relaxed.groups.len();
                let oid = relaxed.outcomes.len();
                relaxed.outcomes.push(Outcome {
                    id: oid,
                    group: gid,
                    ..b.clone()
                });
                relaxed.groups.push(ActionGroup {
                    id: gid,
                    name: g.name.clone(),
                    outcomes: vec![oid],
                    fairness: g.fairness,
                });
            } else {
                for &b in &g.outcomes {
                    let b = &self.outcomes[b];
                    let gid = relaxed.groups.len();
                    let oid = relaxed.outcomes.len();
                    relaxed.outcomes.push(Outcome {
                        id: oid,
                        group: gid,
                        ..b.clone()
                    });
                    relaxed.groups.push(ActionGroup {
                        id: gid,
                        name: b.group_name.clone(),
                        outcomes: vec![oid],
                        fairness: g.fairness,
                    });
                }
            }
        }
        relaxed
    }

    /// Drops groups whose precondition mentions an atom that is neither
    /// initially true nor added by any group that can itself ever apply
    /// (least fixpoint). Such groups never apply in any reachable state, so
    /// the result is solvability-equivalent; atom ids are unchanged.
    pub fn prune_statically_inapplicable(&self) -> FondProblem {
        let mut reachable = self.init.clone();
        let mut kept = vec![false; self.groups.len()];
        loop {
            let mut changed = false;
            for (gi, g) in self.groups.iter().enumerate() {
                if kept[gi] || !reachable.is_superset(self.group_pre(g)) {
                    continue;
                }
                kept[gi] = true;
                changed = true;
                for &b in &g.outcomes {
                    for a in self.outcomes[b].add.iter() {
                        reachable.insert(a);
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut pruned = FondProblem {
            atoms: self.atoms.clone(),
            init: self.init.clone(),
            goal: self.goal.clone(),
            groups: Vec::new(),
            outcomes: Vec::new(),
        };
        for (gi, g) in self.groups.iter().enumerate() {
            if !kept[gi] {
                continue;
            }
            let gid = pruned.groups.len();
            let mut outcome_ids = Vec::with_capacity(g.outcomes.len());
            for &b in &g.outcomes {
                let oid = pruned.outcomes.len();
                pruned.outcomes.push(Outcome {
                    id: oid,
                    group: gid,
                    ..self.outcomes[b].clone()
                });
                outcome_ids.push(oid);
            }
            pruned.groups.push(ActionGroup {
                id: gid,
                name: g.name.clone(),
                outcomes: outcome_ids,
                fairness: g.fairness,
            });
        }
        pruned
    }
}

impl Default for FondProblem {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(pre: &[AtomId], add: &[AtomId], del: &[AtomId]) -> OutcomeSpec {
        OutcomeSpec {
            pre: pre.to_vec(),
            add: add.to_vec(),
            del: del.to_vec(),
        }
    }

    #[test]
    fn applicable_subset_cases() {
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        let q = prob.add_atom("q").unwrap();
        let g = prob.add_group("a", Fairness::Fair, vec![spec(&[p], &[], &[])]).unwrap();
        let g = prob.groups[g].clone();
        let pq = State::from_atoms(2, [p, q]);
        let only_q = State::from_atoms(2, [q]);
        assert!(prob.applicable(&g, &pq));
        assert!(!prob.applicable(&g, &only_q));

        let mut empty = FondProblem::new();
        let e = empty.add_group("e", Fairness::Fair, vec![spec(&[], &[], &[])]).unwrap();
        let e = empty.groups[e].clone();
        assert!(empty.applicable(&e, &State::empty(0)));
    }

    #[test]
    fn apply_outcome_effects() {
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        let q = prob.add_atom("q").unwrap();
        prob.add_group("addp", Fairness::Fair, vec![spec(&[], &[p], &[])]).unwrap();
        prob.add_group("swap", Fairness::Fair, vec![spec(&[], &[p], &[q])]).unwrap();

        let s0 = State::empty(2);
        let got = prob.apply_outcome(&prob.outcomes[0], &s0);
        assert_eq!(got, State::from_atoms(2, [p]));

        let sq = State::from_atoms(2, [q]);
        let got = prob.apply_outcome(&prob.outcomes[1], &sq);
        assert_eq!(got, State::from_atoms(2, [p]));
    }

    #[test]
    fn add_del_overlap_rejected() {
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        let err = prob
            .add_group("bad", Fairness::Fair, vec![spec(&[], &[p], &[p])])
            .unwrap_err();
        assert!(matches!(err, ModelError::AddDelOverlap(_, _)));
    }

    #[test]
    fn successors_one_pair_per_outcome() {
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        let g = prob
            .add_group(
                "a",
                Fairness::Fair,
                vec![spec(&[], &[p], &[]), spec(&[], &[], &[])],
            )
            .unwrap();
        let g = prob.groups[g].clone();
        let s0 = State::empty(1);
        let succ = prob.successors(&g, &s0);
        assert_eq!(succ.len(), 2);
        assert_eq!(succ[0].1, State::from_atoms(1, [p]));
        assert_eq!(succ[1].1, s0);

        // two outcomes with identical effect on s: two pairs, same state
        let mut dup = FondProblem::new();
        let r = dup.add_atom("r").unwrap();
        let g = dup
            .add_group(
                "d",
                Fairness::Fair,
                vec![spec(&[], &[r], &[]), spec(&[], &[r], &[])],
            )
            .unwrap();
        let g = dup.groups[g].clone();
        let succ = dup.successors(&g, &State::empty(1));
        assert_eq!(succ.len(), 2);
        assert_eq!(succ[0].1, succ[1].1);
    }

    #[test]
    fn relaxation_splits_groups() {
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        prob.add_group(
            "a",
            Fairness::Fair,
            vec![spec(&[], &[p], &[]), spec(&[], &[], &[])],
        )
        .unwrap();
        let relaxed = prob.relaxation();
        assert_eq!(relaxed.groups.len(), 2);
        assert!(relaxed.groups.iter().all(|g| g.is_deterministic()));

        // deterministic problems are structurally unchanged
        let mut det = FondProblem::new();
        let q = det.add_atom("q").unwrap();
        det.add_group("b", Fairness::Fair, vec![spec(&[], &[q], &[])]).unwrap();
        assert_eq!(det.relaxation(), det);

        // group sizes 1,2,3 -> 6 relaxed groups; idempotent
        let mut mix = FondProblem::new();
        let x = mix.add_atom("x").unwrap();
        mix.add_group("g1", Fairness::Fair, vec![spec(&[], &[x], &[])]).unwrap();
        mix.add_group(
            "g2",
            Fairness::Fair,
            vec![spec(&[], &[x], &[]), spec(&[], &[], &[])],
        )
        .unwrap();
        mix.add_group(
            "g3",
            Fairness::Fair,
            vec![spec(&[], &[x], &[]), spec(&[], &[], &[]), spec(&[x], &[], &[x])],
        )
        .unwrap();
        let r = mix.relaxation();
        assert_eq!(r.groups.len(), 6);
        assert_eq!(r.relaxation(), r);
    }

    #[test]
    fn is_goal_cases() {
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        let q = prob.add_atom("q").unwrap();
        prob.set_goal([p]).unwrap();
        assert!(prob.is_goal(&State::from_atoms(2, [p, q])));
        assert!(!prob.is_goal(&State::from_atoms(2, [q])));

        let mut trivial = FondProblem::new();
        trivial.add_atom("p").unwrap();
        assert!(trivial.is_goal(&State::empty(1)));
    }

    #[test]
    fn effect_invariants() {
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        let q = prob.add_atom("q").unwrap();
        prob.add_group("a", Fairness::Fair, vec![spec(&[q], &[p], &[q])]).unwrap();
        let b = &prob.outcomes[0];
        let s = State::from_atoms(2, [q]);
        let next = prob.apply_outcome(b, &s);
        assert!(next.is_superset(&b.add));
        assert!(next.is_disjoint(&b.del));
        // determinism
        assert_eq!(next, prob.apply_outcome(b, &s));
    }
}
