//! Parameterized benchmark families, emitted as PDDL text. Every generator
//! is deterministic in its parameters, so regenerating an instance always
//! yields byte-identical output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("domain `{domain}` has no parameter `{param}`")]
    UnknownParam { domain: String, param: String },
    #[error("parameter `{param}` = {value} outside {min}..={max}")]
    OutOfRange {
        param: String,
        value: usize,
        min: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: usize,
    pub min: usize,
    pub max: usize,
    pub doc: &'static str,
}

/// Catalog entry. The solvability and misleading flags describe the family
/// at its default parameters and are cross-checked by tests.
#[derive(Debug, Clone, Copy)]
pub struct DomainSpec {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
    pub strong_cyclic: bool,
    pub strong: bool,
    pub dual: bool,
    pub misleading: bool,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub domain: String,
    pub problem: String,
}

pub static DOMAINS: &[DomainSpec] = &[
    DomainSpec {
        name: "doors",
        summary: "corridor of rooms behind doors that open and close \
                  nondeterministically; the last room needs a key from the start",
        params: &[ParamSpec {
            name: "rooms",
            default: 4,
            min: 2,
            max: 15,
            doc: "number of rooms in the corridor",
        }],
        strong_cyclic: true,
        strong: false,
        dual: true,
        misleading: false,
    },
    DomainSpec {
        name: "islands",
        summary: "two grid islands joined by an animal-blocked bridge; \
                  swimming is a fatal shortcut",
        params: &[ParamSpec {
            name: "size",
            default: 2,
            min: 2,
            max: 5,
            doc: "side length of each island grid",
        }],
        strong_cyclic: true,
        strong: true,
        dual: true,
        misleading: true,
    },
    DomainSpec {
        name: "miner",
        summary: "dig for gems at a risky nearby site or prepare a safe far \
                  site first",
        params: &[ParamSpec {
            name: "items",
            default: 2,
            min: 1,
            max: 6,
            doc: "number of gems to collect",
        }],
        strong_cyclic: true,
        strong: true,
        dual: true,
        misleading: true,
    },
    DomainSpec {
        name: "tireworldLine",
        summary: "drive down a line of locations; each hop may blow a tire \
                  or slip back, with one spare per stop",
        params: &[ParamSpec {
            name: "length",
            default: 4,
            min: 1,
            max: 12,
            doc: "number of road segments",
        }],
        strong_cyclic: true,
        strong: false,
        dual: true,
        misleading: false,
    },
    DomainSpec {
        name: "tireworldSpiky",
        summary: "short route with two spiky segments versus a long route \
                  with one, carrying at most one spare",
        params: &[ParamSpec {
            name: "spares",
            default: 1,
            min: 1,
            max: 3,
            doc: "spare tires stocked at the start",
        }],
        strong_cyclic: true,
        strong: true,
        dual: true,
        misleading: true,
    },
    DomainSpec {
        name: "tireworldTruck",
        summary: "a puncture-prone car and an immune truck that can ferry \
                  spares ahead",
        params: &[ParamSpec {
            name: "length",
            default: 1,
            min: 1,
            max: 4,
            doc: "number of road segments",
        }],
        strong_cyclic: true,
        strong: true,
        dual: true,
        misleading: false,
    },
    DomainSpec {
        name: "gridDuel",
        summary: "turn-based pursuit on two columns: cross only when the \
                  unfair adversary is two rows away",
        params: &[ParamSpec {
            name: "size",
            default: 3,
            min: 3,
            max: 8,
            doc: "instance size; the column has size+4 rows",
        }],
        strong_cyclic: true,
        strong: false,
        dual: true,
        misleading: true,
    },
];

pub fn list_domains() -> &'static [DomainSpec] {
    DOMAINS
}

pub fn domain_spec(name: &str) -> Option<&'static DomainSpec> {
    DOMAINS.iter().find(|d| d.name == name)
}

fn resolve_params(
    spec: &DomainSpec,
    overrides: &BTreeMap<String, usize>,
) -> Result<BTreeMap<&'static str, usize>, GenError> {
    for key in overrides.keys() {
        if !spec.params.iter().any(|p| p.name == key) {
            return Err(GenError::UnknownParam {
                domain: spec.name.to_string(),
                param: key.clone(),
            });
        }
    }
    let mut out = BTreeMap::new();
    for p in spec.params {
        let v = overrides.get(p.name).copied().unwrap_or(p.default);
        if v < p.min || v > p.max {
            return Err(GenError::OutOfRange {
                param: p.name.to_string(),
                value: v,
                min: p.min,
                max: p.max,
            });
        }
        out.insert(p.name, v);
    }
    Ok(out)
}

pub fn generate(name: &str, overrides: &BTreeMap<String, usize>) -> Result<Instance, GenError> {
    let spec = domain_spec(name).ok_or_else(|| GenError::UnknownDomain(name.to_string()))?;
    let params = resolve_params(spec, overrides)?;
    Ok(match spec.name {
        "doors" => doors(params["rooms"]),
        "islands" => islands(params["size"]),
        "miner" => miner(params["items"]),
        "tireworldLine" => tireworld_line(params["length"]),
        "tireworldSpiky" => tireworld_spiky(params["spares"]),
        "tireworldTruck" => tireworld_truck(params["length"]),
        "gridDuel" => grid_duel(params["size"]),
        _ => unreachable!(),
    })
}

fn doors(n: usize) -> Instance {
    let domain = "\
(define (domain doors)
  (:requirements :strips :typing :equality :non-deterministic)
  (:types room)
  (:predicates (at ?r - room) (adj ?a ?b - room) (open ?r - room)
               (closed ?r - room) (key-at ?r - room) (has-key)
               (is-last ?r - room))
  (:action pickup
    :parameters (?r - room)
    :precondition (and (at ?r) (key-at ?r))
    :effect (and (has-key) (not (key-at ?r))))
  (:action enter
    :parameters (?a ?b ?c - room)
    :precondition (and (at ?a) (adj ?a ?b) (adj ?b ?c) (open ?b)
                       (not (= ?a ?b)))
    :effect (and (at ?b) (not (at ?a))
                 (oneof (and (open ?c) (not (closed ?c)))
                        (and (closed ?c) (not (open ?c))))))
  (:action wait-for-door
    :parameters (?b ?c - room)
    :precondition (and (at ?b) (adj ?b ?c) (closed ?c))
    :effect (oneof (and (open ?c) (not (closed ?c))) (and)))
  (:action enter-last
    :parameters (?a ?b - room)
    :precondition (and (at ?a) (adj ?a ?b) (is-last ?b) (has-key)
                       (not (= ?a ?b)))
    :effect (and (at ?b) (not (at ?a)))))
"
    .to_string();

    let mut p = String::new();
    let _ = writeln!(p, "(define (problem doors-{n})");
    let _ = writeln!(p, "  (:domain doors)");
    let rooms: Vec<String> = (1..=n).map(|i| format!("r{i}")).collect();
    let _ = writeln!(p, "  (:objects {} - room)", rooms.join(" "));
    let _ = write!(p, "  (:init (at r1) (key-at r1) (is-last r{n})");
    for i in 1..n {
        let _ = write!(p, " (adj r{} r{})", i, i + 1);
    }
    if n >= 3 {
        let _ = write!(p, " (open r2)");
        for i in 3..=n {
            let _ = write!(p, " (closed r{i})");
        }
    }
    let _ = writeln!(p, ")");
    let _ = writeln!(p, "  (:goal (at r{n})))");
    Instance {
        name: format!("doors-{n}"),
        domain,
        problem: p,
    }
}

fn islands(n: usize) -> Instance {
    let domain = "\
(define (domain islands)
  (:requirements :strips :typing :equality :non-deterministic)
  (:types pos)
  (:predicates (at ?p - pos) (conn ?a ?b - pos) (bridge ?a ?b - pos)
               (swim-route ?a ?b - pos) (animals-at ?p - pos)
               (one-shooed ?p - pos) (bridge-clear ?p - pos) (drowned))
  (:action walk
    :parameters (?a ?b - pos)
    :precondition (and (at ?a) (conn ?a ?b) (not (= ?a ?b)))
    :effect (and (at ?b) (not (at ?a))))
  (:action swim
    :parameters (?a ?b - pos)
    :precondition (and (at ?a) (swim-route ?a ?b) (not (= ?a ?b)))
    :effect (oneof (and (at ?b) (not (at ?a)))
                   (and (drowned) (not (at ?a)))))
  (:action shoo
    :parameters (?p - pos)
    :precondition (and (at ?p) (animals-at ?p))
    :effect (and (one-shooed ?p) (not (animals-at ?p))))
  (:action shoo-again
    :parameters (?p - pos)
    :precondition (and (at ?p) (one-shooed ?p))
    :effect (and (bridge-clear ?p) (not (one-shooed ?p))))
  (:action cross-bridge
    :parameters (?a ?b - pos)
    :precondition (and (at ?a) (bridge ?a ?b) (bridge-clear ?a)
                       (not (= ?a ?b)))
    :effect (and (at ?b) (not (at ?a)))))
"
    .to_string();

    let cell = |isl: char, x: usize, y: usize| format!("{isl}{x}-{y}");
    let mut objects = Vec::new();
    for isl in ['a', 'b'] {
        for x in 1..=n {
            for y in 1..=n {
                objects.push(cell(isl, x, y));
            }
        }
    }
    let mut p = String::new();
    let _ = writeln!(p, "(define (problem islands-{n})");
    let _ = writeln!(p, "  (:domain islands)");
    let _ = writeln!(p, "  (:objects {} - pos)", objects.join(" "));
    let _ = write!(
        p,
        "  (:init (at {}) (animals-at {})",
        cell('a', 1, 1),
        cell('a', n, n)
    );
    let _ = write!(
        p,
        "\n         (bridge {} {}) (swim-route {} {})",
        cell('a', n, n),
        cell('b', n, n),
        cell('a', 1, 1),
        cell('b', 1, 1)
    );
    for isl in ['a', 'b'] {
        for x in 1..=n {
            for y in 1..=n {
                let mut put = |x2: usize, y2: usize| {
                    let _ = write!(
                        p,
                        "\n         (conn {} {})",
                        cell(isl, x, y),
                        cell(isl, x2, y2)
                    );
                };
                if x < n {
                    put(x + 1, y);
                }
                if x > 1 {
                    put(x - 1, y);
                }
                if y < n {
                    put(x, y + 1);
                }
                if y > 1 {
                    put(x, y - 1);
                }
            }
        }
    }
    let _ = writeln!(p, ")");
    let _ = writeln!(p, "  (:goal (at {})))", cell('b', 1, 1));
    Instance {
        name: format!("islands-{n}"),
        domain,
        problem: p,
    }
}

fn miner(items: usize) -> Instance {
    let domain = "\
(define (domain miner)
  (:requirements :strips :typing :non-deterministic)
  (:types gem)
  (:predicates (at-base) (at-near) (at-far) (stone-moved)
               (have ?g - gem) (alive))
  (:action go-near
    :parameters ()
    :precondition (and (at-base) (alive))
    :effect (and (at-near) (not (at-base))))
  (:action move-stone
    :parameters ()
    :precondition (and (at-base) (alive))
    :effect (stone-moved))
  (:action go-far
    :parameters ()
    :precondition (and (at-base) (stone-moved) (alive))
    :effect (and (at-far) (not (at-base))))
  (:action dig-near
    :parameters (?g - gem)
    :precondition (and (at-near) (alive))
    :effect (oneof (have ?g) (not (alive))))
  (:action dig-far
    :parameters (?g - gem)
    :precondition (and (at-far) (alive))
    :effect (have ?g)))
"
    .to_string();

    let gems: Vec<String> = (1..=items).map(|i| format!("g{i}")).collect();
    let mut p = String::new();
    let _ = writeln!(p, "(define (problem miner-{items})");
    let _ = writeln!(p, "  (:domain miner)");
    let _ = writeln!(p, "  (:objects {} - gem)", gems.join(" "));
    let _ = writeln!(p, "  (:init (at-base) (alive))");
    let goal: Vec<String> = gems.iter().map(|g| format!("(have {g})")).collect();
    let _ = writeln!(p, "  (:goal (and {})))", goal.join(" "));
    Instance {
        name: format!("miner-{items}"),
        domain,
        problem: p,
    }
}

fn tireworld_line(m: usize) -> Instance {
    // zero-arity schemas: every segment keeps its own outcome names, so a
    // controller node is pinned to one location
    let mut d = String::new();
    let _ = writeln!(d, "(define (domain tireworld-line)");
    let _ = writeln!(d, "  (:requirements :strips :non-deterministic)");
    let mut preds = vec!["(ok)".to_string(), "(flat)".to_string()];
    for i in 0..=m {
        preds.push(format!("(at-l{i})"));
    }
    for i in 1..=m {
        preds.push(format!("(spare-l{i})"));
    }
    let _ = writeln!(d, "  (:predicates {})", preds.join(" "));
    for i in 0..m {
        let _ = writeln!(d, "  (:action drive-{i}");
        let _ = writeln!(d, "    :parameters ()");
        let _ = writeln!(d, "    :precondition (and (at-l{i}) (ok))");
        let _ = writeln!(
            d,
            "    :effect (oneof (and (at-l{}) (not (at-l{i})))",
            i + 1
        );
        let _ = writeln!(
            d,
            "                   (and (at-l{}) (not (at-l{i})) (flat) (not (ok)))",
            i + 1
        );
        let _ = writeln!(d, "                   (and)))");
    }
    for i in 1..=m {
        let _ = writeln!(d, "  (:action fix-{i}");
        let _ = writeln!(d, "    :parameters ()");
        let _ = writeln!(d, "    :precondition (and (at-l{i}) (flat) (spare-l{i}))");
        let _ = writeln!(d, "    :effect (and (ok) (not (flat)) (not (spare-l{i}))))");
    }
    let _ = writeln!(d, ")");

    let mut p = String::new();
    let _ = writeln!(p, "(define (problem tireworld-line-{m})");
    let _ = writeln!(p, "  (:domain tireworld-line)");
    let _ = write!(p, "  (:init (at-l0) (ok)");
    for i in 1..=m {
        let _ = write!(p, " (spare-l{i})");
    }
    let _ = writeln!(p, ")");
    let _ = writeln!(p, "  (:goal (at-l{m})))");
    Instance {
        name: format!("tireworld-line-{m}"),
        domain: d,
        problem: p,
    }
}

fn tireworld_spiky(spares: usize) -> Instance {
    let domain = "\
(define (domain tireworld-spiky)
  (:requirements :strips :typing :equality :non-deterministic)
  (:types location spare)
  (:predicates (at ?l - location) (spare-at ?s - spare ?l - location)
               (carrying ?s - spare) (handsfree) (ok) (flat)
               (road ?a ?b - location) (spiky-road ?a ?b - location))
  (:action drive
    :parameters (?a ?b - location)
    :precondition (and (at ?a) (road ?a ?b) (ok) (not (= ?a ?b)))
    :effect (and (at ?b) (not (at ?a))))
  (:action drive-spiky
    :parameters (?a ?b - location)
    :precondition (and (at ?a) (spiky-road ?a ?b) (ok) (not (= ?a ?b)))
    :effect (and (at ?b) (not (at ?a))
                 (oneof (and) (and (flat) (not (ok))))))
  (:action load
    :parameters (?s - spare ?l - location)
    :precondition (and (at ?l) (spare-at ?s ?l) (handsfree))
    :effect (and (carrying ?s) (not (spare-at ?s ?l)) (not (handsfree))))
  (:action unload
    :parameters (?s - spare ?l - location)
    :precondition (and (at ?l) (carrying ?s))
    :effect (and (spare-at ?s ?l) (handsfree) (not (carrying ?s))))
  (:action fix
    :parameters (?s - spare)
    :precondition (and (flat) (carrying ?s))
    :effect (and (ok) (handsfree) (not (flat)) (not (carrying ?s)))))
"
    .to_string();

    let sps: Vec<String> = (1..=spares).map(|i| format!("sp{i}")).collect();
    let mut p = String::new();
    let _ = writeln!(p, "(define (problem tireworld-spiky-{spares})");
    let _ = writeln!(p, "  (:domain tireworld-spiky)");
    let _ = writeln!(p, "  (:objects s c1 b1 b2 g - location");
    let _ = writeln!(p, "            {} - spare)", sps.join(" "));
    let _ = write!(p, "  (:init (at s) (ok) (handsfree)");
    for sp in &sps {
        let _ = write!(p, " (spare-at {sp} s)");
    }
    let _ = writeln!(p, "\n         (spiky-road s c1) (spiky-road c1 g) (spiky-road b1 b2)");
    let _ = writeln!(p, "         (road s b1) (road b2 g))");
    let _ = writeln!(p, "  (:goal (and (at g) (ok))))");
    Instance {
        name: format!("tireworld-spiky-{spares}"),
        domain,
        problem: p,
    }
}

fn tireworld_truck(m: usize) -> Instance {
    let domain = "\
(define (domain tireworld-truck)
  (:requirements :strips :typing :equality :non-deterministic)
  (:types location spare)
  (:predicates (car-at ?l - location) (truck-at ?l - location)
               (spare-at ?s - spare ?l - location) (in-truck ?s - spare)
               (road ?a ?b - location) (ok) (flat))
  (:action drive-truck
    :parameters (?a ?b - location)
    :precondition (and (truck-at ?a) (road ?a ?b) (not (= ?a ?b)))
    :effect (and (truck-at ?b) (not (truck-at ?a))))
  (:action load-truck
    :parameters (?s - spare ?l - location)
    :precondition (and (truck-at ?l) (spare-at ?s ?l))
    :effect (and (in-truck ?s) (not (spare-at ?s ?l))))
  (:action unload-truck
    :parameters (?s - spare ?l - location)
    :precondition (and (truck-at ?l) (in-truck ?s))
    :effect (and (spare-at ?s ?l) (not (in-truck ?s))))
  (:action drive-car
    :parameters (?a ?b - location)
    :precondition (and (car-at ?a) (road ?a ?b) (ok) (not (= ?a ?b)))
    :effect (and (car-at ?b) (not (car-at ?a))
                 (oneof (and) (and (flat) (not (ok))))))
  (:action fix
    :parameters (?s - spare ?l - location)
    :precondition (and (car-at ?l) (flat) (spare-at ?s ?l))
    :effect (and (ok) (not (flat)) (not (spare-at ?s ?l)))))
"
    .to_string();

    let locs: Vec<String> = (0..=m).map(|i| format!("l{i}")).collect();
    let sps: Vec<String> = (1..=m).map(|i| format!("sp{i}")).collect();
    let mut p = String::new();
    let _ = writeln!(p, "(define (problem tireworld-truck-{m})");
    let _ = writeln!(p, "  (:domain tireworld-truck)");
    let _ = writeln!(p, "  (:objects {} - location", locs.join(" "));
    let _ = writeln!(p, "            {} - spare)", sps.join(" "));
    let _ = write!(p, "  (:init (car-at l0) (truck-at l0) (ok)");
    for sp in &sps {
        let _ = write!(p, " (spare-at {sp} l0)");
    }
    for i in 0..m {
        let _ = write!(p, " (road l{} l{})", i, i + 1);
    }
    let _ = writeln!(p, ")");
    let _ = writeln!(p, "  (:goal (and (car-at l{m}) (ok))))");
    Instance {
        name: format!("tireworld-truck-{m}"),
        domain,
        problem: p,
    }
}

fn grid_duel(n: usize) -> Instance {
    // rows 1..=n+4. The adversary patrols the right column on the bottom
    // two rows (0-1 counter-moves as one unfair group) and strikes any
    // crossing attempt within one row of its position, so a crossing is
    // only safe at vertical distance >= 2; the agent must climb out of
    // reach before moving right.
    let rows = n + 4;
    let domain = "\
(define (domain grid-duel)
  (:requirements :strips :typing :equality :non-deterministic)
  (:types row)
  (:predicates (arow ?r - row) (vrow ?r - row) (on-right ?r - row)
               (clear ?r - row) (turn-a) (turn-v) (done)
               (nxt ?a ?b - row) (atop ?a ?b - row) (abot ?a ?b - row)
               (ledge-low ?r - row) (ledge-high ?r - row) (zone-top ?r - row))
  (:action move-up2
    :parameters (?r ?s ?t - row)
    :precondition (and (arow ?r) (nxt ?r ?s) (nxt ?s ?t) (turn-a)
                       (not (= ?r ?s)) (not (= ?r ?t)))
    :effect (oneof (and (turn-v) (not (turn-a)))
                   (and (arow ?s) (not (arow ?r)) (turn-v) (not (turn-a)))
                   (and (arow ?t) (not (arow ?r)) (turn-v) (not (turn-a)))))
  (:action move-up1
    :parameters (?r ?s - row)
    :precondition (and (arow ?r) (atop ?r ?s) (turn-a) (not (= ?r ?s)))
    :effect (oneof (and (turn-v) (not (turn-a)))
                   (and (arow ?s) (not (arow ?r)) (turn-v) (not (turn-a)))))
  (:action move-down2
    :parameters (?r ?s ?t - row)
    :precondition (and (arow ?r) (nxt ?s ?r) (nxt ?t ?s) (turn-a)
                       (not (= ?r ?s)) (not (= ?r ?t)))
    :effect (oneof (and (turn-v) (not (turn-a)))
                   (and (arow ?s) (not (arow ?r)) (turn-v) (not (turn-a)))
                   (and (arow ?t) (not (arow ?r)) (turn-v) (not (turn-a)))))
  (:action move-down1
    :parameters (?r ?s - row)
    :precondition (and (arow ?r) (abot ?r ?s) (turn-a) (not (= ?r ?s)))
    :effect (oneof (and (turn-v) (not (turn-a)))
                   (and (arow ?s) (not (arow ?r)) (turn-v) (not (turn-a)))))
  (:action cross
    :parameters (?r - row)
    :precondition (and (arow ?r) (clear ?r) (turn-a))
    :effect (and (on-right ?r) (not (arow ?r)) (turn-v) (not (turn-a))))
  (:action finish
    :parameters (?r - row)
    :precondition (and (on-right ?r) (turn-a))
    :effect (done))
  (:action adv-move
    :parameters (?a ?b ?c - row)
    :precondition (and (ledge-low ?a) (ledge-high ?b) (zone-top ?c) (turn-v)
                       (not (= ?a ?b)) (not (= ?a ?c)) (not (= ?b ?c)))
    :effect (oneof (and (vrow ?a) (not (vrow ?b)) (clear ?b) (not (clear ?a))
                        (not (on-right ?a)) (not (on-right ?b))
                        (turn-a) (not (turn-v)))
                   (and (vrow ?b) (not (vrow ?a)) (clear ?a) (not (clear ?b))
                        (not (on-right ?a)) (not (on-right ?b))
                        (not (on-right ?c)) (turn-a) (not (turn-v))))))
"
    .to_string();

    let objs: Vec<String> = (1..=rows).map(|i| format!("r{i}")).collect();
    let mut p = String::new();
    let _ = writeln!(p, "(define (problem grid-duel-{n})");
    let _ = writeln!(p, "  (:domain grid-duel)");
    let _ = writeln!(p, "  (:objects {} - row)", objs.join(" "));
    let _ = write!(p, "  (:init (arow r1) (vrow r1) (turn-a)");
    let _ = write!(p, "\n         (ledge-low r1) (ledge-high r2) (zone-top r3)");
    let _ = write!(
        p,
        "\n         (atop r{} r{}) (abot r2 r1)",
        rows - 1,
        rows
    );
    for i in 1..rows {
        let _ = write!(p, " (nxt r{} r{})", i, i + 1);
    }
    for i in 2..=rows {
        let _ = write!(p, "\n         (clear r{i})");
    }
    let _ = writeln!(p, ")");
    let _ = writeln!(p, "  (:goal (done))");
    let _ = writeln!(p, "  (:unfair adv-move))");
    Instance {
        name: format!("grid-duel-{n}"),
        domain,
        problem: p,
    }
}
