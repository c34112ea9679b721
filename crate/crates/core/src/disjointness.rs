//! Promise instances of t-party set-disjointness.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::params::Params;
use crate::seed::{rng_for, SeedTag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// The sets share exactly one element.
    Yes,
    /// The sets are pairwise disjoint.
    No,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Yes => "yes",
            Kind::No => "no",
        })
    }
}

impl FromStr for Kind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "yes" => Ok(Kind::Yes),
            "no" => Ok(Kind::No),
            other => Err(LabError::InvalidParams(format!("kind must be yes or no, got {other:?}"))),
        }
    }
}

/// Serialized field order is the canonical file layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjInstance {
    #[serde(rename = "N")]
    pub universe: u64,
    pub t: u64,
    pub w: u64,
    pub kind: Kind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<u32>,
    /// Sets by player index, elements ascending.
    pub sets: Vec<Vec<u32>>,
}

pub fn gen_instance_with(universe: u64, t: u64, w: u64, kind: Kind, seed: u64) -> Result<DisjInstance> {
    if t == 0 || w == 0 {
        return Err(LabError::InfeasiblePromise("t and w must be positive".into()));
    }
    let needed = match kind {
        Kind::No => t * w,
        Kind::Yes => t * (w - 1) + 1,
    };
    if needed > universe {
        let rule = match kind {
            Kind::No => "t·w ≤ N",
            Kind::Yes => "t·(w−1)+1 ≤ N",
        };
        return Err(LabError::InfeasiblePromise(format!(
            "{rule} violated: needs {needed} distinct elements but N = {universe} (t = {t}, w = {w})"
        )));
    }
    let mut rng = rng_for(seed, SeedTag::Instance, 0);
    let drawn: Vec<u32> = sample(&mut rng, universe as usize, needed as usize)
        .into_iter()
        .map(|i| i as u32 + 1)
        .collect();

    let (witness, rest) = match kind {
        Kind::Yes => (Some(drawn[0]), &drawn[1..]),
        Kind::No => (None, &drawn[..]),
    };
    let own = (w - u64::from(witness.is_some())) as usize;
    let sets = (0..t as usize)
        .map(|i| {
            let mut set: Vec<u32> = rest[i * own..(i + 1) * own].to_vec();
            set.extend(witness);
            set.sort_unstable();
            set
        })
        .collect();
    Ok(DisjInstance {
        universe,
        t,
        w,
        kind,
        witness,
        sets,
    })
}

/// Draws an instance over `[N]` with `t` sets of size `w` taken from `params`.
pub fn gen_instance(params: &Params, kind: Kind, seed: u64) -> Result<DisjInstance> {
    gen_instance_with(params.big_n, params.t, params.w, kind, seed)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    WrongSetCount { expected: u64, found: usize },
    WrongSize { set: usize, expected: u64, found: usize },
    DuplicateInSet { set: usize, element: u32 },
    OutOfUniverse { set: usize, element: u32 },
    /// `0 < occurrences < t`, or more than `t`.
    PartialOccurrence { element: u32, occurrences: u64 },
    MissingWitness,
    MultipleCommon { elements: Vec<u32> },
    WitnessMismatch { declared: Option<u32>, common: Vec<u32> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WrongSetCount { expected, found } => write!(f, "expected {expected} sets, found {found}"),
            Violation::WrongSize { set, expected, found } => {
                write!(f, "set {} has {found} elements, expected {expected}", set + 1)
            }
            Violation::DuplicateInSet { set, element } => write!(f, "set {} lists {element} twice", set + 1),
            Violation::OutOfUniverse { set, element } => write!(f, "set {} holds {element} outside [N]", set + 1),
            Violation::PartialOccurrence { element, occurrences } => {
                write!(f, "element {element} occurs in {occurrences} sets")
            }
            Violation::MissingWitness => f.write_str("kind is yes but no element is common to all sets"),
            Violation::MultipleCommon { elements } => write!(f, "several common elements: {elements:?}"),
            Violation::WitnessMismatch { declared, common } => {
                write!(f, "declared witness {declared:?} but common elements are {common:?}")
            }
        }
    }
}

/// Every promise violation found; empty means the instance is valid.
pub fn validate_promise(inst: &DisjInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    if inst.sets.len() as u64 != inst.t {
        out.push(Violation::WrongSetCount {
            expected: inst.t,
            found: inst.sets.len(),
        });
    }
    let t = inst.sets.len() as u64;
    let mut occurrences: HashMap<u32, u64> = HashMap::new();
    for (i, set) in inst.sets.iter().enumerate() {
        if set.len() as u64 != inst.w {
            out.push(Violation::WrongSize {
                set: i,
                expected: inst.w,
                found: set.len(),
            });
        }
        let mut sorted = set.clone();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                out.push(Violation::DuplicateInSet { set: i, element: pair[0] });
            }
        }
        sorted.dedup();
        for &e in &sorted {
            if e == 0 || u64::from(e) > inst.universe {
                out.push(Violation::OutOfUniverse { set: i, element: e });
            }
            *occurrences.entry(e).or_insert(0) += 1;
        }
    }
    let mut partial: Vec<(u32, u64)> = occurrences
        .iter()
        .filter(|&(_, &c)| c != 1 && c != t)
        .map(|(&e, &c)| (e, c))
        .collect();
    partial.sort_unstable();
    out.extend(
        partial
            .into_iter()
            .map(|(element, occurrences)| Violation::PartialOccurrence { element, occurrences }),
    );

    let mut common: Vec<u32> = if t >= 2 {
        occurrences.iter().filter(|&(_, &c)| c == t).map(|(&e, _)| e).collect()
    } else {
        Vec::new()
    };
    common.sort_unstable();
    match inst.kind {
        Kind::Yes => {
            if common.is_empty() {
                out.push(Violation::MissingWitness);
            } else if common.len() > 1 {
                out.push(Violation::MultipleCommon { elements: common.clone() });
            }
            if !common.is_empty() && inst.witness.map_or(true, |w| !common.contains(&w)) {
                out.push(Violation::WitnessMismatch {
                    declared: inst.witness,
                    common,
                });
            }
        }
        Kind::No => {
            if !common.is_empty() || inst.witness.is_some() {
                out.push(Violation::WitnessMismatch {
                    declared: inst.witness,
                    common,
                });
            }
        }
    }
    out
}

/// Ground truth: is some element in every set?
pub fn solve_exact(inst: &DisjInstance) -> Kind {
    if inst.sets.is_empty() {
        return Kind::No;
    }
    let mut occurrences: HashMap<u32, usize> = HashMap::new();
    for set in &inst.sets {
        let mut distinct = set.clone();
        distinct.sort_unstable();
        distinct.dedup();
        for e in distinct {
            *occurrences.entry(e).or_insert(0) += 1;
        }
    }
    if occurrences.values().any(|&c| c == inst.sets.len()) {
        Kind::Yes
    } else {
        Kind::No
    }
}

/// Canonical single-line JSON for the instance.
pub fn to_json(inst: &DisjInstance) -> String {
    serde_json::to_string(inst).expect("instance serializes")
}

pub fn from_json(text: &str) -> Result<DisjInstance> {
    serde_json::from_str(text).map_err(|e| LabError::InvalidParams(format!("instance JSON: {e}")))
}
