use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ratings::RatingsTable;
use crate::error::{Error, Result};

pub const TIED: &str = "tied";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationCounts {
    /// The 6 strict orderings ("A>B>C") plus [`TIED`].
    pub orderings: BTreeMap<String, usize>,
    /// Strict pairwise wins, keyed "A>B".
    pub pairwise: BTreeMap<String, usize>,
    /// Responses with all three system scores.
    pub counted: usize,
    /// Responses missing at least one of the systems.
    pub skipped: usize,
}

impl PermutationCounts {
    pub fn strict_total(&self) -> usize {
        self.orderings
            .iter()
            .filter(|(k, _)| k.as_str() != TIED)
            .map(|(_, v)| v)
            .sum()
    }

    /// The most frequent strict ordering, if any response was strictly ordered.
    pub fn most_common(&self) -> Option<&str> {
        self.orderings
            .iter()
            .filter(|(k, v)| k.as_str() != TIED && **v > 0)
            .max_by_key(|(_, v)| **v)
            .map(|(k, _)| k.as_str())
    }
}

const ORDERS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

pub fn ranking_permutations(table: &RatingsTable, systems: [&str; 3]) -> Result<PermutationCounts> {
    let known = table.conditions();
    for s in systems {
        if !known.contains(s) {
            return Err(Error::InvalidParameter(format!("unknown system {s:?}")));
        }
    }
    if systems[0] == systems[1] || systems[1] == systems[2] || systems[0] == systems[2] {
        return Err(Error::InvalidParameter("systems must be distinct".into()));
    }

    let mut out = PermutationCounts::default();
    for o in ORDERS {
        out.orderings.insert(
            format!("{}>{}>{}", systems[o[0]], systems[o[1]], systems[o[2]]),
            0,
        );
    }
    out.orderings.insert(TIED.into(), 0);
    for (i, a) in systems.iter().enumerate() {
        for (j, b) in systems.iter().enumerate() {
            if i != j {
                out.pairwise.insert(format!("{a}>{b}"), 0);
            }
        }
    }

    for scores in table.responses().values() {
        let Some(s) = systems
            .iter()
            .map(|c| scores.get(c).copied())
            .collect::<Option<Vec<u8>>>()
        else {
            out.skipped += 1;
            continue;
        };
        out.counted += 1;
        for i in 0..3 {
            for j in 0..3 {
                if s[i] > s[j] {
                    *out.pairwise.get_mut(&format!("{}>{}", systems[i], systems[j])).unwrap() += 1;
                }
            }
        }
        let key = if s[0] == s[1] || s[1] == s[2] || s[0] == s[2] {
            TIED.to_owned()
        } else {
            let o = ORDERS
                .iter()
                .find(|o| s[o[0]] > s[o[1]] && s[o[1]] > s[o[2]])
                .expect("distinct scores have a strict order");
            format!("{}>{}>{}", systems[o[0]], systems[o[1]], systems[o[2]])
        };
        *out.orderings.get_mut(&key).unwrap() += 1;
    }
    Ok(out)
}
