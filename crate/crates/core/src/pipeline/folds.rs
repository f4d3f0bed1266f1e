use std::collections::BTreeMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How folds are used in one cross-validation run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// k−2 training folds, one development fold, one test fold.
    Development,
    /// k−1 training folds and one development fold.
    Evaluation,
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "development" | "dev" => Ok(Protocol::Development),
            "evaluation" | "eval" => Ok(Protocol::Evaluation),
            other => Err(Error::Config(format!(
                "unknown protocol `{other}` (expected `dev` or `eval`)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldRoles {
    pub train: Vec<usize>,
    pub dev: usize,
    pub test: Option<usize>,
}

impl FoldRoles {
    /// Fold whose predictions are reported for this run.
    pub fn held_out(&self) -> usize {
        self.test.unwrap_or(self.dev)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    pub seed: u64,
    /// Instance indices of each fold, ascending.
    pub folds: Vec<Vec<usize>>,
}

impl FoldSplit {
    /// Roles for run `i`: fold `i` is held out; under the development
    /// protocol fold `i + 1` (mod k) is the development fold.
    pub fn roles(&self, i: usize, protocol: Protocol) -> FoldRoles {
        let k = self.k;
        match protocol {
            Protocol::Development => {
                let dev = (i + 1) % k;
                FoldRoles {
                    train: (0..k).filter(|&f| f != i && f != dev).collect(),
                    dev,
                    test: Some(i),
                }
            }
            Protocol::Evaluation => FoldRoles {
                train: (0..k).filter(|&f| f != i).collect(),
                dev: i,
                test: None,
            },
        }
    }

    /// Instance indices of the given folds, ascending.
    pub fn indices(&self, folds: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = folds.iter().flat_map(|&f| self.folds[f].iter().copied()).collect();
        out.sort_unstable();
        out
    }
}

/// Greedy stratified split of `labels` into `k` folds.
///
/// Instances are shuffled with `seed`, classes are processed from rarest to
/// most frequent, and every instance goes to the fold holding the fewest
/// instances of its class (ties: smaller fold, then lower fold index).
pub fn stratified_kfold<L: Ord + Clone>(labels: &[L], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::Config(format!(
            "{k} folds requested for {} instances",
            labels.len()
        )));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut groups: BTreeMap<&L, Vec<usize>> = BTreeMap::new();
    for &i in &order {
        groups.entry(&labels[i]).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    // Stable: equal-sized classes keep label order.
    groups.sort_by_key(Vec::len);

    let mut folds = vec![Vec::new(); k];
    for group in groups {
        let mut of_class = vec![0usize; k];
        for i in group {
            let target = (0..k)
                .min_by_key(|&f| (of_class[f], folds[f].len(), f))
                .expect("k >= 2");
            of_class[target] += 1;
            folds[target].push(i);
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldSplit { k, seed, folds })
}
