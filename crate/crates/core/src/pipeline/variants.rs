use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VARIANT_NAMES: [&str; 8] = [
    "cnn.rand",
    "cnn.wiki-w2v",
    "cnn.acl-w2v",
    "cnn.multi.rand",
    "cnn.multi.wiki-w2v",
    "cnn.multi.acl-w2v",
    "cnn.multi.wiki-w2v.rand",
    "cnn.multi.acl-w2v.rand",
];

/// Initialization of one embedding channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSet {
    Random,
    Wiki,
    Acl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelPlan {
    pub init: EmbeddingSet,
    pub trainable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub name: String,
    pub channels: Vec<ChannelPlan>,
}

impl VariantSpec {
    /// Embedding sets the variant reads from disk.
    pub fn pretrained_sets(&self) -> Vec<EmbeddingSet> {
        let mut sets: Vec<EmbeddingSet> = self
            .channels
            .iter()
            .map(|c| c.init)
            .filter(|&s| s != EmbeddingSet::Random)
            .collect();
        sets.dedup();
        sets
    }
}

impl FromStr for VariantSpec {
    type Err = Error;

    fn from_str(name: &str) -> Result<Self> {
        use EmbeddingSet::*;
        let single = |init| vec![ChannelPlan { init, trainable: true }];
        let multi = |first, second| {
            vec![
                ChannelPlan {
                    init: first,
                    trainable: false,
                },
                ChannelPlan {
                    init: second,
                    trainable: true,
                },
            ]
        };
        let channels = match name {
            "cnn.rand" => single(Random),
            "cnn.wiki-w2v" => single(Wiki),
            "cnn.acl-w2v" => single(Acl),
            "cnn.multi.rand" => multi(Random, Random),
            "cnn.multi.wiki-w2v" => multi(Wiki, Wiki),
            "cnn.multi.acl-w2v" => multi(Acl, Acl),
            "cnn.multi.wiki-w2v.rand" => multi(Wiki, Random),
            "cnn.multi.acl-w2v.rand" => multi(Acl, Random),
            other => {
                return Err(Error::Config(format!(
                    "unknown variant `{other}`; valid variants: {}",
                    VARIANT_NAMES.join(", ")
                )))
            }
        };
        Ok(VariantSpec {
            name: name.to_owned(),
            channels,
        })
    }
}

impl fmt::Display for VariantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}
