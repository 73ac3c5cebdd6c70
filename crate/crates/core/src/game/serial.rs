//! JSON form of games: `players`, `info_sets` (id -> owner, action_count) and
//! a recursive `root`. Field and key order is fixed, so output is byte-stable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CommitmentChoice, GameBuilder, GameTree, InfoSetId, Node, NodeId, PlayerId, UtilityVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfoSetDoc {
    pub owner: PlayerId,
    pub action_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<InfoSetId>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub commitment: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameDoc {
    pub players: usize,
    pub info_sets: BTreeMap<InfoSetId, InfoSetDoc>,
    pub root: NodeDoc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub label: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<CommitmentChoice>,
    pub child: NodeDoc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeDoc {
    Decision {
        owner: PlayerId,
        info_set: InfoSetId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        commitment_for: Option<PlayerId>,
        actions: Vec<EdgeDoc>,
    },
    Leaf {
        utilities: UtilityVector,
    },
}

impl GameTree {
    pub fn to_doc(&self) -> GameDoc {
        let info_sets = self
            .info_sets()
            .iter()
            .map(|(&id, s)| {
                let commitment = self
                    .decision(s.members[0])
                    .is_some_and(|d| d.commitment.is_some());
                let base = if commitment || s.base == Some(id) { None } else { s.base };
                (
                    id,
                    InfoSetDoc {
                        owner: s.owner,
                        action_count: s.labels.len(),
                        base,
                        commitment,
                    },
                )
            })
            .collect();
        GameDoc {
            players: self.players(),
            info_sets,
            root: self.node_doc(self.root()),
        }
    }

    fn node_doc(&self, v: NodeId) -> NodeDoc {
        match self.node(v) {
            Node::Leaf(u) => NodeDoc::Leaf {
                utilities: u.clone(),
            },
            Node::Decision(d) => NodeDoc::Decision {
                owner: d.owner,
                info_set: d.info_set,
                commitment_for: d.commitment.as_ref().map(|_| d.owner),
                actions: d
                    .actions
                    .iter()
                    .enumerate()
                    .map(|(i, e)| EdgeDoc {
                        label: e.label,
                        cut: d.commitment.as_ref().map(|c| c[i].clone()),
                        child: self.node_doc(e.child),
                    })
                    .collect(),
            },
        }
    }

    pub fn from_doc(doc: &GameDoc) -> Result<GameTree> {
        let mut b = GameBuilder::new();
        for (&id, s) in &doc.info_sets {
            if s.commitment {
                b.set_base(id, None);
            } else if let Some(base) = s.base {
                b.set_base(id, Some(base));
            }
        }
        let root = add_doc(&mut b, &doc.root);
        let tree = b.finish(root, doc.players);
        tree.validate().into_result()?;
        for (&id, s) in &doc.info_sets {
            let actual = tree.info_set(id).ok_or_else(|| {
                Error::Serialization(format!("information set {id} has no nodes"))
            })?;
            if actual.owner != s.owner || actual.labels.len() != s.action_count {
                return Err(Error::Serialization(format!(
                    "information set {id} header disagrees with its nodes"
                )));
            }
        }
        Ok(tree)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("game documents serialize")
    }

    pub fn from_json(text: &str) -> Result<GameTree> {
        let doc: GameDoc =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        GameTree::from_doc(&doc)
    }
}

fn add_doc(b: &mut GameBuilder, doc: &NodeDoc) -> NodeId {
    match doc {
        NodeDoc::Leaf { utilities } => b.leaf(utilities.clone()),
        NodeDoc::Decision {
            owner,
            info_set,
            commitment_for,
            actions,
        } => {
            let edges: Vec<_> = actions
                .iter()
                .map(|e| (e.label, add_doc(b, &e.child)))
                .collect();
            if commitment_for.is_some() {
                let choices = actions
                    .iter()
                    .map(|e| {
                        e.cut.clone().unwrap_or(CommitmentChoice {
                            name: String::new(),
                            kept: BTreeMap::new(),
                        })
                    })
                    .collect();
                b.commitment(*owner, *info_set, edges, choices)
            } else {
                b.decision(*owner, *info_set, edges)
            }
        }
    }
}
