use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SupervisedScoring,
    KnowledgeMulticriteria,
    ContentBased,
    Collaborative,
    ClusterFirst,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::SupervisedScoring => "supervised_scoring",
            Algorithm::KnowledgeMulticriteria => "knowledge_multicriteria",
            Algorithm::ContentBased => "content_based",
            Algorithm::Collaborative => "collaborative",
            Algorithm::ClusterFirst => "cluster_first",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What the available data supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DataCharacteristics {
    pub has_performance_labels: bool,
    pub profiles_complete: bool,
    pub has_interaction_history: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmChoice {
    pub chosen: Algorithm,
    pub reason: String,
}

/// Decision table, first match wins:
/// labels → supervised scoring; complete profiles → knowledge-based
/// multi-criteria; interaction history → collaborative; otherwise cluster the
/// suppliers first. Content-based similarity is a secondary re-ranker and is
/// never the primary choice.
pub fn select_algorithm(data: DataCharacteristics) -> AlgorithmChoice {
    let (chosen, reason) = if data.has_performance_labels {
        (
            Algorithm::SupervisedScoring,
            "historical performance labels are available",
        )
    } else if data.profiles_complete {
        (
            Algorithm::KnowledgeMulticriteria,
            "supplier profiles are complete; expert weights drive the ranking",
        )
    } else if data.has_interaction_history {
        (
            Algorithm::Collaborative,
            "profiles are incomplete but order history exists",
        )
    } else {
        (
            Algorithm::ClusterFirst,
            "no labels, incomplete profiles and no history; cluster suppliers for an overview first",
        )
    };
    AlgorithmChoice {
        chosen,
        reason: reason.to_string(),
    }
}
