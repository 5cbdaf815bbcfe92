//! Ordered collections of labeled merge trees and their agreement status.

use std::collections::BTreeSet;

use crate::tree::{Label, LabeledMergeTree};

/// How the members' label domains relate to one another.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Agreement {
    /// Every member has the same label domain.
    Full,
    /// Domains differ but share at least one label.
    Partial,
    /// No label is shared by all members.
    Disagreement,
}

impl Agreement {
    pub fn as_str(self) -> &'static str {
        match self {
            Agreement::Full => "full",
            Agreement::Partial => "partial",
            Agreement::Disagreement => "disagreement",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Ensemble {
    members: Vec<LabeledMergeTree>,
}

impl Ensemble {
    pub fn new(members: Vec<LabeledMergeTree>) -> Self {
        Ensemble { members }
    }

    pub fn members(&self) -> &[LabeledMergeTree] {
        &self.members
    }

    pub fn into_members(self) -> Vec<LabeledMergeTree> {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Labels carried by every member.
    pub fn shared_labels(&self) -> BTreeSet<Label> {
        let mut it = self.members.iter();
        let Some(first) = it.next() else {
            return BTreeSet::new();
        };
        let mut shared = first.domain();
        for m in it {
            shared.retain(|l| m.labels().contains_key(l));
        }
        shared
    }

    /// An empty ensemble counts as being in full agreement.
    pub fn agreement(&self) -> Agreement {
        let full = self
            .members
            .windows(2)
            .all(|w| w[0].labels().keys().eq(w[1].labels().keys()));
        if full {
            Agreement::Full
        } else if self.shared_labels().is_empty() {
            Agreement::Disagreement
        } else {
            Agreement::Partial
        }
    }
}
