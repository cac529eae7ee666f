//! Central reward unit.
//!
//! Every submission costs `c_minus`. The first sender of a document whose
//! day stamp is at most one day old also receives `c_plus`; the document is
//! then recorded and never rewarded again.

use std::collections::{BTreeMap, HashSet};

use crate::environment::UrlId;
use crate::forager::ForagerId;
use crate::TICKS_PER_DAY;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub sent: u64,
    pub rewarded: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubmissionOutcome {
    pub profit: f64,
    pub rewarded: bool,
}

#[derive(Debug, Clone)]
pub struct RewardCenter {
    c_plus: f64,
    c_minus: f64,
    rewarded_docs: HashSet<UrlId>,
    per_forager: BTreeMap<ForagerId, Counters>,
    global: Counters,
}

/// True iff a document stamped `doc_day` is at most one day old at `now`.
pub fn is_fresh(doc_day: u32, now: u64) -> bool {
    let published = u64::from(doc_day) * TICKS_PER_DAY;
    now.saturating_sub(published) <= TICKS_PER_DAY
}

impl RewardCenter {
    pub fn new(c_plus: f64, c_minus: f64) -> Self {
        RewardCenter {
            c_plus,
            c_minus,
            rewarded_docs: HashSet::new(),
            per_forager: BTreeMap::new(),
            global: Counters::default(),
        }
    }

    pub fn submit(&mut self, forager: ForagerId, doc: UrlId, doc_day: u32, now: u64) -> SubmissionOutcome {
        let mut profit = self.c_minus;
        let rewarded = is_fresh(doc_day, now) && self.rewarded_docs.insert(doc);
        if rewarded {
            profit += self.c_plus;
        }
        let counters = self.per_forager.entry(forager).or_default();
        for c in [counters, &mut self.global] {
            c.sent += 1;
            c.rewarded += u64::from(rewarded);
        }
        SubmissionOutcome { profit, rewarded }
    }

    pub fn is_rewarded(&self, doc: UrlId) -> bool {
        self.rewarded_docs.contains(&doc)
    }

    pub fn rewarded_count(&self) -> usize {
        self.rewarded_docs.len()
    }

    pub fn counters(&self, forager: ForagerId) -> Counters {
        self.per_forager.get(&forager).copied().unwrap_or_default()
    }

    pub fn global(&self) -> Counters {
        self.global
    }

    pub fn per_forager(&self) -> &BTreeMap<ForagerId, Counters> {
        &self.per_forager
    }

    pub fn c_plus(&self) -> f64 {
        self.c_plus
    }

    pub fn c_minus(&self) -> f64 {
        self.c_minus
    }
}
