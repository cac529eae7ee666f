//! Log replays shared by the integration tests and the acceptance report.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use forage_core::forager::{ForagerId, LifeValue};
use forage_core::population::{LifeEvent, RunOutcome};
use forage_core::runlog::Event;

#[derive(Default, Debug)]
struct Ledger {
    profit: f64,
    sent: u64,
    rewarded: u64,
    sends_seen: u64,
    life: Option<LifeValue>,
}

/// Replays every forager's profit and life value from the run log alone and
/// compares them, with no tolerance, against what the run recorded.
pub fn check_ledgers(out: &RunOutcome) -> Result<usize, String> {
    let cfg = out.sim.config();
    let birth = LifeValue::from_units(100.0);
    let split = LifeValue::from_units(200.0);
    let send_cost = LifeValue::from_units(cfg.send_cost_life * cfg.cost_scale);
    let reward_gain = LifeValue::from_units(cfg.reward_life);
    let mut ledgers: BTreeMap<ForagerId, Ledger> = BTreeMap::new();
    for (i, e) in out.sim.log().events().iter().enumerate() {
        match *e {
            Event::Founded { forager, life, .. } => {
                if life != birth {
                    return Err(format!("event {i}: founder {forager} starts at {life}"));
                }
                ledgers.entry(forager).or_default().life = Some(birth);
            }
            Event::Birth { children, .. } => {
                for c in children {
                    let fresh = Ledger {
                        life: Some(birth),
                        ..Ledger::default()
                    };
                    if ledgers.insert(c, fresh).is_some() {
                        return Err(format!("event {i}: child id {c} reused"));
                    }
                }
            }
            Event::Send { forager, .. } => {
                ledgers.get_mut(&forager).ok_or(format!("event {i}: unknown sender"))?.sends_seen += 1;
            }
            Event::Visit {
                forager,
                sent,
                rewarded,
                profit,
                life,
                ..
            } => {
                let l = ledgers.get_mut(&forager).ok_or(format!("event {i}: unknown visitor"))?;
                let before = l.life.ok_or(format!("event {i}: visitor {forager} is not alive"))?;
                if before <= LifeValue::ZERO || before >= split {
                    return Err(format!("event {i}: {forager} acts with life {before}"));
                }
                let expected = before - send_cost.times(u64::from(sent)) + reward_gain.times(u64::from(rewarded));
                if life != expected {
                    return Err(format!("event {i}: {forager} life {life}, replay gives {expected}"));
                }
                l.life = Some(life);
                l.profit += profit;
                l.sent += u64::from(sent);
                l.rewarded += u64::from(rewarded);
            }
            Event::Death { forager, .. } if ledgers[&forager].life.is_none_or(|l| l > LifeValue::ZERO) => {
                return Err(format!("event {i}: {forager} died with positive life"));
            }
            _ => {}
        }
    }
    let c_minus = cfg.effective_c_minus();
    for (id, l) in &ledgers {
        let expected = cfg.c_plus * l.rewarded as f64 + c_minus * l.sent as f64;
        if l.profit != expected {
            return Err(format!("{id}: profit {} but {} rewarded, {} sent", l.profit, l.rewarded, l.sent));
        }
        if l.sends_seen != l.sent {
            return Err(format!("{id}: {} send records, visits report {}", l.sends_seen, l.sent));
        }
        let c = out.sim.center().counters(*id);
        if (c.sent, c.rewarded) != (l.sent, l.rewarded) {
            return Err(format!("{id}: reward center disagrees with the log"));
        }
    }
    for f in out.sim.foragers() {
        if Some(f.life()) != ledgers.get(&f.id()).and_then(|l| l.life) {
            return Err(format!("{}: final life {} differs from replay", f.id(), f.life()));
        }
    }
    Ok(ledgers.len())
}

/// Number of rewarded documents, each checked to be rewarded once.
pub fn check_unique_rewards(out: &RunOutcome) -> Result<usize, String> {
    let mut rewarded = HashSet::new();
    for e in out.sim.log().events() {
        if let Event::Send { doc, rewarded: true, .. } = e {
            if !rewarded.insert(*doc) {
                return Err(format!("{doc} rewarded twice"));
            }
        }
    }
    if rewarded.len() != out.sim.center().rewarded_count() {
        return Err("reward center count differs from the log".into());
    }
    Ok(rewarded.len())
}

/// Number of births, each checked for an exact halving of the parent's
/// weblog and newborns at life 100.
pub fn check_bipartitions(out: &RunOutcome) -> Result<usize, String> {
    let mut births = 0;
    for e in out.sim.life_events() {
        let LifeEvent::Birth {
            parent,
            parent_weblog,
            child_weblogs: [a, b],
            ..
        } = e
        else {
            continue;
        };
        births += 1;
        let n = parent_weblog.len();
        if (a.len(), b.len()) != (n.div_ceil(2), n / 2) {
            return Err(format!("split of {parent}: {n} -> {} + {}", a.len(), b.len()));
        }
        let key = |e: &forage_core::forager::WeblogEntry| (e.url, e.value.to_bits());
        let mut halves: Vec<_> = a.entries().iter().chain(b.entries()).map(key).collect();
        let mut whole: Vec<_> = parent_weblog.entries().iter().map(key).collect();
        halves.sort();
        whole.sort();
        let distinct: HashSet<_> = halves.iter().map(|k| k.0).collect();
        if halves != whole || distinct.len() != halves.len() {
            return Err(format!("split of {parent} does not partition its weblog"));
        }
    }
    // Newborn life values are checked by the ledger replay, which starts
    // every child at 100 and must match each of its recorded visits.
    Ok(births)
}
