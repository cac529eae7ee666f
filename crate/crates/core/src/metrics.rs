//! Analyses computed from a [`RunLog`]: efficiency ratios, population
//! timelines and the two compartmentalization measures.
//!
//! Windows are tumbling, `[start + i·w, start + (i+1)·w)`, beginning at the
//! log's start tick and covering every recorded event.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;

use crate::environment::UrlId;
use crate::forager::{ForagerId, LifeValue};
use crate::runlog::{Event, RunLog};
use crate::Result;

/// Window width for the efficiency ratios.
pub const DEFAULT_WINDOW: u64 = 75;

/// Window width for the compartmentalization measures: 75 minutes of
/// foraging activity at 50 steps per 180 seconds. One step takes one tick,
/// so this is the number of steps, summed over all foragers, that fit in
/// such an interval.
pub const ACTIVITY_WINDOW: u64 = 1250;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPoint {
    pub window_start: u64,
    pub sent: u64,
    pub downloaded: u64,
    pub rewarded: u64,
    pub rewarded_per_sent: Option<f64>,
    pub rewarded_per_downloaded: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedPoint {
    pub window_start: u64,
    /// Contribution of each forager, in birth order.
    pub per_forager: Vec<(ForagerId, f64)>,
    /// Sum of the contributions; absent when the window has nothing to measure.
    pub total: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn window_count(log: &RunLog, width: u64) -> usize {
    assert!(width > 0, "window width must be positive");
    let start = log.header.start_tick;
    match log.events().last() {
        Some(e) if e.tick() >= start => ((e.tick() - start) / width + 1) as usize,
        _ => 0,
    }
}

fn window_of(log: &RunLog, width: u64, tick: u64) -> Option<usize> {
    tick.checked_sub(log.header.start_tick).map(|d| (d / width) as usize)
}

fn window_start(log: &RunLog, width: u64, i: usize) -> u64 {
    log.header.start_tick + i as u64 * width
}

struct Visit {
    tick: u64,
    forager: ForagerId,
    url: UrlId,
    step: u32,
}

fn visits(log: &RunLog) -> impl Iterator<Item = Visit> + '_ {
    log.events().iter().filter_map(|e| match *e {
        Event::Visit {
            tick, forager, url, step, ..
        } => Some(Visit {
            tick,
            forager,
            url,
            step,
        }),
        _ => None,
    })
}

/// Foragers in birth order (founders first, then children as they appear).
pub fn birth_order(log: &RunLog) -> Vec<ForagerId> {
    let mut order = Vec::new();
    for e in log.events() {
        match e {
            Event::Founded { forager, .. } => order.push(*forager),
            Event::Birth { children, .. } => order.extend_from_slice(children),
            _ => {}
        }
    }
    order
}

/// Rewarded/sent and rewarded/downloaded per window.
pub fn reward_ratios(log: &RunLog, width: u64) -> Vec<RatioPoint> {
    let n = window_count(log, width);
    let mut points: Vec<RatioPoint> = (0..n)
        .map(|i| RatioPoint {
            window_start: window_start(log, width, i),
            sent: 0,
            downloaded: 0,
            rewarded: 0,
            rewarded_per_sent: None,
            rewarded_per_downloaded: None,
        })
        .collect();
    for e in log.events() {
        if let Event::Visit {
            tick,
            downloaded,
            sent,
            rewarded,
            ..
        } = *e
        {
            if let Some(p) = window_of(log, width, tick).and_then(|i| points.get_mut(i)) {
                p.downloaded += u64::from(downloaded);
                p.sent += u64::from(sent);
                p.rewarded += u64::from(rewarded);
            }
        }
    }
    for p in &mut points {
        p.rewarded_per_sent = ratio(p.rewarded, p.sent);
        p.rewarded_per_downloaded = ratio(p.rewarded, p.downloaded);
    }
    points
}

/// Sample autocorrelation of `series` at `lag`; `None` if undefined.
pub fn autocorrelation(series: &[f64], lag: usize) -> Option<f64> {
    if lag >= series.len() {
        return None;
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
    if var == 0.0 {
        return None;
    }
    let cov: f64 = series.iter().zip(&series[lag..]).map(|(a, b)| (a - mean) * (b - mean)).sum();
    Some(cov / var)
}

/// Per window: for each forager, the share of distinct visited sites that
/// only this forager visited. The total is the single-visitor fraction.
pub fn single_visitor_fraction(log: &RunLog, width: u64) -> Vec<StackedPoint> {
    let order = birth_order(log);
    let n = window_count(log, width);
    let mut visitors: Vec<HashMap<UrlId, BTreeSet<ForagerId>>> = vec![HashMap::new(); n];
    for v in visits(log) {
        if let Some(w) = window_of(log, width, v.tick).and_then(|i| visitors.get_mut(i)) {
            w.entry(v.url).or_default().insert(v.forager);
        }
    }
    visitors
        .iter()
        .enumerate()
        .map(|(i, sites)| {
            let mut exclusive: HashMap<ForagerId, u64> = HashMap::new();
            for who in sites.values() {
                if who.len() == 1 {
                    *exclusive.entry(*who.first().expect("one visitor")).or_default() += 1;
                }
            }
            stacked(window_start(log, width, i), &order, &exclusive, sites.len() as u64)
        })
        .collect()
}

fn stacked(start: u64, order: &[ForagerId], counts: &HashMap<ForagerId, u64>, denominator: u64) -> StackedPoint {
    if denominator == 0 {
        return StackedPoint {
            window_start: start,
            per_forager: Vec::new(),
            total: None,
        };
    }
    let per_forager: Vec<(ForagerId, f64)> = order
        .iter()
        .filter_map(|f| counts.get(f).map(|&c| (*f, c as f64 / denominator as f64)))
        .collect();
    let total = per_forager.iter().map(|p| p.1).sum();
    StackedPoint {
        window_start: start,
        per_forager,
        total: Some(total),
    }
}

type Trajectory = (UrlId, UrlId, UrlId);

/// Per window: among two-step trajectories `u→v→w` whose start `u` was used
/// by at least two different foragers, the number of distinct trajectories
/// over the number of trajectories. A trajectory belongs to the window of
/// its first visit. Each distinct trajectory is credited to the
/// earliest-born forager that walked it.
pub fn two_step_overlap(log: &RunLog, width: u64) -> Vec<StackedPoint> {
    let order = birth_order(log);
    let rank: HashMap<ForagerId, usize> = order.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let n = window_count(log, width);
    let mut per_window: Vec<Vec<(ForagerId, Trajectory)>> = vec![Vec::new(); n];
    let mut recent: HashMap<ForagerId, Vec<Visit>> = HashMap::new();
    for v in visits(log) {
        let trail = recent.entry(v.forager).or_default();
        if v.step == 0 {
            trail.clear();
        }
        trail.push(v);
        if trail.len() > 3 {
            trail.remove(0);
        }
        if let [a, b, c] = &trail[..] {
            if b.step == a.step + 1 && c.step == b.step + 1 {
                if let Some(w) = window_of(log, width, a.tick).and_then(|i| per_window.get_mut(i)) {
                    w.push((a.forager, (a.url, b.url, c.url)));
                }
            }
        }
    }
    per_window
        .iter()
        .enumerate()
        .map(|(i, trajectories)| {
            let mut starters: HashMap<UrlId, HashSet<ForagerId>> = HashMap::new();
            for (f, t) in trajectories {
                starters.entry(t.0).or_default().insert(*f);
            }
            let restricted: Vec<&(ForagerId, Trajectory)> = trajectories
                .iter()
                .filter(|(_, t)| starters[&t.0].len() >= 2)
                .collect();
            let mut owner: BTreeMap<Trajectory, ForagerId> = BTreeMap::new();
            for (f, t) in &restricted {
                owner
                    .entry(*t)
                    .and_modify(|o| {
                        if rank.get(f) < rank.get(o) {
                            *o = *f;
                        }
                    })
                    .or_insert(*f);
            }
            let mut counts: HashMap<ForagerId, u64> = HashMap::new();
            for f in owner.values() {
                *counts.entry(*f).or_default() += 1;
            }
            stacked(window_start(log, width, i), &order, &counts, restricted.len() as u64)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Born,
    Visit,
    Split,
    Died,
}

impl Mark {
    fn as_str(self) -> &'static str {
        match self {
            Mark::Born => "born",
            Mark::Visit => "visit",
            Mark::Split => "split",
            Mark::Died => "died",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimelinePoint {
    pub tick: u64,
    pub alive: usize,
    pub forager: ForagerId,
    pub life: LifeValue,
    pub mark: Mark,
}

/// Life value of every forager from birth to split or death, with the
/// population size after each point.
pub fn population_timeline(log: &RunLog) -> Vec<TimelinePoint> {
    let birth = LifeValue::from_units(crate::population::BIRTH_LIFE);
    let mut life: BTreeMap<ForagerId, LifeValue> = BTreeMap::new();
    let mut out = Vec::new();
    for e in log.events() {
        match *e {
            Event::Founded { tick, forager, life: l } => {
                life.insert(forager, l);
                out.push((tick, forager, l, Mark::Born, life.len()));
            }
            Event::Visit { tick, forager, life: l, .. } => {
                life.insert(forager, l);
                out.push((tick, forager, l, Mark::Visit, life.len()));
            }
            Event::Birth { tick, parent, children, .. } => {
                let l = life.remove(&parent).unwrap_or(birth);
                out.push((tick, parent, l, Mark::Split, life.len()));
                for c in children {
                    life.insert(c, birth);
                    out.push((tick, c, birth, Mark::Born, life.len()));
                }
            }
            Event::Death { tick, forager } => {
                let l = life.remove(&forager).unwrap_or(LifeValue::ZERO);
                out.push((tick, forager, l, Mark::Died, life.len()));
            }
            _ => {}
        }
    }
    out.into_iter()
        .map(|(tick, forager, life, mark, alive)| TimelinePoint {
            tick,
            alive,
            forager,
            life,
            mark,
        })
        .collect()
}

/// Living population size at the start of each window.
pub fn alive_per_window(log: &RunLog, width: u64) -> Vec<usize> {
    let n = window_count(log, width);
    let mut out = vec![0usize; n];
    let mut alive = 0usize;
    let mut events = log.events().iter().peekable();
    for (i, slot) in out.iter_mut().enumerate() {
        let start = window_start(log, width, i);
        while let Some(e) = events.next_if(|e| e.tick() <= start) {
            match e {
                Event::Founded { .. } => alive += 1,
                Event::Birth { .. } => alive += 1,
                Event::Death { .. } => alive -= 1,
                _ => {}
            }
        }
        *slot = alive;
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_ratios_csv(points: &[RatioPoint], mut w: impl Write) -> Result<()> {
    writeln!(w, "window_start,rewarded_per_sent,rewarded_per_downloaded,sent,downloaded,rewarded")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            p.window_start,
            fmt_opt(p.rewarded_per_sent),
            fmt_opt(p.rewarded_per_downloaded),
            p.sent,
            p.downloaded,
            p.rewarded
        )?;
    }
    Ok(())
}

/// `window_start,value,f<id>…` with one column per forager in birth order.
pub fn write_stacked_csv(points: &[StackedPoint], order: &[ForagerId], mut w: impl Write) -> Result<()> {
    write!(w, "window_start,value")?;
    for f in order {
        write!(w, ",f{f}")?;
    }
    writeln!(w)?;
    for p in points {
        write!(w, "{},{}", p.window_start, fmt_opt(p.total))?;
        let values: HashMap<ForagerId, f64> = p.per_forager.iter().copied().collect();
        for f in order {
            write!(w, ",{}", fmt_opt(p.total.map(|_| values.get(f).copied().unwrap_or(0.0))))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_population_csv(points: &[TimelinePoint], mut w: impl Write) -> Result<()> {
    writeln!(w, "tick,alive,forager,life,mark")?;
    for p in points {
        writeln!(w, "{},{},{},{},{}", p.tick, p.alive, p.forager, p.life, p.mark.as_str())?;
    }
    Ok(())
}
