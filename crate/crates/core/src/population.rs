//! Sequential scheduling, life-value accounting, bipartition and extinction.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::RunConfig;
use crate::environment::{generate_environment, Environment, SnapshotLines, UrlId};
use crate::forager::{Forager, ForagerId, ForagerParams, Weblog, WeblogEntry, WeightVector, World};
use crate::reward::RewardCenter;
use crate::rng::{stream, substream, SimRng, Stream};
use crate::runlog::{Event, RunLog, RunStatus};
use crate::textmodel::{bootstrap, Classifier, StateTable};
use crate::{Error, Result, TICKS_PER_DAY};

pub use crate::forager::LifeValue;

/// Life value of every newborn forager.
pub const BIRTH_LIFE: f64 = 100.0;
/// Life value at which a forager splits.
pub const SPLIT_LIFE: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub enum LifeEvent {
    Birth {
        tick: u64,
        parent: ForagerId,
        children: [ForagerId; 2],
        parent_weblog: Weblog,
        child_weblogs: [Weblog; 2],
    },
    Death {
        tick: u64,
        forager: ForagerId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PeriodReport {
    pub period: u64,
    pub steps: u64,
    pub alive: usize,
    pub births: usize,
    pub deaths: usize,
}

/// Splits a weblog uniformly at random into halves of sizes ⌈n/2⌉ and ⌊n/2⌋.
pub fn split_weblog(weblog: &Weblog, rng: &mut SimRng) -> (Weblog, Weblog) {
    let mut entries: Vec<WeblogEntry> = weblog.entries().to_vec();
    entries.shuffle(rng);
    let cut = entries.len().div_ceil(2);
    let second = entries.split_off(cut);
    let limit = weblog.len();
    (Weblog::from_entries(entries, limit), Weblog::from_entries(second, limit))
}

/// `count` distinct URLs drawn with probability proportional to in-degree.
fn hub_weblog(env: &Environment, count: usize, rng: &mut SimRng) -> Weblog {
    let count = count.min(env.len());
    let edges = env.edges();
    let mut chosen: Vec<UrlId> = Vec::with_capacity(count);
    let mut seen = HashSet::new();
    // nodes without in-links can never be drawn from the edge urn
    let reachable = env.degrees(crate::environment::Direction::In).iter().filter(|&&d| d > 0).count();
    while chosen.len() < count {
        let u = if chosen.len() < reachable {
            edges[rng.random_range(0..edges.len())].1
        } else {
            UrlId(rng.random_range(0..env.len()) as u32)
        };
        if seen.insert(u) {
            chosen.push(u);
        }
    }
    Weblog::from_entries(chosen.into_iter().map(|url| WeblogEntry { url, value: 0.0 }), usize::MAX)
}

pub struct Simulation {
    cfg: RunConfig,
    params: ForagerParams,
    env: Environment,
    classifier: Classifier,
    states: StateTable,
    center: RewardCenter,
    foragers: Vec<Forager>,
    rng: SimRng,
    log: RunLog,
    life_events: Vec<LifeEvent>,
    next_id: u32,
    period: u64,
    end_tick: u64,
    status: Option<RunStatus>,
    ended: bool,
}

impl Simulation {
    /// Generates the environment, bootstraps the classifier and founds the
    /// population.
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let env = generate_environment(&cfg.env_config(), &mut stream(cfg.seed, Stream::Environment))?;
        let model = bootstrap(
            env.topic_model(),
            cfg.bootstrap_docs,
            cfg.background_docs,
            cfg.clusters,
            &mut stream(cfg.seed, Stream::Bootstrap),
        )?;
        Self::from_parts(cfg, env, model.classifier)
    }

    /// Starts a run on a pre-built environment and classifier at the
    /// environment's current tick.
    pub fn from_parts(cfg: &RunConfig, env: Environment, classifier: Classifier) -> Result<Self> {
        cfg.validate()?;
        if classifier.vocabulary() != env.topic_model().vocabulary() {
            return Err(Error::DimensionMismatch {
                expected: env.topic_model().vocabulary(),
                found: classifier.vocabulary(),
            });
        }
        if env.is_empty() {
            return Err(Error::EmptyCorpus("environment has no nodes"));
        }
        let start = env.clock();
        let end_tick = start + cfg.virtual_days * TICKS_PER_DAY;
        let states = StateTable::build(&env, &classifier);
        let mut rng = stream(cfg.seed, Stream::Simulation);
        let mut log = RunLog::new(cfg.seed, start, end_tick);
        let params = cfg.forager_params();
        let birth = LifeValue::from_units(BIRTH_LIFE);
        let mut foragers = Vec::with_capacity(cfg.founders);
        for i in 0..cfg.founders {
            let id = ForagerId(i as u32);
            let weblog = hub_weblog(&env, cfg.start_points, &mut rng);
            let f = Forager::new(id, WeightVector::zeros(classifier.k()), weblog, birth, substream(&mut rng));
            log.push(Event::Founded {
                tick: start,
                forager: id,
                life: birth,
            });
            foragers.push(f);
        }
        Ok(Simulation {
            cfg: cfg.clone(),
            params,
            center: RewardCenter::new(cfg.c_plus, cfg.effective_c_minus()),
            env,
            classifier,
            states,
            foragers,
            rng,
            log,
            life_events: Vec::new(),
            next_id: cfg.founders as u32,
            period: 0,
            end_tick,
            status: None,
            ended: false,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn classifier(&self) -> &Classifier {
        &self.classifier
    }

    pub fn center(&self) -> &RewardCenter {
        &self.center
    }

    pub fn foragers(&self) -> &[Forager] {
        &self.foragers
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn life_events(&self) -> &[LifeEvent] {
        &self.life_events
    }

    pub fn clock(&self) -> u64 {
        self.env.clock()
    }

    pub fn end_tick(&self) -> u64 {
        self.end_tick
    }

    pub fn status(&self) -> Option<RunStatus> {
        self.status
    }

    /// Overrides the per-forager step budget of later periods.
    pub fn set_step_budget(&mut self, budget: usize) {
        self.cfg.step_budget = budget;
    }

    /// Replaces the life value of a forager; lets callers stage lifecycle
    /// situations directly.
    pub fn set_life(&mut self, id: ForagerId, life: LifeValue) -> Result<()> {
        let f = self
            .foragers
            .iter_mut()
            .find(|f| f.id() == id)
            .ok_or(Error::NoForagers)?;
        f.set_life(life);
        Ok(())
    }

    fn running(&self) -> bool {
        self.status.is_none() && self.env.clock() < self.end_tick
    }

    /// One foraging period: every forager alive at its start runs, in order,
    /// for up to `step_budget` steps. The world grows by one tick per step.
    pub fn run_period(&mut self) -> Result<PeriodReport> {
        if self.foragers.is_empty() {
            return Err(Error::NoForagers);
        }
        let order: Vec<ForagerId> = self.foragers.iter().map(Forager::id).collect();
        let mut report = PeriodReport {
            period: self.period,
            ..PeriodReport::default()
        };
        let split = LifeValue::from_units(SPLIT_LIFE);
        for id in order {
            if !self.running() {
                break;
            }
            let Some(idx) = self.foragers.iter().position(|f| f.id() == id) else {
                continue;
            };
            let forager = &mut self.foragers[idx];
            for _ in 0..self.cfg.step_budget {
                if self.env.clock() >= self.end_tick {
                    break;
                }
                let mut world = World {
                    env: &self.env,
                    states: &self.states,
                    center: &mut self.center,
                    log: &mut self.log,
                };
                forager.step(&mut world, &self.params)?;
                report.steps += 1;
                if !self.env.grow(&mut self.rng).is_empty() {
                    self.states.extend(&self.env, &self.classifier);
                }
                let life = forager.life();
                if life >= split || life <= LifeValue::ZERO {
                    break;
                }
            }
            let events = self.settle_lifecycle()?;
            for e in &events {
                match e {
                    LifeEvent::Birth { .. } => report.births += 1,
                    LifeEvent::Death { .. } => report.deaths += 1,
                }
            }
        }
        report.alive = self.foragers.len();
        if report.steps > 0 || self.foragers.is_empty() {
            self.log.push(Event::Period {
                tick: self.env.clock(),
                period: self.period,
                alive: report.alive,
                steps: report.steps,
            });
            self.period += 1;
        }
        if self.status.is_some() {
            self.close_log();
        }
        Ok(report)
    }

    /// Splits every forager at or above the split value and removes every
    /// forager at or below zero. Children take their parent's place in the
    /// scheduling order.
    pub fn settle_lifecycle(&mut self) -> Result<Vec<LifeEvent>> {
        let tick = self.env.clock();
        let split = LifeValue::from_units(SPLIT_LIFE);
        let birth = LifeValue::from_units(BIRTH_LIFE);
        let mut events = Vec::new();
        let mut next = Vec::with_capacity(self.foragers.len() + 2);
        for f in std::mem::take(&mut self.foragers) {
            if f.life() <= LifeValue::ZERO {
                self.log.push(Event::Death { tick, forager: f.id() });
                events.push(LifeEvent::Death { tick, forager: f.id() });
            } else if f.life() >= split {
                let (a, b) = split_weblog(f.weblog(), &mut self.rng);
                let ids = [ForagerId(self.next_id), ForagerId(self.next_id + 1)];
                self.next_id += 2;
                self.log.push(Event::Birth {
                    tick,
                    parent: f.id(),
                    children: ids,
                    weblog_sizes: [a.len(), b.len()],
                });
                events.push(LifeEvent::Birth {
                    tick,
                    parent: f.id(),
                    children: ids,
                    parent_weblog: f.weblog().clone(),
                    child_weblogs: [a.clone(), b.clone()],
                });
                for (id, weblog) in ids.into_iter().zip([a, b]) {
                    next.push(Forager::new(id, f.weights().clone(), weblog, birth, substream(&mut self.rng)));
                }
            } else {
                next.push(f);
            }
        }
        self.foragers = next;
        if self.foragers.is_empty() && self.status.is_none() {
            self.status = Some(RunStatus::Extinct);
        }
        self.life_events.extend(events.iter().cloned());
        Ok(events)
    }

    /// Runs periods until the configured duration elapses or the population
    /// dies out.
    pub fn run(&mut self) -> Result<RunStatus> {
        while self.running() {
            let report = self.run_period()?;
            if report.steps == 0 {
                break;
            }
        }
        let status = *self.status.get_or_insert(RunStatus::Completed);
        self.close_log();
        Ok(status)
    }

    /// Appends the end record once the outcome is known.
    fn close_log(&mut self) {
        if let (false, Some(status)) = (self.ended, self.status) {
            self.log.push(Event::End {
                tick: self.env.clock(),
                status,
            });
            self.ended = true;
        }
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }

    /// Final population: ids, life values, weights and weblogs.
    pub fn write_state(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "forage-state 1")?;
        writeln!(w, "tick {}", self.env.clock())?;
        writeln!(w, "foragers {}", self.foragers.len())?;
        for f in &self.foragers {
            writeln!(w, "forager {} {}", f.id(), f.life())?;
            let weights: Vec<String> = f.weights().as_slice().iter().map(|x| format!("{x:?}")).collect();
            writeln!(w, "{}", weights.join(" "))?;
            writeln!(w, "weblog {}", f.weblog().len())?;
            for e in f.weblog().entries() {
                writeln!(w, "{} {:?}", e.url, e.value)?;
            }
        }
        Ok(())
    }
}

/// Population state as written by [`Simulation::write_state`].
#[derive(Debug, Clone, PartialEq)]
pub struct SavedForager {
    pub id: ForagerId,
    pub life: LifeValue,
    pub weights: WeightVector,
    pub weblog: Weblog,
}

pub fn read_state(r: impl BufRead) -> Result<(u64, Vec<SavedForager>)> {
    let mut lines = SnapshotLines::new(r, "state");
    let magic = lines.next_line()?;
    if magic != "forage-state 1" {
        return Err(lines.error(format!("bad header `{magic}`")));
    }
    let tick = lines.value("tick")?;
    let n: usize = lines.value("foragers")?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let head = lines.tagged("forager", 2)?;
        let id = ForagerId(lines.parse(&head[0])?);
        let life = head[1].parse::<LifeValue>().map_err(|e| lines.error(e))?;
        let weights = WeightVector::from_vec(lines.floats()?);
        let len: usize = lines.value("weblog")?;
        let mut entries = Vec::with_capacity(len);
        for _ in 0..len {
            let line = lines.next_line()?;
            let (u, v) = line.split_once(' ').ok_or_else(|| lines.error("bad weblog entry"))?;
            entries.push(WeblogEntry {
                url: UrlId(lines.parse(u)?),
                value: lines.parse(v)?,
            });
        }
        out.push(SavedForager {
            id,
            life,
            weights,
            weblog: Weblog::from_entries(entries, usize::MAX),
        });
    }
    Ok((tick, out))
}

/// Result of a complete run.
pub struct RunOutcome {
    pub status: RunStatus,
    pub sim: Simulation,
}

/// Builds everything from `cfg` and runs to completion or extinction.
pub fn simulate(cfg: &RunConfig) -> Result<RunOutcome> {
    let mut sim = Simulation::new(cfg)?;
    let status = sim.run()?;
    Ok(RunOutcome { status, sim })
}
