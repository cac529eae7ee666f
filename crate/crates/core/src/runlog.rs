//! Append-only event stream of a run.
//!
//! Text form: four header lines, then one event per line. The first token
//! of an event line is its kind:
//!
//! ```text
//! N tick forager life                                      founder created
//! V tick forager url step downloaded sent rewarded profit life
//! S tick forager url doc profit rewarded                   one submission
//! B tick parent child_a child_b weblog_a weblog_b          bipartition
//! D tick forager                                           death
//! P tick period alive steps                                period summary
//! X tick completed|extinct                                 end of run
//! ```
//!
//! `life` is printed with exactly six decimals and parses back exactly.

use std::fmt;
use std::io::{BufRead, Write};

use crate::environment::{SnapshotLines, UrlId};
use crate::forager::{ForagerId, LifeValue};
use crate::{Error, Result};

const MAGIC: &str = "forage-runlog 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Extinct,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Completed => "completed",
            RunStatus::Extinct => "extinct",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Founded {
        tick: u64,
        forager: ForagerId,
        life: LifeValue,
    },
    Visit {
        tick: u64,
        forager: ForagerId,
        url: UrlId,
        /// Position within the current path, 0 for the starting point.
        step: u32,
        downloaded: u32,
        sent: u32,
        rewarded: u32,
        profit: f64,
        life: LifeValue,
    },
    Send {
        tick: u64,
        forager: ForagerId,
        url: UrlId,
        doc: UrlId,
        profit: f64,
        rewarded: bool,
    },
    Birth {
        tick: u64,
        parent: ForagerId,
        children: [ForagerId; 2],
        weblog_sizes: [usize; 2],
    },
    Death {
        tick: u64,
        forager: ForagerId,
    },
    Period {
        tick: u64,
        period: u64,
        alive: usize,
        steps: u64,
    },
    End {
        tick: u64,
        status: RunStatus,
    },
}

impl Event {
    pub fn tick(&self) -> u64 {
        match *self {
            Event::Founded { tick, .. }
            | Event::Visit { tick, .. }
            | Event::Send { tick, .. }
            | Event::Birth { tick, .. }
            | Event::Death { tick, .. }
            | Event::Period { tick, .. }
            | Event::End { tick, .. } => tick,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Founded { tick, forager, life } => write!(f, "N {tick} {forager} {life}"),
            Event::Visit {
                tick,
                forager,
                url,
                step,
                downloaded,
                sent,
                rewarded,
                profit,
                life,
            } => write!(
                f,
                "V {tick} {forager} {url} {step} {downloaded} {sent} {rewarded} {profit:?} {life}"
            ),
            Event::Send {
                tick,
                forager,
                url,
                doc,
                profit,
                rewarded,
            } => write!(f, "S {tick} {forager} {url} {doc} {profit:?} {}", u8::from(*rewarded)),
            Event::Birth {
                tick,
                parent,
                children,
                weblog_sizes,
            } => write!(
                f,
                "B {tick} {parent} {} {} {} {}",
                children[0], children[1], weblog_sizes[0], weblog_sizes[1]
            ),
            Event::Death { tick, forager } => write!(f, "D {tick} {forager}"),
            Event::Period {
                tick,
                period,
                alive,
                steps,
            } => write!(f, "P {tick} {period} {alive} {steps}"),
            Event::End { tick, status } => write!(f, "X {tick} {status}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunHeader {
    pub seed: u64,
    pub version: String,
    pub start_tick: u64,
    pub end_tick: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: RunHeader,
    events: Vec<Event>,
}

impl RunLog {
    pub fn new(seed: u64, start_tick: u64, end_tick: u64) -> Self {
        RunLog {
            header: RunHeader {
                seed,
                version: env!("CARGO_PKG_VERSION").to_owned(),
                start_tick,
                end_tick,
            },
            events: Vec::new(),
        }
    }

    pub fn push(&mut self, event: Event) {
        debug_assert!(self.events.last().is_none_or(|e| e.tick() <= event.tick()));
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn status(&self) -> Option<RunStatus> {
        self.events.iter().rev().find_map(|e| match e {
            Event::End { status, .. } => Some(*status),
            _ => None,
        })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let h = &self.header;
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "seed {}", h.seed)?;
        writeln!(w, "version {}", h.version)?;
        writeln!(w, "span {} {}", h.start_tick, h.end_tick)?;
        for e in &self.events {
            writeln!(w, "{e}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut lines = SnapshotLines::new(r, "runlog");
        let magic = lines.next_line()?;
        if magic != MAGIC {
            return Err(lines.error(format!("bad header `{magic}`")));
        }
        let seed = lines.value("seed")?;
        let version = lines.tagged("version", 1)?.remove(0);
        let span = lines.tagged("span", 2)?;
        let header = RunHeader {
            seed,
            version,
            start_tick: lines.parse(&span[0])?,
            end_tick: lines.parse(&span[1])?,
        };
        let mut log = RunLog {
            header,
            events: Vec::new(),
        };
        let mut index = 0usize;
        let mut last_tick = 0u64;
        while let Some(line) = lines.try_next_line()? {
            index += 1;
            let event = parse_event(&line).map_err(|reason| Error::corrupt("runlog", index, reason))?;
            if event.tick() < last_tick {
                return Err(Error::corrupt("runlog", index, "ticks decrease"));
            }
            last_tick = event.tick();
            log.events.push(event);
        }
        Ok(log)
    }
}

fn parse_event(line: &str) -> std::result::Result<Event, String> {
    let f: Vec<&str> = line.split(' ').collect();
    fn p<T: std::str::FromStr>(s: Option<&&str>) -> std::result::Result<T, String> {
        let s = s.ok_or("missing field")?;
        s.parse().map_err(|_| format!("cannot parse `{s}`"))
    }
    let expect = |n: usize| {
        if f.len() == n {
            Ok(())
        } else {
            Err(format!("`{}` record expects {} fields, found {}", f[0], n - 1, f.len() - 1))
        }
    };
    let id = |s: Option<&&str>| p::<u32>(s).map(ForagerId);
    let url = |s: Option<&&str>| p::<u32>(s).map(UrlId);
    let life = |s: Option<&&str>| -> std::result::Result<LifeValue, String> {
        let s = s.ok_or("missing field")?;
        s.parse::<LifeValue>()
    };
    let tick: u64 = p(f.get(1))?;
    let event = match f[0] {
        "N" => {
            expect(4)?;
            Event::Founded {
                tick,
                forager: id(f.get(2))?,
                life: life(f.get(3))?,
            }
        }
        "V" => {
            expect(10)?;
            Event::Visit {
                tick,
                forager: id(f.get(2))?,
                url: url(f.get(3))?,
                step: p(f.get(4))?,
                downloaded: p(f.get(5))?,
                sent: p(f.get(6))?,
                rewarded: p(f.get(7))?,
                profit: p(f.get(8))?,
                life: life(f.get(9))?,
            }
        }
        "S" => {
            expect(7)?;
            Event::Send {
                tick,
                forager: id(f.get(2))?,
                url: url(f.get(3))?,
                doc: url(f.get(4))?,
                profit: p(f.get(5))?,
                rewarded: match f[6] {
                    "0" => false,
                    "1" => true,
                    other => return Err(format!("bad flag `{other}`")),
                },
            }
        }
        "B" => {
            expect(7)?;
            Event::Birth {
                tick,
                parent: id(f.get(2))?,
                children: [id(f.get(3))?, id(f.get(4))?],
                weblog_sizes: [p(f.get(5))?, p(f.get(6))?],
            }
        }
        "D" => {
            expect(3)?;
            Event::Death {
                tick,
                forager: id(f.get(2))?,
            }
        }
        "P" => {
            expect(5)?;
            Event::Period {
                tick,
                period: p(f.get(2))?,
                alive: p(f.get(3))?,
                steps: p(f.get(4))?,
            }
        }
        "X" => {
            expect(3)?;
            Event::End {
                tick,
                status: match f[2] {
                    "completed" => RunStatus::Completed,
                    "extinct" => RunStatus::Extinct,
                    other => return Err(format!("bad status `{other}`")),
                },
            }
        }
        other => return Err(format!("unknown record kind `{other}`")),
    };
    Ok(event)
}
