//! Synthetic scale-free document network.
//!
//! Nodes arrive one at a time. A new node links to `m` distinct existing
//! nodes drawn with probability proportional to `in_degree + 1`, and `m`
//! distinct existing nodes drawn proportionally to `out_degree + 1` link back
//! to it, so both degree distributions are heavy-tailed. Each node carries a
//! document whose topic is copied from one of its new neighbors with
//! probability `p_inherit`, which clusters topics along links.

use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::rng::SimRng;
use crate::{Error, Result, TICKS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UrlId(pub u32);

impl UrlId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for UrlId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Bag of words with a topic label and the virtual day it was published.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    /// `(term, count)` sorted by term, counts >= 1.
    pub terms: Vec<(u32, u32)>,
    pub topic: u16,
    pub day_stamp: u32,
}

impl Document {
    pub fn from_counts(mut terms: Vec<(u32, u32)>, topic: u16, day_stamp: u32) -> Self {
        terms.retain(|&(_, c)| c > 0);
        terms.sort_unstable_by_key(|&(t, _)| t);
        // merge duplicates
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(terms.len());
        for (t, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += c,
                _ => merged.push((t, c)),
            }
        }
        Document {
            terms: merged,
            topic,
            day_stamp,
        }
    }

    pub fn len(&self) -> u64 {
        self.terms.iter().map(|&(_, c)| u64::from(c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Per-topic term distributions of the synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    vocabulary: usize,
    doc_length: f64,
    /// Cumulative term distribution per topic, last entry 1.
    cumulative: Vec<Vec<f64>>,
}

impl TopicModel {
    pub fn sample(topics: usize, vocabulary: usize, alpha: f64, doc_length: f64, rng: &mut SimRng) -> Self {
        let gamma = Gamma::new(alpha, 1.0).expect("positive concentration");
        let cumulative = (0..topics)
            .map(|_| {
                let mut draws: Vec<f64> = (0..vocabulary).map(|_| gamma.sample(rng)).collect();
                if draws.iter().sum::<f64>() <= 0.0 {
                    // every gamma draw underflowed; fall back to one random term
                    draws[rng.random_range(0..vocabulary)] = 1.0;
                }
                cumulate(&draws)
            })
            .collect();
        TopicModel {
            vocabulary,
            doc_length,
            cumulative,
        }
    }

    pub fn topics(&self) -> usize {
        self.cumulative.len()
    }

    pub fn vocabulary(&self) -> usize {
        self.vocabulary
    }

    pub fn term_probabilities(&self, topic: usize) -> Vec<f64> {
        let cum = &self.cumulative[topic];
        let mut prev = 0.0;
        cum.iter()
            .map(|&c| {
                let p = c - prev;
                prev = c;
                p
            })
            .collect()
    }

    pub fn sample_document(&self, topic: usize, day_stamp: u32, rng: &mut SimRng) -> Document {
        let len = if self.doc_length > 0.0 {
            Poisson::new(self.doc_length).expect("positive mean").sample(rng) as usize
        } else {
            0
        };
        let cum = &self.cumulative[topic];
        let mut counts = Vec::with_capacity(len);
        for _ in 0..len {
            let u: f64 = rng.random();
            let term = cum.partition_point(|&c| c <= u).min(self.vocabulary - 1);
            counts.push((term as u32, 1));
        }
        Document::from_counts(counts, topic as u16, day_stamp)
    }
}

fn cumulate(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let partial: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    // the last partial sum is `acc` itself, so the final entry is exactly 1
    partial.iter().map(|c| c / acc).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub initial_nodes: usize,
    /// Attachment count: preferential out-links and in-links per new node.
    pub m: usize,
    pub growth_per_day: f64,
    pub topics: usize,
    pub vocabulary: usize,
    pub p_inherit: f64,
    pub doc_length: f64,
    pub dirichlet_alpha: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            initial_nodes: 3000,
            m: 4,
            growth_per_day: 50.0,
            topics: 50,
            vocabulary: 1000,
            p_inherit: 0.8,
            doc_length: 100.0,
            dirichlet_alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    m: usize,
    growth_per_day: f64,
    p_inherit: f64,
    topics: TopicModel,
    docs: Vec<Document>,
    out_edges: Vec<Vec<UrlId>>,
    in_degree: Vec<u32>,
    out_degree: Vec<u32>,
    /// Every edge in insertion order; doubles as the preferential-attachment urn.
    edges: Vec<(UrlId, UrlId)>,
    clock: u64,
}

/// Builds the seed graph at tick 0.
pub fn generate_environment(cfg: &EnvConfig, rng: &mut SimRng) -> Result<Environment> {
    if cfg.m == 0 {
        return Err(Error::invalid("attachment", "must be positive"));
    }
    if cfg.initial_nodes < cfg.m {
        return Err(Error::AttachmentCount {
            m: cfg.m,
            nodes: cfg.initial_nodes,
        });
    }
    if cfg.vocabulary < cfg.topics || cfg.topics == 0 {
        return Err(Error::invalid("vocabulary", "must be at least `topics` (> 0)"));
    }
    let topics = TopicModel::sample(cfg.topics, cfg.vocabulary, cfg.dirichlet_alpha, cfg.doc_length, rng);
    let mut env = Environment {
        m: cfg.m,
        growth_per_day: cfg.growth_per_day,
        p_inherit: cfg.p_inherit,
        topics,
        docs: Vec::with_capacity(cfg.initial_nodes),
        out_edges: Vec::with_capacity(cfg.initial_nodes),
        in_degree: Vec::with_capacity(cfg.initial_nodes),
        out_degree: Vec::with_capacity(cfg.initial_nodes),
        edges: Vec::new(),
        clock: 0,
    };
    for _ in 0..cfg.m {
        env.push_node(Vec::new(), Vec::new(), rng);
    }
    for _ in cfg.m..cfg.initial_nodes {
        env.attach_node(rng)?;
    }
    Ok(env)
}

impl Environment {
    /// An environment over explicit documents and edges, at tick 0 and
    /// without growth until [`Environment::set_growth_per_day`] is called.
    pub fn from_graph(
        topics: TopicModel,
        docs: Vec<Document>,
        edges: impl IntoIterator<Item = (UrlId, UrlId)>,
    ) -> Result<Self> {
        let n = docs.len();
        let mut env = Environment {
            m: 1,
            growth_per_day: 0.0,
            p_inherit: 0.0,
            topics,
            out_edges: vec![Vec::new(); n],
            in_degree: vec![0; n],
            out_degree: vec![0; n],
            docs,
            edges: Vec::new(),
            clock: 0,
        };
        for (s, d) in edges {
            for u in [s, d] {
                if !env.contains(u) {
                    return Err(Error::UnknownUrl(u));
                }
            }
            if s == d || env.out_edges[s.index()].contains(&d) {
                return Err(Error::invalid("edges", format!("self-loop or duplicate edge {s} {d}")));
            }
            env.add_edge(s, d);
        }
        Ok(env)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn day(&self) -> u32 {
        (self.clock / TICKS_PER_DAY) as u32
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(UrlId, UrlId)] {
        &self.edges
    }

    pub fn topic_model(&self) -> &TopicModel {
        &self.topics
    }

    pub fn attachment(&self) -> usize {
        self.m
    }

    pub fn growth_per_day(&self) -> f64 {
        self.growth_per_day
    }

    pub fn set_growth_per_day(&mut self, rate: f64) {
        self.growth_per_day = rate;
    }

    pub fn contains(&self, u: UrlId) -> bool {
        u.index() < self.docs.len()
    }

    pub fn document(&self, u: UrlId) -> Result<&Document> {
        self.docs.get(u.index()).ok_or(Error::UnknownUrl(u))
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    /// Out-link targets of `u` in insertion order.
    pub fn neighbors(&self, u: UrlId) -> Result<&[UrlId]> {
        self.out_edges
            .get(u.index())
            .map(Vec::as_slice)
            .ok_or(Error::UnknownUrl(u))
    }

    pub fn in_degree(&self, u: UrlId) -> u32 {
        self.in_degree[u.index()]
    }

    pub fn out_degree(&self, u: UrlId) -> u32 {
        self.out_degree[u.index()]
    }

    pub fn degrees(&self, direction: Direction) -> &[u32] {
        match direction {
            Direction::In => &self.in_degree,
            Direction::Out => &self.out_degree,
        }
    }

    /// Moves the clock forward without growth.
    pub fn advance_clock_to(&mut self, tick: u64) {
        self.clock = self.clock.max(tick);
    }

    /// One tick of growth: Poisson(growth_per_day / 1440) new nodes stamped
    /// with the current day, then the clock advances by one tick.
    pub fn grow(&mut self, rng: &mut SimRng) -> Vec<UrlId> {
        let rate = self.growth_per_day / TICKS_PER_DAY as f64;
        let count = if rate > 0.0 {
            Poisson::new(rate).expect("positive rate").sample(rng) as usize
        } else {
            0
        };
        let mut added = Vec::with_capacity(count);
        for _ in 0..count {
            // node count >= m after generation, so attachment cannot fail
            added.push(self.attach_node(rng).expect("graph holds at least m nodes"));
        }
        self.clock += 1;
        added
    }

    fn attach_node(&mut self, rng: &mut SimRng) -> Result<UrlId> {
        let n = self.docs.len();
        if self.m > n {
            return Err(Error::AttachmentCount { m: self.m, nodes: n });
        }
        let targets = self.draw_distinct(Direction::In, rng);
        let sources = self.draw_distinct(Direction::Out, rng);
        Ok(self.push_node(targets, sources, rng))
    }

    /// `m` distinct existing nodes with probability proportional to degree + 1.
    fn draw_distinct(&self, direction: Direction, rng: &mut SimRng) -> Vec<UrlId> {
        let n = self.docs.len();
        let e = self.edges.len();
        let mut chosen: Vec<UrlId> = Vec::with_capacity(self.m);
        while chosen.len() < self.m {
            let r = rng.random_range(0..e + n);
            let v = if r < e {
                match direction {
                    Direction::In => self.edges[r].1,
                    Direction::Out => self.edges[r].0,
                }
            } else {
                UrlId((r - e) as u32)
            };
            if !chosen.contains(&v) {
                chosen.push(v);
            }
        }
        chosen
    }

    fn push_node(&mut self, targets: Vec<UrlId>, sources: Vec<UrlId>, rng: &mut SimRng) -> UrlId {
        let u = UrlId(self.docs.len() as u32);
        let neighbors: Vec<UrlId> = targets.iter().chain(&sources).copied().collect();
        let topic = if !neighbors.is_empty() && rng.random_bool(self.p_inherit) {
            let v = neighbors[rng.random_range(0..neighbors.len())];
            usize::from(self.docs[v.index()].topic)
        } else {
            rng.random_range(0..self.topics.topics())
        };
        let doc = self.topics.sample_document(topic, self.day(), rng);
        self.docs.push(doc);
        self.out_edges.push(Vec::with_capacity(2 * self.m));
        self.in_degree.push(0);
        self.out_degree.push(0);
        for t in targets {
            self.add_edge(u, t);
        }
        for s in sources {
            self.add_edge(s, u);
        }
        u
    }

    fn add_edge(&mut self, src: UrlId, dst: UrlId) {
        debug_assert_ne!(src, dst);
        self.out_edges[src.index()].push(dst);
        self.out_degree[src.index()] += 1;
        self.in_degree[dst.index()] += 1;
        self.edges.push((src, dst));
    }

    /// Exports `src dst` lines in insertion order.
    pub fn write_edge_list(&self, mut w: impl Write) -> Result<()> {
        for (s, d) in &self.edges {
            writeln!(w, "{s} {d}")?;
        }
        Ok(())
    }

    /// Exports `id topic day_stamp` lines.
    pub fn write_node_table(&self, mut w: impl Write) -> Result<()> {
        for (i, doc) in self.docs.iter().enumerate() {
            writeln!(w, "{i} {} {}", doc.topic, doc.day_stamp)?;
        }
        Ok(())
    }

    /// Full state snapshot, sufficient to continue growing the environment.
    pub fn write_snapshot(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{SNAPSHOT_MAGIC}")?;
        writeln!(
            w,
            "params {} {:?} {:?} {} {}",
            self.m,
            self.growth_per_day,
            self.p_inherit,
            self.clock,
            self.topics.doc_length
        )?;
        writeln!(w, "topics {} {}", self.topics.topics(), self.topics.vocabulary)?;
        for cum in &self.topics.cumulative {
            write_floats(&mut w, cum)?;
        }
        writeln!(w, "nodes {}", self.docs.len())?;
        for doc in &self.docs {
            write!(w, "{} {}", doc.topic, doc.day_stamp)?;
            for (t, c) in &doc.terms {
                write!(w, " {t}:{c}")?;
            }
            writeln!(w)?;
        }
        writeln!(w, "edges {}", self.edges.len())?;
        self.write_edge_list(&mut w)?;
        Ok(())
    }

    pub fn read_snapshot(r: impl BufRead) -> Result<Self> {
        let mut lines = SnapshotLines::new(r, "environment snapshot");
        let magic = lines.next_line()?;
        if magic != SNAPSHOT_MAGIC {
            return Err(lines.error(format!("bad header `{magic}`")));
        }
        let params = lines.tagged("params", 5)?;
        let m: usize = lines.parse(&params[0])?;
        let growth_per_day: f64 = lines.parse(&params[1])?;
        let p_inherit: f64 = lines.parse(&params[2])?;
        let clock: u64 = lines.parse(&params[3])?;
        let doc_length: f64 = lines.parse(&params[4])?;
        let header = lines.tagged("topics", 2)?;
        let (t, v): (usize, usize) = (lines.parse(&header[0])?, lines.parse(&header[1])?);
        let mut cumulative = Vec::with_capacity(t);
        for _ in 0..t {
            let row = lines.floats()?;
            if row.len() != v {
                return Err(lines.error(format!("expected {v} topic weights, found {}", row.len())));
            }
            cumulative.push(row);
        }
        let n: usize = lines.value("nodes")?;
        let mut docs = Vec::with_capacity(n);
        for _ in 0..n {
            let line = lines.next_line()?;
            let mut fields = line.split_whitespace();
            let topic: u16 = lines.parse(fields.next().unwrap_or(""))?;
            let day: u32 = lines.parse(fields.next().unwrap_or(""))?;
            let mut terms = Vec::new();
            for f in fields {
                let (a, b) = f.split_once(':').ok_or_else(|| lines.error(format!("bad term `{f}`")))?;
                terms.push((lines.parse(a)?, lines.parse(b)?));
            }
            if usize::from(topic) >= t || terms.iter().any(|&(term, c): &(u32, u32)| term as usize >= v || c == 0) {
                return Err(lines.error("document out of range"));
            }
            docs.push(Document::from_counts(terms, topic, day));
        }
        let e: usize = lines.value("edges")?;
        let mut env = Environment {
            m,
            growth_per_day,
            p_inherit,
            topics: TopicModel {
                vocabulary: v,
                doc_length,
                cumulative,
            },
            out_edges: vec![Vec::new(); n],
            in_degree: vec![0; n],
            out_degree: vec![0; n],
            docs,
            edges: Vec::with_capacity(e),
            clock,
        };
        for _ in 0..e {
            let line = lines.next_line()?;
            let (a, b) = line
                .split_once(' ')
                .ok_or_else(|| lines.error("expected `src dst`"))?;
            let (s, d): (u32, u32) = (lines.parse(a)?, lines.parse(b)?);
            if s as usize >= n || d as usize >= n || s == d {
                return Err(lines.error(format!("invalid edge {s} {d}")));
            }
            env.add_edge(UrlId(s), UrlId(d));
        }
        Ok(env)
    }
}

const SNAPSHOT_MAGIC: &str = "forage-environment 1";

fn write_floats(w: &mut impl Write, values: &[f64]) -> Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            w.write_all(b" ")?;
        }
        first = false;
        write!(w, "{v:?}")?;
    }
    writeln!(w)?;
    Ok(())
}

/// Line reader shared by the text snapshot formats.
pub(crate) struct SnapshotLines<R> {
    inner: std::io::Lines<R>,
    index: usize,
    what: &'static str,
}

impl<R: BufRead> SnapshotLines<R> {
    pub(crate) fn new(r: R, what: &'static str) -> Self {
        SnapshotLines {
            inner: r.lines(),
            index: 0,
            what,
        }
    }

    pub(crate) fn error(&self, reason: impl Into<String>) -> Error {
        Error::corrupt(self.what, self.index, reason)
    }

    pub(crate) fn next_line(&mut self) -> Result<String> {
        self.index += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(self.error("unexpected end of file")),
        }
    }

    pub(crate) fn tagged(&mut self, tag: &str, fields: usize) -> Result<Vec<String>> {
        let line = self.next_line()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(tag) {
            return Err(self.error(format!("expected `{tag}` line")));
        }
        let rest: Vec<String> = parts.map(str::to_owned).collect();
        if rest.len() != fields {
            return Err(self.error(format!("`{tag}` expects {fields} fields")));
        }
        Ok(rest)
    }

    /// Single-field `tag value` line, parsed.
    pub(crate) fn value<T: std::str::FromStr>(&mut self, tag: &str) -> Result<T> {
        let field = self.tagged(tag, 1)?.remove(0);
        self.parse(&field)
    }

    /// Next line, or `None` at end of input.
    pub(crate) fn try_next_line(&mut self) -> Result<Option<String>> {
        self.index += 1;
        Ok(self.inner.next().transpose()?)
    }

    pub(crate) fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.error(format!("cannot parse `{s}`")))
    }

    pub(crate) fn floats(&mut self) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        line.split_whitespace().map(|s| self.parse(s)).collect()
    }
}

/// Degree histogram: `(degree, weight)` pairs in increasing degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bins: Vec<(u32, f64)>,
}

impl Histogram {
    /// From arbitrary non-negative weights per degree; duplicates are summed.
    pub fn from_weights(weights: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut map = std::collections::BTreeMap::new();
        for (k, w) in weights {
            *map.entry(k).or_insert(0.0) += w;
        }
        Histogram {
            bins: map.into_iter().filter(|&(_, w)| w > 0.0).collect(),
        }
    }

    pub fn bins(&self) -> &[(u32, f64)] {
        &self.bins
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// `(k, P(k))`, relative frequencies summing to 1.
    pub fn frequencies(&self) -> Vec<(u32, f64)> {
        let total: f64 = self.bins.iter().map(|&(_, w)| w).sum();
        self.bins.iter().map(|&(k, w)| (k, w / total)).collect()
    }
}

pub fn degree_histogram(env: &Environment, direction: Direction) -> Histogram {
    Histogram::from_weights(env.degrees(direction).iter().map(|&k| (k, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least squares line through `(ln k, ln P(k))` over bins with `k > 0`.
pub fn fit_power_law(h: &Histogram) -> Result<PowerLawFit> {
    let points: Vec<(f64, f64)> = h
        .frequencies()
        .into_iter()
        .filter(|&(k, p)| k > 0 && p > 0.0)
        .map(|(k, p)| (f64::from(k).ln(), p.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientBins);
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in &points {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    let slope = sxy / sxx;
    Ok(PowerLawFit {
        slope,
        intercept: mean_y - slope * mean_x,
    })
}
