use forage_core::environment::{
    degree_histogram, fit_power_law, generate_environment, Direction, EnvConfig, Environment, Histogram, UrlId,
};
use forage_core::rng::{stream, Stream};
use forage_core::TICKS_PER_DAY;

fn env(nodes: usize, m: usize, seed: u64) -> Environment {
    let cfg = EnvConfig {
        initial_nodes: nodes,
        m,
        ..EnvConfig::default()
    };
    generate_environment(&cfg, &mut stream(seed, Stream::Environment)).unwrap()
}

/// Ordinary least squares through the normal equations, accumulated in a
/// different order from the library's centered formula.
fn regression_oracle(h: &Histogram) -> (f64, f64) {
    let total: f64 = h.bins().iter().map(|b| b.1).sum();
    let pts: Vec<(f64, f64)> = h
        .bins()
        .iter()
        .rev()
        .filter(|b| b.0 > 0 && b.1 > 0.0)
        .map(|&(k, w)| (f64::from(k).ln(), (w / total).ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy, sxx, sxy) = pts.iter().fold((0.0, 0.0, 0.0, 0.0), |(a, b, c, d), &(x, y)| {
        (a + x, b + y, c + x * x, d + x * y)
    });
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

#[test]
fn fit_matches_regression_oracle() {
    let e = env(2000, 3, 1);
    for dir in [Direction::In, Direction::Out] {
        let h = degree_histogram(&e, dir);
        let fit = fit_power_law(&h).unwrap();
        let (slope, intercept) = regression_oracle(&h);
        assert!((fit.slope - slope).abs() < 1e-9, "{} vs {slope}", fit.slope);
        assert!((fit.intercept - intercept).abs() < 1e-9);
    }
}

#[test]
fn default_attachment_slope_in_band() {
    for seed in 1..=5 {
        let slope = fit_power_law(&degree_histogram(&env(5000, 4, seed), Direction::In)).unwrap().slope;
        assert!((-2.3..=-1.7).contains(&slope), "seed {seed}: {slope}");
    }
}

#[test]
#[ignore = "m = 2 yields a slope near -2.37 under the least-squares fit; see README"]
fn sparse_attachment_slope_in_band() {
    let slope = fit_power_law(&degree_histogram(&env(5000, 2, 7), Direction::In)).unwrap().slope;
    assert!((-2.3..=-1.7).contains(&slope), "{slope}");
}

#[test]
fn degrees_match_adjacency() {
    let e = env(1000, 3, 9);
    let mut indeg = vec![0u32; e.len()];
    let mut seen = std::collections::HashSet::new();
    for u in 0..e.len() {
        let u = UrlId(u as u32);
        let ns = e.neighbors(u).unwrap();
        assert_eq!(ns.len() as u32, e.out_degree(u));
        for &v in ns {
            assert!(e.contains(v) && v != u);
            assert!(seen.insert((u, v)), "duplicate edge {u} {v}");
            indeg[v.index()] += 1;
        }
    }
    assert_eq!(indeg, e.degrees(Direction::In));
    let sum_in: u32 = e.degrees(Direction::In).iter().sum();
    let sum_out: u32 = e.degrees(Direction::Out).iter().sum();
    assert_eq!(sum_in as usize, e.edge_count());
    assert_eq!(sum_out as usize, e.edge_count());
}

#[test]
fn edges_join_same_topic_far_above_chance() {
    let e = env(5000, 4, 3);
    let same = e
        .edges()
        .iter()
        .filter(|(a, b)| e.document(*a).unwrap().topic == e.document(*b).unwrap().topic)
        .count();
    let frac = same as f64 / e.edge_count() as f64;
    assert!(frac >= 3.0 / 50.0, "{frac}");
}

#[test]
fn poisson_growth_concentrates() {
    let mut e = env(100, 2, 4);
    e.set_growth_per_day(1440.0);
    let before = e.len();
    let mut rng = stream(4, Stream::Simulation);
    for _ in 0..10_000 {
        e.grow(&mut rng);
    }
    let added = e.len() - before;
    assert!((9200..=10_800).contains(&added), "{added}");
    for _ in 10_000..14_400 {
        e.grow(&mut rng);
    }
    // mean 14400, sd 120
    let added = e.len() - before;
    assert!((13_920..=14_880).contains(&added), "{added}");
    assert_eq!(e.clock(), 14_400);
}

#[test]
fn desk_growth_over_two_weeks() {
    let mut e = env(500, 4, 5);
    let before = e.len();
    let mut rng = stream(5, Stream::Simulation);
    let mut last_day = 0;
    for _ in 0..14 * TICKS_PER_DAY {
        let day = e.day();
        for u in e.grow(&mut rng) {
            assert_eq!(e.document(u).unwrap().day_stamp, day);
        }
        assert!(day >= last_day);
        last_day = day;
    }
    let added = (e.len() - before) as f64;
    assert!((560.0..=840.0).contains(&added), "{added}");
}

#[test]
fn same_seed_same_bytes() {
    let snap = |seed| {
        let mut buf = Vec::new();
        env(800, 3, seed).write_snapshot(&mut buf).unwrap();
        buf
    };
    assert_eq!(snap(11), snap(11));
    assert_ne!(snap(11), snap(12));
}

#[test]
fn exports_are_line_delimited() {
    let e = env(50, 2, 2);
    let mut edges = Vec::new();
    e.write_edge_list(&mut edges).unwrap();
    let edges = String::from_utf8(edges).unwrap();
    assert_eq!(edges.lines().count(), e.edge_count());
    for (line, (s, d)) in edges.lines().zip(e.edges()) {
        assert_eq!(line, format!("{s} {d}"));
    }
    let mut nodes = Vec::new();
    e.write_node_table(&mut nodes).unwrap();
    let nodes = String::from_utf8(nodes).unwrap();
    let first: Vec<&str> = nodes.lines().next().unwrap().split(' ').collect();
    assert_eq!(first.len(), 3);
    assert_eq!(nodes.lines().count(), e.len());
}

#[test]
fn hand_built_graph_rejects_duplicates() {
    let topics = env(10, 1, 0).topic_model().clone();
    let docs = env(10, 1, 0).documents()[..3].to_vec();
    let ok = Environment::from_graph(topics.clone(), docs.clone(), [(UrlId(0), UrlId(1)), (UrlId(0), UrlId(2))]).unwrap();
    assert_eq!(ok.neighbors(UrlId(0)).unwrap(), &[UrlId(1), UrlId(2)]);
    assert!(Environment::from_graph(topics.clone(), docs.clone(), [(UrlId(0), UrlId(1)), (UrlId(0), UrlId(1))]).is_err());
    assert!(Environment::from_graph(topics, docs, [(UrlId(2), UrlId(2))]).is_err());
}
