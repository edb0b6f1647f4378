//! Built-in demo graphs and rule sets.
//!
//! `toy_graph` is the small video-streaming-platform graph used across tests
//! and the quickstart docs: two videos, six user accounts (two duplicated
//! real-world people), two ip addresses, two genres. `synth_config` /
//! `synth_graph` build larger seeded people/team/city graphs for the
//! benchmark suites.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gdd::{DistanceConstraint, DistanceFn, Gdd};
use crate::graph::{Edge, Node, NodeId, PropertyGraph};
use crate::pattern::GraphPattern;

/// The 12-node, 12-edge video platform graph.
///
/// Users `v3`/`v4` are the same person (shared last name, similar first
/// names); users `v10`/`v11` are the same person (shared phone, different
/// names). Ground truth is recorded in the `eid` field.
pub fn toy_graph() -> PropertyGraph {
    let nodes = vec![
        Node::new("v0", "video").with_attr("TITLE", "Midnight Run"),
        Node::new("v1", "video").with_attr("TITLE", "Tea Party"),
        Node::new("v2", "user")
            .with_eid("p2")
            .with_attr("FIRSTNAME", "Tarrant")
            .with_attr("LASTNAME", "Hightopp")
            .with_attr("PHONE", "555-0001"),
        Node::new("v3", "user")
            .with_eid("p1")
            .with_attr("FIRSTNAME", "Leese")
            .with_attr("LASTNAME", "Absolem")
            .with_attr("PHONE", "555-0104"),
        Node::new("v4", "user")
            .with_eid("p1")
            .with_attr("FIRSTNAME", "Liese")
            .with_attr("LASTNAME", "Absolem")
            .with_attr("PHONE", "555-0105"),
        Node::new("v5", "user")
            .with_eid("p5")
            .with_attr("FIRSTNAME", "Thackery")
            .with_attr("LASTNAME", "Earwicket")
            .with_attr("PHONE", "555-0002"),
        Node::new("v6", "ipaddress").with_attr("IP", "10.0.0.6"),
        Node::new("v7", "ipaddress").with_attr("IP", "10.0.0.7"),
        Node::new("v8", "genre").with_attr("NAME", "drama"),
        Node::new("v9", "genre").with_attr("NAME", "comedy"),
        Node::new("v10", "user")
            .with_eid("p3")
            .with_attr("FIRSTNAME", "Mally")
            .with_attr("LASTNAME", "Dormouse")
            .with_attr("PHONE", "555-0200"),
        Node::new("v11", "user")
            .with_eid("p3")
            .with_attr("FIRSTNAME", "Mallymkun")
            .with_attr("LASTNAME", "Gribling")
            .with_attr("PHONE", "555-0200"),
    ];
    let edge = |src: &str, label: &str, dst: &str| Edge {
        src: NodeId::from(src),
        label: label.to_string(),
        dst: NodeId::from(dst),
    };
    let edges = vec![
        edge("v0", "has", "v9"),
        edge("v1", "has", "v8"),
        edge("v2", "uses", "v6"),
        edge("v2", "watched", "v0"),
        edge("v3", "uses", "v7"),
        edge("v3", "watched", "v1"),
        edge("v4", "uses", "v7"),
        edge("v4", "watched", "v0"),
        edge("v5", "uses", "v6"),
        edge("v5", "watched", "v1"),
        edge("v10", "uses", "v7"),
        edge("v11", "uses", "v7"),
    ];
    PropertyGraph::from_parts(nodes, edges).expect("toy graph is valid")
}

/// Same graph with the `eid` ground truth stripped (matching input form).
pub fn toy_graph_unlabelled() -> PropertyGraph {
    let g = toy_graph();
    let nodes = g
        .nodes()
        .map(|n| {
            let mut c = n.clone();
            c.eid = None;
            c
        })
        .collect();
    PropertyGraph::from_parts(nodes, g.edges().to_vec()).expect("still valid")
}

/// The two-user/shared-ip pattern: `x -uses-> y <-uses- x'`.
pub fn shared_ip_pattern() -> GraphPattern {
    GraphPattern::new(
        [("x", "user"), ("x2", "user"), ("y", "ipaddress")],
        [("x", "uses", "y"), ("x2", "uses", "y")],
    )
    .expect("valid pattern")
}

/// The toy rule set: same phone, or same last name with a close first name.
pub fn toy_rules() -> Vec<Gdd> {
    let scope = shared_ip_pattern();
    let phone_rule = Gdd {
        scope: scope.clone(),
        lhs: vec![DistanceConstraint::same_attr_vc(
            "x",
            "x2",
            "PHONE",
            DistanceFn::NormalizedEdit,
            0.0,
        )],
        eid_vars: ("x".to_string(), "x2".to_string()),
        support: 1,
    };
    let name_rule = Gdd {
        scope,
        lhs: vec![
            DistanceConstraint::same_attr_vc("x", "x2", "LASTNAME", DistanceFn::NormalizedEdit, 0.25),
            DistanceConstraint::same_attr_vc("x", "x2", "FIRSTNAME", DistanceFn::NormalizedEdit, 0.30),
        ],
        eid_vars: ("x".to_string(), "x2".to_string()),
        support: 1,
    };
    vec![phone_rule, name_rule]
}

/// Knobs for the synthetic people/team/city benchmark graph.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub persons: usize,
    pub teams: usize,
    pub cities: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            persons: 1620,
            teams: 260,
            cities: 120,
            seed: 7,
        }
    }
}

const FIRST_STEMS: [&str; 24] = [
    "Alexandra", "Benedict", "Carolina", "Demetrios", "Evangelia", "Ferdinand", "Gabriella",
    "Henrietta", "Isidoros", "Jacqueline", "Konstantin", "Leopoldine", "Margarethe", "Nathaniel",
    "Octaviana", "Peregrine", "Quintilian", "Rosalinde", "Sebastiane", "Theodoric", "Valentina",
    "Wilhelmine", "Xenophonia", "Zachariah",
];

const LAST_STEMS: [&str; 24] = [
    "Abernathy", "Blackwood", "Carrington", "Dunmorrow", "Eastergate", "Fairbanks", "Galbraith",
    "Hollingsworth", "Ironfield", "Juniperson", "Kingsleigh", "Lockhart", "Montgomery",
    "Northgate", "Oakhurst", "Pemberton", "Quillfeather", "Ravensdale", "Silverstone",
    "Thornbury", "Underwood", "Vandermeer", "Westerfield", "Yellowhammer",
];

fn pick_name(rng: &mut ChaCha8Rng, stems: &[&str]) -> String {
    // Stem plus a two-digit suffix keeps every value 8+ characters long and
    // makes accidental near-duplicates across distinct people rare.
    let stem = stems.choose(rng).expect("stem pool nonempty");
    format!("{stem}{:02}", rng.random_range(0..100))
}

fn pick_phone(rng: &mut ChaCha8Rng) -> String {
    let mut digits = String::with_capacity(12);
    for i in 0..12 {
        if i == 3 || i == 7 {
            digits.push('-');
        } else {
            digits.push(char::from(b'0' + rng.random_range(0..10u8)));
        }
    }
    digits
}

fn pick_alnum(rng: &mut ChaCha8Rng, len: usize) -> String {
    const POOL: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    (0..len)
        .map(|_| char::from(POOL[rng.random_range(0..POOL.len())]))
        .collect()
}

/// Seeded people/team/city graph. Every person has an eid equal to its id, so
/// duplicates injected later share ground truth with their source node.
pub fn synth_graph(cfg: &SynthConfig) -> PropertyGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for t in 0..cfg.teams {
        nodes.push(
            Node::new(format!("t{t}"), "team").with_attr("TEAMNAME", format!("Team {t:04}")),
        );
    }
    for c in 0..cfg.cities {
        nodes.push(
            Node::new(format!("c{c}"), "city").with_attr("CITYNAME", format!("City {c:04}")),
        );
    }
    for p in 0..cfg.persons {
        let id = format!("p{p}");
        nodes.push(
            Node::new(id.clone(), "person")
                .with_eid(id.clone())
                .with_attr("FIRSTNAME", pick_name(&mut rng, &FIRST_STEMS))
                .with_attr("LASTNAME", pick_name(&mut rng, &LAST_STEMS))
                .with_attr("PHONE", pick_phone(&mut rng))
                .with_attr("USERNAME", pick_alnum(&mut rng, 12))
                .with_attr(
                    "STREET",
                    format!("{} {}", rng.random_range(1..9999), pick_name(&mut rng, &LAST_STEMS)),
                ),
        );
        let team = rng.random_range(0..cfg.teams);
        let city = rng.random_range(0..cfg.cities);
        edges.push(Edge {
            src: NodeId::from(id.clone()),
            label: "plays_for".to_string(),
            dst: NodeId::from(format!("t{team}")),
        });
        edges.push(Edge {
            src: NodeId::from(id),
            label: "born_in".to_string(),
            dst: NodeId::from(format!("c{city}")),
        });
    }
    // A sprinkle of team-city edges so walks have more than star topology.
    let mut team_ids: Vec<usize> = (0..cfg.teams).collect();
    team_ids.shuffle(&mut rng);
    for t in team_ids.into_iter().take(cfg.teams / 2) {
        let city = rng.random_range(0..cfg.cities);
        edges.push(Edge {
            src: NodeId::from(format!("t{t}")),
            label: "based_in".to_string(),
            dst: NodeId::from(format!("c{city}")),
        });
    }
    PropertyGraph::from_parts(nodes, edges).expect("synthetic graph is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_ground_truth_pairs() {
        let g = toy_graph();
        let pairs = g.eid_pairs();
        assert_eq!(pairs.len(), 2);
        assert!(pairs.contains(&(NodeId::from("v3"), NodeId::from("v4"))));
        assert!(pairs.contains(&(NodeId::from("v10"), NodeId::from("v11"))));
    }

    #[test]
    fn synth_graph_is_seeded_deterministic() {
        let cfg = SynthConfig {
            persons: 50,
            teams: 10,
            cities: 5,
            seed: 3,
        };
        let a = synth_graph(&cfg);
        let b = synth_graph(&cfg);
        assert_eq!(a.node_count(), b.node_count());
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        crate::graph::save_graph(&a, &mut buf_a, &mut Vec::new()).unwrap();
        crate::graph::save_graph(&b, &mut buf_b, &mut Vec::new()).unwrap();
        assert_eq!(buf_a, buf_b);
    }
}
