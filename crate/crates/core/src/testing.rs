//! Test support: random inputs, a random decision provider and brute-force
//! reference implementations of the graph algorithms.
//!
//! Only compiled with the `testing` feature.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decisions::{
    AnswerSource, Decider, DecisionError, DecisionKind, DecisionProvider, DecisionRequest, Reply,
};
use crate::emm::{build_ends_means_map, EmmTrace};
use crate::graph::{Digraph, DEFAULT_CYCLE_CEILING};
use crate::io::MapDocument;
use crate::model::{
    EndsMeansMap, InfluenceArc, LiteralKey, Node, Sign, ValueCognitiveMap, ValueLiteral, ValueTree,
};
use crate::pipeline::Outcome;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn node_id(i: usize) -> String {
    format!("n{i:02}")
}

fn sign(rng: &mut impl Rng) -> Sign {
    if rng.gen_bool(0.5) {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

/// A valid value cognitive map with `n` nodes; `n00` is the fundamental.
///
/// Every other node gets one arc to an earlier node, so all of them reach
/// the fundamental, then up to `n` extra arcs of random sign are added
/// between non-fundamental tails and any head. Cycles are allowed.
pub fn random_vcm(rng: &mut impl Rng, n: usize) -> ValueCognitiveMap {
    assert!(n >= 2);
    let nodes: Vec<Node> = (0..n)
        .map(|i| Node::new(node_id(i), format!("valuing v{i}")))
        .collect();
    let mut pairs: BTreeMap<(usize, usize), Sign> = BTreeMap::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        pairs.insert((i, j), sign(rng));
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let i = rng.gen_range(1..n);
        let j = rng.gen_range(0..n);
        if i != j && !pairs.contains_key(&(i, j)) {
            pairs.insert((i, j), sign(rng));
        }
    }
    let arcs = pairs
        .into_iter()
        .map(|((i, j), s)| InfluenceArc::new(node_id(i), node_id(j), s))
        .collect();
    ValueCognitiveMap::new(nodes, arcs, node_id(0))
}

/// A valid ends-means map over `n` affirmed literals: a random rooted DAG
/// with arcs only from lower to higher index.
pub fn random_emm(rng: &mut impl Rng, n: usize, extra: usize) -> EndsMeansMap {
    assert!(n >= 1);
    let literals: Vec<ValueLiteral> = (0..n)
        .map(|i| ValueLiteral::new(LiteralKey::affirmed(node_id(i)), format!("valuing v{i}")))
        .collect();
    let mut arcs = BTreeSet::new();
    for i in 1..n {
        arcs.insert((rng.gen_range(0..i), i));
    }
    for _ in 0..extra {
        if n < 3 {
            break;
        }
        let j = rng.gen_range(2..n);
        let i = rng.gen_range(1..j);
        arcs.insert((i, j));
    }
    EndsMeansMap::new(
        literals,
        arcs.into_iter().map(|(i, j)| {
            (
                LiteralKey::affirmed(node_id(i)),
                LiteralKey::affirmed(node_id(j)),
            )
        }),
        LiteralKey::affirmed(node_id(0)),
    )
}

/// `k` independent two-cycles that tie on distance, hung off one
/// fundamental value `o`: each gadget has `a_i` and `b_i` both influencing
/// `o` and each other.
pub fn tied_gadgets(k: usize) -> ValueCognitiveMap {
    let mut nodes = vec![Node::new("o", "valuing o")];
    let mut arcs = Vec::new();
    for i in 0..k {
        let (a, b) = (format!("a{i}"), format!("b{i}"));
        nodes.push(Node::new(a.as_str(), format!("valuing {a}")));
        nodes.push(Node::new(b.as_str(), format!("valuing {b}")));
        arcs.push(InfluenceArc::positive(a.as_str(), "o"));
        arcs.push(InfluenceArc::positive(b.as_str(), "o"));
        arcs.push(InfluenceArc::positive(a.as_str(), b.as_str()));
        arcs.push(InfluenceArc::positive(b.as_str(), a.as_str()));
    }
    ValueCognitiveMap::new(nodes, arcs, "o")
}

/// Answers every request at random: a random option, or for merge labels
/// the suggested default.
pub struct RandomProvider<R> {
    rng: R,
}

impl<R: Rng> RandomProvider<R> {
    pub fn new(rng: R) -> Self {
        RandomProvider { rng }
    }
}

impl<R: Rng> DecisionProvider for RandomProvider<R> {
    fn next_answer(&mut self, request: &DecisionRequest) -> Result<Reply, DecisionError> {
        let answer = match request.kind {
            DecisionKind::MergeLabel => request
                .default
                .clone()
                .unwrap_or_else(|| "merged".to_string()),
            _ => request
                .options
                .choose(&mut self.rng)
                .cloned()
                .ok_or_else(|| DecisionError::Unanswered(request.id.clone()))?,
        };
        Ok(Reply::Answer(answer, AnswerSource::Script))
    }
}

/// Shortest distances from `from`, by enumerating every simple path.
pub fn brute_distances(g: &Digraph<usize>, from: usize) -> BTreeMap<usize, usize> {
    fn walk(
        g: &Digraph<usize>,
        at: usize,
        depth: usize,
        on_path: &mut Vec<bool>,
        best: &mut BTreeMap<usize, usize>,
    ) {
        let e = best.entry(at).or_insert(depth);
        if depth < *e {
            *e = depth;
        }
        for &next in g.successors(&at) {
            if !on_path[next] {
                on_path[next] = true;
                walk(g, next, depth + 1, on_path, best);
                on_path[next] = false;
            }
        }
    }
    let size = g.nodes().max().map_or(0, |m| m + 1);
    let mut on_path = vec![false; size];
    on_path[from] = true;
    let mut best = BTreeMap::new();
    walk(g, from, 0, &mut on_path, &mut best);
    best
}

/// Every elementary cycle, rotated to start at its least node.
pub fn brute_cycles(g: &Digraph<usize>) -> BTreeSet<Vec<usize>> {
    fn walk(
        g: &Digraph<usize>,
        start: usize,
        path: &mut Vec<usize>,
        out: &mut BTreeSet<Vec<usize>>,
    ) {
        let at = *path.last().expect("nonempty");
        for &next in g.successors(&at) {
            if next == start {
                out.insert(canonical_cycle(path));
            } else if !path.contains(&next) {
                path.push(next);
                walk(g, start, path, out);
                path.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    for &s in g.nodes() {
        walk(g, s, &mut vec![s], &mut out);
    }
    out
}

pub fn canonical_cycle<K: Ord + Clone>(cycle: &[K]) -> Vec<K> {
    let pivot = (0..cycle.len())
        .min_by(|&a, &b| cycle[a].cmp(&cycle[b]))
        .unwrap_or(0);
    cycle[pivot..]
        .iter()
        .chain(&cycle[..pivot])
        .cloned()
        .collect()
}

/// The digraph on `0..n` whose arc set is given by the bits of `mask`, one
/// bit per ordered pair of distinct nodes.
pub fn digraph_from_mask(n: usize, mask: u64) -> Digraph<usize> {
    let mut arcs = Vec::new();
    let mut bit = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                if mask >> bit & 1 == 1 {
                    arcs.push((i, j));
                }
                bit += 1;
            }
        }
    }
    Digraph::new(0..n, arcs).expect("endpoints in range")
}

pub fn random_digraph(rng: &mut impl Rng, n: usize, density: f64) -> Digraph<usize> {
    let arcs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .filter(|_| rng.gen_bool(density))
        .collect();
    Digraph::new(0..n, arcs).expect("endpoints in range")
}

/// Answers from a fixed list in order, then suspends. Drives exhaustive
/// enumeration of decision scripts.
pub struct ScriptPrefix {
    answers: Vec<String>,
    position: usize,
}

impl ScriptPrefix {
    pub fn new(answers: Vec<String>) -> Self {
        ScriptPrefix {
            answers,
            position: 0,
        }
    }
}

impl DecisionProvider for ScriptPrefix {
    fn next_answer(&mut self, _: &DecisionRequest) -> Result<Reply, DecisionError> {
        Ok(match self.answers.get(self.position) {
            Some(a) => {
                self.position += 1;
                Reply::Answer(a.clone(), AnswerSource::Script)
            }
            None => Reply::Suspend,
        })
    }
}

/// Result of running every possible decision script on one map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptEnumeration {
    /// Distinct final maps, as canonical JSON.
    pub outcomes: BTreeSet<String>,
    /// Completed scripts.
    pub scripts: usize,
    /// Option counts of the questions along each completed script.
    pub option_counts: BTreeSet<Vec<usize>>,
}

/// Run the ends-means stage under every sequence of answers.
pub fn enumerate_emm_scripts(vcm: &ValueCognitiveMap) -> Result<ScriptEnumeration, String> {
    let mut out = ScriptEnumeration {
        outcomes: BTreeSet::new(),
        scripts: 0,
        option_counts: BTreeSet::new(),
    };
    let mut stack: Vec<(Vec<String>, Vec<usize>)> = vec![(Vec::new(), Vec::new())];
    while let Some((prefix, counts)) = stack.pop() {
        let mut provider = ScriptPrefix::new(prefix.clone());
        let mut decider = Decider::new(&mut provider);
        match build_ends_means_map(vcm, &mut decider, DEFAULT_CYCLE_CEILING) {
            Err(e) => return Err(e.to_string()),
            Ok(Outcome::Pending(r)) => {
                if r.options.is_empty() {
                    return Err(format!("{} has no options to enumerate", r.id));
                }
                for o in &r.options {
                    let mut p = prefix.clone();
                    p.push(o.clone());
                    let mut c = counts.clone();
                    c.push(r.options.len());
                    stack.push((p, c));
                }
            }
            Ok(Outcome::Complete((emm, _))) => {
                let json = MapDocument::from_ends_means_map(&emm)
                    .to_json()
                    .map_err(|e| e.to_string())?;
                out.outcomes.insert(json);
                out.scripts += 1;
                out.option_counts.insert(counts);
            }
        }
    }
    Ok(out)
}

/// The structural claims about an ends-means map built from `vcm`: wave
/// bound, a single source that is the fundamental, no loops or cycles, and
/// weak connectivity.
pub fn check_emm_properties(
    vcm: &ValueCognitiveMap,
    emm: &EndsMeansMap,
    trace: &EmmTrace,
) -> Result<(), String> {
    let bound = vcm.nodes().len() + vcm.arcs().len();
    if trace.waves() > bound {
        return Err(format!("{} waves exceed the bound {bound}", trace.waves()));
    }
    let root = LiteralKey::affirmed(vcm.fundamental().clone());
    if emm.fundamental() != &root {
        return Err(format!("fundamental is {}", emm.fundamental().id()));
    }
    let mut indegree: BTreeMap<&LiteralKey, usize> = emm.literal_keys().map(|k| (k, 0)).collect();
    for (end, mean) in emm.arcs() {
        if end == mean {
            return Err(format!("loop at {}", end.id()));
        }
        match indegree.get_mut(mean) {
            Some(d) => *d += 1,
            None => return Err(format!("arc to unknown literal {}", mean.id())),
        }
        if !indegree.contains_key(end) {
            return Err(format!("arc from unknown literal {}", end.id()));
        }
    }
    let sources: Vec<&&LiteralKey> = indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| k).collect();
    if sources != [&&root] {
        let ids: Vec<String> = sources.iter().map(|k| k.id()).collect();
        return Err(format!("sources are {ids:?}, expected only {}", root.id()));
    }

    // Kahn's algorithm: every literal must be removable.
    let mut remaining = indegree.clone();
    let mut ready: Vec<&LiteralKey> = vec![&root];
    let mut removed = 0;
    while let Some(k) = ready.pop() {
        removed += 1;
        for (end, mean) in emm.arcs() {
            if end == k {
                let d = remaining.get_mut(mean).expect("known literal");
                *d -= 1;
                if *d == 0 {
                    ready.push(mean);
                }
            }
        }
    }
    if removed != emm.len() {
        return Err(format!("cycle among {} literals", emm.len() - removed));
    }

    // Acyclic with one source means everything hangs off the root, which
    // is stronger than weak connectivity; check it directly anyway.
    let mut seen = BTreeSet::from([&root]);
    let mut frontier = vec![&root];
    while let Some(k) = frontier.pop() {
        for (a, b) in emm.arcs() {
            for (x, y) in [(a, b), (b, a)] {
                if x == k && seen.insert(y) {
                    frontier.push(y);
                }
            }
        }
    }
    if seen.len() != emm.len() {
        return Err("not weakly connected".into());
    }
    Ok(())
}

/// Arborescence check independent of the validator: one root, one parent
/// for every other node, and every node reachable from the root.
pub fn check_arborescence(tree: &ValueTree) -> Result<(), String> {
    let mut parents: BTreeMap<&str, usize> = tree.nodes().map(|n| (n.id.as_str(), 0)).collect();
    for (p, c) in tree.arcs() {
        if !parents.contains_key(p.as_str()) {
            return Err(format!("arc from unknown node {p}"));
        }
        match parents.get_mut(c.as_str()) {
            Some(n) => *n += 1,
            None => return Err(format!("arc to unknown node {c}")),
        }
    }
    let roots: Vec<&str> = parents.iter().filter(|(_, n)| **n == 0).map(|(id, _)| *id).collect();
    if roots != [tree.root()] {
        return Err(format!("roots {roots:?}, expected {}", tree.root()));
    }
    if let Some((id, n)) = parents.iter().find(|(_, n)| **n > 1) {
        return Err(format!("{id} has {n} parents"));
    }
    let mut seen = BTreeSet::from([tree.root()]);
    let mut frontier = vec![tree.root()];
    while let Some(at) = frontier.pop() {
        for (p, c) in tree.arcs() {
            if p == at && seen.insert(c.as_str()) {
                frontier.push(c.as_str());
            }
        }
    }
    if seen.len() != tree.len() {
        return Err(format!("{} nodes unreachable from the root", tree.len() - seen.len()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::{validate_emm, validate_vcm};

    #[test]
    fn generators_produce_valid_maps() {
        let mut r = rng(7);
        for n in 2..10 {
            let vcm = random_vcm(&mut r, n);
            assert!(validate_vcm(&vcm).is_valid(), "{}", validate_vcm(&vcm));
            let emm = random_emm(&mut r, n, n);
            assert!(validate_emm(&emm).is_valid(), "{}", validate_emm(&emm));
        }
        assert!(validate_vcm(&tied_gadgets(2)).is_valid());
    }

    #[test]
    fn brute_cycles_of_a_triangle() {
        let g = Digraph::new(0..3, [(0, 1), (1, 2), (2, 0), (1, 0)]).unwrap();
        let c = brute_cycles(&g);
        assert_eq!(c, BTreeSet::from([vec![0, 1], vec![0, 1, 2]]));
    }

    #[test]
    fn mask_enumerates_all_arcs() {
        assert_eq!(digraph_from_mask(3, 0b111111).arc_count(), 6);
        assert_eq!(digraph_from_mask(3, 0).arc_count(), 0);
    }
}
