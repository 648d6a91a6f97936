//! Graph algorithms over unit-length directed graphs.
//!
//! Everything here is generic over an ordered node key so the same code
//! serves influence maps (keyed by [`NodeId`]), ends-means maps (keyed by
//! [`LiteralKey`]) and value trees (keyed by tree node ids). Iteration is
//! always in key order, which keeps every result deterministic.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::model::{EndsMeansMap, LiteralKey, NodeId, ValueCognitiveMap};

/// Default ceiling on the number of elementary cycles enumerated.
pub const DEFAULT_CYCLE_CEILING: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("empty graph")]
    EmptyGraph,
    #[error("node not in graph: {0}")]
    NodeNotInGraph(String),
    #[error("more than {ceiling} elementary cycles")]
    TooManyCycles { ceiling: usize },
    #[error("orphan node {0}: not reachable from the root")]
    Orphan(String),
}

/// Directed graph with adjacency kept in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph<K> {
    succ: BTreeMap<K, BTreeSet<K>>,
    pred: BTreeMap<K, BTreeSet<K>>,
}

impl<K: Ord + Clone + fmt::Display> Digraph<K> {
    pub fn new(
        nodes: impl IntoIterator<Item = K>,
        arcs: impl IntoIterator<Item = (K, K)>,
    ) -> Result<Self, GraphError> {
        let mut g = Digraph {
            succ: BTreeMap::new(),
            pred: BTreeMap::new(),
        };
        for n in nodes {
            g.add_node(n);
        }
        for (a, b) in arcs {
            for end in [&a, &b] {
                if !g.contains(end) {
                    return Err(GraphError::NodeNotInGraph(end.to_string()));
                }
            }
            g.add_arc(a, b);
        }
        Ok(g)
    }

    pub fn add_node(&mut self, n: K) {
        self.succ.entry(n.clone()).or_default();
        self.pred.entry(n).or_default();
    }

    /// Adds the arc, creating missing endpoints. Returns false if already present.
    pub fn add_arc(&mut self, a: K, b: K) -> bool {
        self.add_node(a.clone());
        self.add_node(b.clone());
        self.pred.get_mut(&b).unwrap().insert(a.clone());
        self.succ.get_mut(&a).unwrap().insert(b)
    }

    pub fn remove_arc(&mut self, a: &K, b: &K) -> bool {
        let removed = self.succ.get_mut(a).is_some_and(|s| s.remove(b));
        if removed {
            self.pred.get_mut(b).unwrap().remove(a);
        }
        removed
    }

    pub fn remove_node(&mut self, n: &K) {
        if let Some(out) = self.succ.remove(n) {
            for m in out {
                self.pred.get_mut(&m).unwrap().remove(n);
            }
        }
        if let Some(inc) = self.pred.remove(n) {
            for m in inc {
                self.succ.get_mut(&m).unwrap().remove(n);
            }
        }
    }

    pub fn contains(&self, n: &K) -> bool {
        self.succ.contains_key(n)
    }

    pub fn has_arc(&self, a: &K, b: &K) -> bool {
        self.succ.get(a).is_some_and(|s| s.contains(b))
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &K> {
        self.succ.keys()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (&K, &K)> {
        self.succ
            .iter()
            .flat_map(|(a, out)| out.iter().map(move |b| (a, b)))
    }

    pub fn arc_count(&self) -> usize {
        self.succ.values().map(BTreeSet::len).sum()
    }

    pub fn successors(&self, n: &K) -> impl Iterator<Item = &K> {
        self.succ.get(n).into_iter().flatten()
    }

    pub fn predecessors(&self, n: &K) -> impl Iterator<Item = &K> {
        self.pred.get(n).into_iter().flatten()
    }

    pub fn out_degree(&self, n: &K) -> usize {
        self.succ.get(n).map_or(0, BTreeSet::len)
    }

    pub fn in_degree(&self, n: &K) -> usize {
        self.pred.get(n).map_or(0, BTreeSet::len)
    }

    fn require(&self, n: &K) -> Result<(), GraphError> {
        if self.contains(n) {
            Ok(())
        } else {
            Err(GraphError::NodeNotInGraph(n.to_string()))
        }
    }

    /// Weak components, each sorted, ordered by smallest member.
    pub fn weak_components(&self) -> Vec<Vec<K>> {
        let mut seen: BTreeSet<&K> = BTreeSet::new();
        let mut components = Vec::new();
        for start in self.nodes() {
            if !seen.insert(start) {
                continue;
            }
            let mut component = vec![start.clone()];
            let mut queue = VecDeque::from([start]);
            while let Some(n) = queue.pop_front() {
                for m in self.successors(n).chain(self.predecessors(n)) {
                    if seen.insert(m) {
                        component.push(m.clone());
                        queue.push_back(m);
                    }
                }
            }
            component.sort();
            components.push(component);
        }
        components
    }

    pub fn is_weakly_connected(&self) -> Result<bool, GraphError> {
        if self.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        Ok(self.weak_components().len() == 1)
    }

    /// Unit-length distances from `from` to every node it reaches.
    pub fn distances_from(&self, from: &K) -> Result<BTreeMap<K, usize>, GraphError> {
        self.require(from)?;
        Ok(bfs(from, |n| self.successors(n)))
    }

    /// Unit-length distances to `to` from every node that reaches it.
    pub fn distances_to(&self, to: &K) -> Result<BTreeMap<K, usize>, GraphError> {
        self.require(to)?;
        Ok(bfs(to, |n| self.predecessors(n)))
    }

    /// Number of arcs on a shortest directed path, or `None` without one.
    pub fn shortest_path_length(&self, from: &K, to: &K) -> Result<Option<usize>, GraphError> {
        self.require(to)?;
        Ok(self.distances_from(from)?.get(to).copied())
    }

    /// A shortest directed path; ties broken towards smaller keys.
    pub fn shortest_path(&self, from: &K, to: &K) -> Result<Option<Path<K>>, GraphError> {
        self.require(from)?;
        self.require(to)?;
        let mut parent: BTreeMap<&K, &K> = BTreeMap::new();
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            if n == to {
                let mut nodes = vec![to.clone()];
                let mut cur = to;
                while let Some(p) = parent.get(cur) {
                    nodes.push((*p).clone());
                    cur = p;
                }
                nodes.reverse();
                return Ok(Some(Path(nodes)));
            }
            for m in self.successors(n) {
                if seen.insert(m) {
                    parent.insert(m, n);
                    queue.push_back(m);
                }
            }
        }
        Ok(None)
    }

    pub fn sinks(&self) -> BTreeSet<K> {
        self.succ
            .iter()
            .filter(|(_, out)| out.is_empty())
            .map(|(n, _)| n.clone())
            .collect()
    }

    pub fn sources(&self) -> BTreeSet<K> {
        self.pred
            .iter()
            .filter(|(_, inc)| inc.is_empty())
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Kahn's algorithm, smallest ready key first. `None` when cyclic.
    pub fn topological_order(&self) -> Option<Vec<K>> {
        let mut indegree: BTreeMap<&K, usize> =
            self.nodes().map(|n| (n, self.in_degree(n))).collect();
        let mut ready: BTreeSet<&K> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(n) = ready.pop_first() {
            order.push(n.clone());
            for m in self.successors(n) {
                let d = indegree.get_mut(m).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(m);
                }
            }
        }
        (order.len() == self.len()).then_some(order)
    }

    /// Some directed cycle, rotated to start at its smallest node.
    pub fn find_cycle(&self) -> Option<Vec<K>> {
        let mut indegree: BTreeMap<&K, usize> =
            self.nodes().map(|n| (n, self.in_degree(n))).collect();
        let mut ready: Vec<&K> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| *n)
            .collect();
        while let Some(n) = ready.pop() {
            indegree.remove(n);
            for m in self.successors(n) {
                if let Some(d) = indegree.get_mut(m) {
                    *d -= 1;
                    if *d == 0 {
                        ready.push(m);
                    }
                }
            }
        }
        // every remaining node has a remaining predecessor, so walking
        // backwards must revisit a node
        let mut cur = *indegree.keys().next()?;
        let mut walk: Vec<&K> = Vec::new();
        let mut pos: BTreeMap<&K, usize> = BTreeMap::new();
        while !pos.contains_key(cur) {
            pos.insert(cur, walk.len());
            walk.push(cur);
            cur = self
                .predecessors(cur)
                .find(|p| indegree.contains_key(p))
                .unwrap();
        }
        let mut cycle: Vec<K> = walk[pos[cur]..].iter().rev().map(|n| (*n).clone()).collect();
        let min = cycle.iter().enumerate().min_by(|a, b| a.1.cmp(b.1)).unwrap().0;
        cycle.rotate_left(min);
        Some(cycle)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Every elementary directed cycle, once each.
    ///
    /// A cycle is listed as its node sequence starting at its smallest node;
    /// the arc from the last node back to the first is implied. Cycles are
    /// ordered by smallest node, then length, then node sequence. Fails once
    /// more than `ceiling` cycles have been found.
    pub fn elementary_cycles(&self, ceiling: usize) -> Result<Vec<Vec<K>>, GraphError> {
        let mut cycles: Vec<Vec<K>> = Vec::new();
        for start in self.nodes() {
            let mut path: Vec<&K> = vec![start];
            let mut on_path: BTreeSet<&K> = BTreeSet::from([start]);
            let mut stack: Vec<Vec<&K>> = vec![self.successors(start).collect()];
            while let Some(frontier) = stack.last_mut() {
                let Some(next) = frontier.pop() else {
                    stack.pop();
                    on_path.remove(path.pop().unwrap());
                    continue;
                };
                if next == start {
                    cycles.push(path.iter().map(|n| (*n).clone()).collect());
                    if cycles.len() > ceiling {
                        return Err(GraphError::TooManyCycles { ceiling });
                    }
                } else if next > start && on_path.insert(next) {
                    path.push(next);
                    stack.push(self.successors(next).collect());
                }
            }
        }
        cycles.sort_by(|a, b| {
            a[0].cmp(&b[0])
                .then(a.len().cmp(&b.len()))
                .then_with(|| a.cmp(b))
        });
        Ok(cycles)
    }
}

fn bfs<'a, K, I>(start: &'a K, next: impl Fn(&'a K) -> I) -> BTreeMap<K, usize>
where
    K: Ord + Clone + 'a,
    I: Iterator<Item = &'a K>,
{
    let mut dist = BTreeMap::from([(start.clone(), 0)]);
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((n, d)) = queue.pop_front() {
        for m in next(n) {
            if !dist.contains_key(m) {
                dist.insert(m.clone(), d + 1);
                queue.push_back((m, d + 1));
            }
        }
    }
    dist
}

/// A directed path with distinct nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path<K>(Vec<K>);

impl<K: Ord + Clone + fmt::Display> Path<K> {
    /// Checks distinctness and that consecutive nodes are linked in `g`.
    pub fn new(nodes: Vec<K>, g: &Digraph<K>) -> Option<Self> {
        let distinct = nodes.iter().collect::<BTreeSet<_>>().len() == nodes.len();
        let linked = nodes.windows(2).all(|w| g.has_arc(&w[0], &w[1]));
        (!nodes.is_empty() && distinct && linked).then_some(Path(nodes))
    }

    pub fn nodes(&self) -> &[K] {
        &self.0
    }

    /// Number of nodes on the path.
    pub fn node_count(&self) -> usize {
        self.0.len()
    }

    /// Unit-length path length, one less than the node count.
    pub fn length(&self) -> usize {
        self.0.len() - 1
    }
}

pub fn influence_graph(vcm: &ValueCognitiveMap) -> Result<Digraph<NodeId>, GraphError> {
    Digraph::new(
        vcm.nodes().iter().map(|n| n.id.clone()),
        vcm.arcs().iter().map(|a| (a.from.clone(), a.to.clone())),
    )
}

pub fn ends_means_graph(emm: &EndsMeansMap) -> Result<Digraph<LiteralKey>, GraphError> {
    Digraph::new(emm.literal_keys().cloned(), emm.arcs().iter().cloned())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("node {0} has no directed path to the fundamental value")]
    Unreachable(NodeId),
}

/// Shortest directed path length from `node` to the fundamental value.
pub fn rank(vcm: &ValueCognitiveMap, node: &NodeId) -> Result<usize, RankError> {
    let g = influence_graph(vcm)?;
    if !g.contains(node) {
        return Err(GraphError::NodeNotInGraph(node.to_string()).into());
    }
    g.distances_to(vcm.fundamental())?
        .get(node)
        .copied()
        .ok_or_else(|| RankError::Unreachable(node.clone()))
}

/// Ranks of every node, computed with one backward search.
pub fn ranks(vcm: &ValueCognitiveMap) -> Result<BTreeMap<NodeId, usize>, GraphError> {
    influence_graph(vcm)?.distances_to(vcm.fundamental())
}

/// Distance of every literal from the fundamental value along end-to-mean arcs.
pub fn layer_assignment(emm: &EndsMeansMap) -> Result<BTreeMap<LiteralKey, usize>, GraphError> {
    let g = ends_means_graph(emm)?;
    let layers = g.distances_from(emm.fundamental())?;
    if let Some(orphan) = g.nodes().find(|n| !layers.contains_key(n)) {
        return Err(GraphError::Orphan(orphan.to_string()));
    }
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(nodes: &[&'static str], arcs: &[(&'static str, &'static str)]) -> Digraph<&'static str> {
        Digraph::new(nodes.iter().copied(), arcs.iter().copied()).unwrap()
    }

    #[test]
    fn weak_connectivity() {
        assert!(g(&["a"], &[]).is_weakly_connected().unwrap());
        assert!(!g(&["a", "b", "c"], &[("a", "b")]).is_weakly_connected().unwrap());
        assert!(g(&["a", "b", "c"], &[("a", "b"), ("c", "b")])
            .is_weakly_connected()
            .unwrap());
        assert_eq!(
            g(&[], &[]).is_weakly_connected(),
            Err(GraphError::EmptyGraph)
        );
    }

    #[test]
    fn shortest_paths() {
        let chain = g(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        assert_eq!(chain.shortest_path_length(&"a", &"a").unwrap(), Some(0));
        assert_eq!(chain.shortest_path_length(&"a", &"c").unwrap(), Some(2));
        assert_eq!(chain.shortest_path_length(&"c", &"a").unwrap(), None);
        assert!(matches!(
            chain.shortest_path_length(&"a", &"z"),
            Err(GraphError::NodeNotInGraph(_))
        ));
        let p = chain.shortest_path(&"a", &"c").unwrap().unwrap();
        assert_eq!(p.nodes(), &["a", "b", "c"]);
        assert_eq!(p.node_count(), 3);
        assert_eq!(p.length(), 2);
    }

    #[test]
    fn path_rejects_repeats_and_gaps() {
        let cyc = g(&["a", "b"], &[("a", "b"), ("b", "a")]);
        assert!(Path::new(vec!["a", "b", "a"], &cyc).is_none());
        assert!(Path::new(vec!["a", "b"], &cyc).is_some());
        let chain = g(&["a", "b", "c"], &[("a", "b")]);
        assert!(Path::new(vec!["a", "c"], &chain).is_none());
    }

    #[test]
    fn sinks() {
        assert_eq!(
            g(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).sinks(),
            BTreeSet::from(["c"])
        );
        assert!(g(&["a", "b"], &[("a", "b"), ("b", "a")]).sinks().is_empty());
    }

    #[test]
    fn cycles() {
        let dag = g(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")]);
        assert!(dag.elementary_cycles(10).unwrap().is_empty());
        let two = g(&["a", "b"], &[("a", "b"), ("b", "a")]);
        assert_eq!(two.elementary_cycles(10).unwrap(), vec![vec!["a", "b"]]);
        let k3 = g(
            &["a", "b", "c"],
            &[("a", "b"), ("b", "a"), ("b", "c"), ("c", "b"), ("a", "c"), ("c", "a")],
        );
        // 3 two-cycles and 2 oriented triangles
        let found = k3.elementary_cycles(10).unwrap();
        assert_eq!(
            found,
            vec![
                vec!["a", "b"],
                vec!["a", "c"],
                vec!["a", "b", "c"],
                vec!["a", "c", "b"],
                vec!["b", "c"],
            ]
        );
        assert_eq!(
            k3.elementary_cycles(4),
            Err(GraphError::TooManyCycles { ceiling: 4 })
        );
    }

    #[test]
    fn topological_order_matches_acyclicity() {
        let dag = g(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        assert_eq!(dag.topological_order(), Some(vec!["a", "b", "c"]));
        let cyc = g(&["a", "b"], &[("a", "b"), ("b", "a")]);
        assert_eq!(cyc.topological_order(), None);
        assert_eq!(cyc.find_cycle(), Some(vec!["a", "b"]));
        assert_eq!(dag.find_cycle(), None);
        let tail = g(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "b")]);
        assert_eq!(tail.find_cycle(), Some(vec!["b", "c", "d"]));
    }

    #[test]
    fn rank_on_chain() {
        use crate::model::{InfluenceArc, Node};
        let vcm = ValueCognitiveMap::new(
            vec![Node::new("a", "a"), Node::new("b", "b"), Node::new("o", "o")],
            vec![InfluenceArc::positive("a", "b"), InfluenceArc::positive("b", "o")],
            "o",
        );
        assert_eq!(rank(&vcm, &"o".into()).unwrap(), 0);
        assert_eq!(rank(&vcm, &"a".into()).unwrap(), 2);
        assert!(rank(&vcm, &"zz".into()).is_err());
    }

    #[test]
    fn layers_on_chain() {
        use crate::model::ValueLiteral;
        let lit = |s: &str| ValueLiteral::new(LiteralKey::affirmed(s), s);
        let emm = EndsMeansMap::new(
            [lit("o"), lit("x"), lit("y")],
            [
                (LiteralKey::affirmed("o"), LiteralKey::affirmed("x")),
                (LiteralKey::affirmed("x"), LiteralKey::affirmed("y")),
            ],
            LiteralKey::affirmed("o"),
        );
        let layers = layer_assignment(&emm).unwrap();
        assert_eq!(layers[&LiteralKey::affirmed("o")], 0);
        assert_eq!(layers[&LiteralKey::affirmed("y")], 2);

        let orphaned = EndsMeansMap::new(
            [lit("o"), lit("x"), lit("y")],
            [
                (LiteralKey::affirmed("o"), LiteralKey::affirmed("x")),
                (LiteralKey::affirmed("y"), LiteralKey::affirmed("x")),
            ],
            LiteralKey::affirmed("o"),
        );
        assert_eq!(
            layer_assignment(&orphaned),
            Err(GraphError::Orphan("y".into()))
        );
    }
}
