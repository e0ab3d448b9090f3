//! Directed follower graph with dense re-indexing and CSR adjacency.
//!
//! Node indices are assigned by sorting the user identifiers, so the order in
//! which edges arrive never leaks into any downstream result.

mod ego;
mod stats;

pub use ego::{ego_network, EgoExport, EgoNode};
pub use stats::{
    clustering_coefficient, fit_powerlaw, graph_stats, local_clustering, powerlaw_gamma,
    DegreeCutoff, GraphStats, PowerLawFit,
};

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Compressed sparse rows: `targets[offsets[u]..offsets[u + 1]]` are the
/// neighbors of `u`, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Csr {
    /// Builds from `(row, col)` pairs already sorted by row then column.
    fn from_sorted_pairs(n: usize, pairs: impl Iterator<Item = (u32, u32)>) -> Self {
        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::new();
        for (r, c) in pairs {
            offsets[r as usize + 1] += 1;
            targets.push(c);
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Csr { offsets, targets }
    }

    fn row(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }
}

/// Immutable directed graph. An edge `u -> v` means `u` follows `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserGraph {
    ids: Vec<String>,
    index: HashMap<String, u32>,
    out: Csr,
    inc: Csr,
}

/// Undirected projection: each unordered pair appears once per endpoint.
#[derive(Debug, Clone)]
pub struct UndirectedAdjacency {
    adj: Csr,
}

impl UndirectedAdjacency {
    pub fn node_count(&self) -> usize {
        self.adj.offsets.len() - 1
    }

    /// Sorted, duplicate-free neighbor list of `u`.
    pub fn neighbors(&self, u: usize) -> &[u32] {
        self.adj.row(u)
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj.offsets[u + 1] - self.adj.offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adj.targets.len() / 2
    }
}

impl UserGraph {
    /// Builds a graph from identifier pairs. Self-loops and repeated edges are
    /// dropped. An empty endpoint is rejected with its 1-based position.
    pub fn from_edges<I, S>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        Self::from_edges_with_nodes(edges, std::iter::empty::<&str>())
    }

    /// Like [`UserGraph::from_edges`], additionally ensuring every id in
    /// `nodes` exists (as an isolated node if it has no edges).
    pub fn from_edges_with_nodes<I, S, N, T>(edges: I, nodes: N) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
        N: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let mut interner: HashMap<String, u32> = HashMap::new();
        let mut ids: Vec<String> = Vec::new();
        let mut intern = |s: &str| -> u32 {
            if let Some(&i) = interner.get(s) {
                return i;
            }
            let i = ids.len() as u32;
            ids.push(s.to_owned());
            interner.insert(s.to_owned(), i);
            i
        };
        let mut pairs = Vec::new();
        for (line, (a, b)) in edges.into_iter().enumerate() {
            let (a, b) = (a.as_ref(), b.as_ref());
            if a.is_empty() || b.is_empty() {
                return Err(Error::Parse {
                    line: line as u64 + 1,
                    message: "edge has an empty endpoint".into(),
                });
            }
            pairs.push((intern(a), intern(b)));
        }
        for n in nodes {
            let n = n.as_ref();
            if n.is_empty() {
                return Err(Error::InvalidValue("empty user id".into()));
            }
            intern(n);
        }
        Ok(Self::from_parts(ids, pairs))
    }

    /// Builds from unique identifiers and index pairs into `ids`.
    ///
    /// # Panics
    /// If `ids` contains duplicates or a pair index is out of range.
    pub fn from_parts(ids: Vec<String>, mut edges: Vec<(u32, u32)>) -> Self {
        let n = ids.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_unstable_by(|&a, &b| ids[a as usize].cmp(&ids[b as usize]));
        let mut remap = vec![0u32; n];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let mut sorted_ids: Vec<String> = Vec::with_capacity(n);
        let mut ids: Vec<Option<String>> = ids.into_iter().map(Some).collect();
        for &old in &order {
            sorted_ids.push(ids[old as usize].take().expect("each id moved once"));
        }
        for w in sorted_ids.windows(2) {
            assert!(w[0] != w[1], "duplicate user id `{}`", w[0]);
        }

        for e in edges.iter_mut() {
            *e = (remap[e.0 as usize], remap[e.1 as usize]);
        }
        edges.retain(|&(a, b)| a != b);
        edges.sort_unstable();
        edges.dedup();
        Self::from_sorted_unique(sorted_ids, &edges)
    }

    fn from_sorted_unique(ids: Vec<String>, edges: &[(u32, u32)]) -> Self {
        let n = ids.len();
        let out = Csr::from_sorted_pairs(n, edges.iter().copied());
        let mut rev: Vec<(u32, u32)> = edges.iter().map(|&(a, b)| (b, a)).collect();
        rev.sort_unstable();
        let inc = Csr::from_sorted_pairs(n, rev.into_iter());
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        UserGraph {
            ids,
            index,
            out,
            inc,
        }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, u: usize) -> &str {
        &self.ids[u]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| i as usize)
    }

    pub(crate) fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::NotFound(id.to_owned()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Followees of `u` (targets of `u`'s outgoing edges).
    pub fn out_neighbors(&self, u: usize) -> &[u32] {
        self.out.row(u)
    }

    /// Followers of `u` (sources of edges into `u`).
    pub fn in_neighbors(&self, u: usize) -> &[u32] {
        self.inc.row(u)
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.out_neighbors(u).len()
    }

    pub fn in_degree(&self, u: usize) -> usize {
        self.in_neighbors(u).len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.out_neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// All directed edges in `(src, dst)` index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v as usize)))
    }

    /// Direction-ignoring adjacency; `(a, b)` and `(b, a)` collapse to one edge.
    pub fn undirected(&self) -> UndirectedAdjacency {
        let n = self.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::with_capacity(self.edge_count() * 2);
        for u in 0..n {
            let (a, b) = (self.out_neighbors(u), self.in_neighbors(u));
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                let next = match (a.get(i), b.get(j)) {
                    (Some(&x), Some(&y)) if x == y => {
                        i += 1;
                        j += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        i += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        j += 1;
                        y
                    }
                    (Some(&x), None) => {
                        i += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        j += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                targets.push(next);
            }
            offsets.push(targets.len());
        }
        UndirectedAdjacency {
            adj: Csr { offsets, targets },
        }
    }

    /// Weakly connected component id per node, numbered by each component's
    /// smallest node index (so ids ascend with first member).
    pub fn weak_components(&self) -> Vec<u32> {
        let n = self.node_count();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(parent: &mut [u32], mut x: u32) -> u32 {
            while parent[x as usize] != x {
                let p = parent[x as usize];
                parent[x as usize] = parent[p as usize];
                x = p;
            }
            x
        }
        for (u, v) in self.edges() {
            let (ru, rv) = (find(&mut parent, u as u32), find(&mut parent, v as u32));
            if ru != rv {
                // Root at the smaller index; the root is then the component minimum.
                let (lo, hi) = if ru < rv { (ru, rv) } else { (rv, ru) };
                parent[hi as usize] = lo;
            }
        }
        let mut label = vec![u32::MAX; n];
        let mut next = 0u32;
        let mut comp = vec![0u32; n];
        for (u, c) in comp.iter_mut().enumerate() {
            let r = find(&mut parent, u as u32) as usize;
            if label[r] == u32::MAX {
                label[r] = next;
                next += 1;
            }
            *c = label[r];
        }
        comp
    }

    pub fn component_count(&self) -> usize {
        self.weak_components().iter().max().map_or(0, |&m| m as usize + 1)
    }

    /// Induced subgraph on the largest weakly connected component. Ties go to
    /// the component holding the smallest node index.
    pub fn largest_weakly_connected_component(&self) -> Result<UserGraph> {
        if self.is_empty() {
            return Err(Error::EmptyInput("graph has no nodes"));
        }
        let comp = self.weak_components();
        let count = comp.iter().max().map_or(0, |&m| m as usize + 1);
        let mut sizes = vec![0usize; count];
        for &c in &comp {
            sizes[c as usize] += 1;
        }
        // Components are numbered by minimum member, so the first maximum wins ties.
        let best = sizes
            .iter()
            .enumerate()
            .fold((0usize, 0usize), |acc, (c, &s)| if s > acc.1 { (c, s) } else { acc })
            .0 as u32;
        let keep: Vec<usize> = (0..self.node_count()).filter(|&u| comp[u] == best).collect();
        Ok(self.induced_subgraph(&keep))
    }

    /// Induced subgraph on `nodes` (given as indices; order is irrelevant).
    pub fn induced_subgraph(&self, nodes: &[usize]) -> UserGraph {
        let mut keep: Vec<usize> = nodes.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut remap = vec![u32::MAX; self.node_count()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new as u32;
        }
        let mut edges = Vec::new();
        for &u in &keep {
            for &v in self.out_neighbors(u) {
                let nv = remap[v as usize];
                if nv != u32::MAX {
                    edges.push((remap[u], nv));
                }
            }
        }
        // Old indices are sorted by id and remap is monotone, so both ids and
        // edges stay sorted.
        let ids = keep.iter().map(|&u| self.ids[u].clone()).collect();
        Self::from_sorted_unique(ids, &edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(edges: &[(&str, &str)]) -> UserGraph {
        UserGraph::from_edges(edges.iter().copied()).unwrap()
    }

    #[test]
    fn duplicate_edges_collapse() {
        let graph = g(&[("a", "b"), ("b", "c"), ("a", "b")]);
        assert_eq!(graph.node_count(), 3);
        assert_eq!(graph.edge_count(), 2);
    }

    #[test]
    fn self_loop_dropped_but_node_kept() {
        let graph = g(&[("a", "a")]);
        assert_eq!(graph.node_count(), 1);
        assert_eq!(graph.edge_count(), 0);
    }

    #[test]
    fn reciprocal_edges_both_kept() {
        let graph = g(&[("a", "b"), ("b", "a")]);
        assert_eq!(graph.edge_count(), 2);
        let a = graph.index_of("a").unwrap();
        assert_eq!(graph.in_degree(a), 1);
        assert_eq!(graph.out_degree(a), 1);
        assert_eq!(graph.undirected().edge_count(), 1);
    }

    #[test]
    fn empty_endpoint_reports_position() {
        let err = UserGraph::from_edges([("a", "b"), ("c", "")]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn lcc_picks_larger_chain() {
        let graph = g(&[("a", "b"), ("c", "d"), ("d", "e")]);
        let lcc = graph.largest_weakly_connected_component().unwrap();
        assert_eq!(lcc.ids(), &["c", "d", "e"]);
        assert_eq!(lcc.edge_count(), 2);
    }

    #[test]
    fn lcc_of_connected_graph_is_identity() {
        let graph = g(&[("a", "b"), ("c", "b"), ("c", "a")]);
        assert_eq!(graph.largest_weakly_connected_component().unwrap(), graph);
    }

    #[test]
    fn lcc_tie_goes_to_smallest_index() {
        let graph = g(&[("x", "y"), ("a", "b")]);
        let lcc = graph.largest_weakly_connected_component().unwrap();
        assert_eq!(lcc.ids(), &["a", "b"]);
    }

    #[test]
    fn lcc_of_star_with_isolated_pair() {
        let mut edges: Vec<(String, String)> =
            (0..10).map(|i| ("hub".to_string(), format!("leaf{i}"))).collect();
        edges.push(("p".into(), "q".into()));
        let graph = UserGraph::from_edges(edges.iter().map(|(a, b)| (a.as_str(), b.as_str()))).unwrap();
        let lcc = graph.largest_weakly_connected_component().unwrap();

        // BFS on the undirected projection from the hub.
        let und = graph.undirected();
        let hub = graph.index_of("hub").unwrap();
        let mut seen = vec![false; graph.node_count()];
        let mut queue = std::collections::VecDeque::from([hub]);
        seen[hub] = true;
        while let Some(u) = queue.pop_front() {
            for &v in und.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    queue.push_back(v as usize);
                }
            }
        }
        let expected: Vec<&str> = (0..graph.node_count()).filter(|&u| seen[u]).map(|u| graph.id(u)).collect();
        assert_eq!(lcc.node_count(), 11);
        assert_eq!(lcc.ids(), expected.as_slice());
    }

    #[test]
    fn lcc_rejects_empty_graph() {
        let graph = UserGraph::from_edges(std::iter::empty::<(&str, &str)>()).unwrap();
        assert!(matches!(
            graph.largest_weakly_connected_component(),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn isolated_extra_nodes_are_added() {
        let graph = UserGraph::from_edges_with_nodes([("a", "b")], ["z", "a"]).unwrap();
        assert_eq!(graph.node_count(), 3);
        assert_eq!(graph.component_count(), 2);
    }

    fn arb_edges() -> impl Strategy<Value = Vec<(u8, u8)>> {
        prop::collection::vec((0u8..20, 0u8..20), 0..60)
    }

    proptest! {
        #[test]
        fn adjacency_mirrors_edges(edges in arb_edges()) {
            let named: Vec<(String, String)> = edges.iter().map(|(a, b)| (format!("n{a}"), format!("n{b}"))).collect();
            let graph = UserGraph::from_edges(named.iter().map(|(a, b)| (a, b))).unwrap();
            for u in 0..graph.node_count() {
                for &v in graph.out_neighbors(u) {
                    prop_assert!(graph.in_neighbors(v as usize).contains(&(u as u32)));
                    prop_assert_ne!(u, v as usize);
                }
                for &v in graph.in_neighbors(u) {
                    prop_assert!(graph.has_edge(v as usize, u));
                }
                prop_assert_eq!(graph.index_of(graph.id(u)), Some(u));
            }
            let expected: std::collections::BTreeSet<_> = named.iter().filter(|(a, b)| a != b).cloned().collect();
            prop_assert_eq!(graph.edge_count(), expected.len());
        }

        #[test]
        fn insertion_order_is_irrelevant(edges in arb_edges(), rot in 0usize..60) {
            let named: Vec<(String, String)> = edges.iter().map(|(a, b)| (format!("n{a}"), format!("n{b}"))).collect();
            let mut shuffled = named.clone();
            if !shuffled.is_empty() {
                let k = rot % shuffled.len();
                shuffled.rotate_left(k);
                shuffled.reverse();
            }
            let a = UserGraph::from_edges(named.iter().map(|(a, b)| (a, b))).unwrap();
            let b = UserGraph::from_edges(shuffled.iter().map(|(a, b)| (a, b))).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn lcc_is_idempotent(edges in prop::collection::vec((0u8..30, 0u8..30), 1..40)) {
            let named: Vec<(String, String)> = edges.iter().map(|(a, b)| (format!("n{a}"), format!("n{b}"))).collect();
            let graph = UserGraph::from_edges(named.iter().map(|(a, b)| (a, b))).unwrap();
            let once = graph.largest_weakly_connected_component().unwrap();
            let twice = once.largest_weakly_connected_component().unwrap();
            prop_assert_eq!(once.component_count(), 1);
            prop_assert_eq!(once, twice);
        }
    }
}
