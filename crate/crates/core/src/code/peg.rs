//! Progressive edge growth over a fixed pair of degree sequences.

use std::collections::VecDeque;

use rand::seq::IndexedRandom;
use rand::Rng;

use super::CodeError;

/// Unweighted bipartite graph between `n` variable and `m` check nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    var_adj: Vec<Vec<u32>>,
    chk_adj: Vec<Vec<u32>>,
}

impl TannerGraph {
    pub fn empty(n: usize, m: usize) -> Self {
        Self {
            var_adj: vec![Vec::new(); n],
            chk_adj: vec![Vec::new(); m],
        }
    }

    /// Builds a graph from the variable indices of each check.
    pub fn from_rows(n: usize, rows: &[Vec<usize>]) -> Result<Self, CodeError> {
        let mut g = Self::empty(n, rows.len());
        for (c, row) in rows.iter().enumerate() {
            for &v in row {
                if v >= n {
                    return Err(CodeError::ColumnOutOfRange { row: c, col: v, n });
                }
                if g.has_edge(v, c) {
                    return Err(CodeError::DuplicateEntry { row: c, col: v });
                }
                g.add_edge(v, c);
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.var_adj.len()
    }

    pub fn m(&self) -> usize {
        self.chk_adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.var_adj.iter().map(Vec::len).sum()
    }

    pub fn var_neighbors(&self, v: usize) -> &[u32] {
        &self.var_adj[v]
    }

    pub fn chk_neighbors(&self, c: usize) -> &[u32] {
        &self.chk_adj[c]
    }

    pub fn var_degrees(&self) -> Vec<usize> {
        self.var_adj.iter().map(Vec::len).collect()
    }

    pub fn chk_degrees(&self) -> Vec<usize> {
        self.chk_adj.iter().map(Vec::len).collect()
    }

    fn has_edge(&self, v: usize, c: usize) -> bool {
        self.var_adj[v].contains(&(c as u32))
    }

    fn add_edge(&mut self, v: usize, c: usize) {
        self.var_adj[v].push(c as u32);
        self.chk_adj[c].push(v as u32);
    }

    /// Length of the shortest cycle, or `None` for a forest.
    pub fn girth(&self) -> Option<usize> {
        let n = self.n();
        let total = n + self.m();
        // node ids: variables 0..n, checks n..n+m
        let neighbors = |u: usize| -> Box<dyn Iterator<Item = usize> + '_> {
            if u < n {
                Box::new(self.var_adj[u].iter().map(move |&c| c as usize + n))
            } else {
                Box::new(self.chk_adj[u - n].iter().map(|&v| v as usize))
            }
        };
        let mut best = usize::MAX;
        let mut dist = vec![u32::MAX; total];
        let mut parent = vec![usize::MAX; total];
        let mut touched = Vec::new();
        let mut queue = VecDeque::new();
        for root in 0..n {
            for &t in &touched {
                dist[t] = u32::MAX;
            }
            touched.clear();
            queue.clear();
            dist[root] = 0;
            parent[root] = usize::MAX;
            touched.push(root);
            queue.push_back(root);
            'bfs: while let Some(u) = queue.pop_front() {
                let du = dist[u] as usize;
                if 2 * du + 1 >= best {
                    break;
                }
                for w in neighbors(u) {
                    if dist[w] == u32::MAX {
                        dist[w] = du as u32 + 1;
                        parent[w] = u;
                        touched.push(w);
                        queue.push_back(w);
                    } else if parent[u] != w {
                        best = best.min(du + dist[w] as usize + 1);
                        // nothing shorter exists in a simple bipartite graph
                        if best == 4 {
                            break 'bfs;
                        }
                    }
                }
            }
            if best == 4 {
                break;
            }
        }
        (best != usize::MAX).then_some(best)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let m = self.m();
        if n + m == 0 {
            return true;
        }
        let mut seen_v = vec![false; n];
        let mut seen_c = vec![false; m];
        let mut stack = Vec::new();
        let mut count = 0;
        if n > 0 {
            seen_v[0] = true;
            stack.push((true, 0usize));
        } else {
            seen_c[0] = true;
            stack.push((false, 0usize));
        }
        while let Some((is_var, u)) = stack.pop() {
            count += 1;
            if is_var {
                for &c in &self.var_adj[u] {
                    if !std::mem::replace(&mut seen_c[c as usize], true) {
                        stack.push((false, c as usize));
                    }
                }
            } else {
                for &v in &self.chk_adj[u] {
                    if !std::mem::replace(&mut seen_v[v as usize], true) {
                        stack.push((true, v as usize));
                    }
                }
            }
        }
        count == n + m
    }
}

/// Places edges one at a time, each to a check as far as possible from the
/// variable in the graph built so far.
///
/// Variables are processed in non-decreasing degree order (stable in their
/// index). A check is eligible while its degree is below the largest entry of
/// `chk_degrees`. Among the eligible checks at maximum distance (unreachable
/// ones count as infinitely far) the one with the lowest current degree wins,
/// then the one furthest below its own target, then a uniform random pick.
///
/// Individual targets are therefore soft: a check can end one edge above its
/// own target when that avoids a short cycle, but no row ever exceeds the
/// largest target. For regular targets this is exact.
pub fn peg_construct<R: Rng + ?Sized>(
    var_degrees: &[usize],
    chk_degrees: &[usize],
    rng: &mut R,
) -> Result<TannerGraph, CodeError> {
    let n = var_degrees.len();
    let m = chk_degrees.len();
    let edges: usize = var_degrees.iter().sum();
    let chk_edges: usize = chk_degrees.iter().sum();
    if edges != chk_edges {
        return Err(CodeError::EdgeCountMismatch {
            var: edges,
            chk: chk_edges,
        });
    }
    let cap = chk_degrees.iter().copied().max().unwrap_or(0);
    let mut graph = TannerGraph::empty(n, m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| var_degrees[v]);

    let mut search = PegSearch::new(n, m);
    let mut open = if cap > 0 { m } else { 0 };
    let mut candidates = Vec::new();
    let mut ties = Vec::new();
    let rank = |g: &TannerGraph, c: usize| {
        let d = g.chk_adj[c].len();
        (d, d as i64 - chk_degrees[c] as i64)
    };

    for &v in &order {
        for k in 0..var_degrees[v] {
            candidates.clear();
            if k == 0 {
                candidates.extend((0..m).filter(|&c| graph.chk_adj[c].len() < cap));
            } else {
                search.farthest(&graph, v, cap, open, &mut candidates);
            }
            let best = candidates
                .iter()
                .map(|&c| rank(&graph, c))
                .min()
                .ok_or(CodeError::PlacementImpossible { var: v, edge: k })?;
            ties.clear();
            ties.extend(candidates.iter().copied().filter(|&c| rank(&graph, c) == best));
            let &c = ties.choose(rng).expect("non-empty");
            graph.add_edge(v, c);
            if graph.chk_adj[c].len() == cap {
                open -= 1;
            }
        }
    }
    Ok(graph)
}

/// Reusable BFS state for [`peg_construct`].
struct PegSearch {
    epoch: u32,
    var_seen: Vec<u32>,
    chk_seen: Vec<u32>,
    frontier: Vec<usize>,
    next: Vec<usize>,
}

impl PegSearch {
    fn new(n: usize, m: usize) -> Self {
        Self {
            epoch: 0,
            var_seen: vec![0; n],
            chk_seen: vec![0; m],
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    /// Fills `out` with the checks below `cap` at maximum distance from `v`.
    /// Leaves `out` empty if every such check is already adjacent.
    fn farthest(&mut self, graph: &TannerGraph, v: usize, cap: usize, open: usize, out: &mut Vec<usize>) {
        self.epoch += 1;
        let epoch = self.epoch;
        let eligible = |c: usize| graph.chk_adj[c].len() < cap;

        self.var_seen[v] = epoch;
        self.frontier.clear();
        let mut reached = 0;
        for &c in &graph.var_adj[v] {
            let c = c as usize;
            self.chk_seen[c] = epoch;
            self.frontier.push(c);
            reached += eligible(c) as usize;
        }
        if reached == open {
            return;
        }
        loop {
            self.next.clear();
            for &c in &self.frontier {
                for &u in &graph.chk_adj[c] {
                    let u = u as usize;
                    if self.var_seen[u] == epoch {
                        continue;
                    }
                    self.var_seen[u] = epoch;
                    for &c2 in &graph.var_adj[u] {
                        let c2 = c2 as usize;
                        if self.chk_seen[c2] != epoch {
                            self.chk_seen[c2] = epoch;
                            self.next.push(c2);
                            reached += eligible(c2) as usize;
                        }
                    }
                }
            }
            if self.next.is_empty() {
                out.extend((0..graph.m()).filter(|&c| self.chk_seen[c] != epoch && eligible(c)));
                return;
            }
            if reached == open {
                out.extend(self.next.iter().copied().filter(|&c| eligible(c)));
                return;
            }
            std::mem::swap(&mut self.frontier, &mut self.next);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::degree::{validate_lambda, DegreeDistribution, LambdaPolicy};
    use crate::code::realize::{check_count, realize_degree_sequences};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rows_of(g: &TannerGraph) -> Vec<Vec<u32>> {
        (0..g.m())
            .map(|c| {
                let mut r = g.chk_neighbors(c).to_vec();
                r.sort_unstable();
                r
            })
            .collect()
    }

    /// Exhaustive 4-cycle check: two checks sharing two variables.
    fn has_four_cycle(g: &TannerGraph) -> bool {
        let rows = rows_of(g);
        for a in 0..rows.len() {
            for b in a + 1..rows.len() {
                let shared = rows[a].iter().filter(|v| rows[b].contains(v)).count();
                if shared >= 2 {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn degree_one_variables_form_a_forest() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = peg_construct(&[1, 1, 1, 1], &[2, 2], &mut rng).unwrap();
        assert_eq!(g.chk_degrees(), vec![2, 2]);
        assert_eq!(g.girth(), None);
    }

    #[test]
    fn small_graph_has_no_repeated_pairs() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = peg_construct(&[2; 6], &[4; 3], &mut rng).unwrap();
            assert_eq!(g.var_degrees(), vec![2; 6]);
            assert_eq!(g.chk_degrees(), vec![4; 3]);
            for v in 0..6 {
                let nb = g.var_neighbors(v);
                assert_ne!(nb[0], nb[1]);
            }
            assert!(g.girth().unwrap() >= 4);
        }
    }

    #[test]
    fn avoids_four_cycles_on_small_concentrated_codes() {
        use crate::code::degree::EdgeDistribution;
        for (dv, rate, n) in [(3usize, 0.45, 100usize), (2, 0.4, 60)] {
            let dist = DegreeDistribution::concentrated(EdgeDistribution::regular(dv), rate).unwrap();
            let lo = dist.rho().min_degree();
            let hi = dist.rho().max_degree();
            let m = check_count(n, rate).unwrap();
            for seed in 0..10 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let seq = realize_degree_sequences(&dist, n, m, &mut rng).unwrap();
                let g = peg_construct(&seq.var, &seq.chk, &mut rng).unwrap();
                assert!(!has_four_cycle(&g), "dv={dv} n={n} seed {seed}");
                assert!(g.girth().unwrap() >= 6);
                assert!(g.chk_degrees().iter().all(|&d| d >= lo && d <= hi));
            }
        }
    }

    #[test]
    fn regular_targets_are_met_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = peg_construct(&[3; 60], &[6; 30], &mut rng).unwrap();
        assert_eq!(g.chk_degrees(), vec![6; 30]);
        assert_eq!(g.var_degrees(), vec![3; 60]);
    }

    #[test]
    fn edge_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            peg_construct(&[2, 2], &[3], &mut rng),
            Err(CodeError::EdgeCountMismatch { var: 4, chk: 3 })
        ));
    }

    #[test]
    fn impossible_placement_reported() {
        // one check cannot take two edges from the same variable
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            peg_construct(&[2], &[2], &mut rng),
            Err(CodeError::PlacementImpossible { var: 0, edge: 1 })
        ));
    }

    #[test]
    fn girth_of_known_graphs() {
        // 6-cycle v0-c0-v1-c1-v2-c2-v0
        let g = TannerGraph::from_rows(3, &[vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap();
        assert_eq!(g.girth(), Some(6));
        let g = TannerGraph::from_rows(2, &[vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(g.girth(), Some(4));
        assert!(g.is_connected());
        let g = TannerGraph::from_rows(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        assert!(!g.is_connected());
        assert!(TannerGraph::from_rows(2, &[vec![0, 0]]).is_err());
        assert!(TannerGraph::from_rows(2, &[vec![0, 2]]).is_err());
    }

    #[test]
    fn table_ensemble_code_is_connected_with_girth_six() {
        let raw = [
            (2, 0.215),
            (3, 0.256),
            (5, 0.030),
            (8, 0.154),
            (12, 0.065),
            (14, 0.050),
            (22, 0.072),
            (28, 0.128),
        ];
        let lambda = validate_lambda(&raw, &LambdaPolicy::published_table(40))
            .unwrap()
            .lambda;
        let dist = DegreeDistribution::concentrated(lambda, 0.5).unwrap();
        let n = 3000;
        let m = check_count(n, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let seq = realize_degree_sequences(&dist, n, m, &mut rng).unwrap();
        let g = peg_construct(&seq.var, &seq.chk, &mut rng).unwrap();
        assert_eq!(g.var_degrees(), seq.var);
        let mut want = seq.chk.clone();
        let mut got = g.chk_degrees();
        want.sort_unstable();
        got.sort_unstable();
        assert_eq!(got, want);
        assert!(g.is_connected());
        assert!(g.girth().unwrap() >= 6, "girth {:?}", g.girth());
    }
}
