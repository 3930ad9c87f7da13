//! Average-linkage agglomerative clustering of predicted trajectory points.
//!
//! Merging proceeds while the smallest average inter-cluster distance stays
//! below the link threshold. The implementation builds the full dendrogram
//! with the nearest-neighbor-chain algorithm (average linkage is reducible,
//! so the chain yields the same merges as the naive greedy procedure) and
//! then cuts it at the threshold; that keeps the per-call cost quadratic
//! instead of cubic, which matters because prediction runs inside the
//! per-step decision budget.

use crate::geom::Vec2;

/// One flat cluster: member indices into the input point set plus the mean
/// of the member points.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub members: Vec<usize>,
    pub center: Vec2,
}

/// A flat partition of the input points. Clusters are ordered by their
/// smallest member index, and members within a cluster are sorted, so equal
/// inputs produce structurally equal outputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
}

impl ClusterSet {
    pub fn centers(&self) -> Vec<Vec2> {
        self.clusters.iter().map(|c| c.center).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Merge {
    a: usize,
    b: usize,
    dist: f64,
}

/// Builds the average-linkage dendrogram over `n` points given their
/// condensed pairwise distances, using the nearest-neighbor chain.
///
/// Cluster ids: `0..n` are singletons, `n + k` is the cluster created by the
/// k-th merge. Exactly `n - 1` merges are returned.
fn nn_chain_linkage(n: usize, dist: &mut [f64]) -> Vec<Merge> {
    // `dist` is indexed by condensed_index over *active* representative ids;
    // we update it in place with the Lance-Williams rule for average linkage.
    let idx = |i: usize, j: usize, n: usize| -> usize {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        lo * n - lo * (lo + 1) / 2 + (hi - lo - 1)
    };

    let mut size = vec![1usize; n]; // size of the cluster represented by slot i
    let mut active: Vec<bool> = vec![true; n];
    let mut cluster_id: Vec<usize> = (0..n).collect(); // dendrogram id per slot
    let mut merges: Vec<Merge> = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::with_capacity(n);

    for _ in 0..n.saturating_sub(1) {
        if chain.len() < 2 {
            chain.clear();
            let start = active.iter().position(|&a| a).expect("an active slot");
            chain.push(start);
        }
        // Grow the chain to a pair of reciprocal nearest neighbors.
        loop {
            let tip = *chain.last().unwrap();
            let prev = if chain.len() >= 2 {
                Some(chain[chain.len() - 2])
            } else {
                None
            };
            let mut best = prev;
            let mut best_d = prev.map(|p| dist[idx(tip, p, n)]).unwrap_or(f64::INFINITY);
            for j in 0..n {
                if j == tip || !active[j] {
                    continue;
                }
                let d = dist[idx(tip, j, n)];
                // Strict improvement keeps the chain stable under ties.
                if d < best_d {
                    best_d = d;
                    best = Some(j);
                }
            }
            let next = best.expect("at least two active slots remain");
            if Some(next) == prev {
                break;
            }
            chain.push(next);
        }
        let b = chain.pop().unwrap();
        let a = chain.pop().unwrap();
        let d_ab = dist[idx(a, b, n)];
        merges.push(Merge {
            a: cluster_id[a],
            b: cluster_id[b],
            dist: d_ab,
        });

        // Merge b into a: average-linkage Lance-Williams update.
        let (sa, sb) = (size[a] as f64, size[b] as f64);
        for j in 0..n {
            if j == a || j == b || !active[j] {
                continue;
            }
            let d = (sa * dist[idx(a, j, n)] + sb * dist[idx(b, j, n)]) / (sa + sb);
            dist[idx(a, j, n)] = d;
        }
        size[a] += size[b];
        active[b] = false;
        cluster_id[a] = n + merges.len() - 1;
    }
    merges
}

/// Groups points by average-linkage agglomeration, merging while the
/// smallest inter-cluster average distance is below `link_threshold`.
///
/// Thresholds at or below zero (or an empty input) yield singletons / an
/// empty partition; non-finite inputs are tolerated only in as much as they
/// never merge.
pub fn cluster(points: &[Vec2], link_threshold: f64) -> ClusterSet {
    let n = points.len();
    if n == 0 {
        return ClusterSet::default();
    }
    if n == 1 {
        return ClusterSet {
            clusters: vec![Cluster {
                members: vec![0],
                center: points[0],
            }],
        };
    }

    let mut dist = vec![0.0f64; n * (n - 1) / 2];
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            dist[k] = points[i].distance(points[j]);
            k += 1;
        }
    }
    let merges = nn_chain_linkage(n, &mut dist);

    // Cut: apply merges with dist < threshold via union-find over dendrogram ids.
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    // Average linkage is monotone (no inversions), so cutting the dendrogram
    // by merge distance equals stopping the greedy loop at the threshold.
    for (k, m) in merges.iter().enumerate() {
        if m.dist < link_threshold {
            let target = n + k;
            let ra = find(&mut parent, m.a);
            let rb = find(&mut parent, m.b);
            parent[ra] = target;
            parent[rb] = target;
        }
    }

    let mut groups: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for p in 0..n {
        let root = find(&mut parent, p);
        groups.entry(root).or_default().push(p);
    }
    let mut clusters: Vec<Cluster> = groups
        .into_values()
        .map(|mut members| {
            members.sort_unstable();
            let mut sum = Vec2::ZERO;
            for &m in &members {
                sum += points[m];
            }
            let center = sum / members.len() as f64;
            Cluster { members, center }
        })
        .collect();
    clusters.sort_by_key(|c| c.members[0]);
    ClusterSet { clusters }
}
