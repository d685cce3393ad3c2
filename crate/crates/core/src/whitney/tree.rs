use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use serde::Serialize;

use super::decompose::{WhitneyCube, WhitneyDecomposition};
use crate::error::{Error, Result};

/// Whitney cubes with a parent map toward the cube containing the center.
#[derive(Debug, Clone)]
pub struct WhitneyTree {
    dec: WhitneyDecomposition,
    root: usize,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    order: Vec<usize>,
    overlaps: Vec<Vec<usize>>,
}

#[derive(Clone, Copy)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

/// Roots the decomposition at the cube containing `x0` and picks each cube's
/// parent along a shortest path in the cube adjacency graph. An edge between
/// cubes of sides `ℓ_a`, `ℓ_b` costs `|c_a − c_b| (1/ℓ_a + 1/ℓ_b) / 2`, a
/// discrete quasi-hyperbolic length, so chains follow John-type curves.
pub fn build_tree(dec: WhitneyDecomposition, x0: [f64; 2]) -> Result<WhitneyTree> {
    let root = dec
        .cube_at(x0)
        .ok_or_else(|| Error::InvalidParameter(format!("center {x0:?} is not in the domain")))?;
    let shape = *dec.shape();
    let h = shape.h;
    let n = dec.len();
    let adj = dec.adjacency();
    let centers: Vec<[f64; 2]> = dec.cubes().iter().map(|c| c.center(&shape)).collect();
    let lengths: Vec<f64> = dec.cubes().iter().map(|c| c.length(h)).collect();

    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut depth = vec![0usize; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[root] = 0.0;
    heap.push(HeapItem { dist: 0.0, node: root });
    while let Some(HeapItem { dist: d, node: a }) = heap.pop() {
        if done[a] {
            continue;
        }
        done[a] = true;
        for &b in &adj[a] {
            if done[b] {
                continue;
            }
            let step = crate::grid::dist(centers[a], centers[b]);
            let w = 0.5 * step * (1.0 / lengths[a] + 1.0 / lengths[b]);
            let nd = d + w;
            if nd < dist[b] {
                dist[b] = nd;
                parent[b] = Some(a);
                depth[b] = depth[a] + 1;
                heap.push(HeapItem { dist: nd, node: b });
            }
        }
    }
    if let Some(c) = (0..n).find(|&c| !done[c]) {
        return Err(Error::UnreachableCube { cube: c });
    }

    let mut overlaps = vec![Vec::new(); n];
    for c in 0..n {
        if let Some(p) = parent[c] {
            let ov = intersect_sorted(dec.region(c), dec.region(p));
            if ov.is_empty() {
                return Err(Error::OverlapTooSmall { child: c, parent: p });
            }
            overlaps[c] = ov;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let cubes = dec.cubes();
    order.sort_by(|&a, &b| {
        depth[b]
            .cmp(&depth[a])
            .then(cubes[b].level.cmp(&cubes[a].level))
            .then(cubes[a].anchor.cmp(&cubes[b].anchor))
    });

    Ok(WhitneyTree { dec, root, parent, depth, order, overlaps })
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeExport {
    pub h: f64,
    pub origin: [f64; 2],
    pub sigma: f64,
    pub root: usize,
    pub cubes: Vec<WhitneyCube>,
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<usize>,
}

impl WhitneyTree {
    pub fn decomposition(&self) -> &WhitneyDecomposition {
        &self.dec
    }

    pub fn cubes(&self) -> &[WhitneyCube] {
        self.dec.cubes()
    }

    pub fn len(&self) -> usize {
        self.dec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dec.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, c: usize) -> Option<usize> {
        self.parent[c]
    }

    /// Number of edges from `c` to the root.
    pub fn depth(&self, c: usize) -> usize {
        self.depth[c]
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Cubes from `c` up to and including the root.
    pub fn chain(&self, c: usize) -> Vec<usize> {
        let mut out = vec![c];
        let mut cur = c;
        while let Some(p) = self.parent[cur] {
            out.push(p);
            cur = p;
        }
        out
    }

    /// Processing order for bottom-up sweeps: depth descending, then level
    /// descending, then anchor. Every cube precedes its parent.
    pub fn leaf_to_root(&self) -> &[usize] {
        &self.order
    }

    /// Cells of `σQ_c ∩ σQ_parent(c)`; empty for the root.
    pub fn overlap(&self, c: usize) -> &[usize] {
        &self.overlaps[c]
    }

    pub fn export(&self) -> TreeExport {
        let shape = self.dec.shape();
        TreeExport {
            h: shape.h,
            origin: shape.origin,
            sigma: self.dec.sigma(),
            root: self.root,
            cubes: self.dec.cubes().to_vec(),
            parent: self.parent.clone(),
            depth: self.depth.clone(),
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, &self.export())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{distance_transform, rasterize_predicate, BoundingBox};
    use crate::whitney::whitney_decompose;

    #[test]
    fn square_root_is_a_largest_cube_and_all_chains_end_there() {
        let h = 1.0 / 64.0;
        let dom = rasterize_predicate(BoundingBox { min: [0.0, 0.0], max: [1.0, 1.0] }, h, None, |x, y| {
            (0.0..1.0).contains(&x) && (0.0..1.0).contains(&y)
        })
        .unwrap();
        let rho = distance_transform(&dom);
        let dec = whitney_decompose(&dom, &rho).unwrap();
        let largest = dec.cubes().iter().map(|c| c.side).max().unwrap();
        let tree = build_tree(dec, [0.5 + 0.25 * h, 0.5 + 0.25 * h]).unwrap();
        assert_eq!(tree.cubes()[tree.root()].side, largest);
        for c in 0..tree.len() {
            assert_eq!(*tree.chain(c).last().unwrap(), tree.root());
        }
        let pos: Vec<usize> = {
            let mut pos = vec![0; tree.len()];
            for (i, &c) in tree.leaf_to_root().iter().enumerate() {
                pos[c] = i;
            }
            pos
        };
        for c in 0..tree.len() {
            if let Some(p) = tree.parent(c) {
                assert!(pos[c] < pos[p]);
                assert!(!tree.overlap(c).is_empty());
            }
        }
    }

    #[test]
    fn center_outside_is_rejected() {
        let dom = GridDomainFixture::small();
        let rho = distance_transform(&dom);
        let dec = whitney_decompose(&dom, &rho).unwrap();
        assert!(build_tree(dec, [10.0, 10.0]).is_err());
    }

    struct GridDomainFixture;
    impl GridDomainFixture {
        fn small() -> crate::grid::GridDomain {
            crate::grid::GridDomain::from_unpadded(4, 4, 0.25, &[true; 16], None).unwrap()
        }
    }

    #[test]
    fn export_round_trips_through_json() {
        let dom = GridDomainFixture::small();
        let rho = distance_transform(&dom);
        let tree = build_tree(whitney_decompose(&dom, &rho).unwrap(), [0.5, 0.5]).unwrap();
        let mut buf = Vec::new();
        tree.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["cubes"].as_array().unwrap().len(), tree.len());
        assert_eq!(v["root"].as_u64().unwrap() as usize, tree.root());
    }
}
