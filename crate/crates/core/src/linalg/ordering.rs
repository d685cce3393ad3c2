/// Geometric nested dissection for nodes of a lattice graph given by integer
/// coordinates, where no edge spans more than `span` units along either axis.
/// Returns `perm` with `perm[new] = old`.
///
/// A band of `span` consecutive coordinate lines separates such a graph, so
/// each step cuts the node set at the median of its wider extent and numbers
/// the band last.
pub fn nested_dissection(coords: &[[i32; 2]], span: i32) -> Vec<usize> {
    assert!(span >= 1);
    let mut order = Vec::with_capacity(coords.len());
    let mut set: Vec<usize> = (0..coords.len()).collect();
    dissect(&mut set, coords, span, &mut order);
    order
}

const LEAF: usize = 24;

fn dissect(set: &mut [usize], coords: &[[i32; 2]], span: i32, out: &mut Vec<usize>) {
    if set.len() <= LEAF {
        set.sort_unstable_by_key(|&k| (coords[k][1], coords[k][0]));
        out.extend_from_slice(set);
        return;
    }
    let mut lo = [i32::MAX; 2];
    let mut hi = [i32::MIN; 2];
    for &k in set.iter() {
        for a in 0..2 {
            lo[a] = lo[a].min(coords[k][a]);
            hi[a] = hi[a].max(coords[k][a]);
        }
    }
    let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
    let mut vals: Vec<i32> = set.iter().map(|&k| coords[k][axis]).collect();
    let mid = vals.len() / 2;
    let (_, &mut median, _) = vals.select_nth_unstable(mid);
    let mut cut = median;
    if cut == lo[axis] || cut + span - 1 >= hi[axis] {
        cut = lo[axis] + (hi[axis] - lo[axis] - span + 1) / 2;
    }

    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut sep = Vec::new();
    for &k in set.iter() {
        let c = coords[k][axis];
        if c < cut {
            left.push(k);
        } else if c > cut + span - 1 {
            right.push(k);
        } else {
            sep.push(k);
        }
    }
    if left.is_empty() && right.is_empty() {
        // a single line: order along it
        sep.sort_unstable_by_key(|&k| coords[k][1 - axis]);
        out.extend_from_slice(&sep);
        return;
    }
    dissect(&mut left, coords, span, out);
    dissect(&mut right, coords, span, out);
    sep.sort_unstable_by_key(|&k| (coords[k][1 - axis], coords[k][axis]));
    out.extend_from_slice(&sep);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_a_permutation() {
        let coords: Vec<[i32; 2]> =
            (0..40).flat_map(|j| (0..30).map(move |i| [i, j])).filter(|c| (c[0] * c[1]) % 7 != 3).collect();
        let mut perm = nested_dissection(&coords, 2);
        perm.sort_unstable();
        assert_eq!(perm, (0..coords.len()).collect::<Vec<_>>());
    }
}
