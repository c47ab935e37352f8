//! Fill-reducing orderings for the envelope factorization.

use sprs::CsMat;
use std::collections::VecDeque;

/// Reverse Cuthill-McKee ordering of the sparsity graph of `a`.
///
/// Rows with very high degree (global coupling dofs such as a flux unknown)
/// are held back and placed last so they do not widen the envelope of every
/// other row.
pub fn rcm_ordering<T>(a: &CsMat<T>) -> Vec<usize> {
    let n = a.rows();
    if n == 0 {
        return Vec::new();
    }
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            a.outer_view(i)
                .map(|row| row.indices().iter().copied().filter(|&j| j != i).collect())
                .unwrap_or_default()
        })
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut sorted = degree.clone();
    sorted.sort_unstable();
    let typical = sorted[n / 2].max(1);
    let dense_cut = (3 * typical).max(32);
    let dense: Vec<bool> = degree.iter().map(|&d| d > dense_cut).collect();

    let mut visited = dense.clone();
    let mut order = Vec::with_capacity(n);
    loop {
        let seed = match (0..n).filter(|&i| !visited[i]).min_by_key(|&i| degree[i]) {
            Some(s) => pseudo_peripheral(&adj, &dense, s),
            None => break,
        };
        let mut queue = VecDeque::new();
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order.extend((0..n).filter(|&i| dense[i]));
    order
}

fn pseudo_peripheral(adj: &[Vec<usize>], dense: &[bool], start: usize) -> usize {
    let mut node = start;
    let mut ecc = 0;
    for _ in 0..8 {
        let (far, depth) = bfs_far(adj, dense, node);
        if depth <= ecc {
            break;
        }
        ecc = depth;
        node = far;
    }
    node
}

fn bfs_far(adj: &[Vec<usize>], dense: &[bool], start: usize) -> (usize, usize) {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut far = (start, 0);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !dense[w] && level[w] == usize::MAX {
                level[w] = level[v] + 1;
                if level[w] > far.1 || (level[w] == far.1 && adj[w].len() < adj[far.0].len()) {
                    far = (w, level[w]);
                }
                queue.push_back(w);
            }
        }
    }
    far
}

#[cfg(test)]
mod tests {
    use super::*;
    use sprs::TriMat;

    #[test]
    fn is_a_permutation() {
        let n = 200;
        let mut t = TriMat::new((n, n));
        for i in 0..n {
            t.add_triplet(i, i, 1.0);
            t.add_triplet(i, (i + 1) % n, 1.0);
            t.add_triplet((i + 1) % n, i, 1.0);
            t.add_triplet(i, n - 1, 1.0);
            t.add_triplet(n - 1, i, 1.0);
        }
        let a: CsMat<f64> = t.to_csr();
        let mut p = rcm_ordering(&a);
        assert_eq!(*p.last().unwrap(), n - 1);
        p.sort_unstable();
        assert_eq!(p, (0..n).collect::<Vec<_>>());
    }
}
