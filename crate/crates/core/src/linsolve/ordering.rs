//! Fill-reducing symmetric ordering.

use crate::sparse::SparseOperator;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

fn merge_into(dst: &mut Vec<usize>, src: &[usize], skip_a: usize, skip_b: usize) {
    let mut out = Vec::with_capacity(dst.len() + src.len());
    let (mut i, mut j) = (0, 0);
    while i < dst.len() || j < src.len() {
        let next = if j >= src.len() || (i < dst.len() && dst[i] <= src[j]) {
            let v = dst[i];
            if j < src.len() && src[j] == v {
                j += 1;
            }
            i += 1;
            v
        } else {
            let v = src[j];
            j += 1;
            v
        };
        if next != skip_a && next != skip_b {
            out.push(next);
        }
    }
    *dst = out;
}

/// Minimum-degree ordering on the pattern of `A + Aᵀ` (explicit elimination graph).
/// Ties are broken by the smallest index, so the result is deterministic.
pub fn minimum_degree(a: &SparseOperator) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        for (c, _) in a.row(r) {
            if c != r {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n).filter(|&v| !done[v]).min_by_key(|&v| (adj[v].len(), v)).unwrap();
        done[v] = true;
        order.push(v);
        let nbrs = std::mem::take(&mut adj[v]);
        for &u in &nbrs {
            let mut l = std::mem::take(&mut adj[u]);
            merge_into(&mut l, &nbrs, v, u);
            adj[u] = l;
        }
    }
    order
}

type Cache = Mutex<HashMap<u64, Arc<Vec<usize>>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached ordering keyed by the sparsity-pattern hash.
pub fn ordering_for(a: &SparseOperator) -> Arc<Vec<usize>> {
    let key = a.structure_hash();
    if let Some(p) = cache().lock().unwrap().get(&key) {
        return Arc::clone(p);
    }
    let p = Arc::new(minimum_degree(a));
    cache().lock().unwrap().insert(key, Arc::clone(&p));
    p
}
