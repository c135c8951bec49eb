use super::DirectedNet;

/// A directed simple cycle, as a list of edge indices in traversal order.
///
/// Its indicator vector `ℓ` satisfies `K·ℓ = 0`, `ℓ ≥ 0`, `ℓ ≠ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurrentLoop {
    pub edges: Vec<usize>,
}

impl CurrentLoop {
    pub fn indicator(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for &e in &self.edges {
            v[e] += 1.0;
        }
        v
    }

    /// `⟨c, ℓ⟩`.
    pub fn cost(&self, costs: &[f64]) -> f64 {
        self.edges.iter().map(|&e| costs[e]).sum()
    }
}

pub const DEFAULT_LOOP_CAP: usize = 10_000;

/// All directed simple cycles, up to [`DEFAULT_LOOP_CAP`].
pub fn find_loops(dnet: &DirectedNet) -> Vec<CurrentLoop> {
    find_loops_capped(dnet, DEFAULT_LOOP_CAP)
}

/// Each cycle is reported once, rooted at its smallest vertex.
pub fn find_loops_capped(dnet: &DirectedNet, cap: usize) -> Vec<CurrentLoop> {
    let n = dnet.vertices.len();
    let mut out = Vec::new();
    let mut on_path = vec![false; n];
    let mut path = Vec::new();
    for s in 0..n {
        if out.len() >= cap {
            break;
        }
        on_path[s] = true;
        dfs(dnet, s, s, &mut on_path, &mut path, &mut out, cap);
        on_path[s] = false;
    }
    out
}

fn dfs(
    dnet: &DirectedNet,
    root: usize,
    v: usize,
    on_path: &mut [bool],
    path: &mut Vec<usize>,
    out: &mut Vec<CurrentLoop>,
    cap: usize,
) {
    for &e in dnet.out_edges(v) {
        if out.len() >= cap {
            return;
        }
        let w = dnet.edges[e].head;
        if w == root {
            path.push(e);
            out.push(CurrentLoop { edges: path.clone() });
            path.pop();
        } else if w > root && !on_path[w] {
            on_path[w] = true;
            path.push(e);
            dfs(dnet, root, w, on_path, path, out, cap);
            path.pop();
            on_path[w] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edgecost::ModelSpec;
    use crate::netmodel::examples::one_edge;
    use crate::wardrop_net::transform;

    #[test]
    fn one_edge_net_has_only_the_doubled_pair_loop() {
        let d = transform(&one_edge(ModelSpec::quadratic(), 1.0)).unwrap();
        let loops = find_loops(&d);
        assert_eq!(loops.len(), 1);
        let ids: Vec<&str> = loops[0].edges.iter().map(|&e| d.edges[e].id.as_str()).collect();
        assert!(ids.contains(&"e+") && ids.contains(&"e-"));
        let l = loops[0].indicator(d.n_edges());
        let k = d
            .kirchhoff
            .iter()
            .map(|row| row.iter().zip(&l).map(|(&a, b)| f64::from(a) * b).sum::<f64>());
        assert!(k.into_iter().all(|x| x == 0.0));
    }
}
