//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut StdRng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(lo..hi))
}

pub fn uniform_mat(rng: &mut StdRng, r: usize, c: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(lo..hi))
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

fn entries(g: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_fn(idx.len(), |i, _| g[idx[i]])
}

/// Minimum of `cost^T x` over the basic feasible points of `M x <= g`.
///
/// Meaningful when `M` has full column rank and the LP is bounded, so that an
/// optimal vertex exists.
pub fn lp_vertex_oracle(
    cost: &DVector<f64>,
    m: &DMatrix<f64>,
    g: &DVector<f64>,
) -> Option<(f64, DVector<f64>)> {
    let n = m.ncols();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for s in subsets(m.nrows(), n) {
        let ms = rows(m, &s);
        let lu = ms.lu();
        if lu.determinant().abs() < 1e-10 {
            continue;
        }
        let Some(x) = lu.solve(&entries(g, &s)) else {
            continue;
        };
        let viol = (m * &x - g).max();
        if viol > 1e-9 {
            continue;
        }
        let v = cost.dot(&x);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, x));
        }
    }
    best
}

/// Minimiser of `1/2 x^T Q x + q^T x` over `M x <= g` by enumerating working
/// sets and keeping the KKT points (primal feasible, multipliers nonnegative).
pub fn qp_active_set_oracle(
    q_mat: &DMatrix<f64>,
    q: &DVector<f64>,
    m: &DMatrix<f64>,
    g: &DVector<f64>,
) -> Option<(f64, DVector<f64>)> {
    let n = q_mat.nrows();
    let obj = |x: &DVector<f64>| 0.5 * x.dot(&(q_mat * x)) + q.dot(x);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for k in 0..=n.min(m.nrows()) {
        for s in subsets(m.nrows(), k) {
            let ms = rows(m, &s);
            let mut kkt = DMatrix::zeros(n + k, n + k);
            kkt.view_mut((0, 0), (n, n)).copy_from(q_mat);
            kkt.view_mut((0, n), (n, k)).copy_from(&ms.transpose());
            kkt.view_mut((n, 0), (k, n)).copy_from(&ms);
            let mut rhs = DVector::zeros(n + k);
            rhs.rows_mut(0, n).copy_from(&(-q));
            rhs.rows_mut(n, k).copy_from(&entries(g, &s));
            let lu = kkt.lu();
            if lu.determinant().abs() < 1e-12 {
                continue;
            }
            let Some(sol) = lu.solve(&rhs) else { continue };
            let x = sol.rows(0, n).into_owned();
            if (m * &x - g).max() > 1e-9 || sol.rows(n, k).iter().any(|&l| l < -1e-9) {
                continue;
            }
            let v = obj(&x);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, x));
            }
        }
    }
    best
}

/// Random symmetric positive definite matrix with smallest eigenvalue at least `shift`.
pub fn random_spd(rng: &mut StdRng, n: usize, shift: f64) -> DMatrix<f64> {
    let l = uniform_mat(rng, n, n, -1.0, 1.0);
    &l * l.transpose() + DMatrix::identity(n, n) * shift
}

/// Random bounded, feasible LP `min cost^T x s.t. m x <= g` with at most 6
/// variables and 10 rows. The cost lies in the cone of the negated row normals
/// and `g` is built around a point `x0`; every third case has `n + 1` rows
/// tight at `x0` (degenerate).
pub fn random_lp(rng: &mut StdRng, case: usize) -> (DVector<f64>, DMatrix<f64>, DVector<f64>) {
    let n = rng.random_range(1..=6);
    let rows = rng.random_range(n..=10);
    let m = uniform_mat(rng, rows, n, -1.0, 1.0);
    let x0 = uniform_vec(rng, n, -2.0, 2.0);
    let mut slack = uniform_vec(rng, rows, 0.0, 1.0);
    if case.is_multiple_of(3) {
        for i in 0..rows.min(n + 1) {
            slack[i] = 0.0;
        }
    }
    let g = &m * &x0 + slack;
    let weights = uniform_vec(rng, rows, 0.0, 1.0);
    let cost = -m.tr_mul(&weights);
    (cost, m, g)
}

/// Random SPD QP over a box plus up to two general rows (at most 10 rows).
pub fn random_qp(rng: &mut StdRng) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>) {
    let n = rng.random_range(1..=4);
    let extra = rng.random_range(0..=2);
    let q_mat = random_spd(rng, n, 0.05);
    let q = uniform_vec(rng, n, -3.0, 3.0);
    let lo = uniform_vec(rng, n, -2.0, 0.0);
    let hi = &lo + uniform_vec(rng, n, 0.1, 2.0);
    let mut m = DMatrix::zeros(2 * n + extra, n);
    let mut g = DVector::zeros(2 * n + extra);
    for i in 0..n {
        m[(i, i)] = 1.0;
        g[i] = hi[i];
        m[(n + i, i)] = -1.0;
        g[n + i] = -lo[i];
    }
    let mid = (&lo + &hi) * 0.5;
    for k in 0..extra {
        let a = uniform_vec(rng, n, -1.0, 1.0);
        m.row_mut(2 * n + k).copy_from(&a.transpose());
        g[2 * n + k] = a.dot(&mid) + rng.random_range(0.0..0.5);
    }
    (q_mat, q, m, g)
}

/// Optimal cost of the transportation problem
/// `min sum c_ij y_ij s.t. sum_j y_ij <= supply_i, sum_i y_ij >= demand_j, y >= 0`
/// for nonnegative costs, by successive shortest paths (Bellman-Ford) on the
/// source / warehouse / consumer / sink network. `None` if demand cannot be met.
pub fn transport_oracle(cost: &[Vec<f64>], supply: &[f64], demand: &[f64]) -> Option<f64> {
    let (ns, nd) = (supply.len(), demand.len());
    let (src, sink) = (0, ns + nd + 1);
    let nodes = ns + nd + 2;
    // edge: (to, cap, cost); edge e and e ^ 1 are a residual pair
    let mut edges: Vec<(usize, f64, f64)> = Vec::new();
    let mut adj = vec![Vec::new(); nodes];
    let mut add = |adj: &mut Vec<Vec<usize>>, u: usize, v: usize, cap: f64, c: f64| {
        adj[u].push(edges.len());
        edges.push((v, cap, c));
        adj[v].push(edges.len());
        edges.push((u, 0.0, -c));
    };
    let total: f64 = demand.iter().sum();
    for i in 0..ns {
        add(&mut adj, src, 1 + i, supply[i], 0.0);
        for j in 0..nd {
            add(&mut adj, 1 + i, 1 + ns + j, total, cost[i][j]);
        }
    }
    for j in 0..nd {
        add(&mut adj, 1 + ns + j, sink, demand[j], 0.0);
    }
    let eps = 1e-12;
    let (mut flow, mut value) = (0.0, 0.0);
    while flow < total - eps {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut pred: Vec<Option<usize>> = vec![None; nodes];
        dist[src] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u].is_infinite() {
                    continue;
                }
                for &e in &adj[u] {
                    let (v, cap, c) = edges[e];
                    if cap > eps && dist[u] + c < dist[v] - 1e-15 {
                        dist[v] = dist[u] + c;
                        pred[v] = Some(e);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink].is_infinite() {
            return None;
        }
        let mut push = total - flow;
        let mut v = sink;
        while let Some(e) = pred[v] {
            push = push.min(edges[e].1);
            v = edges[e ^ 1].0;
        }
        let mut v = sink;
        while let Some(e) = pred[v] {
            edges[e].1 -= push;
            edges[e ^ 1].1 += push;
            v = edges[e ^ 1].0;
        }
        flow += push;
        value += push * dist[sink];
    }
    Some(value)
}
