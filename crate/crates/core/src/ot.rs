//! Couplings with fixed marginals: an exact transportation simplex for the
//! linear problem and log-domain Sinkhorn scaling for entropic problems.

use crate::prob::measures::log_sum_exp;

/// Optimal plan of `min <c, Q>` over couplings of `a` and `b`, with dual
/// potentials satisfying `u_i + v_j <= c_ij` on the support.
#[derive(Debug, Clone)]
pub(crate) struct Transport {
    pub plan: Vec<f64>,
    pub cost: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl Transport {
    /// Reduced costs `c_ij - u_i - v_j`; zero-mass rows and columns get `+inf`.
    pub fn reduced_costs(&self, a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
        let n = b.len();
        (0..a.len() * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                if a[i] > 0.0 && b[j] > 0.0 {
                    c[k] - self.u[i] - self.v[j]
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }
}

/// Transportation simplex (northwest-corner start, MODI pricing).
pub(crate) fn transport(a: &[f64], b: &[f64], c: &[f64]) -> Transport {
    let (m0, n0) = (a.len(), b.len());
    let rows: Vec<usize> = (0..m0).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n0).filter(|&j| b[j] > 0.0).collect();
    let (m, n) = (rows.len(), cols.len());
    let cost = |i: usize, j: usize| c[rows[i] * n0 + cols[j]];

    let mut x = vec![0.0; m * n];
    let mut basic = vec![false; m * n];
    {
        let mut ra: Vec<f64> = rows.iter().map(|&i| a[i]).collect();
        let mut rb: Vec<f64> = cols.iter().map(|&j| b[j]).collect();
        let (mut i, mut j) = (0, 0);
        while i < m && j < n {
            let t = ra[i].min(rb[j]);
            x[i * n + j] = t;
            basic[i * n + j] = true;
            ra[i] -= t;
            rb[j] -= t;
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || ra[i] <= rb[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    for iter in 0..10_000 {
        potentials(&basic, m, n, &cost, &mut u, &mut v);
        // Dantzig pricing, switching to Bland's rule late to rule out cycling.
        let mut enter = None;
        let mut best = -1e-12;
        for i in 0..m {
            for j in 0..n {
                if basic[i * n + j] {
                    continue;
                }
                let r = cost(i, j) - u[i] - v[j];
                if r < best {
                    best = r;
                    enter = Some((i, j));
                    if iter > 5_000 {
                        break;
                    }
                }
            }
            if iter > 5_000 && enter.is_some() {
                break;
            }
        }
        let Some((ei, ej)) = enter else { break };
        let cycle = basis_path(&basic, m, n, ei, ej);
        // cycle[0] is the entering cell (+), then alternating -, +, ...
        let mut theta = f64::INFINITY;
        let mut leave = None;
        for &(i, j) in cycle.iter().skip(1).step_by(2) {
            if x[i * n + j] < theta {
                theta = x[i * n + j];
                leave = Some((i, j));
            }
        }
        for (k, &(i, j)) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                x[i * n + j] += theta;
            } else {
                x[i * n + j] -= theta;
            }
        }
        let (li, lj) = leave.expect("a cycle has a decreasing cell");
        x[li * n + lj] = 0.0;
        basic[li * n + lj] = false;
        basic[ei * n + ej] = true;
    }

    let mut plan = vec![0.0; m0 * n0];
    let mut full_u = vec![0.0; m0];
    let mut full_v = vec![0.0; n0];
    for (i, &ri) in rows.iter().enumerate() {
        full_u[ri] = u[i];
        for (j, &cj) in cols.iter().enumerate() {
            plan[ri * n0 + cj] = x[i * n + j].max(0.0);
        }
    }
    for (j, &cj) in cols.iter().enumerate() {
        full_v[cj] = v[j];
    }
    let total = plan.iter().zip(c).map(|(p, c)| p * c).sum();
    Transport {
        plan,
        cost: total,
        u: full_u,
        v: full_v,
    }
}

/// Solves `u_i + v_j = c_ij` on the basis tree, rooted at `u_0 = 0`.
fn potentials(
    basic: &[bool],
    m: usize,
    n: usize,
    cost: &impl Fn(usize, usize) -> f64,
    u: &mut [f64],
    v: &mut [f64],
) {
    let mut du = vec![false; m];
    let mut dv = vec![false; n];
    du[0] = true;
    u[0] = 0.0;
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..m {
            for j in 0..n {
                if !basic[i * n + j] {
                    continue;
                }
                if du[i] && !dv[j] {
                    v[j] = cost(i, j) - u[i];
                    dv[j] = true;
                    changed = true;
                } else if dv[j] && !du[i] {
                    u[i] = cost(i, j) - v[j];
                    du[i] = true;
                    changed = true;
                }
            }
        }
    }
}

/// Cells of the cycle closed by entering `(ei, ej)`: the entering cell
/// followed by the basis path from column `ej` back to row `ei`.
fn basis_path(basic: &[bool], m: usize, n: usize, ei: usize, ej: usize) -> Vec<(usize, usize)> {
    // Nodes: rows 0..m, columns m..m+n. BFS from column ej to row ei.
    let total = m + n;
    let mut prev = vec![usize::MAX; total];
    let start = m + ej;
    prev[start] = start;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == ei {
            break;
        }
        let neighbours: Vec<usize> = if node < m {
            (0..n).filter(|&j| basic[node * n + j]).map(|j| m + j).collect()
        } else {
            let j = node - m;
            (0..m).filter(|&i| basic[i * n + j]).collect()
        };
        for nb in neighbours {
            if prev[nb] == usize::MAX {
                prev[nb] = node;
                queue.push_back(nb);
            }
        }
    }
    let mut cycle = vec![(ei, ej)];
    let mut node = ei;
    while node != start {
        let p = prev[node];
        let cell = if node < m { (node, p - m) } else { (p, node - m) };
        cycle.push(cell);
        node = p;
    }
    cycle
}

/// Result of [`sinkhorn`]: plan `Q_ij = exp(f_i + g_j + log_k_ij)`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub plan: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Log-domain Sinkhorn: the I-projection of the kernel `exp(log_k)` onto
/// couplings of `a` and `b`. `-inf` entries of `log_k` are forbidden cells.
/// Warm-start potentials may be passed in `init_g`.
pub(crate) fn sinkhorn(
    a: &[f64],
    b: &[f64],
    log_k: &[f64],
    init_g: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Scaling {
    let (m, n) = (a.len(), b.len());
    let la: Vec<f64> = a.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect();
    let lb: Vec<f64> = b.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect();
    let mut f = vec![0.0; m];
    let mut g: Vec<f64> = match init_g {
        Some(g0) => g0
            .iter()
            .zip(b)
            .map(|(&v, &bj)| match (bj > 0.0, v.is_finite()) {
                (true, true) => v,
                (true, false) => 0.0,
                _ => f64::NEG_INFINITY,
            })
            .collect(),
        None => lb.iter().map(|&v| if v.is_finite() { 0.0 } else { v }).collect(),
    };
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        for i in 0..m {
            f[i] = if a[i] > 0.0 {
                la[i] - log_sum_exp((0..n).map(|j| g[j] + log_k[i * n + j]))
            } else {
                f64::NEG_INFINITY
            };
        }
        for j in 0..n {
            g[j] = if b[j] > 0.0 {
                lb[j] - log_sum_exp((0..m).map(|i| f[i] + log_k[i * n + j]))
            } else {
                f64::NEG_INFINITY
            };
        }
        if f.iter().chain(&g).any(|v| v.is_nan()) {
            break;
        }
        // Columns are exact after the g-step; check rows.
        let mut err: f64 = 0.0;
        for i in 0..m {
            let s: f64 = (0..n).map(|j| (f[i] + g[j] + log_k[i * n + j]).exp()).sum();
            err = err.max((s - a[i]).abs());
        }
        if err <= tol {
            converged = true;
            break;
        }
    }
    let plan = (0..m * n)
        .map(|k| {
            let v = f[k / n] + g[k % n] + log_k[k];
            if v.is_finite() {
                v.exp()
            } else {
                0.0
            }
        })
        .collect();
    Scaling {
        plan,
        f,
        g,
        converged,
        iterations,
    }
}
