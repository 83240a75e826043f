//! Starting partitions: k-means on adjacency profiles.
//!
//! Node `i` is represented by its adjacency row (out-row followed by in-row
//! for directed graphs), scaled to unit length so that classes differing
//! mostly in degree are still told apart by their pattern. Squared distances to dense centroids are evaluated
//! sparsely as `‖x‖² − 2 x·c + ‖c‖²`, so one Lloyd iteration costs
//! `O(E·Q + n·Q)`.

use rand::Rng as _;

use crate::graph::Graph;
use crate::rng::Rng;

struct Profiles<'a> {
    g: &'a Graph,
    dim: usize,
    norms: Vec<f64>,
    scale: Vec<f64>,
}

impl<'a> Profiles<'a> {
    fn new(g: &'a Graph) -> Self {
        let n = g.n();
        let dim = if g.is_directed() { 2 * n } else { n };
        let raw: Vec<f64> = (0..n)
            .map(|i| {
                let sq = |links: &[(u32, u32)]| links.iter().map(|&(_, v)| (v as f64).powi(2)).sum::<f64>();
                let mut s = sq(g.out_links(i));
                if g.is_directed() {
                    s += sq(g.in_links(i));
                }
                s
            })
            .collect();
        let scale: Vec<f64> = raw.iter().map(|&s| if s > 0.0 { 1.0 / s.sqrt() } else { 0.0 }).collect();
        let norms = raw.iter().map(|&s| if s > 0.0 { 1.0 } else { 0.0 }).collect();
        Profiles { g, dim, norms, scale }
    }

    fn dot(&self, i: usize, c: &[f64]) -> f64 {
        let n = self.g.n();
        let mut s: f64 = self.g.out_links(i).iter().map(|&(j, v)| v as f64 * c[j as usize]).sum();
        if self.g.is_directed() {
            s += self.g.in_links(i).iter().map(|&(j, v)| v as f64 * c[n + j as usize]).sum::<f64>();
        }
        s * self.scale[i]
    }

    fn add_to(&self, i: usize, c: &mut [f64], w: f64) {
        let n = self.g.n();
        let w = w * self.scale[i];
        for &(j, v) in self.g.out_links(i) {
            c[j as usize] += w * v as f64;
        }
        if self.g.is_directed() {
            for &(j, v) in self.g.in_links(i) {
                c[n + j as usize] += w * v as f64;
            }
        }
    }

    fn dist(&self, i: usize, c: &[f64], c_norm: f64) -> f64 {
        (self.norms[i] - 2.0 * self.dot(i, c) + c_norm).max(0.0)
    }
}

fn norm_sq(c: &[f64]) -> f64 {
    c.iter().map(|x| x * x).sum()
}

/// Lowest-inertia partition over `seedings` runs of k-means.
pub(crate) fn kmeans_labels(g: &Graph, q: usize, rng: &mut Rng, seedings: usize, max_iters: usize) -> Vec<usize> {
    let rows: Vec<usize> = (0..g.n()).collect();
    kmeans_rows(g, &rows, q, rng, seedings, max_iters)
}

/// As [`kmeans_labels`], restricted to `rows`; labels align with `rows`.
pub(crate) fn kmeans_rows(g: &Graph, rows: &[usize], q: usize, rng: &mut Rng, seedings: usize, max_iters: usize) -> Vec<usize> {
    let p = Profiles::new(g);
    let mut best = (f64::INFINITY, Vec::new());
    for _ in 0..seedings.max(1) {
        let (inertia, z) = kmeans_once(&p, rows, q, rng, max_iters);
        if inertia < best.0 || best.1.is_empty() {
            best = (inertia, z);
        }
    }
    best.1
}

/// k-means++ seeding followed by Lloyd iterations. Empty clusters are
/// reseeded with the point farthest from its centroid.
fn kmeans_once(p: &Profiles<'_>, rows: &[usize], q: usize, rng: &mut Rng, max_iters: usize) -> (f64, Vec<usize>) {
    let n = rows.len();
    if q <= 1 || n <= q {
        return (0.0, (0..n).map(|i| i % q.max(1)).collect());
    }
    let mut centers = vec![vec![0.0; p.dim]; q];
    let first = rng.random_range(0..n);
    p.add_to(rows[first], &mut centers[0], 1.0);
    let mut best = vec![f64::INFINITY; n];
    for k in 1..q {
        let prev = &centers[k - 1];
        let prev_norm = norm_sq(prev);
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.min(p.dist(rows[i], prev, prev_norm));
        }
        let total: f64 = best.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            best.iter().position(|&d| {
                acc += d;
                acc > u
            })
            .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        p.add_to(rows[pick], &mut centers[k], 1.0);
    }

    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    for _ in 0..max_iters {
        let norms: Vec<f64> = centers.iter().map(|c| norm_sq(c)).collect();
        let mut changed = false;
        for i in 0..n {
            let mut arg = 0;
            let mut low = f64::INFINITY;
            for k in 0..q {
                let d = p.dist(rows[i], &centers[k], norms[k]);
                if d < low {
                    low = d;
                    arg = k;
                }
            }
            dists[i] = low;
            if labels[i] != arg {
                labels[i] = arg;
                changed = true;
            }
        }
        let mut sizes = vec![0usize; q];
        labels.iter().for_each(|&z| sizes[z] += 1);
        for k in 0..q {
            if sizes[k] == 0 {
                let far = (0..n)
                    .filter(|&i| sizes[labels[i]] > 1)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]))
                    .expect("n > q leaves a cluster with two members");
                sizes[labels[far]] -= 1;
                labels[far] = k;
                sizes[k] = 1;
                dists[far] = 0.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for c in centers.iter_mut() {
            c.fill(0.0);
        }
        for i in 0..n {
            p.add_to(rows[i], &mut centers[labels[i]], 1.0 / sizes[labels[i]] as f64);
        }
    }
    (dists.iter().sum(), labels)
}
