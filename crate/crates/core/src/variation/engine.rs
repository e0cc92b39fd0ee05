//! Exact p-variation dynamic programme with branch-and-bound pruning.
//!
//! The recursion `best[j] = max_{i<j} best[i] + f(i,j)^p` is evaluated over
//! a segment tree of left endpoints. Every node carries enough summary data
//! to bound `f(i, j)` for all `i` in the node, and `best` is non-decreasing,
//! so a node whose bound cannot beat the current candidate is skipped
//! without touching its leaves. The result is identical to the plain
//! quadratic scan; only the work differs.

use crate::lift::{Level2RoughPath, SecondSweep};
use crate::path::euclid;

const LEAF: usize = 16;
// bounds are inflated by this relative slack so rounding never prunes a winner
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub lo: usize,
    pub hi: usize,
    pub children: Option<(usize, usize)>,
}

/// Segment tree over grid indices `0..points`.
#[derive(Debug, Clone)]
pub(crate) struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn new(points: usize) -> Self {
        let mut nodes = Vec::new();
        if points > 0 {
            build(&mut nodes, 0, points - 1);
        }
        Self { nodes }
    }
}

fn build(nodes: &mut Vec<Node>, lo: usize, hi: usize) -> usize {
    let id = nodes.len();
    nodes.push(Node { lo, hi, children: None });
    if hi - lo + 1 > LEAF {
        let mid = lo + (hi - lo) / 2;
        let l = build(nodes, lo, mid);
        let r = build(nodes, mid + 1, hi);
        nodes[id].children = Some((l, r));
    }
    id
}

/// An interval function `f(i, j) >= 0` with per-node upper bounds.
pub(crate) trait BoundedNorm: Sync {
    fn value(&self, i: usize, j: usize) -> f64;
    /// Upper bound of `f(i, j)` over all `i` in tree node `node`.
    fn bound(&self, node: usize, j: usize) -> f64;
}

/// Level one: `f(i, j) = |Z_j - Z_i|`.
pub(crate) struct FirstLevelNorm {
    dim: usize,
    z: Vec<f64>,
    center: Vec<f64>,
    radius: Vec<f64>,
}

impl FirstLevelNorm {
    pub fn new(z: Vec<f64>, dim: usize, tree: &Tree) -> Self {
        let mut center = Vec::with_capacity(tree.nodes.len() * dim);
        let mut radius = Vec::with_capacity(tree.nodes.len());
        for node in &tree.nodes {
            let rows = &z[node.lo * dim..(node.hi + 1) * dim];
            let (c, r) = ball(rows, dim);
            center.extend(c);
            radius.push(r);
        }
        Self { dim, z, center, radius }
    }
}

impl BoundedNorm for FirstLevelNorm {
    #[inline]
    fn value(&self, i: usize, j: usize) -> f64 {
        let d = self.dim;
        let (a, b) = (&self.z[i * d..(i + 1) * d], &self.z[j * d..(j + 1) * d]);
        a.iter().zip(b).map(|(u, v)| (v - u) * (v - u)).sum::<f64>().sqrt()
    }

    #[inline]
    fn bound(&self, node: usize, j: usize) -> f64 {
        let d = self.dim;
        let c = &self.center[node * d..(node + 1) * d];
        let zj = &self.z[j * d..(j + 1) * d];
        c.iter().zip(zj).map(|(u, v)| (v - u) * (v - u)).sum::<f64>().sqrt() + self.radius[node]
    }
}

/// Level two: `f(i, j) = |X2(i,j) - Y2(i,j)|` written through prefix data as
/// `G_j - H_i - X_i ⊗ X_j + Y_i ⊗ Y_j` with `X_i = X(0,i)`, `G_j = X2(0,j) - Y2(0,j)`
/// and `H_i = G_i - X_i ⊗ X_i + Y_i ⊗ Y_i`.
pub(crate) struct SecondLevelNorm {
    dim: usize,
    g: Vec<f64>,
    h: Vec<f64>,
    x: Vec<f64>,
    y: Option<Vec<f64>>,
    h_center: Vec<f64>,
    h_radius: Vec<f64>,
    x_center: Vec<f64>,
    x_radius: Vec<f64>,
    y_center: Vec<f64>,
    y_radius: Vec<f64>,
}

fn prefix_data(rp: &Level2RoughPath) -> (Vec<f64>, Vec<f64>) {
    let d = rp.dim();
    let n = rp.steps();
    let base = rp.base();
    let mut first = Vec::with_capacity((n + 1) * d);
    let mut second = Vec::with_capacity((n + 1) * d * d);
    let mut sweep = SecondSweep::new(rp, 0);
    for k in 0..=n {
        first.extend(base.point(k).iter().zip(base.point(0)).map(|(a, b)| a - b));
        second.extend_from_slice(sweep.second());
        if k < n {
            sweep.advance();
        }
    }
    (first, second)
}

impl SecondLevelNorm {
    pub fn new(x_rp: &Level2RoughPath, y_rp: Option<&Level2RoughPath>, tree: &Tree) -> Self {
        let d = x_rp.dim();
        let dd = d * d;
        let points = x_rp.steps() + 1;
        let (x, px) = prefix_data(x_rp);
        let (y, py) = match y_rp {
            Some(rp) => {
                let (a, b) = prefix_data(rp);
                (Some(a), Some(b))
            }
            None => (None, None),
        };
        let mut g = px;
        if let Some(py) = &py {
            for (a, b) in g.iter_mut().zip(py) {
                *a -= b;
            }
        }
        let mut h = g.clone();
        for k in 0..points {
            let xk = &x[k * d..(k + 1) * d];
            let block = &mut h[k * dd..(k + 1) * dd];
            for r in 0..d {
                for c in 0..d {
                    block[r * d + c] -= xk[r] * xk[c];
                }
            }
            if let Some(y) = &y {
                let yk = &y[k * d..(k + 1) * d];
                for r in 0..d {
                    for c in 0..d {
                        block[r * d + c] += yk[r] * yk[c];
                    }
                }
            }
        }
        let mut out = Self {
            dim: d,
            g,
            h,
            x,
            y,
            h_center: Vec::new(),
            h_radius: Vec::new(),
            x_center: Vec::new(),
            x_radius: Vec::new(),
            y_center: Vec::new(),
            y_radius: Vec::new(),
        };
        for node in &tree.nodes {
            let (c, r) = ball(&out.h[node.lo * dd..(node.hi + 1) * dd], dd);
            out.h_center.extend(c);
            out.h_radius.push(r);
            let (c, r) = ball(&out.x[node.lo * d..(node.hi + 1) * d], d);
            out.x_center.extend(c);
            out.x_radius.push(r);
            if let Some(y) = &out.y {
                let (c, r) = ball(&y[node.lo * d..(node.hi + 1) * d], d);
                out.y_center.extend(c);
                out.y_radius.push(r);
            }
        }
        out
    }

    #[inline]
    fn combine(&self, h: &[f64], xi: &[f64], yi: Option<&[f64]>, j: usize) -> f64 {
        let d = self.dim;
        let dd = d * d;
        let gj = &self.g[j * dd..(j + 1) * dd];
        let xj = &self.x[j * d..(j + 1) * d];
        let mut acc = 0.0;
        for r in 0..d {
            for c in 0..d {
                let mut v = gj[r * d + c] - h[r * d + c] - xi[r] * xj[c];
                if let (Some(yi), Some(y)) = (yi, &self.y) {
                    v += yi[r] * y[j * d + c];
                }
                acc += v * v;
            }
        }
        acc.sqrt()
    }
}

impl BoundedNorm for SecondLevelNorm {
    #[inline]
    fn value(&self, i: usize, j: usize) -> f64 {
        let d = self.dim;
        let dd = d * d;
        self.combine(
            &self.h[i * dd..(i + 1) * dd],
            &self.x[i * d..(i + 1) * d],
            self.y.as_ref().map(|y| &y[i * d..(i + 1) * d]),
            j,
        )
    }

    #[inline]
    fn bound(&self, node: usize, j: usize) -> f64 {
        let d = self.dim;
        let dd = d * d;
        let centre = self.combine(
            &self.h_center[node * dd..(node + 1) * dd],
            &self.x_center[node * d..(node + 1) * d],
            self.y.as_ref().map(|_| &self.y_center[node * d..(node + 1) * d]),
            j,
        );
        let mut b = centre + self.h_radius[node] + self.x_radius[node] * euclid(&self.x[j * d..(j + 1) * d]);
        if let Some(y) = &self.y {
            b += self.y_radius[node] * euclid(&y[j * d..(j + 1) * d]);
        }
        b
    }
}

/// Bounding-box centre and enclosing radius of a set of rows.
fn ball(rows: &[f64], width: usize) -> (Vec<f64>, f64) {
    let mut lo = vec![f64::INFINITY; width];
    let mut hi = vec![f64::NEG_INFINITY; width];
    for row in rows.chunks_exact(width) {
        for (k, &v) in row.iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let r = rows
        .chunks_exact(width)
        .map(|row| row.iter().zip(&c).map(|(v, m)| (v - m) * (v - m)).sum::<f64>())
        .fold(0.0f64, f64::max)
        .sqrt();
    (c, r)
}

/// A forward p-variation sweep anchored at `anchor`.
///
/// After `k` calls to [`DpRun::advance`], `best()` is the p-th power of the
/// p-variation over `[anchor, anchor + k]`.
pub(crate) struct DpRun<'a, N: BoundedNorm> {
    norm: &'a N,
    tree: &'a Tree,
    p: f64,
    anchor: usize,
    best: Vec<f64>,
    count: Vec<u32>,
    back: Vec<usize>,
}

impl<'a, N: BoundedNorm> DpRun<'a, N> {
    pub fn new(norm: &'a N, tree: &'a Tree, p: f64, anchor: usize) -> Self {
        Self { norm, tree, p, anchor, best: vec![0.0], count: vec![0], back: vec![anchor] }
    }

    /// Current right endpoint.
    pub fn position(&self) -> usize {
        self.anchor + self.best.len() - 1
    }

    pub fn best(&self) -> f64 {
        *self.best.last().expect("non-empty")
    }

    pub fn advance(&mut self) -> f64 {
        let j = self.position() + 1;
        let prev = j - 1;
        let mut cand = Candidate {
            value: self.best[prev - self.anchor] + self.norm.value(prev, j).powf(self.p),
            count: self.count[prev - self.anchor] + 1,
            from: prev,
        };
        if j >= self.anchor + 2 {
            self.visit(0, j, j - 2, &mut cand);
        }
        self.best.push(cand.value);
        self.count.push(cand.count);
        self.back.push(cand.from);
        cand.value
    }

    fn visit(&self, id: usize, j: usize, top: usize, cand: &mut Candidate) {
        let node = self.tree.nodes[id];
        if node.hi < self.anchor || node.lo > top {
            return;
        }
        let last = node.hi.min(top);
        let best_max = self.best[last - self.anchor];
        let bound = self.norm.bound(id, j) * (1.0 + SLACK) + f64::MIN_POSITIVE;
        if best_max + bound.powf(self.p) < cand.value {
            return;
        }
        match node.children {
            Some((l, r)) => {
                self.visit(r, j, top, cand);
                self.visit(l, j, top, cand);
            }
            None => {
                let first = node.lo.max(self.anchor);
                for i in (first..=last).rev() {
                    let v = self.best[i - self.anchor] + self.norm.value(i, j).powf(self.p);
                    let c = self.count[i - self.anchor] + 1;
                    if v > cand.value || (v == cand.value && c < cand.count) {
                        *cand = Candidate { value: v, count: c, from: i };
                    }
                }
            }
        }
    }

    /// Optimal partition of `[anchor, position]`.
    pub fn partition(&self) -> Vec<usize> {
        let mut out = vec![self.position()];
        let mut k = self.position();
        while k > self.anchor {
            k = self.back[k - self.anchor];
            out.push(k);
        }
        out.reverse();
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    value: f64,
    count: u32,
    from: usize,
}

/// Both levels of a (difference of) level-2 rough path(s) on one grid.
pub(crate) struct TwoLevel {
    pub tree: Tree,
    pub first: FirstLevelNorm,
    pub second: SecondLevelNorm,
}

impl TwoLevel {
    pub fn new(x: &Level2RoughPath, y: Option<&Level2RoughPath>) -> Self {
        let tree = Tree::new(x.steps() + 1);
        let d = x.dim();
        let base = x.base();
        let mut z = Vec::with_capacity(base.len() * d);
        for k in 0..base.len() {
            let xk = base.point(k);
            match y {
                Some(y) => z.extend(xk.iter().zip(y.base().point(k)).map(|(a, b)| a - b)),
                None => z.extend_from_slice(xk),
            }
        }
        let first = FirstLevelNorm::new(z, d, &tree);
        let second = SecondLevelNorm::new(x, y, &tree);
        Self { tree, first, second }
    }

    /// `(|X|_{p-var}^p, |X2|_{p/2-var}^{p/2})` over `[lo, hi]`.
    pub fn powers(&self, p: f64, lo: usize, hi: usize) -> (f64, f64) {
        let mut a = DpRun::new(&self.first, &self.tree, p, lo);
        let mut b = DpRun::new(&self.second, &self.tree, p / 2.0, lo);
        for _ in lo..hi {
            a.advance();
            b.advance();
        }
        (a.best(), b.best())
    }
}
