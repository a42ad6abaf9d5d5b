//! Vietoris–Rips persistent homology over Z/2, bottleneck and Hausdorff
//! distances.
//!
//! H0 comes from union-find over the sorted edges. Higher dimensions use a
//! cohomology reduction with implicit coboundaries, clearing and the emergent
//! pair shortcut. Simplices are addressed by their index in the combinatorial
//! number system, and the filtration order is (diameter ascending, index
//! descending).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::io::{BufRead, Write};

use serde_json::{json, Value};
use thiserror::Error;

use crate::embedding::{dist, PointCloud};
use crate::scalar::{cmp_scalar, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum PersistenceError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("points have differing dimensions")]
    RaggedCloud,
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("max_dim must be 0, 1 or 2 (got {0})")]
    InvalidMaxDim(usize),
    #[error("explicit threshold must be positive and finite")]
    InvalidThreshold,
    #[error("simplex indices overflow for {points} points in dimension {dim}")]
    ComplexTooLarge { points: usize, dim: usize },
    #[error("diagrams use different scale conventions")]
    ConventionMismatch,
    #[error("malformed diagram: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, PersistenceError>;

/// How filtration values relate to pairwise distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleConvention {
    /// An edge enters when the pairwise distance is at most δ.
    #[default]
    Diameter,
    /// An edge enters when balls of radius δ meet (distance ≤ 2δ).
    Radius,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature<T> {
    pub dim: usize,
    pub birth: T,
    /// `T::infinity()` for essential classes.
    pub death: T,
}

impl<T: Scalar> Feature<T> {
    pub fn persistence(&self) -> T {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }
}

/// Multiset of (dim, birth, death) with zero-persistence features removed.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram<T> {
    features: Vec<Feature<T>>,
    convention: ScaleConvention,
}

impl<T: Scalar> PersistenceDiagram<T> {
    /// Builds a diagram, dropping features with `death == birth` and sorting
    /// by (dim, birth, death).
    pub fn new(features: Vec<Feature<T>>, convention: ScaleConvention) -> Self {
        let mut features: Vec<_> = features.into_iter().filter(|f| f.death > f.birth).collect();
        features.sort_by(|a, b| {
            a.dim
                .cmp(&b.dim)
                .then(cmp_scalar(&a.birth, &b.birth))
                .then(cmp_scalar(&a.death, &b.death))
        });
        Self { features, convention }
    }

    pub fn features(&self) -> &[Feature<T>] {
        &self.features
    }

    pub fn convention(&self) -> ScaleConvention {
        self.convention
    }

    pub fn in_dim(&self, dim: usize) -> impl Iterator<Item = &Feature<T>> + '_ {
        self.features.iter().filter(move |f| f.dim == dim)
    }

    /// Finite (birth, death) pairs in one dimension.
    pub fn finite_pairs(&self, dim: usize) -> Vec<(T, T)> {
        self.in_dim(dim)
            .filter(|f| !f.is_essential())
            .map(|f| (f.birth, f.death))
            .collect()
    }

    pub fn essential_count(&self, dim: usize) -> usize {
        self.in_dim(dim).filter(|f| f.is_essential()).count()
    }

    /// Finite feature of largest persistence in `dim`.
    pub fn most_persistent(&self, dim: usize) -> Option<Feature<T>> {
        self.in_dim(dim)
            .filter(|f| !f.is_essential())
            .copied()
            .max_by(|a, b| cmp_scalar(&a.persistence(), &b.persistence()))
    }

    /// Same diagram expressed in the radius convention (all values halved).
    pub fn to_radius(&self) -> Self {
        match self.convention {
            ScaleConvention::Radius => self.clone(),
            ScaleConvention::Diameter => {
                let two = T::of(2.0);
                Self {
                    features: self
                        .features
                        .iter()
                        .map(|f| Feature {
                            dim: f.dim,
                            birth: f.birth / two,
                            death: f.death / two,
                        })
                        .collect(),
                    convention: ScaleConvention::Radius,
                }
            }
        }
    }

    pub fn to_json(&self) -> String {
        let items: Vec<Value> = self
            .features
            .iter()
            .map(|f| {
                let death = if f.is_essential() {
                    json!("inf")
                } else {
                    json!(f.death.to_f64_lossy())
                };
                json!({"dim": f.dim, "birth": f.birth.to_f64_lossy(), "death": death})
            })
            .collect();
        Value::Array(items).to_string()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| PersistenceError::Malformed(e.to_string()))?;
        let items = v
            .as_array()
            .ok_or_else(|| PersistenceError::Malformed("expected an array of features".into()))?;
        let mut features = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let bad = |what: &str| PersistenceError::Malformed(format!("feature {i}: {what}"));
            let dim = item["dim"].as_u64().ok_or_else(|| bad("dim"))? as usize;
            let birth = item["birth"].as_f64().ok_or_else(|| bad("birth"))?;
            let death = match &item["death"] {
                Value::String(s) if s == "inf" => f64::INFINITY,
                d => d.as_f64().ok_or_else(|| bad("death"))?,
            };
            features.push(feature_checked(dim, birth, death).map_err(|m| bad(&m))?);
        }
        Ok(Self::new(features, ScaleConvention::Diameter))
    }

    /// CSV with header `dim,birth,death`; essential deaths are written `inf`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "dim,birth,death")?;
        for f in &self.features {
            if f.is_essential() {
                writeln!(out, "{},{:?},inf", f.dim, f.birth.to_f64_lossy())?;
            } else {
                writeln!(out, "{},{:?},{:?}", f.dim, f.birth.to_f64_lossy(), f.death.to_f64_lossy())?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut features = Vec::new();
        for (row, line) in input.lines().enumerate() {
            let line = line.map_err(|e| PersistenceError::Malformed(e.to_string()))?;
            let line = line.trim();
            if row == 0 || line.is_empty() {
                continue;
            }
            let bad = |what: &str| PersistenceError::Malformed(format!("row {row}: {what}"));
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 3 {
                return Err(bad("expected 3 columns"));
            }
            let dim = cells[0].parse::<usize>().map_err(|_| bad("dim"))?;
            let birth = cells[1].parse::<f64>().map_err(|_| bad("birth"))?;
            let death = if cells[2] == "inf" {
                f64::INFINITY
            } else {
                cells[2].parse::<f64>().map_err(|_| bad("death"))?
            };
            features.push(feature_checked(dim, birth, death).map_err(|m| bad(&m))?);
        }
        Ok(Self::new(features, ScaleConvention::Diameter))
    }
}

fn feature_checked<T: Scalar>(dim: usize, birth: f64, death: f64) -> std::result::Result<Feature<T>, String> {
    if !birth.is_finite() || birth < 0.0 || death.is_nan() || death < birth {
        return Err(format!("invalid pair ({birth}, {death})"));
    }
    let death = if death.is_infinite() { T::infinity() } else { T::of(death) };
    Ok(Feature {
        dim,
        birth: T::of(birth),
        death,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold<T> {
    /// Enclosing radius of the cloud. Beyond it the complex is a cone, so the
    /// diagram equals that of the full filtration.
    Auto,
    Explicit(T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiltrationParams<T> {
    pub max_dim: usize,
    pub threshold: Threshold<T>,
}

impl<T> Default for FiltrationParams<T> {
    fn default() -> Self {
        Self {
            max_dim: 1,
            threshold: Threshold::Auto,
        }
    }
}

impl<T> FiltrationParams<T> {
    pub fn up_to(max_dim: usize) -> Self {
        Self {
            max_dim,
            threshold: Threshold::Auto,
        }
    }
}

/// Persistence diagram of the Vietoris–Rips filtration of `cloud`.
pub fn vr_persistence<T: Scalar, C: PointCloud<T> + ?Sized>(
    cloud: &C,
    params: &FiltrationParams<T>,
) -> Result<PersistenceDiagram<T>> {
    let n = cloud.n_points();
    if n == 0 {
        return Err(PersistenceError::EmptyCloud);
    }
    if params.max_dim > 2 {
        return Err(PersistenceError::InvalidMaxDim(params.max_dim));
    }
    let d = cloud.point(0).len();
    for i in 0..n {
        let p = cloud.point(i);
        if p.len() != d {
            return Err(PersistenceError::RaggedCloud);
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(PersistenceError::NonFinite { index: i });
        }
    }
    let mut dists = vec![T::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = dist(cloud.point(i), cloud.point(j));
            dists[i * n + j] = v;
            dists[j * n + i] = v;
        }
    }
    let threshold = match params.threshold {
        Threshold::Explicit(t) => {
            if !(t > T::zero()) || !t.is_finite() {
                return Err(PersistenceError::InvalidThreshold);
            }
            t
        }
        Threshold::Auto => (0..n)
            .map(|i| dists[i * n..(i + 1) * n].iter().copied().fold(T::zero(), T::max))
            .fold(T::infinity(), T::min),
    };
    let rips = Rips::new(n, &dists, threshold, params.max_dim)?;
    Ok(PersistenceDiagram::new(rips.compute(), ScaleConvention::Diameter))
}

/// `table[k][m] = C(m, k)`.
struct Binomial {
    table: Vec<Vec<u64>>,
}

impl Binomial {
    fn new(n: usize, k_max: usize) -> Option<Self> {
        let mut table = vec![vec![0u64; n + 1]; k_max + 1];
        for m in 0..=n {
            table[0][m] = 1;
            for k in 1..=k_max.min(m) {
                table[k][m] = if k == m {
                    1
                } else {
                    table[k - 1][m - 1].checked_add(table[k][m - 1])?
                };
            }
        }
        Some(Self { table })
    }

    #[inline]
    fn get(&self, m: usize, k: usize) -> u64 {
        self.table[k][m]
    }
}

type Simplex<T> = (T, u64);

#[derive(Clone, Copy)]
struct Entry<T>(T, u64);

impl<T: Scalar> PartialEq for Entry<T> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Entry<T> {}
impl<T: Scalar> PartialOrd for Entry<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Scalar> Ord for Entry<T> {
    // max-heap top = earliest in filtration order: smallest diameter, then
    // largest index
    fn cmp(&self, o: &Self) -> Ordering {
        cmp_scalar(&o.0, &self.0).then(self.1.cmp(&o.1))
    }
}

struct Rips<'a, T> {
    n: usize,
    dist: &'a [T],
    threshold: T,
    max_dim: usize,
    binom: Binomial,
}

impl<'a, T: Scalar> Rips<'a, T> {
    fn new(n: usize, dist: &'a [T], threshold: T, max_dim: usize) -> Result<Self> {
        let binom = Binomial::new(n, max_dim + 2).ok_or(PersistenceError::ComplexTooLarge {
            points: n,
            dim: max_dim,
        })?;
        Ok(Self {
            n,
            dist,
            threshold,
            max_dim,
            binom,
        })
    }

    #[inline]
    fn d(&self, i: usize, j: usize) -> T {
        self.dist[i * self.n + j]
    }

    /// Vertices of a `dim`-simplex, descending.
    fn vertices(&self, mut idx: u64, dim: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut top = self.n;
        for k in (1..=dim + 1).rev() {
            // largest v < top with C(v, k) <= idx
            let (mut lo, mut hi) = (k - 1, top - 1);
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                if self.binom.get(mid, k) <= idx {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            out.push(lo);
            idx -= self.binom.get(lo, k);
            top = lo;
        }
    }

    /// Cofacets within the threshold of a `dim`-simplex with descending
    /// vertices `verts`.
    fn cofacets(&self, idx: u64, diam: T, verts: &[usize], out: &mut Vec<Simplex<T>>) {
        out.clear();
        let dim = verts.len() - 1;
        let mut below = idx;
        let mut above = 0u64;
        let mut j = 0;
        for v in (0..self.n).rev() {
            if j < verts.len() && verts[j] == v {
                below -= self.binom.get(v, dim + 1 - j);
                above += self.binom.get(v, dim + 2 - j);
                j += 1;
                continue;
            }
            let mut dm = diam;
            for &w in verts {
                dm = dm.max(self.d(v, w));
            }
            if dm <= self.threshold {
                out.push((dm, above + self.binom.get(v, dim + 2 - j) + below));
            }
        }
    }

    fn compute(&self) -> Vec<Feature<T>> {
        let mut features = Vec::new();
        let mut edges: Vec<Simplex<T>> = Vec::new();
        for i in 0..self.n {
            for j in 0..i {
                let dm = self.d(i, j);
                if dm <= self.threshold {
                    edges.push((dm, self.binom.get(i, 2) + j as u64));
                }
            }
        }
        edges.sort_by(|a, b| cmp_scalar(&a.0, &b.0).then(b.1.cmp(&a.1)));

        let mut uf = UnionFind::new(self.n);
        let mut columns = Vec::new();
        let mut verts = Vec::with_capacity(2);
        for &(dm, idx) in &edges {
            self.vertices(idx, 1, &mut verts);
            if uf.union(verts[0], verts[1]) {
                features.push(Feature {
                    dim: 0,
                    birth: T::zero(),
                    death: dm,
                });
            } else {
                columns.push((dm, idx));
            }
        }
        for _ in 0..uf.components {
            features.push(Feature {
                dim: 0,
                birth: T::zero(),
                death: T::infinity(),
            });
        }

        let mut simplices = edges;
        for dim in 1..=self.max_dim {
            sort_reverse_filtration(&mut columns);
            let pivots = self.reduce(dim, &columns, &mut features);
            if dim < self.max_dim {
                let (next, next_columns) = self.next_simplices(dim, &simplices, &pivots);
                simplices = next;
                columns = next_columns;
            }
        }
        features
    }

    /// All (dim+1)-simplices within the threshold, and those among them that
    /// are not already paired (the next round's columns).
    fn next_simplices(
        &self,
        dim: usize,
        simplices: &[Simplex<T>],
        pivots: &HashMap<u64, usize>,
    ) -> (Vec<Simplex<T>>, Vec<Simplex<T>>) {
        let mut all = Vec::new();
        let mut columns = Vec::new();
        let mut verts = Vec::with_capacity(dim + 2);
        for &(diam, idx) in simplices {
            self.vertices(idx, dim, &mut verts);
            for v in (verts[0] + 1)..self.n {
                let mut dm = diam;
                for &w in &verts {
                    dm = dm.max(self.d(v, w));
                }
                if dm > self.threshold {
                    continue;
                }
                let cof = idx + self.binom.get(v, dim + 2);
                all.push((dm, cof));
                if !pivots.contains_key(&cof) {
                    columns.push((dm, cof));
                }
            }
        }
        (all, columns)
    }

    /// Reduces the coboundary columns of `dim`-simplices, appending pairs
    /// to `features`. Returns the map from pivot cofacet to column.
    fn reduce(&self, dim: usize, columns: &[Simplex<T>], features: &mut Vec<Feature<T>>) -> HashMap<u64, usize> {
        let mut pivot_of: HashMap<u64, usize> = HashMap::with_capacity(columns.len());
        let mut reduction: Vec<Vec<Simplex<T>>> = vec![Vec::new(); columns.len()];
        let mut verts = Vec::with_capacity(dim + 2);
        let mut cob = Vec::new();
        let mut heap: BinaryHeap<Entry<T>> = BinaryHeap::new();

        for (pos, &(diam, idx)) in columns.iter().enumerate() {
            self.vertices(idx, dim, &mut verts);
            self.cofacets(idx, diam, &verts, &mut cob);

            let emergent = cob.iter().filter(|c| c.0 == diam).map(|c| c.1).max();
            if let Some(e) = emergent {
                if let std::collections::hash_map::Entry::Vacant(e) = pivot_of.entry(e) {
                    e.insert(pos);
                    continue;
                }
            }

            heap.clear();
            heap.extend(cob.iter().map(|&(d, i)| Entry(d, i)));
            let mut working: Vec<Simplex<T>> = Vec::new();
            loop {
                match pop_pivot(&mut heap) {
                    None => {
                        features.push(Feature {
                            dim,
                            birth: diam,
                            death: T::infinity(),
                        });
                        break;
                    }
                    Some(Entry(death, p)) => {
                        if let Some(&j) = pivot_of.get(&p) {
                            let (dj, ij) = columns[j];
                            working.push((dj, ij));
                            self.push_coboundary(ij, dj, dim, &mut heap, &mut verts, &mut cob);
                            for k in 0..reduction[j].len() {
                                let (dk, ik) = reduction[j][k];
                                working.push((dk, ik));
                                self.push_coboundary(ik, dk, dim, &mut heap, &mut verts, &mut cob);
                            }
                        } else {
                            if death > diam {
                                features.push(Feature { dim, birth: diam, death });
                            }
                            pivot_of.insert(p, pos);
                            reduction[pos] = cancel_mod2(working);
                            break;
                        }
                    }
                }
            }
        }
        pivot_of
    }

    fn push_coboundary(
        &self,
        idx: u64,
        diam: T,
        dim: usize,
        heap: &mut BinaryHeap<Entry<T>>,
        verts: &mut Vec<usize>,
        cob: &mut Vec<Simplex<T>>,
    ) {
        self.vertices(idx, dim, verts);
        self.cofacets(idx, diam, verts, cob);
        heap.extend(cob.iter().map(|&(d, i)| Entry(d, i)));
    }
}

fn sort_reverse_filtration<T: Scalar>(columns: &mut [Simplex<T>]) {
    columns.sort_by(|a, b| cmp_scalar(&b.0, &a.0).then(a.1.cmp(&b.1)));
}

/// Leading entry of a Z/2 heap column, cancelling equal pairs on the way.
fn pop_pivot<T: Scalar>(heap: &mut BinaryHeap<Entry<T>>) -> Option<Entry<T>> {
    loop {
        let top = heap.pop()?;
        match heap.peek() {
            Some(next) if *next == top => {
                heap.pop();
            }
            _ => {
                heap.push(top);
                return Some(top);
            }
        }
    }
}

fn cancel_mod2<T: Scalar>(mut v: Vec<Simplex<T>>) -> Vec<Simplex<T>> {
    v.sort_by_key(|s| s.1);
    let mut out: Vec<Simplex<T>> = Vec::with_capacity(v.len());
    for s in v {
        if out.last().is_some_and(|l| l.1 == s.1) {
            out.pop();
        } else {
            out.push(s);
        }
    }
    out
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    components: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        self.components -= 1;
        true
    }
}

/// Treatment of essential classes when comparing diagrams.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EssentialPolicy<T> {
    #[default]
    Exclude,
    /// Replace infinite deaths with this value.
    Cap(T),
}

/// Bottleneck distance between the `dim` parts of two diagrams, essential
/// classes excluded.
pub fn bottleneck<T: Scalar>(a: &PersistenceDiagram<T>, b: &PersistenceDiagram<T>, dim: usize) -> Result<T> {
    bottleneck_with(a, b, dim, EssentialPolicy::Exclude)
}

pub fn bottleneck_with<T: Scalar>(
    a: &PersistenceDiagram<T>,
    b: &PersistenceDiagram<T>,
    dim: usize,
    policy: EssentialPolicy<T>,
) -> Result<T> {
    if a.convention != b.convention {
        return Err(PersistenceError::ConventionMismatch);
    }
    let pts = |d: &PersistenceDiagram<T>| -> Vec<(T, T)> {
        d.in_dim(dim)
            .filter_map(|f| match (f.is_essential(), policy) {
                (false, _) => Some((f.birth, f.death)),
                (true, EssentialPolicy::Exclude) => None,
                (true, EssentialPolicy::Cap(c)) => Some((f.birth, c.max(f.birth))),
            })
            .collect()
    };
    Ok(bottleneck_pairs(&pts(a), &pts(b)))
}

/// Exact bottleneck distance between two finite multisets of (birth, death).
pub fn bottleneck_pairs<T: Scalar>(a: &[(T, T)], b: &[(T, T)]) -> T {
    let half = T::of(0.5);
    let linf = |p: (T, T), q: (T, T)| (p.0 - q.0).abs().max((p.1 - q.1).abs());
    let mut candidates: Vec<T> = Vec::with_capacity(a.len() * b.len() + a.len() + b.len() + 1);
    candidates.push(T::zero());
    for &p in a {
        candidates.push((p.1 - p.0) * half);
        for &q in b {
            candidates.push(linf(p, q));
        }
    }
    for &q in b {
        candidates.push((q.1 - q.0) * half);
    }
    candidates.sort_by(cmp_scalar);
    candidates.dedup();

    let feasible = |eps: T| -> bool {
        // left: a (0..na) then diagonal copies of b; right: b then diagonal copies of a
        let (na, nb) = (a.len(), b.len());
        let size = na + nb;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); size];
        for i in 0..na {
            for j in 0..nb {
                if linf(a[i], b[j]) <= eps {
                    adj[i].push(j);
                }
            }
            if (a[i].1 - a[i].0) * half <= eps {
                adj[i].push(nb + i);
            }
        }
        for j in 0..nb {
            if (b[j].1 - b[j].0) * half <= eps {
                adj[na + j].push(j);
            }
            adj[na + j].extend(nb..nb + na);
        }
        hopcroft_karp(&adj, size) == size
    };

    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Maximum matching size of a bipartite graph given as left adjacency lists
/// into `0..n_right`.
fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> usize {
    const FREE: usize = usize::MAX;
    let n_left = adj.len();
    let mut match_l = vec![FREE; n_left];
    let mut match_r = vec![FREE; n_right];
    let mut layer = vec![0u32; n_left];
    let mut matched = 0;
    loop {
        // BFS from free left vertices
        let mut queue = std::collections::VecDeque::new();
        for u in 0..n_left {
            if match_l[u] == FREE {
                layer[u] = 0;
                queue.push_back(u);
            } else {
                layer[u] = u32::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == FREE {
                    found = true;
                } else if layer[w] == u32::MAX {
                    layer[w] = layer[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            return matched;
        }
        let mut next_edge = vec![0usize; n_left];
        for u in 0..n_left {
            if match_l[u] == FREE && augment(u, adj, &mut match_l, &mut match_r, &mut layer, &mut next_edge) {
                matched += 1;
            }
        }
    }
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    layer: &mut [u32],
    next_edge: &mut [usize],
) -> bool {
    // iterative DFS along the layered graph
    let mut stack = vec![u];
    while let Some(&x) = stack.last() {
        if next_edge[x] == adj[x].len() {
            layer[x] = u32::MAX;
            stack.pop();
            continue;
        }
        let v = adj[x][next_edge[x]];
        next_edge[x] += 1;
        let w = match_r[v];
        if w == usize::MAX {
            // flip the path recorded on the stack
            let mut v = v;
            while let Some(x) = stack.pop() {
                let prev = match_l[x];
                match_l[x] = v;
                match_r[v] = x;
                v = prev;
            }
            return true;
        }
        if layer[w] == layer[x].wrapping_add(1) {
            stack.push(w);
        }
    }
    false
}

/// Hausdorff distance between two point clouds in the Euclidean metric.
pub fn hausdorff<T: Scalar, A: PointCloud<T> + ?Sized, B: PointCloud<T> + ?Sized>(a: &A, b: &B) -> Result<T> {
    if a.n_points() == 0 || b.n_points() == 0 {
        return Err(PersistenceError::EmptyCloud);
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

fn directed_hausdorff<T: Scalar, A: PointCloud<T> + ?Sized, B: PointCloud<T> + ?Sized>(a: &A, b: &B) -> T {
    (0..a.n_points())
        .map(|i| {
            (0..b.n_points())
                .map(|j| dist(a.point(i), b.point(j)))
                .fold(T::infinity(), T::min)
        })
        .fold(T::zero(), T::max)
}
