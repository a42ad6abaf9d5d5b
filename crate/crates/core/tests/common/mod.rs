//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize, integer: bool) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if integer {
                        rng.gen_range(0..4) as f64
                    } else {
                        rng.gen_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect()
}

/// Persistence pairs `(dim, birth, death)` from a full boundary-matrix
/// reduction of the Rips filtration; essential classes get `death = inf`.
pub fn naive_vr(points: &[Vec<f64>], max_dim: usize) -> Vec<(usize, f64, f64)> {
    let n = points.len();
    let mut simplices: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut current: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for _ in 0..=max_dim + 1 {
        for s in &current {
            let mut diam = 0.0f64;
            for (i, &a) in s.iter().enumerate() {
                for &b in &s[i + 1..] {
                    diam = diam.max(euclid(&points[a], &points[b]));
                }
            }
            simplices.push((diam, s.clone()));
        }
        current = current
            .iter()
            .flat_map(|s| (s[s.len() - 1] + 1..n).map(move |v| [s.as_slice(), &[v]].concat()))
            .collect();
    }
    simplices.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.len().cmp(&b.1.len()))
            .then(a.1.cmp(&b.1))
    });
    let index: std::collections::HashMap<Vec<usize>, usize> =
        simplices.iter().enumerate().map(|(i, s)| (s.1.clone(), i)).collect();

    // columns as sorted row-index sets over Z/2
    let mut columns: Vec<Vec<usize>> = simplices
        .iter()
        .map(|(_, s)| {
            let mut col: Vec<usize> = if s.len() == 1 {
                Vec::new()
            } else {
                (0..s.len())
                    .map(|skip| {
                        let face: Vec<usize> = s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                        index[&face]
                    })
                    .collect()
            };
            col.sort_unstable();
            col
        })
        .collect();
    let mut owner: std::collections::HashMap<usize, usize> = Default::default();
    let mut paired = vec![false; simplices.len()];
    let mut pairs = Vec::new();
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match owner.get(&low) {
                Some(&k) => {
                    let other = columns[k].clone();
                    columns[j] = symmetric_difference(&columns[j], &other);
                }
                None => break,
            }
        }
        if let Some(&low) = columns[j].last() {
            owner.insert(low, j);
            paired[low] = true;
            paired[j] = true;
            let dim = simplices[low].1.len() - 1;
            if simplices[low].0 < simplices[j].0 && dim <= max_dim {
                pairs.push((dim, simplices[low].0, simplices[j].0));
            }
        }
    }
    for (i, s) in simplices.iter().enumerate() {
        if !paired[i] && s.1.len() - 1 <= max_dim {
            pairs.push((s.1.len() - 1, s.0, f64::INFINITY));
        }
    }
    sort_pairs(&mut pairs);
    pairs
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn sort_pairs(p: &mut [(usize, f64, f64)]) {
    p.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
}

/// Bottleneck distance by enumerating every bijection between the
/// diagonal-augmented diagrams. Factorial cost; keep inputs tiny.
pub fn brute_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let size = a.len() + b.len();
    // left: a then diagonal slots for b; right: b then diagonal slots for a
    let cost = |i: usize, j: usize| -> f64 {
        match (i < a.len(), j < b.len()) {
            (true, true) => (a[i].0 - b[j].0).abs().max((a[i].1 - b[j].1).abs()),
            (true, false) => (a[i].1 - a[i].0) / 2.0,
            (false, true) => (b[j].1 - b[j].0) / 2.0,
            (false, false) => 0.0,
        }
    };
    let mut perm: Vec<usize> = (0..size).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let worst = p.iter().enumerate().map(|(i, &j)| cost(i, j)).fold(0.0, f64::max);
        best = best.min(worst);
    });
    if size == 0 {
        0.0
    } else {
        best
    }
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

pub fn random_diagram(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<(f64, f64)> {
    let n = rng.gen_range(0..=max_len);
    (0..n)
        .map(|_| {
            let b: f64 = rng.gen_range(0.0..2.0);
            (b, b + rng.gen_range(0.01..2.0))
        })
        .collect()
}

/// Every maximal arithmetic progression with common difference `r` in a
/// sorted tick set, as lists of positions.
pub fn maximal_progressions(ticks: &[i64], r: i64) -> Vec<Vec<usize>> {
    let pos: std::collections::HashMap<i64, usize> = ticks.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let mut out = Vec::new();
    for (i, &t) in ticks.iter().enumerate() {
        if pos.contains_key(&(t - r)) {
            continue;
        }
        let mut run = vec![i];
        let mut next = t + r;
        while let Some(&j) = pos.get(&next) {
            run.push(j);
            next += r;
        }
        out.push(run);
    }
    out
}
