//! Exact reliability by arc factoring with reductions.
//!
//! `R(G) = p_e R(G / e) + (1 - p_e) R(G - e)`, applied to an arc at the
//! source after simplifying with reliability-preserving reductions: failed
//! arcs are dropped, perfect arcs contracted, parallel arcs merged, series
//! chains collapsed, and everything that lies on no source-target path is
//! removed. Cost depends on the graph's structure instead of `2^m`, which
//! is what lets sparse networks near the enumeration cap be labeled exactly.

use std::collections::VecDeque;

use crate::error::Result;
use crate::graph::{ArcDistribution, Network};

#[derive(Debug, Clone)]
struct Multigraph {
    nodes: usize,
    arcs: Vec<(usize, usize, f64)>,
    s: usize,
    t: usize,
}

/// Exact two-terminal reliability; agrees with BAT enumeration up to rounding.
pub fn factoring_reliability(net: &Network, dist: &ArcDistribution) -> Result<f64> {
    dist.check_network(net)?;
    let arcs = net
        .arcs()
        .iter()
        .zip(dist.probabilities())
        .map(|(a, &p)| (a.u - 1, a.v - 1, p))
        .collect();
    let g = Multigraph {
        nodes: net.node_count(),
        arcs,
        s: 0,
        t: net.node_count() - 1,
    };
    Ok(solve(g).clamp(0.0, 1.0))
}

fn solve(mut g: Multigraph) -> f64 {
    if let Some(done) = reduce(&mut g) {
        return done;
    }
    // After reduction every arc lies on some s-t path, and s has at least one arc.
    let pick = g
        .arcs
        .iter()
        .position(|&(u, v, _)| u == g.s || v == g.s)
        .expect("source has an incident arc after reduction");
    let (u, v, p) = g.arcs[pick];
    let other = if u == g.s { v } else { u };

    let mut deleted = g.clone();
    deleted.arcs.swap_remove(pick);

    let mut contracted = g;
    contracted.arcs.swap_remove(pick);
    let worked = if other == contracted.t {
        1.0
    } else {
        let s = contracted.s;
        contract(&mut contracted, other, s);
        solve(contracted)
    };
    p * worked + (1.0 - p) * solve(deleted)
}

/// Replaces node `from` by `into` everywhere.
fn contract(g: &mut Multigraph, from: usize, into: usize) {
    for arc in &mut g.arcs {
        if arc.0 == from {
            arc.0 = into;
        }
        if arc.1 == from {
            arc.1 = into;
        }
    }
    if g.s == from {
        g.s = into;
    }
    if g.t == from {
        g.t = into;
    }
}

/// Simplifies `g` in place; returns the answer when it becomes trivial.
fn reduce(g: &mut Multigraph) -> Option<f64> {
    loop {
        if g.s == g.t {
            return Some(1.0);
        }
        let before = g.arcs.len();

        g.arcs.retain(|&(u, v, p)| u != v && p > 0.0);

        if let Some(&(u, v, _)) = g.arcs.iter().find(|a| a.2 >= 1.0) {
            let (keep, gone) = if v == g.s || v == g.t { (v, u) } else { (u, v) };
            contract(g, gone, keep);
            continue;
        }

        merge_parallel(g);
        prune_irrelevant(g);
        if g.arcs.is_empty() {
            return Some(0.0);
        }

        let mut degree = vec![0usize; g.nodes];
        for &(u, v, _) in &g.arcs {
            degree[u] += 1;
            degree[v] += 1;
        }
        let changed_series = series_reduce(g, &degree);

        if g.arcs.len() == 1 {
            let (u, v, p) = g.arcs[0];
            if (u == g.s && v == g.t) || (u == g.t && v == g.s) {
                return Some(p);
            }
        }
        if !changed_series && g.arcs.len() == before {
            return None;
        }
    }
}

fn merge_parallel(g: &mut Multigraph) {
    for arc in &mut g.arcs {
        if arc.0 > arc.1 {
            std::mem::swap(&mut arc.0, &mut arc.1);
        }
    }
    g.arcs
        .sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
    let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(g.arcs.len());
    for &(u, v, p) in &g.arcs {
        match merged.last_mut() {
            Some(last) if last.0 == u && last.1 == v => {
                last.2 = 1.0 - (1.0 - last.2) * (1.0 - p);
            }
            _ => merged.push((u, v, p)),
        }
    }
    g.arcs = merged;
}

/// Collapses one degree-2 internal node; returns whether anything changed.
fn series_reduce(g: &mut Multigraph, degree: &[usize]) -> bool {
    let candidate = (0..g.nodes).find(|&v| v != g.s && v != g.t && degree[v] == 2);
    let Some(mid) = candidate else {
        return false;
    };
    let mut idx = g
        .arcs
        .iter()
        .enumerate()
        .filter(|(_, a)| a.0 == mid || a.1 == mid)
        .map(|(i, _)| i);
    let (i, j) = (idx.next().unwrap(), idx.next().unwrap());
    let far = |a: (usize, usize, f64)| if a.0 == mid { a.1 } else { a.0 };
    let (a, b) = (g.arcs[i], g.arcs[j]);
    let joined = (far(a), far(b), a.2 * b.2);
    g.arcs[i] = joined;
    g.arcs.swap_remove(j);
    true
}

/// Removes arcs that cannot lie on any s-t path: parts outside the source
/// component, dangling pieces, and components hanging off s or t that only
/// touch the rest of the graph through that terminal.
fn prune_irrelevant(g: &mut Multigraph) {
    let adj = adjacency(g);
    let from_s = reach(&adj, g.s, None);
    if !from_s[g.t] {
        g.arcs.clear();
        return;
    }
    let from_t_avoiding_s = reach(&adj, g.t, Some(g.s));
    let from_s_avoiding_t = reach(&adj, g.s, Some(g.t));
    let (s, t) = (g.s, g.t);
    let node_ok = |x: usize| x == s || x == t || (from_t_avoiding_s[x] && from_s_avoiding_t[x]);
    g.arcs.retain(|&(u, v, _)| {
        if !from_s[u] || !from_s[v] {
            return false;
        }
        if (u == s && v == t) || (u == t && v == s) {
            return true;
        }
        node_ok(u) && node_ok(v)
    });

    // Dangling trees: repeatedly drop degree-1 non-terminals.
    loop {
        let mut degree = vec![0usize; g.nodes];
        for &(u, v, _) in &g.arcs {
            degree[u] += 1;
            degree[v] += 1;
        }
        let before = g.arcs.len();
        g.arcs.retain(|&(u, v, _)| {
            let leaf = |x: usize| x != s && x != t && degree[x] == 1;
            !leaf(u) && !leaf(v)
        });
        if g.arcs.len() == before {
            break;
        }
    }
}

fn adjacency(g: &Multigraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.nodes];
    for &(u, v, _) in &g.arcs {
        adj[u].push(v);
        adj[v].push(u);
    }
    adj
}

fn reach(adj: &[Vec<usize>], start: usize, blocked: Option<usize>) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    if let Some(b) = blocked {
        seen[b] = true;
    }
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    if let Some(b) = blocked {
        seen[b] = false;
    }
    seen
}
