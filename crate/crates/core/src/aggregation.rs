//! Greedy three-phase aggregation of a strength graph.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::strength::StrengthGraph;

pub const UNASSIGNED: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregation {
    assignment: Vec<usize>,
    roots: Vec<usize>,
}

impl Aggregation {
    /// Wrap an explicit assignment; ids must be `0..k` and `UNASSIGNED` is
    /// allowed (the tentative prolongator then refuses it).
    pub fn from_assignment(assignment: Vec<usize>) -> Self {
        let k = assignment.iter().filter(|&&a| a != UNASSIGNED).max().map_or(0, |m| m + 1);
        let mut roots = vec![UNASSIGNED; k];
        for (v, &a) in assignment.iter().enumerate() {
            if a != UNASSIGNED && roots[a] == UNASSIGNED {
                roots[a] = v;
            }
        }
        Aggregation { assignment, roots }
    }

    pub fn n_fine(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_aggregates(&self) -> usize {
        self.roots.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_aggregates()];
        for &a in &self.assignment {
            if a != UNASSIGNED {
                s[a] += 1;
            }
        }
        s
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.n_aggregates()];
        for (v, &a) in self.assignment.iter().enumerate() {
            if a != UNASSIGNED {
                m[a].push(v);
            }
        }
        m
    }

    /// n_fine × n_aggregates 0/1 matrix with one entry per row.
    pub fn tentative_prolongator(&self) -> Result<CsrMatrix> {
        if let Some(vertex) = self.assignment.iter().position(|&a| a == UNASSIGNED) {
            return Err(Error::IncompleteAggregation { vertex });
        }
        let n = self.n_fine();
        Ok(CsrMatrix::from_parts(
            n,
            self.n_aggregates(),
            (0..=n).collect(),
            self.assignment.clone(),
            vec![1.0; n],
        ))
    }

    /// One aggregate id per line, in vertex order.
    pub fn write_ids<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::with_capacity(8 * self.n_fine());
        for &a in &self.assignment {
            if a == UNASSIGNED {
                s.push_str("-1\n");
            } else {
                s.push_str(&format!("{a}\n"));
            }
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }
}

/// Symmetric closure of the strength graph.
fn undirected(g: &StrengthGraph) -> Vec<Vec<usize>> {
    let n = g.nrows();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for &j in g.row(i) {
            if j != i {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

pub fn aggregate(g: &StrengthGraph) -> Aggregation {
    let order: Vec<usize> = (0..g.nrows()).collect();
    aggregate_with_order(g, &order)
}

/// Aggregate with the Phase-1 root scan following `order` (a permutation of
/// the vertices). Phases 2 and 3 always scan in ascending index order.
pub fn aggregate_with_order(g: &StrengthGraph, order: &[usize]) -> Aggregation {
    let n = g.nrows();
    assert_eq!(order.len(), n, "scan order must cover every vertex");
    let adj = undirected(g);
    let mut assign = vec![UNASSIGNED; n];
    let mut roots = Vec::new();

    // Phase 1: roots untouched by any aggregate claim their strong
    // out-neighbors.
    for &v in order {
        if assign[v] != UNASSIGNED || adj[v].iter().any(|&u| assign[u] != UNASSIGNED) {
            continue;
        }
        let out: Vec<usize> = g.row(v).iter().copied().filter(|&u| u != v && assign[u] == UNASSIGNED).collect();
        if out.is_empty() {
            continue;
        }
        let id = roots.len();
        roots.push(v);
        assign[v] = id;
        for u in out {
            assign[u] = id;
        }
    }

    // Phase 2: attach leftovers to the aggregate they are most connected to,
    // judged against the Phase-1 assignment.
    let snapshot = assign.clone();
    let mut count = vec![0usize; roots.len()];
    let mut touched = Vec::new();
    for v in 0..n {
        if snapshot[v] != UNASSIGNED {
            continue;
        }
        let mut bump = |u: usize| {
            let a = snapshot[u];
            if u != v && a != UNASSIGNED {
                if count[a] == 0 {
                    touched.push(a);
                }
                count[a] += 1;
            }
        };
        for &u in g.row(v) {
            bump(u);
        }
        // in-edges: u -> v
        for &u in &adj[v] {
            if g.contains(u, v) {
                bump(u);
            }
        }
        if let Some(&best) = touched.iter().max_by(|&&a, &&b| count[a].cmp(&count[b]).then(b.cmp(&a))) {
            assign[v] = best;
        }
        for &a in &touched {
            count[a] = 0;
        }
        touched.clear();
    }

    // Phase 3: connected clusters of what is left.
    let mut queue = VecDeque::new();
    for s in 0..n {
        if assign[s] != UNASSIGNED {
            continue;
        }
        let id = roots.len();
        roots.push(s);
        assign[s] = id;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if assign[u] == UNASSIGNED {
                    assign[u] = id;
                    queue.push_back(u);
                }
            }
        }
    }
    Aggregation { assignment: assign, roots }
}
