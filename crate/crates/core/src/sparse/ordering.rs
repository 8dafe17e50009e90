//! Fill-reducing ordering by nested dissection with BFS level-set separators.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::CsrMatrix;

/// Subgraphs at or below this size are numbered as they come.
const LEAF_SIZE: usize = 48;

/// A permutation: `perm[k]` is the original index placed at position `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ordering {
    perm: Vec<usize>,
}

impl Ordering {
    pub fn natural(n: usize) -> Self {
        Self { perm: (0..n).collect() }
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

/// Orders the graph of `A + Aᵀ` (diagonal ignored) so that separators come
/// after the parts they split.
pub fn nested_dissection(a: &CsrMatrix) -> Ordering {
    let n = a.nrows();
    let adj = symmetric_adjacency(a);
    let mut label = vec![0u32; n];
    let mut state = Dissection {
        adj: &adj,
        label: &mut label,
        next_label: 1,
        level: vec![usize::MAX; n],
        out: Vec::with_capacity(n),
    };
    state.dissect((0..n).collect());
    debug_assert_eq!(state.out.len(), n);
    Ordering { perm: state.out }
}

struct Adjacency {
    ptr: Vec<usize>,
    idx: Vec<usize>,
}

impl Adjacency {
    fn neighbours(&self, i: usize) -> &[usize] {
        &self.idx[self.ptr[i]..self.ptr[i + 1]]
    }
}

fn symmetric_adjacency(a: &CsrMatrix) -> Adjacency {
    let n = a.nrows();
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j && j < n {
                lists[i].push(j);
                lists[j].push(i);
            }
        }
    }
    let mut ptr = Vec::with_capacity(n + 1);
    let mut idx = Vec::new();
    ptr.push(0);
    for mut l in lists {
        l.sort_unstable();
        l.dedup();
        idx.extend_from_slice(&l);
        ptr.push(idx.len());
    }
    Adjacency { ptr, idx }
}

struct Dissection<'a> {
    adj: &'a Adjacency,
    label: &'a mut [u32],
    next_label: u32,
    level: Vec<usize>,
    out: Vec<usize>,
}

impl Dissection<'_> {
    fn fresh_label(&mut self, nodes: &[usize]) -> u32 {
        let l = self.next_label;
        self.next_label += 1;
        for &v in nodes {
            self.label[v] = l;
        }
        l
    }

    /// BFS inside label `lbl` from `start`; returns nodes grouped by level.
    fn bfs(&mut self, start: usize, lbl: u32) -> Vec<Vec<usize>> {
        let mut levels: Vec<Vec<usize>> = vec![vec![start]];
        let mut seen = Vec::new();
        self.level[start] = 0;
        seen.push(start);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let lv = self.level[v];
            for &w in self.adj.neighbours(v) {
                if self.label[w] == lbl && self.level[w] == usize::MAX {
                    self.level[w] = lv + 1;
                    seen.push(w);
                    if levels.len() <= lv + 1 {
                        levels.push(Vec::new());
                    }
                    levels[lv + 1].push(w);
                    queue.push_back(w);
                }
            }
        }
        for v in seen {
            self.level[v] = usize::MAX;
        }
        levels
    }

    fn dissect(&mut self, nodes: Vec<usize>) {
        if nodes.len() <= LEAF_SIZE {
            self.out.extend_from_slice(&nodes);
            return;
        }
        let lbl = self.fresh_label(&nodes);
        // Split off connected components first.
        let mut levels = self.bfs(nodes[0], lbl);
        let reached: usize = levels.iter().map(Vec::len).sum();
        if reached < nodes.len() {
            let comp: Vec<usize> = levels.concat();
            let cl = self.fresh_label(&comp);
            let rest: Vec<usize> = nodes.iter().copied().filter(|&v| self.label[v] != cl).collect();
            self.dissect(comp);
            self.dissect(rest);
            return;
        }
        // Second sweep from a far node gives a pseudo-peripheral root.
        let far = *levels.last().unwrap().iter().min().unwrap();
        levels = self.bfs(far, lbl);
        if levels.len() < 3 {
            self.out.extend_from_slice(&nodes);
            return;
        }
        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (k, l) in levels.iter().enumerate() {
            acc += l.len();
            if acc >= half {
                mid = k.clamp(1, levels.len() - 2);
                break;
            }
        }
        let first: Vec<usize> = levels[..mid].concat();
        let second: Vec<usize> = levels[mid + 1..].concat();
        let sep = core::mem::take(&mut levels[mid]);
        self.dissect(first);
        self.dissect(second);
        self.out.extend_from_slice(&sep);
    }
}
