//! Directed Erdős-Rényi graphs with a single shared synaptic weight.
//!
//! Neurons are indexed from 0. A graph stores only presynaptic adjacency in
//! compressed form; postsynaptic lists are derived on demand.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::rng::Xoshiro256PlusPlus;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    pub n: usize,
    pub p: f64,
    pub w: f64,
}

impl GraphParams {
    pub fn new(n: usize, p: f64, w: f64) -> Result<Self> {
        let params = Self { n, p, w };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n must be >= 2, got {}", self.n)));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(Error::InvalidParameter(format!("w must be positive, got {}", self.w)));
        }
        Ok(())
    }

    pub fn with_p(&self, p: f64) -> Self {
        Self { p, ..*self }
    }
}

/// Presynaptic adjacency of a directed graph: `presyn(i)` is the sorted,
/// duplicate-free set of neurons `j` with an edge `j -> i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    n: usize,
    weight: f64,
    offsets: Vec<usize>,
    sources: Vec<u32>,
}

impl DirectedGraph {
    /// Builds a graph from explicit presynaptic lists, checking invariants.
    pub fn from_presyn(presyn: Vec<Vec<usize>>, weight: f64) -> Result<Self> {
        let n = presyn.len();
        if n == 0 {
            return Err(Error::InvalidParameter("graph needs at least one neuron".into()));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("w must be positive, got {weight}")));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut sources = Vec::new();
        offsets.push(0);
        for (i, list) in presyn.iter().enumerate() {
            for (k, &j) in list.iter().enumerate() {
                if j >= n {
                    return Err(Error::IndexOutOfRange { index: j, n });
                }
                if j == i {
                    return Err(Error::InvalidParameter(format!("self-loop on neuron {i}")));
                }
                if k > 0 && list[k - 1] >= j {
                    return Err(Error::InvalidParameter(format!(
                        "presynaptic list of neuron {i} is not strictly increasing"
                    )));
                }
                sources.push(j as u32);
            }
            offsets.push(sources.len());
        }
        Ok(Self { n, weight, offsets, sources })
    }

    pub fn empty(n: usize, weight: f64) -> Result<Self> {
        Self::from_presyn(vec![Vec::new(); n], weight)
    }

    pub fn complete(n: usize, weight: f64) -> Result<Self> {
        Self::from_presyn((0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect(), weight)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    #[inline]
    pub fn presyn(&self, i: usize) -> &[u32] {
        &self.sources[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.presyn(to).binary_search(&(from as u32)).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.sources.len()
    }

    pub fn in_degree(&self, i: usize) -> Result<usize> {
        self.check_index(i)?;
        Ok(self.offsets[i + 1] - self.offsets[i])
    }

    pub fn out_degree(&self, i: usize) -> Result<usize> {
        self.check_index(i)?;
        Ok(self.sources.iter().filter(|&&j| j as usize == i).count())
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for &j in &self.sources {
            out[j as usize] += 1;
        }
        out
    }

    /// Postsynaptic adjacency, `post(j)` listing every `i` with `j -> i`.
    pub fn postsynaptic(&self) -> PostAdjacency {
        let degrees = self.out_degrees();
        let mut offsets = Vec::with_capacity(self.n + 1);
        offsets.push(0);
        for d in &degrees {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..self.n].to_vec();
        let mut targets = vec![0u32; self.sources.len()];
        for i in 0..self.n {
            for &j in self.presyn(i) {
                targets[fill[j as usize]] = i as u32;
                fill[j as usize] += 1;
            }
        }
        PostAdjacency { offsets, targets }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(Error::IndexOutOfRange { index: i, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Debug dump: first line `n w`, then `i: j1 j2 ...` per neuron.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {:.16e}", self.n, self.weight)?;
        for i in 0..self.n {
            write!(out, "{i}:")?;
            for j in self.presyn(i) {
                write!(out, " {j}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Compressed postsynaptic lists, sorted within each neuron.
#[derive(Debug, Clone)]
pub struct PostAdjacency {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl PostAdjacency {
    #[inline]
    pub fn post(&self, j: usize) -> &[u32] {
        &self.targets[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }
}

/// Samples a directed Erdős-Rényi graph.
///
/// Draws exactly one uniform per ordered pair `(i, j)`, `i != j`, with the
/// target `i` in the outer loop and the source `j` in the inner loop; the edge
/// `j -> i` is present iff the draw is below `p`.
pub fn generate_er(params: &GraphParams, rng: &mut Xoshiro256PlusPlus) -> Result<DirectedGraph> {
    params.validate()?;
    let n = params.n;
    let mut offsets = Vec::with_capacity(n + 1);
    let mut sources = Vec::with_capacity(((n * (n - 1)) as f64 * params.p * 1.1) as usize + 16);
    offsets.push(0);
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            if rng.next_f64() < params.p {
                sources.push(j as u32);
            }
        }
        offsets.push(sources.len());
    }
    Ok(DirectedGraph { n, weight: params.w, offsets, sources })
}

/// Removes one edge, chosen with a fair coin, from every reciprocal pair.
///
/// Pairs `{i, j}` with `i < j` are visited in increasing `(i, j)` order and one
/// uniform is drawn per reciprocal pair: below one half drops `j -> i`,
/// otherwise `i -> j`. Expected density becomes `p - p^2/2`.
pub fn remove_reciprocal(g: &DirectedGraph, rng: &mut Xoshiro256PlusPlus) -> DirectedGraph {
    let n = g.n;
    let mut presyn: Vec<Vec<u32>> = (0..n).map(|i| g.presyn(i).to_vec()).collect();
    for i in 0..n {
        for &j in g.presyn(i) {
            let j = j as usize;
            if j <= i || !g.has_edge(i, j) {
                continue;
            }
            // edges j -> i and i -> j both present
            if rng.next_f64() < 0.5 {
                let list = &mut presyn[i];
                let pos = list.binary_search(&(j as u32)).unwrap();
                list.remove(pos);
            } else {
                let list = &mut presyn[j];
                let pos = list.binary_search(&(i as u32)).unwrap();
                list.remove(pos);
            }
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut sources = Vec::with_capacity(g.edge_count());
    offsets.push(0);
    for list in presyn {
        sources.extend(list);
        offsets.push(sources.len());
    }
    DirectedGraph { n, weight: g.weight, offsets, sources }
}

pub fn reciprocal_pair_count(g: &DirectedGraph) -> usize {
    (0..g.n)
        .map(|i| g.presyn(i).iter().filter(|&&j| (j as usize) > i && g.has_edge(i, j as usize)).count())
        .sum()
}
