//! Communication topology and gossip matrix.
//!
//! The gossip matrix `W` is the unnormalized graph Laplacian by default. Any
//! other symmetric PSD matrix whose sparsity follows the edge set and whose
//! kernel is exactly the consensus line can be supplied through
//! [`GossipMatrix::from_matrix`], which validates those properties numerically.

use std::cell::Cell;
use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Relative threshold below which an eigenvalue counts as zero.
pub const ZERO_EIG_RTOL: f64 = 1e-9;

/// Relative tolerance for the PSD check on eigenvalues.
const PSD_RTOL: f64 = 1e-10;

/// Connected undirected simple graph on `m` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    m: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Topology {
    /// Builds a topology, rejecting self-loops, duplicates, out-of-range
    /// endpoints and disconnected graphs. Edges are stored as `(min, max)`.
    pub fn new(m: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if m < 2 {
            return Err(Error::Topology(format!("need at least 2 nodes, got {m}")));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= m || j >= m {
                return Err(Error::Topology(format!("edge ({i}, {j}) out of range for m = {m}")));
            }
            if i == j {
                return Err(Error::Topology(format!("self-loop at node {i}")));
            }
            let e = (i.min(j), i.max(j));
            if !set.insert(e) {
                return Err(Error::Topology(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
        }
        let topo = Topology { m, edges: set };
        let reached = topo.reachable_from(0);
        if reached < m {
            return Err(Error::Topology(format!(
                "graph is disconnected: only {reached} of {m} nodes reachable from node 0, \
                 so the Laplacian kernel would exceed the consensus line"
            )));
        }
        Ok(topo)
    }

    pub fn path(m: usize) -> Result<Self> {
        Self::new(m, (1..m).map(|i| (i - 1, i)))
    }

    pub fn ring(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::Topology(format!("ring needs at least 3 nodes, got {m}")));
        }
        Self::new(m, (0..m).map(|i| (i, (i + 1) % m)))
    }

    pub fn complete(m: usize) -> Result<Self> {
        Self::new(m, (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))))
    }

    /// Star centred on node 0.
    pub fn star(m: usize) -> Result<Self> {
        Self::new(m, (1..m).map(|j| (0, j)))
    }

    /// Erdős–Rényi graph G(m, p) drawn with ChaCha8 seeded by `seed`.
    /// Fails when the draw is disconnected.
    pub fn erdos_renyi(m: usize, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Topology(format!("edge probability {p} not in [0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Self::new(m, edges)
    }

    /// Parses a generator spec: `path M`, `ring M`, `complete M`, `star M`
    /// or `erdos-renyi M P SEED`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split_whitespace().collect();
        let bad = || Error::Topology(format!("unrecognized topology spec '{spec}'"));
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["path", m] => Self::path(num(m)?),
            ["ring", m] => Self::ring(num(m)?),
            ["complete", m] => Self::complete(num(m)?),
            ["star", m] => Self::star(num(m)?),
            ["erdos-renyi", m, p, seed] => Self::erdos_renyi(
                num(m)?,
                p.parse().map_err(|_| bad())?,
                seed.parse().map_err(|_| bad())?,
            ),
            _ => Err(bad()),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    fn reachable_from(&self, start: usize) -> usize {
        let mut adj = vec![Vec::new(); self.m];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.m];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count
    }

    /// Text form: first line `m`, then one `i j` line per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.m);
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, first) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty topology file".into(),
        })?;
        let m: usize = first.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("expected node count, got '{first}'"),
        })?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let mut it = l.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(i)), Some(Ok(j)), None) => edges.push((i, j)),
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected 'i j', got '{l}'"),
                    })
                }
            }
        }
        Self::new(m, edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Symmetric PSD communication matrix together with its spectral constants.
#[derive(Debug, Clone)]
pub struct GossipMatrix {
    w: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    lambda_max: f64,
    lambda_min_plus: f64,
    chi: f64,
}

impl GossipMatrix {
    /// Unnormalized graph Laplacian of `topology`.
    pub fn laplacian(topology: &Topology) -> Result<Self> {
        let m = topology.m();
        let mut w = DMatrix::zeros(m, m);
        for (i, j) in topology.edges() {
            w[(i, j)] = -1.0;
            w[(j, i)] = -1.0;
            w[(i, i)] += 1.0;
            w[(j, j)] += 1.0;
        }
        Self::from_matrix(w, topology)
    }

    /// Validates an arbitrary gossip matrix against the topology: symmetry,
    /// sparsity pattern, positive semidefiniteness and a one-dimensional
    /// kernel spanned by the all-ones vector.
    pub fn from_matrix(w: DMatrix<f64>, topology: &Topology) -> Result<Self> {
        let m = topology.m();
        if w.nrows() != m || w.ncols() != m {
            return Err(Error::GossipMatrix(format!(
                "matrix is {}x{}, topology has {m} nodes",
                w.nrows(),
                w.ncols()
            )));
        }
        let scale = w.amax().max(f64::MIN_POSITIVE);
        for i in 0..m {
            for j in 0..m {
                if (w[(i, j)] - w[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::GossipMatrix(format!("not symmetric at ({i}, {j})")));
                }
                if i != j && !topology.has_edge(i, j) && w[(i, j)] != 0.0 {
                    return Err(Error::GossipMatrix(format!(
                        "nonzero entry at ({i}, {j}) without an edge"
                    )));
                }
            }
        }
        let eigenvalues = sorted_eigenvalues(&w);
        let (lambda_max, lambda_min_plus) = constants_from_sorted(&eigenvalues)?;
        if eigenvalues[0] < -PSD_RTOL * lambda_max {
            return Err(Error::GossipMatrix(format!(
                "not positive semidefinite: smallest eigenvalue {}",
                eigenvalues[0]
            )));
        }
        let kernel_dim = eigenvalues
            .iter()
            .filter(|&&l| l <= ZERO_EIG_RTOL * lambda_max)
            .count();
        if kernel_dim != 1 {
            return Err(Error::GossipMatrix(format!(
                "kernel has dimension {kernel_dim}, expected 1"
            )));
        }
        let ones = DVector::from_element(m, 1.0);
        let residual = (&w * &ones).norm();
        if residual > 1e-10 * lambda_max * (m as f64).sqrt() {
            return Err(Error::GossipMatrix(format!(
                "W * 1 has norm {residual}; kernel is not the consensus line"
            )));
        }
        Ok(GossipMatrix {
            w,
            eigenvalues,
            lambda_max,
            lambda_min_plus,
            chi: lambda_max / lambda_min_plus,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn m(&self) -> usize {
        self.w.nrows()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn lambda_min_plus(&self) -> f64 {
        self.lambda_min_plus
    }

    /// Condition number `lambda_max / lambda_min_plus`.
    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Implicit `W ⊗ I_d`.
    pub fn lift(&self, d: usize) -> LiftedGossip<'_> {
        assert!(d >= 1, "lift dimension must be positive");
        LiftedGossip {
            gossip: self,
            d,
            rounds: Cell::new(0),
        }
    }
}

/// `W ⊗ I_d` stored as `W` plus the block size. Each [`apply`](Self::apply)
/// is one communication round and is counted.
#[derive(Debug)]
pub struct LiftedGossip<'a> {
    gossip: &'a GossipMatrix,
    d: usize,
    rounds: Cell<u64>,
}

impl LiftedGossip<'_> {
    pub fn block_size(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.gossip.m() * self.d
    }

    /// Returns `(W ⊗ I_d) x` for `x = col[x_1, ..., x_m]`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.rounds.set(self.rounds.get() + 1);
        kron_apply(self.gossip.matrix(), self.d, x)
    }

    /// Number of communication rounds performed so far.
    pub fn rounds(&self) -> u64 {
        self.rounds.get()
    }
}

/// `(W ⊗ I_d) x` without touching any counter.
pub(crate) fn kron_apply(w: &DMatrix<f64>, d: usize, x: &DVector<f64>) -> DVector<f64> {
    let m = w.nrows();
    assert_eq!(x.len(), m * d, "lifted vector has wrong length");
    // Column j of the d x m view is block x_j; (W ⊗ I) x = X W^T = X W.
    let blocks = DMatrix::from_column_slice(d, m, x.as_slice());
    let out = blocks * w;
    DVector::from_column_slice(out.as_slice())
}

fn sorted_eigenvalues(w: &DMatrix<f64>) -> Vec<f64> {
    let mut eig: Vec<f64> = w.clone().symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

fn constants_from_sorted(eig: &[f64]) -> Result<(f64, f64)> {
    let lambda_max = eig.last().copied().unwrap_or(0.0);
    if lambda_max <= 0.0 {
        return Err(Error::NoPositiveEigenvalue);
    }
    let threshold = ZERO_EIG_RTOL * lambda_max;
    let lambda_min_plus = eig
        .iter()
        .copied()
        .find(|&l| l > threshold)
        .ok_or(Error::NoPositiveEigenvalue)?;
    Ok((lambda_max, lambda_min_plus))
}

/// Largest eigenvalue and smallest eigenvalue above `1e-9 * lambda_max` of a
/// symmetric PSD matrix.
pub fn spectral_constants(w: &DMatrix<f64>) -> Result<(f64, f64)> {
    constants_from_sorted(&sorted_eigenvalues(w))
}
