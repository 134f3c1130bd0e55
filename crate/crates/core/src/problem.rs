//! Primal problem data and objectives.
//!
//! Node `i` holds `A_i ∈ R^{n×d}` and `b_i ∈ R^n`. The centralized problem is
//!
//! ```text
//! min_{x ∈ Δ_d}  (1/m) ||A x - b||_p + θ <x, log x>
//! ```
//!
//! with `A = col[A_1..A_m]`. The distributed form gives every node its own
//! copy `x_i`, couples them through `(W ⊗ I_d) x = 0` and introduces
//! `y = diag[A_1..A_m] x ∈ R^{mn}`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::network::{kron_apply, GossipMatrix};

/// Tolerance for accepting a point as a member of the simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Standard deviation of the label noise relative to `scale` in
/// [`ProblemInstance::generate`].
pub const NOISE_LEVEL: f64 = 0.1;

/// Per-node data for the entropy-regularized p-norm problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    m: usize,
    n: usize,
    d: usize,
    p: f64,
    theta: f64,
    a: Vec<DMatrix<f64>>,
    b: Vec<DVector<f64>>,
}

impl ProblemInstance {
    pub fn new(p: f64, theta: f64, a: Vec<DMatrix<f64>>, b: Vec<DVector<f64>>) -> Result<Self> {
        let m = a.len();
        if m == 0 {
            return Err(Error::Instance("no nodes".into()));
        }
        if b.len() != m {
            return Err(Error::Instance(format!("{m} matrices but {} label vectors", b.len())));
        }
        let (n, d) = a[0].shape();
        if n == 0 || d == 0 {
            return Err(Error::Instance("empty local blocks".into()));
        }
        for (i, (ai, bi)) in a.iter().zip(&b).enumerate() {
            if ai.shape() != (n, d) {
                return Err(Error::Instance(format!(
                    "A_{i} has shape {:?}, expected ({n}, {d})",
                    ai.shape()
                )));
            }
            if bi.len() != n {
                return Err(Error::Instance(format!("b_{i} has length {}, expected {n}", bi.len())));
            }
        }
        if !(p >= 1.0) {
            return Err(Error::Instance(format!("loss exponent p = {p} must be >= 1")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Instance(format!("entropy weight theta = {theta} must be > 0")));
        }
        Ok(ProblemInstance { m, n, d, p, theta, a, b })
    }

    /// Deterministic random instance. Entries of `A_i` are i.i.d. standard
    /// normal times `scale`; `b_i = A_i x° + noise` for a random simplex point
    /// `x°`, with noise of standard deviation `NOISE_LEVEL * scale`.
    #[allow(clippy::too_many_arguments)]
    pub fn generate(
        seed: u64,
        m: usize,
        n: usize,
        d: usize,
        p: f64,
        theta: f64,
        scale: f64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x0: Vec<f64> = (0..d).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = x0.iter().sum();
        x0.iter_mut().for_each(|v| *v /= total);
        let x0 = DVector::from_vec(x0);
        let mut a = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for _ in 0..m {
            let ai = DMatrix::from_fn(n, d, |_, _| {
                scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            });
            let noise = DVector::from_fn(n, |_, _| {
                NOISE_LEVEL * scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            });
            b.push(&ai * &x0 + noise);
            a.push(ai);
        }
        Self::new(p, theta, a, b)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    /// Rows per node.
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn a(&self) -> &[DMatrix<f64>] {
        &self.a
    }
    pub fn b(&self) -> &[DVector<f64>] {
        &self.b
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`; infinite for `p = 1`.
    pub fn q(&self) -> f64 {
        conjugate_exponent(self.p)
    }

    /// Copy of the instance with a different entropy weight.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.p, theta, self.a.clone(), self.b.clone())
    }

    /// Copy of the instance with a different loss exponent.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(p, self.theta, self.a.clone(), self.b.clone())
    }

    /// Stacked labels `col[b_1..b_m]`.
    pub fn stacked_b(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.m * self.n);
        for (i, bi) in self.b.iter().enumerate() {
            out.rows_mut(i * self.n, self.n).copy_from(bi);
        }
        out
    }

    /// `diag[A_1..A_m] x` for stacked `x ∈ R^{md}`.
    pub fn apply_a(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.m * self.d);
        let mut out = DVector::zeros(self.m * self.n);
        for (i, ai) in self.a.iter().enumerate() {
            let xi = x.rows(i * self.d, self.d);
            out.rows_mut(i * self.n, self.n).copy_from(&(ai * xi));
        }
        out
    }

    /// `diag[A_1..A_m]^T s` for stacked `s ∈ R^{mn}`.
    pub fn apply_at(&self, s: &DVector<f64>) -> DVector<f64> {
        assert_eq!(s.len(), self.m * self.n);
        let mut out = DVector::zeros(self.m * self.d);
        for (i, ai) in self.a.iter().enumerate() {
            let si = s.rows(i * self.n, self.n);
            out.rows_mut(i * self.d, self.d).copy_from(&ai.tr_mul(&si));
        }
        out
    }

    /// `(1/m) ||A x - b||_p + θ <x, log x>` for a single simplex point.
    pub fn primal_objective(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::Dimension { expected: self.d, got: x.len() });
        }
        check_simplex(x.as_slice())?;
        let stacked = DVector::from_fn(self.m * self.d, |k, _| x[k % self.d]);
        let residual = self.apply_a(&stacked) - self.stacked_b();
        Ok(lp_norm(residual.as_slice(), self.p) / self.m as f64 + self.theta * neg_entropy(x.as_slice()))
    }

    /// `||y - b||_p + θ <x, log x>` over all local copies. No `1/m` factor:
    /// at a consensual point with `p = 1` this is `m` times
    /// [`primal_objective`](Self::primal_objective).
    pub fn distributed_objective(&self, state: &PrimalState) -> Result<f64> {
        self.check_state(state)?;
        let residual = &state.y - self.stacked_b();
        let entropy: f64 = (0..self.m).map(|i| neg_entropy(state.block(i).as_slice())).sum();
        Ok(lp_norm(residual.as_slice(), self.p) + self.theta * entropy)
    }

    fn check_state(&self, state: &PrimalState) -> Result<()> {
        if state.x.len() != self.m * self.d {
            return Err(Error::Dimension { expected: self.m * self.d, got: state.x.len() });
        }
        if state.y.len() != self.m * self.n {
            return Err(Error::Dimension { expected: self.m * self.n, got: state.y.len() });
        }
        for i in 0..self.m {
            check_simplex(state.block(i).as_slice())?;
        }
        Ok(())
    }

    /// Largest singular value over all blocks and smallest positive one.
    pub fn data_constants(&self) -> Result<DataConstants> {
        let mut sigma_max = 0.0f64;
        let mut sigma_min_plus = f64::INFINITY;
        for (i, ai) in self.a.iter().enumerate() {
            let sv = ai.singular_values();
            let top = sv.max();
            if top <= 0.0 {
                return Err(Error::Instance(format!(
                    "A_{i} is zero, its smallest positive singular value is undefined"
                )));
            }
            let low = sv
                .iter()
                .copied()
                .filter(|&s| s > 1e-9 * top)
                .fold(f64::INFINITY, f64::min);
            sigma_max = sigma_max.max(top);
            sigma_min_plus = sigma_min_plus.min(low);
        }
        Ok(DataConstants { sigma_max, sigma_min_plus })
    }

    /// Instance text: header `m n d p theta`, then `m·n` rows of `d + 1`
    /// comma-separated reals (row of `A_i` then the matching entry of `b_i`).
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} {} {}\n", self.m, self.n, self.d, self.p, self.theta);
        for (ai, bi) in self.a.iter().zip(&self.b) {
            for r in 0..self.n {
                for c in 0..self.d {
                    let _ = write!(out, "{},", ai[(r, c)]);
                }
                let _ = writeln!(out, "{}", bi[r]);
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty instance file".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: hline,
                msg: format!("header must be 'm n d p theta', got '{header}'"),
            });
        }
        let int = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: hline,
                msg: format!("bad integer '{s}'"),
            })
        };
        let real = |s: &str, line: usize| {
            s.trim().parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("bad real '{s}'"),
            })
        };
        let (m, n, d) = (int(fields[0])?, int(fields[1])?, int(fields[2])?);
        let (p, theta) = (real(fields[3], hline)?, real(fields[4], hline)?);
        let mut a = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for block in 0..m {
            let mut ai = DMatrix::zeros(n, d);
            let mut bi = DVector::zeros(n);
            for r in 0..n {
                let (line, row) = lines.next().ok_or_else(|| Error::Parse {
                    line: hline,
                    msg: format!("truncated: missing row {r} of block {block}"),
                })?;
                let vals = row
                    .split(',')
                    .map(|v| real(v, line))
                    .collect::<Result<Vec<f64>>>()?;
                if vals.len() != d + 1 {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected {} values, got {}", d + 1, vals.len()),
                    });
                }
                for c in 0..d {
                    ai[(r, c)] = vals[c];
                }
                bi[r] = vals[d];
            }
            a.push(ai);
            b.push(bi);
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::Parse {
                line,
                msg: "unexpected trailing rows".into(),
            });
        }
        Self::new(p, theta, a, b)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Local copies `x = col[x_1..x_m]` and auxiliary `y ∈ R^{mn}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalState {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    d: usize,
}

impl PrimalState {
    pub fn new(x: DVector<f64>, y: DVector<f64>, d: usize) -> Self {
        assert!(d > 0 && x.len() % d == 0, "x length must be a multiple of d");
        PrimalState { x, y, d }
    }

    /// Every node holds `x`; `y = A (1 ⊗ x)`.
    pub fn consensual(inst: &ProblemInstance, x: &DVector<f64>) -> Self {
        let stacked = DVector::from_fn(inst.m() * inst.d(), |k, _| x[k % inst.d()]);
        let y = inst.apply_a(&stacked);
        PrimalState::new(stacked, y, inst.d())
    }

    pub fn block(&self, i: usize) -> nalgebra::DVectorView<'_, f64> {
        self.x.rows(i * self.d, self.d)
    }

    pub fn num_blocks(&self) -> usize {
        self.x.len() / self.d
    }

    /// Average of the local copies.
    pub fn mean_block(&self) -> DVector<f64> {
        let m = self.num_blocks();
        let mut out = DVector::zeros(self.d);
        for i in 0..m {
            out += self.block(i);
        }
        out / m as f64
    }
}

/// `σ_max(𝒜) = max_i σ_max(A_i)` and `σ_min⁺(𝒜) = min_i σ_min⁺(A_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataConstants {
    pub sigma_max: f64,
    pub sigma_min_plus: f64,
}

/// `||(W ⊗ I_d) x||_2`. Zero exactly when all local copies agree.
pub fn consensus_residual(w: &GossipMatrix, x: &DVector<f64>) -> f64 {
    let d = x.len() / w.m();
    kron_apply(w.matrix(), d, x).norm()
}

pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `||v||_p` for `p ∈ [1, ∞]`.
pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    } else if p == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else {
        let scale = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        scale * v.iter().map(|x| (x.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `<x, log x>` with `0 log 0 = 0`.
pub fn neg_entropy(x: &[f64]) -> f64 {
    x.iter().map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 }).sum()
}

/// Checks `x ∈ Δ_d` to within [`SIMPLEX_TOL`].
pub fn check_simplex(x: &[f64]) -> Result<()> {
    if let Some(v) = x.iter().find(|&&v| !(v >= -SIMPLEX_TOL)) {
        return Err(Error::NotInSimplex(format!("negative or non-finite entry {v}")));
    }
    let sum: f64 = x.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::NotInSimplex(format!("entries sum to {sum}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn zero_instance(m: usize, n: usize, d: usize, p: f64, theta: f64) -> ProblemInstance {
        ProblemInstance::new(
            p,
            theta,
            vec![DMatrix::zeros(n, d); m],
            vec![DVector::zeros(n); m],
        )
        .unwrap()
    }

    #[test]
    fn zero_data_objective_is_entropy() {
        let inst = zero_instance(3, 2, 2, 2.0, 1.0);
        let x = DVector::from_vec(vec![0.5, 0.5]);
        assert_relative_eq!(inst.primal_objective(&x).unwrap(), -(2f64.ln()), epsilon = 1e-15);
        let x = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(inst.primal_objective(&x).unwrap(), 0.0);
    }

    #[test]
    fn two_node_hand_example() {
        let a = vec![
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
        ];
        let b = vec![DVector::zeros(1), DVector::zeros(1)];
        let inst = ProblemInstance::new(1.0, 0.1, a, b).unwrap();
        let x = DVector::from_vec(vec![0.5, 0.5]);
        // (1/2)(|0.5| + |0.5|) + 0.1 * (0.5 ln 0.5 + 0.5 ln 0.5)
        let hand = 0.5 * (0.5 + 0.5) + 0.1 * (0.5 * 0.5f64.ln() * 2.0);
        assert_relative_eq!(inst.primal_objective(&x).unwrap(), hand, epsilon = 1e-15);
        assert_relative_eq!(hand, 0.5 - 0.1 * 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn rejects_points_off_simplex() {
        let inst = zero_instance(2, 1, 2, 1.0, 1.0);
        assert!(inst.primal_objective(&DVector::from_vec(vec![0.6, 0.6])).is_err());
        assert!(inst.primal_objective(&DVector::from_vec(vec![1.1, -0.1])).is_err());
        assert!(inst.primal_objective(&DVector::from_vec(vec![1.0])).is_err());
    }

    #[test]
    fn distributed_matches_m_times_primal_for_p1() {
        let inst = ProblemInstance::generate(3, 4, 3, 5, 1.0, 0.3, 1.0).unwrap();
        let x = DVector::from_vec(vec![0.1, 0.3, 0.2, 0.25, 0.15]);
        let state = PrimalState::consensual(&inst, &x);
        let dist = inst.distributed_objective(&state).unwrap();
        let prim = inst.primal_objective(&x).unwrap();
        assert_relative_eq!(dist, 4.0 * prim, max_relative = 1e-12);
    }

    #[test]
    fn distributed_zero_data_uniform() {
        let inst = zero_instance(3, 2, 4, 2.0, 0.7);
        let x = DVector::from_element(4, 0.25);
        let state = PrimalState::consensual(&inst, &x);
        assert_relative_eq!(
            inst.distributed_objective(&state).unwrap(),
            3.0 * 0.7 * -(4f64.ln()),
            epsilon = 1e-14
        );
    }

    #[test]
    fn consensus_residual_examples() {
        use crate::network::{GossipMatrix, Topology};
        let g = GossipMatrix::laplacian(&Topology::path(2).unwrap()).unwrap();
        assert_eq!(consensus_residual(&g, &DVector::from_vec(vec![0.3, 0.7, 0.3, 0.7])), 0.0);
        assert_relative_eq!(
            consensus_residual(&g, &DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0])),
            2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn data_constants_examples() {
        let eye = DMatrix::<f64>::identity(3, 3);
        let inst = ProblemInstance::new(2.0, 1.0, vec![eye.clone(); 2], vec![DVector::zeros(3); 2]).unwrap();
        let c = inst.data_constants().unwrap();
        assert_relative_eq!(c.sigma_max, 1.0, epsilon = 1e-14);
        assert_relative_eq!(c.sigma_min_plus, 1.0, epsilon = 1e-14);

        let inst = ProblemInstance::new(
            2.0,
            1.0,
            vec![&eye * 2.0, &eye * 3.0],
            vec![DVector::zeros(3); 2],
        )
        .unwrap();
        let c = inst.data_constants().unwrap();
        assert_relative_eq!(c.sigma_max, 3.0, epsilon = 1e-14);
        assert_relative_eq!(c.sigma_min_plus, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_scale_rejected_by_data_constants() {
        let inst = ProblemInstance::generate(1, 2, 2, 3, 1.0, 1.0, 0.0).unwrap();
        assert!(inst.data_constants().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = ProblemInstance::generate(42, 3, 2, 4, 2.0, 0.5, 1.0).unwrap();
        let b = ProblemInstance::generate(42, 3, 2, 4, 2.0, 0.5, 1.0).unwrap();
        assert_eq!(a, b);
        let c = ProblemInstance::generate(43, 3, 2, 4, 2.0, 0.5, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn text_round_trip_and_errors() {
        let inst = ProblemInstance::generate(5, 2, 3, 2, 1.0, 0.25, 2.0).unwrap();
        let text = inst.to_text();
        assert_eq!(ProblemInstance::parse(&text).unwrap(), inst);

        let truncated: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(ProblemInstance::parse(&truncated).is_err());
        assert!(ProblemInstance::parse("2 1 2 1 0.5\n1,2,3\n1,2\n").is_err());
        assert!(ProblemInstance::parse("2 1 2 1\n").is_err());
    }

    #[test]
    fn hand_written_two_node_file() {
        let text = "2 2 2 1 0.5\n1,0,0.25\n0,2,-1\n3,1,0\n0.5,0.5,1.5\n";
        let inst = ProblemInstance::parse(text).unwrap();
        assert_eq!(inst.m(), 2);
        assert_eq!(inst.q(), f64::INFINITY);
        assert_eq!(inst.a()[0], DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]));
        assert_eq!(inst.a()[1], DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.5, 0.5]));
        assert_eq!(inst.b()[0].as_slice(), &[0.25, -1.0]);
        assert_eq!(inst.b()[1].as_slice(), &[0.0, 1.5]);
        assert_eq!(inst.theta(), 0.5);
    }

    #[test]
    fn lp_norm_cases() {
        let v = [3.0, -4.0];
        assert_eq!(lp_norm(&v, 1.0), 7.0);
        assert_eq!(lp_norm(&v, 2.0), 5.0);
        assert_eq!(lp_norm(&v, f64::INFINITY), 4.0);
        assert_relative_eq!(lp_norm(&v, 3.0), (27.0f64 + 64.0).powf(1.0 / 3.0), epsilon = 1e-14);
        assert_eq!(conjugate_exponent(2.0), 2.0);
        assert_eq!(conjugate_exponent(1.0), f64::INFINITY);
        assert_relative_eq!(conjugate_exponent(3.0), 1.5);
    }
}
