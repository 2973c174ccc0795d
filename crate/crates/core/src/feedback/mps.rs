//! Open-boundary matrix product state with a movable orthogonality center.

use crate::error::{Error, Result};
use crate::linalg::{thin_svd, CMatrix, C64};

/// Rank-3 site tensor, stored row-major over `(left, phys, right)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    left: usize,
    phys: usize,
    right: usize,
    data: Vec<C64>,
}

fn row_major(m: &CMatrix) -> Vec<C64> {
    m.transpose().as_slice().to_vec()
}

impl SiteTensor {
    /// Basis state `|index>` with a bond of dimension `bond` passed through
    /// unchanged.
    pub fn product(phys: usize, index: usize, bond: usize) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); bond * phys * bond];
        for a in 0..bond {
            data[(a * phys + index) * bond + a] = C64::new(1.0, 0.0);
        }
        SiteTensor {
            left: bond,
            phys,
            right: bond,
            data,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.left, self.phys, self.right)
    }

    pub fn get(&self, a: usize, s: usize, b: usize) -> C64 {
        self.data[(a * self.phys + s) * self.right + b]
    }

    fn left_matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(self.left * self.phys, self.right, &self.data)
    }

    fn right_matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(self.left, self.phys * self.right, &self.data)
    }

    fn from_left_matrix(m: &CMatrix, phys: usize) -> Self {
        SiteTensor {
            left: m.nrows() / phys,
            phys,
            right: m.ncols(),
            data: row_major(m),
        }
    }

    fn from_right_matrix(m: &CMatrix, phys: usize) -> Self {
        SiteTensor {
            left: m.nrows(),
            phys,
            right: m.ncols() / phys,
            data: row_major(m),
        }
    }

    /// `A^s` as a `left x right` matrix.
    fn slice(&self, s: usize) -> CMatrix {
        CMatrix::from_fn(self.left, self.right, |a, b| self.get(a, s, b))
    }
}

/// Contiguous group of sites merged into one tensor, row-major over
/// `(left, s_1, ..., s_n, right)`.
struct Block {
    left: usize,
    phys: Vec<usize>,
    right: usize,
    data: Vec<C64>,
}

impl Block {
    fn from_site(site: &SiteTensor) -> Self {
        Block {
            left: site.left,
            phys: vec![site.phys],
            right: site.right,
            data: site.data.clone(),
        }
    }

    fn phys_total(&self) -> usize {
        self.phys.iter().product()
    }

    fn absorb(&mut self, site: &SiteTensor) {
        let rows = self.left * self.phys_total();
        let m = CMatrix::from_row_slice(rows, self.right, &self.data) * site.right_matrix();
        self.data = row_major(&m);
        self.phys.push(site.phys);
        self.right = site.right;
    }

    fn apply(&mut self, gate: &CMatrix) {
        let d = self.phys_total();
        let chunk = d * self.right;
        for a in 0..self.left {
            let slice = &mut self.data[a * chunk..(a + 1) * chunk];
            let x = CMatrix::from_row_slice(d, self.right, slice);
            let y = gate * x;
            slice.copy_from_slice(y.transpose().as_slice());
        }
    }

    fn swap_pair(&mut self) {
        let (d1, d2) = (self.phys[0], self.phys[1]);
        let r = self.right;
        let mut out = vec![C64::new(0.0, 0.0); self.data.len()];
        for a in 0..self.left {
            for s1 in 0..d1 {
                for s2 in 0..d2 {
                    let src = ((a * d1 + s1) * d2 + s2) * r;
                    let dst = ((a * d2 + s2) * d1 + s1) * r;
                    out[dst..dst + r].copy_from_slice(&self.data[src..src + r]);
                }
            }
        }
        self.data = out;
        self.phys.swap(0, 1);
    }
}

/// Singular-value truncation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Singular values below this (absolute) threshold are dropped.
    pub tol: f64,
    pub bond_cap: usize,
}

/// Where the orthogonality center ends up after splitting a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterSide {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct MatrixProductState {
    sites: Vec<SiteTensor>,
    center: usize,
    discarded_weight: f64,
    max_deficit: f64,
}

impl MatrixProductState {
    /// Product state `|i_0> (x) |i_1> (x) ...` given `(phys_dim, index)` per site.
    pub fn product(states: &[(usize, usize)]) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::config("mps", "a chain needs at least one site"));
        }
        let sites = states
            .iter()
            .map(|&(d, idx)| {
                if idx >= d {
                    Err(Error::IndexOutOfRange {
                        index: idx,
                        len: d,
                        context: "product-state site",
                    })
                } else {
                    Ok(SiteTensor::product(d, idx, 1))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MatrixProductState {
            sites,
            center: 0,
            discarded_weight: 0.0,
            max_deficit: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn site(&self, i: usize) -> &SiteTensor {
        &self.sites[i]
    }

    /// Sum of squared singular values dropped so far.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    /// Largest single-truncation norm deficit before renormalisation.
    pub fn max_norm_deficit(&self) -> f64 {
        self.max_deficit
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Inserts a basis-state site before position `pos`; the canonical form is
    /// preserved because the new tensor is an isometry in both directions.
    pub fn insert_product_site(&mut self, pos: usize, phys: usize, index: usize) {
        let bond = if pos == 0 {
            1
        } else {
            self.sites[pos - 1].right
        };
        self.sites.insert(pos, SiteTensor::product(phys, index, bond));
        if self.center >= pos {
            self.center += 1;
        }
    }

    pub fn move_center(&mut self, to: usize) {
        assert!(to < self.sites.len(), "center {to} outside chain of {}", self.sites.len());
        while self.center < to {
            let c = self.center;
            let phys = self.sites[c].phys;
            let qr = self.sites[c].left_matrix().qr();
            let (q, r) = qr.unpack();
            let next = &self.sites[c + 1];
            let merged = r * next.right_matrix();
            let next_phys = next.phys;
            self.sites[c] = SiteTensor::from_left_matrix(&q, phys);
            self.sites[c + 1] = SiteTensor::from_right_matrix(&merged, next_phys);
            self.center += 1;
        }
        while self.center > to {
            let c = self.center;
            let phys = self.sites[c].phys;
            let qr = self.sites[c].right_matrix().adjoint().qr();
            let (q, r) = qr.unpack();
            let prev = &self.sites[c - 1];
            let merged = prev.left_matrix() * r.adjoint();
            let prev_phys = prev.phys;
            self.sites[c] = SiteTensor::from_right_matrix(&q.adjoint(), phys);
            self.sites[c - 1] = SiteTensor::from_left_matrix(&merged, prev_phys);
            self.center -= 1;
        }
    }

    fn merge(&mut self, first: usize, count: usize) -> Block {
        let last = first + count - 1;
        if self.center < first {
            self.move_center(first);
        } else if self.center > last {
            self.move_center(last);
        }
        let mut block = Block::from_site(&self.sites[first]);
        for i in first + 1..=last {
            block.absorb(&self.sites[i]);
        }
        block
    }

    /// Splits `block` back into sites starting at `first`, truncating every
    /// new bond.
    fn split(&mut self, first: usize, mut block: Block, trunc: Truncation, side: CenterSide) -> Result<()> {
        let n = block.phys.len();
        match side {
            CenterSide::Right => {
                for j in 0..n - 1 {
                    let d = block.phys[0];
                    let rest: usize = block.phys[1..].iter().product();
                    let m = CMatrix::from_row_slice(block.left * d, rest * block.right, &block.data);
                    let (u, s, vt) = self.svd_truncate(m, trunc, first + j)?;
                    self.sites[first + j] = SiteTensor::from_left_matrix(&u, d);
                    let sv = CMatrix::from_diagonal(&s.map(|x| C64::new(x, 0.0))) * vt;
                    block = Block {
                        left: sv.nrows(),
                        phys: block.phys[1..].to_vec(),
                        right: block.right,
                        data: row_major(&sv),
                    };
                }
                let d = block.phys[0];
                let m = CMatrix::from_row_slice(block.left * d, block.right, &block.data);
                self.sites[first + n - 1] = SiteTensor::from_left_matrix(&m, d);
                self.center = first + n - 1;
            }
            CenterSide::Left => {
                for j in (1..n).rev() {
                    let d = block.phys[j];
                    let rest: usize = block.phys[..j].iter().product();
                    let m = CMatrix::from_row_slice(block.left * rest, d * block.right, &block.data);
                    let (u, s, vt) = self.svd_truncate(m, trunc, first + j - 1)?;
                    self.sites[first + j] = SiteTensor::from_right_matrix(&vt, d);
                    let us = u * CMatrix::from_diagonal(&s.map(|x| C64::new(x, 0.0)));
                    block = Block {
                        left: block.left,
                        phys: block.phys[..j].to_vec(),
                        right: us.ncols(),
                        data: row_major(&us),
                    };
                }
                let d = block.phys[0];
                let m = CMatrix::from_row_slice(block.left * d, block.right, &block.data);
                self.sites[first] = SiteTensor::from_left_matrix(&m, d);
                self.center = first;
            }
        }
        Ok(())
    }

    fn svd_truncate(
        &mut self,
        m: CMatrix,
        trunc: Truncation,
        bond: usize,
    ) -> Result<(CMatrix, nalgebra::DVector<f64>, CMatrix)> {
        let (u, sv, vt) = thin_svd(&m)?;
        let mut order: Vec<usize> = (0..sv.len()).collect();
        order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
        let total: f64 = sv.iter().map(|s| s * s).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Numerical(format!("state norm collapsed to {total} at bond {bond}")));
        }
        let keep = order
            .iter()
            .take_while(|&&i| sv[i] >= trunc.tol)
            .count()
            .max(1);
        if keep > trunc.bond_cap {
            return Err(Error::BondExplosion {
                dim: keep,
                cap: trunc.bond_cap,
                bond,
            });
        }
        let kept: f64 = order[..keep].iter().map(|&i| sv[i].powi(2)).sum();
        let dropped = total - kept;
        self.discarded_weight += dropped;
        self.max_deficit = self.max_deficit.max(dropped / total);
        let scale = kept.sqrt();
        let u_k = CMatrix::from_fn(u.nrows(), keep, |r, c| u[(r, order[c])]);
        let vt_k = CMatrix::from_fn(keep, vt.ncols(), |r, c| vt[(order[r], c)]);
        let s_k = nalgebra::DVector::from_fn(keep, |i, _| sv[order[i]] / scale);
        Ok((u_k, s_k, vt_k))
    }

    /// Applies a gate on sites `first..first + n` (site `first` is the slow
    /// index of `gate`).
    pub fn apply_gate(
        &mut self,
        first: usize,
        n: usize,
        gate: &CMatrix,
        trunc: Truncation,
        side: CenterSide,
    ) -> Result<()> {
        if n == 0 || first + n > self.sites.len() {
            return Err(Error::IndexOutOfRange {
                index: first + n,
                len: self.sites.len() + 1,
                context: "gate sites",
            });
        }
        let mut block = self.merge(first, n);
        if gate.nrows() != block.phys_total() || gate.ncols() != block.phys_total() {
            return Err(Error::DimensionMismatch {
                expected: block.phys_total(),
                found: gate.nrows(),
                context: "gate dimension",
            });
        }
        block.apply(gate);
        self.split(first, block, trunc, side)
    }

    /// Exchanges sites `i` and `i + 1`.
    pub fn swap(&mut self, i: usize, trunc: Truncation, side: CenterSide) -> Result<()> {
        let mut block = self.merge(i, 2);
        block.swap_pair();
        self.sites.swap(i, i + 1);
        self.split(i, block, trunc, side)
    }

    /// `<O>` for an operator on the center site.
    pub fn local_expectation(&self, op: &CMatrix) -> C64 {
        let site = &self.sites[self.center];
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..site.left {
            for b in 0..site.right {
                for s in 0..site.phys {
                    let bra = site.get(a, s, b).conj();
                    if bra == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for t in 0..site.phys {
                        acc += bra * op[(s, t)] * site.get(a, t, b);
                    }
                }
            }
        }
        acc
    }

    /// `(<psi|psi>, <psi| sum_i O_i |psi>)` by a full left-to-right
    /// contraction; `ops(i)` gives the operator on site `i`, if any.
    pub fn norm_and_sum<'a>(&self, ops: impl Fn(usize) -> Option<&'a CMatrix>) -> (f64, C64) {
        let mut env = CMatrix::identity(1, 1);
        let mut acc = CMatrix::zeros(1, 1);
        for (i, site) in self.sites.iter().enumerate() {
            let slices: Vec<CMatrix> = (0..site.phys).map(|s| site.slice(s)).collect();
            let mut next_env = CMatrix::zeros(site.right, site.right);
            let mut next_acc = CMatrix::zeros(site.right, site.right);
            let env_a: Vec<CMatrix> = slices.iter().map(|a| &env * a).collect();
            for (s, a) in slices.iter().enumerate() {
                let ad = a.adjoint();
                next_env += &ad * &env_a[s];
                next_acc += &ad * (&acc * a);
            }
            if let Some(op) = ops(i) {
                for (s, a) in slices.iter().enumerate() {
                    let ad = a.adjoint();
                    for t in 0..site.phys {
                        let w = op[(s, t)];
                        if w != C64::new(0.0, 0.0) {
                            next_acc += &ad * &env_a[t] * w;
                        }
                    }
                }
            }
            env = next_env;
            acc = next_acc;
        }
        (env[(0, 0)].re, acc[(0, 0)])
    }

    /// Dense state vector, first site slowest. Only for small chains.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut block = Block::from_site(&self.sites[0]);
        for site in &self.sites[1..] {
            block.absorb(site);
        }
        block.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm_hermitian, kron};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const EXACT: Truncation = Truncation {
        tol: 1e-14,
        bond_cap: 256,
    };

    fn random_hermitian(n: usize, rng: &mut StdRng) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    fn dense_apply(state: &[C64], dims: &[usize], first: usize, n: usize, gate: &CMatrix) -> Vec<C64> {
        let mut full = CMatrix::identity(1, 1);
        let mut i = 0;
        while i < dims.len() {
            if i == first {
                full = kron(&full, gate);
                i += n;
            } else {
                full = kron(&full, &CMatrix::identity(dims[i], dims[i]));
                i += 1;
            }
        }
        let v = nalgebra::DVector::from_column_slice(state);
        (full * v).as_slice().to_vec()
    }

    fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn gates_and_swaps_match_dense_evolution() {
        let mut rng = StdRng::seed_from_u64(7);
        let dims = [2, 3, 2, 4];
        let mut mps = MatrixProductState::product(&[(2, 1), (3, 0), (2, 0), (4, 2)]).unwrap();
        let mut dense = mps.to_dense();
        for round in 0..6 {
            let first = round % 3;
            let n = if round % 2 == 0 { 2 } else { 3.min(dims.len() - first) };
            let d: usize = dims[first..first + n].iter().product();
            let gate = expm_hermitian(&random_hermitian(d, &mut rng));
            let side = if round % 2 == 0 { CenterSide::Left } else { CenterSide::Right };
            mps.apply_gate(first, n, &gate, EXACT, side).unwrap();
            dense = dense_apply(&dense, &dims, first, n, &gate);
            assert!(close(&mps.to_dense(), &dense, 1e-12), "round {round}");
        }
        let (norm, _) = mps.norm_and_sum(|_| None);
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(mps.discarded_weight() < 1e-20);
    }

    #[test]
    fn swap_exchanges_sites() {
        let mut rng = StdRng::seed_from_u64(3);
        let mut mps = MatrixProductState::product(&[(2, 0), (3, 0)]).unwrap();
        let gate = expm_hermitian(&random_hermitian(6, &mut rng));
        mps.apply_gate(0, 2, &gate, EXACT, CenterSide::Right).unwrap();
        let before = mps.to_dense();
        mps.swap(0, EXACT, CenterSide::Left).unwrap();
        let after = mps.to_dense();
        assert_eq!(mps.site(0).dims().1, 3);
        for s1 in 0..2 {
            for s2 in 0..3 {
                assert!((before[s1 * 3 + s2] - after[s2 * 2 + s1]).norm() < 1e-13);
            }
        }
        assert_eq!(mps.center(), 0);
    }

    #[test]
    fn center_moves_preserve_state() {
        let mut rng = StdRng::seed_from_u64(11);
        let mut mps = MatrixProductState::product(&[(2, 0), (2, 1), (2, 0), (2, 1)]).unwrap();
        for first in 0..3 {
            let gate = expm_hermitian(&random_hermitian(4, &mut rng));
            mps.apply_gate(first, 2, &gate, EXACT, CenterSide::Right).unwrap();
        }
        let reference = mps.to_dense();
        mps.move_center(0);
        assert!(close(&mps.to_dense(), &reference, 1e-12));
        let z = CMatrix::from_row_slice(2, 2, &[C64::new(1., 0.), C64::new(0., 0.), C64::new(0., 0.), C64::new(-1., 0.)]);
        let local = mps.local_expectation(&z);
        let (_, summed) = mps.norm_and_sum(|i| if i == 0 { Some(&z) } else { None });
        assert!((local - summed).norm() < 1e-12);
    }

    #[test]
    fn truncation_tracks_discarded_weight() {
        // Entangle two qubits with Schmidt coefficients cos(0.1), sin(0.1),
        // then drop the small one.
        let mut mps = MatrixProductState::product(&[(2, 0), (2, 0)]).unwrap();
        let theta = 0.1_f64;
        let (s, c) = theta.sin_cos();
        let z = C64::new(0.0, 0.0);
        let r = |x: f64| C64::new(x, 0.0);
        let gate = CMatrix::from_row_slice(
            4,
            4,
            &[r(c), z, z, r(-s), z, r(1.), z, z, z, z, r(1.), z, r(s), z, z, r(c)],
        );
        let trunc = Truncation { tol: 0.5, bond_cap: 4 };
        mps.apply_gate(0, 2, &gate, trunc, CenterSide::Left).unwrap();
        assert!((mps.discarded_weight() - s * s).abs() < 1e-14);
        assert!((mps.max_norm_deficit() - s * s).abs() < 1e-14);
        let (norm, _) = mps.norm_and_sum(|_| None);
        assert!((norm - 1.0).abs() < 1e-14);
        assert_eq!(mps.max_bond(), 1);
    }

    #[test]
    fn bond_cap_is_enforced() {
        let mut rng = StdRng::seed_from_u64(5);
        let mut mps = MatrixProductState::product(&[(4, 0), (4, 0)]).unwrap();
        let gate = expm_hermitian(&random_hermitian(16, &mut rng));
        let trunc = Truncation { tol: 1e-12, bond_cap: 2 };
        match mps.apply_gate(0, 2, &gate, trunc, CenterSide::Left) {
            Err(Error::BondExplosion { cap: 2, bond: 0, .. }) => {}
            other => panic!("expected bond explosion, got {other:?}"),
        }
    }

    #[test]
    fn inserted_sites_keep_the_state() {
        let mut rng = StdRng::seed_from_u64(9);
        let mut mps = MatrixProductState::product(&[(2, 1), (2, 0)]).unwrap();
        let gate = expm_hermitian(&random_hermitian(4, &mut rng));
        mps.apply_gate(0, 2, &gate, EXACT, CenterSide::Left).unwrap();
        let before = mps.to_dense();
        mps.insert_product_site(1, 3, 0);
        assert_eq!(mps.center(), 0);
        let after = mps.to_dense();
        for s1 in 0..2 {
            for s2 in 0..2 {
                assert!((before[s1 * 2 + s2] - after[(s1 * 3) * 2 + s2]).norm() < 1e-14);
            }
        }
        let (norm, _) = mps.norm_and_sum(|_| None);
        assert!((norm - 1.0).abs() < 1e-13);
    }
}
