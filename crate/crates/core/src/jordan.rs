//! Finite-dimensional biorthogonal algebra of Jordan cells: canonical
//! chains, triangle transformations, the transposition-symmetric form and the
//! rotation that makes the resolution of identity diagonal.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

type C = Complex64;
type M = DMatrix<C>;
const I: C = C::new(0.0, 1.0);
const RANK_TOL: f64 = 1e-8;
/// Smallest distance between distinct eigenvalues of a random spec.
pub const MIN_SEPARATION: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub lambda: C,
    /// Chain lengths `p_{n,a}` of the cells sharing this eigenvalue.
    pub sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JordanSpec {
    pub cells: Vec<CellSpec>,
}

/// One Jordan cell placed at `offset` in the canonical basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Block {
    pub lambda: C,
    pub size: usize,
    pub offset: usize,
}

impl JordanSpec {
    pub fn single(lambda: C, size: usize) -> Self {
        JordanSpec { cells: vec![CellSpec { lambda, sizes: vec![size] }] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::Parameter("spec has no cells".into()));
        }
        for c in &self.cells {
            if c.sizes.is_empty() || c.sizes.contains(&0) {
                return Err(Error::Parameter("every eigenvalue needs cells of positive size".into()));
            }
            if !(c.lambda.re.is_finite() && c.lambda.im.is_finite()) {
                return Err(Error::Parameter("eigenvalues must be finite".into()));
            }
        }
        for (i, a) in self.cells.iter().enumerate() {
            if self.cells[..i].iter().any(|b| b.lambda == a.lambda) {
                return Err(Error::Parameter("eigenvalues must be distinct across entries".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.cells.iter().flat_map(|c| &c.sizes).sum()
    }

    pub fn blocks(&self) -> Vec<Block> {
        let mut offset = 0;
        let mut out = Vec::new();
        for c in &self.cells {
            for &p in &c.sizes {
                out.push(Block { lambda: c.lambda, size: p, offset });
                offset += p;
            }
        }
        out
    }

    /// Random spec with `N ≤ max_dim` and distinct eigenvalues at least
    /// [`MIN_SEPARATION`] apart, so power ranks stay numerically decidable.
    pub fn random<R: Rng>(rng: &mut R, max_dim: usize) -> Self {
        loop {
            let mut cells: Vec<CellSpec> = Vec::new();
            for _ in 0..rng.gen_range(1..=3) {
                let lambda = C::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                if cells.iter().any(|c| (c.lambda - lambda).norm() < MIN_SEPARATION) {
                    continue;
                }
                let sizes = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(1..=5)).collect();
                cells.push(CellSpec { lambda, sizes });
            }
            let spec = JordanSpec { cells };
            if spec.dim() <= max_dim && spec.validate().is_ok() {
                return spec;
            }
        }
    }
}

/// Direct vectors as the columns of `direct`, conjugate vectors as the rows of `conjugate`.
#[derive(Clone, Debug)]
pub struct BiorthSystem {
    pub direct: M,
    pub conjugate: M,
    pub blocks: Vec<Block>,
}

impl BiorthSystem {
    /// `⟨ψ̃_m|ψ_n⟩`.
    pub fn pairing(&self) -> M {
        &self.conjugate * &self.direct
    }

    /// `Σ|ψ⟩⟨ψ̃|`.
    pub fn resolution(&self) -> M {
        &self.direct * &self.conjugate
    }

    pub fn biorthogonality_residual(&self) -> f64 {
        let n = self.direct.ncols();
        max_abs(&(self.pairing() - M::identity(n, n)))
    }

    /// Largest residual of `(h−λ)ψ_i = ψ_{i−1}` and `ψ̃_i(h−λ) = ψ̃_{i+1}` over all cells.
    pub fn chain_residual(&self, h: &M) -> f64 {
        let n = h.nrows();
        let mut worst = 0.0f64;
        for b in &self.blocks {
            let shifted = h - M::identity(n, n) * b.lambda;
            for i in 0..b.size {
                let col = b.offset + i;
                let lhs = &shifted * self.direct.column(col);
                let target = if i == 0 { lhs.clone() * C::new(0.0, 0.0) } else { self.direct.column(col - 1).into_owned() };
                worst = worst.max(max_abs_iter((lhs - target).iter()));
                let lhs = self.conjugate.row(col) * &shifted;
                let target = if i + 1 == b.size { lhs.clone() * C::new(0.0, 0.0) } else { self.conjugate.row(col + 1).into_owned() };
                worst = worst.max(max_abs_iter((lhs - target).iter()));
            }
        }
        worst
    }
}

fn max_abs_iter<'a, T: Iterator<Item = &'a C>>(it: T) -> f64 {
    it.map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn max_abs(m: &M) -> f64 {
    max_abs_iter(m.iter())
}

/// Canonical Jordan matrix and its standard biorthogonal system.
pub fn build(spec: &JordanSpec) -> Result<(M, BiorthSystem)> {
    spec.validate()?;
    let n = spec.dim();
    let blocks = spec.blocks();
    let mut h = M::zeros(n, n);
    for b in &blocks {
        for i in 0..b.size {
            h[(b.offset + i, b.offset + i)] = b.lambda;
            if i > 0 {
                h[(b.offset + i - 1, b.offset + i)] = C::new(1.0, 0.0);
            }
        }
    }
    let system = BiorthSystem { direct: M::identity(n, n), conjugate: M::identity(n, n), blocks };
    Ok((h, system))
}

/// Per cell, `ψ'_i = Σ_{j≤i} α_{i−j} ψ_j`; the conjugate vectors transform with
/// the inverse Toeplitz coefficients `β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleTransform {
    pub alphas: Vec<Vec<C>>,
}

impl TriangleTransform {
    pub fn identity(spec: &JordanSpec) -> Self {
        let alphas = spec
            .blocks()
            .iter()
            .map(|b| (0..b.size).map(|i| C::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        TriangleTransform { alphas }
    }

    pub fn random<R: Rng>(spec: &JordanSpec, rng: &mut R) -> Self {
        let alphas = spec
            .blocks()
            .iter()
            .map(|b| {
                (0..b.size)
                    .map(|i| {
                        let c = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                        if i == 0 {
                            C::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..std::f64::consts::TAU))
                        } else {
                            c
                        }
                    })
                    .collect()
            })
            .collect();
        TriangleTransform { alphas }
    }

    /// Coefficients of the inverse power series of each `α`.
    pub fn betas(&self) -> Result<Vec<Vec<C>>> {
        self.alphas
            .iter()
            .map(|a| {
                if a.is_empty() || a[0].norm() == 0.0 {
                    return Err(Error::SingularTransform);
                }
                let mut b = vec![C::new(0.0, 0.0); a.len()];
                b[0] = 1.0 / a[0];
                for i in 1..a.len() {
                    let s: C = (1..=i).map(|j| a[j] * b[i - j]).sum();
                    b[i] = -s / a[0];
                }
                Ok(b)
            })
            .collect()
    }
}

/// Upper-triangular Toeplitz matrix `T[j,i] = c_{i−j}`.
fn toeplitz(c: &[C]) -> M {
    let p = c.len();
    M::from_fn(p, p, |j, i| if j <= i { c[i - j] } else { C::new(0.0, 0.0) })
}

/// Largest entry of `α̂β̂ − I` and `β̂α̂ − I` over the cells.
pub fn triangle_constraint_residual(t: &TriangleTransform) -> Result<f64> {
    let betas = t.betas()?;
    let mut worst = 0.0f64;
    for (a, b) in t.alphas.iter().zip(&betas) {
        let (ta, tb) = (toeplitz(a), toeplitz(b));
        let id = M::identity(a.len(), a.len());
        worst = worst.max(max_abs(&(&ta * &tb - &id))).max(max_abs(&(&tb * &ta - &id)));
    }
    Ok(worst)
}

pub fn triangle(system: &BiorthSystem, transform: &TriangleTransform) -> Result<BiorthSystem> {
    if transform.alphas.len() != system.blocks.len()
        || transform.alphas.iter().zip(&system.blocks).any(|(a, b)| a.len() != b.size)
    {
        return Err(Error::Parameter("transform does not match the cell structure".into()));
    }
    let betas = transform.betas()?;
    let mut out = system.clone();
    for ((b, a), be) in system.blocks.iter().zip(&transform.alphas).zip(&betas) {
        let (o, p) = (b.offset, b.size);
        let cols = system.direct.columns(o, p) * toeplitz(a);
        out.direct.columns_mut(o, p).copy_from(&cols);
        let rows = toeplitz(be) * system.conjugate.rows(o, p);
        out.conjugate.rows_mut(o, p).copy_from(&rows);
    }
    Ok(out)
}

/// Block-diagonal reversal `j ↦ p−1−j` inside every cell.
fn reversal(blocks: &[Block], n: usize) -> M {
    let mut r = M::zeros(n, n);
    for b in blocks {
        for j in 0..b.size {
            r[(b.offset + j, b.offset + b.size - 1 - j)] = C::new(1.0, 0.0);
        }
    }
    r
}

/// `h = Σ_{ij} |ψ_i⟩ h_ij ⟨ψ̂_j|` and `1 = Σ_{ij} |ψ_i⟩ identity_ij ⟨ψ̂_j|`
/// with the renumbered conjugate basis `ψ̂_j = ψ̃_{p−1−j}`.
#[derive(Clone, Debug)]
pub struct TSymmetricForm {
    pub h: M,
    pub identity: M,
    /// Rows are `ψ̂_j`.
    pub hat: M,
}

pub fn t_symmetric_form(system: &BiorthSystem, h: &M) -> TSymmetricForm {
    let n = h.nrows();
    let r = reversal(&system.blocks, n);
    let hat = &r * &system.conjugate;
    // ψ̂ = Rψ̃ and Rψ̃ψ = R, so the coefficients are ψ̃ h ψ R and R.
    let coeff = &system.conjugate * h * &system.direct * &r;
    let identity = &system.conjugate * &system.direct * &r;
    TSymmetricForm { h: coeff, identity, hat }
}

/// `max|A − Aᵀ|`.
pub fn transpose_asymmetry(a: &M) -> f64 {
    max_abs(&(a - a.transpose()))
}

/// `Ω` for one cell: pairs `(i, p−1−i)` become `(κψ_i + ψ_{p−1−i}/κ)/√2` and
/// `i(κψ_i − ψ_{p−1−i}/κ)/√2`; the middle vector of an odd cell stays.
pub fn cell_rotation(p: usize, kappa: f64) -> M {
    let mut o = M::zeros(p, p);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..p / 2 {
        let j = p - 1 - i;
        o[(i, i)] = C::new(kappa * s, 0.0);
        o[(j, i)] = C::new(s / kappa, 0.0);
        o[(i, j)] = I * kappa * s;
        o[(j, j)] = -I * s / kappa;
    }
    if p % 2 == 1 {
        o[(p / 2, p / 2)] = C::new(1.0, 0.0);
    }
    o
}

#[derive(Clone, Debug)]
pub struct Rotated {
    /// Columns are `Ψ_a`.
    pub basis: M,
    /// Rows are `Ψ̃_a`.
    pub conjugate: M,
    /// Coefficient matrix of `h`.
    pub h: M,
    /// Coefficient matrix of the identity resolution.
    pub identity: M,
    pub omega: M,
    pub blocks: Vec<Block>,
}

pub fn diagonalize_identity(system: &BiorthSystem, form: &TSymmetricForm, kappa: f64) -> Result<Rotated> {
    if !(kappa.is_finite() && kappa != 0.0) {
        return Err(Error::Parameter("kappa must be finite and nonzero".into()));
    }
    let n = form.h.nrows();
    let mut omega = M::zeros(n, n);
    for b in &system.blocks {
        omega.view_mut((b.offset, b.offset), (b.size, b.size)).copy_from(&cell_rotation(b.size, kappa));
    }
    let inv = omega.clone().try_inverse().ok_or(Error::SingularTransform)?;
    let inv_t = inv.transpose();
    Ok(Rotated {
        basis: &system.direct * &omega,
        conjugate: omega.transpose() * &form.hat,
        h: &inv * &form.h * &inv_t,
        identity: &inv * &form.identity * &inv_t,
        omega,
        blocks: system.blocks.clone(),
    })
}

impl Rotated {
    /// `h` rebuilt as `Σ|Ψ_a⟩h_ab⟨Ψ̃_b|`.
    pub fn reconstruct(&self) -> M {
        &self.basis * &self.h * &self.conjugate
    }

    pub fn cell(&self, index: usize) -> M {
        let b = self.blocks[index];
        self.h.view((b.offset, b.offset), (b.size, b.size)).into_owned()
    }
}

/// The printed symmetric `2×2` matrix for `λ = −α²`.
pub fn mansym_cell(alpha: f64, kappa: f64) -> M {
    let a2 = alpha * alpha;
    let q = 1.0 / (2.0 * kappa * kappa);
    M::from_row_slice(2, 2, &[C::new(-a2 + q, 0.0), C::new(0.0, -q), C::new(0.0, -q), C::new(-a2 - q, 0.0)])
}

pub fn rank(m: &M, tol: f64) -> usize {
    let sv = m.clone().singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > tol * top.max(1.0)).count()
}

/// `rank((h−λ)^m)` for `m = 1..=max_power`.
pub fn power_ranks(h: &M, lambda: C, max_power: usize) -> Vec<usize> {
    let n = h.nrows();
    let shifted = h - M::identity(n, n) * lambda;
    let mut p = M::identity(n, n);
    (0..max_power)
        .map(|_| {
            p = &p * &shifted;
            rank(&p, RANK_TOL)
        })
        .collect()
}

/// Ranks implied by the cell sizes.
pub fn expected_ranks(spec: &JordanSpec, lambda: C, max_power: usize) -> Vec<usize> {
    let n = spec.dim();
    let sizes: Vec<usize> = spec.cells.iter().filter(|c| c.lambda == lambda).flat_map(|c| c.sizes.clone()).collect();
    (1..=max_power).map(|m| n - sizes.iter().map(|&p| p.min(m)).sum::<usize>()).collect()
}

/// Null vector of `A − λ` (unit Euclidean norm) and the count of singular values above tolerance.
pub fn eigenvector(a: &M, lambda: C) -> (Vec<C>, usize) {
    let n = a.nrows();
    let svd = (a - M::identity(n, n) * lambda).svd(false, true);
    let vt = svd.v_t.expect("requested");
    let (idx, _) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    let r = svd.singular_values.iter().filter(|s| **s > RANK_TOL).count();
    (vt.row(idx).iter().map(|v| v.conj()).collect(), r)
}

pub fn bilinear(u: &[C], v: &[C]) -> C {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Forced to vanish.
    Zero,
    /// On the anti-diagonal: all equal and nonzero.
    AntiDiagonal,
    Free,
}

/// Pattern of the bilinear pairings `(ψ_i, ψ_j)` inside one cell of a
/// transposition-symmetric operator.
pub fn binorm_structure(p: usize) -> Result<Vec<Vec<Pairing>>> {
    if p == 0 {
        return Err(Error::Parameter("cell size must be positive".into()));
    }
    Ok((0..p)
        .map(|i| {
            (0..p)
                .map(|j| match (i + j).cmp(&(p - 1)) {
                    std::cmp::Ordering::Less => Pairing::Zero,
                    std::cmp::Ordering::Equal => Pairing::AntiDiagonal,
                    std::cmp::Ordering::Greater => Pairing::Free,
                })
                .collect()
        })
        .collect())
}

/// A complex-symmetric matrix `h = hᵀ` with a single cell of size `p`, and its
/// chain (columns), so that the conjugate vectors are the transposed chain.
pub fn symmetric_realization(lambda: C, p: usize, kappa: f64) -> Result<(M, M)> {
    let spec = JordanSpec::single(lambda, p);
    let (h, sys) = build(&spec)?;
    let form = t_symmetric_form(&sys, &h);
    let chain = cell_rotation(p, kappa).try_inverse().ok_or(Error::SingularTransform)?;
    let hs = &chain * &form.h * chain.transpose();
    Ok((hs, chain))
}

/// Whether a Gram matrix follows [`binorm_structure`] to `tol`.
pub fn matches_structure(gram: &M, tol: f64) -> Result<bool> {
    let p = gram.nrows();
    let pattern = binorm_structure(p)?;
    let anti = gram[(0, p - 1)];
    if anti.norm() <= tol {
        return Ok(false);
    }
    for i in 0..p {
        for j in 0..p {
            let ok = match pattern[i][j] {
                Pairing::Zero => gram[(i, j)].norm() <= tol,
                Pairing::AntiDiagonal => (gram[(i, j)] - anti).norm() <= tol,
                Pairing::Free => true,
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Residuals of one random round trip.
#[derive(Clone, Debug, Serialize)]
pub struct RoundTrip {
    pub dim: usize,
    pub triangle_constraint: f64,
    pub chain: f64,
    pub biorthogonality: f64,
    pub t_symmetry: f64,
    pub identity_antidiagonal: f64,
    pub identity_diagonal: f64,
    pub reconstruction: f64,
    pub ranks_preserved: bool,
    /// Largest `|vᵀv|` of a unit eigenvector of a rotated cell with `p ≥ 2`.
    pub eigenvector_self_pairing: f64,
    /// Smallest `|vᵀw|` against its partner `w` over those cells.
    pub eigenvector_partner_pairing: f64,
    /// Rotated cells whose `h − λ` does not have rank `p − 1`.
    pub rank_defects: usize,
}

impl RoundTrip {
    pub fn worst(&self) -> f64 {
        [
            self.triangle_constraint,
            self.chain,
            self.biorthogonality,
            self.t_symmetry,
            self.identity_antidiagonal,
            self.identity_diagonal,
            self.reconstruction,
            self.eigenvector_self_pairing,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst() <= tol && self.ranks_preserved && self.rank_defects == 0 && self.eigenvector_partner_pairing > 0.1
    }
}

pub fn round_trip(spec: &JordanSpec, transform: &TriangleTransform, kappa: f64) -> Result<RoundTrip> {
    let n = spec.dim();
    let (h, sys) = build(spec)?;
    let moved = triangle(&sys, transform)?;
    let form = t_symmetric_form(&moved, &h);
    let rot = diagonalize_identity(&moved, &form, kappa)?;
    let r = reversal(&moved.blocks, n);
    let back = rot.reconstruct();
    let maxp = spec.cells.iter().flat_map(|c| &c.sizes).copied().max().unwrap_or(1) + 1;
    let ranks_preserved = spec
        .cells
        .iter()
        .all(|c| power_ranks(&back, c.lambda, maxp) == expected_ranks(spec, c.lambda, maxp));
    let mut self_pair = 0.0f64;
    let mut partner = f64::INFINITY;
    let mut defects = 0;
    for (i, b) in rot.blocks.iter().enumerate() {
        if b.size < 2 {
            continue;
        }
        let cell = rot.cell(i);
        let (v, r) = eigenvector(&cell, b.lambda);
        if r != b.size - 1 {
            defects += 1;
        }
        self_pair = self_pair.max(bilinear(&v, &v).norm());
        // The partner of Ω⁻¹e₀ is Ω⁻¹e_{p−1}, rescaled to the same phase and norm as v.
        let inv = cell_rotation(b.size, kappa).try_inverse().ok_or(Error::SingularTransform)?;
        let e0: Vec<C> = inv.column(0).iter().copied().collect();
        let scale = bilinear(&e0.iter().map(|c| c.conj()).collect::<Vec<_>>(), &v) / e0.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let w: Vec<C> = inv.column(b.size - 1).iter().map(|c| c * scale).collect();
        partner = partner.min(bilinear(&v, &w).norm());
    }
    Ok(RoundTrip {
        dim: n,
        triangle_constraint: triangle_constraint_residual(transform)?,
        chain: moved.chain_residual(&h),
        biorthogonality: moved.biorthogonality_residual(),
        t_symmetry: transpose_asymmetry(&form.h),
        identity_antidiagonal: max_abs(&(&form.identity - &r)),
        identity_diagonal: max_abs(&(&rot.identity - M::identity(n, n))),
        reconstruction: max_abs(&(back - &h)),
        ranks_preserved,
        eigenvector_self_pairing: self_pair,
        eigenvector_partner_pairing: if partner.is_finite() { partner } else { 1.0 },
        rank_defects: defects,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RandomSummary {
    pub seed: u64,
    pub cases: usize,
    pub passed: usize,
    pub worst: f64,
    pub max_dim: usize,
}

/// Seeded random specs (`N ≤ max_dim`) with random triangle transforms and `κ`.
pub fn random_round_trips(seed: u64, cases: usize, max_dim: usize, tol: f64) -> Result<RandomSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    let mut worst = 0.0f64;
    let mut dim = 0;
    for _ in 0..cases {
        let spec = JordanSpec::random(&mut rng, max_dim);
        let t = TriangleTransform::random(&spec, &mut rng);
        let kappa = rng.gen_range(0.5..2.0);
        let rt = round_trip(&spec, &t, kappa)?;
        worst = worst.max(rt.worst());
        dim = dim.max(rt.dim);
        if rt.passes(tol) {
            passed += 1;
        }
    }
    Ok(RandomSummary { seed, cases, passed, worst, max_dim: dim })
}
