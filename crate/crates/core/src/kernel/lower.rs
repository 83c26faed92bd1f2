//! Lowering of complex surrogates to real quadratic constraints.
//!
//! Complex decision variables are stored as interleaved `(re, im)` pairs.
//! A Hermitian form `xᴴMx` becomes the real form with blocks
//! `[[Re M, −Im M], [Im M, Re M]]` and `2·Re(ℓᴴx)` becomes
//! `2(Re ℓ · a + Im ℓ · b)`.

use nalgebra::{Complex, DMatrix};

use super::ipm::QuadConstraint;
use crate::channel::ChannelSet;
use crate::linalg::{gram, hermitian_part, re_inner, sandwich, trace_re};
use crate::model::{PrecoderSet, Scheme};
use crate::scalar::{lit, to_f64, CMat, Real};
use crate::surrogate::{Slot, SurrogateCoefficients};

pub(crate) fn m64<T: Real>(m: &CMat<T>) -> CMat<f64> {
    m.map(|c| Complex::new(to_f64(c.re), to_f64(c.im)))
}

pub(crate) fn mt<T: Real>(m: &CMat<f64>) -> CMat<T> {
    m.map(|c| Complex::new(lit(c.re), lit(c.im)))
}

pub(crate) fn p64<T: Real>(p: &PrecoderSet<T>) -> PrecoderSet<f64> {
    PrecoderSet {
        common: p.common.iter().map(m64).collect(),
        private: p.private.iter().map(|c| c.iter().map(m64).collect()).collect(),
        stream_mode: p.stream_mode,
    }
}

pub(crate) fn pt<T: Real>(p: &PrecoderSet<f64>) -> PrecoderSet<T> {
    PrecoderSet {
        common: p.common.iter().map(mt).collect(),
        private: p.private.iter().map(|c| c.iter().map(mt).collect()).collect(),
        stream_mode: p.stream_mode,
    }
}

pub(crate) fn sur64<T: Real>(s: &SurrogateCoefficients<T>) -> SurrogateCoefficients<f64> {
    SurrogateCoefficients {
        kind: s.kind,
        cell: s.cell,
        user: s.user,
        a: to_f64(s.a),
        linear: s.linear.iter().map(|(slot, a)| (*slot, m64(a))).collect(),
        quadratic: s.quadratic.clone(),
        b: m64(&s.b),
        sigma2: s.sigma2,
    }
}

/// Accumulates one real concave quadratic `c + bᵀz − zᵀQz`.
#[derive(Clone, Debug, Default)]
pub(crate) struct QuadBuilder {
    pub constant: f64,
    linear: Vec<(usize, f64)>,
    blocks: Vec<(Vec<usize>, DMatrix<f64>)>,
}

impl QuadBuilder {
    pub fn new(constant: f64) -> Self {
        Self {
            constant,
            ..Self::default()
        }
    }

    pub fn add_linear(&mut self, i: usize, c: f64) {
        self.linear.push((i, c));
    }

    /// Adds `w·2·Re(ℓᴴx)` where `x_j` lives at `(idx[j], idx[j] + 1)`.
    pub fn add_complex_linear<'a>(
        &mut self,
        idx: &[usize],
        l: impl IntoIterator<Item = &'a Complex<f64>>,
        w: f64,
    ) {
        for (&i, c) in idx.iter().zip(l) {
            self.linear.push((i, 2.0 * w * c.re));
            self.linear.push((i + 1, 2.0 * w * c.im));
        }
    }

    /// Subtracts `w·xᴴMx` for Hermitian `M`.
    pub fn add_hermitian(&mut self, idx: &[usize], m: &CMat<f64>, w: f64) {
        let n = idx.len();
        let mut real = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for a in 0..n {
            for b in 0..n {
                let v = m[(a, b)] * w;
                real[(2 * a, 2 * b)] = v.re;
                real[(2 * a, 2 * b + 1)] = -v.im;
                real[(2 * a + 1, 2 * b)] = v.im;
                real[(2 * a + 1, 2 * b + 1)] = v.re;
            }
        }
        let support = idx.iter().flat_map(|&i| [i, i + 1]).collect();
        self.blocks.push((support, real));
    }

    /// Subtracts `w·Σ z_i²` over the real coordinates `idx`.
    pub fn add_squares(&mut self, idx: &[usize], w: f64) {
        let n = idx.len();
        self.blocks
            .push((idx.to_vec(), DMatrix::<f64>::identity(n, n) * w));
    }

    pub fn finish(self, label: impl Into<String>) -> QuadConstraint {
        let mut support: Vec<usize> = self.blocks.iter().flat_map(|(s, _)| s.iter().copied()).collect();
        support.sort_unstable();
        support.dedup();
        let m = support.len();
        let mut q = vec![0.0; m * m];
        for (idx, block) in &self.blocks {
            let pos: Vec<usize> = idx
                .iter()
                .map(|i| support.binary_search(i).expect("index in support"))
                .collect();
            for (a, &pa) in pos.iter().enumerate() {
                for (b, &pb) in pos.iter().enumerate() {
                    q[pa * m + pb] += block[(a, b)];
                }
            }
        }
        QuadConstraint {
            label: label.into(),
            constant: self.constant,
            linear: self.linear,
            support,
            q,
        }
    }
}

/// Placement of the precoder-block variables.
#[derive(Clone, Debug)]
pub(crate) struct WLayout {
    pub nbs: usize,
    pub d: usize,
    slots: Vec<(Slot, usize)>,
    /// Index of `t[l][k]`, absent without a common message.
    pub t: Option<Vec<Vec<usize>>>,
    pub s: usize,
    pub dim: usize,
}

impl WLayout {
    pub fn new(cells: usize, users: usize, nbs: usize, d: usize, scheme: Scheme) -> Self {
        let mut slots = Vec::new();
        let mut next = 0;
        let size = 2 * nbs * d;
        if scheme == Scheme::Rsma {
            for l in 0..cells {
                slots.push((Slot::Common(l), next));
                next += size;
            }
        }
        for l in 0..cells {
            for k in 0..users {
                slots.push((Slot::Private(l, k), next));
                next += size;
            }
        }
        let t = (scheme == Scheme::Rsma).then(|| {
            (0..cells)
                .map(|_| {
                    (0..users)
                        .map(|_| {
                            next += 1;
                            next - 1
                        })
                        .collect()
                })
                .collect()
        });
        Self {
            nbs,
            d,
            slots,
            t,
            s: next,
            dim: next + 1,
        }
    }

    pub fn offset(&self, slot: Slot) -> Option<usize> {
        self.slots.iter().find(|(s, _)| *s == slot).map(|&(_, o)| o)
    }

    /// Real index of the real part of entry `(r, c)`.
    fn entry(&self, off: usize, r: usize, c: usize) -> usize {
        off + 2 * (c * self.nbs + r)
    }

    pub fn column(&self, off: usize, c: usize) -> Vec<usize> {
        (0..self.nbs).map(|r| self.entry(off, r, c)).collect()
    }

    /// Every real coordinate of a slot.
    pub fn coords(&self, off: usize) -> Vec<usize> {
        (off..off + 2 * self.nbs * self.d).collect()
    }

    pub fn variable_slots(&self) -> impl Iterator<Item = (Slot, usize)> + '_ {
        self.slots.iter().copied()
    }

    pub fn pack(&self, p: &PrecoderSet<f64>, scale: f64, z: &mut [f64]) {
        for &(slot, off) in &self.slots {
            let w = slot.get(p);
            for c in 0..self.d {
                for r in 0..self.nbs {
                    let i = self.entry(off, r, c);
                    z[i] = w[(r, c)].re * scale;
                    z[i + 1] = w[(r, c)].im * scale;
                }
            }
        }
    }

    /// Precoders read from `z`; slots that are not variables are copied
    /// from `fixed`.
    pub fn unpack(&self, z: &[f64], fixed: &PrecoderSet<f64>) -> PrecoderSet<f64> {
        let mut p = fixed.clone();
        for &(slot, off) in &self.slots {
            let w = slot.get_mut(&mut p);
            for c in 0..self.d {
                for r in 0..self.nbs {
                    let i = self.entry(off, r, c);
                    w[(r, c)] = Complex::new(z[i], z[i + 1]);
                }
            }
        }
        p
    }
}

/// Surrogate as a function of the precoders with channels `h[i] = H_lk,i`.
pub(crate) fn lower_w(
    sur: &SurrogateCoefficients<f64>,
    h: &[CMat<f64>],
    lay: &WLayout,
    fixed: &PrecoderSet<f64>,
) -> QuadBuilder {
    let mut q = QuadBuilder::new(sur.a - sur.sigma2 * trace_re(&sur.b));
    for (slot, a) in &sur.linear {
        let hi = &h[slot.bs()];
        match lay.offset(*slot) {
            Some(off) => {
                let l = hi.adjoint() * a;
                for c in 0..lay.d {
                    q.add_complex_linear(&lay.column(off, c), l.column(c).iter(), 1.0);
                }
            }
            None => q.constant += 2.0 * re_inner(a, &(hi * slot.get(fixed))),
        }
    }
    for slot in &sur.quadratic {
        let hi = &h[slot.bs()];
        match lay.offset(*slot) {
            Some(off) => {
                let m = hermitian_part(&sandwich(&hi.adjoint(), &sur.b));
                for c in 0..lay.d {
                    q.add_hermitian(&lay.column(off, c), &m, 1.0);
                }
            }
            None => q.constant -= trace_re(&(&sur.b * gram(&(hi * slot.get(fixed))))),
        }
    }
    q
}

/// Placement of the RIS-block variables: `υ` (flattened `m·N + n`), then
/// `t`, then the objective.
#[derive(Clone, Debug)]
pub(crate) struct RisLayout {
    pub elements: usize,
    pub t: Option<Vec<Vec<usize>>>,
    pub s: usize,
    pub dim: usize,
}

impl RisLayout {
    pub fn new(cells: usize, users: usize, elements: usize, scheme: Scheme) -> Self {
        let mut next = 2 * elements;
        let t = (scheme == Scheme::Rsma).then(|| {
            (0..cells)
                .map(|_| {
                    (0..users)
                        .map(|_| {
                            next += 1;
                            next - 1
                        })
                        .collect()
                })
                .collect()
        });
        Self {
            elements,
            t,
            s: next,
            dim: next + 1,
        }
    }

    pub fn upsilon(&self) -> Vec<usize> {
        (0..self.elements).map(|j| 2 * j).collect()
    }
}

/// Channel pieces such that `H_lk,i = F_lk,i + U_lk diag(υ) G_i`.
pub(crate) struct RisGeometry {
    /// `U[l][k] = [G_ru[l][k][0] … G_ru[l][k][M−1]]`.
    pub u: Vec<Vec<CMat<f64>>>,
    /// `G[i]`, BS-to-RIS legs stacked over RIS index.
    pub g: Vec<CMat<f64>>,
    pub f: Vec<Vec<Vec<CMat<f64>>>>,
}

impl RisGeometry {
    pub fn new<T: Real>(ch: &ChannelSet<T>) -> Self {
        let m_count = ch.ris_count();
        let u = ch
            .ris_user
            .iter()
            .map(|cell| {
                cell.iter()
                    .map(|legs| {
                        let nu = legs.first().map_or(0, |g| g.nrows());
                        let cols: usize = legs.iter().map(|g| g.ncols()).sum();
                        let mut u = CMat::<f64>::zeros(nu, cols);
                        let mut c0 = 0;
                        for g in legs {
                            u.view_mut((0, c0), (nu, g.ncols())).copy_from(&m64(g));
                            c0 += g.ncols();
                        }
                        u
                    })
                    .collect()
            })
            .collect();
        let cells = ch.direct.first().and_then(|c| c.first()).map_or(0, |c| c.len());
        let g = (0..cells)
            .map(|i| {
                let nbs = ch.direct[0][0][i].ncols();
                let rows: usize = (0..m_count).map(|m| ch.bs_ris[m][i].nrows()).sum();
                let mut g = CMat::<f64>::zeros(rows, nbs);
                let mut r0 = 0;
                for m in 0..m_count {
                    let b = &ch.bs_ris[m][i];
                    g.view_mut((r0, 0), (b.nrows(), nbs)).copy_from(&m64(b));
                    r0 += b.nrows();
                }
                g
            })
            .collect();
        let f = ch
            .direct
            .iter()
            .map(|c| c.iter().map(|u| u.iter().map(m64).collect()).collect())
            .collect();
        Self { u, g, f }
    }
}

/// Surrogate as a function of `υ` with the precoders `p` fixed.
pub(crate) fn lower_ris(
    sur: &SurrogateCoefficients<f64>,
    geo: &RisGeometry,
    lay: &RisLayout,
    p: &PrecoderSet<f64>,
) -> QuadBuilder {
    let (l, k) = (sur.cell, sur.user);
    let u = &geo.u[l][k];
    let n = lay.elements;
    let mut q = QuadBuilder::new(sur.a - sur.sigma2 * trace_re(&sur.b));
    let mut lin = vec![Complex::new(0.0, 0.0); n];
    // Σ_t R_t R_tᴴ over quadratic slots.
    let mut rr = CMat::<f64>::zeros(n, n);

    let diag_product = |x: &CMat<f64>, r: &CMat<f64>, out: &mut [Complex<f64>], sign: f64| {
        for qi in 0..n {
            let mut acc = Complex::new(0.0, 0.0);
            for j in 0..r.ncols() {
                acc += x[(qi, j)] * r[(qi, j)].conj();
            }
            out[qi] += acc * sign;
        }
    };

    for (slot, a) in &sur.linear {
        let i = slot.bs();
        let w = slot.get(p);
        let y0 = &geo.f[l][k][i] * w;
        q.constant += 2.0 * re_inner(a, &y0);
        let r = &geo.g[i] * w;
        diag_product(&(u.adjoint() * a), &r, &mut lin, 1.0);
    }
    let ub = u.adjoint() * &sur.b;
    for slot in &sur.quadratic {
        let i = slot.bs();
        let w = slot.get(p);
        let y0 = &geo.f[l][k][i] * w;
        q.constant -= re_inner(&y0, &(&sur.b * &y0));
        let r = &geo.g[i] * w;
        diag_product(&(&ub * &y0), &r, &mut lin, -1.0);
        rr += gram(&r);
    }
    let ubu = &ub * u;
    let c = hermitian_part(&ubu.zip_map(&rr, |a, b| a * b.conj()));
    let idx = lay.upsilon();
    q.add_complex_linear(&idx, lin.iter(), 1.0);
    q.add_hermitian(&idx, &c, 1.0);
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    #[test]
    fn hermitian_form_matches_complex_evaluation() {
        let m = CMat::<f64>::from_row_slice(
            2,
            2,
            &[cx(2.0, 0.0), cx(0.5, -0.3), cx(0.5, 0.3), cx(1.0, 0.0)],
        );
        let l = [cx(0.2, -0.7), cx(-1.1, 0.4)];
        let x = [cx(0.3, 0.9), cx(-0.6, 0.2)];
        let mut b = QuadBuilder::new(1.5);
        b.add_complex_linear(&[0, 2], l.iter(), 1.0);
        b.add_hermitian(&[0, 2], &m, 1.0);
        let g = b.finish("test");
        let z = [x[0].re, x[0].im, x[1].re, x[1].im];

        let xv = nalgebra::DVector::from_row_slice(&x);
        let lv = nalgebra::DVector::from_row_slice(&l);
        let quad = (xv.adjoint() * &m * &xv)[(0, 0)].re;
        let lin = 2.0 * (lv.adjoint() * &xv)[(0, 0)].re;
        assert!((g.value(&z) - (1.5 + lin - quad)).abs() < 1e-12);
    }

    #[test]
    fn layout_round_trip() {
        let lay = WLayout::new(2, 2, 3, 2, Scheme::Rsma);
        assert_eq!(lay.dim, 6 * 12 + 4 + 1);
        let mut p = PrecoderSet::<f64>::zeros(
            &crate::model::NetworkConfig {
                cells: 2,
                users_per_cell: 2,
                bs_antennas: 3,
                ..crate::model::NetworkConfig::scenario1()
            },
            crate::model::StreamMode::Full,
        );
        p.private[1][0][(2, 1)] = cx(0.25, -4.0);
        p.common[0][(0, 0)] = cx(1.0, 2.0);
        let mut z = vec![0.0; lay.dim];
        lay.pack(&p, 1.0, &mut z);
        assert_eq!(lay.unpack(&z, &p), p);
    }
}
