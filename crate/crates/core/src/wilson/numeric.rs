//! Numeric transport along sampled loops, finite-difference loop variations and simplex quadrature.

use std::f64::consts::TAU;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{Complex, DMatrix};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex<f64>>;

fn czero(n: usize) -> CMat {
    CMat::zeros(n, n)
}

fn cid(n: usize) -> CMat {
    CMat::identity(n, n)
}

fn fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Closed parametrized loop `t in [0, 1]` with its tangent.
pub trait NumLoop {
    fn m(&self) -> usize;
    /// `(gamma(t), gamma'(t))`.
    fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>);
}

/// Loop given by a closure.
pub struct FnLoop<F: Fn(f64) -> (Vec<f64>, Vec<f64>)> {
    pub m: usize,
    pub f: F,
}

impl<F: Fn(f64) -> (Vec<f64>, Vec<f64>)> NumLoop for FnLoop<F> {
    fn m(&self) -> usize {
        self.m
    }

    fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        (self.f)(t)
    }
}

/// Loop sampled at `t_j = j / J`, `j = 0..J`, with tangents; cubic Hermite in between.
#[derive(Clone, Debug)]
pub struct SampledLoop {
    pub points: Vec<Vec<f64>>,
    pub tangents: Vec<Vec<f64>>,
}

impl SampledLoop {
    pub fn new(points: Vec<Vec<f64>>, tangents: Vec<Vec<f64>>) -> Result<SampledLoop> {
        if points.len() != tangents.len() || points.len() < 17 {
            return Err(Error::Config("a sampled loop needs J >= 16 points and tangents".into()));
        }
        let m = points[0].len();
        if points.iter().chain(&tangents).any(|p| p.len() != m) {
            return Err(Error::Dimension("sample dimensions differ".into()));
        }
        let (first, last) = (&points[0], &points[points.len() - 1]);
        let scale = first.iter().map(|x| x.abs()).fold(1.0, f64::max);
        if first.iter().zip(last).any(|(a, b)| (a - b).abs() > 1e-9 * scale) {
            return Err(Error::Config("sampled loop is not closed".into()));
        }
        Ok(SampledLoop { points, tangents })
    }

    pub fn from_loop(lp: &dyn NumLoop, samples: usize) -> Result<SampledLoop> {
        let (points, tangents) = (0..=samples).map(|j| lp.eval(j as f64 / samples as f64)).unzip();
        SampledLoop::new(points, tangents)
    }
}

impl NumLoop for SampledLoop {
    fn m(&self) -> usize {
        self.points[0].len()
    }

    fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let j_max = self.points.len() - 1;
        let h = 1.0 / j_max as f64;
        let s = (t.clamp(0.0, 1.0) / h).min(j_max as f64 - 1e-12);
        let j = s.floor() as usize;
        let u = s - j as f64;
        let (p0, p1, m0, m1) = (&self.points[j], &self.points[j + 1], &self.tangents[j], &self.tangents[j + 1]);
        let (h00, h10, h01, h11) = (
            2.0 * u.powi(3) - 3.0 * u * u + 1.0,
            u.powi(3) - 2.0 * u * u + u,
            -2.0 * u.powi(3) + 3.0 * u * u,
            u.powi(3) - u * u,
        );
        let (d00, d10, d01, d11) = (6.0 * u * u - 6.0 * u, 3.0 * u * u - 4.0 * u + 1.0, -6.0 * u * u + 6.0 * u, 3.0 * u * u - 2.0 * u);
        let x = (0..p0.len())
            .map(|i| h00 * p0[i] + h10 * h * m0[i] + h01 * p1[i] + h11 * h * m1[i])
            .collect();
        let v = (0..p0.len())
            .map(|i| (d00 * p0[i] + d01 * p1[i]) / h + d10 * m0[i] + d11 * m1[i])
            .collect();
        (x, v)
    }
}

/// Loop `gamma + eps v` for a variation field returning `(v, v')`.
struct Varied<'a> {
    base: &'a dyn NumLoop,
    v: &'a dyn Fn(f64) -> (Vec<f64>, Vec<f64>),
    eps: f64,
}

impl NumLoop for Varied<'_> {
    fn m(&self) -> usize {
        self.base.m()
    }

    fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let (mut x, mut dx) = self.base.eval(t);
        let (v, dv) = (self.v)(t);
        for i in 0..x.len() {
            x[i] += self.eps * v[i];
            dx[i] += self.eps * dv[i];
        }
        (x, dx)
    }
}

/// Smooth `gl(N)`-valued connection on `R^m` with its curvature.
pub trait Connection: Sync {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    /// Components `A_j(x)`.
    fn a(&self, x: &[f64]) -> Vec<CMat>;
    /// Components `F_jk(x) = d_j A_k - d_k A_j + [A_j, A_k]`.
    fn curvature(&self, x: &[f64]) -> Vec<Vec<CMat>>;

    /// `A(x) . v`.
    fn contract(&self, x: &[f64], v: &[f64]) -> CMat {
        let mut out = czero(self.n());
        for (aj, vj) in self.a(x).iter().zip(v) {
            out += aj * Complex::new(*vj, 0.0);
        }
        out
    }
}

/// One Fourier mode `M cos(w . x + phi)`.
#[derive(Clone, Debug)]
pub struct TrigMode {
    pub w: Vec<f64>,
    pub phase: f64,
    pub mat: CMat,
}

/// Connection with components `A_j = sum_r M_{jr} cos(w_{jr} . x + phi_{jr})`.
#[derive(Clone, Debug)]
pub struct TrigConnection {
    pub n: usize,
    pub modes: Vec<Vec<TrigMode>>,
}

impl TrigConnection {
    /// Random connection with `modes` terms per component, entries uniform in `[-scale, scale]`.
    pub fn random<R: Rng>(rng: &mut R, n: usize, m: usize, modes: usize, scale: f64) -> TrigConnection {
        let modes = (0..m)
            .map(|_| {
                (0..modes)
                    .map(|_| TrigMode {
                        w: (0..m).map(|_| rng.gen_range(-1.5..1.5)).collect(),
                        phase: rng.gen_range(0.0..std::f64::consts::TAU),
                        mat: CMat::from_fn(n, n, |_, _| {
                            Complex::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
                        }),
                    })
                    .collect()
            })
            .collect();
        TrigConnection { n, modes }
    }

    fn deriv(&self, j: usize, k: usize, x: &[f64]) -> CMat {
        let mut out = czero(self.n);
        for md in &self.modes[j] {
            let arg: f64 = md.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + md.phase;
            out -= &md.mat * Complex::new(md.w[k] * arg.sin(), 0.0);
        }
        out
    }
}

impl Connection for TrigConnection {
    fn n(&self) -> usize {
        self.n
    }

    fn m(&self) -> usize {
        self.modes.len()
    }

    fn a(&self, x: &[f64]) -> Vec<CMat> {
        self.modes
            .iter()
            .map(|comp| {
                let mut out = czero(self.n);
                for md in comp {
                    let arg: f64 = md.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + md.phase;
                    out += &md.mat * Complex::new(arg.cos(), 0.0);
                }
                out
            })
            .collect()
    }

    fn curvature(&self, x: &[f64]) -> Vec<Vec<CMat>> {
        let a = self.a(x);
        let m = self.m();
        (0..m)
            .map(|j| {
                (0..m)
                    .map(|k| self.deriv(k, j, x) - self.deriv(j, k, x) + (&a[j] * &a[k] - &a[k] * &a[j]))
                    .collect()
            })
            .collect()
    }
}

/// Flat connection `g^{-1} C g + g^{-1} dg` for `g(x) = exp(x_1 X_1) ... exp(x_m X_m)` and constant
/// commuting `C_j`. It is periodic on `T^m` when every `exp(2 pi X_j) = 1`.
#[derive(Clone, Debug)]
pub struct PureGauge {
    pub generators: Vec<CMat>,
    pub background: Vec<CMat>,
}

impl Connection for PureGauge {
    fn n(&self) -> usize {
        self.generators[0].nrows()
    }

    fn m(&self) -> usize {
        self.generators.len()
    }

    fn a(&self, x: &[f64]) -> Vec<CMat> {
        let m = self.m();
        // (g^{-1} dg)_j = h_j^{-1} X_j h_j with h_j = exp(x_{j+1} X_{j+1}) ... exp(x_m X_m)
        let mut tail = cid(self.n());
        let mut out = vec![czero(self.n()); m];
        for j in (0..m).rev() {
            let inv = tail.clone().try_inverse().expect("exponentials are invertible");
            out[j] = &inv * &self.generators[j] * &tail;
            tail = (&self.generators[j] * Complex::new(x[j], 0.0)).exp() * tail;
        }
        let ginv = tail.clone().try_inverse().expect("exponentials are invertible");
        for (o, c) in out.iter_mut().zip(&self.background) {
            *o += &ginv * c * &tail;
        }
        out
    }

    fn curvature(&self, _x: &[f64]) -> Vec<Vec<CMat>> {
        vec![vec![czero(self.n()); self.m()]; self.m()]
    }
}

/// `H(0, t_j)` at `t_j = j / steps` for `H' = H A(gamma')`, classical RK4.
pub fn transport_rk4(conn: &dyn Connection, lp: &dyn NumLoop, steps: usize) -> Vec<CMat> {
    let h = 1.0 / steps as f64;
    let mat = |t: f64| {
        let (x, v) = lp.eval(t);
        conn.contract(&x, &v)
    };
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = cid(conn.n());
    out.push(y.clone());
    let hc = Complex::new(h, 0.0);
    for j in 0..steps {
        let t = j as f64 * h;
        let (m0, m1, m2) = (mat(t), mat(t + h / 2.0), mat(t + h));
        let k1 = &y * &m0;
        let k2 = (&y + &k1 * (hc / 2.0)) * &m1;
        let k3 = (&y + &k2 * (hc / 2.0)) * &m1;
        let k4 = (&y + &k3 * hc) * &m2;
        y += (k1 + k2 * Complex::new(2.0, 0.0) + k3 * Complex::new(2.0, 0.0) + k4) * (hc / 6.0);
        out.push(y.clone());
    }
    out
}

/// RK4 transport on `steps` and `2 steps` intervals combined by step doubling, `(16 H_{2J} - H_J) / 15`.
pub fn transport_extrapolated(conn: &dyn Connection, lp: &dyn NumLoop, steps: usize) -> Vec<CMat> {
    let coarse = transport_rk4(conn, lp, steps);
    let fine = transport_rk4(conn, lp, 2 * steps);
    coarse
        .iter()
        .enumerate()
        .map(|(j, c)| (&fine[2 * j] * Complex::new(16.0, 0.0) - c) / Complex::new(15.0, 0.0))
        .collect()
}

/// Composite Simpson rule on equally spaced samples over `[0, 1]`.
fn simpson(samples: &[CMat]) -> CMat {
    let j = samples.len() - 1;
    assert!(j % 2 == 0, "Simpson needs an even number of intervals");
    let h = 1.0 / j as f64;
    let mut acc = czero(samples[0].nrows());
    for (i, s) in samples.iter().enumerate() {
        let w = if i == 0 || i == j {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += s * Complex::new(w * h / 3.0, 0.0);
    }
    acc
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationStep {
    pub eps: f64,
    pub relative_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationReport {
    pub samples: usize,
    pub steps: Vec<VariationStep>,
    pub richardson_residual: f64,
    pub rhs_norm: f64,
    pub curvature_norm: f64,
}

/// Forward differences of `hol(gamma + eps v)(0, 1)` against
/// `-A_v(0) H + H A_v(0) - int_0^1 H(0, s) F(gamma', v)(s) H(s, 1) ds`.
pub fn check_holonomy_variation(
    conn: &dyn Connection,
    lp: &dyn NumLoop,
    v: &dyn Fn(f64) -> (Vec<f64>, Vec<f64>),
    eps: &[f64],
    samples: usize,
) -> Result<VariationReport> {
    if eps.len() < 2 || eps.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::Config("the eps schedule must be positive and strictly decreasing".into()));
    }
    if samples < 16 || samples % 4 != 0 {
        return Err(Error::Config("need a multiple of 4, at least 16, samples".into()));
    }
    let hs = transport_extrapolated(conn, lp, samples);
    let hol = hs[samples].clone();
    let (x0, _) = lp.eval(0.0);
    let (v0, _) = v(0.0);
    let av = conn.contract(&x0, &v0);
    let integrand: Vec<CMat> = hs
        .iter()
        .enumerate()
        .map(|(j, h)| {
            let t = j as f64 / samples as f64;
            let (x, dx) = lp.eval(t);
            let (vt, _) = v(t);
            let f = conn.curvature(&x);
            let mut fv = czero(conn.n());
            for (a, row) in f.iter().enumerate() {
                for (b, fab) in row.iter().enumerate() {
                    fv += fab * Complex::new(dx[a] * vt[b], 0.0);
                }
            }
            let hinv = h.clone().try_inverse().expect("transport is invertible");
            h * fv * hinv
        })
        .collect();
    // Simpson on the full and the every-other grid, combined by step doubling
    let half: Vec<CMat> = integrand.iter().step_by(2).cloned().collect();
    let curv = (simpson(&integrand) * Complex::new(16.0, 0.0) - simpson(&half)) / Complex::new(15.0, 0.0);
    let rhs = -&av * &hol + &hol * &av - &curv * &hol;
    let rhs_norm = fro(&rhs);
    let fd: Vec<CMat> = eps
        .iter()
        .map(|&e| {
            let varied = Varied { base: lp, v, eps: e };
            let he = transport_extrapolated(conn, &varied, samples);
            (&he[samples] - &hol) / Complex::new(e, 0.0)
        })
        .collect();
    let steps = eps
        .iter()
        .zip(&fd)
        .map(|(&e, d)| VariationStep {
            eps: e,
            relative_residual: fro(&(d - &rhs)) / rhs_norm,
        })
        .collect();
    // Neville table extrapolating the differences polynomially in eps to eps = 0
    let mut table = fd;
    for k in 1..eps.len() {
        table = (k..eps.len())
            .map(|i| {
                let r = eps[i - k] / eps[i];
                (&table[i - k + 1] * Complex::new(r, 0.0) - &table[i - k]) / Complex::new(r - 1.0, 0.0)
            })
            .collect();
    }
    let rich = table.pop().expect("nonempty schedule");
    Ok(VariationReport {
        samples,
        steps,
        richardson_residual: fro(&(rich - &rhs)) / rhs_norm,
        rhs_norm,
        curvature_norm: fro(&curv),
    })
}

/// Matrix-valued `p`-form field on `R^m`, evaluated on `p` vectors.
pub trait FormField {
    fn degree(&self) -> usize;
    fn eval(&self, x: &[f64], vectors: &[Vec<f64>]) -> CMat;
}

/// Form field with components `B_I = sum_r M_{Ir} cos(w . x + phi)` over increasing multi-indices `I`.
#[derive(Clone, Debug)]
pub struct TrigFormField {
    pub n: usize,
    pub components: Vec<(Vec<usize>, Vec<TrigMode>)>,
}

fn det_minor(vectors: &[Vec<f64>], idx: &[usize]) -> f64 {
    let p = idx.len();
    if p == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut perm: Vec<usize> = (0..p).collect();
    // Heap's algorithm over permutations with sign tracking
    let mut c = vec![0usize; p];
    let mut sign = 1.0;
    let term = |perm: &[usize]| (0..p).map(|a| vectors[a][idx[perm[a]]]).product::<f64>();
    total += sign * term(&perm);
    let mut i = 0;
    while i < p {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            total += sign * term(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    total
}

impl TrigFormField {
    /// Random `p`-form with one mode per component.
    pub fn random<R: Rng>(rng: &mut R, n: usize, m: usize, p: usize, scale: f64) -> TrigFormField {
        let mut components = Vec::new();
        for mask in 0u32..(1 << m) {
            if mask.count_ones() as usize != p {
                continue;
            }
            let idx: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
            let mode = TrigMode {
                w: (0..m).map(|_| rng.gen_range(-1.5..1.5)).collect(),
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
                mat: CMat::from_fn(n, n, |_, _| Complex::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))),
            };
            components.push((idx, vec![mode]));
        }
        TrigFormField { n, components }
    }
}

impl FormField for TrigFormField {
    fn degree(&self) -> usize {
        self.components.first().map_or(0, |c| c.0.len())
    }

    fn eval(&self, x: &[f64], vectors: &[Vec<f64>]) -> CMat {
        let mut out = czero(self.n);
        for (idx, modes) in &self.components {
            let w = det_minor(vectors, idx);
            if w == 0.0 {
                continue;
            }
            for md in modes {
                let arg: f64 = md.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + md.phase;
                out += &md.mat * Complex::new(w * arg.cos(), 0.0);
            }
        }
        out
    }
}

/// `h_n = tr[chen(B^, ..., B^) hol_A(0, 1)]` with `B^(t) = H_A(0, t) B(gamma', v_1, ...) H_A(0, t)^{-1}`,
/// read off as the `s^n` coefficient of `tr hol_{A + sB}`.
/// `tangents` holds the `(m - 3) n` loop-space tangent vector fields; supported for `m = 3` or `n <= 1`.
pub fn classical_wilson(
    conn: &dyn Connection,
    b: &dyn FormField,
    lp: &dyn NumLoop,
    n: usize,
    tangents: &[&dyn Fn(f64) -> Vec<f64>],
    steps: usize,
) -> Result<Complex<f64>> {
    let m = lp.m();
    if m < 3 || b.degree() != m - 2 {
        return Err(Error::Dimension(format!("B must be an (m - 2)-form with m >= 3, got degree {} for m = {m}", b.degree())));
    }
    if tangents.len() != (m - 3) * n {
        return Err(Error::Config(format!(
            "h_{n} needs {} loop-space tangent vectors, got {}",
            (m - 3) * n,
            tangents.len()
        )));
    }
    if m > 3 && n > 1 {
        return Err(Error::Unsupported("contracted h_n for m > 3 is implemented for n <= 1".into()));
    }
    let size = conn.n();
    let mats = |t: f64| {
        let (x, v) = lp.eval(t);
        let mut vecs = vec![v.clone()];
        vecs.extend(tangents.iter().map(|f| f(t)));
        (conn.contract(&x, &v), b.eval(&x, &vecs))
    };
    let h = 1.0 / steps as f64;
    let hc = Complex::new(h, 0.0);
    let mut y: Vec<CMat> = (0..=n).map(|k| if k == 0 { cid(size) } else { czero(size) }).collect();
    let rhs = |y: &[CMat], (ma, mb): &(CMat, CMat)| -> Vec<CMat> {
        (0..y.len())
            .map(|k| {
                let mut d = &y[k] * ma;
                if k > 0 {
                    d += &y[k - 1] * mb;
                }
                d
            })
            .collect()
    };
    let axpy = |y: &[CMat], k: &[CMat], s: Complex<f64>| -> Vec<CMat> { y.iter().zip(k).map(|(a, b)| a + b * s).collect() };
    for j in 0..steps {
        let t = j as f64 * h;
        let (m0, m1, m2) = (mats(t), mats(t + h / 2.0), mats(t + h));
        let k1 = rhs(&y, &m0);
        let k2 = rhs(&axpy(&y, &k1, hc / 2.0), &m1);
        let k3 = rhs(&axpy(&y, &k2, hc / 2.0), &m1);
        let k4 = rhs(&axpy(&y, &k3, hc), &m2);
        for i in 0..y.len() {
            y[i] += (&k1[i] + &k2[i] * Complex::new(2.0, 0.0) + &k3[i] * Complex::new(2.0, 0.0) + &k4[i]) * (hc / 6.0);
        }
    }
    Ok(y[n].trace())
}

/// Iterated integral `int_{t_1 < ... < t_L} X(t_1) ... X(t_L)` by tensor Gauss-Legendre in collapsed coordinates.
pub fn chen_quadrature(letter: &dyn Fn(f64) -> CMat, size: usize, len: usize, nodes: usize) -> Result<CMat> {
    if len == 0 {
        return Ok(cid(size));
    }
    if len > 4 {
        return Err(Error::Unsupported("simplex quadrature supports words of length <= 4".into()));
    }
    let deg = NonZeroUsize::new(nodes).ok_or_else(|| Error::Config("need at least one node".into()))?;
    let rule = GaussLegendre::new(deg);
    let pts: Vec<(f64, f64)> = rule.as_node_weight_pairs().iter().map(|&(x, w)| ((x + 1.0) / 2.0, w / 2.0)).collect();
    let mut acc = czero(size);
    let mut idx = vec![0usize; len];
    loop {
        // u_L = t_L, t_{k} = u_k t_{k+1}
        let mut t = vec![0.0; len];
        let mut weight = 1.0;
        let mut upper = 1.0;
        for k in (0..len).rev() {
            let (u, w) = pts[idx[k]];
            t[k] = u * upper;
            weight *= w * upper;
            upper = t[k];
        }
        let mut prod = cid(size);
        for &tk in &t {
            prod *= letter(tk);
        }
        acc += prod * Complex::new(weight, 0.0);
        let mut k = 0;
        while k < len {
            idx[k] += 1;
            if idx[k] < nodes {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == len {
            break;
        }
    }
    Ok(acc)
}

/// Trefoil knot in `R^3` parametrized over `[0, 1]`.
pub fn trefoil(t: f64) -> (Vec<f64>, Vec<f64>) {
    let s = TAU * t;
    (
        vec![s.sin() + 2.0 * (2.0 * s).sin(), s.cos() - 2.0 * (2.0 * s).cos(), -(3.0 * s).sin()],
        vec![
            TAU * (s.cos() + 4.0 * (2.0 * s).cos()),
            TAU * (-s.sin() + 4.0 * (2.0 * s).sin()),
            -3.0 * TAU * (3.0 * s).cos(),
        ],
    )
}

/// Smooth periodic variation field with its `t`-derivative.
pub fn smooth_variation(t: f64) -> (Vec<f64>, Vec<f64>) {
    let s = TAU * t;
    (
        vec![s.cos(), (2.0 * s).sin(), 0.5],
        vec![-TAU * s.sin(), 2.0 * TAU * (2.0 * s).cos(), 0.0],
    )
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    const EPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

    #[test]
    fn holonomy_variation_random_gl2() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let conn = TrigConnection::random(&mut rng, 2, 3, 2, 0.5);
        let lp = FnLoop { m: 3, f: trefoil };
        let r = check_holonomy_variation(&conn, &lp, &smooth_variation, &EPS, 512).unwrap();
        assert!(r.curvature_norm > 1.0);
        assert!(r.richardson_residual < 1e-6, "{r:?}");
        // first-order convergence of the plain differences
        for w in r.steps.windows(2) {
            let ratio = w[0].relative_residual / w[1].relative_residual;
            assert!((ratio - 2.0).abs() < 0.1, "{r:?}");
        }
    }

    #[test]
    fn holonomy_variation_flat() {
        let c = |re: f64, im: f64| Complex::new(re, im);
        let m2 = |a, b, d, e| CMat::from_row_slice(2, 2, &[a, b, d, e]);
        // X_j = P diag(i, -i) P^{-1} so that exp(2 pi X_j) = 1 and g is periodic
        let gen = |p: CMat| {
            let pinv = p.clone().try_inverse().unwrap();
            p * m2(c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)) * pinv
        };
        let conn = PureGauge {
            generators: vec![
                gen(m2(c(1.0, 0.0), c(0.5, 0.0), c(0.2, 0.0), c(1.0, 0.0))),
                gen(m2(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.3, 0.0))),
                gen(m2(c(2.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0), c(1.0, 0.0))),
            ],
            background: vec![
                m2(c(0.3, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.2, 0.0)),
                m2(c(0.0, 0.1), c(0.0, 0.0), c(0.0, 0.0), c(0.4, 0.0)),
                m2(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)),
            ],
        };
        // winds once around the first circle of T^3
        let lp = FnLoop {
            m: 3,
            f: |t: f64| {
                let s = TAU * t;
                (
                    vec![s + 0.3 * s.sin(), 0.5 * s.cos(), 0.2 * (2.0 * s).sin()],
                    vec![TAU * (1.0 + 0.3 * s.cos()), -0.5 * TAU * s.sin(), 0.4 * TAU * (2.0 * s).cos()],
                )
            },
        };
        let r = check_holonomy_variation(&conn, &lp, &smooth_variation, &EPS, 512).unwrap();
        assert_eq!(r.curvature_norm, 0.0);
        assert!(r.rhs_norm > 1e-3, "{r:?}");
        assert!(r.richardson_residual < 1e-6, "{r:?}");
    }

    #[test]
    fn holonomy_variation_abelian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let conn = TrigConnection::random(&mut rng, 1, 3, 3, 0.4);
        let lp = FnLoop { m: 3, f: trefoil };
        let r = check_holonomy_variation(&conn, &lp, &smooth_variation, &EPS, 512).unwrap();
        assert!(r.richardson_residual < 1e-6, "{r:?}");
    }

    #[test]
    fn eps_schedule_must_decrease() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let conn = TrigConnection::random(&mut rng, 2, 3, 1, 0.5);
        let lp = FnLoop { m: 3, f: trefoil };
        let r = check_holonomy_variation(&conn, &lp, &smooth_variation, &[1e-3, 2e-3], 64);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn sampled_loop_transport() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let conn = TrigConnection::random(&mut rng, 2, 3, 2, 0.5);
        let lp = FnLoop { m: 3, f: trefoil };
        let sampled = SampledLoop::from_loop(&lp, 2048).unwrap();
        let a = transport_rk4(&conn, &lp, 512);
        let b = transport_rk4(&conn, &sampled, 512);
        assert!(fro(&(&a[512] - &b[512])) / fro(&a[512]) < 1e-8);
        assert!(SampledLoop::from_loop(&lp, 8).is_err());
    }

    /// Second-order exponential midpoint transport, an integrator independent of RK4.
    fn midpoint_transport(conn: &dyn Connection, lp: &dyn NumLoop, steps: usize) -> Vec<CMat> {
        let h = 1.0 / steps as f64;
        let mut out = vec![cid(conn.n())];
        for j in 0..steps {
            let (x, v) = lp.eval((j as f64 + 0.5) * h);
            let step = (conn.contract(&x, &v) * Complex::new(h, 0.0)).exp();
            let next = out[j].clone() * step;
            out.push(next);
        }
        out
    }

    #[test]
    fn classical_wilson_single_insertion() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let conn = TrigConnection::random(&mut rng, 2, 3, 2, 0.4);
        let b = TrigFormField::random(&mut rng, 2, 3, 1, 0.5);
        let lp = FnLoop { m: 3, f: trefoil };
        let h1 = classical_wilson(&conn, &b, &lp, 1, &[], 512).unwrap();
        // tr int H(0, t) B(gamma') H(0, t)^{-1} dt H(0, 1) by the trapezoid rule on a fine grid
        let steps = 20000;
        let hs = midpoint_transport(&conn, &lp, steps);
        let hol = hs[steps].clone();
        let mut acc = czero(2);
        for (j, h) in hs.iter().enumerate() {
            let (x, v) = lp.eval(j as f64 / steps as f64);
            let w = if j == 0 || j == steps { 0.5 } else { 1.0 } / steps as f64;
            acc += h * b.eval(&x, &[v]) * h.clone().try_inverse().unwrap() * Complex::new(w, 0.0);
        }
        let oracle = (acc * hol).trace();
        assert!((h1 - oracle).norm() / oracle.norm() < 1e-6, "{h1} vs {oracle}");
        // n = 0 is the traced holonomy, B = 0 gives zero
        let h0 = classical_wilson(&conn, &b, &lp, 0, &[], 512).unwrap();
        assert!((h0 - hs[steps].trace()).norm() < 1e-6);
        let zero = TrigFormField { n: 2, components: vec![(vec![0], vec![])] };
        assert_eq!(classical_wilson(&conn, &zero, &lp, 2, &[], 64).unwrap().norm(), 0.0);
        let t = |_: f64| vec![0.0; 3];
        assert!(matches!(classical_wilson(&conn, &b, &lp, 1, &[&t], 64), Err(Error::Config(_))));
    }

    #[test]
    fn simplex_quadrature_volumes() {
        let one = |_: f64| cid(1);
        for l in 0..=4 {
            let v = chen_quadrature(&one, 1, l, 8).unwrap()[(0, 0)].re;
            let expect = 1.0 / (1..=l).map(|k| k as f64).product::<f64>();
            assert!((v - expect).abs() < 1e-13);
        }
    }
}
