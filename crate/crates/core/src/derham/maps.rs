//! Pullbacks along affine coordinate maps and fiber integration over boxes and simplices.

use std::collections::BTreeMap;

use super::form::{merge_sign, CoordKind, Domain, Form, Key};
use super::qp::QP;
use crate::error::{Error, Result};
use crate::koszul::scalar::{parity_sign, Scalar, C, Q};
use crate::linalg::{det, QMat};

/// Image of one target coordinate in terms of source coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum CoordImage {
    /// Same kind of coordinate, identity.
    Copy(usize),
    /// Unit target pinned at `0`.
    Zero,
    /// Unit target pinned at `1`.
    One,
    /// Periodic target `x = sum_l c_l n_l s_l + (pi / 2) quarter`, with `c_l = 2 pi` on unit sources, `1` on periodic ones.
    Affine { terms: Vec<(usize, i8)>, quarter: i8 },
}

/// Smooth map `source -> target` given coordinatewise.
#[derive(Clone, Debug)]
pub struct CoordMap {
    pub source: Domain,
    pub target: Domain,
    pub images: Vec<CoordImage>,
}

impl CoordMap {
    pub fn new(source: &Domain, target: &Domain, images: Vec<CoordImage>) -> Result<CoordMap> {
        if images.len() != target.len() {
            return Err(Error::Dimension(format!(
                "map has {} images for {} target coordinates",
                images.len(),
                target.len()
            )));
        }
        for (j, im) in images.iter().enumerate() {
            let ok = match im {
                CoordImage::Copy(l) => *l < source.len() && source.kind(*l) == target.kind(j),
                CoordImage::Zero | CoordImage::One => target.kind(j) == CoordKind::Unit,
                CoordImage::Affine { terms, .. } => {
                    target.kind(j) == CoordKind::Periodic && terms.iter().all(|(l, _)| *l < source.len())
                }
            };
            if !ok {
                return Err(Error::Unsupported(format!("coordinate {j}: image {im:?} is not exactly representable")));
            }
        }
        Ok(CoordMap {
            source: source.clone(),
            target: target.clone(),
            images,
        })
    }

    /// Projection `source -> target` onto the listed source coordinates.
    pub fn projection(source: &Domain, keep: &[usize]) -> Result<CoordMap> {
        let target = Domain::new(keep.iter().map(|&l| source.kind(l)).collect());
        CoordMap::new(source, &target, keep.iter().map(|&l| CoordImage::Copy(l)).collect())
    }

    /// Winding loop `t -> 2 pi n t + (pi / 2) quarter` into `T^m`, as a map from `source` using unit coordinate `t`.
    pub fn winding(source: &Domain, t: usize, winding: &[i8], quarter: &[i8]) -> Result<CoordMap> {
        let target = Domain::torus(winding.len());
        let images = winding
            .iter()
            .zip(quarter)
            .map(|(&n, &o)| CoordImage::Affine {
                terms: if n == 0 { vec![] } else { vec![(t, n)] },
                quarter: o,
            })
            .collect();
        CoordMap::new(source, &target, images)
    }

    fn dx_image(&self, j: usize) -> Vec<(usize, Scalar)> {
        match &self.images[j] {
            CoordImage::Copy(l) => vec![(*l, Scalar::one())],
            CoordImage::Zero | CoordImage::One => vec![],
            CoordImage::Affine { terms, .. } => terms
                .iter()
                .filter(|(_, n)| *n != 0)
                .map(|&(l, n)| {
                    let c = match self.source.kind(l) {
                        CoordKind::Periodic => Scalar::int(n as i64),
                        CoordKind::Unit => Scalar::int(2 * n as i64).shift_pi(1),
                    };
                    (l, c)
                })
                .collect(),
        }
    }

    /// Pullback of a form on the target.
    pub fn pullback(&self, f: &Form) -> Result<Form> {
        if f.domain != self.target {
            return Err(Error::Dimension("pullback: form does not live on the map target".into()));
        }
        let dx: Vec<_> = (0..self.target.len()).map(|j| self.dx_image(j)).collect();
        let mut out = Form::zero(&self.source, f.kind, f.dim);
        for (k, c) in &f.terms {
            let Some((mut base, phase)) = self.mode_image(k) else { continue };
            let coeff = c.scale_c(&phase);
            // expand the wedge of differential images
            let mut partial: Vec<(u16, Scalar)> = vec![(0, coeff)];
            for j in 0..self.target.len() {
                if k.mask & (1 << j) == 0 {
                    continue;
                }
                let mut next = Vec::new();
                for (m, s) in &partial {
                    for (l, a) in &dx[j] {
                        let bit = 1u16 << l;
                        let sg = merge_sign(*m, bit);
                        if sg == 0 {
                            continue;
                        }
                        let v = s * a;
                        next.push((m | bit, if sg < 0 { -v } else { v }));
                    }
                }
                partial = next;
            }
            for (m, s) in partial {
                base.mask = m;
                out.add_term(base, s);
            }
        }
        Ok(out)
    }

    fn mode_image(&self, k: &Key) -> Option<(Key, C)> {
        let mut nk = Key::new(k.gh, 0, k.val, k.gmask);
        let mut phase = C::one();
        for (j, im) in self.images.iter().enumerate() {
            match im {
                CoordImage::Copy(l) => {
                    nk.freq[*l] += k.freq[j];
                    nk.pow[*l] += k.pow[j];
                }
                CoordImage::Zero => {
                    if k.pow[j] > 0 {
                        return None;
                    }
                }
                CoordImage::One => {}
                CoordImage::Affine { terms, quarter } => {
                    for &(l, n) in terms {
                        nk.freq[l] += k.freq[j] * n;
                    }
                    phase = &phase * &C::i_pow(k.freq[j] as i64 * *quarter as i64);
                }
            }
        }
        Some((nk, phase))
    }
}

/// Fiber shape; coordinates are indices into the total domain.
#[derive(Clone, Debug, PartialEq)]
pub enum Fiber {
    /// Product of full coordinate ranges, oriented by the listed order.
    Box(Vec<usize>),
    /// `0 <= t_1 <= ... <= t_n <= 1` with `coords[i] = t_{i+1}`, oriented by `dt_n ^ ... ^ dt_1`.
    Simplex(Vec<usize>),
}

impl Fiber {
    pub fn coords(&self) -> &[usize] {
        match self {
            Fiber::Box(c) | Fiber::Simplex(c) => c,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords().len()
    }

    /// Fiber coordinates in orientation order.
    pub fn oriented(&self) -> Vec<usize> {
        match self {
            Fiber::Box(c) => c.clone(),
            Fiber::Simplex(c) => c.iter().rev().copied().collect(),
        }
    }

    fn mask(&self) -> u16 {
        self.coords().iter().fold(0, |m, &j| m | (1 << j))
    }
}

/// Sign of the permutation sorting `seq`.
pub fn sort_sign(seq: &[usize]) -> i32 {
    let mut inv = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inv += 1;
            }
        }
    }
    parity_sign(inv)
}

/// Base domain obtained by deleting the fiber coordinates; returns the index map.
pub fn base_domain(total: &Domain, fiber: &Fiber) -> Result<(Domain, Vec<Option<usize>>)> {
    let fc = fiber.coords();
    let mut seen = 0u16;
    for &j in fc {
        if j >= total.len() || seen & (1 << j) != 0 {
            return Err(Error::Dimension(format!("fiber coordinate {j} not present")));
        }
        seen |= 1 << j;
        if matches!(fiber, Fiber::Simplex(_)) && total.kind(j) != CoordKind::Unit {
            return Err(Error::Dimension(format!("simplex coordinate {j} must be a unit coordinate")));
        }
    }
    let mut kinds = Vec::new();
    let mut index = vec![None; total.len()];
    for j in 0..total.len() {
        if seen & (1 << j) == 0 {
            index[j] = Some(kinds.len());
            kinds.push(total.kind(j));
        }
    }
    Ok((Domain::new(kinds), index))
}

/// Fiber integration with the fiber-first convention `int_M pi_* w ^ h = int_E w ^ pi^* h`.
pub fn pushforward(f: &Form, fiber: &Fiber) -> Result<Form> {
    let (base, index) = base_domain(&f.domain, fiber)?;
    let fmask = fiber.mask();
    let oriented = fiber.oriented();
    let mut out = Form::zero(&base, f.kind, f.dim);
    let mut cache: BTreeMap<Vec<(u8, i8)>, Scalar> = BTreeMap::new();
    for (k, c) in &f.terms {
        if k.mask & fmask != fmask {
            continue;
        }
        let mut seq = oriented.clone();
        let mut nk = Key::new(k.gh, 0, k.val, k.gmask);
        for j in 0..f.domain.len() {
            if let Some(b) = index[j] {
                nk.freq[b] = k.freq[j];
                nk.pow[b] = k.pow[j];
                if k.mask & (1 << j) != 0 {
                    seq.push(j);
                    nk.mask |= 1 << b;
                }
            }
        }
        let sign = sort_sign(&seq);
        let modes: Vec<(u8, i8)> = fiber.coords().iter().map(|&j| (k.pow[j], k.freq[j])).collect();
        let v = cache
            .entry(modes.clone())
            .or_insert_with(|| fiber_integral(&f.domain, fiber, &modes))
            .clone();
        if v.is_zero() {
            continue;
        }
        let val = c * &v;
        out.add_term(nk, if sign < 0 { -val } else { val });
    }
    Ok(out)
}

fn fiber_integral(domain: &Domain, fiber: &Fiber, modes: &[(u8, i8)]) -> Scalar {
    match fiber {
        Fiber::Box(coords) => {
            let mut v = Scalar::one();
            for (&j, &(p, q)) in coords.iter().zip(modes) {
                let s = match domain.kind(j) {
                    CoordKind::Periodic => {
                        if q != 0 || p != 0 {
                            return Scalar::zero();
                        }
                        Scalar::int(2).shift_pi(1)
                    }
                    CoordKind::Unit => QP::term(p as u16, q as i32, Scalar::one()).integral_unit(),
                };
                v = &v * &s;
                if v.is_zero() {
                    return v;
                }
            }
            v
        }
        Fiber::Simplex(_) => {
            let mut acc = QP::constant(Scalar::one());
            for &(p, q) in modes {
                acc = acc.mul(&QP::term(p as u16, q as i32, Scalar::one())).integral_from_zero();
            }
            acc.eval_one()
        }
    }
}

/// Orientation convention for boundary faces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceConvention {
    /// Outward normal first; consistent with Stokes and fiber-first pushforward.
    NormalFirst,
    /// Outward normal last.
    NormalLast,
}

/// Orientation sign of face `alpha` of `Delta_n` relative to the standard orientation of `Delta_{n-1}`,
/// computed from the determinant of (outward normal, face frame) against `dt_n ^ ... ^ dt_1`.
pub fn simplex_face_sign(n: usize, alpha: usize, conv: FaceConvention) -> i32 {
    assert!(alpha <= n && n >= 1);
    // face parametrization s -> t, linear part as columns in t-space
    let face_cols: Vec<Vec<Q>> = (0..n - 1)
        .map(|i| {
            let mut col = vec![Q::zero(); n];
            for (tj, slot) in col.iter_mut().enumerate() {
                if face_param_index(n, alpha, tj) == Some(i) {
                    *slot = Q::one();
                }
            }
            col
        })
        .collect();
    // outward normal
    let mut normal = vec![Q::zero(); n];
    if alpha == 0 {
        normal[0] = Q::int(-1);
    } else if alpha == n {
        normal[n - 1] = Q::one();
    } else {
        normal[alpha - 1] = Q::one();
        normal[alpha] = Q::int(-1);
    }
    // face frame oriented like dt'_{n-1} ^ ... ^ dt'_1, i.e. columns in reverse order
    let mut frame: Vec<Vec<Q>> = face_cols.into_iter().rev().collect();
    match conv {
        FaceConvention::NormalFirst => frame.insert(0, normal),
        FaceConvention::NormalLast => frame.push(normal),
    }
    // coordinates of the frame in the ambient orientation dt_n ^ ... ^ dt_1: reverse rows
    let m: QMat = (0..n).map(|r| frame.iter().map(|col| col[n - 1 - r].clone()).collect()).collect();
    det(&m).signum()
}

/// Which face parameter `s_i` the coordinate `t_{tj+1}` equals on face `alpha`, `None` for a constant.
fn face_param_index(n: usize, alpha: usize, tj: usize) -> Option<usize> {
    let t = tj + 1;
    if alpha == 0 {
        if t == 1 {
            None
        } else {
            Some(t - 2)
        }
    } else if alpha == n {
        if t == n {
            None
        } else {
            Some(t - 1)
        }
    } else if t <= alpha {
        Some(t - 1)
    } else {
        Some(t - 2)
    }
}

/// Inclusion of face `alpha` of the simplex on `coords` into the total domain, as a map from the domain
/// with the simplex coordinates replaced by `n - 1` face coordinates (placed first).
pub fn simplex_face_map(total: &Domain, coords: &[usize], alpha: usize) -> Result<(CoordMap, Vec<usize>)> {
    let n = coords.len();
    let (base, index) = base_domain(total, &Fiber::Simplex(coords.to_vec()))?;
    let src = Domain::with_unit_fiber(n - 1, &base);
    let mut images = Vec::with_capacity(total.len());
    for j in 0..total.len() {
        if let Some(b) = index[j] {
            images.push(CoordImage::Copy(n - 1 + b));
        } else {
            images.push(CoordImage::Zero);
        }
    }
    for (tj, &j) in coords.iter().enumerate() {
        images[j] = match face_param_index(n, alpha, tj) {
            Some(i) => CoordImage::Copy(i),
            None if alpha == 0 => CoordImage::Zero,
            None => CoordImage::One,
        };
    }
    let map = CoordMap::new(&src, total, images)?;
    Ok((map, (0..n - 1).collect()))
}

/// Boundary pushforward `pi_{d*} iota^*` over the fiber boundary, faces oriented by `conv`.
pub fn boundary_pushforward(f: &Form, fiber: &Fiber, conv: FaceConvention) -> Result<Form> {
    let (base, _) = base_domain(&f.domain, fiber)?;
    let mut out = Form::zero(&base, f.kind, f.dim);
    match fiber {
        Fiber::Simplex(coords) => {
            let n = coords.len();
            for alpha in 0..=n {
                let (map, face) = simplex_face_map(&f.domain, coords, alpha)?;
                let pulled = map.pullback(f)?;
                let pushed = if n == 1 {
                    pulled
                } else {
                    pushforward(&pulled, &Fiber::Simplex(face))?
                };
                let s = simplex_face_sign(n, alpha, conv);
                out.add_assign(&pushed.scale(&Scalar::int(s as i64)))?;
            }
        }
        Fiber::Box(coords) => {
            // boundary of a product: sum over unit factors, sign from the position of the factor
            for (pos, &j) in coords.iter().enumerate() {
                if f.domain.kind(j) == CoordKind::Periodic {
                    continue;
                }
                for (end, img) in [(1i64, CoordImage::One), (-1, CoordImage::Zero)] {
                    let rest: Vec<usize> = coords.iter().copied().filter(|&c| c != j).collect();
                    let mut images: Vec<CoordImage> = (0..f.domain.len()).map(CoordImage::Copy).collect();
                    images[j] = img.clone();
                    // source keeps coordinate j as a dummy; it is integrated out below with a constant factor
                    let map = CoordMap::new(&f.domain, &f.domain, images)?;
                    let pulled = map.pullback(f)?;
                    // drop coordinate j (pulled has no dependence on it)
                    let (mid, idx) = base_domain(&f.domain, &Fiber::Box(vec![j]))?;
                    let mut reduced = Form::zero(&mid, f.kind, f.dim);
                    for (k, c) in &pulled.terms {
                        let mut nk = Key::new(k.gh, 0, k.val, k.gmask);
                        for l in 0..f.domain.len() {
                            if let Some(b) = idx[l] {
                                nk.freq[b] = k.freq[l];
                                nk.pow[b] = k.pow[l];
                                if k.mask & (1 << l) != 0 {
                                    nk.mask |= 1 << b;
                                }
                            }
                        }
                        reduced.add_term(nk, c.clone());
                    }
                    let rest_mid: Vec<usize> = rest.iter().map(|&c| idx[c].expect("fiber coordinate")).collect();
                    let pushed = if rest_mid.is_empty() {
                        reduced
                    } else {
                        pushforward(&reduced, &Fiber::Box(rest_mid))?
                    };
                    let pos_sign = match conv {
                        FaceConvention::NormalFirst => parity_sign(pos as i64),
                        FaceConvention::NormalLast => parity_sign((coords.len() - 1 - pos) as i64),
                    };
                    out.add_assign(&pushed.scale(&Scalar::int(end * pos_sign as i64)))?;
                }
            }
        }
    }
    Ok(out)
}

/// Pullback along the projection onto the base, for a fiber placed in front of `base`.
pub fn pull_to_total(base_form: &Form, total: &Domain, fiber: &Fiber) -> Result<Form> {
    let (base, index) = base_domain(total, fiber)?;
    if base != base_form.domain {
        return Err(Error::Dimension("base form lives on a different domain".into()));
    }
    let mut images = vec![CoordImage::Copy(0); base.len()];
    for (j, b) in index.iter().enumerate() {
        if let Some(b) = b {
            images[*b] = CoordImage::Copy(j);
        }
    }
    CoordMap::new(total, &base, images)?.pullback(base_form)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derham::form::ValueKind;

    fn unit_line() -> Domain {
        Domain::new(vec![CoordKind::Unit])
    }

    #[test]
    fn interval_example() {
        let d = unit_line();
        let mut t = Form::scalar_zero(&d);
        let mut k = Key::new(0, 0, 0, 0);
        k.pow[0] = 1;
        t.add_term(k, Scalar::one());
        let fib = Fiber::Box(vec![0]);
        assert!(pushforward(&t, &fib).unwrap().is_zero());
        let pd = pushforward(&t.d(), &fib).unwrap();
        let bd = boundary_pushforward(&t, &fib, FaceConvention::NormalFirst).unwrap();
        assert_eq!(pd.terms.values().next(), Some(&Scalar::one()));
        assert_eq!(bd.terms.values().next(), Some(&Scalar::one()));
    }

    #[test]
    fn simplex_volume() {
        for n in 1..=4 {
            let d = Domain::new(vec![CoordKind::Unit; n]);
            let coords: Vec<usize> = (0..n).collect();
            let vol = Form::monomial(&d, ValueKind::Scalar, 1, &[], &coords.iter().rev().copied().collect::<Vec<_>>(), 0, Scalar::one());
            let v = pushforward(&vol, &Fiber::Simplex(coords)).unwrap();
            let expect = Scalar::from_q(crate::koszul::scalar::factorial(n as u32).recip());
            assert_eq!(v.terms.values().next(), Some(&expect));
        }
    }

    #[test]
    fn face_signs_both_conventions() {
        for n in 1..=5 {
            for a in 0..=n {
                assert_eq!(simplex_face_sign(n, a, FaceConvention::NormalLast), parity_sign(a as i64 + 1));
                assert_eq!(simplex_face_sign(n, a, FaceConvention::NormalFirst), parity_sign((a + n) as i64));
            }
        }
    }

    #[test]
    fn winding_pullback_of_dx() {
        let s1 = unit_line();
        let map = CoordMap::winding(&s1, 0, &[1, 0], &[0, 0]).unwrap();
        let dx = Form::monomial(&Domain::torus(2), ValueKind::Scalar, 1, &[], &[0], 0, Scalar::one());
        let p = map.pullback(&dx).unwrap();
        let expect = Form::monomial(&s1, ValueKind::Scalar, 1, &[], &[0], 0, Scalar::int(2).shift_pi(1));
        assert_eq!(p, expect);
    }
}
