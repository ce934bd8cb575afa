//! Lie-algebra data: structure constants, invariant forms, duality pairing, representations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::koszul::graded::{GradedElement, LieValued};
use crate::koszul::scalar::{Scalar, Q};
use crate::linalg::{self, QMat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ordinary,
    Canonical,
}

/// Sparse trilinear table `(i, j, k, c)`.
pub type Table3 = Vec<(usize, usize, usize, Scalar)>;

#[derive(Clone, Debug)]
pub struct LieAlgebraData {
    pub name: String,
    pub dim: usize,
    /// `f[(i * dim + j) * dim + k] = f_ij^k`.
    pub f: Vec<Q>,
    pub metric: Option<QMat>,
    pub mode: Mode,
    pub rep: Option<Vec<QMat>>,
    bracket: Table3,
    coad: Table3,
    pair: Vec<(usize, usize, Scalar)>,
    assoc: Option<Table3>,
    unit: Option<Vec<Q>>,
}

#[derive(Serialize, Deserialize)]
struct LieJson {
    dim: usize,
    f: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metric: Option<Vec<Vec<String>>>,
    mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rep: Option<Vec<Vec<Vec<String>>>>,
}

fn parse_mat(rows: &[Vec<String>]) -> Result<QMat> {
    rows.iter()
        .map(|r| r.iter().map(|s| Q::parse(s)).collect())
        .collect()
}

fn render_mat(m: &QMat) -> Vec<Vec<String>> {
    m.iter().map(|r| r.iter().map(|q| q.to_string()).collect()).collect()
}

/// One line of a validation report.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Metric diagonalized by exact congruence: `basis * G * basis^T = diag(diag)`.
#[derive(Clone, Debug)]
pub struct PseudoOrthonormal {
    pub basis: QMat,
    pub diag: Vec<Q>,
}

impl PseudoOrthonormal {
    /// Signs `sigma_i` of the diagonal entries.
    pub fn signature(&self) -> Vec<i32> {
        self.diag.iter().map(|q| q.signum()).collect()
    }
}

/// `t_ijk = <[Y_i, Y_j], Y_k>` in a pseudo-orthonormal basis.
#[derive(Clone, Debug)]
pub struct TildeF {
    pub dim: usize,
    pub t: Vec<Q>,
}

impl TildeF {
    pub fn get(&self, i: usize, j: usize, k: usize) -> &Q {
        &self.t[(i * self.dim + j) * self.dim + k]
    }

    /// First index triple violating total antisymmetry.
    pub fn antisymmetry_witness(&self) -> Option<(usize, usize, usize)> {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let t = self.get(i, j, k);
                    if *t != -self.get(j, i, k) || *t != -self.get(i, k, j) || *t != -self.get(k, j, i) {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }
}

impl LieAlgebraData {
    pub fn new(
        name: &str,
        dim: usize,
        f: Vec<Q>,
        metric: Option<QMat>,
        mode: Mode,
        rep: Option<Vec<QMat>>,
    ) -> Result<LieAlgebraData> {
        if f.len() != dim * dim * dim {
            return Err(Error::Algebra(format!("structure constants need {} entries", dim * dim * dim)));
        }
        if let Some(g) = &metric {
            if g.len() != dim || g.iter().any(|r| r.len() != dim) {
                return Err(Error::Algebra("metric has wrong shape".into()));
            }
        }
        if mode == Mode::Ordinary && metric.is_none() {
            return Err(Error::Algebra("ordinary mode requires a metric".into()));
        }
        if let Some(r) = &rep {
            if r.len() != dim {
                return Err(Error::Algebra("representation needs one matrix per basis element".into()));
            }
            let n = r.first().map(|m| m.len()).unwrap_or(0);
            if r.iter().any(|m| m.len() != n || m.iter().any(|row| row.len() != n)) {
                return Err(Error::Algebra("representation matrices must be square of equal size".into()));
            }
        }
        let mut alg = LieAlgebraData {
            name: name.to_string(),
            dim,
            f,
            metric,
            mode,
            rep,
            bracket: Vec::new(),
            coad: Vec::new(),
            pair: Vec::new(),
            assoc: None,
            unit: None,
        };
        alg.build_tables();
        Ok(alg)
    }

    fn build_tables(&mut self) {
        let d = self.dim;
        self.bracket.clear();
        self.coad.clear();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let c = self.fc(i, j, k).clone();
                    if !c.is_zero() {
                        self.bracket.push((i, j, k, Scalar::from_q(c.clone())));
                        // ad*(X_i) X^k has X^j component -f_ij^k
                        self.coad.push((i, k, j, Scalar::from_q(-c)));
                    }
                }
            }
        }
        self.coad.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
        self.pair.clear();
        match (self.mode, &self.metric) {
            (Mode::Ordinary, Some(g)) => {
                for i in 0..d {
                    for j in 0..d {
                        if !g[i][j].is_zero() {
                            self.pair.push((i, j, Scalar::from_q(g[i][j].clone())));
                        }
                    }
                }
            }
            _ => {
                for i in 0..d {
                    self.pair.push((i, i, Scalar::one()));
                }
            }
        }
        self.assoc = None;
        self.unit = None;
        if let Some(rep) = &self.rep {
            let n = rep[0].len();
            let flat: QMat = rep.iter().map(|m| m.iter().flatten().cloned().collect()).collect();
            let mut table = Vec::new();
            let mut closed = linalg::rank(&flat) == d;
            'outer: for i in 0..if closed { d } else { 0 } {
                for j in 0..d {
                    let p = linalg::matmul(&rep[i], &rep[j]);
                    let v: Vec<Q> = p.into_iter().flatten().collect();
                    match linalg::solve_left(&flat, &v) {
                        Some(x) => {
                            for (k, c) in x.into_iter().enumerate() {
                                if !c.is_zero() {
                                    table.push((i, j, k, Scalar::from_q(c)));
                                }
                            }
                        }
                        _ => {
                            closed = false;
                            break 'outer;
                        }
                    }
                }
            }
            if closed {
                self.assoc = Some(table);
                let id: Vec<Q> = linalg::identity(n).into_iter().flatten().collect();
                self.unit = linalg::solve_left(&flat, &id);
            }
        }
    }

    fn fc(&self, i: usize, j: usize, k: usize) -> &Q {
        &self.f[(i * self.dim + j) * self.dim + k]
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> &Q {
        self.fc(i, j, k)
    }

    /// Sparse `f_ij^k`.
    pub fn bracket_table(&self) -> &Table3 {
        &self.bracket
    }

    /// Sparse `(j, k, i, c)` with `ad*(X_j) X^k = sum_i c X^i`.
    pub fn coad_table(&self) -> &Table3 {
        &self.coad
    }

    /// Sparse pairing `<X_i, X_j>` (metric) or `<X^i, X_j>` (duality).
    pub fn pair_table(&self) -> &[(usize, usize, Scalar)] {
        &self.pair
    }

    /// Associative product table of the representation image, when it closes.
    pub fn assoc_table(&self) -> Option<&Table3> {
        self.assoc.as_ref()
    }

    /// Components of the identity matrix, when it lies in the algebra.
    pub fn unit(&self) -> Option<&[Q]> {
        self.unit.as_deref()
    }

    pub fn rep_dim(&self) -> Option<usize> {
        self.rep.as_ref().map(|r| r[0].len())
    }

    pub fn so3() -> LieAlgebraData {
        let mut f = vec![Q::zero(); 27];
        let eps = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];
        for &(i, j, k) in &eps {
            f[(i * 3 + j) * 3 + k] = Q::one();
            f[(j * 3 + i) * 3 + k] = Q::int(-1);
        }
        let rep: Vec<QMat> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|k| (0..3).map(|j| f[(i * 3 + j) * 3 + k].clone()).collect())
                    .collect()
            })
            .collect();
        LieAlgebraData::new("so3", 3, f, Some(linalg::identity(3)), Mode::Ordinary, Some(rep))
            .expect("so3 is well formed")
    }

    /// `gl(n)` with basis `E_ab` at index `a * n + b` and the trace form.
    pub fn gl(n: usize) -> Result<LieAlgebraData> {
        if !(1..=4).contains(&n) {
            return Err(Error::Range(format!("gl(N) built-in supports 1 <= N <= 4, got {n}")));
        }
        let d = n * n;
        let idx = |a: usize, b: usize| a * n + b;
        let mut f = vec![Q::zero(); d * d * d];
        let mut metric = vec![vec![Q::zero(); d]; d];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for e in 0..n {
                        let (i, j) = (idx(a, b), idx(c, e));
                        if b == c {
                            let k = idx(a, e);
                            f[(i * d + j) * d + k] = &f[(i * d + j) * d + k] + &Q::one();
                        }
                        if e == a {
                            let k = idx(c, b);
                            f[(i * d + j) * d + k] = &f[(i * d + j) * d + k] - &Q::one();
                        }
                        if b == c && e == a {
                            metric[i][j] = Q::one();
                        }
                    }
                }
            }
        }
        let rep: Vec<QMat> = (0..d)
            .map(|i| {
                (0..n)
                    .map(|r| (0..n).map(|c| if idx(r, c) == i { Q::one() } else { Q::zero() }).collect())
                    .collect()
            })
            .collect();
        LieAlgebraData::new(&format!("gl{n}"), d, f, Some(metric), Mode::Ordinary, Some(rep))
    }

    /// Abelian `u(1)^d` with diagonal representation.
    pub fn u1(d: usize) -> LieAlgebraData {
        let rep: Vec<QMat> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|r| (0..d).map(|c| if r == i && c == i { Q::one() } else { Q::zero() }).collect())
                    .collect()
            })
            .collect();
        LieAlgebraData::new(
            &format!("u1^{d}"),
            d,
            vec![Q::zero(); d * d * d],
            Some(linalg::identity(d)),
            Mode::Ordinary,
            Some(rep),
        )
        .expect("abelian algebra is well formed")
    }

    /// Non-unimodular `[X_0, X_1] = X_1`, duality pairing only.
    pub fn aff1() -> LieAlgebraData {
        let mut f = vec![Q::zero(); 8];
        // f_01^1 = 1 = -f_10^1
        f[3] = Q::one();
        f[5] = Q::int(-1);
        LieAlgebraData::new("aff1-can", 2, f, None, Mode::Canonical, None).expect("aff1 is well formed")
    }

    /// Same structure constants with the duality pairing.
    pub fn canonical(&self) -> LieAlgebraData {
        let mut c = self.clone();
        c.mode = Mode::Canonical;
        c.name = format!("{}-can", self.name);
        c.build_tables();
        c
    }

    /// Resolves `so3`, `glN`, `u1^d`, `aff1` (always canonical), optionally suffixed `-can`, or a JSON file path.
    pub fn builtin_or_path(spec: &str) -> Result<LieAlgebraData> {
        let (base, can) = match spec.strip_suffix("-can") {
            Some(b) => (b, true),
            None => (spec, false),
        };
        if base == "aff1" {
            return Ok(LieAlgebraData::aff1());
        }
        let alg = if base == "so3" {
            Some(LieAlgebraData::so3())
        } else if let Some(n) = base.strip_prefix("gl") {
            match n.parse::<usize>() {
                Ok(n) => Some(LieAlgebraData::gl(n)?),
                Err(_) => None,
            }
        } else if let Some(d) = base.strip_prefix("u1^") {
            match d.parse::<usize>() {
                Ok(d) if d >= 1 => Some(LieAlgebraData::u1(d)),
                _ => None,
            }
        } else {
            None
        };
        match alg {
            Some(a) => Ok(if can { a.canonical() } else { a }),
            None => {
                let text = std::fs::read_to_string(spec)
                    .map_err(|e| Error::Config(format!("cannot read algebra '{spec}': {e}")))?;
                LieAlgebraData::from_json(&text)
            }
        }
    }

    pub fn from_json(text: &str) -> Result<LieAlgebraData> {
        let j: LieJson = serde_json::from_str(text).map_err(|e| Error::Config(format!("algebra file: {e}")))?;
        let d = j.dim;
        if j.f.len() != d || j.f.iter().any(|r| r.len() != d || r.iter().any(|c| c.len() != d)) {
            return Err(Error::Config("structure constants must be dim x dim x dim".into()));
        }
        let mut f = Vec::with_capacity(d * d * d);
        for plane in &j.f {
            for row in plane {
                for s in row {
                    f.push(Q::parse(s)?);
                }
            }
        }
        let metric = j.metric.as_deref().map(parse_mat).transpose()?;
        let rep = j
            .rep
            .as_ref()
            .map(|r| r.iter().map(|m| parse_mat(m)).collect::<Result<Vec<_>>>())
            .transpose()?;
        LieAlgebraData::new("file", d, f, metric, j.mode, rep).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let d = self.dim;
        let f = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| self.fc(i, j, k).to_string()).collect())
                    .collect()
            })
            .collect();
        let j = LieJson {
            dim: d,
            f,
            metric: self.metric.as_ref().map(render_mat),
            mode: self.mode,
            rep: self.rep.as_ref().map(|r| r.iter().map(render_mat).collect()),
        };
        serde_json::to_string(&j).expect("serializable")
    }

    /// Exact congruence of the metric to a diagonal form.
    pub fn pseudo_orthonormalize(&self) -> Result<PseudoOrthonormal> {
        let g = self
            .metric
            .as_ref()
            .ok_or_else(|| Error::Algebra("no metric to orthonormalize".into()))?;
        let d = self.dim;
        let form = |u: &[Q], v: &[Q]| {
            let mut s = Q::zero();
            for i in 0..d {
                if u[i].is_zero() {
                    continue;
                }
                for j in 0..d {
                    if !v[j].is_zero() && !g[i][j].is_zero() {
                        s = &s + &(&(&u[i] * &g[i][j]) * &v[j]);
                    }
                }
            }
            s
        };
        let mut pool: Vec<Vec<Q>> = linalg::identity(d);
        let mut basis = Vec::new();
        let mut diag = Vec::new();
        while !pool.is_empty() {
            let pick = pool.iter().position(|v| !form(v, v).is_zero());
            let v = match pick {
                Some(p) => pool.remove(p),
                None => {
                    let mut found = None;
                    'search: for a in 0..pool.len() {
                        for b in a + 1..pool.len() {
                            if !form(&pool[a], &pool[b]).is_zero() {
                                found = Some((a, b));
                                break 'search;
                            }
                        }
                    }
                    let (a, b) = found.ok_or_else(|| Error::Algebra("metric is degenerate".into()))?;
                    let s: Vec<Q> = pool[a].iter().zip(&pool[b]).map(|(x, y)| x + y).collect();
                    pool.remove(a);
                    s
                }
            };
            let n = form(&v, &v);
            for w in pool.iter_mut() {
                let c = &form(w, &v) / &n;
                if !c.is_zero() {
                    for i in 0..d {
                        w[i] = &w[i] - &(&c * &v[i]);
                    }
                }
            }
            diag.push(n);
            basis.push(v);
        }
        Ok(PseudoOrthonormal { basis, diag })
    }

    pub fn tilde_f(&self) -> Result<TildeF> {
        let po = self.pseudo_orthonormalize()?;
        let g = self.metric.as_ref().expect("checked by orthonormalization");
        let d = self.dim;
        let p = &po.basis;
        let mut t = vec![Q::zero(); d * d * d];
        for a in 0..d {
            for b in 0..d {
                let mut br = vec![Q::zero(); d];
                for (i, j, k, c) in &self.bracket {
                    let w = &p[a][*i] * &p[b][*j];
                    if !w.is_zero() {
                        let c = c.as_rational().expect("rational constants");
                        br[*k] = &br[*k] + &(&w * &c);
                    }
                }
                for c in 0..d {
                    let mut s = Q::zero();
                    for k in 0..d {
                        if br[k].is_zero() {
                            continue;
                        }
                        for l in 0..d {
                            s = &s + &(&(&br[k] * &g[k][l]) * &p[c][l]);
                        }
                    }
                    t[(a * d + b) * d + c] = s;
                }
            }
        }
        Ok(TildeF { dim: d, t })
    }

    pub fn validate(&self) -> ValidationReport {
        let d = self.dim;
        let mut checks = Vec::new();
        let mut push = |name: &str, witness: Option<String>| {
            checks.push(Check {
                name: name.to_string(),
                pass: witness.is_none(),
                witness,
            })
        };

        let mut w = None;
        'a: for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    if *self.fc(i, j, k) != -self.fc(j, i, k) {
                        w = Some(format!("f[{i}][{j}][{k}] = {} but f[{j}][{i}][{k}] = {}", self.fc(i, j, k), self.fc(j, i, k)));
                        break 'a;
                    }
                }
            }
        }
        push("antisymmetry", w);

        let mut w = None;
        'j: for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut s = Q::zero();
                        for m in 0..d {
                            s = &s + &(self.fc(i, j, m) * self.fc(m, k, l));
                            s = &s + &(self.fc(j, k, m) * self.fc(m, i, l));
                            s = &s + &(self.fc(k, i, m) * self.fc(m, j, l));
                        }
                        if !s.is_zero() {
                            w = Some(format!("triple ({i},{j},{k}) component {l}: {s}"));
                            break 'j;
                        }
                    }
                }
            }
        }
        push("jacobi", w);

        if self.mode == Mode::Ordinary {
            let g = self.metric.as_ref().expect("ordinary has metric");
            let mut w = None;
            'm: for i in 0..d {
                for j in 0..d {
                    if g[i][j] != g[j][i] {
                        w = Some(format!("g[{i}][{j}] != g[{j}][{i}]"));
                        break 'm;
                    }
                }
            }
            push("metric_symmetric", w);
            let r = linalg::rank(g);
            push("metric_nondegenerate", (r < d).then(|| format!("rank {r} < {d}")));
            let mut w = None;
            'inv: for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let mut lhs = Q::zero();
                        let mut rhs = Q::zero();
                        for l in 0..d {
                            lhs = &lhs + &(self.fc(i, j, l) * &g[l][k]);
                            rhs = &rhs + &(&g[i][l] * self.fc(j, k, l));
                        }
                        if lhs != rhs {
                            w = Some(format!("<[X{i},X{j}],X{k}> = {lhs} but <X{i},[X{j},X{k}]> = {rhs}"));
                            break 'inv;
                        }
                    }
                }
            }
            push("metric_invariant", w);
            let w = match self.tilde_f() {
                Ok(t) => t.antisymmetry_witness().map(|(i, j, k)| format!("t[{i}][{j}][{k}] = {}", t.get(i, j, k))),
                Err(e) => Some(e.to_string()),
            };
            push("tilde_f_antisymmetric", w);
        }

        if let Some(rep) = &self.rep {
            let mut w = None;
            'h: for i in 0..d {
                for j in 0..d {
                    let a = linalg::matmul(&rep[i], &rep[j]);
                    let b = linalg::matmul(&rep[j], &rep[i]);
                    let n = a.len();
                    for r in 0..n {
                        for c in 0..n {
                            let mut lhs = Q::zero();
                            for k in 0..d {
                                lhs = &lhs + &(self.fc(i, j, k) * &rep[k][r][c]);
                            }
                            let rhs = &a[r][c] - &b[r][c];
                            if lhs != rhs {
                                w = Some(format!("rho([X{i},X{j}]) differs at ({r},{c})"));
                                break 'h;
                            }
                        }
                    }
                }
            }
            push("rep_homomorphism", w);
            if self.mode == Mode::Ordinary {
                let g = self.metric.as_ref().expect("ordinary has metric");
                let mut ratio: Option<Q> = None;
                let mut w = None;
                'tr: for i in 0..d {
                    for j in 0..d {
                        let p = linalg::matmul(&rep[i], &rep[j]);
                        let t = (0..p.len()).fold(Q::zero(), |acc, r| &acc + &p[r][r]);
                        if g[i][j].is_zero() {
                            if !t.is_zero() {
                                w = Some(format!("tr(rho{i} rho{j}) = {t} where metric vanishes"));
                                break 'tr;
                            }
                            continue;
                        }
                        let q = &t / &g[i][j];
                        match &ratio {
                            None => ratio = Some(q),
                            Some(r0) if *r0 != q => {
                                w = Some(format!("ratio {q} at ({i},{j}) differs from {r0}"));
                                break 'tr;
                            }
                            _ => {}
                        }
                    }
                }
                if w.is_none() && ratio.as_ref().map(|r| r.is_zero()).unwrap_or(true) {
                    w = Some("trace form vanishes".into());
                }
                push("rep_trace_proportional", w);
            }
        }
        ValidationReport { checks }
    }

    fn kind_pair(&self, a_coadjoint: bool, b_coadjoint: bool) -> Result<()> {
        match self.mode {
            Mode::Ordinary if a_coadjoint || b_coadjoint => {
                Err(Error::Algebra("coadjoint values need canonical mode".into()))
            }
            Mode::Canonical if a_coadjoint == b_coadjoint => {
                Err(Error::Algebra("duality pairing needs one adjoint and one coadjoint argument".into()))
            }
            _ => Ok(()),
        }
    }

    fn pair_with<F>(&self, a: &LieValued, a_co: bool, b: &LieValued, b_co: bool, mul: F) -> Result<GradedElement>
    where
        F: Fn(&GradedElement, &GradedElement) -> Result<GradedElement>,
    {
        self.kind_pair(a_co, b_co)?;
        let uni = a.comps[0].universe().clone();
        let mut out = GradedElement::zero(&uni);
        for (i, j, c) in &self.pair {
            out = out.add(&mul(&a.comps[*i], &b.comps[*j])?.scale(c))?;
        }
        Ok(out)
    }

    /// `<a, b>`; the flags mark coadjoint-valued arguments.
    pub fn pair(&self, a: &LieValued, a_co: bool, b: &LieValued, b_co: bool) -> Result<GradedElement> {
        self.pair_with(a, a_co, b, b_co, |x, y| x.mul(y))
    }

    /// `<a, b>_dot = (-1)^{gh a deg b} <a, b>`.
    pub fn dot_pair(&self, a: &LieValued, a_co: bool, b: &LieValued, b_co: bool) -> Result<GradedElement> {
        self.pair_with(a, a_co, b, b_co, |x, y| x.dot_mul(y))
    }

    fn coad_with<F>(&self, a: &LieValued, g: &LieValued, mul: F) -> Result<LieValued>
    where
        F: Fn(&GradedElement, &GradedElement) -> Result<GradedElement>,
    {
        if self.mode != Mode::Canonical {
            return Err(Error::Algebra("coadjoint action needs canonical mode".into()));
        }
        let uni = a.comps[0].universe().clone();
        let mut out = LieValued::zero(&uni, self.dim);
        for (j, k, i, c) in &self.coad {
            let p = mul(&a.comps[*j], &g.comps[*k])?;
            if !p.is_zero() {
                out.comps[*i] = out.comps[*i].add(&p.scale(c))?;
            }
        }
        Ok(out)
    }

    /// `ad*(a) g` for adjoint `a` and coadjoint `g`.
    pub fn coadjoint(&self, a: &LieValued, g: &LieValued) -> Result<LieValued> {
        self.coad_with(a, g, |x, y| x.mul(y))
    }

    /// `sad*(a) g = (-1)^{gh a deg g} ad*(a) g`.
    pub fn sad(&self, a: &LieValued, g: &LieValued) -> Result<LieValued> {
        self.coad_with(a, g, |x, y| x.dot_mul(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for alg in [LieAlgebraData::so3(), LieAlgebraData::gl(2).unwrap(), LieAlgebraData::gl(3).unwrap(), LieAlgebraData::u1(2)] {
            let r = alg.validate();
            assert!(r.all_pass(), "{}: {:?}", alg.name, r);
        }
        assert!(LieAlgebraData::so3().canonical().validate().all_pass());
    }

    #[test]
    fn gl2_signature() {
        let po = LieAlgebraData::gl(2).unwrap().pseudo_orthonormalize().unwrap();
        let mut sig = po.signature();
        sig.sort();
        assert_eq!(sig, vec![-1, 1, 1, 1]);
    }

    #[test]
    fn gl_range() {
        assert!(matches!(LieAlgebraData::gl(5), Err(Error::Range(_))));
    }

    #[test]
    fn assoc_for_gl() {
        let g = LieAlgebraData::gl(2).unwrap();
        assert_eq!(g.assoc_table().unwrap().len(), 8);
        assert_eq!(g.unit().unwrap(), &[Q::one(), Q::zero(), Q::zero(), Q::one()]);
        assert!(LieAlgebraData::so3().assoc_table().is_none());
    }
}
