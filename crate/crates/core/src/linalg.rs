//! Dense exact linear algebra over `Q`.

use crate::koszul::scalar::Q;

pub type QMat = Vec<Vec<Q>>;

pub fn identity(n: usize) -> QMat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect()
}

/// Row-reduces in place; returns pivot columns.
pub fn row_reduce(a: &mut QMat) -> Vec<usize> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let v = &a[i][j] - &(&f * &a[r][j]);
                    a[i][j] = v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(a: &QMat) -> usize {
    let mut m = a.clone();
    row_reduce(&mut m).len()
}

pub fn det(a: &QMat) -> Q {
    let n = a.len();
    let mut m = a.clone();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d = &d * &m[c][c];
        let inv = m[c][c].recip();
        for i in c + 1..n {
            if !m[i][c].is_zero() {
                let f = &m[i][c] * &inv;
                for j in c..n {
                    let v = &m[i][j] - &(&f * &m[c][j]);
                    m[i][j] = v;
                }
            }
        }
    }
    d
}

pub fn inverse(a: &QMat) -> Option<QMat> {
    let n = a.len();
    let mut aug: QMat = a
        .iter()
        .zip(identity(n))
        .map(|(row, id)| row.iter().cloned().chain(id).collect())
        .collect();
    let piv = row_reduce(&mut aug);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Solves `x A = b` for a row vector `x`, if a solution exists.
pub fn solve_left(a: &QMat, b: &[Q]) -> Option<Vec<Q>> {
    let rows = a.len();
    let cols = b.len();
    // transpose system: A^T x^T = b^T
    let mut aug: QMat = (0..cols)
        .map(|j| {
            let mut r: Vec<Q> = (0..rows).map(|i| a[i][j].clone()).collect();
            r.push(b[j].clone());
            r
        })
        .collect();
    let piv = row_reduce(&mut aug);
    if piv.contains(&rows) {
        return None;
    }
    let mut x = vec![Q::zero(); rows];
    for (r, &c) in piv.iter().enumerate() {
        x[c] = aug[r][rows].clone();
    }
    Some(x)
}

pub fn matmul(a: &QMat, b: &QMat) -> QMat {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).fold(Q::zero(), |acc, l| &acc + &(&a[i][l] * &b[l][j])))
                .collect()
        })
        .collect()
}

pub fn transpose(a: &QMat) -> QMat {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[&[i64]]) -> QMat {
        v.iter().map(|r| r.iter().map(|&x| Q::int(x)).collect()).collect()
    }

    #[test]
    fn inverse_and_det() {
        let a = m(&[&[2, 1], &[1, 1]]);
        assert_eq!(det(&a), Q::one());
        let inv = inverse(&a).unwrap();
        assert_eq!(matmul(&a, &inv), identity(2));
        assert!(inverse(&m(&[&[1, 2], &[2, 4]])).is_none());
    }

    #[test]
    fn left_solve() {
        let a = m(&[&[1, 0, 1], &[0, 1, 1]]);
        let x = solve_left(&a, &[Q::int(2), Q::int(3), Q::int(5)]).unwrap();
        assert_eq!(x, vec![Q::int(2), Q::int(3)]);
        assert!(solve_left(&a, &[Q::int(1), Q::int(1), Q::int(0)]).is_none());
    }
}
