//! Dense exact linear algebra over rational functions and over the
//! coefficient field.

use super::ratfn::RationalFunction;
use super::Coeff;

type Mat<C> = Vec<Vec<RationalFunction<C>>>;

fn pivot_cost<C: Coeff>(r: &RationalFunction<C>) -> (usize, usize) {
    (r.num().terms().len() + r.den().terms().len(), r.num().total_degree() as usize + r.den().total_degree() as usize)
}

/// Gauss–Jordan inverse; `None` when singular or not square.
pub fn invert<C: Coeff>(m: &[Vec<RationalFunction<C>>]) -> Option<Mat<C>> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return None;
    }
    let mut a: Mat<C> = m.to_vec();
    let mut inv: Mat<C> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { RationalFunction::one() } else { RationalFunction::zero() }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).filter(|&r| !a[r][col].is_zero()).min_by_key(|&r| pivot_cost(&a[r][col]))?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].inv().ok()?;
        if !p.is_one() {
            for j in 0..n {
                if !a[col][j].is_zero() {
                    a[col][j] = a[col][j].mul(&p);
                }
                if !inv[col][j].is_zero() {
                    inv[col][j] = inv[col][j].mul(&p);
                }
            }
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                if !a[col][j].is_zero() {
                    a[r][j] = a[r][j].sub(&f.mul(&a[col][j]));
                }
                if !inv[col][j].is_zero() {
                    inv[r][j] = inv[r][j].sub(&f.mul(&inv[col][j]));
                }
            }
        }
    }
    Some(inv)
}

/// Rank over the field of rational functions.
pub fn rank<C: Coeff>(m: &[Vec<RationalFunction<C>>]) -> usize {
    let mut a: Mat<C> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).filter(|&i| !a[i][c].is_zero()).min_by_key(|&i| pivot_cost(&a[i][c])) else {
            continue;
        };
        a.swap(r, piv);
        let p = a[r][c].inv().expect("pivot is nonzero");
        for i in r + 1..rows {
            if a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].mul(&p);
            for j in c..cols {
                if !a[r][j].is_zero() {
                    a[i][j] = a[i][j].sub(&f.mul(&a[r][j]));
                }
            }
        }
        r += 1;
    }
    r
}

/// Rank of a matrix over the coefficient field.
pub fn rank_field<C: Coeff>(m: &[Vec<C>]) -> usize {
    let mut a: Vec<Vec<C>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, piv);
        let p = C::one() / a[r][c].clone();
        for i in r + 1..rows {
            if a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone() * p.clone();
            for j in c..cols {
                let t = f.clone() * a[r][j].clone();
                a[i][j] = a[i][j].clone() - t;
            }
        }
        r += 1;
    }
    r
}

pub fn mat_mul<C: Coeff>(a: &[Vec<RationalFunction<C>>], b: &[Vec<RationalFunction<C>>]) -> Mat<C> {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            assert_eq!(row.len(), inner, "inner dimensions differ");
            (0..cols)
                .map(|j| {
                    let mut acc = RationalFunction::zero();
                    for k in 0..inner {
                        if !row[k].is_zero() && !b[k][j].is_zero() {
                            acc = acc.add(&row[k].mul(&b[k][j]));
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}
