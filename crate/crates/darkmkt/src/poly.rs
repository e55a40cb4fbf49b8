//! Dense real polynomials, coefficients stored lowest degree first.

use crate::error::{Error, Result};

pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| k as f64 * a)
        .collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|v| v * s).collect()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Drop leading (highest-degree) coefficients that are exactly zero.
pub fn trim(c: &[f64]) -> Vec<f64> {
    let mut v = c.to_vec();
    while v.len() > 1 && *v.last().unwrap() == 0.0 {
        v.pop();
    }
    v
}

/// Cauchy bound: every root has modulus below it.
pub fn root_bound(c: &[f64]) -> f64 {
    let c = trim(c);
    let lead = *c.last().unwrap();
    1.0 + c[..c.len() - 1]
        .iter()
        .fold(0.0f64, |m, a| m.max((a / lead).abs()))
}

/// All distinct real roots in `[lo, hi]`, ascending.
///
/// The critical points of `c` split the interval into monotone pieces;
/// each piece holds at most one root, found by bisection and polished by
/// Newton. A critical point where the polynomial vanishes (to rounding) is
/// reported as a multiple root.
pub fn real_roots_in(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let c = trim(c);
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        let r = -c[0] / c[1];
        return if r >= lo && r <= hi { vec![r] } else { Vec::new() };
    }
    let crit = real_roots_in(&derivative(&c), lo, hi);
    let mut knots = vec![lo];
    knots.extend(crit.iter().copied().filter(|x| *x > lo && *x < hi));
    knots.push(hi);
    let scale: f64 = c.iter().map(|a| a.abs()).sum::<f64>() * hi.abs().max(lo.abs()).max(1.0).powi(deg as i32);
    let tiny = 64.0 * f64::EPSILON * scale;
    let mut roots: Vec<f64> = Vec::new();
    let push = |roots: &mut Vec<f64>, r: f64| {
        if roots.last().is_none_or(|&l| (r - l).abs() > 1e-12 * (1.0 + r.abs())) {
            roots.push(r);
        }
    };
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(&c, a), eval(&c, b));
        if fa.abs() <= tiny && (a == lo || crit.contains(&a)) {
            push(&mut roots, a);
        }
        if fa.signum() * fb.signum() < 0.0 && fa.abs() > tiny && fb.abs() > tiny {
            push(&mut roots, bisect_polish(&c, a, b, fa));
        }
        if fb.abs() <= tiny {
            push(&mut roots, b);
        }
    }
    roots
}

fn bisect_polish(c: &[f64], mut a: f64, mut b: f64, fa: f64) -> f64 {
    let sa = fa.signum();
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = eval(c, mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    let dc = derivative(c);
    let mut x = 0.5 * (a + b);
    for _ in 0..3 {
        let d = eval(&dc, x);
        if d == 0.0 {
            break;
        }
        let nx = x - eval(c, x) / d;
        if nx < a || nx > b {
            break;
        }
        x = nx;
    }
    x
}

/// All distinct real roots.
pub fn real_roots(c: &[f64]) -> Vec<f64> {
    let b = root_bound(c);
    real_roots_in(c, -b, b)
}

/// The single root in the open interval `(lo, hi)`; errors list every real
/// root when there is none or more than one.
pub fn unique_root_in(c: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let inside: Vec<f64> = real_roots_in(c, lo, hi)
        .into_iter()
        .filter(|r| *r > lo && *r < hi)
        .collect();
    if inside.len() == 1 {
        return Ok(inside[0]);
    }
    Err(Error::Roots(format!(
        "{} roots in ({lo}, {hi}); real roots: {:?}",
        inside.len(),
        real_roots(c)
    )))
}
