//! Truncated multivariate Taylor arithmetic up to third order.
//!
//! A [`Jet3`] holds a value together with the totally symmetric partial
//! derivatives of orders one to three at a point. Only canonical multi-indices
//! (`i <= j <= k`) are stored. Binary operations truncate to the smaller of the
//! two populated orders.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Real;

/// Highest derivative order a jet can carry.
pub const MAX_ORDER: u8 = 3;

#[inline]
fn pairs(n: usize) -> usize {
    n * (n + 1) / 2
}

#[inline]
fn triples(n: usize) -> usize {
    n * (n + 1) * (n + 2) / 6
}

/// Offset of the canonical pair `(i, j)`, `i <= j`, among the order-2 partials.
#[inline]
fn idx2(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * (2 * n - i + 1) / 2 + (j - i)
}

/// Offset of the canonical triple `(i, j, k)`, `i <= j <= k`, among the order-3 partials.
#[inline]
fn idx3(n: usize, i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i <= j && j <= k && k < n);
    let mut off = 0;
    for a in 0..i {
        off += pairs(n - a);
    }
    off + idx2(n - i, j - i, k - i)
}

#[inline]
fn sort3(i: usize, j: usize, k: usize) -> (usize, usize, usize) {
    let (mut a, mut b, mut c) = (i, j, k);
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    if b > c {
        std::mem::swap(&mut b, &mut c);
    }
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    (a, b, c)
}

fn storage_len(n: usize, order: u8) -> usize {
    let mut len = 1;
    if order >= 1 {
        len += n;
    }
    if order >= 2 {
        len += pairs(n);
    }
    if order >= 3 {
        len += triples(n);
    }
    len
}

/// Value and symmetric partial derivatives (orders `0..=order`) of a function of `n` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet3<T> {
    n: usize,
    order: u8,
    data: Vec<T>,
}

impl<T: Real> Jet3<T> {
    fn zeros(n: usize, order: u8) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        Jet3 {
            n,
            order,
            data: vec![T::zero(); storage_len(n, order)],
        }
    }

    pub fn constant(n: usize, order: u8, value: T) -> Self {
        let mut j = Self::zeros(n, order);
        j.data[0] = value;
        j
    }

    /// The coordinate function `x_i` evaluated at `value`.
    pub fn variable(n: usize, order: u8, i: usize, value: T) -> Self {
        let mut j = Self::constant(n, order, value);
        if order >= 1 {
            j.data[1 + i] = T::one();
        }
        j
    }

    /// Builds a jet from explicit derivative arrays in canonical order.
    pub fn from_parts(n: usize, value: T, grad: &[T], hess: &[T], third: &[T]) -> Self {
        let order = if !third.is_empty() {
            3
        } else if !hess.is_empty() {
            2
        } else if !grad.is_empty() {
            1
        } else {
            0
        };
        let mut j = Self::zeros(n, order);
        j.data[0] = value;
        let mut off = 1;
        for part in [grad, hess, third].into_iter().take(order as usize) {
            j.data[off..off + part.len()].copy_from_slice(part);
            off += part.len();
        }
        assert_eq!(off, j.data.len(), "derivative arrays have wrong lengths");
        j
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    #[inline]
    pub fn value(&self) -> T {
        self.data[0]
    }

    #[inline]
    fn g(&self, i: usize) -> T {
        self.data[1 + i]
    }

    #[inline]
    fn h(&self, i: usize, j: usize) -> T {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.data[1 + self.n + idx2(self.n, a, b)]
    }

    #[inline]
    fn t(&self, i: usize, j: usize, k: usize) -> T {
        let (a, b, c) = sort3(i, j, k);
        self.data[1 + self.n + pairs(self.n) + idx3(self.n, a, b, c)]
    }

    /// First partial `∂_i`; zero when the order is not populated.
    pub fn d1(&self, i: usize) -> T {
        if self.order >= 1 {
            self.g(i)
        } else {
            T::zero()
        }
    }

    pub fn d2(&self, i: usize, j: usize) -> T {
        if self.order >= 2 {
            self.h(i, j)
        } else {
            T::zero()
        }
    }

    pub fn d3(&self, i: usize, j: usize, k: usize) -> T {
        if self.order >= 3 {
            self.t(i, j, k)
        } else {
            T::zero()
        }
    }

    /// Partial derivative with respect to a multi-index of length `0..=3`.
    pub fn partial_value(&self, multi: &[usize]) -> T {
        match multi {
            [] => self.value(),
            [i] => self.d1(*i),
            [i, j] => self.d2(*i, *j),
            [i, j, k] => self.d3(*i, *j, *k),
            _ => panic!("multi-index longer than {MAX_ORDER}"),
        }
    }

    pub fn gradient(&self) -> Vec<T> {
        (0..self.n).map(|i| self.d1(i)).collect()
    }

    /// The jet of `∂_i f`, one order lower.
    pub fn partial(&self, i: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let n = self.n;
        let mut out = Self::zeros(n, self.order - 1);
        out.data[0] = self.g(i);
        if out.order >= 1 {
            for j in 0..n {
                out.data[1 + j] = self.h(i, j);
            }
        }
        if out.order >= 2 {
            let base = 1 + n;
            let mut p = 0;
            for j in 0..n {
                for k in j..n {
                    out.data[base + p] = self.t(i, j, k);
                    p += 1;
                }
            }
        }
        out
    }

    /// Drops derivative levels above `order`.
    pub fn truncated(&self, order: u8) -> Self {
        if order >= self.order {
            return self.clone();
        }
        Jet3 {
            n: self.n,
            order,
            data: self.data[..storage_len(self.n, order)].to_vec(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        Jet3 {
            n: self.n,
            order: self.order,
            data: self.data.iter().map(|&v| v * c).collect(),
        }
    }

    /// `self + c * other`, truncated to the lower order.
    pub fn add_scaled(&self, c: T, other: &Self) -> Self {
        let order = self.order.min(other.order);
        assert_eq!(self.n, other.n);
        let len = storage_len(self.n, order);
        let data = (0..len).map(|k| self.data[k] + c * other.data[k]).collect();
        Jet3 {
            n: self.n,
            order,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn binary(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.n, other.n, "jets over different variable counts");
        let order = self.order.min(other.order);
        let len = storage_len(self.n, order);
        let data = (0..len).map(|k| f(self.data[k], other.data[k])).collect();
        Jet3 {
            n: self.n,
            order,
            data,
        }
    }

    fn product(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "jets over different variable counts");
        let (a, b) = (self, other);
        let n = a.n;
        let order = a.order.min(b.order);
        let mut out = Self::zeros(n, order);
        let (a0, b0) = (a.value(), b.value());
        out.data[0] = a0 * b0;
        if order >= 1 {
            for i in 0..n {
                out.data[1 + i] = a.g(i) * b0 + a0 * b.g(i);
            }
        }
        if order >= 2 {
            let mut p = 1 + n;
            for i in 0..n {
                for j in i..n {
                    out.data[p] =
                        a.h(i, j) * b0 + a.g(i) * b.g(j) + a.g(j) * b.g(i) + a0 * b.h(i, j);
                    p += 1;
                }
            }
        }
        if order >= 3 {
            let mut p = 1 + n + pairs(n);
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        out.data[p] = a.t(i, j, k) * b0
                            + a.h(i, j) * b.g(k)
                            + a.h(i, k) * b.g(j)
                            + a.h(j, k) * b.g(i)
                            + a.g(i) * b.h(j, k)
                            + a.g(j) * b.h(i, k)
                            + a.g(k) * b.h(i, j)
                            + a0 * b.t(i, j, k);
                        p += 1;
                    }
                }
            }
        }
        out
    }

    /// Chain rule for `φ(self)` given `[φ(v), φ'(v), φ''(v), φ'''(v)]` at `v = self.value()`.
    pub fn compose(&self, d: [T; 4]) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n, self.order);
        out.data[0] = d[0];
        if self.order >= 1 {
            for i in 0..n {
                out.data[1 + i] = d[1] * self.g(i);
            }
        }
        if self.order >= 2 {
            let mut p = 1 + n;
            for i in 0..n {
                for j in i..n {
                    out.data[p] = d[2] * self.g(i) * self.g(j) + d[1] * self.h(i, j);
                    p += 1;
                }
            }
        }
        if self.order >= 3 {
            let mut p = 1 + n + pairs(n);
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let (fi, fj, fk) = (self.g(i), self.g(j), self.g(k));
                        out.data[p] = d[3] * fi * fj * fk
                            + d[2] * (self.h(i, j) * fk + self.h(i, k) * fj + self.h(j, k) * fi)
                            + d[1] * self.t(i, j, k);
                        p += 1;
                    }
                }
            }
        }
        out
    }

    /// `1 / self`; the caller guarantees a nonzero value.
    pub fn recip(&self) -> Self {
        let v = self.value();
        let r = v.recip();
        let r2 = r * r;
        self.compose([r, -r2, T::lit(2.0) * r2 * r, T::lit(-6.0) * r2 * r2])
    }

    /// Integer power by repeated multiplication (exact on polynomials).
    pub fn powi(&self, k: i32) -> Self {
        let mut result = Self::constant(self.n, self.order, T::one());
        let mut base = self.clone();
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = result.product(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.product(&base);
            }
        }
        if k < 0 {
            result.recip()
        } else {
            result
        }
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    /// Requires `cos(value) != 0`.
    pub fn tan(&self) -> Self {
        let t = self.value().tan();
        let one = T::one();
        let two = T::lit(2.0);
        let sec2 = one + t * t;
        self.compose([
            t,
            sec2,
            two * t * sec2,
            two * sec2 * (one + T::lit(3.0) * t * t),
        ])
    }

    pub fn atan(&self) -> Self {
        let x = self.value();
        let one = T::one();
        let q = (one + x * x).recip();
        self.compose([
            x.atan(),
            q,
            T::lit(-2.0) * x * q * q,
            (T::lit(6.0) * x * x - T::lit(2.0)) * q * q * q,
        ])
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose([e, e, e, e])
    }

    /// Requires a positive value.
    pub fn ln(&self) -> Self {
        let x = self.value();
        let r = x.recip();
        self.compose([x.ln(), r, -r * r, T::lit(2.0) * r * r * r])
    }

    /// Requires a positive value whenever derivatives are populated.
    pub fn sqrt(&self) -> Self {
        let s = self.value().sqrt();
        if self.order == 0 {
            return Self::constant(self.n, 0, s);
        }
        let r = s.recip();
        self.compose([
            s,
            T::lit(0.5) * r,
            T::lit(-0.25) * r * r * r,
            T::lit(0.375) * r * r * r * r * r,
        ])
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose([s, c, s, c])
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose([c, s, c, s])
    }

    pub fn tanh(&self) -> Self {
        let t = self.value().tanh();
        let one = T::one();
        let s = one - t * t;
        self.compose([
            t,
            s,
            T::lit(-2.0) * t * s,
            (T::lit(6.0) * t * t - T::lit(2.0)) * s,
        ])
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl<'a, T: Real> $tr<&'a Jet3<T>> for &'a Jet3<T> {
            type Output = Jet3<T>;
            fn $method(self, rhs: &'a Jet3<T>) -> Jet3<T> {
                let f: fn(&Jet3<T>, &Jet3<T>) -> Jet3<T> = $body;
                f(self, rhs)
            }
        }
        impl<T: Real> $tr<Jet3<T>> for Jet3<T> {
            type Output = Jet3<T>;
            fn $method(self, rhs: Jet3<T>) -> Jet3<T> {
                (&self).$method(&rhs)
            }
        }
        impl<'a, T: Real> $tr<&'a Jet3<T>> for Jet3<T> {
            type Output = Jet3<T>;
            fn $method(self, rhs: &'a Jet3<T>) -> Jet3<T> {
                (&self).$method(rhs)
            }
        }
        impl<'a, T: Real> $tr<Jet3<T>> for &'a Jet3<T> {
            type Output = Jet3<T>;
            fn $method(self, rhs: Jet3<T>) -> Jet3<T> {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| a.binary(b, |x, y| x + y));
forward_binop!(Sub, sub, |a, b| a.binary(b, |x, y| x - y));
forward_binop!(Mul, mul, |a, b| a.product(b));

impl<T: Real> Neg for &Jet3<T> {
    type Output = Jet3<T>;
    fn neg(self) -> Jet3<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> Neg for Jet3<T> {
    type Output = Jet3<T>;
    fn neg(self) -> Jet3<T> {
        self.scale(-T::one())
    }
}

/// Inverts an `n × n` row-major matrix of jets by Gauss-Jordan elimination
/// with partial pivoting on the values. Returns `None` when singular.
pub fn invert_jet_matrix<T: Real>(m: &[Jet3<T>], n: usize) -> Option<Vec<Jet3<T>>> {
    assert_eq!(m.len(), n * n);
    let nv = m[0].nvars();
    let order = m.iter().map(|j| j.order()).min().unwrap_or(0);
    let mut a: Vec<Jet3<T>> = m.iter().map(|j| j.truncated(order)).collect();
    let mut inv: Vec<Jet3<T>> = (0..n * n)
        .map(|k| Jet3::constant(nv, order, if k / n == k % n { T::one() } else { T::zero() }))
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| {
                a[r * n + col]
                    .value()
                    .abs()
                    .partial_cmp(&a[s * n + col].value().abs())
                    .unwrap()
            })
            .unwrap();
        if a[piv * n + col].value().abs() <= T::min_positive_value() {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
                inv.swap(piv * n + c, col * n + c);
            }
        }
        let r = a[col * n + col].recip();
        for c in 0..n {
            a[col * n + c] = &a[col * n + c] * &r;
            inv[col * n + c] = &inv[col * n + c] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col].clone();
            for c in 0..n {
                a[row * n + c] = a[row * n + c].add_scaled(-T::one(), &(&factor * &a[col * n + c]));
                inv[row * n + c] =
                    inv[row * n + c].add_scaled(-T::one(), &(&factor * &inv[col * n + c]));
            }
        }
    }
    Some(inv)
}
