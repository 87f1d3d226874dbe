//! Sparse multivariate polynomials over the rationals.
//!
//! Terms are stored in a `BTreeMap` keyed by exponent vector under the
//! graded-lexicographic order, so a polynomial has exactly one
//! representation and equality is structural. Coefficients are exact
//! `BigRational`s; no floating point enters the symbolic layer.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::context::{check_same, Context};
use super::SymError;

/// Exponent vector aligned with a context, ordered graded-lexicographically:
/// higher total degree first, ties broken lexicographically with earlier
/// context variables more significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn constant(arity: usize) -> Self {
        Monomial(vec![0; arity])
    }

    pub fn var(arity: usize, idx: usize) -> Self {
        let mut e = vec![0; arity];
        e[idx] = 1;
        Monomial(e)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Componentwise division; `None` when not divisible.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            if a < b {
                return None;
            }
            out.push(a - b);
        }
        Some(Monomial(out))
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a.min(b))
                .collect(),
        )
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            // lex tie-break: larger exponent on an earlier variable wins
            .then_with(|| {
                for (a, b) in self.0.iter().zip(&other.0) {
                    match a.cmp(b) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                Ordering::Equal
            })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial in canonical form: no zero coefficients are stored and the
/// term map is ordered, so `==` decides mathematical equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    ctx: Arc<Context>,
    terms: std::collections::BTreeMap<Monomial, BigRational>,
}

impl Polynomial {
    pub fn zero(ctx: &Arc<Context>) -> Self {
        Polynomial { ctx: ctx.clone(), terms: Default::default() }
    }

    pub fn constant(ctx: &Arc<Context>, c: BigRational) -> Self {
        let mut p = Self::zero(ctx);
        if !c.is_zero() {
            p.terms.insert(Monomial::constant(ctx.arity()), c);
        }
        p
    }

    pub fn one(ctx: &Arc<Context>) -> Self {
        Self::constant(ctx, BigRational::one())
    }

    pub fn from_int(ctx: &Arc<Context>, n: i64) -> Self {
        Self::constant(ctx, BigRational::from_integer(BigInt::from(n)))
    }

    pub fn var(ctx: &Arc<Context>, idx: usize) -> Self {
        let mut p = Self::zero(ctx);
        p.terms.insert(Monomial::var(ctx.arity(), idx), BigRational::one());
        p
    }

    pub fn var_named(ctx: &Arc<Context>, name: &str) -> Result<Self, SymError> {
        Ok(Self::var(ctx, ctx.require(name)?))
    }

    pub fn from_terms(
        ctx: &Arc<Context>,
        terms: impl IntoIterator<Item = (Monomial, BigRational)>,
    ) -> Self {
        let mut p = Self::zero(ctx);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn context(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .map(|(m, c)| m.is_constant() && c.is_one())
                .unwrap_or(false)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_constant())
    }

    /// The constant value when the polynomial has no variable terms.
    pub fn as_constant(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        if self.is_constant() {
            return self.terms.values().next().cloned();
        }
        None
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Leading term under the graded-lex order.
    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coeff(&self) -> BigRational {
        self.leading().map(|(_, c)| c.clone()).unwrap_or_else(BigRational::zero)
    }

    /// Degree in a single variable.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.total_degree()).max().unwrap_or(0)
    }

    /// Smallest exponent of `var` over all terms; the exact power of `var`
    /// dividing the polynomial. Zero polynomial reports 0.
    pub fn valuation_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).min().unwrap_or(0)
    }

    /// True when none of `vars` appears in any term.
    pub fn involves_none_of(&self, vars: &[usize]) -> bool {
        self.terms.keys().all(|m| vars.iter().all(|&v| m.0[v] == 0))
    }

    /// Indices of variables that actually occur.
    pub fn support(&self) -> Vec<usize> {
        let mut seen = vec![false; self.ctx.arity()];
        for m in self.terms.keys() {
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    seen[i] = true;
                }
            }
        }
        seen.iter().enumerate().filter(|(_, &s)| s).map(|(i, _)| i).collect()
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = Self::zero(&self.ctx);
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, SymError> {
        check_same(&self.ctx, &other.ctx)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, SymError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, SymError> {
        check_same(&self.ctx, &other.ctx)?;
        let mut out = Self::zero(&self.ctx);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn mul_scalar(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Self::zero(&self.ctx);
        }
        let mut out = Self::zero(&self.ctx);
        for (m, a) in &self.terms {
            out.terms.insert(m.clone(), a * c);
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Polynomial {
        let mut out = Self::zero(&self.ctx);
        for (ma, c) in &self.terms {
            out.terms.insert(ma.mul(m), c.clone());
        }
        out
    }

    pub fn pow(&self, n: u32) -> Result<Polynomial, SymError> {
        let mut acc = Self::one(&self.ctx);
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Exact division: `Some(q)` with `self = q * d` or `None` when `d`
    /// does not divide `self`. Division by zero is `None`.
    pub fn div_exact(&self, d: &Polynomial) -> Option<Polynomial> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self::zero(&self.ctx));
        }
        let (dm, dc) = d.leading().expect("nonzero");
        let mut rem = self.clone();
        let mut quot = Self::zero(&self.ctx);
        while let Some((rm, rc)) = rem.leading() {
            let qm = rm.div(dm)?;
            let qc = rc / dc;
            let mut t = Self::zero(&self.ctx);
            t.terms.insert(qm, qc);
            quot = quot.add(&t).expect("same ctx");
            rem = rem.sub(&t.mul(d).expect("same ctx")).expect("same ctx");
            if rem.is_zero() {
                return Some(quot);
            }
        }
        Some(quot)
    }

    /// Partial derivative with respect to the variable at `var`.
    pub fn derivative(&self, var: usize) -> Polynomial {
        let mut out = Self::zero(&self.ctx);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.0[var] = e - 1;
            out.add_term(m2, c * BigRational::from_integer(BigInt::from(e)));
        }
        out
    }

    /// Group terms by their exponents in `vars`: returns, for each distinct
    /// monomial in `vars`, the cofactor polynomial in the remaining
    /// variables. The cofactor keeps the full context with zero exponents
    /// on `vars`.
    pub fn coefficients_in(&self, vars: &[usize]) -> Vec<(Monomial, Polynomial)> {
        use std::collections::BTreeMap;
        let mut groups: BTreeMap<Monomial, Polynomial> = BTreeMap::new();
        let arity = self.ctx.arity();
        for (m, c) in &self.terms {
            let mut key = Monomial::constant(arity);
            let mut rest = m.clone();
            for &v in vars {
                key.0[v] = m.0[v];
                rest.0[v] = 0;
            }
            groups
                .entry(key)
                .or_insert_with(|| Self::zero(&self.ctx))
                .add_term(rest, c.clone());
        }
        groups.into_iter().filter(|(_, p)| !p.is_zero()).collect()
    }

    /// Coefficient of an exact monomial in `vars` (remaining variables kept).
    pub fn coefficient_of(&self, vars: &[usize], exps: &[u32]) -> Polynomial {
        let mut out = Self::zero(&self.ctx);
        for (m, c) in &self.terms {
            if vars.iter().zip(exps).all(|(&v, &e)| m.0[v] == e) {
                let mut rest = m.clone();
                for &v in vars {
                    rest.0[v] = 0;
                }
                out.add_term(rest, c.clone());
            }
        }
        out
    }

    /// Evaluate at exact rational values for every variable.
    pub fn eval_rational(&self, vals: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    term *= &vals[i];
                }
            }
            acc += term;
        }
        acc
    }

    /// Evaluate in floating point (test and diagnostics helper; the
    /// compiled evaluator in `mero` is the fast path).
    pub fn eval_f64(&self, vals: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut term = rational_to_f64(c);
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    term *= vals[i].powi(e as i32);
                }
            }
            acc += term;
        }
        acc
    }

    /// Content: gcd of all coefficients times the monomial gcd of all terms,
    /// i.e. the largest "monomial with rational coefficient" dividing self.
    fn monomial_content(&self) -> Option<(Monomial, BigRational)> {
        let mut it = self.terms.iter();
        let (m0, _) = it.next()?;
        let mut mg = m0.clone();
        for (m, _) in it {
            mg = mg.gcd(m);
        }
        Some((mg, BigRational::one()))
    }
}

fn rational_to_f64(c: &BigRational) -> f64 {
    // convert via i128 when possible to keep exactness for small values
    let num = c.numer();
    let den = c.denom();
    match (i128::try_from(num), i128::try_from(den)) {
        (Ok(n), Ok(d)) => n as f64 / d as f64,
        _ => {
            let digits = |b: &BigInt| b.to_string().parse::<f64>().unwrap_or(f64::NAN);
            digits(num) / digits(den)
        }
    }
}

// ---------------------------------------------------------------------------
// multivariate gcd (content and primitive part recursion, primitive PRS)
// ---------------------------------------------------------------------------

/// GCD of two polynomials, normalized to leading coefficient 1.
/// `gcd(0, q)` is the monic multiple of `q`.
pub fn gcd(a: &Polynomial, b: &Polynomial) -> Polynomial {
    let g = gcd_inner(a, b);
    make_monic(&g)
}

fn make_monic(p: &Polynomial) -> Polynomial {
    match p.leading() {
        None => p.clone(),
        Some((_, c)) => {
            let inv = BigRational::one() / c.clone();
            p.mul_scalar(&inv)
        }
    }
}

fn gcd_inner(a: &Polynomial, b: &Polynomial) -> Polynomial {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.is_constant() || b.is_constant() {
        return Polynomial::one(a.context());
    }
    // monomial fast path: almost every denominator in the charts is a
    // monomial, so this branch carries most of the load
    if a.num_terms() == 1 || b.num_terms() == 1 {
        let (ma, _) = a.monomial_content().expect("nonzero");
        let (mb, _) = b.monomial_content().expect("nonzero");
        let mut out = Polynomial::zero(a.context());
        out.terms.insert(ma.gcd(&mb), BigRational::one());
        return out;
    }
    // pick the main variable: the lowest-index variable occurring in both
    let sa = a.support();
    let sb = b.support();
    let common: Vec<usize> = sa.iter().copied().filter(|v| sb.contains(v)).collect();
    let Some(&main) = common.first() else {
        // disjoint supports: only the shared content (a constant) divides both
        return Polynomial::one(a.context());
    };

    let (ca, pa) = content_and_primitive(a, main);
    let (cb, pb) = content_and_primitive(b, main);
    let cg = gcd_inner(&ca, &cb);
    let pg = primitive_prs_gcd(&pa, &pb, main);
    cg.mul(&pg).expect("same ctx")
}

/// Split `p` as `content * primitive` with respect to `main`: the content is
/// the gcd of the univariate coefficients (polynomials in the remaining
/// variables).
fn content_and_primitive(p: &Polynomial, main: usize) -> (Polynomial, Polynomial) {
    let coeffs = univariate_coeffs(p, main);
    let mut content = Polynomial::zero(p.context());
    for c in coeffs.iter().filter(|c| !c.is_zero()) {
        content = gcd_inner(&content, c);
        if content.is_one() {
            break;
        }
    }
    let content = make_monic(&content);
    let prim = p.div_exact(&content).expect("content divides");
    (content, prim)
}

/// Coefficients of `p` viewed as univariate in `main`, lowest degree first.
fn univariate_coeffs(p: &Polynomial, main: usize) -> Vec<Polynomial> {
    let deg = p.degree_in(main) as usize;
    let mut out = vec![Polynomial::zero(p.context()); deg + 1];
    for (m, c) in p.terms() {
        let e = m.0[main] as usize;
        let mut rest = m.clone();
        rest.0[main] = 0;
        out[e].add_term(rest, c.clone());
    }
    out
}

/// Pseudo-remainder of `a` by `b` in the variable `main`.
fn pseudo_rem(a: &Polynomial, b: &Polynomial, main: usize) -> Polynomial {
    let db = b.degree_in(main);
    let cb = univariate_coeffs(b, main);
    let lb = cb.last().expect("b nonzero").clone();
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(main) >= db {
        let dr = r.degree_in(main);
        let cr = univariate_coeffs(&r, main);
        let lr = cr.last().expect("r nonzero").clone();
        // r := lb * r - lr * main^(dr-db) * b
        let mut shift = Monomial::constant(a.context().arity());
        shift.0[main] = dr - db;
        let t = b.mul_monomial(&shift).mul(&lr).expect("ctx");
        r = r.mul(&lb).expect("ctx").sub(&t).expect("ctx");
    }
    r
}

fn primitive_prs_gcd(a: &Polynomial, b: &Polynomial, main: usize) -> Polynomial {
    let (mut f, mut g) = if a.degree_in(main) >= b.degree_in(main) {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    };
    loop {
        if g.is_zero() {
            return f;
        }
        if g.degree_in(main) == 0 {
            // a nonzero coefficient-only remainder: gcd in main is trivial
            return Polynomial::one(a.context());
        }
        let r = pseudo_rem(&f, &g, main);
        let r = if r.is_zero() {
            r
        } else {
            let (_, prim) = content_and_primitive(&r, main);
            prim
        };
        f = g;
        g = r;
    }
}

/// Resultant of `a` and `b` with respect to `main`, computed from the
/// Sylvester matrix by fraction-free (Bareiss) elimination over the
/// polynomial ring.
pub fn resultant(a: &Polynomial, b: &Polynomial, main: usize) -> Polynomial {
    let ctx = a.context().clone();
    let da = a.degree_in(main) as usize;
    let db = b.degree_in(main) as usize;
    if da == 0 && db == 0 {
        return Polynomial::one(&ctx);
    }
    if a.is_zero() || b.is_zero() {
        return Polynomial::zero(&ctx);
    }
    if da == 0 {
        return a.pow(db as u32).expect("ctx");
    }
    if db == 0 {
        return b.pow(da as u32).expect("ctx");
    }
    let ca = univariate_coeffs(a, main);
    let cb = univariate_coeffs(b, main);
    let n = da + db;
    let mut mat: Vec<Vec<Polynomial>> = vec![vec![Polynomial::zero(&ctx); n]; n];
    for row in 0..db {
        for (j, c) in ca.iter().enumerate() {
            mat[row][row + (da - j)] = c.clone();
        }
    }
    for row in 0..da {
        for (j, c) in cb.iter().enumerate() {
            mat[db + row][row + (db - j)] = c.clone();
        }
    }
    bareiss_determinant(ctx, mat)
}

fn bareiss_determinant(ctx: Arc<Context>, mut m: Vec<Vec<Polynomial>>) -> Polynomial {
    let n = m.len();
    let mut sign = false;
    let mut prev = Polynomial::one(&ctx);
    for k in 0..n {
        if m[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return Polynomial::zero(&ctx);
            };
            m.swap(k, swap);
            sign = !sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t1 = m[i][j].mul(&m[k][k]).expect("ctx");
                let t2 = m[i][k].mul(&m[k][j]).expect("ctx");
                let num = t1.sub(&t2).expect("ctx");
                m[i][j] = num.div_exact(&prev).expect("bareiss divisibility");
            }
        }
        for i in k + 1..n {
            m[i][k] = Polynomial::zero(&ctx);
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if sign {
        det.neg()
    } else {
        det
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        // leading term first
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let mag = c.abs();
            // a leading "-x^2" would read back as "(-x)^2" under the
            // grammar, so the first negative term always carries an
            // explicit numeric coefficient
            let force_coeff = first && neg;
            if first {
                if neg {
                    f.write_str("-")?;
                }
                first = false;
            } else if neg {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            let mut wrote = false;
            if !mag.is_one() || m.is_constant() || force_coeff {
                if mag.denom().is_one() {
                    write!(f, "{}", mag.numer())?;
                } else {
                    write!(f, "{}/{}", mag.numer(), mag.denom())?;
                }
                wrote = true;
            }
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if wrote {
                    f.write_str("*")?;
                }
                f.write_str(self.ctx.name(i))?;
                if e > 1 {
                    write!(f, "^{}", e)?;
                }
                wrote = true;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::context::Context;

    fn ctx3() -> Arc<Context> {
        Context::for_chart(&["x", "y", "z"], &["a1"]).unwrap()
    }

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn grlex_order() {
        // x^2 > x*y > y^2 > x > y > 1 with x before y
        let a = Monomial(vec![2, 0, 0, 0, 0]);
        let b = Monomial(vec![1, 1, 0, 0, 0]);
        let c = Monomial(vec![0, 2, 0, 0, 0]);
        let d = Monomial(vec![1, 0, 0, 0, 0]);
        assert!(a > b && b > c && c > d);
    }

    #[test]
    fn canonical_cancellation() {
        let ctx = ctx3();
        let x = Polynomial::var(&ctx, 0);
        let s = x.add(&x.neg()).unwrap();
        assert!(s.is_zero());
        assert_eq!(s, Polynomial::zero(&ctx));
    }

    #[test]
    fn exact_division_roundtrip() {
        let ctx = ctx3();
        let x = Polynomial::var(&ctx, 0);
        let y = Polynomial::var(&ctx, 1);
        let a = x.add(&y).unwrap();
        let b = x.sub(&y).unwrap();
        let prod = a.mul(&b).unwrap();
        let q = prod.div_exact(&a).unwrap();
        assert_eq!(q, b);
        assert!(prod.div_exact(&x).is_none());
    }

    #[test]
    fn gcd_cancels_common_factor() {
        let ctx = ctx3();
        let x = Polynomial::var(&ctx, 0);
        let one = Polynomial::one(&ctx);
        // (x^2 - 1) and (x - 1) share (x - 1)
        let p = x.mul(&x).unwrap().sub(&one).unwrap();
        let q = x.sub(&one).unwrap();
        let g = gcd(&p, &q);
        assert_eq!(g, q);
    }

    #[test]
    fn gcd_multivariate() {
        let ctx = ctx3();
        let x = Polynomial::var(&ctx, 0);
        let y = Polynomial::var(&ctx, 1);
        let z = Polynomial::var(&ctx, 2);
        let f = x.add(&y).unwrap(); // x + y
        let a = f.mul(&z).unwrap().mul(&f).unwrap(); // z (x+y)^2
        let b = f.mul(&x).unwrap(); // x (x+y)
        let g = gcd(&a, &b);
        assert_eq!(g, f);
    }

    #[test]
    fn derivative_product_rule_spot() {
        let ctx = ctx3();
        let x = Polynomial::var(&ctx, 0);
        let z = Polynomial::var(&ctx, 2);
        // d/dx (x^2 + 2xz) = 2x + 2z
        let p = x.mul(&x).unwrap().add(&x.mul(&z).unwrap().mul_scalar(&rat(2))).unwrap();
        let d = p.derivative(0);
        let expect = x.mul_scalar(&rat(2)).add(&z.mul_scalar(&rat(2))).unwrap();
        assert_eq!(d, expect);
    }

    #[test]
    fn resultant_univariate() {
        // res_x(x^2 - 1, x - 2) = 3  (evaluate x^2-1 at x=2)
        let ctx = ctx3();
        let x = Polynomial::var(&ctx, 0);
        let p = x.mul(&x).unwrap().sub(&Polynomial::one(&ctx)).unwrap();
        let q = x.sub(&Polynomial::from_int(&ctx, 2)).unwrap();
        let r = resultant(&p, &q, 0);
        assert_eq!(r.as_constant().unwrap(), rat(3));
    }
}
