//! Exact rational expressions: quotients of polynomials in canonical form.
//!
//! Invariants kept by every constructor and operation:
//! - the denominator is nonzero,
//! - numerator and denominator are coprime,
//! - the denominator's leading coefficient (graded-lex) is 1,
//! - the zero expression is `0/1`.
//!
//! With those, structural equality decides mathematical equality.

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::One;

use super::context::{check_same, Context};
use super::poly::{gcd, Polynomial};
use super::SymError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalExpr {
    num: Polynomial,
    den: Polynomial,
}

impl RationalExpr {
    /// Canonicalize a quotient. Errors when `den` is the zero polynomial.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, SymError> {
        check_same(num.context(), den.context())?;
        if den.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        if num.is_zero() {
            let ctx = num.context().clone();
            return Ok(RationalExpr { num, den: Polynomial::one(&ctx) });
        }
        let (num, den) = if den.is_one() {
            (num, den)
        } else {
            let g = gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                (
                    num.div_exact(&g).expect("gcd divides"),
                    den.div_exact(&g).expect("gcd divides"),
                )
            }
        };
        // fix the denominator leading coefficient to 1
        let lc = den.leading_coeff();
        if lc.is_one() {
            Ok(RationalExpr { num, den })
        } else {
            let inv = BigRational::one() / lc;
            Ok(RationalExpr { num: num.mul_scalar(&inv), den: den.mul_scalar(&inv) })
        }
    }

    pub fn from_poly(p: Polynomial) -> Self {
        let one = Polynomial::one(p.context());
        RationalExpr { num: p, den: one }
    }

    pub fn zero(ctx: &Arc<Context>) -> Self {
        Self::from_poly(Polynomial::zero(ctx))
    }

    pub fn one(ctx: &Arc<Context>) -> Self {
        Self::from_poly(Polynomial::one(ctx))
    }

    pub fn from_int(ctx: &Arc<Context>, n: i64) -> Self {
        Self::from_poly(Polynomial::from_int(ctx, n))
    }

    pub fn constant(ctx: &Arc<Context>, c: BigRational) -> Self {
        Self::from_poly(Polynomial::constant(ctx, c))
    }

    pub fn var(ctx: &Arc<Context>, name: &str) -> Result<Self, SymError> {
        Ok(Self::from_poly(Polynomial::var_named(ctx, name)?))
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn context(&self) -> &Arc<Context> {
        self.num.context()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// True when the canonical denominator involves none of `vars`.
    pub fn is_polynomial_in(&self, vars: &[usize]) -> bool {
        self.den.involves_none_of(vars)
    }

    /// The constant value when the expression reduces to one.
    pub fn as_constant(&self) -> Option<BigRational> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn as_poly(&self) -> Option<&Polynomial> {
        if self.den.is_one() {
            Some(&self.num)
        } else {
            None
        }
    }

    pub fn neg(&self) -> Self {
        RationalExpr { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self, SymError> {
        // n1/d1 + n2/d2 = (n1 d2 + n2 d1) / (d1 d2)
        let n = self
            .num
            .mul(&other.den)?
            .add(&other.num.mul(&self.den)?)?;
        let d = self.den.mul(&other.den)?;
        RationalExpr::new(n, d)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SymError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SymError> {
        // cross-cancel before multiplying to keep intermediates small
        let g1 = gcd(&self.num, &other.den);
        let g2 = gcd(&other.num, &self.den);
        let n1 = self.num.div_exact(&g1).expect("gcd divides");
        let d2 = other.den.div_exact(&g1).expect("gcd divides");
        let n2 = other.num.div_exact(&g2).expect("gcd divides");
        let d1 = self.den.div_exact(&g2).expect("gcd divides");
        RationalExpr::new(n1.mul(&n2)?, d1.mul(&d2)?)
    }

    pub fn div(&self, other: &Self) -> Result<Self, SymError> {
        if other.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        self.mul(&RationalExpr {
            num: other.den.clone(),
            den: other.num.clone(),
        })
    }

    pub fn inv(&self) -> Result<Self, SymError> {
        if self.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        RationalExpr::new(self.den.clone(), self.num.clone())
    }

    pub fn pow(&self, n: u32) -> Result<Self, SymError> {
        let ctx = self.context().clone();
        let mut acc = Self::one(&ctx);
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Exact partial derivative (quotient rule), canonical result.
    pub fn derivative(&self, var: usize) -> Result<Self, SymError> {
        let dn = self.num.derivative(var);
        if self.den.is_one() {
            return Ok(Self::from_poly(dn));
        }
        let dd = self.den.derivative(var);
        let num = dn.mul(&self.den)?.sub(&self.num.mul(&dd)?)?;
        let den = self.den.mul(&self.den)?;
        RationalExpr::new(num, den)
    }

    /// Simultaneous substitution into a target context.
    ///
    /// Every variable of `self` must either have a binding or exist under
    /// the same name in `target`. Errors when the substituted denominator
    /// vanishes identically.
    pub fn substitute(
        &self,
        target: &Arc<Context>,
        bindings: &[(usize, RationalExpr)],
    ) -> Result<Self, SymError> {
        let src = self.context();
        // per-source-variable image in the target context
        let mut images: Vec<Option<RationalExpr>> = vec![None; src.arity()];
        for (idx, expr) in bindings {
            check_same(expr.context(), target)?;
            images[*idx] = Some(expr.clone());
        }
        let num = substitute_poly(&self.num, target, &mut images)?;
        let den = substitute_poly(&self.den, target, &mut images)?;
        if den.is_zero() {
            return Err(SymError::SubstitutionDenominatorZero);
        }
        num.div(&den)
    }

    /// Evaluate at exact rational values aligned with the context.
    /// Errors when the denominator vanishes at the point.
    pub fn eval_rational(&self, vals: &[BigRational]) -> Result<BigRational, SymError> {
        let d = self.den.eval_rational(vals);
        if num_traits::Zero::is_zero(&d) {
            return Err(SymError::DivisionByZero);
        }
        Ok(self.num.eval_rational(vals) / d)
    }

    pub fn eval_f64(&self, vals: &[f64]) -> f64 {
        self.num.eval_f64(vals) / self.den.eval_f64(vals)
    }
}

fn substitute_poly(
    p: &Polynomial,
    target: &Arc<Context>,
    images: &mut Vec<Option<RationalExpr>>,
) -> Result<RationalExpr, SymError> {
    let src = p.context();
    let mut acc = RationalExpr::zero(target);
    for (m, c) in p.terms() {
        let mut term = RationalExpr::constant(target, c.clone());
        for (i, &e) in m.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if images[i].is_none() {
                // identity binding by name
                let name = src.name(i);
                let idx = target
                    .index_of(name)
                    .ok_or_else(|| SymError::UnknownIndeterminate(name.to_string()))?;
                images[i] = Some(RationalExpr::from_poly(Polynomial::var(target, idx)));
            }
            let img = images[i].as_ref().expect("just set");
            term = term.mul(&img.pow(e)?)?;
        }
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

// Display: numerator, or (num)/(den) with parentheses that the parser
// reads back to the same canonical value.
impl fmt::Display for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        write!(f, "({})/({})", self.num, self.den)
    }
}
