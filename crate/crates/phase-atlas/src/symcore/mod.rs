//! Exact sparse multivariate polynomial and rational-function arithmetic
//! over the rationals, with named indeterminates and a text parser.

pub mod context;
pub mod parser;
pub mod poly;
pub mod ratexpr;

pub use context::{check_same as check_ctx, Context, IndetKind, Indeterminate};
pub use parser::parse_expression;
pub use poly::{gcd, resultant, Monomial, Polynomial};
pub use ratexpr::RationalExpr;

/// Errors of the symbolic layer.
#[derive(Debug, Clone, thiserror::Error)]
pub enum SymError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("undeclared identifier '{0}'")]
    UnknownIndeterminate(String),
    #[error("duplicate indeterminate name '{0}'")]
    DuplicateName(String),
    #[error("expressions come from different contexts")]
    ContextMismatch,
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("substitution produces an identically zero denominator")]
    SubstitutionDenominatorZero,
}

/// Binary arithmetic selector for the generic entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Generic binary arithmetic on canonical expressions. For `Pow`, `b` is
/// ignored and `exp` is used.
pub fn arith(
    op: ArithOp,
    a: &RationalExpr,
    b: Option<&RationalExpr>,
    exp: Option<u32>,
) -> Result<RationalExpr, SymError> {
    match op {
        ArithOp::Add => a.add(b.ok_or(SymError::ContextMismatch)?),
        ArithOp::Sub => a.sub(b.ok_or(SymError::ContextMismatch)?),
        ArithOp::Mul => a.mul(b.ok_or(SymError::ContextMismatch)?),
        ArithOp::Div => a.div(b.ok_or(SymError::ContextMismatch)?),
        ArithOp::Pow => a.pow(exp.unwrap_or(1)),
    }
}

/// `true` iff `a - b` normalizes to zero. Canonical forms make this a
/// structural comparison.
pub fn equals(a: &RationalExpr, b: &RationalExpr) -> bool {
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn ctx() -> Arc<Context> {
        Context::for_chart(&["x", "y", "z"], &["a1", "a2"]).unwrap()
    }

    #[test]
    fn arith_examples() {
        let c = ctx();
        let x = RationalExpr::var(&c, "x").unwrap();
        // add(x, -x) = 0
        assert!(arith(ArithOp::Add, &x, Some(&x.neg()), None).unwrap().is_zero());
        // div(y z^2 + a2 z, z) = y z + a2, checked against long division below
        let num = parse_expression("y*z^2 + a2*z", &c).unwrap();
        let z = RationalExpr::var(&c, "z").unwrap();
        let got = arith(ArithOp::Div, &num, Some(&z), None).unwrap();
        let expect = parse_expression("y*z + a2", &c).unwrap();
        assert!(equals(&got, &expect));
        // long-division oracle on the expanded polynomials agrees
        let q = num
            .as_poly()
            .unwrap()
            .div_exact(z.as_poly().unwrap())
            .unwrap();
        assert_eq!(RationalExpr::from_poly(q), expect);
    }

    #[test]
    fn equals_examples() {
        let c = ctx();
        let w = RationalExpr::var(&c, "z").unwrap().inv().unwrap();
        let w2 = w.mul(&w).unwrap();
        assert!(!equals(&w, &w2));
    }

    // random expression generator over a fixed context: small polynomials
    // assembled from vars and constants
    fn arb_poly(c: Arc<Context>) -> impl Strategy<Value = RationalExpr> {
        let leaf = prop_oneof![
            (0usize..c.arity()).prop_map({
                let c = c.clone();
                move |i| RationalExpr::from_poly(Polynomial::var(&c, i))
            }),
            (-6i64..7).prop_map({
                let c = c.clone();
                move |n| RationalExpr::from_int(&c, n)
            }),
        ];
        leaf.prop_recursive(3, 24, 2, |inner| {
            (inner.clone(), inner).prop_flat_map(|(a, b)| {
                prop_oneof![
                    Just(a.add(&b).unwrap()),
                    Just(a.sub(&b).unwrap()),
                    Just(a.mul(&b).unwrap()),
                ]
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(350))]

        #[test]
        fn ring_laws(a in arb_poly(ctx()), b in arb_poly(ctx()), c in arb_poly(ctx())) {
            // commutativity
            prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            // associativity
            prop_assert_eq!(
                a.add(&b).unwrap().add(&c).unwrap(),
                a.add(&b.add(&c).unwrap()).unwrap()
            );
            prop_assert_eq!(
                a.mul(&b).unwrap().mul(&c).unwrap(),
                a.mul(&b.mul(&c).unwrap()).unwrap()
            );
            // distributivity
            prop_assert_eq!(
                a.mul(&b.add(&c).unwrap()).unwrap(),
                a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
            );
        }

        #[test]
        fn print_parse_identity(a in arb_poly(ctx())) {
            let ctx = ctx();
            let back = parse_expression(&a.to_string(), &ctx).unwrap();
            prop_assert_eq!(a, back);
        }

        #[test]
        fn substitute_is_ring_homomorphism(a in arb_poly(ctx()), b in arb_poly(ctx())) {
            let c = ctx();
            // x -> y + 1, z -> x * y
            let bind = vec![
                (c.require("x").unwrap(), parse_expression("y + 1", &c).unwrap()),
                (c.require("z").unwrap(), parse_expression("x*y", &c).unwrap()),
            ];
            let prod = a.mul(&b).unwrap().substitute(&c, &bind).unwrap();
            let prod2 = a
                .substitute(&c, &bind)
                .unwrap()
                .mul(&b.substitute(&c, &bind).unwrap())
                .unwrap();
            prop_assert_eq!(prod, prod2);
        }

        #[test]
        fn derivative_matches_finite_differences(a in arb_poly(ctx()), seed in 1u64..500) {
            // central differences at a random rational point, compared in f64
            let c = ctx();
            let var = (seed as usize) % c.arity();
            let d = a.derivative(var).unwrap();
            let mut vals: Vec<f64> = (0..c.arity())
                .map(|i| 0.31 + 0.17 * ((seed as f64 * (i as f64 + 1.3)).sin()))
                .collect();
            let h = 1e-5;
            let f = |vals: &[f64]| a.eval_f64(vals);
            let mut vp = vals.clone();
            vp[var] += h;
            let mut vm = vals.clone();
            vm[var] -= h;
            let approx = (f(&vp) - f(&vm)) / (2.0 * h);
            vals[var] += 0.0;
            let exact = d.eval_f64(&vals);
            let scale = exact.abs().max(approx.abs()).max(1.0);
            prop_assert!((exact - approx).abs() / scale < 1e-4,
                "d={} approx={} exact={}", d, approx, exact);
        }
    }

    #[test]
    fn derivative_finite_difference_spot_rational() {
        // d/dz (y z^2 + a2 z) = 2 y z + a2 at 20 random rational points
        let c = ctx();
        let e = parse_expression("y*z^2 + a2*z", &c).unwrap();
        let d = e.derivative(c.require("z").unwrap()).unwrap();
        let expect = parse_expression("2*y*z + a2", &c).unwrap();
        assert_eq!(d, expect);
        let mk = |k: i64| BigRational::new(BigInt::from(k), BigInt::from(7));
        for s in 0..20i64 {
            let vals: Vec<BigRational> =
                (0..c.arity() as i64).map(|i| mk(3 * s + i + 1)).collect();
            let lhs = d.eval_rational(&vals).unwrap();
            let rhs = expect.eval_rational(&vals).unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}
