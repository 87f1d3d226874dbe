//! Vector fields on a coordinate chart and their pushforward under
//! birational coordinate changes.
//!
//! The time variable `t` is distinguished and never transformed; maps act
//! on the state coordinates and, optionally, on the parameters (the
//! Backlund transformations do, chart changes do not).

use std::fmt;
use std::sync::Arc;

use crate::symcore::{check_ctx, Context, IndetKind, RationalExpr, SymError};

/// Errors raised by map construction and pushforward.
#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("map '{0}': round-trip composition is not the identity on '{1}'")]
    RoundTrip(String, String),
    #[error("vector field '{0}': arity mismatch between coordinates and right-hand sides")]
    Arity(String),
    #[error("pushforward through '{0}': source and field contexts differ")]
    SourceMismatch(String),
    #[error("constraint variable '{0}' appears in the constraint expression")]
    SelfReferentialConstraint(String),
}

/// A non-autonomous vector field: one right-hand side per state coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorField {
    ctx: Arc<Context>,
    coords: Vec<usize>,
    rhs: Vec<RationalExpr>,
    label: String,
}

impl VectorField {
    /// Build a field over the state coordinates of `ctx`, in context order.
    pub fn new(
        ctx: Arc<Context>,
        rhs: Vec<RationalExpr>,
        label: impl Into<String>,
    ) -> Result<Self, FieldError> {
        let label = label.into();
        let coords = ctx.indices_of_kind(IndetKind::State);
        if coords.len() != rhs.len() {
            return Err(FieldError::Arity(label));
        }
        for e in &rhs {
            check_ctx(e.context(), &ctx)?;
        }
        Ok(VectorField { ctx, coords, rhs, label })
    }

    pub fn context(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// State coordinate indices into the context, in order.
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn coord_names(&self) -> Vec<&str> {
        self.coords.iter().map(|&i| self.ctx.name(i)).collect()
    }

    pub fn rhs(&self) -> &[RationalExpr] {
        &self.rhs
    }

    pub fn rhs_of(&self, name: &str) -> Option<&RationalExpr> {
        let idx = self.ctx.index_of(name)?;
        let pos = self.coords.iter().position(|&c| c == idx)?;
        Some(&self.rhs[pos])
    }

    /// Pole order of each right-hand side along `divisor` (a single chart
    /// variable): the exponent of the divisor in the canonical denominator.
    pub fn pole_order(&self, divisor: usize) -> Vec<u32> {
        self.rhs
            .iter()
            .map(|e| e.denominator().valuation_in(divisor))
            .collect()
    }

    /// True when every right-hand side is polynomial in the state variables.
    pub fn is_polynomial_in_states(&self) -> bool {
        self.rhs.iter().all(|e| e.is_polynomial_in(&self.coords))
    }

    /// Substitute a constraint `var = expr` into the field and test whether
    /// the manifold it defines is invariant.
    pub fn restrict_to_manifold(
        &self,
        var: &str,
        expr: &RationalExpr,
    ) -> Result<Restriction, FieldError> {
        let var_idx = self.ctx.require(var)?;
        if !expr.denominator().involves_none_of(&[var_idx])
            || !expr.numerator().involves_none_of(&[var_idx])
        {
            return Err(FieldError::SelfReferentialConstraint(var.to_string()));
        }
        let pos = self
            .coords
            .iter()
            .position(|&c| c == var_idx)
            .ok_or_else(|| SymError::UnknownIndeterminate(var.to_string()))?;

        // d/dt (var - expr) along the flow, then reduced mod the constraint
        let mut lie = self.rhs[pos].clone();
        for (j, &cj) in self.coords.iter().enumerate() {
            if cj == var_idx {
                continue;
            }
            let d = expr.derivative(cj)?;
            lie = lie.sub(&d.mul(&self.rhs[j])?)?;
        }
        if let Some(t) = self.ctx.index_of("t") {
            lie = lie.sub(&expr.derivative(t)?)?;
        }
        let bind = vec![(var_idx, expr.clone())];
        let residual = lie.substitute(&self.ctx, &bind)?;
        let invariant = residual.is_zero();

        // reduced field on the remaining coordinates
        let keep: Vec<_> = self
            .ctx
            .vars()
            .iter()
            .filter(|v| v.name() != var)
            .cloned()
            .collect();
        let small = Context::new(keep)?;
        let expr_small = expr.substitute(&small, &[])?;
        let small_bind = vec![(var_idx, expr_small)];
        let mut reduced_rhs = Vec::new();
        for (j, &cj) in self.coords.iter().enumerate() {
            if cj == var_idx {
                continue;
            }
            reduced_rhs.push(self.rhs[j].substitute(&small, &small_bind)?);
        }
        let reduced = VectorField::new(
            small,
            reduced_rhs,
            format!("{}|{}", self.label, var),
        )?;
        Ok(Restriction { invariant, residual, reduced })
    }
}

/// Result of restricting a field to a constraint manifold.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub invariant: bool,
    pub residual: RationalExpr,
    pub reduced: VectorField,
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &c) in self.coords.iter().enumerate() {
            writeln!(f, "d{}/dt = {}", self.ctx.name(c), self.rhs[i])?;
        }
        Ok(())
    }
}

/// A birational coordinate change with stored forward and inverse
/// substitutions and an optional affine action on the parameters.
///
/// Inverses are written down once (all maps used here are triangular and
/// invert by back-substitution) and verified by round-trip composition at
/// construction time.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMap {
    name: String,
    source: Arc<Context>,
    target: Arc<Context>,
    /// target state coordinates expressed in the source context
    forward: Vec<RationalExpr>,
    /// source state coordinates expressed in the target context
    inverse: Vec<RationalExpr>,
    /// target parameters in terms of source parameters (context order)
    param_forward: Vec<RationalExpr>,
    /// source parameters in terms of target parameters
    param_inverse: Vec<RationalExpr>,
}

impl RationalMap {
    /// Build and verify a map. `forward` follows the target's state order,
    /// `inverse` the source's. Parameter actions default to the identity
    /// when `param_forward`/`param_inverse` are empty.
    pub fn new(
        name: impl Into<String>,
        source: Arc<Context>,
        target: Arc<Context>,
        forward: Vec<RationalExpr>,
        inverse: Vec<RationalExpr>,
        param_forward: Vec<RationalExpr>,
        param_inverse: Vec<RationalExpr>,
    ) -> Result<Self, FieldError> {
        let name = name.into();
        let src_states = source.indices_of_kind(IndetKind::State);
        let tgt_states = target.indices_of_kind(IndetKind::State);
        if forward.len() != tgt_states.len() || inverse.len() != src_states.len() {
            return Err(FieldError::Arity(name));
        }
        let src_params = source.indices_of_kind(IndetKind::Parameter);
        let tgt_params = target.indices_of_kind(IndetKind::Parameter);
        let (param_forward, param_inverse) =
            if param_forward.is_empty() && param_inverse.is_empty() {
                // identity action, parameters matched by name
                let fwd = tgt_params
                    .iter()
                    .map(|&i| RationalExpr::var(&source, target.name(i)))
                    .collect::<Result<Vec<_>, _>>()?;
                let inv = src_params
                    .iter()
                    .map(|&i| RationalExpr::var(&target, source.name(i)))
                    .collect::<Result<Vec<_>, _>>()?;
                (fwd, inv)
            } else {
                (param_forward, param_inverse)
            };
        let map = RationalMap {
            name,
            source,
            target,
            forward,
            inverse,
            param_forward,
            param_inverse,
        };
        map.verify_round_trip()?;
        Ok(map)
    }

    fn verify_round_trip(&self) -> Result<(), FieldError> {
        // source -> target -> source must be the identity on states and params
        let src_states = self.source.indices_of_kind(IndetKind::State);
        for (k, &si) in src_states.iter().enumerate() {
            let back = self.pull_to_source(&self.inverse[k])?;
            let expect = RationalExpr::var(&self.source, self.source.name(si))?;
            if back != expect {
                return Err(FieldError::RoundTrip(
                    self.name.clone(),
                    self.source.name(si).to_string(),
                ));
            }
        }
        let tgt_states = self.target.indices_of_kind(IndetKind::State);
        for (k, &ti) in tgt_states.iter().enumerate() {
            let back = self.push_to_target(&self.forward[k])?;
            let expect = RationalExpr::var(&self.target, self.target.name(ti))?;
            if back != expect {
                return Err(FieldError::RoundTrip(
                    self.name.clone(),
                    self.target.name(ti).to_string(),
                ));
            }
        }
        let src_params = self.source.indices_of_kind(IndetKind::Parameter);
        for (k, &pi) in src_params.iter().enumerate() {
            let back = self.pull_to_source(&self.param_inverse[k])?;
            let expect = RationalExpr::var(&self.source, self.source.name(pi))?;
            if back != expect {
                return Err(FieldError::RoundTrip(
                    self.name.clone(),
                    self.source.name(pi).to_string(),
                ));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &Arc<Context> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Context> {
        &self.target
    }

    pub fn forward(&self) -> &[RationalExpr] {
        &self.forward
    }

    pub fn inverse(&self) -> &[RationalExpr] {
        &self.inverse
    }

    pub fn param_forward(&self) -> &[RationalExpr] {
        &self.param_forward
    }

    /// Rewrite an expression over the target context as an expression over
    /// the source context, using the forward substitutions.
    pub fn pull_to_source(&self, e: &RationalExpr) -> Result<RationalExpr, SymError> {
        let tgt_states = self.target.indices_of_kind(IndetKind::State);
        let tgt_params = self.target.indices_of_kind(IndetKind::Parameter);
        let mut bind: Vec<(usize, RationalExpr)> = Vec::new();
        for (k, &i) in tgt_states.iter().enumerate() {
            bind.push((i, self.forward[k].clone()));
        }
        for (k, &i) in tgt_params.iter().enumerate() {
            bind.push((i, self.param_forward[k].clone()));
        }
        e.substitute(&self.source, &bind)
    }

    /// Rewrite an expression over the source context as an expression over
    /// the target context, using the inverse substitutions.
    pub fn push_to_target(&self, e: &RationalExpr) -> Result<RationalExpr, SymError> {
        let src_states = self.source.indices_of_kind(IndetKind::State);
        let src_params = self.source.indices_of_kind(IndetKind::Parameter);
        let mut bind: Vec<(usize, RationalExpr)> = Vec::new();
        for (k, &i) in src_states.iter().enumerate() {
            bind.push((i, self.inverse[k].clone()));
        }
        for (k, &i) in src_params.iter().enumerate() {
            bind.push((i, self.param_inverse[k].clone()));
        }
        e.substitute(&self.target, &bind)
    }

    /// Composite map `other` after `self` (self: A -> B, other: B -> C).
    pub fn then(&self, other: &RationalMap) -> Result<RationalMap, FieldError> {
        check_ctx(&self.target, &other.source)?;
        let forward = other
            .forward
            .iter()
            .map(|e| self.pull_to_source(e))
            .collect::<Result<Vec<_>, _>>()?;
        let inverse = self
            .inverse
            .iter()
            .map(|e| other.push_to_target(e))
            .collect::<Result<Vec<_>, _>>()?;
        let param_forward = other
            .param_forward
            .iter()
            .map(|e| self.pull_to_source(e))
            .collect::<Result<Vec<_>, _>>()?;
        let param_inverse = self
            .param_inverse
            .iter()
            .map(|e| other.push_to_target(e))
            .collect::<Result<Vec<_>, _>>()?;
        RationalMap::new(
            format!("{}*{}", other.name, self.name),
            self.source.clone(),
            other.target.clone(),
            forward,
            inverse,
            param_forward,
            param_inverse,
        )
    }

    /// The inverse map, with source and target swapped.
    pub fn inverted(&self) -> Result<RationalMap, FieldError> {
        RationalMap::new(
            format!("{}^-1", self.name),
            self.target.clone(),
            self.source.clone(),
            self.inverse.clone(),
            self.forward.clone(),
            self.param_inverse.clone(),
            self.param_forward.clone(),
        )
    }

    pub fn identity(ctx: &Arc<Context>, name: impl Into<String>) -> Result<RationalMap, FieldError> {
        let states = ctx.indices_of_kind(IndetKind::State);
        let vars: Vec<RationalExpr> = states
            .iter()
            .map(|&i| RationalExpr::var(ctx, ctx.name(i)))
            .collect::<Result<Vec<_>, _>>()?;
        RationalMap::new(
            name,
            ctx.clone(),
            ctx.clone(),
            vars.clone(),
            vars,
            Vec::new(),
            Vec::new(),
        )
    }
}

/// Push a vector field forward through a map: chain rule on the forward
/// substitutions, then elimination of the source coordinates through the
/// inverse substitutions. Exact and canonical.
pub fn pushforward(f: &VectorField, m: &RationalMap) -> Result<VectorField, FieldError> {
    if f.context() != m.source() && !Arc::ptr_eq(f.context(), m.source()) {
        return Err(FieldError::SourceMismatch(m.name.clone()));
    }
    let mut rhs = Vec::with_capacity(m.forward.len());
    for fw in &m.forward {
        // time derivative of the forward component along the flow
        let mut lie = RationalExpr::zero(&m.source);
        for (j, &cj) in f.coords.iter().enumerate() {
            lie = lie.add(&fw.derivative(cj)?.mul(&f.rhs[j])?)?;
        }
        if let Some(t) = m.source.index_of("t") {
            lie = lie.add(&fw.derivative(t)?)?;
        }
        rhs.push(m.push_to_target(&lie)?);
    }
    VectorField::new(
        m.target.clone(),
        rhs,
        format!("{}@{}", f.label, m.name),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse_expression;

    fn u0() -> Arc<Context> {
        Context::for_chart(&["x", "y", "z"], &["a1", "a2", "a3"]).unwrap()
    }

    fn base_field(ctx: &Arc<Context>) -> VectorField {
        let rows = [
            "x*(t - x - 2*z) + a1",
            "y*(-t + y + 2*z) + a2",
            "z*(t - 2*y - z) + a3",
        ];
        let rhs = rows
            .iter()
            .map(|s| parse_expression(s, ctx).unwrap())
            .collect();
        VectorField::new(ctx.clone(), rhs, "base").unwrap()
    }

    fn chart(names: [&str; 3]) -> Arc<Context> {
        Context::for_chart(&names, &["a1", "a2", "a3"]).unwrap()
    }

    fn map(
        name: &str,
        src: &Arc<Context>,
        tgt: &Arc<Context>,
        fwd: [&str; 3],
        inv: [&str; 3],
    ) -> RationalMap {
        let forward = fwd.iter().map(|s| parse_expression(s, src).unwrap()).collect();
        let inverse = inv.iter().map(|s| parse_expression(s, tgt).unwrap()).collect();
        RationalMap::new(
            name,
            src.clone(),
            tgt.clone(),
            forward,
            inverse,
            vec![],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn identity_pushforward_is_identity() {
        let ctx = u0();
        let f = base_field(&ctx);
        let id = RationalMap::identity(&ctx, "id").unwrap();
        let g = pushforward(&f, &id).unwrap();
        assert_eq!(g.rhs(), f.rhs());
    }

    #[test]
    fn round_trip_violation_detected() {
        let src = u0();
        let tgt = chart(["p", "q", "r"]);
        // wrong inverse for p = 1/x
        let bad = RationalMap::new(
            "bad",
            src.clone(),
            tgt.clone(),
            vec![
                parse_expression("1/x", &src).unwrap(),
                parse_expression("y/x", &src).unwrap(),
                parse_expression("z/x", &src).unwrap(),
            ],
            vec![
                parse_expression("p", &tgt).unwrap(),
                parse_expression("q/p", &tgt).unwrap(),
                parse_expression("r/p", &tgt).unwrap(),
            ],
            vec![],
            vec![],
        );
        assert!(matches!(bad, Err(FieldError::RoundTrip(_, _))));
    }

    #[test]
    fn pushforward_to_reciprocal_chart() {
        // (p,q,r) = (1/x, y/x, z/x): dp/dt = -a1 p^2 - t p + 2 r + 1
        let src = u0();
        let tgt = chart(["p", "q", "r"]);
        let m = map(
            "pqr",
            &src,
            &tgt,
            ["1/x", "y/x", "z/x"],
            ["1/p", "q/p", "r/p"],
        );
        let f = base_field(&src);
        let g = pushforward(&f, &m).unwrap();
        let expect = parse_expression("-a1*p^2 - t*p + 2*r + 1", &tgt).unwrap();
        assert_eq!(g.rhs_of("p").unwrap(), &expect);
    }

    #[test]
    fn pushforward_to_infinity_chart_w_row() {
        // (u,v,w) = (x/z, y/z, 1/z): dw/dt = 1 + 2v - t w - a3 w^2
        let src = u0();
        let tgt = chart(["u", "v", "w"]);
        let m = map(
            "uvw",
            &src,
            &tgt,
            ["x/z", "y/z", "1/z"],
            ["u/w", "v/w", "1/w"],
        );
        let f = base_field(&src);
        let g = pushforward(&f, &m).unwrap();
        let expect = parse_expression("1 + 2*v - t*w - a3*w^2", &tgt).unwrap();
        assert_eq!(g.rhs_of("w").unwrap(), &expect);
        // pole orders along w: (1, 1, 0)
        let w = tgt.require("w").unwrap();
        assert_eq!(g.pole_order(w), vec![1, 1, 0]);
    }

    #[test]
    fn pole_order_of_polynomial_field_is_zero() {
        let ctx = u0();
        let f = base_field(&ctx);
        let x = ctx.require("x").unwrap();
        assert_eq!(f.pole_order(x), vec![0, 0, 0]);
    }

    #[test]
    fn forward_then_inverse_restores_field() {
        let src = u0();
        let tgt = chart(["p", "q", "r"]);
        let m = map(
            "pqr",
            &src,
            &tgt,
            ["1/x", "y/x", "z/x"],
            ["1/p", "q/p", "r/p"],
        );
        let f = base_field(&src);
        let g = pushforward(&f, &m).unwrap();
        let back = pushforward(&g, &m.inverted().unwrap()).unwrap();
        assert_eq!(back.rhs(), f.rhs());
    }

    #[test]
    fn restrict_x_manifold() {
        let ctx = u0();
        let f = base_field(&ctx);
        let zero = RationalExpr::zero(&ctx);
        // with symbolic a1 the x = 0 plane is not invariant: residual a1
        let r = f.restrict_to_manifold("x", &zero).unwrap();
        assert!(!r.invariant);
        let a1 = RationalExpr::var(&ctx, "a1").unwrap();
        assert_eq!(r.residual, a1);
        // with a1 = 0 it is invariant and the reduced field is the
        // remaining two rows
        let c0 = Context::for_chart(&["x", "y", "z"], &["a2", "a3"]).unwrap();
        let rows = [
            "x*(t - x - 2*z)",
            "y*(-t + y + 2*z) + a2",
            "z*(t - 2*y - z) + a3",
        ];
        let f0 = VectorField::new(
            c0.clone(),
            rows.iter().map(|s| parse_expression(s, &c0).unwrap()).collect(),
            "base-a1-0",
        )
        .unwrap();
        let r0 = f0.restrict_to_manifold("x", &RationalExpr::zero(&c0)).unwrap();
        assert!(r0.invariant);
        assert_eq!(r0.reduced.coord_names(), vec!["y", "z"]);
        let yz = r0.reduced.context().clone();
        assert_eq!(
            r0.reduced.rhs_of("y").unwrap(),
            &parse_expression("y*(-t + y + 2*z) + a2", &yz).unwrap()
        );
    }

    #[test]
    fn composition_matches_sequential_pushforward() {
        let src = u0();
        let mid = chart(["u", "v", "w"]);
        let tgt = chart(["u1", "v1", "w1"]);
        let m1 = map(
            "uvw",
            &src,
            &mid,
            ["x/z", "y/z", "1/z"],
            ["u/w", "v/w", "1/w"],
        );
        let m2 = map(
            "c1",
            &mid,
            &tgt,
            ["u", "v/w", "w"],
            ["u1", "v1*w1", "w1"],
        );
        let f = base_field(&src);
        let seq = pushforward(&pushforward(&f, &m1).unwrap(), &m2).unwrap();
        let comp = pushforward(&f, &m1.then(&m2).unwrap()).unwrap();
        assert_eq!(seq.rhs(), comp.rhs());
    }
}
