//! Named indeterminates and the ordered variable context they live in.
//!
//! Every polynomial and rational expression is built over a fixed,
//! explicitly ordered list of indeterminates. The order is part of the
//! canonical form: exponent vectors are aligned with it and the monomial
//! order reads it left to right.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::SymError;

/// Role of an indeterminate. The kind never changes after construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndetKind {
    /// A chart coordinate (state variable of a vector field).
    State,
    /// The distinguished time variable.
    Time,
    /// A constant parameter of the system.
    Parameter,
    /// A symbolic coefficient (used when whole families are manipulated).
    Coefficient,
}

/// A named indeterminate with a fixed kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Indeterminate {
    name: String,
    kind: IndetKind,
}

impl Indeterminate {
    pub fn new(name: impl Into<String>, kind: IndetKind) -> Self {
        Indeterminate { name: name.into(), kind }
    }

    pub fn state(name: impl Into<String>) -> Self {
        Self::new(name, IndetKind::State)
    }

    pub fn time(name: impl Into<String>) -> Self {
        Self::new(name, IndetKind::Time)
    }

    pub fn parameter(name: impl Into<String>) -> Self {
        Self::new(name, IndetKind::Parameter)
    }

    pub fn coefficient(name: impl Into<String>) -> Self {
        Self::new(name, IndetKind::Coefficient)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> IndetKind {
        self.kind
    }
}

impl fmt::Display for Indeterminate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// An ordered list of distinct indeterminates.
///
/// Contexts are immutable and shared behind `Arc`. Two contexts are
/// compatible when they are structurally equal; all arithmetic requires
/// compatible contexts.
#[derive(Debug)]
pub struct Context {
    vars: Vec<Indeterminate>,
    by_name: HashMap<String, usize>,
}

impl PartialEq for Context {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars
    }
}
impl Eq for Context {}

impl Context {
    /// Build a context from an ordered list of indeterminates.
    /// Fails on duplicate names.
    pub fn new(vars: Vec<Indeterminate>) -> Result<Arc<Self>, SymError> {
        let mut by_name = HashMap::with_capacity(vars.len());
        for (i, v) in vars.iter().enumerate() {
            if by_name.insert(v.name.clone(), i).is_some() {
                return Err(SymError::DuplicateName(v.name.clone()));
            }
        }
        Ok(Arc::new(Context { vars, by_name }))
    }

    /// Convenience constructor: `states`, then time `t`, then parameters.
    pub fn for_chart(
        states: &[&str],
        params: &[&str],
    ) -> Result<Arc<Self>, SymError> {
        let mut vars: Vec<Indeterminate> =
            states.iter().map(|s| Indeterminate::state(*s)).collect();
        vars.push(Indeterminate::time("t"));
        vars.extend(params.iter().map(|p| Indeterminate::parameter(*p)));
        Context::new(vars)
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[Indeterminate] {
        &self.vars
    }

    pub fn var(&self, idx: usize) -> &Indeterminate {
        &self.vars[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize, SymError> {
        self.index_of(name)
            .ok_or_else(|| SymError::UnknownIndeterminate(name.to_string()))
    }

    pub fn name(&self, idx: usize) -> &str {
        self.vars[idx].name()
    }

    /// Indices of all indeterminates of the given kind, in context order.
    pub fn indices_of_kind(&self, kind: IndetKind) -> Vec<usize> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind() == kind)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Check that two contexts are interchangeable, erroring otherwise.
pub fn check_same(a: &Arc<Context>, b: &Arc<Context>) -> Result<(), SymError> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(SymError::ContextMismatch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_names() {
        let err = Context::new(vec![
            Indeterminate::state("x"),
            Indeterminate::state("x"),
        ]);
        assert!(matches!(err, Err(SymError::DuplicateName(_))));
    }

    #[test]
    fn chart_context_layout() {
        let ctx = Context::for_chart(&["x", "y", "z"], &["a1", "a2", "a3"]).unwrap();
        assert_eq!(ctx.arity(), 7);
        assert_eq!(ctx.index_of("t"), Some(3));
        assert_eq!(ctx.var(3).kind(), IndetKind::Time);
        assert_eq!(ctx.var(5).kind(), IndetKind::Parameter);
    }
}
