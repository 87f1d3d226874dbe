//! Fixture files: every vector field and coordinate map used by the
//! verification commands ships as text in the expression grammar and is
//! parsed at load time.
//!
//! Block format, one or more blocks per file:
//!
//! ```text
//! system <name>
//! params a1 a2 a3
//! state x y z
//! [coeffs c1 c2 ...]
//! dx/dt = <expr>
//! ...
//! end
//!
//! map <name>
//! params a1 a2 a3
//! source x y z
//! target p q r
//! p = <expr in source>
//! [param a2 = <expr in source params>]
//! inverse
//! x = <expr in target>
//! [param a2 = <expr in target params>]
//! end
//! ```
//!
//! The time variable `t` is implicit in every context. Comments start
//! with `#`. The default fixture set is embedded in the binary; the
//! `PHASE_ATLAS_FIXTURES` environment variable points at a directory of
//! replacement files with the same names.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use crate::symcore::{parse_expression, Context, IndetKind, Indeterminate, RationalExpr};
use crate::vfield::{RationalMap, VectorField};

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("fixture '{0}' not found")]
    Missing(String),
    #[error("io error reading '{0}': {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Sym(#[from] crate::symcore::SymError),
    #[error(transparent)]
    Field(#[from] crate::vfield::FieldError),
}

/// Embedded default fixture files (name, contents).
pub const EMBEDDED: &[(&str, &str)] = &[
    ("systems.vf", include_str!("../fixtures/systems.vf")),
    ("charts.vf", include_str!("../fixtures/charts.vf")),
    ("steps.vf", include_str!("../fixtures/steps.vf")),
    ("backlund.vf", include_str!("../fixtures/backlund.vf")),
];

/// Environment variable that overrides the fixture directory.
pub const FIXTURE_DIR_ENV: &str = "PHASE_ATLAS_FIXTURES";

/// All loaded fixtures, indexed by block name.
#[derive(Debug, Default)]
pub struct Fixtures {
    systems: HashMap<String, VectorField>,
    maps: HashMap<String, RationalMap>,
    contexts: HashMap<String, Arc<Context>>,
}

impl Fixtures {
    /// Load the default set: embedded files, or the directory named by
    /// `PHASE_ATLAS_FIXTURES` when set.
    pub fn load_default() -> Result<Fixtures, FixtureError> {
        match std::env::var_os(FIXTURE_DIR_ENV) {
            Some(dir) => Self::load_dir(Path::new(&dir)),
            None => Self::load_embedded(),
        }
    }

    pub fn load_embedded() -> Result<Fixtures, FixtureError> {
        let mut fx = Fixtures::default();
        for (name, text) in EMBEDDED {
            fx.parse_file(name, text)?;
        }
        Ok(fx)
    }

    pub fn load_dir(dir: &Path) -> Result<Fixtures, FixtureError> {
        let mut fx = Fixtures::default();
        for (name, _) in EMBEDDED {
            let path = dir.join(name);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| FixtureError::Io(path.display().to_string(), e))?;
            fx.parse_file(name, &text)?;
        }
        Ok(fx)
    }

    pub fn system(&self, name: &str) -> Result<&VectorField, FixtureError> {
        self.systems
            .get(name)
            .ok_or_else(|| FixtureError::Missing(name.to_string()))
    }

    pub fn map(&self, name: &str) -> Result<&RationalMap, FixtureError> {
        self.maps
            .get(name)
            .ok_or_else(|| FixtureError::Missing(name.to_string()))
    }

    pub fn system_names(&self) -> impl Iterator<Item = &str> {
        self.systems.keys().map(|s| s.as_str())
    }

    /// Intern a context so equal variable lists share one allocation.
    fn intern(&mut self, vars: Vec<Indeterminate>) -> Result<Arc<Context>, FixtureError> {
        let key: String = vars
            .iter()
            .map(|v| format!("{}:{:?};", v.name(), v.kind()))
            .collect();
        if let Some(ctx) = self.contexts.get(&key) {
            return Ok(ctx.clone());
        }
        let ctx = Context::new(vars)?;
        self.contexts.insert(key, ctx.clone());
        Ok(ctx)
    }

    pub fn parse_file(&mut self, file: &str, text: &str) -> Result<(), FixtureError> {
        let err = |line: usize, message: String| FixtureError::Parse {
            file: file.to_string(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .peekable();

        while let Some((ln, header)) = lines.next() {
            let mut parts = header.split_whitespace();
            let kind = parts.next().unwrap_or("");
            let name = parts
                .next()
                .ok_or_else(|| err(ln, "block header needs a name".into()))?
                .to_string();
            let mut params: Vec<String> = Vec::new();
            let mut coeffs: Vec<String> = Vec::new();
            let mut states: Vec<String> = Vec::new();
            let mut source: Vec<String> = Vec::new();
            let mut target: Vec<String> = Vec::new();
            let mut body: Vec<(usize, String)> = Vec::new();
            let mut closed = false;
            for (ln2, line) in lines.by_ref() {
                if line == "end" {
                    closed = true;
                    break;
                }
                let mut words = line.split_whitespace();
                match words.next() {
                    Some("params") => params = words.map(String::from).collect(),
                    Some("coeffs") => coeffs = words.map(String::from).collect(),
                    Some("state") => states = words.map(String::from).collect(),
                    Some("source") => source = words.map(String::from).collect(),
                    Some("target") => target = words.map(String::from).collect(),
                    _ => body.push((ln2, line.to_string())),
                }
            }
            if !closed {
                return Err(err(ln, format!("block '{}' not closed by 'end'", name)));
            }

            let make_ctx = |fx: &mut Fixtures, states: &[String]| -> Result<Arc<Context>, FixtureError> {
                let mut vars: Vec<Indeterminate> =
                    states.iter().map(Indeterminate::state).collect();
                vars.push(Indeterminate::time("t"));
                vars.extend(params.iter().map(Indeterminate::parameter));
                vars.extend(coeffs.iter().map(Indeterminate::coefficient));
                fx.intern(vars)
            };

            match kind {
                "system" => {
                    if states.is_empty() {
                        return Err(err(ln, "system block needs a 'state' line".into()));
                    }
                    let ctx = make_ctx(self, &states)?;
                    let mut rhs: Vec<Option<RationalExpr>> = vec![None; states.len()];
                    for (ln2, line) in body {
                        let (lhs, expr) = split_eq(&line)
                            .ok_or_else(|| err(ln2, "expected 'd<var>/dt = <expr>'".into()))?;
                        let var = lhs
                            .strip_prefix('d')
                            .and_then(|s| s.strip_suffix("/dt"))
                            .ok_or_else(|| err(ln2, format!("bad derivative lhs '{}'", lhs)))?;
                        let pos = states
                            .iter()
                            .position(|s| s == var)
                            .ok_or_else(|| err(ln2, format!("'{}' is not a state", var)))?;
                        rhs[pos] = Some(parse_expression(expr, &ctx)?);
                    }
                    let rhs = rhs
                        .into_iter()
                        .enumerate()
                        .map(|(i, r)| {
                            r.ok_or_else(|| err(ln, format!("missing d{}/dt", states[i])))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let vf = VectorField::new(ctx, rhs, name.clone())?;
                    self.systems.insert(name, vf);
                }
                "map" => {
                    if source.is_empty() || target.is_empty() {
                        return Err(err(ln, "map block needs 'source' and 'target'".into()));
                    }
                    let src = make_ctx(self, &source)?;
                    let tgt = make_ctx(self, &target)?;
                    let mut fwd: Vec<Option<RationalExpr>> = vec![None; target.len()];
                    let mut inv: Vec<Option<RationalExpr>> = vec![None; source.len()];
                    let mut pfwd: HashMap<String, RationalExpr> = HashMap::new();
                    let mut pinv: HashMap<String, RationalExpr> = HashMap::new();
                    let mut in_inverse = false;
                    for (ln2, line) in body {
                        if line == "inverse" {
                            in_inverse = true;
                            continue;
                        }
                        let (ctx_here, names, slots, pslots) = if in_inverse {
                            (&tgt, &source, &mut inv, &mut pinv)
                        } else {
                            (&src, &target, &mut fwd, &mut pfwd)
                        };
                        if let Some(rest) = line.strip_prefix("param ") {
                            let (lhs, expr) = split_eq(rest)
                                .ok_or_else(|| err(ln2, "expected 'param <name> = <expr>'".into()))?;
                            pslots.insert(lhs.to_string(), parse_expression(expr, ctx_here)?);
                            continue;
                        }
                        let (lhs, expr) = split_eq(&line)
                            .ok_or_else(|| err(ln2, "expected '<coord> = <expr>'".into()))?;
                        let pos = names
                            .iter()
                            .position(|s| s == lhs)
                            .ok_or_else(|| err(ln2, format!("'{}' is not a coordinate", lhs)))?;
                        slots[pos] = Some(parse_expression(expr, ctx_here)?);
                    }
                    let unwrap_all = |v: Vec<Option<RationalExpr>>, names: &[String]| {
                        v.into_iter()
                            .enumerate()
                            .map(|(i, r)| {
                                r.ok_or_else(|| err(ln, format!("missing '{} ='", names[i])))
                            })
                            .collect::<Result<Vec<_>, _>>()
                    };
                    let forward = unwrap_all(fwd, &target)?;
                    let inverse = unwrap_all(inv, &source)?;
                    let expand_params = |slots: HashMap<String, RationalExpr>,
                                         ctx: &Arc<Context>|
                     -> Result<Vec<RationalExpr>, FixtureError> {
                        if slots.is_empty() {
                            return Ok(Vec::new());
                        }
                        params
                            .iter()
                            .map(|p| match slots.get(p) {
                                Some(e) => Ok(e.clone()),
                                None => Ok(RationalExpr::var(ctx, p)?),
                            })
                            .collect()
                    };
                    let param_forward = expand_params(pfwd, &src)?;
                    let param_inverse = expand_params(pinv, &tgt)?;
                    let map = RationalMap::new(
                        name.clone(),
                        src,
                        tgt,
                        forward,
                        inverse,
                        param_forward,
                        param_inverse,
                    )?;
                    self.maps.insert(name, map);
                }
                other => {
                    return Err(err(ln, format!("unknown block kind '{}'", other)));
                }
            }
        }
        Ok(())
    }
}

fn split_eq(line: &str) -> Option<(&str, &str)> {
    let (lhs, rhs) = line.split_once('=')?;
    Some((lhs.trim(), rhs.trim()))
}

/// Convenience: parse an expression over a fixture context by name.
pub fn expr_in(
    fx: &Fixtures,
    system: &str,
    text: &str,
) -> Result<RationalExpr, FixtureError> {
    let ctx = fx.system(system)?.context().clone();
    Ok(parse_expression(text, &ctx)?)
}

/// The state-coordinate kind marker, re-exported for fixture consumers.
pub fn state_indices(ctx: &Arc<Context>) -> Vec<usize> {
    ctx.indices_of_kind(IndetKind::State)
}
