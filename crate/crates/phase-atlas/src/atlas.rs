//! The eight-chart atlas for the base system and the blow-up/blow-down
//! sequence that produces it.
//!
//! Charts U1..U7 are loaded from fixtures together with hand-derived
//! inverses; every map is round-trip checked at load time and the cached
//! pushforward of the base field through U1..U7 must be polynomial in the
//! chart variables. The resolution replay re-derives each chart from the
//! boundary charts by composing the recorded step substitutions, asserting
//! the printed intermediate systems bit-exactly along the way.

use std::sync::Arc;

use crate::fixtures::{FixtureError, Fixtures};
use crate::report::{Check, Report};
use crate::symcore::{parse_expression, Context, IndetKind, SymError};
use crate::vfield::{pushforward, FieldError, RationalMap, VectorField};

#[derive(Debug, thiserror::Error)]
pub enum AtlasError {
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("chart {0}: pushforward is not polynomial in the chart variables: {1}")]
    NotHolomorphic(String, String),
}

/// One coordinate chart of the phase space.
#[derive(Debug, Clone)]
pub struct Chart {
    name: String,
    /// U0 -> chart; the forward components are the printed definitions.
    from_u0: RationalMap,
    /// Pushforward of the base field, cached at load time.
    field: VectorField,
}

impl Chart {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Map from this chart back to U0 (inverse of the stored direction).
    pub fn to_u0(&self) -> Result<RationalMap, FieldError> {
        self.from_u0.inverted()
    }

    pub fn from_u0(&self) -> &RationalMap {
        &self.from_u0
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn context(&self) -> &Arc<Context> {
        self.field.context()
    }

    /// Is the cached field polynomial in the chart variables, and if not,
    /// which denominators obstruct it.
    pub fn certify_holomorphic(&self) -> HolomorphyReport {
        let states = self.context().indices_of_kind(IndetKind::State);
        let mut offending = Vec::new();
        for (i, rhs) in self.field.rhs().iter().enumerate() {
            if !rhs.is_polynomial_in(&states) {
                offending.push(format!(
                    "d{}/dt has denominator {}",
                    self.context().name(self.field.coords()[i]),
                    rhs.denominator()
                ));
            }
        }
        HolomorphyReport { chart: self.name.clone(), polynomial: offending.is_empty(), offending }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct HolomorphyReport {
    pub chart: String,
    pub polynomial: bool,
    pub offending: Vec<String>,
}

/// The full atlas: U0 (identity chart) plus U1..U7.
pub struct Atlas {
    charts: Vec<Chart>,
    base: VectorField,
}

pub const CHART_NAMES: [&str; 8] = ["u0", "u1", "u2", "u3", "u4", "u5", "u6", "u7"];

impl Atlas {
    /// Load the charts from fixtures and cache the pushforward fields.
    /// Fails if any map does not round-trip or any of U1..U7 is not
    /// polynomial.
    pub fn builtin(fx: &Fixtures) -> Result<Atlas, AtlasError> {
        let base = fx.system("base")?.clone();
        let mut charts = Vec::with_capacity(8);
        let id = RationalMap::identity(base.context(), "u0")?;
        charts.push(Chart { name: "u0".into(), from_u0: id, field: base.clone() });
        for name in &CHART_NAMES[1..] {
            let m = fx.map(name)?.clone();
            let field = pushforward(&base, &m)?;
            let chart = Chart { name: name.to_string(), from_u0: m, field };
            let rep = chart.certify_holomorphic();
            if !rep.polynomial {
                return Err(AtlasError::NotHolomorphic(
                    chart.name.clone(),
                    rep.offending.join("; "),
                ));
            }
            charts.push(chart);
        }
        Ok(Atlas { charts, base })
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, name: &str) -> Option<&Chart> {
        self.charts.iter().find(|c| c.name == name)
    }

    pub fn base_field(&self) -> &VectorField {
        &self.base
    }

    /// Transition map from chart `i` to chart `j` through U0.
    pub fn transition(&self, from: &str, to: &str) -> Result<RationalMap, AtlasError> {
        let a = self.chart(from).ok_or_else(|| FixtureError::Missing(from.into()))?;
        let b = self.chart(to).ok_or_else(|| FixtureError::Missing(to.into()))?;
        Ok(a.to_u0()?.then(b.from_u0())?)
    }

    /// Pairwise consistency: pushing chart i's field through the i->j
    /// transition reproduces chart j's field, as a cleared identity.
    ///
    /// The transition is applied leg by leg (chart i to U0, then U0 to
    /// chart j); the separately verified functoriality of pushforward
    /// makes this equal to pushing through the composed map, at a
    /// fraction of the symbolic cost.
    pub fn check_transitions(&self) -> Result<Vec<(String, String, bool)>, AtlasError> {
        let mut out = Vec::new();
        for a in &self.charts {
            let down = pushforward(a.field(), &a.to_u0()?)?;
            for b in &self.charts {
                if a.name == b.name {
                    continue;
                }
                let pushed = pushforward(&down, b.from_u0())?;
                let ok = pushed.rhs() == b.field().rhs();
                out.push((a.name.clone(), b.name.clone(), ok));
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// resolution replay
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    BlowUpPoint,
    BlowUpCurve,
    BlowDownSurface,
}

/// One recorded resolution step: a substitution plus its bookkeeping.
#[derive(Debug, Clone)]
pub struct ResolutionStep {
    pub id: &'static str,
    pub kind: StepKind,
    /// fixture name of the substitution map
    pub map: &'static str,
    /// defining equations of the center, in source coordinates
    pub center: &'static [&'static str],
    /// fixture name of the printed output system, when the paper trail
    /// records one
    pub golden: Option<&'static str>,
    /// boundary coordinate of the output chart, for the pole-shape check
    pub boundary: &'static str,
    /// largest pole order any row may show along `boundary` after this
    /// step; the order-2 entries are the recorded transients that the
    /// later steps of the same branch remove
    pub max_order: u32,
}

/// A branch of the resolution: a boundary chart, a step list and the
/// atlas chart the composition must land in.
#[derive(Debug, Clone)]
pub struct Branch {
    pub name: &'static str,
    pub start_chart: &'static str,
    pub start_golden: Option<&'static str>,
    pub start_boundary: &'static str,
    pub steps: &'static [ResolutionStep],
    pub terminal: &'static str,
}

use StepKind::*;

pub fn branches() -> Vec<Branch> {
    vec![
        Branch {
            name: "p3",
            start_chart: "pqr",
            start_golden: Some("p3_local"),
            start_boundary: "p",
            steps: &[ResolutionStep {
                id: "p3-point",
                kind: BlowUpPoint,
                map: "p3_point",
                center: &["p", "q", "r"],
                golden: None,
                boundary: "x3",
                max_order: 1,
            }],
            terminal: "u3",
        },
        Branch {
            name: "p1",
            start_chart: "uvw",
            start_golden: Some("p1_local"),
            start_boundary: "w",
            steps: &[
                ResolutionStep {
                    id: "c1-blowup",
                    kind: BlowUpCurve,
                    map: "c1_blowup",
                    center: &["v", "w"],
                    golden: Some("c1_out"),
                    boundary: "w1",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "f-blowdown",
                    kind: BlowDownSurface,
                    map: "f_blowdown",
                    center: &["w1"],
                    golden: Some("flop_out"),
                    boundary: "w2",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "c4-blowup",
                    kind: BlowUpCurve,
                    map: "c4_blowup",
                    center: &["v2", "w2"],
                    golden: None,
                    boundary: "w3",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "c5-blowup",
                    kind: BlowUpCurve,
                    map: "c5_blowup",
                    center: &["v3 + a2", "w3"],
                    golden: None,
                    boundary: "z1",
                    max_order: 1,
                },
            ],
            terminal: "u1",
        },
        Branch {
            name: "p2",
            start_chart: "p2loc",
            start_golden: Some("p2_local"),
            start_boundary: "w",
            steps: &[
                ResolutionStep {
                    id: "p2-point",
                    kind: BlowUpPoint,
                    map: "p2_point",
                    center: &["ut", "v", "w"],
                    golden: None,
                    boundary: "W1",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "c4-blowup-tail",
                    kind: BlowUpCurve,
                    map: "c4v_blowup",
                    center: &["V1", "W1"],
                    golden: None,
                    boundary: "W2",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "c5-blowup-tail",
                    kind: BlowUpCurve,
                    map: "c5v_blowup",
                    center: &["V3 + a2", "W2"],
                    golden: None,
                    boundary: "z2",
                    max_order: 1,
                },
            ],
            terminal: "u2",
        },
        Branch {
            name: "p6",
            start_chart: "lmn",
            start_golden: None,
            start_boundary: "m",
            steps: &[
                ResolutionStep {
                    id: "p6-point",
                    kind: BlowUpPoint,
                    map: "p6_point",
                    center: &["l", "m", "n"],
                    golden: None,
                    boundary: "Mb1",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "n-curve-blowup",
                    kind: BlowUpCurve,
                    map: "c4b_blowup",
                    center: &["Nb1", "Mb1"],
                    golden: None,
                    boundary: "Mb2",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "n-shift-blowup",
                    kind: BlowUpCurve,
                    map: "c5b_blowup",
                    center: &["Nb2 - a3", "Mb2"],
                    golden: None,
                    boundary: "y6",
                    max_order: 1,
                },
            ],
            terminal: "u6",
        },
        Branch {
            name: "p5",
            start_chart: "lmn",
            start_golden: None,
            start_boundary: "m",
            steps: &[
                ResolutionStep {
                    id: "n-curve-blowup",
                    kind: BlowUpCurve,
                    map: "c1b_blowup",
                    center: &["n", "m"],
                    golden: None,
                    boundary: "ma1",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "flop-blowdown",
                    kind: BlowDownSurface,
                    map: "fb_blowdown",
                    center: &["ma1"],
                    golden: None,
                    boundary: "ma2",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "n2-curve-blowup",
                    kind: BlowUpCurve,
                    map: "c4a_blowup",
                    center: &["na2", "ma2"],
                    golden: None,
                    boundary: "ma3",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "n-shift-blowup",
                    kind: BlowUpCurve,
                    map: "c5a_blowup",
                    center: &["na3 - a3", "ma3"],
                    golden: None,
                    boundary: "y5",
                    max_order: 1,
                },
            ],
            terminal: "u5",
        },
        Branch {
            name: "p4",
            start_chart: "p4loc",
            start_golden: Some("p4_local"),
            start_boundary: "N1",
            steps: &[
                ResolutionStep {
                    id: "c6-blowup",
                    kind: BlowUpCurve,
                    map: "c6_blowup_L",
                    center: &["L1", "N1"],
                    golden: None,
                    boundary: "N2",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "c7-blowup",
                    kind: BlowUpCurve,
                    map: "c7_blowup_L",
                    center: &["L2", "N2"],
                    golden: None,
                    boundary: "N3",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "c8-blowup",
                    kind: BlowUpCurve,
                    map: "c8_blowup_L",
                    center: &["L3 - a1", "N3"],
                    golden: None,
                    boundary: "N4",
                    max_order: 2,
                },
                ResolutionStep {
                    id: "c9-blowup",
                    kind: BlowUpCurve,
                    map: "c9_blowup_L",
                    center: &["M4", "N4"],
                    golden: None,
                    boundary: "N5",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "c10-blowup",
                    kind: BlowUpCurve,
                    map: "c10_blowup_L",
                    center: &["M5 - t", "N5"],
                    golden: None,
                    boundary: "N6",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "c11-blowup",
                    kind: BlowUpCurve,
                    map: "c11_blowup_L",
                    center: &["M6 + 1 - a2 - a3", "N6"],
                    golden: None,
                    boundary: "z4",
                    max_order: 1,
                },
            ],
            terminal: "u4",
        },
        Branch {
            name: "p7",
            start_chart: "p7loc",
            start_golden: Some("p7_local"),
            start_boundary: "n1",
            steps: &[
                ResolutionStep {
                    id: "c6-blowup-s1-blowdown",
                    kind: BlowDownSurface,
                    map: "c6_blowdown_l",
                    center: &["n1"],
                    golden: Some("c6_out"),
                    boundary: "n2",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "c7-blowup-s2-blowdown",
                    kind: BlowDownSurface,
                    map: "c7_blowdown_l",
                    center: &["n2"],
                    golden: Some("c7_out"),
                    boundary: "n3",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "c8-blowup-s3-blowdown",
                    kind: BlowDownSurface,
                    map: "c8_blowdown_l",
                    center: &["n3"],
                    golden: None,
                    boundary: "n4",
                    max_order: 2,
                },
                ResolutionStep {
                    id: "c9-blowup",
                    kind: BlowUpCurve,
                    map: "c9_blowup_l",
                    center: &["m4", "n4"],
                    golden: None,
                    boundary: "n5",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "c10-blowup",
                    kind: BlowUpCurve,
                    map: "c10_blowup_l",
                    center: &["m5 - t", "n5"],
                    golden: None,
                    boundary: "n6",
                    max_order: 1,
                },
                ResolutionStep {
                    id: "c11-blowup",
                    kind: BlowUpCurve,
                    map: "c11_blowup_l",
                    center: &["m6 + 1 - a2 - a3", "n6"],
                    golden: None,
                    boundary: "z7",
                    max_order: 1,
                },
            ],
            terminal: "u7",
        },
    ]
}

/// Apply one step to a field: pushforward by the recorded substitution,
/// asserting the golden output when one is recorded.
pub fn apply_resolution_step(
    fx: &Fixtures,
    field: &VectorField,
    step: &ResolutionStep,
) -> Result<(VectorField, Vec<Check>), AtlasError> {
    let map = fx.map(step.map)?;
    // parse the center equations against the source context (bookkeeping
    // plus a guard that the recorded equations are well-formed)
    for c in step.center {
        parse_expression(c, map.source())?;
    }
    let out = pushforward(field, map)?;
    let mut checks = Vec::new();
    if let Some(golden) = step.golden {
        let expect = fx.system(golden)?;
        checks.push(compare_fields(&format!("golden:{}", golden), &out, expect));
    } else {
        checks.push(pole_shape_check(&out, step.boundary, step.id, step.max_order)?);
    }
    Ok((out, checks))
}

/// The output of a step must keep the simple-pole shape along the current
/// boundary coordinate: that row polynomial, the others at worst a first
/// order pole.
fn pole_shape_check(
    field: &VectorField,
    boundary: &str,
    label: &str,
    max_order: u32,
) -> Result<Check, AtlasError> {
    let b = field.context().require(boundary)?;
    let orders = field.pole_order(b);
    let pos = field
        .coords()
        .iter()
        .position(|&c| c == b)
        .ok_or_else(|| SymError::UnknownIndeterminate(boundary.to_string()))?;
    let ok = orders[pos] == 0 && orders.iter().all(|&o| o <= max_order);
    let detail = format!("pole orders along {}: {:?}", boundary, orders);
    Ok(if ok {
        Check::pass(format!("{}:pole-shape", label), detail)
    } else {
        Check::fail(format!("{}:pole-shape", label), detail)
    })
}

fn compare_fields(name: &str, got: &VectorField, expect: &VectorField) -> Check {
    if got.context() != expect.context() {
        return Check::fail(name, "context mismatch".to_string());
    }
    let mut diffs = Vec::new();
    for (i, (g, e)) in got.rhs().iter().zip(expect.rhs()).enumerate() {
        if g != e {
            diffs.push(format!(
                "d{}/dt: got {}, expected {}",
                expect.context().name(expect.coords()[i]),
                g,
                e
            ));
        }
    }
    if diffs.is_empty() {
        Check::pass(name, "matches printed system exactly".to_string())
    } else {
        Check::fail(name, diffs.join(" | "))
    }
}

/// Replay one branch: golden checks along the way, then terminal-chart
/// equality (map and field) against the atlas.
pub fn replay_branch(
    fx: &Fixtures,
    atlas: &Atlas,
    branch: &Branch,
) -> Result<Vec<Check>, AtlasError> {
    let mut checks = Vec::new();
    let start_map = fx.map(branch.start_chart)?.clone();
    let mut field = pushforward(atlas.base_field(), &start_map)?;
    let mut composed = start_map;
    if let Some(golden) = branch.start_golden {
        let expect = fx.system(golden)?;
        checks.push(compare_fields(
            &format!("{}:golden:{}", branch.name, golden),
            &field,
            expect,
        ));
    } else {
        checks.push(pole_shape_check(&field, branch.start_boundary, branch.name, 1)?);
    }
    for step in branch.steps {
        let (next, step_checks) = apply_resolution_step(fx, &field, step)?;
        for c in step_checks {
            checks.push(Check { name: format!("{}:{}", branch.name, c.name), ..c });
        }
        field = next;
        composed = composed.then(fx.map(step.map)?)?;
    }
    // terminal chart: the composed substitution equals the atlas chart map
    let chart = atlas
        .chart(branch.terminal)
        .ok_or_else(|| FixtureError::Missing(branch.terminal.into()))?;
    let map_ok = composed.forward() == chart.from_u0().forward()
        && composed.inverse() == chart.from_u0().inverse();
    checks.push(if map_ok {
        Check::pass(
            format!("{}:terminal-map:{}", branch.name, branch.terminal),
            "composed substitutions equal the chart transformation".to_string(),
        )
    } else {
        Check::fail(
            format!("{}:terminal-map:{}", branch.name, branch.terminal),
            format!(
                "composed forward {:?} vs chart {:?}",
                composed.forward().iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                chart
                    .from_u0()
                    .forward()
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
            ),
        )
    });
    checks.push(compare_fields(
        &format!("{}:terminal-field:{}", branch.name, branch.terminal),
        &field,
        chart.field(),
    ));
    Ok(checks)
}

/// Replay all branches and aggregate a report.
pub fn replay_resolution(fx: &Fixtures, atlas: &Atlas) -> Result<Report, AtlasError> {
    let mut rep = Report::new("verify resolution");
    for branch in branches() {
        for c in replay_branch(fx, atlas, &branch)? {
            rep.push(c);
        }
    }
    Ok(rep.finish())
}

/// Chart-by-chart holomorphy report.
pub fn verify_atlas(fx: &Fixtures) -> Result<Report, AtlasError> {
    let mut rep = Report::new("verify atlas");
    let atlas = Atlas::builtin(fx)?;
    for chart in &atlas.charts()[1..] {
        let started = std::time::Instant::now();
        let h = chart.certify_holomorphic();
        let ms = started.elapsed().as_millis() as u64;
        let data = serde_json::json!({
            "chart": h.chart,
            "polynomial": h.polynomial,
            "ms_elapsed": ms,
        });
        rep.push(
            if h.polynomial {
                Check::pass(
                    format!("holomorphic:{}", chart.name()),
                    "all three right-hand sides polynomial".to_string(),
                )
            } else {
                Check::fail(format!("holomorphic:{}", chart.name()), h.offending.join("; "))
            }
            .with_data(data),
        );
    }
    Ok(rep.finish())
}
