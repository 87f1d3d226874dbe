//! Adaptive numerical integration on the eight-chart phase space:
//! Dormand-Prince 5(4) stepping, exact-map chart switching, movable-pole
//! detection and residue estimation.
//!
//! The symbolic layer stays exact; this module compiles every rational
//! expression once into a small stack program evaluated in f64. A pole of
//! the solution is an ordinary interior point of some other chart, so the
//! integrator follows the trajectory across it by switching to the chart
//! with the smallest sup-norm whenever the current coordinates leave the
//! switch radius.

use std::sync::Arc;

use num_traits::ToPrimitive;

use crate::atlas::{Atlas, AtlasError};
use crate::symcore::{Context, IndetKind, Polynomial, RationalExpr};
use crate::vfield::FieldError;

#[derive(Debug, thiserror::Error)]
pub enum MeroError {
    #[error(transparent)]
    Atlas(#[from] AtlasError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("right-hand side evaluated to a non-finite value at t = {0}")]
    NonFiniteRhs(f64),
    #[error("step size underflow at t = {0} (h = {1:e})")]
    StepUnderflow(f64, f64),
    #[error("no chart achieves sup-norm below the switch radius at t = {0} (best {1:e})")]
    AtlasIncomplete(f64, f64),
    #[error("trajectory reached the map's pole locus: |{0}| = {1:e} at t = {2}")]
    PoleLocus(String, f64, f64),
    #[error("maximum step count exceeded")]
    TooManySteps,
    #[error("pole residue sides disagree: left {0:e}, right {1:e}")]
    ResidueMismatch(f64, f64),
    #[error("no dense segment covers t = {0} in chart {1}")]
    NoSegment(f64, usize),
}

// ---------------------------------------------------------------------------
// compiled evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Instr {
    Const(f64),
    Var(u8),
    Mul,
    Add,
    Div,
    Pow(u32),
}

/// A rational expression compiled to a post-order evaluation schedule.
/// Variable slots follow the expression's context order.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    instrs: Vec<Instr>,
}

impl CompiledExpr {
    pub fn compile(e: &RationalExpr) -> CompiledExpr {
        let mut instrs = Vec::new();
        compile_poly(e.numerator(), &mut instrs);
        if !e.is_polynomial() {
            compile_poly(e.denominator(), &mut instrs);
            instrs.push(Instr::Div);
        }
        CompiledExpr { instrs }
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        let mut stack = [0.0f64; 8];
        let mut top = 0usize;
        for ins in &self.instrs {
            match ins {
                Instr::Const(c) => {
                    stack[top] = *c;
                    top += 1;
                }
                Instr::Var(i) => {
                    stack[top] = vars[*i as usize];
                    top += 1;
                }
                Instr::Mul => {
                    top -= 1;
                    stack[top - 1] *= stack[top];
                }
                Instr::Add => {
                    top -= 1;
                    stack[top - 1] += stack[top];
                }
                Instr::Div => {
                    top -= 1;
                    stack[top - 1] /= stack[top];
                }
                Instr::Pow(n) => {
                    stack[top - 1] = stack[top - 1].powi(*n as i32);
                }
            }
        }
        stack[0]
    }
}

fn compile_poly(p: &Polynomial, out: &mut Vec<Instr>) {
    if p.is_zero() {
        out.push(Instr::Const(0.0));
        return;
    }
    let mut first = true;
    for (m, c) in p.terms() {
        let coeff = c
            .to_f64()
            .unwrap_or_else(|| c.numer().to_f64().unwrap_or(f64::NAN) / c.denom().to_f64().unwrap_or(f64::NAN));
        out.push(Instr::Const(coeff));
        for (i, &e) in m.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            out.push(Instr::Var(i as u8));
            if e > 1 {
                out.push(Instr::Pow(e));
            }
            out.push(Instr::Mul);
        }
        if !first {
            out.push(Instr::Add);
        }
        first = false;
    }
}

/// One chart compiled for numeric work. The variable layout everywhere is
/// [c1, c2, c3, t, a1, a2, a3].
struct CompiledChart {
    field: [CompiledExpr; 3],
    /// chart coords -> U0 coords (x, y, z)
    to_u0: [CompiledExpr; 3],
    /// U0 coords -> chart coords
    from_u0: [CompiledExpr; 3],
    /// coordinate slots whose vanishing sends some U0 coordinate to
    /// infinity, with the indices (0 = x, 1 = y, 2 = z) that diverge
    pole_divisors: Vec<(usize, Vec<usize>)>,
}

/// The atlas compiled to f64 evaluators.
pub struct CompiledAtlas {
    charts: Vec<CompiledChart>,
    names: Vec<String>,
}

fn reorder_for_layout(ctx: &Arc<Context>) -> Vec<usize> {
    // maps layout slot -> context index
    let mut order: Vec<usize> = ctx.indices_of_kind(IndetKind::State);
    order.push(ctx.index_of("t").expect("time variable"));
    order.extend(ctx.indices_of_kind(IndetKind::Parameter));
    order
}

/// Compile an expression with the standard [states.., t, params..] layout.
fn compile_with_layout(e: &RationalExpr) -> CompiledExpr {
    let ctx = e.context();
    let order = reorder_for_layout(ctx);
    // remap variable slots: context index -> layout slot
    let mut slot_of = vec![u8::MAX; ctx.arity()];
    for (slot, &ci) in order.iter().enumerate() {
        slot_of[ci] = slot as u8;
    }
    let mut c = CompiledExpr::compile(e);
    for ins in &mut c.instrs {
        if let Instr::Var(i) = ins {
            *i = slot_of[*i as usize];
        }
    }
    c
}

impl CompiledAtlas {
    pub fn new(atlas: &Atlas) -> Result<CompiledAtlas, MeroError> {
        let mut charts = Vec::new();
        let mut names = Vec::new();
        for chart in atlas.charts() {
            let f = chart.field();
            let field: [CompiledExpr; 3] = [
                compile_with_layout(&f.rhs()[0]),
                compile_with_layout(&f.rhs()[1]),
                compile_with_layout(&f.rhs()[2]),
            ];
            let to_u0_exprs = chart.from_u0().inverse();
            let from_u0_exprs = chart.from_u0().forward();
            let to_u0: [CompiledExpr; 3] = [
                compile_with_layout(&to_u0_exprs[0]),
                compile_with_layout(&to_u0_exprs[1]),
                compile_with_layout(&to_u0_exprs[2]),
            ];
            let from_u0: [CompiledExpr; 3] = [
                compile_with_layout(&from_u0_exprs[0]),
                compile_with_layout(&from_u0_exprs[1]),
                compile_with_layout(&from_u0_exprs[2]),
            ];
            // a chart coordinate is a pole divisor when it divides the
            // denominator of some U0 component of the chart-to-U0 map
            let states = chart.context().indices_of_kind(IndetKind::State);
            let mut pole_divisors = Vec::new();
            for (slot, &ci) in states.iter().enumerate() {
                let mut diverging = Vec::new();
                for (u0c, e) in to_u0_exprs.iter().enumerate() {
                    if e.denominator().valuation_in(ci) > 0 {
                        diverging.push(u0c);
                    }
                }
                if !diverging.is_empty() {
                    pole_divisors.push((slot, diverging));
                }
            }
            charts.push(CompiledChart { field, to_u0, from_u0, pole_divisors });
            names.push(chart.name().to_string());
        }
        Ok(CompiledAtlas { charts, names })
    }

    pub fn chart_names(&self) -> &[String] {
        &self.names
    }

    pub fn chart_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn pack(coords: [f64; 3], t: f64, params: [f64; 3]) -> [f64; 7] {
        [coords[0], coords[1], coords[2], t, params[0], params[1], params[2]]
    }

    pub fn eval_field(&self, chart: usize, coords: [f64; 3], t: f64, params: [f64; 3]) -> [f64; 3] {
        let v = Self::pack(coords, t, params);
        let c = &self.charts[chart];
        [c.field[0].eval(&v), c.field[1].eval(&v), c.field[2].eval(&v)]
    }

    pub fn to_u0(&self, chart: usize, coords: [f64; 3], t: f64, params: [f64; 3]) -> [f64; 3] {
        let v = Self::pack(coords, t, params);
        let c = &self.charts[chart];
        [c.to_u0[0].eval(&v), c.to_u0[1].eval(&v), c.to_u0[2].eval(&v)]
    }

    pub fn from_u0(&self, chart: usize, u0: [f64; 3], t: f64, params: [f64; 3]) -> [f64; 3] {
        let v = Self::pack(u0, t, params);
        let c = &self.charts[chart];
        [c.from_u0[0].eval(&v), c.from_u0[1].eval(&v), c.from_u0[2].eval(&v)]
    }

    /// Transition between charts through U0 (both legs are the exact
    /// rational maps, evaluated in f64).
    pub fn transition(
        &self,
        from: usize,
        to: usize,
        coords: [f64; 3],
        t: f64,
        params: [f64; 3],
    ) -> [f64; 3] {
        let u0 = self.to_u0(from, coords, t, params);
        self.from_u0(to, u0, t, params)
    }
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)
// ---------------------------------------------------------------------------

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// fourth-order weights of the embedded pair
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
/// dense-output weights for the fifth-order continuous extension
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One embedded step from (t, y) with stride h. `k1` is the derivative at
/// (t, y) (FSAL: reuse the previous step's last stage). Returns the
/// fifth-order solution, the embedded error estimate, and the stages.
#[allow(clippy::type_complexity)]
pub fn step_embedded<F: Fn(f64, [f64; 3]) -> [f64; 3]>(
    f: &F,
    t: f64,
    y: [f64; 3],
    h: f64,
    k1: [f64; 3],
) -> ([f64; 3], [f64; 3], [[f64; 3]; 7]) {
    let mut k = [[0.0; 3]; 7];
    k[0] = k1;
    for s in 1..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..3 {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(t + C[s] * h, ys);
    }
    // stage 7 is evaluated at the fifth-order result (A row 7 = b5)
    let mut y5 = y;
    for (j, kj) in k.iter().enumerate().take(6) {
        let a = A[6][j];
        if a != 0.0 {
            for i in 0..3 {
                y5[i] += h * a * kj[i];
            }
        }
    }
    let mut y4 = y;
    for (j, kj) in k.iter().enumerate() {
        let b = B4[j];
        if b != 0.0 {
            for i in 0..3 {
                y4[i] += h * b * kj[i];
            }
        }
    }
    let err = [y5[0] - y4[0], y5[1] - y4[1], y5[2] - y4[2]];
    (y5, err, k)
}

/// Dense-output coefficients of an accepted step, evaluable anywhere on
/// the step interval.
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    pub chart: usize,
    rcont: [[f64; 3]; 5],
}

impl DenseSegment {
    fn build(t0: f64, h: f64, chart: usize, y0: [f64; 3], y1: [f64; 3], k: &[[f64; 3]; 7]) -> Self {
        let mut rcont = [[0.0; 3]; 5];
        for i in 0..3 {
            let dy = y1[i] - y0[i];
            let bspl = h * k[0][i] - dy;
            rcont[0][i] = y0[i];
            rcont[1][i] = dy;
            rcont[2][i] = bspl;
            rcont[3][i] = dy - h * k[6][i] - bspl;
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                acc += D[j] * kj[i];
            }
            rcont[4][i] = h * acc;
        }
        DenseSegment { t0, h, chart, rcont }
    }

    pub fn contains(&self, t: f64) -> bool {
        let (a, b) = if self.h >= 0.0 { (self.t0, self.t0 + self.h) } else { (self.t0 + self.h, self.t0) };
        let slop = 1e-12 * (1.0 + b.abs().max(a.abs()));
        t >= a - slop && t <= b + slop
    }

    pub fn eval(&self, t: f64) -> [f64; 3] {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + th1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + th1 * self.rcont[4][i])));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// the meromorphic integrator
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// sup-norm threshold that triggers a chart search
    pub switch_radius: f64,
    /// a switch requires the target norm below hysteresis * switch_radius
    pub hysteresis: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    pub dense_output: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            switch_radius: 10.0,
            hysteresis: 0.5,
            max_step: f64::INFINITY,
            min_step: 1e-13,
            max_steps: 1_000_000,
            dense_output: true,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(tol: f64) -> Self {
        IntegratorConfig { rel_tol: tol, abs_tol: tol * 1e-2, ..Default::default() }
    }
}

/// One accepted sample: time, active chart, chart coordinates.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Sample {
    pub t: f64,
    pub chart: usize,
    pub coords: [f64; 3],
}

/// A detected pole crossing.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PoleEvent {
    pub t_star: f64,
    pub chart: usize,
    /// chart coordinate slot whose zero crossing marks the pole
    pub divisor_slot: usize,
    /// U0 coordinate names that diverge (subset of x, y, z)
    pub diverging: Vec<String>,
    /// estimated residues per diverging coordinate, filled by
    /// `estimate_pole`
    pub residues: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: [f64; 3],
    pub samples: Vec<Sample>,
    pub pole_events: Vec<PoleEvent>,
    pub segments: Vec<DenseSegment>,
    /// largest relative transition round-trip error observed at switches
    pub switch_roundtrip_error: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &Sample {
        self.samples.last().expect("at least the initial sample")
    }

    /// U0 image of a sample (may be infinite at pole samples).
    pub fn u0_image(&self, atlas: &CompiledAtlas, s: &Sample) -> [f64; 3] {
        atlas.to_u0(s.chart, s.coords, s.t, self.params)
    }
}

const U0_NAMES: [&str; 3] = ["x", "y", "z"];

/// Integrate from a U0 initial condition across poles by chart switching.
pub fn integrate_meromorphic(
    atlas: &CompiledAtlas,
    ic: [f64; 3],
    t_span: (f64, f64),
    params: [f64; 3],
    cfg: &IntegratorConfig,
) -> Result<Trajectory, MeroError> {
    let (t0, t1) = t_span;
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut chart = 0usize; // start in U0
    let mut y = ic;
    let mut t = t0;
    let mut traj = Trajectory {
        params,
        samples: vec![Sample { t, chart, coords: y }],
        pole_events: Vec::new(),
        segments: Vec::new(),
        switch_roundtrip_error: 0.0,
    };

    let mut h = dir * (span / 100.0).min(cfg.max_step).max(cfg.min_step * 10.0);
    let mut k1 = atlas.eval_field(chart, y, t, params);
    if !k1.iter().all(|v| v.is_finite()) {
        return Err(MeroError::NonFiniteRhs(t));
    }

    let mut steps = 0usize;
    while (t1 - t) * dir > 1e-14 * span.max(1.0) {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(MeroError::TooManySteps);
        }
        // do not overshoot the endpoint
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let field = |tt: f64, yy: [f64; 3]| atlas.eval_field(chart, yy, tt, params);
        let (y_new, err, k) = step_embedded(&field, t, y, h, k1);
        if !y_new.iter().all(|v| v.is_finite()) {
            // halve and retry; treat as a rejected step
            h *= 0.5;
            if h.abs() < cfg.min_step {
                return Err(MeroError::StepUnderflow(t, h));
            }
            continue;
        }
        let mut err_norm = 0.0f64;
        for i in 0..3 {
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            err_norm = err_norm.max((err[i] / sc).abs());
        }
        if err_norm <= 1.0 {
            // accept
            let seg = DenseSegment::build(t, h, chart, y, y_new, &k);
            // pole crossings: sign change of a divisor coordinate
            for (slot, diverging) in &atlas.charts[chart].pole_divisors {
                let (a, b) = (y[*slot], y_new[*slot]);
                let crossed = (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0);
                if crossed {
                    let t_star = bisect_zero(&seg, *slot, t, t + h);
                    traj.pole_events.push(PoleEvent {
                        t_star,
                        chart,
                        divisor_slot: *slot,
                        diverging: diverging.iter().map(|&i| U0_NAMES[i].to_string()).collect(),
                        residues: Vec::new(),
                    });
                }
            }
            traj.segments.push(seg);
            t += h;
            y = y_new;
            k1 = k[6]; // FSAL
            traj.samples.push(Sample { t, chart, coords: y });

            // chart switching
            let norm = sup3(y);
            if norm > cfg.switch_radius {
                let u0 = atlas.to_u0(chart, y, t, params);
                if u0.iter().all(|v| v.is_finite()) {
                    let mut best = chart;
                    let mut best_norm = norm;
                    for j in 0..atlas.charts.len() {
                        if j == chart {
                            continue;
                        }
                        let cj = atlas.from_u0(j, u0, t, params);
                        if !cj.iter().all(|v| v.is_finite()) {
                            continue;
                        }
                        let nj = sup3(cj);
                        if nj < best_norm {
                            best = j;
                            best_norm = nj;
                        }
                    }
                    if best_norm >= cfg.switch_radius {
                        return Err(MeroError::AtlasIncomplete(t, best_norm));
                    }
                    if best != chart && best_norm < cfg.hysteresis * cfg.switch_radius {
                        let new_coords = atlas.from_u0(best, u0, t, params);
                        // round-trip audit of the switch
                        let back = atlas.transition(best, chart, new_coords, t, params);
                        let mut rel = 0.0f64;
                        for i in 0..3 {
                            let scale = y[i].abs().max(1.0);
                            rel = rel.max((back[i] - y[i]).abs() / scale);
                        }
                        traj.switch_roundtrip_error = traj.switch_roundtrip_error.max(rel);
                        chart = best;
                        y = new_coords;
                        k1 = atlas.eval_field(chart, y, t, params);
                        // keep one sample per time: the switch replaces
                        // the representation at t
                        traj.samples.pop();
                        traj.samples.push(Sample { t, chart, coords: y });
                    }
                }
            }
        }
        // step-size controller
        let fac = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= fac;
        if h.abs() > cfg.max_step {
            h = dir * cfg.max_step;
        }
        if h.abs() < cfg.min_step {
            return Err(MeroError::StepUnderflow(t, h));
        }
    }

    if !cfg.dense_output {
        traj.segments.clear();
    }
    Ok(traj)
}

fn sup3(v: [f64; 3]) -> f64 {
    v[0].abs().max(v[1].abs()).max(v[2].abs())
}

fn bisect_zero(seg: &DenseSegment, slot: usize, mut a: f64, mut b: f64) -> f64 {
    let fa = seg.eval(a)[slot];
    if fa == 0.0 {
        return a;
    }
    let mut sa = fa < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = seg.eval(m)[slot];
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == sa {
            a = m;
            sa = fm < 0.0;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Evaluate the trajectory's dense output at `t` in a specific chart.
fn eval_dense(traj: &Trajectory, t: f64, chart: usize) -> Option<[f64; 3]> {
    traj.segments
        .iter()
        .find(|s| s.chart == chart && s.contains(t))
        .map(|s| s.eval(t))
}

/// Estimated residues of one pole event: fit c/(t - t*) to each diverging
/// U0 coordinate on both sides of the crossing, by Richardson
/// extrapolation of (t - t*) X(t) from three offsets. Fills the event's
/// residue list and returns it.
pub fn estimate_pole(
    atlas: &CompiledAtlas,
    traj: &Trajectory,
    event: &PoleEvent,
    agreement: f64,
) -> Result<Vec<(String, f64)>, MeroError> {
    let t_star = event.t_star;
    // the largest offset that stays within dense coverage of this chart
    let mut delta = 0.0f64;
    for cand in [2e-2, 1e-2, 5e-3, 2e-3, 1e-3, 5e-4] {
        if eval_dense(traj, t_star + cand, event.chart).is_some()
            && eval_dense(traj, t_star - cand, event.chart).is_some()
        {
            delta = cand;
            break;
        }
    }
    if delta == 0.0 {
        return Err(MeroError::NoSegment(t_star, event.chart));
    }
    let mut out = Vec::new();
    for name in &event.diverging {
        let u0_idx = U0_NAMES.iter().position(|n| n == name).expect("x, y or z");
        let side = |sign: f64| -> Result<f64, MeroError> {
            let mut rs = [0.0f64; 3];
            for (k, div) in [1.0, 2.0, 4.0].iter().enumerate() {
                let d = sign * delta / div;
                let coords = eval_dense(traj, t_star + d, event.chart)
                    .ok_or(MeroError::NoSegment(t_star + d, event.chart))?;
                let u0 = atlas.to_u0(event.chart, coords, t_star + d, traj.params);
                rs[k] = d * u0[u0_idx];
            }
            // quadratic extrapolation to offset zero
            Ok(rs[0] / 3.0 - 2.0 * rs[1] + (8.0 / 3.0) * rs[2])
        };
        let right = side(1.0)?;
        let left = side(-1.0)?;
        let scale = left.abs().max(right.abs()).max(1e-300);
        if (left - right).abs() / scale > agreement {
            return Err(MeroError::ResidueMismatch(left, right));
        }
        out.push((name.clone(), 0.5 * (left + right)));
    }
    Ok(out)
}

/// Maximum deviation between integrate-then-map and map-then-integrate
/// for a Backlund transformation, evaluated at the endpoint in U0
/// coordinates. The map data is passed numerically: state map and
/// parameter map as closures.
#[allow(clippy::type_complexity)]
pub struct NumericBacklund {
    pub name: &'static str,
    pub state: fn([f64; 3], [f64; 3]) -> [f64; 3],
    pub params: fn([f64; 3]) -> [f64; 3],
    /// U0 coordinate whose vanishing is the map's pole locus
    pub pole_coord: usize,
}

pub fn backlund_s1() -> NumericBacklund {
    NumericBacklund {
        name: "s1",
        state: |s, a| [s[0], s[1] - a[2] / s[2], s[2]],
        params: |a| [a[0], a[1] + a[2], -a[2]],
        pole_coord: 2,
    }
}

pub fn backlund_s2() -> NumericBacklund {
    NumericBacklund {
        name: "s2",
        state: |s, a| [s[0] - a[1] / s[1], s[1], s[2] + a[1] / s[1]],
        params: |a| [a[0] + a[1], -a[1], a[2] + a[1]],
        pole_coord: 1,
    }
}

pub fn backlund_commutation_test(
    atlas: &CompiledAtlas,
    ic: [f64; 3],
    params: [f64; 3],
    map: &NumericBacklund,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<f64, MeroError> {
    // path A: integrate, then map the endpoint
    let ta = integrate_meromorphic(atlas, ic, t_span, params, cfg)?;
    // the trajectory must stay away from the map's pole locus
    let mut min_abs = f64::INFINITY;
    for s in &ta.samples {
        let u0 = ta.u0_image(atlas, s);
        if u0.iter().all(|v| v.is_finite()) {
            min_abs = min_abs.min(u0[map.pole_coord].abs());
        }
    }
    if min_abs < 1e-3 {
        return Err(MeroError::PoleLocus(
            U0_NAMES[map.pole_coord].to_string(),
            min_abs,
            t_span.1,
        ));
    }
    let end_a = ta.u0_image(atlas, ta.final_state());
    let mapped_a = (map.state)(end_a, params);

    // path B: map the initial condition, integrate with shifted parameters
    let ic_b = (map.state)(ic, params);
    let params_b = (map.params)(params);
    let tb = integrate_meromorphic(atlas, ic_b, t_span, params_b, cfg)?;
    let end_b = tb.u0_image(atlas, tb.final_state());

    let mut dev = 0.0f64;
    for i in 0..3 {
        dev = dev.max((mapped_a[i] - end_b[i]).abs());
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::Fixtures;

    fn compiled() -> CompiledAtlas {
        let fx = Fixtures::load_default().unwrap();
        let atlas = Atlas::builtin(&fx).unwrap();
        CompiledAtlas::new(&atlas).unwrap()
    }

    #[test]
    fn compiled_field_matches_symbolic_eval() {
        let fx = Fixtures::load_default().unwrap();
        let atlas = Atlas::builtin(&fx).unwrap();
        let ca = CompiledAtlas::new(&atlas).unwrap();
        let coords = [0.3, -0.7, 1.9];
        let t = 0.45;
        let params = [0.5, -0.25, 0.125];
        for (j, chart) in atlas.charts().iter().enumerate() {
            let fast = ca.eval_field(j, coords, t, params);
            let ctx = chart.context();
            let order = reorder_for_layout(ctx);
            let mut vals = vec![0.0; ctx.arity()];
            let layout = [coords[0], coords[1], coords[2], t, params[0], params[1], params[2]];
            for (slot, &ci) in order.iter().enumerate() {
                vals[ci] = layout[slot];
            }
            for (i, rhs) in chart.field().rhs().iter().enumerate() {
                let slow = rhs.eval_f64(&vals);
                assert!(
                    (fast[i] - slow).abs() <= 1e-9 * (1.0 + slow.abs()),
                    "chart {} row {}: {} vs {}",
                    chart.name(),
                    i,
                    fast[i],
                    slow
                );
            }
        }
    }

    #[test]
    fn zero_field_step_is_exact() {
        let f = |_t: f64, _y: [f64; 3]| [0.0, 0.0, 0.0];
        let y = [1.0, 2.0, 3.0];
        let (y1, err, _) = step_embedded(&f, 0.0, y, 0.5, f(0.0, y));
        assert_eq!(y1, y);
        assert_eq!(err, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn exponential_growth_accuracy() {
        // dx/dt = x over one unit with tolerance 1e-10 lands on e
        let f = |_t: f64, y: [f64; 3]| [y[0], 0.0, 0.0];
        let mut t = 0.0;
        let mut y = [1.0, 0.0, 0.0];
        let mut h = 0.01;
        let mut k1 = f(t, y);
        while t < 1.0 {
            if t + h > 1.0 {
                h = 1.0 - t;
            }
            let (y1, err, k) = step_embedded(&f, t, y, h, k1);
            let sc = 1e-12 + 1e-10 * y[0].abs().max(y1[0].abs());
            let en = (err[0] / sc).abs();
            if en <= 1.0 {
                t += h;
                y = y1;
                k1 = k[6];
            }
            h *= (0.9 * en.powf(-0.2)).clamp(0.2, 5.0);
        }
        assert!((y[0] - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn dense_output_matches_nodes_and_interior() {
        let f = |t: f64, y: [f64; 3]| [y[0], -2.0 * y[1], t];
        let y0 = [1.0, 1.0, 0.0];
        let k1 = f(0.0, y0);
        let h = 0.05;
        let (y1, _, k) = step_embedded(&f, 0.0, y0, h, k1);
        let seg = DenseSegment::build(0.0, h, 0, y0, y1, &k);
        let at0 = seg.eval(0.0);
        let at1 = seg.eval(h);
        for i in 0..3 {
            assert!((at0[i] - y0[i]).abs() < 1e-14);
            assert!((at1[i] - y1[i]).abs() < 1e-12);
        }
        // interior: compare against the closed forms e^t, e^{-2t}, t^2/2
        // (the quadratic is reproduced exactly by the interpolant)
        let tm = 0.02;
        let got = seg.eval(tm);
        assert!((got[0] - tm.exp()).abs() < 1e-8, "{}", got[0] - tm.exp());
        assert!((got[1] - (-2.0 * tm).exp()).abs() < 1e-8, "{}", got[1]);
        assert!((got[2] - tm * tm / 2.0).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_at_zero_parameters() {
        let ca = compiled();
        let cfg = IntegratorConfig::with_tol(1e-10);
        let traj =
            integrate_meromorphic(&ca, [0.0, 0.0, 0.0], (0.0, 1.0), [0.0, 0.0, 0.0], &cfg)
                .unwrap();
        let end = traj.final_state();
        assert_eq!(end.chart, 0);
        assert!(sup3(end.coords) < 1e-12);
        assert!(traj.pole_events.is_empty());
    }

    #[test]
    fn pole_crossing_with_reference_inputs() {
        let ca = compiled();
        let cfg = IntegratorConfig::with_tol(1e-10);
        let traj = integrate_meromorphic(
            &ca,
            [1.0, 1.0, 1.0],
            (0.0, 3.0),
            [0.5, 1.0 / 3.0, 0.2],
            &cfg,
        )
        .unwrap();
        assert!(!traj.pole_events.is_empty(), "expected at least one pole event");
        assert!(traj.switch_roundtrip_error <= 1e-12);
        // self-convergence against a tighter tolerance
        let tight = IntegratorConfig::with_tol(1e-12);
        let traj2 = integrate_meromorphic(
            &ca,
            [1.0, 1.0, 1.0],
            (0.0, 3.0),
            [0.5, 1.0 / 3.0, 0.2],
            &tight,
        )
        .unwrap();
        let a = traj.u0_image(&ca, traj.final_state());
        let b = traj2.u0_image(&ca, traj2.final_state());
        for i in 0..3 {
            assert!(
                (a[i] - b[i]).abs() / (1.0 + b[i].abs()) < 1e-7,
                "component {}: {} vs {}",
                i,
                a[i],
                b[i]
            );
        }
    }

    #[test]
    fn synthetic_known_pole_extrapolation() {
        // the side fit applied to exact samples of 1/(t - 2) + 3 + (t - 2)
        // recovers t* = 2, residue 1 to machine accuracy
        let x = |t: f64| 1.0 / (t - 2.0) + 3.0 + (t - 2.0);
        let fit = |sign: f64, delta: f64| {
            let r = |d: f64| d * x(2.0 + d);
            let (r1, r2, r3) =
                (r(sign * delta), r(sign * delta / 2.0), r(sign * delta / 4.0));
            r1 / 3.0 - 2.0 * r2 + (8.0 / 3.0) * r3
        };
        for sign in [1.0, -1.0] {
            let got = fit(sign, 1e-2);
            assert!((got - 1.0).abs() < 1e-8, "residue fit {}", got);
        }
    }

    #[test]
    fn real_pole_residues_near_integers() {
        let ca = compiled();
        let cfg = IntegratorConfig::with_tol(1e-11);
        let traj = integrate_meromorphic(
            &ca,
            [1.0, 1.0, 1.0],
            (0.0, 3.0),
            [0.5, 1.0 / 3.0, 0.2],
            &cfg,
        )
        .unwrap();
        let ev = &traj.pole_events[0];
        let res = estimate_pole(&ca, &traj, ev, 1e-4).unwrap();
        assert!(!res.is_empty());
        for (name, val) in &res {
            // all simple-pole residues of this system are integers
            // (leading Laurent balance); check against the nearest
            let nearest = val.round();
            assert!(
                (val - nearest).abs() < 2e-4,
                "{} residue {} not near an integer",
                name,
                val
            );
        }
    }

    #[test]
    fn invariant_plane_stays_invariant() {
        let ca = compiled();
        let cfg = IntegratorConfig::with_tol(1e-10);
        let traj = integrate_meromorphic(
            &ca,
            [0.0, 1.0, 1.0],
            (0.0, 2.0),
            [0.0, 0.3, 0.4],
            &cfg,
        )
        .unwrap();
        for s in &traj.samples {
            let u0 = traj.u0_image(&ca, s);
            if u0.iter().all(|v| v.is_finite()) {
                assert!(u0[0].abs() < 1e-8, "x = {} at t = {}", u0[0], s.t);
            }
        }
    }

    #[test]
    fn reversibility_through_pole() {
        let ca = compiled();
        let cfg = IntegratorConfig::with_tol(1e-11);
        let ic = [1.0, 1.0, 1.0];
        let params = [0.5, 1.0 / 3.0, 0.2];
        let fwd = integrate_meromorphic(&ca, ic, (0.0, 1.2), params, &cfg).unwrap();
        assert!(
            !fwd.pole_events.is_empty() || fwd.samples.iter().any(|s| s.chart != 0),
            "expected to exercise a chart switch"
        );
        let end = fwd.final_state().clone();
        // integrate back from the endpoint's U0 image if finite, else
        // from the chart state through a fresh run
        let end_u0 = fwd.u0_image(&ca, &end);
        assert!(end_u0.iter().all(|v| v.is_finite()));
        let back = integrate_meromorphic(&ca, end_u0, (1.2, 0.0), params, &cfg).unwrap();
        let back_u0 = back.u0_image(&ca, back.final_state());
        for i in 0..3 {
            assert!(
                (back_u0[i] - ic[i]).abs() < 1e-8,
                "component {}: {} vs {}",
                i,
                back_u0[i],
                ic[i]
            );
        }
    }

    #[test]
    fn backlund_commutation_identity_when_a3_zero() {
        let ca = compiled();
        let cfg = IntegratorConfig::with_tol(1e-10);
        let dev = backlund_commutation_test(
            &ca,
            [0.4, 0.8, 1.1],
            [0.25, 0.4, 0.0],
            &backlund_s1(),
            (0.0, 0.4),
            &cfg,
        )
        .unwrap();
        assert!(dev < 1e-8, "deviation {}", dev);
    }

    #[test]
    fn backlund_commutation_generic() {
        let ca = compiled();
        let cfg = IntegratorConfig::with_tol(1e-10);
        for m in [backlund_s1(), backlund_s2()] {
            let dev = backlund_commutation_test(
                &ca,
                [0.4, 0.8, 1.1],
                [0.25, 0.4, 0.3],
                &m,
                (0.0, 0.4),
                &cfg,
            )
            .unwrap();
            assert!(dev < 1e-8, "{}: deviation {}", m.name, dev);
        }
    }
}
