//! Library entry points behind the command-line interface: each
//! subcommand maps onto one function returning a [`Report`].

use std::io::Write;
use std::path::Path;

use crate::atlas::{replay_resolution, verify_atlas, Atlas, AtlasError};
use crate::fixtures::Fixtures;
use crate::mero::{
    estimate_pole, integrate_meromorphic, CompiledAtlas, IntegratorConfig, MeroError,
};
use crate::report::{Check, Report};
use crate::singular::{cross_chart_consistency, verify_table, SingularError};
use crate::symmetry::{
    compare_with_printed_family, decoupling_check, derive_invariant_family, ny_reduction_check,
    p3_index_family, piv_reduction_check, verify_symmetry, SymmetryError,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Atlas(#[from] AtlasError),
    #[error(transparent)]
    Singular(#[from] SingularError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Mero(#[from] MeroError),
    #[error(transparent)]
    Fixture(#[from] crate::fixtures::FixtureError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown chart '{0}'")]
    UnknownChart(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyTarget {
    Atlas,
    Singularities,
    Symmetry,
    Resolution,
    All,
}

pub fn cmd_verify(fx: &Fixtures, target: VerifyTarget) -> Result<Report, CliError> {
    match target {
        VerifyTarget::Atlas => {
            // chart holomorphy plus the step goldens of the replay
            let mut parts = vec![verify_atlas(fx)?];
            let atlas = Atlas::builtin(fx)?;
            parts.push(replay_resolution(fx, &atlas)?);
            Ok(Report::merged("verify atlas", parts))
        }
        VerifyTarget::Singularities => {
            let parts = vec![verify_table(fx)?, cross_chart_consistency(fx)?];
            Ok(Report::merged("verify singularities", parts))
        }
        VerifyTarget::Symmetry => Ok(verify_symmetry(fx)?),
        VerifyTarget::Resolution => {
            let atlas = Atlas::builtin(fx)?;
            Ok(replay_resolution(fx, &atlas)?)
        }
        VerifyTarget::All => {
            // independent module checks fan out concurrently
            let results = std::thread::scope(|s| {
                let h1 = s.spawn(|| cmd_verify(fx, VerifyTarget::Atlas));
                let h2 = s.spawn(|| cmd_verify(fx, VerifyTarget::Singularities));
                let h3 = s.spawn(|| cmd_verify(fx, VerifyTarget::Symmetry));
                [h1.join(), h2.join(), h3.join()]
            });
            let mut parts = Vec::new();
            for r in results {
                parts.push(r.expect("verification thread panicked")?);
            }
            Ok(Report::merged("verify all", parts))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeriveTarget {
    Family,
    P3Index,
    Reductions,
}

pub fn cmd_derive(fx: &Fixtures, target: DeriveTarget) -> Result<Report, CliError> {
    match target {
        DeriveTarget::Family => {
            let mut rep = Report::new("derive family");
            let fam = derive_invariant_family(fx)?;
            let dim_ok = fam.dimension == 8;
            rep.push(if dim_ok {
                Check::pass("dimension", "nullspace dimension 8").with_data(
                    serde_json::json!({"dimension": fam.dimension}),
                )
            } else {
                Check::fail("dimension", format!("dimension {}", fam.dimension))
            });
            if let Some(general) = &fam.general {
                rep.push(Check::pass("general-member", format!("{}", general)));
                for c in compare_with_printed_family(general)? {
                    rep.push(c);
                }
                let basis_rows: Vec<String> = fam
                    .basis
                    .iter()
                    .map(|v| {
                        v.iter()
                            .zip(&fam.coeff_names)
                            .filter(|(c, _)| !num_traits::Zero::is_zero(*c))
                            .map(|(c, n)| format!("{} {}", c, n))
                            .collect::<Vec<_>>()
                            .join(", ")
                    })
                    .collect();
                rep.push(
                    Check::pass("basis", format!("{} basis vectors", fam.basis.len()))
                        .with_data(serde_json::json!(basis_rows)),
                );
            }
            Ok(rep.finish())
        }
        DeriveTarget::P3Index => {
            let mut rep = Report::new("derive p3-index");
            let fam = derive_invariant_family(fx)?;
            let general = fam.general.as_ref().expect("dimension 8");
            let dc = decoupling_check(general)?;
            rep.push(Check::pass(
                "decoupling-condition",
                format!(
                    "closure of the last two equations holds iff {} = 0 \
                     (xz coefficient of f1 equals twice the x^2 coefficient)",
                    dc.conditions[0]
                ),
            ));
            let idx = p3_index_family(general)?;
            rep.push(Check::pass(
                "symbolic-index",
                format!(
                    "index at the reciprocal-x boundary point: ({}, {}, {}); \
                     degenerate when {}",
                    idx.tuple[0], idx.tuple[1], idx.tuple[2], idx.degenerate_when
                ),
            ));
            Ok(rep.finish())
        }
        DeriveTarget::Reductions => {
            let parts = vec![piv_reduction_check(fx)?, ny_reduction_check(fx)?];
            Ok(Report::merged("derive reductions", parts))
        }
    }
}

/// Arguments of the integrate subcommand.
#[derive(Debug, Clone)]
pub struct IntegrateArgs {
    pub ic: [f64; 3],
    pub alpha: [f64; 3],
    pub t0: f64,
    pub t1: f64,
    pub tol: f64,
    pub out: Option<String>,
}

/// Integrate and write the trajectory CSV and the pole-event JSON.
pub fn cmd_integrate(fx: &Fixtures, args: &IntegrateArgs) -> Result<Report, CliError> {
    let mut rep = Report::new("integrate");
    let atlas = Atlas::builtin(fx)?;
    let ca = CompiledAtlas::new(&atlas)?;
    let cfg = IntegratorConfig::with_tol(args.tol);
    let mut traj =
        integrate_meromorphic(&ca, args.ic, (args.t0, args.t1), args.alpha, &cfg)?;

    // estimate residues for every event before reporting
    let mut events = traj.pole_events.clone();
    for ev in &mut events {
        match estimate_pole(&ca, &traj, ev, 1e-4) {
            Ok(res) => ev.residues = res,
            Err(e) => rep.push(Check::warn(
                format!("residue@t={:.6}", ev.t_star),
                format!("estimation failed: {}", e),
            )),
        }
    }
    traj.pole_events = events;

    if let Some(out) = &args.out {
        let path = Path::new(out);
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_trajectory_csv(&mut w, &ca, &traj)?;
        let events_path = path.with_extension("pole_events.json");
        let mut ew = std::io::BufWriter::new(std::fs::File::create(&events_path)?);
        serde_json::to_writer_pretty(&mut ew, &traj.pole_events)
            .map_err(std::io::Error::other)?;
        ew.flush()?;
        rep.push(Check::pass(
            "output",
            format!("trajectory to {}, events to {}", path.display(), events_path.display()),
        ));
    }

    let end = traj.final_state();
    let end_u0 = traj.u0_image(&ca, end);
    rep.push(
        Check::pass(
            "integration",
            format!(
                "{} samples, {} pole events, endpoint chart {} at t = {}",
                traj.samples.len(),
                traj.pole_events.len(),
                ca.chart_names()[end.chart],
                end.t
            ),
        )
        .with_data(serde_json::json!({
            "pole_events": traj.pole_events,
            "endpoint": {"t": end.t, "chart": ca.chart_names()[end.chart], "u0": end_u0.to_vec()},
            "switch_roundtrip_error": traj.switch_roundtrip_error,
        })),
    );
    Ok(rep.finish())
}

/// CSV with columns t, chart, c1, c2, c3, x, y, z. Floats carry 17
/// significant digits; U0 images at pole samples print as inf.
pub fn write_trajectory_csv<W: Write>(
    w: &mut W,
    atlas: &CompiledAtlas,
    traj: &crate::mero::Trajectory,
) -> std::io::Result<()> {
    writeln!(w, "t,chart,c1,c2,c3,x,y,z")?;
    let g = |v: f64| format!("{:.16e}", v);
    // merge regular samples with pole-instant rows in time order
    let dir = if traj
        .samples
        .last()
        .map(|s| s.t >= traj.samples[0].t)
        .unwrap_or(true)
    {
        1.0
    } else {
        -1.0
    };
    let mut events: Vec<&crate::mero::PoleEvent> = traj.pole_events.iter().collect();
    events.sort_by(|a, b| (dir * a.t_star).partial_cmp(&(dir * b.t_star)).unwrap());
    let mut ei = 0;
    for s in &traj.samples {
        while ei < events.len() && dir * events[ei].t_star < dir * s.t {
            let ev = events[ei];
            // coordinates at the pole instant from the dense output
            if let Some(coords) = traj
                .segments
                .iter()
                .find(|sg| sg.chart == ev.chart && sg.contains(ev.t_star))
                .map(|sg| {
                    let mut c = sg.eval(ev.t_star);
                    c[ev.divisor_slot] = 0.0;
                    c
                })
            {
                let u0 = atlas.to_u0(ev.chart, coords, ev.t_star, traj.params);
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    g(ev.t_star),
                    atlas.chart_names()[ev.chart],
                    g(coords[0]),
                    g(coords[1]),
                    g(coords[2]),
                    u0[0],
                    u0[1],
                    u0[2]
                )?;
            }
            ei += 1;
        }
        let u0 = atlas.to_u0(s.chart, s.coords, s.t, traj.params);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            g(s.t),
            atlas.chart_names()[s.chart],
            g(s.coords[0]),
            g(s.coords[1]),
            g(s.coords[2]),
            g(u0[0]),
            g(u0[1]),
            g(u0[2])
        )?;
    }
    Ok(())
}

/// Arguments of the transform subcommand: move a point between charts.
#[derive(Debug, Clone)]
pub struct TransformArgs {
    pub point: [f64; 3],
    pub from: String,
    pub to: String,
    pub t: f64,
    pub alpha: [f64; 3],
}

pub fn cmd_transform(fx: &Fixtures, args: &TransformArgs) -> Result<Report, CliError> {
    let mut rep = Report::new("transform");
    let atlas = Atlas::builtin(fx)?;
    let ca = CompiledAtlas::new(&atlas)?;
    let from = ca
        .chart_index(&args.from)
        .ok_or_else(|| CliError::UnknownChart(args.from.clone()))?;
    let to = ca
        .chart_index(&args.to)
        .ok_or_else(|| CliError::UnknownChart(args.to.clone()))?;
    let image = ca.transition(from, to, args.point, args.t, args.alpha);
    let back = ca.transition(to, from, image, args.t, args.alpha);
    let mut err = 0.0f64;
    for i in 0..3 {
        err = err.max((back[i] - args.point[i]).abs() / args.point[i].abs().max(1.0));
    }
    rep.push(
        Check::pass(
            "transform",
            format!(
                "{:?} in {} maps to {:?} in {} (round-trip error {:.3e})",
                args.point, args.from, image, args.to, err
            ),
        )
        .with_data(serde_json::json!({
            "from": args.from, "to": args.to,
            "point": args.point.to_vec(), "image": image.to_vec(),
            "roundtrip_error": err,
        })),
    );
    Ok(rep.finish())
}
