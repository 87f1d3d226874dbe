//! Thin command-line front end over the phase-atlas library: exact
//! verification reports, family derivations, pole-crossing integration
//! and chart-to-chart point transforms, all as JSON on stdout.

use clap::{Args, Parser, Subcommand};

use phase_atlas::cli::{
    cmd_derive, cmd_integrate, cmd_transform, cmd_verify, DeriveTarget, IntegrateArgs,
    TransformArgs, VerifyTarget,
};
use phase_atlas::fixtures::Fixtures;
use phase_atlas::Report;

#[derive(Parser)]
#[command(
    name = "phase-atlas",
    about = "exact chart-atlas certification and pole-crossing integration \
             for a third-order differential system",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run exact verification checks and print a JSON report
    Verify {
        /// atlas | singularities | symmetry | resolution | all
        #[arg(value_parser = parse_verify_target)]
        target: VerifyTarget,
    },
    /// Derive the symmetric family and related identities
    Derive {
        /// family | p3-index | reductions
        #[arg(value_parser = parse_derive_target)]
        target: DeriveTarget,
    },
    /// Integrate through movable poles by chart switching
    Integrate(IntegrateCli),
    /// Transform a point between named charts
    Transform(TransformCli),
}

#[derive(Args)]
struct IntegrateCli {
    /// initial condition x,y,z in the identity chart
    #[arg(long, value_parser = parse_triple)]
    ic: Triple,
    /// parameter values a1,a2,a3
    #[arg(long, value_parser = parse_triple)]
    alpha: Triple,
    #[arg(long)]
    t0: f64,
    #[arg(long)]
    t1: f64,
    /// relative tolerance of the embedded pair
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// CSV output path (pole events go to the same stem with a
    /// .pole_events.json extension)
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct TransformCli {
    /// point c1,c2,c3 in the source chart
    #[arg(long, value_parser = parse_triple)]
    point: Triple,
    /// source chart name (u0..u7)
    #[arg(long)]
    from: String,
    /// target chart name (u0..u7)
    #[arg(long)]
    to: String,
    /// time value the transition is evaluated at
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    /// parameter values a1,a2,a3
    #[arg(long, value_parser = parse_triple, default_value = "0,0,0")]
    alpha: Triple,
}

#[derive(Clone)]
struct Triple([f64; 3]);

fn parse_triple(s: &str) -> Result<Triple, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got '{}'", s));
    }
    let mut out = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad number '{}': {}", p, e))?;
    }
    Ok(Triple(out))
}

fn parse_verify_target(s: &str) -> Result<VerifyTarget, String> {
    match s {
        "atlas" => Ok(VerifyTarget::Atlas),
        "singularities" => Ok(VerifyTarget::Singularities),
        "symmetry" => Ok(VerifyTarget::Symmetry),
        "resolution" => Ok(VerifyTarget::Resolution),
        "all" => Ok(VerifyTarget::All),
        other => Err(format!(
            "unknown target '{}': expected atlas, singularities, symmetry, resolution or all",
            other
        )),
    }
}

fn parse_derive_target(s: &str) -> Result<DeriveTarget, String> {
    match s {
        "family" => Ok(DeriveTarget::Family),
        "p3-index" => Ok(DeriveTarget::P3Index),
        "reductions" => Ok(DeriveTarget::Reductions),
        other => Err(format!(
            "unknown target '{}': expected family, p3-index or reductions",
            other
        )),
    }
}

fn emit(report: &Report) -> i32 {
    println!("{}", serde_json::to_string_pretty(report).expect("report serializes"));
    if report.ok() {
        0
    } else {
        1
    }
}

fn main() {
    let cli = Cli::parse();
    let fx = match Fixtures::load_default() {
        Ok(fx) => fx,
        Err(e) => {
            eprintln!("failed to load fixtures: {}", e);
            std::process::exit(1);
        }
    };
    let result = match cli.command {
        Command::Verify { target } => cmd_verify(&fx, target),
        Command::Derive { target } => cmd_derive(&fx, target),
        Command::Integrate(args) => cmd_integrate(
            &fx,
            &IntegrateArgs {
                ic: args.ic.0,
                alpha: args.alpha.0,
                t0: args.t0,
                t1: args.t1,
                tol: args.tol,
                out: args.out,
            },
        ),
        Command::Transform(args) => cmd_transform(
            &fx,
            &TransformArgs {
                point: args.point.0,
                from: args.from,
                to: args.to,
                t: args.t,
                alpha: args.alpha.0,
            },
        ),
    };
    match result {
        Ok(report) => std::process::exit(emit(&report)),
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(1);
        }
    }
}
