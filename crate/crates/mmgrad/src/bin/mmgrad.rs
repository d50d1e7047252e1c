//! Batch front door: reads space/field/cover/curve files, dispatches to
//! the library, and prints one deterministic JSON report per invocation.
//!
//! Exit codes: 0 on success/pass, 1 on a failed check (report still
//! printed), 2 on input or usage errors.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use mmgrad::constructions::{
    glue_local, hajlasz_to_upper, maximal_noncentered, maximal_restricted, mcshane_extend,
    ConversionCertificate, ConversionConfig, GlueCertificate,
};
use mmgrad::curves::{enumerate_family, modulus, CurveFamily, Policy};
use mmgrad::gradients::{
    check_hajlasz, check_local_hajlasz, check_upper, min_hajlasz_gradient, min_upper_gradient,
    GradientField, Mode, ViolationReport, Witness,
};
use mmgrad::io;
use mmgrad::norms::{FunctionNorm, ScalarField};
use mmgrad::sobolev::{
    embedding_report, poincare_constant, sobolev_norm, GradientKind, SobolevNormSpec,
};
use mmgrad::space::{Cover, MetricMeasureSpace};

#[derive(Parser)]
#[command(name = "mmgrad", about = "Gradient calculus on finite metric measure spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report to a file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpaceArgs {
    /// Space file: {"points": [...], "edges": [...] | "distances": [...]}.
    #[arg(long)]
    space: PathBuf,
    /// Named field files, NAME=FILE; repeatable.
    #[arg(long = "field", value_name = "NAME=FILE")]
    fields: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Pointwise gradient check over positive-measure pairs.
    CheckHajlasz {
        #[command(flatten)]
        common: SpaceArgs,
    },
    /// Patchwise gradient check within a cover.
    CheckLocal {
        #[command(flatten)]
        common: SpaceArgs,
        #[arg(long)]
        cover: PathBuf,
    },
    /// Curve-increment check against a curve family.
    CheckUpper {
        #[command(flatten)]
        common: SpaceArgs,
        /// Family policy (edges | shortest | simple:h) or a curve file.
        #[arg(long, default_value = "edges")]
        curves: String,
    },
    /// Minimal-norm gradient of the given kind.
    MinGradient {
        #[command(flatten)]
        common: SpaceArgs,
        #[arg(long)]
        kind: String,
        #[arg(long, default_value = "lp:2")]
        norm: String,
        /// Cover file; switches the hajlasz kind to its patchwise form.
        #[arg(long)]
        cover: Option<PathBuf>,
    },
    /// Lipschitz extension from the points listed in the field file.
    Mcshane {
        #[command(flatten)]
        common: SpaceArgs,
        /// Lipschitz constant of the extension.
        #[arg(long)]
        lip: f64,
    },
    /// Pointwise-to-curvewise conversion certificate.
    Convert {
        #[command(flatten)]
        common: SpaceArgs,
        /// Hop limit of the certifying simple-path family.
        #[arg(long, default_value_t = 6)]
        hops: usize,
    },
    /// Patchwise conversion glued over a cover.
    Glue {
        #[command(flatten)]
        common: SpaceArgs,
        #[arg(long)]
        cover: PathBuf,
        #[arg(long, default_value_t = 6)]
        hops: usize,
    },
    /// p-modulus of a curve family.
    Modulus {
        #[command(flatten)]
        common: SpaceArgs,
        #[arg(long, default_value = "edges")]
        curves: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Maximal function of a field.
    Maximal {
        #[command(flatten)]
        common: SpaceArgs,
        /// restricted (centered, radius-capped) or noncentered.
        #[arg(long, default_value = "restricted")]
        kind: String,
        /// Radius cap for the restricted kind.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Power-average exponent for the noncentered kind.
        #[arg(long, default_value_t = 1.0)]
        exponent: f64,
    },
    /// Sobolev-type norm over a lattice norm.
    Norm {
        #[command(flatten)]
        common: SpaceArgs,
        #[arg(long)]
        kind: String,
        #[arg(long, default_value = "lp:2")]
        lattice: String,
        #[arg(long)]
        homogeneous: bool,
        #[arg(long)]
        cover: Option<PathBuf>,
    },
    /// Smallest ball Poincare constant below a radius horizon.
    Poincare {
        #[command(flatten)]
        common: SpaceArgs,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long = "R0", default_value_t = f64::INFINITY)]
        r0: f64,
    },
    /// Norm comparison across the three gradient kinds.
    Embed {
        #[command(flatten)]
        common: SpaceArgs,
        #[arg(long, default_value = "lp:2")]
        lattice: String,
        #[arg(long)]
        cover: Option<PathBuf>,
    },
    /// Doubling constant below a radius horizon.
    Doubling {
        #[arg(long)]
        space: PathBuf,
        #[arg(long = "R0", default_value_t = f64::INFINITY)]
        r0: f64,
    },
    /// Instance generator: grid:NX:NY:SPACING, random:N:RADIUS:SEED,
    /// or annulus:H.
    Generate {
        #[arg(long)]
        generator: String,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("MMGRAD_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, passed)) => {
            let text = io::render(&report);
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                print!("{text}");
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

struct Inputs {
    space: MetricMeasureSpace,
    fields: BTreeMap<String, ScalarField>,
}

impl Inputs {
    fn field(&self, name: &str) -> Result<&ScalarField> {
        self.fields.get(name).ok_or_else(|| anyhow!("missing --field {name}=FILE"))
    }

    fn gradient(&self, name: &str) -> Result<GradientField> {
        Ok(GradientField::new(self.field(name)?.values.clone())?)
    }
}

fn load(common: &SpaceArgs) -> Result<Inputs> {
    let space = io::parse_space(&read(&common.space)?)?;
    let mut fields = BTreeMap::new();
    for spec in &common.fields {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--field wants NAME=FILE, got {spec:?}"))?;
        let field = io::parse_field(&space, &read(&PathBuf::from(path))?)
            .with_context(|| format!("field {name} from {path}"))?;
        fields.insert(name.to_string(), field);
    }
    Ok(Inputs { space, fields })
}

fn load_cover(space: &MetricMeasureSpace, path: &PathBuf) -> Result<Cover> {
    Ok(io::parse_cover(space, &read(path)?)?)
}

/// A curve argument is a policy name first, a curve file second.
fn load_family(space: &MetricMeasureSpace, arg: &str) -> Result<CurveFamily> {
    if let Ok(policy) = Policy::parse(arg) {
        return Ok(enumerate_family(space, policy)?);
    }
    Ok(io::parse_curves(space, &read(&PathBuf::from(arg))?)?)
}

fn witness_json(space: &MetricMeasureSpace, witness: &Witness) -> Value {
    match witness {
        Witness::None => Value::Null,
        Witness::Pair { x, y } => json!({"kind": "pair", "x": space.id(*x), "y": space.id(*y)}),
        Witness::Curve { index } => json!({"kind": "curve", "index": index}),
    }
}

fn report_json(space: &MetricMeasureSpace, report: &ViolationReport) -> Value {
    json!({
        "passed": report.passed,
        "worst_ratio": io::number(report.worst_ratio),
        "witness": witness_json(space, &report.witness),
        "checked_count": report.checked_count,
    })
}

fn ids_json(space: &MetricMeasureSpace, points: &[usize]) -> Value {
    Value::Array(points.iter().map(|&x| Value::String(space.id(x).to_string())).collect())
}

fn certificate_json(space: &MetricMeasureSpace, cert: &ConversionCertificate) -> Value {
    let levels: Vec<Value> = cert
        .levels
        .iter()
        .map(|lvl| {
            json!({
                "k": lvl.k,
                "level_set": ids_json(space, &lvl.level_set),
                "extension": io::field_to_json(space, &lvl.extension),
                "truncated_gradient": io::field_to_json(space, &lvl.truncated_gradient.as_scalar()),
            })
        })
        .collect();
    json!({
        "k_min": cert.k_min,
        "k_max": cert.k_max,
        "levels": levels,
        "corrected_u": io::field_to_json(space, &cert.corrected_u),
        "corrected_g": io::field_to_json(space, &cert.corrected_g.as_scalar()),
        "infinity_set": ids_json(space, &cert.infinity_set),
        "stabilized": cert.stabilized,
        "factor": io::number(cert.factor),
    })
}

fn glue_json(space: &MetricMeasureSpace, cert: &GlueCertificate) -> Value {
    let z_sets: Vec<Value> = cert
        .z_sets
        .iter()
        .map(|(j, m, points)| json!({"j": j, "m": m, "points": ids_json(space, points)}))
        .collect();
    json!({
        "z_sets": z_sets,
        "corrected_u": io::field_to_json(space, &cert.corrected_u),
        "corrected_g": io::field_to_json(space, &cert.corrected_g.as_scalar()),
        "factor": io::number(cert.factor),
        "disconnected_patches": cert.disconnected_patches,
    })
}

fn parse_norm(spec: &str) -> Result<FunctionNorm> {
    FunctionNorm::parse(spec).map_err(|e| anyhow!(e))
}

fn run(cli: &Cli) -> Result<(Value, bool)> {
    match &cli.command {
        Command::CheckHajlasz { common } => {
            let inputs = load(common)?;
            let report =
                check_hajlasz(&inputs.space, inputs.field("u")?, &inputs.gradient("g")?);
            Ok((report_json(&inputs.space, &report), report.passed))
        }
        Command::CheckLocal { common, cover } => {
            let inputs = load(common)?;
            let cover = load_cover(&inputs.space, cover)?;
            let report =
                check_local_hajlasz(&inputs.space, inputs.field("u")?, &inputs.gradient("g")?, &cover);
            Ok((report_json(&inputs.space, &report), report.passed))
        }
        Command::CheckUpper { common, curves } => {
            let inputs = load(common)?;
            let family = load_family(&inputs.space, curves)?;
            let report =
                check_upper(&inputs.space, inputs.field("u")?, &inputs.gradient("g")?, &family);
            Ok((report_json(&inputs.space, &report), report.passed))
        }
        Command::MinGradient { common, kind, norm, cover } => {
            let inputs = load(common)?;
            let norm = parse_norm(norm)?;
            let u = inputs.field("u")?;
            let (g, value) = match kind.as_str() {
                "hajlasz" => match cover {
                    Some(path) => {
                        let cover = load_cover(&inputs.space, path)?;
                        min_hajlasz_gradient(&inputs.space, u, &norm, Mode::Local(&cover))
                    }
                    None => min_hajlasz_gradient(&inputs.space, u, &norm, Mode::Global),
                },
                "upper" => min_upper_gradient(&inputs.space, u, &norm),
                other => bail!("unknown gradient kind {other:?}; expected hajlasz or upper"),
            };
            let report = json!({
                "value": io::number(value),
                "gradient": io::field_to_json(&inputs.space, &g.as_scalar()),
            });
            Ok((report, true))
        }
        Command::Mcshane { common, lip } => {
            // The f field file may cover a subset of points: its keys are
            // the anchors, so the strict all-points parser does not apply.
            let space = io::parse_space(&read(&common.space)?)?;
            let path = common
                .fields
                .iter()
                .find_map(|s| s.strip_prefix("f="))
                .ok_or_else(|| anyhow!("mcshane wants --field f=FILE listing the anchors"))?;
            let raw: Value = serde_json::from_str(&read(&PathBuf::from(path))?)?;
            let values = raw
                .get("values")
                .and_then(Value::as_object)
                .ok_or_else(|| anyhow!("field file wants a \"values\" object"))?;
            let mut anchors = Vec::new();
            let mut f_on = Vec::new();
            for (id, v) in values {
                anchors.push(space.index_of(id)?);
                f_on.push(v.as_f64().ok_or_else(|| anyhow!("non-numeric anchor value"))?);
            }
            let ext = mcshane_extend(&space, &anchors, &f_on, *lip)?;
            let report = json!({
                "extension": io::field_to_json(&space, &ext),
                "anchors": ids_json(&space, &anchors),
                "lip": io::number(*lip),
            });
            Ok((report, true))
        }
        Command::Convert { common, hops } => {
            let inputs = load(common)?;
            let config = ConversionConfig { hop_limit: *hops, ..ConversionConfig::default() };
            let cert = hajlasz_to_upper(
                &inputs.space,
                inputs.field("u")?,
                &inputs.gradient("g")?,
                &config,
            )?;
            let passed = cert.factor <= 4.0 + 1e-9;
            Ok((certificate_json(&inputs.space, &cert), passed))
        }
        Command::Glue { common, cover, hops } => {
            let inputs = load(common)?;
            let cover = load_cover(&inputs.space, cover)?;
            let config = ConversionConfig { hop_limit: *hops, ..ConversionConfig::default() };
            let cert = glue_local(
                &inputs.space,
                inputs.field("u")?,
                &inputs.gradient("g")?,
                &cover,
                &config,
            )?;
            let passed = cert.factor <= 4.0 + 1e-9;
            Ok((glue_json(&inputs.space, &cert), passed))
        }
        Command::Modulus { common, curves, p } => {
            let inputs = load(common)?;
            let family = load_family(&inputs.space, curves)?;
            let result = modulus(&inputs.space, &family, *p);
            let report = json!({
                "modulus": io::number(result.value),
                "rho": io::field_to_json(&inputs.space, &result.rho.as_scalar()),
                "curves": family.len(),
                "converged": result.converged,
            });
            Ok((report, result.converged))
        }
        Command::Maximal { common, kind, radius, exponent } => {
            let inputs = load(common)?;
            let f = inputs.field("f")?;
            let out = match kind.as_str() {
                "restricted" => maximal_restricted(&inputs.space, f, *radius),
                "noncentered" => maximal_noncentered(&inputs.space, f, *exponent),
                other => bail!("unknown maximal kind {other:?}"),
            };
            Ok((json!({"maximal": io::field_to_json(&inputs.space, &out)}), true))
        }
        Command::Norm { common, kind, lattice, homogeneous, cover } => {
            let inputs = load(common)?;
            let lattice = parse_norm(lattice)?;
            let gradient_kind = match kind.as_str() {
                "hajlasz" => GradientKind::Hajlasz,
                "upper" => GradientKind::Upper,
                "local" => {
                    let path =
                        cover.as_ref().ok_or_else(|| anyhow!("local kind wants --cover"))?;
                    GradientKind::LocalHajlasz(load_cover(&inputs.space, path)?)
                }
                other => bail!("unknown norm kind {other:?}"),
            };
            let spec = SobolevNormSpec { gradient_kind, lattice, homogeneous: *homogeneous };
            let (value, g) = sobolev_norm(&inputs.space, inputs.field("u")?, &spec);
            let report = json!({
                "value": io::number(value),
                "gradient": io::field_to_json(&inputs.space, &g.as_scalar()),
            });
            Ok((report, true))
        }
        Command::Poincare { common, p, lambda, r0 } => {
            let inputs = load(common)?;
            let c = poincare_constant(
                &inputs.space,
                inputs.field("u")?,
                &inputs.gradient("g")?,
                *p,
                *lambda,
                *r0,
            );
            Ok((json!({"constant": io::number(c)}), true))
        }
        Command::Embed { common, lattice, cover } => {
            let inputs = load(common)?;
            let lattice = parse_norm(lattice)?;
            let cover = match cover {
                Some(path) => load_cover(&inputs.space, path)?,
                None => Cover::whole(&inputs.space),
            };
            let report = embedding_report(&inputs.space, inputs.field("u")?, &lattice, &cover);
            let value = json!({
                "m_norm": io::number(report.m_norm),
                "n_norm": io::number(report.n_norm),
                "m_local_norm": io::number(report.m_local_norm),
                "ratio_n_over_m": io::number(report.ratio_n_over_m),
                "ratio_n_over_m_local": io::number(report.ratio_n_over_m_local),
                "bound_ok": report.bound_ok,
            });
            Ok((value, report.bound_ok))
        }
        Command::Doubling { space, r0 } => {
            let space = io::parse_space(&read(space)?)?;
            Ok((json!({"constant": io::number(space.doubling_constant(*r0))}), true))
        }
        Command::Generate { generator } => {
            let (space, fields) = generate_instance(generator)?;
            let mut field_map = Map::new();
            for (name, field) in &fields {
                field_map.insert(name.clone(), io::field_to_json(&space, field));
            }
            let report = json!({
                "space": io::space_to_json(&space),
                "fields": field_map,
            });
            Ok((report, true))
        }
    }
}

fn generate_instance(
    spec: &str,
) -> Result<(MetricMeasureSpace, BTreeMap<String, ScalarField>)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let out = match parts.as_slice() {
        ["grid", nx, ny, spacing] => {
            mmgrad::generate::grid(nx.parse()?, ny.parse()?, spacing.parse()?)?
        }
        ["random", n, radius, seed] => {
            mmgrad::generate::random_geometric(n.parse()?, radius.parse()?, seed.parse()?)?
        }
        ["annulus", h] => mmgrad::generate::annulus(h.parse()?)?,
        _ => bail!(
            "unknown generator {spec:?}; expected grid:NX:NY:SPACING, \
             random:N:RADIUS:SEED, or annulus:H"
        ),
    };
    Ok(out)
}
