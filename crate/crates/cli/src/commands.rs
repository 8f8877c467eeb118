//! Subcommand implementations. Each one echoes its resolved configuration
//! as a JSON line on stderr before writing results.

use std::fs::File;
use std::io::{BufWriter, Write};

use serde::Serialize;
use serde_json::{json, Map, Value};
use walsh_filter::filters::{filter_functions, leading_coefficient, log_grid, taylor_fit, Quadrature};
use walsh_filter::optimize::{
    cost_map, find_c2_zero, nelder_mead, tune_first_moment, NelderMeadOptions,
};
use walsh_filter::shaping::Shape;
use walsh_filter::simulate::{ensemble_infidelity, NoiseEnvironment, NoiseModel, Psd};
use walsh_filter::spectral::{cost as band_cost, filter_order, instantaneous_order, CostBand};
use walsh_filter::ControlSequence;

use crate::error::{CliError, EXIT_NO_IMPROVEMENT};
use crate::input::{read_json, Experiment, SequenceSpec};
use crate::parse::{self, GridSpec};
use crate::{Emit, Method, OutArgs, QuadratureArg, SequenceArgs, ShapeKind};

fn echo<T: Serialize>(command: &str, threads: usize, config: &T) -> Result<(), CliError> {
    let record = json!({ "command": command, "threads": threads, "config": config });
    eprintln!("{}", serde_json::to_string(&record).map_err(|e| CliError::io(e.to_string()))?);
    Ok(())
}

fn open(out: &OutArgs) -> Result<Box<dyn Write>, CliError> {
    Ok(match &out.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(out: &OutArgs, value: &T) -> Result<(), CliError> {
    let mut w = open(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn single(q: QuadratureArg) -> Result<Quadrature, CliError> {
    match q {
        QuadratureArg::Dephasing => Ok(Quadrature::Dephasing),
        QuadratureArg::Amplitude => Ok(Quadrature::Amplitude),
        QuadratureArg::Both => Err(CliError::parse("this command takes a single quadrature")),
    }
}

fn sequence_spec(args: &SequenceArgs) -> Result<SequenceSpec, CliError> {
    match (&args.spec, &args.family) {
        (Some(spec), _) => SequenceSpec::from_value(read_json(spec)?),
        (None, Some(family)) => SequenceSpec::from_flags(family, &args.params, parse::number(&args.tau)?),
        (None, None) => Err(CliError::parse("give either --spec or --family")),
    }
}

fn band_for(seq: &ControlSequence, text: &str, q: Quadrature) -> Result<(CostBand<f64>, (f64, f64)), CliError> {
    let (lo, hi) = parse::band(text)?;
    let tau = seq.total_duration();
    Ok((CostBand::new(lo / tau, hi / tau, q), (lo, hi)))
}

pub fn catalog(args: &SequenceArgs, out: &OutArgs, threads: usize) -> Result<(), CliError> {
    let spec = sequence_spec(args)?;
    echo("catalog", threads, &json!({ "sequence": spec }))?;
    let seq = spec.build()?;
    let triples: Vec<(f64, f64, f64)> =
        seq.segments().iter().map(|s| (s.signed_rabi(), s.duration(), s.signed_phase())).collect();
    write_json(out, &json!({ "label": seq.label, "triples": triples }))
}

pub fn eval(args: &SequenceArgs, grid: &str, out: &OutArgs, threads: usize) -> Result<(), CliError> {
    let spec = sequence_spec(args)?;
    let grid: GridSpec = parse::grid(grid)?;
    echo("eval", threads, &json!({ "sequence": spec, "grid": grid }))?;
    let seq = spec.build()?;
    let tau = seq.total_duration();
    let omegas: Vec<f64> = log_grid(grid.lo, grid.hi, grid.points_per_decade)?.into_iter().map(|x| x / tau).collect();
    let samples = filter_functions(&seq, &omegas);
    if samples.dephasing.iter().chain(&samples.amplitude).any(|v| !v.is_finite()) {
        return Err(walsh_filter::Error::NonFinite("filter function").into());
    }
    let mut w = open(out)?;
    samples.write_csv(&mut w, tau)?;
    w.flush()?;
    Ok(())
}

pub fn cost(args: &SequenceArgs, band: &str, out: &OutArgs, threads: usize) -> Result<(), CliError> {
    let spec = sequence_spec(args)?;
    let seq = spec.build()?;
    let (deph, range) = band_for(&seq, band, Quadrature::Dephasing)?;
    echo(
        "cost",
        threads,
        &json!({ "sequence": spec, "band": range, "points_per_decade": deph.points_per_decade }),
    )?;
    let amp = CostBand { quadrature: Quadrature::Amplitude, ..deph };
    write_json(
        out,
        &json!({ "label": seq.label, "band": range, "dephasing": band_cost(&seq, &deph)?, "amplitude": band_cost(&seq, &amp)? }),
    )
}

pub fn order(args: &SequenceArgs, band: &str, out: &OutArgs, threads: usize) -> Result<(), CliError> {
    let spec = sequence_spec(args)?;
    let (lo, hi) = parse::band(band)?;
    if lo == 0.0 {
        return Err(CliError::parse("order band needs a positive lower edge"));
    }
    echo("order", threads, &json!({ "sequence": spec, "band": [lo, hi] }))?;
    let seq = spec.build()?;
    let tau = seq.total_duration();
    let mut report = Map::new();
    report.insert("label".into(), json!(seq.label));
    for q in [Quadrature::Dephasing, Quadrature::Amplitude] {
        let fit = filter_order(&seq, q, lo / tau, hi / tau)?;
        let taylor = taylor_fit(&seq, q)?;
        let name = match q {
            Quadrature::Dephasing => "dephasing",
            Quadrature::Amplitude => "amplitude",
        };
        report.insert(
            name.into(),
            json!({
                "slope": fit.slope,
                "order": fit.order,
                "residual": fit.residual,
                "poor_fit": fit.poor_fit,
                "c2_exact": leading_coefficient(&seq, q),
                "taylor": taylor.coefficients,
                "taylor_residual": taylor.residual,
            }),
        );
    }
    write_json(out, &Value::Object(report))
}

pub struct OptimizeArgs {
    pub family: String,
    pub params: String,
    pub vary: String,
    pub tau: String,
    pub method: Method,
    pub band: String,
    pub quadrature: QuadratureArg,
    pub bracket: Option<String>,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

/// Builds a family from fixed parameters with some keys overridden.
struct FamilyBuilder {
    family: String,
    fixed: Map<String, Value>,
    tau: f64,
}

impl FamilyBuilder {
    fn build(&self, names: &[String], values: &[f64]) -> Result<ControlSequence, CliError> {
        let mut params = self.fixed.clone();
        for (n, v) in names.iter().zip(values) {
            params.insert(n.clone(), json!(v));
        }
        let mut obj = Map::new();
        obj.insert("family".into(), json!(self.family));
        obj.insert("params".into(), Value::Object(params));
        obj.insert("tau".into(), json!(self.tau));
        SequenceSpec::from_value(Value::Object(obj))?.build()
    }
}

/// Order diagnostics over a band: median instantaneous order, the fraction
/// of the band at order two or more, and a power-law fit.
fn band_order(seq: &ControlSequence, q: Quadrature, lo: f64, hi: f64) -> Result<Value, CliError> {
    let lo = if lo > 0.0 { lo } else { hi * 1e-3 };
    let mut orders: Vec<f64> =
        walsh_filter::filters::log_grid_n(lo, hi, 41).into_iter().map(|w| instantaneous_order(seq, q, w)).collect();
    let above = orders.iter().filter(|o| **o >= 2.0).count() as f64 / orders.len() as f64;
    orders.sort_by(|a, b| a.total_cmp(b));
    let fit = filter_order(seq, q, lo, hi)?;
    Ok(json!({
        "median_instantaneous": orders[orders.len() / 2],
        "fraction_at_least_two": above,
        "fitted": fit.order,
        "fit_residual": fit.residual,
    }))
}

pub fn optimize(args: OptimizeArgs, out: &OutArgs, threads: usize) -> Result<(), CliError> {
    let tau = parse::number(&args.tau)?;
    let fixed = parse::params(&args.params)?;
    let names: Vec<String> = args.vary.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    if names.is_empty() {
        return Err(walsh_filter::Error::EmptyParameterSet.into());
    }
    let quadrature = single(args.quadrature)?;
    let builder = FamilyBuilder { family: args.family.clone(), fixed: fixed.clone(), tau };
    let start: Vec<f64> = names
        .iter()
        .map(|n| {
            fixed.get(n).and_then(Value::as_f64).ok_or_else(|| CliError::parse(format!("no starting value for `{n}` in --params")))
        })
        .collect::<Result<_, _>>()?;
    let (lo, hi) = parse::band(&args.band)?;
    let band = CostBand::new(lo / tau, hi / tau, quadrature);
    match args.method {
        Method::Bisect => {
            if names.len() != 1 {
                return Err(CliError::parse("bisection varies exactly one parameter"));
            }
            let bracket = args.bracket.as_deref().ok_or_else(|| CliError::parse("bisection needs --bracket lo:hi"))?;
            let (blo, bhi) = bracket
                .split_once(':')
                .ok_or_else(|| CliError::parse(format!("bracket `{bracket}` is not lo:hi")))
                .and_then(|(a, b)| Ok((parse::number(a)?, parse::number(b)?)))?;
            echo(
                "optimize",
                threads,
                &json!({
                    "family": args.family, "fixed": fixed, "vary": names, "tau": tau, "method": args.method,
                    "quadrature": quadrature, "bracket": [blo, bhi],
                }),
            )?;
            let x = if args.family == "wamf03" && names[0] == "X3" && quadrature == Quadrature::Dephasing {
                let x0 = fixed.get("X0").and_then(Value::as_f64).ok_or_else(|| CliError::parse("wamf03 needs X0"))?;
                find_c2_zero(x0, blo, bhi)?
            } else {
                tune_first_moment(|v| builder.build(&names, &[v]).map_err(|_| walsh_filter::Error::NonFinite("family")), quadrature, blo, bhi)?
            };
            let seq = builder.build(&names, &[x])?;
            write_json(
                out,
                &json!({
                    "argmin": { names[0].clone(): x },
                    "c2": leading_coefficient(&seq, quadrature),
                    "order": band_order(&seq, quadrature, 1e-4 / tau, 1e-2 / tau)?,
                }),
            )
        }
        Method::NelderMead => {
            let opts = NelderMeadOptions { restarts: args.restarts, max_iterations: args.max_iter, seed: args.seed, ..Default::default() };
            echo(
                "optimize",
                threads,
                &json!({
                    "family": args.family, "fixed": fixed, "vary": names, "start": start, "tau": tau,
                    "method": args.method, "band": [lo, hi], "quadrature": quadrature, "options": opts,
                }),
            )?;
            let objective = |x: &[f64]| {
                builder
                    .build(&names, x)
                    .ok()
                    .and_then(|s| band_cost(&s, &band).ok())
                    .map(f64::log10)
                    .unwrap_or(f64::INFINITY)
            };
            let result = nelder_mead(objective, &start, &opts)?;
            let seq = builder.build(&names, &result.argmin)?;
            let argmin: Map<String, Value> = names.iter().cloned().zip(result.argmin.iter().map(|v| json!(v))).collect();
            write_json(
                out,
                &json!({
                    "argmin": argmin,
                    "value": result.value,
                    "initial_value": result.initial_value,
                    "iterations": result.iterations,
                    "evaluations": result.evaluations,
                    "converged": result.converged,
                    "order": band_order(&seq, quadrature, lo / tau, hi / tau)?,
                }),
            )?;
            if !result.improved() {
                return Err(CliError { code: EXIT_NO_IMPROVEMENT, message: "optimizer did not improve on the start point".into() });
            }
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn map(
    family: &str,
    params: &str,
    rows: &str,
    cols: &str,
    tau: &str,
    band: &str,
    quadrature: QuadratureArg,
    out: &OutArgs,
    threads: usize,
) -> Result<(), CliError> {
    let tau = parse::number(tau)?;
    let fixed = parse::params(params)?;
    let (rname, raxis) = parse::axis(rows)?;
    let (cname, caxis) = parse::axis(cols)?;
    let quadrature = single(quadrature)?;
    let (lo, hi) = parse::band(band)?;
    echo(
        "map",
        threads,
        &json!({
            "family": family, "fixed": fixed, "tau": tau, "band": [lo, hi], "quadrature": quadrature,
            "rows": { "name": rname, "lo": raxis.lo, "hi": raxis.hi, "points": raxis.points },
            "cols": { "name": cname, "lo": caxis.lo, "hi": caxis.hi, "points": caxis.points },
        }),
    )?;
    let builder = FamilyBuilder { family: family.to_string(), fixed, tau };
    let names = [rname, cname];
    builder.build(&names, &[raxis.lo, caxis.lo])?;
    let band = CostBand::new(lo / tau, hi / tau, quadrature);
    let grid = cost_map(
        |r, c| builder.build(&names, &[r, c]).map_err(|_| walsh_filter::Error::NonFinite("family")),
        &raxis,
        &caxis,
        &band,
    );
    let mut w = open(out)?;
    grid.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub struct ShapeArgs {
    pub amplitudes: String,
    pub kind: ShapeKind,
    pub width: String,
    pub factor: String,
    pub cutoff: String,
    pub subsegments: usize,
    pub samples: usize,
    pub tau: String,
    pub emit: Emit,
    pub grid: String,
}

pub fn shape(args: ShapeArgs, out: &OutArgs, threads: usize) -> Result<(), CliError> {
    let amplitudes = parse::list(&args.amplitudes)?;
    let tau = parse::number(&args.tau)?;
    let shape = match args.kind {
        ShapeKind::Gaussian => Shape::Gaussian { g: parse::number(&args.width)?, subsegments: args.subsegments },
        ShapeKind::Trapezoid => Shape::Trapezoid { f: parse::number(&args.factor)?, subsegments: args.subsegments },
        ShapeKind::Butterworth => Shape::Butterworth { cutoff: parse::number(&args.cutoff)?, samples: args.samples },
    };
    let spec = SequenceSpec::Shaped { amplitudes, shape, tau };
    let grid = parse::grid(&args.grid)?;
    echo("shape", threads, &json!({ "sequence": spec, "emit": args.emit, "grid": grid }))?;
    let seq = spec.build()?;
    match args.emit {
        Emit::Sequence => {
            let triples: Vec<(f64, f64, f64)> =
                seq.segments().iter().map(|s| (s.signed_rabi(), s.duration(), s.signed_phase())).collect();
            write_json(out, &json!({ "label": seq.label, "triples": triples }))
        }
        Emit::Csv => {
            let omegas: Vec<f64> = log_grid(grid.lo, grid.hi, grid.points_per_decade)?.into_iter().map(|x| x / tau).collect();
            let samples = filter_functions(&seq, &omegas);
            let mut w = open(out)?;
            samples.write_csv(&mut w, tau)?;
            w.flush()?;
            Ok(())
        }
    }
}

pub struct SimulateArgs {
    pub spec: Option<String>,
    pub family: Option<String>,
    pub params: String,
    pub tau: String,
    pub xi2: String,
    pub noise_band: String,
    pub noise: QuadratureArg,
    pub realizations: usize,
    pub seed: u64,
    pub substeps: Option<usize>,
}

pub fn simulate(args: SimulateArgs, out: &OutArgs, threads: usize) -> Result<(), CliError> {
    let experiment = match (&args.spec, &args.family) {
        (Some(spec), _) => Experiment::from_value(read_json(spec)?)?,
        (None, Some(family)) => {
            let tau = parse::number(&args.tau)?;
            let xi2 = parse::number(&args.xi2)?;
            let (lo, hi) = parse::band(&args.noise_band)?;
            let psd = Psd::flat_with_smallness(xi2, lo / tau, hi / tau, tau);
            let model = |q| Some(NoiseModel::new(q, psd));
            let noise = match args.noise {
                QuadratureArg::Dephasing => NoiseEnvironment { dephasing: model(Quadrature::Dephasing), amplitude: None },
                QuadratureArg::Amplitude => NoiseEnvironment { dephasing: None, amplitude: model(Quadrature::Amplitude) },
                QuadratureArg::Both => {
                    NoiseEnvironment { dephasing: model(Quadrature::Dephasing), amplitude: model(Quadrature::Amplitude) }
                }
            };
            Experiment {
                sequence: SequenceSpec::from_flags(family, &args.params, tau)?,
                noise,
                realizations: args.realizations,
                seed: args.seed,
                substeps: args.substeps,
            }
        }
        (None, None) => return Err(CliError::parse("give either --spec or --family")),
    };
    echo("simulate", threads, &experiment)?;
    let seq = experiment.sequence.build()?;
    let r = ensemble_infidelity(&seq, &experiment.noise, experiment.realizations, experiment.substeps, experiment.seed)?;
    let mut w = open(out)?;
    writeln!(w, "kind,index,infidelity,first_order,std_error,predicted")?;
    for (i, v) in r.infidelities.iter().enumerate() {
        writeln!(w, "run,{i},{v:.16e},,,")?;
    }
    writeln!(w, "mean,,{:.16e},{:.16e},{:.16e},{:.16e}", r.mean, r.first_order_mean, r.std_error, r.predicted)?;
    w.flush()?;
    Ok(())
}
