mod plot;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hvbridge::analysis::{
    frequency_sweep, monte_carlo, monte_carlo_netlist, phase_sweep, write_phase_csv, MismatchModel, MonteCarloReport,
    SweepBase, SweepTable,
};
use hvbridge::electromech::{
    displacement_run, displacement_sweep_with, write_displacement_csv, write_displacement_table, ElectromechParams,
    SupplyKind,
};
use hvbridge::mna::{derive_timelines, run_transient};
use hvbridge::scenario::{parse, preset_recipe, BridgeRecipe, LoadSpec, Recipe, Scenario, ScenarioSource};
use hvbridge::topology::shoot_through_time;
use hvbridge::units::parse_value;
use hvbridge::waveform::write_csv;
use hvbridge::{Error, Result, Waveform};

use plot::{decimate, render, Plot, Series};

#[derive(Parser)]
#[command(name = "hvbridge", version, about = "Simulate series-MOSFET high-voltage half-bridges driving capacitive loads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one transient simulation and write the probed waveforms.
    Run(Common),
    /// Sweep drive frequency over a list of loads, a list of channel phase
    /// differences, or a pair of supplies.
    Sweep(SweepArgs),
    /// Repeat a run with randomized device leakage and driver timing.
    Montecarlo(MonteCarloArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Built-in scenario name (see `presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Netlist file.
    #[arg(long)]
    netlist: Option<PathBuf>,
}

#[derive(Args)]
struct Common {
    #[command(flatten)]
    source: Source,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Parameter override such as `tran.step=0.5us`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Also write an SVG plot next to each table.
    #[arg(long)]
    plot: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SupplyChoice {
    Bench,
    Converter,
    Both,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated frequencies in hertz.
    #[arg(long)]
    freqs: Option<String>,
    /// Comma-separated loads: `none`, `dea`, `10n`, `10n@50k`, `derated:10n`.
    #[arg(long)]
    loads: Option<String>,
    /// Comma-separated channel phase differences in radians.
    #[arg(long)]
    phases: Option<String>,
    /// Compare actuator displacement under these supplies.
    #[arg(long, value_enum)]
    supply: Option<SupplyChoice>,
    /// Worker threads (0 picks the number of cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trials: Option<usize>,
    /// Log-normal sigma of device off-resistance.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Driver offsets are drawn uniformly from +/- this many seconds.
    #[arg(long)]
    spread: Option<String>,
    /// Median off-resistance; defaults to each device's own value.
    #[arg(long)]
    median: Option<String>,
    /// Worker threads (0 picks the number of cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

enum Loaded {
    Recipe(Recipe),
    Netlist(Scenario),
}

struct Job {
    name: String,
    loaded: Loaded,
}

impl Job {
    fn scenario(&self) -> Result<Scenario> {
        match &self.loaded {
            Loaded::Recipe(r) => r.scenario(),
            Loaded::Netlist(s) => Ok(s.clone()),
        }
    }

    fn bridge(&self, what: &str) -> Result<&BridgeRecipe> {
        match &self.loaded {
            Loaded::Recipe(Recipe::Bridge(b)) => Ok(b),
            _ => Err(Error::InvalidParameter(format!("{what} needs a single-bridge preset"))),
        }
    }
}

fn load(common: &Common) -> Result<Job> {
    let mut pairs = Vec::new();
    for kv in &common.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        pairs.push((k.trim(), v.trim()));
    }
    if let Some(name) = &common.source.preset {
        let mut r = preset_recipe(name)?;
        for (k, v) in pairs {
            r.set(k, v)?;
        }
        return Ok(Job {
            name: name.clone(),
            loaded: Loaded::Recipe(r),
        });
    }
    let path = common.source.netlist.as_ref().expect("clap enforces one source");
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut s = parse(&ScenarioSource::new(path.display().to_string(), text))?;
    for (k, v) in pairs {
        s.set(k, v)?;
    }
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .unwrap_or("netlist")
        .to_string();
    Ok(Job {
        name,
        loaded: Loaded::Netlist(s),
    })
}

fn create(dir: &Path, file: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(file);
    let f = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_file(dir: &Path, file: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(dir, file)?;
    body(&mut w)?;
    w.flush().map_err(|e| Error::Io(format!("{}: {e}", dir.join(file).display())))
}

fn parse_list(what: &str, text: &str) -> Result<Vec<f64>> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::InvalidParameter(format!("{what} list is empty")));
    }
    items
        .iter()
        .map(|s| parse_value(s).map_err(|m| Error::InvalidParameter(format!("{what} list: {m}"))))
        .collect()
}

fn trace(w: &Waveform) -> Vec<(f64, f64)> {
    let pts: Vec<(f64, f64)> = w.samples.iter().enumerate().map(|(i, v)| (w.time(i), *v)).collect();
    decimate(&pts, 1500)
}

fn cmd_run(common: &Common) -> Result<ExitCode> {
    let job = load(common)?;
    let s = job.scenario()?;
    if s.probes.is_empty() {
        return Err(Error::InvalidParameter("nothing to record; add a .probe line".into()));
    }
    let timelines = derive_timelines(&s.circuit, s.settings.stop)?;
    if let Loaded::Recipe(Recipe::Bridge(b)) = &job.loaded {
        let overlap = shoot_through_time(&timelines, &b.stack, None, s.settings.stop);
        if overlap > 0.0 {
            eprintln!("warning: high and low side conduct together for {overlap:e} s (shoot-through)");
        }
    }
    // A DEA load also gets its displacement trace.
    let dea_node = match &job.loaded {
        Loaded::Recipe(Recipe::Bridge(b)) if matches!(b.load, LoadSpec::Dea(_)) => b.load_capacitor_node(),
        _ => None,
    };
    let mut probes = s.probes.clone();
    if let Some(node) = &dea_node {
        probes.push(hvbridge::mna::ProbeSpec::Node(node.clone()));
    }
    let mut waves = run_transient(&s.circuit, &s.settings, &timelines, &probes)?;
    let dea_wave = dea_node.as_ref().map(|_| waves.pop().expect("extra probe"));
    let names: Vec<String> = s.probes.iter().map(|p| p.column_name()).collect();
    let columns: Vec<(&str, &Waveform)> = names.iter().map(String::as_str).zip(waves.iter()).collect();
    write_file(&common.out, &format!("{}.csv", job.name), |w| write_csv(w, &columns))?;
    println!(
        "{}: {} samples, step {} s, stop {} s",
        job.name,
        waves[0].len(),
        hvbridge::units::format_value(s.settings.step),
        hvbridge::units::format_value(s.settings.stop)
    );
    for (name, w) in &columns {
        println!(
            "  {name}: min {:.6e} max {:.6e} final {:.6e}",
            w.min(),
            w.max(),
            w.samples.last().copied().unwrap_or(f64::NAN)
        );
    }
    if let Some(v_load) = dea_wave {
        let params = ElectromechParams::default();
        match hvbridge::electromech::displacement_response(&v_load, &params) {
            Ok(x_norm) => {
                let run = hvbridge::electromech::DisplacementRun {
                    frequency: 0.0,
                    v_load,
                    x_norm,
                };
                write_file(&common.out, &format!("{}_displacement.csv", job.name), |w| {
                    write_displacement_csv(w, &run)
                })?;
                println!("  x_norm: max {:.6e}", run.x_norm.max());
            }
            Err(e) => eprintln!("warning: no displacement trace: {e}"),
        }
    }
    if common.plot {
        let series: Vec<Series> = columns
            .iter()
            .map(|(name, w)| Series {
                label: name.to_string(),
                points: trace(w),
            })
            .collect();
        let svg = render(
            &Plot {
                title: &job.name,
                x_label: "time (s)",
                y_label: "value (V or A)",
                log_x: false,
                markers: false,
            },
            &series,
        );
        write_file(&common.out, &format!("{}.svg", job.name), |w| Ok(w.write_all(svg.as_bytes())?))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn print_sweep(table: &SweepTable) {
    for load in &table.loads {
        let cells: Vec<String> = table
            .rows
            .iter()
            .filter(|r| &r.load == load)
            .map(|r| match &r.outcome {
                Ok(m) => format!("{}Hz={:.1}", r.frequency, m.amplitude),
                Err(_) => format!("{}Hz=failed", r.frequency),
            })
            .collect();
        println!("  {load}: {}", cells.join(" "));
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode> {
    let common = &args.common;
    let job = load(common)?;
    let freqs = args.freqs.as_deref().map(|f| parse_list("frequency", f)).transpose()?;
    let sweep_file = format!("{}_sweep.csv", job.name);
    let svg_file = format!("{}_sweep.svg", job.name);

    if args.phases.is_some() || matches!(job.loaded, Loaded::Recipe(Recipe::Dual(_))) {
        let Loaded::Recipe(Recipe::Dual(d)) = &job.loaded else {
            return Err(Error::InvalidParameter("--phases needs a dual-channel preset".into()));
        };
        if args.loads.is_some() || args.supply.is_some() || freqs.is_some() {
            return Err(Error::InvalidParameter(
                "a phase sweep takes --phases only; set the frequency with --set ctrl.f=".into(),
            ));
        }
        let phases = match &args.phases {
            Some(p) => parse_list("phase", p)?,
            None => vec![0.0, FRAC_PI_2, PI],
        };
        let rows = phase_sweep(d, &phases, args.workers)?;
        write_file(&common.out, &sweep_file, |w| write_phase_csv(w, &rows))?;
        println!("{}: phase sweep over {} phases", job.name, rows.len());
        for r in &rows {
            println!("  phase {:.6} rad: peak current {:.6e} A, peak power {:.6e} W", r.phase, r.peak_current, r.peak_power);
        }
        if common.plot {
            let svg = render(
                &Plot {
                    title: &format!("{}: peak supply current", job.name),
                    x_label: "phase difference (rad)",
                    y_label: "peak current (A)",
                    log_x: false,
                    markers: true,
                },
                &[Series {
                    label: "peak I".into(),
                    points: rows.iter().map(|r| (r.phase, r.peak_current)).collect(),
                }],
            );
            write_file(&common.out, &svg_file, |w| Ok(w.write_all(svg.as_bytes())?))?;
        }
        return Ok(ExitCode::SUCCESS);
    }

    if let Some(choice) = args.supply {
        let base = job.bridge("--supply")?;
        if args.loads.is_some() {
            return Err(Error::InvalidParameter("--supply uses the preset's own load; drop --loads".into()));
        }
        let freqs = freqs.unwrap_or_else(|| base.sweep_frequencies.clone());
        if freqs.is_empty() {
            return Err(Error::InvalidParameter("frequency list is empty".into()));
        }
        let kinds: &[SupplyKind] = match choice {
            SupplyChoice::Bench => &[SupplyKind::Bench],
            SupplyChoice::Converter => &[SupplyKind::Converter],
            SupplyChoice::Both => &[SupplyKind::Bench, SupplyKind::Converter],
        };
        let params = ElectromechParams::default();
        let mut rows = Vec::new();
        for &kind in kinds {
            let mut r = base.clone();
            r.supply = kind.spec();
            rows.push((kind, displacement_sweep_with(&r, &freqs, &params, args.workers)?));
        }
        write_file(&common.out, &sweep_file, |w| write_displacement_table(w, &rows))?;
        println!("{}: displacement sweep over {} frequencies", job.name, freqs.len());
        for (kind, points) in &rows {
            let cells: Vec<String> = points
                .iter()
                .map(|p| format!("{}Hz={:.4}", p.frequency, p.displacement_amplitude))
                .collect();
            println!("  {}: {}", kind.name(), cells.join(" "));
        }
        if common.plot {
            let series: Vec<Series> = rows
                .iter()
                .map(|(kind, points)| Series {
                    label: kind.name().into(),
                    points: points.iter().map(|p| (p.frequency, p.displacement_amplitude)).collect(),
                })
                .collect();
            let svg = render(
                &Plot {
                    title: &format!("{}: displacement amplitude", job.name),
                    x_label: "frequency (Hz)",
                    y_label: "normalized displacement (p-p)",
                    log_x: true,
                    markers: true,
                },
                &series,
            );
            write_file(&common.out, &svg_file, |w| Ok(w.write_all(svg.as_bytes())?))?;
        }
        // Keep the time traces at the first frequency for inspection.
        let mut r = base.clone();
        r.supply = kinds[0].spec();
        let run = displacement_run(&r, freqs[0], None, &params)?;
        write_file(&common.out, &format!("{}_displacement.csv", job.name), |w| {
            write_displacement_csv(w, &run)
        })?;
        return Ok(ExitCode::SUCCESS);
    }

    let (base, freqs, loads) = match &job.loaded {
        Loaded::Recipe(Recipe::Bridge(b)) => {
            let loads = match &args.loads {
                Some(l) => {
                    let l = LoadSpec::parse_list(l)?;
                    if l.is_empty() {
                        return Err(Error::InvalidParameter("load list is empty".into()));
                    }
                    l
                }
                None if b.sweep_loads.is_empty() => vec![b.load],
                None => b.sweep_loads.clone(),
            };
            (SweepBase::Bridge(b.clone()), freqs.unwrap_or_else(|| b.sweep_frequencies.clone()), loads)
        }
        Loaded::Recipe(Recipe::Dual(_)) => unreachable!("handled above"),
        Loaded::Netlist(s) => {
            if args.loads.is_some() {
                return Err(Error::InvalidParameter("--loads needs a preset; a netlist fixes its load".into()));
            }
            let f = freqs.or_else(|| s.sweep_frequencies().map(<[f64]>::to_vec)).unwrap_or_default();
            (SweepBase::Netlist(s.clone()), f, Vec::new())
        }
    };
    let table = frequency_sweep(&base, &freqs, &loads, args.workers)?;
    write_file(&common.out, &sweep_file, |w| table.write_csv(w))?;
    println!("{}: {} cells, amplitude (V) per load", job.name, table.rows.len());
    print_sweep(&table);
    if common.plot {
        let series: Vec<Series> = table
            .loads
            .iter()
            .map(|load| Series {
                label: load.clone(),
                points: table
                    .rows
                    .iter()
                    .filter(|r| &r.load == load)
                    .map(|r| (r.frequency, r.outcome.as_ref().map_or(f64::NAN, |m| m.amplitude)))
                    .collect(),
            })
            .collect();
        let svg = render(
            &Plot {
                title: &format!("{}: output amplitude", job.name),
                x_label: "frequency (Hz)",
                y_label: "amplitude (V)",
                log_x: true,
                markers: true,
            },
            &series,
        );
        write_file(&common.out, &svg_file, |w| Ok(w.write_all(svg.as_bytes())?))?;
    }
    let failed: Vec<_> = table.failures().collect();
    for r in &failed {
        eprintln!(
            "error: cell {} Hz / {}: {}",
            r.frequency,
            r.load,
            r.outcome.as_ref().err().map_or("", String::as_str)
        );
    }
    Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn cmd_montecarlo(args: &MonteCarloArgs) -> Result<ExitCode> {
    let common = &args.common;
    let job = load(common)?;
    let mut model = match &job.loaded {
        Loaded::Netlist(s) => s.mismatch_model().cloned(),
        _ => None,
    }
    .unwrap_or(MismatchModel {
        off_resistance_median: None,
        sigma: 1.0,
        offset_spread: 0.0,
        trials: 100,
        seed: 1,
    });
    if let Some(t) = args.trials {
        model.trials = t;
    }
    if let Some(s) = args.sigma {
        model.sigma = s;
    }
    if let Some(s) = args.seed {
        model.seed = s;
    }
    if let Some(s) = &args.spread {
        model.offset_spread = parse_value(s).map_err(|m| Error::InvalidParameter(format!("--spread: {m}")))?;
    }
    if let Some(m) = &args.median {
        model.off_resistance_median =
            Some(parse_value(m).map_err(|e| Error::InvalidParameter(format!("--median: {e}")))?);
    }
    model.validate()?;
    let report: MonteCarloReport = match &job.loaded {
        Loaded::Recipe(Recipe::Bridge(b)) => monte_carlo(b, &model, args.workers)?,
        Loaded::Recipe(Recipe::Dual(_)) => {
            return Err(Error::InvalidParameter("Monte Carlo needs a single-bridge preset or a netlist".into()))
        }
        Loaded::Netlist(s) => monte_carlo_netlist(s, &model, args.workers)?,
    };
    write_file(&common.out, &format!("{}_mc.csv", job.name), |w| report.write_csv(w))?;
    let ok = report.trials.iter().filter(|t| t.outcome.is_ok()).count();
    for t in report.trials.iter().filter(|t| t.outcome.is_err()) {
        eprintln!("error: trial {} (seed {}): {}", t.trial, t.seed, t.outcome.as_ref().unwrap_err());
    }
    let Some(s) = report.summary else {
        eprintln!("error: every trial failed");
        return Ok(ExitCode::from(3));
    };
    println!(
        "{}: {} trials ({ok} ok), seed {}, sigma {}",
        job.name, model.trials, model.seed, model.sigma
    );
    println!(
        "  max device drop (V): min={:.3} median={:.3} p99={:.3} max={:.3}",
        s.min, s.median, s.p99, s.max
    );
    if common.plot {
        let mut drops: Vec<f64> = report.trials.iter().filter_map(|t| t.outcome.as_ref().ok().copied()).collect();
        drops.sort_by(f64::total_cmp);
        let n = drops.len() as f64;
        let svg = render(
            &Plot {
                title: &format!("{}: max device drop", job.name),
                x_label: "max device drop (V)",
                y_label: "fraction of trials at or below",
                log_x: false,
                markers: false,
            },
            &[Series {
                label: "CDF".into(),
                points: drops.iter().enumerate().map(|(i, d)| (*d, (i + 1) as f64 / n)).collect(),
            }],
        );
        write_file(&common.out, &format!("{}_mc.svg", job.name), |w| Ok(w.write_all(svg.as_bytes())?))?;
    }
    Ok(if ok == report.trials.len() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Montecarlo(a) => cmd_montecarlo(a),
        Command::Presets => {
            for name in hvbridge::scenario::PRESETS {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
