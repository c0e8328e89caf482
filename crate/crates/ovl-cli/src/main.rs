//! `ovl` — compile finite-state machines onto memory-based overlay
//! architectures, size instances, simulate bitstreams and verify them.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ovl_core::{
    area_table, canonicalize, envelope, kiss, map, parse_instance, parse_stimulus, profile,
    ram_shapes, read_bitstream_with_cap, render_trace_csv, render_trace_text, tailor_single,
    timing_report, total_bits, verify_equivalence, write_bitstream, Arch,
    CanonicalFsm, FsmProfile, InstanceSpec, OverlaySim, Strategy, DEFAULT_BIT_CAP,
};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "ovl",
    version,
    about = "Compiler and simulator for memory-based FSM overlays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    One,
    Two,
    Three,
    Mram,
}

impl From<ArchArg> for Arch {
    fn from(a: ArchArg) -> Arch {
        match a {
            ArchArg::One => Arch::OneRam,
            ArchArg::Two => Arch::TwoRam,
            ArchArg::Three => Arch::ThreeRam,
            ArchArg::Mram => Arch::MRam,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Md,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Profile a machine: per-state effective inputs and scalar demands.
    Analyze {
        /// KISS2 file to profile
        fsm: PathBuf,
        /// Emit CSV instead of the aligned text table
        #[arg(long)]
        csv: bool,
    },
    /// Tailor an instance for one machine (or an envelope instance for
    /// several) and print its config plus the per-RAM bit table.
    Size {
        #[arg(long, value_enum)]
        arch: ArchArg,
        /// KISS2 files; more than one sizes a shared envelope instance
        #[arg(required = true)]
        fsms: Vec<PathBuf>,
    },
    /// Compile a machine to an overlay bitstream file.
    Map {
        /// Target architecture (ignored when --instance is given)
        #[arg(long, value_enum)]
        arch: Option<ArchArg>,
        /// Host onto this instance config instead of tailoring one
        #[arg(long)]
        instance: Option<PathBuf>,
        fsm: PathBuf,
        /// Output bitstream path
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run a bitstream over a stimulus file and print the trace.
    Sim {
        #[arg(long)]
        bitstream: PathBuf,
        #[arg(long)]
        stimulus: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: TraceFormat,
    },
    /// Compile a machine, then prove the overlay behaves identically.
    Verify {
        #[arg(long, value_enum)]
        arch: ArchArg,
        fsm: PathBuf,
        /// Force the exhaustive strategy (default up to 16 inputs)
        #[arg(long, conflicts_with = "random")]
        exhaustive: bool,
        /// Force the random-walk strategy with this many steps
        #[arg(long)]
        random: Option<u64>,
        /// Seed for the random walk
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Area or compile-time comparison tables across architectures.
    Report {
        #[command(subcommand)]
        what: ReportKind,
    },
}

#[derive(Args)]
struct ReportCommon {
    /// Comma-separated architectures, e.g. one,two,three,mram
    #[arg(long, default_value = "one,two,three,mram", value_delimiter = ',')]
    archs: Vec<String>,
    #[arg(long, value_enum, default_value = "md")]
    format: TableFormat,
    /// KISS2 files, one row each
    #[arg(required = true)]
    fsms: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum ReportKind {
    /// Exact RAM bits of minimally tailored instances.
    Area {
        #[command(flatten)]
        common: ReportCommon,
        /// Add one envelope row sizing a shared instance for all files
        #[arg(long)]
        multi: bool,
    },
    /// Median wall-clock time of profile + tailor + map.
    Time {
        #[command(flatten)]
        common: ReportCommon,
        /// Repetitions per measurement
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(exit_code(&err));
        }
    }
}

/// Distinct exit codes per failure class: 3 missing file, 4 unparseable
/// input, 5 machine does not fit, 6 over the bit cap, 1 anything else
/// (including a failed verification).
fn exit_code(err: &anyhow::Error) -> i32 {
    use ovl_core::Error as E;
    if let Some(e) = err.downcast_ref::<E>() {
        return match e {
            E::Parse { .. }
            | E::EmptyMachine
            | E::TooWide { .. }
            | E::Ambiguous { .. }
            | E::BitstreamFormat { .. }
            | E::VersionMismatch { .. }
            | E::ShapeMismatch(_)
            | E::StimulusWidth { .. } => 4,
            E::NotHostable(_) => 5,
            E::CapExceeded { .. } => 6,
            E::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 3,
            _ => 1,
        };
    }
    if let Some(io) = err.downcast_ref::<std::io::Error>() {
        if io.kind() == std::io::ErrorKind::NotFound {
            return 3;
        }
    }
    1
}

fn bit_cap() -> Result<u128> {
    match std::env::var("OVL_BIT_CAP") {
        Ok(v) => v
            .parse::<u128>()
            .with_context(|| format!("OVL_BIT_CAP {v:?} is not a bit count")),
        Err(_) => Ok(DEFAULT_BIT_CAP),
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

struct Loaded {
    name: String,
    fsm: CanonicalFsm,
    prof: FsmProfile,
}

fn load_fsm(path: &Path) -> Result<Loaded> {
    let parsed = kiss::parse(&read_file(path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    for w in &parsed.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    let mut ir = parsed.fsm;
    if ir.name == "fsm" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            ir.name = stem.to_string();
        }
    }
    let fsm = canonicalize(&ir).with_context(|| format!("canonicalizing {}", path.display()))?;
    let prof = profile(&fsm)?;
    Ok(Loaded {
        name: fsm.base.name.clone(),
        fsm,
        prof,
    })
}

fn parse_archs(names: &[String]) -> Result<Vec<Arch>> {
    names
        .iter()
        .map(|n| {
            Arch::from_name(n).with_context(|| format!("unknown architecture {n:?}"))
        })
        .collect()
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Analyze { fsm, csv } => {
            let loaded = load_fsm(&fsm)?;
            print!("{}", render_analysis(&loaded, csv));
            Ok(0)
        }
        Command::Size { arch, fsms } => {
            let arch: Arch = arch.into();
            let loaded: Vec<Loaded> = fsms.iter().map(|p| load_fsm(p)).collect::<Result<_>>()?;
            let profiles: Vec<FsmProfile> = loaded.iter().map(|l| l.prof.clone()).collect();
            let inst = if profiles.len() == 1 {
                tailor_single(&profiles[0], arch)
            } else {
                let joint = envelope(&profiles);
                println!(
                    "# envelope of {} machines",
                    profiles.len()
                );
                tailor_single(&joint, arch)
            };
            print!("{}", ovl_core::emit_instance(&inst));
            println!();
            let shapes = ram_shapes(&inst)?;
            println!("{:<24}{:>12}{:>8}{:>14}", "section", "depth", "width", "bits");
            for s in &shapes {
                println!("{:<24}{:>12}{:>8}{:>14}", s.name, s.depth, s.width, s.bits);
            }
            println!("total {}", total_bits(&inst)?);
            Ok(0)
        }
        Command::Map {
            arch,
            instance,
            fsm,
            out,
        } => {
            let loaded = load_fsm(&fsm)?;
            let inst = resolve_instance(arch, instance.as_deref(), &loaded.prof)?;
            let bits = map(&loaded.fsm, &loaded.prof, &inst, bit_cap()?)?;
            std::fs::write(&out, write_bitstream(&bits))
                .with_context(|| format!("writing {}", out.display()))?;
            println!(
                "wrote {}: {} for {} ({} RAM bits)",
                out.display(),
                inst.arch,
                loaded.name,
                total_bits(&inst)?
            );
            Ok(0)
        }
        Command::Sim {
            bitstream,
            stimulus,
            format,
        } => {
            let bits = read_bitstream_with_cap(&read_file(&bitstream)?, bit_cap()?)
                .with_context(|| format!("loading {}", bitstream.display()))?;
            let i_total = bits.inst.i_total;
            let mut sim = OverlaySim::new(bits)?;
            let vectors = parse_stimulus(&read_file(&stimulus)?, i_total)
                .with_context(|| format!("parsing {}", stimulus.display()))?;
            let trace = sim.run(&vectors);
            match format {
                TraceFormat::Text => print!("{}", render_trace_text(&trace)),
                TraceFormat::Csv => print!("{}", render_trace_csv(&trace)),
            }
            Ok(0)
        }
        Command::Verify {
            arch,
            fsm,
            exhaustive,
            random,
            seed,
        } => {
            let loaded = load_fsm(&fsm)?;
            let arch: Arch = arch.into();
            let inst = tailor_single(&loaded.prof, arch);
            let bits = map(&loaded.fsm, &loaded.prof, &inst, bit_cap()?)?;
            let sim = OverlaySim::new(bits)?;
            let strategy = if let Some(steps) = random {
                Strategy::Random { seed, steps }
            } else if exhaustive || loaded.fsm.num_inputs() <= 16 {
                Strategy::Exhaustive
            } else {
                Strategy::Random { seed, steps: 10_000 }
            };
            let verdict = verify_equivalence(&loaded.fsm, &sim, strategy)?;
            if verdict.equivalent {
                println!("equivalent ({} checks)", verdict.coverage.1);
                Ok(0)
            } else {
                let ce = verdict.counterexample.expect("mismatch carries a witness");
                println!(
                    "NOT equivalent: state={} inputs={:0width$b} expected next={} out={} got next={} out={}",
                    ce.state,
                    ce.inputs,
                    ce.expected_next,
                    ce.expected_outputs,
                    ce.actual_next,
                    ce.actual_outputs,
                    width = loaded.fsm.num_inputs() as usize,
                );
                Ok(1)
            }
        }
        Command::Report { what } => {
            let (common, multi, reps) = match what {
                ReportKind::Area { common, multi } => (common, Some(multi), None),
                ReportKind::Time { common, reps } => (common, None, Some(reps)),
            };
            let archs = parse_archs(&common.archs)?;
            let loaded: Vec<Loaded> = common
                .fsms
                .iter()
                .map(|p| load_fsm(p))
                .collect::<Result<_>>()?;
            match (multi, reps) {
                (Some(multi), _) => {
                    let mut rows: Vec<(String, Vec<FsmProfile>)> = loaded
                        .iter()
                        .map(|l| (l.name.clone(), vec![l.prof.clone()]))
                        .collect();
                    if multi && loaded.len() > 1 {
                        rows.push((
                            "multi".to_string(),
                            loaded.iter().map(|l| l.prof.clone()).collect(),
                        ));
                    }
                    let table = area_table(&rows, &archs);
                    match common.format {
                        TableFormat::Md => print!("{}", table.to_markdown()),
                        TableFormat::Csv => print!("{}", table.to_csv()),
                    }
                }
                (_, Some(reps)) => {
                    let rows: Vec<(String, CanonicalFsm)> = loaded
                        .iter()
                        .map(|l| (l.name.clone(), l.fsm.clone()))
                        .collect();
                    let table = timing_report(&rows, &archs, reps);
                    match common.format {
                        TableFormat::Md => print!("{}", table.to_markdown()),
                        TableFormat::Csv => print!("{}", table.to_csv()),
                    }
                }
                _ => unreachable!(),
            }
            Ok(0)
        }
    }
}

fn resolve_instance(
    arch: Option<ArchArg>,
    config: Option<&Path>,
    prof: &FsmProfile,
) -> Result<InstanceSpec> {
    match (config, arch) {
        (Some(path), _) => {
            let inst = parse_instance(&read_file(path)?)
                .with_context(|| format!("parsing instance config {}", path.display()))?;
            Ok(inst)
        }
        (None, Some(arch)) => Ok(tailor_single(prof, arch.into())),
        (None, None) => bail!("either --arch or --instance is required"),
    }
}

fn render_analysis(loaded: &Loaded, csv: bool) -> String {
    let prof = &loaded.prof;
    let fsm = &loaded.fsm;
    let mut out = String::new();
    if csv {
        out.push_str("state,ei_count,effective_inputs\n");
        for sp in &prof.per_state {
            let inputs: Vec<String> = sp.effective_inputs.iter().map(u32::to_string).collect();
            out.push_str(&format!(
                "{},{},{}\n",
                fsm.base.states[sp.state],
                sp.ei_count,
                inputs.join(";")
            ));
        }
        return out;
    }
    out.push_str(&format!(
        "fsm {}: states={} inputs={} outputs={} transitions={} t_state_max={} ei_max={}\n",
        loaded.name,
        prof.s_total,
        prof.i_total,
        prof.o_total,
        prof.t_max(),
        prof.t_state_max,
        prof.ei_max
    ));
    out.push_str(&format!("{:<16}{:>9}  {}\n", "state", "ei_count", "effective_inputs"));
    for sp in &prof.per_state {
        let inputs: Vec<String> = sp.effective_inputs.iter().map(u32::to_string).collect();
        out.push_str(&format!(
            "{:<16}{:>9}  {}\n",
            fsm.base.states[sp.state],
            sp.ei_count,
            inputs.join(" ")
        ));
    }
    out
}
