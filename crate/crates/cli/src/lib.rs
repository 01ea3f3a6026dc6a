//! Command-line front end for `randkol`.
//!
//! [`run`] parses arguments, dispatches a subcommand and returns the exit
//! code: 0 success, 1 usage error, 2 domain error or failed check, 3 resource
//! limit or I/O error.

pub mod args;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::io::{self, BufWriter, Write};

use clap::error::ErrorKind as ClapKind;
use clap::Parser;
use serde_json::json;

use randkol::exact::{markov_xn_enum, MAX_ENUM_N};
use randkol::stats::density_counts;
use randkol::verify::{run_all, Scale};
use randkol::{
    corr_closed, corr_enum, default_checkpoints, density_trace, p_xn_closed, p_xn_enum, parse_spec,
    selfref_trace, snk_listing, snk_partition, stream_new, Alphabet, Checkpoint, DensityTrace,
    ErrorKind, Letter, MCResult, Probability, Seed,
};

use args::{
    Cli, Command, CorrelateArgs, DensityArgs, ExactArgs, GenerateArgs, Mode, SelfrefArgs, SnkArgs,
    VerifyArgs,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(randkol::Error),
    Io(io::Error),
    /// Some verification check failed; the report was already printed.
    ChecksFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Usage => EXIT_USAGE,
                ErrorKind::Domain => EXIT_DOMAIN,
                ErrorKind::ResourceLimit => EXIT_RESOURCE,
            },
            CliError::Io(_) => EXIT_RESOURCE,
            CliError::ChecksFailed(_) => EXIT_DOMAIN,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
            CliError::ChecksFailed(n) => write!(f, "{n} check(s) failed"),
        }
    }
}

impl From<randkol::Error> for CliError {
    fn from(e: randkol::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Runs the CLI on `argv` (including the program name), writing normal
/// output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ClapKind::DisplayHelp | ClapKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                ClapKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = Ctx::new(&cli).and_then(|ctx| dispatch(&cli, &ctx, out));
    let flushed = out.flush().map_err(CliError::from);
    match result.and(flushed) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "randkol: {e}");
            e.exit_code()
        }
    }
}

/// Execution context: output format and the worker pool sized by `--threads`.
struct Ctx {
    json: bool,
    pool: Option<rayon::ThreadPool>,
}

impl Ctx {
    fn new(cli: &Cli) -> CliResult<Self> {
        let pool = match cli.threads {
            Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
            Some(n) => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(io::Error::other)?,
            ),
            None => None,
        };
        Ok(Ctx {
            json: cli.json,
            pool,
        })
    }

    /// Runs `f` on the configured pool (or rayon's global pool).
    fn compute<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }
}

fn dispatch(cli: &Cli, ctx: &Ctx, out: &mut dyn Write) -> CliResult {
    match &cli.command {
        Command::Generate(a) => generate(a, ctx, out),
        Command::Density(a) => density(a, ctx, out),
        Command::Exact(a) => exact(a, ctx, out),
        Command::Snk(a) => snk(a, ctx, out),
        Command::Correlate(a) => correlate(a, ctx, out),
        Command::Selfref(a) => selfref(a, ctx, out),
        Command::Verify(a) => verify(a, ctx, out),
    }
}

fn print_json(out: &mut dyn Write, value: serde_json::Value) -> CliResult {
    serde_json::to_writer_pretty(&mut *out, &value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn generate(a: &GenerateArgs, ctx: &Ctx, out: &mut dyn Write) -> CliResult {
    let json = ctx.json;
    let spec = parse_spec(&a.spec)?;
    let seed = Seed(a.seed);
    let mut stream = stream_new(&spec, seed);
    let contiguous = spec.alphabet().hi().value() < 10;
    if json {
        let letters: Vec<u8> = stream
            .by_ref()
            .take(a.length as usize)
            .map(Letter::value)
            .collect();
        let mut summary = json!({
            "version": VERSION,
            "spec": spec.to_string(),
            "seed": a.seed,
            "length": a.length,
        });
        if a.runs {
            summary["runs"] = json!(runs_of(&letters));
        } else {
            summary["letters"] = json!(join_letters(&letters, contiguous));
        }
        return print_json(out, summary);
    }
    let mut w = BufWriter::new(out);
    if a.runs {
        let mut current: Option<(u8, u64)> = None;
        for l in stream.by_ref().take(a.length as usize) {
            let v = l.value();
            current = match current {
                Some((c, len)) if c == v => Some((c, len + 1)),
                Some((c, len)) => {
                    writeln!(w, "({c},{len})")?;
                    Some((v, 1))
                }
                None => Some((v, 1)),
            };
        }
        if let Some((c, len)) = current {
            writeln!(w, "({c},{len})")?;
        }
    } else {
        let mut buf = itoa_buf();
        for (i, l) in stream.by_ref().take(a.length as usize).enumerate() {
            if !contiguous && i > 0 {
                w.write_all(b",")?;
            }
            w.write_all(buf.format(l.value()))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Small allocation-free decimal formatter for letters.
struct LetterDigits([u8; 3]);

fn itoa_buf() -> LetterDigits {
    LetterDigits([0; 3])
}

impl LetterDigits {
    fn format(&mut self, v: u8) -> &[u8] {
        let mut i = 3;
        let mut v = v;
        loop {
            i -= 1;
            self.0[i] = b'0' + v % 10;
            v /= 10;
            if v == 0 {
                break;
            }
        }
        &self.0[i..]
    }
}

fn join_letters(letters: &[u8], contiguous: bool) -> String {
    let sep = if contiguous { "" } else { "," };
    letters
        .iter()
        .map(u8::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}

fn runs_of(letters: &[u8]) -> Vec<(u8, u64)> {
    let mut runs: Vec<(u8, u64)> = Vec::new();
    for &v in letters {
        match runs.last_mut() {
            Some((c, len)) if *c == v => *len += 1,
            _ => runs.push((v, 1)),
        }
    }
    runs
}

fn density(a: &DensityArgs, ctx: &Ctx, out: &mut dyn Write) -> CliResult {
    let json = ctx.json;
    let spec = parse_spec(&a.spec)?;
    let seed = Seed(a.seed);
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if a.trials == 1 {
        let checkpoints = a
            .checkpoints
            .clone()
            .unwrap_or_else(|| default_checkpoints(a.length));
        let trace = density_trace(&spec, a.length, &checkpoints, seed)?;
        output::emit_csv(&trace, &a.csv)?;
        let last = trace.last().copied().unwrap_or(Checkpoint::new(0, 0));
        if json {
            return print_json(
                out,
                json!({
                    "version": VERSION,
                    "spec": spec.to_string(),
                    "seed": a.seed,
                    "length": a.length,
                    "trials": 1,
                    "letter": spec.alphabet().lo().value(),
                    "checkpoints": trace.checkpoints,
                }),
            );
        }
        writeln!(
            out,
            "position={} count_lo={} count_hi={} density_lo={}",
            last.position,
            last.count_lo,
            last.count_hi,
            output::sig12(last.density_lo)
        )?;
        return Ok(());
    }
    if a.checkpoints.is_some() {
        return Err(CliError::Usage(
            "--checkpoints applies to single-trial traces only".into(),
        ));
    }
    let counts = ctx.compute(|| density_counts(&spec, a.length, a.trials, seed))?;
    let rows: Vec<(u64, Checkpoint)> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as u64, Checkpoint::new(a.length, c)))
        .collect();
    output::emit_trials_csv(&rows, &a.csv)?;
    let mc = MCResult::from_counts(&counts, a.length, seed);
    if json {
        return print_json(
            out,
            json!({
                "version": VERSION,
                "spec": spec.to_string(),
                "seed": a.seed,
                "length": a.length,
                "trials": a.trials,
                "letter": spec.alphabet().lo().value(),
                "mean": mc.mean(),
                "stderr": mc.stderr(),
                "terminal": rows.iter().map(|(i, c)| json!({"trial": i, "checkpoint": c})).collect::<Vec<_>>(),
            }),
        );
    }
    writeln!(
        out,
        "trials={} length={} mean_density_lo={} stderr={}",
        a.trials,
        a.length,
        output::sig12(mc.mean()),
        output::sig12(mc.stderr())
    )?;
    Ok(())
}

fn parse_alphabet(text: &str) -> CliResult<Alphabet> {
    let bad = || CliError::Usage(format!("--alphabet expects two letters a,b; got {text:?}"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    Ok(Alphabet::from_pair(Letter::new(a)?, Letter::new(b)?)?)
}

/// Runs the oracle when `n` is small enough, or fails if it was required.
fn oracle_value<F>(n: u64, required: bool, f: F) -> CliResult<Option<f64>>
where
    F: FnOnce(usize) -> randkol::Result<f64>,
{
    if n as usize <= MAX_ENUM_N || required {
        let n = usize::try_from(n).unwrap_or(usize::MAX);
        return Ok(Some(f(n)?));
    }
    Ok(None)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| x.to_string())
}

fn exact(a: &ExactArgs, ctx: &Ctx, out: &mut dyn Write) -> CliResult {
    let json = ctx.json;
    let p = Probability::new(a.p)?;
    let alphabet = parse_alphabet(&a.alphabet)?;
    if a.n == 0 {
        return Err(randkol::Error::Domain("n must be at least 1".into()).into());
    }
    match a.mode {
        Mode::Iid => {
            if a.start.is_some() {
                return Err(CliError::Usage(
                    "--start applies to --mode markov only".into(),
                ));
            }
            let closed = match p_xn_closed(p, a.n, alphabet) {
                Ok(v) => Some(v.get()),
                Err(randkol::Error::OutOfRange { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let oracle = ctx.compute(|| {
                oracle_value(a.n, a.oracle, |n| {
                    p_xn_enum(p, n, alphabet, alphabet.lo()).map(Probability::get)
                })
            })?;
            if closed.is_none() && oracle.is_none() {
                // Surface the closed form's range error.
                p_xn_closed(p, a.n, alphabet)?;
            }
            if json {
                return print_json(
                    out,
                    json!({
                        "version": VERSION, "mode": "iid", "p": a.p,
                        "alphabet": [alphabet.lo().value(), alphabet.hi().value()],
                        "n": a.n, "letter": alphabet.lo().value(),
                        "closed": closed, "oracle": oracle,
                    }),
                );
            }
            writeln!(out, "closed={} oracle={}", fmt_opt(closed), fmt_opt(oracle))?;
        }
        Mode::Markov => {
            let start = match a.start {
                Some(s) => Letter::new(s)?,
                None => alphabet.lo(),
            };
            // The limit 1/2 holds over {1,a}; over {a,b} with a > 1 it is unknown.
            let limit = (alphabet.lo() == Letter::ONE).then_some(0.5);
            let oracle = ctx.compute(|| {
                oracle_value(a.n, a.oracle, |n| {
                    markov_xn_enum(p, n, alphabet, start).map(Probability::get)
                })
            })?;
            if json {
                return print_json(
                    out,
                    json!({
                        "version": VERSION, "mode": "markov", "p": a.p,
                        "alphabet": [alphabet.lo().value(), alphabet.hi().value()],
                        "start": start.value(), "n": a.n, "letter": alphabet.lo().value(),
                        "limit": limit, "oracle": oracle,
                    }),
                );
            }
            writeln!(out, "limit={} oracle={}", fmt_opt(limit), fmt_opt(oracle))?;
        }
    }
    Ok(())
}

fn snk(a: &SnkArgs, ctx: &Ctx, out: &mut dyn Write) -> CliResult {
    let json = ctx.json;
    let (table, listing) = ctx.compute(|| -> CliResult<_> {
        let table = snk_partition(a.n)?;
        let listing = if a.list {
            Some(snk_listing(a.n)?)
        } else {
            None
        };
        Ok((table, listing))
    })?;
    if json {
        let mut summary = json!({
            "version": VERSION,
            "n": table.n,
            "sizes": (1..=table.n).map(|k| json!({"k": k, "size": table.size(k)})).collect::<Vec<_>>(),
            "total": table.total(),
        });
        if let Some(listing) = &listing {
            summary["tuples"] = listing
                .iter()
                .map(|(w, k)| json!({"tuple": w.values(), "k": k}))
                .collect();
        }
        return print_json(out, summary);
    }
    let mut w = BufWriter::new(out);
    for k in 1..=table.n {
        writeln!(w, "k={k} size={}", table.size(k))?;
    }
    writeln!(w, "total={}", table.total())?;
    if let Some(listing) = listing {
        for (t, k) in listing {
            writeln!(w, "{} -> {k}", join_letters(&t.values(), false))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn correlate(a: &CorrelateArgs, ctx: &Ctx, out: &mut dyn Write) -> CliResult {
    let json = ctx.json;
    let p = Probability::new(a.p)?;
    if a.m == 0 || a.n <= a.m {
        return Err(randkol::Error::Domain("need 1 <= m < n".into()).into());
    }
    let closed = match corr_closed(p, a.m, a.n) {
        Ok(v) => Some(v),
        Err(randkol::Error::OutOfRange { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let m = a.m as usize;
    let oracle = ctx.compute(|| oracle_value(a.n, a.oracle, |n| corr_enum(p, m, n)))?;
    if closed.is_none() && oracle.is_none() {
        corr_closed(p, a.m, a.n)?;
    }
    if json {
        return print_json(
            out,
            json!({
                "version": VERSION, "p": a.p, "m": a.m, "n": a.n,
                "closed": closed, "oracle": oracle,
            }),
        );
    }
    writeln!(out, "closed={} oracle={}", fmt_opt(closed), fmt_opt(oracle))?;
    Ok(())
}

fn selfref(a: &SelfrefArgs, ctx: &Ctx, out: &mut dyn Write) -> CliResult {
    let json = ctx.json;
    let checkpoints = a
        .checkpoints
        .clone()
        .unwrap_or_else(|| default_checkpoints(a.length));
    let mut grid = checkpoints.clone();
    if grid.last() != Some(&a.length) {
        grid.push(a.length);
    }
    let counts = selfref_trace(a.length, &grid)?;
    let trace = DensityTrace {
        checkpoints: counts
            .iter()
            .filter(|c| checkpoints.contains(&c.n))
            .map(|c| Checkpoint::new(c.n, c.x_ones))
            .collect(),
    };
    output::emit_csv(&trace, &a.csv)?;
    let last = counts.last().expect("grid is nonempty");
    let d = last.densities();
    let max_d_t_residual = counts
        .iter()
        .map(|c| c.densities().d_t_residual.abs())
        .fold(0.0, f64::max);
    if json {
        return print_json(
            out,
            json!({
                "version": VERSION,
                "n": a.length,
                "densities": d,
                "counts": last,
                "counting_gap": last.counting_gap(),
                "two_count_difference": last.o_twos as i128 - last.t_twos as i128,
                "max_abs_d_t_residual": max_d_t_residual,
                "checkpoints": trace.checkpoints,
            }),
        );
    }
    writeln!(
        out,
        "n={} d_T={} d_O={} residual_dO={} residual_dT={} twos_O_minus_T={}",
        a.length,
        output::sig12(d.d_t),
        output::sig12(d.d_o),
        d.d_o_residual.map_or_else(|| "n/a".into(), output::sig12),
        output::sig12(d.d_t_residual),
        last.o_twos as i128 - last.t_twos as i128
    )?;
    Ok(())
}

fn verify(a: &VerifyArgs, ctx: &Ctx, out: &mut dyn Write) -> CliResult {
    let json = ctx.json;
    let scale = if a.fast { Scale::fast() } else { Scale::full() };
    let outcomes = ctx.compute(|| run_all(scale));
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if json {
        print_json(
            out,
            json!({
                "version": VERSION,
                "fast": a.fast,
                "checks": outcomes.iter().map(|o| json!({"name": o.name, "passed": o.passed, "detail": o.detail})).collect::<Vec<_>>(),
                "failed": failed,
            }),
        )?;
    } else {
        for o in &outcomes {
            let tag = if o.passed { "PASS" } else { "FAIL" };
            writeln!(out, "{tag} {}: {}", o.name, o.detail)?;
        }
        writeln!(out, "{} passed, {} failed", outcomes.len() - failed, failed)?;
    }
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(())
}
