//! `ifeq`: filter search, bounds, simulation and figure data from the
//! command line.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use ifeq::code::CodeSpec;
use ifeq::dsp::Poly;
use ifeq::lattice::{default_n_max, select_filter, CandidateSource};
use ifeq::sim::csv::write_csv;
use ifeq::sim::{self, ChannelSpec, CodeChoice, DecoderKind, NamedCode, SimConfig};
use ifeq::spectral;
use ifeq::{db_to_linear, linear_to_db, Mode};

#[derive(Parser, Debug)]
#[command(name = "ifeq", version, about = "Cyclic-coded integer-forcing equalization toolkit")]
struct Cli {
    /// Worker threads for simulations and sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format; figure commands default to csv, the rest to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Zf,
    Mmse,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Zf => Mode::Zf,
            ModeArg::Mmse => Mode::Mmse,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DecoderArg {
    Auto,
    Ml,
    Hard,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select the integer filter I(D) for a channel.
    Filter(FilterArgs),
    /// Minkowski bound on the noise enhancement.
    Bound(BoundArgs),
    /// Roots, ZF-DFE noise, selected filter and rate bounds.
    Analyze(AnalyzeArgs),
    /// Monte Carlo simulation of the full chain.
    Simulate(SimulateArgs),
    /// Noise enhancement of 1 + aD^p over real a.
    FigTwoTap(TwoTapArgs),
    /// Noise enhancement of 1 + aD^p over complex a with |a| <= 0.99.
    FigTwoTapComplex(TwoTapComplexArgs),
    /// Distribution of the noise enhancement over random Gaussian channels.
    FigRandomPdf(RandomPdfArgs),
    /// Check that 1 + aD^p has the same noise enhancement for every delay p.
    CheckDelay(CheckDelayArgs),
}

#[derive(Args, Debug)]
struct ChannelArg {
    /// Taps as JSON (`[1, 0.9]`, complex taps as `[re, im]` pairs) or
    /// `@path` to a file holding the JSON.
    #[arg(long)]
    channel: String,
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[command(flatten)]
    channel: ChannelArg,
    #[arg(long, value_enum, default_value = "zf")]
    mode: ModeArg,
    /// Transmit power over unit noise, dB (MMSE only).
    #[arg(long, default_value_t = 20.0)]
    snr: f64,
    /// Largest filter length (default max(p+1, 2p+4)).
    #[arg(long)]
    nmax: Option<usize>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[command(flatten)]
    channel: ChannelArg,
    /// Smallest n in the minimum (default p+1).
    #[arg(long)]
    nmin: Option<usize>,
    #[arg(long)]
    nmax: Option<usize>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    channel: ChannelArg,
    #[arg(long, value_enum, default_value = "zf")]
    mode: ModeArg,
    #[arg(long, default_value_t = 20.0)]
    snr: f64,
    #[arg(long)]
    nmax: Option<usize>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Full configuration as JSON or `@path`; a previous result's JSON is
    /// accepted too. Other flags override its fields.
    #[arg(long)]
    config: Option<String>,
    /// Taps as JSON, `{"p": .., "seed": ..}` for a random channel, or `@path`.
    #[arg(long)]
    channel: Option<String>,
    /// Constellation power over unit noise, dB.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// `uncoded`, `parity`, `hamming74`, a JSON code `{"N","K","q","g"}`,
    /// or `@path`.
    #[arg(long)]
    code: Option<String>,
    /// Alphabet size (default 2^M with --m, else the code's own alphabet)
    #[arg(long)]
    q: Option<u32>,
    /// Bits per symbol for the multilevel construction.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nmax: Option<usize>,
    /// Block length of the uncoded and parity codes.
    #[arg(long)]
    block_length: Option<usize>,
    #[arg(long, value_enum)]
    decoder: Option<DecoderArg>,
    #[arg(long, conflicts_with = "no_dither")]
    dither: bool,
    #[arg(long)]
    no_dither: bool,
    /// Turn the channel noise off.
    #[arg(long)]
    noiseless: bool,
}

#[derive(Args, Debug)]
struct TwoTapArgs {
    #[arg(long, default_value_t = -0.99, allow_negative_numbers = true)]
    a_min: f64,
    #[arg(long, default_value_t = 0.99, allow_negative_numbers = true)]
    a_max: f64,
    #[arg(long, default_value_t = 0.01)]
    a_step: f64,
    /// Delay of the second tap.
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long)]
    nmax: Option<usize>,
}

#[derive(Args, Debug)]
struct TwoTapComplexArgs {
    /// Points per axis over [-0.99, 0.99].
    #[arg(long, default_value_t = 41)]
    grid: usize,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long)]
    nmax: Option<usize>,
}

#[derive(Args, Debug)]
struct RandomPdfArgs {
    /// Channel memories, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
    p: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Histogram bins (default: Freedman-Diaconis).
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    nmax: Option<usize>,
}

#[derive(Args, Debug)]
struct CheckDelayArgs {
    /// `re` or `re,im`.
    #[arg(long, allow_negative_numbers = true)]
    a: String,
    #[arg(long, value_delimiter = ',', default_value = "1,3")]
    p: Vec<usize>,
}

fn read_arg(s: &str) -> anyhow::Result<String> {
    match s.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {path}")),
        None => Ok(s.to_string()),
    }
}

fn parse_json(s: &str, what: &str) -> anyhow::Result<Value> {
    let text = read_arg(s)?;
    serde_json::from_str(&text).map_err(|e| input(format!("{what} is not valid JSON: {e}")))
}

fn input(msg: String) -> anyhow::Error {
    ifeq::Error::InvalidInput(msg).into()
}

fn parse_taps(v: &Value) -> anyhow::Result<Vec<Complex64>> {
    let arr = v.as_array().ok_or_else(|| input("channel must be a JSON array".into()))?;
    arr.iter()
        .map(|t| match t {
            Value::Number(n) => Ok(Complex64::new(n.as_f64().unwrap_or(f64::NAN), 0.0)),
            Value::Array(p) if p.len() == 2 && p.iter().all(Value::is_number) => {
                Ok(Complex64::new(p[0].as_f64().unwrap_or(f64::NAN), p[1].as_f64().unwrap_or(f64::NAN)))
            }
            other => Err(input(format!("channel tap {other} is neither a number nor a [re, im] pair"))),
        })
        .collect()
}

fn parse_channel(s: &str) -> anyhow::Result<Poly> {
    let taps = parse_taps(&parse_json(s, "channel")?)?;
    if taps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(input("channel taps must be finite".into()));
    }
    Ok(Poly::new(taps)?)
}

fn taps_json(h: &Poly) -> Value {
    if h.is_real() {
        json!(h.real_coeffs())
    } else {
        json!(h.coeffs().iter().map(|c| [c.re, c.im]).collect::<Vec<_>>())
    }
}

fn parse_sim_channel(s: &str) -> anyhow::Result<ChannelSpec> {
    let v = parse_json(s, "channel")?;
    if v.is_object() {
        return serde_json::from_value(v).map_err(|e| input(format!("random channel spec: {e}")));
    }
    let taps = parse_taps(&v)?;
    if taps.iter().any(|c| c.im != 0.0) {
        return Err(ifeq::Error::Unsupported("the simulator handles real channels only".into()).into());
    }
    Ok(ChannelSpec::Taps(taps.iter().map(|c| c.re).collect()))
}

fn parse_code(s: &str) -> anyhow::Result<CodeChoice> {
    match s {
        "uncoded" => return Ok(CodeChoice::Named(NamedCode::Uncoded)),
        "parity" => return Ok(CodeChoice::Named(NamedCode::Parity)),
        "hamming74" => return Ok(CodeChoice::Named(NamedCode::Hamming74)),
        _ => {}
    }
    let v = parse_json(s, "code")?;
    let spec: CodeSpec = serde_json::from_value(v).map_err(|e| input(format!("code spec: {e}")))?;
    Ok(CodeChoice::Spec(spec))
}

/// Stdout or the `--out` file.
struct Sink(Option<PathBuf>);

impl Sink {
    fn writer(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.0 {
            Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
            None => Box::new(std::io::stdout().lock()),
        })
    }

    fn json(&self, v: &Value) -> anyhow::Result<()> {
        let mut w = self.writer()?;
        serde_json::to_writer_pretty(&mut w, v)?;
        writeln!(w)?;
        Ok(())
    }

    fn csv<R: serde::Serialize>(&self, config: &Value, extra: &[(&str, String)], rows: &[R]) -> anyhow::Result<()> {
        write_csv(self.writer()?, config, extra, rows)?;
        Ok(())
    }
}

/// `{"config": config, ...fields of body}`.
fn with_config(config: Value, body: impl serde::Serialize) -> anyhow::Result<Value> {
    let mut out = serde_json::Map::new();
    out.insert("config".into(), config);
    match serde_json::to_value(body)? {
        Value::Object(m) => out.extend(m),
        other => {
            out.insert("result".into(), other);
        }
    }
    Ok(Value::Object(out))
}

fn grid(lo: f64, hi: f64, step: f64) -> anyhow::Result<Vec<f64>> {
    if !(step > 0.0 && hi >= lo) {
        bail!(input(format!("empty grid {lo}..{hi} step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    // rounding keeps values such as 0.5 exact
    Ok((0..=n).map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12).collect())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let sink = Sink(cli.out.clone());
    let fmt = |default: Format| cli.format.unwrap_or(default);
    match cli.command {
        Command::Filter(a) => {
            let h = parse_channel(&a.channel.channel)?;
            let mode = Mode::from(a.mode);
            let n_max = a.nmax.unwrap_or_else(|| default_n_max(&h));
            let snr = db_to_linear(a.snr);
            let res = select_filter(&h, n_max, mode, snr)?;
            let gamma = spectral::sigma2_zf_dfe(&h).ok().map(|z| res.sigma2 / z);
            let config = json!({"channel": taps_json(&h), "mode": mode, "snr_db": a.snr, "nmax": n_max});
            if fmt(Format::Json) == Format::Csv {
                let rows: Vec<CandidateRow> = res
                    .all_candidates
                    .iter()
                    .map(|c| CandidateRow {
                        n: c.n,
                        filter: serde_json::to_string(&c.filter).expect("filters serialize"),
                        sigma2: c.sigma2,
                        source: c.source,
                    })
                    .collect();
                let extra = [("filter", serde_json::to_string(&res.filter)?), ("sigma2", res.sigma2.to_string())];
                return sink.csv(&config, &extra, &rows);
            }
            let mut v = with_config(config, &res)?;
            if let Some(g) = gamma {
                v["gamma"] = json!(g);
                v["gamma_db"] = json!(linear_to_db(g));
            }
            sink.json(&v)
        }
        Command::Bound(a) => {
            let h = parse_channel(&a.channel.channel)?;
            let p = spectral::channel_roots(&h)?.len();
            let n_min = a.nmin.unwrap_or(p + 1);
            let n_max = a.nmax.unwrap_or_else(|| default_n_max(&h)).max(n_min);
            let mut report = spectral::minkowski_bound(&h, n_min, n_max)?;
            let best = select_filter(&h, n_max, Mode::Zf, 1.0)?;
            let gamma = best.sigma2 / report.sigma2_zf_dfe;
            report = report.with_gamma(gamma)?;
            let config = json!({"channel": taps_json(&h), "nmin": n_min, "nmax": n_max});
            if fmt(Format::Json) == Format::Csv {
                let extra = [
                    ("bound", report.bound.to_string()),
                    ("n_star", report.n_star.to_string()),
                    ("gamma", report.gamma.unwrap_or(f64::NAN).to_string()),
                ];
                return sink.csv(&config, &extra, &report.rows);
            }
            let mut v = with_config(config, &report)?;
            v["filter"] = serde_json::to_value(&best.filter)?;
            sink.json(&v)
        }
        Command::Analyze(a) => {
            let h = parse_channel(&a.channel.channel)?;
            let mode = Mode::from(a.mode);
            let snr = db_to_linear(a.snr);
            let analysis = spectral::analyze_channel(&h)?;
            let n_max = a.nmax.unwrap_or_else(|| default_n_max(&h));
            let config = json!({"channel": taps_json(&h), "mode": mode, "snr_db": a.snr, "nmax": n_max});
            let mut v = with_config(config.clone(), &analysis)?;
            match select_filter(&h, n_max, mode, snr) {
                Ok(best) => {
                    v["filter"] = serde_json::to_value(&best.filter)?;
                    v["sigma2"] = json!(best.sigma2);
                    if analysis.is_paley_wiener {
                        let mi = spectral::mi_lower_bound(&h, &best.filter, snr, mode)?;
                        v["rate_lower_bound_bits"] = json!(mi.bits);
                        v["gamma"] = json!(mi.gamma);
                        v["gap_db"] = json!(mi.gap_db);
                        v["capacity_high_snr_bits"] = json!(spectral::capacity_high_snr(&h, snr)?);
                    }
                }
                Err(e) if !analysis.is_paley_wiener => v["filter_error"] = json!(e.to_string()),
                Err(e) => return Err(e.into()),
            }
            if fmt(Format::Json) == Format::Csv {
                let rows: Vec<RootRow> = analysis
                    .roots
                    .iter()
                    .map(|z| RootRow { re: z[0], im: z[1], modulus: z[0].hypot(z[1]) })
                    .collect();
                let extra: Vec<(&str, String)> = ["sigma2_zf_dfe", "alpha", "filter", "sigma2", "gamma", "gap_db"]
                    .iter()
                    .filter(|k| !v[**k].is_null())
                    .map(|k| (*k, v[*k].to_string()))
                    .collect();
                return sink.csv(&config, &extra, &rows);
            }
            sink.json(&v)
        }
        Command::Simulate(a) => {
            let cfg = simulate_config(&a)?;
            let res = sim::run(&cfg)?;
            if fmt(Format::Json) == Format::Csv {
                let row = SimRow {
                    filter: serde_json::to_string(&res.filter)?,
                    trials: res.trials,
                    symbols: res.symbols,
                    symbol_errors: res.symbol_errors,
                    ser: res.ser,
                    ser_lo: res.ser_ci[0],
                    ser_hi: res.ser_ci[1],
                    block_errors: res.block_errors,
                    bler: res.bler,
                    bler_lo: res.bler_ci[0],
                    bler_hi: res.bler_ci[1],
                    sigma2_analytic: res.sigma2_analytic,
                    sigma2_empirical: res.sigma2_empirical,
                };
                return sink.csv(&serde_json::to_value(&res.config)?, &[], &[row]);
            }
            sink.json(&serde_json::to_value(&res)?)
        }
        Command::FigTwoTap(a) => {
            let g = grid(a.a_min, a.a_max, a.a_step)?;
            let rows = sim::sweep_two_tap_real(&g, a.p, a.nmax)?;
            let config = json!({"a_min": a.a_min, "a_max": a.a_max, "a_step": a.a_step, "p": a.p, "nmax": a.nmax});
            if fmt(Format::Csv) == Format::Json {
                return sink.json(&with_config(config, json!({"rows": rows}))?);
            }
            sink.csv(&config, &[], &rows)
        }
        Command::FigTwoTapComplex(a) => {
            if a.grid < 2 {
                bail!(input("grid needs at least two points per axis".into()));
            }
            let axis: Vec<f64> =
                (0..a.grid).map(|k| -0.99 + 1.98 * k as f64 / (a.grid - 1) as f64).collect();
            let rows = sim::sweep_two_tap_complex(&axis, &axis, a.p, a.nmax)?;
            let config = json!({"grid": a.grid, "p": a.p, "nmax": a.nmax, "radius": 0.99});
            let search = (
                "search",
                "LLL on every n, plus exact enumeration of the best monic vector for lattices of up to 8 \
                 real dimensions (n <= 4)"
                    .to_string(),
            );
            if fmt(Format::Csv) == Format::Json {
                return sink.json(&with_config(config, json!({"rows": rows, "search": search.1}))?);
            }
            sink.csv(&config, &[search], &rows)
        }
        Command::FigRandomPdf(a) => {
            let reports = sim::random_channel_pdf(&a.p, a.samples, a.seed, a.bins, a.nmax)?;
            let config = json!({"p": a.p, "samples": a.samples, "seed": a.seed, "bins": a.bins, "nmax": a.nmax});
            if fmt(Format::Csv) == Format::Json {
                return sink.json(&with_config(config, json!({"reports": reports}))?);
            }
            let mut rows = Vec::new();
            let mut extra = Vec::new();
            for r in &reports {
                extra.push(("median_db", format!("p={} {}", r.p, r.median_db)));
                extra.push(("redraws", format!("p={} {}", r.p, r.redraws)));
                rows.extend(r.histogram.iter().map(|b| PdfRow {
                    p: r.p,
                    lo_db: b.lo,
                    hi_db: b.hi,
                    center_db: 0.5 * (b.lo + b.hi),
                    count: b.count,
                    density: b.density,
                }));
            }
            sink.csv(&config, &extra, &rows)
        }
        Command::CheckDelay(a) => {
            let parts: Vec<f64> = a
                .a
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| input(format!("--a: {e}")))?;
            let coef = match parts.as_slice() {
                [re] => Complex64::new(*re, 0.0),
                [re, im] => Complex64::new(*re, *im),
                _ => bail!(input("--a takes `re` or `re,im`".into())),
            };
            let report = sim::delay_invariance_check(coef, &a.p)?;
            let config = json!({"a": [coef.re, coef.im], "p": a.p});
            if fmt(Format::Json) == Format::Csv {
                let extra = [("ok", report.ok.to_string()), ("base_gamma", report.base_gamma.to_string())];
                return sink.csv(&config, &extra, &report.rows);
            }
            sink.json(&with_config(config, &report)?)
        }
    }
}

#[derive(serde::Serialize)]
struct CandidateRow {
    n: usize,
    filter: String,
    sigma2: f64,
    source: CandidateSource,
}

#[derive(serde::Serialize)]
struct RootRow {
    re: f64,
    im: f64,
    modulus: f64,
}

#[derive(serde::Serialize)]
struct SimRow {
    filter: String,
    trials: u64,
    symbols: u64,
    symbol_errors: u64,
    ser: f64,
    ser_lo: f64,
    ser_hi: f64,
    block_errors: u64,
    bler: f64,
    bler_lo: f64,
    bler_hi: f64,
    sigma2_analytic: f64,
    sigma2_empirical: f64,
}

#[derive(serde::Serialize)]
struct PdfRow {
    p: usize,
    lo_db: f64,
    hi_db: f64,
    center_db: f64,
    count: usize,
    density: f64,
}

fn simulate_config(a: &SimulateArgs) -> anyhow::Result<SimConfig> {
    let mut cfg = match &a.config {
        Some(s) => {
            let mut v = parse_json(s, "config")?;
            // a result file carries its configuration under "config"
            if let Some(inner) = v.get("config").cloned() {
                v = inner;
            }
            serde_json::from_value(v).map_err(|e| input(format!("config: {e}")))?
        }
        None => {
            let channel = a.channel.as_deref().ok_or_else(|| input("--channel or --config is required".into()))?;
            let code = parse_code(a.code.as_deref().unwrap_or("uncoded"))?;
            let q = match (a.q, a.m, &code) {
                (Some(q), _, _) => q,
                (None, Some(m), _) if m < 32 => 1 << m,
                (None, None, CodeChoice::Named(NamedCode::Hamming74)) => 2,
                (None, None, CodeChoice::Spec(s)) => s.q,
                _ => bail!(input("--q is required for this code".into())),
            };
            SimConfig::new(
                parse_sim_channel(channel)?,
                a.snr.ok_or_else(|| input("--snr is required".into()))?,
                a.mode.map_or(Mode::Zf, Mode::from),
                code,
                q,
            )
        }
    };
    if a.config.is_some() {
        if let Some(c) = &a.channel {
            cfg.channel = parse_sim_channel(c)?;
        }
        if let Some(s) = a.snr {
            cfg.snr_db = s;
        }
        if let Some(m) = a.mode {
            cfg.mode = m.into();
        }
        if let Some(c) = &a.code {
            cfg.code = parse_code(c)?;
        }
        if let Some(q) = a.q {
            cfg.q = q;
        }
    }
    if a.m.is_some() {
        cfg.m = a.m;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.nmax.is_some() {
        cfg.n_max = a.nmax;
    }
    if let Some(b) = a.block_length {
        cfg.block_length = b;
    }
    if let Some(d) = a.decoder {
        cfg.decoder = match d {
            DecoderArg::Auto => DecoderKind::Auto,
            DecoderArg::Ml => DecoderKind::Ml,
            DecoderArg::Hard => DecoderKind::Hard,
        };
    }
    if a.dither {
        cfg.dither = Some(true);
    }
    if a.no_dither {
        cfg.dither = Some(false);
    }
    if a.noiseless {
        cfg.noiseless = true;
    }
    Ok(cfg)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<ifeq::Error>() {
        Some(ifeq::Error::Io(_)) => 2,
        Some(err) if err.is_input_error() => 2,
        Some(_) => 3,
        // file access and JSON problems are input errors
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
