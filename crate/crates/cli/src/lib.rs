//! Subcommand implementations behind the `permuton` binary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Map, Value};

use permuton::chains::{self, h_transform_row, h_transform_row_mc, martin_kernel, Boundary};
use permuton::copula::{copula_by_name, pattern_law_exact, pattern_law_mc};
use permuton::datasets::{CITY_TABLE_COUNTS, CITY_TABLE_FREQUENCIES};
use permuton::indep::{self, Pattern4Null};
use permuton::partitions::{self, cycle_type, cycle_type_pmf, CycleType, Weighting};
use permuton::patterns::{count_patterns, is_separable};
use permuton::queue::{busy_period_blocks, simulate_delay_model, trace_to_permutation, verify_inversion_bound, Mg1};
use permuton::{
    BivariateSample, Budget, Discipline, Error, Partition, PatternTable, Permutation, ServiceDist, TiePolicy, Trajectory,
    YoungLattice, ZArray,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(Error::Budget { .. }) => 4,
            CliError::Core(e) if e.is_data_error() => 3,
            CliError::Core(Error::Io(_) | Error::Unreachable(_)) => 3,
            CliError::Core(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "usage",
            3 => "data",
            4 => "budget",
            _ => "internal",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": self.to_string(), "kind": self.kind(), "code": self.exit_code() })
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug)]
#[command(name = "permuton", version, about = "Permutation patterns, permutons and growth chains")]
pub struct Cli {
    /// Input file (CSV with header `x,y`, or a one-line permutation).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rank permutations of a bivariate sample and its rank-plot points.
    Ranks(RanksArgs),
    /// Pattern counts and frequencies.
    Patterns(PatternsArgs),
    /// Independence tests.
    Test(TestArgs),
    /// Simulate a growth chain, queue or partition process.
    Simulate(SimulateArgs),
    /// Pattern law t(σ, C) of a copula.
    Law(LawArgs),
    /// Martin kernel and h-transform row of a permutation.
    Kernel(KernelArgs),
    /// Z-array encoding of a sample.
    Z(ZArgs),
    /// Partition statistics: dimension, hooks, cotransition weights.
    Partition(PartitionArgs),
    /// Young lattice edges with cotransition weights.
    Lattice(LatticeArgs),
}

#[derive(Args, Debug)]
pub struct RanksArgs {
    /// Order tied values by observation index instead of failing.
    #[arg(long)]
    pub break_ties: bool,
}

#[derive(Args, Debug)]
pub struct PatternsArgs {
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Permutation in one-line notation, e.g. 3,1,2 (instead of --input).
    #[arg(long)]
    pub perm: Option<String>,
    /// Compare with the published city-data table (k = 3 only).
    #[arg(long)]
    pub reference: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Kendall,
    Pattern3,
    #[value(name = "pattern3-joint", alias = "joint")]
    Pattern3Joint,
    Pattern4,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Pattern for the single-pattern test.
    #[arg(long, default_value = "3,1,2")]
    pub sigma: String,
    /// Observed frequency, used instead of data (pattern3 only; needs --n).
    #[arg(long)]
    pub t_obs: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Null replicates for the length-4 test.
    #[arg(long, default_value_t = 400)]
    pub m: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// F, H, copula:<name>, crp, plancherel, mg1 or delay.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub n: usize,
    /// Enumerate all randomness histories instead of sampling (F, H, crp; n ≤ 7).
    #[arg(long)]
    pub exact_enumerate: bool,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// det:<c>, exp:<rate> or pareto:<shape>[:<scale>].
    #[arg(long, default_value = "exp:1")]
    pub service: String,
    #[arg(long, default_value = "fifo")]
    pub discipline: String,
    #[arg(long)]
    pub allow_unstable: bool,
    /// Write the full trajectory (JSON lines) or queue trace (CSV) here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LawArgs {
    /// independence, min, countermonotone or mixture:<θ>.
    #[arg(long)]
    pub copula: String,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Monte Carlo draws; exact laws are used when omitted.
    #[arg(long)]
    pub m: Option<u64>,
}

#[derive(Args, Debug)]
pub struct KernelArgs {
    #[arg(long)]
    pub sigma: String,
    #[arg(long)]
    pub copula: String,
    /// Monte Carlo budget for copulas without an exact law.
    #[arg(long)]
    pub m: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ZArgs {
    /// Only the leading m×m corner.
    #[arg(long)]
    pub corner: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    /// Parts, e.g. 5,3,1.
    #[arg(long)]
    pub lambda: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    AtomRemoval,
    Dimension,
}

#[derive(Args, Debug)]
pub struct LatticeArgs {
    #[arg(long)]
    pub max_n: usize,
    #[arg(long, value_enum, default_value_t = WeightArg::Dimension)]
    pub weighting: WeightArg,
}

/// Runs one parsed invocation and returns the report text.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Ranks(a) => cmd_ranks(cli, a),
        Command::Patterns(a) => cmd_patterns(cli, a),
        Command::Test(a) => cmd_test(cli, a),
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Law(a) => cmd_law(cli, a),
        Command::Kernel(a) => cmd_kernel(cli, a),
        Command::Z(a) => cmd_z(cli, a),
        Command::Partition(a) => cmd_partition(cli, a),
        Command::Lattice(a) => cmd_lattice(cli, a),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn json_only(cli: &Cli, what: &str) -> Result<()> {
    if cli.format == Format::Csv {
        return Err(usage(format!("{what} has no CSV form; use --format json")));
    }
    Ok(())
}

fn read_input(cli: &Cli) -> Result<String> {
    let path = cli.input.as_ref().ok_or_else(|| usage("--input is required"))?;
    std::fs::read_to_string(path).map_err(|e| CliError::Core(Error::Io(format!("{}: {e}", path.display()))))
}

fn read_sample(cli: &Cli) -> Result<BivariateSample> {
    let text = read_input(cli)?;
    Ok(BivariateSample::read_csv(text.as_bytes())?)
}

/// Permutation from an explicit flag, or from the input file — either a
/// one-line permutation or a CSV sample reduced to its relating permutation.
fn read_permutation(cli: &Cli, explicit: Option<&str>) -> Result<Permutation> {
    if let Some(s) = explicit {
        return parse_perm(s);
    }
    let text = read_input(cli)?;
    let first = text.lines().next().unwrap_or("").trim();
    if first.eq_ignore_ascii_case("x,y") {
        Ok(BivariateSample::read_csv(text.as_bytes())?.relating_permutation()?)
    } else {
        Ok(text.trim().parse::<Permutation>()?)
    }
}

fn parse_perm(s: &str) -> Result<Permutation> {
    s.parse::<Permutation>().map_err(|e| usage(format!("bad permutation {s:?}: {e}")))
}

fn csv_line(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

fn cmd_ranks(cli: &Cli, a: &RanksArgs) -> Result<String> {
    let s = read_sample(cli)?;
    let policy = if a.break_ties { TiePolicy::ByIndex } else { TiePolicy::Strict };
    let r = s.ranks(policy)?;
    let points = r.relating.empirical_measure();
    if cli.format == Format::Csv {
        let mut out = String::from("x,y\n");
        for (x, y) in points {
            out += &csv_line(&[x.to_string(), y.to_string()]);
        }
        return Ok(out);
    }
    Ok(pretty(&json!({
        "n": s.len(),
        "pi_x": r.x.to_string(),
        "pi_y": r.y.to_string(),
        "relating": r.relating.to_string(),
        "points": points.iter().map(|&(x, y)| json!([x, y])).collect::<Vec<_>>(),
    })))
}

fn table_csv(t: &PatternTable) -> String {
    let mut out = String::from("pattern,count,frequency\n");
    for (sigma, c) in t.iter() {
        out += &format!("\"{sigma}\",{c},{}\n", t.frequency_f64(&sigma));
    }
    out
}

/// Tables list every pattern of length k; past 8! rows they stop being useful.
const MAX_TABLE_K: usize = 8;

fn cmd_patterns(cli: &Cli, a: &PatternsArgs) -> Result<String> {
    if a.k == 0 || a.k > MAX_TABLE_K {
        return Err(usage(format!("--k must be in 1..={MAX_TABLE_K}")));
    }
    let pi = read_permutation(cli, a.perm.as_deref())?;
    let table = count_patterns(&pi, a.k, Budget::from_env())?;
    if cli.format == Format::Csv {
        if a.reference {
            return Err(usage("--reference is only available as JSON"));
        }
        return Ok(table_csv(&table));
    }
    let mut v = table.to_json();
    let freqs: Map<String, Value> = table.iter().map(|(s, _)| (s.to_string(), json!(table.frequency_f64(&s)))).collect();
    v["frequencies"] = Value::Object(freqs);
    if a.k <= 4 && pi.len() >= 4 {
        v["separable"] = json!(is_separable(&pi));
    }
    if a.reference {
        if a.k != 3 {
            return Err(usage("--reference compares length-3 tables only"));
        }
        let rows: Vec<Value> = Permutation::all(3)
            .enumerate()
            .map(|(i, s)| {
                json!({
                    "pattern": s.to_string(),
                    "count": table.count(&s),
                    "frequency": table.frequency_f64(&s),
                    "reference_count": CITY_TABLE_COUNTS[i],
                    "reference_frequency": CITY_TABLE_FREQUENCIES[i],
                })
            })
            .collect();
        let ref_total: u64 = CITY_TABLE_COUNTS.iter().sum();
        v["reference"] = json!({
            "rows": rows,
            "total": table.total().to_string(),
            "reference_total": ref_total,
            "note": format!(
                "reference counts sum to {ref_total}; exhaustive counting over all {} triples is authoritative",
                table.total()
            ),
        });
    }
    Ok(pretty(&v))
}

fn report_out(cli: &Cli, r: &permuton::TestReport) -> String {
    match cli.format {
        Format::Json => pretty(&r.to_json()),
        Format::Csv => format!("test,n,statistic,p_value\n{},{},{},{}\n", r.test, r.n, r.statistic, r.p_value),
    }
}

fn cmd_test(cli: &Cli, a: &TestArgs) -> Result<String> {
    if let Some(t) = a.t_obs {
        if a.method != Method::Pattern3 {
            return Err(usage("--t-obs only applies to --method pattern3"));
        }
        let n = a.n.ok_or_else(|| usage("--t-obs needs --n"))?;
        let r = indep::pattern3_test_from_frequency(t, &parse_perm(&a.sigma)?, n)?;
        return Ok(report_out(cli, &r));
    }
    let data = read_sample(cli)?;
    let r = match a.method {
        Method::Kendall => indep::kendall_test(&data)?,
        Method::Pattern3 => indep::pattern3_test(&data, &parse_perm(&a.sigma)?)?,
        Method::Pattern3Joint => indep::pattern3_joint_test(&data)?,
        Method::Pattern4 => {
            let pi = data.relating_permutation()?;
            Pattern4Null::estimate(pi.len(), a.m, cli.seed)?.test_perm(&pi)?
        }
    };
    Ok(report_out(cli, &r))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Core(Error::Io(format!("{}: {e}", path.display()))))
}

fn write_trajectory(a: &SimulateArgs, t: &Trajectory) -> Result<()> {
    if let Some(p) = &a.trace {
        let mut w = create(p)?;
        t.write_jsonl(&mut w)?;
        w.flush().map_err(Error::from)?;
    }
    Ok(())
}

fn law_json(law: &std::collections::BTreeMap<Permutation, BigRational>, n: usize) -> Value {
    let size = (1..=n).product::<usize>();
    let uniform = law.len() == size && law.values().all(|w| *w == BigRational::new(1.into(), size.into()));
    let probs: Map<String, Value> = law.iter().map(|(p, w)| (p.to_string(), json!(w.to_string()))).collect();
    json!({ "support": law.len(), "uniform": uniform, "law": probs })
}

fn final_patterns(p: &Permutation) -> Result<Value> {
    if p.len() < 3 {
        return Ok(Value::Null);
    }
    Ok(count_patterns(p, 3, Budget::from_env())?.to_json())
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<String> {
    json_only(cli, "simulate")?;
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let model = a.model.as_str();
    let mut v = json!({ "model": model, "n": a.n, "seed": cli.seed });
    if a.exact_enumerate {
        let law = match model {
            "F" | "f" => chains::enumerate_f(a.n)?,
            "H" | "h" => chains::enumerate_h(a.n)?,
            "crp" => partitions::enumerate_crp(a.n)?,
            _ => return Err(usage(format!("--exact-enumerate is not available for model {model}"))),
        };
        v["exact"] = law_json(&law, a.n);
        return Ok(pretty(&v));
    }
    match model {
        "F" | "f" | "H" | "h" | "crp" => {
            let t = match model {
                "F" | "f" => chains::simulate_f(a.n, cli.seed)?,
                "H" | "h" => chains::simulate_h(a.n, cli.seed)?,
                _ => partitions::simulate_crp(a.n, cli.seed)?,
            };
            write_trajectory(a, &t)?;
            let last = t.last();
            v["final"] = json!(last.to_string());
            v["patterns"] = final_patterns(last)?;
            let (_, lam) = cycle_type(last);
            v["cycle_type"] = json!(lam.to_string());
            if model == "crp" {
                v["thoma"] = boundary_json(&lam);
            }
        }
        m if m.starts_with("copula:") => {
            let c = copula_by_name(&m["copula:".len()..])?;
            let t = chains::simulate_copula_chain(c.as_ref(), a.n, cli.seed)?;
            write_trajectory(a, &t)?;
            v["final"] = json!(t.last().to_string());
            v["patterns"] = final_patterns(t.last())?;
        }
        "plancherel" => {
            let path = partitions::simulate_plancherel(a.n, cli.seed)?;
            if let Some(p) = &a.trace {
                let mut w = create(p)?;
                for (i, lam) in path.iter().enumerate() {
                    writeln!(w, "{}", json!({ "n": i + 1, "partition": lam.to_string() })).map_err(Error::from)?;
                }
                w.flush().map_err(Error::from)?;
            }
            let last = path.last().expect("n ≥ 1");
            v["final"] = json!(last.to_string());
            v["lambda1_over_n"] = json!(path.iter().map(|l| l.part(1) as f64 / l.size() as f64).collect::<Vec<_>>());
            v["thoma"] = boundary_json(last);
        }
        "mg1" => {
            let service: ServiceDist = a.service.parse().map_err(|e: Error| usage(e.to_string()))?;
            let discipline: Discipline = a.discipline.parse().map_err(|e: Error| usage(e.to_string()))?;
            let q = Mg1::new(a.lambda, service).discipline(discipline).allow_unstable(a.allow_unstable);
            let trace = q.simulate(a.n, cli.seed)?;
            if let Some(p) = &a.trace {
                let mut w = create(p)?;
                trace.write_csv(&mut w)?;
            }
            let blocks = busy_period_blocks(&trace)?;
            let mut hist: std::collections::BTreeMap<usize, usize> = Default::default();
            for b in &blocks.blocks {
                *hist.entry(b.len()).or_default() += 1;
            }
            v["service"] = json!(service.to_string());
            v["discipline"] = json!(discipline.to_string());
            v["traffic_intensity"] = json!(q.traffic_intensity());
            v["finite_third_moment"] = json!(service.has_finite_third_moment());
            v["busy_periods"] = json!(trace.periods());
            v["completed_prefix"] = json!(blocks.prefix.as_ref().map_or(0, |p| p.len()));
            v["busy_period_sizes"] =
                Value::Object(hist.into_iter().map(|(k, c)| (k.to_string(), json!(c))).collect());
            if a.n >= 2 {
                let (lhs, rhs) = verify_inversion_bound(&trace)?;
                v["inversion_bound"] = json!({ "t21": lhs, "bound": rhs, "holds": lhs <= rhs });
            }
            let pi = trace_to_permutation(&trace)?;
            v["inversions"] = json!(pi.inversions());
        }
        "delay" => {
            let g: ServiceDist = a.service.parse().map_err(|e: Error| usage(e.to_string()))?;
            let s = simulate_delay_model(g, a.n, cli.seed)?;
            if let Some(p) = &a.trace {
                let mut w = create(p)?;
                s.write_csv(&mut w)?;
            }
            let pi = s.relating_permutation()?;
            v["service"] = json!(g.to_string());
            v["inversions"] = json!(pi.inversions());
            if a.n >= 2 {
                let t = count_patterns(&pi, 2, Budget::from_env())?;
                v["t21"] = json!(t.frequency_f64(&Permutation::from_slice(&[2, 1])));
            }
        }
        other => return Err(usage(format!("unknown model {other:?}"))),
    }
    Ok(pretty(&v))
}

fn boundary_json(lam: &Partition) -> Value {
    let b = lam.thoma_coordinates(partitions::DEFAULT_THOMA_LENGTH);
    json!({ "alpha": b.alpha, "beta": b.beta })
}

fn cmd_law(cli: &Cli, a: &LawArgs) -> Result<String> {
    let c = copula_by_name(&a.copula)?;
    let law = match a.m {
        Some(m) => pattern_law_mc(c.as_ref(), a.k, m, cli.seed)?,
        None => pattern_law_exact(c.as_ref(), a.k)
            .map_err(|e| usage(format!("{e}; pass --m for a Monte Carlo estimate")))?,
    };
    match cli.format {
        Format::Json => Ok(pretty(&law.to_json())),
        Format::Csv => {
            let mut out = String::from("pattern,probability,se\n");
            for (i, s) in Permutation::all(a.k).enumerate() {
                out += &format!("\"{s}\",{},{}\n", law.probs[i], law.se[i]);
            }
            Ok(out)
        }
    }
}

fn cmd_kernel(cli: &Cli, a: &KernelArgs) -> Result<String> {
    json_only(cli, "kernel")?;
    let sigma = parse_perm(&a.sigma)?;
    let c = copula_by_name(&a.copula)?;
    let mc = a.m.map(|m| (m, cli.seed));
    let k = martin_kernel(&sigma, Boundary::Copula { c: c.as_ref(), mc })?;
    let row: Map<String, Value> = match (c.exact_pattern_law(sigma.len() + 1), a.m) {
        (Some(_), _) => h_transform_row(&sigma, c.as_ref())?
            .into_iter()
            .map(|(t, w)| (t.to_string(), json!(w.to_string())))
            .collect(),
        (None, Some(m)) => h_transform_row_mc(&sigma, c.as_ref(), m, cli.seed)?
            .into_iter()
            .map(|(t, w)| (t.to_string(), json!(w)))
            .collect(),
        (None, None) => return Err(usage("this copula needs a Monte Carlo budget: pass --m")),
    };
    let kernel = match &k {
        permuton::KernelValue::Exact(r) => json!(r.to_string()),
        permuton::KernelValue::Approx(x) => json!(x),
    };
    Ok(pretty(&json!({
        "sigma": sigma.to_string(),
        "copula": c.name(),
        "martin_kernel": kernel,
        "h_transform_row": row,
    })))
}

fn cmd_z(cli: &Cli, a: &ZArgs) -> Result<String> {
    let s = read_sample(cli)?;
    let mut z = ZArray::encode(&s)?;
    let decoded = z.decode()?;
    if let Some(m) = a.corner {
        z = z.corner(m)?;
    }
    let rows = z.rows();
    match cli.format {
        Format::Csv => Ok(rows.iter().map(|r| csv_line(&r.iter().map(|b| b.to_string()).collect::<Vec<_>>())).collect()),
        Format::Json => Ok(pretty(&json!({ "rows": rows, "relating": decoded.to_string() }))),
    }
}

fn cmd_partition(cli: &Cli, a: &PartitionArgs) -> Result<String> {
    json_only(cli, "partition")?;
    let lam: Partition = a.lambda.parse().map_err(|e: Error| usage(e.to_string()))?;
    let n = lam.size();
    let mut v = json!({
        "partition": lam.to_string(),
        "n": n,
        "conjugate": lam.conjugate().to_string(),
        "dimension": lam.dimension().to_string(),
        "hooks": lam.hooks(),
        "cycle_type_probability": cycle_type_pmf(&CycleType::from_partition(&lam)).to_string(),
        "thoma": boundary_json(&lam),
    });
    if n >= 2 {
        let w: Map<String, Value> =
            lam.atom_removal_weights()?.into_iter().map(|(m, w)| (m.to_string(), json!(w.to_string()))).collect();
        v["atom_removal_weights"] = Value::Object(w);
    }
    let up: Map<String, Value> =
        partitions::plancherel_row(&lam).into_iter().map(|(m, w)| (m.to_string(), json!(w.to_string()))).collect();
    v["plancherel_row"] = Value::Object(up);
    Ok(pretty(&v))
}

fn cmd_lattice(cli: &Cli, a: &LatticeArgs) -> Result<String> {
    if cli.format == Format::Json {
        // edges are tabular; JSON is not offered
        return Err(usage("lattice writes CSV; use --format csv"));
    }
    if a.max_n == 0 || a.max_n > 30 {
        return Err(usage("--max-n must be in 1..=30"));
    }
    let weighting = match a.weighting {
        WeightArg::AtomRemoval => Weighting::AtomRemoval,
        WeightArg::Dimension => Weighting::Dimension,
    };
    let mut buf = Vec::new();
    YoungLattice::new(a.max_n).write_edges_csv(&mut buf, weighting)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

/// Parses arguments, runs, writes the report; returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let err = usage(e.to_string().trim().to_string());
            let _ = writeln!(stderr, "{}", err.to_json());
            return err.exit_code();
        }
    };
    let result = run(&cli).and_then(|text| {
        match &cli.output {
            Some(p) => std::fs::write(p, text).map_err(|e| CliError::Core(Error::Io(format!("{}: {e}", p.display())))),
            None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Core(Error::from(e))),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            e.exit_code()
        }
    }
}
