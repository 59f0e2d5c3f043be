//! Command-line entry point.

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cmca_core::alpha::{linear_grid, AutoAlphaConfig};
use cmca_core::cmca::{row_coordinates, top_variables, CategoryLoadings};
use cmca_core::dataio::{load_and_recode, CategoricalTable, RecodeSpec};
use cmca_core::encode::Normalization;
use cmca_core::pipeline::{fit_mca_table, AlphaChoice, ContrastSetup, ContrastiveFit};
use cmca_core::{Error, ErrorClass};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::artifacts::ArtifactTree;
use crate::export::{self, RowSet, SweepLine};
use crate::plot::{render_scatter, ColorRule, Figure, PlotError, PlotKind, ScatterPoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "cmca",
    version,
    about = "Contrastive multiple correspondence analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Contrast a target group against a background group.
    Fit(FitArgs),
    /// Standard MCA of the whole dataset or one group.
    Mca(McaArgs),
    /// Serve the JSON API (and optional static assets) over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Survey CSV with one row per respondent.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON recode spec (declared variables, level pools, missing code).
    #[arg(long)]
    pub recode: Option<PathBuf>,
    /// Group column; overrides the recode spec's `group_column`.
    #[arg(long)]
    pub groups: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub k_prime: u64,
    #[arg(long, default_value = "centered", value_parser = parse_normalization)]
    pub normalization: Normalization,
    /// Variables highlighted in category plots.
    #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u64).range(1..))]
    pub top_variables: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON color rule; replaces group coloring in row plots.
    #[arg(long)]
    pub color_rule: Option<PathBuf>,
    /// Plots to draw.
    #[arg(long, value_delimiter = ',', default_value = "rows")]
    pub plot: Vec<PlotKind>,
    /// Components on the plot axes, 1-based.
    #[arg(long, value_parser = parse_components)]
    pub components: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct AlphaMode {
    /// Fixed contrast parameter.
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Option<f64>,
    /// Choose α by the ratio-trace iteration.
    #[arg(long)]
    pub auto_alpha: bool,
    /// One fit per α in lo:hi:step.
    #[arg(long, value_parser = parse_sweep)]
    pub sweep: Option<AlphaGrid>,
}

/// The α values of a `lo:hi:step` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid(pub Vec<f64>);

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub background: String,
    #[command(flatten)]
    pub mode: AlphaMode,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct McaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Restrict to rows with this group label.
    #[arg(long)]
    pub subset: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Directory of static files served at `/`.
    #[arg(long)]
    pub assets: Option<PathBuf>,
}

fn parse_normalization(s: &str) -> Result<Normalization, String> {
    s.parse::<Normalization>().map_err(|e| e.to_string())
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !a.is_finite() || a < 0.0 {
        return Err("alpha must be a finite number >= 0".into());
    }
    Ok(a)
}

fn parse_sweep(s: &str) -> Result<AlphaGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected lo:hi:step".into());
    }
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    linear_grid(num(parts[0])?, num(parts[1])?, num(parts[2])?)
        .map(AlphaGrid)
        .map_err(|e| e.to_string())
}

fn parse_components(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two indices like 1,2")?;
    let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a == 0 || b == 0 || a == b {
        return Err("components must be distinct and 1-based".into());
    }
    Ok((a, b))
}

/// Failure of one command, with its exit code class.
#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Core(Error),
    Plot(PlotError),
    Rule(String),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Core(e)
    }
}

impl From<PlotError> for RunError {
    fn from(e: PlotError) -> Self {
        RunError::Plot(e)
    }
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    class: &'a str,
    message: String,
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => EXIT_USAGE,
            RunError::Core(e) => match e.class() {
                ErrorClass::Data => EXIT_DATA,
                ErrorClass::Numerical => EXIT_NUMERICAL,
            },
            RunError::Plot(_) => EXIT_NUMERICAL,
            RunError::Rule(_) | RunError::Io(..) => EXIT_DATA,
        }
    }

    pub fn kind(&self) -> &str {
        match self {
            RunError::Usage(_) => "Usage",
            RunError::Core(e) => e.kind(),
            RunError::Plot(PlotError::NoPoints) => "EmptyPlot",
            RunError::Plot(PlotError::NonFinite(_)) => "NonFinite",
            RunError::Rule(_) => "ColorRule",
            RunError::Io(..) => "Io",
        }
    }

    fn message(&self) -> String {
        match self {
            RunError::Usage(m) | RunError::Rule(m) => m.clone(),
            RunError::Core(e) => e.to_string(),
            RunError::Plot(e) => e.to_string(),
            RunError::Io(path, e) => format!("{}: {e}", path.display()),
        }
    }

    /// One JSON object on a single line.
    pub fn json_line(&self) -> String {
        let class = match self.exit_code() {
            EXIT_USAGE => "usage",
            EXIT_NUMERICAL => "numerical",
            _ => "data",
        };
        serde_json::to_string(&ErrorLine {
            error: self.kind(),
            class,
            message: self.message(),
        })
        .expect("error lines serialize")
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.json_line());
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), RunError> {
    match command {
        Command::Fit(args) => {
            let tree = build_fit(args)?;
            write_tree(&tree, &args.output.out)
        }
        Command::Mca(args) => {
            let tree = build_mca(args)?;
            write_tree(&tree, &args.output.out)
        }
        Command::Serve(args) => serve(args),
    }
}

fn write_tree(tree: &ArtifactTree, out: &Path) -> Result<(), RunError> {
    tree.write_to(out)
        .map_err(|e| RunError::Io(out.to_path_buf(), e))
}

pub fn load_table(data: &DataArgs) -> Result<CategoricalTable, RunError> {
    let mut spec = match &data.recode {
        Some(path) => RecodeSpec::from_path(path)?,
        None => match &data.groups {
            Some(g) => RecodeSpec::infer(g),
            None => {
                return Err(RunError::Usage(
                    "either --groups or --recode (with group_column) is required".into(),
                ))
            }
        },
    };
    if let Some(g) = &data.groups {
        spec.group_column = g.clone();
    }
    Ok(load_and_recode(&data.data, &spec)?)
}

fn load_rule(path: &Option<PathBuf>) -> Result<Option<ColorRule>, RunError> {
    let Some(path) = path else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Io(path.clone(), e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| RunError::Rule(format!("{}: {e}", path.display())))
}

/// Plot axes, checked against K′.
fn axes(output: &OutputArgs, k_prime: usize) -> Result<(usize, Option<usize>), RunError> {
    match output.components {
        Some((a, b)) if a.max(b) > k_prime => Err(RunError::Usage(format!(
            "--components {a},{b} exceeds --k-prime {k_prime}"
        ))),
        Some((a, b)) => Ok((a - 1, Some(b - 1))),
        None if k_prime == 1 => Ok((0, None)),
        None => Ok((0, Some(1))),
    }
}

/// Row classes: the color rule over the full table when given, else the
/// group label.
struct RowClasses {
    rule: Option<(ColorRule, Vec<String>)>,
}

impl RowClasses {
    fn new(table: &CategoricalTable, rule: Option<ColorRule>) -> Result<Self, RunError> {
        let rule = match rule {
            Some(r) => {
                let classes = r.classify(table).map_err(RunError::Rule)?;
                Some((r, classes))
            }
            None => None,
        };
        Ok(Self { rule })
    }

    fn class(&self, row_id: usize, group: &str) -> String {
        match &self.rule {
            Some((_, classes)) => classes[row_id].clone(),
            None => group.to_string(),
        }
    }

    fn other(&self) -> Option<&str> {
        self.rule.as_ref().map(|(r, _)| r.other_label.as_str())
    }
}

struct PlotContext<'a> {
    prefix: &'a str,
    title: String,
    axes: (usize, Option<usize>),
}

impl PlotContext<'_> {
    fn figure(&self, what: &str) -> Figure {
        Figure {
            title: format!("{what}: {}", self.title),
            x_label: format!("{}{}", self.prefix, self.axes.0 + 1),
            y_label: self.axes.1.map(|j| format!("{}{}", self.prefix, j + 1)),
        }
    }

    fn point(
        &self,
        m: &DMatrix<f64>,
        r: usize,
        class: String,
        label: Option<String>,
    ) -> ScatterPoint {
        ScatterPoint {
            x: m[(r, self.axes.0)],
            y: self.axes.1.map(|j| m[(r, j)]),
            class,
            label,
        }
    }
}

fn rows_plot(ctx: &PlotContext, set: &RowSet, classes: &RowClasses) -> Result<String, RunError> {
    let points: Vec<ScatterPoint> = (0..set.coords.nrows())
        .map(|r| {
            ctx.point(
                &set.coords,
                r,
                classes.class(set.ids[r], set.groups[r]),
                None,
            )
        })
        .collect();
    Ok(render_scatter(
        &points,
        &ctx.figure("rows"),
        classes.other(),
    )?)
}

/// Categories of the top-N variables on the x-axis component are colored by
/// variable; the rest are grey.
fn category_plot(
    ctx: &PlotContext,
    what: &str,
    setup_vocab: &cmca_core::dataio::CategoryVocabulary,
    values: &DMatrix<f64>,
    skip: &[bool],
    top: &[String],
) -> Result<String, RunError> {
    let points: Vec<ScatterPoint> = setup_vocab
        .entries()
        .iter()
        .enumerate()
        .filter(|(k, _)| !skip[*k])
        .map(|(k, (var, level))| {
            let class = if top.contains(var) {
                var.clone()
            } else {
                "other".into()
            };
            ctx.point(values, k, class, Some(format!("{var}={level}")))
        })
        .collect();
    Ok(render_scatter(&points, &ctx.figure(what), Some("other"))?)
}

fn top_names(
    loadings: &CategoryLoadings,
    component: usize,
    n: u64,
) -> Result<Vec<String>, RunError> {
    let n = (n as usize).min(loadings.variables().len());
    Ok(top_variables(loadings, component, n)?
        .into_iter()
        .map(|(v, _)| v)
        .collect())
}

/// All artifacts for one contrastive fit.
fn fit_tree(
    setup: &ContrastSetup,
    fit: &ContrastiveFit,
    output: &OutputArgs,
    classes: &RowClasses,
) -> Result<ArtifactTree, RunError> {
    let k = fit.model.k_prime();
    let axes = axes(output, k)?;
    let categories = fit.category_coordinates(setup)?;
    let loadings = fit.loadings(setup)?;
    let (n, m) = (fit.target_rows.nrows(), fit.background_rows.nrows());
    let set = RowSet {
        ids: [
            setup.target.table.row_ids(),
            setup.background.table.row_ids(),
        ]
        .concat(),
        groups: [
            vec![setup.target.label.as_str(); n],
            vec![setup.background.label.as_str(); m],
        ]
        .concat(),
        coords: DMatrix::from_fn(n + m, k, |r, j| {
            if r < n {
                fit.target_rows[(r, j)]
            } else {
                fit.background_rows[(r - n, j)]
            }
        }),
    };

    let mut tree = ArtifactTree::new();
    tree.add("rows.csv", export::rows_csv("cPC", &set));
    tree.add(
        "categories.csv",
        export::categories_csv(
            "cPC",
            &setup.vocab,
            &categories.values,
            &categories.zero_frequency,
        ),
    );
    tree.add(
        "loadings.csv",
        export::loadings_csv(fit.model.eigenvalues(), &setup.vocab, &loadings),
    );
    if let Some(trace) = &fit.trace {
        tree.add("alpha_trace.csv", export::trace_csv(trace));
    }

    let ctx = PlotContext {
        prefix: "cPC",
        title: format!(
            "{} vs {}, alpha = {}",
            setup.target.label,
            setup.background.label,
            export::float(fit.model.alpha())
        ),
        axes,
    };
    let top = top_names(&loadings, axes.0, output.top_variables)?;
    for kind in dedup(&output.plot) {
        let svg = match kind {
            PlotKind::Rows => rows_plot(&ctx, &set, classes)?,
            PlotKind::CategoryCoordinates => category_plot(
                &ctx,
                "category coordinates",
                &setup.vocab,
                &categories.values,
                &categories.zero_frequency,
                &top,
            )?,
            PlotKind::CategoryLoadings => category_plot(
                &ctx,
                "category loadings",
                &setup.vocab,
                loadings.per_category(),
                &vec![false; setup.vocab.len()],
                &top,
            )?,
        };
        tree.add(format!("{}.svg", kind.file_stem()), svg);
    }
    Ok(tree)
}

fn dedup(kinds: &[PlotKind]) -> Vec<PlotKind> {
    let mut out = Vec::new();
    for &k in kinds {
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

/// Directory name for one sweep point, e.g. `alpha_1.0`, `alpha_1.1`.
pub fn alpha_dir(alpha: f64) -> String {
    let s = export::float(alpha);
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        format!("alpha_{s}")
    } else {
        format!("alpha_{s}.0")
    }
}

pub fn build_fit(args: &FitArgs) -> Result<ArtifactTree, RunError> {
    let k = args.output.k_prime as usize;
    axes(&args.output, k)?;
    let table = load_table(&args.data)?;
    let classes = RowClasses::new(&table, load_rule(&args.output.color_rule)?)?;
    let setup = ContrastSetup::new(
        &table,
        &args.target,
        &args.background,
        args.output.normalization,
    )?;

    let choice = match (&args.mode.alpha, args.mode.auto_alpha, &args.mode.sweep) {
        (Some(a), _, _) => AlphaChoice::Fixed(*a),
        (_, true, _) => AlphaChoice::Auto(AutoAlphaConfig {
            epsilon: args.epsilon,
            tol: args.tol,
            max_iter: args.max_iter,
        }),
        (_, _, Some(grid)) => return build_sweep(&setup, &grid.0, &args.output, &classes),
        _ => unreachable!("clap requires exactly one alpha mode"),
    };
    let fit = setup.fit(choice, k)?;
    fit_tree(&setup, &fit, &args.output, &classes)
}

fn build_sweep(
    setup: &ContrastSetup,
    grid: &[f64],
    output: &OutputArgs,
    classes: &RowClasses,
) -> Result<ArtifactTree, RunError> {
    let k = output.k_prime as usize;
    let mut tree = ArtifactTree::new();
    let mut lines = Vec::new();
    let mut first_error = None;
    let mut any_ok = false;
    for point in setup.sweep(grid, k)? {
        let dir = alpha_dir(point.alpha);
        let built = point
            .outcome
            .map_err(RunError::from)
            .and_then(|(model, summary)| {
                let fit = ContrastiveFit {
                    target_rows: row_coordinates(&setup.target.z, &model)?,
                    background_rows: row_coordinates(&setup.background.z, &model)?,
                    model,
                    trace: None,
                };
                Ok((fit_tree(setup, &fit, output, classes)?, summary))
            });
        match built {
            Ok((sub, s)) => {
                any_ok = true;
                tree.nest(&dir, sub);
                lines.push(SweepLine {
                    alpha: point.alpha,
                    outcome: Ok((
                        s.lambda1,
                        s.lambda2,
                        s.target_variance,
                        s.background_variance,
                    )),
                });
            }
            Err(e) => {
                tree.add(
                    Path::new(&dir).join("error.json"),
                    format!("{}\n", e.json_line()),
                );
                lines.push(SweepLine {
                    alpha: point.alpha,
                    outcome: Err(e.kind().to_string()),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    if !any_ok {
        return Err(first_error.expect("grid is not empty"));
    }
    tree.add("sweep.csv", export::sweep_csv(&lines));
    Ok(tree)
}

pub fn build_mca(args: &McaArgs) -> Result<ArtifactTree, RunError> {
    let output = &args.output;
    let k = output.k_prime as usize;
    let axes = axes(output, k)?;
    if output.plot.contains(&PlotKind::CategoryLoadings) {
        return Err(RunError::Usage(
            "category_loadings plots need a contrastive fit".into(),
        ));
    }
    let table = load_table(&args.data)?;
    let classes = RowClasses::new(&table, load_rule(&output.color_rule)?)?;
    let vocab = cmca_core::dataio::CategoryVocabulary::from_table(&table);
    let (label, subset) = match &args.subset {
        Some(l) => (l.as_str(), table.subset(l)?),
        None => ("all", table.clone()),
    };
    let fit = fit_mca_table(label, &subset, &vocab, output.normalization, k)?;
    let categories = fit.category_coordinates()?;
    let zero: Vec<bool> = fit
        .group
        .z
        .column_masses()
        .iter()
        .map(|&m| m == 0.0)
        .collect();

    // Rows keep their own group label so a whole-data plot colors by group.
    let set = RowSet {
        ids: subset.row_ids().to_vec(),
        groups: (0..subset.n_rows()).map(|r| subset.group(r)).collect(),
        coords: fit.rows.clone(),
    };

    let mut tree = ArtifactTree::new();
    tree.add("rows.csv", export::rows_csv("PC", &set));
    tree.add(
        "categories.csv",
        export::categories_csv("PC", &vocab, &categories, &zero),
    );
    tree.add(
        "eigenvalues.csv",
        export::eigenvalues_csv(fit.model.eigenvalues()),
    );

    let ctx = PlotContext {
        prefix: "PC",
        title: format!("MCA of {label}"),
        axes,
    };
    for kind in dedup(&output.plot) {
        let svg = match kind {
            PlotKind::Rows => rows_plot(&ctx, &set, &classes)?,
            PlotKind::CategoryCoordinates => category_plot(
                &ctx,
                "category coordinates",
                &vocab,
                &categories,
                &zero,
                &[],
            )?,
            PlotKind::CategoryLoadings => unreachable!("rejected above"),
        };
        tree.add(format!("{}.svg", kind.file_stem()), svg);
    }
    Ok(tree)
}

fn serve(args: &ServeArgs) -> Result<(), RunError> {
    let data = args.data.clone();
    if data.recode.is_none() && data.groups.is_none() {
        return Err(RunError::Usage(
            "either --groups or --recode (with group_column) is required".into(),
        ));
    }
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| RunError::Io(PathBuf::from("tokio runtime"), e))?;
    let result = runtime.block_on(cmca_serve::run(args.bind, args.assets.clone(), move || {
        load_table(&data).map_err(|e| match e {
            RunError::Core(e) => e,
            other => Error::InvalidArgument(other.message()),
        })
    }));
    match result {
        Ok(()) => Ok(()),
        Err(cmca_serve::ServeError::Load(e)) => Err(RunError::Core(e)),
        Err(cmca_serve::ServeError::Io(e)) => {
            Err(RunError::Io(PathBuf::from(args.bind.to_string()), e))
        }
    }
}
