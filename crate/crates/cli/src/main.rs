use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use wildstokes_cli::{run, write_atomic, CliError, ProblemDocument, Task};

#[derive(Parser)]
#[command(name = "wildstokes", version, about = "Stokes data and isomonodromy computations from JSON problem files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Problem document (JSON); task-specific flags override its payload
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file; stdout when absent
    #[arg(long)]
    output: Option<PathBuf>,
    /// SVG ray diagram of the singular directions (directions and nu)
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Integration tolerance (nu, flow, braid) or angle tolerance (directions)
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Singular directions and a positive system for A0
    Directions {
        /// JSON file with the diagonal of A0
        #[arg(long)]
        a0: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Stokes data, the dual group element and monodromy
    Nu {
        #[arg(long)]
        a0: Option<PathBuf>,
        /// JSON file with the residue matrix B
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long)]
        connection_matrix: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Integrate the isomonodromy flow along a path
    Flow {
        #[arg(long)]
        path: Option<PathBuf>,
        #[arg(long)]
        b0: Option<PathBuf>,
        /// Also compare Stokes data at both ends
        #[arg(long)]
        isomonodromy: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Action of a closed loop on B
    Braid {
        #[arg(long = "loop")]
        lp: Option<PathBuf>,
        #[arg(long)]
        b0: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Complete multipartite graphs, Cartan matrices and roots
    Graphs {
        #[arg(long)]
        enumerate: Option<usize>,
        #[arg(long)]
        exclude_stars: bool,
        #[arg(long)]
        exclude_discrete: bool,
        /// Part sizes, e.g. 2,2
        #[arg(long, value_delimiter = ',')]
        partition: Option<Vec<usize>>,
        #[arg(long)]
        cartan: bool,
        /// Lattice vector in the simple-root basis, e.g. 2,1,0
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        classify: Option<Vec<i64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Grothendieck–Springer diagram check and fibers
    Springer {
        #[arg(long)]
        check: bool,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        /// JSON matrix whose fiber to enumerate
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Verify the stored curve artifacts
    Curves {
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in check suite
    Selftest {
        #[command(flatten)]
        common: Common,
    },
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))
}

struct Builder {
    doc: ProblemDocument,
}

impl Builder {
    fn new(task: Task, common: &Common) -> Result<Self, CliError> {
        let mut doc = match &common.input {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                ProblemDocument::parse(&text)?
            }
            None => ProblemDocument::new(task, json!({}), 0),
        };
        if doc.task != task {
            return Err(CliError::Malformed(format!("document task {:?} does not match the subcommand", doc.task)));
        }
        if !doc.payload.is_object() {
            return Err(CliError::Malformed("payload must be a JSON object".into()));
        }
        if let Some(s) = common.seed {
            doc.seed = s;
        }
        Ok(Builder { doc })
    }

    fn set(&mut self, key: &str, v: Value) {
        self.doc.payload[key] = v;
    }

    fn file(&mut self, key: &str, path: &Option<PathBuf>) -> Result<(), CliError> {
        if let Some(p) = path {
            let v = read_json(p)?;
            self.set(key, v);
        }
        Ok(())
    }

    fn flag(&mut self, key: &str, on: bool) {
        if on {
            self.set(key, Value::Bool(true));
        }
    }

    fn precision_tol(&mut self, tol: Option<f64>) {
        if let Some(t) = tol {
            let p = &mut self.doc.payload;
            if !p.get("precision").is_some_and(Value::is_object) {
                p["precision"] = json!({});
            }
            p["precision"]["ode_rel_tol"] = json!(t);
        }
    }
}

fn build(cmd: &Command) -> Result<(ProblemDocument, Common), CliError> {
    let no_tol = |c: &Common, what: &str| match c.tol {
        Some(_) => Err(CliError::Malformed(format!("--tol does not apply to {what}"))),
        None => Ok(()),
    };
    let (b, common) = match cmd {
        Command::Directions { a0, common } => {
            let mut b = Builder::new(Task::Directions, common)?;
            b.file("a0", a0)?;
            if let Some(t) = common.tol {
                b.set("angle_tol", json!(t));
            }
            (b, common)
        }
        Command::Nu { a0, b: bm, connection_matrix, common } => {
            let mut b = Builder::new(Task::Nu, common)?;
            b.file("a0", a0)?;
            b.file("b", bm)?;
            b.flag("connection_matrix", *connection_matrix);
            b.precision_tol(common.tol);
            (b, common)
        }
        Command::Flow { path, b0, isomonodromy, common } => {
            let mut b = Builder::new(Task::Flow, common)?;
            b.file("path", path)?;
            b.file("b0", b0)?;
            b.flag("isomonodromy", *isomonodromy);
            if let Some(t) = common.tol {
                b.set("tol", json!(t));
            }
            (b, common)
        }
        Command::Braid { lp, b0, common } => {
            let mut b = Builder::new(Task::Braid, common)?;
            b.file("loop", lp)?;
            b.file("b0", b0)?;
            if let Some(t) = common.tol {
                b.set("tol", json!(t));
            }
            (b, common)
        }
        Command::Graphs { enumerate, exclude_stars, exclude_discrete, partition, cartan, classify, common } => {
            no_tol(common, "graphs")?;
            let mut b = Builder::new(Task::Graphs, common)?;
            if let Some(n) = enumerate {
                b.set("enumerate", json!(n));
            }
            b.flag("exclude_stars", *exclude_stars);
            b.flag("exclude_discrete", *exclude_discrete);
            if let Some(p) = partition {
                b.set("partition", json!(p));
            }
            b.flag("cartan", *cartan);
            if let Some(v) = classify {
                b.set("classify", json!(v));
            }
            (b, common)
        }
        Command::Springer { check, n, samples, matrix, common } => {
            no_tol(common, "springer")?;
            let mut b = Builder::new(Task::Springer, common)?;
            b.flag("check", *check);
            if let Some(n) = n {
                b.set("n", json!(n));
            }
            if let Some(s) = samples {
                b.set("samples", json!(s));
            }
            b.file("matrix", matrix)?;
            if matrix.is_some() && !check {
                b.set("check", json!(false));
            }
            (b, common)
        }
        Command::Curves { verify, common } => {
            no_tol(common, "curves")?;
            let mut b = Builder::new(Task::Curves, common)?;
            b.flag("verify", *verify);
            (b, common)
        }
        Command::Selftest { common } => {
            no_tol(common, "selftest")?;
            (Builder::new(Task::Selftest, common)?, common)
        }
    };
    Ok((b.doc, common.clone()))
}

fn execute(cmd: &Command) -> Result<bool, CliError> {
    let (doc, common) = build(cmd)?;
    let out = run(&doc)?;
    if let Some(svg_path) = &common.svg {
        match &out.svg {
            Some(svg) => write_atomic(svg_path, svg)?,
            None => {
                return Err(wildstokes::Error::DegenerateInput("no singular directions to draw for this task".into()).into())
            }
        }
    }
    match &common.output {
        Some(p) => write_atomic(p, &out.json)?,
        None => print!("{}", out.json),
    }
    Ok(out.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
