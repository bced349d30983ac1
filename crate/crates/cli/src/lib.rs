//! The `cpeg` command line.
//!
//! Exit codes: 0 success or member, 1 parse failure or not a member, 2 I/O
//! or usage error, 3 grammar error, 4 grammar rejected by a static check.

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpeg::infer::{infer_grammar_with, InferOptions, InferenceError, InferenceResult};
use cpeg::types::check_regular;
use cpeg::{
    check_well_formed, member, parse, reject_left_recursion, Grammar, ParseOptions, ParseResult,
    Tree,
};
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_GRAMMAR: i32 = 3;
pub const EXIT_REJECTED: i32 = 4;

#[derive(Parser)]
#[command(name = "cpeg", version, about = "Parse with capture grammars and infer their tree types")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an input and print the resulting tree
    Parse {
        #[command(flatten)]
        grammar: GrammarArgs,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        parsing: ParseFlags,
        #[arg(long, value_enum, default_value_t = TreeFormat::Sexpr)]
        format: TreeFormat,
    },
    /// Infer the type of the trees a grammar produces
    Type {
        #[command(flatten)]
        grammar: GrammarArgs,
        #[command(flatten)]
        inference: InferFlags,
        #[arg(long, value_enum, default_value_t = TypeFormat::Text)]
        format: TypeFormat,
    },
    /// Report well-formedness, left recursion and guardedness
    Check {
        #[command(flatten)]
        grammar: GrammarArgs,
        #[arg(long, value_enum, default_value_t = TypeFormat::Text)]
        format: TypeFormat,
    },
    /// Parse an input and check the tree against the inferred type
    Validate {
        #[command(flatten)]
        grammar: GrammarArgs,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        parsing: ParseFlags,
        #[command(flatten)]
        inference: InferFlags,
    },
}

#[derive(Args)]
struct GrammarArgs {
    /// Grammar file
    #[arg(short = 'g', long)]
    grammar: PathBuf,
    /// Accept left-recursive grammars
    #[arg(long)]
    allow_left_recursion: bool,
}

#[derive(Args)]
struct InputArgs {
    /// Input text; standard input is read when neither input option is given
    #[arg(long, conflicts_with = "input_file")]
    input: Option<String>,
    #[arg(long)]
    input_file: Option<PathBuf>,
}

#[derive(Args)]
struct ParseFlags {
    /// Fail unless the whole input is consumed
    #[arg(long)]
    full_match: bool,
    /// Maximum nesting of expression evaluations
    #[arg(long, default_value_t = cpeg::eval::DEFAULT_MAX_DEPTH)]
    max_depth: usize,
}

#[derive(Args)]
struct InferFlags {
    /// Infer types even for grammars that are not well-formed
    #[arg(long)]
    force_infer: bool,
    /// Merge type bindings with identical bodies
    #[arg(long)]
    dedup: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeFormat {
    Sexpr,
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum TypeFormat {
    Text,
    Json,
}

/// A failed command: exit code and message for stderr.
struct Failure(i32, String);

type Outcome = Result<i32, Failure>;

struct Io<'a> {
    stdin: &'a mut dyn Read,
    stdout: &'a mut dyn Write,
}

impl Io<'_> {
    fn out(&mut self, text: &str) -> Result<(), Failure> {
        self.stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure(EXIT_IO, format!("cannot write output: {e}")))
    }
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    let mut io = Io { stdin, stdout };
    let outcome = match cli.command {
        Command::Parse {
            grammar,
            input,
            parsing,
            format,
        } => cmd_parse(&mut io, &grammar, &input, &parsing, format),
        Command::Type {
            grammar,
            inference,
            format,
        } => cmd_type(&mut io, &grammar, &inference, format),
        Command::Check { grammar, format } => cmd_check(&mut io, &grammar, format),
        Command::Validate {
            grammar,
            input,
            parsing,
            inference,
        } => cmd_validate(&mut io, &grammar, &input, &parsing, &inference),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure(code, message)) => {
            let _ = writeln!(stderr, "error: {message}");
            code
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(EXIT_IO, format!("cannot read {}: {e}", path.display())))
}

fn load_grammar(args: &GrammarArgs) -> Result<Grammar, Failure> {
    let text = read_file(&args.grammar)?;
    cpeg::parse_grammar(&text).map_err(|e| Failure(EXIT_GRAMMAR, format!("{}: {e}", args.grammar.display())))
}

fn load_parser_grammar(args: &GrammarArgs) -> Result<Grammar, Failure> {
    let g = load_grammar(args)?;
    if !args.allow_left_recursion {
        reject_left_recursion(&g).map_err(|e| Failure(EXIT_REJECTED, e.to_string()))?;
    }
    Ok(g)
}

fn read_input(io: &mut Io<'_>, args: &InputArgs) -> Result<String, Failure> {
    match (&args.input, &args.input_file) {
        (Some(text), _) => Ok(text.clone()),
        (None, Some(path)) => read_file(path),
        (None, None) => {
            let mut text = String::new();
            io.stdin
                .read_to_string(&mut text)
                .map_err(|e| Failure(EXIT_IO, format!("cannot read standard input: {e}")))?;
            Ok(text)
        }
    }
}

fn run_parser(g: &Grammar, input: &str, flags: &ParseFlags) -> Result<ParseResult, Failure> {
    let options = ParseOptions {
        full_match: flags.full_match,
        max_depth: flags.max_depth,
    };
    parse(g, input, &options).map_err(|e| Failure(EXIT_FAILURE, e.to_string()))
}

fn parse_failure(result: &ParseResult) -> Failure {
    Failure(EXIT_FAILURE, format!("parse failed at position {}", result.farthest))
}

fn infer(g: &Grammar, flags: &InferFlags) -> Result<InferenceResult, Failure> {
    let options = InferOptions {
        force: flags.force_infer,
        ..Default::default()
    };
    let result = infer_grammar_with(g, &options).map_err(|e| match e {
        InferenceError::NotWellFormed(_) | InferenceError::Irregular(_) => {
            Failure(EXIT_REJECTED, e.to_string().trim_end().to_string())
        }
        other => Failure(EXIT_FAILURE, other.to_string()),
    })?;
    Ok(if flags.dedup { result.deduplicated() } else { result })
}

fn cmd_parse(io: &mut Io<'_>, grammar: &GrammarArgs, input: &InputArgs, flags: &ParseFlags, format: TreeFormat) -> Outcome {
    let g = load_parser_grammar(grammar)?;
    let input = read_input(io, input)?;
    let result = run_parser(&g, &input, flags)?;
    let tree = result.tree().ok_or_else(|| parse_failure(&result))?;
    let text = match format {
        TreeFormat::Sexpr => tree.to_sexpr() + "\n",
        TreeFormat::Json => tree.to_json() + "\n",
        TreeFormat::Text => outline(tree),
    };
    io.out(&text)?;
    Ok(EXIT_OK)
}

/// One line per node, children indented under their parent.
fn outline(tree: &Tree) -> String {
    fn go(tree: &Tree, depth: usize, out: &mut String) {
        match tree {
            Tree::Str(s) => {
                out.push_str(&"  ".repeat(depth));
                out.push_str(&Tree::Str(s.clone()).to_sexpr());
                out.push('\n');
            }
            Tree::Nodes(nodes) => {
                for n in nodes.iter() {
                    out.push_str(&format!("{}{}\n", "  ".repeat(depth), n.label));
                    if !n.children.is_empty_string() {
                        go(&n.children, depth + 1, out);
                    }
                }
            }
        }
    }
    let mut out = String::new();
    go(tree, 0, &mut out);
    out
}

fn cmd_type(io: &mut Io<'_>, grammar: &GrammarArgs, flags: &InferFlags, format: TypeFormat) -> Outcome {
    let g = load_grammar(grammar)?;
    let result = infer(&g, flags)?;
    let text = match format {
        TypeFormat::Text => result.to_text(),
        TypeFormat::Json => result.to_json() + "\n",
    };
    io.out(&text)?;
    Ok(EXIT_OK)
}

fn cmd_check(io: &mut Io<'_>, grammar: &GrammarArgs, format: TypeFormat) -> Outcome {
    let g = load_grammar(grammar)?;
    let report = check_well_formed(&g);
    let left = reject_left_recursion(&g).err();

    // types are inferred whether or not the grammar is well-formed, so the
    // report can say what goes wrong
    let options = InferOptions {
        force: true,
        ..Default::default()
    };
    let (regular, guarded) = match infer_grammar_with(&g, &options) {
        Ok(r) => (
            check_regular(&r.bindings).map_err(|e| e.to_string()),
            r.guardedness().map_err(|e| e.to_string()),
        ),
        Err(e) => (Err(e.to_string()), Err(e.to_string())),
    };

    let clean = report.is_well_formed && (left.is_none() || grammar.allow_left_recursion) && regular.is_ok();
    let text = match format {
        TypeFormat::Json => {
            let value = json!({
                "well_formed": report.is_well_formed,
                "violations": report.violations,
                "left_recursion": left.as_ref().map(|e| &e.cycle),
                "regular": regular.as_ref().err(),
                "guarded": guarded.as_ref().err(),
                "clean": clean,
            });
            value.to_string() + "\n"
        }
        TypeFormat::Text => {
            let mut text = format!("well-formedness: {report}");
            match &left {
                None => text.push_str("left recursion: none\n"),
                Some(e) => text.push_str(&format!("left recursion: {}\n", e.cycle.join(" -> "))),
            }
            match (&regular, &guarded) {
                (Ok(()), Ok(())) => text.push_str("types: guarded\n"),
                (Ok(()), Err(note)) => text.push_str(&format!("types: tail-recursive (note: {note})\n")),
                (Err(e), _) => text.push_str(&format!("types: {e}\n")),
            }
            text
        }
    };
    io.out(&text)?;
    Ok(if clean { EXIT_OK } else { EXIT_REJECTED })
}

fn cmd_validate(
    io: &mut Io<'_>,
    grammar: &GrammarArgs,
    input: &InputArgs,
    parsing: &ParseFlags,
    inference: &InferFlags,
) -> Outcome {
    let g = load_parser_grammar(grammar)?;
    let types = infer(&g, inference)?;
    let input = read_input(io, input)?;
    let result = run_parser(&g, &input, parsing)?;
    let tree = result.tree().ok_or_else(|| parse_failure(&result))?;
    let is_member = member(tree, &types.root_type, &types.bindings).map_err(|e| Failure(EXIT_FAILURE, e.to_string()))?;
    io.out(if is_member { "MEMBER\n" } else { "NOT-MEMBER\n" })?;
    Ok(if is_member { EXIT_OK } else { EXIT_FAILURE })
}
