//! `signforge` command line. Exit codes: 0 success, 1 domain error, 2 usage
//! or configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use signforge_core::compiler::AnimationDocument;
use signforge_core::interlingua::{compile_glosses, fingerspell_document, parse_sentences, translate_all, LociMap};
use signforge_core::lexicon::{parse_lexicon, validate, Lexicon, LexiconError};
use signforge_core::x3d::{emit_html, emit_x3d};

use crate::config::{Config, DEFAULT_PORT, LEXICON_ENV};
use crate::service::ServiceState;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "signforge", version, about = "Sign-language animation compiler")]
struct Cli {
    /// TOML settings file
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Lexicon XML file (overridden by SIGNFORGE_LEXICON)
    #[arg(long, global = true, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a lexicon file and print its diagnostics
    Validate {
        #[arg(value_name = "LEXICON")]
        file: Option<PathBuf>,
    },
    /// Compile a sequence of glosses
    Compile {
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        signs: Vec<String>,
        /// Output file (default: standard output)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Wrap the scene in a playable HTML page
        #[arg(long)]
        html: bool,
    },
    /// Translate interlingua sentences
    Translate {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        html: bool,
    },
    /// Fingerspell one word
    Fingerspell {
        #[arg(long)]
        word: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        html: bool,
    },
    /// Run the HTTP service
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        host: Option<IpAddr>,
    },
}

/// A failure with its exit code and message.
struct Failure(i32, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

fn domain(msg: impl Into<String>) -> Failure {
    Failure(EXIT_DOMAIN, msg.into())
}

pub fn run_cli() -> i32 {
    let env = std::env::var(LEXICON_ENV).ok();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run_cli_with(std::env::args_os(), env.as_deref(), &mut out, &mut err)
}

/// Runs the command line with explicit environment and streams.
pub fn run_cli_with<I, T>(args: I, env_lexicon: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    match run(cli, env_lexicon, out, err) {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn run(cli: Cli, env_lexicon: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(p) => Config::load(p).map_err(usage)?,
        None => Config::default(),
    };
    let lexicon_path = |positional: Option<&Path>| -> Result<PathBuf, Failure> {
        positional
            .map(Path::to_path_buf)
            .or_else(|| config.lexicon_path(env_lexicon, cli.lexicon.as_deref()))
            .ok_or_else(|| usage(format!("no lexicon given: pass --lexicon, set {LEXICON_ENV}, or name one in --config")))
    };
    let html_default = config.html.unwrap_or(false);
    match &cli.command {
        Command::Validate { file } => validate_file(&lexicon_path(file.as_deref())?, out, err),
        Command::Compile { signs, out: dest, html } => {
            let lex = load_lexicon(&lexicon_path(None)?)?;
            let doc = compile_glosses(signs, &lex, &config.transition).map_err(|e| domain(e.to_string()))?;
            write_scene(&doc, &config, *html || html_default, dest.as_deref(), out)
        }
        Command::Translate { input, out: dest, html } => {
            let lex = load_lexicon(&lexicon_path(None)?)?;
            let text = std::fs::read_to_string(input).map_err(|e| domain(format!("cannot read {}: {e}", input.display())))?;
            let sentences = parse_sentences(&text).map_err(|e| domain(format!("{}: {e}", input.display())))?;
            let t = translate_all(&sentences, &lex, &LociMap::new(), &config.transition).map_err(|e| domain(e.to_string()))?;
            for w in t.warnings() {
                let _ = writeln!(err, "warning: {w}");
            }
            write_scene(&t.document, &config, *html || html_default, dest.as_deref(), out)
        }
        Command::Fingerspell { word, out: dest, html } => {
            let lex = load_lexicon(&lexicon_path(None)?)?;
            let doc = fingerspell_document(word, &lex, &config.transition).map_err(|e| domain(e.to_string()))?;
            write_scene(&doc, &config, *html || html_default, dest.as_deref(), out)
        }
        Command::Serve { port, host } => {
            let path = lexicon_path(None)?;
            let host = match host {
                Some(h) => *h,
                None => match &config.host {
                    Some(h) => h.parse().map_err(|e| usage(format!("config host {h:?}: {e}")))?,
                    None => IpAddr::V4(Ipv4Addr::LOCALHOST),
                },
            };
            let addr = SocketAddr::new(host, port.or(config.port).unwrap_or(DEFAULT_PORT));
            let state = ServiceState::open(&path, config.transition, config.emission.clone()).map_err(domain)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| domain(e.to_string()))?;
            runtime
                .block_on(crate::server::serve(Arc::new(state), addr))
                .map_err(|e| domain(format!("server on {addr}: {e}")))
        }
    }
}

fn load_lexicon(path: &Path) -> Result<Lexicon, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| domain(format!("cannot read {}: {e}", path.display())))?;
    parse_lexicon(&text).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn validate_file(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| domain(format!("cannot read {}: {e}", path.display())))?;
    let diagnostics = match parse_lexicon(&text) {
        Ok(lex) => validate(&lex),
        Err(LexiconError::Invalid(d)) => d,
        Err(e) => return Err(domain(format!("{}: {e}", path.display()))),
    };
    for d in &diagnostics {
        let _ = writeln!(err, "{}: {d}", path.display());
    }
    let errors = diagnostics.iter().filter(|d| d.is_error()).count();
    let warnings = diagnostics.len() - errors;
    if errors > 0 {
        return Err(domain(format!("{}: {errors} error(s), {warnings} warning(s)", path.display())));
    }
    let _ = writeln!(out, "{}: ok ({warnings} warning(s))", path.display());
    Ok(())
}

fn write_scene(
    doc: &AnimationDocument,
    config: &Config,
    html: bool,
    dest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let text = if html { emit_html(doc, &config.emission) } else { emit_x3d(doc, &config.emission) }
        .map_err(|e| domain(e.to_string()))?;
    match dest {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::write(p, text).map_err(|e| domain(format!("cannot write {}: {e}", p.display())))
        }
        _ => out.write_all(text.as_bytes()).map_err(|e| domain(e.to_string())),
    }
}
