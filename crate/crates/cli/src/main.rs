//! Command-line front door: solve superposed positions, hunt and verify
//! intransitive cycles, run seeded Monte-Carlo and exhaustive experiments,
//! inspect endgame tables, and play The Magicians.
//!
//! Exit codes: 0 success, 1 internal/verification failure, 2 parse error,
//! 3 illegal position, 4 resource limit (including search-budget
//! checkpoints).

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, Read, Write as _};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use itlb_core::board::codec::{decode_half, decode_whole, DecodeError};
use itlb_core::board::{BoardError, BoardSpec, PieceKind};
use itlb_core::intransitivity::{
    beats, chain_edges, classify_chain, exhaustive_search, monte_carlo, Chain, Classification,
    CycleCertificate, IntransitivityError, McParams, SearchCursor, SearchParams,
};
use itlb_core::magicians::{
    apply_swap, best_swap, heuristic_value, perfect_line, row_order_chain, verify_transitivity,
    Face, MagBoard, MagError, Side, Swap,
};
use itlb_core::movegen::{apply, san_lite, MoveError};
use itlb_core::solver::{MaterialSignature, Solver, SolverError};

/// Stated on every report so a result is interpretable from its own header.
const DRAW_CONVENTION: &str =
    "wins are forced mates and DTM counts plies; every other position is a draw \
     (stalemate included); there is no 50-move or repetition rule";

fn tool_version() -> String {
    format!("itlb {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Parser)]
#[command(
    name = "itlb",
    version,
    about = "Solve superposed half-positions, hunt intransitive cycles, play The Magicians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a whole position: verdict, DTM and the principal line
    Solve {
        /// Position text like "W:Kf6,Qg6 | B:Kh8 | wtm | board=8x8,planar"
        position: String,
        #[command(flatten)]
        cache: CacheArgs,
    },
    /// Decide the beats relation between two opposite-color half-positions
    Beats {
        /// One half-position, e.g. "W:Kf6,Qg6"
        x: String,
        /// The other, of the opposite color, e.g. "B:Kh8,Qa8"
        y: String,
        #[command(flatten)]
        board: BoardArgs,
        #[command(flatten)]
        cache: CacheArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Classify an alternating chain of half-positions
    Chain {
        /// Half-position texts, colors alternating and starting with White
        #[arg(num_args = 4..)]
        members: Vec<String>,
        #[command(flatten)]
        board: BoardArgs,
        #[command(flatten)]
        cache: CacheArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Seeded Monte-Carlo chain experiment; one report row per chain length
    Mc {
        #[command(flatten)]
        board: BoardArgs,
        /// Per-slot material like "KQ,K,KQ,K", cycled to each chain length
        #[arg(long, default_value = "KP,KP,KP,KP")]
        material: String,
        /// Comma-separated chain lengths, e.g. "4" or "4,6,8"
        #[arg(long, default_value = "4")]
        chain_len: String,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// json | csv
        #[arg(long, default_value = "json")]
        format: String,
        #[command(flatten)]
        cache: CacheArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exhaustively search every four-slot chain on a small board
    Exhaustive {
        #[command(flatten)]
        board: BoardArgs,
        /// Per-slot material like "KQ,KQ,KQ,KQ", cycled to four slots
        #[arg(long, default_value = "KQ,KQ,KQ,KQ")]
        material: String,
        /// One node per tuple extension or fresh edge solve
        #[arg(long, default_value_t = 10_000_000)]
        budget_nodes: u64,
        /// Resume cursor "a,b,c,d" from a previous checkpoint
        #[arg(long)]
        resume: Option<String>,
        #[command(flatten)]
        cache: CacheArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Re-solve every edge of a serialized cycle certificate
    VerifyCert {
        /// Certificate file path, or '-' for stdin
        path: String,
        #[command(flatten)]
        cache: CacheArgs,
    },
    /// The Magicians: exact solving, the heuristic order, engine play
    #[command(subcommand)]
    Magicians(MagCommand),
    /// Build an endgame table and print its statistics
    Table {
        #[command(flatten)]
        board: BoardArgs,
        /// Material pair like "KQvK": White pieces, 'v', Black pieces
        #[arg(long)]
        material: String,
        #[command(flatten)]
        cache: CacheArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand)]
enum MagCommand {
    /// Minimal swap count to all-Good plus one optimal line (JSON)
    Solve {
        /// Board text like "XOX/OXO" (upper row / lower row)
        board: String,
    },
    /// Print the heuristic's induced width-3 row order
    Order {
        /// Emit the full transitivity report as JSON instead
        #[arg(long)]
        report: bool,
        /// Sampled triples for the report
        #[arg(long, default_value_t = 1_000_000)]
        triples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Best swap for a side on a board (JSON)
    AiMove {
        board: String,
        /// good | bad
        #[arg(long, default_value = "good")]
        side: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Interactive match: you enter swaps, the engine answers
    Play {
        board: String,
        /// Side you play: good | bad
        #[arg(long, default_value = "good")]
        side: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Board geometry flags shared by the chess-side commands.
#[derive(Args)]
struct BoardArgs {
    /// Board size like "8x8" (3..=8 per side)
    #[arg(long, default_value = "8x8")]
    board: String,
    /// planar | cylinder | torus
    #[arg(long, default_value = "planar")]
    topology: String,
}

impl BoardArgs {
    fn spec(&self) -> Result<BoardSpec> {
        Ok(format!("{},{}", self.board, self.topology).parse::<BoardSpec>()?)
    }
}

#[derive(Args)]
struct CacheArgs {
    /// Table cache directory (falls back to $ITLB_CACHE_DIR)
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl CacheArgs {
    fn dir(&self) -> Option<PathBuf> {
        self.cache_dir
            .clone()
            .or_else(|| std::env::var_os("ITLB_CACHE_DIR").map(PathBuf::from))
    }

    fn solver(&self) -> Solver {
        match self.dir() {
            Some(dir) => Solver::new().with_cache_dir(dir),
            None => Solver::new(),
        }
    }
}

#[derive(Args)]
struct OutArgs {
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutArgs {
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text)
                .with_context(|| format!("writing report to {}", path.display()))?,
            None => println!("{text}"),
        }
        Ok(())
    }
}

/// A command-line value we could not make sense of; always exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(error) => {
            eprintln!("error: {}", render_error(&error));
            std::process::exit(exit_code(&error));
        }
    }
}

/// One line per cause, skipping causes a parent already prints inline.
fn render_error(error: &anyhow::Error) -> String {
    let mut out = error.to_string();
    let mut previous = out.clone();
    for cause in error.chain().skip(1) {
        let text = cause.to_string();
        if !previous.contains(&text) {
            out.push_str("\n  caused by: ");
            out.push_str(&text);
        }
        previous = text;
    }
    out
}

/// Maps domain errors to the documented exit codes, looking through
/// wrapper layers so the deepest cause decides.
fn exit_code(error: &anyhow::Error) -> i32 {
    for cause in error.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(d) = cause.downcast_ref::<DecodeError>() {
            return match d {
                DecodeError::Parse { .. } => 2,
                DecodeError::InvariantViolation(inner) => board_exit_code(inner),
            };
        }
        if let Some(b) = cause.downcast_ref::<BoardError>() {
            return board_exit_code(b);
        }
        if let Some(s) = cause.downcast_ref::<SolverError>() {
            match s {
                SolverError::TooManyPieces(_) | SolverError::ResourceLimit { .. } => return 4,
                SolverError::BadMaterial => return 2,
                SolverError::IllegalPosition(inner) => return board_exit_code(inner),
                _ => return 1,
            }
        }
        if let Some(i) = cause.downcast_ref::<IntransitivityError>() {
            match i {
                IntransitivityError::BudgetExceeded { .. } => return 4,
                IntransitivityError::CertificateParse { .. }
                | IntransitivityError::BadParams(_) => return 2,
                IntransitivityError::ChainInvariant(_) | IntransitivityError::Unsatisfiable(_) => {
                    return 3
                }
                // Defer to the wrapped board/solver cause further down
                // the chain.
                IntransitivityError::Superposition(_) | IntransitivityError::Solver(_) => continue,
                IntransitivityError::WorkerPool(_) => return 1,
            }
        }
        if cause.downcast_ref::<MagError>().is_some() {
            return 2;
        }
        if cause.downcast_ref::<MoveError>().is_some() {
            return 3;
        }
    }
    1
}

fn board_exit_code(error: &BoardError) -> i32 {
    match error {
        BoardError::BadBoardText(_)
        | BoardError::BadTopology(_)
        | BoardError::BadBoardSize { .. } => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve { position, cache } => cmd_solve(&position, &cache),
        Command::Beats {
            x,
            y,
            board,
            cache,
            out,
        } => cmd_beats(&x, &y, &board, &cache, &out),
        Command::Chain {
            members,
            board,
            cache,
            out,
        } => cmd_chain(&members, &board, &cache, &out),
        Command::Mc {
            board,
            material,
            chain_len,
            samples,
            seed,
            workers,
            format,
            cache,
            out,
        } => cmd_mc(
            &board, &material, &chain_len, samples, seed, workers, &format, &cache, &out,
        ),
        Command::Exhaustive {
            board,
            material,
            budget_nodes,
            resume,
            cache,
            out,
        } => cmd_exhaustive(
            &board,
            &material,
            budget_nodes,
            resume.as_deref(),
            &cache,
            &out,
        ),
        Command::VerifyCert { path, cache } => cmd_verify_cert(&path, &cache),
        Command::Magicians(mag) => match mag {
            MagCommand::Solve { board } => cmd_mag_solve(&board),
            MagCommand::Order {
                report,
                triples,
                seed,
            } => cmd_mag_order(report, triples, seed),
            MagCommand::AiMove { board, side, seed } => cmd_mag_ai_move(&board, &side, seed),
            MagCommand::Play { board, side, seed } => cmd_mag_play(&board, &side, seed),
        },
        Command::Table {
            board,
            material,
            cache,
            out,
        } => cmd_table(&board, &material, &cache, &out),
    }
}

// ---------------------------------------------------------------------------
// Shared parsing helpers
// ---------------------------------------------------------------------------

fn parse_kinds(token: &str) -> Result<Vec<PieceKind>> {
    let token = token.trim();
    if token.is_empty() {
        return Err(usage("empty material slot"));
    }
    token
        .chars()
        .map(|c| {
            PieceKind::from_letter(c)
                .ok_or_else(|| usage(format!("unknown piece letter `{c}` in `{token}`")))
        })
        .collect()
}

/// "KQ,K,KQ,K" → one piece list per chain slot.
fn parse_materials(text: &str) -> Result<Vec<Vec<PieceKind>>> {
    text.split(',').map(parse_kinds).collect()
}

/// Repeats the given slots to exactly `len` entries.
fn cycle_to(materials: &[Vec<PieceKind>], len: usize) -> Vec<Vec<PieceKind>> {
    (0..len)
        .map(|i| materials[i % materials.len()].clone())
        .collect()
}

fn parse_lengths(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("chain length `{part}` is not a number")))
        })
        .collect()
}

fn parse_player(side: &str) -> Result<Side> {
    match side.to_ascii_lowercase().as_str() {
        "good" | "goodplayer" | "x" => Ok(Side::GoodPlayer),
        "bad" | "badplayer" | "o" => Ok(Side::BadPlayer),
        other => Err(usage(format!(
            "unknown side `{other}`, expected good or bad"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Chess-side commands
// ---------------------------------------------------------------------------

fn cmd_solve(position: &str, cache: &CacheArgs) -> Result<i32> {
    let pos = decode_whole(position)?;
    let solver = cache.solver();
    let outcome = solver.solve(&pos)?;
    let line = solver.principal_line(&pos)?;
    if line.is_empty() {
        println!("{outcome}");
    } else {
        let mut at = pos;
        let mut sans = Vec::with_capacity(line.len());
        for &mv in &line {
            sans.push(san_lite(&at, mv));
            at = apply(&at, mv)?;
        }
        println!("{outcome} line={}", sans.join(" "));
    }
    Ok(0)
}

fn cmd_beats(x: &str, y: &str, board: &BoardArgs, cache: &CacheArgs, out: &OutArgs) -> Result<i32> {
    let spec = board.spec()?;
    let xh = decode_half(x, spec)?;
    let yh = decode_half(y, spec)?;
    let solver = cache.solver();
    let relation = beats(&solver, &xh, &yh)?;
    let report = json!({
        "tool": tool_version(),
        "draw_convention": DRAW_CONVENTION,
        "config": { "board": spec.to_string(), "x": x, "y": y },
        "beats": format!("{relation:?}"),
    });
    out.emit(&serde_json::to_string_pretty(&report)?)?;
    Ok(0)
}

fn cmd_chain(
    members: &[String],
    board: &BoardArgs,
    cache: &CacheArgs,
    out: &OutArgs,
) -> Result<i32> {
    let spec = board.spec()?;
    let halves = members
        .iter()
        .map(|text| decode_half(text, spec).map_err(Into::into))
        .collect::<Result<Vec<_>>>()?;
    let chain = Chain::new(halves)?;
    let solver = cache.solver();
    let edges = chain_edges(&solver, &chain)?;
    let classification = classify_chain(&solver, &chain)?;
    let (label, certificate) = match &classification {
        Classification::Intransitive(cert) => ("Intransitive", Some(cert.to_text())),
        Classification::TransitiveDecisive => ("TransitiveDecisive", None),
        Classification::DrawDegenerate => ("DrawDegenerate", None),
    };
    let report = json!({
        "tool": tool_version(),
        "draw_convention": DRAW_CONVENTION,
        "config": { "board": spec.to_string(), "members": members },
        "classification": label,
        "edges": edges
            .iter()
            .map(|e| format!("{}->{}: {}", e.from, e.to, e.outcome))
            .collect::<Vec<_>>(),
        "certificate": certificate,
    });
    out.emit(&serde_json::to_string_pretty(&report)?)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_mc(
    board: &BoardArgs,
    material: &str,
    chain_len: &str,
    samples: u64,
    seed: u64,
    workers: usize,
    format: &str,
    cache: &CacheArgs,
    out: &OutArgs,
) -> Result<i32> {
    let spec = board.spec()?;
    let slots = parse_materials(material)?;
    let lengths = parse_lengths(chain_len)?;
    if lengths.is_empty() {
        return Err(usage("at least one chain length is required"));
    }
    let solver = cache.solver();
    let mut reports = Vec::with_capacity(lengths.len());
    for &len in &lengths {
        let params = McParams {
            board: spec,
            materials: cycle_to(&slots, len),
            samples,
            seed,
            workers,
        };
        reports.push(monte_carlo(&solver, &params)?);
    }

    let text = match format {
        "json" => {
            let report = json!({
                "tool": tool_version(),
                "draw_convention": DRAW_CONVENTION,
                "config": {
                    "board": spec.to_string(),
                    "material": material,
                    "chain_lengths": lengths,
                    "samples": samples,
                    "seed": seed,
                    "workers": workers,
                },
                "reports": reports,
            });
            serde_json::to_string_pretty(&report)?
        }
        "csv" => {
            use itlb_core::intransitivity::McReport;
            let mut lines = vec![
                format!("# tool={}", tool_version()),
                format!("# draw_convention={DRAW_CONVENTION}"),
                format!(
                    "# config board={spec} material={material} samples={samples} seed={seed} workers={workers}"
                ),
                McReport::csv_header().to_string(),
            ];
            lines.extend(reports.iter().map(|r| r.csv_row()));
            lines.join("\n")
        }
        other => {
            return Err(usage(format!(
                "unknown format `{other}`, expected json or csv"
            )))
        }
    };
    out.emit(&text)?;
    Ok(0)
}

fn cmd_exhaustive(
    board: &BoardArgs,
    material: &str,
    budget_nodes: u64,
    resume: Option<&str>,
    cache: &CacheArgs,
    out: &OutArgs,
) -> Result<i32> {
    let spec = board.spec()?;
    let slots = cycle_to(&parse_materials(material)?, 4);
    let resume = resume
        .map(|text| -> Result<SearchCursor> {
            let indices: Vec<usize> = text
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse::<usize>()
                        .map_err(|_| usage(format!("cursor index `{part}` is not a number")))
                })
                .collect::<Result<_>>()?;
            let indices: [usize; 4] = indices
                .try_into()
                .map_err(|_| usage("a resume cursor has exactly four indices"))?;
            Ok(SearchCursor { indices })
        })
        .transpose()?;
    let solver = cache.solver();
    let params = SearchParams {
        board: spec,
        materials: slots,
        budget_nodes,
        resume,
    };

    match exhaustive_search(&solver, &params) {
        Ok(found) => {
            let report = json!({
                "tool": tool_version(),
                "draw_convention": DRAW_CONVENTION,
                "config": {
                    "board": spec.to_string(),
                    "material": material,
                    "budget_nodes": budget_nodes,
                },
                "exhaustive": found.exhaustive,
                "nodes": found.nodes,
                "candidates_per_slot": found.candidates,
                "certificate": found.certificate.as_ref().map(|c| c.to_text()),
            });
            out.emit(&serde_json::to_string_pretty(&report)?)?;
            Ok(0)
        }
        // A spent budget is not a fatal error: leave a resumable checkpoint.
        Err(IntransitivityError::BudgetExceeded { nodes, cursor }) => {
            let checkpoint = json!({
                "tool": tool_version(),
                "config": {
                    "board": spec.to_string(),
                    "material": material,
                    "budget_nodes": budget_nodes,
                },
                "checkpoint": { "nodes": nodes, "cursor": cursor.indices },
            });
            out.emit(&serde_json::to_string_pretty(&checkpoint)?)?;
            eprintln!(
                "node budget exhausted; resume with --resume {}",
                cursor
                    .indices
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            Ok(4)
        }
        Err(other) => Err(other.into()),
    }
}

fn cmd_verify_cert(path: &str, cache: &CacheArgs) -> Result<i32> {
    let text = if path == "-" {
        let mut buffer = String::new();
        io::stdin()
            .read_to_string(&mut buffer)
            .context("reading certificate from stdin")?;
        buffer
    } else {
        fs::read_to_string(path).with_context(|| format!("reading certificate {path}"))?
    };
    let certificate = CycleCertificate::parse(&text)?;
    let solver = cache.solver();
    let checks = certificate.verify(&solver)?;
    let mut all_pass = true;
    for check in &checks {
        let verdict = if check.pass() { "pass" } else { "FAIL" };
        all_pass &= check.pass();
        println!(
            "edge {}->{}: stored {} / resolved {} — {verdict}",
            check.from, check.to, check.stored, check.resolved
        );
    }
    if all_pass {
        println!(
            "certificate verified: {}/{} edges pass",
            checks.len(),
            checks.len()
        );
        Ok(0)
    } else {
        println!("certificate REJECTED");
        Ok(1)
    }
}

fn cmd_table(board: &BoardArgs, material: &str, cache: &CacheArgs, out: &OutArgs) -> Result<i32> {
    let spec = board.spec()?;
    let (white_text, black_text) = material
        .split_once('v')
        .ok_or_else(|| usage(format!("material `{material}` must look like `KQvK`")))?;
    let white = parse_kinds(white_text)?;
    let black = parse_kinds(black_text)?;
    let solver = cache.solver();
    let table = solver.build_table(&white, &black, spec)?;
    let stats = table.stats();
    let signature = MaterialSignature::new(&white, &black)?;
    let cached_file = cache
        .dir()
        .map(|dir| dir.join(itlb_core::solver::table_file_name(spec, &signature)));
    let report = json!({
        "tool": tool_version(),
        "draw_convention": DRAW_CONVENTION,
        "config": { "board": spec.to_string(), "material": material },
        "slots": table.slot_count(),
        "stats": stats,
        "cache_file": cached_file.map(|p| p.display().to_string()),
    });
    out.emit(&serde_json::to_string_pretty(&report)?)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// Magicians commands
// ---------------------------------------------------------------------------

fn cmd_mag_solve(board: &str) -> Result<i32> {
    let parsed: MagBoard = board.parse()?;
    let line = perfect_line(&parsed);
    let report = json!({
        "tool": tool_version(),
        "config": { "board": parsed.to_string() },
        "perfect_value": line.as_ref().map(|l| l.len()),
        "line": line.map(|l| l.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}

fn cmd_mag_order(report: bool, triples: u64, seed: u64) -> Result<i32> {
    if report {
        let full = verify_transitivity(3, triples, seed)?;
        println!("{}", full.to_json());
    } else {
        println!("{}", row_order_chain());
    }
    Ok(0)
}

fn cmd_mag_ai_move(board: &str, side: &str, seed: u64) -> Result<i32> {
    let parsed: MagBoard = board.parse()?;
    let player = parse_player(side)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let swap = best_swap(&parsed, player, &mut rng);
    let after = apply_swap(&parsed, swap)?;
    let report = json!({
        "tool": tool_version(),
        "config": { "board": parsed.to_string(), "side": format!("{player:?}"), "seed": seed },
        "swap": swap.to_string(),
        "board_after": after.to_string(),
        "heuristic_value": heuristic_value(&after, player),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}

fn cmd_mag_play(board: &str, side: &str, seed: u64) -> Result<i32> {
    let mut position: MagBoard = board.parse()?;
    let human = parse_player(side)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stdin = io::stdin();
    let mut input = stdin.lock().lines();
    let mut to_move = Side::GoodPlayer;
    let mut seen: HashSet<(String, Side)> = HashSet::new();

    let label = |s: Side| match s {
        Side::GoodPlayer => "good (X)",
        Side::BadPlayer => "bad (O)",
    };
    println!("board: {position}   (you play {})", label(human));

    loop {
        if position.is_uniform(Face::Good) {
            println!("all good — the good side wins");
            return Ok(0);
        }
        if position.is_uniform(Face::Bad) {
            println!("all bad — the bad side wins");
            return Ok(0);
        }
        if !seen.insert((position.to_string(), to_move)) {
            println!("repeated position — draw");
            return Ok(0);
        }

        let swap = if to_move == human {
            loop {
                print!(
                    "{} to move — swap (u<col> l<col>, or quit): ",
                    label(to_move)
                );
                io::stdout().flush()?;
                let Some(line) = input.next() else {
                    println!();
                    println!("input closed — game abandoned");
                    return Ok(0);
                };
                let line = line?;
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                if line.eq_ignore_ascii_case("quit") {
                    println!("game abandoned");
                    return Ok(0);
                }
                match line.parse::<Swap>() {
                    Ok(swap)
                        if swap.upper_col < position.width()
                            && swap.lower_col < position.width() =>
                    {
                        break swap
                    }
                    Ok(swap) => println!("  {swap} is off the board (width {})", position.width()),
                    Err(e) => println!("  {e}"),
                }
            }
        } else {
            let swap = best_swap(&position, to_move, &mut rng);
            println!("{} plays {swap}", label(to_move));
            swap
        };

        position = apply_swap(&position, swap)?;
        println!("board: {position}");
        to_move = to_move.opponent();
    }
}
