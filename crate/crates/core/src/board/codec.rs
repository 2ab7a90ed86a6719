//! Text codec for half- and whole positions.
//!
//! Grammar (spaces optional after commas and around pipes):
//!
//! ```text
//! half   := color ':' piece (',' piece)*
//! color  := 'W' | 'B'
//! piece  := kind square                  // "Ke1"
//! kind   := K | Q | R | B | N | P        // case-insensitive on input
//! square := file rank                    // file a..h, rank 1..8
//! whole  := half '|' half '|' mover '|' 'board=' FxR ',' topology
//! mover  := 'wtm' | 'btm'
//! ```
//!
//! Encoding is byte-deterministic: pieces are listed king first, then
//! queens, rooks, bishops, knights, pawns, ties broken by square index; kind
//! letters are emitted uppercase. The decoder accepts pieces in any order
//! and any letter case and re-canonicalizes.

use thiserror::Error;

use super::{
    BoardError, BoardSpec, Color, HalfPosition, Piece, PieceKind, Square, Topology, WholePosition,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    /// Malformed text; `offset` is the byte position of the first offending
    /// token.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    /// Well-formed text describing an illegal value.
    #[error("invariant violation: {0}")]
    InvariantViolation(#[from] BoardError),
}

fn parse_err(offset: usize, message: impl Into<String>) -> DecodeError {
    DecodeError::Parse {
        offset,
        message: message.into(),
    }
}

pub fn encode_half(half: &HalfPosition) -> String {
    let mut out = String::new();
    out.push(half.color().letter());
    out.push(':');
    for (i, &(sq, kind)) in half.placements().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push(kind.letter());
        out.push_str(&sq.to_string());
    }
    out
}

pub fn encode_whole(pos: &WholePosition) -> String {
    let mover = match pos.to_move() {
        Color::White => "wtm",
        Color::Black => "btm",
    };
    format!(
        "{} | {} | {} | board={}",
        encode_half(&pos.half(Color::White)),
        encode_half(&pos.half(Color::Black)),
        mover,
        pos.board()
    )
}

pub fn decode_half(text: &str, board: BoardSpec) -> Result<HalfPosition, DecodeError> {
    let (color, placements) = parse_half_at(text, 0, board)?;
    HalfPosition::new(board, color, placements).map_err(DecodeError::from)
}

/// Decode a whole position; the board is read from the trailing
/// `board=FxR,topology` segment.
pub fn decode_whole(text: &str) -> Result<WholePosition, DecodeError> {
    let segments = split_pipes(text);
    if segments.len() != 4 {
        return Err(parse_err(
            text.len(),
            format!(
                "expected 4 `|`-separated segments, found {}",
                segments.len()
            ),
        ));
    }
    let (board_off, board_text) = segments[3];
    let board = parse_board_segment(board_text, board_off)?;

    let (w_off, w_text) = segments[0];
    let (w_color, white) = parse_half_at(w_text, w_off, board)?;
    if w_color != Color::White {
        return Err(parse_err(
            w_off,
            "first segment must be the White half (prefix `W:`)",
        ));
    }
    let (b_off, b_text) = segments[1];
    let (b_color, black) = parse_half_at(b_text, b_off, board)?;
    if b_color != Color::Black {
        return Err(parse_err(
            b_off,
            "second segment must be the Black half (prefix `B:`)",
        ));
    }

    let (m_off, m_text) = segments[2];
    let to_move = match m_text {
        "wtm" => Color::White,
        "btm" => Color::Black,
        other => {
            return Err(parse_err(
                m_off,
                format!("expected `wtm` or `btm`, found `{other}`"),
            ))
        }
    };

    let merged = white
        .into_iter()
        .map(|(sq, kind)| (sq, Piece::new(Color::White, kind)))
        .chain(
            black
                .into_iter()
                .map(|(sq, kind)| (sq, Piece::new(Color::Black, kind))),
        );
    WholePosition::new(board, merged, to_move).map_err(DecodeError::from)
}

/// Decode a whole position and require it to live on `board`.
pub fn decode_whole_on(text: &str, board: BoardSpec) -> Result<WholePosition, DecodeError> {
    let pos = decode_whole(text)?;
    if pos.board() != board {
        return Err(DecodeError::InvariantViolation(BoardError::BoardMismatch));
    }
    Ok(pos)
}

/// Split on `|`, trimming each segment and recording its byte offset.
fn split_pipes(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0usize;
    for (i, ch) in text.char_indices() {
        if ch == '|' {
            out.push(trim_with_offset(text, start, i));
            start = i + 1;
        }
    }
    out.push(trim_with_offset(text, start, text.len()));
    out
}

fn trim_with_offset(text: &str, start: usize, end: usize) -> (usize, &str) {
    let raw = &text[start..end];
    let trimmed = raw.trim_start();
    let offset = start + (raw.len() - trimmed.len());
    (offset, trimmed.trim_end())
}

fn parse_board_segment(text: &str, offset: usize) -> Result<BoardSpec, DecodeError> {
    let body = text
        .strip_prefix("board=")
        .ok_or_else(|| parse_err(offset, "expected `board=FxR,topology`"))?;
    let body_off = offset + "board=".len();
    let (dims, topo) = body
        .split_once(',')
        .ok_or_else(|| parse_err(body_off, "expected `,topology` after board size"))?;
    let (f, r) = dims
        .split_once('x')
        .ok_or_else(|| parse_err(body_off, "expected board size like `8x8`"))?;
    let files: u8 = f
        .parse()
        .map_err(|_| parse_err(body_off, format!("bad file count `{f}`")))?;
    let ranks: u8 = r
        .parse()
        .map_err(|_| parse_err(body_off + f.len() + 1, format!("bad rank count `{r}`")))?;
    let topo_off = body_off + dims.len() + 1;
    let topology: Topology = topo
        .parse()
        .map_err(|_| parse_err(topo_off, format!("unknown topology `{topo}`")))?;
    BoardSpec::new(files, ranks, topology).map_err(DecodeError::from)
}

/// Parse `color ':' piece (',' piece)*`; `base` is the byte offset of `text`
/// within the original input, used for error positions.
fn parse_half_at(
    text: &str,
    base: usize,
    board: BoardSpec,
) -> Result<(Color, Vec<(Square, PieceKind)>), DecodeError> {
    let bytes = text.as_bytes();
    let mut pos = 0usize;
    let color = match bytes.first().map(|b| b.to_ascii_uppercase()) {
        Some(b'W') => Color::White,
        Some(b'B') => Color::Black,
        _ => return Err(parse_err(base, "expected color prefix `W` or `B`")),
    };
    pos += 1;
    if bytes.get(pos) != Some(&b':') {
        return Err(parse_err(base + pos, "expected `:` after color prefix"));
    }
    pos += 1;

    let mut placements = Vec::new();
    loop {
        while bytes.get(pos) == Some(&b' ') {
            pos += 1;
        }
        let kind_off = pos;
        let kind_ch = bytes
            .get(pos)
            .copied()
            .ok_or_else(|| parse_err(base + kind_off, "expected a piece like `Ke1`"))?;
        let kind = PieceKind::from_letter(kind_ch as char).ok_or_else(|| {
            parse_err(
                base + kind_off,
                format!("unknown piece letter `{}`", kind_ch as char),
            )
        })?;
        pos += 1;
        let sq_off = pos;
        let file_ch = bytes.get(pos).copied().map(|b| b as char);
        let rank_ch = bytes.get(pos + 1).copied().map(|b| b as char);
        let square = match (file_ch, rank_ch) {
            (Some(f), Some(r)) => Square::from_chars(f, r)
                .ok_or_else(|| parse_err(base + sq_off, format!("square out of range `{f}{r}`")))?,
            _ => return Err(parse_err(base + sq_off, "expected a square like `e1`")),
        };
        if !board.contains(square) {
            return Err(parse_err(
                base + sq_off,
                format!("square out of range: `{square}` is off the {board} board"),
            ));
        }
        pos += 2;
        placements.push((square, kind));

        while bytes.get(pos) == Some(&b' ') {
            pos += 1;
        }
        match bytes.get(pos) {
            None => break,
            Some(b',') => pos += 1,
            Some(&other) => {
                return Err(parse_err(
                    base + pos,
                    format!("expected `,` between pieces, found `{}`", other as char),
                ))
            }
        }
    }
    Ok((color, placements))
}
