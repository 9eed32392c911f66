//! PGN-style game records with ICCS movetext.
//!
//! ```text
//! [Event "club"]
//! [Result "1-0"]
//! [Format "ICCS"]
//!
//! 1. h2-e2 h9-g7 2. h0-g2 i9-h9 1-0
//! ```
//!
//! Brace comments and `;` line comments are skipped, NAGs (`$n`) are
//! ignored and variations are rejected. A file may hold many records;
//! [`RecordReader`] streams them one at a time.

use std::io::BufRead;

use crate::rules::{GameState, Move};

use super::fen::parse_fen;
use super::iccs::{emit_iccs_move, parse_iccs_at, RankBase};
use super::NotationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordResult {
    RedWin,
    BlackWin,
    Draw,
    Unknown,
}

impl RecordResult {
    pub fn parse(token: &str) -> Option<RecordResult> {
        match token {
            "1-0" => Some(RecordResult::RedWin),
            "0-1" => Some(RecordResult::BlackWin),
            "1/2-1/2" => Some(RecordResult::Draw),
            "*" => Some(RecordResult::Unknown),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            RecordResult::RedWin => "1-0",
            RecordResult::BlackWin => "0-1",
            RecordResult::Draw => "1/2-1/2",
            RecordResult::Unknown => "*",
        }
    }

    /// +1 Red win, -1 Black win, 0 otherwise.
    pub fn red_score(self) -> f64 {
        match self {
            RecordResult::RedWin => 1.0,
            RecordResult::BlackWin => -1.0,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameRecord {
    /// Tag pairs in file order.
    pub tags: Vec<(String, String)>,
    pub moves: Vec<Move>,
    pub result: RecordResult,
}

impl GameRecord {
    pub fn new(tags: Vec<(String, String)>, moves: Vec<Move>, result: RecordResult) -> Self {
        GameRecord {
            tags,
            moves,
            result,
        }
    }

    pub fn tag(&self, name: &str) -> Option<&str> {
        self.tags
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    /// The position given by the FEN tag, or the standard start without one.
    pub fn start_state(&self) -> Result<GameState, NotationError> {
        match self.tag("FEN") {
            Some(fen) => parse_fen(fen),
            None => Ok(GameState::initial()),
        }
    }

    /// Serializes to the text format read by [`parse_game_record`].
    pub fn to_pgn(&self) -> String {
        let mut out = String::new();
        for (name, value) in &self.tags {
            let escaped = value.replace('\\', "\\\\").replace('"', "\\\"");
            out.push_str(&format!("[{name} \"{escaped}\"]\n"));
        }
        out.push('\n');
        let mut line = String::new();
        let mut push = |token: String, out: &mut String| {
            if !line.is_empty() && line.len() + 1 + token.len() > 79 {
                out.push_str(&line);
                out.push('\n');
                line.clear();
            }
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str(&token);
        };
        for (i, &mv) in self.moves.iter().enumerate() {
            if i % 2 == 0 {
                push(format!("{}.", i / 2 + 1), &mut out);
            }
            push(emit_iccs_move(mv), &mut out);
        }
        push(self.result.token().to_string(), &mut out);
        out.push_str(&line);
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RecordOptions {
    pub ranks: RankBase,
}

/// Parses exactly one record.
pub fn parse_game_record(text: &str) -> Result<GameRecord, NotationError> {
    parse_game_record_with(text, RecordOptions::default())
}

pub fn parse_game_record_with(
    text: &str,
    options: RecordOptions,
) -> Result<GameRecord, NotationError> {
    let mut reader = RecordReader::with_options(text.as_bytes(), options);
    let record = reader
        .next()
        .unwrap_or_else(|| Err(NotationError::syntax(1, 1, "no game record found")))?;
    if let Some(extra) = reader.next() {
        let line = match extra {
            Err(NotationError::Syntax { line, .. }) => line,
            _ => reader.line_no,
        };
        return Err(NotationError::syntax(line, 1, "more than one game record"));
    }
    Ok(record)
}

fn parse_tag_line(line: &str, line_no: usize) -> Result<(String, String), NotationError> {
    let err = |col: usize, msg: &str| NotationError::syntax(line_no, col, msg.to_string());
    let inner = line
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| err(1, "tag must be enclosed in [ ]"))?;
    let inner = inner.trim();
    let split = inner
        .find(char::is_whitespace)
        .ok_or_else(|| err(2, "tag needs a name and a quoted value"))?;
    let name = &inner[..split];
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(err(2, "bad tag name"));
    }
    let rest = inner[split..].trim();
    let body = rest
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .ok_or_else(|| err(split + 2, "tag value must be quoted"))?;
    let mut value = String::with_capacity(body.len());
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some(e) => value.push(e),
                None => return Err(err(line.len(), "dangling escape")),
            },
            '"' => return Err(err(split + 2, "unescaped quote in tag value")),
            c => value.push(c),
        }
    }
    Ok((name.to_string(), value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Between records: skipping blank lines.
    Idle,
    Tags,
    Moves,
    /// Recovering from an error: drop lines until the next tag section.
    Skip {
        past_tags: bool,
    },
}

struct Partial {
    tags: Vec<(String, String)>,
    moves: Vec<Move>,
    terminator: Option<RecordResult>,
    result_tag: Option<RecordResult>,
    in_comment: bool,
}

impl Partial {
    fn new() -> Self {
        Partial {
            tags: Vec::new(),
            moves: Vec::new(),
            terminator: None,
            result_tag: None,
            in_comment: false,
        }
    }

    fn finish(self) -> GameRecord {
        let result = self
            .result_tag
            .or(self.terminator)
            .unwrap_or(RecordResult::Unknown);
        GameRecord::new(self.tags, self.moves, result)
    }
}

/// Streaming reader over a buffered source holding zero or more records.
///
/// After a malformed record the reader yields one error and resumes at the
/// next tag section.
pub struct RecordReader<R> {
    source: R,
    options: RecordOptions,
    line_no: usize,
    phase: Phase,
    pushback: Option<String>,
    partial: Option<Partial>,
    buf: String,
    eof: bool,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(source: R) -> Self {
        Self::with_options(source, RecordOptions::default())
    }

    pub fn with_options(source: R, options: RecordOptions) -> Self {
        RecordReader {
            source,
            options,
            line_no: 0,
            phase: Phase::Idle,
            pushback: None,
            partial: None,
            buf: String::new(),
            eof: false,
        }
    }

    /// Line number of the last line read (1-based).
    pub fn line(&self) -> usize {
        self.line_no
    }

    fn next_line(&mut self) -> Result<Option<String>, NotationError> {
        if let Some(line) = self.pushback.take() {
            return Ok(Some(line));
        }
        if self.eof {
            return Ok(None);
        }
        self.buf.clear();
        if self.source.read_line(&mut self.buf)? == 0 {
            self.eof = true;
            return Ok(None);
        }
        self.line_no += 1;
        let line = self.buf.trim_end_matches(['\n', '\r']).to_string();
        Ok(Some(line))
    }

    fn fail(
        &mut self,
        err: NotationError,
        past_tags: bool,
    ) -> Option<Result<GameRecord, NotationError>> {
        self.partial = None;
        self.phase = Phase::Skip { past_tags };
        Some(Err(err))
    }

    fn close_tags(&mut self) -> Result<(), NotationError> {
        let partial = self.partial.as_mut().expect("partial record during tags");
        if let Some(format) = partial
            .tags
            .iter()
            .find(|(k, _)| k == "Format")
            .map(|(_, v)| v)
        {
            if !format.eq_ignore_ascii_case("ICCS") {
                return Err(NotationError::UnsupportedFormat(format.clone()));
            }
        }
        Ok(())
    }

    /// Consumes one movetext line; returns true when a result token ends the record.
    fn movetext(&mut self, line: &str) -> Result<bool, NotationError> {
        let line_no = self.line_no;
        let ranks = self.options.ranks;
        let partial = self.partial.as_mut().expect("partial record during moves");
        let mut chars = line.char_indices().peekable();
        while let Some(&(start, c)) = chars.peek() {
            if partial.in_comment {
                chars.next();
                if c == '}' {
                    partial.in_comment = false;
                }
                continue;
            }
            if c.is_whitespace() {
                chars.next();
                continue;
            }
            match c {
                '{' => {
                    partial.in_comment = true;
                    chars.next();
                    continue;
                }
                ';' => break,
                '(' | ')' => {
                    return Err(NotationError::syntax(
                        line_no,
                        start + 1,
                        "variations are not supported",
                    ))
                }
                _ => {}
            }
            let mut end = start;
            while let Some(&(i, ch)) = chars.peek() {
                if ch.is_whitespace() || ch == '{' || ch == ';' || ch == '(' {
                    break;
                }
                end = i + ch.len_utf8();
                chars.next();
            }
            let token = &line[start..end];
            let column = start + 1;
            if let Some(result) = RecordResult::parse(token) {
                partial.terminator = Some(result);
                return Ok(true);
            }
            if token.starts_with('$') {
                continue;
            }
            let digits = token.chars().take_while(|c| c.is_ascii_digit()).count();
            let mut body = token;
            if digits > 0 && token[digits..].starts_with('.') {
                body = token[digits..].trim_start_matches('.');
                if body.is_empty() {
                    continue;
                }
            }
            let offset = token.len() - body.len();
            let mv = parse_iccs_at(body, ranks, line_no, column + offset)?;
            partial.moves.push(mv);
        }
        Ok(false)
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<GameRecord, NotationError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.next_line() {
                Ok(Some(line)) => line,
                Ok(None) => {
                    let phase = std::mem::replace(&mut self.phase, Phase::Idle);
                    return match phase {
                        Phase::Tags => match self.close_tags() {
                            Ok(()) => self.partial.take().map(|p| Ok(p.finish())),
                            Err(e) => self.fail(e, true),
                        },
                        Phase::Moves => {
                            let partial = self.partial.take()?;
                            if partial.in_comment {
                                let line = self.line_no;
                                return self.fail(
                                    NotationError::syntax(line, 1, "unterminated comment"),
                                    true,
                                );
                            }
                            Some(Ok(partial.finish()))
                        }
                        _ => None,
                    };
                }
                Err(e) => return self.fail(e, true),
            };
            let trimmed = line.trim();
            let is_tag = trimmed.starts_with('[');
            match self.phase {
                Phase::Skip { past_tags } => {
                    if is_tag && past_tags {
                        self.phase = Phase::Idle;
                        self.pushback = Some(line);
                    } else if !is_tag {
                        self.phase = Phase::Skip { past_tags: true };
                    }
                }
                Phase::Idle => {
                    if trimmed.is_empty() {
                        continue;
                    }
                    self.partial = Some(Partial::new());
                    if is_tag {
                        self.phase = Phase::Tags;
                    } else {
                        self.phase = Phase::Moves;
                    }
                    self.pushback = Some(line);
                }
                Phase::Tags => {
                    if is_tag {
                        match parse_tag_line(trimmed, self.line_no) {
                            Ok((name, value)) => {
                                let partial = self.partial.as_mut().unwrap();
                                if name == "Result" {
                                    match RecordResult::parse(&value) {
                                        Some(r) => partial.result_tag = Some(r),
                                        None => {
                                            let line = self.line_no;
                                            return self.fail(
                                                NotationError::syntax(
                                                    line,
                                                    1,
                                                    format!("bad Result value {value:?}"),
                                                ),
                                                false,
                                            );
                                        }
                                    }
                                }
                                partial.tags.push((name, value));
                            }
                            Err(e) => return self.fail(e, false),
                        }
                    } else {
                        if let Err(e) = self.close_tags() {
                            return self.fail(e, true);
                        }
                        self.phase = Phase::Moves;
                        if !trimmed.is_empty() {
                            self.pushback = Some(line);
                        }
                    }
                }
                Phase::Moves => {
                    let in_comment = self.partial.as_ref().is_some_and(|p| p.in_comment);
                    if is_tag && !in_comment {
                        // A new tag section starts the next record.
                        self.pushback = Some(line);
                        self.phase = Phase::Idle;
                        return self.partial.take().map(|p| Ok(p.finish()));
                    }
                    match self.movetext(&line) {
                        Ok(true) => {
                            self.phase = Phase::Idle;
                            return self.partial.take().map(|p| Ok(p.finish()));
                        }
                        Ok(false) => {}
                        Err(e) => return self.fail(e, true),
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::parse_iccs_move;

    const FOUR: &str = "[Event \"fixture\"]\n[Result \"1-0\"]\n[Format \"ICCS\"]\n\n1. h2-e2 h9-g7 2. h0-g2 i9-h9 1-0\n";

    #[test]
    fn parses_tags_moves_and_result() {
        let rec = parse_game_record(FOUR).unwrap();
        assert_eq!(rec.result, RecordResult::RedWin);
        assert_eq!(rec.moves.len(), 4);
        assert_eq!(rec.moves[0], parse_iccs_move("h2-e2").unwrap());
        assert_eq!(rec.tag("Event"), Some("fixture"));
        assert!(rec
            .start_state()
            .unwrap()
            .same_position(&GameState::initial()));
    }

    #[test]
    fn crlf_comments_and_nags() {
        let text =
            "[Result \"0-1\"]\r\n\r\n1.h2e2 {a long\r\ncomment} h9g7 $1 ; trailing\r\n2. h0g2\r\n";
        let rec = parse_game_record(text).unwrap();
        assert_eq!(rec.moves.len(), 3);
        assert_eq!(rec.result, RecordResult::BlackWin);
    }

    #[test]
    fn rejects_other_formats_and_variations() {
        let wxf = "[Format \"WXF\"]\n\n1. C2.5 h8+7 *\n";
        assert!(matches!(
            parse_game_record(wxf),
            Err(NotationError::UnsupportedFormat(f)) if f == "WXF"
        ));
        let var = "[Result \"*\"]\n\n1. h2-e2 (1. b2-e2) h9-g7 *\n";
        match parse_game_record(var) {
            Err(NotationError::Syntax { line, column, .. }) => assert_eq!((line, column), (3, 10)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_token_reports_location() {
        let text = "[Result \"*\"]\n\n1. h2-e2 h9-z7 *\n";
        match parse_game_record(text) {
            Err(NotationError::Syntax { line, column, .. }) => assert_eq!((line, column), (3, 10)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn result_falls_back_to_terminator_then_unknown() {
        let rec = parse_game_record("1. h2-e2 1/2-1/2\n").unwrap();
        assert_eq!(rec.result, RecordResult::Draw);
        let rec = parse_game_record("[Event \"x\"]\n\n1. h2-e2\n").unwrap();
        assert_eq!(rec.result, RecordResult::Unknown);
        assert!(parse_game_record("[Result \"2-0\"]\n\n*\n").is_err());
    }

    #[test]
    fn reader_streams_and_recovers() {
        let text = format!(
            "{FOUR}\n[Result \"0-1\"]\n\n1. h2-q2 *\n\n[Result \"1/2-1/2\"]\n[FEN \"4k4/9/9/9/9/9/9/9/9/3K5 w\"]\n\n1. d0-d1 1/2-1/2\n"
        );
        let items: Vec<_> = RecordReader::new(text.as_bytes()).collect();
        assert_eq!(items.len(), 3);
        assert!(items[0].is_ok());
        assert!(items[1].is_err());
        let third = items[2].as_ref().unwrap();
        assert_eq!(third.result, RecordResult::Draw);
        assert_eq!(third.moves.len(), 1);
        assert_eq!(third.start_state().unwrap().board().piece_count(), 2);
    }

    #[test]
    fn records_without_blank_separator() {
        let text = "[Result \"1-0\"]\n1. h2-e2\n[Result \"0-1\"]\n1. b2-e2 0-1\n";
        let recs: Vec<_> = RecordReader::new(text.as_bytes())
            .map(Result::unwrap)
            .collect();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].result, RecordResult::RedWin);
        assert_eq!(recs[1].moves.len(), 1);
    }

    #[test]
    fn pgn_round_trip() {
        let rec = parse_game_record(FOUR).unwrap();
        let again = parse_game_record(&rec.to_pgn()).unwrap();
        assert_eq!(rec, again);
    }

    #[test]
    fn one_based_ranks_option() {
        let opts = RecordOptions {
            ranks: RankBase::One,
        };
        let rec = parse_game_record_with("1. h3-e3 h10-g8 *\n", opts).unwrap();
        assert_eq!(rec.moves[0], parse_iccs_move("h2-e2").unwrap());
        assert_eq!(rec.moves[1], parse_iccs_move("h9-g7").unwrap());
    }
}
