use crate::rules::{Move, Square};

use super::NotationError;

/// How rank digits are numbered in ICCS text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankBase {
    /// Standard ICCS: ranks 0..=9.
    #[default]
    Zero,
    /// Lenient logs numbering ranks 1..=10.
    One,
}

fn parse_square(chars: &[char], pos: &mut usize, base: RankBase) -> Result<Square, String> {
    let letter = *chars.get(*pos).ok_or("missing file letter")?;
    let file = match letter.to_ascii_lowercase() {
        c @ 'a'..='i' => c as u8 - b'a',
        _ => return Err(format!("bad file letter {letter:?}")),
    };
    *pos += 1;
    let start = *pos;
    let max_digits = match base {
        RankBase::Zero => 1,
        RankBase::One => 2,
    };
    while *pos < chars.len() && *pos - start < max_digits && chars[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == start {
        return Err(format!("missing rank digit after {letter:?}"));
    }
    let digits: String = chars[start..*pos].iter().collect();
    let value: u8 = digits.parse().map_err(|_| format!("bad rank {digits:?}"))?;
    let rank = match base {
        RankBase::Zero => value,
        RankBase::One if (1..=10).contains(&value) => value - 1,
        RankBase::One => return Err(format!("rank {value} outside 1..=10")),
    };
    Square::new(file, rank).ok_or_else(|| format!("rank {value} out of range"))
}

/// Parses `<file><rank>[-]<file><rank>` with ranks 0..=9.
pub fn parse_iccs_move(text: &str) -> Result<Move, NotationError> {
    parse_iccs_move_with(text, RankBase::Zero)
}

pub fn parse_iccs_move_with(text: &str, base: RankBase) -> Result<Move, NotationError> {
    parse_iccs_at(text, base, 1, 1)
}

/// Parse with a source location used in errors.
pub(crate) fn parse_iccs_at(
    text: &str,
    base: RankBase,
    line: usize,
    column: usize,
) -> Result<Move, NotationError> {
    let chars: Vec<char> = text.trim().chars().collect();
    let err = |message: String| NotationError::syntax(line, column, format!("{text:?}: {message}"));
    let mut pos = 0;
    let from = parse_square(&chars, &mut pos, base).map_err(err)?;
    if chars.get(pos) == Some(&'-') {
        pos += 1;
    }
    let to = parse_square(&chars, &mut pos, base).map_err(err)?;
    if pos != chars.len() {
        return Err(err("trailing characters".into()));
    }
    Move::new(from, to).ok_or_else(|| err("source equals destination".into()))
}

/// Lowercase, hyphenated ICCS (`h2-e2`).
pub fn emit_iccs_move(mv: Move) -> String {
    mv.to_string()
}
