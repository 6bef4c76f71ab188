use crate::assigner::TaskCommand;
use crate::error::{Error, Result};

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Extracts the command from a model response. Tokens are matched
/// case-sensitively as whole words; the last occurrence wins because the
/// reasoning precedes the decision.
pub fn parse_command(text: &str, allowed: &[TaskCommand]) -> Result<TaskCommand> {
    let bytes = text.as_bytes();
    let mut best: Option<(usize, TaskCommand)> = None;
    for &cmd in allowed {
        let token = cmd.as_str();
        for (pos, _) in text.match_indices(token) {
            let end = pos + token.len();
            let before_ok = pos == 0 || !is_word_byte(bytes[pos - 1]);
            let after_ok = end == bytes.len() || !is_word_byte(bytes[end]);
            if before_ok && after_ok && best.is_none_or(|(p, _)| pos > p) {
                best = Some((pos, cmd));
            }
        }
    }
    best.map(|(_, c)| c).ok_or(Error::Parse)
}
