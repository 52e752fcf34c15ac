//! Whitespace tokenizer with double-quote grouping, shared by the lookup-table
//! and ground-truth formats.

/// Splits a line into tokens. A token starting with `"` runs to the matching
/// unescaped `"`; inside quotes `\"` and `\\` are escapes.
pub(crate) fn split(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let Some(&first) = chars.peek() else {
            break;
        };
        let mut tok = String::new();
        if first == '"' {
            chars.next();
            let mut closed = false;
            while let Some(c) = chars.next() {
                match c {
                    '\\' => match chars.next() {
                        Some(e @ ('"' | '\\')) => tok.push(e),
                        Some(other) => {
                            tok.push('\\');
                            tok.push(other);
                        }
                        None => return Err("dangling escape at end of line".into()),
                    },
                    '"' => {
                        closed = true;
                        break;
                    }
                    c => tok.push(c),
                }
            }
            if !closed {
                return Err("unterminated quoted name".into());
            }
            if chars.peek().is_some_and(|c| !c.is_whitespace()) {
                return Err("quoted name must be followed by whitespace".into());
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                if c == '"' {
                    return Err("stray quote inside unquoted token".into());
                }
                tok.push(c);
                chars.next();
            }
        }
        tokens.push(tok);
    }
    Ok(tokens)
}

/// Formats a name so that [`split`] yields it back as a single token.
pub(crate) fn quote(name: &str) -> String {
    let needs = name.is_empty()
        || name.starts_with('#')
        || name.chars().any(|c| c.is_whitespace() || c == '"' || c == '\\');
    if !needs {
        return name.to_string();
    }
    let mut s = String::with_capacity(name.len() + 2);
    s.push('"');
    for c in name.chars() {
        if c == '"' || c == '\\' {
            s.push('\\');
        }
        s.push(c);
    }
    s.push('"');
    s
}

/// Iterates over `(1-based line number, line)` skipping blanks and `#` comments.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_tokens() {
        assert_eq!(
            split(r#"TeamA "J. Doe" FW 7"#).unwrap(),
            vec!["TeamA", "J. Doe", "FW", "7"]
        );
        assert_eq!(split(r#""a \"b\"" c"#).unwrap(), vec![r#"a "b""#, "c"]);
        assert!(split(r#""open"#).is_err());
        assert!(split(r#"ab"c"#).is_err());
    }

    #[test]
    fn quote_round_trips() {
        for name in ["plain", "Two Words", "", r#"q"uote"#, r"back\slash", "#hash"] {
            assert_eq!(split(&quote(name)).unwrap(), vec![name.to_string()]);
        }
    }
}
