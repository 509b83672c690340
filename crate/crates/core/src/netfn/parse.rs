//! Line-oriented policy files.
//!
//! ```text
//! # block loopback sources
//! eq 1 127.0.0.1 set 6 2
//! range 4 1024 2048 set 6 1
//! ```
//!
//! Field indices are 1-based. Values may be decimal, `0x` hex, or dotted
//! IPv4 quads. `add <j> <delta>` may replace `set <j> <z>` for plaintext-only
//! evaluation.

use super::{Action, FieldIndex, Layout, Match, NetfnError, NetworkFunction, Policy};

pub fn parse_policy_file(text: &str, layout: &Layout) -> Result<NetworkFunction, NetfnError> {
    let mut policies = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let line_no = lineno + 1;
        let policy = parse_line(line).map_err(|msg| NetfnError::Syntax { line: line_no, msg })?;
        policy.validate(layout).map_err(|e| NetfnError::AtLine {
            line: line_no,
            source: Box::new(e),
        })?;
        policies.push(policy);
    }
    NetworkFunction::new(policies)
}

/// Parses a single policy line without layout checks.
pub fn parse_line(line: &str) -> Result<Policy, String> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let (matcher, rest) = match tokens.as_slice() {
        ["eq", i, y, rest @ ..] => (
            Match::Equality {
                field: index(i)?,
                value: value(y)?,
            },
            rest,
        ),
        ["range", i, a, b, rest @ ..] => (
            Match::Range {
                field: index(i)?,
                low: value(a)?,
                high: value(b)?,
            },
            rest,
        ),
        [kw, ..] => return Err(format!("unknown match kind `{kw}`")),
        [] => return Err("empty policy".into()),
    };
    let action = match rest {
        ["set", j, z] => Action::Replace {
            field: index(j)?,
            value: value(z)?,
        },
        ["add", j, d] => Action::Add {
            field: index(j)?,
            delta: d.parse().map_err(|_| format!("bad delta `{d}`"))?,
        },
        _ => return Err("expected `set <j> <z>` or `add <j> <delta>`".into()),
    };
    Ok(Policy { matcher, action })
}

fn index(tok: &str) -> Result<FieldIndex, String> {
    tok.parse::<u16>()
        .ok()
        .and_then(FieldIndex::new)
        .ok_or_else(|| format!("bad field index `{tok}`"))
}

fn value(tok: &str) -> Result<u64, String> {
    if let Some(hex) = tok.strip_prefix("0x") {
        return u64::from_str_radix(hex, 16).map_err(|_| format!("bad value `{tok}`"));
    }
    if tok.contains('.') {
        return tok
            .parse::<std::net::Ipv4Addr>()
            .map(|ip| u32::from(ip) as u64)
            .map_err(|_| format!("bad address `{tok}`"));
    }
    tok.parse().map_err(|_| format!("bad value `{tok}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(i: u16) -> FieldIndex {
        FieldIndex::new(i).unwrap()
    }

    #[test]
    fn parses_equality_and_range() {
        let layout = Layout::ipv4();
        let nf = parse_policy_file("eq 1 10 set 2 99\nrange 4 1024 2048 set 6 1\n", &layout).unwrap();
        assert_eq!(nf.policies()[0], Policy::equality(f(1), 10, f(2), 99));
        assert_eq!(nf.policies()[1], Policy::range(f(4), 1024, 2048, f(6), 1));
    }

    #[test]
    fn comments_and_addresses() {
        let layout = Layout::ipv4();
        let nf = parse_policy_file("# firewall\n\neq 1 127.0.0.1 set 6 2 # block\n", &layout).unwrap();
        assert_eq!(nf.policies(), &[Policy::equality(f(1), 0x7f00_0001, f(6), 2)]);
    }

    #[test]
    fn empty_file_is_an_error() {
        let layout = Layout::ipv4();
        assert!(matches!(
            parse_policy_file("# nothing\n", &layout),
            Err(NetfnError::EmptyFunction)
        ));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let layout = Layout::ipv4();
        let err = parse_policy_file("eq 1 1 set 2 2\neq 1 x set 2 2\n", &layout).unwrap_err();
        assert!(matches!(err, NetfnError::Syntax { line: 2, .. }), "{err}");
        let err = parse_policy_file("eq 0 1 set 2 2", &layout).unwrap_err();
        assert!(matches!(err, NetfnError::Syntax { line: 1, .. }));
    }

    #[test]
    fn width_violations_are_reported() {
        let layout = Layout::ipv4();
        let err = parse_policy_file("eq 3 70000 set 6 2", &layout).unwrap_err();
        assert!(matches!(err, NetfnError::AtLine { line: 1, .. }), "{err}");
    }
}
