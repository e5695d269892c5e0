//! Line-oriented parser for the `tc` subset.
//!
//! Each non-empty line is either a comment or a `tc qdisc|class|filter add`
//! statement. Unknown option tokens are preserved in `extras` rather than
//! rejected, so model output with stray options (like `prio` on an htb
//! class) still parses and can be repaired downstream. Missing required
//! fields, malformed values and mixed device names are hard errors.

use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use super::ast::*;
use crate::types::TimeOfDay;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct TcParseError {
    pub line: usize,
    pub message: String,
}

fn window_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)enforce\s+from\s+(\d{1,2}:\d{2})\s+to\s+(\d{1,2}:\d{2})").unwrap()
    })
}

/// Parse a whole script. Line numbers in errors are 1-based.
pub fn parse_script(input: &str) -> Result<TcConfig, TcParseError> {
    let mut config = TcConfig::default();
    let mut seen_dev: Option<String> = None;
    for (idx, raw_line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(body) = line.strip_prefix('#') {
            config.annotations.push(Annotation {
                kind: parse_comment(body.trim()),
                position: config.statements.len(),
            });
            continue;
        }
        let stmt = parse_statement(line, line_no)?;
        match &seen_dev {
            None => seen_dev = Some(stmt.dev().to_string()),
            Some(dev) if dev != stmt.dev() => {
                return Err(TcParseError {
                    line: line_no,
                    message: format!(
                        "conflicting device names `{}` and `{}`",
                        dev,
                        stmt.dev()
                    ),
                });
            }
            Some(_) => {}
        }
        config.statements.push(stmt);
    }
    Ok(config)
}

fn parse_comment(body: &str) -> AnnotationKind {
    if let Some(caps) = window_regex().captures(body) {
        let start = caps[1].parse::<TimeOfDay>();
        let end = caps[2].parse::<TimeOfDay>();
        if let (Ok(start), Ok(end)) = (start, end) {
            return AnnotationKind::TimeWindow { start, end };
        }
    }
    AnnotationKind::Note(body.to_string())
}

struct Cursor<'a> {
    tokens: Vec<&'a str>,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<&'a str> {
        let tok = self.peek();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, what: &str) -> Result<&'a str, TcParseError> {
        self.next().ok_or_else(|| self.err(format!("expected {what}, found end of line")))
    }

    fn err(&self, message: String) -> TcParseError {
        TcParseError { line: self.line, message }
    }

    fn value<T: FromStr>(&mut self, what: &str) -> Result<T, TcParseError>
    where
        T::Err: std::fmt::Display,
    {
        let tok = self.expect(what)?;
        tok.parse().map_err(|e| self.err(format!("{what}: {e}")))
    }
}

fn parse_statement(line: &str, line_no: usize) -> Result<TcStatement, TcParseError> {
    let mut cur = Cursor { tokens: line.split_whitespace().collect(), pos: 0, line: line_no };
    let err = |msg: &str| TcParseError { line: line_no, message: msg.to_string() };
    if cur.next() != Some("tc") {
        return Err(err("expected a `tc` statement or a `#` comment"));
    }
    let object = cur.expect("`qdisc`, `class` or `filter`")?;
    let verb = cur.expect("`add`")?;
    if verb != "add" {
        return Err(err(&format!("unsupported verb `{verb}`; only `add` is supported")));
    }
    match object {
        "qdisc" => parse_qdisc(cur),
        "class" => parse_class(cur),
        "filter" => parse_filter(cur),
        other => Err(err(&format!("unknown tc object `{other}`"))),
    }
}

fn parse_qdisc(mut cur: Cursor) -> Result<TcStatement, TcParseError> {
    let mut dev = None;
    let mut parent = None;
    let mut handle = None;
    let mut kind: Option<QdiscKind> = None;
    let mut extras = Vec::new();
    while let Some(tok) = cur.next() {
        match tok {
            "dev" => dev = Some(cur.expect("device name")?.to_string()),
            "root" => parent = Some(Parent::Root),
            "parent" => parent = Some(Parent::Node(cur.value("parent handle")?)),
            "handle" => handle = Some(cur.value("qdisc handle")?),
            "htb" => kind = Some(QdiscKind::Htb { default: None }),
            "netem" => kind = Some(QdiscKind::Netem { delay_ms: None, loss: None }),
            "bfifo" => kind = Some(QdiscKind::Bfifo { limit_bytes: 0 }),
            "pfifo" => kind = Some(QdiscKind::Pfifo { limit_packets: None }),
            "default" if matches!(kind, Some(QdiscKind::Htb { .. })) => {
                let minor = cur.expect("default class minor")?;
                let minor = u16::from_str_radix(minor, 16)
                    .map_err(|_| cur.err(format!("invalid default minor `{minor}`")))?;
                kind = Some(QdiscKind::Htb { default: Some(minor) });
            }
            "delay" if matches!(kind, Some(QdiscKind::Netem { .. })) => {
                let ms = parse_delay(cur.expect("delay value")?).map_err(|m| cur.err(m))?;
                if let Some(QdiscKind::Netem { delay_ms, .. }) = &mut kind {
                    *delay_ms = Some(ms);
                }
            }
            "loss" if matches!(kind, Some(QdiscKind::Netem { .. })) => {
                let pct: LossPct = cur.value("loss value")?;
                if let Some(QdiscKind::Netem { loss, .. }) = &mut kind {
                    *loss = Some(pct);
                }
            }
            "limit" if matches!(kind, Some(QdiscKind::Bfifo { .. })) => {
                let bytes = parse_bytes(cur.expect("byte limit")?).map_err(|m| cur.err(m))?;
                kind = Some(QdiscKind::Bfifo { limit_bytes: bytes });
            }
            "limit" if matches!(kind, Some(QdiscKind::Pfifo { .. })) => {
                let n: u32 = cur.value("packet limit")?;
                kind = Some(QdiscKind::Pfifo { limit_packets: Some(n) });
            }
            other => extras.push(other.to_string()),
        }
    }
    let dev = dev.ok_or_else(|| cur.err("qdisc is missing `dev`".into()))?;
    let parent = parent.ok_or_else(|| cur.err("qdisc is missing `root` or `parent`".into()))?;
    let handle = handle.ok_or_else(|| cur.err("qdisc is missing `handle`".into()))?;
    let kind = kind.ok_or_else(|| cur.err("qdisc is missing a discipline".into()))?;
    if let QdiscKind::Bfifo { limit_bytes: 0 } = kind {
        return Err(cur.err("bfifo requires a byte `limit`".into()));
    }
    Ok(TcStatement::QdiscAdd { dev, parent, handle, kind, extras })
}

fn parse_class(mut cur: Cursor) -> Result<TcStatement, TcParseError> {
    let mut dev = None;
    let mut parent = None;
    let mut classid = None;
    let mut rate = None;
    let mut ceil = None;
    let mut extras = Vec::new();
    while let Some(tok) = cur.next() {
        match tok {
            "dev" => dev = Some(cur.expect("device name")?.to_string()),
            "parent" => parent = Some(cur.value("parent handle")?),
            "classid" => classid = Some(cur.value("classid")?),
            // Marker for the class kind; htb is the only one supported.
            "htb" => {}
            "rate" => rate = Some(cur.value("rate")?),
            "ceil" => ceil = Some(cur.value("ceil")?),
            other => extras.push(other.to_string()),
        }
    }
    let dev = dev.ok_or_else(|| cur.err("class is missing `dev`".into()))?;
    let parent = parent.ok_or_else(|| cur.err("class is missing `parent`".into()))?;
    let classid = classid.ok_or_else(|| cur.err("class is missing `classid`".into()))?;
    let rate = rate.ok_or_else(|| cur.err("class is missing `rate`".into()))?;
    Ok(TcStatement::ClassAdd { dev, parent, classid, rate, ceil, extras })
}

fn parse_filter(mut cur: Cursor) -> Result<TcStatement, TcParseError> {
    let mut dev = None;
    let mut parent = None;
    let mut protocol = None;
    let mut prio = None;
    let mut matches = Vec::new();
    let mut flowid = None;
    let mut extras = Vec::new();
    while let Some(tok) = cur.next() {
        match tok {
            "dev" => dev = Some(cur.expect("device name")?.to_string()),
            "protocol" => protocol = Some(cur.expect("protocol name")?.to_string()),
            "parent" => parent = Some(cur.value("parent handle")?),
            "prio" => prio = Some(cur.value("filter priority")?),
            // Marker for the classifier kind; u32 is the only one supported.
            "u32" => {}
            "match" => parse_match(&mut cur, &mut matches, &mut extras)?,
            "flowid" => flowid = Some(cur.value("flowid")?),
            other => extras.push(other.to_string()),
        }
    }
    let dev = dev.ok_or_else(|| cur.err("filter is missing `dev`".into()))?;
    let parent = parent.ok_or_else(|| cur.err("filter is missing `parent`".into()))?;
    let protocol = protocol.ok_or_else(|| cur.err("filter is missing `protocol`".into()))?;
    let prio = prio.ok_or_else(|| cur.err("filter is missing `prio`".into()))?;
    let flowid = flowid.ok_or_else(|| cur.err("filter is missing `flowid`".into()))?;
    Ok(TcStatement::FilterAdd { dev, parent, protocol, prio, matches, flowid, extras })
}

fn parse_match(
    cur: &mut Cursor,
    matches: &mut Vec<U32Match>,
    extras: &mut Vec<String>,
) -> Result<(), TcParseError> {
    let family = cur.expect("`ip` after `match`")?;
    if family != "ip" {
        return Err(cur.err(format!("unsupported match family `{family}`")));
    }
    let kind = cur.expect("match selector")?;
    match kind {
        "src" => matches.push(U32Match::SrcIp(cur.value("source network")?)),
        "dst" => matches.push(U32Match::DstIp(cur.value("destination network")?)),
        "dport" | "sport" => {
            let port: u16 = cur.value("port")?;
            let mask_tok = cur.expect("port mask")?;
            let mask = parse_mask16(mask_tok).map_err(|m| cur.err(m))?;
            matches.push(if kind == "dport" {
                U32Match::Dport { port, mask }
            } else {
                U32Match::Sport { port, mask }
            });
        }
        "protocol" => {
            let number: u8 = cur.value("protocol number")?;
            let mask_tok = cur.expect("protocol mask")?;
            let mask = parse_mask8(mask_tok).map_err(|m| cur.err(m))?;
            matches.push(U32Match::Protocol { number, mask });
        }
        other => {
            // Unknown selector: keep its tokens verbatim up to the next
            // keyword so the rest of the line still parses.
            extras.push("match".to_string());
            extras.push("ip".to_string());
            extras.push(other.to_string());
            while let Some(tok) = cur.peek() {
                if matches!(tok, "match" | "flowid" | "prio" | "parent" | "dev" | "protocol") {
                    break;
                }
                extras.push(cur.next().unwrap().to_string());
            }
        }
    }
    Ok(())
}

fn parse_delay(tok: &str) -> Result<u64, String> {
    let digits =
        tok.strip_suffix("ms").ok_or_else(|| format!("delay `{tok}` must end in `ms`"))?;
    digits.parse().map_err(|_| format!("invalid delay `{tok}`"))
}

fn parse_bytes(tok: &str) -> Result<u64, String> {
    let lower = tok.to_ascii_lowercase();
    let bad = || format!("invalid byte size `{tok}`");
    let (digits, factor) = if let Some(d) = lower.strip_suffix("kb") {
        (d, 1024)
    } else if let Some(d) = lower.strip_suffix("mb") {
        (d, 1024 * 1024)
    } else if let Some(d) = lower.strip_suffix('b') {
        (d, 1)
    } else {
        (lower.as_str(), 1)
    };
    let value: u64 = digits.parse().map_err(|_| bad())?;
    Ok(value * factor)
}

fn parse_mask16(tok: &str) -> Result<u16, String> {
    let bad = || format!("invalid mask `{tok}`");
    if let Some(hex) = tok.strip_prefix("0x").or_else(|| tok.strip_prefix("0X")) {
        u16::from_str_radix(hex, 16).map_err(|_| bad())
    } else {
        tok.parse().map_err(|_| bad())
    }
}

fn parse_mask8(tok: &str) -> Result<u8, String> {
    let bad = || format!("invalid mask `{tok}`");
    if let Some(hex) = tok.strip_prefix("0x").or_else(|| tok.strip_prefix("0X")) {
        u8::from_str_radix(hex, 16).map_err(|_| bad())
    } else {
        tok.parse().map_err(|_| bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_htb_root() {
        let config = parse_script("tc qdisc add dev eth0 root handle 1: htb default 2\n").unwrap();
        assert_eq!(config.statements.len(), 1);
        match &config.statements[0] {
            TcStatement::QdiscAdd { dev, parent, handle, kind, extras } => {
                assert_eq!(dev, "eth0");
                assert_eq!(*parent, Parent::Root);
                assert_eq!(*handle, Handle::qdisc(1));
                assert_eq!(*kind, QdiscKind::Htb { default: Some(2) });
                assert!(extras.is_empty());
            }
            other => panic!("unexpected statement {other:?}"),
        }
    }

    #[test]
    fn class_prio_lands_in_extras() {
        let config = parse_script(
            "tc class add dev eth0 parent 1: classid 1:1 htb rate 1mbit prio 0\n",
        )
        .unwrap();
        match &config.statements[0] {
            TcStatement::ClassAdd { rate, ceil, extras, .. } => {
                assert_eq!(rate.to_string(), "1mbit");
                assert!(ceil.is_none());
                assert_eq!(extras, &["prio", "0"]);
            }
            other => panic!("unexpected statement {other:?}"),
        }
    }

    #[test]
    fn parses_netem_and_filter() {
        let script = "\
tc qdisc add dev eth0 parent 1:1 handle 10: netem delay 120ms loss 2%
tc filter add dev eth0 protocol ip parent 1:0 prio 1 u32 match ip src 10.1.1.0/24 match ip dport 502 0xffff flowid 1:1
";
        let config = parse_script(script).unwrap();
        match &config.statements[0] {
            TcStatement::QdiscAdd { kind, .. } => {
                assert_eq!(*kind, QdiscKind::Netem { delay_ms: Some(120), loss: Some(LossPct(20)) });
            }
            other => panic!("unexpected statement {other:?}"),
        }
        match &config.statements[1] {
            TcStatement::FilterAdd { prio, matches, flowid, .. } => {
                assert_eq!(*prio, 1);
                assert_eq!(matches.len(), 2);
                assert_eq!(*flowid, Handle::class(1, 1));
                assert_eq!(matches[1], U32Match::Dport { port: 502, mask: 0xffff });
            }
            other => panic!("unexpected statement {other:?}"),
        }
    }

    #[test]
    fn comment_window_is_recognized() {
        let config = parse_script(
            "# enforce from 20:00 to 01:00\ntc qdisc add dev eth0 root handle 1: htb\n# just a note\n",
        )
        .unwrap();
        assert_eq!(config.annotations.len(), 2);
        assert_eq!(config.annotations[0].position, 0);
        assert!(matches!(config.annotations[0].kind, AnnotationKind::TimeWindow { .. }));
        assert_eq!(config.annotations[1].position, 1);
        assert_eq!(config.window().map(|(s, e)| format!("{s}-{e}")), Some("20:00-01:00".into()));
    }

    #[test]
    fn out_of_range_window_is_a_note() {
        let config = parse_script("# enforce from 25:00 to 01:00\n").unwrap();
        assert!(matches!(config.annotations[0].kind, AnnotationKind::Note(_)));
    }

    #[test]
    fn mixed_devices_are_rejected() {
        let script = "\
tc qdisc add dev eth0 root handle 1: htb
tc class add dev eth1 parent 1: classid 1:1 htb rate 1mbit
";
        let err = parse_script(script).unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("conflicting device"));
    }

    #[test]
    fn missing_rate_is_an_error() {
        let err = parse_script("tc class add dev eth0 parent 1: classid 1:1 htb\n").unwrap_err();
        assert!(err.message.contains("rate"));
    }

    #[test]
    fn unknown_selector_is_preserved() {
        let line = "tc filter add dev eth0 protocol ip parent 1:0 prio 1 u32 match ip tos 0x10 0x3f flowid 1:1\n";
        let config = parse_script(line).unwrap();
        match &config.statements[0] {
            TcStatement::FilterAdd { matches, extras, .. } => {
                assert!(matches.is_empty());
                assert_eq!(extras, &["match", "ip", "tos", "0x10", "0x3f"]);
            }
            other => panic!("unexpected statement {other:?}"),
        }
    }

    #[test]
    fn bfifo_limit_units() {
        let config =
            parse_script("tc qdisc add dev eth0 parent 1:2 handle 20: bfifo limit 10kb\n").unwrap();
        match &config.statements[0] {
            TcStatement::QdiscAdd { kind, .. } => {
                assert_eq!(*kind, QdiscKind::Bfifo { limit_bytes: 10240 });
            }
            other => panic!("unexpected statement {other:?}"),
        }
    }
}
