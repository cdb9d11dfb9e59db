//! Line-oriented `key = value` background documents.
//!
//! ```text
//! # desk background
//! dim = 4
//! a.0.0 = 1
//! a.1.1 = -1
//! a.2.2 = -1
//! a.3.3 = -1
//! b.3 = 1
//! g = 0.6
//! ```

use std::collections::HashMap;

use super::expr::Expr;
use super::BackgroundField;
use crate::error::{Error, Result};

enum Key {
    Dim,
    A(usize, usize),
    B(usize),
    G,
}

fn parse_key(k: &str) -> Option<Key> {
    let parts: Vec<&str> = k.split('.').collect();
    let idx = |s: &str| s.parse::<usize>().ok();
    match parts.as_slice() {
        ["dim"] => Some(Key::Dim),
        ["g"] => Some(Key::G),
        ["b", i] => Some(Key::B(idx(i)?)),
        ["a", i, j] => Some(Key::A(idx(i)?, idx(j)?)),
        _ => None,
    }
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { line, col, msg: msg.into() }
}

pub fn parse_config(text: &str) -> Result<BackgroundField> {
    let mut dim: Option<(usize, usize)> = None;
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut a_entries: Vec<(usize, usize, Expr, usize)> = Vec::new();
    let mut b_entries: Vec<(usize, Expr, usize)> = Vec::new();
    let mut g: Option<Expr> = None;

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            let col = content.len() - content.trim_start().len();
            return Err(syntax(line, col, "expected 'key = value'"));
        };
        let key = content[..eq].trim();
        let val_raw = &content[eq + 1..];
        let val_off = eq + 1;
        let Some(parsed_key) = parse_key(key) else {
            return Err(Error::Config(format!("line {line}: unknown key '{key}'")));
        };
        let canon = match &parsed_key {
            Key::A(i, j) => format!("a.{}.{}", i.min(j), i.max(j)),
            _ => key.to_string(),
        };
        if let Some(prev) = seen.insert(canon.clone(), line) {
            return Err(Error::Config(format!(
                "line {line}: duplicate key '{key}' (first given on line {prev})"
            )));
        }
        if let Key::Dim = parsed_key {
            let v = val_raw.trim();
            let n: usize = v
                .parse()
                .map_err(|_| Error::Config(format!("line {line}: dim must be an integer, got '{v}'")))?;
            if n < 2 {
                return Err(Error::Config(format!("line {line}: dim must be at least 2")));
            }
            dim = Some((n, line));
            continue;
        }
        let e = Expr::parse(val_raw).map_err(|pe| syntax(line, val_off + pe.col, pe.msg))?;
        match parsed_key {
            Key::A(i, j) => a_entries.push((i, j, e, line)),
            Key::B(i) => b_entries.push((i, e, line)),
            Key::G => g = Some(e),
            Key::Dim => unreachable!(),
        }
    }

    let Some((n, _)) = dim else {
        return Err(Error::Config("missing 'dim'".into()));
    };
    let Some(g) = g else {
        return Err(Error::Config("missing 'g'".into()));
    };
    let check_vars = |e: &Expr, line: usize| -> Result<()> {
        match e.max_var() {
            Some(k) if k >= n => Err(Error::Config(format!(
                "line {line}: x{k} out of range for dim = {n}"
            ))),
            _ => Ok(()),
        }
    };
    check_vars(&g, seen.get("g").copied().unwrap_or(0))?;

    let mut a: Vec<Vec<Expr>> = vec![vec![Expr::Num(0.0); n]; n];
    for (i, j, e, line) in a_entries {
        if i >= n || j >= n {
            return Err(Error::Config(format!("line {line}: index a.{i}.{j} out of range for dim = {n}")));
        }
        check_vars(&e, line)?;
        a[i][j] = e.clone();
        a[j][i] = e;
    }
    let mut b: Vec<Expr> = vec![Expr::Num(0.0); n];
    for (i, e, line) in b_entries {
        if i >= n {
            return Err(Error::Config(format!("line {line}: index b.{i} out of range for dim = {n}")));
        }
        check_vars(&e, line)?;
        b[i] = e;
    }
    Ok(BackgroundField::new(a, b, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DB: &str = "dim = 4\na.0.0 = 1\na.1.1 = -1\na.2.2 = -1\na.3.3 = -1\nb.3 = 1\ng = 0.6\n";

    #[test]
    fn parses_desk_background() {
        let f = parse_config(DB).unwrap();
        assert_eq!(f.dim(), 4);
        let s = f.sample(&[0.0; 4]).unwrap();
        assert_eq!(s.c, 1.0);
    }

    #[test]
    fn syntax_error_column() {
        let e = parse_config("dim = 4\na.0.0 = 1/\n").unwrap_err();
        assert_eq!(e, Error::Syntax { line: 2, col: 9, msg: "missing operand after '/'".into() });
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(parse_config("dim = 2\ng = 0\ng = 1\n"), Err(Error::Config(_))));
        assert!(matches!(parse_config("dim = 2\na.0.1 = 0.1\na.1.0 = 0.1\ng = 0\n"), Err(Error::Config(_))));
        assert!(matches!(parse_config("dim = 2\nb.2 = 1\ng = 0\n"), Err(Error::Config(_))));
        assert!(matches!(parse_config("dim = 2\nb.1 = x3\ng = 0\n"), Err(Error::Config(_))));
        assert!(matches!(parse_config("a.0.0 = 1\ng = 0\n"), Err(Error::Config(_))));
        assert!(matches!(parse_config("dim = 2\n"), Err(Error::Config(_))));
        assert!(matches!(parse_config("dim = 2\nc = 1\ng = 0\n"), Err(Error::Config(_))));
        assert!(matches!(parse_config("dim = 2\ng 0\n"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn comments_and_mirroring() {
        let f = parse_config("# two-dim\ndim = 2  # n\na.0.0 = 1\na.1.1 = -1 # space\na.0.1 = 0.1*x0\nb.1 = 0.5\ng = 0.6*exp(-x1^2)\n").unwrap();
        let s = f.sample(&[1.0, 0.0]).unwrap();
        assert_eq!(s.a[(0, 1)], 0.1);
        assert_eq!(s.a[(1, 0)], 0.1);
        assert!((s.g - 0.6).abs() < 1e-15);
    }
}
