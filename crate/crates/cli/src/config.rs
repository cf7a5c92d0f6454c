//! `key=value` config files merged into the command line.

use std::collections::HashSet;
use std::fs;

pub const SUBCOMMANDS: [&str; 8] =
    ["profile", "exponents", "monotone", "stokes-check", "varcheck", "bi", "chern", "growth"];
const NESTED: [&str; 2] = ["bi", "chern"];

/// Parses `key=value` lines. Blank lines and lines starting with `#` are
/// skipped; keys may not repeat.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.starts_with('-') || k.contains(char::is_whitespace) {
            return Err(format!("line {}: bad key '{k}'", i + 1));
        }
        if !seen.insert(k.to_string()) {
            return Err(format!("line {}: duplicate key '{k}'", i + 1));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Index just past the subcommand path (`bi solve`, `profile`, ...), if any.
fn command_end(args: &[String]) -> Option<usize> {
    let i = args.iter().position(|a| SUBCOMMANDS.contains(&a.as_str()))?;
    if NESTED.contains(&args[i].as_str()) && i + 1 < args.len() && !args[i + 1].starts_with('-') {
        Some(i + 2)
    } else {
        Some(i + 1)
    }
}

fn flag_names(args: &[String]) -> HashSet<String> {
    args.iter().filter_map(|a| a.strip_prefix("--")).map(|a| a.split('=').next().unwrap_or(a).to_string()).collect()
}

/// Removes `--config FILE` from `args` and splices the file's entries in
/// as flags right after the subcommand. The key `command` names the
/// subcommand when the command line does not. Flags given on the command
/// line win over the file.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut args = args;
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err("--config needs a file".into());
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let entries = parse(&text)?;
    let given = flag_names(&args);
    let mut command = None;
    let mut flags = Vec::new();
    for (k, v) in entries {
        if k == "command" {
            command = Some(v);
            continue;
        }
        if given.contains(&k) {
            continue;
        }
        flags.push(format!("--{k}"));
        flags.push(v);
    }
    let at = match command_end(&args) {
        Some(at) => at,
        None => {
            let cmd = command.ok_or("config has no 'command' and none was given")?;
            let words: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
            let n = words.len();
            args.splice(1..1, words);
            1 + n
        }
    };
    args.splice(at..at, flags);
    Ok(args)
}
