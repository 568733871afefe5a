//! `--config` files: a TOML table of flag values, optionally with one table
//! per subcommand. Keys become `--key=value` tokens placed before the
//! explicit flags, so explicit flags override them.

use toml::{Table, Value};

/// Splits `--config FILE` / `--config=FILE` out of `args`.
pub fn take_config_path(args: &mut Vec<String>) -> Result<Option<String>, String> {
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
    Ok(path)
}

fn render(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(format!("{f:?}")),
        Value::Boolean(b) => Ok(b.to_string()),
        Value::Array(items) => {
            let parts = items.iter().map(|i| match i {
                Value::Array(row) => row.iter().map(render).collect::<Result<Vec<_>, _>>().map(|r| r.join(",")),
                other => render(other),
            });
            let parts = parts.collect::<Result<Vec<_>, _>>()?;
            let nested = items.iter().any(Value::is_array);
            Ok(parts.join(if nested { ";" } else { "," }))
        }
        other => Err(format!("unsupported config value {other}")),
    }
}

/// Verify suite names, which may appear as the positional argument.
const SUITES: [&str; 6] = ["kc", "normalization", "commute", "bessel-identity", "lemma-hypotheses", "all"];

/// The flag spelled by a config key: short-only options keep their letter,
/// other one-letter keys name the matching long option.
fn flag(key: &str) -> String {
    match key {
        "x" | "y" => format!("-{key}"),
        "d" => "--dim".into(),
        "t" => "--time".into(),
        "T" => "--horizon".into(),
        "s" => "--start-time".into(),
        "o" => "--output".into(),
        _ => format!("--{}", key.replace('_', "-")),
    }
}

/// Flag tokens for `subcommand` from its own table and from those top-level
/// keys that `accepts` recognises as its flags.
pub fn config_tokens(text: &str, subcommand: &str, accepts: &dyn Fn(&str) -> bool) -> Result<Vec<String>, String> {
    let table: Table = text.parse().map_err(|e| format!("config: {e}"))?;
    let mut out = Vec::new();
    let mut push = |key: &str, v: &Value| -> Result<(), String> {
        out.push(format!("{}={}", flag(key), render(v)?));
        Ok(())
    };
    let commands = ["density", "verify", "sample"];
    let mut suite = None;
    for (k, v) in &table {
        if commands.contains(&k.as_str()) {
            continue;
        }
        if k == "suite" {
            suite = Some(render(v)?);
            continue;
        }
        if accepts(flag(k).trim_start_matches('-')) {
            push(k, v)?;
        }
    }
    if let Some(Value::Table(own)) = table.get(subcommand) {
        for (k, v) in own {
            if k == "suite" {
                suite = Some(render(v)?);
                continue;
            }
            push(k, v)?;
        }
    }
    if let (Some(s), "verify") = (suite, subcommand) {
        out.push(format!("--suite-from-config={s}"));
    }
    Ok(out)
}

/// Rewrites `args` so config tokens precede the user's flags.
///
/// A verify suite from the config is used only when none is given on the command line.
pub fn apply(args: &mut Vec<String>, text: &str, accepts: &dyn Fn(&str, &str) -> bool) -> Result<(), String> {
    let Some(pos) = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(());
    };
    let sub = args[pos].clone();
    let mut tokens = config_tokens(text, &sub, &|flag| accepts(&sub, flag))?;
    let suite = tokens
        .iter()
        .position(|t| t.starts_with("--suite-from-config="))
        .map(|i| tokens.remove(i)["--suite-from-config=".len()..].to_string());
    if let Some(suite) = suite {
        let has_positional = args[pos + 1..].iter().any(|a| SUITES.contains(&a.as_str()));
        if !has_positional {
            tokens.insert(0, suite);
        }
    }
    for (k, t) in tokens.into_iter().enumerate() {
        args.insert(pos + 1 + k, t);
    }
    Ok(())
}
