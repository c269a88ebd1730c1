//! `--config` files: `key = value` lines turned into command-line flags.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use bevcalib::Error;

fn parse(path: &Path, text: &str) -> Result<Vec<OsString>, Error> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!("{}:{}: expected `key = value`", path.display(), i + 1)));
        };
        let key = key.trim().trim_start_matches("--");
        let value = value.trim().trim_matches('"');
        if key.is_empty() || key == "config" {
            return Err(Error::Config(format!("{}:{}: invalid key {key:?}", path.display(), i + 1)));
        }
        args.push(format!("--{}", key.replace('_', "-")).into());
        args.push(value.into());
    }
    Ok(args)
}

/// Removes `--config <file>` from `args` and splices the file's flags in
/// right after the subcommand, so flags given on the command line win.
pub fn expand(mut args: Vec<OsString>) -> Result<Vec<OsString>, Error> {
    let mut file = None;
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy().into_owned();
        if arg == "--config" {
            if i + 1 >= args.len() {
                return Err(Error::Config("--config needs a file path".into()));
            }
            file = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(path) = arg.strip_prefix("--config=") {
            file = Some(path.into());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(file) = file else {
        return Ok(args);
    };
    let path = Path::new(&file);
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let injected = parse(path, &text)?;
    // args[1] is the subcommand when present
    let at = args.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map_or(args.len(), |p| p + 2);
    args.splice(at..at, injected);
    Ok(args)
}
