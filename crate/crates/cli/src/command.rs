//! One CLI action, shared by the subcommands and scenario steps.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Register { email: String, password: String },
    Login { email: String, password: String },
    Upload { caller: String, file: PathBuf, author: String, title: String, date: Option<String> },
    Download { caller: String, root: String, out: PathBuf },
    Grant { caller: String, addr: String, root: String },
    Revoke { caller: String, addr: String, root: String },
    Revenue,
    ExploreHeight(u64),
    ExploreViolations,
    Fingerprint { file: PathBuf },
}

/// A scenario entry. `bind` names the command's result (an address or a
/// root) for later `$name` substitution; `expect` is the required exit code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub op: String,
    #[serde(default)]
    pub args: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<u8>,
}

fn take(args: &mut BTreeMap<String, String>, key: &str) -> Result<String, String> {
    args.remove(key).ok_or_else(|| format!("missing argument `{key}`"))
}

impl Command {
    /// Builds a command from resolved scenario arguments. Relative paths are
    /// taken relative to `base`.
    pub fn from_step(op: &str, args: &BTreeMap<String, String>, base: &std::path::Path) -> Result<Command, String> {
        let mut a = args.clone();
        let path = |p: String| base.join(p);
        let cmd = match op {
            "register" => Command::Register { email: take(&mut a, "email")?, password: take(&mut a, "password")? },
            "login" => Command::Login { email: take(&mut a, "email")?, password: take(&mut a, "password")? },
            "upload" => Command::Upload {
                caller: take(&mut a, "as")?,
                file: path(take(&mut a, "file")?),
                author: take(&mut a, "author")?,
                title: take(&mut a, "title")?,
                date: a.remove("date"),
            },
            "download" => Command::Download {
                caller: take(&mut a, "as")?,
                root: take(&mut a, "root")?,
                out: path(take(&mut a, "out")?),
            },
            "grant" => {
                Command::Grant { caller: take(&mut a, "as")?, addr: take(&mut a, "addr")?, root: take(&mut a, "root")? }
            }
            "revoke" => Command::Revoke {
                caller: take(&mut a, "as")?,
                addr: take(&mut a, "addr")?,
                root: take(&mut a, "root")?,
            },
            "revenue" => Command::Revenue,
            "explore" => match (a.remove("height"), a.remove("violations")) {
                (Some(h), None) => Command::ExploreHeight(h.parse().map_err(|_| format!("bad height `{h}`"))?),
                (None, Some(_)) => Command::ExploreViolations,
                _ => return Err("explore takes exactly one of `height` or `violations`".into()),
            },
            "fingerprint" => Command::Fingerprint { file: path(take(&mut a, "file")?) },
            other => return Err(format!("unknown op `{other}`")),
        };
        if let Some(extra) = a.keys().next() {
            return Err(format!("unexpected argument `{extra}` for {op}"));
        }
        Ok(cmd)
    }

    pub fn to_step(&self) -> Step {
        let path = |p: &PathBuf| p.to_string_lossy().into_owned();
        let (op, pairs): (&str, Vec<(&str, String)>) = match self {
            Command::Register { email, password } => {
                ("register", vec![("email", email.clone()), ("password", password.clone())])
            }
            Command::Login { email, password } => {
                ("login", vec![("email", email.clone()), ("password", password.clone())])
            }
            Command::Upload { caller, file, author, title, date } => {
                let mut v = vec![
                    ("as", caller.clone()),
                    ("file", path(file)),
                    ("author", author.clone()),
                    ("title", title.clone()),
                ];
                if let Some(d) = date {
                    v.push(("date", d.clone()));
                }
                ("upload", v)
            }
            Command::Download { caller, root, out } => {
                ("download", vec![("as", caller.clone()), ("root", root.clone()), ("out", path(out))])
            }
            Command::Grant { caller, addr, root } => {
                ("grant", vec![("as", caller.clone()), ("addr", addr.clone()), ("root", root.clone())])
            }
            Command::Revoke { caller, addr, root } => {
                ("revoke", vec![("as", caller.clone()), ("addr", addr.clone()), ("root", root.clone())])
            }
            Command::Revenue => ("revenue", vec![]),
            Command::ExploreHeight(h) => ("explore", vec![("height", h.to_string())]),
            Command::ExploreViolations => ("explore", vec![("violations", "true".into())]),
            Command::Fingerprint { file } => ("fingerprint", vec![("file", path(file))]),
        };
        Step {
            op: op.into(),
            args: pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            bind: None,
            expect: None,
        }
    }

    /// Whether the command can change the datadir.
    pub fn mutates(&self) -> bool {
        matches!(
            self,
            Command::Register { .. }
                | Command::Upload { .. }
                | Command::Download { .. }
                | Command::Grant { .. }
                | Command::Revoke { .. }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn steps_roundtrip() {
        let cmds = [
            Command::Register { email: "a@b.c".into(), password: "pw".into() },
            Command::Upload {
                caller: "00".into(),
                file: "/tmp/x.wav".into(),
                author: "A".into(),
                title: "T".into(),
                date: Some("1".into()),
            },
            Command::ExploreHeight(3),
            Command::ExploreViolations,
            Command::Revenue,
        ];
        for c in cmds {
            let s = c.to_step();
            assert_eq!(Command::from_step(&s.op, &s.args, Path::new("/")).unwrap(), c);
        }
    }

    #[test]
    fn unknown_args_are_refused() {
        let mut args = BTreeMap::new();
        args.insert("colour".to_string(), "red".to_string());
        assert!(Command::from_step("revenue", &args, Path::new(".")).is_err());
        assert!(Command::from_step("dance", &BTreeMap::new(), Path::new(".")).is_err());
    }
}
