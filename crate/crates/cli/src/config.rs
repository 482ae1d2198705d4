//! Settings file. Every command-line flag has a key here; flags win over the
//! file, and `SIGNFORGE_LEXICON` wins over both for the lexicon path.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use signforge_core::compiler::TransitionPolicy;
use signforge_core::x3d::EmissionOptions;

pub const LEXICON_ENV: &str = "SIGNFORGE_LEXICON";
pub const DEFAULT_PORT: u16 = 8030;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub lexicon: Option<PathBuf>,
    pub port: Option<u16>,
    pub host: Option<String>,
    pub html: Option<bool>,
    pub transition: TransitionPolicy,
    pub emission: EmissionOptions,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut config: Config = toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
        // Relative lexicon paths are relative to the config file.
        if let (Some(lex), Some(dir)) = (&config.lexicon, path.parent()) {
            if lex.is_relative() {
                config.lexicon = Some(dir.join(lex));
            }
        }
        config.transition.check().map_err(|e| format!("config {}: {e}", path.display()))?;
        config.emission.check().map_err(|e| format!("config {}: {e}", path.display()))?;
        Ok(config)
    }

    /// Lexicon path by precedence: environment, flag, config file.
    pub fn lexicon_path(&self, env: Option<&str>, flag: Option<&Path>) -> Option<PathBuf> {
        env.filter(|s| !s.is_empty())
            .map(PathBuf::from)
            .or_else(|| flag.map(Path::to_path_buf))
            .or_else(|| self.lexicon.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("signforge.toml");
        std::fs::write(
            &path,
            "lexicon = \"lex.xml\"\nport = 9000\nhtml = true\n[transition]\nmin_duration = 0.1\n[emission]\nloop = true\ncycle_padding = 0.25\n",
        )
        .unwrap();
        let c = Config::load(&path).unwrap();
        assert_eq!(c.lexicon, Some(dir.path().join("lex.xml")));
        assert_eq!(c.port, Some(9000));
        assert_eq!(c.transition.min_duration, 0.1);
        assert_eq!(c.transition.max_duration, 0.8);
        assert!(c.emission.loop_playback);
        assert_eq!(c.emission.humanoid_def_name, "Signer");
    }

    #[test]
    fn unknown_keys_and_bad_policies_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "prot = 1\n").unwrap();
        assert!(Config::load(&path).is_err());
        std::fs::write(&path, "[transition]\nmin_duration = 2.0\n").unwrap();
        assert!(Config::load(&path).is_err());
    }

    #[test]
    fn precedence() {
        let c = Config { lexicon: Some("from_config.xml".into()), ..Config::default() };
        assert_eq!(c.lexicon_path(Some("env.xml"), Some(Path::new("flag.xml"))), Some("env.xml".into()));
        assert_eq!(c.lexicon_path(None, Some(Path::new("flag.xml"))), Some("flag.xml".into()));
        assert_eq!(c.lexicon_path(Some(""), None), Some("from_config.xml".into()));
        assert_eq!(Config::default().lexicon_path(None, None), None);
    }
}
