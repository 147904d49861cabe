use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use precoder_core::channels::{builtin_by_name, load_channel, ChannelEnsemble};
use precoder_core::{Constellation, OptimizerParams, Pairing};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderMode {
    None,
    Optimal,
    Pgp,
}

impl PrecoderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PrecoderMode::None => "none",
            PrecoderMode::Optimal => "optimal",
            PrecoderMode::Pgp => "pgp",
        }
    }
}

/// Everything a sweep needs. Config files are JSON objects with these keys;
/// missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// `h1`, `h2`, `h4x4`, `gaussian:NRxNT` or `kronecker:NRxNT:RHO_R:RHO_T`.
    pub channel: String,
    /// JSON channel file; takes precedence over `channel`.
    pub channel_file: Option<PathBuf>,
    pub modulation: usize,
    pub snr_b_db: Vec<f64>,
    pub precoder: PrecoderMode,
    pub gh_order: usize,
    /// 0 evaluates with quadrature; otherwise the reported MI is a Monte-Carlo
    /// estimate with this many samples (of the optimized link, if any).
    pub mc_samples: usize,
    pub seed: u64,
    pub group_size: usize,
    pub pairing: Pairing,
    pub plan_file: Option<PathBuf>,
    pub draws: usize,
    pub out: Option<PathBuf>,
    pub record_time: bool,
    pub optimizer: OptimizerParams,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            channel: "h1".into(),
            channel_file: None,
            modulation: 16,
            snr_b_db: parse_grid("-10:20:2").expect("default grid"),
            precoder: PrecoderMode::None,
            gh_order: 3,
            mc_samples: 0,
            seed: 1,
            group_size: 2,
            pairing: Pairing::Consecutive,
            plan_file: None,
            draws: 1,
            out: None,
            record_time: false,
            optimizer: OptimizerParams::default(),
        }
    }
}

impl SweepConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.snr_b_db.is_empty() {
            return Err(CliError::Usage("SNR_b grid is empty".into()));
        }
        if self.snr_b_db.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Usage("SNR_b grid has non-finite entries".into()));
        }
        if self.snr_b_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage("SNR_b grid must be strictly ascending".into()));
        }
        if self.gh_order == 0 {
            return Err(CliError::Usage("quadrature order must be at least 1".into()));
        }
        if self.mc_samples == 1 {
            return Err(CliError::Usage("Monte-Carlo needs at least two samples".into()));
        }
        if self.draws == 0 {
            return Err(CliError::Usage("at least one channel draw is required".into()));
        }
        if self.group_size == 0 {
            return Err(CliError::Usage("group size must be positive".into()));
        }
        Constellation::qam(self.modulation)?;
        self.optimizer.validate()?;
        Ok(())
    }

    pub fn ensemble(&self) -> CliResult<ChannelEnsemble> {
        if let Some(path) = &self.channel_file {
            return Ok(ChannelEnsemble::fixed(load_channel(path)?, 1));
        }
        parse_channel_spec(&self.channel, self.draws, self.seed)
    }
}

/// `a:b:step` (inclusive of `b`) or a comma-separated list.
pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = |m: &str| CliError::Usage(format!("bad SNR_b grid `{text}`: {m}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + i as f64 * step).collect());
    }
    text.split(',').map(num).collect()
}

fn parse_dims(text: &str) -> CliResult<(usize, usize)> {
    let (r, t) = text
        .split_once('x')
        .ok_or_else(|| CliError::Usage(format!("bad dimensions `{text}`; expected NRxNT")))?;
    let p = |s: &str| {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| CliError::Usage(format!("bad dimensions `{text}`")))
    };
    Ok((p(r)?, p(t)?))
}

pub fn parse_channel_spec(spec: &str, draws: usize, seed: u64) -> CliResult<ChannelEnsemble> {
    let parts: Vec<&str> = spec.split(':').collect();
    let rho = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad correlation `{s}` in `{spec}`")))
    };
    match parts.as_slice() {
        [name] => Ok(ChannelEnsemble::fixed(builtin_by_name(name)?, 1)),
        ["gaussian", dims] => {
            let (n_r, n_t) = parse_dims(dims)?;
            Ok(ChannelEnsemble::gaussian(n_r, n_t, draws, seed))
        }
        ["kronecker", dims, rho_r, rho_t] => {
            let (n_r, n_t) = parse_dims(dims)?;
            let (rho_r, rho_t) = (rho(rho_r)?, rho(rho_t)?);
            for r in [rho_r, rho_t] {
                if !(0.0..1.0).contains(&r) {
                    return Err(CliError::Usage(format!("correlation {r} outside [0, 1)")));
                }
            }
            Ok(ChannelEnsemble::kronecker(n_r, n_t, rho_r, rho_t, draws, seed))
        }
        _ => Err(CliError::Usage(format!("unknown channel `{spec}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use precoder_core::channels::EnsembleKind;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("-10:20:2").unwrap().len(), 16);
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("-4, 0,4").unwrap(), vec![-4.0, 0.0, 4.0]);
        assert_eq!(parse_grid("7").unwrap(), vec![7.0]);
        for bad in ["", "a", "0:1", "0:1:0", "3:1:1", "0:1:-1"] {
            assert!(matches!(parse_grid(bad), Err(CliError::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn channel_specs() {
        assert_eq!(parse_channel_spec("h2", 5, 1).unwrap().draws, 1);
        let e = parse_channel_spec("kronecker:20x20:0.9:0.5", 5, 3).unwrap();
        assert_eq!(e.draws, 5);
        assert!(matches!(e.kind, EnsembleKind::Kronecker { n_r: 20, n_t: 20, .. }));
        assert!(matches!(
            parse_channel_spec("gaussian:10x4", 2, 1).unwrap().kind,
            EnsembleKind::Gaussian { n_r: 10, n_t: 4 }
        ));
        for bad in ["h9", "gaussian:4", "gaussian:0x2", "kronecker:2x2:1.0:0", "kronecker:2x2:x:0"] {
            assert!(parse_channel_spec(bad, 1, 1).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_defaults_and_validation() {
        let c: SweepConfig = serde_json::from_str(r#"{"modulation": 32, "snr_b_db": [0, 5]}"#).unwrap();
        assert_eq!(c.modulation, 32);
        assert_eq!(c.gh_order, 3);
        c.validate().unwrap();
        assert!(serde_json::from_str::<SweepConfig>(r#"{"modulaton": 32}"#).is_err());
        let c = SweepConfig {
            snr_b_db: vec![1.0, 1.0],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = SweepConfig {
            modulation: 8,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(CliError::Usage(_))));
        let c = SweepConfig {
            gh_order: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
