use std::path::Path;

use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VERDICT: i32 = 3;

pub const TOOL: &str = "rieszcap";

/// Envelope written by every subcommand.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report<C, P> {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub config: C,
    /// Seconds.
    pub wall_time: f64,
    pub payload: P,
}

pub type RawReport = Report<serde_json::Value, serde_json::Value>;

impl<C: Serialize, P: Serialize> Report<C, P> {
    pub fn new(subcommand: &str, seed: u64, config: C, wall_time: f64, payload: P) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            seed,
            config,
            wall_time,
            payload,
        }
    }
}

pub fn read_report(path: &Path) -> anyhow::Result<RawReport> {
    let text = rieszcap::io::read_text(path)?;
    let r: RawReport = serde_json::from_str(&text).map_err(|e| rieszcap::Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if r.tool != TOOL {
        anyhow::bail!("{} is not a {TOOL} report", path.display());
    }
    Ok(r)
}

/// Exit status for a failed run: 2 for solver failures, 3 for refusals,
/// 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<rieszcap::Error>() {
        Some(e) if e.is_solver_failure() => EXIT_SOLVER,
        Some(rieszcap::Error::NoCertificate { .. }) => EXIT_VERDICT,
        _ => EXIT_DOMAIN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        let solver = anyhow::Error::new(rieszcap::Error::NotConverged { iterations: 10, gap: 1.0, objective: 2.0 });
        let refusal = anyhow::Error::new(rieszcap::Error::NoCertificate { exponent: 1.0 });
        let domain = anyhow::Error::new(rieszcap::Error::Domain("outside".into()));
        assert_eq!(exit_code(&solver), EXIT_SOLVER);
        assert_eq!(exit_code(&refusal), EXIT_VERDICT);
        assert_eq!(exit_code(&domain), EXIT_DOMAIN);
        assert_eq!(exit_code(&anyhow::anyhow!("plain")), EXIT_DOMAIN);
    }

    #[test]
    fn report_round_trip_and_tool_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let r = Report::new("conformal", 3, serde_json::json!({"n": 4}), 0.5, serde_json::json!([1, 2]));
        std::fs::write(&path, serde_json::to_string(&r).unwrap()).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back.subcommand, "conformal");
        assert_eq!(back.seed, 3);
        assert_eq!(back.payload, serde_json::json!([1, 2]));

        let other = serde_json::to_string(&r).unwrap().replace("\"rieszcap\"", "\"other\"");
        std::fs::write(&path, other).unwrap();
        assert!(read_report(&path).is_err());
    }
}
