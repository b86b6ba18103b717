use std::io::Write;

use super::network::NetworkRun;
use crate::error::Result;

pub const RUN_CSV_HEADER: [&str; 7] = ["run", "layer", "unit", "f", "g", "h", "nu"];

/// Writes runs as one row per `(run, layer, unit)`; `h` is empty at layer 0.
pub fn write_runs_csv<W: Write>(runs: &[NetworkRun], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_CSV_HEADER)?;
    for run in runs {
        for (l, state) in run.layers.iter().enumerate() {
            for u in 0..state.nu.len() {
                let h = state.h.as_ref().map_or(String::new(), |h| h[u].to_string());
                w.write_record([
                    run.index.to_string(),
                    l.to_string(),
                    u.to_string(),
                    state.f[u].to_string(),
                    state.g[u].to_string(),
                    h,
                    state.nu[u].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_runs_json<W: Write>(runs: &[NetworkRun], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, runs)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdnn::{simulate, NetworkSpec};

    #[test]
    fn csv_shape() {
        let runs = simulate(&NetworkSpec::reference(), 0, 3).unwrap();
        let mut buf = Vec::new();
        write_runs_csv(&runs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "run,layer,unit,f,g,h,nu");
        assert_eq!(lines.len(), 1 + 3 * (2 + 4 * 3));
        assert!(lines[1].starts_with("0,0,0,") && lines[1].contains(",,"));
        let mut json = Vec::new();
        write_runs_json(&runs, &mut json).unwrap();
        let back: Vec<NetworkRun> = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, runs);
    }
}
