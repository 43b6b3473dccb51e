//! Configuration-driven experiments on weighted isoperimetric problems in
//! convex cones. The `coniso` binary is a thin wrapper over this crate.

pub mod commands;
pub mod config;
pub mod repro;
pub mod report;

/// Caps the global worker pool at `CONISO_THREADS` when it is set.
pub fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CONISO_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("CONISO_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            anyhow::bail!("CONISO_THREADS must be a positive integer, got 0");
        }
        // A pool may already exist when embedded; the first setting wins.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
