//! Artifact plumbing: one `Run` per subcommand invocation, collecting CSV
//! tables and raw field dumps under the output directory and closing with a
//! JSON manifest.  CSVs carry only seeded, deterministic numbers; wall time
//! and versions live in the manifest so reruns stay byte-comparable.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use sha2::{Digest, Sha256};

use nullwave::config::RunConfig;
use nullwave::{Field2, Frame, Result};

pub struct Run {
    dir: PathBuf,
    command: &'static str,
    started: Instant,
    names: Vec<String>,
    config_sha256: String,
    base_seed: Option<u64>,
    workers: usize,
}

impl Run {
    /// Creates the output directory, snapshots the effective configuration
    /// to `config.json`, and starts the wall clock.
    pub fn begin(
        dir: &Path,
        command: &'static str,
        cfg: &RunConfig,
        workers: usize,
    ) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let text = cfg.to_json();
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let config_sha256 = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        fs::write(dir.join("config.json"), &text)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            started: Instant::now(),
            names: vec!["config.json".into()],
            config_sha256,
            base_seed: cfg.base_seed,
            workers,
        })
    }

    pub fn write_csv(&mut self, name: &str, content: &str) -> Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.names.push(name.into());
        Ok(())
    }

    /// Raw dump of a field: complex doubles, little-endian, re then im,
    /// components in order, rows in the first index.  A JSON header beside
    /// the payload records the geometry.
    pub fn write_field(&mut self, stem: &str, f: &Field2<f64>) -> Result<()> {
        let grid = f.grid();
        let n = grid.n();
        let mut bytes = Vec::with_capacity(f.num_comps() * n * n * 16);
        for c in 0..f.num_comps() {
            for i in 0..n {
                for j in 0..n {
                    let v = f.at(c, i, j);
                    bytes.extend_from_slice(&v.re.to_le_bytes());
                    bytes.extend_from_slice(&v.im.to_le_bytes());
                }
            }
        }
        let payload = format!("{stem}.f64le");
        fs::write(self.dir.join(&payload), &bytes)?;
        let header = json!({
            "payload": payload,
            "n": n,
            "half_width": grid.half_width(),
            "frame": match f.frame() {
                Frame::Null => "null",
                Frame::Cartesian => "cartesian",
            },
            "components": f.num_comps(),
            "order": "component-major, then row-major over (first, second) axis",
            "encoding": "complex f64 little-endian, re then im",
        });
        let header_name = format!("{stem}.json");
        fs::write(
            self.dir.join(&header_name),
            serde_json::to_string_pretty(&header)? + "\n",
        )?;
        self.names.push(payload);
        self.names.push(header_name);
        Ok(())
    }

    /// Writes `manifest.json`: everything needed to rerun and audit the
    /// experiment (command, versions, config hash, seed, worker count,
    /// elapsed wall time, artifact list).
    pub fn finish(self) -> Result<()> {
        let manifest = json!({
            "command": self.command,
            "driver_version": env!("CARGO_PKG_VERSION"),
            "core_version": nullwave::VERSION,
            "config_sha256": self.config_sha256,
            "base_seed": self.base_seed,
            "workers": self.workers,
            "wall_seconds": self.started.elapsed().as_secs_f64(),
            "artifacts": self.names,
        });
        fs::write(
            self.dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)? + "\n",
        )?;
        Ok(())
    }
}
