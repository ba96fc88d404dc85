use std::collections::BTreeMap;

use anyhow::Result;

use super::files::{ensure_dir, write_atomic, write_meta};
use super::{OutputFormat, SynthArgs};
use crate::graph::write_edge_list;
use crate::ingest::mrt::MrtWriter;
use crate::ingest::text::{write_snapshots, write_updates};
use crate::synth::{generate, write_manifest_csv, SynthConfig};

/// Writes the update stream, the end-of-run table dump, `manifest.csv` and
/// `truth_edges.txt`, plus the run window in `scenario.meta`.
pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        nodes: args.nodes,
        alpha: args.alpha,
        backup_fraction: args.backup_fraction,
        episodes: args.episodes,
        peers: args.peers,
        seed: args.seed,
        t_start: args.t_start,
        duration: args.duration,
    };
    let s = generate(&cfg)?;
    let snapshot = s.snapshot(s.t_end);
    ensure_dir(&args.out)?;
    match args.format {
        OutputFormat::Text => {
            write_atomic(&args.out.join("updates.txt"), |w| write_updates(w, &s.stream))?;
            write_atomic(&args.out.join("btd.txt"), |w| write_snapshots(w, &snapshot))?;
        }
        OutputFormat::Mrt => {
            write_atomic(&args.out.join("updates.mrt"), |w| {
                let mut mrt = MrtWriter::new(w);
                s.stream.iter().try_for_each(|r| mrt.write_update(r))
            })?;
            write_atomic(&args.out.join("btd.mrt"), |w| MrtWriter::new(w).write_table_dump_v2(s.t_end, &snapshot))?;
        }
    }
    write_atomic(&args.out.join("manifest.csv"), |w| write_manifest_csv(w, &s))?;
    write_atomic(&args.out.join("truth_edges.txt"), |w| write_edge_list(w, &s.truth_graph))?;
    let meta: BTreeMap<&str, String> = [
        ("t_start", s.t_start.to_string()),
        ("t_end", s.t_end.to_string()),
        ("converged_links", s.converged_links.len().to_string()),
        ("backup_links", s.backup_links.len().to_string()),
        ("episodes", s.schedule.len().to_string()),
        ("records", s.stream.len().to_string()),
    ]
    .into_iter()
    .collect();
    write_meta(&args.out.join("scenario.meta"), &meta)
}
