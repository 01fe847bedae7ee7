use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wheelgen_core::config::RunConfig;
use wheelgen_core::design::{generate_reference, read_pgm, sample_reference_spec, write_pgm};
use wheelgen_core::store::{
    load_manifest, save_manifest, RefEntry, RefManifest, Split, StoreWriter, SENTINEL_IDX,
};
use wheelgen_core::topopt::Optimizer;

use crate::manifest::write_run_manifest;

pub fn gen_refs(
    config: &RunConfig,
    count: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let count = count.unwrap_or(config.ref_count);
    let seed = seed.unwrap_or(config.seed);
    if count == 0 {
        bail!(wheelgen_core::Error::Config("--count must be positive".into()));
    }
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    let mask = config.mask()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(count);
    let n_train = ((count as f64) * config.train_fraction).round().max(1.0) as usize;
    for id in 0..count as u32 {
        // Resample until the spec rasterizes (merged-spoke specs are rare
        // but possible at extreme widths).
        let (spec, img) = loop {
            let spec = sample_reference_spec(&mut rng);
            match generate_reference(&spec, &mask) {
                Ok(img) => break (spec, img),
                Err(_) => continue,
            }
        };
        write_pgm(&img, &out.join(format!("ref_{id:04}.pgm")))?;
        entries.push(RefEntry {
            id,
            spec,
            split: if (id as usize) < n_train {
                Split::Train
            } else {
                Split::Test
            },
        });
    }
    save_manifest(
        &out.join("refs.manifest"),
        &RefManifest {
            g: config.g,
            seed,
            entries,
        },
    )?;
    write_run_manifest(out, config, "gen-refs")?;
    println!(
        "wrote {count} references ({n_train} train / {} test) to {}",
        count - n_train,
        out.display()
    );
    Ok(())
}

pub fn gen_dataset(
    config: &RunConfig,
    refs: &Path,
    out: &Path,
    parallel: Option<usize>,
    dump_k: Option<&Path>,
) -> Result<()> {
    if let Some(k) = parallel {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .ok();
    }
    let manifest = load_manifest(&refs.join("refs.manifest"))
        .with_context(|| format!("reading manifest under {}", refs.display()))?;
    if manifest.g != config.g {
        bail!(wheelgen_core::Error::Config(format!(
            "manifest resolution {} vs config g = {}",
            manifest.g, config.g
        )));
    }
    let mask = config.mask()?;
    let optimizer = Optimizer::new(mask.clone(), config.topopt)?;

    if let Some(dump) = dump_k {
        let entry = manifest
            .entries
            .first()
            .context("manifest has no references")?;
        let img = read_pgm(&refs.join(format!("ref_{:04}.pgm", entry.id)), mask.clone())?;
        let f = std::fs::File::create(dump)?;
        wheelgen_core::fem::dump_stiffness_triplets(
            optimizer.mesh(),
            &img,
            config.topopt.penal,
            config.topopt.e_min,
            std::io::BufWriter::new(f),
        )?;
        println!("dumped stiffness triplets to {}", dump.display());
        return Ok(());
    }

    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut writer = StoreWriter::open_or_create(out, config.g)?;
    let total = manifest.entries.len();
    let mut done_before = 0usize;
    let t0 = Instant::now();
    for (k, entry) in manifest.entries.iter().enumerate() {
        if writer.is_complete(entry.id) {
            done_before += 1;
            continue;
        }
        let img = read_pgm(&refs.join(format!("ref_{:04}.pgm", entry.id)), mask.clone())?;
        let t = Instant::now();
        let grid = optimizer.precompute_grid(&img);
        let ref_compliance = optimizer.compliance_of(&img, 0.0).unwrap_or(f64::NAN);
        writer.append(
            entry.id,
            SENTINEL_IDX,
            SENTINEL_IDX,
            ref_compliance as f32,
            &img,
        )?;
        let mut failures = 0usize;
        for i in 0..11 {
            for j in 0..11 {
                match grid.cell(i, j) {
                    Ok(cell) => {
                        writer.append(entry.id, i as u8, j as u8, cell.compliance as f32, &cell.design)?;
                    }
                    Err(e) => {
                        failures += 1;
                        eprintln!("reference {} cell ({i},{j}) failed: {e}", entry.id);
                        // Keep the store complete: fall back to the
                        // reference image with NaN compliance.
                        writer.append(entry.id, i as u8, j as u8, f32::NAN, &img)?;
                    }
                }
            }
        }
        println!(
            "[{}/{total}] reference {} done in {:.1}s{} (elapsed {:.0}s)",
            k + 1,
            entry.id,
            t.elapsed().as_secs_f64(),
            if failures > 0 {
                format!(", {failures} cell failures")
            } else {
                String::new()
            },
            t0.elapsed().as_secs_f64()
        );
    }
    if done_before > 0 {
        println!("skipped {done_before} already-complete references");
    }
    writer.finalize()?;
    write_run_manifest(
        out.parent().unwrap_or_else(|| Path::new(".")),
        config,
        "gen-dataset",
    )?;
    Ok(())
}

pub fn train_surrogate(
    _config: &RunConfig,
    _refs: &Path,
    _dataset: &Path,
    _out: &Path,
    _augment: bool,
) -> Result<()> {
    bail!("train-surrogate: surrogate module wiring pending")
}

pub fn eval_surrogate(
    _config: &RunConfig,
    _refs: &Path,
    _dataset: &Path,
    _checkpoint: &Path,
    _out: &Path,
) -> Result<()> {
    bail!("eval-surrogate: surrogate module wiring pending")
}

pub fn train_agent(
    _config: &RunConfig,
    _refs: &Path,
    _dataset: &Path,
    _surrogate: Option<&Path>,
    _out: &Path,
) -> Result<()> {
    bail!("train-agent: agent module wiring pending")
}

pub fn eval_strategies(
    _config: &RunConfig,
    _refs: &Path,
    _dataset: &Path,
    _agent: Option<&Path>,
    _out: &Path,
) -> Result<()> {
    bail!("eval-strategies: agent module wiring pending")
}

pub fn ablate_surrogate_error(
    _config: &RunConfig,
    _refs: &Path,
    _dataset: &Path,
    _surrogate_dir: &Path,
    _out: &Path,
) -> Result<()> {
    bail!("ablate-surrogate-error: agent module wiring pending")
}
