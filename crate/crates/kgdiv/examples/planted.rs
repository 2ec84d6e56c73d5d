//! Writes a planted alignment dataset directory.
//!
//! cargo run --release -p kgdiv --example planted -- DIR [ENTITIES] [SEED] [EDGE_NOISE]

use std::path::PathBuf;

use kgdiv::synthetic::Planted;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir =
        PathBuf::from(args.next().ok_or_else(|| anyhow::anyhow!("usage: planted DIR [ENTITIES] [SEED] [EDGE_NOISE]"))?);
    let mut p = Planted::default();
    if let Some(n) = args.next() {
        p.entities = n.parse()?;
    }
    if let Some(s) = args.next() {
        p.rng_seed = s.parse()?;
    }
    if let Some(noise) = args.next() {
        p.edge_noise = noise.parse()?;
    }
    let data = p.generate();
    kgdiv::io::write_dataset(&dir, &data)?;
    println!(
        "{} entities per side, {} seeds, {} test pairs -> {}",
        p.entities,
        data.seeds.len(),
        data.test.len(),
        dir.display()
    );
    Ok(())
}
