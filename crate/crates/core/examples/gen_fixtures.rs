//! Regenerates the bundled fixture tree: `cargo run --example gen_fixtures -- fixtures`.

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(|| PathBuf::from("fixtures"), PathBuf::from);
    spaceport_core::synth::write_fixtures(&dir)?;
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}
