//! Writes the built-in models to `fixtures/*.model`.

use std::path::PathBuf;

use trivar::io::{write_model, ModelFile};

fn main() -> trivar::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("fixtures"));
    std::fs::create_dir_all(&dir)?;
    for (name, tt) in trivar::fixtures::named() {
        let mut m = ModelFile::default();
        m.add_model(name, &tt);
        write_model(dir.join(format!("{name}.model")), &m)?;
    }
    Ok(())
}
