// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! Writes the bundled scenarios as JSON files.
//!
//! ```text
//! cargo run -p osqec-core --example write_scenarios -- scenarios
//! ```

use std::fs;
use std::path::PathBuf;

use osqec_core::instances::{bundled, repetition_code, swap_witness};
use osqec_core::io::{channel_to_json, code_to_json};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "scenarios".into()));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("rep3.code.json"), code_to_json(&repetition_code()))?;
    fs::write(dir.join("qubit.code.json"), code_to_json(&swap_witness().1))?;
    for s in bundled() {
        let text = channel_to_json(&s.channel, s.perturbation.as_deref());
        fs::write(dir.join(format!("{}.channel.json", s.name)), text)?;
        println!("{} {}", s.name, s.code_name());
    }
    Ok(())
}
